//! Level-set truncations of a bounded vector field and their energies on
//! shrinking parabolic cylinders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{gradient, GridField, GridSpec};
use crate::localization::{smooth_step, LocalFrame};
use crate::series::{window_weights, FieldSeries};

/// `c_k = 1 − 2^{−k}`.
pub fn energy_level(k: u32) -> f64 {
    1.0 - 0.5f64.powi(k as i32)
}

/// Pointwise `|v|`, `∇|v|` and `|∇v|²` of one frame.
#[derive(Clone, Debug)]
pub struct Magnitudes {
    pub abs: GridField,
    /// `(v·∂_j v)/|v|`, zero where `v = 0`.
    pub grad_abs: GridField,
    pub grad_sq: GridField,
    gradient: GridField,
}

impl Magnitudes {
    pub fn new(v: &GridField) -> Result<Self> {
        if v.components() != 3 {
            return Err(Error::ComponentMismatch { expected: 3, found: v.components() });
        }
        let spec = *v.spec();
        let m = spec.points();
        let grad = gradient(v)?;
        let abs = v.magnitude();
        let mut grad_abs = GridField::zeros(spec, 3);
        let mut grad_sq = GridField::zeros(spec, 1);
        let (vd, gd) = (v.data(), grad.data());
        for i in 0..m {
            let a = abs.data()[i];
            let mut sq = 0.0;
            for c in 0..9 {
                sq += gd[c * m + i].powi(2);
            }
            grad_sq.data_mut()[i] = sq;
            if a > 0.0 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|c| vd[c * m + i] * gd[(c * 3 + j) * m + i]).sum();
                    grad_abs.data_mut()[j * m + i] = dot / a;
                }
            }
        }
        Ok(Self { abs: abs.with_time(v.time()), grad_abs, grad_sq, gradient: grad })
    }

    pub fn spec(&self) -> &GridSpec {
        self.abs.spec()
    }
}

/// Truncation of one frame at level `c_k`.
#[derive(Clone, Debug)]
pub struct TruncationLevel {
    pub k: u32,
    pub level: f64,
    /// `(|v| − c_k)₊`.
    pub vk: GridField,
    /// `v_k / |v|`, zero where `v = 0`.
    pub beta: GridField,
    pub alpha: GridField,
    pub indicator: Vec<bool>,
    /// `d_k² = 1_k (α_k |∇|v||² + β_k |∇v|²)`.
    pub d: GridField,
    /// `∇v_k = 1_k ∇|v|`.
    pub grad_vk: GridField,
}

pub fn truncate(mags: &Magnitudes, k: u32) -> TruncationLevel {
    let spec = *mags.spec();
    let m = spec.points();
    let level = energy_level(k);
    let mut vk = GridField::zeros(spec, 1);
    let mut beta = GridField::zeros(spec, 1);
    let mut alpha = GridField::zeros(spec, 1);
    let mut d = GridField::zeros(spec, 1);
    let mut grad_vk = GridField::zeros(spec, 3);
    let mut indicator = vec![false; m];
    let ga = mags.grad_abs.data();
    for i in 0..m {
        let a = mags.abs.data()[i];
        let excess = (a - level).max(0.0);
        let b = if a > 0.0 { excess / a } else { 0.0 };
        vk.data_mut()[i] = excess;
        beta.data_mut()[i] = b;
        alpha.data_mut()[i] = 1.0 - b;
        if excess > 0.0 {
            indicator[i] = true;
            let g2: f64 = (0..3).map(|j| ga[j * m + i].powi(2)).sum();
            d.data_mut()[i] = ((1.0 - b) * g2 + b * mags.grad_sq.data()[i]).sqrt();
            for j in 0..3 {
                grad_vk.data_mut()[j * m + i] = ga[j * m + i];
            }
        }
    }
    TruncationLevel { k, level, vk, beta, alpha, indicator, d, grad_vk }
}

/// `max(|∇v_k| − d_k)` over the grid.
pub fn gradient_excess(level: &TruncationLevel) -> f64 {
    let g = level.grad_vk.magnitude();
    g.data().iter().zip(level.d.data()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max)
}

/// `Q_r = (t_end − (rℓ)², t_end] × B_{rℓ}(center)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub start: f64,
    pub end: f64,
    /// Radius in frame units.
    pub radius: f64,
}

/// Nested cylinders with radii decreasing to `½` at rate `8^{−k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingCylinders {
    pub frame: LocalFrame,
    pub end_time: f64,
    /// Steepness of the cut-off transitions.
    pub sharpness: f64,
}

impl ShrinkingCylinders {
    pub fn new(frame: LocalFrame, end_time: f64) -> Self {
        Self { frame, end_time, sharpness: 1.0 }
    }

    pub fn flat_radius(k: u32) -> f64 {
        0.5 * (1.0 + 8f64.powi(-(k as i32)))
    }

    pub fn natural_radius(k: u32) -> f64 {
        0.5 * (1.0 + 2.0 * 8f64.powi(-(k as i32)))
    }

    pub fn sharp_radius(k: u32) -> f64 {
        0.5 * (1.0 + 4.0 * 8f64.powi(-(k as i32)))
    }

    pub fn cylinder(&self, r: f64) -> Cylinder {
        let l = self.frame.length;
        Cylinder { start: self.end_time - (r * l).powi(2), end: self.end_time, radius: r }
    }

    pub fn flat(&self, k: u32) -> Cylinder {
        self.cylinder(Self::flat_radius(k))
    }

    /// Space-time cut-off equal to 1 on `Q_inner` and supported in `Q_outer`, at time `t`.
    pub fn cutoff(&self, spec: &GridSpec, inner: f64, outer: f64, t: f64) -> GridField {
        let l = self.frame.length;
        let time = {
            let s = ((self.end_time - t).max(0.0).sqrt() / l - inner) / (outer - inner);
            if t > self.end_time {
                0.0
            } else {
                smooth_step(s, self.sharpness)
            }
        };
        let radii = self.frame.radii(spec);
        let data = radii.iter().map(|&r| time * smooth_step((r - inner) / (outer - inner), self.sharpness)).collect();
        GridField::new(*spec, 1, data).expect("scalar layout").with_time(t)
    }

    /// `1_{Q♭_k} ≤ ρ_k ≤ 1_{Q♮_k}`.
    pub fn rho(&self, spec: &GridSpec, k: u32, t: f64) -> GridField {
        self.cutoff(spec, Self::flat_radius(k), Self::natural_radius(k), t)
    }

    /// `1_{Q♯_k} ≤ ρ♯_k ≤ 1_{Q♭_{k−1}}`.
    pub fn rho_sharp(&self, spec: &GridSpec, k: u32, t: f64) -> GridField {
        self.cutoff(spec, Self::sharp_radius(k), Self::flat_radius(k.saturating_sub(1)), t)
    }
}

/// Frames of a cylinder with their time weights and the spatial mask.
struct Restriction {
    frames: Vec<usize>,
    weights: Vec<f64>,
    mask: Vec<bool>,
    cell: f64,
}

/// Truncation diagnostics of a velocity-like series on shrinking cylinders.
pub struct DeGiorgi {
    series: FieldSeries,
    mags: Vec<Magnitudes>,
    pub cylinders: ShrinkingCylinders,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub k: u32,
    pub level: f64,
    /// `sup_t ‖v_k‖²_{L²(B♭_k)}`.
    pub sup_l2: f64,
    /// `‖d_k‖²_{L²(Q♭_k)}`.
    pub dissipation: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.sup_l2 + self.dissipation
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub k: u32,
    pub previous_energy: f64,
    /// `max(α_k|v| − c_k)`, at most 0.
    pub alpha_excess: f64,
    /// `‖β_k v‖²` in `L^∞L² ∩ L²Ḣ¹` on `Q♭_{k−1}`.
    pub beta_energy: f64,
    /// `max |∇(β_k v)| / d_k` on `Ω_k`.
    pub beta_gradient_ratio: f64,
    /// `sup_t |Ω_k(t) ∩ B♭_{k−1}|`.
    pub indicator_linf_l2: f64,
    /// `∫ |Ω_k(t) ∩ B♭_{k−1}|^{1/3} dt`.
    pub indicator_l2_l6: f64,
}

impl TruncationReport {
    pub fn alpha_holds(&self) -> bool {
        self.alpha_excess <= 1e-12
    }

    /// `9 U_{k−1} − ‖β_k v‖²`.
    pub fn beta_margin(&self) -> f64 {
        9.0 * self.previous_energy - self.beta_energy
    }

    /// `4^k U_{k−1} − ‖1_k‖²_{L^∞L²}`.
    pub fn indicator_margin(&self) -> f64 {
        4f64.powi(self.k as i32) * self.previous_energy - self.indicator_linf_l2
    }

    /// `‖1_k‖²_{L^∞L² ∩ L²L⁶} / U_{k−1}`.
    pub fn realized_constant(&self) -> f64 {
        (self.indicator_linf_l2 + self.indicator_l2_l6) / self.previous_energy
    }

    pub fn holds(&self) -> bool {
        let tol = 1e-12 * self.previous_energy.max(1e-300);
        self.alpha_holds() && self.beta_margin() >= -tol && self.indicator_margin() >= -tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearizeReport {
    pub k: u32,
    pub time_exponent: f64,
    pub space_exponent: f64,
    /// `∫∫_{Q♭_{k−1}} |β_k v|^σ |f|`.
    pub lhs: f64,
    /// `‖f‖_{L^pL^q} U_{k−1}^{γ/2}`.
    pub rhs: f64,
    /// `‖f‖ ‖β_k v‖^σ ‖1_k‖^{γ−σ}` in the interpolation norms.
    pub holder_bound: f64,
}

impl NonlinearizeReport {
    pub fn realized_constant(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            0.0
        }
    }

    pub fn holder_holds(&self) -> bool {
        self.lhs <= self.holder_bound * (1.0 + 1e-10) + 1e-300
    }
}

/// Weighted `L^{pt}_t L^{qs}_x` norm of per-frame samples; infinite exponents take maxima.
fn mixed_norm(rows: &[Vec<f64>], weights: &[f64], cell: f64, pt: f64, qs: f64) -> f64 {
    let spatial: Vec<f64> = rows
        .iter()
        .map(|r| {
            if qs.is_infinite() {
                r.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
            } else {
                (r.iter().map(|v| v.abs().powf(qs)).sum::<f64>() * cell).powf(1.0 / qs)
            }
        })
        .collect();
    if pt.is_infinite() {
        spatial.iter().zip(weights).filter(|(_, &w)| w > 0.0).fold(0.0, |a: f64, (s, _)| a.max(*s))
    } else {
        spatial.iter().zip(weights).map(|(s, w)| w * s.powf(pt)).sum::<f64>().powf(1.0 / pt)
    }
}

impl DeGiorgi {
    pub fn new(series: FieldSeries, cylinders: ShrinkingCylinders) -> Result<Self> {
        let outer = cylinders.flat(0);
        if series.start() > outer.start + 1e-9 || series.end() < outer.end - 1e-9 {
            return Err(Error::Coverage(format!(
                "series on [{}, {}] does not cover [{}, {}]",
                series.start(),
                series.end(),
                outer.start,
                outer.end
            )));
        }
        let spec = *series.spec();
        if cylinders.frame.length >= 0.5 * spec.length {
            return Err(Error::Coverage("the unit cylinder does not fit in the periodic cell".into()));
        }
        let mags = series.frames().iter().map(Magnitudes::new).collect::<Result<Vec<_>>>()?;
        Ok(Self { series, mags, cylinders })
    }

    pub fn series(&self) -> &FieldSeries {
        &self.series
    }

    pub fn magnitudes(&self, i: usize) -> &Magnitudes {
        &self.mags[i]
    }

    fn restrict(&self, cyl: Cylinder) -> Restriction {
        let times = self.series.times();
        let all = window_weights(&times, cyl.start, cyl.end);
        let frames: Vec<usize> =
            (0..times.len()).filter(|&i| times[i] >= cyl.start - 1e-12 && times[i] <= cyl.end + 1e-12).collect();
        let spec = self.series.spec();
        Restriction {
            weights: frames.iter().map(|&i| all[i]).collect(),
            frames,
            mask: self.cylinders.frame.ball(spec, cyl.radius),
            cell: spec.cell_volume(),
        }
    }

    fn masked(r: &Restriction, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&r.mask).filter(|(_, &m)| m).map(|(v, _)| *v).collect()
    }

    /// `U_k` split into its two parts.
    pub fn energy(&self, k: u32) -> Energy {
        let r = self.restrict(self.cylinders.flat(k));
        let (mut sup, mut diss) = (0.0f64, 0.0);
        for (&i, &w) in r.frames.iter().zip(&r.weights) {
            let level = truncate(&self.mags[i], k);
            let l2: f64 = Self::masked(&r, level.vk.data()).iter().map(|v| v * v).sum::<f64>() * r.cell;
            sup = sup.max(l2);
            diss += w * Self::masked(&r, level.d.data()).iter().map(|v| v * v).sum::<f64>() * r.cell;
        }
        Energy { k, level: energy_level(k), sup_l2: sup, dissipation: diss }
    }

    pub fn energies(&self, levels: std::ops::RangeInclusive<u32>) -> Vec<Energy> {
        levels.map(|k| self.energy(k)).collect()
    }

    /// Largest `|∇v_k| − d_k` over all frames.
    pub fn gradient_excess(&self, k: u32) -> f64 {
        self.mags.iter().map(|m| gradient_excess(&truncate(m, k))).fold(f64::NEG_INFINITY, f64::max)
    }

    /// The three truncation estimates at level `k ≥ 1` on `Q♭_{k−1}`.
    pub fn truncation_lemma_check(&self, k: u32) -> Result<TruncationReport> {
        if k == 0 {
            return Err(Error::InvalidArgument("the truncation estimates need k ≥ 1".into()));
        }
        let previous_energy = self.energy(k - 1).total();
        let r = self.restrict(self.cylinders.flat(k - 1));
        let spec = *self.series.spec();
        let m = spec.points();
        let (mut alpha_excess, mut sup_l2, mut grad_l2, mut ratio) = (f64::NEG_INFINITY, 0.0f64, 0.0, 0.0f64);
        let (mut ind_sup, mut ind_l6) = (0.0f64, 0.0);
        for (&i, &w) in r.frames.iter().zip(&r.weights) {
            let mags = &self.mags[i];
            let level = truncate(mags, k);
            let v = self.series.frame(i).data();
            let (gd, ga) = (mags.gradient.data(), mags.grad_abs.data());
            let (mut l2, mut g2, mut count) = (0.0, 0.0, 0usize);
            for p in (0..m).filter(|&p| r.mask[p]) {
                let a = mags.abs.data()[p];
                alpha_excess = alpha_excess.max(level.alpha.data()[p] * a - level.level);
                if !level.indicator[p] {
                    continue;
                }
                count += 1;
                let b = level.beta.data()[p];
                let al = 1.0 - b;
                l2 += (b * a).powi(2);
                let mut sq = 0.0;
                for c in 0..3 {
                    let e = v[c * m + p] / a;
                    for j in 0..3 {
                        sq += (b * gd[(c * 3 + j) * m + p] + al * e * ga[j * m + p]).powi(2);
                    }
                }
                g2 += sq;
                let d = level.d.data()[p];
                if d > 0.0 {
                    ratio = ratio.max(sq.sqrt() / d);
                }
            }
            sup_l2 = sup_l2.max(l2 * r.cell);
            grad_l2 += w * g2 * r.cell;
            let measure = count as f64 * r.cell;
            ind_sup = ind_sup.max(measure);
            ind_l6 += w * measure.powf(1.0 / 3.0);
        }
        Ok(TruncationReport {
            k,
            previous_energy,
            alpha_excess,
            beta_energy: sup_l2 + grad_l2,
            beta_gradient_ratio: ratio,
            indicator_linf_l2: ind_sup,
            indicator_l2_l6: ind_l6,
        })
    }

    /// Interpolated Hölder bound for `∫∫ |β_k v|^σ |f|` on `Q♭_{k−1}`.
    pub fn nonlinearize_check(&self, f: &FieldSeries, k: u32, theta: f64, sigma: f64, gamma: f64) -> Result<NonlinearizeReport> {
        if k == 0 {
            return Err(Error::InvalidArgument("the estimate needs k ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&theta) || !(sigma > 0.0 && sigma <= gamma) {
            return Err(Error::InvalidArgument(format!("need 0 ≤ θ ≤ 1 and 0 < σ ≤ γ, got θ={theta}, σ={sigma}, γ={gamma}")));
        }
        let inv_p = 1.0 - gamma * theta / 2.0;
        let inv_q = 1.0 - gamma * (theta / 6.0 + (1.0 - theta) / 2.0);
        if !((0.0..=1.0).contains(&inv_p) && (0.0..=1.0).contains(&inv_q)) {
            return Err(Error::InvalidArgument(format!("exponents 1/p = {inv_p}, 1/q = {inv_q} leave [0, 1]")));
        }
        if f.components() != 1 {
            return Err(Error::ComponentMismatch { expected: 1, found: f.components() });
        }
        if f.spec() != self.series.spec() {
            return Err(Error::DimensionMismatch("f lives on a different grid".into()));
        }
        let recip = |x: f64| if x == 0.0 { f64::INFINITY } else { 1.0 / x };
        let (pt, qs) = (recip(inv_p), recip(inv_q));
        let (ptheta, qtheta) = (recip(theta / 2.0), recip(theta / 6.0 + (1.0 - theta) / 2.0));
        let previous_energy = self.energy(k - 1).total();
        let r = self.restrict(self.cylinders.flat(k - 1));
        let ftimes = f.times();
        let (mut lhs, mut f_rows, mut b_rows, mut i_rows) = (0.0, Vec::new(), Vec::new(), Vec::new());
        for (&i, &w) in r.frames.iter().zip(&r.weights) {
            let t = self.series.frame(i).time();
            let j = ftimes
                .iter()
                .position(|&s| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
                .ok_or_else(|| Error::Coverage(format!("f has no frame at t = {t}")))?;
            let level = truncate(&self.mags[i], k);
            let fv = Self::masked(&r, f.frame(j).data());
            let bv = Self::masked(&r, level.vk.data());
            let iv: Vec<f64> = level.indicator.iter().zip(&r.mask).filter(|(_, &m)| m).map(|(&b, _)| b as u8 as f64).collect();
            lhs += w * fv.iter().zip(&bv).map(|(a, b)| b.powf(sigma) * a.abs()).sum::<f64>() * r.cell;
            f_rows.push(fv);
            b_rows.push(bv);
            i_rows.push(iv);
        }
        let fnorm = mixed_norm(&f_rows, &r.weights, r.cell, pt, qs);
        let bnorm = mixed_norm(&b_rows, &r.weights, r.cell, ptheta, qtheta);
        let inorm = mixed_norm(&i_rows, &r.weights, r.cell, ptheta, qtheta);
        Ok(NonlinearizeReport {
            k,
            time_exponent: pt,
            space_exponent: qs,
            lhs,
            rhs: fnorm * previous_energy.powf(gamma / 2.0),
            holder_bound: fnorm * bnorm.powf(sigma) * inorm.powf(gamma - sigma),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::random::random_band_limited;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_series(value: [f64; 3], spec: GridSpec, times: &[f64]) -> FieldSeries {
        FieldSeries::new(times.iter().map(|&t| GridField::vector_from_fn(spec, |_| value).with_time(t)).collect()).unwrap()
    }

    #[test]
    fn levels_and_radii() {
        assert_eq!((energy_level(0), energy_level(1), energy_level(2)), (0.0, 0.5, 0.75));
        assert_eq!(ShrinkingCylinders::flat_radius(0), 1.0);
        assert_eq!(ShrinkingCylinders::flat_radius(1), 9.0 / 16.0);
        for k in 1..6 {
            assert!(ShrinkingCylinders::flat_radius(k) < ShrinkingCylinders::natural_radius(k));
            assert!(ShrinkingCylinders::natural_radius(k) < ShrinkingCylinders::sharp_radius(k));
            assert!(ShrinkingCylinders::sharp_radius(k) < ShrinkingCylinders::flat_radius(k - 1));
        }
    }

    #[test]
    fn constant_magnitude_arithmetic() {
        let spec = GridSpec::periodic(8).unwrap();
        let v = GridField::vector_from_fn(spec, |_| [0.0, 0.9, 0.0]);
        let l = truncate(&Magnitudes::new(&v).unwrap(), 2);
        assert!((l.vk.data()[5] - 0.15).abs() < 1e-15);
        assert!((l.beta.data()[5] - 1.0 / 6.0).abs() < 1e-15);
        let small = GridField::vector_from_fn(spec, |_| [0.4, 0.0, 0.0]);
        let l1 = truncate(&Magnitudes::new(&small).unwrap(), 1);
        assert!(l1.vk.max_abs() == 0.0 && l1.indicator.iter().all(|b| !b));
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let spec = GridSpec::periodic(16).unwrap();
        let times: Vec<f64> = (0..=4).map(|i| 0.25 * i as f64).collect();
        let dg = DeGiorgi::new(constant_series([0.0; 3], spec, &times), ShrinkingCylinders::new(LocalFrame::default(), 1.0))
            .unwrap();
        assert_eq!(dg.energy(0).total(), 0.0);
        let r = dg.truncation_lemma_check(1).unwrap();
        assert_eq!((r.beta_energy, r.indicator_linf_l2, r.indicator_l2_l6), (0.0, 0.0, 0.0));
        let f = FieldSeries::new(times.iter().map(|&t| GridField::zeros(spec, 1).with_time(t)).collect()).unwrap();
        assert_eq!(dg.nonlinearize_check(&f, 1, 0.5, 1.0, 2.0).unwrap().lhs, 0.0);
    }

    fn random_series(seed: u64, bound: f64) -> FieldSeries {
        let spec = GridSpec::periodic(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_band_limited(spec, 3, 3, &mut rng);
        let b = random_band_limited(spec, 3, 3, &mut rng);
        let times: Vec<f64> = (0..=8).map(|i| 0.125 * i as f64).collect();
        let frames: Vec<GridField> =
            times.iter().map(|&t| a.scale(t.cos()).axpy(t.sin(), &b).unwrap().with_time(t)).collect();
        let sup = frames.iter().map(|f| f.magnitude().max_abs()).fold(0.0, f64::max);
        FieldSeries::new(frames.into_iter().map(|f| f.scale(bound / sup)).collect()).unwrap()
    }

    #[test]
    fn truncation_estimates_on_random_fields() {
        for seed in 0..3 {
            let dg = DeGiorgi::new(random_series(seed, 1.5), ShrinkingCylinders::new(LocalFrame::default(), 1.0)).unwrap();
            for k in 1..=4 {
                assert!(dg.gradient_excess(k) <= 1e-12);
                let r = dg.truncation_lemma_check(k).unwrap();
                assert!(r.holds(), "{r:?}");
                assert!(r.beta_gradient_ratio <= 3.0, "{r:?}");
            }
            let u: Vec<f64> = dg.energies(0..=5).iter().map(Energy::total).collect();
            assert!(u.windows(2).all(|w| w[1] <= w[0]), "{u:?}");
        }
    }

    #[test]
    fn energy_vanishes_above_the_supremum() {
        let dg = DeGiorgi::new(random_series(7, 0.8), ShrinkingCylinders::new(LocalFrame::default(), 1.0)).unwrap();
        // 0.8 < c_3 = 0.875.
        for k in 3..6 {
            assert_eq!(dg.energy(k).total(), 0.0);
        }
        assert!(dg.energy(2).total() >= 0.0);
    }

    #[test]
    fn holder_chain_bounds_the_integral() {
        let dg = DeGiorgi::new(random_series(3, 1.5), ShrinkingCylinders::new(LocalFrame::default(), 1.0)).unwrap();
        let spec = *dg.series().spec();
        let f = FieldSeries::new(
            dg.series().times().iter().map(|&t| GridField::scalar_from_fn(spec, |x| (x[0] + t).cos() + 1.5).with_time(t)).collect(),
        )
        .unwrap();
        for (theta, sigma, gamma) in [(1.0, 2.0, 2.0), (0.5, 1.0, 2.0), (0.0, 1.0, 1.5)] {
            let r = dg.nonlinearize_check(&f, 2, theta, sigma, gamma).unwrap();
            assert!(r.holder_holds(), "{r:?}");
            assert!(r.lhs > 0.0);
        }
        assert!(dg.nonlinearize_check(&f, 2, 1.0, 3.0, 2.0).is_err());
        assert!(dg.nonlinearize_check(&f, 2, 1.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn cutoffs_respect_their_cylinders() {
        let spec = GridSpec::periodic(32).unwrap();
        let cyl = ShrinkingCylinders::new(LocalFrame::default(), 1.0);
        let k = 1;
        let radii = cyl.frame.radii(&spec);
        for t in [1.0, 0.8, 0.5] {
            let rho = cyl.rho(&spec, k, t);
            let inside_time = 1.0 - t <= ShrinkingCylinders::flat_radius(k).powi(2);
            let outside_time = 1.0 - t >= ShrinkingCylinders::natural_radius(k).powi(2);
            for (r, v) in radii.iter().zip(rho.data()) {
                if inside_time && *r < ShrinkingCylinders::flat_radius(k) {
                    assert_eq!(*v, 1.0);
                }
                if outside_time || *r >= ShrinkingCylinders::natural_radius(k) {
                    assert_eq!(*v, 0.0);
                }
                assert!((0.0..=1.0).contains(v));
            }
        }
        let sharp = cyl.rho_sharp(&spec, 2, 1.0);
        for (r, v) in radii.iter().zip(sharp.data()) {
            if *r >= ShrinkingCylinders::flat_radius(1) {
                assert_eq!(*v, 0.0);
            }
        }
    }
}
