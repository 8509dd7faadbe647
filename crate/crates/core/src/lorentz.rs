//! Decreasing rearrangement and Lorentz quasi-norms of discrete measures.
//!
//! Every quantity is exact for the weighted point measure of the samples;
//! the step function `f*` is integrated in closed form.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::GridField;
use crate::series::FieldSeries;

/// Nonnegative values with their cell measures.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSamples {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSamples {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values with {} weights",
                values.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight {w} must be nonnegative")));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("value {v} must be nonnegative")));
        }
        Ok(Self { values, weights })
    }

    /// Samples of `|f|` with uniform cell measure.
    pub fn from_abs(values: &[f64], cell: f64) -> Result<Self> {
        Self::new(values.iter().map(|v| v.abs()).collect(), vec![cell; values.len()])
    }

    /// Pointwise magnitude of a field with weight `h³` per cell.
    pub fn from_field(field: &GridField) -> Self {
        let m = field.magnitude();
        let cell = field.spec().cell_volume();
        Self { weights: vec![cell; m.data().len()], values: m.into_data() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `μ(|f| > α)`.
    pub fn distribution(&self, alpha: f64) -> f64 {
        self.values.iter().zip(&self.weights).filter(|(v, _)| **v > alpha).map(|(_, w)| w).sum()
    }

    pub fn scale(&self, c: f64) -> WeightedSamples {
        Self { values: self.values.iter().map(|v| v * c.abs()).collect(), weights: self.weights.clone() }
    }
}

/// Right-continuous decreasing step function `f*`.
///
/// `f*(λ) = levels[i]` for `cut_points[i-1] ≤ λ < cut_points[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangedFunction {
    pub levels: Vec<f64>,
    pub cut_points: Vec<f64>,
}

impl RearrangedFunction {
    pub fn measure(&self) -> f64 {
        self.cut_points.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let i = self.cut_points.partition_point(|&c| c <= lambda);
        self.levels.get(i).copied().unwrap_or(0.0)
    }

    /// `μ(f* > α)`.
    pub fn distribution(&self, alpha: f64) -> f64 {
        let i = self.levels.partition_point(|&l| l > alpha);
        if i == 0 {
            0.0
        } else {
            self.cut_points[i - 1]
        }
    }

    /// `(λ, f*(λ))` at the left end of every step.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut start = 0.0;
        self.levels
            .iter()
            .zip(&self.cut_points)
            .map(|(&l, &c)| {
                let row = (start, l);
                start = c;
                row
            })
            .collect()
    }

    /// Writes `lambda,value` rows, one per step.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "lambda,value")?;
        for (l, v) in self.steps() {
            writeln!(out, "{l:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Sorts descending, accumulates weights, and merges equal levels.
pub fn rearrange(samples: &WeightedSamples) -> RearrangedFunction {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples.values[b].total_cmp(&samples.values[a]));
    let mut levels: Vec<f64> = Vec::new();
    let mut cut_points: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for i in order {
        let (v, w) = (samples.values[i], samples.weights[i]);
        if w == 0.0 {
            continue;
        }
        acc += w;
        match levels.last() {
            Some(&last) if last == v => *cut_points.last_mut().expect("paired") = acc,
            _ => {
                levels.push(v);
                cut_points.push(acc);
            }
        }
    }
    RearrangedFunction { levels, cut_points }
}

/// Exponent pair of `L^{p,q}`; `q` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzIndex {
    pub p: f64,
    pub q: f64,
}

impl LorentzIndex {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p = {p} must lie in (0, ∞)")));
        }
        if !(q > 0.0) {
            return Err(Error::InvalidArgument(format!("q = {q} must lie in (0, ∞]")));
        }
        Ok(Self { p, q })
    }
}

pub fn lorentz_norm(samples: &WeightedSamples, idx: LorentzIndex) -> Result<f64> {
    let idx = LorentzIndex::new(idx.p, idx.q)?;
    Ok(rearranged_norm(&rearrange(samples), idx))
}

/// `‖t^{1/p} f*‖_{L^q(dt/t)}` of a step function.
pub fn rearranged_norm(f: &RearrangedFunction, idx: LorentzIndex) -> f64 {
    let LorentzIndex { p, q } = idx;
    if q.is_infinite() {
        return f
            .levels
            .iter()
            .zip(&f.cut_points)
            .map(|(l, c)| l * c.powf(1.0 / p))
            .fold(0.0, f64::max);
    }
    let r = q / p;
    let mut prev = 0.0;
    let mut sum = 0.0;
    for (l, c) in f.levels.iter().zip(&f.cut_points) {
        let cr = c.powf(r);
        if *l > 0.0 {
            sum += l.powf(q) * (p / q) * (cr - prev);
        }
        prev = cr;
    }
    sum.powf(1.0 / q)
}

/// Interpolated index with `θ = 1/(1+ν)`: `1/p = (1−θ)/p₀ + θ/p₁`, same rule for `q`.
pub fn interpolated_index(nu: f64, i0: LorentzIndex, i1: LorentzIndex) -> LorentzIndex {
    let theta = 1.0 / (1.0 + nu);
    let inv = |a: f64, b: f64| (1.0 - theta) / a + theta / b;
    let ip = inv(i0.p, i1.p);
    let iq = inv(i0.q, i1.q);
    LorentzIndex { p: 1.0 / ip, q: if iq == 0.0 { f64::INFINITY } else { 1.0 / iq } }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub theta: f64,
    pub index: LorentzIndex,
    pub lhs: f64,
    pub rhs: f64,
    /// `2f ≤ δ f₀ + δ^{−ν} f₁` for all δ, checked point by point.
    pub hypothesis_pointwise: bool,
    /// The same hypothesis for the rearranged triple `(f*, f₀*, f₁*)`.
    pub hypothesis_rearranged: bool,
    /// `lhs ≤ rhs (1 + 1e-10)`.
    pub conclusion_holds: bool,
}

impl InterpolationReport {
    /// A violation is a failed conclusion under the rearranged hypothesis.
    pub fn violated(&self) -> bool {
        self.hypothesis_rearranged && !self.conclusion_holds
    }
}

fn hypothesis_at(a: f64, b0: f64, b1: f64, nu: f64, delta_grid: &[f64]) -> bool {
    let theta = 1.0 / (1.0 + nu);
    let tol = 1e-12;
    let lhs = 2.0 * a;
    let min = (1.0 + nu) * nu.powf(-nu * theta) * b0.powf(1.0 - theta) * b1.powf(theta);
    if lhs > min * (1.0 + tol) + tol * f64::MIN_POSITIVE {
        return false;
    }
    if b0 > 0.0 && b1 > 0.0 {
        let d = b0.powf(-theta) * b1.powf(theta);
        if lhs > (d * b0 + d.powf(-nu) * b1) * (1.0 + tol) {
            return false;
        }
    }
    delta_grid.iter().all(|&d| lhs <= (d * b0 + d.powf(-nu) * b1) * (1.0 + tol))
}

/// Evaluates both sides of the Lorentz interpolation inequality.
pub fn interpolation_check(
    f: &WeightedSamples,
    f0: &WeightedSamples,
    f1: &WeightedSamples,
    nu: f64,
    delta_grid: &[f64],
    i0: LorentzIndex,
    i1: LorentzIndex,
) -> Result<InterpolationReport> {
    if f.weights != f0.weights || f.weights != f1.weights {
        return Err(Error::DimensionMismatch("samples must share one grid".into()));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!("ν = {nu} must be positive")));
    }
    let theta = 1.0 / (1.0 + nu);
    let index = interpolated_index(nu, i0, i1);
    let hypothesis_pointwise = (0..f.len())
        .all(|i| hypothesis_at(f.values[i], f0.values[i], f1.values[i], nu, delta_grid));

    let (r, r0, r1) = (rearrange(f), rearrange(f0), rearrange(f1));
    let mut cuts: Vec<f64> = r.cut_points.iter().chain(&r0.cut_points).chain(&r1.cut_points).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    // Cut points from differently ordered sums can differ by a few ulps.
    let sliver = 1e-12 * f.measure();
    let mut start = 0.0;
    let mut hypothesis_rearranged = true;
    for &c in &cuts {
        if c > start + sliver {
            let mid = 0.5 * (start + c);
            if !hypothesis_at(r.eval(mid), r0.eval(mid), r1.eval(mid), nu, delta_grid) {
                hypothesis_rearranged = false;
                break;
            }
        }
        start = c;
    }

    let lhs = rearranged_norm(&r, index);
    let rhs = rearranged_norm(&r0, i0).powf(1.0 - theta) * rearranged_norm(&r1, i1).powf(theta);
    Ok(InterpolationReport {
        theta,
        index,
        lhs,
        rhs,
        hypothesis_pointwise,
        hypothesis_rearranged,
        conclusion_holds: lhs <= rhs * (1.0 + 1e-10),
    })
}

/// A random instance of the interpolation inequality.
#[derive(Clone, Debug)]
pub struct InterpolationInstance {
    pub f: WeightedSamples,
    pub f0: WeightedSamples,
    pub f1: WeightedSamples,
    pub nu: f64,
    pub i0: LorentzIndex,
    pub i1: LorentzIndex,
}

/// Draws `f₀, f₁` and `f ≤ c_ν f₀^{1−θ} f₁^θ`, which satisfies the hypothesis pointwise.
///
/// With `comonotone`, `f₀` and `f₁` share one ordering, so the hypothesis also
/// holds for the rearranged triple.
pub fn random_interpolation_instance<R: Rng + ?Sized>(rng: &mut R, comonotone: bool) -> InterpolationInstance {
    let n = rng.random_range(2..30);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let draw = |rng: &mut R| -> Vec<f64> {
        let shape = rng.random_range(0.5..3.0);
        (0..n).map(|_| (-(1.0 - rng.random::<f64>()).ln()).powf(shape)).collect()
    };
    let mut f0 = draw(rng);
    let mut f1 = draw(rng);
    if comonotone {
        f0.sort_by(f64::total_cmp);
        f1.sort_by(f64::total_cmp);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        f0 = perm.iter().map(|&i| f0[i]).collect();
        f1 = perm.iter().map(|&i| f1[i]).collect();
    }
    let nu: f64 = rng.random_range(0.1..3.0);
    let theta = 1.0 / (1.0 + nu);
    let c_nu = 0.5 * (1.0 + nu) * nu.powf(-nu * theta);
    let shrink = rng.random_bool(0.5);
    let f: Vec<f64> = (0..n)
        .map(|i| {
            let s = if shrink { rng.random::<f64>() } else { 1.0 };
            s * c_nu * f0[i].powf(1.0 - theta) * f1[i].powf(theta)
        })
        .collect();
    let index = |rng: &mut R| {
        let p = rng.random_range(0.5..4.0);
        let q = if rng.random_bool(0.2) { f64::INFINITY } else { rng.random_range(0.5..6.0) };
        LorentzIndex { p, q }
    };
    let i0 = index(rng);
    let i1 = index(rng);
    let mk = |v: Vec<f64>| WeightedSamples { values: v, weights: weights.clone() };
    InterpolationInstance { f: mk(f), f0: mk(f0), f1: mk(f1), nu, i0, i1 }
}

/// Default δ grid for hypothesis checks, geometric over twelve decades.
pub fn default_delta_grid() -> Vec<f64> {
    (-60..=60).map(|j| 10f64.powf(j as f64 / 10.0)).collect()
}

/// Theorem functional: the `L^{1,q}` norm of `g = |∇ⁿω|^{4/(n+2)}` restricted
/// to `{g > C_n t^{−2}}`, over all cells of the series.
///
/// Each frame carries the trapezoid measure of the time grid times `h³`.
pub fn theorem_functional(series: &FieldSeries, n: u32, q: f64, c_n: f64) -> Result<f64> {
    if series.components() != 1 {
        return Err(Error::ComponentMismatch { expected: 1, found: series.components() });
    }
    if !(q > 1.0) {
        return Err(Error::InvalidArgument(format!("q = {q} must exceed 1")));
    }
    if let Some(t) = series.times().into_iter().find(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument(format!("time {t} must be positive")));
    }
    let power = 4.0 / (n as f64 + 2.0);
    let cell = series.spec().cell_volume();
    let tw = if series.len() == 1 { vec![1.0] } else { series.trapezoid_weights() };
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for (frame, w) in series.frames().iter().zip(tw) {
        let threshold = c_n / (frame.time() * frame.time());
        for &v in frame.data() {
            let g = v.abs().powf(power);
            values.push(if g > threshold { g } else { 0.0 });
            weights.push(w * cell);
        }
    }
    lorentz_norm(&WeightedSamples::new(values, weights)?, LorentzIndex::new(1.0, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rearrangement_sorts_and_accumulates() {
        let s = WeightedSamples::new(vec![3.0, 1.0, 2.0], vec![1.0; 3]).unwrap();
        let r = rearrange(&s);
        assert_eq!(r.levels, vec![3.0, 2.0, 1.0]);
        assert_eq!(r.cut_points, vec![1.0, 2.0, 3.0]);
        let c = WeightedSamples::new(vec![0.7; 4], vec![0.5; 4]).unwrap();
        let r = rearrange(&c);
        assert_eq!(r.levels, vec![0.7]);
        assert_eq!(r.cut_points, vec![2.0]);
        assert!(WeightedSamples::new(vec![1.0], vec![-1.0]).is_err());
    }

    #[test]
    fn rearrangement_is_equimeasurable() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let values: Vec<f64> = (0..200).map(|_| (rng.random::<f64>() * 10.0).floor()).collect();
        let weights: Vec<f64> = (0..200).map(|_| rng.random_range(0.1..2.0)).collect();
        let s = WeightedSamples::new(values, weights).unwrap();
        let r = rearrange(&s);
        assert!((r.measure() - s.measure()).abs() < 1e-12);
        for _ in 0..100 {
            let a = rng.random_range(-1.0..11.0);
            assert!((r.distribution(a) - s.distribution(a)).abs() < 1e-9);
        }
    }

    #[test]
    fn indicator_norms() {
        for &(p, q, m) in &[(1.0, 2.0, 0.5), (2.0, 1.0, 3.0), (1.5, 4.0, 7.0)] {
            let s = WeightedSamples::new(vec![1.0], vec![m]).unwrap();
            let got = lorentz_norm(&s, LorentzIndex::new(p, q).unwrap()).unwrap();
            let want = (p / q).powf(1.0 / q) * m.powf(1.0 / p);
            assert!((got - want).abs() < 1e-12 * want);
            let inf = lorentz_norm(&s, LorentzIndex::new(p, f64::INFINITY).unwrap()).unwrap();
            assert!((inf - m.powf(1.0 / p)).abs() < 1e-12);
        }
        let z = WeightedSamples::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(lorentz_norm(&z, LorentzIndex::new(2.0, 3.0).unwrap()).unwrap(), 0.0);
        assert!(LorentzIndex::new(0.0, 1.0).is_err());
        assert!(LorentzIndex::new(1.0, -1.0).is_err());
    }

    #[test]
    fn diagonal_index_is_lebesgue_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let weights: Vec<f64> = (0..50).map(|_| rng.random_range(0.1..1.0)).collect();
        let s = WeightedSamples::new(values.clone(), weights.clone()).unwrap();
        for p in [0.7, 1.0, 2.5] {
            let direct = values.iter().zip(&weights).map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p);
            let got = lorentz_norm(&s, LorentzIndex::new(p, p).unwrap()).unwrap();
            assert!((got - direct).abs() < 1e-12 * direct);
            let scaled = lorentz_norm(&s.scale(-3.0), LorentzIndex::new(p, p).unwrap()).unwrap();
            assert!((scaled - 3.0 * got).abs() < 1e-12 * got);
        }
    }

    #[test]
    fn rearrangement_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let weights: Vec<f64> = (0..40).map(|_| rng.random_range(0.1..1.0)).collect();
        let g: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let f: Vec<f64> = g.iter().map(|v| v * rng.random::<f64>()).collect();
        let rf = rearrange(&WeightedSamples::new(f, weights.clone()).unwrap());
        let rg = rearrange(&WeightedSamples::new(g, weights).unwrap());
        for i in 0..400 {
            let lambda = rg.measure() * i as f64 / 400.0;
            assert!(rf.eval(lambda) <= rg.eval(lambda));
        }
    }

    #[test]
    fn weak_norm_bounded_by_indicator_calibration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let values: Vec<f64> = (0..30).map(|_| rng.random::<f64>().powi(3)).collect();
            let s = WeightedSamples::new(values, vec![0.3; 30]).unwrap();
            let p = rng.random_range(0.5..3.0);
            let q = rng.random_range(0.5..5.0);
            let weak = lorentz_norm(&s, LorentzIndex::new(p, f64::INFINITY).unwrap()).unwrap();
            let strong = lorentz_norm(&s, LorentzIndex::new(p, q).unwrap()).unwrap();
            assert!(weak <= (q / p).powf(1.0 / q) * strong * (1.0 + 1e-12));
        }
    }

    #[test]
    fn csv_lists_steps() {
        let r = rearrange(&WeightedSamples::new(vec![2.0, 1.0], vec![0.5, 0.5]).unwrap());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().starts_with("5.0000000000000000e-1,1.0"));
    }

    #[test]
    fn interpolation_equality_case() {
        let one = WeightedSamples::new(vec![1.0], vec![1.0]).unwrap();
        let idx = LorentzIndex::new(2.0, 2.0).unwrap();
        let r = interpolation_check(&one, &one, &one, 1.0, &default_delta_grid(), idx, idx).unwrap();
        assert!(r.hypothesis_pointwise && r.hypothesis_rearranged && r.conclusion_holds);
        assert!((r.lhs - r.rhs).abs() < 1e-12);

        let zero = WeightedSamples::new(vec![0.0], vec![1.0]).unwrap();
        let r = interpolation_check(&zero, &one, &zero, 1.0, &default_delta_grid(), idx, idx).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.conclusion_holds);
    }

    #[test]
    fn comonotone_instances_never_violate() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let inst = random_interpolation_instance(&mut rng, true);
            let r = interpolation_check(&inst.f, &inst.f0, &inst.f1, inst.nu, &default_delta_grid(), inst.i0, inst.i1)
                .unwrap();
            assert!(r.hypothesis_pointwise && r.hypothesis_rearranged, "{inst:?} {r:?}");
            assert!(r.conclusion_holds, "{r:?}");
        }
    }

    #[test]
    fn functional_vanishes_below_threshold() {
        let spec = crate::GridSpec::periodic(4).unwrap();
        let frames: Vec<GridField> =
            (1..4).map(|i| GridField::scalar_from_fn(spec, |_| 2.0).with_time(0.1 * i as f64)).collect();
        let s = FieldSeries::new(frames).unwrap();
        assert_eq!(theorem_functional(&s, 1, 2.0, f64::INFINITY).unwrap(), 0.0);
        assert!(theorem_functional(&s, 1, 2.0, 1e-6).unwrap() > 0.0);
        let bad = FieldSeries::new(vec![GridField::zeros(spec, 1).with_time(0.0)]).unwrap();
        assert!(theorem_functional(&bad, 1, 2.0, 1.0).is_err());
    }
}
