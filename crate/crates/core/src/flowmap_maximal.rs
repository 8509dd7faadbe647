//! Mollified trajectories, skewed parabolic cylinders, and the maximal
//! functions built on them.
//!
//! A cylinder `Q_ε(t,x)` collects the points `(t+ε²s, X(t+ε²s)+εy)` with
//! `−9 ≤ s ≤ 0`, `|y| < 3`, where `X` follows the velocity mollified at scale `ε`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{gradient, inverse_transform, transform, GridField, GridSpec, SpectralField};
use crate::series::{cubic_weights, FieldSeries};

/// The standard bump `exp(−1/(1−|x|²))` on `B₁`, normalized to unit mass.
#[derive(Clone, Debug)]
pub struct Mollifier {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mass: f64,
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::standard()
    }
}

impl Mollifier {
    const NODES: usize = 400;

    pub fn standard() -> Self {
        // The profile is flat at both ends, so the midpoint rule converges faster than any power.
        let dr = 1.0 / Self::NODES as f64;
        let nodes: Vec<f64> = (0..Self::NODES).map(|i| (i as f64 + 0.5) * dr).collect();
        let weights: Vec<f64> = nodes.iter().map(|&r| 4.0 * std::f64::consts::PI * bump(r) * r * r * dr).collect();
        let mass = weights.iter().sum();
        Self { nodes, weights, mass }
    }

    /// Kernel value at radius `r`.
    pub fn profile(&self, r: f64) -> f64 {
        bump(r) / self.mass
    }

    /// Fourier symbol `∫ φ(x) e^{−iξ·x} dx` at `|ξ| = xi`.
    pub fn symbol(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 1.0;
        }
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| {
                let z = xi * r;
                w * z.sin() / z
            })
            .sum();
        s / self.mass
    }
}

fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// `u * φ_ε` with `φ_ε(x) = ε⁻³ φ(−x/ε)`, exact per Fourier mode.
pub fn mollify(u: &GridField, epsilon: f64, kernel: &Mollifier) -> Result<GridField> {
    Ok(apply_symbol(u, &mollifier_symbols(u.spec(), epsilon, kernel)?))
}

/// Half-spectrum multipliers of `φ_ε` on `spec`.
pub fn mollifier_symbols(spec: &GridSpec, epsilon: f64, kernel: &Mollifier) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("ε = {epsilon} must be positive")));
    }
    if 2.0 * epsilon < 4.0 * spec.spacing() {
        return Err(Error::UnderResolved(format!(
            "kernel diameter {} spans fewer than 4 cells of {}",
            2.0 * epsilon,
            spec.spacing()
        )));
    }
    let unit = 2.0 * std::f64::consts::PI / spec.length;
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let mut factors = vec![0.0; spec.spectral_points()];
    SpectralField::for_each_mode(spec, |idx, kx, ky, kz| {
        let (a, b, c) = (spec.mode(kx), spec.mode(ky), spec.mode(kz));
        let m2 = a * a + b * b + c * c;
        factors[idx] = *cache.entry(m2).or_insert_with(|| kernel.symbol(epsilon * unit * (m2 as f64).sqrt()));
    });
    Ok(factors)
}

fn apply_symbol(u: &GridField, factors: &[f64]) -> GridField {
    let mut s = transform(u);
    for c in 0..s.components() {
        for (v, f) in s.component_mut(c).iter_mut().zip(factors) {
            *v *= *f;
        }
    }
    inverse_transform(&s).with_time(u.time())
}

/// Every frame of `series` mollified at scale `ε`.
pub fn mollify_series(series: &FieldSeries, epsilon: f64, kernel: &Mollifier) -> Result<FieldSeries> {
    let factors = mollifier_symbols(series.spec(), epsilon, kernel)?;
    series.map(|u| Ok(apply_symbol(u, &factors)))
}

/// A velocity defined at every space-time point.
pub trait VelocityField: Sync {
    fn velocity(&self, t: f64, x: [f64; 3]) -> Result<[f64; 3]>;
}

/// A scalar defined at every space-time point.
pub trait SpaceTimeField: Sync {
    fn value(&self, t: f64, x: [f64; 3]) -> Result<f64>;
}

/// Constant transport velocity.
#[derive(Clone, Copy, Debug)]
pub struct UniformFlow(pub [f64; 3]);

impl VelocityField for UniformFlow {
    fn velocity(&self, _t: f64, _x: [f64; 3]) -> Result<[f64; 3]> {
        Ok(self.0)
    }
}

/// A closure `(t, x) ↦ f`.
pub struct FnField<F>(pub F);

impl<F: Fn(f64, [f64; 3]) -> f64 + Sync> SpaceTimeField for FnField<F> {
    fn value(&self, t: f64, x: [f64; 3]) -> Result<f64> {
        Ok((self.0)(t, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialInterpolation {
    Trilinear,
    /// Exact trigonometric evaluation of the stored modes.
    Spectral,
}

struct SparseModes {
    /// `(kx, ky, kz, coefficient × multiplicity)` per component.
    modes: Vec<Vec<(usize, usize, usize, Complex64)>>,
}

impl SparseModes {
    fn new(field: &GridField) -> Self {
        let s = transform(field);
        let spec = *field.spec();
        let modes = (0..field.components())
            .map(|c| {
                let coeffs = s.component(c);
                let tol = 1e-15 * coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let mut out = Vec::new();
                SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
                    if coeffs[idx].norm() > tol {
                        out.push((kx, ky, kz, coeffs[idx] * s.multiplicity(kx)));
                    }
                });
                out
            })
            .collect();
        Self { modes }
    }

    fn eval(&self, spec: &GridSpec, x: [f64; 3]) -> Vec<f64> {
        let n = spec.n;
        let unit = 2.0 * std::f64::consts::PI / spec.length;
        let phases = |axis: usize, len: usize| -> Vec<Complex64> {
            let base = Complex64::from_polar(1.0, unit * (x[axis] - spec.origin[axis]));
            let mut out = vec![Complex64::new(1.0, 0.0); len];
            let mut up = Complex64::new(1.0, 0.0);
            for (j, slot) in out.iter_mut().enumerate() {
                let m = spec.mode(j);
                if m >= 0 {
                    *slot = up;
                    up *= base;
                }
            }
            for j in 0..len {
                let m = spec.mode(j);
                if m < 0 {
                    out[j] = out[(-m) as usize].conj();
                }
            }
            out
        };
        let ex = phases(0, spec.half());
        let ey = phases(1, n);
        let ez = phases(2, n);
        self.modes
            .iter()
            .map(|list| {
                list.iter().map(|&(kx, ky, kz, c)| (c * ex[kx] * ey[ky] * ez[kz]).re).sum::<f64>()
            })
            .collect()
    }
}

/// Space-time interpolant of a field series: cubic in time, trilinear or spectral in space.
pub struct SeriesSampler {
    series: FieldSeries,
    times: Vec<f64>,
    mode: SpatialInterpolation,
    sparse: Vec<SparseModes>,
}

impl SeriesSampler {
    pub fn new(series: FieldSeries, mode: SpatialInterpolation) -> Self {
        let sparse = match mode {
            SpatialInterpolation::Spectral => series.frames().iter().map(SparseModes::new).collect(),
            SpatialInterpolation::Trilinear => Vec::new(),
        };
        Self { times: series.times(), series, mode, sparse }
    }

    pub fn series(&self) -> &FieldSeries {
        &self.series
    }

    /// All components at frame `i`, position `x`.
    pub fn sample_frame(&self, i: usize, x: [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.series.components()];
        self.accumulate(i, x, 1.0, &mut out);
        out
    }

    fn accumulate(&self, i: usize, x: [f64; 3], weight: f64, out: &mut [f64]) {
        let f = self.series.frame(i);
        match self.mode {
            SpatialInterpolation::Trilinear => trilinear_into(f, x, weight, out),
            SpatialInterpolation::Spectral => {
                for (o, v) in out.iter_mut().zip(self.sparse[i].eval(f.spec(), x)) {
                    *o += weight * v;
                }
            }
        }
    }

    fn sample_into(&self, t: f64, x: [f64; 3], out: &mut [f64]) -> Result<()> {
        self.series.check_time(t)?;
        out.iter_mut().for_each(|o| *o = 0.0);
        let (start, w) = cubic_weights(&self.times, t);
        for (k, &wk) in w.iter().enumerate() {
            self.accumulate(start + k, x, wk, out);
        }
        Ok(())
    }

    pub fn sample(&self, t: f64, x: [f64; 3]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.series.components()];
        self.sample_into(t, x, &mut out)?;
        Ok(out)
    }
}

impl VelocityField for SeriesSampler {
    fn velocity(&self, t: f64, x: [f64; 3]) -> Result<[f64; 3]> {
        if self.series.components() != 3 {
            return Err(Error::ComponentMismatch { expected: 3, found: self.series.components() });
        }
        let mut v = [0.0; 3];
        self.sample_into(t, x, &mut v)?;
        Ok(v)
    }
}

impl SpaceTimeField for SeriesSampler {
    /// The scalar value, or the magnitude of a vector.
    fn value(&self, t: f64, x: [f64; 3]) -> Result<f64> {
        if self.series.components() == 1 {
            let mut v = [0.0];
            self.sample_into(t, x, &mut v)?;
            return Ok(v[0]);
        }
        let v = self.sample(t, x)?;
        Ok(v.iter().map(|c| c * c).sum::<f64>().sqrt())
    }
}

/// Periodic trilinear interpolation of every component.
pub fn trilinear(field: &GridField, x: [f64; 3]) -> Vec<f64> {
    let mut out = vec![0.0; field.components()];
    trilinear_into(field, x, 1.0, &mut out);
    out
}

fn trilinear_into(field: &GridField, x: [f64; 3], weight: f64, out: &mut [f64]) {
    let spec = field.spec();
    let n = spec.n;
    let h = spec.spacing();
    let m = spec.points();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let s = (x[a] - spec.origin[a]) / h;
        let fl = s.floor();
        frac[a] = s - fl;
        base[a] = (fl as i64).rem_euclid(n as i64) as usize;
    }
    let data = field.data();
    for corner in 0..8 {
        let d = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let mut w = weight;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            w *= if d[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            idx[a] = (base[a] + d[a]) % n;
        }
        if w == 0.0 {
            continue;
        }
        let flat = spec.index(idx[0], idx[1], idx[2]);
        for (c, o) in out.iter_mut().enumerate() {
            *o += w * data[c * m + flat];
        }
    }
}

/// Positions along a path at increasing times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 3]>,
}

impl Trajectory {
    /// Cubic Lagrange interpolation over the four nearest nodes.
    pub fn position_at(&self, t: f64) -> [f64; 3] {
        let m = self.times.len();
        if m == 1 {
            return self.positions[0];
        }
        let upper = self.times.partition_point(|&s| s <= t).clamp(1, m - 1);
        let width = m.min(4);
        let start = (upper as isize - width as isize / 2).clamp(0, (m - width) as isize) as usize;
        let mut out = [0.0; 3];
        for i in start..start + width {
            let w: f64 = (start..start + width)
                .filter(|&j| j != i)
                .map(|j| (t - self.times[j]) / (self.times[i] - self.times[j]))
                .product();
            for a in 0..3 {
                out[a] += w * self.positions[i][a];
            }
        }
        out
    }
}

/// Backward RK4 from `(t, x)` through the descending `output_times`, with
/// `substeps` steps between consecutive outputs.
pub fn trace(
    field: &dyn VelocityField,
    t: f64,
    x: [f64; 3],
    output_times: &[f64],
    substeps: usize,
) -> Result<Trajectory> {
    if output_times.windows(2).any(|w| w[1] >= w[0]) || output_times.first().is_some_and(|&s| s > t) {
        return Err(Error::InvalidArgument("output times must descend from t".into()));
    }
    let substeps = substeps.max(1);
    let mut times = vec![t];
    let mut positions = vec![x];
    let (mut tau, mut pos) = (t, x);
    let add = |p: [f64; 3], k: [f64; 3], a: f64| [p[0] + a * k[0], p[1] + a * k[1], p[2] + a * k[2]];
    for &target in output_times {
        if target == tau {
            continue;
        }
        let h = (target - tau) / substeps as f64;
        for _ in 0..substeps {
            let k1 = field.velocity(tau, pos)?;
            let k2 = field.velocity(tau + 0.5 * h, add(pos, k1, 0.5 * h))?;
            let k3 = field.velocity(tau + 0.5 * h, add(pos, k2, 0.5 * h))?;
            let k4 = field.velocity(tau + h, add(pos, k3, h))?;
            for a in 0..3 {
                pos[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
            }
            tau += h;
        }
        tau = target;
        times.push(tau);
        positions.push(pos);
    }
    times.reverse();
    positions.reverse();
    Ok(Trajectory { times, positions })
}

/// Frames of `series` needed to interpolate on `[t0, t1]`, padded for the cubic stencil.
pub fn window(series: &FieldSeries, t0: f64, t1: f64) -> Result<FieldSeries> {
    series.check_time(t0)?;
    series.check_time(t1)?;
    let times = series.times();
    let lo = times.partition_point(|&s| s < t0).saturating_sub(2);
    let hi = (times.partition_point(|&s| s <= t1) + 2).min(times.len());
    FieldSeries::new(series.frames()[lo..hi].to_vec())
}

/// `X(s)` for `s ∈ [t − 9ε², t]` following the velocity mollified at scale `ε`.
pub fn integrate_trajectory(
    series: &FieldSeries,
    t: f64,
    x: [f64; 3],
    epsilon: f64,
    kernel: &Mollifier,
    mode: SpatialInterpolation,
    steps: usize,
) -> Result<Trajectory> {
    let t0 = t - 9.0 * epsilon * epsilon;
    let part = window(series, t0, t)?;
    let smooth = mollify_series(&part, epsilon, kernel)?;
    let sampler = SeriesSampler::new(smooth, mode);
    trace(&sampler, t, x, &[t0], steps)
}

/// Quadrature resolution of a cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CylinderResolution {
    /// Midpoint slices of `s ∈ [−9, 0]`.
    pub time_slices: usize,
    /// Lattice cells per unit of `y` across `B₃`.
    pub cells_per_unit: usize,
    /// Subsamples per axis in cells cut by the sphere.
    pub subsamples: usize,
    /// RK4 steps per half slice.
    pub substeps: usize,
}

impl Default for CylinderResolution {
    fn default() -> Self {
        Self { time_slices: 9, cells_per_unit: 2, subsamples: 16, substeps: 1 }
    }
}

/// Reference quadrature of `B₃`: centroids and measures of lattice cells clipped to the ball.
pub fn reference_ball(res: CylinderResolution) -> Arc<Vec<([f64; 3], f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<([f64; 3], f64)>>>>> = OnceLock::new();
    let key = (res.cells_per_unit, res.subsamples);
    let mut map = CACHE.get_or_init(Default::default).lock().expect("cache lock");
    map.entry(key).or_insert_with(|| Arc::new(build_reference_ball(key.0.max(1), key.1.max(1)))).clone()
}

fn build_reference_ball(per_unit: usize, sub: usize) -> Vec<([f64; 3], f64)> {
    const R: f64 = 3.0;
    let cells = 2 * 3 * per_unit;
    let d = 1.0 / per_unit as f64;
    let half_diag = 0.5 * d * 3f64.sqrt();
    let mut out = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            for k in 0..cells {
                let c = [-R + (i as f64 + 0.5) * d, -R + (j as f64 + 0.5) * d, -R + (k as f64 + 0.5) * d];
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                if r + half_diag <= R {
                    out.push((c, d * d * d));
                } else if r - half_diag < R {
                    let e = d / sub as f64;
                    let mut count = 0usize;
                    let mut centroid = [0.0; 3];
                    for a in 0..sub {
                        for b in 0..sub {
                            for g in 0..sub {
                                let p = [
                                    c[0] - 0.5 * d + (a as f64 + 0.5) * e,
                                    c[1] - 0.5 * d + (b as f64 + 0.5) * e,
                                    c[2] - 0.5 * d + (g as f64 + 0.5) * e,
                                ];
                                if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] < R * R {
                                    count += 1;
                                    for q in 0..3 {
                                        centroid[q] += p[q];
                                    }
                                }
                            }
                        }
                    }
                    if count > 0 {
                        let m = count as f64;
                        out.push(([centroid[0] / m, centroid[1] / m, centroid[2] / m], m * e * e * e));
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CylinderSample {
    pub time: f64,
    pub position: [f64; 3],
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkewedCylinder {
    pub base_time: f64,
    pub base_point: [f64; 3],
    pub epsilon: f64,
    pub trajectory: Trajectory,
    pub samples: Vec<CylinderSample>,
}

impl SkewedCylinder {
    /// `|Q_ε| = 9ε² · (4π/3)(3ε)³`.
    pub fn exact_volume(epsilon: f64) -> f64 {
        9.0 * epsilon * epsilon * 4.0 / 3.0 * std::f64::consts::PI * (3.0 * epsilon).powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    pub fn start_time(&self) -> f64 {
        self.base_time - 9.0 * self.epsilon * self.epsilon
    }
}

/// Cylinder around the trajectory of `field` through `(t, x)`.
pub fn build_cylinder(
    field: &dyn VelocityField,
    t: f64,
    x: [f64; 3],
    epsilon: f64,
    res: CylinderResolution,
) -> Result<SkewedCylinder> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("ε = {epsilon} must be positive")));
    }
    let slices = res.time_slices.max(1);
    let e2 = epsilon * epsilon;
    let ds = 9.0 / slices as f64;
    // Node 2j+1 of the half-slice grid is the midpoint of slice j.
    let nodes: Vec<f64> = (1..=2 * slices).map(|k| t - e2 * 0.5 * ds * k as f64).collect();
    let trajectory = trace(field, t, x, &nodes, res.substeps)?;
    let ball = reference_ball(res);
    let mut samples = Vec::with_capacity(slices * ball.len());
    let m = trajectory.times.len();
    for j in 0..slices {
        // `trajectory` is ascending; node k sits at index m−1−k.
        let idx = m - 1 - (2 * j + 1);
        let (time, centre) = (trajectory.times[idx], trajectory.positions[idx]);
        for &(y, w) in ball.iter() {
            samples.push(CylinderSample {
                time,
                position: [centre[0] + epsilon * y[0], centre[1] + epsilon * y[1], centre[2] + epsilon * y[2]],
                weight: e2 * ds * epsilon.powi(3) * w,
            });
        }
    }
    Ok(SkewedCylinder { base_time: t, base_point: x, epsilon, trajectory, samples })
}

/// Weighted mean of `|f|` over the cylinder samples.
pub fn cylinder_average(f: &dyn SpaceTimeField, cyl: &SkewedCylinder) -> Result<f64> {
    let mut sum = 0.0;
    let mut total = 0.0;
    for s in &cyl.samples {
        sum += s.weight * f.value(s.time, s.position)?.abs();
        total += s.weight;
    }
    Ok(sum / total)
}

/// Recorded universal constants; only `eta0` enters a computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmissibilityThresholds {
    pub eta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

impl Default for AdmissibilityThresholds {
    fn default() -> Self {
        Self { eta0: 0.05, eta1: 0.05, eta2: 0.05, eta3: 0.05 }
    }
}

impl AdmissibilityThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta0", self.eta0), ("eta1", self.eta1), ("eta2", self.eta2), ("eta3", self.eta3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// `ε² ⨍_{Q_ε} M(|∇u|)`.
pub fn admissibility_statistic(cyl: &SkewedCylinder, grad_max: &dyn SpaceTimeField) -> Result<f64> {
    Ok(cyl.epsilon * cyl.epsilon * cylinder_average(grad_max, cyl)?)
}

/// `ε² ⨍ M(|∇u|) ≤ η₀` and the cylinder starts after `time_origin`.
pub fn admissible(cyl: &SkewedCylinder, grad_max: &dyn SpaceTimeField, eta0: f64, time_origin: f64) -> Result<bool> {
    if cyl.start_time() < time_origin - 1e-12 {
        return Ok(false);
    }
    Ok(admissibility_statistic(cyl, grad_max)? <= eta0)
}

/// Default ladder of radii: the cell itself, then `h·2^j ≤ L/4`.
pub fn default_radius_ladder(spec: &GridSpec) -> Vec<f64> {
    let h = spec.spacing();
    let mut out = vec![0.0];
    let mut r = h;
    while r <= 0.25 * spec.length + 1e-12 {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Offsets `(i, j, k)` with `h|(i,j,k)| ≤ r`.
pub fn ball_stencil(spec: &GridSpec, r: f64) -> Vec<[i64; 3]> {
    let h = spec.spacing();
    let m = (r / h).floor() as i64;
    let mut out = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                if ((i * i + j * j + k * k) as f64).sqrt() * h <= r * (1.0 + 1e-12) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Lattice-ball average of `|f|` around grid point `idx`, by direct summation.
pub fn ball_average(f: &GridField, idx: [usize; 3], r: f64) -> f64 {
    let spec = f.spec();
    let n = spec.n as i64;
    let st = ball_stencil(spec, r);
    let sum: f64 = st
        .iter()
        .map(|o| {
            let w = |a: usize| ((idx[a] as i64 + o[a]).rem_euclid(n)) as usize;
            f.data()[spec.index(w(0), w(1), w(2))].abs()
        })
        .sum();
    sum / st.len() as f64
}

/// `sup_r ⨍_{B_r(x)} |f|` over the default ladder.
pub fn hl_maximal(f: &GridField) -> Result<GridField> {
    hl_maximal_with(f, &default_radius_ladder(f.spec()))
}

/// Ball averages over `radii` by FFT convolution, maximized pointwise.
pub fn hl_maximal_with(f: &GridField, radii: &[f64]) -> Result<GridField> {
    if f.components() != 1 {
        return Err(Error::ComponentMismatch { expected: 1, found: f.components() });
    }
    let spec = *f.spec();
    let n = spec.n as i64;
    let abs = f.map(f64::abs);
    let fs = transform(&abs);
    let scale = spec.points() as f64;
    let mut best = abs.clone();
    for &r in radii.iter().filter(|&&r| r > 0.0) {
        let st = ball_stencil(&spec, r);
        let mut kernel = GridField::zeros(spec, 1);
        let weight = 1.0 / st.len() as f64;
        for o in &st {
            let w = |a: usize| (o[a].rem_euclid(n)) as usize;
            kernel.data_mut()[spec.index(w(0), w(1), w(2))] += weight;
        }
        let ks = transform(&kernel);
        let coeffs: Vec<Complex64> =
            fs.component(0).iter().zip(ks.component(0)).map(|(a, b)| a * b * scale).collect();
        let avg = inverse_transform(&SpectralField::from_coeffs(spec, 1, coeffs)?);
        for (b, a) in best.data_mut().iter_mut().zip(avg.data()) {
            *b = b.max(*a);
        }
    }
    Ok(best.with_time(f.time()))
}

/// `M(|∇u|)` of every frame of a velocity series.
pub fn gradient_maximal(velocity: &FieldSeries) -> Result<FieldSeries> {
    velocity.map(|u| hl_maximal(&gradient(u)?.magnitude()))
}

/// Options shared by every cylinder a [`Flow`] builds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub resolution: CylinderResolution,
    pub interpolation: SpatialInterpolation,
    /// Start of the time domain, `0` in `(0, T) × ℝ³`.
    pub time_origin: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            resolution: CylinderResolution::default(),
            interpolation: SpatialInterpolation::Trilinear,
            time_origin: 0.0,
        }
    }
}

enum FlowVelocity {
    Uniform([f64; 3]),
    Series(FieldSeries),
}

/// Velocity data with cached mollifications and `M(|∇u|)`.
pub struct Flow {
    velocity: FlowVelocity,
    grad_max: Option<SeriesSampler>,
    kernel: Mollifier,
    pub options: FlowOptions,
    mollified: Mutex<HashMap<(u64, u64, u64), Arc<SeriesSampler>>>,
}

/// One ladder entry of a maximal-function evaluation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LadderEntry {
    pub epsilon: f64,
    /// `None` when the cylinder leaves the data range or the kernel is under-resolved.
    pub average: Option<f64>,
    pub statistic: Option<f64>,
    pub admissible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QMaximal {
    pub value: f64,
    pub admissible_count: usize,
    /// No entry was admissible and the smallest computed average was used.
    pub fallback: bool,
    pub entries: Vec<LadderEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LebesgueReport {
    pub epsilons: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Least-squares slope of `log deviation` against `log ε`.
    pub slope: f64,
    /// Deviations strictly decrease as `ε` shrinks.
    pub decreasing: bool,
}

impl Flow {
    /// Mollified, interpolated velocity series with `M(|∇u|)` precomputed.
    pub fn new(velocity: FieldSeries, options: FlowOptions) -> Result<Self> {
        if velocity.components() != 3 {
            return Err(Error::ComponentMismatch { expected: 3, found: velocity.components() });
        }
        let grad_max = SeriesSampler::new(gradient_maximal(&velocity)?, SpatialInterpolation::Trilinear);
        Ok(Self {
            velocity: FlowVelocity::Series(velocity),
            grad_max: Some(grad_max),
            kernel: Mollifier::standard(),
            options,
            mollified: Mutex::new(HashMap::new()),
        })
    }

    /// Constant velocity; `M(|∇u|) = 0`, so every in-range cylinder is admissible.
    pub fn uniform(c: [f64; 3], options: FlowOptions) -> Self {
        Self {
            velocity: FlowVelocity::Uniform(c),
            grad_max: None,
            kernel: Mollifier::standard(),
            options,
            mollified: Mutex::new(HashMap::new()),
        }
    }

    pub fn grad_max(&self) -> Option<&SeriesSampler> {
        self.grad_max.as_ref()
    }

    pub fn kernel(&self) -> &Mollifier {
        &self.kernel
    }

    const CACHE_LIMIT: usize = 16;

    /// Velocity mollified at scale `ε` on the frames covering `[t0, t1]`.
    fn mollified(&self, epsilon: f64, t0: f64, t1: f64) -> Result<Arc<SeriesSampler>> {
        let FlowVelocity::Series(series) = &self.velocity else {
            unreachable!("uniform flows are not mollified")
        };
        let part = window(series, t0, t1)?;
        let key = (epsilon.to_bits(), part.start().to_bits(), part.end().to_bits());
        if let Some(s) = self.mollified.lock().expect("cache lock").get(&key) {
            return Ok(s.clone());
        }
        let smooth = mollify_series(&part, epsilon, &self.kernel)?;
        let sampler = Arc::new(SeriesSampler::new(smooth, self.options.interpolation));
        let mut cache = self.mollified.lock().expect("cache lock");
        if cache.len() >= Self::CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, sampler.clone());
        Ok(sampler)
    }

    /// The velocity mollified at scale `ε`, valid on `[t0, t1]`.
    pub fn mollified_velocity(&self, epsilon: f64, t0: f64, t1: f64) -> Result<Arc<dyn VelocityField>> {
        Ok(match &self.velocity {
            FlowVelocity::Uniform(c) => Arc::new(UniformFlow(*c)),
            FlowVelocity::Series(_) => self.mollified(epsilon, t0, t1)?,
        })
    }

    pub fn cylinder(&self, t: f64, x: [f64; 3], epsilon: f64) -> Result<SkewedCylinder> {
        let field = self.mollified_velocity(epsilon, t - 9.0 * epsilon * epsilon, t)?;
        build_cylinder(field.as_ref(), t, x, epsilon, self.options.resolution)
    }

    /// `ε² ⨍ M(|∇u|)`, zero for uniform flows.
    pub fn statistic(&self, cyl: &SkewedCylinder) -> Result<f64> {
        match &self.grad_max {
            Some(g) => admissibility_statistic(cyl, g),
            None => Ok(0.0),
        }
    }

    pub fn admissible(&self, cyl: &SkewedCylinder, eta0: f64) -> Result<bool> {
        if cyl.start_time() < self.options.time_origin - 1e-12 {
            return Ok(false);
        }
        Ok(self.statistic(cyl)? <= eta0)
    }

    fn ladder_cylinder(&self, t: f64, x: [f64; 3], epsilon: f64, eta0: f64) -> Result<Option<(SkewedCylinder, f64, bool)>> {
        if t - 9.0 * epsilon * epsilon < self.options.time_origin - 1e-12 {
            return Ok(None);
        }
        let cyl = match self.cylinder(t, x, epsilon) {
            Ok(c) => c,
            Err(Error::TimeRange { .. } | Error::UnderResolved(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let statistic = match self.statistic(&cyl) {
            Ok(s) => s,
            Err(Error::TimeRange { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some((cyl, statistic, statistic <= eta0)))
    }

    /// Cylinders and admissibility over the ladder, reusable for any integrand.
    pub fn ladder_cylinders(
        &self,
        t: f64,
        x: [f64; 3],
        ladder: &[f64],
        thresholds: &AdmissibilityThresholds,
    ) -> Result<LadderCylinders> {
        let cylinders =
            ladder.iter().map(|&e| Ok((e, self.ladder_cylinder(t, x, e, thresholds.eta0)?))).collect::<Result<_>>()?;
        Ok(LadderCylinders { cylinders })
    }

    /// Per-entry averages and admissibility over the ladder.
    pub fn ladder(
        &self,
        f: &dyn SpaceTimeField,
        t: f64,
        x: [f64; 3],
        ladder: &[f64],
        thresholds: &AdmissibilityThresholds,
    ) -> Result<Vec<LadderEntry>> {
        self.ladder_cylinders(t, x, ladder, thresholds)?.entries(f)
    }

    /// `M_Q f(t,x)`: the sup of cylinder averages over admissible ladder entries.
    pub fn q_maximal(
        &self,
        f: &dyn SpaceTimeField,
        t: f64,
        x: [f64; 3],
        ladder: &[f64],
        thresholds: &AdmissibilityThresholds,
    ) -> Result<QMaximal> {
        q_maximal_from(self.ladder(f, t, x, ladder, thresholds)?)
    }

    /// `⨍_{Q_ε} |f − f(t,x)|` along the ladder.
    pub fn lebesgue_check(&self, f: &dyn SpaceTimeField, t: f64, x: [f64; 3], ladder: &[f64]) -> Result<LebesgueReport> {
        let centre = f.value(t, x)?;
        let shifted = FnField(|s: f64, y: [f64; 3]| f.value(s, y).map(|v| v - centre).unwrap_or(f64::NAN));
        let mut epsilons = Vec::new();
        let mut deviations = Vec::new();
        for &e in ladder {
            let cyl = self.cylinder(t, x, e)?;
            let d = cylinder_average(&shifted, &cyl)?;
            if d.is_nan() {
                return Err(Error::Coverage(format!("cylinder at ε = {e} leaves the data")));
            }
            epsilons.push(e);
            deviations.push(d);
        }
        let mut order: Vec<usize> = (0..epsilons.len()).collect();
        order.sort_by(|&a, &b| epsilons[a].total_cmp(&epsilons[b]));
        let decreasing = order.windows(2).all(|w| deviations[w[0]] < deviations[w[1]]);
        Ok(LebesgueReport { slope: log_slope(&epsilons, &deviations), epsilons, deviations, decreasing })
    }

    /// Largest `ε` in `[lo, hi]` whose cylinder is admissible, by bisection to relative `tol`.
    ///
    /// Returns `None` when `lo` already fails.
    pub fn admissibility_boundary(&self, t: f64, x: [f64; 3], eta0: f64, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
        let ok = |e: f64| -> Result<bool> { self.admissible(&self.cylinder(t, x, e)?, eta0) };
        if !ok(lo)? {
            return Ok(None);
        }
        if ok(hi)? {
            return Ok(Some(hi));
        }
        let (mut a, mut b) = (lo, hi);
        while b - a > tol * b {
            let m = 0.5 * (a + b);
            if ok(m)? {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(Some(a))
    }
}

/// The ladder cylinders at one point; `None` where a cylinder leaves the data.
pub struct LadderCylinders {
    cylinders: Vec<(f64, Option<(SkewedCylinder, f64, bool)>)>,
}

impl LadderCylinders {
    pub fn entries(&self, f: &dyn SpaceTimeField) -> Result<Vec<LadderEntry>> {
        self.cylinders
            .iter()
            .map(|(epsilon, c)| {
                let skip = LadderEntry { epsilon: *epsilon, average: None, statistic: None, admissible: false };
                let Some((cyl, statistic, admissible)) = c else { return Ok(skip) };
                match cylinder_average(f, cyl) {
                    Ok(a) => Ok(LadderEntry {
                        epsilon: *epsilon,
                        average: Some(a),
                        statistic: Some(*statistic),
                        admissible: *admissible,
                    }),
                    Err(Error::TimeRange { .. }) => Ok(skip),
                    Err(e) => Err(e),
                }
            })
            .collect()
    }

    pub fn maximal(&self, f: &dyn SpaceTimeField) -> Result<QMaximal> {
        q_maximal_from(self.entries(f)?)
    }
}

/// Sup over admissible entries, falling back to the smallest computed `ε`.
pub fn q_maximal_from(entries: Vec<LadderEntry>) -> Result<QMaximal> {
    let admissible: Vec<f64> = entries.iter().filter(|e| e.admissible).filter_map(|e| e.average).collect();
    if let Some(value) = admissible.iter().copied().reduce(f64::max) {
        return Ok(QMaximal { value, admissible_count: admissible.len(), fallback: false, entries });
    }
    let smallest = entries
        .iter()
        .filter(|e| e.average.is_some())
        .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
        .and_then(|e| e.average)
        .ok_or_else(|| Error::Coverage("no ladder entry fits the data".into()))?;
    Ok(QMaximal { value: smallest, admissible_count: 0, fallback: true, entries })
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// `sup_α α · μ{v > α}` for values carrying equal measure `cell`.
pub fn weak_type_constant(values: &[f64], cell: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter().enumerate().map(|(i, &a)| a * (i + 1) as f64 * cell).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ns_solver::taylor_green_init;

    fn static_series(u: GridField, times: &[f64]) -> FieldSeries {
        FieldSeries::new(times.iter().map(|&t| u.clone().with_time(t)).collect()).unwrap()
    }

    #[test]
    fn mollifier_symbol_matches_quadrature() {
        let k = Mollifier::standard();
        assert!((k.symbol(0.0) - 1.0).abs() < 1e-15);
        // Direct 3D midpoint quadrature of the cosine transform along one axis.
        let xi = 3.0;
        let m = 80;
        let d = 2.0 / m as f64;
        let mut direct = 0.0;
        for i in 0..m {
            for j in 0..m {
                for l in 0..m {
                    let p = [-1.0 + (i as f64 + 0.5) * d, -1.0 + (j as f64 + 0.5) * d, -1.0 + (l as f64 + 0.5) * d];
                    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    direct += k.profile(r) * (xi * p[0]).cos() * d * d * d;
                }
            }
        }
        assert!((direct - k.symbol(xi)).abs() < 1e-6, "{direct} {}", k.symbol(xi));
    }

    #[test]
    fn mollify_constant_and_single_mode() {
        let spec = GridSpec::periodic(32).unwrap();
        let k = Mollifier::standard();
        let c = GridField::vector_from_fn(spec, |_| [1.0, -2.0, 0.5]);
        assert!(mollify(&c, 0.5, &k).unwrap().sub(&c).unwrap().max_abs() < 1e-14);
        let f = GridField::scalar_from_fn(spec, |x| (2.0 * x[1]).sin());
        let g = mollify(&f, 0.5, &k).unwrap();
        let want = f.scale(k.symbol(1.0));
        assert!(g.sub(&want).unwrap().max_abs() < 1e-13);
        assert!(matches!(mollify(&f, 0.3, &k), Err(Error::UnderResolved(_))));
    }

    #[test]
    fn mollification_error_is_second_order() {
        let spec = GridSpec::periodic(64).unwrap();
        let k = Mollifier::standard();
        let f = GridField::scalar_from_fn(spec, |x| x[0].sin() + (x[1] + x[2]).cos());
        let e1 = mollify(&f, 0.4, &k).unwrap().sub(&f).unwrap().max_abs();
        let e2 = mollify(&f, 0.8, &k).unwrap().sub(&f).unwrap().max_abs();
        assert!((e2 / e1 - 4.0).abs() < 0.2, "{}", e2 / e1);
    }

    #[test]
    fn uniform_and_zero_transport() {
        let c = [0.3, -0.2, 1.1];
        let tr = trace(&UniformFlow(c), 1.0, [0.1, 0.2, 0.3], &[0.75, 0.5], 3).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.positions) {
            for a in 0..3 {
                let want = [0.1, 0.2, 0.3][a] + c[a] * (t - 1.0);
                assert!((p[a] - want).abs() < 1e-10);
            }
        }
        let spec = GridSpec::periodic(32).unwrap();
        let zero = static_series(GridField::zeros(spec, 3), &[0.0, 0.5, 1.0, 1.5]);
        let tr = integrate_trajectory(&zero, 1.5, [0.4, 0.0, -0.1], 0.4, &Mollifier::standard(), SpatialInterpolation::Trilinear, 8)
            .unwrap();
        assert!(tr.positions.iter().all(|p| *p == [0.4, 0.0, -0.1]));
        let uniform = static_series(GridField::vector_from_fn(spec, |_| c), &[0.0, 0.5, 1.0, 1.5]);
        let tr = integrate_trajectory(&uniform, 1.5, [0.0; 3], 0.4, &Mollifier::standard(), SpatialInterpolation::Trilinear, 8)
            .unwrap();
        let p = tr.positions[0];
        for a in 0..3 {
            assert!((p[a] + c[a] * 9.0 * 0.16).abs() < 1e-10);
        }
        assert!(matches!(
            integrate_trajectory(&uniform, 0.5, [0.0; 3], 0.4, &Mollifier::standard(), SpatialInterpolation::Trilinear, 8),
            Err(Error::TimeRange { .. })
        ));
    }

    #[test]
    fn rk4_trajectory_is_fourth_order() {
        let spec = GridSpec::periodic(32).unwrap();
        let u = GridField::vector_from_fn(spec, |x| [x[1].sin(), x[0].cos(), 0.3]);
        let series = static_series(u, &[0.0, 0.5, 1.0, 1.5, 2.0]);
        let s = SeriesSampler::new(series, SpatialInterpolation::Spectral);
        let end = |steps| trace(&s, 2.0, [0.2, 0.1, 0.0], &[0.0], steps).unwrap().positions[0];
        let (a, b, c) = (end(8), end(16), end(256));
        let ea = (0..3).map(|i| (a[i] - c[i]).abs()).fold(0.0, f64::max);
        let eb = (0..3).map(|i| (b[i] - c[i]).abs()).fold(0.0, f64::max);
        assert!(ea / eb > 12.0, "{}", ea / eb);
    }

    #[test]
    fn spectral_sampling_is_exact() {
        let spec = GridSpec::periodic(16).unwrap();
        let f = GridField::scalar_from_fn(spec, |x| (x[0] + 2.0 * x[2]).sin() + x[1].cos());
        let s = SeriesSampler::new(static_series(f, &[0.0, 1.0]), SpatialInterpolation::Spectral);
        let x: [f64; 3] = [0.123, -1.7, 2.9];
        let want = (x[0] + 2.0 * x[2]).sin() + x[1].cos();
        assert!((s.value(0.5, x).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn cylinder_volume_and_shape() {
        let flow = Flow::uniform([0.0; 3], FlowOptions::default());
        let cyl = flow.cylinder(1.0, [0.5, 0.0, 0.0], 0.2).unwrap();
        let exact = SkewedCylinder::exact_volume(0.2);
        assert!((cyl.volume() - exact).abs() < 1e-3 * exact, "{}", cyl.volume() / exact);
        assert!(cyl.samples.iter().all(|s| s.time < 1.0 && s.time > 1.0 - 0.36));
        let big = flow.cylinder(1.0, [0.5, 0.0, 0.0], 0.4).unwrap();
        for (a, b) in cyl.samples.iter().zip(&big.samples) {
            for q in 0..3 {
                let base = [0.5, 0.0, 0.0][q];
                assert!(((b.position[q] - base) - 2.0 * (a.position[q] - base)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_space_fraction() {
        let flow = Flow::uniform([0.0; 3], FlowOptions::default());
        let cyl = flow.cylinder(1.0, [0.0; 3], 0.3).unwrap();
        let half = FnField(|_t: f64, x: [f64; 3]| if x[0] > 0.0 { 1.0 } else { 0.0 });
        assert!((cylinder_average(&half, &cyl).unwrap() - 0.5).abs() < 1e-2);
        let off = FnField(|_t: f64, x: [f64; 3]| if x[0] > 0.45 { 1.0 } else { 0.0 });
        // Cap of height 3ε − 0.45 = 0.45 on a ball of radius 0.9.
        let (r, h) = (0.9f64, 0.45f64);
        let frac = std::f64::consts::PI * h * h * (3.0 * r - h) / 3.0 / (4.0 / 3.0 * std::f64::consts::PI * r.powi(3));
        assert!((cylinder_average(&off, &cyl).unwrap() - frac).abs() < 1e-2);
        let c = FnField(|_t: f64, _x: [f64; 3]| -2.5);
        let avg = cylinder_average(&c, &cyl).unwrap();
        assert!((avg - 2.5).abs() < 1e-12, "{avg}");
    }

    #[test]
    fn maximal_constant_and_pointwise_bound() {
        let spec = GridSpec::periodic(16).unwrap();
        let c = GridField::scalar_from_fn(spec, |_| -1.5);
        assert!(hl_maximal(&c).unwrap().sub(&c.map(f64::abs)).unwrap().max_abs() < 1e-12);
        let f = GridField::scalar_from_fn(spec, |x| (x[0] * 2.0).sin() * x[1].cos());
        let m = hl_maximal(&f).unwrap();
        assert!(m.data().iter().zip(f.data()).all(|(a, b)| *a >= b.abs()));
    }

    #[test]
    fn spike_matches_brute_force() {
        let spec = GridSpec::periodic(16).unwrap();
        let mut f = GridField::zeros(spec, 1);
        let mass = 3.0;
        f.data_mut()[spec.index(4, 5, 6)] = mass;
        let ladder = default_radius_ladder(&spec);
        let m = hl_maximal_with(&f, &ladder).unwrap();
        for idx in [[4, 5, 6], [6, 5, 6], [12, 1, 0], [4, 9, 6]] {
            let brute = ladder.iter().map(|&r| ball_average(&f, idx, r)).fold(0.0, f64::max);
            assert!((m.data()[spec.index(idx[0], idx[1], idx[2])] - brute).abs() < 1e-12);
        }
        let coarse = hl_maximal_with(&f, &ladder[..2]).unwrap();
        assert!(m.data().iter().zip(coarse.data()).all(|(a, b)| *a >= *b - 1e-15));
    }

    #[test]
    fn zero_flow_always_admissible() {
        let spec = GridSpec::periodic(32).unwrap();
        let zero = static_series(GridField::zeros(spec, 3), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        let flow = Flow::new(zero, FlowOptions::default()).unwrap();
        for e in [0.4, 0.45] {
            let cyl = flow.cylinder(2.0, [0.0; 3], e).unwrap();
            assert!(flow.admissible(&cyl, 1e-12).unwrap());
        }
        let early = FnField(|_t: f64, _x: [f64; 3]| 1.0);
        let q = flow.q_maximal(&early, 1.0, [0.0; 3], &[0.4], &AdmissibilityThresholds::default());
        assert!(matches!(q, Err(Error::Coverage(_))));
    }

    #[test]
    fn admissibility_fails_for_scaled_gradients() {
        let spec = GridSpec::periodic(32).unwrap();
        let times = [0.0, 0.5, 1.0, 1.5, 2.0];
        let u = taylor_green_init(spec, 0.05);
        let a = Flow::new(static_series(u.clone(), &times), FlowOptions::default()).unwrap();
        let b = Flow::new(static_series(u.scale(3.0), &times), FlowOptions::default()).unwrap();
        let (ca, cb) = (a.cylinder(2.0, [0.2; 3], 0.4).unwrap(), b.cylinder(2.0, [0.2; 3], 0.4).unwrap());
        let (sa, sb) = (a.statistic(&ca).unwrap(), b.statistic(&cb).unwrap());
        assert!(sb > sa);
        let eta = 0.5 * (sa + sb);
        assert!(a.admissible(&ca, eta).unwrap() && !b.admissible(&cb, eta).unwrap());
    }

    #[test]
    fn q_maximal_of_constant() {
        let flow = Flow::uniform([0.1, 0.0, 0.0], FlowOptions::default());
        let c = FnField(|_t: f64, _x: [f64; 3]| 4.0);
        let q = flow.q_maximal(&c, 1.0, [0.0; 3], &[0.1, 0.2, 0.3], &AdmissibilityThresholds::default()).unwrap();
        assert!((q.value - 4.0).abs() < 1e-12 && q.admissible_count == 3 && !q.fallback);
        let far = flow.q_maximal(&c, 1.0, [0.0; 3], &[0.5], &AdmissibilityThresholds::default());
        assert!(far.is_err());
    }

    #[test]
    fn lebesgue_deviation_is_first_order() {
        let flow = Flow::uniform([0.0; 3], FlowOptions::default());
        let f = FnField(|t: f64, x: [f64; 3]| (x[0] + 0.5 * x[1]).sin() + t);
        let r = flow.lebesgue_check(&f, 1.0, [0.3, 0.1, 0.0], &[0.02, 0.04, 0.08, 0.16]).unwrap();
        assert!(r.decreasing);
        assert!((r.slope - 1.0).abs() < 0.2, "{}", r.slope);
        let jump = FnField(|_t: f64, x: [f64; 3]| if x[0] > 0.0 { 1.0 } else { 0.0 });
        let r = flow.lebesgue_check(&jump, 1.0, [0.0; 3], &[0.02, 0.04, 0.08]).unwrap();
        assert!(r.deviations.iter().all(|d| *d > 0.4));
    }

    #[test]
    fn weak_type_of_indicator() {
        let v = [1.0, 1.0, 0.0, 0.0];
        assert!((weak_type_constant(&v, 0.5) - 1.0).abs() < 1e-15);
    }
}
