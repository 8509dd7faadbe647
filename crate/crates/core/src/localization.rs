//! Localized vorticity variable `v = −curl φ♯ Δ⁻¹ φ ω`, its remainders, the
//! commutators behind its equation, and the `B`, `L`, `W` source terms.
//!
//! Everything lives on the periodic grid. Balls are measured in units of a
//! [`LocalFrame`] length around its centre.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::random::random_band_limited;
use crate::grid_spectral::{
    curl, dealias, divergence, gradient, inv_lap, inverse_laplacian, laplacian, project_curl, project_grad,
    riesz_r, GridField, GridSpec,
};
use crate::ns_solver::{LocalEnergyResidual, TestFunction};
use crate::series::FieldSeries;

/// Plateau and support radii of `φ` and `φ♯`.
pub const DEFAULT_RADII: [f64; 4] = [6.0 / 5.0, 5.0 / 4.0, 4.0 / 3.0, 3.0 / 2.0];

/// Centre and length unit of the balls `B_r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub center: [f64; 3],
    pub length: f64,
}

impl Default for LocalFrame {
    fn default() -> Self {
        Self { center: [0.0; 3], length: 1.0 }
    }
}

impl LocalFrame {
    pub fn new(center: [f64; 3], length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!("frame length {length} must be positive")));
        }
        Ok(Self { center, length })
    }

    /// Periodic distance from the centre in frame units.
    pub fn radius(&self, spec: &GridSpec, x: [f64; 3]) -> f64 {
        spec.distance(x, self.center) / self.length
    }

    /// Frame radius of every grid point.
    pub fn radii(&self, spec: &GridSpec) -> Vec<f64> {
        (0..spec.points()).map(|i| self.radius(spec, spec.position_of(i))).collect()
    }

    /// Grid points of the open ball `B_r`.
    pub fn ball(&self, spec: &GridSpec, r: f64) -> Vec<bool> {
        self.radii(spec).into_iter().map(|s| s < r).collect()
    }
}

/// `C^∞` step from 1 (`s ≤ 0`) to 0 (`s ≥ 1`) built from `exp(−σ/s)`.
pub fn smooth_step(s: f64, sharpness: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let a = |t: f64| (-sharpness / t).exp();
    let (lo, hi) = (a(s), a(1.0 - s));
    hi / (lo + hi)
}

/// Radial cutoffs with `1_{B_{r0}} ≤ φ ≤ 1_{B_{r1}}` and `1_{B_{r2}} ≤ φ♯ ≤ 1_{B_{r3}}`.
#[derive(Clone, Debug)]
pub struct CutoffPair {
    pub phi: GridField,
    pub phi_sharp: GridField,
    pub radii: [f64; 4],
    pub sharpness: f64,
    pub frame: LocalFrame,
}

impl CutoffPair {
    /// `(‖∇φ‖∞, ‖∇φ♯‖∞)` by spectral differentiation.
    pub fn gradient_sup(&self) -> Result<(f64, f64)> {
        Ok((gradient(&self.phi)?.magnitude().max_abs(), gradient(&self.phi_sharp)?.magnitude().max_abs()))
    }

    pub fn spec(&self) -> &GridSpec {
        self.phi.spec()
    }
}

/// Cutoff pair around the origin with unit length.
pub fn make_cutoff_pair(spec: GridSpec, radii: [f64; 4], sharpness: f64) -> Result<CutoffPair> {
    make_cutoff_pair_in(spec, radii, sharpness, LocalFrame::default())
}

pub fn make_cutoff_pair_in(spec: GridSpec, radii: [f64; 4], sharpness: f64, frame: LocalFrame) -> Result<CutoffPair> {
    if !(radii[0] > 0.0 && radii.windows(2).all(|w| w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!("radii {radii:?} must increase strictly")));
    }
    if !(sharpness > 0.0) {
        return Err(Error::InvalidArgument(format!("sharpness {sharpness} must be positive")));
    }
    if radii[3] * frame.length >= 0.5 * spec.length {
        return Err(Error::InvalidArgument(format!(
            "support radius {} reaches the periodic boundary at {}",
            radii[3] * frame.length,
            0.5 * spec.length
        )));
    }
    let profile = |inner: f64, outer: f64| {
        GridField::scalar_from_fn(spec, |x| smooth_step((frame.radius(&spec, x) - inner) / (outer - inner), sharpness))
    };
    Ok(CutoffPair {
        phi: profile(radii[0], radii[1]),
        phi_sharp: profile(radii[2], radii[3]),
        radii,
        sharpness,
        frame,
    })
}

/// `φu = v + w` and `φω = curl v + ϖ`.
#[derive(Clone, Debug)]
pub struct LocalizedTriple {
    pub v: GridField,
    pub w: GridField,
    pub varpi: GridField,
    /// Mean of `φω` dropped by the periodic inverse Laplacian.
    pub discarded_mean: Vec<f64>,
}

/// `v = −curl φ♯ Δ⁻¹(φ ω)`.
pub fn localized_v(u: &GridField, cutoffs: &CutoffPair) -> Result<(GridField, Vec<f64>)> {
    u.expect_components(3)?;
    let omega = curl(u)?;
    let inv = inverse_laplacian(&omega.mul_scalar(&cutoffs.phi)?);
    let v = curl(&inv.field.mul_scalar(&cutoffs.phi_sharp)?)?.scale(-1.0);
    Ok((v.with_time(u.time()), inv.discarded_mean))
}

pub fn localized_velocity(u: &GridField, cutoffs: &CutoffPair) -> Result<LocalizedTriple> {
    let (v, discarded_mean) = localized_v(u, cutoffs)?;
    let omega = curl(u)?;
    let w = u.mul_scalar(&cutoffs.phi)?.sub(&v)?;
    let varpi = omega.mul_scalar(&cutoffs.phi)?.sub(&curl(&v)?)?;
    Ok(LocalizedTriple { v, w, varpi, discarded_mean })
}

/// `‖f‖_{L¹(B_r)}` of the pointwise magnitude.
pub fn ball_l1(field: &GridField, frame: &LocalFrame, r: f64) -> f64 {
    let spec = field.spec();
    let m = field.magnitude();
    let ball = frame.ball(spec, r);
    spec.cell_volume() * m.data().iter().zip(&ball).filter(|(_, b)| **b).map(|(v, _)| v).sum::<f64>()
}

/// `‖f‖_{L²(B_r)}`.
pub fn ball_l2(field: &GridField, frame: &LocalFrame, r: f64) -> f64 {
    let spec = field.spec();
    let ball = frame.ball(spec, r);
    let mut sum = 0.0;
    for c in 0..field.components() {
        sum += field.component(c).iter().zip(&ball).filter(|(_, b)| **b).map(|(v, _)| v * v).sum::<f64>();
    }
    (sum * spec.cell_volume()).sqrt()
}

/// `max_{B_r} |Δf| / scale`, for `r < 1`.
pub fn harmonicity_residual(field: &GridField, frame: &LocalFrame, region_radius: f64, scale: f64) -> Result<f64> {
    if !(region_radius > 0.0 && region_radius < 1.0) {
        return Err(Error::InvalidArgument(format!("region radius {region_radius} must lie in (0, 1)")));
    }
    let lap = laplacian(field)?;
    let ball = frame.ball(field.spec(), region_radius);
    let mut max = 0.0f64;
    for c in 0..lap.components() {
        for (v, b) in lap.component(c).iter().zip(&ball) {
            if *b {
                max = max.max(v.abs());
            }
        }
    }
    Ok(if scale > 0.0 { max / scale } else { max })
}

/// Harmonicity residuals of `w` and `ϖ`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Harmonicity {
    pub w: f64,
    pub varpi: f64,
    /// `‖ω‖_{L¹(B₂)}`.
    pub scale: f64,
}

/// Residuals of `w` and `ϖ` on `B_r`, normalized by `‖ω‖_{L¹(B₂)}`.
pub fn harmonicity(u: &GridField, cutoffs: &CutoffPair, region_radius: f64) -> Result<Harmonicity> {
    let triple = localized_velocity(u, cutoffs)?;
    let scale = ball_l1(&curl(u)?, &cutoffs.frame, 2.0);
    Ok(Harmonicity {
        w: harmonicity_residual(&triple.w, &cutoffs.frame, region_radius, scale)?,
        varpi: harmonicity_residual(&triple.varpi, &cutoffs.frame, region_radius, scale)?,
        scale,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommutatorKind {
    /// `[φ, curl]u = −∇φ × u`.
    Cm1,
    /// `[φ, Δ]u = −2∇φ·∇u − (Δφ)u`.
    Cm2,
    /// `[φ, Δ⁻¹]u = Δ⁻¹{2∇φ·∇Δ⁻¹u + (Δφ)Δ⁻¹u}`.
    Cm3,
    /// `[φ, P_curl]u`, expanded.
    Cm4,
}

impl CommutatorKind {
    pub const ALL: [CommutatorKind; 4] = [Self::Cm1, Self::Cm2, Self::Cm3, Self::Cm4];
}

/// Both sides of a commutator identity, filtered to the 2/3 band.
#[derive(Clone, Debug)]
pub struct Commutator {
    pub kind: CommutatorKind,
    /// The operator difference applied to `u`.
    pub direct: GridField,
    /// The closed-form right side.
    pub closed_form: GridField,
    /// Zero-mode terms the torus adds to the whole-space identity.
    pub torus_correction: GridField,
    /// The divergence form of `cm2`.
    pub alternate: Option<GridField>,
}

fn relative_gap(a: &GridField, b: &GridField) -> f64 {
    let scale = a.norm_l2().max(b.norm_l2());
    let gap = a.sub(b).expect("same shape").norm_l2();
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}

impl Commutator {
    /// `‖direct − closed − correction‖ / max(‖direct‖, ‖closed + correction‖)`.
    pub fn residual(&self) -> f64 {
        relative_gap(&self.direct, &self.closed_form.add(&self.torus_correction).expect("same shape"))
    }

    pub fn alternate_residual(&self) -> Option<f64> {
        self.alternate.as_ref().map(|alt| relative_gap(alt, &self.closed_form))
    }
}

/// `Σ_b ∂_bφ ∂_b f_a` for scalar or vector `f`.
fn grad_dot(grad_phi: &GridField, f: &GridField) -> Result<GridField> {
    let spec = *f.spec();
    let np = spec.points();
    let g = gradient(f)?;
    let mut data = vec![0.0; f.components() * np];
    for a in 0..f.components() {
        let out = &mut data[a * np..(a + 1) * np];
        for b in 0..3 {
            let (d, p) = (g.component(a * 3 + b), grad_phi.component(b));
            for i in 0..np {
                out[i] += p[i] * d[i];
            }
        }
    }
    GridField::new(spec, f.components(), data)
}

fn constant_like(f: &GridField, values: &[f64]) -> GridField {
    let mut out = GridField::zeros(*f.spec(), f.components());
    for (c, v) in values.iter().enumerate() {
        out = out.shift_component(c, *v);
    }
    out
}

pub fn commutator(kind: CommutatorKind, phi: &GridField, u: &GridField) -> Result<Commutator> {
    phi.expect_components(1)?;
    phi.spec().check_same(u.spec())?;
    match kind {
        CommutatorKind::Cm1 | CommutatorKind::Cm4 => u.expect_components(3)?,
        _ => {
            if !matches!(u.components(), 1 | 3) {
                return Err(Error::ComponentMismatch { expected: 3, found: u.components() });
            }
        }
    }
    let grad_phi = gradient(phi)?;
    let lap_phi = laplacian(phi)?;
    let zero = GridField::zeros(*u.spec(), u.components());
    let (direct, closed, correction, alternate) = match kind {
        CommutatorKind::Cm1 => {
            let direct = curl(u)?.mul_scalar(phi)?.sub(&curl(&u.mul_scalar(phi)?)?)?;
            (direct, grad_phi.cross(u)?.scale(-1.0), zero, None)
        }
        CommutatorKind::Cm2 => {
            let direct = laplacian(u)?.mul_scalar(phi)?.sub(&laplacian(&u.mul_scalar(phi)?)?)?;
            let lap_u = u.mul_scalar(&lap_phi)?;
            let closed = grad_dot(&grad_phi, u)?.scale(-2.0).sub(&lap_u)?;
            let flux = if u.components() == 3 { u.outer(&grad_phi)? } else { grad_phi.mul_scalar(u)? };
            let alternate = divergence(&flux)?.scale(-2.0).add(&lap_u)?;
            (direct, closed, zero, Some(dealias(&alternate)))
        }
        CommutatorKind::Cm3 => {
            let g = inv_lap(u);
            let phi_g = g.mul_scalar(phi)?;
            let direct = phi_g.sub(&inv_lap(&u.mul_scalar(phi)?))?;
            let inner = grad_dot(&grad_phi, &g)?.scale(2.0).add(&g.mul_scalar(&lap_phi)?)?;
            let closed = inv_lap(&inner);
            let inv_phi = inv_lap(phi);
            let mean_u = u.mean();
            let mut correction = constant_like(u, &phi_g.mean());
            for (c, m) in mean_u.iter().enumerate() {
                let part = correction.component_mut(c);
                for (p, q) in part.iter_mut().zip(inv_phi.data()) {
                    *p -= m * q;
                }
            }
            (direct, closed, correction, None)
        }
        CommutatorKind::Cm4 => {
            let direct = project_curl(u)?.mul_scalar(phi)?.sub(&project_curl(&u.mul_scalar(phi)?)?)?;
            let g = inv_lap(u);
            let div_g = divergence(&g)?;
            let hess_phi = gradient(&grad_phi)?;
            let inner = grad_dot(&grad_phi, &g)?.scale(2.0).add(&g.mul_scalar(&lap_phi)?)?;
            let closed = grad_phi
                .cross(&curl(&g)?)?
                .add(&grad_phi.mul_scalar(&div_g)?)?
                .sub(&g.mul_scalar(&lap_phi)?)?
                .add(&hess_phi.directional(&g)?)?
                .sub(&grad_dot(&grad_phi, &g)?)?
                .add(&project_curl(&inner)?)?;
            let mean_phi_u = constant_like(u, &u.mean()).mul_scalar(phi)?;
            (direct, closed, project_curl(&mean_phi_u)?.scale(-1.0), None)
        }
    };
    Ok(Commutator {
        kind,
        direct: dealias(&direct),
        closed_form: dealias(&closed),
        torus_correction: dealias(&correction),
        alternate,
    })
}

/// Source terms of the `v`-equation for unit viscosity.
#[derive(Clone, Debug)]
pub struct SourceTerms {
    /// Quadratic commutator `B`.
    pub quadratic: GridField,
    /// Linear commutator `L`, in operator form.
    pub linear: GridField,
    /// Remainder term `W`.
    pub remainder: GridField,
    /// `L` through the `cm2` expansion; a diagnostic that needs resolved cutoffs.
    pub linear_expanded: GridField,
}

pub fn source_terms(u: &GridField, cutoffs: &CutoffPair) -> Result<SourceTerms> {
    u.expect_components(3)?;
    let (phi, phi_sharp) = (&cutoffs.phi, &cutoffs.phi_sharp);
    let omega = curl(u)?;
    let triple = localized_velocity(u, cutoffs)?;
    let x = dealias(&omega.cross(u)?);
    let outside = phi_sharp.map(|s| 1.0 - s);
    let grad_phi = gradient(phi)?;

    let far = curl(&inv_lap(&curl(&x)?.mul_scalar(phi)?).mul_scalar(&outside)?)?;
    let near = curl(&inv_lap(&grad_phi.cross(&x)?.scale(-1.0)))?;
    let quadratic = near.sub(&far)?;

    let lap_omega = laplacian(&omega)?;
    let linear = curl(&inv_lap(&lap_omega.mul_scalar(phi)?).mul_scalar(phi_sharp)?)?
        .scale(-1.0)
        .sub(&laplacian(&triple.v)?)?;

    let g = inv_lap(&omega.mul_scalar(phi)?);
    let grad_sharp = gradient(phi_sharp)?;
    let sharp_comm = grad_dot(&grad_sharp, &g)?.scale(-2.0).sub(&g.mul_scalar(&laplacian(phi_sharp)?)?)?;
    let lap_phi = laplacian(phi)?;
    let inner = divergence(&omega.outer(&grad_phi)?)?.scale(2.0).sub(&omega.mul_scalar(&lap_phi)?)?;
    let linear_expanded =
        curl(&sharp_comm)?.scale(-1.0).add(&curl(&inv_lap(&inner).mul_scalar(phi_sharp)?)?)?;

    let omega_w = omega.cross(&triple.w)?;
    let remainder = project_grad(&triple.varpi.cross(u)?.add(&omega_w)?)?.scale(0.5).sub(&omega_w)?;

    let t = u.time();
    Ok(SourceTerms {
        quadratic: quadratic.with_time(t),
        linear: linear.with_time(t),
        remainder: remainder.with_time(t),
        linear_expanded: linear_expanded.with_time(t),
    })
}

/// `‖D(∂t v + ω×v + ∇R(u⊗v) − B − L − W − Δv)‖_{L²(B₁)}` at one frame.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VEquationResidual {
    pub time: f64,
    pub residual: f64,
    /// Largest `L²(B₁)` norm among the individual terms.
    pub scale: f64,
}

impl VEquationResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// Residual of the `v`-equation at every frame with a centred five-point stencil.
///
/// `∂t v` is the fourth-order difference of `v` over uniformly spaced velocity frames.
pub fn v_equation_residual(velocity: &FieldSeries, cutoffs: &CutoffPair) -> Result<Vec<VEquationResidual>> {
    if velocity.len() < 5 {
        return Err(Error::TooFewSnapshots { needed: 5, found: velocity.len() });
    }
    let vs = velocity.map(|u| Ok(localized_v(u, cutoffs)?.0))?;
    let frame = &cutoffs.frame;
    let mut out = Vec::new();
    for i in 2..velocity.len() - 2 {
        let u = velocity.frame(i);
        let v = vs.frame(i);
        let dv = vs.time_derivative(i)?;
        let omega = curl(u)?;
        let s = source_terms(u, cutoffs)?;
        let terms = [
            dv,
            omega.cross(v)?,
            gradient(&riesz_r(&u.outer(v)?)?)?,
            s.quadratic.scale(-1.0),
            s.linear.scale(-1.0),
            s.remainder.scale(-1.0),
            laplacian(v)?.scale(-1.0),
        ];
        let mut total = GridField::zeros(*u.spec(), 3);
        let mut scale = 0.0f64;
        for t in &terms {
            total = total.add(t)?;
            scale = scale.max(ball_l2(&dealias(t), frame, 1.0));
        }
        out.push(VEquationResidual { time: u.time(), residual: ball_l2(&dealias(&total), frame, 1.0), scale });
    }
    Ok(out)
}

/// Local energy balance of `v` tested against `ψ`, for unit viscosity:
/// `∫∫ |∇v|²ψ − |v|²/2 (∂tψ + Δψ) − R(u⊗v) v·∇ψ − v·(B+L+W) ψ`.
pub fn v_local_energy_residual(
    velocity: &FieldSeries,
    cutoffs: &CutoffPair,
    test_fn: &TestFunction,
) -> Result<LocalEnergyResidual> {
    if velocity.len() < 3 {
        return Err(Error::TooFewSnapshots { needed: 3, found: velocity.len() });
    }
    let (a, b) = test_fn.window;
    velocity.check_time(a)?;
    velocity.check_time(b)?;
    let rho = &test_fn.spatial;
    let grad_rho = gradient(rho)?;
    let lap_rho = laplacian(rho)?;
    let dv = rho.spec().cell_volume();
    let weights = velocity.trapezoid_weights();
    let mut value = 0.0;
    let mut dissipation = 0.0;
    for (u, w) in velocity.frames().iter().zip(weights) {
        let chi = test_fn.time_profile(u.time());
        let chi_t = test_fn.time_profile_rate(u.time());
        if chi == 0.0 && chi_t == 0.0 {
            continue;
        }
        let v = localized_v(u, cutoffs)?.0;
        let grad_v = gradient(&v)?;
        let head = riesz_r(&u.outer(&v)?)?;
        let s = source_terms(u, cutoffs)?;
        let source = s.quadratic.add(&s.linear)?.add(&s.remainder)?;
        let v2 = v.dot(&v)?;
        let flux = v.dot(&grad_rho)?;
        let work = v.dot(&source)?;
        let mut diss = 0.0;
        let mut rest = 0.0;
        for i in 0..v2.data().len() {
            let g2: f64 = (0..9).map(|c| grad_v.component(c)[i].powi(2)).sum();
            let e = 0.5 * v2.data()[i];
            diss += g2 * chi * rho.data()[i];
            rest += e * (chi_t * rho.data()[i] + chi * lap_rho.data()[i])
                + head.data()[i] * chi * flux.data()[i]
                + work.data()[i] * chi * rho.data()[i];
        }
        dissipation += w * diss * dv;
        value += w * (diss - rest) * dv;
    }
    Ok(LocalEnergyResidual { value, dissipation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// `∂_i [φ, P_curl]`.
    DiCommutatorPcurl,
    /// `[φ, P_curl] ∂_i`.
    CommutatorPcurlDi,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub kind: ProbeKind,
    pub p: f64,
    /// Largest `‖Tu‖_p / ‖u‖_p` seen after each trial.
    pub running_max: Vec<f64>,
}

impl BoundednessReport {
    pub fn estimate(&self) -> f64 {
        self.running_max.last().copied().unwrap_or(0.0)
    }
}

/// `(h³ Σ |f|^p)^{1/p}` of the pointwise magnitude.
pub fn lp_norm(field: &GridField, p: f64) -> f64 {
    let m = field.magnitude();
    (field.spec().cell_volume() * m.data().iter().map(|v| v.powf(p)).sum::<f64>()).powf(1.0 / p)
}

fn phi_pcurl_commutator(phi: &GridField, u: &GridField) -> Result<GridField> {
    project_curl(u)?.mul_scalar(phi)?.sub(&project_curl(&u.mul_scalar(phi)?)?)
}

fn axis_derivative(f: &GridField, axis: usize) -> Result<GridField> {
    let g = gradient(f)?;
    let parts: Vec<GridField> = (0..3).map(|a| g.extract(a * 3 + axis)).collect();
    GridField::stack([&parts[0], &parts[1], &parts[2]])
}

/// Empirical `L^p` operator norm over random band-limited inputs, maximized over axes.
///
/// Inputs use a fixed mode band, so one seed gives the same functions on every grid.
pub fn boundedness_probe<R: Rng + ?Sized>(
    kind: ProbeKind,
    phi: &GridField,
    p: f64,
    trials: usize,
    band: usize,
    rng: &mut R,
) -> Result<BoundednessReport> {
    phi.expect_components(1)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (1, ∞)")));
    }
    let spec = *phi.spec();
    let mut best = 0.0f64;
    let mut running_max = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = random_band_limited(spec, 3, band, rng);
        let norm = lp_norm(&u, p);
        for axis in 0..3 {
            let out = match kind {
                ProbeKind::DiCommutatorPcurl => axis_derivative(&phi_pcurl_commutator(phi, &u)?, axis)?,
                ProbeKind::CommutatorPcurlDi => phi_pcurl_commutator(phi, &axis_derivative(&u, axis)?)?,
            };
            if norm > 0.0 {
                best = best.max(lp_norm(&out, p) / norm);
            }
        }
        running_max.push(best);
    }
    Ok(BoundednessReport { kind, p, running_max })
}

/// `‖Δ⁻¹(φf)‖_{C²(B_r(x))} / ‖f‖_{L¹(supp φ)}` for a probe ball away from `supp φ`.
pub fn smoothing_ratio(phi: &GridField, f: &GridField, probe: &LocalFrame, probe_radius: f64) -> Result<f64> {
    phi.expect_components(1)?;
    f.expect_components(1)?;
    let spec = *phi.spec();
    let g = inv_lap(&f.mul_scalar(phi)?);
    let dg = gradient(&g)?;
    let d2g = gradient(&dg)?;
    let ball = probe.ball(&spec, probe_radius);
    let mut c2 = 0.0f64;
    for i in (0..spec.points()).filter(|&i| ball[i]) {
        c2 = c2.max(g.data()[i].abs());
        let grad = (0..3).map(|c| dg.component(c)[i].powi(2)).sum::<f64>().sqrt();
        let hess = (0..9).map(|c| d2g.component(c)[i].powi(2)).sum::<f64>().sqrt();
        c2 = c2.max(grad).max(hess);
    }
    let l1: f64 = spec.cell_volume()
        * f.data().iter().zip(phi.data()).filter(|(_, p)| **p > 0.0).map(|(v, _)| v.abs()).sum::<f64>();
    if l1 == 0.0 {
        return Err(Error::InvalidArgument("f vanishes on the support of φ".into()));
    }
    Ok(c2 / l1)
}
