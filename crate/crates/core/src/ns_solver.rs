//! Pseudo-spectral incompressible Navier-Stokes on the periodic cube.
//!
//! The rotational form `∂t u = −P_curl(ω × u) + ν Δu` is advanced with
//! integrating-factor RK4, so diffusion is integrated exactly.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{
    divergence, gradient, inverse_transform, riesz_r, spectral_curl, spectral_dealias,
    spectral_project_curl, transform, GridField, GridSpec, SpectralField, Wavenumbers,
};
use crate::series::{trapezoid_weights, FieldSeries};

/// Diffusive stability bound of explicit RK4, reported for reference.
pub const RK4_DIFFUSIVE_LIMIT: f64 = 2.8;

/// Growth of `max |û|` over its initial value that counts as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub viscosity: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub snapshot_stride: usize,
}

impl SolverConfig {
    pub fn new(grid: GridSpec, dt: f64, t_end: f64) -> Self {
        Self { grid, viscosity: 1.0, dt, t_end, dealias: true, snapshot_stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity {} must be positive", self.viscosity)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_end {} must be nonnegative", self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot_stride must be positive".into()));
        }
        Ok(())
    }

    /// `dt · k_max² · ν`; irrelevant to stability here because diffusion is exact.
    pub fn diffusive_number(&self) -> f64 {
        let kmax = std::f64::consts::PI * self.grid.n as f64 / self.grid.length;
        self.dt * 3.0 * kmax * kmax * self.viscosity
    }

    /// Number of steps and the step actually used to land on `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

/// Velocity at one instant with its energy pair.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub velocity: GridField,
    pub time: f64,
    pub kinetic_energy: f64,
    pub enstrophy: f64,
}

impl Snapshot {
    pub fn new(velocity: GridField) -> Result<Self> {
        velocity.expect_components(3)?;
        let s = transform(&velocity);
        let time = velocity.time();
        Ok(Self {
            kinetic_energy: kinetic_energy(&s),
            enstrophy: enstrophy(&s),
            velocity,
            time,
        })
    }
}

/// `A (sin x cos y cos z, −cos x sin y cos z, 0)`.
pub fn taylor_green_init(spec: GridSpec, amplitude: f64) -> GridField {
    GridField::vector_from_fn(spec, |x| {
        [
            amplitude * x[0].sin() * x[1].cos() * x[2].cos(),
            -amplitude * x[0].cos() * x[1].sin() * x[2].cos(),
            0.0,
        ]
    })
}

/// `½‖u‖²` by Parseval.
pub fn kinetic_energy(u_hat: &SpectralField) -> f64 {
    0.5 * u_hat.norm_l2().powi(2)
}

/// `‖∇u‖²` by Parseval.
pub fn enstrophy(u_hat: &SpectralField) -> f64 {
    weighted_sum(u_hat, |k2| k2, |c| c.norm_sqr())
}

fn weighted_sum(
    s: &SpectralField,
    weight: impl Fn(f64) -> f64,
    value: impl Fn(Complex64) -> f64,
) -> f64 {
    let spec = *s.spec();
    let k = Wavenumbers::new(&spec);
    let mut total = 0.0;
    for c in 0..s.components() {
        let coeffs = s.component(c);
        SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
            let kk = k.at(kx, ky, kz);
            let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
            total += s.multiplicity(kx) * weight(k2) * value(coeffs[idx]);
        });
    }
    total * spec.volume()
}

/// Integrating-factor RK4 integrator holding the spectral state.
pub struct Solver {
    config: SolverConfig,
    dt: f64,
    u_hat: SpectralField,
    time: f64,
    full: Vec<f64>,
    half: Vec<f64>,
    k2: Vec<f64>,
    initial_max: f64,
    t_start: f64,
    steps_taken: usize,
}

impl Solver {
    pub fn new(config: SolverConfig, u0: &GridField) -> Result<Self> {
        config.validate()?;
        u0.expect_components(3)?;
        config.grid.check_same(u0.spec())?;
        let mut u_hat = transform(u0);
        let scale = u_hat.norm_l2();
        let div = transform(&divergence(u0)?).norm_l2();
        if div > 1e-8 * scale.max(f64::MIN_POSITIVE) && div > 1e-14 {
            return Err(Error::InvalidArgument(format!("initial velocity not divergence-free ({div:e})")));
        }
        if config.dealias {
            spectral_dealias(&mut u_hat);
        }
        let (_, dt) = config.schedule();
        let spec = config.grid;
        let k = Wavenumbers::new(&spec);
        let mut k2 = vec![0.0; spec.spectral_points()];
        SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
            let kk = k.at(kx, ky, kz);
            k2[idx] = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
        });
        let nu = config.viscosity;
        let full = k2.iter().map(|q| (-nu * q * dt).exp()).collect();
        let half = k2.iter().map(|q| (-0.5 * nu * q * dt).exp()).collect();
        let initial_max = u_hat.max_abs();
        Ok(Self { time: u0.time(), config, dt, u_hat, full, half, k2, initial_max, t_start: u0.time(), steps_taken: 0 })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Step length after fitting the schedule to `t_end`.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spectral(&self) -> &SpectralField {
        &self.u_hat
    }

    pub fn velocity(&self) -> GridField {
        inverse_transform(&self.u_hat).with_time(self.time)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            velocity: self.velocity(),
            time: self.time,
            kinetic_energy: kinetic_energy(&self.u_hat),
            enstrophy: enstrophy(&self.u_hat),
        }
    }

    /// `−P_curl D(ω × u)` in spectral space.
    pub fn nonlinear(&self, u_hat: &SpectralField) -> SpectralField {
        let u = inverse_transform(u_hat);
        let w = inverse_transform(&spectral_curl(u_hat).expect("three components"));
        let mut x = transform(&w.cross(&u).expect("matching fields"));
        if self.config.dealias {
            spectral_dealias(&mut x);
        }
        spectral_project_curl(&x).expect("three components").scale(-1.0)
    }

    /// Full right-hand side `∂t û` of the current state.
    pub fn rate(&self) -> SpectralField {
        let mut r = self.nonlinear(&self.u_hat);
        self.add_viscous(&mut r, &self.u_hat);
        r
    }

    fn add_viscous(&self, r: &mut SpectralField, u_hat: &SpectralField) {
        let m = self.k2.len();
        let nu = self.config.viscosity;
        for c in 0..3 {
            let src = u_hat.component(c);
            let dst = &mut r.coeffs_mut()[c * m..(c + 1) * m];
            for i in 0..m {
                dst[i] -= nu * self.k2[i] * src[i];
            }
        }
    }

    /// `d/dt ‖∇u‖² = 2 Σ k² Re(û* ∂t û)` for a given rate.
    pub fn enstrophy_rate(&self, rate: &SpectralField) -> f64 {
        let spec = *self.u_hat.spec();
        let m = self.k2.len();
        let nh = spec.half();
        let mut total = 0.0;
        for c in 0..3 {
            let u = self.u_hat.component(c);
            let r = rate.component(c);
            for i in 0..m {
                total += self.u_hat.multiplicity(i % nh) * self.k2[i] * (u[i].conj() * r[i]).re;
            }
        }
        2.0 * total * spec.volume()
    }

    fn apply(&self, factor: &[f64], s: &SpectralField) -> SpectralField {
        let m = factor.len();
        let mut out = s.clone();
        for c in 0..3 {
            for (v, f) in out.coeffs_mut()[c * m..(c + 1) * m].iter_mut().zip(factor) {
                *v *= f;
            }
        }
        out
    }

    /// Advances one step; returns the energy pair and enstrophy rate at the start of the step.
    pub fn step(&mut self) -> Result<StepStart> {
        let dt = self.dt;
        let u = &self.u_hat;
        let n0 = self.nonlinear(u);
        let a = n0.scale(dt);
        let b = self.nonlinear(&self.apply(&self.half, &u.axpy(0.5, &a)?)).scale(dt);
        let c = self.nonlinear(&self.apply(&self.half, u).axpy(0.5, &b)?).scale(dt);
        let eu = self.apply(&self.full, u);
        let d = self.nonlinear(&eu.add(&self.apply(&self.half, &c))?).scale(dt);
        let incr = self
            .apply(&self.full, &a)
            .axpy(2.0, &self.apply(&self.half, &b.add(&c)?))?
            .add(&d)?
            .scale(1.0 / 6.0);
        let next = eu.add(&incr)?;

        let mut rate = n0;
        self.add_viscous(&mut rate, &self.u_hat);
        let start = StepStart {
            time: self.time,
            kinetic_energy: kinetic_energy(&self.u_hat),
            enstrophy: enstrophy(&self.u_hat),
            enstrophy_rate: self.enstrophy_rate(&rate),
        };

        let peak = next.max_abs();
        let t_next = self.t_start + (self.steps_taken + 1) as f64 * dt;
        if !peak.is_finite() || (self.initial_max > 0.0 && peak > BLOWUP_FACTOR * self.initial_max) {
            return Err(Error::BlowUp { time: t_next });
        }
        self.u_hat = next.with_time(t_next);
        self.time = t_next;
        self.steps_taken += 1;
        Ok(start)
    }
}

/// Energy state of the solver at the start of a step.
#[derive(Clone, Copy, Debug)]
pub struct StepStart {
    pub time: f64,
    pub kinetic_energy: f64,
    pub enstrophy: f64,
    pub enstrophy_rate: f64,
}

/// One integrator step from a snapshot.
pub fn step(state: &Snapshot, config: &SolverConfig) -> Result<Snapshot> {
    let mut solver = Solver::new(config.clone(), &state.velocity.clone().with_time(state.time))?;
    solver.step()?;
    Ok(solver.snapshot())
}

/// Energy bookkeeping at one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub kinetic_energy: f64,
    pub enstrophy: f64,
    pub enstrophy_rate: f64,
    /// `(½‖u‖² + ν∫‖∇u‖² − ½‖u₀‖²) / ‖u₀‖²`; positive values violate the energy inequality.
    pub leray_defect: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub energy: Vec<EnergyRecord>,
}

impl RunOutput {
    pub fn velocity_series(&self) -> Result<FieldSeries> {
        FieldSeries::new(self.snapshots.iter().map(|s| s.velocity.clone().with_time(s.time)).collect())
    }

    pub fn max_leray_defect(&self) -> f64 {
        self.energy.iter().map(|e| e.leray_defect).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Integrates to `t_end`, keeping every `snapshot_stride`-th state and the final one.
pub fn run(config: &SolverConfig, u0: &GridField) -> Result<RunOutput> {
    let mut solver = Solver::new(config.clone(), u0)?;
    let (steps, dt) = config.schedule();
    let mut snapshots = vec![solver.snapshot()];
    let mut raw: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(steps + 1);
    for n in 0..steps {
        let start = solver.step().map_err(|err| {
            log::error!("run aborted at step {n}: {err}");
            err
        })?;
        raw.push((start.time, start.kinetic_energy, start.enstrophy, start.enstrophy_rate));
        if (n + 1) % config.snapshot_stride == 0 || n + 1 == steps {
            snapshots.push(solver.snapshot());
        }
    }
    let last = solver.rate();
    raw.push((
        solver.time(),
        kinetic_energy(solver.spectral()),
        enstrophy(solver.spectral()),
        solver.enstrophy_rate(&last),
    ));
    Ok(RunOutput { snapshots, energy: energy_records(&raw, dt, config.viscosity) })
}

fn energy_records(raw: &[(f64, f64, f64, f64)], dt: f64, nu: f64) -> Vec<EnergyRecord> {
    let e0 = raw[0].1;
    let norm = 2.0 * e0;
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(raw.len());
    for (i, &(t, e, z, dz)) in raw.iter().enumerate() {
        if i > 0 {
            let (_, _, zp, dzp) = raw[i - 1];
            integral += 0.5 * dt * (zp + z) + dt * dt / 12.0 * (dzp - dz);
        }
        let defect = if norm > 0.0 { (e + nu * integral - e0) / norm } else { 0.0 };
        out.push(EnergyRecord { t, kinetic_energy: e, enstrophy: z, enstrophy_rate: dz, leray_defect: defect });
    }
    out
}

/// `P = −Δ⁻¹ div div (u ⊗ u)`, mean zero.
pub fn pressure(velocity: &GridField) -> Result<GridField> {
    velocity.expect_components(3)?;
    let t = transform(&velocity.outer(velocity)?);
    let spec = *velocity.spec();
    let k = Wavenumbers::new(&spec);
    let mut out = SpectralField::zeros(spec, 1);
    let comps: Vec<&[Complex64]> = (0..9).map(|c| t.component(c)).collect();
    let dst = out.component_mut(0);
    SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
        let kk = k.at(kx, ky, kz);
        let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
        if k2 > 0.0 {
            let mut ktk = Complex64::new(0.0, 0.0);
            for a in 0..3 {
                for b in 0..3 {
                    ktk += kk[a] * kk[b] * comps[a * 3 + b][idx];
                }
            }
            dst[idx] = -ktk / k2;
        }
    });
    Ok(inverse_transform(&out).with_time(velocity.time()))
}

/// Smooth space-time test function `ψ(t, x) = χ(t) ρ(x)`.
///
/// `χ` is the bump `exp(1 − 1/(1 − s²))` on the window, `s ∈ (−1, 1)`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub spatial: GridField,
    pub window: (f64, f64),
}

impl TestFunction {
    pub fn new(spatial: GridField, window: (f64, f64)) -> Result<Self> {
        spatial.expect_components(1)?;
        if !(window.1 > window.0) {
            return Err(Error::InvalidArgument("empty time window".into()));
        }
        if spatial.data().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("test function must be nonnegative".into()));
        }
        Ok(Self { spatial, window })
    }

    fn scaled(&self, t: f64) -> (f64, f64) {
        let (a, b) = self.window;
        ((2.0 * t - a - b) / (b - a), 2.0 / (b - a))
    }

    pub fn time_profile(&self, t: f64) -> f64 {
        let (s, _) = self.scaled(t);
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }

    pub fn time_profile_rate(&self, t: f64) -> f64 {
        let (s, ds) = self.scaled(t);
        if s.abs() >= 1.0 {
            0.0
        } else {
            let g = 1.0 - s * s;
            -self.time_profile(t) * 2.0 * s / (g * g) * ds
        }
    }
}

/// Weak-form local energy balance and its dissipation scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LocalEnergyResidual {
    /// `∫∫ [ν|∇u|²ψ − |u|²/2 (∂tψ + νΔψ) − (|u|²/2 + P) u·∇ψ]`; nonpositive for suitable solutions.
    pub value: f64,
    /// `∫∫ ν|∇u|²ψ`.
    pub dissipation: f64,
}

impl LocalEnergyResidual {
    pub fn relative(&self) -> f64 {
        if self.dissipation > 0.0 {
            self.value / self.dissipation
        } else {
            self.value
        }
    }
}

/// Local energy inequality tested against `ψ`; time integral by trapezoid over snapshots.
pub fn local_energy_residual(
    snapshots: &[Snapshot],
    test_fn: &TestFunction,
    viscosity: f64,
) -> Result<LocalEnergyResidual> {
    if snapshots.len() < 3 {
        return Err(Error::TooFewSnapshots { needed: 3, found: snapshots.len() });
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let (a, b) = test_fn.window;
    if a < times[0] - 1e-12 || b > times[times.len() - 1] + 1e-12 {
        return Err(Error::TimeRange { time: if a < times[0] { a } else { b }, start: times[0], end: times[times.len() - 1] });
    }
    let rho = &test_fn.spatial;
    let grad_rho = gradient(rho)?;
    let lap_rho = crate::grid_spectral::laplacian(rho)?;
    let dv = rho.spec().cell_volume();
    let weights = trapezoid_weights(&times);
    let mut value = 0.0;
    let mut dissipation = 0.0;
    for (snap, w) in snapshots.iter().zip(&weights) {
        let chi = test_fn.time_profile(snap.time);
        let chi_t = test_fn.time_profile_rate(snap.time);
        if chi == 0.0 && chi_t == 0.0 {
            continue;
        }
        let u = &snap.velocity;
        let grad_u = gradient(u)?;
        let p = pressure(u)?;
        let u2 = u.dot(u)?;
        let flux = u.dot(&grad_rho)?;
        let mut diss = 0.0;
        let mut rest = 0.0;
        for i in 0..u2.data().len() {
            let g2: f64 = (0..9).map(|c| grad_u.component(c)[i].powi(2)).sum();
            let e = 0.5 * u2.data()[i];
            diss += viscosity * g2 * chi * rho.data()[i];
            rest += e * (chi_t * rho.data()[i] + viscosity * chi * lap_rho.data()[i])
                + (e + p.data()[i]) * chi * flux.data()[i];
        }
        dissipation += w * diss * dv;
        value += w * (diss - rest) * dv;
    }
    Ok(LocalEnergyResidual { value, dissipation })
}

/// Bernoulli pressure check: `R(u ⊗ u) = |u|²/2 + P`.
pub fn bernoulli_head(velocity: &GridField) -> Result<GridField> {
    riesz_r(&velocity.outer(velocity)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: &GridField, b: &GridField) -> f64 {
        a.sub(b).unwrap().norm_l2() / b.norm_l2()
    }

    #[test]
    fn taylor_green_construction() {
        let spec = GridSpec::periodic(16).unwrap();
        let u = taylor_green_init(spec, 1.0);
        assert!((u.max_abs() - 1.0).abs() < 0.02);
        assert!(divergence(&u).unwrap().max_abs() < 1e-12);
        let e = Snapshot::new(u).unwrap().kinetic_energy;
        let exact = (2.0 * std::f64::consts::PI).powi(3) / 8.0;
        assert!((e - exact).abs() < 1e-12 * exact);
        assert_eq!(taylor_green_init(spec, 0.0).max_abs(), 0.0);
    }

    #[test]
    fn zero_field_stays_zero() {
        let spec = GridSpec::periodic(8).unwrap();
        let cfg = SolverConfig::new(spec, 0.01, 0.01);
        let s = Snapshot::new(GridField::zeros(spec, 3)).unwrap();
        let next = step(&s, &cfg).unwrap();
        assert_eq!(next.velocity.max_abs(), 0.0);
    }

    #[test]
    fn stokes_mode_decays_exactly() {
        let spec = GridSpec::periodic(16).unwrap();
        let u0 = GridField::vector_from_fn(spec, |x| [x[1].sin(), 0.0, 0.0]);
        let cfg = SolverConfig::new(spec, 1e-3, 1.0);
        let out = run(&cfg, &u0).unwrap();
        let last = out.snapshots.last().unwrap();
        let exact = u0.scale((-1.0_f64).exp());
        assert!(rel(&last.velocity, &exact) < 1e-8);
        assert!((last.time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_end_time_keeps_initial_state() {
        let spec = GridSpec::periodic(8).unwrap();
        let u0 = taylor_green_init(spec, 1.0);
        let out = run(&SolverConfig::new(spec, 1e-3, 0.0), &u0).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert!(rel(&out.snapshots[0].velocity, &u0) < 1e-14);
    }

    #[test]
    fn pressure_matches_taylor_green() {
        let spec = GridSpec::periodic(16).unwrap();
        let u = taylor_green_init(spec, 1.0);
        let p = pressure(&u).unwrap();
        let exact = GridField::scalar_from_fn(spec, |x| {
            ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ((2.0 * x[2]).cos() + 2.0) / 16.0
        });
        let exact = exact.shift_component(0, -exact.mean()[0]);
        assert!(rel(&p, &exact) < 1e-12);
        assert_eq!(pressure(&GridField::zeros(spec, 3)).unwrap().max_abs(), 0.0);
        let c = GridField::vector_from_fn(spec, |_| [1.0, 2.0, -1.0]);
        assert!(pressure(&c).unwrap().max_abs() < 1e-13);
        let head = bernoulli_head(&u).unwrap();
        let u2 = u.dot(&u).unwrap().scale(0.5);
        let expect = u2.add(&p).unwrap();
        assert!(rel(&head, &expect) < 1e-12);
    }

    #[test]
    fn blowup_is_reported() {
        let spec = GridSpec::periodic(8).unwrap();
        let u0 = taylor_green_init(spec, 1.0);
        let mut cfg = SolverConfig::new(spec, 1e-3, 1.0);
        cfg.viscosity = 1e-9;
        let mut solver = Solver::new(cfg, &u0).unwrap();
        solver.u_hat = solver.u_hat.scale(1e9);
        assert!(matches!(solver.step(), Err(Error::BlowUp { .. })));
    }
}
