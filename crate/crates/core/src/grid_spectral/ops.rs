use rustfft::num_complex::Complex64;

use super::fft;
use super::field::{GridField, GridSpec, SpectralField};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Derivative wavenumbers along each axis; x holds the half spectrum.
pub(crate) struct Wavenumbers {
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub kz: Vec<f64>,
}

impl Wavenumbers {
    pub fn new(spec: &GridSpec) -> Self {
        let n = spec.n;
        Self {
            kx: (0..spec.half()).map(|j| spec.derivative_wavenumber(j)).collect(),
            ky: (0..n).map(|j| spec.derivative_wavenumber(j)).collect(),
            kz: (0..n).map(|j| spec.derivative_wavenumber(j)).collect(),
        }
    }

    #[inline]
    pub fn at(&self, kx: usize, ky: usize, kz: usize) -> [f64; 3] {
        [self.kx[kx], self.ky[ky], self.kz[kz]]
    }
}

/// Forward transform, normalized so a constant maps to its value in the zero mode.
pub fn transform(field: &GridField) -> SpectralField {
    let spec = *field.spec();
    let plan = fft::plan(spec.n);
    let mut out = SpectralField::zeros(spec, field.components());
    for c in 0..field.components() {
        plan.forward(field.component(c), out.component_mut(c));
    }
    out.with_time(field.time())
}

pub fn inverse_transform(spectral: &SpectralField) -> GridField {
    let spec = *spectral.spec();
    let plan = fft::plan(spec.n);
    let mut out = GridField::zeros(spec, spectral.components());
    let mut scratch = vec![Complex64::new(0.0, 0.0); spec.spectral_points()];
    for c in 0..spectral.components() {
        scratch.copy_from_slice(spectral.component(c));
        plan.inverse(&mut scratch, out.component_mut(c));
    }
    out.with_time(spectral.time())
}

/// Spectral differential operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifferentialOp {
    Gradient,
    Divergence,
    Curl,
    Laplacian,
}

pub fn differential(field: &GridField, op: DifferentialOp) -> Result<GridField> {
    let s = transform(field);
    let d = match op {
        DifferentialOp::Gradient => spectral_gradient(&s)?,
        DifferentialOp::Divergence => spectral_divergence(&s)?,
        DifferentialOp::Curl => spectral_curl(&s)?,
        DifferentialOp::Laplacian => spectral_laplacian(&s),
    };
    Ok(inverse_transform(&d))
}

/// Gradient: scalar to vector, or vector to the 9-component `∂_b u_a` at `a * 3 + b`.
pub fn gradient(field: &GridField) -> Result<GridField> {
    differential(field, DifferentialOp::Gradient)
}

/// Divergence of a vector, or row divergence `Σ_b ∂_b T_ab` of a tensor.
pub fn divergence(field: &GridField) -> Result<GridField> {
    differential(field, DifferentialOp::Divergence)
}

pub fn curl(field: &GridField) -> Result<GridField> {
    differential(field, DifferentialOp::Curl)
}

pub fn laplacian(field: &GridField) -> Result<GridField> {
    differential(field, DifferentialOp::Laplacian)
}

/// Pointwise `|∇ⁿf|`, summing squares over all components and ordered multi-indices.
pub fn derivative_magnitude(field: &GridField, order: u32) -> GridField {
    let spec = *field.spec();
    let s = transform(field);
    let k = Wavenumbers::new(&spec);
    let plan = fft::plan(spec.n);
    let mut acc = vec![0.0; spec.points()];
    let mut buf = vec![Complex64::new(0.0, 0.0); spec.spectral_points()];
    let mut real = vec![0.0; spec.points()];
    for c in 0..field.components() {
        let src = s.component(c);
        for tuple in 0..3usize.pow(order) {
            let mut axes = [0usize; 3];
            let mut t = tuple;
            for _ in 0..order {
                axes[t % 3] += 1;
                t /= 3;
            }
            SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
                let kv = k.at(kx, ky, kz);
                let mut sym = Complex64::new(1.0, 0.0);
                for (a, &m) in axes.iter().enumerate() {
                    for _ in 0..m {
                        sym *= I * kv[a];
                    }
                }
                buf[idx] = sym * src[idx];
            });
            plan.inverse(&mut buf, &mut real);
            for (a, r) in acc.iter_mut().zip(&real) {
                *a += r * r;
            }
        }
    }
    GridField::new(spec, 1, acc.into_iter().map(f64::sqrt).collect())
        .expect("finite input")
        .with_time(field.time())
}

pub fn spectral_gradient(s: &SpectralField) -> Result<SpectralField> {
    let spec = *s.spec();
    let comps = s.components();
    if comps != 1 && comps != 3 {
        return Err(Error::ComponentMismatch { expected: 3, found: comps });
    }
    let k = Wavenumbers::new(&spec);
    let mut out = SpectralField::zeros(spec, comps * 3);
    for a in 0..comps {
        let src = s.component(a).to_vec();
        for b in 0..3 {
            let dst = out.component_mut(a * 3 + b);
            SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
                dst[idx] = I * k.at(kx, ky, kz)[b] * src[idx];
            });
        }
    }
    Ok(out.with_time(s.time()))
}

pub fn spectral_divergence(s: &SpectralField) -> Result<SpectralField> {
    let spec = *s.spec();
    let rows = match s.components() {
        3 => 1,
        9 => 3,
        found => return Err(Error::ComponentMismatch { expected: 3, found }),
    };
    let k = Wavenumbers::new(&spec);
    let mut out = SpectralField::zeros(spec, rows);
    for a in 0..rows {
        for b in 0..3 {
            let src = s.component(a * 3 + b).to_vec();
            let dst = out.component_mut(a);
            SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
                dst[idx] += I * k.at(kx, ky, kz)[b] * src[idx];
            });
        }
    }
    Ok(out.with_time(s.time()))
}

pub fn spectral_curl(s: &SpectralField) -> Result<SpectralField> {
    s.expect_components(3)?;
    let spec = *s.spec();
    let k = Wavenumbers::new(&spec);
    let mut out = SpectralField::zeros(spec, 3);
    let m = spec.spectral_points();
    let src = s.coeffs();
    let dst = out.coeffs_mut();
    SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
        let kk = k.at(kx, ky, kz);
        let u = [src[idx], src[m + idx], src[2 * m + idx]];
        dst[idx] = I * (kk[1] * u[2] - kk[2] * u[1]);
        dst[m + idx] = I * (kk[2] * u[0] - kk[0] * u[2]);
        dst[2 * m + idx] = I * (kk[0] * u[1] - kk[1] * u[0]);
    });
    Ok(out.with_time(s.time()))
}

pub fn spectral_laplacian(s: &SpectralField) -> SpectralField {
    let spec = *s.spec();
    let k = Wavenumbers::new(&spec);
    let mut out = s.clone();
    for c in 0..s.components() {
        let dst = out.component_mut(c);
        SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
            let kk = k.at(kx, ky, kz);
            dst[idx] *= -(kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2]);
        });
    }
    out
}

/// Inverse Laplacian; modes with vanishing symbol are discarded. Returns the discarded means.
pub fn spectral_inverse_laplacian(s: &SpectralField) -> (SpectralField, Vec<f64>) {
    let spec = *s.spec();
    let k = Wavenumbers::new(&spec);
    let means = s.mean();
    let mut out = s.clone();
    for c in 0..s.components() {
        let dst = out.component_mut(c);
        SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
            let kk = k.at(kx, ky, kz);
            let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
            dst[idx] = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { -dst[idx] / k2 };
        });
    }
    (out, means)
}

/// Divergence-free projection `P_curl = -curl curl Δ⁻¹`.
pub fn spectral_project_curl(s: &SpectralField) -> Result<SpectralField> {
    s.expect_components(3)?;
    let spec = *s.spec();
    let k = Wavenumbers::new(&spec);
    let m = spec.spectral_points();
    let mut out = s.clone();
    let dst = out.coeffs_mut();
    SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
        let kk = k.at(kx, ky, kz);
        let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
        if k2 == 0.0 {
            for c in 0..3 {
                dst[c * m + idx] = Complex64::new(0.0, 0.0);
            }
        } else {
            let kdot = (kk[0] * dst[idx] + kk[1] * dst[m + idx] + kk[2] * dst[2 * m + idx]) / k2;
            for c in 0..3 {
                dst[c * m + idx] -= kk[c] * kdot;
            }
        }
    });
    Ok(out)
}

/// Whether FFT indices lie inside the 2/3-rule band `3|m| < n` on every axis.
#[inline]
pub(crate) fn in_band(spec: &GridSpec, kx: usize, ky: usize, kz: usize) -> bool {
    let n = spec.n as i64;
    3 * spec.mode(kx).abs() < n && 3 * spec.mode(ky).abs() < n && 3 * spec.mode(kz).abs() < n
}

/// Zeroes every mode outside the 2/3-rule band.
pub fn spectral_dealias(s: &mut SpectralField) {
    let spec = *s.spec();
    for c in 0..s.components() {
        let dst = s.component_mut(c);
        SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
            if !in_band(&spec, kx, ky, kz) {
                dst[idx] = Complex64::new(0.0, 0.0);
            }
        });
    }
}

/// 2/3-rule filter of a grid field.
pub fn dealias(field: &GridField) -> GridField {
    let mut s = transform(field);
    spectral_dealias(&mut s);
    inverse_transform(&s)
}

/// Dealiased cross product `D(D a × D b)`.
pub fn dealiased_cross(a: &GridField, b: &GridField) -> Result<GridField> {
    Ok(dealias(&dealias(a).cross(&dealias(b))?))
}

/// Dealiased product of a field with a scalar field.
pub fn dealiased_mul(a: &GridField, s: &GridField) -> Result<GridField> {
    Ok(dealias(&dealias(a).mul_scalar(&dealias(s))?))
}

/// Dealiased pointwise dot product.
pub fn dealiased_dot(a: &GridField, b: &GridField) -> Result<GridField> {
    Ok(dealias(&dealias(a).dot(&dealias(b))?))
}

/// Result of [`inverse_laplacian`].
#[derive(Clone, Debug)]
pub struct InverseLaplacian {
    pub field: GridField,
    /// Zero-mode mean of each component removed before inversion.
    pub discarded_mean: Vec<f64>,
}

pub fn inverse_laplacian(field: &GridField) -> InverseLaplacian {
    let (s, discarded_mean) = spectral_inverse_laplacian(&transform(field));
    InverseLaplacian { field: inverse_transform(&s), discarded_mean }
}

/// Shorthand for the field part of [`inverse_laplacian`].
pub fn inv_lap(field: &GridField) -> GridField {
    inverse_laplacian(field).field
}

/// `x ↦ f(x + shift)`, exact for fields without Nyquist content.
pub fn translate(field: &GridField, shift: [f64; 3]) -> GridField {
    let spec = *field.spec();
    let k = Wavenumbers::new(&spec);
    let mut s = transform(field);
    let mut phase = vec![Complex64::new(1.0, 0.0); spec.spectral_points()];
    SpectralField::for_each_mode(&spec, |idx, kx, ky, kz| {
        let kk = k.at(kx, ky, kz);
        phase[idx] = Complex64::from_polar(1.0, kk[0] * shift[0] + kk[1] * shift[1] + kk[2] * shift[2]);
    });
    for c in 0..s.components() {
        for (v, p) in s.component_mut(c).iter_mut().zip(&phase) {
            *v *= p;
        }
    }
    inverse_transform(&s).with_time(field.time())
}

/// Divergence-free projection of a vector field.
pub fn project_curl(field: &GridField) -> Result<GridField> {
    Ok(inverse_transform(&spectral_project_curl(&transform(field))?))
}

/// `Id - P_curl`; keeps the mean and every mode with vanishing derivative symbol.
pub fn project_grad(field: &GridField) -> Result<GridField> {
    field.sub(&project_curl(field)?)
}

/// Result of [`helmholtz_split`].
#[derive(Clone, Debug)]
pub struct HelmholtzSplit {
    /// `∇Δ⁻¹ div f`.
    pub grad_part: GridField,
    /// `P_curl f`.
    pub curl_part: GridField,
    /// Zero mode plus modes invisible to grid derivatives.
    pub harmonic: GridField,
}

impl HelmholtzSplit {
    pub fn mean(&self) -> Vec<f64> {
        self.harmonic.mean()
    }
}

pub fn helmholtz_split(field: &GridField) -> Result<HelmholtzSplit> {
    field.expect_components(3)?;
    let s = transform(field);
    let curl_s = spectral_project_curl(&s)?;
    let div = spectral_divergence(&s)?;
    let (phi, _) = spectral_inverse_laplacian(&div);
    let grad_s = spectral_gradient(&phi)?;
    let harmonic_s = s.sub(&curl_s)?.sub(&grad_s)?;
    Ok(HelmholtzSplit {
        grad_part: inverse_transform(&grad_s),
        curl_part: inverse_transform(&curl_s),
        harmonic: inverse_transform(&harmonic_s),
    })
}

/// `R(T) = ½ tr T − Δ⁻¹ div div T` for a 9-component tensor field.
pub fn riesz_r(tensor: &GridField) -> Result<GridField> {
    tensor.expect_components(9)?;
    let spec = *tensor.spec();
    let s = transform(tensor);
    Ok(inverse_transform(&spectral_riesz_r(&s, &spec)))
}

pub(crate) fn spectral_riesz_r(s: &SpectralField, spec: &GridSpec) -> SpectralField {
    let k = Wavenumbers::new(spec);
    let mut out = SpectralField::zeros(*spec, 1);
    let comps: Vec<&[Complex64]> = (0..9).map(|c| s.component(c)).collect();
    let dst = out.component_mut(0);
    SpectralField::for_each_mode(spec, |idx, kx, ky, kz| {
        let kk = k.at(kx, ky, kz);
        let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
        let tr = comps[0][idx] + comps[4][idx] + comps[8][idx];
        let mut value = 0.5 * tr;
        if k2 > 0.0 {
            let mut ktk = Complex64::new(0.0, 0.0);
            for a in 0..3 {
                for b in 0..3 {
                    ktk += kk[a] * kk[b] * comps[a * 3 + b][idx];
                }
            }
            value -= ktk / k2;
        }
        dst[idx] = value;
    });
    out.with_time(s.time())
}

/// Relative residuals of the two product-rule identities, every product dealiased:
/// `∇(u·v) − (u·∇)v − (v·∇)u − u×curl v − v×curl u` and
/// `curl(u×v) − u div v + v div u − (v·∇)u + (u·∇)v`.
pub fn vector_identity_residuals(u: &GridField, v: &GridField) -> Result<[f64; 2]> {
    let gu = gradient(u)?;
    let gv = gradient(v)?;
    let u_grad_v = dealias(&gv.directional(u)?);
    let v_grad_u = dealias(&gu.directional(v)?);
    let lhs = gradient(&dealias(&u.dot(v)?))?;
    let terms = [
        u_grad_v.clone(),
        v_grad_u.clone(),
        dealias(&u.cross(&curl(v)?)?),
        dealias(&v.cross(&curl(u)?)?),
    ];
    let mut first = lhs.clone();
    let mut scale = lhs.norm_l2();
    for t in &terms {
        first = first.sub(t)?;
        scale = scale.max(t.norm_l2());
    }
    let lhs2 = curl(&dealias(&u.cross(v)?))?;
    let parts = [
        dealias(&u.mul_scalar(&divergence(v)?)?).scale(-1.0),
        dealias(&v.mul_scalar(&divergence(u)?)?),
        v_grad_u.scale(-1.0),
        u_grad_v,
    ];
    let mut second = lhs2.clone();
    let mut scale2 = lhs2.norm_l2();
    for t in &parts {
        second = second.add(t)?;
        scale2 = scale2.max(t.norm_l2());
    }
    let rel = |r: &GridField, s: f64| if s > 0.0 { r.norm_l2() / s } else { r.norm_l2() };
    Ok([rel(&first, scale), rel(&second, scale2)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::random::random_band_limited;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn taylor_green(spec: GridSpec) -> GridField {
        GridField::vector_from_fn(spec, |x| {
            [x[0].sin() * x[1].cos() * x[2].cos(), -x[0].cos() * x[1].sin() * x[2].cos(), 0.0]
        })
    }

    fn rel(a: &GridField, b: &GridField) -> f64 {
        a.sub(b).unwrap().norm_l2() / b.norm_l2().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let spec = GridSpec::periodic(8).unwrap();
        let f = GridField::scalar_from_fn(spec, |_| 2.5);
        let s = transform(&f);
        assert!((s.component(0)[0].re - 2.5).abs() < 1e-14);
        assert!(s.component(0)[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn sine_has_half_amplitude_pair() {
        let spec = GridSpec::periodic(16).unwrap();
        let f = GridField::scalar_from_fn(spec, |x| x[0].sin());
        let s = transform(&f);
        assert!((s.coeff(0, 1, 0, 0).norm() - 0.5).abs() < 1e-14);
        let others: f64 = s
            .component(0)
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 1)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        assert!(others < 1e-14);
    }

    #[test]
    fn round_trip_and_parseval() {
        let spec = GridSpec::new(16, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..3 * spec.points()).map(|_| rand::Rng::random::<f64>(&mut rng) - 0.5).collect();
        let f = GridField::new(spec, 3, data).unwrap();
        let s = transform(&f);
        let back = inverse_transform(&s);
        assert!(rel(&back, &f) < 1e-12);
        assert!((s.norm_l2() - f.norm_l2()).abs() / f.norm_l2() < 1e-12);
    }

    #[test]
    fn taylor_green_divergence_and_curl() {
        let spec = GridSpec::periodic(32).unwrap();
        let u = taylor_green(spec);
        assert!(divergence(&u).unwrap().max_abs() < 1e-12);
        let w = curl(&u).unwrap();
        let expect = GridField::scalar_from_fn(spec, |x| 2.0 * x[0].sin() * x[1].sin() * x[2].cos());
        let err = w.extract(2).sub(&expect).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn constant_derivatives_vanish() {
        let spec = GridSpec::periodic(8).unwrap();
        let f = GridField::vector_from_fn(spec, |_| [1.0, -2.0, 3.0]);
        for op in [DifferentialOp::Gradient, DifferentialOp::Divergence, DifferentialOp::Curl, DifferentialOp::Laplacian] {
            assert!(differential(&f, op).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn component_mismatch_is_reported() {
        let spec = GridSpec::periodic(8).unwrap();
        let f = GridField::zeros(spec, 1);
        assert!(matches!(curl(&f), Err(Error::ComponentMismatch { .. })));
        assert!(matches!(divergence(&f), Err(Error::ComponentMismatch { .. })));
    }

    #[test]
    fn inverse_laplacian_contracts() {
        let spec = GridSpec::periodic(16).unwrap();
        let f = GridField::scalar_from_fn(spec, |x| x[0].sin());
        let g = inverse_laplacian(&f);
        assert!(rel(&g.field, &f.scale(-1.0)) < 1e-13);
        let c = GridField::scalar_from_fn(spec, |_| 4.0);
        let g = inverse_laplacian(&c);
        assert!(g.field.max_abs() < 1e-14);
        assert!((g.discarded_mean[0] - 4.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_band_limited(spec, 1, 5, &mut rng);
        let f = f.shift_component(0, -f.mean()[0]);
        let back = laplacian(&inverse_laplacian(&f).field).unwrap();
        assert!(rel(&back, &f) < 1e-12);
    }

    #[test]
    fn helmholtz_projections() {
        let spec = GridSpec::periodic(16).unwrap();
        let u = taylor_green(spec);
        let split = helmholtz_split(&u).unwrap();
        assert!(split.grad_part.max_abs() < 1e-13);
        assert!(rel(&split.curl_part, &u) < 1e-13);

        let g = GridField::vector_from_fn(spec, |x| [x[0].cos(), 0.0, 0.0]);
        let split = helmholtz_split(&g).unwrap();
        assert!(split.curl_part.max_abs() < 1e-13);
        assert!(rel(&split.grad_part, &g) < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..3 * spec.points()).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let f = GridField::new(spec, 3, data).unwrap();
        let split = helmholtz_split(&f).unwrap();
        let sum = split.grad_part.add(&split.curl_part).unwrap().add(&split.harmonic).unwrap();
        assert!(rel(&sum, &f) < 1e-12);
        assert!(divergence(&split.curl_part).unwrap().max_abs() <= 1e-10 * f.max_abs());
        assert!(curl(&split.grad_part).unwrap().max_abs() <= 1e-10 * f.max_abs());
        let pp = project_curl(&split.curl_part).unwrap();
        assert!(rel(&pp, &split.curl_part) < 1e-10);
        assert!(project_grad(&split.curl_part).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn riesz_symbol_matches_modes() {
        let spec = GridSpec::periodic(8).unwrap();
        assert!(riesz_r(&GridField::zeros(spec, 9)).unwrap().max_abs() == 0.0);
        // c(x) Id with c = cos(x): ½ tr = 3c/2, k·T·k/|k|² = c.
        let mut t = GridField::zeros(spec, 9);
        let c = GridField::scalar_from_fn(spec, |x| x[0].cos() + 0.25);
        for a in 0..3 {
            t.component_mut(a * 4).copy_from_slice(c.data());
        }
        let r = riesz_r(&t).unwrap();
        let expect = GridField::scalar_from_fn(spec, |x| 0.5 * x[0].cos() + 0.375);
        assert!(rel(&r, &expect) < 1e-13);
        // Off-diagonal T_xy = cos(x + y): k = (1,1,0), k·T·k/|k|² = (2 cos)/2.
        let mut t = GridField::zeros(spec, 9);
        let f = GridField::scalar_from_fn(spec, |x| (x[0] + x[1]).cos());
        t.component_mut(1).copy_from_slice(f.data());
        let r = riesz_r(&t).unwrap();
        assert!(rel(&r, &f.scale(-0.5)) < 1e-13);
    }

    #[test]
    fn vector_identities_hold_after_dealiasing() {
        let spec = GridSpec::periodic(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_band_limited(spec, 3, 10, &mut rng);
        let v = random_band_limited(spec, 3, 10, &mut rng);
        let [a, b] = vector_identity_residuals(&u, &v).unwrap();
        assert!(a < 1e-12 && b < 1e-12, "{a:e} {b:e}");
        let zero = GridField::zeros(spec, 3);
        assert_eq!(vector_identity_residuals(&zero, &v).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn derivative_magnitude_of_plane_wave() {
        let spec = GridSpec::periodic(16).unwrap();
        let f = GridField::scalar_from_fn(spec, |x| (2.0 * x[0] + x[1]).sin());
        let d0 = derivative_magnitude(&f, 0);
        assert!(d0.sub(&f.magnitude()).unwrap().max_abs() < 1e-13);
        let d2 = derivative_magnitude(&f, 2);
        let want = GridField::scalar_from_fn(spec, |x| 5.0 * (2.0 * x[0] + x[1]).sin().abs());
        assert!(d2.sub(&want).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn translate_shifts_modes() {
        let spec = GridSpec::periodic(16).unwrap();
        let f = GridField::scalar_from_fn(spec, |x| (2.0 * x[0] - x[2]).sin() + x[1].cos());
        let d = [0.3, -1.1, 0.7];
        let g = translate(&f, d);
        let want = GridField::scalar_from_fn(spec, |x| (2.0 * (x[0] + d[0]) - (x[2] + d[2])).sin() + (x[1] + d[1]).cos());
        assert!(g.sub(&want).unwrap().max_abs() < 1e-13);
    }
}
