use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a periodic cube sampled on `n^3` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
    pub origin: [f64; 3],
}

impl GridSpec {
    /// Cube of side `length` centred on the origin.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        Self::with_origin(n, length, [-0.5 * length; 3])
    }

    /// The `2π` cube centred on the origin.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn with_origin(n: usize, length: f64, origin: [f64; 3]) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and at least 4")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length = {length} must be positive")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { n, length, origin })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    /// Number of grid points, `n^3`.
    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Number of retained modes along x in the half spectrum.
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn spectral_points(&self) -> usize {
        self.n * self.n * self.half()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n + j) * self.n + i
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [
            self.origin[0] + i as f64 * h,
            self.origin[1] + j as f64 * h,
            self.origin[2] + k as f64 * h,
        ]
    }

    /// Position of the flat point index `idx`.
    #[inline]
    pub fn position_of(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        self.position(idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Signed integer mode number of FFT index `j`.
    #[inline]
    pub fn mode(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Wavenumber used in derivative symbols; the Nyquist index maps to zero.
    #[inline]
    pub fn derivative_wavenumber(&self, j: usize) -> f64 {
        if j == self.n / 2 {
            0.0
        } else {
            2.0 * PI * self.mode(j) as f64 / self.length
        }
    }

    /// Physical wavenumber of FFT index `j`; the Nyquist index reports `+n/2`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode(j) as f64 / self.length
    }

    /// Shortest periodic displacement `a - b`.
    pub fn displacement(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let l = self.length;
        let mut d = [0.0; 3];
        for c in 0..3 {
            let mut x = a[c] - b[c];
            x -= l * (x / l).round();
            d[c] = x;
        }
        d
    }

    /// Periodic distance between two points.
    pub fn distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let d = self.displacement(a, b);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch(format!(
                "grid {}^3 (L = {}) vs {}^3 (L = {})",
                self.n, self.length, other.n, other.length
            )));
        }
        Ok(())
    }
}

/// Real samples of a scalar, vector, or rank-2 tensor field.
///
/// Data is component-major with x fastest: `c * n^3 + (k * n + j) * n + i`.
/// Tensor components are stored as `a * 3 + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    components: usize,
    data: Vec<f64>,
    time: f64,
}

impl GridField {
    pub fn new(spec: GridSpec, components: usize, data: Vec<f64>) -> Result<Self> {
        if !matches!(components, 1 | 3 | 9) {
            return Err(Error::InvalidArgument(format!("{components} components")));
        }
        if data.len() != components * spec.points() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} components on {}^3",
                data.len(),
                components,
                spec.n
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid field data".into()));
        }
        Ok(Self { spec, components, data, time: 0.0 })
    }

    pub fn zeros(spec: GridSpec, components: usize) -> Self {
        assert!(matches!(components, 1 | 3 | 9));
        Self { spec, components, data: vec![0.0; components * spec.points()], time: 0.0 }
    }

    /// Scalar field sampled from `f(x)`.
    pub fn scalar_from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..spec.points()).map(|idx| f(spec.position_of(idx))).collect();
        Self { spec, components: 1, data, time: 0.0 }
    }

    /// Vector field sampled from `f(x)`.
    pub fn vector_from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let np = spec.points();
        let mut data = vec![0.0; 3 * np];
        for idx in 0..np {
            let v = f(spec.position_of(idx));
            for c in 0..3 {
                data[c * np + idx] = v[c];
            }
        }
        Self { spec, components: 3, data, time: 0.0 }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let np = self.spec.points();
        &self.data[c * np..(c + 1) * np]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let np = self.spec.points();
        &mut self.data[c * np..(c + 1) * np]
    }

    /// Extracts component `c` as a scalar field.
    pub fn extract(&self, c: usize) -> GridField {
        GridField {
            spec: self.spec,
            components: 1,
            data: self.component(c).to_vec(),
            time: self.time,
        }
    }

    /// Stacks three scalar fields into a vector field.
    pub fn stack(parts: [&GridField; 3]) -> Result<GridField> {
        let spec = *parts[0].spec();
        let mut data = Vec::with_capacity(3 * spec.points());
        for p in parts {
            p.expect_components(1)?;
            spec.check_same(p.spec())?;
            data.extend_from_slice(p.data());
        }
        Ok(GridField { spec, components: 3, data, time: parts[0].time })
    }

    /// Value of every component at a flat point index.
    pub fn at(&self, idx: usize) -> Vec<f64> {
        let np = self.spec.points();
        (0..self.components).map(|c| self.data[c * np + idx]).collect()
    }

    pub fn vector_at(&self, idx: usize) -> [f64; 3] {
        let np = self.spec.points();
        [self.data[idx], self.data[np + idx], self.data[2 * np + idx]]
    }

    pub(crate) fn expect_components(&self, expected: usize) -> Result<()> {
        if self.components != expected {
            return Err(Error::ComponentMismatch { expected, found: self.components });
        }
        Ok(())
    }

    fn check_pair(&self, other: &GridField) -> Result<()> {
        self.spec.check_same(other.spec())?;
        if self.components != other.components {
            return Err(Error::ComponentMismatch { expected: self.components, found: other.components });
        }
        Ok(())
    }

    /// Grid L² norm `sqrt(h³ Σ |f|²)`.
    pub fn norm_l2(&self) -> f64 {
        (self.spec.cell_volume() * self.data.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Mean of each component.
    pub fn mean(&self) -> Vec<f64> {
        let np = self.spec.points() as f64;
        (0..self.components).map(|c| self.component(c).iter().sum::<f64>() / np).collect()
    }

    /// Grid integral of each component.
    pub fn integral(&self) -> Vec<f64> {
        let dv = self.spec.cell_volume();
        (0..self.components).map(|c| self.component(c).iter().sum::<f64>() * dv).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            spec: self.spec,
            components: self.components,
            data: self.data.iter().map(|&v| f(v)).collect(),
            time: self.time,
        }
    }

    pub fn scale(&self, a: f64) -> GridField {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.check_pair(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.check_pair(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &GridField) -> Result<GridField> {
        self.check_pair(other)?;
        Ok(self.zip(other, |x, y| x + a * y))
    }

    fn zip(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        GridField {
            spec: self.spec,
            components: self.components,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            time: self.time,
        }
    }

    /// Adds a constant to component `c`.
    pub fn shift_component(&self, c: usize, value: f64) -> GridField {
        let mut out = self.clone();
        out.component_mut(c).iter_mut().for_each(|v| *v += value);
        out
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &GridField) -> Result<GridField> {
        s.expect_components(1)?;
        self.spec.check_same(s.spec())?;
        let np = self.spec.points();
        let mut out = self.clone();
        for c in 0..self.components {
            for (v, w) in out.data[c * np..(c + 1) * np].iter_mut().zip(&s.data) {
                *v *= w;
            }
        }
        Ok(out)
    }

    /// Pointwise dot product of equal-width fields.
    pub fn dot(&self, other: &GridField) -> Result<GridField> {
        self.check_pair(other)?;
        let np = self.spec.points();
        let mut data = vec![0.0; np];
        for c in 0..self.components {
            let a = self.component(c);
            let b = other.component(c);
            for i in 0..np {
                data[i] += a[i] * b[i];
            }
        }
        Ok(GridField { spec: self.spec, components: 1, data, time: self.time })
    }

    /// Pointwise cross product of vector fields.
    pub fn cross(&self, other: &GridField) -> Result<GridField> {
        self.expect_components(3)?;
        self.check_pair(other)?;
        let np = self.spec.points();
        let mut data = vec![0.0; 3 * np];
        let (a0, a1, a2) = (self.component(0), self.component(1), self.component(2));
        let (b0, b1, b2) = (other.component(0), other.component(1), other.component(2));
        for i in 0..np {
            data[i] = a1[i] * b2[i] - a2[i] * b1[i];
            data[np + i] = a2[i] * b0[i] - a0[i] * b2[i];
            data[2 * np + i] = a0[i] * b1[i] - a1[i] * b0[i];
        }
        Ok(GridField { spec: self.spec, components: 3, data, time: self.time })
    }

    /// Outer product `(u ⊗ v)_{ab} = u_a v_b` as a 9-component field.
    pub fn outer(&self, other: &GridField) -> Result<GridField> {
        self.expect_components(3)?;
        self.check_pair(other)?;
        let np = self.spec.points();
        let mut data = vec![0.0; 9 * np];
        for a in 0..3 {
            for b in 0..3 {
                let (u, v) = (self.component(a), other.component(b));
                let out = &mut data[(a * 3 + b) * np..(a * 3 + b + 1) * np];
                for i in 0..np {
                    out[i] = u[i] * v[i];
                }
            }
        }
        Ok(GridField { spec: self.spec, components: 9, data, time: self.time })
    }

    /// Pointwise Euclidean magnitude over components.
    pub fn magnitude(&self) -> GridField {
        let np = self.spec.points();
        let mut data = vec![0.0; np];
        for c in 0..self.components {
            for (d, v) in data.iter_mut().zip(self.component(c)) {
                *d += v * v;
            }
        }
        data.iter_mut().for_each(|d| *d = d.sqrt());
        GridField { spec: self.spec, components: 1, data, time: self.time }
    }

    /// Contracts a 9-component gradient `∂_b u_a` with a vector `w`: `Σ_b w_b ∂_b u_a`.
    pub fn directional(&self, w: &GridField) -> Result<GridField> {
        self.expect_components(9)?;
        w.expect_components(3)?;
        self.spec.check_same(w.spec())?;
        let np = self.spec.points();
        let mut data = vec![0.0; 3 * np];
        for a in 0..3 {
            for b in 0..3 {
                let g = &self.data[(a * 3 + b) * np..(a * 3 + b + 1) * np];
                let wb = w.component(b);
                let out = &mut data[a * np..(a + 1) * np];
                for i in 0..np {
                    out[i] += wb[i] * g[i];
                }
            }
        }
        Ok(GridField { spec: self.spec, components: 3, data, time: self.time })
    }
}

/// Half-spectrum Fourier coefficients paired to a [`GridField`] layout.
///
/// `f(x) = Σ_k f̂_k e^{i k·(x - origin)}`; modes with `kx < 0` are implied by
/// Hermitian symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    spec: GridSpec,
    components: usize,
    coeffs: Vec<Complex64>,
    time: f64,
}

impl SpectralField {
    pub fn zeros(spec: GridSpec, components: usize) -> Self {
        Self {
            spec,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * spec.spectral_points()],
            time: 0.0,
        }
    }

    pub fn from_coeffs(spec: GridSpec, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != components * spec.spectral_points() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} components on {}^3",
                coeffs.len(),
                components,
                spec.n
            )));
        }
        Ok(Self { spec, components, coeffs, time: 0.0 })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let m = self.spec.spectral_points();
        &self.coeffs[c * m..(c + 1) * m]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let m = self.spec.spectral_points();
        &mut self.coeffs[c * m..(c + 1) * m]
    }

    /// Coefficient of component `c` at FFT indices `(kx, ky, kz)`, `kx < n/2 + 1`.
    pub fn coeff(&self, c: usize, kx: usize, ky: usize, kz: usize) -> Complex64 {
        let n = self.spec.n;
        self.component(c)[(kz * n + ky) * self.spec.half() + kx]
    }

    /// Multiplicity of a half-spectrum x index in the full spectrum.
    #[inline]
    pub fn multiplicity(&self, kx: usize) -> f64 {
        if kx == 0 || kx == self.spec.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Spectral L² norm `sqrt(L³ Σ_k |f̂_k|²)`, equal to the grid norm by Parseval.
    pub fn norm_l2(&self) -> f64 {
        let nh = self.spec.half();
        let mut s = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            s += self.multiplicity(idx % nh) * c.norm_sqr();
        }
        (self.spec.volume() * s).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    /// Zero-mode value of each component.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.components).map(|c| self.component(c)[0].re).collect()
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<SpectralField> {
        self.spec.check_same(other.spec())?;
        if self.components != other.components {
            return Err(Error::ComponentMismatch { expected: self.components, found: other.components });
        }
        let mut out = self.clone();
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
        Ok(out)
    }

    pub(crate) fn expect_components(&self, expected: usize) -> Result<()> {
        if self.components != expected {
            return Err(Error::ComponentMismatch { expected, found: self.components });
        }
        Ok(())
    }

    /// Visits every stored mode as `(flat index within a component, kx, ky, kz)`.
    pub(crate) fn for_each_mode(spec: &GridSpec, mut f: impl FnMut(usize, usize, usize, usize)) {
        let n = spec.n;
        let nh = spec.half();
        for kz in 0..n {
            for ky in 0..n {
                let base = (kz * n + ky) * nh;
                for kx in 0..nh {
                    f(base + kx, kx, ky, kz);
                }
            }
        }
    }
}
