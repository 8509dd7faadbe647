//! Time-indexed sequences of grid fields.

use crate::error::{Error, Result};
use crate::grid_spectral::{GridField, GridSpec};

/// Grid fields of equal shape at strictly increasing times.
#[derive(Clone, Debug)]
pub struct FieldSeries {
    frames: Vec<GridField>,
}

impl FieldSeries {
    pub fn new(frames: Vec<GridField>) -> Result<Self> {
        frames.first().ok_or(Error::TooFewSnapshots { needed: 1, found: 0 })?;
        for pair in frames.windows(2) {
            pair[0].spec().check_same(pair[1].spec())?;
            if pair[0].components() != pair[1].components() {
                return Err(Error::ComponentMismatch {
                    expected: pair[0].components(),
                    found: pair[1].components(),
                });
            }
            if !(pair[1].time() > pair[0].time()) {
                return Err(Error::InvalidArgument(format!(
                    "times must increase: {} then {}",
                    pair[0].time(),
                    pair[1].time()
                )));
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[GridField] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &GridField {
        &self.frames[i]
    }

    pub fn spec(&self) -> &GridSpec {
        self.frames[0].spec()
    }

    pub fn components(&self) -> usize {
        self.frames[0].components()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time()).collect()
    }

    pub fn start(&self) -> f64 {
        self.frames[0].time()
    }

    pub fn end(&self) -> f64 {
        self.frames[self.frames.len() - 1].time()
    }

    /// Applies `f` to every frame, keeping times.
    pub fn map(&self, f: impl Fn(&GridField) -> Result<GridField>) -> Result<FieldSeries> {
        let frames = self
            .frames
            .iter()
            .map(|g| f(g).map(|h| h.with_time(g.time())))
            .collect::<Result<Vec<_>>>()?;
        FieldSeries::new(frames)
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let tol = 1e-12 * (1.0 + self.end().abs());
        if t < self.start() - tol || t > self.end() + tol {
            return Err(Error::TimeRange { time: t, start: self.start(), end: self.end() });
        }
        Ok(())
    }

    /// Frame indices and weights of the cubic Lagrange interpolant at `t`.
    ///
    /// Uses the four frames nearest to `t` (fewer when the series is short).
    pub fn interpolation_weights(&self, t: f64) -> Result<Vec<(usize, f64)>> {
        self.check_time(t)?;
        let (start, w) = cubic_weights(&self.times(), t);
        Ok(w.iter().enumerate().map(|(k, &wk)| (start + k, wk)).collect())
    }

    /// Uniform spacing of the frame times, if any.
    pub fn uniform_step(&self) -> Option<f64> {
        let times = self.times();
        if times.len() < 2 {
            return None;
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        let uniform = times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
        uniform.then_some(dt)
    }

    /// Fourth-order central difference in time at interior frame `i`.
    pub fn time_derivative(&self, i: usize) -> Result<GridField> {
        let dt = self
            .uniform_step()
            .ok_or_else(|| Error::InvalidArgument("time differencing needs uniform spacing".into()))?;
        if self.len() < 5 {
            return Err(Error::TooFewSnapshots { needed: 5, found: self.len() });
        }
        if i < 2 || i + 2 >= self.len() {
            return Err(Error::InvalidArgument(format!("frame {i} lacks a centred five-point stencil")));
        }
        let f = |k: usize| &self.frames[k];
        let d = f(i - 2)
            .axpy(-8.0, f(i - 1))?
            .axpy(8.0, f(i + 1))?
            .axpy(-1.0, f(i + 2))?
            .scale(1.0 / (12.0 * dt));
        Ok(d.with_time(f(i).time()))
    }

    /// Trapezoid weights of the frame times.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.times())
    }
}

/// First node and Lagrange weights of the (up to) four nodes of `times` nearest `t`.
pub fn cubic_weights(times: &[f64], t: f64) -> (usize, Vec<f64>) {
    let m = times.len();
    if m == 1 {
        return (0, vec![1.0]);
    }
    let upper = times.partition_point(|&s| s <= t).clamp(1, m - 1);
    let width = m.min(4);
    let start = (upper as isize - width as isize / 2).clamp(0, (m - width) as isize) as usize;
    let w = (start..start + width)
        .map(|i| {
            (start..start + width)
                .filter(|&j| j != i)
                .map(|j| (t - times[j]) / (times[i] - times[j]))
                .product::<f64>()
        })
        .collect();
    (start, w)
}

/// Trapezoid quadrature weights on an increasing grid.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let m = times.len();
    let mut w = vec![0.0; m];
    for i in 0..m.saturating_sub(1) {
        let h = times[i + 1] - times[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Weights integrating the piecewise-linear interpolant of samples at `times` over `[start, end]`.
pub fn window_weights(times: &[f64], start: f64, end: f64) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for i in 0..times.len().saturating_sub(1) {
        let (a, b) = (times[i], times[i + 1]);
        let (lo, hi) = (a.max(start), b.min(end));
        if hi <= lo {
            continue;
        }
        let h = b - a;
        // Exact integral of the two hat functions over [lo, hi].
        let right = ((hi - a).powi(2) - (lo - a).powi(2)) / (2.0 * h);
        w[i] += (hi - lo) - right;
        w[i + 1] += right;
    }
    w
}

/// Weights `w` with `Σ wᵢ f(nodesᵢ) ≈ f'(at)`, exact for polynomials below `nodes.len()`.
pub fn derivative_weights(nodes: &[f64], at: f64) -> Vec<f64> {
    // Fornberg's recursion for the zeroth and first derivative.
    let m = nodes.len();
    let mut c = vec![[0.0f64; 2]; m];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - at;
    for i in 1..m {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - at;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|r| r[1]).collect()
}

/// Indices of the `width` nodes nearest to position `i`, clamped to the ends.
pub fn stencil(len: usize, i: usize, width: usize) -> std::ops::Range<usize> {
    let width = width.min(len);
    let start = i.saturating_sub(width / 2).min(len - width);
    start..start + width
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: &[f64], f: impl Fn(f64) -> f64) -> FieldSeries {
        let spec = GridSpec::periodic(4).unwrap();
        FieldSeries::new(
            times
                .iter()
                .map(|&t| GridField::scalar_from_fn(spec, |_| f(t)).with_time(t))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let times = [0.0, 0.1, 0.25, 0.3, 0.5, 0.65];
        let s = series(&times, |t| 1.0 + t - 2.0 * t * t + 3.0 * t * t * t);
        for &t in &[0.0, 0.05, 0.27, 0.49, 0.65] {
            let w = s.interpolation_weights(t).unwrap();
            let v: f64 = w.iter().map(|&(i, wi)| wi * s.frame(i).data()[0]).sum();
            let exact = 1.0 + t - 2.0 * t * t + 3.0 * t * t * t;
            assert!((v - exact).abs() < 1e-13, "{t}: {v} vs {exact}");
        }
        assert!(matches!(s.interpolation_weights(0.7), Err(Error::TimeRange { .. })));
    }

    #[test]
    fn fourth_order_difference_is_exact_for_quartics() {
        let times: Vec<f64> = (0..7).map(|i| 0.1 * i as f64).collect();
        let s = series(&times, |t| t.powi(4) - t);
        let d = s.time_derivative(3).unwrap();
        let t: f64 = 0.3;
        assert!((d.data()[0] - (4.0 * t.powi(3) - 1.0)).abs() < 1e-12);
        assert!(s.time_derivative(1).is_err());
    }

    #[test]
    fn window_weights_integrate_linears_exactly() {
        let times = [0.0, 0.3, 0.5, 1.0];
        let w = window_weights(&times, 0.1, 0.7);
        let integral: f64 = times.iter().zip(&w).map(|(t, wi)| wi * (2.0 * t + 1.0)).sum();
        assert!((integral - (0.49 - 0.01 + 0.6)).abs() < 1e-14);
        assert!(window_weights(&times, 2.0, 3.0).iter().all(|&x| x == 0.0));
        let full = window_weights(&times, -1.0, 2.0);
        assert!(full.iter().zip(trapezoid_weights(&times)).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn derivative_weights_are_exact_for_quartics() {
        let nodes = [0.0, 0.1, 0.25, 0.3, 0.45];
        for at in [0.0, 0.2, 0.45] {
            let w = derivative_weights(&nodes, at);
            let d: f64 = nodes.iter().zip(&w).map(|(x, wi)| wi * (x.powi(4) - 2.0 * x)).sum();
            assert!((d - (4.0 * at * at * at - 2.0)).abs() < 1e-10, "{at}: {d}");
        }
        assert_eq!(stencil(10, 0, 5), 0..5);
        assert_eq!(stencil(10, 9, 5), 5..10);
        assert_eq!(stencil(10, 4, 5), 2..7);
    }

    #[test]
    fn rejects_non_increasing_times() {
        let spec = GridSpec::periodic(4).unwrap();
        let a = GridField::zeros(spec, 1).with_time(1.0);
        let b = GridField::zeros(spec, 1).with_time(1.0);
        assert!(FieldSeries::new(vec![a, b]).is_err());
    }
}
