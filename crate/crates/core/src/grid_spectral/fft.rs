//! Three-dimensional real FFT assembled from one-dimensional transforms.
//!
//! Real-to-complex along x, then complex along y and z. The spectrum keeps
//! `n/2 + 1` modes along x in layout `(kz * n + ky) * nh + kx`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

pub(crate) fn plan(n: usize) -> Arc<Fft3> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut real = RealFftPlanner::<f64>::new();
            let mut cplx = FftPlanner::<f64>::new();
            Arc::new(Fft3 {
                n,
                r2c: real.plan_fft_forward(n),
                c2r: real.plan_fft_inverse(n),
                fwd: cplx.plan_fft_forward(n),
                inv: cplx.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl Fft3 {
    /// Forward transform of one component, normalized by `1/n^3`.
    pub(crate) fn forward(&self, input: &[f64], out: &mut [Complex64]) {
        let n = self.n;
        let nh = n / 2 + 1;
        let mut line = vec![0.0; n];
        let mut scratch = self.r2c.make_scratch_vec();
        for row in 0..n * n {
            line.copy_from_slice(&input[row * n..(row + 1) * n]);
            self.r2c
                .process_with_scratch(&mut line, &mut out[row * nh..(row + 1) * nh], &mut scratch)
                .expect("r2c lengths are fixed by the plan");
        }
        self.pass_y(out, &*self.fwd);
        self.pass_z(out, &*self.fwd);
        let scale = 1.0 / (n * n * n) as f64;
        for c in out.iter_mut() {
            *c *= scale;
        }
    }

    /// Inverse transform of one component. The input is consumed as scratch.
    pub(crate) fn inverse(&self, spec: &mut [Complex64], out: &mut [f64]) {
        let n = self.n;
        let nh = n / 2 + 1;
        self.pass_z(spec, &*self.inv);
        self.pass_y(spec, &*self.inv);
        let mut scratch = self.c2r.make_scratch_vec();
        for row in 0..n * n {
            let line = &mut spec[row * nh..(row + 1) * nh];
            line[0].im = 0.0;
            line[nh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(line, &mut out[row * n..(row + 1) * n], &mut scratch)
                .expect("c2r lengths are fixed by the plan");
        }
    }

    fn pass_y(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        let nh = n / 2 + 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); n * nh];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for z in 0..n {
            let plane = &mut data[z * n * nh..(z + 1) * n * nh];
            for y in 0..n {
                for kx in 0..nh {
                    buf[kx * n + y] = plane[y * nh + kx];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for y in 0..n {
                for kx in 0..nh {
                    plane[y * nh + kx] = buf[kx * n + y];
                }
            }
        }
    }

    fn pass_z(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        let nh = n / 2 + 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); n * nh];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for y in 0..n {
            for z in 0..n {
                let row = &data[(z * n + y) * nh..(z * n + y + 1) * nh];
                for kx in 0..nh {
                    buf[kx * n + z] = row[kx];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for z in 0..n {
                let row = &mut data[(z * n + y) * nh..(z * n + y + 1) * nh];
                for kx in 0..nh {
                    row[kx] = buf[kx * n + z];
                }
            }
        }
    }
}
