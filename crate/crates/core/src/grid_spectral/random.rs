use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use super::field::{GridField, GridSpec, SpectralField};
use super::ops::inverse_transform;

/// Random smooth field with modes `|m_i| ≤ max_mode` on every axis.
///
/// Coefficients are drawn in a fixed mode order, so the same seed yields the
/// same continuum function on every grid that resolves the band.
pub fn random_band_limited<R: Rng + ?Sized>(
    spec: GridSpec,
    components: usize,
    max_mode: usize,
    rng: &mut R,
) -> GridField {
    assert!(2 * max_mode < spec.n, "band must stay below Nyquist");
    let n = spec.n as i64;
    let k = max_mode as i64;
    let nh = spec.half();
    let wrap = |m: i64| (m.rem_euclid(n)) as usize;
    let mut s = SpectralField::zeros(spec, components);
    for c in 0..components {
        let dst = s.component_mut(c);
        for mz in -k..=k {
            for my in -k..=k {
                for mx in 0..=k {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let amp = 1.0 / (1.0 + (mx * mx + my * my + mz * mz) as f64);
                    dst[(wrap(mz) * spec.n + wrap(my)) * nh + mx as usize] = Complex64::new(re, im) * amp;
                }
            }
        }
        for mz in -k..=k {
            for my in -k..=k {
                if mz > 0 || (mz == 0 && my > 0) {
                    let v = dst[(wrap(mz) * spec.n + wrap(my)) * nh].conj();
                    dst[(wrap(-mz) * spec.n + wrap(-my)) * nh] = v;
                }
            }
        }
        dst[0].im = 0.0;
    }
    inverse_transform(&s)
}
