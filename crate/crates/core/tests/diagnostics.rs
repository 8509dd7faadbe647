use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortlab_core::flowmap_maximal::hl_maximal;
use vortlab_core::grid_spectral::random::random_band_limited;
use vortlab_core::grid_spectral::{curl, divergence, vlf1, GridSpec};
use vortlab_core::harness::verify::resolved_cutoffs;
use vortlab_core::localization::localized_velocity;
use vortlab_core::lorentz::{lorentz_norm, LorentzIndex, WeightedSamples};
use vortlab_core::ns_solver::taylor_green_init;

#[test]
fn localized_parts_rebuild_the_cut_off_field() {
    let spec = GridSpec::periodic(32).unwrap();
    let u = taylor_green_init(spec, 1.0);
    let cutoffs = resolved_cutoffs(spec, 1.0).unwrap();
    let t = localized_velocity(&u, &cutoffs).unwrap();
    let phi_u = u.mul_scalar(&cutoffs.phi).unwrap();
    let gap = t.v.add(&t.w).unwrap().sub(&phi_u).unwrap().norm_l2() / phi_u.norm_l2();
    assert!(gap < 1e-12, "gap {gap:e}");
    assert!(divergence(&t.v).unwrap().max_abs() < 1e-10 * t.v.max_abs());
}

#[test]
fn lorentz_norm_of_grid_vorticity_is_rearrangement_invariant() {
    let spec = GridSpec::periodic(16).unwrap();
    let u = random_band_limited(spec, 3, 4, &mut ChaCha8Rng::seed_from_u64(5));
    let omega = curl(&u).unwrap().magnitude();
    let cell = spec.cell_volume();
    let idx = LorentzIndex::new(2.0, 3.0).unwrap();
    let forward = WeightedSamples::new(omega.data().to_vec(), vec![cell; spec.points()]).unwrap();
    let mut reversed = omega.data().to_vec();
    reversed.reverse();
    let backward = WeightedSamples::new(reversed, vec![cell; spec.points()]).unwrap();
    let (a, b) = (lorentz_norm(&forward, idx).unwrap(), lorentz_norm(&backward, idx).unwrap());
    assert!((a - b).abs() <= 1e-14 * a);
}

#[test]
fn maximal_field_survives_a_file_round_trip() {
    let spec = GridSpec::periodic(16).unwrap();
    let f = random_band_limited(spec, 1, 4, &mut ChaCha8Rng::seed_from_u64(6));
    let m = hl_maximal(&f).unwrap().with_time(0.25);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.vlf1");
    vlf1::save(&path, &m).unwrap();
    let back = vlf1::load(&path).unwrap();
    assert_eq!(back.data(), m.data());
    assert_eq!((back.spec(), back.time()), (m.spec(), 0.25));
}
