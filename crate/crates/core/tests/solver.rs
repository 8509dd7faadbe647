use vortlab_core::grid_spectral::{divergence, GridField, GridSpec};
use vortlab_core::ns_solver::{
    local_energy_residual, run, taylor_green_init, SolverConfig, TestFunction,
};

fn bump(spec: GridSpec, radius: f64) -> GridField {
    GridField::scalar_from_fn(spec, |x| {
        let r2 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (radius * radius);
        if r2 < 1.0 {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    })
}

#[test]
fn taylor_green_energy_inequality_and_divergence() {
    let spec = GridSpec::periodic(32).unwrap();
    let u0 = taylor_green_init(spec, 1.0);
    let mut cfg = SolverConfig::new(spec, 1e-3, 0.5);
    cfg.snapshot_stride = 50;
    let out = run(&cfg, &u0).unwrap();
    let defect = out.energy.iter().map(|e| e.leray_defect.abs()).fold(0.0, f64::max);
    assert!(defect <= 1e-8, "leray defect {defect:e}");
    for s in &out.snapshots {
        let div = divergence(&s.velocity).unwrap().max_abs();
        assert!(div <= 1e-10 * s.velocity.max_abs(), "div {div:e}");
    }
    let first = &out.energy[0];
    let second = &out.energy[1];
    let de = second.kinetic_energy - first.kinetic_energy;
    let dt = second.t - first.t;
    let quad = 0.5 * dt * (first.enstrophy + second.enstrophy)
        + dt * dt / 12.0 * (first.enstrophy_rate - second.enstrophy_rate);
    assert!((de + quad).abs() <= 1e-6 * de.abs(), "{de} vs {quad}");
}

#[test]
fn taylor_green_refinement_agrees() {
    let mut finals = Vec::new();
    for n in [32, 64] {
        let spec = GridSpec::periodic(n).unwrap();
        let mut cfg = SolverConfig::new(spec, 1e-3, 0.5);
        cfg.snapshot_stride = 500;
        let out = run(&cfg, &taylor_green_init(spec, 1.0)).unwrap();
        finals.push(out.energy.last().unwrap().kinetic_energy);
    }
    let rel = (finals[0] - finals[1]).abs() / finals[1];
    assert!(rel <= 1e-6, "{rel:e}");
}

#[test]
fn local_energy_balance_is_near_equality() {
    let spec = GridSpec::periodic(32).unwrap();
    let cfg = SolverConfig::new(spec, 1e-3, 0.1);
    let out = run(&cfg, &taylor_green_init(spec, 1.0)).unwrap();
    let psi = TestFunction::new(bump(spec, 2.0), (0.0, 0.1)).unwrap();
    let r = local_energy_residual(&out.snapshots, &psi, 1.0).unwrap();
    assert!(r.value.abs() <= 1e-4 * r.dissipation);

    let zero = run(&SolverConfig::new(spec, 1e-3, 0.01), &GridField::zeros(spec, 3)).unwrap();
    let psi = TestFunction::new(bump(spec, 2.0), (0.0, 0.01)).unwrap();
    assert_eq!(local_energy_residual(&zero.snapshots, &psi, 1.0).unwrap().value, 0.0);
}
