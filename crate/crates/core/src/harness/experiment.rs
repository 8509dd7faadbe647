use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InitialKind};
use super::output::{fmt_f64, ArtifactWriter, OutputRecord};
use crate::blowup::{epsilon_ladder, epsilon_selection, min_resolved_epsilon};
use crate::degiorgi::{DeGiorgi, ShrinkingCylinders};
use crate::error::{Error, Result};
use crate::flowmap_maximal::{hl_maximal, Flow, FlowOptions, SeriesSampler, SpatialInterpolation};
use crate::grid_spectral::random::random_band_limited;
use crate::grid_spectral::{curl, derivative_magnitude, divergence, gradient, project_curl, vlf1, GridField};
use crate::localization::{harmonicity, localized_v, localized_velocity, make_cutoff_pair_in, CutoffPair, LocalFrame};
use crate::lorentz::theorem_functional;
use crate::ns_solver::{run, taylor_green_init, RunOutput};
use crate::series::FieldSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Simulate,
    Localize,
    Maximal,
    Select,
    Degiorgi,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Simulate, Stage::Localize, Stage::Maximal, Stage::Select, Stage::Degiorgi, Stage::Report];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub snapshots: usize,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<OutputRecord>,
}

impl Manifest {
    pub fn succeeded(&self) -> bool {
        self.stages.iter().all(|s| s.status != StageStatus::Failed)
    }
}

/// Outcome of one stage that ran without error.
enum Done {
    Ok(String),
    Skipped(String),
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    run: RunOutput,
    series: FieldSeries,
    cutoffs: CutoffPair,
    flow: Option<Flow>,
}

pub fn initial_velocity(config: &ExperimentConfig) -> Result<GridField> {
    let s = &config.solver;
    let spec = s.solver_config()?.grid;
    if let Some(path) = &s.initial_file {
        let u = vlf1::load(path)?;
        if u.spec() != &spec || u.components() != 3 {
            return Err(Error::DimensionMismatch(format!("{} does not match the configured grid", path.display())));
        }
        return Ok(u);
    }
    Ok(match s.initial {
        InitialKind::TaylorGreen => taylor_green_init(spec, s.amplitude),
        InitialKind::Random { max_mode } => {
            if 2 * max_mode >= spec.n {
                return Err(Error::InvalidArgument(format!("max_mode {max_mode} reaches Nyquist at n = {}", spec.n)));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let u = project_curl(&random_band_limited(spec, 3, max_mode, &mut rng))?;
            let m = u.max_abs();
            if m > 0.0 {
                u.scale(s.amplitude / m)
            } else {
                u
            }
        }
    })
}

/// Runs the whole pipeline into `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    run_stages(config, &Stage::ALL, &config.output)
}

/// Runs `simulate` and then the requested stages in pipeline order.
///
/// Stage failures are recorded in the manifest; later stages still run.
pub fn run_stages(config: &ExperimentConfig, stages: &[Stage], out: &Path) -> Result<Manifest> {
    config.validate()?;
    let mut writer = ArtifactWriter::new(out)?;
    let mut records = Vec::new();
    let manifest = |records: Vec<StageRecord>, writer: &mut ArtifactWriter, snapshots: usize| -> Result<Manifest> {
        let m = Manifest {
            seed: config.seed,
            config: config.clone(),
            snapshots,
            stages: records,
            outputs: writer.records.clone(),
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(writer.root().join("manifest.json"), text)?;
        Ok(m)
    };
    let mut ctx = match simulate(config, &mut writer) {
        Ok(ctx) => ctx,
        Err(e) => {
            log::error!("simulate failed: {e}");
            records.push(StageRecord { stage: Stage::Simulate, status: StageStatus::Failed, detail: e.to_string() });
            return manifest(records, &mut writer, 0);
        }
    };
    records.push(StageRecord {
        stage: Stage::Simulate,
        status: StageStatus::Ok,
        detail: format!("{} snapshots to t = {}", ctx.series.len(), ctx.series.end()),
    });
    let mut wanted: Vec<Stage> = stages.iter().copied().filter(|s| *s != Stage::Simulate).collect();
    wanted.sort();
    wanted.dedup();
    for stage in wanted {
        log::info!("stage {stage:?}");
        let outcome = match stage {
            Stage::Localize => localize(&ctx, &mut writer),
            Stage::Maximal => maximal(&mut ctx, &mut writer),
            Stage::Select => select(&mut ctx, &mut writer),
            Stage::Degiorgi => degiorgi(&ctx, &mut writer),
            Stage::Report => report(&ctx, &mut writer),
            Stage::Simulate => unreachable!(),
        };
        let record = match outcome {
            Ok(Done::Ok(detail)) => StageRecord { stage, status: StageStatus::Ok, detail },
            Ok(Done::Skipped(detail)) => StageRecord { stage, status: StageStatus::Skipped, detail },
            Err(e) => {
                log::error!("{stage:?} failed: {e}");
                StageRecord { stage, status: StageStatus::Failed, detail: e.to_string() }
            }
        };
        records.push(record);
    }
    let n = ctx.series.len();
    manifest(records, &mut writer, n)
}

fn simulate<'a>(config: &'a ExperimentConfig, writer: &mut ArtifactWriter) -> Result<Context<'a>> {
    let solver = config.solver.solver_config()?;
    let u0 = initial_velocity(config)?;
    let run = run(&solver, &u0)?;
    let rows: Vec<Vec<String>> = run
        .energy
        .iter()
        .map(|e| [e.t, e.kinetic_energy, e.enstrophy, e.enstrophy_rate, e.leray_defect].map(fmt_f64).to_vec())
        .collect();
    writer.write_csv(
        "energy.csv",
        &["t", "kinetic_energy", "enstrophy", "enstrophy_rate", "energy_inequality_defect"],
        &rows,
    )?;
    writer.write_field("fields/u_initial.vlf1", &u0)?;
    let series = run.velocity_series()?;
    writer.write_field("fields/u_final.vlf1", series.frame(series.len() - 1))?;
    let loc = &config.localization;
    let cutoffs = make_cutoff_pair_in(solver.grid, loc.radii, loc.sharpness, loc.frame()?)?;
    Ok(Context { config, run, series, cutoffs, flow: None })
}

fn localize(ctx: &Context, writer: &mut ArtifactWriter) -> Result<Done> {
    let region = ctx.config.localization.region_radius;
    let mut rows = Vec::new();
    let mut last_v = None;
    for u in ctx.series.frames() {
        let t = localized_velocity(u, &ctx.cutoffs)?;
        let phi_u = u.mul_scalar(&ctx.cutoffs.phi)?;
        let gap_u = t.v.add(&t.w)?.sub(&phi_u)?.norm_l2() / phi_u.norm_l2().max(f64::MIN_POSITIVE);
        let phi_omega = curl(u)?.mul_scalar(&ctx.cutoffs.phi)?;
        let gap_omega =
            curl(&t.v)?.add(&t.varpi)?.sub(&phi_omega)?.norm_l2() / phi_omega.norm_l2().max(f64::MIN_POSITIVE);
        let h = harmonicity(u, &ctx.cutoffs, region)?;
        rows.push(
            [u.time(), t.v.norm_l2(), divergence(&t.v)?.max_abs(), gap_u, gap_omega, h.w, h.varpi]
                .map(fmt_f64)
                .to_vec(),
        );
        last_v = Some(t.v.with_time(u.time()));
    }
    writer.write_csv(
        "localization.csv",
        &["t", "v_l2", "div_v_max", "phi_u_decomposition_gap", "phi_omega_decomposition_gap", "w_harmonicity", "varpi_harmonicity"],
        &rows,
    )?;
    if let Some(v) = last_v {
        writer.write_field("fields/v_final.vlf1", &v)?;
    }
    Ok(Done::Ok(format!("{} frames", rows.len())))
}

fn probe_time(ctx: &Context) -> f64 {
    ctx.config.probes.time.unwrap_or(ctx.series.end())
}

fn flow<'c>(ctx: &'c mut Context) -> Result<&'c Flow> {
    if ctx.flow.is_none() {
        ctx.flow = Some(Flow::new(ctx.series.clone(), FlowOptions::default())?);
    }
    Ok(ctx.flow.as_ref().expect("flow built"))
}

/// Scales from the smallest resolved one up to `√t / 3`; empty when the cap lies below it.
fn ladder(ctx: &Context, t: f64) -> std::result::Result<Vec<f64>, String> {
    let lo = min_resolved_epsilon(ctx.series.spec());
    let cap = t.sqrt() / 3.0;
    if cap < lo {
        return Err(format!("cap √t/3 = {cap} at t = {t} is below the smallest resolved scale {lo}"));
    }
    Ok(epsilon_ladder(lo, cap, ctx.config.probes.ladder_ratio))
}

fn maximal(ctx: &mut Context, writer: &mut ArtifactWriter) -> Result<Done> {
    let t = probe_time(ctx);
    ctx.series.check_time(t)?;
    let nearest = ctx
        .series
        .frames()
        .iter()
        .min_by(|a, b| (a.time() - t).abs().total_cmp(&(b.time() - t).abs()))
        .expect("nonempty series");
    writer.write_field("fields/grad_maximal.vlf1", &hl_maximal(&gradient(nearest)?.magnitude())?.with_time(nearest.time()))?;
    if ctx.series.len() < 2 || t <= 0.0 {
        return Ok(Done::Skipped("cylinders need a positive probe time and two snapshots".into()));
    }
    let eps = match ladder(ctx, t) {
        Ok(eps) => eps,
        Err(why) => return Ok(Done::Skipped(why)),
    };
    let thresholds = ctx.config.thresholds;
    let points = ctx.config.probes.points.clone();
    let vorticity = SeriesSampler::new(ctx.series.map(|u| Ok(curl(u)?.magnitude()))?, SpatialInterpolation::Trilinear);
    let flow = flow(ctx)?;
    let (mut rows, mut summary) = (Vec::new(), Vec::new());
    for (i, x) in points.iter().enumerate() {
        let entries = flow.ladder(&vorticity, t, *x, &eps, &thresholds)?;
        for e in &entries {
            rows.push(vec![
                i.to_string(),
                fmt_f64(e.epsilon),
                e.average.map_or("".into(), fmt_f64),
                e.statistic.map_or("".into(), fmt_f64),
                e.admissible.to_string(),
            ]);
        }
        let (value, count, fallback) = match crate::flowmap_maximal::q_maximal_from(entries) {
            Ok(q) => (fmt_f64(q.value), q.admissible_count.to_string(), q.fallback.to_string()),
            Err(Error::Coverage(_)) => ("".into(), "0".into(), "true".into()),
            Err(e) => return Err(e),
        };
        summary.push(vec![i.to_string(), fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(x[2]), fmt_f64(t), value, count, fallback]);
    }
    writer.write_csv(
        "maximal_ladder.csv",
        &["point", "epsilon", "cylinder_mean_abs_vorticity", "eps2_mean_grad_maximal", "admissible"],
        &rows,
    )?;
    writer.write_csv(
        "maximal.csv",
        &["point", "x", "y", "z", "t", "q_maximal_abs_vorticity", "admissible_count", "fallback"],
        &summary,
    )?;
    Ok(Done::Ok(format!("{} points, {} ladder entries", points.len(), eps.len())))
}

fn select(ctx: &mut Context, writer: &mut ArtifactWriter) -> Result<Done> {
    let t = probe_time(ctx);
    if ctx.series.len() < 2 || t <= 0.0 {
        return Ok(Done::Skipped("selection needs a positive probe time and two snapshots".into()));
    }
    let pivot = ctx.config.pivot.pivot_config()?;
    let thresholds = ctx.config.thresholds;
    let tol = ctx.config.probes.tolerance;
    let eps = match ladder(ctx, t) {
        Ok(eps) => eps,
        Err(why) => return Ok(Done::Skipped(why)),
    };
    let points = ctx.config.probes.points.clone();
    let flow = flow(ctx)?;
    let mut rows = Vec::new();
    let mut violations = 0;
    for (i, x) in points.iter().enumerate() {
        let s = epsilon_selection(flow, t, *x, &pivot, &thresholds, &eps, tol)?;
        violations += usize::from(s.bound_holds == Some(false));
        rows.push(vec![
            i.to_string(),
            fmt_f64(x[0]),
            fmt_f64(x[1]),
            fmt_f64(x[2]),
            fmt_f64(t),
            fmt_f64(s.eps_star),
            format!("{:?}", s.case).to_lowercase(),
            fmt_f64(s.i_value),
            fmt_f64(s.bound_lhs),
            fmt_f64(s.bound_rhs),
            s.bound_holds.map_or("".into(), |b| b.to_string()),
            s.evaluations.to_string(),
        ]);
    }
    writer.write_csv(
        "selection.csv",
        &[
            "point",
            "x",
            "y",
            "z",
            "t",
            "eps_star",
            "case",
            "I_eps_star",
            "eps_star_pow_minus4",
            "scale_bound",
            "bound_holds",
            "evaluations",
        ],
        &rows,
    )?;
    Ok(Done::Ok(format!("{} points, {violations} bound violations", points.len())))
}

fn degiorgi(ctx: &Context, writer: &mut ArtifactWriter) -> Result<Done> {
    let dg = &ctx.config.degiorgi;
    let end = ctx.series.end();
    let start = end - dg.length * dg.length;
    if start < ctx.series.start() - 1e-12 {
        return Ok(Done::Skipped(format!("run ends at {end}, the cylinder needs data from {start}")));
    }
    let times = ctx.series.times();
    let first = times.iter().rposition(|&t| t <= start + 1e-12).unwrap_or(0);
    let frames = ctx.series.frames()[first..]
        .iter()
        .map(|u| Ok(localized_v(u, &ctx.cutoffs)?.0.with_time(u.time())))
        .collect::<Result<Vec<_>>>()?;
    let frame = LocalFrame::new(ctx.config.localization.center, dg.length)?;
    let cylinders = ShrinkingCylinders::new(frame, end);
    let mut v = FieldSeries::new(frames)?;
    if let Some(target) = dg.normalize_to {
        let sup = inner_sup(&v, &cylinders, dg.levels);
        if sup > 0.0 {
            v = v.map(|f| Ok(f.scale(target / sup)))?;
        }
    }
    let analysis = DeGiorgi::new(v, cylinders)?;
    let mut rows = Vec::new();
    for e in analysis.energies(0..=dg.levels) {
        let mut row = vec![
            e.k.to_string(),
            fmt_f64(e.level),
            fmt_f64(ShrinkingCylinders::flat_radius(e.k)),
            fmt_f64(e.total()),
            fmt_f64(e.sup_l2),
            fmt_f64(e.dissipation),
        ];
        if e.k == 0 {
            row.extend(["", "", "", ""].map(String::from));
        } else {
            let r = analysis.truncation_lemma_check(e.k)?;
            row.extend([r.alpha_excess, r.beta_margin(), r.indicator_margin(), r.realized_constant()].map(fmt_f64));
        }
        rows.push(row);
    }
    writer.write_csv(
        "degiorgi.csv",
        &[
            "k",
            "c_k",
            "r_k_flat",
            "U_k",
            "U_k_sup_l2",
            "U_k_dissipation",
            "alpha_excess",
            "beta_energy_margin",
            "indicator_margin",
            "indicator_realized_constant",
        ],
        &rows,
    )?;
    Ok(Done::Ok(format!("levels 0..={}", dg.levels)))
}

/// `sup |v|` over the frames and ball of the innermost cylinder.
pub fn inner_sup(v: &FieldSeries, cylinders: &ShrinkingCylinders, level: u32) -> f64 {
    let cyl = cylinders.flat(level);
    let mask = cylinders.frame.ball(v.spec(), cyl.radius);
    v.frames()
        .iter()
        .filter(|f| f.time() >= cyl.start - 1e-12 && f.time() <= cyl.end + 1e-12)
        .map(|f| {
            f.magnitude().data().iter().zip(&mask).filter(|(_, &m)| m).fold(0.0f64, |a, (x, _)| a.max(*x))
        })
        .fold(0.0, f64::max)
}

fn report(ctx: &Context, writer: &mut ArtifactWriter) -> Result<Done> {
    let l = &ctx.config.lorentz;
    let frames = ctx
        .series
        .frames()
        .iter()
        .filter(|u| u.time() > 0.0)
        .map(|u| Ok(derivative_magnitude(&curl(u)?, l.n).with_time(u.time())))
        .collect::<Result<Vec<_>>>()?;
    if frames.is_empty() {
        return Ok(Done::Skipped("the functional needs snapshots at positive times".into()));
    }
    let g = FieldSeries::new(frames)?;
    let u0 = ctx.run.snapshots[0].velocity.norm_l2().powi(2);
    let mut rows = Vec::new();
    for &c in &l.c_n {
        let value = theorem_functional(&g, l.n, l.q, c)?;
        rows.push(vec![fmt_f64(c), fmt_f64(value), fmt_f64(if u0 > 0.0 { value / u0 } else { f64::NAN })]);
    }
    writer.write_csv("lorentz.csv", &["C_n", "lorentz_1q_functional", "ratio_to_initial_l2_sq"], &rows)?;
    Ok(Done::Ok(format!("n = {}, q = {}, {} thresholds", l.n, l.q, l.c_n.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.solver.n = 16;
        cfg.solver.dt = 0.01;
        cfg.solver.t_end = 0.1;
        cfg.solver.snapshot_stride = 5;
        cfg
    }

    #[test]
    fn zero_end_time_gives_one_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.solver.t_end = 0.0;
        let m = run_stages(&cfg, &Stage::ALL, dir.path()).unwrap();
        assert_eq!(m.snapshots, 1);
        assert!(m.succeeded(), "{:?}", m.stages);
        assert_eq!(m.stages.len(), 6);
        assert!(dir.path().join("manifest.json").exists());
        assert!(m.outputs.iter().any(|o| o.path == "localization.csv"));
    }

    #[test]
    fn random_initial_data_is_seeded() {
        let mut cfg = small();
        cfg.solver.initial = InitialKind::Random { max_mode: 3 };
        let a = initial_velocity(&cfg).unwrap();
        assert_eq!(a, initial_velocity(&cfg).unwrap());
        assert!((a.max_abs() - 1.0).abs() < 1e-12);
        assert!(divergence(&a).unwrap().max_abs() < 1e-10);
        cfg.seed = 1;
        assert_ne!(a, initial_velocity(&cfg).unwrap());
    }
}
