//! Execute a validated plan into a [`Table`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::PathBuf;

use polywind::analytic::{self, MrtConstants, QuadratureSpec, Scheme};
use polywind::cltlab::{self, ComplexMoments};
use polywind::model::{initial_constant, InitialConfig, PolymerParams};
use polywind::montecarlo::{self, McEstimate, ParamsTemplate, Statistic, SweepAxis};
use polywind::rng::replicate_rng;

use crate::config::{CltPlan, Experiment, Plan, RotationPlan, RunConfig};
use crate::output::{write_atomic, Cell, Table};
use crate::CliError;

/// Rounded values of `Q`, `Q_tilde` and `v2` that circulate alongside the
/// formulas; reported next to the computed ones, never used.
pub const Q_QUOTED: [f64; 2] = [9.54, 9.56];
pub const Q_TILDE_QUOTED: f64 = 9.62;
pub const V2_QUOTED: f64 = 0.033;

/// Which subcommand may run which experiment.
pub fn subcommand_accepts(subcommand: &str, experiment: Experiment) -> bool {
    use Experiment::*;
    match subcommand {
        "simulate" => matches!(experiment, Mrt | Mmrt | BoundaryLayer),
        "analytic" => experiment == AnalyticConstants,
        "clt-check" => experiment == CltCheck,
        "validate" => matches!(experiment, LaplaceCheck | AMoment),
        _ => false,
    }
}

/// Validate, run and write. Returns the output path, or `None` when the
/// table went to stdout.
pub fn execute(cfg: &RunConfig, timestamp: bool) -> Result<Option<PathBuf>, CliError> {
    let plan = cfg.plan()?;
    let mut table = run_plan(&plan)?;
    let mut header = vec![format!("config={} seed={}", cfg.to_json(), cfg.seed())];
    if let Plan::Rotation(RotationPlan { axis: Some(a), .. }) = &plan {
        header.push(format!("sweep axis={}", a.column()));
    }
    if timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        header.push(format!("generated_unix={secs}"));
    }
    header.append(&mut table.comments);
    table.comments = header;
    let bytes = table.to_bytes()?;
    match &cfg.output {
        Some(path) => {
            let path = PathBuf::from(path);
            write_atomic(&path, &bytes)?;
            Ok(Some(path))
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
            Ok(None)
        }
    }
}

pub fn run_plan(plan: &Plan) -> Result<Table, CliError> {
    match plan {
        Plan::Rotation(r) => rotation(r),
        Plan::Analytic(spec) => analytic_constants(spec),
        Plan::Clt(c) => clt(c),
        Plan::Laplace { c, ys, mc } => laplace(*c, ys, mc),
        Plan::AMoment { ts, mc } => a_moment(ts, mc),
    }
}

pub const ROTATION_COLUMNS: [&str; 12] = [
    "n",
    "D",
    "L",
    "l0",
    "phi0",
    "mean",
    "stderr",
    "n_used",
    "n_timeout",
    "n_origin_fail",
    "formula",
    "status",
];

fn rotation(plan: &RotationPlan) -> Result<Table, CliError> {
    let constants = analytic::constants(&QuadratureSpec::default())?;
    let mut table = Table::new(&ROTATION_COLUMNS);
    let (axis, values) = match plan.axis {
        Some(a) => (Some(a.axis()), plan.values.clone()),
        None => (None, vec![f64::NAN]),
    };
    let rows = match axis {
        Some(axis) => montecarlo::sweep(&plan.template, axis, &values, &plan.init, plan.statistic, &plan.mc),
        None => {
            let t = &plan.template;
            let params = PolymerParams::new(t.n, t.diffusion, t.offset, t.rod_length).map_err(CliError::Model)?;
            let result = match plan.statistic {
                Statistic::Mrt => montecarlo::estimate_mrt(&params, &plan.init, &plan.mc),
                Statistic::Mmrt => montecarlo::estimate_mmrt(&params, &plan.init, &plan.mc),
            };
            vec![montecarlo::SweepRow {
                value: f64::NAN,
                params: Some(params),
                result,
            }]
        }
    };
    for row in rows {
        let (shown, init) = point(&plan.template, axis, row.value, &plan.init);
        let phi0 = match &init {
            InitialConfig::BoundaryLayer { phi0 } => Cell::Num(*phi0),
            _ => Cell::Empty,
        };
        let formula = match (plan.statistic, &row.params) {
            (Statistic::Mrt, Some(p)) => predicted_mrt(p, &init, &constants).into(),
            _ => Cell::Empty,
        };
        let mut cells = vec![
            Cell::Int(shown.n as u64),
            shown.diffusion.into(),
            shown.offset.into(),
            shown.rod_length.into(),
            phi0,
        ];
        match &row.result {
            Ok(est) => {
                cells.extend(estimate_cells(est));
                cells.push(formula);
                cells.push(Cell::Text("ok".into()));
            }
            Err(err) => {
                let status = match err {
                    polywind::Error::Infeasible { .. } => "infeasible".to_string(),
                    polywind::Error::AllReplicatesFailed(_) => "all_failed".to_string(),
                    other => format!("error: {other}"),
                };
                cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                cells.push(formula);
                cells.push(Cell::Text(status));
            }
        }
        table.push(cells);
    }
    Ok(table)
}

fn estimate_cells(est: &McEstimate) -> [Cell; 5] {
    [
        est.mean.into(),
        est.stderr.into(),
        est.n_used.into(),
        est.n_timeout.into(),
        est.n_origin_fail.into(),
    ]
}

/// Parameters and start shown for one sweep row.
fn point(t: &ParamsTemplate, axis: Option<SweepAxis>, value: f64, init: &InitialConfig) -> (ParamsTemplate, InitialConfig) {
    let mut shown = *t;
    let mut init = init.clone();
    match axis {
        Some(SweepAxis::N) => shown.n = value as usize,
        Some(SweepAxis::Diffusion) => shown.diffusion = value,
        Some(SweepAxis::Offset) => shown.offset = value,
        Some(SweepAxis::Phi0) => init = InitialConfig::BoundaryLayer { phi0: value },
        None => {}
    }
    (shown, init)
}

/// Asymptotic MRT for this start, where the formulas apply.
fn predicted_mrt(p: &PolymerParams, init: &InitialConfig, k: &MrtConstants) -> Option<f64> {
    match init {
        InitialConfig::Stretched => analytic::mrt_stretched(p.n(), p.diffusion(), k).ok(),
        InitialConfig::UniformRandom { .. } => analytic::mrt_uniform(p.n(), p.diffusion(), k).ok(),
        _ => {
            let c = initial_constant(init, p).ok()?;
            analytic::mrt_general(p.n(), p.diffusion(), c.c_n, k).ok()
        }
    }
}

pub const ANALYTIC_COLUMNS: [&str; 22] = [
    "f_2pi",
    "g_2pi",
    "q",
    "q_tilde",
    "euler_gamma",
    "f_2pi_tanh_sinh",
    "g_2pi_tanh_sinh",
    "neg_moment_a_1",
    "neg_moment_a_1_tanh_sinh",
    "v1",
    "v1_closed",
    "v2",
    "v2_closed",
    "v2_doubled_closed_form",
    "fg_residual_half_pi",
    "fg_residual_pi",
    "fg_residual_2pi",
    "q_quoted_low",
    "q_quoted_high",
    "q_tilde_quoted",
    "v2_quoted",
    "q_minus_quoted_max",
];

fn analytic_constants(spec: &QuadratureSpec) -> Result<Table, CliError> {
    let k = analytic::constants(spec)?;
    let pv = analytic::proposition_variances(spec)?;
    let ts = Scheme::TanhSinh;
    let mut table = Table::new(&ANALYTIC_COLUMNS);
    table.comments.push(format!(
        "quadrature rel_tol={:e} abs_tol={:e} truncation_cutoff={:e}",
        spec.rel_tol, spec.abs_tol, spec.truncation_cutoff
    ));
    let spread = Q_QUOTED.iter().map(|q| (k.q - q).abs()).fold(0.0, f64::max);
    table.push(vec![
        k.f_2pi.into(),
        k.g_2pi.into(),
        k.q.into(),
        k.q_tilde.into(),
        k.euler_gamma.into(),
        analytic::f_integral_with(TAU, spec, ts)?.into(),
        analytic::g_integral_with(TAU, spec, ts)?.into(),
        analytic::neg_moment_a(1.0, spec)?.into(),
        analytic::neg_moment_a_with(1.0, spec, ts)?.into(),
        pv.v1.into(),
        pv.v1_closed.into(),
        pv.v2.into(),
        pv.v2_closed.into(),
        analytic::v2_doubled_closed_form().into(),
        analytic::fg_identity_residual(FRAC_PI_2, spec)?.into(),
        analytic::fg_identity_residual(PI, spec)?.into(),
        analytic::fg_identity_residual(TAU, spec)?.into(),
        Q_QUOTED[0].into(),
        Q_QUOTED[1].into(),
        Q_TILDE_QUOTED.into(),
        V2_QUOTED.into(),
        spread.into(),
    ]);
    Ok(table)
}

pub const QV_COLUMNS: [&str; 7] = ["t", "qv_s", "qv_c", "qv_sc", "theory_s", "theory_c", "theory_sc"];
pub const LIMIT_COLUMNS: [&str; 14] = [
    "n",
    "t",
    "replicates",
    "mean_re",
    "mean_im",
    "var_re",
    "var_re_stderr",
    "var_im",
    "var_im_stderr",
    "cov",
    "cov_stderr",
    "limit_var_re",
    "limit_var_im",
    "max_z_score",
];

fn clt(plan: &CltPlan) -> Result<Table, CliError> {
    match *plan {
        CltPlan::Qv { n, t_end, dt, rows, seed } => {
            let q = cltlab::empirical_qv(n, t_end, dt, &mut replicate_rng(seed, 0))?;
            let mut table = Table::new(&QV_COLUMNS);
            let (s, c, sc) = q.sup_deviation();
            table
                .comments
                .push(format!("n={n} sup_dev_s={s:.6e} sup_dev_c={c:.6e} sup_dev_sc={sc:.6e}"));
            let last = q.times.len() - 1;
            let mut picked: Vec<usize> = (0..rows).map(|r| (r * last + (rows - 1) / 2) / (rows - 1)).collect();
            picked.dedup();
            for i in picked {
                let (ts, tc, tsc) = cltlab::theory_qv(q.times[i]);
                table.push(vec![
                    q.times[i].into(),
                    q.qv_s[i].into(),
                    q.qv_c[i].into(),
                    q.qv_sc[i].into(),
                    ts.into(),
                    tc.into(),
                    tsc.into(),
                ]);
            }
            Ok(table)
        }
        CltPlan::Limit { t_end, dt, replicates, seed, workers } => {
            let samples = cltlab::sample_limit_terminal(t_end, dt, replicates, seed, workers)?;
            let m = cltlab::complex_moments(&samples)?;
            let (vr, vi) = cltlab::limit_variances(t_end);
            let z = [
                m.mean.re / m.mean_stderr.0,
                m.mean.im / m.mean_stderr.1,
                (m.var_re - vr) / m.var_re_stderr,
                (m.var_im - vi) / m.var_im_stderr,
                m.cov / m.cov_stderr,
            ]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max);
            Ok(moments_table(None, t_end, &m, (vr, vi), z))
        }
        CltPlan::Zn { n, t, replicates, seed, workers } => {
            let r = cltlab::compare_zn_to_limit(n, t, replicates, seed, workers)?;
            Ok(moments_table(
                Some(n),
                t,
                &r.moments,
                (r.limit_var_re, r.limit_var_im),
                r.max_z_score(),
            ))
        }
    }
}

fn moments_table(n: Option<usize>, t: f64, m: &ComplexMoments, limit: (f64, f64), z: f64) -> Table {
    let mut table = Table::new(&LIMIT_COLUMNS);
    table.push(vec![
        n.map_or(Cell::Empty, Cell::from),
        t.into(),
        m.count.into(),
        m.mean.re.into(),
        m.mean.im.into(),
        m.var_re.into(),
        m.var_re_stderr.into(),
        m.var_im.into(),
        m.var_im_stderr.into(),
        m.cov.into(),
        m.cov_stderr.into(),
        limit.0.into(),
        limit.1.into(),
        z.into(),
    ]);
    table
}

pub const LAPLACE_COLUMNS: [&str; 8] = ["c", "y", "empirical", "stderr", "analytic", "z_score", "n_used", "n_timeout"];

fn laplace(c: f64, ys: &[f64], mc: &montecarlo::McConfig) -> Result<Table, CliError> {
    let exits = montecarlo::exit_times(c, mc)?;
    let mut table = Table::new(&LAPLACE_COLUMNS);
    for &y in ys {
        let est = montecarlo::laplace_transform_estimate(&exits, y)?;
        let analytic = (y * c).cosh().recip();
        let z = est.stderr.map(|se| if se > 0.0 { (est.mean - analytic) / se } else { 0.0 });
        table.push(vec![
            c.into(),
            y.into(),
            est.mean.into(),
            est.stderr.into(),
            analytic.into(),
            z.into(),
            est.n_used.into(),
            est.n_timeout.into(),
        ]);
    }
    Ok(table)
}

pub const A_MOMENT_COLUMNS: [&str; 8] = [
    "t",
    "dt",
    "mean",
    "stderr",
    "coarse_mean",
    "refinement_shift",
    "analytic",
    "z_score",
];

fn a_moment(ts: &[f64], mc: &montecarlo::McConfig) -> Result<Table, CliError> {
    let spec = QuadratureSpec::default();
    let mut table = Table::new(&A_MOMENT_COLUMNS);
    for (i, &t) in ts.iter().enumerate() {
        let point_mc = mc.with_seed(polywind::rng::derive_seed(mc.seed, i as u64));
        let est = montecarlo::exp_functional_refinement(t, &point_mc)?;
        let analytic = analytic::neg_moment_a(t, &spec).ok();
        let z = match (analytic, est.fine.stderr) {
            (Some(a), Some(se)) if se > 0.0 => Some((est.fine.mean - a) / se),
            _ => None,
        };
        table.push(vec![
            t.into(),
            est.dt.into(),
            est.fine.mean.into(),
            est.fine.stderr.into(),
            est.coarse_mean.into(),
            est.refinement_shift().into(),
            analytic.into(),
            z.into(),
        ]);
    }
    Ok(table)
}
