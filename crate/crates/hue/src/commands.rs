//! Subcommand implementations. Each writes its reports into the output
//! directory and returns the paths written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use hue_core::compare::{error_probability, ComparisonResult, Pairing};
use hue_core::density::{common_densities, EmpiricalDensity};
use hue_core::leaderboard::{analyze_leaderboard, rank_entries, ResolutionTable, Verdict};
use hue_core::metric::{point_metric, MetricKind, MetricSample, PredictorSet};
use hue_core::noisy::{fitted_ratings, GapCurve, MetricConfig, NoiseStudy, StudyConfig, ThresholdReport};
use hue_core::significance::SrmseMode;
use hue_core::synth::{nonzero_variance_fractions, synthesize_gaussian, synthesize_tensor, with_trial_shift, CalibrationProfile};
use hue_core::tensor::RatingTensor;
use hue_core::uncertainty::{
    ci_width_exponents, convergence_error_probability, convergence_intersection, recommender_family,
    simulate_borderline_rmse,
};
use hue_core::validate::{validate_tensor, ValidationConfig};
use hue_core::{analytic, RandomSeed};

use crate::cli::*;
use crate::exec::RayonExecutor;
use crate::io::{self, opt, Table};
use crate::profile::read_profile;
use crate::report::Envelope;
use crate::CliError;

pub const DEFAULT_TAU: usize = 1_000_000;
pub const DEFAULT_STUDY_TAU: usize = 100_000;

pub fn default_n_grid() -> Vec<usize> {
    vec![5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000]
}

pub fn default_p_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 50.0).collect()
}

pub fn default_deltas() -> Vec<f64> {
    vec![0.05, 0.10, 0.15, 0.20, 0.25]
}

pub fn default_offsets() -> Vec<f64> {
    (0..=6).map(|k| k as f64 / 10.0).collect()
}

pub fn default_gaps() -> Vec<f64> {
    vec![0.01, 0.05, 0.10, 0.15, 0.20, 0.25]
}

pub fn default_leaderboard_gaps() -> Vec<f64> {
    vec![0.005, 0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30]
}

struct Context {
    global: GlobalArgs,
    exec: RayonExecutor,
    written: Vec<PathBuf>,
}

impl Context {
    fn new(global: &GlobalArgs) -> Result<Self, CliError> {
        if !(global.alpha > 0.0 && global.alpha < 1.0) {
            return Err(CliError::Usage("--alpha must lie in (0, 1)".into()));
        }
        if global.bins < 2 {
            return Err(CliError::Usage("--bins must be at least 2".into()));
        }
        if global.tau == Some(0) {
            return Err(CliError::Usage("--tau must be at least 1".into()));
        }
        let exec = RayonExecutor::new(global.threads.unwrap_or(0))
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
        Ok(Self { global: global.clone(), exec, written: Vec::new() })
    }

    fn seed(&self) -> RandomSeed {
        RandomSeed::new(self.global.seed)
    }

    fn tau(&self, default: usize) -> usize {
        self.global.tau.unwrap_or(default)
    }

    fn pairing(&self) -> Pairing {
        match self.global.pairing {
            PairingArg::Independent => Pairing::Independent,
            PairingArg::Paired => Pairing::Paired,
        }
    }

    fn metric(&self, kind: MetricArg) -> MetricConfig {
        match kind {
            MetricArg::Rmse => MetricConfig::Rmse,
            MetricArg::Mae => MetricConfig::Mae,
            MetricArg::Msd => MetricConfig::Msd,
            MetricArg::Srmse => MetricConfig::Srmse {
                alpha: self.global.alpha,
                mode: match self.global.mode {
                    ModeArg::Conditional => SrmseMode::Conditional,
                    ModeArg::Filtered => SrmseMode::Filtered,
                },
            },
        }
    }

    /// Path of an output file; creates the output directory on first use.
    fn path(&self, name: &str) -> Result<PathBuf, CliError> {
        let out = &self.global.out;
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        Ok(out.join(name))
    }

    fn tensor(&self) -> Result<RatingTensor, CliError> {
        match &self.global.tensor {
            Some(p) => io::read_tensor(p),
            None => Err(CliError::Usage("this command needs --tensor".into())),
        }
    }

    /// The given tensor, or a synthetic one from the profile.
    fn tensor_or_synthetic(&self, args: &SyntheticArgs) -> Result<RatingTensor, CliError> {
        if self.global.tensor.is_some() {
            return self.tensor();
        }
        let profile = load_profile(args.profile.as_deref())?;
        Ok(synthesize_tensor(&profile, args.users, args.trials, self.seed())?.tensor)
    }

    fn report<C: Serialize, R: Serialize>(&mut self, command: &str, name: &str, config: &C, result: &R) -> Result<(), CliError> {
        let path = self.path(name)?;
        Envelope::new(command, self.global.seed, config, result, !self.global.no_timestamp).write(&path)?;
        self.written.push(path);
        Ok(())
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.path(name)?;
        table.write(&path)?;
        self.written.push(path);
        Ok(())
    }
}

fn load_profile(path: Option<&Path>) -> Result<CalibrationProfile, CliError> {
    path.map_or_else(|| Ok(CalibrationProfile::table1()), read_profile)
}

#[derive(Serialize)]
struct Config<'a, A: Serialize> {
    #[serde(flatten)]
    global: &'a GlobalArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<usize>,
    #[serde(flatten)]
    args: &'a A,
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut ctx = Context::new(&cli.global)?;
    match &cli.command {
        Command::Compare(args) => compare(&mut ctx, args)?,
        Command::Simulate(args) => simulate(&mut ctx, args)?,
        Command::Leaderboard(args) => leaderboard(&mut ctx, args)?,
        Command::Validate(args) => validate(&mut ctx, args)?,
        Command::Synthesize(args) => synthesize(&mut ctx, args)?,
        Command::Analytic(args) => analytic_check(&mut ctx, args)?,
    }
    Ok(ctx.written)
}

#[derive(Serialize)]
struct MetricComparison {
    metric: MetricKind,
    point_first: f64,
    point_second: f64,
    #[serde(flatten)]
    result: ComparisonResult,
}

#[derive(Serialize)]
struct CompareResult {
    first: String,
    second: String,
    pairs: usize,
    metrics: Vec<MetricComparison>,
}

fn compare(ctx: &mut Context, args: &CompareArgs) -> Result<(), CliError> {
    let tensor = ctx.tensor()?;
    let ratings = fitted_ratings(&tensor)?;
    let first = io::read_predictors(&args.first, &label_of(&args.first))?;
    let second = io::read_predictors(&args.second, &label_of(&args.second))?;
    let tau = ctx.tau(DEFAULT_TAU);
    let kinds = match ctx.global.metric {
        Some(m) => vec![m],
        None => vec![MetricArg::Rmse, MetricArg::Srmse, MetricArg::Mae, MetricArg::Msd],
    };
    let seed_a = ctx.seed().derive(1);
    let seed_b = match ctx.pairing() {
        Pairing::Paired => seed_a,
        Pairing::Independent => ctx.seed().derive(2),
    };
    let mut metrics = Vec::new();
    let mut densities = Table::new(&["metric", "system", "left", "right", "height"]);
    for kind in kinds {
        let metric = ctx.metric(kind);
        let a = metric.sample(&ratings, &first, tau, seed_a, &ctx.exec)?;
        let b = metric.sample(&ratings, &second, tau, seed_b, &ctx.exec)?;
        let result = error_probability(&a, &b, ctx.pairing(), ctx.global.bins)?;
        let name = metric.kind().name();
        let pair = common_densities(&[&a.values, &b.values], ctx.global.bins)?;
        for (label, d) in [(&first.label, &pair[0]), (&second.label, &pair[1])] {
            density_rows(&mut densities, &[name, label], d);
        }
        let (point_first, point_second) = point_pair(&ratings, &first, &second, metric, &a, &b)?;
        metrics.push(MetricComparison { metric: metric.kind(), point_first, point_second, result });
    }
    let result = CompareResult { first: first.label.clone(), second: second.label.clone(), pairs: ratings.len(), metrics };
    let config = Config { global: &ctx.global.clone(), tau: Some(tau), args };
    ctx.report("compare", "compare.json", &config, &result)?;
    ctx.table("densities.csv", &densities)
}

/// Point scores against the rating means; sRMSE has no point form, so its
/// sample means are reported instead.
fn point_pair(
    ratings: &hue_core::metric::RatingDistributionSet,
    first: &PredictorSet,
    second: &PredictorSet,
    metric: MetricConfig,
    a: &MetricSample,
    b: &MetricSample,
) -> Result<(f64, f64), CliError> {
    Ok(match metric {
        MetricConfig::Srmse { .. } => (a.mean(), b.mean()),
        m => (point_metric(ratings, first, m.kind())?, point_metric(ratings, second, m.kind())?),
    })
}

fn label_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn density_rows(table: &mut Table, prefix: &[&str], d: &EmpiricalDensity) {
    for (k, h) in d.heights.iter().enumerate() {
        let mut row: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
        row.extend([d.edges[k].to_string(), d.edges[k + 1].to_string(), h.to_string()]);
        table.row(&row);
    }
}

fn study_config(ctx: &Context, metric: MetricConfig, args: &StudyArgs, tau: usize) -> StudyConfig {
    StudyConfig {
        pairing: ctx.pairing(),
        noise_seeds: args.noise_seeds,
        threshold: args.threshold,
        expectation_tau: args.expectation_tau,
        p_max: args.p_max,
        ..StudyConfig::new(metric, tau, ctx.seed())
    }
}

fn simulate(ctx: &mut Context, args: &SimulateArgs) -> Result<(), CliError> {
    if !(1..=7).contains(&args.sim) {
        return Err(CliError::Usage(format!("--sim must be 1-7, got {}", args.sim)));
    }
    let tau = ctx.tau(if args.sim <= 3 { DEFAULT_TAU } else { DEFAULT_STUDY_TAU });
    let config = Config { global: &ctx.global.clone(), tau: Some(tau), args };
    match args.sim {
        1..=3 => {
            let tensor = ctx.tensor()?;
            simulate_uncertainty(ctx, args, &tensor, tau, &config)
        }
        _ => {
            let tensor = ctx.tensor_or_synthetic(&args.synthetic)?;
            simulate_noise(ctx, args, &tensor, tau, &config)
        }
    }
}

#[derive(Serialize)]
struct ConvergenceResult<T: Serialize> {
    systems: Vec<String>,
    q_mu: f64,
    q_sigma: f64,
    points: Vec<T>,
}

fn simulate_uncertainty<C: Serialize>(
    ctx: &mut Context,
    args: &SimulateArgs,
    tensor: &RatingTensor,
    tau: usize,
    config: &C,
) -> Result<(), CliError> {
    let family = recommender_family(tensor)?;
    let (alpha, bins, seed) = (ctx.global.alpha, ctx.global.bins, ctx.seed());
    let n_grid = args.n_grid.clone().unwrap_or_else(default_n_grid);
    match args.sim {
        1 => {
            let report = simulate_borderline_rmse(tensor, &family, alpha, tau, bins, seed, &ctx.exec)?;
            let mut table = Table::new(&["case", "system", "left", "right", "height"]);
            for case in &report.cases {
                for s in &case.systems {
                    density_rows(&mut table, &[case.case.name(), &s.label], &s.density);
                }
            }
            ctx.report("simulate", "sim1.json", config, &report)?;
            ctx.table("sim1_densities.csv", &table)
        }
        2 => {
            let estimates = tensor.estimate_parameters();
            let points = convergence_intersection(&estimates, &family[0], &n_grid, alpha, tau, bins, seed, &ctx.exec)?;
            let mut table = Table::new(&["n", "intersection", "se"]);
            for p in &points {
                table.row(&[p.n.to_string(), p.intersection.to_string(), p.se.to_string()]);
            }
            let (q_mu, q_sigma) = ci_width_exponents(&n_grid, alpha)?;
            let result = ConvergenceResult { systems: vec![family[0].label.clone()], q_mu, q_sigma, points };
            ctx.report("simulate", "sim2.json", config, &result)?;
            ctx.table("sim2_intersection.csv", &table)
        }
        _ => {
            let second = family
                .get(2)
                .ok_or_else(|| CliError::Core(hue_core::Error::Data("simulation 3 needs at least 2 trials".into())))?;
            let estimates = tensor.estimate_parameters();
            let points = convergence_error_probability(
                &estimates, &family[0], second, &n_grid, alpha, tau, ctx.pairing(), seed, &ctx.exec,
            )?;
            let mut table = Table::new(&["n", "p_min", "p_max"]);
            for p in &points {
                table.row(&[p.n.to_string(), p.p_min.to_string(), p.p_max.to_string()]);
            }
            let (q_mu, q_sigma) = ci_width_exponents(&n_grid, alpha)?;
            let systems = vec![family[0].label.clone(), second.label.clone()];
            ctx.report("simulate", "sim3.json", config, &ConvergenceResult { systems, q_mu, q_sigma, points })?;
            ctx.table("sim3_error_probability.csv", &table)
        }
    }
}

fn threshold_rows(table: &mut Table, metric: &str, report: &ThresholdReport) {
    for p in &report.curve {
        table.row(&[metric.into(), p.x.to_string(), p.p_error.to_string(), p.min.to_string(), p.max.to_string(), p.se.to_string()]);
    }
}

#[derive(Serialize)]
struct SuperiorityResult {
    rmse: ThresholdReport,
    srmse: ThresholdReport,
    /// sRMSE threshold over RMSE threshold.
    ratio: Option<f64>,
}

fn simulate_noise<C: Serialize>(
    ctx: &mut Context,
    args: &SimulateArgs,
    tensor: &RatingTensor,
    tau: usize,
    config: &C,
) -> Result<(), CliError> {
    let metric = ctx.metric(ctx.global.metric.unwrap_or(MetricArg::Rmse));
    let p_grid = args.p_grid.clone().unwrap_or_else(default_p_grid);
    let offsets = args.offsets.clone().unwrap_or_else(default_offsets);
    let curve_columns = ["metric", "p", "p_error", "min", "max", "se"];
    match args.sim {
        4 => {
            let study = NoiseStudy::from_tensor(tensor, study_config(ctx, metric, &args.study, tau), &ctx.exec)?;
            let report = study.threshold_curve(&p_grid)?;
            let mut table = Table::new(&curve_columns);
            threshold_rows(&mut table, metric.kind().name(), &report);
            ctx.report("simulate", "sim4.json", config, &report)?;
            ctx.table("sim4_threshold.csv", &table)
        }
        5 => {
            let study = NoiseStudy::from_tensor(tensor, study_config(ctx, metric, &args.study, tau), &ctx.exec)?;
            let deltas = args.deltas.clone().unwrap_or_else(default_deltas);
            let curves = study.offset_resolution_curves(&deltas, &offsets)?;
            let mut table = Table::new(&["delta", "offset", "p_error", "min", "max", "se"]);
            for c in &curves {
                for p in &c.points {
                    table.row(&[c.delta.to_string(), p.x.to_string(), p.p_error.to_string(), p.min.to_string(), p.max.to_string(), p.se.to_string()]);
                }
            }
            ctx.report("simulate", "sim5.json", config, &curves)?;
            ctx.table("sim5_offsets.csv", &table)
        }
        6 => {
            let study = NoiseStudy::from_tensor(tensor, study_config(ctx, metric, &args.study, tau), &ctx.exec)?;
            let gaps = args.gaps.clone().unwrap_or_else(default_gaps);
            let curves = reachable(study.gap_resolution_curves(&gaps, &offsets, args.study.gap_tolerance)?)?;
            let mut table = Table::new(&["gap", "offset", "p_needed", "p_error", "min", "max"]);
            for c in &curves {
                for p in &c.points {
                    table.row(&[c.gap.to_string(), p.offset.to_string(), opt(p.p_needed), opt(p.p_error), opt(p.min), opt(p.max)]);
                }
            }
            ctx.report("simulate", "sim6.json", config, &curves)?;
            ctx.table("sim6_gaps.csv", &table)
        }
        _ => {
            let rmse = NoiseStudy::from_tensor(tensor, study_config(ctx, MetricConfig::Rmse, &args.study, tau), &ctx.exec)?
                .threshold_curve(&p_grid)?;
            let srmse_metric = ctx.metric(MetricArg::Srmse);
            let srmse = NoiseStudy::from_tensor(tensor, study_config(ctx, srmse_metric, &args.study, tau), &ctx.exec)?
                .threshold_curve(&p_grid)?;
            let mut table = Table::new(&curve_columns);
            threshold_rows(&mut table, "rmse", &rmse);
            threshold_rows(&mut table, "srmse", &srmse);
            let ratio = match (srmse.threshold_p, rmse.threshold_p) {
                (Some(s), Some(r)) if r > 0.0 => Some(s / r),
                _ => None,
            };
            ctx.report("simulate", "sim7.json", config, &SuperiorityResult { rmse, srmse, ratio })?;
            ctx.table("sim7_threshold.csv", &table)
        }
    }
}

/// Fails when no gap on the grid could be produced below `--p-max`.
fn reachable(curves: Vec<GapCurve>) -> Result<Vec<GapCurve>, CliError> {
    if curves.iter().flat_map(|c| &c.points).all(|p| p.p_error.is_none()) {
        return Err(hue_core::Error::Numerical("no gap on the grid is reachable below --p-max").into());
    }
    Ok(curves)
}

fn leaderboard(ctx: &mut Context, args: &LeaderboardArgs) -> Result<(), CliError> {
    let entries = rank_entries(io::read_leaderboard(&args.entries)?)?;
    if args.offsets.iter().any(|o| !(*o >= 0.0 && o.is_finite())) {
        return Err(CliError::Usage("--offsets must be nonnegative".into()));
    }
    let tensor = ctx.tensor_or_synthetic(&args.synthetic)?;
    let tau = ctx.tau(DEFAULT_STUDY_TAU);
    let metric = ctx.metric(ctx.global.metric.unwrap_or(MetricArg::Rmse));
    let study = NoiseStudy::from_tensor(&tensor, study_config(ctx, metric, &args.study, tau), &ctx.exec)?;
    let gaps = args.gaps.clone().unwrap_or_else(default_leaderboard_gaps);
    let curves = reachable(study.gap_resolution_curves(&gaps, &args.offsets, args.study.gap_tolerance)?)?;
    let table = ResolutionTable::from_curves(&curves, args.study.threshold)?;
    let report = analyze_leaderboard(&entries, &table)?;
    let mut csv = Table::new(&["offset", "label", "relative_diff", "gap", "p_error", "verdict"]);
    for o in &report.offsets {
        for e in &o.entries {
            csv.row(&[
                o.offset.to_string(),
                quote(&e.label),
                e.relative_diff.to_string(),
                e.gap.to_string(),
                opt(e.p_error),
                verdict_name(e.verdict).into(),
            ]);
        }
    }
    #[derive(Serialize)]
    struct LeaderboardResult<'a> {
        table: &'a ResolutionTable,
        #[serde(flatten)]
        report: &'a hue_core::leaderboard::LeaderboardReport,
    }
    let config = Config { global: &ctx.global.clone(), tau: Some(tau), args };
    ctx.report("leaderboard", "leaderboard.json", &config, &LeaderboardResult { table: &table, report: &report })?;
    ctx.table("leaderboard.csv", &csv)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Evident => "evident",
        Verdict::NotEvident => "not_evident",
        Verdict::Undetermined => "undetermined",
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn validate(ctx: &mut Context, args: &ValidateArgs) -> Result<(), CliError> {
    let tensor = ctx.tensor()?;
    let config = ValidationConfig { lilliefors_reps: args.lilliefors_reps, ..ValidationConfig::new(ctx.global.alpha, ctx.seed()) };
    let report = validate_tensor(&tensor, &config)?;
    let mut table = Table::new(&["user", "item", "n", "d", "p_naive", "p_lilliefors", "rejected"]);
    for s in &report.slices {
        table.row(&[
            s.pair.user.to_string(),
            s.pair.item.to_string(),
            s.n.to_string(),
            s.d.to_string(),
            s.p_naive.to_string(),
            s.p_lilliefors.to_string(),
            s.rejected.to_string(),
        ]);
    }
    #[derive(Serialize)]
    struct ValidateResult<'a> {
        ks_rejection_rate: Option<f64>,
        #[serde(flatten)]
        report: &'a hue_core::validate::ValidationReport,
    }
    let cfg = Config { global: &ctx.global.clone(), tau: None, args };
    ctx.report("validate", "validate.json", &cfg, &ValidateResult { ks_rejection_rate: report.ks_rejection_rate(), report: &report })?;
    ctx.table("validate_slices.csv", &table)
}

fn synthesize(ctx: &mut Context, args: &SynthesizeArgs) -> Result<(), CliError> {
    let s = &args.synthetic;
    let profile = load_profile(s.profile.as_deref())?;
    let synthetic = if args.continuous {
        synthesize_gaussian(&profile, s.users, s.trials, ctx.seed())?
    } else {
        synthesize_tensor(&profile, s.users, s.trials, ctx.seed())?
    };
    let tensor = match (args.shift_trial, args.shift) {
        (Some(t), Some(shift)) => with_trial_shift(&synthetic.tensor, t, shift)?,
        _ => synthetic.tensor.clone(),
    };
    let tensor_path = ctx.path("tensor.csv")?;
    io::write_tensor(&tensor_path, &tensor)?;
    ctx.written.push(tensor_path);
    let mut latent = Table::new(&["user", "item", "mu", "sigma"]);
    for (p, g) in &synthetic.latent {
        latent.row(&[p.user.to_string(), p.item.to_string(), g.mu.to_string(), g.sigma.to_string()]);
    }
    #[derive(Serialize)]
    struct SynthesizeResult {
        profile: CalibrationProfile,
        dims: (usize, usize, usize),
        observations: usize,
        /// Realized per-item fraction of nonzero-variance slices.
        fractions: Vec<(u32, f64)>,
    }
    let result = SynthesizeResult {
        profile,
        dims: tensor.dims(),
        observations: tensor.observation_count(),
        fractions: nonzero_variance_fractions(&tensor).into_iter().collect(),
    };
    let cfg = Config { global: &ctx.global.clone(), tau: None, args };
    ctx.report("synthesize", "synthesize.json", &cfg, &result)?;
    ctx.table("latent.csv", &latent)
}

fn analytic_check(ctx: &mut Context, args: &AnalyticArgs) -> Result<(), CliError> {
    let tau = ctx.tau(DEFAULT_TAU);
    let mut reports = Vec::new();
    let mut pdf = Table::new(&["n", "x", "pdf", "cdf"]);
    for &n in &args.n {
        let seed = ctx.seed().derive(n);
        reports.push(analytic::analytic_vs_mc_check(n, tau, seed, &ctx.exec)?);
        let model = analytic::AnalyticRmseModel::new(n)?;
        let hi = model.mean() + 6.0 * model.variance().sqrt();
        for k in 0..=200 {
            let x = hi * k as f64 / 200.0;
            pdf.row(&[n.to_string(), x.to_string(), model.pdf(x).to_string(), model.cdf(x).to_string()]);
        }
    }
    let cfg = Config { global: &ctx.global.clone(), tau: Some(tau), args };
    ctx.report("analytic", "analytic.json", &cfg, &reports)?;
    ctx.table("analytic_pdf.csv", &pdf)
}
