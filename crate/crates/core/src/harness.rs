//! Seeded step-size sweeps over the Mountain Car testbed.
//!
//! A sweep runs `runs` independent learners per step size, scores each one
//! against the oracle table after every `eval_stride` episodes, and writes
//! a learning curve, a parameter study of tail error, and a manifest.
//! Output is a pure function of the config: runs are scheduled in parallel
//! but aggregated in (alpha, run) order.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::{mc_reset, mc_step};
use crate::error::{Error, Result};
use crate::features::TileCodingConfig;
use crate::learners::{LearnerState, SampleStep, DEFAULT_DIVERGENCE_THRESHOLD};
use crate::oracle::{load_table, mean_stderr, EvalSet, TrueValueTable};
use crate::policies::{behavior_sample, importance_ratio, PolicyKind};

pub const SEED_STRIDE: u64 = 1_000_000;
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Td0,
    Etd0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    OnPolicy,
    OffPolicy,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "td0" => Ok(Method::Td0),
            "etd0" => Ok(Method::Etd0),
            _ => Err(Error::Config(format!("unknown method `{s}` (td0 | etd0)"))),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on-policy" => Ok(Mode::OnPolicy),
            "off-policy" => Ok(Mode::OffPolicy),
            _ => Err(Error::Config(format!("unknown mode `{s}` (on-policy | off-policy)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Td0 => "td0",
            Method::Etd0 => "etd0",
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::OnPolicy => "on-policy",
            Mode::OffPolicy => "off-policy",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub mode: Mode,
    pub alphas: Vec<f64>,
    pub episodes: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub eval_stride: usize,
    pub oracle_path: PathBuf,
    pub tail_fraction: f64,
    pub divergence_threshold: f64,
    pub output_dir: PathBuf,
    /// Random-action probability of the behavior policy in off-policy mode.
    pub behavior_epsilon: f64,
    /// Also write every run's series to `runs.csv`.
    pub dump_runs: bool,
}

impl ExperimentConfig {
    pub fn new(method: Method, mode: Mode, alphas: Vec<f64>, episodes: usize, runs: usize) -> Self {
        ExperimentConfig {
            method,
            mode,
            alphas,
            episodes,
            runs,
            base_seed: 0,
            eval_stride: 1,
            oracle_path: PathBuf::new(),
            tail_fraction: 0.01,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            output_dir: PathBuf::from("."),
            behavior_epsilon: DEFAULT_EPSILON,
            dump_runs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1");
        }
        if self.eval_stride == 0 || self.eval_stride > self.episodes {
            return bad("eval_stride must lie in 1..=episodes");
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return bad("alphas must be a nonempty list of positive step sizes");
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return bad("tail_fraction must lie in (0, 1]");
        }
        if !(self.divergence_threshold > 0.0) {
            return bad("divergence_threshold must be positive");
        }
        if self.mode == Mode::OffPolicy && !(self.behavior_epsilon > 0.0 && self.behavior_epsilon <= 1.0) {
            return bad("off-policy behavior_epsilon must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn behavior(&self) -> PolicyKind {
        match self.mode {
            Mode::OnPolicy => PolicyKind::Target,
            Mode::OffPolicy => PolicyKind::Behavior {
                epsilon: self.behavior_epsilon,
            },
        }
    }

    pub fn seed_for(&self, alpha_index: usize, run: usize) -> u64 {
        self.base_seed + alpha_index as u64 * SEED_STRIDE + run as u64
    }

    /// Episodes in the tail window.
    pub fn tail_episodes(&self) -> usize {
        ((self.episodes as f64 * self.tail_fraction).round() as usize).max(1)
    }

    /// Episode numbers (1-based) at which MSVE is recorded.
    pub fn eval_episodes(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.episodes / self.eval_stride).map(move |k| k * self.eval_stride)
    }

    /// Parses `key = value` lines; `#` starts a comment. Unknown keys are
    /// rejected.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut method = None;
        let mut mode = None;
        let mut alphas = None;
        let mut episodes = None;
        let mut runs = None;
        let mut cfg = ExperimentConfig::new(Method::Td0, Mode::OnPolicy, vec![], 0, 0);
        let mut oracle = None;
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(n, "expected `key = value`".into()))?;
            fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
            where
                T::Err: fmt::Display,
            {
                v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
            }
            let parsed: std::result::Result<(), String> = (|| {
                match key {
                    "method" => method = Some(value.parse::<Method>().map_err(|e| e.to_string())?),
                    "mode" => mode = Some(value.parse::<Mode>().map_err(|e| e.to_string())?),
                    "alphas" => {
                        alphas = Some(
                            value
                                .split(',')
                                .map(|a| num::<f64>(a.trim()))
                                .collect::<std::result::Result<Vec<_>, _>>()?,
                        )
                    }
                    "episodes" => episodes = Some(num(value)?),
                    "runs" => runs = Some(num(value)?),
                    "base_seed" => cfg.base_seed = num(value)?,
                    "eval_stride" => cfg.eval_stride = num(value)?,
                    "oracle_path" => oracle = Some(PathBuf::from(value)),
                    "tail_fraction" => cfg.tail_fraction = num(value)?,
                    "divergence_threshold" => cfg.divergence_threshold = num(value)?,
                    "output_dir" => cfg.output_dir = PathBuf::from(value),
                    "behavior_epsilon" => cfg.behavior_epsilon = num(value)?,
                    "dump_runs" => cfg.dump_runs = num(value)?,
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })();
            parsed.map_err(|m| err(n, m))?;
        }
        let last = text.lines().count().max(1);
        let missing = |k: &str| err(last, format!("missing required key `{k}`"));
        cfg.method = method.ok_or_else(|| missing("method"))?;
        cfg.mode = mode.ok_or_else(|| missing("mode"))?;
        cfg.alphas = alphas.ok_or_else(|| missing("alphas"))?;
        cfg.episodes = episodes.ok_or_else(|| missing("episodes"))?;
        cfg.runs = runs.ok_or_else(|| missing("runs"))?;
        cfg.oracle_path = oracle.ok_or_else(|| missing("oracle_path"))?;
        // relative paths resolve against the config file's directory
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.oracle_path, &mut cfg.output_dir] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?, path)
    }

    pub fn to_text(&self) -> String {
        let alphas: Vec<String> = self.alphas.iter().map(|a| a.to_string()).collect();
        format!(
            "method = {}\nmode = {}\nalphas = {}\nepisodes = {}\nruns = {}\nbase_seed = {}\n\
             eval_stride = {}\noracle_path = {}\ntail_fraction = {}\ndivergence_threshold = {}\n\
             output_dir = {}\nbehavior_epsilon = {}\ndump_runs = {}\n",
            self.method,
            self.mode,
            alphas.join(", "),
            self.episodes,
            self.runs,
            self.base_seed,
            self.eval_stride,
            self.oracle_path.display(),
            self.tail_fraction,
            self.divergence_threshold,
            self.output_dir.display(),
            self.behavior_epsilon,
            self.dump_runs,
        )
    }
}

/// One learner's trajectory. Entries after divergence are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub msve: Vec<f64>,
    pub diverged: bool,
    pub steps: u64,
}

/// Trains one learner from θ = 0 for `cfg.episodes` episodes with the given
/// step size and seed.
pub fn run_single(
    cfg: &ExperimentConfig,
    alpha: f64,
    seed: u64,
    tiles: &TileCodingConfig,
    eval: &EvalSet,
) -> Result<RunResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = LearnerState::new(tiles.dimension(), alpha)?;
    learner.divergence_threshold = cfg.divergence_threshold;
    let behavior = cfg.behavior();
    let terminal = tiles.terminal();
    let n_evals = cfg.episodes / cfg.eval_stride;
    let mut msve = Vec::with_capacity(n_evals);
    let mut steps = 0u64;

    'episodes: for episode in 1..=cfg.episodes {
        learner.begin_episode();
        let mut s = mc_reset(&mut rng);
        let mut phi = tiles.encode(s)?;
        let mut t = 0u64;
        loop {
            let a = behavior_sample(behavior, s, &mut rng);
            let rho = importance_ratio(s, a, behavior)?;
            let tr = mc_step(s, a);
            let phi_next = if tr.terminal { terminal.clone() } else { tiles.encode(tr.next)? };
            let x = SampleStep::episodic(&phi, tr.reward, &phi_next, rho);
            let outcome = match cfg.method {
                Method::Td0 => learner.td0_update(&x),
                Method::Etd0 => {
                    let r = learner.etd0_update(&x);
                    if cfg.mode == Mode::OnPolicy && learner.followon != (t + 1) as f64 {
                        return Err(Error::Invariant(format!(
                            "on-policy followon {} at step {t}",
                            learner.followon
                        )));
                    }
                    r
                }
            };
            steps += 1;
            t += 1;
            match outcome {
                Ok(_) => {}
                Err(Error::Diverged { .. }) => break 'episodes,
                Err(e) => return Err(e),
            }
            if tr.terminal {
                break;
            }
            s = tr.next;
            phi = phi_next;
        }
        if episode % cfg.eval_stride == 0 {
            msve.push(eval.msve(&learner.theta)?);
        }
    }
    let diverged = learner.diverged_at().is_some();
    msve.resize(n_evals, f64::NAN);
    Ok(RunResult { msve, diverged, steps })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean: Option<f64>,
    pub stderr: f64,
    pub n_runs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub alpha: f64,
    pub points: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStudyRow {
    pub alpha: f64,
    pub mean_tail_msve: Option<f64>,
    pub stderr: f64,
    pub diverged_runs: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub curves: Vec<LearningCurve>,
    pub study: Vec<ParameterStudyRow>,
    /// Indexed `[alpha][run]`.
    pub runs: Vec<Vec<RunResult>>,
}

/// Mean over the finite values of `xs` with sample-stddev/√n standard error.
fn finite_stats(xs: impl Iterator<Item = f64>) -> (Option<f64>, f64, usize) {
    let vals: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    if vals.is_empty() {
        return (None, 0.0, 0);
    }
    let (m, se) = mean_stderr(&vals);
    (Some(m), se, vals.len())
}

pub fn aggregate_curve(cfg: &ExperimentConfig, alpha: f64, runs: &[RunResult]) -> LearningCurve {
    let points = cfg
        .eval_episodes()
        .enumerate()
        .map(|(k, episode)| {
            let (mean, stderr, n_runs) = finite_stats(runs.iter().map(|r| r.msve[k]));
            CurvePoint {
                episode,
                mean,
                stderr,
                n_runs,
            }
        })
        .collect();
    LearningCurve { alpha, points }
}

/// Mean MSVE over the evaluations that fall in the last `tail_episodes`.
pub fn tail_mean(cfg: &ExperimentConfig, series: &[f64]) -> f64 {
    let start = cfg.episodes - cfg.tail_episodes();
    let tail: Vec<f64> = cfg
        .eval_episodes()
        .zip(series)
        .filter(|(e, _)| *e > start)
        .map(|(_, &v)| v)
        .collect();
    if tail.is_empty() {
        // stride coarser than the tail window: use the last evaluation
        return *series.last().unwrap_or(&f64::NAN);
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

pub fn aggregate_study(cfg: &ExperimentConfig, alpha: f64, runs: &[RunResult]) -> ParameterStudyRow {
    let diverged_runs = runs.iter().filter(|r| r.diverged).count();
    let tails = runs.iter().filter(|r| !r.diverged).map(|r| tail_mean(cfg, &r.msve));
    let (mean_tail_msve, stderr, _) = finite_stats(tails);
    ParameterStudyRow {
        alpha,
        mean_tail_msve,
        stderr,
        diverged_runs,
    }
}

/// Runs every (alpha, run) pair and aggregates, without touching disk.
pub fn sweep(cfg: &ExperimentConfig, table: &TrueValueTable) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let tiles = TileCodingConfig::default();
    let eval = EvalSet::new(&tiles, table)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.alphas.len())
        .flat_map(|a| (0..cfg.runs).map(move |r| (a, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(a, r)| run_single(cfg, cfg.alphas[a], cfg.seed_for(a, r), &tiles, &eval))
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<Vec<RunResult>> = results.chunks(cfg.runs).map(<[RunResult]>::to_vec).collect();
    let curves = cfg
        .alphas
        .iter()
        .zip(&runs)
        .map(|(&alpha, rs)| aggregate_curve(cfg, alpha, rs))
        .collect();
    let study = cfg
        .alphas
        .iter()
        .zip(&runs)
        .map(|(&alpha, rs)| aggregate_study(cfg, alpha, rs))
        .collect();
    Ok(ExperimentOutput { curves, study, runs })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const CURVE_HEADER: &str = "alpha,episode,mean_msve,stderr,n_runs";
pub const STUDY_HEADER: &str = "alpha,mean_tail_msve,stderr,diverged_runs";

pub fn curve_csv(curves: &[LearningCurve]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(out, "{},{},{},{},{}", c.alpha, p.episode, opt(p.mean), p.stderr, p.n_runs);
        }
    }
    out
}

pub fn study_csv(rows: &[ParameterStudyRow]) -> String {
    let mut out = format!("{STUDY_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.alpha, opt(r.mean_tail_msve), r.stderr, r.diverged_runs);
    }
    out
}

pub fn runs_csv(cfg: &ExperimentConfig, runs: &[Vec<RunResult>]) -> String {
    let mut out = String::from("alpha,run,seed,episode,msve\n");
    for (a, rs) in runs.iter().enumerate() {
        for (r, run) in rs.iter().enumerate() {
            for (episode, v) in cfg.eval_episodes().zip(&run.msve) {
                let v = if v.is_finite() { v.to_string() } else { String::new() };
                let _ = writeln!(out, "{},{},{},{},{}", cfg.alphas[a], r, cfg.seed_for(a, r), episode, v);
            }
        }
    }
    out
}

fn manifest(cfg: &ExperimentConfig, table: &TrueValueTable) -> String {
    let p = &table.provenance;
    format!(
        "# etd-lab {}\n{}seeding = base_seed + alpha_index * {SEED_STRIDE} + run_index\n\
         oracle = steps={},sample={},rollouts={},seed={},epsilon={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.to_text(),
        p.steps,
        p.sample,
        p.rollouts,
        p.seed,
        p.epsilon
    )
}

/// Runs the sweep described by `cfg` and writes its CSVs and manifest into
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let table = load_table(&cfg.oracle_path)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let out = sweep(cfg, &table)?;
    fs::write(cfg.output_dir.join("learning_curve.csv"), curve_csv(&out.curves))?;
    fs::write(cfg.output_dir.join("param_study.csv"), study_csv(&out.study))?;
    fs::write(cfg.output_dir.join("manifest.txt"), manifest(cfg, &table))?;
    if cfg.dump_runs {
        fs::write(cfg.output_dir.join("runs.csv"), runs_csv(cfg, &out.runs))?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounce {
    pub min_error: f64,
    pub final_error: f64,
    pub bounce: bool,
}

/// Looks for a dip below the asymptote: the minimum of the moving-average
/// curve (window = 1% of its length, at least one point) is compared with
/// the mean of the last `tail_points` points. Returns `None` for curves with
/// missing or non-finite points.
pub fn detect_bounce(curve: &[f64], tail_points: usize) -> Option<Bounce> {
    if curve.is_empty() || curve.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let window = (curve.len() / 100).max(1);
    let tail_points = tail_points.clamp(1, curve.len());
    let mut sum: f64 = curve[..window].iter().sum();
    let mut min_error = sum / window as f64;
    for i in window..curve.len() {
        sum += curve[i] - curve[i - window];
        min_error = min_error.min(sum / window as f64);
    }
    let tail = &curve[curve.len() - tail_points..];
    let final_error = tail.iter().sum::<f64>() / tail.len() as f64;
    Some(Bounce {
        min_error,
        final_error,
        bounce: min_error < 0.9 * final_error,
    })
}

/// Bounce report for one learning curve, using its configured tail window.
pub fn curve_bounce(cfg: &ExperimentConfig, curve: &LearningCurve) -> Option<Bounce> {
    let values: Option<Vec<f64>> = curve.points.iter().map(|p| p.mean).collect();
    let tail_points = (cfg.tail_episodes() / cfg.eval_stride).max(1);
    detect_bounce(&values?, tail_points)
}

/// Parses a `learning_curve.csv` back into per-alpha series of means, in
/// file order.
pub fn parse_curve_csv(text: &str, path: &Path) -> Result<Vec<(f64, Vec<Option<f64>>)>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CURVE_HEADER => {}
        _ => return Err(err(1, format!("expected header `{CURVE_HEADER}`"))),
    }
    let mut out: Vec<(f64, Vec<Option<f64>>)> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(err(i + 1, format!("expected 5 columns, found {}", cols.len())));
        }
        let alpha: f64 = cols[0].parse().map_err(|e| err(i + 1, format!("alpha: {e}")))?;
        let mean = match cols[2].trim() {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|e| err(i + 1, format!("mean_msve: {e}")))?),
        };
        match out.last_mut() {
            Some((a, series)) if *a == alpha => series.push(mean),
            _ => out.push((alpha, vec![mean])),
        }
    }
    Ok(out)
}
