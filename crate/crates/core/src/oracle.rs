//! Ground truth for the Mountain Car testbed.
//!
//! States are sampled from the behavior policy's late visit log, and each
//! one is valued by Monte-Carlo rollouts of the target policy. The resulting
//! table is the reference every learning curve is scored against.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::{mc_reset, mc_step, CarState};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, SparseFeatures, TileCodingConfig};
use crate::policies::{behavior_sample, PolicyKind};

pub const ROLLOUT_STEP_CAP: u64 = 100_000;

pub const TABLE_HEADER: &str = "position,velocity,v_pi,mc_stderr,n_rollouts";

#[derive(Clone, Debug, PartialEq)]
pub struct TrueValue {
    pub state: CarState,
    pub v_pi: f64,
    pub mc_stderr: f64,
    pub n_rollouts: u64,
    /// Some rollout hit the step cap; v_pi is then a truncated return.
    pub capped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub steps: u64,
    pub sample: usize,
    pub rollouts: u64,
    pub seed: u64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrueValueTable {
    pub entries: Vec<TrueValue>,
    pub provenance: Provenance,
}

/// Runs `behavior` for `total_steps` steps, restarting at termination, and
/// draws `sample_size` distinct log positions from the second half of the
/// visited (non-terminal) states.
pub fn collect_states<R: Rng + ?Sized>(
    total_steps: u64,
    sample_size: usize,
    behavior: PolicyKind,
    rng: &mut R,
) -> Result<Vec<CarState>> {
    if sample_size as u64 > total_steps / 2 {
        return Err(Error::Config(format!(
            "cannot sample {sample_size} states from the last {} of {total_steps} steps",
            total_steps / 2
        )));
    }
    let skip = total_steps - total_steps / 2;
    let mut log = Vec::with_capacity((total_steps / 2) as usize);
    let mut s = mc_reset(rng);
    for t in 0..total_steps {
        if t >= skip {
            log.push(s);
        }
        let a = behavior_sample(behavior, s, rng);
        let tr = mc_step(s, a);
        s = if tr.terminal { mc_reset(rng) } else { tr.next };
    }
    let mut picks = sample(rng, log.len(), sample_size).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| log[i]).collect())
}

/// Undiscounted return of one target-policy episode from `start`, plus
/// whether the step cap cut it short.
pub fn rollout_return<R: Rng + ?Sized>(start: CarState, policy: PolicyKind, rng: &mut R) -> (f64, bool) {
    let mut s = start;
    let mut ret = 0.0;
    for _ in 0..ROLLOUT_STEP_CAP {
        let tr = mc_step(s, behavior_sample(policy, s, rng));
        ret += tr.reward;
        if tr.terminal {
            return (ret, false);
        }
        s = tr.next;
    }
    (ret, true)
}

/// Mean and standard error (sample stddev / √n) of `xs`.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Values `states` by `rollouts` target-policy episodes each. State `i`
/// draws from its own stream seeded with `seed ^ i`, so entries are
/// independent of scheduling.
pub fn estimate_true_values(
    states: &[CarState],
    rollouts: u64,
    seed: u64,
    policy: PolicyKind,
) -> Result<Vec<TrueValue>> {
    if rollouts < 2 {
        return Err(Error::Config("need at least two rollouts per state".into()));
    }
    Ok(states
        .par_iter()
        .enumerate()
        .map(|(i, &state)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let mut capped = false;
            let returns: Vec<f64> = (0..rollouts)
                .map(|_| {
                    let (g, cut) = rollout_return(state, policy, &mut rng);
                    capped |= cut;
                    g
                })
                .collect();
            let (v_pi, mc_stderr) = mean_stderr(&returns);
            TrueValue {
                state,
                v_pi,
                mc_stderr,
                n_rollouts: rollouts,
                capped,
            }
        })
        .collect())
}

/// Builds a full table: sample states under `behavior`, then value them
/// under the target policy.
pub fn build_table(
    total_steps: u64,
    sample_size: usize,
    rollouts: u64,
    seed: u64,
    behavior: PolicyKind,
) -> Result<TrueValueTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = collect_states(total_steps, sample_size, behavior, &mut rng)?;
    let entries = estimate_true_values(&states, rollouts, seed, PolicyKind::Target)?;
    let epsilon = match behavior {
        PolicyKind::Target => 0.0,
        PolicyKind::Behavior { epsilon } => epsilon,
    };
    Ok(TrueValueTable {
        entries,
        provenance: Provenance {
            steps: total_steps,
            sample: sample_size,
            rollouts,
            seed,
            epsilon,
        },
    })
}

/// Mean squared difference between θᵀφ(s) and v_π(s) over the table.
pub fn msve(theta: &[f64], cfg: &TileCodingConfig, table: &TrueValueTable) -> Result<f64> {
    EvalSet::new(cfg, table)?.msve(theta)
}

/// A table with its states pre-encoded, for repeated MSVE evaluation.
#[derive(Clone, Debug)]
pub struct EvalSet {
    features: Vec<SparseFeatures>,
    targets: Vec<f64>,
    dimension: usize,
}

impl EvalSet {
    pub fn new(cfg: &TileCodingConfig, table: &TrueValueTable) -> Result<Self> {
        if table.entries.is_empty() {
            return Err(Error::Config("true-value table is empty".into()));
        }
        let features = table
            .entries
            .iter()
            .map(|e| cfg.encode(e.state))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalSet {
            features,
            targets: table.entries.iter().map(|e| e.v_pi).collect(),
            dimension: cfg.dimension(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn msve(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: theta.len(),
            });
        }
        let sum: f64 = self
            .features
            .iter()
            .zip(&self.targets)
            .map(|(phi, v)| (phi.dot_unchecked(theta) - v).powi(2))
            .sum();
        Ok(sum / self.targets.len() as f64)
    }
}

fn fmt_f64(x: f64) -> String {
    // 17 significant digits round-trip every finite f64
    format!("{x:.16e}")
}

pub fn save_table(table: &TrueValueTable, path: &Path) -> Result<()> {
    let p = &table.provenance;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# steps={},sample={},rollouts={},seed={},epsilon={}",
        p.steps,
        p.sample,
        p.rollouts,
        p.seed,
        p.epsilon
    );
    let _ = writeln!(out, "{TABLE_HEADER}");
    for e in &table.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(e.state.position),
            fmt_f64(e.state.velocity),
            fmt_f64(e.v_pi),
            fmt_f64(e.mc_stderr),
            e.n_rollouts
        );
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_table(path: &Path) -> Result<TrueValueTable> {
    let text = fs::read_to_string(path)?;
    parse_table(&text, path)
}

pub fn parse_table(text: &str, path: &Path) -> Result<TrueValueTable> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut provenance = None;
    let mut header_seen = false;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            provenance = Some(parse_provenance(meta).map_err(|m| err(line_no, m))?);
            continue;
        }
        if !header_seen {
            if line != TABLE_HEADER {
                return Err(err(line_no, format!("expected header `{TABLE_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(err(line_no, format!("expected 5 columns, found {}", cols.len())));
        }
        let num = |k: usize| -> Result<f64> {
            cols[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| err(line_no, format!("column {}: {e}", k + 1)))
        };
        let n_rollouts = cols[4]
            .trim()
            .parse::<u64>()
            .map_err(|e| err(line_no, format!("column 5: {e}")))?;
        entries.push(TrueValue {
            state: CarState::new(num(0)?, num(1)?),
            v_pi: num(2)?,
            mc_stderr: num(3)?,
            n_rollouts,
            capped: false,
        });
    }
    let provenance = provenance.ok_or_else(|| err(1, "missing `# steps=..` provenance line".into()))?;
    if !header_seen {
        return Err(err(text.lines().count().max(1), "missing column header".into()));
    }
    Ok(TrueValueTable { entries, provenance })
}

fn parse_provenance(meta: &str) -> std::result::Result<Provenance, String> {
    let mut p = Provenance {
        steps: 0,
        sample: 0,
        rollouts: 0,
        seed: 0,
        epsilon: 0.0,
    };
    let mut seen = 0;
    for field in meta.split(',') {
        let (k, v) = field
            .trim()
            .split_once('=')
            .ok_or_else(|| format!("malformed provenance field `{}`", field.trim()))?;
        let bad = |e: &dyn std::fmt::Display| format!("provenance `{k}`: {e}");
        match k.trim() {
            "steps" => p.steps = v.parse().map_err(|e| bad(&e))?,
            "sample" => p.sample = v.parse().map_err(|e| bad(&e))?,
            "rollouts" => p.rollouts = v.parse().map_err(|e| bad(&e))?,
            "seed" => p.seed = v.parse().map_err(|e| bad(&e))?,
            "epsilon" => {
                p.epsilon = v.parse().map_err(|e| bad(&e))?;
                continue;
            }
            other => return Err(format!("unknown provenance field `{other}`")),
        }
        seen += 1;
    }
    if seen != 4 {
        return Err("provenance needs steps, sample, rollouts and seed".into());
    }
    Ok(p)
}
