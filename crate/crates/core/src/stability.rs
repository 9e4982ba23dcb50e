//! Expected-update stability of linear TD(λ) with state-dependent λ.
//!
//! For a finite chain with transition matrix P, per-state discount γ and
//! bootstrapping parameter λ, and feature matrix Φ, the expected TD(λ)
//! update with zero reward is θ ← θ − α·A·θ with key matrix
//!
//! ```text
//! A   = Φᵀ D (I − P^λ) Φ,        D = diag(stationary distribution)
//! P^λ = (I − PΓΛ)⁻¹ PΓ(I − Λ),   Γ = diag(γ), Λ = diag(λ)
//! ```
//!
//! The iteration is stable when every eigenvalue of A has a positive real
//! part. Stability is decided with the Routh–Hurwitz criterion on the
//! characteristic polynomial of A; eigenvalues themselves are only computed
//! in closed form for k ≤ 3.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{chain_step, check_stochastic_row, ChainState};
use crate::error::{Error, Result};
use crate::learners::{LearnerState, SampleStep};
use crate::linalg::{closed_form_roots, compose_affine, routh_rhp_roots, Matrix};
use crate::policies::Rho;

pub const STATIONARY_TOL: f64 = 1e-12;
pub const STATIONARY_MAX_ITERS: usize = 1_000_000;
pub const JACOBI_TOL: f64 = 1e-10;
pub const INDETERMINATE_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMRP {
    pub p: Matrix,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub phi: Matrix,
}

impl FiniteMRP {
    pub fn new(p: Matrix, gamma: Vec<f64>, lambda: Vec<f64>, phi: Matrix) -> Result<Self> {
        let n = p.rows();
        if !p.is_square() || n == 0 {
            return Err(Error::Config("transition matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            check_stochastic_row(p.row(i), i)?;
        }
        for (name, v) in [("gamma", &gamma), ("lambda", &lambda)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::Config(format!("{name} entries must lie in [0, 1]")));
            }
        }
        if phi.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: phi.rows(),
            });
        }
        if phi.cols() == 0 || phi.rank(1e-10) < phi.cols() {
            return Err(Error::RankDeficient);
        }
        Ok(FiniteMRP { p, gamma, lambda, phi })
    }

    /// The two-state cycle with λ = (0, 1), γ = 0.95 and φ(S₁) = (3, 1),
    /// φ(S₂) = (1, 1), on which TD(λ) diverges.
    pub fn counterexample() -> Self {
        Self::counterexample_with_lambda(vec![0.0, 1.0])
    }

    pub fn counterexample_with_lambda(lambda: Vec<f64>) -> Self {
        FiniteMRP::new(
            Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
            vec![0.95, 0.95],
            lambda,
            Matrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 1.0]]),
        )
        .expect("built-in chain is well formed")
    }

    pub fn states(&self) -> usize {
        self.p.rows()
    }

    pub fn features(&self) -> usize {
        self.phi.cols()
    }
}

fn strongly_connected(p: &Matrix) -> bool {
    let n = p.rows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if forward { p[(i, j)] } else { p[(j, i)] };
                if edge > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// μ with μᵀP = μᵀ and Σμ = 1, for an irreducible P.
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    if !p.is_square() || n == 0 {
        return Err(Error::Config("transition matrix must be square and nonempty".into()));
    }
    if !strongly_connected(p) {
        return Err(Error::Reducible("some state cannot reach every other".into()));
    }
    let residual = |mu: &[f64]| {
        p.vec_mul(mu)
            .iter()
            .zip(mu)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    // power iteration on the lazy chain (P + I)/2, which is aperiodic
    let mut mu = vec![1.0 / n as f64; n];
    for _ in 0..STATIONARY_MAX_ITERS {
        let next: Vec<f64> = p
            .vec_mul(&mu)
            .iter()
            .zip(&mu)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let change = next.iter().zip(&mu).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        mu = next;
        if change <= STATIONARY_TOL {
            break;
        }
    }
    if residual(&mu) > 1e-10 {
        mu = stationary_direct(p)?;
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|x| *x /= total);
    if mu.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Reducible("stationary distribution is not strictly positive".into()));
    }
    Ok(mu)
}

/// Solves (Pᵀ − I)μ = 0 with one equation replaced by Σμ = 1.
fn stationary_direct(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut sys = &p.transpose() - &Matrix::identity(n);
    let mut rhs = Matrix::zeros(n, 1);
    for j in 0..n {
        sys[(n - 1, j)] = 1.0;
    }
    rhs[(n - 1, 0)] = 1.0;
    let x = sys
        .solve(&rhs, SINGULAR_TOL)
        .ok_or_else(|| Error::Reducible("stationary system is singular".into()))?;
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// P^λ = (I − PΓΛ)⁻¹ PΓ(I − Λ).
pub fn lambda_transition(p: &Matrix, gamma: &[f64], lambda: &[f64]) -> Result<Matrix> {
    let n = p.rows();
    let pg = p * &Matrix::diag(gamma);
    let one_minus: Vec<f64> = lambda.iter().map(|l| 1.0 - l).collect();
    let left = &Matrix::identity(n) - &(&pg * &Matrix::diag(lambda));
    let right = &pg * &Matrix::diag(&one_minus);
    left.solve(&right, SINGULAR_TOL).ok_or(Error::DegenerateLambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "Stable",
            Verdict::Unstable => "Unstable",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Clone, Debug)]
pub struct KeyMatrixReport {
    pub mu: Vec<f64>,
    pub p_lambda: Matrix,
    pub a: Matrix,
    pub symmetric_part_eigs: Vec<f64>,
    pub positive_definite: bool,
    /// All eigenvalues of A have positive real part (−A is Hurwitz).
    pub hurwitz_stable: bool,
    pub characteristic_polynomial: Vec<f64>,
    /// Closed-form eigenvalues of A, available for k ≤ 3.
    pub eigenvalues: Option<Vec<Complex64>>,
    pub verdict: Verdict,
}

pub fn key_matrix(mrp: &FiniteMRP) -> Result<KeyMatrixReport> {
    let mu = stationary_distribution(&mrp.p)?;
    let p_lambda = lambda_transition(&mrp.p, &mrp.gamma, &mrp.lambda)?;
    let n = mrp.states();
    let residual = &Matrix::identity(n) - &p_lambda;
    let a = &(&mrp.phi.transpose() * &Matrix::diag(&mu)) * &(&residual * &mrp.phi);
    let sym = (&a + &a.transpose()).scale(0.5);
    let symmetric_part_eigs = sym.symmetric_eigenvalues(JACOBI_TOL);
    let positive_definite = symmetric_part_eigs.iter().all(|&e| e > 0.0);
    let characteristic_polynomial = a.characteristic_polynomial();
    let verdict = classify_polynomial(&characteristic_polynomial);
    let eigenvalues = if a.rows() <= 3 {
        closed_form_roots(&characteristic_polynomial)
    } else {
        None
    };
    Ok(KeyMatrixReport {
        mu,
        p_lambda,
        a,
        symmetric_part_eigs,
        positive_definite,
        hurwitz_stable: verdict == Verdict::Stable,
        characteristic_polynomial,
        eigenvalues,
        verdict,
    })
}

/// Stable when every eigenvalue of A has real part above the tolerance,
/// Unstable when some real part is below minus the tolerance, otherwise
/// Indeterminate.
pub fn classify_stability(report: &KeyMatrixReport) -> Verdict {
    report.verdict
}

pub fn classify_matrix(a: &Matrix) -> Verdict {
    classify_polynomial(&a.characteristic_polynomial())
}

/// Like [`classify_matrix`] with a caller-chosen indeterminate band.
pub fn classify_matrix_with_band(a: &Matrix, band: f64) -> Verdict {
    classify_with_band(&a.characteristic_polynomial(), band)
}

/// Distance of the decisive eigenvalue real part from zero: for Stable, the
/// smallest real part; for Unstable, the magnitude of the most negative one.
/// Found by bisection on the width of the indeterminate band, so it needs
/// no eigensolver. Zero for Indeterminate.
pub fn stability_margin(a: &Matrix) -> f64 {
    let charpoly = a.characteristic_polynomial();
    let verdict = classify_polynomial(&charpoly);
    if verdict == Verdict::Indeterminate {
        return 0.0;
    }
    // every eigenvalue lies within the largest absolute row sum
    let bound = (0..a.rows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (INDETERMINATE_TOL, bound + 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if classify_with_band(&charpoly, mid) == verdict {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    lo
}

fn classify_polynomial(charpoly: &[f64]) -> Verdict {
    classify_with_band(charpoly, INDETERMINATE_TOL)
}

/// Counts eigenvalues on either side of the band |Re s| ≤ band by applying
/// Routh–Hurwitz to the shifted polynomials p(z + band) and p(−z − band).
fn classify_with_band(charpoly: &[f64], band: f64) -> Verdict {
    let k = charpoly.len() - 1;
    let right_of_band = routh_rhp_roots(&compose_affine(charpoly, 1.0, band));
    let left_of_band = routh_rhp_roots(&compose_affine(charpoly, -1.0, -band));
    match (left_of_band, right_of_band) {
        (Some(neg), _) if neg > 0 => Verdict::Unstable,
        (Some(0), Some(pos)) if pos == k => Verdict::Stable,
        _ => Verdict::Indeterminate,
    }
}

#[derive(Clone, Debug)]
pub struct Iteration {
    /// ‖θ‖∞ after each iteration, starting with θ₀.
    pub norms: Vec<f64>,
    pub diverged: bool,
}

pub const DIVERGENCE_NORM: f64 = 1e6;

/// Iterates θ ← θ − α·A·θ until ‖θ‖∞ exceeds 10⁶ or `max_iters` is reached.
pub fn expected_update_iterate(a: &Matrix, alpha: f64, theta0: &[f64], max_iters: usize) -> Result<Iteration> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("step size {alpha} must be positive")));
    }
    if theta0.len() != a.cols() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            actual: theta0.len(),
        });
    }
    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut theta = theta0.to_vec();
    let mut norms = vec![inf_norm(&theta)];
    for _ in 0..max_iters {
        let step = a.mul_vec(&theta);
        for (t, s) in theta.iter_mut().zip(step) {
            *t -= alpha * s;
        }
        let norm = inf_norm(&theta);
        norms.push(norm);
        if !(norm <= DIVERGENCE_NORM) {
            return Ok(Iteration { norms, diverged: true });
        }
    }
    Ok(Iteration { norms, diverged: false })
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub steps: u64,
    pub diverged: bool,
    pub final_norm: f64,
}

/// Runs sampled TD(λ) on the chain with zero rewards, starting in a
/// uniformly drawn state, until the learner's divergence guard trips or
/// `max_steps` transitions have been processed.
pub fn simulate_td_lambda(
    mrp: &FiniteMRP,
    alpha: f64,
    theta0: &[f64],
    max_steps: u64,
    seed: u64,
) -> Result<Simulation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = mrp.p.to_rows();
    let features: Vec<Vec<f64>> = mrp.phi.to_rows();
    let mut learner = LearnerState::with_theta(theta0.to_vec(), alpha)?;
    learner.divergence_threshold = DIVERGENCE_NORM;
    let mut s = ChainState(rng.gen_range(0..mrp.states()));
    for _ in 0..max_steps {
        let next = chain_step(s, &rows, &mut rng)?;
        let step = SampleStep {
            phi: features[s.0].as_slice(),
            reward: 0.0,
            phi_next: features[next.0].as_slice(),
            rho: Rho::ONE,
            gamma: mrp.gamma[next.0],
            lambda: mrp.lambda[s.0],
            trace_gamma: mrp.gamma[s.0],
        };
        match learner.tdlambda_update(&step) {
            Ok(_) => {}
            Err(Error::Diverged { step }) => {
                return Ok(Simulation {
                    steps: step + 1,
                    diverged: true,
                    final_norm: inf_norm(&learner.theta),
                })
            }
            Err(e) => return Err(e),
        }
        s = next;
    }
    Ok(Simulation {
        steps: max_steps,
        diverged: false,
        final_norm: inf_norm(&learner.theta),
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Draws an irreducible chain with `states` states and between one and
/// `states` features with entries in [−3, 3]. Transitions mix a random
/// state cycle with a random stochastic matrix, γ lies in [0.8, 0.99], and
/// most states get λ of 0 or 1. Near-cyclic chains with extreme λ are where
/// state-dependent TD(λ) goes unstable, so they are over-represented.
pub fn random_chain<R: Rng + ?Sized>(rng: &mut R, states: usize) -> FiniteMRP {
    assert!(states >= 1);
    loop {
        let mut order: Vec<usize> = (0..states).collect();
        for i in (1..states).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mix = rng.gen_range(0.0..0.5);
        let rows: Vec<Vec<f64>> = (0..states)
            .map(|i| {
                let mut row: Vec<f64> = (0..states).map(|_| rng.gen::<f64>()).collect();
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p *= mix / total);
                let pos = order.iter().position(|&s| s == i).unwrap();
                row[order[(pos + 1) % states]] += 1.0 - mix;
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= total);
                row
            })
            .collect();
        let k = rng.gen_range(1..=states);
        let phi: Vec<Vec<f64>> = (0..states)
            .map(|_| (0..k).map(|_| rng.gen_range(-3.0..=3.0)).collect())
            .collect();
        let gamma: Vec<f64> = (0..states).map(|_| rng.gen_range(0.8..0.99)).collect();
        let lambda: Vec<f64> = (0..states)
            .map(|_| match rng.gen_range(0..5) {
                0 | 1 => 0.0,
                2 | 3 => 1.0,
                _ => rng.gen::<f64>(),
            })
            .collect();
        let Ok(mrp) = FiniteMRP::new(Matrix::from_rows(&rows), gamma, lambda, Matrix::from_rows(&phi)) else {
            continue;
        };
        if lambda_transition(&mrp.p, &mrp.gamma, &mrp.lambda).is_ok() {
            return mrp;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationPlan {
    pub alpha: f64,
    pub steps: u64,
    /// Mean of ‖e‖²·‖φ − γφ′‖² along a pilot trajectory.
    pub noise: f64,
}

const PILOT_STEPS: u64 = 20_000;

/// Picks a step size small enough for sampled TD(λ) to track its expected
/// update, and enough steps for a mode with real part −`margin` to grow
/// from O(1) past the divergence guard.
///
/// Over one step the log-norm of θ drifts by about −α·Re(λ) and picks up a
/// second-order term of order α²·E‖e(φ − γφ′)ᵀ‖². The expectation is
/// measured on a pilot run, and α is set so the second-order term is a
/// twentieth of the drift.
pub fn simulation_plan(mrp: &FiniteMRP, margin: f64, seed: u64) -> Result<SimulationPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = mrp.p.to_rows();
    let phi = mrp.phi.to_rows();
    let k = mrp.features();
    let mut trace = vec![0.0; k];
    let mut s = ChainState(rng.gen_range(0..mrp.states()));
    let mut total = 0.0;
    for _ in 0..PILOT_STEPS {
        let next = chain_step(s, &rows, &mut rng)?;
        let decay = mrp.gamma[s.0] * mrp.lambda[s.0];
        for (e, x) in trace.iter_mut().zip(&phi[s.0]) {
            *e = decay * *e + x;
        }
        let diff: f64 = phi[s.0]
            .iter()
            .zip(&phi[next.0])
            .map(|(a, b)| (a - mrp.gamma[next.0] * b).powi(2))
            .sum();
        total += trace.iter().map(|e| e * e).sum::<f64>() * diff;
        s = next;
    }
    let noise = (total / PILOT_STEPS as f64).max(f64::MIN_POSITIVE);
    let alpha = (0.05 * margin / noise).min(0.01);
    let growth = (DIVERGENCE_NORM.ln() + 10.0) / (alpha * margin);
    Ok(SimulationPlan {
        alpha,
        steps: growth.ceil() as u64,
        noise,
    })
}

#[derive(Clone, Debug)]
pub struct AgreementCase {
    pub mrp: FiniteMRP,
    pub verdict: Verdict,
    pub margin: f64,
    pub plan: SimulationPlan,
    pub simulation: Simulation,
}

impl AgreementCase {
    pub fn agrees(&self) -> bool {
        self.simulation.diverged == (self.verdict == Verdict::Unstable)
    }
}

/// Compares the analytic verdict with sampled TD(λ) on random chains of
/// 2–4 states. Chains are drawn from a stream seeded with `seed`, cycling
/// through the sizes; a chain is kept when its verdict is decisive and its
/// simulation plan fits in `max_steps`, until `per_verdict` Stable and
/// `per_verdict` Unstable chains have been collected. Each kept chain is
/// then simulated from θ₀ = 1 with zero rewards.
pub fn agreement_study(seed: u64, per_verdict: usize, max_steps: u64) -> Result<Vec<AgreementCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<(FiniteMRP, Verdict, f64, SimulationPlan)> = Vec::new();
    let (mut stable, mut unstable) = (0, 0);
    let mut draw = 0u64;
    while stable < per_verdict || unstable < per_verdict {
        let mrp = random_chain(&mut rng, 2 + (draw % 3) as usize);
        draw += 1;
        let report = key_matrix(&mrp)?;
        let quota = match report.verdict {
            Verdict::Stable => &mut stable,
            Verdict::Unstable => &mut unstable,
            Verdict::Indeterminate => continue,
        };
        if *quota >= per_verdict {
            continue;
        }
        let margin = stability_margin(&report.a);
        let plan = simulation_plan(&mrp, margin, seed ^ draw)?;
        if plan.steps > max_steps {
            continue;
        }
        *quota += 1;
        picked.push((mrp, report.verdict, margin, plan));
    }
    picked
        .into_iter()
        .enumerate()
        .map(|(i, (mrp, verdict, margin, plan))| {
            let theta0 = vec![1.0; mrp.features()];
            let simulation = simulate_td_lambda(&mrp, plan.alpha, &theta0, plan.steps, seed.wrapping_add(i as u64))?;
            Ok(AgreementCase {
                mrp,
                verdict,
                margin,
                plan,
                simulation,
            })
        })
        .collect()
}

/// Parses a chain description with `[P]`, `[gamma]`, `[lambda]` and `[Phi]`
/// sections. Matrix sections hold one whitespace-separated row per line;
/// vector sections may span lines. `#` starts a comment.
pub fn parse_chain(text: &str, path: &Path) -> Result<FiniteMRP> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut p = Vec::new();
    let mut gamma = Vec::new();
    let mut lambda = Vec::new();
    let mut phi = Vec::new();
    let mut section: Option<&str> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "P" => Some("P"),
                "gamma" => Some("gamma"),
                "lambda" => Some("lambda"),
                "Phi" => Some("Phi"),
                other => return Err(err(line_no, format!("unknown section `{other}`"))),
            };
            continue;
        }
        let values = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| err(line_no, format!("`{t}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        match section {
            Some("P") => p.push((line_no, values)),
            Some("Phi") => phi.push((line_no, values)),
            Some("gamma") => gamma.extend(values),
            Some("lambda") => lambda.extend(values),
            _ => return Err(err(line_no, "data before any section header".into())),
        }
    }
    let matrix = |rows: Vec<(usize, Vec<f64>)>, name: &str| -> Result<Matrix> {
        let width = rows.first().map(|r| r.1.len()).ok_or_else(|| err(last_line, format!("missing [{name}] section")))?;
        if let Some((line, _)) = rows.iter().find(|r| r.1.len() != width) {
            return Err(err(*line, format!("[{name}] row has a different length")));
        }
        Ok(Matrix::from_rows(&rows.into_iter().map(|r| r.1).collect::<Vec<_>>()))
    };
    let p = matrix(p, "P")?;
    let phi = matrix(phi, "Phi")?;
    let n = p.rows();
    // a single value broadcasts to every state
    let broadcast = |v: Vec<f64>, name: &str| -> Result<Vec<f64>> {
        match v.len() {
            0 => Err(err(last_line, format!("missing [{name}] section"))),
            1 => Ok(vec![v[0]; n]),
            _ => Ok(v),
        }
    };
    FiniteMRP::new(p, broadcast(gamma, "gamma")?, broadcast(lambda, "lambda")?, phi)
}

pub fn load_chain(path: &Path) -> Result<FiniteMRP> {
    parse_chain(&std::fs::read_to_string(path)?, path)
}

impl fmt::Display for KeyMatrixReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
        writeln!(f, "stationary distribution: ({})", list(&self.mu))?;
        writeln!(f, "P^lambda:")?;
        write!(f, "{}", self.p_lambda)?;
        writeln!(f, "key matrix A:")?;
        write!(f, "{}", self.a)?;
        writeln!(f, "symmetric-part eigenvalues: ({})", list(&self.symmetric_part_eigs))?;
        writeln!(f, "positive definite: {}", self.positive_definite)?;
        writeln!(f, "characteristic polynomial: [{}]", list(&self.characteristic_polynomial))?;
        if let Some(eigs) = &self.eigenvalues {
            let s: Vec<String> = eigs.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
            writeln!(f, "eigenvalues of A: {}", s.join(", "))?;
        }
        writeln!(f, "-A Hurwitz: {}", self.hurwitz_stable)?;
        write!(f, "verdict: {}", self.verdict)
    }
}
