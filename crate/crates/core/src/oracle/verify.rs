//! The oracle suite as one callable report: every property check with its
//! measured value, tolerance and verdict.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::continuous::{compactness_diagnostics, nystrom_eigenvalues, ConvergenceStatus, GaussianToy, Grid};
use super::frequency::transition_frequencies;
use super::joint::DiscreteJoint;
use super::matrix::{check_detailed_balance, stationary_distribution, TransitionMatrix};
use super::spectrum::{mean_zero_eigenvalues, singular_relation_residual, spectrum_of_joint, svd_triplets};
use super::theorems::{
    haar_middle_kernel, haar_triviality_check, projection_middle_kernel, verify_dominance, DOMINANCE_TOL,
};
use super::DiscreteBlockedJoint;
use crate::adda::{
    adda_exact_kernel_discrete, joint_da_kernel, unit_eigenvalue_count, AddaConfig, CompletionSchedule, EpochScript,
    InProcess, ScriptedSession,
};
use crate::kernel::{da_step, PermutationGroup};
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// DA kernels of random joints: stationarity, reversibility, spectra.
    Stationarity,
    /// The 2 x 2 toy with hand-derived kernel and spectrum.
    Toy,
    /// Sandwich eigenvalue and norm dominance.
    Dominance,
    /// Group-orbit triviality of the Haar sandwich.
    Haar,
    /// Exact asynchronous kernels.
    Adda,
    /// Discretized bivariate-normal DA operator.
    Gaussian,
    /// Live samplers against exact matrices.
    Frequencies,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Stationarity,
        Suite::Toy,
        Suite::Dominance,
        Suite::Haar,
        Suite::Adda,
        Suite::Gaussian,
        Suite::Frequencies,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Stationarity => "stationarity",
            Suite::Toy => "toy",
            Suite::Dominance => "dominance",
            Suite::Haar => "haar",
            Suite::Adda => "adda",
            Suite::Gaussian => "gaussian",
            Suite::Frequencies => "frequencies",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::param(format!("unknown suite '{s}'")))
    }
}

/// Deliberate defects for checking that the suite notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Kernels are assembled from a conditional `f(x | y)` with extra mass
    /// moved onto the first state.
    PerturbConditional,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    pub mutation: Option<Mutation>,
    pub seed: u64,
    /// Total live transitions per frequency check.
    pub frequency_steps: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { suites: Suite::ALL.to_vec(), mutation: None, seed: 2_024, frequency_steps: 1_000_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub mutation: Option<Mutation>,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

struct Collector {
    suite: Suite,
    checks: Vec<CheckOutcome>,
}

impl Collector {
    /// `value <= tolerance` passes.
    fn at_most(&mut self, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) {
        self.push(name, value <= tolerance, value, tolerance, detail.into());
    }

    /// `value >= tolerance` passes.
    fn at_least(&mut self, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) {
        self.push(name, value >= tolerance, value, tolerance, detail.into());
    }

    fn push(&mut self, name: &str, passed: bool, value: f64, tolerance: f64, detail: String) {
        // NaN must fail, which the comparisons above already ensure.
        self.checks.push(CheckOutcome { suite: self.suite, name: name.into(), passed, value, tolerance, detail });
    }
}

const PERTURBATION: f64 = 0.05;

/// `f(x | y)` as the kernels under test see it.
fn conditional(joint: &DiscreteJoint, mutation: Option<Mutation>) -> DMatrix<f64> {
    let mut b = joint.x_given_y();
    if mutation == Some(Mutation::PerturbConditional) {
        for mut row in b.row_iter_mut() {
            row[0] += PERTURBATION;
            row /= 1.0 + PERTURBATION;
        }
    }
    b
}

fn da_kernel(joint: &DiscreteJoint, mutation: Option<Mutation>) -> Result<TransitionMatrix> {
    TransitionMatrix::new(joint.y_given_x() * conditional(joint, mutation))
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Runs the selected suites. Checks never abort the run; a check that
/// cannot be evaluated is recorded as failed with the error as detail.
pub fn run_verification(options: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for (i, &suite) in options.suites.iter().enumerate() {
        let mut rng = RngStream::new(options.seed, i as u64);
        let mut c = Collector { suite, checks: Vec::new() };
        let outcome = match suite {
            Suite::Stationarity => stationarity(&mut c, options.mutation, &mut rng),
            Suite::Toy => toy(&mut c, options.mutation),
            Suite::Dominance => dominance(&mut c, &mut rng),
            Suite::Haar => haar(&mut c, &mut rng),
            Suite::Adda => adda(&mut c, &mut rng),
            Suite::Gaussian => gaussian(&mut c),
            Suite::Frequencies => frequencies(&mut c, options.mutation, options.frequency_steps, &mut rng),
        };
        if let Err(e) = outcome {
            c.push("suite completed", false, f64::NAN, 0.0, e.to_string());
        }
        checks.extend(c.checks);
    }
    Ok(VerifyReport {
        seed: options.seed,
        mutation: options.mutation,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn stationarity(c: &mut Collector, mutation: Option<Mutation>, rng: &mut RngStream) -> Result<()> {
    let (mut stat, mut balance, mut eig, mut neg, mut rel) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for case in 0..100 {
        let (sx, sy) = (rng.random_range(2..=20), rng.random_range(2..=20));
        let j = DiscreteJoint::random(sx, sy, case % 2 == 0, rng);
        let k = da_kernel(&j, mutation)?;
        let fx = j.x_marginal();
        stat = stat.max((k.matrix().transpose() * fx - fx).amax());
        balance = balance.max(check_detailed_balance(k.matrix(), fx));
        eig = eig.max(match stationary_distribution(&k) {
            Ok(pi) => (pi - fx).amax(),
            Err(_) => f64::INFINITY,
        });
        neg = neg.max(-mean_zero_eigenvalues(k.matrix(), fx).into_iter().fold(0.0, f64::min));
        rel = rel.max(singular_relation_residual(&j, &svd_triplets(&j)));
    }
    let d = "100 random joints up to 20 x 20";
    c.at_most("DA kernel leaves the x-marginal invariant", stat, 1e-12, d);
    c.at_most("DA kernel satisfies detailed balance", balance, 1e-12, d);
    c.at_most("stationary eigenvector equals the x-marginal", eig, 1e-12, d);
    c.at_most("DA spectrum is nonnegative", neg, 1e-12, d);
    c.at_most("singular triplets satisfy the operator relations", rel, 1e-10, d);
    Ok(())
}

fn toy(c: &mut Collector, mutation: Option<Mutation>) -> Result<()> {
    let j = DiscreteJoint::new(DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.4]))?;
    let k = da_kernel(&j, mutation)?;
    let expected = DMatrix::from_row_slice(2, 2, &[0.68, 0.32, 0.32, 0.68]);
    c.at_most("toy kernel is [[0.68, 0.32], [0.32, 0.68]]", (k.matrix() - expected).amax(), 1e-14, "");
    let pi = stationary_distribution(&k)?;
    c.at_most("toy stationary law is (0.5, 0.5)", (pi - DVector::from_element(2, 0.5)).amax(), 1e-14, "");
    let ev = mean_zero_eigenvalues(k.matrix(), j.x_marginal());
    c.at_most("toy mean-zero eigenvalue is 0.36", (ev[0] - 0.36).abs(), 1e-14, "");
    let s = spectrum_of_joint(&j);
    let beta = s.triplets.as_ref().map_or(f64::NAN, |t| t[0].beta);
    c.at_most("toy singular value squared equals the eigenvalue", (beta * beta - ev[0]).abs(), 1e-14, "");
    Ok(())
}

fn random_cyclic_group(n: usize, rng: &mut RngStream) -> Result<PermutationGroup> {
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(rng);
    let mut generator: Vec<usize> = (0..n).collect();
    let mut i = 0;
    while i < n {
        let len = rng.random_range(1..=3).min(n - i);
        for k in 0..len {
            generator[points[i + k]] = points[i + (k + 1) % len];
        }
        i += len;
    }
    PermutationGroup::cyclic(generator)
}

fn dominance(c: &mut Collector, rng: &mut RngStream) -> Result<()> {
    let (mut excess, mut norm_excess, mut criterion_failures) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0usize);
    for _ in 0..100 {
        let (sx, sy) = (rng.random_range(2..=10), rng.random_range(2..=10));
        let j = DiscreteJoint::random(sx, sy, true, rng);
        let g = random_cyclic_group(sy, rng)?;
        let r = haar_middle_kernel(j.y_marginal(), &g)?;
        let rep = verify_dominance(&j, &r)?;
        excess = excess.max(rep.max_pointwise_excess);
        norm_excess = norm_excess.max(rep.sandwich_norm - rep.da_norm);
        if !(rep.equality_criterion_holds && rep.norm_criterion_holds) {
            criterion_failures += 1;
        }
    }
    let d = "100 random joints with group-induced idempotent middles";
    c.at_most("sandwich eigenvalues are dominated pointwise", excess, DOMINANCE_TOL, d);
    c.at_most("sandwich norm is at most the DA norm", norm_excess, DOMINANCE_TOL, d);
    c.at_most("equality and strict-norm criteria agree with the spectra", criterion_failures as f64, 0.0, d);

    let (mut gap, mut others) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let j = DiscreteJoint::random(5, 6, true, rng);
        let t = svd_triplets(&j);
        let r = projection_middle_kernel(j.y_marginal(), &[t[0].h.clone()])?;
        let rep = verify_dominance(&j, &r)?;
        gap = gap.max(rep.equality_checks[0].eigen_gap);
        others = others.min(rep.equality_checks[1..].iter().map(|e| e.eigen_gap).fold(f64::INFINITY, f64::min));
    }
    let d = "middle fixing the leading function h_1, 20 joints";
    c.at_most("equality holds where R h_i = h_i", gap, 1e-12, d);
    c.at_least("dominance is strict elsewhere", others, 1e-8, d);
    Ok(())
}

fn haar(c: &mut Collector, rng: &mut RngStream) -> Result<()> {
    let flip = PermutationGroup::new(vec![(0..6).collect(), (0..6).rev().collect()])?;
    let sx = 4;
    let cond: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            let w: Vec<f64> = (0..sx).map(|_| rng.random::<f64>() + 0.1).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let fy: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.1).collect();
    let inv = DiscreteJoint::from_weights(DMatrix::from_fn(sx, 6, |x, y| fy[y] * cond[y.min(5 - y)][x]))?;
    let rep = haar_triviality_check(&inv, &flip)?;
    c.at_most("orbit-invariant conditional gives identical kernels", rep.max_kernel_difference, 1e-12, "sign flip on 6 points");
    let generic = DiscreteJoint::random(4, 6, true, rng);
    let rep = haar_triviality_check(&generic, &flip)?;
    c.at_least("generic joint gives a strict eigenvalue drop", rep.max_eigenvalue_drop, DOMINANCE_TOL, "sign flip on 6 points");
    Ok(())
}

fn adda(c: &mut Collector, rng: &mut RngStream) -> Result<()> {
    let mut res = 0.0f64;
    let mut da_diff = 0.0f64;
    for (sx, sizes) in [(2, [2, 2]), (3, [2, 3]), (4, [3, 2]), (3, [4, 4])] {
        for _ in 0..5 {
            let joint = DiscreteBlockedJoint::random(sx, &sizes, rng);
            let pi = joint.joint_vector();
            let sel: Vec<[f64; 2]> = (0..sx)
                .map(|_| {
                    let p: f64 = rng.random();
                    [p, 1.0 - p]
                })
                .collect();
            for eps in [0.0, 0.3, 1.0] {
                let k = adda_exact_kernel_discrete(&joint, &sel, eps)?;
                res = res.max((k.matrix().transpose() * &pi - &pi).amax());
                if eps == 1.0 {
                    da_diff = da_diff.max(k.max_abs_diff(&joint_da_kernel(&joint)));
                }
            }
        }
    }
    let d = "20 random two-block joints, x-dependent selection, epsilon in {0, 0.3, 1}";
    c.at_most("asynchronous kernel leaves the joint invariant", res, 1e-12, d);
    c.at_most("full-refresh kernel equals the joint DA kernel", da_diff, 1e-12, d);
    let joint = DiscreteBlockedJoint::random(3, &[2, 3], rng);
    let stuck = adda_exact_kernel_discrete(&joint, &[[1.0, 0.0]; 3], 0.0)?;
    c.at_least(
        "refreshing one block only is reducible",
        unit_eigenvalue_count(&stuck, 1e-8) as f64,
        2.0,
        "count of unit eigenvalues",
    );
    Ok(())
}

fn gaussian(c: &mut Collector) -> Result<()> {
    let toy = GaussianToy::new(0.5)?;
    let ev = nystrom_eigenvalues(&toy, &Grid::symmetric(8.0, 400)?);
    let err = worst([0.25, 0.0625, 0.015625].iter().enumerate().map(|(i, e)| (ev[i + 1] - e).abs()));
    c.at_most("discretized eigenvalues match rho^(2i)", err, 1e-3, "rho = 0.5, N = 400, L = 8");
    let rep = compactness_diagnostics(&toy, &Grid::symmetric(8.0, 100)?, 4);
    let converged = |s: &ConvergenceStatus| if *s == ConvergenceStatus::Converged { 1.0 } else { 0.0 };
    c.at_least("trace quadrature converges under refinement", converged(&rep.trace.status), 1.0, "");
    c.at_least("Hilbert-Schmidt quadrature converges under refinement", converged(&rep.hilbert_schmidt.status), 1.0, "");
    Ok(())
}

fn frequencies(c: &mut Collector, mutation: Option<Mutation>, steps: usize, rng: &mut RngStream) -> Result<()> {
    let j = DiscreteJoint::random(4, 5, true, rng);
    let k = da_kernel(&j, mutation)?;
    let rep = transition_frequencies(&k, (steps / k.size()).max(1), |x, r| da_step(&j, &x, r), rng)?;
    c.at_most(
        "live DA transitions match the exact kernel",
        rep.max_standardized_deviation + rep.impossible_transitions as f64,
        3.0,
        format!("{steps} steps, largest deviation in standard errors"),
    );

    let joint = DiscreteBlockedJoint::random(2, &[2, 2], rng);
    let c1 = 0.7;
    let exact = adda_exact_kernel_discrete(&joint, &[[c1, 1.0 - c1]; 2], 0.3)?;
    let mut coin = rng.split(1);
    let schedule = CompletionSchedule::generated(move |_| {
        let order = if coin.random::<f64>() < c1 { vec![0, 1] } else { vec![1, 0] };
        EpochScript::new(order, Vec::new())
    });
    let config = AddaConfig::new(2, 0.5, 0.3)?;
    let mut session = ScriptedSession::new(&joint, &config, (0, vec![0, 0]), rng, schedule, &InProcess)?;
    let ny = joint.latent_count();
    let rep = transition_frequencies(
        &exact,
        (steps / exact.size()).max(1),
        |s, _| {
            session.restart(s / ny, &joint.latent_from_index(s % ny))?;
            session.epoch()?;
            Ok(session.x() * ny + joint.latent_index(&session.latent()))
        },
        rng,
    )?;
    c.at_most(
        "scripted asynchronous transitions match the exact kernel",
        rep.max_standardized_deviation + rep.impossible_transitions as f64,
        3.0,
        format!("k = 2, r = 0.5, epsilon = 0.3, {steps} steps"),
    );
    Ok(())
}
