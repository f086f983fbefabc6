//! Tiny posterior instances with independent quadrature oracles, and the
//! chain-versus-oracle moment comparison shared by the model and
//! acceptance suites.

use damcmc::diagnostics::batch_means_se;
use damcmc::kernel::{run_chain, ChainMeta, ChainTrace};
use damcmc::models::*;
use damcmc::oracle::TwoBlockVariant;
use damcmc::{Result, RngStream};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::posterior::*;

/// One moment of one coordinate: chain estimate with batch-means SE against
/// the oracle value.
#[derive(Clone, Debug)]
pub struct MomentCheck {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub exact: f64,
}

impl MomentCheck {
    pub fn z(&self) -> f64 {
        (self.estimate - self.exact).abs() / self.se
    }

    pub fn passes(&self, k: f64) -> bool {
        self.z() <= k
    }
}

pub fn moment_checks(label: &str, series: &[f64], mean: f64, second: f64) -> Vec<MomentCheck> {
    let m = batch_means_se(series, None).unwrap();
    let sq: Vec<f64> = series.iter().map(|x| x * x).collect();
    let s = batch_means_se(&sq, None).unwrap();
    vec![
        MomentCheck { label: format!("{label} mean"), estimate: m.mean, se: m.se, exact: mean },
        MomentCheck { label: format!("{label} second moment"), estimate: s.mean, se: s.se, exact: second },
    ]
}

fn chain<S: damcmc::kernel::TraceRow>(
    name: &str,
    step: impl FnMut(&S, &mut RngStream) -> Result<S>,
    init: S,
    n: usize,
    seed: u64,
) -> ChainTrace {
    let mut rng = RngStream::new(seed, 0);
    run_chain(ChainMeta::new(name, name), step, init, n, 2_000, &mut rng).unwrap()
}

fn ln_phi(x: f64) -> f64 {
    Normal::standard().cdf(x).ln()
}

// ---- lasso and elastic net, p = 1, m = 5 ----

pub fn shrinkage_data() -> (DMatrix<f64>, DVector<f64>) {
    let w = DMatrix::from_column_slice(5, 1, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
    let z = DVector::from_vec(vec![-1.4, -0.2, 0.3, 0.6, 1.5]);
    (w, z)
}

/// Log of the joint posterior of `(beta, sigma^2)` written from the
/// hierarchical model with the intercept integrated out.
fn shrinkage_log_target(beta: f64, s2: f64, l1: f64, l2: f64, shape: f64, rate: f64) -> f64 {
    if s2 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let (w, z) = shrinkage_data();
    let zbar = z.mean();
    let rss: f64 = (0..5).map(|i| (z[i] - zbar - w[(i, 0)] * beta).powi(2)).sum();
    let n = 5.0;
    // Normal likelihood with sigma^(n-1), prior beta | s2 with one factor
    // 1/sigma, inverse-gamma prior on s2.
    -(n - 1.0) / 2.0 * s2.ln() - rss / (2.0 * s2) - 0.5 * s2.ln() - l1 * beta.abs() / s2.sqrt()
        - l2 * beta * beta / (2.0 * s2)
        - (shape + 1.0) * s2.ln()
        - rate / s2
}

fn shrinkage_oracle(l1: f64, l2: f64, shape: f64, rate: f64) -> Vec<f64> {
    let f = |b: f64, s2: f64| shrinkage_log_target(b, s2, l1, l2, shape, rate);
    let peak = grid_peak_2d(&f, (-2.0, 2.0), (0.01, 3.0));
    expectations_2d(
        &|s2, b| f(b, s2),
        &Domain::Above(0.0),
        &[0.05, 0.2, 1.0, 5.0],
        &Domain::Real,
        &|_| vec![0.0],
        peak,
        &[&|_, b| b, &|_, b| b * b, &|s2, _| s2, &|s2, _| s2 * s2],
    )
}

/// Reference prior: `beta` moments only, since `sigma^2` has infinite variance
/// with five observations. Proper prior: `beta` and `sigma^2` moments.
pub fn lasso_checks(n: usize, seed: u64) -> Vec<MomentCheck> {
    let (w, z) = shrinkage_data();
    let mut out = Vec::new();
    for (tag, shape, rate) in [("reference", 0.0, 0.0), ("proper", 3.0, 1.0)] {
        let m = LassoModel::new(w.clone(), &z, 1.0, VariancePrior::new(shape, rate).unwrap()).unwrap();
        let t = chain("lasso", |x, r| lasso_da_step(&m, x, r), RegressionState::new(DVector::from_element(1, 0.5), 1.0), n, seed);
        let o = shrinkage_oracle(1.0, 0.0, shape, rate);
        out.extend(moment_checks(&format!("lasso/{tag} beta"), &t.column(0), o[0], o[1]));
        if shape > 0.0 {
            out.extend(moment_checks(&format!("lasso/{tag} sigma2"), &t.column(1), o[2], o[3]));
        }
    }
    out
}

pub fn elastic_net_checks(n: usize, seed: u64) -> Vec<MomentCheck> {
    let (w, z) = shrinkage_data();
    let (l1, l2, shape, rate) = (1.0, 0.5, 3.0, 1.0);
    let m = ElasticNetModel::new(w, &z, l1, l2, VariancePrior::new(shape, rate).unwrap()).unwrap();
    let t = chain("en", |x, r| elastic_net_da_step(&m, x, r), RegressionState::new(DVector::from_element(1, -0.5), 2.0), n, seed);
    let o = shrinkage_oracle(l1, l2, shape, rate);
    let mut out = moment_checks("elastic-net beta", &t.column(0), o[0], o[1]);
    out.extend(moment_checks("elastic-net sigma2", &t.column(1), o[2], o[3]));
    out
}

// ---- Pólya-Gamma logistic, p = 1, m = 3 ----

pub fn logistic_checks(n: usize, seed: u64) -> Vec<MomentCheck> {
    let w = [0.5, -1.0, 1.5];
    let zs = [1u32, 0, 1];
    let design = DMatrix::from_column_slice(3, 1, &w);
    let prior = GaussianPrior::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
    let m = LogisticModel::new(design, zs.to_vec(), vec![1; 3], prior, false).unwrap();
    let log_post = |b: f64| {
        let lik: f64 = (0..3)
            .map(|i| {
                let e = w[i] * b;
                let p = 1.0 / (1.0 + (-e).exp());
                if zs[i] == 1 { p.ln() } else { (1.0 - p).ln() }
            })
            .sum();
        lik - b * b / 2.0
    };
    let peak = grid_peak_1d(&log_post, (-10.0, 10.0));
    let o = expectations_1d(&log_post, &Domain::Real, &[], peak, &[&|b| b, &|b| b * b]);
    let t = chain("pg", |x, r| pg_logistic_da_step(&m, x, r), DVector::from_element(1, 0.0), n, seed);
    moment_checks("logistic beta", &t.column(0), o[0], o[1])
}

// ---- probit GLMM, q = 1, m = 2 ----

pub fn probit_toy() -> ProbitGlmmModel {
    let w = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
    let v = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
    let blocks = [RandomEffectBlock::scalar(1.0).unwrap()];
    ProbitGlmmModel::new(&w, v, &DVector::from_element(1, 0.3), &blocks, vec![true, false]).unwrap()
}

pub fn probit_oracle() -> Vec<f64> {
    let log_post = |u: f64| ln_phi(0.3 + u) + ln_phi(-(0.3 + u)) - u * u / 2.0;
    let peak = grid_peak_1d(&log_post, (-10.0, 10.0));
    expectations_1d(&log_post, &Domain::Real, &[], peak, &[&|u| u, &|u| u * u])
}

pub fn probit_checks(n: usize, seed: u64) -> Vec<MomentCheck> {
    let m = probit_toy();
    let o = probit_oracle();
    let t = chain("probit-da", |x, r| probit_glmm_da_step(&m, x, r), DVector::from_element(1, 1.0), n, seed);
    let mut out = moment_checks("probit u", &t.column(0), o[0], o[1]);
    let t = chain("probit-px", |x, r| probit_haar_pxda_step(&m, x, r), DVector::from_element(1, 1.0), n, seed + 1);
    out.extend(moment_checks("probit PX-DA u", &t.column(0), o[0], o[1]));
    out
}

// ---- robit, p = 1, m = 2, nu = 4 ----

pub fn robit_toy(nu: f64) -> RobitModel {
    let w = DMatrix::from_column_slice(2, 1, &[1.0, -0.5]);
    RobitModel::new(w, vec![true, true], nu, DVector::from_element(1, 0.2), DMatrix::from_element(1, 1, 0.5)).unwrap()
}

pub fn robit_checks(n: usize, seed: u64) -> Vec<MomentCheck> {
    let nu = 4.0;
    let m = robit_toy(nu);
    let t_dist = StudentsT::new(0.0, 1.0, nu).unwrap();
    let log_post = |b: f64| t_dist.cdf(b).ln() + t_dist.cdf(-0.5 * b).ln() - 0.25 * (b - 0.2).powi(2);
    let peak = grid_peak_1d(&log_post, (-20.0, 20.0));
    let o = expectations_1d(&log_post, &Domain::Real, &[], peak, &[&|b| b, &|b| b * b]);
    let t = chain("robit", |x, r| robit_da_step(&m, x, r), DVector::from_element(1, 0.0), n, seed);
    moment_checks("robit beta", &t.column(0), o[0], o[1])
}

// ---- quantile regression, p = 1, n = 4, alpha = 0.3 ----

pub const QR_W: [f64; 4] = [0.5, 1.0, -0.7, 1.5];
pub const QR_Z: [f64; 4] = [0.8, 1.1, -0.2, 2.0];
pub const QR_ALPHA: f64 = 0.3;

pub fn quantreg_toy() -> QuantRegModel {
    let prior = QuantRegPrior {
        beta_mean: DVector::zeros(1),
        beta_covariance: DMatrix::from_element(1, 1, 10.0),
        n0: 3.0,
        t0: 2.0,
    };
    QuantRegModel::new(DMatrix::from_column_slice(4, 1, &QR_W), DVector::from_column_slice(&QR_Z), QR_ALPHA, prior).unwrap()
}

/// Log posterior of `(beta, sigma)` with the asymmetric-Laplace likelihood
/// written from the check-loss definition.
pub fn quantreg_log_target(beta: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let a = QR_ALPHA;
    let lik: f64 = (0..4)
        .map(|i| {
            let e = (QR_Z[i] - QR_W[i] * beta) / sigma;
            let rho = e * (a - if e < 0.0 { 1.0 } else { 0.0 });
            (a * (1.0 - a)).ln() - rho - sigma.ln()
        })
        .sum();
    lik - beta * beta / 20.0 - 2.5 * sigma.ln() - 1.0 / sigma
}

pub fn quantreg_oracle() -> Vec<f64> {
    let kinks: Vec<f64> = (0..4).map(|i| QR_Z[i] / QR_W[i]).collect();
    let peak = grid_peak_2d(&quantreg_log_target, (-3.0, 4.0), (0.01, 3.0));
    expectations_2d(
        &quantreg_log_target,
        &Domain::Real,
        &kinks,
        &Domain::Above(0.0),
        &|_| vec![0.1, 0.5, 2.0],
        peak,
        &[&|b, _| b, &|b, _| b * b, &|_, s| s],
    )
}

pub fn quantreg_init() -> QuantRegState {
    (DVector::from_element(1, 0.0), DVector::from_element(4, 1.0))
}

pub fn quantreg_checks(n: usize, seed: u64) -> Vec<MomentCheck> {
    let m = quantreg_toy();
    let o = quantreg_oracle();
    let mut out = Vec::new();
    let t = chain("qr-tb", |x, r| quantreg_two_block_step(&m, x, r), quantreg_init(), n, seed);
    out.extend(moment_checks("quantile-regression beta", &t.column(0), o[0], o[1]));
    for j in [1u8, 2] {
        let v = TwoBlockVariant::from_index(j).unwrap();
        let t = chain("qr-px", |x, r| quantreg_two_block_pxda_step(&m, v, x, r), quantreg_init(), n, seed + j as u64);
        out.extend(moment_checks(&format!("quantile-regression PX-DA({j}) beta"), &t.column(0), o[0], o[1]));
    }
    out
}

pub fn assert_checks(checks: &[MomentCheck]) {
    for c in checks {
        assert!(c.passes(3.0), "{}: {} vs {} ({:.2} SE)", c.label, c.estimate, c.exact, c.z());
    }
}


// ---- asynchronous lasso, m = 20, p = 8, four blocks ----

pub fn adda_lasso(blocks: usize) -> damcmc::adda::Blocked<LassoModel> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut rng = RngStream::new(2_024, 0);
    let (m, p) = (20, 8);
    let w = damcmc::models::design::center_columns(&DMatrix::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal)));
    let beta = DVector::from_vec(vec![1.5, -1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 2.0]);
    let z = &w * &beta + DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let model = LassoModel::new(w, &z, 1.0, VariancePrior::new(2.0, 1.0).unwrap()).unwrap();
    damcmc::adda::Blocked::even(model, blocks).unwrap()
}

pub fn adda_lasso_init() -> (RegressionState, DVector<f64>) {
    (RegressionState::new(DVector::zeros(8), 1.0), DVector::from_element(8, 1.0))
}

/// Four workers of unequal speed with jittered item times.
pub fn adda_latency() -> damcmc::adda::LatencyModel {
    damcmc::adda::LatencyModel::new(vec![1.0, 1.3, 1.7, 2.5], 0.5, 0.2, 0.5).unwrap()
}

/// Two estimates of one posterior mean with their batch-means SEs.
#[derive(Clone, Debug)]
pub struct MeanComparison {
    pub label: String,
    pub left: f64,
    pub right: f64,
    pub se: f64,
}

impl MeanComparison {
    pub fn z(&self) -> f64 {
        (self.left - self.right).abs() / self.se
    }
}

pub fn compare_means(labels: &[String], left: &ChainTrace, right: &ChainTrace, columns: &[(usize, usize)]) -> Vec<MeanComparison> {
    columns
        .iter()
        .zip(labels)
        .map(|(&(a, b), label)| {
            let l = batch_means_se(&left.column(a), None).unwrap();
            let r = batch_means_se(&right.column(b), None).unwrap();
            MeanComparison { label: label.clone(), left: l.mean, right: r.mean, se: l.se.hypot(r.se) }
        })
        .collect()
}

/// Lasso posterior means of `(beta, sigma^2)` from the asynchronous chain
/// (k = 4, r = 0.5, epsilon = 0.1, simulated timing) against single-block DA.
pub fn adda_lasso_comparison(n: usize, seed: u64) -> Vec<MeanComparison> {
    use damcmc::adda::{adda_run, AddaConfig, Driver};
    let blocked = adda_lasso(4);
    let config = AddaConfig::new(4, 0.5, 0.1).unwrap();
    let mut rng = RngStream::new(seed, 0);
    let adda = adda_run(&blocked, &config, adda_lasso_init(), n, 2_000, &mut rng, Driver::Simulated(adda_latency())).unwrap();
    let model = blocked.model();
    let da = chain("lasso", |x, r| lasso_da_step(model, x, r), adda_lasso_init().0, n, seed + 1);
    let labels: Vec<String> = (0..8).map(|j| format!("beta{j}")).chain(["sigma2".to_string()]).collect();
    compare_means(&labels, &adda.trace, &da, &(0..9).map(|j| (j, j)).collect::<Vec<_>>())
}

/// Single-transition frequencies of the scripted two-block chain
/// (r = 0.5, epsilon = 0.3, block 0 first with probability 0.7) against the
/// exact kernel, `total_steps` spread over all joint states.
pub fn scripted_frequency_report(total_steps: usize, seed: u64) -> damcmc::oracle::FrequencyReport {
    use damcmc::adda::*;
    use damcmc::oracle::{transition_frequencies, DiscreteBlockedJoint};
    use rand::Rng;
    let mut rng = RngStream::new(seed, 0);
    let joint = DiscreteBlockedJoint::random(2, &[2, 2], &mut rng);
    let c1 = 0.7;
    let exact = adda_exact_kernel_discrete(&joint, &[[c1, 1.0 - c1]; 2], 0.3).unwrap();
    let mut coin = RngStream::new(seed, 1);
    let schedule = CompletionSchedule::generated(move |_| {
        let order = if coin.random::<f64>() < c1 { vec![0, 1] } else { vec![1, 0] };
        EpochScript::new(order, Vec::new())
    });
    let config = AddaConfig::new(2, 0.5, 0.3).unwrap();
    let mut session = ScriptedSession::new(&joint, &config, (0, vec![0, 0]), &mut rng, schedule, &InProcess).unwrap();
    let ny = joint.latent_count();
    transition_frequencies(
        &exact,
        total_steps / exact.size(),
        |s, _| {
            session.restart(s / ny, &joint.latent_from_index(s % ny))?;
            session.epoch()?;
            Ok(session.x() * ny + joint.latent_index(&session.latent()))
        },
        &mut rng,
    )
    .unwrap()
}

/// Cost and mixing of the asynchronous lasso for r in {1, 0.5, 0.25}.
pub fn wall_clock_rows(n: usize, seed: u64) -> Vec<damcmc::adda::WallClockRow> {
    let model = adda_lasso(4);
    damcmc::adda::adda_wall_clock_report(
        &model,
        &[(1.0, 1.0), (0.5, 0.1), (0.25, 0.1)],
        &adda_latency(),
        adda_lasso_init(),
        n,
        500,
        &mut RngStream::new(seed, 0),
    )
    .unwrap()
}
