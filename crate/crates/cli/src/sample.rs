//! Builds the configured model from data and runs its chains.

use std::collections::HashMap;
use std::time::Duration;

use damcmc::adda::{
    adda_run, AddaConfig, AddaStats, Blocked, BlockedAugmentedModel, CompletionSchedule, Driver, EpochScript,
    LatencyModel, ThreadedOptions,
};
use damcmc::kernel::{run_chain, ChainMeta, ChainTrace, TraceRow};
use damcmc::models::design::{center_columns, standardize_columns};
use damcmc::models::*;
use damcmc::oracle::TwoBlockVariant;
use damcmc::RngStream;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{
    AddaSection, DataConfig, DriverKind, GaussianPriorConfig, KernelTag, LoadedConfig, MatrixSpec, ModelConfig, RunConfig,
    VariancePriorConfig,
};
use crate::data::Dataset;
use crate::error::{CliError, CliResult};

pub struct ChainOutput {
    pub trace: ChainTrace,
    pub adda: Option<AddaStats>,
}

/// All chains of one run, with display column names.
pub struct Sampled {
    pub columns: Vec<String>,
    pub chains: Vec<ChainOutput>,
}

fn invalid(e: damcmc::Error) -> CliError {
    CliError::Validation(e.to_string())
}

struct Design {
    names: Vec<String>,
    w: DMatrix<f64>,
}

fn design(cfg: &DataConfig, data: &Dataset, reserved: &[&str]) -> CliResult<Design> {
    let mut excluded = vec![cfg.response.as_str()];
    excluded.extend(cfg.trials.as_deref());
    excluded.extend_from_slice(reserved);
    let mut names = match &cfg.design {
        Some(cols) => {
            if let Some(c) = cols.iter().find(|c| excluded.contains(&c.as_str())) {
                return Err(CliError::Validation(format!("column '{c}' cannot be both a design column and reserved")));
            }
            cols.clone()
        }
        None => data.remaining(&excluded),
    };
    let mut w = data.matrix(&names)?;
    if cfg.intercept {
        w = w.insert_column(0, 1.0);
        names.insert(0, "intercept".into());
    }
    if cfg.standardize {
        w = standardize_columns(&w).map_err(invalid)?;
    } else if cfg.center {
        w = center_columns(&w);
    }
    if names.is_empty() {
        return Err(CliError::Validation("the design has no columns".into()));
    }
    Ok(Design { names, w })
}

/// Maps generic trace column names onto data column names.
struct Labels(HashMap<String, String>);

impl Labels {
    fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        Self(pairs.into_iter().collect())
    }

    fn indexed(generic: &str, nice: &str, names: &[String]) -> Vec<(String, String)> {
        names.iter().enumerate().map(|(j, n)| (format!("{generic}{j}"), format!("{nice}.{n}"))).collect()
    }

    fn apply(&self, columns: &[String]) -> Vec<String> {
        columns
            .iter()
            .map(|c| match c.strip_prefix("x.") {
                Some(inner) if self.0.contains_key(inner) => format!("x.{}", self.0[inner]),
                _ => self.0.get(c).cloned().unwrap_or_else(|| c.clone()),
            })
            .collect()
    }
}

struct Settings {
    seed: u64,
    iterations: usize,
    burn_in: usize,
    chains: usize,
    meta: ChainMeta,
}

impl Settings {
    fn chain_error(c: usize, e: damcmc::Error) -> CliError {
        CliError::Runtime(format!("chain {c}: {e}"))
    }

    fn run<S, K>(&self, init: S, step: K) -> CliResult<Vec<ChainOutput>>
    where
        S: TraceRow + Clone + Sync,
        K: Fn(&S, &mut RngStream) -> damcmc::Result<S> + Sync,
    {
        (0..self.chains)
            .into_par_iter()
            .map(|c| {
                let mut rng = RngStream::new(self.seed, c as u64);
                run_chain(self.meta.clone(), &step, init.clone(), self.iterations, self.burn_in, &mut rng)
                    .map(|trace| ChainOutput { trace, adda: None })
                    .map_err(|e| Self::chain_error(c, e))
            })
            .collect()
    }

    fn run_adda<M>(&self, model: &M, plan: &AddaPlan, init: (M::State, M::Latent)) -> CliResult<Vec<ChainOutput>>
    where
        M: BlockedAugmentedModel,
        M::State: Sync,
        M::Latent: Sync,
    {
        (0..self.chains)
            .into_par_iter()
            .map(|c| {
                let mut rng = RngStream::new(self.seed, c as u64);
                let run = adda_run(model, &plan.config, init.clone(), self.iterations, self.burn_in, &mut rng, plan.driver()?)
                    .map_err(|e| Self::chain_error(c, e))?;
                Ok(ChainOutput { trace: run.trace, adda: Some(run.stats) })
            })
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    epochs: Vec<EpochScript>,
}

/// A validated ADDA section, ready to hand a fresh driver to each chain.
pub struct AddaPlan {
    pub config: AddaConfig,
    pub latency: LatencyModel,
    kind: DriverKind,
    scripts: Vec<EpochScript>,
    stall_timeout: Option<Duration>,
}

impl AddaPlan {
    pub fn new(section: &AddaSection, loaded: &LoadedConfig) -> CliResult<Self> {
        let config = AddaConfig::new(section.blocks, section.fraction, section.epsilon).map_err(invalid)?;
        let l = &section.latency;
        let items = l.item_seconds.resolve(section.blocks, "adda.latency.item_seconds")?;
        let latency = LatencyModel::new(items.as_slice().to_vec(), l.variation, l.message_seconds, l.manager_seconds)
            .map_err(invalid)?;
        let scripts = match &section.schedule {
            Some(p) => {
                let path = loaded.resolve(p);
                let text =
                    std::fs::read_to_string(&path).map_err(|source| CliError::Input { path: path.clone(), source })?;
                let file: ScheduleFile = toml::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                for s in &file.epochs {
                    s.validate(section.blocks).map_err(invalid)?;
                }
                CompletionSchedule::cyclic(file.epochs.clone()).map_err(invalid)?;
                file.epochs
            }
            None => Vec::new(),
        };
        Ok(Self {
            config,
            latency,
            kind: section.driver,
            scripts,
            stall_timeout: section.stall_timeout_seconds.map(Duration::from_secs_f64),
        })
    }

    fn driver(&self) -> CliResult<Driver> {
        Ok(match self.kind {
            DriverKind::Simulated => Driver::Simulated(self.latency.clone()),
            DriverKind::Scripted => Driver::Scripted(CompletionSchedule::cyclic(self.scripts.clone()).map_err(invalid)?),
            DriverKind::Threaded => {
                let mut opts = ThreadedOptions::default();
                if let Some(t) = self.stall_timeout {
                    opts.stall_timeout = t;
                }
                Driver::Threaded(opts)
            }
        })
    }
}

fn variance_prior(p: &Option<VariancePriorConfig>) -> CliResult<VariancePrior> {
    match p {
        Some(p) => VariancePrior::new(p.shape, p.rate).map_err(invalid),
        None => Ok(VariancePrior::reference()),
    }
}

/// Runs the configured chains.
pub fn sample(loaded: &LoadedConfig, data: &Dataset) -> CliResult<Sampled> {
    let cfg = &loaded.config;
    let settings = Settings {
        seed: cfg.seed,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        chains: cfg.chains,
        meta: ChainMeta::new(cfg.kernel.to_string(), cfg.model.family()),
    };
    let plan = cfg.adda.as_ref().map(|a| AddaPlan::new(a, loaded)).transpose()?;
    let (labels, chains) = dispatch(cfg, data, &settings, plan.as_ref())?;
    let columns = labels.apply(chains[0].trace.columns());
    Ok(Sampled { columns, chains })
}

fn dispatch(cfg: &RunConfig, data: &Dataset, s: &Settings, plan: Option<&AddaPlan>) -> CliResult<(Labels, Vec<ChainOutput>)> {
    let dc = &cfg.data;
    match &cfg.model {
        ModelConfig::Lasso { lambda, variance_prior: vp } => {
            let (names, model) = lasso(dc, data, *lambda, vp)?;
            shrinkage(model, &names, s, plan, lasso_da_step)
        }
        ModelConfig::ElasticNet { lambda1, lambda2, variance_prior: vp } => {
            let d = design(dc, data, &[])?;
            let z = data.column(&dc.response)?;
            let model = ElasticNetModel::new(d.w, &z, *lambda1, *lambda2, variance_prior(vp)?).map_err(invalid)?;
            let labels = shrinkage_labels(&d.names);
            let init = RegressionState::new(DVector::zeros(d.names.len()), 1.0);
            Ok((labels, s.run(init, |x, r| elastic_net_da_step(&model, x, r))?))
        }
        ModelConfig::Logistic { prior, assert_proper } => {
            let (names, model) = logistic(dc, data, prior, *assert_proper)?;
            let p = names.len();
            let labels = Labels::new(Labels::indexed("x", "beta", &names));
            let init = DVector::zeros(p);
            match plan {
                Some(plan) => {
                    let m = data.len();
                    let blocked = Blocked::even(model, plan.config.blocks()).map_err(invalid)?;
                    Ok((labels, s.run_adda(&blocked, plan, (init, DVector::from_element(m, 1.0)))?))
                }
                None => Ok((labels, s.run(init, |x, r| pg_logistic_da_step(&model, x, r))?)),
            }
        }
        ModelConfig::ProbitGlmm { random_effects, beta } => {
            let random_cols: Vec<String> = random_effects.iter().flat_map(|b| b.columns.clone()).collect();
            let reserved: Vec<&str> = random_cols.iter().map(String::as_str).collect();
            let fixed = design(dc, data, &reserved)?;
            let beta = match beta {
                Some(b) => b.resolve(fixed.names.len(), "model.beta")?,
                None => DVector::zeros(fixed.names.len()),
            };
            let v = data.matrix(&random_cols)?;
            let blocks = random_effects
                .iter()
                .map(|b| {
                    let cols = b.columns.len();
                    let l = b.lambda.dim().unwrap_or(1);
                    if l == 0 || cols % l != 0 {
                        return Err(CliError::Validation(format!(
                            "random effect over {cols} columns cannot have a {l} x {l} lambda"
                        )));
                    }
                    let lambda = b.lambda.resolve(l, "lambda")?;
                    let structure = b.structure.as_ref().unwrap_or(&MatrixSpec::Scalar(1.0));
                    let structure = structure.resolve(cols / l, "structure")?;
                    RandomEffectBlock::new(lambda, structure).map_err(invalid)
                })
                .collect::<CliResult<Vec<_>>>()?;
            let z = data.binary(&dc.response)?;
            let model = ProbitGlmmModel::new(&fixed.w, v, &beta, &blocks, z).map_err(invalid)?;
            let labels = Labels::new(Labels::indexed("x", "u", &random_cols));
            let init = DVector::zeros(random_cols.len());
            let chains = match cfg.kernel {
                KernelTag::HaarPxda => s.run(init, |x, r| probit_haar_pxda_step(&model, x, r))?,
                _ => s.run(init, |x, r| probit_glmm_da_step(&model, x, r))?,
            };
            Ok((labels, chains))
        }
        ModelConfig::Robit { nu, prior } => {
            let d = design(dc, data, &[])?;
            let p = d.names.len();
            let z = data.binary(&dc.response)?;
            let model = RobitModel::new(
                d.w,
                z,
                *nu,
                prior.mean.resolve(p, "prior.mean")?,
                prior.precision.resolve(p, "prior.precision")?,
            )
            .map_err(invalid)?;
            let labels = Labels::new(Labels::indexed("x", "beta", &d.names));
            Ok((labels, s.run(DVector::zeros(p), |x, r| robit_da_step(&model, x, r))?))
        }
        ModelConfig::Quantreg { alpha, prior } => {
            let d = design(dc, data, &[])?;
            let p = d.names.len();
            let z = data.column(&dc.response)?;
            let prior = QuantRegPrior {
                beta_mean: prior.mean.resolve(p, "prior.mean")?,
                beta_covariance: prior.covariance.resolve(p, "prior.covariance")?,
                n0: prior.n0,
                t0: prior.t0,
            };
            let model = QuantRegModel::new(d.w, z, *alpha, prior).map_err(invalid)?;
            let n = data.len();
            let mut pairs: Vec<(String, String)> = d
                .names
                .iter()
                .enumerate()
                .map(|(j, name)| (format!("u.x{j}"), format!("beta.{name}")))
                .collect();
            pairs.extend((0..n).map(|i| (format!("v.x{i}"), format!("scale.{i}"))));
            let init: QuantRegState = (DVector::zeros(p), DVector::from_element(n, 1.0));
            let chains = match cfg.kernel {
                KernelTag::TwoBlockPxda(j) => {
                    let variant = TwoBlockVariant::from_index(j).map_err(invalid)?;
                    s.run(init, |x, r| quantreg_two_block_pxda_step(&model, variant, x, r))?
                }
                _ => s.run(init, |x, r| quantreg_two_block_step(&model, x, r))?,
            };
            Ok((Labels::new(pairs), chains))
        }
    }
}

fn lasso(dc: &DataConfig, data: &Dataset, lambda: f64, vp: &Option<VariancePriorConfig>) -> CliResult<(Vec<String>, LassoModel)> {
    let d = design(dc, data, &[])?;
    let z = data.column(&dc.response)?;
    let model = LassoModel::new(d.w, &z, lambda, variance_prior(vp)?).map_err(invalid)?;
    Ok((d.names, model))
}

fn logistic(
    dc: &DataConfig,
    data: &Dataset,
    prior: &Option<GaussianPriorConfig>,
    assert_proper: bool,
) -> CliResult<(Vec<String>, LogisticModel)> {
    let d = design(dc, data, &[])?;
    let p = d.names.len();
    let successes = data.counts(&dc.response)?;
    let trials = match &dc.trials {
        Some(t) => data.counts(t)?,
        None => vec![1; data.len()],
    };
    let prior = match prior {
        Some(g) => GaussianPrior::new(g.mean.resolve(p, "prior.mean")?, g.precision.resolve(p, "prior.precision")?)
            .map_err(invalid)?,
        None => GaussianPrior::flat(p),
    };
    let model = LogisticModel::new(d.w, successes, trials, prior, assert_proper).map_err(invalid)?;
    Ok((d.names, model))
}

fn shrinkage_labels(names: &[String]) -> Labels {
    Labels::new(Labels::indexed("beta", "beta", names))
}

fn shrinkage(
    model: LassoModel,
    names: &[String],
    s: &Settings,
    plan: Option<&AddaPlan>,
    step: fn(&LassoModel, &RegressionState, &mut RngStream) -> damcmc::Result<RegressionState>,
) -> CliResult<(Labels, Vec<ChainOutput>)> {
    let p = names.len();
    let init = RegressionState::new(DVector::zeros(p), 1.0);
    let chains = match plan {
        Some(plan) => {
            let blocked = Blocked::even(model, plan.config.blocks()).map_err(invalid)?;
            s.run_adda(&blocked, plan, (init, DVector::from_element(p, 1.0)))?
        }
        None => s.run(init, |x, r| step(&model, x, r))?,
    };
    Ok((shrinkage_labels(names), chains))
}

/// The blocked model behind an `adda-report` config.
pub fn wall_clock_rows(loaded: &LoadedConfig, data: &Dataset, configs: &[(f64, f64)]) -> CliResult<Vec<damcmc::adda::WallClockRow>> {
    let cfg = &loaded.config;
    let section = cfg
        .adda
        .as_ref()
        .ok_or_else(|| CliError::Validation("adda-report needs kernel 'adda' and an [adda] section".into()))?;
    let plan = AddaPlan::new(section, loaded)?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let run = |e: damcmc::Error| CliError::Runtime(e.to_string());
    let dc = &cfg.data;
    match &cfg.model {
        ModelConfig::Lasso { lambda, variance_prior: vp } => {
            let (names, model) = lasso(dc, data, *lambda, vp)?;
            let p = names.len();
            let blocked = Blocked::even(model, plan.config.blocks()).map_err(invalid)?;
            let init = (RegressionState::new(DVector::zeros(p), 1.0), DVector::from_element(p, 1.0));
            damcmc::adda::adda_wall_clock_report(&blocked, configs, &plan.latency, init, cfg.iterations, cfg.burn_in, &mut rng)
                .map_err(run)
        }
        ModelConfig::Logistic { prior, assert_proper } => {
            let (names, model) = logistic(dc, data, prior, *assert_proper)?;
            let p = names.len();
            let blocked = Blocked::even(model, plan.config.blocks()).map_err(invalid)?;
            let init = (DVector::zeros(p), DVector::from_element(data.len(), 1.0));
            damcmc::adda::adda_wall_clock_report(&blocked, configs, &plan.latency, init, cfg.iterations, cfg.burn_in, &mut rng)
                .map_err(run)
        }
        other => Err(CliError::Validation(format!("adda-report is not available for the {} model", other.family()))),
    }
}
