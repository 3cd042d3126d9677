//! Training runs and the best-of-`b` evaluation protocol for every method.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use netforge_core::a2c::{
    evaluate_policy, evaluate_random, run_a2c_gs, A2cGsConfig, Agent, EpochTrace, EvalStats, LossRecord, TopoEnv,
    HISTOGRAM_BIN,
};
use netforge_core::action_space::{ActionSpaceSpec, FullSpace};
use netforge_core::baselines::{one_step_optimize, OneStepConfig, BRUTE_FORCE_CAP};
use netforge_core::neural::GcnClassifier;
use netforge_core::{verify, Instance, Topology};
use serde::{Deserialize, Serialize};

use crate::io::{self, SCHEMA_VERSION};
use crate::parallel::brute_force_parallel;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Random,
    Onestep,
    Brute,
    A2c,
    A2cGnn,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Random, Method::Onestep, Method::Brute, Method::A2c, Method::A2cGnn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Onestep => "onestep",
            Method::Brute => "brute",
            Method::A2c => "a2c",
            Method::A2cGnn => "a2c-gnn",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Method::A2c | Method::A2cGnn)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown method {s:?} (random, onestep, brute, a2c or a2c-gnn)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Evaluation trials per method.
    pub trials: usize,
    /// Topologies searched per trial.
    pub best_of: usize,
    pub brute_cap: u128,
    pub threads: usize,
    pub seed: u64,
    /// Training settings of the learned methods; `use_gnn` and the seed are
    /// set per method.
    pub train: A2cGsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 1000,
            best_of: 5,
            brute_cap: BRUTE_FORCE_CAP,
            threads: 1,
            seed: 0,
            train: A2cGsConfig::default(),
        }
    }
}

/// FNV-1a of the instance document without its action space.
pub fn instance_hash(instance: &Instance) -> Result<u64> {
    let text = io::instance_to_json(instance, None)?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(h)
}

/// A trained agent with what produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub method: Method,
    pub instance_hash: u64,
    pub spec_size: u128,
    pub config: A2cGsConfig,
    pub agent: Agent,
    pub classifier: Option<GcnClassifier>,
    /// Best verifier score met during training, and its topology.
    pub best_objective: f64,
    pub best_topology: Topology,
    pub losses: Vec<LossRecord>,
    pub epochs: Vec<EpochTrace>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        io::save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::load_json(path)
    }

    /// Refuses checkpoints trained on another instance or space.
    pub fn check(&self, instance: &Instance, spec: &ActionSpaceSpec) -> Result<()> {
        if self.instance_hash != instance_hash(instance)? || self.spec_size != spec.flat_size() {
            return Err(Error::Usage(format!(
                "{} checkpoint was trained on a different instance or action space",
                self.method
            )));
        }
        Ok(())
    }
}

/// Trains a learned method on `spec`.
pub fn train(instance: &Instance, spec: &ActionSpaceSpec, method: Method, cfg: &ExperimentConfig) -> Result<Checkpoint> {
    if !method.is_learned() {
        return Err(Error::Usage(format!("{method} is not a learned method")));
    }
    let mut tc = cfg.train.clone();
    tc.use_gnn = method == Method::A2cGnn;
    tc.a2c.seed = cfg.seed;
    let out = run_a2c_gs(instance, spec, &tc)?;
    let best = out.result;
    let check = verify(instance, &best.best_topology).objective();
    if check.to_bits() != best.best_objective.to_bits() {
        return Err(Error::Internal("training best does not re-verify".into()));
    }
    Ok(Checkpoint {
        schema_version: SCHEMA_VERSION,
        method,
        instance_hash: instance_hash(instance)?,
        spec_size: spec.flat_size(),
        config: tc,
        agent: out.learner.agent,
        classifier: out.classifier,
        best_objective: best.best_objective,
        best_topology: best.best_topology,
        losses: out.learner.losses,
        epochs: out.epochs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    /// `full` or `compressed`.
    pub space: String,
    pub trials: usize,
    pub best_of: usize,
    pub mean: f64,
    pub std: f64,
    /// `(bin lower edge, count)`.
    pub histogram: Vec<(f64, usize)>,
    /// Verifier calls made by the evaluation.
    pub evaluations: u64,
    pub best_objective: f64,
    pub best_topology: Topology,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub profile: Option<String>,
    pub version: String,
    pub instance_hash: u64,
    pub spec_size: u128,
}

/// Everything but timings, so that equal inputs give equal bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub methods: Vec<MethodReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Timing {
    pub method: Method,
    pub seconds: f64,
}

fn space_name(spec: &ActionSpaceSpec) -> String {
    if spec.is_compressed() { "compressed" } else { "full" }.to_string()
}

fn constant(method: Method, space: String, cfg: &ExperimentConfig, f: f64, topo: Topology, evaluations: u64) -> MethodReport {
    let stats = EvalStats::from_scores(vec![f; cfg.trials], HISTOGRAM_BIN);
    MethodReport {
        method,
        space,
        trials: cfg.trials,
        best_of: cfg.best_of,
        mean: stats.mean,
        std: stats.std,
        histogram: stats.histogram,
        evaluations,
        best_objective: f,
        best_topology: topo,
    }
}

fn from_stats(method: Method, space: String, cfg: &ExperimentConfig, stats: EvalStats) -> Result<MethodReport> {
    let (topo, f) = stats.best.ok_or_else(|| Error::Internal("evaluation recorded no topology".into()))?;
    Ok(MethodReport {
        method,
        space,
        trials: cfg.trials,
        best_of: cfg.best_of,
        mean: stats.mean,
        std: stats.std,
        histogram: stats.histogram,
        evaluations: (cfg.trials * cfg.best_of) as u64,
        best_objective: f,
        best_topology: topo,
    })
}

/// One method under the shared protocol. Random acts on the full edge
/// space; the others use `spec`.
pub fn run_method(
    instance: &Instance,
    spec: &ActionSpaceSpec,
    method: Method,
    cfg: &ExperimentConfig,
    checkpoint: Option<&Checkpoint>,
) -> Result<MethodReport> {
    if cfg.trials == 0 || cfg.best_of == 0 {
        return Err(Error::Usage("trials and best-of must be positive".into()));
    }
    match method {
        Method::Random => {
            let full = ActionSpaceSpec::Full(FullSpace::new(instance, &[])?);
            let env = TopoEnv::new(instance.clone(), full, cfg.best_of, cfg.seed)?;
            from_stats(method, "full".into(), cfg, evaluate_random(&env, cfg.trials, cfg.best_of, cfg.seed)?)
        }
        Method::Onestep => {
            let r = one_step_optimize(instance, &OneStepConfig::default());
            Ok(constant(method, "grouping".into(), cfg, r.best_objective, r.best_topology, r.evaluations))
        }
        Method::Brute => {
            let r = brute_force_parallel(instance, spec, cfg.brute_cap, cfg.threads)?;
            Ok(constant(method, space_name(spec), cfg, r.best_objective, r.best_topology, r.evaluations))
        }
        Method::A2c | Method::A2cGnn => {
            let ck = checkpoint.ok_or_else(|| Error::Usage(format!("{method} needs a trained checkpoint")))?;
            if ck.method != method {
                return Err(Error::Usage(format!("checkpoint is for {}, not {method}", ck.method)));
            }
            ck.check(instance, spec)?;
            let env = TopoEnv::new(instance.clone(), spec.clone(), cfg.best_of, cfg.seed)?;
            let stats = evaluate_policy(&ck.agent, &env, cfg.trials, cfg.best_of, cfg.seed)?;
            from_stats(method, space_name(spec), cfg, stats)
        }
    }
}

/// Runs `methods` in order and re-verifies every reported best.
pub fn run_experiment(
    instance: &Instance,
    spec: &ActionSpaceSpec,
    methods: &[Method],
    cfg: &ExperimentConfig,
    checkpoints: &BTreeMap<Method, Checkpoint>,
    profile: Option<&str>,
) -> Result<(ExperimentReport, Vec<Timing>)> {
    for m in methods {
        if m.is_learned() && !checkpoints.contains_key(m) {
            return Err(Error::Usage(format!("{m} needs a trained checkpoint")));
        }
    }
    let mut reports = Vec::with_capacity(methods.len());
    let mut timings = Vec::with_capacity(methods.len());
    for &m in methods {
        let t = Instant::now();
        let r = run_method(instance, spec, m, cfg, checkpoints.get(&m))?;
        let f = verify(instance, &r.best_topology).objective();
        if f.to_bits() != r.best_objective.to_bits() {
            return Err(Error::Internal(format!("{m}: reported best {} re-verifies as {f}", r.best_objective)));
        }
        timings.push(Timing {
            method: m,
            seconds: t.elapsed().as_secs_f64(),
        });
        reports.push(r);
    }
    Ok((
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            provenance: Provenance {
                seed: cfg.seed,
                profile: profile.map(str::to_string),
                version: env!("CARGO_PKG_VERSION").to_string(),
                instance_hash: instance_hash(instance)?,
                spec_size: spec.flat_size(),
            },
            methods: reports,
        },
        timings,
    ))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

pub fn losses_csv(losses: &[LossRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &["step", "entropy_loss", "value_loss", "policy_loss"],
        losses.iter().map(|l| {
            vec![
                l.step.to_string(),
                l.entropy_loss.to_string(),
                l.value_loss.to_string(),
                l.policy_loss.to_string(),
            ]
        }),
    )
}

pub fn histogram_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    csv_bytes(
        &["method", "score_bin", "frequency"],
        report.methods.iter().flat_map(|m| {
            let n = m.trials.max(1) as f64;
            m.histogram
                .iter()
                .map(move |&(b, c)| vec![m.method.to_string(), b.to_string(), (c as f64 / n).to_string()])
        }),
    )
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "source",
    "method",
    "space",
    "trials",
    "best_of",
    "mean",
    "std",
    "evaluations",
    "best_objective",
    "seed",
];

/// One row per method of every `(label, report)` pair.
pub fn summary_csv(reports: &[(String, ExperimentReport)]) -> Result<Vec<u8>> {
    csv_bytes(
        &SUMMARY_COLUMNS,
        reports.iter().flat_map(|(label, r)| {
            r.methods.iter().map(move |m| {
                vec![
                    label.clone(),
                    m.method.to_string(),
                    m.space.clone(),
                    m.trials.to_string(),
                    m.best_of.to_string(),
                    m.mean.to_string(),
                    m.std.to_string(),
                    m.evaluations.to_string(),
                    m.best_objective.to_string(),
                    r.provenance.seed.to_string(),
                ]
            })
        }),
    )
}

pub fn timings_csv(timings: &[Timing]) -> Result<Vec<u8>> {
    csv_bytes(
        &["method", "wall_seconds"],
        timings.iter().map(|t| vec![t.method.to_string(), t.seconds.to_string()]),
    )
}

/// Writes `report.json`, `histogram.csv` and `timings.csv` into `dir`.
pub fn write_report(dir: &Path, report: &ExperimentReport, timings: &[Timing]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    io::save_json(&dir.join("report.json"), report)?;
    io::write_atomic(&dir.join("histogram.csv"), &histogram_csv(report)?)?;
    io::write_atomic(&dir.join("timings.csv"), &timings_csv(timings)?)?;
    Ok(())
}
