use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use netforge::experiment::{
    losses_csv, run_experiment, summary_csv, train, write_report, Checkpoint, ExperimentConfig, ExperimentReport, Method,
};
use netforge::generator::{generate, GeneratorProfile, Restriction};
use netforge::io::{self, InstanceDoc};
use netforge::parallel::thread_count;
use netforge::{Error, Result};
use netforge_core::action_space::{ActionSpaceSpec, CompressedSpace, FullSpace};
use netforge_core::{verify, Verdict};

#[derive(Parser)]
#[command(name = "netforge", version, about = "Constrained network topology optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Small,
    Large,
    Tiny,
}

#[derive(Clone, Copy, ValueEnum)]
enum RestrictionArg {
    Unrestricted,
    Large,
    Small,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Full,
    Compressed,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Random,
    Onestep,
    Brute,
    A2c,
    A2cGnn,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Random => Method::Random,
            MethodArg::Onestep => Method::Onestep,
            MethodArg::Brute => Method::Brute,
            MethodArg::A2c => Method::A2c,
            MethodArg::A2cGnn => Method::A2cGnn,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic instance.
    Generate {
        #[arg(long, value_enum)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Composition restriction of the stored action space (defaults to
        /// the profile's own).
        #[arg(long, value_enum)]
        restriction: Option<RestrictionArg>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check an instance, or a topology against it.
    Verify { instance: PathBuf, topology: Option<PathBuf> },
    /// Print the objective of a topology.
    Score { instance: PathBuf, topology: PathBuf },
    /// Run one method and write its report, best topology and artifacts.
    Optimize {
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Action space of the learned and exhaustive methods.
        #[arg(long, value_enum, default_value_t = SpaceArg::Compressed)]
        space: SpaceArg,
        /// JSON experiment configuration; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        best_of: Option<usize>,
        /// Training timesteps of the learned methods.
        #[arg(long)]
        steps: Option<usize>,
        /// Evaluate this checkpoint instead of training.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Summarize the reports under a directory as CSV.
    Report {
        dir: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn profile_name(p: ProfileArg) -> &'static str {
    match p {
        ProfileArg::Small => "small",
        ProfileArg::Large => "large",
        ProfileArg::Tiny => "tiny",
    }
}

fn compressed_spec(doc: &InstanceDoc) -> Result<ActionSpaceSpec> {
    match &doc.spec {
        Some(s @ ActionSpaceSpec::Compressed(_)) => Ok(s.clone()),
        _ => Ok(ActionSpaceSpec::Compressed(CompressedSpace::resolved(
            &doc.instance,
            Restriction::Unrestricted.rules(&doc.instance),
        )?)),
    }
}

fn print_verdict(v: &Verdict) {
    if v.is_valid() {
        println!("valid objective {}", v.objective());
    } else {
        println!("invalid {} objective {}", v.reason().name(), v.objective());
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Generate {
            profile,
            seed,
            restriction,
            out,
        } => {
            let mut p = GeneratorProfile::by_name(profile_name(profile), seed)?;
            if let Some(r) = restriction {
                p.restriction = match r {
                    RestrictionArg::Unrestricted => Restriction::Unrestricted,
                    RestrictionArg::Large => Restriction::Large,
                    RestrictionArg::Small => Restriction::Small,
                };
            }
            let g = generate(&p, seed)?;
            let spec = g.compressed()?;
            io::save_instance(&out, &g.instance, Some(&spec))?;
            println!(
                "{}: {} nodes, {} candidate edges, {} compressed actions",
                out.display(),
                g.instance.n(),
                g.instance.candidate_edges().len(),
                spec.flat_size()
            );
            Ok(0)
        }
        Command::Verify { instance, topology } => {
            let doc = io::load_instance(&instance)?;
            let t = match &topology {
                Some(p) => io::load_topology(p)?,
                None => doc.instance.x0().clone(),
            };
            check_size(&doc, &t, topology.as_deref())?;
            let v = verify(&doc.instance, &t);
            print_verdict(&v);
            Ok(if v.is_valid() { 0 } else { 2 })
        }
        Command::Score { instance, topology } => {
            let doc = io::load_instance(&instance)?;
            let t = io::load_topology(&topology)?;
            check_size(&doc, &t, Some(&topology))?;
            println!("{}", verify(&doc.instance, &t).objective());
            Ok(0)
        }
        Command::Optimize {
            instance,
            method,
            seed,
            out,
            space,
            config,
            trials,
            best_of,
            steps,
            checkpoint,
        } => {
            let method = Method::from(method);
            let doc = io::load_instance(&instance)?;
            let mut cfg: ExperimentConfig = match &config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.clone(),
                    source,
                })?)
                .map_err(|e| Error::Parse {
                    path: p.clone(),
                    line: e.line(),
                    column: e.column(),
                    msg: e.to_string(),
                })?,
                None => ExperimentConfig::default(),
            };
            cfg.seed = seed;
            cfg.threads = thread_count();
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(b) = best_of {
                cfg.best_of = b;
            }
            if let Some(s) = steps {
                cfg.train.a2c.total_timesteps = s;
            }
            let spec = match space {
                SpaceArg::Compressed => compressed_spec(&doc)?,
                SpaceArg::Full => ActionSpaceSpec::Full(FullSpace::new(&doc.instance, &[])?),
            };
            std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            let mut checkpoints = BTreeMap::new();
            if method.is_learned() {
                let ck = match &checkpoint {
                    Some(p) => Checkpoint::load(p)?,
                    None => {
                        let ck = train(&doc.instance, &spec, method, &cfg)?;
                        ck.save(&out.join("checkpoint.json"))?;
                        ck
                    }
                };
                io::write_atomic(&out.join("losses.csv"), &losses_csv(&ck.losses)?)?;
                checkpoints.insert(method, ck);
            }
            let (report, timings) = run_experiment(&doc.instance, &spec, &[method], &cfg, &checkpoints, None)?;
            write_report(&out, &report, &timings)?;
            let m = &report.methods[0];
            io::save_topology(&out.join("best_topology.json"), &m.best_topology)?;
            println!("{method}: mean {} std {} best {}", m.mean, m.std, m.best_objective);
            Ok(0)
        }
        Command::Report { dir, out } => {
            let reports = collect_reports(&dir)?;
            if reports.is_empty() {
                return Err(Error::Usage(format!("{}: no report.json found", dir.display())));
            }
            io::write_atomic(&out, &summary_csv(&reports)?)?;
            println!("{} reports -> {}", reports.len(), out.display());
            Ok(0)
        }
    }
}

fn check_size(doc: &InstanceDoc, t: &netforge_core::Topology, path: Option<&Path>) -> Result<()> {
    if t.n() != doc.instance.n() {
        return Err(Error::Content {
            path: path.map_or_else(PathBuf::new, Path::to_path_buf),
            msg: format!("topology has {} nodes, instance has {}", t.n(), doc.instance.n()),
        });
    }
    Ok(())
}

/// `dir/report.json` and `dir/*/report.json`, labeled by directory name
/// and sorted by label.
fn collect_reports(dir: &Path) -> Result<Vec<(String, ExperimentReport)>> {
    let mut out = Vec::new();
    let own = dir.join("report.json");
    if own.is_file() {
        out.push((".".to_string(), io::load_json(&own)?));
    }
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut subs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subs.sort();
    for s in subs {
        let p = s.join("report.json");
        if p.is_file() {
            let label = s.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            out.push((label, io::load_json(&p)?));
        }
    }
    Ok(out)
}
