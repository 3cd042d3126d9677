use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use netforge::experiment::{ExperimentConfig, Method};
use netforge::generator::{generate, GeneratorProfile, Restriction};
use netforge_core::a2c::{
    evaluate_policy, evaluate_random, run_a2c_gs, A2cConfig, A2cGsConfig, Action, Agent, Head, RewardSource, Rollout,
    TopoEnv,
};
use netforge_core::action_space::{ActionSpaceSpec, CompressedSpace, FullSpace};
use netforge_core::baselines::{brute_force, one_step_optimize, OneStepConfig, BRUTE_FORCE_CAP};
use netforge_core::neural::{gnn_test, gnn_train, node_features, GcnClassifier, GcnConfig, GnnTrainConfig, GraphSample};
use netforge_core::neural::{Activation, Matrix, MlpShape};
use netforge_core::rng::{seeded, Rng as ChaRng};
use netforge_core::{verify, Topology};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::Outcome;

/// Largest relative gap between `analytic` and central differences of `f`.
fn fd_error(params: &[f64], analytic: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let h = 1e-5;
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + h;
        let up = f(&p);
        p[k] = orig - h;
        let down = f(&p);
        p[k] = orig;
        let num = (up - down) / (2.0 * h);
        let scale = num.abs().max(analytic[k].abs()).max(1e-6);
        worst = worst.max((num - analytic[k]).abs() / scale);
    }
    worst
}

fn uniform(r: &mut ChaRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn dense_case(r: &mut ChaRng) -> f64 {
    let depth = r.random_range(1..=3);
    let mut sizes = vec![r.random_range(1..=6)];
    let mut acts = Vec::new();
    for _ in 0..depth {
        sizes.push(r.random_range(1..=6));
        acts.push([Activation::Tanh, Activation::Relu, Activation::Identity][r.random_range(0..3)]);
    }
    let shape = MlpShape::new(&sizes, &acts).unwrap();
    let params = uniform(r, shape.num_params());
    let x = uniform(r, shape.input());
    let c = uniform(r, shape.output());
    let loss = |p: &[f64], x: &[f64]| -> f64 { shape.forward(p, x).unwrap().iter().zip(&c).map(|(o, w)| o * w).sum() };
    let cache = shape.forward_cached(&params, &x, None).unwrap();
    let mut g = vec![0.0; params.len()];
    let dx = shape.backward(&params, &cache, &c, &mut g);
    let e_params = fd_error(&params, &g, |p| loss(p, &x));
    let e_input = fd_error(&x, &dx, |xi| loss(&params, xi));
    e_params.max(e_input)
}

fn random_graph(r: &mut ChaRng, n: usize, d: usize) -> (Matrix, Topology) {
    let mut t = Topology::empty(n).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < 0.4 {
                t.add_edge(i, j).unwrap();
            }
        }
    }
    (Matrix::from_vec(n, d, uniform(r, n * d)).unwrap(), t)
}

/// Convolution, mean/max pooling, dense head and log-softmax end to end.
fn gcn_case(r: &mut ChaRng, dropout: bool) -> f64 {
    let cfg = GcnConfig {
        in_dim: r.random_range(2..=5),
        hidden: r.random_range(1..=4),
        stacks: r.random_range(1..=3),
        head: (0..r.random_range(1..=2)).map(|_| r.random_range(2..=5)).collect(),
        dropout: if dropout { 0.5 } else { 0.0 },
    };
    let clf = GcnClassifier::new(cfg.clone(), r).unwrap();
    let n = r.random_range(1..=7);
    let (x, t) = random_graph(r, n, cfg.in_dim);
    let mask = clf.sample_mask(r);
    let label = r.random_range(0..2);
    let cache = clf.forward(&x, &t, mask.clone()).unwrap();
    let mut g = vec![0.0; clf.params.len()];
    clf.backward(&cache, label, &mut g);
    let mut probe = clf.clone();
    fd_error(&clf.params, &g, |p| {
        probe.params.copy_from_slice(p);
        -probe.forward(&x, &t, mask.clone()).unwrap().log_probs[label]
    })
}

/// Categorical (log-softmax) and Bernoulli policy heads with the value net,
/// through the full rollout loss.
fn agent_case(r: &mut ChaRng, head: Head) -> f64 {
    let cfg = A2cConfig {
        hidden: vec![r.random_range(2..=5); r.random_range(1..=2)],
        ent_coef: r.random_range(0.0..0.1),
        vf_coef: r.random_range(0.1..1.0),
        ..A2cConfig::default()
    };
    let (obs_dim, act_dim) = (r.random_range(1..=5), r.random_range(2..=6));
    let agent = Agent::new(obs_dim, act_dim, head, &cfg, r).unwrap();
    let n = r.random_range(1..=6);
    let rollout = Rollout {
        observations: (0..n).map(|_| uniform(r, obs_dim)).collect(),
        actions: (0..n)
            .map(|_| match head {
                Head::Categorical => Action::Index(r.random_range(0..act_dim)),
                Head::Bernoulli => Action::Toggle((0..act_dim).map(|_| r.random()).collect()),
            })
            .collect(),
        rewards: uniform(r, n),
        dones: (0..n).map(|_| r.random::<f64>() < 0.3).collect(),
        values: uniform(r, n),
        last_value: r.random_range(-1.0..1.0),
    };
    let (gp, gv, _) = agent.gradients(&rollout, &cfg).unwrap();
    let mut probe = agent.clone();
    let ep = fd_error(&agent.policy.params, &gp, |p| {
        probe.policy.params.copy_from_slice(p);
        let (_, _, l) = probe.gradients(&rollout, &cfg).unwrap();
        l.policy_loss + cfg.ent_coef * l.entropy_loss
    });
    let mut probe = agent.clone();
    let ev = fd_error(&agent.value.params, &gv, |p| {
        probe.value.params.copy_from_slice(p);
        let (_, _, l) = probe.gradients(&rollout, &cfg).unwrap();
        cfg.vf_coef * l.value_loss
    });
    ep.max(ev)
}

pub fn gradients() -> Outcome {
    let mut r = seeded(4);
    let mut worst = [0.0f64; 4];
    for k in 0..100 {
        let e = match k % 4 {
            0 => dense_case(&mut r),
            1 => gcn_case(&mut r, k % 8 == 1),
            2 => agent_case(&mut r, Head::Categorical),
            _ => agent_case(&mut r, Head::Bernoulli),
        };
        worst[k % 4] = worst[k % 4].max(e);
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    Outcome::check(
        max < 1e-4,
        format!(
            "100 configurations, max relative error dense {:.1e}, conv+pool+log-softmax {:.1e}, categorical {:.1e}, bernoulli {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

const Q: f64 = 0.8;

/// Balanced labeled graphs from exhaustively scored small-profile instances:
/// every instance adds its good topologies (capped) and as many poor ones,
/// half valid but below `Q`, half invalid.
fn labeled_set(target_good: usize) -> Vec<GraphSample> {
    let mut r = seeded(5);
    let mut out = Vec::new();
    let mut good_total = 0;
    let mut seed = 0;
    while good_total < target_good {
        let g = generate(&GeneratorProfile::small(), seed).unwrap();
        seed += 1;
        let inst = &g.instance;
        let spec = g.full().unwrap();
        let features = Arc::new(node_features(inst));
        let (mut good, mut weak, mut broken) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..spec.flat_size() {
            let x = spec.topology(inst, inst.x0(), i).unwrap();
            let v = verify(inst, &x);
            let s = (x, v.objective());
            if v.objective() >= Q {
                good.push(s);
            } else if v.is_valid() {
                weak.push(s);
            } else {
                broken.push(s);
            }
        }
        good.shuffle(&mut r);
        good.truncate(150.min(target_good - good_total));
        let k = good.len();
        if k == 0 {
            continue;
        }
        weak.shuffle(&mut r);
        broken.shuffle(&mut r);
        let nweak = (k / 2).min(weak.len());
        let picked = good
            .into_iter()
            .chain(weak.into_iter().take(nweak))
            .chain(broken.into_iter().take(k - nweak));
        for (adjacency, objective) in picked {
            out.push(GraphSample {
                features: features.clone(),
                adjacency,
                objective,
            });
        }
        good_total += k;
    }
    out
}

pub fn classifier() -> Outcome {
    let mut data = labeled_set(1250);
    data.shuffle(&mut seeded(6));
    let held = data.split_off(2000);
    let good = data.iter().filter(|s| s.label(Q) == 1).count();
    let mut clf = GcnClassifier::new(GcnConfig::default(), &mut seeded(7)).unwrap();
    let cfg = GnnTrainConfig {
        epochs: 1000,
        lr: 0.005,
        ..GnnTrainConfig::default()
    };
    let rep = gnn_train(&mut clf, &data, Q, &cfg).unwrap();
    let test = gnn_test(&clf, &held, Q).unwrap();
    Outcome::check(
        rep.train_accuracy > 0.99 && test > 0.99,
        format!(
            "{} train graphs ({good} good), {} held out; accuracy train {:.4} held-out {test:.4}",
            data.len(),
            held.len(),
            rep.train_accuracy
        ),
    )
}


pub fn compressed_optimality() -> Outcome {
    let g = generate(&GeneratorProfile::small(), 0).unwrap();
    let inst = &g.instance;
    let spec = g.compressed().unwrap();
    let optimum = brute_force(inst, &spec, BRUTE_FORCE_CAP).unwrap().best_objective;
    let mut cfg = A2cGsConfig::default();
    cfg.a2c.total_timesteps = 100_000;
    let out = run_a2c_gs(inst, &spec, &cfg).unwrap();
    let env = TopoEnv::new(inst.clone(), spec.clone(), 5, 1).unwrap();
    let agent = evaluate_policy(&out.learner.agent, &env, 1000, 5, 1).unwrap().hit_rate(optimum);
    let random = evaluate_random(&env, 1000, 5, 1).unwrap().hit_rate(optimum);
    Outcome::check(
        agent >= 0.95 && random < agent,
        format!(
            "{} actions, optimum {optimum:.4}, best-of-5 hit rate agent {agent:.3} random {random:.3}, {} steps",
            spec.flat_size(),
            cfg.a2c.total_timesteps
        ),
    )
}

pub fn ordering() -> Outcome {
    let steps = 100_000;
    let mut sums = [0.0f64; 4];
    let mut rows = Vec::new();
    for seed in 0..3 {
        let inst = generate(&GeneratorProfile::large(), seed).unwrap().instance;
        let full = ActionSpaceSpec::Full(FullSpace::new(&inst, &[]).unwrap());
        let env = TopoEnv::new(inst.clone(), full, 30, seed).unwrap();
        let mut row = [0.0; 4];
        row[0] = evaluate_random(&env, 200, 30, seed).unwrap().mean;
        row[1] = one_step_optimize(&inst, &OneStepConfig::default()).best_objective;
        for (k, r) in [(2, Restriction::Small), (3, Restriction::Large)] {
            let spec = ActionSpaceSpec::Compressed(CompressedSpace::resolved(&inst, r.rules(&inst)).unwrap());
            let mut cfg = A2cGsConfig::default();
            cfg.a2c.total_timesteps = steps;
            cfg.a2c.seed = seed;
            let out = run_a2c_gs(&inst, &spec, &cfg).unwrap();
            let env = TopoEnv::new(inst.clone(), spec, 30, seed).unwrap();
            row[k] = evaluate_policy(&out.learner.agent, &env, 200, 30, seed).unwrap().mean;
        }
        for k in 0..4 {
            sums[k] += row[k] / 3.0;
        }
        rows.push(format!("seed {seed} [{:.4} {:.4} {:.4} {:.4}]", row[0], row[1], row[2], row[3]));
    }
    let [random, one_step, small, large] = sums;
    Outcome::check(
        random < one_step && one_step <= small && small < large,
        format!(
            "mean best-of-30 random {random:.4} < one-step {one_step:.4} <= small space {small:.4} < large space {large:.4}; {}; {steps} steps per agent",
            rows.join(", ")
        ),
    )
}

/// Topology reached from `state` by `action`, computed from the spec alone.
fn transition(inst: &netforge_core::Instance, spec: &ActionSpaceSpec, state: &Topology, action: &Action) -> Topology {
    match (spec, action) {
        (ActionSpaceSpec::Compressed(_), Action::Index(i)) => spec.topology(inst, inst.x0(), *i as u128).unwrap(),
        (ActionSpaceSpec::Full(f), Action::Toggle(bits)) => {
            let mut t = state.clone();
            for (&(i, j), &b) in f.edges.iter().zip(bits) {
                if b {
                    if t.has_edge(i, j) {
                        t.remove_edge(i, j).unwrap();
                    } else {
                        t.add_edge(i, j).unwrap();
                    }
                }
            }
            t
        }
        _ => panic!("action does not match the space"),
    }
}

pub fn switching() -> Outcome {
    let g = generate(&GeneratorProfile::small(), 0).unwrap();
    let inst = &g.instance;
    let spec = g.compressed().unwrap();
    let mut cfg = A2cGsConfig::default();
    cfg.use_gnn = true;
    cfg.a2c.total_timesteps = 20_000;
    cfg.gnn_train.epochs = 3;
    cfg.gnn_train_window = 1024;
    let out = run_a2c_gs(inst, &spec, &cfg).unwrap();
    let mut problems = Vec::new();
    let mut previous: Option<&netforge_core::a2c::EpochTrace> = None;
    for e in &out.epochs {
        match previous {
            None if e.source != RewardSource::Verifier => problems.push("first epoch not on the verifier".to_string()),
            Some(p) if e.source == RewardSource::Gnn && !p.test_accuracy.is_some_and(|a| a >= 0.95) => {
                problems.push(format!("epoch {} switched after accuracy {:?}", e.epoch, p.test_accuracy))
            }
            Some(p) if e.source != p.next_source => problems.push(format!("epoch {} ignores the decision", e.epoch)),
            _ => {}
        }
        previous = Some(e);
    }
    let switched = out.epochs.iter().filter(|e| e.source == RewardSource::Gnn).count();
    let mut bad = 0;
    for t in out.buffer.iter() {
        let next = transition(inst, &spec, &t.state, &t.action);
        if next != t.next || verify(inst, &next).objective().to_bits() != t.reward.to_bits() {
            bad += 1;
        }
    }
    if bad > 0 {
        problems.push(format!("{bad} buffer entries disagree with the verifier"));
    }
    if switched == 0 {
        problems.push("the reward source never switched".into());
    }
    let accs: Vec<String> = out
        .epochs
        .iter()
        .map(|e| e.test_accuracy.map_or("-".into(), |a| format!("{a:.2}")))
        .collect();
    Outcome::check(
        problems.is_empty(),
        format!(
            "{} epochs, {switched} on the classifier, test accuracy [{}], {} buffer triples re-verified{}",
            out.epochs.len(),
            accs.join(" "),
            out.buffer.len(),
            problems.first().map_or(String::new(), |p| format!("; {p}"))
        ),
    )
}

fn netforge(args: &[&std::ffi::OsStr]) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_netforge")).args(args).output().unwrap();
    assert!(out.status.success(), "netforge {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Every artifact of one end-to-end run except the wall-clock timings.
fn pipeline(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let inst = dir.join("instance.json");
    let config = dir.join("config.json");
    netforge(&["generate".as_ref(), "--profile".as_ref(), "small".as_ref(), "--seed".as_ref(), "2".as_ref(), "-o".as_ref(), inst.as_os_str()]);
    let mut cfg = ExperimentConfig::default();
    cfg.train.a2c.total_timesteps = 20_000;
    cfg.train.gnn_train.epochs = 2;
    cfg.train.gnn_train_window = 512;
    cfg.train.test_samples = 50;
    std::fs::write(&config, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    for m in Method::ALL {
        let out = dir.join(m.name());
        netforge(&[
            "optimize".as_ref(),
            inst.as_os_str(),
            "--method".as_ref(),
            m.name().as_ref(),
            "--seed".as_ref(),
            "7".as_ref(),
            "--config".as_ref(),
            config.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ]);
    }
    let summary = dir.join("summary.csv");
    netforge(&["report".as_ref(), dir.as_os_str(), "-o".as_ref(), summary.as_os_str()]);
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "timings.csv") {
                files.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    files
}

pub fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let differing: Vec<String> = first
        .keys()
        .chain(second.keys())
        .filter(|k| first.get(*k) != second.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    let needed = ["summary.csv", "a2c/losses.csv", "a2c-gnn/losses.csv", "a2c/report.json", "brute/best_topology.json"];
    let missing: Vec<&str> = needed.iter().copied().filter(|n| !first.contains_key(Path::new(n))).collect();
    Outcome::check(
        differing.is_empty() && missing.is_empty(),
        format!(
            "{} artifacts from two 5-method runs, {} differ {differing:?}, missing {missing:?}",
            first.len(),
            differing.len()
        ),
    )
}
