//! Random, one-step and restricted-space agents on large-profile seeds.
//!
//! `cargo run --release --example ordering -- SEEDS STEPS [LR] [ENT_COEF]`

use std::time::Instant;

use netforge::generator::{generate, GeneratorProfile, Restriction};
use netforge_core::a2c::{evaluate_policy, evaluate_random, run_a2c_gs, A2cGsConfig, TopoEnv};
use netforge_core::action_space::{ActionSpaceSpec, CompressedSpace, FullSpace};
use netforge_core::baselines::{one_step_optimize, OneStepConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args[1].parse()?;
    let steps: usize = args[2].parse()?;
    let lr: f64 = args.get(3).map_or(7e-4, |s| s.parse().unwrap());
    let ent: f64 = args.get(4).map_or(0.01, |s| s.parse().unwrap());
    let profile = GeneratorProfile::large();
    for seed in 0..seeds {
        let g = generate(&profile, seed)?;
        let inst = &g.instance;
        let full = ActionSpaceSpec::Full(FullSpace::new(inst, &[])?);
        let env = TopoEnv::new(inst.clone(), full, 30, seed)?;
        let rnd = evaluate_random(&env, 200, 30, seed)?;
        let os = one_step_optimize(inst, &OneStepConfig::default());
        print!("seed {seed}: random {:.4} one-step {:.4}", rnd.mean, os.best_objective);
        for r in [Restriction::Small, Restriction::Large] {
            let t = Instant::now();
            let spec = ActionSpaceSpec::Compressed(CompressedSpace::resolved(inst, r.rules(inst))?);
            let mut cfg = A2cGsConfig::default();
            cfg.a2c.total_timesteps = steps;
            cfg.a2c.seed = seed;
            cfg.a2c.learning_rate = lr;
            cfg.a2c.ent_coef = ent;
            let out = run_a2c_gs(inst, &spec, &cfg)?;
            let env = TopoEnv::new(inst.clone(), spec, 30, seed)?;
            let ev = evaluate_policy(&out.learner.agent, &env, 200, 30, seed)?;
            print!(" {r:?} {:.4} (best {:.4}, {:?})", ev.mean, out.result.best_objective, t.elapsed());
        }
        println!();
    }
    Ok(())
}
