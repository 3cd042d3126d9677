//! Prints generation stats, the compressed-space optimum and the one-step
//! baseline for the first seeds of a profile.
//!
//! `cargo run --release --example calibrate -- small 3`

use std::time::Instant;

use netforge::generator::{generate, GeneratorProfile, Restriction};
use netforge_core::action_space::{ActionSpaceSpec, CompressedSpace};
use netforge_core::baselines::{brute_force, one_step_optimize, OneStepConfig};
use netforge_core::verify;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let profile = GeneratorProfile::by_name(&args[1], 0)?;
    let seeds: u64 = args.get(2).map_or(3, |s| s.parse().unwrap());
    for seed in 0..seeds {
        let t = Instant::now();
        let g = generate(&profile, seed)?;
        let inst = &g.instance;
        println!(
            "seed {seed}: attempts {} cands {} x0 edges {} f(x0) {:.4} gen {:?}",
            g.attempts,
            inst.candidate_edges().len(),
            inst.x0().edge_count(),
            verify(inst, inst.x0()).objective(),
            t.elapsed()
        );
        let restrictions: &[Restriction] = if profile.name == "large" {
            &[Restriction::Small, Restriction::Large]
        } else {
            &[Restriction::Unrestricted]
        };
        for &r in restrictions {
            let t = Instant::now();
            let spec = ActionSpaceSpec::Compressed(CompressedSpace::resolved(inst, r.rules(inst))?);
            let built = t.elapsed();
            let bf = brute_force(inst, &spec, 1 << 20)?;
            let mut valid = 0;
            let mut reasons = std::collections::BTreeMap::new();
            for i in 0..spec.flat_size() {
                let topo = spec.topology(inst, inst.x0(), i)?;
                let v = verify(inst, &topo);
                if v.is_valid() {
                    valid += 1;
                } else {
                    *reasons.entry(format!("{:?}", v.reason())).or_insert(0) += 1;
                }
            }
            println!("  reasons {reasons:?}");
            println!(
                "  {r:?}: size {} valid {valid} best {:.4} at {:?} ties {} build {built:?} total {:?}",
                spec.flat_size(),
                bf.best_objective,
                bf.best_index,
                bf.ties.len(),
                t.elapsed()
            );
        }
        let os = one_step_optimize(inst, &OneStepConfig::default());
        println!("  one-step {:.4} ({:?})", os.best_objective, verify(inst, &os.best_topology).reason());
    }
    Ok(())
}
