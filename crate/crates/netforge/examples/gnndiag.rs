use std::sync::Arc;
use netforge::generator::{generate, GeneratorProfile};
use netforge_core::neural::{gnn_train, node_features, GcnClassifier, GcnConfig, GnnTrainConfig, GraphSample};
use netforge_core::rng::seeded;
use netforge_core::verify;
use rand::seq::SliceRandom;
const Q: f64 = 0.8;

/// Balanced labeled graphs from exhaustively scored small-profile instances:
/// every instance adds its good topologies (capped) and as many poor ones,
/// half valid but below `Q`, half invalid.
fn labeled_set(target_good: usize, cap: usize, weak_share: f64) -> Vec<GraphSample> {
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
        good.truncate(cap.min(target_good - good_total));
        let k = good.len();
        if k == 0 {
            continue;
        }
        weak.shuffle(&mut r);
        broken.shuffle(&mut r);
        let nweak = if weak_share < 0.0 { let tot = (weak.len() + broken.len()) as f64; ((k as f64) * weak.len() as f64 / tot).round() as usize } else { ((k as f64 * weak_share) as usize).min(weak.len()) };
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


fn main() {
    let a: Vec<String> = std::env::args().collect();
    let epochs: usize = a[1].parse().unwrap();
    let goods: usize = a[2].parse().unwrap();
    let ntrain: usize = a[3].parse().unwrap();
    let cap: usize = a[4].parse().unwrap(); let ws: f64 = a[5].parse().unwrap();
    let mut data = labeled_set(goods, cap, ws);
    data.shuffle(&mut seeded(6));
    let held = data.split_off(ntrain);
    let batch: usize = a[6].parse().unwrap(); let hidden: usize = a[7].parse().unwrap();
    let mut clf = GcnClassifier::new(GcnConfig { hidden, head: vec![hidden, hidden], ..GcnConfig::default() }, &mut seeded(7)).unwrap();
    let cfg = GnnTrainConfig { epochs, lr: 0.005, batch_size: batch, ..GnnTrainConfig::default() };
    let rep = gnn_train(&mut clf, &data, Q, &cfg).unwrap();
    println!("train acc {}", rep.train_accuracy);
    let mut wrong = 0;
    for s in &held {
        let p = clf.predict(&s.features, &s.adjacency).unwrap();
        if p != s.label(Q) { wrong += 1; println!("miss obj {:.4} label {}", s.objective, s.label(Q)); }
    }
    println!("held {} wrong {} {:?}", held.len(), wrong, a);
}
