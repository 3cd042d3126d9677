//! Labeled graph samples and the classifier training and testing loops.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::gcn::GcnClassifier;
use super::matrix::Matrix;
use super::optim::Adam;
use crate::rng;
use crate::topology::{Network, Topology, HOURS};
use crate::{Error, Result};

/// Node features: kind one-hot, capacity, position and hourly traffic
/// (capacity and traffic over the largest capacity, position over `d_max`).
pub fn node_features(net: &Network) -> Matrix {
    let scale = net.max_u_max();
    let dmax = net.params().d_max;
    let mut m = Matrix::zeros(net.n(), 6 + HOURS);
    for v in 0..net.n() {
        let node = net.node(v);
        let row = m.row_mut(v);
        row[..3].copy_from_slice(&node.kind.one_hot());
        row[3] = node.u_max / scale;
        row[4] = node.pos.0 / dmax;
        row[5] = node.pos.1 / dmax;
        for t in 0..HOURS {
            row[6 + t] = node.flow[t] / scale;
        }
    }
    m
}

/// A scored topology.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample {
    pub features: Arc<Matrix>,
    pub adjacency: Topology,
    pub objective: f64,
}

impl GraphSample {
    /// 1 for a good graph (`objective >= q`), else 0.
    pub fn label(&self, q: f64) -> usize {
        (self.objective >= q) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for GnnTrainConfig {
    fn default() -> Self {
        GnnTrainConfig {
            epochs: 1000,
            lr: 0.005,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainStatus {
    Ok,
    /// Every sample carries the same label; training still ran.
    SingleClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnTrainReport {
    /// Mean cross-entropy per epoch.
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
    pub status: TrainStatus,
}

/// Cross-entropy training with a fresh Adam state: every epoch shuffles the
/// buffer, relabels it against `q` and steps once per mini-batch.
pub fn gnn_train(
    clf: &mut GcnClassifier,
    buffer: &[GraphSample],
    q: f64,
    cfg: &GnnTrainConfig,
) -> Result<GnnTrainReport> {
    if buffer.is_empty() {
        return Err(Error::InvalidArgument("empty training buffer".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let labels: Vec<usize> = buffer.iter().map(|s| s.label(q)).collect();
    let status = if labels.iter().all(|&l| l == labels[0]) {
        TrainStatus::SingleClass
    } else {
        TrainStatus::Ok
    };
    let mut r = rng::seeded(cfg.seed);
    let mut opt = Adam::new(clf.params.len(), cfg.lr);
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut grad = vec![0.0; clf.params.len()];
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut r);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let s = &buffer[i];
                let mask = clf.sample_mask(&mut r);
                let cache = clf.forward(&s.features, &s.adjacency, mask)?;
                total += clf.backward(&cache, labels[i], &mut grad);
            }
            let k = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= k);
            opt.step(&mut clf.params, &grad);
        }
        losses.push(total / buffer.len() as f64);
    }
    let train_accuracy = gnn_test(clf, buffer, q)?;
    Ok(GnnTrainReport {
        losses,
        train_accuracy,
        status,
    })
}

/// Fraction of samples whose predicted class matches the `q` label.
pub fn gnn_test(clf: &GcnClassifier, samples: &[GraphSample], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let mut hits = 0usize;
    for s in samples {
        if clf.predict(&s.features, &s.adjacency)? == s.label(q) {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gcn::GcnConfig;
    use crate::topology::fixtures::small_network;
    use rand::Rng as _;

    fn toy() -> (GcnClassifier, Vec<GraphSample>) {
        let net = small_network();
        let x = Arc::new(node_features(&net));
        let a = Topology::from_edges(6, &[(0, 2), (2, 3), (3, 1)]).unwrap();
        let b = Topology::from_edges(6, &[(0, 4), (4, 5), (5, 1), (0, 1), (2, 4)]).unwrap();
        let samples = vec![
            GraphSample { features: x.clone(), adjacency: a, objective: 0.9 },
            GraphSample { features: x, adjacency: b, objective: 0.1 },
        ];
        let clf = GcnClassifier::new(GcnConfig::default(), &mut rng::seeded(0)).unwrap();
        (clf, samples)
    }

    #[test]
    fn features_layout() {
        let net = small_network();
        let f = node_features(&net);
        assert_eq!((f.rows(), f.cols()), (6, 30));
        assert_eq!(&f.row(2)[..4], &[0.0, 1.0, 0.0, 0.2]);
        assert_eq!(f.row(1)[4], 400.0 / 500.0);
    }

    #[test]
    fn separable_pair_is_learned() {
        let (mut clf, samples) = toy();
        let cfg = GnnTrainConfig { epochs: 200, ..Default::default() };
        let rep = gnn_train(&mut clf, &samples, 0.8, &cfg).unwrap();
        assert_eq!(rep.status, TrainStatus::Ok);
        assert_eq!(rep.train_accuracy, 1.0);
        assert!(rep.losses.last().unwrap() < &rep.losses[0]);
    }

    #[test]
    fn labels_and_degenerate_buffers() {
        let (mut clf, samples) = toy();
        assert!(samples.iter().all(|s| s.label(2.0) == 0));
        let cfg = GnnTrainConfig { epochs: 2, ..Default::default() };
        let rep = gnn_train(&mut clf, &samples, 2.0, &cfg).unwrap();
        assert_eq!(rep.status, TrainStatus::SingleClass);
        assert!(gnn_train(&mut clf, &[], 0.8, &cfg).is_err());
        assert!(gnn_test(&clf, &[], 0.8).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let (mut a, samples) = toy();
        let mut b = a.clone();
        let cfg = GnnTrainConfig { epochs: 5, seed: 4, ..Default::default() };
        gnn_train(&mut a, &samples, 0.8, &cfg).unwrap();
        gnn_train(&mut b, &samples, 0.8, &cfg).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn random_guesser_near_half() {
        let mut r = rng::seeded(12);
        let n = 10_000;
        let mut hits = 0;
        for i in 0..n {
            let truth = i % 2;
            let guess = r.random_range(0..2usize);
            hits += (truth == guess) as usize;
        }
        let acc = hits as f64 / n as f64;
        // Four standard deviations of a fair coin over 10^4 draws.
        assert!(libm::fabs(acc - 0.5) < 0.02, "{acc}");
    }
}
