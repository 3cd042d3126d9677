//! Hand-written networks with explicit backpropagation: dense stacks for
//! the actor and critic, the graph-convolutional good/poor classifier, and
//! the optimizers that train them. All arithmetic is `f64`.

pub mod gcn;
pub mod gnn;
pub mod matrix;
pub mod mlp;
pub mod optim;

pub use gcn::{GcnClassifier, GcnConfig};
pub use gnn::{gnn_test, gnn_train, node_features, GnnTrainConfig, GnnTrainReport, GraphSample, TrainStatus};
pub use matrix::Matrix;
pub use mlp::{log_softmax, Activation, Mlp, MlpShape};
pub use optim::{clip_grad_norm, Adam, RmsProp};
