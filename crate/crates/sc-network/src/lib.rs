//! LeNet-5 on the stochastic datapath: topology construction, MNIST and
//! weight ingestion, and both floating-point and stochastic inference.

pub mod error;
pub mod infer;
pub mod mnist;
pub mod topology;
pub mod weights;

pub use error::{NetworkError, Result};
pub use infer::{argmax, calibrate_layer, infer_float, ScNetwork, ScNetworkConfig};
pub use mnist::{bipolar_pixel, load_mnist, MnistDataset};
pub use topology::{build_lenet5, LayerSpec, NetworkTopology};
pub use weights::{load_weights, save_weights, LayerWeights, WeightSet};
