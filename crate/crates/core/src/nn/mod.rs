//! Dense feed-forward networks trained by SGD on summed squared error,
//! with optional Gaussian noise injected into every weight after each step.

mod checkpoint;
mod train;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, PointCloud};
use crate::error::{Error, Result};
use crate::rng::gaussian;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use train::{sgd_step, train, NoiseMode, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Weight initialisation schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Init {
    /// Every layer Gaussian with standard deviation `scale / sqrt(fan_in)`.
    RandomGaussian { scale: f64 },
    /// First layer random as above with unit scale, every later layer the
    /// (truncated or zero-padded) identity.
    Identity,
}

impl Default for Init {
    fn default() -> Self {
        Init::RandomGaussian { scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `outputs x inputs`.
    pub weights: Array2<f64>,
    pub bias: Option<Array1<f64>>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, activation: Activation) -> Self {
        DenseLayer {
            weights,
            bias: None,
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activations for a batch of rows.
    fn pre(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        if let Some(b) = &self.bias {
            z += b;
        }
        z
    }
}

/// Architecture of a network: layer widths and activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub input_dim: usize,
    /// One entry per layer: `(width, activation)`.
    pub layers: Vec<(usize, Activation)>,
    #[serde(default)]
    pub bias: bool,
}

impl Architecture {
    /// `depth` hidden layers of `width` units with `hidden` activation,
    /// followed by a linear readout of `outputs` units.
    pub fn uniform(
        input_dim: usize,
        width: usize,
        depth: usize,
        hidden: Activation,
        outputs: usize,
    ) -> Self {
        let mut layers = vec![(width, hidden); depth];
        layers.push((outputs, Activation::Linear));
        Architecture {
            input_dim,
            layers,
            bias: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
}

/// Every layer's output for one input, plus the network output.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub output: Array1<f64>,
    /// Post-activation vector of each layer in order; the last equals `output`.
    pub activations: Vec<Array1<f64>>,
}

impl MlpModel {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Usage("model needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Usage(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs() == 0 || l.outputs() == 0 {
                return Err(Error::Usage(format!("layer {i} has an empty dimension")));
            }
            if let Some(b) = &l.bias {
                if b.len() != l.outputs() {
                    return Err(Error::Usage(format!("layer {i} bias has wrong length")));
                }
            }
            let finite = l.weights.iter().chain(l.bias.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return Err(Error::Usage(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(MlpModel { layers })
    }

    /// Initialises the given architecture.
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, init: Init, rng: &mut R) -> Result<Self> {
        let mut fan_in = arch.input_dim;
        let mut layers = Vec::with_capacity(arch.layers.len());
        for (i, &(width, act)) in arch.layers.iter().enumerate() {
            let random = |scale: f64, rng: &mut R| {
                let std = scale / (fan_in as f64).sqrt();
                Array2::from_shape_simple_fn((width, fan_in), || std * gaussian(rng))
            };
            let weights = match init {
                Init::RandomGaussian { scale } => random(scale, rng),
                Init::Identity if i == 0 => random(1.0, rng),
                Init::Identity => Array2::from_shape_fn((width, fan_in), |(r, c)| {
                    if r == c {
                        1.0
                    } else {
                        0.0
                    }
                }),
            };
            layers.push(DenseLayer {
                weights,
                bias: arch.bias.then(|| Array1::zeros(width)),
                activation: act,
            });
            fan_in = width;
        }
        MlpModel::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    /// Width of layer `index`, where 0 is the input.
    pub fn width(&self, index: usize) -> Option<usize> {
        match index {
            0 => Some(self.input_dim()),
            i => self.layers.get(i - 1).map(DenseLayer::outputs),
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self.input_dim(),
            layers: self.layers.iter().map(|l| (l.outputs(), l.activation)).collect(),
            bias: self.layers.iter().any(|l| l.bias.is_some()),
        }
    }

    fn check_input(&self, d: usize) -> Result<()> {
        if d != self.input_dim() {
            return Err(Error::Usage(format!(
                "input has {d} features, model expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<ForwardPass> {
        self.check_input(x.len())?;
        let batch = x.insert_axis(Axis(0));
        let trace = self.forward_trace(batch);
        let activations: Vec<Array1<f64>> = trace
            .post
            .into_iter()
            .skip(1)
            .map(|a| a.index_axis_move(Axis(0), 0))
            .collect();
        Ok(ForwardPass {
            output: activations.last().unwrap().clone(),
            activations,
        })
    }

    /// Outputs for a batch of rows.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut a = x.to_owned();
        for l in &self.layers {
            let act = l.activation;
            a = l.pre(a.view()).mapv_into(|z| act.apply(z));
        }
        Ok(a)
    }

    pub(crate) fn forward_trace(&self, x: ArrayView2<f64>) -> Trace {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(x.to_owned());
        for l in &self.layers {
            let z = l.pre(post.last().unwrap().view());
            let act = l.activation;
            post.push(z.mapv(|v| act.apply(v)));
            pre.push(z);
        }
        Trace { pre, post }
    }

    /// Summed squared error `sum_mu ||y_mu - yhat_mu||^2` over the dataset.
    pub fn mse_loss(&self, data: &LabeledDataset) -> Result<f64> {
        self.loss_on(data.inputs().points().view(), data.targets().view())
    }

    pub fn loss_on(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
        let out = self.predict(x)?;
        if out.dim() != y.dim() {
            return Err(Error::Usage(format!(
                "targets shape {:?} does not match outputs {:?}",
                y.dim(),
                out.dim()
            )));
        }
        Ok((&y - &out).mapv(|e| e * e).sum())
    }

    /// Gradients of the summed squared error over a batch.
    pub fn gradients(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Gradients> {
        self.check_input(x.ncols())?;
        if y.nrows() != x.nrows() || y.ncols() != self.output_dim() {
            return Err(Error::Usage(format!(
                "targets shape {:?} does not match batch of {} x {} outputs",
                y.dim(),
                x.nrows(),
                self.output_dim()
            )));
        }
        let trace = self.forward_trace(x);
        let out = trace.post.last().unwrap();
        let resid = &y - out;
        let loss = resid.mapv(|e| e * e).sum();
        // d/dyhat of (y - yhat)^2 is -2 (y - yhat)
        let mut delta = resid.mapv(|e| -2.0 * e);
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            delta.zip_mut_with(&trace.pre[l], |d, &z| *d *= act.derivative(z));
            weights.push(delta.t().dot(&trace.post[l]));
            biases.push(layer.bias.as_ref().map(|_| delta.sum_axis(Axis(0))));
            if l > 0 {
                delta = delta.dot(&layer.weights);
            }
        }
        weights.reverse();
        biases.reverse();
        Ok(Gradients {
            loss,
            weights,
            biases,
        })
    }

    /// Layer `index` activations for every point (0 = the inputs themselves).
    pub fn extract_activations(&self, cloud: &PointCloud, index: usize) -> Result<PointCloud> {
        self.extract(cloud, index, false)
    }

    /// Layer `index` values before its nonlinearity (`index >= 1`).
    pub fn extract_preactivations(&self, cloud: &PointCloud, index: usize) -> Result<PointCloud> {
        if index == 0 {
            return Err(Error::Usage("layer 0 has no pre-activation".into()));
        }
        self.extract(cloud, index, true)
    }

    fn extract(&self, cloud: &PointCloud, index: usize, pre: bool) -> Result<PointCloud> {
        if index > self.depth() {
            return Err(Error::Usage(format!(
                "layer {index} out of range (model has {} layers)",
                self.depth()
            )));
        }
        self.check_input(cloud.dim())?;
        let mut a = cloud.points().to_owned();
        for (i, l) in self.layers[..index].iter().enumerate() {
            let z = l.pre(a.view());
            if pre && i + 1 == index {
                a = z;
                break;
            }
            let act = l.activation;
            a = z.mapv_into(|v| act.apply(v));
        }
        PointCloud::new(a, cloud.labels().map(<[usize]>::to_vec))
    }
}

pub(crate) struct Trace {
    pub pre: Vec<Array2<f64>>,
    /// `post[0]` is the input; `post[l + 1]` the output of layer `l`.
    pub post: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Batch loss at the point where the gradients were taken.
    pub loss: f64,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Option<Array1<f64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn eye(n: usize) -> Array2<f64> {
        Array2::eye(n)
    }

    #[test]
    fn relu_identity_forward() {
        let m = MlpModel::new(vec![DenseLayer::new(eye(2), Activation::Relu)]).unwrap();
        let f = m.forward(array![1.0, -1.0].view()).unwrap();
        assert_eq!(f.output, array![1.0, 0.0]);
        assert_eq!(f.activations.len(), 1);
    }

    #[test]
    fn linear_forward_is_matrix_product() {
        let a = array![[1.0, 2.0, -1.0], [0.5, 0.0, 3.0]];
        let b = array![[2.0, -1.0], [1.0, 1.0], [0.0, 4.0], [1.5, 0.5]];
        let m = MlpModel::new(vec![
            DenseLayer::new(a.clone(), Activation::Linear),
            DenseLayer::new(b.clone(), Activation::Linear),
        ])
        .unwrap();
        let x = array![0.3, -1.2, 2.0];
        let expected = b.dot(&a).dot(&x);
        let got = m.forward(x.view()).unwrap().output;
        for (g, e) in got.iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_input_zero_output() {
        let mut rng = crate::rng::seeded(1);
        let arch = Architecture::uniform(4, 6, 2, Activation::Relu, 3);
        let m = MlpModel::init(&arch, Init::default(), &mut rng).unwrap();
        assert!(m.forward(Array1::zeros(4).view()).unwrap().output.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch_is_usage_error() {
        let m = MlpModel::new(vec![DenseLayer::new(eye(2), Activation::Relu)]).unwrap();
        assert!(matches!(m.forward(array![1.0].view()), Err(Error::Usage(_))));
        let bad = MlpModel::new(vec![
            DenseLayer::new(eye(2), Activation::Relu),
            DenseLayer::new(eye(3), Activation::Linear),
        ]);
        assert!(matches!(bad, Err(Error::Usage(_))));
    }

    #[test]
    fn loss_hand_cases() {
        let x = PointCloud::unlabeled(array![[0.0, 0.0]]).unwrap();
        let ds = LabeledDataset::with_targets(x, array![[1.0, 0.0]]).unwrap();
        let m = MlpModel::new(vec![DenseLayer::new(eye(2), Activation::Linear)]).unwrap();
        assert_eq!(m.mse_loss(&ds).unwrap(), 1.0);

        let x = PointCloud::unlabeled(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let ds = LabeledDataset::with_targets(x, array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(m.mse_loss(&ds).unwrap(), 0.0);
    }

    #[test]
    fn identity_init_passes_nonnegative_inputs() {
        let mut rng = crate::rng::seeded(2);
        let arch = Architecture::uniform(5, 8, 3, Activation::Relu, 2);
        let m = MlpModel::init(&arch, Init::Identity, &mut rng).unwrap();
        let x = crate::data::generate_hypercube(10, 5, 0).unwrap();
        let h1 = m.extract_activations(&x, 1).unwrap();
        let h3 = m.extract_activations(&x, 3).unwrap();
        assert_eq!(h1, h3);
        // truncated identity readout picks the first two hidden units
        let out = m.extract_activations(&x, 4).unwrap();
        assert_eq!(out.points(), &h3.points().slice(ndarray::s![.., ..2]).to_owned());
    }

    #[test]
    fn extraction_layers() {
        let mut rng = crate::rng::seeded(3);
        let arch = Architecture::uniform(3, 5, 2, Activation::Relu, 2);
        let m = MlpModel::init(&arch, Init::default(), &mut rng).unwrap();
        let x = crate::data::generate_hypercube(20, 3, 1)
            .unwrap()
            .with_labels((0..20).map(|i| i % 2).collect())
            .unwrap();
        assert_eq!(m.extract_activations(&x, 0).unwrap(), x);
        let last = m.extract_activations(&x, 3).unwrap();
        for i in 0..x.len() {
            let f = m.forward(x.row(i)).unwrap();
            assert_eq!(last.row(i).to_owned(), f.output);
        }
        assert_eq!(last.labels(), x.labels());
        let h = m.extract_activations(&x, 1).unwrap();
        assert!(h.points().iter().all(|&v| v >= 0.0));
        let z = m.extract_preactivations(&x, 1).unwrap();
        assert_eq!(z.points().mapv(|v| v.max(0.0)), h.points());
        assert!(matches!(m.extract_activations(&x, 4), Err(Error::Usage(_))));
    }
}
