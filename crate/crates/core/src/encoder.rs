//! Deep residual GCN encoder over a [`LayerPlan`].
//!
//! Layer `l` computes `H = Â_l X_l`, `Z = H W_l` and emits
//! `X_{l+1} = BN(ReLU(Z)) + H` on hidden layers, with batch normalization
//! over the node dimension. [`NormPlacement::PreActivation`] moves it to
//! `ReLU(BN(Z))`; without normalization both reduce to `ReLU(Z) + H`. The skip
//! term is only added where it is well-typed (input and output widths agree);
//! dimension-changing layers emit `ReLU(Z)` alone. The final output is passed
//! through one more ReLU so that affiliations are nonnegative.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::LayerPlan;
use crate::error::{Error, Result};
use crate::graph::{NodeFeatures, NormalizedAdjacency};

pub const BATCH_NORM_EPS: f64 = 1e-5;
pub const BATCH_NORM_MOMENTUM: f64 = 0.1;

/// Where batch normalization sits relative to the hidden ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormPlacement {
    /// `ReLU(BN(Â X W))`. Output columns that start dead tend to stay dead.
    PreActivation,
    /// `BN(ReLU(Â X W))`.
    #[default]
    PostActivation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub depth: usize,
    pub width: usize,
    pub k: usize,
    /// Informational: whether the run used explicit node features.
    pub use_features: bool,
    pub use_batch_norm: bool,
    #[serde(default)]
    pub norm_placement: NormPlacement,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(depth: usize, width: usize, k: usize) -> Self {
        ModelConfig {
            depth,
            width,
            k,
            use_features: false,
            use_batch_norm: true,
            norm_placement: NormPlacement::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == 0 || self.k == 0 {
            return Err(Error::InvalidInput(format!(
                "depth, width and k must be positive (got {}, {}, {})",
                self.depth, self.width, self.k
            )));
        }
        Ok(())
    }

    /// `(in_dim, out_dim)` of every layer for input dimension `d`.
    pub fn layer_dims(&self, d: usize) -> Vec<(usize, usize)> {
        (0..self.depth)
            .map(|l| {
                let fan_in = if l == 0 { d } else { self.width };
                let fan_out = if l + 1 == self.depth { self.k } else { self.width };
                (fan_in, fan_out)
            })
            .collect()
    }
}

/// Per-unit standardization over nodes with learned scale and shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub norm: Option<BatchNorm>,
}

impl Layer {
    pub fn has_residual(&self) -> bool {
        self.weight.nrows() == self.weight.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub input_dim: usize,
    pub layers: Vec<Layer>,
}

/// Whether normalization uses batch statistics or the running estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

struct LayerTape {
    /// Dense `Â_l X_l`; `None` for an identity-feature first layer without a
    /// skip term, where `H = Â_0` is never materialized.
    h: Option<Array2<f64>>,
    /// `Z` without normalization, otherwise the standardized input of the
    /// normalization (`Ẑ`, or the standardized `ReLU(Z)` when it follows
    /// the activation).
    pre: Array2<f64>,
    /// Raw `Z`, kept only when normalization follows the activation.
    z: Option<Array2<f64>>,
    inv_std: Option<Array1<f64>>,
    batch_mean: Option<Array1<f64>>,
    batch_var: Option<Array1<f64>>,
    /// Sum before the final ReLU (last layer only).
    out_sum: Option<Array2<f64>>,
}

/// Cached activations of one forward pass.
pub struct Tape {
    layers: Vec<LayerTape>,
    mode: Mode,
}

impl Tape {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Sign pattern of every ReLU input. Two parameter settings with the same
    /// pattern lie in the same linear region of the network.
    pub fn activation_pattern(&self, model: &Model) -> Vec<bool> {
        let mut bits = Vec::new();
        for (tape, layer) in self.layers.iter().zip(&model.layers) {
            match &tape.z {
                Some(z) => bits.extend(z.iter().map(|&v| v > 0.0)),
                None => bits.extend(normalized(tape, layer).iter().map(|&v| v > 0.0)),
            }
            if let Some(o) = &tape.out_sum {
                bits.extend(o.iter().map(|&v| v > 0.0));
            }
        }
        bits
    }
}

/// Parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Array2<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    /// Flattened in the same order as [`Model::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            if let (Some(g), Some(b)) = (&l.gamma, &l.beta) {
                out.push(g.as_slice().expect("contiguous"));
                out.push(b.as_slice().expect("contiguous"));
            }
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

/// Glorot-uniform weights, unit scale, zero shift.
pub fn init_model(cfg: &ModelConfig, input_dim: usize) -> Result<Model> {
    cfg.validate()?;
    if input_dim == 0 {
        return Err(Error::InvalidInput("input dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layers = cfg
        .layer_dims(input_dim)
        .into_iter()
        .enumerate()
        .map(|(l, (fan_in, fan_out))| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
            let weight = Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(&mut rng));
            let norm = (cfg.use_batch_norm && l + 1 < cfg.depth).then(|| BatchNorm::new(fan_out));
            Layer { weight, norm }
        })
        .collect();
    Ok(Model {
        config: cfg.clone(),
        input_dim,
        layers,
    })
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

fn normalized(tape: &LayerTape, layer: &Layer) -> Array2<f64> {
    match &layer.norm {
        Some(bn) => &tape.pre * &bn.gamma + &bn.beta,
        None => tape.pre.clone(),
    }
}

fn check_finite(x: &Array2<f64>, what: &str, layer: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            what: what.into(),
            layer: Some(layer),
        })
    }
}

impl Model {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    /// Mutable parameter tensors with a flag telling whether weight decay
    /// applies (weights yes, normalization parameters no).
    pub fn param_slices_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out = Vec::new();
        for l in self.layers.iter_mut() {
            out.push((l.weight.as_slice_mut().expect("standard layout"), true));
            if let Some(bn) = l.norm.as_mut() {
                out.push((bn.gamma.as_slice_mut().expect("contiguous"), false));
                out.push((bn.beta.as_slice_mut().expect("contiguous"), false));
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.norm.as_ref().map_or(0, |bn| 2 * bn.gamma.len()))
            .sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weight.iter());
            if let Some(bn) = &l.norm {
                out.extend(bn.gamma.iter());
                out.extend(bn.beta.iter());
            }
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut rest = flat;
        for (slice, _) in self.param_slices_mut() {
            let (head, tail) = rest.split_at(slice.len());
            slice.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn check_inputs(&self, plan: &LayerPlan, x: &NodeFeatures) -> Result<()> {
        if plan.depth() != self.depth() {
            return Err(Error::Shape(format!(
                "plan has {} layers, model has {}",
                plan.depth(),
                self.depth()
            )));
        }
        if x.rows() != plan.n() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} nodes",
                x.rows(),
                plan.n()
            )));
        }
        if x.dim() != self.input_dim {
            return Err(Error::Shape(format!(
                "feature dimension {} but model expects {}",
                x.dim(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Runs the encoder and keeps the activations needed by [`Model::backward`].
    pub fn forward(&self, plan: &LayerPlan, x: &NodeFeatures, mode: Mode) -> Result<(Array2<f64>, Tape)> {
        self.check_inputs(plan, x)?;
        let depth = self.depth();
        let mut tapes = Vec::with_capacity(depth);
        let mut current: Option<Array2<f64>> = None;
        for (l, layer) in self.layers.iter().enumerate() {
            let adj = plan.adjacency(l);
            let residual = layer.has_residual();
            let (h, z) = match (l, x, current.as_ref()) {
                (0, NodeFeatures::Identity { .. }, _) => {
                    let z = adj.matmul(layer.weight.view());
                    let h = residual.then(|| adj.to_dense());
                    (h, z)
                }
                (0, NodeFeatures::Dense(x0), _) => {
                    let h = adj.matmul(x0.view());
                    let z = h.dot(&layer.weight);
                    (Some(h), z)
                }
                (_, _, Some(xl)) => {
                    let h = adj.matmul(xl.view());
                    let z = h.dot(&layer.weight);
                    (Some(h), z)
                }
                _ => unreachable!("hidden state exists after the first layer"),
            };
            check_finite(&z, "pre-activation", l)?;

            let post = layer.norm.is_some() && self.config.norm_placement == NormPlacement::PostActivation;
            let mut tape = LayerTape {
                h: None,
                pre: z,
                z: None,
                inv_std: None,
                batch_mean: None,
                batch_var: None,
                out_sum: None,
            };
            if post {
                let a = relu(&tape.pre);
                tape.z = Some(std::mem::replace(&mut tape.pre, a));
            }
            if let Some(bn) = &layer.norm {
                let (mean, var) = match mode {
                    Mode::Train => {
                        let mean = tape.pre.mean_axis(Axis(0)).expect("nonempty");
                        let var = tape.pre.var_axis(Axis(0), 0.0);
                        (mean, var)
                    }
                    Mode::Inference => (bn.running_mean.clone(), bn.running_var.clone()),
                };
                let inv_std = var.mapv(|v| 1.0 / (v + BATCH_NORM_EPS).sqrt());
                tape.pre = (&tape.pre - &mean) * &inv_std;
                tape.inv_std = Some(inv_std);
                if mode == Mode::Train {
                    tape.batch_mean = Some(mean);
                    tape.batch_var = Some(var);
                }
            }
            let mut out = if post {
                normalized(&tape, layer)
            } else {
                relu(&normalized(&tape, layer))
            };
            if residual {
                out += h.as_ref().expect("skip term is materialized");
            }
            if l + 1 == depth {
                let f = relu(&out);
                tape.out_sum = Some(out);
                out = f;
            }
            check_finite(&out, "activation", l)?;
            tape.h = h;
            tapes.push(tape);
            current = Some(out);
        }
        let f = current.expect("depth >= 1");
        Ok((f, Tape { layers: tapes, mode }))
    }

    /// Affiliations in inference mode (running normalization statistics).
    pub fn affiliations(&self, plan: &LayerPlan, x: &NodeFeatures) -> Result<Array2<f64>> {
        self.forward(plan, x, Mode::Inference).map(|(f, _)| f)
    }

    /// Reverse-mode gradients of a scalar loss given `∂L/∂F`.
    pub fn backward(
        &self,
        plan: &LayerPlan,
        x: &NodeFeatures,
        tape: &Tape,
        d_f: ArrayView2<'_, f64>,
    ) -> Result<Gradients> {
        self.check_inputs(plan, x)?;
        if tape.layers.len() != self.depth() {
            return Err(Error::Shape("tape does not match model depth".into()));
        }
        let n = plan.n() as f64;
        let mut grads: Vec<Option<LayerGrad>> = vec![None; self.depth()];
        let mut d_out = d_f.to_owned();
        for l in (0..self.depth()).rev() {
            let layer = &self.layers[l];
            let lt = &tape.layers[l];
            let adj: &NormalizedAdjacency = plan.adjacency(l);
            if let Some(o) = &lt.out_sum {
                Zip::from(&mut d_out).and(o).for_each(|d, &v| {
                    if v <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let mask = |d: &mut Array2<f64>, pre: &Array2<f64>| {
                Zip::from(d).and(pre).for_each(|d, &v| {
                    if v <= 0.0 {
                        *d = 0.0;
                    }
                })
            };
            // gradient with respect to the input of the normalization
            let norm_backward = |d_y: &Array2<f64>, bn: &BatchNorm, inv_std: &Array1<f64>| {
                let xhat = &lt.pre;
                let d_beta = d_y.sum_axis(Axis(0));
                let d_gamma = (d_y * xhat).sum_axis(Axis(0));
                let d_xhat = d_y * &bn.gamma;
                let d_in = match tape.mode {
                    Mode::Train => {
                        let sum_d = d_xhat.sum_axis(Axis(0));
                        let sum_dx = (&d_xhat * xhat).sum_axis(Axis(0));
                        ((&d_xhat * n - &sum_d) - &(xhat * &sum_dx)) * &(inv_std / n)
                    }
                    Mode::Inference => &d_xhat * inv_std,
                };
                (d_in, d_gamma, d_beta)
            };

            let (d_z, d_gamma, d_beta) = match (&layer.norm, &lt.inv_std, &lt.z) {
                (Some(bn), Some(inv_std), Some(z)) => {
                    let (mut d_a, d_gamma, d_beta) = norm_backward(&d_out, bn, inv_std);
                    mask(&mut d_a, z);
                    (d_a, Some(d_gamma), Some(d_beta))
                }
                (Some(bn), Some(inv_std), None) => {
                    let mut d_zn = d_out.clone();
                    mask(&mut d_zn, &normalized(lt, layer));
                    let (d_z, d_gamma, d_beta) = norm_backward(&d_zn, bn, inv_std);
                    (d_z, Some(d_gamma), Some(d_beta))
                }
                _ => {
                    let mut d_z = d_out.clone();
                    mask(&mut d_z, &lt.pre);
                    (d_z, None, None)
                }
            };

            let d_w = match &lt.h {
                Some(h) if !(l == 0 && x.is_identity()) => h.t().dot(&d_z),
                // H = Â_0 is symmetric, so Hᵀ dZ = Â_0 dZ
                _ => adj.matmul(d_z.view()),
            };
            check_finite(&d_w, "weight gradient", l)?;
            grads[l] = Some(LayerGrad {
                weight: d_w,
                gamma: d_gamma,
                beta: d_beta,
            });

            if l > 0 {
                let mut d_h = d_z.dot(&layer.weight.t());
                if layer.has_residual() {
                    d_h += &d_out;
                }
                d_out = adj.matmul(d_h.view());
            }
        }
        Ok(Gradients {
            layers: grads.into_iter().map(|g| g.expect("every layer visited")).collect(),
        })
    }

    /// Per-layer batch statistics of a train-mode pass, for updating the
    /// running estimates.
    pub fn batch_statistics(tape: &Tape) -> Vec<Option<(Array1<f64>, Array1<f64>)>> {
        tape.layers
            .iter()
            .map(|t| t.batch_mean.clone().zip(t.batch_var.clone()))
            .collect()
    }

    /// Exponential moving update of the running statistics from a train-mode
    /// tape (unbiased variance, momentum [`BATCH_NORM_MOMENTUM`]).
    pub fn update_running_statistics(&mut self, tape: &Tape, n: usize) {
        let correction = if n > 1 { n as f64 / (n - 1) as f64 } else { 1.0 };
        for (layer, stats) in self.layers.iter_mut().zip(Self::batch_statistics(tape)) {
            if let (Some(bn), Some((mean, var))) = (layer.norm.as_mut(), stats) {
                bn.running_mean = &bn.running_mean * (1.0 - BATCH_NORM_MOMENTUM) + &mean * BATCH_NORM_MOMENTUM;
                bn.running_var =
                    &bn.running_var * (1.0 - BATCH_NORM_MOMENTUM) + &(var * correction) * BATCH_NORM_MOMENTUM;
            }
        }
    }

    /// Sets the running statistics to the exact (biased) batch statistics of
    /// a train-mode pass, so that inference reproduces train-mode output.
    pub fn freeze_norm_statistics(&mut self, plan: &LayerPlan, x: &NodeFeatures) -> Result<()> {
        let (_, tape) = self.forward(plan, x, Mode::Train)?;
        for (layer, stats) in self.layers.iter_mut().zip(Self::batch_statistics(&tape)) {
            if let (Some(bn), Some((mean, var))) = (layer.norm.as_mut(), stats) {
                bn.running_mean = mean;
                bn.running_var = var;
            }
        }
        Ok(())
    }
}

/// Versioned JSON checkpoint of a trained encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: Model,
    pub augment_seed: u64,
    pub plan_seed: u64,
    /// Whether each layer carries the skip term.
    pub residual_layers: Vec<bool>,
}

impl Checkpoint {
    pub const FORMAT: &'static str = "dynares-checkpoint";
    pub const VERSION: u32 = 1;

    pub fn new(model: Model, augment_seed: u64, plan_seed: u64) -> Self {
        let residual_layers = model.layers.iter().map(Layer::has_residual).collect();
        Checkpoint {
            format: Self::FORMAT.into(),
            version: Self::VERSION,
            model,
            augment_seed,
            plan_seed,
            residual_layers,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != Self::FORMAT || ckpt.version != Self::VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        Ok(ckpt)
    }
}
