use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{glorot, ConvCache, ConvKind, ConvParams};
use super::input::Input;
use crate::graphx::NumericGraph;
use crate::{Error, Result};

pub const PROBABILITY_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arch {
    #[serde(rename = "PKGSage")]
    Sage,
    #[serde(rename = "PKGA")]
    Attention,
}

impl Arch {
    pub const ALL: [Arch; 2] = [Arch::Sage, Arch::Attention];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Sage => "PKGSage",
            Arch::Attention => "PKGA",
        }
    }

    pub fn conv_kind(self) -> ConvKind {
        match self {
            Arch::Sage => ConvKind::Sage,
            Arch::Attention => ConvKind::Attention,
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sage" | "pkgsage" => Ok(Arch::Sage),
            "gat" | "pkga" => Ok(Arch::Attention),
            _ => Err(Error::config(format!("unknown architecture {s:?} (expected sage or gat)"))),
        }
    }
}

/// Final layer: linear read-out of the patient row, or a third convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "variant1")]
    Linear,
    #[serde(rename = "variant2")]
    Conv,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Linear, Variant::Conv];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Linear => "variant1",
            Variant::Conv => "variant2",
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Variant::Linear => 1,
            Variant::Conv => 2,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "variant1" | "linear" => Ok(Variant::Linear),
            "2" | "variant2" | "conv" => Ok(Variant::Conv),
            _ => Err(Error::config(format!("unknown variant {s:?} (expected 1 or 2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Arch,
    pub variant: Variant,
    pub input_dim: usize,
    pub n_relations: usize,
    pub hidden: [usize; 2],
    pub n_bases: usize,
}

impl ModelSpec {
    pub fn new(arch: Arch, variant: Variant, input_dim: usize, n_relations: usize) -> Self {
        ModelSpec { arch, variant, input_dim, n_relations, hidden: [64, 32], n_bases: 3 }
    }

    pub fn tag(&self) -> String {
        format!("{}-{}", self.arch.name(), self.variant.name())
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.n_relations == 0 || self.n_bases == 0 || self.hidden.contains(&0) {
            return Err(Error::config(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    /// `z = weight · h_patient + bias[0]`
    Linear {
        weight: Array1<f64>,
        bias: Array1<f64>,
    },
    Conv(ConvParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub layer1: ConvParams,
    pub layer2: ConvParams,
    pub layer3: Head,
}

impl ModelParams {
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = spec.arch.conv_kind();
        let [h1, h2] = spec.hidden;
        let layer1 = ConvParams::init(kind, spec.input_dim, h1, spec.n_relations, spec.n_bases, &mut rng);
        let layer2 = ConvParams::init(kind, h1, h2, spec.n_relations, spec.n_bases, &mut rng);
        let layer3 = match spec.variant {
            Variant::Linear => Head::Linear {
                weight: glorot(h2, 1, h2, 1, &mut rng).into_shape_with_order(h2).expect("column vector"),
                bias: Array1::zeros(1),
            },
            Variant::Conv => Head::Conv(ConvParams::init(kind, h2, 1, spec.n_relations, spec.n_bases, &mut rng)),
        };
        let params = ModelParams { spec, layer1, layer2, layer3 };
        log::debug!("initialised {} with {} parameters", spec.tag(), params.n_params());
        Ok(params)
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            spec: self.spec,
            layer1: self.layer1.zeros_like(),
            layer2: self.layer2.zeros_like(),
            layer3: match &self.layer3 {
                Head::Linear { weight, bias } => {
                    Head::Linear { weight: Array1::zeros(weight.raw_dim()), bias: Array1::zeros(bias.raw_dim()) }
                }
                Head::Conv(c) => Head::Conv(c.zeros_like()),
            },
        }
    }

    /// Named flat views of every parameter tensor with their shapes, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        push_conv("layer1", &self.layer1, &mut out);
        push_conv("layer2", &self.layer2, &mut out);
        match &self.layer3 {
            Head::Linear { weight, bias } => {
                out.push(("layer3.weight".into(), vec![weight.len()], weight.as_slice().expect("standard layout")));
                out.push(("layer3.bias".into(), vec![1], bias.as_slice().expect("standard layout")));
            }
            Head::Conv(c) => push_conv("layer3", c, &mut out),
        }
        out
    }

    /// Mutable flat views, same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.layer1.tensors_mut();
        out.extend(self.layer2.tensors_mut());
        match &mut self.layer3 {
            Head::Linear { weight, bias } => {
                out.push(weight.as_slice_mut().expect("standard layout"));
                out.push(bias.as_slice_mut().expect("standard layout"));
            }
            Head::Conv(c) => out.extend(c.tensors_mut()),
        }
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, _, d)| d.len()).sum()
    }

    /// `self += other` elementwise.
    pub fn add_assign(&mut self, other: &ModelParams) {
        for (dst, (_, _, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            spec: self.spec,
            tensors: self
                .tensors()
                .into_iter()
                .map(|(name, shape, data)| TensorRecord { name, shape, data: data.to_vec() })
                .collect(),
        }
    }

    pub fn from_checkpoint(checkpoint: &Checkpoint) -> Result<Self> {
        if checkpoint.format != CHECKPOINT_FORMAT {
            return Err(Error::validation(format!("unsupported checkpoint format {:?}", checkpoint.format)));
        }
        let mut params = ModelParams::init(checkpoint.spec, 0)?;
        let expected: Vec<(String, Vec<usize>)> = params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
        if expected.len() != checkpoint.tensors.len() {
            return Err(Error::validation(format!(
                "checkpoint has {} tensors, {} expected",
                checkpoint.tensors.len(),
                expected.len()
            )));
        }
        for ((dst, (name, shape)), record) in params.tensors_mut().into_iter().zip(expected).zip(&checkpoint.tensors) {
            if record.name != name || record.shape != shape || record.data.len() != dst.len() {
                return Err(Error::validation(format!(
                    "checkpoint tensor {} {:?} does not match {} {:?}",
                    record.name, record.shape, name, shape
                )));
            }
            if record.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("checkpoint tensor {name} holds non-finite values")));
            }
            dst.copy_from_slice(&record.data);
        }
        Ok(params)
    }
}

fn push_conv<'a>(prefix: &str, conv: &'a ConvParams, out: &mut Vec<(String, Vec<usize>, &'a [f64])>) {
    for ((name, data), shape) in conv.tensors().into_iter().zip(conv_shapes(conv)) {
        out.push((format!("{prefix}.{name}"), shape, data));
    }
}

fn conv_shapes(conv: &ConvParams) -> Vec<Vec<usize>> {
    let mut shapes: Vec<Vec<usize>> = conv.bases.iter().map(|b| b.shape().to_vec()).collect();
    shapes.push(conv.coeffs.shape().to_vec());
    if let Some(w) = &conv.self_weight {
        shapes.push(w.shape().to_vec());
    }
    if let Some(a) = &conv.attn_src {
        shapes.push(vec![a.len()]);
    }
    if let Some(a) = &conv.attn_dst {
        shapes.push(vec![a.len()]);
    }
    shapes
}

pub const CHECKPOINT_FORMAT: &str = "pkgraph-checkpoint/1";

/// Serialized parameters: architecture tag, then every tensor as name, shape and
/// row-major 64-bit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub spec: ModelSpec,
    pub tensors: Vec<TensorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn bce_loss(p: f64, label: bool) -> f64 {
    let p = p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

fn check_finite(layer: &str, values: &Array2<f64>) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric { layer: layer.to_string(), message: "non-finite activation".into() })
    }
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| v.max(0.0))
}

struct Trace {
    cache1: ConvCache,
    pre1: Array2<f64>,
    h1: Array2<f64>,
    cache2: ConvCache,
    pre2: Array2<f64>,
    h2: Array2<f64>,
    cache3: Option<(ConvCache, Array2<f64>)>,
    logit: f64,
}

fn check_graph(graph: &NumericGraph, params: &ModelParams) -> Result<()> {
    if graph.vocab_size != params.spec.input_dim {
        return Err(Error::contract(format!(
            "graph {} has feature width {} but the model expects {}",
            graph.id, graph.vocab_size, params.spec.input_dim
        )));
    }
    if graph.patient_index >= graph.n_nodes || graph.features.len() != graph.n_nodes {
        return Err(Error::contract(format!("graph {} has inconsistent node count", graph.id)));
    }
    Ok(())
}

fn input(graph: &NumericGraph) -> Input<'_> {
    Input::Sparse { rows: &graph.features, dim: graph.vocab_size }
}

fn run(graph: &NumericGraph, params: &ModelParams) -> Result<Trace> {
    check_graph(graph, params)?;
    let (pre1, cache1) = params.layer1.forward(input(graph), &graph.edges)?;
    check_finite("layer1", &pre1)?;
    let h1 = relu(&pre1);
    let (pre2, cache2) = params.layer2.forward(Input::Dense(&h1), &graph.edges)?;
    check_finite("layer2", &pre2)?;
    let h2 = relu(&pre2);
    let patient = graph.patient_index;
    let (logit, cache3) = match &params.layer3 {
        Head::Linear { weight, bias } => (weight.dot(&h2.row(patient)) + bias[0], None),
        Head::Conv(conv) => {
            let (out, cache) = conv.forward(Input::Dense(&h2), &graph.edges)?;
            check_finite("layer3", &out)?;
            (out[[patient, 0]], Some((cache, out)))
        }
    };
    if !logit.is_finite() {
        return Err(Error::Numeric { layer: "layer3".into(), message: "non-finite logit".into() });
    }
    Ok(Trace { cache1, pre1, h1, cache2, pre2, h2, cache3, logit })
}

/// Readmission probability of the patient node.
pub fn model_forward(graph: &NumericGraph, params: &ModelParams) -> Result<f64> {
    run(graph, params).map(|t| sigmoid(t.logit))
}

/// Node representations after each layer: ReLU outputs of layers 1 and 2, and the
/// raw third-layer output for the convolutional head.
pub fn layer_outputs(graph: &NumericGraph, params: &ModelParams) -> Result<Vec<Array2<f64>>> {
    let t = run(graph, params)?;
    let mut out = vec![t.h1, t.h2];
    if let Some((_, o)) = t.cache3 {
        out.push(o);
    }
    Ok(out)
}

/// Loss and parameter gradients for one labelled graph.
///
/// The gradient is that of the unclamped loss with respect to the logit, `p − y`,
/// so saturated predictions still receive a training signal.
pub fn backward(graph: &NumericGraph, params: &ModelParams, label: bool) -> Result<(f64, ModelParams)> {
    let mut grads = params.zeros_like();
    let loss = backward_accumulate(graph, params, label, 1.0, &mut grads)?;
    if grads.tensors().iter().any(|(_, _, d)| d.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric { layer: "backward".into(), message: "non-finite gradient".into() });
    }
    Ok((loss, grads))
}

/// Adds `weight ×` the gradient of one graph's loss into `grads` and returns the loss.
pub fn backward_accumulate(
    graph: &NumericGraph,
    params: &ModelParams,
    label: bool,
    weight: f64,
    grads: &mut ModelParams,
) -> Result<f64> {
    let t = run(graph, params)?;
    let p = sigmoid(t.logit);
    let loss = bce_loss(p, label);
    let d_logit = weight * (p - if label { 1.0 } else { 0.0 });
    let patient = graph.patient_index;
    let n = graph.n_nodes;

    let d_h2 = match (&params.layer3, &mut grads.layer3) {
        (Head::Linear { weight, .. }, Head::Linear { weight: gw, bias: gb }) => {
            gw.scaled_add(d_logit, &t.h2.row(patient));
            gb[0] += d_logit;
            let mut d_h2 = Array2::zeros(t.h2.raw_dim());
            d_h2.row_mut(patient).scaled_add(d_logit, weight);
            d_h2
        }
        (Head::Conv(conv), Head::Conv(gconv)) => {
            let (cache, _) = t.cache3.as_ref().expect("conv head keeps its cache");
            let mut d_out = Array2::zeros((n, 1));
            d_out[[patient, 0]] = d_logit;
            conv.backward(Input::Dense(&t.h2), &graph.edges, cache, &d_out, gconv, true)
                .expect("input gradient requested")
        }
        _ => return Err(Error::contract("gradient buffer does not match the model head")),
    };

    let d_pre2 = d_h2 * t.pre2.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let d_h1 = params
        .layer2
        .backward(Input::Dense(&t.h1), &graph.edges, &t.cache2, &d_pre2, &mut grads.layer2, true)
        .expect("input gradient requested");
    let d_pre1 = d_h1 * t.pre1.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    params.layer1.backward(input(graph), &graph.edges, &t.cache1, &d_pre1, &mut grads.layer1, false);
    Ok(loss)
}
