//! Relational graph convolutions with basis-decomposed relation weights.
//!
//! Every relation `r` owns an effective weight `W_r = Σ_b coeffs[r, b] · bases[b]`.
//! Node features are rows; a layer maps `n × d_in` to `n × d_out`.
//!
//! - Sage: `X'[v] = X[v]·S + Σ_r mean_{u→v under r} X[u]·W_r`; a node without
//!   in-neighbours under `r` receives nothing from `r`.
//! - Attention: for each relation, `e_uv = LeakyReLU_0.2(a_src·z_u + a_dst·z_v)`
//!   with `z = X·W_r`, softmax over the in-neighbours of `v` plus `v` itself,
//!   and `X'[v] = Σ_r Σ_u α_uv z_u`.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::input::Input;
use crate::graphx::EdgeList;
use crate::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvKind {
    Sage,
    Attention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub kind: ConvKind,
    /// `n_bases` matrices of shape `d_in × d_out`.
    pub bases: Vec<Array2<f64>>,
    /// `n_relations × n_bases`.
    pub coeffs: Array2<f64>,
    /// Root weight `d_in × d_out`; Sage only.
    pub self_weight: Option<Array2<f64>>,
    /// Attention halves, `d_out` each; attention only.
    pub attn_src: Option<Array1<f64>>,
    pub attn_dst: Option<Array1<f64>>,
}

pub(crate) fn glorot<R: Rng>(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

impl ConvParams {
    pub fn init<R: Rng>(
        kind: ConvKind,
        d_in: usize,
        d_out: usize,
        n_relations: usize,
        n_bases: usize,
        rng: &mut R,
    ) -> Self {
        let bases = (0..n_bases).map(|_| glorot(d_in, d_out, d_in, d_out, rng)).collect();
        let coeffs = glorot(n_relations, n_bases, n_relations, n_bases, rng);
        let (self_weight, attn_src, attn_dst) = match kind {
            ConvKind::Sage => (Some(glorot(d_in, d_out, d_in, d_out, rng)), None, None),
            ConvKind::Attention => {
                let a =
                    glorot(2 * d_out, 1, 2 * d_out, 1, rng).into_shape_with_order(2 * d_out).expect("column vector");
                (None, Some(a.slice(ndarray::s![..d_out]).to_owned()), Some(a.slice(ndarray::s![d_out..]).to_owned()))
            }
        };
        ConvParams { kind, bases, coeffs, self_weight, attn_src, attn_dst }
    }

    pub fn zeros_like(&self) -> Self {
        ConvParams {
            kind: self.kind,
            bases: self.bases.iter().map(|b| Array2::zeros(b.raw_dim())).collect(),
            coeffs: Array2::zeros(self.coeffs.raw_dim()),
            self_weight: self.self_weight.as_ref().map(|w| Array2::zeros(w.raw_dim())),
            attn_src: self.attn_src.as_ref().map(|a| Array1::zeros(a.raw_dim())),
            attn_dst: self.attn_dst.as_ref().map(|a| Array1::zeros(a.raw_dim())),
        }
    }

    pub fn d_in(&self) -> usize {
        self.bases[0].nrows()
    }

    pub fn d_out(&self) -> usize {
        self.bases[0].ncols()
    }

    pub fn n_relations(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn n_bases(&self) -> usize {
        self.bases.len()
    }

    /// Effective weight of relation `r`.
    pub fn relation_weight(&self, r: usize) -> Array2<f64> {
        let mut w = Array2::zeros(self.bases[0].raw_dim());
        for (b, basis) in self.bases.iter().enumerate() {
            w.scaled_add(self.coeffs[[r, b]], basis);
        }
        w
    }

    /// Named flat views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = self
            .bases
            .iter()
            .enumerate()
            .map(|(b, m)| (format!("basis{b}"), m.as_slice().expect("standard layout")))
            .collect();
        out.push(("coeffs".into(), self.coeffs.as_slice().expect("standard layout")));
        if let Some(w) = &self.self_weight {
            out.push(("self_weight".into(), w.as_slice().expect("standard layout")));
        }
        if let Some(a) = &self.attn_src {
            out.push(("attn_src".into(), a.as_slice().expect("standard layout")));
        }
        if let Some(a) = &self.attn_dst {
            out.push(("attn_dst".into(), a.as_slice().expect("standard layout")));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> =
            self.bases.iter_mut().map(|m| m.as_slice_mut().expect("standard layout")).collect();
        out.push(self.coeffs.as_slice_mut().expect("standard layout"));
        if let Some(w) = &mut self.self_weight {
            out.push(w.as_slice_mut().expect("standard layout"));
        }
        if let Some(a) = &mut self.attn_src {
            out.push(a.as_slice_mut().expect("standard layout"));
        }
        if let Some(a) = &mut self.attn_dst {
            out.push(a.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn check_shapes(&self, x: &Input<'_>, edges: &[EdgeList]) -> Result<()> {
        if x.dim() != self.d_in() {
            return Err(Error::contract(format!("input width {} but layer expects {}", x.dim(), self.d_in())));
        }
        if edges.len() != self.n_relations() {
            return Err(Error::contract(format!(
                "{} edge lists but layer has {} relations",
                edges.len(),
                self.n_relations()
            )));
        }
        let n = x.n_rows();
        if edges.iter().any(|l| l.iter().any(|(s, t)| s >= n || t >= n)) {
            return Err(Error::contract(format!("edge endpoint beyond {n} nodes")));
        }
        Ok(())
    }

    pub(crate) fn forward(&self, x: Input<'_>, edges: &[EdgeList]) -> Result<(Array2<f64>, ConvCache)> {
        self.check_shapes(&x, edges)?;
        let projected: Vec<Array2<f64>> = self.bases.iter().map(|v| x.matmul(v)).collect();
        match self.kind {
            ConvKind::Sage => Ok(self.sage_forward(x, edges, projected)),
            ConvKind::Attention => Ok(self.attention_forward(x, edges, projected)),
        }
    }

    /// Σ_b coeffs[r, b] · projected[b], i.e. `X · W_r`.
    fn combine(&self, r: usize, projected: &[Array2<f64>]) -> Array2<f64> {
        let mut z = Array2::zeros(projected[0].raw_dim());
        for (b, p) in projected.iter().enumerate() {
            z.scaled_add(self.coeffs[[r, b]], p);
        }
        z
    }

    fn sage_forward(&self, x: Input<'_>, edges: &[EdgeList], projected: Vec<Array2<f64>>) -> (Array2<f64>, ConvCache) {
        let n = x.n_rows();
        let mut out = x.matmul(self.self_weight.as_ref().expect("sage layers have a root weight"));
        for (r, list) in edges.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let deg = in_degree(list, n);
            let z = self.combine(r, &projected);
            for (u, v) in list.iter() {
                out.row_mut(v).scaled_add(1.0 / deg[v] as f64, &z.row(u));
            }
        }
        (out, ConvCache { projected, attention: Vec::new() })
    }

    fn attention_forward(
        &self,
        x: Input<'_>,
        edges: &[EdgeList],
        projected: Vec<Array2<f64>>,
    ) -> (Array2<f64>, ConvCache) {
        let n = x.n_rows();
        let a_src = self.attn_src.as_ref().expect("attention layers have attention vectors");
        let a_dst = self.attn_dst.as_ref().expect("attention layers have attention vectors");
        let mut out = Array2::zeros((n, self.d_out()));
        let mut attention = Vec::with_capacity(edges.len());
        for (r, list) in edges.iter().enumerate() {
            let z = self.combine(r, &projected);
            let s = z.dot(a_src);
            let t = z.dot(a_dst);
            let mut att = Neighbourhoods::with_self_loops(list, n);
            for v in 0..n {
                let range = att.offsets[v]..att.offsets[v + 1];
                let mut max = f64::NEG_INFINITY;
                for k in range.clone() {
                    let pre = s[att.sources[k]] + t[v];
                    att.pre[k] = pre;
                    max = max.max(leaky_relu(pre));
                }
                let mut total = 0.0;
                for k in range.clone() {
                    let e = (leaky_relu(att.pre[k]) - max).exp();
                    att.alpha[k] = e;
                    total += e;
                }
                let mut o = out.row_mut(v);
                for k in range {
                    att.alpha[k] /= total;
                    o.scaled_add(att.alpha[k], &z.row(att.sources[k]));
                }
            }
            att.z = z;
            attention.push(att);
        }
        (out, ConvCache { projected, attention })
    }

    /// Adds the parameter gradients into `grads`; returns the input gradient when
    /// `need_input_grad`.
    pub(crate) fn backward(
        &self,
        x: Input<'_>,
        edges: &[EdgeList],
        cache: &ConvCache,
        grad_out: &Array2<f64>,
        grads: &mut ConvParams,
        need_input_grad: bool,
    ) -> Option<Array2<f64>> {
        let n = x.n_rows();
        let mut grad_proj: Vec<Array2<f64>> = cache.projected.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        let mut grad_x = None;

        // d z_r for every relation, then shared chain through the bases
        let mut relation_grads: Vec<(usize, Array2<f64>)> = Vec::with_capacity(edges.len());
        match self.kind {
            ConvKind::Sage => {
                let root = self.self_weight.as_ref().expect("sage layers have a root weight");
                x.add_transpose_matmul(grad_out, grads.self_weight.as_mut().expect("mirrors params"));
                if need_input_grad {
                    grad_x = Some(grad_out.dot(&root.t()));
                }
                for (r, list) in edges.iter().enumerate() {
                    if list.is_empty() {
                        continue;
                    }
                    let deg = in_degree(list, n);
                    let mut dz = Array2::zeros((n, self.d_out()));
                    for (u, v) in list.iter() {
                        dz.row_mut(u).scaled_add(1.0 / deg[v] as f64, &grad_out.row(v));
                    }
                    relation_grads.push((r, dz));
                }
            }
            ConvKind::Attention => {
                let a_src = self.attn_src.as_ref().expect("attention layers have attention vectors");
                let a_dst = self.attn_dst.as_ref().expect("attention layers have attention vectors");
                for (r, att) in cache.attention.iter().enumerate() {
                    let mut dz = Array2::zeros((n, self.d_out()));
                    let mut ds = Array1::zeros(n);
                    let mut dt = Array1::zeros(n);
                    for v in 0..n {
                        let range = att.offsets[v]..att.offsets[v + 1];
                        let g = grad_out.row(v);
                        let mut weighted = 0.0;
                        let d_alpha: Vec<f64> = range
                            .clone()
                            .map(|k| {
                                let d = g.dot(&att.z.row(att.sources[k]));
                                weighted += att.alpha[k] * d;
                                d
                            })
                            .collect();
                        for (k, da) in range.zip(d_alpha) {
                            let u = att.sources[k];
                            dz.row_mut(u).scaled_add(att.alpha[k], &g);
                            let de = att.alpha[k] * (da - weighted);
                            let dpre = de * if att.pre[k] > 0.0 { 1.0 } else { LEAKY_SLOPE };
                            ds[u] += dpre;
                            dt[v] += dpre;
                        }
                    }
                    *grads.attn_src.as_mut().expect("mirrors params") += &att.z.t().dot(&ds);
                    *grads.attn_dst.as_mut().expect("mirrors params") += &att.z.t().dot(&dt);
                    for v in 0..n {
                        dz.row_mut(v).scaled_add(ds[v], a_src);
                        dz.row_mut(v).scaled_add(dt[v], a_dst);
                    }
                    relation_grads.push((r, dz));
                }
            }
        }

        for (r, dz) in &relation_grads {
            for (b, p) in cache.projected.iter().enumerate() {
                grads.coeffs[[*r, b]] += (dz * p).sum();
                grad_proj[b].scaled_add(self.coeffs[[*r, b]], dz);
            }
        }
        for (b, dp) in grad_proj.iter().enumerate() {
            x.add_transpose_matmul(dp, &mut grads.bases[b]);
            if need_input_grad {
                let contribution = dp.dot(&self.bases[b].t());
                match &mut grad_x {
                    Some(gx) => *gx += &contribution,
                    None => grad_x = Some(contribution),
                }
            }
        }
        if need_input_grad && grad_x.is_none() {
            grad_x = Some(Array2::zeros((n, self.d_in())));
        }
        grad_x
    }
}

fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn in_degree(list: &EdgeList, n: usize) -> Vec<usize> {
    let mut deg = vec![0; n];
    for (_, v) in list.iter() {
        deg[v] += 1;
    }
    deg
}

pub(crate) struct ConvCache {
    /// `X · bases[b]` for every basis.
    projected: Vec<Array2<f64>>,
    /// Per-relation attention state; empty for Sage.
    attention: Vec<Neighbourhoods>,
}

/// In-neighbours of every node (self-loop last), grouped by target, with the
/// attention pre-activations and weights of the last forward pass.
struct Neighbourhoods {
    offsets: Vec<usize>,
    sources: Vec<usize>,
    pre: Vec<f64>,
    alpha: Vec<f64>,
    z: Array2<f64>,
}

impl Neighbourhoods {
    fn with_self_loops(list: &EdgeList, n: usize) -> Self {
        let mut counts = vec![1usize; n];
        for (_, v) in list.iter() {
            counts[v] += 1;
        }
        let mut offsets = vec![0; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + counts[v];
        }
        let mut fill = offsets[..n].to_vec();
        let mut sources = vec![0; offsets[n]];
        for (u, v) in list.iter() {
            sources[fill[v]] = u;
            fill[v] += 1;
        }
        for v in 0..n {
            sources[fill[v]] = v;
        }
        let m = sources.len();
        Neighbourhoods { offsets, sources, pre: vec![0.0; m], alpha: vec![0.0; m], z: Array2::zeros((0, 0)) }
    }
}

/// Sage convolution of dense features.
pub fn sage_layer(x: &Array2<f64>, edges: &[EdgeList], params: &ConvParams) -> Result<Array2<f64>> {
    if params.kind != ConvKind::Sage {
        return Err(Error::contract("sage_layer needs Sage parameters"));
    }
    params.forward(Input::Dense(x), edges).map(|(out, _)| out)
}

/// Single-head attention convolution of dense features.
pub fn gat_layer(x: &Array2<f64>, edges: &[EdgeList], params: &ConvParams) -> Result<Array2<f64>> {
    if params.kind != ConvKind::Attention {
        return Err(Error::contract("gat_layer needs attention parameters"));
    }
    params.forward(Input::Dense(x), edges).map(|(out, _)| out)
}
