//! Patch-transformer encoder with pretext and regression heads, forward and
//! reverse-mode passes over a flat parameter vector.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::params::ParamLayout;
use crate::scalar::{gemm, Real, View};
use crate::ModelError;

const LN_EPS: f64 = 1e-5;
const POS_INIT_STD: f64 = 0.02;
pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub image_size: usize,
    pub patch_size: usize,
    pub embed_dim: usize,
    pub depth: usize,
    pub heads: usize,
    pub mlp_ratio: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            image_size: 224,
            patch_size: 16,
            embed_dim: 192,
            depth: 4,
            heads: 3,
            mlp_ratio: 4,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    /// Smallest useful encoder; every parameter of it can be checked by
    /// finite differences in seconds.
    pub fn tiny() -> Self {
        EncoderConfig {
            image_size: 32,
            patch_size: 8,
            embed_dim: 16,
            depth: 2,
            heads: 2,
            mlp_ratio: 2,
            seed: 0,
        }
    }

    /// Encoder sized for CPU pre-training on a few thousand 112 px images.
    pub fn small() -> Self {
        EncoderConfig {
            image_size: 112,
            patch_size: 16,
            embed_dim: 64,
            depth: 2,
            heads: 4,
            mlp_ratio: 2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::ConfigInvalid(m));
        if self.patch_size == 0 || self.image_size == 0 || !self.image_size.is_multiple_of(self.patch_size) {
            return bad(format!(
                "patch size {} must divide image size {}",
                self.patch_size, self.image_size
            ));
        }
        if self.heads == 0 || self.embed_dim == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return bad(format!(
                "embed dim {} must be a positive multiple of heads {}",
                self.embed_dim, self.heads
            ));
        }
        if self.depth == 0 || self.mlp_ratio == 0 {
            return bad("depth and mlp ratio must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> usize {
        self.image_size / self.patch_size
    }

    pub fn patches(&self) -> usize {
        self.grid() * self.grid()
    }

    /// Sequence length including the classification token.
    pub fn tokens(&self) -> usize {
        self.patches() + 1
    }

    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * CHANNELS
    }

    /// Values per image once patchified.
    pub fn input_len(&self) -> usize {
        self.patches() * self.patch_dim()
    }

    fn hidden(&self) -> usize {
        self.embed_dim * self.mlp_ratio
    }
}

/// Output widths of the heads; zero means absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadConfig {
    pub atom: usize,
    pub bond: usize,
    pub motif: usize,
    pub regression: bool,
}

impl HeadConfig {
    pub fn pretext(atom: usize, bond: usize, motif: usize) -> Self {
        HeadConfig {
            atom,
            bond,
            motif,
            regression: false,
        }
    }

    pub fn width(&self, head: Head) -> usize {
        match head {
            Head::Atom => self.atom,
            Head::Bond => self.bond,
            Head::Motif => self.motif,
            Head::Regression => usize::from(self.regression),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Atom,
    Bond,
    Motif,
    Regression,
}

impl Head {
    pub const ALL: [Head; 4] = [Head::Atom, Head::Bond, Head::Motif, Head::Regression];

    fn name(self) -> &'static str {
        match self {
            Head::Atom => "atom",
            Head::Bond => "bond",
            Head::Motif => "motif",
            Head::Regression => "regression",
        }
    }
}

/// Affine map from regression-head units to pK.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl Default for TargetScale {
    fn default() -> Self {
        TargetScale { mean: 0.0, std: 1.0 }
    }
}

#[derive(Debug, Clone)]
struct Linear {
    w: Range<usize>,
    b: Range<usize>,
    inp: usize,
    out: usize,
}

#[derive(Debug, Clone)]
struct Norm {
    g: Range<usize>,
    b: Range<usize>,
}

#[derive(Debug, Clone)]
struct Block {
    norm1: Norm,
    qkv: Linear,
    proj: Linear,
    norm2: Norm,
    fc1: Linear,
    fc2: Linear,
}

#[derive(Debug, Clone)]
struct Index {
    patch: Linear,
    cls: Range<usize>,
    pos: Range<usize>,
    blocks: Vec<Block>,
    norm: Norm,
    heads: [Option<Linear>; 4],
}

fn linear(layout: &mut ParamLayout, name: &str, inp: usize, out: usize) -> Linear {
    Linear {
        w: layout.add(format!("{name}.weight"), &[inp, out]),
        b: layout.add(format!("{name}.bias"), &[out]),
        inp,
        out,
    }
}

fn norm(layout: &mut ParamLayout, name: &str, d: usize) -> Norm {
    Norm {
        g: layout.add(format!("{name}.weight"), &[d]),
        b: layout.add(format!("{name}.bias"), &[d]),
    }
}

fn build_index(cfg: &EncoderConfig, heads: &HeadConfig) -> (ParamLayout, Index) {
    let d = cfg.embed_dim;
    let mut l = ParamLayout::default();
    let patch = linear(&mut l, "patch_embed", cfg.patch_dim(), d);
    let cls = l.add("cls_token", &[d]);
    let pos = l.add("pos_embed", &[cfg.tokens(), d]);
    let blocks = (0..cfg.depth)
        .map(|i| Block {
            norm1: norm(&mut l, &format!("blocks.{i}.norm1"), d),
            qkv: linear(&mut l, &format!("blocks.{i}.attn.qkv"), d, 3 * d),
            proj: linear(&mut l, &format!("blocks.{i}.attn.proj"), d, d),
            norm2: norm(&mut l, &format!("blocks.{i}.norm2"), d),
            fc1: linear(&mut l, &format!("blocks.{i}.mlp.fc1"), d, cfg.hidden()),
            fc2: linear(&mut l, &format!("blocks.{i}.mlp.fc2"), cfg.hidden(), d),
        })
        .collect();
    let norm = norm(&mut l, "norm", d);
    let heads = Head::ALL.map(|h| {
        let w = heads.width(h);
        (w > 0).then(|| linear(&mut l, &format!("head.{}", h.name()), d, w))
    });
    (
        l,
        Index {
            patch,
            cls,
            pos,
            blocks,
            norm,
            heads,
        },
    )
}

/// Encoder plus heads over one flat parameter vector.
#[derive(Debug, Clone)]
pub struct Model<T: Real> {
    encoder: EncoderConfig,
    heads: HeadConfig,
    layout: ParamLayout,
    idx: Index,
    pub params: Vec<T>,
    pub target_scale: TargetScale,
}

impl<T: Real> PartialEq for Model<T> {
    fn eq(&self, other: &Self) -> bool {
        self.encoder == other.encoder
            && self.heads == other.heads
            && self.target_scale == other.target_scale
            && self.params == other.params
    }
}

/// Final-layer token features, `batch × tokens × dim`, classification token
/// first in each sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded<T> {
    pub batch: usize,
    pub tokens: usize,
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Real> Encoded<T> {
    pub fn row(&self, b: usize, t: usize) -> &[T] {
        let start = (b * self.tokens + t) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn cls(&self, b: usize) -> &[T] {
        self.row(b, 0)
    }

    pub fn patch(&self, b: usize, n: usize) -> &[T] {
        self.row(b, n + 1)
    }
}

#[derive(Debug, Clone)]
struct NormCache<T> {
    xhat: Vec<T>,
    rstd: Vec<T>,
}

#[derive(Debug, Clone)]
struct BlockCache<T> {
    norm1: NormCache<T>,
    h1: Vec<T>,
    qkv: Vec<T>,
    probs: Vec<T>,
    ctx: Vec<T>,
    norm2: NormCache<T>,
    h2: Vec<T>,
    pre: Vec<T>,
    act: Vec<T>,
}

/// Activations kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct Cache<T> {
    batch: usize,
    input: Vec<T>,
    blocks: Vec<BlockCache<T>>,
    norm: NormCache<T>,
}

fn add_bias<T: Real>(x: &mut [T], bias: &[T]) {
    for row in x.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += *b;
        }
    }
}

fn add_colsum<T: Real>(dst: &mut [T], src: &[T]) {
    for row in src.chunks_exact(dst.len()) {
        for (d, v) in dst.iter_mut().zip(row) {
            *d += *v;
        }
    }
}

fn layer_norm<T: Real>(x: &[T], g: &[T], b: &[T]) -> (Vec<T>, NormCache<T>) {
    let d = g.len();
    let rows = x.len() / d;
    let mut out = vec![T::zero(); x.len()];
    let mut xhat = vec![T::zero(); x.len()];
    let mut rstd = vec![T::zero(); rows];
    let inv_d = T::of(1.0 / d as f64);
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let mean = row.iter().copied().sum::<T>() * inv_d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_d;
        let rs = T::one() / (var + T::of(LN_EPS)).sqrt();
        rstd[r] = rs;
        for k in 0..d {
            let h = (row[k] - mean) * rs;
            xhat[r * d + k] = h;
            out[r * d + k] = h * g[k] + b[k];
        }
    }
    (out, NormCache { xhat, rstd })
}

/// Adds the input gradient to `dx` and parameter gradients to `dg`, `db`.
fn layer_norm_backward<T: Real>(cache: &NormCache<T>, g: &[T], dy: &[T], dx: &mut [T], dg: &mut [T], db: &mut [T]) {
    let d = g.len();
    let inv_d = T::of(1.0 / d as f64);
    let mut dxhat = vec![T::zero(); d];
    for (r, &rs) in cache.rstd.iter().enumerate() {
        let xh = &cache.xhat[r * d..(r + 1) * d];
        let dyr = &dy[r * d..(r + 1) * d];
        let mut mean_dxhat = T::zero();
        let mut mean_dxhat_xhat = T::zero();
        for k in 0..d {
            dg[k] += dyr[k] * xh[k];
            db[k] += dyr[k];
            dxhat[k] = dyr[k] * g[k];
            mean_dxhat += dxhat[k];
            mean_dxhat_xhat += dxhat[k] * xh[k];
        }
        mean_dxhat *= inv_d;
        mean_dxhat_xhat *= inv_d;
        for k in 0..d {
            dx[r * d + k] += rs * (dxhat[k] - mean_dxhat - xh[k] * mean_dxhat_xhat);
        }
    }
}

const GELU_C: f64 = 0.044_715;

fn gelu<T: Real>(u: T) -> T {
    let c = T::of((2.0 / std::f64::consts::PI).sqrt());
    let t = (c * (u + T::of(GELU_C) * u * u * u)).tanh();
    T::of(0.5) * u * (T::one() + t)
}

fn gelu_grad<T: Real>(u: T) -> T {
    let c = T::of((2.0 / std::f64::consts::PI).sqrt());
    let t = (c * (u + T::of(GELU_C) * u * u * u)).tanh();
    let dinner = c * (T::one() + T::of(3.0 * GELU_C) * u * u);
    T::of(0.5) * (T::one() + t) + T::of(0.5) * u * (T::one() - t * t) * dinner
}

fn softmax_rows<T: Real>(x: &mut [T], cols: usize) {
    for row in x.chunks_exact_mut(cols) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

impl<T: Real> Model<T> {
    /// Fresh model initialized from `encoder.seed`.
    pub fn new(encoder: EncoderConfig, heads: HeadConfig) -> Result<Self, ModelError> {
        encoder.validate()?;
        let (layout, idx) = build_index(&encoder, &heads);
        let mut model = Model {
            params: vec![T::zero(); layout.len()],
            encoder,
            heads,
            layout,
            idx,
            target_scale: TargetScale::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(model.encoder.seed);
        model.init_encoder(&mut rng);
        for h in Head::ALL {
            model.init_head(h, &mut rng);
        }
        Ok(model)
    }

    /// Model over existing parameters, e.g. read from a checkpoint.
    pub fn from_params(encoder: EncoderConfig, heads: HeadConfig, params: Vec<T>) -> Result<Self, ModelError> {
        encoder.validate()?;
        let (layout, idx) = build_index(&encoder, &heads);
        if params.len() != layout.len() {
            return Err(ModelError::ShapeMismatch {
                expected: layout.len(),
                got: params.len(),
            });
        }
        Ok(Model {
            encoder,
            heads,
            layout,
            idx,
            params,
            target_scale: TargetScale::default(),
        })
    }

    /// Same encoder weights under a new head set. Heads present in both keep
    /// their weights when the widths agree; the rest are freshly drawn from
    /// `seed`.
    pub fn with_heads(&self, heads: HeadConfig, seed: u64) -> Model<T> {
        let (layout, idx) = build_index(&self.encoder, &heads);
        let mut out = Model {
            params: vec![T::zero(); layout.len()],
            encoder: self.encoder.clone(),
            heads,
            layout,
            idx,
            target_scale: self.target_scale,
        };
        for spec in out.layout.tensors() {
            if let Some(src) = self.layout.get(&spec.name).filter(|s| s.shape == spec.shape) {
                out.params[spec.range()].copy_from_slice(&self.params[src.range()]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for h in Head::ALL {
            let kept = self.idx.heads[h as usize]
                .as_ref()
                .is_some_and(|l| l.out == heads.width(h));
            if !kept {
                out.init_head(h, &mut rng);
            }
        }
        out
    }

    fn xavier(&mut self, lin: &Linear, rng: &mut ChaCha8Rng) {
        let limit = (6.0 / (lin.inp + lin.out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        for v in &mut self.params[lin.w.clone()] {
            *v = T::of(dist.sample(rng));
        }
    }

    fn init_encoder(&mut self, rng: &mut ChaCha8Rng) {
        let idx = self.idx.clone();
        self.xavier(&idx.patch, rng);
        let normal = Normal::new(0.0, POS_INIT_STD).expect("positive std");
        for r in [idx.cls.clone(), idx.pos.clone()] {
            for v in &mut self.params[r] {
                *v = T::of(normal.sample(rng));
            }
        }
        for b in &idx.blocks {
            for lin in [&b.qkv, &b.proj, &b.fc1, &b.fc2] {
                self.xavier(lin, rng);
            }
            for n in [&b.norm1, &b.norm2] {
                self.params[n.g.clone()].fill(T::one());
            }
        }
        self.params[idx.norm.g.clone()].fill(T::one());
    }

    fn init_head(&mut self, head: Head, rng: &mut ChaCha8Rng) {
        if let Some(lin) = self.idx.heads[head as usize].clone() {
            self.xavier(&lin, rng);
            self.params[lin.b.clone()].fill(T::zero());
        }
    }

    pub fn encoder_config(&self) -> &EncoderConfig {
        &self.encoder
    }

    pub fn head_config(&self) -> &HeadConfig {
        &self.heads
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Encoder only; returns final-layer features.
    pub fn forward(&self, input: &[T], batch: usize) -> Result<Encoded<T>, ModelError> {
        Ok(self.forward_cached(input, batch)?.0)
    }

    /// Forward pass over `batch` patchified images laid end to end.
    pub fn forward_cached(&self, input: &[T], batch: usize) -> Result<(Encoded<T>, Cache<T>), ModelError> {
        let cfg = &self.encoder;
        if input.len() != batch * cfg.input_len() {
            return Err(ModelError::ShapeMismatch {
                expected: batch * cfg.input_len(),
                got: input.len(),
            });
        }
        let p = &self.params;
        let (n, t, d) = (cfg.patches(), cfg.tokens(), cfg.embed_dim);
        let bt = batch * t;
        let idx = &self.idx;

        let mut pe = vec![T::zero(); batch * n * d];
        gemm(
            T::one(),
            input,
            View::dense(batch * n, cfg.patch_dim()),
            &p[idx.patch.w.clone()],
            View::dense(cfg.patch_dim(), d),
            T::zero(),
            &mut pe,
            View::dense(batch * n, d),
        );
        let cls = &p[idx.cls.clone()];
        let pos = &p[idx.pos.clone()];
        let pb = &p[idx.patch.b.clone()];
        let mut x = vec![T::zero(); bt * d];
        for b in 0..batch {
            for k in 0..d {
                x[b * t * d + k] = cls[k] + pos[k];
            }
            for j in 0..n {
                let dst = (b * t + 1 + j) * d;
                let src = (b * n + j) * d;
                for k in 0..d {
                    x[dst + k] = pe[src + k] + pb[k] + pos[(1 + j) * d + k];
                }
            }
        }

        let mut blocks = Vec::with_capacity(idx.blocks.len());
        for blk in &idx.blocks {
            let (bc, x_next) = self.block_forward(blk, x, batch);
            blocks.push(bc);
            x = x_next;
        }
        let (out, norm) = layer_norm(&x, &p[idx.norm.g.clone()], &p[idx.norm.b.clone()]);
        Ok((
            Encoded {
                batch,
                tokens: t,
                dim: d,
                data: out,
            },
            Cache {
                batch,
                input: input.to_vec(),
                blocks,
                norm,
            },
        ))
    }

    fn block_forward(&self, blk: &Block, mut x: Vec<T>, batch: usize) -> (BlockCache<T>, Vec<T>) {
        let p = &self.params;
        let cfg = &self.encoder;
        let (t, d, hidden) = (cfg.tokens(), cfg.embed_dim, cfg.hidden());
        let heads = cfg.heads;
        let dh = d / heads;
        let bt = batch * t;
        let scale = T::of(1.0 / (dh as f64).sqrt());

        let (h1, norm1) = layer_norm(&x, &p[blk.norm1.g.clone()], &p[blk.norm1.b.clone()]);
        let mut qkv = vec![T::zero(); bt * 3 * d];
        gemm(
            T::one(),
            &h1,
            View::dense(bt, d),
            &p[blk.qkv.w.clone()],
            View::dense(d, 3 * d),
            T::zero(),
            &mut qkv,
            View::dense(bt, 3 * d),
        );
        add_bias(&mut qkv, &p[blk.qkv.b.clone()]);

        let mut probs = vec![T::zero(); batch * heads * t * t];
        let mut ctx = vec![T::zero(); bt * d];
        for b in 0..batch {
            for h in 0..heads {
                let off = (b * heads + h) * t * t;
                let q = View::block(3 * d, b * t, h * dh, t, dh);
                let k = View::block(3 * d, b * t, d + h * dh, t, dh);
                let v = View::block(3 * d, b * t, 2 * d + h * dh, t, dh);
                gemm(scale, &qkv, q, &qkv, k.t(), T::zero(), &mut probs, View::dense(t, t).at(off));
                softmax_rows(&mut probs[off..off + t * t], t);
                gemm(
                    T::one(),
                    &probs,
                    View::dense(t, t).at(off),
                    &qkv,
                    v,
                    T::zero(),
                    &mut ctx,
                    View::block(d, b * t, h * dh, t, dh),
                );
            }
        }
        let mut attn = vec![T::zero(); bt * d];
        gemm(
            T::one(),
            &ctx,
            View::dense(bt, d),
            &p[blk.proj.w.clone()],
            View::dense(d, d),
            T::zero(),
            &mut attn,
            View::dense(bt, d),
        );
        add_bias(&mut attn, &p[blk.proj.b.clone()]);
        for (xv, a) in x.iter_mut().zip(&attn) {
            *xv += *a;
        }

        let (h2, norm2) = layer_norm(&x, &p[blk.norm2.g.clone()], &p[blk.norm2.b.clone()]);
        let mut pre = vec![T::zero(); bt * hidden];
        gemm(
            T::one(),
            &h2,
            View::dense(bt, d),
            &p[blk.fc1.w.clone()],
            View::dense(d, hidden),
            T::zero(),
            &mut pre,
            View::dense(bt, hidden),
        );
        add_bias(&mut pre, &p[blk.fc1.b.clone()]);
        let act: Vec<T> = pre.iter().map(|&u| gelu(u)).collect();
        let mut mlp = vec![T::zero(); bt * d];
        gemm(
            T::one(),
            &act,
            View::dense(bt, hidden),
            &p[blk.fc2.w.clone()],
            View::dense(hidden, d),
            T::zero(),
            &mut mlp,
            View::dense(bt, d),
        );
        add_bias(&mut mlp, &p[blk.fc2.b.clone()]);
        for (xv, m) in x.iter_mut().zip(&mlp) {
            *xv += *m;
        }
        (
            BlockCache {
                norm1,
                h1,
                qkv,
                probs,
                ctx,
                norm2,
                h2,
                pre,
                act,
            },
            x,
        )
    }

    /// Accumulates parameter gradients of a scalar loss into `grads` given
    /// its gradient with respect to the encoder output.
    pub fn backward(&self, cache: &Cache<T>, d_out: &[T], grads: &mut [T]) {
        assert_eq!(grads.len(), self.params.len(), "gradient buffer");
        let cfg = &self.encoder;
        let p = &self.params;
        let idx = &self.idx;
        let batch = cache.batch;
        let (n, t, d) = (cfg.patches(), cfg.tokens(), cfg.embed_dim);
        assert_eq!(d_out.len(), batch * t * d, "output gradient");

        let mut dx = vec![T::zero(); batch * t * d];
        {
            let (dg, db) = two_mut(grads, &idx.norm.g, &idx.norm.b);
            layer_norm_backward(&cache.norm, &p[idx.norm.g.clone()], d_out, &mut dx, dg, db);
        }
        for (blk, bc) in idx.blocks.iter().zip(&cache.blocks).rev() {
            self.block_backward(blk, bc, &mut dx, batch, grads);
        }

        let mut dpe = vec![T::zero(); batch * n * d];
        for b in 0..batch {
            for k in 0..d {
                let g = dx[b * t * d + k];
                grads[idx.cls.start + k] += g;
                grads[idx.pos.start + k] += g;
            }
            for j in 0..n {
                for k in 0..d {
                    let g = dx[(b * t + 1 + j) * d + k];
                    grads[idx.pos.start + (1 + j) * d + k] += g;
                    grads[idx.patch.b.start + k] += g;
                    dpe[(b * n + j) * d + k] = g;
                }
            }
        }
        gemm(
            T::one(),
            &cache.input,
            View::dense(batch * n, cfg.patch_dim()).t(),
            &dpe,
            View::dense(batch * n, d),
            T::one(),
            &mut grads[idx.patch.w.clone()],
            View::dense(cfg.patch_dim(), d),
        );
    }

    fn linear_backward(&self, lin: &Linear, x: &[T], dy: &[T], rows: usize, grads: &mut [T]) -> Vec<T> {
        gemm(
            T::one(),
            x,
            View::dense(rows, lin.inp).t(),
            dy,
            View::dense(rows, lin.out),
            T::one(),
            &mut grads[lin.w.clone()],
            View::dense(lin.inp, lin.out),
        );
        add_colsum(&mut grads[lin.b.clone()], dy);
        let mut dx = vec![T::zero(); rows * lin.inp];
        gemm(
            T::one(),
            dy,
            View::dense(rows, lin.out),
            &self.params[lin.w.clone()],
            View::dense(lin.inp, lin.out).t(),
            T::zero(),
            &mut dx,
            View::dense(rows, lin.inp),
        );
        dx
    }

    /// `dx` holds the gradient at the block output on entry and at its input
    /// on return.
    fn block_backward(&self, blk: &Block, bc: &BlockCache<T>, dx: &mut [T], batch: usize, grads: &mut [T]) {
        let p = &self.params;
        let cfg = &self.encoder;
        let (t, d) = (cfg.tokens(), cfg.embed_dim);
        let heads = cfg.heads;
        let dh = d / heads;
        let bt = batch * t;
        let scale = T::of(1.0 / (dh as f64).sqrt());

        let dact = self.linear_backward(&blk.fc2, &bc.act, dx, bt, grads);
        let dpre: Vec<T> = dact.iter().zip(&bc.pre).map(|(&g, &u)| g * gelu_grad(u)).collect();
        let dh2 = self.linear_backward(&blk.fc1, &bc.h2, &dpre, bt, grads);
        {
            let (dg, db) = two_mut(grads, &blk.norm2.g, &blk.norm2.b);
            layer_norm_backward(&bc.norm2, &p[blk.norm2.g.clone()], &dh2, dx, dg, db);
        }

        let dctx = self.linear_backward(&blk.proj, &bc.ctx, dx, bt, grads);
        let mut dqkv = vec![T::zero(); bt * 3 * d];
        let mut dp = vec![T::zero(); t * t];
        for b in 0..batch {
            for h in 0..heads {
                let off = (b * heads + h) * t * t;
                let q = View::block(3 * d, b * t, h * dh, t, dh);
                let k = View::block(3 * d, b * t, d + h * dh, t, dh);
                let v = View::block(3 * d, b * t, 2 * d + h * dh, t, dh);
                let dc = View::block(d, b * t, h * dh, t, dh);
                gemm(T::one(), &dctx, dc, &bc.qkv, v.t(), T::zero(), &mut dp, View::dense(t, t));
                gemm(
                    T::one(),
                    &bc.probs,
                    View::dense(t, t).at(off).t(),
                    &dctx,
                    dc,
                    T::zero(),
                    &mut dqkv,
                    v,
                );
                let probs = &bc.probs[off..off + t * t];
                for (prow, dprow) in probs.chunks_exact(t).zip(dp.chunks_exact_mut(t)) {
                    let dot: T = prow.iter().zip(dprow.iter()).map(|(&a, &b)| a * b).sum();
                    for (g, &pv) in dprow.iter_mut().zip(prow) {
                        *g = pv * (*g - dot);
                    }
                }
                gemm(scale, &dp, View::dense(t, t), &bc.qkv, k, T::zero(), &mut dqkv, q);
                gemm(scale, &dp, View::dense(t, t).t(), &bc.qkv, q, T::zero(), &mut dqkv, k);
            }
        }
        let dh1 = self.linear_backward(&blk.qkv, &bc.h1, &dqkv, bt, grads);
        let (dg, db) = two_mut(grads, &blk.norm1.g, &blk.norm1.b);
        layer_norm_backward(&bc.norm1, &p[blk.norm1.g.clone()], &dh1, dx, dg, db);
    }

    fn head(&self, head: Head) -> Result<&Linear, ModelError> {
        self.idx.heads[head as usize].as_ref().ok_or(ModelError::MissingHead(head))
    }

    /// Logits of `head` for `rows` feature vectors laid end to end.
    pub fn head_forward(&self, head: Head, features: &[T]) -> Result<Vec<T>, ModelError> {
        let lin = self.head(head)?;
        if !features.len().is_multiple_of(lin.inp) {
            return Err(ModelError::ShapeMismatch {
                expected: lin.inp,
                got: features.len(),
            });
        }
        let rows = features.len() / lin.inp;
        let mut out = vec![T::zero(); rows * lin.out];
        gemm(
            T::one(),
            features,
            View::dense(rows, lin.inp),
            &self.params[lin.w.clone()],
            View::dense(lin.inp, lin.out),
            T::zero(),
            &mut out,
            View::dense(rows, lin.out),
        );
        add_bias(&mut out, &self.params[lin.b.clone()]);
        Ok(out)
    }

    /// Accumulates head parameter gradients and returns the gradient with
    /// respect to `features`.
    pub fn head_backward(
        &self,
        head: Head,
        features: &[T],
        d_logits: &[T],
        grads: &mut [T],
    ) -> Result<Vec<T>, ModelError> {
        let lin = self.head(head)?.clone();
        let rows = features.len() / lin.inp;
        Ok(self.linear_backward(&lin, features, d_logits, rows, grads))
    }

    /// Regression outputs in pK units, one per image.
    pub fn predict(&self, input: &[T], batch: usize) -> Result<Vec<f64>, ModelError> {
        let enc = self.forward(input, batch)?;
        let cls: Vec<T> = (0..batch).flat_map(|b| enc.cls(b).to_vec()).collect();
        let raw = self.head_forward(Head::Regression, &cls)?;
        Ok(raw
            .iter()
            .map(|v| v.f64() * self.target_scale.std + self.target_scale.mean)
            .collect())
    }

    /// Same model in another precision.
    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            encoder: self.encoder.clone(),
            heads: self.heads,
            layout: self.layout.clone(),
            idx: self.idx.clone(),
            params: self.params.iter().map(|v| U::of(v.f64())).collect(),
            target_scale: self.target_scale,
        }
    }
}

fn two_mut<'a, T>(buf: &'a mut [T], a: &Range<usize>, b: &Range<usize>) -> (&'a mut [T], &'a mut [T]) {
    assert!(a.end <= b.start, "ranges in order");
    let (lo, hi) = buf.split_at_mut(b.start);
    (&mut lo[a.clone()], &mut hi[..b.len()])
}
