//! Trajectory-conditioned perceptual scorer.
//!
//! Scores a (motion, head-trajectory) pair for plausibility in (0, 1).
//! Architecture, miniaturized but shape-preserving: the skeleton stream is
//! embedded keypoint-wise (one token per frame and joint, from the 7-D
//! quaternion+position descriptor), the head stream frame-wise (one token per
//! frame, from the canonicalized 9-D condition features); a single-head
//! cross-attention layer fuses the head stream into the body tokens; then B
//! blocks of per-token MLP → spatial attention (over joints, within each
//! frame) → temporal attention (over frames, within each joint), all with
//! residual connections; finally mean-pooling, an MLP head, and a sigmoid.
//!
//! Every layer's backward pass is hand-derived and checked against central
//! finite differences in the tests. Attention is softmax(QKᵀ/√d)V with
//! learned linear projections and an output projection.

use super::joint::{
    joint_rewards, visual_reward, RewardBreakdown, RewardWeights, SkeletonFeatures,
    SKELETON_FEATURE_DIM,
};
use crate::error::{Error, Result};
use crate::kinematics::{
    invariant_condition, HeadTrajectory, MotionSequence, Skeleton, CONDITION_DIM,
};
use crate::numerics::{Linear, LinearGrad, Mlp, MlpCache, MlpGradients, Rng, Tensor};

/// Default latent width d of the scorer.
pub const SCORER_LATENT: usize = 32;
/// Default number of encoder blocks B.
pub const SCORER_BLOCKS: usize = 2;

/// Single-head scaled-dot-product attention, y_i = W_o Σ_j softmax_j(Q_i·K_j/√d) V_j,
/// with learned query/key/value/output projections.
#[derive(Debug, Clone)]
pub(crate) struct AttentionLayer {
    wq: Linear,
    wk: Linear,
    wv: Linear,
    wo: Linear,
    dim: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct AttentionCache {
    q_in: Vec<Vec<f64>>,
    k_in: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    /// Softmax rows, `p[i][j]` = attention of query i on key j.
    p: Vec<Vec<f64>>,
    /// Pre-output-projection context vectors.
    ctx: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct AttentionGrad {
    wq: LinearGrad,
    wk: LinearGrad,
    wv: LinearGrad,
    wo: LinearGrad,
}

impl AttentionGrad {
    fn zeros_like(layer: &AttentionLayer) -> Self {
        AttentionGrad {
            wq: LinearGrad::zeros_like(&layer.wq),
            wk: LinearGrad::zeros_like(&layer.wk),
            wv: LinearGrad::zeros_like(&layer.wv),
            wo: LinearGrad::zeros_like(&layer.wo),
        }
    }

    fn tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.wq.weight,
            &self.wq.bias,
            &self.wk.weight,
            &self.wk.bias,
            &self.wv.weight,
            &self.wv.bias,
            &self.wo.weight,
            &self.wo.bias,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.wq.weight,
            &mut self.wq.bias,
            &mut self.wk.weight,
            &mut self.wk.bias,
            &mut self.wv.weight,
            &mut self.wv.bias,
            &mut self.wo.weight,
            &mut self.wo.bias,
        ]
    }
}

impl AttentionLayer {
    fn new(dim: usize, rng: &mut Rng) -> Self {
        AttentionLayer {
            wq: Linear::xavier(dim, dim, rng),
            wk: Linear::xavier(dim, dim, rng),
            wv: Linear::xavier(dim, dim, rng),
            wo: Linear::xavier(dim, dim, rng),
            dim,
        }
    }

    fn zeros(dim: usize) -> Self {
        AttentionLayer {
            wq: Linear::zeros(dim, dim),
            wk: Linear::zeros(dim, dim),
            wv: Linear::zeros(dim, dim),
            wo: Linear::zeros(dim, dim),
            dim,
        }
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![
            &self.wq.weight,
            &self.wq.bias,
            &self.wk.weight,
            &self.wk.bias,
            &self.wv.weight,
            &self.wv.bias,
            &self.wo.weight,
            &self.wo.bias,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.wq.weight,
            &mut self.wq.bias,
            &mut self.wk.weight,
            &mut self.wk.bias,
            &mut self.wv.weight,
            &mut self.wv.bias,
            &mut self.wo.weight,
            &mut self.wo.bias,
        ]
    }

    /// Attends `q_in` tokens over `k_in` tokens; returns per-query outputs
    /// and the cache for the backward pass.
    fn forward(&self, q_in: &[Vec<f64>], k_in: &[Vec<f64>]) -> (Vec<Vec<f64>>, AttentionCache) {
        let d = self.dim;
        let scale = 1.0 / (d as f64).sqrt();
        let project = |lin: &Linear, xs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            xs.iter()
                .map(|x| {
                    let mut y = vec![0.0; d];
                    lin.apply(x, &mut y);
                    y
                })
                .collect()
        };
        let q = project(&self.wq, q_in);
        let k = project(&self.wk, k_in);
        let v = project(&self.wv, k_in);
        let mut p = Vec::with_capacity(q.len());
        let mut ctx = Vec::with_capacity(q.len());
        let mut out = Vec::with_capacity(q.len());
        for qi in &q {
            let logits: Vec<f64> = k
                .iter()
                .map(|kj| scale * qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let probs: Vec<f64> = exps.iter().map(|e| e / z).collect();
            let mut c = vec![0.0; d];
            for (pj, vj) in probs.iter().zip(&v) {
                for (cd, vd) in c.iter_mut().zip(vj) {
                    *cd += pj * vd;
                }
            }
            let mut o = vec![0.0; d];
            self.wo.apply(&c, &mut o);
            p.push(probs);
            ctx.push(c);
            out.push(o);
        }
        (
            out,
            AttentionCache {
                q_in: q_in.to_vec(),
                k_in: k_in.to_vec(),
                q,
                k,
                v,
                p,
                ctx,
            },
        )
    }

    /// Backpropagates per-query output gradients; accumulates parameter
    /// gradients and returns (d q_in, d k_in). Self-attention callers add
    /// both into the same token gradients.
    fn backward(
        &self,
        cache: &AttentionCache,
        d_out: &[Vec<f64>],
        grads: &mut AttentionGrad,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let d = self.dim;
        let scale = 1.0 / (d as f64).sqrt();
        let n_q = cache.q.len();
        let n_k = cache.k.len();

        // Output projection, then attention-weighted values.
        let mut d_ctx = vec![vec![0.0; d]; n_q];
        let mut d_v = vec![vec![0.0; d]; n_k];
        let mut d_a = vec![vec![0.0; n_k]; n_q];
        for i in 0..n_q {
            self.wo
                .backward(&cache.ctx[i], &d_out[i], &mut grads.wo, &mut d_ctx[i]);
            // dP_ij = <d_ctx_i, V_j>; dV_j += P_ij * d_ctx_i.
            let mut d_p = vec![0.0; n_k];
            for j in 0..n_k {
                d_p[j] = d_ctx[i].iter().zip(&cache.v[j]).map(|(a, b)| a * b).sum();
                for (dv, dc) in d_v[j].iter_mut().zip(&d_ctx[i]) {
                    *dv += cache.p[i][j] * dc;
                }
            }
            // Softmax backward per row: dA_ij = P_ij (dP_ij − Σ_l dP_il P_il).
            let dot: f64 = d_p.iter().zip(&cache.p[i]).map(|(a, b)| a * b).sum();
            for j in 0..n_k {
                d_a[i][j] = cache.p[i][j] * (d_p[j] - dot);
            }
        }

        // Logit gradients into Q and K.
        let mut d_q = vec![vec![0.0; d]; n_q];
        let mut d_k = vec![vec![0.0; d]; n_k];
        for i in 0..n_q {
            for j in 0..n_k {
                let g = scale * d_a[i][j];
                for (dq, kj) in d_q[i].iter_mut().zip(&cache.k[j]) {
                    *dq += g * kj;
                }
                for (dk, qi) in d_k[j].iter_mut().zip(&cache.q[i]) {
                    *dk += g * qi;
                }
            }
        }

        // Projections back to the token inputs.
        let mut d_q_in = vec![vec![0.0; d]; n_q];
        for i in 0..n_q {
            self.wq
                .backward(&cache.q_in[i], &d_q[i], &mut grads.wq, &mut d_q_in[i]);
        }
        let mut d_k_in = vec![vec![0.0; d]; n_k];
        let mut tmp = vec![0.0; d];
        for j in 0..n_k {
            self.wk
                .backward(&cache.k_in[j], &d_k[j], &mut grads.wk, &mut d_k_in[j]);
            self.wv
                .backward(&cache.k_in[j], &d_v[j], &mut grads.wv, &mut tmp);
            for (a, b) in d_k_in[j].iter_mut().zip(&tmp) {
                *a += b;
            }
        }
        (d_q_in, d_k_in)
    }
}

#[derive(Debug, Clone)]
struct ScorerBlock {
    mlp: Mlp,
    spatial: AttentionLayer,
    temporal: AttentionLayer,
}

#[derive(Debug, Clone)]
struct BlockCache {
    mlp: Vec<MlpCache>,
    spatial: Vec<AttentionCache>,
    temporal: Vec<AttentionCache>,
}

#[derive(Debug, Clone)]
struct BlockGrad {
    mlp: MlpGradients,
    spatial: AttentionGrad,
    temporal: AttentionGrad,
}

/// The perceptual scorer network. See the module docs for the layout.
#[derive(Debug, Clone)]
pub struct PerceptualScorer {
    latent: usize,
    body_embed: Linear,
    head_embed: Linear,
    cross: AttentionLayer,
    blocks: Vec<ScorerBlock>,
    score_head: Mlp,
}

/// Intermediate activations of one scored pair, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ScorerCache {
    frames: usize,
    joints: usize,
    body_inputs: Vec<Vec<f64>>,
    head_inputs: Vec<Vec<f64>>,
    cross: AttentionCache,
    blocks: Vec<BlockCache>,
    head_cache: MlpCache,
    score: f64,
}

impl ScorerCache {
    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Parameter gradients in the same order as [`PerceptualScorer::params`].
#[derive(Debug, Clone)]
pub struct ScorerGradients {
    body_embed: LinearGrad,
    head_embed: LinearGrad,
    cross: AttentionGrad,
    blocks: Vec<BlockGrad>,
    score_head: MlpGradients,
}

impl ScorerGradients {
    pub fn zeros_like(scorer: &PerceptualScorer) -> Self {
        ScorerGradients {
            body_embed: LinearGrad::zeros_like(&scorer.body_embed),
            head_embed: LinearGrad::zeros_like(&scorer.head_embed),
            cross: AttentionGrad::zeros_like(&scorer.cross),
            blocks: scorer
                .blocks
                .iter()
                .map(|b| BlockGrad {
                    mlp: MlpGradients::zeros_like(&b.mlp),
                    spatial: AttentionGrad::zeros_like(&b.spatial),
                    temporal: AttentionGrad::zeros_like(&b.temporal),
                })
                .collect(),
            score_head: MlpGradients::zeros_like(&scorer.score_head),
        }
    }

    /// Gradient tensors in the same order as [`PerceptualScorer::params`].
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![
            &self.body_embed.weight,
            &self.body_embed.bias,
            &self.head_embed.weight,
            &self.head_embed.bias,
        ];
        out.extend(self.cross.tensors());
        for b in &self.blocks {
            out.extend(b.mlp.tensors());
            out.extend(b.spatial.tensors());
            out.extend(b.temporal.tensors());
        }
        out.extend(self.score_head.tensors());
        out
    }

    pub fn scale(&mut self, c: f64) {
        let scale_tensors = |ts: Vec<&mut Tensor>| {
            for t in ts {
                for v in t.data_mut() {
                    *v *= c;
                }
            }
        };
        scale_tensors(vec![
            &mut self.body_embed.weight,
            &mut self.body_embed.bias,
            &mut self.head_embed.weight,
            &mut self.head_embed.bias,
        ]);
        scale_tensors(self.cross.tensors_mut());
        for b in &mut self.blocks {
            b.mlp.scale(c);
            scale_tensors(b.spatial.tensors_mut());
            scale_tensors(b.temporal.tensors_mut());
        }
        self.score_head.scale(c);
    }

    pub fn norm_l2(&self) -> f64 {
        self.tensors()
            .iter()
            .map(|t| t.data().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl PerceptualScorer {
    /// Fresh scorer with latent width `latent` and `n_blocks` encoder blocks.
    pub fn new(latent: usize, n_blocks: usize, rng: &mut Rng) -> Result<PerceptualScorer> {
        if latent == 0 || n_blocks == 0 {
            return Err(Error::invalid(
                "PerceptualScorer::new",
                format!("latent and blocks must be >= 1, got d={latent}, B={n_blocks}"),
            ));
        }
        let mut blocks = Vec::with_capacity(n_blocks);
        let body_embed = Linear::xavier(SKELETON_FEATURE_DIM, latent, rng);
        let head_embed = Linear::xavier(CONDITION_DIM, latent, rng);
        let cross = AttentionLayer::new(latent, rng);
        for _ in 0..n_blocks {
            blocks.push(ScorerBlock {
                mlp: Mlp::new(&[latent, 2 * latent, latent], rng)?,
                spatial: AttentionLayer::new(latent, rng),
                temporal: AttentionLayer::new(latent, rng),
            });
        }
        let score_head = Mlp::new(&[latent, latent, 1], rng)?;
        Ok(PerceptualScorer {
            latent,
            body_embed,
            head_embed,
            cross,
            blocks,
            score_head,
        })
    }

    /// All-zero-weight scorer; scores exactly 0.5 for every input.
    pub fn zeros(latent: usize, n_blocks: usize) -> Result<PerceptualScorer> {
        if latent == 0 || n_blocks == 0 {
            return Err(Error::invalid(
                "PerceptualScorer::zeros",
                format!("latent and blocks must be >= 1, got d={latent}, B={n_blocks}"),
            ));
        }
        Ok(PerceptualScorer {
            latent,
            body_embed: Linear::zeros(SKELETON_FEATURE_DIM, latent),
            head_embed: Linear::zeros(CONDITION_DIM, latent),
            cross: AttentionLayer::zeros(latent),
            blocks: (0..n_blocks)
                .map(|_| {
                    Ok(ScorerBlock {
                        mlp: Mlp::zeros(&[latent, 2 * latent, latent])?,
                        spatial: AttentionLayer::zeros(latent),
                        temporal: AttentionLayer::zeros(latent),
                    })
                })
                .collect::<Result<_>>()?,
            score_head: Mlp::zeros(&[latent, latent, 1])?,
        })
    }

    pub fn latent(&self) -> usize {
        self.latent
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Parameters in a fixed order: body embed, head embed, cross-attention
    /// (Q, K, V, O), then per block (MLP layers, spatial attention, temporal
    /// attention), then the score head — (weight, bias) per layer throughout.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = vec![
            &self.body_embed.weight,
            &self.body_embed.bias,
            &self.head_embed.weight,
            &self.head_embed.bias,
        ];
        out.extend(self.cross.params());
        for b in &self.blocks {
            out.extend(b.mlp.params());
            out.extend(b.spatial.params());
            out.extend(b.temporal.params());
        }
        out.extend(self.score_head.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![
            &mut self.body_embed.weight,
            &mut self.body_embed.bias,
            &mut self.head_embed.weight,
            &mut self.head_embed.bias,
        ];
        out.extend(self.cross.params_mut());
        for b in &mut self.blocks {
            out.extend(b.mlp.params_mut());
            out.extend(b.spatial.params_mut());
            out.extend(b.temporal.params_mut());
        }
        out.extend(self.score_head.params_mut());
        out
    }

    pub fn n_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for t in self.params() {
            out.extend_from_slice(t.data());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::dimension(
                "PerceptualScorer::set_flat_params",
                self.n_params(),
                flat.len(),
            ));
        }
        let mut offset = 0;
        for t in self.params_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Plausibility score in (0, 1) for a (skeleton features, head) pair.
    pub fn forward(&self, feats: &SkeletonFeatures, head: &HeadTrajectory) -> Result<f64> {
        Ok(self.forward_cached(feats, head)?.score)
    }

    /// Forward pass keeping every intermediate needed by [`Self::backward`].
    pub fn forward_cached(
        &self,
        feats: &SkeletonFeatures,
        head: &HeadTrajectory,
    ) -> Result<ScorerCache> {
        let frames = feats.frames();
        let joints = feats.joints();
        if frames == 0 || joints == 0 {
            return Err(Error::invalid(
                "PerceptualScorer::forward",
                "skeleton features must have at least one frame and joint",
            ));
        }
        if head.frames() != frames {
            return Err(Error::dimension(
                "PerceptualScorer::forward frames",
                frames,
                head.frames(),
            ));
        }
        let d = self.latent;

        let body_inputs: Vec<Vec<f64>> = (0..frames)
            .flat_map(|t| feats.frame(t).iter().map(|f| f.to_vec()))
            .collect();
        let cond = invariant_condition(head);
        let head_inputs: Vec<Vec<f64>> = (0..frames).map(|t| cond.frame(t).to_vec()).collect();

        // Embeddings: keypoint-wise for the body, frame-wise for the head.
        let mut x: Vec<Vec<f64>> = body_inputs
            .iter()
            .map(|f| {
                let mut y = vec![0.0; d];
                self.body_embed.apply(f, &mut y);
                y
            })
            .collect();
        let h: Vec<Vec<f64>> = head_inputs
            .iter()
            .map(|c| {
                let mut y = vec![0.0; d];
                self.head_embed.apply(c, &mut y);
                y
            })
            .collect();

        // Cross-attention fusion: body tokens query the head stream.
        let (cross_out, cross_cache) = self.cross.forward(&x, &h);
        for (xi, ci) in x.iter_mut().zip(&cross_out) {
            for (a, b) in xi.iter_mut().zip(ci) {
                *a += b;
            }
        }

        let mut block_caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            // Per-token MLP.
            let mut mlp_caches = Vec::with_capacity(x.len());
            for xi in x.iter_mut() {
                let cache = block.mlp.forward_cached(xi)?;
                for (a, b) in xi.iter_mut().zip(cache.output()) {
                    *a += b;
                }
                mlp_caches.push(cache);
            }
            // Spatial attention: joints attend within their frame.
            let mut sa_caches = Vec::with_capacity(frames);
            for t in 0..frames {
                let slice = &x[t * joints..(t + 1) * joints];
                let tokens: Vec<Vec<f64>> = slice.to_vec();
                let (out, cache) = block.spatial.forward(&tokens, &tokens);
                for (j, o) in out.iter().enumerate() {
                    for (a, b) in x[t * joints + j].iter_mut().zip(o) {
                        *a += b;
                    }
                }
                sa_caches.push(cache);
            }
            // Temporal attention: frames attend within their joint.
            let mut ta_caches = Vec::with_capacity(joints);
            for j in 0..joints {
                let tokens: Vec<Vec<f64>> = (0..frames).map(|t| x[t * joints + j].clone()).collect();
                let (out, cache) = block.temporal.forward(&tokens, &tokens);
                for (t, o) in out.iter().enumerate() {
                    for (a, b) in x[t * joints + j].iter_mut().zip(o) {
                        *a += b;
                    }
                }
                ta_caches.push(cache);
            }
            block_caches.push(BlockCache {
                mlp: mlp_caches,
                spatial: sa_caches,
                temporal: ta_caches,
            });
        }

        // Mean-pool all tokens, decode to a logit, squash.
        let n_tokens = x.len() as f64;
        let mut pooled = vec![0.0; d];
        for xi in &x {
            for (p, v) in pooled.iter_mut().zip(xi) {
                *p += v / n_tokens;
            }
        }
        let head_cache = self.score_head.forward_cached(&pooled)?;
        let score = sigmoid(head_cache.output()[0]);

        Ok(ScorerCache {
            frames,
            joints,
            body_inputs,
            head_inputs,
            cross: cross_cache,
            blocks: block_caches,
            head_cache,
            score,
        })
    }

    /// Backpropagates dL/d(score) through the cached forward pass,
    /// accumulating parameter gradients.
    pub fn backward_accumulate(
        &self,
        cache: &ScorerCache,
        d_score: f64,
        grads: &mut ScorerGradients,
    ) -> Result<()> {
        let frames = cache.frames;
        let joints = cache.joints;
        let n_tokens = frames * joints;

        // Sigmoid and score head.
        let s = cache.score;
        let d_logit = d_score * s * (1.0 - s);
        let d_pooled =
            self.score_head
                .backward_accumulate(&cache.head_cache, &[d_logit], &mut grads.score_head)?;
        let mut dx: Vec<Vec<f64>> =
            vec![d_pooled.iter().map(|g| g / n_tokens as f64).collect(); n_tokens];

        // Blocks in reverse, sublayers in reverse (TA, SA, MLP); every
        // sublayer carries a residual identity path, so its input gradient
        // ADDS to the gradient already flowing past it.
        for b in (0..self.blocks.len()).rev() {
            let block = &self.blocks[b];
            let bc = &cache.blocks[b];
            let bg = &mut grads.blocks[b];

            for j in 0..joints {
                let d_out: Vec<Vec<f64>> =
                    (0..frames).map(|t| dx[t * joints + j].clone()).collect();
                let (dq, dk) = block.temporal.backward(&bc.temporal[j], &d_out, &mut bg.temporal);
                for t in 0..frames {
                    for ((a, q), k) in dx[t * joints + j].iter_mut().zip(&dq[t]).zip(&dk[t]) {
                        *a += q + k;
                    }
                }
            }
            for t in 0..frames {
                let d_out: Vec<Vec<f64>> =
                    (0..joints).map(|j| dx[t * joints + j].clone()).collect();
                let (dq, dk) = block.spatial.backward(&bc.spatial[t], &d_out, &mut bg.spatial);
                for j in 0..joints {
                    for ((a, q), k) in dx[t * joints + j].iter_mut().zip(&dq[j]).zip(&dk[j]) {
                        *a += q + k;
                    }
                }
            }
            for i in 0..n_tokens {
                let d_in = block.mlp.backward_accumulate(&bc.mlp[i], &dx[i], &mut bg.mlp)?;
                for (a, g) in dx[i].iter_mut().zip(&d_in) {
                    *a += g;
                }
            }
        }

        // Cross-attention fusion: body tokens were queries (with residual),
        // head tokens keys/values (no residual path of their own).
        let (dq, dk) = self.cross.backward(&cache.cross, &dx, &mut grads.cross);
        for (xi, q) in dx.iter_mut().zip(&dq) {
            for (a, g) in xi.iter_mut().zip(q) {
                *a += g;
            }
        }

        // Embeddings.
        let mut scratch_body = vec![0.0; SKELETON_FEATURE_DIM];
        for (input, g) in cache.body_inputs.iter().zip(&dx) {
            self.body_embed
                .backward(input, g, &mut grads.body_embed, &mut scratch_body);
        }
        let mut scratch_head = vec![0.0; CONDITION_DIM];
        for (input, g) in cache.head_inputs.iter().zip(&dk) {
            self.head_embed
                .backward(input, g, &mut grads.head_embed, &mut scratch_head);
        }
        Ok(())
    }

    /// Convenience wrapper: gradients of `d_score · score` from scratch.
    pub fn backward(&self, cache: &ScorerCache, d_score: f64) -> Result<ScorerGradients> {
        let mut grads = ScorerGradients::zeros_like(self);
        self.backward_accumulate(cache, d_score, &mut grads)?;
        Ok(grads)
    }
}

/// Scores a pair through the scorer (free-function spelling of
/// [`PerceptualScorer::forward`]).
pub fn scorer_forward(
    scorer: &PerceptualScorer,
    feats: &SkeletonFeatures,
    head: &HeadTrajectory,
) -> Result<f64> {
    scorer.forward(feats, head)
}

/// All five reward components of a predicted motion against its reference,
/// plus their sum.
pub fn total_reward(
    pred: &MotionSequence,
    gt: &MotionSequence,
    head: &HeadTrajectory,
    skel: &Skeleton,
    scorer: &PerceptualScorer,
    w: &RewardWeights,
) -> Result<RewardBreakdown> {
    let (r_rot, r_pos, r_pos_aligned, r_vel) = joint_rewards(pred, gt, skel, w)?;
    let feats = SkeletonFeatures::from_motion(skel, pred)?;
    let s = scorer.forward(&feats, head)?;
    let r_vis = visual_reward(s, w)?;
    Ok(RewardBreakdown {
        r_vis,
        r_rot,
        r_pos,
        r_pos_aligned,
        r_vel,
        r_total: r_vis + r_rot + r_pos + r_pos_aligned + r_vel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{derive_head_trajectory, quat_from_wxyz, Se3};
    use crate::numerics::gradcheck::{central_difference, max_relative_error};
    use crate::synthdata::{generate_walk, GaitParams};
    use nalgebra::Vector3;

    fn random_features(frames: usize, joints: usize, rng: &mut Rng) -> SkeletonFeatures {
        let data = (0..frames)
            .map(|_| {
                (0..joints)
                    .map(|_| {
                        let mut f = [0.0; 7];
                        for v in &mut f {
                            *v = rng.uniform_in(-1.0, 1.0);
                        }
                        f
                    })
                    .collect()
            })
            .collect();
        SkeletonFeatures::from_raw(data).unwrap()
    }

    fn random_head(frames: usize, rng: &mut Rng) -> HeadTrajectory {
        let poses = (0..frames)
            .map(|_| {
                let q = quat_from_wxyz(
                    1.0,
                    rng.uniform_in(-0.2, 0.2),
                    rng.uniform_in(-0.2, 0.2),
                    rng.uniform_in(-0.2, 0.2),
                );
                let t = Vector3::new(
                    rng.uniform_in(-0.5, 0.5),
                    rng.uniform_in(-0.5, 0.5),
                    rng.uniform_in(1.0, 2.0),
                );
                Se3::new(q, t)
            })
            .collect();
        HeadTrajectory { poses }
    }

    #[test]
    fn zero_weight_scorer_scores_exactly_half() {
        let mut rng = Rng::new(3).child("zero");
        let scorer = PerceptualScorer::zeros(8, 2).unwrap();
        for _ in 0..5 {
            let feats = random_features(4, 3, &mut rng);
            let head = random_head(4, &mut rng);
            let s = scorer_forward(&scorer, &feats, &head).unwrap();
            assert_eq!(s, 0.5);
        }
    }

    #[test]
    fn scorer_is_deterministic() {
        let mut rng = Rng::new(4).child("det");
        let scorer = PerceptualScorer::new(8, 2, &mut rng).unwrap();
        let feats = random_features(5, 3, &mut rng);
        let head = random_head(5, &mut rng);
        let a = scorer.forward(&feats, &head).unwrap();
        let b = scorer.forward(&feats, &head).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scores_stay_in_open_unit_interval() {
        let mut rng = Rng::new(5).child("range");
        for trial in 0..10 {
            let scorer = PerceptualScorer::new(6, 2, &mut rng).unwrap();
            let feats = random_features(3, 4, &mut rng);
            let head = random_head(3, &mut rng);
            let s = scorer.forward(&feats, &head).unwrap();
            assert!(s > 0.0 && s < 1.0, "trial {trial}: score {s}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut rng = Rng::new(6).child("shape");
        let scorer = PerceptualScorer::new(4, 1, &mut rng).unwrap();
        let feats = random_features(4, 2, &mut rng);
        let head = random_head(3, &mut rng);
        assert!(scorer.forward(&feats, &head).is_err());
    }

    #[test]
    fn scorer_gradients_match_finite_differences() {
        let mut rng = Rng::new(7).child("fd");
        let scorer = PerceptualScorer::new(3, 2, &mut rng).unwrap();
        let feats = random_features(3, 2, &mut rng);
        let head = random_head(3, &mut rng);

        let cache = scorer.forward_cached(&feats, &head).unwrap();
        let grads = scorer.backward(&cache, 1.0).unwrap();
        let analytic: Vec<f64> = grads
            .tensors()
            .iter()
            .flat_map(|t| t.data().iter().copied())
            .collect();

        let theta = scorer.flat_params();
        let mut probe = scorer.clone();
        let mut f = |p: &[f64]| {
            probe.set_flat_params(p).unwrap();
            probe.forward(&feats, &head).unwrap()
        };
        let numeric = central_difference(&mut f, &theta, 1e-5);
        let err = max_relative_error(&analytic, &numeric, 1e-8);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn total_reward_component_arithmetic() {
        let skel = Skeleton::desk_default();
        let gt = generate_walk(&skel, &GaitParams::default(), 10, 30.0).unwrap();
        let head = derive_head_trajectory(&skel, &gt).unwrap();
        let scorer = PerceptualScorer::zeros(8, 2).unwrap();

        // Perfect prediction, neutral scorer: r_vis = e^{0.5}, joints all 1.
        let w = RewardWeights::default();
        let b = total_reward(&gt, &gt, &head, &skel, &scorer, &w).unwrap();
        assert!((b.r_vis - 0.5f64.exp()).abs() < 1e-12);
        assert!((b.r_total - (0.5f64.exp() + 4.0)).abs() < 1e-9);
        assert!((b.r_total - 5.648_721_270_700_128).abs() < 1e-9);

        // All-zero weights: every component collapses to 1.
        let w0 = RewardWeights {
            omega_vis: 0.0,
            omega_rot: 0.0,
            omega_pos: 0.0,
            omega_pos_aligned: 0.0,
            omega_vel: 0.0,
        };
        let b0 = total_reward(&gt, &gt, &head, &skel, &scorer, &w0).unwrap();
        assert!((b0.r_total - 5.0).abs() < 1e-12);
        assert_eq!(b0.components().len(), RewardBreakdown::COMPONENTS);

        // Growing one error term moves only its component.
        let shift = Vector3::new(0.2, 0.0, 0.0);
        let root = gt
            .root()
            .iter()
            .map(|se3| Se3::new(se3.rotation, se3.translation + shift))
            .collect();
        let pred = MotionSequence::new(gt.fps(), root, gt.local_rot().to_vec()).unwrap();
        let bp = total_reward(&pred, &gt, &head, &skel, &scorer, &w).unwrap();
        assert!(bp.r_pos < b.r_pos - 1e-6);
        assert!((bp.r_rot - b.r_rot).abs() < 1e-12);
        assert!((bp.r_vel - b.r_vel).abs() < 1e-12);
    }
}
