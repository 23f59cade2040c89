//! The x₀-predicting conditional denoiser and its pre-training loss.

use crate::error::{Error, Result};
use crate::numerics::{AdamState, Mlp, MlpCache, MlpGradients, Rng};

use super::schedule::NoiseSchedule;
use super::vector::{motion_dim, MotionVector};

/// Width of the sinusoidal timestep embedding fed to the denoiser.
pub const TIMESTEP_EMBED_DIM: usize = 16;
/// Default hidden widths of the denoiser MLP.
pub const DEFAULT_DENOISER_HIDDEN: [usize; 2] = [256, 256];

/// Sinusoidal embedding of an integer timestep: eight (sin, cos) pairs at
/// geometrically spaced frequencies 10000^(−i/8), i = 0..8.
pub fn timestep_embedding(t: usize) -> [f64; TIMESTEP_EMBED_DIM] {
    let mut out = [0.0; TIMESTEP_EMBED_DIM];
    let pairs = TIMESTEP_EMBED_DIM / 2;
    for i in 0..pairs {
        let freq = 10000f64.powf(-(i as f64) / pairs as f64);
        let phase = t as f64 * freq;
        out[2 * i] = phase.sin();
        out[2 * i + 1] = phase.cos();
    }
    out
}

/// Per-dimension affine normalization of condition features, applied inside
/// the denoiser before the features reach the network.
///
/// Canonicalized head-trajectory features carry large shared offsets with
/// informative variation that is only a few percent of the offset scale;
/// fed raw, that variation is invisible next to the unit-scale noisy motion
/// input and the conditioning is effectively ignored. Standardizing each
/// dimension against corpus statistics puts the informative variation at
/// unit scale, which is what makes the conditioning learnable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl ConditionStats {
    /// Floor for per-dimension standard deviations: dimensions that are
    /// constant across the corpus are left unscaled rather than amplified.
    pub const MIN_STD: f64 = 1e-6;

    /// The no-op normalization (zero mean, unit std).
    pub fn identity(dim: usize) -> Self {
        ConditionStats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Population statistics of a set of flattened condition vectors. Each
    /// dimension's std is floored at [`ConditionStats::MIN_STD`]; dimensions
    /// at the floor (constant across the corpus) are reset to unit scale so
    /// they pass through unamplified.
    pub fn from_conditions(conds: &[Vec<f64>]) -> Result<Self> {
        let dim = conds.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::invalid(
                "ConditionStats",
                "need at least one non-empty condition vector",
            ));
        }
        if conds.iter().any(|c| c.len() != dim) {
            return Err(Error::invalid(
                "ConditionStats",
                "condition vectors differ in dimension",
            ));
        }
        if conds.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("ConditionStats input"));
        }
        let n = conds.len() as f64;
        let mut mean = vec![0.0; dim];
        for c in conds {
            for (m, v) in mean.iter_mut().zip(c) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; dim];
        for c in conds {
            for ((s, v), m) in std.iter_mut().zip(c).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s < Self::MIN_STD {
                *s = 1.0;
            }
        }
        Ok(ConditionStats { mean, std })
    }

    /// Rebuilds stats from stored vectors (checkpoint loading).
    pub fn from_values(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != std.len() {
            return Err(Error::invalid(
                "ConditionStats",
                "mean/std must be non-empty and equal length",
            ));
        }
        if mean.iter().chain(&std).any(|v| !v.is_finite()) {
            return Err(Error::non_finite("ConditionStats values"));
        }
        if std.iter().any(|s| *s < Self::MIN_STD) {
            return Err(Error::invalid(
                "ConditionStats",
                format!("stds must be >= {}", Self::MIN_STD),
            ));
        }
        Ok(ConditionStats { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// (v − mean) / std, elementwise.
    pub fn normalize(&self, cond: &[f64]) -> Result<Vec<f64>> {
        if cond.len() != self.dim() {
            return Err(Error::dimension("ConditionStats input", self.dim(), cond.len()));
        }
        Ok(cond
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

/// Conditional denoiser: an MLP mapping
/// `[flattened x_t ‖ timestep embedding ‖ standardized condition features]`
/// to a prediction of the clean motion vector x₀. Condition standardization
/// defaults to the identity; see [`ConditionStats`].
#[derive(Debug, Clone)]
pub struct Denoiser {
    net: Mlp,
    frames: usize,
    joints: usize,
    cond_dim: usize,
    cond_stats: ConditionStats,
}

impl Denoiser {
    pub fn new(
        frames: usize,
        joints: usize,
        cond_dim: usize,
        hidden: &[usize],
        rng: &mut Rng,
    ) -> Result<Self> {
        let dims = Self::layer_dims(frames, joints, cond_dim, hidden);
        Ok(Denoiser {
            net: Mlp::new(&dims, rng)?,
            frames,
            joints,
            cond_dim,
            cond_stats: ConditionStats::identity(cond_dim),
        })
    }

    /// All-zero weights: predicts the zero vector for every input. Used as a
    /// known-output reference in tests and for shape-only construction before
    /// loading a checkpoint.
    pub fn zeros(frames: usize, joints: usize, cond_dim: usize, hidden: &[usize]) -> Result<Self> {
        let dims = Self::layer_dims(frames, joints, cond_dim, hidden);
        Ok(Denoiser {
            net: Mlp::zeros(&dims)?,
            frames,
            joints,
            cond_dim,
            cond_stats: ConditionStats::identity(cond_dim),
        })
    }

    fn layer_dims(frames: usize, joints: usize, cond_dim: usize, hidden: &[usize]) -> Vec<usize> {
        let out = motion_dim(frames, joints);
        let mut dims = vec![out + TIMESTEP_EMBED_DIM + cond_dim];
        dims.extend_from_slice(hidden);
        dims.push(out);
        dims
    }

    pub fn motion_dim(&self) -> usize {
        motion_dim(self.frames, self.joints)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn cond_dim(&self) -> usize {
        self.cond_dim
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    /// Installs corpus condition statistics; the denoiser standardizes every
    /// condition it is given from then on.
    pub fn set_condition_stats(&mut self, stats: ConditionStats) -> Result<()> {
        if stats.dim() != self.cond_dim {
            return Err(Error::dimension(
                "Denoiser condition stats",
                self.cond_dim,
                stats.dim(),
            ));
        }
        self.cond_stats = stats;
        Ok(())
    }

    pub fn condition_stats(&self) -> &ConditionStats {
        &self.cond_stats
    }

    fn assemble_input(&self, x_t: &[f64], t: usize, cond: &[f64]) -> Result<Vec<f64>> {
        if x_t.len() != self.motion_dim() {
            return Err(Error::dimension("Denoiser x_t", self.motion_dim(), x_t.len()));
        }
        if cond.len() != self.cond_dim {
            return Err(Error::dimension("Denoiser condition", self.cond_dim, cond.len()));
        }
        let mut input = Vec::with_capacity(self.net.input_dim());
        input.extend_from_slice(x_t);
        input.extend_from_slice(&timestep_embedding(t));
        input.extend(
            cond.iter()
                .zip(self.cond_stats.mean())
                .zip(self.cond_stats.std())
                .map(|((v, m), s)| (v - m) / s),
        );
        Ok(input)
    }

    /// Predicted clean sample x̂₀ for noisy state `x_t` at timestep `t` under
    /// flattened condition features `cond`.
    pub fn predict_x0(&self, x_t: &[f64], t: usize, cond: &[f64]) -> Result<Vec<f64>> {
        let input = self.assemble_input(x_t, t, cond)?;
        self.net.forward(&input)
    }

    /// Like [`Denoiser::predict_x0`] but keeps the activations for backprop.
    pub fn predict_x0_cached(&self, x_t: &[f64], t: usize, cond: &[f64]) -> Result<MlpCache> {
        let input = self.assemble_input(x_t, t, cond)?;
        self.net.forward_cached(&input)
    }
}

/// Forward corruption: x_t = √ᾱ_t · x₀ + √(1 − ᾱ_t) · ε.
pub fn forward_diffuse(
    x0: &MotionVector,
    t: usize,
    eps: &MotionVector,
    sched: &NoiseSchedule,
) -> Result<MotionVector> {
    if t == 0 || t > sched.steps() {
        return Err(Error::invalid(
            "forward_diffuse",
            format!("timestep {t} outside [1, {}]", sched.steps()),
        ));
    }
    if eps.dim() != x0.dim() || eps.frames() != x0.frames() {
        return Err(Error::dimension("forward_diffuse noise", x0.dim(), eps.dim()));
    }
    let ab = sched.alpha_bar(t);
    let (sa, se) = (ab.sqrt(), (1.0 - ab).sqrt());
    let data = x0
        .data()
        .iter()
        .zip(eps.data())
        .map(|(x, e)| sa * x + se * e)
        .collect();
    MotionVector::from_data(x0.frames(), x0.joints(), data)
}

/// One corruption draw for one record, with timestep and noise fixed so the
/// loss is a deterministic function of the parameters.
pub struct PretrainItem<'a> {
    pub x0: &'a MotionVector,
    /// Flattened condition features.
    pub cond: &'a [f64],
    pub t: usize,
    pub eps: &'a [f64],
}

/// Per-timestep weight w_t applied to each item's squared reconstruction
/// error during pre-training.
///
/// `Uniform` (w_t ≡ 1) treats every noise level equally; the low-noise end of
/// the chain then contributes almost nothing to the loss, because a
/// lightly-corrupted x_t already pins x₀ down to a small ball. A denoiser
/// trained this way can stay sloppy about *which* of several plausible clean
/// motions a low-noise state belongs to, and the last few sampling steps
/// quietly erase distinctions the middle of the chain had resolved.
///
/// `InverseNoise` upweights low-noise timesteps as w_t = min(1/(1 − ᾱ_t),
/// cap), the Jacobian factor that makes an x₀-space objective match an
/// ε-space one (ε̂ − ε = (x̂₀ − x₀)·√ᾱ_t/√(1−ᾱ_t), so the ε loss carries an
/// extra ᾱ_t/(1−ᾱ_t) → 1/(1−ᾱ_t) factor at small t). The cap keeps the first
/// timestep, where 1 − ᾱ_t is tiny, from dominating the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseWeighting {
    /// w_t ≡ 1.
    Uniform,
    /// w_t = min(1/(1 − ᾱ_t), cap).
    InverseNoise {
        /// Upper bound on the weight; must be ≥ 1 to be meaningful.
        cap: f64,
    },
}

impl NoiseWeighting {
    /// The weight for timestep `t` under schedule `sched`.
    pub fn weight(&self, t: usize, sched: &NoiseSchedule) -> f64 {
        match self {
            NoiseWeighting::Uniform => 1.0,
            NoiseWeighting::InverseNoise { cap } => {
                let one_minus_ab = 1.0 - sched.alpha_bar(t);
                (1.0 / one_minus_ab).min(*cap)
            }
        }
    }
}

/// Denoising loss and its parameter gradients over a fixed batch:
/// mean over items of w_t · ‖x̂₀(x_t, t, c) − x₀‖².
pub fn pretrain_loss_grads(
    denoiser: &Denoiser,
    items: &[PretrainItem<'_>],
    sched: &NoiseSchedule,
    weighting: NoiseWeighting,
) -> Result<(f64, MlpGradients)> {
    if items.is_empty() {
        return Err(Error::invalid("pretrain", "empty batch"));
    }
    let b = items.len() as f64;
    let mut grads = MlpGradients::zeros_like(denoiser.net());
    let mut total = 0.0;
    for item in items {
        if item.t == 0 || item.t > sched.steps() {
            return Err(Error::invalid(
                "pretrain",
                format!("timestep {} outside [1, {}]", item.t, sched.steps()),
            ));
        }
        if item.eps.len() != item.x0.dim() {
            return Err(Error::dimension("pretrain noise", item.x0.dim(), item.eps.len()));
        }
        let ab = sched.alpha_bar(item.t);
        let (sa, se) = (ab.sqrt(), (1.0 - ab).sqrt());
        let w = weighting.weight(item.t, sched);
        let x_t: Vec<f64> = item
            .x0
            .data()
            .iter()
            .zip(item.eps)
            .map(|(x, e)| sa * x + se * e)
            .collect();
        let cache = denoiser.predict_x0_cached(&x_t, item.t, item.cond)?;
        let residual: Vec<f64> = cache
            .output()
            .iter()
            .zip(item.x0.data())
            .map(|(p, x)| p - x)
            .collect();
        total += w * residual.iter().map(|r| r * r).sum::<f64>();
        let dloss: Vec<f64> = residual.iter().map(|r| 2.0 * w * r / b).collect();
        denoiser.net().backward_accumulate(&cache, &dloss, &mut grads)?;
    }
    Ok((total / b, grads))
}

/// One optimizer step of denoising pre-training: draws a uniform timestep and
/// a Gaussian corruption per batch element, then applies Adam to the loss.
/// Returns the batch loss. A non-finite loss aborts without updating.
pub fn pretrain_step(
    denoiser: &mut Denoiser,
    batch: &[(&MotionVector, &[f64])],
    sched: &NoiseSchedule,
    rng: &mut Rng,
    opt: &mut AdamState,
    weighting: NoiseWeighting,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("pretrain", "empty batch"));
    }
    let draws: Vec<(usize, Vec<f64>)> = batch
        .iter()
        .map(|(x0, _)| {
            let t = rng.index(sched.steps()) + 1;
            let mut eps = vec![0.0; x0.dim()];
            rng.fill_normal(&mut eps);
            (t, eps)
        })
        .collect();
    let items: Vec<PretrainItem<'_>> = batch
        .iter()
        .zip(&draws)
        .map(|((x0, cond), (t, eps))| PretrainItem {
            x0,
            cond,
            t: *t,
            eps,
        })
        .collect();
    let (loss, grads) = pretrain_loss_grads(denoiser, &items, sched, weighting)?;
    if !loss.is_finite() {
        return Err(Error::non_finite("pretraining loss"));
    }
    let grad_tensors = grads.tensors();
    let mut params = denoiser.net_mut().params_mut();
    opt.step(&mut params, &grad_tensors)?;
    Ok(loss)
}
