use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::render::{pixel_rng, trace, TraceSample};
use super::{PosedDataset, Ray, RenderOptions, TrainableField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub iterations: usize,
    pub learning_rate: f64,
    pub rays_per_batch: usize,
    pub seed: u64,
    /// Sampling used during training; `jitter` enables stratified offsets.
    pub render: RenderOptions,
    /// Multiplicative learning-rate decay reached by the last iteration.
    pub final_lr_fraction: f64,
    /// Weight of the per-ray distortion penalty that pulls compositing
    /// weights together into a thin shell (0 disables).
    #[serde(default)]
    pub distortion_weight: f64,
    /// Weight of the binary entropy of each ray's accumulated opacity, which
    /// discourages half-transparent surfaces (0 disables).
    #[serde(default)]
    pub opacity_weight: f64,
    /// Learning-rate multiplier for density-only parameters.
    #[serde(default = "unit")]
    pub density_lr_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            iterations: 1000,
            learning_rate: 0.1,
            rays_per_batch: 4096,
            seed: 0,
            render: RenderOptions {
                jitter: true,
                early_stop: 1e-4,
                ..Default::default()
            },
            final_lr_fraction: 0.1,
            distortion_weight: 0.0,
            opacity_weight: 0.0,
            density_lr_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Batch loss per iteration.
    pub losses: Vec<f64>,
    /// Exponential moving average of the loss (factor 0.9).
    pub smoothed: Vec<f64>,
    /// Whether the smoothed curve never increased. Reported, not guaranteed.
    pub smoothed_monotone: bool,
    /// PSNR of the mean loss over the last tenth of iterations.
    pub final_train_psnr: f64,
    /// Mean distortion penalty per ray at the last iteration.
    pub final_distortion: f64,
    /// Mean opacity entropy per ray at the last iteration.
    pub final_opacity_entropy: f64,
}

/// Per-sample gradient with respect to the field output.
struct SampleGrad {
    pos: Vector3<f64>,
    dir: Vector3<f64>,
    d_rgb: [f64; 3],
    d_sigma: f64,
}

/// `sum_ij w_i w_j |t_i - t_j| + delta/3 sum_i w_i^2` over one ray's samples,
/// which must be sorted by `t`. Writes `dD/dw_i` into `d_w`.
pub(crate) fn distortion(samples: &[TraceSample], delta: f64, d_w: &mut Vec<f64>) -> f64 {
    d_w.clear();
    let total_w: f64 = samples.iter().map(TraceSample::weight).sum();
    let total_wt: f64 = samples.iter().map(|s| s.weight() * s.t).sum();
    let (mut w_lo, mut wt_lo) = (0.0, 0.0);
    let mut value = 0.0;
    for s in samples {
        let w = s.weight();
        let w_hi = total_w - w_lo - w;
        let wt_hi = total_wt - wt_lo - w * s.t;
        // sum_j w_j |t_i - t_j|
        let spread = s.t * w_lo - wt_lo + wt_hi - s.t * w_hi;
        value += w * spread + delta / 3.0 * w * w;
        d_w.push(2.0 * spread + 2.0 / 3.0 * delta * w);
        w_lo += w;
        wt_lo += w * s.t;
    }
    value
}

/// Opacity is clamped away from 0 and 1 before taking the entropy.
const OPACITY_CLAMP: f64 = 1e-4;

/// Binary entropy of the accumulated opacity and its derivative, which is
/// also the derivative w.r.t. every compositing weight.
pub(crate) fn opacity_entropy(opacity: f64) -> (f64, f64) {
    let o = opacity.clamp(OPACITY_CLAMP, 1.0 - OPACITY_CLAMP);
    let h = -(o * o.ln() + (1.0 - o) * (1.0 - o).ln());
    let dh = if opacity == o { ((1.0 - o) / o).ln() } else { 0.0 };
    (h, dh)
}

/// Backpropagates `d_out = dL/d(rgb)` plus direct per-weight gradients `d_w`
/// (empty for none) through the compositing of one ray.
fn ray_backward(
    samples: &[TraceSample],
    dir: &Vector3<f64>,
    delta: f64,
    d_out: [f64; 3],
    d_w: &[f64],
    out: &mut Vec<SampleGrad>,
) {
    // suffix holds sum_{j>i} w_j dL/dw_j
    let mut suffix = 0.0;
    for (i, s) in samples.iter().enumerate().rev() {
        let w = s.weight();
        let c_dot = s.rgb[0] * d_out[0] + s.rgb[1] * d_out[1] + s.rgb[2] * d_out[2] + d_w.get(i).copied().unwrap_or(0.0);
        let trans_after = s.trans * (1.0 - s.alpha);
        let d_sigma = delta * (trans_after * c_dot - suffix);
        out.push(SampleGrad {
            pos: s.pos,
            dir: *dir,
            d_rgb: d_out.map(|g| w * g),
            d_sigma,
        });
        suffix += w * c_dot;
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Regularizers {
    distortion: f64,
    opacity: f64,
}

/// Per-ray means of the batch terms.
#[derive(Debug, Clone, Copy, Default)]
struct BatchLoss {
    mse: f64,
    distortion: f64,
    opacity: f64,
}

/// Photometric MSE and regularizer means over a ray batch; `grad` receives
/// the gradient of `mse + sum_k weight_k * term_k` w.r.t. the field
/// parameters. `jitter_seed` enables stratified offsets (one stream per ray).
fn batch_loss_grad<F: TrainableField>(
    field: &F,
    rays: &[Ray],
    targets: &[[f64; 3]],
    opts: &RenderOptions,
    jitter_seed: Option<u64>,
    reg: Regularizers,
    grad: &mut [f64],
) -> BatchLoss {
    const CHUNK: usize = 256;
    let n = rays.len() as f64;
    let delta = opts.spacing();
    let chunks: Vec<(BatchLoss, Vec<SampleGrad>)> = rays
        .par_chunks(CHUNK)
        .zip(targets.par_chunks(CHUNK))
        .enumerate()
        .map(|(c, (rays, targets))| {
            let mut samples = Vec::new();
            let mut grads = Vec::new();
            let mut d_w = Vec::new();
            let mut sums = BatchLoss::default();
            for (k, (ray, target)) in rays.iter().zip(targets).enumerate() {
                let mut rng = jitter_seed.map(|s| pixel_rng(s, (c * CHUNK + k) as u64));
                let out = trace(field, &ray.origin, &ray.direction, opts, rng.as_mut(), Some(&mut samples));
                let mut d_out = [0.0; 3];
                for ch in 0..3 {
                    let diff = out.rgb[ch] - target[ch];
                    sums.mse += diff * diff;
                    d_out[ch] = 2.0 * diff / (3.0 * n);
                }
                d_w.clear();
                if reg.distortion > 0.0 {
                    sums.distortion += distortion(&samples, delta, &mut d_w);
                    d_w.iter_mut().for_each(|g| *g *= reg.distortion / n);
                }
                if reg.opacity > 0.0 {
                    let (h, dh) = opacity_entropy(out.opacity);
                    sums.opacity += h;
                    d_w.resize(samples.len(), 0.0);
                    d_w.iter_mut().for_each(|g| *g += reg.opacity * dh / n);
                }
                ray_backward(&samples, &ray.direction, delta, d_out, &d_w, &mut grads);
            }
            (sums, grads)
        })
        .collect();

    // ordered scatter keeps the result independent of thread scheduling
    let mut total = BatchLoss::default();
    for (l, grads) in &chunks {
        total.mse += l.mse;
        total.distortion += l.distortion;
        total.opacity += l.opacity;
        for g in grads {
            field.accumulate_grad(&g.pos, &g.dir, g.d_rgb, g.d_sigma, grad);
        }
    }
    BatchLoss {
        mse: total.mse / (3.0 * n),
        distortion: total.distortion / n,
        opacity: total.opacity / n,
    }
}

/// Loss (mean over rays and channels) and its analytic gradient, with
/// deterministic midpoint sampling.
pub fn loss_and_grad<F: TrainableField>(
    field: &F,
    rays: &[Ray],
    targets: &[[f64; 3]],
    opts: &RenderOptions,
) -> Result<(f64, Vec<f64>)> {
    opts.validate()?;
    if rays.len() != targets.len() || rays.is_empty() {
        return Err(Error::Mismatch(format!("{} rays for {} targets", rays.len(), targets.len())));
    }
    let mut grad = vec![0.0; field.params().len()];
    let opts = RenderOptions { jitter: false, ..*opts };
    let loss = batch_loss_grad(field, rays, targets, &opts, None, Regularizers::default(), &mut grad);
    Ok((loss.mse, grad))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    /// `scale` holds one learning-rate multiplier per parameter.
    fn update(&mut self, params: &mut [f64], grad: &[f64], scale: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        params
            .par_iter_mut()
            .zip(grad.par_iter().zip(scale.par_iter()))
            .zip(self.m.par_iter_mut().zip(self.v.par_iter_mut()))
            .for_each(|((p, (&g, &k)), (m, v))| {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                *p -= k * lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            });
    }
}

/// Fits `field` to the posed images with Adam on the mean squared error.
///
/// Each iteration draws `rays_per_batch` pixels uniformly over all views.
/// The learning rate decays exponentially to `final_lr_fraction` of its
/// initial value. Results are bit-identical for a fixed seed.
pub fn fit<F: TrainableField>(field: &mut F, data: &PosedDataset, opts: &FitOptions) -> Result<FitReport> {
    opts.render.validate()?;
    if opts.rays_per_batch == 0 {
        return Err(Error::InvalidParameter("rays_per_batch must be positive".into()));
    }
    if !(opts.density_lr_scale > 0.0 && opts.density_lr_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("density learning-rate scale {}", opts.density_lr_scale)));
    }
    for (name, w) in [("distortion", opts.distortion_weight), ("opacity", opts.opacity_weight)] {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} weight {w}")));
        }
    }
    if !(opts.learning_rate > 0.0) {
        return Err(Error::InvalidParameter(format!("learning rate {}", opts.learning_rate)));
    }
    let views = data.views();
    let (w, h) = (views[0].image.width(), views[0].image.height());
    let per_view = w * h;
    let total = per_view * views.len();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut adam = Adam::new(field.params().len());
    let lr_scale: Vec<f64> = (0..field.params().len())
        .map(|i| if field.is_density_param(i) { opts.density_lr_scale } else { 1.0 })
        .collect();
    let mut grad = vec![0.0; field.params().len()];
    let mut rays = Vec::with_capacity(opts.rays_per_batch);
    let mut targets = Vec::with_capacity(opts.rays_per_batch);
    let mut losses = Vec::with_capacity(opts.iterations);
    let mut last = BatchLoss::default();
    let reg = Regularizers {
        distortion: opts.distortion_weight,
        opacity: opts.opacity_weight,
    };
    let decay = opts.final_lr_fraction.clamp(1e-6, 1.0);

    for it in 0..opts.iterations {
        rays.clear();
        targets.clear();
        for _ in 0..opts.rays_per_batch {
            let idx = rng.gen_range(0..total);
            let view = &views[idx / per_view];
            let pix = idx % per_view;
            rays.push(view.pose.ray(pix % w, pix / w));
            let px = view.image.pixel(pix);
            targets.push([px[0], px[1], px[2]]);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let jitter_seed = opts.render.jitter.then(|| rng.gen::<u64>());
        let batch = batch_loss_grad(field, &rays, &targets, &opts.render, jitter_seed, reg, &mut grad);
        let loss = batch.mse;
        last = batch;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                iteration: it,
                loss,
                learning_rate: opts.learning_rate,
            });
        }
        losses.push(loss);
        let frac = if opts.iterations > 1 {
            it as f64 / (opts.iterations - 1) as f64
        } else {
            0.0
        };
        let lr = opts.learning_rate * decay.powf(frac);
        adam.update(field.params_mut(), &grad, &lr_scale, lr);
        if it % 100 == 0 {
            log::debug!("fit iteration {it}: loss {loss:.6e}, lr {lr:.3e}");
        }
    }

    let mut smoothed = Vec::with_capacity(losses.len());
    let mut ema: Option<f64> = None;
    for &l in &losses {
        let e = ema.map_or(l, |e| 0.9 * e + 0.1 * l);
        smoothed.push(e);
        ema = Some(e);
    }
    let smoothed_monotone = smoothed.windows(2).all(|p| p[1] <= p[0]);
    let tail = (losses.len() / 10).max(1).min(losses.len());
    let final_train_psnr = if tail == 0 {
        f64::NAN
    } else {
        let mse = losses[losses.len() - tail..].iter().sum::<f64>() / tail as f64;
        -10.0 * mse.log10()
    };
    Ok(FitReport {
        losses,
        smoothed,
        smoothed_monotone,
        final_train_psnr,
        final_distortion: last.distortion,
        final_opacity_entropy: last.opacity,
    })
}
