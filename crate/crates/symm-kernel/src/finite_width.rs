//! Monte-Carlo estimates of the closed-form kernels from finite-width random
//! networks.
//!
//! This is verification tooling: it samples the actual networks whose
//! infinite-width limits [`crate::kernels`] claims to compute, with the same
//! parameterization (Gaussian weights scaled by `W_std / sqrt(fan_in)`,
//! biases by `b_std`), and reports mean and standard error over draws. It
//! shares no code with the closed forms.
//!
//! Each draw yields both estimates at once: `f(x) f(y)` for the NNGP and the
//! layerwise gradient inner product for the NTK, the latter computed from the
//! outer-product structure of dense-layer gradients so no parameter-sized
//! gradient vector is materialized. Hidden weight matrices are streamed row
//! by row from per-(draw, layer) seeds — once forward, once transposed for
//! the backward pass — so memory stays linear in the width.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::kernels::Readout;
use crate::{Error, Result};

/// Mean and standard error of a Monte-Carlo kernel estimate.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

impl McEstimate {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        McEstimate { mean, std_err: (var / n).sqrt() }
    }

    /// Whether `closed` lies within `n_sigma` standard errors of the mean.
    pub fn covers(&self, closed: f64, n_sigma: f64) -> bool {
        let slack = self.std_err.max(1e-12 * self.mean.abs().max(1.0));
        (closed - self.mean).abs() <= n_sigma * slack
    }
}

/// NNGP and NTK estimates sharing the same parameter draws.
#[derive(Debug, Clone, Copy)]
pub struct McPair {
    pub nngp: McEstimate,
    pub ntk: McEstimate,
}

fn draw_rng(seed: u64, draw: usize, stream: u64) -> SmallRng {
    let mixed = seed
        .wrapping_add((draw as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0x85EB_CA6B_27D4_EB4F));
    SmallRng::seed_from_u64(mixed)
}

fn normals(rng: &mut SmallRng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four-lane accumulation so the loop vectorizes.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

fn axpy(out: &mut [f64], scale: f64, row: &[f64]) {
    for (o, &r) in out.iter_mut().zip(row) {
        *o += scale * r;
    }
}

/// Forward/backward state of one finite MLP draw.
struct MlpDraw {
    /// Activations per layer (layer 0 is the input), per point.
    activations: Vec<Vec<Vec<f64>>>,
    /// ReLU masks per hidden layer, per point.
    masks: Vec<Vec<Vec<f64>>>,
    head: Vec<f64>,
    outputs: Vec<f64>,
}

fn mlp_forward(
    points: &[Vec<f64>],
    hidden_layers: usize,
    width: usize,
    w_std: f64,
    b_std: f64,
    seed: u64,
    draw: usize,
) -> MlpDraw {
    let n_points = points.len();
    let mut activations = vec![points.to_vec()];
    let mut masks = Vec::new();
    let mut row = vec![0.0; width];
    for layer in 0..hidden_layers {
        let fan_in = activations[layer][0].len();
        let scale = w_std / (fan_in as f64).sqrt();
        let mut rng = draw_rng(seed, draw, layer as u64);
        let mut z = vec![vec![0.0; width]; n_points];
        for i in 0..width {
            let r = &mut row[..fan_in];
            normals(&mut rng, r);
            for (p, point) in activations[layer].iter().enumerate() {
                z[p][i] = scale * dot(r, point);
            }
        }
        let mut bias = vec![0.0; width];
        normals(&mut rng, &mut bias);
        let mut acts = vec![vec![0.0; width]; n_points];
        let mut mask = vec![vec![0.0; width]; n_points];
        for p in 0..n_points {
            for i in 0..width {
                let pre = z[p][i] + b_std * bias[i];
                if pre > 0.0 {
                    acts[p][i] = pre;
                    mask[p][i] = 1.0;
                }
            }
        }
        activations.push(acts);
        masks.push(mask);
    }
    let mut rng = draw_rng(seed, draw, hidden_layers as u64);
    let mut head = vec![0.0; width];
    normals(&mut rng, &mut head);
    let head_bias: f64 = rng.sample(StandardNormal);
    let scale = w_std / (width as f64).sqrt();
    let outputs = activations[hidden_layers]
        .iter()
        .map(|h| scale * dot(&head, h) + b_std * head_bias)
        .collect();
    MlpDraw { activations, masks, head, outputs }
}

/// Per-layer gradients `delta^l = df/dz^l` for every point, re-streaming the
/// hidden weight matrices from their per-(draw, layer) seeds.
fn mlp_backward(
    state: &MlpDraw,
    hidden_layers: usize,
    width: usize,
    w_std: f64,
    seed: u64,
    draw: usize,
) -> Vec<Vec<Vec<f64>>> {
    let n_points = state.activations[0].len();
    let head_scale = w_std / (width as f64).sqrt();
    let mut deltas = vec![vec![vec![0.0; width]; n_points]; hidden_layers];
    for p in 0..n_points {
        for i in 0..width {
            deltas[hidden_layers - 1][p][i] =
                head_scale * state.head[i] * state.masks[hidden_layers - 1][p][i];
        }
    }
    let mut row = vec![0.0; width];
    for layer in (1..hidden_layers).rev() {
        // The weight matrix feeding z^{layer+1} came from stream `layer`;
        // accumulate its transpose action row by row.
        let scale = w_std / (width as f64).sqrt();
        let mut rng = draw_rng(seed, draw, layer as u64);
        let mut back = vec![vec![0.0; width]; n_points];
        for i in 0..width {
            normals(&mut rng, &mut row);
            for p in 0..n_points {
                let d = deltas[layer][p][i];
                if d != 0.0 {
                    axpy(&mut back[p], d, &row);
                }
            }
        }
        for p in 0..n_points {
            for i in 0..width {
                deltas[layer - 1][p][i] = scale * back[p][i] * state.masks[layer - 1][p][i];
            }
        }
    }
    deltas
}

/// Monte-Carlo NNGP and NTK estimates of the ReLU MLP kernel at the given
/// point pairs.
///
/// All pairs and both estimates share each parameter draw, so values are
/// correlated across pairs but individually unbiased with the reported
/// standard error.
#[allow(clippy::too_many_arguments)]
pub fn mlp_empirical_kernels(
    points: &[Vec<f64>],
    pairs: &[(usize, usize)],
    hidden_layers: usize,
    weight_std: f64,
    bias_std: f64,
    width: usize,
    draws: usize,
    seed: u64,
) -> Result<Vec<McPair>> {
    if hidden_layers == 0 || width == 0 || draws < 2 {
        return Err(Error::InvalidParameter("need hidden_layers >= 1, width >= 1, draws >= 2"));
    }
    let w2 = weight_std * weight_std;
    let b2 = bias_std * bias_std;
    let per_draw: Vec<(Vec<f64>, Vec<f64>)> = (0..draws)
        .into_par_iter()
        .map(|draw| {
            let state =
                mlp_forward(points, hidden_layers, width, weight_std, bias_std, seed, draw);
            let nngp: Vec<f64> =
                pairs.iter().map(|&(a, b)| state.outputs[a] * state.outputs[b]).collect();
            let deltas = mlp_backward(&state, hidden_layers, width, weight_std, seed, draw);
            let ntk: Vec<f64> = pairs
                .iter()
                .map(|&(a, b)| {
                    let mut theta = 0.0;
                    for layer in 0..hidden_layers {
                        let fan_in = state.activations[layer][0].len() as f64;
                        let d_dot = dot(&deltas[layer][a], &deltas[layer][b]);
                        let h_dot =
                            dot(&state.activations[layer][a], &state.activations[layer][b]);
                        theta += (w2 / fan_in) * h_dot * d_dot + b2 * d_dot;
                    }
                    // Readout layer gradients: delta is identically 1.
                    let h_dot = dot(
                        &state.activations[hidden_layers][a],
                        &state.activations[hidden_layers][b],
                    );
                    theta + (w2 / width as f64) * h_dot + b2
                })
                .collect();
            (nngp, ntk)
        })
        .collect();
    Ok((0..pairs.len())
        .map(|p| {
            let nngp: Vec<f64> = per_draw.iter().map(|d| d.0[p]).collect();
            let ntk: Vec<f64> = per_draw.iter().map(|d| d.1[p]).collect();
            McPair {
                nngp: McEstimate::from_samples(&nngp),
                ntk: McEstimate::from_samples(&ntk),
            }
        })
        .collect())
}

/// Post-activation features `phi[channel][position]` and ReLU masks of one
/// conv draw on one image.
struct ConvFeatures {
    phi: Vec<f64>,
    mask: Vec<f64>,
}

fn conv_forward(
    img: &[f64],
    side: usize,
    filter: usize,
    stride: usize,
    channels: usize,
    w_std: f64,
    weights: &[f64],
) -> ConvFeatures {
    let m = side / stride;
    let scale = w_std / (filter as f64);
    let mut phi = vec![0.0; channels * m * m];
    let mut mask = vec![0.0; channels * m * m];
    for k in 0..channels {
        let b = &weights[k * filter * filter..(k + 1) * filter * filter];
        for ax in 0..m {
            for ay in 0..m {
                let mut z = 0.0;
                for u in 0..filter {
                    let r = ((ax * stride + u) % side) * side;
                    for v in 0..filter {
                        z += b[u * filter + v] * img[r + (ay * stride + v) % side];
                    }
                }
                z *= scale;
                let idx = k * m * m + ax * m + ay;
                if z > 0.0 {
                    phi[idx] = z;
                    mask[idx] = 1.0;
                }
            }
        }
    }
    ConvFeatures { phi, mask }
}

/// Monte-Carlo NNGP and NTK estimates of the one-layer conv kernel at the
/// given image pairs.
#[allow(clippy::too_many_arguments)]
pub fn conv_empirical_kernels(
    images: &[Vec<f64>],
    pairs: &[(usize, usize)],
    filter_size: usize,
    stride: usize,
    readout: Readout,
    weight_std: f64,
    channels: usize,
    draws: usize,
    seed: u64,
) -> Result<Vec<McPair>> {
    if filter_size == 0 || stride == 0 || channels == 0 || draws < 2 {
        return Err(Error::InvalidParameter("bad conv Monte-Carlo configuration"));
    }
    let side = (images[0].len() as f64).sqrt().round() as usize;
    if side * side != images[0].len() {
        return Err(Error::NotSquareImage(images[0].len()));
    }
    if !side.is_multiple_of(stride) {
        return Err(Error::StrideMismatch { stride, side });
    }
    let m = side / stride;
    let n_pos = m * m;
    let f2 = filter_size * filter_size;
    let w2 = weight_std * weight_std;
    let per_draw: Vec<(Vec<f64>, Vec<f64>)> = (0..draws)
        .into_par_iter()
        .map(|draw| {
            let mut rng = draw_rng(seed, draw, 0);
            let mut filters = vec![0.0; channels * f2];
            normals(&mut rng, &mut filters);
            let head_len = match readout {
                Readout::Fc => channels * n_pos,
                Readout::Gap => channels,
            };
            let mut head = vec![0.0; head_len];
            normals(&mut rng, &mut head);
            let feats: Vec<ConvFeatures> = images
                .iter()
                .map(|img| {
                    conv_forward(img, side, filter_size, stride, channels, weight_std, &filters)
                })
                .collect();
            let head_scale = match readout {
                Readout::Fc => weight_std / (channels as f64).sqrt(),
                Readout::Gap => weight_std / ((channels as f64).sqrt() * n_pos as f64),
            };
            let outputs: Vec<f64> = feats
                .iter()
                .map(|f| match readout {
                    Readout::Fc => head_scale * dot(&head, &f.phi),
                    Readout::Gap => {
                        let mut acc = 0.0;
                        for k in 0..channels {
                            let sum: f64 = f.phi[k * n_pos..(k + 1) * n_pos].iter().sum();
                            acc += head[k] * sum;
                        }
                        head_scale * acc
                    }
                })
                .collect();
            let nngp: Vec<f64> =
                pairs.iter().map(|&(a, b)| outputs[a] * outputs[b]).collect();
            // Filter-gradient projections u[channel][tap] per image.
            let grads: Vec<Vec<f64>> = feats
                .iter()
                .zip(images)
                .map(|(f, img)| {
                    let mut u = vec![0.0; channels * f2];
                    for k in 0..channels {
                        for ax in 0..m {
                            for ay in 0..m {
                                let idx = k * n_pos + ax * m + ay;
                                if f.mask[idx] == 0.0 {
                                    continue;
                                }
                                let a_w = match readout {
                                    Readout::Fc => head[k * n_pos + ax * m + ay],
                                    Readout::Gap => head[k],
                                };
                                if a_w == 0.0 {
                                    continue;
                                }
                                for uu in 0..filter_size {
                                    let r = ((ax * stride + uu) % side) * side;
                                    for vv in 0..filter_size {
                                        u[k * f2 + uu * filter_size + vv] +=
                                            a_w * img[r + (ay * stride + vv) % side];
                                    }
                                }
                            }
                        }
                    }
                    u
                })
                .collect();
            let conv_scale = match readout {
                Readout::Fc => w2 * w2 / (channels as f64 * f2 as f64),
                Readout::Gap => w2 * w2 / (channels as f64 * f2 as f64 * (n_pos * n_pos) as f64),
            };
            let ntk: Vec<f64> = pairs
                .iter()
                .map(|&(a, b)| {
                    let dense = match readout {
                        Readout::Fc => w2 / channels as f64 * dot(&feats[a].phi, &feats[b].phi),
                        Readout::Gap => {
                            let mut acc = 0.0;
                            for k in 0..channels {
                                let sa: f64 =
                                    feats[a].phi[k * n_pos..(k + 1) * n_pos].iter().sum();
                                let sb: f64 =
                                    feats[b].phi[k * n_pos..(k + 1) * n_pos].iter().sum();
                                acc += sa * sb;
                            }
                            w2 / (channels as f64 * (n_pos * n_pos) as f64) * acc
                        }
                    };
                    dense + conv_scale * dot(&grads[a], &grads[b])
                })
                .collect();
            (nngp, ntk)
        })
        .collect();
    Ok((0..pairs.len())
        .map(|p| {
            let nngp: Vec<f64> = per_draw.iter().map(|d| d.0[p]).collect();
            let ntk: Vec<f64> = per_draw.iter().map(|d| d.1[p]).collect();
            McPair {
                nngp: McEstimate::from_samples(&nngp),
                ntk: McEstimate::from_samples(&ntk),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{conv_kernel, mlp_kernel, KernelMode, KernelSpec};

    #[test]
    fn mlp_estimates_match_closed_forms_at_modest_width() {
        let points = vec![vec![1.0, 0.2, -0.5], vec![-0.3, 0.8, 0.4], vec![0.6, -0.6, 0.1]];
        let pairs = [(0, 1), (0, 0), (1, 2)];
        let est = mlp_empirical_kernels(&points, &pairs, 2, 1.0, 1.0, 2048, 128, 11).unwrap();
        for (e, &(a, b)) in est.iter().zip(&pairs) {
            for (mode, got) in
                [(KernelMode::Nngp, e.nngp), (KernelMode::Ntk, e.ntk)]
            {
                let spec = KernelSpec::Mlp {
                    hidden_layers: 2,
                    weight_std: 1.0,
                    bias_std: 1.0,
                    mode,
                };
                let closed = mlp_kernel(&points[a], &points[b], &spec).unwrap();
                assert!(
                    got.covers(closed, 4.0),
                    "{mode:?} ({a},{b}): closed {closed}, mc {} +- {}",
                    got.mean,
                    got.std_err
                );
            }
        }
    }

    #[test]
    fn conv_estimates_match_closed_forms_at_modest_channels() {
        let img_a: Vec<f64> = (0..16).map(|k| ((k * 7 + 3) % 5) as f64 / 5.0 - 0.4).collect();
        let img_b: Vec<f64> = (0..16).map(|k| ((k * 11 + 1) % 7) as f64 / 7.0 - 0.3).collect();
        let images = vec![img_a, img_b];
        let pairs = [(0, 1)];
        for readout in [Readout::Fc, Readout::Gap] {
            let est =
                conv_empirical_kernels(&images, &pairs, 3, 1, readout, 1.0, 4096, 128, 3).unwrap();
            for (mode, got) in
                [(KernelMode::Nngp, est[0].nngp), (KernelMode::Ntk, est[0].ntk)]
            {
                let spec = KernelSpec::Conv {
                    filter_size: 3,
                    stride: 1,
                    readout,
                    weight_std: 1.0,
                    mode,
                };
                let closed = conv_kernel(&images[0], &images[1], &spec).unwrap();
                assert!(
                    got.covers(closed, 4.0),
                    "{readout:?} {mode:?}: closed {closed}, mc {} +- {}",
                    got.mean,
                    got.std_err
                );
            }
        }
    }

    #[test]
    fn estimates_are_deterministic_in_the_seed() {
        let points = vec![vec![0.4, 0.1], vec![-0.2, 0.9]];
        let a = mlp_empirical_kernels(&points, &[(0, 1)], 1, 1.0, 1.0, 256, 16, 42).unwrap();
        let b = mlp_empirical_kernels(&points, &[(0, 1)], 1, 1.0, 1.0, 256, 16, 42).unwrap();
        assert_eq!(a[0].nngp.mean, b[0].nngp.mean);
        assert_eq!(a[0].ntk.std_err, b[0].ntk.std_err);
    }
}
