//! Closed-form kernels and Gram-matrix assembly.
//!
//! Three kernel families:
//!
//! * `Rbf`: `k(x, y) = exp(-L^2 ||x - y||^2)` with length scale `L`.
//! * `Mlp`: the infinite-width ReLU network kernel, NNGP or NTK mode. The
//!   layer recursion uses the degree-1 arc-cosine dual of ReLU:
//!   `T(S) = sqrt(Sxx Syy) (sin t + (pi - t) cos t) / (2 pi)` and
//!   `T'(S) = (pi - t) / (2 pi)` with `t = arccos(Sxy / sqrt(Sxx Syy))`.
//! * `Conv`: one convolutional layer (circular padding, infinite channels,
//!   no biases) followed by ReLU, a readout (`Fc`: trace over the 4-index
//!   pixel kernel; `Gap`: mean over all of it), and a dense layer that only
//!   contributes a `W^2` scale.
//!
//! The Monte-Carlo estimates in [`crate::finite_width`] pin these closed
//! forms against finite random networks with matching parameterization.

use rayon::prelude::*;

use crate::linalg::{is_positive_semidefinite, Mat};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    Nngp,
    Ntk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    /// Flatten + dense: the 4-index pixel kernel reduces by its trace.
    Fc,
    /// Global average pooling: mean over all 4-index entries.
    Gap,
}

/// Declarative description of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec<T> {
    Rbf {
        length_scale: T,
    },
    Mlp {
        hidden_layers: usize,
        weight_std: T,
        bias_std: T,
        mode: KernelMode,
    },
    Conv {
        filter_size: usize,
        stride: usize,
        readout: Readout,
        weight_std: T,
        mode: KernelMode,
    },
}

impl<T: Scalar> KernelSpec<T> {
    pub fn rbf(length_scale: T) -> Self {
        KernelSpec::Rbf { length_scale }
    }

    /// MLP kernel with the default unit weight and bias scales.
    pub fn mlp(hidden_layers: usize, mode: KernelMode) -> Self {
        KernelSpec::Mlp { hidden_layers, weight_std: T::one(), bias_std: T::one(), mode }
    }

    /// Conv kernel with the default 3x3 filter, stride 1, unit weight scale.
    pub fn conv(readout: Readout, mode: KernelMode) -> Self {
        KernelSpec::Conv { filter_size: 3, stride: 1, readout, weight_std: T::one(), mode }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { length_scale } => {
                if !(length_scale > T::zero()) {
                    return Err(Error::InvalidParameter("length_scale must be positive"));
                }
            }
            KernelSpec::Mlp { hidden_layers, weight_std, bias_std, .. } => {
                if hidden_layers == 0 {
                    return Err(Error::InvalidParameter("hidden_layers must be >= 1"));
                }
                if !(weight_std > T::zero()) {
                    return Err(Error::InvalidParameter("weight_std must be positive"));
                }
                if !(bias_std >= T::zero()) {
                    return Err(Error::InvalidParameter("bias_std must be nonnegative"));
                }
            }
            KernelSpec::Conv { filter_size, stride, weight_std, .. } => {
                if filter_size == 0 {
                    return Err(Error::InvalidParameter("filter_size must be >= 1"));
                }
                if stride == 0 {
                    return Err(Error::InvalidParameter("stride must be >= 1"));
                }
                if !(weight_std > T::zero()) {
                    return Err(Error::InvalidParameter("weight_std must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// `exp(-L^2 ||x - y||^2)`.
pub fn rbf<T: Scalar>(x: &[T], y: &[T], length_scale: T) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    let d2: T = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((-length_scale * length_scale * d2).exp())
}

/// Degree-1 arc-cosine dual of ReLU: post-activation covariance and the
/// derivative factor, given pre-activation (cross, self-x, self-y)
/// covariances. Zero self-covariance means the unit is almost surely zero,
/// so both outputs vanish.
fn relu_dual<T: Scalar>(sxy: T, sxx: T, syy: T) -> (T, T) {
    if !(sxx > T::zero()) || !(syy > T::zero()) {
        return (T::zero(), T::zero());
    }
    let norm = (sxx * syy).sqrt();
    // Clamp guards fp overshoot of |cos| past 1.
    let cos = (sxy / norm).max(-T::one()).min(T::one());
    let theta = cos.acos();
    let two_pi = T::c(2.0) * T::PI();
    let t = norm * (theta.sin() + (T::PI() - theta) * cos) / two_pi;
    let tdot = (T::PI() - theta) / two_pi;
    (t, tdot)
}

/// MLP kernel from raw inner products `(x.y, x.x, y.y)` and the input
/// dimension.
fn mlp_from_dots<T: Scalar>(
    dot_xy: T,
    dot_xx: T,
    dot_yy: T,
    input_dim: usize,
    hidden_layers: usize,
    weight_std: T,
    bias_std: T,
    mode: KernelMode,
) -> T {
    let w2 = weight_std * weight_std;
    let b2 = bias_std * bias_std;
    let d = T::c(input_dim as f64);
    let mut sxy = w2 * dot_xy / d + b2;
    let mut sxx = w2 * dot_xx / d + b2;
    let mut syy = w2 * dot_yy / d + b2;
    let mut theta = sxy;
    for _ in 0..hidden_layers {
        let (txy, tdot) = relu_dual(sxy, sxx, syy);
        let (txx, _) = relu_dual(sxx, sxx, sxx);
        let (tyy, _) = relu_dual(syy, syy, syy);
        sxy = w2 * txy + b2;
        sxx = w2 * txx + b2;
        syy = w2 * tyy + b2;
        theta = sxy + w2 * tdot * theta;
    }
    match mode {
        KernelMode::Nngp => sxy,
        KernelMode::Ntk => theta,
    }
}

/// Infinite-width ReLU MLP kernel (NNGP or NTK mode).
pub fn mlp_kernel<T: Scalar>(x: &[T], y: &[T], spec: &KernelSpec<T>) -> Result<T> {
    let KernelSpec::Mlp { hidden_layers, weight_std, bias_std, mode } = *spec else {
        return Err(Error::InvalidParameter("mlp_kernel needs an Mlp spec"));
    };
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    if x.is_empty() {
        return Err(Error::TooFewPoints { min: 1, got: 0 });
    }
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&p, &q)| p * q).sum::<T>();
    Ok(mlp_from_dots(
        dot(x, y),
        dot(x, x),
        dot(y, y),
        x.len(),
        hidden_layers,
        weight_std,
        bias_std,
        mode,
    ))
}

/// Pre-activation pixel covariance of a single circular conv layer between
/// output positions `(ax, ay)` on `x` and `(bx, by)` on `y`:
/// `(W^2/f^2) sum_taps x[window_a] y[window_b]`.
fn conv_cov<T: Scalar>(
    x: &[T],
    y: &[T],
    side: usize,
    filter: usize,
    stride: usize,
    (ax, ay): (usize, usize),
    (bx, by): (usize, usize),
    w2_over_f2: T,
) -> T {
    let mut acc = T::zero();
    for u in 0..filter {
        let xr = ((ax * stride + u) % side) * side;
        let yr = ((bx * stride + u) % side) * side;
        for v in 0..filter {
            let xc = (ay * stride + v) % side;
            let yc = (by * stride + v) % side;
            acc += x[xr + xc] * y[yr + yc];
        }
    }
    acc * w2_over_f2
}

/// One-hidden-layer convolutional kernel (conv -> ReLU -> readout -> dense),
/// NNGP or NTK mode. Inputs are flattened square images.
pub fn conv_kernel<T: Scalar>(x: &[T], y: &[T], spec: &KernelSpec<T>) -> Result<T> {
    let KernelSpec::Conv { filter_size, stride, readout, weight_std, mode } = *spec else {
        return Err(Error::InvalidParameter("conv_kernel needs a Conv spec"));
    };
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    let side = (x.len() as f64).sqrt().round() as usize;
    if side * side != x.len() {
        return Err(Error::NotSquareImage(x.len()));
    }
    if !side.is_multiple_of(stride) {
        return Err(Error::StrideMismatch { stride, side });
    }
    let m = side / stride;
    let w2 = weight_std * weight_std;
    let w2f2 = w2 / T::c((filter_size * filter_size) as f64);
    let pos = |i: usize| (i / m, i % m);
    // Self-covariance diagonals used to normalize the ReLU dual.
    let dx: Vec<T> =
        (0..m * m).map(|i| conv_cov(x, x, side, filter_size, stride, pos(i), pos(i), w2f2)).collect();
    let dy: Vec<T> =
        (0..m * m).map(|i| conv_cov(y, y, side, filter_size, stride, pos(i), pos(i), w2f2)).collect();
    let reduced = match readout {
        Readout::Fc => {
            // Trace: only same-position entries survive the flatten + dense.
            let mut acc = T::zero();
            for i in 0..m * m {
                let k1 = conv_cov(x, y, side, filter_size, stride, pos(i), pos(i), w2f2);
                let (k2, tdot) = relu_dual(k1, dx[i], dy[i]);
                acc += match mode {
                    KernelMode::Nngp => k2,
                    KernelMode::Ntk => k2 + tdot * k1,
                };
            }
            acc
        }
        Readout::Gap => {
            let mut acc = T::zero();
            for i in 0..m * m {
                for j in 0..m * m {
                    let k1 = conv_cov(x, y, side, filter_size, stride, pos(i), pos(j), w2f2);
                    let (k2, tdot) = relu_dual(k1, dx[i], dy[j]);
                    acc += match mode {
                        KernelMode::Nngp => k2,
                        KernelMode::Ntk => k2 + tdot * k1,
                    };
                }
            }
            let count = T::c((m * m) as f64);
            acc / (count * count)
        }
    };
    Ok(w2 * reduced)
}

/// Evaluates whichever kernel the spec describes.
pub fn kernel_value<T: Scalar>(x: &[T], y: &[T], spec: &KernelSpec<T>) -> Result<T> {
    match spec {
        KernelSpec::Rbf { length_scale } => rbf(x, y, *length_scale),
        KernelSpec::Mlp { .. } => mlp_kernel(x, y, spec),
        KernelSpec::Conv { .. } => conv_kernel(x, y, spec),
    }
}

/// A symmetric kernel matrix together with the spec and dataset ordering
/// that produced it.
#[derive(Debug, Clone)]
pub struct GramMatrix<T> {
    pub values: Mat<T>,
    pub spec: KernelSpec<T>,
    pub ordering: String,
}

impl<T: Scalar> GramMatrix<T> {
    pub fn size(&self) -> usize {
        self.values.n_rows()
    }
}

/// Relative floor on the smallest admissible Gram eigenvalue:
/// `min_eig >= -PSD_REL_TOL * trace / M`.
pub const PSD_REL_TOL: f64 = 1e-8;

/// Assembles the Gram matrix of an RBF or MLP kernel from the matrix of raw
/// pairwise inner products (those kernels depend on the inputs only through
/// `x.y`, `x.x`, `y.y`).
///
/// `input_dim` is the ambient dimension the MLP recursion normalizes by.
pub fn gram_from_dots<T: Scalar>(
    dots: &Mat<T>,
    input_dim: usize,
    spec: &KernelSpec<T>,
) -> Result<GramMatrix<T>> {
    spec.validate()?;
    if !dots.is_square() {
        return Err(Error::NotSquare { rows: dots.n_rows(), cols: dots.n_cols() });
    }
    let m = dots.n_rows();
    let mut values = Mat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = match *spec {
                KernelSpec::Rbf { length_scale } => {
                    let d2 = dots[(i, i)] + dots[(j, j)] - T::c(2.0) * dots[(i, j)];
                    (-length_scale * length_scale * d2).exp()
                }
                KernelSpec::Mlp { hidden_layers, weight_std, bias_std, mode } => mlp_from_dots(
                    dots[(i, j)],
                    dots[(i, i)],
                    dots[(j, j)],
                    input_dim,
                    hidden_layers,
                    weight_std,
                    bias_std,
                    mode,
                ),
                KernelSpec::Conv { .. } => {
                    return Err(Error::InvalidParameter(
                        "conv kernels are not functions of inner products alone",
                    ))
                }
            };
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    let shift = values.trace() * T::c(PSD_REL_TOL) / T::c(m as f64);
    if !is_positive_semidefinite(&values, shift) {
        return Err(Error::NotPositiveSemidefinite);
    }
    Ok(GramMatrix { values, spec: spec.clone(), ordering: "input-order".to_string() })
}

/// Assembles the Gram matrix of `spec` over `points` in input order.
///
/// Entries are evaluated once per unordered pair so the result is symmetric
/// by construction; a Cholesky probe rejects matrices whose minimum
/// eigenvalue falls below `-1e-8 * trace / M`.
pub fn gram<T: Scalar>(points: &[Vec<T>], spec: &KernelSpec<T>) -> Result<GramMatrix<T>> {
    spec.validate()?;
    let m = points.len();
    if m == 0 {
        return Err(Error::TooFewPoints { min: 1, got: 0 });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: 0 });
    }
    if matches!(spec, KernelSpec::Rbf { .. } | KernelSpec::Mlp { .. }) {
        // One inner product per pair; the diagonal feeds normalization.
        let mut dots = Mat::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let d: T = points[i].iter().zip(&points[j]).map(|(&a, &b)| a * b).sum();
                dots[(i, j)] = d;
                dots[(j, i)] = d;
            }
        }
        return gram_from_dots(&dots, dim, spec);
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let entries: Vec<Result<T>> = pairs
        .par_iter()
        .map(|&(i, j)| kernel_value(&points[i], &points[j], spec))
        .collect();
    let mut values = Mat::zeros(m, m);
    for (&(i, j), entry) in pairs.iter().zip(entries) {
        let v = entry?;
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    let shift = values.trace() * T::c(PSD_REL_TOL) / T::c(m as f64);
    if !is_positive_semidefinite(&values, shift) {
        return Err(Error::NotPositiveSemidefinite);
    }
    Ok(GramMatrix { values, spec: spec.clone(), ordering: "input-order".to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot3(theta: f64) -> Mat<f64> {
        Mat::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, theta.cos(), -theta.sin()],
            vec![0.0, theta.sin(), theta.cos()],
        ])
    }

    #[test]
    fn rbf_at_zero_distance_is_one() {
        let x = vec![0.3, -1.2, 0.7];
        assert_eq!(rbf(&x, &x, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn rbf_unit_distance_unit_scale() {
        let k = rbf(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rbf_rejects_dimension_mismatch() {
        assert!(matches!(rbf(&[1.0], &[1.0, 2.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rbf_is_stationary_under_rotation() {
        let x = vec![0.5, 1.0, -0.3];
        let y = vec![-0.2, 0.4, 0.9];
        let r = rot3(0.83);
        let k0 = rbf(&x, &y, 1.3).unwrap();
        let k1 = rbf(&r.matvec(&x), &r.matvec(&y), 1.3).unwrap();
        assert!((k0 - k1).abs() < 1e-14);
    }

    #[test]
    fn mlp_kernel_is_symmetric() {
        let spec = KernelSpec::mlp(2, KernelMode::Ntk);
        let x = vec![0.2f64, -0.7, 1.1, 0.4];
        let y = vec![-0.9f64, 0.3, 0.5, -0.1];
        let a = mlp_kernel(&x, &y, &spec).unwrap();
        let b = mlp_kernel(&y, &x, &spec).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn mlp_kernel_depends_only_on_dots_and_norms() {
        // Two pairs engineered to share (x.y, |x|, |y|): a joint rotation.
        for mode in [KernelMode::Nngp, KernelMode::Ntk] {
            let spec = KernelSpec::mlp(3, mode);
            let x = vec![0.5, 1.0, -0.3];
            let y = vec![-0.2, 0.4, 0.9];
            let r = rot3(-1.2);
            let a = mlp_kernel(&x, &y, &spec).unwrap();
            let b = mlp_kernel(&r.matvec(&x), &r.matvec(&y), &spec).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mlp_orthogonal_unit_inputs_post_activation_covariance() {
        // One hidden layer, W=1, b=0, orthogonal unit inputs: the NNGP value
        // is the ReLU dual at zero correlation, 1/(2 pi).
        let spec = KernelSpec::Mlp {
            hidden_layers: 1,
            weight_std: 1.0,
            bias_std: 0.0,
            mode: KernelMode::Nngp,
        };
        let dim: f64 = 4.0;
        let x = vec![dim.sqrt(), 0.0, 0.0, 0.0];
        let y = vec![0.0, dim.sqrt(), 0.0, 0.0];
        let k = mlp_kernel(&x, &y, &spec).unwrap();
        assert!((k - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn mlp_rejects_zero_hidden_layers() {
        let spec = KernelSpec::Mlp {
            hidden_layers: 0,
            weight_std: 1.0,
            bias_std: 1.0,
            mode: KernelMode::Nngp,
        };
        assert!(mlp_kernel(&[1.0], &[1.0], &spec).is_err());
    }

    fn translate_rows(img: &[f64], side: usize, shift: usize) -> Vec<f64> {
        let mut out = vec![0.0; side * side];
        for i in 0..side {
            for j in 0..side {
                out[i * side + j] = img[((i + shift) % side) * side + j];
            }
        }
        out
    }

    fn fixed_image(side: usize) -> Vec<f64> {
        (0..side * side).map(|k| ((k * 37 + 11) % 19) as f64 / 19.0).collect()
    }

    #[test]
    fn conv_fc_diagonal_is_positive() {
        let spec = KernelSpec::conv(Readout::Fc, KernelMode::Nngp);
        let x = fixed_image(6);
        let k = conv_kernel(&x, &x, &spec).unwrap();
        assert!(k > 0.0);
    }

    #[test]
    fn conv_gap_is_translation_invariant() {
        for mode in [KernelMode::Nngp, KernelMode::Ntk] {
            let spec = KernelSpec::conv(Readout::Gap, mode);
            let x = fixed_image(6);
            let shifted = translate_rows(&x, 6, 2);
            let k_self = conv_kernel(&x, &x, &spec).unwrap();
            let k_cross = conv_kernel(&x, &shifted, &spec).unwrap();
            assert!((k_self - k_cross).abs() < 1e-12, "{k_self} vs {k_cross}");
        }
    }

    #[test]
    fn conv_fc_single_pixel_orbit_vanishes_beyond_filter_reach() {
        let side = 8;
        let mut img = vec![0.0; side * side];
        img[2 * side + 5] = 1.0;
        let spec = KernelSpec::conv(Readout::Fc, KernelMode::Ntk);
        for shift in 0..side {
            let k = conv_kernel(&img, &translate_rows(&img, side, shift), &spec).unwrap();
            let reach = shift.min(side - shift);
            if reach > 2 {
                assert!(k.abs() < 1e-14, "shift {shift} leaked {k}");
            } else if shift == 0 {
                assert!(k > 0.0);
            }
        }
    }

    #[test]
    fn conv_rejects_bad_stride_and_shape() {
        let spec = KernelSpec::Conv {
            filter_size: 3,
            stride: 3,
            readout: Readout::Fc,
            weight_std: 1.0,
            mode: KernelMode::Nngp,
        };
        let img = fixed_image(8);
        assert!(matches!(conv_kernel(&img, &img, &spec), Err(Error::StrideMismatch { .. })));
        let not_square = vec![0.0; 12];
        let spec = KernelSpec::conv(Readout::Fc, KernelMode::Nngp);
        assert!(matches!(
            conv_kernel(&not_square, &not_square, &spec),
            Err(Error::NotSquareImage(12))
        ));
    }

    #[test]
    fn gram_single_point() {
        let spec = KernelSpec::rbf(1.0);
        let g = gram(&[vec![1.0, 2.0]], &spec).unwrap();
        assert_eq!(g.size(), 1);
        assert_eq!(g.values[(0, 0)], 1.0);
    }

    #[test]
    fn gram_rbf_over_interleaved_circle_is_circulant() {
        // Two interleaved orbits of C_8 on the unit circle in the yz-plane.
        let n = 8;
        let theta = 2.0 * std::f64::consts::PI / n as f64;
        let mut points = Vec::new();
        for i in 0..n {
            for half in [0.0, 0.5] {
                let a = (i as f64 + half) * theta;
                points.push(vec![0.0, a.cos(), a.sin()]);
            }
        }
        let g = gram(&points, &KernelSpec::rbf(1.0)).unwrap();
        let (ok, dev) = crate::spectral::is_circulant(&g.values, 1e-10);
        assert!(ok, "deviation {dev}");
    }

    #[test]
    fn gram_mlp_over_single_orbit_is_circulant() {
        let n = 12;
        let theta = 2.0 * std::f64::consts::PI / n as f64;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = i as f64 * theta;
                // Orthogonal C_n action on R^3 fixing the x-axis.
                vec![0.6, 0.8 * a.cos(), 0.8 * a.sin()]
            })
            .collect();
        let g = gram(&points, &KernelSpec::mlp(1, KernelMode::Ntk)).unwrap();
        let (ok, dev) = crate::spectral::is_circulant(&g.values, 1e-10);
        assert!(ok, "deviation {dev}");
    }
}
