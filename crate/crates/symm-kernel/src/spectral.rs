//! Circulant Gram-matrix analysis in the Fourier domain.
//!
//! For a dataset of two interleaved orbits with alternating +-1 labels whose
//! Gram matrix is circulant, the leave-one-out kernel regression error has
//! the closed form
//!
//! ```text
//! eps = (1/lambda_N) / <1/lambda>
//! ```
//!
//! where `lambda_j` is the (unnormalized) DFT of the first Gram row,
//! `lambda_N` the Nyquist eigenvalue, and the mean runs over all `2N`
//! frequencies. The error convention throughout is
//! `eps = (mu - prediction)/mu`: 0 is perfect recovery of the held-out
//! label, 1 is a prior-mean (zero) prediction, and values above 1 signal a
//! sign flip. This module provides the closed form, its multi-missing-point
//! generalization, the diagonal-averaging projection onto circulants, and
//! exact Gaussian-process regression as the independent reference.

use num_complex::Complex;

use crate::linalg::{solve, CMat, Mat};
use crate::{Error, Result, Scalar};

/// Relative threshold below which an eigenvalue counts as exactly zero.
///
/// Distinguishes genuine rank deficiency (translation orbits under a GAP
/// readout) from merely small high frequencies on dense orbits.
pub const ZERO_EIGENVALUE_REL_TOL: f64 = 1e-10;

/// Unnormalized DFT spectrum of a circulant matrix, indexed by frequency.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<T>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// The Nyquist eigenvalue `lambda_N` of a length-2N spectrum.
    pub fn nyquist(&self) -> T {
        self.eigenvalues[self.eigenvalues.len() / 2]
    }

    fn zero_threshold(&self) -> T {
        let max = self.eigenvalues.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        max * T::c(ZERO_EIGENVALUE_REL_TOL)
    }
}

/// Result of the closed-form error evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SpectralResult<T> {
    /// The predicted error `(mu - prediction)/mu`; 0 when `diverged`.
    pub epsilon: T,
    /// `1/lambda_N`.
    pub numerator: T,
    /// `<1/lambda>`, infinite when `diverged`.
    pub denominator: T,
    /// Set when some non-Nyquist eigenvalue is numerically zero, making the
    /// denominator diverge (the rank-deficient, perfect-generalization case).
    pub diverged: bool,
}

/// Whether `k` is circulant (`K[i][j] = c[(i-j) mod M]`, `c` the first row)
/// within `tol`, along with the largest deviation observed.
pub fn is_circulant<T: Scalar>(k: &Mat<T>, tol: T) -> (bool, T) {
    assert!(k.is_square(), "is_circulant needs a square matrix");
    let m = k.n_rows();
    let first = k.row(0);
    let mut dev = T::zero();
    for i in 0..m {
        for j in 0..m {
            dev = dev.max((k[(i, j)] - first[(m + i - j) % m]).abs());
        }
    }
    (dev <= tol, dev)
}

/// Diagonal-wise average: the projection of an even-size square matrix onto
/// circulant matrices, `out[i][j] = mean_k K[(i+k) mod M][(j+k) mod M]`.
///
/// The output is exactly circulant; circulant inputs are fixed points.
pub fn circularize<T: Scalar>(k: &Mat<T>) -> Result<Mat<T>> {
    if !k.is_square() {
        return Err(Error::NotSquare { rows: k.n_rows(), cols: k.n_cols() });
    }
    let m = k.n_rows();
    if !m.is_multiple_of(2) {
        return Err(Error::OddSize(m));
    }
    let inv_m = T::one() / T::c(m as f64);
    let mut diag_mean = vec![T::zero(); m];
    for (d, slot) in diag_mean.iter_mut().enumerate() {
        let mut acc = T::zero();
        for i in 0..m {
            acc += k[(i, (i + d) % m)];
        }
        *slot = acc * inv_m;
    }
    Ok(Mat::from_fn(m, m, |i, j| diag_mean[(m + j - i) % m]))
}

/// Unnormalized DFT of the first row of a circulant matrix:
/// `lambda_j = sum_k c_k exp(-2 pi i j k / M)`.
///
/// For the symmetric rows produced by Gram matrices the spectrum is real;
/// the real part is returned.
pub fn circulant_spectrum<T: Scalar>(first_row: &[T]) -> Spectrum<T> {
    let m = first_row.len();
    let mut eigenvalues = Vec::with_capacity(m);
    let step = -T::c(2.0) * T::PI() / T::c(m as f64);
    for j in 0..m {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (k, &c) in first_row.iter().enumerate() {
            let angle = step * T::c((j * k % m) as f64);
            acc += Complex::from_polar(c, angle);
        }
        eigenvalues.push(acc.re);
    }
    Spectrum { eigenvalues }
}

/// Closed-form leave-one-out error `eps = (1/lambda_N) / <1/lambda>` on a
/// length-2N spectrum with alternating labels.
///
/// Zero eigenvalues away from the Nyquist frequency make the denominator
/// diverge: the result is flagged `diverged` with `epsilon = 0` (perfect
/// generalization). A zero Nyquist eigenvalue means the two classes are
/// collapsed in kernel space and is an error.
pub fn spectral_error<T: Scalar>(spectrum: &Spectrum<T>) -> Result<SpectralResult<T>> {
    let m = spectrum.len();
    if m < 2 {
        return Err(Error::TooFewPoints { min: 2, got: m });
    }
    if !m.is_multiple_of(2) {
        return Err(Error::OddSize(m));
    }
    let nyq = m / 2;
    let thresh = spectrum.zero_threshold();
    let lambda_n = spectrum.eigenvalues[nyq];
    if lambda_n.abs() <= thresh {
        return Err(Error::DegenerateNyquist);
    }
    let numerator = T::one() / lambda_n;
    let diverged = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .any(|(j, v)| j != nyq && v.abs() <= thresh);
    if diverged {
        return Ok(SpectralResult {
            epsilon: T::zero(),
            numerator,
            denominator: T::infinity(),
            diverged: true,
        });
    }
    let denominator =
        spectrum.eigenvalues.iter().map(|&v| T::one() / v).sum::<T>() / T::c(m as f64);
    Ok(SpectralResult { epsilon: numerator / denominator, numerator, denominator, diverged: false })
}

/// Predictions at a set of missing indices of an interleaved two-class
/// circulant problem, via the p x p linear system
///
/// ```text
/// A[j,m] = (1/2N) sum_l w^(l(j-m)) / lambda_l
/// b[j]   = mu ( (1/2N) sum_{n in missing} (-1)^n sum_k w^(k(j-n))/lambda_k
///               - (-1)^j / lambda_N )
/// ```
///
/// with `w = exp(-2 pi i / 2N)`. Non-missing points carry the alternating
/// labels `mu * (-1)^i`. Imaginary residue above 1e-8 of the solution is a
/// bug guard; only real parts are returned.
pub fn multi_point_error<T: Scalar>(
    spectrum: &Spectrum<T>,
    missing: &[usize],
    mu: T,
) -> Result<Vec<T>> {
    let m = spectrum.len();
    if !m.is_multiple_of(2) {
        return Err(Error::OddSize(m));
    }
    if missing.is_empty() {
        return Err(Error::TooFewPoints { min: 1, got: 0 });
    }
    if missing.iter().any(|&i| i >= m) {
        return Err(Error::BadPartition { size: m });
    }
    let thresh = spectrum.zero_threshold();
    if spectrum.eigenvalues.iter().any(|v| v.abs() <= thresh) {
        return Err(Error::Underdetermined);
    }
    let nyq = m / 2;
    let inv_m = T::one() / T::c(m as f64);
    let step = -T::c(2.0) * T::PI() / T::c(m as f64);
    // w_sum(d) = (1/2N) sum_l w^(l d) / lambda_l, the inverse-spectrum
    // convolution kernel; depends only on d mod 2N.
    let w_sum: Vec<Complex<T>> = (0..m)
        .map(|d| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (l, &lam) in spectrum.eigenvalues.iter().enumerate() {
                let angle = step * T::c((l * d % m) as f64);
                acc += Complex::from_polar(T::one() / lam, angle);
            }
            acc * Complex::new(inv_m, T::zero())
        })
        .collect();
    let p = missing.len();
    let a = CMat::from_fn(p, p, |ji, mi| w_sum[(m + missing[ji] - missing[mi]) % m]);
    let lambda_n = spectrum.eigenvalues[nyq];
    let sign = |i: usize| if i.is_multiple_of(2) { T::one() } else { -T::one() };
    let b: Vec<Complex<T>> = missing
        .iter()
        .map(|&j| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &n in missing {
                acc += w_sum[(m + j - n) % m] * Complex::new(sign(n), T::zero());
            }
            acc -= Complex::new(sign(j) / lambda_n, T::zero());
            acc * Complex::new(mu, T::zero())
        })
        .collect();
    let solution = a.solve(&b)?;
    let worst_imag = solution.iter().fold(T::zero(), |acc, z| acc.max(z.im.abs()));
    debug_assert!(
        worst_imag < T::c(1e-8),
        "multi-point predictions should be real, imaginary residue {worst_imag}"
    );
    Ok(solution.into_iter().map(|z| z.re).collect())
}

/// Exact zero-mean GP regression with a declared diagonal jitter.
#[derive(Debug, Clone)]
pub struct GpRegression<T> {
    /// Posterior mean at each test index, in `test` order.
    pub predictions: Vec<T>,
    /// The jitter added to the training Gram diagonal before solving:
    /// `1e-10 * trace(K_train) / |train|`.
    pub jitter: T,
}

/// Zero-mean GP posterior mean at `test` indices conditioned on `train`.
///
/// `train` and `test` must partition `0..M`. The jitter policy is fixed and
/// reported in the output so downstream comparisons are reproducible.
pub fn gp_regress<T: Scalar>(
    gram: &Mat<T>,
    labels: &[T],
    train: &[usize],
    test: &[usize],
) -> Result<GpRegression<T>> {
    let m = gram.n_rows();
    if !gram.is_square() {
        return Err(Error::NotSquare { rows: gram.n_rows(), cols: gram.n_cols() });
    }
    if labels.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: labels.len() });
    }
    let mut seen = vec![false; m];
    for &i in train.iter().chain(test) {
        if i >= m || seen[i] {
            return Err(Error::BadPartition { size: m });
        }
        seen[i] = true;
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::BadPartition { size: m });
    }
    let mut k_train = gram.submatrix(train);
    let jitter = k_train.trace() * T::c(1e-10) / T::c(train.len() as f64);
    for i in 0..train.len() {
        k_train[(i, i)] += jitter;
    }
    let y_train: Vec<T> = train.iter().map(|&i| labels[i]).collect();
    let alpha = solve(&k_train, &y_train)?;
    let predictions = test
        .iter()
        .map(|&t| train.iter().zip(&alpha).map(|(&i, &a)| gram[(t, i)] * a).sum())
        .collect();
    Ok(GpRegression { predictions, jitter })
}

/// Mean absolute leave-one-out error over dropping index 0 (an orbit-A
/// sample) and then index 1 (an orbit-B sample) of an interleaved two-orbit
/// Gram matrix, each conditioned on the remaining points.
pub fn symmetrized_error<T: Scalar>(gram: &Mat<T>, labels: &[T]) -> Result<T> {
    let m = gram.n_rows();
    if m < 2 {
        return Err(Error::TooFewPoints { min: 2, got: m });
    }
    let mut total = T::zero();
    for drop in 0..2 {
        let train: Vec<usize> = (0..m).filter(|&i| i != drop).collect();
        let fit = gp_regress(gram, labels, &train, &[drop])?;
        total += (labels[drop] - fit.predictions[0]).abs();
    }
    Ok(total * T::c(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circulant_from_row(row: &[f64]) -> Mat<f64> {
        let m = row.len();
        Mat::from_fn(m, m, |i, j| row[(m + j - i) % m])
    }

    #[test]
    fn identity_is_circulant() {
        let (ok, dev) = is_circulant(&Mat::<f64>::identity(5), 0.0);
        assert!(ok);
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn asymmetric_matrix_is_not_circulant() {
        let k = Mat::from_rows(&[vec![1.0f64, 2.0], vec![3.0, 1.0]]);
        let (ok, dev) = is_circulant(&k, 0.999);
        assert!(!ok);
        assert!((dev - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circularize_fixes_circulant_input() {
        let k = circulant_from_row(&[2.0f64, 0.5, 0.1, 0.5]);
        let out = circularize(&k).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((out[(i, j)] - k[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn circularize_two_by_two() {
        // [[a,b],[b,c]] -> [[(a+c)/2, b],[b,(a+c)/2]]
        let k = Mat::from_rows(&[vec![3.0f64, 1.0], vec![1.0, 7.0]]);
        let out = circularize(&k).unwrap();
        assert!((out[(0, 0)] - 5.0).abs() < 1e-15);
        assert!((out[(1, 1)] - 5.0).abs() < 1e-15);
        assert!((out[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circularize_rejects_odd_size() {
        assert!(matches!(circularize(&Mat::<f64>::identity(3)), Err(Error::OddSize(3))));
    }

    #[test]
    fn circularize_output_is_circulant_and_idempotent() {
        // Fixed symmetric 8x8, no structure.
        let mut k = Mat::from_fn(8, 8, |i, j| ((i * 131 + j * 17 + (i * j) % 5) % 23) as f64 / 7.0);
        k.symmetrize();
        let once = circularize(&k).unwrap();
        let (ok, _) = is_circulant(&once, 1e-12);
        assert!(ok);
        let twice = circularize(&once).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((once[(i, j)] - twice[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn spectrum_of_delta_row_is_flat() {
        let s = circulant_spectrum::<f64>(&[1.0, 0.0, 0.0, 0.0]);
        for v in &s.eigenvalues {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_of_hand_checked_row() {
        let s = circulant_spectrum::<f64>(&[3.0, 1.0, 0.5, 1.0]);
        let want = [5.5, 2.5, 1.5, 2.5];
        for (v, w) in s.eigenvalues.iter().zip(want) {
            assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_of_constant_row_concentrates_at_zero_frequency() {
        let s = circulant_spectrum::<f64>(&[1.0; 6]);
        assert!((s.eigenvalues[0] - 6.0).abs() < 1e-12);
        for v in &s.eigenvalues[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn flat_spectrum_gives_unit_error() {
        let s = Spectrum::<f64> { eigenvalues: vec![2.0; 8] };
        let r = spectral_error(&s).unwrap();
        assert!((r.epsilon - 1.0).abs() < 1e-14);
        assert!(!r.diverged);
    }

    #[test]
    fn hand_checked_error_value() {
        // lambda = [5.5, 2.5, 1.5, 2.5]: eps = (1/1.5)/mean(1/lambda) = 55/34.
        let s = circulant_spectrum::<f64>(&[3.0, 1.0, 0.5, 1.0]);
        let r = spectral_error(&s).unwrap();
        assert!((r.epsilon - 55.0 / 34.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_error_is_one_plus_k() {
        let s = circulant_spectrum::<f64>(&[1.0, 0.5]);
        let r = spectral_error(&s).unwrap();
        assert!((r.epsilon - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_mid_eigenvalue_diverges_to_zero_error() {
        let s = Spectrum::<f64> { eigenvalues: vec![4.0, 0.0, 2.0, 0.0] };
        let r = spectral_error(&s).unwrap();
        assert!(r.diverged);
        assert_eq!(r.epsilon, 0.0);
        assert!(r.denominator.is_infinite());
    }

    #[test]
    fn zero_nyquist_is_degenerate() {
        let s = Spectrum::<f64> { eigenvalues: vec![4.0, 1.0, 0.0, 1.0] };
        assert!(matches!(spectral_error(&s), Err(Error::DegenerateNyquist)));
    }

    #[test]
    fn scale_invariance_of_spectral_error() {
        let s = circulant_spectrum::<f64>(&[3.0, 1.0, 0.5, 1.0]);
        let scaled = Spectrum { eigenvalues: s.eigenvalues.iter().map(|v| v * 37.5).collect() };
        let a = spectral_error(&s).unwrap().epsilon;
        let b = spectral_error(&scaled).unwrap().epsilon;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn multi_point_single_missing_recovers_closed_form() {
        let row = [3.0f64, 1.0, 0.5, 1.0, 0.4, 1.0];
        let s = circulant_spectrum(&row);
        let eps = spectral_error(&s).unwrap().epsilon;
        let mu = 1.0f64;
        let preds = multi_point_error(&s, &[0], mu).unwrap();
        assert!((preds[0] - mu * (1.0 - eps)).abs() < 1e-10);
    }

    #[test]
    fn multi_point_identity_spectrum_predicts_prior_mean() {
        let s = Spectrum::<f64> { eigenvalues: vec![1.0; 8] };
        let preds = multi_point_error(&s, &[0, 3, 5], 1.0).unwrap();
        for p in preds {
            assert!(p.abs() < 1e-12);
        }
    }

    #[test]
    fn gp_interpolates_duplicate_row() {
        // Test point 0 duplicates train point 2.
        let pts = [[0.0f64, 0.0], [1.0, 0.5], [0.0, 0.0], [0.3, -0.2]];
        let k = Mat::from_fn(4, 4, |i, j| {
            let d2: f64 = (0..2).map(|c| (pts[i][c] - pts[j][c]).powi(2)).sum();
            (-d2).exp()
        });
        let labels = [0.0, 1.0, -1.0, 0.5];
        let fit = gp_regress(&k, &labels, &[1, 2, 3], &[0]).unwrap();
        assert!((fit.predictions[0] - labels[2]).abs() < 1e-6);
    }

    #[test]
    fn gp_two_point_conditioning() {
        let k = Mat::from_rows(&[vec![1.0f64, 0.3], vec![0.3, 1.0]]);
        let fit = gp_regress(&k, &[0.0, -1.0], &[1], &[0]).unwrap();
        assert!((fit.predictions[0] - (-0.3)).abs() < 1e-9);
    }

    #[test]
    fn gp_zero_labels_zero_predictions() {
        let k = circulant_from_row(&[2.0f64, 0.5, 0.2, 0.5]);
        let fit = gp_regress(&k, &[0.0; 4], &[1, 2, 3], &[0]).unwrap();
        assert_eq!(fit.predictions[0], 0.0);
    }

    #[test]
    fn gp_rejects_bad_partition() {
        let k = Mat::<f64>::identity(3);
        assert!(matches!(
            gp_regress(&k, &[1.0, 1.0, 1.0], &[0, 1], &[1, 2]),
            Err(Error::BadPartition { .. })
        ));
        assert!(matches!(
            gp_regress(&k, &[1.0, 1.0, 1.0], &[0], &[2]),
            Err(Error::BadPartition { .. })
        ));
    }

    #[test]
    fn symmetrized_error_matches_spectral_on_circulant_gram() {
        // A positive-definite symmetric circulant row over 2N = 8 points.
        let row = [4.0f64, 1.2, 0.6, 0.3, 0.25, 0.3, 0.6, 1.2];
        let gram = circulant_from_row(&row);
        let labels: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let eps = spectral_error(&circulant_spectrum(&row)).unwrap().epsilon;
        let sym = symmetrized_error(&gram, &labels).unwrap();
        assert!((sym - eps.abs()).abs() < 1e-8, "sym {sym} vs eps {eps}");
    }

    #[test]
    fn symmetrized_error_near_identity_gram_no_class_structure() {
        let mut gram = Mat::<f64>::identity(6);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    gram[(i, j)] = 1e-4;
                }
            }
        }
        let labels = [1.0; 6];
        let err = symmetrized_error(&gram, &labels).unwrap();
        assert!((err - 1.0).abs() < 1e-3);
    }

    #[test]
    fn f32_smoke_spectral_error() {
        let s = circulant_spectrum(&[3.0f32, 1.0, 0.5, 1.0]);
        let r = spectral_error(&s).unwrap();
        assert!((r.epsilon - 55.0 / 34.0).abs() < 1e-5);
    }
}
