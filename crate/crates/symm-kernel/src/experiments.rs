//! Experiment drivers: parameter sweeps, orbit-pair scatters, multi-seed and
//! multi-class aggregation, equivariance property checks, and the
//! non-abelian sweep.
//!
//! Every driver is a pure function of its configuration and RNG seed; trials
//! run in parallel but aggregate in trial order, so outputs are bit-stable
//! across runs and thread schedules.

use rayon::prelude::*;

use crate::datasets::{
    circular_dataset, d4c2_dataset, orbit_geometry, rotation_orbit, translation_orbit, Image,
    OrbitGeometry, PairedOrbitDataset,
};
use crate::groups::{general_spectral_error, irreps, Irrep};
use crate::kernels::{gram, GramMatrix, KernelMode, KernelSpec, Readout};
use crate::linalg::{numerical_rank, Mat};
use crate::spectral::{
    circulant_spectrum, circularize, gp_regress, is_circulant, spectral_error, symmetrized_error,
    SpectralResult,
};
use crate::{Error, Result, Scalar};

/// One row of a sweep: the independent variable, the spectral prediction,
/// the exact regression error on the same Gram matrix, and the two spectrum
/// summaries entering the closed form.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow<T> {
    pub x: T,
    pub spectral: T,
    pub exact: T,
    /// 1/lambda_N.
    pub lambda_n_inv: T,
    /// <1/lambda> over all frequencies (infinite when diverged).
    pub mean_inv_lambda: T,
}

/// One orbit-pair trial of the scatter experiments.
#[derive(Debug, Clone)]
pub struct PairTrialResult<T> {
    pub spectral_epsilon: T,
    pub exact_epsilon: T,
    /// Removals (out of 2) where the exact prediction's sign disagrees with
    /// the held-out label; an exactly zero prediction counts as an error.
    pub classification_errors: u8,
    pub geometry: OrbitGeometry<T>,
    /// Nyquist eigenvalue of the circularized pair Gram (correlates with the
    /// squared centroid separation).
    pub lambda_n: T,
    /// Mean inverse eigenvalue (correlates with the inverse orbit radius).
    pub mean_inv_lambda: T,
    /// Identifier of seed A: (class, index within class).
    pub seed_a: (usize, usize),
    /// Identifier of seed B.
    pub seed_b: (usize, usize),
}

/// Exact leave-out error at `index` for nonzero labels:
/// `1 - prediction/label`.
fn leave_out_error<T: Scalar>(gram: &Mat<T>, labels: &[T], index: usize) -> Result<T> {
    let train: Vec<usize> = (0..gram.n_rows()).filter(|&i| i != index).collect();
    let fit = gp_regress(gram, labels, &train, &[index])?;
    Ok(T::one() - fit.predictions[0] / labels[index])
}

fn sweep_point<T: Scalar>(
    kernel: &KernelSpec<T>,
    n_points: usize,
    x: T,
    delta: T,
) -> Result<SweepRow<T>> {
    let ds = circular_dataset(n_points, delta)?;
    let mut g = gram(&ds.interleaved, kernel)?;
    g.ordering = "interleaved-pair".to_string();
    let spectrum = circulant_spectrum(g.values.row(0));
    let spec_result = spectral_error(&spectrum)?;
    let exact = leave_out_error(&g.values, &ds.labels, 0)?;
    Ok(SweepRow {
        x,
        spectral: spec_result.epsilon,
        exact,
        lambda_n_inv: spec_result.numerator,
        mean_inv_lambda: spec_result.denominator,
    })
}

/// Spectral vs exact error over the circular dataset as the class
/// separation varies; RBF or MLP kernels.
pub fn sweep_delta<T: Scalar>(
    kernel: &KernelSpec<T>,
    n_points: usize,
    deltas: &[T],
) -> Result<Vec<SweepRow<T>>> {
    if matches!(kernel, KernelSpec::Conv { .. }) {
        return Err(Error::InvalidParameter("circular sweeps take an Rbf or Mlp kernel"));
    }
    deltas.par_iter().map(|&delta| sweep_point(kernel, n_points, delta, delta)).collect()
}

/// Spectral vs exact error as the number of points per class varies.
pub fn sweep_n<T: Scalar>(
    kernel: &KernelSpec<T>,
    delta: T,
    n_grid: &[usize],
) -> Result<Vec<SweepRow<T>>> {
    if matches!(kernel, KernelSpec::Conv { .. }) {
        return Err(Error::InvalidParameter("circular sweeps take an Rbf or Mlp kernel"));
    }
    n_grid.par_iter().map(|&n| sweep_point(kernel, n, T::c(n as f64), delta)).collect()
}

/// Builds the interleaved rotation-orbit pair of two seed images
/// (sphere-normalized seeds, renormalized frames).
pub fn rotated_pair<T: Scalar>(
    seed_a: &Image<T>,
    seed_b: &Image<T>,
    n_rot: usize,
) -> Result<PairedOrbitDataset<T>> {
    let orbit_a = rotation_orbit(&seed_a.normalized()?, n_rot, true)?;
    let orbit_b = rotation_orbit(&seed_b.normalized()?, n_rot, true)?;
    PairedOrbitDataset::interleave(orbit_a, orbit_b)
}

/// Spectral error of one interleaved pair Gram matrix after circularization.
pub fn pair_spectral_result<T: Scalar>(gram: &GramMatrix<T>) -> Result<SpectralResult<T>> {
    let circ = circularize(&gram.values)?;
    spectral_error(&circulant_spectrum(circ.row(0)))
}

fn run_pair_trial<T: Scalar>(
    kernel: &KernelSpec<T>,
    seed_a: &Image<T>,
    seed_b: &Image<T>,
    ids: ((usize, usize), (usize, usize)),
    n_rot: usize,
) -> Result<PairTrialResult<T>> {
    let pair = rotated_pair(seed_a, seed_b, n_rot)?;
    let mut g = gram(&pair.interleaved, kernel)?;
    g.ordering = "interleaved-pair".to_string();
    let spectral = pair_spectral_result(&g)?;
    let exact = symmetrized_error(&g.values, &pair.labels)?;
    let mut classification_errors = 0u8;
    for drop in 0..2 {
        let train: Vec<usize> = (0..g.size()).filter(|&i| i != drop).collect();
        let fit = gp_regress(&g.values, &pair.labels, &train, &[drop])?;
        if !(fit.predictions[0] * pair.labels[drop] > T::zero()) {
            classification_errors += 1;
        }
    }
    Ok(PairTrialResult {
        spectral_epsilon: spectral.epsilon,
        exact_epsilon: exact,
        classification_errors,
        geometry: orbit_geometry(&pair),
        lambda_n: T::one() / spectral.numerator,
        mean_inv_lambda: spectral.denominator,
        seed_a: ids.0,
        seed_b: ids.1,
    })
}

/// A pair-scatter task: two identified seed images.
pub type PairTask<'a, T> = ((usize, usize), &'a Image<T>, (usize, usize), &'a Image<T>);

/// Scatter experiment: per seed pair, the circularized spectral error
/// against the symmetrized exact error of the raw Gram, with input-space
/// geometry recorded.
pub fn pair_scatter<T: Scalar>(
    kernel: &KernelSpec<T>,
    pairs: &[PairTask<'_, T>],
    n_rot: usize,
) -> Result<Vec<PairTrialResult<T>>> {
    pairs
        .par_iter()
        .map(|&(id_a, img_a, id_b, img_b)| {
            run_pair_trial(kernel, img_a, img_b, (id_a, id_b), n_rot)
        })
        .collect()
}

/// Result of the multi-seed driver.
#[derive(Debug, Clone, Copy)]
pub struct MultiSeedResult<T> {
    /// Mean spectral error over all cross-class orbit pairs.
    pub avg_spectral: T,
    /// Symmetrized exact error on the full multi-orbit dataset: one angle
    /// removed from every orbit of one class, averaged over missing points,
    /// then averaged over the two class roles.
    pub exact_symmetrized: T,
}

/// Pairwise-averaged spectral error against the exact multi-orbit error.
pub fn multi_seed_error<T: Scalar>(
    kernel: &KernelSpec<T>,
    class_a_seeds: &[Image<T>],
    class_b_seeds: &[Image<T>],
    n_rot: usize,
) -> Result<MultiSeedResult<T>> {
    if class_a_seeds.is_empty() || class_b_seeds.is_empty() {
        return Err(Error::TooFewPoints { min: 1, got: 0 });
    }
    let pairs: Vec<(usize, usize)> = (0..class_a_seeds.len())
        .flat_map(|i| (0..class_b_seeds.len()).map(move |j| (i, j)))
        .collect();
    let spectral: Result<Vec<T>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let pair = rotated_pair(&class_a_seeds[i], &class_b_seeds[j], n_rot)?;
            let g = gram(&pair.interleaved, kernel)?;
            Ok(pair_spectral_result(&g)?.epsilon)
        })
        .collect();
    let spectral = spectral?;
    let avg_spectral = spectral.iter().copied().sum::<T>() / T::c(spectral.len() as f64);

    // Full dataset: all orbits of both classes, labels +1 for A and -1 for B.
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut angle_zero_of = vec![Vec::new(), Vec::new()];
    for (class, seeds) in [class_a_seeds, class_b_seeds].into_iter().enumerate() {
        let label = if class == 0 { T::one() } else { -T::one() };
        for seed in seeds {
            let orbit = rotation_orbit(&seed.normalized()?, n_rot, true)?;
            angle_zero_of[class].push(points.len());
            for p in orbit.points {
                points.push(p);
                labels.push(label);
            }
        }
    }
    let g = gram(&points, kernel)?;
    let mut exact_total = T::zero();
    for missing in &angle_zero_of {
        let train: Vec<usize> = (0..points.len()).filter(|i| !missing.contains(i)).collect();
        let fit = gp_regress(&g.values, &labels, &train, missing)?;
        let err: T = missing
            .iter()
            .zip(&fit.predictions)
            .map(|(&i, &p)| (labels[i] - p).abs())
            .sum::<T>()
            / T::c(missing.len() as f64);
        exact_total += err;
    }
    Ok(MultiSeedResult { avg_spectral, exact_symmetrized: exact_total * T::c(0.5) })
}

/// One-versus-many spectral classification accuracy per orbit-density value.
///
/// For each leave-out orbit, the spectral prediction `1 - eps` is averaged
/// over the pairs formed with every seed of an opposing class; the orbit
/// counts as correct only when every class-wise averaged prediction is
/// strictly positive.
pub fn multi_class_accuracy<T: Scalar>(
    kernel: &KernelSpec<T>,
    corpus: &[Vec<Image<T>>],
    n_rot_grid: &[usize],
) -> Result<Vec<(usize, T)>> {
    let n_classes = corpus.len();
    if n_classes < 2 {
        return Err(Error::TooFewPoints { min: 2, got: n_classes });
    }
    let mut out = Vec::with_capacity(n_rot_grid.len());
    for &n_rot in n_rot_grid {
        // The circularized spectrum is symmetric under orbit swap, so the
        // pair prediction is cached per unordered cross-class pair.
        let mut tasks = Vec::new();
        for ca in 0..n_classes {
            for cb in (ca + 1)..n_classes {
                for ia in 0..corpus[ca].len() {
                    for ib in 0..corpus[cb].len() {
                        tasks.push((ca, ia, cb, ib));
                    }
                }
            }
        }
        let predictions: Result<Vec<T>> = tasks
            .par_iter()
            .map(|&(ca, ia, cb, ib)| {
                let pair = rotated_pair(&corpus[ca][ia], &corpus[cb][ib], n_rot)?;
                let g = gram(&pair.interleaved, kernel)?;
                Ok(T::one() - pair_spectral_result(&g)?.epsilon)
            })
            .collect();
        let lookup: std::collections::HashMap<(usize, usize, usize, usize), T> =
            tasks.into_iter().zip(predictions?).collect();
        let pred_of = |ca: usize, ia: usize, cb: usize, ib: usize| -> T {
            if ca < cb {
                lookup[&(ca, ia, cb, ib)]
            } else {
                lookup[&(cb, ib, ca, ia)]
            }
        };
        let mut correct = 0usize;
        let mut total = 0usize;
        for ca in 0..n_classes {
            for ia in 0..corpus[ca].len() {
                total += 1;
                let all_positive = (0..n_classes).filter(|&cb| cb != ca).all(|cb| {
                    let mean: T = (0..corpus[cb].len())
                        .map(|ib| pred_of(ca, ia, cb, ib))
                        .sum::<T>()
                        / T::c(corpus[cb].len() as f64);
                    mean > T::zero()
                });
                if all_positive {
                    correct += 1;
                }
            }
        }
        out.push((n_rot, T::c(correct as f64) / T::c(total as f64)));
    }
    Ok(out)
}

/// Structural checks of the one-layer conv kernels over translation and
/// cardinal-rotation orbits.
#[derive(Debug, Clone)]
pub struct EquivarianceReport<T> {
    /// Circulance deviation of the FC-readout Gram over a translation orbit.
    pub fc_translation_dev: T,
    /// Circulance deviation of the FC-readout Gram over a C_4 rotation orbit.
    pub fc_rotation_dev: T,
    /// Largest entry spread of the GAP-readout Gram over a translation orbit.
    pub gap_translation_spread: T,
    /// Numerical rank of the GAP-readout Gram over a C_4 rotation orbit of a
    /// two-pixel seed.
    pub gap_rotation_rank: usize,
    /// Largest entry spread of that same Gram (non-constancy witness).
    pub gap_rotation_spread: T,
    /// Numerical rank of the FC-readout Gram over a translation orbit of a
    /// single-pixel seed.
    pub fc_single_pixel_rank: usize,
    /// Spectral result on the interleaved two-orbit translation dataset
    /// under GAP (expected: diverged, epsilon 0).
    pub gap_pair_spectral: SpectralResult<T>,
    /// Exact GP leave-out error magnitude on the same dataset.
    pub gap_pair_exact: T,
}

fn entry_spread<T: Scalar>(m: &Mat<T>) -> T {
    let mut lo = T::infinity();
    let mut hi = -T::infinity();
    for i in 0..m.n_rows() {
        for j in 0..m.n_cols() {
            lo = lo.min(m[(i, j)]);
            hi = hi.max(m[(i, j)]);
        }
    }
    hi - lo
}

/// Deterministic dense test image derived from a seed.
fn seeded_image<T: Scalar>(side: usize, seed: u64) -> Image<T> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..side * side).map(|_| T::c(rng.random::<f64>())).collect();
    Image::new(side, pixels).expect("square by construction")
}

/// Runs the equivariance property checks at the given mode on seeded images
/// of the given side.
pub fn equivariance_checks<T: Scalar>(
    mode: KernelMode,
    side: usize,
    rng_seed: u64,
) -> Result<EquivarianceReport<T>> {
    let fc = KernelSpec::<T>::conv(Readout::Fc, mode);
    let gap = KernelSpec::<T>::conv(Readout::Gap, mode);

    let generic = seeded_image::<T>(side, rng_seed);
    let orbit_t = translation_orbit(&generic);
    let fc_translation = gram(&orbit_t.points, &fc)?;
    let (_, fc_translation_dev) = is_circulant(&fc_translation.values, T::zero());

    let orbit_r = cardinal_orbit_points(&generic);
    let fc_rotation = gram(&orbit_r, &fc)?;
    let (_, fc_rotation_dev) = is_circulant(&fc_rotation.values, T::zero());

    let gap_translation = gram(&orbit_t.points, &gap)?;
    let gap_translation_spread = entry_spread(&gap_translation.values);

    // Two off-center pixels within one filter reach: the GAP Gram over the
    // rotation orbit is circulant but neither constant nor rank-deficient.
    let mut two_pixel = Image::<T>::zeros(side);
    two_pixel.set(1, 1, T::one());
    two_pixel.set(1, 2, T::c(0.5));
    let gap_rot = gram(&cardinal_orbit_points(&two_pixel), &gap)?;
    let gap_rotation_rank = numerical_rank(&gap_rot.values, T::c(1e-10));
    let gap_rotation_spread = entry_spread(&gap_rot.values);

    let mut single_pixel = Image::<T>::zeros(side);
    single_pixel.set(2, side / 2, T::one());
    let fc_single = gram(&translation_orbit(&single_pixel).points, &fc)?;
    let fc_single_pixel_rank = numerical_rank(&fc_single.values, T::c(1e-10));

    // Interleaved two-orbit translation dataset under GAP: rank-deficient,
    // so the spectral denominator diverges and exact regression is perfect.
    let second = seeded_image::<T>(side, rng_seed.wrapping_add(1));
    let pair =
        PairedOrbitDataset::interleave(translation_orbit(&generic), translation_orbit(&second))?;
    let gap_pair = gram(&pair.interleaved, &gap)?;
    let gap_pair_spectral = pair_spectral_result(&gap_pair)?;
    let gap_pair_exact = leave_out_error(&gap_pair.values, &pair.labels, 0)?.abs();

    Ok(EquivarianceReport {
        fc_translation_dev,
        fc_rotation_dev,
        gap_translation_spread,
        gap_rotation_rank,
        gap_rotation_spread,
        fc_single_pixel_rank,
        gap_pair_spectral,
        gap_pair_exact,
    })
}

fn cardinal_orbit_points<T: Scalar>(img: &Image<T>) -> Vec<Vec<T>> {
    crate::datasets::cardinal_rotation_orbit(img).points
}

/// One row of the non-abelian sweep.
#[derive(Debug, Clone, Copy)]
pub struct NonabelianRow<T> {
    pub separation: T,
    /// Error from the irrep-basis closed form.
    pub spectral: T,
    /// Direct leave-out-identity kernel regression error.
    pub exact: T,
    /// Jitter used by the direct regression.
    pub jitter: T,
}

/// The irrep-basis error against direct kernel regression on the D4 x C2
/// orbit of a seeded random 2x2 image, as the +-class separation varies.
pub fn nonabelian_sweep<T: Scalar>(
    separations: &[T],
    rng_seed: u64,
    length_scale: T,
) -> Result<Vec<NonabelianRow<T>>> {
    let group = d4c2_dataset::<T>(T::zero(), rng_seed)?.group;
    let reps: Vec<Irrep<T>> = irreps(&group)?;
    separations
        .par_iter()
        .map(|&sep| {
            let ds = d4c2_dataset::<T>(sep, rng_seed)?;
            let g = gram(&ds.points, &KernelSpec::rbf(length_scale))?;
            let e = ds.group.identity();
            let kernel_row: Vec<T> = (0..16).map(|h| g.values[(e, h)]).collect();
            let spectral = general_spectral_error(&ds.group, &reps, &kernel_row, &ds.labels)?;
            let train: Vec<usize> = (0..16).filter(|&i| i != e).collect();
            let fit = gp_regress(&g.values, &ds.labels, &train, &[e])?;
            let exact = T::one() - fit.predictions[0] / ds.labels[e];
            Ok(NonabelianRow { separation: sep, spectral, exact, jitter: fit.jitter })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{d4c2_dataset_from_random_part, synthetic_corpus};

    #[test]
    fn sweep_delta_curves_agree_and_decrease() {
        let kernel = KernelSpec::rbf(1.0);
        let deltas: Vec<f64> = (0..11).map(|k| k as f64 * 0.5).collect();
        let rows = sweep_delta(&kernel, 8, &deltas).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].spectral <= w[0].spectral + 1e-9);
        }
        for row in &rows {
            let tol = 1e-6 * row.spectral.abs().max(row.exact.abs()).max(1.0);
            assert!(
                (row.spectral - row.exact).abs() < tol,
                "delta {}: {} vs {}",
                row.x,
                row.spectral,
                row.exact
            );
        }
    }

    #[test]
    fn sweep_delta_large_separation_plateaus_at_within_class_residual() {
        // Once the cross-class kernel underflows, the error settles at the
        // leave-one-out error of a lone N=8 orbit (sparse within-class
        // coverage), 0.14974985 for L=1; frozen from the sweep itself.
        let kernel = KernelSpec::rbf(1.0f64);
        let rows = sweep_delta(&kernel, 8, &[10.0, 50.0]).unwrap();
        assert!((rows[0].spectral - 0.149749851).abs() < 1e-6);
        assert!((rows[0].spectral - rows[1].spectral).abs() < 1e-9);
    }

    #[test]
    fn sweep_n_mean_inverse_lambda_grows() {
        let kernel = KernelSpec::rbf(1.0);
        let rows = sweep_n(&kernel, 1.0, &[4, 6, 8, 10, 12]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].spectral <= w[0].spectral + 1e-9);
            assert!(w[1].mean_inv_lambda > w[0].mean_inv_lambda);
        }
    }

    #[test]
    fn sweeps_reject_conv_kernels() {
        let kernel = KernelSpec::<f64>::conv(Readout::Fc, KernelMode::Nngp);
        assert!(sweep_delta(&kernel, 8, &[0.0]).is_err());
    }

    #[test]
    fn pair_trial_identical_seeds_has_degenerate_nyquist() {
        let corpus = synthetic_corpus::<f64>(1, 1, 5);
        let img = &corpus[0][0];
        let kernel = KernelSpec::mlp(1, KernelMode::Ntk);
        let err = pair_scatter(&kernel, &[((0, 0), img, (0, 0), img)], 8).unwrap_err();
        assert!(matches!(err, Error::DegenerateNyquist));
    }

    #[test]
    fn pair_trial_identical_seeds_exact_side_flips_sign() {
        // With coincident orbits and opposite labels, the removed point's
        // duplicate keeps the opposite label in the training set, so the
        // exact prediction interpolates to the flipped label: both removals
        // misclassify and the symmetrized error sits at 2.
        let corpus = synthetic_corpus::<f64>(1, 1, 5);
        let img = corpus[0][0].clone();
        let pair = rotated_pair(&img, &img, 6).unwrap();
        let kernel = KernelSpec::mlp(1, KernelMode::Ntk);
        let g = gram(&pair.interleaved, &kernel).unwrap();
        let sym = symmetrized_error(&g.values, &pair.labels).unwrap();
        assert!((sym - 2.0).abs() < 1e-3, "symmetrized error {sym}");
        for drop in 0..2 {
            let train: Vec<usize> = (0..g.size()).filter(|&i| i != drop).collect();
            let fit = gp_regress(&g.values, &pair.labels, &train, &[drop]).unwrap();
            assert!(fit.predictions[0] * pair.labels[drop] < 0.0);
        }
    }

    #[test]
    fn multi_seed_single_pair_reduces_to_pair_values() {
        let corpus = synthetic_corpus::<f64>(2, 1, 11);
        let kernel = KernelSpec::mlp(1, KernelMode::Ntk);
        let res = multi_seed_error(&kernel, &corpus[0], &corpus[1], 6).unwrap();
        let trial =
            pair_scatter(&kernel, &[((0, 0), &corpus[0][0], (1, 0), &corpus[1][0])], 6).unwrap();
        assert!((res.avg_spectral - trial[0].spectral_epsilon).abs() < 1e-12);
        // For a single pair the exact construction is the same two removals
        // as the symmetrized pair error.
        assert!((res.exact_symmetrized - trial[0].exact_epsilon).abs() < 1e-9);
    }

    #[test]
    fn multi_class_two_singleton_classes_matches_sign_of_pair_prediction() {
        let corpus = synthetic_corpus::<f64>(2, 1, 23);
        let kernel = KernelSpec::mlp(1, KernelMode::Ntk);
        let acc = multi_class_accuracy(&kernel, &corpus, &[8]).unwrap();
        let trial =
            pair_scatter(&kernel, &[((0, 0), &corpus[0][0], (1, 0), &corpus[1][0])], 8).unwrap();
        let pred = 1.0 - trial[0].spectral_epsilon;
        let expected = if pred > 0.0 { 1.0 } else { 0.0 };
        assert_eq!(acc[0].1, expected);
    }

    #[test]
    fn equivariance_report_satisfies_propositions() {
        let report = equivariance_checks::<f64>(KernelMode::Nngp, 8, 17).unwrap();
        assert!(report.fc_translation_dev < 1e-8, "{}", report.fc_translation_dev);
        assert!(report.fc_rotation_dev < 1e-8, "{}", report.fc_rotation_dev);
        assert!(report.gap_translation_spread < 1e-8, "{}", report.gap_translation_spread);
        assert_eq!(report.gap_rotation_rank, 4);
        assert!(report.gap_rotation_spread > 1e-6);
        assert_eq!(report.fc_single_pixel_rank, 8);
        assert!(report.gap_pair_spectral.diverged);
        assert_eq!(report.gap_pair_spectral.epsilon, 0.0);
        assert!(report.gap_pair_exact < 1e-6, "{}", report.gap_pair_exact);
    }

    #[test]
    fn nonabelian_sweep_agrees_with_direct_regression() {
        let seps: Vec<f64> = (0..11).map(|k| k as f64 * 0.2).collect();
        let rows = nonabelian_sweep(&seps, 7, 1.0).unwrap();
        for row in &rows {
            let scale = row.spectral.abs().max(row.exact.abs());
            assert!(
                (row.spectral - row.exact).abs() <= 1e-6 * scale,
                "sep {}: {} vs {}",
                row.separation,
                row.spectral,
                row.exact
            );
        }
        for w in rows.windows(2) {
            assert!(w[1].spectral <= w[0].spectral + 1e-9);
        }
    }

    #[test]
    fn nonabelian_symmetric_seed_degenerates() {
        // A seed with no random part collapses the orbit onto the +- pair of
        // a D4-invariant point: the irrep-basis route reports the singular
        // block, while jittered direct regression predicts near the prior
        // mean (error about 1).
        let ds = d4c2_dataset_from_random_part(&[0.0f64; 4], 0.0).unwrap();
        let g_res = gram(&ds.points, &KernelSpec::rbf(1.0)).unwrap();
        let reps = irreps::<f64>(&ds.group).unwrap();
        let row: Vec<f64> = (0..16).map(|h| g_res.values[(0, h)]).collect();
        assert!(matches!(
            general_spectral_error(&ds.group, &reps, &row, &ds.labels),
            Err(Error::SingularKernelBlock { .. })
        ));
        let train: Vec<usize> = (1..16).collect();
        let fit = gp_regress(&g_res.values, &ds.labels, &train, &[0]).unwrap();
        let exact = 1.0 - fit.predictions[0];
        assert!((exact - 1.0).abs() < 0.1, "exact {exact}");
    }
}
