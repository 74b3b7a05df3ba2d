//! The `check` subcommand: invariant suites printed as a pass/fail table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symm_kernel::experiments::equivariance_checks;
use symm_kernel::groups::{
    block_diagonalize, cyclic_group, dihedral_group_4, direct_product, general_spectral_error,
    gft_forward, gft_inverse, gft_unitary, homomorphism_deviation, irreps,
    schur_orthogonality_deviation, unitarity_deviation, FiniteGroup, Irrep,
};
use symm_kernel::kernels::KernelMode;
use symm_kernel::linalg::{CMat, Mat};
use symm_kernel::spectral::{circulant_spectrum, gp_regress, multi_point_error, spectral_error};
use symm_kernel::{Complex, Real};

type CheckFn = fn() -> Result<String, String>;

pub fn run_all() -> Result<(), String> {
    let checks: &[(&str, CheckFn)] = &[
        ("group-axioms", check_group_axioms),
        ("schur-orthogonality", check_schur),
        ("irrep-unitarity-homomorphism", check_irrep_invariants),
        ("gft-round-trip-parseval", check_gft),
        ("block-diagonalization", check_block_diagonalization),
        ("spectral-exact-equivalence", check_spectral_equivalence),
        ("multi-point-reduction", check_multi_point),
        ("cyclic-consistency", check_cyclic_consistency),
        ("stationary-gp-agreement", check_stationary_gp),
        ("equivariance-propositions", check_equivariance),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name} ({detail})"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failures == 0 {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        Err(format!("{failures} check(s) failed"))
    }
}

fn test_groups() -> Vec<(&'static str, FiniteGroup)> {
    let d4 = dihedral_group_4();
    let c2 = cyclic_group(2).expect("C2");
    vec![
        ("C8", cyclic_group(8).expect("C8")),
        ("D4", d4.clone()),
        ("D4xC2", direct_product(&d4, &c2)),
    ]
}

fn check_group_axioms() -> Result<String, String> {
    for (name, group) in test_groups() {
        group.validate().map_err(|e| format!("{name}: {e}"))?;
    }
    Ok("C8, D4, D4xC2 satisfy all axioms exhaustively".into())
}

fn check_schur() -> Result<String, String> {
    let mut worst: Real = 0.0;
    for (name, group) in test_groups() {
        let reps: Vec<Irrep<Real>> = irreps(&group).map_err(|e| format!("{name}: {e}"))?;
        let dev = schur_orthogonality_deviation(&group, &reps);
        worst = worst.max(dev);
        if dev > 1e-9 {
            return Err(format!("{name}: deviation {dev:.3e} > 1e-9"));
        }
    }
    Ok(format!("worst deviation {worst:.3e}"))
}

fn check_irrep_invariants() -> Result<String, String> {
    let mut worst: Real = 0.0;
    for (name, group) in test_groups() {
        let reps: Vec<Irrep<Real>> = irreps(&group).map_err(|e| format!("{name}: {e}"))?;
        let sq: usize = reps.iter().map(|r| r.dim * r.dim).sum();
        if sq != group.order() {
            return Err(format!("{name}: sum of squared dims {sq} != {}", group.order()));
        }
        let u = unitarity_deviation(&reps);
        let h = homomorphism_deviation(&group, &reps);
        worst = worst.max(u).max(h);
        if u > 1e-10 || h > 1e-10 {
            return Err(format!("{name}: unitarity {u:.3e}, homomorphism {h:.3e}"));
        }
    }
    Ok(format!("worst deviation {worst:.3e}"))
}

fn random_complex_function(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex> {
    (0..n)
        .map(|_| Complex::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
        .collect()
}

fn check_gft() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: Real = 0.0;
    for (name, group) in test_groups() {
        let reps: Vec<Irrep<Real>> = irreps(&group).map_err(|e| format!("{name}: {e}"))?;
        for _ in 0..16 {
            let f = random_complex_function(&mut rng, group.order());
            let coeffs = gft_forward(&group, &reps, &f).map_err(|e| format!("{name}: {e}"))?;
            let back = gft_inverse(&group, &reps, &coeffs).map_err(|e| format!("{name}: {e}"))?;
            let power: Real = f.iter().map(|z| z.norm_sqr()).sum();
            let coeff_power: Real = coeffs.blocks.iter().map(CMat::frobenius_norm_sqr).sum();
            let round: Real = f
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, Real::max)
                / power.sqrt();
            let parseval = (power - coeff_power).abs() / power;
            worst = worst.max(round).max(parseval);
            if round > 1e-8 || parseval > 1e-8 {
                return Err(format!("{name}: round trip {round:.3e}, parseval {parseval:.3e}"));
            }
        }
    }
    Ok(format!("worst relative deviation {worst:.3e}"))
}

/// Random G-stationary positive-definite Gram: the autocorrelation
/// K[g,h] = sum_u v(ug) v(uh) of a random group function, plus a ridge.
fn random_stationary_gram(group: &FiniteGroup, rng: &mut ChaCha8Rng) -> Mat<Real> {
    let n = group.order();
    let v: Vec<Real> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    Mat::from_fn(n, n, |g, h| {
        let mut acc = if g == h { 0.5 } else { 0.0 };
        for u in 0..n {
            acc += v[group.compose(u, g)] * v[group.compose(u, h)];
        }
        acc
    })
}

fn check_block_diagonalization() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut worst: Real = 0.0;
    for (name, group) in test_groups() {
        let reps: Vec<Irrep<Real>> = irreps(&group).map_err(|e| format!("{name}: {e}"))?;
        let gram = random_stationary_gram(&group, &mut rng);
        let blocks =
            block_diagonalize(&group, &reps, &gram, 1e-10).map_err(|e| format!("{name}: {e}"))?;
        // Reconstruction: U* K U must equal the block-diagonal assembly.
        let u = gft_unitary(&group, &reps);
        let k = CMat::from_fn(group.order(), group.order(), |i, j| {
            Complex::new(gram[(i, j)], 0.0)
        });
        let transformed = u.adjoint().mul(&k).mul(&u);
        let mut dev: Real = 0.0;
        let mut offset = 0;
        let mut expected =
            CMat::<Real>::zeros(group.order(), group.order());
        for (irrep, block) in reps.iter().zip(&blocks) {
            for copy in 0..irrep.dim {
                for a in 0..irrep.dim {
                    for b in 0..irrep.dim {
                        expected[(offset + copy * irrep.dim + a, offset + copy * irrep.dim + b)] =
                            block[(a, b)];
                    }
                }
            }
            offset += irrep.dim * irrep.dim;
        }
        for i in 0..group.order() {
            for j in 0..group.order() {
                dev = dev.max((transformed[(i, j)] - expected[(i, j)]).norm());
            }
        }
        worst = worst.max(dev);
        if dev > 1e-8 {
            return Err(format!("{name}: reconstruction deviation {dev:.3e}"));
        }
    }
    Ok(format!("worst reconstruction deviation {worst:.3e}"))
}

/// Symmetric positive spectrum -> circulant first row by inverse DFT.
fn random_circulant_row(rng: &mut ChaCha8Rng, m: usize) -> Vec<Real> {
    let mut lambda = vec![0.0; m];
    for j in 0..=m / 2 {
        let v = 0.3 + 2.7 * rng.random::<f64>();
        lambda[j] = v;
        lambda[(m - j) % m] = v;
    }
    (0..m)
        .map(|k| {
            (0..m)
                .map(|j| lambda[j] * (std::f64::consts::TAU * (j * k) as f64 / m as f64).cos())
                .sum::<Real>()
                / m as f64
        })
        .collect()
}

fn circulant_from_row(row: &[Real]) -> Mat<Real> {
    let m = row.len();
    Mat::from_fn(m, m, |i, j| row[(m + j - i) % m])
}

fn alternating_labels(m: usize) -> Vec<Real> {
    (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

fn check_spectral_equivalence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: Real = 0.0;
    for trial in 0..200 {
        let n = 2 + (trial % 15);
        let m = 2 * n;
        let row = random_circulant_row(&mut rng, m);
        let gram = circulant_from_row(&row);
        let labels = alternating_labels(m);
        let eps = spectral_error(&circulant_spectrum(&row))
            .map_err(|e| e.to_string())?
            .epsilon;
        let train: Vec<usize> = (1..m).collect();
        let fit = gp_regress(&gram, &labels, &train, &[0]).map_err(|e| e.to_string())?;
        let exact = 1.0 - fit.predictions[0];
        let rel = (eps - exact).abs() / eps.abs().max(exact.abs());
        worst = worst.max(rel);
        if rel > 1e-8 {
            return Err(format!("2N={m}: spectral {eps} vs exact {exact} (rel {rel:.3e})"));
        }
    }
    Ok(format!("200 instances, worst relative gap {worst:.3e}"))
}

fn check_multi_point() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: Real = 0.0;
    for trial in 0..50 {
        let m = 2 * (2 + trial % 10);
        let row = random_circulant_row(&mut rng, m);
        let spectrum = circulant_spectrum(&row);
        let eps = spectral_error(&spectrum).map_err(|e| e.to_string())?.epsilon;
        let preds = multi_point_error(&spectrum, &[0], 1.0).map_err(|e| e.to_string())?;
        let dev = (preds[0] - (1.0 - eps)).abs();
        worst = worst.max(dev);
        if dev > 1e-10 {
            return Err(format!("2N={m}: multi-point {} vs closed form {}", preds[0], 1.0 - eps));
        }
    }
    Ok(format!("50 instances, worst deviation {worst:.3e}"))
}

fn check_cyclic_consistency() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut worst: Real = 0.0;
    for m in [4usize, 8, 16] {
        let group = cyclic_group(m).map_err(|e| e.to_string())?;
        let reps: Vec<Irrep<Real>> = irreps(&group).map_err(|e| e.to_string())?;
        for _ in 0..8 {
            let row = random_circulant_row(&mut rng, m);
            let labels = alternating_labels(m);
            let eps_cyclic = spectral_error(&circulant_spectrum(&row))
                .map_err(|e| e.to_string())?
                .epsilon;
            let eps_general = general_spectral_error(&group, &reps, &row, &labels)
                .map_err(|e| e.to_string())?;
            let dev = (eps_cyclic - eps_general).abs() / eps_cyclic.abs().max(1.0);
            worst = worst.max(dev);
            if dev > 1e-8 {
                return Err(format!("C{m}: cyclic {eps_cyclic} vs general {eps_general}"));
            }
        }
    }
    Ok(format!("C4/C8/C16, worst relative gap {worst:.3e}"))
}

fn check_stationary_gp() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let mut worst: Real = 0.0;
    for (name, group) in test_groups() {
        let reps: Vec<Irrep<Real>> = irreps(&group).map_err(|e| format!("{name}: {e}"))?;
        for _ in 0..8 {
            let gram = random_stationary_gram(&group, &mut rng);
            let e = group.identity();
            let row: Vec<Real> = (0..group.order()).map(|h| gram[(e, h)]).collect();
            let mut labels: Vec<Real> =
                (0..group.order()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            labels[e] = 1.0;
            let general = general_spectral_error(&group, &reps, &row, &labels)
                .map_err(|e| format!("{name}: {e}"))?;
            let train: Vec<usize> = (0..group.order()).filter(|&i| i != e).collect();
            let fit =
                gp_regress(&gram, &labels, &train, &[e]).map_err(|e| format!("{name}: {e}"))?;
            let exact = labels[e] - fit.predictions[0];
            let rel = (general - exact).abs() / general.abs().max(exact.abs()).max(1e-3);
            worst = worst.max(rel);
            if rel > 1e-6 {
                return Err(format!("{name}: general {general} vs gp {exact} (rel {rel:.3e})"));
            }
        }
    }
    Ok(format!("C8/D4/D4xC2, worst relative gap {worst:.3e}"))
}

fn check_equivariance() -> Result<String, String> {
    let report =
        equivariance_checks::<Real>(KernelMode::Nngp, 8, 2024).map_err(|e| e.to_string())?;
    if report.fc_translation_dev > 1e-8 {
        return Err(format!("FC translation circulance {:.3e}", report.fc_translation_dev));
    }
    if report.fc_rotation_dev > 1e-8 {
        return Err(format!("FC rotation circulance {:.3e}", report.fc_rotation_dev));
    }
    if report.gap_translation_spread > 1e-8 {
        return Err(format!("GAP translation spread {:.3e}", report.gap_translation_spread));
    }
    if report.gap_rotation_rank != 4 || report.gap_rotation_spread <= 1e-6 {
        return Err(format!(
            "GAP rotation rank {} spread {:.3e}",
            report.gap_rotation_rank, report.gap_rotation_spread
        ));
    }
    if !report.gap_pair_spectral.diverged
        || report.gap_pair_spectral.epsilon != 0.0
        || report.gap_pair_exact > 1e-6
    {
        return Err(format!(
            "GAP pair: diverged={} epsilon={} exact={:.3e}",
            report.gap_pair_spectral.diverged,
            report.gap_pair_spectral.epsilon,
            report.gap_pair_exact
        ));
    }
    Ok("conv kernel structure over translation/rotation orbits".into())
}
