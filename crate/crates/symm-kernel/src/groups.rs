//! Finite groups, their unitary irreducible representations, and the
//! generalized Fourier transform.
//!
//! Three group families are constructible: cyclic groups, the dihedral group
//! of the square, and direct products of those. Irreps come from the standard
//! explicit constructions (roots of unity for cyclic groups, the 2-dim real
//! rotation/reflection representation for D4, Kronecker products for direct
//! products); correctness is enforced by Schur-orthogonality and
//! homomorphism checks rather than by construction provenance.
//!
//! The Fourier conventions are orthogonal throughout:
//!
//! ```text
//! forward:  f_hat(rho) = sqrt(d_rho/|G|) sum_g f(g) rho(g^-1)
//! inverse:  f(g)       = sum_rho sqrt(d_rho/|G|) Tr[f_hat(rho) rho(g)]
//! ```
//!
//! under which Parseval holds with unit constant and a group-stationary
//! matrix K[g,h] = kappa(g^-1 h) block-diagonalizes into
//! `sqrt(|G|/d_sigma) * kappa_hat(sigma)`, each block repeated `d_sigma`
//! times.

use num_complex::Complex;

use crate::linalg::{CMat, Mat};
use crate::{Error, Result, Scalar};

/// Reciprocal-condition threshold below which a kernel Fourier block is
/// reported singular, measured relative to the largest block of the same
/// kernel (so exact rank deficiency is caught even for 1x1 blocks).
pub const SINGULAR_BLOCK_RCOND: f64 = 1e-12;

/// Which construction produced a group; drives irrep synthesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupFamily {
    Cyclic(usize),
    DihedralD4,
    Product(Box<GroupFamily>, Box<GroupFamily>),
    Custom,
}

/// A finite group presented by its composition table.
///
/// Elements are the indices `0..order`. `compose(g, h)` is "apply `h` first,
/// then `g`", so matrix representations satisfy `M(compose(g,h)) = M(g) M(h)`.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    order: usize,
    cayley: Vec<usize>,
    inverse: Vec<usize>,
    identity: usize,
    family: GroupFamily,
}

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn compose(&self, g: usize, h: usize) -> usize {
        self.cayley[g * self.order + h]
    }

    pub fn inverse_of(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn family(&self) -> &GroupFamily {
        &self.family
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> {
        0..self.order
    }

    /// Builds a group from a raw composition table (row-major, `n*n`).
    pub fn from_cayley(cayley: Vec<usize>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidOrder);
        }
        if cayley.len() != n * n {
            return Err(Error::InvalidGroup("table size must be order squared"));
        }
        let mut g = FiniteGroup {
            order: n,
            cayley,
            inverse: vec![0; n],
            identity: 0,
            family: GroupFamily::Custom,
        };
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| g.compose(e, x) == x && g.compose(x, e) == x))
            .ok_or(Error::InvalidGroup("no identity element"))?;
        g.identity = identity;
        for x in 0..n {
            let inv = (0..n)
                .find(|&y| g.compose(x, y) == identity && g.compose(y, x) == identity)
                .ok_or(Error::InvalidGroup("missing inverse"))?;
            g.inverse[x] = inv;
        }
        g.validate()?;
        Ok(g)
    }

    /// Exhaustive group-axiom check: associativity over all triples, identity,
    /// inverses, and the Latin-square property of the table.
    pub fn validate(&self) -> Result<()> {
        let n = self.order;
        if self.cayley.iter().any(|&v| v >= n) {
            return Err(Error::InvalidGroup("table entry out of range"));
        }
        for g in 0..n {
            let mut row_seen = vec![false; n];
            let mut col_seen = vec![false; n];
            for h in 0..n {
                row_seen[self.compose(g, h)] = true;
                col_seen[self.compose(h, g)] = true;
            }
            if row_seen.iter().any(|&s| !s) || col_seen.iter().any(|&s| !s) {
                return Err(Error::InvalidGroup("table row/column is not a permutation"));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.compose(self.compose(a, b), c) != self.compose(a, self.compose(b, c)) {
                        return Err(Error::InvalidGroup("associativity fails"));
                    }
                }
            }
        }
        let e = self.identity;
        for g in 0..n {
            if self.compose(e, g) != g || self.compose(g, e) != g {
                return Err(Error::InvalidGroup("identity does not act trivially"));
            }
            if self.compose(self.inverse[g], g) != e || self.compose(g, self.inverse[g]) != e {
                return Err(Error::InvalidGroup("inverse table is wrong"));
            }
        }
        Ok(())
    }
}

/// The cyclic group C_n with `compose(i, j) = (i + j) mod n`.
pub fn cyclic_group(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::InvalidOrder);
    }
    let mut cayley = vec![0; n * n];
    for i in 0..n {
        for j in 0..n {
            cayley[i * n + j] = (i + j) % n;
        }
    }
    Ok(FiniteGroup {
        order: n,
        cayley,
        inverse: (0..n).map(|i| (n - i) % n).collect(),
        identity: 0,
        family: GroupFamily::Cyclic(n),
    })
}

/// Pixel source maps for the eight elements of D4 acting on a `side x side`
/// grid: `out[i] = in[map[i]]`.
///
/// Element order: indices 0..3 are the rotations r^k (r = 90 degree rotation
/// about the grid center, `out(i,j) = in(j, side-1-i)`), indices 4..7 are
/// r^k followed by the column mirror `out(i,j) = in(i, side-1-j)` applied
/// first (element `4+k` is `r^k * mirror`).
pub fn d4_pixel_source_maps(side: usize) -> Vec<Vec<usize>> {
    let n = side;
    let idx = |i: usize, j: usize| i * n + j;
    let ident: Vec<usize> = (0..n * n).collect();
    let mut rot = vec![0usize; n * n];
    let mut mir = vec![0usize; n * n];
    for i in 0..n {
        for j in 0..n {
            rot[idx(i, j)] = idx(j, n - 1 - i);
            mir[idx(i, j)] = idx(i, n - 1 - j);
        }
    }
    // Source maps compose through the inner map first: (g.h).x = g.(h.x)
    // reads as map_{gh}[i] = map_h[map_g[i]].
    let compose = |g: &[usize], h: &[usize]| -> Vec<usize> { g.iter().map(|&m| h[m]).collect() };
    let mut maps = Vec::with_capacity(8);
    let mut power = ident.clone();
    for _ in 0..4 {
        maps.push(power.clone());
        power = compose(&power, &rot);
    }
    for k in 0..4 {
        maps.push(compose(&maps[k], &mir));
    }
    maps
}

/// The dihedral group of the square, order 8, in the element order of
/// [`d4_pixel_source_maps`].
pub fn dihedral_group_4() -> FiniteGroup {
    let maps = d4_pixel_source_maps(4);
    let compose_maps = |g: &[usize], h: &[usize]| -> Vec<usize> { g.iter().map(|&m| h[m]).collect() };
    let n = 8;
    let mut cayley = vec![0; n * n];
    for g in 0..n {
        for h in 0..n {
            let combined = compose_maps(&maps[g], &maps[h]);
            let k = maps
                .iter()
                .position(|m| *m == combined)
                .expect("D4 is closed under composition");
            cayley[g * n + h] = k;
        }
    }
    let mut group = FiniteGroup {
        order: n,
        cayley,
        inverse: vec![0; n],
        identity: 0,
        family: GroupFamily::DihedralD4,
    };
    for g in 0..n {
        group.inverse[g] = (0..n)
            .find(|&h| group.compose(g, h) == 0)
            .expect("every D4 element has an inverse");
    }
    group
}

/// Direct product with componentwise composition; the pair `(g, h)` gets
/// element index `g * |H| + h`.
pub fn direct_product(g: &FiniteGroup, h: &FiniteGroup) -> FiniteGroup {
    let (ng, nh) = (g.order, h.order);
    let n = ng * nh;
    let mut cayley = vec![0; n * n];
    for g1 in 0..ng {
        for h1 in 0..nh {
            for g2 in 0..ng {
                for h2 in 0..nh {
                    let a = g1 * nh + h1;
                    let b = g2 * nh + h2;
                    cayley[a * n + b] = g.compose(g1, g2) * nh + h.compose(h1, h2);
                }
            }
        }
    }
    let inverse = (0..n)
        .map(|a| g.inverse_of(a / nh) * nh + h.inverse_of(a % nh))
        .collect();
    FiniteGroup {
        order: n,
        cayley,
        inverse,
        identity: g.identity * nh + h.identity,
        family: GroupFamily::Product(Box::new(g.family.clone()), Box::new(h.family.clone())),
    }
}

/// A unitary irreducible representation stored as one matrix per element.
#[derive(Debug, Clone)]
pub struct Irrep<T> {
    pub dim: usize,
    pub matrices: Vec<CMat<T>>,
}

impl<T: Scalar> Irrep<T> {
    pub fn matrix(&self, g: usize) -> &CMat<T> {
        &self.matrices[g]
    }
}

fn build_from_family<T: Scalar>(family: &GroupFamily) -> Result<Vec<Irrep<T>>> {
    match family {
        GroupFamily::Cyclic(n) => {
            let n = *n;
            let mut out = Vec::with_capacity(n);
            for j in 0..n {
                let matrices = (0..n)
                    .map(|k| {
                        let angle = T::c(2.0) * T::PI() * T::c((j * k) as f64) / T::c(n as f64);
                        CMat::from_fn(1, 1, |_, _| Complex::from_polar(T::one(), angle))
                    })
                    .collect();
                out.push(Irrep { dim: 1, matrices });
            }
            Ok(out)
        }
        GroupFamily::DihedralD4 => {
            let group = dihedral_group_4();
            // Generator images: r is element 1, the mirror is element 4.
            let rot = CMat::from_fn(2, 2, |i, j| {
                let v = [[0.0, -1.0], [1.0, 0.0]][i][j];
                Complex::new(T::c(v), T::zero())
            });
            let mir = CMat::from_fn(2, 2, |i, j| {
                let v = [[1.0, 0.0], [0.0, -1.0]][i][j];
                Complex::new(T::c(v), T::zero())
            });
            let mut out = Vec::new();
            for (chi_r, chi_m) in [(1.0f64, 1.0f64), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let matrices = (0..8)
                    .map(|g| {
                        let (a, b) = (g % 4, g / 4);
                        let v = chi_r.powi(a) * chi_m.powi(b);
                        CMat::from_fn(1, 1, |_, _| Complex::new(T::c(v), T::zero()))
                    })
                    .collect();
                out.push(Irrep { dim: 1, matrices });
            }
            let matrices = (0..8)
                .map(|g| {
                    let (a, b) = (g % 4, g / 4);
                    let mut m = CMat::identity(2);
                    for _ in 0..a {
                        m = m.mul(&rot);
                    }
                    if b == 1 {
                        m = m.mul(&mir);
                    }
                    m
                })
                .collect();
            out.push(Irrep { dim: 2, matrices });
            debug_assert_eq!(group.order(), 8);
            Ok(out)
        }
        GroupFamily::Product(left, right) => {
            let left_irreps = build_from_family::<T>(left)?;
            let right_irreps = build_from_family::<T>(right)?;
            let nh = right_irreps[0].matrices.len();
            let mut out = Vec::new();
            for li in &left_irreps {
                for ri in &right_irreps {
                    let ng = li.matrices.len();
                    let mut matrices = Vec::with_capacity(ng * nh);
                    for g in 0..ng {
                        for h in 0..nh {
                            matrices.push(li.matrices[g].kron(&ri.matrices[h]));
                        }
                    }
                    out.push(Irrep { dim: li.dim * ri.dim, matrices });
                }
            }
            Ok(out)
        }
        GroupFamily::Custom => Err(Error::UnsupportedGroup),
    }
}

/// The complete list of pairwise-inequivalent unitary irreps of a
/// constructible group.
pub fn irreps<T: Scalar>(group: &FiniteGroup) -> Result<Vec<Irrep<T>>> {
    let list = build_from_family(&group.family)?;
    debug_assert_eq!(list.iter().map(|i| i.dim * i.dim).sum::<usize>(), group.order());
    Ok(list)
}

/// Largest deviation from the Schur orthogonality relations
/// `(d_rho/|G|) sum_g conj(rho_ab(g)) sigma_cd(g) = delta delta delta`.
pub fn schur_orthogonality_deviation<T: Scalar>(group: &FiniteGroup, irreps: &[Irrep<T>]) -> T {
    let order = T::c(group.order() as f64);
    let mut dev = T::zero();
    for (ri, rho) in irreps.iter().enumerate() {
        for (si, sigma) in irreps.iter().enumerate() {
            for a in 0..rho.dim {
                for b in 0..rho.dim {
                    for c in 0..sigma.dim {
                        for d in 0..sigma.dim {
                            let mut acc = Complex::new(T::zero(), T::zero());
                            for g in group.elements() {
                                acc += rho.matrices[g][(a, b)].conj() * sigma.matrices[g][(c, d)];
                            }
                            acc *= Complex::new(T::c(rho.dim as f64) / order, T::zero());
                            let want = if ri == si && a == c && b == d { T::one() } else { T::zero() };
                            dev = dev.max((acc - Complex::new(want, T::zero())).norm());
                        }
                    }
                }
            }
        }
    }
    dev
}

/// Largest deviation of each irrep from unitarity.
pub fn unitarity_deviation<T: Scalar>(irreps: &[Irrep<T>]) -> T {
    let mut dev = T::zero();
    for irrep in irreps {
        for m in &irrep.matrices {
            let prod = m.adjoint().mul(m);
            for i in 0..irrep.dim {
                for j in 0..irrep.dim {
                    let want = if i == j { T::one() } else { T::zero() };
                    dev = dev.max((prod[(i, j)] - Complex::new(want, T::zero())).norm());
                }
            }
        }
    }
    dev
}

/// Largest deviation from `M(g) M(h) = M(compose(g, h))` over all pairs.
pub fn homomorphism_deviation<T: Scalar>(group: &FiniteGroup, irreps: &[Irrep<T>]) -> T {
    let mut dev = T::zero();
    for irrep in irreps {
        for g in group.elements() {
            for h in group.elements() {
                let prod = irrep.matrices[g].mul(&irrep.matrices[h]);
                let want = &irrep.matrices[group.compose(g, h)];
                for i in 0..irrep.dim {
                    for j in 0..irrep.dim {
                        dev = dev.max((prod[(i, j)] - want[(i, j)]).norm());
                    }
                }
            }
        }
    }
    dev
}

/// An orthogonal linear action of a finite group on R^n.
#[derive(Debug, Clone)]
pub struct GroupAction<T> {
    pub group: FiniteGroup,
    pub dimension: usize,
    pub matrices: Vec<Mat<T>>,
}

impl<T: Scalar> GroupAction<T> {
    pub fn new(group: FiniteGroup, matrices: Vec<Mat<T>>) -> Result<Self> {
        if matrices.len() != group.order() {
            return Err(Error::DimensionMismatch { expected: group.order(), actual: matrices.len() });
        }
        let dimension = matrices[0].n_rows();
        for m in &matrices {
            if m.n_rows() != dimension || m.n_cols() != dimension {
                return Err(Error::NotSquare { rows: m.n_rows(), cols: m.n_cols() });
            }
        }
        Ok(GroupAction { group, dimension, matrices })
    }

    pub fn apply(&self, g: usize, x: &[T]) -> Vec<T> {
        self.matrices[g].matvec(x)
    }

    /// Max deviation from orthogonality (`M^T M = I`) over all elements.
    pub fn orthogonality_deviation(&self) -> T {
        let mut dev = T::zero();
        for m in &self.matrices {
            let mt = m.transpose();
            for i in 0..self.dimension {
                for j in 0..self.dimension {
                    let dot: T = (0..self.dimension).map(|k| mt[(i, k)] * m[(k, j)]).sum();
                    let want = if i == j { T::one() } else { T::zero() };
                    dev = dev.max((dot - want).abs());
                }
            }
        }
        dev
    }

    /// Max deviation from `M(g) M(h) = M(compose(g, h))`.
    pub fn homomorphism_deviation(&self) -> T {
        let mut dev = T::zero();
        let n = self.dimension;
        for g in self.group.elements() {
            for h in self.group.elements() {
                let want = &self.matrices[self.group.compose(g, h)];
                for i in 0..n {
                    for j in 0..n {
                        let prod: T = (0..n).map(|k| self.matrices[g][(i, k)] * self.matrices[h][(k, j)]).sum();
                        dev = dev.max((prod - want[(i, j)]).abs());
                    }
                }
            }
        }
        dev
    }
}

/// Generalized Fourier coefficients of a function on a group: one complex
/// `d_rho x d_rho` matrix per irrep.
#[derive(Debug, Clone)]
pub struct GftCoefficients<T> {
    pub blocks: Vec<CMat<T>>,
}

/// Forward transform `f_hat(rho) = sqrt(d_rho/|G|) sum_g f(g) rho(g^-1)`.
pub fn gft_forward<T: Scalar>(
    group: &FiniteGroup,
    irreps: &[Irrep<T>],
    f: &[Complex<T>],
) -> Result<GftCoefficients<T>> {
    if f.len() != group.order() {
        return Err(Error::DimensionMismatch { expected: group.order(), actual: f.len() });
    }
    let order = T::c(group.order() as f64);
    let mut blocks = Vec::with_capacity(irreps.len());
    for irrep in irreps {
        let scale = (T::c(irrep.dim as f64) / order).sqrt();
        let mut block = CMat::zeros(irrep.dim, irrep.dim);
        for g in group.elements() {
            let m = &irrep.matrices[group.inverse_of(g)];
            for a in 0..irrep.dim {
                for b in 0..irrep.dim {
                    block[(a, b)] += f[g] * m[(a, b)];
                }
            }
        }
        for a in 0..irrep.dim {
            for b in 0..irrep.dim {
                block[(a, b)] *= Complex::new(scale, T::zero());
            }
        }
        blocks.push(block);
    }
    Ok(GftCoefficients { blocks })
}

/// Inverse transform `f(g) = sum_rho sqrt(d_rho/|G|) Tr[f_hat(rho) rho(g)]`.
pub fn gft_inverse<T: Scalar>(
    group: &FiniteGroup,
    irreps: &[Irrep<T>],
    coeffs: &GftCoefficients<T>,
) -> Result<Vec<Complex<T>>> {
    if coeffs.blocks.len() != irreps.len() {
        return Err(Error::DimensionMismatch { expected: irreps.len(), actual: coeffs.blocks.len() });
    }
    for (irrep, block) in irreps.iter().zip(&coeffs.blocks) {
        if block.n_rows() != irrep.dim || block.n_cols() != irrep.dim {
            return Err(Error::DimensionMismatch { expected: irrep.dim, actual: block.n_rows() });
        }
    }
    let order = T::c(group.order() as f64);
    let mut f = vec![Complex::new(T::zero(), T::zero()); group.order()];
    for (irrep, block) in irreps.iter().zip(&coeffs.blocks) {
        let scale = (T::c(irrep.dim as f64) / order).sqrt();
        for g in group.elements() {
            let m = &irrep.matrices[g];
            let mut tr = Complex::new(T::zero(), T::zero());
            for a in 0..irrep.dim {
                for b in 0..irrep.dim {
                    tr += block[(a, b)] * m[(b, a)];
                }
            }
            f[g] += tr * Complex::new(scale, T::zero());
        }
    }
    Ok(f)
}

fn gft_forward_real<T: Scalar>(
    group: &FiniteGroup,
    irreps: &[Irrep<T>],
    f: &[T],
) -> Result<GftCoefficients<T>> {
    let complex: Vec<Complex<T>> = f.iter().map(|&v| Complex::new(v, T::zero())).collect();
    gft_forward(group, irreps, &complex)
}

/// Prediction error of kernel regression at the identity element of a
/// G-stationary kernel, computed in the irrep basis.
///
/// `kernel_row` is the first row `kappa(g) = K[e, g]` of the Gram matrix and
/// `labels` the ground-truth labeling of the orbit. The returned value is
/// `y(e) - prediction(e)` with the prediction conditioned on all elements
/// except the identity; for unit labels this is the relative error, equal to
/// the cyclic spectral error on cyclic groups.
pub fn general_spectral_error<T: Scalar>(
    group: &FiniteGroup,
    irreps: &[Irrep<T>],
    kernel_row: &[T],
    labels: &[T],
) -> Result<T> {
    let kappa_hat = gft_forward_real(group, irreps, kernel_row)?;
    let y_hat = gft_forward_real(group, irreps, labels)?;
    let scale = kappa_hat.blocks.iter().map(CMat::one_norm).fold(T::zero(), T::max);
    if scale == T::zero() {
        return Err(Error::SingularKernelBlock { irrep: 0, rcond: 0.0 });
    }
    let mut numerator = T::zero();
    let mut denominator = T::zero();
    for (idx, irrep) in irreps.iter().enumerate() {
        let inv = match kappa_hat.blocks[idx].inverse() {
            Ok(inv) => inv,
            Err(_) => return Err(Error::SingularKernelBlock { irrep: idx, rcond: 0.0 }),
        };
        let rcond = (T::one() / (scale * inv.one_norm())).as_f64();
        if !(rcond >= SINGULAR_BLOCK_RCOND) {
            return Err(Error::SingularKernelBlock { irrep: idx, rcond });
        }
        let dim = T::c(irrep.dim as f64);
        // Frobenius inner product Tr[inv * y_hat^dagger].
        let mut tr_num = Complex::new(T::zero(), T::zero());
        for a in 0..irrep.dim {
            for b in 0..irrep.dim {
                tr_num += inv[(a, b)] * y_hat.blocks[idx][(a, b)].conj();
            }
        }
        numerator += dim * tr_num.re;
        denominator += dim * dim.sqrt() * inv.trace().re;
    }
    let order = T::c(group.order() as f64);
    Ok(order.sqrt() * numerator / denominator)
}

/// One diagonal block per irrep of `U* K U` for a G-stationary `K`:
/// `sqrt(|G|/d_sigma) * kappa_hat(sigma)`, to be repeated `d_sigma` times.
///
/// Fails with [`Error::NotStationary`] when `K[g,h]` deviates from
/// `kappa(g^-1 h)` by more than `tol`.
pub fn block_diagonalize<T: Scalar>(
    group: &FiniteGroup,
    irreps: &[Irrep<T>],
    gram: &Mat<T>,
    tol: T,
) -> Result<Vec<CMat<T>>> {
    let n = group.order();
    if gram.n_rows() != n || gram.n_cols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: gram.n_rows() });
    }
    let e = group.identity();
    let kappa: Vec<T> = (0..n).map(|g| gram[(e, g)]).collect();
    let mut max_dev = T::zero();
    for g in 0..n {
        for h in 0..n {
            let expected = kappa[group.compose(group.inverse_of(g), h)];
            max_dev = max_dev.max((gram[(g, h)] - expected).abs());
        }
    }
    if max_dev > tol {
        return Err(Error::NotStationary { max_dev: max_dev.as_f64() });
    }
    let kappa_hat = gft_forward_real(group, irreps, &kappa)?;
    let order = T::c(n as f64);
    let blocks = irreps
        .iter()
        .zip(kappa_hat.blocks)
        .map(|(irrep, block)| {
            let scale = (order / T::c(irrep.dim as f64)).sqrt();
            CMat::from_fn(irrep.dim, irrep.dim, |a, b| block[(a, b)] * Complex::new(scale, T::zero()))
        })
        .collect();
    Ok(blocks)
}

/// The unitary change of basis whose columns are scaled irrep matrix
/// elements: `U[g, col(rho, a, b)] = sqrt(d_rho/|G|) rho_ab(g)` with the row
/// index `a` outer. Under this grouping `U* K U` of a symmetric stationary
/// `K` is block diagonal with `d_rho` contiguous copies of the
/// [`block_diagonalize`] block per irrep (one copy per value of `a`).
pub fn gft_unitary<T: Scalar>(group: &FiniteGroup, irreps: &[Irrep<T>]) -> CMat<T> {
    let n = group.order();
    let order = T::c(n as f64);
    let mut u = CMat::zeros(n, n);
    let mut col = 0;
    for irrep in irreps {
        let scale = (T::c(irrep.dim as f64) / order).sqrt();
        for a in 0..irrep.dim {
            for b in 0..irrep.dim {
                for g in 0..n {
                    u[(g, col)] = irrep.matrices[g][(a, b)] * Complex::new(scale, T::zero());
                }
                col += 1;
            }
        }
    }
    u
}
