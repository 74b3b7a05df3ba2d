//! Orbit construction and data ingestion.
//!
//! Orbits are ordered point lists `[seed, g.seed, g^2.seed, ...]` generated
//! by a group action. Two same-size orbits interleave into a paired dataset
//! `[a0, b0, a1, b1, ...]` with alternating +-1 labels; this ordering is
//! what makes stationary and dot-product kernels circulant over the pair.
//!
//! Image rotations by arbitrary angles use bilinear interpolation about the
//! geometric center with zero fill; multiples of 90 degrees take the exact
//! pixel-permutation path so cardinal orbits close bit-exactly. IDX image
//! files load when present (`SYMM_KERNEL_DATA_DIR`); otherwise a
//! deterministic synthetic digit corpus of seeded smooth blobs stands in so
//! every experiment runs offline.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::groups::{d4_pixel_source_maps, dihedral_group_4, direct_product, cyclic_group, FiniteGroup, GroupAction};
use crate::linalg::Mat;
use crate::{Error, Result, Scalar};

/// A square grayscale image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    side: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(side: usize, pixels: Vec<T>) -> Result<Self> {
        if pixels.len() != side * side {
            return Err(Error::NotSquareImage(pixels.len()));
        }
        Ok(Image { side, pixels })
    }

    pub fn zeros(side: usize) -> Self {
        Image { side, pixels: vec![T::zero(); side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.pixels[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.pixels[row * self.side + col] = value;
    }

    pub fn norm(&self) -> T {
        self.pixels.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Scaled to unit Euclidean norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > T::zero()) {
            return Err(Error::ZeroNorm);
        }
        Ok(Image { side: self.side, pixels: self.pixels.iter().map(|&v| v / n).collect() })
    }
}

/// Quarter turn about the geometric center: `out(i, j) = in(j, side-1-i)`,
/// the exact limit of the bilinear path at 90 degrees.
pub fn rot90<T: Scalar>(img: &Image<T>) -> Image<T> {
    let n = img.side;
    let mut out = Image::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, img.get(j, n - 1 - i));
        }
    }
    out
}

/// Rotation about the image center ((n-1)/2, (n-1)/2).
///
/// Angle zero returns the input bit-exactly; multiples of 90 degrees use the
/// exact pixel permutation; everything else is bilinear interpolation with
/// out-of-bounds source pixels read as zero.
pub fn rotate_image<T: Scalar>(img: &Image<T>, angle: T) -> Image<T> {
    let two_pi = T::c(2.0) * T::PI();
    let quarter = T::FRAC_PI_2();
    let turns = (angle / quarter).round();
    let snap = T::c(1e-12);
    if (angle - turns * quarter).abs() < snap {
        let k = {
            let t = turns.as_f64() as i64 % 4;
            ((t + 4) % 4) as usize
        };
        let mut out = img.clone();
        for _ in 0..k {
            out = rot90(&out);
        }
        return out;
    }
    let n = img.side;
    let c = T::c((n - 1) as f64) / T::c(2.0);
    let normalized = angle % two_pi;
    let (sin, cos) = (normalized.sin(), normalized.cos());
    let mut out = Image::zeros(n);
    for i in 0..n {
        for j in 0..n {
            // Source coordinate: rotate (i, j) about the center by -angle.
            let di = T::c(i as f64) - c;
            let dj = T::c(j as f64) - c;
            let si = c + cos * di + sin * dj;
            let sj = c - sin * di + cos * dj;
            let fi = si.floor();
            let fj = sj.floor();
            let wi = si - fi;
            let wj = sj - fj;
            let mut acc = T::zero();
            for (oi, ri) in [(0i64, T::one() - wi), (1, wi)] {
                for (oj, rj) in [(0i64, T::one() - wj), (1, wj)] {
                    let pi = fi.as_f64() as i64 + oi;
                    let pj = fj.as_f64() as i64 + oj;
                    if pi >= 0 && pi < n as i64 && pj >= 0 && pj < n as i64 {
                        acc += ri * rj * img.get(pi as usize, pj as usize);
                    }
                }
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// How an orbit was generated.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionKind {
    /// C_n rotation about the x-axis of R^3.
    Rotation3d { n: usize },
    /// Circular row shift of an image (C_side).
    PixelTranslation,
    /// Exact quarter-turn pixel permutation (C_4).
    CardinalRotation,
    /// Interpolated image rotation in increments of 2 pi / n.
    ImageRotation { n: usize },
    /// Signed pixel permutations (D4 x C2 on 2x2 images).
    SignedPermutation,
}

/// An ordered group orbit: `points[i] = g^i . seed` (or the group-element
/// enumeration order for non-cyclic actions).
#[derive(Debug, Clone)]
pub struct Orbit<T> {
    pub seed: Vec<T>,
    pub points: Vec<Vec<T>>,
    pub action: ActionKind,
}

impl<T: Scalar> Orbit<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vec<T> {
        let dim = self.seed.len();
        let mut c = vec![T::zero(); dim];
        for p in &self.points {
            for (slot, &v) in c.iter_mut().zip(p) {
                *slot += v;
            }
        }
        let inv = T::one() / T::c(self.points.len() as f64);
        c.iter_mut().for_each(|v| *v *= inv);
        c
    }

    /// Mean distance of orbit samples to the centroid.
    pub fn radius(&self) -> T {
        let c = self.centroid();
        let total: T = self
            .points
            .iter()
            .map(|p| p.iter().zip(&c).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt())
            .sum();
        total / T::c(self.points.len() as f64)
    }
}

/// Two equal-size orbits interleaved as `[a0, b0, a1, b1, ...]` with labels
/// `+1, -1, ...`.
#[derive(Debug, Clone)]
pub struct PairedOrbitDataset<T> {
    pub orbit_a: Orbit<T>,
    pub orbit_b: Orbit<T>,
    pub interleaved: Vec<Vec<T>>,
    pub labels: Vec<T>,
}

impl<T: Scalar> PairedOrbitDataset<T> {
    pub fn interleave(orbit_a: Orbit<T>, orbit_b: Orbit<T>) -> Result<Self> {
        if orbit_a.len() != orbit_b.len() {
            return Err(Error::DimensionMismatch { expected: orbit_a.len(), actual: orbit_b.len() });
        }
        let mut interleaved = Vec::with_capacity(2 * orbit_a.len());
        let mut labels = Vec::with_capacity(2 * orbit_a.len());
        for (a, b) in orbit_a.points.iter().zip(&orbit_b.points) {
            interleaved.push(a.clone());
            interleaved.push(b.clone());
            labels.push(T::one());
            labels.push(-T::one());
        }
        Ok(PairedOrbitDataset { orbit_a, orbit_b, interleaved, labels })
    }

    pub fn len(&self) -> usize {
        self.interleaved.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interleaved.is_empty()
    }
}

/// Centroid separation and orbit radius of a paired dataset, in input-space
/// units.
#[derive(Debug, Clone, Copy)]
pub struct OrbitGeometry<T> {
    /// Squared distance between the two orbit centroids.
    pub delta_sq: T,
    /// Mean over both orbits of the sample-to-centroid distance.
    pub radius: T,
    /// 1/radius, the orbit density proxy; infinite for a null radius.
    pub inverse_radius: T,
}

pub fn orbit_geometry<T: Scalar>(pair: &PairedOrbitDataset<T>) -> OrbitGeometry<T> {
    let ca = pair.orbit_a.centroid();
    let cb = pair.orbit_b.centroid();
    let delta_sq = ca.iter().zip(&cb).map(|(&a, &b)| (a - b) * (a - b)).sum();
    let radius = (pair.orbit_a.radius() + pair.orbit_b.radius()) * T::c(0.5);
    let inverse_radius = if radius > T::zero() { T::one() / radius } else { T::infinity() };
    OrbitGeometry { delta_sq, radius, inverse_radius }
}

/// The C_n rotation action on R^3 about the x-axis, element k rotating by
/// `2 pi k / n`.
pub fn circle_rotation_action<T: Scalar>(n: usize) -> Result<GroupAction<T>> {
    let group = cyclic_group(n)?;
    let theta = T::c(2.0) * T::PI() / T::c(n as f64);
    let matrices = (0..n)
        .map(|k| {
            let a = theta * T::c(k as f64);
            Mat::from_rows(&[
                vec![T::one(), T::zero(), T::zero()],
                vec![T::zero(), a.cos(), -a.sin()],
                vec![T::zero(), a.sin(), a.cos()],
            ])
        })
        .collect();
    GroupAction::new(group, matrices)
}

/// The synthetic circular dataset: two geometrically interleaved C_n orbits
/// on the unit circle in the yz-plane, pushed apart by `delta` along x.
///
/// Seeds are `(delta/2, 1, 0)` and `(-delta/2, cos(theta/2), sin(theta/2))`
/// with `theta = 2 pi / n`, so each A point is equidistant from its two
/// nearest B neighbors.
pub fn circular_dataset<T: Scalar>(n: usize, delta: T) -> Result<PairedOrbitDataset<T>> {
    if n < 2 {
        return Err(Error::TooFewPoints { min: 2, got: n });
    }
    let theta = T::c(2.0) * T::PI() / T::c(n as f64);
    let half = delta / T::c(2.0);
    let point = |x: T, angle: T| vec![x, angle.cos(), angle.sin()];
    let orbit = |x: T, phase: T| -> Orbit<T> {
        let points: Vec<Vec<T>> =
            (0..n).map(|i| point(x, theta * T::c(i as f64) + phase)).collect();
        Orbit { seed: points[0].clone(), points, action: ActionKind::Rotation3d { n } }
    };
    let orbit_a = orbit(half, T::zero());
    let orbit_b = orbit(-half, theta / T::c(2.0));
    PairedOrbitDataset::interleave(orbit_a, orbit_b)
}

/// The C_4 orbit of cardinal rotations, exact pixel permutations.
pub fn cardinal_rotation_orbit<T: Scalar>(img: &Image<T>) -> Orbit<T> {
    let mut points = Vec::with_capacity(4);
    let mut frame = img.clone();
    for _ in 0..4 {
        points.push(frame.pixels().to_vec());
        frame = rot90(&frame);
    }
    Orbit { seed: img.pixels().to_vec(), points, action: ActionKind::CardinalRotation }
}

/// The C_side orbit of circular row shifts: `points[k](i, j) = img((i+k) mod
/// side, j)`.
pub fn translation_orbit<T: Scalar>(img: &Image<T>) -> Orbit<T> {
    let n = img.side();
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let mut shifted = Image::zeros(n);
        for i in 0..n {
            for j in 0..n {
                shifted.set(i, j, img.get((i + k) % n, j));
            }
        }
        points.push(shifted.into_pixels());
    }
    Orbit { seed: img.pixels().to_vec(), points, action: ActionKind::PixelTranslation }
}

/// The orbit of `n_rot` image rotations in increments of `2 pi / n_rot`.
///
/// Interpolated frames are optionally renormalized to the sphere (bilinear
/// rotation is not exactly norm-preserving); permutation frames are exact
/// either way.
pub fn rotation_orbit<T: Scalar>(img: &Image<T>, n_rot: usize, renormalize: bool) -> Result<Orbit<T>> {
    if n_rot < 1 {
        return Err(Error::TooFewPoints { min: 1, got: n_rot });
    }
    let step = T::c(2.0) * T::PI() / T::c(n_rot as f64);
    let mut points = Vec::with_capacity(n_rot);
    for k in 0..n_rot {
        let mut frame = rotate_image(img, step * T::c(k as f64));
        if renormalize {
            frame = frame.normalized()?;
        }
        points.push(frame.into_pixels());
    }
    Ok(Orbit { seed: img.pixels().to_vec(), points, action: ActionKind::ImageRotation { n: n_rot } })
}

/// Each point scaled to unit Euclidean norm.
pub fn normalize_to_sphere<T: Scalar>(points: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    points
        .iter()
        .map(|p| {
            let n = p.iter().map(|&v| v * v).sum::<T>().sqrt();
            if !(n > T::zero()) {
                return Err(Error::ZeroNorm);
            }
            Ok(p.iter().map(|&v| v / n).collect())
        })
        .collect()
}

/// The D4 x C2 orbit of a 2x2 image: pixel permutations times a global sign,
/// 16 points, labels following the C2 sign.
#[derive(Debug, Clone)]
pub struct D4c2Dataset<T> {
    pub group: FiniteGroup,
    pub action: GroupAction<T>,
    pub seed_point: Vec<T>,
    pub points: Vec<Vec<T>>,
    pub labels: Vec<T>,
}

/// The signed-permutation action of D4 x C2 on flattened 2x2 images, element
/// order `(d4 index) * 2 + (c2 index)`.
pub fn d4c2_action<T: Scalar>() -> GroupAction<T> {
    let group = direct_product(&dihedral_group_4(), &cyclic_group(2).expect("C2 exists"));
    let maps = d4_pixel_source_maps(2);
    let matrices = (0..16)
        .map(|g| {
            let (d4, c2) = (g / 2, g % 2);
            let sign = if c2 == 0 { T::one() } else { -T::one() };
            let mut m = Mat::zeros(4, 4);
            for (i, &src) in maps[d4].iter().enumerate() {
                m[(i, src)] = sign;
            }
            m
        })
        .collect();
    GroupAction::new(group, matrices).expect("signed permutations form a valid action")
}

/// Builds the D4 x C2 dataset from an explicit random part.
///
/// The random part is mean-centered (its all-ones component is projected
/// out) before the separation offset `(separation/2) * ones/|ones|` is
/// added, so the +-class centroids sit symmetrically on the ones axis at
/// exactly `separation` apart.
pub fn d4c2_dataset_from_random_part<T: Scalar>(
    random_part: &[T; 4],
    separation: T,
) -> Result<D4c2Dataset<T>> {
    if !(separation >= T::zero()) {
        return Err(Error::InvalidParameter("separation must be nonnegative"));
    }
    let mean = random_part.iter().copied().sum::<T>() / T::c(4.0);
    let offset = separation / T::c(4.0); // (separation/2) * (1/2) per component
    let seed_point: Vec<T> = random_part.iter().map(|&v| v - mean + offset).collect();
    let action = d4c2_action::<T>();
    let points: Vec<Vec<T>> = (0..16).map(|g| action.apply(g, &seed_point)).collect();
    let labels: Vec<T> =
        (0..16).map(|g| if g % 2 == 0 { T::one() } else { -T::one() }).collect();
    Ok(D4c2Dataset { group: action.group.clone(), action, seed_point, points, labels })
}

/// The D4 x C2 dataset with a seeded Gaussian random part.
pub fn d4c2_dataset<T: Scalar>(separation: T, rng_seed: u64) -> Result<D4c2Dataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut random_part = [T::zero(); 4];
    for v in random_part.iter_mut() {
        *v = T::c(rng.sample::<f64, _>(StandardNormal));
    }
    d4c2_dataset_from_random_part(&random_part, separation)
}

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf).map_err(|_| Error::IdxLength { expected: 4, got: 0 })?;
    Ok(u32::from_be_bytes(buf))
}

/// Raw IDX image payload: big-endian header, then `count * rows * cols`
/// unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawIdxImages {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

impl RawIdxImages {
    pub fn count(&self) -> usize {
        self.data.len().checked_div(self.rows * self.cols).unwrap_or(0)
    }
}

pub fn read_idx_images(path: &Path) -> Result<RawIdxImages> {
    let mut reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_u32_be(&mut reader)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::IdxFormat(format!("bad image magic 0x{magic:08x}")));
    }
    let count = read_u32_be(&mut reader)? as usize;
    let rows = read_u32_be(&mut reader)? as usize;
    let cols = read_u32_be(&mut reader)? as usize;
    let expected = count * rows * cols;
    let mut data = Vec::with_capacity(expected);
    reader.read_to_end(&mut data)?;
    if data.len() != expected {
        return Err(Error::IdxLength { expected, got: data.len() });
    }
    Ok(RawIdxImages { rows, cols, data })
}

pub fn write_idx_images(path: &Path, images: &RawIdxImages) -> Result<()> {
    let mut writer = std::io::BufWriter::new(std::fs::File::create(path)?);
    writer.write_all(&IDX_IMAGE_MAGIC.to_be_bytes())?;
    writer.write_all(&(images.count() as u32).to_be_bytes())?;
    writer.write_all(&(images.rows as u32).to_be_bytes())?;
    writer.write_all(&(images.cols as u32).to_be_bytes())?;
    writer.write_all(&images.data)?;
    Ok(())
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let mut reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_u32_be(&mut reader)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::IdxFormat(format!("bad label magic 0x{magic:08x}")));
    }
    let count = read_u32_be(&mut reader)? as usize;
    let mut data = Vec::with_capacity(count);
    reader.read_to_end(&mut data)?;
    if data.len() != count {
        return Err(Error::IdxLength { expected: count, got: data.len() });
    }
    Ok(data)
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut writer = std::io::BufWriter::new(std::fs::File::create(path)?);
    writer.write_all(&IDX_LABEL_MAGIC.to_be_bytes())?;
    writer.write_all(&(labels.len() as u32).to_be_bytes())?;
    writer.write_all(labels)?;
    Ok(())
}

/// Loads an IDX image/label pair as square images with pixels scaled to
/// [0, 1].
pub fn load_labeled_images<T: Scalar>(
    images_path: &Path,
    labels_path: &Path,
) -> Result<Vec<(Image<T>, u8)>> {
    let raw = read_idx_images(images_path)?;
    if raw.rows != raw.cols {
        return Err(Error::IdxFormat(format!("images are {}x{}, need square", raw.rows, raw.cols)));
    }
    let labels = read_idx_labels(labels_path)?;
    if labels.len() != raw.count() {
        return Err(Error::IdxFormat(format!(
            "{} images but {} labels",
            raw.count(),
            labels.len()
        )));
    }
    let side = raw.rows;
    let scale = T::one() / T::c(255.0);
    let mut out = Vec::with_capacity(raw.count());
    for (idx, &label) in labels.iter().enumerate() {
        let pixels = raw.data[idx * side * side..(idx + 1) * side * side]
            .iter()
            .map(|&b| T::c(b as f64) * scale)
            .collect();
        out.push((Image::new(side, pixels)?, label));
    }
    Ok(out)
}

/// Side length of synthetic digits.
pub const SYNTHETIC_SIDE: usize = 28;

/// A deterministic synthetic "digit": a sum of 2-4 smooth blobs whose
/// placement is class-specific with per-seed jitter. Classes get distinct
/// blob layouts (controls centroid separation); blob offsets from the image
/// center vary (controls orbit radius under rotation).
pub fn synthetic_digit<T: Scalar>(class: usize, seed_index: usize, corpus_seed: u64) -> Image<T> {
    let side = SYNTHETIC_SIDE;
    let mut class_rng = ChaCha8Rng::seed_from_u64(
        corpus_seed ^ (class as u64).wrapping_mul(0xA076_1D64_78BD_642F),
    );
    let n_blobs = 2 + class % 3;
    // The blob distance from the image center controls the orbit radius
    // under rotation (central mass is nearly rotation-invariant), so classes
    // span compact-central through far-off-center layouts.
    let class_reach = 0.5 + 9.5 * (class_rng.random::<f64>()).powf(1.5);
    let layout: Vec<(f64, f64, f64, f64)> = (0..n_blobs)
        .map(|_| {
            let angle = class_rng.random::<f64>() * std::f64::consts::TAU;
            let dist = class_reach * (0.4 + 0.6 * class_rng.random::<f64>());
            let width = 1.8 + class_rng.random::<f64>() * 2.6;
            let amp = 0.6 + class_rng.random::<f64>() * 0.8;
            (angle, dist, width, amp)
        })
        .collect();
    let mut seed_rng = ChaCha8Rng::seed_from_u64(
        corpus_seed
            ^ (class as u64).wrapping_mul(0xA076_1D64_78BD_642F)
            ^ (seed_index as u64 + 1).wrapping_mul(0xE703_7ED1_A0B4_28DB),
    );
    let center = (side as f64 - 1.0) / 2.0;
    let mut pixels = vec![0.0f64; side * side];
    for &(angle, dist, width, amp) in &layout {
        let jitter_a = (seed_rng.random::<f64>() - 0.5) * 0.5;
        let jitter_d = (seed_rng.random::<f64>() - 0.5) * 2.0;
        let jitter_w = (seed_rng.random::<f64>() - 0.5) * 0.8;
        let jitter_amp = (seed_rng.random::<f64>() - 0.5) * 0.3;
        let a = angle + jitter_a;
        let d = (dist + jitter_d).max(0.5);
        let w = (width + jitter_w).max(1.2);
        let amp = (amp + jitter_amp).max(0.2);
        let (cy, cx) = (center + d * a.sin(), center + d * a.cos());
        for i in 0..side {
            for j in 0..side {
                let r2 = (i as f64 - cy).powi(2) + (j as f64 - cx).powi(2);
                pixels[i * side + j] += amp * (-r2 / (2.0 * w * w)).exp();
            }
        }
    }
    Image { side, pixels: pixels.into_iter().map(T::c).collect() }
}

/// `n_classes` lists of `seeds_per_class` deterministic synthetic digits.
pub fn synthetic_corpus<T: Scalar>(
    n_classes: usize,
    seeds_per_class: usize,
    corpus_seed: u64,
) -> Vec<Vec<Image<T>>> {
    (0..n_classes)
        .map(|c| (0..seeds_per_class).map(|s| synthetic_digit(c, s, corpus_seed)).collect())
        .collect()
}

/// Where a digit corpus came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusSource {
    Idx,
    Synthetic,
}

/// Loads `seeds_per_class` digits per class from IDX files in `data_dir`
/// (`train-images-idx3-ubyte` / `train-labels-idx1-ubyte`), or falls back to
/// the synthetic corpus when no directory is given.
pub fn load_corpus<T: Scalar>(
    data_dir: Option<&Path>,
    n_classes: usize,
    seeds_per_class: usize,
    corpus_seed: u64,
) -> Result<(Vec<Vec<Image<T>>>, CorpusSource)> {
    if let Some(dir) = data_dir {
        let labeled = load_labeled_images::<T>(
            &dir.join("train-images-idx3-ubyte"),
            &dir.join("train-labels-idx1-ubyte"),
        )?;
        let mut by_class: Vec<Vec<Image<T>>> = vec![Vec::new(); n_classes];
        for (img, label) in labeled {
            let class = label as usize;
            if class < n_classes && by_class[class].len() < seeds_per_class {
                by_class[class].push(img);
            }
            if by_class.iter().all(|c| c.len() >= seeds_per_class) {
                break;
            }
        }
        for (class, seeds) in by_class.iter().enumerate() {
            if seeds.len() < seeds_per_class {
                return Err(Error::IdxFormat(format!(
                    "class {class} has only {} samples, need {seeds_per_class}",
                    seeds.len()
                )));
            }
        }
        Ok((by_class, CorpusSource::Idx))
    } else {
        Ok((synthetic_corpus(n_classes, seeds_per_class, corpus_seed), CorpusSource::Synthetic))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_image(side: usize) -> Image<f64> {
        Image::new(side, (0..side * side).map(|k| ((k * 31 + 7) % 23) as f64 / 23.0).collect())
            .unwrap()
    }

    #[test]
    fn rotate_zero_is_identity_bit_exact() {
        let img = fixed_image(9);
        let out = rotate_image(&img, 0.0);
        assert_eq!(img, out);
    }

    #[test]
    fn four_quarter_turns_are_identity_bit_exact() {
        let img = fixed_image(8);
        let mut out = img.clone();
        for _ in 0..4 {
            out = rotate_image(&out, std::f64::consts::FRAC_PI_2);
        }
        assert_eq!(img, out);
    }

    #[test]
    fn half_turn_fixes_torus_symmetric_image() {
        // Build an image invariant under the exact 180-degree permutation.
        let n = 8;
        let mut img = fixed_image(n);
        let half = rotate_image(&img, std::f64::consts::PI);
        let sym_pixels: Vec<f64> =
            img.pixels().iter().zip(half.pixels()).map(|(a, b)| (a + b) / 2.0).collect();
        img = Image::new(n, sym_pixels).unwrap();
        let rotated = rotate_image(&img, std::f64::consts::PI);
        for (a, b) in img.pixels().iter().zip(rotated.pixels()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn quarter_turn_is_limit_of_bilinear_path() {
        let img = fixed_image(7);
        let exact = rotate_image(&img, std::f64::consts::FRAC_PI_2);
        let near = rotate_image(&img, std::f64::consts::FRAC_PI_2 - 1e-7);
        for (a, b) in exact.pixels().iter().zip(near.pixels()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn cardinal_orbit_closes_exactly() {
        let img = fixed_image(6);
        let orbit = cardinal_rotation_orbit(&img);
        assert_eq!(orbit.len(), 4);
        assert_eq!(orbit.points[0], img.pixels());
        let back = rot90(&Image::new(6, orbit.points[3].clone()).unwrap());
        assert_eq!(back.pixels(), img.pixels());
    }

    #[test]
    fn translation_orbit_closes_and_preserves_norm() {
        let img = fixed_image(5);
        let orbit = translation_orbit(&img);
        assert_eq!(orbit.len(), 5);
        let shifted_once = Image::new(5, orbit.points[1].clone()).unwrap();
        assert!((shifted_once.norm() - img.norm()).abs() < 1e-12);
        // Applying the generator side times returns the seed.
        assert_eq!(orbit.points[0], img.pixels());
        let again = translation_orbit(&shifted_once);
        assert_eq!(again.points[4], img.pixels());
    }

    #[test]
    fn normalize_to_sphere_properties() {
        let unit = vec![vec![1.0, 0.0]];
        assert_eq!(normalize_to_sphere(&unit).unwrap()[0], unit[0]);
        let scaled = normalize_to_sphere(&[vec![0.0, 2.5]]).unwrap();
        assert_eq!(scaled[0], vec![0.0, 1.0]);
        assert!(matches!(normalize_to_sphere(&[vec![0.0, 0.0]]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn circular_dataset_zero_delta_lies_on_unit_circle() {
        let ds = circular_dataset::<f64>(6, 0.0).unwrap();
        let theta = std::f64::consts::TAU / 6.0;
        for (k, p) in ds.interleaved.iter().enumerate() {
            assert!(p[0].abs() < 1e-15);
            let norm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            // Uniformly spaced by theta/2 in the yz-plane.
            let angle = p[2].atan2(p[1]).rem_euclid(std::f64::consts::TAU);
            let want = (k as f64 * theta / 2.0).rem_euclid(std::f64::consts::TAU);
            assert!((angle - want).abs() < 1e-10, "point {k}: {angle} vs {want}");
        }
    }

    #[test]
    fn circular_dataset_is_geometrically_interleaved() {
        let ds = circular_dataset::<f64>(8, 1.0).unwrap();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        for i in 0..8 {
            let a = &ds.orbit_a.points[i];
            let b_same = &ds.orbit_b.points[i];
            let b_prev = &ds.orbit_b.points[(i + 7) % 8];
            assert!((dist(a, b_same) - dist(a, b_prev)).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_dataset_rejects_tiny_n() {
        assert!(matches!(circular_dataset::<f64>(1, 0.0), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn orbit_geometry_of_circular_dataset() {
        for (n, delta) in [(4usize, 0.0f64), (8, 1.0), (12, 2.5)] {
            let ds = circular_dataset::<f64>(n, delta).unwrap();
            let geo = orbit_geometry(&ds);
            assert!((geo.delta_sq - delta * delta).abs() < 1e-12);
            assert!((geo.radius - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_geometry_identical_orbits_and_flat_image() {
        let img = fixed_image(6);
        let orbit = translation_orbit(&img);
        let pair =
            PairedOrbitDataset::interleave(orbit.clone(), orbit).unwrap();
        assert_eq!(orbit_geometry(&pair).delta_sq, 0.0);
        let flat = Image::new(4, vec![0.7f64; 16]).unwrap();
        let o = cardinal_rotation_orbit(&flat);
        let pair = PairedOrbitDataset::interleave(o.clone(), o).unwrap();
        let geo = orbit_geometry(&pair);
        assert_eq!(geo.radius, 0.0);
        assert!(geo.inverse_radius.is_infinite());
    }

    #[test]
    fn d4c2_action_is_orthogonal_homomorphism() {
        let action = d4c2_action::<f64>();
        assert_eq!(action.group.order(), 16);
        assert!(action.orthogonality_deviation() < 1e-12);
        assert!(action.homomorphism_deviation() < 1e-12);
    }

    #[test]
    fn d4c2_dataset_centroid_separation_is_exact() {
        for sep in [0.0, 0.5, 2.0] {
            let ds = d4c2_dataset::<f64>(sep, 99).unwrap();
            let mean = |pts: Vec<&Vec<f64>>| -> Vec<f64> {
                let mut m = vec![0.0; 4];
                for p in &pts {
                    for (slot, v) in m.iter_mut().zip(p.iter()) {
                        *slot += v;
                    }
                }
                m.iter().map(|v| v / pts.len() as f64).collect()
            };
            let plus = mean(ds.points.iter().enumerate().filter(|(g, _)| g % 2 == 0).map(|(_, p)| p).collect());
            let minus = mean(ds.points.iter().enumerate().filter(|(g, _)| g % 2 == 1).map(|(_, p)| p).collect());
            let diff_norm: f64 =
                plus.iter().zip(&minus).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert!((diff_norm - sep).abs() < 1e-12, "sep {sep}: got {diff_norm}");
            // Both centroids lie on the ones axis.
            for c in [&plus, &minus] {
                for i in 1..4 {
                    assert!((c[i] - c[0]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn d4c2_degenerate_seed_collapses_to_sign_pair() {
        let ds = d4c2_dataset_from_random_part(&[0.0f64; 4], 1.0).unwrap();
        for (g, p) in ds.points.iter().enumerate() {
            let want = if g % 2 == 0 { 0.25 } else { -0.25 };
            for v in p {
                assert!((v - want).abs() < 1e-15);
            }
            assert_eq!(ds.labels[g], if g % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn idx_round_trip_is_bit_identical() {
        let dir = std::env::temp_dir().join(format!("symm_kernel_idx_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let raw = RawIdxImages { rows: 3, cols: 3, data: (0u8..18).collect() };
        let img_path = dir.join("imgs-idx3-ubyte");
        write_idx_images(&img_path, &raw).unwrap();
        let back = read_idx_images(&img_path).unwrap();
        assert_eq!(raw, back);
        let labels = vec![7u8, 0, 255];
        let lbl_path = dir.join("lbls-idx1-ubyte");
        write_idx_labels(&lbl_path, &labels).unwrap();
        assert_eq!(read_idx_labels(&lbl_path).unwrap(), labels);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn idx_fixture_pixels_recovered_exactly() {
        let dir = std::env::temp_dir().join(format!("symm_kernel_idx_fx_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        // Two 3x3 images authored byte by byte.
        let data: Vec<u8> = vec![
            0, 51, 102, 153, 204, 255, 10, 20, 30, // image 0
            255, 0, 255, 0, 255, 0, 128, 128, 128, // image 1
        ];
        let raw = RawIdxImages { rows: 3, cols: 3, data: data.clone() };
        let img_path = dir.join("fixture-images-idx3-ubyte");
        let lbl_path = dir.join("fixture-labels-idx1-ubyte");
        write_idx_images(&img_path, &raw).unwrap();
        write_idx_labels(&lbl_path, &[4, 9]).unwrap();
        let loaded = load_labeled_images::<f64>(&img_path, &lbl_path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].1, 4);
        for (k, &byte) in data[..9].iter().enumerate() {
            assert_eq!(loaded[0].0.pixels()[k], byte as f64 / 255.0);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn idx_rejects_bad_magic_and_truncation() {
        let dir = std::env::temp_dir().join(format!("symm_kernel_idx_bad_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad");
        std::fs::write(&path, 0x0000_0802u32.to_be_bytes()).unwrap();
        assert!(matches!(read_idx_images(&path), Err(Error::IdxFormat(_))));
        std::fs::write(&path, []).unwrap();
        assert!(matches!(read_idx_images(&path), Err(Error::IdxLength { .. })));
        let mut truncated = Vec::new();
        truncated.extend(IDX_IMAGE_MAGIC.to_be_bytes());
        truncated.extend(2u32.to_be_bytes());
        truncated.extend(3u32.to_be_bytes());
        truncated.extend(3u32.to_be_bytes());
        truncated.extend([1u8; 5]);
        std::fs::write(&path, truncated).unwrap();
        assert!(matches!(read_idx_images(&path), Err(Error::IdxLength { expected: 18, got: 5 })));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn synthetic_corpus_is_deterministic_and_nontrivial() {
        let a = synthetic_corpus::<f64>(3, 2, 7);
        let b = synthetic_corpus::<f64>(3, 2, 7);
        for (ca, cb) in a.iter().zip(&b) {
            for (ia, ib) in ca.iter().zip(cb) {
                assert_eq!(ia.pixels(), ib.pixels());
            }
        }
        // Distinct classes and seeds differ.
        assert_ne!(a[0][0].pixels(), a[1][0].pixels());
        assert_ne!(a[0][0].pixels(), a[0][1].pixels());
        assert!(a[0][0].norm() > 0.0);
    }
}
