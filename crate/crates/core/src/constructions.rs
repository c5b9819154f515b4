//! Contrast datasets `(W, Z)` built from supervised data.
//!
//! Matched pairs (`Z = 1`) follow the joint law of `(X, Y)`; mismatched pairs
//! (`Z = 0`) pair a feature row with a target row from a different source
//! observation (or from an unpaired pool), so they follow the product of the
//! marginals. Five builders are provided:
//!
//! | builder                  | data setting                 | samples      |
//! |--------------------------|------------------------------|--------------|
//! | [`build_iid`]            | paired                       | i.i.d.       |
//! | [`build_id`]             | paired                       | i.d., larger |
//! | [`build_iid_additional`] | paired + unpaired            | i.i.d.       |
//! | [`build_id_additional`]  | paired + unpaired            | i.d., larger |
//! | [`build_id_multitarget`] | several targets per row      | i.d., larger |
//!
//! The i.d. builders enumerate a candidate grid of index pairs in row-major
//! order and sample from it without replacement, so the label counts are
//! exact rather than Bernoulli.

use std::cmp::Ordering;
use std::collections::HashMap;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contrast::Ratio;
use crate::data::{MarginalDatasets, MultiTargetDataset, SupervisedDataset};
use crate::error::{McdError, Result};

/// Where a feature or target row of a contrast sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowOrigin {
    /// Row `i` of the paired dataset.
    Paired(usize),
    /// Row `i` of the unpaired extra pool.
    Extra(usize),
}

/// Provenance of one contrast sample: the feature row, the target row and,
/// for multi-target data, which draw of that row's targets was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairSource {
    pub x: RowOrigin,
    pub y: RowOrigin,
    pub draw: usize,
}

impl PairSource {
    fn paired(xi: usize, yi: usize) -> Self {
        PairSource {
            x: RowOrigin::Paired(xi),
            y: RowOrigin::Paired(yi),
            draw: 0,
        }
    }

    /// True when feature and target come from the same paired observation.
    pub fn is_matched(&self) -> bool {
        matches!((self.x, self.y), (RowOrigin::Paired(a), RowOrigin::Paired(b)) if a == b)
    }
}

/// Labelled contrast samples. Row `i` of `w` is `(x, y)` concatenated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastDataset {
    w: Array2<f64>,
    z: Vec<u8>,
    sources: Vec<PairSource>,
    feature_dim: usize,
    n_joint: usize,
    n_marg: usize,
}

impl ContrastDataset {
    /// Assemble a contrast set directly from rows and labels (no provenance
    /// checks beyond shapes). Used for external data and tests.
    pub fn from_parts(w: Array2<f64>, z: Vec<u8>, feature_dim: usize) -> Result<Self> {
        if w.nrows() != z.len() {
            return Err(McdError::ShapeMismatch(format!(
                "{} rows but {} labels",
                w.nrows(),
                z.len()
            )));
        }
        if w.nrows() == 0 {
            return Err(McdError::InvalidArgument(
                "contrast dataset must be nonempty".into(),
            ));
        }
        if feature_dim > w.ncols() {
            return Err(McdError::ShapeMismatch(format!(
                "feature width {feature_dim} exceeds row width {}",
                w.ncols()
            )));
        }
        if let Some(bad) = z.iter().find(|&&v| v > 1) {
            return Err(McdError::InvalidArgument(format!(
                "labels must be 0 or 1, got {bad}"
            )));
        }
        let n_joint = z.iter().filter(|&&v| v == 1).count();
        let n = z.len();
        Ok(ContrastDataset {
            sources: Vec::new(),
            w,
            z,
            feature_dim,
            n_joint,
            n_marg: n - n_joint,
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn z(&self) -> &[u8] {
        &self.z
    }

    /// Provenance per row; empty for sets built with [`ContrastDataset::from_parts`].
    pub fn sources(&self) -> &[PairSource] {
        &self.sources
    }

    pub fn width(&self) -> usize {
        self.w.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn n_joint(&self) -> usize {
        self.n_joint
    }

    pub fn n_marg(&self) -> usize {
        self.n_marg
    }

    /// `n_joint / N`.
    pub fn realized_ratio(&self) -> f64 {
        self.n_joint as f64 / self.len() as f64
    }

    /// Keep the rows at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let w = self.w.select(ndarray::Axis(0), indices);
        let z: Vec<u8> = indices.iter().map(|&i| self.z[i]).collect();
        let sources = if self.sources.is_empty() {
            Vec::new()
        } else {
            indices.iter().map(|&i| self.sources[i]).collect()
        };
        let n_joint = z.iter().filter(|&&v| v == 1).count();
        let n_marg = z.len() - n_joint;
        ContrastDataset {
            w,
            z,
            sources,
            feature_dim: self.feature_dim,
            n_joint,
            n_marg,
        }
    }
}

struct RowBuffer {
    width: usize,
    feature_dim: usize,
    data: Vec<f64>,
    z: Vec<u8>,
    sources: Vec<PairSource>,
}

impl RowBuffer {
    fn new(feature_dim: usize, target_dim: usize, capacity: usize) -> Self {
        let width = feature_dim + target_dim;
        RowBuffer {
            width,
            feature_dim,
            data: Vec::with_capacity(capacity * width),
            z: Vec::with_capacity(capacity),
            sources: Vec::with_capacity(capacity),
        }
    }

    fn push(&mut self, x: ArrayView1<f64>, y: ArrayView1<f64>, z: bool, src: PairSource) {
        self.data.extend(x.iter());
        self.data.extend(y.iter());
        self.z.push(z as u8);
        self.sources.push(src);
    }

    fn push_scalar_target(&mut self, x: ArrayView1<f64>, y: f64, z: bool, src: PairSource) {
        self.data.extend(x.iter());
        self.data.push(y);
        self.z.push(z as u8);
        self.sources.push(src);
    }

    fn append(&mut self, other: RowBuffer) {
        self.data.extend(other.data);
        self.z.extend(other.z);
        self.sources.extend(other.sources);
    }

    fn finish(self) -> ContrastDataset {
        let n = self.z.len();
        let n_joint = self.z.iter().filter(|&&v| v == 1).count();
        let w = Array2::from_shape_vec((n, self.width), self.data)
            .expect("row buffer length is a multiple of the row width");
        ContrastDataset {
            w,
            z: self.z,
            sources: self.sources,
            feature_dim: self.feature_dim,
            n_joint,
            n_marg: n - n_joint,
        }
    }
}

/// I.i.d. contrast set of size `floor(n / 2)`.
///
/// Sample `i` keeps `(X_i, Y_i)` when its Bernoulli(`r`) label is 1 and uses
/// `(X_i, Y_{i+N})` otherwise.
pub fn build_iid<R: Rng + ?Sized>(
    d: &SupervisedDataset,
    r: Ratio,
    rng: &mut R,
) -> Result<ContrastDataset> {
    let half = d.len() / 2;
    if half == 0 {
        return Err(McdError::DatasetTooSmall {
            construction: "i.i.d.",
            n: d.len(),
        });
    }
    let labels: Vec<bool> = (0..half).map(|_| rng.random_bool(r.value())).collect();
    Ok(iid_rows(d, &labels).finish())
}

/// Rows of the i.i.d. construction for a fixed label draw; uses the first
/// `2 * labels.len()` rows of `d`.
fn iid_rows(d: &SupervisedDataset, labels: &[bool]) -> RowBuffer {
    let half = labels.len();
    let mut buf = RowBuffer::new(d.feature_dim(), d.target_dim(), half);
    for (i, &z) in labels.iter().enumerate() {
        let yi = if z { i } else { i + half };
        buf.push(d.x_row(i), d.y_row(yi), z, PairSource::paired(i, yi));
    }
    buf
}

/// [`build_iid`] with the labels supplied instead of drawn.
pub fn build_iid_with_labels(d: &SupervisedDataset, labels: &[bool]) -> Result<ContrastDataset> {
    if labels.is_empty() || 2 * labels.len() > d.len() {
        return Err(McdError::DatasetTooSmall {
            construction: "i.i.d.",
            n: d.len(),
        });
    }
    Ok(iid_rows(d, labels).finish())
}

/// Sizes of the three sub-datasets of the i.i.d. construction with unpaired data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IidAdditionalSizes {
    /// Samples whose mismatched feature comes from the extra X pool.
    pub substituted_x: usize,
    /// Samples whose mismatched target comes from the extra Y pool.
    pub substituted_y: usize,
    /// Plain i.i.d. samples built from pairs of paired rows.
    pub plain: usize,
}

impl IidAdditionalSizes {
    pub fn new(n: usize, n_x: usize, n_y: usize) -> Self {
        let substituted_x = n.min(n_x);
        let substituted_y = n_y.min(n - substituted_x);
        let plain = (n - substituted_x - substituted_y) / 2;
        IidAdditionalSizes {
            substituted_x,
            substituted_y,
            plain,
        }
    }

    pub fn total(&self) -> usize {
        self.substituted_x + self.substituted_y + self.plain
    }
}

/// I.i.d. contrast set leveraging unpaired features and targets.
///
/// The paired rows are consumed in order: the first `2 * plain` go through
/// the plain i.i.d. construction, the next `substituted_y` are paired with
/// extra targets, and the next `substituted_x` with extra features. The three
/// blocks are concatenated as (substituted X, substituted Y, plain).
pub fn build_iid_additional<R: Rng + ?Sized>(
    d: &SupervisedDataset,
    extra: &MarginalDatasets,
    r: Ratio,
    rng: &mut R,
) -> Result<ContrastDataset> {
    extra.check_widths(d)?;
    let sizes = IidAdditionalSizes::new(d.len(), extra.n_x(), extra.n_y());
    if sizes.total() == 0 {
        return Err(McdError::DatasetTooSmall {
            construction: "i.i.d. with additional data",
            n: d.len(),
        });
    }
    let (p, k) = (d.feature_dim(), d.target_dim());

    let plain_labels: Vec<bool> = (0..sizes.plain)
        .map(|_| rng.random_bool(r.value()))
        .collect();
    let plain = iid_rows(d, &plain_labels);

    let y_offset = 2 * sizes.plain;
    let mut sub_y = RowBuffer::new(p, k, sizes.substituted_y);
    for i in 0..sizes.substituted_y {
        let row = y_offset + i;
        if rng.random_bool(r.value()) {
            sub_y.push(
                d.x_row(row),
                d.y_row(row),
                true,
                PairSource::paired(row, row),
            );
        } else {
            let src = PairSource {
                x: RowOrigin::Paired(row),
                y: RowOrigin::Extra(i),
                draw: 0,
            };
            sub_y.push(d.x_row(row), extra.extra_y().row(i), false, src);
        }
    }

    let x_offset = y_offset + sizes.substituted_y;
    let mut sub_x = RowBuffer::new(p, k, sizes.substituted_x);
    for i in 0..sizes.substituted_x {
        let row = x_offset + i;
        if rng.random_bool(r.value()) {
            sub_x.push(
                d.x_row(row),
                d.y_row(row),
                true,
                PairSource::paired(row, row),
            );
        } else {
            let src = PairSource {
                x: RowOrigin::Extra(i),
                y: RowOrigin::Paired(row),
                draw: 0,
            };
            sub_x.push(extra.extra_x().row(i), d.y_row(row), false, src);
        }
    }

    sub_x.append(sub_y);
    sub_x.append(plain);
    Ok(sub_x.finish())
}

/// Draws `k` distinct indices uniformly from `0..pool`, in draw order.
///
/// Partial Fisher-Yates over a virtual identity array; only swapped slots
/// are stored, so memory is `O(k)` whatever the pool size.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    pool: usize,
    k: usize,
    rng: &mut R,
) -> Vec<usize> {
    assert!(k <= pool, "cannot draw {k} items from a pool of {pool}");
    let mut displaced: HashMap<usize, usize> = HashMap::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = rng.random_range(i..pool);
        let at_i = displaced.get(&i).copied().unwrap_or(i);
        let at_j = displaced.get(&j).copied().unwrap_or(j);
        displaced.insert(j, at_i);
        out.push(at_j);
    }
    out
}

/// Off-diagonal cell `t` of an `n x n` grid in row-major order, as `(row, col)`.
#[inline]
fn off_diagonal(t: usize, n: usize) -> (usize, usize) {
    let j = t / (n - 1);
    let c = t % (n - 1);
    let k = if c < j { c } else { c + 1 };
    (j, k)
}

fn normalized_row(row: ArrayView1<f64>) -> Vec<f64> {
    // folds -0.0 into +0.0 so equal values compare equal
    row.iter().map(|v| v + 0.0).collect()
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// First pair of indices holding identical rows, if any.
fn find_duplicate(rows: Vec<Vec<f64>>) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| lexicographic(&rows[a], &rows[b]).then(a.cmp(&b)));
    order.windows(2).find_map(|w| {
        if rows[w[0]] == rows[w[1]] {
            Some((w[0].min(w[1]), w[0].max(w[1])))
        } else {
            None
        }
    })
}

fn ensure_distinct(rows: Vec<Vec<f64>>, what: &'static str) -> Result<()> {
    match find_duplicate(rows) {
        Some((first, second)) => Err(McdError::DuplicateRows {
            what,
            first,
            second,
        }),
        None => Ok(()),
    }
}

fn check_counts(n_joint: usize, joint_cap: usize, n_marg: usize, marg_cap: usize) -> Result<()> {
    if n_joint == 0 || n_joint > joint_cap {
        return Err(McdError::InvalidArgument(format!(
            "n_joint must lie in [1, {joint_cap}], got {n_joint}"
        )));
    }
    if n_marg == 0 || n_marg > marg_cap {
        return Err(McdError::InvalidArgument(format!(
            "n_marg must lie in [1, {marg_cap}], got {n_marg}"
        )));
    }
    Ok(())
}

/// Steps shared by every i.d. builder: sample matched and mismatched
/// candidates without replacement, concatenate and shuffle.
fn sample_id_entries<R: Rng + ?Sized>(
    matched_pool: usize,
    n_joint: usize,
    mismatched_pool: usize,
    n_marg: usize,
    rng: &mut R,
) -> Vec<(bool, usize)> {
    let mut entries: Vec<(bool, usize)> = sample_without_replacement(matched_pool, n_joint, rng)
        .into_iter()
        .map(|i| (true, i))
        .collect();
    entries.extend(
        sample_without_replacement(mismatched_pool, n_marg, rng)
            .into_iter()
            .map(|i| (false, i)),
    );
    entries.shuffle(rng);
    entries
}

/// Number of mismatched candidates available to [`build_id`]: `n (n - 1)`.
pub fn id_mismatched_pool(n: usize) -> usize {
    n * n.saturating_sub(1)
}

/// Number of mismatched candidates available to [`build_id_additional`]:
/// `(n + n_x)(n + n_y) - n`.
pub fn id_additional_mismatched_pool(n: usize, n_x: usize, n_y: usize) -> usize {
    (n + n_x) * (n + n_y) - n
}

/// Number of mismatched candidates available to [`build_id_multitarget`]:
/// `n (n - 1) m`.
pub fn multitarget_mismatched_pool(n: usize, m: usize) -> usize {
    id_mismatched_pool(n) * m
}

/// Larger identically distributed contrast set with exactly `n_joint`
/// matched and `n_marg` mismatched samples.
///
/// Candidates are the `n^2` pairs `(X_j, Y_k)` in row-major order, labelled
/// 1 on the diagonal. Rows of `X` and of `Y` must be pairwise distinct.
pub fn build_id<R: Rng + ?Sized>(
    d: &SupervisedDataset,
    n_joint: usize,
    n_marg: usize,
    rng: &mut R,
) -> Result<ContrastDataset> {
    build_id_additional(
        d,
        &MarginalDatasets::empty(d.feature_dim(), d.target_dim()),
        n_joint,
        n_marg,
        rng,
    )
}

/// I.d. contrast set whose mismatched pool also covers the unpaired rows.
///
/// The mismatched candidates are, in order: the off-diagonal paired grid,
/// `(extra X_k, Y_j)`, `(X_j, extra Y_k)` and `(extra X_j, extra Y_k)`.
pub fn build_id_additional<R: Rng + ?Sized>(
    d: &SupervisedDataset,
    extra: &MarginalDatasets,
    n_joint: usize,
    n_marg: usize,
    rng: &mut R,
) -> Result<ContrastDataset> {
    extra.check_widths(d)?;
    let n = d.len();
    let (n_x, n_y) = (extra.n_x(), extra.n_y());
    let off_pool = id_mismatched_pool(n);
    let pool = id_additional_mismatched_pool(n, n_x, n_y);
    check_counts(n_joint, n, n_marg, pool)?;

    let xs = d.x().rows().into_iter().chain(extra.extra_x().rows());
    ensure_distinct(xs.map(normalized_row).collect(), "feature")?;
    let ys = d.y().rows().into_iter().chain(extra.extra_y().rows());
    ensure_distinct(ys.map(normalized_row).collect(), "target")?;

    let entries = sample_id_entries(n, n_joint, pool, n_marg, rng);
    let mut buf = RowBuffer::new(d.feature_dim(), d.target_dim(), entries.len());
    for (matched, idx) in entries {
        if matched {
            buf.push(
                d.x_row(idx),
                d.y_row(idx),
                true,
                PairSource::paired(idx, idx),
            );
            continue;
        }
        let (x_origin, y_origin) = mismatched_candidate(idx, n, n_x, n_y, off_pool);
        let x = match x_origin {
            RowOrigin::Paired(i) => d.x_row(i),
            RowOrigin::Extra(i) => extra.extra_x().row(i),
        };
        let y = match y_origin {
            RowOrigin::Paired(i) => d.y_row(i),
            RowOrigin::Extra(i) => extra.extra_y().row(i),
        };
        let src = PairSource {
            x: x_origin,
            y: y_origin,
            draw: 0,
        };
        buf.push(x, y, false, src);
    }
    Ok(buf.finish())
}

/// Maps an index of the concatenated mismatched pool to its (feature, target) origin.
fn mismatched_candidate(
    idx: usize,
    n: usize,
    n_x: usize,
    n_y: usize,
    off_pool: usize,
) -> (RowOrigin, RowOrigin) {
    use RowOrigin::{Extra, Paired};
    let mut t = idx;
    if t < off_pool {
        let (j, k) = off_diagonal(t, n);
        return (Paired(j), Paired(k));
    }
    t -= off_pool;
    if t < n * n_x {
        // (X~_k, Y_j) with j over the paired rows, k over the extra features
        return (Extra(t % n_x), Paired(t / n_x));
    }
    t -= n * n_x;
    if t < n * n_y {
        return (Paired(t / n_y), Extra(t % n_y));
    }
    t -= n * n_y;
    (Extra(t / n_y), Extra(t % n_y))
}

/// I.d. contrast set for `m` target draws per observation.
///
/// Candidates are `(X_j, Y^k_l)` over `(j, k, l)` in row-major order, labelled
/// 1 whenever `j == k`. With `m = 1` this is exactly [`build_id`].
pub fn build_id_multitarget<R: Rng + ?Sized>(
    d: &MultiTargetDataset,
    n_joint: usize,
    n_marg: usize,
    rng: &mut R,
) -> Result<ContrastDataset> {
    let n = d.len();
    let m = d.draws_per_row();
    let pool = multitarget_mismatched_pool(n, m);
    check_counts(n_joint, n * m, n_marg, pool)?;

    ensure_distinct(
        d.x().rows().into_iter().map(normalized_row).collect(),
        "feature",
    )?;
    ensure_distinct(d.y().iter().map(|&v| vec![v + 0.0]).collect(), "target")?;

    let entries = sample_id_entries(n * m, n_joint, pool, n_marg, rng);
    let mut buf = RowBuffer::new(d.feature_dim(), 1, entries.len());
    let y = d.y();
    for (matched, idx) in entries {
        let (j, k, l) = if matched {
            (idx / m, idx / m, idx % m)
        } else {
            let (j, k) = off_diagonal(idx / m, n);
            (j, k, idx % m)
        };
        let src = PairSource {
            x: RowOrigin::Paired(j),
            y: RowOrigin::Paired(k),
            draw: l,
        };
        buf.push_scalar_target(d.x().row(j), y[[k, l]], matched, src);
    }
    Ok(buf.finish())
}

/// Matched/mismatched counts realizing `N = n_joint / r`.
///
/// All available matched pairs are used; the mismatched count is
/// `floor(n_joint / r) - n_joint`, capped at `cap_marg`.
pub fn ratio_to_counts(
    n_available_joint: usize,
    r: Ratio,
    cap_marg: usize,
) -> Result<(usize, usize)> {
    if n_available_joint == 0 || cap_marg == 0 {
        return Err(McdError::InvalidArgument(format!(
            "need at least one joint and one mismatched candidate (got {n_available_joint}, {cap_marg})"
        )));
    }
    let exact = n_available_joint as f64 / r.value();
    let nearest = exact.round();
    // n / r lands a few ulps off an integer for r like 0.05
    let total = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.floor()
    } as usize;
    let n_marg = total.saturating_sub(n_available_joint).min(cap_marg);
    if n_marg == 0 {
        return Err(McdError::InvalidArgument(format!(
            "ratio {r} leaves no mismatched samples for {n_available_joint} joint samples"
        )));
    }
    Ok((n_available_joint, n_marg))
}
