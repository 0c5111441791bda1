//! Vector containers, the `LVEC` binary format and a seeded synthetic
//! generator.
//!
//! Vectors are stored as `f32`, row-major. Every distance in the crate is a
//! squared Euclidean distance accumulated in `f64`, sequentially over the
//! dimensions, so results are bit-reproducible across runs and platforms.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const LVEC_MAGIC: &[u8; 4] = b"LVEC";
pub const LVEC_VERSION: u8 = 0x01;
/// Magic + version + N + D.
pub const LVEC_HEADER_LEN: usize = 4 + 1 + 8 + 8;

/// Squared Euclidean distance between two vectors of equal length.
pub fn squared_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(sq_dist(a, b))
}

/// Unchecked variant of [`squared_distance`] for hot loops.
#[inline]
pub(crate) fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = f64::from(x) - f64::from(y);
        acc += d * d;
    }
    acc
}

/// Squared distance summed in four interleaved lanes, which vectorizes.
/// Differs from [`sq_dist`] only by rounding; callers that prune with it must
/// allow a relative slack far above `D * f64::EPSILON`.
pub(crate) fn sq_dist_lanes(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = f64::from(x[l]) - f64::from(y[l]);
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (&x, &y) in ra.iter().zip(rb) {
        let d = f64::from(x) - f64::from(y);
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `N` vectors of dimension `D`, row-major, all values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    dim: usize,
    data: Vec<f32>,
}

impl VectorDataset {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::invalid("dataset must hold at least one vector"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "data length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn n_vectors(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Copies a contiguous range of rows into a new dataset.
    pub fn slice_rows(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n_vectors() {
            return Err(Error::invalid(format!(
                "row range {range:?} invalid for {} vectors",
                self.n_vectors()
            )));
        }
        Ok(Self {
            dim: self.dim,
            data: self.data[range.start * self.dim..range.end * self.dim].to_vec(),
        })
    }

    pub(crate) fn check_id(&self, id: u32) -> Result<()> {
        if (id as usize) < self.n_vectors() {
            Ok(())
        } else {
            Err(Error::IdOutOfRange {
                id,
                len: self.n_vectors(),
            })
        }
    }

    /// Encodes the dataset in the `LVEC` format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(LVEC_HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(LVEC_MAGIC);
        out.push(LVEC_VERSION);
        out.extend_from_slice(&(self.n_vectors() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes an `LVEC` buffer. The payload length must match the header
    /// exactly; trailing bytes are rejected.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < LVEC_HEADER_LEN {
            return Err(Error::format(format!(
                "file too short for LVEC header ({} bytes)",
                bytes.len()
            )));
        }
        if &bytes[..4] != LVEC_MAGIC {
            return Err(Error::format("bad magic, expected LVEC"));
        }
        if bytes[4] != LVEC_VERSION {
            return Err(Error::format(format!(
                "unsupported LVEC version {}",
                bytes[4]
            )));
        }
        let n = read_u64(&bytes[5..13]);
        let d = read_u64(&bytes[13..21]);
        if n == 0 || d == 0 {
            return Err(Error::format(format!("empty shape {n}x{d}")));
        }
        let payload = &bytes[LVEC_HEADER_LEN..];
        let expected = n
            .checked_mul(d)
            .and_then(|c| c.checked_mul(4))
            .ok_or_else(|| Error::format(format!("shape {n}x{d} overflows")))?;
        if payload.len() as u64 != expected {
            return Err(Error::format(format!(
                "payload is {} bytes, header declares {expected}",
                payload.len()
            )));
        }
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(format!("non-finite value at index {pos}")));
        }
        Ok(Self {
            dim: d as usize,
            data,
        })
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }
}

pub(crate) fn read_u64(b: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&b[..8]);
    u64::from_le_bytes(buf)
}

/// Query vectors, kept separate from the database so a dimension check
/// happens once when they meet an index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    inner: VectorDataset,
}

impl QuerySet {
    pub fn new(inner: VectorDataset) -> Self {
        Self { inner }
    }

    /// The first `count` database vectors, the usual choice of training
    /// queries. Clamped to the dataset size.
    pub fn head_of(dataset: &VectorDataset, count: usize) -> Result<Self> {
        let count = count.min(dataset.n_vectors());
        Ok(Self::new(dataset.slice_rows(0..count)?))
    }

    pub fn n_queries(&self) -> usize {
        self.inner.n_vectors()
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn query(&self, i: usize) -> &[f32] {
        self.inner.row(i)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.inner.rows()
    }

    pub fn ensure_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.dim(),
            })
        }
    }

    pub fn as_dataset(&self) -> &VectorDataset {
        &self.inner
    }
}

/// Isotropic Gaussian mixture with centers drawn uniformly from `[0, 1]^D`.
///
/// Base point `i` belongs to cluster `i % n_clusters`, so any prefix of the
/// base set covers the clusters evenly. Base vectors and queries come from
/// separate RNG streams of the same seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMixture {
    pub n_clusters: usize,
    pub dim: usize,
    pub spread: f64,
    pub seed: u64,
}

impl SyntheticMixture {
    pub fn new(n_clusters: usize, dim: usize, spread: f64, seed: u64) -> Result<Self> {
        if n_clusters == 0 || dim == 0 {
            return Err(Error::invalid("cluster count and dimension must be at least 1"));
        }
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::invalid(format!("spread must be positive, got {spread}")));
        }
        Ok(Self {
            n_clusters,
            dim,
            spread,
            seed,
        })
    }

    fn centers(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_clusters * self.dim)
            .map(|_| rng.random::<f64>())
            .collect()
    }

    fn sample(&self, n: usize, stream: u64, pick: impl Fn(usize, &mut ChaCha8Rng) -> usize) -> Vec<f32> {
        let centers = self.centers();
        let noise = Normal::new(0.0, self.spread).expect("spread validated");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let mut data = Vec::with_capacity(n * self.dim);
        for i in 0..n {
            let c = pick(i, &mut rng);
            let center = &centers[c * self.dim..(c + 1) * self.dim];
            data.extend(center.iter().map(|&m| (m + noise.sample(&mut rng)) as f32));
        }
        data
    }

    /// `n_clusters * per_cluster` database vectors.
    pub fn base(&self, per_cluster: usize) -> Result<VectorDataset> {
        if per_cluster == 0 {
            return Err(Error::invalid("per_cluster must be at least 1"));
        }
        let k = self.n_clusters;
        let data = self.sample(k * per_cluster, 1, |i, _| i % k);
        VectorDataset::new(self.dim, data)
    }

    /// Queries drawn from the same mixture, each from a uniformly chosen
    /// cluster.
    pub fn queries(&self, n_queries: usize) -> Result<QuerySet> {
        if n_queries == 0 {
            return Err(Error::invalid("n_queries must be at least 1"));
        }
        let k = self.n_clusters;
        let data = self.sample(n_queries, 2, |_, rng| rng.random_range(0..k));
        Ok(QuerySet::new(VectorDataset::new(self.dim, data)?))
    }
}

/// Shorthand for [`SyntheticMixture::base`].
pub fn generate_synthetic(
    n_clusters: usize,
    per_cluster: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<VectorDataset> {
    SyntheticMixture::new(n_clusters, dim, spread, seed)?.base(per_cluster)
}
