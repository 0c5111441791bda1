//! The cutoff table: for every database vector, the IDs of all other vectors
//! closer than `sqrt(eps)`.
//!
//! Lists are stored back to back (CSR layout) with ascending IDs. The on-disk
//! `LOTF` format widens IDs to `u64`:
//!
//! ```text
//! "LOTF" | 0x01 | eps: f64 LE | N: u64 LE | N list lengths: u64 LE | IDs: u64 LE
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::read_u64;
use crate::error::{Error, Result};
use crate::index::NeighborIndex;

pub const LOTF_MAGIC: &[u8; 4] = b"LOTF";
pub const LOTF_VERSION: u8 = 0x01;
/// Magic + version + eps + N.
pub const LOTF_HEADER_LEN: usize = 4 + 1 + 8 + 8;

/// Bits charged per stored ID when estimating table memory.
pub const BITS_PER_ENTRY: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffTable {
    epsilon: f64,
    offsets: Vec<usize>,
    ids: Vec<u32>,
}

impl CutoffTable {
    /// Builds a table from explicit lists. Each list must hold IDs below
    /// `lists.len()`, not contain its own index, and have no duplicates; lists
    /// are sorted here.
    pub fn from_lists(epsilon: f64, lists: Vec<Vec<u32>>) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("eps must be finite and >= 0, got {epsilon}")));
        }
        let n = lists.len();
        if n == 0 {
            return Err(Error::invalid("cutoff table needs at least one vector"));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut ids = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for (row, mut list) in lists.into_iter().enumerate() {
            list.sort_unstable();
            check_list(row, &list, n).map_err(Error::InvalidParam)?;
            ids.extend_from_slice(&list);
            offsets.push(ids.len());
        }
        Ok(Self {
            epsilon,
            offsets,
            ids,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_vectors(&self) -> usize {
        self.offsets.len() - 1
    }

    /// The neighbors of `id`, ascending. Panics if `id` is out of range.
    #[inline]
    pub fn list(&self, id: u32) -> &[u32] {
        let i = id as usize;
        &self.ids[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn lists(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.offsets.windows(2).map(|w| &self.ids[w[0]..w[1]])
    }

    pub fn total_entries(&self) -> usize {
        self.ids.len()
    }

    /// Mean list length `L`.
    pub fn avg_list_length(&self) -> f64 {
        self.ids.len() as f64 / self.n_vectors() as f64
    }

    /// Memory estimate with 64-bit IDs: `64 * sum |L_n|`, i.e. `64 L N`.
    pub fn memory_bits(&self) -> u64 {
        BITS_PER_ENTRY * self.ids.len() as u64
    }

    /// Heap bytes actually held by this in-memory representation.
    pub fn actual_bytes(&self) -> usize {
        self.ids.len() * std::mem::size_of::<u32>()
            + self.offsets.len() * std::mem::size_of::<usize>()
    }

    /// `i` in `L_j` exactly when `j` in `L_i`. Tables from an exact index are
    /// always symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.lists().enumerate().all(|(j, list)| {
            list.iter()
                .all(|&i| self.list(i).binary_search(&(j as u32)).is_ok())
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.n_vectors();
        let mut out = Vec::with_capacity(LOTF_HEADER_LEN + 8 * (n + self.ids.len()));
        out.extend_from_slice(LOTF_MAGIC);
        out.push(LOTF_VERSION);
        out.extend_from_slice(&self.epsilon.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for w in self.offsets.windows(2) {
            out.extend_from_slice(&((w[1] - w[0]) as u64).to_le_bytes());
        }
        for &id in &self.ids {
            out.extend_from_slice(&u64::from(id).to_le_bytes());
        }
        out
    }

    /// Decodes and structurally validates a `LOTF` buffer: exact length, IDs in
    /// range, strictly ascending, no self references. Symmetry is not
    /// required since approximate backbones may not produce it.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < LOTF_HEADER_LEN {
            return Err(Error::format(format!(
                "file too short for LOTF header ({} bytes)",
                bytes.len()
            )));
        }
        if &bytes[..4] != LOTF_MAGIC {
            return Err(Error::format("bad magic, expected LOTF"));
        }
        if bytes[4] != LOTF_VERSION {
            return Err(Error::format(format!("unsupported LOTF version {}", bytes[4])));
        }
        let epsilon = f64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::format(format!("invalid eps {epsilon}")));
        }
        let n = read_u64(&bytes[13..21]);
        if n == 0 {
            return Err(Error::format("table declares zero vectors"));
        }
        if n > u64::from(u32::MAX) {
            return Err(Error::format(format!("{n} vectors exceed the u32 id space")));
        }
        let body = &bytes[LOTF_HEADER_LEN..];
        // Check the length table fits before allocating for it.
        let lengths_len = (n as usize)
            .checked_mul(8)
            .filter(|&l| l <= body.len())
            .ok_or_else(|| Error::format("truncated list lengths"))?;
        let (lengths, payload) = body.split_at(lengths_len);
        if payload.len() % 8 != 0 {
            return Err(Error::format("payload is not a whole number of u64 ids"));
        }
        let available = (payload.len() / 8) as u64;
        let mut offsets = Vec::with_capacity(n as usize + 1);
        offsets.push(0usize);
        let mut total = 0u64;
        for chunk in lengths.chunks_exact(8) {
            total = total
                .checked_add(read_u64(chunk))
                .filter(|&t| t <= available)
                .ok_or_else(|| Error::format("list lengths exceed payload"))?;
            offsets.push(total as usize);
        }
        if total != available {
            return Err(Error::format(format!(
                "payload holds {available} ids, lengths declare {total}"
            )));
        }
        let mut ids = Vec::with_capacity(total as usize);
        for chunk in payload.chunks_exact(8) {
            let id = read_u64(chunk);
            if id >= n {
                return Err(Error::format(format!("id {id} out of range for {n} vectors")));
            }
            ids.push(id as u32);
        }
        let table = Self {
            epsilon,
            offsets,
            ids,
        };
        for (row, list) in table.lists().enumerate() {
            check_list(row, list, n as usize).map_err(Error::Format)?;
        }
        Ok(table)
    }

    pub fn serialize(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn deserialize(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn check_list(row: usize, list: &[u32], n: usize) -> std::result::Result<(), String> {
    if let Some(&bad) = list.iter().find(|&&id| id as usize >= n) {
        return Err(format!("list {row}: id {bad} out of range for {n} vectors"));
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("list {row}: ids not strictly ascending"));
    }
    if list.binary_search(&(row as u32)).is_ok() {
        return Err(format!("list {row} contains its own id"));
    }
    Ok(())
}

/// One range search per database vector. Parallel over rows; the result does
/// not depend on the thread count.
pub fn build_cutoff_table<I: NeighborIndex>(index: &I, eps: f64) -> Result<CutoffTable> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    let n = index.size();
    let lists = (0..n as u32)
        .into_par_iter()
        .map(|row| index.range_search_row(row, eps))
        .collect::<Result<Vec<_>>>()?;
    CutoffTable::from_lists(eps, lists)
}
