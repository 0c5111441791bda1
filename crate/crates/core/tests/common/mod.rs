//! Naive reference implementations used as test oracles. Kept independent of
//! the library's filter and ordered set.

#![allow(dead_code)]

use lotusfilter::{CutoffTable, VectorDataset};

/// Array with tombstones and linear-scan deletion.
pub struct TombstoneSet {
    slots: Vec<(u32, bool)>,
}

impl TombstoneSet {
    pub fn new(ids: &[u32]) -> Self {
        Self {
            slots: ids.iter().map(|&id| (id, true)).collect(),
        }
    }

    pub fn pop(&mut self) -> Option<u32> {
        let slot = self.slots.iter_mut().find(|s| s.1)?;
        slot.1 = false;
        Some(slot.0)
    }

    pub fn remove(&mut self, id: u32) {
        if let Some(slot) = self.slots.iter_mut().find(|s| s.0 == id) {
            slot.1 = false;
        }
    }

    pub fn len(&self) -> usize {
        self.slots.iter().filter(|s| s.1).count()
    }

    pub fn drain(&mut self) -> Vec<u32> {
        let out = self.slots.iter().filter(|s| s.1).map(|s| s.0).collect();
        self.slots.iter_mut().for_each(|s| s.1 = false);
        out
    }
}

/// Greedy filter over a plain candidate array: accept the first live entry,
/// strike every live entry found in its cutoff list, repeat. With the
/// safeguard, a strike that would make `k` unreachable is abandoned and the
/// result is topped up from the live entries in order.
pub fn naive_filter(
    candidates: &[u32],
    table: &CutoffTable,
    k: usize,
    safeguard: bool,
) -> (Vec<u32>, bool) {
    let mut live: Vec<Option<u32>> = candidates.iter().map(|&c| Some(c)).collect();
    let mut out = Vec::new();
    let mut truncated = false;
    while out.len() < k {
        let Some(pos) = live.iter().position(Option::is_some) else {
            truncated = true;
            break;
        };
        out.push(live[pos].take().unwrap());
        if out.len() == k {
            break;
        }
        let head = *out.last().unwrap();
        let strike: Vec<usize> = (0..live.len())
            .filter(|&i| matches!(live[i], Some(id) if table.list(head).contains(&id)))
            .collect();
        let remaining = live.iter().flatten().count() - strike.len();
        if safeguard && out.len() + remaining < k {
            let need = k - out.len();
            out.extend(live.iter().flatten().copied().take(need));
            truncated = true;
            break;
        }
        for i in strike {
            live[i] = None;
        }
    }
    if out.len() < k {
        truncated = true;
    }
    (out, truncated)
}

pub fn brute_sq(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        s += d * d;
    }
    s
}

/// Brute-force cutoff lists.
pub fn brute_lists(data: &VectorDataset, eps: f64) -> Vec<Vec<u32>> {
    let n = data.n_vectors();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && brute_sq(data.row(i), data.row(j)) < eps)
                .map(|j| j as u32)
                .collect()
        })
        .collect()
}

/// Uniform random vectors in `[0, 1)^dim`.
pub fn uniform_dataset(rng: &mut impl rand::Rng, n: usize, dim: usize) -> VectorDataset {
    let data = (0..n * dim).map(|_| rng.random::<f32>()).collect();
    VectorDataset::new(dim, data).unwrap()
}

/// Symmetric random table over `n` ids with edge probability `p`.
pub fn random_table(rng: &mut impl rand::Rng, n: usize, p: f64) -> CutoffTable {
    let mut lists = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                lists[i].push(j as u32);
                lists[j].push(i as u32);
            }
        }
    }
    CutoffTable::from_lists(1.0, lists).unwrap()
}
