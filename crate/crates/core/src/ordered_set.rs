//! Array + hash-set hybrid giving ordered pop and O(1) average removal.
//!
//! Removal only touches the hash set; the array is never modified. `pop`
//! advances a cursor past entries that are no longer members, so the cost of
//! a pop is the number of entries removed ahead of the cursor since the
//! previous pop, and the total cursor movement over the set's lifetime is at
//! most `V`.

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OrderedSet {
    order: Vec<u32>,
    members: FxHashSet<u32>,
    cursor: usize,
    advances: usize,
}

impl OrderedSet {
    /// Fails with [`Error::DuplicateId`] if `ids` repeats an element.
    pub fn new(ids: Vec<u32>) -> Result<Self> {
        let mut members = FxHashSet::with_capacity_and_hasher(ids.len(), Default::default());
        for &id in &ids {
            if !members.insert(id) {
                return Err(Error::DuplicateId(id));
            }
        }
        Ok(Self {
            order: ids,
            members,
            cursor: 0,
            advances: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.members.contains(&id)
    }

    /// Removes and returns the earliest remaining element in input order.
    pub fn pop(&mut self) -> Result<u32> {
        if self.members.is_empty() {
            return Err(Error::EmptySet);
        }
        while !self.members.contains(&self.order[self.cursor]) {
            self.cursor += 1;
            self.advances += 1;
        }
        let id = self.order[self.cursor];
        self.members.remove(&id);
        self.cursor += 1;
        self.advances += 1;
        Ok(id)
    }

    /// Shallow delete. Returns whether `id` was a member; removing a
    /// non-member is a no-op.
    pub fn remove(&mut self, id: u32) -> bool {
        self.members.remove(&id)
    }

    /// All remaining members in input order; leaves the set empty.
    pub fn drain_in_order(&mut self) -> Vec<u32> {
        let rest: Vec<u32> = self.order[self.cursor..]
            .iter()
            .copied()
            .filter(|id| self.members.contains(id))
            .collect();
        self.advances += self.order.len() - self.cursor;
        self.cursor = self.order.len();
        self.members.clear();
        rest
    }

    /// Diagnostic: total cursor moves so far. Never exceeds the input length.
    pub fn cursor_advances(&self) -> usize {
        self.advances
    }
}
