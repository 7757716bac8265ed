//! Storage for learned constraints: the fixed-capacity conflict pool and the
//! unbounded aging list used when the pool is switched off.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::confgraph::ConflictConstraint;
use crate::dualproof::ProofConstraint;
use crate::scalar::Scalar;

pub const MIN_POOL_CAPACITY: usize = 1_000;
pub const MAX_POOL_CAPACITY: usize = 50_000;
pub const DEFAULT_AGE_LIMIT: u32 = 20;
pub const INCUMBENT_THRESHOLD: f64 = 0.05;

/// `clamp(2·(n+m), 1 000, 50 000)`.
pub fn pool_capacity(n: usize, m: usize) -> usize {
    (2 * (n + m)).clamp(MIN_POOL_CAPACITY, MAX_POOL_CAPACITY)
}

/// A learned constraint of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Learned<T> {
    Conflict(ConflictConstraint<T>),
    Proof(ProofConstraint<T>),
}

impl<T: Scalar> Learned<T> {
    pub fn id(&self) -> u64 {
        match self {
            Self::Conflict(c) => c.id,
            Self::Proof(p) => p.id,
        }
    }

    pub fn stamp(&self) -> Option<T> {
        match self {
            Self::Conflict(c) => c.stamp,
            Self::Proof(p) => p.stamp,
        }
    }

    pub fn is_proof(&self) -> bool {
        matches!(self, Self::Proof(_))
    }

    pub fn is_satisfied_by(&self, x: &[T], tol: T) -> bool {
        match self {
            Self::Conflict(c) => c.is_satisfied_by(x, tol),
            Self::Proof(p) => p.is_satisfied_by(x, tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry<T> {
    pub constraint: Learned<T>,
    pub age: u32,
    pub inserted: u64,
    pub marked: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PoolStats {
    pub inserted: u64,
    pub evicted: u64,
    pub age_deleted: u64,
    pub incumbent_deleted: u64,
    pub overflow_trimmed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("constraint {0} is not in the pool")]
    UnknownId(u64),
    #[error("constraint id {0} was already used")]
    StaleId(u64),
}

/// `true` when an entry stamped `stamp` is "sufficiently worse" than the new incumbent.
pub fn stamp_outdated<T: Scalar>(stamp: T, incumbent: T, threshold: T) -> bool {
    if stamp == T::zero() {
        incumbent <= -threshold
    } else {
        incumbent <= stamp - threshold * stamp.abs()
    }
}

/// Fixed-capacity array of learned constraints with aging.
#[derive(Debug, Clone)]
pub struct ConflictPool<T> {
    slots: Vec<Option<PoolEntry<T>>>,
    free: Vec<usize>,
    index: HashMap<u64, usize>,
    retired: HashSet<u64>,
    capacity: usize,
    age_limit: u32,
    threshold: T,
    next_insert: u64,
    stats: PoolStats,
}

impl<T: Scalar> ConflictPool<T> {
    /// A pool whose capacity is clamped into `[1 000, 50 000]`.
    pub fn new(capacity: usize, age_limit: u32) -> Self {
        let capacity = capacity.clamp(MIN_POOL_CAPACITY, MAX_POOL_CAPACITY);
        Self {
            slots: Vec::with_capacity(capacity.min(4096)),
            free: Vec::new(),
            index: HashMap::new(),
            retired: HashSet::new(),
            capacity,
            age_limit,
            threshold: T::lit(INCUMBENT_THRESHOLD),
            next_insert: 0,
            stats: PoolStats::default(),
        }
    }

    pub fn for_model(n: usize, m: usize) -> Self {
        Self::new(pool_capacity(n, m), DEFAULT_AGE_LIMIT)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn age_limit(&self) -> u32 {
        self.age_limit
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn stats(&self) -> PoolStats {
        self.stats
    }

    pub fn contains(&self, id: u64) -> bool {
        self.index.contains_key(&id)
    }

    pub fn get(&self, id: u64) -> Option<&PoolEntry<T>> {
        self.index.get(&id).and_then(|&s| self.slots[s].as_ref())
    }

    /// Entries in slot order.
    pub fn iter(&self) -> impl Iterator<Item = &PoolEntry<T>> {
        self.slots.iter().flatten()
    }

    fn remove_slot(&mut self, slot: usize) -> u64 {
        let entry = self.slots[slot].take().expect("occupied slot");
        let id = entry.constraint.id();
        self.index.remove(&id);
        self.retired.insert(id);
        self.free.push(slot);
        id
    }

    /// Slot of the entry with maximal age, ties broken by oldest insertion.
    fn oldest_slot(&self) -> Option<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(s, e)| e.as_ref().map(|e| (s, e.age, e.inserted)))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
            .map(|(s, _, _)| s)
    }

    /// Stores a constraint with age 0, evicting the oldest entry when full.
    pub fn insert(&mut self, constraint: Learned<T>) -> Result<Vec<u64>, PoolError> {
        let id = constraint.id();
        if self.index.contains_key(&id) || self.retired.contains(&id) {
            return Err(PoolError::StaleId(id));
        }
        let mut evicted = Vec::new();
        if self.len() >= self.capacity {
            if let Some(slot) = self.oldest_slot() {
                evicted.push(self.remove_slot(slot));
                self.stats.evicted += 1;
            }
        }
        let entry = PoolEntry { constraint, age: 0, inserted: self.next_insert, marked: false };
        self.next_insert += 1;
        let slot = match self.free.pop() {
            Some(s) => {
                self.slots[s] = Some(entry);
                s
            }
            None => {
                self.slots.push(Some(entry));
                self.slots.len() - 1
            }
        };
        self.index.insert(id, slot);
        self.stats.inserted += 1;
        Ok(evicted)
    }

    /// Resets the age on a deduction, otherwise increments it; an entry
    /// reaching the age limit is marked for deletion.
    pub fn record_propagation(&mut self, id: u64, deduced: bool) -> Result<u32, PoolError> {
        let limit = self.age_limit;
        let slot = *self.index.get(&id).ok_or(PoolError::UnknownId(id))?;
        let entry = self.slots[slot].as_mut().expect("indexed slot is occupied");
        if deduced {
            entry.age = 0;
        } else {
            entry.age += 1;
            if entry.age >= limit {
                entry.marked = true;
            }
        }
        Ok(entry.age)
    }

    /// Drops marked entries; above 90 % occupancy also drops the oldest 10 %.
    pub fn update_pass(&mut self) -> Vec<u64> {
        let marked: Vec<usize> = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(s, e)| e.as_ref().filter(|e| e.marked).map(|_| s))
            .collect();
        let mut removed: Vec<u64> = marked.into_iter().map(|s| self.remove_slot(s)).collect();
        self.stats.age_deleted += removed.len() as u64;
        if self.len() * 10 > self.capacity * 9 {
            let mut by_age: Vec<(usize, u32, u64)> = self
                .slots
                .iter()
                .enumerate()
                .filter_map(|(s, e)| e.as_ref().map(|e| (s, e.age, e.inserted)))
                .collect();
            by_age.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
            let trim = self.len().div_ceil(10);
            for &(s, _, _) in by_age.iter().take(trim) {
                removed.push(self.remove_slot(s));
            }
            self.stats.overflow_trimmed += trim as u64;
        }
        removed
    }

    /// Deletes stamped entries that are sufficiently worse than the new incumbent.
    pub fn on_new_incumbent(&mut self, incumbent: T) -> Vec<u64> {
        let threshold = self.threshold;
        let stale: Vec<usize> = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(s, e)| {
                let stamp = e.as_ref()?.constraint.stamp()?;
                stamp_outdated(stamp, incumbent, threshold).then_some(s)
            })
            .collect();
        let removed: Vec<u64> = stale.into_iter().map(|s| self.remove_slot(s)).collect();
        self.stats.incumbent_deleted += removed.len() as u64;
        removed
    }
}

/// Unbounded list of learned constraints with the same aging rule, used
/// when the pool is off. Entries reaching the age limit are removed at once.
#[derive(Debug, Clone)]
pub struct AgingList<T> {
    entries: Vec<PoolEntry<T>>,
    age_limit: u32,
    next_insert: u64,
    stats: PoolStats,
}

impl<T: Scalar> AgingList<T> {
    pub fn new(age_limit: u32) -> Self {
        Self { entries: Vec::new(), age_limit, next_insert: 0, stats: PoolStats::default() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self) -> PoolStats {
        self.stats
    }

    pub fn iter(&self) -> impl Iterator<Item = &PoolEntry<T>> {
        self.entries.iter()
    }

    pub fn insert(&mut self, constraint: Learned<T>) {
        self.entries.push(PoolEntry { constraint, age: 0, inserted: self.next_insert, marked: false });
        self.next_insert += 1;
        self.stats.inserted += 1;
    }

    /// Applies one aging step per entry, `deduced` looked up by id; returns removed ids.
    pub fn age_all(&mut self, deduced: impl Fn(u64) -> bool) -> Vec<u64> {
        let limit = self.age_limit;
        let mut removed = Vec::new();
        self.entries.retain_mut(|e| {
            if deduced(e.constraint.id()) {
                e.age = 0;
            } else {
                e.age += 1;
            }
            if e.age >= limit {
                removed.push(e.constraint.id());
                false
            } else {
                true
            }
        });
        self.stats.age_deleted += removed.len() as u64;
        removed
    }
}
