use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Segment, TokenRecord};
use crate::error::{Error, Result};
use crate::scalar::{add_assign, Scalar};

/// How tokens are grouped into clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyMode {
    #[default]
    Type,
    TypeSegment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClusterKey {
    Type(u32),
    TypeSegment(u32, Segment),
}

impl ClusterKey {
    pub fn type_id(&self) -> u32 {
        match *self {
            ClusterKey::Type(t) | ClusterKey::TypeSegment(t, _) => t,
        }
    }
}

impl fmt::Display for ClusterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterKey::Type(t) => write!(f, "type {t}"),
            ClusterKey::TypeSegment(t, s) => write!(f, "type {t}/segment {s}"),
        }
    }
}

impl KeyMode {
    pub fn key(self, r: &TokenRecord) -> ClusterKey {
        match self {
            KeyMode::Type => ClusterKey::Type(r.type_id),
            KeyMode::TypeSegment => ClusterKey::TypeSegment(r.type_id, r.segment),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSum<T> {
    pub sum: Vec<T>,
    pub count: u64,
}

/// Running per-cluster sum vectors and counts. Mergeable; every stored key
/// has count >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidTable<T: Scalar = f64> {
    mode: KeyMode,
    dim: usize,
    entries: BTreeMap<ClusterKey, ClusterSum<T>>,
}

/// Records per shard for the parallel accumulator. Fixed so results do not
/// depend on the thread count.
pub const SHARD_SIZE: usize = 1 << 14;

impl<T: Scalar> CentroidTable<T> {
    pub fn new(mode: KeyMode, dim: usize) -> Self {
        Self {
            mode,
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> KeyMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_vector<S: Scalar>(&mut self, key: ClusterKey, v: &[S]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let dim = self.dim;
        let e = self.entries.entry(key).or_insert_with(|| ClusterSum {
            sum: vec![T::zero(); dim],
            count: 0,
        });
        add_assign(&mut e.sum, v);
        e.count += 1;
        Ok(())
    }

    pub fn add(&mut self, r: &TokenRecord) -> Result<()> {
        self.add_vector(self.mode.key(r), &r.vector)
    }

    pub fn merge(&mut self, other: &CentroidTable<T>) -> Result<()> {
        if other.mode != self.mode || other.dim != self.dim {
            return Err(Error::InvalidParameter(
                "cannot merge centroid tables with different key mode or dimension".into(),
            ));
        }
        for (key, src) in &other.entries {
            match self.entries.get_mut(key) {
                Some(dst) => {
                    add_assign(&mut dst.sum, &src.sum);
                    dst.count += src.count;
                }
                None => {
                    self.entries.insert(*key, src.clone());
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &ClusterKey) -> Option<&ClusterSum<T>> {
        self.entries.get(key)
    }

    pub fn count(&self, key: &ClusterKey) -> u64 {
        self.entries.get(key).map_or(0, |e| e.count)
    }

    /// Componentwise mean of the members of `key`.
    pub fn centroid(&self, key: &ClusterKey) -> Option<Vec<T>> {
        self.entries.get(key).map(|e| {
            let n = T::cast(e.count);
            e.sum.iter().map(|&s| s / n).collect()
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ClusterKey, &ClusterSum<T>)> {
        self.entries.iter()
    }

    /// Freezes the table into a flat view suited to repeated nearest-centroid scans.
    pub fn finalize(&self) -> Centroids<T> {
        let mut keys = Vec::with_capacity(self.len());
        let mut means = Vec::with_capacity(self.len() * self.dim);
        let mut sums = Vec::with_capacity(self.len() * self.dim);
        let mut counts = Vec::with_capacity(self.len());
        for (key, e) in &self.entries {
            keys.push(*key);
            counts.push(e.count);
            let n = T::cast(e.count);
            means.extend(e.sum.iter().map(|&s| s / n));
            sums.extend_from_slice(&e.sum);
        }
        let index = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        Centroids {
            mode: self.mode,
            dim: self.dim,
            keys,
            means,
            sums,
            counts,
            index,
        }
    }
}

/// Single pass over `records`.
pub fn accumulate_centroids<T: Scalar>(
    records: &[TokenRecord],
    dim: usize,
    mode: KeyMode,
) -> Result<CentroidTable<T>> {
    let mut table = CentroidTable::new(mode, dim);
    for r in records {
        table.add(r)?;
    }
    Ok(table)
}

/// Sharded accumulation: each shard of [`SHARD_SIZE`] records is summed
/// independently and the partial tables merged in shard order.
pub fn accumulate_centroids_par<T: Scalar>(
    records: &[TokenRecord],
    dim: usize,
    mode: KeyMode,
) -> Result<CentroidTable<T>> {
    let parts: Vec<Result<CentroidTable<T>>> = records
        .par_chunks(SHARD_SIZE)
        .map(|chunk| accumulate_centroids(chunk, dim, mode))
        .collect();
    let mut table = CentroidTable::new(mode, dim);
    for part in parts {
        table.merge(&part?)?;
    }
    Ok(table)
}

/// Immutable, flat view of a [`CentroidTable`].
#[derive(Debug, Clone)]
pub struct Centroids<T> {
    mode: KeyMode,
    dim: usize,
    keys: Vec<ClusterKey>,
    means: Vec<T>,
    sums: Vec<T>,
    counts: Vec<u64>,
    index: HashMap<ClusterKey, usize>,
}

impl<T: Scalar> Centroids<T> {
    pub fn mode(&self) -> KeyMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn position(&self, key: &ClusterKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, i: usize) -> ClusterKey {
        self.keys[i]
    }

    pub fn keys(&self) -> &[ClusterKey] {
        &self.keys
    }

    pub fn mean(&self, i: usize) -> &[T] {
        &self.means[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sum(&self, i: usize) -> &[T] {
        &self.sums[i * self.dim..(i + 1) * self.dim]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }
}
