//! Sparse item-item cosine similarity over binary implicit ratings.

use std::io::{self, Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::TrainSet;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("unknown item index {0}")]
    UnknownItem(u32),
    #[error("similarity cache I/O: {0}")]
    Io(#[from] io::Error),
    #[error("not a similarity cache (bad magic)")]
    BadMagic,
    #[error("unsupported similarity cache version {0}")]
    UnsupportedVersion(u32),
    #[error("similarity cache was built for dataset {found:016x}, expected {expected:016x}")]
    HashMismatch { expected: u64, found: u64 },
    #[error("corrupt similarity cache: {0}")]
    Corrupt(String),
}

/// Borrowed view of one similarity row, sorted by neighbour index. Absent
/// neighbours have similarity exactly zero.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityRow<'a> {
    entries: &'a [(u32, f64)],
}

impl<'a> SimilarityRow<'a> {
    pub fn get(&self, j: u32) -> f64 {
        match self.entries.binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + 'a {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &'a [(u32, f64)] {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Symmetric sparse matrix of `s_ij = c_ij / sqrt(n_i n_j)` where `c_ij`
/// counts users who saved both items. The diagonal is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    rows: Vec<Vec<(u32, f64)>>,
    item_users: Vec<u32>,
    squared_row_sums: Vec<f64>,
}

impl SimilarityModel {
    /// Builds the model from training profiles.
    ///
    /// Rows are accumulated independently (one dense co-count buffer per
    /// worker), so the result does not depend on the thread count.
    pub fn build(train: &TrainSet) -> Self {
        let n_items = train.n_items();
        let mut item_users = vec![0u32; n_items];
        let mut users_of: Vec<Vec<u32>> = vec![Vec::new(); n_items];
        for (u, profile) in train.profiles().iter().enumerate() {
            for r in profile {
                item_users[r.item as usize] += 1;
                users_of[r.item as usize].push(u as u32);
            }
        }
        let profiles = train.profiles();

        let rows: Vec<Vec<(u32, f64)>> = (0..n_items)
            .into_par_iter()
            .map_init(
                || (vec![0u32; n_items], Vec::<u32>::new()),
                |(counts, touched), i| {
                    for &u in &users_of[i] {
                        for r in &profiles[u as usize] {
                            let j = r.item as usize;
                            if j == i {
                                continue;
                            }
                            if counts[j] == 0 {
                                touched.push(j as u32);
                            }
                            counts[j] += 1;
                        }
                    }
                    touched.sort_unstable();
                    let n_i = item_users[i] as f64;
                    let row = touched
                        .iter()
                        .map(|&j| {
                            let c = counts[j as usize] as f64;
                            let n_j = item_users[j as usize] as f64;
                            counts[j as usize] = 0;
                            (j, c / (n_i * n_j).sqrt())
                        })
                        .collect();
                    touched.clear();
                    row
                },
            )
            .collect();

        Self::from_parts(rows, item_users)
    }

    fn from_parts(rows: Vec<Vec<(u32, f64)>>, item_users: Vec<u32>) -> Self {
        let squared_row_sums = rows.iter().map(|row| row.iter().map(|&(_, s)| s * s).sum()).collect();
        SimilarityModel { rows, item_users, squared_row_sums }
    }

    pub fn n_items(&self) -> usize {
        self.rows.len()
    }

    /// Number of stored (directed) entries; each unordered pair counts twice.
    pub fn n_entries(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: u32) -> Result<SimilarityRow<'_>, SimilarityError> {
        self.rows.get(i as usize).map(|r| SimilarityRow { entries: r }).ok_or(SimilarityError::UnknownItem(i))
    }

    pub fn get(&self, i: u32, j: u32) -> Result<f64, SimilarityError> {
        if j as usize >= self.rows.len() {
            return Err(SimilarityError::UnknownItem(j));
        }
        Ok(self.row(i)?.get(j))
    }

    /// Distinct training users of item `i`.
    pub fn item_users(&self, i: u32) -> Result<u32, SimilarityError> {
        self.item_users.get(i as usize).copied().ok_or(SimilarityError::UnknownItem(i))
    }

    /// Cached `sum_j s_ij^2`.
    pub fn squared_row_sum(&self, i: u32) -> Result<f64, SimilarityError> {
        self.squared_row_sums.get(i as usize).copied().ok_or(SimilarityError::UnknownItem(i))
    }

    pub(crate) fn rows(&self) -> &[Vec<(u32, f64)>] {
        &self.rows
    }
}

/// Query surface: the stored row of item `i`.
pub fn similarity_row(model: &SimilarityModel, i: u32) -> Result<SimilarityRow<'_>, SimilarityError> {
    model.row(i)
}

const CACHE_MAGIC: &[u8; 8] = b"TCFSIM\0\0";
const CACHE_VERSION: u32 = 1;

impl SimilarityModel {
    /// Writes the binary cache (little-endian):
    /// magic, version u32, dataset hash u64, item count u64, then per row
    /// item index u32, user count u32, entry count u32 and `(j u32, s f64)`
    /// entries.
    pub fn write_cache<W: Write>(&self, mut w: W, dataset_hash: u64) -> Result<(), SimilarityError> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&dataset_hash.to_le_bytes())?;
        w.write_all(&(self.rows.len() as u64).to_le_bytes())?;
        for (i, row) in self.rows.iter().enumerate() {
            w.write_all(&(i as u32).to_le_bytes())?;
            w.write_all(&self.item_users[i].to_le_bytes())?;
            w.write_all(&(row.len() as u32).to_le_bytes())?;
            for &(j, s) in row {
                w.write_all(&j.to_le_bytes())?;
                w.write_all(&s.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a cache written by [`write_cache`](Self::write_cache), refusing
    /// it unless it was built for `expected_hash`.
    pub fn read_cache<R: Read>(mut r: R, expected_hash: u64) -> Result<Self, SimilarityError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(SimilarityError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(SimilarityError::UnsupportedVersion(version));
        }
        let found = read_u64(&mut r)?;
        if found != expected_hash {
            return Err(SimilarityError::HashMismatch { expected: expected_hash, found });
        }
        let n_items = read_u64(&mut r)? as usize;
        let mut rows = Vec::with_capacity(n_items.min(1 << 24));
        let mut item_users = Vec::with_capacity(n_items.min(1 << 24));
        for expected_idx in 0..n_items {
            let idx = read_u32(&mut r)? as usize;
            if idx != expected_idx {
                return Err(SimilarityError::Corrupt(format!("row {idx} where {expected_idx} expected")));
            }
            item_users.push(read_u32(&mut r)?);
            let len = read_u32(&mut r)? as usize;
            let mut row = Vec::with_capacity(len.min(n_items));
            for _ in 0..len {
                let j = read_u32(&mut r)?;
                let s = f64::from_le_bytes(read_array(&mut r)?);
                if j as usize >= n_items || !(0.0..=1.0).contains(&s) {
                    return Err(SimilarityError::Corrupt(format!("entry ({idx}, {j}) = {s}")));
                }
                row.push((j, s));
            }
            rows.push(row);
        }
        Ok(Self::from_parts(rows, item_users))
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    read_array(r).map(u32::from_le_bytes)
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    read_array(r).map(u64::from_le_bytes)
}
