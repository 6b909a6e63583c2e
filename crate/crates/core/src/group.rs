//! Finite groups given by multiplication tables.

use crate::error::{Error, Result};

/// A finite group with elements `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validate a multiplication table (`table[s][t] = s·t`).
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::NotGroup("empty table".into()));
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::NotGroup("table must be square with entries below the order".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|t| table[e][t] == t && table[t][e] == t))
            .ok_or_else(|| Error::NotGroup("no identity element".into()))?;
        let mut inverse = Vec::with_capacity(n);
        for s in 0..n {
            let inv = (0..n)
                .find(|&t| table[s][t] == identity && table[t][s] == identity)
                .ok_or_else(|| Error::NotGroup(format!("element {s} has no inverse")))?;
            inverse.push(inv);
        }
        for r in 0..n {
            for s in 0..n {
                for t in 0..n {
                    if table[table[r][s]][t] != table[r][table[s][t]] {
                        return Err(Error::NotGroup(format!("associativity fails at ({r}, {s}, {t})")));
                    }
                }
            }
        }
        Ok(FiniteGroup { table, identity, inverse })
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// `ℤ_n` with element `k` the residue `k`.
    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|s| (0..n).map(|t| (s + t) % n).collect()).collect();
        Self::from_table(table).expect("cyclic table is a group")
    }

    /// `S₃`, elements ordered as in [`Self::s3_permutations`], product `(st)(x) = s(t(x))`.
    pub fn symmetric3() -> Self {
        let perms = Self::s3_permutations();
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        let table = perms
            .iter()
            .map(|s| perms.iter().map(|t| index([s[t[0]], s[t[1]], s[t[2]]])).collect())
            .collect();
        Self::from_table(table).expect("S3 table is a group")
    }

    /// The six permutations of `{0, 1, 2}` in lexicographic order.
    pub fn s3_permutations() -> [[usize; 3]; 6] {
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
    }

    /// Sign of the permutations of [`Self::s3_permutations`].
    pub fn s3_sign(index: usize) -> f64 {
        [1.0, -1.0, -1.0, 1.0, 1.0, -1.0][index]
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, s: usize, t: usize) -> usize {
        self.table[s][t]
    }

    pub fn inv(&self, t: usize) -> usize {
        self.inverse[t]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }
}
