use std::fmt;
use std::ops::{Add, Index, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point of the integer lattice, in lattice units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteVector(Vec<i64>);

impl SiteVector {
    pub fn new(coords: Vec<i64>) -> Self {
        assert!(!coords.is_empty(), "site vectors need dimension >= 1");
        SiteVector(coords)
    }

    pub fn zero(d: usize) -> Self {
        SiteVector::new(vec![0; d])
    }

    /// The basis vector `e_{axis}` (zero-based axis).
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut v = vec![0; d];
        v[axis] = 1;
        SiteVector::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn scaled(&self, k: i64) -> Self {
        SiteVector(self.0.iter().map(|c| c * k).collect())
    }

    pub fn with(&self, axis: usize, value: i64) -> Self {
        let mut v = self.0.clone();
        v[axis] = value;
        SiteVector(v)
    }

    pub fn offset(&self, axis: usize, delta: i64) -> Self {
        let mut v = self.0.clone();
        v[axis] += delta;
        SiteVector(v)
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn linf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// If `self` is a unit vector `±e_a`, returns `(a, sign)`.
    pub fn as_unit(&self) -> Option<(usize, i64)> {
        let mut found = None;
        for (a, &c) in self.0.iter().enumerate() {
            match c {
                0 => {}
                1 | -1 if found.is_none() => found = Some((a, c)),
                _ => return None,
            }
        }
        found
    }
}

impl Index<usize> for SiteVector {
    type Output = i64;
    fn index(&self, i: usize) -> &i64 {
        &self.0[i]
    }
}

impl Add for &SiteVector {
    type Output = SiteVector;
    fn add(self, rhs: &SiteVector) -> SiteVector {
        debug_assert_eq!(self.dim(), rhs.dim());
        SiteVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &SiteVector {
    type Output = SiteVector;
    fn sub(self, rhs: &SiteVector) -> SiteVector {
        debug_assert_eq!(self.dim(), rhs.dim());
        SiteVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &SiteVector {
    type Output = SiteVector;
    fn neg(self) -> SiteVector {
        SiteVector(self.0.iter().map(|c| -c).collect())
    }
}

impl From<Vec<i64>> for SiteVector {
    fn from(v: Vec<i64>) -> Self {
        SiteVector::new(v)
    }
}

impl<const N: usize> From<[i64; N]> for SiteVector {
    fn from(v: [i64; N]) -> Self {
        SiteVector::new(v.to_vec())
    }
}

impl fmt::Display for SiteVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
