use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::lattice::{Configuration, SiteVector};

/// Dimension `d` and facilitation parameter `s` of the KA kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub d: usize,
    pub s: usize,
}

impl ConstraintSpec {
    pub fn new(d: usize, s: usize) -> Result<Self, DynamicsError> {
        if d == 0 {
            return Err(DynamicsError::InvalidSpec("d must be >= 1".into()));
        }
        if s == 0 {
            return Err(DynamicsError::InvalidSpec("s must be >= 1".into()));
        }
        Ok(ConstraintSpec { d, s })
    }

    /// `2 <= s <= d`. Outside this range the model is either SSEP (`s = 1`)
    /// or admits blocked finite clusters (`s > d`).
    pub fn is_ergodic_regime(&self) -> bool {
        2 <= self.s && self.s <= self.d
    }

    /// Kernel on precomputed local data: occupancies of the two endpoints and
    /// their empty-neighbour counts over all `2d` neighbours.
    #[inline(always)]
    pub fn allows(&self, occ_x: bool, occ_y: bool, empty_x: usize, empty_y: usize) -> bool {
        occ_x && !occ_y && empty_x >= self.s && empty_y + 1 >= self.s
    }
}

/// `c_xy(η)`: the particle at `x` may jump to the empty site `y` when `x`
/// has at least `s` empty neighbours and `y` at least `s - 1`, counting all
/// `2d` neighbours (so `y` counts towards `x` and vice versa).
pub fn constraint_ka(
    η: &Configuration,
    x: &SiteVector,
    y: &SiteVector,
    spec: &ConstraintSpec,
) -> Result<bool, DynamicsError> {
    let dom = η.domain();
    dom.check_dim(x)?;
    dom.check_dim(y)?;
    if spec.d != dom.dim() {
        return Err(DynamicsError::InvalidSpec(format!(
            "spec has d = {}, configuration has d = {}",
            spec.d,
            dom.dim()
        )));
    }
    if dom.direction(x, y).is_none() {
        return Err(crate::error::LatticeError::NotAdjacent(x.clone(), y.clone()).into());
    }
    Ok(spec.allows(
        η.get(x),
        η.get(y),
        empty_neighbours(η, x),
        empty_neighbours(η, y),
    ))
}

pub(crate) fn empty_neighbours(η: &Configuration, x: &SiteVector) -> usize {
    let dom = η.domain();
    (0..2 * dom.dim())
        .filter(|&k| !η.get(&dom.step(x, k)))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Domain;

    fn sv(c: [i64; 2]) -> SiteVector {
        SiteVector::from(c)
    }

    #[test]
    fn maximally_facilitated() {
        let mut η = Configuration::torus(vec![6, 6]);
        η.set(&sv([2, 2]), true).unwrap();
        let spec = ConstraintSpec::new(2, 2).unwrap();
        assert!(constraint_ka(&η, &sv([2, 2]), &sv([3, 2]), &spec).unwrap());
        assert!(!constraint_ka(&η, &sv([3, 2]), &sv([2, 2]), &spec).unwrap());
    }

    #[test]
    fn crowded_origin_blocks() {
        let mut η = Configuration::torus(vec![6, 6]);
        for p in [[2, 2], [1, 2], [2, 1], [2, 3]] {
            η.set(&sv(p), true).unwrap();
        }
        let spec = ConstraintSpec::new(2, 2).unwrap();
        assert!(!constraint_ka(&η, &sv([2, 2]), &sv([3, 2]), &spec).unwrap());
        let ssep = ConstraintSpec::new(2, 1).unwrap();
        assert!(constraint_ka(&η, &sv([2, 2]), &sv([3, 2]), &ssep).unwrap());
    }

    #[test]
    fn rejects_non_bonds() {
        let η = Configuration::torus(vec![6, 6]);
        let spec = ConstraintSpec::new(2, 2).unwrap();
        assert!(constraint_ka(&η, &sv([0, 0]), &sv([2, 0]), &spec).is_err());
        assert!(ConstraintSpec::new(2, 0).is_err());
    }

    #[test]
    fn fixed_exterior_counts_as_occupied() {
        let η = Configuration::empty(Domain::fixed(sv([0, 0]), vec![3, 3], true));
        let mut η = η;
        η.set(&sv([0, 0]), true).unwrap();
        let spec = ConstraintSpec::new(2, 2).unwrap();
        // Corner particle: two exterior neighbours read as occupied.
        assert!(constraint_ka(&η, &sv([0, 0]), &sv([1, 0]), &spec).unwrap());
        let spec3 = ConstraintSpec::new(2, 3).unwrap();
        assert!(!constraint_ka(&η, &sv([0, 0]), &sv([1, 0]), &spec3).unwrap());
    }
}
