use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SiteVector;

/// A finite site set: either an axis-aligned box or an explicit list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Box { origin: SiteVector, sides: Vec<usize> },
    Sites(BTreeSet<SiteVector>),
}

impl Region {
    /// The box `origin + [0, sides[a]-1]` along each axis.
    pub fn boxed(origin: SiteVector, sides: Vec<usize>) -> Region {
        assert_eq!(origin.dim(), sides.len(), "box origin/sides dimension mismatch");
        assert!(sides.iter().all(|&s| s >= 1), "box sides must be positive");
        Region::Box { origin, sides }
    }

    /// `[0, L]^d`, i.e. `L + 1` sites per axis.
    pub fn lambda(d: usize, l: usize) -> Region {
        Region::boxed(SiteVector::zero(d), vec![l + 1; d])
    }

    pub fn from_sites<I: IntoIterator<Item = SiteVector>>(sites: I) -> Region {
        Region::Sites(sites.into_iter().collect())
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Region::Box { origin, .. } => Some(origin.dim()),
            Region::Sites(s) => s.iter().next().map(SiteVector::dim),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Region::Box { sides, .. } => sides.iter().product(),
            Region::Sites(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &SiteVector) -> bool {
        match self {
            Region::Box { origin, sides } => {
                x.dim() == origin.dim()
                    && (0..x.dim()).all(|a| {
                        let r = x[a] - origin[a];
                        r >= 0 && (r as usize) < sides[a]
                    })
            }
            Region::Sites(s) => s.contains(x),
        }
    }

    /// Sites in canonical order: axis 0 varies fastest for boxes, sorted
    /// order for explicit lists.
    pub fn sites(&self) -> Vec<SiteVector> {
        match self {
            Region::Box { origin, sides } => {
                let n: usize = sides.iter().product();
                let mut out = Vec::with_capacity(n);
                let mut cur = vec![0usize; sides.len()];
                for _ in 0..n {
                    out.push(SiteVector::new(
                        cur.iter().zip(origin.coords()).map(|(&c, &o)| o + c as i64).collect(),
                    ));
                    for a in 0..sides.len() {
                        cur[a] += 1;
                        if cur[a] < sides[a] {
                            break;
                        }
                        cur[a] = 0;
                    }
                }
                out
            }
            Region::Sites(s) => s.iter().cloned().collect(),
        }
    }

    pub fn as_box(&self) -> Option<(&SiteVector, &[usize])> {
        match self {
            Region::Box { origin, sides } => Some((origin, sides)),
            Region::Sites(_) => None,
        }
    }

    pub fn translated(&self, by: &SiteVector) -> Region {
        match self {
            Region::Box { origin, sides } => Region::Box {
                origin: origin + by,
                sides: sides.clone(),
            },
            Region::Sites(s) => Region::Sites(s.iter().map(|x| x + by).collect()),
        }
    }
}

/// Exterior neighbourhood `∂Λ` (sites outside with a neighbour inside) and
/// interior boundary `∂₋Λ` (sites inside with a neighbour outside).
pub fn boundary_sets(region: &Region) -> (Region, Region) {
    let mut outer = BTreeSet::new();
    let mut inner = BTreeSet::new();
    for x in region.sites() {
        for a in 0..x.dim() {
            for delta in [1, -1] {
                let y = x.offset(a, delta);
                if !region.contains(&y) {
                    outer.insert(y);
                    inner.insert(x.clone());
                }
            }
        }
    }
    (Region::Sites(outer), Region::Sites(inner))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_order_axis0_fastest() {
        let r = Region::boxed(SiteVector::from([1, 5]), vec![2, 2]);
        let s = r.sites();
        assert_eq!(s[0], SiteVector::from([1, 5]));
        assert_eq!(s[1], SiteVector::from([2, 5]));
        assert_eq!(s[2], SiteVector::from([1, 6]));
    }

    #[test]
    fn boundary_examples() {
        let (outer, inner) = boundary_sets(&Region::boxed(SiteVector::zero(2), vec![2, 2]));
        assert_eq!(outer.len(), 8);
        assert_eq!(inner.len(), 4);

        let (_, inner) = boundary_sets(&Region::lambda(2, 3));
        assert_eq!(inner.len(), 12);

        let single = Region::from_sites([SiteVector::zero(3)]);
        let (outer, inner) = boundary_sets(&single);
        assert_eq!(outer.len(), 6);
        assert_eq!(inner.sites(), vec![SiteVector::zero(3)]);
    }
}
