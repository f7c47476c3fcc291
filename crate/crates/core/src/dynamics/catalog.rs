use std::sync::Arc;

use crate::error::DynamicsError;
use crate::lattice::{Boundary, Domain, SiteVector};

/// Neighbour table of a torus. Direction `k` is `+e_{k/2}` for even `k`
/// and `-e_{k/2}` for odd `k`; bond id is `site * 2d + k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGraph {
    domain: Domain,
    deg: usize,
    nbr: Vec<u32>,
}

impl TorusGraph {
    pub fn new(domain: &Domain) -> Result<Self, DynamicsError> {
        if domain.boundary() != Boundary::Torus || domain.dims().iter().any(|&n| n < 3) {
            return Err(DynamicsError::RequiresTorus);
        }
        let n = domain.n_sites();
        assert!(n < u32::MAX as usize / (2 * domain.dim()), "torus too large");
        let deg = 2 * domain.dim();
        let mut nbr = Vec::with_capacity(n * deg);
        for i in 0..n {
            let x = domain.site(i);
            for k in 0..deg {
                nbr.push(domain.resolve(&domain.step(&x, k)).unwrap() as u32);
            }
        }
        Ok(TorusGraph {
            domain: domain.clone(),
            deg,
            nbr,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn n_sites(&self) -> usize {
        self.domain.n_sites()
    }

    #[inline(always)]
    pub fn deg(&self) -> usize {
        self.deg
    }

    #[inline(always)]
    pub fn nbr(&self, site: usize, dir: usize) -> usize {
        self.nbr[site * self.deg + dir] as usize
    }

    #[inline(always)]
    pub fn nbrs(&self, site: usize) -> &[u32] {
        &self.nbr[site * self.deg..(site + 1) * self.deg]
    }

    /// Endpoints `(x, y)` of an ordered bond id.
    #[inline(always)]
    pub fn endpoints(&self, bond: usize) -> (usize, usize) {
        (bond / self.deg, self.nbr[bond] as usize)
    }
}

const ABSENT: u32 = u32::MAX;

/// The set of currently allowed ordered bonds, with O(1) insert and remove.
#[derive(Clone, Debug)]
pub struct RateCatalog {
    graph: Arc<TorusGraph>,
    bonds: Vec<u32>,
    pos: Vec<u32>,
}

impl RateCatalog {
    pub fn empty(graph: Arc<TorusGraph>) -> Self {
        let n = graph.n_sites() * graph.deg();
        RateCatalog {
            graph,
            bonds: Vec::new(),
            pos: vec![ABSENT; n],
        }
    }

    pub fn graph(&self) -> &Arc<TorusGraph> {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    #[inline(always)]
    pub fn get(&self, i: usize) -> usize {
        self.bonds[i] as usize
    }

    pub fn contains(&self, bond: usize) -> bool {
        self.pos[bond] != ABSENT
    }

    #[inline(always)]
    pub fn set(&mut self, bond: usize, allowed: bool) {
        let p = self.pos[bond];
        if allowed && p == ABSENT {
            self.pos[bond] = self.bonds.len() as u32;
            self.bonds.push(bond as u32);
        } else if !allowed && p != ABSENT {
            let last = *self.bonds.last().unwrap();
            self.bonds.swap_remove(p as usize);
            if last as usize != bond {
                self.pos[last as usize] = p;
            }
            self.pos[bond] = ABSENT;
        }
    }

    /// Sorted ordered bond ids; independent of insertion history.
    pub fn sorted_bonds(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.bonds.iter().map(|&b| b as usize).collect();
        v.sort_unstable();
        v
    }

    /// Allowed ordered bonds as site pairs, sorted by bond id.
    pub fn pairs(&self) -> Vec<(SiteVector, SiteVector)> {
        let dom = self.graph.domain();
        self.sorted_bonds()
            .into_iter()
            .map(|b| {
                let (x, y) = self.graph.endpoints(b);
                (dom.site(x), dom.site(y))
            })
            .collect()
    }

    pub fn same_members(&self, other: &RateCatalog) -> bool {
        self.len() == other.len() && self.bonds.iter().all(|&b| other.contains(b as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_remove_bookkeeping() {
        let g = Arc::new(TorusGraph::new(&Domain::torus(vec![3, 3])).unwrap());
        let mut c = RateCatalog::empty(g);
        for b in [5, 7, 9, 11] {
            c.set(b, true);
        }
        c.set(5, true);
        assert_eq!(c.len(), 4);
        c.set(5, false);
        c.set(9, false);
        c.set(9, false);
        assert_eq!(c.sorted_bonds(), vec![7, 11]);
        assert!(c.contains(11) && !c.contains(5));
    }

    #[test]
    fn small_torus_rejected() {
        assert!(TorusGraph::new(&Domain::torus(vec![2, 5])).is_err());
    }
}
