use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::edge::{edge_state, EdgeState, FaceCache};
use crate::dynamics::{sample_bernoulli_with, SampleCondition};
use crate::error::RenormError;
use crate::lattice::{Domain, SiteVector};
use crate::rng::{self, Purpose};
use crate::stats::{wilson_interval, Z95};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenFractionEstimate {
    pub l: usize,
    pub rho: f64,
    pub n: usize,
    pub open: usize,
    pub closed: usize,
    pub unknown: usize,
    pub p_open: f64,
    pub p_unknown: f64,
    /// 95% Wilson interval on the open fraction.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Probability that the bond `(0, (L+2)e_1)` is open, from independent
/// Bernoulli(ρ) samples on a torus of `d+2` cells per side (large enough to
/// hold the block neighbourhood without wrapping onto itself). Sample `k`
/// uses stream `(seed, Field, k)`.
pub fn estimate_open_fraction(
    rho: f64,
    l: usize,
    d: usize,
    n_edges: usize,
    budget: usize,
    seed: u64,
) -> Result<OpenFractionEstimate, RenormError> {
    if n_edges == 0 {
        return Err(RenormError::InvalidInput("need at least one edge".into()));
    }
    let domain = Domain::torus(vec![(d + 2) * (l + 2); d]);
    let origin = SiteVector::zero(d);
    let states: Vec<Result<EdgeState, RenormError>> = (0..n_edges)
        .into_par_iter()
        .map_init(FaceCache::new, |cache, k| {
            let mut rng = rng::stream(seed, Purpose::Field, k as u64);
            let η = sample_bernoulli_with(&domain, rho, &mut rng, SampleCondition::None)
                .map_err(|e| RenormError::InvalidInput(e.to_string()))?;
            edge_state(&η, &origin, 0, l, budget, cache)
        })
        .collect();
    let mut counts = [0usize; 3];
    for s in states {
        counts[match s? {
            EdgeState::Open => 0,
            EdgeState::Closed => 1,
            EdgeState::Unknown => 2,
        }] += 1;
    }
    let (ci_lo, ci_hi) = wilson_interval(counts[0], n_edges, Z95);
    Ok(OpenFractionEstimate {
        l,
        rho,
        n: n_edges,
        open: counts[0],
        closed: counts[1],
        unknown: counts[2],
        p_open: counts[0] as f64 / n_edges as f64,
        p_unknown: counts[2] as f64 / n_edges as f64,
        ci_lo,
        ci_hi,
    })
}
