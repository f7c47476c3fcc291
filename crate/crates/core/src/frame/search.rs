use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::path::{AllowedPath, PathMode};
use crate::digest::digest_bytes;
use crate::dynamics::ConstraintSpec;
use crate::error::{FrameError, LatticeError};
use crate::lattice::{boundary_sets, Configuration, Domain, Region, SiteVector};

pub const DEFAULT_BUDGET: usize = 10_000_000;

/// `ω` is `Λ`-framed: every site of `∂₋Λ` is empty.
pub fn is_framed(ω: &Configuration, region: &Region) -> bool {
    let (_, inner) = boundary_sets(region);
    inner.sites().iter().all(|x| !ω.get(x))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proof {
    /// Every configuration reachable inside `Λ` was enumerated.
    Exhausted,
    /// More particles than sites of `Λ ∖ ∂₋Λ`; the count is conserved.
    ParticleCount,
    /// A site of `∂₋Λ` holds a particle that can never move (see
    /// [`frozen_sites`]).
    FrozenBoundary,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Frameable(AllowedPath),
    NotFrameable(Proof),
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub states_visited: usize,
    pub frontier_peak: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameabilityVerdict {
    pub verdict: Verdict,
    pub stats: SearchStats,
}

impl FrameabilityVerdict {
    pub fn is_frameable(&self) -> bool {
        matches!(self.verdict, Verdict::Frameable(_))
    }

    pub fn is_not_frameable(&self) -> bool {
        matches!(self.verdict, Verdict::NotFrameable(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.verdict, Verdict::Unknown)
    }

    pub fn witness(&self) -> Option<&AllowedPath> {
        match &self.verdict {
            Verdict::Frameable(p) => Some(p),
            _ => None,
        }
    }
}

const EXTERIOR: u32 = u32::MAX;

/// Local geometry of a box: sites in `Region::sites` order, neighbour table
/// (exterior marked), interior bonds, and the `∂₋Λ` mask.
struct BoxGraph {
    sites: Vec<SiteVector>,
    deg: usize,
    nbr: Vec<u32>,
    bonds: Vec<(u32, u32)>,
    boundary_mask: Vec<u64>,
    words: usize,
}

impl BoxGraph {
    fn new(origin: &SiteVector, sides: &[usize]) -> Self {
        let d = sides.len();
        let region = Region::boxed(origin.clone(), sides.to_vec());
        let sites = region.sites();
        let n = sites.len();
        let words = n.div_ceil(64).max(1);
        let mut nbr = vec![EXTERIOR; n * 2 * d];
        let mut bonds = Vec::new();
        let mut boundary_mask = vec![0u64; words];
        let mut stride = vec![1usize; d];
        for a in 1..d {
            stride[a] = stride[a - 1] * sides[a - 1];
        }
        for (i, x) in sites.iter().enumerate() {
            for a in 0..d {
                let c = (x[a] - origin[a]) as usize;
                if c + 1 < sides[a] {
                    let j = i + stride[a];
                    nbr[i * 2 * d + 2 * a] = j as u32;
                    bonds.push((i as u32, j as u32));
                }
                if c > 0 {
                    nbr[i * 2 * d + 2 * a + 1] = (i - stride[a]) as u32;
                }
            }
            if nbr[i * 2 * d..(i + 1) * 2 * d].contains(&EXTERIOR) {
                boundary_mask[i / 64] |= 1 << (i % 64);
            }
        }
        BoxGraph {
            sites,
            deg: 2 * d,
            nbr,
            bonds,
            boundary_mask,
            words,
        }
    }

    fn n(&self) -> usize {
        self.sites.len()
    }

    fn interior_count(&self) -> usize {
        self.n() - self.boundary_mask.iter().map(|w| w.count_ones() as usize).sum::<usize>()
    }
}

#[inline]
fn bit(state: &[u64], i: usize) -> bool {
    state[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
fn flip(state: &mut [u64], i: usize) {
    state[i / 64] ^= 1 << (i % 64);
}

fn key(state: &[u64], n: usize) -> u128 {
    if n <= 128 {
        let lo = state[0] as u128;
        let hi = state.get(1).copied().unwrap_or(0) as u128;
        lo | hi << 64
    } else {
        let bytes: Vec<u8> = state.iter().flat_map(|w| w.to_le_bytes()).collect();
        digest_bytes(&bytes)
    }
}

/// Best-first search for an allowed path inside the box `Λ` from `ω^(Λ)`
/// (ω inside, occupied outside) to a `Λ`-framed configuration.
///
/// Moves are exchanges across bonds with both endpoints in `Λ`; the kernel
/// reads exterior sites as occupied. The frontier is ordered by the number
/// of occupied sites of `∂₋Λ`, ties by insertion order. `budget` caps the
/// number of distinct configurations stored.
pub fn frameability_search(
    ω: &Configuration,
    region: &Region,
    spec: &ConstraintSpec,
    budget: usize,
) -> Result<FrameabilityVerdict, FrameError> {
    if budget == 0 {
        return Err(FrameError::BadBudget);
    }
    let (origin, sides) = region.as_box().ok_or(LatticeError::NotABox)?;
    ω.domain().check_dim(origin)?;
    if spec.d != sides.len() {
        return Err(FrameError::InvalidInput(format!(
            "spec has d = {}, region has d = {}",
            spec.d,
            sides.len()
        )));
    }
    let g = BoxGraph::new(origin, sides);
    let n = g.n();
    let w = g.words;

    let mut start = vec![0u64; w];
    for (i, x) in g.sites.iter().enumerate() {
        if ω.get(x) {
            flip(&mut start, i);
        }
    }
    let initial = ω.restrict(region, true)?;
    let framed = |s: &[u64]| s.iter().zip(&g.boundary_mask).all(|(a, b)| a & b == 0);

    if framed(&start) {
        return Ok(FrameabilityVerdict {
            verdict: Verdict::Frameable(AllowedPath::empty(initial)),
            stats: SearchStats {
                states_visited: 1,
                frontier_peak: 0,
            },
        });
    }
    let particles: usize = start.iter().map(|v| v.count_ones() as usize).sum();
    if particles > g.interior_count() {
        return Ok(FrameabilityVerdict {
            verdict: Verdict::NotFrameable(Proof::ParticleCount),
            stats: SearchStats::default(),
        });
    }

    let frozen = frozen_sites(&g, &start, spec.s);
    if (0..n).any(|i| frozen[i] && bit(&g.boundary_mask, i)) {
        return Ok(FrameabilityVerdict {
            verdict: Verdict::NotFrameable(Proof::FrozenBoundary),
            stats: SearchStats::default(),
        });
    }

    let outcome = match w {
        1 => explore::<1>(&g, &start, spec, budget),
        2 => explore::<2>(&g, &start, spec, budget),
        3 | 4 => explore::<4>(&g, &start, spec, budget),
        5..=8 => explore::<8>(&g, &start, spec, budget),
        _ => {
            return Err(FrameError::InvalidInput(format!(
                "region has {n} sites; exhaustive search supports at most 512"
            )))
        }
    };
    let stats = SearchStats {
        states_visited: outcome.parent.len(),
        frontier_peak: outcome.peak,
    };
    let verdict = match outcome.end {
        End::Found(idx) => Verdict::Frameable(reconstruct(&g, &outcome.parent, idx, initial)?),
        End::Exhausted => Verdict::NotFrameable(Proof::Exhausted),
        End::Budget => Verdict::Unknown,
    };
    Ok(FrameabilityVerdict { verdict, stats })
}

/// Occupied sites that stay occupied along every allowed path.
///
/// A particle leaves `x` only when `x` has at least `s` empty neighbours, so
/// the sites that can ever be empty are contained in the closure of the
/// empty set under "add an occupied site with at least `s` neighbours in the
/// set". Everything outside the closure is frozen.
fn frozen_sites(g: &BoxGraph, start: &[u64], s: usize) -> Vec<bool> {
    let n = g.n();
    let mut can_empty: Vec<bool> = (0..n).map(|i| !bit(start, i)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if can_empty[i] {
                continue;
            }
            let k = g.nbr[i * g.deg..(i + 1) * g.deg]
                .iter()
                .filter(|&&j| j != EXTERIOR && can_empty[j as usize])
                .count();
            if k >= s {
                can_empty[i] = true;
                changed = true;
            }
        }
    }
    can_empty.iter().map(|c| !c).collect()
}

enum End {
    Found(usize),
    Exhausted,
    Budget,
}

struct Outcome {
    /// Parent index and the move `(from, to)` that produced each state.
    parent: Vec<(u32, u32, u32)>,
    peak: usize,
    end: End,
}

fn explore<const W: usize>(g: &BoxGraph, start_words: &[u64], spec: &ConstraintSpec, budget: usize) -> Outcome {
    let n = g.n();
    let mut mask = [0u64; W];
    mask[..g.words].copy_from_slice(&g.boundary_mask);
    let mut start = [0u64; W];
    start[..g.words].copy_from_slice(start_words);
    let load = |s: &[u64; W]| -> u32 { (0..W).map(|k| (s[k] & mask[k]).count_ones()).sum() };
    let key_of = |s: &[u64; W]| -> u128 {
        if W <= 2 {
            s[0] as u128 | (s[W - 1] as u128) << 64 * (W - 1)
        } else {
            key(s, n)
        }
    };

    let mut arena: Vec<[u64; W]> = vec![start];
    let mut parent: Vec<(u32, u32, u32)> = vec![(u32::MAX, 0, 0)];
    let mut visited: FxHashMap<u128, u32> = FxHashMap::default();
    visited.insert(key_of(&start), 0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((load(&start), 0u32)));
    let mut peak = 1usize;
    let mut empty = vec![0u8; n];

    while let Some(Reverse((_, idx))) = heap.pop() {
        let idx = idx as usize;
        let cur = arena[idx];
        for (i, e) in empty.iter_mut().enumerate() {
            *e = g.nbr[i * g.deg..(i + 1) * g.deg]
                .iter()
                .filter(|&&j| j != EXTERIOR && !bit(&cur, j as usize))
                .count() as u8;
        }
        for &(a, b) in &g.bonds {
            let (a, b) = (a as usize, b as usize);
            let (oa, ob) = (bit(&cur, a), bit(&cur, b));
            if oa == ob {
                continue;
            }
            let (from, to) = if oa { (a, b) } else { (b, a) };
            if !spec.allows(true, false, empty[from] as usize, empty[to] as usize) {
                continue;
            }
            let mut next = cur;
            flip(&mut next, from);
            flip(&mut next, to);
            let k = key_of(&next);
            if let Some(&seen) = visited.get(&k) {
                if cfg!(debug_assertions) && W > 2 {
                    assert_eq!(arena[seen as usize], next, "digest collision");
                }
                continue;
            }
            let new_idx = parent.len();
            if new_idx >= budget {
                return Outcome {
                    parent,
                    peak,
                    end: End::Budget,
                };
            }
            arena.push(next);
            parent.push((idx as u32, from as u32, to as u32));
            visited.insert(k, new_idx as u32);
            let l = load(&next);
            if l == 0 {
                return Outcome {
                    parent,
                    peak,
                    end: End::Found(new_idx),
                };
            }
            heap.push(Reverse((l, new_idx as u32)));
            peak = peak.max(heap.len());
        }
    }
    Outcome {
        parent,
        peak,
        end: End::Exhausted,
    }
}

fn reconstruct(
    g: &BoxGraph,
    parent: &[(u32, u32, u32)],
    mut idx: usize,
    initial: Configuration,
) -> Result<AllowedPath, LatticeError> {
    let mut moves = Vec::new();
    while idx != 0 {
        let (p, from, to) = parent[idx];
        moves.push((g.sites[from as usize].clone(), g.sites[to as usize].clone()));
        idx = p as usize;
    }
    moves.reverse();
    AllowedPath::from_moves(initial, &moves, PathMode::Environment)
}

/// `ω^(Λ)` as a configuration on the box `Λ` with occupied exterior.
pub fn frame_domain(region: &Region) -> Result<Domain, LatticeError> {
    Domain::from_region(region, true)
}
