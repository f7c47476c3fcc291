use std::collections::{BTreeSet, VecDeque};

use kclg::dynamics::{sample_bernoulli_with, SampleCondition};
use kclg::lattice::{Domain, SiteVector};
use kclg::renorm::{
    aux_walk, block_neighborhood, build_field, build_paving, crossing_count, edge_state,
    hat_neighborhood, hat_state, window_adjacency, AuxWalkParams, Block, EdgeState, FaceCache,
    RenormalizedField,
};
use kclg::rng::{self, Purpose};
use kclg::tracer::linear_times;
use proptest::prelude::*;
use rand::Rng as _;

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn paving_counts_and_volume() {
    for d in 1..=3 {
        for l in 2..=12usize {
            let p = l + 2;
            let pav = build_paving(l, d, &vec![2 * p; d]).unwrap();
            let counts = pav.counts_per_cell();
            for (n, &c) in counts.iter().enumerate() {
                assert_eq!(c, binom(d, n), "d={d} L={l} n={n}");
            }
            let volume: usize = pav.blocks.iter().map(|b| b.region(l).len()).sum();
            assert_eq!(volume, (2 * p).pow(d as u32));
            let per_cell: usize = (0..=d).map(|n| binom(d, n) * (1 << (d - n)) * l.pow(n as u32)).sum();
            assert_eq!(per_cell, p.pow(d as u32));
        }
    }
}

fn hat_blocks(x: [i64; 2], l: usize) -> BTreeSet<Block> {
    hat_neighborhood(&x, l).unwrap().blocks.into_iter().collect()
}

/// Blocks whose content decides the bond state: the tubes and the
/// facilitating blocks. The two corner boxes are unconstrained.
fn edge_blocks(cell: [i64; 2], axis: usize, l: usize) -> BTreeSet<Block> {
    let n = block_neighborhood(&cell, axis, l).unwrap();
    n.tubes().chain(n.facilitating()).cloned().collect()
}

/// The blocks deciding each implied bond sit inside the union of the hat
/// neighbourhoods in the premise, so the implications hold configuration by
/// configuration.
#[test]
fn hat_neighbourhoods_cover_implied_bonds() {
    for l in 2..=6 {
        let h0 = hat_blocks([0, 0], l);
        let h1: BTreeSet<Block> = h0.union(&hat_blocks([1, 0], l)).cloned().collect();
        let h2: BTreeSet<Block> = h0.union(&hat_blocks([0, 1], l)).cloned().collect();
        assert!(edge_blocks([0, 0], 0, l).is_subset(&h0));
        for c in 0..3 {
            assert!(edge_blocks([c, 0], 0, l).is_subset(&h1), "L={l} c={c}");
        }
        for c in 0..2 {
            assert!(edge_blocks([0, c], 1, l).is_subset(&h2), "L={l} c={c}");
        }
    }
}

#[test]
fn hat_neighbourhoods_are_disjoint() {
    let l = 3;
    let pts: Vec<[i64; 2]> = (-2..=2).flat_map(|a| (-2..=2).map(move |b| [a, b])).collect();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let (ha, hb) = (hat_blocks(*a, l), hat_blocks(*b, l));
            assert!(ha.is_disjoint(&hb), "{a:?} {b:?}");
        }
    }
}

#[test]
fn hat_implications_on_samples() {
    let l = 3;
    let p = (l + 2) as i64;
    let dom = Domain::torus(vec![8 * p as usize; 2]);
    let mut cache = FaceCache::new();
    let mut premises = 0;
    for k in 0..300 {
        let mut rng = rng::stream(21, Purpose::Sample, k);
        let η = sample_bernoulli_with(&dom, 0.2, &mut rng, SampleCondition::None).unwrap();
        let open = |x: [i64; 2], axis: usize, cache: &mut FaceCache| {
            edge_state(&η, &SiteVector::from([x[0] * p, x[1] * p]), axis, l, 1_000_000, cache).unwrap()
                == EdgeState::Open
        };
        let hat = |x: [i64; 2], cache: &mut FaceCache| hat_state(&η, &x, l, 1_000_000, cache).unwrap().is_open();
        if hat([0, 0], &mut cache) {
            premises += 1;
            assert!(open([0, 0], 0, &mut cache));
            if hat([1, 0], &mut cache) {
                assert!((0..3).all(|c| open([c, 0], 0, &mut cache)));
            }
            if hat([0, 1], &mut cache) {
                assert!((0..2).all(|c| open([0, c], 1, &mut cache)));
            }
        }
    }
    assert!(premises > 0);
}

fn random_field(n: usize, p_open: f64, seed: u64) -> RenormalizedField {
    let mut f = RenormalizedField::uniform(vec![n, n], EdgeState::Closed);
    let mut rng = rng::stream(seed, Purpose::Field, 0);
    for s in f.states.iter_mut() {
        if rng.random::<f64>() < p_open {
            *s = EdgeState::Open;
        }
    }
    f
}

/// Smallest set of vertices whose removal separates the left column from
/// the right column, by enumeration.
fn min_vertex_cut(adj: &[Vec<usize>], n: usize) -> usize {
    let nv = n * n;
    let separated = |cut: u32| {
        let mut seen = vec![false; nv];
        let mut q = VecDeque::new();
        for y in 0..n {
            let v = y * n;
            if cut & (1 << v) == 0 {
                seen[v] = true;
                q.push_back(v);
            }
        }
        while let Some(u) = q.pop_front() {
            if u % n == n - 1 {
                return false;
            }
            for &w in &adj[u] {
                if !seen[w] && cut & (1 << w) == 0 {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        true
    };
    (0u32..1 << nv)
        .filter(|&c| separated(c))
        .map(|c| c.count_ones() as usize)
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn crossings_equal_min_cut(seed in any::<u64>(), n in 1usize..=4, p_open in 0.2f64..0.9) {
        let f = random_field(n.max(2), p_open, seed);
        let adj = window_adjacency(&f, n).unwrap();
        prop_assert_eq!(crossing_count(&f, n).unwrap(), min_vertex_cut(&adj, n));
    }

    #[test]
    fn opening_bonds_never_lowers_crossings(seed in any::<u64>(), extra in 0usize..200) {
        let f = random_field(10, 0.5, seed);
        let mut g = f.clone();
        let k = extra % g.states.len();
        g.states[k] = EdgeState::Open;
        prop_assert!(crossing_count(&g, 10).unwrap() >= crossing_count(&f, 10).unwrap());
    }
}

#[test]
fn field_commutes_with_cell_translations() {
    let l = 3;
    let p = (l + 2) as i64;
    let dom = Domain::torus(vec![5 * p as usize, 4 * p as usize]);
    let mut rng = rng::stream(4, Purpose::Sample, 0);
    let η = sample_bernoulli_with(&dom, 0.25, &mut rng, SampleCondition::None).unwrap();
    let mut cache = FaceCache::new();
    let f = build_field(&η, l, 1_000_000, &mut cache).unwrap();
    let shift = [2i64, 1];
    let moved = η.translate(&SiteVector::from([shift[0] * p, shift[1] * p])).unwrap();
    let g = build_field(&moved, l, 1_000_000, &mut cache).unwrap();
    for v in 0..f.n_vertices() {
        let c = g.vertex(v);
        let w = f.index(&[c[0] + shift[0], c[1] + shift[1]]);
        for a in 0..2 {
            assert_eq!(g.state(v, a), f.state(w, a));
        }
    }
}

#[test]
fn open_field_walk_is_free() {
    let f = RenormalizedField::uniform(vec![64, 64], EdgeState::Open);
    let t = 20.0;
    let s = aux_walk(&f, &AuxWalkParams::new(linear_times(t, 4), 20_000, 3)).unwrap();
    for a in 0..2 {
        let (m, _) = *s.msd(a).last().unwrap();
        assert!((m / t - 2.0).abs() < 0.1, "axis {a}: MSD/t = {}", m / t);
    }
}
