use kclg::dynamics::{
    constraint_ka, is_blocked, kmc_run, rebuild_catalog, ConstraintSpec, KmcEngine,
};
use kclg::lattice::{Configuration, Domain, SiteVector};
use kclg::rng::{self, Purpose};
use proptest::prelude::*;
use rand::Rng as _;

/// Plain transcription of the rate: particle at x, hole at y, at least
/// `s - 1` empty neighbours around y and at least `s` around x, neighbour
/// sums taken over all `2d` torus neighbours.
fn oracle(occ: &[bool], dims: &[usize], x: &[usize], y: &[usize], s: usize) -> bool {
    let idx = |c: &[usize]| {
        let mut i = 0;
        for a in (0..dims.len()).rev() {
            i = i * dims[a] + c[a];
        }
        i
    };
    let empties = |c: &[usize]| {
        let mut n = 0;
        for a in 0..dims.len() {
            for delta in [1, dims[a] - 1] {
                let mut z = c.to_vec();
                z[a] = (z[a] + delta) % dims[a];
                n += usize::from(!occ[idx(&z)]);
            }
        }
        n
    };
    occ[idx(x)] && !occ[idx(y)] && empties(y) >= s - 1 && empties(x) >= s
}

fn random_config(dims: &[usize], rho: f64, rng: &mut kclg::rng::Rng) -> (Vec<bool>, Configuration) {
    let dom = Domain::torus(dims.to_vec());
    let mut η = Configuration::empty(dom.clone());
    let occ: Vec<bool> = (0..dom.n_sites()).map(|_| rng.random::<f64>() < rho).collect();
    for (i, &o) in occ.iter().enumerate() {
        if o {
            η.set(&dom.site(i), true).unwrap();
        }
    }
    (occ, η)
}

#[test]
fn kernel_matches_transcription() {
    for (k, (d, s)) in [(2, 2), (3, 2), (3, 3), (2, 1), (2, 3)].into_iter().enumerate() {
        let dims = vec![5; d];
        let mut rng = rng::stream(101, Purpose::Sample, k as u64);
        let spec = ConstraintSpec { d, s };
        for _ in 0..4000 {
            let rho = rng.random::<f64>();
            let (occ, η) = random_config(&dims, rho, &mut rng);
            let x: Vec<usize> = (0..d).map(|_| rng.random_range(0..5)).collect();
            let a = rng.random_range(0..d);
            let mut y = x.clone();
            y[a] = if rng.random::<bool>() { (y[a] + 1) % 5 } else { (y[a] + 4) % 5 };
            let sx = SiteVector::new(x.iter().map(|&c| c as i64).collect());
            let sy = SiteVector::new(y.iter().map(|&c| c as i64).collect());
            assert_eq!(
                constraint_ka(&η, &sx, &sy, &spec).unwrap(),
                oracle(&occ, &dims, &x, &y, s),
                "d={d} s={s} x={sx} y={sy}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allowed_moves_are_reversible(seed in any::<u64>(), rho in 0.05f64..0.95) {
        let mut rng = rng::stream(seed, Purpose::Sample, 0);
        let (_, η) = random_config(&[6, 6], rho, &mut rng);
        let spec = ConstraintSpec { d: 2, s: 2 };
        let dom = η.domain().clone();
        for i in 0..dom.n_sites() {
            let x = dom.site(i);
            for k in 0..4 {
                let y = dom.step(&x, k);
                if constraint_ka(&η, &x, &y, &spec).unwrap() {
                    let back = η.swap(&x, &y).unwrap();
                    prop_assert!(constraint_ka(&back, &y, &x, &spec).unwrap());
                }
            }
        }
    }

    #[test]
    fn catalog_stays_exact(seed in any::<u64>(), rho in 0.1f64..0.9) {
        let mut rng = rng::stream(seed, Purpose::Sample, 1);
        let (_, η) = random_config(&[7, 5], rho, &mut rng);
        let spec = ConstraintSpec { d: 2, s: 2 };
        let mut engine = KmcEngine::new(&η, spec).unwrap();
        for _ in 0..200 {
            if engine.step(&mut rng).is_none() {
                break;
            }
        }
        prop_assert!(engine.verify_catalog());
        let rebuilt = rebuild_catalog(&engine.configuration(), spec).unwrap();
        prop_assert!(engine.catalog().same_members(&rebuilt));
    }
}

#[test]
fn trajectory_replays_and_conserves_particles() {
    let mut rng = rng::stream(5, Purpose::Sample, 0);
    let (_, η) = random_config(&[10, 10], 0.5, &mut rng);
    let t = kmc_run(&η, ConstraintSpec { d: 2, s: 2 }, 50.0, 9).unwrap();
    assert!(!t.events.is_empty());
    assert_eq!(t.replay().unwrap().bits(), t.final_config.bits());
    assert_eq!(t.final_config.particle_count(), η.particle_count());
    assert!(t.events.windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn double_column_stays_frozen() {
    let spec = ConstraintSpec { d: 2, s: 2 };
    let mut rng = rng::stream(8, Purpose::Sample, 0);
    let (_, mut η) = random_config(&[16, 16], 0.5, &mut rng);
    for y in 0..16 {
        for x in [4, 5] {
            η.set(&SiteVector::from([x, y]), true).unwrap();
        }
    }
    let t = kmc_run(&η, spec, 100.0, 3).unwrap();
    for y in 0..16 {
        for x in [4, 5] {
            assert!(t.final_config.get(&SiteVector::from([x, y])));
        }
    }
}

#[test]
fn full_square_blocks_s3() {
    let spec = ConstraintSpec { d: 2, s: 3 };
    let mut η = Configuration::torus(vec![6, 6]);
    for c in [[2, 2], [3, 2], [2, 3], [3, 3]] {
        η.set(&SiteVector::from(c), true).unwrap();
    }
    assert!(is_blocked(&η, spec).unwrap());
    let t = kmc_run(&η, spec, 10.0, 1).unwrap();
    assert!(t.events.is_empty());
}
