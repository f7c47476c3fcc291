//! Acceptance suite. Runs every criterion at its stated size and tolerance
//! and prints one PASS/FAIL line each; exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- c05 c08` runs a subset.

use std::io::Write as _;
use std::time::{Duration, Instant};

use kclg::comparison::{comparison_endpoint, construct_comparison_path, sample_open_event_a};
use kclg::dynamics::{constraint_ka, kmc_run, sample_bernoulli_with, ConstraintSpec, SampleCondition};
use kclg::frame::{estimate_frameable_prob, validate_path, PathMode, DEFAULT_BUDGET};
use kclg::lattice::{Configuration, Domain, Region, SiteVector};
use kclg::renorm::{
    aux_walk, build_field, build_paving, edge_state, estimate_open_fraction, hat_state,
    AuxWalkParams, EdgeState, FaceCache, RenormalizedField,
};
use kclg::rng::{self, Purpose};
use kclg::tracer::{
    estimate_d, linear_times, synthetic_brownian, tagged_run, variational_upper_bound, Estimator,
    FitWindow, TaggedMethod, TaggedRunParams,
};
use kclg_cli::{run, Command, ExperimentConfig};
use rand::Rng as _;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

const MIN: u64 = 60;

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 12] = [
        ("c01", "kernel oracle equivalence", Duration::from_secs(10), c01),
        ("c02", "exchange symmetry", Duration::from_secs(10), c02),
        ("c03", "blocked structures", Duration::from_secs(MIN), c03),
        ("c04", "paving identity", Duration::from_secs(1), c04),
        ("c05", "hat-open implications", Duration::from_secs(5 * MIN), c05),
        ("c06", "percolation trend", Duration::from_secs(30 * MIN), c06),
        ("c07", "frameability trend", Duration::from_secs(30 * MIN), c07),
        ("c08", "comparison-path pipeline", Duration::from_secs(30 * MIN), c08),
        ("c09", "variational bound vs simulation", Duration::from_secs(120 * MIN), c09),
        ("c10", "estimator calibration", Duration::from_secs(5 * MIN), c10),
        ("c11", "auxiliary walk", Duration::from_secs(30 * MIN), c11),
        ("c12", "reproducibility", Duration::from_secs(30 * MIN), c12),
    ];
    let mut err = std::io::stderr().lock();
    let (mut ran, mut passed) = (0, 0);
    for (id, title, limit, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|p| id.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = o.pass && in_time;
        let time_note = if in_time { String::new() } else { format!(", over the {}s limit", limit.as_secs()) };
        writeln!(
            err,
            "{id} {} {title}: {} ({:.1}s{time_note})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        )
        .unwrap();
        ran += 1;
        passed += usize::from(pass);
    }
    writeln!(err, "acceptance: {passed}/{ran} criteria passed").unwrap();
    if passed != ran {
        std::process::exit(1);
    }
}

/// Direct transcription of the rate: particle at x, hole at y, at least
/// `s - 1` empty neighbours of y and at least `s` of x, counted over all
/// `2d` torus neighbours.
fn oracle(occ: &[bool], dims: &[usize], x: &[usize], y: &[usize], s: usize) -> bool {
    let idx = |c: &[usize]| c.iter().zip(dims).rev().fold(0, |i, (&c, &w)| i * w + c);
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
    occ[idx(x)] && !occ[idx(y)] && empties(y) + 1 >= s && empties(x) >= s
}

fn random_config(dims: &[usize], rho: f64, rng: &mut rng::Rng) -> (Vec<bool>, Configuration) {
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

const PAIRS: [(usize, usize); 5] = [(2, 2), (3, 2), (3, 3), (2, 1), (2, 3)];

fn c01() -> Outcome {
    let n = 100_000;
    let mut mismatches = 0;
    for (k, (d, s)) in PAIRS.into_iter().enumerate() {
        let dims = vec![5; d];
        let spec = ConstraintSpec { d, s };
        let mut rng = rng::stream(0xC01, Purpose::Sample, k as u64);
        for _ in 0..n {
            let rho = rng.random::<f64>();
            let (occ, η) = random_config(&dims, rho, &mut rng);
            let x: Vec<usize> = (0..d).map(|_| rng.random_range(0..5)).collect();
            let a = rng.random_range(0..d);
            let mut y = x.clone();
            y[a] = if rng.random::<bool>() { (y[a] + 1) % 5 } else { (y[a] + 4) % 5 };
            let sx = SiteVector::new(x.iter().map(|&c| c as i64).collect());
            let sy = SiteVector::new(y.iter().map(|&c| c as i64).collect());
            if constraint_ka(&η, &sx, &sy, &spec).unwrap() != oracle(&occ, &dims, &x, &y, s) {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{} triples per (d,s) over 5 pairs, {mismatches} mismatches", n))
}

fn c02() -> Outcome {
    let target = 100_000;
    let (mut checked, mut broken) = (0, 0);
    let mut rng = rng::stream(0xC02, Purpose::Sample, 0);
    let mut k = 0;
    while checked < target {
        let (d, s) = PAIRS[k % PAIRS.len()];
        k += 1;
        let spec = ConstraintSpec { d, s };
        let dims = vec![6; d];
        let rho = rng.random_range(0.1..0.7);
        let (_, η) = random_config(&dims, rho, &mut rng);
        let dom = η.domain().clone();
        for _ in 0..50 {
            let x = dom.site(rng.random_range(0..dom.n_sites()));
            let y = dom.step(&x, rng.random_range(0..2 * d));
            if constraint_ka(&η, &x, &y, &spec).unwrap() {
                let after = η.swap(&x, &y).unwrap();
                broken += usize::from(!constraint_ka(&after, &y, &x, &spec).unwrap());
                checked += 1;
            }
        }
    }
    outcome(broken == 0, format!("{checked} allowed moves, {broken} irreversible"))
}

fn c03() -> Outcome {
    let (mut frozen_cols, mut frozen_sq) = (0, 0);
    let mut events = 0;
    for seed in 0..20u64 {
        let mut rng = rng::stream(0xC03, Purpose::Sample, seed);
        let (_, mut η) = random_config(&[32, 32], 0.5, &mut rng);
        let cols: Vec<SiteVector> =
            (0..32).flat_map(|y| [10, 11].map(|x| SiteVector::from([x, y]))).collect();
        for x in &cols {
            η.set(x, true).unwrap();
        }
        let t = kmc_run(&η, ConstraintSpec { d: 2, s: 2 }, 1e3, seed).unwrap();
        events += t.events.len();
        frozen_cols += usize::from(cols.iter().all(|x| t.final_config.get(x)));

        let (_, mut ω) = random_config(&[32, 32], 0.5, &mut rng);
        let square: Vec<SiteVector> = [[7, 7], [8, 7], [7, 8], [8, 8]].map(SiteVector::from).to_vec();
        for x in &square {
            ω.set(x, true).unwrap();
        }
        let t = kmc_run(&ω, ConstraintSpec { d: 2, s: 3 }, 1e3, seed).unwrap();
        events += t.events.len();
        frozen_sq += usize::from(square.iter().all(|x| t.final_config.get(x)));
    }
    outcome(
        frozen_cols == 20 && frozen_sq == 20,
        format!("double column intact {frozen_cols}/20, s=3 square intact {frozen_sq}/20, {events} events"),
    )
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn c04() -> Outcome {
    let mut bad = Vec::new();
    for d in 2..=3 {
        for l in 2..=12usize {
            let p = l + 2;
            let pav = build_paving(l, d, &vec![p; d]).unwrap();
            let counts_ok = pav.counts_per_cell().iter().enumerate().all(|(n, &c)| c == binom(d, n));
            let volume: usize = pav.blocks.iter().map(|b| b.region(l).len()).sum();
            let formula: usize = (0..=d).map(|n| binom(d, n) * (1 << (d - n)) * l.pow(n as u32)).sum();
            if !counts_ok || volume != p.pow(d as u32) || formula != p.pow(d as u32) {
                bad.push(format!("d={d} L={l}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("d in {{2,3}}, L in 2..=12, failures {bad:?}"))
}

fn c05() -> Outcome {
    let per = 2_500;
    let (mut premises, mut violations, mut unknown) = ([0usize; 3], 0, 0);
    let mut cache = FaceCache::new();
    let mut k = 0u64;
    for l in [3usize, 4] {
        let p = (l + 2) as i64;
        let dom = Domain::torus(vec![8 * (l + 2); 2]);
        for rho in [0.3, 0.5] {
            for _ in 0..per {
                let mut rng = rng::stream(0xC05, Purpose::Sample, k);
                k += 1;
                let η = sample_bernoulli_with(&dom, rho, &mut rng, SampleCondition::None).unwrap();
                let mut hat = |x: [i64; 2], cache: &mut FaceCache| {
                    let s = hat_state(&η, &x, l, DEFAULT_BUDGET, cache).unwrap();
                    unknown += usize::from(s == EdgeState::Unknown);
                    s == EdgeState::Open
                };
                if !hat([0, 0], &mut cache) {
                    continue;
                }
                let east = hat([1, 0], &mut cache);
                let north = hat([0, 1], &mut cache);
                let mut open = |cell: [i64; 2], axis: usize| {
                    let x = SiteVector::from([cell[0] * p, cell[1] * p]);
                    edge_state(&η, &x, axis, l, DEFAULT_BUDGET, &mut cache).unwrap() == EdgeState::Open
                };
                premises[0] += 1;
                violations += usize::from(!open([0, 0], 0));
                if east {
                    premises[1] += 1;
                    violations += usize::from(!(0..3).all(|c| open([c, 0], 0)));
                }
                if north {
                    premises[2] += 1;
                    violations += usize::from(!(0..2).all(|c| open([0, c], 1)));
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{k} configurations, premises (a,b,c) = {premises:?}, {violations} violations, {unknown} unknown hats"
        ),
    )
}

fn c06() -> Outcome {
    let n = 2_000;
    let spec_d = 2;
    let a = estimate_open_fraction(0.4, 4, spec_d, n, DEFAULT_BUDGET, 0xC06).unwrap();
    let b = estimate_open_fraction(0.4, 8, spec_d, n, DEFAULT_BUDGET, 0xC06).unwrap();
    let pass = b.p_open > a.p_open && b.ci_lo > a.ci_hi && a.p_unknown < 0.05 && b.p_unknown < 0.05;
    outcome(
        pass,
        format!(
            "L=4: {:.4} [{:.4}, {:.4}] unknown {:.4}; L=8: {:.4} [{:.4}, {:.4}] unknown {:.4}; {n} edges each",
            a.p_open, a.ci_lo, a.ci_hi, a.p_unknown, b.p_open, b.ci_lo, b.ci_hi, b.p_unknown
        ),
    )
}

fn c07() -> Outcome {
    let spec = ConstraintSpec { d: 2, s: 2 };
    let n = 2_000;
    let a = estimate_frameable_prob(0.4, 3, &spec, n, DEFAULT_BUDGET, 0xC07).unwrap();
    let b = estimate_frameable_prob(0.4, 5, &spec, n, DEFAULT_BUDGET, 0xC07).unwrap();
    // Slack: the two interval half-widths.
    let slack = (a.ci_hi - a.ci_lo) / 2.0 + (b.ci_hi - b.ci_lo) / 2.0;
    outcome(
        b.p_frameable + slack >= a.p_frameable,
        format!(
            "L=3: {:.4} [{:.4}, {:.4}] unknown {}; L=5: {:.4} [{:.4}, {:.4}] unknown {}; {n} samples each",
            a.p_frameable, a.ci_lo, a.ci_hi, a.unknown, b.p_frameable, b.ci_lo, b.ci_hi, b.unknown
        ),
    )
}

fn c08() -> Outcome {
    let (l, n) = (3usize, 100u64);
    let spec = ConstraintSpec { d: 2, s: 2 };
    let (mut ok, mut bad_emitted, mut max_len) = (0, 0, 0);
    for k in 0..n {
        let mut rng = rng::stream(0xC08, Purpose::Sample, k);
        let (η, _) = sample_open_event_a(l, 0.4, 0, DEFAULT_BUDGET, &mut rng).unwrap();
        let Ok(c) = construct_comparison_path(&η, 0, l, &spec, DEFAULT_BUDGET) else { continue };
        ok += 1;
        max_len = max_len.max(c.path.len());
        let valid = validate_path(&c.path, &spec, PathMode::Tracer);
        let end = comparison_endpoint(&η, 0, l).unwrap();
        let endpoint_ok = c.path.final_config.bits() == end.bits();
        let disp_ok = c.displacement().into_coords() == vec![l as i64 + 2, 0];
        if !(valid.valid && valid.first_violation.is_none() && endpoint_ok && disp_ok) {
            bad_emitted += 1;
        }
    }
    outcome(
        ok >= 99 && bad_emitted == 0,
        format!("{ok}/{n} constructed, {bad_emitted} emitted paths failing a check, longest {max_len} moves"),
    )
}

fn c09() -> Outcome {
    let rho = 0.5;
    let spec = ConstraintSpec { d: 2, s: 2 };
    let square = Region::boxed(SiteVector::from([-1, -1]), vec![3, 3]);
    let b = variational_upper_bound(rho, &spec, &square, &[1.0, 0.0], Estimator::ExactEnumeration).unwrap();
    let closed = 2.0 * (1.0 - rho) * (1.0 - rho * rho * rho).powi(2);
    let a_ok = (b.zero_function_value - closed).abs() <= 1e-12;
    let b_ok = b.value <= b.zero_function_value;

    let t_max = 1e4;
    let p = TaggedRunParams {
        rho,
        spec,
        dims: vec![128, 128],
        sample_times: linear_times(t_max, 20),
        n_replicas: 32,
        seed: 0xC09,
        method: TaggedMethod::Recentered,
    };
    let series = tagged_run(&p).unwrap();
    let e = estimate_d(&series, FitWindow::last_half_decade(t_max)).unwrap();
    // The bound is on 2 e_1·D e_1 (the slope of E[X_1²]).
    let (d11, se) = (e.d_hat[0][0], e.std_err[0][0]);
    let c_ok = d11 > 0.0 && e.ci_excludes_zero(0, 0) && 2.0 * d11 <= b.value + 3.0 * 2.0 * se;
    outcome(
        a_ok && b_ok && c_ok,
        format!(
            "(a) Q(0) = {:.15} vs {:.15}; (b) optimised {:.6} <= {:.6}; (c) 2 D11 = {:.5} (SE {:.5}, CI [{:.5}, {:.5}] for D11) vs bound {:.5}",
            b.zero_function_value, closed, b.value, b.zero_function_value, 2.0 * d11, 2.0 * se, e.ci_lo[0][0],
            e.ci_hi[0][0], b.value
        ),
    )
}

fn c10() -> Outcome {
    let d0 = 0.7;
    let times = linear_times(100.0, 50);
    let trials = 100;
    let covered = (0..trials)
        .filter(|&k| {
            let s = synthetic_brownian(1, d0, &times, 256, k).unwrap();
            estimate_d(&s, FitWindow::last_half_decade(100.0)).unwrap().covers(0, 0, d0)
        })
        .count();
    outcome(covered >= 93, format!("D0 = {d0} inside the 95% CI in {covered}/{trials} trials (d = 1, 256 replicas)"))
}

fn c11() -> Outcome {
    let t = 50.0;
    let free = RenormalizedField::uniform(vec![64, 64], EdgeState::Open);
    let s = aux_walk(&free, &AuxWalkParams::new(linear_times(t, 10), 20_000, 0xC11)).unwrap();
    let e = estimate_d(&s, FitWindow::last_half_decade(t)).unwrap();
    let mut free_ok = true;
    let mut notes = Vec::new();
    for a in 0..2 {
        let msd_t = s.msd(a).last().unwrap().0 / t;
        let slope = 2.0 * e.d_hat[a][a];
        free_ok &= (msd_t / 2.0 - 1.0).abs() < 0.05 && (slope / 2.0 - 1.0).abs() < 0.05;
        notes.push(format!("axis {a}: MSD/t {msd_t:.4}, 2D {slope:.4}"));
    }

    let l = 8;
    let dom = Domain::torus(vec![8 * (l + 2); 2]);
    let mut rng = rng::stream(0xC11, Purpose::Sample, 0);
    let η = sample_bernoulli_with(&dom, 0.4, &mut rng, SampleCondition::None).unwrap();
    let field = build_field(&η, l, DEFAULT_BUDGET, &mut FaceCache::new()).unwrap();
    let t = 200.0;
    let walk = aux_walk(&field, &AuxWalkParams::new(linear_times(t, 20), 2_000, 0xC11));
    let field_ok = match walk {
        Ok(s) => {
            let e = estimate_d(&s, FitWindow::last_half_decade(t)).unwrap();
            notes.push(format!(
                "L=8 field open {:.3}: D_aux diag {:.4} [{:.4}, {:.4}], {:.4} [{:.4}, {:.4}]",
                field.open_fraction(),
                e.d_hat[0][0],
                e.ci_lo[0][0],
                e.ci_hi[0][0],
                e.d_hat[1][1],
                e.ci_lo[1][1],
                e.ci_hi[1][1]
            ));
            (0..2).all(|a| e.d_hat[a][a] > 0.0 && e.ci_lo[a][a] > 0.0)
        }
        Err(err) => {
            notes.push(format!("L=8 field: {err}"));
            false
        }
    };
    outcome(free_ok && field_ok, notes.join("; "))
}

/// Every subcommand at a criterion-sized setting, run twice into fresh
/// directories; all CSV artifacts must match byte for byte.
fn c12() -> Outcome {
    let mut configs = Vec::new();
    let mut add = |cmd: Command, tweak: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = ExperimentConfig::defaults(cmd);
        c.seed = 0xC12;
        tweak(&mut c);
        configs.push(c);
    };
    add(Command::Simulate, &|c| {
        c.rho = vec![0.5];
        c.t_max = 100.0;
    });
    add(Command::Msd, &|c| {
        c.rho = vec![0.5];
        c.dims = vec![24, 24];
        c.t_max = 50.0;
        c.n_replicas = 16;
    });
    add(Command::Varbound, &|c| c.rho = vec![0.3, 0.5]);
    add(Command::Frameability, &|c| {
        c.l = vec![3, 5];
        c.n_samples = 200;
    });
    add(Command::Percolation, &|c| {
        c.l = vec![4];
        c.n_samples = 100;
    });
    add(Command::PathCheck, &|c| c.n_samples = 20);
    let mut compared = 0;
    let mut differing = Vec::new();
    for c in configs {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let mut ci = c.clone();
            ci.out = d.path().to_path_buf();
            run(&ci).unwrap();
        }
        let mut names: Vec<String> = std::fs::read_dir(dirs[0].path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        names.sort();
        for n in names {
            let a = std::fs::read(dirs[0].path().join(&n)).unwrap();
            let b = std::fs::read(dirs[1].path().join(&n)).unwrap();
            compared += 1;
            if a != b {
                differing.push(format!("{}/{n}", c.command.name()));
            }
        }
    }
    outcome(
        differing.is_empty() && compared >= 6,
        format!("{compared} CSV artifacts over 6 subcommands, differing {differing:?}"),
    )
}
