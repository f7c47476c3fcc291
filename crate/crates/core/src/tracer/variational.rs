//! Upper bound on `u·D u` from the variational characterisation, minimised
//! over functions `f` of the environment restricted to a finite window.
//!
//! The functional is
//!
//! ```text
//! Q(f) = Σ_{y≠0} Σ_{z∼y} μ₀[c_yz (f(η^{yz}) − f(η))²]
//!      + Σ_{y∼0} μ₀[c_0y (u·y + f(τ_y η^{0y}) − f(η))²]
//! ```
//!
//! With `f` a table `F` over the patterns of `W' = W \ {0}` (the origin is
//! always occupied under `μ₀`), `Q = c₀ + 2 b·F + Fᵀ A F` where `A` is a
//! weighted graph Laplacian. Each term is marginalised exactly over the
//! sites it reads: `W'`, the images needed for the shifted pattern, and the
//! closed neighbourhoods of both bond endpoints. Environment bonds with no
//! endpoint in `W'` leave `f` unchanged and are dropped.
//!
//! `Q` evaluated at the free walk (`ρ → 0`, `f = 0`) gives 2 per axis, the
//! slope of `E[(u·X_t)²]`; with `E[X_t ⊗ X_t] ≈ 2Dt` the bound therefore
//! reads `2 u·D u ≤ min Q`.

use std::collections::HashMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cg::{conjugate_gradient, Csr};
use crate::dynamics::ConstraintSpec;
use crate::error::TracerError;
use crate::lattice::{Configuration, Region, SiteVector};
use crate::rng::{self, Purpose};

/// Largest number of free sites any single term may enumerate.
pub const EXACT_SITE_CAP: usize = 24;
pub const CG_REL_TOL: f64 = 1e-10;
pub const CG_MAX_ITER: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    ExactEnumeration,
    MonteCarlo { samples: usize, seed: u64 },
}

/// A function of the environment through its pattern on `sites`; pattern
/// index bit `k` is the occupancy of `sites[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFunctionWindow {
    pub sites: Vec<SiteVector>,
    pub table: Vec<f64>,
}

impl LocalFunctionWindow {
    pub fn eval(&self, η: &Configuration) -> f64 {
        let idx = self
            .sites
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, x)| acc | (usize::from(η.get(x)) << k));
        self.table[idx]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalBound {
    /// `min Q` over the window.
    pub value: f64,
    /// `Q(0)`.
    pub zero_function_value: f64,
    pub optimizer: LocalFunctionWindow,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub warnings: Vec<String>,
}

struct Term {
    /// Free sites read by the term (origin excluded).
    sites: Vec<SiteVector>,
    kind: TermKind,
}

enum TermKind {
    Env { y: SiteVector, z: SiteVector },
    Tracer { y: SiteVector, a: f64 },
}

#[derive(Default)]
struct Accum {
    c0: f64,
    b: HashMap<usize, f64>,
    edges: HashMap<(usize, usize), f64>,
}

pub fn variational_upper_bound(
    rho: f64,
    spec: &ConstraintSpec,
    window: &Region,
    u: &[f64],
    estimator: Estimator,
) -> Result<VariationalBound, TracerError> {
    let d = spec.d;
    if !(0.0..=1.0).contains(&rho) {
        return Err(TracerError::InvalidInput(format!("density must lie in [0,1], got {rho}")));
    }
    if u.len() != d {
        return Err(TracerError::InvalidInput("direction has the wrong dimension".into()));
    }
    if window.dim().is_some_and(|wd| wd != d) {
        return Err(TracerError::InvalidInput("window has the wrong dimension".into()));
    }
    let origin = SiteVector::zero(d);
    let wp: Vec<SiteVector> = window.sites().into_iter().filter(|x| *x != origin).collect();
    if wp.len() > 24 {
        return Err(TracerError::WindowTooLarge {
            sites: wp.len(),
            cap: 24,
        });
    }
    let terms = build_terms(&wp, d, u);
    if let Estimator::ExactEnumeration = estimator {
        if let Some(t) = terms.iter().find(|t| t.sites.len() > EXACT_SITE_CAP) {
            return Err(TracerError::WindowTooLarge {
                sites: t.sites.len(),
                cap: EXACT_SITE_CAP,
            });
        }
    }
    if let Estimator::MonteCarlo { samples: 0, .. } = estimator {
        return Err(TracerError::InvalidInput("monte_carlo needs at least one sample".into()));
    }
    if let Some(t) = terms.iter().find(|t| t.sites.len() > 63) {
        return Err(TracerError::WindowTooLarge {
            sites: t.sites.len(),
            cap: 63,
        });
    }

    let parts: Vec<Accum> = terms
        .par_iter()
        .enumerate()
        .map(|(ti, t)| assemble_term(t, &wp, spec, rho, estimator, ti as u64))
        .collect();

    let n = 1usize << wp.len();
    let mut c0 = 0.0;
    let mut b = vec![0.0; n];
    let mut triplets = Vec::new();
    for p in parts {
        c0 += p.c0;
        let mut bs: Vec<_> = p.b.into_iter().collect();
        bs.sort_by_key(|e| e.0);
        for (i, v) in bs {
            b[i] += v;
        }
        let mut es: Vec<_> = p.edges.into_iter().collect();
        es.sort_by_key(|e| e.0);
        for ((i, j), w) in es {
            triplets.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
        }
    }
    let a = Csr::from_triplets(n, triplets);
    let neg_b: Vec<f64> = b.iter().map(|v| -v).collect();
    let sol = conjugate_gradient(&a, &neg_b, CG_REL_TOL, CG_MAX_ITER);
    if !sol.converged {
        return Err(TracerError::CgNotConverged {
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    let value = c0 + b.iter().zip(&sol.x).map(|(bi, xi)| bi * xi).sum::<f64>();
    let mut warnings = Vec::new();
    let isolated = a.diag().iter().filter(|&&v| v == 0.0).count();
    if isolated > 0 {
        warnings.push(format!(
            "{isolated} of {n} table entries are never reached; the system is singular in those directions"
        ));
    }
    Ok(VariationalBound {
        value,
        zero_function_value: c0,
        optimizer: LocalFunctionWindow {
            sites: wp,
            table: sol.x,
        },
        cg_iterations: sol.iterations,
        cg_residual: sol.residual,
        warnings,
    })
}

fn closed_nbhd(x: &SiteVector, d: usize) -> Vec<SiteVector> {
    let mut v = vec![x.clone()];
    for a in 0..d {
        v.push(x.offset(a, 1));
        v.push(x.offset(a, -1));
    }
    v
}

fn build_terms(wp: &[SiteVector], d: usize, u: &[f64]) -> Vec<Term> {
    let origin = SiteVector::zero(d);
    let free = |mut s: Vec<SiteVector>| {
        s.retain(|x| *x != origin);
        s.sort();
        s.dedup();
        s
    };
    let mut terms = Vec::new();
    for k in 0..2 * d {
        let y = origin.offset(k / 2, if k % 2 == 0 { 1 } else { -1 });
        let a: f64 = (0..d).map(|i| u[i] * y[i] as f64).sum();
        let mut s: Vec<SiteVector> = wp.to_vec();
        s.extend(wp.iter().map(|w| w + &y));
        s.extend(closed_nbhd(&origin, d));
        s.extend(closed_nbhd(&y, d));
        terms.push(Term {
            sites: free(s),
            kind: TermKind::Tracer { y, a },
        });
    }
    let mut bonds: Vec<(SiteVector, SiteVector)> = Vec::new();
    for w in wp {
        for k in 0..2 * d {
            let v = w.offset(k / 2, if k % 2 == 0 { 1 } else { -1 });
            if v != origin {
                bonds.push((w.clone(), v.clone()));
                bonds.push((v, w.clone()));
            }
        }
    }
    bonds.sort();
    bonds.dedup();
    for (y, z) in bonds {
        let mut s: Vec<SiteVector> = wp.to_vec();
        s.extend(closed_nbhd(&y, d));
        s.extend(closed_nbhd(&z, d));
        terms.push(Term {
            sites: free(s),
            kind: TermKind::Env { y, z },
        });
    }
    terms
}

fn assemble_term(
    t: &Term,
    wp: &[SiteVector],
    spec: &ConstraintSpec,
    rho: f64,
    estimator: Estimator,
    term_index: u64,
) -> Accum {
    let d = spec.d;
    let origin = SiteVector::zero(d);
    let pos: HashMap<&SiteVector, usize> = t.sites.iter().enumerate().map(|(i, x)| (x, i)).collect();
    // Occupancy source: either the origin (always 1) or a free-site bit.
    #[derive(Clone, Copy)]
    enum Src {
        One,
        Zero,
        Bit(usize),
    }
    let src = |x: &SiteVector| -> Src {
        if *x == origin {
            Src::One
        } else {
            Src::Bit(pos[x])
        }
    };
    let read = |s: Src, bits: u64| -> bool {
        match s {
            Src::One => true,
            Src::Zero => false,
            Src::Bit(i) => (bits >> i) & 1 == 1,
        }
    };
    let nbr_srcs = |x: &SiteVector| -> Vec<Src> { closed_nbhd(x, d)[1..].iter().map(src).collect() };
    let wp_src: Vec<Src> = wp.iter().map(src).collect();

    let (x_site, y_site) = match &t.kind {
        TermKind::Env { y, z } => (y.clone(), z.clone()),
        TermKind::Tracer { y, .. } => (origin.clone(), y.clone()),
    };
    let sx = src(&x_site);
    let sy = src(&y_site);
    let nx = nbr_srcs(&x_site);
    let ny = nbr_srcs(&y_site);
    // Pattern of the successor configuration on W'.
    let succ_src: Vec<Src> = match &t.kind {
        TermKind::Env { .. } => wp
            .iter()
            .map(|w| {
                if *w == x_site {
                    sy
                } else if *w == y_site {
                    sx
                } else {
                    src(w)
                }
            })
            .collect(),
        TermKind::Tracer { y, .. } => wp
            .iter()
            .map(|w| {
                let v = w + y;
                if v == origin {
                    Src::Zero
                } else if v == *y {
                    Src::One
                } else {
                    src(&v)
                }
            })
            .collect(),
    };
    let a = match t.kind {
        TermKind::Tracer { a, .. } => a,
        TermKind::Env { .. } => 0.0,
    };

    let mut acc = Accum::default();
    let mut visit = |bits: u64, weight: f64| {
        let ox = read(sx, bits);
        let oy = read(sy, bits);
        if !ox || oy {
            return;
        }
        let ex = nx.iter().filter(|&&s| !read(s, bits)).count();
        let ey = ny.iter().filter(|&&s| !read(s, bits)).count();
        if !spec.allows(ox, oy, ex, ey) {
            return;
        }
        let pattern = |srcs: &[Src]| {
            srcs.iter()
                .enumerate()
                .fold(0usize, |acc, (k, &s)| acc | (usize::from(read(s, bits)) << k))
        };
        let i = pattern(&wp_src);
        let j = pattern(&succ_src);
        acc.c0 += weight * a * a;
        if a != 0.0 {
            *acc.b.entry(j).or_default() += weight * a;
            *acc.b.entry(i).or_default() -= weight * a;
        }
        if i != j {
            let key = (i.min(j), i.max(j));
            *acc.edges.entry(key).or_default() += weight;
        }
    };

    let m = t.sites.len();
    match estimator {
        Estimator::ExactEnumeration => {
            for bits in 0..(1u64 << m) {
                let ones = bits.count_ones() as i32;
                let w = rho.powi(ones) * (1.0 - rho).powi(m as i32 - ones);
                if w > 0.0 {
                    visit(bits, w);
                }
            }
        }
        Estimator::MonteCarlo { samples, seed } => {
            let mut r = rng::stream(seed, Purpose::Sweep, term_index);
            let w = 1.0 / samples as f64;
            for _ in 0..samples {
                let mut bits = 0u64;
                for k in 0..m {
                    if r.random::<f64>() < rho {
                        bits |= 1 << k;
                    }
                }
                visit(bits, w);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec22() -> ConstraintSpec {
        ConstraintSpec::new(2, 2).unwrap()
    }

    #[test]
    fn empty_window_is_zero_function() {
        let w = Region::from_sites([]);
        let b = variational_upper_bound(0.5, &spec22(), &w, &[1.0, 0.0], Estimator::ExactEnumeration).unwrap();
        assert!((b.value - 49.0 / 64.0).abs() < 1e-14);
        assert_eq!(b.optimizer.table.len(), 1);
    }

    #[test]
    fn optimising_lowers_the_bound() {
        let w = Region::boxed(SiteVector::from([-1, 0]), vec![3, 1]);
        let b = variational_upper_bound(0.5, &spec22(), &w, &[1.0, 0.0], Estimator::ExactEnumeration).unwrap();
        assert!(b.value <= b.zero_function_value + 1e-12);
        assert!(b.value > 0.0);
    }

    #[test]
    fn monte_carlo_close_to_exact() {
        let w = Region::boxed(SiteVector::from([1, 0]), vec![1, 1]);
        let e = variational_upper_bound(0.4, &spec22(), &w, &[1.0, 0.0], Estimator::ExactEnumeration).unwrap();
        let m = variational_upper_bound(
            0.4,
            &spec22(),
            &w,
            &[1.0, 0.0],
            Estimator::MonteCarlo { samples: 40_000, seed: 9 },
        )
        .unwrap();
        assert!((e.value - m.value).abs() < 0.03, "{} vs {}", e.value, m.value);
    }
}
