use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::builder::{PlanStage, StageTag};
use super::stages::{
    check_event_a, check_spec, frame_into, neighborhood_builder, restore_tubes, strip_transport,
    tracer_into_tube_with, Geometry,
};
use crate::dynamics::{impose, ConstraintSpec, SampleCondition};
use crate::error::PathError;
use crate::frame::{frameability_search, validate_path, AllowedPath, PathMode, Validation};
use crate::lattice::{Configuration, Domain, SiteVector};
use crate::renorm::face_configuration;
use crate::rng::Rng;

/// Constant `C'` in the length bound `|Γ| <= C' 2^{L^d}`.
pub const PATH_LENGTH_CONSTANT: u64 = 64;

/// A comparison path in tracer mode together with its stage plan.
#[derive(Clone, Debug)]
pub struct ComparisonPath {
    pub path: AllowedPath,
    pub plan: Vec<PlanStage>,
    /// Moves removed by loop excision.
    pub excised: usize,
    pub validation: Validation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSummary {
    pub length: usize,
    pub tracer_moves: usize,
    pub displacement: Vec<i64>,
    pub excised: usize,
    pub length_bound: u64,
    pub stages: Vec<PlanStage>,
}

impl ComparisonPath {
    pub fn displacement(&self) -> SiteVector {
        self.path.tracer_displacement()
    }

    pub fn length_bound(l: usize, d: usize) -> u64 {
        let e = (l as u32).pow(d as u32);
        PATH_LENGTH_CONSTANT.saturating_mul(1u64.checked_shl(e).unwrap_or(u64::MAX))
    }

    pub fn summary(&self, l: usize) -> PathSummary {
        PathSummary {
            length: self.path.len(),
            tracer_moves: self.path.steps.iter().filter(|s| s.tracer_move).count(),
            displacement: self.displacement().into_coords(),
            excised: self.excised,
            length_bound: Self::length_bound(l, self.path.initial.dim()),
            stages: self.plan.clone(),
        }
    }
}

/// Allowed path from `η` to `τ_y(η^{0y,□})`, `y = (L+2)e_axis`, seen from
/// the tracer. Requires `d = 2`, `s <= 2`, the event `A` and an open bond
/// `(0, y)`. Every move stays inside the block neighbourhood of the bond.
///
/// Stages: frame the facilitating blocks, bring the tracer into the tube,
/// transport the strip (tracer to `y`, the far box contents to the origin
/// box, the tube restored), put the perpendicular tubes back, then undo the
/// framing.
pub fn construct_comparison_path(
    η: &Configuration,
    axis: usize,
    l: usize,
    spec: &ConstraintSpec,
    budget: usize,
) -> Result<ComparisonPath, PathError> {
    check_spec(η, spec, l)?;
    check_event_a(η)?;
    let g = Geometry::new(axis, l)?;
    for t in g.nb.tubes() {
        if t.region(l).sites().iter().all(|x| η.get(x)) {
            return Err(PathError::Precondition(format!("tube {:?}{:?} has no vacancy", t.cell, t.dirs)));
        }
    }
    let y = g.site(g.p, 0);
    let mut b = neighborhood_builder(η, &g, *spec);

    frame_into(&mut b, &g, budget)?;
    let framing = b.moves.clone();

    tracer_into_tube_with(&mut b, &g, &g.site(g.p - 1, 0))?;

    let goal = g
        .strip()
        .into_iter()
        .map(|x| {
            let c = x[g.axis];
            let v = if c <= 1 {
                η.get(&x.offset(g.axis, g.p))
            } else if c >= g.p {
                false
            } else {
                η.get(&x)
            };
            (x.clone(), v || x == y)
        })
        .collect();
    strip_transport(&mut b, &g, &goal, &y)?;

    restore_tubes(&mut b, &g, η)?;

    b.stage(StageTag::FrameBlocks, "unframe");
    for (u, v) in framing.iter().rev() {
        b.mv(v, u)?;
    }

    let expected = η.box_swap(&SiteVector::zero(2), &y)?;
    if b.cfg.bits() != expected.bits() || b.cfg.tracer() != expected.tracer() {
        return Err(PathError::Stage {
            stage: "endpoint".into(),
            message: "lab configuration differs from the box exchange".into(),
        });
    }

    let path = to_tracer_frame(η, &b.moves)?;
    let validation = validate_path(&path, spec, PathMode::Tracer);
    Ok(ComparisonPath {
        path,
        plan: b.plan(),
        excised: b.excised,
        validation,
    })
}

/// Rewrites lab moves as tracer-frame steps: a tracer jump becomes
/// `(0, ±e_a)`, any other move is taken relative to the current tracer.
pub fn to_tracer_frame(η: &Configuration, moves: &[(SiteVector, SiteVector)]) -> Result<AllowedPath, PathError> {
    let dom = η.domain().clone();
    let d = η.dim();
    let mut t = η
        .tracer()
        .cloned()
        .ok_or_else(|| PathError::Precondition("configuration has no tracer".into()))?;
    let start = η.recentered()?;
    let mut path = AllowedPath::empty(start);
    for (a, c) in moves {
        let dir = dom
            .direction(a, c)
            .ok_or_else(|| PathError::Lattice(crate::error::LatticeError::NotAdjacent(a.clone(), c.clone())))?;
        let unit = SiteVector::unit(d, dir / 2).scaled(if dir % 2 == 0 { 1 } else { -1 });
        if dom.normalize(a) == t {
            path.push(SiteVector::zero(d), unit, PathMode::Tracer)?;
            t = dom.normalize(c);
        } else {
            let x = dom.normalize(&(a - &t));
            let y = &x + &unit;
            path.push(x, y, PathMode::Tracer)?;
        }
    }
    Ok(path)
}

/// The expected endpoint `τ_y(η^{0y,□})` of a comparison path.
pub fn comparison_endpoint(η: &Configuration, axis: usize, l: usize) -> Result<Configuration, PathError> {
    let y = SiteVector::unit(η.dim(), axis).scaled(l as i64 + 2);
    Ok(η.box_swap(&SiteVector::zero(η.dim()), &y)?.translate(&y)?)
}

/// Lab torus used for sampled comparison configurations: `6(L+2)` along
/// the bond axis and `4(L+2)` across it.
pub fn comparison_domain(axis: usize, l: usize) -> Domain {
    let p = l + 2;
    let mut dims = vec![4 * p; 2];
    dims[axis] = 6 * p;
    Domain::torus(dims)
}

/// Draws `η` from Bernoulli(ρ) conditioned on `A` and on the bond
/// `(0, (L+2)e_axis)` being open. The conditions factorise over disjoint
/// blocks, so each tube and each facilitating block is redrawn on its own
/// until it satisfies its part. Faces whose search hits `budget` count as
/// failures. Returns the configuration and the number of block redraws.
pub fn sample_open_event_a(
    l: usize,
    rho: f64,
    axis: usize,
    budget: usize,
    rng: &mut Rng,
) -> Result<(Configuration, usize), PathError> {
    if !(0.0..1.0).contains(&rho) {
        return Err(PathError::Precondition(format!("density {rho} must lie in [0, 1)")));
    }
    let g = Geometry::new(axis, l)?;
    let dom = comparison_domain(axis, l);
    let mut η = Configuration::empty(dom.clone());
    for i in 0..dom.n_sites() {
        if rng.random::<f64>() < rho {
            η.set_index(i, true);
        }
    }
    let mut redraws = 0;
    let draw = |η: &mut Configuration, sites: &[SiteVector], rng: &mut Rng| {
        for x in sites {
            η.set(x, rng.random::<f64>() < rho).expect("torus");
        }
    };
    for t in g.nb.tubes() {
        let sites = t.region(l).sites();
        while sites.iter().all(|x| η.get(x)) {
            draw(&mut η, &sites, rng);
            redraws += 1;
        }
    }
    for blk in g.nb.facilitating() {
        let sites = blk.region(l).sites();
        loop {
            let mut ok = true;
            for face in blk.faces(l) {
                let ω = face_configuration(&η, &face)?;
                let n = ω.dim();
                let v = frameability_search(&ω, &ω.domain().region(), &ConstraintSpec { d: n, s: n }, budget)?;
                if !v.is_frameable() {
                    ok = false;
                    break;
                }
            }
            if ok {
                break;
            }
            draw(&mut η, &sites, rng);
            redraws += 1;
        }
    }
    impose(&mut η, SampleCondition::EventA).map_err(|e| PathError::Precondition(e.to_string()))?;
    Ok((η, redraws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Purpose};

    #[test]
    fn sampled_paths_validate() {
        let spec = ConstraintSpec { d: 2, s: 2 };
        for (l, axis, k) in [(3, 0, 0), (3, 1, 1), (4, 0, 2)] {
            let mut rng = rng::stream(7, Purpose::Sample, k);
            let (η, _) = sample_open_event_a(l, 0.4, axis, 100_000, &mut rng).unwrap();
            let c = construct_comparison_path(&η, axis, l, &spec, 100_000).unwrap();
            assert!(c.validation.valid, "{:?}", c.validation.first_violation);
            let end = comparison_endpoint(&η, axis, l).unwrap();
            assert_eq!(c.path.final_config.bits(), end.bits());
            let mut want = vec![0; 2];
            want[axis] = l as i64 + 2;
            assert_eq!(c.displacement().into_coords(), want);
            assert!((c.path.len() as u64) <= ComparisonPath::length_bound(l, 2));
        }
    }

    #[test]
    fn rejects_missing_event_a() {
        let spec = ConstraintSpec { d: 2, s: 2 };
        let mut rng = rng::stream(3, Purpose::Sample, 0);
        let (mut η, _) = sample_open_event_a(3, 0.3, 0, 10_000, &mut rng).unwrap();
        η.set(&SiteVector::from([1, 1]), true).unwrap();
        assert!(matches!(
            construct_comparison_path(&η, 0, 3, &spec, 10_000),
            Err(PathError::Precondition(_))
        ));
    }
}
