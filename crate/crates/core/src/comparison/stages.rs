use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::builder::{Builder, StageTag};
use crate::dynamics::ConstraintSpec;
use crate::error::PathError;
use crate::frame::{frameability_search, AllowedPath, PathMode, Verdict};
use crate::lattice::{Boundary, Configuration, SiteVector};
use crate::renorm::{block_neighborhood, face_configuration, Block, BlockNeighborhood};

/// The paving block containing `x`.
pub fn block_of(x: &SiteVector, l: usize) -> Block {
    let p = l as i64 + 2;
    let cell = x.coords().iter().map(|c| c.div_euclid(p)).collect();
    let dirs = (0..x.dim()).filter(|&a| x[a].rem_euclid(p) >= 2).collect();
    Block::new(cell, dirs)
}

/// Every neighbour of the tube that lies in a facilitating block is empty.
pub fn is_wrapped(η: &Configuration, tube: &Block, l: usize) -> bool {
    tube.region(l).sites().iter().all(|x| {
        (0..x.dim()).all(|a| {
            [1, -1].iter().all(|&s| {
                let y = x.offset(a, s);
                !(block_of(&y, l).is_facilitating() && η.get(&y))
            })
        })
    })
}

/// Order in which `slice_shift` moves the particles of a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftOrder {
    Lexicographic,
    Reverse,
}

/// Lab-frame geometry of the bond `(0, (L+2)e_axis)` in `d = 2`. The strip
/// is the two corner boxes plus the tube between them: columns `0..=L+3`
/// along `axis`, rows `{0, 1}` along the other axis.
pub(crate) struct Geometry {
    pub l: usize,
    pub p: i64,
    pub axis: usize,
    pub perp: usize,
    pub nb: BlockNeighborhood,
    pub liaison: Block,
}

impl Geometry {
    pub fn new(axis: usize, l: usize) -> Result<Self, PathError> {
        if axis > 1 {
            return Err(PathError::Unsupported(format!("axis {axis} in d = 2")));
        }
        let nb = block_neighborhood(&[0, 0], axis, l)?;
        let liaison = Block::new(vec![0, 0], vec![axis]);
        Ok(Geometry {
            l,
            p: l as i64 + 2,
            axis,
            perp: 1 - axis,
            nb,
            liaison,
        })
    }

    pub fn site(&self, c: i64, r: i64) -> SiteVector {
        let mut v = vec![0; 2];
        v[self.axis] = c;
        v[self.perp] = r;
        SiteVector::new(v)
    }

    pub fn in_strip(&self, x: &SiteVector) -> bool {
        (0..=self.p + 1).contains(&x[self.axis]) && (0..=1).contains(&x[self.perp])
    }

    pub fn in_box(&self, x: &SiteVector) -> bool {
        self.in_strip(x) && !self.liaison.contains(x, self.l)
    }

    pub fn strip(&self) -> Vec<SiteVector> {
        (0..=1)
            .flat_map(|r| (0..=self.p + 1).map(move |c| (c, r)))
            .map(|(c, r)| self.site(c, r))
            .collect()
    }

    pub fn perp_tubes(&self) -> Vec<Block> {
        self.nb.tubes().filter(|t| **t != self.liaison).cloned().collect()
    }

    pub fn is_perp_tube_site(&self, x: &SiteVector) -> Option<Block> {
        let b = block_of(x, self.l);
        (b.is_tube() && b != self.liaison && self.nb.blocks.contains(&b)).then_some(b)
    }
}

pub(crate) fn check_spec(η: &Configuration, spec: &ConstraintSpec, l: usize) -> Result<(), PathError> {
    if η.dim() != 2 || spec.d != 2 {
        return Err(PathError::Unsupported("comparison paths are built for d = 2".into()));
    }
    if spec.s > 2 {
        return Err(PathError::Unsupported(format!("s = {} > 2", spec.s)));
    }
    let p = l + 2;
    if η.domain().boundary() != Boundary::Torus
        || η.domain().dims().iter().any(|&w| w % p != 0 || w / p < 4)
    {
        return Err(PathError::Precondition(format!(
            "need a torus whose sides are multiples of L+2 = {p} with at least 4 cells"
        )));
    }
    if η.tracer().is_none() {
        return Err(PathError::Precondition("configuration has no tracer".into()));
    }
    Ok(())
}

/// Particle at `path[last]` slides into the vacancy `path[0]` through the
/// empty sites in between.
fn slide(b: &mut Builder, g: &Geometry, path: &[SiteVector]) -> Result<(), PathError> {
    for k in (1..path.len()).rev() {
        step(b, g, &path[k], &path[k - 1])?;
    }
    Ok(())
}

/// Vacancy at `path[last]` travels to `path[0]`; the particles in between
/// each move back by one.
fn walk_blank(b: &mut Builder, g: &Geometry, path: &[SiteVector]) -> Result<(), PathError> {
    for k in (1..path.len()).rev() {
        step(b, g, &path[k - 1], &path[k])?;
    }
    Ok(())
}

/// A single move; exchanges inside the strip get their glue first.
fn step(b: &mut Builder, g: &Geometry, a: &SiteVector, c: &SiteVector) -> Result<(), PathError> {
    if g.in_strip(a) && g.in_strip(c) {
        assisted(b, g, a, c)
    } else {
        b.mv(a, c)
    }
}

/// Empties `t` using only moves inside the sites accepted by `within`.
fn bring_zero(
    b: &mut Builder,
    g: &Geometry,
    t: &SiteVector,
    within: &dyn Fn(&SiteVector) -> bool,
) -> Result<(), PathError> {
    if !b.get(t) {
        return Ok(());
    }
    let path = b
        .nearest(t, within, &|x| !b.get(x))
        .ok_or_else(|| PathError::Stage {
            stage: format!("{:?}", b.tag().0),
            message: format!("no vacancy reachable from {t}"),
        })?;
    walk_blank(b, g, &path)
}

/// Exchange across a strip bond, borrowing a vacancy from a perpendicular
/// tube for any box endpoint that lacks a second empty neighbour. With the
/// facilitating blocks framed every tube site already has one.
fn assisted(b: &mut Builder, g: &Geometry, a: &SiteVector, c: &SiteVector) -> Result<(), PathError> {
    let saved = b.tag();
    let mut needers: Vec<(SiteVector, Vec<(Block, SiteVector)>)> = Vec::new();
    for (e, partner) in [(a, c), (c, a)] {
        let mut stable = false;
        let mut options = Vec::new();
        for k in 0..4 {
            let y = e.offset(k / 2, if k % 2 == 0 { 1 } else { -1 });
            if &y == partner {
                continue;
            }
            if let Some(t) = g.is_perp_tube_site(&y) {
                options.push((t, y));
            } else if !b.get(&y) {
                stable = true;
            }
        }
        if !stable {
            needers.push((e.clone(), options));
        }
    }
    let zeros = |t: &Block| t.region(g.l).sites().iter().filter(|x| !b.get(x)).count();
    let mut plan: Vec<(Block, SiteVector)> = Vec::new();
    match needers.as_slice() {
        [] => {}
        [(_, opts)] => {
            if let Some(o) = opts.iter().find(|(t, _)| zeros(t) > 0) {
                plan.push(o.clone());
            }
        }
        [(_, o1), (_, o2)] => {
            'outer: for x in o1 {
                for y in o2 {
                    if x.0 != y.0 && zeros(&x.0) > 0 && zeros(&y.0) > 0 {
                        plan = vec![x.clone(), y.clone()];
                        break 'outer;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    if plan.len() != needers.len() {
        return Err(PathError::Stage {
            stage: format!("{:?}", saved.0),
            message: format!("no perpendicular tube can assist the exchange {a} <-> {c}"),
        });
    }
    for (tube, t) in &plan {
        b.stage(StageTag::TubeTransport, format!("glue tube {:?}{:?}", tube.cell, tube.dirs));
        let within = |x: &SiteVector| tube.contains(x, g.l);
        bring_zero(b, g, t, &within)?;
    }
    let (tag, target) = if g.in_box(a) && g.in_box(c) {
        (StageTag::SliceShift, "corner box")
    } else if g.in_box(a) || g.in_box(c) {
        (StageTag::SliceExchange, "box and liaison tube")
    } else {
        (StageTag::TubeTransport, "liaison tube")
    };
    if saved.0 == StageTag::TracerIntoTube {
        b.stage(saved.0, saved.1.clone());
    } else {
        b.stage(tag, target);
    }
    b.mv(a, c)?;
    b.stage(saved.0, saved.1);
    Ok(())
}

/// Drives the tracer along a shortest route to `target` inside `region`,
/// clearing each next site by pulling in the nearest vacancy.
fn tracer_walk(
    b: &mut Builder,
    g: &Geometry,
    region: &dyn Fn(&SiteVector) -> bool,
    target: &SiteVector,
) -> Result<(), PathError> {
    let start = b.tracer();
    if &start == target {
        return Ok(());
    }
    let route = b.nearest(&start, region, &|x| x == target).ok_or_else(|| PathError::Stage {
        stage: format!("{:?}", b.tag().0),
        message: format!("{target} is not reachable by the tracer"),
    })?;
    for w in route.windows(2) {
        let (u, v) = (&w[0], &w[1]);
        if b.get(v) {
            let avoid = u.clone();
            let within = |x: &SiteVector| region(x) && *x != avoid;
            bring_zero(b, g, v, &within)?;
        }
        step(b, g, u, v)?;
    }
    Ok(())
}

/// Moves the identical particles of `sites` into the occupancy `goal`,
/// leaving `fixed` (the tracer) in place. Sites are settled in reverse
/// breadth-first order so the unsettled part stays connected.
fn settle(
    b: &mut Builder,
    g: &Geometry,
    sites: &[SiteVector],
    goal: &HashMap<SiteVector, bool>,
    fixed: Option<&SiteVector>,
) -> Result<(), PathError> {
    let mut open: HashSet<SiteVector> = sites.iter().filter(|x| Some(*x) != fixed).cloned().collect();
    let have: usize = open.iter().filter(|x| b.get(x)).count();
    let want: usize = open.iter().filter(|x| goal[*x]).count();
    if have != want {
        return Err(PathError::Precondition(format!(
            "region holds {have} particles but the goal has {want}"
        )));
    }
    let Some(root) = sites.iter().find(|x| Some(*x) != fixed) else {
        return Ok(());
    };
    let mut order = vec![root.clone()];
    let mut seen: HashSet<SiteVector> = HashSet::from([root.clone()]);
    let mut k = 0;
    while k < order.len() {
        let u = order[k].clone();
        k += 1;
        for a in 0..u.dim() {
            for s in [1, -1] {
                let v = u.offset(a, s);
                if open.contains(&v) && seen.insert(v.clone()) {
                    order.push(v);
                }
            }
        }
    }
    if order.len() != open.len() {
        return Err(PathError::Precondition("region is not connected".into()));
    }
    for v in order.iter().rev() {
        let want = goal[v];
        if b.get(v) != want {
            let path = {
                let within = |x: &SiteVector| open.contains(x);
                b.nearest(v, &within, &|x| b.get(x) == want)
            }
            .ok_or_else(|| PathError::Stage {
                stage: format!("{:?}", b.tag().0),
                message: format!("nothing left to settle {v}"),
            })?;
            if want {
                slide(b, g, &path)?;
            } else {
                walk_blank(b, g, &path)?;
            }
        }
        open.remove(v);
    }
    Ok(())
}

/// Puts every perpendicular tube back to its content in `reference`.
pub(crate) fn restore_tubes(b: &mut Builder, g: &Geometry, reference: &Configuration) -> Result<(), PathError> {
    for t in g.perp_tubes() {
        let sites = t.region(g.l).sites();
        if sites.iter().all(|x| b.get(x) == reference.get(x)) {
            continue;
        }
        b.stage(StageTag::TubeTransport, format!("restore tube {:?}{:?}", t.cell, t.dirs));
        let goal: HashMap<SiteVector, bool> = sites.iter().map(|x| (x.clone(), reference.get(x))).collect();
        settle(b, g, &sites, &goal, None)?;
    }
    Ok(())
}

fn check_tubes(η: &Configuration, g: &Geometry) -> Result<(), PathError> {
    for t in g.nb.tubes() {
        if !is_wrapped(η, t, g.l) {
            return Err(PathError::Precondition(format!("tube {:?}{:?} is not wrapped", t.cell, t.dirs)));
        }
        if t.region(g.l).sites().iter().all(|x| η.get(x)) {
            return Err(PathError::Precondition(format!("tube {:?}{:?} has no vacancy", t.cell, t.dirs)));
        }
    }
    Ok(())
}

/// Frames every facilitating block of the neighbourhood, highest
/// L-dimension first, by replaying face witnesses in lab coordinates.
pub(crate) fn frame_into(b: &mut Builder, g: &Geometry, budget: usize) -> Result<(), PathError> {
    for blk in g.nb.facilitating() {
        b.stage(StageTag::FrameBlocks, format!("block {:?}{:?}", blk.cell, blk.dirs));
        for face in blk.faces(g.l) {
            let ω = face_configuration(&b.cfg, &face)?;
            let n = ω.dim();
            let spec = ConstraintSpec { d: n, s: n };
            let v = frameability_search(&ω, &ω.domain().region(), &spec, budget)?;
            let witness = match v.verdict {
                Verdict::Frameable(w) => w,
                Verdict::NotFrameable(_) => {
                    return Err(PathError::Precondition(format!(
                        "face of block {:?}{:?} is not frameable",
                        blk.cell, blk.dirs
                    )))
                }
                Verdict::Unknown => {
                    return Err(PathError::BudgetExhausted(format!("block {:?}{:?}", blk.cell, blk.dirs)))
                }
            };
            let (origin, sides) = face.as_box().expect("faces are boxes");
            let long: Vec<usize> = (0..sides.len()).filter(|&a| sides[a] > 1).collect();
            let embed = |local: &SiteVector| {
                let mut x = origin.clone();
                for (k, &a) in long.iter().enumerate() {
                    x = x.offset(a, local[k]);
                }
                x
            };
            for (x, y) in witness.moves() {
                b.mv(&embed(&x), &embed(&y))?;
            }
        }
    }
    Ok(())
}

/// Tracer from the origin into the liaison tube at `target`, with the
/// corner box `{0,1}²` empty again afterwards.
pub(crate) fn tracer_into_tube_with(b: &mut Builder, g: &Geometry, target: &SiteVector) -> Result<(), PathError> {
    if !g.liaison.contains(target, g.l) {
        return Err(PathError::Precondition(format!("{target} is not in the liaison tube")));
    }
    b.stage(StageTag::TracerIntoTube, "liaison tube");
    let in_tube = |x: &SiteVector| g.liaison.contains(x, g.l);
    let (s00, s10, s20, s11, s21) = (g.site(0, 0), g.site(1, 0), g.site(2, 0), g.site(1, 1), g.site(2, 1));
    bring_zero(b, g, &s20, &in_tube)?;
    step(b, g, &s00, &s10)?;
    step(b, g, &s10, &s20)?;
    if target == &s20 {
        return Ok(());
    }
    // Borrow the vacancy at (1,1) so the tube keeps a free site.
    let borrowed = b.get(&s21);
    if borrowed {
        step(b, g, &s21, &s11)?;
    }
    tracer_walk(b, g, &in_tube, target)?;
    if borrowed {
        let tr = b.tracer();
        let free = |x: &SiteVector| in_tube(x) && *x != tr;
        if tr != s21 {
            bring_zero(b, g, &s21, &free)?;
            step(b, g, &s11, &s21)?;
        } else {
            bring_zero(b, g, &s20, &free)?;
            step(b, g, &s11, &s10)?;
            step(b, g, &s10, &s20)?;
        }
    }
    Ok(())
}

/// Moves the tracer to `tracer_goal` and then every other particle of the
/// strip into `goal`.
pub(crate) fn strip_transport(
    b: &mut Builder,
    g: &Geometry,
    goal: &HashMap<SiteVector, bool>,
    tracer_goal: &SiteVector,
) -> Result<(), PathError> {
    let strip = g.strip();
    let in_strip = |x: &SiteVector| g.in_strip(x);
    b.stage(StageTag::TubeTransport, "strip");
    tracer_walk(b, g, &in_strip, tracer_goal)?;
    settle(b, g, &strip, goal, Some(tracer_goal))
}

pub(crate) fn neighborhood_builder(η: &Configuration, g: &Geometry, spec: ConstraintSpec) -> Builder {
    Builder::new(η.clone(), spec, g.nb.sites(g.l))
}

fn finish(b: &Builder, η: &Configuration) -> Result<AllowedPath, PathError> {
    Ok(AllowedPath::from_moves(η.clone(), &b.moves, PathMode::Environment)?)
}

fn prepare(η: &Configuration, axis: usize, l: usize, spec: &ConstraintSpec) -> Result<Geometry, PathError> {
    check_spec(η, spec, l)?;
    Geometry::new(axis, l)
}

/// Frames every facilitating block of `𝒩_{0,axis}`. The tracer is not
/// touched; the path is in the lab frame.
pub fn frame_blocks(
    η: &Configuration,
    axis: usize,
    l: usize,
    spec: &ConstraintSpec,
    budget: usize,
) -> Result<AllowedPath, PathError> {
    let g = prepare(η, axis, l, spec)?;
    let mut b = neighborhood_builder(η, &g, *spec);
    frame_into(&mut b, &g, budget)?;
    finish(&b, η)
}

/// Rearranges a wrapped tube of `𝒩_{0,axis}` into `goal` (listed in the
/// order of `tube.region(l).sites()`), first moving the tracer to
/// `tracer_to` when given. Only moves inside the tube are used.
pub fn tube_transport(
    η: &Configuration,
    axis: usize,
    l: usize,
    spec: &ConstraintSpec,
    tube: &Block,
    goal: &[bool],
    tracer_to: Option<&SiteVector>,
) -> Result<AllowedPath, PathError> {
    let g = prepare(η, axis, l, spec)?;
    if !tube.is_tube() || !g.nb.blocks.contains(tube) {
        return Err(PathError::Precondition("not a tube of the neighbourhood".into()));
    }
    if !is_wrapped(η, tube, l) {
        return Err(PathError::Precondition("tube is not wrapped".into()));
    }
    let sites = tube.region(l).sites();
    if goal.len() != sites.len() {
        return Err(PathError::Precondition("goal length differs from the tube size".into()));
    }
    let mut b = neighborhood_builder(η, &g, *spec);
    b.stage(StageTag::TubeTransport, format!("tube {:?}{:?}", tube.cell, tube.dirs));
    let in_tube = |x: &SiteVector| tube.contains(x, l);
    let fixed = match tracer_to {
        Some(t) => {
            if !in_tube(&b.tracer()) || !in_tube(t) || !goal[sites.iter().position(|x| x == t).unwrap()] {
                return Err(PathError::Precondition("tracer and its target must be in the tube".into()));
            }
            if sites.iter().all(|x| b.get(x)) {
                return Err(PathError::Precondition("tube has no vacancy".into()));
            }
            tracer_walk(&mut b, &g, &in_tube, t)?;
            Some(t.clone())
        }
        None => {
            if in_tube(&b.tracer()) {
                return Err(PathError::Precondition("tube holds the tracer but no target was given".into()));
            }
            None
        }
    };
    let goal: HashMap<SiteVector, bool> = sites.iter().cloned().zip(goal.iter().copied()).collect();
    settle(&mut b, &g, &sites, &goal, fixed.as_ref())?;
    finish(&b, η)
}

/// Tracer from the origin to `target` inside the tube `{2..L+1}×{0,1}`,
/// restoring an empty `{0,1}²`. Needs the event `A` and wrapped tubes that
/// each contain a vacancy.
pub fn tracer_into_tube(
    η: &Configuration,
    axis: usize,
    l: usize,
    spec: &ConstraintSpec,
    target: &SiteVector,
) -> Result<AllowedPath, PathError> {
    let g = prepare(η, axis, l, spec)?;
    check_event_a(η)?;
    check_tubes(η, &g)?;
    let mut b = neighborhood_builder(η, &g, *spec);
    tracer_into_tube_with(&mut b, &g, target)?;
    finish(&b, η)
}

pub(crate) fn check_event_a(η: &Configuration) -> Result<(), PathError> {
    let o = SiteVector::zero(η.dim());
    let ok = η.tracer() == Some(&o)
        && [[1, 0], [0, 1], [1, 1]].iter().all(|c| !η.get(&SiteVector::from(*c)));
    if ok {
        Ok(())
    } else {
        Err(PathError::Precondition("tracer at 0 with the rest of {0,1}² empty is required".into()))
    }
}

/// Exchanges the contents of strip columns `k` and `k+1` row by row, then
/// puts the perpendicular tubes back.
pub fn slice_exchange(
    η: &Configuration,
    axis: usize,
    l: usize,
    spec: &ConstraintSpec,
    k: i64,
) -> Result<AllowedPath, PathError> {
    let g = prepare(η, axis, l, spec)?;
    if !(0..=g.p).contains(&k) {
        return Err(PathError::Precondition(format!("column {k} has no right neighbour in the strip")));
    }
    check_tubes(η, &g)?;
    let mut b = neighborhood_builder(η, &g, *spec);
    b.stage(StageTag::SliceExchange, format!("columns {k},{}", k + 1));
    for r in 0..2 {
        let (u, v) = (g.site(k, r), g.site(k + 1, r));
        match (b.get(&u), b.get(&v)) {
            (true, false) => assisted(&mut b, &g, &u, &v)?,
            (false, true) => assisted(&mut b, &g, &v, &u)?,
            (true, true) if b.is_tracer(&u) || b.is_tracer(&v) => {
                return Err(PathError::Precondition("tracer faces a particle across the slices".into()))
            }
            _ => {}
        }
    }
    restore_tubes(&mut b, &g, η)?;
    finish(&b, η)
}

/// Moves the particles of strip column `k` (or `k+1`) into the other,
/// empty column one at a time in the given order, then puts the
/// perpendicular tubes back.
pub fn slice_shift(
    η: &Configuration,
    axis: usize,
    l: usize,
    spec: &ConstraintSpec,
    k: i64,
    order: ShiftOrder,
) -> Result<AllowedPath, PathError> {
    let g = prepare(η, axis, l, spec)?;
    if !(0..=g.p).contains(&k) {
        return Err(PathError::Precondition(format!("column {k} has no right neighbour in the strip")));
    }
    check_tubes(η, &g)?;
    let col = |c: i64| [g.site(c, 0), g.site(c, 1)];
    let (from, to) = if col(k + 1).iter().all(|x| !η.get(x)) {
        (col(k), col(k + 1))
    } else if col(k).iter().all(|x| !η.get(x)) {
        (col(k + 1), col(k))
    } else {
        return Err(PathError::Precondition("neither slice is empty".into()));
    };
    let mut rows: Vec<usize> = vec![0, 1];
    if order == ShiftOrder::Reverse {
        rows.reverse();
    }
    let mut b = neighborhood_builder(η, &g, *spec);
    b.stage(StageTag::SliceShift, format!("columns {k},{}", k + 1));
    for r in rows {
        if b.get(&from[r]) {
            assisted(&mut b, &g, &from[r], &to[r])?;
        }
    }
    restore_tubes(&mut b, &g, η)?;
    finish(&b, η)
}
