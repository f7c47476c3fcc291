use std::sync::Arc;

use rand::Rng as _;
use rand_distr::Exp1;

use super::catalog::{RateCatalog, TorusGraph};
use super::constraint::{constraint_ka, ConstraintSpec};
use crate::error::DynamicsError;
use crate::lattice::{BitField, Boundary, Configuration, SiteVector};
use crate::rng::{self, Purpose, Rng};

/// One executed exchange: the particle at site index `from` moved to `to`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub from: u32,
    pub to: u32,
}

/// Rejection-free continuous-time Kawasaki dynamics on a torus.
///
/// Every allowed ordered bond carries rate 1. The catalog is kept exact by
/// re-evaluating, after each exchange on `(x, y)`, all bonds touching
/// `{x, y} ∪ N(x) ∪ N(y)`: a bond's rate reads the occupancies and
/// empty-neighbour counts of its two endpoints, and the exchange changes
/// occupancies on `{x, y}` and counts on `N(x) ∪ N(y)` only.
#[derive(Clone, Debug)]
pub struct KmcEngine {
    graph: Arc<TorusGraph>,
    spec: ConstraintSpec,
    occ: Vec<u8>,
    empty: Vec<u8>,
    catalog: RateCatalog,
    time: f64,
    tracer: Option<usize>,
    disp: Vec<i64>,
    events: u64,
    check_every: u64,
}

impl KmcEngine {
    pub fn new(η: &Configuration, spec: ConstraintSpec) -> Result<Self, DynamicsError> {
        let graph = Arc::new(TorusGraph::new(η.domain())?);
        Self::with_graph(graph, η, spec)
    }

    pub fn with_graph(
        graph: Arc<TorusGraph>,
        η: &Configuration,
        spec: ConstraintSpec,
    ) -> Result<Self, DynamicsError> {
        if graph.domain() != η.domain() {
            return Err(DynamicsError::InvalidSpec("graph/configuration domain mismatch".into()));
        }
        if spec.d != η.dim() {
            return Err(DynamicsError::InvalidSpec(format!(
                "spec has d = {}, configuration has d = {}",
                spec.d,
                η.dim()
            )));
        }
        let n = graph.n_sites();
        let occ: Vec<u8> = (0..n).map(|i| u8::from(η.get_index(i))).collect();
        let empty = (0..n)
            .map(|i| graph.nbrs(i).iter().filter(|&&z| occ[z as usize] == 0).count() as u8)
            .collect();
        let catalog = RateCatalog::empty(graph.clone());
        let n_bonds = (n * graph.deg()) as u64;
        let mut e = KmcEngine {
            graph,
            spec,
            occ,
            empty,
            catalog,
            time: 0.0,
            tracer: η.tracer_index(),
            disp: η
                .displacement()
                .map(|v| v.coords().to_vec())
                .unwrap_or_else(|| vec![0; η.dim()]),
            events: 0,
            check_every: n_bonds.saturating_mul(64).max(4096),
        };
        e.rebuild();
        Ok(e)
    }

    #[inline(always)]
    fn allowed(&self, bond: usize) -> bool {
        let (x, y) = self.graph.endpoints(bond);
        self.spec.allows(
            self.occ[x] == 1,
            self.occ[y] == 1,
            self.empty[x] as usize,
            self.empty[y] as usize,
        )
    }

    fn rebuild(&mut self) {
        for b in 0..self.graph.n_sites() * self.graph.deg() {
            let a = self.allowed(b);
            self.catalog.set(b, a);
        }
    }

    /// Full-rebuild comparison of the incrementally maintained catalog.
    pub fn verify_catalog(&self) -> bool {
        let mut fresh = RateCatalog::empty(self.graph.clone());
        for b in 0..self.graph.n_sites() * self.graph.deg() {
            fresh.set(b, self.allowed(b));
        }
        fresh.same_members(&self.catalog)
    }

    pub fn graph(&self) -> &Arc<TorusGraph> {
        &self.graph
    }

    pub fn spec(&self) -> ConstraintSpec {
        self.spec
    }

    pub fn catalog(&self) -> &RateCatalog {
        &self.catalog
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn tracer_site(&self) -> Option<usize> {
        self.tracer
    }

    pub fn displacement(&self) -> &[i64] {
        &self.disp
    }

    pub fn occupied(&self, site: usize) -> bool {
        self.occ[site] == 1
    }

    /// Re-evaluates the bonds at `u` that can be allowed given `u`'s
    /// (unchanged) occupancy: out-bonds when occupied, in-bonds when empty.
    /// The bond towards `skip` is left alone.
    #[inline(always)]
    fn refresh_site(&mut self, u: usize, skip: usize) {
        let deg = self.graph.deg();
        let (ou, eu) = (self.occ[u] == 1, self.empty[u] as usize);
        for dir in 0..deg {
            let v = self.graph.nbr(u, dir);
            if v == skip {
                continue;
            }
            let (ov, ev) = (self.occ[v] == 1, self.empty[v] as usize);
            if ou {
                self.catalog.set(u * deg + dir, self.spec.allows(true, ov, eu, ev));
            } else {
                self.catalog.set(v * deg + (dir ^ 1), self.spec.allows(ov, false, ev, eu));
            }
        }
    }

    /// As `refresh_site` for a site whose occupancy just flipped: bonds of
    /// the other orientation are cleared first.
    #[inline(always)]
    fn refresh_flipped(&mut self, u: usize) {
        let deg = self.graph.deg();
        let ou = self.occ[u] == 1;
        for dir in 0..deg {
            if ou {
                let v = self.graph.nbr(u, dir);
                self.catalog.set(v * deg + (dir ^ 1), false);
            } else {
                self.catalog.set(u * deg + dir, false);
            }
        }
        self.refresh_site(u, usize::MAX);
    }

    /// Executes the exchange on ordered bond `bond`, which must be allowed.
    pub fn apply(&mut self, bond: usize) {
        debug_assert!(self.allowed(bond));
        let deg = self.graph.deg();
        let (x, y) = self.graph.endpoints(bond);
        self.occ[x] = 0;
        self.occ[y] = 1;
        for dir in 0..deg {
            let zx = self.graph.nbr(x, dir);
            self.empty[zx] += 1;
            let zy = self.graph.nbr(y, dir);
            self.empty[zy] -= 1;
        }
        if self.tracer == Some(x) {
            self.tracer = Some(y);
            let dir = bond % deg;
            self.disp[dir / 2] += if dir % 2 == 0 { 1 } else { -1 };
        }
        self.refresh_flipped(x);
        self.refresh_flipped(y);
        for dir in 0..deg {
            let zx = self.graph.nbr(x, dir);
            if zx != y {
                self.refresh_site(zx, x);
            }
            let zy = self.graph.nbr(y, dir);
            if zy != x {
                self.refresh_site(zy, y);
            }
        }
        self.events += 1;
        if cfg!(debug_assertions) && self.events % self.check_every == 0 {
            assert!(self.verify_catalog(), "incremental catalog diverged from rebuild");
        }
    }

    /// Draws and executes one event; `None` when the configuration is blocked.
    pub fn step(&mut self, rng: &mut Rng) -> Option<Event> {
        let k = self.catalog.len();
        if k == 0 {
            return None;
        }
        let dt: f64 = rng.sample::<f64, _>(Exp1) / k as f64;
        self.time += dt;
        Some(self.fire(rng, k))
    }

    fn fire(&mut self, rng: &mut Rng, k: usize) -> Event {
        let bond = self.catalog.get(rng.random_range(0..k));
        let (x, y) = self.graph.endpoints(bond);
        self.apply(bond);
        Event {
            time: self.time,
            from: x as u32,
            to: y as u32,
        }
    }

    /// Executes the next event if it happens no later than `t_end`;
    /// otherwise moves the clock to `t_end` and returns `None`. Discarding
    /// the overshooting waiting time is exact by memorylessness.
    pub fn step_until(&mut self, t_end: f64, rng: &mut Rng) -> Option<Event> {
        let k = self.catalog.len();
        if k > 0 {
            let dt: f64 = rng.sample::<f64, _>(Exp1) / k as f64;
            if self.time + dt <= t_end {
                self.time += dt;
                return Some(self.fire(rng, k));
            }
        }
        self.time = self.time.max(t_end);
        None
    }

    /// Runs until time `t_end`, reporting each event.
    pub fn advance_to(&mut self, t_end: f64, rng: &mut Rng, mut on_event: impl FnMut(&Event)) {
        while let Some(ev) = self.step_until(t_end, rng) {
            on_event(&ev);
        }
    }

    /// Restarts the clock, e.g. after rebuilding an engine mid-run.
    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn configuration(&self) -> Configuration {
        let dom = self.graph.domain().clone();
        let mut bits = BitField::zeros(dom.n_sites());
        for (i, &o) in self.occ.iter().enumerate() {
            bits.set(i, o == 1);
        }
        let mut c = Configuration::from_bits(dom.clone(), bits).expect("sizes match");
        if let Some(t) = self.tracer {
            c.set_tracer(Some(dom.site(t))).expect("tracer site occupied");
            c.set_displacement(Some(SiteVector::new(self.disp.clone())));
        }
        c
    }
}

/// Recorded run of the environment dynamics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub initial: Configuration,
    pub spec: ConstraintSpec,
    pub seed: u64,
    pub t_max: f64,
    pub events: Vec<Event>,
    pub final_config: Configuration,
}

impl Trajectory {
    /// Replays the event log from the initial configuration.
    pub fn replay(&self) -> Result<Configuration, DynamicsError> {
        let mut c = self.initial.clone();
        let dom = c.domain().clone();
        for e in &self.events {
            c.swap_in_place(&dom.site(e.from as usize), &dom.site(e.to as usize))?;
        }
        Ok(c)
    }
}

pub fn kmc_run(
    η0: &Configuration,
    spec: ConstraintSpec,
    t_max: f64,
    seed: u64,
) -> Result<Trajectory, DynamicsError> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(DynamicsError::InvalidTime(t_max));
    }
    let mut engine = KmcEngine::new(η0, spec)?;
    let mut rng = rng::stream(seed, Purpose::Replica, 0);
    let mut events = Vec::new();
    engine.advance_to(t_max, &mut rng, |e| events.push(*e));
    Ok(Trajectory {
        initial: η0.clone(),
        spec,
        seed,
        t_max,
        events,
        final_config: engine.configuration(),
    })
}

pub fn rebuild_catalog(η: &Configuration, spec: ConstraintSpec) -> Result<RateCatalog, DynamicsError> {
    Ok(KmcEngine::new(η, spec)?.catalog().clone())
}

/// True iff no exchange is allowed. On a fixed box only bonds with both
/// endpoints inside the box are considered.
pub fn is_blocked(η: &Configuration, spec: ConstraintSpec) -> Result<bool, DynamicsError> {
    if η.domain().boundary() == Boundary::Torus && η.domain().dims().iter().all(|&n| n >= 3) {
        return Ok(rebuild_catalog(η, spec)?.is_empty());
    }
    let dom = η.domain().clone();
    for i in 0..dom.n_sites() {
        let x = dom.site(i);
        for k in 0..2 * dom.dim() {
            let y = dom.step(&x, k);
            if dom.resolve(&y).is_some() && y != x && constraint_ka(η, &x, &y, &spec)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
