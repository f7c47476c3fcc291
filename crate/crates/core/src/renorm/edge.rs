use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::paving::{block_neighborhood, hat_neighborhood, Block, BlockNeighborhood};
use crate::dynamics::ConstraintSpec;
use crate::error::{LatticeError, RenormError};
use crate::frame::{frameability_search, Verdict};
use crate::lattice::{Boundary, Configuration, Domain, Region, SiteVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeState {
    Open,
    Closed,
    /// A face search hit its budget and nothing else closed the edge.
    Unknown,
}

impl EdgeState {
    pub fn is_open(self) -> bool {
        self == EdgeState::Open
    }
}

/// Memo of face verdicts keyed by `(n, L, face occupancy)`. Frameability of
/// a face depends only on its own occupancy pattern.
#[derive(Debug, Default)]
pub struct FaceCache {
    map: HashMap<(usize, usize, Vec<u64>), EdgeState>,
    pub hits: usize,
    pub searches: usize,
    pub budget_hits: usize,
}

impl FaceCache {
    pub fn new() -> Self {
        Self::default()
    }
}

/// The face `region` (a box with `n` sides of length `L` and the rest of
/// length 1) copied into an `n`-dimensional box with occupied exterior.
pub fn face_configuration(η: &Configuration, face: &Region) -> Result<Configuration, LatticeError> {
    let (origin, sides) = face.as_box().ok_or(LatticeError::NotABox)?;
    let long: Vec<usize> = (0..sides.len()).filter(|&a| sides[a] > 1).collect();
    let n = long.len();
    let fsides: Vec<usize> = long.iter().map(|&a| sides[a]).collect();
    let dom = Domain::fixed(SiteVector::zero(n), fsides, true);
    let mut out = Configuration::empty(dom.clone());
    for i in 0..dom.n_sites() {
        let local = dom.site(i);
        let mut x = origin.clone();
        for (k, &a) in long.iter().enumerate() {
            x = x.offset(a, local[k]);
        }
        if η.get(&x) {
            out.set(&local, true)?;
        }
    }
    Ok(out)
}

/// Frameability of one face for KA with parameter `n` in dimension `n`.
pub fn face_state(
    η: &Configuration,
    face: &Region,
    l: usize,
    budget: usize,
    cache: &mut FaceCache,
) -> Result<EdgeState, RenormError> {
    let ω = face_configuration(η, face)?;
    let n = ω.dim();
    let key = (n, l, ω.bits().words().to_vec());
    if let Some(&s) = cache.map.get(&key) {
        cache.hits += 1;
        return Ok(s);
    }
    cache.searches += 1;
    let spec = ConstraintSpec { d: n, s: n };
    let region = ω.domain().region();
    let v = frameability_search(&ω, &region, &spec, budget)?;
    let s = match v.verdict {
        Verdict::Frameable(_) => EdgeState::Open,
        Verdict::NotFrameable(_) => EdgeState::Closed,
        Verdict::Unknown => {
            cache.budget_hits += 1;
            EdgeState::Unknown
        }
    };
    cache.map.insert(key, s);
    Ok(s)
}

/// Condition (1) on every tube and condition (2) on every facilitating
/// block of `blocks`. Tubes are checked first; faces are searched only while
/// the verdict is still open.
pub fn blocks_state(
    η: &Configuration,
    blocks: &[Block],
    l: usize,
    budget: usize,
    cache: &mut FaceCache,
) -> Result<EdgeState, RenormError> {
    for t in blocks.iter().filter(|b| b.is_tube()) {
        if t.region(l).sites().iter().all(|x| η.get(x)) {
            return Ok(EdgeState::Closed);
        }
    }
    let mut fac: Vec<&Block> = blocks.iter().filter(|b| b.is_facilitating()).collect();
    fac.sort_by(|a, b| b.l_dim().cmp(&a.l_dim()).then(a.cmp(b)));
    let mut unknown = false;
    for b in fac {
        for face in b.faces(l) {
            match face_state(η, &face, l, budget, cache)? {
                EdgeState::Closed => return Ok(EdgeState::Closed),
                EdgeState::Unknown => unknown = true,
                EdgeState::Open => {}
            }
        }
    }
    Ok(if unknown { EdgeState::Unknown } else { EdgeState::Open })
}

fn anchor_cell(x: &SiteVector, l: usize) -> Result<Vec<i64>, RenormError> {
    let p = l as i64 + 2;
    if x.coords().iter().any(|c| c.rem_euclid(p) != 0) {
        return Err(RenormError::InvalidInput(format!("{x} is not on the lattice (L+2)Z^d")));
    }
    Ok(x.coords().iter().map(|c| c.div_euclid(p)).collect())
}

/// State of the renormalised bond `(x, x + (L+2)e_axis)`.
pub fn edge_state(
    η: &Configuration,
    x: &SiteVector,
    axis: usize,
    l: usize,
    budget: usize,
    cache: &mut FaceCache,
) -> Result<EdgeState, RenormError> {
    let n = block_neighborhood(&anchor_cell(x, l)?, axis, l)?;
    blocks_state(η, &n.blocks, l, budget, cache)
}

/// `^`-openness of the stretched-lattice vertex `x ∈ ℤ²` (anchor
/// `x̂ = (L+2)(3x_1, 2x_2)`).
pub fn hat_state(
    η: &Configuration,
    x: &[i64],
    l: usize,
    budget: usize,
    cache: &mut FaceCache,
) -> Result<EdgeState, RenormError> {
    if η.dim() != 2 {
        return Err(RenormError::UnsupportedDim(η.dim()));
    }
    let n: BlockNeighborhood = hat_neighborhood(x, l)?;
    blocks_state(η, &n.blocks, l, budget, cache)
}

pub fn hat_open(η: &Configuration, x: &[i64], l: usize, budget: usize, cache: &mut FaceCache) -> Result<bool, RenormError> {
    Ok(hat_state(η, x, l, budget, cache)?.is_open())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldProvenance {
    pub source_digest: String,
    pub l: usize,
    pub d: usize,
    pub budget: usize,
}

/// Bond states on the renormalised torus. Vertex `v` has cell coordinates
/// in `cells` (axis 0 fastest); bond `(v, v + e_a)` is `states[v * d + a]`,
/// with periodic wrap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedField {
    pub cells: Vec<usize>,
    pub states: Vec<EdgeState>,
    pub provenance: FieldProvenance,
}

impl RenormalizedField {
    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn vertex(&self, mut v: usize) -> Vec<i64> {
        self.cells
            .iter()
            .map(|&c| {
                let r = v % c;
                v /= c;
                r as i64
            })
            .collect()
    }

    pub fn index(&self, cell: &[i64]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim()).rev() {
            idx = idx * self.cells[a] + cell[a].rem_euclid(self.cells[a] as i64) as usize;
        }
        idx
    }

    /// Neighbour of `v` one step along `a` in direction `sign`.
    pub fn step(&self, v: usize, a: usize, sign: i64) -> usize {
        let mut c = self.vertex(v);
        c[a] += sign;
        self.index(&c)
    }

    pub fn state(&self, v: usize, a: usize) -> EdgeState {
        self.states[v * self.dim() + a]
    }

    /// Is the bond from `v` in direction `(a, sign)` open?
    pub fn open(&self, v: usize, a: usize, sign: i64) -> bool {
        if sign > 0 {
            self.state(v, a).is_open()
        } else {
            self.state(self.step(v, a, -1), a).is_open()
        }
    }

    fn fraction(&self, s: EdgeState) -> f64 {
        self.states.iter().filter(|&&x| x == s).count() as f64 / self.states.len() as f64
    }

    pub fn open_fraction(&self) -> f64 {
        self.fraction(EdgeState::Open)
    }

    pub fn unknown_fraction(&self) -> f64 {
        self.fraction(EdgeState::Unknown)
    }

    /// A field with every bond in the given state.
    pub fn uniform(cells: Vec<usize>, state: EdgeState) -> Self {
        let n: usize = cells.iter().product::<usize>() * cells.len();
        RenormalizedField {
            provenance: FieldProvenance {
                source_digest: "synthetic".into(),
                l: 0,
                d: cells.len(),
                budget: 0,
            },
            cells,
            states: vec![state; n],
        }
    }
}

/// Evaluates every renormalised bond of a torus whose sides are multiples
/// of `L+2`.
pub fn build_field(
    η: &Configuration,
    l: usize,
    budget: usize,
    cache: &mut FaceCache,
) -> Result<RenormalizedField, RenormError> {
    if η.domain().boundary() != Boundary::Torus {
        return Err(RenormError::InvalidWindow("fields are built on a torus".into()));
    }
    let p = l + 2;
    let d = η.dim();
    let dims = η.domain().dims();
    if let Some(w) = dims.iter().find(|&&w| w % p != 0 || w / p < d + 2) {
        return Err(RenormError::InvalidWindow(format!(
            "torus side {w} must be a multiple of L+2 = {p} with at least {} cells",
            d + 2
        )));
    }
    let cells: Vec<usize> = dims.iter().map(|w| w / p).collect();
    let neighborhoods: Vec<BlockNeighborhood> = (0..d)
        .map(|a| block_neighborhood(&vec![0; d], a, l))
        .collect::<Result<_, _>>()?;
    let mut field = RenormalizedField {
        states: Vec::new(),
        provenance: FieldProvenance {
            source_digest: format!("{:032x}", η.digest()),
            l,
            d,
            budget,
        },
        cells,
    };
    let n_vertices = field.n_vertices();
    let mut states = Vec::with_capacity(n_vertices * d);
    for v in 0..n_vertices {
        let cell = field.vertex(v);
        for nb in &neighborhoods {
            let blocks: Vec<Block> = nb.blocks.iter().map(|b| b.translated(&cell)).collect();
            states.push(blocks_state(η, &blocks, l, budget, cache)?);
        }
    }
    field.states = states;
    Ok(field)
}
