use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::digest::digest_bytes;
use crate::dynamics::{constraint_ka, ConstraintSpec};
use crate::error::PathError;
use crate::lattice::{Configuration, SiteVector};

/// Which construction a run of moves implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTag {
    FrameBlocks,
    TubeTransport,
    TracerIntoTube,
    SliceExchange,
    SliceShift,
}

/// A maximal run of moves sharing a tag and a target description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStage {
    pub tag: StageTag,
    pub target: String,
    pub start: usize,
    pub len: usize,
}

/// Lab-frame move recorder. Every move is checked against the kernel and
/// the locality set before it is applied. When a move recreates a
/// configuration already on the path (as seen from the tracer), the loop
/// in between is cut out.
pub(crate) struct Builder {
    pub cfg: Configuration,
    spec: ConstraintSpec,
    local: HashSet<SiteVector>,
    pub moves: Vec<(SiteVector, SiteVector)>,
    labels: Vec<(StageTag, String)>,
    label_of: Vec<usize>,
    current: usize,
    history: Vec<u128>,
    lab_history: Vec<u128>,
    index: HashMap<u128, usize>,
    pub excised: usize,
}

impl Builder {
    pub fn new(cfg: Configuration, spec: ConstraintSpec, local: impl IntoIterator<Item = SiteVector>) -> Self {
        let dom = cfg.domain().clone();
        let local = local.into_iter().map(|x| dom.normalize(&x)).collect();
        let mut b = Builder {
            spec,
            local,
            moves: Vec::new(),
            labels: vec![(StageTag::FrameBlocks, String::new())],
            label_of: Vec::new(),
            current: 0,
            history: Vec::new(),
            lab_history: Vec::new(),
            index: HashMap::new(),
            excised: 0,
            cfg,
        };
        let dg = b.frame_digest();
        b.history.push(dg);
        b.lab_history.push(b.cfg.digest());
        b.index.insert(dg, 0);
        b
    }

    pub fn stage(&mut self, tag: StageTag, target: impl Into<String>) {
        let t = target.into();
        if self.labels[self.current] != (tag, t.clone()) {
            self.labels.push((tag, t));
            self.current = self.labels.len() - 1;
        }
    }

    pub fn tag(&self) -> (StageTag, String) {
        self.labels[self.current].clone()
    }

    pub fn get(&self, x: &SiteVector) -> bool {
        self.cfg.get(x)
    }

    pub fn tracer(&self) -> SiteVector {
        self.cfg.tracer().cloned().expect("builder configurations carry a tracer")
    }

    pub fn is_tracer(&self, x: &SiteVector) -> bool {
        self.cfg.domain().normalize(x) == self.tracer()
    }

    /// Digest of the configuration seen from the tracer.
    fn frame_digest(&self) -> u128 {
        let dom = self.cfg.domain();
        let dims = dom.dims();
        let t = self.tracer();
        let n = dom.n_sites();
        let mut bytes = vec![0u8; n.div_ceil(8)];
        for k in 0..n {
            let mut rem = k;
            let mut src = 0;
            let mut stride = 1;
            for (a, &w) in dims.iter().enumerate() {
                let c = rem % w;
                rem /= w;
                let s = (c as i64 + t[a]).rem_euclid(w as i64) as usize;
                src += s * stride;
                stride *= w;
            }
            if self.cfg.get_index(src) {
                bytes[k / 8] |= 1 << (k % 8);
            }
        }
        digest_bytes(&bytes)
    }

    fn fail(&self, msg: String) -> PathError {
        PathError::Stage {
            stage: format!("{:?}", self.labels[self.current].0),
            message: msg,
        }
    }

    /// The particle at `a` jumps to the empty neighbour `b`.
    pub fn mv(&mut self, a: &SiteVector, b: &SiteVector) -> Result<(), PathError> {
        let dom = self.cfg.domain();
        let (a, b) = (dom.normalize(a), dom.normalize(b));
        if !self.local.contains(&a) || !self.local.contains(&b) {
            return Err(self.fail(format!("move {a} -> {b} leaves the block neighbourhood")));
        }
        if !self.cfg.get(&a) || self.cfg.get(&b) {
            return Err(self.fail(format!("move {a} -> {b} needs a particle at {a} and a vacancy at {b}")));
        }
        if !constraint_ka(&self.cfg, &a, &b, &self.spec).map_err(|e| self.fail(e.to_string()))? {
            return Err(self.fail(format!("constraint forbids {a} -> {b}")));
        }
        self.cfg.swap_in_place(&a, &b)?;
        self.moves.push((a, b));
        self.label_of.push(self.current);
        let dg = self.frame_digest();
        let lab = self.cfg.digest();
        if let Some(&j) = self.index.get(&dg) {
            if self.lab_history[j] != lab {
                return Err(self.fail("revisited a translate of an earlier configuration".into()));
            }
            for k in j + 1..self.history.len() {
                self.index.remove(&self.history[k]);
            }
            self.excised += self.moves.len() - j;
            self.moves.truncate(j);
            self.label_of.truncate(j);
            self.history.truncate(j + 1);
            self.lab_history.truncate(j + 1);
        } else {
            self.history.push(dg);
            self.lab_history.push(lab);
            self.index.insert(dg, self.moves.len());
        }
        Ok(())
    }

    pub fn plan(&self) -> Vec<PlanStage> {
        let mut out: Vec<PlanStage> = Vec::new();
        for (k, &l) in self.label_of.iter().enumerate() {
            let (tag, target) = &self.labels[l];
            match out.last_mut() {
                Some(s) if s.tag == *tag && &s.target == target => s.len += 1,
                _ => out.push(PlanStage {
                    tag: *tag,
                    target: target.clone(),
                    start: k,
                    len: 1,
                }),
            }
        }
        out
    }

    /// Breadth-first search from `start` through sites accepted by `allowed`
    /// for the nearest site (other than `start`) satisfying `goal`. Returns
    /// the path `start, …, found`.
    pub fn nearest(
        &self,
        start: &SiteVector,
        allowed: &dyn Fn(&SiteVector) -> bool,
        goal: &dyn Fn(&SiteVector) -> bool,
    ) -> Option<Vec<SiteVector>> {
        let d = start.dim();
        let mut prev: HashMap<SiteVector, SiteVector> = HashMap::new();
        let mut q = VecDeque::from([start.clone()]);
        prev.insert(start.clone(), start.clone());
        while let Some(u) = q.pop_front() {
            if &u != start && goal(&u) {
                let mut path = vec![u.clone()];
                let mut cur = u;
                while &cur != start {
                    cur = prev[&cur].clone();
                    path.push(cur.clone());
                }
                path.reverse();
                return Some(path);
            }
            for k in 0..2 * d {
                let v = u.offset(k / 2, if k % 2 == 0 { 1 } else { -1 });
                if !prev.contains_key(&v) && allowed(&v) {
                    prev.insert(v.clone(), u.clone());
                    q.push_back(v);
                }
            }
        }
        None
    }
}
