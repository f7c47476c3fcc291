use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dynamics::{constraint_ka, ConstraintSpec};
use crate::error::LatticeError;
use crate::lattice::{Configuration, SiteVector};

/// Checkpoint spacing for stored paths.
pub const CHECKPOINT_EVERY: usize = 1 << 10;

/// How consecutive configurations of a path are related.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// Every step is a plain exchange `η ↦ η^{xy}`.
    Environment,
    /// Configurations are seen from the tracer, which sits at the origin. A
    /// step with `x = 0` is a tracer jump followed by re-centring,
    /// `η ↦ τ_y(η^{0y})`; other steps are plain exchanges.
    Tracer,
}

/// One move: the particle at `x` jumps to the empty neighbour `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub x: SiteVector,
    pub y: SiteVector,
    pub tracer_move: bool,
    /// Digest of the configuration after the step.
    pub digest: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllowedPath {
    pub initial: Configuration,
    pub steps: Vec<PathStep>,
    pub final_config: Configuration,
    /// `(k, configuration after k steps)` for every multiple `k` of
    /// [`CHECKPOINT_EVERY`].
    pub checkpoints: Vec<(usize, Configuration)>,
}

/// Applies one step in the given mode.
pub fn apply_step(
    η: &mut Configuration,
    x: &SiteVector,
    y: &SiteVector,
    mode: PathMode,
) -> Result<(), LatticeError> {
    η.swap_in_place(x, y)?;
    if mode == PathMode::Tracer && x.is_zero() {
        *η = η.translate(y)?;
    }
    Ok(())
}

impl AllowedPath {
    pub fn empty(initial: Configuration) -> Self {
        AllowedPath {
            final_config: initial.clone(),
            initial,
            steps: Vec::new(),
            checkpoints: Vec::new(),
        }
    }

    /// Replays `moves` from `initial`, recording digests and checkpoints.
    /// Only the lattice geometry is checked here; see [`validate_path`].
    pub fn from_moves(
        initial: Configuration,
        moves: &[(SiteVector, SiteVector)],
        mode: PathMode,
    ) -> Result<Self, LatticeError> {
        let mut path = AllowedPath::empty(initial);
        for (x, y) in moves {
            path.push(x.clone(), y.clone(), mode)?;
        }
        Ok(path)
    }

    pub fn push(&mut self, x: SiteVector, y: SiteVector, mode: PathMode) -> Result<(), LatticeError> {
        apply_step(&mut self.final_config, &x, &y, mode)?;
        let tracer_move = mode == PathMode::Tracer && x.is_zero();
        self.steps.push(PathStep {
            x,
            y,
            tracer_move,
            digest: self.final_config.digest(),
        });
        if self.steps.len() % CHECKPOINT_EVERY == 0 {
            self.checkpoints.push((self.steps.len(), self.final_config.clone()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn moves(&self) -> Vec<(SiteVector, SiteVector)> {
        self.steps.iter().map(|s| (s.x.clone(), s.y.clone())).collect()
    }

    /// Configuration after `k` steps, replayed from the nearest checkpoint.
    pub fn configuration_at(&self, k: usize, mode: PathMode) -> Result<Configuration, LatticeError> {
        assert!(k <= self.steps.len());
        let (start, mut η) = self
            .checkpoints
            .iter()
            .rev()
            .find(|(at, _)| *at <= k)
            .map(|(at, c)| (*at, c.clone()))
            .unwrap_or((0, self.initial.clone()));
        for s in &self.steps[start..k] {
            apply_step(&mut η, &s.x, &s.y, mode)?;
        }
        Ok(η)
    }

    /// The path run backwards from its final configuration. Exchanges are
    /// symmetric, so the reverse of an allowed path is allowed.
    pub fn reversed(&self, mode: PathMode) -> Result<AllowedPath, LatticeError> {
        let moves: Vec<(SiteVector, SiteVector)> = self
            .steps
            .iter()
            .rev()
            .map(|s| {
                if s.tracer_move {
                    (s.x.clone(), -&s.y)
                } else {
                    (s.y.clone(), s.x.clone())
                }
            })
            .collect();
        AllowedPath::from_moves(self.final_config.clone(), &moves, mode)
    }

    /// Sum of the tracer jumps, i.e. `Σ_k 1{x_k = 0} y_k`.
    pub fn tracer_displacement(&self) -> SiteVector {
        let mut acc = SiteVector::zero(self.initial.dim());
        for s in self.steps.iter().filter(|s| s.tracer_move) {
            acc = &acc + &s.y;
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `(x, y)` are not neighbours, or leave the domain.
    Geometry,
    /// `c_xy(η) = 0`.
    Constraint,
    /// The step's tracer flag disagrees with the mode and `x`.
    TracerFlag,
    /// The recorded digest does not match the replayed configuration.
    Digest,
    /// The step revisits an earlier configuration.
    Repeat,
    /// The replayed end point differs from `final_config`.
    FinalMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathViolation {
    /// Step index; `steps.len()` for an end-point mismatch.
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub valid: bool,
    pub first_violation: Option<PathViolation>,
}

impl Validation {
    fn fail(index: usize, kind: ViolationKind) -> Self {
        Validation {
            valid: false,
            first_violation: Some(PathViolation { index, kind }),
        }
    }
}

/// Replays the path and checks every step: geometry, `c_xy = 1`, the
/// successor rule of `mode`, the recorded digest, and that no configuration
/// (including the initial one) is visited twice.
pub fn validate_path(path: &AllowedPath, spec: &ConstraintSpec, mode: PathMode) -> Validation {
    let mut η = path.initial.clone();
    let mut seen: HashSet<u128> = HashSet::with_capacity(path.steps.len() + 1);
    seen.insert(η.digest());
    for (i, s) in path.steps.iter().enumerate() {
        let expected_flag = mode == PathMode::Tracer && s.x.is_zero();
        if s.tracer_move != expected_flag {
            return Validation::fail(i, ViolationKind::TracerFlag);
        }
        let dom = η.domain();
        if dom.check_dim(&s.x).is_err()
            || dom.check_dim(&s.y).is_err()
            || dom.resolve(&s.x).is_none()
            || dom.resolve(&s.y).is_none()
            || dom.direction(&s.x, &s.y).is_none()
        {
            return Validation::fail(i, ViolationKind::Geometry);
        }
        match constraint_ka(&η, &s.x, &s.y, spec) {
            Ok(true) => {}
            _ => return Validation::fail(i, ViolationKind::Constraint),
        }
        if apply_step(&mut η, &s.x, &s.y, mode).is_err() {
            return Validation::fail(i, ViolationKind::Geometry);
        }
        let dg = η.digest();
        if dg != s.digest {
            return Validation::fail(i, ViolationKind::Digest);
        }
        if !seen.insert(dg) {
            return Validation::fail(i, ViolationKind::Repeat);
        }
    }
    if η.bits() != path.final_config.bits() || η.tracer() != path.final_config.tracer() {
        return Validation::fail(path.steps.len(), ViolationKind::FinalMismatch);
    }
    Validation {
        valid: true,
        first_violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Domain;

    fn sv(c: [i64; 2]) -> SiteVector {
        SiteVector::from(c)
    }

    #[test]
    fn empty_path_is_valid() {
        let p = AllowedPath::empty(Configuration::torus(vec![4, 4]));
        let spec = ConstraintSpec::new(2, 2).unwrap();
        assert!(validate_path(&p, &spec, PathMode::Environment).valid);
    }

    #[test]
    fn single_swap_and_broken_constraint() {
        let spec = ConstraintSpec::new(2, 2).unwrap();
        let mut η = Configuration::torus(vec![5, 5]);
        η.set(&sv([1, 1]), true).unwrap();
        let p = AllowedPath::from_moves(η.clone(), &[(sv([1, 1]), sv([2, 1]))], PathMode::Environment).unwrap();
        assert!(validate_path(&p, &spec, PathMode::Environment).valid);

        // Surround the move so the jumping particle has a single empty
        // neighbour.
        let mut blocked = η.clone();
        for x in [[0, 1], [1, 0], [1, 2]] {
            blocked.set(&sv(x), true).unwrap();
        }
        let p = AllowedPath::from_moves(blocked, &[(sv([1, 1]), sv([2, 1]))], PathMode::Environment).unwrap();
        let v = validate_path(&p, &spec, PathMode::Environment);
        assert_eq!(
            v.first_violation,
            Some(PathViolation {
                index: 0,
                kind: ViolationKind::Constraint
            })
        );
    }

    #[test]
    fn revisiting_the_start_is_rejected() {
        let spec = ConstraintSpec::new(2, 2).unwrap();
        let mut η = Configuration::torus(vec![5, 5]);
        η.set(&sv([1, 1]), true).unwrap();
        let moves = [(sv([1, 1]), sv([2, 1])), (sv([2, 1]), sv([1, 1]))];
        let p = AllowedPath::from_moves(η, &moves, PathMode::Environment).unwrap();
        let v = validate_path(&p, &spec, PathMode::Environment);
        assert_eq!(v.first_violation.unwrap().kind, ViolationKind::Repeat);
    }

    #[test]
    fn tracer_mode_recentres() {
        let spec = ConstraintSpec::new(2, 2).unwrap();
        let mut η = Configuration::torus(vec![6, 6]);
        η.set(&sv([0, 0]), true).unwrap();
        η.set(&sv([3, 3]), true).unwrap();
        η.set_tracer(Some(sv([0, 0]))).unwrap();
        let p = AllowedPath::from_moves(η.clone(), &[(sv([0, 0]), sv([1, 0]))], PathMode::Tracer).unwrap();
        assert!(p.steps[0].tracer_move);
        assert!(validate_path(&p, &spec, PathMode::Tracer).valid);
        assert_eq!(p.final_config.tracer(), Some(&sv([0, 0])));
        assert!(p.final_config.get(&sv([2, 3])));
        assert_eq!(p.tracer_displacement(), sv([1, 0]));
        // The same steps read as plain exchanges carry the wrong flag.
        assert!(!validate_path(&p, &spec, PathMode::Environment).valid);

        let back = p.reversed(PathMode::Tracer).unwrap();
        assert!(validate_path(&back, &spec, PathMode::Tracer).valid);
        assert_eq!(back.final_config.bits(), η.bits());
    }

    #[test]
    fn checkpoints_replay() {
        let mut η = Configuration::empty(Domain::torus(vec![40, 3]));
        η.set(&sv([0, 0]), true).unwrap();
        let mut moves = Vec::new();
        for k in 0..39 {
            moves.push((sv([k, 0]), sv([k + 1, 0])));
        }
        let moves: Vec<_> = moves.into_iter().cycle().take(39 * 60).collect();
        let p = AllowedPath::from_moves(η, &moves, PathMode::Environment).unwrap();
        assert_eq!(p.checkpoints.len(), moves.len() / CHECKPOINT_EVERY);
        let k = CHECKPOINT_EVERY + 7;
        let direct = AllowedPath::from_moves(p.initial.clone(), &moves[..k], PathMode::Environment).unwrap();
        assert_eq!(p.configuration_at(k, PathMode::Environment).unwrap(), direct.final_config);
    }
}
