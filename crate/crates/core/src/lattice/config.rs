use super::{BitField, Region, SiteVector};
use crate::digest::digest_bytes;
use crate::error::LatticeError;

/// How sites outside the stored field are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Torus,
    /// Every exterior site reads as the given occupancy.
    Fixed(bool),
}

/// Geometry of a finite field: a torus, or a box with a fixed exterior.
///
/// Linear site index: `c_0 + n_0 * (c_1 + n_1 * (c_2 + ...))` with `c` taken
/// relative to `origin`, so axis 0 varies fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    dims: Vec<usize>,
    origin: SiteVector,
    boundary: Boundary,
}

impl Domain {
    pub fn torus(dims: Vec<usize>) -> Domain {
        assert!(!dims.is_empty() && dims.iter().all(|&n| n >= 1));
        let d = dims.len();
        Domain {
            dims,
            origin: SiteVector::zero(d),
            boundary: Boundary::Torus,
        }
    }

    pub fn fixed(origin: SiteVector, sides: Vec<usize>, exterior: bool) -> Domain {
        assert_eq!(origin.dim(), sides.len());
        assert!(sides.iter().all(|&n| n >= 1));
        Domain {
            dims: sides,
            origin,
            boundary: Boundary::Fixed(exterior),
        }
    }

    pub fn from_region(region: &Region, exterior: bool) -> Result<Domain, LatticeError> {
        let (origin, sides) = region.as_box().ok_or(LatticeError::NotABox)?;
        Ok(Domain::fixed(origin.clone(), sides.to_vec(), exterior))
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &SiteVector {
        &self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn region(&self) -> Region {
        Region::boxed(self.origin.clone(), self.dims.clone())
    }

    pub fn check_dim(&self, x: &SiteVector) -> Result<(), LatticeError> {
        if x.dim() != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Index of a stored site, wrapping on a torus; `None` for exterior sites.
    pub fn resolve(&self, x: &SiteVector) -> Option<usize> {
        if x.dim() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for a in (0..self.dim()).rev() {
            let n = self.dims[a] as i64;
            let r = x[a] - self.origin[a];
            let c = match self.boundary {
                Boundary::Torus => r.rem_euclid(n),
                Boundary::Fixed(_) if (0..n).contains(&r) => r,
                Boundary::Fixed(_) => return None,
            };
            idx = idx * self.dims[a] + c as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> SiteVector {
        let mut c = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            c.push(self.origin[a] + (idx % self.dims[a]) as i64);
            idx /= self.dims[a];
        }
        SiteVector::new(c)
    }

    /// Canonical representative: wrapped into `[0, n)` on a torus.
    pub fn normalize(&self, x: &SiteVector) -> SiteVector {
        match self.boundary {
            Boundary::Torus => SiteVector::new(
                (0..self.dim())
                    .map(|a| x[a].rem_euclid(self.dims[a] as i64))
                    .collect(),
            ),
            Boundary::Fixed(_) => x.clone(),
        }
    }

    /// Sites in the box or on its exterior shell `∂Λ`.
    fn in_shell(&self, x: &SiteVector) -> bool {
        let mut outside = 0;
        for a in 0..self.dim() {
            let r = x[a] - self.origin[a];
            let n = self.dims[a] as i64;
            if r == -1 || r == n {
                outside += 1;
            } else if !(0..n).contains(&r) {
                return false;
            }
        }
        outside <= 1
    }

    /// Direction index `2a` (for `+e_a`) or `2a+1` (for `-e_a`) taking `x` to `y`.
    pub fn direction(&self, x: &SiteVector, y: &SiteVector) -> Option<usize> {
        if x.dim() != self.dim() || y.dim() != self.dim() {
            return None;
        }
        let mut found = None;
        for a in 0..self.dim() {
            let mut diff = y[a] - x[a];
            if self.boundary == Boundary::Torus {
                let n = self.dims[a] as i64;
                diff = diff.rem_euclid(n);
                // On a side-2 torus +e and -e coincide; report +e.
                if diff == n - 1 && n > 2 {
                    diff = -1;
                }
            }
            match diff {
                0 => {}
                1 | -1 if found.is_none() => found = Some(2 * a + usize::from(diff == -1)),
                _ => return None,
            }
        }
        found
    }

    pub fn step(&self, x: &SiteVector, dir: usize) -> SiteVector {
        let delta = if dir % 2 == 0 { 1 } else { -1 };
        self.normalize(&x.offset(dir / 2, delta))
    }
}

/// The 2d nearest neighbours of `x`, ordered `+e_0, -e_0, +e_1, ...`.
/// On a torus the results are wrapped; on a fixed box exterior sites are
/// returned as-is so that callers can query the exterior value.
pub fn neighbors(x: &SiteVector, domain: &Domain) -> Result<Vec<SiteVector>, LatticeError> {
    domain.check_dim(x)?;
    if let Boundary::Fixed(_) = domain.boundary {
        if !domain.in_shell(x) {
            return Err(LatticeError::OutsideDomain(x.clone()));
        }
    }
    Ok((0..2 * domain.dim()).map(|k| domain.step(x, k)).collect())
}

/// Occupancy field with optional tagged particle.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    domain: Domain,
    occ: BitField,
    tracer: Option<SiteVector>,
    displacement: Option<SiteVector>,
}

impl Configuration {
    pub fn empty(domain: Domain) -> Self {
        let n = domain.n_sites();
        Configuration {
            domain,
            occ: BitField::zeros(n),
            tracer: None,
            displacement: None,
        }
    }

    pub fn full(domain: Domain) -> Self {
        let n = domain.n_sites();
        Configuration {
            domain,
            occ: BitField::ones(n),
            tracer: None,
            displacement: None,
        }
    }

    pub fn from_bits(domain: Domain, occ: BitField) -> Result<Self, LatticeError> {
        if occ.len() != domain.n_sites() {
            return Err(LatticeError::InvalidSnapshot(format!(
                "field has {} bits, domain has {} sites",
                occ.len(),
                domain.n_sites()
            )));
        }
        Ok(Configuration {
            domain,
            occ,
            tracer: None,
            displacement: None,
        })
    }

    pub fn torus(dims: Vec<usize>) -> Self {
        Configuration::empty(Domain::torus(dims))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn bits(&self) -> &BitField {
        &self.occ
    }

    pub fn particle_count(&self) -> usize {
        self.occ.count_ones()
    }

    #[inline]
    pub fn get_index(&self, idx: usize) -> bool {
        self.occ.get(idx)
    }

    pub(crate) fn set_index(&mut self, idx: usize, v: bool) {
        self.occ.set(idx, v);
    }

    /// Occupancy at `x`, resolving exterior sites through the boundary rule.
    pub fn get(&self, x: &SiteVector) -> bool {
        match self.domain.resolve(x) {
            Some(i) => self.occ.get(i),
            None => match self.domain.boundary {
                Boundary::Fixed(v) => v,
                Boundary::Torus => unreachable!("torus sites always resolve"),
            },
        }
    }

    pub fn set(&mut self, x: &SiteVector, v: bool) -> Result<(), LatticeError> {
        self.domain.check_dim(x)?;
        let i = self
            .domain
            .resolve(x)
            .ok_or_else(|| LatticeError::OutsideDomain(x.clone()))?;
        if !v && self.tracer.as_ref() == Some(&self.domain.normalize(x)) {
            return Err(LatticeError::TracerCleared(x.clone()));
        }
        self.occ.set(i, v);
        Ok(())
    }

    pub fn tracer(&self) -> Option<&SiteVector> {
        self.tracer.as_ref()
    }

    pub fn displacement(&self) -> Option<&SiteVector> {
        self.displacement.as_ref()
    }

    /// Tags the particle at `x`; starts a zero displacement if none is set.
    pub fn set_tracer(&mut self, x: Option<SiteVector>) -> Result<(), LatticeError> {
        match x {
            None => {
                self.tracer = None;
                self.displacement = None;
            }
            Some(x) => {
                self.domain.check_dim(&x)?;
                let i = self
                    .domain
                    .resolve(&x)
                    .ok_or_else(|| LatticeError::OutsideDomain(x.clone()))?;
                if !self.occ.get(i) {
                    return Err(LatticeError::TracerOnVacancy(x));
                }
                self.tracer = Some(self.domain.normalize(&x));
                if self.displacement.is_none() {
                    self.displacement = Some(SiteVector::zero(self.dim()));
                }
            }
        }
        Ok(())
    }

    pub fn set_displacement(&mut self, v: Option<SiteVector>) {
        self.displacement = v;
    }

    pub fn tracer_index(&self) -> Option<usize> {
        self.tracer.as_ref().and_then(|t| self.domain.resolve(t))
    }

    /// 128-bit digest of occupancy plus tracer position (not displacement).
    pub fn digest(&self) -> u128 {
        let mut bytes = self.occ.to_bytes();
        match &self.tracer {
            Some(t) => {
                bytes.push(1);
                for c in t.coords() {
                    bytes.extend_from_slice(&c.to_le_bytes());
                }
            }
            None => bytes.push(0),
        }
        digest_bytes(&bytes)
    }

    /// Exchange of the occupation variables at neighbouring sites `x`, `y`.
    pub fn swap(&self, x: &SiteVector, y: &SiteVector) -> Result<Configuration, LatticeError> {
        let mut out = self.clone();
        out.swap_in_place(x, y)?;
        Ok(out)
    }

    pub fn swap_in_place(&mut self, x: &SiteVector, y: &SiteVector) -> Result<(), LatticeError> {
        self.domain.check_dim(x)?;
        self.domain.check_dim(y)?;
        let dir = self
            .domain
            .direction(x, y)
            .ok_or_else(|| LatticeError::NotAdjacent(x.clone(), y.clone()))?;
        let ix = self
            .domain
            .resolve(x)
            .ok_or_else(|| LatticeError::OutsideDomain(x.clone()))?;
        let iy = self
            .domain
            .resolve(y)
            .ok_or_else(|| LatticeError::OutsideDomain(y.clone()))?;
        let (vx, vy) = (self.occ.get(ix), self.occ.get(iy));
        self.occ.set(ix, vy);
        self.occ.set(iy, vx);
        if let Some(t) = self.tracer.clone() {
            let (nx, ny) = (self.domain.normalize(x), self.domain.normalize(y));
            let (to, step) = if t == nx {
                (Some(ny), Some(dir))
            } else if t == ny {
                (Some(nx), Some(dir ^ 1))
            } else {
                (None, None)
            };
            if let (Some(to), Some(step)) = (to, step) {
                self.tracer = Some(to);
                let delta = if step % 2 == 0 { 1 } else { -1 };
                let disp = self
                    .displacement
                    .take()
                    .unwrap_or_else(|| SiteVector::zero(self.dim()));
                self.displacement = Some(disp.offset(step / 2, delta));
            }
        }
        Ok(())
    }

    /// `(τ_x η)(y) = η(x + y)`; torus only.
    pub fn translate(&self, x: &SiteVector) -> Result<Configuration, LatticeError> {
        self.domain.check_dim(x)?;
        if self.domain.boundary != Boundary::Torus {
            return Err(LatticeError::NotTorus);
        }
        let n = self.domain.n_sites();
        let mut occ = BitField::zeros(n);
        for i in 0..n {
            let y = self.domain.site(i);
            let src = self.domain.resolve(&(&y + x)).expect("torus");
            occ.set(i, self.occ.get(src));
        }
        Ok(Configuration {
            domain: self.domain.clone(),
            occ,
            tracer: self.tracer.as_ref().map(|t| self.domain.normalize(&(t - x))),
            displacement: self.displacement.clone(),
        })
    }

    /// Exchanges the contents of the boxes `x + {0,1}^d` and `y + {0,1}^d`.
    pub fn box_swap(&self, x: &SiteVector, y: &SiteVector) -> Result<Configuration, LatticeError> {
        self.domain.check_dim(x)?;
        self.domain.check_dim(y)?;
        let d = self.dim();
        let offsets = Region::boxed(SiteVector::zero(d), vec![2; d]).sites();
        let resolve = |base: &SiteVector| -> Result<Vec<usize>, LatticeError> {
            offsets
                .iter()
                .map(|o| {
                    let s = base + o;
                    self.domain
                        .resolve(&s)
                        .ok_or(LatticeError::OutsideDomain(s))
                })
                .collect()
        };
        let bx = resolve(x)?;
        let by = resolve(y)?;
        if bx.iter().any(|i| by.contains(i)) {
            return Err(LatticeError::Overlap);
        }
        let mut out = self.clone();
        for (&i, &j) in bx.iter().zip(&by) {
            out.occ.set(i, self.occ.get(j));
            out.occ.set(j, self.occ.get(i));
        }
        if let Some(ti) = self.tracer_index() {
            if let Some(k) = bx.iter().position(|&i| i == ti) {
                out.tracer = Some(self.domain.site(by[k]));
            } else if let Some(k) = by.iter().position(|&i| i == ti) {
                out.tracer = Some(self.domain.site(bx[k]));
            }
        }
        Ok(out)
    }

    /// Environment seen from the tracer: `τ_X η` where `X` is the tracer site.
    pub fn recentered(&self) -> Result<Configuration, LatticeError> {
        let t = self.tracer.clone().ok_or(LatticeError::NoTracer)?;
        self.translate(&t)
    }

    /// Copies the occupancies of `region` into a fixed-exterior box.
    pub fn restrict(&self, region: &Region, exterior: bool) -> Result<Configuration, LatticeError> {
        let domain = Domain::from_region(region, exterior)?;
        let mut out = Configuration::empty(domain);
        for i in 0..out.domain.n_sites() {
            let s = out.domain.site(i);
            out.occ.set(i, self.get(&s));
        }
        if let Some(t) = &self.tracer {
            if region.contains(t) {
                out.tracer = Some(t.clone());
                out.displacement = self.displacement.clone();
            }
        }
        Ok(out)
    }
}

pub fn swap(η: &Configuration, x: &SiteVector, y: &SiteVector) -> Result<Configuration, LatticeError> {
    η.swap(x, y)
}

pub fn translate(η: &Configuration, x: &SiteVector) -> Result<Configuration, LatticeError> {
    η.translate(x)
}

pub fn box_swap(η: &Configuration, x: &SiteVector, y: &SiteVector) -> Result<Configuration, LatticeError> {
    η.box_swap(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn sv<const N: usize>(c: [i64; N]) -> SiteVector {
        SiteVector::from(c)
    }

    #[test]
    fn torus_neighbors_wrap() {
        let dom = Domain::torus(vec![4, 4]);
        let got: BTreeSet<_> = neighbors(&sv([0, 0]), &dom).unwrap().into_iter().collect();
        let want: BTreeSet<_> = [sv([1, 0]), sv([3, 0]), sv([0, 1]), sv([0, 3])].into();
        assert_eq!(got, want);
        assert!(matches!(
            neighbors(&sv([0, 0, 0]), &dom),
            Err(LatticeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fixed_box_neighbors_reach_exterior() {
        let dom = Domain::fixed(sv([0, 0]), vec![4, 4], true);
        let n = neighbors(&sv([0, 0]), &dom).unwrap();
        assert!(n.contains(&sv([-1, 0])));
        assert!(n.contains(&sv([0, -1])));
        let c = Configuration::empty(dom.clone());
        assert!(c.get(&sv([-1, 0])));
        assert_eq!(neighbors(&sv([1, 1, 1]), &Domain::fixed(SiteVector::zero(3), vec![3; 3], false)).unwrap().len(), 6);
        assert!(neighbors(&sv([-3, 0]), &dom).is_err());
    }

    #[test]
    fn swap_moves_tracer_and_displacement() {
        let mut c = Configuration::torus(vec![3, 3]);
        c.set(&sv([0, 0]), true).unwrap();
        c.set_tracer(Some(sv([0, 0]))).unwrap();
        let c2 = c.swap(&sv([0, 0]), &sv([2, 0])).unwrap();
        assert_eq!(c2.tracer(), Some(&sv([2, 0])));
        assert_eq!(c2.displacement(), Some(&sv([-1, 0])));
        assert!(c2.get(&sv([2, 0])) && !c2.get(&sv([0, 0])));
        assert!(matches!(
            c.swap(&sv([0, 0]), &sv([1, 1])),
            Err(LatticeError::NotAdjacent(..))
        ));
    }

    #[test]
    fn translate_single_particle() {
        let mut c = Configuration::torus(vec![5, 4]);
        c.set(&sv([1, 2]), true).unwrap();
        let t = c.translate(&sv([3, 3])).unwrap();
        assert!(t.get(&sv([-2, -1])));
        assert_eq!(t.particle_count(), 1);
        assert_eq!(t.translate(&sv([-3, -3])).unwrap(), c);
        let b = Configuration::empty(Domain::fixed(sv([0, 0]), vec![3, 3], true));
        assert_eq!(b.translate(&sv([1, 0])), Err(LatticeError::NotTorus));
    }

    #[test]
    fn box_swap_examples() {
        let mut c = Configuration::torus(vec![8, 4]);
        c.set(&sv([0, 0]), true).unwrap();
        c.set_tracer(Some(sv([0, 0]))).unwrap();
        for o in [[4, 0], [5, 0], [4, 1], [5, 1]] {
            c.set(&sv(o), true).unwrap();
        }
        let s = c.box_swap(&sv([0, 0]), &sv([4, 0])).unwrap();
        assert_eq!(s.tracer(), Some(&sv([4, 0])));
        assert!(s.get(&sv([1, 1])) && !s.get(&sv([5, 1])));
        assert_eq!(s.box_swap(&sv([0, 0]), &sv([4, 0])).unwrap(), c);
        assert_eq!(c.box_swap(&sv([0, 0]), &sv([1, 0])), Err(LatticeError::Overlap));
    }
}
