use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::RenormError;
use crate::lattice::{Region, SiteVector};

/// A block of the paving: the cell `c ∈ ℤ^d` (in units of `L+2`) and the
/// set `J` of axes along which it has length `L`. Along an axis in `J` the
/// block covers `[2, L+1]`, otherwise `{0, 1}`, both offset by `(L+2)c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Block {
    pub cell: Vec<i64>,
    /// Sorted axes of length `L`.
    pub dirs: Vec<usize>,
}

impl Block {
    pub fn new(cell: Vec<i64>, mut dirs: Vec<usize>) -> Self {
        dirs.sort_unstable();
        dirs.dedup();
        Block { cell, dirs }
    }

    pub fn dim(&self) -> usize {
        self.cell.len()
    }

    /// Number of axes of length `L`.
    pub fn l_dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_tube(&self) -> bool {
        self.l_dim() == 1
    }

    pub fn is_facilitating(&self) -> bool {
        self.l_dim() >= 2
    }

    pub fn has_dir(&self, a: usize) -> bool {
        self.dirs.contains(&a)
    }

    /// Inclusive coordinate range along axis `a`.
    pub fn range(&self, a: usize, l: usize) -> (i64, i64) {
        let p = l as i64 + 2;
        let base = p * self.cell[a];
        if self.has_dir(a) {
            (base + 2, base + l as i64 + 1)
        } else {
            (base, base + 1)
        }
    }

    pub fn region(&self, l: usize) -> Region {
        let d = self.dim();
        let origin = SiteVector::new((0..d).map(|a| self.range(a, l).0).collect());
        let sides = (0..d).map(|a| if self.has_dir(a) { l } else { 2 }).collect();
        Region::boxed(origin, sides)
    }

    pub fn contains(&self, x: &SiteVector, l: usize) -> bool {
        (0..self.dim()).all(|a| {
            let (lo, hi) = self.range(a, l);
            lo <= x[a] && x[a] <= hi
        })
    }

    pub fn translated(&self, cells: &[i64]) -> Block {
        Block {
            cell: self.cell.iter().zip(cells).map(|(c, o)| c + o).collect(),
            dirs: self.dirs.clone(),
        }
    }

    /// The `2^{d-n}` faces: fix each short axis to one of its two values.
    /// Each face is returned as the `d`-dimensional box it occupies.
    pub fn faces(&self, l: usize) -> Vec<Region> {
        let d = self.dim();
        let short: Vec<usize> = (0..d).filter(|a| !self.has_dir(*a)).collect();
        (0..1usize << short.len())
            .map(|mask| {
                let mut origin = Vec::with_capacity(d);
                let mut sides = Vec::with_capacity(d);
                for a in 0..d {
                    let (lo, _) = self.range(a, l);
                    if let Some(k) = short.iter().position(|&s| s == a) {
                        origin.push(lo + ((mask >> k) & 1) as i64);
                        sides.push(1);
                    } else {
                        origin.push(lo);
                        sides.push(l);
                    }
                }
                Region::boxed(SiteVector::new(origin), sides)
            })
            .collect()
    }

    /// Some site of `self` is at distance 1 from some site of `other`.
    pub fn adjacent(&self, other: &Block, l: usize) -> bool {
        let mut touching = 0;
        for a in 0..self.dim() {
            let (lo1, hi1) = self.range(a, l);
            let (lo2, hi2) = other.range(a, l);
            if hi1 + 1 == lo2 || hi2 + 1 == lo1 {
                touching += 1;
            } else if hi1 < lo2 || hi2 < lo1 {
                return false;
            }
        }
        touching == 1
    }
}

/// All blocks of the cells in a window, `2^d` per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPaving {
    pub l: usize,
    pub d: usize,
    /// Cells per axis.
    pub cells: Vec<usize>,
    pub blocks: Vec<Block>,
}

impl BlockPaving {
    pub fn period(&self) -> usize {
        self.l + 2
    }

    /// Block counts per L-dimension within one cell.
    pub fn counts_per_cell(&self) -> Vec<usize> {
        let n_cells: usize = self.cells.iter().product();
        let mut c = vec![0; self.d + 1];
        for b in &self.blocks {
            c[b.l_dim()] += 1;
        }
        c.iter().map(|v| v / n_cells.max(1)).collect()
    }

    pub fn tubes(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.is_tube())
    }

    pub fn facilitating(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.is_facilitating())
    }
}

fn subsets(d: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << d).map(move |m| (0..d).filter(|a| m >> a & 1 == 1).collect())
}

/// Paves the window `[0, w_0) × … × [0, w_{d-1})`; each `w_a` must be a
/// multiple of `L+2`.
pub fn build_paving(l: usize, d: usize, window: &[usize]) -> Result<BlockPaving, RenormError> {
    if l < 2 {
        return Err(RenormError::InvalidInput(format!("L must be >= 2, got {l}")));
    }
    if d == 0 || window.len() != d {
        return Err(RenormError::InvalidWindow(format!(
            "window has {} axes, expected d = {d}",
            window.len()
        )));
    }
    let p = l + 2;
    if let Some(w) = window.iter().find(|&&w| w == 0 || w % p != 0) {
        return Err(RenormError::InvalidWindow(format!(
            "side {w} is not a positive multiple of L+2 = {p}"
        )));
    }
    let cells: Vec<usize> = window.iter().map(|w| w / p).collect();
    let n_cells: usize = cells.iter().product();
    let mut blocks = Vec::with_capacity(n_cells << d);
    for k in 0..n_cells {
        let mut rem = k;
        let cell: Vec<i64> = cells
            .iter()
            .map(|&c| {
                let v = rem % c;
                rem /= c;
                v as i64
            })
            .collect();
        for dirs in subsets(d) {
            blocks.push(Block::new(cell.clone(), dirs));
        }
    }
    Ok(BlockPaving {
        l,
        d,
        cells,
        blocks,
    })
}

/// The block neighbourhood of the renormalised bond `(x, x + (L+2)e_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockNeighborhood {
    /// Anchor cell (`x / (L+2)`).
    pub anchor: Vec<i64>,
    pub axis: usize,
    /// Members sorted by L-dimension, then cell.
    pub blocks: Vec<Block>,
}

impl BlockNeighborhood {
    pub fn tubes(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.is_tube())
    }

    /// Facilitating blocks, highest L-dimension first.
    pub fn facilitating(&self) -> Vec<&Block> {
        let mut v: Vec<&Block> = self.blocks.iter().filter(|b| b.is_facilitating()).collect();
        v.sort_by(|a, b| b.l_dim().cmp(&a.l_dim()).then(a.cmp(b)));
        v
    }

    pub fn contains_site(&self, x: &SiteVector, l: usize) -> bool {
        self.blocks.iter().any(|b| b.contains(x, l))
    }

    pub fn sites(&self, l: usize) -> BTreeSet<SiteVector> {
        self.blocks.iter().flat_map(|b| b.region(l).sites()).collect()
    }
}

/// Recursive closure: the two corner blocks, the tubes adjacent to them,
/// then every block of L-dimension `n+1` adjacent to a member of
/// L-dimension `n`.
pub fn block_neighborhood(anchor: &[i64], axis: usize, l: usize) -> Result<BlockNeighborhood, RenormError> {
    let d = anchor.len();
    if axis >= d {
        return Err(RenormError::InvalidInput(format!("axis {axis} out of range for d = {d}")));
    }
    if l < 2 {
        return Err(RenormError::InvalidInput(format!("L must be >= 2, got {l}")));
    }
    let origin = Block::new(vec![0; d], vec![]);
    let mut far = vec![0; d];
    far[axis] = 1;
    let far = Block::new(far, vec![]);

    // Every member lies in a cell within distance 1 of the two corners.
    let mut candidates: Vec<Block> = Vec::new();
    let n_span = 4usize.pow(d as u32);
    for k in 0..n_span {
        let mut rem = k;
        let cell: Vec<i64> = (0..d)
            .map(|_| {
                let v = (rem % 4) as i64 - 1;
                rem /= 4;
                v
            })
            .collect();
        for dirs in subsets(d) {
            candidates.push(Block::new(cell.clone(), dirs));
        }
    }

    let mut members: BTreeSet<Block> = BTreeSet::new();
    members.insert(origin.clone());
    members.insert(far.clone());
    let mut layer: Vec<Block> = candidates
        .iter()
        .filter(|b| b.is_tube() && (b.adjacent(&origin, l) || b.adjacent(&far, l)))
        .cloned()
        .collect();
    for n in 1..d {
        members.extend(layer.iter().cloned());
        let next: Vec<Block> = candidates
            .iter()
            .filter(|b| b.l_dim() == n + 1 && layer.iter().any(|m| m.adjacent(b, l)))
            .cloned()
            .collect();
        layer = next;
    }
    members.extend(layer);

    let mut blocks: Vec<Block> = members.into_iter().map(|b| b.translated(anchor)).collect();
    blocks.sort_by(|a, b| a.l_dim().cmp(&b.l_dim()).then(a.cmp(b)));
    Ok(BlockNeighborhood {
        anchor: anchor.to_vec(),
        axis,
        blocks,
    })
}

/// Stretched-lattice vertex `x ∈ ℤ²` to its anchor cell `(3x_1, 2x_2)`.
pub fn hat_anchor(x: &[i64]) -> Vec<i64> {
    vec![3 * x[0], 2 * x[1]]
}

/// `𝒩̂_x` for `d = 2`: `𝒩_{x̂,1}` plus the two vertical tubes of the cells
/// `(2,0)` and `(2,-1)` and the two horizontal tubes of the cells `(-1,1)`
/// and `(0,1)`, relative to the anchor cell of `x̂`. These are the tubes just
/// right of and above `𝒩_{x̂,1}` that the bonds `(x̂+2,x̂+3)` and
/// `(x̂, x̂+e_2)` need beyond what `x̂` and its stretched neighbours supply.
pub fn hat_neighborhood(x: &[i64], l: usize) -> Result<BlockNeighborhood, RenormError> {
    if x.len() != 2 {
        return Err(RenormError::UnsupportedDim(x.len()));
    }
    let a = hat_anchor(x);
    let mut n = block_neighborhood(&a, 0, l)?;
    let extra = [
        Block::new(vec![2, 0], vec![1]),
        Block::new(vec![2, -1], vec![1]),
        Block::new(vec![-1, 1], vec![0]),
        Block::new(vec![0, 1], vec![0]),
    ];
    n.blocks.extend(extra.iter().map(|b| b.translated(&a)));
    n.blocks.sort_by(|p, q| p.l_dim().cmp(&q.l_dim()).then(p.cmp(q)));
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn d2_l4_cell_counts() {
        let p = build_paving(4, 2, &[6, 6]).unwrap();
        assert_eq!(p.counts_per_cell(), vec![1, 2, 1]);
        let vol: Vec<usize> = p.blocks.iter().map(|b| b.region(4).len()).collect();
        assert_eq!(vol.iter().sum::<usize>(), 36);
        assert!(vol.contains(&16) && vol.contains(&4));
    }

    #[test]
    fn volume_identity_and_disjointness() {
        for d in 1..=3 {
            for l in 2..=6 {
                let side = vec![l + 2; d];
                let p = build_paving(l, d, &side).unwrap();
                let expect: usize = (0..=d).map(|n| binom(d, n) * (1 << (d - n)) * l.pow(n as u32)).sum();
                assert_eq!(expect, (l + 2).pow(d as u32));
                let all: Vec<SiteVector> = p.blocks.iter().flat_map(|b| b.region(l).sites()).collect();
                let set: BTreeSet<_> = all.iter().cloned().collect();
                assert_eq!(all.len(), set.len());
                assert_eq!(set.len(), expect);
            }
        }
    }

    #[test]
    fn rejects_bad_window() {
        assert!(build_paving(4, 2, &[6, 7]).is_err());
        assert!(build_paving(1, 2, &[3, 3]).is_err());
    }

    #[test]
    fn d2_neighborhood_members() {
        let n = block_neighborhood(&[0, 0], 0, 4).unwrap();
        let tubes: BTreeSet<Block> = n.tubes().cloned().collect();
        let expect_tubes: BTreeSet<Block> = [
            (vec![-1, 0], 0),
            (vec![0, 0], 0),
            (vec![1, 0], 0),
            (vec![0, 0], 1),
            (vec![0, -1], 1),
            (vec![1, 0], 1),
            (vec![1, -1], 1),
        ]
        .into_iter()
        .map(|(c, a)| Block::new(c, vec![a]))
        .collect();
        assert_eq!(tubes, expect_tubes);
        let fac: BTreeSet<Vec<i64>> = n.facilitating().iter().map(|b| b.cell.clone()).collect();
        let expect_fac: BTreeSet<Vec<i64>> = [[-1, 0], [-1, -1], [0, 0], [0, -1], [1, 0], [1, -1]]
            .iter()
            .map(|c| c.to_vec())
            .collect();
        assert_eq!(fac, expect_fac);
        assert_eq!(n.blocks.len(), 15);
    }

    #[test]
    fn faces_partition_block() {
        let b = Block::new(vec![0, 0, 0], vec![0, 2]);
        let faces = b.faces(3);
        assert_eq!(faces.len(), 2);
        let total: usize = faces.iter().map(|f| f.len()).sum();
        assert_eq!(total, b.region(3).len());
    }
}
