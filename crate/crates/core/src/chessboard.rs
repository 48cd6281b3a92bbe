//! Partition/allocations: long cuts of `[0, 1]` into `2r - 1` tiles, each tile placed
//! in one of `r` boxes with at most one non-degenerate tile per box.
//!
//! Up to moving degenerate tiles around, these are points of the chessboard complex
//! `Δ_{r,2r-1}`: a rook on (box, tile) for every non-degenerate tile, weighted by its
//! length. Renumbering boxes is an action of the symmetric group `S_r`.
//!
//! Classical preferences over the tiles of a cut with `r` tiles are lifted to
//! box preferences by collapsing the long cut to a classical one: weight on a
//! non-degenerate tile moves to the box holding it, weight on degenerate tiles is
//! spread evenly over the empty boxes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cake::{Cut, SimplexPoint, Tile, STRUCTURAL_TOL};
use crate::error::{Error, Result};
use crate::kkm::{fuzzy_column, WeightMatrix};
use crate::search::{BalanceMap, TieShape};
use crate::valuation::ValuationProfile;

/// Largest `r` accepted by [`enumerate_maximal_faces`].
pub const MAX_FACE_R: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionAllocation {
    pub cut: Cut,
    /// Box (1-based) of each of the `2r - 1` tiles.
    pub alloc: Vec<usize>,
}

impl PartitionAllocation {
    /// Checks the shape (`2r - 2` points, `2r - 1` boxes in `[r]`), not admissibility.
    pub fn new(cut: Cut, alloc: Vec<usize>) -> Result<Self> {
        if !cut.len().is_multiple_of(2) || cut.is_empty() {
            return Err(Error::Invalid(format!(
                "a long cut needs 2r - 2 >= 2 points, got {}",
                cut.len()
            )));
        }
        let r = cut.len() / 2 + 1;
        if alloc.len() != 2 * r - 1 {
            return Err(Error::Invalid(format!(
                "expected {} box indices, got {}",
                2 * r - 1,
                alloc.len()
            )));
        }
        if let Some(&b) = alloc.iter().find(|&&b| b == 0 || b > r) {
            return Err(Error::OutOfRange { index: b, max: r });
        }
        Ok(PartitionAllocation { cut, alloc })
    }

    /// Embeds a classical cut into `r` tiles: classical tile `k` becomes long tile
    /// `2k - 1` in box `k`, separated by degenerate tiles.
    pub fn from_classical(cut: &Cut) -> Self {
        let mut points = Vec::with_capacity(2 * cut.len());
        for &y in cut.points() {
            points.push(y);
            points.push(y);
        }
        let r = cut.len() + 1;
        let alloc = (1..2 * r).map(|t| if t % 2 == 1 { t / 2 + 1 } else { 1 }).collect();
        canonicalize(&PartitionAllocation {
            cut: Cut::new(points).expect("doubled points stay sorted"),
            alloc,
        })
    }

    pub fn r(&self) -> usize {
        self.cut.len() / 2 + 1
    }

    pub fn tiles(&self) -> Vec<Tile> {
        self.cut.tiles()
    }

    /// Tiles (1-based) placed in `box_index`.
    pub fn tiles_in_box(&self, box_index: usize) -> Vec<usize> {
        (1..=self.alloc.len())
            .filter(|&t| self.alloc[t - 1] == box_index)
            .collect()
    }

    /// Boxes holding no non-degenerate tile.
    pub fn empty_boxes(&self) -> Vec<usize> {
        let tiles = self.tiles();
        let full: BTreeSet<usize> = tiles
            .iter()
            .zip(&self.alloc)
            .filter(|(t, _)| !t.is_degenerate())
            .map(|(_, &b)| b)
            .collect();
        (1..=self.r()).filter(|b| !full.contains(b)).collect()
    }
}

/// No box receives two non-degenerate tiles.
pub fn is_admissible(pa: &PartitionAllocation) -> bool {
    let mut used = vec![false; pa.r() + 1];
    for (t, &b) in pa.tiles().iter().zip(&pa.alloc) {
        if t.is_degenerate() {
            continue;
        }
        if used[b] {
            return false;
        }
        used[b] = true;
    }
    true
}

fn require_admissible(pa: &PartitionAllocation) -> Result<()> {
    if is_admissible(pa) {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "allocation {:?} puts two non-degenerate tiles in one box",
            pa.alloc
        )))
    }
}

/// Same cut, and the allocations differ only on degenerate tiles.
pub fn equivalent(a: &PartitionAllocation, b: &PartitionAllocation) -> Result<bool> {
    if !a.cut.approx_eq(&b.cut) || a.alloc.len() != b.alloc.len() {
        return Err(Error::Invalid(
            "equivalence is only defined for partition/allocations of one cut".into(),
        ));
    }
    Ok(a.tiles()
        .iter()
        .zip(a.alloc.iter().zip(&b.alloc))
        .all(|(t, (x, y))| t.is_degenerate() || x == y))
}

/// Canonical member of the equivalence class: degenerate tiles fill the empty boxes in
/// increasing order, left to right; surplus degenerate tiles go to box 1.
pub fn canonicalize(pa: &PartitionAllocation) -> PartitionAllocation {
    let mut empty = pa.empty_boxes().into_iter();
    let alloc = pa
        .tiles()
        .iter()
        .zip(&pa.alloc)
        .map(|(t, &b)| {
            if t.is_degenerate() {
                empty.next().unwrap_or(1)
            } else {
                b
            }
        })
        .collect();
    PartitionAllocation {
        cut: pa.cut.clone(),
        alloc,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rook {
    #[serde(rename = "box")]
    pub box_index: usize,
    pub tile: usize,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChessboardPoint {
    pub rooks: Vec<Rook>,
}

impl ChessboardPoint {
    /// Validates non-attacking rooks on `[r] × [2r-1]` with positive weights summing to one.
    pub fn new(r: usize, mut rooks: Vec<Rook>) -> Result<Self> {
        rooks.sort_by_key(|k| k.tile);
        let boxes: BTreeSet<usize> = rooks.iter().map(|k| k.box_index).collect();
        let tiles: BTreeSet<usize> = rooks.iter().map(|k| k.tile).collect();
        if boxes.len() != rooks.len() || tiles.len() != rooks.len() {
            return Err(Error::Invalid("rooks attack each other".into()));
        }
        if rooks.is_empty()
            || rooks
                .iter()
                .any(|k| k.box_index == 0 || k.box_index > r || k.tile == 0 || k.tile >= 2 * r)
        {
            return Err(Error::Invalid(format!(
                "rooks must lie on the [{r}] x [{}] board",
                2 * r - 1
            )));
        }
        if rooks.iter().any(|k| !(k.w > 0.0)) {
            return Err(Error::Invalid("rook weights must be positive".into()));
        }
        let total: f64 = rooks.iter().map(|k| k.w).sum();
        if (total - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::Invalid(format!("rook weights sum to {total}")));
        }
        Ok(ChessboardPoint { rooks })
    }
}

pub fn to_chessboard_point(pa: &PartitionAllocation) -> Result<ChessboardPoint> {
    require_admissible(pa)?;
    let rooks = pa
        .tiles()
        .iter()
        .zip(&pa.alloc)
        .enumerate()
        .filter(|(_, (t, _))| !t.is_degenerate())
        .map(|(k, (t, &b))| Rook {
            box_index: b,
            tile: k + 1,
            w: t.length(),
        })
        .collect();
    Ok(ChessboardPoint { rooks })
}

/// Canonical partition/allocation of a chessboard point on `[r] × [2r-1]`.
pub fn from_chessboard_point(cp: &ChessboardPoint, r: usize) -> Result<PartitionAllocation> {
    let cp = ChessboardPoint::new(r, cp.rooks.clone())?;
    let mut lengths = vec![0.0; 2 * r - 1];
    let mut alloc = vec![1; 2 * r - 1];
    for k in &cp.rooks {
        lengths[k.tile - 1] = k.w;
        alloc[k.tile - 1] = k.box_index;
    }
    let cut = Cut::from_lengths(&lengths)?;
    Ok(canonicalize(&PartitionAllocation::new(cut, alloc)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation {
    sigma: Vec<usize>,
}

impl Permutation {
    /// `sigma[i - 1]` is the image of `i`.
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; sigma.len() + 1];
        for &s in &sigma {
            if s == 0 || s > sigma.len() || seen[s] {
                return Err(Error::Invalid(format!("{sigma:?} is not a permutation")));
            }
            seen[s] = true;
        }
        Ok(Permutation { sigma })
    }

    pub fn identity(r: usize) -> Self {
        Permutation {
            sigma: (1..=r).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.sigma[i - 1]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            sigma: other.sigma.iter().map(|&i| self.apply(i)).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.sigma.len()];
        for (i, &s) in self.sigma.iter().enumerate() {
            inv[s - 1] = i + 1;
        }
        Permutation { sigma: inv }
    }

    pub fn images(&self) -> &[usize] {
        &self.sigma
    }
}

/// Renumbers the boxes: `(x, α) ↦ (x, σ ∘ α)`.
pub fn act(sigma: &Permutation, pa: &PartitionAllocation) -> Result<PartitionAllocation> {
    if sigma.len() != pa.r() {
        return Err(Error::Invalid(format!(
            "permutation of [{}] acting on {} boxes",
            sigma.len(),
            pa.r()
        )));
    }
    Ok(PartitionAllocation {
        cut: pa.cut.clone(),
        alloc: pa.alloc.iter().map(|&b| sigma.apply(b)).collect(),
    })
}

/// A maximal face of `Δ_{r,2r-1}`: `r` rooks `(box, tile)` sorted by tile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    pub rooks: Vec<(usize, usize)>,
}

impl Face {
    pub fn r(&self) -> usize {
        self.rooks.len()
    }

    pub fn is_non_attacking(&self) -> bool {
        let boxes: BTreeSet<usize> = self.rooks.iter().map(|r| r.0).collect();
        let tiles: BTreeSet<usize> = self.rooks.iter().map(|r| r.1).collect();
        boxes.len() == self.rooks.len() && tiles.len() == self.rooks.len()
    }

    /// Partition/allocation with rook `k` weighted by `coords[k]`.
    pub fn point(&self, coords: &[f64]) -> PartitionAllocation {
        let r = self.r();
        let mut lengths = vec![0.0; 2 * r - 1];
        let mut alloc = vec![1; 2 * r - 1];
        for (&(b, t), &w) in self.rooks.iter().zip(coords) {
            lengths[t - 1] = w;
            alloc[t - 1] = b;
        }
        let cut = Cut::from_lengths(&lengths).expect("face coordinates are lengths");
        canonicalize(&PartitionAllocation { cut, alloc })
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - (k - 1 - i) {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Tile subsets of size `r` in lexicographic order, each with the identity box order:
/// one face per `S_r`-orbit.
pub fn orbit_representatives(r: usize) -> Result<Vec<Face>> {
    guard_r(r)?;
    let mut tiles: Vec<usize> = (1..=r).collect();
    let mut out = Vec::new();
    loop {
        out.push(Face {
            rooks: tiles.iter().enumerate().map(|(k, &t)| (k + 1, t)).collect(),
        });
        if !next_combination(&mut tiles, 2 * r - 1) {
            return Ok(out);
        }
    }
}

/// All `C(2r-1, r) · r!` maximal faces, orbit by orbit.
pub fn enumerate_maximal_faces(r: usize) -> Result<Vec<Face>> {
    let mut out = Vec::new();
    for rep in orbit_representatives(r)? {
        let mut boxes: Vec<usize> = (1..=r).collect();
        loop {
            out.push(Face {
                rooks: rep.rooks.iter().zip(&boxes).map(|(&(_, t), &b)| (b, t)).collect(),
            });
            if !next_permutation(&mut boxes) {
                break;
            }
        }
    }
    Ok(out)
}

fn guard_r(r: usize) -> Result<()> {
    if r < 2 {
        return Err(Error::Invalid(format!("need r >= 2 boxes, got {r}")));
    }
    if r > MAX_FACE_R {
        return Err(Error::Capacity(format!(
            "face enumeration is limited to r <= {MAX_FACE_R}, got {r}"
        )));
    }
    Ok(())
}

/// Classical cut recovered from a long cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    /// `r - 1` points.
    pub cut: Cut,
    /// Box holding each classical tile; `None` for degenerate classical tiles.
    pub origin: Vec<Option<usize>>,
}

/// Which superfluous points of the long cut are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum CollapseRule {
    /// Keep the distinct boundaries, pad by repeating the last one (or with 1 when
    /// there is a single non-degenerate tile).
    #[default]
    Canonical,
    /// Drop superfluous points in this priority order (1-based long-cut point indices).
    Order(Vec<usize>),
}

pub fn collapse(pa: &PartitionAllocation) -> Result<Collapse> {
    collapse_with(pa, &CollapseRule::Canonical)
}

pub fn collapse_with(pa: &PartitionAllocation, rule: &CollapseRule) -> Result<Collapse> {
    require_admissible(pa)?;
    let r = pa.r();
    let long_tiles = pa.tiles();
    let solid: Vec<(Tile, usize)> = long_tiles
        .iter()
        .zip(&pa.alloc)
        .filter(|(t, _)| !t.is_degenerate())
        .map(|(t, &b)| (*t, b))
        .collect();
    let points = match rule {
        CollapseRule::Canonical => {
            let mut pts: Vec<f64> = solid[..solid.len() - 1].iter().map(|(t, _)| t.hi).collect();
            let pad = pts.last().copied().unwrap_or(1.0);
            pts.resize(r - 1, pad);
            pts
        }
        CollapseRule::Order(order) => drop_in_order(pa.cut.points(), order, r - 1)?,
    };
    let cut = Cut::new(points)?;
    let mut solid_iter = solid.iter();
    let origin = cut
        .tiles()
        .iter()
        .map(|t| {
            if t.is_degenerate() {
                None
            } else {
                solid_iter.next().map(|&(_, b)| b)
            }
        })
        .collect();
    Ok(Collapse { cut, origin })
}

fn drop_in_order(points: &[f64], order: &[usize], keep: usize) -> Result<Vec<f64>> {
    let mut alive = vec![true; points.len()];
    let superfluous = |alive: &[bool], k: usize| {
        let x = points[k];
        x == 0.0 || x == 1.0 || (0..points.len()).any(|i| i != k && alive[i] && points[i] == x)
    };
    let mut remaining = points.len();
    for &idx in order {
        if remaining == keep {
            break;
        }
        if idx == 0 || idx > points.len() {
            return Err(Error::OutOfRange {
                index: idx,
                max: points.len(),
            });
        }
        if alive[idx - 1] && superfluous(&alive, idx - 1) {
            alive[idx - 1] = false;
            remaining -= 1;
        }
    }
    // Anything the order did not reach goes right to left.
    for k in (0..points.len()).rev() {
        if remaining == keep {
            break;
        }
        if alive[k] && superfluous(&alive, k) {
            alive[k] = false;
            remaining -= 1;
        }
    }
    if remaining != keep {
        return Err(Error::Internal("long cut has too few superfluous points".into()));
    }
    Ok(points.iter().zip(&alive).filter(|(_, &a)| a).map(|(&x, _)| x).collect())
}

/// Classical valuation preferences lifted to box preferences on partition/allocations.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedPreferences {
    profile: ValuationProfile,
    r: usize,
    rule: CollapseRule,
}

impl LiftedPreferences {
    pub fn new(profile: &ValuationProfile, r: usize) -> Self {
        Self::with_rule(profile, r, CollapseRule::Canonical)
    }

    pub fn with_rule(profile: &ValuationProfile, r: usize, rule: CollapseRule) -> Self {
        LiftedPreferences {
            profile: profile.clone(),
            r,
            rule,
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn profile(&self) -> &ValuationProfile {
        &self.profile
    }

    /// Box weights (`r` rows, one column per player).
    pub fn weights_at(&self, pa: &PartitionAllocation, fuzz: f64) -> Result<WeightMatrix> {
        if pa.r() != self.r {
            return Err(Error::Invalid(format!("expected {} boxes, got {}", self.r, pa.r())));
        }
        let c = collapse_with(pa, &self.rule)?;
        let tiles = c.cut.tiles();
        let empty = pa.empty_boxes();
        let columns: Vec<Vec<f64>> = self
            .profile
            .players
            .iter()
            .map(|d| {
                let classical = fuzzy_column(d, &tiles, fuzz);
                let mut boxes = vec![0.0; self.r];
                let mut degenerate = 0.0;
                for (w, origin) in classical.iter().zip(&c.origin) {
                    match origin {
                        Some(b) => boxes[b - 1] += w,
                        None => degenerate += w,
                    }
                }
                if degenerate > 0.0 {
                    let share = degenerate / empty.len() as f64;
                    for &b in &empty {
                        boxes[b - 1] += share;
                    }
                }
                boxes
            })
            .collect();
        Ok(WeightMatrix::from_columns(&columns))
    }
}

/// The lifted balance map restricted to one maximal face.
pub struct FaceMap<'a> {
    pub lifted: &'a LiftedPreferences,
    pub face: &'a Face,
    pub shape: TieShape,
}

impl BalanceMap for FaceMap<'_> {
    fn pieces(&self) -> usize {
        self.lifted.r
    }

    fn players(&self) -> usize {
        self.lifted.profile.player_count()
    }

    fn weights_at(&self, coords: &[f64], fuzz: f64) -> Vec<Vec<f64>> {
        let pa = self.face.point(coords);
        self.lifted
            .weights_at(&pa, fuzz)
            .expect("face points are admissible")
            .rows()
            .to_vec()
    }

    fn piece_values(&self, coords: &[f64]) -> Option<Vec<Vec<f64>>> {
        let pa = self.face.point(coords);
        let tiles = pa.tiles();
        let values = self
            .lifted
            .profile
            .players
            .iter()
            .map(|d| {
                let mut boxes = vec![0.0; self.lifted.r];
                for (t, &b) in tiles.iter().zip(&pa.alloc) {
                    boxes[b - 1] += d.value(t) / d.mass();
                }
                boxes
            })
            .collect();
        Some(values)
    }

    fn tie_shape(&self) -> Option<TieShape> {
        Some(self.shape)
    }
}

impl Face {
    /// Face coordinates of a partition/allocation lying on this face.
    pub fn coords_of(&self, pa: &PartitionAllocation) -> Result<SimplexPoint> {
        let tiles = pa.tiles();
        SimplexPoint::new(self.rooks.iter().map(|&(_, t)| tiles[t - 1].length()).collect())
    }
}
