//! Cuts of the unit interval and the tiles they produce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for structural invariants (sums, ranges).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Nondecreasing cut points in `[0, 1]`.
///
/// A classical cut into `r` tiles has `r - 1` points; a long cut used by the
/// chessboard configuration space has `2r - 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cut {
    points: Vec<f64>,
}

impl Cut {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        for (k, &x) in points.iter().enumerate() {
            if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidCut(format!("point {} = {x} outside [0, 1]", k + 1)));
            }
        }
        if let Some(k) = points.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::InvalidCut(format!(
                "points {} and {} are decreasing ({} > {})",
                k + 1,
                k + 2,
                points[k],
                points[k + 1]
            )));
        }
        Ok(Cut { points })
    }

    /// Cut whose tiles have the given lengths (cumulative sums, clamped to `[0, 1]`).
    pub fn from_lengths(lengths: &[f64]) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidCut("no tiles".into()));
        }
        let mut acc = 0.0;
        let mut points = Vec::with_capacity(lengths.len() - 1);
        for &len in &lengths[..lengths.len() - 1] {
            acc += len;
            points.push(acc.clamp(0.0, 1.0));
        }
        // Rounding can leave the running sum a hair out of order after clamping.
        for k in 1..points.len() {
            if points[k] < points[k - 1] {
                points[k] = points[k - 1];
            }
        }
        // Points followed only by zero lengths sit exactly at 1, so no rounding sliver
        // turns a zero-length tile at the right end into a real one.
        for k in (0..points.len()).rev() {
            if lengths[k + 1..].iter().any(|&l| l != 0.0) {
                break;
            }
            points[k] = 1.0;
        }
        Cut::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tile_count(&self) -> usize {
        self.points.len() + 1
    }

    pub fn tiles(&self) -> Vec<Tile> {
        let mut tiles = Vec::with_capacity(self.tile_count());
        let mut lo = 0.0;
        for &x in &self.points {
            tiles.push(Tile { lo, hi: x });
            lo = x;
        }
        tiles.push(Tile { lo, hi: 1.0 });
        tiles
    }

    /// The `index`-th tile (1-based).
    pub fn tile(&self, index: usize) -> Result<Tile> {
        if index == 0 || index > self.tile_count() {
            return Err(Error::OutOfRange {
                index,
                max: self.tile_count(),
            });
        }
        let lo = if index == 1 { 0.0 } else { self.points[index - 2] };
        let hi = if index == self.tile_count() {
            1.0
        } else {
            self.points[index - 1]
        };
        Ok(Tile { lo, hi })
    }

    /// Whether both cuts are the same up to [`STRUCTURAL_TOL`].
    pub fn approx_eq(&self, other: &Cut) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| (a - b).abs() <= STRUCTURAL_TOL)
    }
}

/// Validates raw points and returns the tiles `[x_{k-1}, x_k]` with `x_0 = 0`, `x_{m+1} = 1`.
pub fn tiles_from_cut(points: &[f64]) -> Result<Vec<Tile>> {
    Ok(Cut::new(points.to_vec())?.tiles())
}

/// A closed interval `[lo, hi]` of the cake.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub lo: f64,
    pub hi: f64,
}

impl Tile {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }
}

/// Point of the standard simplex `Δ^n`: `n + 1` nonnegative coordinates summing to one.
///
/// For cuts, the coordinates are the tile lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Invalid("simplex point needs at least one coordinate".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Invalid(format!("negative or non-finite coordinate {c}")));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::Invalid(format!("coordinates sum to {sum}, not 1")));
        }
        Ok(SimplexPoint { coords })
    }

    pub fn barycenter(dim: usize) -> Self {
        let p = dim + 1;
        SimplexPoint {
            coords: vec![1.0 / p as f64; p],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn to_cut(&self) -> Cut {
        Cut::from_lengths(&self.coords).expect("simplex coordinates are valid lengths")
    }

    pub fn from_cut(cut: &Cut) -> Self {
        SimplexPoint {
            coords: cut.tiles().iter().map(Tile::length).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_split() {
        let tiles = tiles_from_cut(&[0.5]).unwrap();
        assert_eq!(tiles, vec![Tile { lo: 0.0, hi: 0.5 }, Tile { lo: 0.5, hi: 1.0 }]);
    }

    #[test]
    fn repeated_point_gives_degenerate_tile() {
        let tiles = tiles_from_cut(&[0.3, 0.3]).unwrap();
        assert_eq!(tiles.len(), 3);
        assert_eq!(tiles[1], Tile { lo: 0.3, hi: 0.3 });
        assert!(tiles[1].is_degenerate());
        assert!(!tiles[0].is_degenerate() && !tiles[2].is_degenerate());
    }

    #[test]
    fn empty_cut_is_whole_cake() {
        assert_eq!(tiles_from_cut(&[]).unwrap(), vec![Tile { lo: 0.0, hi: 1.0 }]);
    }

    #[test]
    fn malformed_cuts_rejected() {
        assert!(matches!(tiles_from_cut(&[0.6, 0.4]), Err(Error::InvalidCut(_))));
        assert!(matches!(tiles_from_cut(&[1.2]), Err(Error::InvalidCut(_))));
        assert!(matches!(tiles_from_cut(&[-0.1]), Err(Error::InvalidCut(_))));
        assert!(matches!(tiles_from_cut(&[f64::NAN]), Err(Error::InvalidCut(_))));
    }

    #[test]
    fn tile_indexing_is_one_based() {
        let cut = Cut::new(vec![0.2, 0.7]).unwrap();
        assert_eq!(cut.tile(1).unwrap(), Tile { lo: 0.0, hi: 0.2 });
        assert_eq!(cut.tile(3).unwrap(), Tile { lo: 0.7, hi: 1.0 });
        assert!(cut.tile(0).is_err());
        assert!(cut.tile(4).is_err());
    }

    #[test]
    fn trailing_zero_lengths_end_at_one() {
        let cut = Cut::from_lengths(&[0.1, 0.2, 0.7 - 1e-16, 0.0, 0.0]).unwrap();
        assert_eq!(&cut.points()[2..], &[1.0, 1.0]);
        assert!(cut.tiles()[3].is_degenerate() && cut.tiles()[4].is_degenerate());
    }

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.5, -0.5]).is_err());
        let b = SimplexPoint::barycenter(2);
        assert_eq!(b.to_cut().points().len(), 2);
    }

    proptest::proptest! {
        #[test]
        fn tile_lengths_sum_to_one(mut pts in proptest::collection::vec(0.0f64..=1.0, 0..12)) {
            pts.sort_by(f64::total_cmp);
            let tiles = tiles_from_cut(&pts).unwrap();
            proptest::prop_assert_eq!(tiles.len(), pts.len() + 1);
            let total: f64 = tiles.iter().map(Tile::length).sum();
            proptest::prop_assert!((total - 1.0).abs() <= STRUCTURAL_TOL);
            for w in tiles.windows(2) {
                proptest::prop_assert_eq!(w[0].hi, w[1].lo);
            }
        }
    }
}
