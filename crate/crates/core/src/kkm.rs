//! The dragon-tree KKM pipeline on the classical simplex.
//!
//! `n` players choose among the `n + 1` tiles of a cut. Each player's exact argmax
//! preference is smeared into a partition of unity with margin width `ε_fuzz`; a
//! balanced point of the averaged weights is found numerically; its 0–1 support
//! matrix satisfies the dragon marriage condition, which yields a tree on the pieces
//! whose edges are labeled by players.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cake::{Cut, SimplexPoint, Tile};
use crate::error::{Error, Result};
use crate::marriage::{dragon_condition_witness, spanning_tree_representatives, SetFamily};
use crate::params::Params;
pub use crate::search::BalancedPoint;
use crate::search::{balance_residual, find_balanced_point, BalanceMap, SearchOptions, TieShape};
use crate::tree::{root_tree, Assignment, LabeledTree, TreeEdge};
use crate::valuation::{PiecewiseDensity, ValuationProfile};

/// Fuzzy preference of one player over `tiles`.
///
/// Margins are measured in units of the player's absolute mass, so rescaling a
/// density changes nothing. The normalizer sums non-degenerate tiles first and
/// degenerate ones after, which keeps it bitwise identical for cuts that differ
/// only in where their degenerate tiles sit.
pub fn fuzzy_column(density: &PiecewiseDensity, tiles: &[Tile], fuzz: f64) -> Vec<f64> {
    let values: Vec<f64> = tiles.iter().map(|t| density.value(t)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mass = density.mass();
    let raw: Vec<f64> = values.iter().map(|v| (fuzz + (v - best) / mass).max(0.0)).collect();
    let mut sum = 0.0;
    for (t, w) in tiles.iter().zip(&raw) {
        if !t.is_degenerate() {
            sum += w;
        }
    }
    for (t, w) in tiles.iter().zip(&raw) {
        if t.is_degenerate() {
            sum += w;
        }
    }
    raw.iter().map(|w| w / sum).collect()
}

/// `f_i^j` with rows indexed by pieces and columns by players.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightMatrix {
    rows: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        WeightMatrix { rows }
    }

    /// Builds the matrix from per-player columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let pieces = columns.first().map_or(0, Vec::len);
        WeightMatrix {
            rows: (0..pieces).map(|i| columns.iter().map(|c| c[i]).collect()).collect(),
        }
    }

    pub fn pieces(&self) -> usize {
        self.rows.len()
    }

    pub fn players(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Weight of the 1-based `piece` for the 1-based `player`.
    pub fn weight(&self, piece: usize, player: usize) -> f64 {
        self.rows[piece - 1][player - 1]
    }

    pub fn column_sum(&self, player: usize) -> f64 {
        self.rows.iter().map(|r| r[player - 1]).sum()
    }

    /// `Σ_j f_i^j` for each piece.
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn balance(&self) -> Vec<f64> {
        let n = self.players() as f64;
        self.row_sums().into_iter().map(|s| s / n).collect()
    }

    pub fn residual(&self) -> f64 {
        balance_residual(&self.balance())
    }
}

/// Fuzzy preferences of a valuation profile over the tiles of classical cuts.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalPreferences {
    profile: ValuationProfile,
    fuzz: f64,
}

pub fn functional_from_valuations(profile: &ValuationProfile, eps_fuzz: f64) -> Result<FunctionalPreferences> {
    if !(eps_fuzz > 0.0) || !eps_fuzz.is_finite() {
        return Err(Error::Invalid(format!("eps_fuzz must be positive, got {eps_fuzz}")));
    }
    Ok(FunctionalPreferences {
        profile: profile.clone(),
        fuzz: eps_fuzz,
    })
}

impl FunctionalPreferences {
    pub fn fuzz(&self) -> f64 {
        self.fuzz
    }

    pub fn profile(&self) -> &ValuationProfile {
        &self.profile
    }

    pub fn weights_for_tiles(&self, tiles: &[Tile], fuzz: f64) -> WeightMatrix {
        let columns: Vec<Vec<f64>> = self
            .profile
            .players
            .iter()
            .map(|d| fuzzy_column(d, tiles, fuzz))
            .collect();
        WeightMatrix::from_columns(&columns)
    }

    pub fn weights_at(&self, cut: &Cut) -> WeightMatrix {
        self.weights_for_tiles(&cut.tiles(), self.fuzz)
    }

    pub fn balance_residual(&self, point: &SimplexPoint) -> f64 {
        self.weights_at(&point.to_cut()).residual()
    }
}

/// Classical balance map: `players + 1` pieces.
struct ClassicalMap<'a> {
    prefs: &'a FunctionalPreferences,
}

impl BalanceMap for ClassicalMap<'_> {
    fn pieces(&self) -> usize {
        self.prefs.profile.player_count() + 1
    }

    fn players(&self) -> usize {
        self.prefs.profile.player_count()
    }

    fn weights_at(&self, coords: &[f64], fuzz: f64) -> Vec<Vec<f64>> {
        let cut = Cut::from_lengths(coords).expect("simplex coordinates");
        self.prefs.weights_for_tiles(&cut.tiles(), fuzz).rows
    }

    fn piece_values(&self, coords: &[f64]) -> Option<Vec<Vec<f64>>> {
        let tiles = Cut::from_lengths(coords).expect("simplex coordinates").tiles();
        Some(
            self.prefs
                .profile
                .players
                .iter()
                .map(|d| tiles.iter().map(|t| d.value(t) / d.mass()).collect())
                .collect(),
        )
    }

    fn tie_shape(&self) -> Option<TieShape> {
        Some(TieShape::PieceTree)
    }
}

/// Balanced point for `n` players over `n + 1` tiles.
pub fn find_classical_balanced_point(prefs: &FunctionalPreferences, params: &Params) -> Result<BalancedPoint> {
    let opts = SearchOptions::new(params.tol, params.budget, prefs.fuzz, params.seed);
    find_balanced_point(&ClassicalMap { prefs }, &opts)
}

/// The 0–1 support of a weight matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignMatrix {
    /// `omega[i][j]` for piece `i` and player `j` (0-based storage).
    pub omega: Vec<Vec<u8>>,
    pub threshold: f64,
}

impl SignMatrix {
    pub fn from_rows(omega: Vec<Vec<u8>>, threshold: f64) -> Self {
        SignMatrix { omega, threshold }
    }

    pub fn rows(&self) -> usize {
        self.omega.len()
    }

    pub fn cols(&self) -> usize {
        self.omega.first().map_or(0, Vec::len)
    }

    /// 1-based lookup.
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.omega[row - 1][col - 1] == 1
    }

    pub fn transpose(&self) -> SignMatrix {
        let omega = (0..self.cols())
            .map(|j| self.omega.iter().map(|r| r[j]).collect())
            .collect();
        SignMatrix {
            omega,
            threshold: self.threshold,
        }
    }

    /// Column `j` as the set of rows where it is 1 (all 1-based).
    pub fn column_set(&self, col: usize) -> Vec<usize> {
        (1..=self.rows()).filter(|&i| self.get(i, col)).collect()
    }

    /// Columns as subsets of the rows: the family fed to the dragon marriage lemma.
    pub fn family(&self) -> Result<SetFamily> {
        SetFamily::new(self.rows(), (1..=self.cols()).map(|j| self.column_set(j)).collect())
    }
}

pub fn sign_matrix(weights: &WeightMatrix, eps_sign: f64) -> SignMatrix {
    let omega = weights
        .rows
        .iter()
        .map(|r| r.iter().map(|&f| u8::from(f > eps_sign)).collect())
        .collect();
    SignMatrix::from_rows(omega, eps_sign)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaCheck {
    pub holds: bool,
    /// Columns `S` with `|Ω[S]| <= |S|`.
    pub witness: Option<Vec<usize>>,
}

/// `|Ω[S]| ≥ |S| + 1` for every nonempty set `S` of columns.
pub fn check_omega_condition(omega: &SignMatrix) -> Result<OmegaCheck> {
    let witness = dragon_condition_witness(&omega.family()?);
    Ok(OmegaCheck {
        holds: witness.is_none(),
        witness,
    })
}

/// Tree on the rows of `omega` whose edges are labeled by its columns.
pub fn tree_from_signs(omega: &SignMatrix) -> Result<LabeledTree> {
    let family = omega.family()?;
    let reps = spanning_tree_representatives(&family)?;
    let edges = reps
        .pairs
        .iter()
        .enumerate()
        .map(|(j, &(a, b))| TreeEdge::new(a, b, j + 1))
        .collect();
    LabeledTree::new(family.n(), edges)
}

/// For every root `i`, the bijection `π_i` sending each label to the endpoint of its edge
/// farther from `i`.
pub fn bijections_from_tree(tree: &LabeledTree) -> Result<Vec<Assignment>> {
    (1..=tree.vertex_count())
        .map(|root| {
            let map: BTreeMap<usize, usize> = root_tree(tree, root)?
                .into_iter()
                .map(|(vertex, edge)| (edge.label, vertex))
                .collect();
            Ok(Assignment { dragon: root, map })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KkmSolution {
    pub point: BalancedPoint,
    pub cut: Cut,
    pub weights: WeightMatrix,
    pub signs: SignMatrix,
    pub tree: LabeledTree,
    pub bijections: Vec<Assignment>,
}

/// Balanced point, sign matrix, tree and bijections for `n` players over `n + 1` tiles.
pub fn solve_dragon_kkm(profile: &ValuationProfile, params: &Params) -> Result<KkmSolution> {
    let pieces = profile.player_count() + 1;
    params.validate(pieces)?;
    if profile.is_hungry() && params.eps_fuzz > 1.0 / (2.0 * pieces as f64) {
        return Err(Error::Invalid(format!(
            "eps_fuzz = {} exceeds 1/(2p) = {} for a hungry profile",
            params.eps_fuzz,
            1.0 / (2.0 * pieces as f64)
        )));
    }
    let prefs = functional_from_valuations(profile, params.eps_fuzz)?;
    let point = find_classical_balanced_point(&prefs, params)?;
    let cut = point.point.to_cut();
    let weights = prefs.weights_at(&cut);
    let signs = sign_matrix(&weights, params.eps_sign);
    let tree = tree_from_signs(&signs)?;
    let bijections = bijections_from_tree(&tree)?;
    Ok(KkmSolution {
        point,
        cut,
        weights,
        signs,
        tree,
        bijections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::{random_profile, Regime};

    fn uniform_prefs(players: usize, fuzz: f64) -> FunctionalPreferences {
        functional_from_valuations(&ValuationProfile::uniform(players), fuzz).unwrap()
    }

    #[test]
    fn fuzzy_examples() {
        let w = uniform_prefs(1, 1e-3).weights_at(&Cut::new(vec![0.5]).unwrap());
        assert_eq!(w.rows(), &[vec![0.5], vec![0.5]]);
        let w = uniform_prefs(1, 0.1).weights_at(&Cut::new(vec![0.8]).unwrap());
        assert_eq!(w.rows(), &[vec![1.0], vec![0.0]]);
        assert!(functional_from_valuations(&ValuationProfile::uniform(1), 0.0).is_err());
    }

    #[test]
    fn sign_examples() {
        let s = sign_matrix(&WeightMatrix::from_columns(&[vec![0.5, 0.5, 0.0]]), 1e-9);
        assert_eq!(s.omega, vec![vec![1], vec![1], vec![0]]);
        let s = sign_matrix(&WeightMatrix::from_columns(&[vec![1.0, 0.0]]), 1e-9);
        assert_eq!(s.omega, vec![vec![1], vec![0]]);
        assert_eq!(s.transpose().omega, vec![vec![1, 0]]);
    }

    fn signs_from_columns(rows: usize, cols: &[&[usize]]) -> SignMatrix {
        let omega = (1..=rows)
            .map(|i| cols.iter().map(|c| u8::from(c.contains(&i))).collect())
            .collect();
        SignMatrix::from_rows(omega, 1e-9)
    }

    #[test]
    fn omega_examples() {
        assert!(
            check_omega_condition(&SignMatrix::from_rows(vec![vec![1, 1]; 3], 1e-9))
                .unwrap()
                .holds
        );
        let bad = check_omega_condition(&signs_from_columns(3, &[&[1, 2], &[1, 2]])).unwrap();
        assert!(!bad.holds);
        assert_eq!(bad.witness, Some(vec![1, 2]));
        assert!(
            check_omega_condition(&signs_from_columns(4, &[&[1, 2], &[2, 3], &[3, 4]]))
                .unwrap()
                .holds
        );
    }

    #[test]
    fn bijection_examples() {
        let tree = LabeledTree::new(3, vec![TreeEdge::new(1, 2, 1), TreeEdge::new(2, 3, 2)]).unwrap();
        let pis = bijections_from_tree(&tree).unwrap();
        assert_eq!(pis[0].map, BTreeMap::from([(1, 2), (2, 3)]));
        assert_eq!(pis[1].map, BTreeMap::from([(1, 1), (2, 3)]));
        assert_eq!(pis[2].map, BTreeMap::from([(1, 1), (2, 2)]));
        for pi in &pis {
            for (&j, &piece) in &pi.map {
                assert!(tree.edge(j).unwrap().touches(piece));
                assert_ne!(piece, pi.dragon);
            }
        }
    }

    #[test]
    fn one_uniform_player() {
        let sol = solve_dragon_kkm(&ValuationProfile::uniform(1), &Params::default()).unwrap();
        assert!((sol.cut.points()[0] - 0.5).abs() <= 1e-8);
        assert_eq!(sol.tree.edges(), &[TreeEdge::new(1, 2, 1)]);
    }

    #[test]
    fn two_uniform_players_balance_at_barycenter() {
        let sol = solve_dragon_kkm(&ValuationProfile::uniform(2), &Params::default()).unwrap();
        for (got, want) in sol.cut.points().iter().zip([1.0 / 3.0, 2.0 / 3.0]) {
            assert!((got - want).abs() <= 1e-6, "{:?}", sol.cut);
        }
        assert_eq!(sign_matrix(&sol.weights, 1e-9).omega, vec![vec![1, 1]; 3]);
    }

    #[test]
    fn hungry_fuzz_bound_is_enforced() {
        let params = Params {
            eps_fuzz: 0.3,
            ..Params::default()
        };
        assert!(solve_dragon_kkm(&ValuationProfile::uniform(2), &params).is_err());
    }

    #[test]
    fn tree_edges_have_support() {
        for seed in 0..3 {
            let profile = random_profile(seed, 3, Regime::Hungry, 5).unwrap();
            let sol = solve_dragon_kkm(&profile, &Params::default()).unwrap();
            for e in sol.tree.edges() {
                assert!(sol.weights.weight(e.u, e.label) > 1e-9);
                assert!(sol.weights.weight(e.w, e.label) > 1e-9);
            }
            for pi in &sol.bijections {
                for (&j, &piece) in &pi.map {
                    assert!(sol.weights.weight(piece, j) > 1e-9);
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn partition_of_unity(seed in 0u64..1000, pts in proptest::collection::vec(0.0f64..=1.0, 3)) {
            let profile = random_profile(seed, 3, if seed % 2 == 0 { Regime::Hungry } else { Regime::Signed }, 6).unwrap();
            let prefs = functional_from_valuations(&profile, 1e-3).unwrap();
            let mut pts = pts;
            pts.sort_by(f64::total_cmp);
            let w = prefs.weights_at(&Cut::new(pts).unwrap());
            for j in 1..=3 {
                proptest::prop_assert!((w.column_sum(j) - 1.0).abs() <= 1e-9);
            }
            proptest::prop_assert!(w.rows().iter().flatten().all(|f| *f >= 0.0));
        }

        #[test]
        fn hungry_weights_vanish_on_degenerate_tiles(seed in 0u64..1000, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let profile = random_profile(seed, 2, Regime::Hungry, 4).unwrap();
            let prefs = functional_from_valuations(&profile, 1.0 / 8.0).unwrap();
            let cut = Cut::new(vec![a.min(b), a.min(b), a.max(b)]).unwrap();
            let w = prefs.weights_at(&cut);
            for (i, t) in cut.tiles().iter().enumerate() {
                if t.is_degenerate() {
                    proptest::prop_assert!(w.rows()[i].iter().all(|f| *f == 0.0));
                }
            }
        }
    }
}
