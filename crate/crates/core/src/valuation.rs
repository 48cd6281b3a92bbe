//! Piecewise-constant (possibly signed) densities and the preferences they induce.
//!
//! A player prefers the tiles of maximal value. Since tile values move continuously
//! with the cut, these preference sets are closed, and some tile always attains the
//! maximum, so they cover. Values depend only on the interval itself, so two cuts
//! with the same non-degenerate tiles induce the same preferences.
//!
//! Nonnegative densities never make a zero-value degenerate tile attractive when a
//! positive tile exists; signed densities are how this crate models players that may
//! rationally prefer to take nothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cake::{Cut, Tile, STRUCTURAL_TOL};
use crate::error::{Error, Result};

/// Minimum density of a hungry profile after normalization.
pub const HUNGRY_DELTA: f64 = 1e-3;

/// Largest number of density pieces produced by [`random_profile`].
pub const MAX_RANDOM_PIECES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct PiecewiseDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// `cumulative[k]` is the integral over `[0, breakpoints[k]]`.
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawDensity> for PiecewiseDensity {
    type Error = Error;

    fn try_from(raw: RawDensity) -> Result<Self> {
        PiecewiseDensity::new(raw.breakpoints, raw.values)
    }
}

impl From<PiecewiseDensity> for RawDensity {
    fn from(d: PiecewiseDensity) -> Self {
        RawDensity {
            breakpoints: d.breakpoints,
            values: d.values,
        }
    }
}

impl PiecewiseDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::Invalid(format!(
                "{} breakpoints cannot bound {} pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::Invalid("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("density values must be finite".into()));
        }
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for (k, v) in values.iter().enumerate() {
            acc += v * (breakpoints[k + 1] - breakpoints[k]);
            cumulative.push(acc);
        }
        Ok(PiecewiseDensity {
            breakpoints,
            values,
            cumulative,
        })
    }

    pub fn uniform() -> Self {
        PiecewiseDensity::new(vec![0.0, 1.0], vec![1.0]).expect("valid")
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseDensity::new(vec![0.0, 1.0], vec![value]).expect("valid")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn piece_of(&self, x: f64) -> usize {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        k.saturating_sub(1).min(self.values.len() - 1)
    }

    /// Integral of the density over `[0, x]`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let k = self.piece_of(x);
        self.cumulative[k] + self.values[k] * (x - self.breakpoints[k])
    }

    /// Value of a tile; exactly zero on degenerate tiles.
    pub fn value(&self, tile: &Tile) -> f64 {
        if tile.is_degenerate() {
            return 0.0;
        }
        self.cumulative(tile.hi) - self.cumulative(tile.lo)
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Total absolute mass `∫ |density|`.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v.abs() * (self.breakpoints[k + 1] - self.breakpoints[k]))
            .sum()
    }

    /// Largest `|density|`, a Lipschitz constant of tile values in the endpoints.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PiecewiseDensity::new(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
        .expect("scaling keeps validity")
    }

    pub fn is_hungry(&self) -> bool {
        self.min_value() >= HUNGRY_DELTA
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Hungry,
    Signed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuationProfile {
    pub players: Vec<PiecewiseDensity>,
    pub regime: Regime,
}

impl ValuationProfile {
    pub fn new(players: Vec<PiecewiseDensity>, regime: Regime) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::Invalid("a profile needs at least one player".into()));
        }
        if regime == Regime::Hungry {
            if let Some(j) = players.iter().position(|d| !d.is_hungry()) {
                return Err(Error::Invalid(format!(
                    "player {} has density below {HUNGRY_DELTA} in a hungry profile",
                    j + 1
                )));
            }
        }
        if let Some(j) = players.iter().position(|d| d.mass() <= 0.0) {
            return Err(Error::Invalid(format!("player {} has zero mass", j + 1)));
        }
        Ok(ValuationProfile { players, regime })
    }

    /// `count` players with the uniform density.
    pub fn uniform(count: usize) -> Self {
        ValuationProfile {
            players: vec![PiecewiseDensity::uniform(); count],
            regime: Regime::Hungry,
        }
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn is_hungry(&self) -> bool {
        self.players.iter().all(PiecewiseDensity::is_hungry)
    }

    /// Value of `tile` for the 1-based `player`.
    pub fn value(&self, player: usize, tile: &Tile) -> f64 {
        self.players[player - 1].value(tile)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ValuationProfile = serde_json::from_str(text)?;
        ValuationProfile::new(raw.players, raw.regime)
    }
}

/// Whether `density` prefers tile `tile_index` (1-based) of `cut`: its value is within
/// `tol` of the best tile.
pub fn prefers(density: &PiecewiseDensity, cut: &Cut, tile_index: usize, tol: f64) -> Result<bool> {
    let tile = cut.tile(tile_index)?;
    let best = cut
        .tiles()
        .iter()
        .map(|t| density.value(t))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(density.value(&tile) >= best - tol)
}

/// Preferences over the tiles of a cut, possibly backed by something other than valuations.
pub trait PreferenceOracle {
    fn player_count(&self) -> usize;

    /// Whether the 1-based `player` prefers tile `tile` of `cut`.
    fn prefers(&self, player: usize, cut: &Cut, tile: usize) -> Result<bool>;
}

impl PreferenceOracle for ValuationProfile {
    fn player_count(&self) -> usize {
        self.players.len()
    }

    fn prefers(&self, player: usize, cut: &Cut, tile: usize) -> Result<bool> {
        if player == 0 || player > self.players.len() {
            return Err(Error::OutOfRange {
                index: player,
                max: self.players.len(),
            });
        }
        prefers(&self.players[player - 1], cut, tile, 0.0)
    }
}

fn non_degenerate(cut: &Cut) -> Vec<(usize, Tile)> {
    cut.tiles()
        .into_iter()
        .enumerate()
        .filter(|(_, t)| !t.is_degenerate())
        .map(|(k, t)| (k + 1, t))
        .collect()
}

/// Checks partition equivalence on sample pairs of cuts that produce the same
/// non-degenerate tiles: non-degenerate preferences must agree tile by tile, and
/// "prefers some degenerate tile" must agree as a whole.
pub fn check_ppe<O: PreferenceOracle + ?Sized>(oracle: &O, pairs: &[(Cut, Cut)]) -> Result<bool> {
    for (a, b) in pairs {
        let (na, nb) = (non_degenerate(a), non_degenerate(b));
        let same_tiles = na.len() == nb.len()
            && na
                .iter()
                .zip(&nb)
                .all(|((_, s), (_, t))| (s.lo - t.lo).abs() <= STRUCTURAL_TOL && (s.hi - t.hi).abs() <= STRUCTURAL_TOL);
        if a.len() != b.len() || !same_tiles {
            return Err(Error::Invalid(format!(
                "cuts {:?} and {:?} do not share their non-degenerate tiles",
                a.points(),
                b.points()
            )));
        }
        let degenerate = |cut: &Cut, nd: &[(usize, Tile)]| -> Vec<usize> {
            (1..=cut.tile_count())
                .filter(|k| !nd.iter().any(|(i, _)| i == k))
                .collect()
        };
        let (da, db) = (degenerate(a, &na), degenerate(b, &nb));
        for player in 1..=oracle.player_count() {
            for ((ia, _), (ib, _)) in na.iter().zip(&nb) {
                if oracle.prefers(player, a, *ia)? != oracle.prefers(player, b, *ib)? {
                    return Ok(false);
                }
            }
            let mut any_a = false;
            for &k in &da {
                any_a |= oracle.prefers(player, a, k)?;
            }
            let mut any_b = false;
            for &k in &db {
                any_b |= oracle.prefers(player, b, k)?;
            }
            if any_a != any_b {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Two cuts with `points` points each and identical non-degenerate tiles that differ in
/// where the repeated points sit.
pub fn random_equivalent_cuts(rng: &mut impl Rng, points: usize) -> (Cut, Cut) {
    assert!(points >= 1, "need at least one cut point");
    let distinct = rng.gen_range(0..points);
    let mut inner: Vec<f64> = (0..distinct).map(|_| rng.gen_range(0.01..0.99)).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    // Positions where surplus points may sit: 0, each distinct interior point, 1.
    let mut anchors = vec![0.0];
    anchors.extend(&inner);
    anchors.push(1.0);
    let draw = |rng: &mut dyn rand::RngCore| {
        let mut pts = inner.clone();
        while pts.len() < points {
            pts.push(anchors[rng.gen_range(0..anchors.len())]);
        }
        pts.sort_by(f64::total_cmp);
        Cut::new(pts).expect("sorted points in [0, 1]")
    };
    let a = draw(rng);
    let b = draw(rng);
    (a, b)
}

/// Seed-deterministic random profile with `pieces` density pieces per player.
///
/// Hungry profiles draw piece values in `[0.1, 2]` and normalize the total to 1. Signed
/// profiles also negate a random subset of pieces and normalize the absolute mass to 1.
pub fn random_profile(seed: u64, players: usize, regime: Regime, pieces: usize) -> Result<ValuationProfile> {
    if pieces == 0 || pieces > MAX_RANDOM_PIECES {
        return Err(Error::Invalid(format!(
            "pieces must be in 1..={MAX_RANDOM_PIECES}, got {pieces}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let densities = (0..players)
        .map(|_| {
            let breakpoints = loop {
                let mut b: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
                b.push(0.0);
                b.push(1.0);
                b.sort_by(f64::total_cmp);
                if b.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
                    break b;
                }
            };
            let mut values: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.1..=2.0)).collect();
            if regime == Regime::Signed {
                for v in values.iter_mut() {
                    if rng.gen_bool(0.5) {
                        *v = -*v;
                    }
                }
            }
            let raw = PiecewiseDensity::new(breakpoints, values).expect("valid random density");
            let norm = match regime {
                Regime::Hungry => raw.total(),
                Regime::Signed => raw.mass(),
            };
            raw.scaled(1.0 / norm)
        })
        .collect();
    ValuationProfile::new(densities, regime)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step() -> PiecewiseDensity {
        PiecewiseDensity::new(vec![0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap()
    }

    #[test]
    fn value_examples() {
        let d = step();
        assert_eq!(d.value(&Tile { lo: 0.0, hi: 0.25 }), 0.5);
        assert_eq!(d.value(&Tile { lo: 0.25, hi: 0.75 }), 0.5);
        assert_eq!(d.value(&Tile { lo: 0.4, hi: 0.4 }), 0.0);
        assert_eq!(d.total(), 1.0);
    }

    #[test]
    fn density_validation() {
        assert!(PiecewiseDensity::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseDensity::new(vec![0.0, 0.5, 0.5, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(PiecewiseDensity::new(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(PiecewiseDensity::new(vec![0.0, 1.0], vec![f64::INFINITY]).is_err());
        assert!(ValuationProfile::new(vec![PiecewiseDensity::constant(-1.0)], Regime::Hungry).is_err());
    }

    #[test]
    fn prefers_examples() {
        let u = PiecewiseDensity::uniform();
        let half = Cut::new(vec![0.5]).unwrap();
        assert!(prefers(&u, &half, 1, 0.0).unwrap() && prefers(&u, &half, 2, 0.0).unwrap());
        let off = Cut::new(vec![0.8]).unwrap();
        assert!(prefers(&u, &off, 1, 0.0).unwrap());
        assert!(!prefers(&u, &off, 2, 0.0).unwrap());
        assert!(prefers(&u, &off, 3, 0.0).is_err());

        let neg = PiecewiseDensity::constant(-1.0);
        assert!(prefers(&neg, &half, 1, 0.0).unwrap() && prefers(&neg, &half, 2, 0.0).unwrap());
        let doubled = Cut::new(vec![0.5, 0.5]).unwrap();
        assert!(prefers(&neg, &doubled, 2, 0.0).unwrap());
        assert!(!prefers(&neg, &doubled, 1, 0.0).unwrap());
        assert!(!prefers(&neg, &doubled, 3, 0.0).unwrap());
    }

    #[test]
    fn ppe_holds_for_valuations() {
        let profile = random_profile(7, 3, Regime::Signed, 4).unwrap();
        let a = Cut::new(vec![0.3, 0.3]).unwrap();
        let b = Cut::new(vec![0.3, 1.0]).unwrap();
        assert!(check_ppe(&profile, &[(a.clone(), b)]).unwrap());
        let c = Cut::new(vec![0.2, 0.3]).unwrap();
        assert!(check_ppe(&profile, &[(a, c)]).is_err());
    }

    struct MultiplicityReader;

    impl PreferenceOracle for MultiplicityReader {
        fn player_count(&self) -> usize {
            1
        }

        // Prefers the first tile exactly when some cut point is repeated.
        fn prefers(&self, _player: usize, cut: &Cut, tile: usize) -> Result<bool> {
            let repeated = cut.points().windows(2).any(|w| w[0] == w[1]);
            Ok((tile == 1) == repeated)
        }
    }

    #[test]
    fn ppe_detects_multiplicity_reader() {
        let a = Cut::new(vec![0.3, 0.3]).unwrap();
        let b = Cut::new(vec![0.3, 1.0]).unwrap();
        assert!(!check_ppe(&MultiplicityReader, &[(a, b)]).unwrap());
    }

    #[test]
    fn random_profiles_are_deterministic_and_normalized() {
        let a = random_profile(11, 4, Regime::Hungry, 5).unwrap();
        assert_eq!(a, random_profile(11, 4, Regime::Hungry, 5).unwrap());
        assert_ne!(a, random_profile(12, 4, Regime::Hungry, 5).unwrap());
        for d in &a.players {
            assert!((d.total() - 1.0).abs() < 1e-12);
            assert!(d.min_value() >= 0.1 / 2.0);
        }
        let s = random_profile(11, 4, Regime::Signed, 5).unwrap();
        for d in &s.players {
            assert!((d.mass() - 1.0).abs() < 1e-12);
        }
        assert!(random_profile(1, 1, Regime::Hungry, 9).is_err());
    }

    #[test]
    fn all_negative_player_prefers_degenerate_tiles() {
        // search a seed whose first player is negative everywhere
        let profile = (0..200u64)
            .map(|s| random_profile(s, 1, Regime::Signed, 2).unwrap())
            .find(|p| p.players[0].values().iter().all(|&v| v < 0.0))
            .expect("some seed negates both pieces");
        let d = &profile.players[0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (cut, _) = random_equivalent_cuts(&mut rng, 3);
            let tiles = cut.tiles();
            if let Some(k) = tiles.iter().position(Tile::is_degenerate) {
                assert!(prefers(d, &cut, k + 1, 0.0).unwrap());
                for (i, t) in tiles.iter().enumerate() {
                    if !t.is_degenerate() {
                        assert!(!prefers(d, &cut, i + 1, 0.0).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn json_shape() {
        let p = ValuationProfile::uniform(2);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(
            text,
            r#"{"players":[{"breakpoints":[0.0,1.0],"values":[1.0]},{"breakpoints":[0.0,1.0],"values":[1.0]}],"regime":"hungry"}"#
        );
        assert_eq!(ValuationProfile::from_json(&text).unwrap(), p);
        assert!(ValuationProfile::from_json(
            r#"{"players":[{"breakpoints":[0.0,0.5],"values":[1.0]}],"regime":"signed"}"#
        )
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn additivity(seed in 0u64..500, a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let d = &random_profile(seed, 1, Regime::Signed, 6).unwrap().players[0];
            let mut xs = [a, b, c];
            xs.sort_by(f64::total_cmp);
            let [a, b, c] = xs;
            let whole = d.value(&Tile { lo: a, hi: c });
            let parts = d.value(&Tile { lo: a, hi: b }) + d.value(&Tile { lo: b, hi: c });
            proptest::prop_assert!((whole - parts).abs() <= 1e-12);
        }

        #[test]
        fn lipschitz_in_endpoints(seed in 0u64..500, lo in 0.0f64..0.5, hi in 0.5f64..=1.0, eps in -0.01f64..0.01) {
            let d = &random_profile(seed, 1, Regime::Hungry, 7).unwrap().players[0];
            let moved = Tile { lo, hi: (hi + eps).clamp(0.5, 1.0) };
            let diff = (d.value(&Tile { lo, hi }) - d.value(&moved)).abs();
            proptest::prop_assert!(diff <= d.max_abs() * (moved.hi - hi).abs() + 1e-12);
        }

        #[test]
        fn hungry_covers_and_never_wants_nothing(seed in 0u64..300, cut_seed in 0u64..1000) {
            let profile = random_profile(seed, 2, Regime::Hungry, 5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(cut_seed);
            let (cut, _) = random_equivalent_cuts(&mut rng, 3);
            for j in 1..=2 {
                let mut any = false;
                for (k, t) in cut.tiles().iter().enumerate() {
                    let p = profile.prefers(j, &cut, k + 1).unwrap();
                    any |= p;
                    if t.is_degenerate() {
                        proptest::prop_assert!(!p);
                    }
                }
                proptest::prop_assert!(any);
            }
        }
    }
}
