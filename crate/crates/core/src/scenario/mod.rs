//! End-to-end solvers for the two dragon scenarios.
//!
//! Both search the chessboard configuration space with lifted valuation preferences,
//! read a decision tree off the support of the balanced point, and resolve and verify
//! every dragon action before returning.

mod certify;
mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use verify::{box_values, resolve_piece_grab, resolve_player_swallow, verify_envy_free, EnvyReport, Scenario};

use crate::cake::{Cut, Tile};
use crate::chessboard::{
    collapse, orbit_representatives, CollapseRule, FaceMap, LiftedPreferences, PartitionAllocation,
};
use crate::error::{Error, Result};
use crate::kkm::{SignMatrix, WeightMatrix};
use crate::params::Params;
use crate::search::{find_balanced_point, BalancedPoint, SearchOptions, TieShape};
use crate::tree::{Assignment, LabeledTree};
use crate::valuation::ValuationProfile;

/// Orbit representatives tried before a search is declared failed.
pub const MAX_FACE_ATTEMPTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub dragon: usize,
    pub assignment: Assignment,
    pub margins: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub r: usize,
    /// Classical cut into `r` tiles.
    pub cut: Cut,
    /// Box of each classical tile; `null` for degenerate tiles.
    pub alloc: Vec<Option<usize>>,
    /// The partition/allocation the outcomes were verified on.
    pub partition: PartitionAllocation,
    /// Balance residual at `fuzz`.
    pub residual: f64,
    pub fuzz: f64,
    /// Whether the cut was polished to exact indifference along the tree.
    pub polished: bool,
    /// Envy tolerance the outcomes were checked against.
    pub tol: f64,
    pub tree: LabeledTree,
    pub outcomes: Vec<Outcome>,
}

impl ScenarioResult {
    pub fn min_margin(&self) -> f64 {
        self.outcomes
            .iter()
            .flat_map(|o| o.margins.values())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Everything the solver computed on the way, for callers that want the fuzzy data.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioTrace {
    pub result: ScenarioResult,
    pub point: BalancedPoint,
    pub weights: WeightMatrix,
    pub signs: SignMatrix,
}

pub fn is_prime_power(r: usize) -> bool {
    if r < 2 {
        return false;
    }
    let p = (2..=r)
        .find(|p| r.is_multiple_of(*p))
        .expect("r >= 2 has a prime factor");
    let mut m = r;
    while m.is_multiple_of(p) {
        m /= p;
    }
    m == 1
}

/// `r - 1` players, `r` boxes; the dragon grabs a box.
pub fn solve_scenario_piece(profile: &ValuationProfile, params: &Params) -> Result<ScenarioResult> {
    solve_scenario_with(Scenario::PieceGrab, profile, params, &CollapseRule::Canonical).map(|t| t.result)
}

/// `r + 1` players, `r` boxes; the dragon swallows a player.
pub fn solve_scenario_player(profile: &ValuationProfile, params: &Params) -> Result<ScenarioResult> {
    solve_scenario_with(Scenario::PlayerSwallow, profile, params, &CollapseRule::Canonical).map(|t| t.result)
}

/// [`solve_scenario_piece`] plus the classical-side check that both tiles announced to
/// each player are among its best tiles of the returned cut.
pub fn solve_scenario_piece_classical(profile: &ValuationProfile, params: &Params) -> Result<ScenarioResult> {
    let result = solve_scenario_piece(profile, params)?;
    check_classical_endpoints(profile, &result)?;
    Ok(result)
}

/// [`solve_scenario_player`] plus the classical-side check that both players joined by
/// each box's edge rank that box among their best.
pub fn solve_scenario_player_classical(profile: &ValuationProfile, params: &Params) -> Result<ScenarioResult> {
    let result = solve_scenario_player(profile, params)?;
    check_classical_endpoints(profile, &result)?;
    Ok(result)
}

pub fn solve_scenario_with(
    scenario: Scenario,
    profile: &ValuationProfile,
    params: &Params,
    rule: &CollapseRule,
) -> Result<ScenarioTrace> {
    let r = scenario.boxes_for(profile.player_count())?;
    params.validate(r)?;
    if !is_prime_power(r) {
        log::warn!("r = {r} is not a prime power; a balanced point need not exist");
    }
    let lifted = LiftedPreferences::with_rule(profile, r, rule.clone());
    let opts = SearchOptions::new(params.tol, params.budget, params.eps_fuzz, params.seed);
    let mut best: Option<BalancedPoint> = None;
    for face in orbit_representatives(r)?.iter().take(MAX_FACE_ATTEMPTS) {
        let shape = match scenario {
            Scenario::PieceGrab => TieShape::PieceTree,
            Scenario::PlayerSwallow => TieShape::PlayerTree,
        };
        let map = FaceMap {
            lifted: &lifted,
            face,
            shape,
        };
        let point = match find_balanced_point(&map, &opts) {
            Ok(p) => p,
            Err(Error::SearchFailed { best: b }) => {
                log::debug!("face {:?} failed with residual {:e}", face.rooks, b.residual);
                if best.as_ref().is_none_or(|x| b.residual < x.residual) {
                    best = Some(*b);
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let c = certify::certify(&map, face, scenario, params, point)?;
        let classical = collapse(&c.partition)?;
        let result = ScenarioResult {
            scenario,
            r,
            cut: classical.cut,
            alloc: classical.origin,
            partition: c.partition,
            residual: c.point.residual,
            fuzz: c.point.fuzz,
            polished: c.polished,
            tol: params.envy_tol,
            tree: c.tree,
            outcomes: c.outcomes,
        };
        return Ok(ScenarioTrace {
            result,
            point: c.point,
            weights: c.weights,
            signs: c.signs,
        });
    }
    Err(Error::SearchFailed {
        best: Box::new(best.expect("at least one face")),
    })
}

fn classical_values(profile: &ValuationProfile, result: &ScenarioResult) -> (Vec<Vec<f64>>, Vec<f64>) {
    let tiles = result.cut.tiles();
    let mut per_box = vec![vec![0.0; result.r]; profile.player_count()];
    let mut best = vec![f64::NEG_INFINITY; profile.player_count()];
    for (j, d) in profile.players.iter().enumerate() {
        for (t, origin) in tiles.iter().zip(&result.alloc) {
            let v = d.value(t);
            best[j] = best[j].max(v);
            if let Some(b) = origin {
                per_box[j][b - 1] = v;
            }
        }
    }
    (per_box, best)
}

fn check_classical_endpoints(profile: &ValuationProfile, result: &ScenarioResult) -> Result<()> {
    let (per_box, best) = classical_values(profile, result);
    for e in result.tree.edges() {
        let checks: Vec<(usize, usize)> = match result.scenario {
            Scenario::PieceGrab => vec![(e.label, e.u), (e.label, e.w)],
            Scenario::PlayerSwallow => vec![(e.u, e.label), (e.w, e.label)],
        };
        for (player, b) in checks {
            let gap = per_box[player - 1][b - 1] - best[player - 1];
            if gap < -result.tol {
                return Err(Error::Internal(format!(
                    "box {b} is {:e} below player {player}'s best tile on the classical cut",
                    -gap
                )));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxInterval {
    #[serde(rename = "box")]
    pub box_index: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisionShare {
    /// Box grabbed by the dragon.
    pub dragon: usize,
    /// Interval each player receives; `None` is an empty piece.
    pub shares: BTreeMap<usize, Option<Tile>>,
    pub min_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisionReport {
    pub intervals: Vec<BoxInterval>,
    pub outcomes: Vec<DivisionShare>,
}

/// The at most `r` non-degenerate intervals of a piece-grab result and who gets what
/// after each grab.
pub fn extract_division(result: &ScenarioResult) -> Result<DivisionReport> {
    if result.scenario != Scenario::PieceGrab {
        return Err(Error::Invalid("division reports describe piece-grab results".into()));
    }
    let intervals: Vec<BoxInterval> = result
        .partition
        .tiles()
        .iter()
        .zip(&result.partition.alloc)
        .filter(|(t, _)| !t.is_degenerate())
        .map(|(t, &b)| BoxInterval {
            box_index: b,
            lo: t.lo,
            hi: t.hi,
        })
        .collect();
    if intervals.len() > result.r {
        return Err(Error::Internal(format!(
            "{} intervals for {} boxes",
            intervals.len(),
            result.r
        )));
    }
    if let Some(bad) = intervals.iter().find(|i| !(i.hi > i.lo)) {
        return Err(Error::Internal(format!(
            "interval [{}, {}] has no length",
            bad.lo, bad.hi
        )));
    }
    let mut outcomes = Vec::new();
    for o in &result.outcomes {
        let mut shares = BTreeMap::new();
        for (&player, &b) in &o.assignment.map {
            let interval = intervals
                .iter()
                .find(|i| i.box_index == b)
                .map(|i| Tile { lo: i.lo, hi: i.hi });
            shares.insert(player, interval);
        }
        let (worst, min_margin) = o
            .margins
            .iter()
            .fold((0, f64::INFINITY), |acc, (&j, &m)| if m < acc.1 { (j, m) } else { acc });
        if min_margin < -result.tol {
            return Err(Error::EnvyFailed {
                player: worst,
                dragon: o.dragon,
                margin: min_margin,
            });
        }
        outcomes.push(DivisionShare {
            dragon: o.dragon,
            shares,
            min_margin,
        });
    }
    Ok(DivisionReport { intervals, outcomes })
}
