//! Turning a fuzzy balanced point into exactly checked outcomes.
//!
//! At a fixed fuzz the tree's endpoints are only guaranteed to be within `ε_fuzz` of
//! optimal. We first polish: solve the piecewise-linear system "every player is
//! indifferent between the boxes the tree announces to it" starting from the balanced
//! point. If the polished point does not verify, the fuzzy point itself is tried, and
//! failing that the search is rerun at a tenfold smaller fuzz, where near-ties that
//! blurred the sign matrix drop out.

use crate::chessboard::{Face, FaceMap, PartitionAllocation};
use crate::error::{Error, Result};
use crate::kkm::{sign_matrix, tree_from_signs, SignMatrix, WeightMatrix};
use crate::params::Params;
use crate::search::{find_balanced_point, solve_on_simplex, BalancedPoint, SearchOptions};
use crate::tree::{LabeledTree, TreeEdge};

use super::verify::{box_values, resolve_piece_grab, resolve_player_swallow, verify_envy_free, Scenario};
use super::Outcome;

const POLISH_TOL: f64 = 1e-14;
const POLISH_EVALS: u64 = 2_000;
const POLISH_FD_STEP: f64 = 1e-8;

pub(crate) struct Certified {
    pub point: BalancedPoint,
    pub partition: PartitionAllocation,
    pub weights: WeightMatrix,
    pub signs: SignMatrix,
    pub tree: LabeledTree,
    pub outcomes: Vec<Outcome>,
    pub polished: bool,
}

pub(crate) fn tree_for(scenario: Scenario, signs: &SignMatrix) -> Result<LabeledTree> {
    match scenario {
        Scenario::PieceGrab => tree_from_signs(signs),
        Scenario::PlayerSwallow => tree_from_signs(&signs.transpose()),
    }
}

/// Outcomes for every dragon choice, with the worst failing one if any.
pub(crate) fn outcomes(
    map: &FaceMap<'_>,
    scenario: Scenario,
    pa: &PartitionAllocation,
    tree: &LabeledTree,
    tol: f64,
) -> Result<(Vec<Outcome>, Option<Error>)> {
    let profile = map.lifted.profile();
    let mut out = Vec::new();
    let mut failure: Option<(f64, Error)> = None;
    for dragon in 1..=scenario.dragon_choices(pa.r()) {
        let assignment = match scenario {
            Scenario::PieceGrab => resolve_piece_grab(tree, dragon)?,
            Scenario::PlayerSwallow => resolve_player_swallow(tree, dragon)?,
        };
        let report = verify_envy_free(profile, pa, scenario, &assignment, tol)?;
        if !report.passed && failure.as_ref().is_none_or(|(m, _)| report.min_margin < *m) {
            failure = Some((
                report.min_margin,
                Error::EnvyFailed {
                    player: report.worst_player,
                    dragon,
                    margin: report.min_margin,
                },
            ));
        }
        out.push(Outcome {
            dragon,
            assignment,
            margins: report.margins,
        });
    }
    Ok((out, failure.map(|(_, e)| e)))
}

/// Pairs of boxes each player must be indifferent between, as (player, box, box).
fn tie_pairs(scenario: Scenario, tree: &LabeledTree) -> Vec<(usize, usize, usize)> {
    match scenario {
        Scenario::PieceGrab => tree.edges().iter().map(|e| (e.label, e.u, e.w)).collect(),
        Scenario::PlayerSwallow => {
            let mut pairs = Vec::new();
            for player in 1..=tree.vertex_count() {
                let incident: Vec<&TreeEdge> = tree.edges().iter().filter(|e| e.touches(player)).collect();
                for e in incident.iter().skip(1) {
                    pairs.push((player, incident[0].label, e.label));
                }
            }
            pairs
        }
    }
}

fn polish(map: &FaceMap<'_>, scenario: Scenario, tree: &LabeledTree, start: &[f64]) -> Vec<f64> {
    let profile = map.lifted.profile();
    let masses: Vec<f64> = profile.players.iter().map(|d| d.mass()).collect();
    let pairs = tie_pairs(scenario, tree);
    let f = |coords: &[f64]| {
        let values = box_values(profile, &map.face.point(coords));
        pairs
            .iter()
            .map(|&(j, a, b)| (values[j - 1][a - 1] - values[j - 1][b - 1]) / masses[j - 1])
            .collect()
    };
    solve_on_simplex(&f, start, POLISH_TOL, POLISH_EVALS, POLISH_FD_STEP).coords
}

pub(crate) fn certify(
    map: &FaceMap<'_>,
    face: &Face,
    scenario: Scenario,
    params: &Params,
    mut point: BalancedPoint,
) -> Result<Certified> {
    let min_fuzz = params.envy_tol / 10.0;
    loop {
        let pa = face.point(point.point.coords());
        let weights = map.lifted.weights_at(&pa, point.fuzz)?;
        let signs = sign_matrix(&weights, params.eps_sign);
        let tree = tree_for(scenario, &signs)?;

        let polished = face.point(&polish(map, scenario, &tree, point.point.coords()));
        let (outs, failure) = outcomes(map, scenario, &polished, &tree, params.envy_tol)?;
        if failure.is_none() {
            return Ok(Certified {
                point,
                partition: polished,
                weights,
                signs,
                tree,
                outcomes: outs,
                polished: true,
            });
        }
        let (outs, failure) = outcomes(map, scenario, &pa, &tree, params.envy_tol)?;
        let Some(failure) = failure else {
            return Ok(Certified {
                point,
                partition: pa,
                weights,
                signs,
                tree,
                outcomes: outs,
                polished: false,
            });
        };
        let next = point.fuzz / 10.0;
        if next < min_fuzz {
            return Err(failure);
        }
        log::debug!("envy check failed at fuzz {:e}; continuing to {next:e}", point.fuzz);
        let opts = SearchOptions::new(params.tol, params.budget, next, params.seed);
        point = match find_balanced_point(map, &opts) {
            Ok(p) => BalancedPoint {
                evaluations: p.evaluations + point.evaluations,
                ..p
            },
            Err(Error::SearchFailed { .. }) => return Err(failure),
            Err(e) => return Err(e),
        };
    }
}
