//! Dragon resolution by rooting the decision tree, and an envy check that only looks
//! at the valuations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chessboard::PartitionAllocation;
use crate::error::{Error, Result};
use crate::tree::{root_tree, Assignment, LabeledTree};
use crate::valuation::ValuationProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// `r - 1` players; the dragon grabs one of `r` boxes first.
    PieceGrab,
    /// `r + 1` players; the dragon swallows one of them.
    PlayerSwallow,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::PieceGrab => "piece-grab",
            Scenario::PlayerSwallow => "player-swallow",
        }
    }

    /// Number of boxes for a profile with `players` players.
    pub fn boxes_for(self, players: usize) -> Result<usize> {
        match self {
            Scenario::PieceGrab if players >= 1 => Ok(players + 1),
            Scenario::PlayerSwallow if players >= 3 => Ok(players - 1),
            _ => Err(Error::Invalid(format!(
                "{players} players do not fit the {} scenario",
                self.name()
            ))),
        }
    }

    pub fn dragon_choices(self, r: usize) -> usize {
        match self {
            Scenario::PieceGrab => r,
            Scenario::PlayerSwallow => r + 1,
        }
    }
}

/// The dragon grabs `dragon_box`; player `j` takes the endpoint of its edge away from it.
pub fn resolve_piece_grab(tree: &LabeledTree, dragon_box: usize) -> Result<Assignment> {
    let map = root_tree(tree, dragon_box)?
        .into_iter()
        .map(|(vertex, edge)| (edge.label, vertex))
        .collect();
    Ok(Assignment {
        dragon: dragon_box,
        map,
    })
}

/// The dragon swallows `swallowed`; every survivor takes the box labeling its parent edge.
pub fn resolve_player_swallow(tree: &LabeledTree, swallowed: usize) -> Result<Assignment> {
    let map = root_tree(tree, swallowed)?
        .into_iter()
        .map(|(vertex, edge)| (vertex, edge.label))
        .collect();
    Ok(Assignment { dragon: swallowed, map })
}

/// `values[j][b]`: worth of box `b + 1` to player `j + 1`.
pub fn box_values(profile: &ValuationProfile, pa: &PartitionAllocation) -> Vec<Vec<f64>> {
    let tiles = pa.tiles();
    profile
        .players
        .iter()
        .map(|d| {
            let mut boxes = vec![0.0; pa.r()];
            for (t, &b) in tiles.iter().zip(&pa.alloc) {
                boxes[b - 1] += d.value(t);
            }
            boxes
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvyReport {
    /// Own value minus the best other box, per surviving player.
    pub margins: BTreeMap<usize, f64>,
    pub min_margin: f64,
    pub worst_player: usize,
    pub passed: bool,
}

fn check_consistency(players: usize, r: usize, scenario: Scenario, assignment: &Assignment) -> Result<()> {
    let expected_players = match scenario {
        Scenario::PieceGrab => r - 1,
        Scenario::PlayerSwallow => r + 1,
    };
    if players != expected_players {
        return Err(Error::Invalid(format!(
            "{players} players with {r} boxes do not fit the {} scenario",
            scenario.name()
        )));
    }
    let dragon_max = scenario.dragon_choices(r);
    if assignment.dragon == 0 || assignment.dragon > dragon_max {
        return Err(Error::OutOfRange {
            index: assignment.dragon,
            max: dragon_max,
        });
    }
    let survivors: BTreeSet<usize> = match scenario {
        Scenario::PieceGrab => (1..=players).collect(),
        Scenario::PlayerSwallow => (1..=players).filter(|&j| j != assignment.dragon).collect(),
    };
    let keys: BTreeSet<usize> = assignment.map.keys().copied().collect();
    if keys != survivors {
        return Err(Error::Invalid(format!(
            "assignment covers players {keys:?}, expected {survivors:?}"
        )));
    }
    let boxes: BTreeSet<usize> = assignment.map.values().copied().collect();
    if boxes.len() != assignment.map.len() {
        return Err(Error::Invalid("assignment gives one box to two players".into()));
    }
    let expected_boxes: BTreeSet<usize> = match scenario {
        Scenario::PieceGrab => (1..=r).filter(|&b| b != assignment.dragon).collect(),
        Scenario::PlayerSwallow => (1..=r).collect(),
    };
    if boxes != expected_boxes {
        return Err(Error::Invalid(format!(
            "assignment uses boxes {boxes:?}, expected {expected_boxes:?}"
        )));
    }
    Ok(())
}

/// Margins of every surviving player: own box minus the best other box, the dragon's
/// box and empty boxes (worth 0) included.
pub fn verify_envy_free(
    profile: &ValuationProfile,
    pa: &PartitionAllocation,
    scenario: Scenario,
    assignment: &Assignment,
    tol: f64,
) -> Result<EnvyReport> {
    let r = pa.r();
    check_consistency(profile.player_count(), r, scenario, assignment)?;
    let values = box_values(profile, pa);
    let mut margins = BTreeMap::new();
    for (&player, &own) in &assignment.map {
        let row = &values[player - 1];
        let best_other = (1..=r)
            .filter(|&b| b != own)
            .map(|b| row[b - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        margins.insert(player, row[own - 1] - best_other);
    }
    let (worst_player, min_margin) = margins
        .iter()
        .fold((0, f64::INFINITY), |acc, (&j, &m)| if m < acc.1 { (j, m) } else { acc });
    Ok(EnvyReport {
        passed: min_margin >= -tol,
        margins,
        min_margin,
        worst_player,
    })
}
