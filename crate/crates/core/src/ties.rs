//! Exact tie points used to seed the balanced-point search.
//!
//! At small fuzz a balanced point sits next to a point where every player is exactly
//! indifferent between the pieces its tree element names, and those pieces are its
//! best. Such points solve a square piecewise-linear system once the tree is fixed, so
//! we enumerate labeled trees and solve each system from the grid points where it
//! nearly holds.

use crate::search::{solve_on_simplex, TieShape};

const TIE_TOL: f64 = 1e-12;
const TIE_EVALS: u64 = 400;
const TIE_FD_STEP: f64 = 1e-8;
/// Slack allowed when checking that tied pieces are a player's best.
const BEST_SLACK: f64 = 1e-9;

/// `(player, piece, piece)` triples, 0-based, that must be tied at the top.
pub(crate) type TiePairs = Vec<(usize, usize, usize)>;

/// All trees on `m` vertices, decoded from Prüfer sequences in lexicographic order.
fn trees(m: usize) -> Vec<Vec<(usize, usize)>> {
    if m < 2 {
        return Vec::new();
    }
    if m == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut out = Vec::new();
    let mut seq = vec![0usize; m - 2];
    loop {
        out.push(prufer_decode(&seq, m));
        let mut k = seq.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            seq[k] += 1;
            if seq[k] < m {
                break;
            }
            seq[k] = 0;
        }
    }
}

fn prufer_decode(seq: &[usize], m: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; m];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(m - 1);
    for &v in seq {
        let leaf = (0..m).find(|&u| degree[u] == 1).expect("a leaf exists");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..m).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Every tie system for the given shape, in a fixed order.
pub(crate) fn tie_systems(shape: TieShape, pieces: usize, players: usize) -> Vec<TiePairs> {
    let (vertices, labels) = match shape {
        TieShape::PieceTree => (pieces, players),
        TieShape::PlayerTree => (players, pieces),
    };
    if vertices != labels + 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for tree in trees(vertices) {
        let mut perm: Vec<usize> = (0..labels).collect();
        loop {
            out.push(pairs_for(shape, &tree, &perm, vertices));
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }
    out
}

fn pairs_for(shape: TieShape, tree: &[(usize, usize)], labels: &[usize], vertices: usize) -> TiePairs {
    match shape {
        TieShape::PieceTree => tree.iter().zip(labels).map(|(&(u, w), &j)| (j, u, w)).collect(),
        TieShape::PlayerTree => {
            let mut pairs = Vec::new();
            for player in 0..vertices {
                let incident: Vec<usize> = tree
                    .iter()
                    .zip(labels)
                    .filter(|((u, w), _)| *u == player || *w == player)
                    .map(|(_, &piece)| piece)
                    .collect();
                for &piece in incident.iter().skip(1) {
                    pairs.push((player, incident[0], piece));
                }
            }
            pairs
        }
    }
}

/// How far a tie system is from holding: the largest gap between a player's best piece
/// and the worse of the two pieces it must be tied on.
pub(crate) fn defect(values: &[Vec<f64>], pairs: &TiePairs) -> f64 {
    pairs.iter().fold(0.0, |m, &(j, a, b)| {
        let best = values[j].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m.max(best - values[j][a].min(values[j][b]))
    })
}

/// Solves one tie system from each start in turn; returns the first point where every
/// tie holds and the tied pieces are best, together with the evaluations spent.
pub(crate) fn solve_ties<F>(values: &F, starts: &[Vec<f64>], pairs: &TiePairs) -> (Option<Vec<f64>>, u64)
where
    F: Fn(&[f64]) -> Vec<Vec<f64>> + ?Sized,
{
    let f = |x: &[f64]| {
        let v = values(x);
        pairs.iter().map(|&(j, a, b)| v[j][a] - v[j][b]).collect::<Vec<f64>>()
    };
    let mut evals = 0;
    for start in starts {
        let local = solve_on_simplex(&f, start, TIE_TOL, TIE_EVALS, TIE_FD_STEP);
        evals += local.evaluations + 1;
        if local.residual <= 1e-10 && defect(&values(&local.coords), pairs) <= BEST_SLACK {
            return (Some(local.coords), evals);
        }
    }
    (None, evals)
}
