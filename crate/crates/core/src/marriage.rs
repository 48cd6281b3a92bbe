//! Hall's theorem with a dragon: `n - 1` sets over `[n]`.
//!
//! For sets `J_1, …, J_{n-1} ⊆ [n]` the following are equivalent:
//!
//! 1. every `k` of the sets jointly cover at least `k + 1` elements;
//! 2. for every `j ∈ [n]` the family has a system of distinct representatives avoiding `j`;
//! 3. there are pairs `{a_i, b_i} ⊆ J_i` forming the edges of a spanning tree on `[n]`.
//!
//! Condition (1) is always checked through (2), i.e. `n` bipartite matchings.
//! [`spanning_tree_representatives`] builds (3) constructively by induction on the
//! incidence graph: drop incidences while (1) survives, split along a maximal tight
//! set as soon as one exists, solve both halves, and glue them at a shared vertex.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::Bipartite;
use crate::tree::Dsu;

/// Largest `n` accepted by [`brute_force_tree_representatives`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// `n - 1` subsets of `[n]`, duplicates allowed. Sets and elements are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFamily {
    n: usize,
    sets: Vec<Vec<usize>>,
}

impl SetFamily {
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("a set family needs n >= 2, got {n}")));
        }
        if sets.len() != n - 1 {
            return Err(Error::Invalid(format!(
                "expected {} sets over [{n}], got {}",
                n - 1,
                sets.len()
            )));
        }
        let mut clean = Vec::with_capacity(sets.len());
        for (i, set) in sets.into_iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&x| x == 0 || x > n) {
                return Err(Error::Invalid(format!("set {} contains {bad}, outside [{n}]", i + 1)));
            }
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            clean.push(set);
        }
        Ok(SetFamily { n, sets: clean })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    fn incidence(&self) -> Incidence {
        Incidence {
            left: (1..self.n).collect(),
            right: (1..=self.n).collect(),
            edges: self
                .sets
                .iter()
                .enumerate()
                .flat_map(|(i, s)| s.iter().map(move |&j| (i + 1, j)))
                .collect(),
        }
    }
}

/// Pairs `e_i = {a_i, b_i} ⊆ J_i` (stored with `a_i < b_i`) forming a spanning tree on `[n]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentativeTree {
    pub pairs: Vec<(usize, usize)>,
}

impl RepresentativeTree {
    /// Whether the pairs are drawn from the family's sets and form a spanning tree.
    pub fn is_valid_for(&self, family: &SetFamily) -> bool {
        if self.pairs.len() != family.sets.len() {
            return false;
        }
        let mut dsu = Dsu::new(family.n + 1);
        self.pairs.iter().zip(&family.sets).all(|(&(a, b), set)| {
            a != b && set.binary_search(&a).is_ok() && set.binary_search(&b).is_ok() && dsu.union(a, b)
        })
    }
}

/// Condition (1), decided through (2).
pub fn check_dragon_condition(family: &SetFamily) -> bool {
    family.incidence().violation().is_none()
}

/// A violating collection of set indices `S` with `|⋃_{i∈S} J_i| <= |S|`, if any.
pub fn dragon_condition_witness(family: &SetFamily) -> Option<Vec<usize>> {
    family.incidence().violation()
}

/// Distinct representatives `r_i ∈ J_i`, all different from `avoid`.
pub fn sdr_avoiding(family: &SetFamily, avoid: usize) -> Result<Option<Vec<usize>>> {
    if avoid == 0 || avoid > family.n {
        return Err(Error::OutOfRange {
            index: avoid,
            max: family.n,
        });
    }
    let inc = family.incidence();
    let g = inc.graph();
    let matching = g.max_matching(Some(avoid - 1));
    Ok(matching.into_iter().map(|m| m.map(|r| r + 1)).collect())
}

/// Constructive form of condition (3).
///
/// Fails with [`Error::ConditionViolated`] carrying a witness `S` when condition (1) does not hold.
pub fn spanning_tree_representatives(family: &SetFamily) -> Result<RepresentativeTree> {
    let inc = family.incidence();
    if let Some(witness) = inc.violation() {
        return Err(Error::ConditionViolated { witness });
    }
    let pairs = inc.solve()?;
    let tree = RepresentativeTree {
        pairs: (1..family.n).map(|i| pairs[&i]).collect(),
    };
    if !tree.is_valid_for(family) {
        return Err(Error::Internal(format!(
            "constructed pairs {:?} are not a valid tree",
            tree.pairs
        )));
    }
    Ok(tree)
}

/// Exhaustive search over all choices of pairs, returning the lexicographically first
/// choice that forms a spanning tree.
pub fn brute_force_tree_representatives(family: &SetFamily) -> Result<Option<RepresentativeTree>> {
    if family.n > BRUTE_FORCE_MAX_N {
        return Err(Error::Capacity(format!(
            "brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {}",
            family.n
        )));
    }
    let choices: Vec<Vec<(usize, usize)>> = family
        .sets
        .iter()
        .map(|s| {
            let mut pairs = Vec::new();
            for (k, &a) in s.iter().enumerate() {
                for &b in &s[k + 1..] {
                    pairs.push((a, b));
                }
            }
            pairs
        })
        .collect();
    let mut chosen = Vec::with_capacity(choices.len());
    let found = search_pairs(&choices, &mut chosen, &Dsu::new(family.n + 1));
    Ok(found.then_some(RepresentativeTree { pairs: chosen }))
}

fn search_pairs(choices: &[Vec<(usize, usize)>], chosen: &mut Vec<(usize, usize)>, dsu: &Dsu) -> bool {
    let depth = chosen.len();
    if depth == choices.len() {
        return true;
    }
    for &(a, b) in &choices[depth] {
        let mut next = dsu.clone();
        if !next.union(a, b) {
            continue;
        }
        chosen.push((a, b));
        if search_pairs(choices, chosen, &next) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Bipartite incidence graph between set labels (left) and elements (right),
/// both kept in their original 1-based numbering. Always `|right| = |left| + 1`.
#[derive(Clone, Debug)]
struct Incidence {
    left: Vec<usize>,
    right: Vec<usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl Incidence {
    fn graph(&self) -> Bipartite {
        let pos: BTreeMap<usize, usize> = self.right.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        let lpos: BTreeMap<usize, usize> = self.left.iter().enumerate().map(|(k, &l)| (l, k)).collect();
        let mut adj = vec![Vec::new(); self.left.len()];
        for &(i, j) in &self.edges {
            if let (Some(&li), Some(&rj)) = (lpos.get(&i), pos.get(&j)) {
                adj[li].push(rj);
            }
        }
        Bipartite::new(adj, self.right.len())
    }

    /// Left labels of a Hall-type violator, or `None` if condition (1) holds.
    fn violation(&self) -> Option<Vec<usize>> {
        let g = self.graph();
        for k in 0..self.right.len() {
            let matching = g.max_matching(Some(k));
            if let Some(s) = g.hall_violator(&matching, Some(k)) {
                return Some(s.into_iter().map(|l| self.left[l]).collect());
            }
        }
        None
    }

    fn neighborhood(&self, set: &[usize]) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|(i, _)| set.contains(i))
            .map(|&(_, j)| j)
            .collect()
    }

    /// Removes incidences in lexicographic order while condition (1) survives.
    #[cfg(test)]
    fn minimalize(&mut self) {
        let order: Vec<(usize, usize)> = self.edges.iter().copied().collect();
        for e in order {
            self.edges.remove(&e);
            if self.violation().is_some() {
                self.edges.insert(e);
            }
        }
    }

    fn restricted(&self, left: Vec<usize>, right: Vec<usize>) -> Incidence {
        let edges = self
            .edges
            .iter()
            .filter(|(i, j)| left.contains(i) && right.contains(j))
            .copied()
            .collect();
        Incidence { left, right, edges }
    }

    /// All sets have exactly two elements; under (1) those pairs are acyclic, hence a tree.
    fn forced_pairs(&self) -> Option<BTreeMap<usize, (usize, usize)>> {
        let mut elems: BTreeMap<usize, Vec<usize>> = self.left.iter().map(|&l| (l, Vec::new())).collect();
        for &(i, j) in &self.edges {
            elems.get_mut(&i).expect("edge from known label").push(j);
        }
        elems
            .into_iter()
            .map(|(l, d)| (d.len() == 2).then(|| (l, (d[0], d[1]))))
            .collect()
    }

    /// Pair for every left label; requires condition (1).
    ///
    /// Induction on the number of incidences: while no proper tight set exists, drop the
    /// lexicographically first incidence whose removal keeps (1). An inclusion-minimal
    /// graph is already the forced tree, so the split happens as soon as it is available.
    fn solve(mut self) -> Result<BTreeMap<usize, (usize, usize)>> {
        loop {
            if let Some(pairs) = self.forced_pairs() {
                return Ok(pairs);
            }
            if let Some(tight) = self.maximal_tight_set() {
                return self.split(tight);
            }
            let removable = self.edges.iter().copied().find(|e| {
                let mut reduced = self.clone();
                reduced.edges.remove(e);
                reduced.violation().is_none()
            });
            match removable {
                Some(e) => {
                    self.edges.remove(&e);
                }
                None => return Err(Error::Internal("minimal graph is neither forced nor splittable".into())),
            }
        }
    }

    fn split(&self, tight: Vec<usize>) -> Result<BTreeMap<usize, (usize, usize)>> {
        let n_tight = self.neighborhood(&tight);
        if n_tight.len() != tight.len() + 1 {
            return Err(Error::Internal(format!(
                "tight set {tight:?} has neighborhood of size {}",
                n_tight.len()
            )));
        }
        let rest: Vec<usize> = self.left.iter().copied().filter(|l| !tight.contains(l)).collect();
        let n_rest = self.neighborhood(&rest);
        let connector = *n_tight
            .intersection(&n_rest)
            .next()
            .ok_or_else(|| Error::Internal("tight set shares no element with its complement".into()))?;

        let first = self.restricted(tight, n_tight.iter().copied().collect());
        let mut outside: Vec<usize> = self.right.iter().copied().filter(|j| !n_tight.contains(j)).collect();
        outside.push(connector);
        outside.sort_unstable();
        let second = self.restricted(rest, outside);
        for part in [&first, &second] {
            if let Some(w) = part.violation() {
                return Err(Error::Internal(format!(
                    "sub-problem lost the marriage condition at {w:?}"
                )));
            }
        }
        let mut pairs = first.solve()?;
        pairs.extend(second.solve()?);
        Ok(pairs)
    }

    /// Tight sets are proper nonempty `I` with `|G[I]| = |I| + 1`. Candidates come from
    /// the Hall violators that appear when single incidences are deleted (falling back to
    /// a surplus minimization when none shows up); the largest, lexicographically smallest
    /// on ties, is then grown until no proper tight superset exists.
    fn maximal_tight_set(&self) -> Option<Vec<usize>> {
        let mut candidates: Vec<Vec<usize>> = Vec::new();
        for &e in &self.edges {
            let mut reduced = self.clone();
            reduced.edges.remove(&e);
            if let Some(mut s) = reduced.violation() {
                s.sort_unstable();
                if s.len() < self.left.len() && self.neighborhood(&s).len() == s.len() + 1 {
                    candidates.push(s);
                }
            }
        }
        let g = self.graph();
        let index: BTreeMap<usize, usize> = self.left.iter().enumerate().map(|(k, &l)| (l, k)).collect();
        if candidates.is_empty() {
            'pairs: for a in 0..g.left_len() {
                for b in 0..g.left_len() {
                    if a == b {
                        continue;
                    }
                    let (surplus, set) = g.min_surplus(&[a], b);
                    if surplus == 1 {
                        let mut s: Vec<usize> = set.into_iter().map(|k| self.left[k]).collect();
                        s.sort_unstable();
                        candidates.push(s);
                        break 'pairs;
                    }
                }
            }
        }
        let mut tight = candidates
            .into_iter()
            .min_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)))?;

        'grow: loop {
            let inside: Vec<usize> = tight.iter().map(|l| index[l]).collect();
            let outside: Vec<usize> = (0..g.left_len()).filter(|k| !inside.contains(k)).collect();
            for &add in &outside {
                for &excluded in &outside {
                    if excluded == add {
                        continue;
                    }
                    let mut forced = inside.clone();
                    forced.push(add);
                    let (surplus, set) = g.min_surplus(&forced, excluded);
                    if surplus == 1 {
                        tight = set.into_iter().map(|k| self.left[k]).collect();
                        tight.sort_unstable();
                        continue 'grow;
                    }
                }
            }
            break;
        }
        Some(tight)
    }
}
