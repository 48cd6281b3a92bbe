//! Small bipartite-graph routines: augmenting-path matching, Hall violators,
//! and a max-flow based surplus minimization.

use std::collections::VecDeque;

/// Bipartite graph with left vertices `0..adj.len()` and right vertices `0..right`.
#[derive(Clone, Debug)]
pub(crate) struct Bipartite {
    adj: Vec<Vec<usize>>,
    right: usize,
}

impl Bipartite {
    pub(crate) fn new(adj: Vec<Vec<usize>>, right: usize) -> Self {
        Bipartite { adj, right }
    }

    pub(crate) fn left_len(&self) -> usize {
        self.adj.len()
    }

    /// Maximum matching that never uses the right vertex `banned`.
    /// Returns, for each left vertex, its matched right vertex.
    pub(crate) fn max_matching(&self, banned: Option<usize>) -> Vec<Option<usize>> {
        let mut match_right: Vec<Option<usize>> = vec![None; self.right];
        let mut match_left: Vec<Option<usize>> = vec![None; self.adj.len()];
        for v in 0..self.adj.len() {
            let mut seen = vec![false; self.right];
            self.augment(v, banned, &mut seen, &mut match_right, &mut match_left);
        }
        match_left
    }

    fn augment(
        &self,
        v: usize,
        banned: Option<usize>,
        seen: &mut [bool],
        match_right: &mut [Option<usize>],
        match_left: &mut [Option<usize>],
    ) -> bool {
        for &to in &self.adj[v] {
            if Some(to) == banned || seen[to] {
                continue;
            }
            seen[to] = true;
            let free = match match_right[to] {
                None => true,
                Some(u) => self.augment(u, banned, seen, match_right, match_left),
            };
            if free {
                match_right[to] = Some(v);
                match_left[v] = Some(to);
                return true;
            }
        }
        false
    }

    /// Given a maximum matching that leaves some left vertex unmatched, returns the
    /// left vertices reachable from it by alternating paths. That set `S` satisfies
    /// `|N(S) \ {banned}| = |S| - 1`.
    pub(crate) fn hall_violator(&self, match_left: &[Option<usize>], banned: Option<usize>) -> Option<Vec<usize>> {
        let start = match_left.iter().position(Option::is_none)?;
        let mut match_right = vec![None; self.right];
        for (l, r) in match_left.iter().enumerate() {
            if let Some(r) = r {
                match_right[*r] = Some(l);
            }
        }
        let mut in_set = vec![false; self.adj.len()];
        let mut seen_right = vec![false; self.right];
        let mut queue = VecDeque::from([start]);
        in_set[start] = true;
        while let Some(v) = queue.pop_front() {
            for &to in &self.adj[v] {
                if Some(to) == banned || seen_right[to] {
                    continue;
                }
                seen_right[to] = true;
                // A maximum matching has no augmenting path, so `to` is matched.
                if let Some(u) = match_right[to] {
                    if !in_set[u] {
                        in_set[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        Some((0..self.adj.len()).filter(|&i| in_set[i]).collect())
    }

    /// Minimizes `|N(T)| - |T|` over left sets `T` with `forced ⊆ T` and `excluded ∉ T`.
    ///
    /// Min cut in the network `s → left (1, or ∞ when forced) → right (∞) → t (1)`
    /// with `excluded` removed equals `(m - 1) + min (|N(T)| - |T|)`; the source
    /// side of the cut is a minimizer.
    pub(crate) fn min_surplus(&self, forced: &[usize], excluded: usize) -> (i64, Vec<usize>) {
        let m = self.adj.len();
        let n = self.right;
        let nodes = m + n + 2;
        let (s, t) = (0, m + n + 1);
        let inf = (m + n + 1) as i64 * 4;
        let mut cap = vec![vec![0i64; nodes]; nodes];
        for l in 0..m {
            if l == excluded {
                continue;
            }
            cap[s][1 + l] = if forced.contains(&l) { inf } else { 1 };
            for &r in &self.adj[l] {
                cap[1 + l][1 + m + r] = inf;
            }
        }
        for r in 0..n {
            cap[1 + m + r][t] = 1;
        }
        let mut flow = 0i64;
        loop {
            let mut prev = vec![usize::MAX; nodes];
            prev[s] = s;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for to in 0..nodes {
                    if prev[to] == usize::MAX && cap[v][to] > 0 {
                        prev[to] = v;
                        queue.push_back(to);
                    }
                }
            }
            if prev[t] == usize::MAX {
                let side: Vec<usize> = (0..m).filter(|&l| prev[1 + l] != usize::MAX).collect();
                return (flow - (m as i64 - 1), side);
            }
            let mut push = i64::MAX;
            let mut v = t;
            while v != s {
                push = push.min(cap[prev[v]][v]);
                v = prev[v];
            }
            let mut v = t;
            while v != s {
                cap[prev[v]][v] -= push;
                cap[v][prev[v]] += push;
                v = prev[v];
            }
            flow += push;
        }
    }
}
