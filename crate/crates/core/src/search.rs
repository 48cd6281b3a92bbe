//! Balanced-point search on a simplex.
//!
//! A [`BalanceMap`] assigns to each point of `Δ^{p-1}` a `p × n` matrix of fuzzy
//! weights whose columns sum to one. Its balance vector averages the columns; we look
//! for a point where the balance vector is the barycenter.
//!
//! Maps backed by valuations are first seeded from exact tie points, which are then
//! followed to the target fuzz by moving the balance target. With three pieces a
//! winding-number bisection comes next. Last, a barycentric grid is scanned with a wide
//! fuzz and the best cells are refined with Levenberg–Marquardt while the fuzz is halved
//! down to its target value. Starts
//! run in fixed-size batches on the rayon pool; the reduction picks the smallest
//! residual and breaks ties on the lexicographically smallest point, so the thread
//! count never changes the answer.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cake::SimplexPoint;
use crate::error::{Error, Result};
use crate::ties::{defect, solve_ties, tie_systems};

pub const DEFAULT_STARTS: usize = 16;
pub const DEFAULT_EVALS_PER_START: u64 = 10_000;
const BATCH: usize = 4;
const TIE_BATCH: usize = 8;
const TIE_STARTS: usize = 3;

/// How exact ties are arranged at a solution of the underlying division problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieShape {
    /// A tree on the pieces; each player is indifferent between the ends of its edge.
    PieceTree,
    /// A tree on the players; both ends of a piece's edge rank that piece first.
    PlayerTree,
}

/// Fuzzy weights as a function of a simplex point.
pub trait BalanceMap: Sync {
    fn pieces(&self) -> usize;

    fn players(&self) -> usize;

    /// `weights[i][j]` for piece `i` and player `j` (0-based), at the given fuzz.
    fn weights_at(&self, coords: &[f64], fuzz: f64) -> Vec<Vec<f64>>;

    /// `values[j][i]`: worth of piece `i` to player `j`, divided by the player's mass.
    /// Maps backed by valuations return it so the search can seed from exact ties.
    fn piece_values(&self, _coords: &[f64]) -> Option<Vec<Vec<f64>>> {
        None
    }

    fn tie_shape(&self) -> Option<TieShape> {
        None
    }

    /// `h_i = (1/n) Σ_j f_i^j`.
    fn balance(&self, coords: &[f64], fuzz: f64) -> Vec<f64> {
        let n = self.players() as f64;
        self.weights_at(coords, fuzz)
            .iter()
            .map(|row| row.iter().sum::<f64>() / n)
            .collect()
    }
}

/// Max-norm distance of a balance vector from the barycenter.
pub fn balance_residual(balance: &[f64]) -> f64 {
    let target = 1.0 / balance.len() as f64;
    balance.iter().fold(0.0, |m, h| m.max((h - target).abs()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancedPoint {
    pub point: SimplexPoint,
    /// `‖h(point) − barycenter‖_∞`, recomputed at `fuzz`.
    pub residual: f64,
    pub fuzz: f64,
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    pub tol: f64,
    /// Total cap on balance-map evaluations.
    pub budget: u64,
    /// Target fuzz.
    pub fuzz: f64,
    pub seed: u64,
    pub starts: usize,
    pub evals_per_start: u64,
}

impl SearchOptions {
    pub fn new(tol: f64, budget: u64, fuzz: f64, seed: u64) -> Self {
        SearchOptions {
            tol,
            budget,
            fuzz,
            seed,
            starts: DEFAULT_STARTS,
            evals_per_start: DEFAULT_EVALS_PER_START,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.fuzz > 0.0) || self.budget == 0 || self.starts == 0 {
            return Err(Error::Invalid(format!(
                "search needs tol > 0, fuzz > 0, budget > 0 and starts > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Divisions per barycentric coordinate for a simplex of dimension `dim`.
fn grid_divisions(dim: usize, max_points: u64) -> usize {
    let mut d = if dim <= 2 { 32 } else { (32usize >> (dim - 2)).max(1) };
    while d > 1 && grid_size(d, dim) > max_points as f64 {
        d /= 2;
    }
    d
}

fn grid_size(d: usize, dim: usize) -> f64 {
    // C(d + dim, dim)
    (1..=dim).fold(1.0, |acc, k| acc * (d + k) as f64 / k as f64)
}

fn grid_points(d: usize, parts: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(left - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(d, parts, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / d as f64).collect())
        .collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => lex_cmp(a.1, b.1).is_lt(),
    }
}

/// Fuzz schedule: halve from the wide starting value down to the target.
fn fuzz_levels(target: f64, pieces: usize) -> Vec<f64> {
    let start = target.max(1.0 / (2.0 * pieces as f64));
    let mut levels = vec![start];
    let mut e = start;
    while e > target {
        e = (e / 2.0).max(target);
        levels.push(e);
    }
    levels
}

fn fd_step(fuzz: f64) -> f64 {
    (1e-4 * fuzz).clamp(1e-12, 1e-6)
}

/// Finds a point where the balance vector equals the barycenter within `opts.tol`.
///
/// On failure the error carries the best point found.
pub fn find_balanced_point(map: &dyn BalanceMap, opts: &SearchOptions) -> Result<BalancedPoint> {
    opts.validate()?;
    let p = map.pieces();
    if p < 2 || map.players() == 0 {
        return Err(Error::Invalid(format!(
            "cannot balance {} players over {p} pieces",
            map.players()
        )));
    }
    let divisions = grid_divisions(p - 1, (opts.budget / 2).max(1));
    let grid = grid_points(divisions, p);
    let per_start = opts.evals_per_start.min(opts.budget / opts.starts as u64).max(1);
    let mut evaluations = 0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let solved = |best: &Option<(f64, Vec<f64>)>| best.as_ref().is_some_and(|(r, _)| *r <= opts.tol);

    if let Some(shape) = map.tie_shape() {
        evaluations += seed_from_ties(map, shape, &grid, opts, per_start, &mut best);
    }
    if !solved(&best) && p == 3 && evaluations < opts.budget {
        let (res, x, used) = bisect_by_winding(map, opts.fuzz, opts.tol, opts.budget - evaluations);
        evaluations += used;
        keep_better(&mut best, res, x);
    }
    if !solved(&best) && evaluations < opts.budget {
        evaluations += grid_starts(map, &grid, divisions, opts, per_start, &mut best);
    }

    let (residual, coords) = best.expect("at least one start");
    let point = BalancedPoint {
        point: SimplexPoint::new(coords).map_err(|e| Error::Internal(e.to_string()))?,
        residual,
        fuzz: opts.fuzz,
        evaluations,
    };
    if residual <= opts.tol {
        Ok(point)
    } else {
        Err(Error::SearchFailed { best: Box::new(point) })
    }
}

fn keep_better(best: &mut Option<(f64, Vec<f64>)>, res: f64, x: Vec<f64>) {
    if best.as_ref().is_none_or(|(r, b)| better((res, &x), (*r, b))) {
        *best = Some((res, x));
    }
}

/// Scans the grid at a wide fuzz and follows the best cells down the fuzz schedule.
fn grid_starts(
    map: &dyn BalanceMap,
    grid: &[Vec<f64>],
    divisions: usize,
    opts: &SearchOptions,
    per_start: u64,
    best: &mut Option<(f64, Vec<f64>)>,
) -> u64 {
    let levels = fuzz_levels(opts.fuzz, map.pieces());
    let wide = levels[0];
    let mut scored: Vec<(f64, &Vec<f64>)> = grid
        .par_iter()
        .map(|x| (balance_residual(&map.balance(x, wide)), x))
        .collect();
    let mut used = scored.len() as u64;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(a.1, b.1)));

    let jitter = 0.5 / divisions as f64;
    let starts: Vec<Vec<f64>> = (0..opts.starts)
        .map(|k| {
            let base = scored[k % scored.len()].1;
            if k == 0 {
                return base.clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
            let moved: Vec<f64> = base.iter().map(|c| c + rng.gen_range(-jitter..=jitter)).collect();
            project_to_simplex(&moved)
        })
        .collect();

    for batch in starts.chunks(BATCH) {
        let results: Vec<(f64, Vec<f64>, u64)> = batch
            .par_iter()
            .map(|start| continuation(map, start, &levels, opts.tol, per_start))
            .collect();
        for (res, x, evals) in results {
            used += evals;
            keep_better(best, res, x);
        }
        if best.as_ref().is_some_and(|(r, _)| *r <= opts.tol) {
            break;
        }
    }
    used
}

/// Solves the exact tie systems, most promising on the grid first, and follows each
/// solution to a balanced point at the target fuzz. Stops at the first batch that
/// reaches `opts.tol`; returns the evaluations spent.
fn seed_from_ties(
    map: &dyn BalanceMap,
    shape: TieShape,
    grid: &[Vec<f64>],
    opts: &SearchOptions,
    per_start: u64,
    best: &mut Option<(f64, Vec<f64>)>,
) -> u64 {
    let p = map.pieces();
    let values = |x: &[f64]| map.piece_values(x).expect("valuation-backed map");
    let grid_values: Vec<Vec<Vec<f64>>> = grid.par_iter().map(|x| values(x)).collect();
    let mut used = grid.len() as u64;
    let systems = tie_systems(shape, p, map.players());
    let mut ranked: Vec<(f64, usize, Vec<Vec<f64>>)> = systems
        .par_iter()
        .enumerate()
        .map(|(k, pairs)| {
            let mut scores: Vec<(f64, usize)> = grid_values
                .iter()
                .enumerate()
                .map(|(g, v)| (defect(v, pairs), g))
                .collect();
            scores.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let starts = scores.iter().take(TIE_STARTS).map(|&(_, g)| grid[g].clone()).collect();
            (scores[0].0, k, starts)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for batch in ranked.chunks(TIE_BATCH) {
        if used >= opts.budget {
            break;
        }
        let results: Vec<_> = batch
            .par_iter()
            .map(|(_, k, starts)| {
                let (seed, evals) = solve_ties(&values, starts, &systems[*k]);
                let Some(seed) = seed else {
                    return (None, evals);
                };
                let (res, x, more) = target_homotopy(map, &seed, opts.fuzz, opts.tol, per_start);
                (Some((res, x)), evals + more)
            })
            .collect();
        for (found, evals) in results {
            used += evals;
            if let Some((res, x)) = found {
                keep_better(best, res, x);
            }
        }
        if best.as_ref().is_some_and(|(r, _)| *r <= opts.tol) {
            break;
        }
    }
    used
}

fn continuation(map: &dyn BalanceMap, start: &[f64], levels: &[f64], tol: f64, max_evals: u64) -> (f64, Vec<f64>, u64) {
    let mut x = start.to_vec();
    let mut used = 0;
    let share = (max_evals / levels.len() as u64).max(1);
    for (k, &fuzz) in levels.iter().enumerate() {
        let last = k + 1 == levels.len();
        let level_tol = if last { tol } else { tol.max(1e-7) };
        let budget = if last {
            max_evals.saturating_sub(used).max(share)
        } else {
            share
        };
        let f = |c: &[f64]| {
            let h = map.balance(c, fuzz);
            let t = 1.0 / h.len() as f64;
            h.into_iter().map(|v| v - t).collect::<Vec<f64>>()
        };
        let local = solve_on_simplex(&f, &x, level_tol, budget, fd_step(fuzz));
        used += local.evaluations;
        x = local.coords;
        if last {
            return (local.residual, x, used);
        }
    }
    unreachable!("levels is never empty")
}

/// Moves the balance target from `h(start)` to the barycenter in adaptive steps,
/// correcting with Levenberg–Marquardt after each one. Near an exact tie point the
/// path stays where the fuzzy weights are smooth, while a direct solve tends to
/// overshoot into a plateau.
fn target_homotopy(map: &dyn BalanceMap, start: &[f64], fuzz: f64, tol: f64, max_evals: u64) -> (f64, Vec<f64>, u64) {
    let origin = map.balance(start, fuzz);
    let target = 1.0 / origin.len() as f64;
    let mut used = 1;
    let mut x = start.to_vec();
    let (mut tau, mut step) = (0.0f64, 0.25f64);
    let mut residual = balance_residual(&origin);
    while tau < 1.0 && used < max_evals {
        let next = (tau + step).min(1.0);
        let goal: Vec<f64> = origin.iter().map(|h| (1.0 - next) * h + next * target).collect();
        let f = |c: &[f64]| {
            map.balance(c, fuzz)
                .iter()
                .zip(&goal)
                .map(|(h, g)| h - g)
                .collect::<Vec<f64>>()
        };
        let level_tol = if next == 1.0 { tol } else { tol.max(1e-10) };
        let local = solve_on_simplex(&f, &x, level_tol, max_evals - used, fd_step(fuzz));
        used += local.evaluations;
        if local.residual <= level_tol {
            tau = next;
            x = local.coords;
            residual = balance_residual(&map.balance(&x, fuzz));
            used += 1;
            step = (step * 2.0).min(0.5);
        } else {
            step /= 2.0;
            if step < 1.0 / 1024.0 {
                break;
            }
        }
    }
    (residual, x, used)
}

/// Angle of `h - b` in the plane of zero-sum vectors, for three pieces.
fn balance_angle(h: &[f64]) -> f64 {
    let (u, v) = (h[0] - 1.0 / 3.0, h[1] - 1.0 / 3.0);
    (v * 0.75f64.sqrt()).atan2(u + 0.5 * v)
}

fn wrap_angle(d: f64) -> f64 {
    let turn = std::f64::consts::TAU;
    d - turn * (d / turn).round()
}

struct Winding<'a> {
    map: &'a dyn BalanceMap,
    fuzz: f64,
    evals: u64,
    best: (f64, Vec<f64>),
}

impl Winding<'_> {
    fn angle(&mut self, x: &[f64]) -> f64 {
        let h = self.map.balance(x, self.fuzz);
        self.evals += 1;
        let res = balance_residual(&h);
        if better((res, x), (self.best.0, &self.best.1)) {
            self.best = (res, x.to_vec());
        }
        balance_angle(&h)
    }

    /// Angle swept along the segment, halving it until consecutive samples are close.
    fn sweep(&mut self, p: &[f64], q: &[f64], ap: f64, aq: f64, depth: u32) -> f64 {
        let d = wrap_angle(aq - ap);
        if d.abs() < WINDING_STEP || depth >= WINDING_DEPTH {
            return d;
        }
        let m = midpoint(p, q);
        let am = self.angle(&m);
        self.sweep(p, &m, ap, am, depth + 1) + self.sweep(&m, q, am, aq, depth + 1)
    }

    fn turns(&mut self, t: &[Vec<f64>; 3]) -> i64 {
        let a: Vec<f64> = t.iter().map(|x| self.angle(x)).collect();
        let total: f64 = (0..3)
            .map(|k| self.sweep(&t[k], &t[(k + 1) % 3], a[k], a[(k + 1) % 3], 0))
            .sum();
        (total / std::f64::consts::TAU).round() as i64
    }
}

fn midpoint(p: &[f64], q: &[f64]) -> Vec<f64> {
    p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect()
}

const WINDING_STEP: f64 = 0.3;
const WINDING_DEPTH: u32 = 48;

/// For three pieces: counts how often `h - b` winds around zero along a triangle's
/// boundary and keeps a quarter of the triangle with nonzero count, starting from the
/// whole simplex. Finds zeros in slivers that a grid steps over.
fn bisect_by_winding(map: &dyn BalanceMap, fuzz: f64, tol: f64, max_evals: u64) -> (f64, Vec<f64>, u64) {
    let mut t = [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let mut w = Winding {
        map,
        fuzz,
        evals: 0,
        best: (f64::INFINITY, t[0].clone()),
    };
    if w.turns(&t) == 0 {
        return (w.best.0, w.best.1, w.evals);
    }
    while w.best.0 > tol && w.evals < max_evals {
        let (m01, m12, m20) = (midpoint(&t[0], &t[1]), midpoint(&t[1], &t[2]), midpoint(&t[2], &t[0]));
        let quarters = [
            [t[0].clone(), m01.clone(), m20.clone()],
            [m01.clone(), t[1].clone(), m12.clone()],
            [m20.clone(), m12.clone(), t[2].clone()],
            [m01, m12, m20],
        ];
        let Some(next) = quarters.into_iter().find(|q| w.turns(q) != 0) else {
            break;
        };
        let size = (0..3).map(|i| (next[0][i] - next[1][i]).abs()).fold(0.0, f64::max);
        t = next;
        if size < 1e-15 {
            break;
        }
    }
    (w.best.0, w.best.1, w.evals)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSolution {
    pub coords: Vec<f64>,
    /// Max norm of `f` at `coords`.
    pub residual: f64,
    pub evaluations: u64,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Levenberg–Marquardt for `f(x) = 0` over the simplex.
///
/// Steps live in the chart that drops the largest coordinate, so the forward
/// differences along `e_k − e_elim` stay feasible; every trial point is projected
/// back onto the simplex.
pub fn solve_on_simplex<F>(f: &F, start: &[f64], tol: f64, max_evals: u64, fd_step: f64) -> LocalSolution
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let p = start.len();
    let mut x = project_to_simplex(start);
    let mut r = f(&x);
    let mut evals = 1u64;
    let mut cost = sq_norm(&r);
    let mut lambda = 1e-3;
    let m = r.len();

    'outer: while max_norm(&r) > tol && evals + p as u64 <= max_evals {
        let elim = (0..p).fold(0, |b, k| if x[k] > x[b] { k } else { b });
        let free: Vec<usize> = (0..p).filter(|&k| k != elim).collect();
        let mut jac = DMatrix::<f64>::zeros(m, free.len());
        for (c, &k) in free.iter().enumerate() {
            let mut y = x.clone();
            y[k] += fd_step;
            y[elim] -= fd_step;
            let ry = f(&y);
            evals += 1;
            for row in 0..m {
                jac[(row, c)] = (ry[row] - r[row]) / fd_step;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * rv;
        let scale = jtj.diagonal().iter().fold(0.0f64, |a, d| a.max(*d)).max(1e-300);
        loop {
            if evals >= max_evals {
                break 'outer;
            }
            let mut a = jtj.clone();
            for k in 0..free.len() {
                a[(k, k)] += lambda * (jtj[(k, k)] + 1e-9 * scale);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                lambda *= 4.0;
                if lambda > 1e16 {
                    break 'outer;
                }
                continue;
            };
            let mut y = x.clone();
            for (c, &k) in free.iter().enumerate() {
                y[k] += delta[c];
                y[elim] -= delta[c];
            }
            let y = project_to_simplex(&y);
            let ry = f(&y);
            evals += 1;
            let cy = sq_norm(&ry);
            if cy < cost {
                x = y;
                r = ry;
                cost = cy;
                lambda = (lambda / 3.0).max(1e-15);
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break 'outer;
            }
        }
    }
    LocalSolution {
        residual: max_norm(&r),
        coords: x,
        evaluations: evals,
    }
}

/// Euclidean projection onto `{x ≥ 0, Σ x = 1}`.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // Pin the sum to one so downstream validation at 1e-12 always passes.
    let sum: f64 = out.iter().sum();
    let big = (0..out.len()).fold(0, |b, k| if out[k] > out[b] { k } else { b });
    out[big] += 1.0 - sum;
    if out[big] < 0.0 {
        out[big] = 0.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One player, uniform density on Δ^1 without fuzz: f = (x, 1 − x).
    struct Linear;

    impl BalanceMap for Linear {
        fn pieces(&self) -> usize {
            2
        }

        fn players(&self) -> usize {
            1
        }

        fn weights_at(&self, c: &[f64], _fuzz: f64) -> Vec<Vec<f64>> {
            vec![vec![c[0]], vec![c[1]]]
        }
    }

    #[test]
    fn linear_map_balances_at_midpoint() {
        let bp = find_balanced_point(&Linear, &SearchOptions::new(1e-12, 100_000, 1e-3, 1)).unwrap();
        assert!((bp.point.coords()[0] - 0.5).abs() <= 1e-12);
        assert_eq!(bp.residual, balance_residual(&Linear.balance(bp.point.coords(), 1e-3)));
    }

    struct Constant;

    impl BalanceMap for Constant {
        fn pieces(&self) -> usize {
            2
        }

        fn players(&self) -> usize {
            1
        }

        fn weights_at(&self, _c: &[f64], _fuzz: f64) -> Vec<Vec<f64>> {
            vec![vec![1.0], vec![0.0]]
        }
    }

    #[test]
    fn unbalanceable_map_reports_best_point() {
        match find_balanced_point(&Constant, &SearchOptions::new(1e-9, 5_000, 1e-3, 1)) {
            Err(Error::SearchFailed { best }) => assert_eq!(best.residual, 0.5),
            other => panic!("expected search failure, got {other:?}"),
        }
    }

    /// Steep and clipped to the simplex, so the only zero sits in a sliver at `ZERO`.
    struct Sliver;

    const ZERO: [f64; 3] = [0.3, 0.69995, 0.00005];

    impl BalanceMap for Sliver {
        fn pieces(&self) -> usize {
            3
        }

        fn players(&self) -> usize {
            1
        }

        fn weights_at(&self, c: &[f64], _fuzz: f64) -> Vec<Vec<f64>> {
            let raw: Vec<f64> = c.iter().zip(ZERO).map(|(x, z)| 1.0 / 3.0 + 1e4 * (x - z)).collect();
            project_to_simplex(&raw).into_iter().map(|w| vec![w]).collect()
        }
    }

    #[test]
    fn winding_bisection_finds_a_sliver_zero() {
        let (res, x, evals) = bisect_by_winding(&Sliver, 1e-3, 1e-10, 100_000);
        assert!(res <= 1e-10, "{res:e} at {x:?}");
        assert!(x.iter().zip(ZERO).all(|(a, b)| (a - b).abs() < 1e-13));
        assert!(evals < 100_000);
        assert!(bisect_by_winding(&Constant3, 1e-3, 1e-12, 100_000).0 > 0.1);
    }

    struct Constant3;

    impl BalanceMap for Constant3 {
        fn pieces(&self) -> usize {
            3
        }

        fn players(&self) -> usize {
            1
        }

        fn weights_at(&self, _c: &[f64], _fuzz: f64) -> Vec<Vec<f64>> {
            vec![vec![1.0], vec![0.0], vec![0.0]]
        }
    }

    #[test]
    fn grid_respects_budget() {
        assert_eq!(grid_divisions(1, 1_000_000), 32);
        assert_eq!(grid_divisions(3, 1_000_000), 16);
        assert!(grid_size(grid_divisions(4, 50), 4) <= 50.0);
        let pts = grid_points(4, 3);
        assert_eq!(pts.len(), 15);
        assert!(pts.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fuzz_schedule_ends_at_target() {
        let levels = fuzz_levels(1e-3, 4);
        assert_eq!(levels[0], 0.125);
        assert_eq!(*levels.last().unwrap(), 1e-3);
        assert!(levels.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(fuzz_levels(0.5, 4), vec![0.5]);
    }

    #[test]
    fn newton_solves_smooth_system() {
        // x0^2 - x1 = 0 on Δ^2 with x2 = 0.1 pinned by a second equation
        let f = |x: &[f64]| vec![x[0] * x[0] - x[1], x[2] - 0.1];
        let sol = solve_on_simplex(&f, &[0.3, 0.3, 0.4], 1e-13, 1000, 1e-7);
        assert!(sol.residual <= 1e-13, "{sol:?}");
        let expected = (-1.0 + (1.0f64 + 3.6).sqrt()) / 2.0;
        assert!((sol.coords[0] - expected).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn projection_lands_on_simplex(v in proptest::collection::vec(-2.0f64..2.0, 1..8)) {
            let x = project_to_simplex(&v);
            proptest::prop_assert!(x.iter().all(|c| *c >= 0.0));
            proptest::prop_assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            // projection of a simplex point is itself
            let again = project_to_simplex(&x);
            for (a, b) in x.iter().zip(&again) {
                proptest::prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
