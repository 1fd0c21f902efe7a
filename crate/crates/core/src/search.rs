//! Depth-first alternating minimax over finite action sets.
//!
//! One round is a Min move and a Max move (Max first when the game says
//! so), followed by a state transition. Leaves are scored after the last
//! round. Root actions are searched independently in parallel with full
//! windows, so the number of visited nodes, and hence budget exhaustion,
//! does not depend on the worker count.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub(crate) trait AlternatingGame: Sync {
    type State: Clone + Send + Sync;

    fn n_min(&self) -> usize;
    fn n_max(&self) -> usize;
    fn max_first(&self) -> bool;
    fn step(&self, s: &Self::State, a: usize, b: usize) -> Self::State;
    fn leaf(&self, s: &Self::State) -> f64;
}

pub(crate) struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Budget {
    pub(crate) fn new(limit: u64) -> Self {
        Self {
            limit,
            used: AtomicU64::new(0),
        }
    }

    #[inline]
    pub(crate) fn charge(&self, n: u64) -> Result<()> {
        let used = self.used.fetch_add(n, Ordering::Relaxed) + n;
        if used > self.limit {
            Err(Error::NodeBudgetExceeded { budget: self.limit })
        } else {
            Ok(())
        }
    }
}

struct Expanded<S> {
    // children[a][b]
    children: Vec<Vec<S>>,
    scores: Vec<Vec<f64>>,
}

fn expand<G: AlternatingGame>(g: &G, s: &G::State, budget: &Budget) -> Result<Expanded<G::State>> {
    let (na, nb) = (g.n_min(), g.n_max());
    budget.charge((na * nb) as u64)?;
    let mut children = Vec::with_capacity(na);
    let mut scores = Vec::with_capacity(na);
    for a in 0..na {
        let row: Vec<G::State> = (0..nb).map(|b| g.step(s, a, b)).collect();
        scores.push(row.iter().map(|c| g.leaf(c)).collect());
        children.push(row);
    }
    Ok(Expanded { children, scores })
}

fn sorted_by(keys: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    // stable: ties keep lowest index first
    idx.sort_by(|&i, &j| {
        let o = keys[i].total_cmp(&keys[j]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    idx
}

/// Value of the `depth`-round game from `start`, with alpha-beta pruning.
pub(crate) fn alphabeta<G: AlternatingGame>(g: &G, start: &G::State, depth: usize, budget: &Budget) -> Result<f64> {
    if depth == 0 {
        return Ok(g.leaf(start));
    }
    if g.n_min() == 1 && g.n_max() == 1 {
        return single_path(g, start, depth, budget);
    }
    let ex = expand(g, start, budget)?;
    if depth == 1 {
        return Ok(one_round(g, &ex.scores));
    }
    let rec = |s: &G::State| ab(g, s, depth - 1, f64::NEG_INFINITY, f64::INFINITY, budget);
    let (na, nb) = (g.n_min(), g.n_max());
    if !g.max_first() {
        let vals: Vec<Result<f64>> = (0..na)
            .into_par_iter()
            .map(|a| {
                let mut best = f64::NEG_INFINITY;
                for b in 0..nb {
                    best = best.max(rec(&ex.children[a][b])?);
                }
                Ok(best)
            })
            .collect();
        fold_results(vals, f64::INFINITY, f64::min)
    } else {
        let vals: Vec<Result<f64>> = (0..nb)
            .into_par_iter()
            .map(|b| {
                let mut best = f64::INFINITY;
                for a in 0..na {
                    best = best.min(rec(&ex.children[a][b])?);
                }
                Ok(best)
            })
            .collect();
        fold_results(vals, f64::NEG_INFINITY, f64::max)
    }
}

fn fold_results(vals: Vec<Result<f64>>, init: f64, f: fn(f64, f64) -> f64) -> Result<f64> {
    let mut acc = init;
    for v in vals {
        acc = f(acc, v?);
    }
    Ok(acc)
}

fn single_path<G: AlternatingGame>(g: &G, start: &G::State, depth: usize, budget: &Budget) -> Result<f64> {
    budget.charge(depth as u64)?;
    let mut s = start.clone();
    for _ in 0..depth {
        s = g.step(&s, 0, 0);
    }
    Ok(g.leaf(&s))
}

fn one_round<G: AlternatingGame>(g: &G, scores: &[Vec<f64>]) -> f64 {
    let (na, nb) = (g.n_min(), g.n_max());
    if !g.max_first() {
        (0..na)
            .map(|a| scores[a].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    } else {
        (0..nb)
            .map(|b| (0..na).map(|a| scores[a][b]).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn ab<G: AlternatingGame>(g: &G, s: &G::State, depth: usize, alpha: f64, beta: f64, budget: &Budget) -> Result<f64> {
    if depth == 0 {
        return Ok(g.leaf(s));
    }
    let ex = expand(g, s, budget)?;
    if depth == 1 {
        return Ok(one_round(g, &ex.scores));
    }
    let (na, nb) = (g.n_min(), g.n_max());
    if !g.max_first() {
        // Min orders by the best one-step reply of Max, Max by its one-step gain.
        let min_keys: Vec<f64> = (0..na)
            .map(|a| ex.scores[a].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut value = f64::INFINITY;
        for a in sorted_by(&min_keys, false) {
            let beta_a = beta.min(value);
            let mut inner = f64::NEG_INFINITY;
            for b in sorted_by(&ex.scores[a], true) {
                let v = ab(g, &ex.children[a][b], depth - 1, alpha.max(inner), beta_a, budget)?;
                inner = inner.max(v);
                if inner >= beta_a {
                    break;
                }
            }
            value = value.min(inner);
            if value <= alpha {
                break;
            }
        }
        Ok(value)
    } else {
        let max_keys: Vec<f64> = (0..nb)
            .map(|b| (0..na).map(|a| ex.scores[a][b]).fold(f64::INFINITY, f64::min))
            .collect();
        let mut value = f64::NEG_INFINITY;
        for b in sorted_by(&max_keys, true) {
            let alpha_b = alpha.max(value);
            let col: Vec<f64> = (0..na).map(|a| ex.scores[a][b]).collect();
            let mut inner = f64::INFINITY;
            for a in sorted_by(&col, false) {
                let v = ab(g, &ex.children[a][b], depth - 1, alpha_b, beta.min(inner), budget)?;
                inner = inner.min(v);
                if inner <= alpha_b {
                    break;
                }
            }
            value = value.max(inner);
            if value >= beta {
                break;
            }
        }
        Ok(value)
    }
}

/// Plain minimax without pruning; reference for the pruned search.
pub(crate) fn minimax<G: AlternatingGame>(g: &G, s: &G::State, depth: usize, budget: &Budget) -> Result<f64> {
    if depth == 0 {
        return Ok(g.leaf(s));
    }
    let (na, nb) = (g.n_min(), g.n_max());
    budget.charge((na * nb) as u64)?;
    let mut table = vec![vec![0.0; nb]; na];
    for (a, row) in table.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = minimax(g, &g.step(s, a, b), depth - 1, budget)?;
        }
    }
    Ok(one_round(g, &table))
}
