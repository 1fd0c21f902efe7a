//! Finite-horizon values `s_k = [Sᵏ d(·, x₀)](x₀)` and Fekete estimates.
//!
//! `s_k` is the value of the `k`-round game whose payoff is `d(x_k, x₀)`.
//! It is subadditive in `k`, so `ρ = inf_k s_k / k` and every running
//! minimum of `s_k / k` is an upper bound on the game value.

use serde::Serialize;

use crate::dynamics::{GameInstance, Role};
use crate::error::{Error, Result};
use crate::hemimetric::Point;
use crate::search::{self, AlternatingGame, Budget};

impl AlternatingGame for GameInstance {
    type State = Point;

    fn n_min(&self) -> usize {
        self.family().n_min()
    }

    fn n_max(&self) -> usize {
        self.family().n_max()
    }

    fn max_first(&self) -> bool {
        GameInstance::max_first(self)
    }

    fn step(&self, s: &Point, a: usize, b: usize) -> Point {
        GameInstance::step(self, a, b, s)
    }

    fn leaf(&self, s: &Point) -> f64 {
        self.payoff(s)
    }
}

/// Exact value of the `k`-round game from `x₀`.
pub fn exact_value(instance: &GameInstance, k: usize) -> Result<f64> {
    exact_value_from(instance, instance.base_point(), k)
}

/// `[Sᵏ d(·, x₀)](start)`: the `k`-round value starting from `start`.
pub fn exact_value_from(instance: &GameInstance, start: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("horizon must be >= 1".into()));
    }
    instance.space().validate(start)?;
    let budget = Budget::new(instance.node_budget());
    search::alphabeta(instance, &start.to_vec(), k, &budget)
}

/// Same value as [`exact_value`], computed without pruning.
pub fn exact_value_unpruned(instance: &GameInstance, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("horizon must be >= 1".into()));
    }
    let budget = Budget::new(instance.node_budget());
    search::minimax(instance, &instance.base_point().to_vec(), k, &budget)
}

/// `α = [S(−d(x₀, ·))](x₀)`, a per-step lower bound: `s_k ≥ k·α`.
pub fn one_step_alpha(instance: &GameInstance) -> f64 {
    let x0 = instance.base_point();
    let score = |a, b| -instance.dist(x0, &instance.step(a, b, x0));
    let (na, nb) = (instance.n_min(), instance.n_max());
    if instance.max_first() {
        (0..nb)
            .map(|b| (0..na).map(|a| score(a, b)).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        (0..na)
            .map(|a| (0..nb).map(|b| score(a, b)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Table of `s_k` for `k = 1..=horizon` with running minima of `s_k / k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeketeEstimate {
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub running_min: Vec<f64>,
    pub horizon: usize,
}

impl FeketeEstimate {
    /// Certified upper bound `min_{k ≤ K} s_k / k` on the game value.
    pub fn rho_hat(&self) -> f64 {
        self.running_min.last().copied().unwrap_or(f64::INFINITY)
    }

    fn push(&mut self, s: f64) {
        let k = self.values.len() + 1;
        let r = s / k as f64;
        let m = self.running_min.last().map_or(r, |&m| m.min(r));
        self.values.push(s);
        self.ratios.push(r);
        self.running_min.push(m);
        self.horizon = k;
    }

    /// Checks `s_{k+l} ≤ s_k + s_l + tol` for every stored pair.
    pub fn check_subadditive(&self, tol: f64) -> Result<()> {
        let s = &self.values;
        for k in 1..=s.len() {
            for l in 1..=(s.len() - k) {
                let lhs = s[k + l - 1];
                let rhs = s[k - 1] + s[l - 1];
                if lhs > rhs + tol {
                    return Err(Error::InvariantViolation(format!(
                        "s_{} = {lhs} exceeds s_{k} + s_{l} = {rhs}",
                        k + l
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Computes `s_1..s_K`. On failure returns the values computed so far
/// alongside the error.
pub fn fekete_partial(instance: &GameInstance, horizon: usize) -> (FeketeEstimate, Option<Error>) {
    let mut est = FeketeEstimate {
        values: Vec::with_capacity(horizon),
        ratios: Vec::with_capacity(horizon),
        running_min: Vec::with_capacity(horizon),
        horizon: 0,
    };
    if horizon == 0 {
        return (est, Some(Error::Precondition("horizon must be >= 1".into())));
    }
    for k in 1..=horizon {
        match exact_value(instance, k) {
            Ok(s) => est.push(s),
            Err(e) => return (est, Some(e)),
        }
    }
    let err = est.check_subadditive(1e-9).err();
    (est, err)
}

pub fn fekete(instance: &GameInstance, horizon: usize) -> Result<FeketeEstimate> {
    match fekete_partial(instance, horizon) {
        (est, None) => Ok(est),
        (_, Some(e)) => Err(e),
    }
}

/// Node of an explicit decision tree for the `q`-round game.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionNode {
    Leaf {
        value: f64,
    },
    Choice {
        mover: Role,
        value: f64,
        /// Optimal action, lowest index on ties.
        best: usize,
        /// One subtree per action of `mover`.
        children: Vec<DecisionNode>,
    },
}

impl DecisionNode {
    pub fn value(&self) -> f64 {
        match self {
            DecisionNode::Leaf { value } | DecisionNode::Choice { value, .. } => *value,
        }
    }
}

/// Exact optimal play of the `q`-round game, both players, every history.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub horizon: usize,
    pub root: DecisionNode,
    pub max_first: bool,
}

impl DecisionTree {
    pub fn value(&self) -> f64 {
        self.root.value()
    }

    /// Walks the tree along `history` (completed rounds of the current
    /// game) and, if the opponent already moved this round, along `pending`.
    fn node_at(&self, history: &[(usize, usize)], pending: Option<usize>) -> Option<&DecisionNode> {
        let mut node = &self.root;
        let moves = history
            .iter()
            .flat_map(|&(a, b)| if self.max_first { [b, a] } else { [a, b] })
            .chain(pending);
        for m in moves {
            match node {
                DecisionNode::Choice { children, .. } => node = children.get(m)?,
                DecisionNode::Leaf { .. } => return None,
            }
        }
        Some(node)
    }

    fn best_for(&self, role: Role, history: &[(usize, usize)], pending: Option<usize>) -> Option<usize> {
        match self.node_at(history, pending)? {
            DecisionNode::Choice { mover, best, .. } if *mover == role => Some(*best),
            _ => None,
        }
    }

    /// Min's optimal action after `history`; `pending_b` is Max's move of
    /// the current round when Max moves first.
    pub fn min_action(&self, history: &[(usize, usize)], pending_b: Option<usize>) -> Option<usize> {
        self.best_for(Role::Min, history, pending_b)
    }

    /// Max's best reply; `pending_a` is Min's move of the current round
    /// when Min moves first.
    pub fn max_action(&self, history: &[(usize, usize)], pending_a: Option<usize>) -> Option<usize> {
        self.best_for(Role::Max, history, pending_a)
    }
}

/// Builds the full decision tree of the `q`-round game by plain minimax.
pub fn optimal_horizon_strategy(instance: &GameInstance, q: usize) -> Result<DecisionTree> {
    if q == 0 {
        return Err(Error::Precondition("horizon must be >= 1".into()));
    }
    let budget = Budget::new(instance.node_budget());
    let root = build_round(instance, instance.base_point(), q, &budget)?;
    Ok(DecisionTree {
        horizon: q,
        root,
        max_first: instance.max_first(),
    })
}

fn build_round(g: &GameInstance, x: &[f64], depth: usize, budget: &Budget) -> Result<DecisionNode> {
    if depth == 0 {
        return Ok(DecisionNode::Leaf { value: g.payoff(x) });
    }
    let (na, nb) = (g.n_min(), g.n_max());
    budget.charge((na * nb) as u64)?;
    let (first, n_first, n_second) = if g.max_first() {
        (Role::Max, nb, na)
    } else {
        (Role::Min, na, nb)
    };
    let second = match first {
        Role::Min => Role::Max,
        Role::Max => Role::Min,
    };
    let mut outer = Vec::with_capacity(n_first);
    for i in 0..n_first {
        let mut inner = Vec::with_capacity(n_second);
        for j in 0..n_second {
            let (a, b) = if first == Role::Min { (i, j) } else { (j, i) };
            inner.push(build_round(g, &g.step(a, b, x), depth - 1, budget)?);
        }
        outer.push(choice(second, inner));
    }
    Ok(choice(first, outer))
}

fn choice(mover: Role, children: Vec<DecisionNode>) -> DecisionNode {
    let mut best = 0;
    for (i, c) in children.iter().enumerate().skip(1) {
        let better = match mover {
            Role::Min => c.value() < children[best].value(),
            Role::Max => c.value() > children[best].value(),
        };
        if better {
            best = i;
        }
    }
    DecisionNode::Choice {
        mover,
        value: children[best].value(),
        best,
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MapFamily;
    use crate::hemimetric::{MetricKind, MetricSpace};
    use crate::linalg::{from_rows, Matrix};
    use std::f64::consts::LN_2;

    fn diag(a: f64, b: f64) -> Matrix {
        from_rows(&[vec![a, 0.0], vec![0.0, b]])
    }

    fn orthant(min: Vec<Matrix>, max: Vec<Matrix>) -> GameInstance {
        let space = MetricSpace::new(MetricKind::OrthantFunk, 2).unwrap();
        GameInstance::new(space, MapFamily::nonneg_matrices(min, max).unwrap(), None, false).unwrap()
    }

    fn translations(min: Vec<Point>, max: Vec<Point>) -> GameInstance {
        let space = MetricSpace::new(MetricKind::NormedEuclidean, 2).unwrap();
        GameInstance::new(space, MapFamily::translations(min, max).unwrap(), None, false).unwrap()
    }

    #[test]
    fn exact_value_examples() {
        let d = orthant(vec![diag(1.0, 1.0)], vec![diag(2.0, 1.0)]);
        assert!((exact_value(&d, 3).unwrap() - 3.0 * LN_2).abs() < 1e-12);

        let id = orthant(vec![diag(1.0, 1.0), diag(1.0, 1.0)], vec![diag(1.0, 1.0)]);
        for k in 1..=5 {
            assert_eq!(exact_value(&id, k).unwrap(), 0.0);
        }

        let tft = translations(vec![vec![0.0, -1.0]], vec![vec![0.0, 1.0]]);
        for k in 1..=6 {
            assert_eq!(exact_value(&tft, k).unwrap(), 0.0);
        }
        assert!(exact_value(&tft, 0).is_err());
    }

    #[test]
    fn fekete_examples() {
        let d = orthant(vec![diag(1.0, 1.0)], vec![diag(2.0, 1.0)]);
        let est = fekete(&d, 6).unwrap();
        assert!(est.ratios.iter().all(|r| (r - LN_2).abs() < 1e-12));
        assert!((est.rho_hat() - LN_2).abs() < 1e-12);

        let id = orthant(vec![diag(1.0, 1.0)], vec![diag(1.0, 1.0)]);
        let est = fekete(&id, 4).unwrap();
        assert!(est.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn resource_error_reports_partial_table() {
        let inst = orthant(
            vec![diag(1.0, 1.0), diag(1.0, 2.0)],
            vec![diag(2.0, 1.0), diag(1.0, 3.0)],
        )
        .with_node_budget(2_000);
        let (est, err) = fekete_partial(&inst, 10);
        assert!(matches!(err, Some(Error::NodeBudgetExceeded { .. })));
        assert!(est.horizon >= 1 && est.horizon < 10);
    }

    #[test]
    fn decision_tree_examples() {
        let inst = translations(vec![vec![-1.0, 0.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0]]);
        let tree = optimal_horizon_strategy(&inst, 1).unwrap();
        assert_eq!(tree.min_action(&[], None), Some(0));
        assert!((tree.value() - 2f64.sqrt()).abs() < 1e-15);

        let single = orthant(vec![diag(1.0, 1.0)], vec![diag(2.0, 1.0)]);
        let tree = optimal_horizon_strategy(&single, 2).unwrap();
        assert_eq!(tree.min_action(&[], None), Some(0));
        assert_eq!(tree.max_action(&[(0, 0)], Some(0)), Some(0));
        assert!((tree.value() - 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn max_first_swaps_order() {
        // Min can cancel Max's move only if it sees it.
        let inst = |max_first| {
            let space = MetricSpace::new(MetricKind::NormedEuclidean, 1).unwrap();
            let fam = MapFamily::translations(vec![vec![-1.0], vec![1.0]], vec![vec![-1.0], vec![1.0]]).unwrap();
            GameInstance::new(space, fam, None, max_first).unwrap()
        };
        assert_eq!(exact_value(&inst(false), 1).unwrap(), 2.0);
        assert_eq!(exact_value(&inst(true), 1).unwrap(), 0.0);
        let tree = optimal_horizon_strategy(&inst(true), 2).unwrap();
        assert_eq!(tree.value(), 0.0);
        assert_eq!(tree.min_action(&[], Some(1)), Some(0));
        assert_eq!(tree.min_action(&[], Some(0)), Some(1));
    }
}
