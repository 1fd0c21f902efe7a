//! Strategies and a deterministic play simulator.
//!
//! Each round, the player moving second sees the other's action for that
//! round. Deterministic strategies see the full action history; randomized
//! ones draw from a per-role ChaCha stream derived from the simulation seed.

use std::io::{self, Write};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{GameInstance, Role};
use crate::error::{Error, Result};
use crate::hemimetric::{Norm, Point};
use crate::horizon::{self, DecisionTree};
use crate::simplex_iter::GridFunction;
use crate::vecadd;

/// Function used by stationary strategies to score positions.
#[derive(Debug, Clone)]
pub enum ValueFunction {
    /// `x ↦ ⟨ℓ, x⟩`.
    Linear(Point),
    /// `x ↦ log⟨x, 1⟩ + ṽ(x / ⟨x, 1⟩)` on the open orthant.
    LiftedGrid(GridFunction),
    /// Distance to the hull of `points`.
    HullDistance { points: Vec<Point>, norm: Norm },
}

impl ValueFunction {
    /// `φ(x) = dist(x, −(n+1)·co A)` for a vector addition game.
    pub fn phi(min_actions: &[Point], norm: Norm) -> Result<Self> {
        let n = min_actions
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Precondition("empty action set".into()))?;
        let c = -((n + 1) as f64);
        Ok(ValueFunction::HullDistance {
            points: min_actions.iter().map(|a| a.iter().map(|v| c * v).collect()).collect(),
            norm,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            ValueFunction::Linear(l) => {
                if l.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: l.len(),
                        found: x.len(),
                    });
                }
                Ok(l.iter().zip(x).map(|(a, b)| a * b).sum())
            }
            ValueFunction::LiftedGrid(v) => {
                if x.len() != v.grid().dim() {
                    return Err(Error::DimensionMismatch {
                        expected: v.grid().dim(),
                        found: x.len(),
                    });
                }
                crate::hemimetric::check_positive(x)?;
                Ok(v.lift(x))
            }
            ValueFunction::HullDistance { points, norm } => Ok(vecadd::project_hull(x, points, *norm)?.distance),
        }
    }
}

/// Lazily built optimal trees for `Γ_1, Γ_2, …`.
#[derive(Debug)]
pub struct TreeFactory {
    instance: GameInstance,
    trees: Mutex<Vec<Arc<DecisionTree>>>,
}

impl TreeFactory {
    pub fn new(instance: GameInstance) -> Self {
        Self {
            instance,
            trees: Mutex::new(Vec::new()),
        }
    }

    /// Tree of the `q`-round game, `q ≥ 1`.
    pub fn tree(&self, q: usize) -> Result<Arc<DecisionTree>> {
        let mut trees = self.trees.lock().expect("tree cache poisoned");
        while trees.len() < q {
            let t = horizon::optimal_horizon_strategy(&self.instance, trees.len() + 1)?;
            trees.push(Arc::new(t));
        }
        Ok(Arc::clone(&trees[q - 1]))
    }
}

#[derive(Debug, Clone)]
pub enum StrategyKind {
    MaxStationaryFromV(ValueFunction),
    MinStationaryFromV(ValueFunction),
    MinQCyclic {
        q: usize,
        tree: Arc<DecisionTree>,
    },
    MinIncreasingPeriod(Arc<TreeFactory>),
    ConstantAction(usize),
    /// Uniform over actions, driven by the simulation seed.
    UniformRandom,
    GreedyOneStep,
}

#[derive(Debug, Clone)]
pub struct Strategy {
    role: Role,
    kind: StrategyKind,
}

/// What a player sees when choosing an action.
#[derive(Debug, Clone, Copy)]
pub struct Turn<'a> {
    pub instance: &'a GameInstance,
    /// Zero-based round index.
    pub round: usize,
    pub history: &'a [(usize, usize)],
    pub state: &'a [f64],
    /// Opponent's action this round, when the opponent moves first.
    pub pending: Option<usize>,
}

fn argbest<F: FnMut(usize) -> Result<f64>>(n: usize, maximize: bool, mut f: F) -> Result<usize> {
    let mut best = (0, f(0)?);
    for i in 1..n {
        let v = f(i)?;
        if (maximize && v > best.1) || (!maximize && v < best.1) {
            best = (i, v);
        }
    }
    Ok(best.0)
}

/// `argmax_b v(T_ab x)` given Min's action, or `argmax_b min_a v(T_ab x)`
/// when Max moves first. Ties go to the lowest index.
pub fn max_stationary_move(instance: &GameInstance, v: &ValueFunction, x: &[f64], a: Option<usize>) -> Result<usize> {
    let score = |a: usize, b: usize| v.eval(&instance.step(a, b, x));
    argbest(instance.n_max(), true, |b| match a {
        Some(a) => score(a, b),
        None => (0..instance.n_min()).try_fold(f64::INFINITY, |m, a| Ok(m.min(score(a, b)?))),
    })
}

/// `argmin_a max_b v(T_ab x)`, or `argmin_a v(T_ab x)` when Max's action
/// is known. Ties go to the lowest index.
pub fn min_stationary_move(instance: &GameInstance, v: &ValueFunction, x: &[f64], b: Option<usize>) -> Result<usize> {
    let score = |a: usize, b: usize| v.eval(&instance.step(a, b, x));
    argbest(instance.n_min(), false, |a| match b {
        Some(b) => score(a, b),
        None => (0..instance.n_max()).try_fold(f64::NEG_INFINITY, |m, b| Ok(m.max(score(a, b)?))),
    })
}

fn greedy_move(t: &Turn<'_>, role: Role) -> Result<usize> {
    let inst = t.instance;
    let d = |a: usize, b: usize| inst.payoff(&inst.step(a, b, t.state));
    Ok(match role {
        Role::Min => argbest(inst.n_min(), false, |a| {
            Ok(match t.pending {
                Some(b) => d(a, b),
                None => (0..inst.n_max()).map(|b| d(a, b)).fold(f64::NEG_INFINITY, f64::max),
            })
        })?,
        Role::Max => argbest(inst.n_max(), true, |b| {
            Ok(match t.pending {
                Some(a) => d(a, b),
                None => (0..inst.n_min()).map(|a| d(a, b)).fold(f64::INFINITY, f64::min),
            })
        })?,
    })
}

/// Length-`q` blocks `1, 2, 3, …`: returns `(q, offset)` for a round.
fn increasing_block(round: usize) -> (usize, usize) {
    let mut q = 1;
    let mut start = 0;
    while start + q <= round {
        start += q;
        q += 1;
    }
    (q, round - start)
}

fn tree_move(tree: &DecisionTree, block: &[(usize, usize)], pending: Option<usize>) -> Result<usize> {
    tree.min_action(block, pending)
        .ok_or_else(|| Error::InvariantViolation("history left the decision tree".into()))
}

impl Strategy {
    pub fn new(role: Role, kind: StrategyKind) -> Result<Self> {
        let needed = match &kind {
            StrategyKind::MaxStationaryFromV(_) => Some(Role::Max),
            StrategyKind::MinStationaryFromV(_)
            | StrategyKind::MinQCyclic { .. }
            | StrategyKind::MinIncreasingPeriod(_) => Some(Role::Min),
            _ => None,
        };
        match needed {
            Some(r) if r != role => Err(Error::Precondition(format!("strategy kind is for {r:?}, not {role:?}"))),
            _ => Ok(Self { role, kind }),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn kind(&self) -> &StrategyKind {
        &self.kind
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self.kind, StrategyKind::UniformRandom)
    }

    pub fn choose<R: Rng + ?Sized>(&self, t: &Turn<'_>, rng: &mut R) -> Result<usize> {
        let n = match self.role {
            Role::Min => t.instance.n_min(),
            Role::Max => t.instance.n_max(),
        };
        let pick = match &self.kind {
            StrategyKind::MaxStationaryFromV(v) => max_stationary_move(t.instance, v, t.state, t.pending)?,
            StrategyKind::MinStationaryFromV(v) => min_stationary_move(t.instance, v, t.state, t.pending)?,
            StrategyKind::MinQCyclic { q, tree } => {
                let offset = t.round % q;
                tree_move(tree, &t.history[t.round - offset..], t.pending)?
            }
            StrategyKind::MinIncreasingPeriod(factory) => {
                let (q, offset) = increasing_block(t.round);
                let tree = factory.tree(q)?;
                tree_move(&tree, &t.history[t.round - offset..], t.pending)?
            }
            StrategyKind::ConstantAction(i) => *i,
            StrategyKind::UniformRandom => rng.random_range(0..n),
            StrategyKind::GreedyOneStep => greedy_move(t, self.role)?,
        };
        if pick >= n {
            return Err(Error::ActionOutOfRange {
                role: match self.role {
                    Role::Min => "min",
                    Role::Max => "max",
                },
                index: pick,
                len: n,
            });
        }
        Ok(pick)
    }
}

/// Min replays the optimal `Γ_q` tree, restarting its history every `q` rounds.
pub fn min_qcyclic(instance: &GameInstance, q: usize) -> Result<Strategy> {
    let tree = Arc::new(horizon::optimal_horizon_strategy(instance, q)?);
    Strategy::new(Role::Min, StrategyKind::MinQCyclic { q, tree })
}

/// Min plays `Γ_1, Γ_2, Γ_3, …` optimally in consecutive blocks.
pub fn min_increasing(instance: &GameInstance) -> Result<Strategy> {
    Strategy::new(
        Role::Min,
        StrategyKind::MinIncreasingPeriod(Arc::new(TreeFactory::new(instance.clone()))),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayTrace {
    /// `x₀, …, x_K`.
    pub states: Vec<Point>,
    /// `(a_k, b_k)` for `k = 1..=K`.
    pub actions: Vec<(usize, usize)>,
    /// `J_k = d(x_k, x₀)` for `k = 1..=K`.
    pub payoffs: Vec<f64>,
    /// `J_k / k`.
    pub ratios: Vec<f64>,
}

impl PlayTrace {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    /// Replays the actions and checks `J_k ≤ J_j + M·(k − j)`.
    pub fn check_consistency(&self, instance: &GameInstance, tol: f64) -> Result<()> {
        let mut x = instance.base_point().to_vec();
        for (k, &(a, b)) in self.actions.iter().enumerate() {
            x = instance.step(a, b, &x);
            if x != self.states[k + 1] {
                return Err(Error::InvariantViolation(format!(
                    "state {} does not match replay",
                    k + 1
                )));
            }
        }
        let m = instance.one_step_bound();
        let j: Vec<f64> = std::iter::once(0.0).chain(self.payoffs.iter().copied()).collect();
        for k in 1..j.len() {
            for i in 0..k {
                if j[k] > j[i] + m * (k - i) as f64 + tol {
                    return Err(Error::InvariantViolation(format!(
                        "J_{k} = {} exceeds J_{i} + {}·M",
                        j[k],
                        k - i
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV with header `k,a,b,payoff,ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,a,b,payoff,ratio")?;
        for (i, &(a, b)) in self.actions.iter().enumerate() {
            writeln!(w, "{},{a},{b},{},{}", i + 1, self.payoffs[i], self.ratios[i])?;
        }
        Ok(())
    }
}

fn role_rng(seed: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(match role {
        Role::Min => 0,
        Role::Max => 1,
    });
    rng
}

/// Plays `steps` rounds of `sigma` (Min) against `tau` (Max) from `x₀`.
pub fn simulate(
    instance: &GameInstance,
    sigma: &Strategy,
    tau: &Strategy,
    steps: usize,
    seed: u64,
) -> Result<PlayTrace> {
    if sigma.role != Role::Min || tau.role != Role::Max {
        return Err(Error::Precondition("sigma must play Min and tau Max".into()));
    }
    let mut rng_min = role_rng(seed, Role::Min);
    let mut rng_max = role_rng(seed, Role::Max);
    let mut states = vec![instance.base_point().to_vec()];
    let mut actions: Vec<(usize, usize)> = Vec::with_capacity(steps);
    let mut payoffs = Vec::with_capacity(steps);
    let mut ratios = Vec::with_capacity(steps);
    for round in 0..steps {
        let x = states.last().expect("nonempty");
        let turn = |pending| Turn {
            instance,
            round,
            history: &actions,
            state: x,
            pending,
        };
        let (a, b) = if instance.max_first() {
            let b = tau.choose(&turn(None), &mut rng_max)?;
            (sigma.choose(&turn(Some(b)), &mut rng_min)?, b)
        } else {
            let a = sigma.choose(&turn(None), &mut rng_min)?;
            (a, tau.choose(&turn(Some(a)), &mut rng_max)?)
        };
        let y = instance.step(a, b, x);
        let j = instance.payoff(&y);
        payoffs.push(j);
        ratios.push(j / (round + 1) as f64);
        actions.push((a, b));
        states.push(y);
    }
    Ok(PlayTrace {
        states,
        actions,
        payoffs,
        ratios,
    })
}

/// Runs independent simulations concurrently; results follow input order.
pub fn simulate_batch(
    instance: &GameInstance,
    jobs: &[(&Strategy, &Strategy, u64)],
    steps: usize,
) -> Vec<Result<PlayTrace>> {
    jobs.par_iter()
        .map(|(s, t, seed)| simulate(instance, s, t, steps, *seed))
        .collect()
}

/// For a deterministic Min strategy, the largest `J_k` over every Max
/// action sequence, for `k = 1..=steps`.
pub fn exhaustive_max_replies(instance: &GameInstance, sigma: &Strategy, steps: usize) -> Result<Vec<f64>> {
    if sigma.role != Role::Min || !sigma.is_deterministic() {
        return Err(Error::Precondition("needs a deterministic Min strategy".into()));
    }
    let nb = instance.n_max() as u64;
    let leaves = (1..=steps as u32).try_fold(0u64, |acc, k| nb.checked_pow(k).and_then(|p| acc.checked_add(p)));
    match leaves {
        Some(n) if n <= instance.node_budget() => {}
        _ => {
            return Err(Error::NodeBudgetExceeded {
                budget: instance.node_budget(),
            })
        }
    }
    let mut best = vec![f64::NEG_INFINITY; steps];
    let mut history = Vec::with_capacity(steps);
    let mut rng = role_rng(0, Role::Min);
    dfs_replies(
        instance,
        sigma,
        instance.base_point(),
        &mut history,
        &mut best,
        &mut rng,
    )?;
    Ok(best)
}

fn dfs_replies(
    instance: &GameInstance,
    sigma: &Strategy,
    x: &[f64],
    history: &mut Vec<(usize, usize)>,
    best: &mut [f64],
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let round = history.len();
    if round == best.len() {
        return Ok(());
    }
    for b in 0..instance.n_max() {
        let turn = Turn {
            instance,
            round,
            history,
            state: x,
            pending: if instance.max_first() { Some(b) } else { None },
        };
        let a = sigma.choose(&turn, rng)?;
        let y = instance.step(a, b, x);
        best[round] = best[round].max(instance.payoff(&y));
        history.push((a, b));
        dfs_replies(instance, sigma, &y, history, best, rng)?;
        history.pop();
    }
    Ok(())
}
