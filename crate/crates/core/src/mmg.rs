//! Matrix multiplication games and joint spectral radius/subradius brackets.
//!
//! Min picks `A_a`, Max picks `B_b`, and after `k` rounds Max receives
//! `log‖A_{a₁}B_{b₁}⋯A_{a_k}B_{b_k}‖`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::DEFAULT_NODE_BUDGET;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, MatrixNorm};
use crate::search::{self, AlternatingGame, Budget};

fn check_family(sets: &[&[Matrix]]) -> Result<usize> {
    let first = sets
        .iter()
        .find_map(|s| s.first())
        .ok_or_else(|| Error::InvalidFamily("empty matrix set".into()))?;
    let n = first.nrows();
    for s in sets {
        if s.is_empty() {
            return Err(Error::InvalidFamily("empty matrix set".into()));
        }
        for m in s.iter() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidFamily(format!(
                    "expected {n}x{n} matrices, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
    }
    Ok(n)
}

fn log_norm(norm: MatrixNorm, m: &Matrix) -> f64 {
    let v = norm.of(m);
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Matrix product game with the running product as state.
#[derive(Debug, Clone)]
pub struct ProductGame {
    min: Vec<Matrix>,
    max: Vec<Matrix>,
    norm: MatrixNorm,
    max_first: bool,
    node_budget: u64,
}

impl ProductGame {
    pub fn new(min: Vec<Matrix>, max: Vec<Matrix>, norm: MatrixNorm) -> Result<Self> {
        check_family(&[&min, &max])?;
        Ok(Self {
            min,
            max,
            norm,
            max_first: false,
            node_budget: DEFAULT_NODE_BUDGET,
        })
    }

    pub fn with_max_first(mut self, max_first: bool) -> Self {
        self.max_first = max_first;
        self
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = budget;
        self
    }

    pub fn dim(&self) -> usize {
        self.min[0].nrows()
    }

    pub fn norm(&self) -> MatrixNorm {
        self.norm
    }
}

impl AlternatingGame for ProductGame {
    type State = Matrix;

    fn n_min(&self) -> usize {
        self.min.len()
    }

    fn n_max(&self) -> usize {
        self.max.len()
    }

    fn max_first(&self) -> bool {
        self.max_first
    }

    fn step(&self, s: &Matrix, a: usize, b: usize) -> Matrix {
        s * &self.min[a] * &self.max[b]
    }

    fn leaf(&self, s: &Matrix) -> f64 {
        log_norm(self.norm, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductValue {
    /// `(1/k)·log` of the minimax product norm.
    pub value: f64,
    pub horizon: usize,
    /// True when the value is `−∞` because optimal play reaches a zero product.
    pub degenerate: bool,
}

/// `min_{a₁} max_{b₁} ⋯ (1/k)·log‖A_{a₁}B_{b₁}⋯A_{a_k}B_{b_k}‖`.
pub fn product_game_value(game: &ProductGame, k: usize) -> Result<ProductValue> {
    if k == 0 {
        return Err(Error::Precondition("horizon must be >= 1".into()));
    }
    let budget = Budget::new(game.node_budget);
    let start = Matrix::identity(game.dim(), game.dim());
    let v = search::alphabeta(game, &start, k, &budget)?;
    Ok(ProductValue {
        value: v / k as f64,
        horizon: k,
        degenerate: v == f64::NEG_INFINITY,
    })
}

/// Unpruned search returning the value and the principal line of play
/// `(a_i, b_i)`, ties to the lowest index.
pub fn product_game_line(game: &ProductGame, k: usize) -> Result<(f64, Vec<(usize, usize)>)> {
    if k == 0 {
        return Err(Error::Precondition("horizon must be >= 1".into()));
    }
    let budget = Budget::new(game.node_budget);
    let start = Matrix::identity(game.dim(), game.dim());
    let (v, line) = line_search(game, &start, k, &budget)?;
    Ok((v / k as f64, line))
}

fn line_search(game: &ProductGame, s: &Matrix, depth: usize, budget: &Budget) -> Result<(f64, Vec<(usize, usize)>)> {
    if depth == 0 {
        return Ok((game.leaf(s), Vec::new()));
    }
    let (na, nb) = (game.min.len(), game.max.len());
    budget.charge((na * nb) as u64)?;
    let mut table = Vec::with_capacity(na);
    for a in 0..na {
        let mut row = Vec::with_capacity(nb);
        for b in 0..nb {
            row.push(line_search(game, &game.step(s, a, b), depth - 1, budget)?);
        }
        table.push(row);
    }
    let pick = |rows: Vec<(usize, usize)>, better: fn(f64, f64) -> bool| {
        rows.into_iter()
            .reduce(|x, y| {
                if better(table[y.0][y.1].0, table[x.0][x.1].0) {
                    y
                } else {
                    x
                }
            })
            .expect("nonempty")
    };
    let (a, b) = if game.max_first {
        let per_b: Vec<(usize, usize)> = (0..nb)
            .map(|b| pick((0..na).map(|a| (a, b)).collect(), |x, y| x < y))
            .collect();
        pick(per_b, |x, y| x > y)
    } else {
        let per_a: Vec<(usize, usize)> = (0..na)
            .map(|a| pick((0..nb).map(|b| (a, b)).collect(), |x, y| x > y))
            .collect();
        pick(per_a, |x, y| x < y)
    };
    let (v, mut rest) = table[a][b].clone();
    rest.insert(0, (a, b));
    Ok((v, rest))
}

/// A word over a matrix set and its ordered product.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductNode {
    pub word: Vec<usize>,
    pub product: Matrix,
}

impl ProductNode {
    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn of_word(word: &[usize], set: &[Matrix]) -> Result<Self> {
        let n = check_family(&[set])?;
        let mut product = Matrix::identity(n, n);
        for &i in word {
            let m = set.get(i).ok_or(Error::ActionOutOfRange {
                role: "word",
                index: i,
                len: set.len(),
            })?;
            product *= m;
        }
        Ok(Self {
            word: word.to_vec(),
            product,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsrBracket {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
    pub norm: MatrixNorm,
}

/// Extremes over all words of one length.
#[derive(Debug, Clone, Copy)]
struct Level {
    max_norm: f64,
    min_norm: f64,
    max_rate: f64,
    min_rate: f64,
    min_row_sum: f64,
}

impl Level {
    const EMPTY: Level = Level {
        max_norm: f64::NEG_INFINITY,
        min_norm: f64::INFINITY,
        max_rate: f64::NEG_INFINITY,
        min_rate: f64::INFINITY,
        min_row_sum: f64::INFINITY,
    };

    fn merge(self, o: Level) -> Level {
        Level {
            max_norm: self.max_norm.max(o.max_norm),
            min_norm: self.min_norm.min(o.min_norm),
            max_rate: self.max_rate.max(o.max_rate),
            min_rate: self.min_rate.min(o.min_rate),
            min_row_sum: self.min_row_sum.min(o.min_row_sum),
        }
    }
}

fn words_up_to(m: usize, depth: usize) -> u64 {
    let mut total: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..depth {
        level = level.saturating_mul(m as u64);
        total = total.saturating_add(level);
    }
    total
}

fn enumerate(set: &[Matrix], depth: usize, norm: MatrixNorm) -> Result<Vec<Level>> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be >= 1".into()));
    }
    check_family(&[set])?;
    let budget = DEFAULT_NODE_BUDGET;
    if words_up_to(set.len(), depth) > budget {
        return Err(Error::NodeBudgetExceeded { budget });
    }
    fn dfs(set: &[Matrix], p: &Matrix, d: usize, depth: usize, norm: MatrixNorm, out: &mut [Level]) {
        let nrm = norm.of(p);
        let rate = linalg::spectral_radius(p).powf(1.0 / d as f64);
        let here = Level {
            max_norm: nrm,
            min_norm: nrm,
            max_rate: rate,
            min_rate: rate,
            min_row_sum: linalg::min_row_sum(p),
        };
        out[d - 1] = out[d - 1].merge(here);
        if d < depth {
            for m in set {
                dfs(set, &(p * m), d + 1, depth, norm, out);
            }
        }
    }
    let per_prefix: Vec<Vec<Level>> = set
        .par_iter()
        .map(|m| {
            let mut out = vec![Level::EMPTY; depth];
            dfs(set, m, 1, depth, norm, &mut out);
            out
        })
        .collect();
    let mut levels = vec![Level::EMPTY; depth];
    for part in per_prefix {
        for (l, p) in levels.iter_mut().zip(part) {
            *l = l.merge(p);
        }
    }
    Ok(levels)
}

/// Bracket on the joint spectral radius from all words of length ≤ `depth`.
pub fn jsr_bracket(set: &[Matrix], depth: usize, norm: MatrixNorm) -> Result<JsrBracket> {
    let levels = enumerate(set, depth, norm)?;
    let lower = levels.iter().map(|l| l.max_rate).fold(0.0, f64::max);
    let upper = levels
        .iter()
        .enumerate()
        .map(|(i, l)| l.max_norm.powf(1.0 / (i + 1) as f64))
        .fold(f64::INFINITY, f64::min);
    Ok(JsrBracket {
        lower,
        upper,
        depth,
        norm,
    })
}

/// Bracket on the joint spectral subradius. Upper bounds come from
/// spectral radii of words and from minimal product norms; for
/// nonnegative sets the supermultiplicative minimal row sum gives the
/// lower bound, otherwise it is 0.
pub fn jssr_bracket(set: &[Matrix], depth: usize, norm: MatrixNorm) -> Result<JsrBracket> {
    let levels = enumerate(set, depth, norm)?;
    let by_norm = levels
        .iter()
        .enumerate()
        .map(|(i, l)| l.min_norm.powf(1.0 / (i + 1) as f64))
        .fold(f64::INFINITY, f64::min);
    let by_radius = levels.iter().map(|l| l.min_rate).fold(f64::INFINITY, f64::min);
    let lower = if set.iter().all(linalg::is_nonnegative) {
        levels
            .iter()
            .enumerate()
            .map(|(i, l)| l.min_row_sum.max(0.0).powf(1.0 / (i + 1) as f64))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(JsrBracket {
        lower,
        upper: by_norm.min(by_radius),
        depth,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;
    use std::f64::consts::LN_2;

    fn upper() -> Matrix {
        from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]])
    }

    fn lower() -> Matrix {
        from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]])
    }

    #[test]
    fn product_value_examples() {
        let id = Matrix::identity(2, 2);
        let g = ProductGame::new(vec![id.clone()], vec![id.clone() * 2.0], MatrixNorm::SupRow).unwrap();
        for k in [1, 4, 9] {
            assert!((product_game_value(&g, k).unwrap().value - LN_2).abs() < 1e-12);
        }

        let g = ProductGame::new(vec![id.clone()], vec![upper(), lower()], MatrixNorm::SupRow).unwrap();
        let v = product_game_value(&g, 10).unwrap();
        let log_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!(v.value >= log_phi - 1e-12 && !v.degenerate);

        let g = ProductGame::new(vec![Matrix::zeros(2, 2)], vec![upper()], MatrixNorm::Spectral).unwrap();
        let v = product_game_value(&g, 3).unwrap();
        assert!(v.degenerate && v.value == f64::NEG_INFINITY);

        assert!(ProductGame::new(vec![id], vec![Matrix::identity(3, 3)], MatrixNorm::SupRow).is_err());
    }

    #[test]
    fn principal_line_matches_value() {
        let a = vec![
            from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]),
            from_rows(&[vec![0.7, 0.1], vec![0.3, 0.9]]),
        ];
        let b = vec![upper(), lower()];
        let g = ProductGame::new(a.clone(), b.clone(), MatrixNorm::OneInduced).unwrap();
        let (v, line) = product_game_line(&g, 4).unwrap();
        assert!((v - product_game_value(&g, 4).unwrap().value).abs() < 1e-12);
        let mut p = Matrix::identity(2, 2);
        for (x, y) in &line {
            p = p * &a[*x] * &b[*y];
        }
        assert!((MatrixNorm::OneInduced.of(&p).ln() / 4.0 - v).abs() < 1e-12);
    }

    #[test]
    fn product_node_matches_multiplication() {
        let set = vec![upper(), lower()];
        let node = ProductNode::of_word(&[0, 1, 1], &set).unwrap();
        assert_eq!(node.depth(), 3);
        assert_eq!(node.product, upper() * lower() * lower());
        assert!(ProductNode::of_word(&[2], &set).is_err());
    }

    #[test]
    fn jsr_examples() {
        let d = from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        let b = jsr_bracket(&[d], 1, MatrixNorm::Spectral).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);

        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let b = jsr_bracket(&[upper(), lower()], 12, MatrixNorm::Spectral).unwrap();
        assert!(b.lower <= phi + 1e-12 && phi <= b.upper + 1e-12);
        assert!(b.upper - b.lower <= 0.02, "{b:?}");

        let nil = from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let b = jsr_bracket(&[nil], 2, MatrixNorm::Spectral).unwrap();
        assert_eq!(b.upper, 0.0);
        assert_eq!(b.lower, 0.0);
    }

    #[test]
    fn jssr_examples() {
        let d = from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        let b = jssr_bracket(std::slice::from_ref(&d), 6, MatrixNorm::Spectral).unwrap();
        assert!(b.lower <= 2.0 + 1e-12 && (b.upper - 2.0).abs() < 1e-12);
        assert!((b.lower - 1.0).abs() < 1e-12);

        // diag(1,2), diag(2,1): every product of length 2 has spectral radius ≥ 2
        let e = from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = jssr_bracket(&[d, e], 8, MatrixNorm::Spectral).unwrap();
        assert!(b.lower <= 2f64.sqrt() + 1e-12 && 2f64.sqrt() <= b.upper + 1e-12);

        let rot = from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let b = jssr_bracket(&[rot], 4, MatrixNorm::Spectral).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!((b.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let set = vec![upper(), lower(), upper() * 2.0];
        assert!(matches!(
            jsr_bracket(&set, 20, MatrixNorm::Spectral),
            Err(Error::NodeBudgetExceeded { .. })
        ));
    }
}
