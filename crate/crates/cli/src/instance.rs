//! Instance files: parsing, shape validation and construction of engine objects.

use std::path::Path;

use escape_rate::mmg::ProductGame;
use escape_rate::{GameInstance, MapFamily, Matrix, MatrixNorm, MetricKind, MetricSpace, Norm, Point};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ConicalOrthant,
    VectorAddition,
    MatrixProduct,
    PoincareDemo,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ConicalOrthant => "conical_orthant",
            Kind::VectorAddition => "vector_addition",
            Kind::MatrixProduct => "matrix_product",
            Kind::PoincareDemo => "poincare_demo",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    kind: Kind,
    n: usize,
    min_actions: Value,
    max_actions: Value,
    #[serde(default)]
    norm: Option<String>,
    #[serde(default)]
    metric: Option<String>,
    #[serde(default)]
    base_point: Option<Vec<f64>>,
    #[serde(default)]
    max_first: bool,
    #[serde(default)]
    node_budget: Option<u64>,
    #[serde(default, rename = "description")]
    _description: Option<String>,
}

/// Validated instance with the engine objects it describes.
#[derive(Debug)]
pub struct Instance {
    pub kind: Kind,
    pub n: usize,
    pub game: Option<GameInstance>,
    pub product: Option<ProductGame>,
    pub min_matrices: Vec<Matrix>,
    pub max_matrices: Vec<Matrix>,
    pub min_vectors: Vec<Point>,
    pub max_vectors: Vec<Point>,
    pub norm: Norm,
    pub matrix_norm: MatrixNorm,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn number(v: &Value, path: &str) -> Result<f64, CliError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| schema(format!("{path}: expected a finite number")))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array().ok_or_else(|| schema(format!("{path}: expected an array")))
}

fn vector(v: &Value, n: usize, path: &str) -> Result<Point, CliError> {
    let items = array(v, path)?;
    if items.len() != n {
        return Err(schema(format!("{path}: expected {n} entries, found {}", items.len())));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn matrix(v: &Value, n: usize, path: &str) -> Result<Matrix, CliError> {
    let rows = array(v, path)?;
    if rows.len() != n {
        return Err(schema(format!("{path}: expected {n} rows, found {}", rows.len())));
    }
    let rows: Vec<Point> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| vector(r, n, &format!("{path}[{i}]")))
        .collect::<Result<_, _>>()?;
    Ok(escape_rate::linalg::from_rows(&rows))
}

fn list<T>(v: &Value, field: &str, parse: impl Fn(&Value, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    let items = array(v, field)?;
    if items.is_empty() {
        return Err(schema(format!("{field}: at least one action is required")));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, x)| parse(x, &format!("{field}[{i}]")))
        .collect()
}

fn parse_norm(s: Option<&str>) -> Result<Norm, CliError> {
    match s.unwrap_or("euclidean") {
        "euclidean" => Ok(Norm::Euclidean),
        "sup" => Ok(Norm::Sup),
        other => Err(schema(format!("norm: unknown vector norm {other:?} (euclidean, sup)"))),
    }
}

fn parse_matrix_norm(s: Option<&str>) -> Result<MatrixNorm, CliError> {
    match s.unwrap_or("spectral") {
        "spectral" => Ok(MatrixNorm::Spectral),
        "sup_row" => Ok(MatrixNorm::SupRow),
        "one_induced" => Ok(MatrixNorm::OneInduced),
        other => Err(schema(format!(
            "norm: unknown matrix norm {other:?} (spectral, sup_row, one_induced)"
        ))),
    }
}

pub fn load(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Instance, CliError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    let n = raw.n;
    if n == 0 {
        return Err(schema("n: dimension must be at least 1"));
    }
    let mut inst = Instance {
        kind: raw.kind,
        n,
        game: None,
        product: None,
        min_matrices: Vec::new(),
        max_matrices: Vec::new(),
        min_vectors: Vec::new(),
        max_vectors: Vec::new(),
        norm: Norm::Euclidean,
        matrix_norm: MatrixNorm::Spectral,
    };
    let base = match &raw.base_point {
        Some(b) => {
            if b.len() != n {
                return Err(schema(format!("base_point: expected {n} entries, found {}", b.len())));
            }
            Some(b.clone())
        }
        None => None,
    };
    let mat = |v: &Value, p: &str| matrix(v, n, p);
    let vec = |v: &Value, p: &str| vector(v, n, p);

    match raw.kind {
        Kind::ConicalOrthant | Kind::MatrixProduct => {
            inst.min_matrices = list(&raw.min_actions, "min_actions", mat)?;
            inst.max_matrices = list(&raw.max_actions, "max_actions", mat)?;
            inst.matrix_norm = parse_matrix_norm(raw.norm.as_deref())?;
        }
        Kind::VectorAddition | Kind::PoincareDemo => {
            inst.min_vectors = list(&raw.min_actions, "min_actions", vec)?;
            inst.max_vectors = list(&raw.max_actions, "max_actions", vec)?;
        }
    }
    if raw.metric.is_some() && raw.kind != Kind::ConicalOrthant {
        return Err(schema("metric: only conical_orthant instances take a metric"));
    }

    let budget = raw.node_budget;
    let finish = |g: GameInstance| match budget {
        Some(b) => g.with_node_budget(b),
        None => g,
    };
    match raw.kind {
        Kind::ConicalOrthant => {
            let kind = match raw.metric.as_deref().unwrap_or("funk") {
                "funk" => MetricKind::OrthantFunk,
                "reverse_funk" => MetricKind::OrthantReverseFunk,
                other => return Err(schema(format!("metric: unknown metric {other:?} (funk, reverse_funk)"))),
            };
            let space = MetricSpace::new(kind, n)?;
            let family = MapFamily::nonneg_matrices(inst.min_matrices.clone(), inst.max_matrices.clone())?;
            inst.game = Some(finish(GameInstance::new(space, family, base, raw.max_first)?));
        }
        Kind::VectorAddition => {
            inst.norm = parse_norm(raw.norm.as_deref())?;
            let kind = match inst.norm {
                Norm::Euclidean => MetricKind::NormedEuclidean,
                Norm::Sup => MetricKind::NormedSup,
            };
            let space = MetricSpace::new(kind, n)?;
            let family = MapFamily::translations(inst.min_vectors.clone(), inst.max_vectors.clone())?;
            inst.game = Some(finish(GameInstance::new(space, family, base, raw.max_first)?));
        }
        Kind::PoincareDemo => {
            if raw.norm.is_some() {
                return Err(schema("norm: poincare_demo instances take no norm"));
            }
            let space = MetricSpace::new(MetricKind::PoincareHalfPlane, n)?;
            let family = MapFamily::translations(inst.min_vectors.clone(), inst.max_vectors.clone())?;
            inst.game = Some(finish(GameInstance::new(space, family, base, raw.max_first)?));
        }
        Kind::MatrixProduct => {
            if base.is_some() {
                return Err(schema("base_point: matrix_product instances start from the identity"));
            }
            let mut g = ProductGame::new(inst.min_matrices.clone(), inst.max_matrices.clone(), inst.matrix_norm)?
                .with_max_first(raw.max_first);
            if let Some(b) = budget {
                g = g.with_node_budget(b);
            }
            inst.product = Some(g);
        }
    }
    Ok(inst)
}
