//! Benchmark systems and the model file format.
//!
//! Each model carries polynomial dynamics, either as a discrete map or as a
//! vector field paired with an explicit-Euler step size. Built-in systems
//! cover the standard two- to seven-dimensional reachability benchmarks;
//! user systems load from a JSON document with the same content.

use crate::poly::MultiPoly;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model '{name}'; available: {available}")]
    UnknownModel { name: String, available: String },
    #[error("model file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model '{name}': {message}")]
    Invalid { name: String, message: String },
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "vanderpol",
    "jetengine",
    "neuron",
    "sir",
    "coupled_vanderpol",
    "covid",
];

/// How the stored dynamics relate to the step map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// `dynamics` is the step map itself.
    Discrete,
    /// `dynamics` is a vector field; the step map is `x + delta * g(x)`.
    Euler,
}

/// A polynomial system plus the configuration its benchmarks run with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDef {
    pub name: String,
    pub dim: usize,
    pub var_names: Vec<String>,
    pub map_kind: MapKind,
    pub delta: Option<f64>,
    pub dynamics: Vec<MultiPoly>,
    pub default_steps: usize,
    pub initial_box: Vec<(f64, f64)>,
    /// Parameter values already substituted into the dynamics; kept for
    /// documentation and serialization only.
    pub params: BTreeMap<String, f64>,
}

impl ModelDef {
    /// The initial box as an axis-aligned parallelotope.
    pub fn initial_parallelotope(
        &self,
    ) -> Result<crate::geometry::Parallelotope, crate::geometry::GeometryError> {
        let lows: Vec<f64> = self.initial_box.iter().map(|b| b.0).collect();
        let highs: Vec<f64> = self.initial_box.iter().map(|b| b.1).collect();
        crate::geometry::Parallelotope::from_box(&lows, &highs)
    }

    /// The one-step map: Euler models become `x_i + delta * g_i(x)`,
    /// discrete models pass through unchanged.
    pub fn discretize(&self) -> Vec<MultiPoly> {
        match self.map_kind {
            MapKind::Discrete => self.dynamics.clone(),
            MapKind::Euler => {
                let delta = self.delta.expect("euler model carries delta");
                self.dynamics
                    .iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let xi = MultiPoly::var(self.dim, i);
                        xi.checked_add(&g.scale(delta)).expect("dimensions agree")
                    })
                    .collect()
            }
        }
    }

    fn validate(self) -> Result<Self, ModelError> {
        let fail = |message: String| ModelError::Invalid {
            name: self.name.clone(),
            message,
        };
        if self.dim == 0 {
            return Err(fail("dimension must be positive".into()));
        }
        if self.var_names.len() != self.dim {
            return Err(fail(format!(
                "expected {} variable names, got {}",
                self.dim,
                self.var_names.len()
            )));
        }
        if self.dynamics.len() != self.dim {
            return Err(fail(format!(
                "expected {} dynamics components, got {}",
                self.dim,
                self.dynamics.len()
            )));
        }
        for (i, p) in self.dynamics.iter().enumerate() {
            if p.nvars() != self.dim {
                return Err(fail(format!(
                    "dynamics component {i} has {} variables, expected {}",
                    p.nvars(),
                    self.dim
                )));
            }
        }
        if self.initial_box.len() != self.dim {
            return Err(fail(format!(
                "expected {} initial intervals, got {}",
                self.dim,
                self.initial_box.len()
            )));
        }
        for (i, &(lo, hi)) in self.initial_box.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(fail(format!("initial interval {i} is not finite")));
            }
            if lo > hi {
                return Err(fail(format!("initial interval {i} has lower > upper")));
            }
        }
        match self.map_kind {
            MapKind::Euler => {
                let Some(d) = self.delta else {
                    return Err(fail("euler model requires delta".into()));
                };
                if !d.is_finite() {
                    return Err(fail("delta is not finite".into()));
                }
            }
            MapKind::Discrete => {}
        }
        for (k, v) in &self.params {
            if !v.is_finite() {
                return Err(fail(format!("parameter {k} is not finite")));
            }
        }
        Ok(self)
    }
}

/// Variants for the seven-compartment epidemic model, whose printed
/// equations differ from the tabulated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovidParams {
    /// Prose parameters: beta 0.25, gamma 0.02, eta 0.02, delta 0.1.
    Text,
    /// Tabulated parameters: beta 0.05, gamma 0.0, eta 0.02, delta 0.08.
    Table,
}

/// Returns a built-in benchmark model by name.
pub fn builtin(name: &str) -> Result<ModelDef, ModelError> {
    match name {
        "vanderpol" => Ok(vanderpol()),
        "jetengine" => Ok(jetengine()),
        "neuron" => Ok(neuron()),
        "sir" => Ok(sir()),
        "coupled_vanderpol" => Ok(coupled_vanderpol()),
        "covid" => Ok(covid(CovidParams::Text, false)),
        other => Err(ModelError::UnknownModel {
            name: other.to_string(),
            available: BUILTIN_NAMES.join(", "),
        }),
    }
}

fn var(n: usize, i: usize) -> MultiPoly {
    MultiPoly::var(n, i)
}

fn cst(n: usize, c: f64) -> MultiPoly {
    MultiPoly::constant(n, c)
}

fn vanderpol() -> ModelDef {
    let n = 2;
    let (x, y) = (var(n, 0), var(n, 1));
    // x' = y, y' = (1 - x^2) y - x
    let gy = &(&y - &(&(&x * &x) * &y)) - &x;
    ModelDef {
        name: "vanderpol".into(),
        dim: n,
        var_names: vec!["x".into(), "y".into()],
        map_kind: MapKind::Euler,
        delta: Some(0.08),
        dynamics: vec![y, gy],
        default_steps: 70,
        initial_box: vec![(0.0, 0.1), (1.99, 2.0)],
        params: BTreeMap::new(),
    }
}

fn jetengine() -> ModelDef {
    let n = 2;
    let (x, y) = (var(n, 0), var(n, 1));
    // x' = -y - 1.5 x^2 - 0.5 x^3 - 0.5, y' = 3x - y
    let x2 = &x * &x;
    let x3 = &x2 * &x;
    let gx = &(&(&(-&y) - &x2.scale(1.5)) - &x3.scale(0.5)) - &cst(n, 0.5);
    let gy = &x.scale(3.0) - &y;
    ModelDef {
        name: "jetengine".into(),
        dim: n,
        var_names: vec!["x".into(), "y".into()],
        map_kind: MapKind::Euler,
        delta: Some(0.2),
        dynamics: vec![gx, gy],
        default_steps: 100,
        initial_box: vec![(0.8, 1.2), (0.8, 1.2)],
        params: BTreeMap::new(),
    }
}

fn neuron() -> ModelDef {
    let n = 2;
    let (x, y) = (var(n, 0), var(n, 1));
    // FitzHugh-Nagumo: x' = x - x^3/3 - y + 0.875, y' = 0.08 (x + 0.7 - 0.8 y)
    let x3 = &(&x * &x) * &x;
    let gx = &(&(&x - &x3.scale(1.0 / 3.0)) - &y) + &cst(n, 0.875);
    let gy = &(&x.scale(0.08) + &cst(n, 0.056)) - &y.scale(0.064);
    ModelDef {
        name: "neuron".into(),
        dim: n,
        var_names: vec!["x".into(), "y".into()],
        map_kind: MapKind::Euler,
        delta: Some(0.2),
        dynamics: vec![gx, gy],
        default_steps: 200,
        initial_box: vec![(0.9, 1.1), (2.4, 2.6)],
        params: BTreeMap::new(),
    }
}

fn sir() -> ModelDef {
    let n = 3;
    let (beta, gamma) = (0.05, 0.34);
    let s = var(n, 0);
    let i = var(n, 1);
    let si = &s * &i;
    let gs = si.scale(-beta);
    let gi = &si.scale(beta) - &i.scale(gamma);
    let gr = i.scale(gamma);
    ModelDef {
        name: "sir".into(),
        dim: n,
        var_names: vec!["s".into(), "i".into(), "r".into()],
        map_kind: MapKind::Euler,
        delta: Some(0.1),
        dynamics: vec![gs, gi, gr],
        default_steps: 150,
        initial_box: vec![(0.79, 0.8), (0.19, 0.2), (0.0, 0.0)],
        params: BTreeMap::from([("beta".into(), beta), ("gamma".into(), gamma)]),
    }
}

fn coupled_vanderpol() -> ModelDef {
    let n = 4;
    let (x1, y1, x2, y2) = (var(n, 0), var(n, 1), var(n, 2), var(n, 3));
    // Two oscillators with linear position coupling on the velocity terms.
    let gy1 = &(&(&y1 - &(&(&x1 * &x1) * &y1)) - &x1) + &(&x2 - &x1);
    let gy2 = &(&(&y2 - &(&(&x2 * &x2) * &y2)) - &x2) + &(&x1 - &x2);
    ModelDef {
        name: "coupled_vanderpol".into(),
        dim: n,
        var_names: vec!["x1".into(), "y1".into(), "x2".into(), "y2".into()],
        map_kind: MapKind::Euler,
        delta: Some(0.08),
        dynamics: vec![y1, gy1, y2, gy2],
        default_steps: 40,
        initial_box: vec![
            (1.25, 2.25),
            (1.25, 2.25),
            (1.25, 2.25),
            (1.25, 2.25),
        ],
        params: BTreeMap::new(),
    }
}

/// The seven-compartment epidemic model.
///
/// `corrected` switches the asymptomatic compartment's right-hand side from
/// the printed form `beta*S_I*(A+I) - gamma*I` to the self-consistent
/// `beta*S_A*(A+I) - gamma*A`; the printed form is the default.
pub fn covid(params: CovidParams, corrected: bool) -> ModelDef {
    let n = 7;
    let (beta, gamma, eta, delta) = match params {
        CovidParams::Text => (0.25, 0.02, 0.02, 0.1),
        CovidParams::Table => (0.05, 0.0, 0.02, 0.08),
    };
    let sa = var(n, 0);
    let si = var(n, 1);
    let a = var(n, 2);
    let i = var(n, 3);
    let infectious = &a + &i;
    let g_sa = (&sa * &infectious).scale(-beta);
    let g_si = (&si * &infectious).scale(-beta);
    let g_a = if corrected {
        &(&sa * &infectious).scale(beta) - &a.scale(gamma)
    } else {
        &(&si * &infectious).scale(beta) - &i.scale(gamma)
    };
    let g_i = &(&si * &infectious).scale(beta) - &i.scale(gamma);
    let g_ra = a.scale(gamma);
    let g_ri = i.scale(gamma);
    let g_d = i.scale(eta);
    ModelDef {
        name: "covid".into(),
        dim: n,
        var_names: vec![
            "sa".into(),
            "si".into(),
            "a".into(),
            "i".into(),
            "ra".into(),
            "ri".into(),
            "d".into(),
        ],
        map_kind: MapKind::Euler,
        delta: Some(delta),
        dynamics: vec![g_sa, g_si, g_a, g_i, g_ra, g_ri, g_d],
        default_steps: 200,
        initial_box: vec![
            (0.69, 0.7),
            (0.09, 0.1),
            (0.14, 0.15),
            (0.04, 0.05),
            (0.0, 0.0),
            (0.0, 0.0),
            (0.0, 0.0),
        ],
        params: BTreeMap::from([
            ("beta".into(), beta),
            ("gamma".into(), gamma),
            ("eta".into(), eta),
        ]),
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TermJson {
    coeff: f64,
    exps: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    name: String,
    dim: usize,
    vars: Vec<String>,
    map: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    dynamics: Vec<Vec<TermJson>>,
    steps: usize,
    initial_box: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
}

/// Parses a model document, canonicalizing polynomial terms and validating
/// every dimension, exponent length, and number in it.
pub fn parse_model(text: &str) -> Result<ModelDef, ModelError> {
    let raw: ModelJson = serde_json::from_str(text)?;
    let mut dynamics = Vec::with_capacity(raw.dynamics.len());
    for (ci, comp) in raw.dynamics.iter().enumerate() {
        for (ti, term) in comp.iter().enumerate() {
            if term.exps.len() != raw.dim {
                return Err(ModelError::Invalid {
                    name: raw.name.clone(),
                    message: format!(
                        "dynamics component {ci}, term {ti}: exps length {} does not match dim {}",
                        term.exps.len(),
                        raw.dim
                    ),
                });
            }
            if !term.coeff.is_finite() {
                return Err(ModelError::Invalid {
                    name: raw.name.clone(),
                    message: format!("dynamics component {ci}, term {ti}: non-finite coefficient"),
                });
            }
        }
        let p = MultiPoly::from_terms(
            raw.dim,
            comp.iter().map(|t| (t.coeff, t.exps.clone())),
        )
        .map_err(|e| ModelError::Invalid {
            name: raw.name.clone(),
            message: e.to_string(),
        })?;
        dynamics.push(p);
    }
    ModelDef {
        name: raw.name,
        dim: raw.dim,
        var_names: raw.vars,
        map_kind: raw.map,
        delta: raw.delta,
        dynamics,
        default_steps: raw.steps,
        initial_box: raw.initial_box.iter().map(|b| (b[0], b[1])).collect(),
        params: raw.params,
    }
    .validate()
}

/// Serializes a model to the same JSON document format `parse_model` reads.
pub fn serialize_model(model: &ModelDef) -> String {
    let json = ModelJson {
        name: model.name.clone(),
        dim: model.dim,
        vars: model.var_names.clone(),
        map: model.map_kind,
        delta: model.delta,
        dynamics: model
            .dynamics
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(e, c)| TermJson {
                        coeff: c,
                        exps: e.clone(),
                    })
                    .collect()
            })
            .collect(),
        steps: model.default_steps,
        initial_box: model.initial_box.iter().map(|&(lo, hi)| [lo, hi]).collect(),
        params: model.params.clone(),
    };
    serde_json::to_string_pretty(&json).expect("model serialization cannot fail")
}
