//! Potts energy model: per-label energy tables, parameter vectors with box
//! bounds, state encoding, and energy / feature-row evaluation.
//!
//! The energy of a state S with labels s_1..s_NV is
//!   E(S) = sum_i H_i * U(s_i) + sum_k J_k * V(s_p1(k), s_p2(k))
//! which is linear in theta = (H, J); `feature_row` is the row of that
//! linear form, so `energy == dot(feature_row, theta)`.

use crate::graph::Graph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PottsError {
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// A labeled state: `labels[i]` is the label of vertex i, in `1..=n_labels`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State(pub Vec<u8>);

impl State {
    pub fn labels(&self) -> &[u8] {
        &self.0
    }
}

/// Potts model: graph topology plus dense label-energy tables.
#[derive(Debug, Clone)]
pub struct PottsModel {
    graph: Graph,
    n_labels: usize,
    u: Vec<f64>,
    /// Row-major `n_labels x n_labels`, symmetric.
    v: Vec<f64>,
}

impl PottsModel {
    pub fn new(
        graph: Graph,
        n_labels: usize,
        u: Vec<f64>,
        v: Vec<Vec<f64>>,
    ) -> Result<PottsModel, PottsError> {
        if n_labels < 2 {
            return Err(PottsError::InvalidModel("need at least two labels".into()));
        }
        if u.len() != n_labels {
            return Err(PottsError::InvalidModel(format!(
                "U table has {} entries, expected {n_labels}",
                u.len()
            )));
        }
        if v.len() != n_labels || v.iter().any(|row| row.len() != n_labels) {
            return Err(PottsError::InvalidModel(format!("V table must be {n_labels}x{n_labels}")));
        }
        let mut flat = Vec::with_capacity(n_labels * n_labels);
        for row in &v {
            flat.extend_from_slice(row);
        }
        if flat.iter().chain(u.iter()).any(|x| !x.is_finite()) {
            return Err(PottsError::InvalidModel("non-finite table entry".into()));
        }
        for a in 0..n_labels {
            for b in 0..a {
                if flat[a * n_labels + b] != flat[b * n_labels + a] {
                    return Err(PottsError::InvalidModel(format!(
                        "V({},{}) != V({},{})",
                        a + 1,
                        b + 1,
                        b + 1,
                        a + 1
                    )));
                }
            }
        }
        Ok(PottsModel { graph, n_labels, u, v: flat })
    }

    /// Ising preset: two labels with label 1 the +1 spin and label 2 the -1
    /// spin; U(+1)=+1, U(-1)=-1, V(s,s')=s*s'.
    pub fn ising(graph: Graph) -> PottsModel {
        PottsModel::new(graph, 2, vec![1.0, -1.0], vec![vec![1.0, -1.0], vec![-1.0, 1.0]])
            .expect("Ising tables are valid")
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn u_table(&self) -> &[f64] {
        &self.u
    }

    pub fn u(&self, label: u8) -> f64 {
        self.u[label as usize - 1]
    }

    pub fn v(&self, a: u8, b: u8) -> f64 {
        self.v[(a as usize - 1) * self.n_labels + (b as usize - 1)]
    }

    /// Number of parameters, N_V + N_C.
    pub fn n_params(&self) -> usize {
        self.graph.n_vertices() + self.graph.n_edges()
    }

    /// Total state count N_L^N_V, if it fits in usize.
    pub fn n_total_states(&self) -> Option<usize> {
        let mut n: usize = 1;
        for _ in 0..self.graph.n_vertices() {
            n = n.checked_mul(self.n_labels)?;
        }
        Some(n)
    }

    pub fn check_state(&self, state: &State) -> Result<(), PottsError> {
        if state.0.len() != self.graph.n_vertices() {
            return Err(PottsError::ModelMismatch(format!(
                "state has {} labels, graph has {} vertices",
                state.0.len(),
                self.graph.n_vertices()
            )));
        }
        for (i, &s) in state.0.iter().enumerate() {
            if s < 1 || s as usize > self.n_labels {
                return Err(PottsError::InvalidState(format!(
                    "label {s} at vertex {} outside 1..={}",
                    i + 1,
                    self.n_labels
                )));
            }
        }
        Ok(())
    }

    /// Mixed-radix state index, vertex 1 least significant:
    /// index = sum_i (s_i - 1) * N_L^(i-1).
    pub fn encode(&self, state: &State) -> Result<usize, PottsError> {
        self.check_state(state)?;
        let mut index = 0usize;
        for &s in state.0.iter().rev() {
            index = index * self.n_labels + (s as usize - 1);
        }
        Ok(index)
    }

    pub fn decode(&self, mut index: usize) -> Result<State, PottsError> {
        let n_ts = self
            .n_total_states()
            .ok_or_else(|| PottsError::InvalidState("state space overflows usize".into()))?;
        if index >= n_ts {
            return Err(PottsError::InvalidState(format!("index {index} >= {n_ts}")));
        }
        let mut labels = Vec::with_capacity(self.graph.n_vertices());
        for _ in 0..self.graph.n_vertices() {
            labels.push((index % self.n_labels) as u8 + 1);
            index /= self.n_labels;
        }
        Ok(State(labels))
    }

    /// Feature row epsilon(S): U values per vertex followed by V values per
    /// edge, so that energy = dot(feature_row, [H, J]).
    pub fn feature_row(&self, state: &State) -> Result<Vec<f64>, PottsError> {
        self.check_state(state)?;
        let mut row = Vec::with_capacity(self.n_params());
        for &s in &state.0 {
            row.push(self.u(s));
        }
        for &(a, b) in self.graph.edges() {
            row.push(self.v(state.0[a], state.0[b]));
        }
        Ok(row)
    }

    pub fn energy(&self, params: &Params, state: &State) -> Result<f64, PottsError> {
        params.check(&self.graph)?;
        self.check_state(state)?;
        let mut e = 0.0;
        for (i, &s) in state.0.iter().enumerate() {
            e += params.h[i] * self.u(s);
        }
        for (k, &(a, b)) in self.graph.edges().iter().enumerate() {
            e += params.j[k] * self.v(state.0[a], state.0[b]);
        }
        Ok(e)
    }
}

/// Parameter vector theta = (H, J).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
}

impl Params {
    pub fn zeros(graph: &Graph) -> Params {
        Params { h: vec![0.0; graph.n_vertices()], j: vec![0.0; graph.n_edges()] }
    }

    pub fn check(&self, graph: &Graph) -> Result<(), PottsError> {
        if self.h.len() != graph.n_vertices() || self.j.len() != graph.n_edges() {
            return Err(PottsError::ModelMismatch(format!(
                "params are ({}, {}), graph needs ({}, {})",
                self.h.len(),
                self.j.len(),
                graph.n_vertices(),
                graph.n_edges()
            )));
        }
        Ok(())
    }

    /// Flat theta vector [H..., J...].
    pub fn to_vec(&self) -> Vec<f64> {
        self.h.iter().chain(self.j.iter()).copied().collect()
    }

    pub fn from_vec(graph: &Graph, theta: &[f64]) -> Result<Params, PottsError> {
        if theta.len() != graph.n_vertices() + graph.n_edges() {
            return Err(PottsError::ModelMismatch(format!(
                "theta has {} entries, expected {}",
                theta.len(),
                graph.n_vertices() + graph.n_edges()
            )));
        }
        Ok(Params {
            h: theta[..graph.n_vertices()].to_vec(),
            j: theta[graph.n_vertices()..].to_vec(),
        })
    }
}

/// Box bounds on theta.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBounds {
    pub h_min: Vec<f64>,
    pub h_max: Vec<f64>,
    pub j_min: Vec<f64>,
    pub j_max: Vec<f64>,
}

impl ParamBounds {
    /// Uniform bounds |H_i| <= h, |J_k| <= j.
    pub fn uniform(graph: &Graph, h: f64, j: f64) -> ParamBounds {
        ParamBounds {
            h_min: vec![-h; graph.n_vertices()],
            h_max: vec![h; graph.n_vertices()],
            j_min: vec![-j; graph.n_edges()],
            j_max: vec![j; graph.n_edges()],
        }
    }

    pub fn check(&self, graph: &Graph) -> Result<(), PottsError> {
        let nv = graph.n_vertices();
        let nc = graph.n_edges();
        if self.h_min.len() != nv
            || self.h_max.len() != nv
            || self.j_min.len() != nc
            || self.j_max.len() != nc
        {
            return Err(PottsError::ModelMismatch("bounds sized for another graph".into()));
        }
        let ok = |lo: &[f64], hi: &[f64]| {
            lo.iter().zip(hi).all(|(a, b)| a.is_finite() && b.is_finite() && a <= b)
        };
        if !ok(&self.h_min, &self.h_max) || !ok(&self.j_min, &self.j_max) {
            return Err(PottsError::InvalidModel("bounds must be finite with min <= max".into()));
        }
        Ok(())
    }

    /// Flat [H bounds..., J bounds...] as (lower, upper) vectors.
    pub fn to_vecs(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.h_min.iter().chain(self.j_min.iter()).copied().collect();
        let hi = self.h_max.iter().chain(self.j_max.iter()).copied().collect();
        (lo, hi)
    }

    pub fn clip(&self, params: &mut Params) {
        for (x, (lo, hi)) in params.h.iter_mut().zip(self.h_min.iter().zip(&self.h_max)) {
            *x = x.clamp(*lo, *hi);
        }
        for (x, (lo, hi)) in params.j.iter_mut().zip(self.j_min.iter().zip(&self.j_max)) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

/// On-disk model file: graph, tables, and parameter bounds in one object.
/// Bounds are `[min, max]` pairs per vertex (H) and per edge (J).
#[derive(Debug, Serialize, Deserialize)]
struct ModelJson {
    graph: Graph,
    n_labels: usize,
    #[serde(rename = "U")]
    u: Vec<f64>,
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    bounds: BoundsJson,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoundsJson {
    #[serde(rename = "H")]
    h: Vec<[f64; 2]>,
    #[serde(rename = "J")]
    j: Vec<[f64; 2]>,
}

/// Parses a model JSON object into the model and its parameter bounds.
pub fn parse_model(text: &str) -> Result<(PottsModel, ParamBounds), PottsError> {
    let raw: ModelJson =
        serde_json::from_str(text).map_err(|e| PottsError::InvalidModel(e.to_string()))?;
    let model = PottsModel::new(raw.graph, raw.n_labels, raw.u, raw.v)?;
    let bounds = ParamBounds {
        h_min: raw.bounds.h.iter().map(|p| p[0]).collect(),
        h_max: raw.bounds.h.iter().map(|p| p[1]).collect(),
        j_min: raw.bounds.j.iter().map(|p| p[0]).collect(),
        j_max: raw.bounds.j.iter().map(|p| p[1]).collect(),
    };
    bounds.check(model.graph())?;
    Ok((model, bounds))
}

/// Serializes a model plus bounds to the model JSON format.
pub fn model_to_json(model: &PottsModel, bounds: &ParamBounds) -> String {
    let v: Vec<Vec<f64>> = (0..model.n_labels)
        .map(|a| (0..model.n_labels).map(|b| model.v[a * model.n_labels + b]).collect())
        .collect();
    let raw = ModelJson {
        graph: model.graph.clone(),
        n_labels: model.n_labels,
        u: model.u.clone(),
        v,
        bounds: BoundsJson {
            h: bounds.h_min.iter().zip(&bounds.h_max).map(|(&a, &b)| [a, b]).collect(),
            j: bounds.j_min.iter().zip(&bounds.j_max).map(|(&a, &b)| [a, b]).collect(),
        },
    };
    serde_json::to_string_pretty(&raw).expect("model serializes")
}
