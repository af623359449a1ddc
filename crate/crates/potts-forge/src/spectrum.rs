//! Exhaustive enumeration oracle: full state spectrum, ground/excited sets,
//! band gap, Boltzmann statistics, NLL with its proven bound functions, and
//! a projected-gradient NLL trainer used as a comparison baseline.
//!
//! All log-domain quantities are computed with an E0 shift so that inverse
//! temperatures up to ~50 do not overflow.

use crate::potts::{Params, ParamBounds, PottsError, PottsModel, State};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Hard cap on the enumerated state count.
pub const MAX_STATES: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("state space too large: {0} states exceeds cap {MAX_STATES}")]
    TooLarge(u128),
    #[error("empty data set")]
    EmptyDataSet,
    #[error("degenerate gap: delta_E must be positive")]
    DegenerateGap,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Potts(#[from] PottsError),
}

/// Full energy spectrum of a model at fixed parameters.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Energy per state, indexed by state index.
    pub energies: Vec<f64>,
    pub e0: f64,
    /// First excited energy; equals `e0` when the spectrum is fully
    /// degenerate (no excited states).
    pub e1: f64,
    /// Band gap E1 - E0; 0 when fully degenerate.
    pub delta_e: f64,
    /// Sorted ground-state indices.
    pub ground: Vec<usize>,
    pub n_excited: usize,
    /// True when every state is a ground state (delta_e forced to 0).
    pub fully_degenerate: bool,
}

impl Spectrum {
    pub fn n_total(&self) -> usize {
        self.energies.len()
    }

    pub fn n_ground(&self) -> usize {
        self.ground.len()
    }
}

/// Enumerates every state's energy and derives E0, E1, the gap, and the
/// ground set. Degeneracy tolerance is `1e-9 * max(1, |E0|)`.
pub fn compute_spectrum(model: &PottsModel, params: &Params) -> Result<Spectrum, SpectrumError> {
    params.check(model.graph())?;
    let n_big = (model.n_labels() as u128).pow(model.graph().n_vertices() as u32);
    if n_big > MAX_STATES as u128 {
        return Err(SpectrumError::TooLarge(n_big));
    }
    let n_ts = n_big as usize;
    // Index-addressed writes keep the result bitwise-identical for any
    // worker count.
    let energies: Vec<f64> = (0..n_ts)
        .into_par_iter()
        .map(|idx| {
            let state = model.decode(idx).expect("index in range");
            model.energy(params, &state).expect("state valid")
        })
        .collect();
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * e0.abs().max(1.0);
    let mut ground = Vec::new();
    let mut e1 = f64::INFINITY;
    for (idx, &e) in energies.iter().enumerate() {
        if e <= e0 + tol {
            ground.push(idx);
        } else if e < e1 {
            e1 = e;
        }
    }
    let fully_degenerate = ground.len() == n_ts;
    let e1 = if fully_degenerate { e0 } else { e1 };
    Ok(Spectrum {
        n_excited: n_ts - ground.len(),
        delta_e: e1 - e0,
        energies,
        e0,
        e1,
        ground,
        fully_degenerate,
    })
}

/// log Z(beta) = log sum_S exp(-beta E(S)), via an E0 shift.
pub fn log_partition_function(spectrum: &Spectrum, beta: f64) -> f64 {
    let sum: f64 = spectrum.energies.iter().map(|&e| (-beta * (e - spectrum.e0)).exp()).sum();
    -beta * spectrum.e0 + sum.ln()
}

/// Z(beta) = sum_S exp(-beta E(S)). May overflow to infinity for large
/// beta * |E0|; prefer `log_partition_function` in that regime.
pub fn partition_function(spectrum: &Spectrum, beta: f64) -> f64 {
    log_partition_function(spectrum, beta).exp()
}

/// Boltzmann probability p(S) = exp(-beta E(S)) / Z.
pub fn probability(spectrum: &Spectrum, state_index: usize, beta: f64) -> f64 {
    let log_z = log_partition_function(spectrum, beta);
    (-beta * spectrum.energies[state_index] - log_z).exp()
}

/// Negative log-likelihood eta = -sum_{S in data} log p(S), in log space:
/// eta = beta * sum_{S in data} E(S) + N_DS * log Z.
pub fn nll(spectrum: &Spectrum, data: &[usize], beta: f64) -> Result<f64, SpectrumError> {
    if data.is_empty() {
        return Err(SpectrumError::EmptyDataSet);
    }
    let log_z = log_partition_function(spectrum, beta);
    let mut eta = data.len() as f64 * log_z;
    for &idx in data {
        if idx >= spectrum.energies.len() {
            return Err(SpectrumError::InvalidArgument(format!("state index {idx} out of range")));
        }
        eta += beta * spectrum.energies[idx];
    }
    Ok(eta)
}

/// Upper bound xi(beta) = N_GS * log(N_GS + N_ES * exp(-beta * delta_E)) on
/// the NLL of the ground set.
pub fn nll_upper_bound(
    n_gs: usize,
    n_es: usize,
    delta_e: f64,
    beta: f64,
) -> Result<f64, SpectrumError> {
    if n_gs < 1 {
        return Err(SpectrumError::InvalidArgument("n_gs must be >= 1".into()));
    }
    if delta_e <= 0.0 {
        return Err(SpectrumError::DegenerateGap);
    }
    Ok(n_gs as f64 * (n_gs as f64 + n_es as f64 * (-beta * delta_e).exp()).ln())
}

/// Inverse temperature beyond which the NLL is within epsilon of its floor:
/// beta* = (1/delta_E) * (log(N_ES/N_GS) - log(exp(epsilon/N_GS) - 1)).
pub fn beta_star(
    n_gs: usize,
    n_es: usize,
    delta_e: f64,
    epsilon: f64,
) -> Result<f64, SpectrumError> {
    if n_gs < 1 || n_es < 1 {
        return Err(SpectrumError::InvalidArgument("n_gs and n_es must be >= 1".into()));
    }
    if delta_e <= 0.0 || epsilon <= 0.0 {
        return Err(SpectrumError::InvalidArgument("delta_E and epsilon must be positive".into()));
    }
    let ratio = (n_es as f64 / n_gs as f64).ln();
    let eps_term = ((epsilon / n_gs as f64).exp_m1()).ln();
    Ok((ratio - eps_term) / delta_e)
}

/// Exact NLL gradient w.r.t. theta = (H, J):
/// d eta / d theta_j = beta * sum_{S in data} (eps_j(S) - E_p[eps_j])
/// where E_p is the Boltzmann expectation over the full spectrum.
pub fn nll_gradient(
    model: &PottsModel,
    params: &Params,
    data: &[usize],
    beta: f64,
) -> Result<Vec<f64>, SpectrumError> {
    if data.is_empty() {
        return Err(SpectrumError::EmptyDataSet);
    }
    let spectrum = compute_spectrum(model, params)?;
    let log_z = log_partition_function(&spectrum, beta);
    let np = model.n_params();
    let mut expectation = vec![0.0; np];
    for idx in 0..spectrum.n_total() {
        let p = (-beta * spectrum.energies[idx] - log_z).exp();
        let row = model.feature_row(&model.decode(idx)?)?;
        for (acc, f) in expectation.iter_mut().zip(&row) {
            *acc += p * f;
        }
    }
    let mut grad = vec![0.0; np];
    for &idx in data {
        if idx >= spectrum.n_total() {
            return Err(SpectrumError::InvalidArgument(format!("state index {idx} out of range")));
        }
        let row = model.feature_row(&model.decode(idx)?)?;
        for ((g, f), m) in grad.iter_mut().zip(&row).zip(&expectation) {
            *g += beta * (f - m);
        }
    }
    Ok(grad)
}

/// Projected gradient descent on the NLL at fixed beta, starting from
/// theta = 0, with a backtracking step halving whenever the objective would
/// increase. Deterministic.
pub fn train_nll(
    model: &PottsModel,
    bounds: &ParamBounds,
    data: &[usize],
    beta: f64,
    steps: usize,
    learning_rate: f64,
) -> Result<Params, SpectrumError> {
    if data.is_empty() {
        return Err(SpectrumError::EmptyDataSet);
    }
    bounds.check(model.graph())?;
    let mut theta = Params::zeros(model.graph());
    bounds.clip(&mut theta);
    let eval = |p: &Params| -> Result<f64, SpectrumError> {
        nll(&compute_spectrum(model, p)?, data, beta)
    };
    let mut current = eval(&theta)?;
    let mut lr = learning_rate;
    for _ in 0..steps {
        let grad = nll_gradient(model, &theta, data, beta)?;
        let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-12 {
            break;
        }
        let flat = theta.to_vec();
        // backtracking: halve the step until the NLL does not increase
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = flat.iter().zip(&grad).map(|(t, g)| t - lr * g).collect();
            let mut trial = Params::from_vec(model.graph(), &trial)?;
            bounds.clip(&mut trial);
            let value = eval(&trial)?;
            if value <= current + 1e-12 {
                theta = trial;
                current = value;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(theta)
}

/// Log-spaced beta grid, `points >= 2`, endpoints included.
pub fn beta_grid(beta_min: f64, beta_max: f64, points: usize) -> Result<Vec<f64>, SpectrumError> {
    if !(beta_min > 0.0 && beta_max > beta_min) || points < 2 {
        return Err(SpectrumError::InvalidArgument(
            "need 0 < beta_min < beta_max and points >= 2".into(),
        ));
    }
    let (a, b) = (beta_min.ln(), beta_max.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Formats a float with 12 significant digits for CSV output.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// CSV rows `beta, eta, xi_upper, eta_inf_lower` over the grid. `xi_upper`
/// and `eta_inf_lower` are only meaningful when `data` is the ground set of
/// a non-degenerate spectrum; for a degenerate spectrum the bound columns
/// are reported as NaN.
pub fn nll_curve_csv(
    spectrum: &Spectrum,
    data: &[usize],
    betas: &[f64],
) -> Result<String, SpectrumError> {
    let mut out = String::from("beta,eta,xi_upper,eta_inf_lower\n");
    let n_gs = spectrum.n_ground();
    let eta_inf = n_gs as f64 * (n_gs as f64).ln();
    for &beta in betas {
        let eta = nll(spectrum, data, beta)?;
        let xi = if spectrum.delta_e > 0.0 {
            nll_upper_bound(n_gs, spectrum.n_excited, spectrum.delta_e, beta)?
        } else {
            f64::NAN
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(beta),
            fmt_sig(eta),
            fmt_sig(xi),
            fmt_sig(eta_inf)
        ));
    }
    Ok(out)
}

/// JSON spectrum summary with ground states expanded to label sequences.
#[derive(Debug, Serialize)]
pub struct SpectrumSummary {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    pub delta_e: f64,
    pub n_gs: usize,
    pub ground_states: Vec<Vec<u8>>,
    pub degenerate: bool,
}

pub fn spectrum_summary(model: &PottsModel, spectrum: &Spectrum) -> SpectrumSummary {
    SpectrumSummary {
        e0: spectrum.e0,
        e1: spectrum.e1,
        delta_e: spectrum.delta_e,
        n_gs: spectrum.n_ground(),
        ground_states: spectrum
            .ground
            .iter()
            .map(|&idx| model.decode(idx).expect("ground index valid").0)
            .collect(),
        degenerate: spectrum.fully_degenerate,
    }
}

/// Decodes ground-state indices to `State`s.
pub fn ground_states(model: &PottsModel, spectrum: &Spectrum) -> Vec<State> {
    spectrum.ground.iter().map(|&idx| model.decode(idx).expect("in range")).collect()
}
