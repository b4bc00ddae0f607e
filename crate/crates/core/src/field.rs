//! Field realizations on finite grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point_process::{sample_poisson, PointConfig, Window};
use crate::spectral::{Orientation, SpectralModel, TruncationPlan};

/// One simulated field on a grid, with the truncation that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldRealization {
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub window: Window,
    /// The budget-quantile level `a*` the window was certified at.
    pub threshold: f64,
    /// `Σ_t P[some atom outside the window reaches a* at t]`.
    pub certificate: f64,
    /// False when the certificate is an envelope bound.
    pub exact: bool,
    pub budget: f64,
    pub orientation: Orientation,
    pub atoms: usize,
    pub model: SpectralModel,
}

impl FieldRealization {
    pub fn to_csv(&self) -> String {
        let d = self.grid.first().map_or(0, |t| t.len());
        let mut s: String = (0..d).map(|i| format!("t{i},")).collect();
        s.push_str("value\n");
        for (t, v) in self.grid.iter().zip(&self.values) {
            for x in t {
                s.push_str(&format!("{x},"));
            }
            s.push_str(&format!("{v}\n"));
        }
        s
    }
}

/// `sup_i f_t(U_i)` at every grid point.
pub fn max_field(model: &SpectralModel, grid: &[Vec<f64>], config: &PointConfig) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|t| {
            let mut best: f64 = 0.0;
            for (index, atom) in config.atoms.iter().enumerate() {
                let v = model.eval(t, atom).map_err(|e| Error::Evaluation {
                    index,
                    location: atom.location.clone(),
                    reason: e.to_string(),
                })?;
                best = best.max(v);
            }
            Ok(best)
        })
        .collect()
}

/// The reported field: the max-integral itself, or `−ln` of it for
/// min-oriented models.
pub fn oriented(orientation: Orientation, maxima: &[f64]) -> Vec<f64> {
    match orientation {
        Orientation::Max => maxima.to_vec(),
        Orientation::Min => maxima.iter().map(|m| if *m > 0.0 { -m.ln() } else { f64::INFINITY }).collect(),
    }
}

/// The field from a configuration already sampled on `plan.window`.
pub fn realize(model: &SpectralModel, grid: &[Vec<f64>], plan: &TruncationPlan, config: &PointConfig) -> Result<FieldRealization> {
    let maxima = max_field(model, grid, config)?;
    let values = oriented(model.orientation(), &maxima);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            index: i,
            location: grid[i].clone(),
            reason: "no atom reaches this grid point".into(),
        });
    }
    Ok(FieldRealization {
        grid: grid.to_vec(),
        values,
        seed: config.seed,
        window: plan.window.clone(),
        threshold: plan.threshold,
        certificate: plan.certificate,
        exact: plan.exact,
        budget: plan.budget,
        orientation: model.orientation(),
        atoms: config.len(),
        model: model.clone(),
    })
}

/// Plans a window for `budget`, samples the Poisson process and evaluates
/// the field.
pub fn simulate(model: &SpectralModel, grid: &[Vec<f64>], budget: f64, seed: u64) -> Result<FieldRealization> {
    let plan = model.truncation_plan(grid, budget)?;
    simulate_with_plan(model, grid, &plan, seed)
}

pub fn simulate_with_plan(model: &SpectralModel, grid: &[Vec<f64>], plan: &TruncationPlan, seed: u64) -> Result<FieldRealization> {
    let config = sample_poisson(model.intensity(), &plan.window, seed)?;
    realize(model, grid, plan, &config)
}
