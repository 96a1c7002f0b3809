//! K-fold cross-validation over the sieve sizes, the slack scale `C₀` and
//! the Sobolev radius `K`.
//!
//! Each grid point is fitted on the training folds and scored by the
//! out-of-fold analogue of `Q_n`: the held-out residual `τ − δ̂₀` is
//! projected onto `φ(x, y)` by a regression fitted on the held-out
//! complete cases, and the squared fitted values are averaged. All grid
//! points are scored with the largest `φ` in the grid so their scores are
//! on a common footing.

use std::cmp::Ordering;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::data::{CovariateScaler, ObservationTable};
use crate::error::{Error, Result};
use crate::estimator::{fit_scaled, EstimateReport, EstimatorConfig};
use crate::parallel::map_indexed;
use crate::projection::{psi_rows, ProjectionOperator, TauSpec, TauValues};
use crate::rng::{self, Purpose};
use crate::solver::CnRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningGrid {
    pub k_n: Vec<usize>,
    pub q_n: Vec<usize>,
    #[serde(rename = "C0")]
    pub c0: Vec<f64>,
    #[serde(rename = "K")]
    pub k_radius: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            k_n: vec![2],
            q_n: vec![2],
            c0: vec![1.0],
            k_radius: vec![10.0],
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k_n: usize,
    pub q_n: usize,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "K")]
    pub k_radius: f64,
}

impl GridPoint {
    /// `base` with this point's sizes, slack scale and radius.
    pub fn apply(&self, base: &EstimatorConfig) -> EstimatorConfig {
        let mut cfg = base.clone();
        cfg.q_n = Some(self.q_n);
        cfg.k_n = Some(self.k_n);
        cfg.psi = None;
        cfg.phi = None;
        cfg.solver.c0 = self.c0;
        cfg.solver.c_n_rule = CnRule::QMinPlusRate;
        cfg.solver.k_radius = self.k_radius;
        cfg
    }
}

impl TuningGrid {
    /// Affine and quadratic sieves, three slack scales and two radii, for
    /// inputs of dimension `dim = d + 1`.
    pub fn default_for(dim: usize) -> Self {
        let sizes = vec![dim + 1, (dim + 1) * (dim + 2) / 2];
        Self {
            k_n: sizes.clone(),
            q_n: sizes,
            c0: vec![0.01, 0.1, 1.0],
            k_radius: vec![10.0, 100.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("tuning grid: {what}")));
        if self.k_n.is_empty() || self.q_n.is_empty() || self.c0.is_empty() || self.k_radius.is_empty() {
            return bad("every candidate list must be nonempty");
        }
        if self.folds < 2 {
            return bad("at least two folds are required");
        }
        if self.k_n.iter().chain(&self.q_n).any(|&v| v == 0) {
            return bad("sieve sizes must be positive");
        }
        if self.c0.iter().any(|v| !(*v >= 0.0)) || self.k_radius.iter().any(|v| !(*v > 0.0)) {
            return bad("C0 must be nonnegative and K positive");
        }
        if self.points().is_empty() {
            return bad("no pair with q_n <= k_n");
        }
        Ok(())
    }

    /// Grid points in `k_n, q_n, C₀, K` order, skipping `q_n > k_n`.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &k_n in &self.k_n {
            for &q_n in &self.q_n {
                if q_n > k_n {
                    continue;
                }
                for &c0 in &self.c0 {
                    for &k_radius in &self.k_radius {
                        out.push(GridPoint { k_n, q_n, c0, k_radius });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub k_n: usize,
    pub q_n: usize,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "K")]
    pub k_radius: f64,
    pub fold: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningOutcome {
    pub chosen: GridPoint,
    pub mean_scores: Vec<(GridPoint, f64)>,
    pub scores: Vec<ScoreRow>,
}

impl TuningOutcome {
    pub fn write_scores_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.scores {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fold label per row, stratified by the response indicator.
pub fn stratified_folds(table: &ObservationTable, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(rng::derive_seed(seed, 0, Purpose::Folds));
    let mut labels = vec![0; table.n()];
    let mut offset = 0;
    for response in [true, false] {
        let mut rows: Vec<usize> = (0..table.n()).filter(|&i| table.r(i) == response).collect();
        rows.shuffle(&mut rng);
        for (k, &i) in rows.iter().enumerate() {
            labels[i] = (offset + k) % folds;
        }
        offset += rows.len();
    }
    labels
}

/// Chooses a grid point by cross-validation. `base` supplies the settings
/// the grid does not cover (α, Sobolev order, solver tolerances).
pub fn cross_validate(
    table: &ObservationTable,
    tau: &TauSpec,
    grid: &TuningGrid,
    base: &EstimatorConfig,
) -> Result<TuningOutcome> {
    let tau_values = TauValues::evaluate(tau, table).map_err(Error::at("tau"))?;
    let scaled = CovariateScaler::fit(table)
        .and_then(|s| s.apply(table))
        .map_err(Error::at("scaling"))?;
    cross_validate_scaled(&scaled, &tau_values, grid, base)
}

pub fn cross_validate_scaled(
    table: &ObservationTable,
    tau: &TauValues,
    grid: &TuningGrid,
    base: &EstimatorConfig,
) -> Result<TuningOutcome> {
    grid.validate()?;
    let points = grid.points();
    let k_max = *grid.k_n.iter().max().expect("nonempty");
    let labels = stratified_folds(table, grid.folds, grid.seed);
    let reference = BasisSpec::graded_polynomial(table.d() + 1, k_max);

    struct FoldData {
        train: ObservationTable,
        train_tau: TauValues,
        held: ObservationTable,
        held_tau: Vec<f64>,
        op: ProjectionOperator,
    }
    let mut fold_data = Vec::with_capacity(grid.folds);
    for f in 0..grid.folds {
        let train_rows: Vec<usize> = (0..table.n()).filter(|&i| labels[i] != f).collect();
        let held_rows: Vec<usize> = (0..table.n()).filter(|&i| labels[i] == f && table.r(i)).collect();
        if held_rows.len() < k_max {
            return Err(Error::FoldTooSmall {
                fold: f,
                size: held_rows.len(),
                needed: k_max,
            });
        }
        let held = table.select(&held_rows);
        let op = ProjectionOperator::fit(&held, &reference).map_err(|e| match e {
            Error::TooFewCompleteCases { complete, needed } => Error::FoldTooSmall {
                fold: f,
                size: complete,
                needed,
            },
            other => other,
        })?;
        fold_data.push(FoldData {
            train: table.select(&train_rows),
            train_tau: TauValues::from_values(train_rows.iter().map(|&i| tau.get(i)).collect()),
            held,
            held_tau: held_rows.iter().map(|&i| tau.get(i).expect("complete case")).collect(),
            op,
        });
    }

    let jobs = points.len() * grid.folds;
    let scores = map_indexed(jobs, |job| -> Result<ScoreRow> {
        let point = points[job / grid.folds];
        let f = job % grid.folds;
        let fd = &fold_data[f];
        let cfg = point.apply(base);
        let (_, delta, _) = fit_scaled(&fd.train, &fd.train_tau, &cfg).map_err(|e| match e {
            Error::TooFewCompleteCases { complete, needed } => Error::FoldTooSmall {
                fold: f,
                size: complete,
                needed,
            },
            other => other,
        })?;
        let psi = psi_rows(&fd.held, delta.basis(), fd.op.rows())?;
        let resid = nalgebra::DVector::from_vec(fd.held_tau.clone()) - psi * delta.theta();
        let fitted = fd.op.fitted_vec(&resid);
        Ok(ScoreRow {
            k_n: point.k_n,
            q_n: point.q_n,
            c0: point.c0,
            k_radius: point.k_radius,
            fold: f,
            score: fitted.norm_squared() / fitted.len() as f64,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mean_scores: Vec<(GridPoint, f64)> = points
        .iter()
        .enumerate()
        .map(|(p, point)| {
            let s = &scores[p * grid.folds..(p + 1) * grid.folds];
            (*point, s.iter().map(|r| r.score).sum::<f64>() / grid.folds as f64)
        })
        .collect();
    let chosen = mean_scores
        .iter()
        .min_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(Ordering::Equal)
                .then(a.0.q_n.cmp(&b.0.q_n))
                .then(a.0.k_n.cmp(&b.0.k_n))
                .then(a.0.k_radius.total_cmp(&b.0.k_radius))
        })
        .expect("nonempty grid")
        .0;
    Ok(TuningOutcome {
        chosen,
        mean_scores,
        scores,
    })
}

/// Cross-validates, then estimates on the full table with the chosen point.
pub fn estimate_tuned(
    table: &ObservationTable,
    tau: &TauSpec,
    grid: &TuningGrid,
    base: &EstimatorConfig,
) -> Result<(EstimateReport, TuningOutcome)> {
    let outcome = cross_validate(table, tau, grid, base)?;
    let mut report = crate::estimator::estimate(table, tau, &outcome.chosen.apply(base))?;
    report.diagnostics.tuning = Some(outcome.chosen);
    Ok((report, outcome))
}
