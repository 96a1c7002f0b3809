//! Observation tables, CSV I/O, min–max scaling and the synthetic
//! data-generating processes used by the simulation studies.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// `n` rows of (response indicator, possibly-missing outcome, covariates,
/// shadow variable), plus optional named auxiliary columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    r: Vec<bool>,
    y: Vec<Option<f64>>,
    x: Vec<f64>,
    d: usize,
    z: Vec<f64>,
    extra: BTreeMap<String, Vec<Option<f64>>>,
}

impl ObservationTable {
    /// Builds a table from column data. `x` is row-major with `d` columns.
    pub fn new(
        r: Vec<bool>,
        y: Vec<Option<f64>>,
        x: Vec<f64>,
        d: usize,
        z: Vec<f64>,
    ) -> Result<Self> {
        let n = r.len();
        if n == 0 {
            return Err(Error::InvalidSpec("table must have at least one row".into()));
        }
        if y.len() != n || z.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if y.len() != n { y.len() } else { z.len() },
            });
        }
        if x.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: x.len(),
            });
        }
        for (row, (&ri, yi)) in r.iter().zip(&y).enumerate() {
            match (ri, yi) {
                (true, None) => {
                    return Err(Error::InconsistentMissingness {
                        row,
                        detail: "r = 1 but outcome is missing",
                    })
                }
                (false, Some(_)) => {
                    return Err(Error::InconsistentMissingness {
                        row,
                        detail: "r = 0 but outcome is present",
                    })
                }
                (true, Some(v)) if !v.is_finite() => {
                    return Err(Error::InvalidSpec(format!("row {row}: non-finite outcome")))
                }
                _ => {}
            }
        }
        if x.iter().chain(&z).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("covariates and shadow variable must be finite".into()));
        }
        Ok(Self {
            r,
            y,
            x,
            d,
            z,
            extra: BTreeMap::new(),
        })
    }

    /// Attaches a named auxiliary column (e.g. a user-supplied functional).
    pub fn with_column(mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: values.len(),
            });
        }
        self.extra.insert(name.into(), values);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self, i: usize) -> bool {
        self.r[i]
    }

    pub fn responses(&self) -> &[bool] {
        &self.r
    }

    pub fn y(&self, i: usize) -> Option<f64> {
        self.y[i]
    }

    pub fn outcomes(&self) -> &[Option<f64>] {
        &self.y
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z[i]
    }

    pub fn shadow(&self) -> &[f64] {
        &self.z
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.extra.get(name).map(Vec::as_slice)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.extra.keys().map(String::as_str)
    }

    pub fn complete_count(&self) -> usize {
        self.r.iter().filter(|&&r| r).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        1.0 - self.complete_count() as f64 / self.n() as f64
    }

    /// The point `(x, z)` at which sieve functions of the shadow variable are evaluated.
    pub fn xz_point(&self, i: usize) -> Vec<f64> {
        let mut p = self.x_row(i).to_vec();
        p.push(self.z[i]);
        p
    }

    /// The point `(x, y)`, available only for complete cases.
    pub fn xy_point(&self, i: usize) -> Option<Vec<f64>> {
        self.y[i].map(|y| {
            let mut p = self.x_row(i).to_vec();
            p.push(y);
            p
        })
    }

    /// A new table holding the given rows in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut x = Vec::with_capacity(rows.len() * self.d);
        for &i in rows {
            x.extend_from_slice(self.x_row(i));
        }
        Self {
            r: rows.iter().map(|&i| self.r[i]).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            x,
            d: self.d,
            z: rows.iter().map(|&i| self.z[i]).collect(),
            extra: self
                .extra
                .iter()
                .map(|(k, v)| (k.clone(), rows.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }
}

/// Simulated table with the full outcome vector and the true estimand.
#[derive(Debug, Clone)]
pub struct TruthTable {
    pub table: ObservationTable,
    pub y_full: Vec<f64>,
    pub mu_true: f64,
}

// ---------------------------------------------------------------------------
// Scaling

/// Per-column `(min, max)` pairs for the min–max map onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateScaler {
    pub x: Vec<(f64, f64)>,
    pub y: (f64, f64),
    pub z: (f64, f64),
}

fn range_of(name: &str, values: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi > lo {
        Ok((lo, hi))
    } else {
        Err(Error::DegenerateDimension(name.to_string()))
    }
}

fn forward((lo, hi): (f64, f64), v: f64) -> f64 {
    (v - lo) / (hi - lo)
}

fn backward((lo, hi): (f64, f64), v: f64) -> f64 {
    lo + v * (hi - lo)
}

impl CovariateScaler {
    pub fn fit(table: &ObservationTable) -> Result<Self> {
        let x = (0..table.d())
            .map(|j| {
                range_of(
                    &format!("x{}", j + 1),
                    (0..table.n()).map(|i| table.x_row(i)[j]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let y = range_of("y", table.outcomes().iter().flatten().copied())?;
        let z = range_of("z", table.shadow().iter().copied())?;
        Ok(Self { x, y, z })
    }

    fn map(&self, table: &ObservationTable, f: fn((f64, f64), f64) -> f64) -> Result<ObservationTable> {
        if table.d() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                got: table.d(),
            });
        }
        let d = table.d();
        let x = table
            .x
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.x[k % d], v))
            .collect();
        Ok(ObservationTable {
            r: table.r.clone(),
            y: table.y.iter().map(|v| v.map(|v| f(self.y, v))).collect(),
            x,
            d,
            z: table.z.iter().map(|&v| f(self.z, v)).collect(),
            extra: table.extra.clone(),
        })
    }

    /// Maps covariates, observed outcomes and the shadow variable onto `[0, 1]`.
    /// Auxiliary columns are left in original units.
    pub fn apply(&self, table: &ObservationTable) -> Result<ObservationTable> {
        self.map(table, forward)
    }

    pub fn invert(&self, table: &ObservationTable) -> Result<ObservationTable> {
        self.map(table, backward)
    }
}

pub fn fit_scaler(table: &ObservationTable) -> Result<CovariateScaler> {
    CovariateScaler::fit(table)
}

pub fn apply_scaler(scaler: &CovariateScaler, table: &ObservationTable) -> Result<ObservationTable> {
    scaler.apply(table)
}

// ---------------------------------------------------------------------------
// CSV

/// How outcome cells on nonresponse rows are validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Missingness {
    /// The outcome cell must be empty or `NA` exactly when `r = 0`.
    #[default]
    Strict,
    /// Outcome cells on `r = 0` rows are ignored.
    Lenient,
}

/// Column names for the required fields. When `x` is `None`, covariates
/// are the consecutive header columns `x1, x2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub r: String,
    pub y: String,
    pub x: Option<Vec<String>>,
    pub z: String,
    #[serde(default)]
    pub extra: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            r: "r".into(),
            y: "y".into(),
            x: None,
            z: "z".into(),
            extra: Vec::new(),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na")
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let c = cell.trim();
    c.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NonNumericCell {
            row,
            column: column.to_string(),
            value: c.to_string(),
        })
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema, mode: Missingness) -> Result<ObservationTable> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema, mode)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema, mode: Missingness) -> Result<ObservationTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let r_col = find(&schema.r)?;
    let y_col = find(&schema.y)?;
    let z_col = find(&schema.z)?;
    let x_names: Vec<String> = match &schema.x {
        Some(names) => names.clone(),
        None => (1..)
            .map(|j| format!("x{j}"))
            .take_while(|name| headers.iter().any(|h| h.trim() == name))
            .collect(),
    };
    let x_cols = x_names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;
    let extra_cols = schema
        .extra
        .iter()
        .map(|n| find(n))
        .collect::<Result<Vec<_>>>()?;

    let d = x_cols.len();
    let (mut r, mut y, mut x, mut z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut extra: Vec<Vec<Option<f64>>> = vec![Vec::new(); extra_cols.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |c: usize| record.get(c).unwrap_or("");
        let ri = parse_cell(cell(r_col), row, &schema.r)?;
        let ri = if ri == 1.0 {
            true
        } else if ri == 0.0 {
            false
        } else {
            return Err(Error::NonNumericCell {
                row,
                column: schema.r.clone(),
                value: cell(r_col).to_string(),
            });
        };
        let y_cell = cell(y_col);
        let yi = match (ri, is_missing(y_cell), mode) {
            (true, true, _) => {
                return Err(Error::InconsistentMissingness {
                    row,
                    detail: "r = 1 but outcome is missing",
                })
            }
            (true, false, _) => Some(parse_cell(y_cell, row, &schema.y)?),
            (false, false, Missingness::Strict) => {
                return Err(Error::InconsistentMissingness {
                    row,
                    detail: "r = 0 but outcome is present",
                })
            }
            (false, _, _) => None,
        };
        r.push(ri);
        y.push(yi);
        for (c, name) in x_cols.iter().zip(&x_names) {
            x.push(parse_cell(cell(*c), row, name)?);
        }
        z.push(parse_cell(cell(z_col), row, &schema.z)?);
        for ((c, name), out) in extra_cols.iter().zip(&schema.extra).zip(extra.iter_mut()) {
            let v = cell(*c);
            out.push(if is_missing(v) {
                None
            } else {
                Some(parse_cell(v, row, name)?)
            });
        }
    }
    let mut table = ObservationTable::new(r, y, x, d, z)?;
    for (name, values) in schema.extra.iter().zip(extra) {
        table = table.with_column(name.clone(), values)?;
    }
    Ok(table)
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `r, y, x1..xd, z` (plus auxiliary columns) with 17 significant digits.
pub fn write_csv<W: Write>(table: &ObservationTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["r".to_string(), "y".to_string()];
    header.extend((1..=table.d()).map(|j| format!("x{j}")));
    header.push("z".into());
    header.extend(table.extra.keys().cloned());
    w.write_record(&header)?;
    for i in 0..table.n() {
        let mut rec = vec![
            if table.r(i) { "1" } else { "0" }.to_string(),
            table.y(i).map(fmt_num).unwrap_or_else(|| "NA".into()),
        ];
        rec.extend(table.x_row(i).iter().map(|&v| fmt_num(v)));
        rec.push(fmt_num(table.z(i)));
        rec.extend(
            table
                .extra
                .values()
                .map(|col| col[i].map(fmt_num).unwrap_or_else(|| "NA".into())),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(table: &ObservationTable, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(table, std::io::BufWriter::new(file))
}

// ---------------------------------------------------------------------------
// Scenarios

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
}

/// Case I settings name the propensity model first and the outcome model
/// second (`NL` = nonlinear propensity, linear outcome).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    LL,
    NL,
    LN,
    NN,
    Model1,
    Model2,
}

impl Setting {
    pub fn case(self) -> Case {
        match self {
            Setting::LL | Setting::NL | Setting::LN | Setting::NN => Case::I,
            Setting::Model1 | Setting::Model2 => Case::II,
        }
    }

    fn linear_propensity(self) -> bool {
        matches!(self, Setting::LL | Setting::LN)
    }

    fn linear_outcome(self) -> bool {
        matches!(self, Setting::LL | Setting::NL)
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ll" => Setting::LL,
            "nl" => Setting::NL,
            "ln" => Setting::LN,
            "nn" => Setting::NN,
            "model1" | "1" => Setting::Model1,
            "model2" | "2" => Setting::Model2,
            _ => return Err(Error::InvalidSpec(format!("unknown setting `{s}`"))),
        })
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(Case::I),
            "II" | "ii" | "2" => Ok(Case::II),
            _ => Err(Error::InvalidSpec(format!("unknown case `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub case: Case,
    pub setting: Setting,
    pub n: usize,
    pub seed: u64,
}

/// Coefficients `(intercept, x1..x4, y)` of the linear-logistic propensity.
const CASE_I_LINEAR_PROPENSITY: [f64; 6] = [3.0, 2.0, 1.0, 1.0, -0.5, -0.8];

impl ScenarioSpec {
    pub fn new(setting: Setting, n: usize, seed: u64) -> Self {
        Self {
            case: setting.case(),
            setting,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.setting.case() != self.case {
            return Err(Error::InvalidSpec(format!(
                "setting {} does not belong to case {:?}",
                self.setting, self.case
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn covariate_dim(&self) -> usize {
        match self.case {
            Case::I => 4,
            Case::II => 0,
        }
    }

    /// Analytic value of `E(Y)` under the generator.
    pub fn mu_true(&self) -> f64 {
        match self.setting {
            Setting::LL | Setting::NL => 6.0,
            // 1 + 2 E[x1^2] + 2 E[exp x2] + E[sin x3] + E[x4]
            Setting::LN | Setting::NN => {
                1.0 + 2.0 / 3.0 + 2.0 * (std::f64::consts::E - 1.0) + (1.0 - 1f64.cos()) + 0.5
            }
            Setting::Model1 | Setting::Model2 => 0.5,
        }
    }

    /// Starting point for the MNAR-IPW moment solver when the truth is
    /// "known": the generating coefficients for a linear-logistic
    /// propensity, the linear coefficients for a nonlinear Case I
    /// propensity, and the population root of the moment system for
    /// Case II (whose propensity is not logistic).
    pub fn propensity_reference(&self) -> Vec<f64> {
        match self.case {
            Case::I => CASE_I_LINEAR_PROPENSITY.to_vec(),
            Case::II => crate::competitors::case2_pseudo_true_theta(self.setting),
        }
    }

    pub fn generate(&self) -> Result<TruthTable> {
        generate(self)
    }
}

fn expit(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Draws one dataset from the scenario's data-generating process.
pub fn generate(spec: &ScenarioSpec) -> Result<TruthTable> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed);
    let n = spec.n;
    let d = spec.covariate_dim();
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let beta22 = Beta::new(2.0, 2.0).expect("valid beta");

    let mut r = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut y_full = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * d);
    let mut z = Vec::with_capacity(n);

    for _ in 0..n {
        let (yi, zi, pi) = match spec.case {
            Case::I => {
                let xs: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
                let mean = if spec.setting.linear_outcome() {
                    1.0 + 2.0 * xs[0] + 4.0 * xs[1] + xs[2] + 3.0 * xs[3]
                } else {
                    1.0 + 2.0 * xs[0].powi(2) + 2.0 * xs[1].exp() + xs[2].sin() + xs[3]
                };
                let yi = mean + std_normal.sample(&mut rng);
                let zi = 3.0 - 2.0 * xs[0] + xs[0].powi(2) + 4.0 * xs[1] + xs[2] - 2.0 * xs[3]
                    + 3.0 * yi
                    + std_normal.sample(&mut rng);
                let eta = if spec.setting.linear_propensity() {
                    let t = CASE_I_LINEAR_PROPENSITY;
                    t[0] + t[1] * xs[0] + t[2] * xs[1] + t[3] * xs[2] + t[4] * xs[3] + t[5] * yi
                } else {
                    3.5 + 3.0 * xs[0].powi(2) + 4.0 * xs[1].exp() + xs[2].sin() + 0.5 * xs[3]
                        - 2.0 * yi
                };
                x.extend_from_slice(&xs);
                (yi, zi, expit(eta))
            }
            Case::II => {
                let (yi, pi) = match spec.setting {
                    Setting::Model1 => {
                        let yi: f64 = rng.random();
                        (yi, 4.0 * yi * yi * (1.0 - yi))
                    }
                    _ => {
                        let yi = beta22.sample(&mut rng);
                        (yi, 2.0 * yi / 3.0)
                    }
                };
                let zi = if rng.random::<f64>() < yi { 1.0 } else { 0.0 };
                (yi, zi, pi)
            }
        };
        let ri = rng.random::<f64>() < pi;
        r.push(ri);
        y.push(ri.then_some(yi));
        y_full.push(yi);
        z.push(zi);
    }
    let table = ObservationTable::new(r, y, x, d, z)?;
    Ok(TruthTable {
        table,
        y_full,
        mu_true: spec.mu_true(),
    })
}
