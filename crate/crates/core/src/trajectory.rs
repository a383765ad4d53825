//! Uniformly sampled trajectories and their tabular serialization.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lie::GroupElement;
use crate::sphere::SpherePoint;

const GRID_TOL: f64 = 1e-9;

/// A state that can be written as one row of a trajectory table.
pub trait StateRecord: Sized + Clone {
    /// Tag written to serialized output; distinct per state type.
    const FLAVOR: &'static str;

    /// Column names, excluding the leading time column.
    fn columns() -> Vec<String>;

    fn to_row(&self) -> Vec<f64>;

    fn from_row(row: &[f64]) -> Result<Self>;
}

/// Column names `prefix1, prefix2, prefix3`.
pub fn vector_columns(prefix: &str) -> Vec<String> {
    (1..=3).map(|k| format!("{prefix}{k}")).collect()
}

/// Column names `prefix11 .. prefix33` in row-major order.
pub fn matrix_columns(prefix: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(9);
    for i in 1..=3 {
        for j in 1..=3 {
            out.push(format!("{prefix}{i}{j}"));
        }
    }
    out
}

pub(crate) fn push_vector(row: &mut Vec<f64>, v: &Vector3<f64>) {
    row.extend_from_slice(v.as_slice());
}

pub(crate) fn push_matrix(row: &mut Vec<f64>, m: &Matrix3<f64>) {
    for i in 0..3 {
        for j in 0..3 {
            row.push(m[(i, j)]);
        }
    }
}

pub(crate) fn read_vector(row: &[f64], at: usize) -> Vector3<f64> {
    Vector3::new(row[at], row[at + 1], row[at + 2])
}

pub(crate) fn read_matrix(row: &[f64], at: usize) -> Matrix3<f64> {
    Matrix3::from_row_slice(&row[at..at + 9])
}

pub(crate) fn check_row_len(row: &[f64], n: usize) -> Result<()> {
    if row.len() != n {
        return Err(Error::InvalidInput(format!(
            "row has {} values, expected {n}",
            row.len()
        )));
    }
    Ok(())
}

impl StateRecord for SpherePoint {
    const FLAVOR: &'static str = "sphere-point";

    fn columns() -> Vec<String> {
        vector_columns("x")
    }

    fn to_row(&self) -> Vec<f64> {
        self.as_vector().as_slice().to_vec()
    }

    fn from_row(row: &[f64]) -> Result<Self> {
        check_row_len(row, 3)?;
        SpherePoint::new(read_vector(row, 0))
    }
}

impl StateRecord for GroupElement {
    const FLAVOR: &'static str = "group";

    fn columns() -> Vec<String> {
        matrix_columns("g")
    }

    fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(9);
        push_matrix(&mut row, self.matrix());
        row
    }

    fn from_row(row: &[f64]) -> Result<Self> {
        check_row_len(row, 9)?;
        GroupElement::new(read_matrix(row, 0))
    }
}

/// States sampled at `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    t0: f64,
    dt: f64,
    states: Vec<S>,
}

impl<S> Trajectory<S> {
    /// Requires `dt > 0` and at least two states.
    pub fn new(t0: f64, dt: f64, states: Vec<S>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidStep(format!("t0 = {t0}, dt = {dt}")));
        }
        if states.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                got: states.len(),
            });
        }
        Ok(Self { t0, dt, states })
    }

    /// Builds a trajectory from explicit sample times, which must be uniform.
    pub fn from_samples(times: &[f64], states: Vec<S>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::InvalidInput(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                got: times.len(),
            });
        }
        let n = times.len();
        let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
        for (k, t) in times.iter().enumerate() {
            let expected = times[0] + k as f64 * dt;
            if !t.is_finite() || (t - expected).abs() > GRID_TOL * dt.abs().max(1.0) {
                return Err(Error::NonUniformGrid(k));
            }
        }
        Self::new(times[0], dt, states)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|k| self.time(k)).collect()
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.states.len() - 1)
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn first(&self) -> &S {
        &self.states[0]
    }

    pub fn last(&self) -> &S {
        &self.states[self.states.len() - 1]
    }

    pub fn into_states(self) -> Vec<S> {
        self.states
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> Trajectory<T> {
        Trajectory {
            t0: self.t0,
            dt: self.dt,
            states: self.states.iter().map(f).collect(),
        }
    }

    /// Every `stride`-th sample, starting with the first.
    pub fn decimate(&self, stride: usize) -> Result<Self>
    where
        S: Clone,
    {
        if stride == 0 {
            return Err(Error::InvalidInput("zero stride".into()));
        }
        let states: Vec<S> = self.states.iter().step_by(stride).cloned().collect();
        Self::new(self.t0, self.dt * stride as f64, states)
    }
}

impl<S: StateRecord> Trajectory<S> {
    pub fn to_table(&self) -> Table {
        let mut columns = vec!["t".to_string()];
        columns.extend(S::columns());
        let rows = self
            .states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let mut row = vec![self.time(k)];
                row.extend(s.to_row());
                row
            })
            .collect();
        Table {
            flavor: S::FLAVOR.to_string(),
            columns,
            rows,
        }
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        if !table.flavor.is_empty() && table.flavor != S::FLAVOR {
            return Err(Error::InvalidInput(format!(
                "expected {} records, found {}",
                S::FLAVOR,
                table.flavor
            )));
        }
        let mut expected = vec!["t".to_string()];
        expected.extend(S::columns());
        if table.columns != expected {
            return Err(Error::InvalidInput("column header mismatch".into()));
        }
        let times: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
        let states = table
            .rows
            .iter()
            .map(|r| S::from_row(&r[1..]))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(&times, states)
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv()
    }

    pub fn to_json(&self) -> String {
        let table = self.to_table();
        let doc = json!({
            "flavor": S::FLAVOR,
            "t0": self.t0,
            "dt": self.dt,
            "columns": table.columns,
            "rows": table.rows,
        });
        serde_json::to_string_pretty(&doc).expect("finite values serialize")
    }
}

/// Parsed trajectory data: a header plus numeric rows, time first.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub flavor: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// CSV with a header row and 17 significant digits. The flavor is not
    /// written; it is implied by the columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
        let columns: Vec<String> = first.split(',').map(|c| c.trim().to_string()).collect();
        if columns.first().map(String::as_str) != Some("t") {
            return Err(Error::InvalidInput("first column must be t".into()));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidInput(format!("row {k}: {e}")))?;
            if row.len() != columns.len() {
                return Err(Error::InvalidInput(format!(
                    "row {k} has {} values for {} columns",
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self {
            flavor: String::new(),
            columns,
            rows,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let bad = |what: &str| Error::InvalidInput(format!("JSON trajectory: bad {what}"));
        let flavor = doc["flavor"].as_str().ok_or_else(|| bad("flavor"))?.to_string();
        let columns = doc["columns"]
            .as_array()
            .ok_or_else(|| bad("columns"))?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| bad("columns")))
            .collect::<Result<Vec<_>>>()?;
        let rows = doc["rows"]
            .as_array()
            .ok_or_else(|| bad("rows"))?
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| bad("rows"))?
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| bad("rows")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            flavor,
            columns,
            rows,
        })
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}
