//! Calendar-aware monthly series and the design-matrix columns shared by
//! every model: month dummies, polynomial time terms and lagged values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month. Ordering is lexicographic on `(year, month)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthDate {
    year: i32,
    month: u32,
}

impl MonthDate {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Validation(format!("month {month} not in 1..=12")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    /// Months since year 0, January. Monotone in calendar order.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) + 1;
        Self {
            year: year as i32,
            month: month as u32,
        }
    }

    pub fn add_months(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    pub fn succ(self) -> Self {
        self.add_months(1)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: MonthDate) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for MonthDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthDate {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("expected YYYY-MM, got '{s}'"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        MonthDate::new(year, month)
    }
}

impl Serialize for MonthDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Gap-free monthly observations for one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthlySeries {
    region: String,
    start: MonthDate,
    values: Vec<f64>,
}

impl MonthlySeries {
    pub fn new(region: impl Into<String>, start: MonthDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("series has no observations".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Validation(format!(
                "value {v} at {} is not a finite non-negative count",
                start.add_months(i as i64)
            )));
        }
        Ok(Self {
            region: region.into(),
            start,
            values,
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn start(&self) -> MonthDate {
        self.start
    }

    pub fn end(&self) -> MonthDate {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The calendar month of observation `index` (0-based).
    pub fn month_at(&self, index: usize) -> Result<MonthDate> {
        if index >= self.values.len() {
            return Err(Error::OutOfBounds {
                index,
                len: self.values.len(),
            });
        }
        Ok(self.start.add_months(index as i64))
    }

    pub fn months(&self) -> impl Iterator<Item = MonthDate> + Clone + '_ {
        (0..self.values.len()).map(move |i| self.start.add_months(i as i64))
    }

    /// The first `len` observations.
    pub fn prefix(&self, len: usize) -> Result<MonthlySeries> {
        if len == 0 || len > self.values.len() {
            return Err(Error::OutOfBounds {
                index: len,
                len: self.values.len(),
            });
        }
        Ok(Self {
            region: self.region.clone(),
            start: self.start,
            values: self.values[..len].to_vec(),
        })
    }
}

/// Affine map from the raw time index `t = 1..n` to the value used in
/// polynomial terms: `(t - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScaling {
    pub center: f64,
    pub scale: f64,
}

impl TimeScaling {
    pub const IDENTITY: TimeScaling = TimeScaling {
        center: 0.0,
        scale: 1.0,
    };

    /// Centers `1..=n` to mean zero and unit (population) standard deviation.
    pub fn standardized(n: usize) -> Self {
        let n = n as f64;
        let center = (n + 1.0) / 2.0;
        let sd = ((n * n - 1.0) / 12.0).sqrt();
        TimeScaling {
            center,
            scale: if sd > 0.0 { sd } else { 1.0 },
        }
    }

    pub fn apply(&self, raw: usize) -> f64 {
        (raw as f64 - self.center) / self.scale
    }
}

/// Raw position `1..n` together with its scaled value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIndex {
    pub raw: usize,
    pub scaled: f64,
}

impl TimeIndex {
    pub fn new(raw: usize, scaling: &TimeScaling) -> Self {
        Self {
            raw,
            scaled: scaling.apply(raw),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Column-oriented regression design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    columns: Vec<Column>,
}

impl DesignMatrix {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.rows {
            return Err(Error::Validation(format!(
                "column '{name}' has {} rows, design has {}",
                values.len(),
                self.rows
            )));
        }
        self.columns.push(Column { name, values });
        Ok(())
    }

    pub fn with(mut self, other: DesignMatrix) -> Result<Self> {
        for c in other.columns {
            self.push(c.name, c.values)?;
        }
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col].values[row]
    }

    /// Keeps rows `range` of every column.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> DesignMatrix {
        DesignMatrix {
            rows: range.len(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: c.values[range.clone()].to_vec(),
                })
                .collect(),
        }
    }
}

pub(crate) fn dummy_name(month: u32) -> String {
    format!("month_{month:02}")
}

pub(crate) fn power_name(power: usize) -> String {
    if power == 1 {
        "t".to_string()
    } else {
        format!("t{power}")
    }
}

/// Month dummies for an arbitrary run of calendar months.
pub(crate) fn dummies_for(months: impl Iterator<Item = MonthDate> + Clone, rows: usize) -> DesignMatrix {
    let mut design = DesignMatrix::new(rows);
    for m in 1..=12 {
        let col = months
            .clone()
            .map(|d| if d.month() == m { 1.0 } else { 0.0 })
            .collect();
        design.push(dummy_name(m), col).expect("row count matches");
    }
    design
}

/// Powers `1..=degree` of the scaled time index for raw positions `raw`.
pub(crate) fn poly_for(
    raw: impl Iterator<Item = usize> + Clone,
    rows: usize,
    degree: usize,
    scaling: &TimeScaling,
) -> DesignMatrix {
    let mut design = DesignMatrix::new(rows);
    for p in 1..=degree {
        let col = raw
            .clone()
            .map(|t| scaling.apply(t).powi(p as i32))
            .collect();
        design.push(power_name(p), col).expect("row count matches");
    }
    design
}

/// Twelve full-dummy month columns (`month_01` … `month_12`).
pub fn build_seasonal_dummies(series: &MonthlySeries) -> DesignMatrix {
    dummies_for(series.months(), series.len())
}

/// Columns `t, t2, …, t{degree}` of the scaled time index `t = 1..n`.
pub fn build_poly_terms(
    series: &MonthlySeries,
    degree: usize,
    scaling: &TimeScaling,
) -> Result<DesignMatrix> {
    if degree < 1 {
        return Err(Error::Validation("polynomial degree must be at least 1".into()));
    }
    Ok(poly_for(1..=series.len(), series.len(), degree, scaling))
}

/// Values lagged by `lag` months; positions without a predecessor are `None`.
pub fn lag_values(series: &MonthlySeries, lag: usize) -> Result<Vec<Option<f64>>> {
    if lag < 1 {
        return Err(Error::Validation("lag must be at least 1".into()));
    }
    if lag >= series.len() {
        return Err(Error::InsufficientData {
            needed: lag + 1,
            got: series.len(),
        });
    }
    let v = series.values();
    Ok((0..v.len())
        .map(|i| i.checked_sub(lag).map(|j| v[j]))
        .collect())
}
