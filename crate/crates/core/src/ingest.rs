//! Wide-format CSV ingestion: one `Date` column plus one column of monthly
//! counts per region.
//!
//! Dates may be `YYYY-MM-DD`, `YYYY-MM` or `DD-MM-YYYY`; the format is
//! detected from the first data row and must then be used throughout. Rows
//! may appear in any order but must cover a gap-free run of months with no
//! month repeated.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MonthDate, MonthlySeries};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    regions: BTreeMap<String, MonthlySeries>,
    source_rows: usize,
    date_span: (MonthDate, MonthDate),
}

impl Dataset {
    /// Builds a panel; every series must share the same start and length.
    pub fn from_series(series: Vec<MonthlySeries>, source_rows: usize) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::Empty("dataset has no regions".into()))?;
        let (start, len) = (first.start(), first.len());
        let mut regions = BTreeMap::new();
        for s in series {
            if s.region().trim().is_empty() {
                return Err(Error::Header("empty region label".into()));
            }
            if s.start() != start || s.len() != len {
                return Err(Error::Validation(format!(
                    "region '{}' spans {}..{}, expected {}..{}",
                    s.region(),
                    s.start(),
                    s.end(),
                    start,
                    start.add_months(len as i64 - 1)
                )));
            }
            let name = s.region().to_string();
            if regions.insert(name.clone(), s).is_some() {
                return Err(Error::Header(format!("duplicate region '{name}'")));
            }
        }
        Ok(Self {
            regions,
            source_rows,
            date_span: (start, start.add_months(len as i64 - 1)),
        })
    }

    pub fn region(&self, name: &str) -> Option<&MonthlySeries> {
        self.regions.get(name)
    }

    pub fn region_names(&self) -> Vec<&str> {
        self.regions.keys().map(String::as_str).collect()
    }

    pub fn regions(&self) -> impl Iterator<Item = &MonthlySeries> {
        self.regions.values()
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    pub fn date_span(&self) -> (MonthDate, MonthDate) {
        self.date_span
    }

    pub fn n_months(&self) -> usize {
        (self.date_span.0.months_until(self.date_span.1) + 1) as usize
    }

    /// Wide CSV with `YYYY-MM` dates; [`parse_csv`] reads it back unchanged.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["Date".to_string()];
        header.extend(self.regions.keys().cloned());
        w.write_record(&header).expect("in-memory write");
        for i in 0..self.n_months() {
            let mut row = vec![self.date_span.0.add_months(i as i64).to_string()];
            row.extend(self.regions.values().map(|s| s.values()[i].to_string()));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingValues {
    #[default]
    Reject,
    /// Carry the previous month's value forward, with a logged warning.
    ForwardFill,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub missing: MissingValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DateFormat {
    YearMonthDay,
    YearMonth,
    DayMonthYear,
}

impl DateFormat {
    fn label(self) -> &'static str {
        match self {
            DateFormat::YearMonthDay => "YYYY-MM-DD",
            DateFormat::YearMonth => "YYYY-MM",
            DateFormat::DayMonthYear => "DD-MM-YYYY",
        }
    }

    fn detect(s: &str) -> Option<Self> {
        let shape: String = s
            .chars()
            .map(|c| if c.is_ascii_digit() { 'd' } else { c })
            .collect();
        match shape.as_str() {
            "dddd-dd-dd" => Some(DateFormat::YearMonthDay),
            "dddd-dd" => Some(DateFormat::YearMonth),
            "dd-dd-dddd" => Some(DateFormat::DayMonthYear),
            _ => None,
        }
    }

    fn parse(self, s: &str) -> std::result::Result<MonthDate, String> {
        if DateFormat::detect(s) != Some(self) {
            return Err(format!(
                "date '{s}' does not match the file's format {}",
                self.label()
            ));
        }
        let full = match self {
            DateFormat::YearMonthDay => NaiveDate::parse_from_str(s, "%Y-%m-%d"),
            DateFormat::YearMonth => NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d"),
            DateFormat::DayMonthYear => NaiveDate::parse_from_str(s, "%d-%m-%Y"),
        }
        .map_err(|e| format!("invalid date '{s}': {e}"))?;
        MonthDate::new(full.year(), full.month()).map_err(|e| e.to_string())
    }
}

pub fn parse_csv(input: impl Read) -> Result<Dataset> {
    parse_csv_with(input, &IngestOptions::default())
}

pub fn parse_csv_with(input: impl Read, options: &IngestOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::Empty("file has no header".into()));
    }
    let date_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.eq_ignore_ascii_case("date"))
        .map(|(i, _)| i)
        .collect();
    let date_col = match date_cols.as_slice() {
        [] => return Err(Error::MissingDateColumn),
        [c] => *c,
        _ => return Err(Error::Header("more than one Date column".into())),
    };
    let region_cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != date_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    if region_cols.is_empty() {
        return Err(Error::Header("no region columns next to Date".into()));
    }
    for (pos, (_, name)) in region_cols.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::Header(format!("region column {} has an empty name", pos + 2)));
        }
        if region_cols[..pos].iter().any(|(_, n)| n == name) {
            return Err(Error::Header(format!("duplicate region column '{name}'")));
        }
    }

    // (month, line, values)
    let mut rows: Vec<(MonthDate, usize, Vec<Option<f64>>)> = Vec::new();
    let mut format: Option<DateFormat> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parse_err = |column: &str, message: String| Error::Parse {
            row: line,
            column: column.to_string(),
            message,
        };
        let raw_date = record.get(date_col).unwrap_or("");
        let fmt = match format {
            Some(f) => f,
            None => {
                let f = DateFormat::detect(raw_date).ok_or_else(|| {
                    parse_err(
                        &header[date_col],
                        format!("unrecognized date '{raw_date}' (expected YYYY-MM-DD, YYYY-MM or DD-MM-YYYY)"),
                    )
                })?;
                format = Some(f);
                f
            }
        };
        let month = fmt
            .parse(raw_date)
            .map_err(|m| parse_err(&header[date_col], m))?;
        let values = region_cols
            .iter()
            .map(|(c, name)| {
                let cell = record.get(*c).unwrap_or("");
                if cell.is_empty() {
                    return Ok(None);
                }
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(name, format!("'{cell}' is not a number")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(parse_err(name, format!("{cell} is not a non-negative count")));
                }
                Ok(Some(v))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((month, line, values));
    }
    if rows.is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }

    rows.sort_by_key(|(m, line, _)| (*m, *line));
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateMonth {
                month: w[0].0,
                first_row: w[0].1,
                second_row: w[1].1,
            });
        }
    }
    let missing: Vec<MonthDate> = rows
        .windows(2)
        .flat_map(|w| (1..w[0].0.months_until(w[1].0)).map(move |k| w[0].0.add_months(k)))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MonthGap { missing });
    }

    let start = rows[0].0;
    let mut series = Vec::with_capacity(region_cols.len());
    for (j, (_, name)) in region_cols.iter().enumerate() {
        let mut values = Vec::with_capacity(rows.len());
        for (month, line, cells) in &rows {
            match (cells[j], options.missing, values.last()) {
                (Some(v), _, _) => values.push(v),
                (None, MissingValues::ForwardFill, Some(&prev)) => {
                    log::warn!("{name}: missing value at {month} forward-filled with {prev}");
                    values.push(prev);
                }
                (None, _, _) => {
                    return Err(Error::Parse {
                        row: *line,
                        column: name.clone(),
                        message: "missing value".into(),
                    })
                }
            }
        }
        series.push(MonthlySeries::new(name.clone(), start, values)?);
    }
    Dataset::from_series(series, rows.len())
}

/// One timestamped observation before monthly aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub date: NaiveDate,
    pub region: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Aggregation::Sum),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::Validation(format!(
                "unknown aggregation '{other}' (expected sum or mean)"
            ))),
        }
    }
}

/// Parses a timestamp of at least daily resolution: `YYYY-MM-DD`,
/// `DD-MM-YYYY`, `YYYY-MM-DD HH:MM[:SS]` or RFC 3339.
pub fn parse_timestamp(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    if DateFormat::detect(s) == Some(DateFormat::DayMonthYear) {
        if let Ok(d) = NaiveDate::parse_from_str(s, "%d-%m-%Y") {
            return Ok(d);
        }
    }
    for f in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, f) {
            return Ok(dt.date());
        }
    }
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.date_naive())
        .map_err(|_| Error::Validation(format!("unparseable timestamp '{s}'")))
}

/// Groups observations by region and calendar month.
pub fn aggregate_to_monthly(rows: &[Observation], policy: Aggregation) -> Result<Dataset> {
    if rows.is_empty() {
        return Err(Error::Empty("no observations to aggregate".into()));
    }
    let mut groups: BTreeMap<&str, BTreeMap<MonthDate, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        if !r.value.is_finite() || r.value < 0.0 {
            return Err(Error::Validation(format!(
                "{} on {}: {} is not a non-negative count",
                r.region, r.date, r.value
            )));
        }
        let m = MonthDate::new(r.date.year(), r.date.month())?;
        let slot = groups.entry(&r.region).or_default().entry(m).or_insert((0.0, 0));
        slot.0 += r.value;
        slot.1 += 1;
    }
    let all_months: std::collections::BTreeSet<MonthDate> =
        groups.values().flat_map(|g| g.keys().copied()).collect();
    let first = *all_months.first().expect("non-empty");
    let last = *all_months.last().expect("non-empty");
    let missing: Vec<MonthDate> = (0..=first.months_until(last))
        .map(|k| first.add_months(k))
        .filter(|m| !all_months.contains(m))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MonthGap { missing });
    }
    let n = (first.months_until(last) + 1) as usize;
    let mut series = Vec::new();
    for (region, months) in groups {
        let values = (0..n)
            .map(|k| {
                let m = first.add_months(k as i64);
                months
                    .get(&m)
                    .map(|(sum, count)| match policy {
                        Aggregation::Sum => *sum,
                        Aggregation::Mean => sum / *count as f64,
                    })
                    .ok_or_else(|| Error::Validation(format!("region '{region}' has no observations in {m}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        series.push(MonthlySeries::new(region, first, values)?);
    }
    Dataset::from_series(series, n)
}

/// Long-format CSV (`timestamp,region,value`, any header names in that
/// order) aggregated to months.
pub fn parse_long_csv(input: impl Read, policy: Aggregation) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.len() < 3 {
        return Err(Error::Header(
            "long format needs timestamp, region and value columns".into(),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |c: usize, message: String| Error::Parse {
            row: line,
            column: header[c].to_string(),
            message,
        };
        let date = parse_timestamp(&record[0]).map_err(|e| err(0, e.to_string()))?;
        let value = record[2]
            .parse::<f64>()
            .map_err(|_| err(2, format!("'{}' is not a number", &record[2])))?;
        rows.push(Observation {
            date,
            region: record[1].to_string(),
            value,
        });
    }
    aggregate_to_monthly(&rows, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(y: i32, m: u32) -> MonthDate {
        MonthDate::new(y, m).unwrap()
    }

    fn wide(rows: &[(&str, &str)]) -> String {
        let mut s = String::from("Date,Odisha,Tripura\n");
        for (d, v) in rows {
            s.push_str(&format!("{d},{v}\n"));
        }
        s
    }

    #[test]
    fn parses_48_months() {
        let mut s = String::from("date,Odisha,Tripura\n");
        for i in 0..48 {
            let m = ym(2020, 1).add_months(i);
            s.push_str(&format!("{}-{:02}-01,{},{}\n", m.year(), m.month(), i, 2 * i));
        }
        let d = parse_csv(s.as_bytes()).unwrap();
        assert_eq!(d.region_names(), vec!["Odisha", "Tripura"]);
        assert_eq!(d.n_months(), 48);
        assert_eq!(d.date_span(), (ym(2020, 1), ym(2023, 12)));
        assert_eq!(d.region("Tripura").unwrap().values()[47], 94.0);
    }

    #[test]
    fn reverse_order_is_sorted() {
        let fwd = wide(&[("2020-01", "1,2"), ("2020-02", "3,4"), ("2020-03", "5,6")]);
        let rev = wide(&[("2020-03", "5,6"), ("2020-02", "3,4"), ("2020-01", "1,2")]);
        let a = parse_csv(fwd.as_bytes()).unwrap();
        assert_eq!(a, parse_csv(rev.as_bytes()).unwrap());
    }

    #[test]
    fn day_month_year_format() {
        let s = wide(&[("15-01-2021", "1,2"), ("01-02-2021", "3,4")]);
        let d = parse_csv(s.as_bytes()).unwrap();
        assert_eq!(d.date_span(), (ym(2021, 1), ym(2021, 2)));
    }

    #[test]
    fn gap_names_missing_month() {
        let s = wide(&[("2020-01", "1,2"), ("2020-03", "5,6")]);
        let e = parse_csv(s.as_bytes()).unwrap_err();
        assert_eq!(e, Error::MonthGap { missing: vec![ym(2020, 2)] });
        assert!(e.to_string().contains("2020-02"));
    }

    #[test]
    fn duplicate_month() {
        let s = wide(&[("2020-01-01", "1,2"), ("2020-01-15", "5,6")]);
        assert!(matches!(
            parse_csv(s.as_bytes()),
            Err(Error::DuplicateMonth { month, first_row: 2, second_row: 3 }) if month == ym(2020, 1)
        ));
    }

    #[test]
    fn mixed_formats_rejected() {
        let s = wide(&[("2020-01", "1,2"), ("2020-02-01", "5,6")]);
        let e = parse_csv(s.as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 3, .. }), "{e}");
    }

    #[test]
    fn header_errors() {
        assert_eq!(parse_csv("Month,A\n2020-01,1\n".as_bytes()), Err(Error::MissingDateColumn));
        assert!(matches!(parse_csv("Date\n2020-01\n".as_bytes()), Err(Error::Header(_))));
        assert!(matches!(parse_csv("Date,A,A\n2020-01,1,2\n".as_bytes()), Err(Error::Header(_))));
        assert!(matches!(parse_csv("".as_bytes()), Err(Error::Empty(_))));
        assert!(matches!(parse_csv("Date,A\n".as_bytes()), Err(Error::Empty(_))));
    }

    #[test]
    fn bad_values_name_row_and_column() {
        let s = wide(&[("2020-01", "1,2"), ("2020-02", "x,4")]);
        assert_eq!(
            parse_csv(s.as_bytes()).unwrap_err(),
            Error::Parse {
                row: 3,
                column: "Odisha".into(),
                message: "'x' is not a number".into()
            }
        );
        let s = wide(&[("2020-01", "1,-2")]);
        assert!(matches!(parse_csv(s.as_bytes()), Err(Error::Parse { .. })));
        let s = wide(&[("2020-13", "1,2")]);
        assert!(matches!(parse_csv(s.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_values_policy() {
        let s = wide(&[("2020-01", "1,2"), ("2020-02", ",4"), ("2020-03", "5,6")]);
        assert!(matches!(parse_csv(s.as_bytes()), Err(Error::Parse { .. })));
        let opts = IngestOptions {
            missing: MissingValues::ForwardFill,
        };
        let d = parse_csv_with(s.as_bytes(), &opts).unwrap();
        assert_eq!(d.region("Odisha").unwrap().values(), &[1.0, 1.0, 5.0]);
        let first_missing = wide(&[("2020-01", ",2")]);
        assert!(parse_csv_with(first_missing.as_bytes(), &opts).is_err());
    }

    #[test]
    fn quoted_fields() {
        let s = "\"Date\",\"Uttar Pradesh, East\"\n\"2020-01\",\"12.5\"\n";
        let d = parse_csv(s.as_bytes()).unwrap();
        assert_eq!(d.region_names(), vec!["Uttar Pradesh, East"]);
        assert_eq!(d.region("Uttar Pradesh, East").unwrap().values(), &[12.5]);
        assert_eq!(parse_csv(d.to_csv().as_bytes()).unwrap(), d);
    }

    fn daily(month: u32, days: u32, value: f64) -> Vec<Observation> {
        (1..=days)
            .map(|d| Observation {
                date: NaiveDate::from_ymd_opt(2021, month, d).unwrap(),
                region: "A".into(),
                value,
            })
            .collect()
    }

    #[test]
    fn aggregation_sum_and_mean() {
        let rows = daily(4, 30, 1.0);
        let d = aggregate_to_monthly(&rows, Aggregation::Sum).unwrap();
        assert_eq!(d.region("A").unwrap().values(), &[30.0]);
        let d = aggregate_to_monthly(&rows, Aggregation::Mean).unwrap();
        assert_eq!(d.region("A").unwrap().values(), &[1.0]);
    }

    #[test]
    fn aggregation_splits_month_boundary() {
        let mut rows = daily(4, 30, 1.0);
        rows.extend(daily(5, 3, 2.0));
        let d = aggregate_to_monthly(&rows, Aggregation::Sum).unwrap();
        assert_eq!(d.date_span(), (ym(2021, 4), ym(2021, 5)));
        assert_eq!(d.region("A").unwrap().values(), &[30.0, 6.0]);
        assert!(aggregate_to_monthly(&[], Aggregation::Sum).is_err());
    }

    #[test]
    fn long_csv_with_times() {
        let s = "ts,region,value\n2021-04-01 10:00:00,A,2\n2021-04-02T01:00:00Z,A,3\n01-05-2021,A,4\n";
        let d = parse_long_csv(s.as_bytes(), Aggregation::Sum).unwrap();
        assert_eq!(d.region("A").unwrap().values(), &[5.0, 4.0]);
    }
}
