//! Pairwise rate of change between country relationships.
//!
//! For countries X and Y and consecutive years i-1, i:
//!
//! ```text
//! rho = (E_XY(i) - E_XY(i-1)) / (D_X(i-1) * D_Y(i-1))
//! ```
//!
//! where `E` is the off-diagonal co-occurrence count and `D` the diagonal.
//! A pair whose previous-year diagonal is zero on either side has no rho; it
//! is left out of averages rather than counted as zero.

use std::io::{self, BufRead, Write};

use crate::conetwork::{CountryList, YearNetwork};
use crate::format::{fmt_opt_real, fmt_real};
use crate::region::Region;

pub const INDICATOR_HEADER: &str = "focal,year,avg_rho,n_partners,abs_change,percent";
pub const PAIR_HEADER: &str =
    "focal,partner,year,edge_now,edge_prev,diag_prev_x,diag_prev_y,rho";

#[derive(Debug, thiserror::Error)]
pub enum IndicatorError {
    #[error("rho is undefined for a country paired with itself ({0})")]
    SelfPair(Region),
    #[error("networks for {prev} and {now} are not consecutive years")]
    NotConsecutive { prev: i32, now: i32 },
    #[error("focal country {focal} is not in the country list; available: {}", available.join(", "))]
    FocalNotInList {
        focal: Region,
        available: Vec<String>,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One defined rho value.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoPoint {
    /// The later year of the pair.
    pub year_i: i32,
    pub focal: Region,
    pub partner: Region,
    pub edge_now: u64,
    pub edge_prev: u64,
    pub diag_prev_x: u64,
    pub diag_prev_y: u64,
    pub rho: f64,
}

impl RhoPoint {
    pub fn numerator(&self) -> i64 {
        self.edge_now as i64 - self.edge_prev as i64
    }

    pub fn denominator(&self) -> u64 {
        self.diag_prev_x * self.diag_prev_y
    }
}

/// Rate of change of the `x`–`y` relationship from `prev` to `now`.
///
/// Returns `Ok(None)` when either previous-year diagonal is zero.
pub fn rho_pair(
    prev: &YearNetwork,
    now: &YearNetwork,
    x: &Region,
    y: &Region,
) -> Result<Option<RhoPoint>, IndicatorError> {
    if x == y {
        return Err(IndicatorError::SelfPair(x.clone()));
    }
    if prev.year() + 1 != now.year() {
        return Err(IndicatorError::NotConsecutive {
            prev: prev.year(),
            now: now.year(),
        });
    }
    let diag_prev_x = prev.diagonal(x.as_str());
    let diag_prev_y = prev.diagonal(y.as_str());
    if diag_prev_x == 0 || diag_prev_y == 0 {
        return Ok(None);
    }
    let edge_now = now.count(x.as_str(), y.as_str());
    let edge_prev = prev.count(x.as_str(), y.as_str());
    let numerator = edge_now as f64 - edge_prev as f64;
    let denominator = diag_prev_x as f64 * diag_prev_y as f64;
    Ok(Some(RhoPoint {
        year_i: now.year(),
        focal: x.clone(),
        partner: y.clone(),
        edge_now,
        edge_prev,
        diag_prev_x,
        diag_prev_y,
        rho: numerator / denominator,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesWarning {
    /// The focal country has a zero diagonal in every network.
    FocalAbsent,
}

impl SeriesWarning {
    pub fn code(self) -> &'static str {
        match self {
            SeriesWarning::FocalAbsent => "focal_absent",
        }
    }
}

/// The average-rho series of one focal country.
///
/// Vectors are parallel and indexed like `years`, which starts at the second
/// year of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub focal: Region,
    pub years: Vec<i32>,
    pub avg_rho: Vec<Option<f64>>,
    pub n_partners: Vec<usize>,
    pub abs_change: Vec<i64>,
    /// Every defined pair, ordered by year then partner-list order.
    pub points: Vec<RhoPoint>,
    pub warning: Option<SeriesWarning>,
}

impl IndicatorSeries {
    pub fn empty(focal: Region, warning: Option<SeriesWarning>) -> Self {
        IndicatorSeries {
            focal,
            years: Vec::new(),
            avg_rho: Vec::new(),
            n_partners: Vec::new(),
            abs_change: Vec::new(),
            points: Vec::new(),
            warning,
        }
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    /// `(year, avg_rho)` for the years where the average is defined.
    pub fn defined(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.years
            .iter()
            .zip(&self.avg_rho)
            .filter_map(|(&y, v)| v.map(|v| (y, v)))
    }

    /// Defined rho values of one year.
    pub fn rho_values(&self, year: i32) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.year_i == year)
            .map(|p| p.rho)
            .collect()
    }
}

/// Builds the average-rho series of `focal` against the members of `partners`.
///
/// With `allow_outside_list` a focal country that is not a member is still
/// analysed; otherwise it is an error.
pub fn indicator_series(
    networks: &[YearNetwork],
    focal: &Region,
    partners: &CountryList,
    allow_outside_list: bool,
) -> Result<IndicatorSeries, IndicatorError> {
    if !allow_outside_list && !partners.contains(focal.as_str()) {
        return Err(IndicatorError::FocalNotInList {
            focal: focal.clone(),
            available: partners.members.iter().map(|m| m.to_string()).collect(),
        });
    }
    for w in networks.windows(2) {
        if w[0].year() + 1 != w[1].year() {
            return Err(IndicatorError::NotConsecutive {
                prev: w[0].year(),
                now: w[1].year(),
            });
        }
    }
    if networks.iter().all(|n| n.diagonal(focal.as_str()) == 0) {
        return Ok(IndicatorSeries::empty(
            focal.clone(),
            Some(SeriesWarning::FocalAbsent),
        ));
    }

    let others: Vec<&Region> = partners.members.iter().filter(|m| *m != focal).collect();
    let mut series = IndicatorSeries::empty(focal.clone(), None);
    for w in networks.windows(2) {
        let (prev, now) = (&w[0], &w[1]);
        let mut sum = 0.0;
        let mut defined = 0usize;
        for partner in &others {
            if let Some(point) = rho_pair(prev, now, focal, partner)? {
                sum += point.rho;
                defined += 1;
                series.points.push(point);
            }
        }
        series.years.push(now.year());
        series
            .avg_rho
            .push((defined > 0).then(|| sum / defined as f64));
        series.n_partners.push(defined);
        series.abs_change.push(
            now.diagonal(focal.as_str()) as i64 - prev.diagonal(focal.as_str()) as i64,
        );
    }
    Ok(series)
}

/// avg_rho scaled to a percentage; absent points stay absent.
pub fn percent_series(series: &IndicatorSeries) -> Vec<Option<f64>> {
    series.avg_rho.iter().map(|v| v.map(|v| v * 100.0)).collect()
}

pub fn write_indicator_header<W: Write>(mut out: W) -> io::Result<()> {
    writeln!(out, "{INDICATOR_HEADER}")
}

pub fn write_indicator_rows<W: Write>(series: &IndicatorSeries, mut out: W) -> io::Result<()> {
    let percent = percent_series(series);
    for (i, pct) in percent.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            series.focal,
            series.years[i],
            fmt_opt_real(series.avg_rho[i]),
            series.n_partners[i],
            series.abs_change[i],
            fmt_opt_real(*pct),
        )?;
    }
    Ok(())
}

pub fn write_pair_header<W: Write>(mut out: W) -> io::Result<()> {
    writeln!(out, "{PAIR_HEADER}")
}

pub fn write_pair_rows<W: Write>(series: &IndicatorSeries, mut out: W) -> io::Result<()> {
    for p in &series.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.focal,
            p.partner,
            p.year_i,
            p.edge_now,
            p.edge_prev,
            p.diag_prev_x,
            p.diag_prev_y,
            fmt_real(p.rho)
        )?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    line: usize,
    name: &str,
    raw: &str,
) -> Result<T, IndicatorError> {
    raw.parse().map_err(|_| IndicatorError::Format {
        line,
        message: format!("bad {name} {raw:?}"),
    })
}

fn check_header<I: Iterator<Item = io::Result<String>>>(
    lines: &mut I,
    header: &str,
) -> Result<(), IndicatorError> {
    match lines.next().transpose()? {
        Some(h) if h.trim_end_matches('\r') == header => Ok(()),
        _ => Err(IndicatorError::Format {
            line: 1,
            message: format!("expected header {header:?}"),
        }),
    }
}

/// Reads an indicator table (and optionally the pair table) back into
/// series, one per focal country in order of first appearance.
pub fn read_indicator_csv<R: BufRead>(reader: R) -> Result<Vec<IndicatorSeries>, IndicatorError> {
    let mut lines = reader.lines();
    check_header(&mut lines, INDICATOR_HEADER)?;
    let mut out: Vec<IndicatorSeries> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(IndicatorError::Format {
                line: line_no,
                message: format!("expected 6 fields, found {}", f.len()),
            });
        }
        let focal = Region::parse(f[0]).map_err(|e| IndicatorError::Format {
            line: line_no,
            message: e.to_string(),
        })?;
        if out.last().map(|s| &s.focal) != Some(&focal) {
            out.push(IndicatorSeries::empty(focal, None));
        }
        let s = out.last_mut().expect("pushed above");
        s.years.push(parse_field(line_no, "year", f[1])?);
        s.avg_rho.push(if f[2].is_empty() {
            None
        } else {
            Some(parse_field(line_no, "avg_rho", f[2])?)
        });
        s.n_partners.push(parse_field(line_no, "n_partners", f[3])?);
        s.abs_change.push(parse_field(line_no, "abs_change", f[4])?);
    }
    Ok(out)
}

/// Attaches pair-table rows to the matching series.
pub fn read_pair_csv<R: BufRead>(
    reader: R,
    series: &mut [IndicatorSeries],
) -> Result<(), IndicatorError> {
    let mut lines = reader.lines();
    check_header(&mut lines, PAIR_HEADER)?;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(IndicatorError::Format {
                line: line_no,
                message: format!("expected 8 fields, found {}", f.len()),
            });
        }
        let region = |raw: &str| {
            Region::parse(raw).map_err(|e| IndicatorError::Format {
                line: line_no,
                message: e.to_string(),
            })
        };
        let point = RhoPoint {
            focal: region(f[0])?,
            partner: region(f[1])?,
            year_i: parse_field(line_no, "year", f[2])?,
            edge_now: parse_field(line_no, "edge_now", f[3])?,
            edge_prev: parse_field(line_no, "edge_prev", f[4])?,
            diag_prev_x: parse_field(line_no, "diag_prev_x", f[5])?,
            diag_prev_y: parse_field(line_no, "diag_prev_y", f[6])?,
            rho: parse_field(line_no, "rho", f[7])?,
        };
        match series.iter_mut().find(|s| s.focal == point.focal) {
            Some(s) => s.points.push(point),
            None => {
                return Err(IndicatorError::Format {
                    line: line_no,
                    message: format!("focal {} has no indicator rows", point.focal),
                })
            }
        }
    }
    Ok(())
}
