//! Corpus parsing, movie-id unification and region normalisation.
//!
//! Two input shapes are supported. The canonical corpus is a three-column
//! TSV with the header `movie_id\tyear\tregions`, where `regions` is a
//! comma-separated list of codes. The IMDB adapter joins a `title.basics`
//! table with a `title.akas` table on the title identifier.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use crate::region::Region;

pub const CANONICAL_HEADER: &str = "movie_id\tyear\tregions";
const IMDB_MISSING: &str = "\\N";

/// One movie after unification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MovieRecord {
    pub movie_id: String,
    pub year: i32,
    pub regions: BTreeSet<Region>,
}

impl MovieRecord {
    pub fn new<I, S>(movie_id: impl Into<String>, year: i32, regions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        MovieRecord {
            movie_id: movie_id.into(),
            year,
            regions: regions
                .into_iter()
                .map(|r| Region::parse(r.as_ref()).expect("valid region code"))
                .collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("alias file line {line}: {message}")]
    Alias { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A data row that was rejected; parsing continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

/// Bookkeeping for one parse.
///
/// `data_rows == emitted + skipped_empty + row_errors.len() + excluded_type + merged`
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub data_rows: usize,
    pub emitted: usize,
    pub skipped_empty: usize,
    pub row_errors: Vec<RowError>,
    /// Rows folded into an earlier row with the same movie id.
    pub merged: usize,
    /// Merged rows whose year disagreed with the first row's year.
    pub year_conflicts: usize,
    /// IMDB rows dropped by the title-type filter.
    pub excluded_type: usize,
}

impl IngestReport {
    pub fn skipped(&self) -> usize {
        self.skipped_empty + self.row_errors.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Parsed {
    pub records: Vec<MovieRecord>,
    pub report: IngestReport,
}

/// Accumulates rows in first-seen order, merging duplicate ids.
#[derive(Default)]
struct Unifier {
    records: Vec<MovieRecord>,
    index: HashMap<String, usize>,
    report: IngestReport,
}

impl Unifier {
    fn push(&mut self, movie_id: &str, year: i32, regions: BTreeSet<Region>) {
        if let Some(&at) = self.index.get(movie_id) {
            let existing = &mut self.records[at];
            if existing.year != year {
                self.report.year_conflicts += 1;
            }
            existing.regions.extend(regions);
            self.report.merged += 1;
        } else {
            self.index.insert(movie_id.to_string(), self.records.len());
            self.records.push(MovieRecord {
                movie_id: movie_id.to_string(),
                year,
                regions,
            });
        }
    }

    fn row_error(&mut self, line: usize, message: impl Into<String>) {
        self.report.row_errors.push(RowError {
            line,
            message: message.into(),
        });
    }

    fn finish(mut self) -> Parsed {
        self.report.emitted = self.records.len();
        Parsed {
            records: self.records,
            report: self.report,
        }
    }
}

fn strip_eol(line: &mut String) {
    if line.ends_with('\n') {
        line.pop();
        if line.ends_with('\r') {
            line.pop();
        }
    }
}

/// Reads lines with 1-based numbering, stripping line terminators.
fn for_each_line<R: BufRead>(
    mut reader: R,
    mut f: impl FnMut(usize, &str) -> Result<(), IngestError>,
) -> Result<(), IngestError> {
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            return Ok(());
        }
        line_no += 1;
        strip_eol(&mut buf);
        f(line_no, &buf)?;
    }
}

fn parse_year(field: &str) -> Result<i32, String> {
    field
        .trim()
        .parse::<i32>()
        .map_err(|_| format!("year {field:?} is not an integer"))
}

/// Parses a canonical corpus.
///
/// Rows with no regions are skipped and counted. Rows sharing a movie id are
/// merged: regions are unioned and the first row's year wins.
pub fn parse_canonical<R: BufRead>(reader: R) -> Result<Parsed, IngestError> {
    let mut unifier = Unifier::default();
    let mut saw_header = false;
    for_each_line(reader, |line_no, line| {
        if !saw_header {
            if line != CANONICAL_HEADER {
                return Err(IngestError::Format {
                    line: line_no,
                    message: format!(
                        "expected header {:?}, found {:?}",
                        CANONICAL_HEADER, line
                    ),
                });
            }
            saw_header = true;
            return Ok(());
        }
        if line.is_empty() {
            return Ok(());
        }
        unifier.report.data_rows += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            unifier.row_error(line_no, format!("expected 3 fields, found {}", fields.len()));
            return Ok(());
        }
        let movie_id = fields[0].trim();
        if movie_id.is_empty() {
            unifier.row_error(line_no, "empty movie_id");
            return Ok(());
        }
        let year = match parse_year(fields[1]) {
            Ok(y) => y,
            Err(msg) => {
                unifier.row_error(line_no, msg);
                return Ok(());
            }
        };
        let mut regions = BTreeSet::new();
        for token in fields[2].split(',').filter(|t| !t.trim().is_empty()) {
            match Region::parse(token) {
                Ok(r) => {
                    regions.insert(r);
                }
                Err(e) => {
                    unifier.row_error(line_no, e.to_string());
                    return Ok(());
                }
            }
        }
        if regions.is_empty() {
            unifier.report.skipped_empty += 1;
            return Ok(());
        }
        unifier.push(movie_id, year, regions);
        Ok(())
    })?;
    if !saw_header {
        return Err(IngestError::Format {
            line: 1,
            message: "missing header line".into(),
        });
    }
    Ok(unifier.finish())
}

pub fn parse_canonical_str(text: &str) -> Result<Parsed, IngestError> {
    parse_canonical(text.as_bytes())
}

/// Writes records in the canonical format. Regions are emitted sorted.
pub fn write_canonical<W: Write>(records: &[MovieRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CANONICAL_HEADER}")?;
    for rec in records {
        let regions: Vec<&str> = rec.regions.iter().map(Region::as_str).collect();
        writeln!(out, "{}\t{}\t{}", rec.movie_id, rec.year, regions.join(","))?;
    }
    Ok(())
}

fn header_columns(
    header: &str,
    required: &[&str],
    line_no: usize,
) -> Result<Vec<usize>, IngestError> {
    let names: Vec<&str> = header.split('\t').collect();
    required
        .iter()
        .map(|want| {
            names
                .iter()
                .position(|n| n == want)
                .ok_or_else(|| IngestError::Format {
                    line: line_no,
                    message: format!("required column {want:?} missing from header"),
                })
        })
        .collect()
}

/// Reads the akas table into title id -> distinct regions.
fn read_akas<R: BufRead>(akas: R) -> Result<HashMap<String, BTreeSet<Region>>, IngestError> {
    let mut regions: HashMap<String, BTreeSet<Region>> = HashMap::new();
    let mut cols: Option<(usize, usize)> = None;
    for_each_line(akas, |line_no, line| {
        let Some((id_col, region_col)) = cols else {
            let found = header_columns(line, &["titleId", "region"], line_no)?;
            cols = Some((found[0], found[1]));
            return Ok(());
        };
        if line.is_empty() {
            return Ok(());
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (Some(id), Some(region)) = (fields.get(id_col), fields.get(region_col)) else {
            return Ok(());
        };
        if *region == IMDB_MISSING {
            return Ok(());
        }
        // Codes that are not plain alphanumerics carry no usable region.
        if let Ok(r) = Region::parse(region) {
            regions.entry((*id).to_string()).or_default().insert(r);
        }
        Ok(())
    })?;
    if cols.is_none() {
        return Err(IngestError::Format {
            line: 1,
            message: "akas table has no header".into(),
        });
    }
    Ok(regions)
}

/// Joins an IMDB `title.basics` table with a `title.akas` table.
///
/// Only rows whose `titleType` is `movie` are kept. A movie's regions are the
/// distinct non-missing `region` values of its akas rows.
pub fn parse_imdb_pair<B: BufRead, A: BufRead>(basics: B, akas: A) -> Result<Parsed, IngestError> {
    let mut akas = read_akas(akas)?;
    let mut unifier = Unifier::default();
    let mut cols: Option<[usize; 3]> = None;
    for_each_line(basics, |line_no, line| {
        let Some([id_col, type_col, year_col]) = cols else {
            let found = header_columns(line, &["tconst", "titleType", "startYear"], line_no)?;
            cols = Some([found[0], found[1], found[2]]);
            return Ok(());
        };
        if line.is_empty() {
            return Ok(());
        }
        unifier.report.data_rows += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        let (Some(id), Some(kind), Some(year)) = (
            fields.get(id_col),
            fields.get(type_col),
            fields.get(year_col),
        ) else {
            unifier.row_error(line_no, format!("too few fields ({})", fields.len()));
            return Ok(());
        };
        if *kind != "movie" {
            unifier.report.excluded_type += 1;
            return Ok(());
        }
        let year = if *year == IMDB_MISSING {
            unifier.row_error(line_no, "missing startYear");
            return Ok(());
        } else {
            match parse_year(year) {
                Ok(y) => y,
                Err(msg) => {
                    unifier.row_error(line_no, msg);
                    return Ok(());
                }
            }
        };
        match akas.remove(*id) {
            Some(regions) if !regions.is_empty() => unifier.push(id, year, regions),
            _ => {
                // a repeated tconst has already consumed its akas entry
                if unifier.index.contains_key(*id) {
                    unifier.push(id, year, BTreeSet::new());
                } else {
                    unifier.report.skipped_empty += 1;
                }
            }
        }
        Ok(())
    })?;
    if cols.is_none() {
        return Err(IngestError::Format {
            line: 1,
            message: "basics table has no header".into(),
        });
    }
    Ok(unifier.finish())
}

/// Raw region code -> canonical region code.
///
/// Chains are resolved on construction, so applying the map is idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    entries: BTreeMap<Region, Region>,
}

impl AliasMap {
    pub fn new(raw: impl IntoIterator<Item = (Region, Region)>) -> Result<Self, IngestError> {
        let raw: BTreeMap<Region, Region> = raw.into_iter().collect();
        let mut entries = BTreeMap::new();
        for start in raw.keys() {
            let mut current = start;
            let mut steps = 0;
            while let Some(next) = raw.get(current) {
                if next == current {
                    break;
                }
                current = next;
                steps += 1;
                if steps > raw.len() {
                    return Err(IngestError::Alias {
                        line: 0,
                        message: format!("alias cycle through {start}"),
                    });
                }
            }
            entries.insert(start.clone(), current.clone());
        }
        Ok(AliasMap { entries })
    }

    /// Parses the two-column `raw\tcanonical` alias file (no header).
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, IngestError> {
        let mut pairs = Vec::new();
        for_each_line(reader, |line_no, line| {
            if line.trim().is_empty() {
                return Ok(());
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(IngestError::Alias {
                    line: line_no,
                    message: format!("expected 2 fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                Region::parse(s).map_err(|e| IngestError::Alias {
                    line: line_no,
                    message: e.to_string(),
                })
            };
            pairs.push((parse(fields[0])?, parse(fields[1])?));
            Ok(())
        })?;
        AliasMap::new(pairs)
    }

    pub fn canonical<'a>(&'a self, code: &'a Region) -> &'a Region {
        self.entries.get(code).unwrap_or(code)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Replaces every region by its canonical alias; unknown codes pass through.
pub fn normalize_regions(records: &[MovieRecord], aliases: &AliasMap) -> Vec<MovieRecord> {
    records
        .iter()
        .map(|rec| MovieRecord {
            movie_id: rec.movie_id.clone(),
            year: rec.year,
            regions: rec
                .regions
                .iter()
                .map(|r| aliases.canonical(r).clone())
                .collect(),
        })
        .collect()
}

/// Keeps records whose year lies in `[from, to]`.
pub fn filter_window(records: Vec<MovieRecord>, from: i32, to: i32) -> Vec<MovieRecord> {
    records
        .into_iter()
        .filter(|r| (from..=to).contains(&r.year))
        .collect()
}
