//! Per-year country co-occurrence matrices.
//!
//! Each movie increments the diagonal entry of every country it was
//! published in, and the symmetric entry of every unordered pair of those
//! countries, once per movie.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use crate::ingest::MovieRecord;
use crate::region::Region;

pub const MATRIX_HEADER: &str = "year,country_a,country_b,count";
pub const TOTALS_HEADER: &str = "country,total";
pub const COUNTRY_LIST_HEADER: &str = "country,total,threshold";

/// Default minimum total (exclusive) for a country to enter the analysis list.
pub const DEFAULT_MIN_TOTAL: u64 = 1000;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("year range {from}..={to} is inverted")]
    InvertedRange { from: i32, to: i32 },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Symmetric co-occurrence counts for one year.
///
/// `countries` is sorted and holds exactly the regions with a nonzero
/// diagonal. Off-diagonal counts are stored once per unordered pair, keyed by
/// `(i, j)` indices into `countries` with `i < j`; missing pairs are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearNetwork {
    year: i32,
    countries: Vec<Region>,
    diagonal: Vec<u64>,
    pairs: BTreeMap<(u32, u32), u64>,
}

impl YearNetwork {
    pub fn empty(year: i32) -> Self {
        YearNetwork {
            year,
            countries: Vec::new(),
            diagonal: Vec::new(),
            pairs: BTreeMap::new(),
        }
    }

    /// Assembles a network from explicit counts, checking every invariant.
    ///
    /// `pairs` may name each unordered pair in either orientation but only
    /// once. Zero-count entries are dropped.
    pub fn from_counts(
        year: i32,
        diagonal: impl IntoIterator<Item = (Region, u64)>,
        pairs: impl IntoIterator<Item = (Region, Region, u64)>,
    ) -> Result<Self, String> {
        let diag: BTreeMap<Region, u64> = diagonal.into_iter().filter(|(_, c)| *c > 0).collect();
        let countries: Vec<Region> = diag.keys().cloned().collect();
        let diagonal: Vec<u64> = diag.values().copied().collect();
        let mut net = YearNetwork {
            year,
            countries,
            diagonal,
            pairs: BTreeMap::new(),
        };
        for (a, b, count) in pairs {
            if a == b {
                return Err(format!("pair {a},{b} is a diagonal entry"));
            }
            if count == 0 {
                continue;
            }
            let (ia, ib) = match (net.index_of(a.as_str()), net.index_of(b.as_str())) {
                (Some(ia), Some(ib)) => (ia, ib),
                _ => return Err(format!("pair {a},{b} references a country with zero diagonal")),
            };
            let key = (ia.min(ib) as u32, ia.max(ib) as u32);
            if count > net.diagonal[ia].min(net.diagonal[ib]) {
                return Err(format!(
                    "pair {a},{b} count {count} exceeds a diagonal entry"
                ));
            }
            if net.pairs.insert(key, count).is_some() {
                return Err(format!("pair {a},{b} listed twice"));
            }
        }
        Ok(net)
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn countries(&self) -> &[Region] {
        &self.countries
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    fn index_of(&self, code: &str) -> Option<usize> {
        self.countries
            .binary_search_by(|c| c.as_str().cmp(code))
            .ok()
    }

    /// Movies published in `code` this year.
    pub fn diagonal(&self, code: &str) -> u64 {
        self.index_of(code).map_or(0, |i| self.diagonal[i])
    }

    /// Movies published in both `a` and `b`; for `a == b` this is the diagonal.
    pub fn count(&self, a: &str, b: &str) -> u64 {
        if a == b {
            return self.diagonal(a);
        }
        match (self.index_of(a), self.index_of(b)) {
            (Some(ia), Some(ib)) => {
                let key = (ia.min(ib) as u32, ia.max(ib) as u32);
                self.pairs.get(&key).copied().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// Iterates `(country, diagonal)` in country order.
    pub fn diagonal_entries(&self) -> impl Iterator<Item = (&Region, u64)> + '_ {
        self.countries.iter().zip(self.diagonal.iter().copied())
    }

    /// Iterates nonzero off-diagonal entries as `(a, b, count)` with `a < b`.
    pub fn pair_entries(&self) -> impl Iterator<Item = (&Region, &Region, u64)> + '_ {
        self.pairs.iter().map(move |(&(i, j), &c)| {
            (&self.countries[i as usize], &self.countries[j as usize], c)
        })
    }

    /// Sum over both orientations of all off-diagonal entries.
    pub fn off_diagonal_sum(&self) -> u64 {
        2 * self.pairs.values().sum::<u64>()
    }

    /// Dense symmetric matrix indexed by [`countries`](Self::countries).
    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let n = self.countries.len();
        let mut dense = vec![vec![0u64; n]; n];
        for (i, &d) in self.diagonal.iter().enumerate() {
            dense[i][i] = d;
        }
        for (&(i, j), &c) in &self.pairs {
            dense[i as usize][j as usize] = c;
            dense[j as usize][i as usize] = c;
        }
        dense
    }
}

/// Builds the co-occurrence network of the movies released in `year`.
pub fn build_year_network<'a, I>(records: I, year: i32) -> YearNetwork
where
    I: IntoIterator<Item = &'a MovieRecord>,
{
    let selected: Vec<&MovieRecord> = records
        .into_iter()
        .filter(|r| r.year == year && !r.regions.is_empty())
        .collect();
    let countries: Vec<Region> = selected
        .iter()
        .flat_map(|r| r.regions.iter())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let mut diagonal = vec![0u64; countries.len()];
    let mut pairs: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut idx = Vec::new();
    for rec in selected {
        idx.clear();
        // regions are a sorted set, so indices come out ascending
        idx.extend(rec.regions.iter().map(|r| {
            countries
                .binary_search(r)
                .expect("country collected above") as u32
        }));
        for (k, &i) in idx.iter().enumerate() {
            diagonal[i as usize] += 1;
            for &j in &idx[k + 1..] {
                *pairs.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    YearNetwork {
        year,
        countries,
        diagonal,
        pairs,
    }
}

/// One network per year of `[year_from, year_to]`, in year order.
pub fn build_all_years(
    records: &[MovieRecord],
    year_from: i32,
    year_to: i32,
) -> Result<Vec<YearNetwork>, NetworkError> {
    if year_from > year_to {
        return Err(NetworkError::InvertedRange {
            from: year_from,
            to: year_to,
        });
    }
    let mut by_year: BTreeMap<i32, Vec<&MovieRecord>> = BTreeMap::new();
    for rec in records {
        if (year_from..=year_to).contains(&rec.year) {
            by_year.entry(rec.year).or_default().push(rec);
        }
    }
    Ok((year_from..=year_to)
        .map(|year| match by_year.get(&year) {
            Some(recs) => build_year_network(recs.iter().copied(), year),
            None => YearNetwork::empty(year),
        })
        .collect())
}

/// Total movies per country across all networks.
pub fn country_totals(networks: &[YearNetwork]) -> BTreeMap<Region, u64> {
    let mut totals = BTreeMap::new();
    for net in networks {
        for (code, count) in net.diagonal_entries() {
            *totals.entry(code.clone()).or_insert(0) += count;
        }
    }
    totals
}

/// Countries whose total strictly exceeds a threshold.
///
/// Members are ordered by descending total, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryList {
    pub members: Vec<Region>,
    pub threshold: u64,
    pub totals: BTreeMap<Region, u64>,
}

impl CountryList {
    pub fn contains(&self, code: &str) -> bool {
        self.members.iter().any(|m| m.as_str() == code)
    }
}

pub fn filter_country_list(totals: &BTreeMap<Region, u64>, threshold: u64) -> CountryList {
    let mut members: Vec<Region> = totals
        .iter()
        .filter(|(_, &t)| t > threshold)
        .map(|(r, _)| r.clone())
        .collect();
    members.sort_by(|a, b| totals[b].cmp(&totals[a]).then_with(|| a.cmp(b)));
    CountryList {
        members,
        threshold,
        totals: totals.clone(),
    }
}

/// Writes the matrix dump: diagonal rows plus each nonzero pair once with
/// `country_a < country_b`, sorted by `(year, country_a, country_b)`.
pub fn write_matrix_csv<W: Write>(networks: &[YearNetwork], mut out: W) -> io::Result<()> {
    writeln!(out, "{MATRIX_HEADER}")?;
    let mut sorted: Vec<&YearNetwork> = networks.iter().collect();
    sorted.sort_by_key(|n| n.year);
    for net in sorted {
        let mut rows: Vec<(&Region, &Region, u64)> =
            net.diagonal_entries().map(|(c, d)| (c, c, d)).collect();
        rows.extend(net.pair_entries());
        rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        for (a, b, c) in rows {
            writeln!(out, "{},{},{},{}", net.year, a, b, c)?;
        }
    }
    Ok(())
}

/// Reads a matrix dump back into networks, one per year of `[from, to]`.
/// Years with no rows become empty networks; rows outside the range are an
/// error.
pub fn read_matrix_csv<R: BufRead>(
    reader: R,
    from: i32,
    to: i32,
) -> Result<Vec<YearNetwork>, NetworkError> {
    if from > to {
        return Err(NetworkError::InvertedRange { from, to });
    }
    type Entries = (Vec<(Region, u64)>, Vec<(Region, Region, u64)>);
    let mut per_year: BTreeMap<i32, Entries> = BTreeMap::new();
    let mut lines = reader.lines();
    let fmt_err = |line: usize, message: String| NetworkError::Format { line, message };
    match lines.next().transpose()? {
        Some(h) if h.trim_end_matches('\r') == MATRIX_HEADER => {}
        _ => return Err(fmt_err(1, format!("expected header {MATRIX_HEADER:?}"))),
    }
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(fmt_err(line_no, format!("expected 4 fields, found {}", fields.len())));
        }
        let year: i32 = fields[0]
            .parse()
            .map_err(|_| fmt_err(line_no, format!("bad year {:?}", fields[0])))?;
        if !(from..=to).contains(&year) {
            return Err(fmt_err(line_no, format!("year {year} outside {from}..={to}")));
        }
        let a = Region::parse(fields[1]).map_err(|e| fmt_err(line_no, e.to_string()))?;
        let b = Region::parse(fields[2]).map_err(|e| fmt_err(line_no, e.to_string()))?;
        let count: u64 = fields[3]
            .parse()
            .map_err(|_| fmt_err(line_no, format!("bad count {:?}", fields[3])))?;
        let entry = per_year.entry(year).or_default();
        if a == b {
            entry.0.push((a, count));
        } else {
            entry.1.push((a, b, count));
        }
    }
    (from..=to)
        .map(|year| match per_year.remove(&year) {
            Some((diag, pairs)) => {
                let n_diag = diag.len();
                let net = YearNetwork::from_counts(year, diag, pairs)
                    .map_err(|m| fmt_err(0, format!("year {year}: {m}")))?;
                if net.countries.len() != n_diag {
                    return Err(fmt_err(0, format!("year {year}: duplicate or zero diagonal rows")));
                }
                Ok(net)
            }
            None => Ok(YearNetwork::empty(year)),
        })
        .collect()
}

pub fn write_totals_csv<W: Write>(totals: &BTreeMap<Region, u64>, mut out: W) -> io::Result<()> {
    writeln!(out, "{TOTALS_HEADER}")?;
    for (code, total) in totals {
        writeln!(out, "{code},{total}")?;
    }
    Ok(())
}

pub fn write_country_list_csv<W: Write>(list: &CountryList, mut out: W) -> io::Result<()> {
    writeln!(out, "{COUNTRY_LIST_HEADER}")?;
    for code in &list.members {
        writeln!(out, "{},{},{}", code, list.totals[code], list.threshold)?;
    }
    Ok(())
}

/// Reads a country list written by [`write_country_list_csv`], together with
/// the totals file it was derived from.
pub fn read_country_list_csv<R: BufRead>(
    reader: R,
    totals: BTreeMap<Region, u64>,
    threshold: u64,
) -> Result<CountryList, NetworkError> {
    let mut lines = reader.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim_end_matches('\r') == COUNTRY_LIST_HEADER => {}
        _ => {
            return Err(NetworkError::Format {
                line: 1,
                message: format!("expected header {COUNTRY_LIST_HEADER:?}"),
            })
        }
    }
    let mut members = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let code = line.split(',').next().unwrap_or_default();
        members.push(Region::parse(code).map_err(|e| NetworkError::Format {
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(CountryList {
        members,
        threshold,
        totals,
    })
}

pub fn read_totals_csv<R: BufRead>(reader: R) -> Result<BTreeMap<Region, u64>, NetworkError> {
    let mut lines = reader.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim_end_matches('\r') == TOTALS_HEADER => {}
        _ => {
            return Err(NetworkError::Format {
                line: 1,
                message: format!("expected header {TOTALS_HEADER:?}"),
            })
        }
    }
    let mut totals = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| NetworkError::Format {
            line: i + 2,
            message,
        };
        let (code, total) = line
            .split_once(',')
            .ok_or_else(|| bad("expected 2 fields".into()))?;
        let code = Region::parse(code).map_err(|e| bad(e.to_string()))?;
        let total: u64 = total.parse().map_err(|_| bad(format!("bad total {total:?}")))?;
        totals.insert(code, total);
    }
    Ok(totals)
}
