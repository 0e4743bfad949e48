//! Country co-occurrence networks built from movie publication records.
//!
//! The pipeline runs in stages that mirror the modules below:
//!
//! 1. [`ingest`] parses a movie corpus (canonical TSV or an IMDB dump pair)
//!    and unifies rows by movie identifier.
//! 2. [`conetwork`] builds one symmetric country-by-country count matrix per
//!    year and picks the countries whose total volume clears a threshold.
//! 3. [`indicator`] computes the pairwise rate of change of each
//!    relationship and averages it per focal country and year.
//! 4. [`ranktest`] scans the average series with an exact rank-sum test and
//!    produces box-plot summaries.
//!
//! [`synthgen`] produces synthetic corpora with a known shock year, and
//! [`cli`] wires everything into the `cinenet` binary.

pub mod cli;
pub mod conetwork;
pub mod format;
pub mod indicator;
pub mod ingest;
pub mod manifest;
pub mod ranktest;
pub mod region;
pub mod synthgen;

pub use conetwork::{
    build_all_years, build_year_network, country_totals, filter_country_list, CountryList,
    YearNetwork,
};
pub use indicator::{indicator_series, percent_series, rho_pair, IndicatorSeries, RhoPoint};
pub use ingest::{normalize_regions, parse_canonical, parse_imdb_pair, AliasMap, MovieRecord};
pub use ranktest::{
    box_summary, mann_whitney, mann_whitney_approx, mann_whitney_exact, scan_years, BoxSummary,
    RankTestResult, ScanReport, TestMethod,
};
pub use region::Region;
pub use synthgen::{generate, SynthConfig};
