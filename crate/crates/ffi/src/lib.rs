//! C ABI over the `cinenet` library.
//!
//! Every fallible call returns a [`CinenetStatus`]; on failure the message is
//! available from [`cinenet_last_error`] on the same thread. Objects are
//! opaque handles released with their matching `_free` function, and strings
//! returned through `char **` out-parameters are released with
//! [`cinenet_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cinenet::conetwork::{self, NetworkError};
use cinenet::indicator::{self, IndicatorError};
use cinenet::ingest::{self, IngestError};
use cinenet::ranktest::{self, RankTestError, TestMethod};
use cinenet::synthgen::SynthError;
use cinenet::{
    build_all_years, country_totals, filter_country_list, IndicatorSeries, MovieRecord, Region,
    SynthConfig, YearNetwork,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CinenetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    InvalidArgument = 5,
    InsufficientData = 6,
    Panic = 7,
}

/// Loaded corpus.
pub struct CinenetCorpus(Vec<MovieRecord>);

/// Per-year networks over a contiguous window.
pub struct CinenetNetworks(Vec<YearNetwork>);

/// Average rate-of-change series of one focal country.
pub struct CinenetSeries(IndicatorSeries);

/// Generator parameters. `shock_country` may be null; `has_shock` selects
/// whether `shock_year` applies.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CinenetSynthConfig {
    pub n_countries: u32,
    pub year_from: i32,
    pub year_to: i32,
    pub base_volume: u32,
    pub cross_prob: f64,
    pub has_shock: bool,
    pub shock_year: i32,
    pub shock_country: *const c_char,
    pub shock_factor: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CinenetTestMethod {
    Exact = 0,
    NormalApprox = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CinenetRankTest {
    pub u_statistic: f64,
    pub n1: usize,
    pub n2: usize,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub method: CinenetTestMethod,
    pub tie_correction_applied: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CinenetBoxSummary {
    pub minimum: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub maximum: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub n_outliers: usize,
}

/// One row of an indicator series. `avg_rho` is meaningful only when
/// `defined` is true.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CinenetIndicatorPoint {
    pub year: i32,
    pub defined: bool,
    pub avg_rho: f64,
    pub n_partners: usize,
    pub abs_change: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CinenetStatus, String);

impl Failure {
    fn arg(msg: impl ToString) -> Self {
        Failure(CinenetStatus::InvalidArgument, msg.to_string())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let status = match e {
            IngestError::Io(_) => CinenetStatus::Io,
            _ => CinenetStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        let status = match e {
            NetworkError::Io(_) => CinenetStatus::Io,
            NetworkError::Format { .. } => CinenetStatus::Format,
            NetworkError::InvertedRange { .. } => CinenetStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<IndicatorError> for Failure {
    fn from(e: IndicatorError) -> Self {
        let status = match e {
            IndicatorError::Io(_) => CinenetStatus::Io,
            IndicatorError::Format { .. } => CinenetStatus::Format,
            _ => CinenetStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<RankTestError> for Failure {
    fn from(e: RankTestError) -> Self {
        let status = match e {
            RankTestError::InsufficientData(_)
            | RankTestError::Degenerate
            | RankTestError::EmptySample(_)
            | RankTestError::EmptyValues => CinenetStatus::InsufficientData,
            _ => CinenetStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        Failure::arg(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(CinenetStatus::Io, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CinenetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CinenetStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CinenetStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(CinenetStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CinenetStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(CinenetStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(CinenetStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(CinenetStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn region(raw: &str) -> Result<Region, Failure> {
    Region::parse(raw).map_err(Failure::arg)
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::arg("output contains a NUL byte"))
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<*mut c_char, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    into_c_string(String::from_utf8(buf).expect("CSV writers emit UTF-8"))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn cinenet_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cinenet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cinenet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a canonical corpus (`movie_id<TAB>year<TAB>regions`) from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_corpus_read(
    path: *const c_char,
    out: *mut *mut CinenetCorpus,
) -> CinenetStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let file = std::fs::File::open(path).map_err(|e| Failure(CinenetStatus::Io, format!("{path}: {e}")))?;
        let parsed = ingest::parse_canonical(BufReader::new(file))?;
        *out = Box::into_raw(Box::new(CinenetCorpus(parsed.records)));
        Ok(())
    })
}

/// Parses a canonical corpus held in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_corpus_parse(
    text: *const c_char,
    out: *mut *mut CinenetCorpus,
) -> CinenetStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let parsed = ingest::parse_canonical_str(text)?;
        *out = Box::into_raw(Box::new(CinenetCorpus(parsed.records)));
        Ok(())
    })
}

/// Fills `out` with the generator defaults.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_synth_config_default(out: *mut CinenetSynthConfig) -> CinenetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d = SynthConfig::default();
        *out = CinenetSynthConfig {
            n_countries: d.n_countries as u32,
            year_from: d.year_from,
            year_to: d.year_to,
            base_volume: d.base_volume as u32,
            cross_prob: d.cross_prob,
            has_shock: d.shock_year.is_some(),
            shock_year: d.shock_year.unwrap_or(0),
            shock_country: ptr::null(),
            shock_factor: d.shock_factor,
            seed: d.seed,
        };
        Ok(())
    })
}

/// Generates a synthetic corpus.
///
/// # Safety
/// `config` must point to a valid config whose `shock_country` is null or a
/// NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_corpus_synth(
    config: *const CinenetSynthConfig,
    out: *mut *mut CinenetCorpus,
) -> CinenetStatus {
    guard(|| {
        let c = ref_arg(config, "config")?;
        let out = out_arg(out, "out")?;
        let shock_country = if c.shock_country.is_null() {
            None
        } else {
            Some(region(str_arg(c.shock_country, "shock_country")?)?)
        };
        let cfg = SynthConfig {
            n_countries: c.n_countries as usize,
            year_from: c.year_from,
            year_to: c.year_to,
            base_volume: c.base_volume as usize,
            cross_prob: c.cross_prob,
            shock_year: c.has_shock.then_some(c.shock_year),
            shock_country,
            shock_factor: c.shock_factor,
            seed: c.seed,
        };
        let records = cinenet::generate(&cfg)?;
        *out = Box::into_raw(Box::new(CinenetCorpus(records)));
        Ok(())
    })
}

/// Number of movies in the corpus; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cinenet_corpus_len(corpus: *const CinenetCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `corpus` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cinenet_corpus_free(corpus: *mut CinenetCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Builds one network per year in `year_from..=year_to`.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_networks_build(
    corpus: *const CinenetCorpus,
    year_from: i32,
    year_to: i32,
    out: *mut *mut CinenetNetworks,
) -> CinenetStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        let out = out_arg(out, "out")?;
        let nets = build_all_years(&corpus.0, year_from, year_to)?;
        *out = Box::into_raw(Box::new(CinenetNetworks(nets)));
        Ok(())
    })
}

/// Number of years held; 0 for a null handle.
///
/// # Safety
/// `networks` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cinenet_networks_len(networks: *const CinenetNetworks) -> usize {
    networks.as_ref().map_or(0, |n| n.0.len())
}

/// Movies of `year` published in both `a` and `b` (the diagonal when equal).
/// Years outside the window count as zero.
///
/// # Safety
/// `networks` must be a live handle, `a` and `b` NUL-terminated strings and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_networks_count(
    networks: *const CinenetNetworks,
    year: i32,
    a: *const c_char,
    b: *const c_char,
    out: *mut u64,
) -> CinenetStatus {
    guard(|| {
        let nets = ref_arg(networks, "networks")?;
        let a = region(str_arg(a, "a")?)?;
        let b = region(str_arg(b, "b")?)?;
        let out = out_arg(out, "out")?;
        *out = nets
            .0
            .iter()
            .find(|n| n.year() == year)
            .map_or(0, |n| n.count(a.as_str(), b.as_str()));
        Ok(())
    })
}

/// Matrix dump (`year,country_a,country_b,count`) as a new string.
///
/// # Safety
/// `networks` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_networks_matrix_csv(
    networks: *const CinenetNetworks,
    out: *mut *mut c_char,
) -> CinenetStatus {
    guard(|| {
        let nets = ref_arg(networks, "networks")?;
        let out = out_arg(out, "out")?;
        *out = csv(|w| conetwork::write_matrix_csv(&nets.0, w))?;
        Ok(())
    })
}

/// # Safety
/// `networks` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cinenet_networks_free(networks: *mut CinenetNetworks) {
    if !networks.is_null() {
        drop(Box::from_raw(networks));
    }
}

/// Indicator series of `focal` against every country whose total exceeds
/// `min_total`.
///
/// # Safety
/// `networks` must be a live handle, `focal` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_series_build(
    networks: *const CinenetNetworks,
    focal: *const c_char,
    min_total: u64,
    allow_outside_list: bool,
    out: *mut *mut CinenetSeries,
) -> CinenetStatus {
    guard(|| {
        let nets = ref_arg(networks, "networks")?;
        let focal = region(str_arg(focal, "focal")?)?;
        let out = out_arg(out, "out")?;
        let list = filter_country_list(&country_totals(&nets.0), min_total);
        let series = indicator::indicator_series(&nets.0, &focal, &list, allow_outside_list)?;
        *out = Box::into_raw(Box::new(CinenetSeries(series)));
        Ok(())
    })
}

/// Number of years in the series; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cinenet_series_len(series: *const CinenetSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Row `index` of the series.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_series_point(
    series: *const CinenetSeries,
    index: usize,
    out: *mut CinenetIndicatorPoint,
) -> CinenetStatus {
    guard(|| {
        let s = &ref_arg(series, "series")?.0;
        let out = out_arg(out, "out")?;
        if index >= s.len() {
            return Err(Failure::arg(format!("index {index} out of range 0..{}", s.len())));
        }
        *out = CinenetIndicatorPoint {
            year: s.years[index],
            defined: s.avg_rho[index].is_some(),
            avg_rho: s.avg_rho[index].unwrap_or(f64::NAN),
            n_partners: s.n_partners[index],
            abs_change: s.abs_change[index],
        };
        Ok(())
    })
}

/// Indicator CSV (with header) for the series.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_series_csv(
    series: *const CinenetSeries,
    out: *mut *mut c_char,
) -> CinenetStatus {
    guard(|| {
        let s = &ref_arg(series, "series")?.0;
        let out = out_arg(out, "out")?;
        *out = csv(|w| {
            indicator::write_indicator_header(&mut *w)?;
            indicator::write_indicator_rows(s, w)
        })?;
        Ok(())
    })
}

/// Scans every defined year against the rest and returns the JSON report.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_series_scan_json(
    series: *const CinenetSeries,
    alpha: f64,
    out: *mut *mut c_char,
) -> CinenetStatus {
    guard(|| {
        let s = &ref_arg(series, "series")?.0;
        let out = out_arg(out, "out")?;
        let report = ranktest::scan_years(s, alpha)?.rounded();
        let json = serde_json::to_string_pretty(&report).map_err(Failure::arg)?;
        *out = into_c_string(json)?;
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cinenet_series_free(series: *mut CinenetSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Rank-sum test of `sample1` against `sample2`: exact when untied and small
/// enough, otherwise the normal approximation.
///
/// # Safety
/// `sample1` and `sample2` must point to `n1` and `n2` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_mann_whitney(
    sample1: *const f64,
    n1: usize,
    sample2: *const f64,
    n2: usize,
    out: *mut CinenetRankTest,
) -> CinenetStatus {
    guard(|| {
        let s1 = slice_arg(sample1, n1, "sample1")?;
        let s2 = slice_arg(sample2, n2, "sample2")?;
        let out = out_arg(out, "out")?;
        let r = ranktest::mann_whitney(s1, s2)?;
        *out = CinenetRankTest {
            u_statistic: r.u_statistic,
            n1: r.n1,
            n2: r.n2,
            p_one_sided: r.p_one_sided,
            p_two_sided: r.p_two_sided,
            method: match r.method {
                TestMethod::Exact => CinenetTestMethod::Exact,
                TestMethod::NormalApprox => CinenetTestMethod::NormalApprox,
            },
            tie_correction_applied: r.tie_correction_applied,
        };
        Ok(())
    })
}

/// Five-number summary with 1.5 IQR fences.
///
/// # Safety
/// `values` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cinenet_box_summary(
    values: *const f64,
    n: usize,
    out: *mut CinenetBoxSummary,
) -> CinenetStatus {
    guard(|| {
        let values = slice_arg(values, n, "values")?;
        let out = out_arg(out, "out")?;
        let b = ranktest::box_summary(values, 0)?;
        *out = CinenetBoxSummary {
            minimum: b.minimum,
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            maximum: b.maximum,
            lower_fence: b.lower_fence,
            upper_fence: b.upper_fence,
            n_outliers: b.outliers.len(),
        };
        Ok(())
    })
}
