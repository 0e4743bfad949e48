//! The `cinenet` command line.
//!
//! Exit status: 0 on success (including runs that find nothing), 1 on usage
//! errors, 2 on data or format errors.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::conetwork::{
    self, build_all_years, country_totals, filter_country_list, CountryList, YearNetwork,
    DEFAULT_MIN_TOTAL,
};
use crate::format::fmt_real;
use crate::indicator::{self, indicator_series, IndicatorSeries};
use crate::ingest::{self, AliasMap, Parsed};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::ranktest::{self, scan_years, yearly_boxes, ScanReport};
use crate::region::Region;
use crate::synthgen::{self, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const DEFAULT_FROM: i32 = 1980;
pub const DEFAULT_TO: i32 = 2017;
pub const DEFAULT_ALPHA: f64 = 0.06;

pub const MATRIX_FILE: &str = "matrix.csv";
pub const TOTALS_FILE: &str = "totals.csv";
pub const COUNTRY_LIST_FILE: &str = "country_list.csv";
pub const INDICATOR_FILE: &str = "indicator.csv";
pub const PAIRS_FILE: &str = "rho_pairs.csv";
pub const CORPUS_FILE: &str = "corpus.tsv";
pub const REPORT_FILE: &str = "report.md";

pub fn scan_file(focal: &Region) -> String {
    format!("scan_{focal}.json")
}

pub fn box_file(focal: &Region) -> String {
    format!("box_{focal}.csv")
}

#[derive(Debug, Parser)]
#[command(name = "cinenet", version, about = "Country co-occurrence networks from movie publication data")]
pub struct Cli {
    /// Output directory (default: out/<subcommand>)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress and warning messages on stderr
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build per-year co-occurrence matrices, country totals and the country list
    Build(BuildArgs),
    /// Compute the average rate-of-change series for focal countries
    Indicator(IndicatorArgs),
    /// Rank-sum scan of every year against the rest, plus box summaries
    Scan(ScanArgs),
    /// Box summaries of each year's per-partner rate of change
    Boxstats(BoxstatsArgs),
    /// Generate a synthetic corpus
    Synth(SynthArgs),
    /// Markdown digest of scan results
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Canonical corpus TSV
    #[arg(long, conflicts_with_all = ["imdb_basics", "imdb_akas"], required_unless_present = "imdb_basics")]
    pub input: Option<PathBuf>,
    /// IMDB title.basics TSV (use with --imdb-akas)
    #[arg(long, requires = "imdb_akas")]
    pub imdb_basics: Option<PathBuf>,
    /// IMDB title.akas TSV (use with --imdb-basics)
    #[arg(long, requires = "imdb_basics")]
    pub imdb_akas: Option<PathBuf>,
    /// Region alias file: `raw<TAB>canonical` per line
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FROM)]
    pub from: i32,
    #[arg(long, default_value_t = DEFAULT_TO)]
    pub to: i32,
    /// Countries need a total strictly greater than this to enter the list
    #[arg(long, default_value_t = DEFAULT_MIN_TOTAL)]
    pub min_total: u64,
}

#[derive(Debug, Args)]
pub struct IndicatorArgs {
    /// Output directory of a `build` run
    #[arg(long)]
    pub matrix_dir: PathBuf,
    /// Focal country code; repeat for several
    #[arg(long, required = true)]
    pub focal: Vec<String>,
    /// Analyse focal countries that are not in the country list
    #[arg(long)]
    pub allow_outside_list: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Output directory of an `indicator` run
    #[arg(long)]
    pub indicator_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct BoxstatsArgs {
    /// Output directory of an `indicator` run
    #[arg(long)]
    pub indicator_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Flat key = value config file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_countries: Option<usize>,
    #[arg(long)]
    pub from: Option<i32>,
    #[arg(long)]
    pub to: Option<i32>,
    #[arg(long)]
    pub base_volume: Option<usize>,
    #[arg(long)]
    pub cross_prob: Option<f64>,
    #[arg(long)]
    pub shock_year: Option<i32>,
    #[arg(long)]
    pub shock_country: Option<String>,
    #[arg(long)]
    pub shock_factor: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of a `scan` run
    #[arg(long)]
    pub scan_dir: PathBuf,
    /// Output directory of the `indicator` run (default: read from the scan manifest)
    #[arg(long)]
    pub indicator_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn require(path: PathBuf) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Data(format!(
            "missing upstream artifact {}",
            path.display()
        )))
    }
}

/// Writes a file through a closure, buffering.
fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_at(path))
}

struct Ctx<'a> {
    out_dir: PathBuf,
    quiet: bool,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn note(&mut self, msg: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(self.stderr, "{}", msg.as_ref());
        }
    }

    fn prepare_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir).map_err(io_at(&self.out_dir))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let name = match &cli.command {
        Command::Build(_) => "build",
        Command::Indicator(_) => "indicator",
        Command::Scan(_) => "scan",
        Command::Boxstats(_) => "boxstats",
        Command::Synth(_) => "synth",
        Command::Report(_) => "report",
    };
    let mut ctx = Ctx {
        out_dir: cli.out.clone().unwrap_or_else(|| Path::new("out").join(name)),
        quiet: cli.quiet,
        stdout,
        stderr,
    };
    let result = match &cli.command {
        Command::Build(a) => cmd_build(&mut ctx, a),
        Command::Indicator(a) => cmd_indicator(&mut ctx, a),
        Command::Scan(a) => cmd_scan(&mut ctx, a),
        Command::Boxstats(a) => cmd_boxstats(&mut ctx, a),
        Command::Synth(a) => cmd_synth(&mut ctx, a),
        Command::Report(a) => cmd_report(&mut ctx, a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(ctx.stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn ingest_report_lines(ctx: &mut Ctx<'_>, parsed: &Parsed, manifest: &mut RunManifest) {
    let r = &parsed.report;
    for err in &r.row_errors {
        ctx.note(format!("warning: line {}: {}", err.line, err.message));
    }
    ctx.note(format!(
        "read {} data rows: {} movies, {} without regions, {} rejected, {} merged ({} year conflicts), {} non-movie",
        r.data_rows,
        r.emitted,
        r.skipped_empty,
        r.row_errors.len(),
        r.merged,
        r.year_conflicts,
        r.excluded_type
    ));
    manifest
        .stat("data_rows", r.data_rows)
        .stat("movies", r.emitted)
        .stat("skipped_empty", r.skipped_empty)
        .stat("row_errors", r.row_errors.len())
        .stat("merged", r.merged)
        .stat("year_conflicts", r.year_conflicts)
        .stat("excluded_type", r.excluded_type);
}

fn cmd_build(ctx: &mut Ctx<'_>, a: &BuildArgs) -> Result<(), CliError> {
    if a.from > a.to {
        return Err(CliError::Usage(format!(
            "--from {} is after --to {}",
            a.from, a.to
        )));
    }
    let mut manifest = RunManifest::new("build");
    let parsed = match (&a.input, &a.imdb_basics, &a.imdb_akas) {
        (Some(input), _, _) => {
            manifest.option("input", input.display()).option("format", "canonical");
            manifest.add_input(input).map_err(io_at(input))?;
            ingest::parse_canonical(open(input)?)
                .map_err(|e| data(format!("{}: {e}", input.display())))?
        }
        (None, Some(basics), Some(akas)) => {
            manifest
                .option("imdb_basics", basics.display())
                .option("imdb_akas", akas.display())
                .option("format", "imdb");
            manifest.add_input(basics).map_err(io_at(basics))?;
            manifest.add_input(akas).map_err(io_at(akas))?;
            ingest::parse_imdb_pair(open(basics)?, open(akas)?).map_err(data)?
        }
        _ => return Err(CliError::Usage("give --input or --imdb-basics with --imdb-akas".into())),
    };
    ingest_report_lines(ctx, &parsed, &mut manifest);

    let mut records = parsed.records;
    if let Some(path) = &a.aliases {
        let aliases = AliasMap::parse(open(path)?)
            .map_err(|e| data(format!("{}: {e}", path.display())))?;
        manifest.option("aliases", path.display());
        manifest.add_input(path).map_err(io_at(path))?;
        records = ingest::normalize_regions(&records, &aliases);
    }
    let networks = build_all_years(&records, a.from, a.to).map_err(data)?;
    let totals = country_totals(&networks);
    let list = filter_country_list(&totals, a.min_total);

    ctx.prepare_out()?;
    write_file(&ctx.out(MATRIX_FILE), |w| {
        conetwork::write_matrix_csv(&networks, w)
    })?;
    write_file(&ctx.out(TOTALS_FILE), |w| {
        conetwork::write_totals_csv(&totals, w)
    })?;
    write_file(&ctx.out(COUNTRY_LIST_FILE), |w| {
        conetwork::write_country_list_csv(&list, w)
    })?;
    manifest
        .option("from", a.from)
        .option("to", a.to)
        .option("min_total", a.min_total)
        .stat("countries", totals.len())
        .stat("listed_countries", list.members.len());
    manifest.write_to_dir(&ctx.out_dir).map_err(io_at(&ctx.out_dir))?;
    ctx.note(format!(
        "{} years, {} countries, {} above {} total",
        networks.len(),
        totals.len(),
        list.members.len(),
        a.min_total
    ));
    Ok(())
}

/// Everything `indicator` needs from a build directory.
pub struct BuildOutput {
    pub networks: Vec<YearNetwork>,
    pub list: CountryList,
    pub from: i32,
    pub to: i32,
}

fn manifest_option<T: std::str::FromStr>(m: &RunManifest, key: &str, dir: &Path) -> Result<T, CliError> {
    m.resolved_options
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| {
            CliError::Data(format!(
                "{}: manifest lacks option {key:?}",
                dir.join(MANIFEST_FILE).display()
            ))
        })
}

pub fn load_build_dir(dir: &Path) -> Result<BuildOutput, CliError> {
    let manifest_path = require(dir.join(MANIFEST_FILE))?;
    let matrix = require(dir.join(MATRIX_FILE))?;
    let totals_path = require(dir.join(TOTALS_FILE))?;
    let list_path = require(dir.join(COUNTRY_LIST_FILE))?;
    let manifest = RunManifest::read_from_dir(dir).map_err(io_at(&manifest_path))?;
    let from: i32 = manifest_option(&manifest, "from", dir)?;
    let to: i32 = manifest_option(&manifest, "to", dir)?;
    let threshold: u64 = manifest_option(&manifest, "min_total", dir)?;
    let networks = conetwork::read_matrix_csv(open(&matrix)?, from, to)
        .map_err(|e| data(format!("{}: {e}", matrix.display())))?;
    let totals = conetwork::read_totals_csv(open(&totals_path)?)
        .map_err(|e| data(format!("{}: {e}", totals_path.display())))?;
    let list = conetwork::read_country_list_csv(open(&list_path)?, totals, threshold)
        .map_err(|e| data(format!("{}: {e}", list_path.display())))?;
    Ok(BuildOutput {
        networks,
        list,
        from,
        to,
    })
}

fn cmd_indicator(ctx: &mut Ctx<'_>, a: &IndicatorArgs) -> Result<(), CliError> {
    let mut focals: Vec<Region> = Vec::new();
    for raw in &a.focal {
        let code = Region::parse(raw).map_err(|e| CliError::Usage(e.to_string()))?;
        if !focals.contains(&code) {
            focals.push(code);
        }
    }
    let build = load_build_dir(&a.matrix_dir)?;
    let mut all = Vec::new();
    for focal in &focals {
        let series = indicator_series(&build.networks, focal, &build.list, a.allow_outside_list)
            .map_err(|e| match e {
                indicator::IndicatorError::FocalNotInList { .. } => CliError::Usage(e.to_string()),
                other => data(other),
            })?;
        if let Some(w) = series.warning {
            ctx.note(format!(
                "warning: {}: {focal} has no movies in {}..={}; its series is empty",
                w.code(),
                build.from,
                build.to
            ));
        }
        all.push(series);
    }

    ctx.prepare_out()?;
    write_file(&ctx.out(INDICATOR_FILE), |w| {
        indicator::write_indicator_header(&mut *w)?;
        all.iter()
            .try_for_each(|s| indicator::write_indicator_rows(s, &mut *w))
    })?;
    write_file(&ctx.out(PAIRS_FILE), |w| {
        indicator::write_pair_header(&mut *w)?;
        all.iter().try_for_each(|s| indicator::write_pair_rows(s, &mut *w))
    })?;

    let mut manifest = RunManifest::new("indicator");
    manifest
        .option("matrix_dir", a.matrix_dir.display())
        .option(
            "focal",
            focals.iter().map(Region::as_str).collect::<Vec<_>>().join(","),
        )
        .option("allow_outside_list", a.allow_outside_list)
        .option("from", build.from)
        .option("to", build.to)
        .option("min_total", build.list.threshold);
    for name in [MATRIX_FILE, TOTALS_FILE, COUNTRY_LIST_FILE] {
        let p = a.matrix_dir.join(name);
        manifest.add_input(&p).map_err(io_at(&p))?;
    }
    for s in &all {
        if let Some(w) = s.warning {
            manifest.stat(&format!("warning.{}", s.focal), w.code());
        }
    }
    manifest.write_to_dir(&ctx.out_dir).map_err(io_at(&ctx.out_dir))?;
    Ok(())
}

/// Series (with pair detail) from an indicator directory, in file order.
pub fn load_indicator_dir(dir: &Path) -> Result<Vec<IndicatorSeries>, CliError> {
    let ind = require(dir.join(INDICATOR_FILE))?;
    let pairs = require(dir.join(PAIRS_FILE))?;
    let mut series = indicator::read_indicator_csv(open(&ind)?)
        .map_err(|e| data(format!("{}: {e}", ind.display())))?;
    indicator::read_pair_csv(open(&pairs)?, &mut series)
        .map_err(|e| data(format!("{}: {e}", pairs.display())))?;
    Ok(series)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(data)?;
    text.push('\n');
    fs::write(path, text).map_err(io_at(path))
}

fn cmd_scan(ctx: &mut Ctx<'_>, a: &ScanArgs) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha <= 1.0) {
        return Err(CliError::Usage(format!("--alpha must lie in (0, 1], got {}", a.alpha)));
    }
    let series = load_indicator_dir(&a.indicator_dir)?;
    let mut reports = Vec::new();
    for s in &series {
        let report = scan_years(s, a.alpha)
            .map_err(|e| CliError::Data(format!("{}: {e}", s.focal)))?;
        if report.p_floor >= a.alpha {
            ctx.note(format!(
                "note: {}: with {} tested years the smallest attainable p is {}, not below alpha {}",
                s.focal,
                report.entries.len(),
                fmt_real(report.p_floor),
                a.alpha
            ));
        }
        reports.push((report, yearly_boxes(s)));
    }

    ctx.prepare_out()?;
    for (report, boxes) in &reports {
        write_json(&ctx.out(&scan_file(&report.focal)), &report.rounded())?;
        write_file(&ctx.out(&box_file(&report.focal)), |w| {
            ranktest::write_box_csv(boxes, w)
        })?;
    }
    let mut manifest = RunManifest::new("scan");
    manifest
        .option("indicator_dir", a.indicator_dir.display())
        .option("alpha", a.alpha);
    for name in [INDICATOR_FILE, PAIRS_FILE] {
        let p = a.indicator_dir.join(name);
        manifest.add_input(&p).map_err(io_at(&p))?;
    }
    manifest.write_to_dir(&ctx.out_dir).map_err(io_at(&ctx.out_dir))?;

    for (report, _) in &reports {
        for year in &report.significant_years {
            let p = report.entry(*year).map(|e| e.p_two_sided).unwrap_or(f64::NAN);
            let _ = writeln!(ctx.stdout, "{}\t{}\t{}", report.focal, year, fmt_real(p));
        }
    }
    Ok(())
}

fn cmd_boxstats(ctx: &mut Ctx<'_>, a: &BoxstatsArgs) -> Result<(), CliError> {
    let series = load_indicator_dir(&a.indicator_dir)?;
    ctx.prepare_out()?;
    for s in &series {
        let boxes = yearly_boxes(s);
        write_file(&ctx.out(&box_file(&s.focal)), |w| {
            ranktest::write_box_csv(&boxes, w)
        })?;
    }
    let mut manifest = RunManifest::new("boxstats");
    manifest.option("indicator_dir", a.indicator_dir.display());
    let p = a.indicator_dir.join(PAIRS_FILE);
    manifest.add_input(&p).map_err(io_at(&p))?;
    manifest.write_to_dir(&ctx.out_dir).map_err(io_at(&ctx.out_dir))?;
    Ok(())
}

fn synth_config(a: &SynthArgs) -> Result<SynthConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => SynthConfig::from_file(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => SynthConfig::default(),
    };
    if let Some(v) = a.n_countries {
        cfg.n_countries = v;
    }
    if let Some(v) = a.from {
        cfg.year_from = v;
    }
    if let Some(v) = a.to {
        cfg.year_to = v;
    }
    if let Some(v) = a.base_volume {
        cfg.base_volume = v;
    }
    if let Some(v) = a.cross_prob {
        cfg.cross_prob = v;
    }
    if let Some(v) = a.shock_year {
        cfg.shock_year = Some(v);
    }
    if let Some(v) = &a.shock_country {
        cfg.shock_country = Some(Region::parse(v).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    if let Some(v) = a.shock_factor {
        cfg.shock_factor = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn cmd_synth(ctx: &mut Ctx<'_>, a: &SynthArgs) -> Result<(), CliError> {
    let cfg = synth_config(a)?;
    let corpus = synthgen::generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.prepare_out()?;
    write_file(&ctx.out(CORPUS_FILE), |w| ingest::write_canonical(&corpus, w))?;
    let mut manifest = RunManifest::new("synth");
    manifest.resolved_options = cfg.to_options();
    if let Some(path) = &a.config {
        manifest.add_input(path).map_err(io_at(path))?;
    }
    manifest.stat("movies", corpus.len());
    manifest.write_to_dir(&ctx.out_dir).map_err(io_at(&ctx.out_dir))?;
    ctx.note(format!("wrote {} movies", corpus.len()));
    Ok(())
}

fn load_scan_reports(dir: &Path) -> Result<Vec<ScanReport>, CliError> {
    require(dir.join(MANIFEST_FILE))?;
    let entries = fs::read_dir(dir).map_err(io_at(dir))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("scan_") && n.ends_with(".json"))
        })
        .collect();
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "missing upstream artifact {}",
            dir.join("scan_<FOCAL>.json").display()
        )));
    }
    paths.sort();
    let mut reports = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(io_at(&p))?;
        let report: ScanReport =
            serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", p.display())))?;
        reports.push(report);
    }
    reports.sort_by(|a, b| a.focal.cmp(&b.focal));
    Ok(reports)
}

/// Year of the largest average; the earliest year wins ties.
pub fn peak_year(report: &ScanReport) -> Option<i32> {
    report
        .entries
        .iter()
        .fold(None::<&ranktest::ScanEntry>, |best, e| match best {
            Some(b) if b.avg_rho >= e.avg_rho => Some(b),
            _ => Some(e),
        })
        .map(|e| e.year)
}

/// Markdown digest of scan reports, ordered by country code.
pub fn render_report(
    reports: &[ScanReport],
    series: &BTreeMap<Region, IndicatorSeries>,
) -> String {
    let mut out = String::from("# cinenet report\n");
    let mut peaks: Vec<(i32, &Region)> = Vec::new();
    for r in reports {
        out.push_str(&format!("\n## {}\n\n", r.focal));
        let first = r.entries.first().map(|e| e.year);
        let last = r.entries.last().map(|e| e.year);
        if let (Some(first), Some(last)) = (first, last) {
            out.push_str(&format!(
                "- tested years: {} ({first}-{last}), alpha {}, p floor {}\n",
                r.entries.len(),
                fmt_real(r.alpha),
                fmt_real(r.p_floor)
            ));
        }
        if let Some(peak) = peak_year(r) {
            let e = r.entry(peak).expect("peak comes from entries");
            out.push_str(&format!(
                "- peak year: {peak} (avg_rho {}, p_two_sided {})\n",
                fmt_real(e.avg_rho),
                fmt_real(e.p_two_sided)
            ));
            peaks.push((peak, &r.focal));
        }
        if r.significant_years.is_empty() {
            out.push_str("- no year below alpha\n");
        } else {
            out.push_str("\n| year | avg_rho | p_two_sided | status |\n|---|---|---|---|\n");
            for y in &r.significant_years {
                if let Some(e) = r.entry(*y) {
                    out.push_str(&format!(
                        "| {y} | {} | {} | significant |\n",
                        fmt_real(e.avg_rho),
                        fmt_real(e.p_two_sided)
                    ));
                }
            }
            out.push('\n');
        }
        if let Some(s) = series.get(&r.focal) {
            let changes = s.years.iter().zip(&s.abs_change);
            let max = changes.clone().fold(None::<(i32, i64)>, |b, (&y, &c)| match b {
                Some((_, bc)) if bc >= c => b,
                _ => Some((y, c)),
            });
            let min = changes.fold(None::<(i32, i64)>, |b, (&y, &c)| match b {
                Some((_, bc)) if bc <= c => b,
                _ => Some((y, c)),
            });
            if let (Some((ymax, cmax)), Some((ymin, cmin))) = (max, min) {
                out.push_str(&format!(
                    "- largest absolute change up: {ymax} ({cmax:+}); down: {ymin} ({cmin:+})\n"
                ));
            }
        }
        out.push_str(&format!(
            "- plot data: {INDICATOR_FILE} and {PAIRS_FILE} (indicator run), {} and {} (scan run)\n",
            scan_file(&r.focal),
            box_file(&r.focal)
        ));
    }
    if peaks.len() >= 2 {
        peaks.sort();
        out.push_str("\n## Peak timing\n\n");
        for w in peaks.windows(2) {
            let ((y0, c0), (y1, c1)) = (w[0], w[1]);
            if y0 == y1 {
                out.push_str(&format!("- {c1} peak ({y1}) coincides with {c0} peak ({y0})\n"));
            } else {
                out.push_str(&format!(
                    "- {c1} peak ({y1}) follows {c0} peak ({y0}) by {} years\n",
                    y1 - y0
                ));
            }
        }
    }
    out
}

fn cmd_report(ctx: &mut Ctx<'_>, a: &ReportArgs) -> Result<(), CliError> {
    let reports = load_scan_reports(&a.scan_dir)?;
    let indicator_dir = match &a.indicator_dir {
        Some(d) => d.clone(),
        None => {
            let m = RunManifest::read_from_dir(&a.scan_dir).map_err(io_at(&a.scan_dir))?;
            PathBuf::from(m.resolved_options.get("indicator_dir").ok_or_else(|| {
                CliError::Data("scan manifest lacks indicator_dir; pass --indicator-dir".into())
            })?)
        }
    };
    let series: BTreeMap<Region, IndicatorSeries> = load_indicator_dir(&indicator_dir)?
        .into_iter()
        .map(|s| (s.focal.clone(), s))
        .collect();
    let text = render_report(&reports, &series);
    ctx.prepare_out()?;
    fs::write(ctx.out(REPORT_FILE), &text).map_err(io_at(&ctx.out(REPORT_FILE)))?;
    let mut manifest = RunManifest::new("report");
    manifest
        .option("scan_dir", a.scan_dir.display())
        .option("indicator_dir", indicator_dir.display());
    for r in &reports {
        let p = a.scan_dir.join(scan_file(&r.focal));
        manifest.add_input(&p).map_err(io_at(&p))?;
    }
    manifest.write_to_dir(&ctx.out_dir).map_err(io_at(&ctx.out_dir))?;
    if !ctx.quiet {
        let _ = write!(ctx.stdout, "{text}");
    }
    Ok(())
}
