//! Acceptance suite. Runs every criterion, prints one PASS/FAIL/SKIP line
//! each, and exits non-zero if any criterion fails.
//!
//! The real-data check runs only when `CINENET_IMDB_BASICS` and
//! `CINENET_IMDB_AKAS` point at an IMDB `title.basics` / `title.akas` pair.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use cinenet::conetwork::DEFAULT_MIN_TOTAL;
use cinenet::ranktest::{box_summary, exact_tail, mann_whitney_exact, scan_years};
use cinenet::{
    build_all_years, build_year_network, country_totals, filter_country_list, generate,
    indicator_series, rho_pair, CountryList, MovieRecord, Region, SynthConfig, YearNetwork,
};

use common::{cli, data_files, fixture, p};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("exact p-value for a 38-point strict maximum", exact_38),
        ("exact test equals brute-force enumeration", exact_vs_enumeration),
        ("matrix builder equals pair-enumeration oracle", matrix_vs_oracle),
        ("rate-of-change invariants", rho_invariants),
        ("synthetic shock detection and null rate", shock_detection),
        ("pipeline determinism", pipeline_determinism),
        ("box summary equals reference", box_vs_reference),
        ("real IMDB dump (conditional)", real_data),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let verdict = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag}  {name}: {detail} [{secs:.3} s]");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn exact_38() -> Verdict {
    let rest: Vec<f64> = (0..37).map(|i| i as f64 * 0.01).collect();
    let start = Instant::now();
    let r = mann_whitney_exact(&[1.0], &rest).unwrap();
    let elapsed = start.elapsed();
    let rounded = (r.p_two_sided * 1e4).round() / 1e4;
    check(
        r.p_two_sided == 2.0 / 38.0 && rounded == 0.0526 && elapsed < Duration::from_millis(1),
        format!("p_two_sided {} (4 dp {rounded}), {:?}", r.p_two_sided, elapsed),
    )
}

fn distinct_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        s.dedup();
        if s.len() == n {
            return v;
        }
    }
}

/// Counts (U >= u, U <= u, all) over every choice of sample-1 ranks.
fn enumerate_tail(n1: usize, n2: usize, u: u64) -> (u64, u64, u64) {
    let n = n1 + n2;
    let (mut ge, mut le, mut all) = (0, 0, 0);
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let rank_sum: usize = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).sum();
        let stat = (rank_sum - n1 * (n1 + 1) / 2) as u64;
        all += 1;
        ge += u64::from(stat >= u);
        le += u64::from(stat <= u);
    }
    (ge, le, all)
}

fn exact_vs_enumeration() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = 0;
    for n1 in 1..=6 {
        for n2 in 1..=6 {
            for _ in 0..500 {
                let v = distinct_sample(&mut rng, n1 + n2);
                let (s1, s2) = v.split_at(n1);
                let u: u64 = s1
                    .iter()
                    .map(|x| s2.iter().filter(|y| x > y).count() as u64)
                    .sum();
                let (ge, le, all) = enumerate_tail(n1, n2, u);
                let r = mann_whitney_exact(s1, s2).unwrap();
                let tail = exact_tail(n1, n2, u);
                let two = (2.0 * ge.min(le) as f64 / all as f64).min(1.0);
                if r.u_statistic != u as f64
                    || (tail.upper, tail.lower, tail.total) != (ge, le, all)
                    || r.p_one_sided != ge as f64 / all as f64
                    || r.p_two_sided != two
                {
                    return Verdict::Fail(format!("mismatch at n1={n1} n2={n2} sample {v:?}"));
                }
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(10),
        format!("{cases} inputs over all n1, n2 <= 6, {elapsed:?}"),
    )
}

const CODES: [&str; 8] = ["AR", "BR", "CN", "DE", "FR", "IN", "JP", "US"];

fn random_corpus(rng: &mut ChaCha8Rng, max_movies: usize, years: &[i32]) -> Vec<MovieRecord> {
    (0..rng.gen_range(0..=max_movies))
        .map(|i| {
            let k = rng.gen_range(1..=4);
            let regions: Vec<&str> = CODES.choose_multiple(rng, k).copied().collect();
            MovieRecord::new(format!("m{i}"), *years.choose(rng).unwrap(), regions)
        })
        .collect()
}

fn matrix_vs_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let corpus = random_corpus(&mut rng, 50, &[2000, 2000, 2001]);
        let net = build_year_network(&corpus, 2000);
        let mut oracle = [[0u64; 8]; 8];
        for m in corpus.iter().filter(|m| m.year == 2000) {
            for a in &m.regions {
                for b in &m.regions {
                    let ia = CODES.iter().position(|c| *c == a.as_str()).unwrap();
                    let ib = CODES.iter().position(|c| *c == b.as_str()).unwrap();
                    oracle[ia][ib] += 1;
                }
            }
        }
        let present: Vec<&str> = CODES
            .iter()
            .enumerate()
            .filter(|(i, _)| oracle[*i][*i] > 0)
            .map(|(_, c)| *c)
            .collect();
        let listed: Vec<&str> = net.countries().iter().map(Region::as_str).collect();
        if listed != present {
            return Verdict::Fail(format!("corpus {trial}: countries {listed:?} vs {present:?}"));
        }
        for (i, a) in CODES.iter().enumerate() {
            for (j, b) in CODES.iter().enumerate() {
                if net.count(a, b) != oracle[i][j] {
                    return Verdict::Fail(format!("corpus {trial}: entry {a},{b}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(5),
        format!("1000 corpora, {elapsed:?}"),
    )
}

fn scaled(net: &YearNetwork, c: u64) -> YearNetwork {
    YearNetwork::from_counts(
        net.year(),
        net.diagonal_entries().map(|(r, d)| (r.clone(), d * c)),
        net.pair_entries().map(|(a, b, n)| (a.clone(), b.clone(), n * c)),
    )
    .unwrap()
}

fn rel_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn rho_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let regions: Vec<Region> = CODES.iter().map(|c| Region::parse(c).unwrap()).collect();
    let (mut symmetric, mut zero, mut scaled_ok, mut excluded) = (0, 0, 0, 0);
    let networks = 250;
    for trial in 0..networks {
        let corpus = random_corpus(&mut rng, 60, &[2000, 2001]);
        let prev = build_year_network(&corpus, 2000);
        let now = build_year_network(&corpus, 2001);
        let c = rng.gen_range(2..50u64);
        let (prev_c, now_c) = (scaled(&prev, c), scaled(&now, c));
        let mut all_sym = true;
        let mut all_scaled = true;
        let mut all_excluded = true;
        for x in &regions {
            for y in regions.iter().filter(|y| *y != x) {
                let xy = rho_pair(&prev, &now, x, y).unwrap();
                let yx = rho_pair(&prev, &now, y, x).unwrap();
                match (&xy, &yx) {
                    (Some(a), Some(b)) => {
                        all_sym &= a.numerator() == b.numerator()
                            && a.denominator() == b.denominator()
                            && a.rho == b.rho;
                    }
                    (None, None) => {}
                    _ => all_sym = false,
                }
                let undefined = prev.diagonal(x.as_str()) == 0 || prev.diagonal(y.as_str()) == 0;
                all_excluded &= undefined == xy.is_none();
                if let (Some(a), Some(s)) = (&xy, rho_pair(&prev_c, &now_c, x, y).unwrap()) {
                    // rho_c = rho / c as rationals: n_c * d * c == n * d_c
                    let lhs = s.numerator() as i128 * a.denominator() as i128 * c as i128;
                    let rhs = a.numerator() as i128 * s.denominator() as i128;
                    all_scaled &= lhs == rhs && rel_close(s.rho, a.rho / c as f64);
                } else {
                    all_scaled &= xy.is_none();
                }
            }
        }
        symmetric += usize::from(all_sym);
        scaled_ok += usize::from(all_scaled);

        // unchanged edges give exactly zero
        let frozen = YearNetwork::from_counts(
            2001,
            prev.diagonal_entries().map(|(r, d)| (r.clone(), d)),
            prev.pair_entries().map(|(a, b, n)| (a.clone(), b.clone(), n)),
        )
        .unwrap();
        let all_zero = regions.iter().all(|x| {
            regions.iter().filter(|y| *y != x).all(|y| {
                rho_pair(&prev, &frozen, x, y)
                    .unwrap()
                    .is_none_or(|pt| pt.numerator() == 0 && pt.rho == 0.0)
            })
        });
        zero += usize::from(all_zero);

        // the average skips undefined partners rather than counting them as zero
        let focal = &regions[trial % regions.len()];
        let list = CountryList {
            members: regions.clone(),
            threshold: 0,
            totals: BTreeMap::new(),
        };
        let pair = [prev.clone(), now.clone()];
        let series = indicator_series(&pair, focal, &list, false).unwrap();
        if series.warning.is_none() {
            let defined: Vec<f64> = regions
                .iter()
                .filter(|y| *y != focal)
                .filter_map(|y| rho_pair(&prev, &now, focal, y).unwrap().map(|pt| pt.rho))
                .collect();
            let expected =
                (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
            all_excluded &= series.n_partners[0] == defined.len()
                && match (series.avg_rho[0], expected) {
                    (Some(a), Some(b)) => rel_close(a, b),
                    (None, None) => true,
                    _ => false,
                };
        }
        excluded += usize::from(all_excluded);
    }
    check(
        [symmetric, zero, scaled_ok, excluded] == [networks; 4],
        format!(
            "{networks} networks: symmetry {symmetric}, zero numerator {zero}, scaling {scaled_ok}, exclusion {excluded}"
        ),
    )
}

/// Years flagged for `AA` by the library pipeline on one synthetic corpus.
fn flagged_years(cfg: &SynthConfig) -> Vec<i32> {
    let corpus = generate(cfg).unwrap();
    let nets = build_all_years(&corpus, cfg.year_from, cfg.year_to).unwrap();
    let list = filter_country_list(&country_totals(&nets), DEFAULT_MIN_TOTAL);
    let focal = Region::parse("AA").unwrap();
    let series = indicator_series(&nets, &focal, &list, false).unwrap();
    scan_years(&series, 0.06).unwrap().significant_years
}

fn shock_detection() -> Verdict {
    let start = Instant::now();
    let base = SynthConfig {
        n_countries: 5,
        year_from: 1980,
        year_to: 2019,
        base_volume: 200,
        cross_prob: 0.05,
        shock_year: Some(2000),
        shock_country: Some(Region::parse("AA").unwrap()),
        shock_factor: 4.0,
        seed: 0,
    };
    let mut hits = 0;
    let mut null_counts: BTreeMap<i32, usize> = BTreeMap::new();
    for seed in 0..100 {
        let shocked = SynthConfig { seed, ..base.clone() };
        hits += usize::from(flagged_years(&shocked).contains(&2000));
        let null = SynthConfig { seed, shock_factor: 1.0, ..base.clone() };
        for y in flagged_years(&null) {
            *null_counts.entry(y).or_default() += 1;
        }
    }
    let worst = null_counts
        .iter()
        .max_by_key(|(_, n)| **n)
        .map(|(y, n)| (*y, *n))
        .unwrap_or((0, 0));
    let elapsed = start.elapsed();
    check(
        hits >= 95 && worst.1 <= 11 && elapsed < Duration::from_secs(60),
        format!(
            "shock year flagged in {hits}/100 seeds; null: most-flagged year {} in {}/100 seeds; {elapsed:?}",
            worst.0, worst.1
        ),
    )
}

fn run_pipeline(root: &Path) -> Result<(), String> {
    let steps: Vec<Vec<String>> = vec![
        vec!["build".into(), "--input".into(), p(&fixture("fixture_corpus.tsv")), "--from".into(), "1980".into(), "--to".into(), "1984".into(), "--min-total".into(), "60".into(), "--out".into(), p(&root.join("build"))],
        vec!["indicator".into(), "--matrix-dir".into(), p(&root.join("build")), "--focal".into(), "US".into(), "--focal".into(), "CN".into(), "--out".into(), p(&root.join("indicator"))],
        vec!["scan".into(), "--indicator-dir".into(), p(&root.join("indicator")), "--out".into(), p(&root.join("scan"))],
        vec!["report".into(), "--scan-dir".into(), p(&root.join("scan")), "--out".into(), p(&root.join("report"))],
    ];
    for mut args in steps {
        args.push("--quiet".into());
        let r = cli(&args);
        if r.code != 0 {
            return Err(format!("{} exited {}: {}", args[0], r.code, r.stderr));
        }
    }
    Ok(())
}

fn pipeline_determinism() -> Verdict {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if let Err(e) = run_pipeline(&a).and_then(|_| run_pipeline(&b)) {
        return Verdict::Fail(e);
    }
    let mut files = 0;
    for stage in ["build", "indicator", "scan", "report"] {
        let (fa, fb) = (data_files(&a.join(stage)), data_files(&b.join(stage)));
        if fa != fb {
            return Verdict::Fail(format!("{stage} outputs differ"));
        }
        files += fa.len();
    }
    Verdict::Pass(format!("{files} data files byte-identical across two runs"))
}

/// Quartiles by linear interpolation at (n - 1) p, fences at 1.5 IQR.
fn reference_box(values: &[f64]) -> ([f64; 7], Vec<f64>) {
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let h = (x.len() - 1) as f64 * p;
        let i = h.floor() as usize;
        if i + 1 < x.len() {
            x[i] + (h - i as f64) * (x[i + 1] - x[i])
        } else {
            x[i]
        }
    };
    let (q1, q2, q3) = (q(0.25), q(0.5), q(0.75));
    let lo = q1 - 1.5 * (q3 - q1);
    let hi = q3 + 1.5 * (q3 - q1);
    let out = x.iter().copied().filter(|v| *v < lo || *v > hi).collect();
    ([x[0], q1, q2, q3, x[x.len() - 1], lo, hi], out)
}

fn box_vs_reference() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..500 {
        let n = rng.gen_range(1..60);
        let spread = 10f64.powi(rng.gen_range(-6..4));
        let values: Vec<f64> = (0..n)
            .map(|_| {
                let v = rng.gen_range(-1.0..1.0) * spread;
                if rng.gen_bool(0.05) { v * 50.0 } else { v }
            })
            .collect();
        let b = box_summary(&values, 2000).unwrap();
        let (want, outliers) = reference_box(&values);
        let got = [b.minimum, b.q1, b.median, b.q3, b.maximum, b.lower_fence, b.upper_fence];
        if !got.iter().zip(&want).all(|(g, w)| rel_close(*g, *w)) || b.outliers != outliers {
            return Verdict::Fail(format!("input {trial}: {got:?} vs {want:?}"));
        }
    }
    Verdict::Pass("500 random inputs within 1e-12 relative".into())
}

fn real_data() -> Verdict {
    let (Some(basics), Some(akas)) = (
        std::env::var_os("CINENET_IMDB_BASICS"),
        std::env::var_os("CINENET_IMDB_AKAS"),
    ) else {
        return Verdict::Skip(
            "set CINENET_IMDB_BASICS and CINENET_IMDB_AKAS to an IMDB dump pair to run".into(),
        );
    };
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("build");
    let start = Instant::now();
    let r = cli(&[
        "build".to_string(),
        "--imdb-basics".into(),
        Path::new(&basics).display().to_string(),
        "--imdb-akas".into(),
        Path::new(&akas).display().to_string(),
        "--from".into(),
        "1980".into(),
        "--to".into(),
        "2017".into(),
        "--out".into(),
        p(&out),
        "--quiet".into(),
    ]);
    let elapsed = start.elapsed();
    if r.code != 0 {
        return Verdict::Fail(format!("build exited {}: {}", r.code, r.stderr));
    }
    let matrix = std::fs::read_to_string(out.join("matrix.csv")).unwrap();
    let years: BTreeSet<&str> = matrix
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').next())
        .collect();
    let manifest = cinenet::manifest::RunManifest::read_from_dir(&out).unwrap();
    let movies = manifest.stats.get("movies").cloned().unwrap_or_default();
    check(
        years.len() == 38 && elapsed < Duration::from_secs(300),
        format!("{movies} movies, {} years with networks, {elapsed:?}", years.len()),
    )
}
