use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use cinenet::conetwork::{build_all_years, build_year_network, YearNetwork};
use cinenet::indicator::{indicator_series, rho_pair};
use cinenet::ingest::{parse_canonical_str, write_canonical, AliasMap};
use cinenet::ranktest::{box_summary, mann_whitney, mann_whitney_exact};
use cinenet::{filter_country_list, normalize_regions, MovieRecord, Region};

const CODES: [&str; 8] = ["AR", "BR", "CN", "DE", "FR", "GB", "JP", "US"];

fn region(i: usize) -> Region {
    Region::parse(CODES[i]).unwrap()
}

fn movie_strategy(year_lo: i32, year_hi: i32) -> impl Strategy<Value = (i32, BTreeSet<usize>)> {
    (year_lo..=year_hi, prop::collection::btree_set(0..CODES.len(), 1..=5))
}

fn corpus_strategy(
    max_movies: usize,
    year_lo: i32,
    year_hi: i32,
) -> impl Strategy<Value = Vec<MovieRecord>> {
    prop::collection::vec(movie_strategy(year_lo, year_hi), 0..=max_movies).prop_map(|movies| {
        movies
            .into_iter()
            .enumerate()
            .map(|(i, (year, regs))| MovieRecord {
                movie_id: format!("m{i}"),
                year,
                regions: regs.into_iter().map(region).collect(),
            })
            .collect()
    })
}

fn distinct_values(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-10_000i32..10_000, min..=max)
        .prop_map(|s| s.into_iter().map(|v| v as f64 / 16.0).collect::<Vec<_>>())
        .prop_shuffle()
}

proptest! {
    #[test]
    fn canonical_round_trip(corpus in corpus_strategy(30, 1980, 1990)) {
        let mut buf = Vec::new();
        write_canonical(&corpus, &mut buf).unwrap();
        let parsed = parse_canonical_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(parsed.records, corpus);
    }

    #[test]
    fn row_accounting(rows in prop::collection::vec((0u8..6, 1979i32..1983, prop::collection::vec(0..CODES.len(), 0..3), any::<bool>()), 0..40)) {
        let mut text = String::from("movie_id\tyear\tregions\n");
        for (id, year, regs, bad_year) in &rows {
            let regs: Vec<&str> = regs.iter().map(|&i| CODES[i]).collect();
            let year = if *bad_year { "x".to_string() } else { year.to_string() };
            text.push_str(&format!("id{id}\t{year}\t{}\n", regs.join(",")));
        }
        let parsed = parse_canonical_str(&text).unwrap();
        let ids: BTreeSet<&str> = parsed.records.iter().map(|r| r.movie_id.as_str()).collect();
        prop_assert_eq!(ids.len(), parsed.records.len());
        let r = &parsed.report;
        prop_assert_eq!(r.data_rows, rows.len());
        prop_assert_eq!(parsed.records.len() + r.skipped() + r.merged, rows.len());
    }

    #[test]
    fn normalisation_is_idempotent(
        corpus in corpus_strategy(20, 2000, 2000),
        aliases in prop::collection::vec((0..CODES.len(), 0..CODES.len()), 0..6),
    ) {
        // keep only acyclic alias sets
        let pairs: Vec<(Region, Region)> = aliases.into_iter().map(|(a, b)| (region(a), region(b))).collect();
        if let Ok(map) = AliasMap::new(pairs) {
            let once = normalize_regions(&corpus, &map);
            let twice = normalize_regions(&once, &map);
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn pair_conservation_symmetry_and_bound(corpus in corpus_strategy(50, 2000, 2000)) {
        let net = build_year_network(&corpus, 2000);
        let expected: u64 = corpus.iter().map(|m| {
            let k = m.regions.len() as u64;
            k * (k - 1)
        }).sum();
        prop_assert_eq!(net.off_diagonal_sum(), expected);
        let dense = net.to_dense();
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                prop_assert_eq!(dense[i][j], dense[j][i]);
                if i != j {
                    prop_assert!(dense[i][j] <= dense[i][i].min(dense[j][j]));
                }
            }
        }
        for code in net.countries() {
            let direct = corpus.iter().filter(|m| m.regions.contains(code)).count() as u64;
            prop_assert_eq!(net.diagonal(code.as_str()), direct);
        }
    }

    #[test]
    fn permutation_invariance(corpus in corpus_strategy(40, 2000, 2000).prop_shuffle()) {
        let mut sorted = corpus.clone();
        sorted.sort_by(|a, b| a.movie_id.cmp(&b.movie_id));
        prop_assert_eq!(build_year_network(&corpus, 2000), build_year_network(&sorted, 2000));
    }

    #[test]
    fn additivity(a in corpus_strategy(25, 2000, 2000), b in corpus_strategy(25, 2000, 2000)) {
        let mut merged = a.clone();
        merged.extend(b.iter().cloned().map(|mut m| { m.movie_id.push('b'); m }));
        let (na, nb, nm) = (
            build_year_network(&a, 2000),
            build_year_network(&b, 2000),
            build_year_network(&merged, 2000),
        );
        for x in CODES {
            for y in CODES {
                prop_assert_eq!(nm.count(x, y), na.count(x, y) + nb.count(x, y));
            }
        }
    }

    #[test]
    fn rho_symmetry_and_homogeneity(
        corpus in corpus_strategy(50, 2000, 2001),
        c in 1u64..6,
    ) {
        let nets = build_all_years(&corpus, 2000, 2001).unwrap();
        let scaled: Vec<YearNetwork> = nets.iter().map(|n| scale(n, c)).collect();
        for i in 0..CODES.len() {
            for j in 0..CODES.len() {
                if i == j { continue; }
                let (x, y) = (region(i), region(j));
                let xy = rho_pair(&nets[0], &nets[1], &x, &y).unwrap();
                let yx = rho_pair(&nets[0], &nets[1], &y, &x).unwrap();
                prop_assert_eq!(xy.as_ref().map(|p| p.rho), yx.as_ref().map(|p| p.rho));
                let sc = rho_pair(&scaled[0], &scaled[1], &x, &y).unwrap();
                match (xy, sc) {
                    (Some(p), Some(q)) => {
                        // q = p / c exactly as rationals
                        prop_assert_eq!(
                            q.numerator() as i128 * p.denominator() as i128 * c as i128,
                            p.numerator() as i128 * q.denominator() as i128
                        );
                        prop_assert!((q.rho * c as f64 - p.rho).abs() <= 1e-12 * p.rho.abs().max(f64::MIN_POSITIVE));
                    }
                    (None, None) => {}
                    _ => prop_assert!(false, "definedness changed under scaling"),
                }
            }
        }
    }

    #[test]
    fn rho_time_reversal_negates_numerator(corpus in corpus_strategy(40, 2000, 2001)) {
        let nets = build_all_years(&corpus, 2000, 2001).unwrap();
        // relabel so the later year comes first
        let now_as_prev = relabel(&nets[1], 2000);
        let prev_as_now = relabel(&nets[0], 2001);
        for i in 0..CODES.len() {
            for j in (i + 1)..CODES.len() {
                let (x, y) = (region(i), region(j));
                let fwd = rho_pair(&nets[0], &nets[1], &x, &y).unwrap();
                let back = rho_pair(&now_as_prev, &prev_as_now, &x, &y).unwrap();
                if let (Some(f), Some(b)) = (fwd, back) {
                    prop_assert_eq!(f.numerator(), -b.numerator());
                }
            }
        }
    }

    #[test]
    fn average_within_partner_range_and_abs_change_telescopes(corpus in corpus_strategy(50, 2000, 2004)) {
        let nets = build_all_years(&corpus, 2000, 2004).unwrap();
        let totals: BTreeMap<Region, u64> = CODES.iter().map(|c| (Region::parse(c).unwrap(), 1)).collect();
        let list = filter_country_list(&totals, 0);
        let focal = region(7);
        let s = indicator_series(&nets, &focal, &list, false).unwrap();
        if s.warning.is_some() {
            return Ok(());
        }
        for (k, &year) in s.years.iter().enumerate() {
            let vals = s.rho_values(year);
            prop_assert_eq!(vals.len(), s.n_partners[k]);
            prop_assert_eq!(s.avg_rho[k].is_some(), s.n_partners[k] > 0);
            if let Some(avg) = s.avg_rho[k] {
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(avg >= lo - 1e-15 && avg <= hi + 1e-15);
            }
        }
        let total: i64 = s.abs_change.iter().sum();
        let first = nets.first().unwrap().diagonal("US") as i64;
        let last = nets.last().unwrap().diagonal("US") as i64;
        prop_assert_eq!(total, last - first);
    }

    #[test]
    fn swapping_samples_mirrors_u(a in distinct_values(1, 12), b in distinct_values(1, 12)) {
        // make the combined sample untied
        let b: Vec<f64> = b.into_iter().map(|v| v + 1.0 / 1024.0).collect();
        let ab = mann_whitney(&a, &b).unwrap();
        let ba = mann_whitney(&b, &a).unwrap();
        prop_assert_eq!(ab.u_statistic + ba.u_statistic, (a.len() * b.len()) as f64);
        prop_assert!((ab.p_two_sided - ba.p_two_sided).abs() < 1e-12);
        if a.len() + b.len() > 14 {
            return Ok(());
        }
        if let (Ok(x), Ok(y)) = (mann_whitney_exact(&a, &b), mann_whitney_exact(&b, &a)) {
            // P(U_ab >= u) == P(U_ba <= n1 n2 - u)
            let lower_ba = 1.0 - y.p_one_sided + point_mass(&b, &a, y.u_statistic);
            prop_assert!((x.p_one_sided - lower_ba).abs() < 1e-12);
        }
    }

    #[test]
    fn p_values_invariant_under_monotone_maps(
        a in distinct_values(1, 6), b in distinct_values(1, 30),
        scale in 0.1f64..10.0, shift in -5.0f64..5.0,
    ) {
        let b: Vec<f64> = b.into_iter().map(|v| v + 1.0 / 1024.0).collect();
        let f = |v: f64| (scale * v + shift).powi(3) + v;
        let before = mann_whitney(&a, &b).unwrap();
        let after = mann_whitney(
            &a.iter().map(|&v| f(v)).collect::<Vec<_>>(),
            &b.iter().map(|&v| f(v)).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert_eq!(before.u_statistic, after.u_statistic);
        prop_assert_eq!(before.p_two_sided, after.p_two_sided);
        prop_assert_eq!(before.p_one_sided, after.p_one_sided);
    }

    #[test]
    fn single_strict_maximum(rest in distinct_values(1, 60)) {
        let top = rest.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let r = mann_whitney(&[top], &rest).unwrap();
        let n2 = rest.len() as f64;
        prop_assert_eq!(r.p_one_sided, 1.0 / (n2 + 1.0));
        prop_assert_eq!(r.p_two_sided, (2.0 / (n2 + 1.0)).min(1.0));
    }

    #[test]
    fn box_summary_ignores_order(values in prop::collection::vec(-1e3f64..1e3, 1..50).prop_shuffle()) {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let a = box_summary(&values, 1).unwrap();
        prop_assert_eq!(&a, &box_summary(&sorted, 1).unwrap());
        prop_assert!(a.minimum <= a.q1 && a.q1 <= a.median && a.median <= a.q3 && a.q3 <= a.maximum);
        for o in &a.outliers {
            prop_assert!(*o < a.lower_fence || *o > a.upper_fence);
        }
    }
}

fn scale(net: &YearNetwork, c: u64) -> YearNetwork {
    YearNetwork::from_counts(
        net.year(),
        net.diagonal_entries().map(|(r, d)| (r.clone(), d * c)),
        net.pair_entries().map(|(a, b, n)| (a.clone(), b.clone(), n * c)),
    )
    .unwrap()
}

fn relabel(net: &YearNetwork, year: i32) -> YearNetwork {
    YearNetwork::from_counts(
        year,
        net.diagonal_entries().map(|(r, d)| (r.clone(), d)),
        net.pair_entries().map(|(a, b, n)| (a.clone(), b.clone(), n)),
    )
    .unwrap()
}

/// P(U = u) by brute force over rank subsets.
fn point_mass(s1: &[f64], s2: &[f64], u: f64) -> f64 {
    let n1 = s1.len();
    let n = n1 + s2.len();
    let mut hits = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        total += 1;
        let rank_sum: usize = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).sum();
        if (rank_sum - n1 * (n1 + 1) / 2) as f64 == u {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}
