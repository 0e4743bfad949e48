#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli<S: AsRef<str>>(args: &[S]) -> Run {
    let mut argv = vec!["cinenet".to_string()];
    argv.extend(args.iter().map(|a| a.as_ref().to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cinenet::cli::run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

/// Plain-text reading of a canonical corpus: id -> (first year, union of
/// regions), ignoring rows without regions. Independent of the library parser.
pub fn naive_corpus(text: &str) -> BTreeMap<String, (i32, BTreeSet<String>)> {
    let mut out: BTreeMap<String, (i32, BTreeSet<String>)> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let regions: BTreeSet<String> = f[2]
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if regions.is_empty() {
            continue;
        }
        let year: i32 = f[1].parse().unwrap();
        let e = out.entry(f[0].to_string()).or_insert((year, BTreeSet::new()));
        e.1.extend(regions);
    }
    out
}

/// Matrix dump as a lookup table keyed by (year, a, b) in both orientations.
pub struct Dump(pub HashMap<(i32, String, String), u64>);

impl Dump {
    pub fn parse(text: &str) -> Dump {
        let mut m = HashMap::new();
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let year: i32 = f[0].parse().unwrap();
            let c: u64 = f[3].parse().unwrap();
            m.insert((year, f[1].to_string(), f[2].to_string()), c);
            m.insert((year, f[2].to_string(), f[1].to_string()), c);
        }
        Dump(m)
    }

    pub fn get(&self, year: i32, a: &str, b: &str) -> u64 {
        self.0
            .get(&(year, a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0)
    }
}

/// Spreadsheet-style average rho: for each year, mean of
/// (E(y) - E(y-1)) / (D_x(y-1) D_p(y-1)) over partners with nonzero
/// previous-year diagonals.
pub fn oracle_avg_rho(
    dump: &Dump,
    focal: &str,
    partners: &[&str],
    from: i32,
    to: i32,
) -> Vec<(i32, Option<f64>, usize, i64)> {
    let mut rows = Vec::new();
    for year in (from + 1)..=to {
        let mut vals = Vec::new();
        for partner in partners.iter().filter(|p| **p != focal) {
            let dx = dump.get(year - 1, focal, focal);
            let dy = dump.get(year - 1, partner, partner);
            if dx == 0 || dy == 0 {
                continue;
            }
            let num = dump.get(year, focal, partner) as f64 - dump.get(year - 1, focal, partner) as f64;
            vals.push(num / (dx as f64 * dy as f64));
        }
        let avg = if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let abs = dump.get(year, focal, focal) as i64 - dump.get(year - 1, focal, focal) as i64;
        rows.push((year, avg, vals.len(), abs));
    }
    rows
}

/// Writes an indicator directory by hand for a single focal series.
pub fn write_indicator_dir(dir: &Path, focal: &str, first_year: i32, values: &[f64]) {
    std::fs::create_dir_all(dir).unwrap();
    let mut ind = String::from("focal,year,avg_rho,n_partners,abs_change,percent\n");
    let mut pairs =
        String::from("focal,partner,year,edge_now,edge_prev,diag_prev_x,diag_prev_y,rho\n");
    for (i, v) in values.iter().enumerate() {
        let year = first_year + i as i32;
        ind.push_str(&format!("{focal},{year},{v},1,0,{}\n", v * 100.0));
        pairs.push_str(&format!("{focal},ZZ,{year},1,1,1,1,{v}\n"));
    }
    std::fs::write(dir.join("indicator.csv"), ind).unwrap();
    std::fs::write(dir.join("rho_pairs.csv"), pairs).unwrap();
    std::fs::write(dir.join("manifest.json"), "{}").unwrap();
}

/// All files of a directory (name -> bytes), excluding the manifest.
pub fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}
