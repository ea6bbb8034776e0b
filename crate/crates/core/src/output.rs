//! Result rows, CSV files and the experiment driver.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backhaul::{run_cs2, Cs2Scheme, Cs2Trial};
use crate::config::{ExperimentConfig, ScenarioConfig};
use crate::error::{Error, Result};
use crate::relay::{run_cs1, Cs1Trial};
use crate::stats::EmpiricalDistribution;

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CDF_FILE: &str = "cdf.csv";

pub const TRIALS_HEADER: &str = "scenario,scheme,topology_id,realization_id,sweep_value,metric_name,metric_value";
pub const SUMMARY_HEADER: &str = "scenario,scheme,sweep_value,metric_name,count,mean,p5,p50";
pub const CDF_HEADER: &str = "scenario,scheme,sweep_value,metric_name,value,cumulative_fraction";

pub const SUM_RATE: &str = "sum_rate_bps";
pub const MIN_RATE: &str = "min_rate_bps";
pub const CROSSOVER: &str = "crossover_haps_elements";
const CS1_USER_METRICS: [&str; 4] = ["near1_rate_bps", "near2_rate_bps", "edge1_rate_bps", "edge2_rate_bps"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub scheme: String,
    pub topology_id: usize,
    pub realization_id: usize,
    pub sweep_value: Option<f64>,
    pub metric_name: String,
    pub metric_value: f64,
}

impl ResultRow {
    fn validate(&self) -> Result<()> {
        for (what, s) in [
            ("scenario", &self.scenario),
            ("scheme", &self.scheme),
            ("metric_name", &self.metric_name),
        ] {
            if s.is_empty() || s.contains([',', '"', '\n', '\r']) {
                return Err(Error::invalid("result row", format!("bad {what} {s:?}")));
            }
        }
        if !self.metric_value.is_finite() || self.sweep_value.is_some_and(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "result row",
                format!("non-finite value in {} / {}", self.scheme, self.metric_name),
            ));
        }
        Ok(())
    }
}

/// `%.9g`-style rendering: 9 significant digits, trailing zeros dropped,
/// exponent form outside `1e-5 <= |x| < 1e9`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn cmp_sweep(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

fn row_order(a: &ResultRow, b: &ResultRow) -> Ordering {
    a.scheme
        .cmp(&b.scheme)
        .then(a.topology_id.cmp(&b.topology_id))
        .then(a.realization_id.cmp(&b.realization_id))
        .then(cmp_sweep(a.sweep_value, b.sweep_value))
        .then(a.metric_name.cmp(&b.metric_name))
        .then(a.scenario.cmp(&b.scenario))
}

fn group_order(a: &ResultRow, b: &ResultRow) -> Ordering {
    a.scenario
        .cmp(&b.scenario)
        .then(a.scheme.cmp(&b.scheme))
        .then(cmp_sweep(a.sweep_value, b.sweep_value))
        .then(a.metric_name.cmp(&b.metric_name))
}

/// One (scenario, scheme, sweep point, metric) group of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricGroup {
    pub scenario: String,
    pub scheme: String,
    pub sweep_value: Option<f64>,
    pub metric_name: String,
    pub distribution: EmpiricalDistribution,
}

pub fn group_rows(rows: &[ResultRow]) -> Result<Vec<MetricGroup>> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| group_order(a, b));
    sorted
        .chunk_by(|a, b| group_order(a, b) == Ordering::Equal)
        .map(|chunk| {
            let first = chunk[0];
            Ok(MetricGroup {
                scenario: first.scenario.clone(),
                scheme: first.scheme.clone(),
                sweep_value: first.sweep_value,
                metric_name: first.metric_name.clone(),
                distribution: EmpiricalDistribution::new(chunk.iter().map(|r| r.metric_value).collect())?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub scheme: String,
    pub sweep_value: Option<f64>,
    pub metric_name: String,
    pub count: usize,
    pub mean: f64,
    pub p5: f64,
    pub p50: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// Smallest swept HAPS element count whose aerial mean min rate beats the
    /// terrestrial mean. Only meaningful for cs2 rows.
    pub crossover: Option<f64>,
    pub has_sweep: bool,
}

pub fn summarize(rows: &[ResultRow]) -> Result<Summary> {
    let groups = group_rows(rows)?;
    let rows: Vec<SummaryRow> = groups
        .iter()
        .map(|g| {
            Ok(SummaryRow {
                scenario: g.scenario.clone(),
                scheme: g.scheme.clone(),
                sweep_value: g.sweep_value,
                metric_name: g.metric_name.clone(),
                count: g.distribution.len(),
                mean: g.distribution.mean(),
                p5: g.distribution.percentile(5.0)?,
                p50: g.distribution.percentile(50.0)?,
            })
        })
        .collect::<Result<_>>()?;
    let aerial = Cs2Scheme::Aerial.as_str();
    let terrestrial = Cs2Scheme::Terrestrial.as_str();
    let baseline = rows
        .iter()
        .find(|r| r.scheme == terrestrial && r.metric_name == MIN_RATE)
        .map(|r| r.mean);
    let sweep: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.scheme == aerial && r.metric_name == MIN_RATE && r.sweep_value.is_some())
        .collect();
    let crossover = baseline.and_then(|b| sweep.iter().find(|r| r.mean > b).and_then(|r| r.sweep_value));
    let has_sweep = baseline.is_some() && !sweep.is_empty();
    Ok(Summary {
        rows,
        crossover,
        has_sweep,
    })
}

fn trials_csv(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| row_order(a, b));
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRIALS_HEADER);
    out.push('\n');
    for r in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scenario,
            r.scheme,
            r.topology_id,
            r.realization_id,
            format_opt(r.sweep_value),
            r.metric_name,
            format_number(r.metric_value)
        );
    }
    out
}

fn summary_csv(summary: &Summary, trials: usize) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in &summary.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.scheme,
            format_opt(r.sweep_value),
            r.metric_name,
            r.count,
            format_number(r.mean),
            format_number(r.p5),
            format_number(r.p50)
        );
    }
    if summary.has_sweep {
        // an empty value means no swept point beats the baseline
        let _ = writeln!(
            out,
            "cs2,{}_vs_{},{},{CROSSOVER},{trials},,,",
            Cs2Scheme::Aerial.as_str(),
            Cs2Scheme::Terrestrial.as_str(),
            format_opt(summary.crossover)
        );
    }
    out
}

fn cdf_csv(groups: &[MetricGroup]) -> String {
    let mut out = String::new();
    out.push_str(CDF_HEADER);
    out.push('\n');
    for g in groups
        .iter()
        .filter(|g| g.metric_name == SUM_RATE || g.metric_name == MIN_RATE)
    {
        let n = g.distribution.len() as f64;
        for (i, &x) in g.distribution.samples().iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                g.scenario,
                g.scheme,
                format_opt(g.sweep_value),
                g.metric_name,
                format_number(x),
                format_number((i + 1) as f64 / n)
            );
        }
    }
    out
}

/// Paths written by [`write_outputs`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub trials: PathBuf,
    pub summary: PathBuf,
    pub cdf: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes trials.csv, summary.csv and cdf.csv into `dir`. Files are staged
/// under temporary names and renamed at the end; on failure nothing from this
/// call is left behind.
pub fn write_outputs(rows: &[ResultRow], dir: &Path) -> Result<(OutputFiles, Summary)> {
    if rows.is_empty() {
        return Err(Error::invalid("result rows", "nothing to write"));
    }
    for r in rows {
        r.validate()?;
    }
    let summary = summarize(rows)?;
    let trials = rows
        .iter()
        .map(|r| (r.topology_id, r.realization_id))
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let contents = [
        (TRIALS_FILE, trials_csv(rows)),
        (SUMMARY_FILE, summary_csv(&summary, trials)),
        (CDF_FILE, cdf_csv(&group_rows(rows)?)),
    ];

    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged: Vec<PathBuf> = Vec::new();
    let mut placed: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for (name, text) in &contents {
            let tmp = dir.join(format!(".{name}.partial"));
            staged.push(tmp.clone());
            fs::write(&tmp, text).map_err(io_err(&tmp))?;
        }
        for ((name, _), tmp) in contents.iter().zip(&staged) {
            let target = dir.join(name);
            fs::rename(tmp, &target).map_err(io_err(&target))?;
            placed.push(target);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in staged.iter().chain(&placed) {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok((
        OutputFiles {
            trials: dir.join(TRIALS_FILE),
            summary: dir.join(SUMMARY_FILE),
            cdf: dir.join(CDF_FILE),
        },
        summary,
    ))
}

pub fn cs1_rows(trials: &[Cs1Trial]) -> Vec<ResultRow> {
    let mut rows = Vec::with_capacity(trials.len() * 15);
    for t in trials {
        for r in &t.results {
            let row = |metric: &str, value: f64| ResultRow {
                scenario: "cs1".to_string(),
                scheme: r.scheme.as_str().to_string(),
                topology_id: t.id.topology,
                realization_id: t.id.realization,
                sweep_value: None,
                metric_name: metric.to_string(),
                metric_value: value,
            };
            rows.push(row(SUM_RATE, r.sum_rate));
            for (name, &v) in CS1_USER_METRICS.iter().zip(&r.per_user_rates) {
                rows.push(row(name, v));
            }
        }
    }
    rows
}

pub fn cs2_rows(trials: &[Cs2Trial]) -> Vec<ResultRow> {
    let mut rows = Vec::with_capacity(trials.len() * 8);
    for t in trials {
        for r in t.aerial.iter().chain(std::iter::once(&t.terrestrial)) {
            rows.push(ResultRow {
                scenario: "cs2".to_string(),
                scheme: r.scheme.as_str().to_string(),
                topology_id: t.id.topology,
                realization_id: t.id.realization,
                sweep_value: r.haps_elements.map(|n| n as f64),
                metric_name: MIN_RATE.to_string(),
                metric_value: r.min_rate,
            });
        }
    }
    rows
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub files: OutputFiles,
    pub summary: Summary,
}

/// Runs the configured experiment and writes its CSV files into
/// `cfg.output_dir`. `threads` caps the worker pool and never changes results.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunReport> {
    cfg.validate()?;
    let rows = match &cfg.scenario {
        ScenarioConfig::Cs1(c) => {
            log::info!("cs1: {} trials", cfg.plan.trials());
            cs1_rows(&run_cs1(c, &cfg.plan, threads)?)
        }
        ScenarioConfig::Cs2(c) => {
            log::info!(
                "cs2: {} trials x {} sweep points",
                cfg.plan.trials(),
                c.haps_element_sweep.len()
            );
            cs2_rows(&run_cs2(c, &cfg.plan, threads)?)
        }
    };
    let (files, summary) = write_outputs(&rows, &cfg.output_dir)?;
    Ok(RunReport { files, summary })
}

/// Fixed-width text table of the summary, rates in Mb/s.
pub fn render_summary_table(summary: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>8} {:<16} {:>7} {:>12} {:>12} {:>12}",
        "scheme", "sweep", "metric", "count", "mean[Mb/s]", "p5[Mb/s]", "p50[Mb/s]"
    );
    for r in &summary.rows {
        let _ = writeln!(
            out,
            "{:<10} {:>8} {:<16} {:>7} {:>12.4} {:>12.4} {:>12.4}",
            r.scheme,
            format_opt(r.sweep_value),
            r.metric_name,
            r.count,
            r.mean / 1e6,
            r.p5 / 1e6,
            r.p50 / 1e6
        );
    }
    if summary.has_sweep {
        match summary.crossover {
            Some(n) => {
                let _ = writeln!(out, "crossover: aerial beats terrestrial from N = {}", format_number(n));
            }
            None => {
                let _ = writeln!(out, "crossover: none within the sweep");
            }
        }
    }
    out
}

pub fn read_trials(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != TRIALS_HEADER {
        return Err(Error::invalid("trials file", format!("unexpected header {header:?}")));
    }
    let rows = reader
        .deserialize::<ResultRow>()
        .map(|r| r.map_err(|e| csv_err(path, e)))
        .collect::<Result<Vec<_>>>()?;
    for r in &rows {
        r.validate()?;
    }
    Ok(rows)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(scheme: &str, t: usize, r: usize, v: f64) -> ResultRow {
        ResultRow {
            scenario: "cs1".into(),
            scheme: scheme.into(),
            topology_id: t,
            realization_id: r,
            sweep_value: None,
            metric_name: SUM_RATE.into(),
            metric_value: v,
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(0.123456789123), "0.123456789");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(4096.0), "4096");
        assert_eq!(format_number(-174.0), "-174");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(123456789.4), "123456789");
        assert_eq!(format_number(2512345678.9), "2.51234568e9");
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(0.00012345678912), "0.000123456789");
        assert_eq!(format_number(999999999.7), "1e9");
    }

    proptest! {
        #[test]
        fn formatting_keeps_nine_digits(x in -1e12f64..1e12) {
            let back: f64 = format_number(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 1e-8 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn one_row_gives_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let (files, _) = write_outputs(&[row("no_haps", 0, 0, 1.0)], dir.path()).unwrap();
        let text = fs::read_to_string(files.trials).unwrap();
        assert_eq!(text, format!("{TRIALS_HEADER}\ncs1,no_haps,0,0,,sum_rate_bps,1\n"));
    }

    #[test]
    fn rows_sorted_regardless_of_input_order() {
        let mut rows = Vec::new();
        for s in ["selfish", "joint_haps", "no_haps"] {
            for t in 0..3 {
                for r in 0..4 {
                    rows.push(row(s, t, r, (t * 10 + r) as f64));
                }
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let (files, _) = write_outputs(&rows, dir.path()).unwrap();
        let expected = fs::read_to_string(&files.trials).unwrap();
        rows.reverse();
        rows.swap(3, 17);
        let dir2 = tempfile::tempdir().unwrap();
        let (files2, _) = write_outputs(&rows, dir2.path()).unwrap();
        assert_eq!(fs::read_to_string(files2.trials).unwrap(), expected);
        let lines: Vec<&str> = expected.lines().skip(1).collect();
        assert!(lines[0].starts_with("cs1,joint_haps,0,0,"));
        assert!(lines[1].starts_with("cs1,joint_haps,0,1,"));
        assert!(lines.last().unwrap().starts_with("cs1,selfish,2,3,"));
    }

    #[test]
    fn empty_and_non_finite_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_outputs(&[], dir.path()).is_err());
        assert!(write_outputs(&[row("a", 0, 0, f64::NAN)], dir.path()).is_err());
        assert!(write_outputs(&[row("a,b", 0, 0, 1.0)], dir.path()).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn failed_write_leaves_no_files() {
        let dir = tempfile::tempdir().unwrap();
        // a directory squatting on the target name makes the rename fail
        fs::create_dir(dir.path().join(CDF_FILE)).unwrap();
        fs::write(dir.path().join(CDF_FILE).join("x"), "x").unwrap();
        assert!(write_outputs(&[row("a", 0, 0, 1.0)], dir.path()).is_err());
        let left: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(left, vec![std::ffi::OsString::from(CDF_FILE)]);
    }

    #[test]
    fn summary_and_cdf_contents() {
        let rows: Vec<ResultRow> = (1..=20).map(|i| row("no_haps", 0, i, i as f64)).collect();
        let dir = tempfile::tempdir().unwrap();
        let (files, summary) = write_outputs(&rows, dir.path()).unwrap();
        assert_eq!(summary.rows.len(), 1);
        let s = &summary.rows[0];
        assert_eq!((s.count, s.mean, s.p5, s.p50), (20, 10.5, 1.0, 10.0));
        assert!(!summary.has_sweep);
        let summary_text = fs::read_to_string(files.summary).unwrap();
        assert_eq!(
            summary_text,
            format!("{SUMMARY_HEADER}\ncs1,no_haps,,sum_rate_bps,20,10.5,1,10\n")
        );
        let cdf = fs::read_to_string(files.cdf).unwrap();
        let lines: Vec<&str> = cdf.lines().collect();
        assert_eq!(lines.len(), 21);
        assert_eq!(lines[1], "cs1,no_haps,,sum_rate_bps,1,0.05");
        assert_eq!(lines[20], "cs1,no_haps,,sum_rate_bps,20,1");
    }

    #[test]
    fn crossover_from_rows() {
        let mut rows = Vec::new();
        for (n, v) in [(4.0, 1.0), (16.0, 2.0), (64.0, 3.0)] {
            rows.push(ResultRow {
                scenario: "cs2".into(),
                scheme: "aerial".into(),
                topology_id: 0,
                realization_id: 0,
                sweep_value: Some(n),
                metric_name: MIN_RATE.into(),
                metric_value: v,
            });
        }
        rows.push(ResultRow {
            scenario: "cs2".into(),
            scheme: "terrestrial".into(),
            topology_id: 0,
            realization_id: 0,
            sweep_value: None,
            metric_name: MIN_RATE.into(),
            metric_value: 1.5,
        });
        let dir = tempfile::tempdir().unwrap();
        let (files, summary) = write_outputs(&rows, dir.path()).unwrap();
        assert_eq!(summary.crossover, Some(16.0));
        let text = fs::read_to_string(files.summary).unwrap();
        assert!(
            text.ends_with("cs2,aerial_vs_terrestrial,16,crossover_haps_elements,1,,,\n"),
            "{text}"
        );
    }

    #[test]
    fn trials_file_reads_back() {
        let rows = vec![row("no_haps", 0, 0, 0.25), row("selfish", 1, 2, 3.0)];
        let dir = tempfile::tempdir().unwrap();
        let (files, _) = write_outputs(&rows, dir.path()).unwrap();
        assert_eq!(read_trials(&files.trials).unwrap(), rows);
    }
}
