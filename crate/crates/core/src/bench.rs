//! SVM versus k-SVM benchmark over synthetic scenarios, plus decision-value
//! grids for boundary plots.
//!
//! Every `(distribution, N, repeat)` cell generates one scenario, splits it
//! 70/30 (stratified), and trains both methods on the identical training
//! split. Rows report mean and standard deviation over repeats.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::{
    generate_scenario, holdout_split, GeometryParams, NoiseDistribution, NoiseParams, ScenarioSpec, TaskGeometry,
};
use crate::error::{ensure, KsvmError, Result};
use crate::evaluation::{
    assign_timestamps, evaluate, windowed_error, DecisionFunction, FittedModel, WindowedErrorSpec,
};
use crate::pipeline::{train_ksvm, KsvmConfig};
use crate::scalar::Scalar;
use crate::seed;
use crate::svm::{train_smo, TrainParams};

type Metric = (&'static str, fn(&BenchRow) -> String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub distributions: Vec<NoiseDistribution>,
    pub repeats: usize,
    pub task: TaskGeometry,
    /// Share of mobile robots in each scenario.
    pub mobile_fraction: f64,
    pub noise: NoiseParams,
    pub geometry: GeometryParams,
    pub test_fraction: f64,
    pub svm: TrainParams<f64>,
    /// k-SVM settings. Its `kmeans.clusters_per_class` is replaced per cell
    /// by `k_per_class`, or by `max(5, N / 20)` when that is unset.
    pub ksvm: KsvmConfig<f64>,
    pub k_per_class: Option<usize>,
    pub window: WindowedErrorSpec,
    /// When false, timing columns are written as zero so that reports are
    /// byte-for-byte reproducible.
    pub record_timings: bool,
    pub seed: u64,
    /// Extra files to write the report to; the format follows the extension.
    pub outputs: Vec<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![100, 200, 300, 400],
            distributions: NoiseDistribution::ALL.to_vec(),
            repeats: 10,
            task: TaskGeometry::Encirclement,
            mobile_fraction: 0.5,
            noise: NoiseParams::default(),
            geometry: GeometryParams::default(),
            test_fraction: 0.3,
            svm: TrainParams::default(),
            ksvm: KsvmConfig::default(),
            k_per_class: None,
            window: WindowedErrorSpec::default(),
            record_timings: true,
            seed: 0,
            outputs: Vec::new(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.sizes.is_empty(), "bench needs at least one size");
        ensure!(
            self.sizes.iter().all(|&n| n >= 4),
            "every bench size must be at least 4"
        );
        ensure!(!self.distributions.is_empty(), "bench needs at least one distribution");
        ensure!(self.repeats >= 1, "repeats must be at least 1");
        ensure!(
            self.mobile_fraction > 0.0 && self.mobile_fraction < 1.0,
            "mobile fraction must lie strictly between 0 and 1"
        );
        self.svm.validate()?;
        self.window.validate()?;
        Ok(())
    }

    /// k-means clusters per class used at size `n`.
    pub fn clusters_for(&self, n: usize) -> usize {
        self.k_per_class.unwrap_or_else(|| (n / 20).max(5))
    }

    pub fn scenario(&self, distribution: NoiseDistribution, n: usize, repeat: usize) -> ScenarioSpec {
        let mobile = ((n as f64 * self.mobile_fraction).round() as usize).clamp(1, n - 1);
        ScenarioSpec {
            total: n,
            mobile,
            distribution,
            task: self.task,
            seed: self.cell_seed(distribution, n, repeat),
            dimension: 2,
            noise: self.noise,
            geometry: self.geometry,
        }
    }

    fn cell_seed(&self, distribution: NoiseDistribution, n: usize, repeat: usize) -> u64 {
        let d = NoiseDistribution::ALL
            .iter()
            .position(|&x| x == distribution)
            .unwrap_or(0);
        seed::derive_seed(self.seed, &[seed::BENCH, d as u64, n as u64, repeat as u64])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub distribution: NoiseDistribution,
    pub n: usize,
    pub method: String,
    pub mean_error: f64,
    pub stddev_error: f64,
    pub mean_train_seconds: f64,
    pub mean_support_vectors: f64,
    /// Mean over windows of the windowed test error (test points stamped in
    /// generation order).
    pub mean_windowed_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

const CSV_HEADER: &str =
    "distribution,n,method,mean_error,stddev_error,mean_train_seconds,mean_support_vectors,mean_windowed_error";

impl BenchReport {
    pub fn row(&self, distribution: NoiseDistribution, n: usize, method: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.distribution == distribution && r.n == n && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.distribution,
                r.n,
                r.method,
                r.mean_error,
                r.stddev_error,
                r.mean_train_seconds,
                r.mean_support_vectors,
                r.mean_windowed_error
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<BenchReport> {
        let source = PathBuf::from("<bench report>");
        let err = |line: usize, message: String| KsvmError::Parse {
            path: source.clone(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err(err(1, "missing bench report header".into())),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(err(i + 1, format!("expected 8 fields, found {}", f.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(i + 1, format!("{s:?} is not a number")))
            };
            rows.push(BenchRow {
                distribution: f[0].parse().map_err(|e: KsvmError| err(i + 1, e.to_string()))?,
                n: f[1]
                    .parse()
                    .map_err(|_| err(i + 1, format!("{:?} is not a size", f[1])))?,
                method: f[2].to_string(),
                mean_error: num(f[3])?,
                stddev_error: num(f[4])?,
                mean_train_seconds: num(f[5])?,
                mean_support_vectors: num(f[6])?,
                mean_windowed_error: num(f[7])?,
            });
        }
        Ok(BenchReport { rows })
    }

    /// One table per distribution: sizes across, methods down.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let mut distributions: Vec<NoiseDistribution> = Vec::new();
        for r in &self.rows {
            if !distributions.contains(&r.distribution) {
                distributions.push(r.distribution);
            }
        }
        for d in distributions {
            let rows: Vec<&BenchRow> = self.rows.iter().filter(|r| r.distribution == d).collect();
            let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
            sizes.dedup();
            let _ = writeln!(out, "### {} distribution\n", capitalize(d.name()));
            let _ = write!(out, "| |");
            for n in &sizes {
                let _ = write!(out, " N = {n} |");
            }
            let _ = write!(out, "\n|---|");
            for _ in &sizes {
                let _ = write!(out, "---|");
            }
            out.push('\n');
            let metrics: [Metric; 3] = [
                ("error", |r| format!("{:.4} ± {:.4}", r.mean_error, r.stddev_error)),
                ("train s", |r| format!("{:.4}", r.mean_train_seconds)),
                ("SVs", |r| format!("{:.1}", r.mean_support_vectors)),
            ];
            for (metric, render) in metrics {
                for (method, title) in [("svm", "SVM"), ("ksvm", "k-SVM")] {
                    let _ = write!(out, "| {title} {metric} |");
                    for &n in &sizes {
                        let cell = rows
                            .iter()
                            .find(|r| r.n == n && r.method == method)
                            .map_or_else(|| "–".to_string(), |r| render(r));
                        let _ = write!(out, " {cell} |");
                    }
                    out.push('\n');
                }
            }
            out.push('\n');
        }
        out
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
        .unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Result<ReportFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(ReportFormat::Csv),
            Some("md") | Some("markdown") => Ok(ReportFormat::Markdown),
            _ => Err(KsvmError::precondition(format!(
                "cannot infer report format from {} (use .csv or .md)",
                path.display()
            ))),
        }
    }
}

/// Writes `report`; an empty report is an error and leaves no file behind.
pub fn emit_report(report: &BenchReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    ensure!(!report.rows.is_empty(), "refusing to write an empty bench report");
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Markdown => report.to_markdown(),
    };
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| KsvmError::io(path, e))
}

struct Sample {
    error: f64,
    seconds: f64,
    support: usize,
    windowed: f64,
}

fn measure(
    model: &FittedModel<f64>,
    seconds: f64,
    test: &crate::datagen::Dataset<f64>,
    window: &WindowedErrorSpec,
) -> Result<Sample> {
    let error = evaluate(model, test)?.error().unwrap_or(0.0);
    let stream = assign_timestamps(test, window.horizon);
    let windows = windowed_error(&stream, model, window)?;
    let windowed = windows.iter().map(|w| w.error).sum::<f64>() / windows.len().max(1) as f64;
    Ok(Sample {
        error,
        seconds,
        support: model.n_support(),
        windowed,
    })
}

fn summarize(distribution: NoiseDistribution, n: usize, method: &str, samples: &[Sample], timings: bool) -> BenchRow {
    let count = samples.len() as f64;
    let mean = |f: &dyn Fn(&Sample) -> f64| samples.iter().map(f).sum::<f64>() / count;
    let mean_error = mean(&|s| s.error);
    let stddev_error = if samples.len() > 1 {
        (samples.iter().map(|s| (s.error - mean_error).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    BenchRow {
        distribution,
        n,
        method: method.to_string(),
        mean_error,
        stddev_error,
        mean_train_seconds: if timings { mean(&|s| s.seconds) } else { 0.0 },
        mean_support_vectors: mean(&|s| s.support as f64),
        mean_windowed_error: mean(&|s| s.windowed),
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut rows = Vec::new();
    for &distribution in &config.distributions {
        for &n in &config.sizes {
            let mut svm = Vec::with_capacity(config.repeats);
            let mut ksvm = Vec::with_capacity(config.repeats);
            for repeat in 0..config.repeats {
                let spec = config.scenario(distribution, n, repeat);
                let data = generate_scenario::<f64>(&spec)?;
                let (train, test) = holdout_split(&data, config.test_fraction, spec.seed)?;

                let started = Instant::now();
                let plain = FittedModel::Svm(train_smo(&train, &config.svm)?);
                svm.push(measure(&plain, started.elapsed().as_secs_f64(), &test, &config.window)?);

                let mut kcfg = config.ksvm.clone();
                kcfg.kmeans.clusters_per_class = config.clusters_for(n);
                kcfg.kmeans.seed = spec.seed;
                let started = Instant::now();
                let reduced = FittedModel::Ksvm(train_ksvm(&train, &kcfg)?);
                ksvm.push(measure(
                    &reduced,
                    started.elapsed().as_secs_f64(),
                    &test,
                    &config.window,
                )?);
            }
            rows.push(summarize(distribution, n, "svm", &svm, config.record_timings));
            rows.push(summarize(distribution, n, "ksvm", &ksvm, config.record_timings));
        }
    }
    Ok(BenchReport { rows })
}

/// Decision values on a `resolution x resolution` lattice spanning both
/// ranges, endpoints included. `values[i][j]` is taken at
/// `(x_coord(i), y_coord(j))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundaryGrid<T: Scalar> {
    pub x_range: (T, T),
    pub y_range: (T, T),
    pub resolution: usize,
    pub values: Vec<Vec<T>>,
}

fn lattice<T: Scalar>(range: (T, T), resolution: usize, i: usize) -> T {
    if i + 1 == resolution {
        return range.1;
    }
    let t = T::lit(i as f64) / T::lit((resolution - 1) as f64);
    range.0 + (range.1 - range.0) * t
}

impl<T: Scalar> BoundaryGrid<T> {
    pub fn x_coord(&self, i: usize) -> T {
        lattice(self.x_range, self.resolution, i)
    }

    pub fn y_coord(&self, j: usize) -> T {
        lattice(self.y_range, self.resolution, j)
    }

    /// Long-form CSV: `i,j,x,y,decision`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,x,y,decision\n");
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{i},{j},{},{},{}", self.x_coord(i), self.y_coord(j), v);
            }
        }
        out
    }
}

pub fn boundary_grid<T: Scalar, M: DecisionFunction<T> + ?Sized>(
    model: &M,
    x_range: (T, T),
    y_range: (T, T),
    resolution: usize,
) -> Result<BoundaryGrid<T>> {
    ensure!(
        model.dimension() == 2,
        "boundary grids need a two-dimensional model, got dimension {}",
        model.dimension()
    );
    ensure!(resolution >= 2, "resolution must be at least 2");
    for (name, (a, b)) in [("x", x_range), ("y", y_range)] {
        ensure!(
            a.is_finite() && b.is_finite() && a < b,
            "{name} range must be a finite interval with start < end"
        );
    }
    let mut grid = BoundaryGrid {
        x_range,
        y_range,
        resolution,
        values: Vec::with_capacity(resolution),
    };
    for i in 0..resolution {
        let x = grid.x_coord(i);
        let row = (0..resolution)
            .map(|j| model.decision_value(&[x, grid.y_coord(j)]))
            .collect::<Result<Vec<T>>>()?;
        grid.values.push(row);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> BenchConfig {
        BenchConfig {
            sizes: vec![100],
            distributions: vec![NoiseDistribution::Normal],
            repeats: 2,
            record_timings: false,
            ..Default::default()
        }
    }

    #[test]
    fn one_cell_two_rows() {
        let report = run_bench(&small_config()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].method, "svm");
        assert_eq!(report.rows[1].method, "ksvm");
        assert!(report.rows[1].mean_support_vectors <= 10.0);
        let md = report.to_markdown();
        assert_eq!(md.matches("###").count(), 1);
        assert!(md.contains("N = 100"));
    }

    #[test]
    fn automatic_k() {
        let c = BenchConfig::default();
        assert_eq!(c.clusters_for(100), 5);
        assert_eq!(c.clusters_for(400), 20);
        assert_eq!(
            BenchConfig {
                k_per_class: Some(3),
                ..c
            }
            .clusters_for(400),
            3
        );
    }

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        assert!(emit_report(&BenchReport::default(), ReportFormat::Csv, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            ReportFormat::from_path(Path::new("a.md")).unwrap(),
            ReportFormat::Markdown
        );
        assert_eq!(ReportFormat::from_path(Path::new("a.csv")).unwrap(), ReportFormat::Csv);
        assert!(ReportFormat::from_path(Path::new("a.txt")).is_err());
    }
}
