//! Declarative experiment configuration, the cross-validation runner and the
//! capacity sweep, with their machine-readable result records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, ClassifierConfig, Execution, TrainingSet};
use crate::data::{self, Dataset, SplitKind, XorSpec};
use crate::encoding::{Encoding, MinMaxScaler};
use crate::labels::{self, LabelSet};
use crate::noise::{self, CapacityEstimate};
use crate::{seed, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum DatasetSpec {
    Xor(XorSpec),
    Csv {
        path: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
        #[serde(default)]
        feature_columns: Option<Vec<String>>,
        /// Rows sampled per class before splitting.
        #[serde(default)]
        balance_per_class: Option<usize>,
        #[serde(default)]
        balance_seed: u64,
    },
}

fn default_label_column() -> String {
    "label".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingSpec {
    #[serde(default = "default_encoding")]
    pub kind: Encoding,
    /// Min-max target range for angle encoding, fitted per training fold.
    #[serde(default = "default_scale_range")]
    pub scale_range: [f64; 2],
}

fn default_encoding() -> Encoding {
    Encoding::Amplitude
}

fn default_scale_range() -> [f64; 2] {
    [0.0, std::f64::consts::FRAC_PI_2]
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            kind: default_encoding(),
            scale_range: default_scale_range(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
    Classical,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "sampled" => Ok(Mode::Sampled),
            "classical" => Ok(Mode::Classical),
            _ => Err(Error::invalid(format!(
                "unknown mode '{s}' (expected exact, sampled or classical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionSpec {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Depolarizing probabilities to sweep; empty means a single run at 0.
    #[serde(default)]
    pub noise: Vec<f64>,
}

fn default_mode() -> Mode {
    Mode::Exact
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

impl Default for ExecutionSpec {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            shots: default_shots(),
            noise: Vec::new(),
        }
    }
}

impl ExecutionSpec {
    pub fn execution(&self) -> Execution {
        match self.mode {
            Mode::Exact => Execution::ExactCircuit,
            Mode::Sampled => Execution::SampledCircuit { shots: self.shots },
            Mode::Classical => Execution::Classical,
        }
    }

    pub fn noise_levels(&self) -> Vec<f64> {
        if self.noise.is_empty() {
            vec![0.0]
        } else {
            self.noise.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    /// Seed of the label optimizer (used for more than four classes).
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub encoding: EncodingSpec,
    #[serde(default)]
    pub execution: ExecutionSpec,
    #[serde(default = "default_splits")]
    pub splits: SplitKind,
    #[serde(default)]
    pub labels: LabelSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_splits() -> SplitKind {
    SplitKind::LeaveOneOut
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            dataset,
            encoding: EncodingSpec::default(),
            execution: ExecutionSpec::default(),
            splits: default_splits(),
            labels: LabelSpec::default(),
            seed: 0,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &p in &self.execution.noise {
            noise::check_probability(p)?;
        }
        if self.execution.mode == Mode::Sampled && self.execution.shots == 0 {
            return Err(Error::invalid("sampled mode needs shots >= 1"));
        }
        let [lo, hi] = self.encoding.scale_range;
        if hi.is_nan() || lo.is_nan() || hi <= lo {
            return Err(Error::invalid(format!("scale_range [{lo}, {hi}] is empty")));
        }
        if self.encoding.kind == Encoding::Angle && self.execution.mode != Mode::Classical {
            return Err(Error::invalid("angle encoding runs only in classical mode"));
        }
        if let DatasetSpec::Csv { path, .. } = &self.dataset {
            if !path.is_file() {
                return Err(Error::invalid(format!(
                    "dataset file {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// Makes relative dataset paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let DatasetSpec::Csv { path, .. } = &mut self.dataset {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// Loads (and balances) the configured dataset.
pub fn load_dataset(spec: &DatasetSpec) -> Result<(Dataset, Option<f64>)> {
    match spec {
        DatasetSpec::Xor(x) => {
            let g = data::generate_xor(x)?;
            Ok((g.dataset, Some(g.min_separation)))
        }
        DatasetSpec::Csv {
            path,
            label_column,
            feature_columns,
            balance_per_class,
            balance_seed,
        } => {
            let ds = data::load_csv(path, feature_columns.as_deref(), label_column)?;
            let ds = match balance_per_class {
                Some(n) => data::balance(&ds, *n, *balance_seed)?,
                None => ds,
            };
            Ok((ds, None))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub p: f64,
    pub fold: usize,
    pub index: usize,
    pub true_class: usize,
    pub predicted_class: usize,
    pub degenerate: bool,
    pub y_pred: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alphas: Option<Vec<f64>>,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub p: f64,
    pub total: usize,
    pub correct: usize,
    /// Percent.
    pub accuracy: f64,
    pub mean_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_points: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_separation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub created_unix: u64,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub label_set: LabelSet,
    pub records: Vec<PointRecord>,
    pub aggregates: Vec<Aggregate>,
    /// False when some noise level aborted; see `errors`.
    pub complete: bool,
    pub errors: Vec<String>,
}

/// Per-noise-level accuracy and mean predicted-vector norm from records.
pub fn aggregate(records: &[PointRecord]) -> Vec<Aggregate> {
    let mut by_p: Vec<(f64, Vec<&PointRecord>)> = Vec::new();
    for r in records {
        match by_p.iter_mut().find(|(p, _)| p.to_bits() == r.p.to_bits()) {
            Some((_, v)) => v.push(r),
            None => by_p.push((r.p, vec![r])),
        }
    }
    by_p.into_iter()
        .map(|(p, rs)| {
            let total = rs.len();
            let correct = rs
                .iter()
                .filter(|r| r.predicted_class == r.true_class)
                .count();
            Aggregate {
                p,
                total,
                correct,
                accuracy: 100.0 * correct as f64 / total as f64,
                mean_norm: rs.iter().map(|r| r.norm).sum::<f64>() / total as f64,
            }
        })
        .collect()
}

fn evaluate_level(
    ds: &Dataset,
    folds: &[data::Fold],
    labels: &LabelSet,
    config: &ExperimentConfig,
    level: usize,
    p: f64,
) -> Result<Vec<PointRecord>> {
    let execution = config.execution.execution();
    let per_fold: Vec<Result<Vec<PointRecord>>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let mut train_rows: Vec<Vec<f64>> =
                fold.train.iter().map(|&i| ds.features[i].clone()).collect();
            let mut test_rows: Vec<Vec<f64>> =
                fold.test.iter().map(|&i| ds.features[i].clone()).collect();
            if config.encoding.kind == Encoding::Angle {
                let [lo, hi] = config.encoding.scale_range;
                let scaler = MinMaxScaler::fit(&train_rows, lo, hi)?;
                train_rows = scaler.transform(&train_rows)?;
                test_rows = scaler.transform(&test_rows)?;
            }
            let train = TrainingSet::uniform(
                train_rows,
                fold.train.iter().map(|&i| ds.labels[i]).collect(),
            )?;
            fold.test
                .par_iter()
                .zip(test_rows.par_iter())
                .map(|(&index, row)| {
                    let cfg = ClassifierConfig {
                        encoding: config.encoding.kind,
                        execution,
                        noise: (p > 0.0).then_some(p),
                        seed: seed::derive(config.seed, &[level as u64, index as u64]),
                    };
                    let pred = classifier::classify(row, &train, labels, &cfg).map_err(|e| {
                        Error::InvalidState(format!("fold {f}, point {index}: {e}"))
                    })?;
                    Ok(PointRecord {
                        p,
                        fold: f,
                        index,
                        true_class: ds.labels[index],
                        predicted_class: pred.class,
                        degenerate: pred.degenerate,
                        norm: pred.y_pred.norm(),
                        y_pred: pred.y_pred.xyz,
                        alphas: pred.y_pred.alphas,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_fold {
        out.extend(r?);
    }
    out.sort_by_key(|r| (r.fold, r.index));
    Ok(out)
}

/// Runs the full cross-validation loop for every configured noise level.
///
/// Setup failures (bad config, unreadable data) return `Err`. A failure
/// while evaluating one noise level drops that level, records the error and
/// marks the result incomplete.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let (ds, min_separation) = load_dataset(&config.dataset)?;
    let label_set = labels::tammes_placement(ds.n_classes(), config.labels.seed)?;
    let plan = data::make_splits(&ds, config.splits, config.seed)?;

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (level, p) in config.execution.noise_levels().into_iter().enumerate() {
        match evaluate_level(&ds, &plan.folds, &label_set, config, level, p) {
            Ok(r) => records.extend(r),
            Err(e) => errors.push(format!("p = {p}: {e}")),
        }
    }
    let aggregates = aggregate(&records);
    Ok(RunResult {
        schema_version: SCHEMA_VERSION,
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        dataset: DatasetSummary {
            name: ds.name.clone(),
            n_points: ds.len(),
            n_features: ds.n_features(),
            n_classes: ds.n_classes(),
            class_names: ds.class_names.clone(),
            min_separation,
        },
        label_set,
        records,
        aggregates,
        complete: errors.is_empty(),
        errors,
    })
}

/// Accuracy table computed from the point records alone.
pub fn format_table(records: &[PointRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>10}  {:>8}  {:>12}  {:>10}",
        "p", "points", "accuracy (%)", "avg |y|"
    );
    for a in aggregate(records) {
        let _ = writeln!(
            out,
            "{:>10.4}  {:>8}  {:>12.2}  {:>10.4}",
            a.p, a.total, a.accuracy, a.mean_norm
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid(
            "a line fit needs at least two paired points",
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("line fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub r: [f64; 3],
    pub repetitions: u64,
    pub p: f64,
    pub delta_theta: f64,
    pub delta_phi: f64,
    pub n_states: f64,
    pub noisy_n_states: f64,
    pub worst_case_factor: f64,
}

impl CapacityRow {
    fn from_estimate(e: &CapacityEstimate, p: f64) -> Result<Self> {
        Ok(Self {
            r: e.r,
            repetitions: e.repetitions,
            p,
            delta_theta: e.delta_theta,
            delta_phi: e.delta_phi,
            n_states: e.n_states,
            noisy_n_states: e.noisy_n_states.unwrap_or(e.n_states),
            worst_case_factor: noise::worst_case_factor(p)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFit {
    pub p: f64,
    /// Fit of the (noisy) label capacity against the repetition count.
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySweep {
    pub schema_version: u32,
    pub r: [f64; 3],
    pub rows: Vec<CapacityRow>,
    pub fits: Vec<NoiseFit>,
}

/// Label capacity of `r` over the `repetitions` x `noise` grid.
pub fn capacity_sweep(
    r: [f64; 3],
    repetitions: &[u64],
    noise_levels: &[f64],
) -> Result<CapacitySweep> {
    if repetitions.is_empty() {
        return Err(Error::invalid(
            "capacity sweep needs at least one repetition count",
        ));
    }
    let levels = if noise_levels.is_empty() {
        vec![0.0]
    } else {
        noise_levels.to_vec()
    };
    let mut rows = Vec::with_capacity(levels.len() * repetitions.len());
    let mut by_p: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (k, &p) in levels.iter().enumerate() {
        for &reps in repetitions {
            let e = noise::capacity(r, reps, Some(p))?;
            let row = CapacityRow::from_estimate(&e, p)?;
            by_p.entry(k)
                .or_default()
                .push((reps as f64, row.noisy_n_states));
            rows.push(row);
        }
    }
    let fits = if repetitions.len() >= 2 {
        by_p.into_iter()
            .map(|(k, pts)| {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                Ok(NoiseFit {
                    p: levels[k],
                    fit: linear_fit(&xs, &ys)?,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(CapacitySweep {
        schema_version: SCHEMA_VERSION,
        r,
        rows,
        fits,
    })
}

impl CapacitySweep {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record([
            "x",
            "y",
            "z",
            "repetitions",
            "p",
            "delta_theta",
            "delta_phi",
            "n_states",
            "noisy_n_states",
            "worst_case_factor",
        ])
        .map_err(csv_err)?;
        for row in &self.rows {
            w.write_record([
                row.r[0].to_string(),
                row.r[1].to_string(),
                row.r[2].to_string(),
                row.repetitions.to_string(),
                row.p.to_string(),
                row.delta_theta.to_string(),
                row.delta_phi.to_string(),
                row.n_states.to_string(),
                row.noisy_n_states.to_string(),
                row.worst_case_factor.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_config(mode: Mode) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(DatasetSpec::Xor(XorSpec {
            n_classes: 2,
            n_features: 2,
            points_per_class: 8,
            spread: 0.1,
            seed: 3,
        }));
        c.execution.mode = mode;
        c.execution.shots = 512;
        c.execution.noise = vec![0.0, 0.1];
        c
    }

    #[test]
    fn experiment_runs_and_aggregates_match_records() {
        let result = run_experiment(&xor_config(Mode::Exact)).unwrap();
        assert!(result.complete);
        assert_eq!(result.records.len(), 32);
        assert_eq!(result.aggregates, aggregate(&result.records));
        for a in &result.aggregates {
            let correct = result
                .records
                .iter()
                .filter(|r| r.p == a.p && r.predicted_class == r.true_class)
                .count();
            assert_eq!(a.correct, correct);
            assert_eq!(a.accuracy, 100.0 * correct as f64 / a.total as f64);
        }
        let table = format_table(&result.records);
        assert!(table.lines().count() == 3, "{table}");
    }

    #[test]
    fn runs_are_reproducible() {
        for mode in [Mode::Exact, Mode::Sampled, Mode::Classical] {
            let mut a = run_experiment(&xor_config(mode)).unwrap();
            let mut b = run_experiment(&xor_config(mode)).unwrap();
            a.created_unix = 0;
            b.created_unix = 0;
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                serde_json::to_string(&b).unwrap()
            );
        }
    }

    #[test]
    fn empty_noise_list_runs_once_at_zero() {
        let mut c = xor_config(Mode::Classical);
        c.execution.noise.clear();
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.aggregates.len(), 1);
        assert_eq!(r.aggregates[0].p, 0.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = xor_config(Mode::Exact);
        c.execution.noise = vec![1.5];
        assert!(run_experiment(&c).is_err());
        let mut c = xor_config(Mode::Exact);
        c.encoding.kind = Encoding::Angle;
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(DatasetSpec::Csv {
            path: "/no/such/file.csv".into(),
            label_column: "label".into(),
            feature_columns: None,
            balance_per_class: None,
            balance_seed: 0,
        });
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = xor_config(Mode::Sampled);
        let json = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 4.0], &[3.0, 5.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn capacity_sweep_grid_and_fits() {
        let reps = [100, 1000, 10_000, 100_000];
        let s = capacity_sweep([0.6, 0.1, 0.2], &reps, &[0.0, 0.1]).unwrap();
        assert_eq!(s.rows.len(), 8);
        for (a, b) in s.rows[..4].iter().zip(&s.rows[4..]) {
            assert_eq!(a.noisy_n_states, a.n_states);
            assert_eq!(a.n_states, b.n_states);
            assert!(b.noisy_n_states / b.n_states >= b.worst_case_factor);
        }
        assert_eq!(s.fits.len(), 2);
        assert!(s.fits.iter().all(|f| f.fit.r_squared > 0.999));
        assert!(capacity_sweep([0.0, 0.0, 0.5], &reps, &[]).is_err());
    }
}
