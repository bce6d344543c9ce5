//! Datasets, the XOR generator, CSV ingestion, balancing and CV splits.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::packing::{self, PackingOptions};
use crate::{seed, Error, Result};

/// Feature matrix with integer class labels in `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Original label text per class index.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            feature_names,
            features,
            labels,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::data(format!("dataset '{}' has no rows", self.name)));
        }
        if self.labels.len() != self.features.len() {
            return Err(Error::data(format!(
                "{} feature rows but {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        let dim = self.feature_names.len();
        if dim == 0 {
            return Err(Error::data("dataset has no feature columns"));
        }
        for (i, row) in self.features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::data(format!(
                    "row {i} has {} features, expected {dim}",
                    row.len()
                )));
            }
            if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::data(format!(
                    "row {i}, column '{}' is not finite",
                    self.feature_names[k]
                )));
            }
        }
        let mut counts = vec![0usize; self.n_classes()];
        for &y in &self.labels {
            match counts.get_mut(y) {
                Some(c) => *c += 1,
                None => {
                    return Err(Error::data(format!(
                        "label {y} outside 0..{}",
                        self.n_classes()
                    )))
                }
            }
        }
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(Error::data(format!(
                "class {} has no rows",
                self.class_names[c]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        self.labels.iter().for_each(|&y| counts[y] += 1);
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Writes the dataset as CSV with a trailing `label` column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for (row, &y) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.class_names[y].clone());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Parameters of the XOR-family generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XorSpec {
    pub n_classes: usize,
    pub n_features: usize,
    pub points_per_class: usize,
    /// Standard deviation of the angular perturbation, radians.
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default)]
    pub seed: u64,
}

pub const DEFAULT_SPREAD: f64 = 0.2;

fn default_spread() -> f64 {
    DEFAULT_SPREAD
}

#[derive(Debug, Clone, PartialEq)]
pub struct XorDataset {
    pub dataset: Dataset,
    /// Unit direction of each class; its points sit around `+u` and `-u`.
    pub directions: Vec<Vec<f64>>,
    /// Smallest angle between two class lines, radians.
    pub min_separation: f64,
}

/// Generates an XOR-style dataset: class `c` occupies the antipodal pair
/// `+u_c`, `-u_c` on the unit sphere, with the class lines spread apart by
/// the max-min packing optimizer. Points alternate between the two poles and
/// are tilted by a Gaussian angle of scale `spread` in a uniformly random
/// tangent direction.
pub fn generate_xor(spec: &XorSpec) -> Result<XorDataset> {
    let XorSpec {
        n_classes,
        n_features,
        points_per_class,
        spread,
        seed: base,
    } = *spec;
    if n_classes < 2 {
        return Err(Error::Infeasible(
            "XOR data needs at least two classes".into(),
        ));
    }
    if points_per_class == 0 {
        return Err(Error::Infeasible(
            "points_per_class must be positive".into(),
        ));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::Infeasible(format!(
            "spread {spread} must be a finite non-negative angle"
        )));
    }
    if n_features < 2 {
        return Err(Error::Infeasible(format!(
            "{n_features} feature(s) admit a single line through the origin; \
             {n_classes} antipodal class pairs need at least 2 features"
        )));
    }
    let mut rng = seed::rng(base, &[0x786f72, n_classes as u64, n_features as u64]);
    let directions = packing::pack(
        n_classes,
        n_features,
        true,
        &PackingOptions::default(),
        &mut rng,
    );
    let min_separation = packing::min_pairwise_angle(&directions, true);
    if min_separation < 3.0 * spread {
        return Err(Error::Infeasible(format!(
            "{n_classes} class lines in {n_features} dimensions are at best {:.1} degrees apart, \
             less than three times the spread ({:.1} degrees); clusters would overlap",
            min_separation.to_degrees(),
            spread.to_degrees()
        )));
    }

    let mut features = Vec::with_capacity(n_classes * points_per_class);
    let mut labels = Vec::with_capacity(n_classes * points_per_class);
    for (c, u) in directions.iter().enumerate() {
        for k in 0..points_per_class {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let pole: Vec<f64> = u.iter().map(|v| sign * v).collect();
            features.push(tilt(&pole, spread, &mut rng));
            labels.push(c);
        }
    }
    let feature_names = (0..n_features).map(|k| format!("x{k}")).collect();
    let class_names = (0..n_classes).map(|c| c.to_string()).collect();
    let dataset = Dataset::new(
        format!("xor-{n_classes}"),
        feature_names,
        features,
        labels,
        class_names,
    )?;
    Ok(XorDataset {
        dataset,
        directions,
        min_separation,
    })
}

/// Rotates unit `u` by a `N(0, spread^2)` angle toward a random tangent.
fn tilt<R: Rng + ?Sized>(u: &[f64], spread: f64, rng: &mut R) -> Vec<f64> {
    let angle: f64 = spread * rng.sample::<f64, _>(StandardNormal);
    let mut t = packing::random_unit(u.len(), rng);
    let along: f64 = t.iter().zip(u).map(|(a, b)| a * b).sum();
    t.iter_mut().zip(u).for_each(|(a, b)| *a -= along * b);
    let tn = t.iter().map(|a| a * a).sum::<f64>().sqrt();
    if tn < 1e-12 || angle == 0.0 {
        return u.to_vec();
    }
    let (s, c) = angle.sin_cos();
    u.iter().zip(&t).map(|(a, b)| c * a + s * b / tn).collect()
}

/// Reads a headed CSV. `feature_columns = None` takes every column except the
/// label column. Integer labels are ranked by value; any other label text is
/// numbered in order of first appearance.
pub fn load_csv(
    path: &Path,
    feature_columns: Option<&[String]>,
    label_column: &str,
) -> Result<Dataset> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("{}: no column named '{name}'", path.display())))
    };
    let label_idx = find(label_column)?;
    let feature_names: Vec<String> = match feature_columns {
        Some(cols) => cols.to_vec(),
        None => header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let feature_idx = feature_names
        .iter()
        .map(|n| find(n))
        .collect::<Result<Vec<_>>>()?;

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = row + 2;
        let values = feature_idx
            .iter()
            .zip(&feature_names)
            .map(|(&i, name)| {
                let cell = record.get(i).unwrap_or("").trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::data(format!(
                            "{}: line {line}, column '{name}': '{cell}' is not a finite number",
                            path.display()
                        ))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(values);
        let label = record.get(label_idx).unwrap_or("").trim().to_string();
        if label.is_empty() {
            return Err(Error::data(format!(
                "{}: line {line}: empty label",
                path.display()
            )));
        }
        raw_labels.push(label);
    }
    if features.is_empty() {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }

    let (labels, class_names) = index_labels(&raw_labels);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, feature_names, features, labels, class_names)
}

fn index_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let ints: Option<Vec<i64>> = raw.iter().map(|s| s.parse().ok()).collect();
    let mut names: Vec<String> = Vec::new();
    let mut lookup: HashMap<&str, usize> = HashMap::new();
    if let Some(ints) = ints {
        let mut distinct = ints.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let labels = ints
            .iter()
            .map(|v| distinct.binary_search(v).expect("value is present"))
            .collect();
        return (labels, distinct.iter().map(i64::to_string).collect());
    }
    let labels = raw
        .iter()
        .map(|s| {
            *lookup.entry(s.as_str()).or_insert_with(|| {
                names.push(s.clone());
                names.len() - 1
            })
        })
        .collect();
    (labels, names)
}

/// Uniformly samples `per_class` rows of every class without replacement.
/// Output is grouped by class, keeping original row order within a class.
pub fn balance(dataset: &Dataset, per_class: usize, seed: u64) -> Result<Dataset> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes()];
    for (i, &y) in dataset.labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut chosen = Vec::with_capacity(per_class * by_class.len());
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() < per_class {
            return Err(Error::data(format!(
                "class '{}' has {} rows, fewer than the {per_class} requested",
                dataset.class_names[c],
                rows.len()
            )));
        }
        let mut rng = seed::rng(seed, &[0x62616c, c as u64]);
        let mut picked: Vec<usize> = index::sample(&mut rng, rows.len(), per_class)
            .into_iter()
            .map(|k| rows[k])
            .collect();
        picked.sort_unstable();
        chosen.extend(picked);
    }
    Ok(dataset.select(&chosen))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SplitKind {
    LeaveOneOut,
    KFold { k: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub folds: Vec<Fold>,
}

/// Cross-validation folds. K-fold is stratified: each class is shuffled and
/// dealt round-robin, continuing the deal across classes so fold sizes
/// differ by at most one.
pub fn make_splits(dataset: &Dataset, kind: SplitKind, seed: u64) -> Result<SplitPlan> {
    let m = dataset.len();
    let complement = |test: &[usize]| -> Vec<usize> {
        let mut mask = vec![true; m];
        test.iter().for_each(|&i| mask[i] = false);
        (0..m).filter(|&i| mask[i]).collect()
    };
    let folds = match kind {
        SplitKind::LeaveOneOut => {
            if m < 2 {
                return Err(Error::invalid("leave-one-out needs at least two rows"));
            }
            (0..m)
                .map(|i| Fold {
                    train: complement(&[i]),
                    test: vec![i],
                })
                .collect()
        }
        SplitKind::KFold { k } => {
            if k < 2 {
                return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
            }
            if k > m {
                return Err(Error::invalid(format!("k = {k} exceeds the {m} rows")));
            }
            let mut rng = seed::rng(seed, &[0x6b666f6c64, k as u64]);
            let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
            let mut dealt = 0usize;
            for c in 0..dataset.n_classes() {
                let mut rows: Vec<usize> = (0..m).filter(|&i| dataset.labels[i] == c).collect();
                rows.shuffle(&mut rng);
                for i in rows {
                    tests[dealt % k].push(i);
                    dealt += 1;
                }
            }
            tests
                .into_iter()
                .map(|mut test| {
                    test.sort_unstable();
                    Fold {
                        train: complement(&test),
                        test,
                    }
                })
                .collect()
        }
    };
    Ok(SplitPlan { kind, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::linear_kernel;
    use proptest::prelude::*;
    use std::io::Write;

    fn xor4(spread: f64) -> XorDataset {
        generate_xor(&XorSpec {
            n_classes: 4,
            n_features: 3,
            points_per_class: 16,
            spread,
            seed: 1,
        })
        .unwrap()
    }

    #[test]
    fn xor_shape_and_balance() {
        let x = xor4(0.2);
        assert_eq!(x.dataset.len(), 64);
        assert_eq!(x.dataset.n_features(), 3);
        assert_eq!(x.dataset.class_counts(), vec![16; 4]);
        for row in &x.dataset.features {
            let n: f64 = row.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        // Four cube diagonals are the optimal line packing in 3D.
        assert!((x.min_separation - (1.0f64 / 3.0).acos()).abs() < 0.01);
    }

    #[test]
    fn zero_spread_points_are_antipodal() {
        let x = xor4(0.0);
        let ds = &x.dataset;
        for i in 0..ds.len() {
            for j in 0..ds.len() {
                if ds.labels[i] == ds.labels[j] {
                    let k = linear_kernel(&ds.features[i], &ds.features[j]).unwrap();
                    assert!((k - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn xor_is_deterministic() {
        assert_eq!(xor4(0.2), xor4(0.2));
        let other = generate_xor(&XorSpec {
            seed: 2,
            ..XorSpec {
                n_classes: 4,
                n_features: 3,
                points_per_class: 16,
                spread: 0.2,
                seed: 0,
            }
        })
        .unwrap();
        assert_ne!(other.dataset, xor4(0.2).dataset);
    }

    #[test]
    fn xor_rejects_infeasible_specs() {
        let base = XorSpec {
            n_classes: 4,
            n_features: 3,
            points_per_class: 4,
            spread: 0.2,
            seed: 0,
        };
        for bad in [
            XorSpec {
                n_features: 1,
                ..base
            },
            XorSpec {
                n_classes: 1,
                ..base
            },
            XorSpec {
                points_per_class: 0,
                ..base
            },
            XorSpec {
                spread: 0.5,
                ..base
            },
            XorSpec {
                n_classes: 40,
                n_features: 2,
                ..base
            },
        ] {
            assert!(
                matches!(generate_xor(&bad), Err(Error::Infeasible(_))),
                "{bad:?}"
            );
        }
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_loading() {
        let f = write("a,b,label\n1,2,cat\n3,4.5,dog\n-1,0,cat\n");
        let ds = load_csv(f.path(), None, "label").unwrap();
        assert_eq!(
            ds.features,
            vec![vec![1.0, 2.0], vec![3.0, 4.5], vec![-1.0, 0.0]]
        );
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.class_names, vec!["cat", "dog"]);

        let f = write("label,a,b\n3,1,2\n1,3,4\n2,5,6\n");
        let ds = load_csv(f.path(), Some(&["b".to_string()]), "label").unwrap();
        assert_eq!(ds.features, vec![vec![2.0], vec![4.0], vec![6.0]]);
        assert_eq!(ds.labels, vec![2, 0, 1]);
    }

    #[test]
    fn csv_errors_name_the_problem() {
        let f = write("a,b,label\n1,x,0\n");
        let err = load_csv(f.path(), None, "label").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("'b'"), "{err}");

        let f = write("a,b,label\n1,2,0\n");
        let err = load_csv(f.path(), None, "class").unwrap_err().to_string();
        assert!(err.contains("'class'"), "{err}");

        let f = write("a,b,label\n");
        assert!(load_csv(f.path(), None, "label").is_err());
        let f = write("");
        assert!(load_csv(f.path(), None, "label").is_err());
        assert!(load_csv(Path::new("/nonexistent/file.csv"), None, "label").is_err());
    }

    #[test]
    fn csv_round_trip_of_generated_data() {
        let x = xor4(0.2);
        let f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        x.dataset.write_csv(f.path()).unwrap();
        let back = load_csv(f.path(), None, "label").unwrap();
        assert_eq!(back.features, x.dataset.features);
        assert_eq!(back.labels, x.dataset.labels);
    }

    fn toy(counts: &[usize]) -> Dataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                features.push(vec![c as f64, i as f64]);
                labels.push(c);
            }
        }
        Dataset::new(
            "toy",
            vec!["a".into(), "b".into()],
            features,
            labels,
            counts
                .iter()
                .enumerate()
                .map(|(c, _)| c.to_string())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn balancing() {
        let ds = toy(&[60, 71, 48]);
        let b = balance(&ds, 48, 3).unwrap();
        assert_eq!(b.len(), 144);
        assert_eq!(b.class_counts(), vec![48; 3]);
        assert_eq!(b, balance(&ds, 48, 3).unwrap());
        assert_ne!(b, balance(&ds, 48, 4).unwrap());
        // Rows are copied verbatim.
        for (row, &y) in b.features.iter().zip(&b.labels) {
            assert_eq!(row[0], y as f64);
        }
        let err = balance(&ds, 49, 3).unwrap_err().to_string();
        assert!(err.contains("class '2'"), "{err}");
    }

    #[test]
    fn leave_one_out_plan() {
        let ds = toy(&[32, 32]);
        let plan = make_splits(&ds, SplitKind::LeaveOneOut, 0).unwrap();
        assert_eq!(plan.folds.len(), 64);
        for (i, f) in plan.folds.iter().enumerate() {
            assert_eq!(f.test, vec![i]);
            assert_eq!(f.train.len(), 63);
        }
    }

    #[test]
    fn stratified_iris_sized_folds() {
        let ds = toy(&[50, 50, 50]);
        let plan = make_splits(&ds, SplitKind::KFold { k: 5 }, 7).unwrap();
        for f in &plan.folds {
            let fold = ds.select(&f.test);
            assert_eq!(fold.class_counts(), vec![10, 10, 10]);
        }
        assert!(make_splits(&ds, SplitKind::KFold { k: 151 }, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_without_leaks(
            counts in prop::collection::vec(1usize..20, 2..5),
            k in 2usize..8,
            seed in any::<u64>(),
        ) {
            let ds = toy(&counts);
            prop_assume!(k <= ds.len());
            let plan = make_splits(&ds, SplitKind::KFold { k }, seed).unwrap();
            prop_assert_eq!(plan.folds.len(), k);
            let mut seen = vec![0; ds.len()];
            let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for f in &plan.folds {
                prop_assert_eq!(f.train.len() + f.test.len(), ds.len());
                for &i in &f.test {
                    seen[i] += 1;
                    prop_assert!(!f.train.contains(&i));
                }
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
        }
    }
}
