use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `k x k` counts; entry `(r, c)` counts samples predicted `r` whose
/// reference class is `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

pub fn confusion_matrix(predicted: &[usize], reference: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if predicted.len() != reference.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} references",
            predicted.len(),
            reference.len()
        )));
    }
    let mut counts = vec![vec![0; n_classes]; n_classes];
    for (&p, &r) in predicted.iter().zip(reference) {
        if p >= n_classes || r >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label pair ({p}, {r}) out of range for {n_classes} classes"
            )));
        }
        counts[p][r] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Column totals, i.e. reference class counts.
    pub fn reference_counts(&self) -> Vec<usize> {
        (0..self.counts.len())
            .map(|c| self.counts.iter().map(|row| row[c]).sum())
            .collect()
    }

    /// CSV with a `predicted` corner cell, reference class names across and
    /// predicted class names down.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("predicted");
        for name in class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in class_names.iter().zip(&self.counts) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub split: usize,
    /// Test accuracy as a fraction; absent when the split failed.
    pub accuracy: Option<f64>,
    /// Hyperparameter chosen by tuning, if any.
    pub tuned: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub label: String,
    pub splits: Vec<SplitRecord>,
    /// Accuracies of the successful splits, in split order.
    pub accuracies: Vec<f64>,
    pub mean_acc: Option<f64>,
    /// Sample standard deviation; needs two or more successful splits.
    pub sd_acc: Option<f64>,
    /// Confusion matrix of the last split, when it succeeded.
    pub last_split_confusion: Option<ConfusionMatrix>,
    pub errors_encountered: Vec<String>,
}

impl BenchmarkReport {
    pub fn from_splits(label: String, splits: Vec<SplitRecord>, last_split_confusion: Option<ConfusionMatrix>) -> Self {
        let accuracies: Vec<f64> = splits.iter().filter_map(|s| s.accuracy).collect();
        let (mean_acc, sd_acc) = mean_sd(&accuracies);
        let errors_encountered = splits
            .iter()
            .filter_map(|s| s.error.as_ref().map(|e| format!("split {}: {e}", s.split)))
            .collect();
        Self {
            label,
            splits,
            accuracies,
            mean_acc,
            sd_acc,
            last_split_confusion,
            errors_encountered,
        }
    }

    /// True when some split failed, which renders the table row as NA.
    pub fn has_failures(&self) -> bool {
        !self.errors_encountered.is_empty()
    }
}

/// Sample mean and sample standard deviation (`n - 1` denominator).
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (Some(mean), Some((ss / (n - 1) as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub csv: String,
    pub text: String,
}

/// Renders `Model,ACC,SD` rows: ACC in percent rounded to an integer, SD of
/// fractional accuracies to two decimals, `NA` for missing values.
pub fn emit_table(reports: &[BenchmarkReport]) -> Result<Table> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to tabulate".into()));
    }
    let rows: Vec<[String; 3]> = reports
        .iter()
        .map(|r| {
            let failed = r.has_failures();
            let acc = match r.mean_acc {
                Some(m) if !failed => format!("{}", (m * 100.0).round() as i64),
                _ => "NA".into(),
            };
            let sd = match r.sd_acc {
                Some(s) if !failed => format!("{s:.2}"),
                _ => "NA".into(),
            };
            [r.label.clone(), acc, sd]
        })
        .collect();
    let mut csv = String::from("Model,ACC,SD\n");
    for [m, a, s] in &rows {
        let m = if m.contains([',', '"']) { format!("\"{}\"", m.replace('"', "\"\"")) } else { m.clone() };
        let _ = writeln!(csv, "{m},{a},{s}");
    }
    let width = rows.iter().map(|r| r[0].len()).max().unwrap_or(0).max(5);
    let mut text = format!("{:<width$}  {:>4}  {:>4}\n", "Model", "ACC", "SD");
    for [m, a, s] in &rows {
        let _ = writeln!(text, "{m:<width$}  {a:>4}  {s:>4}");
    }
    Ok(Table { csv, text })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(label: &str, accs: &[Option<f64>]) -> BenchmarkReport {
        let splits = accs
            .iter()
            .enumerate()
            .map(|(i, a)| SplitRecord {
                split: i,
                accuracy: *a,
                tuned: None,
                error: a.is_none().then(|| "singular covariance".to_string()),
            })
            .collect();
        BenchmarkReport::from_splits(label.into(), splits, None)
    }

    #[test]
    fn confusion_orientation() {
        let m = confusion_matrix(&[0, 1, 1, 2], &[0, 0, 1, 2], 3).unwrap();
        assert_eq!(m.counts[1][0], 1);
        assert_eq!(m.trace(), 3);
        assert_eq!(m.reference_counts(), vec![2, 1, 1]);
        assert!(confusion_matrix(&[3], &[0], 3).is_err());
        assert!(confusion_matrix(&[0, 1], &[0], 3).is_err());
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(m.to_csv(&names).lines().nth(2), Some("b,1,1,0"));
    }

    #[test]
    fn table_rows() {
        let t = emit_table(&[
            report("PLS", &[Some(0.93), Some(0.95), Some(0.94), Some(0.96), Some(0.92)]),
            report("QDA PCA", &[Some(0.5), None]),
            report("LDA GA", &[Some(0.881)]),
        ])
        .unwrap();
        let lines: Vec<&str> = t.csv.lines().collect();
        assert_eq!(lines[0], "Model,ACC,SD");
        assert_eq!(lines[1], "PLS,94,0.02");
        assert_eq!(lines[2], "QDA PCA,NA,NA");
        assert_eq!(lines[3], "LDA GA,88,NA");
        assert_eq!(t.text.lines().count(), 4);
        assert!(emit_table(&[]).is_err());
    }

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[0.7]), (Some(0.7), None));
    }
}
