//! Confusion-matrix evaluation with micro / macro / weighted averaging.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction and label lengths differ: {predictions} vs {labels}")]
    LengthMismatch { predictions: usize, labels: usize },

    #[error("class id {id} out of range for {classes} classes (position {at})")]
    IdOutOfRange { at: usize, id: u32, classes: usize },

    #[error("malformed confusion CSV: {0}")]
    MalformedCsv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True rows of this class.
    pub support: u64,
}

/// Counts plus every derived metric for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub micro: AveragedMetrics,
    #[serde(rename = "macro")]
    pub macro_avg: AveragedMetrics,
    pub weighted: AveragedMetrics,
    pub per_class: Vec<ClassMetrics>,
    pub total: u64,
    #[serde(skip)]
    pub class_names: Vec<String>,
    /// `confusion[true][predicted]`. Exported as CSV, not JSON.
    #[serde(skip)]
    pub confusion: Vec<Vec<u64>>,
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Builds the confusion matrix of `confusion[true][pred]` counts.
pub fn confusion_matrix(
    predictions: &[u32],
    labels: &[u32],
    n_classes: usize,
) -> Result<Vec<Vec<u64>>, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (at, (&p, &t)) in predictions.iter().zip(labels).enumerate() {
        for id in [p, t] {
            if id as usize >= n_classes {
                return Err(MetricsError::IdOutOfRange {
                    at,
                    id,
                    classes: n_classes,
                });
            }
        }
        m[t as usize][p as usize] += 1;
    }
    Ok(m)
}

impl EvalReport {
    /// Evaluates predictions against labels over `n_classes` classes with
    /// generated class names.
    pub fn evaluate(
        predictions: &[u32],
        labels: &[u32],
        n_classes: usize,
    ) -> Result<Self, MetricsError> {
        let names = (0..n_classes).map(|c| format!("class_{c}")).collect();
        Self::evaluate_named(predictions, labels, names)
    }

    /// Evaluates with explicit class names (one per class id).
    pub fn evaluate_named(
        predictions: &[u32],
        labels: &[u32],
        class_names: Vec<String>,
    ) -> Result<Self, MetricsError> {
        let confusion = confusion_matrix(predictions, labels, class_names.len())?;
        Ok(Self::from_confusion(confusion, class_names))
    }

    /// Derives every metric from a confusion matrix. This is the single
    /// computation path, so metrics recomputed from an exported matrix
    /// agree with the original report.
    pub fn from_confusion(confusion: Vec<Vec<u64>>, class_names: Vec<String>) -> Self {
        let c = class_names.len();
        assert_eq!(confusion.len(), c, "confusion matrix must be C x C");
        for row in &confusion {
            assert_eq!(row.len(), c, "confusion matrix must be C x C");
        }

        let total: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..c).map(|i| confusion[i][i]).sum();
        let accuracy = if total > 0 {
            trace as f64 / total as f64
        } else {
            0.0
        };

        let mut per_class = Vec::with_capacity(c);
        let mut macro_p = 0.0;
        let mut macro_r = 0.0;
        let mut macro_f = 0.0;
        let mut weighted_p = 0.0;
        let mut weighted_r = 0.0;
        let mut weighted_f = 0.0;
        // Pooled counts for micro averaging.
        let mut tp_sum = 0u64;
        let mut fp_sum = 0u64;
        let mut fn_sum = 0u64;

        for k in 0..c {
            let tp = confusion[k][k];
            let support: u64 = confusion[k].iter().sum();
            let predicted: u64 = (0..c).map(|i| confusion[i][k]).sum();
            let precision = if predicted > 0 {
                tp as f64 / predicted as f64
            } else {
                0.0
            };
            let recall = if support > 0 {
                tp as f64 / support as f64
            } else {
                0.0
            };
            let f1 = f1_of(precision, recall);

            macro_p += precision;
            macro_r += recall;
            macro_f += f1;
            let w = support as f64;
            weighted_p += precision * w;
            weighted_r += recall * w;
            weighted_f += f1 * w;
            tp_sum += tp;
            fp_sum += predicted - tp;
            fn_sum += support - tp;

            per_class.push(ClassMetrics {
                name: class_names[k].clone(),
                precision,
                recall,
                f1,
                support,
            });
        }

        let micro_p = if tp_sum + fp_sum > 0 {
            tp_sum as f64 / (tp_sum + fp_sum) as f64
        } else {
            0.0
        };
        let micro_r = if tp_sum + fn_sum > 0 {
            tp_sum as f64 / (tp_sum + fn_sum) as f64
        } else {
            0.0
        };
        let denom = if total > 0 { total as f64 } else { 1.0 };

        EvalReport {
            accuracy,
            micro: AveragedMetrics {
                precision: micro_p,
                recall: micro_r,
                f1: f1_of(micro_p, micro_r),
            },
            macro_avg: AveragedMetrics {
                precision: macro_p / c as f64,
                recall: macro_r / c as f64,
                f1: macro_f / c as f64,
            },
            weighted: AveragedMetrics {
                precision: weighted_p / denom,
                recall: weighted_r / denom,
                f1: weighted_f / denom,
            },
            per_class,
            total,
            class_names,
            confusion,
        }
    }

    /// Metrics as pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Confusion matrix as CSV with class-name header row and column.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for n in &self.class_names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (k, row) in self.confusion.iter().enumerate() {
            out.push_str(&self.class_names[k]);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses a matrix written by [`EvalReport::confusion_csv`].
    pub fn parse_confusion_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<u64>>), MetricsError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| MetricsError::MalformedCsv("empty file".into()))?;
        let names: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
        if names.is_empty() {
            return Err(MetricsError::MalformedCsv("no class columns".into()));
        }
        let mut matrix = Vec::with_capacity(names.len());
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != names.len() + 1 {
                return Err(MetricsError::MalformedCsv(format!(
                    "row {:?} has {} cells, expected {}",
                    cells.first().unwrap_or(&""),
                    cells.len(),
                    names.len() + 1
                )));
            }
            let row: Vec<u64> = cells[1..]
                .iter()
                .map(|c| {
                    c.trim()
                        .parse()
                        .map_err(|_| MetricsError::MalformedCsv(format!("bad count {c:?}")))
                })
                .collect::<Result<_, _>>()?;
            matrix.push(row);
        }
        if matrix.len() != names.len() {
            return Err(MetricsError::MalformedCsv(format!(
                "{} rows for {} classes",
                matrix.len(),
                names.len()
            )));
        }
        Ok((names, matrix))
    }
}
