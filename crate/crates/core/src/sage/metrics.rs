use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Classification scores over a set of evaluation nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub micro_f1: f64,
    pub per_class: BTreeMap<String, ClassScores>,
    /// `confusion[truth][predicted]`, classes in model output order.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else if p == r {
        p
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Metrics {
    /// Scores of `predicted` against `truth`, both given as class indices into `classes`.
    pub fn from_predictions(predicted: &[usize], truth: &[usize], classes: &[String]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::RowMismatch {
                expected: truth.len(),
                found: predicted.len(),
            });
        }
        let c = classes.len();
        if let Some(bad) = predicted.iter().chain(truth).find(|&&x| x >= c) {
            return Err(Error::Dimension(format!("class index {bad} with {c} classes")));
        }
        let mut confusion = vec![vec![0usize; c]; c];
        for (&p, &t) in predicted.iter().zip(truth) {
            confusion[t][p] += 1;
        }
        let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
        let mut per_class = BTreeMap::new();
        for k in 0..c {
            let tp = confusion[k][k];
            let fp: usize = (0..c).filter(|&t| t != k).map(|t| confusion[t][k]).sum();
            let fn_: usize = (0..c).filter(|&p| p != k).map(|p| confusion[k][p]).sum();
            tp_all += tp;
            fp_all += fp;
            fn_all += fn_;
            let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
            per_class.insert(
                classes[k].clone(),
                ClassScores {
                    precision: p,
                    recall: r,
                    f1: f1(p, r),
                    support: tp + fn_,
                },
            );
        }
        let micro_f1 = f1(ratio(tp_all, tp_all + fp_all), ratio(tp_all, tp_all + fn_all));
        Ok(Metrics {
            micro_f1,
            per_class,
            confusion,
        })
    }

    pub fn accuracy(&self) -> f64 {
        let total: usize = self.confusion.iter().flatten().sum();
        let correct: usize = (0..self.confusion.len()).map(|k| self.confusion[k][k]).sum();
        ratio(correct, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(c: usize) -> Vec<String> {
        (0..c).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn worked_example() {
        // (a,b,a,a) against (a,b,b,a)
        let m = Metrics::from_predictions(&[0, 1, 0, 0], &[0, 1, 1, 0], &names(2)).unwrap();
        assert_eq!(m.micro_f1, 0.75);
        assert_eq!(m.confusion, vec![vec![2, 0], vec![1, 1]]);
        assert!((m.per_class["c0"].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class["c1"].recall, 0.5);
    }

    #[test]
    fn extremes() {
        assert_eq!(Metrics::from_predictions(&[0, 1, 2], &[0, 1, 2], &names(3)).unwrap().micro_f1, 1.0);
        assert_eq!(Metrics::from_predictions(&[1, 2, 0], &[0, 1, 2], &names(3)).unwrap().micro_f1, 0.0);
        assert!(Metrics::from_predictions(&[0], &[0, 1], &names(2)).is_err());
        assert!(Metrics::from_predictions(&[5], &[0], &names(2)).is_err());
    }

    #[test]
    fn json_shape() {
        let m = Metrics::from_predictions(&[0, 1], &[0, 0], &names(2)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert!(v["micro_f1"].is_f64());
        assert!(v["per_class"]["c0"]["f1"].is_f64());
        assert_eq!(v["confusion"], serde_json::json!([[1, 1], [0, 0]]));
    }
}
