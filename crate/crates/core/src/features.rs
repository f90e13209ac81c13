//! Dense per-node feature matrices and their TSV form.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use ndarray::{s, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Continuous,
    /// 0/1 indicator column, never standardized.
    OneHot,
}

/// `n × d` matrix of finite reals with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, kinds: Vec<ColumnKind>, values: Array2<f64>) -> Result<Self> {
        if names.len() != values.ncols() || kinds.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} names and {} kinds for {} columns",
                names.len(),
                kinds.len(),
                values.ncols()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Config(format!("duplicate column name `{dup}`")));
        }
        if let Some(((r, c), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite value {v} at row {r}, column {c}")));
        }
        Ok(FeatureMatrix { names, kinds, values })
    }

    /// All columns continuous.
    pub fn continuous(names: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let kinds = vec![ColumnKind::Continuous; names.len()];
        Self::new(names, kinds, values)
    }

    /// Single continuous column.
    pub fn column(name: &str, values: &[f64]) -> Result<Self> {
        let values = Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("n × 1");
        Self::continuous(vec![name.to_owned()], values)
    }

    /// Columns `prefix_0 .. prefix_{d-1}`.
    pub fn with_prefix(prefix: &str, values: Array2<f64>) -> Result<Self> {
        let names = (0..values.ncols()).map(|i| format!("{prefix}_{i}")).collect();
        Self::continuous(names, values)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, u: NodeId) -> ArrayView1<'_, f64> {
        self.values.row(u)
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Writes a header of column names, then one row per node with `%.10g` values.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.names.join("\t"))?;
        let mut line = String::new();
        for row in self.values.rows() {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push('\t');
                }
                line.push_str(&format_g(*v, 10));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the TSV form. Columns holding only 0/1 values are treated as indicators.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let names: Vec<String> = match lines.next() {
            Some((_, header)) => header?.split('\t').map(str::to_owned).collect(),
            None => return Err(Error::Empty("feature file has no header")),
        };
        let d = names.len();
        let mut data = Vec::new();
        let mut n = 0;
        for (i, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut count = 0;
            for field in line.split('\t') {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::parse(i + 1, format!("bad number `{field}`")))?;
                data.push(v);
                count += 1;
            }
            if count != d {
                return Err(Error::parse(i + 1, format!("expected {d} fields, found {count}")));
            }
            n += 1;
        }
        let values = Array2::from_shape_vec((n, d), data).expect("row lengths checked");
        let kinds = values
            .columns()
            .into_iter()
            .map(|c| {
                if n > 0 && c.iter().all(|&v| v == 0.0 || v == 1.0) {
                    ColumnKind::OneHot
                } else {
                    ColumnKind::Continuous
                }
            })
            .collect();
        Self::new(names, kinds, values)
    }
}

/// Horizontal concatenation of `parts`.
///
/// With `standardize = Some(rows)`, every continuous column is shifted and
/// scaled to zero mean and unit variance measured over `rows` only; columns
/// with zero variance over those rows become all zeros.
pub fn assemble_features(parts: &[FeatureMatrix], standardize: Option<&[NodeId]>) -> Result<FeatureMatrix> {
    let first = parts.first().ok_or(Error::Empty("no feature blocks to assemble"))?;
    let n = first.rows();
    if let Some(bad) = parts.iter().find(|p| p.rows() != n) {
        return Err(Error::RowMismatch {
            expected: n,
            found: bad.rows(),
        });
    }
    let d: usize = parts.iter().map(FeatureMatrix::cols).sum();
    let mut values = Array2::zeros((n, d));
    let mut names = Vec::with_capacity(d);
    let mut kinds = Vec::with_capacity(d);
    let mut at = 0;
    for p in parts {
        values.slice_mut(s![.., at..at + p.cols()]).assign(&p.values);
        names.extend(p.names.iter().cloned());
        kinds.extend_from_slice(&p.kinds);
        at += p.cols();
    }
    if let Some(rows) = standardize {
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::NodeOutOfRange { node: bad, n });
        }
        for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
            if kinds[j] == ColumnKind::OneHot {
                continue;
            }
            let (mean, sd) = mean_sd(rows.iter().map(|&r| col[r]));
            if sd > 1e-12 {
                col.mapv_inplace(|v| (v - mean) / sd);
            } else {
                col.fill(0.0);
            }
        }
    }
    FeatureMatrix::new(names, kinds, values)
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    if count == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / count as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    (mean, var.sqrt())
}

/// C-style `%.{precision}g` formatting.
pub fn format_g(x: f64, precision: usize) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn g_formatting_matches_c() {
        assert_eq!(format_g(2.0, 10), "2");
        assert_eq!(format_g(0.5, 10), "0.5");
        assert_eq!(format_g(1.0 / 3.0, 10), "0.3333333333");
        assert_eq!(format_g(123456789012.0, 10), "1.23456789e+11");
        assert_eq!(format_g(0.00001234, 10), "1.234e-05");
        assert_eq!(format_g(-7.25, 10), "-7.25");
        assert_eq!(format_g(9.99999999999, 10), "10");
        assert_eq!(format_g(1e-4, 10), "0.0001");
    }

    #[test]
    fn assemble_concatenates() {
        let a = FeatureMatrix::with_prefix("a", Array2::ones((4, 2))).unwrap();
        let b = FeatureMatrix::with_prefix("b", Array2::zeros((4, 3))).unwrap();
        let m = assemble_features(&[a, b], None).unwrap();
        assert_eq!((m.rows(), m.cols()), (4, 5));
        assert_eq!(m.names(), ["a_0", "a_1", "b_0", "b_1", "b_2"]);
    }

    #[test]
    fn assemble_errors() {
        assert!(matches!(assemble_features(&[], None), Err(Error::Empty(_))));
        let a = FeatureMatrix::with_prefix("a", Array2::ones((4, 1))).unwrap();
        let b = FeatureMatrix::with_prefix("b", Array2::ones((3, 1))).unwrap();
        assert!(matches!(
            assemble_features(&[a, b], None),
            Err(Error::RowMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn standardize_uses_training_rows_and_skips_indicators() {
        let cont = FeatureMatrix::column("x", &[1.0, 3.0, 100.0]).unwrap();
        let constant = FeatureMatrix::column("c", &[5.0, 5.0, 5.0]).unwrap();
        let ind = FeatureMatrix::new(vec!["h".into()], vec![ColumnKind::OneHot], array![[1.0], [0.0], [1.0]]).unwrap();
        let m = assemble_features(&[cont, constant, ind], Some(&[0, 1])).unwrap();
        let v = m.values();
        assert_eq!(v.column(0).to_vec(), vec![-1.0, 1.0, 98.0]);
        assert_eq!(v.column(1).to_vec(), vec![0.0, 0.0, 0.0]);
        assert_eq!(v.column(2).to_vec(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_non_finite_and_duplicates() {
        assert!(FeatureMatrix::column("x", &[f64::NAN]).is_err());
        assert!(FeatureMatrix::continuous(vec!["a".into(), "a".into()], Array2::zeros((1, 2))).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let m = FeatureMatrix::new(
            vec!["deg".into(), "comm_0".into()],
            vec![ColumnKind::Continuous, ColumnKind::OneHot],
            array![[2.0, 1.0], [0.125, 0.0]],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "deg\tcomm_0\n2\t1\n0.125\t0\n");
        assert_eq!(FeatureMatrix::read_tsv(buf.as_slice()).unwrap(), m);
    }
}
