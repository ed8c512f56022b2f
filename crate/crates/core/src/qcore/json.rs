//! Matrix interchange schema: `{"rows": n, "cols": m, "re": [[...]], "im": [[...]]}`.

use serde::{Deserialize, Serialize};

use super::matrix::{c, ComplexMatrix};
use crate::error::{Error, Result};

/// Significant digits kept when emitting numbers.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] so emitted files are stable across
/// platforms and last-bit floating point noise.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let v: f64 = s.parse().expect("formatted float parses");
    // normalise negative zero
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_ordering: Option<Vec<String>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let grid = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| round_sig(f(i, j))).collect())
                .collect()
        };
        Self {
            rows: m.rows(),
            cols: m.cols(),
            re: grid(&|i, j| m[(i, j)].re),
            im: grid(&|i, j| m[(i, j)].im),
            basis_ordering: None,
        }
    }

    pub fn with_basis(mut self, labels: Vec<String>) -> Self {
        self.basis_ordering = Some(labels);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let shape_ok =
            |g: &Vec<Vec<f64>>| g.len() == self.rows && g.iter().all(|row| row.len() == self.cols);
        if self.rows == 0 || self.cols == 0 || !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Parse {
                line: 0,
                message: format!(
                    "matrix arrays do not match declared shape {}x{}",
                    self.rows, self.cols
                ),
            });
        }
        if let Some(labels) = &self.basis_ordering {
            if labels.len() != self.rows {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("{} basis labels for {} rows", labels.len(), self.rows),
                });
            }
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        self.validate()?;
        let data = self
            .re
            .iter()
            .flatten()
            .zip(self.im.iter().flatten())
            .map(|(&a, &b)| c(a, b))
            .collect();
        ComplexMatrix::new(self.rows, self.cols, data)
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix json serialises")
    }

    pub fn from_str(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_field_names() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        let v: serde_json::Value = serde_json::to_value(MatrixJson::from_matrix(&m)).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["cols", "im", "re", "rows"]);
        assert_eq!(v["re"][1][2], 1.0);
        assert_eq!(v["im"][1][2], 2.0);
    }

    #[test]
    fn roundtrip_within_precision() {
        let m = ComplexMatrix::from_fn(4, 4, |i, j| c(1.0 / (1.0 + i as f64), -(j as f64).sqrt()));
        let back = MatrixJson::from_str(&MatrixJson::from_matrix(&m).to_string_pretty())
            .unwrap()
            .to_matrix()
            .unwrap();
        assert!(back.max_abs_diff(&m) < 1e-11);
    }

    #[test]
    fn ragged_rejected() {
        let bad = r#"{"rows":2,"cols":2,"re":[[1,0],[0]],"im":[[0,0],[0,0]]}"#;
        assert!(MatrixJson::from_str(bad).is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert!(round_sig(-0.0).is_sign_positive());
        assert_eq!(round_sig(123456789.123456789), 123456789.123);
    }
}
