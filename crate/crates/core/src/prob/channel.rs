use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-9;

/// Row-stochastic conditional distribution `p(output | input)` between two
/// named axes. Row `i` is the output distribution given input letter `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    input_axis: String,
    output_axis: String,
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(
        input_axis: impl Into<String>,
        output_axis: impl Into<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let input_axis = input_axis.into();
        let output_axis = output_axis.into();
        if input_axis == output_axis {
            return Err(Error::AxisCollision(output_axis));
        }
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter("channel must be non-empty".into()));
        }
        let width = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    width
                )));
            }
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::NegativeProbability { value: v, index: i * width + j });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::BadNormalization { sum, tol: ROW_TOL });
            }
        }
        Ok(Self { input_axis, output_axis, rows })
    }

    /// Deterministic copy channel (square identity matrix).
    pub fn identity(input: &str, output: &str, size: usize) -> Result<Self> {
        let rows = (0..size)
            .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(input, output, rows)
    }

    /// Channel whose output is the fixed letter `letter` regardless of input.
    pub fn constant(input: &str, output: &str, input_size: usize, output_size: usize, letter: usize) -> Result<Self> {
        if letter >= output_size {
            return Err(Error::InvalidParameter(format!(
                "constant letter {} out of range {}",
                letter, output_size
            )));
        }
        let row: Vec<f64> = (0..output_size).map(|j| if j == letter { 1.0 } else { 0.0 }).collect();
        Self::new(input, output, vec![row; input_size])
    }

    /// Channel whose output is uniform and independent of the input.
    pub fn uniform(input: &str, output: &str, input_size: usize, output_size: usize) -> Result<Self> {
        let row = vec![1.0 / output_size as f64; output_size];
        Self::new(input, output, vec![row; input_size])
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(input: &str, output: &str, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("crossover {} outside [0, 1]", p)));
        }
        Self::new(input, output, vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn input_axis(&self) -> &str {
        &self.input_axis
    }

    pub fn output_axis(&self) -> &str {
        &self.output_axis
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, input_letter: usize) -> &[f64] {
        &self.rows[input_letter]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Same matrix viewed between different axis names.
    pub fn renamed(&self, input: &str, output: &str) -> Result<Self> {
        Self::new(input, output, self.rows.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_rows() {
        let err = Channel::new("x", "y", vec![vec![0.5, 0.4]]).unwrap_err();
        assert!(matches!(err, Error::BadNormalization { .. }));
    }

    #[test]
    fn bsc_rows() {
        let ch = Channel::bsc("x", "y", 0.1).unwrap();
        assert!((ch.row(0)[1] - 0.1).abs() < 1e-15);
        assert!((ch.row(1)[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_letter_bounds() {
        assert!(Channel::constant("x", "y", 2, 3, 2).is_ok());
        assert!(Channel::constant("x", "y", 2, 3, 3).is_err());
    }
}
