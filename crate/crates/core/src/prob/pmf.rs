use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Channel;

/// Default cap on the number of dense cells a [`Pmf`] may hold.
pub const DEFAULT_MAX_CELLS: usize = 10_000_000;

/// Tolerance on the total probability mass of a valid [`Pmf`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A named axis of a joint distribution together with its alphabet size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self { name: name.into(), size }
    }
}

/// Dense joint probability mass function over a product of named finite axes.
///
/// Values are stored row-major in axis order. Entries are nonnegative and sum
/// to one within [`NORMALIZATION_TOL`]; normalization is never repaired
/// implicitly (see [`Pmf::renormalize`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    axes: Vec<Axis>,
    values: Vec<f64>,
}

impl Pmf {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        Self::with_cell_cap(axes, values, DEFAULT_MAX_CELLS)
    }

    pub fn with_cell_cap(axes: Vec<Axis>, values: Vec<f64>, cap: usize) -> Result<Self> {
        let mut cells: usize = 1;
        for (i, ax) in axes.iter().enumerate() {
            if ax.size == 0 {
                return Err(Error::InvalidParameter(format!(
                    "axis `{}` has empty alphabet",
                    ax.name
                )));
            }
            if axes[..i].iter().any(|other| other.name == ax.name) {
                return Err(Error::DuplicateAxis(ax.name.clone()));
            }
            cells = cells
                .checked_mul(ax.size)
                .ok_or(Error::TooManyCells { cells: usize::MAX, cap })?;
        }
        if cells > cap {
            return Err(Error::TooManyCells { cells, cap });
        }
        if values.len() != cells {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                cells,
                values.len()
            )));
        }
        let mut sum = 0.0;
        for (index, &v) in values.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::NegativeProbability { value: v, index });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::BadNormalization { sum, tol: NORMALIZATION_TOL });
        }
        Ok(Self { axes, values })
    }

    /// The zero-axis distribution: a single cell holding all the mass.
    pub fn scalar() -> Self {
        Self { axes: Vec::new(), values: vec![1.0] }
    }

    pub fn uniform(axes: Vec<Axis>) -> Result<Self> {
        let cells: usize = axes.iter().map(|a| a.size).product();
        if cells == 0 {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        let p = 1.0 / cells as f64;
        Self::new(axes, vec![p; cells])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis_size(&self, name: &str) -> Result<usize> {
        Ok(self.axes[self.axis_index(name)?].size)
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.axes.iter().any(|a| a.name == name)
    }

    /// Row-major strides, one per axis.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].size;
        }
        strides
    }

    /// Probability of a full assignment, one letter per axis in axis order.
    pub fn prob(&self, assignment: &[usize]) -> Result<f64> {
        if assignment.len() != self.axes.len() {
            return Err(Error::DimensionMismatch(format!(
                "assignment has {} letters, expected {}",
                assignment.len(),
                self.axes.len()
            )));
        }
        let strides = self.strides();
        let mut idx = 0usize;
        for ((&a, ax), &s) in assignment.iter().zip(&self.axes).zip(&strides) {
            if a >= ax.size {
                return Err(Error::DimensionMismatch(format!(
                    "letter {} out of range for axis `{}`",
                    a, ax.name
                )));
            }
            idx += a * s;
        }
        Ok(self.values[idx])
    }

    /// Sum out every axis not listed in `keep`. The kept axes preserve their
    /// original relative order. Marginalizing over all axes yields the scalar
    /// distribution.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Pmf> {
        for name in keep {
            self.axis_index(name)?;
        }
        let kept: Vec<usize> = (0..self.axes.len())
            .filter(|&i| keep.iter().any(|k| *k == self.axes[i].name))
            .collect();
        if kept.len() == self.axes.len() {
            return Ok(self.clone());
        }
        let out_axes: Vec<Axis> = kept.iter().map(|&i| self.axes[i].clone()).collect();
        let out_cells: usize = out_axes.iter().map(|a| a.size).product::<usize>().max(1);
        let mut out = vec![0.0f64; out_cells];

        let strides = self.strides();
        let mut out_strides = vec![0usize; self.axes.len()];
        let mut s = 1usize;
        for &i in kept.iter().rev() {
            out_strides[i] = s;
            s *= self.axes[i].size;
        }
        // Walk all cells once, projecting each flat index onto the kept axes.
        let mut digits = vec![0usize; self.axes.len()];
        let mut out_idx = 0usize;
        for &v in &self.values {
            out[out_idx] += v;
            // increment mixed-radix counter from the last axis
            for ax in (0..self.axes.len()).rev() {
                digits[ax] += 1;
                out_idx += out_strides[ax];
                if digits[ax] < self.axes[ax].size {
                    break;
                }
                digits[ax] = 0;
                out_idx -= out_strides[ax] * self.axes[ax].size;
            }
            let _ = strides;
        }
        Ok(Pmf { axes: out_axes, values: out })
    }

    /// Reorder axes to the exact order given (must be a permutation of all axes).
    pub fn reorder(&self, order: &[&str]) -> Result<Pmf> {
        if order.len() != self.axes.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation names {} axes, distribution has {}",
                order.len(),
                self.axes.len()
            )));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|name| self.axis_index(name))
            .collect::<Result<_>>()?;
        {
            let mut seen = vec![false; perm.len()];
            for &p in &perm {
                if seen[p] {
                    return Err(Error::DuplicateAxis(self.axes[p].name.clone()));
                }
                seen[p] = true;
            }
        }
        let out_axes: Vec<Axis> = perm.iter().map(|&i| self.axes[i].clone()).collect();
        let in_strides = self.strides();
        let mut out = vec![0.0f64; self.values.len()];
        let out_sizes: Vec<usize> = out_axes.iter().map(|a| a.size).collect();
        let mut digits = vec![0usize; out_axes.len()];
        for slot in out.iter_mut() {
            let mut src = 0usize;
            for (k, &d) in digits.iter().enumerate() {
                src += d * in_strides[perm[k]];
            }
            *slot = self.values[src];
            for ax in (0..digits.len()).rev() {
                digits[ax] += 1;
                if digits[ax] < out_sizes[ax] {
                    break;
                }
                digits[ax] = 0;
            }
        }
        Ok(Pmf { axes: out_axes, values: out })
    }

    /// Grow the joint by one conditional factor: the channel's output axis is
    /// appended and is conditionally independent of everything else given the
    /// input axis.
    pub fn extend(&self, ch: &Channel) -> Result<Pmf> {
        let input_idx = self
            .axes
            .iter()
            .position(|a| a.name == ch.input_axis())
            .ok_or_else(|| Error::UnknownAxis(ch.input_axis().to_string()))?;
        if self.has_axis(ch.output_axis()) {
            return Err(Error::AxisCollision(ch.output_axis().to_string()));
        }
        if self.axes[input_idx].size != ch.input_size() {
            return Err(Error::AlphabetMismatch(format!(
                "axis `{}` has {} letters, channel expects {}",
                ch.input_axis(),
                self.axes[input_idx].size,
                ch.input_size()
            )));
        }
        let out_size = ch.output_size();
        let mut axes = self.axes.clone();
        axes.push(Axis::new(ch.output_axis().to_string(), out_size));
        let mut values = Vec::with_capacity(self.values.len() * out_size);

        let strides = self.strides();
        let in_stride = strides[input_idx];
        let in_size = self.axes[input_idx].size;
        for (cell, &v) in self.values.iter().enumerate() {
            let letter = (cell / in_stride) % in_size;
            let row = ch.row(letter);
            for &w in row {
                values.push(v * w);
            }
        }
        // cells beyond the cap could only arise from a valid parent times a
        // small alphabet; still re-check through the constructor
        Pmf::with_cell_cap(axes, values, DEFAULT_MAX_CELLS)
    }

    /// Rescale to unit mass. Fails on an all-zero distribution.
    pub fn renormalize(&self) -> Result<Pmf> {
        let sum: f64 = self.values.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidParameter(
                "cannot renormalize a zero distribution".into(),
            ));
        }
        let values = self.values.iter().map(|v| v / sum).collect();
        Ok(Pmf { axes: self.axes.clone(), values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform2(name: &str) -> Pmf {
        Pmf::uniform(vec![Axis::new(name, 2)]).unwrap()
    }

    #[test]
    fn rejects_bad_mass() {
        let err = Pmf::new(vec![Axis::new("x", 2)], vec![0.5, 0.4]).unwrap_err();
        assert!(matches!(err, Error::BadNormalization { .. }));
        let err = Pmf::new(vec![Axis::new("x", 2)], vec![1.5, -0.5]).unwrap_err();
        assert!(matches!(err, Error::NegativeProbability { .. }));
    }

    #[test]
    fn rejects_duplicate_axis_names() {
        let err = Pmf::uniform(vec![Axis::new("x", 2), Axis::new("x", 2)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateAxis(_)));
    }

    #[test]
    fn cell_cap_is_enforced() {
        let axes = vec![Axis::new("a", 100), Axis::new("b", 100)];
        let err = Pmf::with_cell_cap(axes, vec![0.0; 10_000], 9_999).unwrap_err();
        assert!(matches!(err, Error::TooManyCells { .. }));
    }

    #[test]
    fn marginalize_all_axes_gives_scalar() {
        let p = Pmf::uniform(vec![Axis::new("x", 3), Axis::new("y", 2)]).unwrap();
        let m = p.marginalize(&[]).unwrap();
        assert!(m.axes().is_empty());
        assert!((m.values()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginalize_keep_all_is_identity() {
        let p = Pmf::new(
            vec![Axis::new("x", 2), Axis::new("y", 2)],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let m = p.marginalize(&["x", "y"]).unwrap();
        assert_eq!(m, p);
    }

    #[test]
    fn marginal_of_product_recovers_factor() {
        // p(x) * q(y) with p = (0.3, 0.7), q = (0.25, 0.75)
        let p = Pmf::new(
            vec![Axis::new("x", 2), Axis::new("y", 2)],
            vec![0.3 * 0.25, 0.3 * 0.75, 0.7 * 0.25, 0.7 * 0.75],
        )
        .unwrap();
        let m = p.marginalize(&["x"]).unwrap();
        assert!((m.values()[0] - 0.3).abs() < 1e-12);
        assert!((m.values()[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn marginalize_unknown_axis_errors() {
        let p = uniform2("x");
        assert!(matches!(p.marginalize(&["q"]), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn extend_collision_errors() {
        let p = uniform2("x");
        let ch = Channel::identity("x", "x", 2).unwrap_err();
        // identity constructor itself rejects same-name axes
        assert!(matches!(ch, Error::AxisCollision(_)));
        let ch = Channel::identity("x", "y", 2).unwrap();
        let q = p.extend(&ch).unwrap();
        assert!(matches!(q.extend(&ch), Err(Error::AxisCollision(_))));
    }

    #[test]
    fn reorder_round_trip() {
        let p = Pmf::new(
            vec![Axis::new("x", 2), Axis::new("y", 3)],
            vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.25],
        )
        .unwrap();
        let q = p.reorder(&["y", "x"]).unwrap();
        assert_eq!(q.axes()[0].name, "y");
        assert!((q.prob(&[2, 0]).unwrap() - p.prob(&[0, 2]).unwrap()).abs() < 1e-15);
        let back = q.reorder(&["x", "y"]).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn renormalize_is_explicit() {
        let p = Pmf::new(vec![Axis::new("x", 2)], vec![0.5, 0.5]).unwrap();
        let scaled = Pmf {
            axes: p.axes.clone(),
            values: vec![0.2, 0.2],
        };
        let r = scaled.renormalize().unwrap();
        assert!((r.values()[0] - 0.5).abs() < 1e-12);
    }
}
