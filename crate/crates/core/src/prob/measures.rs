//! Shannon measures on [`Pmf`] values. All logarithms are base 2 and all
//! results are in bits, with the convention `0 * log 0 = 0`.

use crate::error::{Error, Result};
use crate::prob::Pmf;

/// Negatives within this tolerance are rounding noise and clamp to zero.
pub const MI_CLAMP_TOL: f64 = 1e-9;

fn entropy_of_values(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&v| if v > 0.0 { -v * v.log2() } else { 0.0 })
        .sum()
}

/// Entropy of the marginal of `p` on `axes`, in bits.
pub fn entropy(p: &Pmf, axes: &[&str]) -> Result<f64> {
    let m = p.marginalize(axes)?;
    Ok(entropy_of_values(m.values()))
}

fn check_disjoint(groups: &[&[&str]]) -> Result<()> {
    for (i, g) in groups.iter().enumerate() {
        for name in g.iter() {
            for other in &groups[i + 1..] {
                if other.contains(name) {
                    return Err(Error::OverlappingAxes(name.to_string()));
                }
            }
            if g.iter().filter(|n| **n == *name).count() > 1 {
                return Err(Error::OverlappingAxes(name.to_string()));
            }
        }
    }
    Ok(())
}

fn union<'a>(groups: &[&[&'a str]]) -> Vec<&'a str> {
    let mut out = Vec::new();
    for g in groups {
        out.extend_from_slice(g);
    }
    out
}

/// Conditional mutual information `I(A; B | C)` in bits; `c` may be empty.
pub fn conditional_mutual_information(
    p: &Pmf,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    check_disjoint(&[a, b, c])?;
    let h_ac = entropy(p, &union(&[a, c]))?;
    let h_bc = entropy(p, &union(&[b, c]))?;
    let h_abc = entropy(p, &union(&[a, b, c]))?;
    let h_c = entropy(p, c)?;
    let v = h_ac + h_bc - h_abc - h_c;
    if v < 0.0 && v > -MI_CLAMP_TOL {
        Ok(0.0)
    } else {
        Ok(v)
    }
}

/// Mutual information `I(A; B)` in bits.
pub fn mutual_information(p: &Pmf, a: &[&str], b: &[&str]) -> Result<f64> {
    conditional_mutual_information(p, a, b, &[])
}

/// Absolute residual of the telescoping sum identity
///
/// `I(V;B^n) - I(V;C^n) = sum_i [ I(V;B_i | B^{i-1}, C_{i+1}^n) - I(V;C_i | B^{i-1}, C_{i+1}^n) ]`
///
/// which holds for every joint distribution; the returned value is zero up to
/// floating-point rounding. `b_axes` and `c_axes` are ordered and must have
/// the same length `n >= 1`; together with `v_axes` they must cover every axis
/// of `p`.
pub fn key_identity_residual(
    p: &Pmf,
    v_axes: &[&str],
    b_axes: &[&str],
    c_axes: &[&str],
) -> Result<f64> {
    if b_axes.len() != c_axes.len() || b_axes.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "need matching non-empty blocks, got {} and {}",
            b_axes.len(),
            c_axes.len()
        )));
    }
    check_disjoint(&[v_axes, b_axes, c_axes])?;
    let total = v_axes.len() + b_axes.len() + c_axes.len();
    if total != p.axes().len() {
        return Err(Error::DimensionMismatch(format!(
            "blocks name {} axes, distribution has {}",
            total,
            p.axes().len()
        )));
    }
    let n = b_axes.len();
    let lhs = mutual_information(p, v_axes, b_axes)? - mutual_information(p, v_axes, c_axes)?;
    let mut rhs = 0.0;
    for i in 0..n {
        let mut cond: Vec<&str> = Vec::new();
        cond.extend_from_slice(&b_axes[..i]);
        cond.extend_from_slice(&c_axes[i + 1..]);
        rhs += conditional_mutual_information(p, v_axes, &[b_axes[i]], &cond)?;
        rhs -= conditional_mutual_information(p, v_axes, &[c_axes[i]], &cond)?;
    }
    Ok((lhs - rhs).abs())
}
