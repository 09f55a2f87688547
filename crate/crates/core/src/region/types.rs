use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Axis, Channel, Pmf};

pub const AXIS_T: &str = "t";
pub const AXIS_U: &str = "u";
pub const AXIS_X: &str = "x";
pub const AXIS_Y: &str = "y";
pub const AXIS_Z: &str = "z";

/// Three correlated memoryless sources: Alice observes X, Bob Y, Eve Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSource {
    pmf: Pmf,
}

impl JointSource {
    /// Wrap a joint distribution over exactly the axes x, y, z (any order).
    pub fn new(pmf: Pmf) -> Result<Self> {
        for name in [AXIS_X, AXIS_Y, AXIS_Z] {
            if !pmf.has_axis(name) {
                return Err(Error::UnknownAxis(name.to_string()));
            }
        }
        if pmf.axes().len() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "source must have exactly the axes x, y, z; got {}",
                pmf.axes().len()
            )));
        }
        let pmf = pmf.reorder(&[AXIS_X, AXIS_Y, AXIS_Z])?;
        Ok(Self { pmf })
    }

    /// Dense constructor: probabilities in row-major (x, y, z) order.
    pub fn from_dense(card_x: usize, card_y: usize, card_z: usize, probs: Vec<f64>) -> Result<Self> {
        let pmf = Pmf::new(
            vec![
                Axis::new(AXIS_X, card_x),
                Axis::new(AXIS_Y, card_y),
                Axis::new(AXIS_Z, card_z),
            ],
            probs,
        )?;
        Self::new(pmf)
    }

    /// Uniform binary X observed through two independent binary symmetric
    /// channels: Y = BSC(p_y)(X), Z = BSC(p_z)(X), with Y and Z conditionally
    /// independent given X.
    pub fn bsc_pair(p_y: f64, p_z: f64) -> Result<Self> {
        let x = Pmf::uniform(vec![Axis::new(AXIS_X, 2)])?;
        let xy = x.extend(&Channel::bsc(AXIS_X, AXIS_Y, p_y)?)?;
        let xyz = xy.extend(&Channel::bsc(AXIS_X, AXIS_Z, p_z)?)?;
        Self::new(xyz)
    }

    /// X = Y uniform over `card` letters, Z uniform and independent.
    pub fn common_bit_with_independent_eve(card: usize, card_z: usize) -> Result<Self> {
        let x = Pmf::uniform(vec![Axis::new(AXIS_X, card)])?;
        let xy = x.extend(&Channel::identity(AXIS_X, AXIS_Y, card)?)?;
        let xyz = xy.extend(&Channel::uniform(AXIS_X, AXIS_Z, card, card_z)?)?;
        Self::new(xyz)
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn card_x(&self) -> usize {
        self.pmf.axis_size(AXIS_X).expect("x axis present")
    }

    pub fn card_y(&self) -> usize {
        self.pmf.axis_size(AXIS_Y).expect("y axis present")
    }

    pub fn card_z(&self) -> usize {
        self.pmf.axis_size(AXIS_Z).expect("z axis present")
    }

    /// Marginal p(x).
    pub fn p_x(&self) -> Vec<f64> {
        self.pmf
            .marginalize(&[AXIS_X])
            .expect("x axis present")
            .values()
            .to_vec()
    }

    /// Marginal p(x, y) as a row-major `card_x` by `card_y` table.
    pub fn p_xy(&self) -> Vec<f64> {
        self.pmf
            .marginalize(&[AXIS_X, AXIS_Y])
            .expect("axes present")
            .values()
            .to_vec()
    }

    /// Marginal p(x, z) as a row-major `card_x` by `card_z` table.
    pub fn p_xz(&self) -> Vec<f64> {
        self.pmf
            .marginalize(&[AXIS_X, AXIS_Z])
            .expect("axes present")
            .values()
            .to_vec()
    }
}

/// The auxiliary layers of the scheme: conditional channels realizing the
/// Markov chain T - U - X - (Y, Z). `u_given_x` maps x to u, `t_given_u`
/// maps u to t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryPair {
    u_given_x: Channel,
    t_given_u: Channel,
}

impl AuxiliaryPair {
    pub fn new(u_given_x: Channel, t_given_u: Channel) -> Result<Self> {
        if u_given_x.input_axis() != AXIS_X || u_given_x.output_axis() != AXIS_U {
            return Err(Error::AlphabetMismatch(format!(
                "u_given_x must map axis `{}` to `{}`",
                AXIS_X, AXIS_U
            )));
        }
        if t_given_u.input_axis() != AXIS_U || t_given_u.output_axis() != AXIS_T {
            return Err(Error::AlphabetMismatch(format!(
                "t_given_u must map axis `{}` to `{}`",
                AXIS_U, AXIS_T
            )));
        }
        if t_given_u.input_size() != u_given_x.output_size() {
            return Err(Error::AlphabetMismatch(format!(
                "t_given_u expects {} input letters, u_given_x outputs {}",
                t_given_u.input_size(),
                u_given_x.output_size()
            )));
        }
        Ok(Self { u_given_x, t_given_u })
    }

    /// Build from raw row-stochastic matrices.
    pub fn from_rows(u_rows: Vec<Vec<f64>>, t_rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            Channel::new(AXIS_X, AXIS_U, u_rows)?,
            Channel::new(AXIS_U, AXIS_T, t_rows)?,
        )
    }

    /// U = X verbatim, T constant.
    pub fn identity_u_const_t(card_x: usize) -> Result<Self> {
        Self::new(
            Channel::identity(AXIS_X, AXIS_U, card_x)?,
            Channel::constant(AXIS_U, AXIS_T, card_x, 1, 0)?,
        )
    }

    /// Both layers constant: the zero-information auxiliary.
    pub fn const_aux(card_x: usize) -> Result<Self> {
        Self::new(
            Channel::constant(AXIS_X, AXIS_U, card_x, 1, 0)?,
            Channel::constant(AXIS_U, AXIS_T, 1, 1, 0)?,
        )
    }

    pub fn u_given_x(&self) -> &Channel {
        &self.u_given_x
    }

    pub fn t_given_u(&self) -> &Channel {
        &self.t_given_u
    }

    pub fn card_u(&self) -> usize {
        self.u_given_x.output_size()
    }

    pub fn card_t(&self) -> usize {
        self.t_given_u.output_size()
    }

    pub fn card_x(&self) -> usize {
        self.u_given_x.input_size()
    }

    /// Deterministic total order on the underlying matrices, used to break
    /// ties between equally good witnesses.
    pub fn lexicographic_key(&self) -> Vec<f64> {
        let mut key = Vec::new();
        for row in self.t_given_u.rows() {
            key.extend_from_slice(row);
        }
        for row in self.u_given_x.rows() {
            key.extend_from_slice(row);
        }
        key
    }
}

/// Per-symbol budgets of the two noiseless channels from Alice to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstraints {
    pub r1: f64,
    pub r2: f64,
}

impl RateConstraints {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !r1.is_finite() || !r2.is_finite() || r1 < 0.0 || r2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rates must be finite and nonnegative, got ({}, {})",
                r1, r2
            )));
        }
        Ok(Self { r1, r2 })
    }
}

/// The four conditional informations the region inequalities are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionTerms {
    /// I(U;Y|T)
    pub i_uy_t: f64,
    /// I(U;Z|T)
    pub i_uz_t: f64,
    /// I(U;X|Y)
    pub i_ux_y: f64,
    /// I(T;X|Y)
    pub i_tx_y: f64,
}

impl RegionTerms {
    pub fn mi_difference(&self) -> f64 {
        self.i_uy_t - self.i_uz_t
    }
}

/// A candidate operating point: the achieved key rate, its feasibility under
/// the requested budgets, and the auxiliary pair that witnesses it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub key_rate: f64,
    pub feasible: bool,
    pub witness: AuxiliaryPair,
    pub terms: RegionTerms,
}

/// Which feasibility rule to apply when scoring an auxiliary pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Joint key generation and distribution: r1 + r2 >= I(U;X|Y) and
    /// r1 >= I(T;X|Y).
    Joint,
    /// Separation baseline: the public channel alone carries the scheme,
    /// r1 >= I(U;X|Y).
    Separation,
}

/// Knobs of the multistart search and of the exhaustive grid oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once a full sweep improves the objective by less than this (bits).
    pub convergence_tol: f64,
    /// Simplex subdivisions used by the grid oracle.
    pub grid_resolution: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iterations: 5000,
            convergence_tol: 1e-6,
            grid_resolution: 16,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidParameter(
                "grid_resolution must be >= 2".into(),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "convergence_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}
