//! Catalog of the three-dimensional symmetry reductions of the two-Killing
//! hyperheavenly equation: key-function forms, reduced ODEs, Abel forms,
//! printed discriminants and coordinate relations.

mod abel;
mod closed;
mod reduced;
mod seed;
mod solution;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use abel::{
    abel_coefficients, abel_cross_check, abel_rhs, abel_state_from_profile, coordinate_relation, integrate_abel,
    AbelSolution, RelationInput,
};
pub use closed::{
    a32_discriminant, a34_discriminant, a34_discriminant_t, discriminant_closed_form, ClosedForm,
};
pub use reduced::{master_residual, reduced_hh_residual};
pub use seed::{find_nondegenerate_seed, seed_discriminant, seed_state, SearchBox, SeedCertificate, SEED_MARGIN};
pub use solution::{
    integrate_a34_gq, integrate_case, key_function, profile_summary, KeyFunctionField, ProfileSample, ProfileSummary,
    ReducedSolution, SeedState,
};

/// Symmetry algebra of the third Killing vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseTag {
    A32,
    A33,
    A34,
    A35,
    A35Half,
    A36,
    A37,
}

impl CaseTag {
    pub const ALL: [CaseTag; 7] = [
        CaseTag::A32,
        CaseTag::A33,
        CaseTag::A34,
        CaseTag::A35,
        CaseTag::A35Half,
        CaseTag::A36,
        CaseTag::A37,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::A32 => "a32",
            CaseTag::A33 => "a33",
            CaseTag::A34 => "a34",
            CaseTag::A35 => "a35",
            CaseTag::A35Half => "a35half",
            CaseTag::A36 => "a36",
            CaseTag::A37 => "a37",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['_', ',', '-'], "");
        CaseTag::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| Error::Schema(format!("unknown case '{s}'")))
    }
}

/// Cosmological constant and the case-specific constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    #[serde(default, rename = "F0", skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, rename = "G0", skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
}

impl ModelParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            m0: None,
            alpha0: None,
            zeta0: None,
            z0: None,
            f0: None,
            g0: None,
        }
    }

    pub fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = Some(m0);
        self
    }

    pub fn with_alpha0(mut self, a: f64) -> Self {
        self.alpha0 = Some(a);
        self
    }

    pub fn with_zeta0(mut self, z: f64) -> Self {
        self.zeta0 = Some(z);
        self
    }

    pub fn with_z0(mut self, z: f64) -> Self {
        self.z0 = Some(z);
        self
    }

    pub fn with_f0_g0(mut self, f0: f64, g0: f64) -> Self {
        self.f0 = Some(f0);
        self.g0 = Some(g0);
        self
    }
}

/// Constants of the third Killing vector
/// `a0(p∂q + y∂x) + b0(q∂q − y∂y) + n0(q∂p + x∂y) + m0(p∂p − x∂x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    pub b0: f64,
    pub n0: f64,
    pub a0: f64,
    pub m0: f64,
}

impl StructureConstants {
    pub fn for_tag(tag: CaseTag, params: &ModelParams) -> Result<Self> {
        let c = |b0, n0, a0, m0| StructureConstants { b0, n0, a0, m0 };
        Ok(match tag {
            CaseTag::A32 => c(1.0, 0.0, 1.0, 1.0),
            CaseTag::A33 => c(1.0, 0.0, 0.0, 1.0),
            CaseTag::A34 => c(1.0, 0.0, 0.0, -1.0),
            CaseTag::A35 => c(1.0, 0.0, 0.0, require(params.m0, "m0")?),
            CaseTag::A35Half => c(1.0, 0.0, 0.0, -0.5),
            CaseTag::A36 => c(0.0, -1.0, 1.0, 0.0),
            CaseTag::A37 => {
                let a = require(params.alpha0, "alpha0")?;
                c(a, -1.0, 1.0, a)
            }
        })
    }
}

fn require(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Schema(format!("parameter {name} is required for this case")))
}

/// A validated case: algebra tag, parameters and structure constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraCase {
    pub tag: CaseTag,
    pub params: ModelParams,
    pub constants: StructureConstants,
}

impl AlgebraCase {
    pub fn new(tag: CaseTag, params: ModelParams) -> Result<Self> {
        let l = params.lambda;
        if !(l.is_finite() && l != 0.0) {
            return Err(Error::Schema("lambda must be finite and nonzero".into()));
        }
        let mut params = params;
        match tag {
            CaseTag::A35 => {
                let m0 = require(params.m0, "m0")?;
                if !(m0.abs() < 1.0 && m0 != 0.0 && m0 != -0.5) {
                    return Err(Error::Schema(format!(
                        "m0 = {m0} outside 0 < |m0| < 1, m0 ≠ -1/2"
                    )));
                }
            }
            CaseTag::A37 => {
                let a = require(params.alpha0, "alpha0")?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::Schema(format!("alpha0 = {a} must be positive")));
                }
            }
            CaseTag::A35Half => {
                params.zeta0.get_or_insert(0.0);
            }
            CaseTag::A33 => {
                let f0 = require(params.f0, "F0")?;
                if f0 == 0.0 || !f0.is_finite() {
                    return Err(Error::Schema("F0 must be nonzero".into()));
                }
                params.g0.get_or_insert(0.0);
            }
            _ => {}
        }
        Ok(Self {
            tag,
            params,
            constants: StructureConstants::for_tag(tag, &params)?,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    /// `α0` of the g-form; zero for A3,4 and A3,6.
    pub(crate) fn alpha0(&self) -> f64 {
        match self.tag {
            CaseTag::A37 => self.params.alpha0.unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub(crate) fn m0(&self) -> f64 {
        self.constants.m0
    }

    pub(crate) fn zeta0(&self) -> f64 {
        self.params.zeta0.unwrap_or(0.0)
    }

    /// `(ζ1, ζ2)` on the right of the master equation.
    pub fn master_constants(&self) -> (f64, f64) {
        match self.tag {
            CaseTag::A35Half => (0.0, -self.zeta0()),
            _ => (0.0, 0.0),
        }
    }
}
