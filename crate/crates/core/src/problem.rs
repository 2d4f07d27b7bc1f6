//! Containers shared by the builders, the solver, and the verifier: plants
//! with optional performance channels, LMI blocks with strictness tags,
//! assembled SDP problems, and solved certificates.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineMatrix, VarKind, VarSpace};
use crate::error::{Error, Result};
use crate::jsonmat;
use crate::lti::StateSpace;
use crate::multiplier::{MultiplierRecipe, TestKind};
use crate::sdp::SolverReport;

/// Strict LMI blocks are implemented as ⪰ margin·I with
/// margin = STRICT_MARGIN_FACTOR · (1 + ‖constant term‖_F), so "strict"
/// is a testable numerical statement.
pub const STRICT_MARGIN_FACTOR: f64 = 1e-7;

/// Sense of an LMI block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlockSense {
    /// Expression must be ⪰ margin·I.
    StrictPsd { margin: f64 },
    /// Expression must be ⪰ 0 (redundant-check blocks use this).
    Psd,
    /// Expression must vanish identically.
    Zero,
}

/// A named affine matrix constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiBlock {
    pub name: String,
    pub sense: BlockSense,
    pub expr: AffineMatrix,
}

impl LmiBlock {
    /// Strict block expr ≻ 0, realized as expr ⪰ margin·I with the margin
    /// frozen at creation from the constant term's Frobenius norm.
    pub fn strict(name: &str, expr: AffineMatrix) -> Self {
        let margin = STRICT_MARGIN_FACTOR * (1.0 + expr.constant.norm());
        Self {
            name: name.to_string(),
            sense: BlockSense::StrictPsd { margin },
            expr,
        }
    }

    pub fn psd(name: &str, expr: AffineMatrix) -> Self {
        Self {
            name: name.to_string(),
            sense: BlockSense::Psd,
            expr,
        }
    }

    pub fn zero(name: &str, expr: AffineMatrix) -> Self {
        Self {
            name: name.to_string(),
            sense: BlockSense::Zero,
            expr,
        }
    }

    pub fn dim(&self) -> usize {
        self.expr.rows()
    }

    /// The strictness margin (0 for nonstrict and equality blocks).
    pub fn margin(&self) -> f64 {
        match self.sense {
            BlockSense::StrictPsd { margin } => margin,
            _ => 0.0,
        }
    }
}

/// Performance channel d→e of a partitioned plant
/// ẋ = Ax + Bw + B₂d, z = Cx + Dw + D₁₂d, e = C₂x + D₂₁w + D₂₂d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfChannel {
    #[serde(with = "jsonmat")]
    pub b2: DMatrix<f64>,
    #[serde(with = "jsonmat")]
    pub c2: DMatrix<f64>,
    #[serde(with = "jsonmat")]
    pub d12: DMatrix<f64>,
    #[serde(with = "jsonmat")]
    pub d21: DMatrix<f64>,
    #[serde(with = "jsonmat")]
    pub d22: DMatrix<f64>,
}

/// Plant in linear fractional form: the uncertainty channel w→z lives in
/// `sys` (ẋ = Ax + Bw, z = Cx + Dw), and an optional performance channel
/// d→e augments it with the partitioned matrices of [`PerfChannel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub sys: StateSpace,
    pub perf: Option<PerfChannel>,
}

#[derive(Serialize, Deserialize)]
struct RawPlant {
    sys: StateSpace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perf: Option<PerfChannel>,
}

impl Serialize for Plant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawPlant {
            sys: self.sys.clone(),
            perf: self.perf.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Plant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPlant::deserialize(d)?;
        Plant::new(raw.sys, raw.perf).map_err(serde::de::Error::custom)
    }
}

impl Plant {
    pub fn new(sys: StateSpace, perf: Option<PerfChannel>) -> Result<Self> {
        if let Some(p) = &perf {
            let (n, k, l) = (sys.state_dim(), sys.output_dim(), sys.input_dim());
            let nd = if p.b2.ncols() > 0 { p.b2.ncols() } else { p.d22.ncols() };
            let ne = if p.c2.nrows() > 0 { p.c2.nrows() } else { p.d22.nrows() };
            let shapes = [
                ("B2", &p.b2, n, nd),
                ("C2", &p.c2, ne, n),
                ("D12", &p.d12, k, nd),
                ("D21", &p.d21, ne, l),
                ("D22", &p.d22, ne, nd),
            ];
            for (name, m, rows, cols) in shapes {
                let ok = (m.nrows(), m.ncols()) == (rows, cols)
                    || (m.is_empty() && (rows == 0 || cols == 0));
                if !ok {
                    return Err(Error::DimensionMismatch(format!(
                        "performance block {name} must be {rows}x{cols}, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(Self { sys, perf })
    }

    pub fn without_perf(sys: StateSpace) -> Self {
        Self { sys, perf: None }
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.sys.state_dim()
    }

    /// Uncertainty input dimension (z, rows of C).
    pub fn k(&self) -> usize {
        self.sys.output_dim()
    }

    /// Uncertainty output dimension (w, columns of B).
    pub fn l(&self) -> usize {
        self.sys.input_dim()
    }

    /// Disturbance dimension of the performance channel (0 when absent).
    pub fn nd(&self) -> usize {
        self.perf.as_ref().map_or(0, |p| p.b2.ncols().max(p.d22.ncols()))
    }

    /// Error-output dimension of the performance channel (0 when absent).
    pub fn ne(&self) -> usize {
        self.perf.as_ref().map_or(0, |p| p.c2.nrows().max(p.d22.nrows()))
    }
}

/// Provenance a built problem carries along: the recipe and plant it came
/// from plus free-form notes (e.g. which parts of the assembly are standard
/// extensions rather than core constructions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildContext {
    pub recipe: MultiplierRecipe,
    pub plant: Plant,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl BuildContext {
    pub fn test_kind(&self) -> TestKind {
        self.recipe.test_kind
    }
}

/// A complete semidefinite problem: declared variables, affine LMI blocks,
/// and an optional linear objective (1×1 affine expression, minimized).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpProblem {
    pub vars: VarSpace,
    pub blocks: Vec<LmiBlock>,
    pub objective: Option<AffineMatrix>,
    pub context: BuildContext,
}

impl SdpProblem {
    /// Sanity pass over the assembled problem: symmetric expressions, known
    /// variables, shaped objective. Builders run this before returning.
    pub fn validate(&self) -> Result<()> {
        let total = self.vars.total_scalars();
        for b in &self.blocks {
            if b.expr.rows() != b.expr.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "block {} is {}x{}, not square",
                    b.name,
                    b.expr.rows(),
                    b.expr.cols()
                )));
            }
            if b.expr.asymmetry() > 1e-10 {
                return Err(Error::DimensionMismatch(format!(
                    "block {} has asymmetric expression (defect {:.2e})",
                    b.name,
                    b.expr.asymmetry()
                )));
            }
            if b.expr.terms.keys().any(|i| *i >= total) {
                return Err(Error::MissingVariable(format!(
                    "block {} references an undeclared scalar",
                    b.name
                )));
            }
        }
        if let Some(obj) = &self.objective {
            if (obj.rows(), obj.cols()) != (1, 1) {
                return Err(Error::DimensionMismatch(
                    "objective must be a scalar expression".into(),
                ));
            }
        }
        Ok(())
    }

    /// Find a block by name.
    pub fn block(&self, name: &str) -> Option<&LmiBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Checked variable declaration helper used by the builders.
    pub fn declare(&mut self, name: &str, kind: VarKind) {
        self.vars.declare(name, kind);
    }
}

/// Solved analysis certificate: the variable matrices of one test, the
/// performance level when an objective was present, and the solver's
/// quality report. Certificates are inputs to the independent verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub test_kind: TestKind,
    #[serde(with = "jsonmat::map")]
    pub variables: BTreeMap<String, DMatrix<f64>>,
    /// √(γ²) when the problem minimized an energy-gain bound.
    pub gamma: Option<f64>,
    pub report: SolverReport,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn variable(&self, name: &str) -> Result<&DMatrix<f64>> {
        self.variables
            .get(name)
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }
}
