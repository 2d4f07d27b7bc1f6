//! Affine matrix expressions over scalarized decision variables.
//!
//! Matrix decision variables (symmetric, general rectangular, or scalar) are
//! flattened into a single vector of scalar unknowns by [`VarSpace`];
//! symmetric variables contribute their upper triangle in column-major
//! order, general variables all entries in column-major order. An
//! [`AffineMatrix`] is a matrix-valued expression `constant + Σᵢ xᵢ·Tᵢ`
//! stored as the constant plus a sparse map from scalar index to coefficient
//! matrix. All LMI blocks, objectives, and evaluated certificate quantities
//! in this crate are produced from this one representation, so the problem
//! the solver sees and the matrices the verifier reconstructs can never
//! drift apart.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonmat;

/// Shape class of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    /// Symmetric d×d; d(d+1)/2 scalars (upper triangle, column-major).
    Symmetric(usize),
    /// General r×c; r·c scalars (column-major).
    General(usize, usize),
    /// A single real scalar (1×1 as an expression).
    Scalar,
}

impl VarKind {
    pub fn scalar_len(&self) -> usize {
        match *self {
            VarKind::Symmetric(d) => d * (d + 1) / 2,
            VarKind::General(r, c) => r * c,
            VarKind::Scalar => 1,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            VarKind::Symmetric(d) => (d, d),
            VarKind::General(r, c) => (r, c),
            VarKind::Scalar => (1, 1),
        }
    }
}

/// A declared decision variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    /// First scalar index of this variable in the flattened vector.
    pub offset: usize,
}

/// Handle to a declared variable (index into the declaration list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Ordered registry of decision variables. Declaration order fixes the
/// scalar layout, which in turn fixes the exported problem files, so two
/// runs of the same builder produce byte-identical exports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarSpace {
    decls: Vec<VarDecl>,
    total: usize,
}

impl Serialize for VarSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.decls.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VarSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let decls = Vec::<VarDecl>::deserialize(d)?;
        let mut space = VarSpace::new();
        for decl in decls {
            let id = space.declare(&decl.name, decl.kind);
            if space.decl(id).offset != decl.offset {
                return Err(serde::de::Error::custom(format!(
                    "inconsistent scalar offset for variable {}",
                    decl.name
                )));
            }
        }
        Ok(space)
    }
}

impl VarSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a fresh variable. Names must be unique.
    pub fn declare(&mut self, name: &str, kind: VarKind) -> VarId {
        assert!(
            self.decls.iter().all(|d| d.name != name),
            "duplicate variable name {name}"
        );
        let decl = VarDecl {
            name: name.to_string(),
            kind,
            offset: self.total,
        };
        self.total += kind.scalar_len();
        self.decls.push(decl);
        VarId(self.decls.len() - 1)
    }

    pub fn id(&self, name: &str) -> Result<VarId> {
        self.decls
            .iter()
            .position(|d| d.name == name)
            .map(VarId)
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn decl(&self, id: VarId) -> &VarDecl {
        &self.decls[id.0]
    }

    pub fn decls(&self) -> &[VarDecl] {
        &self.decls
    }

    pub fn total_scalars(&self) -> usize {
        self.total
    }

    /// The variable as an affine expression of itself.
    pub fn expr(&self, id: VarId) -> AffineMatrix {
        let decl = self.decl(id);
        let (r, c) = decl.kind.dims();
        let mut terms = BTreeMap::new();
        for (local, unit) in unit_matrices(decl.kind).into_iter().enumerate() {
            terms.insert(decl.offset + local, unit);
        }
        AffineMatrix {
            constant: DMatrix::zeros(r, c),
            terms,
        }
    }

    /// Reassemble a variable's matrix value from the flat solution vector.
    pub fn extract(&self, id: VarId, x: &[f64]) -> DMatrix<f64> {
        let decl = self.decl(id);
        let (rows, cols) = decl.kind.dims();
        let mut m = DMatrix::zeros(rows, cols);
        match decl.kind {
            VarKind::Symmetric(d) => {
                let mut idx = decl.offset;
                for c in 0..d {
                    for r in 0..=c {
                        m[(r, c)] = x[idx];
                        m[(c, r)] = x[idx];
                        idx += 1;
                    }
                }
            }
            VarKind::General(r_dim, c_dim) => {
                let mut idx = decl.offset;
                for c in 0..c_dim {
                    for r in 0..r_dim {
                        m[(r, c)] = x[idx];
                        idx += 1;
                    }
                }
            }
            VarKind::Scalar => m[(0, 0)] = x[decl.offset],
        }
        m
    }

    /// All variables by name, reassembled from the flat solution vector.
    pub fn extract_all(&self, x: &[f64]) -> BTreeMap<String, DMatrix<f64>> {
        (0..self.decls.len())
            .map(|i| (self.decls[i].name.clone(), self.extract(VarId(i), x)))
            .collect()
    }

    /// Flatten a name→matrix assignment into the scalar vector (the inverse
    /// of [`VarSpace::extract_all`]). Symmetric variables are symmetrized on
    /// the way in; missing or mis-shaped entries are rejected.
    pub fn pack(&self, values: &BTreeMap<String, DMatrix<f64>>) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.total];
        for decl in &self.decls {
            let m = values
                .get(&decl.name)
                .ok_or_else(|| Error::MissingVariable(decl.name.clone()))?;
            let (rows, cols) = decl.kind.dims();
            if (m.nrows(), m.ncols()) != (rows, cols) {
                return Err(Error::DimensionMismatch(format!(
                    "variable {} must be {rows}x{cols}, got {}x{}",
                    decl.name,
                    m.nrows(),
                    m.ncols()
                )));
            }
            let mut idx = decl.offset;
            match decl.kind {
                VarKind::Symmetric(d) => {
                    for c in 0..d {
                        for r in 0..=c {
                            x[idx] = 0.5 * (m[(r, c)] + m[(c, r)]);
                            idx += 1;
                        }
                    }
                }
                VarKind::General(r_dim, c_dim) => {
                    for c in 0..c_dim {
                        for r in 0..r_dim {
                            x[idx] = m[(r, c)];
                            idx += 1;
                        }
                    }
                }
                VarKind::Scalar => x[idx] = m[(0, 0)],
            }
        }
        Ok(x)
    }
}

/// Per-scalar basis matrices of a variable, in scalar order: `X = Σ xᵢ Eᵢ`.
fn unit_matrices(kind: VarKind) -> Vec<DMatrix<f64>> {
    let (rows, cols) = kind.dims();
    let mut units = Vec::with_capacity(kind.scalar_len());
    match kind {
        VarKind::Symmetric(d) => {
            for c in 0..d {
                for r in 0..=c {
                    let mut e = DMatrix::zeros(d, d);
                    e[(r, c)] = 1.0;
                    e[(c, r)] = 1.0;
                    units.push(e);
                }
            }
        }
        VarKind::General(..) => {
            for c in 0..cols {
                for r in 0..rows {
                    let mut e = DMatrix::zeros(rows, cols);
                    e[(r, c)] = 1.0;
                    units.push(e);
                }
            }
        }
        VarKind::Scalar => units.push(DMatrix::from_element(1, 1, 1.0)),
    }
    units
}

/// Matrix-valued affine expression `constant + Σᵢ xᵢ·terms[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrix {
    pub constant: DMatrix<f64>,
    pub terms: BTreeMap<usize, DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawAffine {
    #[serde(with = "jsonmat")]
    constant: DMatrix<f64>,
    terms: Vec<(usize, Vec<Vec<f64>>)>,
}

impl Serialize for AffineMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawAffine {
            constant: self.constant.clone(),
            terms: self
                .terms
                .iter()
                .map(|(i, t)| (*i, jsonmat::to_rows(t)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawAffine::deserialize(d)?;
        let mut terms = BTreeMap::new();
        for (i, rows) in raw.terms {
            let t = jsonmat::from_rows(&rows).map_err(serde::de::Error::custom)?;
            if (t.nrows(), t.ncols()) != (raw.constant.nrows(), raw.constant.ncols()) {
                return Err(serde::de::Error::custom(
                    "affine term shape differs from constant",
                ));
            }
            terms.insert(i, t);
        }
        Ok(AffineMatrix {
            constant: raw.constant,
            terms,
        })
    }
}

impl AffineMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            constant: DMatrix::zeros(rows, cols),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_const(m: DMatrix<f64>) -> Self {
        Self {
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    /// True when no decision variable appears (all coefficients zero).
    pub fn is_constant(&self) -> bool {
        self.terms.values().all(|t| t.amax() == 0.0)
    }

    /// True when the constant and every coefficient matrix vanish.
    pub fn is_zero(&self) -> bool {
        (self.constant.nrows() == 0 || self.constant.amax() == 0.0) && self.is_constant()
    }

    pub fn add(&self, other: &AffineMatrix) -> AffineMatrix {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "affine addition shape mismatch"
        );
        let mut out = self.clone();
        out.constant += &other.constant;
        for (i, t) in &other.terms {
            out.terms
                .entry(*i)
                .and_modify(|m| *m += t)
                .or_insert_with(|| t.clone());
        }
        out
    }

    pub fn sub(&self, other: &AffineMatrix) -> AffineMatrix {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> AffineMatrix {
        AffineMatrix {
            constant: &self.constant * s,
            terms: self.terms.iter().map(|(i, t)| (*i, t * s)).collect(),
        }
    }

    pub fn transpose(&self) -> AffineMatrix {
        AffineMatrix {
            constant: self.constant.transpose(),
            terms: self
                .terms
                .iter()
                .map(|(i, t)| (*i, t.transpose()))
                .collect(),
        }
    }

    /// Symmetrization `self + selfᵀ`.
    pub fn sym(&self) -> AffineMatrix {
        self.add(&self.transpose())
    }

    /// `l · self` with a constant left factor.
    pub fn left_mul(&self, l: &DMatrix<f64>) -> AffineMatrix {
        assert_eq!(l.ncols(), self.rows(), "left multiply shape mismatch");
        AffineMatrix {
            constant: l * &self.constant,
            terms: self.terms.iter().map(|(i, t)| (*i, l * t)).collect(),
        }
    }

    /// `self · r` with a constant right factor.
    pub fn right_mul(&self, r: &DMatrix<f64>) -> AffineMatrix {
        assert_eq!(self.cols(), r.nrows(), "right multiply shape mismatch");
        AffineMatrix {
            constant: &self.constant * r,
            terms: self.terms.iter().map(|(i, t)| (*i, t * r)).collect(),
        }
    }

    /// `lᵀ · self · r`.
    pub fn sandwich(&self, l: &DMatrix<f64>, r: &DMatrix<f64>) -> AffineMatrix {
        self.left_mul(&l.transpose()).right_mul(r)
    }

    /// Congruence `lᵀ · self · l`.
    pub fn congruence(&self, l: &DMatrix<f64>) -> AffineMatrix {
        self.sandwich(l, l)
    }

    /// Contiguous sub-expression (like a matrix view).
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> AffineMatrix {
        AffineMatrix {
            constant: self.constant.view((r0, c0), (nr, nc)).into_owned(),
            terms: self
                .terms
                .iter()
                .map(|(i, t)| (*i, t.view((r0, c0), (nr, nc)).into_owned()))
                .filter(|(_, t)| t.amax() != 0.0)
                .collect(),
        }
    }

    /// Numeric value of the expression at a solution vector.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (i, t) in &self.terms {
            out += t * x[*i];
        }
        out
    }

    /// Largest symmetry defect over the constant and all coefficients; zero
    /// for expressions that are symmetric for every variable value.
    pub fn asymmetry(&self) -> f64 {
        let defect = |m: &DMatrix<f64>| (m - m.transpose()).amax();
        self.terms
            .values()
            .map(defect)
            .fold(defect(&self.constant), f64::max)
    }
}

/// Kronecker product of a constant with an affine expression.
pub fn kron(konst: &DMatrix<f64>, expr: &AffineMatrix) -> AffineMatrix {
    AffineMatrix {
        constant: konst.kronecker(&expr.constant),
        terms: expr
            .terms
            .iter()
            .map(|(i, t)| (*i, konst.kronecker(t)))
            .collect(),
    }
}

/// Constant matrix scaled by an affine scalar (1×1) expression.
pub fn scalar_times(scalar: &AffineMatrix, konst: &DMatrix<f64>) -> AffineMatrix {
    assert_eq!(
        (scalar.rows(), scalar.cols()),
        (1, 1),
        "scalar expression must be 1x1"
    );
    AffineMatrix {
        constant: konst * scalar.constant[(0, 0)],
        terms: scalar
            .terms
            .iter()
            .map(|(i, t)| (*i, konst * t[(0, 0)]))
            .collect(),
    }
}

/// Assemble an affine expression from a block grid (row-major rows of
/// blocks); the grid must have consistent block heights and widths.
pub fn from_block_rows(grid: &[Vec<AffineMatrix>]) -> AffineMatrix {
    assert!(!grid.is_empty(), "empty block grid");
    let row_heights: Vec<usize> = grid.iter().map(|row| row[0].rows()).collect();
    let col_widths: Vec<usize> = grid[0].iter().map(|b| b.cols()).collect();
    for (i, row) in grid.iter().enumerate() {
        assert_eq!(row.len(), col_widths.len(), "ragged block grid");
        for (j, b) in row.iter().enumerate() {
            assert_eq!(b.rows(), row_heights[i], "block height mismatch at ({i},{j})");
            assert_eq!(b.cols(), col_widths[j], "block width mismatch at ({i},{j})");
        }
    }
    let total_r: usize = row_heights.iter().sum();
    let total_c: usize = col_widths.iter().sum();
    let mut constant = DMatrix::zeros(total_r, total_c);
    let mut terms: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
    let mut r0 = 0;
    for (i, row) in grid.iter().enumerate() {
        let mut c0 = 0;
        for (j, b) in row.iter().enumerate() {
            constant
                .view_mut((r0, c0), (b.rows(), b.cols()))
                .copy_from(&b.constant);
            for (idx, t) in &b.terms {
                terms
                    .entry(*idx)
                    .or_insert_with(|| DMatrix::zeros(total_r, total_c))
                    .view_mut((r0, c0), (t.nrows(), t.ncols()))
                    .copy_from(t);
            }
            c0 += col_widths[j];
        }
        r0 += row_heights[i];
    }
    AffineMatrix { constant, terms }
}
