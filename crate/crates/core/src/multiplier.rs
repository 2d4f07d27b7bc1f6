//! Basis filters, outer factors, and the multiplier structures of each
//! analysis test: which variables exist, how they form the middle matrix of
//! the multiplier Π = Ψ*PΨ, which terminal-cost matrix they induce, and the
//! filter-positivity constraints that tie middle matrix and terminal cost
//! together.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::affine::{self, AffineMatrix, VarKind, VarSpace};
use crate::error::{Error, Result};
use crate::lti::{self, StateSpace};
use crate::problem::LmiBlock;
use crate::valueset::{SetKind, ValueSet};

/// Which basis structure a filter realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFamily {
    /// ψ(s) = [1, 1/(s+α), …, 1/(s+α)^ν]ᵀ ⊗ I_k (k-channel repeated scalar).
    Repeated,
    /// The same column with a single channel; used per-channel by the
    /// full-block outer factor.
    SisoColumn,
}

/// The analysis test a recipe builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    /// Static multiplier P₀ ⊗ M on a repeated-scalar quadratic set.
    StaticRepeated,
    /// Static multiplier τ·P₀ on a full-block set.
    StaticFullBlock,
    /// Static vec-trick multiplier on an LMI-region set.
    LmiRegionStatic,
    /// Dynamic multiplier Ψ*(P₀⊗M)Ψ on a repeated-scalar quadratic set.
    DynRepeated,
    /// Dynamic multiplier on a full-block set (per-channel scalar filter).
    DynFullBlock,
    /// Dynamic sum Σ Ψ*(Pᵢ⊗Mᵢ)Ψ on an intersection set.
    DynIntersection,
    /// Dynamic vec-trick multiplier on an LMI-region set.
    LmiRegionDynamic,
    /// Dynamic repeated-scalar multiplier with the extra skew/equality
    /// structure available for real (equation-constrained) scalars.
    EquationConstrained,
}

impl TestKind {
    pub fn is_dynamic(&self) -> bool {
        matches!(
            self,
            TestKind::DynRepeated
                | TestKind::DynFullBlock
                | TestKind::DynIntersection
                | TestKind::LmiRegionDynamic
                | TestKind::EquationConstrained
        )
    }

    fn expected_set_kind(&self) -> SetKind {
        match self {
            TestKind::StaticRepeated | TestKind::DynRepeated => SetKind::RepeatedQuadratic,
            TestKind::StaticFullBlock | TestKind::DynFullBlock => SetKind::FullBlock,
            TestKind::LmiRegionStatic | TestKind::LmiRegionDynamic => SetKind::LmiRegion,
            TestKind::DynIntersection => SetKind::Intersection,
            TestKind::EquationConstrained => SetKind::EquationConstrained,
        }
    }
}

/// Stable basis filter ψ together with the parameters it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisFilter {
    pub psi: StateSpace,
    pub alpha: f64,
    /// Number of non-constant basis functions ν (m_ψ = (ν+1)·channels).
    pub order: usize,
    /// Channels the realization repeats (k for the repeated family, 1 for
    /// the SISO column).
    pub channel_dim: usize,
    pub family: FilterFamily,
}

impl BasisFilter {
    /// Wrap a caller-supplied realization: any stable ψ with the right
    /// input/output counts is admissible (a Hurwitz A_ψ is all the
    /// analysis relies on), so bases other than repeated first-order poles
    /// can be injected here.
    pub fn from_raw(
        psi: StateSpace,
        alpha: f64,
        order: usize,
        channel_dim: usize,
        family: FilterFamily,
    ) -> Result<Self> {
        let channels = match family {
            FilterFamily::Repeated => channel_dim,
            FilterFamily::SisoColumn => 1,
        };
        if psi.input_dim() != channels || psi.output_dim() != (order + 1) * channels {
            return Err(Error::DimensionMismatch(format!(
                "filter must map {channels} inputs to {} outputs, got {}→{}",
                (order + 1) * channels,
                psi.input_dim(),
                psi.output_dim()
            )));
        }
        if !lti::is_hurwitz(&psi.a) {
            return Err(Error::InvalidSignature(
                "filter state matrix must be Hurwitz".into(),
            ));
        }
        Ok(Self {
            psi,
            alpha,
            order,
            channel_dim,
            family,
        })
    }

    /// Filter state dimension n_ψ.
    pub fn n_state(&self) -> usize {
        self.psi.state_dim()
    }

    /// Filter output dimension m_ψ.
    pub fn n_out(&self) -> usize {
        self.psi.output_dim()
    }
}

/// Realization of the basis column ψ(s) = [1, 1/(s+α), …, 1/(s+α)^ν]ᵀ,
/// Kronecker-repeated over `channel_dim` channels for the repeated family.
pub fn make_basis_filter(
    alpha: f64,
    nu_basis: usize,
    channel_dim: usize,
    family: FilterFamily,
) -> Result<BasisFilter> {
    if !(alpha > 0.0) {
        return Err(Error::Parse(format!(
            "filter pole alpha must be positive, got {alpha}"
        )));
    }
    let nu = nu_basis;
    // SISO column: states x_j = u/(s+α)^j form a chain.
    let mut a = DMatrix::zeros(nu, nu);
    for i in 0..nu {
        a[(i, i)] = -alpha;
        if i > 0 {
            a[(i, i - 1)] = 1.0;
        }
    }
    let mut b = DMatrix::zeros(nu, 1);
    if nu > 0 {
        b[(0, 0)] = 1.0;
    }
    let mut c = DMatrix::zeros(nu + 1, nu);
    for i in 0..nu {
        c[(i + 1, i)] = 1.0;
    }
    let mut d = DMatrix::zeros(nu + 1, 1);
    d[(0, 0)] = 1.0;
    let column = StateSpace::new(a, b, c, d)?;
    let psi = match family {
        FilterFamily::SisoColumn => column,
        FilterFamily::Repeated => {
            // ψ ⊗ I_k via the Kronecker identity on every realization block.
            let id = DMatrix::<f64>::identity(channel_dim, channel_dim);
            StateSpace {
                a: column.a.kronecker(&id),
                b: column.b.kronecker(&id),
                c: column.c.kronecker(&id),
                d: column.d.kronecker(&id),
            }
        }
    };
    BasisFilter::from_raw(psi, alpha, nu_basis, channel_dim, family)
}

/// A complete multiplier recipe: test kind, filter (absent for static
/// kinds), and the value set the uncertainty lives in.
///
/// JSON carries only the standard filter parameters (alpha, order, family);
/// a recipe wrapping a raw caller-supplied ψ realization does not survive a
/// JSON round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierRecipe {
    pub test_kind: TestKind,
    pub filter: Option<BasisFilter>,
    pub value_set: ValueSet,
}

#[derive(Serialize, Deserialize)]
struct RawFilterParams {
    alpha: f64,
    nu: usize,
    family: FilterFamily,
}

#[derive(Serialize, Deserialize)]
struct RawRecipe {
    test_kind: TestKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filter: Option<RawFilterParams>,
    value_set: ValueSet,
}

impl Serialize for MultiplierRecipe {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawRecipe {
            test_kind: self.test_kind,
            filter: self.filter.as_ref().map(|f| RawFilterParams {
                alpha: f.alpha,
                nu: f.order,
                family: f.family,
            }),
            value_set: self.value_set.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiplierRecipe {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawRecipe::deserialize(d)?;
        let filter = match raw.filter {
            None => None,
            Some(p) => {
                let channels = match p.family {
                    FilterFamily::Repeated => raw.value_set.k(),
                    FilterFamily::SisoColumn => 1,
                };
                Some(
                    make_basis_filter(p.alpha, p.nu, channels, p.family)
                        .map_err(serde::de::Error::custom)?,
                )
            }
        };
        MultiplierRecipe::new(raw.test_kind, filter, raw.value_set)
            .map_err(serde::de::Error::custom)
    }
}

impl MultiplierRecipe {
    pub fn new(
        test_kind: TestKind,
        filter: Option<BasisFilter>,
        value_set: ValueSet,
    ) -> Result<Self> {
        if value_set.kind != test_kind.expected_set_kind() {
            return Err(Error::UnsupportedCombination(format!(
                "{test_kind:?} requires a {:?} value set, got {:?}",
                test_kind.expected_set_kind(),
                value_set.kind
            )));
        }
        match (&filter, test_kind.is_dynamic()) {
            (None, true) => return Err(Error::StaticKind),
            (Some(_), false) => {
                return Err(Error::UnsupportedCombination(format!(
                    "{test_kind:?} is a static test and takes no filter"
                )))
            }
            _ => {}
        }
        if let Some(f) = &filter {
            let expected_family = match test_kind {
                TestKind::DynFullBlock => FilterFamily::SisoColumn,
                _ => FilterFamily::Repeated,
            };
            if f.family != expected_family {
                return Err(Error::UnsupportedCombination(format!(
                    "{test_kind:?} needs a {expected_family:?} filter, got {:?}",
                    f.family
                )));
            }
            if f.family == FilterFamily::Repeated && f.psi.input_dim() != value_set.k() {
                return Err(Error::DimensionMismatch(format!(
                    "filter repeats {} channels but the value set has k = {}",
                    f.psi.input_dim(),
                    value_set.k()
                )));
            }
        }
        Ok(Self {
            test_kind,
            filter,
            value_set,
        })
    }

    pub fn is_dynamic(&self) -> bool {
        self.test_kind.is_dynamic()
    }

    fn filter(&self) -> Result<&BasisFilter> {
        self.filter.as_ref().ok_or(Error::StaticKind)
    }

    /// Outer factor Ψ: diag(ψ, ψ) for the repeated-scalar kinds, or
    /// diag(I_k⊗ψ, I_l⊗ψ) for the full-block kind.
    pub fn outer_factor(&self) -> Result<StateSpace> {
        let f = self.filter()?;
        Ok(match self.test_kind {
            TestKind::DynFullBlock => {
                let (k, l) = (self.value_set.k(), self.value_set.l());
                lti::diag_join(&lti::kron_left(k, &f.psi), &lti::kron_left(l, &f.psi))
            }
            _ => lti::diag_join(&f.psi, &f.psi),
        })
    }

    /// Static tests have an identity outer factor of matching width.
    pub fn outer_factor_or_identity(&self) -> StateSpace {
        match self.outer_factor() {
            Ok(psi) => psi,
            Err(_) => StateSpace::identity(self.value_set.k() + self.value_set.l()),
        }
    }

    /// Middle-matrix side length.
    pub fn middle_dim(&self) -> usize {
        self.outer_factor_or_identity().output_dim()
    }

    /// Decision variables this recipe introduces, in declaration order.
    pub fn variable_shapes(&self) -> Vec<(String, VarKind)> {
        let set = &self.value_set;
        match self.test_kind {
            TestKind::StaticRepeated => vec![("M".into(), VarKind::Symmetric(set.k()))],
            TestKind::StaticFullBlock => vec![("tau".into(), VarKind::Scalar)],
            TestKind::LmiRegionStatic => {
                vec![("M".into(), VarKind::Symmetric(set.nu * set.k()))]
            }
            TestKind::DynRepeated | TestKind::DynFullBlock => {
                let f = self.filter.as_ref().expect("dynamic recipe has a filter");
                vec![
                    ("M".into(), VarKind::Symmetric(f.n_out())),
                    ("Y".into(), VarKind::Symmetric(f.n_state())),
                ]
            }
            TestKind::DynIntersection => {
                let f = self.filter.as_ref().expect("dynamic recipe has a filter");
                let mut shapes = Vec::new();
                for i in 1..=set.nu {
                    shapes.push((format!("M{i}"), VarKind::Symmetric(f.n_out())));
                }
                for i in 1..=set.nu {
                    shapes.push((format!("Y{i}"), VarKind::Symmetric(f.n_state())));
                }
                shapes
            }
            TestKind::LmiRegionDynamic => {
                let f = self.filter.as_ref().expect("dynamic recipe has a filter");
                vec![
                    ("M".into(), VarKind::Symmetric(set.nu * f.n_out())),
                    ("Y".into(), VarKind::Symmetric(set.nu * f.n_state())),
                ]
            }
            TestKind::EquationConstrained => {
                let f = self.filter.as_ref().expect("dynamic recipe has a filter");
                vec![
                    ("M".into(), VarKind::Symmetric(f.n_out())),
                    ("Y".into(), VarKind::Symmetric(f.n_state())),
                    ("Z".into(), VarKind::Symmetric(f.n_state())),
                    ("N".into(), VarKind::General(f.n_out(), f.n_out())),
                ]
            }
        }
    }

    /// Names and side lengths of the variables entering the terminal cost.
    pub fn terminal_shapes(&self) -> Vec<(String, usize)> {
        let n_psi = self.filter.as_ref().map_or(0, |f| f.n_state());
        match self.test_kind {
            TestKind::StaticRepeated
            | TestKind::StaticFullBlock
            | TestKind::LmiRegionStatic => vec![],
            TestKind::DynRepeated | TestKind::DynFullBlock => vec![("Y".into(), n_psi)],
            TestKind::DynIntersection => (1..=self.value_set.nu)
                .map(|i| (format!("Y{i}"), n_psi))
                .collect(),
            TestKind::LmiRegionDynamic => vec![("Y".into(), self.value_set.nu * n_psi)],
            TestKind::EquationConstrained => {
                vec![("Y".into(), n_psi), ("Z".into(), n_psi)]
            }
        }
    }

    /// The middle matrix of Π = Ψ*PΨ as an affine expression in the
    /// recipe's declared variables.
    pub fn middle_affine(&self, space: &VarSpace) -> Result<AffineMatrix> {
        let set = &self.value_set;
        match self.test_kind {
            TestKind::StaticRepeated | TestKind::DynRepeated | TestKind::DynFullBlock => {
                let m = space.expr(space.id("M")?);
                Ok(affine::kron(&set.p_blocks[0], &m))
            }
            TestKind::StaticFullBlock => {
                let tau = space.expr(space.id("tau")?);
                Ok(affine::scalar_times(&tau, &set.p_blocks[0]))
            }
            TestKind::LmiRegionStatic => {
                let m = space.expr(space.id("M")?);
                vec_trick_affine(&set.p_blocks[0], &m, set.nu, set.k())
            }
            TestKind::DynIntersection => {
                let mut acc: Option<AffineMatrix> = None;
                for i in 1..=set.nu {
                    let m = space.expr(space.id(&format!("M{i}"))?);
                    let term = affine::kron(&set.p_blocks[i - 1], &m);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term),
                    });
                }
                Ok(acc.expect("intersection sets have at least one form"))
            }
            TestKind::LmiRegionDynamic => {
                let f = self.filter()?;
                let m = space.expr(space.id("M")?);
                vec_trick_affine(&set.p_blocks[0], &m, set.nu, f.n_out())
            }
            TestKind::EquationConstrained => {
                let m = space.expr(space.id("M")?);
                let n = space.expr(space.id("N")?);
                let d = n.rows();
                let zero = AffineMatrix::zeros(d, d);
                let skew_part = affine::from_block_rows(&[
                    vec![zero.clone(), n.clone()],
                    vec![n.transpose(), zero],
                ]);
                Ok(affine::kron(&set.p_blocks[0], &m).add(&skew_part))
            }
        }
    }

    /// The terminal-cost matrix as an affine expression (0×0 for static
    /// kinds, whose filter has no state).
    pub fn terminal_affine(&self, space: &VarSpace) -> Result<AffineMatrix> {
        let set = &self.value_set;
        match self.test_kind {
            TestKind::StaticRepeated
            | TestKind::StaticFullBlock
            | TestKind::LmiRegionStatic => Ok(AffineMatrix::zeros(0, 0)),
            TestKind::DynRepeated | TestKind::DynFullBlock => {
                let y = space.expr(space.id("Y")?);
                Ok(affine::kron(&set.p_blocks[0], &y))
            }
            TestKind::DynIntersection => {
                let mut acc: Option<AffineMatrix> = None;
                for i in 1..=set.nu {
                    let y = space.expr(space.id(&format!("Y{i}"))?);
                    let term = affine::kron(&set.p_blocks[i - 1], &y);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term),
                    });
                }
                Ok(acc.expect("intersection sets have at least one form"))
            }
            TestKind::LmiRegionDynamic => {
                let f = self.filter()?;
                let y = space.expr(space.id("Y")?);
                vec_trick_affine(&set.p_blocks[0], &y, set.nu, f.n_state())
            }
            TestKind::EquationConstrained => {
                let y = space.expr(space.id("Y")?);
                let z = space.expr(space.id("Z")?).scale(0.5);
                let d = z.rows();
                let zero = AffineMatrix::zeros(d, d);
                let half_z =
                    affine::from_block_rows(&[vec![zero.clone(), z.clone()], vec![z, zero]]);
                Ok(affine::kron(&set.p_blocks[0], &y).add(&half_z))
            }
        }
    }

    /// A scratch variable space holding exactly this recipe's variables.
    fn own_space(&self) -> VarSpace {
        let mut space = VarSpace::new();
        for (name, kind) in self.variable_shapes() {
            space.declare(&name, kind);
        }
        space
    }

    /// Numeric middle matrix at solved variable values.
    pub fn middle_matrix(&self, solved: &BTreeMap<String, DMatrix<f64>>) -> Result<DMatrix<f64>> {
        let space = self.own_space();
        let x = space.pack(solved)?;
        Ok(self.middle_affine(&space)?.eval(&x))
    }

    /// Numeric terminal-cost matrix at solved variable values, of size equal
    /// to the outer factor's state dimension.
    pub fn terminal_cost(&self, solved: &BTreeMap<String, DMatrix<f64>>) -> Result<DMatrix<f64>> {
        let mut space = VarSpace::new();
        let needed: Vec<String> = self.terminal_shapes().iter().map(|(n, _)| n.clone()).collect();
        for (name, kind) in self.variable_shapes() {
            if needed.contains(&name) {
                space.declare(&name, kind);
            }
        }
        let subset: BTreeMap<String, DMatrix<f64>> = needed
            .iter()
            .map(|n| {
                solved
                    .get(n)
                    .map(|m| (n.clone(), m.clone()))
                    .ok_or_else(|| Error::MissingVariable(n.clone()))
            })
            .collect::<Result<_>>()?;
        let x = space.pack(&subset)?;
        Ok(self.terminal_affine(&space)?.eval(&x))
    }
}

/// Congruence (I₂ ⊗ vec(I_ν) ⊗ I_d)ᵀ (P₀⊗M) (I₂ ⊗ vec(I_ν) ⊗ I_d) without
/// forming the Kronecker product: block (α,β) of the 2d×2d result is
/// Σ_{a,b} (P₀ block αβ)_{ab} · M^{ab}, with M^{ab} the (a,b) d×d block.
pub fn vec_trick_affine(
    p0: &DMatrix<f64>,
    m: &AffineMatrix,
    nu: usize,
    d: usize,
) -> Result<AffineMatrix> {
    if p0.nrows() != 2 * nu || p0.ncols() != 2 * nu {
        return Err(Error::DimensionMismatch(format!(
            "P0 must be {0}x{0} for region order {nu}",
            2 * nu
        )));
    }
    if m.rows() != nu * d || m.cols() != nu * d {
        return Err(Error::DimensionMismatch(format!(
            "middle variable must be {0}x{0}, got {1}x{2}",
            nu * d,
            m.rows(),
            m.cols()
        )));
    }
    let mut grid = vec![vec![AffineMatrix::zeros(d, d), AffineMatrix::zeros(d, d)], vec![
        AffineMatrix::zeros(d, d),
        AffineMatrix::zeros(d, d),
    ]];
    for alpha in 0..2 {
        for beta in 0..2 {
            let mut acc = AffineMatrix::zeros(d, d);
            for a in 0..nu {
                for b in 0..nu {
                    let coeff = p0[(alpha * nu + a, beta * nu + b)];
                    if coeff != 0.0 {
                        acc = acc.add(&m.block(a * d, b * d, d, d).scale(coeff));
                    }
                }
            }
            grid[alpha][beta] = acc;
        }
    }
    Ok(affine::from_block_rows(&grid))
}

/// Numeric vec-trick middle matrix P(P₀, M) for a concrete symmetric M; the
/// block dimension d is inferred from the sizes of P₀ and M.
pub fn lmi_region_middle(p0: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if p0.nrows() != p0.ncols() || p0.nrows() % 2 != 0 || p0.nrows() == 0 {
        return Err(Error::DimensionMismatch(
            "P0 must be square of even positive size".into(),
        ));
    }
    let nu = p0.nrows() / 2;
    if m.nrows() != m.ncols() || m.nrows() % nu != 0 {
        return Err(Error::DimensionMismatch(format!(
            "M must be square with side divisible by {nu}"
        )));
    }
    let d = m.nrows() / nu;
    let expr = vec_trick_affine(p0, &AffineMatrix::from_const(m.clone()), nu, d)?;
    Ok(expr.eval(&[]))
}

/// The two congruence factors of the filter-positivity constraint:
/// F1 = [I 0; A_ψ B_ψ] (acting on [0 Y; Y 0]) and F2 = [C_ψ D_ψ]
/// (acting on M), both over the signal (ξ_ψ, input).
fn kyp_factors(psi: &StateSpace) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = psi.state_dim();
    let m_in = psi.input_dim();
    let f1 = lti::blkstack(&[
        &[
            &DMatrix::identity(n, n),
            &DMatrix::zeros(n, m_in),
        ],
        &[&psi.a, &psi.b],
    ]);
    let f2 = lti::hstack(&[&psi.c, &psi.d]);
    (f1, f2)
}

fn off_diag(expr: &AffineMatrix) -> AffineMatrix {
    let d = expr.rows();
    let zero = AffineMatrix::zeros(d, d);
    affine::from_block_rows(&[vec![zero.clone(), expr.clone()], vec![expr.clone(), zero]])
}

/// KYP form F1ᵀ[0 Y; Y 0]F1 + F2ᵀ·middle·F2 for a given realization.
fn kyp_expr(
    psi: &StateSpace,
    y: &AffineMatrix,
    middle: &AffineMatrix,
) -> Result<AffineMatrix> {
    if y.rows() != psi.state_dim() || middle.rows() != psi.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "positivity constraint needs Y of size {} and M of size {}, got {} and {}",
            psi.state_dim(),
            psi.output_dim(),
            y.rows(),
            middle.rows()
        )));
    }
    let (f1, f2) = kyp_factors(psi);
    Ok(off_diag(y).congruence(&f1).add(&middle.congruence(&f2)))
}

/// Filter-positivity constraint: the strict LMI of size n_ψ+k tying (M, Y)
/// to the filter, which degenerates to M ≻ 0 for a static filter.
pub fn positivity_constraint(
    filter: &BasisFilter,
    space: &VarSpace,
    m_name: &str,
    y_name: &str,
) -> Result<LmiBlock> {
    let m = space.expr(space.id(m_name)?);
    let y = space.expr(space.id(y_name)?);
    let expr = kyp_expr(&filter.psi, &y, &m)?;
    Ok(LmiBlock::strict(&format!("pos_{m_name}"), expr))
}

/// The ν-fold variant used with LMI-region middle matrices: the same form
/// built on (I_ν⊗A_ψ, I_ν⊗B_ψ, I_ν⊗C_ψ, I_ν⊗D_ψ), with M ∈ 𝕊^{ν·m_ψ} and
/// Y ∈ 𝕊^{ν·n_ψ}.
pub fn positivity_constraint_region(
    filter: &BasisFilter,
    nu: usize,
    space: &VarSpace,
    m_name: &str,
    y_name: &str,
) -> Result<LmiBlock> {
    let repeated = lti::kron_left(nu, &filter.psi);
    let m = space.expr(space.id(m_name)?);
    let y = space.expr(space.id(y_name)?);
    let expr = kyp_expr(&repeated, &y, &m)?;
    Ok(LmiBlock::strict(&format!("pos_{m_name}"), expr))
}

/// Equality companion for equation-constrained tests:
/// F1ᵀ[0 Z; Z 0]F1 + F2ᵀ(Nᵀ+N)F2 = 0.
pub fn equation_constraint(
    filter: &BasisFilter,
    space: &VarSpace,
    z_name: &str,
    n_name: &str,
) -> Result<LmiBlock> {
    let z = space.expr(space.id(z_name)?);
    let n_sym = space.expr(space.id(n_name)?).sym();
    let expr = kyp_expr(&filter.psi, &z, &n_sym)?;
    Ok(LmiBlock::zero("eq_filter", expr))
}
