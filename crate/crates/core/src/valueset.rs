//! Uncertainty value sets and membership tests.
//!
//! A [`ValueSet`] describes where the uncertainty's frequency response must
//! live, as the solution set of quadratic matrix-inequality forms built from
//! small symmetric data matrices. Five families are supported: a single
//! quadratic form on a repeated scalar (disks and half-planes), full-block
//! sets, finite intersections of scalar quadratic forms, LMI regions, and
//! equation-constrained (real parametric) scalars.
//!
//! Sign conditions on the data (r ≤ 0, R ⪯ 0) guarantee the convexity
//! properties that the analysis tests rely on for dynamic uncertainties;
//! they can be dropped with the `parametric` flag when the uncertainty is
//! known to be a constant real parameter.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonmat;

/// Default absolute tolerance on membership forms.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Which family of value sets the data describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    /// {v ∈ ℂ : [1; v]* P₀ [1; v] ≥ 0}, uncertainty v·I_k.
    RepeatedQuadratic,
    /// {V ∈ ℂ^{l×k} : [I; V]* P₀ [I; V] ⪰ 0}.
    FullBlock,
    /// {v ∈ ℂ : [1; v]* P_i [1; v] ≥ 0 for all i}, uncertainty v·I_k.
    Intersection,
    /// {v ∈ ℂ : [I_ν; vI_ν]* P₀ [I_ν; vI_ν] ⪰ 0}, uncertainty v·I_k.
    LmiRegion,
    /// RepeatedQuadratic restricted to real v (Im v = 0).
    EquationConstrained,
}

/// A candidate uncertainty value: a scalar for the repeated families or a
/// full complex block for [`SetKind::FullBlock`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValuePoint {
    Scalar(Complex64),
    Matrix(DMatrix<Complex64>),
}

impl From<Complex64> for ValuePoint {
    fn from(v: Complex64) -> Self {
        ValuePoint::Scalar(v)
    }
}

impl From<f64> for ValuePoint {
    fn from(v: f64) -> Self {
        ValuePoint::Scalar(Complex64::new(v, 0.0))
    }
}

/// Description of an uncertainty value set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSet {
    pub kind: SetKind,
    /// The defining symmetric data: `[P₀]` for single-form kinds, `[P₁..P_ν]`
    /// for intersections, `[P₀ ∈ 𝕊^{2ν}]` for LMI regions.
    #[serde(with = "jsonmat::vec")]
    pub p_blocks: Vec<DMatrix<f64>>,
    /// Repetition dimension k (the uncertainty is v·I_k for scalar kinds;
    /// the number of uncertainty input channels for FullBlock).
    pub rep_dim: usize,
    /// (k, l) for FullBlock sets; absent otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_dims: Option<(usize, usize)>,
    /// Number of constraints (Intersection) or region order (LmiRegion).
    pub nu: usize,
    /// When true, sign conditions (r ≤ 0 / R ⪯ 0) are not enforced; only
    /// valid when the uncertainty is a constant real parameter.
    #[serde(default)]
    pub parametric: bool,
}

/// Symmetry check with exact symmetrization of the admitted matrix.
fn accept_symmetric(p: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if p.nrows() != p.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    let skew = (&p - p.transpose()).norm();
    if skew > 1e-9 * (1.0 + p.norm()) {
        return Err(Error::InvalidSignature(format!(
            "{what} is not symmetric (asymmetry {skew:.2e})"
        )));
    }
    Ok((&p + p.transpose()) * 0.5)
}

impl ValueSet {
    /// Disk / half-plane on a scalar repeated k times: P₀ = [[q,s],[s,r]].
    pub fn repeated_quadratic(p0: DMatrix<f64>, rep_dim: usize, parametric: bool) -> Result<Self> {
        let p0 = accept_symmetric(p0, "P0")?;
        if p0.nrows() != 2 {
            return Err(Error::DimensionMismatch("P0 must be 2x2".into()));
        }
        if !parametric && p0[(1, 1)] > 1e-12 {
            return Err(Error::InvalidSignature(format!(
                "P0 entry r = {} must be nonpositive for non-parametric uncertainty",
                p0[(1, 1)]
            )));
        }
        Ok(Self {
            kind: SetKind::RepeatedQuadratic,
            p_blocks: vec![p0],
            rep_dim,
            block_dims: None,
            nu: 1,
            parametric,
        })
    }

    /// Full-block set on V ∈ ℂ^{l×k} with P₀ ∈ 𝕊^{k+l}.
    pub fn full_block(p0: DMatrix<f64>, k: usize, l: usize, parametric: bool) -> Result<Self> {
        let p0 = accept_symmetric(p0, "P0")?;
        if p0.nrows() != k + l {
            return Err(Error::DimensionMismatch(format!(
                "P0 must be {}x{} for block dims ({k},{l})",
                k + l,
                k + l
            )));
        }
        if !parametric {
            let r = p0.view((k, k), (l, l)).into_owned();
            let max = crate::lti::symmetric_max_eig(&r);
            if max > 1e-10 {
                return Err(Error::InvalidSignature(format!(
                    "lower-right block of P0 must be negative semidefinite (max eig {max:.2e})"
                )));
            }
        }
        Ok(Self {
            kind: SetKind::FullBlock,
            p_blocks: vec![p0],
            rep_dim: k,
            block_dims: Some((k, l)),
            nu: 1,
            parametric,
        })
    }

    /// Intersection of scalar quadratic-form sets, each P_i = [[q,s],[s,r]].
    pub fn intersection(
        p_blocks: Vec<DMatrix<f64>>,
        rep_dim: usize,
        parametric: bool,
    ) -> Result<Self> {
        if p_blocks.is_empty() {
            return Err(Error::DimensionMismatch(
                "intersection needs at least one form".into(),
            ));
        }
        let mut checked = Vec::with_capacity(p_blocks.len());
        for (i, p) in p_blocks.into_iter().enumerate() {
            let p = accept_symmetric(p, &format!("P{}", i + 1))?;
            if p.nrows() != 2 {
                return Err(Error::DimensionMismatch(format!("P{} must be 2x2", i + 1)));
            }
            if !parametric && p[(1, 1)] > 1e-12 {
                return Err(Error::InvalidSignature(format!(
                    "P{} entry (2,2) = {} must be nonpositive for non-parametric uncertainty",
                    i + 1,
                    p[(1, 1)]
                )));
            }
            checked.push(p);
        }
        let nu = checked.len();
        Ok(Self {
            kind: SetKind::Intersection,
            p_blocks: checked,
            rep_dim,
            block_dims: None,
            nu,
            parametric,
        })
    }

    /// LMI region {v : Q + vS + v̄Sᵀ + |v|²R ⪰ 0} with P₀ = [[Q,S],[Sᵀ,R]]
    /// of size 2ν, applied to a scalar repeated k times.
    pub fn lmi_region(p0: DMatrix<f64>, nu: usize, rep_dim: usize, parametric: bool) -> Result<Self> {
        let p0 = accept_symmetric(p0, "P0")?;
        if nu == 0 || p0.nrows() != 2 * nu {
            return Err(Error::DimensionMismatch(format!(
                "P0 must be {}x{} for region order {nu}",
                2 * nu,
                2 * nu
            )));
        }
        if !parametric {
            let r = p0.view((nu, nu), (nu, nu)).into_owned();
            let max = crate::lti::symmetric_max_eig(&r);
            if max > 1e-10 {
                return Err(Error::InvalidSignature(format!(
                    "R block of P0 must be negative semidefinite (max eig {max:.2e})"
                )));
            }
        }
        Ok(Self {
            kind: SetKind::LmiRegion,
            p_blocks: vec![p0],
            rep_dim,
            block_dims: None,
            nu,
            parametric,
        })
    }

    /// Scalar quadratic-form set restricted to the real axis.
    pub fn equation_constrained(
        p0: DMatrix<f64>,
        rep_dim: usize,
        parametric: bool,
    ) -> Result<Self> {
        let mut set = Self::repeated_quadratic(p0, rep_dim, parametric)?;
        set.kind = SetKind::EquationConstrained;
        Ok(set)
    }

    /// Uncertainty input dimension k (columns of Δ's frequency response).
    pub fn k(&self) -> usize {
        self.rep_dim
    }

    /// Uncertainty output dimension l (rows of Δ's frequency response);
    /// equals k for all scalar kinds.
    pub fn l(&self) -> usize {
        match self.block_dims {
            Some((_, l)) => l,
            None => self.rep_dim,
        }
    }

    /// The (Q, S, R) blocks of an LMI region's data matrix.
    pub fn lmi_region_blocks(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let p0 = &self.p_blocks[0];
        let nu = self.nu;
        (
            p0.view((0, 0), (nu, nu)).into_owned(),
            p0.view((0, nu), (nu, nu)).into_owned(),
            p0.view((nu, nu), (nu, nu)).into_owned(),
        )
    }

    /// Values of the defining scalar quadratic forms at v, one per data
    /// block: [1; v]* P_i [1; v] = q_i + 2 s_i Re v + r_i |v|².
    pub fn scalar_forms(&self, v: Complex64) -> Result<Vec<f64>> {
        match self.kind {
            SetKind::RepeatedQuadratic | SetKind::Intersection | SetKind::EquationConstrained => {
                Ok(self
                    .p_blocks
                    .iter()
                    .map(|p| p[(0, 0)] + 2.0 * p[(0, 1)] * v.re + p[(1, 1)] * v.norm_sqr())
                    .collect())
            }
            _ => Err(Error::UnsupportedSet(format!(
                "scalar forms are not defined for {:?}",
                self.kind
            ))),
        }
    }

    /// The Hermitian membership matrix for scalar v: the single form value
    /// embedded 1×1, or the LMI-region matrix Q + vS + v̄Sᵀ + |v|²R.
    fn scalar_membership_matrix(&self, v: Complex64) -> Result<DMatrix<Complex64>> {
        match self.kind {
            SetKind::LmiRegion => {
                let (q, s, r) = self.lmi_region_blocks();
                let nu = self.nu;
                let mut h = DMatrix::<Complex64>::zeros(nu, nu);
                for i in 0..nu {
                    for j in 0..nu {
                        h[(i, j)] = Complex64::new(q[(i, j)], 0.0)
                            + v * s[(i, j)]
                            + v.conj() * s[(j, i)]
                            + v.norm_sqr() * r[(i, j)];
                    }
                }
                Ok(h)
            }
            _ => {
                let forms = self.scalar_forms(v)?;
                let min = forms.iter().cloned().fold(f64::INFINITY, f64::min);
                Ok(DMatrix::from_element(1, 1, Complex64::new(min, 0.0)))
            }
        }
    }

    /// Membership test with absolute tolerance on the defining forms.
    pub fn contains(&self, v: &ValuePoint, tol: f64) -> Result<bool> {
        match self.kind {
            SetKind::FullBlock => {
                let (k, l) = self.block_dims.expect("FullBlock sets carry block dims");
                let vm = match v {
                    ValuePoint::Matrix(m) => m.clone(),
                    ValuePoint::Scalar(s) if k == 1 && l == 1 => {
                        DMatrix::from_element(1, 1, *s)
                    }
                    ValuePoint::Scalar(_) => {
                        return Err(Error::DimensionMismatch(format!(
                            "full-block set of dims ({k},{l}) needs a matrix value"
                        )))
                    }
                };
                if vm.nrows() != l || vm.ncols() != k {
                    return Err(Error::DimensionMismatch(format!(
                        "value must be {l}x{k}, got {}x{}",
                        vm.nrows(),
                        vm.ncols()
                    )));
                }
                let p0 = self.p_blocks[0].map(|x| Complex64::new(x, 0.0));
                let mut iv = DMatrix::<Complex64>::zeros(k + l, k);
                iv.view_mut((0, 0), (k, k))
                    .copy_from(&DMatrix::identity(k, k));
                iv.view_mut((k, 0), (l, k)).copy_from(&vm);
                let form = iv.adjoint() * p0 * iv;
                Ok(crate::lti::hermitian_min_eig(&form) >= -tol)
            }
            _ => {
                let s = match v {
                    ValuePoint::Scalar(s) => *s,
                    ValuePoint::Matrix(m) if m.nrows() == 1 && m.ncols() == 1 => m[(0, 0)],
                    ValuePoint::Matrix(m) => {
                        return Err(Error::DimensionMismatch(format!(
                            "scalar value set cannot test a {}x{} block",
                            m.nrows(),
                            m.ncols()
                        )))
                    }
                };
                if self.kind == SetKind::EquationConstrained && s.im.abs() > tol {
                    return Ok(false);
                }
                let h = self.scalar_membership_matrix(s)?;
                Ok(crate::lti::hermitian_min_eig(&h) >= -tol)
            }
        }
    }

    /// Points on the boundary of the scalar set, suitable for plotting.
    ///
    /// For a single quadratic form this is `count` points on the defining
    /// circle (anchored at angle 0) or line; for intersections, each form's
    /// circle/line is sampled with `count` points and clipped against the
    /// other constraints (slack 1e−12); for LMI regions the boundary is
    /// located by ray-marching from an interior point. Degenerate sets with
    /// empty boundary produce an empty list.
    pub fn boundary_samples(&self, count: usize) -> Result<Vec<Complex64>> {
        match self.kind {
            SetKind::FullBlock => Err(Error::UnsupportedSet(
                "boundary sampling is not defined for full-block sets".into(),
            )),
            SetKind::RepeatedQuadratic | SetKind::EquationConstrained => {
                Ok(form_zero_samples(&self.p_blocks[0], count))
            }
            SetKind::Intersection => {
                let mut out = Vec::new();
                for (i, p) in self.p_blocks.iter().enumerate() {
                    for cand in form_zero_samples(p, count) {
                        let keep = self.p_blocks.iter().enumerate().all(|(j, pj)| {
                            if i == j {
                                return true;
                            }
                            pj[(0, 0)]
                                + 2.0 * pj[(0, 1)] * cand.re
                                + pj[(1, 1)] * cand.norm_sqr()
                                >= -1e-12
                        });
                        if keep {
                            out.push(cand);
                        }
                    }
                }
                Ok(out)
            }
            SetKind::LmiRegion => self.lmi_region_boundary(count),
        }
    }

    /// Ray-march boundary search for LMI regions: pick the grid point with
    /// the largest membership margin as the center, then bisect along rays.
    fn lmi_region_boundary(&self, count: usize) -> Result<Vec<Complex64>> {
        let margin = |v: Complex64| -> f64 {
            crate::lti::hermitian_min_eig(&self.scalar_membership_matrix(v).unwrap())
        };
        let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
        for i in -12..=12 {
            for j in -12..=12 {
                let v = Complex64::new(i as f64 * 0.25, j as f64 * 0.25);
                let m = margin(v);
                if m > best.0 {
                    best = (m, v);
                }
            }
        }
        if best.0 <= 0.0 {
            return Ok(Vec::new());
        }
        let center = best.1;
        let mut out = Vec::with_capacity(count);
        for idx in 0..count {
            let theta = 2.0 * std::f64::consts::PI * idx as f64 / count.max(1) as f64;
            let dir = Complex64::new(theta.cos(), theta.sin());
            // Expand until outside (or give up: unbounded direction).
            let mut hi = 1e-3;
            while margin(center + hi * dir) >= 0.0 {
                hi *= 2.0;
                if hi > 1e6 {
                    break;
                }
            }
            if hi > 1e6 {
                continue;
            }
            let mut lo = 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if margin(center + mid * dir) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(center + lo * dir);
        }
        Ok(out)
    }
}

/// Build the set {v·I_k} described by an intersection of scalar quadratic
/// forms. A single form degenerates to plain disk/half-plane membership.
pub fn equivalent_intersection(
    p_blocks: Vec<DMatrix<f64>>,
    rep_dim: usize,
    parametric: bool,
) -> Result<ValueSet> {
    ValueSet::intersection(p_blocks, rep_dim, parametric)
}

/// `count` points on the zero set of q + 2s·Re v + r·|v|²: a circle of
/// center −s/r for r ≠ 0 (any sign), a vertical line for r = 0, s ≠ 0.
fn form_zero_samples(p: &DMatrix<f64>, count: usize) -> Vec<Complex64> {
    let (q, s, r) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
    if r.abs() > 1e-14 {
        let center = -s / r;
        let rad_sq = (s * s - q * r) / (r * r);
        if rad_sq < 0.0 {
            return Vec::new();
        }
        let radius = rad_sq.sqrt();
        (0..count)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / count.max(1) as f64;
                Complex64::new(center + radius * theta.cos(), radius * theta.sin())
            })
            .collect()
    } else if s.abs() > 1e-14 {
        // Line Re v = −q/(2s); sample symmetrically around the real axis.
        let x0 = -q / (2.0 * s);
        let span = 1.0 + x0.abs();
        (0..count)
            .map(|i| {
                let t = if count > 1 {
                    -span + 2.0 * span * i as f64 / (count - 1) as f64
                } else {
                    0.0
                };
                Complex64::new(x0, t)
            })
            .collect()
    } else {
        Vec::new()
    }
}
