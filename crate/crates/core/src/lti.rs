//! State-space algebra for continuous-time LTI systems.
//!
//! Provides the realization type [`StateSpace`], frequency evaluation on
//! ℝ ∪ {∞}, Hurwitz checks, series/diagonal/Kronecker composition, the
//! adjoint realization, and a fixed-step RK4 simulator with zero-order-hold
//! inputs and an optional quadratic-form accumulator. Compositions are not
//! reduced to minimal realizations; downstream consumers only rely on the
//! transfer behavior.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonmat;

/// State norm (entrywise) beyond which [`StateSpace::simulate`] aborts.
const BLOWUP_GUARD: f64 = 1e12;

/// Strictness margin for [`is_hurwitz`]: eigenvalues must satisfy
/// Re λ < −EPS_HURWITZ, so marginally stable matrices are rejected.
pub const EPS_HURWITZ: f64 = 1e-9;

/// A frequency point on the extended imaginary axis.
///
/// Infinity is a dedicated variant rather than an IEEE infinity so it never
/// enters matrix arithmetic; evaluation at `Infinity` returns the
/// feedthrough term directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Omega {
    Finite(f64),
    Infinity,
}

impl Omega {
    pub fn is_finite(&self) -> bool {
        matches!(self, Omega::Finite(_))
    }
}

/// Real state-space realization (A, B, C, D) of ẋ = Ax + Bu, y = Cx + Du.
///
/// `n = 0` is allowed and describes a static system with transfer `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawStateSpace {
    #[serde(with = "jsonmat")]
    a: DMatrix<f64>,
    #[serde(with = "jsonmat")]
    b: DMatrix<f64>,
    #[serde(with = "jsonmat")]
    c: DMatrix<f64>,
    #[serde(with = "jsonmat")]
    d: DMatrix<f64>,
}

impl Serialize for StateSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawStateSpace {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawStateSpace::deserialize(d)?;
        StateSpace::new(raw.a, raw.b, raw.c, raw.d).map_err(serde::de::Error::custom)
    }
}

/// Reshape an empty matrix to an expected degenerate shape; reject anything
/// else that does not match. Nested-array JSON cannot distinguish 0×m from
/// 0×0, so shapes with a zero dimension are recovered from context.
fn conform(m: DMatrix<f64>, rows: usize, cols: usize, name: &str) -> Result<DMatrix<f64>> {
    if m.nrows() == rows && m.ncols() == cols {
        return Ok(m);
    }
    if m.is_empty() && (rows == 0 || cols == 0) {
        return Ok(DMatrix::zeros(rows, cols));
    }
    Err(Error::DimensionMismatch(format!(
        "{name} must be {rows}x{cols}, got {}x{}",
        m.nrows(),
        m.ncols()
    )))
}

impl StateSpace {
    /// Dimension-checked constructor. Empty matrices are conformed to the
    /// degenerate shape implied by the other blocks (e.g. B becomes 0×m for
    /// a static system), so JSON round-trips of static systems work.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let m_in = if d.ncols() > 0 { d.ncols() } else { b.ncols() };
        let m_out = if d.nrows() > 0 { d.nrows() } else { c.nrows() };
        let b = conform(b, n, m_in, "B")?;
        let c = conform(c, m_out, n, "C")?;
        let d = conform(d, m_out, m_in, "D")?;
        Ok(Self { a, b, c, d })
    }

    /// A static system y = Du (state dimension zero).
    pub fn from_static(d: DMatrix<f64>) -> Self {
        let (p, m) = (d.nrows(), d.ncols());
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    /// Identity system of the given width.
    pub fn identity(dim: usize) -> Self {
        Self::from_static(DMatrix::identity(dim, dim))
    }

    /// State dimension.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Transfer matrix D + C(iωI − A)⁻¹B; at `Infinity` this is D.
    pub fn eval_freq(&self, omega: Omega) -> Result<DMatrix<Complex64>> {
        let dc = self.d.map(|x| Complex64::new(x, 0.0));
        let w = match omega {
            Omega::Infinity => return Ok(dc),
            Omega::Finite(w) => w,
        };
        let n = self.state_dim();
        if n == 0 {
            return Ok(dc);
        }
        let mut resolvent = self.a.map(|x| Complex64::new(-x, 0.0));
        for i in 0..n {
            resolvent[(i, i)] += Complex64::new(0.0, w);
        }
        let lu = resolvent.lu();
        // LU pivot ratio as a cheap singularity proxy: a tiny trailing pivot
        // relative to the largest means iω is (numerically) an eigenvalue.
        let u = lu.u();
        let mut min_piv = f64::INFINITY;
        let mut max_piv = 0.0_f64;
        for i in 0..n {
            let p = u[(i, i)].norm();
            min_piv = min_piv.min(p);
            max_piv = max_piv.max(p);
        }
        if !(min_piv > max_piv * 1e-14) {
            return Err(Error::SingularResolvent(w));
        }
        let bc = self.b.map(|x| Complex64::new(x, 0.0));
        let sol = lu.solve(&bc).ok_or(Error::SingularResolvent(w))?;
        let cc = self.c.map(|x| Complex64::new(x, 0.0));
        Ok(&cc * sol + dc)
    }

    /// Adjoint realization (−Aᵀ, Cᵀ, −Bᵀ, Dᵀ), whose frequency response is
    /// the conjugate transpose of this system's response at every ω.
    pub fn adjoint(&self) -> Self {
        Self {
            a: -self.a.transpose(),
            b: self.c.transpose(),
            c: -self.b.transpose(),
            d: self.d.transpose(),
        }
    }

    /// Series interconnection self ∘ other (input feeds `other` first), with
    /// composite state (ξ_self, ξ_other).
    pub fn compose_series(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.input_dim() != other.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "series composition needs inner output dim {} to match outer input dim {}",
                other.output_dim(),
                self.input_dim()
            )));
        }
        let a = blkstack(&[
            &[&self.a, &(&self.b * &other.c)],
            &[&DMatrix::zeros(other.state_dim(), self.state_dim()), &other.a],
        ]);
        let b = vstack(&[&(&self.b * &other.d), &other.b]);
        let c = hstack(&[&self.c, &(&self.d * &other.c)]);
        let d = &self.d * &other.d;
        Ok(StateSpace { a, b, c, d })
    }

    /// Simulate ẋ = Ax + Bu, y = Cx + Du from zero initial state, returning
    /// the output sampled on the input grid.
    pub fn simulate(&self, input: &SampledSignal) -> Result<SampledSignal> {
        let x0 = DVector::zeros(self.state_dim());
        let traj = self.simulate_from(&x0, input, None)?;
        Ok(traj.outputs)
    }

    /// Full trajectory simulation with an initial state and an optional
    /// accumulator for q(t) = ∫₀ᵗ y(τ)ᵀ P y(τ) dτ.
    ///
    /// The input is held constant over each step (zero-order hold), and the
    /// state together with the accumulator is advanced by classical RK4, so
    /// the discretization error is O(dt⁴) for the trajectory and the
    /// integral alike. `states` and `quad` have one more entry than the
    /// input (values at t = 0, dt, …, N·dt); `outputs` matches the input
    /// length.
    pub fn simulate_from(
        &self,
        x0: &DVector<f64>,
        input: &SampledSignal,
        quad_form: Option<&DMatrix<f64>>,
    ) -> Result<Trajectory> {
        let n = self.state_dim();
        if x0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial state has length {}, expected {n}",
                x0.len()
            )));
        }
        if input.samples.iter().any(|u| u.len() != self.input_dim()) {
            return Err(Error::DimensionMismatch(format!(
                "input samples must have length {}",
                self.input_dim()
            )));
        }
        if let Some(p) = quad_form {
            if p.nrows() != self.output_dim() || p.ncols() != self.output_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "quadratic form must be {0}x{0}",
                    self.output_dim()
                )));
            }
        }
        let dt = input.dt;
        let mut x = x0.clone();
        let mut q = 0.0;
        let mut states = Vec::with_capacity(input.samples.len() + 1);
        let mut quad = Vec::with_capacity(input.samples.len() + 1);
        let mut outputs = Vec::with_capacity(input.samples.len());
        states.push(x.clone());
        quad.push(q);
        for u in &input.samples {
            outputs.push(&self.c * &x + &self.d * u);
            let bu = &self.b * u;
            let qdot = |x: &DVector<f64>| -> f64 {
                match quad_form {
                    Some(p) => {
                        let y = &self.c * x + &self.d * u;
                        (y.transpose() * p * &y)[(0, 0)]
                    }
                    None => 0.0,
                }
            };
            let k1 = &self.a * &x + &bu;
            let q1 = qdot(&x);
            let x2 = &x + (dt / 2.0) * &k1;
            let k2 = &self.a * &x2 + &bu;
            let q2 = qdot(&x2);
            let x3 = &x + (dt / 2.0) * &k2;
            let k3 = &self.a * &x3 + &bu;
            let q3 = qdot(&x3);
            let x4 = &x + dt * &k3;
            let k4 = &self.a * &x4 + &bu;
            let q4 = qdot(&x4);
            x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            q += (dt / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
            if n > 0 && x.amax() > BLOWUP_GUARD {
                return Err(Error::UnstableBlowup);
            }
            states.push(x.clone());
            quad.push(q);
        }
        Ok(Trajectory {
            dt,
            states,
            outputs: SampledSignal {
                dt,
                samples: outputs,
            },
            quad,
        })
    }
}

/// True iff every eigenvalue of `a` has real part below −[`EPS_HURWITZ`].
/// The empty matrix is Hurwitz by convention.
pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    a.complex_eigenvalues().iter().all(|l| l.re < -EPS_HURWITZ)
}

/// Realization of I_r ⊗ G(s): Kronecker-multiplies every realization block
/// by the identity on the left.
pub fn kron_left(identity_dim: usize, sys: &StateSpace) -> StateSpace {
    let id = DMatrix::<f64>::identity(identity_dim, identity_dim);
    StateSpace {
        a: id.kronecker(&sys.a),
        b: id.kronecker(&sys.b),
        c: id.kronecker(&sys.c),
        d: id.kronecker(&sys.d),
    }
}

/// Block-diagonal interconnection diag(g1, g2): inputs and outputs are
/// stacked, states are (ξ₁, ξ₂).
pub fn diag_join(g1: &StateSpace, g2: &StateSpace) -> StateSpace {
    StateSpace {
        a: blkdiag(&[&g1.a, &g2.a]),
        b: blkdiag(&[&g1.b, &g2.b]),
        c: blkdiag(&[&g1.c, &g2.c]),
        d: blkdiag(&[&g1.d, &g2.d]),
    }
}

/// Output signal grid: samples at t = 0, dt, 2dt, …, each held constant
/// until the next sample when used as a simulator input (zero-order hold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub dt: f64,
    pub samples: Vec<DVector<f64>>,
}

impl SampledSignal {
    pub fn new(dt: f64, samples: Vec<DVector<f64>>) -> Self {
        Self { dt, samples }
    }

    /// A constant signal with the given number of samples.
    pub fn constant(value: DVector<f64>, count: usize, dt: f64) -> Self {
        Self {
            dt,
            samples: vec![value; count],
        }
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total covered horizon len·dt.
    pub fn horizon(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    /// Refine the grid by an integer factor while describing the *same*
    /// piecewise-constant signal: every sample is repeated `factor` times at
    /// step dt/factor. Used by convergence studies so only the integrator
    /// step changes, never the input itself.
    pub fn refine(&self, factor: usize) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len() * factor);
        for s in &self.samples {
            for _ in 0..factor {
                samples.push(s.clone());
            }
        }
        Self {
            dt: self.dt / factor as f64,
            samples,
        }
    }
}

/// Result of [`StateSpace::simulate_from`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    /// State at t = 0, dt, …, N·dt (one more entry than the input).
    pub states: Vec<DVector<f64>>,
    /// Output at t = 0, dt, …, (N−1)·dt.
    pub outputs: SampledSignal,
    /// Accumulated ∫₀ᵗ yᵀPy dτ at the same grid as `states` (all zeros when
    /// no quadratic form was supplied).
    pub quad: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Constant-matrix stacking helpers shared across the crate.
// ---------------------------------------------------------------------------

/// Block-diagonal concatenation of real matrices.
pub fn blkdiag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Horizontal concatenation; all blocks must have equal row counts.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    assert!(blocks.iter().all(|b| b.nrows() == rows), "hstack row mismatch");
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation; all blocks must have equal column counts.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    assert!(blocks.iter().all(|b| b.ncols() == cols), "vstack col mismatch");
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// General block grid: `rows` lists the blocks of each block-row. Row
/// heights and column widths must be consistent across the grid.
pub fn blkstack(rows: &[&[&DMatrix<f64>]]) -> DMatrix<f64> {
    let stacked: Vec<DMatrix<f64>> = rows.iter().map(|r| hstack(r)).collect();
    let refs: Vec<&DMatrix<f64>> = stacked.iter().collect();
    vstack(&refs)
}

/// Smallest eigenvalue of a real symmetric matrix (+∞ for the empty matrix).
/// The input is symmetrized first so tiny asymmetries cannot corrupt the
/// tridiagonalization.
pub fn symmetric_min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// Largest eigenvalue of a real symmetric matrix (−∞ for the empty matrix).
pub fn symmetric_max_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.max()
}

/// Smallest eigenvalue of a complex Hermitian matrix, computed through the
/// real symmetric embedding [Re −Im; Im Re] (which duplicates the spectrum).
pub fn hermitian_min_eig(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut e = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            e[(i, j)] = z.re;
            e[(i + n, j + n)] = z.re;
            e[(i + n, j)] = z.im;
            e[(i, j + n)] = -z.im;
        }
    }
    e.symmetric_eigen().eigenvalues.min()
}
