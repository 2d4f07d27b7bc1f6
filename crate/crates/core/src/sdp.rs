//! In-process semidefinite programming: a primal-dual interior-point method
//! for the block-diagonal linear matrix inequality problems this crate
//! builds, plus a solver-free certificate checker.
//!
//! Problems arrive as affine matrix blocks F_j(x) with senses
//! strict-positive, nonnegative, or zero.  Equality blocks are eliminated
//! exactly up front.  A feasibility phase then maximizes a uniform slack t
//! pushed into the (margin-shifted) inequality blocks; its sign decides
//! feasibility.  If an objective is present a second phase minimizes it over
//! the margin-shifted blocks.  Box constraints on every scalar variable and
//! a cap on t keep both phases bounded.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::affine::AffineMatrix;
use crate::error::{Error, Result};
use crate::lti;
use crate::problem::{BlockSense, Certificate, LmiBlock, SdpProblem};

/// Outcome classification for a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// A strictly feasible point was found (and the objective, if any,
    /// minimized to the reported accuracy).
    Feasible,
    /// The feasibility phase converged and certified that no point
    /// satisfies every strict block with its required margin.
    Infeasible,
    /// The method stopped without a trustworthy verdict in either
    /// direction; the returned point is the best iterate.
    Inaccurate,
    /// A numerical breakdown prevented any meaningful result.
    Failed,
}

/// Which blocks receive the uniform slack variable in the feasibility
/// phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginScope {
    /// Only strict blocks are pushed to the interior; nonstrict blocks must
    /// merely hold.  This is the right choice when nonstrict blocks can be
    /// singular at every feasible point.
    StrictOnly,
    /// Every inequality block receives the slack, so the achieved optimum
    /// reports the worst min-eigenvalue over all blocks.
    AllBlocks,
}

/// Tunable solver knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Residual level below which a converged solve is reported as accurate.
    pub feas_tol: f64,
    /// Relative duality-gap level for an accurate solve.
    pub gap_tol: f64,
    pub margin_scope: MarginScope,
    /// Half-width of the box constraint placed on every scalar variable.
    pub box_radius: f64,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            margin_scope: MarginScope::StrictOnly,
            box_radius: 1e6,
            verbose: false,
        }
    }
}

/// Summary of a solve, suitable for embedding in a certificate.
///
/// `min_block_eig` records, per original block, the signed slack at the
/// returned point: the minimum eigenvalue beyond the required margin for
/// strict blocks, the plain minimum eigenvalue for nonstrict blocks, and
/// minus the largest absolute entry for equality blocks — so nonnegative
/// entries mean "satisfied" uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub objective_value: Option<f64>,
    /// Achieved uniform slack t* of the feasibility phase.
    pub feasibility_margin: Option<f64>,
    pub max_primal_residual: f64,
    pub relative_gap: f64,
    pub min_block_eig: Vec<(String, f64)>,
}

/// Full solve result: the report plus the point itself.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Packed scalar vector in declaration order.
    pub x: Vec<f64>,
    /// The same point unpacked into named matrices.
    pub variables: BTreeMap<String, DMatrix<f64>>,
    pub objective_value: Option<f64>,
    pub feasibility_margin: Option<f64>,
    pub max_primal_residual: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub min_block_eig: Vec<(String, f64)>,
}

impl SdpSolution {
    pub fn report(&self) -> SolverReport {
        SolverReport {
            status: self.status,
            iterations: self.iterations,
            objective_value: self.objective_value,
            feasibility_margin: self.feasibility_margin,
            max_primal_residual: self.max_primal_residual,
            relative_gap: self.relative_gap,
            min_block_eig: self.min_block_eig.clone(),
        }
    }

    /// Package the solved point as a [`Certificate`] for the problem it
    /// solves.  For worst-case-gain problems the objective value is the
    /// squared gain, so `gamma` is its square root; pure feasibility
    /// problems carry no gain.
    pub fn certificate(&self, problem: &SdpProblem) -> Certificate {
        Certificate {
            test_kind: problem.context.test_kind(),
            variables: self.variables.clone(),
            gamma: self.objective_value.map(|v| v.max(0.0).sqrt()),
            report: self.report(),
            notes: problem.context.notes.clone(),
        }
    }
}

/// Signed slack of every block at a candidate point, without running the
/// solver: minimum eigenvalue beyond the margin for strict blocks, minimum
/// eigenvalue for nonstrict blocks, minus the largest absolute entry for
/// equality blocks.  Nonnegative everywhere means the candidate satisfies
/// the problem.
pub fn check_solution(
    problem: &SdpProblem,
    variables: &BTreeMap<String, DMatrix<f64>>,
) -> Result<Vec<(String, f64)>> {
    let x = problem.vars.pack(variables)?;
    Ok(problem
        .blocks
        .iter()
        .map(|b| (b.name.clone(), block_slack(b, &x)))
        .collect())
}

/// Signed slack of one block at a packed point (same convention as
/// `check_solution`).
fn block_slack(b: &LmiBlock, x: &[f64]) -> f64 {
    let v = b.expr.eval(x);
    match b.sense {
        BlockSense::StrictPsd { margin } => lti::symmetric_min_eig(&v) - margin,
        BlockSense::Psd => lti::symmetric_min_eig(&v),
        BlockSense::Zero => -v.amax(),
    }
}

/// Solve the problem: eliminate equalities, certify strict feasibility by
/// maximizing a uniform slack, then minimize the objective if one is
/// present.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let m_orig = problem.vars.total_scalars();

    // Equality elimination: x = x0 + N z with N an orthonormal nullspace
    // basis of the stacked equality rows.
    let elim = match eliminate_equalities(problem)? {
        Elimination::Inconsistent => {
            return Ok(finish(
                problem,
                vec![0.0; m_orig],
                SolveStatus::Infeasible,
                None,
                0,
                f64::INFINITY,
                f64::INFINITY,
            ));
        }
        Elimination::Map(map) => map,
    };
    let mz = elim.free_dim();

    // Reduced inequality blocks in z coordinates, margin pre-subtracted.
    let mut ineq: Vec<ReducedBlock> = Vec::new();
    for b in &problem.blocks {
        let (shift, strict) = match b.sense {
            BlockSense::Zero => continue,
            BlockSense::StrictPsd { margin } => (margin, true),
            BlockSense::Psd => (0.0, false),
        };
        let mut expr = elim.substitute(&b.expr);
        let d = expr.rows();
        if shift > 0.0 {
            expr.constant -= DMatrix::<f64>::identity(d, d) * shift;
        }
        if expr.is_zero() && !strict {
            // An identically zero nonstrict block carries no information;
            // builders drop these, but guard here as well.
            continue;
        }
        let slacked = strict || opts.margin_scope == MarginScope::AllBlocks;
        ineq.push(ReducedBlock { expr, slacked });
    }

    // Constant blocks that never receive the slack decide themselves;
    // exclude them from the cone but fail fast on a violated one.
    let mut worst_const: f64 = f64::INFINITY;
    ineq.retain(|b| {
        if b.expr.is_constant() && !b.slacked {
            worst_const = worst_const.min(lti::symmetric_min_eig(&b.expr.constant));
            false
        } else {
            true
        }
    });
    if worst_const < 0.0 {
        return Ok(finish(
            problem,
            elim.lift(&vec![0.0; mz]),
            SolveStatus::Infeasible,
            Some(worst_const),
            0,
            0.0,
            0.0,
        ));
    }

    // Phase 1: maximize the uniform slack t over (z, t).
    let phase1 = build_margin_phase(&ineq, mz, opts);
    let r1 = ipm_solve(&phase1, opts);
    let t_star = r1.y.last().copied().unwrap_or(f64::NEG_INFINITY);
    if opts.verbose {
        eprintln!(
            "phase1: t*={t_star:.3e} conv={} it={} pinf={:.1e} dinf={:.1e} gap={:.1e}",
            r1.converged, r1.iterations, r1.pinf, r1.dinf, r1.relgap
        );
    }
    if !t_star.is_finite() || r1.y.iter().any(|v| !v.is_finite()) {
        return Ok(finish(
            problem,
            elim.lift(&vec![0.0; mz]),
            SolveStatus::Failed,
            None,
            r1.iterations,
            f64::INFINITY,
            f64::INFINITY,
        ));
    }
    let z1: Vec<f64> = r1.y[..mz].to_vec();
    // The slack iterate keeps every shifted block inside the cone by
    // construction, so the reported t is a feasible-side value once the
    // consistency residual is subtracted; tr(C·X̂) bounds the optimum from
    // above when the trace equations nearly hold.
    let t_lower = t_star - r1.rd_abs;
    let dual_side_ok = r1.dinf <= opts.feas_tol;

    if !(dual_side_ok && t_lower > 1e-10) {
        // No certified positive slack. Check for a certified negative one:
        // both ends of the objective bracket sit below zero, the bracket is
        // consistent, and the variable iterate stayed far away from the
        // boxes (a boxed iterate would make the trace bound untrustworthy).
        let z_inf = z1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let bracket_sane = r1.trace_obj >= r1.dual_obj - 1e-9 * (1.0 + r1.dual_obj.abs());
        let infeasible_certified = dual_side_ok
            && r1.pinf <= 1e-6
            && bracket_sane
            && z_inf <= 0.01 * opts.box_radius
            && t_star < -1e-9
            && r1.trace_obj < -1e-9;
        if opts.verbose {
            eprintln!(
                "phase1 verdict: dual_ok={dual_side_ok} pinf_ok={} bracket={bracket_sane} \
                 z_inf={z_inf:.2e} t*={t_star:.3e} trace_obj={:.3e} rd_abs={:.2e}",
                r1.pinf <= 1e-6,
                r1.trace_obj,
                r1.rd_abs
            );
        }
        let status = if infeasible_certified {
            SolveStatus::Infeasible
        } else {
            SolveStatus::Inaccurate
        };
        return Ok(finish(
            problem,
            elim.lift(&z1),
            status,
            Some(t_star),
            r1.iterations,
            r1.pinf.max(r1.dinf),
            r1.relgap,
        ));
    }

    let objective = problem.objective.as_ref().map(|o| elim.substitute(o));
    let Some(obj) = objective else {
        // Pure feasibility problem: the phase-1 point is the answer.
        return Ok(finish(
            problem,
            elim.lift(&z1),
            SolveStatus::Feasible,
            Some(t_star),
            r1.iterations,
            r1.pinf.max(r1.dinf),
            r1.relgap,
        ));
    };

    // Phase 2: minimize the objective over the margin-shifted blocks.
    let phase2 = build_objective_phase(&ineq, &obj, mz, opts);
    let r2 = ipm_solve(&phase2, opts);
    if opts.verbose {
        eprintln!(
            "phase2: obj={:.9e} conv={} it={} pinf={:.1e} dinf={:.1e} gap={:.1e}",
            -r2.dual_obj, r2.converged, r2.iterations, r2.pinf, r2.dinf, r2.relgap
        );
    }
    let accurate2 = r2.y.iter().all(|v| v.is_finite())
        && r2.pinf <= opts.feas_tol
        && r2.dinf <= opts.feas_tol
        && r2.relgap <= opts.gap_tol;
    let total_iters = r1.iterations + r2.iterations;
    let (z_final, status) = if accurate2 {
        (r2.y.clone(), SolveStatus::Feasible)
    } else {
        // Keep the best point we trust: the phase-2 iterate if it still
        // satisfies every block, else the phase-1 interior point.
        let finite2 = r2.y.iter().all(|v| v.is_finite());
        let x2 = elim.lift(&r2.y);
        let ok2 =
            finite2 && problem.blocks.iter().all(|b| block_slack(b, &x2) >= -1e-9);
        if ok2 {
            (r2.y.clone(), SolveStatus::Inaccurate)
        } else {
            (z1, SolveStatus::Inaccurate)
        }
    };
    Ok(finish(
        problem,
        elim.lift(&z_final),
        status,
        Some(t_star),
        total_iters,
        r2.pinf.max(r2.dinf),
        r2.relgap,
    ))
}

/// Assemble the final solution record at a concrete point.
fn finish(
    problem: &SdpProblem,
    x: Vec<f64>,
    status: SolveStatus,
    feasibility_margin: Option<f64>,
    iterations: usize,
    max_primal_residual: f64,
    relative_gap: f64,
) -> SdpSolution {
    let min_block_eig: Vec<(String, f64)> = problem
        .blocks
        .iter()
        .map(|b| (b.name.clone(), block_slack(b, &x)))
        .collect();
    let objective_value = problem.objective.as_ref().map(|o| o.eval(&x)[(0, 0)]);
    SdpSolution {
        status,
        variables: problem.vars.extract_all(&x),
        x,
        objective_value,
        feasibility_margin,
        max_primal_residual,
        relative_gap,
        iterations,
        min_block_eig,
    }
}

// ---------------------------------------------------------------------------
// Equality elimination
// ---------------------------------------------------------------------------

struct EliminationMap {
    /// Particular solution in original coordinates.
    x0: Vec<f64>,
    /// Orthonormal nullspace basis (original dim × free dim); `None` means
    /// the identity map (no equalities).
    basis: Option<DMatrix<f64>>,
}

enum Elimination {
    Inconsistent,
    Map(EliminationMap),
}

impl EliminationMap {
    fn free_dim(&self) -> usize {
        match &self.basis {
            None => self.x0.len(),
            Some(n) => n.ncols(),
        }
    }

    /// Lift reduced coordinates back: x = x0 + N z.
    fn lift(&self, z: &[f64]) -> Vec<f64> {
        match &self.basis {
            None => z.to_vec(),
            Some(n) => {
                let zv = DVector::from_column_slice(z);
                let xv = DVector::from_column_slice(&self.x0) + n * zv;
                xv.iter().copied().collect()
            }
        }
    }

    /// Rewrite an affine expression in the reduced coordinates.
    fn substitute(&self, expr: &AffineMatrix) -> AffineMatrix {
        let Some(n) = &self.basis else {
            return expr.clone();
        };
        let (r, c) = (expr.rows(), expr.cols());
        let mut constant = expr.constant.clone();
        for (&i, coeff) in &expr.terms {
            if self.x0[i] != 0.0 {
                constant += coeff * self.x0[i];
            }
        }
        let mut out = AffineMatrix::from_const(constant);
        for k in 0..n.ncols() {
            let mut coeff = DMatrix::<f64>::zeros(r, c);
            let mut nonzero = false;
            for (&i, term) in &expr.terms {
                let w = n[(i, k)];
                if w != 0.0 {
                    coeff += term * w;
                    nonzero = true;
                }
            }
            if nonzero && coeff.amax() > 0.0 {
                out.terms.insert(k, coeff);
            }
        }
        out
    }
}

/// Stack every equality block into scalar rows and solve them exactly,
/// reporting inconsistency and returning a nullspace parametrization of the
/// solution set.
fn eliminate_equalities(problem: &SdpProblem) -> Result<Elimination> {
    let m = problem.vars.total_scalars();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for b in &problem.blocks {
        if !matches!(b.sense, BlockSense::Zero) {
            continue;
        }
        let d = b.expr.rows();
        for r in 0..d {
            for c in r..b.expr.cols() {
                let mut row = vec![0.0; m];
                for (&i, coeff) in &b.expr.terms {
                    row[i] = coeff[(r, c)];
                }
                if row.iter().all(|v| *v == 0.0) && b.expr.constant[(r, c)] == 0.0 {
                    continue;
                }
                rhs.push(-b.expr.constant[(r, c)]);
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return Ok(Elimination::Map(EliminationMap {
            x0: vec![0.0; m],
            basis: None,
        }));
    }
    // Pad with zero rows so the decomposition carries a full right factor
    // (the thin factorization of a wide matrix would truncate the
    // nullspace).
    let n_rows = rows.len().max(m);
    let e = DMatrix::from_fn(n_rows, m, |r, c| if r < rows.len() { rows[r][c] } else { 0.0 });
    let f = DVector::from_fn(n_rows, |r, _| if r < rhs.len() { rhs[r] } else { 0.0 });
    let svd = e.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-12 * (n_rows as f64);
    let x0 = svd
        .solve(&f, tol)
        .map_err(|e| Error::SolverFailure(format!("equality solve: {e}")))?;
    let resid = (&e * &x0 - &f).amax();
    if resid > 1e-8 * (1.0 + f.amax()) {
        return Ok(Elimination::Inconsistent);
    }
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let v_t = svd.v_t.as_ref().expect("right factor was requested");
    let basis = if rank == m {
        DMatrix::<f64>::zeros(m, 0)
    } else {
        // Rows of Vᵀ beyond the numerical rank span the nullspace.
        v_t.rows(rank, m - rank).transpose()
    };
    Ok(Elimination::Map(EliminationMap {
        x0: x0.iter().copied().collect(),
        basis: Some(basis),
    }))
}

// ---------------------------------------------------------------------------
// Interior-point core (dual form: max bᵀy s.t. C − Σ yᵢ Aᵢ ⪰ 0)
// ---------------------------------------------------------------------------

struct ReducedBlock {
    expr: AffineMatrix,
    /// Whether the feasibility phase pushes this block by the slack t.
    slacked: bool,
}

/// One diagonal block of the cone constraint.
struct ConeBlock {
    dim: usize,
    c: DMatrix<f64>,
    /// Active variables and their A-matrices (A_i := −coefficient of y_i,
    /// so that C − Σ yᵢAᵢ equals the block value).
    active: Vec<(usize, DMatrix<f64>)>,
}

struct IpmProblem {
    m: usize,
    b: Vec<f64>,
    blocks: Vec<ConeBlock>,
}

fn cone_block_from_expr(expr: &AffineMatrix, extra: &[(usize, DMatrix<f64>)]) -> ConeBlock {
    let mut active: Vec<(usize, DMatrix<f64>)> = expr
        .terms
        .iter()
        .map(|(&i, coeff)| (i, -coeff.clone()))
        .collect();
    active.extend(extra.iter().cloned());
    ConeBlock {
        dim: expr.rows(),
        c: expr.constant.clone(),
        active,
    }
}

/// Phase-1 problem over (z, t): maximize t subject to every designated
/// block minus t·I staying in the cone, t ≤ 1, and |z_i| ≤ box radius.
fn build_margin_phase(ineq: &[ReducedBlock], mz: usize, opts: &SolverOptions) -> IpmProblem {
    let m = mz + 1;
    let t = mz;
    let mut blocks = Vec::new();
    for rb in ineq {
        let extra = if rb.slacked {
            vec![(t, DMatrix::<f64>::identity(rb.expr.rows(), rb.expr.rows()))]
        } else {
            vec![]
        };
        blocks.push(cone_block_from_expr(&rb.expr, &extra));
    }
    // Cap: 1 − t ≥ 0.
    blocks.push(ConeBlock {
        dim: 1,
        c: DMatrix::from_element(1, 1, 1.0),
        active: vec![(t, DMatrix::from_element(1, 1, 1.0))],
    });
    push_boxes(&mut blocks, mz, opts.box_radius);
    let mut b = vec![0.0; m];
    b[t] = 1.0;
    IpmProblem { m, b, blocks }
}

/// Phase-2 problem over z: minimize the (1×1) objective subject to the
/// margin-shifted blocks and the variable boxes.
fn build_objective_phase(
    ineq: &[ReducedBlock],
    obj: &AffineMatrix,
    mz: usize,
    opts: &SolverOptions,
) -> IpmProblem {
    let mut blocks: Vec<ConeBlock> = ineq
        .iter()
        .filter(|rb| !rb.expr.is_constant())
        .map(|rb| cone_block_from_expr(&rb.expr, &[]))
        .collect();
    push_boxes(&mut blocks, mz, opts.box_radius);
    // max bᵀz with b = −c minimizes cᵀz.
    let mut b = vec![0.0; mz];
    for (&i, coeff) in &obj.terms {
        b[i] = -coeff[(0, 0)];
    }
    IpmProblem { m: mz, b, blocks }
}

fn push_boxes(blocks: &mut Vec<ConeBlock>, mz: usize, radius: f64) {
    for i in 0..mz {
        // radius − z_i ≥ 0 and radius + z_i ≥ 0.
        blocks.push(ConeBlock {
            dim: 1,
            c: DMatrix::from_element(1, 1, radius),
            active: vec![(i, DMatrix::from_element(1, 1, 1.0))],
        });
        blocks.push(ConeBlock {
            dim: 1,
            c: DMatrix::from_element(1, 1, radius),
            active: vec![(i, DMatrix::from_element(1, 1, -1.0))],
        });
    }
}

struct IpmResult {
    y: Vec<f64>,
    converged: bool,
    iterations: usize,
    pinf: f64,
    dinf: f64,
    relgap: f64,
    /// bᵀy at the reported iterate (the maximization side).
    dual_obj: f64,
    /// tr(C·X̂) at the reported iterate (the minimization side); an upper
    /// bound on the optimal bᵀy up to the equation residuals.
    trace_obj: f64,
    /// Largest Frobenius norm over blocks of C − Σyᵢ·Aᵢ − S; bounds how far
    /// the reported iterate sits from exact cone feasibility.
    rd_abs: f64,
}

/// tr(a·t) for matching square matrices.
fn trace_prod(a: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    let d = a.nrows();
    let mut acc = 0.0;
    for r in 0..d {
        for c in 0..d {
            acc += a[(r, c)] * t[(c, r)];
        }
    }
    acc
}

/// Largest step α keeping pos + α·dir in the cone, given the Cholesky
/// factor of the (symmetric positive definite) current iterate.
fn max_step(chol: &Cholesky<f64, Dyn>, dir: &DMatrix<f64>) -> f64 {
    // pos + α·dir ⪰ 0 ⟺ I + α·L⁻¹ dir L⁻ᵀ ⪰ 0.
    let l = chol.l();
    let z = l
        .solve_lower_triangular(dir)
        .expect("factor of a positive definite matrix is invertible");
    let w = l
        .solve_lower_triangular(&z.transpose())
        .expect("factor of a positive definite matrix is invertible");
    let w = (&w + w.transpose()) * 0.5;
    let lam = lti::symmetric_min_eig(&w);
    if lam >= -1e-14 {
        1e6
    } else {
        1.0 / (-lam)
    }
}

fn ipm_solve(p: &IpmProblem, opts: &SolverOptions) -> IpmResult {
    let m = p.m;
    let nb = p.blocks.len();
    let total_dim: usize = p.blocks.iter().map(|b| b.dim).sum();
    if m == 0 || nb == 0 || total_dim == 0 {
        return IpmResult {
            y: vec![0.0; m],
            converged: true,
            iterations: 0,
            pinf: 0.0,
            dinf: 0.0,
            relgap: 0.0,
            dual_obj: 0.0,
            trace_obj: 0.0,
            rd_abs: 0.0,
        };
    }
    let bnorm = p.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    // Interior starting point scaled to the data.
    let mut xhat: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
    let mut s: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
    for blk in &p.blocks {
        let amax = blk
            .active
            .iter()
            .fold(0.0f64, |a, (_, mat)| a.max(mat.norm()));
        xhat.push(DMatrix::identity(blk.dim, blk.dim) * (10.0 * (1.0 + amax)));
        s.push(DMatrix::identity(blk.dim, blk.dim) * (10.0 * (1.0 + blk.c.norm())));
    }
    let mut y = vec![0.0; m];

    let mut result = IpmResult {
        y: y.clone(),
        converged: false,
        iterations: 0,
        pinf: f64::INFINITY,
        dinf: f64::INFINITY,
        relgap: f64::INFINITY,
        dual_obj: 0.0,
        trace_obj: 0.0,
        rd_abs: f64::INFINITY,
    };
    // Track the best iterate seen so the returned point never reflects a
    // degraded final step; merit is the worst of the three residuals.
    let mut best_merit = f64::INFINITY;
    let mut plateau = 0usize;
    let mut stall = 0usize;

    for iter in 0..opts.max_iters {
        if y.iter().any(|v| !v.is_finite()) {
            return result; // keep the last finite snapshot
        }

        // Residuals.
        let mut rd: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        for (bi, blk) in p.blocks.iter().enumerate() {
            let mut acc = blk.c.clone() - &s[bi];
            for (vi, a) in &blk.active {
                acc -= a * y[*vi];
            }
            rd.push(acc);
        }
        let mut rp: Vec<f64> = p.b.clone();
        for (bi, blk) in p.blocks.iter().enumerate() {
            for (vi, a) in &blk.active {
                rp[*vi] -= trace_prod(a, &xhat[bi]);
            }
        }

        let mut mu = 0.0;
        for bi in 0..nb {
            mu += trace_prod(&xhat[bi], &s[bi]);
        }
        mu /= total_dim as f64;

        let pobj: f64 = (0..nb)
            .map(|bi| trace_prod(&p.blocks[bi].c, &xhat[bi]))
            .sum();
        let dobj: f64 = (0..m).map(|i| p.b[i] * y[i]).sum();
        let pinf = rp.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (1.0 + bnorm);
        let dinf = p
            .blocks
            .iter()
            .enumerate()
            .fold(0.0f64, |a, (bi, blk)| {
                a.max(rd[bi].amax() / (1.0 + blk.c.amax()))
            });
        let rd_abs = rd.iter().fold(0.0f64, |a, r| a.max(r.norm()));
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if opts.verbose {
            eprintln!(
                "  it={iter:3} mu={mu:.2e} pinf={pinf:.2e} dinf={dinf:.2e} \
                 gap={relgap:.2e} pobj={pobj:.6e} dobj={dobj:.6e}"
            );
        }

        if !(pinf.is_finite() && dinf.is_finite() && relgap.is_finite()) {
            return result;
        }
        result.iterations = iter;
        let merit = pinf.max(dinf).max(relgap);
        if merit >= 0.97 * best_merit {
            plateau += 1;
            if plateau >= 8 {
                return result;
            }
        } else {
            plateau = 0;
        }
        if merit < best_merit {
            best_merit = merit;
            result.y = y.clone();
            result.pinf = pinf;
            result.dinf = dinf;
            result.relgap = relgap;
            result.dual_obj = dobj;
            result.trace_obj = pobj;
            result.rd_abs = rd_abs;
        }

        if pinf <= 1e-10 && dinf <= 1e-10 && relgap <= 1e-10 {
            result.converged = true;
            return result;
        }

        // Factor the iterates per block.
        let mut s_chol: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(nb);
        let mut x_chol: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(nb);
        let mut s_inv: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        let mut ok = true;
        for bi in 0..nb {
            match Cholesky::new(s[bi].clone()) {
                Some(ch) => {
                    s_inv.push(ch.inverse());
                    s_chol.push(ch);
                }
                None => {
                    ok = false;
                    break;
                }
            }
            match Cholesky::new(xhat[bi].clone()) {
                Some(ch) => x_chol.push(ch),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            return result; // numerical breakdown: report best-so-far
        }

        // Schur complement M_ij = Σ_b tr(A_i S⁻¹ A_j X̂).
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (bi, blk) in p.blocks.iter().enumerate() {
            let t_list: Vec<(usize, DMatrix<f64>)> = blk
                .active
                .iter()
                .map(|(vj, aj)| (*vj, &s_inv[bi] * aj * &xhat[bi]))
                .collect();
            for (vi, ai) in &blk.active {
                for (vj, t) in &t_list {
                    schur[(*vi, *vj)] += trace_prod(ai, t);
                }
            }
        }
        schur = (&schur + schur.transpose()) * 0.5;
        let reg = 1e-14 * (1.0 + schur.diagonal().amax());
        for i in 0..m {
            schur[(i, i)] += reg;
        }
        let Some(schur_chol) = Cholesky::new(schur) else {
            return result;
        };

        // Shared right-hand side part: Rp_i + Σ_b tr(A_i X̂ Rd S⁻¹).
        let mut rhs_base = DVector::from_column_slice(&rp);
        for (bi, blk) in p.blocks.iter().enumerate() {
            let g2 = &xhat[bi] * &rd[bi] * &s_inv[bi];
            for (vi, ai) in &blk.active {
                rhs_base[*vi] += trace_prod(ai, &g2);
            }
        }

        let assemble_dir = |rc: &[DMatrix<f64>]| -> (Vec<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let mut rhs = rhs_base.clone();
            for (bi, blk) in p.blocks.iter().enumerate() {
                let g1 = &rc[bi] * &s_inv[bi];
                for (vi, ai) in &blk.active {
                    rhs[*vi] -= trace_prod(ai, &g1);
                }
            }
            let dy = schur_chol.solve(&rhs);
            let mut ds: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
            let mut dx: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
            for (bi, blk) in p.blocks.iter().enumerate() {
                let mut dsb = rd[bi].clone();
                for (vi, a) in &blk.active {
                    dsb -= a * dy[*vi];
                }
                let dxb = (&rc[bi] - &xhat[bi] * &dsb) * &s_inv[bi];
                let dxb = (&dxb + dxb.transpose()) * 0.5;
                ds.push(dsb);
                dx.push(dxb);
            }
            (dy.iter().copied().collect(), ds, dx)
        };

        // Predictor step along the pure Newton direction.
        let rc_aff: Vec<DMatrix<f64>> = (0..nb).map(|bi| -(&xhat[bi] * &s[bi])).collect();
        let (_dy_aff, ds_aff, dx_aff) = assemble_dir(&rc_aff);
        let mut ap_aff = 1f64;
        let mut ad_aff = 1f64;
        for bi in 0..nb {
            ap_aff = ap_aff.min(max_step(&x_chol[bi], &dx_aff[bi]));
            ad_aff = ad_aff.min(max_step(&s_chol[bi], &ds_aff[bi]));
        }
        let mut mu_aff = 0.0;
        for bi in 0..nb {
            let xa = &xhat[bi] + &dx_aff[bi] * ap_aff;
            let sa = &s[bi] + &ds_aff[bi] * ad_aff;
            mu_aff += trace_prod(&xa, &sa);
        }
        mu_aff /= total_dim as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-6, 1.0);

        // Corrector with centering.
        let rc: Vec<DMatrix<f64>> = (0..nb)
            .map(|bi| {
                let mut r = DMatrix::<f64>::identity(p.blocks[bi].dim, p.blocks[bi].dim)
                    * (sigma * mu);
                r -= &xhat[bi] * &s[bi];
                r -= &dx_aff[bi] * &ds_aff[bi];
                r
            })
            .collect();
        let (dy, ds, dx) = assemble_dir(&rc);
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for bi in 0..nb {
            ap = ap.min(max_step(&x_chol[bi], &dx[bi]));
            ad = ad.min(max_step(&s_chol[bi], &ds[bi]));
        }
        let ap = (0.95 * ap).min(1.0);
        let ad = (0.95 * ad).min(1.0);

        for bi in 0..nb {
            xhat[bi] += &dx[bi] * ap;
            s[bi] += &ds[bi] * ad;
        }
        for i in 0..m {
            y[i] += ad * dy[i];
        }

        if ap < 1e-7 && ad < 1e-7 {
            stall += 1;
            if stall >= 3 {
                return result;
            }
        } else {
            stall = 0;
        }
    }
    result.iterations = opts.max_iters;
    result
}
