//! Solver-independent verification of analysis certificates.
//!
//! Every claim a certificate makes can be probed through routes that share
//! no code with the LMI builder or the interior-point method beyond basic
//! state-space arithmetic:
//!
//! * [`check_fdi`] samples the frequency-domain inequality the multiplier
//!   encodes: the quadratic form the certified middle matrix induces on
//!   the filtered stack Ψ(iω)[I; Δ(iω)] must be positive semidefinite
//!   along the imaginary axis.
//! * [`check_dissipation`] integrates the filtered uncertainty channel in
//!   the time domain and checks the finite-horizon integral inequality
//!   with the certified terminal cost at every intermediate horizon.
//! * [`kyp_witness`] recovers, for one scalar uncertainty and one
//!   quadratic form, the storage matrix whose existence is equivalent to
//!   the frequency inequality — a one-variable program independent of the
//!   analysis program.
//! * [`check_commutation`] exercises the identity H∘(gI_k) = (gI_l)∘H that
//!   repeated-scalar multipliers rely on, on sampled signals.
//! * [`check_ellipsoid_invariance`] closes the uncertainty loop and checks
//!   the invariant-ellipsoid consequence of the storage/terminal pair
//!   along simulated trajectories.
//! * [`check_wellposedness`] samples |det(I − DV)| over a value set.
//! * [`sample_delta_in_set`] draws random uncertainties whose frequency
//!   response stays inside a value set; rejection sampling keeps
//!   correctness independent of how candidates are constructed.
//!
//! Randomized checks take explicit seeds and embed them in their reports,
//! so every reported number can be reproduced exactly.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affine::{self, AffineMatrix, VarKind, VarSpace};
use crate::error::{Error, Result};
use crate::jsonmat;
use crate::lti::{self, Omega, SampledSignal, StateSpace};
use crate::multiplier::{MultiplierRecipe, TestKind};
use crate::problem::{BuildContext, Certificate, LmiBlock, Plant, SdpProblem};
use crate::sdp::{self, MarginScope, SolveStatus, SolverOptions};
use crate::valueset::{SetKind, ValueSet};

/// Absolute tolerance on sampled frequency-inequality eigenvalues: values
/// above this (negated) are roundoff; values below it falsify the
/// certificate.
pub const FREQ_TOL: f64 = 1e-7;

/// Absolute tolerance on simulated dissipation margins.  Dominated by
/// integration error; calibrated by the step-halving ratio test, so a
/// margin below `-SIM_TOL` is a certificate bug, not noise.
pub const SIM_TOL: f64 = 1e-4;

/// Slack allowed when checking that an uncertainty's frequency response
/// stays inside a value set (boundary contact is legitimate).
const MEMBERSHIP_TOL: f64 = 1e-7;

/// Interior margin required of sampled uncertainties, so downstream
/// membership checks never sit exactly on the boundary.
const INTERIOR_MARGIN: f64 = 1e-6;

/// Acceptance level for the witness program's residual.
const WITNESS_TOL: f64 = 1e-8;

/// The standard evaluation grid: 200 logarithmically spaced frequencies in
/// [1e−3, 1e3] rad/s together with 0 and ∞.
pub fn default_grid() -> Vec<Omega> {
    let mut grid = Vec::with_capacity(202);
    grid.push(Omega::Finite(0.0));
    for i in 0..200 {
        let t = i as f64 / 199.0;
        grid.push(Omega::Finite(1e-3 * 1e6_f64.powf(t)));
    }
    grid.push(Omega::Infinity);
    grid
}

/// Result of a randomized dissipation check.
///
/// The integral functional is scanned at every integration step of every
/// input; `horizons` records the coarse checkpoint grid summarised in
/// reports, `worst_margin` the most negative functional value seen,
/// `worst_time` and `worst_seed` where it occurred.  `seed` is the base
/// seed the per-input seeds were derived from, making the whole report
/// reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DissipationReport {
    pub worst_margin: f64,
    pub worst_time: f64,
    pub horizons: Vec<f64>,
    pub inputs_tested: usize,
    pub seed: u64,
    pub worst_seed: u64,
}

/// Storage matrix recovered by [`kyp_witness`]: `w_matrix` satisfies the
/// coupled inequality with signed slack `residual` (nonnegative up to
/// solver accuracy).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KypWitness {
    #[serde(with = "jsonmat")]
    pub w_matrix: DMatrix<f64>,
    pub residual: f64,
}

// ---------------------------------------------------------------------------
// Shared membership and wiring helpers.
// ---------------------------------------------------------------------------

/// Shape the supplied uncertainty to the set's (l, k) wiring: scalar kinds
/// repeat a SISO system across the k channels, full-block sets take the
/// l×k system as given.
fn expand_delta(set: &ValueSet, delta: &StateSpace) -> Result<StateSpace> {
    if set.kind == SetKind::FullBlock {
        if delta.output_dim() != set.l() || delta.input_dim() != set.k() {
            return Err(Error::DimensionMismatch(format!(
                "full-block uncertainty must be {}x{}, got {}x{}",
                set.l(),
                set.k(),
                delta.output_dim(),
                delta.input_dim()
            )));
        }
        return Ok(delta.clone());
    }
    if delta.output_dim() != 1 || delta.input_dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "scalar value sets repeat a SISO uncertainty, got {}x{}",
            delta.output_dim(),
            delta.input_dim()
        )));
    }
    Ok(lti::kron_left(set.k(), delta))
}

/// Membership margin of a scalar value: the smallest defining-form value
/// (LMI regions use the minimum eigenvalue of their membership matrix).
/// Nonnegative inside the set.
fn scalar_margin(set: &ValueSet, v: Complex64) -> Result<f64> {
    match set.kind {
        SetKind::FullBlock => Err(Error::UnsupportedSet(
            "scalar margins are not defined for full-block sets".into(),
        )),
        SetKind::LmiRegion => {
            let (q, s, r) = set.lmi_region_blocks();
            let nu = set.nu;
            let mut h = DMatrix::<Complex64>::zeros(nu, nu);
            for i in 0..nu {
                for j in 0..nu {
                    h[(i, j)] = Complex64::new(q[(i, j)], 0.0)
                        + v * s[(i, j)]
                        + v.conj() * s[(j, i)]
                        + v.norm_sqr() * r[(i, j)];
                }
            }
            Ok(lti::hermitian_min_eig(&h))
        }
        _ => {
            let forms = set.scalar_forms(v)?;
            let mut margin = forms.into_iter().fold(f64::INFINITY, f64::min);
            // Realness is part of membership for equation-constrained sets.
            if set.kind == SetKind::EquationConstrained && v.im != 0.0 {
                margin = margin.min(-v.im.abs());
            }
            Ok(margin)
        }
    }
}

/// Membership margin of a full-block value V: min-eig of [I;V]*P₀[I;V].
fn full_block_margin(set: &ValueSet, vm: &DMatrix<Complex64>) -> Result<f64> {
    let (k, l) = (set.k(), set.l());
    if vm.nrows() != l || vm.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "value must be {l}x{k}, got {}x{}",
            vm.nrows(),
            vm.ncols()
        )));
    }
    let p0 = set.p_blocks[0].map(|x| Complex64::new(x, 0.0));
    let mut iv = DMatrix::<Complex64>::zeros(k + l, k);
    for i in 0..k {
        iv[(i, i)] = Complex64::new(1.0, 0.0);
    }
    iv.view_mut((k, 0), (l, k)).copy_from(vm);
    let form = iv.adjoint() * p0 * iv;
    Ok(lti::hermitian_min_eig(&form))
}

/// Membership margin of an uncertainty's frequency response at one point.
fn membership_margin(set: &ValueSet, delta: &StateSpace, omega: Omega) -> Result<f64> {
    let resp = delta.eval_freq(omega)?;
    if set.kind == SetKind::FullBlock {
        full_block_margin(set, &resp)
    } else {
        scalar_margin(set, resp[(0, 0)])
    }
}

fn omega_value(omega: Omega) -> f64 {
    match omega {
        Omega::Finite(w) => w,
        Omega::Infinity => f64::INFINITY,
    }
}

/// Error out with the offending frequency and margin if the uncertainty
/// leaves the set anywhere on the grid.
fn require_membership(set: &ValueSet, delta: &StateSpace, omegas: &[Omega]) -> Result<()> {
    for &omega in omegas {
        let margin = membership_margin(set, delta, omega)?;
        if margin < -MEMBERSHIP_TOL {
            return Err(Error::MembershipViolation(omega_value(omega), margin));
        }
    }
    Ok(())
}

/// True when the response stays strictly inside the set on the default
/// grid (used to accept sampled uncertainties).
fn response_inside(set: &ValueSet, delta: &StateSpace) -> Result<bool> {
    for &omega in &default_grid() {
        if membership_margin(set, delta, omega)? < INTERIOR_MARGIN {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The signal stack z ↦ [z; Δz].
fn identity_over(delta: &StateSpace, k: usize) -> Result<StateSpace> {
    if delta.input_dim() != k {
        return Err(Error::DimensionMismatch(format!(
            "uncertainty takes {} inputs, the loop provides {k}",
            delta.input_dim()
        )));
    }
    let n = delta.state_dim();
    let l = delta.output_dim();
    let mut c = DMatrix::zeros(k + l, n);
    c.view_mut((k, 0), (l, n)).copy_from(&delta.c);
    let mut d = DMatrix::zeros(k + l, k);
    for i in 0..k {
        d[(i, i)] = 1.0;
    }
    d.view_mut((k, 0), (l, k)).copy_from(&delta.d);
    StateSpace::new(delta.a.clone(), delta.b.clone(), c, d)
}

fn require_same_kind(certificate: &Certificate, recipe: &MultiplierRecipe) -> Result<()> {
    if certificate.test_kind != recipe.test_kind {
        return Err(Error::UnsupportedCombination(format!(
            "certificate was produced by {:?} but the recipe builds {:?}",
            certificate.test_kind, recipe.test_kind
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Frequency route.
// ---------------------------------------------------------------------------

/// Sample the frequency-domain inequality behind a certificate.
///
/// At each grid frequency the uncertainty must lie in the recipe's value
/// set (otherwise [`Error::MembershipViolation`] reports the frequency and
/// margin), and the quadratic form that the certified middle matrix
/// induces on the stacked response Ψ(iω)[I; Δ(iω)] is evaluated.  Returns
/// the most negative eigenvalue seen over the grid; a sound certificate
/// keeps it above `-`[`FREQ_TOL`].
pub fn check_fdi(
    certificate: &Certificate,
    recipe: &MultiplierRecipe,
    delta: &StateSpace,
    omegas: &[Omega],
) -> Result<f64> {
    require_same_kind(certificate, recipe)?;
    let set = &recipe.value_set;
    let expanded = expand_delta(set, delta)?;
    let middle = recipe.middle_matrix(&certificate.variables)?;
    let middle_c = middle.map(|x| Complex64::new(x, 0.0));
    let theta = recipe
        .outer_factor_or_identity()
        .compose_series(&identity_over(&expanded, set.k())?)?;
    let mut worst = f64::INFINITY;
    for &omega in omegas {
        let margin = membership_margin(set, delta, omega)?;
        if margin < -MEMBERSHIP_TOL {
            return Err(Error::MembershipViolation(omega_value(omega), margin));
        }
        let t = theta.eval_freq(omega)?;
        let form = t.adjoint() * &middle_c * &t;
        let herm = (&form + form.adjoint()).scale(0.5);
        worst = worst.min(lti::hermitian_min_eig(&herm));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Time route.
// ---------------------------------------------------------------------------

/// Randomized finite-horizon dissipation check.
///
/// Drives z through the stacked filter Ψ[I; Δ] from zero initial state
/// with `seeds` randomized inputs (sinusoid mixtures plus smoothed noise,
/// seeded from `base_seed`), accumulates ∫ yᵀ(middle)y dt along the way,
/// and adds the certified terminal cost on the filter state at every
/// integration step.  A certificate is sound when the reported worst
/// margin stays above `-`[`SIM_TOL`].
pub fn check_dissipation(
    certificate: &Certificate,
    recipe: &MultiplierRecipe,
    delta: &StateSpace,
    seeds: usize,
    base_seed: u64,
    horizon: f64,
    dt: f64,
) -> Result<DissipationReport> {
    require_same_kind(certificate, recipe)?;
    if !(dt > 0.0) || !(horizon > dt) {
        return Err(Error::DimensionMismatch(format!(
            "horizon {horizon} must exceed the positive step size {dt}"
        )));
    }
    let set = &recipe.value_set;
    let expanded = expand_delta(set, delta)?;
    require_membership(set, delta, &default_grid())?;
    let middle = recipe.middle_matrix(&certificate.variables)?;
    let terminal = recipe.terminal_cost(&certificate.variables)?;
    let theta = recipe
        .outer_factor_or_identity()
        .compose_series(&identity_over(&expanded, set.k())?)?;
    let n_term = terminal.nrows();
    let count = (horizon / dt).round().max(1.0) as usize;
    let n_check = count.min(100);
    let horizons: Vec<f64> = (1..=n_check)
        .map(|j| (j * count / n_check) as f64 * dt)
        .collect();
    let x0 = DVector::zeros(theta.state_dim());
    let mut report = DissipationReport {
        worst_margin: f64::INFINITY,
        worst_time: 0.0,
        horizons,
        inputs_tested: seeds,
        seed: base_seed,
        worst_seed: base_seed,
    };
    for i in 0..seeds {
        let seed_i = base_seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed_i);
        let input = random_test_input(&mut rng, set.k(), count, dt);
        let traj = theta.simulate_from(&x0, &input, Some(&middle))?;
        for (s, q) in traj.quad.iter().enumerate() {
            let xi = traj.states[s].rows(0, n_term);
            let value = q + (xi.transpose() * &terminal * xi)[(0, 0)];
            if value < report.worst_margin {
                report.worst_margin = value;
                report.worst_time = s as f64 * dt;
                report.worst_seed = seed_i;
            }
        }
    }
    Ok(report)
}

/// Knot spacing of generated test inputs.  Signals are piecewise constant
/// on this fixed grid, so a simulation step that divides the spacing sees
/// the exact same continuous input; refining the step then isolates the
/// integrator's own error instead of changing the experiment.
const INPUT_KNOT: f64 = 1e-3;

/// Test signal: per channel, three sinusoids with log-uniform frequencies
/// plus uniform noise, all O(1) amplitude, evaluated knot by knot on the
/// fixed [`INPUT_KNOT`] grid and held in between.
fn random_test_input(
    rng: &mut ChaCha8Rng,
    channels: usize,
    count: usize,
    dt: f64,
) -> SampledSignal {
    let knots = ((count as f64 * dt) / INPUT_KNOT).ceil() as usize + 1;
    let mut samples = vec![DVector::zeros(channels); count];
    for c in 0..channels {
        let mut tones = Vec::with_capacity(3);
        for _ in 0..3 {
            let freq = 10f64.powf(rng.gen_range(-1.0..1.7));
            tones.push((freq, rng.gen_range(0.2..1.0), rng.gen_range(0.0..TAU)));
        }
        let noise_amp = rng.gen_range(0.3..1.2);
        let knot_values: Vec<f64> = (0..knots)
            .map(|j| {
                let t = j as f64 * INPUT_KNOT;
                let mut v = rng.gen_range(-noise_amp..noise_amp);
                for &(w, a, ph) in &tones {
                    v += a * (w * t + ph).sin();
                }
                v
            })
            .collect();
        for (i, sample) in samples.iter_mut().enumerate() {
            // The half-step offset keeps the knot lookup away from float
            // boundaries, so the same physical time indexes the same knot
            // at every step size.
            let idx = ((i as f64 * dt + 0.5 * dt.min(INPUT_KNOT)) / INPUT_KNOT) as usize;
            sample[c] = knot_values[idx.min(knots - 1)];
        }
    }
    SampledSignal::new(dt, samples)
}

// ---------------------------------------------------------------------------
// Witness route.
// ---------------------------------------------------------------------------

/// Recover the storage matrix coupling one scalar uncertainty to one
/// quadratic form.
///
/// Solves the one-variable program for a symmetric W with
/// `[I 0; A B]ᵀ[0 W; W 0][I 0; A B] + [0 1; C D]ᵀ P₀ [0 1; C D] ⪰ 0`,
/// which exists exactly when the form stays nonnegative along the
/// uncertainty's frequency response.  Static uncertainties reduce to a
/// direct evaluation with an empty W.  Fails with
/// [`Error::InfeasibleWitness`] when no witness exists — i.e. the
/// frequency inequality is violated somewhere.
pub fn kyp_witness(delta: &StateSpace, p0: &DMatrix<f64>) -> Result<KypWitness> {
    if delta.input_dim() != 1 || delta.output_dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "witness recovery needs a SISO uncertainty, got {}x{}",
            delta.output_dim(),
            delta.input_dim()
        )));
    }
    if p0.nrows() != 2
        || p0.ncols() != 2
        || (p0[(0, 1)] - p0[(1, 0)]).abs() > 1e-12 * (1.0 + p0.amax())
    {
        return Err(Error::DimensionMismatch(
            "the quadratic form must be a symmetric 2x2 matrix".into(),
        ));
    }
    let n = delta.state_dim();
    if n == 0 {
        let dval = delta.d[(0, 0)];
        let form =
            p0[(0, 0)] + 2.0 * p0[(0, 1)] * dval + p0[(1, 1)] * dval * dval;
        if form >= -WITNESS_TOL {
            return Ok(KypWitness {
                w_matrix: DMatrix::zeros(0, 0),
                residual: form,
            });
        }
        return Err(Error::InfeasibleWitness(format!(
            "constant value {dval} violates the quadratic form: {form:.3e}"
        )));
    }
    if !lti::is_hurwitz(&delta.a) {
        return Err(Error::UnsupportedCombination(
            "witness recovery requires a Hurwitz uncertainty realization".into(),
        ));
    }
    let mut vars = VarSpace::new();
    let w_id = vars.declare("W", VarKind::Symmetric(n));
    let w = vars.expr(w_id);
    let zero = AffineMatrix::zeros(n, n);
    let cross = affine::from_block_rows(&[vec![zero.clone(), w.clone()], vec![w, zero]]);
    let f1 = lti::blkstack(&[
        &[&DMatrix::identity(n, n), &DMatrix::zeros(n, 1)],
        &[&delta.a, &delta.b],
    ]);
    let f2 = lti::blkstack(&[
        &[&DMatrix::zeros(1, n), &DMatrix::identity(1, 1)],
        &[&delta.c, &delta.d],
    ]);
    let expr = cross
        .congruence(&f1)
        .add(&AffineMatrix::from_const(f2.transpose() * p0 * &f2));
    // The program is self-contained; the context records the form it
    // certifies and the uncertainty it was posed for.
    let context = BuildContext {
        recipe: MultiplierRecipe::new(
            TestKind::StaticRepeated,
            None,
            ValueSet::repeated_quadratic(p0.clone(), 1, true)?,
        )?,
        plant: Plant::without_perf(StateSpace::from_static(DMatrix::zeros(1, 1))),
        notes: vec!["internal scalar witness program".into()],
    };
    let problem = SdpProblem {
        vars,
        blocks: vec![LmiBlock::psd("witness", expr.clone())],
        objective: None,
        context,
    };
    let opts = SolverOptions {
        margin_scope: MarginScope::AllBlocks,
        ..SolverOptions::default()
    };
    let sol = sdp::solve(&problem, &opts)?;
    if sol.status == SolveStatus::Infeasible {
        return Err(Error::InfeasibleWitness(format!(
            "no storage matrix satisfies the coupled inequality (slack bound {:.3e})",
            sol.feasibility_margin.unwrap_or(f64::NAN)
        )));
    }
    let residual = lti::symmetric_min_eig(&expr.eval(&sol.x));
    if residual < -WITNESS_TOL {
        return Err(Error::InfeasibleWitness(format!(
            "witness search stalled at residual {residual:.3e}"
        )));
    }
    let w_matrix = sol
        .variables
        .get("W")
        .cloned()
        .ok_or_else(|| Error::MissingVariable("W".into()))?;
    Ok(KypWitness { w_matrix, residual })
}

// ---------------------------------------------------------------------------
// Structural probes.
// ---------------------------------------------------------------------------

/// Measure how far H∘(gI_k) and (gI_l)∘H are from agreeing on one sampled
/// input.
///
/// Both orders are simulated as cascades on the signal level — the
/// intermediate signal is sampled and held like any other signal — so the
/// reported supremum reflects the discretization, and shrinks at the
/// integrator's order as `dt` decreases.  The input is refined (same
/// piecewise-constant signal, finer grid) when `dt` is below its spacing.
pub fn check_commutation(
    g: &StateSpace,
    h: &StateSpace,
    input: &SampledSignal,
    dt: f64,
) -> Result<f64> {
    if g.input_dim() != 1 || g.output_dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "commutation probe needs a SISO g, got {}x{}",
            g.output_dim(),
            g.input_dim()
        )));
    }
    if input.is_empty() {
        return Err(Error::DimensionMismatch("empty input signal".into()));
    }
    let k = h.input_dim();
    let l = h.output_dim();
    if input.samples[0].nrows() != k {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channels, H takes {k}",
            input.samples[0].nrows()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::DimensionMismatch(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let factor = (input.dt / dt).round().max(1.0) as usize;
    let fine = input.refine(factor);
    let gk = lti::kron_left(k, g);
    let gl = lti::kron_left(l, g);
    let y1 = h.simulate(&gk.simulate(&fine)?)?;
    let y2 = gl.simulate(&h.simulate(&fine)?)?;
    let mut sup = 0.0f64;
    for (a, b) in y1.samples.iter().zip(&y2.samples) {
        sup = sup.max((a - b).amax());
    }
    Ok(sup)
}

/// Verify the invariant-ellipsoid consequence of a certificate along a
/// simulated closed-loop trajectory.
///
/// The uncertainty loop w = Δz is closed around the plant, the recipe's
/// filter rides along on [z; w], and at every sample the inequality
/// `[ξ; x]ᵀ(X − blkdiag(terminal, 0))[ξ; x] ≤ [0; x₀]ᵀ X [0; x₀]`
/// is checked (relative tolerance 1e−6).  Returns false at the first
/// violation.
pub fn check_ellipsoid_invariance(
    certificate: &Certificate,
    recipe: &MultiplierRecipe,
    plant: &Plant,
    delta: &StateSpace,
    x0: &DVector<f64>,
    horizon: f64,
    dt: f64,
) -> Result<bool> {
    require_same_kind(certificate, recipe)?;
    if !(dt > 0.0) || !(horizon > dt) {
        return Err(Error::DimensionMismatch(format!(
            "horizon {horizon} must exceed the positive step size {dt}"
        )));
    }
    let set = &recipe.value_set;
    let expanded = expand_delta(set, delta)?;
    require_membership(set, delta, &default_grid())?;
    let psi = recipe.outer_factor_or_identity();
    let x_mat = certificate.variable("X")?;
    let terminal = recipe.terminal_cost(&certificate.variables)?;
    let n_psi = psi.state_dim();
    let n = plant.n();
    let (k, l) = (plant.k(), plant.l());
    if set.k() != k || set.l() != l {
        return Err(Error::DimensionMismatch(format!(
            "plant couples a {k}x{l} uncertainty channel, the set supplies {}x{}",
            set.l(),
            set.k()
        )));
    }
    if x_mat.nrows() != n_psi + n {
        return Err(Error::DimensionMismatch(format!(
            "storage matrix must be {}x{0}, got {1}x{1}",
            n_psi + n,
            x_mat.nrows()
        )));
    }
    if x0.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state must have {n} entries, got {}",
            x0.nrows()
        )));
    }
    let m = expanded.state_dim();
    let (a, b, c, d) = (&plant.sys.a, &plant.sys.b, &plant.sys.c, &plant.sys.d);
    let (ad, bd, cd, dd) = (&expanded.a, &expanded.b, &expanded.c, &expanded.d);
    let loop_gain = DMatrix::identity(k, k) - d * dd;
    let phi = loop_gain.try_inverse().ok_or_else(|| {
        Error::UnsupportedCombination(
            "the uncertainty loop is singular: det(I − D·Dδ) = 0".into(),
        )
    })?;
    // z = Zx·x + Zδ·xδ and w = Wx·x + Wδ·xδ after eliminating the
    // algebraic loop.
    let zx = &phi * c;
    let zd = &phi * (d * cd);
    let wx = dd * &zx;
    let wd = cd + dd * &zd;
    let bz = psi.b.columns(0, k).into_owned();
    let bw = psi.b.columns(k, l).into_owned();
    let a_cl = lti::blkstack(&[
        &[&psi.a, &(&bz * &zx + &bw * &wx), &(&bz * &zd + &bw * &wd)],
        &[
            &DMatrix::zeros(n, n_psi),
            &(a + b * &wx),
            &(b * &wd),
        ],
        &[
            &DMatrix::zeros(m, n_psi),
            &(bd * &zx),
            &(ad + bd * &zd),
        ],
    ]);
    let n_cl = n_psi + n + m;
    let closed = StateSpace::new(
        a_cl,
        DMatrix::zeros(n_cl, 0),
        lti::hstack(&[
            &DMatrix::identity(n_psi + n, n_psi + n),
            &DMatrix::zeros(n_psi + n, m),
        ]),
        DMatrix::zeros(n_psi + n, 0),
    )?;
    let steps = (horizon / dt).round().max(1.0) as usize;
    let input = SampledSignal::new(dt, vec![DVector::zeros(0); steps]);
    let mut start = DVector::zeros(n_cl);
    start.rows_mut(n_psi, n).copy_from(x0);
    let traj = closed.simulate_from(&start, &input, None)?;
    let mut shape = x_mat.clone();
    for i in 0..n_psi {
        for j in 0..n_psi {
            shape[(i, j)] -= terminal[(i, j)];
        }
    }
    let rhs = (x0.transpose() * x_mat.view((n_psi, n_psi), (n, n)) * x0)[(0, 0)];
    let tol = 1e-6 * (1.0 + rhs.abs());
    for state in &traj.states {
        let v = state.rows(0, n_psi + n);
        let lhs = (v.transpose() * &shape * v)[(0, 0)];
        if lhs > rhs + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sample |det(I − DV)| over a value set and return the minimum seen.
///
/// Scalar sets are probed at their boundary samples, at zero when it
/// belongs to the set, and at rejection-sampled interior points; full
/// block sets at rejection-sampled random directions pushed toward the
/// boundary by bisection.  A certified loop keeps the minimum bounded
/// away from zero.
pub fn check_wellposedness(plant: &Plant, set: &ValueSet, samples: usize) -> Result<f64> {
    let (k, l) = (plant.k(), plant.l());
    if set.k() != k || set.l() != l {
        return Err(Error::DimensionMismatch(format!(
            "plant couples a {k}x{l} uncertainty channel, the set supplies {}x{}",
            set.l(),
            set.k()
        )));
    }
    if k == 0 || l == 0 {
        return Ok(1.0);
    }
    let d = plant.sys.d.map(|x| Complex64::new(x, 0.0));
    let eye = DMatrix::<Complex64>::identity(k, k);
    let mut min_det = f64::INFINITY;
    let mut probe = |vm: &DMatrix<Complex64>| {
        let m = &eye - &d * vm;
        min_det = min_det.min(m.determinant().norm());
    };
    match set.kind {
        SetKind::FullBlock => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x77e11);
            if full_block_margin(set, &DMatrix::zeros(l, k))? >= 0.0 {
                probe(&DMatrix::zeros(l, k));
            }
            let mut kept = 0usize;
            let mut tries = 0usize;
            while kept < samples && tries < 60 * samples.max(1) {
                tries += 1;
                let dir = DMatrix::from_fn(l, k, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                let scale = 10f64.powf(rng.gen_range(-1.5..0.5));
                let inside = dir.scale(scale);
                if full_block_margin(set, &inside)? < 0.0 {
                    continue;
                }
                probe(&inside);
                // Push the accepted direction toward the boundary.
                let (mut lo, mut hi) = (scale, scale);
                for _ in 0..12 {
                    hi *= 2.0;
                    if full_block_margin(set, &dir.scale(hi))? < 0.0 {
                        break;
                    }
                    lo = hi;
                }
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if full_block_margin(set, &dir.scale(mid))? >= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                probe(&dir.scale(lo));
                kept += 1;
            }
        }
        _ => {
            let scalar_probe =
                |v: Complex64| DMatrix::from_diagonal_element(l, k, v);
            for v in set.boundary_samples(samples.max(4))? {
                probe(&scalar_probe(v));
            }
            if scalar_margin(set, Complex64::new(0.0, 0.0))? >= 0.0 {
                probe(&scalar_probe(Complex64::new(0.0, 0.0)));
            }
            let boundary = set.boundary_samples(64)?;
            let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut im_lo, mut im_hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for b in &boundary {
                re_lo = re_lo.min(b.re);
                re_hi = re_hi.max(b.re);
                im_lo = im_lo.min(b.im);
                im_hi = im_hi.max(b.im);
            }
            if re_lo.is_finite() {
                let mut rng = ChaCha8Rng::seed_from_u64(0x77e11);
                let real_only = set.kind == SetKind::EquationConstrained;
                let mut kept = 0usize;
                let mut tries = 0usize;
                while kept < samples && tries < 60 * samples.max(1) {
                    tries += 1;
                    let re = rng.gen_range(re_lo..=re_hi);
                    let im = if real_only || im_lo >= im_hi {
                        0.0
                    } else {
                        rng.gen_range(im_lo..=im_hi)
                    };
                    let v = Complex64::new(re, im);
                    if scalar_margin(set, v)? >= 0.0 {
                        probe(&scalar_probe(v));
                        kept += 1;
                    }
                }
            }
        }
    }
    if !min_det.is_finite() {
        return Err(Error::UnsupportedCombination(
            "no value-set point could be sampled for the determinant sweep".into(),
        ));
    }
    Ok(min_det)
}

// ---------------------------------------------------------------------------
// Uncertainty sampling.
// ---------------------------------------------------------------------------

/// Draw a random uncertainty whose frequency response stays strictly
/// inside the value set.
///
/// Sets flagged parametric (and equation-constrained sets, whose members
/// are real-valued on the axis) receive constant real gains, since the
/// sign-relaxed tests they enable are justified for constant real
/// parameters only.  Other scalar sets receive a stable two-pole system
/// around a real interior anchor; candidates are rejected unless the
/// response stays inside on the default grid (∞ included), with the
/// dynamic part shrunk until acceptance.  Full-block sets are sampled
/// along the rectangular identity direction.
pub fn sample_delta_in_set(set: &ValueSet, seed: u64) -> Result<StateSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if set.kind == SetKind::FullBlock {
        return sample_full_block(set, &mut rng);
    }
    let boundary = set.boundary_samples(160)?;
    let anchor = real_anchor(set, &boundary, &mut rng)?;
    if set.parametric || set.kind == SetKind::EquationConstrained {
        return Ok(StateSpace::from_static(DMatrix::from_element(1, 1, anchor)));
    }
    let dist = boundary
        .iter()
        .map(|b| (b - Complex64::new(anchor, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    let dist = if dist.is_finite() { dist.max(1e-3) } else { 1.0 };
    for _attempt in 0..8 {
        let p1 = 10f64.powf(rng.gen_range(-0.7..0.7));
        let p2 = 10f64.powf(rng.gen_range(-0.7..0.7));
        let mut r1 = rng.gen_range(-1.0..1.0) * dist;
        let mut r2 = rng.gen_range(-1.0..1.0) * dist;
        for _shrink in 0..60 {
            let cand = first_order_pair(anchor, p1, p2, r1, r2);
            if response_inside(set, &cand)? {
                return Ok(cand);
            }
            r1 *= 0.5;
            r2 *= 0.5;
        }
    }
    // The constant anchor is always admissible.
    Ok(StateSpace::from_static(DMatrix::from_element(1, 1, anchor)))
}

/// δ(s) = v₀ + r₁/(s+p₁) + r₂/(s+p₂) as a real state-space system.
fn first_order_pair(v0: f64, p1: f64, p2: f64, r1: f64, r2: f64) -> StateSpace {
    StateSpace::new(
        DMatrix::from_row_slice(2, 2, &[-p1, 0.0, 0.0, -p2]),
        DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[r1, r2]),
        DMatrix::from_element(1, 1, v0),
    )
    .expect("fixed dimensions")
}

/// A real value strictly inside the scalar set, found by rejection over
/// the boundary's bounding interval.
fn real_anchor(
    set: &ValueSet,
    boundary: &[Complex64],
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for b in boundary {
        lo = lo.min(b.re);
        hi = hi.max(b.re);
    }
    if !lo.is_finite() {
        lo = -2.0;
        hi = 2.0;
    }
    let span = (hi - lo).max(1.0);
    let (lo, hi) = (lo - 0.15 * span, hi + 0.15 * span);
    for _ in 0..4000 {
        let v = rng.gen_range(lo..hi);
        if scalar_margin(set, Complex64::new(v, 0.0))? >= INTERIOR_MARGIN {
            return Ok(v);
        }
    }
    Err(Error::UnsupportedCombination(
        "no strictly interior real value found; a real-rational sample needs one".into(),
    ))
}

fn sample_full_block(set: &ValueSet, rng: &mut ChaCha8Rng) -> Result<StateSpace> {
    let (k, l) = (set.k(), set.l());
    let jmat = DMatrix::<f64>::identity(l, k);
    let mut anchor = None;
    for _ in 0..4000 {
        let v = rng.gen_range(-2.0..2.0);
        let m = (&jmat * v).map(|x| Complex64::new(x, 0.0));
        if full_block_margin(set, &m)? >= INTERIOR_MARGIN {
            anchor = Some(v);
            break;
        }
    }
    let anchor = anchor.ok_or_else(|| {
        Error::UnsupportedCombination(
            "no interior multiple of the rectangular identity found in the full-block set"
                .into(),
        )
    })?;
    if set.parametric {
        return Ok(StateSpace::from_static(&jmat * anchor));
    }
    for _attempt in 0..8 {
        let p1 = 10f64.powf(rng.gen_range(-0.7..0.7));
        let p2 = 10f64.powf(rng.gen_range(-0.7..0.7));
        let mut r1 = rng.gen_range(-0.5..0.5);
        let mut r2 = rng.gen_range(-0.5..0.5);
        for _shrink in 0..60 {
            let scalar = first_order_pair(anchor, p1, p2, r1, r2);
            let cand = direction_times(&jmat, &scalar);
            if response_inside(set, &cand)? {
                return Ok(cand);
            }
            r1 *= 0.5;
            r2 *= 0.5;
        }
    }
    Ok(StateSpace::from_static(&jmat * anchor))
}

/// V(s) = J·δ(s) for a constant direction J and SISO δ.
fn direction_times(j: &DMatrix<f64>, scalar: &StateSpace) -> StateSpace {
    let rep = lti::kron_left(j.ncols(), scalar);
    StateSpace::new(rep.a.clone(), rep.b.clone(), j * &rep.c, j * &rep.d)
        .expect("compatible dimensions")
}
