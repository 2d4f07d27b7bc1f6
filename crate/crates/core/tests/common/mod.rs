//! Shared fixtures for the integration suites: an independent peak-gain
//! oracle based on Hamiltonian imaginary-axis eigenvalues, random stable
//! system generators, and explicit closed-loop assembly.
//!
//! Each integration test binary compiles its own copy, so helpers used by
//! only one suite are still fine here.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use iqc_core::lti::StateSpace;
use iqc_core::problem::Plant;

type Complex64 = Complex<f64>;

/// Largest singular value of a complex matrix.
fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// True when the Hamiltonian pencil for level `gamma` has an eigenvalue on
/// the imaginary axis, i.e. the peak gain reaches `gamma` somewhere.
fn hamiltonian_touches_axis(sys: &StateSpace, gamma: f64) -> bool {
    let n = sys.state_dim();
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let r = DMatrix::identity(d.ncols(), d.ncols()).scale(gamma * gamma) - d.transpose() * d;
    let r_inv = r
        .try_inverse()
        .expect("level above the feedthrough gain keeps R invertible");
    let a_ham = a + b * &r_inv * d.transpose() * c;
    let top_right = b * &r_inv * b.transpose();
    let s = DMatrix::identity(d.nrows(), d.nrows()) + d * &r_inv * d.transpose();
    let bottom_left = -(c.transpose() * s * c);
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_ham);
    h.view_mut((0, n), (n, n)).copy_from(&top_right);
    h.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    h.view_mut((n, n), (n, n)).copy_from(&(-a_ham.transpose()));
    h.complex_eigenvalues()
        .iter()
        .any(|l| l.re.abs() <= 1e-7 * (1.0 + l.norm()))
}

/// Peak frequency-domain gain (supremum of the largest singular value of
/// the response over all frequencies), computed by bisection on the
/// Hamiltonian imaginary-axis test.  This route shares no code with the
/// LMI machinery, so it serves as an independent oracle.  Requires a
/// stable realization; returns an upper bound within ~1e-9 relative.
pub fn peak_gain(sys: &StateSpace) -> f64 {
    if sys.state_dim() == 0 || sys.input_dim() == 0 || sys.output_dim() == 0 {
        return sigma_max(&sys.d.map(|x| Complex64::new(x, 0.0)));
    }
    // Frequency sweep for a lower bracket.
    let mut lo = sigma_max(&sys.d.map(|x| Complex64::new(x, 0.0)));
    for i in 0..200 {
        let w = 1e-3 * 1e6_f64.powf(i as f64 / 199.0);
        lo = lo.max(sigma_max(&sys.eval_freq(iqc_core::lti::Omega::Finite(w)).unwrap()));
    }
    lo = lo.max(sigma_max(
        &sys.eval_freq(iqc_core::lti::Omega::Finite(0.0)).unwrap(),
    ));
    let mut hi = 2.0 * lo + 1.0;
    while hamiltonian_touches_axis(sys, hi) {
        hi = 2.0 * hi + 1.0;
        assert!(hi < 1e12, "peak-gain bisection found no finite bracket");
    }
    let mut lo = lo.max(1e-12);
    for _ in 0..200 {
        if hi - lo <= 1e-11 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if hamiltonian_touches_axis(sys, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Random stable system: entries uniform in [-1, 1], with A shifted left
/// until its spectral abscissa sits below -0.5.
pub fn random_stable_system(
    rng: &mut ChaCha8Rng,
    n: usize,
    inputs: usize,
    outputs: usize,
) -> StateSpace {
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let abscissa = a
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    a -= DMatrix::identity(n, n).scale(abscissa + 0.5 + rng.gen_range(0.1..0.5));
    StateSpace::new(
        a,
        DMatrix::from_fn(n, inputs, |_, _| rng.gen_range(-1.0..1.0)),
        DMatrix::from_fn(outputs, n, |_, _| rng.gen_range(-1.0..1.0)),
        DMatrix::from_fn(outputs, inputs, |_, _| rng.gen_range(-0.3..0.3)),
    )
    .unwrap()
}

/// Close the uncertainty channel of `plant` with the block `delta`
/// (w = delta z) and return the performance channel d -> e as one system
/// over the stacked plant and block states.
pub fn close_loop(plant: &Plant, delta: &StateSpace) -> StateSpace {
    let perf = plant.perf.as_ref().expect("plant carries a performance channel");
    let sys = &plant.sys;
    let (n, nd) = (sys.state_dim(), delta.state_dim());
    let k = sys.output_dim();
    let phi = (DMatrix::identity(k, k) - &sys.d * &delta.d)
        .try_inverse()
        .expect("closed loop is well posed");
    // z = phi * (C x + D Cd xd + D12 dd)
    let zx = &phi * &sys.c;
    let zd = &phi * &sys.d * &delta.c;
    let zin = &phi * &perf.d12;
    // w = Cd xd + Dd z
    let wx = &delta.d * &zx;
    let wd = &delta.c + &delta.d * &zd;
    let win = &delta.d * &zin;

    let mut a = DMatrix::zeros(n + nd, n + nd);
    a.view_mut((0, 0), (n, n)).copy_from(&(&sys.a + &sys.b * &wx));
    a.view_mut((0, n), (n, nd)).copy_from(&(&sys.b * &wd));
    a.view_mut((n, 0), (nd, n)).copy_from(&(&delta.b * &zx));
    a.view_mut((n, n), (nd, nd))
        .copy_from(&(&delta.a + &delta.b * &zd));
    let mut b = DMatrix::zeros(n + nd, perf.b2.ncols());
    b.view_mut((0, 0), (n, perf.b2.ncols()))
        .copy_from(&(&perf.b2 + &sys.b * &win));
    b.view_mut((n, 0), (nd, perf.b2.ncols()))
        .copy_from(&(&delta.b * &zin));
    let mut c = DMatrix::zeros(perf.c2.nrows(), n + nd);
    c.view_mut((0, 0), (perf.c2.nrows(), n))
        .copy_from(&(&perf.c2 + &perf.d21 * &wx));
    c.view_mut((0, n), (perf.c2.nrows(), nd))
        .copy_from(&(&perf.d21 * &wd));
    let d = &perf.d22 + &perf.d21 * &win;
    StateSpace::new(a, b, c, d).unwrap()
}
