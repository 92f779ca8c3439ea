//! Representing functions on `(0, ∞)` and the connections they induce on
//! positive matrix pairs.
//!
//! A connection evaluates through functional calculus,
//! `A σ B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`, with the value of `f`
//! at `0+` supplied for the clamped part of the spectrum. Singular pairs go
//! through the downward regularized extension. Shape constraints on `f`
//! (positivity, monotonicity, concavity) are enforced on a fixed
//! logarithmic grid at construction; they are necessary conditions for
//! operator monotonicity and catch malformed inputs early.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::{loewner_leq, psd_tolerance, PsdMatrix, SpdMatrix, SymMatrix};
use crate::measure::{self, BorelMeasure};

/// Shared scalar function.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of points in the standard validation grid.
pub const GRID_POINTS: usize = 64;
/// Relative tolerance for the symmetry test `f(x) = x·f(1/x)`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Relative slack allowed on grid monotonicity and concavity.
const SHAPE_TOL: f64 = 1e-9;
/// Tolerance on `f(1) = 1` for the normalization flag.
const NORMALIZED_TOL: f64 = 1e-12;
/// Operator-norm stopping threshold for the regularized extension.
const EXTENSION_TOL: f64 = 1e-9;
/// Maximum halvings in the regularized extension.
const EXTENSION_MAX_STEPS: u32 = 60;

/// Logarithmic grid on `[1e-6, 1e6]` used for all scalar shape checks.
pub fn standard_grid() -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / (GRID_POINTS - 1) as f64))
        .collect()
}

/// Positive operator monotone function on `(0, ∞)` with recorded boundary
/// behavior. Evaluation is by closure; the limits at `0+` for the function
/// and its transpose are stored explicitly.
#[derive(Clone)]
pub struct ReprFn {
    label: String,
    eval: ScalarFn,
    f_at_0plus: f64,
    transpose_at_0plus: f64,
    symmetric: bool,
    normalized: bool,
}

impl fmt::Debug for ReprFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReprFn")
            .field("label", &self.label)
            .field("f_at_0plus", &self.f_at_0plus)
            .field("transpose_at_0plus", &self.transpose_at_0plus)
            .field("symmetric", &self.symmetric)
            .field("normalized", &self.normalized)
            .finish()
    }
}

impl ReprFn {
    /// Build and validate on the standard grid: positive finite values,
    /// nondecreasing, concave (nonincreasing difference quotients). The
    /// symmetry and normalization flags are derived, not declared.
    pub fn new(
        label: impl Into<String>,
        eval: ScalarFn,
        f_at_0plus: f64,
        transpose_at_0plus: f64,
    ) -> Result<ReprFn> {
        let label = label.into();
        let invalid = |reason: String| Error::InvalidRepresentingFunction {
            label: label.clone(),
            reason,
        };
        if !f_at_0plus.is_finite() || f_at_0plus < 0.0 {
            return Err(invalid(format!("limit at 0+ must be finite and >= 0, got {f_at_0plus}")));
        }
        if !transpose_at_0plus.is_finite() || transpose_at_0plus < 0.0 {
            return Err(invalid(format!(
                "transpose limit at 0+ must be finite and >= 0, got {transpose_at_0plus}"
            )));
        }
        let grid = standard_grid();
        let vals: Vec<f64> = grid.iter().map(|&x| eval(x)).collect();
        for (&x, &v) in grid.iter().zip(&vals) {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(format!("value {v} at x = {x:.3e} not finite positive")));
            }
        }
        for i in 0..vals.len() - 1 {
            if vals[i + 1] < vals[i] - SHAPE_TOL * (1.0 + vals[i].abs()) {
                return Err(invalid(format!(
                    "not nondecreasing near x = {:.3e}: {} then {}",
                    grid[i],
                    vals[i],
                    vals[i + 1]
                )));
            }
        }
        let slopes: Vec<f64> = (0..vals.len() - 1)
            .map(|i| (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]))
            .collect();
        for i in 0..slopes.len() - 1 {
            if slopes[i + 1] > slopes[i] + SHAPE_TOL * (1.0 + slopes[i].abs()) {
                return Err(invalid(format!(
                    "not concave near x = {:.3e}: slope {} then {}",
                    grid[i + 1],
                    slopes[i],
                    slopes[i + 1]
                )));
            }
        }
        let symmetric = check_symmetric_fn(&*eval, &grid);
        if symmetric && (f_at_0plus - transpose_at_0plus).abs() > SYMMETRY_TOL * (1.0 + f_at_0plus)
        {
            return Err(invalid(format!(
                "symmetric on the grid but boundary limits differ: {f_at_0plus} vs {transpose_at_0plus}"
            )));
        }
        let normalized = (eval(1.0) - 1.0).abs() <= NORMALIZED_TOL;
        Ok(ReprFn {
            label,
            eval,
            f_at_0plus,
            transpose_at_0plus,
            symmetric,
            normalized,
        })
    }

    /// Power mean representing function
    /// `f_p(t) = ((1 + t^p)/2)^{1/p}` for `p ∈ [-1, 1]`, `f_0(t) = √t`.
    pub fn power(p: f64) -> Result<ReprFn> {
        if !p.is_finite() || !(-1.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "power mean exponent must lie in [-1, 1], got {p}"
            )));
        }
        let label = format!("power:{p}");
        let eval: ScalarFn = Arc::new(move |t: f64| power_eval(p, t));
        let alpha = if p > 0.0 { (0.5f64).powf(1.0 / p) } else { 0.0 };
        ReprFn::new(label, eval, alpha, alpha)
    }

    pub fn arithmetic() -> ReprFn {
        ReprFn::power(1.0).expect("p = 1 is valid").with_label("arithmetic")
    }

    pub fn geometric() -> ReprFn {
        ReprFn::power(0.0).expect("p = 0 is valid").with_label("geometric")
    }

    pub fn harmonic() -> ReprFn {
        ReprFn::power(-1.0).expect("p = -1 is valid").with_label("harmonic")
    }

    /// Convex combination `w·f + (1−w)·g`.
    pub fn mix(w: f64, f: &ReprFn, g: &ReprFn) -> Result<ReprFn> {
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidInput(format!("mixture weight must lie in [0, 1], got {w}")));
        }
        let (fe, ge) = (f.eval.clone(), g.eval.clone());
        let eval: ScalarFn = Arc::new(move |t: f64| w * fe(t) + (1.0 - w) * ge(t));
        ReprFn::new(
            format!("mix:{w}:{}:{}", f.label, g.label),
            eval,
            w * f.f_at_0plus + (1.0 - w) * g.f_at_0plus,
            w * f.transpose_at_0plus + (1.0 - w) * g.transpose_at_0plus,
        )
    }

    /// Transpose `f°(x) = x·f(1/x)`, with the boundary limits swapped.
    pub fn transpose(&self) -> Result<ReprFn> {
        let fe = self.eval.clone();
        let eval: ScalarFn = Arc::new(move |x: f64| x * fe(1.0 / x));
        ReprFn::new(
            format!("transpose:{}", self.label),
            eval,
            self.transpose_at_0plus,
            self.f_at_0plus,
        )
    }

    pub(crate) fn with_label(mut self, label: impl Into<String>) -> ReprFn {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// `x·f(1/x)` evaluated directly.
    pub fn eval_transpose(&self, x: f64) -> f64 {
        x * (self.eval)(1.0 / x)
    }

    pub fn shared_eval(&self) -> ScalarFn {
        self.eval.clone()
    }

    pub fn f_at_0plus(&self) -> f64 {
        self.f_at_0plus
    }

    pub fn transpose_at_0plus(&self) -> f64 {
        self.transpose_at_0plus
    }

    /// True when `f = f°` held on the validation grid.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// True when `f(1) = 1`.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

/// Symmetry test `|f(x) − x·f(1/x)| ≤ SYMMETRY_TOL·(1 + f(x))` over a grid.
pub fn check_symmetric_fn(f: impl Fn(f64) -> f64, grid: &[f64]) -> bool {
    grid.iter().all(|&x| {
        let v = f(x);
        (v - x * f(1.0 / x)).abs() <= SYMMETRY_TOL * (1.0 + v.abs())
    })
}

/// Symmetry of a representing function on the standard grid.
pub fn check_symmetric(f: &ReprFn) -> bool {
    check_symmetric_fn(|x| f.eval(x), &standard_grid())
}

/// `ln cosh x` without overflow for large `|x|`.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a > 20.0 {
        a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
    } else {
        (2.0 * (0.5 * x).sinh().powi(2)).ln_1p()
    }
}

/// Stable power-mean evaluation as `√t · exp(ln cosh(p·ln t / 2) / p)`.
fn power_eval(p: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return f64::NAN;
    }
    let s = t.sqrt();
    if p == 0.0 {
        s
    } else {
        s * (ln_cosh(0.5 * p * t.ln()) / p).exp()
    }
}

/// Relative spectral cutoff for the sandwich: eigenvalues this far under
/// the spectral radius are within solver resolution of zero, so they
/// evaluate through the right-limit value. Functions with unbounded
/// derivative at zero (roots, in particular) would otherwise amplify
/// eigensolver noise on exactly singular inputs into visible error.
const REL_EIG_CLAMP: f64 = 1e-13;

/// `A^{1/2} φ(A^{-1/2} B A^{-1/2}) A^{1/2}` with `φ := at_zero` on the
/// clamped part of the spectrum: nonpositive eigenvalues and eigenvalues
/// within `REL_EIG_CLAMP` of zero relative to the spectral radius.
pub(crate) fn sandwich_eval(
    a: &SpdMatrix,
    b: &SymMatrix,
    phi: &dyn Fn(f64) -> f64,
    at_zero: f64,
) -> Result<SymMatrix> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let (half, inv_half) = a.sqrt_pair();
    let c = SymMatrix::symmetrized(inv_half * b.dmatrix() * inv_half);
    let dec = c.eig();
    let cutoff = REL_EIG_CLAMP * dec.max_abs_eigenvalue();
    let fc = dec.apply(|lam| if lam <= cutoff { at_zero } else { phi(lam) })?;
    Ok(SymMatrix::symmetrized(half * fc.dmatrix() * half))
}

/// Connection value `A σ_f B` for definite `A` and semidefinite `B`.
pub fn connection_eval(f: &ReprFn, a: &SpdMatrix, b: &PsdMatrix) -> Result<PsdMatrix> {
    let r = sandwich_eval(a, b.as_sym(), &*f.eval, f.f_at_0plus)?;
    PsdMatrix::try_from_sym(r)
}

/// Downward regularized extension of `A σ_f B` to semidefinite pairs:
/// evaluate at `A + εI, B + εI` along halving `ε` until the operator-norm
/// change drops below `EXTENSION_TOL`. The sequence must be monotone
/// nonincreasing within classification tolerance.
pub fn connection_eval_psd(f: &ReprFn, a: &PsdMatrix, b: &PsdMatrix) -> Result<PsdMatrix> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let mut prev: Option<PsdMatrix> = None;
    let mut last_delta = f64::INFINITY;
    for step in 0..=EXTENSION_MAX_STEPS {
        let eps = (0.5f64).powi(step as i32);
        let a_eps = a.shifted(eps);
        let b_eps = b.shifted(eps);
        let cur = connection_eval(f, &a_eps, b_eps.as_psd())?;
        if let Some(p) = &prev {
            let tol = psd_tolerance(p.operator_norm());
            if !loewner_leq(cur.as_sym(), p.as_sym(), tol)? {
                let increase = (cur.as_sym() - p.as_sym()).eig().max_eigenvalue();
                return Err(Error::ExtensionNotMonotone { step, increase });
            }
            last_delta = (p.as_sym() - cur.as_sym()).operator_norm();
            if last_delta <= EXTENSION_TOL {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Err(Error::ExtensionDiverged { steps: EXTENSION_MAX_STEPS, last_delta })
}

/// Parallel sum `A : B = (A^{-1} + B^{-1})^{-1}`.
pub fn parallel_sum(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let sum = SpdMatrix::try_from_sym(a.inverse().as_sym() + b.inverse().as_sym())?;
    Ok(sum.inverse())
}

/// Geometric mean `A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}`.
pub fn geometric_mean(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    let r = sandwich_eval(a, b.as_sym(), &|x: f64| x.sqrt(), 0.0)?;
    SpdMatrix::try_from_sym(r)
}

/// Relative tolerance for scalar agreement between a function and the
/// integral of its measure: looser when quadrature nodes are involved.
fn scalar_agreement_tol(quadrature: bool, value: f64) -> f64 {
    let base = if quadrature { 1e-6 } else { 1e-9 };
    base * (1.0 + value.abs())
}

/// A connection: representing function plus, when available in closed form,
/// the Borel measure on `[0, ∞]` that integrates to it.
#[derive(Clone, Debug)]
pub struct Connection {
    f: ReprFn,
    measure: Option<BorelMeasure>,
}

impl Connection {
    /// Pair a function with an optional measure; when a measure is given it
    /// must reproduce `f` on the standard grid.
    pub fn new(f: ReprFn, measure: Option<BorelMeasure>) -> Result<Connection> {
        if let Some(m) = &measure {
            for x in standard_grid() {
                let via_measure = m.eval_fn(x)?;
                let direct = f.eval(x);
                if (via_measure - direct).abs() > scalar_agreement_tol(m.quadrature(), direct) {
                    return Err(Error::MeasureMismatch {
                        reason: format!(
                            "at x = {x:.6e}: function {direct:.12e} vs integral {via_measure:.12e}"
                        ),
                    });
                }
            }
        }
        Ok(Connection { f, measure })
    }

    pub fn f(&self) -> &ReprFn {
        &self.f
    }

    pub fn measure(&self) -> Option<&BorelMeasure> {
        self.measure.as_ref()
    }

    pub fn label(&self) -> &str {
        self.f.label()
    }

    /// `A σ B` by functional calculus.
    pub fn eval(&self, a: &SpdMatrix, b: &PsdMatrix) -> Result<PsdMatrix> {
        connection_eval(&self.f, a, b)
    }

    pub fn arithmetic() -> Connection {
        Connection::new(ReprFn::arithmetic(), Some(measure::arithmetic_measure()))
            .expect("arithmetic measure reproduces (1 + t)/2")
    }

    pub fn harmonic() -> Connection {
        Connection::new(ReprFn::harmonic(), Some(measure::harmonic_measure()))
            .expect("point mass at 1 reproduces 2t/(1 + t)")
    }

    pub fn geometric() -> Connection {
        Connection::new(ReprFn::geometric(), Some(measure::geometric_measure()))
            .expect("quadrature measure reproduces the square root")
    }

    /// Power-mean connection. Measures are attached only for the exponents
    /// with a closed-form measure: -1, 0, and 1.
    pub fn power(p: f64) -> Result<Connection> {
        if p == 1.0 {
            let f = ReprFn::power(1.0)?;
            return Connection::new(f, Some(measure::arithmetic_measure()));
        }
        if p == -1.0 {
            let f = ReprFn::power(-1.0)?;
            return Connection::new(f, Some(measure::harmonic_measure()));
        }
        if p == 0.0 {
            let f = ReprFn::power(0.0)?;
            return Connection::new(f, Some(measure::geometric_measure()));
        }
        Connection::new(ReprFn::power(p)?, None)
    }

    /// Convex combination; measures combine when both parts carry one.
    pub fn mix(w: f64, a: &Connection, b: &Connection) -> Result<Connection> {
        let f = ReprFn::mix(w, &a.f, &b.f)?;
        let measure = match (&a.measure, &b.measure) {
            (Some(ma), Some(mb)) => Some(BorelMeasure::mix(w, ma, mb)?),
            _ => None,
        };
        Connection::new(f, measure)
    }

    /// Parse a catalog selector: `power:<p>`, `arithmetic`, `geometric`,
    /// `harmonic`, or `mix:<w>:<left>:<right>` with nested selectors.
    pub fn parse(selector: &str) -> Result<Connection> {
        let unknown = || Error::Usage(format!("unknown mean selector '{selector}'"));
        match selector {
            "arithmetic" => return Ok(Connection::arithmetic()),
            "geometric" => return Ok(Connection::geometric()),
            "harmonic" => return Ok(Connection::harmonic()),
            _ => {}
        }
        if let Some(rest) = selector.strip_prefix("power:") {
            let p: f64 = rest.parse().map_err(|_| unknown())?;
            return Connection::power(p);
        }
        if let Some(rest) = selector.strip_prefix("mix:") {
            let (w_str, parts) = rest
                .split_once(':')
                .ok_or_else(|| Error::Usage(format!("mix selector needs a weight: '{selector}'")))?;
            let w: f64 = w_str.parse().map_err(|_| unknown())?;
            // Nested selectors may contain colons; try each split point of
            // the remainder and take the first that parses on both sides.
            for (i, ch) in parts.char_indices() {
                if ch != ':' {
                    continue;
                }
                let (left, right) = (&parts[..i], &parts[i + 1..]);
                if let (Ok(a), Ok(b)) = (Connection::parse(left), Connection::parse(right)) {
                    return Connection::mix(w, &a, &b);
                }
            }
            return Err(Error::Usage(format!(
                "cannot split '{parts}' into two mean selectors"
            )));
        }
        Err(unknown())
    }

    /// The symmetric means exercised by the order-determination suite: five
    /// power means and two mixtures, one with a summable measure and one
    /// whose measure has an infinite first moment.
    pub fn catalog_symmetric() -> Vec<Connection> {
        let mut out: Vec<Connection> = [-1.0, -0.5, 0.0, 0.5, 1.0]
            .iter()
            .map(|&p| Connection::power(p).expect("catalog exponent is valid"))
            .collect();
        out.push(
            Connection::mix(0.5, &Connection::arithmetic(), &Connection::harmonic())
                .expect("arithmetic and harmonic mix"),
        );
        out.push(
            Connection::mix(0.5, &Connection::arithmetic(), &Connection::geometric())
                .expect("arithmetic and geometric mix"),
        );
        out
    }
}
