//! Norm-based order determination: does the norm of a symmetric mean over
//! a commuting test family decide the Löwner order?
//!
//! The affirmative direction is monotonicity. The converse is checked
//! constructively: when `A ≤ B` fails, a grid search over scaled spectral
//! projections of `B − A` produces an explicit test element whose mean
//! norms flip, with a safety margin. Supporting scans verify the limit
//! identities that drive the argument: the compression limit
//! `‖X_s + sP‖ − s → ‖PXP‖`, the norm formula for means vanishing at
//! zero, the shifted-projection limit for means with mass at zero and a
//! summable measure, and the divergence of the interior part when the
//! measure is not summable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, WitnessProbe};
use crate::matrix::{
    compress, compression_max_lambda, compression_norm, loewner_leq, spectral_projection,
    Interval, OrthProjection, PsdMatrix, SpdMatrix, SpectralDecomposition, SymMatrix,
    ENDPOINT_GUARD,
};
use crate::means::{connection_eval, sandwich_eval, Connection, ReprFn};
use crate::measure::split_h;

/// Absolute tolerance for limit-scan convergence.
pub const TOL_LIMIT: f64 = 1e-6;
/// A witness margin must exceed this multiple of the norm tolerance.
pub const WITNESS_MARGIN_FACTOR: f64 = 10.0;
/// Thresholds for the witness projection, as fractions of the most
/// negative eigenvalue of `B − A`.
const WITNESS_EPS_FRACTIONS: [f64; 3] = [0.9, 0.5, 0.1];
/// Identity shifts `delta` tried for the witness element `sP + s·delta·I`.
const WITNESS_DELTAS: [f64; 6] = [0.0, 1e-6, 1e-3, 0.1, 0.5, 1.0];
/// Scales tried are `2^k` for `k` up to this exponent.
const WITNESS_MAX_S_EXP: i32 = 30;
/// Eigenvalue gap of `B − A` needed before a midpoint split is used for
/// the auxiliary projection family.
const GAP_FLOOR: f64 = 1e-4;

/// Norm-comparison tolerance scaled to the pair.
pub fn norm_tolerance(a: &PsdMatrix, b: &PsdMatrix) -> f64 {
    1e-9 * (1.0 + a.operator_norm().max(b.operator_norm()))
}

/// Outcome of one order-determination round trip.
#[derive(Clone, Debug)]
pub struct OrderVerdict {
    /// Direct eigenvalue test of `A ≤ B`.
    pub loewner: bool,
    /// Whether mean norms were dominated over every tested element.
    pub norm_dominated: bool,
    /// Separating element when the order fails.
    pub witness: Option<WitnessReport>,
    /// Label of the mean used.
    pub mean_label: String,
    /// Number of sampled test elements.
    pub samples_used: usize,
}

/// Explicit norm-separating test element `X = s(P + delta·I)`.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub projection: OrthProjection,
    /// Spectral threshold that produced the projection.
    pub eps: f64,
    pub delta: f64,
    pub s: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    /// Margin bar the witness had to clear.
    pub threshold: f64,
}

impl WitnessReport {
    pub fn margin(&self) -> f64 {
        self.norm_a - self.norm_b
    }
}

/// One limit scan over an ascending scale grid.
#[derive(Clone, Debug)]
pub struct LimitScan {
    pub s_values: Vec<f64>,
    pub values: Vec<f64>,
    /// Predicted limit.
    pub target: f64,
    /// Final scanned value.
    pub extrapolated: f64,
    /// Last three values agree within `TOL_LIMIT`.
    pub converged: bool,
}

/// One row of the projection criteria report.
#[derive(Clone, Debug)]
pub struct Prop2Row {
    pub eps: f64,
    pub rank: usize,
    pub norm_a: f64,
    pub norm_b: f64,
    pub max_lambda_a: f64,
    pub max_lambda_b: f64,
}

/// Equivalent order criteria evaluated over a threshold grid: the direct
/// eigenvalue test, compression-norm domination, and inclusion of the
/// compression-lambda sets.
#[derive(Clone, Debug)]
pub struct Prop2Report {
    pub loewner: bool,
    pub rows: Vec<Prop2Row>,
    pub norm_criterion: bool,
    pub inclusion_criterion: bool,
}

/// Divergence scan for means with mass at zero and a non-summable measure.
#[derive(Clone, Debug)]
pub struct Case2bScan {
    pub s_values: Vec<f64>,
    /// `‖A σ_h (sP)‖ − ‖B σ_h (sP)‖` by functional calculus.
    pub diff_values: Vec<f64>,
    /// The same difference through the closed scalar form `s·h(c/s)`.
    pub scalar_diff: Vec<f64>,
    pub c_a: f64,
    pub c_b: f64,
    /// Budget `α·‖B‖` that norm domination would impose on the difference.
    pub budget: f64,
    /// First scale where the difference exceeds the budget.
    pub crossing_s: Option<f64>,
}

/// Seeded sample of commuting positive test elements: squared polynomials
/// of `D` plus a positive constant, evaluated in the eigenbasis of `D`.
pub fn sample_gamma_positive(d: &SymMatrix, seed: u64, count: usize) -> Vec<PsdMatrix> {
    let dec = d.eig();
    let tau = 1.0f64.max(dec.max_abs_eigenvalue());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let deg = rng.gen_range(0..=3usize);
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let floor = rng.gen_range(1e-3..1.0);
            gamma_element(&dec, &coeffs, floor, tau)
        })
        .collect()
}

/// `g(D)` for `g(t) = (Σ c_k (t/τ)^k)² + floor`, always definite and
/// commuting with `D`.
pub(crate) fn gamma_element(
    dec: &SpectralDecomposition,
    coeffs: &[f64],
    floor: f64,
    tau: f64,
) -> PsdMatrix {
    let g = |t: f64| {
        let u = t / tau;
        let mut poly = 0.0;
        for &c in coeffs.iter().rev() {
            poly = poly * u + c;
        }
        poly * poly + floor
    };
    let m = dec.apply(g).expect("polynomial evaluation is finite");
    PsdMatrix::try_from_sym(m).expect("squared polynomial plus positive floor is positive")
}

/// Evaluate the three equivalent order criteria for a threshold grid.
/// Rows appear only for thresholds whose projection is nonzero; boundary
/// ambiguities bubble up.
pub fn prop2_criteria(
    a: &PsdMatrix,
    b: &PsdMatrix,
    eps_grid: &[f64],
    tol: f64,
) -> Result<Prop2Report> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let d = b.as_sym() - a.as_sym();
    let loewner = loewner_leq(a.as_sym(), b.as_sym(), tol)?;
    let mut rows = Vec::new();
    let mut norm_criterion = true;
    let mut inclusion_criterion = true;
    for &eps in eps_grid {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidInput(format!("threshold must be positive, got {eps}")));
        }
        let p = spectral_projection(&d, &Interval::below(-eps))?;
        if p.rank() == 0 {
            continue;
        }
        let comp_a = compress(a.as_sym(), &p)?;
        let comp_b = compress(b.as_sym(), &p)?;
        let row = Prop2Row {
            eps,
            rank: p.rank(),
            norm_a: comp_a.operator_norm(),
            norm_b: comp_b.operator_norm(),
            max_lambda_a: comp_a.min_eigenvalue().max(0.0),
            max_lambda_b: comp_b.min_eigenvalue().max(0.0),
        };
        if row.norm_a > row.norm_b + tol {
            norm_criterion = false;
        }
        if row.max_lambda_a > row.max_lambda_b + tol {
            inclusion_criterion = false;
        }
        rows.push(row);
    }
    Ok(Prop2Report { loewner, rows, norm_criterion, inclusion_criterion })
}

fn validate_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "scale grid needs at least 4 points, got {}",
            s_grid.len()
        )));
    }
    for w in s_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidInput("scale grid must be strictly ascending".into()));
        }
    }
    if !(s_grid[0] > 0.0) || !s_grid[s_grid.len() - 1].is_finite() {
        return Err(Error::InvalidInput("scales must be positive finite".into()));
    }
    Ok(())
}

fn finish_scan(s_values: Vec<f64>, values: Vec<f64>, target: f64) -> LimitScan {
    let k = values.len();
    let converged = k >= 3
        && (values[k - 3] - values[k - 2]).abs() <= TOL_LIMIT
        && (values[k - 2] - values[k - 1]).abs() <= TOL_LIMIT
        && (values[k - 3] - values[k - 1]).abs() <= TOL_LIMIT;
    let extrapolated = values[k - 1];
    LimitScan { s_values, values, target, extrapolated, converged }
}

/// Scan `‖X_s + sP‖ − s` against the predicted limit `‖PXP‖` for a family
/// converging in norm to `x_limit`.
pub fn prop3_limit_scan<F>(
    family: F,
    x_limit: &PsdMatrix,
    p: &OrthProjection,
    s_grid: &[f64],
) -> Result<LimitScan>
where
    F: Fn(f64) -> Result<PsdMatrix>,
{
    validate_grid(s_grid)?;
    if p.rank() == 0 {
        return Err(Error::ZeroProjection);
    }
    if x_limit.n() != p.n() {
        return Err(Error::DimensionMismatch { left: x_limit.n(), right: p.n() });
    }
    let target = compression_norm(x_limit.as_sym(), p)?;
    let mut values = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let xs = family(s)?;
        if xs.n() != p.n() {
            return Err(Error::DimensionMismatch { left: xs.n(), right: p.n() });
        }
        let shifted = xs.as_sym() + &p.matrix().scale(s);
        values.push(shifted.operator_norm() - s);
    }
    Ok(finish_scan(s_grid.to_vec(), values, target))
}

/// Norm formula for a mean vanishing at zero evaluated against a
/// projection: `‖A σ P‖ = f°(1 / max{λ ≥ 0 : λP ≤ PA^{-1}P})`.
pub fn prop4_norm(f: &ReprFn, a: &SpdMatrix, p: &OrthProjection) -> Result<f64> {
    if f.f_at_0plus() != 0.0 {
        return Err(Error::Precondition(format!(
            "norm formula requires the limit 0 at 0+, got {}",
            f.f_at_0plus()
        )));
    }
    if a.n() != p.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: p.n() });
    }
    let lam = compression_max_lambda(a.inverse().as_psd(), p)?;
    Ok(f.eval_transpose(1.0 / lam))
}

/// Test element `X = s·P + s·delta·I`.
pub fn shifted_projection(p: &OrthProjection, s: f64, delta: f64) -> Result<PsdMatrix> {
    if !(s > 0.0) || !s.is_finite() || !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "scale must be positive and shift nonnegative, got s = {s}, delta = {delta}"
        )));
    }
    PsdMatrix::try_from_sym(p.matrix().scale(s).add_scaled_identity(s * delta))
}

/// Scan `‖A σ (sP + s·delta·I)‖ − β·s·(1 + delta)` against the predicted
/// limit `(α + γ)·‖PAP‖`, for a symmetric mean with measure mass `α > 0`
/// at zero and interior integral `γ` of `1 + t`.
pub fn case2a_limit_scan(
    conn: &Connection,
    a: &SpdMatrix,
    p: &OrthProjection,
    delta: f64,
    s_grid: &[f64],
) -> Result<LimitScan> {
    validate_grid(s_grid)?;
    if p.rank() == 0 {
        return Err(Error::ZeroProjection);
    }
    if a.n() != p.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: p.n() });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Precondition(format!("shift must be positive, got {delta}")));
    }
    let m = conn
        .measure()
        .ok_or_else(|| Error::Precondition("scan requires a mean with an explicit measure".into()))?;
    if !conn.f().is_symmetric() {
        return Err(Error::Precondition("scan requires a symmetric mean".into()));
    }
    let alpha = m.atom0();
    if alpha <= 0.0 {
        return Err(Error::Precondition("scan requires positive measure mass at zero".into()));
    }
    let beta = m.atom_inf();
    let gamma = m.interior_gamma();
    let target = (alpha + gamma) * compression_norm(a.as_sym(), p)?;
    let mut values = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let x = shifted_projection(p, s, delta)?;
        let norm = connection_eval(conn.f(), a, &x)?.operator_norm();
        values.push(norm - beta * s * (1.0 + delta));
    }
    Ok(finish_scan(s_grid.to_vec(), values, target))
}

/// Check `‖A σ X‖ ≤ ‖B σ X‖ + tol` over a set of test elements, each of
/// which must commute with `B − A`.
pub fn norm_dominates(
    conn: &Connection,
    a: &SpdMatrix,
    b: &SpdMatrix,
    xs: &[PsdMatrix],
    tol: f64,
) -> Result<bool> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let d = b.as_sym() - a.as_sym();
    for x in xs {
        let defect = x.as_sym().commutator_max(&d)?;
        let gate = 1e-9 * (1.0 + x.max_abs()) * (1.0 + d.max_abs());
        if defect > gate {
            return Err(Error::NotInAlgebra { defect });
        }
        let na = conn.eval(a, x)?.operator_norm();
        let nb = conn.eval(b, x)?.operator_norm();
        if na > nb + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Spectral projection of `d` below `thresh`, nudging the threshold away
/// from eigenvalues when it lands inside the endpoint guard.
fn projection_below(d: &SymMatrix, thresh: f64) -> Result<OrthProjection> {
    let mut t = thresh;
    for _ in 0..5 {
        match spectral_projection(d, &Interval::below(t)) {
            Err(Error::BoundaryAmbiguity { .. }) => t -= 5.0 * ENDPOINT_GUARD * (1.0 + t.abs()),
            other => return other,
        }
    }
    spectral_projection(d, &Interval::below(t))
}

/// Search the witness grid for a separating element. Call only when the
/// order fails; the most negative eigenvalue of `B − A` seeds the
/// projection thresholds.
fn witness_grid_search(
    conn: &Connection,
    a: &SpdMatrix,
    b: &SpdMatrix,
    tol: f64,
) -> Result<WitnessReport> {
    let d = b.as_sym() - a.as_sym();
    let depth = d.min_eigenvalue().abs();
    let threshold = WITNESS_MARGIN_FACTOR * tol;
    let mut table = Vec::new();
    for frac in WITNESS_EPS_FRACTIONS {
        let eps = frac * depth;
        let p = projection_below(&d, -eps)?;
        if p.rank() == 0 {
            continue;
        }
        for delta in WITNESS_DELTAS {
            for k in 0..=WITNESS_MAX_S_EXP {
                let s = (2.0f64).powi(k);
                let x = shifted_projection(&p, s, delta)?;
                let norm_a = conn.eval(a, &x)?.operator_norm();
                let norm_b = conn.eval(b, &x)?.operator_norm();
                if norm_a - norm_b > threshold {
                    return Ok(WitnessReport {
                        projection: p,
                        eps,
                        delta,
                        s,
                        norm_a,
                        norm_b,
                        threshold,
                    });
                }
                table.push(WitnessProbe { eps, delta, s, norm_a, norm_b });
            }
        }
    }
    Err(Error::WitnessSearchExhausted { threshold, table })
}

/// Find a norm-separating element for a pair that is not ordered, or
/// `None` when `A ≤ B` already holds.
pub fn witness_search(
    conn: &Connection,
    a: &SpdMatrix,
    b: &SpdMatrix,
) -> Result<Option<WitnessReport>> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let tol = norm_tolerance(a.as_psd(), b.as_psd());
    if loewner_leq(a.as_sym(), b.as_sym(), tol)? {
        return Ok(None);
    }
    witness_grid_search(conn, a, b, tol).map(Some)
}

/// Recompute the two norms of a witness report and confirm the margin
/// still clears its bar.
pub fn witness_verify(
    conn: &Connection,
    a: &SpdMatrix,
    b: &SpdMatrix,
    w: &WitnessReport,
) -> Result<bool> {
    let x = shifted_projection(&w.projection, w.s, w.delta)?;
    let norm_a = conn.eval(a, &x)?.operator_norm();
    let norm_b = conn.eval(b, &x)?.operator_norm();
    Ok(norm_a - norm_b > w.threshold)
}

/// Auxiliary deterministic family: midpoint spectral projections of `d`
/// scaled and shifted, all commuting with `d`.
fn projection_family(d: &SymMatrix) -> Result<Vec<PsdMatrix>> {
    let dec = d.eig();
    let evs = dec.eigenvalues();
    let mut mids = Vec::new();
    for w in evs.windows(2) {
        let gap = w[1] - w[0];
        if gap > GAP_FLOOR * (1.0 + w[0].abs().max(w[1].abs())) {
            mids.push(0.5 * (w[0] + w[1]));
            if mids.len() == 3 {
                break;
            }
        }
    }
    let mut out = Vec::new();
    for mid in mids {
        let p = spectral_projection(d, &Interval::below(mid))?;
        if p.rank() == 0 {
            continue;
        }
        for delta in [1e-3, 0.5] {
            for s in [1.0, 32.0, 1024.0] {
                out.push(shifted_projection(&p, s, delta)?);
            }
        }
    }
    Ok(out)
}

/// Full round trip for one pair and one mean: compare the direct order
/// test against norm domination over sampled commuting elements, and
/// produce a verified witness whenever the order fails. A disagreement
/// between the two sides is an invariant violation.
pub fn order_determination_check(
    conn: &Connection,
    a: &SpdMatrix,
    b: &SpdMatrix,
    sample_budget: usize,
    seed: u64,
) -> Result<OrderVerdict> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let tol = norm_tolerance(a.as_psd(), b.as_psd());
    let loewner = loewner_leq(a.as_sym(), b.as_sym(), tol)?;
    let d = b.as_sym() - a.as_sym();
    let mut xs = sample_gamma_positive(&d, seed, sample_budget);
    xs.extend(projection_family(&d)?);
    let samples_used = xs.len();
    let dominated_on_samples = norm_dominates(conn, a, b, &xs, tol)?;
    if loewner && !dominated_on_samples {
        return Err(Error::TheoremViolation {
            context: format!(
                "order holds but a sampled element broke norm domination for mean {}",
                conn.label()
            ),
        });
    }
    let witness = if loewner { None } else { Some(witness_grid_search(conn, a, b, tol)?) };
    let norm_dominated = dominated_on_samples && witness.is_none();
    Ok(OrderVerdict {
        loewner,
        norm_dominated,
        witness,
        mean_label: conn.label().to_string(),
        samples_used,
    })
}

/// Divergence scan for a symmetric mean with measure mass `α > 0` at zero:
/// tracks `‖A σ_h (sP)‖ − ‖B σ_h (sP)‖` for the interior part `h` of the
/// mean against the budget `α‖B‖` that norm domination would impose, and
/// records the crossing scale. The closed scalar form `s·h(c/s)` is
/// scanned alongside as a cross-check.
pub fn case2b_divergence_scan(
    conn: &Connection,
    a: &SpdMatrix,
    b: &SpdMatrix,
    p: &OrthProjection,
    s_grid: &[f64],
) -> Result<Case2bScan> {
    validate_grid(s_grid)?;
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    if p.rank() == 0 {
        return Err(Error::ZeroProjection);
    }
    let m = conn
        .measure()
        .ok_or_else(|| Error::Precondition("scan requires a mean with an explicit measure".into()))?;
    if !conn.f().is_symmetric() {
        return Err(Error::Precondition("scan requires a symmetric mean".into()));
    }
    let split = split_h(conn.f(), m)?;
    if split.alpha <= 0.0 {
        return Err(Error::Precondition("scan requires positive measure mass at zero".into()));
    }
    let c_a = 1.0 / compression_max_lambda(a.inverse().as_psd(), p)?;
    let c_b = 1.0 / compression_max_lambda(b.inverse().as_psd(), p)?;
    let budget = split.alpha * b.operator_norm();
    let mut diff_values = Vec::with_capacity(s_grid.len());
    let mut scalar_diff = Vec::with_capacity(s_grid.len());
    let mut crossing_s = None;
    for &s in s_grid {
        let sp = p.matrix().scale(s);
        let na = sandwich_eval(a, &sp, &|x| split.h(x), 0.0)?.operator_norm();
        let nb = sandwich_eval(b, &sp, &|x| split.h(x), 0.0)?.operator_norm();
        let diff = na - nb;
        diff_values.push(diff);
        scalar_diff.push(s * split.h(c_a / s) - s * split.h(c_b / s));
        if crossing_s.is_none() && diff > budget {
            crossing_s = Some(s);
        }
    }
    Ok(Case2bScan { s_values: s_grid.to_vec(), diff_values, scalar_diff, c_a, c_b, budget, crossing_s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::max_abs_diff;

    fn e1_projection(n: usize) -> OrthProjection {
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        OrthProjection::try_from_sym(SymMatrix::diagonal(&d).unwrap()).unwrap()
    }

    fn pow2_grid(lo: i32, hi: i32) -> Vec<f64> {
        (lo..=hi).map(|k| (2.0f64).powi(k)).collect()
    }

    #[test]
    fn gamma_samples_commute_and_are_definite() {
        let d = SymMatrix::from_rows(3, &[1.0, 0.3, 0.0, 0.3, -0.5, 0.2, 0.0, 0.2, 2.0]).unwrap();
        let xs = sample_gamma_positive(&d, 99, 25);
        assert_eq!(xs.len(), 25);
        for x in &xs {
            assert!(x.min_eig() > 0.0);
            assert!(x.as_sym().commutator_max(&d).unwrap() < 1e-9 * (1.0 + x.max_abs()));
        }
        // Same seed reproduces the sample.
        let ys = sample_gamma_positive(&d, 99, 25);
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(max_abs_diff(x.as_sym(), y.as_sym()).unwrap(), 0.0);
        }
    }

    #[test]
    fn gamma_element_constant_and_quadratic() {
        let d = SymMatrix::diagonal(&[2.0, -1.0]).unwrap();
        let dec = d.eig();
        // Constant polynomial: c² + floor times the identity.
        let c = gamma_element(&dec, &[0.5], 0.1, 1.0);
        let expect = SymMatrix::identity(2).unwrap().scale(0.35);
        assert!(max_abs_diff(c.as_sym(), &expect).unwrap() < 1e-14);
        // g(t) = (t - 2)² + 1 evaluated on diag(2, -1): (0²+1, 3²+1).
        let q = gamma_element(&dec, &[-2.0, 1.0], 1.0, 1.0);
        let expect = SymMatrix::diagonal(&[1.0, 10.0]).unwrap();
        assert!(max_abs_diff(q.as_sym(), &expect).unwrap() < 1e-12);
    }

    #[test]
    fn prop2_ordered_pair_all_criteria_hold() {
        let a = PsdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let b = PsdMatrix::diagonal(&[1.5, 2.5]).unwrap();
        let r = prop2_criteria(&a, &b, &[0.1, 0.25], 1e-9).unwrap();
        assert!(r.loewner && r.norm_criterion && r.inclusion_criterion);
        // B - A has no negative spectrum, so no rows appear.
        assert!(r.rows.is_empty());
    }

    #[test]
    fn prop2_unordered_pair_criteria_fail_together() {
        let a = PsdMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let b = PsdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let r = prop2_criteria(&a, &b, &[0.5], 1e-9).unwrap();
        assert!(!r.loewner && !r.norm_criterion && !r.inclusion_criterion);
        assert_eq!(r.rows.len(), 1);
        let row = &r.rows[0];
        assert_eq!(row.rank, 1);
        assert!((row.norm_a - 2.0).abs() < 1e-12);
        assert!((row.norm_b - 1.0).abs() < 1e-12);
        assert!((row.max_lambda_a - 2.0).abs() < 1e-12);
        assert!((row.max_lambda_b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prop3_constant_family_is_exact() {
        let x = PsdMatrix::diagonal(&[3.0, 1.0]).unwrap();
        let p = e1_projection(2);
        let family = |_s: f64| PsdMatrix::diagonal(&[3.0, 1.0]);
        let scan = prop3_limit_scan(family, &x, &p, &pow2_grid(0, 10)).unwrap();
        assert!((scan.target - 3.0).abs() < 1e-14);
        for v in &scan.values {
            assert!((v - 3.0).abs() < 1e-12);
        }
        assert!(scan.converged);
    }

    #[test]
    fn prop3_full_projection_gives_full_norm() {
        let x = PsdMatrix::diagonal(&[3.0, 1.0]).unwrap();
        let p = OrthProjection::identity(2);
        let family = |_s: f64| PsdMatrix::diagonal(&[3.0, 1.0]);
        let scan = prop3_limit_scan(family, &x, &p, &pow2_grid(0, 10)).unwrap();
        assert_eq!(scan.target, 3.0);
        assert!((scan.extrapolated - 3.0).abs() < 1e-12);
    }

    #[test]
    fn prop3_decaying_family_converges() {
        let base = SymMatrix::from_rows(2, &[0.4, 0.2, 0.2, 0.3]).unwrap();
        let bump = SymMatrix::from_rows(2, &[0.0, 0.01, 0.01, 0.02]).unwrap();
        let x = PsdMatrix::try_from_sym(base.clone()).unwrap();
        let p = e1_projection(2);
        let family = move |s: f64| {
            PsdMatrix::try_from_sym(&base + &bump.scale(1.0 / s))
        };
        let scan = prop3_limit_scan(family, &x, &p, &pow2_grid(0, 20)).unwrap();
        assert!(scan.converged);
        assert!((scan.extrapolated - scan.target).abs() <= TOL_LIMIT);
        assert!((scan.target - 0.4).abs() < 1e-14);
    }

    #[test]
    fn prop3_deep_scale_stays_within_tolerance() {
        // Coordinate-aligned projection keeps the only roundoff at scale
        // 2^30 in the eigenvalue representation itself (about one part
        // in 2^52 of s), so the tail must hold the absolute tolerance.
        let x = PsdMatrix::diagonal(&[0.4, 0.3]).unwrap();
        let p = e1_projection(2);
        let family = |_s: f64| PsdMatrix::diagonal(&[0.4, 0.3]);
        let scan = prop3_limit_scan(family, &x, &p, &pow2_grid(0, 30)).unwrap();
        assert!(scan.converged);
        assert!((scan.target - 0.4).abs() < 1e-15);
        for v in scan.values.iter().rev().take(10) {
            assert!((v - 0.4).abs() <= 1e-6, "tail value {v}");
        }
    }

    #[test]
    fn prop3_rejects_bad_inputs() {
        let x = PsdMatrix::diagonal(&[1.0]).unwrap();
        let family = |_s: f64| PsdMatrix::diagonal(&[1.0]);
        let zero = OrthProjection::zero(1);
        assert!(matches!(
            prop3_limit_scan(family, &x, &zero, &pow2_grid(0, 10)).unwrap_err(),
            Error::ZeroProjection
        ));
        let p = e1_projection(1);
        let family = |_s: f64| PsdMatrix::diagonal(&[1.0]);
        assert!(prop3_limit_scan(family, &x, &p, &[1.0, 2.0]).is_err());
        let family = |_s: f64| PsdMatrix::diagonal(&[1.0]);
        assert!(prop3_limit_scan(family, &x, &p, &[4.0, 2.0, 8.0, 16.0]).is_err());
    }

    #[test]
    fn prop4_geometric_example() {
        let a = SpdMatrix::diagonal(&[4.0, 9.0]).unwrap();
        let p = e1_projection(2);
        let f = ReprFn::geometric();
        let v = prop4_norm(&f, &a, &p).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // Direct functional-calculus path agrees.
        let direct = connection_eval(&f, &a, &p.as_psd().unwrap()).unwrap().operator_norm();
        assert!((direct - 2.0).abs() < 1e-10);
    }

    #[test]
    fn prop4_harmonic_example() {
        let a = SpdMatrix::diagonal(&[4.0, 9.0]).unwrap();
        let p = e1_projection(2);
        let f = ReprFn::harmonic();
        let v = prop4_norm(&f, &a, &p).unwrap();
        // 2·4·1/(4 + 1) = 1.6
        assert!((v - 1.6).abs() < 1e-12);
        let direct = connection_eval(&f, &a, &p.as_psd().unwrap()).unwrap().operator_norm();
        assert!((direct - v).abs() < 1e-10);
    }

    #[test]
    fn prop4_identity_any_projection() {
        let a = SpdMatrix::identity(3).unwrap();
        let p = e1_projection(3);
        for pf in [0.0, -0.5, -1.0] {
            let f = ReprFn::power(pf).unwrap();
            assert!((prop4_norm(&f, &a, &p).unwrap() - f.eval(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn prop4_rejects_positive_limit_at_zero() {
        let a = SpdMatrix::diagonal(&[4.0, 9.0]).unwrap();
        let p = e1_projection(2);
        let f = ReprFn::power(0.5).unwrap();
        assert!(matches!(prop4_norm(&f, &a, &p).unwrap_err(), Error::Precondition(_)));
    }

    #[test]
    fn case2a_arithmetic_is_constant() {
        let conn = Connection::arithmetic();
        let a = SpdMatrix::diagonal(&[3.0, 1.0]).unwrap();
        let p = e1_projection(2);
        let scan = case2a_limit_scan(&conn, &a, &p, 1.0, &pow2_grid(0, 12)).unwrap();
        assert!((scan.target - 1.5).abs() < 1e-14);
        for v in &scan.values {
            assert!((v - 1.5).abs() < 1e-10, "value {v}");
        }
        assert!(scan.converged);
    }

    #[test]
    fn case2a_mixture_reaches_predicted_limit() {
        let conn = Connection::mix(0.5, &Connection::arithmetic(), &Connection::harmonic()).unwrap();
        let a = SpdMatrix::diagonal(&[3.0, 1.0]).unwrap();
        let p = e1_projection(2);
        let scan = case2a_limit_scan(&conn, &a, &p, 1.0, &pow2_grid(0, 24)).unwrap();
        assert!((scan.target - 3.75).abs() < 1e-13);
        assert!(scan.converged);
        assert!((scan.extrapolated - scan.target).abs() < 1e-6);
    }

    #[test]
    fn case2a_scaled_identity_hits_target_exactly() {
        let conn = Connection::arithmetic();
        let a = SpdMatrix::identity(3).unwrap().scaled(2.5);
        let p = e1_projection(3);
        let scan = case2a_limit_scan(&conn, &a, &p, 0.5, &pow2_grid(0, 12)).unwrap();
        assert!((scan.target - 1.25).abs() < 1e-14);
        assert!((scan.extrapolated - 1.25).abs() < 1e-10);
    }

    #[test]
    fn case2a_requires_measure_and_mass() {
        let a = SpdMatrix::diagonal(&[3.0, 1.0]).unwrap();
        let p = e1_projection(2);
        let no_measure = Connection::power(0.5).unwrap();
        assert!(matches!(
            case2a_limit_scan(&no_measure, &a, &p, 1.0, &pow2_grid(0, 8)).unwrap_err(),
            Error::Precondition(_)
        ));
        let no_mass = Connection::harmonic();
        assert!(matches!(
            case2a_limit_scan(&no_mass, &a, &p, 1.0, &pow2_grid(0, 8)).unwrap_err(),
            Error::Precondition(_)
        ));
    }

    #[test]
    fn norm_dominates_ordered_examples() {
        let i2 = SpdMatrix::identity(2).unwrap();
        let two = i2.scaled(2.0);
        let xs = vec![PsdMatrix::identity(2).unwrap(), PsdMatrix::diagonal(&[0.5, 3.0]).unwrap()];
        let tol = norm_tolerance(i2.as_psd(), two.as_psd());
        for conn in Connection::catalog_symmetric() {
            assert!(norm_dominates(&conn, &i2, &two, &xs, tol).unwrap(), "{}", conn.label());
        }
    }

    #[test]
    fn norm_dominates_detects_flip() {
        let a = SpdMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let b = SpdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let p = e1_projection(2).as_psd().unwrap();
        let x = PsdMatrix::try_from_sym(p.as_sym().scale(8.0)).unwrap();
        let tol = norm_tolerance(a.as_psd(), b.as_psd());
        let conn = Connection::geometric();
        assert!(!norm_dominates(&conn, &a, &b, &[x], tol).unwrap());
    }

    #[test]
    fn norm_dominates_rejects_noncommuting_element() {
        let a = SpdMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let b = SpdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let x = PsdMatrix::try_from_sym(
            SymMatrix::from_rows(2, &[1.0, 0.5, 0.5, 1.0]).unwrap(),
        )
        .unwrap();
        let tol = norm_tolerance(a.as_psd(), b.as_psd());
        let conn = Connection::arithmetic();
        assert!(matches!(
            norm_dominates(&conn, &a, &b, &[x], tol).unwrap_err(),
            Error::NotInAlgebra { .. }
        ));
    }

    #[test]
    fn witness_on_diagonal_flip() {
        let a = SpdMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let b = SpdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let conn = Connection::geometric();
        let w = witness_search(&conn, &a, &b).unwrap().expect("pair is unordered");
        assert!(w.margin() > w.threshold);
        assert!(witness_verify(&conn, &a, &b, &w).unwrap());
        // The witness projection selects the direction where A exceeds B.
        let expect = SymMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(max_abs_diff(w.projection.matrix(), &expect).unwrap() < 1e-12);
    }

    #[test]
    fn witness_none_for_ordered_pair() {
        let a = SpdMatrix::identity(2).unwrap();
        let b = a.scaled(2.0);
        let conn = Connection::geometric();
        assert!(witness_search(&conn, &a, &b).unwrap().is_none());
    }

    #[test]
    fn witness_all_catalog_means_on_diagonal_flip() {
        let a = SpdMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let b = SpdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        for conn in Connection::catalog_symmetric() {
            let w = witness_search(&conn, &a, &b)
                .unwrap()
                .unwrap_or_else(|| panic!("no witness for {}", conn.label()));
            assert!(w.margin() > w.threshold, "{}", conn.label());
        }
    }

    #[test]
    fn order_check_ordered_and_unordered() {
        let conn = Connection::geometric();
        let a = SpdMatrix::identity(2).unwrap();
        let b = a.scaled(2.0);
        let v = order_determination_check(&conn, &a, &b, 50, 7).unwrap();
        assert!(v.loewner && v.norm_dominated && v.witness.is_none());
        assert!(v.samples_used >= 50);

        let a = SpdMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let b = SpdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let v = order_determination_check(&conn, &a, &b, 50, 7).unwrap();
        assert!(!v.loewner && !v.norm_dominated);
        assert!(v.witness.is_some());
    }

    #[test]
    fn order_check_equal_pair() {
        let conn = Connection::arithmetic();
        let a = SpdMatrix::diagonal(&[1.5, 0.5]).unwrap();
        let v = order_determination_check(&conn, &a, &a, 20, 3).unwrap();
        assert!(v.loewner && v.norm_dominated && v.witness.is_none());
    }

    #[test]
    fn case2b_crossing_on_flipped_pair() {
        // Mean with mass 1/4 at zero and non-summable interior part.
        let conn = Connection::mix(0.5, &Connection::arithmetic(), &Connection::geometric()).unwrap();
        let a = SpdMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let b = SpdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let p = e1_projection(2);
        let scan = case2b_divergence_scan(&conn, &a, &b, &p, &pow2_grid(0, 30)).unwrap();
        assert!((scan.c_a - 2.0).abs() < 1e-12);
        assert!((scan.c_b - 1.0).abs() < 1e-12);
        assert!((scan.budget - 0.5).abs() < 1e-12);
        let s_cross = scan.crossing_s.expect("difference must cross the budget");
        // h = √x/2, so the diff is (√(2s) - √s)/2, crossing 1/2 at s ≥ 6.
        assert!((s_cross - 8.0).abs() < 1e-12);
        // Matrix and scalar paths agree along the scan.
        for (m, s) in scan.diff_values.iter().zip(&scan.scalar_diff) {
            assert!((m - s).abs() < 1e-9 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn case2b_no_crossing_for_ordered_pair() {
        let conn = Connection::mix(0.5, &Connection::arithmetic(), &Connection::geometric()).unwrap();
        let a = SpdMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let b = SpdMatrix::diagonal(&[1.5, 2.5]).unwrap();
        let p = e1_projection(2);
        let scan = case2b_divergence_scan(&conn, &a, &b, &p, &pow2_grid(0, 30)).unwrap();
        // c_A < c_B: the difference stays nonpositive and never crosses.
        assert!(scan.c_a < scan.c_b);
        assert!(scan.crossing_s.is_none());
    }
}
