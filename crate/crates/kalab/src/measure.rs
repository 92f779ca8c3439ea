//! Finite Borel measures on `[0, ∞]` in atoms-plus-nodes form, the scalar
//! functions they integrate to, and the induced connection on definite
//! pairs.
//!
//! A measure is `atom0·δ_0 + atomInf·δ_∞ + Σ w_i·δ_{t_i}` with `t_i` in
//! `(0, ∞)`. It integrates to
//! `f(x) = atom0 + atomInf·x + Σ w_i · x(1 + t_i)/(x + t_i)` and induces
//! `A σ B = atom0·A + atomInf·B + Σ w_i (1 + t_i)/t_i · (t_i A : B)`
//! where `:` is the parallel sum. Absolutely continuous parts are carried
//! as quadrature nodes and flagged, since node identity is then a
//! discretization artifact rather than part of the measure.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::{PsdMatrix, SpdMatrix};
use crate::means::{ReprFn, ScalarFn};

/// Relative tolerance for a node sitting on a restriction endpoint.
const NODE_BOUNDARY_TOL: f64 = 1e-12;
/// Grid floor for the nonnegativity check of the split remainder.
const SPLIT_NEG_TOL: f64 = 1e-10;
/// Nodes per dyadic panel of the quadrature for absolutely continuous
/// densities.
const PANEL_NODES: usize = 8;
/// Dyadic panel range `[2^k, 2^{k+1})`, `k` in `[-PANEL_SPAN, PANEL_SPAN)`.
/// The span is set so truncation stays below scalar agreement tolerances
/// across the whole validation grid.
const PANEL_SPAN: i32 = 64;

/// Finite nonnegative Borel measure on `[0, ∞]`.
#[derive(Clone, Debug)]
pub struct BorelMeasure {
    atom0: f64,
    atom_inf: f64,
    nodes: Vec<(f64, f64)>,
    quadrature: bool,
}

impl BorelMeasure {
    /// Validating constructor: atoms nonnegative, node points distinct in
    /// `(0, ∞)`, node weights positive, total mass positive and finite.
    pub fn new(
        atom0: f64,
        atom_inf: f64,
        nodes: Vec<(f64, f64)>,
        quadrature: bool,
    ) -> Result<BorelMeasure> {
        let m = Self::new_allow_zero(atom0, atom_inf, nodes, quadrature)?;
        if m.total_mass() <= 0.0 {
            return Err(Error::InvalidMeasure("total mass must be positive".into()));
        }
        Ok(m)
    }

    /// Constructor used for restriction and splitting artifacts, which may
    /// legitimately carry zero mass.
    pub(crate) fn new_allow_zero(
        atom0: f64,
        atom_inf: f64,
        mut nodes: Vec<(f64, f64)>,
        quadrature: bool,
    ) -> Result<BorelMeasure> {
        if !atom0.is_finite() || atom0 < 0.0 {
            return Err(Error::InvalidMeasure(format!("atom at 0 must be finite >= 0, got {atom0}")));
        }
        if !atom_inf.is_finite() || atom_inf < 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "atom at infinity must be finite >= 0, got {atom_inf}"
            )));
        }
        for &(t, w) in &nodes {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidMeasure(format!("node point {t} outside (0, inf)")));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidMeasure(format!("node weight {w} at t = {t} not positive")));
            }
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in nodes.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidMeasure(format!("duplicate node at t = {}", pair[0].0)));
            }
        }
        let mass: f64 = atom0 + atom_inf + nodes.iter().map(|&(_, w)| w).sum::<f64>();
        if !mass.is_finite() {
            return Err(Error::InvalidMeasure("total mass must be finite".into()));
        }
        Ok(BorelMeasure { atom0, atom_inf, nodes, quadrature })
    }

    /// Unit point mass at `t` in `(0, ∞)`.
    pub fn dirac(t: f64) -> Result<BorelMeasure> {
        Self::new(0.0, 0.0, vec![(t, 1.0)], false)
    }

    pub fn atom0(&self) -> f64 {
        self.atom0
    }

    pub fn atom_inf(&self) -> f64 {
        self.atom_inf
    }

    /// Interior nodes `(t, w)`, ascending in `t`.
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// True when the nodes discretize an absolutely continuous part.
    pub fn quadrature(&self) -> bool {
        self.quadrature
    }

    pub fn total_mass(&self) -> f64 {
        self.atom0 + self.atom_inf + self.nodes.iter().map(|&(_, w)| w).sum::<f64>()
    }

    /// `∫ (1 + t) dm` over the interior `(0, ∞)`.
    pub fn interior_gamma(&self) -> f64 {
        self.nodes.iter().map(|&(t, w)| w * (1.0 + t)).sum()
    }

    /// The function the measure integrates to:
    /// `f(x) = atom0 + atomInf·x + Σ w·x(1 + t)/(x + t)` for `x > 0`.
    pub fn eval_fn(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::ScalarDomain { x });
        }
        let mut acc = self.atom0 + self.atom_inf * x;
        for &(t, w) in &self.nodes {
            acc += w * x * (1.0 + t) / (x + t);
        }
        Ok(acc)
    }

    /// `c·m` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<BorelMeasure> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidMeasure(format!("scale factor must be finite >= 0, got {c}")));
        }
        let nodes = if c == 0.0 {
            Vec::new()
        } else {
            self.nodes.iter().map(|&(t, w)| (t, c * w)).collect()
        };
        Self::new_allow_zero(c * self.atom0, c * self.atom_inf, nodes, self.quadrature)
    }

    /// Convex combination `w·a + (1−w)·b`; weights on coincident node
    /// points merge.
    pub fn mix(w: f64, a: &BorelMeasure, b: &BorelMeasure) -> Result<BorelMeasure> {
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidMeasure(format!("mixture weight must lie in [0, 1], got {w}")));
        }
        let mut nodes: Vec<(f64, f64)> = Vec::new();
        for &(t, wt) in &a.nodes {
            if w > 0.0 {
                nodes.push((t, w * wt));
            }
        }
        for &(t, wt) in &b.nodes {
            if w < 1.0 {
                match nodes.iter_mut().find(|(s, _)| *s == t) {
                    Some(entry) => entry.1 += (1.0 - w) * wt,
                    None => nodes.push((t, (1.0 - w) * wt)),
                }
            }
        }
        Self::new_allow_zero(
            w * a.atom0 + (1.0 - w) * b.atom0,
            w * a.atom_inf + (1.0 - w) * b.atom_inf,
            nodes,
            a.quadrature || b.quadrature,
        )
    }

    /// Pushforward under `t ↦ 1/t`: atoms at `0` and `∞` swap, interior
    /// nodes invert. Integrates to the transpose of the integrated
    /// function.
    pub fn transpose(&self) -> BorelMeasure {
        let nodes = self.nodes.iter().map(|&(t, w)| (1.0 / t, w)).collect();
        Self::new_allow_zero(self.atom_inf, self.atom0, nodes, self.quadrature)
            .expect("inverting positive nodes preserves validity")
    }

    /// Restriction to a finite union of subintervals of `[0, ∞]`.
    /// Errors when an interior node lies within splitting tolerance of a
    /// finite endpoint, where membership would be a rounding artifact.
    pub fn restrict(&self, parts: &[ExtInterval]) -> Result<BorelMeasure> {
        for &(t, _) in &self.nodes {
            for iv in parts {
                for e in iv.finite_positive_endpoints() {
                    if (t - e).abs() <= NODE_BOUNDARY_TOL * (1.0 + e) {
                        return Err(Error::NodeOnBoundary { node: t, endpoint: e });
                    }
                }
            }
        }
        let keep_zero = parts.iter().any(ExtInterval::contains_zero);
        let keep_inf = parts.iter().any(ExtInterval::contains_inf);
        let nodes: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .filter(|&&(t, _)| parts.iter().any(|iv| iv.contains(t)))
            .copied()
            .collect();
        Self::new_allow_zero(
            if keep_zero { self.atom0 } else { 0.0 },
            if keep_inf { self.atom_inf } else { 0.0 },
            nodes,
            self.quadrature,
        )
    }

    /// `(∫ t dm, ∫ t^{-1} dm)` over `[0, ∞]`, infinite when the opposite
    /// endpoint carries an atom. Both are finite for every symmetric
    /// function with atom-free measure, and equal for measures invariant
    /// under `t ↦ 1/t`.
    pub fn symmetry_integrals(&self) -> (f64, f64) {
        let moment_t = if self.atom_inf > 0.0 {
            f64::INFINITY
        } else {
            self.nodes.iter().map(|&(t, w)| w * t).sum()
        };
        let moment_tinv = if self.atom0 > 0.0 {
            f64::INFINITY
        } else {
            self.nodes.iter().map(|&(t, w)| w / t).sum()
        };
        (moment_t, moment_tinv)
    }
}

/// Measure of the arithmetic mean: `(δ_0 + δ_∞)/2`.
pub fn arithmetic_measure() -> BorelMeasure {
    BorelMeasure::new(0.5, 0.5, Vec::new(), false).expect("atoms only")
}

/// Measure of the harmonic mean: `δ_1`.
pub fn harmonic_measure() -> BorelMeasure {
    BorelMeasure::dirac(1.0).expect("point mass at 1")
}

/// Quadrature discretization of the geometric-mean measure
/// `dm = dt / (π √t (1 + t))`: per-panel Gauss-Legendre over dyadic panels
/// `[2^k, 2^{k+1})`. Poles of every integrand of interest sit on the
/// negative axis, so each panel converges geometrically.
pub fn geometric_measure() -> BorelMeasure {
    let (gx, gw) = gauss_legendre(PANEL_NODES);
    let mut nodes = Vec::with_capacity(2 * PANEL_SPAN as usize * PANEL_NODES);
    for k in -PANEL_SPAN..PANEL_SPAN {
        let a = (2.0f64).powi(k);
        let b = 2.0 * a;
        let (mid, rad) = (0.5 * (a + b), 0.5 * (b - a));
        for (&x, &w) in gx.iter().zip(&gw) {
            let t = mid + rad * x;
            let density = 1.0 / (PI * t.sqrt() * (1.0 + t));
            nodes.push((t, w * rad * density));
        }
    }
    BorelMeasure::new(0.0, 0.0, nodes, true).expect("positive quadrature weights")
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        ws[i] = w;
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

/// Subinterval of `[0, ∞]`; an infinite closed upper end includes the
/// point at infinity.
#[derive(Clone, Copy, Debug)]
pub struct ExtInterval {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl ExtInterval {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Result<ExtInterval> {
        if !lo.is_finite() || lo < 0.0 {
            return Err(Error::InvalidInput(format!("lower endpoint must be finite >= 0, got {lo}")));
        }
        if hi.is_nan() || hi < lo {
            return Err(Error::InvalidInput(format!("upper endpoint {hi} below lower {lo}")));
        }
        Ok(ExtInterval { lo, lo_closed, hi, hi_closed })
    }

    /// All of `[0, ∞]`.
    pub fn full() -> ExtInterval {
        ExtInterval { lo: 0.0, lo_closed: true, hi: f64::INFINITY, hi_closed: true }
    }

    /// The open interior `(0, ∞)`.
    pub fn interior() -> ExtInterval {
        ExtInterval { lo: 0.0, lo_closed: false, hi: f64::INFINITY, hi_closed: false }
    }

    pub fn contains_zero(&self) -> bool {
        self.lo == 0.0 && self.lo_closed
    }

    pub fn contains_inf(&self) -> bool {
        self.hi == f64::INFINITY && self.hi_closed
    }

    /// Membership for interior points `t` in `(0, ∞)`.
    pub fn contains(&self, t: f64) -> bool {
        let lo_ok = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let hi_ok = if self.hi_closed { t <= self.hi } else { t < self.hi };
        lo_ok && hi_ok
    }

    fn finite_positive_endpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2);
        if self.lo > 0.0 {
            out.push(self.lo);
        }
        if self.hi.is_finite() && self.hi > 0.0 {
            out.push(self.hi);
        }
        out
    }
}

/// Decomposition `f(x) = α + βx + h(x)` of a representing function against
/// its measure: `α` and `β` are the endpoint atoms and `h` integrates the
/// interior part `m_h`, which may be the zero measure.
pub struct HSplit {
    pub alpha: f64,
    pub beta: f64,
    h: ScalarFn,
    pub m_h: BorelMeasure,
}

impl HSplit {
    pub fn h(&self, x: f64) -> f64 {
        (self.h)(x)
    }
}

/// Split `f` along the atoms of its measure. The remainder must be
/// nonnegative on the standard grid, which is the post-hoc consistency
/// check that `m` really belongs to `f`.
pub fn split_h(f: &ReprFn, m: &BorelMeasure) -> Result<HSplit> {
    let alpha = m.atom0();
    let beta = m.atom_inf();
    let eval = f.shared_eval();
    let h: ScalarFn = std::sync::Arc::new(move |x: f64| eval(x) - alpha - beta * x);
    for x in crate::means::standard_grid() {
        let v = h(x);
        if v < -SPLIT_NEG_TOL * (1.0 + f.eval(x).abs()) {
            return Err(Error::MeasureMismatch {
                reason: format!("remainder h({x:.6e}) = {v:.6e} is negative"),
            });
        }
    }
    let m_h = BorelMeasure::new_allow_zero(0.0, 0.0, m.nodes().to_vec(), m.quadrature())?;
    Ok(HSplit { alpha, beta, h, m_h })
}

/// Connection induced by the measure:
/// `atom0·A + atomInf·B + Σ w (1 + t)/t · (tA : B)`.
pub fn measure_connection_eval(
    m: &BorelMeasure,
    a: &SpdMatrix,
    b: &SpdMatrix,
) -> Result<SpdMatrix> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    if m.total_mass() <= 0.0 {
        return Err(Error::InvalidMeasure("connection needs positive total mass".into()));
    }
    let mut acc = &a.as_sym().scale(m.atom0()) + &b.as_sym().scale(m.atom_inf());
    if !m.nodes().is_empty() {
        let a_inv = a.inverse();
        let b_inv = b.inverse();
        for &(t, w) in m.nodes() {
            // (tA : B) = (A^{-1}/t + B^{-1})^{-1}
            let m_t = SpdMatrix::try_from_sym(&a_inv.as_sym().scale(1.0 / t) + b_inv.as_sym())?;
            let par = m_t.inverse();
            acc = &acc + &par.as_sym().scale(w * (1.0 + t) / t);
        }
    }
    SpdMatrix::try_from_sym(acc)
}

/// Semidefinite variant for measures without mass at infinity evaluated
/// against a semidefinite right slot, used by divergence scans where the
/// right slot is a scaled projection.
pub fn measure_interior_eval(
    m: &BorelMeasure,
    a: &SpdMatrix,
    b: &PsdMatrix,
) -> Result<PsdMatrix> {
    if m.atom_inf() > 0.0 {
        return Err(Error::Precondition(
            "interior evaluation requires no atom at infinity".into(),
        ));
    }
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    let mut acc = a.as_sym().scale(m.atom0());
    if !m.nodes().is_empty() {
        let a_inv = a.inverse();
        for &(t, w) in m.nodes() {
            // tA : B stays defined for semidefinite B as B(B + tA)^{-1}tA;
            // equivalently limit of the resolvent form, computed here by a
            // tiny ridge on B that stays inside the stopping tolerance.
            let b_ridge = b.shifted(1e-13);
            let m_t =
                SpdMatrix::try_from_sym(&a_inv.as_sym().scale(1.0 / t) + b_ridge.inverse().as_sym())?;
            acc = &acc + &m_t.inverse().as_sym().scale(w * (1.0 + t) / t);
        }
    }
    PsdMatrix::try_from_sym(acc)
}
