//! Dense real symmetric matrices with positivity classes, a single shared
//! eigendecomposition path, functional calculus, spectral projections and
//! range compressions.
//!
//! Every spectral quantity in the crate goes through [`SymMatrix::eig`], so
//! ordering and sign conventions are fixed in one place: eigenvalues ascend
//! and each basis column has its largest-magnitude entry positive.

use std::ops::{Add, Deref, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Hard cap on matrix dimension.
pub const DIM_CAP: usize = 256;
/// Max-entry bound on `QᵀQ − I` for an eigenbasis.
pub const ORTHO_TOL: f64 = 1e-10;
/// Max-entry bound on `P² − P` and on eigenvalue distance to `{0, 1}` for a
/// projection.
pub const PROJ_TOL: f64 = 1e-10;
/// Exclusion radius around eigenvalues for spectral-interval endpoints.
pub const ENDPOINT_GUARD: f64 = 1e-8;
/// Absolute eigenvalue floor for the positive-definite class.
pub const PD_FLOOR: f64 = 1e-12;
/// Relative asymmetry defect accepted by validating constructors.
pub const SYM_TOL: f64 = 1e-12;
/// Eigenvalues are clamped to this floor before inversion; it only engages
/// deep in the regularized extension, where a shifted matrix has drifted to
/// the edge of its positive-semidefinite tolerance.
pub(crate) const INV_EIG_FLOOR: f64 = 1e-14;

/// Scale-aware tolerance for positive-semidefinite classification.
pub fn psd_tolerance(norm: f64) -> f64 {
    1e-9 * (1.0 + norm)
}

/// Real symmetric matrix. Constructors symmetrize exactly and remember the
/// asymmetry defect of the raw input.
#[derive(Clone, Debug)]
pub struct SymMatrix {
    mat: DMatrix<f64>,
    defect: f64,
}

impl SymMatrix {
    /// Validating constructor from an arbitrary square matrix: finite
    /// entries, dimension in `[1, DIM_CAP]`, asymmetry defect at most
    /// `SYM_TOL` times the largest entry magnitude.
    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if n == 0 || n > DIM_CAP {
            return Err(Error::DimensionRange { n, min: 1, max: DIM_CAP });
        }
        for j in 0..n {
            for i in 0..n {
                if !m[(i, j)].is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
            }
        }
        let defect = asymmetry_defect(&m);
        let bound = SYM_TOL * m.amax();
        if defect > bound {
            return Err(Error::Asymmetric { defect, bound });
        }
        Ok(Self::symmetrized_with_defect(m, defect))
    }

    /// Validating constructor from row-major entries.
    pub fn from_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(n, n, entries))
    }

    /// Internal constructor for products that are symmetric in exact
    /// arithmetic; symmetrizes unconditionally and records the defect.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let defect = asymmetry_defect(&m);
        Self::symmetrized_with_defect(m, defect)
    }

    fn symmetrized_with_defect(mut m: DMatrix<f64>, defect: f64) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { mat: m, defect }
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_dmatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_dmatrix(DMatrix::zeros(n, n))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let n = d.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        Self::from_dmatrix(m)
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn dmatrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Asymmetry defect of the raw input this matrix was built from.
    pub fn asymmetry_defect(&self) -> f64 {
        self.defect
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.amax()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { mat: &self.mat * c, defect: 0.0 }
    }

    pub fn add_scaled_identity(&self, c: f64) -> SymMatrix {
        let mut m = self.mat.clone();
        for i in 0..self.n() {
            m[(i, i)] += c;
        }
        SymMatrix { mat: m, defect: self.defect }
    }

    /// Largest entry magnitude of `AB − BA`.
    pub fn commutator_max(&self, other: &SymMatrix) -> Result<f64> {
        check_dims(self, other)?;
        let ab = &self.mat * &other.mat;
        let ba = &other.mat * &self.mat;
        Ok((ab - ba).amax())
    }

    /// Eigendecomposition with ascending eigenvalues and a sign-fixed
    /// orthonormal basis.
    pub fn eig(&self) -> SpectralDecomposition {
        let se = self.mat.clone().symmetric_eigen();
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
        let mut eigenvalues = Vec::with_capacity(n);
        let mut basis = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvalues.push(se.eigenvalues[src]);
            let col = se.eigenvectors.column(src);
            let mut lead = 0;
            for k in 1..n {
                if col[k].abs() > col[lead].abs() {
                    lead = k;
                }
            }
            let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
            for k in 0..n {
                basis[(k, dst)] = sign * col[k];
            }
        }
        SpectralDecomposition { eigenvalues, basis }
    }

    /// Operator norm, the largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> f64 {
        self.eig().max_abs_eigenvalue()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().min_eigenvalue()
    }

    /// Functional calculus `φ(M)`; errors if `φ` is non-finite at an
    /// eigenvalue.
    pub fn apply(&self, phi: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        self.eig().apply(phi)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n(), rhs.n(), "dimension mismatch in matrix sum");
        SymMatrix { mat: &self.mat + &rhs.mat, defect: 0.0 }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n(), rhs.n(), "dimension mismatch in matrix difference");
        SymMatrix { mat: &self.mat - &rhs.mat, defect: 0.0 }
    }
}

fn asymmetry_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            d = d.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    d
}

fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    Ok(())
}

/// Largest entry magnitude of `A − B`.
pub fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok((a.dmatrix() - b.dmatrix()).amax())
}

/// Eigendecomposition `M = QΛQᵀ` with ascending `Λ` and sign-fixed `Q`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    basis: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal basis; column `i` belongs to `eigenvalues()[i]`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.min_eigenvalue().abs().max(self.max_eigenvalue().abs())
    }

    /// `QΛQᵀ`, symmetrized.
    pub fn reconstruct(&self) -> SymMatrix {
        self.assemble(self.eigenvalues.clone())
    }

    /// `Q φ(Λ) Qᵀ`; errors if `φ` is non-finite at an eigenvalue.
    pub fn apply(&self, phi: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let mut vals = Vec::with_capacity(self.n());
        for &lam in &self.eigenvalues {
            let v = phi(lam);
            if !v.is_finite() {
                return Err(Error::FnDomain { eigenvalue: lam });
            }
            vals.push(v);
        }
        Ok(self.assemble(vals))
    }

    fn assemble(&self, vals: Vec<f64>) -> SymMatrix {
        let n = self.n();
        let mut scaled = self.basis.clone();
        for (j, v) in vals.into_iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= v;
            }
        }
        SymMatrix::symmetrized(&scaled * self.basis.transpose())
    }

    /// Max entry of `QᵀQ − I`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n();
        (self.basis.transpose() * &self.basis - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// New decomposition with eigenvalues mapped through `phi`, re-sorted.
    pub(crate) fn map_eigenvalues(&self, phi: impl Fn(f64) -> f64) -> SpectralDecomposition {
        let n = self.n();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&x| phi(x)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| mapped[i].total_cmp(&mapped[j]));
        let mut eigenvalues = Vec::with_capacity(n);
        let mut basis = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvalues.push(mapped[src]);
            for k in 0..n {
                basis[(k, dst)] = self.basis[(k, src)];
            }
        }
        SpectralDecomposition { eigenvalues, basis }
    }

    fn projection_from_indices(&self, selected: &[usize]) -> OrthProjection {
        let n = self.n();
        let k = selected.len();
        let mut v = DMatrix::zeros(n, k);
        for (dst, &src) in selected.iter().enumerate() {
            for row in 0..n {
                v[(row, dst)] = self.basis[(row, src)];
            }
        }
        let mat = if k == 0 {
            SymMatrix { mat: DMatrix::zeros(n, n), defect: 0.0 }
        } else {
            SymMatrix::symmetrized(&v * v.transpose())
        };
        OrthProjection { mat, basis: v }
    }
}

/// Positive semidefinite matrix; carries its eigendecomposition, so norm and
/// extreme-eigenvalue queries are free after classification.
#[derive(Clone, Debug)]
pub struct PsdMatrix {
    mat: SymMatrix,
    dec: SpectralDecomposition,
}

impl PsdMatrix {
    /// Classify a symmetric matrix, accepting eigenvalues down to
    /// `-psd_tolerance(norm)`.
    pub fn try_from_sym(m: SymMatrix) -> Result<Self> {
        let dec = m.eig();
        let norm = dec.max_abs_eigenvalue();
        let tol = psd_tolerance(norm);
        if dec.min_eigenvalue() < -tol {
            return Err(Error::NotPsd { min_eig: dec.min_eigenvalue(), tol });
        }
        Ok(PsdMatrix { mat: m, dec })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::try_from_sym(SymMatrix::identity(n)?)
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::try_from_sym(SymMatrix::diagonal(d)?)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.mat
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.dec
    }

    pub fn min_eig(&self) -> f64 {
        self.dec.min_eigenvalue()
    }

    /// Cached operator norm.
    pub fn operator_norm(&self) -> f64 {
        self.dec.max_abs_eigenvalue()
    }

    /// `M + eps·I` for `eps > 0`, promoted to the definite class. The shift
    /// reuses the stored basis: eigenvalues translate exactly.
    pub fn shifted(&self, eps: f64) -> SpdMatrix {
        debug_assert!(eps > 0.0);
        SpdMatrix {
            inner: PsdMatrix {
                mat: self.mat.add_scaled_identity(eps),
                dec: self.dec.map_eigenvalues(|x| x + eps),
            },
            halves: OnceLock::new(),
        }
    }

    /// Functional calculus on the clamped spectrum: eigenvalues at or below
    /// zero evaluate to `at_zero`.
    pub fn apply_clamped(&self, phi: impl Fn(f64) -> f64, at_zero: f64) -> Result<SymMatrix> {
        self.dec.apply(|lam| if lam <= 0.0 { at_zero } else { phi(lam) })
    }
}

impl Deref for PsdMatrix {
    type Target = SymMatrix;
    fn deref(&self) -> &SymMatrix {
        &self.mat
    }
}

/// Positive definite matrix: eigenvalues at or above `PD_FLOOR`, except for
/// trusted shift constructions that track their own floor.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    inner: PsdMatrix,
    halves: OnceLock<Box<(DMatrix<f64>, DMatrix<f64>)>>,
}

impl SpdMatrix {
    pub fn try_from_sym(m: SymMatrix) -> Result<Self> {
        Self::try_from_psd(PsdMatrix::try_from_sym(m)?)
    }

    pub fn try_from_psd(p: PsdMatrix) -> Result<Self> {
        if p.min_eig() < PD_FLOOR {
            return Err(Error::NotPd { min_eig: p.min_eig(), floor: PD_FLOOR });
        }
        Ok(SpdMatrix { inner: p, halves: OnceLock::new() })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::try_from_sym(SymMatrix::identity(n)?)
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::try_from_sym(SymMatrix::diagonal(d)?)
    }

    pub fn as_psd(&self) -> &PsdMatrix {
        &self.inner
    }

    /// Eigen-backed inverse; shares the stored basis.
    pub fn inverse(&self) -> SpdMatrix {
        let dec = self.inner.dec.map_eigenvalues(|x| 1.0 / x.max(INV_EIG_FLOOR));
        SpdMatrix {
            inner: PsdMatrix { mat: dec.reconstruct(), dec },
            halves: OnceLock::new(),
        }
    }

    /// `c·M` for `c > 0`.
    pub fn scaled(&self, c: f64) -> SpdMatrix {
        debug_assert!(c > 0.0 && c.is_finite());
        SpdMatrix {
            inner: PsdMatrix {
                mat: self.inner.mat.scale(c),
                dec: self.inner.dec.map_eigenvalues(|x| c * x),
            },
            halves: OnceLock::new(),
        }
    }

    /// Cached pair `(M^{1/2}, M^{-1/2})`, eigenvalues floored at
    /// `INV_EIG_FLOOR` before the root.
    pub fn sqrt_pair(&self) -> &(DMatrix<f64>, DMatrix<f64>) {
        self.halves.get_or_init(|| {
            let half = self
                .inner
                .dec
                .apply(|x| x.max(INV_EIG_FLOOR).sqrt())
                .expect("square root of floored eigenvalues is finite");
            let inv_half = self
                .inner
                .dec
                .apply(|x| 1.0 / x.max(INV_EIG_FLOOR).sqrt())
                .expect("inverse square root of floored eigenvalues is finite");
            Box::new((half.mat, inv_half.mat))
        })
    }
}

impl Deref for SpdMatrix {
    type Target = PsdMatrix;
    fn deref(&self) -> &PsdMatrix {
        &self.inner
    }
}

/// Orthogonal projection with an explicit orthonormal range basis.
#[derive(Clone, Debug)]
pub struct OrthProjection {
    mat: SymMatrix,
    basis: DMatrix<f64>,
}

impl OrthProjection {
    pub fn zero(n: usize) -> Self {
        OrthProjection {
            mat: SymMatrix { mat: DMatrix::zeros(n, n), defect: 0.0 },
            basis: DMatrix::zeros(n, 0),
        }
    }

    pub fn identity(n: usize) -> Self {
        OrthProjection {
            mat: SymMatrix { mat: DMatrix::identity(n, n), defect: 0.0 },
            basis: DMatrix::identity(n, n),
        }
    }

    /// Classify a symmetric matrix as a projection: every eigenvalue within
    /// `PROJ_TOL` of `{0, 1}` and `‖P² − P‖` within `PROJ_TOL`.
    pub fn try_from_sym(m: SymMatrix) -> Result<Self> {
        let dec = m.eig();
        let mut selected = Vec::new();
        for (i, &lam) in dec.eigenvalues().iter().enumerate() {
            if (lam - 1.0).abs() <= PROJ_TOL {
                selected.push(i);
            } else if lam.abs() > PROJ_TOL {
                return Err(Error::NotProjection {
                    reason: format!("eigenvalue {lam:.6e} not within {PROJ_TOL:.1e} of 0 or 1"),
                });
            }
        }
        let idem = (m.dmatrix() * m.dmatrix() - m.dmatrix()).amax();
        if idem > PROJ_TOL {
            return Err(Error::NotProjection {
                reason: format!("idempotency defect {idem:.3e} exceeds {PROJ_TOL:.1e}"),
            });
        }
        let mut proj = dec.projection_from_indices(&selected);
        // Keep the caller's matrix; the recomputed one only fixes the basis.
        proj.mat = m;
        Ok(proj)
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n(&self) -> usize {
        self.mat.n()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    /// Orthonormal basis of the range, one column per rank.
    pub fn range_basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn as_psd(&self) -> Result<PsdMatrix> {
        PsdMatrix::try_from_sym(self.mat.clone())
    }

    /// Max entry of `P² − P`.
    pub fn idempotency_defect(&self) -> f64 {
        (self.mat.dmatrix() * self.mat.dmatrix() - self.mat.dmatrix()).amax()
    }
}

/// Endpoint of a real interval.
#[derive(Clone, Copy, Debug)]
pub enum Bound {
    Unbounded,
    Open(f64),
    Closed(f64),
}

/// Real interval for spectral selection.
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    lo: Bound,
    hi: Bound,
}

impl Interval {
    pub fn new(lo: Bound, hi: Bound) -> Self {
        Interval { lo, hi }
    }

    /// `(−∞, b)`
    pub fn below(b: f64) -> Self {
        Interval { lo: Bound::Unbounded, hi: Bound::Open(b) }
    }

    /// `(a, ∞)`
    pub fn above(a: f64) -> Self {
        Interval { lo: Bound::Open(a), hi: Bound::Unbounded }
    }

    /// `[a, b]`
    pub fn closed(a: f64, b: f64) -> Self {
        Interval { lo: Bound::Closed(a), hi: Bound::Closed(b) }
    }

    /// `(a, b)`
    pub fn open(a: f64, b: f64) -> Self {
        Interval { lo: Bound::Open(a), hi: Bound::Open(b) }
    }

    pub fn contains(&self, x: f64) -> bool {
        let lo_ok = match self.lo {
            Bound::Unbounded => true,
            Bound::Open(a) => x > a,
            Bound::Closed(a) => x >= a,
        };
        let hi_ok = match self.hi {
            Bound::Unbounded => true,
            Bound::Open(b) => x < b,
            Bound::Closed(b) => x <= b,
        };
        lo_ok && hi_ok
    }

    fn finite_endpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2);
        for b in [self.lo, self.hi] {
            match b {
                Bound::Open(v) | Bound::Closed(v) => out.push(v),
                Bound::Unbounded => {}
            }
        }
        out
    }
}

/// Spectral projection of `m` onto the eigenspaces with eigenvalue in `iv`.
/// Errors if any eigenvalue sits within `ENDPOINT_GUARD` of a finite
/// endpoint, where membership would be a rounding artifact.
pub fn spectral_projection(m: &SymMatrix, iv: &Interval) -> Result<OrthProjection> {
    let dec = m.eig();
    for e in iv.finite_endpoints() {
        for &lam in dec.eigenvalues() {
            if (lam - e).abs() <= ENDPOINT_GUARD {
                return Err(Error::BoundaryAmbiguity {
                    eigenvalue: lam,
                    endpoint: e,
                    guard: ENDPOINT_GUARD,
                });
            }
        }
    }
    let selected: Vec<usize> = dec
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, &lam)| iv.contains(lam))
        .map(|(i, _)| i)
        .collect();
    Ok(dec.projection_from_indices(&selected))
}

/// Löwner comparison `A ≤ B` up to `tol`: the smallest eigenvalue of
/// `B − A` is at least `−tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    check_dims(a, b)?;
    Ok((b - a).min_eigenvalue() >= -tol)
}

/// `VᵀMV`, the compression of `M` onto the range of `P` in its basis.
pub fn compress(m: &SymMatrix, p: &OrthProjection) -> Result<SymMatrix> {
    if m.n() != p.n() {
        return Err(Error::DimensionMismatch { left: m.n(), right: p.n() });
    }
    if p.rank() == 0 {
        return Err(Error::ZeroProjection);
    }
    let v = p.range_basis();
    Ok(SymMatrix::symmetrized(v.transpose() * m.dmatrix() * v))
}

/// `‖PMP‖`; the nonzero spectrum of `PMP` equals that of the compression.
pub fn compression_norm(m: &SymMatrix, p: &OrthProjection) -> Result<f64> {
    if m.n() != p.n() {
        return Err(Error::DimensionMismatch { left: m.n(), right: p.n() });
    }
    if p.rank() == 0 {
        return Ok(0.0);
    }
    Ok(compress(m, p)?.operator_norm())
}

/// Largest `λ ≥ 0` with `λP ≤ PAP`, the smallest eigenvalue of the
/// compression of `A` clamped at zero. Errors on a rank-zero projection.
pub fn compression_max_lambda(a: &PsdMatrix, p: &OrthProjection) -> Result<f64> {
    Ok(compress(a.as_sym(), p)?.min_eigenvalue().max(0.0))
}
