//! Seeded generation of test matrices: SPD pairs in each order relation,
//! singular PSD matrices, and random projections. Every generator is
//! deterministic in its seed so trial corpora are reproducible and
//! order-independent.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{OrthProjection, PsdMatrix, SpdMatrix, SymMatrix, DIM_CAP};

/// Order relation of a generated pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// `B = A + CCᵀ`, so `A ≤ B` always.
    Ordered,
    /// `B − A` has an eigenvalue below −0.1 and one above 0.1, so the
    /// pair is incomparable in both directions.
    Unordered,
    /// Simultaneously diagonalized pair with a known separating
    /// projection.
    CongruentDiagonal,
}

impl PairKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ordered" => Ok(PairKind::Ordered),
            "unordered" => Ok(PairKind::Unordered),
            "congruent-diagonal" => Ok(PairKind::CongruentDiagonal),
            other => Err(Error::InvalidInput(format!("unknown pair kind {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PairKind::Ordered => "ordered",
            PairKind::Unordered => "unordered",
            PairKind::CongruentDiagonal => "congruent-diagonal",
        }
    }
}

/// A generated pair, with the separating projection when the
/// construction knows one.
#[derive(Clone, Debug)]
pub struct GeneratedPair {
    pub a: SpdMatrix,
    pub b: SpdMatrix,
    pub kind: PairKind,
    pub witness_projection: Option<OrthProjection>,
}

/// Mix a master seed with a trial index into an independent stream seed.
/// SplitMix64 finalizer, so nearby indices land far apart.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_dim(n: usize) -> Result<()> {
    if !(2..=DIM_CAP).contains(&n) {
        return Err(Error::DimensionRange { n, min: 2, max: DIM_CAP });
    }
    Ok(())
}

/// Random SPD matrix `MMᵀ + shift·I` with `M` entries uniform in [−1, 1].
pub fn random_spd(n: usize, rng: &mut impl Rng, shift: f64) -> Result<SpdMatrix> {
    check_dim(n)?;
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let gram = &m * m.transpose();
    let sym = SymMatrix::from_dmatrix(gram)?.add_scaled_identity(shift);
    SpdMatrix::try_from_sym(sym)
}

/// Random orthogonal matrix from the QR factorization of a matrix with
/// uniform entries.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

/// Random PSD matrix with exactly `zero_count` zero eigenvalues; the
/// remaining eigenvalues are uniform in [0.2, 2].
pub fn random_psd(n: usize, rng: &mut impl Rng, zero_count: usize) -> Result<PsdMatrix> {
    check_dim(n)?;
    if zero_count > n {
        return Err(Error::InvalidInput(format!(
            "cannot zero {zero_count} eigenvalues of a {n}-dimensional matrix"
        )));
    }
    let q = random_orthogonal(n, rng);
    let evs: Vec<f64> =
        (0..n).map(|i| if i < zero_count { 0.0 } else { rng.gen_range(0.2..2.0) }).collect();
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(evs));
    let sym = SymMatrix::from_dmatrix(&q * lam * q.transpose())?;
    PsdMatrix::try_from_sym(sym)
}

/// Random orthogonal projection of the given rank.
pub fn random_projection(n: usize, rng: &mut impl Rng, rank: usize) -> Result<OrthProjection> {
    check_dim(n)?;
    if rank == 0 || rank > n {
        return Err(Error::InvalidInput(format!("projection rank {rank} out of range for n = {n}")));
    }
    let q = random_orthogonal(n, rng);
    let u = q.columns(0, rank).into_owned();
    let sym = SymMatrix::from_dmatrix(&u * u.transpose())?;
    OrthProjection::try_from_sym(sym)
}

/// Generate a seeded pair of the requested kind.
pub fn generate_pair(n: usize, seed: u64, kind: PairKind) -> Result<GeneratedPair> {
    check_dim(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        PairKind::Ordered => {
            let a = random_spd(n, &mut rng, 0.1)?;
            let c = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
            let bump = SymMatrix::from_dmatrix(&c * c.transpose())?;
            let b = SpdMatrix::try_from_sym(a.as_sym() + &bump)?;
            Ok(GeneratedPair { a, b, kind, witness_projection: None })
        }
        PairKind::Unordered => {
            let a = random_spd(n, &mut rng, 1.5)?;
            let q = random_orthogonal(n, &mut rng);
            // First two directions carry guaranteed positive and negative
            // eigenvalues; the rest get random signs.
            let evs: Vec<f64> = (0..n)
                .map(|i| {
                    let mag = rng.gen_range(0.15..1.0);
                    match i {
                        0 => mag,
                        1 => -mag,
                        _ => {
                            if rng.gen_bool(0.5) {
                                mag
                            } else {
                                -mag
                            }
                        }
                    }
                })
                .collect();
            let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(evs));
            let d = SymMatrix::from_dmatrix(&q * lam * q.transpose())?;
            let b = SpdMatrix::try_from_sym(a.as_sym() + &d)?;
            Ok(GeneratedPair { a, b, kind, witness_projection: None })
        }
        PairKind::CongruentDiagonal => {
            let q = random_orthogonal(n, &mut rng);
            let base: Vec<f64> = (0..n).map(|_| rng.gen_range(1.3..2.5)).collect();
            let deltas: Vec<f64> = (0..n)
                .map(|i| {
                    let mag = rng.gen_range(0.3..1.0);
                    match i {
                        0 => mag,
                        1 => -mag,
                        _ => {
                            if rng.gen_bool(0.5) {
                                mag
                            } else {
                                -mag
                            }
                        }
                    }
                })
                .collect();
            let diag = |v: &[f64]| {
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
            };
            let a_evs = diag(&base);
            let b_evs: Vec<f64> = base.iter().zip(&deltas).map(|(a, d)| a + d).collect();
            let a = SpdMatrix::try_from_sym(SymMatrix::from_dmatrix(&q * a_evs * q.transpose())?)?;
            let b = SpdMatrix::try_from_sym(SymMatrix::from_dmatrix(
                &q * diag(&b_evs) * q.transpose(),
            )?)?;
            // The directions where B dips below A span a spectral
            // projection of B − A, the pair's known witness.
            let ind: Vec<f64> = deltas.iter().map(|d| if *d < 0.0 { 1.0 } else { 0.0 }).collect();
            let p = OrthProjection::try_from_sym(SymMatrix::from_dmatrix(
                &q * diag(&ind) * q.transpose(),
            )?)?;
            Ok(GeneratedPair { a, b, kind, witness_projection: Some(p) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{loewner_leq, max_abs_diff, spectral_projection, Interval};

    #[test]
    fn derive_seed_separates_streams() {
        assert_eq!(derive_seed(7, 0), derive_seed(7, 0));
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
        assert_ne!(derive_seed(0, 1), derive_seed(1, 0));
    }

    #[test]
    fn ordered_pairs_are_ordered() {
        for i in 0..30 {
            let n = 2 + (i % 7);
            let pair = generate_pair(n, derive_seed(11, i as u64), PairKind::Ordered).unwrap();
            assert!(loewner_leq(pair.a.as_sym(), pair.b.as_sym(), 1e-12).unwrap());
            assert!(pair.witness_projection.is_none());
        }
    }

    #[test]
    fn unordered_pairs_are_incomparable() {
        for i in 0..30 {
            let n = 2 + (i % 7);
            let pair = generate_pair(n, derive_seed(12, i as u64), PairKind::Unordered).unwrap();
            let d = pair.b.as_sym() - pair.a.as_sym();
            let dec = d.eig();
            assert!(dec.min_eigenvalue() < -0.1);
            assert!(dec.max_eigenvalue() > 0.1);
            assert!(!loewner_leq(pair.a.as_sym(), pair.b.as_sym(), 1e-9).unwrap());
            assert!(!loewner_leq(pair.b.as_sym(), pair.a.as_sym(), 1e-9).unwrap());
        }
    }

    #[test]
    fn congruent_diagonal_witness_is_spectral() {
        for i in 0..30 {
            let n = 2 + (i % 7);
            let pair =
                generate_pair(n, derive_seed(13, i as u64), PairKind::CongruentDiagonal).unwrap();
            let p = pair.witness_projection.as_ref().expect("construction knows its witness");
            assert!(p.rank() >= 1);
            let d = pair.b.as_sym() - pair.a.as_sym();
            // The known projection is the spectral projection below any
            // threshold inside the sign gap.
            let spectral = spectral_projection(&d, &Interval::below(-0.1)).unwrap();
            assert!(max_abs_diff(p.matrix(), spectral.matrix()).unwrap() < 1e-9);
            assert!(!loewner_leq(pair.a.as_sym(), pair.b.as_sym(), 1e-9).unwrap());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in [PairKind::Ordered, PairKind::Unordered, PairKind::CongruentDiagonal] {
            let p1 = generate_pair(5, 42, kind).unwrap();
            let p2 = generate_pair(5, 42, kind).unwrap();
            assert_eq!(max_abs_diff(p1.a.as_sym(), p2.a.as_sym()).unwrap(), 0.0);
            assert_eq!(max_abs_diff(p1.b.as_sym(), p2.b.as_sym()).unwrap(), 0.0);
        }
    }

    #[test]
    fn random_psd_has_requested_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_psd(6, &mut rng, 2).unwrap();
        let evs = m.decomposition().eigenvalues();
        assert!(evs[0].abs() < 1e-10 && evs[1].abs() < 1e-10);
        assert!(evs[2] > 0.1);
    }

    #[test]
    fn random_projection_has_requested_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for rank in 1..=4 {
            let p = random_projection(4, &mut rng, rank).unwrap();
            assert_eq!(p.rank(), rank);
        }
    }

    #[test]
    fn dimension_limits_enforced() {
        assert!(matches!(
            generate_pair(1, 0, PairKind::Ordered).unwrap_err(),
            Error::DimensionRange { .. }
        ));
        assert!(matches!(
            generate_pair(257, 0, PairKind::Ordered).unwrap_err(),
            Error::DimensionRange { .. }
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_projection(4, &mut rng, 0).is_err());
        assert!(random_projection(4, &mut rng, 5).is_err());
        assert!(random_psd(4, &mut rng, 5).is_err());
    }

    #[test]
    fn pair_kind_round_trip() {
        for kind in [PairKind::Ordered, PairKind::Unordered, PairKind::CongruentDiagonal] {
            assert_eq!(PairKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(PairKind::parse("singular").is_err());
    }
}
