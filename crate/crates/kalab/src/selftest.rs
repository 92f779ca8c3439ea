//! The acceptance suite: ten deterministic criteria covering the axioms,
//! the two evaluation paths, the named-measure identities, the order
//! criteria, the three limit scans, the witness round trip, and replay
//! determinism. Each criterion reports one pass/fail line; the full
//! report hashes to a stable digest under a fixed master seed.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nalgebra::DMatrix;

use crate::error::Error;
use crate::generate::{
    derive_seed, generate_pair, random_projection, random_psd, random_spd, PairKind,
};
use crate::matrix::{
    compress, loewner_leq, max_abs_diff, OrthProjection, PsdMatrix, SpdMatrix, SymMatrix,
};
use crate::means::{connection_eval, connection_eval_psd, Connection};
use crate::measure::{arithmetic_measure, harmonic_measure, measure_connection_eval};
use crate::order::{
    case2a_limit_scan, norm_tolerance, order_determination_check, prop2_criteria,
    prop3_limit_scan, prop4_norm,
};

pub const DEFAULT_MASTER_SEED: u64 = 7;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn format_line(&self) -> String {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        format!("[{mark}] criterion {:>2}: {} - {}", self.id, self.name, self.detail)
    }
}

/// Full acceptance report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelftestReport {
    pub master_seed: u64,
    pub criteria: Vec<CriterionResult>,
    /// Digest of the first pipeline pass.
    pub hash: String,
    pub all_passed: bool,
}

type Check = std::result::Result<String, String>;

fn criterion(id: u32, name: &str, body: impl FnOnce() -> Check) -> CriterionResult {
    match body() {
        Ok(detail) => CriterionResult { id, name: name.into(), passed: true, detail },
        Err(detail) => CriterionResult { id, name: name.into(), passed: false, detail },
    }
}

fn lib<T>(r: crate::error::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn seed_for(master: u64, tag: u64, index: u64) -> u64 {
    derive_seed(derive_seed(master, tag), index)
}

fn random_sym_pd(n: usize, rng: &mut impl Rng, shift: f64) -> SymMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let sym = SymMatrix::from_dmatrix(0.5 * (&m + m.transpose())).expect("symmetrized");
    let lift = shift + (-sym.min_eigenvalue()).max(0.0);
    sym.add_scaled_identity(lift)
}

fn congruence(t: &SymMatrix, m: &SymMatrix) -> SymMatrix {
    let prod = t.dmatrix() * m.dmatrix() * t.dmatrix();
    SymMatrix::from_dmatrix(prod).expect("congruence keeps symmetry within tolerance")
}

/// Criterion 1: axioms over seeded trials. Joint monotonicity and the
/// transformer inequality within relative 1e-8; the halving extension
/// must converge with monotone decrease on singular inputs.
fn c1_axioms(master: u64) -> CriterionResult {
    criterion(1, "mean axioms: monotonicity, transformer, downward continuity", || {
        let catalog = Connection::catalog_symmetric();
        let trials = 200;
        for i in 0..trials {
            let n = 2 + (i % 7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(master, 1, i as u64));
            let a = lib(random_spd(n, &mut rng, 0.1))?;
            let b = lib(random_spd(n, &mut rng, 0.1))?;
            let grow = |rng: &mut ChaCha8Rng, base: &SpdMatrix| {
                let e = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
                let bump = SymMatrix::from_dmatrix(&e * e.transpose()).expect("gram symmetric");
                SpdMatrix::try_from_sym(base.as_sym() + &bump)
            };
            let c = lib(grow(&mut rng, &a))?;
            let d = lib(grow(&mut rng, &b))?;
            let t = random_sym_pd(n, &mut rng, 0.3);
            for conn in &catalog {
                let small = lib(conn.eval(&a, b.as_psd()))?;
                let large = lib(conn.eval(&c, d.as_psd()))?;
                let tol = 1e-8 * (1.0 + large.operator_norm());
                if !lib(loewner_leq(small.as_sym(), large.as_sym(), tol))? {
                    return Err(format!(
                        "monotonicity failed for {} at trial {i} (n={n})",
                        conn.label()
                    ));
                }
                let tat = lib(SpdMatrix::try_from_sym(congruence(&t, a.as_sym())))?;
                let tbt = lib(PsdMatrix::try_from_sym(congruence(&t, b.as_sym())))?;
                let lhs = congruence(&t, small.as_sym());
                let rhs = lib(conn.eval(&tat, &tbt))?;
                let tol = 1e-8 * (1.0 + rhs.operator_norm());
                if !lib(loewner_leq(&lhs, rhs.as_sym(), tol))? {
                    return Err(format!(
                        "transformer inequality failed for {} at trial {i} (n={n})",
                        conn.label()
                    ));
                }
                // Downward continuity: the halving sequence from the PD
                // pair must decrease monotonically and converge; both are
                // enforced inside the extension, which errors otherwise.
                match connection_eval_psd(conn.f(), a.as_psd(), b.as_psd()) {
                    Err(e) => {
                        return Err(format!(
                            "halving extension failed for {} at trial {i}: {e}",
                            conn.label()
                        ));
                    }
                    Ok(limit) => {
                        let dev = lib(max_abs_diff(limit.as_sym(), small.as_sym()))?;
                        let tol = 1e-8 * (1.0 + small.operator_norm());
                        if dev > tol {
                            return Err(format!(
                                "extension limit misses the direct value by {dev:.3e} for {} at trial {i}",
                                conn.label()
                            ));
                        }
                    }
                }
            }
        }
        Ok(format!("{} trials x {} means, zero failures", trials, catalog.len()))
    })
}

/// Criterion 2: evaluating against the identity reproduces the scalar
/// calculus of the representing function, max deviation at most 1e-10.
fn c2_identity(master: u64) -> CriterionResult {
    criterion(2, "identity evaluation matches scalar calculus", || {
        let catalog = Connection::catalog_symmetric();
        let trials = 50;
        let mut worst: f64 = 0.0;
        for i in 0..trials {
            let n = 2 + (i % 7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(master, 2, i as u64));
            let b = lib(random_spd(n, &mut rng, 0.1))?;
            let ident = lib(SpdMatrix::identity(n))?;
            for conn in &catalog {
                let via_mean = lib(conn.eval(&ident, b.as_psd()))?;
                let f = conn.f().clone();
                let direct = lib(b.decomposition().apply(|x| f.eval(x)))?;
                let dev = lib(max_abs_diff(via_mean.as_sym(), &direct))?;
                worst = worst.max(dev);
                if dev > 1e-10 {
                    return Err(format!(
                        "identity evaluation off by {dev:.3e} for {} at trial {i}",
                        conn.label()
                    ));
                }
            }
        }
        Ok(format!("{trials} trials x {} means, max deviation {worst:.3e}", catalog.len()))
    })
}

/// Criterion 3: the measure integral and the functional calculus agree,
/// within 1e-12 absolute for the endpoint-atom means and 1e-9 for
/// exact-node mixtures.
fn c3_dual_path(master: u64) -> CriterionResult {
    criterion(3, "functional calculus agrees with measure integral", || {
        let trials = 100;
        let mut worst_named: f64 = 0.0;
        let mut worst_mix: f64 = 0.0;
        let arith = Connection::arithmetic();
        let harm = Connection::harmonic();
        let weights = [0.25, 0.5, 0.75];
        for i in 0..trials {
            let n = 2 + (i % 7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(master, 3, i as u64));
            let raw_a = lib(random_spd(n, &mut rng, 0.5))?;
            let raw_b = lib(random_spd(n, &mut rng, 0.5))?;
            let a = raw_a.scaled(2.0 / raw_a.operator_norm());
            let b = raw_b.scaled(2.0 / raw_b.operator_norm());
            for conn in [&arith, &harm] {
                let m = conn.measure().expect("named means carry measures");
                let via_measure = lib(measure_connection_eval(m, &a, &b))?;
                let via_calculus = lib(conn.eval(&a, b.as_psd()))?;
                let dev = lib(max_abs_diff(via_measure.as_sym(), via_calculus.as_sym()))?;
                worst_named = worst_named.max(dev);
                if dev > 1e-12 {
                    return Err(format!(
                        "paths differ by {dev:.3e} for {} at trial {i}",
                        conn.label()
                    ));
                }
            }
            let w = weights[i % weights.len()];
            let mixed = lib(Connection::mix(w, &arith, &harm))?;
            let m = mixed.measure().expect("atom-node mixture carries a measure");
            let via_measure = lib(measure_connection_eval(m, &a, &b))?;
            let via_calculus = lib(mixed.eval(&a, b.as_psd()))?;
            let dev = lib(max_abs_diff(via_measure.as_sym(), via_calculus.as_sym()))?;
            worst_mix = worst_mix.max(dev);
            if dev > 1e-9 {
                return Err(format!("paths differ by {dev:.3e} for {} at trial {i}", mixed.label()));
            }
        }
        Ok(format!(
            "{trials} trials, endpoint-atom max {worst_named:.3e}, mixture max {worst_mix:.3e}"
        ))
    })
}

/// Criterion 4: the named measures reproduce their scalar means on the
/// standard grid to near machine precision.
fn c4_measure_identities() -> CriterionResult {
    criterion(4, "named measures reproduce their scalar means", || {
        let grid = crate::means::standard_grid();
        let harm = harmonic_measure();
        let arith = arithmetic_measure();
        let mut worst: f64 = 0.0;
        for &x in &grid {
            let hv = lib(harm.eval_fn(x))?;
            let he = 2.0 * x / (1.0 + x);
            let av = lib(arith.eval_fn(x))?;
            let ae = 0.5 * (1.0 + x);
            for (got, expect) in [(hv, he), (av, ae)] {
                let dev = (got - expect).abs() / (1.0 + expect.abs());
                worst = worst.max(dev);
                if dev > 1e-14 {
                    return Err(format!("measure value {got} vs {expect} at x = {x}"));
                }
            }
        }
        Ok(format!("64-point grid, max relative deviation {worst:.3e}"))
    })
}

/// Criterion 5: the direct order test, compression-norm domination, and
/// compression-lambda inclusion give identical verdicts on ordered and
/// unordered pairs.
fn c5_order_criteria(master: u64) -> CriterionResult {
    criterion(5, "order criteria agree across projection tests", || {
        let trials = 200;
        for i in 0..trials {
            let n = 2 + (i % 7);
            let kind = if i % 2 == 0 { PairKind::Ordered } else { PairKind::Unordered };
            let pair = lib(generate_pair(n, seed_for(master, 5, i as u64), kind))?;
            let d = pair.b.as_sym() - pair.a.as_sym();
            let depth = -d.min_eigenvalue();
            let mut eps: Vec<f64> =
                if depth > 0.0 { vec![0.8 * depth, 0.4 * depth, 0.12 * depth] } else { vec![1.0] };
            let tol = norm_tolerance(pair.a.as_psd(), pair.b.as_psd());
            let mut report = None;
            for _ in 0..4 {
                match prop2_criteria(pair.a.as_psd(), pair.b.as_psd(), &eps, tol) {
                    Err(Error::BoundaryAmbiguity { .. }) => {
                        for e in &mut eps {
                            *e *= 1.0000037;
                        }
                    }
                    other => {
                        report = Some(other);
                        break;
                    }
                }
            }
            let r = lib(report.ok_or(Error::Precondition("threshold grid kept landing on eigenvalues".into())).and_then(|r| r))?;
            if r.loewner != r.norm_criterion || r.loewner != r.inclusion_criterion {
                return Err(format!(
                    "verdicts split at trial {i} ({}): order {}, norms {}, inclusion {}",
                    kind.name(),
                    r.loewner,
                    r.norm_criterion,
                    r.inclusion_criterion
                ));
            }
            if kind == PairKind::Unordered && r.rows.is_empty() {
                return Err(format!("no projection rows for unordered trial {i}"));
            }
        }
        Ok(format!("{trials} pairs, verdicts identical on all three tests"))
    })
}

/// Criterion 6: the compression norm limit reaches its target within
/// 1e-6 by scale 2^20 on seeded families.
fn c6_compression_limit(master: u64) -> CriterionResult {
    criterion(6, "compression norm limit", || {
        let trials = 50;
        let grid: Vec<f64> = (0..=20).map(|k| (2.0f64).powi(k)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..trials {
            let n = 2 + (i % 7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(master, 6, i as u64));
            let raw = lib(random_psd(n, &mut rng, 0))?;
            let x_scale = (0.3 + 0.3 * rng.gen_range(0.0..1.0)) / raw.operator_norm();
            let x = lib(PsdMatrix::try_from_sym(raw.as_sym().scale(x_scale)))?;
            let raw_r = lib(random_psd(n, &mut rng, 0))?;
            let r_scale = (0.02 + 0.03 * rng.gen_range(0.0..1.0)) / raw_r.operator_norm();
            let r = raw_r.as_sym().scale(r_scale);
            let rank = 1 + (i % (n - 1));
            let p = lib(random_projection(n, &mut rng, rank))?;
            let base = x.as_sym().clone();
            let family =
                move |s: f64| PsdMatrix::try_from_sym(&base + &r.scale(1.0 / s));
            let scan = lib(prop3_limit_scan(family, &x, &p, &grid))?;
            let dev = (scan.extrapolated - scan.target).abs();
            worst = worst.max(dev);
            if dev > 1e-6 || !scan.converged {
                return Err(format!(
                    "scan {i} (n={n}, rank {rank}) ended {dev:.3e} from target, converged={}",
                    scan.converged
                ));
            }
        }
        Ok(format!("{trials} scans to 2^20, max final deviation {worst:.3e}"))
    })
}

/// Criterion 7: the closed norm formula agrees with direct evaluation to
/// 1e-8 for every catalog mean vanishing at zero; the formula must
/// refuse means with positive limit at zero, which excludes the
/// upper power mean from this identity.
fn c7_norm_formula(master: u64) -> CriterionResult {
    criterion(7, "norm formula for means vanishing at zero", || {
        let vanishing = [
            crate::means::ReprFn::geometric(),
            crate::means::ReprFn::harmonic(),
            lib(crate::means::ReprFn::power(-0.5))?,
        ];
        let excluded = lib(crate::means::ReprFn::power(0.5))?;
        let trials = 50;
        let mut worst: f64 = 0.0;
        for i in 0..trials {
            let n = 2 + (i % 7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(master, 7, i as u64));
            let a = lib(random_spd(n, &mut rng, 0.3))?;
            let rank = 1 + (i % (n - 1));
            let p = lib(random_projection(n, &mut rng, rank))?;
            for f in &vanishing {
                let closed = lib(prop4_norm(f, &a, &p))?;
                let direct =
                    lib(connection_eval(f, &a, &lib(p.as_psd())?))?.operator_norm();
                let dev = (closed - direct).abs();
                worst = worst.max(dev);
                if dev > 1e-8 {
                    return Err(format!(
                        "formula vs direct differ by {dev:.3e} for {} at trial {i}",
                        f.label()
                    ));
                }
            }
            match prop4_norm(&excluded, &a, &p) {
                Err(Error::Precondition(_)) => {}
                other => {
                    return Err(format!(
                        "positive-limit mean must be refused by the formula, got {other:?}"
                    ));
                }
            }
        }
        Ok(format!(
            "{trials} trials x 3 vanishing means agree, max {worst:.3e}; positive-limit mean correctly refused"
        ))
    })
}

/// Criterion 8: the shifted-projection limit reaches its predicted value
/// within 1e-5 for the arithmetic mean and two finite-integral mixtures.
fn c8_shifted_projection_limit(master: u64) -> CriterionResult {
    criterion(8, "shifted projection limit for means with mass at zero", || {
        let arith = Connection::arithmetic();
        let harm = Connection::harmonic();
        let means = [
            arith.clone(),
            lib(Connection::mix(0.5, &arith, &harm))?,
            lib(Connection::mix(0.25, &arith, &harm))?,
        ];
        let trials = 20;
        let grid: Vec<f64> = (0..=24).map(|k| (2.0f64).powi(k)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..trials {
            let n = 2 + (i % 7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(master, 8, i as u64));
            let raw = lib(random_spd(n, &mut rng, 0.2))?;
            let a = raw.scaled(1.0 / raw.operator_norm());
            let rank = 1 + (i % (n - 1));
            let p = lib(random_projection(n, &mut rng, rank))?;
            for conn in &means {
                let scan = lib(case2a_limit_scan(conn, &a, &p, 0.5, &grid))?;
                let dev = (scan.extrapolated - scan.target).abs();
                worst = worst.max(dev);
                if dev > 1e-5 || !scan.converged {
                    return Err(format!(
                        "scan {i} for {} ended {dev:.3e} from target, converged={}",
                        conn.label(),
                        scan.converged
                    ));
                }
            }
        }
        Ok(format!("{trials} instances x 3 means to 2^24, max final deviation {worst:.3e}"))
    })
}

/// The witness projection must select a downward-closed set of
/// eigendirections of `d`: its compression tops out strictly below where
/// the complementary compression starts.
fn is_downward_spectral(d: &SymMatrix, p: &OrthProjection) -> std::result::Result<bool, String> {
    let inside = lib(compress(d, p))?;
    let top = inside.eig().max_eigenvalue();
    let ident = SymMatrix::identity(p.n()).map_err(|e| e.to_string())?;
    let complement = lib(OrthProjection::try_from_sym(&ident - p.matrix()))?;
    if complement.rank() == 0 {
        return Ok(true);
    }
    let outside = lib(compress(d, &complement))?;
    Ok(top < outside.eig().min_eigenvalue())
}

/// Criterion 9: the headline round trip. Unordered pairs always yield a
/// verified witness for every catalog mean; ordered pairs never show a
/// norm violation over the sampled commuting family.
fn c9_round_trip(master: u64) -> CriterionResult {
    criterion(9, "norm order round trip with witnesses", || {
        let catalog = Connection::catalog_symmetric();
        let pair_trials = 100;
        let mut witnesses = 0usize;
        for i in 0..pair_trials {
            let n = 2 + (i % 7);
            let kind =
                if i % 2 == 0 { PairKind::Unordered } else { PairKind::CongruentDiagonal };
            let pair = lib(generate_pair(n, seed_for(master, 90, i as u64), kind))?;
            let d = pair.b.as_sym() - pair.a.as_sym();
            for (j, conn) in catalog.iter().enumerate() {
                let v = order_determination_check(
                    conn,
                    &pair.a,
                    &pair.b,
                    50,
                    seed_for(master, 91, (i * catalog.len() + j) as u64),
                )
                .map_err(|e| format!("unordered trial {i}, {}: {e}", conn.label()))?;
                if v.loewner || v.norm_dominated {
                    return Err(format!(
                        "unordered trial {i} misclassified by {}",
                        conn.label()
                    ));
                }
                let w = v.witness.ok_or_else(|| {
                    format!("no witness at unordered trial {i} for {}", conn.label())
                })?;
                if !(w.margin() > w.threshold) {
                    return Err(format!(
                        "witness margin {:.3e} at or below bar {:.3e} (trial {i}, {})",
                        w.margin(),
                        w.threshold,
                        conn.label()
                    ));
                }
                if !is_downward_spectral(&d, &w.projection)? {
                    return Err(format!(
                        "witness projection not spectral at trial {i} for {}",
                        conn.label()
                    ));
                }
                witnesses += 1;
            }
        }
        for i in 0..pair_trials {
            let n = 2 + (i % 7);
            let pair =
                lib(generate_pair(n, seed_for(master, 92, i as u64), PairKind::Ordered))?;
            for (j, conn) in catalog.iter().enumerate() {
                let v = order_determination_check(
                    conn,
                    &pair.a,
                    &pair.b,
                    1000,
                    seed_for(master, 93, (i * catalog.len() + j) as u64),
                )
                .map_err(|e| format!("ordered trial {i}, {}: {e}", conn.label()))?;
                if !(v.loewner && v.norm_dominated && v.witness.is_none()) {
                    return Err(format!(
                        "ordered trial {i} misclassified by {}",
                        conn.label()
                    ));
                }
            }
        }
        Ok(format!(
            "{witnesses} witnesses found and verified; {} ordered checks with zero norm violations",
            pair_trials * catalog.len()
        ))
    })
}

fn report_hash(master_seed: u64, criteria: &[CriterionResult]) -> String {
    #[derive(Serialize)]
    struct HashInput<'a> {
        master_seed: u64,
        criteria: &'a [CriterionResult],
    }
    let text = crate::io::canonical_json(&HashInput { master_seed, criteria })
        .expect("criterion results serialize");
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn pipeline(master_seed: u64) -> Vec<CriterionResult> {
    vec![
        c1_axioms(master_seed),
        c2_identity(master_seed),
        c3_dual_path(master_seed),
        c4_measure_identities(),
        c5_order_criteria(master_seed),
        c6_compression_limit(master_seed),
        c7_norm_formula(master_seed),
        c8_shifted_projection_limit(master_seed),
        c9_round_trip(master_seed),
    ]
}

/// Run the full acceptance suite. The pipeline executes twice; matching
/// digests across the two passes are themselves the final criterion.
pub fn run(master_seed: u64) -> SelftestReport {
    let first = pipeline(master_seed);
    let hash_first = report_hash(master_seed, &first);
    let second = pipeline(master_seed);
    let hash_second = report_hash(master_seed, &second);
    let replay = CriterionResult {
        id: 10,
        name: "deterministic replay".into(),
        passed: hash_first == hash_second,
        detail: format!("digest {}… vs {}…", &hash_first[..16], &hash_second[..16]),
    };
    let mut criteria = first;
    criteria.push(replay);
    let all_passed = criteria.iter().all(|c| c.passed);
    SelftestReport { master_seed, criteria, hash: hash_first, all_passed }
}
