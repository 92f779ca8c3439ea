//! Exchange formats: matrix and measure JSON, verdict and witness
//! records, and CSV emission for limit scans. All serialization routes
//! through `canonical_json`, which sorts keys and appends a trailing
//! newline so identical values always produce identical bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::measure::BorelMeasure;
use crate::order::{LimitScan, OrderVerdict, WitnessReport};

/// Dense symmetric matrix: dimension plus row-major entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl MatrixJson {
    pub fn from_sym(m: &SymMatrix) -> Self {
        MatrixJson { n: m.n(), entries: m.to_row_major() }
    }

    pub fn to_sym(&self) -> Result<SymMatrix> {
        if self.entries.len() != self.n * self.n {
            return Err(Error::InvalidInput(format!(
                "matrix of dimension {} needs {} entries, got {}",
                self.n,
                self.n * self.n,
                self.entries.len()
            )));
        }
        SymMatrix::from_rows(self.n, &self.entries)
    }
}

/// Measure exchange record: atoms at the endpoints plus interior nodes
/// as (t, weight) pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureJson {
    pub atom0: f64,
    #[serde(rename = "atomInf")]
    pub atom_inf: f64,
    pub nodes: Vec<[f64; 2]>,
    pub quadrature: bool,
}

impl MeasureJson {
    pub fn from_measure(m: &BorelMeasure) -> Self {
        MeasureJson {
            atom0: m.atom0(),
            atom_inf: m.atom_inf(),
            nodes: m.nodes().iter().map(|&(t, w)| [t, w]).collect(),
            quadrature: m.quadrature(),
        }
    }

    pub fn to_measure(&self) -> Result<BorelMeasure> {
        let nodes: Vec<(f64, f64)> = self.nodes.iter().map(|[t, w]| (*t, *w)).collect();
        BorelMeasure::new(self.atom0, self.atom_inf, nodes, self.quadrature)
    }
}

/// Serialized witness: the separating element is `s·(P + delta·I)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessJson {
    pub eps: f64,
    pub delta: f64,
    pub s: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub margin: f64,
    pub threshold: f64,
    pub projection_rank: usize,
    pub projection: MatrixJson,
}

impl WitnessJson {
    pub fn from_report(w: &WitnessReport) -> Self {
        WitnessJson {
            eps: w.eps,
            delta: w.delta,
            s: w.s,
            norm_a: w.norm_a,
            norm_b: w.norm_b,
            margin: w.margin(),
            threshold: w.threshold,
            projection_rank: w.projection.rank(),
            projection: MatrixJson::from_sym(w.projection.matrix()),
        }
    }
}

/// Serialized order verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictJson {
    pub mean: String,
    pub loewner: bool,
    pub norm_dominated: bool,
    pub samples_used: usize,
    pub witness: Option<WitnessJson>,
}

impl VerdictJson {
    /// Convert a verdict, re-validating its structural invariants: a
    /// witness forces `norm_dominated = false`, and a held order forbids
    /// a witness.
    pub fn from_verdict(v: &OrderVerdict) -> Result<Self> {
        if v.witness.is_some() && v.norm_dominated {
            return Err(Error::TheoremViolation {
                context: format!("verdict for {} has a witness yet claims domination", v.mean_label),
            });
        }
        if v.loewner && v.witness.is_some() {
            return Err(Error::TheoremViolation {
                context: format!("verdict for {} has a witness although the order holds", v.mean_label),
            });
        }
        Ok(VerdictJson {
            mean: v.mean_label.clone(),
            loewner: v.loewner,
            norm_dominated: v.norm_dominated,
            samples_used: v.samples_used,
            witness: v.witness.as_ref().map(WitnessJson::from_report),
        })
    }
}

/// One trial of a batch run. Timing is deliberately absent: emitted
/// artifacts must be byte-identical across repeated runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecordJson {
    pub trial: u64,
    pub seed: u64,
    pub kind: String,
    #[serde(flatten)]
    pub verdict: VerdictJson,
}

/// Serialize any value to canonical JSON: keys sorted, floats in
/// shortest round-trip form, trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string(&v)?;
    s.push('\n');
    Ok(s)
}

/// CSV for a limit scan: fixed column order `s,value,target`, one row
/// per scanned scale.
pub fn scan_to_csv(scan: &LimitScan) -> String {
    let mut out = String::from("s,value,target\n");
    for (s, v) in scan.s_values.iter().zip(&scan.values) {
        out.push_str(&format!("{},{},{}\n", s, v, scan.target));
    }
    out
}

pub fn read_matrix_file(path: &str) -> Result<SymMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mj: MatrixJson = serde_json::from_str(&text)?;
    mj.to_sym()
}

pub fn read_measure_file(path: &str) -> Result<BorelMeasure> {
    let text = std::fs::read_to_string(path)?;
    let mj: MeasureJson = serde_json::from_str(&text)?;
    mj.to_measure()
}
