//! Laplace mechanism, seeded noise and privacy-budget accounting.
//!
//! A [`BudgetLedger`] is tied to one released artifact and is never reset.
//! Charges made one after another add up (sequential composition); a group
//! of charges over disjoint subsets of the data costs the largest member
//! (parallel composition). A charge that would push the spent budget past
//! the total is refused and nothing is released.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::cube::{CellVector, PartitionBox};
use crate::error::{Error, Result};

/// Sensitivity of a counting query: one record changes the answer by at most 1.
pub const COUNT_SENSITIVITY: f64 = 1.0;

// Rounding slack when comparing accumulated spend against the total.
const BUDGET_SLACK: f64 = 1e-12;

/// The privacy parameter `alpha` (epsilon) of alpha-differential privacy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PrivacyParam(f64);

impl PrivacyParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Laplace scale `sensitivity / alpha`.
    pub fn scale(self, sensitivity: f64) -> f64 {
        sensitivity / self.0
    }
}

impl TryFrom<f64> for PrivacyParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PrivacyParam> for f64 {
    fn from(p: PrivacyParam) -> f64 {
        p.0
    }
}

/// Deterministic noise stream. The same seed and call sequence always
/// yields the same samples.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    rng: ChaCha20Rng,
    position: u64,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
            position: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of uniforms drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            self.position += 1;
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.position += 1;
        self.rng.random_range(0..n)
    }

    /// One Lap(b) sample by inversion: `-b sgn(u-1/2) ln(1 - 2|u-1/2|)`.
    pub fn laplace(&mut self, b: f64) -> Result<f64> {
        laplace_sample(b, self)
    }
}

/// Draws one sample of Lap(b), mean 0 and scale `b`.
pub fn laplace_sample(b: f64, src: &mut NoiseSource) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Laplace scale must be positive, got {b}"
        )));
    }
    let d = src.uniform() - 0.5;
    Ok(-b * d.signum() * (1.0 - 2.0 * d.abs()).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    Sequential,
    Parallel,
}

/// One line of the ledger log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub alpha: f64,
    pub kind: Composition,
}

#[derive(Debug, Clone)]
pub struct BudgetLedger {
    total: PrivacyParam,
    spent: f64,
    log: Vec<LedgerEntry>,
}

impl BudgetLedger {
    pub fn new(total: PrivacyParam) -> Self {
        Self {
            total,
            spent: 0.0,
            log: Vec::new(),
        }
    }

    pub fn total(&self) -> PrivacyParam {
        self.total
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        (self.total.0 - self.spent).max(0.0)
    }

    pub fn log(&self) -> &[LedgerEntry] {
        &self.log
    }

    pub fn can_afford(&self, alpha: f64) -> bool {
        self.spent + alpha <= self.total.0 * (1.0 + BUDGET_SLACK)
    }

    fn record(&mut self, label: &str, alpha: f64, kind: Composition) -> Result<()> {
        if !self.can_afford(alpha) {
            return Err(Error::BudgetExhausted {
                requested: alpha,
                remaining: self.remaining(),
            });
        }
        self.spent += alpha;
        self.log.push(LedgerEntry {
            label: label.to_string(),
            alpha,
            kind,
        });
        Ok(())
    }

    /// Charges one analysis sequentially.
    pub fn charge(&mut self, label: &str, alpha: PrivacyParam) -> Result<()> {
        self.record(label, alpha.0, Composition::Sequential)
    }

    /// Charges a group of analyses over disjoint data subsets; the group costs
    /// the largest member.
    pub fn charge_parallel(&mut self, label: &str, alphas: &[PrivacyParam]) -> Result<()> {
        let max = alphas
            .iter()
            .map(|a| a.0)
            .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |m| m.max(a))))
            .ok_or_else(|| Error::InvalidParameter("empty parallel group".into()))?;
        self.record(label, max, Composition::Parallel)
    }

    /// The log as JSON lines `{label, alpha, kind}`.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Laplace mechanism for a query of the given sensitivity.
pub fn laplace_mechanism(
    value: f64,
    sensitivity: f64,
    alpha: PrivacyParam,
    label: &str,
    ledger: &mut BudgetLedger,
    src: &mut NoiseSource,
) -> Result<f64> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    ledger.charge(label, alpha)?;
    Ok(value + laplace_sample(alpha.scale(sensitivity), src)?)
}

/// `true_count + Lap(1/alpha)`, charged sequentially.
pub fn noisy_count(
    true_count: f64,
    alpha: PrivacyParam,
    ledger: &mut BudgetLedger,
    src: &mut NoiseSource,
) -> Result<f64> {
    laplace_mechanism(true_count, COUNT_SENSITIVITY, alpha, "noisy_count", ledger, src)
}

/// Checks that `boxes` are pairwise disjoint and cover every cell.
pub fn check_partition(schema: &crate::cube::CubeSchema, boxes: &[PartitionBox]) -> Result<()> {
    let mut owner: Vec<Option<usize>> = vec![None; schema.m()];
    let mut covered = 0;
    for (k, b) in boxes.iter().enumerate() {
        b.validate(schema)?;
        for i in b.cells(schema) {
            if let Some(j) = owner[i] {
                return Err(Error::OverlappingBoxes(j, k));
            }
            owner[i] = Some(k);
            covered += 1;
        }
    }
    if covered != schema.m() {
        return Err(Error::NotCovering {
            covered,
            total: schema.m(),
        });
    }
    Ok(())
}

/// One noisy count per box of a disjoint covering partition. The whole group
/// costs `alpha` once.
pub fn partitioned_noisy_counts(
    x: &CellVector,
    boxes: &[PartitionBox],
    alpha: PrivacyParam,
    label: &str,
    ledger: &mut BudgetLedger,
    src: &mut NoiseSource,
) -> Result<Vec<f64>> {
    check_partition(x.schema(), boxes)?;
    ledger.charge_parallel(label, &vec![alpha; boxes.len()])?;
    let b = alpha.scale(COUNT_SENSITIVITY);
    boxes
        .iter()
        .map(|p| Ok(x.box_sum(p) + laplace_sample(b, src)?))
        .collect()
}
