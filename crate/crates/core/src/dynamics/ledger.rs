//! Entry-by-entry comparison of the closed-form model against the oracle.

use super::{coriolis_vector, gravity_vector, inertia_matrix, oracle};
use crate::params::RobotParams;
use crate::sampling::{random_state, rng};

/// Relative difference above which an entry is itemised as disagreeing.
pub const DISAGREEMENT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    /// `M21`, `H4`, `G5`, ...
    pub symbol: String,
    pub max_abs_diff: f64,
    /// `|printed − oracle| / max(|printed|, |oracle|)`, maximised over samples
    pub max_rel_diff: f64,
}

impl LedgerEntry {
    pub fn disagrees(&self) -> bool {
        self.max_rel_diff > DISAGREEMENT_THRESHOLD
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyLedger {
    pub samples: usize,
    pub seed: u64,
    pub entries: Vec<LedgerEntry>,
}

impl DiscrepancyLedger {
    pub fn disagreeing(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(|e| e.disagrees())
    }
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares lower-triangle `M`, `H` and `G` over `samples` random states.
pub fn discrepancy_ledger(params: &RobotParams, samples: usize, seed: u64) -> DiscrepancyLedger {
    let mut symbols = Vec::new();
    for i in 0..5 {
        for j in 0..=i {
            symbols.push(format!("M{}{}", i + 1, j + 1));
        }
    }
    symbols.extend((1..=5).map(|i| format!("H{i}")));
    symbols.extend((1..=5).map(|i| format!("G{i}")));
    let mut abs = vec![0.0f64; symbols.len()];
    let mut rel = vec![0.0f64; symbols.len()];

    let mut r = rng(seed);
    for _ in 0..samples {
        let s = random_state(&mut r);
        let mp = inertia_matrix(&s.theta, params);
        let mo = oracle::oracle_inertia_fd(&s.theta, params);
        let mut pairs = Vec::with_capacity(symbols.len());
        for i in 0..5 {
            for j in 0..=i {
                pairs.push((mp[(i, j)], mo[(i, j)]));
            }
        }
        let (hp, ho) = (
            coriolis_vector(&s, params),
            oracle::oracle_coriolis(&s, params),
        );
        pairs.extend(hp.iter().copied().zip(ho.iter().copied()));
        let (gp, go) = (
            gravity_vector(&s.theta, params),
            oracle::oracle_gravity(&s.theta, params),
        );
        pairs.extend(gp.iter().copied().zip(go.iter().copied()));
        for (k, (a, b)) in pairs.into_iter().enumerate() {
            abs[k] = abs[k].max((a - b).abs());
            rel[k] = rel[k].max(relative(a, b));
        }
    }

    let entries = symbols
        .into_iter()
        .zip(abs.into_iter().zip(rel))
        .map(|(symbol, (max_abs_diff, max_rel_diff))| LedgerEntry {
            symbol,
            max_abs_diff,
            max_rel_diff,
        })
        .collect();
    DiscrepancyLedger {
        samples,
        seed,
        entries,
    }
}
