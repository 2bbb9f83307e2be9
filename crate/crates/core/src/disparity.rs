//! Per-direction disparity testing and multiple-comparison correction.
//!
//! Every edge is tested twice, once from each endpoint. The test asks whether
//! the edge's share of its source node's strength is too large under a null
//! that splits the node's strength uniformly at random (flat Dirichlet,
//! equivalently k-1 uniform break points) over its k edges. Directions that
//! survive the chosen correction become [`ValidatedArc`]s pointing away from
//! the validating node.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{EntityId, Snapshot};

/// Multiple-comparison regime applied to the per-direction p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionKind {
    /// Keep p < theta with no correction.
    None,
    /// Keep p < theta / N_t.
    Bonferroni,
    /// Benjamini-Hochberg: sort p ascending, keep the first t_max tests where
    /// t_max is the largest rank with p_t < t * theta / N_t.
    Fdr,
}

impl CorrectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrectionKind::None => "none",
            CorrectionKind::Bonferroni => "bonferroni",
            CorrectionKind::Fdr => "fdr",
        }
    }
}

/// A fully resolved correction: kind, nominal threshold, and the number of
/// tests the correction divides by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionPolicy {
    pub kind: CorrectionKind,
    pub theta: f64,
    pub test_count: usize,
}

impl CorrectionPolicy {
    pub fn new(kind: CorrectionKind, theta: f64, test_count: usize) -> Result<CorrectionPolicy> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Config(format!(
                "theta must lie in (0, 1), got {theta}"
            )));
        }
        if test_count == 0 {
            return Err(Error::Config("test_count must be at least 1".into()));
        }
        Ok(CorrectionPolicy {
            kind,
            theta,
            test_count,
        })
    }

    /// The per-test Bonferroni threshold theta / N_t.
    pub fn bonferroni_threshold(&self) -> f64 {
        self.theta / self.test_count as f64
    }
}

/// Handling of degree-1 sources, whose direction carries no evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KOnePolicy {
    /// Keep the test in the list with p = 1 (it can never be validated).
    #[default]
    POne,
    /// Drop the test from the list entirely.
    Skip,
}

/// What counts toward N_t in the correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NtAccounting {
    /// Only directions actually tested (source degree >= 2).
    #[default]
    Performed,
    /// Two directions per edge regardless of degree.
    AllDirections,
}

/// Everything needed to turn a snapshot into a validated network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    pub kind: CorrectionKind,
    pub theta: f64,
    pub k_one: KOnePolicy,
    pub nt: NtAccounting,
}

impl Default for FilterOptions {
    fn default() -> FilterOptions {
        FilterOptions {
            kind: CorrectionKind::Fdr,
            theta: 0.01,
            k_one: KOnePolicy::POne,
            nt: NtAccounting::Performed,
        }
    }
}

impl FilterOptions {
    pub fn with_kind(kind: CorrectionKind) -> FilterOptions {
        FilterOptions {
            kind,
            ..FilterOptions::default()
        }
    }
}

/// One directional test: `source` validates its edge to `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedTest {
    pub source: EntityId,
    pub target: EntityId,
    /// Normalized weight w / s(source).
    pub x: f64,
    /// Degree of the source.
    pub k: u32,
    pub p: f64,
    /// Underlying edge weight, carried through to the arc.
    pub weight: f64,
}

/// A direction that survived the correction, pointing away from the
/// validating node.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedArc {
    pub from: EntityId,
    pub to: EntityId,
    pub p: f64,
    pub weight: f64,
}

impl ValidatedArc {
    /// The underlying undirected edge as a (bank, firm) code pair.
    pub fn edge_key(&self) -> (&str, &str) {
        match self.from.side {
            crate::model::Side::Bank => (&self.from.code, &self.to.code),
            crate::model::Side::Firm => (&self.to.code, &self.from.code),
        }
    }
}

/// Probability of seeing a normalized weight of at least `x` on one of `k`
/// edges under uniform splitting: (1 - x)^(k - 1), computed in log space.
/// Degree-1 sources return 1: a single counterpart carries no evidence.
pub fn disparity_pvalue(x: f64, k: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "normalized weight must lie in [0, 1], got {x}"
        )));
    }
    if k < 1 {
        return Err(Error::Domain("degree must be at least 1".into()));
    }
    if k == 1 {
        return Ok(1.0);
    }
    // exp((k-1) * ln(1-x)) is stable for large k and small x; x = 1 yields 0.
    Ok(((k - 1) as f64 * (-x).ln_1p()).exp())
}

/// All 2 x |edges| directional tests of a snapshot, in edge order with the
/// bank direction first. Degree-1 directions are present with p = 1.
pub fn enumerate_tests(snapshot: &Snapshot) -> Vec<DirectedTest> {
    let mut tests = Vec::with_capacity(snapshot.edge_count() * 2);
    for edge in snapshot.edges() {
        for (source, target) in [(&edge.bank, &edge.firm), (&edge.firm, &edge.bank)] {
            let s = snapshot
                .node_strength(source)
                .expect("edge endpoint present in snapshot");
            let k = snapshot
                .degree(source)
                .expect("edge endpoint present in snapshot");
            let x = (edge.weight / s).min(1.0);
            let p = disparity_pvalue(x, k).expect("normalized weight within [0, 1]");
            tests.push(DirectedTest {
                source: source.clone(),
                target: target.clone(),
                x,
                k,
                p,
                weight: edge.weight,
            });
        }
    }
    tests
}

/// Apply the policy to a list of tests and return the surviving directions
/// as arcs, sorted by (from, to).
///
/// Ordering under FDR is the stable sort by (p, source code, target code),
/// so threshold ties resolve reproducibly.
pub fn apply_correction(tests: &[DirectedTest], policy: &CorrectionPolicy) -> Vec<ValidatedArc> {
    if tests.is_empty() {
        return Vec::new();
    }
    let to_arc = |t: &DirectedTest| ValidatedArc {
        from: t.source.clone(),
        to: t.target.clone(),
        p: t.p,
        weight: t.weight,
    };
    let mut kept: Vec<ValidatedArc> = match policy.kind {
        CorrectionKind::None => tests
            .iter()
            .filter(|t| t.p < policy.theta)
            .map(to_arc)
            .collect(),
        CorrectionKind::Bonferroni => {
            let threshold = policy.bonferroni_threshold();
            tests
                .iter()
                .filter(|t| t.p < threshold)
                .map(to_arc)
                .collect()
        }
        CorrectionKind::Fdr => {
            let mut sorted: Vec<&DirectedTest> = tests.iter().collect();
            sorted.sort_by(|a, b| {
                a.p.total_cmp(&b.p)
                    .then_with(|| a.source.cmp(&b.source))
                    .then_with(|| a.target.cmp(&b.target))
            });
            let theta_b = policy.bonferroni_threshold();
            let mut t_max = 0;
            for (i, t) in sorted.iter().enumerate() {
                if t.p < (i + 1) as f64 * theta_b {
                    t_max = i + 1;
                }
            }
            sorted[..t_max].iter().map(|t| to_arc(t)).collect()
        }
    };
    kept.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    kept
}

/// Test every direction of a snapshot and keep those surviving the
/// correction.
pub fn validated_network(snapshot: &Snapshot, options: &FilterOptions) -> Vec<ValidatedArc> {
    let mut tests = enumerate_tests(snapshot);
    if options.k_one == KOnePolicy::Skip {
        tests.retain(|t| t.k >= 2);
    }
    let test_count = match options.nt {
        NtAccounting::Performed => tests.iter().filter(|t| t.k >= 2).count(),
        NtAccounting::AllDirections => snapshot.edge_count() * 2,
    };
    if test_count == 0 {
        return Vec::new();
    }
    let policy = CorrectionPolicy::new(options.kind, options.theta, test_count)
        .expect("validated options");
    apply_correction(&tests, &policy)
}

/// Node set touched by at least one arc.
pub fn arc_nodes(arcs: &[ValidatedArc]) -> BTreeSet<EntityId> {
    arcs.iter()
        .flat_map(|a| [a.from.clone(), a.to.clone()])
        .collect()
}
