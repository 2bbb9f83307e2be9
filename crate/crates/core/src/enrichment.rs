//! Attribute over-expression testing.
//!
//! For a chosen subnetwork (for example the validated network's node set),
//! each attribute value is tested with a one-sided hypergeometric tail: does
//! the value appear in the subnetwork more often than drawing the subnetwork
//! uniformly from the full node set would explain? Decisions are Bonferroni
//! corrected within one (year, side, class) family.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{AttributeClass, EntityId, Side, Snapshot};

/// One attribute value's urn test.
///
/// `population` (N) counts the side's labeled nodes in the full network,
/// `population_with` (N_A) those carrying the value, `subset` (n) the labeled
/// nodes of the subnetwork, and `observed` (k_obs) the subnetwork nodes
/// carrying the value.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichmentTest {
    pub class: AttributeClass,
    pub value: String,
    pub population: usize,
    pub population_with: usize,
    pub subset: usize,
    pub observed: usize,
    pub p: f64,
}

/// All value tests of one (year, side, class) family plus the family's
/// Bonferroni threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeReport {
    pub year: i32,
    pub side: Side,
    pub class: AttributeClass,
    pub bonferroni_threshold: f64,
    pub tests: Vec<(EnrichmentTest, bool)>,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Upper tail P(X >= k_obs) of the hypergeometric distribution with
/// `population` balls, `population_with` of them marked, and `subset` draws.
/// Terms are summed in log-gamma arithmetic, smallest first.
pub fn hypergeometric_tail(
    population: usize,
    population_with: usize,
    subset: usize,
    observed: usize,
) -> Result<f64> {
    if population_with > population || subset > population {
        return Err(Error::Domain(format!(
            "hypergeometric bounds violated: N={population}, N_A={population_with}, n={subset}"
        )));
    }
    if observed > subset.min(population_with) {
        return Err(Error::Domain(format!(
            "observed count {observed} exceeds min(n={subset}, N_A={population_with})"
        )));
    }
    if observed == 0 {
        return Ok(1.0);
    }
    let ln_denom = ln_choose(population, subset);
    let hi = subset.min(population_with);
    // X >= k requires n - k <= N - N_A
    let mut tail = 0.0;
    for k in (observed..=hi).rev() {
        if subset - k > population - population_with {
            continue;
        }
        let ln_term =
            ln_choose(population_with, k) + ln_choose(population - population_with, subset - k)
                - ln_denom;
        tail += ln_term.exp();
    }
    Ok(tail.min(1.0))
}

/// Test every attribute value of `class` carried by `side` nodes of the
/// snapshot against the subnetwork `subnet`.
///
/// Entities without a value for `class` are outside the urn: they count
/// neither toward the population nor toward the subset. `subnet` may contain
/// ids of both sides; only those matching `side` are considered, and each of
/// them must be present in the snapshot.
pub fn overexpression_report(
    snapshot: &Snapshot,
    subnet: &BTreeSet<EntityId>,
    side: Side,
    class: AttributeClass,
    theta: f64,
) -> Result<AttributeReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Config(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    let attrs = snapshot.attributes();
    let mut population = 0usize;
    let mut population_with: BTreeMap<&str, usize> = BTreeMap::new();
    for node in snapshot.nodes(side) {
        if let Some(value) = attrs.value(node, class) {
            population += 1;
            *population_with.entry(value).or_insert(0) += 1;
        }
    }

    let mut subset = 0usize;
    let mut observed: BTreeMap<&str, usize> = BTreeMap::new();
    for node in subnet {
        if node.side != side {
            continue;
        }
        if !snapshot.contains(node) {
            return Err(Error::NodeNotFound(node.to_string()));
        }
        if let Some(value) = attrs.value(node, class) {
            subset += 1;
            *observed.entry(value).or_insert(0) += 1;
        }
    }

    let n_tests = population_with.len();
    let bonferroni_threshold = theta / n_tests.max(1) as f64;
    let mut tests = Vec::with_capacity(n_tests);
    for (value, &n_a) in &population_with {
        let k_obs = observed.get(value).copied().unwrap_or(0);
        let p = hypergeometric_tail(population, n_a, subset, k_obs)?;
        let test = EnrichmentTest {
            class,
            value: (*value).to_owned(),
            population,
            population_with: n_a,
            subset,
            observed: k_obs,
            p,
        };
        tests.push((test, p < bonferroni_threshold));
    }
    Ok(AttributeReport {
        year: snapshot.year(),
        side,
        class,
        bonferroni_threshold,
        tests,
    })
}
