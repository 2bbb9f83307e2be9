//! Year-over-year comparison of chosen subgraphs: weighted Jaccard
//! similarity and lifetimes of bidirectional links.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::analytics::{bidirectional_pairs, validated_by_year, validated_edges};
use crate::disparity::{FilterOptions, ValidatedArc};
use crate::error::{Error, Result};
use crate::ingest::Panel;

/// Which subgraph of the validated network a comparison runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubgraphSelector {
    /// Edges validated in at least one direction.
    #[default]
    Fn,
    /// Edges validated in both directions.
    Bidirectional,
}

/// Edge weights used by the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JaccardWeighting {
    /// Underlying credit amounts.
    #[default]
    Amount,
    /// Every selected edge weighs 1.
    Binary,
}

/// A weighted edge set keyed by (bank code, firm code).
pub type WeightedEdgeSet = BTreeMap<(String, String), f64>;

/// Sum of min weights over sum of max weights across the union of keys.
/// Two empty sets compare as identical (1); an empty set against a non-empty
/// one yields 0.
pub fn weighted_jaccard(a: &WeightedEdgeSet, b: &WeightedEdgeSet) -> Result<f64> {
    for w in a.values().chain(b.values()) {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::Domain(format!(
                "edge weights must be nonnegative and finite, got {w}"
            )));
        }
    }
    let mut min_sum = 0.0;
    let mut max_sum = 0.0;
    let keys: BTreeSet<&(String, String)> = a.keys().chain(b.keys()).collect();
    for key in keys {
        let wa = a.get(key).copied().unwrap_or(0.0);
        let wb = b.get(key).copied().unwrap_or(0.0);
        min_sum += wa.min(wb);
        max_sum += wa.max(wb);
    }
    if max_sum == 0.0 {
        Ok(1.0)
    } else {
        Ok(min_sum / max_sum)
    }
}

/// Symmetric year-by-year similarity with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct JaccardMatrix {
    pub years: Vec<i32>,
    pub values: Vec<Vec<f64>>,
}

impl JaccardMatrix {
    pub fn get(&self, a: i32, b: i32) -> Option<f64> {
        let i = self.years.iter().position(|&y| y == a)?;
        let j = self.years.iter().position(|&y| y == b)?;
        Some(self.values[i][j])
    }
}

/// The selected weighted edge set of one year's arcs.
pub fn selected_edge_set(
    arcs: &[ValidatedArc],
    selector: SubgraphSelector,
    weighting: JaccardWeighting,
) -> WeightedEdgeSet {
    let keys: BTreeSet<(String, String)> = match selector {
        SubgraphSelector::Fn => validated_edges(arcs),
        SubgraphSelector::Bidirectional => bidirectional_pairs(arcs)
            .into_iter()
            .map(|(b, f)| (b.code, f.code))
            .collect(),
    };
    let mut weights: BTreeMap<(String, String), f64> = BTreeMap::new();
    for arc in arcs {
        let (b, f) = arc.edge_key();
        let key = (b.to_owned(), f.to_owned());
        if keys.contains(&key) {
            weights.insert(
                key,
                match weighting {
                    JaccardWeighting::Amount => arc.weight,
                    JaccardWeighting::Binary => 1.0,
                },
            );
        }
    }
    weights
}

/// Pairwise similarity of the selected subgraphs from precomputed arcs.
pub fn jaccard_matrix_from(
    years: &[i32],
    arcs_by_year: &BTreeMap<i32, Vec<ValidatedArc>>,
    selector: SubgraphSelector,
    weighting: JaccardWeighting,
) -> Result<JaccardMatrix> {
    let sets: Vec<WeightedEdgeSet> = years
        .iter()
        .map(|year| {
            arcs_by_year
                .get(year)
                .map(|arcs| selected_edge_set(arcs, selector, weighting))
                .unwrap_or_default()
        })
        .collect();
    let n = years.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = weighted_jaccard(&sets[i], &sets[j])?;
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(JaccardMatrix {
        years: years.to_vec(),
        values,
    })
}

/// Pairwise similarity over all years of the panel.
pub fn jaccard_matrix(
    panel: &Panel,
    options: &FilterOptions,
    selector: SubgraphSelector,
    weighting: JaccardWeighting,
) -> Result<JaccardMatrix> {
    let years: Vec<i32> = panel.years().collect();
    let arcs_by_year = validated_by_year(panel, options);
    jaccard_matrix_from(&years, &arcs_by_year, selector, weighting)
}

/// Presence history of a bank-firm pair across the panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkLifetime {
    pub bank: String,
    pub firm: String,
    pub years_present: BTreeSet<i32>,
    /// Longest run of consecutive calendar years.
    pub max_run: u32,
}

fn max_consecutive_run(years: &BTreeSet<i32>) -> u32 {
    let mut best = 0u32;
    let mut run = 0u32;
    let mut prev: Option<i32> = None;
    for &y in years {
        run = match prev {
            Some(p) if y == p + 1 => run + 1,
            _ => 1,
        };
        best = best.max(run);
        prev = Some(y);
    }
    best
}

/// Lifetimes of every pair that is bidirectionally validated in at least one
/// year, from precomputed arcs.
pub fn link_lifetimes_from(
    arcs_by_year: &BTreeMap<i32, Vec<ValidatedArc>>,
) -> Vec<LinkLifetime> {
    let mut presence: BTreeMap<(String, String), BTreeSet<i32>> = BTreeMap::new();
    for (&year, arcs) in arcs_by_year {
        for (bank, firm) in bidirectional_pairs(arcs) {
            presence
                .entry((bank.code, firm.code))
                .or_default()
                .insert(year);
        }
    }
    presence
        .into_iter()
        .map(|((bank, firm), years_present)| LinkLifetime {
            bank,
            firm,
            max_run: max_consecutive_run(&years_present),
            years_present,
        })
        .collect()
}

pub fn link_lifetimes(panel: &Panel, options: &FilterOptions) -> Vec<LinkLifetime> {
    link_lifetimes_from(&validated_by_year(panel, options))
}
