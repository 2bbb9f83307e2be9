//! Descriptive statistics of validated networks: connected components,
//! bidirectional pairs, credit ratios, degree time series, and per-year
//! summary rows.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::disparity::{validated_network, FilterOptions, ValidatedArc};
use crate::error::{Error, Result};
use crate::ingest::{ChainSegment, Panel};
use crate::model::{EntityId, Side, Snapshot};

/// Per-year summary of the original network (ON) and its filtered
/// counterpart (FN).
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneSummary {
    pub year: i32,
    pub banks_on: usize,
    pub firms_on: usize,
    pub edges_on: usize,
    pub banks_fn: usize,
    pub firms_fn: usize,
    /// Node count of the largest weakly connected component of the FN.
    pub lcc_fn: usize,
    /// Distinct underlying edges validated in at least one direction.
    pub edges_fn: usize,
    /// Distinct bank-firm pairs validated in both directions.
    pub pairs_bl: usize,
    pub credit_ratio: f64,
    pub density_on: f64,
}

/// How the credit ratio counts a bidirectionally validated edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CreditRatioAccounting {
    /// Each underlying edge counts once however many directions validated it.
    #[default]
    PerEdge,
    /// Each validated direction counts, against twice the total credit.
    PerDirection,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Node set of the largest weakly connected component; arc direction is
/// ignored. Ties go to the component whose sorted node codes compare
/// smallest, so the result is deterministic.
pub fn largest_connected_component(arcs: &[ValidatedArc]) -> BTreeSet<EntityId> {
    let nodes: Vec<EntityId> = crate::disparity::arc_nodes(arcs).into_iter().collect();
    if nodes.is_empty() {
        return BTreeSet::new();
    }
    let index: BTreeMap<&EntityId, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut uf = UnionFind::new(nodes.len());
    for arc in arcs {
        uf.union(index[&arc.from], index[&arc.to]);
    }
    let mut components: BTreeMap<usize, BTreeSet<EntityId>> = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        components
            .entry(uf.find(i))
            .or_default()
            .insert(node.clone());
    }
    components
        .into_values()
        .max_by(|a, b| {
            a.len()
                .cmp(&b.len())
                // components are disjoint, so comparing smallest members is
                // equivalent to lexicographic order of the sorted node sets
                .then_with(|| b.iter().next().cmp(&a.iter().next()))
        })
        .unwrap_or_default()
}

/// Distinct (bank, firm) pairs whose edge is validated in both directions.
pub fn bidirectional_pairs(arcs: &[ValidatedArc]) -> BTreeSet<(EntityId, EntityId)> {
    let directed: BTreeSet<(&EntityId, &EntityId)> =
        arcs.iter().map(|a| (&a.from, &a.to)).collect();
    let mut pairs = BTreeSet::new();
    for arc in arcs {
        if arc.from.side == Side::Bank && directed.contains(&(&arc.to, &arc.from)) {
            pairs.insert((arc.from.clone(), arc.to.clone()));
        }
    }
    pairs
}

/// Distinct underlying (bank, firm) edges with at least one validated
/// direction.
pub fn validated_edges(arcs: &[ValidatedArc]) -> BTreeSet<(String, String)> {
    arcs.iter()
        .map(|a| {
            let (b, f) = a.edge_key();
            (b.to_owned(), f.to_owned())
        })
        .collect()
}

/// Fraction of total credit carried by edges with at least one validated
/// direction. See [`CreditRatioAccounting`] for the bidirectional variant.
pub fn credit_ratio(snapshot: &Snapshot, arcs: &[ValidatedArc]) -> f64 {
    credit_ratio_with(snapshot, arcs, CreditRatioAccounting::PerEdge)
}

pub fn credit_ratio_with(
    snapshot: &Snapshot,
    arcs: &[ValidatedArc],
    accounting: CreditRatioAccounting,
) -> f64 {
    let total = snapshot.total_credit();
    if total <= 0.0 {
        return 0.0;
    }
    match accounting {
        CreditRatioAccounting::PerEdge => {
            let kept = validated_edges(arcs);
            let validated: f64 = snapshot
                .edges()
                .iter()
                .filter(|e| kept.contains(&(e.bank.code.clone(), e.firm.code.clone())))
                .map(|e| e.weight)
                .sum();
            validated / total
        }
        CreditRatioAccounting::PerDirection => {
            let validated: f64 = arcs.iter().map(|a| a.weight).sum();
            validated / (2.0 * total)
        }
    }
}

/// In/out degree of one tracked institution per year, following its
/// continuity chain across mergers.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSeries {
    /// The code the chain was queried for.
    pub root: EntityId,
    pub points: Vec<DegreePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreePoint {
    pub year: i32,
    pub in_degree: usize,
    pub out_degree: usize,
}

/// Degrees of the chained entity in each year's validated network. Years
/// before the chain starts are omitted; years where the entity is absent
/// from the FN report (0, 0).
pub fn degree_series(
    panel: &Panel,
    arcs_by_year: &BTreeMap<i32, Vec<ValidatedArc>>,
    chain: &[ChainSegment],
) -> Result<DegreeSeries> {
    let root = chain
        .first()
        .map(|seg| seg.entity.clone())
        .ok_or_else(|| Error::NodeNotFound("empty continuity chain".into()))?;
    let mut points = Vec::new();
    for snap in panel.snapshots() {
        let year = snap.year();
        let Some(segment) = chain.iter().find(|s| s.start <= year && year <= s.end) else {
            continue;
        };
        let entity = &segment.entity;
        let (mut in_degree, mut out_degree) = (0, 0);
        if let Some(arcs) = arcs_by_year.get(&year) {
            for arc in arcs {
                if arc.from == *entity {
                    out_degree += 1;
                }
                if arc.to == *entity {
                    in_degree += 1;
                }
            }
        }
        points.push(DegreePoint {
            year,
            in_degree,
            out_degree,
        });
    }
    Ok(DegreeSeries { root, points })
}

/// Validate every snapshot of a panel, in parallel, keyed by year.
pub fn validated_by_year(
    panel: &Panel,
    options: &FilterOptions,
) -> BTreeMap<i32, Vec<ValidatedArc>> {
    panel
        .snapshots()
        .par_iter()
        .map(|snap| (snap.year(), validated_network(snap, options)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Summary row for one snapshot given its validated arcs.
pub fn summary_for(
    snapshot: &Snapshot,
    arcs: &[ValidatedArc],
    accounting: CreditRatioAccounting,
) -> BackboneSummary {
    let nodes = crate::disparity::arc_nodes(arcs);
    let banks_fn = nodes.iter().filter(|n| n.side == Side::Bank).count();
    let firms_fn = nodes.len() - banks_fn;
    BackboneSummary {
        year: snapshot.year(),
        banks_on: snapshot.node_count(Side::Bank),
        firms_on: snapshot.node_count(Side::Firm),
        edges_on: snapshot.edge_count(),
        banks_fn,
        firms_fn,
        lcc_fn: largest_connected_component(arcs).len(),
        edges_fn: validated_edges(arcs).len(),
        pairs_bl: bidirectional_pairs(arcs).len(),
        credit_ratio: credit_ratio_with(snapshot, arcs, accounting),
        density_on: snapshot.density(),
    }
}

/// One summary row per year of the panel.
pub fn summarize(panel: &Panel, options: &FilterOptions) -> Vec<BackboneSummary> {
    summarize_with(panel, options, CreditRatioAccounting::PerEdge)
}

pub fn summarize_with(
    panel: &Panel,
    options: &FilterOptions,
    accounting: CreditRatioAccounting,
) -> Vec<BackboneSummary> {
    panel
        .snapshots()
        .par_iter()
        .map(|snap| summary_for(snap, &validated_network(snap, options), accounting))
        .collect()
}
