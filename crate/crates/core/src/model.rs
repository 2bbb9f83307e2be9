//! In-memory representation of a yearly weighted bipartite credit network.
//!
//! A [`Snapshot`] is immutable once built: edges are aggregated and sorted,
//! strengths and degrees are precomputed, and node metadata is attached as an
//! [`AttributeTable`]. All downstream analysis reads from snapshots.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Which side of the bipartite network an entity lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Bank,
    Firm,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Bank => "bank",
            Side::Firm => "firm",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "bank" => Some(Side::Bank),
            "firm" => Some(Side::Firm),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A side-qualified stable identifier, e.g. the bank `B10005`.
///
/// The same code string may appear on both sides without collision; the pair
/// `(side, code)` is the identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    pub side: Side,
    pub code: String,
}

impl EntityId {
    pub fn new(side: Side, code: impl Into<String>) -> EntityId {
        EntityId {
            side,
            code: code.into(),
        }
    }

    pub fn bank(code: impl Into<String>) -> EntityId {
        EntityId::new(Side::Bank, code)
    }

    pub fn firm(code: impl Into<String>) -> EntityId {
        EntityId::new(Side::Firm, code)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.side, self.code)
    }
}

/// Loan maturity class carried through from the input, when present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Short,
    Long,
}

impl Term {
    pub fn as_str(self) -> &'static str {
        match self {
            Term::Short => "short",
            Term::Long => "long",
        }
    }

    pub fn parse(s: &str) -> Option<Term> {
        match s {
            "short" => Some(Term::Short),
            "long" => Some(Term::Long),
            _ => None,
        }
    }
}

/// One aggregated credit relationship between a bank and a firm.
///
/// `term` is `None` when the input carried no maturity tag or when records
/// with different tags were merged into the same relationship.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub bank: EntityId,
    pub firm: EntityId,
    pub weight: f64,
    pub term: Option<Term>,
}

/// Metadata classes attached to entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttributeClass {
    BankType,
    Sector,
    Location,
}

impl AttributeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeClass::BankType => "bank_type",
            AttributeClass::Sector => "sector",
            AttributeClass::Location => "location",
        }
    }

    pub fn parse(s: &str) -> Option<AttributeClass> {
        match s {
            "bank_type" => Some(AttributeClass::BankType),
            "sector" => Some(AttributeClass::Sector),
            "location" => Some(AttributeClass::Location),
            _ => None,
        }
    }

    /// The side an attribute of this class may be attached to.
    pub fn side(self) -> Side {
        match self {
            AttributeClass::BankType => Side::Bank,
            AttributeClass::Sector | AttributeClass::Location => Side::Firm,
        }
    }
}

impl fmt::Display for AttributeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Registry of entity metadata: at most one value per class per entity.
///
/// The registry may list entities that never appear in any snapshot's edges;
/// such entities are kept here but take no part in density or any test.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeTable {
    entries: BTreeMap<EntityId, BTreeMap<AttributeClass, String>>,
}

impl AttributeTable {
    pub fn new() -> AttributeTable {
        AttributeTable::default()
    }

    /// Record a value. Re-inserting the same value is a no-op; a conflicting
    /// value or a class/side mismatch is an error.
    pub fn insert(
        &mut self,
        entity: EntityId,
        class: AttributeClass,
        value: impl Into<String>,
    ) -> Result<()> {
        if entity.code.is_empty() {
            return Err(Error::Domain("empty entity code".into()));
        }
        if class.side() != entity.side {
            return Err(Error::Domain(format!(
                "attribute class {class} cannot be attached to {} entity {}",
                entity.side, entity.code
            )));
        }
        let value = value.into();
        let slot = self.entries.entry(entity.clone()).or_default();
        match slot.get(&class) {
            Some(existing) if *existing != value => Err(Error::Domain(format!(
                "conflicting {class} values for {entity}: {existing:?} vs {value:?}"
            ))),
            _ => {
                slot.insert(class, value);
                Ok(())
            }
        }
    }

    pub fn value(&self, entity: &EntityId, class: AttributeClass) -> Option<&str> {
        self.entries
            .get(entity)
            .and_then(|m| m.get(&class))
            .map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, AttributeClass, &str)> {
        self.entries.iter().flat_map(|(entity, classes)| {
            classes
                .iter()
                .map(move |(class, value)| (entity, *class, value.as_str()))
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TermState {
    Unset,
    Tagged(Term),
    Mixed,
}

impl TermState {
    fn merge(self, tag: Option<Term>) -> TermState {
        match (self, tag) {
            (TermState::Unset, Some(t)) => TermState::Tagged(t),
            (TermState::Unset, None) => TermState::Mixed,
            (TermState::Tagged(a), Some(b)) if a == b => TermState::Tagged(a),
            _ => TermState::Mixed,
        }
    }

    fn resolve(self) -> Option<Term> {
        match self {
            TermState::Tagged(t) => Some(t),
            _ => None,
        }
    }
}

/// Accumulates raw loan records into an aggregated [`Snapshot`].
///
/// Duplicate `(bank, firm)` records are summed into a single edge. To keep
/// construction independent of record order, the individual weights of each
/// pair are sorted before summation.
#[derive(Debug)]
pub struct SnapshotBuilder {
    year: i32,
    loans: BTreeMap<(String, String), (Vec<f64>, TermState)>,
    attributes: Arc<AttributeTable>,
}

impl SnapshotBuilder {
    pub fn new(year: i32) -> SnapshotBuilder {
        SnapshotBuilder {
            year,
            loans: BTreeMap::new(),
            attributes: Arc::new(AttributeTable::new()),
        }
    }

    pub fn attributes(mut self, attributes: Arc<AttributeTable>) -> SnapshotBuilder {
        self.attributes = attributes;
        self
    }

    /// Add one loan record. Zero-weight records are dropped; negative or
    /// non-finite weights and empty codes are rejected.
    pub fn add_loan(
        &mut self,
        bank_code: &str,
        firm_code: &str,
        weight: f64,
        term: Option<Term>,
    ) -> Result<()> {
        if bank_code.is_empty() || firm_code.is_empty() {
            return Err(Error::Domain("empty entity code in loan record".into()));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Domain(format!(
                "loan weight must be a nonnegative finite number, got {weight}"
            )));
        }
        if weight == 0.0 {
            return Ok(());
        }
        let entry = self
            .loans
            .entry((bank_code.to_owned(), firm_code.to_owned()))
            .or_insert_with(|| (Vec::new(), TermState::Unset));
        entry.0.push(weight);
        entry.1 = if entry.0.len() == 1 {
            match term {
                Some(t) => TermState::Tagged(t),
                None => TermState::Unset,
            }
        } else {
            entry.1.merge(term)
        };
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.loans.is_empty()
    }

    pub fn build(self) -> Snapshot {
        let mut edges = Vec::with_capacity(self.loans.len());
        let mut strengths: BTreeMap<EntityId, f64> = BTreeMap::new();
        let mut degrees: BTreeMap<EntityId, u32> = BTreeMap::new();
        for ((bank_code, firm_code), (mut weights, term)) in self.loans {
            weights.sort_by(f64::total_cmp);
            let weight: f64 = weights.iter().sum();
            let bank = EntityId::bank(bank_code);
            let firm = EntityId::firm(firm_code);
            *strengths.entry(bank.clone()).or_insert(0.0) += weight;
            *strengths.entry(firm.clone()).or_insert(0.0) += weight;
            *degrees.entry(bank.clone()).or_insert(0) += 1;
            *degrees.entry(firm.clone()).or_insert(0) += 1;
            edges.push(Edge {
                bank,
                firm,
                weight,
                term: term.resolve(),
            });
        }
        Snapshot {
            year: self.year,
            edges,
            strengths,
            degrees,
            attributes: self.attributes,
        }
    }
}

/// One year's aggregated bipartite network plus node metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    year: i32,
    /// Sorted by (bank code, firm code); one edge per pair.
    edges: Vec<Edge>,
    strengths: BTreeMap<EntityId, f64>,
    degrees: BTreeMap<EntityId, u32>,
    attributes: Arc<AttributeTable>,
}

impl Snapshot {
    pub fn builder(year: i32) -> SnapshotBuilder {
        SnapshotBuilder::new(year)
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes of one side that carry at least one edge this year.
    pub fn nodes(&self, side: Side) -> impl Iterator<Item = &EntityId> {
        self.strengths.keys().filter(move |id| id.side == side)
    }

    pub fn node_count(&self, side: Side) -> usize {
        self.nodes(side).count()
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.strengths.contains_key(id)
    }

    /// Sum of the weights of the edges incident to `node`.
    pub fn node_strength(&self, node: &EntityId) -> Result<f64> {
        self.strengths
            .get(node)
            .copied()
            .ok_or_else(|| Error::NodeNotFound(node.to_string()))
    }

    /// Number of edges incident to `node`.
    pub fn degree(&self, node: &EntityId) -> Result<u32> {
        self.degrees
            .get(node)
            .copied()
            .ok_or_else(|| Error::NodeNotFound(node.to_string()))
    }

    /// Observed links over potential links, counting only nodes that carry at
    /// least one edge this year. An empty snapshot has density 0.
    pub fn density(&self) -> f64 {
        let banks = self.node_count(Side::Bank);
        let firms = self.node_count(Side::Firm);
        if banks == 0 || firms == 0 {
            return 0.0;
        }
        self.edges.len() as f64 / (banks as f64 * firms as f64)
    }

    /// Total credit in the system: each edge weight counted once.
    pub fn total_credit(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn attributes(&self) -> &AttributeTable {
        &self.attributes
    }

    pub fn attributes_arc(&self) -> Arc<AttributeTable> {
        Arc::clone(&self.attributes)
    }
}
