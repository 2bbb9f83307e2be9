//! Parsing of panel input files into [`Panel`]s, plus the merger-based
//! entity-continuity index.
//!
//! Three CSV files (all UTF-8, RFC-4180, header required) describe a panel:
//!
//! * edges: `year,bank_id,firm_id,amount[,term]` with `term` in {short,long}
//! * attributes: `entity_id,side,attribute_class,value`
//! * mergers (optional): `year,absorbed_id,survivor_id`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{AttributeClass, AttributeTable, EntityId, Side, Snapshot, Term};

/// One bank absorbing another at the end of the given year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergerEvent {
    pub year: i32,
    pub absorbed: EntityId,
    pub survivor: EntityId,
}

/// Yearly snapshots in strictly increasing year order plus the merger map.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    snapshots: Vec<Snapshot>,
    mergers: Vec<MergerEvent>,
}

impl Panel {
    pub fn from_parts(snapshots: Vec<Snapshot>, mergers: Vec<MergerEvent>) -> Result<Panel> {
        for pair in snapshots.windows(2) {
            if pair[0].year() >= pair[1].year() {
                return Err(Error::Config(format!(
                    "snapshot years must be strictly increasing, got {} then {}",
                    pair[0].year(),
                    pair[1].year()
                )));
            }
        }
        let panel = Panel { snapshots, mergers };
        panel.check_mergers()?;
        Ok(panel)
    }

    fn check_mergers(&self) -> Result<()> {
        let mut absorbed_at: BTreeMap<&EntityId, i32> = BTreeMap::new();
        for m in &self.mergers {
            if m.absorbed == m.survivor {
                return Err(Error::Config(format!(
                    "merger of {} into itself",
                    m.absorbed.code
                )));
            }
            if absorbed_at.insert(&m.absorbed, m.year).is_some() {
                return Err(Error::Config(format!(
                    "bank {} is absorbed more than once",
                    m.absorbed.code
                )));
            }
        }
        for m in &self.mergers {
            if let Some(&year) = absorbed_at.get(&m.survivor) {
                if year <= m.year {
                    return Err(Error::Config(format!(
                        "bank {} survives a merger in {} after being absorbed in {}",
                        m.survivor.code, m.year, year
                    )));
                }
            }
        }
        for snap in &self.snapshots {
            for (id, year) in &absorbed_at {
                if snap.year() > *year && snap.contains(id) {
                    return Err(Error::Config(format!(
                        "bank {} appears in {} but was absorbed in {}",
                        id.code,
                        snap.year(),
                        year
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.snapshots.iter().map(Snapshot::year)
    }

    pub fn snapshot(&self, year: i32) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.year() == year)
    }

    pub fn mergers(&self) -> &[MergerEvent] {
        &self.mergers
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// One stretch of years during which an institution is tracked under a single
/// code. `start` and `end` are inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSegment {
    pub start: i32,
    pub end: i32,
    pub entity: EntityId,
}

/// The sequence of codes under which one institution is tracked across
/// mergers, starting from `code`. A segment ends at the year its code is
/// absorbed; the survivor's segment begins the following year.
pub fn continuity_chain(panel: &Panel, code: &EntityId) -> Result<Vec<ChainSegment>> {
    let first_seen = |id: &EntityId| -> Option<i32> {
        let in_snapshots = panel
            .snapshots
            .iter()
            .find(|s| s.contains(id))
            .map(Snapshot::year);
        let in_mergers = panel
            .mergers
            .iter()
            .filter(|m| m.absorbed == *id || m.survivor == *id)
            .map(|m| m.year)
            .min();
        in_snapshots.or(in_mergers)
    };
    let last_seen = |id: &EntityId| -> Option<i32> {
        panel
            .snapshots
            .iter()
            .rev()
            .find(|s| s.contains(id))
            .map(Snapshot::year)
    };

    let Some(mut start) = first_seen(code) else {
        return Err(Error::NodeNotFound(code.to_string()));
    };
    let mut segments = Vec::new();
    let mut current = code.clone();
    loop {
        let absorption = panel
            .mergers
            .iter()
            .find(|m| m.absorbed == current && m.year >= start);
        match absorption {
            Some(m) => {
                segments.push(ChainSegment {
                    start,
                    end: m.year,
                    entity: current.clone(),
                });
                start = m.year + 1;
                current = m.survivor.clone();
            }
            None => {
                let end = last_seen(&current).unwrap_or(start).max(start);
                segments.push(ChainSegment {
                    start,
                    end,
                    entity: current,
                });
                return Ok(segments);
            }
        }
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn expect_header(path: &Path, got: &csv::StringRecord, want: &[&[&str]]) -> Result<()> {
    let fields: Vec<&str> = got.iter().collect();
    if want.iter().any(|w| *w == fields.as_slice()) {
        Ok(())
    } else {
        Err(Error::schema(
            path,
            1,
            format!(
                "unexpected header {:?}, expected {}",
                fields.join(","),
                want.iter()
                    .map(|w| w.join(","))
                    .collect::<Vec<_>>()
                    .join(" or ")
            ),
        ))
    }
}

fn parse_year(path: &Path, line: u64, s: &str) -> Result<i32> {
    s.trim()
        .parse::<i32>()
        .map_err(|_| Error::schema(path, line, format!("invalid year {s:?}")))
}

/// Parsed edge file: raw records grouped by year, duplicates not yet summed.
fn read_edge_file(path: &Path) -> Result<BTreeMap<i32, Vec<(String, String, f64, Option<Term>)>>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers()?.clone();
    expect_header(
        path,
        &headers,
        &[
            &["year", "bank_id", "firm_id", "amount"],
            &["year", "bank_id", "firm_id", "amount", "term"],
        ],
    )?;
    let has_term = headers.len() == 5;

    let mut by_year: BTreeMap<i32, Vec<(String, String, f64, Option<Term>)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let year = parse_year(path, line, &record[0])?;
        let bank = record[1].trim();
        let firm = record[2].trim();
        if bank.is_empty() || firm.is_empty() {
            return Err(Error::schema(path, line, "empty bank_id or firm_id"));
        }
        let amount_raw = record[3].trim();
        let amount: f64 = amount_raw
            .parse()
            .map_err(|_| Error::schema(path, line, format!("invalid amount {amount_raw:?}")))?;
        if !amount.is_finite() || amount < 0.0 {
            return Err(Error::schema(
                path,
                line,
                format!("amount must be nonnegative and finite, got {amount_raw:?}"),
            ));
        }
        let term = if has_term {
            let raw = record[4].trim();
            if raw.is_empty() {
                None
            } else {
                Some(Term::parse(raw).ok_or_else(|| {
                    Error::schema(path, line, format!("invalid term {raw:?}, expected short or long"))
                })?)
            }
        } else {
            None
        };
        by_year
            .entry(year)
            .or_default()
            .push((bank.to_owned(), firm.to_owned(), amount, term));
    }
    Ok(by_year)
}

fn read_attribute_file(path: &Path) -> Result<AttributeTable> {
    let mut reader = open_reader(path)?;
    expect_header(
        path,
        &reader.headers()?.clone(),
        &[&["entity_id", "side", "attribute_class", "value"]],
    )?;
    let mut table = AttributeTable::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let code = record[0].trim();
        if code.is_empty() {
            return Err(Error::schema(path, line, "empty entity_id"));
        }
        let side = Side::parse(record[1].trim()).ok_or_else(|| {
            Error::schema(
                path,
                line,
                format!("invalid side {:?}, expected bank or firm", &record[1]),
            )
        })?;
        let class = AttributeClass::parse(record[2].trim()).ok_or_else(|| {
            Error::schema(
                path,
                line,
                format!(
                    "invalid attribute_class {:?}, expected bank_type, sector or location",
                    &record[2]
                ),
            )
        })?;
        let value = record[3].trim();
        if value.is_empty() {
            return Err(Error::schema(path, line, "empty attribute value"));
        }
        table
            .insert(EntityId::new(side, code), class, value)
            .map_err(|e| Error::schema(path, line, e.to_string()))?;
    }
    Ok(table)
}

fn read_merger_file(path: &Path) -> Result<Vec<MergerEvent>> {
    let mut reader = open_reader(path)?;
    expect_header(
        path,
        &reader.headers()?.clone(),
        &[&["year", "absorbed_id", "survivor_id"]],
    )?;
    let mut mergers = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let year = parse_year(path, line, &record[0])?;
        let absorbed = record[1].trim();
        let survivor = record[2].trim();
        if absorbed.is_empty() || survivor.is_empty() {
            return Err(Error::schema(path, line, "empty absorbed_id or survivor_id"));
        }
        if absorbed == survivor {
            return Err(Error::schema(
                path,
                line,
                format!("bank {absorbed} cannot absorb itself"),
            ));
        }
        mergers.push(MergerEvent {
            year,
            absorbed: EntityId::bank(absorbed),
            survivor: EntityId::bank(survivor),
        });
    }
    mergers.sort_by(|a, b| {
        (a.year, &a.absorbed.code, &a.survivor.code).cmp(&(b.year, &b.absorbed.code, &b.survivor.code))
    });
    Ok(mergers)
}

/// Load a full panel from its input files.
pub fn load_panel(
    edge_file: &Path,
    attribute_file: &Path,
    merger_file: Option<&Path>,
) -> Result<Panel> {
    let by_year = read_edge_file(edge_file)?;
    let attributes = Arc::new(read_attribute_file(attribute_file)?);
    let mergers = match merger_file {
        Some(path) => read_merger_file(path)?,
        None => Vec::new(),
    };

    let mut snapshots = Vec::with_capacity(by_year.len());
    for (year, records) in by_year {
        let mut builder = Snapshot::builder(year).attributes(Arc::clone(&attributes));
        for (bank, firm, amount, term) in records {
            builder
                .add_loan(&bank, &firm, amount, term)
                .map_err(|e| Error::Schema {
                    path: PathBuf::from(edge_file),
                    line: 0,
                    message: e.to_string(),
                })?;
        }
        snapshots.push(builder.build());
    }
    Panel::from_parts(snapshots, mergers)
}
