//! CSV export (and re-ingest, where a reader exists) of every artifact the
//! toolkit produces. All files are RFC-4180 with headers, rows in a fixed
//! sort order, and floats printed in their shortest round-trippable form, so
//! identical inputs give byte-identical outputs.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use crate::analytics::{BackboneSummary, DegreeSeries};
use crate::disparity::ValidatedArc;
use crate::enrichment::AttributeReport;
use crate::error::{Error, Result};
use crate::ingest::{MergerEvent, Panel};
use crate::model::{AttributeTable, EntityId, Side};
use crate::temporal::{JaccardMatrix, LinkLifetime};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn fmt_weight(w: f64) -> String {
    format!("{w}")
}

fn fmt_pvalue(p: f64) -> String {
    format!("{p:e}")
}

/// Write a panel's edges in the ingest format. The `term` column is emitted
/// only when at least one edge carries a tag.
pub fn write_edges(panel: &Panel, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let has_term = panel
        .snapshots()
        .iter()
        .flat_map(|s| s.edges())
        .any(|e| e.term.is_some());
    if has_term {
        w.write_record(["year", "bank_id", "firm_id", "amount", "term"])?;
    } else {
        w.write_record(["year", "bank_id", "firm_id", "amount"])?;
    }
    for snap in panel.snapshots() {
        let year = snap.year().to_string();
        for edge in snap.edges() {
            if has_term {
                w.write_record([
                    year.as_str(),
                    &edge.bank.code,
                    &edge.firm.code,
                    &fmt_weight(edge.weight),
                    edge.term.map(|t| t.as_str()).unwrap_or(""),
                ])?;
            } else {
                w.write_record([
                    year.as_str(),
                    &edge.bank.code,
                    &edge.firm.code,
                    &fmt_weight(edge.weight),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_attributes(attributes: &AttributeTable, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["entity_id", "side", "attribute_class", "value"])?;
    for (entity, class, value) in attributes.iter() {
        w.write_record([
            entity.code.as_str(),
            entity.side.as_str(),
            class.as_str(),
            value,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_mergers(mergers: &[MergerEvent], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["year", "absorbed_id", "survivor_id"])?;
    for m in mergers {
        w.write_record([
            m.year.to_string().as_str(),
            &m.absorbed.code,
            &m.survivor.code,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_arcs(arcs_by_year: &BTreeMap<i32, Vec<ValidatedArc>>, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["year", "from_side", "from_id", "to_id", "p_value", "weight"])?;
    for (year, arcs) in arcs_by_year {
        let year = year.to_string();
        for arc in arcs {
            w.write_record([
                year.as_str(),
                arc.from.side.as_str(),
                &arc.from.code,
                &arc.to.code,
                &fmt_pvalue(arc.p),
                &fmt_weight(arc.weight),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Re-ingest an arcs export.
pub fn read_arcs(path: &Path) -> Result<BTreeMap<i32, Vec<ValidatedArc>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut out: BTreeMap<i32, Vec<ValidatedArc>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| Error::schema(path, line, msg);
        let year: i32 = record[0]
            .parse()
            .map_err(|_| bad(format!("invalid year {:?}", &record[0])))?;
        let side = Side::parse(&record[1])
            .ok_or_else(|| bad(format!("invalid side {:?}", &record[1])))?;
        let from = EntityId::new(side, &record[2]);
        let to = EntityId::new(
            match side {
                Side::Bank => Side::Firm,
                Side::Firm => Side::Bank,
            },
            &record[3],
        );
        let p: f64 = record[4]
            .parse()
            .map_err(|_| bad(format!("invalid p_value {:?}", &record[4])))?;
        let weight: f64 = record[5]
            .parse()
            .map_err(|_| bad(format!("invalid weight {:?}", &record[5])))?;
        out.entry(year).or_default().push(ValidatedArc {
            from,
            to,
            p,
            weight,
        });
    }
    Ok(out)
}

pub fn write_summaries(rows: &[BackboneSummary], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "year",
        "banks_on",
        "firms_on",
        "edges_on",
        "banks_fn",
        "firms_fn",
        "lcc_fn",
        "edges_fn",
        "pairs_bl",
        "credit_ratio",
        "density_on",
    ])?;
    for r in rows {
        w.write_record([
            r.year.to_string().as_str(),
            &r.banks_on.to_string(),
            &r.firms_on.to_string(),
            &r.edges_on.to_string(),
            &r.banks_fn.to_string(),
            &r.firms_fn.to_string(),
            &r.lcc_fn.to_string(),
            &r.edges_fn.to_string(),
            &r.pairs_bl.to_string(),
            &fmt_weight(r.credit_ratio),
            &fmt_weight(r.density_on),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_degree_series(series: &[DegreeSeries], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["year", "entity_chain_root", "in_degree", "out_degree"])?;
    for s in series {
        for point in &s.points {
            w.write_record([
                point.year.to_string().as_str(),
                &s.root.code,
                &point.in_degree.to_string(),
                &point.out_degree.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_enrichment(reports: &[AttributeReport], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "year",
        "side",
        "attribute_class",
        "value",
        "N",
        "N_A",
        "n",
        "k_obs",
        "p_value",
        "over_expressed",
    ])?;
    for report in reports {
        let year = report.year.to_string();
        for (test, flagged) in &report.tests {
            w.write_record([
                year.as_str(),
                report.side.as_str(),
                report.class.as_str(),
                &test.value,
                &test.population.to_string(),
                &test.population_with.to_string(),
                &test.subset.to_string(),
                &test.observed.to_string(),
                &fmt_pvalue(test.p),
                if *flagged { "true" } else { "false" },
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Long-form matrix export: one row per ordered year pair, panel order.
pub fn write_jaccard(matrix: &JaccardMatrix, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["year_a", "year_b", "jaccard"])?;
    for (i, a) in matrix.years.iter().enumerate() {
        for (j, b) in matrix.years.iter().enumerate() {
            w.write_record([
                a.to_string().as_str(),
                &b.to_string(),
                &fmt_weight(matrix.values[i][j]),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_lifetimes(lifetimes: &[LinkLifetime], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "bank_id",
        "firm_id",
        "first_year",
        "last_year",
        "n_years",
        "max_run",
    ])?;
    for lt in lifetimes {
        let first = lt.years_present.iter().next().copied().unwrap_or(0);
        let last = lt.years_present.iter().next_back().copied().unwrap_or(0);
        w.write_record([
            lt.bank.as_str(),
            &lt.firm,
            &first.to_string(),
            &last.to_string(),
            &lt.years_present.len().to_string(),
            &lt.max_run.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_ground_truth(truth: &BTreeSet<(i32, String, String)>, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["year", "bank_id", "firm_id"])?;
    for (year, bank, firm) in truth {
        w.write_record([year.to_string().as_str(), bank, firm])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
