//! End-to-end runs of the command-line pipeline on synthetic panels.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use credit_backbone::cli::run_args;

fn synth_panel(dir: &Path, seed: u64, planted: usize) -> PathBuf {
    let panel_dir = dir.join(format!("panel_{seed}"));
    run_args(&[
        "synth",
        "--out",
        panel_dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--banks",
        "30",
        "--firms",
        "150",
        "--years",
        "4",
        "--mean-degree",
        "10",
        "--planted-per-year",
        &planted.to_string(),
    ])
    .unwrap();
    panel_dir
}

fn validate(panel_dir: &Path, out: &Path, correction: &str) {
    run_args(&[
        "validate",
        "--edges",
        panel_dir.join("edges.csv").to_str().unwrap(),
        "--attributes",
        panel_dir.join("attributes.csv").to_str().unwrap(),
        "--correction",
        correction,
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn bonferroni_arcs_are_a_subset_of_fdr_arcs() {
    let dir = tempfile::tempdir().unwrap();
    let panel_dir = synth_panel(dir.path(), 21, 6);
    let out_b = dir.path().join("bonf");
    let out_f = dir.path().join("fdr");
    validate(&panel_dir, &out_b, "bonferroni");
    validate(&panel_dir, &out_f, "fdr");
    let key = |row: &Vec<String>| (row[0].clone(), row[1].clone(), row[2].clone(), row[3].clone());
    let bonf: BTreeSet<_> = read_rows(&out_b.join("arcs.csv")).iter().map(key).collect();
    let fdr: BTreeSet<_> = read_rows(&out_f.join("arcs.csv")).iter().map(key).collect();
    assert!(!fdr.is_empty());
    assert!(bonf.is_subset(&fdr));
}

#[test]
fn missing_input_exits_with_named_path() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_args(&[
        "validate",
        "--edges",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--attributes",
        dir.path().join("attrs.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(err.to_string().contains("absent.csv"));
}

#[test]
fn infeasible_synth_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_args(&[
        "synth",
        "--out",
        dir.path().join("p").to_str().unwrap(),
        "--banks",
        "2",
        "--firms",
        "3",
        "--mean-degree",
        "2",
        "--planted-per-year",
        "7",
    ])
    .unwrap_err();
    assert!(err.to_string().contains("planted"));
}

/// Recompute every FN column of the summary export from the arcs export
/// alone, with plain set logic and a BFS, and compare row by row.
#[test]
fn summary_matches_recomputation_from_exported_arcs() {
    let dir = tempfile::tempdir().unwrap();
    let panel_dir = synth_panel(dir.path(), 33, 5);
    let out = dir.path().join("out");
    validate(&panel_dir, &out, "fdr");

    // total credit per year from the panel's edge file
    let mut credit: BTreeMap<String, f64> = BTreeMap::new();
    let mut weights: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    for row in read_rows(&panel_dir.join("edges.csv")) {
        let w: f64 = row[3].parse().unwrap();
        *credit.entry(row[0].clone()).or_insert(0.0) += w;
        weights.insert((row[0].clone(), row[1].clone(), row[2].clone()), w);
    }

    // arcs export: year -> (from_side, from, to)
    let mut arcs: BTreeMap<String, Vec<(String, String, String)>> = BTreeMap::new();
    for row in read_rows(&out.join("arcs.csv")) {
        arcs.entry(row[0].clone())
            .or_default()
            .push((row[1].clone(), row[2].clone(), row[3].clone()));
    }

    for row in read_rows(&out.join("summary.csv")) {
        let year = &row[0];
        let empty = Vec::new();
        let year_arcs = arcs.get(year).unwrap_or(&empty);
        let mut banks = BTreeSet::new();
        let mut firms = BTreeSet::new();
        let mut edges = BTreeSet::new();
        let mut directed = BTreeSet::new();
        for (side, from, to) in year_arcs {
            let (bank, firm) = if side == "bank" {
                (from.clone(), to.clone())
            } else {
                (to.clone(), from.clone())
            };
            banks.insert(bank.clone());
            firms.insert(firm.clone());
            edges.insert((bank.clone(), firm.clone()));
            directed.insert((side.clone(), bank, firm));
        }
        let pairs_bl = edges
            .iter()
            .filter(|(b, f)| {
                directed.contains(&("bank".into(), b.clone(), f.clone()))
                    && directed.contains(&("firm".into(), b.clone(), f.clone()))
            })
            .count();

        // largest component by BFS over the undirected validated edges
        let mut adjacency: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (b, f) in &edges {
            let bn = format!("B:{b}");
            let fn_ = format!("F:{f}");
            adjacency.entry(bn.clone()).or_default().insert(fn_.clone());
            adjacency.entry(fn_).or_default().insert(bn);
        }
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut lcc = 0usize;
        for start in adjacency.keys() {
            if seen.contains(start) {
                continue;
            }
            let mut queue = VecDeque::from([start.clone()]);
            let mut size = 0usize;
            while let Some(node) = queue.pop_front() {
                if !seen.insert(node.clone()) {
                    continue;
                }
                size += 1;
                queue.extend(adjacency[&node].iter().cloned());
            }
            lcc = lcc.max(size);
        }

        let validated_credit: f64 = edges
            .iter()
            .map(|(b, f)| weights[&(year.clone(), b.clone(), f.clone())])
            .sum();
        let expected_ratio = if credit[year] > 0.0 {
            validated_credit / credit[year]
        } else {
            0.0
        };

        assert_eq!(row[4].parse::<usize>().unwrap(), banks.len(), "banks_fn, year {year}");
        assert_eq!(row[5].parse::<usize>().unwrap(), firms.len(), "firms_fn, year {year}");
        assert_eq!(row[6].parse::<usize>().unwrap(), lcc, "lcc_fn, year {year}");
        assert_eq!(row[7].parse::<usize>().unwrap(), edges.len(), "edges_fn, year {year}");
        assert_eq!(row[8].parse::<usize>().unwrap(), pairs_bl, "pairs_bl, year {year}");
        let ratio: f64 = row[9].parse().unwrap();
        assert!((ratio - expected_ratio).abs() < 1e-9, "credit_ratio, year {year}");
    }
}

#[test]
fn enrich_emits_well_formed_report() {
    let dir = tempfile::tempdir().unwrap();
    let panel_dir = synth_panel(dir.path(), 44, 8);
    let out = dir.path().join("out");
    run_args(&[
        "enrich",
        "--edges",
        panel_dir.join("edges.csv").to_str().unwrap(),
        "--attributes",
        panel_dir.join("attributes.csv").to_str().unwrap(),
        "--subgraph",
        "fn",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let rows = read_rows(&out.join("enrichment.csv"));
    assert!(!rows.is_empty());
    for row in &rows {
        let n: usize = row[4].parse().unwrap();
        let n_a: usize = row[5].parse().unwrap();
        let subset: usize = row[6].parse().unwrap();
        let k_obs: usize = row[7].parse().unwrap();
        let p: f64 = row[8].parse().unwrap();
        assert!(n_a <= n && subset <= n && k_obs <= subset.min(n_a));
        assert!((0.0..=1.0).contains(&p));
        assert!(row[9] == "true" || row[9] == "false");
    }
    // all three class families appear
    let classes: BTreeSet<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(classes, ["bank_type", "location", "sector"].into());
}

#[test]
fn compare_emits_full_matrix_with_unit_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let panel_dir = synth_panel(dir.path(), 55, 6);
    let out = dir.path().join("out");
    run_args(&[
        "compare",
        "--edges",
        panel_dir.join("edges.csv").to_str().unwrap(),
        "--attributes",
        panel_dir.join("attributes.csv").to_str().unwrap(),
        "--subgraph",
        "fn",
        "--jaccard-weights",
        "binary",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let rows = read_rows(&out.join("jaccard.csv"));
    assert_eq!(rows.len(), 16); // 4 years squared
    for row in &rows {
        let v: f64 = row[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
        if row[0] == row[1] {
            assert_eq!(v, 1.0);
        }
    }
    let lifetimes = read_rows(&out.join("lifetimes.csv"));
    for row in &lifetimes {
        let n_years: usize = row[4].parse().unwrap();
        let max_run: usize = row[5].parse().unwrap();
        assert!(max_run <= n_years);
    }
}

#[test]
fn degree_series_follows_mergers_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    // b1 holds a dominant loan to f1 in both years under different codes:
    // b_old until 1990, survivor b_new afterwards
    let edges = dir.path().join("edges.csv");
    let mut edge_rows = String::from("year,bank_id,firm_id,amount\n");
    for (year, bank) in [(1990, "b_old"), (1991, "b_new")] {
        edge_rows.push_str(&format!("{year},{bank},f01,800\n"));
        for i in 2..=20 {
            edge_rows.push_str(&format!("{year},{bank},f{i:02},10\n"));
        }
    }
    std::fs::write(&edges, edge_rows).unwrap();
    let attrs = dir.path().join("attrs.csv");
    std::fs::write(&attrs, "entity_id,side,attribute_class,value\nb_old,bank,bank_type,city\n")
        .unwrap();
    let mergers = dir.path().join("mergers.csv");
    std::fs::write(&mergers, "year,absorbed_id,survivor_id\n1990,b_old,b_new\n").unwrap();
    let out = dir.path().join("out");
    run_args(&[
        "validate",
        "--edges",
        edges.to_str().unwrap(),
        "--attributes",
        attrs.to_str().unwrap(),
        "--mergers",
        mergers.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let rows = read_rows(&out.join("degree_series.csv"));
    let b_old: Vec<&Vec<String>> = rows.iter().filter(|r| r[1] == "b_old").collect();
    assert_eq!(b_old.len(), 2, "chain must span both years: {rows:?}");
    // the concentrated loan validates in both years, under either code
    assert_eq!(b_old[0][0], "1990");
    assert_eq!(b_old[0][3], "1");
    assert_eq!(b_old[1][0], "1991");
    assert_eq!(b_old[1][3], "1");
}

#[test]
fn flag_variants_run_and_stay_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let panel_dir = synth_panel(dir.path(), 66, 4);
    for (i, flags) in [
        ["--k1-policy", "skip", "--nt", "performed"],
        ["--k1-policy", "p-one", "--nt", "all-directions"],
        ["--credit-ratio", "per-direction", "--correction", "none"],
    ]
    .iter()
    .enumerate()
    {
        let out_a = dir.path().join(format!("a{i}"));
        let out_b = dir.path().join(format!("b{i}"));
        for out in [&out_a, &out_b] {
            let mut args = vec![
                "validate",
                "--edges",
                panel_dir.join("edges.csv").to_str().unwrap(),
                "--attributes",
                panel_dir.join("attributes.csv").to_str().unwrap(),
            ];
            args.extend_from_slice(flags);
            args.extend_from_slice(&["--out", out.to_str().unwrap()]);
            run_args(&args).unwrap();
        }
        assert_eq!(
            std::fs::read(out_a.join("summary.csv")).unwrap(),
            std::fs::read(out_b.join("summary.csv")).unwrap()
        );
    }
}
