//! Command-line front end. Four subcommands cover the pipeline: `validate`
//! (arcs, summary rows, degree series), `enrich` (attribute over-expression),
//! `compare` (similarity matrix and link lifetimes), and `synth` (synthetic
//! panel generation). Outputs are plain CSV files in the chosen directory and
//! are byte-identical across runs with the same inputs and flags.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytics::{
    bidirectional_pairs, degree_series, summary_for, validated_by_year, CreditRatioAccounting,
    DegreeSeries,
};
use crate::disparity::{arc_nodes, CorrectionKind, FilterOptions, KOnePolicy, NtAccounting};
use crate::enrichment::{overexpression_report, AttributeReport};
use crate::error::{Error, Result};
use crate::export;
use crate::ingest::{continuity_chain, load_panel, Panel};
use crate::model::{AttributeClass, EntityId, Side};
use crate::synth::{generate_panel, GeneratorConfig};
use crate::temporal::{jaccard_matrix_from, link_lifetimes_from, JaccardWeighting, SubgraphSelector};

#[derive(Parser)]
#[command(
    name = "backbone",
    about = "Statistically validated backbones of weighted bipartite credit networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract validated arcs, per-year summaries and degree series
    Validate(ValidateCmd),
    /// Test attribute over-expression in a chosen subnetwork
    Enrich(EnrichCmd),
    /// Compare subnetworks across years and track bidirectional links
    Compare(CompareCmd),
    /// Generate a synthetic panel with planted concentrated links
    Synth(SynthCmd),
}

#[derive(Args)]
struct InputArgs {
    /// Edge file: year,bank_id,firm_id,amount[,term]
    #[arg(long)]
    edges: PathBuf,
    /// Attribute file: entity_id,side,attribute_class,value
    #[arg(long)]
    attributes: PathBuf,
    /// Merger map: year,absorbed_id,survivor_id
    #[arg(long)]
    mergers: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self) -> Result<Panel> {
        load_panel(&self.edges, &self.attributes, self.mergers.as_deref())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    None,
    Bonferroni,
    Fdr,
}

#[derive(Clone, Copy, ValueEnum)]
enum KOneArg {
    POne,
    Skip,
}

#[derive(Clone, Copy, ValueEnum)]
enum NtArg {
    Performed,
    AllDirections,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubgraphArg {
    Fn,
    Bidirectional,
}

#[derive(Clone, Copy, ValueEnum)]
enum JaccardWeightsArg {
    Amount,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum CreditRatioArg {
    PerEdge,
    PerDirection,
}

#[derive(Args)]
struct FilterArgs {
    /// Multiple-comparison correction
    #[arg(long, value_enum, default_value = "fdr")]
    correction: CorrectionArg,
    /// Nominal statistical threshold
    #[arg(long, default_value_t = 0.01)]
    theta: f64,
    /// Handling of degree-1 test directions
    #[arg(long = "k1-policy", value_enum, default_value = "p-one")]
    k1_policy: KOneArg,
    /// What counts toward N_t
    #[arg(long, value_enum, default_value = "performed")]
    nt: NtArg,
}

impl FilterArgs {
    fn options(&self) -> FilterOptions {
        FilterOptions {
            kind: match self.correction {
                CorrectionArg::None => CorrectionKind::None,
                CorrectionArg::Bonferroni => CorrectionKind::Bonferroni,
                CorrectionArg::Fdr => CorrectionKind::Fdr,
            },
            theta: self.theta,
            k_one: match self.k1_policy {
                KOneArg::POne => KOnePolicy::POne,
                KOneArg::Skip => KOnePolicy::Skip,
            },
            nt: match self.nt {
                NtArg::Performed => NtAccounting::Performed,
                NtArg::AllDirections => NtAccounting::AllDirections,
            },
        }
    }
}

#[derive(Args)]
struct ValidateCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// Credit-ratio accounting for bidirectional edges
    #[arg(long = "credit-ratio", value_enum, default_value = "per-edge")]
    credit_ratio: CreditRatioArg,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnrichCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// Subnetwork whose nodes are tested
    #[arg(long, value_enum, default_value = "fn")]
    subgraph: SubgraphArg,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// Subnetwork compared across years
    #[arg(long, value_enum, default_value = "bidirectional")]
    subgraph: SubgraphArg,
    /// Weights used by the similarity measure
    #[arg(long = "jaccard-weights", value_enum, default_value = "amount")]
    jaccard_weights: JaccardWeightsArg,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthCmd {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    banks: usize,
    #[arg(long, default_value_t = 200)]
    firms: usize,
    #[arg(long, default_value_t = 3)]
    years: usize,
    #[arg(long = "start-year", default_value_t = 1)]
    start_year: i32,
    #[arg(long = "mean-degree", default_value_t = 10)]
    mean_degree: usize,
    /// Share of a bank's strength on its planted links
    #[arg(long, default_value_t = 0.8)]
    concentration: f64,
    #[arg(long = "planted-per-year", default_value_t = 0)]
    planted_per_year: usize,
}

/// Parse `args` and run the chosen subcommand. Malformed usage prints a
/// diagnostic and exits, as a terminal tool should; file and data errors come
/// back as `Err` so the caller controls the exit code.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match cli.command {
        Command::Validate(cmd) => cmd_validate(&cmd),
        Command::Enrich(cmd) => cmd_enrich(&cmd),
        Command::Compare(cmd) => cmd_compare(&cmd),
        Command::Synth(cmd) => cmd_synth(&cmd),
    }
}

fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn cmd_validate(cmd: &ValidateCmd) -> Result<()> {
    let panel = cmd.input.load()?;
    let options = cmd.filter.options();
    let accounting = match cmd.credit_ratio {
        CreditRatioArg::PerEdge => CreditRatioAccounting::PerEdge,
        CreditRatioArg::PerDirection => CreditRatioAccounting::PerDirection,
    };
    ensure_out_dir(&cmd.out)?;

    let arcs_by_year = validated_by_year(&panel, &options);
    export::write_arcs(&arcs_by_year, &cmd.out.join("arcs.csv"))?;

    let summaries: Vec<_> = panel
        .snapshots()
        .iter()
        .map(|snap| summary_for(snap, &arcs_by_year[&snap.year()], accounting))
        .collect();
    export::write_summaries(&summaries, &cmd.out.join("summary.csv"))?;

    let mut roots: BTreeSet<String> = BTreeSet::new();
    for snap in panel.snapshots() {
        roots.extend(snap.nodes(Side::Bank).map(|id| id.code.clone()));
    }
    let mut series: Vec<DegreeSeries> = Vec::with_capacity(roots.len());
    for code in roots {
        let chain = continuity_chain(&panel, &EntityId::bank(code))?;
        series.push(degree_series(&panel, &arcs_by_year, &chain)?);
    }
    export::write_degree_series(&series, &cmd.out.join("degree_series.csv"))?;
    Ok(())
}

fn subnet_nodes(
    arcs: &[crate::disparity::ValidatedArc],
    subgraph: SubgraphArg,
) -> BTreeSet<EntityId> {
    match subgraph {
        SubgraphArg::Fn => arc_nodes(arcs),
        SubgraphArg::Bidirectional => bidirectional_pairs(arcs)
            .into_iter()
            .flat_map(|(bank, firm)| [bank, firm])
            .collect(),
    }
}

fn cmd_enrich(cmd: &EnrichCmd) -> Result<()> {
    let panel = cmd.input.load()?;
    let options = cmd.filter.options();
    ensure_out_dir(&cmd.out)?;

    let arcs_by_year = validated_by_year(&panel, &options);
    let mut reports: Vec<AttributeReport> = Vec::new();
    for snap in panel.snapshots() {
        let subnet = subnet_nodes(&arcs_by_year[&snap.year()], cmd.subgraph);
        for (side, class) in [
            (Side::Bank, AttributeClass::BankType),
            (Side::Firm, AttributeClass::Sector),
            (Side::Firm, AttributeClass::Location),
        ] {
            reports.push(overexpression_report(
                snap,
                &subnet,
                side,
                class,
                cmd.filter.theta,
            )?);
        }
    }
    export::write_enrichment(&reports, &cmd.out.join("enrichment.csv"))?;
    Ok(())
}

fn cmd_compare(cmd: &CompareCmd) -> Result<()> {
    let panel = cmd.input.load()?;
    let options = cmd.filter.options();
    ensure_out_dir(&cmd.out)?;

    let arcs_by_year = validated_by_year(&panel, &options);
    let years: Vec<i32> = panel.years().collect();
    let selector = match cmd.subgraph {
        SubgraphArg::Fn => SubgraphSelector::Fn,
        SubgraphArg::Bidirectional => SubgraphSelector::Bidirectional,
    };
    let weighting = match cmd.jaccard_weights {
        JaccardWeightsArg::Amount => JaccardWeighting::Amount,
        JaccardWeightsArg::Binary => JaccardWeighting::Binary,
    };
    let matrix = jaccard_matrix_from(&years, &arcs_by_year, selector, weighting)?;
    export::write_jaccard(&matrix, &cmd.out.join("jaccard.csv"))?;

    let lifetimes = link_lifetimes_from(&arcs_by_year);
    export::write_lifetimes(&lifetimes, &cmd.out.join("lifetimes.csv"))?;
    Ok(())
}

fn cmd_synth(cmd: &SynthCmd) -> Result<()> {
    let config = GeneratorConfig {
        n_banks: cmd.banks,
        n_firms: cmd.firms,
        n_years: cmd.years,
        start_year: cmd.start_year,
        mean_degree: cmd.mean_degree,
        concentration_fraction: cmd.concentration,
        planted_pairs_per_year: cmd.planted_per_year,
        seed: cmd.seed,
        ..GeneratorConfig::default()
    };
    let (panel, truth) = generate_panel(&config)?;
    ensure_out_dir(&cmd.out)?;
    export::write_edges(&panel, &cmd.out.join("edges.csv"))?;
    let attributes = panel
        .snapshots()
        .first()
        .map(|s| s.attributes_arc())
        .unwrap_or_default();
    export::write_attributes(&attributes, &cmd.out.join("attributes.csv"))?;
    export::write_mergers(panel.mergers(), &cmd.out.join("mergers.csv"))?;
    export::write_ground_truth(&truth, &cmd.out.join("ground_truth.csv"))?;
    Ok(())
}

/// Helper for in-process invocations: `run` with string arguments, the
/// leading binary name supplied.
pub fn run_args(args: &[&str]) -> Result<()> {
    run(std::iter::once("backbone").chain(args.iter().copied()))
}
