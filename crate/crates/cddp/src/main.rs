use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use cddp::bounds::{cluster_bounds, SubmodelLimits};
use cddp::io::{self, IoError};
use cddp::lpfile::write_lp;
use cddp::omega::{solve_omega, OmegaPolicy};
use cddp::report::{self, DimsRow, Format, Table};
use cddp::scs4b::{self, BasicCapacity, Escalation, Scs4bError, Scs4bParams};
use cddp_core::cluster::{build_c_submodel, generate_clusters, BoundOption, ClusterError, KappaRule};
use cddp_core::lsh::{LshParams, OmegaSubmodel};
use cddp_core::oracle::{brute_force_oracle, OracleError, OracleLimits};
use cddp_core::testbed::{generate_bsc, merge_bsc, summarize, BscSpec, MergeSpec, TestbedError};
use cddp_core::{build_lip, count_dims, Instance};

#[derive(Parser)]
#[command(name = "cddp", version, about = "Two-stage stochastic cross-dock door design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded benchmark instance.
    Generate(GenerateArgs),
    /// Merge instances into one with the union of their scenarios.
    Merge(MergeArgs),
    /// Print model dimensions.
    Dims(DimsArgs),
    /// Write the linearized model in CPLEX LP format.
    ExportLip(ExportArgs),
    /// Lower bound from cluster submodels.
    Bounds(BoundsArgs),
    /// Run the clustering matheuristic.
    Scs4b(Scs4bArgs),
    /// Exact optimum by enumeration, for small instances.
    Oracle(OracleArgs),
    /// Solve one scenario's assignment problem under a fixed design.
    SolveOmega(OmegaArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Tsv,
    Pretty,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Tsv => Format::Tsv,
            FormatArg::Pretty => Format::Pretty,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptionArg {
    #[value(name = "1")]
    Full,
    #[value(name = "2")]
    Split,
}

impl From<OptionArg> for BoundOption {
    fn from(o: OptionArg) -> Self {
        match o {
            OptionArg::Full => BoundOption::Full,
            OptionArg::Split => BoundOption::Split,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PartArg {
    Full,
    Strip,
    Stack,
}

#[derive(Clone, Copy, ValueEnum)]
enum EscalationArg {
    Levels,
    Saturate,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasicArg {
    Fallback,
    Always,
}

#[derive(Args)]
struct Output {
    /// Table format on standard output.
    #[arg(long, value_enum, default_value = "pretty")]
    format: FormatArg,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    doors: usize,
    /// Random seed; falls back to CDDP_SEED.
    #[arg(long, env = "CDDP_SEED", default_value_t = 0)]
    seed: u64,
    /// Capacity slack percentages, one scenario each.
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 15.0, 20.0, 30.0])]
    slack: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    density: f64,
    #[arg(long, default_value_t = 10)]
    flow_min: u32,
    #[arg(long, default_value_t = 50)]
    flow_max: u32,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long, default_value_t = 1.0)]
    cost_factor: f64,
    /// Door bound is the door count plus this offset.
    #[arg(long, default_value_t = 1)]
    door_offset: usize,
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(required = true, num_args = 1..)]
    instances: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long, default_value_t = 1)]
    door_offset: usize,
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ClusterArgs {
    /// Cluster size; `all` puts every scenario of a group in one cluster.
    #[arg(long, default_value = "2")]
    kappa: KappaArg,
    /// Per-group sizes as ORIGINSxDESTINATIONS=K, e.g. 8x8=3.
    #[arg(long = "kappa-group", value_parser = parse_override)]
    kappa_group: Vec<((usize, usize), usize)>,
    /// Random seed; falls back to CDDP_SEED.
    #[arg(long, env = "CDDP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy)]
enum KappaArg {
    All,
    Size(usize),
}

impl std::str::FromStr for KappaArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(KappaArg::All);
        }
        s.parse().map(KappaArg::Size).map_err(|_| format!("expected a size or `all`, found `{s}`"))
    }
}

fn parse_override(s: &str) -> Result<((usize, usize), usize), String> {
    let bad = || format!("expected ORIGINSxDESTINATIONS=K, found `{s}`");
    let (key, k) = s.split_once('=').ok_or_else(bad)?;
    let (m, n) = key.split_once('x').ok_or_else(bad)?;
    Ok(((m.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?), k.parse().map_err(|_| bad())?))
}

impl ClusterArgs {
    fn rule(&self, instance: &Instance) -> KappaRule {
        let default = match self.kappa {
            KappaArg::All => instance.scenarios().len().max(1),
            KappaArg::Size(k) => k,
        };
        KappaRule { default, overrides: self.kappa_group.iter().copied().collect::<BTreeMap<_, _>>() }
    }
}

#[derive(Args)]
struct LimitArgs {
    /// Seconds per submodel solve.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Branch-and-bound nodes per submodel solve.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Worker threads for independent submodels.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl LimitArgs {
    fn limits(&self, seed: u64) -> Result<SubmodelLimits, AppError> {
        let time_limit = match self.time_limit {
            Some(t) if !(t.is_finite() && t > 0.0) => return Err(AppError::Usage("--time-limit must be positive".into())),
            t => t.map(Duration::from_secs_f64),
        };
        Ok(SubmodelLimits { time_limit, node_limit: self.node_limit, lsh: LshParams { seed, ..LshParams::default() } })
    }
}

#[derive(Args)]
struct DimsArgs {
    #[arg(required = true, num_args = 1..)]
    instances: Vec<PathBuf>,
    /// Also report the cluster count and the largest cluster's model.
    #[arg(long)]
    clusters: bool,
    #[command(flatten)]
    cluster: ClusterArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Export one cluster's submodel (1-based) instead of the full model.
    #[arg(long)]
    cluster: Option<usize>,
    #[arg(long, value_enum, default_value = "full")]
    part: PartArg,
    #[command(flatten)]
    clusters: ClusterArgs,
}

#[derive(Args)]
struct BoundsArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "1")]
    option: OptionArg,
    #[command(flatten)]
    cluster: ClusterArgs,
    #[command(flatten)]
    limits: LimitArgs,
    /// Leave timing columns empty, for comparable reports.
    #[arg(long)]
    no_times: bool,
    /// Write the table as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Scs4bArgs {
    instance: PathBuf,
    #[command(flatten)]
    cluster: ClusterArgs,
    /// Largest fraction of scenarios an accepted solution may outsource.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Capacity levels added per escalation.
    #[arg(long, default_value_t = 1)]
    delta: usize,
    #[arg(long, value_enum, default_value = "1")]
    option: OptionArg,
    /// Compute the lower bounds of both options.
    #[arg(long)]
    both_bounds: bool,
    #[arg(long, value_enum, default_value = "levels")]
    escalation: EscalationArg,
    #[arg(long, value_enum, default_value = "fallback")]
    basic: BasicArg,
    /// Exact scenario solves when origins times strip doors is at most this.
    #[arg(long, default_value_t = 64)]
    omega_threshold: usize,
    #[command(flatten)]
    limits: LimitArgs,
    /// Incumbent of another method, for the goodness ratio.
    #[arg(long)]
    reference_value: Option<f64>,
    /// Also enumerate the exact optimum (small instances only).
    #[arg(long)]
    oracle: bool,
    /// Write the report row as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the trial log as CSV.
    #[arg(long)]
    trials: Option<PathBuf>,
    /// Write the incumbent as a solution file.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Leave timing columns empty, for comparable reports.
    #[arg(long)]
    no_times: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    /// Refuse instances whose search space is larger.
    #[arg(long, default_value_t = 1e8)]
    max_leaves: f64,
    /// Write the optimum as a solution file.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OmegaArgs {
    instance: PathBuf,
    /// Scenario number, 1-based.
    #[arg(long)]
    scenario: usize,
    #[arg(long)]
    design: PathBuf,
    /// Give uninstalled doors their basic capacity.
    #[arg(long)]
    basic: bool,
    #[arg(long, default_value_t = 64)]
    omega_threshold: usize,
    /// Random seed; falls back to CDDP_SEED.
    #[arg(long, env = "CDDP_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the assignment as JSON.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Error)]
enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Testbed(#[from] TestbedError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Scs4b(#[from] Scs4bError),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            _ => 3,
        }
    }
}

fn print(table: &Table, output: &Output) {
    print!("{}", table.render(output.format.into()));
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    Ok(io::write_text(path, &text)?)
}

fn name_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn generate(a: GenerateArgs) -> Result<(), AppError> {
    let spec = BscSpec {
        n_nodes: a.nodes,
        n_doors: a.doors,
        slack_set: a.slack,
        density: a.density,
        flow_range: (a.flow_min, a.flow_max),
        levels: a.levels,
        cost_factor: a.cost_factor,
        door_bound_offset: a.door_offset,
        outsourcing_penalty: a.penalty,
        seed: a.seed,
    };
    let inst = generate_bsc(&spec).map_err(|e| AppError::Usage(e.to_string()))?;
    io::write_instance(&a.out, &inst)?;
    print(&report::summary_table(&[(name_of(&a.out), summarize(&inst))]), &a.output);
    Ok(())
}

fn merge(a: MergeArgs) -> Result<(), AppError> {
    let members = a.instances.iter().map(|p| io::read_instance(p)).collect::<Result<Vec<_>, _>>()?;
    let spec = MergeSpec { levels: a.levels, door_bound_offset: a.door_offset, outsourcing_penalty: a.penalty };
    let inst = merge_bsc(&spec, &members)?;
    io::write_instance(&a.out, &inst)?;
    print(&report::summary_table(&[(name_of(&a.out), summarize(&inst))]), &a.output);
    Ok(())
}

fn dims(a: DimsArgs) -> Result<(), AppError> {
    let mut rows = Vec::new();
    for path in &a.instances {
        let inst = io::read_instance(path)?;
        let full = count_dims(&build_lip(&inst));
        let cluster = if a.clusters {
            let set = generate_clusters(&inst, &a.cluster.rule(&inst), a.cluster.seed)?;
            // largest by scenario count, then by model size
            let largest = set
                .clusters
                .iter()
                .map(|c| (c.scenarios.len(), count_dims(&build_c_submodel(&inst, c))))
                .max_by_key(|(n, d)| (*n, d.n_rows));
            largest.map(|(n, d)| (set.clusters.len(), n, d))
        } else {
            None
        };
        rows.push(DimsRow { instance: name_of(path), full, cluster });
    }
    print(&report::dims_table(&rows), &a.output);
    Ok(())
}

fn export(a: ExportArgs) -> Result<(), AppError> {
    let inst = io::read_instance(&a.instance)?;
    let milp = match a.cluster {
        None => build_lip(&inst),
        Some(k) => {
            let set = generate_clusters(&inst, &a.clusters.rule(&inst), a.clusters.seed)?;
            let c = k
                .checked_sub(1)
                .and_then(|i| set.clusters.get(i))
                .ok_or_else(|| AppError::Usage(format!("--cluster must lie in 1..={}", set.clusters.len())))?;
            match a.part {
                PartArg::Full => build_c_submodel(&inst, c),
                PartArg::Strip => cddp_core::cluster::build_strip_c_submodel(&inst, c),
                PartArg::Stack => cddp_core::cluster::build_stack_c_submodel(&inst, c),
            }
        }
    };
    io::write_text(&a.out, &write_lp(&milp))?;
    let d = count_dims(&milp);
    eprintln!("{}: {} rows, {} binaries, {} continuous, {} nonzeros", a.out.display(), d.n_rows, d.n_binary, d.n_continuous, d.n_nonzeros);
    Ok(())
}

fn bounds(a: BoundsArgs) -> Result<(), AppError> {
    let inst = io::read_instance(&a.instance)?;
    let set = generate_clusters(&inst, &a.cluster.rule(&inst), a.cluster.seed)?;
    let limits = a.limits.limits(a.cluster.seed)?;
    let run = cluster_bounds(&inst, &set, a.option.into(), &limits, a.limits.jobs);
    let members: Vec<Vec<usize>> = set.clusters.iter().map(|c| c.scenarios.clone()).collect();
    let table = report::bounds_table(&run, &members, !a.no_times);
    if let Some(path) = &a.report {
        io::write_text(path, &table.render(Format::Csv))?;
    }
    print(&table, &a.output);
    Ok(())
}

fn run_scs4b(a: Scs4bArgs) -> Result<(), AppError> {
    let inst = io::read_instance(&a.instance)?;
    let limits = a.limits.limits(a.cluster.seed)?;
    let params = Scs4bParams {
        kappa: a.cluster.rule(&inst),
        seed: a.cluster.seed,
        rho: a.rho,
        delta: a.delta,
        option: a.option.into(),
        both_bounds: a.both_bounds,
        limits,
        omega: OmegaPolicy { exact_threshold: a.omega_threshold, lsh: limits.lsh, ..OmegaPolicy::default() },
        escalation: match a.escalation {
            EscalationArg::Levels => Escalation::Levels,
            EscalationArg::Saturate => Escalation::Saturate,
        },
        basic: match a.basic {
            BasicArg::Fallback => BasicCapacity::Fallback,
            BasicArg::Always => BasicCapacity::Always,
        },
        jobs: a.limits.jobs,
        reference_value: a.reference_value,
    };
    params.validate().map_err(|e| AppError::Usage(e.to_string()))?;
    let rep = scs4b::run(&inst, &params)?;
    let z_star = match (&rep.refined, a.oracle) {
        (Some(refined), true) => brute_force_oracle(refined, &OracleLimits::default())?.incumbent,
        _ => None,
    };
    let mut table = report::scs4b_table();
    report::scs4b_row(&mut table, &name_of(&a.instance), &rep, params.option, z_star, !a.no_times);
    if let Some(path) = &a.report {
        io::write_text(path, &table.render(Format::Csv))?;
    }
    if let Some(path) = &a.trials {
        io::write_text(path, &report::trials_table(&rep).render(Format::Csv))?;
    }
    if let (Some(path), Some(sol), Some(v)) = (&a.solution, &rep.solution, rep.incumbent) {
        let mut json = io::solution_to_json(sol, v);
        json["scenarios"] = serde_json::Value::from(rep.kept.clone());
        write_json(path, &json)?;
    }
    print(&table, &a.output);
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<(), AppError> {
    let inst = io::read_instance(&a.instance)?;
    let r = brute_force_oracle(&inst, &OracleLimits { max_leaves: a.max_leaves })?;
    let mut t = Table::new(&["instance", "status", "value", "leaves"]);
    t.push(vec![name_of(&a.instance), r.status.as_str().into(), report::raw(r.incumbent), r.nodes.to_string()]);
    if let (Some(path), Some(sol), Some(v)) = (&a.solution, &r.solution, r.incumbent) {
        write_json(path, &io::solution_to_json(sol, v))?;
    }
    print(&t, &a.output);
    Ok(())
}

fn solve_omega_cmd(a: OmegaArgs) -> Result<(), AppError> {
    let inst = io::read_instance(&a.instance)?;
    let n = inst.scenarios().len();
    let w = a
        .scenario
        .checked_sub(1)
        .filter(|&w| w < n)
        .ok_or_else(|| AppError::Usage(format!("--scenario must lie in 1..={n}")))?;
    let design = io::parse_design(&io::read_text(&a.design)?, &inst)?;
    let sub = OmegaSubmodel::from_design(&inst, w, &design, a.basic);
    let policy = OmegaPolicy { exact_threshold: a.omega_threshold, lsh: LshParams { seed: a.seed, ..LshParams::default() }, ..OmegaPolicy::default() };
    let (method, r) = solve_omega(&sub, &policy);
    let sol = r.solution.expect("scenario solves keep a solution");
    let mut t = Table::new(&["scenario", "method", "status", "value", "bound", "out"]);
    t.push(vec![
        a.scenario.to_string(),
        method.as_str().into(),
        r.status.as_str().into(),
        report::raw(r.incumbent),
        report::raw(r.bound),
        sol.outsourcing_flags().to_string(),
    ]);
    if let Some(path) = &a.solution {
        write_json(path, &io::assignment_to_json(&sol))?;
    }
    print(&t, &a.output);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Merge(a) => merge(a),
        Command::Dims(a) => dims(a),
        Command::ExportLip(a) => export(a),
        Command::Bounds(a) => bounds(a),
        Command::Scs4b(a) => run_scs4b(a),
        Command::Oracle(a) => oracle(a),
        Command::SolveOmega(a) => solve_omega_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
