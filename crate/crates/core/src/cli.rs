//! Command-line front end: argument and config-file parsing, dispatch, and
//! JSON/CSV emission.
//!
//! Every report echoes the effective configuration. The thread count is not
//! echoed, so output is byte-identical across `--threads` values.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::balls;
use crate::correlations::{self, AtomicAction, FiniteSupportObservable};
use crate::cost::{self, FiniteRelation, GeneratingWeights, WeightedFiniteSpace};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::group::MetricGroup;
use crate::horospace;
use crate::onp::{self, OnpMode, OnpQuery};
use crate::parse::{parse_element, parse_elements, parse_group, split_top_level};
use crate::poisson;
use crate::scalar::{parse_rational, Scalar};
use crate::Rational;

pub const SUBCOMMANDS: &[&str] = &[
    "growth",
    "shells",
    "subadd",
    "balanced",
    "comparable",
    "separated",
    "onp",
    "onp-sweep",
    "witness",
    "horo-census",
    "horo-mass",
    "horo-section",
    "corr",
    "poisson-sample",
    "cost-finite",
    "cost-ncost",
    "cost-bound",
    "fixed-prob",
    "validate",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "horocost", version, about = "Word-metric growth, horofunctions, Poisson graphings and exact costs")]
pub struct Cli {
    /// Plain `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads for parallel sections; does not affect output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Element budget; defaults to the environment or a built-in cap.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Print wall-clock time to stderr.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(rename_all = "kebab-case")]
pub enum Command {
    /// Ball and sphere sizes with `log|B(n)|/n`.
    Growth(GrowthArgs),
    /// Elements of the shell `SS(n, ε)`.
    Shells(ShellArgs),
    /// Check that `S(n+m) ⊂ SS(n,ε)·SS(m,ε)`.
    Subadd(SubaddArgs),
    /// Factor-to-product ball ratios.
    Balanced(BalancedArgs),
    /// Shell ratio sequences of two groups.
    Comparable(ComparableArgs),
    /// Greedy `F`-separated set.
    Separated(SeparatedArgs),
    /// Overlapping-neighborhoods ratio at one `(n, r)`.
    Onp(OnpArgs),
    /// Overlapping-neighborhoods ratios over a grid.
    OnpSweep(OnpSweepArgs),
    /// Product-group witness path with its three distance bounds.
    Witness(WitnessArgs),
    /// Distinct horofunction restrictions over a sphere.
    HoroCensus(HoroCensusArgs),
    /// `μ_n(H_{≤t})` with the growth bound.
    HoroMass(HoroMassArgs),
    /// Section witness for a horofunction `d_x − n`.
    HoroSection(HoroSectionArgs),
    /// Correlation table and pattern measure of a labeled action.
    Corr(CorrArgs),
    /// Poisson counts on a weighted atom set.
    PoissonSample(PoissonArgs),
    /// Exact cost of a finite measured equivalence relation.
    CostFinite(CostFiniteArgs),
    /// Normalized cost on a complete section.
    CostNcost(CostNcostArgs),
    /// Monte Carlo weight and degree accounting for the Poisson graphing.
    CostBound(CostBoundArgs),
    /// Probability that two Poisson counts agree.
    FixedProb(FixedProbArgs),
    /// Sampled check of the quasi-metric axioms.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GrowthArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long, default_value_t = 5)]
    pub nmax: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ShellArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub eps: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct SubaddArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub eps: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct BalancedArgs {
    /// A product group.
    #[arg(long)]
    pub group: String,
    /// Factor index, 1 or 2.
    #[arg(long, default_value_t = 1)]
    pub factor: usize,
    #[arg(long, default_value_t = 6)]
    pub nmax: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ComparableArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub group2: String,
    #[arg(long, default_value_t = 1)]
    pub eps: u64,
    #[arg(long, default_value_t = 8)]
    pub nmax: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SeparatedArgs {
    #[arg(long)]
    pub group: String,
    /// Comma-separated window containing `e`.
    #[arg(long)]
    pub window: String,
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub radius: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct OnpArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub r: u64,
    /// Enlargement `C`; defaults to `2ε + C_q`.
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long)]
    pub m: u64,
    /// Sample this many pairs instead of enumerating all of them.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct OnpSweepArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub r_list: Vec<u64>,
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct WitnessArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub eps: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct HoroCensusArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub radius: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct HoroMassArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct HoroSectionArgs {
    #[arg(long)]
    pub group: String,
    /// Base point `x` of `h = d_x − level`.
    #[arg(long)]
    pub x: String,
    #[arg(long, allow_negative_numbers = true)]
    pub level: i64,
    #[arg(long)]
    pub eps: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct CorrArgs {
    /// `regular(<group>)`, `regular(<group>, <weight>)` or
    /// `permutations(<file.csv>)`.
    #[arg(long)]
    pub action: String,
    /// CSV of `atom,label` rows.
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long)]
    pub window: String,
    /// Optional second labeled action to measure the distance to.
    #[arg(long, requires = "obs2")]
    pub action2: Option<String>,
    #[arg(long, requires = "action2")]
    pub obs2: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PoissonArgs {
    /// `id=weight` pairs, e.g. `u=3,v=1/2`.
    #[arg(long)]
    pub weights: String,
    #[arg(long, default_value_t = 1)]
    pub draws: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct CostFiniteArgs {
    /// Atom weights in index order, e.g. `1/4,1/4,1/4,1/4`.
    #[arg(long)]
    pub weights: String,
    /// Classes of atom indices separated by `;`, e.g. `0,1,2;3`.
    #[arg(long)]
    pub classes: String,
}

#[derive(Args, Debug, Serialize)]
pub struct CostNcostArgs {
    #[arg(long)]
    pub weights: String,
    #[arg(long)]
    pub classes: String,
    /// Atom indices of the section.
    #[arg(long)]
    pub section: String,
}

#[derive(Args, Debug, Serialize)]
pub struct CostBoundArgs {
    #[arg(long)]
    pub group: String,
    /// `element=weight` pairs defining `S`.
    #[arg(long)]
    pub s: String,
    /// Undirected edges of `G` as `u-v` pairs, e.g. `e-a,a-ab`.
    #[arg(long, default_value = "")]
    pub edges: String,
    /// Percolation probability on every generator and its inverse.
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FixedProbArgs {
    #[arg(long)]
    pub mass: String,
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 4)]
    pub radius: u64,
}

/// Parsed invocation plus the config-file overrides that were applied.
#[derive(Debug)]
pub struct RunConfig {
    pub cli: Cli,
    pub overrides: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub config: Map<String, Value>,
    pub result: Value,
    #[serde(skip)]
    pub elapsed: f64,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Joins two-word forms such as `horo census` into `horo-census`.
fn join_two_word(args: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(args.len());
    let mut i = 0;
    while i < args.len() {
        if i + 1 < args.len() {
            let joined = format!("{}-{}", args[i], args[i + 1]);
            if SUBCOMMANDS.contains(&joined.as_str()) && !SUBCOMMANDS.contains(&args[i].as_str()) {
                out.push(joined);
                i += 2;
                continue;
            }
        }
        out.push(args[i].clone());
        i += 1;
    }
    out
}

fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("{}:{}: expected `key = value`", path.display(), lineno + 1)))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Merges a `--config` file into the argument list. Keys already given as
/// flags are skipped and recorded as overrides; unknown keys are rejected by
/// the parser.
pub fn expand_args(raw: Vec<String>) -> Result<(Vec<String>, Vec<String>)> {
    let mut args = join_two_word(raw);
    let mut config = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(config_error("--config needs a path"));
            }
            config = Some(args[i + 1].clone());
            args.drain(i..i + 2);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            config = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = config else {
        return Ok((args, Vec::new()));
    };
    let entries = read_config_file(Path::new(&path))?;
    let given: BTreeSet<String> = args
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let has_command = args.iter().skip(1).any(|a| SUBCOMMANDS.contains(&a.as_str()));
    let mut overrides = Vec::new();
    let mut extra = Vec::new();
    let mut command = None;
    for (k, v) in entries {
        if k == "command" {
            command = Some(v);
            continue;
        }
        if given.contains(&k) {
            overrides.push(format!("{k}: flag overrides config value `{v}`"));
            continue;
        }
        match v.as_str() {
            "true" if k == "timing" => extra.push(format!("--{k}")),
            "false" if k == "timing" => {}
            _ => {
                extra.push(format!("--{k}"));
                extra.push(v);
            }
        }
    }
    if !has_command {
        let cmd = command.ok_or_else(|| config_error("no subcommand given on the command line or in the config file"))?;
        let cmd = join_two_word(cmd.split_whitespace().map(String::from).collect()).join(" ");
        args.insert(1.min(args.len()), cmd);
    }
    args.extend(extra);
    Ok((args, overrides))
}

pub fn parse_config(raw: Vec<String>) -> std::result::Result<RunConfig, ParseOutcome> {
    let (args, overrides) = expand_args(raw).map_err(ParseOutcome::Error)?;
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(RunConfig { cli, overrides }),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                Err(ParseOutcome::Display(e.to_string()))
            }
            _ => Err(ParseOutcome::Error(Error::Parse(e.to_string().trim().to_string()))),
        },
    }
}

/// Non-run outcomes of argument parsing.
#[derive(Debug)]
pub enum ParseOutcome {
    Display(String),
    Error(Error),
}

fn group_from(desc: &str, budget: Option<usize>) -> Result<MetricGroup> {
    let g = parse_group(desc)?;
    Ok(match budget {
        Some(b) => g.with_budget(b),
        None => g,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn rational_arg(text: &str) -> Result<Rational> {
    parse_rational(text.trim()).ok_or_else(|| Error::Parse(format!("bad rational `{text}`")))
}

fn index_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad atom index `{s}`"))))
        .collect()
}

fn indexed_space(weights: &str) -> Result<WeightedFiniteSpace<Rational>> {
    let ws = weights.split(',').map(rational_arg).collect::<Result<Vec<_>>>()?;
    WeightedFiniteSpace::new(ws.into_iter().enumerate().map(|(i, w)| (i.to_string(), w)))
}

fn relation(space: &WeightedFiniteSpace<Rational>, classes: &str) -> Result<FiniteRelation> {
    let classes = classes.split(';').map(index_list).collect::<Result<Vec<_>>>()?;
    FiniteRelation::new(space, classes)
}

fn load_action(desc: &str, budget: Option<usize>) -> Result<(AtomicAction<Rational>, Option<MetricGroup>)> {
    let t = desc.trim();
    let inner = |prefix: &str| t.strip_prefix(prefix).and_then(|s| s.strip_suffix(')'));
    if let Some(args) = inner("regular(") {
        let parts = split_top_level(args);
        let group = group_from(parts[0], budget)?;
        let weight = match parts.get(1) {
            Some(w) => rational_arg(w)?,
            None => Rational::from_integer(1.into()),
        };
        return Ok((AtomicAction::regular(group.clone(), weight)?, Some(group)));
    }
    if let Some(path) = inner("permutations(") {
        let text = std::fs::read_to_string(path.trim())
            .map_err(|source| Error::Io { path: path.to_string(), source })?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut weights = Vec::new();
        let mut images: Vec<Vec<usize>> = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            weights.push(rational_arg(&rec[0])?);
            for (k, cell) in rec.iter().skip(1).enumerate() {
                if images.len() <= k {
                    images.push(Vec::new());
                }
                images[k].push(cell.parse().map_err(|_| Error::Parse(format!("bad image `{cell}`")))?);
            }
        }
        return Ok((AtomicAction::finite(weights, images)?, None));
    }
    Err(Error::Parse(format!("unknown action descriptor `{t}`")))
}

fn acting_group(action: &AtomicAction<Rational>, group: &Option<MetricGroup>) -> Result<MetricGroup> {
    match (action, group) {
        (_, Some(g)) => Ok(g.clone()),
        (AtomicAction::Finite { generators, .. }, None) => MetricGroup::free(generators.len().max(1) as u8),
        (AtomicAction::Regular { group, .. }, None) => Ok(group.clone()),
    }
}

fn load_observable(path: &Path, atom_group: Option<&MetricGroup>) -> Result<FiniteSupportObservable> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut labels = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("observable rows need `atom,label`, got {} fields", rec.len())));
        }
        if rec[0].eq_ignore_ascii_case("atom") {
            continue;
        }
        let atom = match atom_group {
            Some(g) => parse_element(g, &rec[0])?,
            None => Element::Finite(
                rec[0].trim_start_matches('#').parse().map_err(|_| Error::Parse(format!("bad atom `{}`", &rec[0])))?,
            ),
        };
        labels.push((atom, rec[1].to_string()));
    }
    Ok(FiniteSupportObservable::new(labels))
}

fn pattern_rows(pm: &crate::ExactPatternMeasure) -> Value {
    let rows: Vec<Value> = pm
        .masses()
        .iter()
        .map(|(p, m)| {
            let pattern: Vec<String> = p.iter().map(|l| l.clone().unwrap_or_else(|| "*".into())).collect();
            json!({ "pattern": pattern.join(" "), "mass": m.render() })
        })
        .collect();
    Value::Array(rows)
}

fn run_command(cli: &Cli) -> Result<Value> {
    let budget = cli.budget;
    let seed = cli.seed;
    Ok(match &cli.command {
        Command::Growth(a) => {
            let g = group_from(&a.group, budget)?;
            let t = balls::growth_table(&g, a.nmax)?;
            let rows: Vec<Value> = (0..t.ball.len())
                .map(|n| json!({ "n": n, "ball": t.ball[n], "sphere": t.sphere[n], "log_ratio": t.log_ratio[n] }))
                .collect();
            json!({ "group": t.group, "fekete_bound": t.fekete_bound, "rows": rows })
        }
        Command::Shells(a) => {
            let g = group_from(&a.group, budget)?;
            let eps = a.eps.unwrap_or(g.slack());
            let mut elements = balls::shell(&g, a.n, eps)?;
            elements.sort();
            let rows: Vec<Value> =
                elements.iter().map(|x| json!({ "element": x.to_string(), "length": g.len(x) })).collect();
            json!({ "n": a.n, "eps": eps, "count": elements.len(), "rows": rows })
        }
        Command::Subadd(a) => {
            let g = group_from(&a.group, budget)?;
            let eps = a.eps.unwrap_or(g.slack());
            let r = balls::check_subadditivity(&g, a.n, a.m, eps)?;
            let mut v = to_value(&r);
            v["passed"] = json!(r.passed());
            v
        }
        Command::Balanced(a) => {
            let g = group_from(&a.group, budget)?;
            let rows = (0..=a.nmax)
                .map(|n| {
                    balls::balanced_ratio_by_index(&g, a.factor, n)
                        .map(|r| json!({ "n": n, "ratio": r.render() }))
                })
                .collect::<Result<Vec<_>>>()?;
            json!({ "group": g.to_string(), "factor": a.factor, "rows": rows })
        }
        Command::Comparable(a) => {
            let g1 = group_from(&a.group, budget)?;
            let g2 = group_from(&a.group2, budget)?;
            let r = balls::comparable_growth_report(&g1, &g2, a.eps, a.nmax)?;
            let rows: Vec<Value> = (0..r.f1.len())
                .map(|n| json!({ "n": n, "f1": r.f1[n].render(), "f2": r.f2[n].render() }))
                .collect();
            json!({ "group1": r.group1, "group2": r.group2, "eps": r.eps, "residues": to_value(&r.residues), "rows": rows })
        }
        Command::Separated(a) => {
            let g = group_from(&a.group, budget)?;
            let window = parse_elements(&g, &a.window)?;
            let set = balls::find_separated_set(&g, &window, a.size, a.radius)?;
            let rows: Vec<Value> = set.iter().map(|x| json!({ "element": x.to_string() })).collect();
            json!({ "size": set.len(), "rows": rows })
        }
        Command::Onp(a) => {
            let g = group_from(&a.group, budget)?;
            let c = a.c.unwrap_or(2 * g.slack() + g.quasi_constant());
            let mode = match a.samples {
                Some(samples) => OnpMode::Sampled { samples, seed },
                None => OnpMode::Exact,
            };
            let r = onp::onp_statistic(&OnpQuery { group: &g, n: a.n, r: a.r, c, m: a.m, mode })?;
            let mut v = to_value(&r);
            v["ratio"] = json!(r.ratio());
            v
        }
        Command::OnpSweep(a) => {
            let g = group_from(&a.group, budget)?;
            let c = a.c.unwrap_or(2 * g.slack() + g.quasi_constant());
            let mode = match a.samples {
                Some(samples) => OnpMode::Sampled { samples, seed },
                None => OnpMode::Exact,
            };
            let rows = onp::onp_sweep(&g, &a.n_list, &a.r_list, c, a.m, mode)?;
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut v = to_value(r);
                    v["ratio"] = json!(r.ratio());
                    v
                })
                .collect();
            json!({ "c": c, "rows": rows })
        }
        Command::Witness(a) => {
            let g = group_from(&a.group, budget)?;
            let eps = a.eps.unwrap_or(g.slack());
            let x = parse_element(&g, &a.x)?;
            let y = parse_element(&g, &a.y)?;
            let w = onp::witness_path(&g, &x, &y, eps)?;
            let mut v = to_value(&w);
            v["all_hold"] = json!(w.all_hold());
            v
        }
        Command::HoroCensus(a) => {
            let g = group_from(&a.group, budget)?;
            let c = horospace::boundary_census(&g, a.n, a.radius)?;
            let rows: Vec<Value> = c
                .patterns
                .iter()
                .map(|p| {
                    let values: Vec<String> = p.values.iter().map(i64::to_string).collect();
                    json!({ "values": values.join(" "), "count": p.count })
                })
                .collect();
            json!({ "n": c.n, "radius": c.radius, "window": c.window, "patterns": c.patterns.len(), "rows": rows })
        }
        Command::HoroMass(a) => {
            let g = group_from(&a.group, budget)?;
            to_value(&horospace::mu_mass(&g, a.n, a.t)?)
        }
        Command::HoroSection(a) => {
            let g = group_from(&a.group, budget)?;
            let eps = a.eps.unwrap_or(g.slack());
            let x = parse_element(&g, &a.x)?;
            let height = g.len(&x) as i64 - a.level;
            let radius = (height.max(0) as u64) + 2 * eps;
            let h = horospace::horofunction_window(&g, &x, a.level, radius)?;
            let y = horospace::section_witness(&g, &h, eps)?;
            let hy = g.len(&g.mul(&g.inv(&x), &y)) as i64 - a.level;
            json!({ "h_e": height, "eps": eps, "y": y.to_string(), "h_y": hy })
        }
        Command::Corr(a) => {
            let (action, group) = load_action(&a.action, budget)?;
            let acting = acting_group(&action, &group)?;
            let window = parse_elements(&acting, &a.window)?;
            let phi = load_observable(&a.obs, group.as_ref())?;
            let table = correlations::correlation_table(&action, &phi, &window)?;
            let pm = correlations::pushforward_window(&action, &phi, &window)?;
            let mut v = json!({
                "window": table.window().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "star_mass": pm.star_mass().render(),
                "patterns": pattern_rows(&pm),
                "rows": to_value(&table.rows()),
            });
            if let (Some(action2), Some(obs2)) = (&a.action2, &a.obs2) {
                let (action2, group2) = load_action(action2, budget)?;
                let phi2 = load_observable(obs2, group2.as_ref())?;
                let pm2 = correlations::pushforward_window(&action2, &phi2, &window)?;
                v["distance"] = json!(correlations::wc_distance(&pm, &pm2)?.render());
            }
            v
        }
        Command::PoissonSample(a) => {
            let mut pairs = Vec::new();
            for item in a.weights.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (id, w) = item
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected `id=weight`, got `{item}`")))?;
                pairs.push((id.trim().to_string(), rational_arg(w)?));
            }
            let space = WeightedFiniteSpace::new(pairs)?;
            let rows: Vec<Value> = (0..a.draws)
                .map(|d| {
                    let config = poisson::poisson_sample(&space, seed.wrapping_add(d));
                    let mut row = Map::new();
                    row.insert("draw".into(), json!(d));
                    for atom in space.atoms() {
                        row.insert(atom.clone(), json!(config.count(atom)));
                    }
                    Value::Object(row)
                })
                .collect();
            json!({ "total_mass": space.total().render(), "rows": rows })
        }
        Command::CostFinite(a) => {
            let space = indexed_space(&a.weights)?;
            let rel = relation(&space, &a.classes)?;
            let c = cost::finite_cost(&space, &rel)?;
            json!({ "cost": c.render(), "classes": rel.classes(), "total_mass": space.total().render() })
        }
        Command::CostNcost(a) => {
            let space = indexed_space(&a.weights)?;
            let rel = relation(&space, &a.classes)?;
            let section = index_list(&a.section)?;
            let r = cost::normalized_cost(&space, &rel, &section)?;
            to_value(&r.report(space.total()))
        }
        Command::CostBound(a) => {
            let g = group_from(&a.group, budget)?;
            let mut pairs = Vec::new();
            for item in split_top_level(&a.s).into_iter().filter(|s| !s.is_empty()) {
                let (x, w) = item
                    .rsplit_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected `element=weight`, got `{item}`")))?;
                pairs.push((parse_element(&g, x)?, rational_arg(w)?));
            }
            let s = WeightedFiniteSpace::new(pairs)?;
            let mut edges = Vec::new();
            for item in split_top_level(&a.edges).into_iter().filter(|s| !s.is_empty()) {
                let (u, v) =
                    item.split_once('-').ok_or_else(|| Error::Parse(format!("expected `u-v`, got `{item}`")))?;
                edges.push((parse_element(&g, u)?, parse_element(&g, v)?));
            }
            let edges = cost::symmetric_edges(edges);
            let p = if a.q == 0.0 { GeneratingWeights::zero() } else { GeneratingWeights::uniform_on_generators(&g, a.q)? };
            let r = cost::cost_bound_estimate(&g, &s, &edges, &p, a.trials, seed)?;
            let mut v = to_value(&r);
            v["passed"] = json!(r.passed());
            v
        }
        Command::FixedProb(a) => {
            let mass = rational_arg(&a.mass)?;
            to_value(&poisson::poisson_fixed_prob(&mass)?)
        }
        Command::Validate(a) => {
            let g = group_from(&a.group, budget)?;
            let r = g.validate_metric_axioms(a.trials, a.radius, seed)?;
            let mut v = to_value(&r);
            v["passed"] = json!(r.violations.is_empty());
            v
        }
    })
}

fn effective_config(config: &RunConfig) -> (String, Map<String, Value>) {
    let cli = &config.cli;
    let mut map = Map::new();
    let (name, args) = match to_value(&cli.command) {
        Value::Object(o) => o.into_iter().next().expect("externally tagged"),
        other => (other.as_str().unwrap_or_default().to_string(), Value::Null),
    };
    map.insert("command".into(), json!(name));
    if let Value::Object(args) = args {
        map.extend(args);
    }
    map.insert("seed".into(), json!(cli.seed));
    map.insert("format".into(), to_value(&cli.format));
    map.insert(
        "budget".into(),
        json!(cli.budget.unwrap_or_else(crate::group::budget_from_env)),
    );
    if !config.overrides.is_empty() {
        map.insert("overrides".into(), json!(config.overrides));
    }
    (name, map)
}

/// Runs the configured subcommand on a pool of the requested size.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.cli.threads {
        if t == 0 {
            return Err(Error::Invalid("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Invalid(e.to_string()))?;
    let result = pool.install(|| run_command(&config.cli))?;
    let (command, config_map) = effective_config(config);
    Ok(RunReport {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config_map,
        result,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn rational_decimal(s: &str) -> Option<f64> {
    let (n, d) = s.split_once('/')?;
    Some(n.parse::<f64>().ok()? / d.parse::<f64>().ok()?)
}

fn write_table(out: &mut String, rows: &[Value]) {
    let Some(Value::Object(first)) = rows.first() else {
        return;
    };
    let mut header: Vec<String> = Vec::new();
    for key in first.keys() {
        header.push(key.clone());
        let all_rational = rows.iter().all(|r| r.get(key).and_then(Value::as_str).is_some_and(|s| rational_decimal(s).is_some()));
        if all_rational {
            header.push(format!("{key}_decimal"));
        }
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        let record: Vec<String> = header
            .iter()
            .map(|h| match h.strip_suffix("_decimal") {
                Some(base) if !first.contains_key(h) => row
                    .get(base)
                    .and_then(Value::as_str)
                    .and_then(rational_decimal)
                    .map(|d| d.to_string())
                    .unwrap_or_default(),
                _ => row.get(h).map(cell).unwrap_or_default(),
            })
            .collect();
        w.write_record(&record).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}

impl RunReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => self.render_csv(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# version = {}\n", self.version));
        for (k, v) in &self.config {
            out.push_str(&format!("# {k} = {}\n", cell(v)));
        }
        match &self.result {
            Value::Object(o) if matches!(o.get("rows"), Some(Value::Array(_))) => {
                for (k, v) in o.iter().filter(|(k, _)| *k != "rows") {
                    out.push_str(&format!("# result.{k} = {}\n", cell(v)));
                }
                if let Some(Value::Array(rows)) = o.get("rows") {
                    write_table(&mut out, rows);
                }
            }
            other => {
                let mut pairs = Vec::new();
                flatten("", other, &mut pairs);
                let rows: Vec<Value> = pairs.into_iter().map(|(k, v)| json!({ "key": k, "value": v })).collect();
                write_table(&mut out, &rows);
            }
        }
        out
    }
}

/// Structured error line for stderr.
pub fn error_json(e: &Error) -> String {
    json!({ "error": { "code": e.code(), "message": e.to_string() } }).to_string()
}

/// Exit status for an error: 2 for budget exhaustion, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_budget() {
        2
    } else {
        1
    }
}

/// Full program behaviour; returns the process exit code.
pub fn main_with_args(raw: Vec<String>) -> i32 {
    let config = match parse_config(raw) {
        Ok(c) => c,
        Err(ParseOutcome::Display(text)) => {
            print!("{text}");
            return 0;
        }
        Err(ParseOutcome::Error(e)) => {
            eprintln!("{}", error_json(&e));
            return exit_code(&e);
        }
    };
    match run(&config) {
        Ok(report) => {
            print!("{}", report.render(config.cli.format));
            if config.cli.timing {
                eprintln!("wall_clock_seconds = {:.3}", report.elapsed);
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
