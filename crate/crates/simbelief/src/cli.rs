//! The `simbelief` command line: load models and maps, validate, evaluate
//! formulas, inspect relations, check morphisms, run the axiom schemes and
//! the bundled fixtures, and export DOT.
//!
//! Exit codes are uniform across subcommands: 0 for success (valid model,
//! formula true everywhere requested, all conditions pass), 1 for a semantic
//! negative (invalid model, false formula, failed condition, found
//! counterexample), 2 for usage, parse and load errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::model::Model;
use crate::morphism::{belief_gain_witness, check_morphism, check_positive_preservation, MapFile};
use crate::semantics::RelationTable;
use crate::syntax::{parse_with, Formula};
use crate::testlab::{check_scheme, run_fixture, Scheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SEMANTIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable supplying the default generator seed.
pub const SEED_ENV: &str = "SIMBELIEF_SEED";

#[derive(Parser)]
#[command(
    name = "simbelief",
    version,
    about = "Model checker for knowledge and belief on polychromatic simplicial models"
)]
struct Cli {
    /// Emit a single JSON document instead of text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file against the structural invariants
    Validate {
        /// Path to a model JSON file
        model: PathBuf,
    },
    /// Evaluate a formula at selected worlds
    Check {
        /// Path to a model JSON file
        model: PathBuf,
        /// Formula text; omit when using --formula-file
        formula: Option<String>,
        /// Read formulas from a file, one per line
        #[arg(long, conflicts_with = "formula")]
        formula_file: Option<PathBuf>,
        /// World to evaluate at; may repeat
        #[arg(long = "world")]
        worlds: Vec<String>,
        /// Evaluate at every world
        #[arg(long, conflicts_with = "worlds")]
        all: bool,
        /// Enable the experimental group modalities Sb{G} and B{G}
        #[arg(long)]
        experimental: bool,
    },
    /// Print multiplicities, indistinguishability, strict plausibility and
    /// the most plausible worlds for one agent
    Relations {
        /// Path to a model JSON file
        model: PathBuf,
        /// Agent to inspect
        #[arg(long)]
        agent: String,
    },
    /// Check the four morphism conditions for a map file
    Morphism {
        /// Path to a map JSON file ({"source", "target", "map"})
        map: PathBuf,
        /// Sweep all positive formulas of this depth over the shared atoms
        /// and assert backwards preservation
        #[arg(long)]
        positive_depth: Option<usize>,
        /// Search for a safe-belief gain witness for this atom
        #[arg(long)]
        belief_gain: Option<String>,
    },
    /// Run the axiom schemes with generated instantiations
    Axioms {
        /// Path to a model JSON file
        model: PathBuf,
        /// Formula pairs per scheme
        #[arg(long, default_value_t = 64)]
        budget: usize,
        /// Generator seed; defaults to SIMBELIEF_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
        /// Depth bound for generated formulas
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Run bundled fixtures (all of them when no names are given)
    Fixtures {
        /// Fixture names
        names: Vec<String>,
    },
    /// Export the 1-skeleton as Graphviz DOT
    ExportDot {
        /// Path to a model JSON file
        model: PathBuf,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the CLI; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version as "errors" with exit code 0.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            EXIT_USAGE
        }
    }
}

/// Anything that aborts a subcommand with a usage/load error (exit 2).
#[derive(Debug, thiserror::Error)]
enum CliFailure {
    #[error(transparent)]
    Load(#[from] crate::model::LoadError),
    #[error(transparent)]
    Parse(#[from] crate::syntax::ParseError),
    #[error(transparent)]
    Query(#[from] crate::model::QueryError),
    #[error(transparent)]
    Morphism(#[from] crate::morphism::MorphismError),
    #[error(transparent)]
    Testlab(#[from] crate::testlab::TestlabError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn dispatch(cli: Cli) -> Result<i32, CliFailure> {
    match cli.command {
        Command::Validate { model } => cmd_validate(&model, cli.json),
        Command::Check { model, formula, formula_file, worlds, all, experimental } => {
            cmd_check(&model, formula, formula_file, worlds, all, experimental, cli.json)
        }
        Command::Relations { model, agent } => cmd_relations(&model, &agent, cli.json),
        Command::Morphism { map, positive_depth, belief_gain } => {
            cmd_morphism(&map, positive_depth, belief_gain, cli.json)
        }
        Command::Axioms { model, budget, seed, depth } => {
            cmd_axioms(&model, budget, seed, depth, cli.json)
        }
        Command::Fixtures { names } => cmd_fixtures(names, cli.json),
        Command::ExportDot { model, out } => cmd_export_dot(&model, out, cli.json),
    }
}

fn load_model(path: &Path) -> Result<Model, CliFailure> {
    Ok(Model::from_file(path)?)
}

/// Loads and validates; an invalid model aborts with exit 1 after printing
/// the violations.
fn load_validated(path: &Path, json: bool) -> Result<Result<RelationTable, i32>, CliFailure> {
    let model = load_model(path)?;
    let report = model.validate();
    if !report.ok() {
        if json {
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "model": path.display().to_string(),
                    "ok": false,
                    "violations": report.violations,
                }))
                .expect("report serializes")
            );
        } else {
            eprintln!("model {} is invalid:", path.display());
            eprint!("{report}");
        }
        return Ok(Err(EXIT_SEMANTIC));
    }
    Ok(Ok(RelationTable::new(model)))
}

fn cmd_validate(path: &Path, json: bool) -> Result<i32, CliFailure> {
    let model = load_model(path)?;
    let report = model.validate();
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "model": path.display().to_string(),
                "ok": report.ok(),
                "violations": report.violations,
            }))
            .expect("report serializes")
        );
    } else if report.ok() {
        println!("ok");
    } else {
        print!("{report}");
    }
    Ok(if report.ok() { EXIT_OK } else { EXIT_SEMANTIC })
}

fn cmd_check(
    path: &Path,
    formula: Option<String>,
    formula_file: Option<PathBuf>,
    worlds: Vec<String>,
    all: bool,
    experimental: bool,
    json: bool,
) -> Result<i32, CliFailure> {
    let texts: Vec<String> = match (formula, formula_file) {
        (Some(f), None) => vec![f],
        (None, Some(file)) => std::fs::read_to_string(&file)
            .map_err(|source| CliFailure::Write { path: file.display().to_string(), source })?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect(),
        (None, None) => {
            return Err(CliFailure::Usage(
                "pass a formula or --formula-file".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if worlds.is_empty() && !all {
        return Err(CliFailure::Usage("pass --world NAME (repeatable) or --all".into()));
    }

    let formulas: Vec<Formula> = texts
        .iter()
        .map(|t| parse_with(t, experimental))
        .collect::<Result<_, _>>()?;

    let table = match load_validated(path, json)? {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };

    let world_names: Vec<String> = if all {
        table.model().worlds().iter().map(|w| w.name.clone()).collect()
    } else {
        for w in &worlds {
            if table.model().world_index(w).is_none() {
                return Err(crate::model::QueryError::UnknownWorld(w.clone()).into());
            }
        }
        worlds
    };

    let experimental_used = formulas.iter().any(Formula::uses_experimental);
    let mut results = Vec::new();
    let mut all_true = true;
    for (text, f) in texts.iter().zip(&formulas) {
        for w in &world_names {
            let value = table.eval(w, f)?;
            all_true &= value;
            results.push((text.clone(), w.clone(), value));
        }
    }

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "model": path.display().to_string(),
                "experimental": experimental_used,
                "results": results
                    .iter()
                    .map(|(f, w, v)| json!({"formula": f, "world": w, "value": v}))
                    .collect::<Vec<_>>(),
                "all_true": all_true,
            }))
            .expect("results serialize")
        );
    } else {
        if experimental_used {
            println!("# experimental: group modalities use the provisional group-plausibility semantics");
        }
        for (text, w, v) in &results {
            if texts.len() > 1 {
                println!("{w} {v} {text}");
            } else {
                println!("{w} {v}");
            }
        }
    }
    Ok(if all_true { EXIT_OK } else { EXIT_SEMANTIC })
}

fn cmd_relations(path: &Path, agent: &str, json: bool) -> Result<i32, CliFailure> {
    let table = match load_validated(path, json)? {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };
    let model = table.model();
    let a = model
        .agent_index(agent)
        .ok_or_else(|| crate::model::QueryError::UnknownAgent(agent.to_string()))?;
    let names: Vec<&str> = model.worlds().iter().map(|w| w.name.as_str()).collect();
    let n = names.len();

    let mult: Vec<(String, usize)> = names
        .iter()
        .map(|w| (w.to_string(), table.mult_idx(a, model.world_index(w).unwrap())))
        .collect();
    let sim_pairs: Vec<(String, String)> = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| table.sim_idx(a, x, y))
        .map(|(x, y)| (names[x].to_string(), names[y].to_string()))
        .collect();
    let strict_pairs: Vec<(String, String)> = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| table.plaus_lt_idx(a, x, y))
        .map(|(x, y)| (names[x].to_string(), names[y].to_string()))
        .collect();
    let min_sets: Vec<(String, Vec<&str>)> = names
        .iter()
        .map(|w| (w.to_string(), table.min_plausible(agent, w).expect("agent checked")))
        .collect();

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "model": path.display().to_string(),
                "agent": agent,
                "multiplicity": mult.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
                "sim": sim_pairs,
                "strictly_more_plausible": strict_pairs,
                "min": min_sets.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
            }))
            .expect("relations serialize")
        );
    } else {
        println!("agent {agent}");
        for (w, m) in &mult {
            println!("m_{agent}({w})={m}");
        }
        let fmt_pairs = |pairs: &[(String, String)]| {
            pairs
                .iter()
                .map(|(x, y)| format!("({x},{y})"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!("sim: {}", fmt_pairs(&sim_pairs));
        println!("strictly-more-plausible: {}", fmt_pairs(&strict_pairs));
        for (w, min) in &min_sets {
            println!("Min({w}) = {{{}}}", min.join(", "));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_morphism(
    map_path: &Path,
    positive_depth: Option<usize>,
    belief_gain: Option<String>,
    json: bool,
) -> Result<i32, CliFailure> {
    let map_file = MapFile::from_file(map_path)?;
    let (source, target) = map_file.load_models(map_path)?;
    for (label, model) in [("source", &source), ("target", &target)] {
        let report = model.validate();
        if !report.ok() {
            eprintln!("{label} model is invalid:");
            eprint!("{report}");
            return Ok(EXIT_SEMANTIC);
        }
    }
    let map = map_file.vertex_map();
    let report = check_morphism(&source, &target, &map)?;
    let src = RelationTable::new(source);
    let tgt = RelationTable::new(target);

    let mut exit = if report.is_morphism() { EXIT_OK } else { EXIT_SEMANTIC };

    let mut preservation = None;
    if let Some(depth) = positive_depth {
        let mut atoms: BTreeSet<String> = src.model().atom_universe();
        atoms.extend(tgt.model().atom_universe());
        let atoms: Vec<String> = atoms.into_iter().collect();
        let groups = crate::testlab::standard_groups(src.model().agents());
        let family = crate::testlab::positive_family(&atoms, &groups, depth);
        let mut violations = Vec::new();
        for f in &family {
            let pres = check_positive_preservation(&src, &tgt, &map, f)?;
            for world in pres.violations {
                violations.push((f.to_string(), world));
            }
        }
        if !violations.is_empty() {
            exit = EXIT_SEMANTIC;
        }
        preservation = Some((family.len(), violations));
    }

    let mut gain = None;
    if let Some(atom) = &belief_gain {
        gain = Some(belief_gain_witness(&src, &tgt, &map, atom)?);
    }

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "map": map_path.display().to_string(),
                "simplicial": report.simplicial,
                "color_preserving": report.color_preserving,
                "worlds_to_worlds": report.worlds_to_worlds,
                "valuation_preserving": report.valuation_preserving,
                "morphism": report.is_morphism(),
                "witnesses": report.witnesses,
                "preservation": preservation.as_ref().map(|(n, v)| json!({
                    "formulas": n,
                    "violations": v.iter().map(|(f, w)| json!({"formula": f, "world": w})).collect::<Vec<_>>(),
                })),
                "belief_gain": gain.as_ref().map(|g| json!(g)),
            }))
            .expect("morphism report serializes")
        );
    } else {
        let yn = |b: bool| if b { "yes" } else { "no" };
        println!("simplicial: {}", yn(report.simplicial));
        println!("color-preserving: {}", yn(report.color_preserving));
        println!("worlds-to-worlds: {}", yn(report.worlds_to_worlds));
        println!("valuation-preserving: {}", yn(report.valuation_preserving));
        println!("morphism: {}", yn(report.is_morphism()));
        for w in &report.witnesses {
            println!("witness: {w:?}");
        }
        if let Some((count, violations)) = &preservation {
            if violations.is_empty() {
                println!("preservation: all pass ({count} positive formulas)");
            } else {
                for (f, w) in violations {
                    println!("preservation violated: {f} at {w}");
                }
            }
        }
        if let Some(result) = &gain {
            match result {
                Some((world, agent)) => println!("witness: world {world}, agent {agent}"),
                None => println!("no belief-gain witness"),
            }
        }
    }
    Ok(exit)
}

fn cmd_axioms(
    path: &Path,
    budget: usize,
    seed: Option<u64>,
    depth: usize,
    json: bool,
) -> Result<i32, CliFailure> {
    let seed = match seed {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(text) => text
                .parse::<u64>()
                .map_err(|_| CliFailure::Usage(format!("{SEED_ENV} must be an integer, got `{text}`")))?,
            Err(_) => 0,
        },
    };
    let table = match load_validated(path, json)? {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };

    let outcomes: Vec<_> = Scheme::CORE
        .into_iter()
        .map(|scheme| check_scheme(&table, scheme, budget, depth, seed))
        .collect();
    let ok = outcomes.iter().all(|o| o.ok());

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "model": path.display().to_string(),
                "budget": budget,
                "seed": seed,
                "depth": depth,
                "ok": ok,
                "schemes": outcomes,
            }))
            .expect("outcomes serialize")
        );
    } else {
        for o in &outcomes {
            println!(
                "scheme {}: {} ({} instantiations, {} counterexamples)",
                o.scheme,
                if o.ok() { "ok" } else { "FAILED" },
                o.instantiations,
                o.counterexamples.len()
            );
            if let Some(ce) = o.counterexamples.first() {
                println!(
                    "  first counterexample: world {}, agent {}, phi = {}{}",
                    ce.world,
                    ce.agent,
                    ce.phi,
                    ce.psi.as_ref().map(|p| format!(", psi = {p}")).unwrap_or_default()
                );
            }
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_SEMANTIC })
}

fn cmd_fixtures(names: Vec<String>, json: bool) -> Result<i32, CliFailure> {
    let names: Vec<String> = if names.is_empty() {
        crate::testlab::fixtures::registry()
            .iter()
            .map(|f| f.name.to_string())
            .collect()
    } else {
        names
    };
    let mut reports = Vec::new();
    for name in &names {
        reports.push(run_fixture(name)?);
    }
    let ok = reports.iter().all(|r| r.ok());
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({"ok": ok, "fixtures": reports}))
                .expect("reports serialize")
        );
    } else {
        for report in &reports {
            for check in &report.checks {
                println!(
                    "[{}] {} {}",
                    if check.ok { "ok" } else { "FAIL" },
                    check.label,
                    check.detail.clone().unwrap_or_default()
                );
            }
        }
        println!("{}", if ok { "all fixtures pass" } else { "fixture failures" });
    }
    Ok(if ok { EXIT_OK } else { EXIT_SEMANTIC })
}

fn cmd_export_dot(path: &Path, out: Option<PathBuf>, json: bool) -> Result<i32, CliFailure> {
    let table = match load_validated(path, json)? {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };
    let dot = crate::dot::export_dot(table.model());
    let payload = if json {
        serde_json::to_string_pretty(&json!({
            "model": path.display().to_string(),
            "nodes": dot.nodes,
            "edges": dot.edges,
            "dot": dot.text,
        }))
        .expect("dot serializes")
            + "\n"
    } else {
        dot.text.clone()
    };
    match out {
        Some(file) => std::fs::write(&file, payload).map_err(|source| CliFailure::Write {
            path: file.display().to_string(),
            source,
        })?,
        None => print!("{payload}"),
    }
    Ok(EXIT_OK)
}
