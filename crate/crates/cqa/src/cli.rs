//! The `cqa` command line: `chase`, `classify`, `repairs`, `query` and
//! `gen`.
//!
//! Exit codes: 0 on success, 1 on user error (bad input, unsupported
//! query), 2 when an internal consistency check fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cqa_core::query::{consistent_answer_bounds_capped, consistent_answer_standard_capped};
use cqa_core::synth::{random_warehouse, SynthParams};
use cqa_core::{
    classify, confl_all, confl_min, cons_all, cons_answer_groupby, cons_answer_no_groupby, m_chase_generic_warehouse,
    m_chase_star, true_all, verify_repair, AnalyticQuery, ChaseResult, CombinedAnswer, IntervalAnswer, Oracle, Query,
    RepairAnswer, RepairSpace, StandardQuery, Tuple, Universe, Warehouse,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use crate::error::{Error, Result};
use crate::manifest::{load_warehouse, parse_cell, write_warehouse, Manifest};
use crate::output::{
    interval_cells, interval_json, mtuple_cells, mtuple_json, tuple_cells, tuple_json, value_json, Format, Report,
};
use crate::sql::parse_query;

/// Consistent query answering over star-schema warehouses.
#[derive(Debug, Parser)]
#[command(name = "cqa", version, about)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Suppress summary lines.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Seed for the random generator used by `gen`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Manifest selection shared by the warehouse commands.
#[derive(Debug, Args)]
pub struct Input {
    /// Warehouse manifest (JSON).
    #[arg(long, short)]
    pub manifest: PathBuf,
}

/// Chase algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// The star-specialized algorithm.
    Star,
    /// The generic fixpoint algorithm.
    Generic,
    /// Both, checking that they agree.
    Both,
}

/// Query evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Certified consistent answers (independent conditions only).
    Exact,
    /// Lower and upper bounds (any condition).
    Bounds,
    /// Brute force over every repair.
    Oracle,
}

/// Tuple set listed by `classify --set`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TupleSet {
    /// Every true tuple.
    True,
    /// True and conflict-free tuples.
    Consistent,
    /// True tuples involved in a conflict.
    Conflicting,
    /// Minimal conflicting tuples.
    ConflMin,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chase the warehouse and print the m-table.
    Chase {
        #[command(flatten)]
        input: Input,
        /// Algorithm to run.
        #[arg(long, value_enum, default_value_t = Algo::Star)]
        algo: Algo,
    },
    /// Classify tuples as false, true-consistent or true-conflicting.
    Classify {
        #[command(flatten)]
        input: Input,
        /// Tuple to classify, as `NAME=value,NAME=value`.
        #[arg(long = "tuple", short)]
        tuples: Vec<String>,
        /// List a whole tuple set instead.
        #[arg(long, value_enum)]
        set: Option<TupleSet>,
    },
    /// Enumerate the repairs.
    Repairs {
        #[command(flatten)]
        input: Input,
        /// Largest repair space to enumerate (default: manifest option).
        #[arg(long)]
        limit: Option<u64>,
        /// Check every repair against the definition.
        #[arg(long)]
        verify: bool,
    },
    /// Answer a query.
    Query {
        #[command(flatten)]
        input: Input,
        /// Query text.
        #[arg(long)]
        sql: String,
        /// Evaluation mode.
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
    },
    /// Write a random valid warehouse (manifest plus tables).
    Gen {
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Number of dimensions.
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Maximum rows per table.
        #[arg(long, default_value_t = 6)]
        rows: usize,
        /// Number of measures.
        #[arg(long, default_value_t = 1)]
        measures: usize,
        /// Drop the fact-key-to-measure dependencies.
        #[arg(long)]
        no_measure_fds: bool,
        /// Allow negative measure values.
        #[arg(long)]
        negative: bool,
    },
}

/// Parses `argv` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let sql = match &cli.command {
        Command::Query { sql, .. } => Some(sql.clone()),
        _ => None,
    };
    match execute(&cli) {
        Ok(report) => {
            let _ = out.write_all(report.render(cli.format, cli.quiet).as_bytes());
            0
        }
        Err(e) => {
            let _ = err.write_all(diagnostic(&e, sql.as_deref()).as_bytes());
            e.exit_code()
        }
    }
}

/// Human-readable diagnostic with the error code, a caret under the query
/// position when there is one, and a hint for common mistakes.
pub fn diagnostic(e: &Error, sql: Option<&str>) -> String {
    let mut s = format!("error[{}]: {e}\n", e.code());
    if let (Some(pos), Some(text)) = (e.position(), sql) {
        let col = text[..pos.min(text.len())].chars().count();
        s.push_str(&format!("  {text}\n  {}^\n", " ".repeat(col)));
    }
    if e.code() == "not_independent" {
        s.push_str("hint: exact answers need an independent condition; use `--mode bounds` for certain and possible answers\n");
    }
    s
}

fn execute(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Chase { input, algo } => {
            let (_, w) = load_warehouse(&input.manifest)?;
            chase_report(&w, *algo)
        }
        Command::Classify { input, tuples, set } => {
            let (m, w) = load_warehouse(&input.manifest)?;
            classify_report(&m, &w, tuples, *set)
        }
        Command::Repairs { input, limit, verify } => {
            let (m, w) = load_warehouse(&input.manifest)?;
            repairs_report(&m, &w, limit.unwrap_or(m.options.repair_limit), *verify)
        }
        Command::Query { input, sql, mode } => {
            let (m, w) = load_warehouse(&input.manifest)?;
            query_report(&m, &w, sql, *mode)
        }
        Command::Gen { out, dims, rows, measures, no_measure_fds, negative } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let p = SynthParams {
                dims: (*dims).max(1),
                measures: (*measures).max(1),
                max_rows: (*rows).max(1),
                measure_fds: !no_measure_fds,
                negative_measures: *negative,
                ..SynthParams::default()
            };
            let w = random_warehouse(&mut rng, &p)?;
            let path = write_warehouse(&w, out)?;
            let path = path.display().to_string();
            Ok(Report {
                json: json!({"manifest": path, "warehouse_size": w.size()}),
                summary: vec![format!("wrote {path} (W = {})", w.size())],
                ..Report::default()
            })
        }
    }
}

fn chase_json(c: &ChaseResult) -> Json {
    let u = c.universe();
    let s = c.stats();
    json!({
        "stats": {
            "m_tuple_count": s.m_tuple_count,
            "delta": s.delta,
            "warehouse_size": s.warehouse_size,
            "fact_anchored": c.fact_anchored().len(),
        },
        "m_tuples": c.m_tuples().iter().map(|m| mtuple_json(m, u)).collect::<Vec<_>>(),
    })
}

/// Runs the chase with `algo` and reports the m-table.
pub fn chase_report(w: &Warehouse, algo: Algo) -> Result<Report> {
    let star = m_chase_star(w)?;
    let mut summary = Vec::new();
    let mut json = chase_json(&star);
    let shown = match algo {
        Algo::Star => star,
        Algo::Generic => m_chase_generic_warehouse(w)?,
        Algo::Both => {
            let generic = m_chase_generic_warehouse(w)?;
            let mut a = star.m_tuples().to_vec();
            let mut b = generic.m_tuples().to_vec();
            a.sort();
            b.sort();
            if a != b {
                return Err(cqa_core::Error::Invariant(String::from("the star and generic chase results differ")).into());
            }
            summary.push(String::from("algorithms agree"));
            json["algorithms_agree"] = json!(true);
            star
        }
    };
    if algo == Algo::Generic {
        json = chase_json(&shown);
    }
    let s = shown.stats();
    summary.push(format!(
        "m-tuples: {}, delta: {}, W: {}, fact-anchored: {}",
        s.m_tuple_count,
        s.delta,
        s.warehouse_size,
        shown.fact_anchored().len()
    ));
    let u = shown.universe();
    Ok(Report {
        json,
        columns: u.ids().map(|a| u.name(a).to_string()).collect(),
        rows: shown.m_tuples().iter().map(|m| mtuple_cells(m, u)).collect(),
        summary,
    })
}

/// Parses `NAME=value,NAME=value` against the declared types.
pub fn parse_tuple(spec: &str, u: &Universe) -> Result<Tuple> {
    let mut pairs = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) =
            part.split_once('=').ok_or_else(|| Error::Manifest(format!("expected NAME=value, got `{part}`")))?;
        let a = u.resolve(name.trim())?;
        let ty = u.info(a).ty;
        let v = match parse_cell(value.trim(), ty) {
            Some(Some(v)) => v,
            _ => {
                return Err(cqa_core::Error::TypeError(format!("`{}` is not a valid {} for `{}`", value.trim(), ty.name(), name.trim()))
                    .into())
            }
        };
        if pairs.iter().any(|(b, _)| *b == a) {
            return Err(cqa_core::Error::DuplicateAttribute(name.trim().to_string()).into());
        }
        pairs.push((a, v));
    }
    Ok(Tuple::from_pairs(pairs))
}

fn classify_report(m: &Manifest, w: &Warehouse, tuples: &[String], set: Option<TupleSet>) -> Result<Report> {
    let chase = m_chase_star(w)?;
    let u = chase.universe();
    let cap = m.options.enumeration_cap;
    if let Some(set) = set {
        let items = match set {
            TupleSet::True => true_all(&chase, cap)?,
            TupleSet::Consistent => cons_all(&chase, cap)?,
            TupleSet::Conflicting => confl_all(&chase, cap)?,
            TupleSet::ConflMin => confl_min(&chase, cap)?,
        };
        let name = set.to_possible_value().expect("named variant").get_name().to_string();
        return Ok(Report {
            json: json!({"set": name, "tuples": items.iter().map(|t| tuple_json(t, u)).collect::<Vec<_>>()}),
            columns: vec![String::from("tuple")],
            rows: items.iter().map(|t| vec![json!(t.display(u).to_string())]).collect(),
            summary: vec![format!("{} tuples in `{name}`", items.len())],
        });
    }
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for spec in tuples {
        let t = parse_tuple(spec, u)?;
        let status = classify(&chase, &t).label();
        rows.push(vec![json!(t.display(u).to_string()), json!(status)]);
        entries.push(json!({"tuple": tuple_json(&t, u), "status": status}));
    }
    Ok(Report {
        json: json!({"results": entries}),
        columns: vec![String::from("tuple"), String::from("status")],
        rows,
        summary: Vec::new(),
    })
}

fn repairs_report(m: &Manifest, w: &Warehouse, limit: u64, verify: bool) -> Result<Report> {
    let chase = m_chase_star(w)?;
    let u = chase.universe();
    let cap = m.options.enumeration_cap;
    let space = RepairSpace::new(&chase)?;
    let oracle = Oracle::new(&chase, u128::from(limit), cap)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut verified = 0;
    for (i, r) in oracle.repairs().iter().enumerate() {
        let table = r.rows(&chase, cap)?;
        if verify {
            if !verify_repair(&chase, r, cap)? {
                return Err(cqa_core::Error::Invariant(format!("repair {} fails verification", i + 1)).into());
            }
            verified += 1;
        }
        for t in &table {
            rows.push(vec![json!(i + 1), json!(t.display(u).to_string())]);
        }
        entries.push(json!({
            "index": i + 1,
            "anchors": r.anchor_rows.iter().map(|t| tuple_json(t, u)).collect::<Vec<_>>(),
            "rows": table.iter().map(|t| tuple_json(t, u)).collect::<Vec<_>>(),
        }));
    }
    let mut summary = vec![format!("{} repairs ({} choice points)", oracle.repairs().len(), space.points().len())];
    if verify {
        summary.push(format!("{verified} repairs verified"));
    }
    Ok(Report {
        json: json!({"count": oracle.repairs().len(), "choice_points": space.points().len(), "repairs": entries}),
        columns: vec![String::from("repair"), String::from("row")],
        rows,
        summary,
    })
}

fn names(u: &Universe, attrs: &[cqa_core::AttrId]) -> Vec<String> {
    attrs.iter().map(|a| u.name(*a).to_string()).collect()
}

fn rows_json(ts: &std::collections::BTreeSet<Tuple>, cols: &[cqa_core::AttrId]) -> Vec<Json> {
    ts.iter().map(|t| Json::Array(tuple_cells(t, cols))).collect()
}

/// Parses and answers `sql` in `mode`.
pub fn query_report(m: &Manifest, w: &Warehouse, sql: &str, mode: Mode) -> Result<Report> {
    let u = w.schema().universe();
    let parsed = parse_query(sql, u)?;
    let chase = m_chase_star(w)?;
    let cap = m.options.enumeration_cap;
    if mode == Mode::Oracle {
        return oracle_report(m, &chase, &parsed.query);
    }
    match &parsed.query {
        Query::Standard(sq) => standard_report(&chase, sq, mode, cap),
        Query::Analytic(aq) => analytic_report(&chase, aq),
    }
}

fn standard_report(chase: &ChaseResult, sq: &StandardQuery, mode: Mode, cap: usize) -> Result<Report> {
    let u = chase.universe();
    let cols = &sq.projection;
    if mode == Mode::Bounds {
        let b = consistent_answer_bounds_capped(chase, sq, cap)?;
        let mut rows = Vec::new();
        for (label, set) in [("lower", &b.lower), ("upper", &b.upper)] {
            for t in set {
                let mut row = vec![json!(label)];
                row.extend(tuple_cells(t, cols));
                rows.push(row);
            }
        }
        let mut columns = vec![String::from("bound")];
        columns.extend(names(u, cols));
        return Ok(Report {
            json: json!({"columns": names(u, cols), "lower": rows_json(&b.lower, cols), "upper": rows_json(&b.upper, cols)}),
            columns,
            rows,
            summary: vec![format!("{} certain, {} possible", b.lower.len(), b.upper.len())],
        });
    }
    let ans = consistent_answer_standard_capped(chase, sq, cap)?;
    Ok(Report {
        json: json!({"columns": names(u, cols), "rows": rows_json(&ans, cols)}),
        columns: names(u, cols),
        rows: ans.iter().map(|t| tuple_cells(t, cols)).collect(),
        summary: vec![format!("{} consistent answers", ans.len())],
    })
}

fn interval_columns(u: &Universe, aq: &AnalyticQuery) -> Vec<String> {
    let mut c = names(u, &aq.group_by);
    c.extend(["glb", "lub", "exact"].map(String::from));
    c
}

fn analytic_report(chase: &ChaseResult, aq: &AnalyticQuery) -> Result<Report> {
    let u = chase.universe();
    if aq.group_by.is_empty() {
        let (ans, strong) = cons_answer_no_groupby(chase, aq)?;
        let mut row = interval_cells(&ans);
        row.push(strong.as_ref().map_or(Json::Null, value_json));
        let mut columns = interval_columns(u, aq);
        columns.push(String::from("strong"));
        return Ok(Report {
            json: json!({"answer": interval_json(&ans), "strong": strong.as_ref().map_or(Json::Null, value_json)}),
            columns,
            rows: vec![row],
            summary: vec![scalar_summary(&ans)],
        });
    }
    let (ans, strong) = cons_answer_groupby(chase, aq)?;
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (g, i) in &ans.rows {
        let s = strong.iter().find(|(k, _)| k == g).map(|(_, v)| value_json(v)).unwrap_or(Json::Null);
        let mut row = tuple_cells(g, &aq.group_by);
        row.extend(interval_cells(i));
        row.push(s.clone());
        rows.push(row);
        groups.push(json!({"group": tuple_cells(g, &aq.group_by), "answer": interval_json(i), "strong": s}));
    }
    let mut columns = interval_columns(u, aq);
    columns.push(String::from("strong"));
    Ok(Report {
        json: json!({"group_by": names(u, &aq.group_by), "groups": groups}),
        columns,
        rows,
        summary: vec![format!("{} consistent groups", ans.rows.len())],
    })
}

fn scalar_summary(i: &IntervalAnswer) -> String {
    match i {
        IntervalAnswer::Null => String::from("consistent answer: NULL"),
        IntervalAnswer::CountZero => String::from("consistent answer: 0"),
        IntervalAnswer::Interval { glb, lub, exact } => {
            format!("consistent answer: [{glb}, {lub}]{}", if *exact { "" } else { " (bounds)" })
        }
    }
}

fn oracle_report(m: &Manifest, chase: &ChaseResult, q: &Query) -> Result<Report> {
    let u = chase.universe();
    let cap = m.options.enumeration_cap;
    let oracle = Oracle::new(chase, u128::from(m.options.repair_limit), cap)?;
    let report = oracle.answer_checked(q)?;
    let agrees = report.agrees_with_engine == Some(true);
    let summary = vec![
        format!("{} repairs enumerated", report.per_repair.len()),
        format!("engine agrees: {}", if agrees { "yes" } else { "no" }),
    ];
    let per_repair: Vec<Json> = report
        .per_repair
        .iter()
        .map(|(i, a)| {
            let answer = match a {
                RepairAnswer::Tuples(ts) => Json::Array(ts.iter().map(|t| tuple_json(t, u)).collect()),
                RepairAnswer::Scalar(v) => v.as_ref().map_or(Json::Null, value_json),
                RepairAnswer::Grouped(g) => Json::Array(
                    g.iter().map(|(k, v)| json!({"group": tuple_json(k, u), "value": value_json(v)})).collect(),
                ),
            };
            json!({"repair": i + 1, "answer": answer})
        })
        .collect();
    let (columns, rows, combined) = match (&report.combined, q) {
        (CombinedAnswer::Tuples(ts), Query::Standard(sq)) => {
            let cols = &sq.projection;
            (names(u, cols), ts.iter().map(|t| tuple_cells(t, cols)).collect(), Json::Array(rows_json(ts, cols)))
        }
        (CombinedAnswer::Scalar(i), Query::Analytic(aq)) => (interval_columns(u, aq), vec![interval_cells(i)], interval_json(i)),
        (CombinedAnswer::Grouped(g), Query::Analytic(aq)) => {
            let rows = g
                .rows
                .iter()
                .map(|(k, i)| {
                    let mut r = tuple_cells(k, &aq.group_by);
                    r.extend(interval_cells(i));
                    r
                })
                .collect();
            let json = Json::Array(
                g.rows.iter().map(|(k, i)| json!({"group": tuple_cells(k, &aq.group_by), "answer": interval_json(i)})).collect(),
            );
            (interval_columns(u, aq), rows, json)
        }
        _ => return Err(cqa_core::Error::Invariant(String::from("oracle answer kind does not match the query")).into()),
    };
    if !agrees {
        return Err(cqa_core::Error::Invariant(String::from("the engine disagrees with the repair oracle")).into());
    }
    Ok(Report {
        json: json!({"repairs": report.per_repair.len(), "engine_agrees": agrees, "answer": combined, "per_repair": per_repair}),
        columns,
        rows,
        summary,
    })
}
