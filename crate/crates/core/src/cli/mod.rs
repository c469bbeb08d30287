//! The `nonstat` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 data error, 4 statistic
//! undefined (table and csv output only). Data goes to stdout, diagnostics
//! to stderr.

mod format;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::compare::{compare, monte_carlo_compare, McError, McReport, Method, PartialSpec};
use crate::dataset::{load_csv, CsvOptions, DataError};
use crate::expr::{parse, Expr, ParseError};
use crate::substitution::StatKind;
use crate::StatError;

pub use format::sig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_UNDEFINED: u8 = 4;

pub const SEED_ENV: &str = "NONSTAT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Classical,
    Chen,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatArg {
    Mean,
    Variance,
    Median,
    Mode,
    All,
}

impl StatArg {
    fn kinds(self) -> Vec<StatKind> {
        match self {
            StatArg::Mean => vec![StatKind::Mean],
            StatArg::Variance => vec![StatKind::Variance],
            StatArg::Median => vec![StatKind::Median],
            StatArg::Mode => vec![StatKind::Mode],
            StatArg::All => StatKind::ALL.to_vec(),
        }
    }
}

const GRAMMAR_HELP: &str = "\
Expressions: numbers, variables, + - * / ^, unary -, and sin cos exp log sqrt abs.
Precedence, lowest first: + - < * / < unary - < ^ (right-associative) < calls and ().
So -x^2 is -(x^2) and 2^3^2 is 2^9. Implicit multiplication is not allowed.";

#[derive(Debug, Parser)]
#[command(name = "nonstat", version, about = "Classical versus substitution statistics of nonlinear expressions", after_help = GRAMMAR_HELP)]
struct Cli {
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Table, global = true)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an expression and print its canonical form and variables
    Parse { expr: String },
    /// Statistics of an expression over the columns of a csv file
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        expr: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = StatArg::All)]
        stat: StatArg,
        /// Single-byte cell delimiter
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        /// Treat the first row as data and name columns c1..ck
        #[arg(long)]
        no_header: bool,
    },
    /// Seeded Monte Carlo comparison of the mean definitions
    Mc {
        /// Spec file: `key = value` lines or a flat json object
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Run seed (overrides the spec file and NONSTAT_SEED)
        #[arg(long)]
        seed: Option<u64>,
        /// Samples per replication
        #[arg(long)]
        n: Option<usize>,
        /// Number of replications
        #[arg(long)]
        r: Option<usize>,
        /// `name=uniform(a,b)`, `name=normal(mu,sigma)` or `name=copy(other)`
        #[arg(long = "dist", value_name = "NAME=DIST")]
        dists: Vec<String>,
        #[arg(long)]
        expr: Option<String>,
    },
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code)
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let use_stderr = e.use_stderr();
            let text = e.render().to_string();
            let _ = if use_stderr {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return if use_stderr { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Parse { expr } => cmd_parse(&expr, cli.format, out, err),
        Command::Stats {
            input,
            expr,
            mode,
            stat,
            delimiter,
            no_header,
        } => {
            let request = StatsRequest {
                input,
                expr,
                mode,
                kinds: stat.kinds(),
                delimiter,
                header: !no_header,
            };
            cmd_stats(&request, cli.format, out, err)
        }
        Command::Mc {
            spec,
            seed,
            n,
            r,
            dists,
            expr,
        } => {
            let flags = McFlags {
                spec,
                seed,
                n,
                r,
                dists,
                expr,
            };
            cmd_mc(&flags, cli.format, out, err)
        }
    };
    match result {
        Ok(code) => code,
        // stdout closed early, e.g. piped into `head`
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn report_parse_error(err: &mut dyn Write, source: &str, e: &ParseError) -> io::Result<()> {
    writeln!(err, "error: {e}")?;
    writeln!(err, "  {source}")?;
    writeln!(
        err,
        "  {}^",
        " ".repeat(source[..e.offset().min(source.len())].chars().count())
    )
}

fn ast_json(e: &Expr) -> Value {
    match e {
        Expr::Constant(v) => json!({ "constant": v }),
        Expr::Variable(name) => json!({ "variable": name }),
        Expr::Unary(op, child) => json!({ "unary": op.name(), "arg": ast_json(child) }),
        Expr::Binary(op, lhs, rhs) => {
            json!({ "binary": op.name(), "left": ast_json(lhs), "right": ast_json(rhs) })
        }
    }
}

fn write_tree(out: &mut dyn Write, e: &Expr, depth: usize) -> io::Result<()> {
    let pad = "  ".repeat(depth);
    match e {
        Expr::Constant(v) => writeln!(out, "{pad}constant {v:?}"),
        Expr::Variable(name) => writeln!(out, "{pad}variable {name}"),
        Expr::Unary(op, child) => {
            writeln!(out, "{pad}{}", op.name())?;
            write_tree(out, child, depth + 1)
        }
        Expr::Binary(op, lhs, rhs) => {
            writeln!(out, "{pad}{}", op.name())?;
            write_tree(out, lhs, depth + 1)?;
            write_tree(out, rhs, depth + 1)
        }
    }
}

fn cmd_parse(
    source: &str,
    fmt: OutputFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<u8> {
    let e = match parse(source) {
        Ok(e) => e,
        Err(pe) => {
            report_parse_error(err, source, &pe)?;
            return Ok(EXIT_USAGE);
        }
    };
    let vars = e.variables();
    match fmt {
        OutputFormat::Table => {
            writeln!(out, "{e}")?;
            writeln!(out, "vars: {}", vars.join(", "))?;
            write_tree(out, &e, 0)?;
        }
        OutputFormat::Json => format::write_json(
            out,
            &json!({ "expression": e.to_string(), "variables": vars, "ast": ast_json(&e) }),
        )?,
        OutputFormat::Csv => format::write_key_values(
            out,
            &[
                ("expression".into(), e.to_string()),
                ("variables".into(), vars.join(", ")),
            ],
        )?,
    }
    Ok(EXIT_OK)
}

struct StatsRequest {
    input: PathBuf,
    expr: String,
    mode: ModeArg,
    kinds: Vec<StatKind>,
    delimiter: char,
    header: bool,
}

fn cmd_stats(
    req: &StatsRequest,
    fmt: OutputFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<u8> {
    let e = match parse(&req.expr) {
        Ok(e) => e,
        Err(pe) => {
            report_parse_error(err, &req.expr, &pe)?;
            return Ok(EXIT_USAGE);
        }
    };
    if !req.delimiter.is_ascii() {
        writeln!(err, "error: {}", DataError::BadDelimiter(req.delimiter))?;
        return Ok(EXIT_USAGE);
    }
    let file = match File::open(&req.input) {
        Ok(f) => f,
        Err(io_err) => {
            writeln!(err, "error: cannot read {}: {io_err}", req.input.display())?;
            return Ok(EXIT_DATA);
        }
    };
    let options = CsvOptions {
        delimiter: req.delimiter as u8,
        header: req.header,
    };
    let data = match load_csv(BufReader::new(file), options) {
        Ok(d) => d,
        Err(de) => {
            writeln!(err, "error: {}: {de}", req.input.display())?;
            return Ok(EXIT_DATA);
        }
    };
    let report = match compare(&e, &data) {
        Ok(r) => r,
        Err(StatError::UnboundVariable(name)) => {
            writeln!(
                err,
                "error: expression variable `{name}` is not a column of the input"
            )?;
            return Ok(EXIT_USAGE);
        }
        Err(other) => {
            writeln!(err, "error: {other}")?;
            return Ok(EXIT_DATA);
        }
    };

    let keep_classical = req.mode != ModeArg::Chen;
    let keep_chen = req.mode != ModeArg::Classical;
    let mut statistics: Vec<(StatKind, [Option<f64>; 4])> = Vec::new();
    let mut undefined = Vec::new();
    for &kind in &req.kinds {
        let s = report.get(kind);
        let classical = s.classical.filter(|_| keep_classical);
        let chen = s.chen.filter(|_| keep_chen);
        let (abs_gap, rel_gap) = if keep_classical && keep_chen {
            (s.abs_gap, s.rel_gap)
        } else {
            (None, None)
        };
        if keep_classical && classical.is_none() {
            undefined.push(format!("classical {kind}"));
        }
        if keep_chen && chen.is_none() {
            undefined.push(format!("chen {kind}"));
        }
        statistics.push((kind, [classical, chen, abs_gap, rel_gap]));
    }
    let warnings: Vec<_> = report
        .warnings
        .iter()
        .filter(|w| w.statistic.is_none_or(|k| req.kinds.contains(&k)))
        .filter(|w| match w.method {
            Some(Method::Classical) => keep_classical,
            Some(Method::Chen) => keep_chen,
            None => true,
        })
        .collect();
    let decomposition = report
        .product_decomposition
        .as_ref()
        .filter(|_| req.mode == ModeArg::Both && req.kinds.contains(&StatKind::Mean));

    const FIELDS: [&str; 4] = ["classical", "chen", "abs_gap", "rel_gap"];
    let columns: Vec<usize> = match req.mode {
        ModeArg::Classical => vec![0],
        ModeArg::Chen => vec![1],
        ModeArg::Both => vec![0, 1, 2, 3],
    };

    match fmt {
        OutputFormat::Json => {
            let mut stats = serde_json::Map::new();
            for (kind, values) in &statistics {
                let entry: serde_json::Map<String, Value> = FIELDS
                    .iter()
                    .zip(values)
                    .map(|(k, v)| (k.to_string(), json!(v)))
                    .collect();
                stats.insert(kind.name().to_owned(), Value::Object(entry));
            }
            let body = json!({
                "expression": report.expression,
                "n_rows": report.n_rows,
                "statistics": stats,
                "product_decomposition": decomposition,
                "warnings": warnings,
            });
            format::write_json(out, &body)?;
            return Ok(EXIT_OK);
        }
        OutputFormat::Table => {
            let mut rows = vec![
                vec!["expression".to_owned(), report.expression.clone()],
                vec!["rows".to_owned(), report.n_rows.to_string()],
            ];
            if let Some(pd) = decomposition {
                rows.push(vec![
                    "covariance_term".to_owned(),
                    format::sig6(Some(pd.covariance_term)),
                ]);
                rows.push(vec![
                    "identity_residual".to_owned(),
                    format::sig6(Some(pd.identity_residual)),
                ]);
            }
            format::write_table(out, &rows)?;
            writeln!(out)?;
            let mut table = vec![std::iter::once("statistic")
                .chain(columns.iter().map(|&c| FIELDS[c]))
                .map(str::to_owned)
                .collect::<Vec<_>>()];
            for (kind, values) in &statistics {
                let mut row = vec![kind.name().to_owned()];
                row.extend(columns.iter().map(|&c| format::sig6(values[c])));
                table.push(row);
            }
            format::write_table(out, &table)?;
        }
        OutputFormat::Csv => {
            let mut pairs = vec![
                ("expression".to_owned(), report.expression.clone()),
                ("n_rows".to_owned(), report.n_rows.to_string()),
            ];
            for (kind, values) in &statistics {
                for &c in &columns {
                    pairs.push((
                        format!("{}.{}", kind.name(), FIELDS[c]),
                        format::exact(values[c]),
                    ));
                }
            }
            if let Some(pd) = decomposition {
                pairs.push((
                    "product.covariance_term".into(),
                    format::exact(Some(pd.covariance_term)),
                ));
                pairs.push((
                    "product.identity_residual".into(),
                    format::exact(Some(pd.identity_residual)),
                ));
            }
            format::write_key_values(out, &pairs)?;
        }
    }
    for w in &warnings {
        writeln!(err, "warning: {}", w.message)?;
    }
    if undefined.is_empty() {
        Ok(EXIT_OK)
    } else {
        writeln!(err, "error: undefined statistic: {}", undefined.join(", "))?;
        Ok(EXIT_UNDEFINED)
    }
}

struct McFlags {
    spec: Option<PathBuf>,
    seed: Option<u64>,
    n: Option<usize>,
    r: Option<usize>,
    dists: Vec<String>,
    expr: Option<String>,
}

fn report_mc_error(err: &mut dyn Write, e: &McError) -> io::Result<()> {
    match e {
        McError::InvalidSpec(issues) => {
            writeln!(err, "error: invalid spec")?;
            for issue in issues {
                writeln!(err, "  {issue}")?;
            }
            Ok(())
        }
        other => writeln!(err, "error: {other}"),
    }
}

/// Seed precedence: `--seed`, then the spec file, then `NONSTAT_SEED`, then 0.
fn assemble_spec(flags: &McFlags) -> Result<PartialSpec, McError> {
    let invalid = |field: &str, message: String| {
        McError::InvalidSpec(vec![crate::compare::FieldIssue {
            field: field.to_owned(),
            message,
        }])
    };
    let mut base = PartialSpec::default();
    if let Ok(env_seed) = std::env::var(SEED_ENV) {
        base.set("seed", env_seed.trim())
            .map_err(|issue| invalid(SEED_ENV, issue.message))?;
    }
    if let Some(path) = &flags.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("spec", format!("cannot read {}: {e}", path.display())))?;
        base = base.overlay(PartialSpec::parse(&text)?);
    }
    let mut cli = PartialSpec {
        seed: flags.seed,
        n_samples: flags.n,
        n_replications: flags.r,
        expression: flags.expr.clone(),
        ..PartialSpec::default()
    };
    for d in &flags.dists {
        let (name, dist) = d
            .split_once('=')
            .ok_or_else(|| invalid("dist", format!("expected NAME=DIST, got {d:?}")))?;
        cli.distributions
            .insert(name.trim().to_owned(), dist.trim().to_owned());
    }
    let mut merged = base.overlay(cli);
    merged.seed.get_or_insert(0);
    Ok(merged)
}

fn cmd_mc(
    flags: &McFlags,
    fmt: OutputFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<u8> {
    let spec = match assemble_spec(flags).and_then(PartialSpec::into_spec) {
        Ok(s) => s,
        Err(e) => {
            report_mc_error(err, &e)?;
            return Ok(EXIT_USAGE);
        }
    };
    let report = match monte_carlo_compare(&spec) {
        Ok(r) => r,
        Err(e @ McError::InvalidSpec(_)) => {
            report_mc_error(err, &e)?;
            return Ok(EXIT_USAGE);
        }
        Err(e) => {
            report_mc_error(err, &e)?;
            return Ok(EXIT_UNDEFINED);
        }
    };
    match fmt {
        OutputFormat::Json => format::write_json(out, &report)?,
        OutputFormat::Table => write_mc_table(out, &report)?,
        OutputFormat::Csv => write_mc_csv(out, &report)?,
    }
    Ok(EXIT_OK)
}

fn write_mc_table(out: &mut dyn Write, report: &McReport) -> io::Result<()> {
    let mut header = vec![
        vec!["expression".to_owned(), report.expression.clone()],
        vec!["seed".to_owned(), report.seed.to_string()],
        vec!["samples".to_owned(), report.n_samples.to_string()],
        vec!["replications".to_owned(), report.n_replications.to_string()],
    ];
    for (name, dist) in &report.distributions {
        header.push(vec![format!("dist.{name}"), dist.clone()]);
    }
    format::write_table(out, &header)?;
    writeln!(out)?;
    let mut rows = vec![[
        "rep",
        "classical_mean",
        "chen_mean",
        "mean_gap",
        "classical_var",
        "chen_var",
        "var_gap",
    ]
    .map(str::to_owned)
    .to_vec()];
    for r in &report.replications {
        let mut row = vec![r.index.to_string()];
        row.extend(
            [
                r.classical_mean,
                r.chen_mean,
                r.mean_gap,
                r.classical_variance,
                r.chen_variance,
                r.variance_gap,
            ]
            .map(|v| format::sig6(Some(v))),
        );
        rows.push(row);
    }
    format::write_table(out, &rows)?;
    writeln!(out)?;
    let a = &report.aggregate;
    format::write_table(
        out,
        &[
            vec!["mean_gap".to_owned(), format::sig6(Some(a.mean_gap))],
            vec!["gap_std_dev".to_owned(), format::sig6(a.gap_std_dev)],
            vec!["min_gap".to_owned(), format::sig6(Some(a.min_gap))],
            vec!["max_gap".to_owned(), format::sig6(Some(a.max_gap))],
        ],
    )
}

fn write_mc_csv(out: &mut dyn Write, report: &McReport) -> io::Result<()> {
    let mut pairs = vec![
        ("expression".to_owned(), report.expression.clone()),
        ("seed".to_owned(), report.seed.to_string()),
        ("n_samples".to_owned(), report.n_samples.to_string()),
        (
            "n_replications".to_owned(),
            report.n_replications.to_string(),
        ),
    ];
    for (name, dist) in &report.distributions {
        pairs.push((format!("dist.{name}"), dist.clone()));
    }
    for r in &report.replications {
        let i = r.index;
        pairs.push((format!("replications.{i}.seed"), r.seed.to_string()));
        for (key, v) in [
            ("classical_mean", r.classical_mean),
            ("chen_mean", r.chen_mean),
            ("mean_gap", r.mean_gap),
            ("classical_variance", r.classical_variance),
            ("chen_variance", r.chen_variance),
            ("variance_gap", r.variance_gap),
        ] {
            pairs.push((format!("replications.{i}.{key}"), format::exact(Some(v))));
        }
    }
    let a = &report.aggregate;
    pairs.push(("aggregate.mean_gap".into(), format::exact(Some(a.mean_gap))));
    pairs.push(("aggregate.gap_std_dev".into(), format::exact(a.gap_std_dev)));
    pairs.push(("aggregate.min_gap".into(), format::exact(Some(a.min_gap))));
    pairs.push(("aggregate.max_gap".into(), format::exact(Some(a.max_gap))));
    format::write_key_values(out, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("nonstat").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn parse_table() {
        let (code, out, err) = run_capture(&["parse", "x*y"]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("x * y"));
        assert_eq!(lines.next(), Some("vars: x, y"));
        assert!(err.is_empty());
    }

    #[test]
    fn parse_error_offset() {
        let (code, out, err) = run_capture(&["parse", "x*"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.contains("offset 2"), "{err}");
    }

    #[test]
    fn parse_json_ast() {
        let (code, out, _) = run_capture(&["parse", "sin(x)", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["variables"], json!(["x"]));
        assert_eq!(v["ast"], json!({"unary": "sin", "arg": {"variable": "x"}}));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["stats"]).0, 2);
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn mc_zero_replications() {
        let (code, out, err) = run_capture(&[
            "mc",
            "--seed",
            "1",
            "--n",
            "10",
            "--r",
            "0",
            "--dist",
            "x=uniform(0,1)",
            "--expr",
            "x",
        ]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.contains("r: must be at least 1"), "{err}");
    }
}
