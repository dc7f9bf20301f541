//! Command-line front end.
//!
//! Exit codes: 0 success, 1 the document does not parse or bind (or `check`
//! found a disagreement), 2 the criterion does not resolve, 3 an assertion
//! was violated, 4 a runtime error occurred, 64 bad usage.

use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::api;
use crate::interp::oracle::{check, CheckOptions};
use crate::interp::{AssertionKind, Outcome, RunOptions, Value};
use crate::parser::parse_position;
use crate::report::{annotate, slice_json};
use crate::slicer::{conjuncts, Criterion, Target, UpdateMode};
use crate::syntax::{NodeId, Position};
use crate::{LoadError, Specification};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOCUMENT: i32 = 1;
pub const EXIT_CRITERION: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "vdmslice",
    version,
    about = "Static backward slicing for executable VDM-SL specifications"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the slice for a criterion.
    Slice(SliceArgs),
    /// Call an operation on the initial state.
    Run(RunArgs),
    /// Compare original and slice-reduced runs on generated inputs.
    Check(CheckArgs),
    /// Serve the document over HTTP for the browser viewer.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("target").required(true).args(["ret", "post", "state", "at"])))]
struct TargetArgs {
    /// The operation's return value.
    #[arg(long = "return")]
    ret: bool,
    /// The postcondition, or its N-th top-level conjunct.
    #[arg(long, value_name = "N", num_args = 0..=1)]
    post: Option<Option<usize>>,
    /// A state variable's value at exit.
    #[arg(long, value_name = "VAR")]
    state: Option<String>,
    /// The expression covering a source position.
    #[arg(long, value_name = "L:C", value_parser = position)]
    at: Option<Position>,
}

impl TargetArgs {
    fn target(&self) -> Target {
        if self.ret {
            Target::ReturnValue
        } else if let Some(k) = self.post {
            Target::Postcondition(k)
        } else if let Some(v) = &self.state {
            Target::StateVariable(v.clone())
        } else {
            Target::ExpressionAt(self.at.expect("clap enforces one target"))
        }
    }
}

fn position(s: &str) -> Result<Position, String> {
    parse_position(s).map_err(|e| e.message)
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Weak,
    Strong,
}

impl From<Mode> for UpdateMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Weak => UpdateMode::Weak,
            Mode::Strong => UpdateMode::StrongLiteral,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct SliceArgs {
    file: PathBuf,
    #[arg(long, value_name = "NAME")]
    op: String,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, value_enum, default_value = "weak")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args, Debug)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, value_name = "NAME")]
    op: String,
    /// Arguments as a JSON array.
    #[arg(long, value_name = "JSON", default_value = "[]")]
    args: String,
    /// Do not check pre/postconditions and the state invariant.
    #[arg(long)]
    no_assert: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, value_name = "NAME")]
    op: String,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value = "weak")]
    mode: Mode,
}

#[derive(Args, Debug)]
struct ServeArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, hide = true, default_value = "127.0.0.1")]
    host: IpAddr,
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::*;
            return match e.kind() {
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand
                    if e.exit_code() == 0 =>
                {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Slice(a) => slice_cmd(a, out, err),
        Command::Run(a) => run_cmd(a, out, err),
        Command::Check(a) => check_cmd(a, out, err),
        Command::Serve(a) => serve_cmd(a, out, err),
    }
}

fn load(path: &Path, err: &mut impl Write) -> Result<(String, Specification), i32> {
    let source = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            return Err(EXIT_DOCUMENT);
        }
    };
    match Specification::parse(&source) {
        Ok(spec) => Ok((source, spec)),
        Err(e) => {
            report_load_error(path, &e, err);
            Err(EXIT_DOCUMENT)
        }
    }
}

fn report_load_error(path: &Path, e: &LoadError, err: &mut impl Write) {
    for (span, message) in e.diagnostics() {
        let _ = writeln!(err, "{}:{}: {message}", path.display(), span.start);
    }
}

fn slice_cmd(a: SliceArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let (_, spec) = match load(&a.file, err) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let criterion = Criterion::new(&a.op, a.target.target());
    let mode = a.mode.into();
    let result = match spec.slice(&criterion, mode) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CRITERION;
        }
    };
    let text = match a.format {
        Format::Json => slice_json(
            &a.file.display().to_string(),
            &spec.document,
            &criterion,
            mode,
            &result,
        ),
        Format::Text => annotate(&spec.document, &criterion, mode, &result),
    };
    let _ = out.write_all(text.as_bytes());
    EXIT_OK
}

fn describe_violation(spec: &Specification, kind: AssertionKind, node: NodeId) -> String {
    let doc = &spec.document;
    let span = doc.span_of(node).expect("violations point at document nodes");
    let text = doc.text_of(span).split_whitespace().collect::<Vec<_>>().join(" ");
    let index = doc
        .operations
        .iter()
        .filter_map(|o| o.post.as_ref())
        .find_map(|p| conjuncts(p).iter().position(|c| c.id == node));
    match (kind, index) {
        (AssertionKind::Post, Some(i)) => {
            format!("postcondition conjunct {} violated at {}: {text}", i + 1, span.start)
        }
        _ => format!("{} violated at {}: {text}", kind.as_str(), span.start),
    }
}

fn run_cmd(a: RunArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let (_, spec) = match load(&a.file, err) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let parsed: Option<Vec<Value>> = serde_json::from_str::<serde_json::Value>(&a.args)
        .ok()
        .and_then(|v| v.as_array().cloned())
        .and_then(|xs| xs.iter().map(Value::from_json).collect());
    let Some(args) = parsed else {
        let _ = writeln!(
            err,
            "error: --args must be a JSON array of numbers, strings, booleans, null, or arrays"
        );
        return EXIT_USAGE;
    };
    let options = RunOptions {
        check_assertions: !a.no_assert,
        ..RunOptions::default()
    };
    let (outcome, state) = match spec.interpreter(options) {
        Ok(mut it) => {
            let o = it.call_operation(&a.op, args);
            let state: Vec<(String, Value)> = spec
                .document
                .state_field_names()
                .into_iter()
                .filter_map(|n| it.state_value(n).map(|v| (n.to_string(), v.clone())))
                .collect();
            (o, state)
        }
        Err(o) => (o, Vec::new()),
    };
    let code = match &outcome {
        Outcome::Returned(v) => {
            let _ = writeln!(out, "returned {v}");
            EXIT_OK
        }
        Outcome::CompletedVoid => {
            let _ = writeln!(out, "completed");
            EXIT_OK
        }
        Outcome::AssertionViolation { kind, node } => {
            let _ = writeln!(out, "{}", describe_violation(&spec, *kind, *node));
            EXIT_ASSERTION
        }
        Outcome::RuntimeError { node, message, .. } => {
            let at = spec
                .document
                .span_of(*node)
                .map(|s| s.start.to_string())
                .unwrap_or_default();
            let _ = writeln!(out, "runtime error at {at}: {message}");
            EXIT_RUNTIME
        }
    };
    for (name, v) in state {
        let _ = writeln!(out, "  {name} = {v}");
    }
    code
}

fn check_cmd(a: CheckArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let (_, spec) = match load(&a.file, err) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let criterion = Criterion::new(&a.op, a.target.target());
    let options = CheckOptions {
        trials: a.trials,
        seed: a.seed,
        mode: a.mode.into(),
    };
    let report = match check(&spec.document, &spec.symbols, &criterion, options) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CRITERION;
        }
    };
    let _ = writeln!(
        out,
        "{criterion}: {} trials, {} compared, {} disagreements",
        report.trials,
        report.compared,
        report.mismatches.len()
    );
    for m in &report.mismatches {
        let args: Vec<String> = m.args.iter().map(Value::to_string).collect();
        let reduced = match &m.reduced {
            Ok(o) => o.to_string(),
            Err(outcome) => outcome.to_string(),
        };
        let _ = writeln!(
            out,
            "  args ({}): original {}, reduced {reduced}",
            args.join(", "),
            m.original
        );
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_DOCUMENT
    }
}

fn serve_cmd(a: ServeArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let source = match std::fs::read_to_string(&a.file) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", a.file.display());
            return EXIT_DOCUMENT;
        }
    };
    let state = Arc::new(api::AppState::new(a.file.display().to_string(), source));
    let addr = SocketAddr::new(a.host, a.port);
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let result = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let _ = writeln!(out, "listening on http://{}", listener.local_addr()?);
        let _ = out.flush();
        api::serve(listener, state).await
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("vdmslice").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors() {
        assert_eq!(invoke(&[]).0, EXIT_USAGE);
        assert_eq!(invoke(&["slice", "x.vdmsl", "--op", "a"]).0, EXIT_USAGE);
        assert_eq!(
            invoke(&["slice", "x.vdmsl", "--op", "a", "--return", "--state", "v"]).0,
            EXIT_USAGE
        );
        assert_eq!(invoke(&["slice", "x", "--op", "a", "--at", "0:1"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = invoke(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("slice"));
        let (_, out, _) = invoke(&["serve", "--help"]);
        assert!(!out.contains("--host"));
    }

    #[test]
    fn missing_file() {
        let (code, _, err) = invoke(&["slice", "/nonexistent.vdmsl", "--op", "a", "--return"]);
        assert_eq!(code, EXIT_DOCUMENT);
        assert!(err.contains("/nonexistent.vdmsl"));
    }
}
