use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use randers_foliate::config::parse_param_flag;
use randers_foliate::{dump, list_catalog, output, run, RawConfig, RunConfig, RunError, JOBS_ENV};
use randers_foliate_core::grid::{build_example, ExampleKind, ExampleSpec, Scheme};

#[derive(Parser)]
#[command(name = "randers-foliate", version, about = "Verify integral formulae of foliated Randers spaces by quadrature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run formulas on a catalog example over a resolution sweep.
    Verify(VerifyArgs),
    /// Print the example catalog and the formula groups.
    List,
    /// Write one field of an example for plotting.
    Dump(DumpArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Catalog example name.
    #[arg(long)]
    example: Option<String>,
    /// Example parameter override, k=v (repeatable).
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    /// Comma-separated grid sizes per axis.
    #[arg(long)]
    res: Option<String>,
    /// Comma-separated formula groups, or "all".
    #[arg(long)]
    formulas: Option<String>,
    /// spectral or central4.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (default: RANDERS_FOLIATE_JOBS, then the core count).
    #[arg(long)]
    jobs: Option<String>,
    /// Report file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv (default from the --out extension, else json).
    #[arg(long)]
    format: Option<String>,
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the catalog and exit.
    #[arg(long)]
    list: bool,
    /// Suppress the per-report summary on stdout.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long, required_unless_present = "list_fields")]
    example: Option<String>,
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    #[arg(long)]
    res: Option<usize>,
    #[arg(long, default_value = "spectral")]
    scheme: String,
    /// Field name; see --list-fields.
    #[arg(long, required_unless_present = "list_fields")]
    field: Option<String>,
    /// csv or bin.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, required_unless_present = "list_fields")]
    out: Option<PathBuf>,
    #[arg(long)]
    list_fields: bool,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn verify(args: VerifyArgs) -> ExitCode {
    if args.list {
        print!("{}", list_catalog());
        return ExitCode::SUCCESS;
    }
    let file = match &args.config {
        Some(p) => match RawConfig::read_file(p) {
            Ok(r) => r,
            Err(e) => return config_error(e),
        },
        None => RawConfig::default(),
    };
    let mut flags = RawConfig {
        example: args.example,
        res: args.res,
        formulas: args.formulas,
        scheme: args.scheme,
        seed: args.seed,
        jobs: args.jobs,
        out: args.out,
        format: args.format,
        ..Default::default()
    };
    for p in &args.params {
        match parse_param_flag(p) {
            Ok((k, v)) => {
                flags.params.insert(k, v);
            }
            Err(e) => return config_error(e),
        }
    }
    let mut raw = file.overridden_by(flags);
    if raw.jobs.is_none() {
        raw.jobs = std::env::var(JOBS_ENV).ok();
    }
    let cfg = match RunConfig::from_raw(raw) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    match run(&cfg) {
        Ok((code, reports)) => {
            if cfg.out.is_none() && !args.quiet {
                print!("{}", output::summary(&reports));
            } else if !args.quiet {
                let fails = reports.iter().filter(|r| r.verdict.name() == "fail").count();
                println!("{} reports, {} failed", reports.len(), fails);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dump_field(args: DumpArgs) -> ExitCode {
    if args.list_fields {
        for (name, help) in dump::FIELDS {
            println!("{name:<20} {help}");
        }
        return ExitCode::SUCCESS;
    }
    let name = args.example.unwrap_or_default();
    let Some(kind) = ExampleKind::parse(&name) else {
        return config_error(format!("unknown example '{name}'"));
    };
    let Some(scheme) = Scheme::parse(&args.scheme) else {
        return config_error(format!("unknown scheme '{}'", args.scheme));
    };
    let mut spec = ExampleSpec::new(kind);
    for p in &args.params {
        match parse_param_flag(p).and_then(|(k, v)| {
            v.parse::<f64>()
                .map(|x| (k, x))
                .map_err(|_| randers_foliate::ConfigError(format!("invalid value in '{p}'")))
        }) {
            Ok((k, v)) => spec = spec.with(&k, v),
            Err(e) => return config_error(e),
        }
    }
    let m = match build_example(&spec, args.res.unwrap_or(kind.entry().default_resolution)) {
        Ok(m) => m,
        Err(e) => return config_error(e),
    };
    let (field, out) = (args.field.unwrap_or_default(), args.out.unwrap_or_default());
    let d = match dump::field(&m, scheme, &field) {
        None => return config_error(format!("unknown field '{field}'")),
        Some(Err(e)) => {
            eprintln!("error: {}", RunError::Compute(e));
            return ExitCode::from(1);
        }
        Some(Ok(d)) => d,
    };
    let file = match std::fs::File::create(&out) {
        Ok(f) => std::io::BufWriter::new(f),
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            return ExitCode::from(1);
        }
    };
    let res = match args.format.as_str() {
        "csv" => dump::write_csv(&m, &d, file).map_err(|e| e.to_string()),
        "bin" => dump::write_binary(&m, &d, file).map_err(|e| e.to_string()),
        f => return config_error(format!("unknown dump format '{f}' (csv or bin)")),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Verify(a) => verify(a),
        Command::List => {
            print!("{}", list_catalog());
            ExitCode::SUCCESS
        }
        Command::Dump(a) => dump_field(a),
    }
}
