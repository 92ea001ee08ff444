mod args;
mod error;
mod output;
mod render;

use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use epiforecast_core::ingest::{self, IngestOptions, MissingValues};
use epiforecast_core::report::{
    self, build_fit_report, build_forecast_report, build_rolling_all_report, build_rolling_report,
    FitReport, ReportBundle, RollingTarget,
};
use epiforecast_core::{exec, fit_model, Dataset, ModelRequest, MonthlySeries};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, DataArgs, OutputArgs};
use crate::error::CliError;
use crate::output::Outputs;

const THREADS_ENV: &str = "EPIFORECAST_THREADS";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let message: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!(
                "epiforecast: usage: {}",
                message.join(" ").trim_start_matches("error: ")
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epiforecast: {}: {}", e.code(), e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    exec::set_thread_cap(n).map_err(CliError::Usage)
}

struct Loaded {
    dataset: Dataset,
    sha256: String,
}

fn load(args: &DataArgs) -> Result<Loaded, CliError> {
    let mut bytes = Vec::new();
    if args.data == Path::new("-") {
        std::io::stdin()
            .read_to_end(&mut bytes)
            .map_err(|e| CliError::io("<stdin>", e))?;
    } else {
        bytes = std::fs::read(&args.data).map_err(|e| CliError::io(&args.data, e))?;
    }
    let dataset = match args.aggregate {
        Some(policy) => ingest::parse_long_csv(bytes.as_slice(), policy.into())?,
        None => {
            let options = IngestOptions {
                missing: if args.forward_fill {
                    MissingValues::ForwardFill
                } else {
                    MissingValues::Reject
                },
            };
            ingest::parse_csv_with(bytes.as_slice(), &options)?
        }
    };
    let sha256 = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(Loaded { dataset, sha256 })
}

fn region<'a>(dataset: &'a Dataset, name: &str) -> Result<&'a MonthlySeries, CliError> {
    dataset.region(name).ok_or_else(|| CliError::RegionNotFound {
        region: name.to_string(),
        available: dataset.region_names().iter().map(|s| s.to_string()).collect(),
    })
}

fn emit(out: &OutputArgs, text: String, json: String, extra: Vec<(&str, String)>, argv: &[String]) -> Result<(), CliError> {
    match &out.out {
        Some(path) => Outputs::new(path).write_all(&text, &json, &extra, argv),
        None => {
            print!("{}", if out.json { json } else { text });
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let argv: Vec<String> = std::env::args().collect();
    match cli.command {
        Command::Fit(a) => {
            let loaded = load(&a.data)?;
            let series = region(&loaded.dataset, &a.region)?;
            let r = build_fit_report(series, a.model, &a.eval.config())?;
            emit(
                &a.output,
                render::fit_text(&r),
                report::to_json(&r),
                vec![("fitted.csv", render::fitted_csv(&r))],
                &argv,
            )
        }
        Command::Forecast(a) => {
            if a.steps < 1 {
                return Err(CliError::Usage("--steps must be at least 1".into()));
            }
            let loaded = load(&a.data)?;
            let series = region(&loaded.dataset, &a.region)?;
            let r = build_forecast_report(series, a.model, a.steps, &a.eval.config())?;
            emit(&a.output, render::forecast_text(&r), report::to_json(&r), vec![], &argv)
        }
        Command::Roll(a) => {
            let loaded = load(&a.data)?;
            let series = region(&loaded.dataset, &a.region)?;
            let config = a.eval.config();
            match a.model {
                RollingTarget::Model(m) => {
                    let r = build_rolling_report(series, m, &config)?;
                    emit(
                        &a.output,
                        render::rolling_text(&r),
                        report::to_json(&r),
                        vec![("rolling.csv", render::rolling_csv(&r))],
                        &argv,
                    )
                }
                RollingTarget::All => {
                    let r = build_rolling_all_report(series, &config)?;
                    emit(
                        &a.output,
                        render::rolling_all_text(&r),
                        report::to_json(&r),
                        vec![("rolling.csv", render::rolling_all_csv(&r))],
                        &argv,
                    )
                }
            }
        }
        Command::Select(a) => {
            let loaded = load(&a.data)?;
            let names: Vec<String> = if a.all {
                loaded.dataset.region_names().iter().map(|s| s.to_string()).collect()
            } else {
                a.region.clone()
            };
            if names.is_empty() {
                return Err(CliError::Usage("no regions selected".into()));
            }
            let series = names
                .iter()
                .map(|n| region(&loaded.dataset, n))
                .collect::<Result<Vec<_>, _>>()?;
            let config = a.eval.config();
            let bundle = ReportBundle::build(&series, &config, Some(loaded.sha256.clone()));
            if bundle.succeeded() == 0 {
                let first = bundle
                    .per_region
                    .values()
                    .find_map(|o| o.error.clone())
                    .expect("failed regions carry an error");
                return Err(CliError::AllRegionsFailed {
                    code: first.code,
                    category: first.category,
                    message: first.message,
                });
            }
            for (name, o) in &bundle.per_region {
                if let Some(e) = &o.error {
                    log::warn!("{name}: {}", e.message);
                }
            }
            let fitted = final_fits(&bundle, &series, &config);
            emit(
                &a.output,
                render::bundle_text(&bundle),
                report::to_json(&bundle),
                vec![
                    ("rolling.csv", render::bundle_rolling_csv(&bundle)),
                    ("fitted.csv", fitted),
                ],
                &argv,
            )
        }
    }
}

/// Actual-vs-fitted rows of each region's selected model.
fn final_fits(
    bundle: &ReportBundle,
    series: &[&MonthlySeries],
    config: &epiforecast_core::RollingConfig,
) -> String {
    let mut out = String::from("region,month,actual,fitted,residual\n");
    for s in series {
        let Some(rep) = bundle.per_region.get(s.region()).and_then(|o| o.report.as_ref()) else {
            continue;
        };
        let fit = fit_model(s, rep.final_choice, &config.fit).and_then(|m| {
            FitReport::from_model(s, &m, ModelRequest::Kind(rep.final_choice), None)
        });
        match fit {
            Ok(r) => {
                for line in render::fitted_csv(&r).lines().skip(1) {
                    out.push_str(&output::csv_field(s.region()));
                    out.push(',');
                    out.push_str(line);
                    out.push('\n');
                }
            }
            Err(e) => log::warn!("{}: final model refit failed: {e}", s.region()),
        }
    }
    out
}
