//! `cptgen` command line.
//!
//! Exit codes: 0 success, 1 the document could not be read or is invalid
//! (including usage errors), 2 verification failed.

use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cptgen::document::{ElicitationDocument, Strictness};
use cptgen::export::{export_cpt, import_json, Format};
use cptgen::questions::questionnaire;
use cptgen::service::{self, AppState};
use cptgen::verify::{verify, verify_table, FLATNESS_TOLERANCE};
use cptgen_core::geometry::HULL_TOLERANCE;
use cptgen_core::{enumerate_configurations, generate_cpt};

const EXIT_INVALID: u8 = 1;
const EXIT_UNVERIFIED: u8 = 2;

#[derive(Parser)]
#[command(name = "cptgen", version, about = "Weighted-sum CPT generation from elicited anchor distributions")]
struct Cli {
    /// Keep unknown document fields instead of rejecting them.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a document parses and describes a valid elicitation.
    Validate { doc: PathBuf },
    /// Generate the full table.
    Generate {
        doc: PathBuf,
        /// csv, json or xmlbif
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every generated row for hull membership and flatness.
    Verify {
        doc: PathBuf,
        /// Check this JSON table (as written by `generate --format json`)
        /// instead of a freshly generated one.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Print the number of distinct anchors and the questions to ask.
    Questions { doc: PathBuf },
    /// Run the what-if HTTP service.
    Serve {
        doc: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

fn load(path: &Path, strictness: Strictness) -> Result<ElicitationDocument, ExitCode> {
    let bytes = fs::read(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_INVALID)
    })?;
    ElicitationDocument::load(&bytes, strictness).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(EXIT_INVALID)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let strictness = if cli.lenient { Strictness::Lenient } else { Strictness::Strict };
    match run(cli.command, strictness) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn run(command: Command, strictness: Strictness) -> Result<(), ExitCode> {
    match command {
        Command::Validate { doc } => {
            let document = load(&doc, strictness)?;
            let spec = document.spec();
            println!(
                "{}: valid ({} parents, {} rows, {} anchors)",
                doc.display(),
                spec.parent_count(),
                spec.configuration_count(),
                document.anchors().len()
            );
            println!("revision {}", document.revision());
        }
        Command::Generate { doc, format, out } => {
            let document = load(&doc, strictness)?;
            let result = generate_cpt(document.spec(), document.anchors()).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INVALID)
            })?;
            let bytes = export_cpt(&result.cpt, format);
            match out {
                Some(path) => {
                    fs::write(&path, &bytes).map_err(|e| {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        ExitCode::from(EXIT_INVALID)
                    })?;
                    eprintln!("wrote {} rows to {}", result.cpt.len(), path.display());
                }
                None => {
                    use std::io::Write;
                    let _ = std::io::stdout().write_all(&bytes);
                }
            }
        }
        Command::Verify { doc, table } => {
            let document = load(&doc, strictness)?;
            let report = match table {
                None => verify(document.anchors()),
                Some(path) => {
                    let bytes = fs::read(&path).map_err(|e| {
                        eprintln!("error: cannot read {}: {e}", path.display());
                        ExitCode::from(EXIT_INVALID)
                    })?;
                    let cpt = import_json(&bytes).map_err(|e| {
                        eprintln!("{}: {e}", path.display());
                        ExitCode::from(EXIT_INVALID)
                    })?;
                    verify_table(document.anchors(), cpt)
                }
            };
            let report = report.map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_UNVERIFIED)
            })?;
            let spec = document.spec();
            let configs = enumerate_configurations(spec);
            for i in report.failures() {
                let row = &report.rows[i];
                println!(
                    "FAIL {}: residual {:.3e} (member: {}), max |Γ| {:.3e}",
                    configs[i].display(spec),
                    row.residual,
                    row.member,
                    row.connection
                );
            }
            let verdict = if report.passed() { "ok" } else { "FAILED" };
            println!(
                "{verdict}: {} rows, {} failing; max residual {:.3e} (< {HULL_TOLERANCE:e}), max |Γ| {:.3e} (<= {FLATNESS_TOLERANCE:e})",
                report.rows.len(),
                report.failures().len(),
                report.max_residual(),
                report.max_connection()
            );
            if !report.passed() {
                return Err(ExitCode::from(EXIT_UNVERIFIED));
            }
        }
        Command::Questions { doc } => {
            let document = load(&doc, strictness)?;
            let questions = questionnaire(document.anchors().compat());
            println!("distinct anchors: {}", questions.len());
            for (i, q) in questions.iter().enumerate() {
                println!("QB{}: {}", i + 1, q.text);
                println!("      covers {}", q.covers.join(", "));
            }
        }
        Command::Serve { doc, port, host } => {
            let document = load(&doc, strictness)?;
            let state = AppState::new(document, Some(doc.clone())).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INVALID)
            })?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            })?;
            runtime
                .block_on(service::serve(state, SocketAddr::new(host, port)))
                .map_err(|e| {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                })?;
        }
    }
    Ok(())
}
