//! Argument parsing and file handling around [`crate::commands`].

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, AuditFlags, Outcome};
use crate::report::{Report, Status};

#[derive(Debug, Parser)]
#[command(name = "skelcov", version, about = "Check decorated covers of metric graphs")]
pub struct Cli {
    /// Worker threads for commands taking several files.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the cover axioms.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Genus and divisor audits; all of them when no flag is given.
    Audit {
        #[arg(long)]
        global_rh: bool,
        #[arg(long)]
        local_rh: bool,
        #[arg(long)]
        combined: bool,
        #[arg(long)]
        w: bool,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Enlarge the spec's flow to a compatible skeleton.
    Skeletonize {
        file: PathBuf,
        /// Where to write the enlarged spec; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        check_idempotent: bool,
    },
    /// Fiber-count and germ-lift checks for a spec with a galois block.
    GaloisCheck { file: PathBuf },
    /// Tree-of-balls computations over the projective line.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Render the cover as DOT.
    Export {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct BallArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub center: String,
    #[arg(long, allow_hyphen_values = true)]
    pub radius: String,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Valuation of the polynomial at a ball.
    Val(BallArgs),
    /// Roots of the polynomial in a closed ball.
    Zeros(BallArgs),
    /// The ball tree of the point set, with germ slopes when a polynomial is given.
    Tree {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
        /// Add the ray to infinity.
        #[arg(long)]
        projective: bool,
    },
    /// The cover induced by the document's polynomial map.
    Induce {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn color_enabled() -> bool {
    std::env::var_os("SKELCOV_NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn with_text(command: &str, path: &Path, f: impl FnOnce(&str, &str) -> Outcome) -> Outcome {
    let name = path.display().to_string();
    match read(path) {
        Ok(text) => f(&name, &text),
        Err(e) => {
            let mut r = Report::new(command, &name);
            r.fatal(e);
            r.into()
        }
    }
}

/// Runs `f` over `files` on up to `jobs` threads, keeping input order.
fn batch(files: &[PathBuf], jobs: usize, f: impl Fn(&Path) -> Outcome + Sync) -> Vec<Outcome> {
    let slots: Vec<Mutex<Option<Outcome>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|sc| {
        for _ in 0..jobs.clamp(1, files.len().max(1)) {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                *slots[i].lock().expect("no worker panics while holding a slot") = Some(f(path));
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every file ran")).collect()
}

fn outcomes(cli: &Cli) -> Vec<(Outcome, Option<&Path>)> {
    let jobs = cli.jobs;
    match &cli.command {
        Command::Validate { files } => {
            batch(files, jobs, |p| with_text("validate", p, commands::validate)).into_iter().map(|o| (o, None)).collect()
        }
        &Command::Audit { global_rh, local_rh, combined, w, ref files } => {
            let flags = AuditFlags { global_rh, local_rh, combined, w };
            batch(files, jobs, |p| with_text("audit", p, |n, t| commands::audit(n, t, flags)))
                .into_iter()
                .map(|o| (o, None))
                .collect()
        }
        Command::Skeletonize { file, out, check_idempotent } => {
            vec![(with_text("skeletonize", file, |n, t| commands::skeletonize(n, t, *check_idempotent)), out.as_deref())]
        }
        Command::GaloisCheck { file } => vec![(with_text("galois-check", file, commands::galois_check), None)],
        Command::Oracle(OracleCommand::Val(a)) => {
            vec![(with_text("oracle val", &a.file, |n, t| commands::oracle_ball(n, t, &a.center, &a.radius, false)), None)]
        }
        Command::Oracle(OracleCommand::Zeros(a)) => {
            vec![(with_text("oracle zeros", &a.file, |n, t| commands::oracle_ball(n, t, &a.center, &a.radius, true)), None)]
        }
        Command::Oracle(OracleCommand::Tree { file, base, projective }) => {
            vec![(with_text("oracle tree", file, |n, t| commands::oracle_tree(n, t, base.as_deref(), *projective)), None)]
        }
        Command::Oracle(OracleCommand::Induce { file, out }) => {
            vec![(with_text("oracle induce", file, commands::oracle_induce), out.as_deref())]
        }
        Command::Export { file, out } => vec![(with_text("export", file, commands::export), out.as_deref())],
    }
}

/// Runs a parsed command line, writing reports and documents; returns the
/// process exit code.
///
/// A produced document goes to `--out` when given, with the report on
/// stdout; otherwise the document goes to stdout and the report to stderr.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write, color: bool) -> i32 {
    let mut worst = Status::Pass;
    for (mut o, out) in outcomes(cli) {
        let mut sink: &mut dyn Write = &mut *stdout;
        if let Some(doc) = o.document.take().filter(|_| o.report.status() != Status::Error) {
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &doc) {
                        o.report.fatal(format!("{}: {e}", path.display()));
                    } else {
                        o.report.set("written", path.display());
                    }
                }
                None => {
                    let _ = stdout.write_all(doc.as_bytes());
                    sink = &mut *stderr;
                }
            }
        }
        let _ = sink.write_all(o.report.render(color).as_bytes());
        worst = worst.max(o.report.status());
    }
    worst.code()
}

/// Entry point for the binary: parse errors exit 1, help and version 0.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(&cli, &mut stdout.lock(), &mut stderr.lock(), color_enabled())
}
