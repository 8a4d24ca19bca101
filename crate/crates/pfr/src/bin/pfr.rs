//! Batch driver: property-suite verification, descent runs, and end-to-end
//! covering certificates.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use pfr::consts::CERT_SLACK_BITS;
use pfr::descent::{run_descent, DescentConfig};
use pfr::dist::Dist;
use pfr::error::Error;
use pfr::f2n::F2Set;
use pfr::report::{Outcome, RunReport};
use pfr::ruzsa::ruzsa_distance;
use pfr::suites::{run_suite, SuiteKind};
use pfr::tau::{ConditionCheck, TauFunctional};

#[derive(Parser)]
#[command(name = "pfr", version, about = "Entropic Ruzsa calculus and certified coset covers over F_2^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Args)]
struct CommonFlags {
    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Worker threads for suite trials.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct DescentFlags {
    /// Strictly below 1/8.
    #[arg(long, default_value_t = 0.124999)]
    eta: f64,
    /// Target Ruzsa distance, in bits.
    #[arg(long = "d-stop", default_value_t = 1e-6)]
    d_stop: f64,
    #[arg(long = "max-iters", default_value_t = 500)]
    max_iters: usize,
    /// Relative support cutoff θ for subspace extraction.
    #[arg(long, default_value_t = 1e-4)]
    theta: f64,
    /// Write the per-iteration trace to this path.
    #[arg(long = "trace-out")]
    trace_out: Option<PathBuf>,
}

impl DescentFlags {
    fn config(&self) -> DescentConfig {
        DescentConfig {
            eta: self.eta,
            d_stop: self.d_stop,
            max_iters: self.max_iters,
            support_cutoff: self.theta,
            ..DescentConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a property suite on seeded random instances.
    Verify {
        /// One of: measures, fibring, bsg, tau, bridge.
        #[arg(long)]
        suite: String,
        /// Largest ambient dimension (1..=8).
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Descend a pair of distributions to a subspace.
    Descend {
        /// Distribution file for X.
        #[arg(long)]
        x: PathBuf,
        /// Distribution file for Y.
        #[arg(long)]
        y: PathBuf,
        /// "entropic" or "covering:<set-file>".
        #[arg(long, default_value = "entropic")]
        tau: String,
        #[command(flatten)]
        descent: DescentFlags,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Cover a set by translates of a subspace with the 2K^9 certificate.
    Cover {
        /// Set file for A.
        #[arg(long)]
        set: PathBuf,
        #[command(flatten)]
        descent: DescentFlags,
        #[command(flatten)]
        common: CommonFlags,
    },
}

fn digest_bytes(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
        hasher.update([0u8]);
    }
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn emit(report: &RunReport, format: Format) {
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::JsonLines => print!("{}", report.to_json_lines()),
    }
}

fn bool_check(name: &str, ok: bool) -> ConditionCheck {
    ConditionCheck {
        name: name.to_string(),
        instances: 1,
        max_violation: if ok { 0.0 } else { 1.0 },
        tolerance: 0.0,
    }
}

fn cmd_verify(
    suite: &str,
    n: usize,
    trials: usize,
    seed: u64,
    common: &CommonFlags,
) -> Result<RunReport, Error> {
    let kind = SuiteKind::parse(suite)?;
    let digest = digest_bytes(&[
        suite.as_bytes(),
        n.to_string().as_bytes(),
        trials.to_string().as_bytes(),
        seed.to_string().as_bytes(),
    ]);
    let suite_report = run_suite(kind, n, trials, seed, common.jobs)?;
    let mut report = RunReport::new(format!("verify --suite {suite}"), digest);
    report
        .config("n", n)
        .config("trials", trials)
        .config("seed", seed)
        .config("jobs", common.jobs);
    report.metric("max_violation", suite_report.max_violation());
    report.checks(suite_report.checks);
    Ok(report)
}

enum TauChoice {
    Entropic,
    Covering(PathBuf),
}

fn parse_tau(spec: &str) -> Result<TauChoice, Error> {
    if spec == "entropic" {
        return Ok(TauChoice::Entropic);
    }
    if let Some(path) = spec.strip_prefix("covering:") {
        return Ok(TauChoice::Covering(PathBuf::from(path)));
    }
    Err(Error::InvalidConfig(format!(
        "tau must be 'entropic' or 'covering:<set-file>', got {spec:?}"
    )))
}

fn cmd_descend(
    x_path: &PathBuf,
    y_path: &PathBuf,
    tau_spec: &str,
    flags: &DescentFlags,
) -> Result<RunReport, Error> {
    let x_bytes = std::fs::read(x_path)?;
    let y_bytes = std::fs::read(y_path)?;
    let x = Dist::read(&x_bytes[..])?;
    let y = Dist::read(&y_bytes[..])?;
    if x.dim() != y.dim() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("dimension mismatch: {} vs {}", x.dim(), y.dim()),
        });
    }
    let config = flags.config();

    let choice = parse_tau(tau_spec)?;
    let (tau_a, tau_b, digest) = match &choice {
        TauChoice::Entropic => (
            TauFunctional::entropic(y.clone()),
            TauFunctional::entropic(x.clone()),
            digest_bytes(&[&x_bytes, &y_bytes, b"entropic"]),
        ),
        TauChoice::Covering(path) => {
            let set_bytes = std::fs::read(path)?;
            let set = F2Set::read(&set_bytes[..])?;
            (
                TauFunctional::covering(set.clone())?,
                TauFunctional::covering(set)?,
                digest_bytes(&[&x_bytes, &y_bytes, b"covering", &set_bytes]),
            )
        }
    };

    let mut report = RunReport::new(format!("descend --tau {tau_spec}"), digest);
    report
        .config("eta", config.eta)
        .config("d_stop", config.d_stop)
        .config("max_iters", config.max_iters)
        .config("theta", config.support_cutoff);

    let outcome = run_descent(&x, &y, &tau_a, &tau_b, &config);
    let out = match outcome {
        Ok(out) => out,
        Err(Error::NoProgress { iteration, d }) => {
            report
                .metric("iterations", iteration)
                .metric("final_d", d)
                .set_outcome(Outcome::Stall);
            return Ok(report);
        }
        Err(Error::IterationCap { max_iters, d }) => {
            report
                .metric("iterations", max_iters)
                .metric("final_d", d)
                .set_outcome(Outcome::Stall);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };

    if let Some(path) = &flags.trace_out {
        std::fs::write(path, out.trace.to_lines())?;
        std::fs::write(path.with_extension("jsonl"), out.trace.to_json_lines())?;
        report.metric("trace", path.display());
    }

    let basis = out
        .subspace
        .basis()
        .iter()
        .map(|&b| format!("{:0width$b}", b, width = x.dim()))
        .collect::<Vec<_>>()
        .join(",");
    report
        .metric("iterations", out.final_state.iteration)
        .metric("final_d", out.final_state.d)
        .metric("subspace_rank", out.subspace.rank())
        .metric("subspace_basis", if basis.is_empty() { "-".into() } else { basis })
        .metric("rep", out.rep.to_binary_string())
        .metric("tau_uv_sum", out.certificate.tau_uv_sum)
        .metric("tau_bound", out.certificate.bound);

    report.check(bool_check(
        "certified-tau-inequality",
        out.certificate.satisfied,
    ));
    for check in out.trace.validate(tau_a.check_slack().max(tau_b.check_slack())) {
        report.check(ConditionCheck {
            name: check.name.to_string(),
            instances: out.trace.rows.len().max(1),
            max_violation: check.max_violation,
            tolerance: check.tolerance,
        });
    }

    if matches!(choice, TauChoice::Entropic) {
        // Entropic pairing certifies d[U_V;X] + d[U_V;Y] ≤ 10·d[X;Y].
        let uv = Dist::uniform_on_subspace(&out.subspace)?;
        let lhs = ruzsa_distance(&uv, &x)? + ruzsa_distance(&uv, &y)?;
        let rhs = 10.0 * ruzsa_distance(&x, &y)?;
        report.metric("entropic_lhs", lhs).metric("entropic_rhs_10d", rhs);
        report.check(ConditionCheck {
            name: "entropic-ten-d".into(),
            instances: 1,
            max_violation: (lhs - rhs).max(0.0),
            tolerance: CERT_SLACK_BITS,
        });
    }

    Ok(report)
}

fn cmd_cover(set_path: &PathBuf, flags: &DescentFlags) -> Result<RunReport, Error> {
    let set_bytes = std::fs::read(set_path)?;
    let a = F2Set::read(&set_bytes[..])?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let config = flags.config();
    let digest = digest_bytes(&[&set_bytes]);
    let mut report = RunReport::new("cover", digest);
    report
        .config("eta", config.eta)
        .config("d_stop", config.d_stop)
        .config("max_iters", config.max_iters)
        .config("theta", config.support_cutoff);

    let out = match pfr::covering::pfr_cover(&a, &config) {
        Ok(out) => out,
        Err(Error::NoProgress { iteration, d }) => {
            report
                .metric("iterations", iteration)
                .metric("final_d", d)
                .set_outcome(Outcome::Stall);
            return Ok(report);
        }
        Err(Error::IterationCap { max_iters, d }) => {
            report
                .metric("iterations", max_iters)
                .metric("final_d", d)
                .set_outcome(Outcome::Stall);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };

    let translates = out
        .cover
        .translates
        .iter()
        .map(|t| t.to_binary_string())
        .collect::<Vec<_>>()
        .join(",");
    report
        .metric("set_size", a.len())
        .metric("k", out.k)
        .metric("d_aa", out.d_aa)
        .metric("descent_iterations", out.descent_iterations)
        .metric("subspace_rank", out.subspace.rank())
        .metric("vprime_rank", out.cover.vprime.rank())
        .metric("cover_count", out.cover.count())
        .metric("bound_2k9", out.cover.bound)
        .metric("tau_minus_uv", out.tau_minus_uv)
        .metric("tau_plus_uv", out.tau_plus_uv)
        .metric("translates", translates);

    report.check(bool_check("cover-covers-set", out.cover.certificate.covers));
    report.check(bool_check(
        "cover-subspace-within-size",
        out.cover.certificate.subspace_within_size,
    ));
    report.check(bool_check(
        "cover-count-within-2k9",
        out.cover.certificate.count_within_bound,
    ));
    report.check(bool_check("slice-lower-bound", out.slice_lower_bound_ok));
    report.check(bool_check(
        "descent-certificate",
        out.descent_certificate.satisfied,
    ));
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (result, format) = match &cli.command {
        Command::Verify {
            suite,
            n,
            trials,
            seed,
            common,
        } => (cmd_verify(suite, *n, *trials, *seed, common), common.format),
        Command::Descend {
            x,
            y,
            tau,
            descent,
            common,
        } => (cmd_descend(x, y, tau, descent), common.format),
        Command::Cover {
            set,
            descent,
            common,
        } => (cmd_cover(set, descent), common.format),
    };
    match result {
        Ok(report) => {
            emit(&report, format);
            eprintln!(
                "pfr: finished in {} ms ({})",
                start.elapsed().as_millis(),
                report.outcome.label()
            );
            ExitCode::from(report.outcome.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("pfr: error: {err}");
            ExitCode::from(1)
        }
    }
}
