//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2 configuration
//! error, 3 no sign change found by a root search.
//!
//! Transcripts are JSON lines. The first line is a header object
//! `{"header": {...}}` carrying the version, the resolved configuration and
//! the sampling note; every further line is one round:
//! `{"round_index":0,"keys":[[a,b],...],"outcome":"psi+","sifted":true,"sample":false}`.

mod config;

pub use config::{parse_grid, RunConfig};

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::channel::{AdversaryModel, Topology};
use crate::error::Error;
use crate::protocol::{
    reconstruct_secret, round_rng, sift_and_check, sifted_error_rate, simulate,
    verify_tables_against, virtual_ghz_equivalence, Links, SimulationParams, TableEntry,
    TranscriptLine, REFERENCE_TABLES,
};
use crate::rates::{
    closed_form_spectrum, gram_holevo, gram_spectrum, holevo_bound, max_distance, rate_curve,
    threshold_fidelity,
};

/// Version line embedded in every artifact.
pub const VERSION_LINE: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Note recorded in transcript headers.
pub const SAMPLING_NOTE: &str = "security-check samples are drawn from sifted rounds";

/// TV-distance tolerance used by `verify`.
pub const TV_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    NoBracket(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoBracket(_) => 3,
            CliError::Model(Error::NoSignChange { .. }) => 3,
            CliError::Model(Error::OutOfRange { .. } | Error::ValidityRegion(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mdiqss",
    version,
    about = "Simulator and analytics for MDI quantum secret sharing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub rounds: Option<u64>,
    #[arg(long, global = true)]
    pub parties: Option<usize>,
    /// Channel fidelity P = 1 − e_x (repeatable).
    #[arg(long, global = true)]
    pub fidelity: Vec<f64>,
    /// symmetric | proximal (repeatable).
    #[arg(long, global = true)]
    pub topology: Vec<Topology>,
    /// Detector dark-count probability (repeatable).
    #[arg(long = "dark-count", global = true)]
    pub dark_count: Vec<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Distance grid START:STOP:STEP in km.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// none | intercept-resend-x | intercept-resend-y | dishonest-bob
    #[arg(long, global = true)]
    pub adversary: Option<AdversaryModel>,
    #[arg(long = "sample-fraction", global = true)]
    pub sample_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Segment length in km for `simulate`.
    #[arg(long, global = true)]
    pub distance: Option<f64>,
    /// Monte Carlo trials per check for `verify`.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Outcome tables, Gram spectrum and virtual-GHZ checks.
    Verify {
        /// Test mode: flip the reference cell `A:C:B` (Alice's a, Charlie's
        /// key index, Bob's key index) before checking.
        #[arg(long = "inject-fault", value_name = "A:C:B")]
        inject_fault: Option<String>,
    },
    /// Monte Carlo protocol run with transcript and summary.
    Simulate,
    /// Key-rate curves, one CSV per (fidelity, topology, dark count).
    Rates,
    /// First zero of the key rate in distance.
    Maxdist,
    /// Threshold channel fidelity.
    Threshold,
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.protocol.seed = v;
            c.verify.seed = v;
        }
        if let Some(v) = self.rounds {
            c.protocol.rounds = v;
        }
        if let Some(v) = self.parties {
            c.protocol.parties = v;
        }
        if !self.fidelity.is_empty() {
            c.channel.fidelity = self.fidelity.clone();
        }
        if !self.topology.is_empty() {
            c.channel.topology = self.topology.clone();
        }
        if !self.dark_count.is_empty() {
            c.detector.dark_count = self.dark_count.clone();
        }
        if let Some(v) = &self.grid {
            c.rates.grid = v.clone();
        }
        if let Some(v) = self.workers {
            c.protocol.workers = v;
        }
        if let Some(v) = self.adversary {
            c.protocol.adversary = v;
        }
        if let Some(v) = self.sample_fraction {
            c.protocol.sample_fraction = v;
        }
        if let Some(v) = self.threshold {
            c.protocol.threshold = v;
        }
        if let Some(v) = self.distance {
            c.channel.distance_km = v;
        }
        if let Some(v) = self.trials {
            c.verify.trials = v;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = cli.resolve()?;
    match &cli.command {
        Command::Verify { inject_fault } => {
            cmd_verify(&config, inject_fault.as_deref(), cli.out.as_deref(), out)
        }
        Command::Simulate => cmd_simulate(&config, cli.out.as_deref(), out),
        Command::Rates => cmd_rates(&config, cli.out.as_deref(), out),
        Command::Maxdist => cmd_maxdist(&config, cli.out.as_deref(), out),
        Command::Threshold => cmd_threshold(&config, cli.out.as_deref(), out),
    }
}

fn write_json(dir: Option<&Path>, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(value).expect("json");
        text.push('\n');
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn parse_fault(spec: &str) -> Result<(usize, usize, usize), CliError> {
    let parts: Vec<usize> = spec
        .split(':')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--inject-fault `{spec}`: {e}")))?;
    match parts.as_slice() {
        &[a, c, b] if a < 2 && c < 4 && b < 4 => Ok((a, c, b)),
        _ => Err(CliError::Config(format!(
            "--inject-fault `{spec}` must be A:C:B with A < 2, C < 4, B < 4"
        ))),
    }
}

pub fn cmd_verify(
    config: &RunConfig,
    inject_fault: Option<&str>,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut reference = REFERENCE_TABLES;
    if let Some(spec) = inject_fault {
        let (a, c, b) = parse_fault(spec)?;
        let cell = &mut reference[a][c][b];
        *cell = match *cell {
            TableEntry::Same => TableEntry::Opposite,
            TableEntry::Opposite => TableEntry::Unbiased,
            TableEntry::Unbiased => TableEntry::Same,
        };
    }
    let trials = config.verify.trials;
    let mut rng = ChaCha8Rng::seed_from_u64(config.verify.seed);
    let mut failures = Vec::new();
    writeln!(out, "{VERSION_LINE}")?;

    let tables = verify_tables_against(&reference, trials, &mut rng);
    let combos = tables.cells.len();
    let ok = tables.cells.iter().filter(|c| c.pass).count();
    writeln!(
        out,
        "tables: {ok}/{combos} combinations pass ({}/{} deterministic, {}/{} unbiased, {} trials per unbiased cell)",
        tables.deterministic_pass, tables.deterministic_cells, tables.unbiased_pass, tables.unbiased_cells, trials
    )?;
    for c in tables.failures() {
        let msg = format!(
            "table cell Alice {} / Bob {} / Charlie {} ({:?}) failed: P(psi+) = {:.6}",
            c.alice, c.bob, c.charlie, c.entry, c.p_plus
        );
        writeln!(out, "  FAIL {msg}")?;
        failures.push(msg);
    }

    let mut worst_eig = 0.0f64;
    let betas = [-0.9, -0.5, 0.0, 0.5, 0.9];
    for &beta in &betas {
        let s = gram_spectrum(beta)?;
        for (a, b) in s.eigenvalues.iter().zip(closed_form_spectrum(beta)) {
            worst_eig = worst_eig.max((a - b).abs());
        }
    }
    let mut worst_holevo = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let (ex, ey) = (0.25 * i as f64 / 19.0, 0.25 * j as f64 / 19.0);
            let (s, bound) = gram_holevo(ex, ey)?;
            for (a, b) in s.eigenvalues.iter().zip(closed_form_spectrum(s.beta)) {
                worst_eig = worst_eig.max((a - b).abs());
            }
            worst_holevo = worst_holevo.max((bound - holevo_bound(ex, ey, 1.0)?).abs());
        }
    }
    writeln!(
        out,
        "gram: max eigenvalue deviation {worst_eig:.3e}, max holevo deviation {worst_holevo:.3e} (20x20 grid)"
    )?;
    if worst_eig > 1e-10 {
        failures.push(format!("gram eigenvalue deviation {worst_eig:e}"));
    }
    if worst_holevo > 1e-9 {
        failures.push(format!("gram holevo deviation {worst_holevo:e}"));
    }

    let mut ghz = Vec::new();
    for n in [3, 4] {
        let r = virtual_ghz_equivalence(n, trials, &mut rng)?;
        writeln!(
            out,
            "ghz n={n}: TV distance {:.5}, projection checks {}/{}",
            r.tv_distance,
            r.projection_checks - r.projection_failures,
            r.projection_checks
        )?;
        if !r.passed(TV_TOLERANCE) {
            failures.push(format!(
                "virtual GHZ equivalence n={n}: TV {}",
                r.tv_distance
            ));
        }
        ghz.push(r);
    }

    let report = json!({
        "version": VERSION_LINE,
        "config": config.to_json(),
        "tables": tables,
        "gram": {
            "betas": betas,
            "max_eigenvalue_deviation": worst_eig,
            "max_holevo_deviation": worst_holevo,
        },
        "ghz": ghz,
        "failures": failures,
        "passed": failures.is_empty(),
    });
    write_json(dir, "verify.json", &report)?;
    if failures.is_empty() {
        writeln!(out, "all checks passed")?;
        Ok(())
    } else {
        writeln!(out, "{} check(s) failed", failures.len())?;
        Err(CliError::Verification(failures.join("; ")))
    }
}

pub fn cmd_simulate(
    config: &RunConfig,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let pr = &config.protocol;
    let ch = &config.channel;
    let fidelity = ch.fidelity[0];
    let topology = ch.topology[0];
    let e_x = 1.0 - fidelity;
    let e_y = ch.e_y.unwrap_or(e_x);
    let params = SimulationParams {
        n_parties: pr.parties,
        rounds: pr.rounds,
        links: Links::uniform(pr.parties, topology, ch.alpha, ch.distance_km, e_x, e_y)?,
        detector: config.detector(config.detector.dark_count[0]),
        adversary: pr.adversary,
        seed: pr.seed,
    };
    let mut records = simulate(&params, pr.workers)?;
    let conclusive = records.iter().filter(|r| r.outcome.is_conclusive()).count();
    let mut rng = round_rng(pr.seed, u64::MAX);
    let (security, key) = sift_and_check(&mut records, pr.sample_fraction, pr.threshold, &mut rng)?;
    let (full_error, sifted) = sifted_error_rate(&records)?;

    let mut matched = 0usize;
    let mut total = 0usize;
    for missing in 0..pr.parties {
        let others: Vec<usize> = (0..pr.parties).filter(|&p| p != missing).collect();
        let rebuilt = reconstruct_secret(&key, &others)?;
        matched += rebuilt
            .iter()
            .zip(&key.shares[missing])
            .filter(|(a, b)| a == b)
            .count();
        total += rebuilt.len();
    }
    let match_rate = if total == 0 {
        1.0
    } else {
        matched as f64 / total as f64
    };

    let summary = json!({
        "version": VERSION_LINE,
        "config": config.to_json(),
        "rounds": pr.rounds,
        "conclusive": conclusive,
        "sifted": sifted,
        "sifted_error_rate": full_error,
        "security": security,
        "key_length": key.len(),
        "reconstruction_match_rate": match_rate,
        "sampling": SAMPLING_NOTE,
    });

    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        let mut w = io::BufWriter::new(fs::File::create(dir.join("transcript.jsonl"))?);
        let header = json!({"header": {"version": VERSION_LINE, "config": config.to_json(), "sampling": SAMPLING_NOTE}});
        writeln!(w, "{header}")?;
        for r in &records {
            writeln!(
                w,
                "{}",
                serde_json::to_string(&TranscriptLine::from(r)).expect("json")
            )?;
        }
        w.flush()?;
    }
    write_json(dir, "summary.json", &summary)?;

    writeln!(out, "{VERSION_LINE}")?;
    writeln!(
        out,
        "rounds {} conclusive {conclusive} sifted {sifted} sample {} estimated error {:.5} abort {} key {} reconstruction {:.4}",
        pr.rounds,
        security.sample_size,
        security.estimated_error,
        security.abort,
        key.len(),
        match_rate
    )?;
    Ok(())
}

fn tag(fidelity: f64, topology: Topology, p_d: f64) -> String {
    format!("P{fidelity}_{topology}_pd{p_d:e}")
}

pub fn cmd_rates(
    config: &RunConfig,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let grid = parse_grid(&config.rates.grid)?;
    let config_line = config.to_json().to_string();
    writeln!(out, "{VERSION_LINE}")?;
    for &f in &config.channel.fidelity {
        for &t in &config.channel.topology {
            for &p_d in &config.detector.dark_count {
                let params = config.params_for(f, t, p_d)?;
                let curve = rate_curve(&params, &grid)?;
                let mut csv = format!("# {VERSION_LINE}\n# config: {config_line}\n# fidelity={f} topology={t} p_d={p_d:e}\nL_km,R_raw,R_clamped,e_tot,Q\n");
                for p in &curve.points {
                    csv.push_str(&format!(
                        "{},{:e},{:e},{:e},{:e}\n",
                        p.l_km, p.r_raw, p.r_clamped, p.e_tot, p.q
                    ));
                }
                let name = format!("rate_{}.csv", tag(f, t, p_d));
                if let Some(dir) = dir {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join(&name), csv)?;
                }
                let positive = curve
                    .points
                    .iter()
                    .take_while(|p| p.r_raw > 0.0)
                    .last()
                    .map(|p| p.l_km);
                match positive {
                    Some(l) => writeln!(
                        out,
                        "{name}: {} points, R > 0 up to {l} km",
                        curve.points.len()
                    )?,
                    None => writeln!(
                        out,
                        "{name}: {} points, R ≤ 0 on the whole grid",
                        curve.points.len()
                    )?,
                }
            }
        }
    }
    Ok(())
}

pub fn cmd_maxdist(
    config: &RunConfig,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    writeln!(out, "{VERSION_LINE}")?;
    writeln!(out, "config: {}", config.to_json())?;
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for &f in &config.channel.fidelity {
        for &t in &config.channel.topology {
            for &p_d in &config.detector.dark_count {
                let params = config.params_for(f, t, p_d)?;
                match max_distance(&params) {
                    Ok(l) => {
                        writeln!(out, "P={f} {t} p_d={p_d:e}: L_max = {l:.2} km")?;
                        rows.push(
                            json!({"fidelity": f, "topology": t, "p_d": p_d, "max_distance_km": l}),
                        );
                    }
                    Err(e @ Error::NoSignChange { .. }) => {
                        writeln!(out, "P={f} {t} p_d={p_d:e}: no zero crossing ({e})")?;
                        rows.push(json!({"fidelity": f, "topology": t, "p_d": p_d, "max_distance_km": null}));
                        missing.push(tag(f, t, p_d));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    write_json(
        dir,
        "maxdist.json",
        &json!({"version": VERSION_LINE, "config": config.to_json(), "results": rows}),
    )?;
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::NoBracket(format!(
            "no zero crossing for {}",
            missing.join(", ")
        )))
    }
}

pub fn cmd_threshold(
    config: &RunConfig,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let params = config.params_for(
        config.channel.fidelity[0],
        config.channel.topology[0],
        config.detector.dark_count[0],
    )?;
    let p_th = threshold_fidelity(&params)?;
    writeln!(out, "{VERSION_LINE}")?;
    writeln!(out, "config: {}", config.to_json())?;
    writeln!(out, "P_th = {p_th:.5} (e_x = {:.5})", 1.0 - p_th)?;
    write_json(
        dir,
        "threshold.json",
        &json!({"version": VERSION_LINE, "config": config.to_json(), "threshold_fidelity": p_th}),
    )
}
