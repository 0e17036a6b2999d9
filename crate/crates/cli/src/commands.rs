//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use mmimo::{
    achievable_rates, hardening_coefficient, recompute_counts, run_scenario, sinr, solve_max_min,
    solve_sum_rate, ChannelModel, CsiMode, Error as CoreError, KeyholeSpec, NrNumerology,
    Objective, PowerAllocation, RngStream, SinrTerms, SolverOptions, ThroughputCdf,
};

use crate::config::parse_campaign;

/// Failures mapped to process exit codes: configuration problems exit 2,
/// runtime/solver problems exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn runtime_io(context: &str, err: std::io::Error) -> CliError {
    CliError::Runtime(format!("{context}: {err}"))
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn cdf_csv(cdf: &ThroughputCdf) -> String {
    let mut out = String::from("throughput_bits_per_s,cdf_probability\n");
    for (sample, prob) in cdf.samples.iter().zip(&cdf.probabilities) {
        let _ = writeln!(out, "{sample},{prob}");
    }
    out
}

pub fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let mut campaign = parse_campaign(&text).map_err(|e| {
        CliError::Config(format!("{}: {e}", config_path.display()))
    })?;
    if let Some(seed) = seed_override {
        for (_, scenario) in &mut campaign.scenarios {
            scenario.cfg.rng_seed = seed;
        }
    }

    std::fs::create_dir_all(out_dir)
        .map_err(|e| runtime_io(&format!("cannot create {}", out_dir.display()), e))?;

    let mut summary = String::from("scenario,design,scheme,model,m,median_bits_per_s,p05_bits_per_s\n");
    for (name, scenario) in &campaign.scenarios {
        let outcome = run_scenario(scenario).map_err(|e| match e {
            CoreError::Campaign { .. } | CoreError::NonConvergence { .. } => {
                CliError::Runtime(format!("scenario `{name}` failed: {e}"))
            }
            other => CliError::Config(format!("scenario `{name}` rejected: {other}")),
        })?;
        let cdf_path = out_dir.join(format!("{name}.csv"));
        std::fs::write(&cdf_path, cdf_csv(&outcome.cdf))
            .map_err(|e| runtime_io(&format!("cannot write {}", cdf_path.display()), e))?;
        let _ = writeln!(
            summary,
            "{name},{},{},{},{},{},{}",
            scenario.design.label(),
            scenario.scheme.label(),
            scenario.channel_model.label(),
            scenario.cfg.antennas,
            outcome.cdf.median,
            outcome.cdf.p05,
        );
        eprintln!(
            "scenario {name}: {} drops, median {:.4e} bits/s",
            scenario.n_drops, outcome.cdf.median
        );
    }
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary)
        .map_err(|e| runtime_io(&format!("cannot write {}", summary_path.display()), e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// hardening
// ---------------------------------------------------------------------------

pub fn cmd_hardening(
    model: &str,
    keyholes: usize,
    antenna_counts: &[usize],
    samples: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let model = match model {
        "rayleigh" => ChannelModel::Rayleigh,
        "keyhole" => ChannelModel::Keyhole(
            KeyholeSpec::uniform(1, keyholes)
                .map_err(|e| CliError::Config(e.to_string()))?,
        ),
        other => {
            return Err(CliError::Config(format!(
                "--model must be `rayleigh` or `keyhole`, got `{other}`"
            )));
        }
    };
    if antenna_counts.is_empty() {
        return Err(CliError::Config("--M needs at least one antenna count".into()));
    }
    let mut csv = String::from("m,hc\n");
    for &m in antenna_counts {
        let mut rng = RngStream::from_seed(seed);
        let hc = hardening_coefficient(&model, m, samples, &mut rng)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let _ = writeln!(csv, "{m},{hc}");
    }
    match out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| runtime_io(&format!("cannot write {}", path.display()), e))?,
        None => print!("{csv}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Parse a terms file: one `rho_d` line, one `a` line with K entries, and
/// K `b` rows (row t holds b_tk for k = 0..K-1).
pub fn parse_terms(text: &str, flavor: CsiMode) -> Result<SinrTerms, CliError> {
    let mut rho_d: Option<f64> = None;
    let mut a: Option<Vec<f64>> = None;
    let mut b_rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let tag = fields.next().unwrap_or("");
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("line {line_no}: `{f}` is not a number"))
                })
            })
            .collect::<Result<_, _>>()?;
        match tag {
            "rho_d" => {
                if values.len() != 1 {
                    return Err(CliError::Config(format!(
                        "line {line_no}: rho_d takes exactly one value"
                    )));
                }
                rho_d = Some(values[0]);
            }
            "a" => a = Some(values),
            "b" => b_rows.push(values),
            other => {
                return Err(CliError::Config(format!(
                    "line {line_no}: unknown row tag `{other}` (expected rho_d, a, or b)"
                )));
            }
        }
    }
    let rho_d = rho_d.ok_or_else(|| CliError::Config("terms file has no rho_d row".into()))?;
    let a = a.ok_or_else(|| CliError::Config("terms file has no a row".into()))?;
    let users = a.len();
    if b_rows.len() != users || b_rows.iter().any(|row| row.len() != users) {
        return Err(CliError::Config(format!(
            "terms file needs a square b block: {users} rows of {users} values, got {} rows of {:?}",
            b_rows.len(),
            b_rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let mut b = Vec::with_capacity(users * users);
    for row in &b_rows {
        b.extend_from_slice(row);
    }
    SinrTerms::new(flavor, a, b, rho_d).map_err(|e| CliError::Config(e.to_string()))
}

fn fmt_vec(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Render the solver report; shared with the integration tests so the CLI
/// output is pinned byte-for-byte to a library call.
pub fn solve_report(terms: &SinrTerms, objective: Objective) -> Result<String, CliError> {
    let options = SolverOptions::default();
    let (allocation, extra): (PowerAllocation, Option<f64>) = match objective {
        Objective::SumRate => {
            let solution = solve_sum_rate(terms, &options)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            (solution.allocation, None)
        }
        Objective::MaxMin => {
            let solution = solve_max_min(terms, &options)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            (solution.allocation, Some(solution.sinr_floor))
        }
    };
    let rates = achievable_rates(terms, &allocation);
    let sinrs: Vec<f64> = (0..terms.users())
        .map(|k| sinr(terms, &allocation, k))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "objective: {}", objective.label());
    let _ = writeln!(out, "eta: {}", fmt_vec(allocation.eta()));
    let _ = writeln!(out, "sinr: {}", fmt_vec(&sinrs));
    let _ = writeln!(out, "rate_bits_per_hz: {}", fmt_vec(&rates.per_user));
    let _ = writeln!(out, "sum_rate_bits_per_hz: {:.6}", rates.sum);
    let _ = writeln!(out, "min_rate_bits_per_hz: {:.6}", rates.min);
    if let Some(floor) = extra {
        let _ = writeln!(out, "sinr_floor: {floor:.6}");
    }
    Ok(out)
}

pub fn cmd_solve(terms_path: &Path, objective: Objective) -> Result<(), CliError> {
    let text = std::fs::read_to_string(terms_path).map_err(|e| {
        CliError::Config(format!("cannot read terms {}: {e}", terms_path.display()))
    })?;
    // Fixed terms carry no averaging flavor; treat the diagonal as given.
    let terms = parse_terms(&text, CsiMode::Statistical)?;
    print!("{}", solve_report(&terms, objective)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// overhead
// ---------------------------------------------------------------------------

pub fn cmd_overhead(numerology: &NrNumerology) -> Result<(), CliError> {
    let counts = recompute_counts(numerology).map_err(|e| CliError::Config(e.to_string()))?;
    println!("recomputations_per_tti: {}", counts.per_tti);
    println!("recomputations_per_frame: {}", counts.per_frame);
    println!(
        "recomputations_per_{}_frames: {}",
        numerology.frames, counts.per_n_frames
    );
    Ok(())
}
