//! Campaign file parser.
//!
//! Flat key-value text with one `[scenario <id>]` section per campaign.
//! Keys before the first section are campaign-wide (currently `seed`).
//! Unknown keys are rejected with the offending key and line named, so a
//! typo cannot silently fall back to a default.
//!
//! ```text
//! seed = 42
//!
//! [scenario zf_m100_stat]
//! antennas = 100
//! channel = rayleigh        # or keyhole:<count>
//! scheme = zf               # mr | zf
//! objective = sum_rate      # sum_rate | max_min
//! design = stat             # stat | inst
//! # everything else is optional; see default_* in this module
//! ```

use mmimo::{
    ChannelModel, CsiMode, KeyholeSpec, Objective, Scenario, Scheme, SystemConfig,
};

/// Parse failure with enough context to fix the file.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug)]
pub struct CampaignFile {
    pub scenarios: Vec<(String, Scenario)>,
}

#[derive(Debug, Default, Clone)]
struct RawScenario {
    name: String,
    header_line: usize,
    entries: Vec<(String, String, usize)>, // key, value, line
}

const SCENARIO_KEYS: &[&str] = &[
    "antennas",
    "users",
    "cell_radius_m",
    "bandwidth_hz",
    "noise_dbm",
    "bs_power_w",
    "pilot_power_w",
    "tau_c",
    "tau_u",
    "tau_d",
    "shadowing_db",
    "channel",
    "scheme",
    "objective",
    "design",
    "drops",
    "smallscale",
    "mc_stat",
    "seed",
];

const REQUIRED_KEYS: &[&str] = &["antennas", "channel", "scheme", "objective", "design"];

pub fn parse_campaign(text: &str) -> Result<CampaignFile, ConfigError> {
    let mut seed: u64 = 1;
    let mut raws: Vec<RawScenario> = Vec::new();
    let mut in_section = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let Some(header) = header.strip_suffix(']') else {
                return Err(ConfigError::at(line_no, "unterminated section header"));
            };
            let mut parts = header.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some("scenario"), Some(name), None) => {
                    if !name
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                    {
                        return Err(ConfigError::at(
                            line_no,
                            format!("scenario id `{name}` may use only letters, digits, `_`, `-`"),
                        ));
                    }
                    if raws.iter().any(|r| r.name == name) {
                        return Err(ConfigError::at(
                            line_no,
                            format!("duplicate scenario id `{name}`"),
                        ));
                    }
                    raws.push(RawScenario {
                        name: name.to_string(),
                        header_line: line_no,
                        entries: Vec::new(),
                    });
                    in_section = true;
                }
                _ => {
                    return Err(ConfigError::at(
                        line_no,
                        format!("expected `[scenario <id>]`, found `[{header}]`"),
                    ));
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::at(
                line_no,
                format!("expected `key = value`, found `{line}`"),
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(ConfigError::at(line_no, format!("key `{key}` has no value")));
        }
        if in_section {
            if !SCENARIO_KEYS.contains(&key) {
                return Err(ConfigError::at(line_no, format!("unknown key `{key}`")));
            }
            raws.last_mut()
                .unwrap()
                .entries
                .push((key.to_string(), value.to_string(), line_no));
        } else {
            match key {
                "seed" => {
                    seed = value.parse().map_err(|_| {
                        ConfigError::at(line_no, format!("seed `{value}` is not a 64-bit integer"))
                    })?;
                }
                _ => {
                    return Err(ConfigError::at(
                        line_no,
                        format!("unknown campaign key `{key}` (scenario keys belong below a `[scenario <id>]` header)"),
                    ));
                }
            }
        }
    }

    if raws.is_empty() {
        return Err(ConfigError::general(
            "config defines no `[scenario <id>]` section",
        ));
    }

    let mut scenarios = Vec::with_capacity(raws.len());
    for raw in &raws {
        scenarios.push((raw.name.clone(), build_scenario(raw, seed)?));
    }
    Ok(CampaignFile { scenarios })
}

fn lookup<'a>(raw: &'a RawScenario, key: &str) -> Option<(&'a str, usize)> {
    raw.entries
        .iter()
        .rev()
        .find(|(k, _, _)| k == key)
        .map(|(_, v, line)| (v.as_str(), *line))
}

fn parse_num<T: std::str::FromStr>(
    raw: &RawScenario,
    key: &str,
    default: T,
) -> Result<T, ConfigError> {
    match lookup(raw, key) {
        Some((value, line)) => value.parse().map_err(|_| {
            ConfigError::at(
                line,
                format!("key `{key}`: cannot parse `{value}` as a number"),
            )
        }),
        None => Ok(default),
    }
}

fn build_scenario(raw: &RawScenario, campaign_seed: u64) -> Result<Scenario, ConfigError> {
    for &key in REQUIRED_KEYS {
        if lookup(raw, key).is_none() {
            return Err(ConfigError::at(
                raw.header_line,
                format!("scenario `{}` is missing required key `{key}`", raw.name),
            ));
        }
    }

    let defaults = SystemConfig::default();
    let users = parse_num(raw, "users", defaults.users)?;
    let antennas = parse_num(raw, "antennas", defaults.antennas)?;
    let cfg = SystemConfig {
        antennas,
        users,
        cell_radius_m: parse_num(raw, "cell_radius_m", defaults.cell_radius_m)?,
        bandwidth_hz: parse_num(raw, "bandwidth_hz", defaults.bandwidth_hz)?,
        bs_power_w: parse_num(raw, "bs_power_w", defaults.bs_power_w)?,
        noise_power_dbm: parse_num(raw, "noise_dbm", defaults.noise_power_dbm)?,
        pilot_power_w: parse_num(raw, "pilot_power_w", defaults.pilot_power_w)?,
        tau_c: parse_num(raw, "tau_c", defaults.tau_c)?,
        tau_u: parse_num(raw, "tau_u", users)?,
        tau_d: parse_num(raw, "tau_d", users)?,
        rng_seed: parse_num(raw, "seed", campaign_seed)?,
        pathloss: defaults.pathloss,
        shadowing_sigma_db: parse_num(raw, "shadowing_db", 0.0)?,
    };

    let (channel_text, channel_line) = lookup(raw, "channel").unwrap();
    let channel_model = parse_channel(channel_text, users)
        .map_err(|msg| ConfigError::at(channel_line, msg))?;

    let (scheme_text, scheme_line) = lookup(raw, "scheme").unwrap();
    let scheme = match scheme_text {
        "mr" => Scheme::Mr,
        "zf" => Scheme::Zf,
        other => {
            return Err(ConfigError::at(
                scheme_line,
                format!("scheme must be `mr` or `zf`, got `{other}`"),
            ));
        }
    };

    let (objective_text, objective_line) = lookup(raw, "objective").unwrap();
    let objective = match objective_text {
        "sum_rate" => Objective::SumRate,
        "max_min" => Objective::MaxMin,
        other => {
            return Err(ConfigError::at(
                objective_line,
                format!("objective must be `sum_rate` or `max_min`, got `{other}`"),
            ));
        }
    };

    let (design_text, design_line) = lookup(raw, "design").unwrap();
    let design = match design_text {
        "stat" => CsiMode::Statistical,
        "inst" => CsiMode::Instantaneous,
        other => {
            return Err(ConfigError::at(
                design_line,
                format!("design must be `stat` or `inst`, got `{other}`"),
            ));
        }
    };

    let scenario = Scenario {
        cfg,
        channel_model,
        scheme,
        objective,
        design,
        n_drops: parse_num(raw, "drops", 100)?,
        n_smallscale: parse_num(raw, "smallscale", 200)?,
        n_mc_stat: parse_num(raw, "mc_stat", 1000)?,
    };
    scenario.validate().map_err(|e| {
        ConfigError::at(
            raw.header_line,
            format!("scenario `{}` is invalid: {e}", raw.name),
        )
    })?;
    Ok(scenario)
}

fn parse_channel(text: &str, users: usize) -> Result<ChannelModel, String> {
    if text == "rayleigh" {
        return Ok(ChannelModel::Rayleigh);
    }
    if let Some(count) = text.strip_prefix("keyhole:") {
        let keyholes: usize = count
            .parse()
            .map_err(|_| format!("keyhole count `{count}` is not an integer"))?;
        let spec = KeyholeSpec::uniform(users, keyholes).map_err(|e| e.to_string())?;
        return Ok(ChannelModel::Keyhole(spec));
    }
    Err(format!(
        "channel must be `rayleigh` or `keyhole:<count>`, got `{text}`"
    ))
}
