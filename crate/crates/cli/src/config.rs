//! Run configuration: optional fields from a TOML file and the command line,
//! resolved into concrete settings and validated before any work starts.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use stccpm::mlse::{DecoderConfig, Metric};
use stccpm::{CorrectionFamily, CpmParams, FadingModel, ModIndex, PulseShape, Scheme, StCode};

/// A rejected setting, reported as JSON on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<stccpm::Error> for FieldError {
    fn from(e: stccpm::Error) -> Self {
        match e {
            stccpm::Error::InvalidParameter { field, reason } => FieldError::new(field, reason),
            stccpm::Error::FamilyMismatch { .. } => FieldError::new("Lt", e.to_string()),
            other => FieldError::new("config", other.to_string()),
        }
    }
}

/// Every setting, optional so that a config file and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Code family: none, pc2, wang-xia, linpc, rcpc, offpc, corrupted-demo.
    #[arg(long)]
    pub code: Option<String>,
    /// Transmit antennas (only needed for offpc, which exists for 2 and 3).
    #[arg(long = "lt")]
    #[serde(alias = "Lt")]
    pub lt: Option<usize>,
    /// Receive antennas.
    #[arg(long = "lr")]
    #[serde(alias = "Lr")]
    pub lr: Option<usize>,
    /// Modulation index as `num/den`.
    #[arg(long)]
    pub h: Option<String>,
    /// Alphabet size.
    #[arg(long = "M")]
    #[serde(rename = "M", alias = "m")]
    pub m: Option<u32>,
    /// Memory length in symbols.
    #[arg(long)]
    pub gamma: Option<u32>,
    /// Frequency pulse: rec or rc.
    #[arg(long)]
    pub pulse: Option<String>,
    /// Samples per symbol.
    #[arg(long)]
    pub oversampling: Option<usize>,
    /// Initial antenna phases in cycles, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub theta0: Option<Vec<f64>>,
    /// Eb/N0 in dB: `start:step:stop`, a comma list, a single value or `inf`.
    #[arg(long)]
    pub ebn0: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Receiver metric: joint, blockwise, symbolwise or direct.
    #[arg(long)]
    pub metric: Option<String>,
    /// Traceback depth in code blocks.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Fading model: rayleigh, rayleigh-amplitude or none.
    #[arg(long)]
    pub fading: Option<String>,
    /// Slots per fading realisation; defaults to one code block.
    #[arg(long)]
    pub coherence: Option<usize>,
    /// Symbols per simulated frame.
    #[arg(long)]
    pub frame_slots: Option<usize>,
    #[arg(long)]
    pub min_errors: Option<u64>,
    #[arg(long)]
    pub max_bits: Option<u64>,
    /// Random data streams for `verify`.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Code blocks for `encode`.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Data symbols for `psd`.
    #[arg(long)]
    pub symbols: Option<usize>,
    /// Welch segment length in samples.
    #[arg(long)]
    pub segment: Option<usize>,
    /// Grid resolution for `sweep`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Input samples for `decode` and `psd`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, FieldError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FieldError::new("config", format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| FieldError::new("config", e.message().to_string()))
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, code, lt, lr, h, m, gamma, pulse, oversampling, theta0, ebn0, seed, threads, metric,
            truncation, fading, coherence, frame_slots, min_errors, max_bits, trials, blocks, symbols, segment,
            grid, input, out
        );
        self
    }
}

/// Fully resolved settings, written back into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub code: String,
    #[serde(rename = "Lt")]
    pub lt: usize,
    #[serde(rename = "Lr")]
    pub lr: usize,
    pub h: String,
    #[serde(rename = "M")]
    pub m: u32,
    pub gamma: u32,
    pub pulse: PulseShape,
    pub oversampling: usize,
    pub theta0: Vec<f64>,
    pub ebn0: String,
    pub seed: u64,
    pub threads: usize,
    pub metric: Metric,
    pub truncation: usize,
    pub fading: FadingModel,
    pub coherence: Option<usize>,
    pub frame_slots: usize,
    pub min_errors: u64,
    pub max_bits: u64,
    pub trials: usize,
    pub blocks: usize,
    pub symbols: usize,
    pub segment: usize,
    pub grid: usize,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
}

/// Per-command defaults that differ between subcommands.
pub struct Defaults {
    pub code: &'static str,
    pub ebn0: &'static str,
}

fn parse<T: std::str::FromStr<Err = stccpm::Error>>(s: &str) -> Result<T, FieldError> {
    s.parse::<T>().map_err(FieldError::from)
}

fn positive(field: &str, v: usize) -> Result<usize, FieldError> {
    if v == 0 {
        Err(FieldError::new(field, format!("{field} must be positive")))
    } else {
        Ok(v)
    }
}

impl Settings {
    pub fn resolve(cfg: &RunConfig, defaults: &Defaults) -> Result<Self, FieldError> {
        let code = cfg.code.clone().unwrap_or_else(|| defaults.code.to_string());
        let family = family(&code)?;
        let lt = match (family, cfg.lt) {
            (CorrectionFamily::None, None) => 1,
            (CorrectionFamily::None, Some(1)) => 1,
            (CorrectionFamily::None, Some(lt)) => {
                return Err(FieldError::new("Lt", format!("the uncoded reference has one transmit antenna, not {lt}")))
            }
            (CorrectionFamily::OffPc, lt) => lt.unwrap_or(2),
            (CorrectionFamily::LinPc | CorrectionFamily::RcPc, lt) => lt.unwrap_or(3),
            (_, lt) => lt.unwrap_or(2),
        };
        if family != CorrectionFamily::None && !family.supports(lt) {
            return Err(FieldError::new("Lt", format!("{code} is not defined for Lt={lt}")));
        }
        let theta0 = cfg.theta0.clone().unwrap_or_else(|| vec![0.0; lt]);
        if theta0.len() != lt {
            return Err(FieldError::new("theta0", format!("expected {lt} initial phases, got {}", theta0.len())));
        }
        if theta0.iter().any(|t| !t.is_finite()) {
            return Err(FieldError::new("theta0", "initial phases must be finite"));
        }
        let h = cfg.h.clone().unwrap_or_else(|| "1/2".into());
        let h_parsed: ModIndex = parse(&h)?;
        let metric = match &cfg.metric {
            Some(m) => parse(m)?,
            None => DecoderConfig::for_scheme(&scheme_for(family, lt, &theta0)?).metric,
        };
        let settings = Self {
            h: h_parsed.to_string(),
            code,
            lt,
            lr: positive("Lr", cfg.lr.unwrap_or(1))?,
            m: cfg.m.unwrap_or(4),
            gamma: cfg.gamma.unwrap_or(2),
            pulse: parse(cfg.pulse.as_deref().unwrap_or("rec"))?,
            oversampling: cfg.oversampling.unwrap_or(16),
            theta0,
            ebn0: cfg.ebn0.clone().unwrap_or_else(|| defaults.ebn0.to_string()),
            seed: cfg.seed.unwrap_or(0),
            threads: cfg.threads.unwrap_or(0),
            metric,
            truncation: positive("truncation", cfg.truncation.unwrap_or(10))?,
            fading: parse(cfg.fading.as_deref().unwrap_or("rayleigh"))?,
            coherence: cfg.coherence,
            frame_slots: positive("frame_slots", cfg.frame_slots.unwrap_or(60))?,
            min_errors: cfg.min_errors.unwrap_or(100),
            max_bits: cfg.max_bits.unwrap_or(2_000_000),
            trials: positive("trials", cfg.trials.unwrap_or(50))?,
            blocks: positive("blocks", cfg.blocks.unwrap_or(100))?,
            symbols: positive("symbols", cfg.symbols.unwrap_or(8000))?,
            segment: cfg.segment.unwrap_or(4096),
            grid: positive("grid", cfg.grid.unwrap_or(8))?,
            input: cfg.input.clone(),
            out: cfg.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        };
        settings.params()?;
        settings.ebn0_points()?;
        Ok(settings)
    }

    pub fn family(&self) -> CorrectionFamily {
        family(&self.code).expect("validated at resolution")
    }

    pub fn params(&self) -> Result<CpmParams, FieldError> {
        let h: ModIndex = parse(&self.h)?;
        Ok(CpmParams::new(h, self.m, self.gamma, self.pulse)?.with_oversampling(self.oversampling)?)
    }

    pub fn scheme(&self) -> Result<Scheme, FieldError> {
        scheme_for(self.family(), self.lt, &self.theta0)
    }

    pub fn ebn0_points(&self) -> Result<Vec<f64>, FieldError> {
        parse_ebn0(&self.ebn0)
    }

    /// The single Eb/N0 value of commands that take one.
    pub fn ebn0_single(&self) -> Result<f64, FieldError> {
        match self.ebn0_points()?.as_slice() {
            [x] => Ok(*x),
            _ => Err(FieldError::new("ebn0", "this command takes a single Eb/N0 value")),
        }
    }

    pub fn decoder(&self) -> DecoderConfig {
        DecoderConfig {
            metric: self.metric,
            truncation: self.truncation,
        }
    }
}

fn family(code: &str) -> Result<CorrectionFamily, FieldError> {
    match code.to_ascii_lowercase().as_str() {
        "reference" | "conventional" => Ok(CorrectionFamily::None),
        other => parse(other),
    }
}

fn scheme_for(family: CorrectionFamily, lt: usize, theta0: &[f64]) -> Result<Scheme, FieldError> {
    if family == CorrectionFamily::None {
        return Ok(Scheme::Reference);
    }
    Ok(StCode::family(lt, family)?.with_theta0(theta0.to_vec())?.into())
}

/// Parses `start:step:stop` (inclusive), a comma list, a single value or `inf`.
pub fn parse_ebn0(s: &str) -> Result<Vec<f64>, FieldError> {
    let bad = |m: &str| FieldError::new("ebn0", format!("{m} in `{s}`"));
    let value = |t: &str| -> Result<f64, FieldError> {
        let t = t.trim();
        if t.eq_ignore_ascii_case("inf") {
            return Ok(f64::INFINITY);
        }
        t.parse::<f64>().ok().filter(|x| !x.is_nan()).ok_or_else(|| bad("not a number"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let points = match parts.as_slice() {
        [start, step, stop] => {
            let (a, d, b) = (value(start)?, value(step)?, value(stop)?);
            if !(a.is_finite() && d.is_finite() && b.is_finite()) || d <= 0.0 || b < a {
                return Err(bad("a range needs finite bounds and a positive step"));
            }
            let n = ((b - a) / d + 1e-9).floor() as usize;
            (0..=n).map(|k| a + k as f64 * d).collect()
        }
        [_] => s.split(',').map(value).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad("expected start:step:stop")),
    };
    if points.is_empty() {
        return Err(bad("no points"));
    }
    Ok(points)
}
