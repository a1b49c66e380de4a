use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use stccpm::channel::{add_noise, noise_density, ChannelRealization};
use stccpm::cpm::index_to_symbol;
use stccpm::harness::{
    run_ber, spectral_shift, sweep_initial_phases, welch_psd, write_ber_csv, write_psd_csv, write_sweep_csv,
    SimConfig, StopRule, WelchOptions,
};
use stccpm::mlse::{Decoder, ReceivedBlock};
use stccpm::seed::rng_for;
use stccpm::stc::{antenna_stream, verify_code_with, VerifyOptions};
use stccpm::{Encoder, Execution, Scheme};

use crate::config::{FieldError, RunConfig, Settings};
use crate::files::{read_samples, write_atomic, write_json, Sidecar, IQ_FORMAT};

/// Orthogonality and continuity tolerances applied by `verify`.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;
pub const CONTINUITY_TOL: f64 = 1e-9;

// seed streams owned by the command line tool
const DATA_STREAM: u64 = 0x10;
const DECODE_NOISE_STREAM: u64 = 0x11;

#[derive(Debug)]
pub enum Failure {
    /// Invalid settings; exit code 2.
    Usage(FieldError),
    /// A check did not pass; exit code 1.
    Check(String),
    /// I/O or numerical failure; exit code 1.
    Runtime(String),
}

impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        Failure::Usage(e)
    }
}

impl From<stccpm::Error> for Failure {
    fn from(e: stccpm::Error) -> Self {
        match e {
            stccpm::Error::InvalidParameter { .. } | stccpm::Error::FamilyMismatch { .. } => {
                Failure::Usage(e.into())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    settings: &'a Settings,
    outputs: Vec<String>,
}

fn manifest(command: &str, s: &Settings, outputs: &[&str]) -> Result<(), Failure> {
    let m = Manifest {
        tool: "stccpm",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: s.seed,
        settings: s,
        outputs: outputs.iter().map(|o| o.to_string()).collect(),
    };
    write_json(&s.out, "manifest.json", &m)?;
    Ok(())
}

fn coded(s: &Settings) -> Result<Scheme, Failure> {
    match s.scheme()? {
        Scheme::Reference => Err(FieldError::new("code", "this command needs a space-time code").into()),
        scheme => Ok(scheme),
    }
}

fn sim_config(s: &Settings) -> Result<SimConfig, Failure> {
    let mut cfg = SimConfig::new(s.scheme()?, s.params()?);
    cfg.channel.lr = s.lr;
    cfg.channel.fading = s.fading;
    cfg.channel.coherence_slots = s.coherence;
    cfg.decoder = s.decoder();
    cfg.frame_slots = s.frame_slots;
    cfg.stop = StopRule {
        min_errors: s.min_errors,
        max_bits: s.max_bits,
    };
    cfg.seed = s.seed;
    cfg.exec = Execution::Parallel;
    cfg.validate()?;
    Ok(cfg)
}

/// Data symbols shared by `encode` and `psd`, so both see the same stream.
fn random_symbols(s: &Settings, n: usize) -> Vec<i32> {
    let mut rng = rng_for(s.seed, &[DATA_STREAM]);
    (0..n).map(|_| index_to_symbol(rng.random_range(0..s.m), s.m)).collect()
}

fn transmit(s: &Settings, symbols: &[i32]) -> Result<Vec<Vec<Complex64>>, Failure> {
    let blocks = Encoder::new(&s.scheme()?, &s.params()?).encode_stream(symbols)?;
    Ok((0..s.lt).map(|m| antenna_stream(&blocks, m)).collect())
}

pub fn verify(s: &Settings) -> Outcome {
    let scheme = coded(s)?;
    let Scheme::Coded(code) = &scheme else { unreachable!() };
    let opts = VerifyOptions {
        trials: s.trials,
        blocks_per_trial: 4,
        seed: s.seed,
    };
    let report = verify_code_with(code, &s.params()?, &opts, Execution::Parallel)?;
    let orthogonal = report.orthogonal(ORTHOGONALITY_TOL);
    let continuous = report.continuous(CONTINUITY_TOL);
    write_json(
        &s.out,
        "verify_report.json",
        &json!({
            "code": scheme.name(),
            "report": report,
            "orthogonality_tolerance": ORTHOGONALITY_TOL,
            "continuity_tolerance": CONTINUITY_TOL,
            "orthogonal": orthogonal,
            "continuous": continuous,
        }),
    )?;
    manifest("verify", s, &["verify_report.json"])?;
    println!(
        "{}: off-diagonal {:.2e}, diagonal {:.2e}, phase jump {:.2e} over {} boundaries",
        scheme.name(),
        report.max_offdiag_ratio,
        report.max_diag_deviation,
        report.max_continuity_jump,
        report.boundaries_checked
    );
    if orthogonal && continuous {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} failed verification", scheme.name())))
    }
}

pub fn encode(s: &Settings) -> Outcome {
    let symbols = random_symbols(s, s.blocks * s.lt);
    let streams = transmit(s, &symbols)?;
    let params = s.params()?;
    let sidecar = Sidecar {
        format: IQ_FORMAT.into(),
        antennas: s.lt,
        samples_per_antenna: streams[0].len(),
        dt: params.dt(),
        es: params.es,
        symbol_time: params.t,
        blocks: s.blocks,
        symbols,
        settings: s.clone(),
    };
    write_atomic(&s.out, "samples.iq", &crate::files::encode_iq(&streams))?;
    write_json(&s.out, "samples.json", &sidecar)?;
    manifest("encode", s, &["samples.iq", "samples.json"])?;
    println!("{} blocks, {} antennas, {} samples each", s.blocks, s.lt, sidecar.samples_per_antenna);
    Ok(())
}

fn input_path(s: &Settings) -> Result<&Path, Failure> {
    s.input
        .as_deref()
        .ok_or_else(|| FieldError::new("input", "an input .iq file is required").into())
}

fn load_input(s: &Settings) -> Result<(Sidecar, Vec<Vec<Complex64>>), Failure> {
    read_samples(input_path(s)?).map_err(|e| FieldError::new("input", e).into())
}

/// Settings for commands that read a sample file: the file's own settings,
/// overridden by anything given explicitly.
pub fn with_input_settings(raw: &RunConfig, defaults: &crate::config::Defaults) -> Result<Settings, Failure> {
    let Some(path) = &raw.input else {
        return Ok(Settings::resolve(raw, defaults)?);
    };
    let (meta, _) = read_samples(path).map_err(|e| FieldError::new("input", e))?;
    let f = &meta.settings;
    let base = RunConfig {
        code: Some(f.code.clone()),
        lt: Some(f.lt),
        h: Some(f.h.clone()),
        m: Some(f.m),
        gamma: Some(f.gamma),
        pulse: Some(format!("{:?}", f.pulse).to_ascii_lowercase()),
        oversampling: Some(f.oversampling),
        theta0: Some(f.theta0.clone()),
        seed: Some(f.seed),
        ..Default::default()
    };
    let resolved_file = Settings::resolve(&base, defaults)?;
    let s = Settings::resolve(&base.overlay(raw), defaults)?;
    if s.params()? != resolved_file.params()? || s.lt != f.lt || s.code != f.code || s.theta0 != f.theta0 {
        return Err(FieldError::new("input", "modulation settings differ from the input file").into());
    }
    Ok(s)
}

pub fn decode(s: &Settings) -> Outcome {
    let (meta, streams) = load_input(s)?;
    let params = s.params()?;
    let scheme = s.scheme()?;
    let span = s.lt * params.oversampling;
    let mut rx: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); meta.samples_per_antenna];
    for stream in &streams {
        for (y, x) in rx.iter_mut().zip(stream) {
            *y += x;
        }
    }
    let ebn0 = s.ebn0_single()?;
    let n0 = noise_density(&params, ebn0);
    let mut rng = rng_for(s.seed, &[DECODE_NOISE_STREAM]);
    add_noise(&mut rx, n0, params.dt(), &mut rng);
    let blocks: Vec<ReceivedBlock> = crate::files::split_blocks(&rx, span)
        .map_err(|e| FieldError::new("input", e))?
        .into_iter()
        .map(|y| ReceivedBlock {
            y: vec![y],
            channel: ChannelRealization::identity(1, s.lt),
        })
        .collect();
    let out = Decoder::new(&scheme, &params, s.decoder())?.decode(&blocks)?;
    let errors = out.symbols.iter().zip(&meta.symbols).filter(|(a, b)| a != b).count();
    write_json(
        &s.out,
        "decoded.json",
        &json!({
            "ebn0_db": if ebn0.is_finite() { json!(ebn0) } else { json!("inf") },
            "symbols": out.symbols,
            "symbol_errors": errors,
            "metric": out.metric,
            "stats": out.stats,
        }),
    )?;
    manifest("decode", s, &["decoded.json"])?;
    println!("{} symbols decoded, {errors} symbol errors", out.symbols.len());
    Ok(())
}

pub fn ber(s: &Settings) -> Outcome {
    let cfg = sim_config(s)?;
    let curve = run_ber(&cfg, &s.ebn0_points()?)?;
    let mut csv = Vec::new();
    write_ber_csv(&curve, &mut csv)?;
    write_atomic(&s.out, "ber_curve.csv", &csv)?;
    manifest("ber", s, &["ber_curve.csv"])?;
    for p in &curve.points {
        println!("{:6.2} dB  BER {:.3e}  ({} errors / {} bits)", p.ebn0_db, p.ber, p.errors, p.bits);
    }
    Ok(())
}

pub fn psd(s: &Settings) -> Outcome {
    let streams = match &s.input {
        Some(_) => load_input(s)?.1,
        None => {
            let n = s.symbols.div_ceil(s.lt) * s.lt;
            transmit(s, &random_symbols(s, n))?
        }
    };
    let params = s.params()?;
    let td = params.t / params.bits_per_symbol() as f64;
    let opts = WelchOptions {
        segment: s.segment,
        ..Default::default()
    };
    let spectra = streams
        .iter()
        .map(|x| welch_psd(x, params.dt(), td, &opts))
        .collect::<stccpm::Result<Vec<_>>>()?;
    let mut outputs = Vec::new();
    for (m, p) in spectra.iter().enumerate() {
        let name = if m == 0 { "psd.csv".to_string() } else { format!("psd_antenna{}.csv", m + 1) };
        let mut csv = Vec::new();
        write_psd_csv(p, &mut csv)?;
        write_atomic(&s.out, &name, &csv)?;
        outputs.push(name);
    }
    let shifts = spectra
        .iter()
        .map(|p| spectral_shift(p, &spectra[0]))
        .collect::<stccpm::Result<Vec<_>>>()?;
    write_json(
        &s.out,
        "psd_report.json",
        &json!({
            "segments": spectra[0].segments,
            "df_td": spectra[0].df,
            "shift_vs_antenna1_f_td": shifts,
            "total_power": spectra.iter().map(|p| p.total_power()).collect::<Vec<_>>(),
        }),
    )?;
    outputs.push("psd_report.json".into());
    let refs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    manifest("psd", s, &refs)?;
    for (m, d) in shifts.iter().enumerate().skip(1) {
        println!("antenna {} vs 1: shift {d:+.4} f*Td", m + 1);
    }
    Ok(())
}

pub fn sweep(s: &Settings) -> Outcome {
    coded(s)?;
    if s.lt != 3 {
        return Err(FieldError::new("Lt", "the initial-phase sweep needs a three-antenna code").into());
    }
    let cfg = sim_config(s)?;
    let grid = sweep_initial_phases(&cfg, s.ebn0_single()?, s.grid)?;
    let mut csv = Vec::new();
    write_sweep_csv(&grid, &mut csv)?;
    write_atomic(&s.out, "sweep.csv", &csv)?;
    let (lo, hi) = (grid.argmin(), grid.argmax());
    write_json(
        &s.out,
        "sweep_report.json",
        &json!({
            "argmin": [grid.theta[lo.0], grid.theta[lo.1]],
            "argmax": [grid.theta[hi.0], grid.theta[hi.1]],
            "min_ber": grid.ber(lo.0, lo.1),
            "max_ber": grid.ber(hi.0, hi.1),
        }),
    )?;
    manifest("sweep", s, &["sweep.csv", "sweep_report.json"])?;
    println!(
        "best (theta1, theta2) = ({}, {}) with BER {:.3e}; worst {:.3e}",
        grid.theta[lo.0],
        grid.theta[lo.1],
        grid.ber(lo.0, lo.1),
        grid.ber(hi.0, hi.1)
    );
    Ok(())
}
