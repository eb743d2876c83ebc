//! Monte Carlo runs, sweeps, method comparison and CSV output.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Method, ScenarioConfig};
use super::pipeline::{run_trial, tag_signal, TagSignal, TrialRecord};
use crate::channel::reference_amplitude;
use crate::error::{Error, Result};
use crate::scene::Point2D;

/// All trials of `cfg`, ordered by trial id then target order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let tags: Vec<TagSignal> = (0..cfg.scene.targets.len())
        .map(|i| tag_signal(cfg, i))
        .collect::<Result<_>>()?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &tags, t))
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Median with failures (NaN) counted as +infinity.
pub fn median_with_failures(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values
        .into_iter()
        .map(|x| if x.is_nan() { f64::INFINITY } else { x })
        .collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a.is_infinite() || b.is_infinite() {
            b
        } else {
            0.5 * (a + b)
        }
    }
}

fn finite_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub label: String,
    pub n: usize,
    pub success_rate: f64,
    pub median_abs_err_x_cm: f64,
    pub median_abs_err_y_cm: f64,
    pub median_err_cm: f64,
    /// Means over successful trials only.
    pub mean_abs_err_x_cm: f64,
    pub mean_abs_err_y_cm: f64,
    pub mean_err_cm: f64,
    pub los_fraction: f64,
}

pub fn summarize(label: &str, records: &[TrialRecord]) -> Summary {
    let n = records.len();
    let ok = records.iter().filter(|r| r.succeeded()).count();
    let los = records
        .iter()
        .filter(|r| r.verdict == crate::receiver::Verdict::Los)
        .count();
    let frac = |k: usize| if n == 0 { f64::NAN } else { k as f64 / n as f64 };
    Summary {
        label: label.to_string(),
        n,
        success_rate: frac(ok),
        median_abs_err_x_cm: median_with_failures(records.iter().map(|r| r.err_x_cm.abs())),
        median_abs_err_y_cm: median_with_failures(records.iter().map(|r| r.err_y_cm.abs())),
        median_err_cm: median_with_failures(records.iter().map(|r| r.err_cm)),
        mean_abs_err_x_cm: finite_mean(records.iter().map(|r| r.err_x_cm.abs())),
        mean_abs_err_y_cm: finite_mean(records.iter().map(|r| r.err_y_cm.abs())),
        mean_err_cm: finite_mean(records.iter().map(|r| r.err_cm)),
        los_fraction: frac(los),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Distance,
    Snr,
    NTargets,
    Absorption,
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "distance" => Ok(Self::Distance),
            "snr" => Ok(Self::Snr),
            "n_targets" | "targets" => Ok(Self::NTargets),
            "absorption" => Ok(Self::Absorption),
            other => Err(Error::config("sweep.axis", format!("unknown axis `{other}`"))),
        }
    }
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Distance => "distance",
            Self::Snr => "snr",
            Self::NTargets => "n_targets",
            Self::Absorption => "absorption",
        }
    }
}

fn scale_about(p: Point2D, center: Point2D, k: f64) -> Point2D {
    center + (p - center) * k
}

/// Config for one sweep value. Noise power stays at the base scene's absolute
/// level, so geometry and material changes show up as SNR changes.
pub fn sweep_variant(base: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    if cfg.noise.reference_amplitude.is_none() {
        let ids: Vec<&str> = base.scene.targets.iter().map(|t| t.id.as_str()).collect();
        cfg.noise.reference_amplitude = Some(reference_amplitude(&base.scene, ids)?);
    }
    match axis {
        SweepAxis::Snr => cfg.noise.snr_db = Some(value),
        SweepAxis::Absorption => {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::config("sweep.values", "absorption must lie in [0, 1)"));
            }
            for r in &mut cfg.scene.reflectors {
                r.absorption = value;
            }
        }
        SweepAxis::NTargets => {
            let k = value.round() as usize;
            if k == 0 || k > base.scene.targets.len() || (value - k as f64).abs() > 1e-9 {
                return Err(Error::config(
                    "sweep.values",
                    format!("n_targets must be an integer in 1..={}", base.scene.targets.len()),
                ));
            }
            cfg.scene.targets.truncate(k);
        }
        SweepAxis::Distance => {
            let radar = base.scene.radar;
            let d0 = base.scene.targets[0].position.dist(radar);
            if !(value > 0.0) {
                return Err(Error::config("sweep.values", "distances must be positive"));
            }
            let k = value / d0;
            let s = &mut cfg.scene;
            for r in &mut s.reflectors {
                r.endpoint_a = scale_about(r.endpoint_a, radar, k);
                r.endpoint_b = scale_about(r.endpoint_b, radar, k);
            }
            for o in &mut s.obstacles {
                o.a = scale_about(o.a, radar, k);
                o.b = scale_about(o.b, radar, k);
            }
            for t in &mut s.targets {
                t.position = scale_about(t.position, radar, k);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub summary: Summary,
}

pub fn sweep(base: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("sweep.values", "need at least one value"));
    }
    values
        .iter()
        .map(|&v| {
            let cfg = sweep_variant(base, axis, v)?;
            let recs = run_scenario(&cfg)?;
            Ok(SweepRow {
                axis: axis.name().to_string(),
                value: v,
                summary: summarize(&format!("{}={v}", axis.name()), &recs),
            })
        })
        .collect()
}

/// Indices where a median error drops below its predecessor.
pub fn trend_violations(rows: &[SweepRow]) -> Vec<usize> {
    (1..rows.len())
        .filter(|&i| rows[i].summary.median_err_cm < rows[i - 1].summary.median_err_cm)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub summary: Summary,
    /// Median error over that of the first method.
    pub ratio_to_first: f64,
}

/// Same config and seeds under every method.
pub fn compare_report(base: &ScenarioConfig, methods: &[Method]) -> Result<Vec<CompareRow>> {
    if methods.len() < 2 {
        return Err(Error::config("compare.methods", "need at least two methods"));
    }
    let mut rows: Vec<CompareRow> = Vec::new();
    for m in methods {
        let mut cfg = base.clone();
        cfg.method = *m;
        let recs = run_scenario(&cfg)?;
        let summary = summarize(&m.label(), &recs);
        let ratio = match rows.first() {
            Some(first) => summary.median_err_cm / first.summary.median_err_cm,
            None => 1.0,
        };
        rows.push(CompareRow {
            method: m.label(),
            summary,
            ratio_to_first: ratio,
        });
    }
    Ok(rows)
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.4}")
    }
}

pub const TRIALS_HEADER: [&str; 11] = [
    "trial", "target", "truth_x", "truth_y", "est_x", "est_y", "err_x_cm", "err_y_cm", "err_cm", "verdict",
    "anchors_used",
];

/// Timing is left out so the file is a pure function of config and seed.
pub fn write_trials_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        let (ex, ey) = r.estimate.map_or((f64::NAN, f64::NAN), |p| (p.x, p.y));
        w.write_record([
            r.trial.to_string(),
            r.target.clone(),
            num(r.truth.x),
            num(r.truth.y),
            num(ex),
            num(ey),
            num(r.err_x_cm),
            num(r.err_y_cm),
            num(r.err_cm),
            r.verdict.as_str().to_string(),
            r.anchors_used.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "target", "timing_ms"])?;
    for r in records {
        w.write_record([r.trial.to_string(), r.target.clone(), format!("{:.3}", r.timing_ms)])?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 13] = [
    "label", "axis", "value", "n", "success_rate", "median_abs_err_x_cm", "median_abs_err_y_cm", "median_err_cm",
    "mean_abs_err_x_cm", "mean_abs_err_y_cm", "mean_err_cm", "los_fraction", "ratio_to_first",
];

/// Rows: (summary, axis, value, ratio). Unused cells stay empty.
pub fn write_summary_csv<W: Write>(rows: &[(Summary, Option<&str>, Option<f64>, Option<f64>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for (s, axis, value, ratio) in rows {
        w.write_record([
            s.label.clone(),
            axis.unwrap_or("").to_string(),
            value.map(num).unwrap_or_default(),
            s.n.to_string(),
            num(s.success_rate),
            num(s.median_abs_err_x_cm),
            num(s.median_abs_err_y_cm),
            num(s.median_err_cm),
            num(s.mean_abs_err_x_cm),
            num(s.mean_abs_err_y_cm),
            num(s.mean_err_cm),
            num(s.los_fraction),
            ratio.map(num).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
