use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlos_lab::error::{Error, Result};
use nlos_lab::harness::pipeline::{simulate_trial_frames, tag_signal, trial_rng, TagSignal};
use nlos_lab::harness::{
    run_scenario, summarize, sweep_variant, trend_violations, trial_spectrum, write_summary_csv, write_timing_csv,
    write_trials_csv, Method, ScenarioConfig, Summary, SweepAxis, SweepRow, TrialRecord,
};
use nlos_lab::scene::enumerate_first_order_paths;

#[derive(Parser)]
#[command(name = "nlos-lab", version, about = "Backscatter-tag NLoS localization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's `trials`.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the TLC and RLC frames of one trial and list the true paths.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trial to simulate.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run the full chain over all trials.
    Locate {
        #[command(flatten)]
        common: Common,
        /// Also write the range-angle spectrum of trial 0, first target.
        #[arg(long)]
        spectrum: bool,
    },
    /// Repeat the scenario along one axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// distance, snr, n_targets or absorption.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Same frames under several methods, e.g. HFD+FS_MUSIC,HFD+MUSIC.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<Method>,
    },
}

fn load(c: &Common) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    fs::create_dir_all(&c.out)?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_run(dir: &Path, records: &[TrialRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trials_csv(records, create(dir, "trials.csv")?)?;
    write_timing_csv(records, create(dir, "timing.csv")?)
}

fn simulate(common: &Common, trial: usize) -> Result<()> {
    let cfg = load(common)?;
    let tags: Vec<TagSignal> = (0..cfg.scene.targets.len())
        .map(|i| tag_signal(&cfg, i))
        .collect::<Result<_>>()?;
    let frames = simulate_trial_frames(&cfg, &tags, &mut trial_rng(cfg.seed, trial as u64))?;
    frames.tlc.write_csv(create(&common.out, "frame_tlc.csv")?)?;
    frames.rlc.write_csv(create(&common.out, "frame_rlc.csv")?)?;
    let mut w = csv::Writer::from_writer(create(&common.out, "paths.csv")?);
    w.write_record(["target", "offset", "reflector", "d_rs", "d_st", "d_total", "aoa_deg", "attenuation"])?;
    for (t, off) in cfg.scene.targets.iter().zip(&frames.offsets) {
        for p in enumerate_first_order_paths(&cfg.scene, &t.id)? {
            w.write_record([
                t.id.clone(),
                off.to_string(),
                p.reflector_index.to_string(),
                format!("{:.6}", p.d_rs),
                format!("{:.6}", p.d_st),
                format!("{:.6}", p.d_total),
                format!("{:.4}", p.aoa_phi.to_degrees()),
                format!("{:.6e}", p.attenuation),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn locate(common: &Common, spectrum: bool) -> Result<()> {
    let cfg = load(common)?;
    let records = run_scenario(&cfg)?;
    write_run(&common.out, &records)?;
    let s = summarize(&cfg.method.label(), &records);
    write_summary_csv(&[(s.clone(), None, None, None)], create(&common.out, "summary.csv")?)?;
    if spectrum {
        trial_spectrum(&cfg, 0, 0)?.write_csv(create(&common.out, "spectrum.csv")?)?;
    }
    report(&s);
    Ok(())
}

fn sweep(common: &Common, axis: SweepAxis, values: &[f64]) -> Result<()> {
    let base = load(common)?;
    let mut rows = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let cfg = sweep_variant(&base, axis, v)?;
        let records = run_scenario(&cfg)?;
        write_run(&common.out.join(format!("{:02}_{}_{v}", i, axis.name())), &records)?;
        let summary = summarize(&format!("{}={v}", axis.name()), &records);
        report(&summary);
        rows.push(SweepRow {
            axis: axis.name().to_string(),
            value: v,
            summary,
        });
    }
    let table: Vec<(Summary, Option<&str>, Option<f64>, Option<f64>)> = rows
        .iter()
        .map(|r| (r.summary.clone(), Some(r.axis.as_str()), Some(r.value), None))
        .collect();
    write_summary_csv(&table, create(&common.out, "summary.csv")?)?;
    let bad = trend_violations(&rows);
    if !bad.is_empty() {
        let at: Vec<String> = bad.iter().map(|&i| rows[i].value.to_string()).collect();
        eprintln!("note: median error decreases at {}={}", axis.name(), at.join(","));
    }
    Ok(())
}

fn compare(common: &Common, methods: &[Method]) -> Result<()> {
    let base = load(common)?;
    if methods.len() < 2 {
        return Err(Error::InvalidConfig {
            field: "--methods".into(),
            reason: "need at least two methods".into(),
        });
    }
    let mut table = Vec::new();
    let mut first = None;
    for (i, m) in methods.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.method = *m;
        let records = run_scenario(&cfg)?;
        write_run(&common.out.join(format!("{:02}_{}", i, m.label())), &records)?;
        let s = summarize(&m.label(), &records);
        let ratio = s.median_err_cm / *first.get_or_insert(s.median_err_cm);
        report(&s);
        table.push((s, None, None, Some(ratio)));
    }
    write_summary_csv(&table, create(&common.out, "summary.csv")?)
}

fn report(s: &Summary) {
    println!(
        "{}: n={} success={:.3} median_err_cm={:.2} median_abs_x_cm={:.2} median_abs_y_cm={:.2}",
        s.label, s.n, s.success_rate, s.median_err_cm, s.median_abs_err_x_cm, s.median_abs_err_y_cm
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate { common, trial } => simulate(common, *trial),
        Command::Locate { common, spectrum } => locate(common, *spectrum),
        Command::Sweep { common, axis, values } => sweep(common, *axis, values),
        Command::Compare { common, methods } => compare(common, methods),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::InvalidConfig { .. } | Error::InvalidScene(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
