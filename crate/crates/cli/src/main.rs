use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use msogi::extraction::RunMetrics;
use msogi::scenario::{
    compare, export, metrics, parse_scenario, preset, preset_file, response_grid, run, run_all, write_response_csv,
    ExportPaths, RunOutput, Scenario, PRESET_NAMES,
};

#[derive(Parser)]
#[command(name = "msogi-sim", version, about = "Simulate parallel SOGI harmonic observers on scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Output {
    /// Directory for the trace and metrics files
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write the CSV trace
    #[arg(long)]
    csv: bool,
    /// Write the JSON metrics summary
    #[arg(long)]
    metrics: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file
    Run {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run a built-in scenario (s1-msogi, s1-ssogi, s1-anf, s2-msogi, s2-ssogi, s2-anf)
    Preset {
        name: String,
        /// Print the preset as a scenario file instead of running it
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Run several scenarios over the same signal and compare settling per event
    Compare {
        /// Scenario files or preset names
        #[arg(required = true)]
        inputs: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Export closed-form frequency responses of one harmonic
    Bode {
        file: PathBuf,
        /// Harmonic index, starting at 1
        #[arg(long, default_value_t = 1)]
        harmonic: usize,
        /// Probe grid in Hz as start:stop:count
        #[arg(long, default_value = "1:1000:1000")]
        grid: String,
        /// Held frequency estimate in Hz; defaults to the scenario's f(0)
        #[arg(long)]
        f_hat: Option<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn load(input: &str) -> Result<Scenario> {
    if PRESET_NAMES.contains(&input) {
        return Ok(preset(input)?);
    }
    let text = fs::read_to_string(input).with_context(|| format!("reading {input}"))?;
    parse_scenario(&text).with_context(|| format!("in {input}"))
}

fn summarize(m: &RunMetrics) {
    println!("{}", m.label);
    for ev in &m.events {
        let ms = |t: Option<f64>| t.map_or_else(|| "unsettled".to_string(), |v| format!("{:.2} ms", v * 1e3));
        println!(
            "  [{:.3}, {:.3}) s  t_set(e_y) = {:>10}  t_set(e_1) = {:>10}  freq error = {:+.3e}",
            ev.start,
            ev.end,
            ms(ev.settling_time),
            ms(ev.harmonic_settling.first().copied().flatten()),
            ev.final_frequency_error
        );
    }
    if let Some(f) = &m.failure {
        println!("  stopped early: {f}");
    }
}

fn write_outputs(s: &Scenario, out: &RunOutput, m: &RunMetrics, opts: &Output) -> Result<()> {
    if !opts.csv && !opts.metrics {
        return Ok(());
    }
    fs::create_dir_all(&opts.out_dir).with_context(|| format!("creating {}", opts.out_dir.display()))?;
    let mut paths = ExportPaths::in_dir(&opts.out_dir, &s.label);
    if !opts.csv {
        paths.csv = None;
    }
    if !opts.metrics {
        paths.metrics = None;
    }
    export(&out.trace, s.signal.harmonics().len(), m, &paths)?;
    for p in paths.csv.iter().chain(paths.metrics.iter()) {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn simulate(s: &Scenario, opts: &Output) -> Result<()> {
    let out = run(s)?;
    let m = metrics(s, &out)?;
    summarize(&m);
    write_outputs(s, &out, &m, opts)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("grid must be start:stop:count, got {spec:?}");
    };
    let (a, b, n): (f64, f64, usize) = (a.parse()?, b.parse()?, n.parse()?);
    if n < 2 || !(a > 0.0 && b > a) {
        bail!("grid needs 0 < start < stop and count >= 2");
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn bode(file: &Path, harmonic: usize, grid: &str, f_hat: Option<f64>, out_dir: &Path) -> Result<()> {
    let s = load(&file.to_string_lossy())?;
    if harmonic == 0 || harmonic > s.gains.n() {
        bail!("harmonic must be in 1..={}", s.gains.n());
    }
    let omega_hat = f_hat.map_or_else(|| s.signal.omega_at(0.0), |f| 2.0 * std::f64::consts::PI * f);
    let omegas: Vec<f64> = parse_grid(grid)?.into_iter().map(|f| 2.0 * std::f64::consts::PI * f).collect();
    let rows = response_grid(&s.gains, omega_hat, harmonic - 1, &omegas)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{}.bode_{harmonic}.csv", s.label));
    write_response_csv(fs::File::create(&path)?, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { file, out } => simulate(&load(&file.to_string_lossy())?, &out),
        Command::Preset { name, dump, out } => {
            if dump {
                print!("{}", preset_file(&name)?.to_toml()?);
                Ok(())
            } else {
                simulate(&preset(&name)?, &out)
            }
        }
        Command::Compare { inputs, out } => {
            let scenarios = inputs.iter().map(|i| load(i)).collect::<Result<Vec<_>>>()?;
            let results = run_all(&scenarios).into_iter().collect::<Result<Vec<_>, _>>()?;
            for (s, (o, m)) in scenarios.iter().zip(&results) {
                write_outputs(s, o, m, &out)?;
            }
            let table: Vec<_> = scenarios.iter().zip(&results).map(|(s, (o, m))| (s, o, m)).collect();
            print!("{}", compare(&table)?.to_table());
            Ok(())
        }
        Command::Bode { file, harmonic, grid, f_hat, out_dir } => bode(&file, harmonic, &grid, f_hat, &out_dir),
    }
}
