use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use uwbsim::scenario::{to_text, Scenario, PRESETS};
use uwbsim::sweep::{run_sweep, run_sweep_traced, thread_count, write_csv, SweepKind};

#[derive(Parser)]
#[command(name = "uwbsim", version, about = "IR-UWB wireless sensor network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (optionally swept) and write one CSV row per run.
    Simulate {
        /// Preset name or scenario file.
        #[arg(long)]
        scenario: String,
        /// Seeds: `7`, `1,2,3` or `1..10`. Defaults to the scenario's seed list.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, value_parser = ["retx", "load"])]
        sweep: Option<String>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the full event log of every run here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Override one scenario key, e.g. `--set mac.variant=slotted`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print a scenario in file form.
    Show {
        #[arg(long)]
        scenario: String,
    },
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty seed range `{spec}`");
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed `{s}`")))
        .collect()
}

fn load_scenario(spec: &str, overrides: &[String]) -> Result<Scenario> {
    let mut s = Scenario::load(spec).with_context(|| {
        format!("cannot load scenario `{spec}` (presets: {})", PRESETS.join(", "))
    })?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .with_context(|| format!("override `{o}` is not KEY=VALUE"))?;
        s.apply(k.trim(), v.trim(), None)
            .with_context(|| format!("override `{o}`"))?;
    }
    s.validate()?;
    Ok(s)
}

fn simulate(
    scenario: &str,
    seed: Option<&str>,
    sweep: Option<&str>,
    out: Option<&PathBuf>,
    trace: Option<&PathBuf>,
    overrides: &[String],
) -> Result<()> {
    let s = load_scenario(scenario, overrides)?;
    let seeds = match seed {
        Some(spec) => parse_seeds(spec)?,
        None => s.seeds.clone(),
    };
    let sweep = sweep.map(|k| k.parse::<SweepKind>()).transpose()?;
    let threads = thread_count();
    let rows = match trace {
        None => run_sweep(&s, sweep, &seeds, threads)?,
        Some(path) => {
            let runs = run_sweep_traced(&s, sweep, &seeds, threads)?;
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            for (row, lines) in &runs {
                writeln!(
                    w,
                    "# run seed={} mac={} retx={} load={}",
                    row.seed, row.mac, row.retx, row.load_pps
                )?;
                for l in lines {
                    writeln!(w, "{l}")?;
                }
            }
            w.flush()?;
            runs.into_iter().map(|(r, _)| r).collect()
        }
    };
    match out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, BufWriter::new(f))?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            scenario,
            seed,
            sweep,
            out,
            trace,
            overrides,
        } => simulate(
            &scenario,
            seed.as_deref(),
            sweep.as_deref(),
            out.as_ref(),
            trace.as_ref(),
            &overrides,
        ),
        Command::Show { scenario } => {
            print!("{}", to_text(&load_scenario(&scenario, &[])?));
            Ok(())
        }
    }
}
