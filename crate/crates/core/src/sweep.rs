//! Parameter sweeps over seeds and CSV export.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::metrics::Metrics;
use crate::network::{run_scenario, Network};
use crate::scenario::Scenario;

pub const RETX_POINTS: [u32; 7] = [0, 1, 2, 3, 4, 5, 6];
pub const LOAD_POINTS: [f64; 10] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0];

pub const CSV_HEADER: [&str; 11] = [
    "seed",
    "scenario",
    "mac",
    "retx",
    "load_pps",
    "pdr",
    "avg_delay_s",
    "detection_rate",
    "auth_rate",
    "mean_detection_latency_s",
    "p95_detection_latency_s",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Retx,
    Load,
}

impl FromStr for SweepKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "retx" => Ok(SweepKind::Retx),
            "load" => Ok(SweepKind::Load),
            other => Err(SimError::invalid("sweep", format!("unknown sweep `{other}`; expected retx or load"))),
        }
    }
}

/// The scenario variants of a sweep, in sweep order.
pub fn sweep_points(base: &Scenario, sweep: Option<SweepKind>) -> Vec<Scenario> {
    match sweep {
        None => vec![base.clone()],
        Some(SweepKind::Retx) => RETX_POINTS.iter().map(|&r| base.clone().with_retx(r)).collect(),
        Some(SweepKind::Load) => LOAD_POINTS.iter().map(|&l| base.clone().with_load(l)).collect(),
    }
}

/// One CSV row: one run at one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub seed: u64,
    pub scenario: String,
    pub mac: String,
    pub retx: u32,
    pub load_pps: f64,
    pub pdr: Option<f64>,
    pub avg_delay_s: Option<f64>,
    pub detection_rate: Option<f64>,
    pub auth_rate: Option<f64>,
    pub mean_detection_latency_s: Option<f64>,
    pub p95_detection_latency_s: Option<f64>,
}

impl Row {
    pub fn new(s: &Scenario, seed: u64, m: &Metrics) -> Self {
        Row {
            seed,
            scenario: s.name.clone(),
            mac: s.mac.kind.as_str().to_string(),
            retx: s.mac.max_retx,
            load_pps: s.load_pps,
            pdr: m.packet_delivery_ratio(None),
            avg_delay_s: m.avg_end_to_end_delay(None),
            detection_rate: m.detection_rate(),
            auth_rate: m.authentication_rate(),
            mean_detection_latency_s: m.mean_detection_latency(),
            p95_detection_latency_s: m.p95_detection_latency(),
        }
    }

    pub fn fields(&self) -> [String; 11] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.seed.to_string(),
            self.scenario.clone(),
            self.mac.clone(),
            self.retx.to_string(),
            self.load_pps.to_string(),
            opt(self.pdr),
            opt(self.avg_delay_s),
            opt(self.detection_rate),
            opt(self.auth_rate),
            opt(self.mean_detection_latency_s),
            opt(self.p95_detection_latency_s),
        ]
    }
}

/// Worker count: `SIM_THREADS` if set, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every (point, seed) pair. Rows come back point-major in sweep
/// order regardless of which run finishes first.
pub fn run_sweep(base: &Scenario, sweep: Option<SweepKind>, seeds: &[u64], threads: usize) -> Result<Vec<Row>> {
    Ok(run_jobs(base, sweep, seeds, threads, false)?.into_iter().map(|(r, _)| r).collect())
}

/// Like [`run_sweep`], also returning each run's event log.
pub fn run_sweep_traced(
    base: &Scenario,
    sweep: Option<SweepKind>,
    seeds: &[u64],
    threads: usize,
) -> Result<Vec<(Row, Vec<String>)>> {
    run_jobs(base, sweep, seeds, threads, true)
}

fn run_jobs(
    base: &Scenario,
    sweep: Option<SweepKind>,
    seeds: &[u64],
    threads: usize,
    trace: bool,
) -> Result<Vec<(Row, Vec<String>)>> {
    let points = sweep_points(base, sweep);
    for p in &points {
        p.validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| SimError::invalid("SIM_THREADS", e.to_string()))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| {
                let s = &points[i];
                run_one(s, seed, trace).map_err(|e| SimError::Run {
                    seed,
                    point: format!("mac={} retx={} load={}", s.mac.kind.as_str(), s.mac.max_retx, s.load_pps),
                    source: Box::new(e),
                })
            })
            .collect()
    })
}

fn run_one(s: &Scenario, seed: u64, trace: bool) -> Result<(Row, Vec<String>)> {
    if !trace {
        let out = run_scenario(s, seed)?;
        return Ok((Row::new(s, seed, &out.metrics), Vec::new()));
    }
    let mut net = Network::new(s, seed)?;
    net.enable_trace();
    let m = net.run_until(s.duration)?;
    Ok((Row::new(s, seed, &m), net.trace().to_vec()))
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| SimError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.fields()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_values_are_empty_fields() {
        let s = Scenario::empty("x", crate::channel::RadioFamily::Uwb);
        let row = Row::new(&s, 7, &Metrics::default());
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "7,x,unslotted,4,1,,,,,,");
    }

    #[test]
    fn point_counts() {
        let s = crate::scenario::scenario1();
        assert_eq!(sweep_points(&s, Some(SweepKind::Retx)).len(), 7);
        assert_eq!(sweep_points(&s, Some(SweepKind::Load)).len(), 10);
        assert_eq!(sweep_points(&s, None).len(), 1);
        assert!("bogus".parse::<SweepKind>().is_err());
    }
}
