//! Per-scheme aggregates and the `epochs.csv` / `summary.json` writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, Scheme};
use super::run::{run_scheme, EpochLog, Scene};
use crate::beamforming::rate_statistics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub time: f64,
    pub distance_rmse: f64,
    pub angle_rmse: f64,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub samples: usize,
    pub distance_rmse: f64,
    pub angle_rmse: f64,
    /// RMSE restricted to epochs where the user is turning.
    pub arc_distance_rmse: Option<f64>,
    pub arc_angle_rmse: Option<f64>,
    pub mean_rate: f64,
    pub outage: f64,
    pub coasted_fraction: f64,
    pub mean_measurements: f64,
    pub per_epoch: Vec<EpochSummary>,
    /// `(rate, P[R ≤ rate])` at every percentile.
    pub rate_cdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub num_trials: usize,
    pub epoch_interval: f64,
    pub outage_threshold: f64,
    pub schemes: Vec<SchemeSummary>,
}

impl MetricsReport {
    pub fn get(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn rmse(sq_sum: f64, n: usize) -> f64 {
    (sq_sum / n as f64).sqrt()
}

/// Aggregates one scheme's logs.
pub fn summarize(scheme: Scheme, logs: &[EpochLog], outage_threshold: f64) -> Result<SchemeSummary> {
    if logs.is_empty() {
        return Err(Error::Config(format!("no epochs logged for {scheme}")));
    }
    let (mut d2, mut a2) = (0.0, 0.0);
    let (mut arc_d2, mut arc_a2, mut arc_n) = (0.0, 0.0, 0usize);
    let mut coasted = 0usize;
    let mut measurements = 0usize;
    let epochs = logs.iter().map(|l| l.epoch).max().unwrap_or(0) + 1;
    // (time, Σd², Σa², Σrate, n) per epoch
    let mut per = vec![(0.0, 0.0, 0.0, 0.0, 0usize); epochs];
    for log in logs {
        let (de, ae) = log.prediction_error();
        d2 += de * de;
        a2 += ae * ae;
        if log.on_arc {
            arc_d2 += de * de;
            arc_a2 += ae * ae;
            arc_n += 1;
        }
        coasted += log.coasted as usize;
        measurements += log.num_measurements;
        let e = &mut per[log.epoch];
        e.0 = log.time;
        e.1 += de * de;
        e.2 += ae * ae;
        e.3 += log.rate;
        e.4 += 1;
    }
    let n = logs.len();
    let rates: Vec<f64> = logs.iter().map(|l| l.rate).collect();
    let stats = rate_statistics(&rates)?;
    let sorted = stats.samples();
    let rate_cdf = (0..=100)
        .map(|p| {
            let idx = ((p as f64 / 100.0) * (n - 1) as f64).round() as usize;
            let x = sorted[idx];
            (x, stats.cdf(x))
        })
        .collect();
    Ok(SchemeSummary {
        scheme,
        samples: n,
        distance_rmse: rmse(d2, n),
        angle_rmse: rmse(a2, n),
        arc_distance_rmse: (arc_n > 0).then(|| rmse(arc_d2, arc_n)),
        arc_angle_rmse: (arc_n > 0).then(|| rmse(arc_a2, arc_n)),
        mean_rate: stats.mean,
        outage: stats.outage(outage_threshold),
        coasted_fraction: coasted as f64 / n as f64,
        mean_measurements: measurements as f64 / n as f64,
        per_epoch: per
            .into_iter()
            .enumerate()
            .filter(|(_, e)| e.4 > 0)
            .map(|(epoch, (time, d, a, r, c))| EpochSummary {
                epoch,
                time,
                distance_rmse: rmse(d, c),
                angle_rmse: rmse(a, c),
                mean_rate: r / c as f64,
            })
            .collect(),
        rate_cdf,
    })
}

/// Logs and the aggregated report of a multi-scheme run.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: MetricsReport,
    pub logs: Vec<(Scheme, Vec<EpochLog>)>,
}

impl Comparison {
    pub fn logs_for(&self, scheme: Scheme) -> Option<&[EpochLog]> {
        self.logs.iter().find(|(s, _)| *s == scheme).map(|(_, l)| l.as_slice())
    }

    /// Writes `epochs.csv` and `summary.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = BufWriter::new(File::create(dir.join("epochs.csv"))?);
        write_epochs_header(&mut f)?;
        for (_, logs) in &self.logs {
            write_epoch_rows(&mut f, logs)?;
        }
        f.flush()?;
        std::fs::write(dir.join("summary.json"), self.report.to_json() + "\n")?;
        Ok(())
    }
}

/// Runs every scheme on the same scene and random streams.
pub fn compare_schemes(cfg: &ScenarioConfig, schemes: &[Scheme], parallel: bool) -> Result<Comparison> {
    cfg.validate()?;
    if schemes.is_empty() {
        return Err(Error::Config("at least one scheme is required".into()));
    }
    let scene = Scene::build(cfg)?;
    let mut logs = Vec::with_capacity(schemes.len());
    let mut summaries = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let l = run_scheme(cfg, &scene, scheme, parallel)?;
        summaries.push(summarize(scheme, &l, cfg.outage_threshold)?);
        logs.push((scheme, l));
    }
    Ok(Comparison {
        report: MetricsReport {
            seed: cfg.seed,
            num_trials: cfg.num_trials,
            epoch_interval: cfg.epoch_interval,
            outage_threshold: cfg.outage_threshold,
            schemes: summaries,
        },
        logs,
    })
}

const HEADER: &str = "scheme,trial,epoch,time,user,\
true_x,true_y,true_vx,true_vy,true_omega,\
pred_x,pred_y,pred_vx,pred_vy,pred_omega,\
est_x,est_y,est_vx,est_vy,est_omega,\
num_measurements,beta,snr,rate,rho_cv,rho_ct,coasted,on_arc";

fn write_epochs_header<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    Ok(())
}

fn write_epoch_rows<W: Write>(w: &mut W, logs: &[EpochLog]) -> Result<()> {
    for log in logs {
        write!(
            w,
            "{},{},{},{},{}",
            log.scheme, log.trial, log.epoch, log.time, log.user
        )?;
        for s in [log.truth, log.predicted, log.estimate] {
            write!(w, ",{},{},{},{},{}", s.x, s.y, s.vx, s.vy, s.omega)?;
        }
        let beta: Vec<String> = log.beta.iter().map(f64::to_string).collect();
        write!(
            w,
            ",{},{},{},{}",
            log.num_measurements,
            beta.join(";"),
            log.snr,
            log.rate
        )?;
        match log.model_probs {
            Some([a, b]) => write!(w, ",{a},{b}")?,
            None => write!(w, ",,")?,
        }
        writeln!(w, ",{},{}", log.coasted as u8, log.on_arc as u8)?;
    }
    Ok(())
}

/// Writes logs as `epochs.csv` rows with a header.
pub fn write_epochs_csv<W: Write>(w: &mut W, logs: &[EpochLog]) -> Result<()> {
    write_epochs_header(w)?;
    write_epoch_rows(w, logs)
}
