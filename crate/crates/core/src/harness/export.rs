use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::harness::metrics::{wilson_interval, MetricsSummary};

pub const CSV_HEADER: [&str; 8] = ["policy", "t", "metric", "epsilon", "value", "ci_low", "ci_high", "trials"];

/// One `regret` row per (policy, checkpoint), followed by one `error` row per
/// configured epsilon. Regret bands are one standard error; error bands are
/// 95% Wilson intervals.
pub fn write_summary_csv<W: Write>(summary: &MetricsSummary, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for p in &summary.policies {
        for pt in &p.points {
            let mean = pt.mean_regret();
            let se = pt.std_err();
            let trials = pt.trials.to_string();
            let t = pt.t.to_string();
            w.write_record([
                p.policy.as_str(),
                &t,
                "regret",
                "",
                &mean.to_string(),
                &(mean - se).max(0.0).to_string(),
                &(mean + se).to_string(),
                &trials,
            ])?;
            for (k, eps) in summary.epsilons.iter().enumerate() {
                let f = pt.failures[k];
                let (lo, hi) = wilson_interval(f, pt.trials);
                w.write_record([
                    p.policy.as_str(),
                    &t,
                    "error",
                    &eps.to_string(),
                    &(f as f64 / pt.trials as f64).to_string(),
                    &lo.to_string(),
                    &hi.to_string(),
                    &trials,
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

pub fn write_summary_json<W: Write>(summary: &MetricsSummary, mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, summary)?;
    sink.write_all(b"\n").map_err(|e| Error::io("<json sink>", e))?;
    Ok(())
}

pub fn read_summary_json<R: Read>(source: R) -> Result<MetricsSummary> {
    Ok(serde_json::from_reader(source)?)
}
