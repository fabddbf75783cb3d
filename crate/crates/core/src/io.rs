//! CSV and JSON formats shared by the library and the command line.
//!
//! Agents are 1-based in every file.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::InteractionSpec;
use crate::simulator::{DrawEvent, EventLog};
use crate::spectral::OdeTrajectory;
use crate::stats::{check_layout, CompositionTable, EventSource, Trajectories};

pub const EVENTS_CSV_HEADER: [&str; 5] = ["t", "agent", "item", "new_system", "new_agent"];

/// Writes `t,agent,item,new_system,new_agent`, flags as `0`/`1`.
pub fn write_events_csv<W: Write, S: EventSource + ?Sized>(out: W, log: &S) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_CSV_HEADER)?;
    for e in log.events() {
        w.write_record([
            e.t.to_string(),
            (e.agent + 1).to_string(),
            log.item_label(e.color),
            u8::from(e.new_system).to_string(),
            u8::from(e.new_agent).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct EventRecord {
    t: u64,
    agent: usize,
    item: usize,
    new_system: bool,
    new_agent: bool,
}

#[derive(Serialize, Deserialize)]
struct EventLogFile {
    spec: InteractionSpec,
    seed: u64,
    horizon: u64,
    events: Vec<EventRecord>,
}

/// A simulation log with its spec and seed, for exact replay.
pub fn write_event_log_json<W: Write>(out: W, log: &EventLog) -> Result<()> {
    let file = EventLogFile {
        spec: log.spec.clone(),
        seed: log.seed,
        horizon: log.horizon,
        events: log
            .events
            .iter()
            .map(|e| EventRecord {
                t: e.t,
                agent: e.agent + 1,
                item: e.color,
                new_system: e.new_system,
                new_agent: e.new_agent,
            })
            .collect(),
    };
    write_json(out, &file)
}

pub fn read_event_log_json<R: Read>(input: R) -> Result<EventLog> {
    let file: EventLogFile = serde_json::from_reader(input)?;
    let events: Vec<DrawEvent> = file
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if e.agent == 0 {
                return Err(Error::Malformed {
                    line: i + 2,
                    message: "agent numbers start at 1".into(),
                });
            }
            Ok(DrawEvent {
                t: e.t,
                agent: e.agent - 1,
                color: e.item,
                new_system: e.new_system,
                new_agent: e.new_agent,
            })
        })
        .collect::<Result<_>>()?;
    check_layout(&events, file.spec.n_agents())?;
    Ok(EventLog {
        spec: file.spec,
        seed: file.seed,
        horizon: file.horizon,
        events,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// The `item_id,item_key` sidecar of an ingested log.
pub fn write_dictionary_csv<W: Write>(out: W, dictionary: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["item_id", "item_key"])?;
    for (id, key) in dictionary.iter().enumerate() {
        w.write_record([id.to_string().as_str(), key])?;
    }
    w.flush()?;
    Ok(())
}

/// Names of the series [`crate::stats::fit_trajectories`] fits, in order.
pub fn series_names(n_agents: usize, with_adoptions: bool) -> Vec<String> {
    let mut names: Vec<String> = (1..=n_agents).map(|h| format!("dstar{h}")).collect();
    if with_adoptions && n_agents > 1 {
        names.extend((1..=n_agents).map(|h| format!("d{h}")));
    }
    names
}

/// `log10_t,log10_value,series` for every positive sample in `[t_min, t_max]`.
pub fn write_fit_points_csv<W: Write>(
    out: W,
    traj: &Trajectories,
    with_adoptions: bool,
    t_min: f64,
    t_max: f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["log10_t", "log10_value", "series"])?;
    let names = series_names(traj.n_agents(), with_adoptions);
    let values = traj.d_star.iter().chain(&traj.d);
    for (name, series) in names.iter().zip(values) {
        for (t, y) in traj.series(series) {
            if t >= t_min && t <= t_max {
                w.write_record([t.log10().to_string(), y.log10().to_string(), name.clone()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ratio_csv<W: Write>(out: W, ratio: &[(u64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "log_ratio"])?;
    for (t, r) in ratio {
        w.write_record([t.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Column name of a quantile level: `0.05` becomes `q05`.
pub fn level_name(p: f64) -> String {
    let pct = p * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("q{:02}", pct.round() as u32)
    } else {
        format!("q{pct}")
    }
}

pub fn write_composition_csv<W: Write>(out: W, table: &CompositionTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["bin_lo".to_string(), "bin_hi".into(), "count".into()];
    header.extend(table.levels.iter().map(|&p| level_name(p)));
    w.write_record(&header)?;
    for bin in &table.bins {
        let mut rec = vec![bin.lo.to_string(), bin.hi.to_string(), bin.count.to_string()];
        match &bin.quantiles {
            Some(q) => rec.extend(q.iter().map(f64::to_string)),
            None => rec.extend(table.levels.iter().map(|_| String::new())),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,d1,…,dN`.
pub fn write_trajectory_csv<W: Write>(out: W, ode: &OdeTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = ode.values.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|h| format!("d{h}")));
    w.write_record(&header)?;
    for (t, v) in ode.times.iter().zip(&ode.values) {
        let mut rec = vec![t.to_string()];
        rec.extend(v.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::read_csv;
    use crate::simulator::run;

    #[test]
    fn json_log_round_trip() {
        let spec = InteractionSpec::symmetric_pair(0.10, 0.40, 0.10, 0.50, 1.0).unwrap();
        let log = run(&spec, 200, 3).unwrap();
        let mut buf = Vec::new();
        write_event_log_json(&mut buf, &log).unwrap();
        assert_eq!(read_event_log_json(buf.as_slice()).unwrap(), log);
    }

    #[test]
    fn csv_log_reads_back_as_the_same_events() {
        let spec = InteractionSpec::symmetric_pair(0.25, 0.40, 0.25, 0.50, 1.0).unwrap();
        let log = run(&spec, 500, 8).unwrap();
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &log).unwrap();
        let obs = read_csv(buf.as_slice(), false).unwrap();
        assert_eq!(obs.events(), log.events.as_slice());
        let mut again = Vec::new();
        write_events_csv(&mut again, &obs).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn level_names() {
        assert_eq!(level_name(0.05), "q05");
        assert_eq!(level_name(0.5), "q50");
        assert_eq!(level_name(0.975), "q97.5");
    }
}
