//! CSV and JSON emitters with stable column sets.
//!
//! | table    | columns |
//! |----------|---------|
//! | analysis | `k,p_signal,p_ici1,p_ici2,p_isi,p_noise,sinr_db,rate_bits` |
//! | campaign | `system,channel_model,snr_db,trials,bit_errors,bits,ser,ci_low,ci_high` |
//! | sweep    | `system,channel_model,mu,feasible,p_signal,p_ici1,p_ici2,p_isi,p_noise` |
//! | rate     | `system,channel_model,mu,snr_db,target_ser,gap_db,rate_bps,rate_hop_bps` |
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::io::Write;

use serde::Serialize;

use crate::analysis::{InterferenceReport, PowerTotals, RateReport};
use crate::error::{Error, Result};
use crate::link_sim::SimResult;

pub const ANALYSIS_COLUMNS: [&str; 8] = ["k", "p_signal", "p_ici1", "p_ici2", "p_isi", "p_noise", "sinr_db", "rate_bits"];
pub const CAMPAIGN_COLUMNS: [&str; 9] = [
    "system",
    "channel_model",
    "snr_db",
    "trials",
    "bit_errors",
    "bits",
    "ser",
    "ci_low",
    "ci_high",
];
pub const SWEEP_COLUMNS: [&str; 9] = [
    "system",
    "channel_model",
    "mu",
    "feasible",
    "p_signal",
    "p_ici1",
    "p_ici2",
    "p_isi",
    "p_noise",
];
pub const RATE_COLUMNS: [&str; 8] = [
    "system",
    "channel_model",
    "mu",
    "snr_db",
    "target_ser",
    "gap_db",
    "rate_bps",
    "rate_hop_bps",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn table<W: Write, R: IntoIterator<Item = Vec<String>>>(out: W, header: &[&str], rows: R) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-subcarrier analysis table; `rate_bits` is `C(k)` or empty without a rate.
pub fn write_analysis_csv<W: Write>(out: W, r: &InterferenceReport, rate: Option<&RateReport>) -> Result<()> {
    let rows = (0..r.n()).map(|k| {
        vec![
            k.to_string(),
            num(r.p_signal[k]),
            num(r.p_ici1[k]),
            num(r.p_ici2[k]),
            num(r.p_isi[k]),
            num(r.p_noise[k]),
            num(db(r.sinr[k])),
            rate.map(|x| num(x.per_subcarrier[k])).unwrap_or_default(),
        ]
    });
    table(out, &ANALYSIS_COLUMNS, rows)
}

pub fn write_campaign_csv<W: Write>(out: W, res: &SimResult) -> Result<()> {
    let rows = res.points.iter().map(|p| {
        vec![
            p.system.clone(),
            p.channel_model.clone(),
            num(p.snr_db),
            p.trials.to_string(),
            p.bit_errors.to_string(),
            p.bits.to_string(),
            num(p.ser),
            num(p.ci_low),
            num(p.ci_high),
        ]
    });
    table(out, &CAMPAIGN_COLUMNS, rows)
}

/// One row of a CP-length sweep of summed powers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub system: String,
    pub channel_model: String,
    pub mu: usize,
    /// `None` for parameter combinations the kind cannot realize.
    pub totals: Option<PowerTotals>,
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        let mut v = vec![r.system.clone(), r.channel_model.clone(), r.mu.to_string()];
        match &r.totals {
            Some(t) => {
                v.push("true".into());
                v.extend([t.signal, t.ici1, t.ici2, t.isi, t.noise].map(num));
            }
            None => {
                v.push("false".into());
                v.extend(std::iter::repeat_n(String::new(), 5));
            }
        }
        v
    });
    table(out, &SWEEP_COLUMNS, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub system: String,
    pub channel_model: String,
    pub mu: usize,
    pub snr_db: f64,
    pub target_ser: f64,
    pub gap: f64,
    /// Span-normalized total rate (bit/s).
    pub rate_bps: f64,
    /// Hop-normalized total rate (bit/s).
    pub rate_hop_bps: f64,
}

pub fn write_rate_csv<W: Write>(out: W, rows: &[RateRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.system.clone(),
            r.channel_model.clone(),
            r.mu.to_string(),
            num(r.snr_db),
            num(r.target_ser),
            num(db(r.gap)),
            num(r.rate_bps),
            num(r.rate_hop_bps),
        ]
    });
    table(out, &RATE_COLUMNS, rows)
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads `(system, snr_db, ser, ci_high)` rows back from a campaign CSV.
pub fn read_campaign_csv(text: &str) -> Result<Vec<(String, f64, f64, f64)>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("campaign table lacks column '{name}'")))
    };
    let (cs, cn, ce, ch) = (col("system")?, col("snr_db")?, col("ser")?, col("ci_high")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("'{}': {e}", &rec[i])))
        };
        out.push((rec[cs].to_string(), f(cn)?, f(ce)?, f(ch)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link_sim::PointResult;

    fn report() -> InterferenceReport {
        InterferenceReport {
            p_signal: vec![1.0, 0.5],
            p_ici1: vec![0.0, 0.25],
            p_ici2: vec![0.0, 0.0],
            p_isi: vec![0.0, 0.0],
            p_noise: vec![0.1, 0.25],
            sinr: vec![10.0, 1.0],
            sigma_x2: 1.0,
            sigma_n2: 0.05,
        }
    }

    #[test]
    fn analysis_table() {
        let mut buf = Vec::new();
        write_analysis_csv(&mut buf, &report(), None).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "k,p_signal,p_ici1,p_ici2,p_isi,p_noise,sinr_db,rate_bits");
        assert_eq!(lines[1], "0,1,0,0,0,0.1,10,");
        assert_eq!(lines[2], "1,0.5,0.25,0,0,0.25,0,");
    }

    #[test]
    fn campaign_round_trip() {
        let res = SimResult {
            seed: 1,
            points: vec![PointResult {
                system: "CP".into(),
                channel_model: "PED200".into(),
                snr_db: 20.0,
                trials: 2,
                failed_trials: 0,
                bit_errors: 3,
                bits: 1000,
                erasures: 0,
                ser: 0.003,
                ci_low: 0.001,
                ci_high: 0.009,
                rx_power: vec![],
                distortion_power: vec![],
            }],
            failures: vec![],
            elapsed_secs: 0.0,
        };
        let mut buf = Vec::new();
        write_campaign_csv(&mut buf, &res).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "CP,PED200,20,2,3,1000,0.003,0.001,0.009");
        assert_eq!(read_campaign_csv(&s).unwrap(), vec![("CP".to_string(), 20.0, 0.003, 0.009)]);
    }

    #[test]
    fn infeasible_sweep_row() {
        let mut buf = Vec::new();
        let rows = [SweepRow { system: "WOLA".into(), channel_model: "VEH200".into(), mu: 2, totals: None }];
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("WOLA,VEH200,2,false,,,,,\n"));
    }
}
