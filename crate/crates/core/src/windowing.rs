//! Transmit and receive tapering windows.
//!
//! The Tx window has length `N + μ + ρ` and is `[rise(β), 1…1, fall(β)]`; the
//! Rx window has length `N + δ` and is `[rise(δ), 1…1, fall(δ)]`.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sysparams::SystemParams;

/// Rise and fall samples of one window side.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tail {
    pub rise: Vec<f64>,
    pub fall: Vec<f64>,
}

impl Tail {
    pub fn new(rise: Vec<f64>, fall: Vec<f64>) -> Self {
        Self { rise, fall }
    }

    /// Sine-squared ramps with `rise[i] + fall[i] = 1`.
    pub fn raised_cosine(len: usize) -> Self {
        let (rise, fall) = raised_cosine_tail(len);
        Self { rise, fall }
    }

    pub fn len(&self) -> usize {
        self.rise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rise.is_empty()
    }

    /// Largest `|rise[i] + fall[i] − 1|`.
    pub fn complementarity_defect(&self) -> f64 {
        self.rise
            .iter()
            .zip(&self.fall)
            .map(|(r, f)| (r + f - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Reads a tail from two text files, one sample per line.
    pub fn from_files(rise: impl AsRef<Path>, fall: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            rise: read_samples(rise.as_ref())?,
            fall: read_samples(fall.as_ref())?,
        })
    }
}

/// `rise[i] = sin²(π(i+1) / (2(len+1)))`, `fall[i] = rise[len−1−i]`.
pub fn raised_cosine_tail(len: usize) -> (Vec<f64>, Vec<f64>) {
    let rise: Vec<f64> = (0..len)
        .map(|i| {
            let s = (PI * (i + 1) as f64 / (2.0 * (len + 1) as f64)).sin();
            s * s
        })
        .collect();
    let fall = rise.iter().rev().copied().collect();
    (rise, fall)
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_samples(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Parses one real sample per line; blank lines and `#` comments are skipped.
pub fn parse_samples(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| format!("line {}: {e}", i + 1))
        })
        .collect()
}

/// The Tx and Rx windows of one system.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowPair {
    pub tx: Vec<f64>,
    pub rx: Vec<f64>,
    tx_tail: usize,
    rx_tail: usize,
    warnings: Vec<String>,
}

impl WindowPair {
    /// Assembles both windows from tails of length `β` (Tx) and `δ` (Rx).
    pub fn build(p: &SystemParams, tx_tail: &Tail, rx_tail: &Tail) -> Result<Self> {
        let check = |side: &str, t: &Tail, want: usize| -> Result<()> {
            if t.rise.len() != want || t.fall.len() != want {
                return Err(Error::Dimension(format!(
                    "{side} tail lengths ({}, {}) must both equal {want}",
                    t.rise.len(),
                    t.fall.len()
                )));
            }
            if let Some(v) = t.rise.iter().chain(&t.fall).find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Domain(format!("{side} window sample {v} outside [0, 1]")));
            }
            Ok(())
        };
        check("Tx", tx_tail, p.beta)?;
        check("Rx", rx_tail, p.delta)?;

        let span = p.derived().span;
        let tx = assemble(tx_tail, span - 2 * p.beta);
        let rx = assemble(rx_tail, p.n - p.delta);

        let mut warnings = Vec::new();
        for (side, t) in [("Tx", tx_tail), ("Rx", rx_tail)] {
            let defect = t.complementarity_defect();
            if defect > 1e-9 {
                warnings.push(format!("{side} tails are not complementary (max |rise+fall-1| = {defect:.3e})"));
            }
        }
        Ok(Self { tx, rx, tx_tail: p.beta, rx_tail: p.delta, warnings })
    }

    /// Raised-cosine tails on both sides; all-ones where the tail length is 0.
    pub fn raised_cosine(p: &SystemParams) -> Self {
        Self::build(p, &Tail::raised_cosine(p.beta), &Tail::raised_cosine(p.delta))
            .expect("raised-cosine tails always match the parameters")
    }

    /// All-ones windows of the right lengths (no tapering).
    pub fn rectangular(p: &SystemParams) -> Self {
        let ones = |n| Tail::new(vec![1.0; n], vec![1.0; n]);
        let mut w = Self::build(p, &ones(p.beta), &ones(p.delta)).expect("lengths match");
        w.warnings.clear();
        w
    }

    pub fn tx_rise(&self) -> &[f64] {
        &self.tx[..self.tx_tail]
    }

    pub fn tx_fall(&self) -> &[f64] {
        &self.tx[self.tx.len() - self.tx_tail..]
    }

    pub fn rx_rise(&self) -> &[f64] {
        &self.rx[..self.rx_tail]
    }

    pub fn rx_fall(&self) -> &[f64] {
        &self.rx[self.rx.len() - self.rx_tail..]
    }

    /// Non-fatal issues found while building (e.g. non-complementary tails).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn matches(&self, p: &SystemParams) -> bool {
        self.tx.len() == p.derived().span && self.rx.len() == p.n + p.delta
    }
}

fn assemble(tail: &Tail, flat: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * tail.len() + flat);
    v.extend_from_slice(&tail.rise);
    v.extend(std::iter::repeat_n(1.0, flat));
    v.extend_from_slice(&tail.fall);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysparams::SystemKind;

    #[test]
    fn tail_examples() {
        let (r, f) = raised_cosine_tail(0);
        assert!(r.is_empty() && f.is_empty());
        let (r, f) = raised_cosine_tail(1);
        assert!((r[0] - 0.5).abs() < 1e-15 && (f[0] - 0.5).abs() < 1e-15);
        let t = Tail::raised_cosine(3);
        assert!(t.complementarity_defect() < 1e-15);
        for len in 0..40 {
            let t = Tail::raised_cosine(len);
            assert!(t.complementarity_defect() < 1e-14);
            assert!(t.rise.windows(2).all(|w| w[0] < w[1]));
            assert!(t.rise.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn cp_windows_are_all_ones() {
        let p = SystemParams::reference(SystemKind::Cp, 256, 32).unwrap();
        let w = WindowPair::raised_cosine(&p);
        assert_eq!(w.tx.len(), 288);
        assert_eq!(w.rx.len(), 256);
        assert!(w.tx.iter().chain(&w.rx).all(|v| *v == 1.0));
    }

    #[test]
    fn wola_window_layout() {
        let p = SystemParams::reference(SystemKind::Wola, 256, 32).unwrap();
        let w = WindowPair::raised_cosine(&p);
        assert_eq!(w.tx.len(), 296);
        assert_eq!(w.rx.len(), 266);
        assert_eq!(w.tx_rise().len(), 8);
        assert_eq!(w.rx_fall().len(), 10);
        assert_eq!(w.tx[8..288].iter().filter(|v| **v == 1.0).count(), 280);
        assert!(w.tx[..8].iter().all(|v| *v < 1.0));
        assert!(w.warnings().is_empty());
        assert!(w.matches(&p));
    }

    #[test]
    fn custom_tails_pass_through() {
        let p = SystemParams::preset(SystemKind::Wrx, 16, 4, 0, 4).unwrap();
        let rx = Tail::new(vec![0.1, 0.2, 0.3, 0.4], vec![0.9, 0.5, 0.25, 0.0]);
        let w = WindowPair::build(&p, &Tail::default(), &rx).unwrap();
        assert_eq!(w.rx_rise(), &rx.rise[..]);
        assert_eq!(w.rx_fall(), &rx.fall[..]);
        assert_eq!(w.warnings().len(), 1);
    }

    #[test]
    fn tail_length_mismatch() {
        let p = SystemParams::preset(SystemKind::Wola, 16, 8, 2, 4).unwrap();
        assert!(WindowPair::build(&p, &Tail::raised_cosine(3), &Tail::raised_cosine(4)).is_err());
        assert!(WindowPair::build(&p, &Tail::raised_cosine(2), &Tail::raised_cosine(2)).is_err());
        let bad = Tail::new(vec![1.5, 0.1], vec![0.5, 0.5]);
        assert!(WindowPair::build(&p, &bad, &Tail::raised_cosine(4)).is_err());
    }

    #[test]
    fn parse_window_file() {
        let v = parse_samples("# rise\n0.25\n\n0.75\n").unwrap();
        assert_eq!(v, vec![0.25, 0.75]);
        assert!(parse_samples("0.1\nabc\n").is_err());
    }
}
