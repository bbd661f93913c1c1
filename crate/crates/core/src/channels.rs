//! Channel impulse responses: fixtures, ITU tapped-delay-line ensembles and AWGN.
//!
//! All channels are quasi-static: one [`Cir`] is held for a whole run.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{substream, tag, Purpose};

/// Sample period of the reference channel sets (200 ns).
pub const DEFAULT_TS: f64 = 200e-9;
/// Carrier frequency of the reference channel sets.
pub const DEFAULT_FC: f64 = 2e9;

const PED_A: &str = include_str!("../data/itu_pedestrian_a.pdp");
const VEH_A: &str = include_str!("../data/itu_vehicular_a.pdp");

/// Finite channel impulse response `h₀…h_ν`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cir {
    taps: Vec<Complex64>,
    ts: f64,
}

impl Cir {
    pub fn new(taps: Vec<Complex64>, ts: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Domain("channel needs at least one tap".into()));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::Domain("channel taps must be finite".into()));
        }
        if taps.iter().all(|t| t.norm_sqr() == 0.0) {
            return Err(Error::Domain("channel has no nonzero tap".into()));
        }
        if ts.is_nan() || ts <= 0.0 {
            return Err(Error::Domain(format!("sample period must be positive, got {ts}")));
        }
        Ok(Self { taps, ts })
    }

    pub fn from_real(taps: &[f64]) -> Result<Self> {
        Self::new(taps.iter().map(|&t| Complex64::new(t, 0.0)).collect(), DEFAULT_TS)
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Channel order `ν = taps − 1`.
    pub fn nu(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// `Σ|h_n|²`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// Tap `n`, zero outside `0..=ν`.
    pub fn tap(&self, n: i64) -> Complex64 {
        usize::try_from(n)
            .ok()
            .and_then(|i| self.taps.get(i).copied())
            .unwrap_or_default()
    }

    /// Every tap multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            taps: self.taps.iter().map(|t| t * c).collect(),
            ts: self.ts,
        }
    }

    /// Parses the text format: optional `# ts=<seconds>` header, then one
    /// `re,im` pair per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ts = DEFAULT_TS;
        let mut taps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("ts=") {
                    ts = v.trim().parse().map_err(|e| Error::Parse(format!("line {}: ts: {e}", i + 1)))?;
                }
                continue;
            }
            let (re, im) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 're,im'", i + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            taps.push(Complex64::new(parse(re)?, parse(im)?));
        }
        Self::new(taps, ts)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# ts={:e}\n", self.ts);
        for t in &self.taps {
            let _ = writeln!(s, "{:e},{:e}", t.re, t.im);
        }
        s
    }
}

/// Fixture channels by name: `delta`, `unit_delay`, `two_ray(α,d)`,
/// `long_exponential(ν)`.
///
/// `two_ray(α,d)` is `h₀ = 1, h_d = α`. `long_exponential(ν)` has
/// `h_n = exp(−4n/ν)` for `n = 0..=ν`.
pub fn deterministic_channel(name: &str) -> Result<Cir> {
    let name = name.trim();
    let unknown = || Error::UnknownChannel(name.to_string());
    let (head, args) = match name.split_once('(') {
        Some((head, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(unknown)?;
            let args = inner
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| unknown()))
                .collect::<Result<Vec<f64>>>()?;
            (head.trim(), args)
        }
        None => (name, Vec::new()),
    };
    match (head, args.as_slice()) {
        ("delta", []) => Cir::from_real(&[1.0]),
        ("unit_delay", []) => Cir::from_real(&[0.0, 1.0]),
        ("two_ray", &[alpha, d]) if d >= 0.0 && d.fract() == 0.0 => {
            let d = d as usize;
            let mut taps = vec![0.0; d + 1];
            taps[0] = 1.0;
            taps[d] += alpha;
            Cir::from_real(&taps)
        }
        ("long_exponential", &[nu]) if nu >= 0.0 && nu.fract() == 0.0 => {
            let nu = nu as usize;
            let taps: Vec<f64> = (0..=nu)
                .map(|n| if nu == 0 { 1.0 } else { (-4.0 * n as f64 / nu as f64).exp() })
                .collect();
            Cir::from_real(&taps)
        }
        _ => Err(unknown()),
    }
}

/// Power-delay profile: one path per entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pdp {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl Pdp {
    /// Parses lines of `<delay_ns> <power_dB>`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut delays_ns = Vec::new();
        let mut powers_db = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [d, p] = fields.as_slice() else {
                return Err(Error::Parse(format!("line {}: expected '<delay_ns> <power_dB>'", i + 1)));
            };
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)));
            let delay = num(d)?;
            if delay < 0.0 {
                return Err(Error::Parse(format!("line {}: negative delay", i + 1)));
            }
            delays_ns.push(delay);
            powers_db.push(num(p)?);
        }
        if delays_ns.is_empty() {
            return Err(Error::Parse("power-delay profile has no paths".into()));
        }
        Ok(Self { delays_ns, powers_db })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn pedestrian_a() -> Self {
        Self::parse(PED_A).expect("bundled profile parses")
    }

    pub fn vehicular_a() -> Self {
        Self::parse(VEH_A).expect("bundled profile parses")
    }

    pub fn linear_powers(&self) -> Vec<f64> {
        self.powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ChannelModel {
    Ped200,
    Veh200,
    Custom(Pdp),
}

impl ChannelModel {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Ped200 => "PED200",
            ChannelModel::Veh200 => "VEH200",
            ChannelModel::Custom(_) => "custom",
        }
    }

    pub fn pdp(&self) -> Pdp {
        match self {
            ChannelModel::Ped200 => Pdp::pedestrian_a(),
            ChannelModel::Veh200 => Pdp::vehicular_a(),
            ChannelModel::Custom(p) => p.clone(),
        }
    }

    /// `ped200`, `veh200`, or `pdp:<path>` for a profile file.
    pub fn from_name(s: &str) -> Result<Self> {
        let key = s.trim();
        match key.to_ascii_lowercase().as_str() {
            "ped200" | "peda" | "pedestrian_a" => Ok(ChannelModel::Ped200),
            "veh200" | "veha" | "vehicular_a" => Ok(ChannelModel::Veh200),
            _ => match key.strip_prefix("pdp:") {
                Some(path) => Ok(ChannelModel::Custom(Pdp::from_file(path)?)),
                None => Err(Error::UnknownChannel(s.to_string())),
            },
        }
    }
}

/// A seeded family of quasi-static TDL realizations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelEnsembleSpec {
    pub model: ChannelModel,
    pub count: usize,
    pub seed: u64,
    /// Carrier frequency (Hz). Metadata only for quasi-static channels.
    pub fc: f64,
    /// Mobile speed (km/h). Metadata only for quasi-static channels.
    pub speed_kmh: f64,
    pub ts: f64,
    pub target_len: usize,
}

impl ChannelEnsembleSpec {
    /// Pedestrian A at 200 ns, 11 taps.
    pub fn ped200(count: usize, seed: u64) -> Self {
        Self {
            model: ChannelModel::Ped200,
            count,
            seed,
            fc: DEFAULT_FC,
            speed_kmh: 4.0,
            ts: DEFAULT_TS,
            target_len: 11,
        }
    }

    /// Vehicular A at 200 ns, 21 taps.
    pub fn veh200(count: usize, seed: u64) -> Self {
        Self {
            model: ChannelModel::Veh200,
            count,
            seed,
            fc: DEFAULT_FC,
            speed_kmh: 100.0,
            ts: DEFAULT_TS,
            target_len: 21,
        }
    }

    pub fn custom(pdp: Pdp, target_len: usize, count: usize, seed: u64) -> Self {
        Self {
            model: ChannelModel::Custom(pdp),
            count,
            seed,
            fc: DEFAULT_FC,
            speed_kmh: 0.0,
            ts: DEFAULT_TS,
            target_len,
        }
    }

    /// Named model with its reference length.
    pub fn for_model(model: ChannelModel, count: usize, seed: u64) -> Self {
        match model {
            ChannelModel::Ped200 => Self::ped200(count, seed),
            ChannelModel::Veh200 => Self::veh200(count, seed),
            ChannelModel::Custom(pdp) => {
                let max_delay = pdp.delays_ns.iter().copied().fold(0.0, f64::max);
                let len = (max_delay * 1e-9 / DEFAULT_TS).ceil() as usize + 1;
                Self::custom(pdp, len, count, seed)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Domain("ensemble count must be positive".into()));
        }
        if self.target_len == 0 {
            return Err(Error::Domain("target length must be at least 1".into()));
        }
        if self.ts.is_nan() || self.ts <= 0.0 {
            return Err(Error::Domain("sample period must be positive".into()));
        }
        let expected = match self.model {
            ChannelModel::Ped200 => Some(11),
            ChannelModel::Veh200 => Some(21),
            ChannelModel::Custom(_) => None,
        };
        if let Some(len) = expected {
            if self.target_len != len {
                return Err(Error::Domain(format!(
                    "{} uses {len} taps, got target_len = {}",
                    self.model.name(),
                    self.target_len
                )));
            }
        }
        Ok(())
    }

    /// Deterministic per-path tap responses, scaled so that the ensemble
    /// average of `Σ|h_n|²` is exactly 1. Returns `(path power, response)`.
    ///
    /// A realization is `h = Σ_p g_p·response_p` with independent
    /// `g_p ~ CN(0, power_p)`, so any quadratic functional of `h` has
    /// ensemble mean `Σ_p power_p·f(response_p)`.
    pub fn path_responses(&self) -> Vec<(f64, Vec<f64>)> {
        let pdp = self.model.pdp();
        let len = self.target_len;
        let kernels: Vec<Vec<f64>> = pdp
            .delays_ns
            .iter()
            .map(|d| interpolation_kernel(d * 1e-9 / self.ts, len))
            .collect();
        let powers = pdp.linear_powers();
        let total: f64 = powers
            .iter()
            .zip(&kernels)
            .map(|(p, k)| p * k.iter().map(|v| v * v).sum::<f64>())
            .sum();
        powers.into_iter().map(|p| p / total).zip(kernels).collect()
    }

    /// Realization `index` of the ensemble.
    pub fn realization(&self, index: usize) -> Result<Cir> {
        self.validate()?;
        if index >= self.count {
            return Err(Error::Domain(format!("realization {index} outside ensemble of {}", self.count)));
        }
        let mut rng = substream(self.seed, tag(Purpose::Channel, &[]), index as u64);
        let mut taps = vec![Complex64::default(); self.target_len];
        for (power, response) in self.path_responses() {
            let g = complex_gaussian(&mut rng, power);
            for (t, r) in taps.iter_mut().zip(&response) {
                *t += g * r;
            }
        }
        if taps.iter().all(|t| t.norm_sqr() == 0.0) {
            taps[0] = Complex64::new(f64::MIN_POSITIVE, 0.0);
        }
        Cir::new(taps, self.ts)
    }

    pub fn realizations(&self) -> Result<Vec<Cir>> {
        (0..self.count).map(|i| self.realization(i)).collect()
    }
}

/// Realization `index` of `spec`.
pub fn itu_tdl_realization(spec: &ChannelEnsembleSpec, index: usize) -> Result<Cir> {
    spec.realization(index)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hann-windowed sinc of a path at fractional delay `delay` (samples) on
/// taps `0..len`. Integer delays land on a single tap.
fn interpolation_kernel(delay: f64, len: usize) -> Vec<f64> {
    let half_width = len as f64;
    (0..len)
        .map(|n| {
            let t = n as f64 - delay;
            if t.abs() >= half_width {
                0.0
            } else {
                let w = 0.5 * (1.0 + (PI * t / half_width).cos());
                sinc(t) * w
            }
        })
        .collect()
}

/// One circular complex Gaussian sample with `E|z|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Fills `out` with i.i.d. circular complex Gaussian noise of the given
/// per-sample variance.
pub fn fill_awgn<R: Rng + ?Sized>(rng: &mut R, variance: f64, out: &mut [Complex64]) {
    if variance == 0.0 {
        out.iter_mut().for_each(|v| *v = Complex64::default());
        return;
    }
    out.iter_mut().for_each(|v| *v = complex_gaussian(rng, variance));
}

/// `len` samples of circular complex AWGN, reproducible from `(seed, index)`.
pub fn awgn(len: usize, variance: f64, seed: u64, index: u64) -> Result<Vec<Complex64>> {
    if variance.is_nan() || variance < 0.0 {
        return Err(Error::Domain(format!("noise variance must be non-negative, got {variance}")));
    }
    let mut rng = substream(seed, tag(Purpose::Noise, &[]), index);
    let mut out = vec![Complex64::default(); len];
    fill_awgn(&mut rng, variance, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(c: &Cir) -> Vec<f64> {
        c.taps().iter().map(|t| t.re).collect()
    }

    #[test]
    fn fixtures() {
        assert_eq!(re(&deterministic_channel("delta").unwrap()), vec![1.0]);
        assert_eq!(re(&deterministic_channel("unit_delay").unwrap()), vec![0.0, 1.0]);
        assert_eq!(re(&deterministic_channel("two_ray(0.5, 3)").unwrap()), vec![1.0, 0.0, 0.0, 0.5]);
        let e = deterministic_channel("long_exponential(8)").unwrap();
        assert_eq!(e.nu(), 8);
        assert!((e.taps()[8].re - (-4f64).exp()).abs() < 1e-15);
        assert!(deterministic_channel("rayleigh").is_err());
        assert!(deterministic_channel("two_ray(0.5)").is_err());
        assert!(deterministic_channel("two_ray(0.5, 1.5)").is_err());
    }

    #[test]
    fn cir_validation() {
        assert!(Cir::new(vec![], DEFAULT_TS).is_err());
        assert!(Cir::from_real(&[0.0, 0.0]).is_err());
        assert!(Cir::from_real(&[f64::NAN]).is_err());
    }

    #[test]
    fn cir_text_format() {
        let c = Cir::new(vec![Complex64::new(0.5, -0.25), Complex64::new(0.0, 1.0)], 1e-7).unwrap();
        let back = Cir::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!(Cir::parse("1.0\n").is_err());
        let plain = Cir::parse("1,0\n0.5,0\n").unwrap();
        assert_eq!(plain.ts(), DEFAULT_TS);
    }

    #[test]
    fn pdp_parsing() {
        let ped = Pdp::pedestrian_a();
        assert_eq!(ped.delays_ns, vec![0.0, 110.0, 190.0, 410.0]);
        assert_eq!(ped.powers_db, vec![0.0, -9.7, -19.2, -22.8]);
        let veh = Pdp::vehicular_a();
        assert_eq!(veh.delays_ns.len(), 6);
        assert!(Pdp::parse("0\n").is_err());
        assert!(Pdp::parse("# nothing\n").is_err());
    }

    #[test]
    fn realization_is_deterministic() {
        let spec = ChannelEnsembleSpec::ped200(20, 1);
        assert_eq!(spec.realization(3).unwrap(), spec.realization(3).unwrap());
        assert_ne!(spec.realization(3).unwrap(), spec.realization(4).unwrap());
        assert_eq!(spec.realization(0).unwrap().nu(), 10);
        assert_eq!(ChannelEnsembleSpec::veh200(1, 1).realization(0).unwrap().nu(), 20);
        assert!(spec.realization(20).is_err());
    }

    #[test]
    fn ensemble_power_is_normalized() {
        for spec in [ChannelEnsembleSpec::ped200(1, 0), ChannelEnsembleSpec::veh200(1, 0)] {
            let mean: f64 = spec
                .path_responses()
                .iter()
                .map(|(p, r)| p * r.iter().map(|v| v * v).sum::<f64>())
                .sum();
            assert!((mean - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_profile_is_rayleigh_gain() {
        let pdp = Pdp::parse("0 0\n").unwrap();
        let spec = ChannelEnsembleSpec::custom(pdp, 1, 20_000, 9);
        let mut mean = 0.0;
        for i in 0..spec.count {
            let h = spec.realization(i).unwrap();
            assert_eq!(h.nu(), 0);
            mean += h.energy();
        }
        mean /= spec.count as f64;
        // exponential with unit mean: standard error 1/sqrt(20000) ≈ 0.007
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn spec_validation() {
        let mut spec = ChannelEnsembleSpec::ped200(0, 1);
        assert!(spec.validate().is_err());
        spec.count = 1;
        spec.target_len = 12;
        assert!(spec.validate().is_err());
        assert!(ChannelModel::from_name("rural").is_err());
        assert_eq!(ChannelModel::from_name("VEH200").unwrap(), ChannelModel::Veh200);
    }

    #[test]
    fn awgn_contract() {
        assert!(awgn(16, 0.0, 1, 0).unwrap().iter().all(|v| *v == Complex64::default()));
        assert_eq!(awgn(16, 1.0, 5, 2).unwrap(), awgn(16, 1.0, 5, 2).unwrap());
        assert!(awgn(4, -1.0, 5, 2).is_err());
    }

    #[test]
    fn awgn_variance() {
        let n = 1_000_000;
        let v = awgn(n, 2.0, 42, 0).unwrap();
        let var = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var - 2.0).abs() < 0.02, "{var}");
        let re_var = v.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        assert!((re_var - 1.0).abs() < 0.01, "{re_var}");
    }
}
