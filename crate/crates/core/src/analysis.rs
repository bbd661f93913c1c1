//! Closed-form signal, interference and noise powers, SINR and achievable rate.
//!
//! With i.i.d. zero-mean symbols of variance `σ_X²` and white noise of
//! variance `σ_n²`, the per-subcarrier powers follow from the diagonals of
//!
//! ```text
//! C^s = σ_X²·A₀^des·(A₀^des)ᴴ
//! C^n = σ_n²·G_noise·G_noiseᴴ
//! C^i = σ_X²·(A₀^ICI₁·(A₀^ICI₁)ᴴ + Σ_{m≥1} A_m·A_mᴴ)
//! ```
//!
//! `C^i` is further split by element group: off-diagonal of `A₀` (ICI₁),
//! off-diagonal of `A_m, m ≥ 1` (ICI₂) and diagonal of `A_m, m ≥ 1` (ISI).

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::channels::{ChannelEnsembleSpec, Cir};
use crate::engine::{CMatrix, EquivalentChannel};
use crate::error::{Error, Result};
use crate::qfunc::inverse_q;
use crate::sysparams::SystemParams;
use crate::windowing::WindowPair;

/// `A₀` split into its diagonal and off-diagonal parts, plus `A₁…A_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    /// Diagonal of `A₀` (the desired gains).
    pub a0_des: Vec<Complex64>,
    /// `A₀` with its diagonal zeroed.
    pub a0_ici1: CMatrix,
    /// `A₁…A_M`.
    pub tail: Vec<CMatrix>,
}

impl Decomposition {
    pub fn a0_des_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.a0_des))
    }

    /// `A₀^des + A₀^ICI₁`.
    pub fn a0(&self) -> CMatrix {
        let mut a0 = self.a0_ici1.clone();
        for (k, d) in self.a0_des.iter().enumerate() {
            a0[(k, k)] = *d;
        }
        a0
    }

    pub fn n(&self) -> usize {
        self.a0_des.len()
    }
}

pub fn decompose(eq: &EquivalentChannel) -> Decomposition {
    let a0 = &eq.a[0];
    let a0_des: Vec<Complex64> = a0.diagonal().iter().copied().collect();
    let mut a0_ici1 = a0.clone();
    a0_ici1.fill_diagonal(Complex64::default());
    Decomposition {
        a0_des,
        a0_ici1,
        tail: eq.a[1..].to_vec(),
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `P_signal(k) = σ_X²·|[A₀]_{k,k}|²`.
pub fn signal_power(d: &Decomposition, sigma_x2: f64) -> Result<Vec<f64>> {
    positive("sigma_x2", sigma_x2)?;
    Ok(d.a0_des.iter().map(|a| sigma_x2 * a.norm_sqr()).collect())
}

/// `P_noise(k) = σ_n²·[G_noise·G_noiseᴴ]_{k,k}`.
pub fn noise_power(eq: &EquivalentChannel, sigma_n2: f64) -> Result<Vec<f64>> {
    if !(sigma_n2 >= 0.0 && sigma_n2.is_finite()) {
        return Err(Error::Domain(format!("sigma_n2 must be non-negative, got {sigma_n2}")));
    }
    let g = &eq.g_noise;
    Ok((0..g.nrows())
        .map(|k| sigma_n2 * g.row(k).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .collect())
}

/// Per-subcarrier powers of the three interference types.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterferencePowers {
    pub ici1: Vec<f64>,
    pub ici2: Vec<f64>,
    pub isi: Vec<f64>,
}

impl InterferencePowers {
    /// `ICI₁ + ICI₂ + ISI`, the diagonal of `C^i`.
    pub fn total(&self) -> Vec<f64> {
        self.ici1
            .iter()
            .zip(&self.ici2)
            .zip(&self.isi)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
}

pub fn interference_powers(d: &Decomposition, sigma_x2: f64) -> Result<InterferencePowers> {
    positive("sigma_x2", sigma_x2)?;
    let n = d.n();
    let row_energy = |m: &CMatrix, k: usize| m.row(k).iter().map(|v| v.norm_sqr()).sum::<f64>();
    let ici1 = (0..n).map(|k| sigma_x2 * row_energy(&d.a0_ici1, k)).collect();
    let mut ici2 = vec![0.0; n];
    let mut isi = vec![0.0; n];
    for am in &d.tail {
        for k in 0..n {
            let diag = am[(k, k)].norm_sqr();
            isi[k] += sigma_x2 * diag;
            ici2[k] += sigma_x2 * (row_energy(am, k) - diag).max(0.0);
        }
    }
    Ok(InterferencePowers { ici1, ici2, isi })
}

/// `SINR(k) = P_signal / (P_ISI + P_ICI₁ + P_ICI₂ + P_noise)`; `+∞` when the
/// denominator is zero.
pub fn sinr(signal: &[f64], interference: &InterferencePowers, noise: &[f64]) -> Vec<f64> {
    signal
        .iter()
        .zip(interference.total())
        .zip(noise)
        .map(|((s, i), n)| {
            let den = i + n;
            if den > 0.0 {
                s / den
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Modified SINR gap `γ* = (Q⁻¹(SER/2) / (√2·π))²`.
pub fn sinr_gap(target_ser: f64) -> Result<f64> {
    if !(target_ser > 0.0 && target_ser < 1.0) {
        return Err(Error::Domain(format!("target SER must lie in (0, 1), got {target_ser}")));
    }
    let x = inverse_q(target_ser / 2.0)? / (SQRT_2 * PI);
    Ok(x * x)
}

/// Which block length normalizes the per-block bit count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RateNormalization {
    /// `N / (N + μ + ρ)`, the default.
    Span,
    /// `N / (N + μ + ρ − β)`: time actually consumed per block when Tx tails overlap.
    Hop,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateParams {
    pub target_ser: f64,
    /// Sample rate `1/Ts` (Hz).
    pub fs: f64,
    pub gap: f64,
    pub n: usize,
    /// Samples charged per block (span or hop).
    pub occupancy: usize,
    pub normalization: RateNormalization,
}

impl RateParams {
    pub fn new(target_ser: f64, fs: f64, p: &SystemParams) -> Result<Self> {
        positive("fs", fs)?;
        Ok(Self {
            target_ser,
            fs,
            gap: sinr_gap(target_ser)?,
            n: p.n,
            occupancy: p.derived().span,
            normalization: RateNormalization::Span,
        })
    }

    /// Hop-normalized variant (extension; not the default accounting).
    pub fn hop_normalized(mut self, p: &SystemParams) -> Self {
        self.occupancy = p.derived().hop;
        self.normalization = RateNormalization::Hop;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    /// `C(k)` in bits per subcarrier use.
    pub per_subcarrier: Vec<f64>,
    /// `R` in bits per second.
    pub total: f64,
}

/// `C(k) = max(0, ½·log₂(SINR(k)/γ*))`, `R = f_s·Σ_k (N/N₀)·C(k)`.
pub fn data_rate(sinr: &[f64], rp: &RateParams) -> RateReport {
    let per_subcarrier: Vec<f64> = sinr
        .iter()
        .map(|s| (0.5 * (s / rp.gap).log2()).max(0.0))
        .collect();
    let share = rp.n as f64 / rp.occupancy as f64;
    let total = rp.fs * share * per_subcarrier.iter().sum::<f64>();
    RateReport { per_subcarrier, total }
}

/// Everything known about one system/channel pair at one noise level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterferenceReport {
    pub p_signal: Vec<f64>,
    pub p_ici1: Vec<f64>,
    pub p_ici2: Vec<f64>,
    pub p_isi: Vec<f64>,
    pub p_noise: Vec<f64>,
    pub sinr: Vec<f64>,
    pub sigma_x2: f64,
    pub sigma_n2: f64,
}

/// Sums over subcarriers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PowerTotals {
    pub signal: f64,
    pub ici1: f64,
    pub ici2: f64,
    pub isi: f64,
    pub noise: f64,
}

impl InterferenceReport {
    pub fn evaluate(eq: &EquivalentChannel, sigma_x2: f64, sigma_n2: f64) -> Result<Self> {
        let d = decompose(eq);
        let p_signal = signal_power(&d, sigma_x2)?;
        let ip = interference_powers(&d, sigma_x2)?;
        let p_noise = noise_power(eq, sigma_n2)?;
        Ok(Self::from_parts(p_signal, ip, p_noise, sigma_x2, sigma_n2))
    }

    fn from_parts(p_signal: Vec<f64>, ip: InterferencePowers, p_noise: Vec<f64>, sigma_x2: f64, sigma_n2: f64) -> Self {
        let sinr = sinr(&p_signal, &ip, &p_noise);
        Self {
            p_signal,
            p_ici1: ip.ici1,
            p_ici2: ip.ici2,
            p_isi: ip.isi,
            p_noise,
            sinr,
            sigma_x2,
            sigma_n2,
        }
    }

    /// Builds the equivalent channel and evaluates it.
    pub fn for_channel(p: &SystemParams, w: &WindowPair, h: &Cir, sigma_x2: f64, sigma_n2: f64) -> Result<Self> {
        Self::evaluate(&EquivalentChannel::build(p, w, h)?, sigma_x2, sigma_n2)
    }

    /// Exact ensemble-mean powers of a TDL ensemble.
    ///
    /// Every power is a quadratic form in the taps and the path gains are
    /// independent, so the mean is a power-weighted sum over the per-path
    /// responses. The SINR field is the ratio of mean powers.
    pub fn ensemble_mean(
        p: &SystemParams,
        w: &WindowPair,
        spec: &ChannelEnsembleSpec,
        sigma_x2: f64,
        sigma_n2: f64,
    ) -> Result<Self> {
        spec.validate()?;
        let n = p.n;
        let mut acc = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut p_noise = None;
        for (power, response) in spec.path_responses() {
            if response.iter().all(|v| *v == 0.0) {
                continue;
            }
            let taps = response.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let h = Cir::new(taps, spec.ts)?;
            let eq = EquivalentChannel::build(p, w, &h)?;
            let r = Self::evaluate(&eq, sigma_x2, sigma_n2)?;
            for (dst, src) in acc.iter_mut().zip([&r.p_signal, &r.p_ici1, &r.p_ici2, &r.p_isi]) {
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += power * s);
            }
            p_noise.get_or_insert(r.p_noise);
        }
        let p_noise = p_noise.ok_or_else(|| Error::Domain("ensemble has no nonzero path".into()))?;
        let [p_signal, ici1, ici2, isi] = acc;
        Ok(Self::from_parts(p_signal, InterferencePowers { ici1, ici2, isi }, p_noise, sigma_x2, sigma_n2))
    }

    pub fn n(&self) -> usize {
        self.p_signal.len()
    }

    pub fn totals(&self) -> PowerTotals {
        let sum = |v: &[f64]| v.iter().sum();
        PowerTotals {
            signal: sum(&self.p_signal),
            ici1: sum(&self.p_ici1),
            ici2: sum(&self.p_ici2),
            isi: sum(&self.p_isi),
            noise: sum(&self.p_noise),
        }
    }

    pub fn interference(&self) -> InterferencePowers {
        InterferencePowers {
            ici1: self.p_ici1.clone(),
            ici2: self.p_ici2.clone(),
            isi: self.p_isi.clone(),
        }
    }

    /// Elementwise mean of several reports (same size).
    pub fn average(reports: &[InterferenceReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::Domain("cannot average zero reports".into()))?;
        let n = first.n();
        if reports.iter().any(|r| r.n() != n) {
            return Err(Error::Dimension("reports differ in size".into()));
        }
        let scale = 1.0 / reports.len() as f64;
        let mean = |f: fn(&InterferenceReport) -> &Vec<f64>| -> Vec<f64> {
            (0..n).map(|k| reports.iter().map(|r| f(r)[k]).sum::<f64>() * scale).collect()
        };
        let ip = InterferencePowers {
            ici1: mean(|r| &r.p_ici1),
            ici2: mean(|r| &r.p_ici2),
            isi: mean(|r| &r.p_isi),
        };
        Ok(Self::from_parts(mean(|r| &r.p_signal), ip, mean(|r| &r.p_noise), first.sigma_x2, first.sigma_n2))
    }
}

/// Noise variance per received sample for a given SNR.
///
/// The SNR is the ratio of received signal power per sample to noise power
/// per sample. With the `1/N`-scaled inverse DFT a block of symbols of
/// variance `σ_X²` has per-sample power `σ_X²/N`, hence
/// `σ_n² = σ_X²·E‖h‖² / (N·SNR)`. On a flat channel this makes the
/// per-subcarrier SNR equal to `SNR`.
pub fn noise_variance_for_snr(snr_db: f64, sigma_x2: f64, channel_energy: f64, n: usize) -> f64 {
    sigma_x2 * channel_energy / (n as f64 * 10f64.powf(snr_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::deterministic_channel;
    use crate::engine::frequency_response;
    use crate::sysparams::SystemKind;

    fn toy() -> (SystemParams, WindowPair, Cir) {
        let p = SystemParams::preset(SystemKind::Cp, 2, 1, 0, 0).unwrap();
        let w = WindowPair::raised_cosine(&p);
        let h = Cir::from_real(&[1.0, 0.6, -0.4]).unwrap();
        (p, w, h)
    }

    #[test]
    fn decomposition_partitions_a0() {
        let (p, w, h) = toy();
        let eq = EquivalentChannel::build(&p, &w, &h).unwrap();
        let d = decompose(&eq);
        assert_eq!(d.a0(), eq.a[0]);
        assert!(d.a0_ici1.diagonal().iter().all(|v| *v == Complex64::default()));
        assert_eq!(d.a0_des_matrix() + &d.a0_ici1, eq.a[0]);
        assert_eq!(d.tail.len(), 1);
    }

    #[test]
    fn toy_case_matches_hand_composition() {
        // brute force: A_m = W·R·H⁽ᵐ⁾·Γ·W⁻¹ with N=2, mu=gamma=1
        let (p, w, h) = toy();
        let hv = [1.0, 0.6, -0.4];
        let tap = |i: i64| if (0..3).contains(&i) { hv[i as usize] } else { 0.0 };
        let wm = [[1.0, 1.0], [1.0, -1.0]];
        let wi = [[0.5, 0.5], [0.5, -0.5]];
        let gamma_rows = [1usize, 0, 1]; // CP copies x1
        let eq = EquivalentChannel::build(&p, &w, &h).unwrap();
        for m in 0..2 {
            let mut want = [[0.0f64; 2]; 2];
            for (k, want_row) in want.iter_mut().enumerate() {
                for (j, want_kj) in want_row.iter_mut().enumerate() {
                    for r in 0..2 {
                        for (c, &g) in gamma_rows.iter().enumerate() {
                            *want_kj += wm[k][r] * tap((3 * m + 1 + r) as i64 - c as i64) * wi[g][j];
                        }
                    }
                }
            }
            for k in 0..2 {
                for j in 0..2 {
                    assert!((eq.a[m][(k, j)].re - want[k][j]).abs() < 1e-14, "m={m} k={k} j={j}");
                    assert!(eq.a[m][(k, j)].im.abs() < 1e-14);
                }
            }
        }
        let d = decompose(&eq);
        assert!(d.a0_ici1.iter().any(|v| v.norm() > 1e-3));
        assert!(d.tail[0].iter().any(|v| v.norm() > 1e-3));
    }

    #[test]
    fn signal_and_noise_basics() {
        let p = SystemParams::reference(SystemKind::Cp, 16, 4).unwrap();
        let w = WindowPair::raised_cosine(&p);
        let h = Cir::from_real(&[1.0, 0.5, 0.25]).unwrap();
        let eq = EquivalentChannel::build(&p, &w, &h).unwrap();
        let d = decompose(&eq);
        let hk = frequency_response(&h, 16);
        let s1 = signal_power(&d, 1.0).unwrap();
        let s3 = signal_power(&d, 3.0).unwrap();
        for k in 0..16 {
            assert!((s1[k] - hk[k].norm_sqr()).abs() < 1e-12);
            assert!((s3[k] - 3.0 * s1[k]).abs() < 1e-12);
        }
        let noise = noise_power(&eq, 0.5).unwrap();
        assert!(noise.iter().all(|v| (v - 0.5 * 16.0).abs() < 1e-10));
        assert!(noise_power(&eq, 0.0).unwrap().iter().all(|v| *v == 0.0));
        assert!(signal_power(&d, 0.0).is_err());
        assert!(noise_power(&eq, -1.0).is_err());
        let ip = interference_powers(&d, 1.0).unwrap();
        assert!(ip.total().iter().all(|v| *v < 1e-20));
    }

    #[test]
    fn rx_window_noise_is_folded_energy() {
        // G·Gᴴ diagonal = Σ over the intake of v_rx² after folding
        let p = SystemParams::reference(SystemKind::Wrx, 32, 12).unwrap();
        let w = WindowPair::raised_cosine(&p);
        let eq = EquivalentChannel::build(&p, &w, &deterministic_channel("delta").unwrap()).unwrap();
        let want: f64 = w.rx.iter().map(|v| v * v).sum();
        for v in noise_power(&eq, 1.0).unwrap() {
            assert!((v - want).abs() < 1e-10);
        }
        assert!(want < 32.0);
    }

    #[test]
    fn partition_identity_toy() {
        let (p, w, h) = toy();
        let eq = EquivalentChannel::build(&p, &w, &h).unwrap();
        let r = InterferenceReport::evaluate(&eq, 2.0, 0.0).unwrap();
        let mut total = CMatrix::zeros(2, 2);
        for am in &eq.a {
            total += am * am.adjoint();
        }
        for k in 0..2 {
            let parts = r.p_signal[k] + r.p_ici1[k] + r.p_ici2[k] + r.p_isi[k];
            assert!((parts - 2.0 * total[(k, k)].re).abs() < 1e-12);
        }
    }

    #[test]
    fn sinr_cases() {
        let ip = InterferencePowers { ici1: vec![0.0, 0.1], ici2: vec![0.0, 0.1], isi: vec![0.0, 0.1] };
        let s = sinr(&[1.0, 1.0], &ip, &[0.0, 0.2]);
        assert!(s[0].is_infinite());
        assert!((s[1] - 2.0).abs() < 1e-12);

        let p = SystemParams::reference(SystemKind::Cp, 16, 4).unwrap();
        let w = WindowPair::raised_cosine(&p);
        let flat = InterferenceReport::for_channel(&p, &w, &deterministic_channel("delta").unwrap(), 1.0, 1.0 / 16.0).unwrap();
        assert!(flat.sinr.iter().all(|v| (v - flat.sinr[0]).abs() < 1e-12));
        assert!((flat.sinr[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_and_rate() {
        assert!(sinr_gap(0.0).is_err());
        assert!(sinr_gap(1.0).is_err());
        let g1 = sinr_gap(1e-3).unwrap();
        let g2 = sinr_gap(1e-2).unwrap();
        assert!(g1 > g2);

        let p = SystemParams::new(None, 8, 0, 0, 0, 0, 0, 0).unwrap();
        let rp = RateParams::new(1e-3, 1e6, &p).unwrap();
        let at_gap = data_rate(&[rp.gap; 8], &rp);
        assert_eq!(at_gap.total, 0.0);
        let four = data_rate(&[4.0 * rp.gap; 8], &rp);
        assert!(four.per_subcarrier.iter().all(|c| (c - 1.0).abs() < 1e-12));
        assert!((four.total - 1e6 * 8.0).abs() < 1e-6);
        let below = data_rate(&[0.1 * rp.gap; 8], &rp);
        assert_eq!(below.total, 0.0);

        let short = SystemParams::reference(SystemKind::Cp, 64, 8).unwrap();
        let long = SystemParams::reference(SystemKind::Cp, 64, 16).unwrap();
        let sinr = vec![100.0; 64];
        let r_short = data_rate(&sinr, &RateParams::new(1e-3, 1e6, &short).unwrap()).total;
        let r_long = data_rate(&sinr, &RateParams::new(1e-3, 1e6, &long).unwrap()).total;
        assert!(r_long < r_short);

        let wola = SystemParams::reference(SystemKind::Wola, 64, 16).unwrap();
        let span_rp = RateParams::new(1e-3, 1e6, &wola).unwrap();
        let hop_rp = span_rp.hop_normalized(&wola);
        assert!(data_rate(&sinr, &hop_rp).total > data_rate(&sinr, &span_rp).total);
    }

    #[test]
    fn average_of_identical_reports() {
        let (p, w, h) = toy();
        let r = InterferenceReport::for_channel(&p, &w, &h, 1.0, 0.1).unwrap();
        let avg = InterferenceReport::average(&[r.clone(), r.clone()]).unwrap();
        for (a, b) in avg.p_ici1.iter().zip(&r.p_ici1) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(InterferenceReport::average(&[]).is_err());
    }

    #[test]
    fn ensemble_mean_matches_sample_average() {
        let p = SystemParams::reference(SystemKind::Wola, 64, 12).unwrap();
        let w = WindowPair::raised_cosine(&p);
        let spec = ChannelEnsembleSpec::veh200(2000, 3);
        let exact = InterferenceReport::ensemble_mean(&p, &w, &spec, 1.0, 0.01).unwrap();
        let reports: Vec<_> = (0..spec.count)
            .map(|i| InterferenceReport::for_channel(&p, &w, &spec.realization(i).unwrap(), 1.0, 0.01).unwrap())
            .collect();
        let sample = InterferenceReport::average(&reports).unwrap();
        let (e, s) = (exact.totals(), sample.totals());
        for (a, b) in [(e.signal, s.signal), (e.ici1, s.ici1), (e.ici2, s.ici2), (e.isi, s.isi)] {
            assert!((a - b).abs() < 0.1 * a, "{a} vs {b}");
        }
        assert!((e.noise - s.noise).abs() < 1e-9);
    }
}
