use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use wofdm::analysis::noise_variance_for_snr;
use wofdm::link_sim::{bpsk_block, equalize_detect, run_campaign, run_stream, ChannelSource, SimConfig, SystemSetup};
use wofdm::qfunc::q_function;
use wofdm::{ChannelEnsembleSpec, Cir, Complex64, InterferenceReport, SystemKind, SystemParams, WindowPair};

fn overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

#[test]
fn noiseless_sufficient_redundancy_is_error_free() {
    let h = Cir::from_real(&[0.9, -0.5, 0.3, 0.2, -0.1]).unwrap();
    for kind in SystemKind::ALL {
        let row = kind.preset();
        let beta = if row.tx_window { 2 } else { 0 };
        let delta = if row.rx_window { 4 } else { 0 };
        let p = SystemParams::preset(kind, 32, 16, beta, delta).unwrap();
        assert!(p.validate_against_channel(h.nu()).interference_free, "{kind:?}");
        let w = WindowPair::raised_cosine(&p);
        let hk = wofdm::engine::frequency_response(&h, 32);
        let mut data = ChaCha12Rng::seed_from_u64(21);
        let mut noise = ChaCha12Rng::seed_from_u64(22);
        let mut errors = 0;
        let mut seen = 0;
        run_stream(&p, &w, &h, 0.0, 600, 3, || bpsk_block(&mut data, 32), &mut noise, |_, x, y| {
            seen += 1;
            for (d, xk) in equalize_detect(y, &hk).iter().zip(x) {
                errors += usize::from(*d != Some(xk.re));
            }
        })
        .unwrap();
        assert_eq!(seen, 597);
        assert_eq!(errors, 0, "{kind:?}");
    }
}

#[test]
fn global_phase_does_not_change_ser() {
    let h = Cir::from_real(&[1.0, 0.6, -0.4, 0.3]).unwrap();
    let rotated = h.scaled(Complex64::from_polar(1.0, 1.1));
    let sys = vec![SystemSetup::new(SystemParams::reference(SystemKind::Cp, 64, 16).unwrap())];
    let run = |cir: &Cir| {
        let src = ChannelSource::Fixed { cir: cir.clone(), label: "fixed".into() };
        let r = run_campaign(&SimConfig::new(sys.clone(), src, vec![6.0], 20, 5)).unwrap();
        let pt = r.points[0].clone();
        (pt.ser, pt.ci_low, pt.ci_high)
    };
    let (a, b) = (run(&h), run(&rotated));
    assert!(a.0 > 0.0 && b.0 > 0.0);
    assert!(overlap((a.1, a.2), (b.1, b.2)), "{a:?} vs {b:?}");
}

#[test]
fn longer_warmup_agrees() {
    let spec = ChannelEnsembleSpec::veh200(20, 31);
    let sys = vec![SystemSetup::new(SystemParams::reference(SystemKind::Wola, 64, 16).unwrap())];
    let mut cfg = SimConfig::new(sys, ChannelSource::Ensemble(spec), vec![10.0], 20, 9);
    let base = run_campaign(&cfg).unwrap().points[0].clone();
    let m = cfg.systems[0].params.overlap_blocks(spec_nu(&cfg));
    cfg.warmup_blocks = Some(2 * (m + 1));
    let doubled = run_campaign(&cfg).unwrap().points[0].clone();
    assert!(doubled.bits < base.bits);
    assert!(overlap((base.ci_low, base.ci_high), (doubled.ci_low, doubled.ci_high)));
}

fn spec_nu(cfg: &SimConfig) -> usize {
    match &cfg.channel {
        ChannelSource::Ensemble(s) => s.realization(0).unwrap().nu(),
        ChannelSource::Fixed { cir, .. } => cir.nu(),
    }
}

#[test]
fn cp_ser_matches_prediction_on_ped200() {
    let trials = 20;
    let snr_db = 20.0;
    let spec = ChannelEnsembleSpec::ped200(trials, 41);
    let p = SystemParams::reference(SystemKind::Cp, 256, 32).unwrap();
    let w = WindowPair::raised_cosine(&p);
    let cfg = SimConfig::new(vec![SystemSetup::new(p)], ChannelSource::Ensemble(spec.clone()), vec![snr_db], trials, 17);
    let pt = run_campaign(&cfg).unwrap().points[0].clone();
    assert_eq!(pt.failed_trials, 0);

    let sigma_n2 = noise_variance_for_snr(snr_db, 1.0, 1.0, 256);
    let blocks_per_trial = (pt.bits / (trials as u64 * 256)) as f64;
    let (mut mean, mut var) = (0.0, 0.0);
    for t in 0..trials {
        let h = spec.realization(t).unwrap();
        let r = InterferenceReport::for_channel(&p, &w, &h, 1.0, sigma_n2).unwrap();
        for s in &r.sinr {
            let pe = q_function((2.0 * s).sqrt());
            mean += blocks_per_trial * pe;
            var += blocks_per_trial * pe * (1.0 - pe);
        }
    }
    let z = (pt.bit_errors as f64 - mean) / var.sqrt();
    assert!(pt.bit_errors > 100);
    assert!(z.abs() < 3.0, "errors {} vs predicted {mean:.1} (z = {z:.2})", pt.bit_errors);
}
