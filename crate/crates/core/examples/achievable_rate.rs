//! Achievable rate on VEH200 from the SINR gap at a target SER.

use wofdm::analysis::{data_rate, noise_variance_for_snr};
use wofdm::{ChannelEnsembleSpec, InterferenceReport, RateParams, SystemKind, SystemParams, WindowPair};

fn main() -> wofdm::Result<()> {
    let spec = ChannelEnsembleSpec::veh200(50, 3);
    let channels = spec.realizations()?;
    for snr_db in [5.0, 15.0, 25.0] {
        let sigma_n2 = noise_variance_for_snr(snr_db, 1.0, 1.0, 256);
        for kind in SystemKind::ALL {
            let p = SystemParams::reference(kind, 256, 16)?;
            let w = WindowPair::raised_cosine(&p);
            let rp = RateParams::new(1e-3, 1.0 / channels[0].ts(), &p)?;
            let mut rate = 0.0;
            for h in &channels {
                let r = InterferenceReport::for_channel(&p, &w, h, 1.0, sigma_n2)?;
                rate += data_rate(&r.sinr, &rp).total;
            }
            println!("{snr_db:>4} dB {:<6} {:.4} Gb/s", kind.name(), rate / channels.len() as f64 / 1e9);
        }
    }
    Ok(())
}
