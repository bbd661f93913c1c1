//! Monte Carlo BPSK SER on PED200 for three systems.

use wofdm::link_sim::{run_campaign, ChannelSource, SimConfig, SystemSetup};
use wofdm::{ChannelEnsembleSpec, SystemKind, SystemParams};

fn main() -> wofdm::Result<()> {
    let trials = 16;
    let systems = [SystemKind::Cp, SystemKind::Wola, SystemKind::CpWrx]
        .into_iter()
        .map(|k| SystemParams::reference(k, 256, 16).map(SystemSetup::new))
        .collect::<wofdm::Result<Vec<_>>>()?;
    let channel = ChannelSource::Ensemble(ChannelEnsembleSpec::ped200(trials, 7));
    let cfg = SimConfig::new(systems, channel, vec![0.0, 10.0, 20.0, 30.0], trials, 2024);
    let res = run_campaign(&cfg)?;
    for pt in &res.points {
        println!(
            "{:<6} {:>4} dB  SER {:.3e}  [{:.3e}, {:.3e}]  ({} bits)",
            pt.system, pt.snr_db, pt.ser, pt.ci_low, pt.ci_high, pt.bits
        );
    }
    println!("{:.2} s", res.elapsed_secs);
    Ok(())
}
