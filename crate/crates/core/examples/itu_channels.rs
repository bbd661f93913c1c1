//! Draws ITU tapped-delay-line realizations and prints their energy.

use wofdm::{ChannelEnsembleSpec, ChannelModel};

fn main() -> wofdm::Result<()> {
    for model in [ChannelModel::Ped200, ChannelModel::Veh200] {
        let spec = ChannelEnsembleSpec::for_model(model.clone(), 50_000, 11);
        let hs = spec.realizations()?;
        let mean = hs.iter().map(|h| h.energy()).sum::<f64>() / hs.len() as f64;
        println!("{}: nu = {}, Ts = {:.0} ns, mean energy {mean:.4}", model.name(), hs[0].nu(), hs[0].ts() * 1e9);
        for (i, t) in hs[0].taps().iter().enumerate() {
            println!("  h[{i:>2}] = {:+.4} {:+.4}j", t.re, t.im);
        }
    }
    Ok(())
}
