//! Ensemble-mean ICI and ISI on VEH200 as the CP grows.

use wofdm::analysis::noise_variance_for_snr;
use wofdm::{ChannelEnsembleSpec, InterferenceReport, SystemKind, SystemParams, WindowPair};

fn main() -> wofdm::Result<()> {
    let spec = ChannelEnsembleSpec::veh200(1, 1);
    let sigma_n2 = noise_variance_for_snr(20.0, 1.0, 1.0, 256);
    println!("system mu   signal      ici1        ici2        isi");
    for kind in [SystemKind::Cp, SystemKind::Wola, SystemKind::CpWrx] {
        for mu in (0..=40).step_by(8) {
            let Ok(p) = SystemParams::reference(kind, 256, mu) else {
                println!("{:<6} {mu:>2}   infeasible", kind.name());
                continue;
            };
            let w = WindowPair::raised_cosine(&p);
            let t = InterferenceReport::ensemble_mean(&p, &w, &spec, 1.0, sigma_n2)?.totals();
            println!("{:<6} {mu:>2}   {:.4e}  {:.4e}  {:.4e}  {:.4e}", kind.name(), t.signal, t.ici1, t.ici2, t.isi);
        }
    }
    Ok(())
}
