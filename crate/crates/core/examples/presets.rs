//! Prints the redundancy layout of every preset at N = 256, μ = 32.

use wofdm::{SystemKind, SystemParams};

fn main() -> wofdm::Result<()> {
    println!("{:<6} {:>4} {:>4} {:>4} {:>4} {:>4} {:>5} {:>5} {:>8}", "system", "rho", "gam", "kap", "beta", "dlt", "hop", "span", "cp_bound");
    for kind in SystemKind::ALL {
        match SystemParams::reference(kind, 256, 32) {
            Ok(p) => {
                let d = p.derived();
                let bound = p.cp_bound().map_or("-".to_string(), |b| b.to_string());
                println!(
                    "{:<6} {:>4} {:>4} {:>4} {:>4} {:>4} {:>5} {:>5} {:>8}",
                    kind.name(), p.rho, p.gamma, p.kappa, p.beta, p.delta, d.hop, d.span, bound
                );
            }
            Err(e) => println!("{:<6} infeasible: {e}", kind.name()),
        }
    }
    Ok(())
}
