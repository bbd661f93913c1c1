//! Raised-cosine Tx and Rx windows of the windowed presets.

use wofdm::{SystemKind, SystemParams, WindowPair};

fn main() -> wofdm::Result<()> {
    for kind in [SystemKind::Wtx, SystemKind::Wrx, SystemKind::Wola] {
        let p = SystemParams::reference(kind, 64, 16)?;
        let w = WindowPair::raised_cosine(&p);
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        println!("{} (beta {}, delta {})", kind.name(), p.beta, p.delta);
        println!("  tx rise: {}", fmt(w.tx_rise()));
        println!("  rx rise: {}", fmt(w.rx_rise()));
        println!("  rx fall: {}", fmt(w.rx_fall()));
    }
    Ok(())
}
