//! With enough redundancy the equivalent channel is diagonal and equals H(k).

use wofdm::engine::frequency_response;
use wofdm::{Cir, EquivalentChannel, SystemKind, SystemParams, WindowPair};

fn main() -> wofdm::Result<()> {
    let h = Cir::from_real(&[1.0, 0.5, -0.3, 0.2, 0.1])?;
    for kind in SystemKind::ALL {
        let p = SystemParams::reference(kind, 64, 32)?;
        let w = WindowPair::raised_cosine(&p);
        let eq = EquivalentChannel::build(&p, &w, &h)?;
        let hk = frequency_response(&h, 64);
        let a0 = &eq.a[0];
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for r in 0..64 {
            for c in 0..64 {
                if r == c {
                    diag = diag.max((a0[(r, c)] - hk[r]).norm());
                } else {
                    off = off.max(a0[(r, c)].norm());
                }
            }
        }
        let tail = eq.a.iter().skip(1).map(|m| m.camax()).fold(0.0, f64::max);
        println!("{:<6} off-diagonal {off:.1e}  |A0 - diag H| {diag:.1e}  max |A_m>0| {tail:.1e}", kind.name());
    }
    Ok(())
}
