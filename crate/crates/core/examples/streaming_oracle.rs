//! The sample-level link and the matrix model agree block by block.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use wofdm::link_sim::{apply_channel, modulate_stream, Receiver, SymbolStream};
use wofdm::{Cir, EquivalentChannel, SystemKind, SystemParams, WindowPair};

fn main() -> wofdm::Result<()> {
    let h = Cir::from_real(&[1.0, -0.7, 0.5, 0.4, -0.3, 0.2, 0.1, 0.05, 0.3])?;
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    for kind in SystemKind::ALL {
        let p = SystemParams::preset(kind, 8, 4, 2 * kind.preset().tx_window as usize, 2 * kind.preset().rx_window as usize)?;
        let w = WindowPair::raised_cosine(&p);
        let eq = EquivalentChannel::build(&p, &w, &h)?;
        let m = eq.overlap_blocks();
        let stream = SymbolStream::bpsk(&mut rng, 8, 40);
        let received = apply_channel(&modulate_stream(&stream, &p, &w)?, &h, 0.0, 0, 0)?;
        let rx = Receiver::new(&p, &w)?;
        let mut worst = 0.0f64;
        for l in m..40 {
            let y = rx.demodulate(&received, l)?;
            let history: Vec<&[_]> = (0..=m).map(|i| stream.blocks[l - i].as_slice()).collect();
            let want = eq.predict(&history);
            worst = y.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
        }
        println!("{:<6} M = {m}  max |Y - sum A_m X| = {worst:.1e}", kind.name());
    }
    Ok(())
}
