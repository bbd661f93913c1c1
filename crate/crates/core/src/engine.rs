//! Matrix formulation of the transceiver chain.
//!
//! Transmitter: `x = V^tx·Γ·W⁻¹·X` with a β-sample overlap between blocks.
//! Channel: block `l − m` reaches the intake of block `l` through the banded
//! matrix `H⁽ᵐ⁾`. Receiver: `Y = W·K·P·V^rx·R·y`. Composing everything gives
//!
//! ```text
//! Y[l] = Σ_{m=0..M} A_m·X[l−m] + G_noise·q[l]
//! A_m     = W·K·P·V^rx·R·H⁽ᵐ⁾·V^tx·Γ·W⁻¹
//! G_noise = W·K·P·V^rx·R
//! ```
//!
//! Two routes build `{A_m}`: [`EquivalentChannel::build_dense`] multiplies the
//! materialized matrices, [`EquivalentChannel::build`] applies the selection
//! and diagonal operators directly and uses FFTs for `W`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::Cir;
use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::sysparams::SystemParams;
use crate::windowing::WindowPair;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// `e^{-j2πk/N}` with the exponent reduced modulo `N` first.
fn twiddle(k: usize, n: usize) -> Complex64 {
    let phase = -2.0 * PI * ((k % n) as f64) / n as f64;
    Complex64::from_polar(1.0, phase)
}

/// The six building-block matrices of one system.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveMatrices {
    /// `W`, N×N.
    pub dft: CMatrix,
    /// `W⁻¹`, N×N.
    pub idft: CMatrix,
    /// `Γ`, (N+μ+ρ)×N: CP and CS insertion.
    pub redundancy: RMatrix,
    /// `R`, (N+δ)×(N+δ+γ): drops the first γ samples.
    pub removal: RMatrix,
    /// `P`, N×(N+δ): δ-sample fold.
    pub fold: RMatrix,
    /// `K`, N×N: circular shift by κ.
    pub shift: RMatrix,
}

impl PrimitiveMatrices {
    pub fn build(p: &SystemParams) -> Self {
        let n = p.n;
        let dft = CMatrix::from_fn(n, n, |k, i| twiddle(k * i, n));
        let idft = CMatrix::from_fn(n, n, |k, i| twiddle(k * i, n).conj() / n as f64);
        Self {
            dft,
            idft,
            redundancy: redundancy_matrix(p),
            removal: removal_matrix(p),
            fold: fold_matrix(p),
            shift: shift_matrix(p),
        }
    }
}

/// `Γ = [0 I_μ; I_N; I_ρ 0]`, generalized to μ, ρ > N by periodic extension.
pub fn redundancy_matrix(p: &SystemParams) -> RMatrix {
    let (n, mu) = (p.n, p.mu);
    let span = p.derived().span;
    let mut g = RMatrix::zeros(span, n);
    for r in 0..span {
        let col = (r + n * mu.div_ceil(n).max(1) - mu) % n;
        g[(r, col)] = 1.0;
    }
    g
}

/// `R = [0_{(N+δ)×γ} I_{N+δ}]`.
pub fn removal_matrix(p: &SystemParams) -> RMatrix {
    let rows = p.n + p.delta;
    let mut r = RMatrix::zeros(rows, rows + p.gamma);
    for i in 0..rows {
        r[(i, p.gamma + i)] = 1.0;
    }
    r
}

/// The δ-sample overlap-and-add matrix, laid out block by block:
///
/// ```text
/// [ 0_{δ/2}  I_{δ/2}  0          0_{δ/2}  I_{δ/2} ]
/// [ 0        0        I_{N−δ}    0        0       ]
/// [ I_{δ/2}  0_{δ/2}  0          I_{δ/2}  0_{δ/2} ]
/// ```
pub fn fold_matrix(p: &SystemParams) -> RMatrix {
    let (n, d) = (p.n, p.delta);
    let h = d / 2;
    let mut f = RMatrix::zeros(n, n + d);
    for i in 0..h {
        // top block row
        f[(i, h + i)] = 1.0;
        f[(i, n + h + i)] = 1.0;
        // bottom block row
        f[(n - h + i, i)] = 1.0;
        f[(n - h + i, n + i)] = 1.0;
    }
    for i in 0..n - d {
        f[(h + i, d + i)] = 1.0;
    }
    f
}

/// `K = [0 I_{N−κ}; I_κ 0]`, so `(K·x)[r] = x[(r+κ) mod N]`.
pub fn shift_matrix(p: &SystemParams) -> RMatrix {
    let (n, k) = (p.n, p.kappa);
    let mut s = RMatrix::zeros(n, n);
    for r in 0..n {
        s[(r, (r + k) % n)] = 1.0;
    }
    s
}

/// `H⁽ᵐ⁾`: how block `l − m` reaches the intake of block `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBlock {
    pub m: usize,
    /// (N+δ+γ)×(N+μ+ρ), `[H⁽ᵐ⁾]_{b,c} = h_{m·hop + b − c}` inside `0..=ν`.
    pub mat: CMatrix,
}

impl ChannelBlock {
    pub fn build(p: &SystemParams, h: &Cir, m: usize) -> Result<Self> {
        let lens = p.derived();
        let max_m = lens.overlap_blocks(h.nu());
        if m > max_m {
            return Err(Error::Domain(format!("block index {m} exceeds M = {max_m}")));
        }
        let offset = (m * lens.hop) as i64;
        let mat = CMatrix::from_fn(lens.rx_in, lens.span, |b, c| h.tap(offset + b as i64 - c as i64));
        Ok(Self { m, mat })
    }
}

/// `{A₀…A_M}` and `G_noise` of one system/channel pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalentChannel {
    pub a: Vec<CMatrix>,
    pub g_noise: CMatrix,
}

fn check_dims(p: &SystemParams, w: &WindowPair) -> Result<()> {
    if !w.matches(p) {
        return Err(Error::Dimension(format!(
            "windows ({}, {}) do not fit system (span {}, N+delta {})",
            w.tx.len(),
            w.rx.len(),
            p.derived().span,
            p.n + p.delta
        )));
    }
    Ok(())
}

/// Output row of `K·P` that intake sample `i` (after `R`) lands on.
fn fold_shift_row(p: &SystemParams, i: usize) -> usize {
    let n = p.n;
    let folded = (i + n - p.delta / 2 % n) % n;
    (folded + n - p.kappa) % n
}

impl EquivalentChannel {
    /// Reference route: every matrix materialized and multiplied in order.
    pub fn build_dense(p: &SystemParams, w: &WindowPair, h: &Cir) -> Result<Self> {
        check_dims(p, w)?;
        let prim = PrimitiveMatrices::build(p);
        let to_c = |m: &RMatrix| m.map(|v| Complex64::new(v, 0.0));
        let v_rx = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            w.rx.len(),
            w.rx.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let v_tx = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            w.tx.len(),
            w.tx.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let g_noise = &prim.dft * to_c(&prim.shift) * to_c(&prim.fold) * v_rx * to_c(&prim.removal);
        let tx_side = v_tx * to_c(&prim.redundancy) * &prim.idft;
        let m_max = p.overlap_blocks(h.nu());
        let a = (0..=m_max)
            .map(|m| {
                let hm = ChannelBlock::build(p, h, m)?.mat;
                Ok(&g_noise * hm * &tx_side)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { a, g_noise })
    }

    /// Structured route with the same result as [`Self::build_dense`].
    pub fn build(p: &SystemParams, w: &WindowPair, h: &Cir) -> Result<Self> {
        check_dims(p, w)?;
        let n = p.n;
        let lens = p.derived();
        let dft = Dft::new(n);

        // T = V^tx·Γ·W⁻¹, row-major (span × N)
        let mut t = vec![Complex64::default(); lens.span * n];
        for r in 0..lens.span {
            let src = (r + n * p.mu.div_ceil(n).max(1) - p.mu) % n;
            let scale = w.tx[r] / n as f64;
            for (k, v) in t[r * n..(r + 1) * n].iter_mut().enumerate() {
                *v = twiddle(src * k, n).conj() * scale;
            }
        }

        let nu = h.nu() as i64;
        let m_max = lens.overlap_blocks(h.nu());
        let mut a = Vec::with_capacity(m_max + 1);
        let mut z = vec![Complex64::default(); n * n];
        let mut col = vec![Complex64::default(); n];
        for m in 0..=m_max {
            z.iter_mut().for_each(|v| *v = Complex64::default());
            let offset = (m * lens.hop) as i64;
            for i in 0..n + p.delta {
                let b = (p.gamma + i) as i64;
                let lo = (offset + b - nu).max(0);
                let hi = (offset + b).min(lens.span as i64 - 1);
                if lo > hi {
                    continue;
                }
                let row = fold_shift_row(p, i);
                let out = &mut z[row * n..(row + 1) * n];
                for c in lo..=hi {
                    let coef = h.tap(offset + b - c) * w.rx[i];
                    let src = &t[c as usize * n..(c as usize + 1) * n];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += coef * s;
                    }
                }
            }
            let mut am = CMatrix::zeros(n, n);
            for k in 0..n {
                for (r, v) in col.iter_mut().enumerate() {
                    *v = z[r * n + k];
                }
                dft.forward(&mut col);
                am.column_mut(k).copy_from_slice(&col);
            }
            a.push(am);
        }

        let mut g_noise = CMatrix::zeros(n, lens.rx_in);
        for i in 0..n + p.delta {
            let row = fold_shift_row(p, i);
            for k in 0..n {
                g_noise[(k, p.gamma + i)] = twiddle(k * row, n) * w.rx[i];
            }
        }
        Ok(Self { a, g_noise })
    }

    /// Number of interfering past blocks, `M`.
    pub fn overlap_blocks(&self) -> usize {
        self.a.len() - 1
    }

    pub fn n(&self) -> usize {
        self.g_noise.nrows()
    }

    /// `Σ_m A_m·X[l−m]` with `history[m] = X[l−m]`; missing blocks count as zero.
    pub fn predict(&self, history: &[&[Complex64]]) -> Vec<Complex64> {
        let n = self.n();
        let mut y = vec![Complex64::default(); n];
        for (am, x) in self.a.iter().zip(history) {
            for (j, xj) in x.iter().enumerate() {
                for (yk, akj) in y.iter_mut().zip(am.column(j).iter()) {
                    *yk += akj * xj;
                }
            }
        }
        y
    }
}

/// `H_k = Σ_n h_n e^{−j2πkn/N}`.
pub fn frequency_response(h: &Cir, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            h.taps()
                .iter()
                .enumerate()
                .map(|(i, t)| t * twiddle(k * i, n))
                .sum()
        })
        .collect()
}

/// Text dump: `# shape=<rows>x<cols>` then one row per line of `re,im` entries.
pub fn matrix_to_text(m: &CMatrix) -> String {
    let mut s = format!("# shape={}x{}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{:e},{:e}", v.re, v.im)).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn matrix_from_text(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix dump".into()))?;
    let shape = header
        .trim()
        .strip_prefix("# shape=")
        .ok_or_else(|| Error::Parse("missing shape header".into()))?;
    let (r, c) = shape
        .split_once('x')
        .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
        .ok_or_else(|| Error::Parse(format!("bad shape '{shape}'")))?;
    let mut data = Vec::with_capacity(r * c);
    for line in lines {
        for entry in line.split_whitespace() {
            let (re, im) = entry
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad entry '{entry}'")))?;
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
            data.push(Complex64::new(num(re)?, num(im)?));
        }
    }
    if data.len() != r * c {
        return Err(Error::Parse(format!("expected {} entries, found {}", r * c, data.len())));
    }
    Ok(CMatrix::from_row_slice(r, c, &data))
}
