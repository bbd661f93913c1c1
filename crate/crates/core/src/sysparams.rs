//! The six-parameter description of a (windowed) OFDM system.
//!
//! Every system is fixed by the DFT size `N` and six non-negative integers:
//!
//! | symbol | field   | meaning                                   |
//! |--------|---------|-------------------------------------------|
//! | μ      | `mu`    | cyclic prefix length                      |
//! | β      | `beta`  | Tx window tail (also the Tx overlap)      |
//! | δ      | `delta` | Rx window tail (also the Rx fold length)  |
//! | ρ      | `rho`   | cyclic suffix length                      |
//! | γ      | `gamma` | samples dropped at the receiver           |
//! | κ      | `kappa` | receiver circular shift                   |
//!
//! The seven named systems differ only in how `ρ, γ, κ` follow from
//! `(μ, β, δ)`. Those rules live in [`PRESETS`] as data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tx tail length used by the reference experiments (N = 256, μ = 32).
pub const REFERENCE_TX_TAIL: usize = 8;
/// Rx tail length used by the reference experiments.
pub const REFERENCE_RX_TAIL: usize = 10;
/// DFT size used by the reference experiments.
pub const REFERENCE_N: usize = 256;
/// CP length used by the reference experiments.
pub const REFERENCE_MU: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SystemKind {
    #[serde(rename = "CP")]
    Cp,
    #[serde(rename = "wtx")]
    Wtx,
    #[serde(rename = "wrx")]
    Wrx,
    #[serde(rename = "WOLA")]
    Wola,
    #[serde(rename = "CPW")]
    Cpw,
    #[serde(rename = "CPwtx")]
    CpWtx,
    #[serde(rename = "CPwrx")]
    CpWrx,
}

impl SystemKind {
    pub const ALL: [SystemKind; 7] = [
        SystemKind::Cp,
        SystemKind::Wtx,
        SystemKind::Wrx,
        SystemKind::Wola,
        SystemKind::Cpw,
        SystemKind::CpWtx,
        SystemKind::CpWrx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Cp => "CP",
            SystemKind::Wtx => "wtx",
            SystemKind::Wrx => "wrx",
            SystemKind::Wola => "WOLA",
            SystemKind::Cpw => "CPW",
            SystemKind::CpWtx => "CPwtx",
            SystemKind::CpWrx => "CPwrx",
        }
    }

    pub fn preset(self) -> &'static Preset {
        PRESETS
            .iter()
            .find(|p| p.kind == self)
            .expect("every kind has a preset row")
    }

    /// Standard tail lengths `(β, δ)` for this kind, zero where the kind has no window.
    pub fn reference_tails(self) -> (usize, usize) {
        let row = self.preset();
        (
            if row.tx_window { REFERENCE_TX_TAIL } else { 0 },
            if row.rx_window { REFERENCE_RX_TAIL } else { 0 },
        )
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        let key = key.strip_suffix("ofdm").unwrap_or(&key);
        SystemKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::InvalidParams(format!("unknown system kind '{s}'")))
    }
}

/// A linear form `mu·μ + beta·β + half_delta·(δ/2)` with integer coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lin {
    pub mu: i64,
    pub beta: i64,
    pub half_delta: i64,
}

impl Lin {
    const fn new(mu: i64, beta: i64, half_delta: i64) -> Self {
        Self { mu, beta, half_delta }
    }

    pub fn eval(&self, mu: usize, beta: usize, delta: usize) -> i64 {
        self.mu * mu as i64 + self.beta * beta as i64 + self.half_delta * (delta / 2) as i64
    }
}

/// One row of the preset table: which windows a kind uses and how the
/// remaining parameters follow from `(μ, β, δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Preset {
    pub kind: SystemKind,
    pub tx_window: bool,
    pub rx_window: bool,
    pub rho: Lin,
    pub gamma: Lin,
    pub kappa: Lin,
    /// Largest channel order the CP absorbs (`bound ≥ ν` is sufficient).
    pub cp_bound: Lin,
}

pub const PRESETS: [Preset; 7] = [
    Preset {
        kind: SystemKind::Cp,
        tx_window: false,
        rx_window: false,
        rho: Lin::new(0, 0, 0),
        gamma: Lin::new(1, 0, 0),
        kappa: Lin::new(0, 0, 0),
        cp_bound: Lin::new(1, 0, 0),
    },
    Preset {
        kind: SystemKind::Wtx,
        tx_window: true,
        rx_window: false,
        rho: Lin::new(0, 1, 0),
        gamma: Lin::new(1, 0, 0),
        kappa: Lin::new(0, 0, 0),
        cp_bound: Lin::new(1, -1, 0),
    },
    Preset {
        kind: SystemKind::Wrx,
        tx_window: false,
        rx_window: true,
        rho: Lin::new(0, 0, 1),
        gamma: Lin::new(1, 0, -1),
        kappa: Lin::new(0, 0, 0),
        cp_bound: Lin::new(1, 0, -1),
    },
    Preset {
        kind: SystemKind::Wola,
        tx_window: true,
        rx_window: true,
        rho: Lin::new(0, 1, 0),
        gamma: Lin::new(1, 0, -2),
        kappa: Lin::new(0, 0, 1),
        cp_bound: Lin::new(1, -1, -2),
    },
    Preset {
        kind: SystemKind::Cpw,
        tx_window: true,
        rx_window: true,
        rho: Lin::new(0, 1, 1),
        gamma: Lin::new(1, 0, -1),
        kappa: Lin::new(0, 0, 0),
        cp_bound: Lin::new(1, -1, -1),
    },
    Preset {
        kind: SystemKind::CpWtx,
        tx_window: true,
        rx_window: false,
        rho: Lin::new(0, 0, 0),
        gamma: Lin::new(1, -1, 0),
        kappa: Lin::new(0, 1, 0),
        cp_bound: Lin::new(1, -2, 0),
    },
    Preset {
        kind: SystemKind::CpWrx,
        tx_window: false,
        rx_window: true,
        rho: Lin::new(0, 0, 0),
        gamma: Lin::new(1, 0, -2),
        kappa: Lin::new(0, 0, 1),
        cp_bound: Lin::new(1, 0, -2),
    },
];

/// A validated system configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    /// `None` for a custom system built from raw parameters.
    pub kind: Option<SystemKind>,
    pub n: usize,
    pub mu: usize,
    pub beta: usize,
    pub delta: usize,
    pub rho: usize,
    pub gamma: usize,
    pub kappa: usize,
}

/// Lengths that follow from a parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedLengths {
    /// Advance between consecutive blocks, `N + μ + ρ − β`.
    pub hop: usize,
    /// Transmitted block length, `N + μ + ρ`.
    pub span: usize,
    /// Receiver intake per block, `N + δ + γ`.
    pub rx_in: usize,
    beta: usize,
}

impl DerivedLengths {
    /// Number of earlier blocks that reach the intake of the current one,
    /// `M = ⌈(ν + β) / (N + δ + γ)⌉`.
    pub fn overlap_blocks(&self, nu: usize) -> usize {
        (nu + self.beta).div_ceil(self.rx_in)
    }
}

/// Outcome of checking a system against a channel order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SufficiencyReport {
    pub nu: usize,
    /// Whether the kind's CP-length inequality holds; `None` for custom systems.
    pub cp_bound_holds: Option<bool>,
    /// `ν ≤ γ − β`: a single block reaches the receiver and the channel diagonalizes.
    pub interference_free: bool,
    pub overlap_blocks: usize,
}

impl SufficiencyReport {
    pub fn sufficient(&self) -> bool {
        self.cp_bound_holds.unwrap_or(self.interference_free)
    }
}

impl SystemParams {
    /// Builds and validates a system from all seven raw values.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: Option<SystemKind>,
        n: usize,
        mu: usize,
        beta: usize,
        delta: usize,
        rho: usize,
        gamma: usize,
        kappa: usize,
    ) -> Result<Self> {
        let p = Self { kind, n, mu, beta, delta, rho, gamma, kappa };
        p.validate()?;
        Ok(p)
    }

    /// Fills `ρ, γ, κ` from the preset table for `kind`.
    pub fn preset(kind: SystemKind, n: usize, mu: usize, beta: usize, delta: usize) -> Result<Self> {
        let row = kind.preset();
        if !row.tx_window && beta != 0 {
            return Err(Error::InvalidParams(format!("{kind} has no Tx window, but beta = {beta}")));
        }
        if !row.rx_window && delta != 0 {
            return Err(Error::InvalidParams(format!("{kind} has no Rx window, but delta = {delta}")));
        }
        if !delta.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("delta must be even, got {delta}")));
        }
        let derive = |name: &str, lin: &Lin| -> Result<usize> {
            let v = lin.eval(mu, beta, delta);
            usize::try_from(v).map_err(|_| {
                Error::InvalidParams(format!(
                    "{kind} with mu={mu}, beta={beta}, delta={delta} gives {name} = {v} < 0"
                ))
            })
        };
        let rho = derive("rho", &row.rho)?;
        let gamma = derive("gamma", &row.gamma)?;
        let kappa = derive("kappa", &row.kappa)?;
        Self::new(Some(kind), n, mu, beta, delta, rho, gamma, kappa)
    }

    /// Preset with the reference tail lengths (β = 8 and/or δ = 10 where the kind windows).
    pub fn reference(kind: SystemKind, n: usize, mu: usize) -> Result<Self> {
        let (beta, delta) = kind.reference_tails();
        Self::preset(kind, n, mu, beta, delta)
    }

    /// Replaces any of `ρ, γ, κ` and revalidates.
    pub fn with_overrides(self, rho: Option<usize>, gamma: Option<usize>, kappa: Option<usize>) -> Result<Self> {
        Self::new(
            self.kind,
            self.n,
            self.mu,
            self.beta,
            self.delta,
            rho.unwrap_or(self.rho),
            gamma.unwrap_or(self.gamma),
            kappa.unwrap_or(self.kappa),
        )
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n == 0 {
            return bad("N must be positive".into());
        }
        if !self.delta.is_multiple_of(2) {
            return bad(format!("delta must be even, got {}", self.delta));
        }
        if self.delta > self.n {
            return bad(format!("delta = {} exceeds N = {}", self.delta, self.n));
        }
        let span = self.n + self.mu + self.rho;
        if 2 * self.beta >= span {
            return bad(format!("beta = {} leaves no flat Tx window region (span {span})", self.beta));
        }
        if self.gamma > self.mu + self.rho {
            return bad(format!(
                "gamma = {} removes more than the redundancy mu + rho = {}",
                self.gamma,
                self.mu + self.rho
            ));
        }
        if self.kappa >= self.n {
            return bad(format!("kappa = {} must be below N = {}", self.kappa, self.n));
        }
        // The intake of block l must end before block l+1 starts, otherwise
        // later blocks leak into Y[l] and no causal model exists.
        let hop = span - self.beta;
        let rx_in = self.n + self.delta + self.gamma;
        if rx_in > hop {
            return bad(format!("receiver intake N+delta+gamma = {rx_in} exceeds block advance {hop}"));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedLengths {
        let span = self.n + self.mu + self.rho;
        DerivedLengths {
            hop: span - self.beta,
            span,
            rx_in: self.n + self.delta + self.gamma,
            beta: self.beta,
        }
    }

    pub fn overlap_blocks(&self, nu: usize) -> usize {
        self.derived().overlap_blocks(nu)
    }

    /// Largest `ν` for which the kind's CP inequality holds (negative when none does).
    pub fn cp_bound(&self) -> Option<i64> {
        self.kind
            .map(|k| k.preset().cp_bound.eval(self.mu, self.beta, self.delta))
    }

    /// Largest `ν` for which `ν ≤ γ − β`.
    pub fn interference_free_bound(&self) -> i64 {
        self.gamma as i64 - self.beta as i64
    }

    pub fn validate_against_channel(&self, nu: usize) -> SufficiencyReport {
        SufficiencyReport {
            nu,
            cp_bound_holds: self.cp_bound().map(|b| nu as i64 <= b),
            interference_free: nu as i64 <= self.interference_free_bound(),
            overlap_blocks: self.overlap_blocks(nu),
        }
    }

    /// True when every parameter matches the preset row of its kind.
    pub fn matches_preset(&self) -> bool {
        match self.kind {
            None => false,
            Some(kind) => {
                let row = kind.preset();
                let (mu, b, d) = (self.mu, self.beta, self.delta);
                (row.tx_window || b == 0)
                    && (row.rx_window || d == 0)
                    && row.rho.eval(mu, b, d) == self.rho as i64
                    && row.gamma.eval(mu, b, d) == self.gamma as i64
                    && row.kappa.eval(mu, b, d) == self.kappa as i64
            }
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            Some(k) => k.name().to_string(),
            None => format!(
                "custom(N={},mu={},beta={},delta={},rho={},gamma={},kappa={})",
                self.n, self.mu, self.beta, self.delta, self.rho, self.gamma, self.kappa
            ),
        }
    }
}

/// Key/value system description as read from a TOML config file.
///
/// ```toml
/// kind = "WOLA"   # or "custom"
/// n = 256
/// mu = 32
/// beta = 8
/// delta = 10
/// # optional, required for kind = "custom"
/// rho = 8
/// gamma = 22
/// kappa = 5
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: String,
    pub n: usize,
    pub mu: usize,
    #[serde(default)]
    pub beta: usize,
    #[serde(default)]
    pub delta: usize,
    pub rho: Option<usize>,
    pub gamma: Option<usize>,
    pub kappa: Option<usize>,
}

impl SystemConfig {
    pub fn to_params(&self) -> Result<SystemParams> {
        if self.kind.eq_ignore_ascii_case("custom") {
            let need = |name: &str, v: Option<usize>| {
                v.ok_or_else(|| Error::InvalidParams(format!("custom system requires '{name}'")))
            };
            return SystemParams::new(
                None,
                self.n,
                self.mu,
                self.beta,
                self.delta,
                need("rho", self.rho)?,
                need("gamma", self.gamma)?,
                need("kappa", self.kappa)?,
            );
        }
        let kind: SystemKind = self.kind.parse()?;
        SystemParams::preset(kind, self.n, self.mu, self.beta, self.delta)?
            .with_overrides(self.rho, self.gamma, self.kappa)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
