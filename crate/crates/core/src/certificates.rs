//! Explicit contraction factors and gains certifying set ISS and set iISS.
//!
//! The per-window factors are products of many terms close to one; for a
//! handful of followers they are already within `1e-15` of one and soon
//! round to `1.0` in double precision. Every factor is therefore carried as
//! [`Factor`], i.e. by `ln(1 - value)`, and the chains are evaluated in that
//! form.

use serde::{Deserialize, Serialize};

use crate::dynamics::WeightBounds;
use crate::error::{invalid, Error, Result};

/// Numbers in `[0, 1]` stored as `ln(1 - value)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Factor {
    log_gap: f64,
}

impl Factor {
    pub fn one() -> Self {
        Self {
            log_gap: f64::NEG_INFINITY,
        }
    }

    pub fn from_value(v: f64) -> Self {
        Self {
            log_gap: (-v).ln_1p(),
        }
    }

    pub fn from_log_gap(log_gap: f64) -> Self {
        Self { log_gap }
    }

    pub fn value(self) -> f64 {
        -self.log_gap.exp_m1()
    }

    /// `1 - value`, accurate even when the value rounds to one.
    pub fn gap(self) -> f64 {
        self.log_gap.exp()
    }

    pub fn log_gap(self) -> f64 {
        self.log_gap
    }

    /// `value^k`.
    pub fn pow(self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        (k as f64 * (-self.gap()).ln_1p()).exp()
    }

    /// Strictly inside `(0, 1)`.
    pub fn is_proper(self) -> bool {
        self.log_gap < 0.0 && self.log_gap.is_finite()
    }
}

/// Parameters shared by all rate functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub bounds: WeightBounds,
    pub n: usize,
    pub tau_d: f64,
    /// Uniform connectivity window `T`.
    pub window: f64,
}

impl RateParams {
    pub fn new(bounds: WeightBounds, n: usize, tau_d: f64, window: f64) -> Result<Self> {
        bounds.validate()?;
        if n < 2 {
            return Err(invalid("rate functions need at least two followers"));
        }
        if !(tau_d > 0.0 && tau_d.is_finite() && window > 0.0 && window.is_finite()) {
            return Err(invalid("dwell time and window must be positive"));
        }
        Ok(Self {
            bounds,
            n,
            tau_d,
            window,
        })
    }

    fn nm1(&self) -> f64 {
        (self.n - 1) as f64
    }

    /// `b_lo + (n - 1) a_hi`.
    pub fn lambda(&self) -> f64 {
        self.bounds.b_lo + self.nm1() * self.bounds.a_hi
    }

    /// `(n - 2) a_hi + a_lo`.
    pub fn lambda1(&self) -> f64 {
        (self.n - 2) as f64 * self.bounds.a_hi + self.bounds.a_lo
    }

    /// `T + 2 tau_D`.
    pub fn t0(&self) -> f64 {
        self.window + 2.0 * self.tau_d
    }

    /// `n T0`.
    pub fn t_star(&self) -> f64 {
        self.n as f64 * self.t0()
    }

    /// Rate at which a follower with leader access pulls in after the dwell.
    fn slow_rate(&self) -> f64 {
        self.nm1() * self.bounds.a_hi
    }

    fn check_time(&self, s: f64, upper: f64) -> Result<()> {
        if s >= 0.0 && s <= upper * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(invalid(format!("argument {s} outside [0, {upper}]")))
        }
    }

    fn check_level(level: Factor) -> Result<()> {
        if level.is_proper() {
            Ok(())
        } else {
            Err(invalid(format!(
                "level {} must lie strictly between 0 and 1",
                level.value()
            )))
        }
    }

    /// First-phase decay toward the leaders,
    /// `(b_lo e^{-lambda s} + (n - 1) a_hi) / lambda`. Also the leader-contact
    /// rate of the integral-ISS analysis.
    pub fn delta(&self, s: f64) -> Result<Factor> {
        self.check_time(s, f64::INFINITY)?;
        let lam = self.lambda();
        Ok(Factor::from_log_gap(
            (self.bounds.b_lo / lam).ln() + (-(-lam * s).exp_m1()).ln(),
        ))
    }

    /// Follower-to-follower relay, `((n - 2) a_hi + (m0 + (1 - m0) e^{-lambda1 s}) a_lo) / lambda1`.
    pub fn relay(&self, m0: Factor, s: f64) -> Result<Factor> {
        Self::check_level(m0)?;
        self.check_time(s, f64::INFINITY)?;
        let lam1 = self.lambda1();
        Ok(Factor::from_log_gap(
            m0.log_gap() + (self.bounds.a_lo / lam1).ln() + (-(-lam1 * s).exp_m1()).ln(),
        ))
    }

    /// Slow recovery after the dwell: `1 - e^{-(n - 1) a_hi s} (1 - level)`.
    pub fn phi(&self, level: Factor, s: f64) -> Result<Factor> {
        Self::check_level(level)?;
        self.check_time(s, f64::INFINITY)?;
        Ok(Factor::from_log_gap(level.log_gap() - self.slow_rate() * s))
    }

    /// Relay after a leader-contact phase; same closed form as [`relay`](Self::relay).
    pub fn varphi(&self, level: Factor, s: f64) -> Result<Factor> {
        self.relay(level, s)
    }

    /// Rate of a follower with a leader arc over `[0, T*]`: [`delta`](Self::delta)
    /// up to the dwell time, then [`phi`](Self::phi) from that level.
    pub fn mu(&self, s: f64) -> Result<Factor> {
        self.check_time(s, self.t_star())?;
        if s < self.tau_d {
            self.delta(s)
        } else {
            self.phi(self.delta(self.tau_d)?, s - self.tau_d)
        }
    }

    /// Rate of a follower fed by a follower at level `m0` over `[0, T*]`.
    pub fn xi(&self, m0: Factor, s: f64) -> Result<Factor> {
        self.check_time(s, self.t_star())?;
        if s < self.tau_d {
            self.relay(m0, s)
        } else {
            self.phi(self.relay(m0, self.tau_d)?, s - self.tau_d)
        }
    }

    /// Constants multiplying the input integrals in the two phases.
    pub fn gamma_constants(&self) -> (f64, f64) {
        let num = std::f64::consts::SQRT_2 * (1.0 + self.slow_rate() * self.t_star());
        (num / self.slow_rate(), num / self.lambda1())
    }

    /// `(1 + (n - 1) a_hi tau_D) / (b_lo + (n - 1) a_hi)`.
    pub fn c0(&self) -> f64 {
        (1.0 + self.slow_rate() * self.tau_d) / (self.bounds.b_lo + self.slow_rate())
    }

    /// `eta_1 = mu(T*)`, `eta_j = xi_{eta_{j-1}}((n - j + 1) T0)`.
    pub fn eta_chain(&self) -> Result<Vec<Factor>> {
        let mut chain = vec![self.mu(self.t_star())?];
        for j in 2..=self.n {
            let prev = *chain.last().unwrap();
            chain.push(self.xi(prev, (self.n - j + 1) as f64 * self.t0())?);
        }
        Ok(chain)
    }

    /// `c_1 = phi_{delta(tau_D)}(T*)`, `c_l = phi_{varphi_{c_{l-1}}(tau_D)}(T*)`.
    pub fn c_chain(&self) -> Result<Vec<Factor>> {
        let ts = self.t_star();
        let mut chain = vec![self.phi(self.delta(self.tau_d)?, ts)?];
        for _ in 2..=self.n {
            let prev = *chain.last().unwrap();
            chain.push(self.phi(self.varphi(prev, self.tau_d)?, ts)?);
        }
        Ok(chain)
    }

    /// `delta_1 = delta(tau_D)`, `delta_{k+1} = varphi_{phi_{delta_k}(tau_D)}(tau_D)`.
    pub fn delta_chain(&self) -> Result<Vec<Factor>> {
        let mut chain = vec![self.delta(self.tau_d)?];
        for _ in 2..=self.n {
            let prev = *chain.last().unwrap();
            chain.push(self.varphi(self.phi(prev, self.tau_d)?, self.tau_d)?);
        }
        Ok(chain)
    }
}

/// Every constant of the three certificates for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateBundle {
    pub params: RateParams,
    pub lambda: f64,
    pub lambda1: f64,
    pub t0: f64,
    pub t_star: f64,
    pub eta_chain: Vec<Factor>,
    pub eta_star: Factor,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c0: f64,
    pub c_chain: Vec<Factor>,
    pub c_hat: Factor,
    pub delta_chain: Vec<Factor>,
    pub delta_hat: Factor,
}

fn check_chain(name: &str, chain: &[Factor]) -> Result<()> {
    if let Some(bad) = chain.iter().find(|f| !f.is_proper()) {
        return Err(Error::CertificateInvalid(format!(
            "{name} factor {} (log gap {}) is not in (0, 1)",
            bad.value(),
            bad.log_gap()
        )));
    }
    if chain.windows(2).any(|w| w[1].log_gap() > w[0].log_gap()) {
        return Err(Error::CertificateInvalid(format!("{name} chain decreases")));
    }
    Ok(())
}

impl CertificateBundle {
    pub fn new(bounds: WeightBounds, n: usize, tau_d: f64, window: f64) -> Result<Self> {
        let p = RateParams::new(bounds, n, tau_d, window)?;
        let eta_chain = p.eta_chain()?;
        let c_chain = p.c_chain()?;
        let delta_chain = p.delta_chain()?;
        check_chain("eta", &eta_chain)?;
        check_chain("c", &c_chain)?;
        check_chain("delta", &delta_chain)?;
        let (gamma1, gamma2) = p.gamma_constants();
        Ok(Self {
            lambda: p.lambda(),
            lambda1: p.lambda1(),
            t0: p.t0(),
            t_star: p.t_star(),
            eta_star: *eta_chain.last().unwrap(),
            c_hat: *c_chain.last().unwrap(),
            delta_hat: *delta_chain.last().unwrap(),
            eta_chain,
            c_chain,
            delta_chain,
            gamma1,
            gamma2,
            c0: p.c0(),
            params: p,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn report(&self) -> CertificateReport {
        let values = |c: &[Factor]| c.iter().map(|f| f.value()).collect();
        let gaps = |c: &[Factor]| c.iter().map(|f| f.log_gap()).collect();
        CertificateReport {
            n: self.params.n,
            a_lo: self.params.bounds.a_lo,
            a_hi: self.params.bounds.a_hi,
            b_lo: self.params.bounds.b_lo,
            tau_d: self.params.tau_d,
            window: self.params.window,
            lambda: self.lambda,
            lambda1: self.lambda1,
            t0: self.t0,
            t_star: self.t_star,
            eta_chain: values(&self.eta_chain),
            eta_chain_log_gap: gaps(&self.eta_chain),
            eta_star: self.eta_star.value(),
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            c0: self.c0,
            c_chain: values(&self.c_chain),
            c_chain_log_gap: gaps(&self.c_chain),
            c_hat: self.c_hat.value(),
            delta_chain: values(&self.delta_chain),
            delta_chain_log_gap: gaps(&self.delta_chain),
            delta_hat: self.delta_hat.value(),
            siss_gain: siss_envelope(self).map(|e| e.gain).unwrap_or(f64::INFINITY),
            siiss_gain: SiissUjlc::gain(self.params.n),
        }
    }
}

/// Plain-number export of a [`CertificateBundle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub n: usize,
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    #[serde(rename = "tau_D")]
    pub tau_d: f64,
    #[serde(rename = "T")]
    pub window: f64,
    pub lambda: f64,
    pub lambda1: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "T_star")]
    pub t_star: f64,
    pub eta_chain: Vec<f64>,
    pub eta_chain_log_gap: Vec<f64>,
    pub eta_star: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c0: f64,
    pub c_chain: Vec<f64>,
    pub c_chain_log_gap: Vec<f64>,
    pub c_hat: f64,
    pub delta_chain: Vec<f64>,
    pub delta_chain_log_gap: Vec<f64>,
    pub delta_hat: f64,
    /// Slope of the ISS gain.
    pub siss_gain: f64,
    /// Slope of the integral-ISS gain.
    pub siiss_gain: f64,
}

impl CertificateReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `beta(r, t) = eta*^floor(t / T*) r`, `gamma(s) = gain s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SissEnvelope {
    pub eta_star: Factor,
    pub t_star: f64,
    pub gain: f64,
}

pub fn siss_envelope(bundle: &CertificateBundle) -> Result<SissEnvelope> {
    let eta = bundle.eta_star;
    if !eta.is_proper() {
        return Err(Error::CertificateInvalid(format!(
            "eta* = {} is not in (0, 1)",
            eta.value()
        )));
    }
    let n = bundle.n() as f64;
    let ts = bundle.t_star;
    let num = (1.0 + 2.0 * std::f64::consts::SQRT_2) * eta.value() * ts
        + (n - 1.0) * bundle.gamma2
        + bundle.gamma1;
    Ok(SissEnvelope {
        eta_star: eta,
        t_star: ts,
        gain: num / eta.gap() + ts,
    })
}

fn windows_elapsed(t: f64, period: f64) -> u64 {
    // Absorb rounding when t is a computed multiple of the period.
    (t / period + 1e-9).floor().max(0.0) as u64
}

impl SissEnvelope {
    pub fn beta(&self, r: f64, t: f64) -> f64 {
        self.eta_star.pow(windows_elapsed(t, self.t_star)) * r
    }

    /// Linear gain; the gain overflows to infinity when `eta*` is within
    /// f64 resolution of one, so zero is special-cased.
    pub fn gamma(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.gain * s
        }
    }

    /// `beta(r, t) + gamma(z_sup)`.
    pub fn bound(&self, r: f64, t: f64, z_sup: f64) -> f64 {
        self.beta(r, t) + self.gamma(z_sup)
    }
}

/// `dist(K T*) <= factor^K d0 + gain sum_j factor^{K-j} I_j`.
fn geometric_bound(factor: Factor, gain: f64, d0: f64, integrals: &[f64]) -> f64 {
    let k = integrals.len() as u64;
    let tail: f64 = integrals
        .iter()
        .enumerate()
        .map(|(j, i)| factor.pow(k - 1 - j as u64) * i)
        .sum();
    factor.pow(k) * d0 + gain * tail
}

/// Integral-ISS envelope under uniform joint connectivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiissUjlc {
    pub c_hat: Factor,
    pub t_star: f64,
    pub n: usize,
}

pub fn siiss_envelope_ujlc(bundle: &CertificateBundle) -> Result<SiissUjlc> {
    if !bundle.c_hat.is_proper() {
        return Err(Error::CertificateInvalid("c_hat is not in (0, 1)".into()));
    }
    Ok(SiissUjlc {
        c_hat: bundle.c_hat,
        t_star: bundle.t_star,
        n: bundle.n(),
    })
}

impl SiissUjlc {
    /// `(4n + 1) sqrt(2)`.
    pub fn gain(n: usize) -> f64 {
        (4 * n + 1) as f64 * std::f64::consts::SQRT_2
    }

    pub fn beta(&self, r: f64, t: f64) -> f64 {
        self.c_hat.pow(windows_elapsed(t, self.t_star)) * r
    }

    pub fn gamma(&self, s: f64) -> f64 {
        Self::gain(self.n) * s
    }

    /// Bound at `K T*` from the input integrals over `[(j - 1) T*, j T*)`,
    /// `j = 1..=K`.
    pub fn discrete_bound(&self, d0: f64, integrals: &[f64]) -> f64 {
        geometric_bound(self.c_hat, Self::gain(self.n), d0, integrals)
    }
}

/// Integral-ISS recursion at the marks of a jointly connected schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct JlcRecursion {
    pub delta_hat: Factor,
    pub n: usize,
    /// `T_1 = 0 < T_2 < ...`, the outer marks.
    pub marks: Vec<f64>,
}

/// Checks the nested mark structure: each interval `[T_i, T_{i+1})` is given
/// as its `n + 1` sub-window boundaries, the first interval starts at zero
/// and consecutive intervals share their endpoint.
pub fn siiss_recursion_jlc(
    bounds: WeightBounds,
    n: usize,
    tau_d: f64,
    intervals: &[Vec<f64>],
) -> Result<JlcRecursion> {
    // The delta chain does not depend on the window length.
    let p = RateParams::new(bounds, n, tau_d, 1.0)?;
    let chain = p.delta_chain()?;
    check_chain("delta", &chain)?;
    let mut marks = Vec::with_capacity(intervals.len() + 1);
    for (i, sub) in intervals.iter().enumerate() {
        if sub.len() != n + 1 {
            return Err(invalid(format!(
                "interval {} has {} sub-window boundaries, expected {}",
                i + 1,
                sub.len(),
                n + 1
            )));
        }
        if sub.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(format!("interval {} is not increasing", i + 1)));
        }
        match marks.last() {
            None if sub[0] != 0.0 => return Err(invalid("first mark must be 0")),
            None => marks.push(sub[0]),
            Some(&prev) if prev != sub[0] => {
                return Err(invalid(format!("interval {} does not start where the previous ends", i + 1)))
            }
            Some(_) => {}
        }
        marks.push(sub[n]);
    }
    Ok(JlcRecursion {
        delta_hat: *chain.last().unwrap(),
        n,
        marks,
    })
}

impl JlcRecursion {
    /// Bound at `T_{K+1}` from the input integrals over `[T_i, T_{i+1})`.
    pub fn discrete_bound(&self, d0: f64, integrals: &[f64]) -> f64 {
        geometric_bound(self.delta_hat, SiissUjlc::gain(self.n), d0, integrals)
    }
}
