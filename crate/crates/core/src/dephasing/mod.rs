//! Ohmic-class spectral densities: dephasing rates gamma(t), decoherence
//! integrals Gamma(t) by closed form and by quadrature, Markovianity
//! criteria, and the controlled decoherence functions produced by
//! bang-bang dynamical-decoupling pulse sequences.
//!
//! Conventions. The spectral density is J(w) = w^s / w_c^{s-1} e^{-w/w_c}.
//! Gamma(t) = int_0^t gamma(t') dt' is dimensionless; rates carry the w_c
//! factor so that Gamma and gamma stay consistent for any cutoff. The
//! high-temperature regime enters through the single dimensionless
//! prefactor theta_t = 2 k_B T / w_c.

pub mod quadrature;

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;
use statrs::function::gamma::gamma as gamma_positive;

use crate::error::{Error, Result};
use quadrature::integrate;

/// Temperature regime of the reservoir. `theta_t` is 2 k_B T / w_c.
///
/// `Finite` routes through the coth-kernel quadrature and is exploratory:
/// no closed forms exist for it here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "regime")]
pub enum TemperatureRegime {
    Zero,
    High { theta_t: f64 },
    Finite { theta_t: f64 },
}

pub const DEFAULT_THETA_T: f64 = 10.0;

/// Euler gamma function on x > -1, x != 0 (recurrence below zero).
pub fn euler_gamma(x: f64) -> f64 {
    if x > 0.0 {
        gamma_positive(x)
    } else if x > -1.0 && x != 0.0 {
        gamma_positive(x + 1.0) / x
    } else {
        f64::NAN
    }
}

/// An Ohmic-class reservoir spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OhmicSpectrum {
    s: f64,
    omega_c: f64,
    temperature: TemperatureRegime,
}

impl OhmicSpectrum {
    pub fn new(s: f64, omega_c: f64, temperature: TemperatureRegime) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter {
                name: "s",
                reason: format!("Ohmicity parameter must be positive, got {s}"),
            });
        }
        if !(omega_c > 0.0) || !omega_c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega_c",
                reason: format!("cutoff frequency must be positive, got {omega_c}"),
            });
        }
        match temperature {
            TemperatureRegime::High { theta_t } | TemperatureRegime::Finite { theta_t }
                if !(theta_t > 0.0) =>
            {
                return Err(Error::InvalidParameter {
                    name: "theta_t",
                    reason: format!("temperature prefactor must be positive, got {theta_t}"),
                });
            }
            _ => {}
        }
        Ok(Self {
            s,
            omega_c,
            temperature,
        })
    }

    /// Zero-temperature spectrum with w_c = 1.
    pub fn zero_temperature(s: f64) -> Result<Self> {
        Self::new(s, 1.0, TemperatureRegime::Zero)
    }

    /// High-temperature spectrum with w_c = 1 and the default theta_t.
    pub fn high_temperature(s: f64) -> Result<Self> {
        Self::new(
            s,
            1.0,
            TemperatureRegime::High {
                theta_t: DEFAULT_THETA_T,
            },
        )
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn temperature(&self) -> TemperatureRegime {
        self.temperature
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(s, self.omega_c, self.temperature)
    }

    /// J(w) = w^s / w_c^{s-1} e^{-w/w_c}.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let x = omega / self.omega_c;
        self.omega_c * x.powf(self.s) * (-x).exp()
    }

    /// The kernel g(w, T) such that Gamma(t) = int g(w,T) [1 - cos(w t)] dw.
    pub fn dephasing_kernel(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let x = omega / self.omega_c;
        match self.temperature {
            TemperatureRegime::Zero => x.powf(self.s - 2.0) * (-x).exp() / self.omega_c,
            TemperatureRegime::High { theta_t } => {
                theta_t * x.powf(self.s - 3.0) * (-x).exp() / self.omega_c
            }
            TemperatureRegime::Finite { theta_t } => {
                let coth = 1.0 / (x / theta_t).tanh();
                x.powf(self.s - 2.0) * (-x).exp() * coth / self.omega_c
            }
        }
    }

    /// Asymptotic limit of Gamma(t) for t -> infinity: `Some` when bounded,
    /// `None` when divergent. Closed form: Gamma_E(s-1) at zero temperature
    /// (bounded iff s > 1) and theta_t Gamma_E(s-2) at high temperature
    /// (bounded iff s > 2).
    pub fn asymptotic_big_gamma(&self) -> Result<Option<f64>> {
        match self.temperature {
            TemperatureRegime::Zero => Ok((self.s > 1.0).then(|| euler_gamma(self.s - 1.0))),
            TemperatureRegime::High { theta_t } => {
                Ok((self.s > 2.0).then(|| theta_t * euler_gamma(self.s - 2.0)))
            }
            TemperatureRegime::Finite { .. } => Err(Error::UnsupportedParameter(
                "no closed-form asymptote at finite temperature".into(),
            )),
        }
    }
}

/// Dimensionless zero-temperature rate,
/// [1 + x^2]^{-s/2} Gamma_E(s) sin(s arctan x) with x = w_c t.
fn gamma0_dimensionless(x: f64, s: f64) -> f64 {
    (1.0 + x * x).powf(-0.5 * s) * euler_gamma(s) * (s * x.atan()).sin()
}

/// Dephasing rate gamma(t). Zero temperature uses the closed form above
/// (times w_c); high temperature uses theta_t gamma_0(t, s-1), defined only
/// for s > 1.
pub fn gamma0(t: f64, spec: &OhmicSpectrum) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let x = spec.omega_c * t;
    match spec.temperature {
        TemperatureRegime::Zero => Ok(spec.omega_c * gamma0_dimensionless(x, spec.s)),
        TemperatureRegime::High { theta_t } => {
            if spec.s <= 1.0 {
                Err(Error::UnsupportedParameter(format!(
                    "high-temperature rate needs s > 1, got s = {}",
                    spec.s
                )))
            } else {
                Ok(theta_t * spec.omega_c * gamma0_dimensionless(x, spec.s - 1.0))
            }
        }
        TemperatureRegime::Finite { .. } => Err(Error::UnsupportedParameter(
            "no closed-form rate at finite temperature".into(),
        )),
    }
}

/// Closed-form Gamma(t) for the zero-temperature kernel with exponent s:
/// Gamma_E(s-1) [1 - cos((s-1) arctan x) / (1+x^2)^{(s-1)/2}], with the
/// s = 1 limit ln(1+x^2)/2.
fn big_gamma_closed(x: f64, s: f64) -> f64 {
    let nu = s - 1.0;
    if nu.abs() < 1e-9 {
        return 0.5 * (1.0 + x * x).ln();
    }
    euler_gamma(nu) * (1.0 - (nu * x.atan()).cos() * (1.0 + x * x).powf(-0.5 * nu))
}

/// Decoherence integral Gamma(t) = int_0^t gamma(t') dt', closed form.
/// Finite temperature falls back to quadrature.
pub fn big_gamma(t: f64, spec: &OhmicSpectrum) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let x = spec.omega_c * t;
    match spec.temperature {
        TemperatureRegime::Zero => Ok(big_gamma_closed(x, spec.s)),
        TemperatureRegime::High { theta_t } => {
            if spec.s <= 1.0 {
                Err(Error::UnsupportedParameter(format!(
                    "high-temperature Gamma needs s > 1, got s = {}",
                    spec.s
                )))
            } else {
                Ok(theta_t * big_gamma_closed(x, spec.s - 1.0))
            }
        }
        TemperatureRegime::Finite { .. } => big_gamma_quadrature(t, spec),
    }
}

/// Frequency upper cut for the quadrature, in units of w_c. The
/// exponential suppresses the tail to ~1e-14 of the integral.
const QUADRATURE_OMEGA_MAX: f64 = 40.0;
const QUADRATURE_ABS_TOL: f64 = 1e-10;
const QUADRATURE_REL_TOL: f64 = 1e-9;

/// Analytic bound on `filter_sup * int_{wmax}^inf g(w) dw`.
fn kernel_tail_bound(spec: &OhmicSpectrum, filter_sup: f64) -> f64 {
    let x = QUADRATURE_OMEGA_MAX;
    let a = match spec.temperature {
        TemperatureRegime::Zero => spec.s - 2.0,
        TemperatureRegime::High { .. } | TemperatureRegime::Finite { .. } => spec.s - 3.0,
    };
    let prefactor = match spec.temperature {
        TemperatureRegime::Zero => 1.0,
        // coth(x/theta) <= 1 + theta/x, and the high-T kernel is the
        // theta/x part alone
        TemperatureRegime::High { theta_t } => theta_t,
        TemperatureRegime::Finite { theta_t } => theta_t + x,
    };
    // int_x^inf u^a e^-u du <= x^a e^-x / (1 - a/x) for a < x
    let incomplete = x.powf(a) * (-x).exp() / (1.0 - a / x).max(0.5);
    filter_sup * prefactor * incomplete
}

/// Splits [0, wmax] into oscillation-aware panels: boundaries at the zeros
/// of 1 - cos(w t), i.e. multiples of 2 pi / t (halved when `fine`).
fn oscillation_panels(t: f64, omega_c: f64, fine: bool) -> Vec<f64> {
    let omega_max = QUADRATURE_OMEGA_MAX * omega_c;
    let mut period = if t > 0.0 {
        std::f64::consts::TAU / t
    } else {
        f64::INFINITY
    };
    if fine {
        period *= 0.5;
    }
    let mut edges = vec![0.0];
    if period.is_finite() && period < omega_max {
        let n = (omega_max / period).floor() as usize;
        edges.extend((1..=n).map(|k| k as f64 * period));
    }
    if *edges.last().unwrap() < omega_max {
        edges.push(omega_max);
    }
    edges
}

fn quadrature_over_panels<F: Fn(f64) -> f64>(
    integrand: F,
    edges: &[f64],
    tail: f64,
) -> Result<f64> {
    let n_panels = edges.len() - 1;
    let abs_budget = QUADRATURE_ABS_TOL / n_panels as f64;
    let mut value = 0.0;
    let mut error = tail;
    for w in edges.windows(2) {
        let est = integrate(&integrand, w[0], w[1], abs_budget, QUADRATURE_REL_TOL);
        value += est.value;
        error += est.error;
    }
    if error > QUADRATURE_ABS_TOL.max(QUADRATURE_REL_TOL * value.abs()) * 100.0 {
        return Err(Error::QuadratureNonConvergence {
            estimate: value,
            error_bound: error,
        });
    }
    Ok(value)
}

/// Gamma(t) by direct frequency quadrature of g(w,T) [1 - cos(w t)],
/// the independent oracle for [`big_gamma`].
pub fn big_gamma_quadrature(t: f64, spec: &OhmicSpectrum) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    // 1 - cos(wt) = 2 sin^2(wt/2), exact near zero
    let integrand = |omega: f64| {
        let s = (0.5 * omega * t).sin();
        spec.dephasing_kernel(omega) * 2.0 * s * s
    };
    let edges = oscillation_panels(t, spec.omega_c, false);
    quadrature_over_panels(integrand, &edges, kernel_tail_bound(spec, 2.0))
}

/// An ordered sequence of instantaneous pi-pulse instants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseSequence {
    instants: Vec<f64>,
    /// Set when built from a periodic spec; kept for output metadata.
    interval: Option<f64>,
}

impl PulseSequence {
    pub fn from_instants(instants: Vec<f64>) -> Result<Self> {
        if instants.is_empty() {
            return Err(Error::InvalidParameter {
                name: "instants",
                reason: "pulse sequence must contain at least one instant".into(),
            });
        }
        let mut prev = 0.0;
        for &t in &instants {
            if !t.is_finite() || t <= prev {
                return Err(Error::InvalidParameter {
                    name: "instants",
                    reason: format!("instants must be strictly increasing and positive; saw {t} after {prev}"),
                });
            }
            prev = t;
        }
        Ok(Self {
            instants,
            interval: None,
        })
    }

    /// Periodic "bang bang" sequence t_n = n dt for n = 1..=N_max with
    /// t_f = N_max dt <= horizon.
    pub fn periodic_within(interval: f64, horizon: f64) -> Result<Self> {
        if !(interval > 0.0) {
            return Err(Error::InvalidParameter {
                name: "interval",
                reason: format!("pulse interval must be positive, got {interval}"),
            });
        }
        let n_max = (horizon / interval * (1.0 + 1e-12)).floor() as usize;
        if n_max == 0 {
            return Err(Error::InvalidParameter {
                name: "interval",
                reason: format!("no pulse fits: interval {interval} exceeds horizon {horizon}"),
            });
        }
        Ok(Self {
            instants: (1..=n_max).map(|n| n as f64 * interval).collect(),
            interval: Some(interval),
        })
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn interval(&self) -> Option<f64> {
        self.interval
    }

    pub fn final_pulse(&self) -> f64 {
        *self.instants.last().expect("sequence is nonempty")
    }

    /// Number of pulses strictly before `t`.
    pub fn count_before(&self, t: f64) -> usize {
        self.instants.partition_point(|&tm| tm < t)
    }
}

fn parity_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Gamma_n(t) from the Gamma_0 recursion, using the first n pulses where
/// n is the number of instants strictly before t:
///
/// ```text
/// Gamma_n(t) = 2 sum_m (-1)^{m+1} Gamma_0(t_m)
///            + 4 sum_{m>j} (-1)^{m-1+j} Gamma_0(t_m - t_j)
///            + 2 sum_m (-1)^{m+n} Gamma_0(t - t_m)
///            + (-1)^n Gamma_0(t)
/// ```
pub fn controlled_gamma(t: f64, spec: &OhmicSpectrum, pulses: &PulseSequence) -> Result<f64> {
    controlled_gamma_with(t, pulses, &|u| big_gamma(u, spec))
}

fn controlled_gamma_with(
    t: f64,
    pulses: &PulseSequence,
    gamma0_of: &dyn Fn(f64) -> Result<f64>,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let n = pulses.count_before(t);
    if n == 0 {
        return gamma0_of(t);
    }
    let tm = &pulses.instants()[..n];

    let mut acc = 0.0;
    for (m, &t_m) in tm.iter().enumerate() {
        // paper-style indices are 1-based
        acc += 2.0 * parity_sign(m + 2) * gamma0_of(t_m)?;
    }
    for m in 1..n {
        for j in 0..m {
            acc += 4.0 * parity_sign(m + j + 1) * gamma0_of(tm[m] - tm[j])?;
        }
    }
    for (m, &t_m) in tm.iter().enumerate() {
        acc += 2.0 * parity_sign(m + 1 + n) * gamma0_of(t - t_m)?;
    }
    acc += parity_sign(n) * gamma0_of(t)?;
    Ok(acc)
}

/// Rate of the controlled decoherence function on the branch with `n`
/// applied pulses: gamma_n(t) = 2 sum_m (-1)^{m+n} gamma_0(t - t_m)
/// + (-1)^n gamma_0(t). Exposing `n` lets callers evaluate both sides of
/// the sign-flip law gamma_n(t_n) = -gamma_{n-1}(t_n) at a pulse instant.
pub fn controlled_gamma_rate_n(
    n: usize,
    t: f64,
    spec: &OhmicSpectrum,
    pulses: &PulseSequence,
) -> Result<f64> {
    if n > pulses.instants().len() {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("only {} pulses available", pulses.instants().len()),
        });
    }
    let mut acc = 0.0;
    for (m, &t_m) in pulses.instants()[..n].iter().enumerate() {
        if t < t_m {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("branch n = {n} needs t >= t_{} = {t_m}", m + 1),
            });
        }
        acc += 2.0 * parity_sign(m + 1 + n) * gamma0(t - t_m, spec)?;
    }
    acc += parity_sign(n) * gamma0(t, spec)?;
    Ok(acc)
}

/// Rate of the controlled decoherence function at time t, with the branch
/// picked by the number of pulses strictly before t.
pub fn controlled_gamma_rate(t: f64, spec: &OhmicSpectrum, pulses: &PulseSequence) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    controlled_gamma_rate_n(pulses.count_before(t), t, spec, pulses)
}

/// |y_n(w t)|^2 for the first `n` pulses:
/// y_n = 1 + (-1)^{n+1} e^{iwt} + 2 sum_m (-1)^m e^{iw t_m}.
fn filter_factor_sq(omega: f64, t: f64, instants: &[f64]) -> f64 {
    let n = instants.len();
    let mut re = 1.0;
    let mut im = 0.0;
    let edge = parity_sign(n + 1);
    re += edge * (omega * t).cos();
    im += edge * (omega * t).sin();
    for (m, &t_m) in instants.iter().enumerate() {
        let sign = 2.0 * parity_sign(m + 1);
        re += sign * (omega * t_m).cos();
        im += sign * (omega * t_m).sin();
    }
    re * re + im * im
}

/// Gamma_n(t) by direct quadrature of the filter function,
/// int g(w,T) |y_n(w t)|^2 / 2 dw — the oracle for [`controlled_gamma`].
/// With no applicable pulses it reduces exactly to [`big_gamma_quadrature`].
pub fn controlled_gamma_quadrature(
    t: f64,
    spec: &OhmicSpectrum,
    pulses: &PulseSequence,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = pulses.count_before(t);
    let instants = &pulses.instants()[..n];
    let integrand =
        |omega: f64| 0.5 * spec.dephasing_kernel(omega) * filter_factor_sq(omega, t, instants);
    let edges = oscillation_panels(t, spec.omega_c, true);
    let sup = 2.0 * (n as f64 + 1.0) * (n as f64 + 1.0);
    quadrature_over_panels(integrand, &edges, kernel_tail_bound(spec, sup))
}

/// Markovianity verdict for the pure-dephasing dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Markovianity {
    Markovian,
    NonMarkovian,
}

/// Non-Markovian iff the dephasing rate takes negative values: s > 2 at
/// zero temperature, s > 3 in the high-temperature form.
pub fn markovianity_criterion(spec: &OhmicSpectrum) -> Result<Markovianity> {
    let threshold = match spec.temperature {
        TemperatureRegime::Zero => 2.0,
        TemperatureRegime::High { .. } => 3.0,
        TemperatureRegime::Finite { .. } => {
            return Err(Error::UnsupportedParameter(
                "criterion implemented for the zero- and high-temperature regimes".into(),
            ))
        }
    };
    Ok(if spec.s > threshold {
        Markovianity::NonMarkovian
    } else {
        Markovianity::Markovian
    })
}

/// Numeric cross-check: scans gamma(t) on a log-spaced grid and reports
/// whether any negative value occurs.
pub fn has_negative_rate(spec: &OhmicSpectrum, t_max: f64, samples: usize) -> Result<bool> {
    let t_min: f64 = 1e-3 / spec.omega_c;
    let ratio = (t_max / t_min).ln();
    for i in 0..samples {
        let t = t_min * (ratio * i as f64 / (samples - 1) as f64).exp();
        if gamma0(t, spec)? < -1e-12 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Outcome of the numeric plateau probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PlateauDetection {
    Bounded { estimate: f64 },
    Divergent,
}

/// Probes Gamma at t_h/4, t_h/2 and t_h. Increments of a bounded Gamma
/// decay roughly geometrically (power-law tail), so a ratio safely below 1
/// marks a plateau and the remainder is extrapolated; otherwise the
/// integral keeps growing and is declared divergent.
pub fn detect_plateau(spec: &OhmicSpectrum, t_h: f64) -> Result<PlateauDetection> {
    let g1 = big_gamma(0.25 * t_h, spec)?;
    let g2 = big_gamma(0.5 * t_h, spec)?;
    let g3 = big_gamma(t_h, spec)?;
    let d1 = g2 - g1;
    let d2 = g3 - g2;
    if d1.abs() < 1e-12 && d2.abs() < 1e-12 {
        return Ok(PlateauDetection::Bounded { estimate: g3 });
    }
    let ratio = d2 / d1;
    if ratio.abs() < 0.9 {
        Ok(PlateauDetection::Bounded {
            estimate: g3 + d2 * ratio / (1.0 - ratio),
        })
    } else {
        Ok(PlateauDetection::Divergent)
    }
}

/// A dephasing channel family instance: an Ohmic spectrum plus an optional
/// pulse sequence. Yields Gamma(t), the rate, and the per-side coherence
/// factor e^{-Gamma(t)}.
///
/// Gamma_0 evaluations are memoized behind a read-mostly cache; concurrent
/// lookups may duplicate work but identical keys always yield identical
/// values (the underlying function is pure).
#[derive(Debug)]
pub struct DephasingProfile {
    spectrum: OhmicSpectrum,
    pulses: Option<PulseSequence>,
    gamma0_cache: RwLock<HashMap<u64, f64>>,
    pulse_prefix: OnceLock<Result<Vec<f64>>>,
}

impl Clone for DephasingProfile {
    fn clone(&self) -> Self {
        Self::new(self.spectrum, self.pulses.clone())
    }
}

impl PartialEq for DephasingProfile {
    fn eq(&self, other: &Self) -> bool {
        self.spectrum == other.spectrum && self.pulses == other.pulses
    }
}

impl DephasingProfile {
    pub fn new(spectrum: OhmicSpectrum, pulses: Option<PulseSequence>) -> Self {
        Self {
            spectrum,
            pulses,
            gamma0_cache: RwLock::new(HashMap::new()),
            pulse_prefix: OnceLock::new(),
        }
    }

    pub fn unpulsed(spectrum: OhmicSpectrum) -> Self {
        Self::new(spectrum, None)
    }

    pub fn pulsed(spectrum: OhmicSpectrum, pulses: PulseSequence) -> Self {
        Self::new(spectrum, Some(pulses))
    }

    pub fn spectrum(&self) -> &OhmicSpectrum {
        &self.spectrum
    }

    pub fn pulses(&self) -> Option<&PulseSequence> {
        self.pulses.as_ref()
    }

    fn big_gamma0_cached(&self, t: f64) -> Result<f64> {
        let key = t.to_bits();
        if let Some(&v) = self.gamma0_cache.read().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let v = big_gamma(t, &self.spectrum)?;
        self.gamma0_cache.write().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// The pulse-only part of the recursion, P[n], accumulated once:
    /// P[n] = P[n-1] + 2 (-1)^{n+1} Gamma_0(t_n)
    ///      + 4 sum_{j<n} (-1)^{n-1+j} Gamma_0(t_n - t_j).
    fn pulse_prefix(&self, pulses: &PulseSequence) -> Result<&[f64]> {
        let computed = self.pulse_prefix.get_or_init(|| {
            let tm = pulses.instants();
            let mut prefix = Vec::with_capacity(tm.len() + 1);
            prefix.push(0.0);
            for m in 0..tm.len() {
                let mut p = prefix[m] + 2.0 * parity_sign(m + 2) * self.big_gamma0_cached(tm[m])?;
                for j in 0..m {
                    p += 4.0 * parity_sign(m + j + 1) * self.big_gamma0_cached(tm[m] - tm[j])?;
                }
                prefix.push(p);
            }
            Ok(prefix)
        });
        match computed {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }

    /// Gamma(t), controlled when a pulse sequence is present.
    pub fn big_gamma(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let Some(pulses) = &self.pulses else {
            return self.big_gamma0_cached(t);
        };
        let n = pulses.count_before(t);
        if n == 0 {
            return self.big_gamma0_cached(t);
        }
        let prefix = self.pulse_prefix(pulses)?[n];
        let tm = &pulses.instants()[..n];
        // the t-dependent terms have unique arguments; caching them would
        // only bloat the map, so they evaluate directly
        let mut acc = prefix;
        for (m, &t_m) in tm.iter().enumerate() {
            acc += 2.0 * parity_sign(m + 1 + n) * big_gamma(t - t_m, &self.spectrum)?;
        }
        acc += parity_sign(n) * big_gamma(t, &self.spectrum)?;
        Ok(acc)
    }

    /// gamma(t), controlled when a pulse sequence is present.
    pub fn rate(&self, t: f64) -> Result<f64> {
        match &self.pulses {
            None => gamma0(t, &self.spectrum),
            Some(pulses) => controlled_gamma_rate(t, &self.spectrum, pulses),
        }
    }

    /// Per-side coherence multiplier e^{-Gamma(t)} in (0, 1].
    pub fn coherence_factor(&self, t: f64) -> Result<f64> {
        Ok((-self.big_gamma(t)?).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn zero_t(s: f64) -> OhmicSpectrum {
        OhmicSpectrum::zero_temperature(s).unwrap()
    }

    #[test]
    fn rate_vanishes_at_time_zero() {
        for s in [0.5, 1.0, 2.0, 2.5, 4.0] {
            assert_eq!(gamma0(0.0, &zero_t(s)).unwrap(), 0.0);
        }
    }

    #[test]
    fn ohmic_rate_closed_form_and_positivity() {
        // s = 1: gamma0 = w_c x / (1 + x^2)
        let spec = zero_t(1.0);
        for t in [0.01, 0.5, 3.0, 100.0] {
            let expected = t / (1.0 + t * t);
            assert_abs_diff_eq!(gamma0(t, &spec).unwrap(), expected, epsilon = 1e-12);
            assert!(gamma0(t, &spec).unwrap() >= 0.0);
        }
    }

    #[test]
    fn super_ohmic_rate_crosses_zero_where_predicted() {
        // first zero of sin(s arctan x) at x = tan(pi/s)
        let spec = zero_t(2.5);
        let x_zero = (std::f64::consts::PI / 2.5).tan();
        assert_abs_diff_eq!(x_zero, 3.0776835, epsilon = 1e-6);
        assert_abs_diff_eq!(gamma0(x_zero, &spec).unwrap(), 0.0, epsilon = 1e-12);
        assert!(gamma0(x_zero - 0.05, &spec).unwrap() > 0.0);
        assert!(gamma0(x_zero + 0.05, &spec).unwrap() < 0.0);
    }

    #[test]
    fn high_temperature_rate_shifts_the_exponent() {
        let theta = 7.5;
        let spec = OhmicSpectrum::new(3.0, 1.0, TemperatureRegime::High { theta_t: theta }).unwrap();
        for t in [0.3, 1.0, 4.0] {
            let expected = theta * gamma0(t, &zero_t(2.0)).unwrap();
            assert_abs_diff_eq!(gamma0(t, &spec).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn high_temperature_needs_super_ohmic_s() {
        let spec = OhmicSpectrum::high_temperature(1.0).unwrap();
        assert!(matches!(
            gamma0(1.0, &spec),
            Err(Error::UnsupportedParameter(_))
        ));
        assert!(big_gamma(1.0, &spec).is_err());
    }

    #[test]
    fn big_gamma_starts_at_zero() {
        for s in [0.5, 1.0, 2.5] {
            assert_eq!(big_gamma(0.0, &zero_t(s)).unwrap(), 0.0);
            assert_eq!(big_gamma_quadrature(0.0, &zero_t(s)).unwrap(), 0.0);
        }
    }

    #[test]
    fn ohmic_big_gamma_is_logarithmic() {
        let spec = zero_t(1.0);
        for t in [0.2, 1.0, 10.0, 1e3_f64] {
            let expected = 0.5 * (1.0 + t * t).ln();
            assert_relative_eq!(big_gamma(t, &spec).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        for s in [0.5, 1.0, 2.0, 2.5, 3.0, 4.0] {
            let spec = zero_t(s);
            for t in [0.1, 1.0, 5.0, 20.0, 50.0] {
                let closed = big_gamma(t, &spec).unwrap();
                let quad = big_gamma_quadrature(t, &spec).unwrap();
                assert_relative_eq!(closed, quad, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn closed_form_agrees_with_quadrature_off_unit_cutoff() {
        let spec = OhmicSpectrum::new(2.5, 2.0, TemperatureRegime::Zero).unwrap();
        for t in [0.1, 1.0, 10.0] {
            assert_relative_eq!(
                big_gamma(t, &spec).unwrap(),
                big_gamma_quadrature(t, &spec).unwrap(),
                max_relative = 1e-7
            );
        }
    }

    #[test]
    fn high_temperature_closed_form_agrees_with_quadrature() {
        let spec = OhmicSpectrum::high_temperature(2.5).unwrap();
        for t in [0.5, 2.0, 20.0] {
            assert_relative_eq!(
                big_gamma(t, &spec).unwrap(),
                big_gamma_quadrature(t, &spec).unwrap(),
                max_relative = 1e-7
            );
        }
    }

    #[test]
    fn super_ohmic_gamma_saturates_at_euler_gamma() {
        // s = 2.5: Gamma(inf) = Gamma_E(1.5) = sqrt(pi)/2
        let spec = zero_t(2.5);
        let limit = std::f64::consts::PI.sqrt() / 2.0;
        assert_abs_diff_eq!(euler_gamma(1.5), limit, epsilon = 1e-12);
        assert_abs_diff_eq!(big_gamma(1e3, &spec).unwrap(), limit, epsilon = 1e-4);
        assert_abs_diff_eq!(
            big_gamma_quadrature(1e3, &spec).unwrap(),
            limit,
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            spec.asymptotic_big_gamma().unwrap().unwrap(),
            limit,
            epsilon = 1e-14
        );
    }

    #[test]
    fn boundedness_dichotomy() {
        for s in [2.0, 2.5, 3.0, 4.0] {
            let spec = zero_t(s);
            let PlateauDetection::Bounded { estimate } = detect_plateau(&spec, 1e4).unwrap() else {
                panic!("s = {s} should be bounded");
            };
            let analytic = spec.asymptotic_big_gamma().unwrap().unwrap();
            assert_relative_eq!(estimate, analytic, max_relative = 1e-5);
        }
        for s in [0.5, 1.0] {
            let spec = zero_t(s);
            assert_eq!(detect_plateau(&spec, 1e4).unwrap(), PlateauDetection::Divergent);
            // monotone growth beyond any fixed bound on the horizon
            let g3 = big_gamma(1e2, &spec).unwrap();
            let g4 = big_gamma(1e3, &spec).unwrap();
            let g5 = big_gamma(1e4, &spec).unwrap();
            assert!(g3 < g4 && g4 < g5);
            assert!(g5 > 3.0);
        }
    }

    #[test]
    fn markovianity_thresholds() {
        assert_eq!(
            markovianity_criterion(&zero_t(1.0)).unwrap(),
            Markovianity::Markovian
        );
        assert_eq!(
            markovianity_criterion(&zero_t(2.5)).unwrap(),
            Markovianity::NonMarkovian
        );
        assert_eq!(
            markovianity_criterion(&OhmicSpectrum::high_temperature(2.5).unwrap()).unwrap(),
            Markovianity::Markovian
        );
        assert_eq!(
            markovianity_criterion(&OhmicSpectrum::high_temperature(3.5).unwrap()).unwrap(),
            Markovianity::NonMarkovian
        );
    }

    #[test]
    fn negative_rate_search_matches_criterion() {
        for (s, expect) in [(1.5, false), (2.0, false), (2.01, true), (3.5, true)] {
            let spec = zero_t(s);
            assert_eq!(
                has_negative_rate(&spec, 1e4, 20_000).unwrap(),
                expect,
                "s = {s}"
            );
        }
    }

    #[test]
    fn empty_pulses_reduce_to_free_decoherence() {
        let spec = zero_t(1.0);
        let pulses = PulseSequence::from_instants(vec![5.0]).unwrap();
        // before the first pulse the controlled function is Gamma_0
        for t in [0.5, 2.0, 4.9] {
            assert_abs_diff_eq!(
                controlled_gamma(t, &spec, &pulses).unwrap(),
                big_gamma(t, &spec).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn single_pulse_closed_form() {
        let spec = zero_t(1.0);
        let t1 = 0.7;
        let pulses = PulseSequence::from_instants(vec![t1]).unwrap();
        for t in [0.8, 1.5, 3.0] {
            let expected = -big_gamma(t, &spec).unwrap()
                + 2.0 * big_gamma(t1, &spec).unwrap()
                + 2.0 * big_gamma(t - t1, &spec).unwrap();
            assert_abs_diff_eq!(
                controlled_gamma(t, &spec, &pulses).unwrap(),
                expected,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn recursion_matches_filter_quadrature() {
        let pulses = PulseSequence::from_instants(vec![0.4, 0.9, 1.7]).unwrap();
        for s in [0.5, 2.5] {
            let spec = zero_t(s);
            for t in [0.6, 1.3, 2.4] {
                let rec = controlled_gamma(t, &spec, &pulses).unwrap();
                let quad = controlled_gamma_quadrature(t, &spec, &pulses).unwrap();
                assert_relative_eq!(rec, quad, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn unpulsed_filter_reduces_to_plain_quadrature() {
        // |y_0|^2 = |1 - e^{iwt}|^2 reproduces the unpulsed integrand
        let spec = zero_t(2.5);
        let pulses = PulseSequence::from_instants(vec![100.0]).unwrap();
        for t in [0.5, 3.0, 9.0] {
            assert_relative_eq!(
                controlled_gamma_quadrature(t, &spec, &pulses).unwrap(),
                big_gamma_quadrature(t, &spec).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn controlled_gamma_is_continuous_at_pulses() {
        let spec = zero_t(2.5);
        let pulses = PulseSequence::periodic_within(0.6, 3.0).unwrap();
        for &t_n in pulses.instants() {
            let left = controlled_gamma(t_n - 1e-12, &spec, &pulses).unwrap();
            let right = controlled_gamma(t_n + 1e-12, &spec, &pulses).unwrap();
            assert_abs_diff_eq!(left, right, epsilon = 1e-9);
        }
    }

    #[test]
    fn rate_flips_sign_at_every_pulse() {
        for s in [0.5, 1.0, 2.5] {
            let spec = zero_t(s);
            let pulses = PulseSequence::periodic_within(0.8, 4.0).unwrap();
            for (idx, &t_n) in pulses.instants().iter().enumerate() {
                let n = idx + 1;
                let after = controlled_gamma_rate_n(n, t_n, &spec, &pulses).unwrap();
                let before = controlled_gamma_rate_n(n - 1, t_n, &spec, &pulses).unwrap();
                assert!(
                    (after + before).abs() <= 1e-10,
                    "s = {s}, pulse {n}: {after} vs {before}"
                );
            }
        }
    }

    #[test]
    fn rate_is_the_derivative_of_controlled_gamma() {
        let spec = zero_t(2.5);
        let pulses = PulseSequence::from_instants(vec![0.5, 1.1]).unwrap();
        let h = 1e-5;
        for t in [0.3, 0.8, 1.6] {
            let fd = (controlled_gamma(t + h, &spec, &pulses).unwrap()
                - controlled_gamma(t - h, &spec, &pulses).unwrap())
                / (2.0 * h);
            let rate = controlled_gamma_rate(t, &spec, &pulses).unwrap();
            assert_abs_diff_eq!(fd, rate, epsilon = 1e-5);
        }
    }

    #[test]
    fn profile_caches_match_direct_evaluation() {
        let spec = zero_t(0.5);
        let pulses = PulseSequence::periodic_within(0.3, 3.0).unwrap();
        let profile = DephasingProfile::pulsed(spec, pulses.clone());
        for t in [0.1, 0.35, 1.0, 2.95, 3.3] {
            assert_abs_diff_eq!(
                profile.big_gamma(t).unwrap(),
                controlled_gamma(t, &spec, &pulses).unwrap(),
                epsilon = 1e-12
            );
        }
        let factor = profile.coherence_factor(1.0).unwrap();
        assert!(factor > 0.0 && factor <= 1.0);
    }

    #[test]
    fn pulse_sequence_validation() {
        assert!(PulseSequence::from_instants(vec![]).is_err());
        assert!(PulseSequence::from_instants(vec![0.0]).is_err());
        assert!(PulseSequence::from_instants(vec![1.0, 0.5]).is_err());
        assert!(PulseSequence::periodic_within(0.0, 5.0).is_err());
        assert!(PulseSequence::periodic_within(6.0, 5.0).is_err());

        let p = PulseSequence::periodic_within(0.3, 25.0).unwrap();
        assert_eq!(p.instants().len(), 83);
        assert_abs_diff_eq!(p.final_pulse(), 24.9, epsilon = 1e-12);
        assert_eq!(p.count_before(0.3), 0);
        assert_eq!(p.count_before(0.3 + 1e-12), 1);
    }

    #[test]
    fn invalid_spectra_are_rejected() {
        assert!(OhmicSpectrum::new(0.0, 1.0, TemperatureRegime::Zero).is_err());
        assert!(OhmicSpectrum::new(1.0, -1.0, TemperatureRegime::Zero).is_err());
        assert!(OhmicSpectrum::new(1.0, 1.0, TemperatureRegime::High { theta_t: 0.0 }).is_err());
        assert!(gamma0(-1.0, &zero_t(1.0)).is_err());
    }

    #[test]
    fn finite_temperature_quadrature_is_sane() {
        // exploratory path: between the zero-T and high-T kernels
        let s = 2.5;
        let t = 2.0;
        let finite = OhmicSpectrum::new(s, 1.0, TemperatureRegime::Finite { theta_t: 10.0 }).unwrap();
        let zero = big_gamma(t, &zero_t(s)).unwrap();
        let high = big_gamma(t, &OhmicSpectrum::high_temperature(s).unwrap()).unwrap();
        let fin = big_gamma(t, &finite).unwrap();
        assert!(fin > zero, "coth kernel adds thermal dephasing");
        assert!(fin < zero + high * 1.05, "bounded by coth(x) <= 1 + 1/x");
    }
}
