//! Exponential deviation bounds derived from an entropy–energy inequality.
//!
//! Once a measure satisfies `Ent(e^{tF}) ≤ A · H(t/2) · E[e^{tF}]` for every
//! 1-Lipschitz observable F (the output of the best-constant machinery in
//! [`crate::functionals`] together with the cost function H from
//! [`crate::convex`]), the classical differential-inequality argument turns
//! the entropy bound into a bound on the Laplace transform itself:
//!
//! ```text
//! E[e^{t(F - E F)}] ≤ exp( A·t · ∫₀ᵗ s⁻² H(s/2) ds ).
//! ```
//!
//! The integrand has no singularity at the origin — H is exactly quadratic
//! on its core, so s⁻²H(s/2) → 1/4 — and this module evaluates the quadratic
//! stretch analytically, leaving quadrature only where H switches to its
//! conjugate branch. Chernoff's inequality then bounds two-sided deviations:
//!
//! ```text
//! P(|F - E F| > λ) ≤ 2·exp( min_{t ≥ 0} G(t) ),
//! G(t) = A·t·∫₀ᵗ s⁻² H(s/2) ds − λ·t.
//! ```
//!
//! G has a single minimum on the half-line; while the minimizer stays inside
//! the quadratic core (λ ≤ A·D) the minimum is exactly −λ²/A, and beyond the
//! threshold the conjugate branch takes over and the bound decays like the
//! tail of e^{-Φ} itself. Product measures keep the same constant A per
//! coordinate, so for an empirical mean of n samples the same machinery runs
//! with A·n and the per-coordinate Lipschitz bound ζ of the averaged
//! observable; [`TailBound::regime_split`] reports where the two regimes
//! meet. A seeded Monte-Carlo driver estimates the actual deviation
//! probabilities so the certified bound can be checked against simulation.

use crate::convex::HFunction;
use crate::error::{Error, Result};
use crate::functionals::TestFunction;
use crate::measure::LogConcaveMeasure;
use crate::numeric::{golden_min, integrate_raw, splitmix64, GlRule};
use rayon::prelude::*;
use serde::Serialize;
use std::cell::RefCell;
use std::fmt;

/// Largest t the minimizer search is allowed to reach before declaring the
/// deviation level outside the certified range.
const T_BRACKET_MAX: f64 = 1e6;

/// The moment-growth integral ∫₀ᵗ s⁻² H(s/2) ds.
///
/// On [0, min(t, 2D)] the cost is exactly (s/2)², so the stretch integrates
/// to min(t, 2D)/4 in closed form; the conjugate branch beyond is handled by
/// adaptive quadrature.
fn growth_integral(hf: &HFunction, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let cut = (2.0 * hf.d_const()).min(t);
    let mut total = cut / 4.0;
    if t > cut {
        let rule = GlRule::new(16);
        let f = |s: f64| -> Result<f64> { Ok(hf.eval(0.5 * s)? / (s * s)) };
        let q = integrate_raw(&f, cut, t, &rule, 4, 4096, 1e-11)?;
        if !q.converged {
            return Err(Error::Quadrature(format!(
                "moment-growth integral did not converge on [{cut}, {t}]"
            )));
        }
        total += q.value;
    }
    Ok(total)
}

/// The Chernoff objective G(t) = A·t·∫₀ᵗ s⁻²H(s/2)ds − λ·t.
///
/// Its minimum over t ≥ 0 is the exponent of the deviation bound at level λ.
pub fn herbst_g(a_const: f64, hf: &HFunction, t: f64, lam: f64) -> Result<f64> {
    if !(a_const.is_finite() && a_const > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "entropy-energy constant must be positive and finite, got {a_const}"
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "moment parameter must be nonnegative and finite, got {t}"
        )));
    }
    if !lam.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "deviation level must be finite, got {lam}"
        )));
    }
    Ok(a_const * t * growth_integral(hf, t)? - lam * t)
}

/// Minimize G over t ≥ 0; returns (t*, G(t*)).
///
/// G(0) = 0 with G'(0) = −λ, and G has a single minimum on the half-line, so
/// a doubling search brackets the upturn and a golden-section pass polishes
/// the minimizer. When the minimizer stays in the quadratic core (λ ≤ A·D)
/// the value agrees with the closed form −λ²/A.
///
/// If G is still decreasing at t = 10⁶ the deviation level is outside the
/// range this machinery can certify and a bracketing error is returned.
pub fn minimize_g(a_const: f64, hf: &HFunction, lam: f64) -> Result<(f64, f64)> {
    if !(lam.is_finite() && lam >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "deviation level must be nonnegative and finite, got {lam}"
        )));
    }
    if lam == 0.0 {
        // The integrand of G is nonnegative, so t = 0 is the exact minimum.
        return Ok((0.0, 0.0));
    }
    // Evaluate G through a fallible closure: golden_min wants plain f64, so
    // park the first failure and surface it afterwards.
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |t: f64| -> f64 {
        match herbst_g(a_const, hf, t, lam) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let mut hi = 1.0;
    let mut g_half = g(0.5);
    let mut g_hi = g(hi);
    while g_hi <= g_half {
        hi *= 2.0;
        if hi > T_BRACKET_MAX {
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            return Err(Error::Bracketing(format!(
                "deviation level {lam} is outside the certified range: the \
                 Chernoff objective is still decreasing at t = {T_BRACKET_MAX:.0e}"
            )));
        }
        g_half = g_hi;
        g_hi = g(hi);
    }
    let (t_star, g_min) = golden_min(&g, 0.0, hi, 1e-12);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((t_star, g_min.min(0.0)))
}

/// The certified Laplace-transform bound exp(A·t·∫₀ᵗ s⁻²H(s/2)ds) for a
/// centered 1-Lipschitz observable.
pub fn laplace_bound(a_const: f64, hf: &HFunction, t: f64) -> Result<f64> {
    Ok(herbst_g(a_const, hf, t, 0.0)?.exp())
}

/// Combine the constants of two factors of a product measure.
///
/// A product of measures satisfying the entropy-energy inequality with
/// constants a1 and a2 satisfies it with max(a1, a2).
pub fn tensorize(a1: f64, a2: f64) -> Result<f64> {
    if !(a1.is_finite() && a1 >= 0.0 && a2.is_finite() && a2 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tensorized constants must be nonnegative and finite, got {a1} and {a2}"
        )));
    }
    Ok(a1.max(a2))
}

/// Which branch of the cost function controls the deviation bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRegime {
    /// The minimizer sits in the quadratic core: bound = 2·exp(−λ²/(A·n·ζ²)).
    Quadratic,
    /// The conjugate branch takes over: the bound decays like the measure's
    /// own tail.
    Tail,
}

impl fmt::Display for BoundRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundRegime::Quadratic => write!(f, "quadratic"),
            BoundRegime::Tail => write!(f, "tail"),
        }
    }
}

/// One evaluated deviation bound.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationBound {
    /// Deviation level the bound was evaluated at.
    pub lam: f64,
    /// The raw bound 2·exp(min G); can exceed 1 for small λ.
    pub raw: f64,
    /// The raw bound capped at 1, usable as a probability.
    pub capped: f64,
    /// Which cost branch the minimizer landed in.
    pub regime: BoundRegime,
    /// Minimizing moment parameter, in the units of the observable.
    pub t_star: f64,
}

/// Deviation-bound evaluator for sums and means of independent coordinates.
///
/// Holds the certified entropy-energy constant A and the cost function H of
/// the underlying one-dimensional measure. For an observable of n
/// independent coordinates whose partial derivatives are bounded by ζ, the
/// product structure multiplies the constant by n and the Lipschitz bound
/// rescales the moment parameter, which is exactly how [`Self::bound`]
/// assembles the exponent.
#[derive(Debug, Clone)]
pub struct TailBound {
    a_const: f64,
    h: HFunction,
    base_split: f64,
}

impl TailBound {
    pub fn new(a_const: f64, h: HFunction) -> Result<Self> {
        if !(a_const.is_finite() && a_const > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "entropy-energy constant must be positive and finite, got {a_const}"
            )));
        }
        let base_split = a_const * h.d_const();
        Ok(TailBound { a_const, h, base_split })
    }

    pub fn a_const(&self) -> f64 {
        self.a_const
    }

    pub fn h(&self) -> &HFunction {
        &self.h
    }

    /// The λ threshold between the quadratic and conjugate regimes for a
    /// single coordinate with Lipschitz bound 1 (A·D).
    pub fn base_split(&self) -> f64 {
        self.base_split
    }

    /// The λ threshold for n coordinates with per-coordinate Lipschitz
    /// bound ζ: A·n·D·ζ. Below it the bound is Gaussian-shaped, above it the
    /// conjugate branch of the cost controls the decay.
    pub fn regime_split(&self, n: usize, zeta: f64) -> f64 {
        self.a_const * n as f64 * self.h.d_const() * zeta
    }

    /// Evaluate the two-sided deviation bound
    /// P(|F − E F| > λ) ≤ 2·exp(min_t G_n(t)) for an observable F of n
    /// independent coordinates with per-coordinate Lipschitz bound ζ.
    ///
    /// Substituting τ = ζ·t shows min_t G_n(t) equals the one-coordinate
    /// minimum with constant A·n at deviation level λ/ζ, which is what is
    /// minimized here.
    pub fn bound(&self, lam: f64, n: usize, zeta: f64) -> Result<DeviationBound> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "deviation bound needs at least one coordinate".into(),
            ));
        }
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "per-coordinate Lipschitz bound must be positive and finite, got {zeta}"
            )));
        }
        if !(lam.is_finite() && lam >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "deviation level must be nonnegative and finite, got {lam}"
            )));
        }
        let (tau_star, g_min) = minimize_g(self.a_const * n as f64, &self.h, lam / zeta)?;
        let raw = 2.0 * g_min.exp();
        let regime = if lam <= self.regime_split(n, zeta) {
            BoundRegime::Quadratic
        } else {
            BoundRegime::Tail
        };
        Ok(DeviationBound {
            lam,
            raw,
            capped: raw.min(1.0),
            regime,
            t_star: tau_star / zeta,
        })
    }
}

/// One row of a Monte-Carlo deviation table.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationRow {
    /// Deviation level.
    pub lam: f64,
    /// Fraction of trials with |empirical mean − E f| > λ.
    pub empirical: f64,
    /// Binomial standard error √(p(1−p)/trials).
    pub stderr: f64,
}

/// Seeded Monte-Carlo estimate of empirical-mean deviation probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationTable {
    /// Samples per trial (the n of the empirical mean).
    pub n: usize,
    /// Number of independent trials behind each row.
    pub trials: usize,
    /// Master seed; per-trial seeds are derived from it by counter mixing.
    pub seed: u64,
    /// The exact mean E f the deviations are measured from.
    pub mu: f64,
    /// Description of the observable.
    pub observable: String,
    pub rows: Vec<DeviationRow>,
}

/// Estimate P(|n⁻¹Σf(X_k) − E f| > λ) over seeded independent trials.
///
/// Each trial draws n samples with its own counter-derived seed, so the
/// table is identical for identical (seed, n, trials) regardless of how the
/// trials are scheduled across threads. Requires at least 100 trials —
/// below that the binomial error column is meaningless.
pub fn empirical_deviation(
    m: &LogConcaveMeasure,
    f: &TestFunction,
    n: usize,
    lam_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DeviationTable> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "at least 100 trials are needed for a meaningful estimate, got {trials}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "empirical mean needs at least one sample per trial".into(),
        ));
    }
    if lam_grid.is_empty() || lam_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidParameter(
            "deviation levels must be a non-empty list of nonnegative reals".into(),
        ));
    }
    let mu = m.expect_checked(|x| Ok(f.value(x)), &f.breakpoints(), None)?;
    let deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let trial_seed = splitmix64(seed, k as u64);
            let xs = m.sample_stream(trial_seed, n)?;
            let mean = xs.iter().map(|&x| f.value(x)).sum::<f64>() / n as f64;
            Ok((mean - mu).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = lam_grid
        .iter()
        .map(|&lam| {
            let hits = deviations.iter().filter(|&&d| d > lam).count();
            let p = hits as f64 / trials as f64;
            DeviationRow { lam, empirical: p, stderr: (p * (1.0 - p) / trials as f64).sqrt() }
        })
        .collect();
    Ok(DeviationTable { n, trials, seed, mu, observable: f.describe(), rows })
}
