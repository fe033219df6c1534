//! Legendre conjugation and the derived cost/weight functions.
//!
//! For an even convex potential Φ the conjugate Φ*(y) = sup_x {xy - Φ(x)}
//! is evaluated by inverting Φ' with bracketed bisection (leftmost root on
//! flat segments, log-space bisection so tiny roots keep relative
//! accuracy). On top of the conjugate sit:
//!
//! * the cost function H: quadratic inside [-D, D], Φ*(B·x) outside, with
//!   D chosen so the two branches meet continuously (Φ*(B·D) = D²);
//! * the tail weight h(x) = x²/Φ(x) past the hypothesis threshold M;
//! * the comparison functions τ, τ₂ (conjugate growth transported through
//!   h⁻¹) and ψ, K (squared conjugate inverse of λ·log) used by the
//!   verification lemmas.
//!
//! The engine is immutable and does no caching, so shared use across
//! threads is safe and deterministic.

use crate::error::{Error, Result};
use crate::numeric::{self, log_grid};
use crate::potential::{rise_point, Potential};

const X_LOG_FLOOR: f64 = 1e-300;

/// Bisection-backed evaluator for Φ* and (Φ')⁻¹.
#[derive(Debug, Clone)]
pub struct LegendreEngine {
    pot: Potential,
    bracket_growth: f64,
    rel_tol: f64,
}

impl LegendreEngine {
    pub fn new(pot: &Potential) -> Self {
        LegendreEngine { pot: pot.clone(), bracket_growth: 2.0, rel_tol: 1e-12 }
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    /// Leftmost x >= 0 with Φ'(x) >= y. Returns 0 when y is at or below the
    /// infimum of Φ' on (0, ∞) (subgradient convention at the kink of e.g.
    /// the absolute value).
    pub fn invert_derivative(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "derivative inversion needs finite y >= 0, got {y}"
            )));
        }
        if y == 0.0 || self.pot.deriv(X_LOG_FLOOR) >= y {
            return Ok(0.0);
        }
        let mut hi = 1.0f64;
        let mut guard = 0;
        while self.pot.deriv(hi) < y {
            hi *= self.bracket_growth;
            guard += 1;
            if hi > 1e300 || guard > 2000 {
                return Err(Error::Bracketing(format!(
                    "derivative never reaches {y:.6e}; conjugate is infinite there"
                )));
            }
        }
        // Bisect in log space: keeps relative accuracy for roots at any
        // scale, and lands on the leftmost point of flat segments.
        let mut lo_t = X_LOG_FLOOR.ln();
        let mut hi_t = hi.ln();
        for _ in 0..200 {
            if hi_t - lo_t <= self.rel_tol {
                break;
            }
            let mid = 0.5 * (lo_t + hi_t);
            if self.pot.deriv(mid.exp()) >= y {
                hi_t = mid;
            } else {
                lo_t = mid;
            }
        }
        Ok(hi_t.exp())
    }

    /// Φ*(y) = sup_x {x|y| - Φ(x)}, evaluated at the derivative inverse.
    /// Even in y. The supremum form makes the result a certified lower
    /// bound; the envelope theorem makes its error second order in the
    /// inversion tolerance.
    pub fn legendre(&self, y: f64) -> Result<f64> {
        let a = y.abs();
        if !a.is_finite() {
            return Err(Error::InvalidParameter("conjugate argument must be finite".into()));
        }
        let x = self.invert_derivative(a)?;
        let at_zero = -self.pot.value(0.0);
        Ok((a * x - self.pot.value(x)).max(at_zero))
    }

    /// Smallest y >= 0 with Φ*(y) >= z. Errors when z < Φ*(0) (no preimage).
    pub fn legendre_inverse(&self, z: f64) -> Result<f64> {
        let at_zero = self.legendre(0.0)?;
        if !z.is_finite() {
            return Err(Error::InvalidParameter("conjugate inverse needs finite z".into()));
        }
        if z < at_zero - 1e-12 * (1.0 + at_zero.abs()) {
            return Err(Error::Undefined(format!(
                "conjugate inverse below its range: z = {z:.6e} < Phi*(0) = {at_zero:.6e}"
            )));
        }
        if z <= at_zero {
            return Ok(0.0);
        }
        let mut hi = 1.0f64;
        let mut guard = 0;
        while self.legendre(hi)? < z {
            hi *= self.bracket_growth;
            guard += 1;
            if hi > 1e300 || guard > 2000 {
                return Err(Error::Bracketing(format!(
                    "conjugate never reaches {z:.6e}"
                )));
            }
        }
        if self.legendre(X_LOG_FLOOR)? >= z {
            return Ok(0.0);
        }
        let mut lo_t = X_LOG_FLOOR.ln();
        let mut hi_t = hi.ln();
        for _ in 0..200 {
            if hi_t - lo_t <= self.rel_tol {
                break;
            }
            let mid = 0.5 * (lo_t + hi_t);
            if self.legendre(mid.exp())? >= z {
                hi_t = mid;
            } else {
                lo_t = mid;
            }
        }
        Ok(hi_t.exp())
    }

    /// Build the mixed quadratic/conjugate cost with slope parameter B.
    ///
    /// The matching radius D solves Φ*(B·D) = D². When the two branches
    /// coincide identically (Gaussian Φ = x² with B = 2) every D works and
    /// the result is flagged degenerate with H = x² globally; when no
    /// positive crossing exists, D minimises the mismatch and the result is
    /// flagged discontinuous.
    pub fn build_h(&self, b_const: f64) -> Result<HFunction> {
        if !(b_const > 0.0 && b_const.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "slope parameter B must be positive, got {b_const}"
            )));
        }
        let grid = log_grid(1e-8, 1e9, 2048);
        let gap = |d: f64| -> Result<f64> { Ok(self.legendre(b_const * d)? - d * d) };
        let mut vals = Vec::with_capacity(grid.len());
        for &d in &grid {
            vals.push(gap(d)?);
        }
        let degenerate = grid
            .iter()
            .zip(&vals)
            .all(|(&d, &g)| g.abs() <= 1e-9 * (1.0 + d * d));
        if degenerate {
            return Ok(HFunction {
                b_const,
                d_const: 1.0,
                continuity: HContinuity::Degenerate,
                engine: Some(self.clone()),
            });
        }
        let mut crossing = None;
        for k in 0..grid.len() - 1 {
            if vals[k] == 0.0 {
                crossing = Some(grid[k]);
                break;
            }
            if vals[k] * vals[k + 1] < 0.0 {
                let (mut lo, mut hi) = (grid[k], grid[k + 1]);
                let sign_lo = vals[k].signum();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if gap(mid)?.signum() == sign_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-13 * hi {
                        break;
                    }
                }
                crossing = Some(0.5 * (lo + hi));
                break;
            }
        }
        match crossing {
            Some(d) => Ok(HFunction {
                b_const,
                d_const: d,
                continuity: HContinuity::Continuous,
                engine: Some(self.clone()),
            }),
            None => {
                let (mut best_d, mut best) = (grid[0], f64::INFINITY);
                for (&d, &g) in grid.iter().zip(&vals) {
                    let score = g.abs();
                    if score < best {
                        best = score;
                        best_d = d;
                    }
                }
                Ok(HFunction {
                    b_const,
                    d_const: best_d,
                    continuity: HContinuity::Discontinuous,
                    engine: Some(self.clone()),
                })
            }
        }
    }
}

/// How the two branches of H meet at the matching radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum HContinuity {
    /// Φ*(B·D) = D² holds at the computed D.
    Continuous,
    /// Both branches agree identically; D is arbitrary.
    Degenerate,
    /// No positive matching radius exists; D minimises the mismatch.
    Discontinuous,
}

/// Even cost function: x² inside [-D, D] (boundary included), Φ*(B·x)
/// outside. `quadratic()` builds the pure x² variant (D = ∞).
#[derive(Debug, Clone)]
pub struct HFunction {
    b_const: f64,
    d_const: f64,
    continuity: HContinuity,
    engine: Option<LegendreEngine>,
}

impl HFunction {
    /// Pure quadratic cost H(x) = x², the Gaussian limit of the family.
    pub fn quadratic() -> Self {
        HFunction {
            b_const: f64::NAN,
            d_const: f64::INFINITY,
            continuity: HContinuity::Degenerate,
            engine: None,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let a = x.abs();
        if a <= self.d_const || self.continuity == HContinuity::Degenerate {
            return Ok(a * a);
        }
        match &self.engine {
            Some(e) => e.legendre(self.b_const * a),
            None => Ok(a * a),
        }
    }

    pub fn b_const(&self) -> f64 {
        self.b_const
    }

    pub fn d_const(&self) -> f64 {
        self.d_const
    }

    pub fn continuity(&self) -> HContinuity {
        self.continuity
    }

    pub fn describe(&self) -> String {
        if self.engine.is_none() {
            "quadratic".into()
        } else {
            format!(
                "mixed(B={}, D={:.9e}, {:?})",
                self.b_const, self.d_const, self.continuity
            )
        }
    }
}

/// Tail weight h: 1 on (-M, M), x²/Φ(x) beyond (the jump at |x| = M is
/// kept as defined). Requires Φ(M) > 0.
pub fn h_weight(p: &Potential, big_m: f64, x: f64) -> Result<f64> {
    if !(big_m > 0.0) || !(p.value(big_m) > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "weight needs M > 0 with Phi(M) > 0, got M = {big_m}"
        )));
    }
    let a = x.abs();
    if a < big_m {
        Ok(1.0)
    } else {
        let v = p.value(a);
        if !(v > 0.0) {
            return Err(Error::Undefined(format!("Phi({a}) = {v} not positive in weight tail")));
        }
        Ok(a * a / v)
    }
}

/// Inverse of the tail weight on [h(M), ∞): leftmost z >= M with
/// z²/Φ(z) >= u. Under the growth hypothesis h is strictly increasing
/// there, so this is the genuine inverse.
pub fn h_inverse(p: &Potential, big_m: f64, u: f64) -> Result<f64> {
    let m = h_weight(p, big_m, big_m)?;
    if !(u >= m * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "weight inverse needs u >= h(M) = {m:.6e}, got {u:.6e}"
        )));
    }
    let h = |z: f64| z * z / p.value(z);
    let mut hi = big_m.max(1e-12);
    let mut guard = 0;
    while h(hi) < u {
        hi *= 2.0;
        guard += 1;
        if hi > 1e300 || guard > 2000 {
            return Err(Error::Bracketing(format!("weight never reaches {u:.6e}")));
        }
    }
    Ok(numeric::bisect_leftmost(h, u, big_m, hi, 1e-13))
}

/// Comparison function τ: linear ramp x·Φ(M)/(8·C_h·m) up to m = h(M),
/// then Φ(h⁻¹(x))/(8·C_h). Continuous at m by construction.
pub fn tau(p: &Potential, big_m: f64, c_h: f64, x: f64) -> Result<f64> {
    if !(c_h > 0.0 && c_h.is_finite()) {
        return Err(Error::InvalidParameter(format!("C_h must be positive, got {c_h}")));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau needs x >= 0, got {x}")));
    }
    let m = h_weight(p, big_m, big_m)?;
    if x <= m {
        Ok(x * p.value(big_m) / (8.0 * c_h * m))
    } else {
        Ok(p.value(h_inverse(p, big_m, x)?) / (8.0 * c_h))
    }
}

/// Entropy-scaled variant of τ with factor (1-ε)/(2λ) in place of 1/(8C_h).
pub fn tau2(p: &Potential, big_m: f64, lam: f64, eps: f64, x: f64) -> Result<f64> {
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lam}")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2], got {eps}")));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau2 needs x >= 0, got {x}")));
    }
    let m = h_weight(p, big_m, big_m)?;
    let factor = (1.0 - eps) / (2.0 * lam);
    if x <= m {
        Ok(x * p.value(big_m) * factor / m)
    } else {
        Ok(p.value(h_inverse(p, big_m, x)?) * factor)
    }
}

/// ψ(x) = [(Φ*)⁻¹(λ·ln x)]², defined where λ·ln x >= Φ*(0).
pub fn psi(e: &LegendreEngine, lam: f64, x: f64) -> Result<f64> {
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lam}")));
    }
    if !(x > 0.0) {
        return Err(Error::Undefined(format!("psi needs x > 0, got {x}")));
    }
    let z = lam * x.ln();
    let at_zero = e.legendre(0.0)?;
    if z < at_zero - 1e-12 * (1.0 + at_zero.abs()) {
        return Err(Error::Undefined(format!(
            "psi undefined at x = {x}: lambda*ln x = {z:.6e} below Phi*(0) = {at_zero:.6e}"
        )));
    }
    let y = e.legendre_inverse(z.max(at_zero))?;
    Ok(y * y)
}

/// Smallest scan point beyond which ψ is defined, increasing and concave
/// with ψ >= 1. The ψ = 1 crossing is polished by bisection inside its
/// bracketing cell; the shape conditions are certified on the grid.
pub fn find_a_lambda(e: &LegendreEngine, lam: f64) -> Result<f64> {
    let p = e.potential();
    let x_h = rise_point(p, 0.0, 40.0)?;
    let z_hi = p.deriv(x_h).abs().max(1e-6);
    let u_hi = e.legendre(z_hi)?.max(e.legendre(0.0)? + 1.0);
    let lo = (e.legendre(0.0)? / lam).exp() * (1.0 + 1e-9);
    let hi = (u_hi / lam).exp();
    if !(hi > lo) {
        return Err(Error::Undefined("psi domain is empty on the scan range".into()));
    }
    let grid = log_grid(lo, hi, 2048);
    let mut vals = Vec::with_capacity(grid.len());
    for &x in &grid {
        vals.push(psi(e, lam, x)?);
    }
    let n = grid.len();
    // Suffix scan: valid_from is the first index from which every forward
    // difference is nonnegative and every second divided difference is
    // nonpositive (within 1e-12 relative slack).
    let mut valid_from = 0usize;
    for i in 0..n - 1 {
        let scale = 1.0 + vals[i].abs().max(vals[i + 1].abs());
        if vals[i + 1] - vals[i] < -1e-12 * scale {
            valid_from = i + 1;
        }
    }
    for i in 1..n - 1 {
        let dd = numeric::second_divided(
            grid[i - 1],
            vals[i - 1],
            grid[i],
            vals[i],
            grid[i + 1],
            vals[i + 1],
        );
        if dd > 1e-12 * (1.0 + vals[i].abs()) {
            valid_from = valid_from.max(i + 1);
        }
    }
    // First grid index with psi >= 1, then a bisection polish in its cell.
    let mut level = None;
    for i in 0..n {
        if vals[i] >= 1.0 {
            level = Some(i);
            break;
        }
    }
    let level_x = match level {
        None => {
            return Err(Error::Undefined(
                "psi stays below 1 on the scan range; no admissible threshold".into(),
            ))
        }
        Some(0) => grid[0],
        Some(i) => numeric::bisect_leftmost(
            |x| psi(e, lam, x).unwrap_or(f64::NEG_INFINITY),
            1.0,
            grid[i - 1],
            grid[i],
            1e-13,
        ),
    };
    if valid_from >= n - 2 {
        return Err(Error::Undefined(
            "psi never settles into an increasing concave tail on the scan range".into(),
        ));
    }
    Ok(level_x.max(grid[valid_from]))
}

/// K(x) = sqrt(ln(x²)/ψ(x²)), defined for x² >= A_λ.
pub fn k_weight(e: &LegendreEngine, lam: f64, a_lambda: f64, x: f64) -> Result<f64> {
    let sq = x * x;
    if !(sq >= a_lambda * (1.0 - 1e-12)) {
        return Err(Error::Undefined(format!(
            "K needs x^2 >= A_lambda = {a_lambda:.6e}, got x = {x}"
        )));
    }
    let num = sq.ln();
    let den = psi(e, lam, sq)?;
    if !(den > 0.0) {
        return Err(Error::Undefined(format!("psi({sq}) = {den} not positive under K")));
    }
    Ok((num / den).sqrt())
}
