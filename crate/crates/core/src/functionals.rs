//! Entropy, variance and Dirichlet-type energies of test functions.
//!
//! The central quantities are, for a probability measure μ and a locally
//! Lipschitz f,
//!
//! * Ent(f²) = ∫ f² log f² dμ - (∫ f² dμ) log (∫ f² dμ),
//! * the classical energy ∫ f'² dμ,
//! * the cost energy ∫ f² H(f'/f) dμ with the conventions 0·H(0/0) = 0
//!   where f and f' both vanish, an error where f vanishes but f' does
//!   not, and +∞ when the (nonnegative) integrand diverges,
//! * the restricted energy over the super-level region {f² >= κ ∫ f² dμ},
//!   which tames members whose full cost energy diverges.
//!
//! Best-constant scans maximise entropy/energy ratios over a family of
//! test functions; workers run in parallel but results are collected in
//! family order, so reports are independent of thread count.

use rayon::prelude::*;

use crate::convex::HFunction;
use crate::error::{Error, Result};
use crate::measure::LogConcaveMeasure;
use crate::numeric::{self, lin_grid};

/// Panel cap for energy integrals: enough to certify convergent members,
/// small enough to detect divergent ones quickly.
const ENERGY_MAX_PANELS: usize = 2048;

/// Shapes for first-order perturbations f = 1 + ε·g.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum GShape {
    Linear,
    Quadratic,
    Cosine { freq: f64 },
}

impl GShape {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            GShape::Linear => x,
            GShape::Quadratic => x * x,
            GShape::Cosine { freq } => (freq * x).cos(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            GShape::Linear => 1.0,
            GShape::Quadratic => 2.0 * x,
            GShape::Cosine { freq } => -freq * (freq * x).sin(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GShape::Linear => "x".into(),
            GShape::Quadratic => "x^2".into(),
            GShape::Cosine { freq } => format!("cos({freq}x)"),
        }
    }
}

/// The scan family: each member evaluates pointwise with an almost-
/// everywhere derivative (one-sided at kinks) and declares its kinks so
/// integrals can split there.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// f(x) = exp(t·x/2), so f² is the exponential tilt exp(t·x).
    ExpTilt { t: f64 },
    /// Piecewise linear through the knots, constant beyond the ends.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// Smooth compactly supported bump exp(-1/(1-u²)), u = (x-c)/w.
    Bump { center: f64, width: f64 },
    /// Hinge (x - c)_+ : vanishes left of c, slope one beyond.
    Hinge { center: f64 },
    /// f = 1 + ε·g for a fixed shape g; linearization regime for small ε.
    Perturbation { eps: f64, shape: GShape },
    /// Constant function (degenerate: zero entropy and energy).
    Const { c: f64 },
}

impl TestFunction {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            TestFunction::ExpTilt { t } => (0.5 * t * x).exp(),
            TestFunction::PiecewiseLinear { knots } => {
                let n = knots.len();
                if x <= knots[0].0 {
                    return knots[0].1;
                }
                if x >= knots[n - 1].0 {
                    return knots[n - 1].1;
                }
                let mut i = 0;
                while i + 2 < n && knots[i + 1].0 <= x {
                    i += 1;
                }
                let (x0, y0) = knots[i];
                let (x1, y1) = knots[i + 1];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            TestFunction::Bump { center, width } => {
                let u = (x - center) / width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - u * u)).exp()
                }
            }
            TestFunction::Hinge { center } => (x - center).max(0.0),
            TestFunction::Perturbation { eps, shape } => 1.0 + eps * shape.value(x),
            TestFunction::Const { c } => *c,
        }
    }

    /// Almost-everywhere derivative; at a kink the right-hand slope.
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            TestFunction::ExpTilt { t } => 0.5 * t * (0.5 * t * x).exp(),
            TestFunction::PiecewiseLinear { knots } => {
                let n = knots.len();
                if x < knots[0].0 || x >= knots[n - 1].0 {
                    return 0.0;
                }
                let mut i = 0;
                while i + 2 < n && knots[i + 1].0 <= x {
                    i += 1;
                }
                let (x0, y0) = knots[i];
                let (x1, y1) = knots[i + 1];
                (y1 - y0) / (x1 - x0)
            }
            TestFunction::Bump { center, width } => {
                let u = (x - center) / width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let s = 1.0 - u * u;
                    self.value(x) * (-2.0 * u) / (width * s * s)
                }
            }
            TestFunction::Hinge { center } => {
                if x > *center {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Perturbation { eps, shape } => eps * shape.deriv(x),
            TestFunction::Const { .. } => 0.0,
        }
    }

    /// Kink locations, for splitting quadrature panels.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TestFunction::ExpTilt { .. } | TestFunction::Const { .. } => vec![],
            TestFunction::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            TestFunction::Bump { center, width } => vec![center - width, center + width],
            TestFunction::Hinge { center } => vec![*center],
            TestFunction::Perturbation { .. } => vec![],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TestFunction::ExpTilt { t } => format!("tilt(t={t})"),
            TestFunction::PiecewiseLinear { knots } => format!("pwl({} knots)", knots.len()),
            TestFunction::Bump { center, width } => format!("bump(c={center}, w={width})"),
            TestFunction::Hinge { center } => format!("hinge(c={center})"),
            TestFunction::Perturbation { eps, shape } => {
                format!("1+{eps}*{}", shape.describe())
            }
            TestFunction::Const { c } => format!("const({c})"),
        }
    }
}

/// Ent_μ(f²). Errors when f vanishes μ-almost everywhere.
pub fn entropy(m: &LogConcaveMeasure, f: &TestFunction) -> Result<f64> {
    let breaks = f.breakpoints();
    let mass = m.expect_checked(|x| Ok(square(f.value(x))), &breaks, None)?;
    if !(mass > 1e-300) {
        return Err(Error::Undefined(
            "entropy of a test function with vanishing squared mass".into(),
        ));
    }
    let plogp = m.expect_checked(
        |x| {
            let u = square(f.value(x));
            Ok(if u > 0.0 { u * u.ln() } else { 0.0 })
        },
        &breaks,
        None,
    )?;
    Ok(plogp - mass * mass.ln())
}

/// Var_μ(f) = ∫ f² dμ - (∫ f dμ)².
pub fn variance(m: &LogConcaveMeasure, f: &TestFunction) -> Result<f64> {
    let breaks = f.breakpoints();
    let mean = m.expect_checked(|x| Ok(f.value(x)), &breaks, None)?;
    let second = m.expect_checked(|x| Ok(square(f.value(x))), &breaks, None)?;
    Ok(second - mean * mean)
}

/// Classical energy ∫ f'² dμ.
pub fn dirichlet_classic(m: &LogConcaveMeasure, f: &TestFunction) -> Result<f64> {
    m.expect_checked(|x| Ok(square(f.deriv(x))), &f.breakpoints(), None)
}

fn square(v: f64) -> f64 {
    v * v
}

/// Pointwise integrand f²·H(f'/f) with the vanishing conventions:
/// 0 where f and f' both vanish, an error where f vanishes alone.
pub fn cost_density(f: &TestFunction, h: &HFunction, x: f64) -> Result<f64> {
    let v = f.value(x);
    let d = f.deriv(x);
    if v == 0.0 {
        if d == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Undefined(format!(
            "cost energy undefined: f({x}) = 0 with f'({x}) = {d}"
        )));
    }
    let cost = h.eval(d / v)?;
    Ok(v * v * cost)
}

/// Locations in (a, b) where |f'/f| crosses the matching radius of H.
/// The cost integrand has a derivative kink there, so panels must split
/// at these points or uniform doubling stalls short of its target.
fn ratio_kinks(f: &TestFunction, h: &HFunction, a: f64, b: f64, base: &[f64]) -> Vec<f64> {
    let d = h.d_const();
    if !d.is_finite() || !(b > a) {
        return vec![];
    }
    let s = |x: f64| {
        let v = f.value(x);
        if v == 0.0 {
            f64::INFINITY
        } else {
            (f.deriv(x) / v).abs() - d
        }
    };
    let mut grid: Vec<f64> = lin_grid(a, b, 513);
    grid.extend(base.iter().copied().filter(|t| *t > a && *t < b));
    grid.sort_by(|p, q| p.partial_cmp(q).unwrap());
    grid.dedup();
    let mut kinks = Vec::new();
    for w in grid.windows(2) {
        let sa = s(w[0]) >= 0.0;
        let sb = s(w[1]) >= 0.0;
        if sa != sb {
            let (mut lo, mut hi) = (w[0], w[1]);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (s(mid) >= 0.0) == sa {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            kinks.push(0.5 * (lo + hi));
        }
    }
    kinks
}

/// Cut set for cost-energy quadrature: the function's own kinks, the
/// density kink at 0, the interval ends, and the H branch crossings.
fn cost_cuts(f: &TestFunction, h: &HFunction, a: f64, b: f64) -> Vec<f64> {
    let mut base = vec![0.0];
    base.extend(f.breakpoints());
    base.retain(|t| *t > a && *t < b);
    let mut cuts = ratio_kinks(f, h, a, b, &base);
    cuts.extend(base);
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    cuts
}

/// ∫ f² H(f'/f) dμ. Returns +∞ when the (nonnegative) integrand refuses
/// to converge under panel doubling — the divergent-member signal.
pub fn dirichlet_h(m: &LogConcaveMeasure, f: &TestFunction, h: &HFunction) -> Result<f64> {
    let cuts = cost_cuts(f, h, -m.x_max(), m.x_max());
    let rule = numeric::GlRule::new(m.spec().order);
    let g = |x: f64| -> Result<f64> { Ok(cost_density(f, h, x)? * m.density(x)) };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let q = numeric::integrate_raw(&g, w[0], w[1], &rule, 16, ENERGY_MAX_PANELS, 1e-8)?;
        if !q.converged {
            if q.value >= 0.0 && q.value >= q.previous - 1e-12 * (1.0 + q.value.abs()) {
                return Ok(f64::INFINITY);
            }
            return Err(Error::Quadrature(format!(
                "cost energy did not converge on [{}, {}] without diverging upward",
                w[0], w[1]
            )));
        }
        total += q.value;
    }
    Ok(total)
}

/// Restricted cost energy over the super-level region {f² >= κ·∫f² dμ},
/// returned together with the region's intervals. Region boundaries are
/// located by a sign scan on a 4097-point grid refined by bisection.
pub fn dirichlet_h_restricted(
    m: &LogConcaveMeasure,
    f: &TestFunction,
    h: &HFunction,
    kappa: f64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "restriction level must be positive, got {kappa}"
        )));
    }
    let mass = m.expect_checked(|x| Ok(square(f.value(x))), &f.breakpoints(), None)?;
    if !(mass > 1e-300) {
        return Err(Error::Undefined("restricted energy of a vanishing function".into()));
    }
    let level = kappa * mass;
    let s = |x: f64| square(f.value(x)) - level;
    let grid = lin_grid(-m.x_max(), m.x_max(), 4097);
    let mut region: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    let refine = |lo: f64, hi: f64| -> f64 {
        // Leftmost sign change of s inside [lo, hi].
        let (mut a, mut b) = (lo, hi);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if (s(mid) >= 0.0) == (s(lo) >= 0.0) {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 1e-12 * (1.0 + b.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    };
    for w in grid.windows(2) {
        let inside_now = s(w[0]) >= 0.0;
        let inside_next = s(w[1]) >= 0.0;
        if open.is_none() && inside_now {
            open = Some(w[0]);
        }
        if inside_now != inside_next {
            let edge = refine(w[0], w[1]);
            match open.take() {
                Some(start) if !inside_next => region.push((start, edge)),
                None if inside_next => open = Some(edge),
                other => open = other,
            }
        }
    }
    if let Some(start) = open {
        region.push((start, m.x_max()));
    }
    let rule = numeric::GlRule::new(m.spec().order);
    let g = |x: f64| -> Result<f64> { Ok(cost_density(f, h, x)? * m.density(x)) };
    let mut total = 0.0;
    for &(a, b) in &region {
        let breaks = cost_cuts(f, h, a, b);
        let q =
            numeric::integrate_pieces(&g, a, b, &breaks, &rule, 16, ENERGY_MAX_PANELS, 1e-8)?;
        total += q.value;
    }
    Ok((total, region))
}

/// Duality defect Ent(f²) + (∫f²dμ)·log ∫e^g dμ - ∫ f² g dμ, nonnegative
/// for every bounded g and zero exactly at g = log(f²/∫f²).
pub fn dual_entropy_gap<G: Fn(f64) -> f64>(
    m: &LogConcaveMeasure,
    f: &TestFunction,
    g: G,
    g_breaks: &[f64],
) -> Result<f64> {
    let mut breaks = f.breakpoints();
    breaks.extend_from_slice(g_breaks);
    let ent = entropy(m, f)?;
    let mass = m.expect_checked(|x| Ok(square(f.value(x))), &breaks, None)?;
    let exp_g = m.expect_checked(|x| Ok(g(x).exp()), &breaks, None)?;
    if !(exp_g > 0.0 && exp_g.is_finite()) {
        return Err(Error::NonIntegrable(format!("∫e^g came out as {exp_g}")));
    }
    let pairing = m.expect_checked(|x| Ok(square(f.value(x)) * g(x)), &breaks, None)?;
    Ok(ent + mass * exp_g.ln() - pairing)
}

/// One row of a best-constant scan.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MemberScore {
    pub label: String,
    pub entropy: f64,
    pub variance: f64,
    pub energy: f64,
    pub score: f64,
}

/// Outcome of a best-constant scan over a test-function family.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BestConstantReport {
    pub mode: String,
    pub estimate: f64,
    pub members: Vec<MemberScore>,
    pub counterexample: Option<String>,
}

/// Largest Ent(f²)/∫f²H(f'/f)dμ over the family: a certified lower bound
/// for the best constant of the entropy–energy inequality. Members with
/// divergent energy score zero; a member with positive entropy and zero
/// energy disproves the inequality and is reported as a counterexample.
pub fn estimate_lsi_constant(
    m: &LogConcaveMeasure,
    h: &HFunction,
    family: &[TestFunction],
) -> Result<BestConstantReport> {
    let members: Vec<MemberScore> = family
        .par_iter()
        .map(|f| -> Result<MemberScore> {
            let ent = entropy(m, f).unwrap_or(0.0);
            let var = variance(m, f)?;
            let energy = dirichlet_h(m, f, h)?;
            let score = if energy.is_infinite() || ent <= 0.0 {
                0.0
            } else if energy <= 1e-300 {
                if ent > 1e-9 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                ent / energy
            };
            Ok(MemberScore { label: f.describe(), entropy: ent, variance: var, energy, score })
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = members.iter().fold(0.0f64, |acc, s| acc.max(s.score));
    let counterexample = members.iter().find(|s| s.score.is_infinite()).map(|s| {
        format!(
            "{} has entropy {:.6e} with zero energy: no finite constant works",
            s.label, s.entropy
        )
    });
    Ok(BestConstantReport {
        mode: "entropy/energy".into(),
        estimate,
        members,
        counterexample,
    })
}

/// For fixed leading constant `a_fixed` and restriction level κ, the
/// smallest admissible residual constant: the largest
/// (Ent(f²) - a·Var f)/restricted-energy over the family. A member whose
/// excess entropy is positive while the restricted energy vanishes is
/// reported as a counterexample.
pub fn estimate_residual_constant(
    m: &LogConcaveMeasure,
    h: &HFunction,
    family: &[TestFunction],
    a_fixed: f64,
    kappa: f64,
) -> Result<BestConstantReport> {
    if !(a_fixed >= 0.0 && a_fixed.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "leading constant must be finite and nonnegative, got {a_fixed}"
        )));
    }
    let members: Vec<MemberScore> = family
        .par_iter()
        .map(|f| -> Result<MemberScore> {
            let ent = entropy(m, f).unwrap_or(0.0);
            let var = variance(m, f)?;
            let (energy, _region) = dirichlet_h_restricted(m, f, h, kappa)?;
            let excess = ent - a_fixed * var;
            let score = if excess <= 1e-12 * (1.0 + ent.abs()) {
                0.0
            } else if energy <= 1e-300 {
                f64::INFINITY
            } else if energy.is_infinite() {
                0.0
            } else {
                excess / energy
            };
            Ok(MemberScore { label: f.describe(), entropy: ent, variance: var, energy, score })
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = members.iter().fold(0.0f64, |acc, s| acc.max(s.score));
    let counterexample = members.iter().find(|s| s.score.is_infinite()).map(|s| {
        format!(
            "{} has excess entropy with empty or zero restricted energy at level {kappa}",
            s.label
        )
    });
    Ok(BestConstantReport {
        mode: format!("(entropy - {a_fixed}*variance)/restricted-energy(kappa={kappa})"),
        estimate,
        members,
        counterexample,
    })
}

/// Standard scan family scaled to the measure's support: exponential
/// tilts, bumps, hinges and small perturbations (48 members).
pub fn default_family(x_scale: f64) -> Vec<TestFunction> {
    let mut family = Vec::new();
    for k in 0..12 {
        let t = 0.05 * (2.5f64 / 0.05).powf(k as f64 / 11.0);
        family.push(TestFunction::ExpTilt { t });
        family.push(TestFunction::ExpTilt { t: -t });
    }
    let s = x_scale.max(1.0);
    for ci in 0..5 {
        let center = s * 0.5 * ci as f64 / 4.0;
        for wi in 0..3 {
            let width = s / 16.0 * 2f64.powi(wi);
            family.push(TestFunction::Bump { center, width });
        }
    }
    for frac in [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 3.0 / 8.0, 1.0 / 2.0] {
        family.push(TestFunction::Hinge { center: s * frac });
    }
    family.push(TestFunction::Perturbation { eps: 1e-3, shape: GShape::Linear });
    family.push(TestFunction::Perturbation { eps: 1e-3, shape: GShape::Quadratic });
    family.push(TestFunction::Perturbation { eps: 1e-3, shape: GShape::Cosine { freq: 0.5 } });
    family.push(TestFunction::Perturbation { eps: 1e-3, shape: GShape::Cosine { freq: 1.0 } });
    family
}

/// Two-variable test functions over a product measure.
#[derive(Debug, Clone)]
pub enum TwoVarTestFunction {
    /// f(x, y) = f₁(x)·f₂(y).
    Product(TestFunction, TestFunction),
    /// f(x, y) = f₁(x) + f₂(y).
    Sum(TestFunction, TestFunction),
}

impl TwoVarTestFunction {
    pub fn describe(&self) -> String {
        match self {
            TwoVarTestFunction::Product(a, b) => {
                format!("({}) * ({})", a.describe(), b.describe())
            }
            TwoVarTestFunction::Sum(a, b) => format!("({}) + ({})", a.describe(), b.describe()),
        }
    }
}

/// Ent over the product measure. Product members use the exact splitting
/// Ent(u⊗v) = E[u]·Ent(v) + E[v]·Ent(u); sums use iterated quadrature.
pub fn entropy_2d(
    mx: &LogConcaveMeasure,
    my: &LogConcaveMeasure,
    f: &TwoVarTestFunction,
) -> Result<f64> {
    match f {
        TwoVarTestFunction::Product(fa, fb) => {
            let ma = mx.expect_checked(|x| Ok(square(fa.value(x))), &fa.breakpoints(), None)?;
            let mb = my.expect_checked(|y| Ok(square(fb.value(y))), &fb.breakpoints(), None)?;
            Ok(ma * entropy(my, fb)? + mb * entropy(mx, fa)?)
        }
        TwoVarTestFunction::Sum(fa, fb) => {
            let value = |x: f64, y: f64| fa.value(x) + fb.value(y);
            let mass = iterated(mx, my, fa, fb, |x, y| {
                let v = value(x, y);
                Ok(v * v)
            })?;
            if !(mass > 1e-300) {
                return Err(Error::Undefined("two-variable function vanishes".into()));
            }
            let plogp = iterated(mx, my, fa, fb, |x, y| {
                let u = square(value(x, y));
                Ok(if u > 0.0 { u * u.ln() } else { 0.0 })
            })?;
            Ok(plogp - mass * mass.ln())
        }
    }
}

/// Coordinate-wise cost energy ∫∫ f²·[H(∂₁f/f) + H(∂₂f/f)] dμ₁ dμ₂.
pub fn dirichlet_h_2d(
    mx: &LogConcaveMeasure,
    my: &LogConcaveMeasure,
    f: &TwoVarTestFunction,
    h: &HFunction,
) -> Result<f64> {
    match f {
        TwoVarTestFunction::Product(fa, fb) => {
            let ma = mx.expect_checked(|x| Ok(square(fa.value(x))), &fa.breakpoints(), None)?;
            let mb = my.expect_checked(|y| Ok(square(fb.value(y))), &fb.breakpoints(), None)?;
            let ea = dirichlet_h(mx, fa, h)?;
            let eb = dirichlet_h(my, fb, h)?;
            Ok(mb * ea + ma * eb)
        }
        TwoVarTestFunction::Sum(fa, fb) => iterated(mx, my, fa, fb, |x, y| {
            let v = fa.value(x) + fb.value(y);
            let dx = fa.deriv(x);
            let dy = fb.deriv(y);
            if v == 0.0 {
                if dx == 0.0 && dy == 0.0 {
                    return Ok(0.0);
                }
                return Err(Error::Undefined(format!(
                    "cost energy undefined at ({x}, {y}): f = 0 with nonzero gradient"
                )));
            }
            Ok(v * v * (h.eval(dx / v)? + h.eval(dy / v)?))
        }),
    }
}

fn iterated<G: Fn(f64, f64) -> Result<f64>>(
    mx: &LogConcaveMeasure,
    my: &LogConcaveMeasure,
    fa: &TestFunction,
    fb: &TestFunction,
    g: G,
) -> Result<f64> {
    let inner_breaks = fb.breakpoints();
    mx.expect_checked(
        |x| my.expect_checked(|y| g(x, y), &inner_breaks, Some(1e-9)),
        &fa.breakpoints(),
        Some(1e-7),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::LegendreEngine;
    use crate::potential::Potential;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn laplace() -> LogConcaveMeasure {
        LogConcaveMeasure::normalize(&Potential::power(1.0).unwrap()).unwrap()
    }

    fn std_gaussian() -> LogConcaveMeasure {
        // e^{-x^2/2}: the classic entropy-energy constant here is 2.
        let p = Potential::custom(
            "half-square",
            |x: f64| 0.5 * x * x,
            |x: f64| x,
            Some(Arc::new(|_| 1.0)),
        );
        LogConcaveMeasure::normalize(&p).unwrap()
    }

    fn sharp_gaussian() -> LogConcaveMeasure {
        LogConcaveMeasure::normalize(&Potential::power(2.0).unwrap()).unwrap()
    }

    #[test]
    fn tilt_entropy_matches_gaussian_closed_form() {
        // Under e^{-x^2}/Z: E[e^{tx}] = e^{t²/4} and Ent(e^{tx}) = (t²/4)e^{t²/4}.
        let m = sharp_gaussian();
        for &t in &[0.4, 1.2, 2.0] {
            let f = TestFunction::ExpTilt { t };
            let want = (t * t / 4.0) * (t * t / 4.0).exp();
            assert_relative_eq!(entropy(&m, &f).unwrap(), want, max_relative = 1e-7);
        }
    }

    #[test]
    fn gaussian_tilt_ratio_is_exactly_the_sharp_constant() {
        let m = sharp_gaussian();
        let h = HFunction::quadratic();
        for &t in &[0.3, 1.0, 1.7] {
            let f = TestFunction::ExpTilt { t };
            let ent = entropy(&m, &f).unwrap();
            let classic = dirichlet_classic(&m, &f).unwrap();
            let cost = dirichlet_h(&m, &f, &h).unwrap();
            assert_relative_eq!(classic, cost, max_relative = 1e-10);
            assert_relative_eq!(ent / cost, 1.0, max_relative = 1e-7);
        }
        let m2 = std_gaussian();
        let f = TestFunction::ExpTilt { t: 1.0 };
        let ratio = entropy(&m2, &f).unwrap() / dirichlet_classic(&m2, &f).unwrap();
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-7);
    }

    #[test]
    fn laplace_variance_of_identity_is_two() {
        let m = laplace();
        let f = TestFunction::PiecewiseLinear { knots: vec![(-50.0, -50.0), (50.0, 50.0)] };
        assert_relative_eq!(variance(&m, &f).unwrap(), 2.0, max_relative = 1e-7);
    }

    #[test]
    fn bump_members_exercise_vanishing_conventions() {
        let m = laplace();
        let e = LegendreEngine::new(&Potential::power(1.5).unwrap());
        let h = e.build_h(1.0).unwrap();
        let f = TestFunction::Bump { center: 0.5, width: 1.0 };
        let ent = entropy(&m, &f).unwrap();
        let energy = dirichlet_h(&m, &f, &h).unwrap();
        assert!(ent.is_finite() && ent > 0.0);
        assert!(energy.is_finite() && energy > 0.0, "bump energy {energy}");
    }

    #[test]
    fn vanishing_conventions_are_pointwise() {
        let h = HFunction::quadratic();
        // f = 0 with f' = 0: the 0·H(0/0) = 0 convention.
        let bump = TestFunction::Bump { center: 0.0, width: 1.0 };
        assert_eq!(cost_density(&bump, &h, 3.0).unwrap(), 0.0);
        // f = 0 with f' != 0: hard error naming the point.
        let vee = TestFunction::PiecewiseLinear {
            knots: vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)],
        };
        let err = cost_density(&vee, &h, 0.0).unwrap_err();
        match err {
            Error::Undefined(msg) => assert!(msg.contains('0'), "message {msg}"),
            other => panic!("expected Undefined, got {other:?}"),
        }
        // Away from the zero the same member integrates cleanly: under the
        // quadratic cost it is just ∫ f'² dμ = μ([-1, 1]).
        let m = laplace();
        let energy = dirichlet_h(&m, &vee, &h).unwrap();
        assert_relative_eq!(energy, 1.0 - (-1.0f64).exp(), max_relative = 1e-7);
    }

    #[test]
    fn hinge_energy_diverges_and_restriction_heals_it() {
        // With the cubic-growth conjugate the integrand behaves like
        // 1/(x - c) at the hinge corner: divergent, flagged as +∞. The
        // super-level restriction excises the corner and is finite.
        let p = Potential::power(1.5).unwrap();
        let m = LogConcaveMeasure::normalize(&p).unwrap();
        let h = LegendreEngine::new(&p).build_h(1.0).unwrap();
        let f = TestFunction::Hinge { center: 1.0 };
        let full = dirichlet_h(&m, &f, &h).unwrap();
        assert!(full.is_infinite(), "expected divergent energy, got {full}");
        let (restricted, region) = dirichlet_h_restricted(&m, &f, &h, 0.1).unwrap();
        assert!(restricted.is_finite() && restricted > 0.0);
        assert!(!region.is_empty());
        assert!(region[0].0 > 1.0, "region must exclude the corner, starts {}", region[0].0);
    }

    #[test]
    fn dual_gap_vanishes_at_the_optimal_potential() {
        let m = laplace();
        let f = TestFunction::ExpTilt { t: 0.8 };
        // Optimal g = log(f²/∫f²): tilt makes it affine in x.
        let mass = m.expect(|x| (0.8 * x).exp()).unwrap();
        let gap = dual_entropy_gap(&m, &f, |x| 0.8 * x - mass.ln(), &[]).unwrap();
        assert!(gap.abs() <= 1e-6, "gap at optimum {gap}");
        // Any other g keeps the defect nonnegative.
        let off = dual_entropy_gap(&m, &f, |x| 0.5 * x.sin() - 0.2, &[]).unwrap();
        assert!(off >= -1e-8, "defect must be nonnegative, got {off}");
    }

    #[test]
    fn best_constant_scan_recovers_the_gaussian_constant() {
        let m = std_gaussian();
        let h = HFunction::quadratic();
        let family = default_family(m.x_max());
        let report = estimate_lsi_constant(&m, &h, &family).unwrap();
        assert!(report.counterexample.is_none());
        assert!(
            (report.estimate - 2.0).abs() <= 2e-3,
            "estimate {} should sit at the sharp constant 2",
            report.estimate
        );
        // No member may exceed the sharp constant (validity), and the
        // report must keep family order for determinism.
        for s in &report.members {
            assert!(s.score <= 2.0 + 1e-6, "{} scored {}", s.label, s.score);
        }
        assert_eq!(report.members.len(), family.len());
        assert_eq!(report.members[0].label, family[0].describe());
    }

    #[test]
    fn residual_scan_reports_positive_excess() {
        let m = std_gaussian();
        let h = HFunction::quadratic();
        let family = vec![
            TestFunction::ExpTilt { t: 1.0 },
            TestFunction::Const { c: 3.0 },
            TestFunction::Bump { center: 0.0, width: 2.0 },
        ];
        let report = estimate_residual_constant(&m, &h, &family, 2.0, 0.25).unwrap();
        assert!(report.counterexample.is_none());
        assert!(report.estimate.is_finite() && report.estimate > 0.0);
        // Excess entropy with an empty region must surface as a counterexample.
        let bad = estimate_residual_constant(
            &m,
            &h,
            &[TestFunction::Bump { center: 0.0, width: 2.0 }],
            0.0,
            1e6,
        )
        .unwrap();
        assert!(bad.counterexample.is_some());
        assert!(bad.estimate.is_infinite());
    }

    #[test]
    fn perturbation_members_linearize_to_the_poincare_ratio() {
        let m = laplace();
        for shape in [GShape::Linear, GShape::Cosine { freq: 1.0 }] {
            let f = TestFunction::Perturbation { eps: 1e-3, shape: shape.clone() };
            let ent = entropy(&m, &f).unwrap();
            let dir = dirichlet_classic(&m, &f).unwrap();
            let mean_g = m.expect(|x| shape.value(x)).unwrap();
            let second_g = m.expect(|x| shape.value(x) * shape.value(x)).unwrap();
            let grad_g = m.expect(|x| shape.deriv(x) * shape.deriv(x)).unwrap();
            let var_g = second_g - mean_g * mean_g;
            assert_relative_eq!(ent / dir, 2.0 * var_g / grad_g, max_relative = 0.01);
        }
    }

    #[test]
    fn product_entropy_shortcut_matches_iterated_quadrature() {
        let m = laplace();
        let fa = TestFunction::ExpTilt { t: 0.4 };
        let fb = TestFunction::Bump { center: 0.0, width: 2.0 };
        let shortcut =
            entropy_2d(&m, &m, &TwoVarTestFunction::Product(fa.clone(), fb.clone())).unwrap();
        let value = |x: f64, y: f64| fa.value(x) * fb.value(y);
        let mass = iterated(&m, &m, &fa, &fb, |x, y| Ok(square(value(x, y)))).unwrap();
        let plogp = iterated(&m, &m, &fa, &fb, |x, y| {
            let u = square(value(x, y));
            Ok(if u > 0.0 { u * u.ln() } else { 0.0 })
        })
        .unwrap();
        assert_relative_eq!(shortcut, plogp - mass * mass.ln(), max_relative = 1e-5);
    }

    #[test]
    fn sum_members_respect_the_tensorized_constant() {
        // Both coordinates carry constant 2; the product measure keeps it.
        let m = std_gaussian();
        let h = HFunction::quadratic();
        let f = TwoVarTestFunction::Sum(
            TestFunction::ExpTilt { t: 0.6 },
            TestFunction::Perturbation { eps: 0.5, shape: GShape::Cosine { freq: 1.0 } },
        );
        let ent = entropy_2d(&m, &m, &f).unwrap();
        let energy = dirichlet_h_2d(&m, &m, &f, &h).unwrap();
        let ratio = ent / energy;
        assert!(ratio <= 2.0 + 1e-4, "tensorized ratio {ratio}");
        assert!(ratio > 0.2, "ratio suspiciously small: {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        // Entropy is nonnegative (Jensen) on arbitrary members.
        #[test]
        fn entropy_is_nonnegative(t in -1.5f64..1.5, c in -1.0f64..1.0, w in 0.4f64..2.0) {
            let m = laplace();
            for f in [TestFunction::ExpTilt { t }, TestFunction::Bump { center: c, width: w }] {
                let e = entropy(&m, &f).unwrap();
                prop_assert!(e >= -1e-10, "entropy {} for {}", e, f.describe());
            }
        }

        // For tilts the quadratic-cost energy has the closed form
        // (t²/4)·∫f² dμ; checks the energy plumbing end to end.
        #[test]
        fn tilt_energy_closed_form(t in 0.1f64..2.0) {
            let m = laplace();
            let f = TestFunction::ExpTilt { t };
            let h = HFunction::quadratic();
            let energy = dirichlet_h(&m, &f, &h).unwrap();
            let mass = m.expect(|x| (t * x).exp()).unwrap();
            prop_assert!((energy - t * t / 4.0 * mass).abs() <= 1e-7 * (1.0 + energy));
        }
    }
}
