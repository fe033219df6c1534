//! Potentials Φ and the growth-window hypothesis check.
//!
//! A potential is an even function with its minimum at 0, convex and
//! superlinear, evaluated together with its derivative (and second
//! derivative when available). The hypothesis check certifies, on a log
//! grid, that the logarithmic derivative ratio x·Φ'(x)/Φ(x) stays inside
//! [1 + ε, 2 - ε] beyond a threshold M — the window in which the measure
//! e^{-Φ}/Z sits strictly between exponential and Gaussian behaviour — and
//! extracts the implied two-sided growth envelope
//! m₁·x^{1/(1-ε)} ≤ Φ(x) ≤ m₂·x^{2-ε}.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bisect_leftmost, log_grid, MonotoneCubic};

/// Shared scalar function handle used by custom potentials.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Built-in family tag, kept for reporting and closed-form shortcuts.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Φ(x) = |x|^alpha
    Power { alpha: f64 },
    /// Φ(x) = |x|^alpha * ln(e + |x|)^beta
    PowerLog { alpha: f64, beta: f64 },
    /// User-supplied closures or a tabulated file.
    Custom { label: String },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Power { alpha } => write!(f, "power(alpha={alpha})"),
            Family::PowerLog { alpha, beta } => {
                write!(f, "power-log(alpha={alpha},beta={beta})")
            }
            Family::Custom { label } => write!(f, "custom({label})"),
        }
    }
}

/// An even potential with evaluation maps for Φ, Φ' and optionally Φ''.
///
/// Immutable and cheap to clone; safe to share across threads.
#[derive(Clone)]
pub struct Potential {
    value: ScalarFn,
    deriv: ScalarFn,
    second: Option<ScalarFn>,
    family: Family,
    symmetric: bool,
    domain_floor: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({})", self.family)
    }
}

impl Potential {
    /// Φ(x) = |x|^alpha. Requires alpha >= 1; superlinear iff alpha > 1.
    pub fn power(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "power family needs alpha >= 1, got {alpha}"
            )));
        }
        let value = move |x: f64| x.abs().powf(alpha);
        let deriv = move |x: f64| x.signum() * alpha * x.abs().powf(alpha - 1.0);
        let second = move |x: f64| {
            if x == 0.0 && alpha < 2.0 {
                // curvature blows up at the origin for sub-quadratic powers
                f64::INFINITY
            } else {
                alpha * (alpha - 1.0) * x.abs().powf(alpha - 2.0)
            }
        };
        Ok(Potential {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            second: Some(Arc::new(second)),
            family: Family::Power { alpha },
            symmetric: true,
            domain_floor: 0.0,
        })
    }

    /// Φ(x) = |x|^alpha * ln(e + |x|)^beta.
    ///
    /// Requires alpha >= 1; the pair (alpha = 1, beta < 0) is rejected
    /// because the resulting potential is sublinear.
    pub fn power_log(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() || alpha < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "power-log family needs alpha >= 1, got alpha={alpha}"
            )));
        }
        if alpha == 1.0 && beta < 0.0 {
            return Err(Error::InvalidParameter(
                "power-log with alpha = 1 and beta < 0 is sublinear".into(),
            ));
        }
        let e = std::f64::consts::E;
        let value = move |x: f64| {
            let a = x.abs();
            a.powf(alpha) * (e + a).ln().powf(beta)
        };
        let deriv = move |x: f64| {
            let a = x.abs();
            if a == 0.0 {
                return if alpha > 1.0 { 0.0 } else { 0.0 };
            }
            let l = (e + a).ln();
            x.signum()
                * (alpha * a.powf(alpha - 1.0) * l.powf(beta)
                    + beta * a.powf(alpha) * l.powf(beta - 1.0) / (e + a))
        };
        let second = move |x: f64| {
            let a = x.abs();
            if a == 0.0 {
                return if alpha < 2.0 { f64::INFINITY } else { 2.0 };
            }
            let l = (e + a).ln();
            let ea = e + a;
            alpha * (alpha - 1.0) * a.powf(alpha - 2.0) * l.powf(beta)
                + 2.0 * alpha * beta * a.powf(alpha - 1.0) * l.powf(beta - 1.0) / ea
                + beta * (beta - 1.0) * a.powf(alpha) * l.powf(beta - 2.0) / (ea * ea)
                - beta * a.powf(alpha) * l.powf(beta - 1.0) / (ea * ea)
        };
        Ok(Potential {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            second: Some(Arc::new(second)),
            family: Family::PowerLog { alpha, beta },
            symmetric: true,
            domain_floor: 0.0,
        })
    }

    /// Potential from user closures for Φ and Φ' (and Φ'' when available).
    /// The caller is responsible for evenness and convexity; the test-grid
    /// invariants will catch gross violations downstream.
    pub fn custom<V, D>(label: &str, value: V, deriv: D, second: Option<ScalarFn>) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Potential {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            second,
            family: Family::Custom { label: label.to_string() },
            symmetric: true,
            domain_floor: 0.0,
        }
    }

    /// Tabulated potential on x >= 0, evaluated as Φ(|x|) with monotone
    /// cubic interpolation. `dphi` supplies Φ' knots when available;
    /// otherwise the interpolant's derivative is used. Beyond the last knot
    /// the derivative continues linearly (slope clamped nonnegative), which
    /// keeps the extension convex.
    pub fn from_table(xs: Vec<f64>, phis: Vec<f64>, dphi: Option<Vec<f64>>) -> Result<Self> {
        if xs.len() < 4 {
            return Err(Error::Table("need at least 4 rows".into()));
        }
        if xs[0] != 0.0 {
            return Err(Error::Table("first abscissa must be 0 (values are for x >= 0)".into()));
        }
        // Convex data: chord slopes must be nondecreasing (tiny slack for
        // values that were themselves computed in floating point).
        let mut prev_slope = f64::NEG_INFINITY;
        for w in xs.windows(2).zip(phis.windows(2)) {
            let (xw, pw) = w;
            let s = (pw[1] - pw[0]) / (xw[1] - xw[0]);
            if s < prev_slope - 1e-12 * (1.0 + s.abs()) {
                return Err(Error::Table(format!(
                    "values are not convex near x = {}",
                    xw[0]
                )));
            }
            prev_slope = prev_slope.max(s);
        }
        let phi_interp = MonotoneCubic::new(xs.clone(), phis.clone())?;
        let dphi_interp = match &dphi {
            Some(ds) => {
                if ds.len() != xs.len() {
                    return Err(Error::Table("derivative column length mismatch".into()));
                }
                if ds[0] != 0.0 && ds[0].abs() > 1e-9 {
                    return Err(Error::Table("derivative at 0 must vanish".into()));
                }
                Some(MonotoneCubic::new(xs.clone(), ds.clone())?)
            }
            None => None,
        };
        let x_end = *xs.last().unwrap();
        let phi_end = *phis.last().unwrap();
        let d_end = match &dphi_interp {
            Some(di) => di.eval(x_end),
            None => phi_interp.deriv(x_end),
        };
        // Tail curvature from the last derivative increment.
        let d_prev = match &dphi_interp {
            Some(di) => di.eval(xs[xs.len() - 2]),
            None => phi_interp.deriv(xs[xs.len() - 2]),
        };
        let tail_curv = ((d_end - d_prev) / (x_end - xs[xs.len() - 2])).max(0.0);

        let pi = phi_interp.clone();
        let value = move |x: f64| {
            let a = x.abs();
            if a <= x_end {
                pi.eval(a)
            } else {
                let dx = a - x_end;
                phi_end + d_end * dx + 0.5 * tail_curv * dx * dx
            }
        };
        let pi2 = phi_interp;
        let di2 = dphi_interp;
        let deriv = move |x: f64| {
            let a = x.abs();
            let d = if a <= x_end {
                match &di2 {
                    Some(di) => di.eval(a),
                    None => pi2.deriv(a),
                }
            } else {
                d_end + tail_curv * (a - x_end)
            };
            x.signum() * d
        };
        Ok(Potential {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            second: None,
            family: Family::Custom { label: format!("table[0,{x_end}]") },
            symmetric: true,
            domain_floor: 0.0,
        })
    }

    /// Parse a tabulated potential from a text file: two or three columns
    /// (x, Φ(x)[, Φ'(x)]), whitespace or comma separated, `#` comments.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        let mut ds: Vec<f64> = Vec::new();
        let mut cols = 0usize;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Table(format!("line {}: bad number {s:?}", ln + 1)))
                })
                .collect::<Result<_>>()?;
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::Table(format!("line {}: need 2 or 3 columns", ln + 1)));
            }
            if cols == 0 {
                cols = fields.len();
            } else if cols != fields.len() {
                return Err(Error::Table(format!("line {}: inconsistent column count", ln + 1)));
            }
            xs.push(fields[0]);
            ps.push(fields[1]);
            if fields.len() == 3 {
                ds.push(fields[2]);
            }
        }
        Potential::from_table(xs, ps, if cols == 3 { Some(ds) } else { None })
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    pub fn second_deriv(&self, x: f64) -> Option<f64> {
        self.second.as_ref().map(|s| s(x))
    }

    pub fn has_second_deriv(&self) -> bool {
        self.second.is_some()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    pub fn describe(&self) -> String {
        self.family.to_string()
    }
}

/// Smallest x >= from with Φ(x) >= Φ(from) + rise. Errors when the
/// potential never climbs by `rise` below the search cap (bounded or
/// asymptotically flat potentials).
pub fn rise_point(p: &Potential, from: f64, rise: f64) -> Result<f64> {
    let target = p.value(from) + rise;
    let mut hi = if from > 0.0 { 2.0 * from } else { 1.0 };
    for _ in 0..256 {
        if p.value(hi) >= target {
            let x = bisect_leftmost(|x| p.value(x), target, from, hi, 1e-14);
            return Ok(x);
        }
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonIntegrable(format!(
                "potential never rises by {rise} above x = {from} (checked up to 1e12)"
            )));
        }
    }
    unreachable!()
}

/// Scan-grid density for the hypothesis check.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub points_per_decade: usize,
    pub min_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points_per_decade: 2000, min_points: 256 }
    }
}

/// Result of the growth-window check at a given (ε, M) pair.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub epsilon: f64,
    pub big_m: f64,
    pub passed: bool,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Largest m₁ with m₁·x^{1/(1-ε)} ≤ Φ(x) on the scan grid.
    pub growth_m1: f64,
    /// Smallest m₂ with Φ(x) ≤ m₂·x^{2-ε} on the scan grid.
    pub growth_m2: f64,
    pub grid_spec: String,
    pub failure: Option<String>,
}

/// Closed inequalities are certified with this slack so that exact ties
/// (ratio identically 1+ε or 2-ε) survive floating-point evaluation.
const RATIO_TIE_SLACK: f64 = 1e-9;

/// Check (1+ε)·Φ(x) ≤ x·Φ'(x) ≤ (2-ε)·Φ(x) for x in [M, X], where X is the
/// point at which Φ has climbed by 40 above Φ(M); beyond it the measure's
/// mass is negligible at the library's quadrature tolerance.
pub fn check_hypothesis(
    p: &Potential,
    epsilon: f64,
    big_m: f64,
    scan: &GridSpec,
) -> Result<HypothesisReport> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1/2], got {epsilon}"
        )));
    }
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(Error::InvalidParameter(format!("M must be positive, got {big_m}")));
    }
    let fail = |reason: String, grid: String| HypothesisReport {
        epsilon,
        big_m,
        passed: false,
        ratio_min: f64::NAN,
        ratio_max: f64::NAN,
        growth_m1: f64::NAN,
        growth_m2: f64::NAN,
        grid_spec: grid,
        failure: Some(reason),
    };
    if !(p.value(big_m) > 0.0) {
        return Ok(fail(
            format!("Phi(M) = {} is not positive at M = {big_m}", p.value(big_m)),
            "unscanned".into(),
        ));
    }
    let x_max = rise_point(p, big_m, 40.0)?;
    let decades = (x_max / big_m).log10().max(0.0);
    let n = ((scan.points_per_decade as f64 * decades).ceil() as usize).max(scan.min_points);
    let grid = log_grid(big_m, x_max, n);
    let grid_desc = format!(
        "log[{:.6e},{:.6e}]x{n} (>= {} pts/decade)",
        big_m, x_max, scan.points_per_decade
    );

    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    let mut m1 = f64::INFINITY;
    let mut m2 = 0.0f64;
    let lo_pow = 1.0 / (1.0 - epsilon);
    let hi_pow = 2.0 - epsilon;
    for &x in &grid {
        let v = p.value(x);
        let d = p.deriv(x);
        if !(v > 0.0) || !d.is_finite() {
            return Ok(fail(format!("non-positive or non-finite data at x = {x}"), grid_desc));
        }
        let r = x * d / v;
        ratio_min = ratio_min.min(r);
        ratio_max = ratio_max.max(r);
        m1 = m1.min(v / x.powf(lo_pow));
        m2 = m2.max(v / x.powf(hi_pow));
    }
    let passed =
        ratio_min >= (1.0 + epsilon) - RATIO_TIE_SLACK && ratio_max <= (2.0 - epsilon) + RATIO_TIE_SLACK;
    Ok(HypothesisReport {
        epsilon,
        big_m,
        passed,
        ratio_min,
        ratio_max,
        growth_m1: m1,
        growth_m2: m2,
        grid_spec: grid_desc,
        failure: if passed {
            None
        } else {
            Some(format!(
                "ratio range [{ratio_min:.6}, {ratio_max:.6}] escapes [{:.6}, {:.6}]",
                1.0 + epsilon,
                2.0 - epsilon
            ))
        },
    })
}

/// Convenience scan over candidate (ε, M) pairs; reports every pair so the
/// caller can pick a passing one instead of guessing.
pub fn scan_hypothesis(
    p: &Potential,
    epsilons: &[f64],
    big_ms: &[f64],
    scan: &GridSpec,
) -> Result<Vec<HypothesisReport>> {
    let mut out = Vec::with_capacity(epsilons.len() * big_ms.len());
    for &e in epsilons {
        for &m in big_ms {
            out.push(check_hypothesis(p, e, m, scan)?);
        }
    }
    Ok(out)
}
