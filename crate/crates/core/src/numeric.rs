//! Shared numerical kernels: Gauss-Legendre panels, bracketed root finding,
//! golden-section minimisation, monotone cubic interpolation and grid
//! builders.
//!
//! Everything here is deterministic. Panel quadrature sums left to right in
//! a fixed node order, so repeated runs produce bit-identical values, and
//! integration results never depend on thread count.

use crate::error::{Error, Result};

/// Gauss-Legendre rule on the reference interval [-1, 1].
///
/// Nodes are computed by Newton iteration on the Legendre recurrence and are
/// stored in ascending order. The rule is exact for polynomials of degree
/// 2n - 1.
#[derive(Debug, Clone)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GlRule {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2, "quadrature order must be at least 2");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 1..=m {
            // Initial guess, then Newton on P_n. Converges in < 10 steps.
            let mut z = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j as f64 - 1.0) * z * p2 - (j as f64 - 1.0) * p3) / j as f64;
                }
                pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i - 1] = -z;
            nodes[n - i] = z;
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[i - 1] = w;
            weights[n - i] = w;
        }
        GlRule { nodes, weights }
    }

    /// Integral of `f` over one panel [a, b].
    pub fn panel<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Outcome of one adaptive composite pass.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    /// Integral of |f|, used as the scale for near-cancelling integrands.
    pub abs_value: f64,
    pub panels: usize,
    pub converged: bool,
    /// Value at the previous panel count, for divergence diagnostics.
    pub previous: f64,
}

/// Composite Gauss-Legendre with panel doubling until the value moves by
/// less than `target_rel` relative to its own scale. Returns the raw
/// outcome; callers decide whether non-convergence is an error.
pub fn integrate_raw<F>(
    f: &F,
    a: f64,
    b: f64,
    rule: &GlRule,
    init_panels: usize,
    max_panels: usize,
    target_rel: f64,
) -> Result<Quad>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidParameter(format!(
            "bad integration interval [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Quad { value: 0.0, abs_value: 0.0, panels: 0, converged: true, previous: 0.0 });
    }
    let sweep = |panels: usize| -> Result<(f64, f64)> {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut acc = 0.0;
        let mut acc_abs = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * width;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = mid + half * x;
                let v = f(t)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { x: t, context: "integrand".into() });
                }
                acc += w * v;
                acc_abs += w * v.abs();
            }
        }
        Ok((acc * half, acc_abs * half))
    };
    let mut panels = init_panels.max(1);
    let (mut value, mut abs_value) = sweep(panels)?;
    let mut previous = f64::NAN;
    loop {
        if panels * 2 > max_panels {
            return Ok(Quad { value, abs_value, panels, converged: false, previous });
        }
        panels *= 2;
        let (next, next_abs) = sweep(panels)?;
        previous = value;
        let scale = next.abs().max(1e-6 * next_abs) + 1e-300;
        let done = (next - value).abs() <= target_rel * scale;
        value = next;
        abs_value = next_abs;
        if done {
            return Ok(Quad { value, abs_value, panels, converged: true, previous });
        }
    }
}

/// Like [`integrate_raw`] but treats non-convergence as an error.
pub fn integrate<F>(
    f: &F,
    a: f64,
    b: f64,
    rule: &GlRule,
    init_panels: usize,
    max_panels: usize,
    target_rel: f64,
) -> Result<Quad>
where
    F: Fn(f64) -> Result<f64>,
{
    let q = integrate_raw(f, a, b, rule, init_panels, max_panels, target_rel)?;
    if !q.converged {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}] after {} panels (last {:.6e}, previous {:.6e})",
            q.panels, q.value, q.previous
        )));
    }
    Ok(q)
}

/// Integrate over [a, b] split at the interior breakpoints, so integrands
/// with kinks are handled panel-exactly on each smooth piece.
pub fn integrate_pieces<F>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rule: &GlRule,
    init_panels: usize,
    max_panels: usize,
    target_rel: f64,
) -> Result<Quad>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|t| *t > a && *t < b).collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut lo = a;
    let mut total = 0.0;
    let mut total_abs = 0.0;
    let mut panels = 0;
    let mut converged = true;
    let mut previous = 0.0;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        let q = integrate_raw(f, lo, hi, rule, init_panels, max_panels, target_rel)?;
        total += q.value;
        total_abs += q.abs_value;
        panels += q.panels;
        converged &= q.converged;
        previous += if q.converged { q.value } else { q.previous };
        lo = hi;
    }
    if !converged {
        return Err(Error::Quadrature(format!(
            "no convergence on pieces of [{a}, {b}] ({panels} panels)"
        )));
    }
    Ok(Quad { value: total, abs_value: total_abs, panels, converged, previous })
}

/// Smallest x in [lo, hi] with f(x) >= target, for nondecreasing f.
/// Requires f(hi) >= target; if f(lo) >= target the answer is lo.
/// On flat segments the leftmost point is returned.
pub fn bisect_leftmost<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> f64 {
    if f(lo) >= target {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= rel_tol * (1.0 + hi.abs()) {
            break;
        }
    }
    hi
}

/// Expand an upper bracket geometrically until f(hi) >= target.
pub fn expand_upper<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    start: f64,
    growth: f64,
    cap: f64,
) -> Result<f64> {
    let mut hi = start.max(1e-12);
    for _ in 0..4096 {
        if f(hi) >= target {
            return Ok(hi);
        }
        hi *= growth;
        if hi > cap {
            return Err(Error::Bracketing(format!(
                "could not bracket target {target:.6e} below {cap:.3e}"
            )));
        }
    }
    Err(Error::Bracketing("bracket expansion stalled".into()))
}

/// Golden-section minimiser on [a, b] for a unimodal function.
/// Returns (argmin, min). Deterministic; `tol` is relative on x.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Monotone cubic Hermite interpolant (Fritsch-Carlson tangents).
///
/// Preserves the monotonicity of the data on every interval; evaluation
/// outside the knot range extends linearly with the endpoint slope.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Table("need at least two knots".into()));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Table("knots must be strictly increasing".into()));
            }
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Table("non-finite knot".into()));
        }
        let n = xs.len();
        let mut delta = vec![0.0; n - 1];
        for k in 0..n - 1 {
            delta[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        }
        let mut ms = vec![0.0; n];
        ms[0] = delta[0];
        ms[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            ms[k] = if delta[k - 1] * delta[k] <= 0.0 {
                0.0
            } else {
                0.5 * (delta[k - 1] + delta[k])
            };
        }
        // Fritsch-Carlson clamp keeps each cubic piece monotone.
        for k in 0..n - 1 {
            if delta[k] == 0.0 {
                ms[k] = 0.0;
                ms[k + 1] = 0.0;
                continue;
            }
            let alpha = ms[k] / delta[k];
            let beta = ms[k + 1] / delta[k];
            let s = alpha * alpha + beta * beta;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                ms[k] = tau * alpha * delta[k];
                ms[k + 1] = tau * beta * delta[k];
            }
        }
        Ok(MonotoneCubic { xs, ys, ms })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.ms[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.ms[n - 1] * (x - self.xs[n - 1]);
        }
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.ms[k] + h01 * self.ys[k + 1] + h11 * h * self.ms[k + 1]
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ms[0];
        }
        if x >= self.xs[n - 1] {
            return self.ms[n - 1];
        }
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[k] + d10 * self.ms[k] + d01 * self.ys[k + 1] + d11 * self.ms[k + 1]
    }

    pub fn first_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn last_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn last_slope(&self) -> f64 {
        *self.ms.last().unwrap()
    }
}

/// Log-spaced grid from `lo` to `hi` inclusive, `n >= 2` points, lo > 0.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (la + (lb - la) * i as f64 / (n as f64 - 1.0)).exp()
            }
        })
        .collect()
}

/// Linear grid from `a` to `b` inclusive, `n >= 2` points.
pub fn lin_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(b > a && n >= 2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n as f64 - 1.0)
            }
        })
        .collect()
}

/// Second divided difference f[x0,x1,x2] * 2: sign matches f'' on smooth f,
/// valid on non-uniform grids.
pub fn second_divided(x0: f64, f0: f64, x1: f64, f1: f64, x2: f64, f2: f64) -> f64 {
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    2.0 * (d12 - d01) / (x2 - x0)
}

/// Float -> decimal with 17 significant digits, round-trip safe.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// SplitMix64 stream derivation: deterministic per-index substream seeds.
pub fn splitmix64(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gl_rule_exact_on_polynomials() {
        let rule = GlRule::new(8);
        // Degree 15 is the highest exactly integrated by an 8-point rule.
        let val = rule.panel(|x| x.powi(14), -1.0, 1.0);
        assert_relative_eq!(val, 2.0 / 15.0, max_relative = 1e-13);
        let odd = rule.panel(|x| x.powi(13), -1.0, 1.0);
        assert!(odd.abs() < 1e-15);
        let w: f64 = rule.weights.iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_matches_exponential() {
        let rule = GlRule::new(16);
        let q = integrate(&|x: f64| Ok(x.exp()), 0.0, 1.0, &rule, 1, 1024, 1e-12).unwrap();
        assert_relative_eq!(q.value, std::f64::consts::E - 1.0, max_relative = 1e-12);
        assert!(q.converged);
    }

    #[test]
    fn adaptive_near_cancelling_integrand_converges() {
        let rule = GlRule::new(16);
        let q = integrate(&|x: f64| Ok(x * (-x * x).exp()), -5.0, 5.0, &rule, 4, 4096, 1e-9)
            .unwrap();
        assert!(q.value.abs() < 1e-12, "odd integrand should vanish, got {}", q.value);
        assert!(q.abs_value > 0.9);
    }

    #[test]
    fn pieces_handle_kinks() {
        let rule = GlRule::new(16);
        // |x| over [-1, 1]: exact value 1, needs the breakpoint at 0.
        let q = integrate_pieces(&|x: f64| Ok(x.abs()), -1.0, 1.0, &[0.0], &rule, 1, 256, 1e-13)
            .unwrap();
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn bisect_finds_leftmost_on_flat_segment() {
        // f is 0 below 1, then flat at 2 on [1, 3], then rises.
        let f = |x: f64| {
            if x < 1.0 {
                0.0
            } else if x <= 3.0 {
                2.0
            } else {
                2.0 + (x - 3.0)
            }
        };
        let x = bisect_leftmost(f, 2.0, 0.0, 10.0, 1e-12);
        assert!((x - 1.0).abs() < 1e-9, "leftmost root expected near 1, got {x}");
    }

    #[test]
    fn golden_min_quadratic() {
        let (x, v) = golden_min(|t| (t - 2.0) * (t - 2.0) + 1.0, 0.0, 10.0, 1e-12);
        assert_relative_eq!(x, 2.0, epsilon = 1e-7);
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn monotone_cubic_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 2.0, 2.05, 5.0];
        let mc = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = mc.eval(0.0);
        let mut t = 0.01;
        while t <= 4.0 {
            let v = mc.eval(t);
            assert!(v >= prev - 1e-12, "not monotone at {t}: {v} < {prev}");
            prev = v;
            t += 0.01;
        }
        // Interpolates the knots.
        assert_relative_eq!(mc.eval(2.0), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn monotone_cubic_reproduces_linear() {
        let xs = vec![0.0, 0.5, 1.7, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        let mc = MonotoneCubic::new(xs, ys).unwrap();
        assert_relative_eq!(mc.eval(0.9), 3.0 * 0.9 + 1.0, max_relative = 1e-13);
        assert_relative_eq!(mc.deriv(2.2), 3.0, max_relative = 1e-12);
        // Linear extension beyond the last knot.
        assert_relative_eq!(mc.eval(4.0), 13.0, max_relative = 1e-12);
    }

    #[test]
    fn splitmix_streams_differ() {
        let a = splitmix64(7, 0);
        let b = splitmix64(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, splitmix64(7, 0));
    }

    #[test]
    fn fmt_g17_round_trips() {
        for &x in &[1.0, std::f64::consts::PI, 6.75, 1e-300, -2.5e17] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s} did not round-trip");
        }
        assert_eq!(fmt_g17(f64::INFINITY), "inf");
    }
}
