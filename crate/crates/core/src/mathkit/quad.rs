//! Numerical integration: adaptive Gauss–Kronrod, fixed Gauss–Legendre rules,
//! semi-infinite maps and oscillatory Fourier-type integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// How `[0, ∞)` is mapped to a finite interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfiniteMap {
    /// `x = s·u/(1-u)` over `u ∈ [0,1)`.
    Rational,
    /// Integrate over `[0, upper]` only.
    Truncate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub map: InfiniteMap,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            map: InfiniteMap::Rational,
        }
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs(), abs * h.abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive 7/15-point Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let (v, e, abs) = kronrod(&f, a, b);
    let mut total = v;
    let mut err = e;
    let mut abs_total = abs;
    let mut heap = BinaryHeap::new();
    heap.push(Piece {
        a,
        b,
        value: v,
        error: e,
    });
    let mut n = 1;
    loop {
        let tol = spec
            .abs_tol
            .max(spec.rel_tol * total.abs())
            .max(50.0 * f64::EPSILON * abs_total);
        if err <= tol {
            break;
        }
        if n >= spec.max_subdivisions {
            if !total.is_finite() || err > 10.0 * tol {
                return Err(Error::NonConvergence {
                    what: "adaptive quadrature".into(),
                    estimate: total,
                    error: err,
                });
            }
            break;
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1, a1) = kronrod(&f, p.a, m);
        let (v2, e2, a2) = kronrod(&f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        abs_total += a1 + a2;
        heap.push(Piece {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
        n += 1;
    }
    // Re-sum to limit drift from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::NonConvergence {
            what: "adaptive quadrature".into(),
            estimate: value,
            error,
        });
    }
    Ok(Estimate { value, error })
}

/// Integrates `f` over `[0, ∞)` using the configured map with unit scale.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate_semi_infinite_scaled(f, 1.0, spec)
}

/// Integrates `f` over `[0, ∞)`; `scale` should be the order of magnitude of the bulk of `f`.
pub fn integrate_semi_infinite_scaled<F: Fn(f64) -> f64>(
    f: F,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    match spec.map {
        InfiniteMap::Truncate(upper) => integrate(f, 0.0, upper, spec),
        InfiniteMap::Rational => integrate(
            |u| {
                if u >= 1.0 {
                    return 0.0;
                }
                let x = scale * u / (1.0 - u);
                let jac = scale / ((1.0 - u) * (1.0 - u));
                let v = f(x) * jac;
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            spec,
        ),
    }
}

/// `∫ g(v) dv` over `[lo, hi]` split into unit panels, each integrated adaptively.
///
/// Used for integrands already written in a logarithmic variable.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    g: F,
    lo: f64,
    hi: f64,
    width: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let n = ((hi - lo) / width).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for i in 0..n {
        let a = lo + i as f64 * h;
        let e = integrate(&g, a, a + h, spec)?;
        value += e.value;
        error += e.error;
    }
    Ok(Estimate { value, error })
}

/// `∫_lo^hi f(x) dx` evaluated in `v = ln x`, suited to integrands spread over decades.
pub fn integrate_log_domain<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    integrate_panels(
        |v| {
            let x = v.exp();
            x * f(x)
        },
        lo.ln(),
        hi.ln(),
        1.0,
        spec,
    )
}

/// Wynn's epsilon acceleration of a sequence of partial sums.
pub fn wynn_epsilon(partial: &[f64]) -> Option<(f64, f64)> {
    let n = partial.len();
    if n < 3 {
        return None;
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut best = (partial[n - 1], (partial[n - 1] - partial[n - 2]).abs());
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return Some(best);
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 && cur.len() >= 2 {
            let m = cur.len();
            let e = (cur[m - 1] - cur[m - 2]).abs();
            if e < best.1 {
                best = (cur[m - 1], e);
            }
        }
    }
    Some(best)
}

/// `∫_0^∞ Im f(ω) / ω dω` for a complex-valued `f` with `Im f(0) = 0`.
///
/// The integral is taken in `v = ln ω` over unit panels starting well below
/// `1/scale`; it stops once `|f|` has decayed below the tolerance for several
/// panels. The partial sums are passed through Wynn's epsilon when the
/// envelope decays too slowly to truncate outright.
pub fn integrate_oscillatory_im<F>(f: F, scale: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> num_complex::Complex64,
{
    integrate_oscillatory_im_from(f, 1e-9 / scale, spec)
}

/// As [`integrate_oscillatory_im`], with the integrand taken as flat below `w0`.
pub fn integrate_oscillatory_im_from<F>(f: F, w0: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> num_complex::Complex64,
{
    // Near zero Im f(ω)/ω is flat, so the missing head is ≈ Im f(w0).
    let head = f(w0).im;
    let g = |v: f64| f(v.exp()).im;
    let mut v = w0.ln();
    let mut value = head;
    let mut error = 0.0;
    let mut partial = Vec::new();
    let mut quiet = 0;
    let tol = spec.abs_tol.max(1e-14);
    for _ in 0..160 {
        let e = integrate(&g, v, v + 1.0, spec)?;
        value += e.value;
        error += e.error;
        v += 1.0;
        partial.push(value);
        let env = f(v.exp()).norm();
        if e.value.abs() < tol && env < tol {
            quiet += 1;
            if quiet >= 3 {
                return Ok(Estimate { value, error });
            }
        } else {
            quiet = 0;
        }
    }
    if let Some((acc, err)) = wynn_epsilon(&partial[partial.len().saturating_sub(12)..]) {
        if err < 10.0 * tol.max(spec.rel_tol * acc.abs()) {
            return Ok(Estimate {
                value: acc,
                error: error + err,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "oscillatory integral".into(),
        estimate: value,
        error,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed Gauss–Legendre rule mapped onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct FixedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FixedRule {
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        Self {
            nodes: x.iter().map(|t| c + h * t).collect(),
            weights: w.iter().map(|t| h * t).collect(),
        }
    }

    /// Composite rule with `panels` equal panels of `n` points each.
    pub fn composite(n: usize, a: f64, b: f64, panels: usize) -> Self {
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(n * panels);
        let mut weights = Vec::with_capacity(n * panels);
        for p in 0..panels {
            let r = Self::new(n, a + p as f64 * h, a + (p + 1) as f64 * h);
            nodes.extend(r.nodes);
            weights.extend(r.weights);
        }
        Self { nodes, weights }
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn polynomial_is_exact() {
        let r = FixedRule::new(5, 0.0, 2.0);
        let v = r.apply(|x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let spec = QuadratureSpec::default();
        let e = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &spec).unwrap();
        assert!((e.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let spec = QuadratureSpec::default();
        let e = integrate_semi_infinite(|x: f64| (-x * x).exp(), &spec).unwrap();
        assert!((e.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-10);
        let t = QuadratureSpec {
            map: InfiniteMap::Truncate(40.0),
            ..spec
        };
        let e = integrate_semi_infinite(|x: f64| (-x).exp(), &t).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_damped_sine() {
        // ∫ sin(ω) e^{-ω²/100} / ω dω = π/2 · erf(5)
        let spec = QuadratureSpec::default();
        let f = |w: f64| Complex64::new(0.0, w).exp() * (-w * w / 100.0).exp();
        let e = integrate_oscillatory_im(f, 1.0, &spec).unwrap();
        let want = std::f64::consts::FRAC_PI_2 * statrs::function::erf::erf(5.0);
        assert!((e.value - want).abs() < 1e-8, "{}", e.value);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        let mut s = 0.0;
        let partial: Vec<f64> = (0..12)
            .map(|k| {
                s += if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
                s
            })
            .collect();
        let (v, _) = wynn_epsilon(&partial).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-8);
    }
}
