//! Adaptive Gauss–Kronrod (10/21) quadrature for complex-valued integrands.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub const DEFAULT_MAX_EVALS: usize = 1 << 15;
pub const DEFAULT_TOL: f64 = 1e-10;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208037297580,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    pub fn exact(value: Complex64) -> Self {
        QuadResult {
            value,
            ..QuadResult::zero()
        }
    }

    pub fn plus(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub fn scaled(self, c: Complex64) -> QuadResult {
        QuadResult {
            value: self.value * c,
            error_estimate: self.error_estimate * c.norm(),
            ..self
        }
    }

    /// Turn an unconverged result into `Error::NonConvergence`.
    pub fn require(self) -> Result<QuadResult> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                estimate: self.value.norm(),
                error: self.error_estimate,
                evaluations: self.evaluations,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: DEFAULT_TOL,
            rel_tol: 0.0,
            max_evals: DEFAULT_MAX_EVALS,
        }
    }
}

impl QuadConfig {
    pub fn abs(tol: f64) -> Self {
        QuadConfig {
            abs_tol: tol,
            ..Default::default()
        }
    }

    pub fn rel(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn budget(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    fn target(&self, value: Complex64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.norm())
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn checked<F: Fn(f64) -> Complex64>(f: &F, x: f64) -> Result<Complex64> {
    let v = f(x);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { at: x })
    }
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Result<(Complex64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = checked(f, c)?;
    let mut resk = fc * WGK[10];
    let mut resg = Complex64::new(0.0, 0.0);
    let mut fv = [(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); 10];
    let mut resabs = WGK[10] * fc.norm();
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = checked(f, c - dx)?;
        let f2 = checked(f, c + dx)?;
        fv[j] = (f1, f2);
        resk += (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            resg += (f1 + f2) * WG[j / 2];
        }
    }
    let half = resk * 0.5;
    let mut resasc = WGK[10] * (fc - half).norm();
    for j in 0..10 {
        resasc += WGK[j] * ((fv[j].0 - half).norm() + (fv[j].1 - half).norm());
    }
    let ah = h.abs();
    let resabs = resabs * ah;
    let resasc = resasc * ah;
    let mut err = ((resk - resg) * h).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((resk * h, err))
}

/// ∫_a^b f(x) dx with the default tolerance and budget.
pub fn integrate_adaptive<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    integrate_with(&f, a, b, &[], &QuadConfig::abs(tol))
}

/// ∫_a^b f(x) dx; `breaks` are caller-supplied singular or stationary points
/// inside (a, b) used as initial panel boundaries.
pub fn integrate_with<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite limits required, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult::zero());
    }
    if a > b {
        let r = integrate_with(f, b, a, breaks, cfg)?;
        return Ok(r.scaled(Complex64::new(-1.0, 0.0)));
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(a);
    edges.extend(pts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk21(f, w[0], w[1])?;
        evals += 21;
        total += v;
        total_err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let scale = a.abs().max(b.abs()).max(1e-300);
    let mut frozen: Vec<Panel> = Vec::new();
    let mut converged = false;
    loop {
        if total_err <= cfg.target(total) {
            converged = true;
            break;
        }
        if evals + 42 > cfg.max_evals {
            break;
        }
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if p.b - p.a <= 64.0 * f64::EPSILON * scale || mid <= p.a || mid >= p.b {
            frozen.push(p);
            continue;
        }
        let (v1, e1) = gk21(f, p.a, mid)?;
        let (v2, e2) = gk21(f, mid, p.b)?;
        evals += 42;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
    }
    // re-sum to shed drift from the running totals
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for p in heap.iter().chain(frozen.iter()) {
        value += p.value;
        error += p.error;
    }
    let converged = converged || error <= cfg.target(value);
    Ok(QuadResult {
        value,
        error_estimate: error,
        evaluations: evals,
        converged,
    })
}

/// Same as [`integrate_with`] but each interval between consecutive `edges`
/// is refined independently on the rayon pool. Summation order is fixed.
pub fn integrate_segments_par<F: Fn(f64) -> Complex64 + Sync>(
    f: &F,
    edges: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if edges.len() < 2 {
        return Ok(QuadResult::zero());
    }
    let n = (edges.len() - 1) as f64;
    let sub = QuadConfig {
        abs_tol: cfg.abs_tol / n,
        ..*cfg
    };
    let parts: Vec<Result<QuadResult>> = edges
        .par_windows(2)
        .map(|w| integrate_with(f, w[0], w[1], &[], &sub))
        .collect();
    let mut acc = QuadResult::zero();
    for p in parts {
        acc = acc.plus(p?);
    }
    if !acc.converged && acc.error_estimate <= cfg.target(acc.value) {
        acc.converged = true;
    }
    Ok(acc)
}

/// ∫ over [a, ∞) when `dir` > 0, over (−∞, a] otherwise, through x = a ± L·t/(1−t).
/// `scale` L should match the width of the integrand's bulk.
pub fn integrate_to_infinity<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    dir: f64,
    scale: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let s = dir.signum();
    let l = scale.abs().max(1e-300);
    let g = |t: f64| {
        let u = t / (1.0 - t);
        let jac = l / ((1.0 - t) * (1.0 - t));
        f(a + s * l * u) * jac
    };
    let tb: Vec<f64> = breaks
        .iter()
        .map(|&x| (x - a) * s)
        .filter(|&u| u > 0.0)
        .map(|u| u / (l + u))
        .collect();
    integrate_with(&g, 0.0, 1.0, &tb, cfg)
}

/// ∫ over the real line, split at `center`.
pub fn integrate_real_line<F: Fn(f64) -> Complex64>(
    f: &F,
    center: f64,
    scale: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let half = QuadConfig {
        abs_tol: 0.5 * cfg.abs_tol,
        ..*cfg
    };
    let right = integrate_to_infinity(f, center, 1.0, scale, breaks, &half)?;
    let left = integrate_to_infinity(f, center, -1.0, scale, breaks, &half)?;
    Ok(right.plus(left))
}

/// ∫ e^{−A(E−center)²} g(E) dE over center ± 8/√A.
pub fn integrate_gaussian_weight<G: Fn(f64) -> Complex64>(
    g: G,
    center: f64,
    a: f64,
    tol: f64,
) -> Result<QuadResult> {
    if !(a > 0.0) {
        return Err(Error::InvalidWidth(a));
    }
    let half = 8.0 / a.sqrt();
    let f = |e: f64| {
        let d = e - center;
        g(e) * (-a * d * d).exp()
    };
    integrate_with(&f, center - half, center + half, &[center], &QuadConfig::abs(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn re(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> Complex64 {
        move |x| Complex64::new(f(x), 0.0)
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate_adaptive(re(|x| x * x), 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value.re - 1.0 / 3.0).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn sine_half_period() {
        let r = integrate_adaptive(re(f64::sin), 0.0, PI, 1e-12).unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn half_gaussian_mapped() {
        let f = re(|x| (-x * x).exp());
        let r = integrate_to_infinity(&f, 0.0, 1.0, 1.0, &[], &QuadConfig::abs(1e-12)).unwrap();
        assert!((r.value.re - 0.886226925452758).abs() < 1e-12);
        let l = integrate_to_infinity(&f, 0.0, -1.0, 1.0, &[], &QuadConfig::abs(1e-12)).unwrap();
        assert!((l.value.re - 0.886226925452758).abs() < 1e-12);
    }

    #[test]
    fn gaussian_weight_examples() {
        let one = integrate_gaussian_weight(|_| Complex64::new(1.0, 0.0), 0.0, 4.0, 1e-12).unwrap();
        assert!((one.value.re - PI.sqrt() / 2.0).abs() < 1e-12);
        for a in [0.5, 3.0, 40.0] {
            let m = integrate_gaussian_weight(|e| Complex64::new(e, 0.0), 3.0, a, 1e-12).unwrap();
            assert!((m.value.re - 3.0 * (PI / a).sqrt()).abs() < 1e-11);
        }
        let q = integrate_gaussian_weight(|e| Complex64::new(e * e, 0.0), 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value.re - 0.886226925452758).abs() < 1e-12);
    }

    #[test]
    fn nonfinite_is_reported() {
        let r = integrate_adaptive(re(|x| 1.0 / (x - 0.5)), 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::NonFinite { .. })) || !r.unwrap().converged);
    }

    #[test]
    fn budget_exhaustion_is_honest() {
        let f = re(|x| (1.0 / x).sin());
        let r = integrate_with(&f, 1e-6, 1.0, &[], &QuadConfig::abs(1e-14).budget(500)).unwrap();
        assert!(!r.converged);
        assert!(r.require().is_err());
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate_adaptive(re(|x| x.exp()), 1.0, 0.0, 1e-12).unwrap();
        assert!((r.value.re + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn parallel_segments_match_serial() {
        let f = re(|x| (3.0 * x).cos() * (-0.1 * x * x).exp());
        let edges: Vec<f64> = (0..=8).map(|k| -8.0 + 2.0 * k as f64).collect();
        let p = integrate_segments_par(&f, &edges, &QuadConfig::abs(1e-12)).unwrap();
        let s = integrate_with(&f, -8.0, 8.0, &[], &QuadConfig::abs(1e-12)).unwrap();
        assert!((p.value - s.value).norm() < 1e-11);
    }
}
