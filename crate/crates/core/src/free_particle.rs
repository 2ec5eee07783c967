//! Free particle H = P²/2m: window, Gaussian and bump fiducials, their
//! coherent states, exact evolution and the closed forms built on them.

use crate::error::{Error, Result};
use crate::hilbert::{
    displace, inner_product, moment_p, Band, GaussProbe, PhaseLabel, PhysicalParams, StateEvaluator, Tail,
    TailEnvelope, TailTerm,
};
use crate::numerics::quad::{integrate_with, QuadConfig};
use crate::numerics::{gaussian_segment_c, gaussian_segment_k};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFiducialParams {
    pub k0: f64,
    pub k1: f64,
    pub c: f64,
}

impl WindowFiducialParams {
    pub fn new(k0: f64, k1: f64) -> Result<Self> {
        if !(k0 < k1) || !k0.is_finite() || !k1.is_finite() {
            return Err(Error::InvalidWindow { k0, k1 });
        }
        Ok(WindowFiducialParams {
            k0,
            k1,
            c: 1.0 / (k1 - k0).sqrt(),
        })
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.k0 + self.k1)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.k1 - self.k0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFiducialParams {
    pub kbar: f64,
    pub a: f64,
    pub c_a: f64,
}

impl GaussianFiducialParams {
    pub fn new(kbar: f64, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidWidth(a));
        }
        if !kbar.is_finite() {
            return Err(Error::InvalidParameter("non-finite kbar".into()));
        }
        Ok(GaussianFiducialParams {
            kbar,
            a,
            c_a: (2.0 * a / PI).powf(0.25),
        })
    }
}

/// One of the free-particle fiducial families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FreeFamily {
    Window { k0: f64, k1: f64 },
    Gaussian { kbar: f64, a: f64 },
    Bump { k0: f64, k1: f64 },
}

impl FreeFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FreeFamily::Window { k0, k1 } | FreeFamily::Bump { k0, k1 } => WindowFiducialParams::new(k0, k1).map(|_| ()),
            FreeFamily::Gaussian { kbar, a } => GaussianFiducialParams::new(kbar, a).map(|_| ()),
        }
    }

    pub fn fiducial(&self) -> Result<StateEvaluator> {
        match *self {
            FreeFamily::Window { k0, k1 } => window_fiducial(k0, k1),
            FreeFamily::Gaussian { kbar, a } => gaussian_fiducial(kbar, a),
            FreeFamily::Bump { k0, k1 } => bump_fiducial(k0, k1),
        }
    }

    pub fn coherent(&self, label: PhaseLabel, params: PhysicalParams) -> Result<StateEvaluator> {
        Ok(coherent_state(&self.fiducial()?, label, params))
    }

    /// e^{−iτH/ℏ}|q,p⟩ with τ = label.tau.
    pub fn evolved(&self, label: PhaseLabel, params: PhysicalParams) -> Result<StateEvaluator> {
        let tau = label.tau;
        let l = PhaseLabel::qp(label.q, label.p);
        match *self {
            FreeFamily::Window { k0, k1 } => evolve_window(k0, k1, l, tau, params),
            FreeFamily::Gaussian { kbar, a } => evolve_gaussian(kbar, a, l, tau, params),
            FreeFamily::Bump { k0, k1 } => evolve_bump(k0, k1, l, tau, params),
        }
    }

    /// Mean and variance of the fiducial's wavenumber distribution.
    pub fn wavenumber_moments(&self) -> (f64, f64) {
        match *self {
            FreeFamily::Window { k0, k1 } => (0.5 * (k0 + k1), (k1 - k0).powi(2) / 12.0),
            FreeFamily::Gaussian { kbar, a } => (kbar, 1.0 / (4.0 * a)),
            FreeFamily::Bump { k0, k1 } => bump_moments(k0, k1),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FreeFamily::Window { .. } => "window",
            FreeFamily::Gaussian { .. } => "gaussian",
            FreeFamily::Bump { .. } => "bump",
        }
    }

    /// ⟨g|e^{−iτH/ℏ}|q,p⟩ evaluated in momentum space.
    pub fn probe_overlap(&self, g: &GaussProbe, label: PhaseLabel, params: PhysicalParams) -> Result<Complex64> {
        let kp = label.p / params.hbar;
        let beta = params.hbar * label.tau / (2.0 * params.mass);
        let s2 = g.width * g.width;
        let norm = (2.0 * s2 / PI).powf(0.25);
        let alpha = Complex64::new(s2, beta);
        let b = Complex64::new(2.0 * s2 * g.wavenumber, g.center - label.q);
        let gamma = Complex64::new(-s2 * g.wavenumber * g.wavenumber, -g.wavenumber * g.center);
        match *self {
            FreeFamily::Window { k0, k1 } => {
                let c = 1.0 / (k1 - k0).sqrt();
                Ok(gaussian_segment_c(alpha, b, gamma, k0 + kp, k1 + kp) * (norm * c))
            }
            FreeFamily::Gaussian { kbar, a } => {
                let big_k = kbar + kp;
                let alpha = alpha + a;
                let b = b + 2.0 * a * big_k;
                let gamma = gamma - a * big_k * big_k;
                let ca = (2.0 * a / PI).powf(0.25);
                Ok((b * b / (alpha * 4.0) + gamma).exp() * (Complex64::new(PI, 0.0) / alpha).sqrt() * (norm * ca))
            }
            FreeFamily::Bump { k0, k1 } => {
                let w = BumpWeight::new(k0, k1);
                let f = |k: f64| {
                    let kk = k + kp;
                    (-alpha * kk * kk + b * kk + gamma).exp() * w.eval(k)
                };
                let pieces = k_pieces(k1 - k0, (g.center - label.q).abs() + 2.0 * beta.abs() * (k0.abs().max(k1.abs()) + kp.abs()));
                let breaks: Vec<f64> = (1..pieces).map(|i| k0 + (k1 - k0) * i as f64 / pieces as f64).collect();
                let r = integrate_with(&f, k0, k1, &breaks, &QuadConfig::abs(1e-14).rel(1e-13))?;
                Ok(r.require()?.value * norm)
            }
        }
    }
}

fn k_pieces(width: f64, x: f64) -> usize {
    ((width * x / (2.0 * PI)).ceil() as usize).clamp(4, 20000)
}

/// Ψ(x) = C[e^{ik₁x} − e^{ik₀x}]/(i√(2π) x), written as 2C e^{ik_c x} sin(Δx)/(√(2π) x).
pub fn window_fiducial(k0: f64, k1: f64) -> Result<StateEvaluator> {
    let w = WindowFiducialParams::new(k0, k1)?;
    let (kc, d) = (w.mid(), w.half_width());
    let pre = 2.0 * w.c / SQRT_2PI;
    let amp = move |x: f64| {
        let (s, ds) = sinc_pair(d, x);
        let ph = Complex64::from_polar(pre, kc * x);
        (ph * s, ph * Complex64::new(ds, kc * s))
    };
    let (left, right) = window_tails(w, 0.0, 0.0, 0.0);
    Ok(StateEvaluator::new(amp, vec![0.0], (-20.0, 20.0))
        .with_tails(left, right)
        .with_band(Band::Global { lo: k0, hi: k1 }))
}

/// (sin(Δx)/x, d/dx of it); a Taylor series takes over near the removable singularity.
fn sinc_pair(d: f64, x: f64) -> (f64, f64) {
    let t = d * x;
    if t.abs() < 1e-2 {
        let t2 = t * t;
        let s = d * (1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0)));
        let ds = d * d * t * (-1.0 / 3.0 + t2 / 30.0 * (1.0 - t2 / 28.0 * (1.0 - t2 / 54.0)));
        (s, ds)
    } else {
        let (sn, cs) = t.sin_cos();
        (sn / x, (t * cs - sn) / (x * x))
    }
}

/// Ψ(x) = (C_A/√(2A)) exp(−x²/(4A) + ik̄x).
pub fn gaussian_fiducial(kbar: f64, a: f64) -> Result<StateEvaluator> {
    let g = GaussianFiducialParams::new(kbar, a)?;
    Ok(GaussProbe::new(0.0, a.sqrt(), g.kbar)
        .evaluator()
        .with_band(Band::Global {
            lo: kbar - 9.0 / a.sqrt(),
            hi: kbar + 9.0 / a.sqrt(),
        }))
}

pub fn coherent_state(fiducial: &StateEvaluator, label: PhaseLabel, params: PhysicalParams) -> StateEvaluator {
    displace(fiducial, label, params)
}

/// Endpoint expansion of ∫^{K} e^{iku − iβk²} dk for |u − 2βK| ≫ √|β|:
/// e^{i(Ku − βK²)} Σₙ cₙ g^{−2n−1}, g = u − 2βK.
fn endpoint_series(beta: f64, g: Complex64) -> (Complex64, Complex64) {
    let inv = 1.0 / g;
    let inv2 = inv * inv;
    let mut c = Complex64::new(0.0, -1.0);
    let mut pw = inv;
    let mut val = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for n in 0..200 {
        let term = c * pw;
        let size = term.norm();
        if size > last {
            break;
        }
        val += term;
        der += term * inv * (-(2 * n + 1) as f64);
        if size <= 1e-18 * val.norm() || beta == 0.0 {
            break;
        }
        last = size;
        c *= Complex64::new(0.0, 2.0 * beta * (2 * n + 1) as f64);
        pw *= inv2;
    }
    (val, der)
}

struct WindowTail {
    terms: Vec<TailTerm>,
    consts: Vec<Complex64>,
    shifts: Vec<f64>,
    beta: f64,
    side: f64,
}

impl TailEnvelope for WindowTail {
    fn terms(&self) -> &[TailTerm] {
        &self.terms
    }

    fn eval(&self, y: Complex64, vals: &mut [Complex64], ders: &mut [Complex64]) {
        for j in 0..self.terms.len() {
            let g = y * self.side - self.shifts[j];
            let (v, d) = endpoint_series(self.beta, g);
            vals[j] = self.consts[j] * v;
            ders[j] = self.consts[j] * d * self.side;
        }
    }
}

fn window_tails(w: WindowFiducialParams, q: f64, kp: f64, beta: f64) -> (Tail, Tail) {
    let ks = [w.k1 + kp, w.k0 + kp];
    let signs = [1.0, -1.0];
    let make = |side: f64| {
        let mut terms = Vec::new();
        let mut consts = Vec::new();
        let mut shifts = Vec::new();
        for (k, s) in ks.iter().zip(signs) {
            terms.push(TailTerm { quad: 0.0, lin: side * k });
            consts.push(Complex64::from_polar(s * w.c / SQRT_2PI, -k * q - beta * k * k));
            shifts.push(q + 2.0 * beta * k);
        }
        Tail::Oscillatory(Arc::new(WindowTail {
            terms,
            consts,
            shifts,
            beta,
            side,
        }))
    };
    (make(-1.0), make(1.0))
}

/// Value and derivative of the evolved window at x by the closed form, with
/// a k-quadrature fallback; the flag reports whether the fallback ran.
pub fn window_evolution_point(
    k0: f64,
    k1: f64,
    label: PhaseLabel,
    tau: f64,
    params: PhysicalParams,
    x: f64,
) -> Result<(Complex64, Complex64, bool)> {
    let w = WindowFiducialParams::new(k0, k1)?;
    let kp = label.p / params.hbar;
    let beta = params.hbar * tau / (2.0 * params.mass);
    if beta == 0.0 {
        let (v, d) = coherent_state(&window_fiducial(k0, k1)?, label, params).eval(x);
        return Ok((v, d, false));
    }
    let (v, d) = window_closed_form(w, kp, label.q, beta, x);
    if v.is_finite() && d.is_finite() {
        return Ok((v, d, false));
    }
    let (v, d) = window_kquad(k0, k1, label, tau, params, x)?;
    Ok((v, d, true))
}

fn window_closed_form(w: WindowFiducialParams, kp: f64, q: f64, beta: f64, x: f64) -> (Complex64, Complex64) {
    let alpha = Complex64::new(0.0, beta);
    let b = Complex64::new(0.0, x - q);
    let zero = Complex64::new(0.0, 0.0);
    let (a, bb) = (w.k0 + kp, w.k1 + kp);
    let pre = w.c / SQRT_2PI;
    let v = gaussian_segment_c(alpha, b, zero, a, bb) * pre;
    let d = gaussian_segment_k(alpha, b, zero, a, bb) * Complex64::new(0.0, pre);
    (v, d)
}

/// Oracle: C/√(2π) ∫_{k₀+p/ℏ}^{k₁+p/ℏ} e^{ik(x−q) − iℏτk²/2m} dk by adaptive quadrature.
pub fn window_kquad(
    k0: f64,
    k1: f64,
    label: PhaseLabel,
    tau: f64,
    params: PhysicalParams,
    x: f64,
) -> Result<(Complex64, Complex64)> {
    let w = WindowFiducialParams::new(k0, k1)?;
    let kp = label.p / params.hbar;
    let beta = params.hbar * tau / (2.0 * params.mass);
    let (a, b) = (k0 + kp, k1 + kp);
    let u = x - label.q;
    let phase = |k: f64| Complex64::from_polar(1.0, k * u - beta * k * k);
    let span = (u.abs() + 2.0 * beta.abs() * a.abs().max(b.abs())) * (b - a);
    let pieces = ((span / 3.0).ceil() as usize).clamp(4, 100_000);
    let breaks: Vec<f64> = (1..pieces).map(|i| a + (b - a) * i as f64 / pieces as f64).collect();
    let cfg = QuadConfig::abs(1e-14).rel(1e-12);
    let v = integrate_with(&phase, a, b, &breaks, &cfg)?.require()?.value;
    let d = integrate_with(&|k: f64| phase(k) * Complex64::new(0.0, k), a, b, &breaks, &cfg)?.require()?.value;
    let pre = w.c / SQRT_2PI;
    Ok((v * pre, d * pre))
}

/// e^{−iτH/ℏ} applied to the window coherent state |q,p⟩, closed form.
pub fn evolve_window(k0: f64, k1: f64, label: PhaseLabel, tau: f64, params: PhysicalParams) -> Result<StateEvaluator> {
    params.validate()?;
    let w = WindowFiducialParams::new(k0, k1)?;
    if !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite tau {tau}")));
    }
    let kp = label.p / params.hbar;
    let beta = params.hbar * tau / (2.0 * params.mass);
    if beta == 0.0 {
        return Ok(coherent_state(&window_fiducial(k0, k1)?, label, params));
    }
    let q = label.q;
    let kmax = (k0 + kp).abs().max((k1 + kp).abs());
    let half = 2.0 * beta.abs() * kmax + 40.0 * beta.abs().sqrt() + 20.0;
    let amp = move |x: f64| {
        let (v, d) = window_closed_form(w, kp, q, beta, x);
        if v.is_finite() && d.is_finite() {
            (v, d)
        } else {
            window_kquad(k0, k1, label, tau, params, x).unwrap_or((v, d))
        }
    };
    let hints = vec![q + 2.0 * beta * (k0 + kp), q + 2.0 * beta * (k1 + kp)];
    let (left, right) = window_tails(w, q, kp, beta);
    Ok(StateEvaluator::new(amp, hints, (q - half, q + half))
        .with_tails(left, right)
        .with_band(Band::Global { lo: k0 + kp, hi: k1 + kp }))
}

/// e^{−iτH/ℏ}|q,p⟩ for the Gaussian family: a complex Gaussian in x.
pub fn evolve_gaussian(kbar: f64, a: f64, label: PhaseLabel, tau: f64, params: PhysicalParams) -> Result<StateEvaluator> {
    params.validate()?;
    let g = GaussianFiducialParams::new(kbar, a)?;
    let kp = label.p / params.hbar;
    let beta = params.hbar * tau / (2.0 * params.mass);
    if beta == 0.0 {
        return Ok(coherent_state(&gaussian_fiducial(kbar, a)?, label, params));
    }
    let big_k = kbar + kp;
    let q = label.q;
    let alpha = Complex64::new(a, beta);
    let pre = g.c_a / SQRT_2PI * (Complex64::new(PI, 0.0) / alpha).sqrt();
    let amp = move |x: f64| {
        let b = Complex64::new(2.0 * a * big_k, x - q);
        let v = pre * (b * b / (alpha * 4.0) - a * big_k * big_k).exp();
        (v, v * Complex64::i() * b / (alpha * 2.0))
    };
    let center = q + 2.0 * beta * big_k;
    let sigma = (a + beta * beta / a).sqrt();
    let r = 13.0 * sigma;
    Ok(StateEvaluator::new(amp, vec![center], (center - r, center + r))
        .with_tails(Tail::Negligible, Tail::Negligible)
        .with_band(Band::Global {
            lo: big_k - 9.0 / a.sqrt(),
            hi: big_k + 9.0 / a.sqrt(),
        }))
}

/// exp[−(k₁−k)⁻² − (k−k₀)⁻²] on (k₀, k₁), rescaled so its peak is near 1.
#[derive(Debug, Clone, Copy)]
struct BumpWeight {
    k0: f64,
    k1: f64,
    floor: f64,
    c: f64,
}

fn bump_cache() -> &'static Mutex<HashMap<(u64, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl BumpWeight {
    fn new(k0: f64, k1: f64) -> Self {
        let d = 0.5 * (k1 - k0);
        let floor = 2.0 / (d * d);
        let mut w = BumpWeight { k0, k1, floor, c: 1.0 };
        let key = (k0.to_bits(), k1.to_bits());
        let cached = bump_cache().lock().ok().and_then(|m| m.get(&key).copied());
        w.c = match cached {
            Some(c) => c,
            None => {
                let f = |k: f64| Complex64::new(w.raw(k).powi(2), 0.0);
                let breaks: Vec<f64> = (1..16).map(|i| k0 + (k1 - k0) * i as f64 / 16.0).collect();
                let n2 = integrate_with(&f, k0, k1, &breaks, &QuadConfig::abs(0.0).rel(1e-14)).map(|r| r.value.re).unwrap_or(f64::NAN);
                let c = 1.0 / n2.sqrt();
                if let Ok(mut m) = bump_cache().lock() {
                    m.insert(key, c);
                }
                c
            }
        };
        w
    }

    fn raw(&self, k: f64) -> f64 {
        if k <= self.k0 || k >= self.k1 {
            return 0.0;
        }
        let (u, v) = (self.k1 - k, k - self.k0);
        (-(1.0 / (u * u) + 1.0 / (v * v) - self.floor)).exp()
    }

    /// Normalized momentum-space amplitude.
    fn eval(&self, k: f64) -> f64 {
        self.c * self.raw(k)
    }
}

fn bump_moments(k0: f64, k1: f64) -> (f64, f64) {
    let w = BumpWeight::new(k0, k1);
    let cfg = QuadConfig::abs(1e-15).rel(1e-13);
    let breaks: Vec<f64> = (1..16).map(|i| k0 + (k1 - k0) * i as f64 / 16.0).collect();
    let m = |n: i32| {
        integrate_with(&|k: f64| Complex64::new(w.eval(k).powi(2) * k.powi(n), 0.0), k0, k1, &breaks, &cfg)
            .map(|r| r.value.re)
            .unwrap_or(f64::NAN)
    };
    let mean = m(1);
    (mean, m(2) - mean * mean)
}

/// Reach beyond which the bump state is below double precision; the
/// transform of the weight decays roughly like exp(−c·(Δ²|x|)^{2/3}).
fn bump_reach(d: f64) -> f64 {
    220.0 / d.powf(1.5)
}

/// Trapezoid sum over the weight's support. The weight vanishes to all
/// orders at both ends, so the only error is aliasing from x ± 2π/h, which
/// the node count pushes beyond the state's support.
fn bump_nodes(w: BumpWeight, span: f64) -> (Vec<f64>, Vec<f64>) {
    let n = (((w.k1 - w.k0) * 1.25 * span / (2.0 * PI)).ceil() as usize).max(64);
    let h = (w.k1 - w.k0) / n as f64;
    let ks: Vec<f64> = (1..n).map(|i| w.k0 + h * i as f64).collect();
    let ws: Vec<f64> = ks.iter().map(|&k| w.eval(k) * h / SQRT_2PI).collect();
    (ks, ws)
}

/// Fiducial with the compactly supported smooth weight exp[−(k₁−k)⁻² − (k−k₀)⁻²];
/// amplitude by k-quadrature at every x.
pub fn bump_fiducial(k0: f64, k1: f64) -> Result<StateEvaluator> {
    evolve_bump(k0, k1, PhaseLabel::default(), 0.0, PhysicalParams::default())
}

pub fn evolve_bump(k0: f64, k1: f64, label: PhaseLabel, tau: f64, params: PhysicalParams) -> Result<StateEvaluator> {
    WindowFiducialParams::new(k0, k1)?;
    params.validate()?;
    let w = BumpWeight::new(k0, k1);
    if !w.c.is_finite() {
        return Err(Error::NonFinite { at: k0 });
    }
    let kp = label.p / params.hbar;
    let beta = params.hbar * tau / (2.0 * params.mass);
    let q = label.q;
    let d = 0.5 * (k1 - k0);
    let kmax = (k0 + kp).abs().max((k1 + kp).abs());
    let center = q + beta * (k0 + k1 + 2.0 * kp);
    let half = 2.0 * beta.abs() * kmax + bump_reach(d);
    let (ks, ws) = bump_nodes(w, 2.0 * half + (center - q).abs());
    let nodes = Arc::new((ks, ws));
    let amp = move |x: f64| {
        let u = x - q;
        let mut v = Complex64::new(0.0, 0.0);
        let mut dv = v;
        for (&k, &wt) in nodes.0.iter().zip(&nodes.1) {
            let kk = k + kp;
            let e = Complex64::from_polar(wt, kk * u - beta * kk * kk);
            v += e;
            dv += e * kk;
        }
        (v, dv * Complex64::i())
    };
    Ok(StateEvaluator::new(amp, vec![center], (center - half, center + half))
        .with_tails(Tail::Negligible, Tail::Negligible)
        .with_band(Band::Global { lo: k0 + kp, hi: k1 + kp }))
}

/// Leading-order content of the temporal-stability statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPrediction {
    pub leading_phase: f64,
    pub shifted_label: PhaseLabel,
    pub remainder_norm_sq: f64,
    pub order_tag: OrderTag,
    /// a²·Var(k) with a = ℏτk̄/m, the leading behaviour of the phase-minimized deviation.
    pub phase_minimized_leading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderTag {
    #[serde(rename = "O(l)")]
    Ell,
    #[serde(rename = "O(Delta)")]
    Delta,
    #[serde(rename = "O(1/A)")]
    InverseA,
}

/// Phase-minimized distance between the evolved state and the relabeled one,
/// with the leading-order prediction.
///
/// `ktilde` is the expansion point; `None` picks the window midpoint or k̄.
pub fn stability_deviation(
    family: FreeFamily,
    label: PhaseLabel,
    tau: f64,
    ktilde: Option<f64>,
    params: PhysicalParams,
    tol: f64,
) -> Result<(f64, StabilityPrediction)> {
    let evolved = family.evolved(PhaseLabel::new(label.q, label.p, tau), params)?;
    let shifted_label = PhaseLabel::new(label.q + label.p * tau / params.mass, label.p, tau);
    let shifted = family.coherent(PhaseLabel::qp(shifted_label.q, shifted_label.p), params)?;
    let ov = inner_product(&shifted, &evolved, tol)?;
    let measured = (2.0 - 2.0 * ov.norm()).max(0.0);
    Ok((measured, stability_prediction(family, label, tau, ktilde, params)))
}

pub fn stability_prediction(
    family: FreeFamily,
    label: PhaseLabel,
    tau: f64,
    ktilde: Option<f64>,
    params: PhysicalParams,
) -> StabilityPrediction {
    let (mean, var) = family.wavenumber_moments();
    let kt = ktilde.unwrap_or(mean);
    let (h, m) = (params.hbar, params.mass);
    let leading_phase = tau * (label.p * label.p - h * h * kt * kt) / (2.0 * m * h);
    let a = h * tau * kt / m;
    let a_mean = h * tau * mean / m;
    let shifted_label = PhaseLabel::new(label.q + label.p * tau / m, label.p, tau);
    let (remainder_norm_sq, order_tag) = match family {
        FreeFamily::Gaussian { a: width, .. } => (a * a / width, OrderTag::InverseA),
        FreeFamily::Window { .. } | FreeFamily::Bump { .. } => {
            let ell = mean - kt;
            let tag = if ell == 0.0 { OrderTag::Delta } else { OrderTag::Ell };
            (a * a * (ell * ell + var), tag)
        }
    };
    StabilityPrediction {
        leading_phase,
        shifted_label,
        remainder_norm_sq,
        order_tag,
        phase_minimized_leading: a_mean * a_mean * var,
    }
}

/// ⟨q,p|H|q,p⟩ in closed form; independent of q and τ.
pub fn energy_expectation(family: FreeFamily, label: PhaseLabel, params: PhysicalParams) -> Result<f64> {
    family.validate()?;
    let (h, m, p) = (params.hbar, params.mass, label.p);
    Ok(match family {
        FreeFamily::Window { k0, k1 } => {
            let c2 = 1.0 / (k1 - k0);
            (c2 * h * h * (k1.powi(3) - k0.powi(3)) / 3.0 + h * p * c2 * (k1 * k1 - k0 * k0) + p * p) / (2.0 * m)
        }
        FreeFamily::Gaussian { kbar, a } => {
            h * h * kbar * kbar / (2.0 * m) + h * h / (8.0 * m * a) + h * p * kbar / m + p * p / (2.0 * m)
        }
        FreeFamily::Bump { .. } => {
            let (mean, var) = family.wavenumber_moments();
            ((h * mean + p).powi(2) + h * h * var) / (2.0 * m)
        }
    })
}

/// ⟨P²⟩/2m by x-space quadrature of |ψ′|².
pub fn energy_quadrature(family: FreeFamily, label: PhaseLabel, params: PhysicalParams, tol: f64) -> Result<f64> {
    let psi = family.evolved(label, params)?;
    Ok(moment_p(&psi, 2, params.hbar, tol)? / (2.0 * params.mass))
}

/// (q, p) on the upper root p₊ with ⟨H⟩(p) = ωJ and q = p·cot ω.
pub fn action_invert(family: FreeFamily, j: f64, omega: f64, params: PhysicalParams) -> Result<PhaseLabel> {
    family.validate()?;
    params.validate()?;
    let (h, m) = (params.hbar, params.mass);
    let (lin, quad) = match family {
        FreeFamily::Window { k0, k1 } => {
            let c2 = 1.0 / (k1 - k0);
            let lin = 0.5 * h * c2 * (k1 * k1 - k0 * k0);
            (lin, h * h * c2 * (k1.powi(3) - k0.powi(3)) / 3.0)
        }
        FreeFamily::Gaussian { kbar, a } => (h * kbar, h * h * (kbar * kbar + 1.0 / (4.0 * a))),
        FreeFamily::Bump { .. } => {
            let (mean, var) = family.wavenumber_moments();
            (h * mean, h * h * (mean * mean + var))
        }
    };
    let disc = 2.0 * m * omega * j - quad + lin * lin;
    if !(disc >= 0.0) {
        return Err(Error::BelowGroundAction { discriminant: disc });
    }
    let p = -lin + disc.sqrt();
    let q = if p == 0.0 { 0.0 } else { p / omega.tan() };
    Ok(PhaseLabel::qp(q, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitOperator {
    Identity,
    Hamiltonian,
}

/// One rung of a limit ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    /// Δ for the window ladder, A for the Gaussian one.
    pub parameter: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub rungs: Vec<LadderRung>,
    /// Richardson extrapolation of the last two rungs.
    pub extrapolated: f64,
    /// (ℏk̄+p)²/2m for H, 1 for the identity.
    pub formula_limit: f64,
    /// The stated limit for the window H ladder (p²/2m).
    pub stated_limit: Option<f64>,
}

/// Expectation of the identity or of H along Δ → 0 (window, midpoint k̄ kept
/// fixed) or A → ∞ (Gaussian). `ladder` lists Δ or A values.
pub fn limit_expectations(
    family: FreeFamily,
    label: PhaseLabel,
    op: LimitOperator,
    ladder: &[f64],
    params: PhysicalParams,
) -> Result<LimitReport> {
    if ladder.len() < 2 {
        return Err(Error::InvalidParameter("a limit ladder needs at least two rungs".into()));
    }
    let (h, m, p) = (params.hbar, params.mass, label.p);
    let (center, is_window) = match family {
        FreeFamily::Window { k0, k1 } | FreeFamily::Bump { k0, k1 } => (0.5 * (k0 + k1), true),
        FreeFamily::Gaussian { kbar, .. } => (kbar, false),
    };
    let mut rungs = Vec::new();
    for &s in ladder {
        let fam = if is_window {
            FreeFamily::Window { k0: center - s, k1: center + s }
        } else {
            FreeFamily::Gaussian { kbar: center, a: s }
        };
        let value = match op {
            LimitOperator::Identity => identity_expectation(fam)?,
            LimitOperator::Hamiltonian => energy_expectation(fam, label, params)?,
        };
        rungs.push(LadderRung { parameter: s, value });
    }
    // error ∝ Δ² on the window ladder and ∝ 1/A on the Gaussian one
    let order_var = |s: f64| if is_window { s * s } else { 1.0 / s };
    let n = rungs.len();
    let (r1, r2) = (rungs[n - 2], rungs[n - 1]);
    let (e1, e2) = (order_var(r1.parameter), order_var(r2.parameter));
    let extrapolated = if e1 == e2 {
        r2.value
    } else {
        (e1 * r2.value - e2 * r1.value) / (e1 - e2)
    };
    let (formula_limit, stated_limit) = match op {
        LimitOperator::Identity => (1.0, None),
        LimitOperator::Hamiltonian => {
            let f = (h * center + p).powi(2) / (2.0 * m);
            (f, if is_window { Some(p * p / (2.0 * m)) } else { None })
        }
    };
    Ok(LimitReport {
        rungs,
        extrapolated,
        formula_limit,
        stated_limit,
    })
}

/// ⟨q,p|q,p⟩ = ⟨Ψ|Ψ⟩ from the normalization constants.
fn identity_expectation(family: FreeFamily) -> Result<f64> {
    match family {
        FreeFamily::Window { k0, k1 } => {
            let w = WindowFiducialParams::new(k0, k1)?;
            Ok(w.c * w.c * (k1 - k0))
        }
        FreeFamily::Gaussian { kbar, a } => {
            let g = GaussianFiducialParams::new(kbar, a)?;
            Ok(g.c_a.powi(4) * PI / (2.0 * a))
        }
        FreeFamily::Bump { .. } => Ok(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{moment_q, norm};

    fn fd_check(psi: &StateEvaluator, xs: &[f64]) {
        for &x in xs {
            let h = 1e-5;
            let fd = (psi.amplitude(x + h) - psi.amplitude(x - h)) / (2.0 * h);
            let d = psi.derivative(x);
            assert!((fd - d).norm() <= 1e-6 * d.norm().max(1e-3), "x={x}: {fd} vs {d}");
        }
    }

    #[test]
    fn window_constants_and_origin() {
        let w = WindowFiducialParams::new(0.0, 2.0).unwrap();
        assert!((w.c - 0.5f64.sqrt()).abs() < 1e-15);
        let psi = window_fiducial(0.0, 2.0).unwrap();
        assert!((psi.amplitude(0.0).re - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!(matches!(window_fiducial(1.0, 1.0), Err(Error::InvalidWindow { .. })));
    }

    #[test]
    fn window_series_branch_is_seamless() {
        let d = 1.0;
        let x = 0.99e-2;
        let (s, ds) = sinc_pair(d, x);
        let t = d * x;
        assert!((s - t.sin() / x).abs() < 1e-15);
        assert!((ds - (t * t.cos() - t.sin()) / (x * x)).abs() < 1e-11);
        let psi = window_fiducial(-0.3, 1.7).unwrap();
        fd_check(&psi, &[-3.1, -0.2, 0.004, 0.5, 7.7]);
    }

    #[test]
    fn window_norm() {
        let psi = window_fiducial(0.0, 2.0).unwrap();
        assert!((norm(&psi, 1e-11).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn window_q_moments_outside_domain() {
        let psi = window_fiducial(0.0, 2.0).unwrap();
        assert!(matches!(moment_q(&psi, 2, 1e-10), Err(Error::DomainError(_))));
    }

    #[test]
    fn gaussian_fiducial_examples() {
        let g = GaussianFiducialParams::new(0.0, PI / 2.0).unwrap();
        assert!((g.c_a - 1.0).abs() < 1e-15);
        let psi = gaussian_fiducial(1.0, 10.0).unwrap();
        assert!((psi.amplitude(0.0).norm_sqr() - 0.1261566261010080).abs() < 1e-12);
        assert!((norm(&psi, 1e-12).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn evolve_window_matches_kquad() {
        let p = PhysicalParams::default();
        let l = PhaseLabel::qp(0.0, 0.0);
        let (v, _, fb) = window_evolution_point(0.0, 1.0, l, 0.3, p, 0.7).unwrap();
        let (o, _) = window_kquad(0.0, 1.0, l, 0.3, p, 0.7).unwrap();
        assert!(!fb);
        assert!((v - o).norm() < 1e-12);
    }

    #[test]
    fn evolve_window_derivative_and_tails() {
        let p = PhysicalParams::default();
        let psi = evolve_window(-0.5, 1.5, PhaseLabel::qp(0.4, 0.3), 1.3, p).unwrap();
        fd_check(&psi, &[-5.0, 0.0, 2.2, 30.0]);
        let (lo, hi) = psi.core();
        let Tail::Oscillatory(env) = psi.right_tail() else { panic!() };
        let mut vals = vec![Complex64::new(0.0, 0.0); 2];
        let mut ders = vals.clone();
        let y = hi + 3.0;
        env.eval(Complex64::new(y, 0.0), &mut vals, &mut ders);
        let model: Complex64 = env
            .terms()
            .iter()
            .zip(&vals)
            .map(|(t, v)| Complex64::from_polar(1.0, t.quad * y * y + t.lin * y) * v)
            .sum();
        assert!((model - psi.amplitude(y)).norm() < 1e-12);
        let Tail::Oscillatory(envl) = psi.left_tail() else { panic!() };
        let y = -lo + 3.0;
        envl.eval(Complex64::new(y, 0.0), &mut vals, &mut ders);
        let model: Complex64 = envl
            .terms()
            .iter()
            .zip(&vals)
            .map(|(t, v)| Complex64::from_polar(1.0, t.quad * y * y + t.lin * y) * v)
            .sum();
        assert!((model - psi.amplitude(-y)).norm() < 1e-12);
    }

    #[test]
    fn evolved_window_norm() {
        let psi = evolve_window(0.0, 1.0, PhaseLabel::qp(0.0, 0.0), 2.0, PhysicalParams::default()).unwrap();
        assert!((norm(&psi, 1e-11).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn gaussian_spreading() {
        let p = PhysicalParams::default();
        let psi = evolve_gaussian(1.0, 10.0, PhaseLabel::qp(0.0, 0.0), 2.0, p).unwrap();
        let q1 = moment_q(&psi, 1, 1e-11).unwrap();
        let q2 = moment_q(&psi, 2, 1e-11).unwrap();
        assert!((q1 - 2.0).abs() < 1e-9);
        assert!((q2 - q1 * q1 - 10.1).abs() < 1e-8);
        fd_check(&psi, &[-3.0, 2.0, 9.0]);
    }

    #[test]
    fn k_space_overlap_matches_x_space() {
        let p = PhysicalParams::new(0.7, 1.3, 0.0).unwrap();
        let g = GaussProbe::new(0.8, 1.1, 0.6);
        let l = PhaseLabel::new(-0.4, 0.5, 0.9);
        for fam in [FreeFamily::Window { k0: -0.2, k1: 1.4 }, FreeFamily::Gaussian { kbar: 0.3, a: 2.0 }] {
            let k = fam.probe_overlap(&g, l, p).unwrap();
            let x = inner_product(&g.evaluator(), &fam.evolved(l, p).unwrap(), 1e-12).unwrap();
            assert!((k - x).norm() < 1e-10, "{fam:?}: {k} vs {x}");
        }
    }

    #[test]
    fn stability_gaussian_prediction() {
        let p = PhysicalParams::default();
        let pred = stability_prediction(FreeFamily::Gaussian { kbar: 2.0, a: 100.0 }, PhaseLabel::default(), 1.0, None, p);
        assert!((pred.remainder_norm_sq - 0.04).abs() < 1e-15);
        let pred = stability_prediction(FreeFamily::Gaussian { kbar: 1.3, a: 7.0 }, PhaseLabel::qp(0.0, 1.3), 0.8, None, p);
        assert!(pred.leading_phase.abs() < 1e-12);
    }

    #[test]
    fn action_window_third() {
        let p = PhysicalParams::new(1.0, 0.5, 0.0).unwrap();
        let fam = FreeFamily::Window { k0: 0.0, k1: 1.0 };
        let l = action_invert(fam, 1.0 / 3.0, 1.0, p).unwrap();
        assert!(l.p.abs() < 1e-15 && l.q.abs() < 1e-15);
        assert!(matches!(action_invert(fam, 0.0, 1.0, p), Err(Error::BelowGroundAction { .. })));
    }

    #[test]
    fn window_energy_third() {
        let p = PhysicalParams::new(1.0, 0.5, 0.0).unwrap();
        let e = energy_expectation(FreeFamily::Window { k0: 0.0, k1: 1.0 }, PhaseLabel::default(), p).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bump_symmetric_and_smooth() {
        let psi = bump_fiducial(-1.0, 1.0).unwrap();
        for x in [0.3, 1.7, 4.2] {
            assert!((psi.amplitude(x).norm() - psi.amplitude(-x).norm()).abs() < 1e-13);
        }
        fd_check(&psi, &[0.2, 2.5]);
    }

    #[test]
    fn bump_trapezoid_matches_adaptive() {
        let (k0, k1) = (-0.3, 0.9);
        let w = BumpWeight::new(k0, k1);
        let p = PhysicalParams::default();
        let psi = evolve_bump(k0, k1, PhaseLabel::qp(0.5, 0.2), 0.6, p).unwrap();
        for x in [-4.0, 0.0, 1.3, 25.0] {
            let f = |k: f64| {
                let kk = k + 0.2;
                Complex64::from_polar(w.eval(k), kk * (x - 0.5) - 0.3 * kk * kk)
            };
            let r = integrate_with(&f, k0, k1, &[0.0, 0.3, 0.6], &QuadConfig::abs(1e-15).rel(1e-14)).unwrap();
            assert!((r.value / SQRT_2PI - psi.amplitude(x)).norm() < 1e-13);
        }
    }
}
