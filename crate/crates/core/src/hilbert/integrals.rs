use super::state::{StateEvaluator, Tail, TailEnvelope};
use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_segments_par, integrate_to_infinity, integrate_with, QuadConfig, QuadResult};
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Value,
    Derivative,
}

const REL_TOL: f64 = 1e-12;

fn pick(v: (Complex64, Complex64), part: Part) -> Complex64 {
    match part {
        Part::Value => v.0,
        Part::Derivative => v.1,
    }
}

fn cfg(tol: f64) -> QuadConfig {
    QuadConfig::abs(tol).rel(REL_TOL).budget(1 << 17)
}

/// ∫ conj(φ_a(x)) ψ_b(x) xⁿ dx over ℝ, where the subscripts select the
/// amplitude or its derivative.
pub fn overlap_integral(
    phi: &StateEvaluator,
    a: Part,
    psi: &StateEvaluator,
    b: Part,
    xpow: u32,
    tol: f64,
) -> Result<QuadResult> {
    let (l1, r1) = phi.core();
    let (l2, r2) = psi.core();
    let lo = l1.min(l2);
    let hi = r1.max(r2);
    let n = xpow as i32;
    let f = |x: f64| pick(phi.eval(x), a).conj() * pick(psi.eval(x), b) * x.powi(n);

    let mut edges: Vec<f64> = vec![lo, hi];
    let width = hi - lo;
    let pieces = ((width / 0.5).ceil() as usize).clamp(1, 48);
    for i in 1..pieces {
        edges.push(lo + width * i as f64 / pieces as f64);
    }
    edges.extend(phi.hints().iter().chain(psi.hints()).copied().filter(|h| *h > lo && *h < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * width.max(1.0));
    let core = integrate_segments_par(&f, &edges, &cfg(0.5 * tol))?;

    let right = tail_side(phi.right_tail(), a, psi.right_tail(), b, hi, 1.0, n, 0.25 * tol, &f)?;
    let left = tail_side(phi.left_tail(), a, psi.left_tail(), b, -lo, -1.0, n, 0.25 * tol, &f)?;
    Ok(core.plus(right).plus(left))
}

struct EnvCache {
    vals: Vec<Complex64>,
    ders: Vec<Complex64>,
}

fn envelope_part(env: &Arc<dyn TailEnvelope>, y: Complex64, side: f64, part: Part, j: usize, c: &mut EnvCache) -> Complex64 {
    env.eval(y, &mut c.vals, &mut c.ders);
    let t = env.terms()[j];
    match part {
        Part::Value => c.vals[j],
        Part::Derivative => {
            let i = Complex64::i();
            (i * (2.0 * t.quad * y + t.lin) * c.vals[j] + c.ders[j]) * side
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn tail_side<F: Fn(f64) -> Complex64>(
    tp: &Tail,
    a: Part,
    tq: &Tail,
    b: Part,
    start: f64,
    side: f64,
    n: i32,
    tol: f64,
    direct: &F,
) -> Result<QuadResult> {
    match (tp, tq) {
        (Tail::Negligible, _) | (_, Tail::Negligible) => Ok(QuadResult::zero()),
        (Tail::Oscillatory(ep), Tail::Oscillatory(eq)) => {
            let np = ep.terms().len();
            let nq = eq.terms().len();
            let reach = ep.reach().min(eq.reach());
            let per = tol / (np * nq).max(1) as f64;
            let mut acc = QuadResult::zero();
            for j in 0..np {
                for k in 0..nq {
                    let tj = ep.terms()[j];
                    let tk = eq.terms()[k];
                    let m = tk.quad - tj.quad;
                    let nn = tk.lin - tj.lin;
                    let bfun = |y: Complex64| {
                        let mut c1 = EnvCache {
                            vals: vec![Complex64::new(0.0, 0.0); np],
                            ders: vec![Complex64::new(0.0, 0.0); np],
                        };
                        let mut c2 = EnvCache {
                            vals: vec![Complex64::new(0.0, 0.0); nq],
                            ders: vec![Complex64::new(0.0, 0.0); nq],
                        };
                        let u = envelope_part(ep, y.conj(), side, a, j, &mut c1).conj();
                        let v = envelope_part(eq, y, side, b, k, &mut c2);
                        u * v * (y * side).powi(n)
                    };
                    acc = acc.plus(pair_integral(m, nn, start, reach, &bfun, per)?);
                }
            }
            Ok(acc)
        }
        _ => {
            let g = |y: f64| direct(side * y);
            integrate_to_infinity(&g, start, 1.0, start.abs().max(1.0), &[], &cfg(tol))
        }
    }
}

/// ∫_Y^∞ e^{i(M y² + N y)} B(y) dy along a contour where the phase decays.
pub(crate) fn pair_integral<B: Fn(Complex64) -> Complex64>(
    m: f64,
    n: f64,
    start: f64,
    reach: f64,
    b: &B,
    tol: f64,
) -> Result<QuadResult> {
    let i = Complex64::i();
    let c = cfg(tol);
    if m == 0.0 && n == 0.0 {
        // y = Y + D(e^u − 1): smooth in u for envelopes varying on the scale of y
        let d = start.abs().max(1.0);
        let g = |u: f64| {
            let e = u.exp();
            b(Complex64::new(start + d * (e - 1.0), 0.0)) * (d * e)
        };
        if reach.is_finite() {
            let span = reach - start;
            if span <= 0.0 {
                return Ok(QuadResult::zero());
            }
            let umax = (1.0 + span / d).ln();
            let breaks: Vec<f64> = (1..(umax.ceil() as usize)).map(|k| k as f64).collect();
            return integrate_with(&g, 0.0, umax, &breaks, &c);
        }
        let h = |y: f64| b(Complex64::new(y, 0.0));
        return integrate_to_infinity(&h, start, 1.0, d, &[], &c);
    }
    if m == 0.0 {
        let s = n.signum();
        let w = n.abs();
        let base = Complex64::from_polar(1.0, n * start);
        let g = |r: f64| {
            let y = Complex64::new(start, s * r / w);
            base * (-r).exp() * b(y) * (i * s / w)
        };
        let scale = (w * start.abs().max(1.0)).min(1.0);
        return integrate_to_infinity(&g, 0.0, 1.0, scale, &[], &c);
    }
    let am = m.abs();
    let y0 = start.max(n.abs() / am).max(2.0 / am.sqrt());
    let mut acc = QuadResult::zero();
    if y0 > start {
        let g = |y: f64| Complex64::from_polar(1.0, m * y * y + n * y) * b(Complex64::new(y, 0.0));
        let k_hi = 2.0 * am * y0 + n.abs();
        let pieces = (((y0 - start) * k_hi / 6.0).ceil() as usize).clamp(1, 4096);
        let breaks: Vec<f64> = (1..pieces).map(|k| start + (y0 - start) * k as f64 / pieces as f64).collect();
        acc = acc.plus(integrate_with(&g, start, y0, &breaks, &cfg(0.5 * tol))?);
    }
    let alpha = m.signum() * std::f64::consts::FRAC_PI_4;
    let dir = Complex64::from_polar(1.0, alpha);
    let lin = 2.0 * m * y0 + n;
    let base = i * (m * y0 * y0 + n * y0);
    let g = |rho: f64| {
        let y = Complex64::new(y0, 0.0) + dir * rho;
        let ex = base + i * lin * dir * rho + i * m * dir * dir * rho * rho;
        ex.exp() * b(y) * dir
    };
    let decay = lin * m.signum() * std::f64::consts::FRAC_1_SQRT_2;
    let scale = (1.0 / am.sqrt()).min(1.0 / decay.max(1e-300));
    acc = acc.plus(integrate_to_infinity(&g, 0.0, 1.0, scale, &[], &cfg(0.5 * tol))?);
    Ok(acc)
}

/// Dyadic tail diagnosis for ∫ |x|ⁿ |ψ|² dx: panel sums over [2ᵏ, 2ᵏ⁺¹]
/// must eventually decay.
pub fn tail_integrability(psi: &StateEvaluator, n: u32) -> Result<()> {
    let (lo, hi) = psi.core();
    for (tail, start, side) in [(psi.right_tail(), hi, 1.0), (psi.left_tail(), -lo, -1.0)] {
        let sums = match tail {
            Tail::Negligible => continue,
            Tail::Oscillatory(env) => envelope_panels(env, start, n)?,
            Tail::Unknown => {
                let k0 = start.max(1.0).log2().ceil() as i32;
                let mut s = Vec::new();
                for k in k0..k0 + 14 {
                    let (a, b) = (2f64.powi(k), 2f64.powi(k + 1));
                    let f = |y: f64| Complex64::new(psi.amplitude(side * y).norm_sqr() * y.powi(n as i32), 0.0);
                    let pieces = 64;
                    let breaks: Vec<f64> = (1..pieces).map(|i| a + (b - a) * i as f64 / pieces as f64).collect();
                    s.push((k, integrate_with(&f, a, b, &breaks, &QuadConfig::abs(1e-14).rel(1e-8))?.value.re));
                }
                s
            }
        };
        if let Some(msg) = non_decaying(&sums) {
            return Err(Error::DomainError(format!(
                "|x|^{n}|psi|^2 is not integrable on the {} tail: {msg}",
                if side > 0.0 { "right" } else { "left" }
            )));
        }
    }
    Ok(())
}

/// Panel sums indexed by k = log₂ of the panel start. The tail is summable
/// when the sums fall off faster than 1/k; constant, growing or 1/k-like
/// sums are flagged.
fn non_decaying(sums: &[(i32, f64)]) -> Option<String> {
    let max = sums.iter().map(|s| s.1).fold(0.0, f64::max);
    if max == 0.0 || sums.len() < 4 {
        return None;
    }
    let last = &sums[sums.len() - 4..];
    if last.iter().all(|s| s.1 < 1e-30 * max) {
        return None;
    }
    // local power p in s_k ∝ k^{−p}; geometric decay gives p ≫ 1
    let powers: Vec<f64> = last
        .windows(2)
        .map(|w| {
            let (k0, k1) = (w[0].0.max(1) as f64, w[1].0.max(1) as f64);
            -(w[1].1 / w[0].1).ln() / (k1 / k0).ln()
        })
        .collect();
    if powers.iter().all(|p| *p <= 1.1) {
        Some(format!("dyadic panel sums {:?}, local decay powers {:?}", last, powers))
    } else {
        None
    }
}

fn envelope_panels(env: &Arc<dyn TailEnvelope>, start: f64, n: u32) -> Result<Vec<(i32, f64)>> {
    let terms = env.terms().to_vec();
    let nt = terms.len();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for j in 0..nt {
        match groups.iter_mut().find(|g| terms[g[0]] == terms[j]) {
            Some(g) => g.push(j),
            None => groups.push(vec![j]),
        }
    }
    let smooth = |y: f64| {
        let mut vals = vec![Complex64::new(0.0, 0.0); nt];
        let mut ders = vals.clone();
        env.eval(Complex64::new(y, 0.0), &mut vals, &mut ders);
        let mut s = 0.0;
        for g in &groups {
            let a: Complex64 = g.iter().map(|&j| vals[j]).sum();
            s += a.norm_sqr();
        }
        Complex64::new(s * y.powi(n as i32), 0.0)
    };
    let k0 = start.max(1.0).log2().ceil() as i32;
    let reach = env.reach();
    let mut out = Vec::new();
    let k1 = if reach.is_finite() { reach.log2().floor() as i32 } else { k0 + 64 };
    for k in k0..k1.min(k0 + 1100) {
        let (a, b) = (2f64.powi(k), 2f64.powi(k + 1));
        if b > reach {
            break;
        }
        // u = ln y keeps the panel integrand smooth
        let g = |u: f64| {
            let y = u.exp();
            smooth(y) * y
        };
        // a diagnostic: a few digits per panel suffice
        let floor = out.iter().map(|s: &(i32, f64)| s.1).fold(0.0, f64::max) * 1e-12;
        let r = integrate_with(&g, a.ln(), b.ln(), &[], &QuadConfig::abs(floor).rel(1e-6).budget(2000))?;
        out.push((k, r.value.re));
        let max = out.iter().map(|s| s.1).fold(0.0, f64::max);
        if out.len() > 6 && r.value.re < 1e-40 * max {
            break;
        }
    }
    Ok(out)
}

/// ⟨φ|ψ⟩ = ∫ conj(φ) ψ dx.
pub fn inner_product(phi: &StateEvaluator, psi: &StateEvaluator, tol: f64) -> Result<Complex64> {
    Ok(overlap_integral(phi, Part::Value, psi, Part::Value, 0, tol)?.require()?.value)
}

pub fn norm(psi: &StateEvaluator, tol: f64) -> Result<f64> {
    Ok(inner_product(psi, psi, tol)?.re.max(0.0).sqrt())
}

/// ‖s1 − s2‖² = 2 − 2ℜ⟨s1|s2⟩ for unit vectors.
pub fn continuity_modulus(s1: &StateEvaluator, s2: &StateEvaluator, tol: f64) -> Result<f64> {
    for s in [s1, s2] {
        let dev = (norm(s, tol)? - 1.0).abs();
        if dev > 1e-6 {
            return Err(Error::NotNormalized { deviation: dev });
        }
    }
    Ok(2.0 - 2.0 * inner_product(s1, s2, tol)?.re)
}

/// ⟨Qⁿ⟩ = ∫ xⁿ |ψ|² dx, n ∈ {1, 2}.
pub fn moment_q(psi: &StateEvaluator, order: u32, tol: f64) -> Result<f64> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidParameter(format!("moment order {order} not in {{1, 2}}")));
    }
    tail_integrability(psi, order)?;
    Ok(overlap_integral(psi, Part::Value, psi, Part::Value, order, tol)?.require()?.value.re)
}

/// ⟨P⟩ = ℏ ℑ∫ conj(ψ) ψ′ dx and ⟨P²⟩ = ℏ² ∫ |ψ′|² dx.
pub fn moment_p(psi: &StateEvaluator, order: u32, hbar: f64, tol: f64) -> Result<f64> {
    match order {
        1 => Ok(hbar * overlap_integral(psi, Part::Value, psi, Part::Derivative, 0, tol)?.require()?.value.im),
        2 => Ok(hbar * hbar * overlap_integral(psi, Part::Derivative, psi, Part::Derivative, 0, tol)?.require()?.value.re),
        _ => Err(Error::InvalidParameter(format!("moment order {order} not in {{1, 2}}"))),
    }
}
