use super::state::{StateEvaluator, Tail};
use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_segments_par, integrate_with, QuadConfig};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Unit Gaussian (2πs²)^{−1/4} exp(−(x−c)²/(4s²) + iκx).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussProbe {
    pub center: f64,
    pub width: f64,
    pub wavenumber: f64,
}

impl GaussProbe {
    pub fn new(center: f64, width: f64, wavenumber: f64) -> Self {
        GaussProbe { center, width, wavenumber }
    }

    fn norm_const(&self) -> f64 {
        (2.0 * PI * self.width * self.width).powf(-0.25)
    }

    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let s2 = self.width * self.width;
        let d = x - self.center;
        let v = Complex64::new(-d * d / (4.0 * s2), self.wavenumber * x).exp() * self.norm_const();
        (v, v * Complex64::new(-d / (2.0 * s2), self.wavenumber))
    }

    pub fn evaluator(&self) -> StateEvaluator {
        let g = *self;
        let r = 12.0 * self.width;
        StateEvaluator::new(move |x| g.eval(x), vec![self.center], (self.center - r, self.center + r))
            .with_tails(Tail::Negligible, Tail::Negligible)
    }

    /// ⟨self|other⟩ in closed form.
    pub fn inner(&self, other: &GaussProbe) -> Complex64 {
        let (s1, s2) = (self.width * self.width, other.width * other.width);
        let alpha = 1.0 / (4.0 * s1) + 1.0 / (4.0 * s2);
        let beta = Complex64::new(
            self.center / (2.0 * s1) + other.center / (2.0 * s2),
            other.wavenumber - self.wavenumber,
        );
        let gamma = -self.center * self.center / (4.0 * s1) - other.center * other.center / (4.0 * s2);
        (beta * beta / (4.0 * alpha) + gamma).exp() * (PI / alpha).sqrt() * self.norm_const() * other.norm_const()
    }

    /// The probe g′ with ⟨g|U(q, k)ψ⟩ = phase·⟨g′|ψ⟩ for U(q,k)ψ(x) = e^{ik(x−q)}ψ(x−q).
    pub fn pulled_back(&self, q: f64, k: f64) -> (Complex64, GaussProbe) {
        let g = GaussProbe::new(self.center - q, self.width, self.wavenumber - k);
        (Complex64::from_polar(1.0, -self.wavenumber * q), g)
    }
}

/// Finite superposition Σ cᵢ gᵢ of Gaussian probes.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub parts: Vec<(Complex64, GaussProbe)>,
}

impl Probe {
    pub fn gaussian(center: f64, width: f64, wavenumber: f64) -> Self {
        Probe {
            parts: vec![(Complex64::new(1.0, 0.0), GaussProbe::new(center, width, wavenumber))],
        }
    }

    /// Normalized (g(x−d) ± g(x+d)); the minus sign gives an odd state.
    pub fn pair(d: f64, width: f64, odd: bool) -> Self {
        let a = GaussProbe::new(d, width, 0.0);
        let b = GaussProbe::new(-d, width, 0.0);
        let sign = if odd { -1.0 } else { 1.0 };
        let n2 = 2.0 + 2.0 * sign * a.inner(&b).re;
        let c = 1.0 / n2.sqrt();
        Probe {
            parts: vec![(Complex64::new(c, 0.0), a), (Complex64::new(sign * c, 0.0), b)],
        }
    }

    pub fn inner(&self, other: &Probe) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (ca, a) in &self.parts {
            for (cb, b) in &other.parts {
                s += ca.conj() * cb * a.inner(b);
            }
        }
        s
    }

    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = v;
        for (c, g) in &self.parts {
            let (gv, gd) = g.eval(x);
            v += c * gv;
            d += c * gd;
        }
        (v, d)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }
}

/// ⟨g|ψ⟩ for one Gaussian probe.
///
/// Probes whose wavenumber sits far outside the state's local band over the
/// probe support return zero. Probes lying wholly inside a modelled tail are
/// integrated along the steepest-descent line of each tail term.
pub fn probe_overlap(g: &GaussProbe, psi: &StateEvaluator, tol: f64) -> Result<Complex64> {
    let s = g.width;
    let (xlo, xhi) = (g.center - 12.0 * s, g.center + 12.0 * s);
    if let Some((lo, hi)) = psi.band().over(xlo, xhi) {
        let m = 9.0 / s;
        if g.wavenumber < lo - m || g.wavenumber > hi + m {
            return Ok(Complex64::new(0.0, 0.0));
        }
    }
    let (left, right) = psi.core();
    if xlo >= right {
        if let Tail::Oscillatory(_) = psi.right_tail() {
            return saddle_overlap(g, psi.right_tail(), 1.0);
        }
        if let Tail::Negligible = psi.right_tail() {
            return Ok(Complex64::new(0.0, 0.0));
        }
    }
    if xhi <= left {
        if let Tail::Oscillatory(_) = psi.left_tail() {
            return saddle_overlap(g, psi.left_tail(), -1.0);
        }
        if let Tail::Negligible = psi.left_tail() {
            return Ok(Complex64::new(0.0, 0.0));
        }
    }
    let kmax = match psi.band().over(xlo, xhi) {
        Some((lo, hi)) => (lo - g.wavenumber).abs().max((hi - g.wavenumber).abs()),
        None => 1.0 / s,
    };
    let pieces = ((24.0 * s * (kmax + 1.0 / s) / 6.0).ceil() as usize).clamp(4, 4096);
    let mut edges: Vec<f64> = (0..=pieces).map(|i| xlo + (xhi - xlo) * i as f64 / pieces as f64).collect();
    edges.extend(psi.hints().iter().copied().filter(|h| *h > xlo && *h < xhi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let f = |x: f64| g.eval(x).0.conj() * psi.amplitude(x);
    let cfg = QuadConfig::abs(tol).rel(1e-12).budget(1 << 18);
    let r = if edges.len() > 16 {
        integrate_segments_par(&f, &edges, &cfg)?
    } else {
        integrate_with(&f, xlo, xhi, &edges, &cfg)?
    };
    Ok(r.require()?.value)
}

fn saddle_overlap(g: &GaussProbe, tail: &Tail, side: f64) -> Result<Complex64> {
    let Tail::Oscillatory(env) = tail else {
        unreachable!()
    };
    let s2 = g.width * g.width;
    let (c, kap) = (side * g.center, side * g.wavenumber);
    let n = g.norm_const();
    let terms = env.terms().to_vec();
    let nt = terms.len();
    let mut total = Complex64::new(0.0, 0.0);
    for (j, t) in terms.iter().enumerate() {
        let a = Complex64::new(1.0 / (4.0 * s2), -t.quad);
        let b = Complex64::new(c / (2.0 * s2), t.lin - kap);
        let c0 = -c * c / (4.0 * s2);
        let ystar = b / (2.0 * a);
        let estar = b * b / (4.0 * a) + c0;
        if estar.re < -60.0 {
            continue;
        }
        let theta = -0.5 * a.arg();
        let dir = Complex64::from_polar(1.0, theta);
        let am = a.norm();
        // Trapezoid along the steepest-descent line: the envelope is analytic
        // far from the origin, so the error is e^{−π²/(am δ²)} ≈ e^{−36}.
        let step = PI / (36.0 * am).sqrt();
        let half = (42.0 / am).sqrt();
        let m = (half / step).ceil() as i64;
        let mut vals = vec![Complex64::new(0.0, 0.0); nt];
        let mut ders = vals.clone();
        let mut sum = Complex64::new(0.0, 0.0);
        for i in -m..=m {
            let u = i as f64 * step;
            env.eval(ystar + dir * u, &mut vals, &mut ders);
            let v = vals[j] * (-am * u * u).exp();
            if !v.is_finite() {
                return Err(Error::NonFinite { at: (ystar + dir * u).re * side });
            }
            sum += v;
        }
        let r = sum * step;
        total += r * dir * estar.exp() * n;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_inner_matches_quadrature() {
        let a = GaussProbe::new(0.3, 0.8, 1.1);
        let b = GaussProbe::new(-0.5, 1.3, -0.4);
        let q = probe_overlap(&a, &b.evaluator(), 1e-13).unwrap();
        assert!((q - a.inner(&b)).norm() < 1e-11);
        assert!((a.inner(&a).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pair_parity() {
        let even = Probe::pair(1.5, 1.0, false);
        let odd = Probe::pair(1.5, 1.0, true);
        assert!((even.norm() - 1.0).abs() < 1e-14);
        assert!((odd.norm() - 1.0).abs() < 1e-14);
        assert!(even.inner(&odd).norm() < 1e-15);
    }

    #[test]
    fn pullback_matches_displaced_overlap() {
        use crate::hilbert::{displace, PhaseLabel, PhysicalParams};
        let g = GaussProbe::new(0.4, 0.9, 0.2);
        let psi = GaussProbe::new(0.0, 1.7, 0.8).evaluator();
        let moved = displace(&psi, PhaseLabel::qp(1.2, -0.7), PhysicalParams::default());
        let direct = probe_overlap(&g, &moved, 1e-13).unwrap();
        let (ph, g2) = g.pulled_back(1.2, -0.7);
        let back = ph * probe_overlap(&g2, &psi, 1e-13).unwrap();
        assert!((direct - back).norm() < 1e-11);
    }
}
