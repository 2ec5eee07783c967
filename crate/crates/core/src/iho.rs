//! Inverted oscillator H = P² − Q²/4 (ℏ = 1, m = ½, ω = 1): the
//! Gaussian-regularized fiducial over the W(E, x) continuum, its coherent
//! states, spectral time evolution and the action system.
//!
//! The fiducial is Ψ(x) = C_A ∫ e^{−A(E−Ē)²} C₀(E) W(E, x) dE. The E-integral is
//! a trapezoid sum over nodes fine enough that the sum equals the integral for
//! ln|x| up to a declared reach; beyond it the state is negligible.

use crate::error::{Error, Result};
use crate::hilbert::{
    displace, inner_product, moment_p, moment_q, overlap_integral, Band, Part, PhaseLabel, PhysicalParams,
    StateEvaluator, Tail, TailEnvelope, TailTerm,
};
use crate::numerics::quad::{integrate_with, QuadConfig};
use crate::numerics::{digamma, solve_root_2d};
use crate::weber::{energy_constants, x_min, Side, WeberSeries, WeberTable, E_MAX, E_MIN};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// ℏ = 1, m = ½, ω = 1.
pub const IHO_UNITS: PhysicalParams = PhysicalParams {
    hbar: 1.0,
    mass: 0.5,
    omega: 1.0,
};

pub const EBAR_RANGE: (f64, f64) = (-2.0, 6.0);
pub const A_RANGE: (f64, f64) = (1.0, 100.0);

/// Where C₀ sits relative to the E-integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C0Placement {
    #[default]
    Inside,
    /// C₀(Ē) in front of the integral.
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C0Formula {
    /// [2π√(1+e^{−2πE})]^{−1/2}, which makes C₀W δ-normalized.
    #[default]
    Normalized,
    /// (2π(1+e^{−2πE}))^{−1/2}
    AsDisplayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IhoFiducialParams {
    pub ebar: f64,
    pub a: f64,
    pub c_a: f64,
    #[serde(default)]
    pub placement: C0Placement,
    #[serde(default)]
    pub formula: C0Formula,
}

impl IhoFiducialParams {
    pub fn new(ebar: f64, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidWidth(a));
        }
        if !(A_RANGE.0..=A_RANGE.1).contains(&a) {
            return Err(Error::OutOfSupportedRange(format!("A = {a} outside [{}, {}]", A_RANGE.0, A_RANGE.1)));
        }
        if !(EBAR_RANGE.0..=EBAR_RANGE.1).contains(&ebar) {
            return Err(Error::OutOfSupportedRange(format!(
                "Ebar = {ebar} outside [{}, {}]",
                EBAR_RANGE.0, EBAR_RANGE.1
            )));
        }
        Ok(IhoFiducialParams {
            ebar,
            a,
            c_a: (2.0 * a / PI).powf(0.25),
            placement: C0Placement::Inside,
            formula: C0Formula::Normalized,
        })
    }

    pub fn with_c0(mut self, placement: C0Placement, formula: C0Formula) -> Self {
        self.placement = placement;
        self.formula = formula;
        self
    }
}

/// How far out the trapezoid sum must stay faithful: the moment order that
/// will be taken (|x|ⁿ pushes the bulk out to ln|x| ≈ u₀ + nA) and the
/// largest evolution time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IhoOptions {
    pub max_moment: u32,
    pub t_max: f64,
}

impl Default for IhoOptions {
    fn default() -> Self {
        IhoOptions { max_moment: 0, t_max: 0.0 }
    }
}

struct Node {
    e: f64,
    /// Amplitude in the δ-normalized basis C₀(E)W(E, ·).
    g: f64,
    /// Factor multiplying W(E, ·) in the fiducial (without the step h).
    weight: f64,
    kappa: f64,
    series: WeberSeries,
    table: WeberTable,
}

/// Node set and per-node W tables for one (Ē, A); shared by every state
/// built from it.
pub struct IhoBasis {
    pub params: IhoFiducialParams,
    pub options: IhoOptions,
    pub h: f64,
    pub x_a: f64,
    /// Centre of the fiducial in ln|x|.
    pub u0: f64,
    /// ln of the reach.
    pub u_max: f64,
    pub far_end_mismatch: f64,
    /// Fraction of the |x|ⁿ-weighted bump beyond the reach.
    pub moment_truncation: f64,
    nodes: Vec<Node>,
}

impl std::fmt::Debug for IhoBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IhoBasis")
            .field("params", &self.params)
            .field("nodes", &self.nodes.len())
            .field("h", &self.h)
            .field("x_a", &self.x_a)
            .field("u_max", &self.u_max)
            .finish()
    }
}

/// ½ ℜψ(½ − iE): where |Ψ|² peaks in ln|x|.
pub fn log_center(ebar: f64) -> f64 {
    0.5 * digamma(Complex64::new(0.5, -ebar)).re
}

impl IhoBasis {
    pub fn new(params: IhoFiducialParams, options: IhoOptions) -> Result<Arc<Self>> {
        let (ebar, a) = (params.ebar, params.a);
        let sa = a.sqrt();
        let u0 = log_center(ebar);
        // In u = ln|x| the weighted density |x|ⁿ|Ψ|² is a Gaussian bump at
        // u₀ + nA of width √A, whose amplitude there is e^{−(nA + k√A)²/(4A)}
        // relative to the node sum; roundoff in the sum (about 1e−14 at large
        // u) caps k at √120 − n√A.
        let n = options.max_moment as f64;
        let k = if options.max_moment == 0 {
            10.0
        } else {
            (120f64.sqrt() - n * sa).clamp(1.0, 8.0)
        };
        let mut u_max = u0 + options.t_max.abs() + n * a + k * sa;
        let moment_truncation = if options.max_moment == 0 { 0.0 } else { (-0.5 * k * k).exp() };
        let half = (40.0 / a).sqrt();
        let lo = (ebar - half).max(E_MIN);
        let hi = (ebar + half).min(E_MAX);
        let edge = (ebar - lo).min(hi - ebar);
        if a * edge * edge < 16.1 {
            return Err(Error::OutOfSupportedRange(format!(
                "energy support of (Ebar, A) = ({ebar}, {a}) leaves [{E_MIN}, {E_MAX}]"
            )));
        }
        let x_a = x_min(lo).max(x_min(hi));
        u_max = u_max.max(x_a.ln() + 5.0);
        let h = 2.0 * PI / (u_max + 12.0 * sa + 0.5 * a + 2.0);
        let jl = ((ebar - lo) / h).floor() as i64;
        let jh = ((hi - ebar) / h).floor() as i64;
        let energies: Vec<f64> = (-jl..=jh).map(|j| ebar + j as f64 * h).collect();
        let ref_c = energy_constants(ebar)?;
        let nodes: Vec<Node> = energies
            .par_iter()
            .map(|&e| -> Result<Node> {
                let k = energy_constants(e)?;
                let d = e - ebar;
                let c0 = match (params.placement, params.formula) {
                    (C0Placement::Inside, C0Formula::Normalized) => k.c0,
                    (C0Placement::Inside, C0Formula::AsDisplayed) => k.c0_displayed,
                    (C0Placement::Outside, C0Formula::Normalized) => ref_c.c0,
                    (C0Placement::Outside, C0Formula::AsDisplayed) => ref_c.c0_displayed,
                };
                let base = params.c_a * (-a * d * d).exp();
                Ok(Node {
                    e,
                    g: base * c0 / k.c0,
                    weight: base * c0,
                    kappa: k.kappa,
                    series: WeberSeries::new(e)?,
                    table: WeberTable::build(e, x_a, -x_a)?,
                })
            })
            .collect::<Result<_>>()?;
        let far_end_mismatch = nodes.iter().map(|n| n.table.far_end_mismatch).fold(0.0, f64::max);
        if far_end_mismatch > 1e-8 {
            return Err(Error::OutOfSupportedRange(format!(
                "W tables disagree with the left asymptotic series by {far_end_mismatch:e}"
            )));
        }
        Ok(Arc::new(IhoBasis {
            params,
            options,
            h,
            x_a,
            u0,
            u_max,
            far_end_mismatch,
            moment_truncation,
            nodes,
        }))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.e).collect()
    }

    /// ∫|⟨E|Ψ⟩|² dE on the node set.
    pub fn energy_norm(&self) -> f64 {
        self.h * self.nodes.iter().map(|n| n.g * n.g).sum::<f64>()
    }

    /// ∫E|⟨E|Ψ⟩|² dE / ∫|⟨E|Ψ⟩|² dE.
    pub fn energy_mean(&self) -> f64 {
        let s: f64 = self.nodes.iter().map(|n| n.e * n.g * n.g).sum();
        s * self.h / self.energy_norm()
    }

    fn coefficients(&self, t: f64, times_energy: bool) -> Vec<Complex64> {
        self.nodes
            .iter()
            .map(|n| {
                let c = Complex64::from_polar(self.h * n.weight, -t * n.e);
                if times_energy {
                    c * n.e
                } else {
                    c
                }
            })
            .collect()
    }

    /// Σⱼ cⱼ e^{−itEⱼ} W(Eⱼ, x), or with an extra Eⱼ for H applied spectrally.
    pub fn state(self: &Arc<Self>, t: f64, times_energy: bool) -> StateEvaluator {
        let coef = Arc::new(self.coefficients(t, times_energy));
        let basis = self.clone();
        let c2 = coef.clone();
        let amp = move |x: f64| basis.eval(&c2, x);
        let x_a = self.x_a;
        let mut hints = vec![0.0];
        let mut k = 1.0;
        loop {
            let x = (8.0 * PI * k).sqrt();
            if x >= x_a {
                break;
            }
            hints.push(x);
            hints.push(-x);
            k += 1.0;
        }
        hints.sort_by(f64::total_cmp);
        let reach = self.u_max.exp();
        let tail = |side: f64| {
            Tail::Oscillatory(Arc::new(IhoTail {
                basis: self.clone(),
                coef: coef.clone(),
                side,
                reach,
            }))
        };
        let emax = self.nodes.iter().map(|n| n.e.abs()).fold(0.0, f64::max);
        StateEvaluator::new(amp, hints, (-x_a, x_a))
            .with_tails(tail(-1.0), tail(1.0))
            .with_band(Band::Radial {
                x0: 0.0,
                k0: 0.0,
                slope: 0.5,
                half: 2.0 + emax.sqrt(),
            })
    }

    fn eval(&self, coef: &[Complex64], x: f64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = v;
        if x.abs() <= self.x_a {
            for (n, c) in self.nodes.iter().zip(coef) {
                let (w, dw) = n.table.eval(x);
                v += c * w;
                d += c * dw;
            }
        } else {
            let side = if x > 0.0 { Side::Plus } else { Side::Minus };
            for (n, c) in self.nodes.iter().zip(coef) {
                let (w, dw, _) = n.series.point(x.abs(), side);
                v += c * w;
                d += c * dw;
            }
        }
        (v, d)
    }
}

const TERMS: [TailTerm; 2] = [TailTerm { quad: 0.25, lin: 0.0 }, TailTerm { quad: -0.25, lin: 0.0 }];

/// Both outgoing and incoming chirps of Σⱼ cⱼ W(Eⱼ, ±y), with θⱼ − y²/4 kept
/// in the envelope so that complex y is handled by the series.
struct IhoTail {
    basis: Arc<IhoBasis>,
    coef: Arc<Vec<Complex64>>,
    side: f64,
    reach: f64,
}

impl TailEnvelope for IhoTail {
    fn terms(&self) -> &[TailTerm] {
        &TERMS
    }

    fn eval(&self, y: Complex64, vals: &mut [Complex64], ders: &mut [Complex64]) {
        let i = Complex64::i();
        for s in 0..2 {
            vals[s] = Complex64::new(0.0, 0.0);
            ders[s] = vals[s];
        }
        for (n, c) in self.basis.nodes.iter().zip(self.coef.iter()) {
            let sv = n.series.eval(y);
            let amp = sv.w.sqrt();
            let damp = sv.dw / (2.0 * amp);
            for (s, sigma) in [(0usize, 1.0), (1, -1.0)] {
                // cos θ = (e^{iθ} + e^{−iθ})/2, sin θ = (e^{iθ} − e^{−iθ})/(2i)
                let pre = if self.side > 0.0 {
                    Complex64::new(0.5 * n.kappa.sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, -0.5 * sigma / n.kappa.sqrt())
                };
                let ph = (i * sigma * sv.phase_rest).exp() * pre * c;
                vals[s] += ph * amp;
                ders[s] += ph * (damp + amp * i * sigma * sv.dphase_rest);
            }
        }
    }

    fn reach(&self) -> f64 {
        self.reach
    }
}

/// ⟨x|Ψ_Ē⟩ on a fresh basis.
pub fn iho_fiducial(params: IhoFiducialParams, options: IhoOptions) -> Result<StateEvaluator> {
    Ok(IhoBasis::new(params, options)?.state(0.0, false))
}

/// e^{ip(x−q)} Ψ_Ē(x − q).
pub fn iho_coherent(basis: &Arc<IhoBasis>, label: PhaseLabel) -> StateEvaluator {
    displace(&basis.state(0.0, false), label, IHO_UNITS)
}

/// e^{−itH}Ψ_Ē by the spectral representation.
pub fn iho_evolved_fiducial(basis: &Arc<IhoBasis>, t: f64) -> Result<StateEvaluator> {
    if t.abs() > basis.options.t_max + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "t = {t} beyond the basis' t_max = {}",
            basis.options.t_max
        )));
    }
    Ok(basis.state(t, false))
}

/// Closed form t²/(4ℏ²A) of ‖Υ_A‖² and its energy-space quadrature
/// C_A²(t²/ℏ²)∫e^{−2Aδ²}δ² dδ.
pub fn stability_remainder(ebar: f64, a: f64, t: f64, hbar: f64) -> Result<(f64, f64)> {
    let p = IhoFiducialParams::new(ebar, a)?;
    let closed = t * t / (4.0 * hbar * hbar * a);
    let half = 10.0 / a.sqrt();
    let f = |d: f64| Complex64::new((-2.0 * a * d * d).exp() * d * d, 0.0);
    let r = integrate_with(&f, -half, half, &[0.0], &QuadConfig::abs(1e-20).rel(1e-13))?.require()?;
    Ok((closed, p.c_a * p.c_a * t * t / (hbar * hbar) * r.value.re))
}

/// 2 − 2|⟨Ψ|e^{−itH}Ψ⟩| by x-space quadrature; with the exact value 2 − 2e^{−t²/(8A)}.
pub fn stability_overlap_deviation(basis: &Arc<IhoBasis>, t: f64, tol: f64) -> Result<(f64, f64)> {
    let psi = basis.state(0.0, false);
    let ev = iho_evolved_fiducial(basis, t)?;
    let ov = inner_product(&psi, &ev, tol)?;
    let exact = 2.0 - 2.0 * (-t * t / (8.0 * basis.params.a)).exp();
    Ok((2.0 - 2.0 * ov.norm(), exact))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSystem {
    pub k1: f64,
    pub k2: f64,
    pub j_a: f64,
    pub omega_a: f64,
    pub ebar_included: bool,
    pub solution: PhaseLabel,
    pub residuals: [f64; 2],
    /// p from the closed-form quadratic along the ray arg(q + ip) = ω_A.
    pub closed_form_p: f64,
    /// ⟨q,p|H|q,p⟩ by quadrature.
    pub energy_quadrature: f64,
}

/// ⟨q,p|H|q,p⟩ = ⟨H⟩ + 2p⟨P⟩ + p² − q⟨Q⟩/2 − q²/4 with ⟨·⟩ on the fiducial;
/// ⟨H⟩ is ∫Ψ*(HΨ) with HΨ spectral, the rest by x-space quadrature.
pub fn energy_quadrature(basis: &Arc<IhoBasis>, label: PhaseLabel, tol: f64) -> Result<f64> {
    let (k1, k2, h) = fiducial_moments(basis, tol)?;
    Ok(h + 2.0 * label.p * k1 + label.p * label.p - 0.5 * label.q * k2 - 0.25 * label.q * label.q)
}

/// ⟨Qⁿ⟩ on a state built from `basis`. Only n = 1 exists: the E-amplitude
/// C₀√κ e^{iφ/2} has a square-root branch point at E = Ē ± i/2, so the
/// fiducial decays like |x|^{−1}(ln|x|)^{−3/2} and ⟨Q²⟩ (likewise ⟨P²⟩)
/// diverges.
pub fn iho_moment_q(basis: &Arc<IhoBasis>, psi: &StateEvaluator, order: u32, tol: f64) -> Result<f64> {
    if order >= 2 {
        return Err(Error::DomainError(format!(
            "<Q^{order}> diverges for the Gaussian-regularized inverted-oscillator fiducial: |x|^{order}|psi|^2 ~ |x|^{} (ln|x|)^-3",
            order - 2
        )));
    }
    if basis.options.max_moment < order {
        return Err(Error::InvalidParameter(format!(
            "basis built for moments up to {}, asked for {order}",
            basis.options.max_moment
        )));
    }
    moment_q(psi, order, tol)
}

/// (⟨P⟩, ⟨Q⟩, ⟨H⟩) on the fiducial.
pub fn fiducial_moments(basis: &Arc<IhoBasis>, tol: f64) -> Result<(f64, f64, f64)> {
    if basis.options.max_moment < 1 {
        return Err(Error::InvalidParameter("⟨Q⟩ needs a basis built with max_moment >= 1".into()));
    }
    let psi = basis.state(0.0, false);
    let hpsi = basis.state(0.0, true);
    let k1 = moment_p(&psi, 1, 1.0, tol)?;
    let k2 = moment_q(&psi, 1, tol)?;
    let h = overlap_integral(&psi, Part::Value, &hpsi, Part::Value, 0, tol)?.require()?.value.re;
    Ok((k1, k2, h))
}

/// Solves 2ℏpK₁ − qK₂/2 + p² − q²/4 (+ Ē) = ω_A J_A with arg(q + ip) = ω_A.
pub fn action_system_solve(
    basis: &Arc<IhoBasis>,
    j_a: f64,
    omega_a: f64,
    include_ebar: bool,
    tol: f64,
) -> Result<ActionSystem> {
    if !(omega_a > 0.0 && omega_a < PI) {
        return Err(Error::InvalidParameter(format!("omega_A = {omega_a} must lie in (0, pi)")));
    }
    let (k1, k2, h) = fiducial_moments(basis, tol)?;
    let offset = if include_ebar { basis.params.ebar } else { 0.0 };
    let target = omega_a * j_a;
    let lhs = |q: f64, p: f64| 2.0 * p * k1 - 0.5 * q * k2 + p * p - 0.25 * q * q + offset;
    // along (q, p) = r(cos ω, sin ω): a r² + b r + c = 0
    let (s, c) = omega_a.sin_cos();
    let qa = s * s - 0.25 * c * c;
    let qb = 2.0 * k1 * s - 0.5 * k2 * c;
    let qc = offset - target;
    let r = positive_root(qa, qb, qc).ok_or(Error::NoConvergence {
        residual: qb * qb - 4.0 * qa * qc,
    })?;
    let seed = [r * c, r * s];
    let f = |x: [f64; 2]| [lhs(x[0], x[1]) - target, x[1].atan2(x[0]) - omega_a];
    let sol = solve_root_2d(f, seed, 1e-12)?;
    let res = f(sol);
    if res[0].abs() >= 1e-8 || res[1].abs() >= 1e-8 {
        return Err(Error::NoConvergence {
            residual: res[0].hypot(res[1]),
        });
    }
    let label = PhaseLabel::qp(sol[0], sol[1]);
    let eq = h + 2.0 * label.p * k1 + label.p * label.p - 0.5 * label.q * k2 - 0.25 * label.q * label.q;
    Ok(ActionSystem {
        k1,
        k2,
        j_a,
        omega_a,
        ebar_included: include_ebar,
        solution: label,
        residuals: [res[0].abs(), res[1].abs()],
        closed_form_p: r * s,
        energy_quadrature: eq,
    })
}

fn positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    if a.abs() < 1e-14 {
        let r = -c / b;
        return (r > 0.0 && r.is_finite()).then_some(r);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // stable pair of roots
    let qq = -0.5 * (b + b.signum() * sq);
    let mut roots = vec![qq / a];
    if qq != 0.0 {
        roots.push(c / qq);
    }
    roots.into_iter().filter(|r| *r > 0.0 && r.is_finite()).min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::norm;

    #[test]
    fn energy_space_norm_and_mean() {
        let b = IhoBasis::new(IhoFiducialParams::new(1.0, 10.0).unwrap(), IhoOptions::default()).unwrap();
        assert!((b.energy_norm() - 1.0).abs() < 1e-10, "{}", b.energy_norm());
        assert!((b.energy_mean() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spatial_norm() {
        let b = IhoBasis::new(IhoFiducialParams::new(1.0, 10.0).unwrap(), IhoOptions::default()).unwrap();
        let n = norm(&b.state(0.0, false), 1e-9).unwrap();
        assert!((n - 1.0).abs() < 1e-4, "{n}");
    }

    #[test]
    fn displayed_constant_misnormalizes() {
        let p = IhoFiducialParams::new(0.0, 10.0)
            .unwrap()
            .with_c0(C0Placement::Inside, C0Formula::AsDisplayed);
        let b = IhoBasis::new(p, IhoOptions::default()).unwrap();
        // the integrand ratio is (1 + e^{−2πE})^{−1/2}, 1/√2 at E = 0
        let n = b.energy_norm();
        assert!(n > 0.65 && n < 0.72, "{n}");
    }

    #[test]
    fn remainder_closed_form() {
        let (c, q) = stability_remainder(1.0, 25.0, 2.0, 1.0).unwrap();
        assert!((c - 0.04).abs() < 1e-15);
        assert!((q / c - 1.0).abs() < 1e-10);
        let (c0, q0) = stability_remainder(1.0, 25.0, 0.0, 1.0).unwrap();
        assert_eq!((c0, q0), (0.0, 0.0));
        let (c4, _) = stability_remainder(1.0, 100.0, 2.0, 1.0).unwrap();
        assert!((c4 - c / 4.0).abs() < 1e-15);
    }

    #[test]
    fn heisenberg_equations() {
        // d⟨Q⟩/dt = 2⟨P⟩, d⟨P⟩/dt = ⟨Q⟩/2 and ⟨P⟩ = 0 at t = 0 (real fiducial)
        let b = IhoBasis::new(
            IhoFiducialParams::new(0.0, 5.0).unwrap(),
            IhoOptions {
                max_moment: 1,
                t_max: 1.0,
            },
        )
        .unwrap();
        let psi = b.state(0.0, false);
        let q0 = iho_moment_q(&b, &psi, 1, 1e-10).unwrap();
        let p0 = moment_p(&psi, 1, 1.0, 1e-10).unwrap();
        assert!(p0.abs() < 1e-10);
        let ev = b.state(1.0, false);
        let p1 = moment_p(&ev, 1, 1.0, 1e-10).unwrap();
        let q1 = moment_q(&ev, 1, 1e-10).unwrap();
        assert!((p1 / (0.5 * q0 * 1f64.sinh()) - 1.0).abs() < 1e-6, "{p1} {q0}");
        assert!((q1 / (q0 * 1f64.cosh()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn second_moment_diverges() {
        let b = IhoBasis::new(
            IhoFiducialParams::new(1.0, 2.0).unwrap(),
            IhoOptions {
                max_moment: 1,
                t_max: 0.0,
            },
        )
        .unwrap();
        let psi = b.state(0.0, false);
        assert!(matches!(moment_q(&psi, 2, 1e-8), Err(Error::DomainError(_))));
        assert!(matches!(iho_moment_q(&b, &psi, 2, 1e-8), Err(Error::DomainError(_))));
        assert!(iho_moment_q(&b, &psi, 1, 1e-10).is_ok());
    }

    #[test]
    fn action_quarter_turn_closed_form() {
        let b = IhoBasis::new(
            IhoFiducialParams::new(1.0, 5.0).unwrap(),
            IhoOptions {
                max_moment: 1,
                t_max: 0.0,
            },
        )
        .unwrap();
        let w = PI / 2.0;
        let sys = action_system_solve(&b, 3.0, w, true, 1e-10).unwrap();
        assert!(sys.solution.q.abs() < 1e-10);
        // 2pK₁ + p² = ωJ − Ē
        let rhs = w * 3.0 - 1.0;
        let p = -sys.k1 + (sys.k1 * sys.k1 + rhs).sqrt();
        assert!((sys.solution.p - p).abs() < 1e-10);
        assert!(sys.residuals[0] < 1e-8 && sys.residuals[1] < 1e-8);
        assert!((sys.energy_quadrature - w * 3.0).abs() < 1e-3);
    }

    #[test]
    fn action_general_angle() {
        let b = IhoBasis::new(
            IhoFiducialParams::new(0.0, 5.0).unwrap(),
            IhoOptions {
                max_moment: 1,
                t_max: 0.0,
            },
        )
        .unwrap();
        let sys = action_system_solve(&b, 2.0, 1.0, true, 1e-10).unwrap();
        assert!(sys.residuals[0] < 1e-8 && sys.residuals[1] < 1e-8);
        assert!((sys.energy_quadrature - 2.0).abs() < 1e-3, "{sys:?}");
        let below = action_system_solve(&b, -5.0, PI / 2.0, true, 1e-10);
        assert!(matches!(below, Err(Error::NoConvergence { .. })), "{below:?}");
    }

    #[test]
    fn coherent_norm_and_shift() {
        let b = IhoBasis::new(IhoFiducialParams::new(1.0, 10.0).unwrap(), IhoOptions::default()).unwrap();
        let c = iho_coherent(&b, PhaseLabel::qp(1.0, 2.0));
        assert!((norm(&c, 1e-9).unwrap() - 1.0).abs() < 1e-4);
        let psi = b.state(0.0, false);
        let s = iho_coherent(&b, PhaseLabel::qp(1.5, 0.0));
        for x in [-20.0, -3.0, 0.2, 4.0, 30.0] {
            assert!((s.amplitude(x).norm() - psi.amplitude(x - 1.5).norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn evolution_overlap_matches_remainder() {
        let b = IhoBasis::new(
            IhoFiducialParams::new(1.0, 10.0).unwrap(),
            IhoOptions {
                max_moment: 0,
                t_max: 1.0,
            },
        )
        .unwrap();
        let (measured, exact) = stability_overlap_deviation(&b, 1.0, 1e-10).unwrap();
        assert!((measured - exact).abs() < 1e-8);
        let (closed, _) = stability_remainder(1.0, 10.0, 1.0, 1.0).unwrap();
        assert!((measured / closed - 1.0).abs() < 0.1);
    }

    #[test]
    fn positive_root_branches() {
        assert_eq!(positive_root(1.0, 0.0, -4.0), Some(2.0));
        assert_eq!(positive_root(1.0, 0.0, 4.0), None);
        assert!((positive_root(0.0, 2.0, -1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn support_outside_weber_window() {
        let p = IhoFiducialParams::new(-2.0, 1.0).unwrap();
        assert!(matches!(
            IhoBasis::new(p, IhoOptions::default()),
            Err(Error::OutOfSupportedRange(_))
        ));
    }
}
