//! Numeric certification of the coherent-state axioms (normalization,
//! continuity, resolution of the identity, temporal stability, action
//! identity) for every family in the crate, with JSON-ready reports.

use crate::error::{Error, Result};
use crate::free_particle::{
    action_invert, energy_expectation, energy_quadrature, stability_deviation, FreeFamily,
};
use crate::hilbert::{
    continuity_modulus, inner_product, norm, probe_overlap, PhaseLabel, PhysicalParams, Probe,
    StateEvaluator,
};
use crate::iho::{
    action_system_solve, iho_coherent, stability_overlap_deviation, stability_remainder, IhoBasis,
    IhoFiducialParams, IhoOptions, IHO_UNITS,
};
use crate::numerics::quad::{integrate_segments_par, integrate_with, QuadConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Normalization,
    Continuity,
    IdentityResolution,
    TemporalStability,
    ActionIdentity,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::Normalization,
        Axiom::Continuity,
        Axiom::IdentityResolution,
        Axiom::TemporalStability,
        Axiom::ActionIdentity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Axiom::Normalization => "normalization",
            Axiom::Continuity => "continuity",
            Axiom::IdentityResolution => "identity_resolution",
            Axiom::TemporalStability => "temporal_stability",
            Axiom::ActionIdentity => "action_identity",
        }
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown axiom '{s}'")))
    }
}

/// Verdict for one axiom. `pass` is exactly |measured − predicted| ≤ tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub family: String,
    pub params: Value,
    pub measured: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: String,
    pub seed: u64,
}

impl AxiomReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        axiom: Axiom,
        family: &Family,
        extra: Value,
        measured: f64,
        predicted: f64,
        tolerance: f64,
        diagnostics: String,
        seed: u64,
    ) -> Self {
        let mut params = family.params_json();
        if let (Value::Object(p), Value::Object(e)) = (&mut params, extra) {
            p.extend(e);
        }
        AxiomReport {
            axiom,
            family: family.name(),
            params,
            measured,
            predicted,
            tolerance,
            pass: (measured - predicted).abs() <= tolerance,
            diagnostics,
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// A coherent-state family: a fiducial plus the displacement U(q, p).
#[derive(Debug, Clone)]
pub enum Family {
    Free { family: FreeFamily, params: PhysicalParams },
    Iho { basis: Arc<IhoBasis> },
}

impl Family {
    pub fn free(family: FreeFamily, params: PhysicalParams) -> Result<Self> {
        family.validate()?;
        params.validate()?;
        Ok(Family::Free { family, params })
    }

    pub fn iho(params: IhoFiducialParams, options: IhoOptions) -> Result<Self> {
        Ok(Family::Iho {
            basis: IhoBasis::new(params, options)?,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Family::Free { family, .. } => format!("free-{}", family.name()),
            Family::Iho { .. } => "iho-gaussian".into(),
        }
    }

    pub fn physical(&self) -> PhysicalParams {
        match self {
            Family::Free { params, .. } => *params,
            Family::Iho { .. } => IHO_UNITS,
        }
    }

    pub fn params_json(&self) -> Value {
        match self {
            Family::Free { family, params } => {
                let mut v = serde_json::to_value(family).unwrap_or(Value::Null);
                if let Value::Object(m) = &mut v {
                    m.insert("hbar".into(), json!(params.hbar));
                    m.insert("mass".into(), json!(params.mass));
                }
                v
            }
            Family::Iho { basis } => json!({
                "ebar": basis.params.ebar,
                "a": basis.params.a,
                "c0_placement": basis.params.placement,
                "c0_formula": basis.params.formula,
            }),
        }
    }

    pub fn coherent(&self, label: PhaseLabel) -> Result<StateEvaluator> {
        match self {
            Family::Free { family, params } => family.coherent(PhaseLabel::qp(label.q, label.p), *params),
            Family::Iho { basis } => Ok(iho_coherent(basis, PhaseLabel::qp(label.q, label.p))),
        }
    }
}

/// Deterministic Halton points (bases 2, 3) over a (q, p) box, starting
/// after index `seed`.
pub fn sample_labels(n: usize, seed: u64, q_box: (f64, f64), p_box: (f64, f64)) -> Vec<PhaseLabel> {
    fn halton(mut i: u64, b: u64) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    }
    (0..n as u64)
        .map(|k| {
            let i = seed + k + 1;
            PhaseLabel::qp(
                q_box.0 + (q_box.1 - q_box.0) * halton(i, 2),
                p_box.0 + (p_box.1 - p_box.0) * halton(i, 3),
            )
        })
        .collect()
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// max |‖U(q,p)Ψ‖ − 1| over the labels.
pub fn check_normalization(family: &Family, labels: &[PhaseLabel], tolerance: f64, seed: u64) -> Result<AxiomReport> {
    if labels.is_empty() {
        return Err(Error::InvalidParameter("normalization needs at least one label".into()));
    }
    let mut devs = Vec::with_capacity(labels.len());
    for l in labels {
        let n = norm(&family.coherent(*l)?, 1e-11)?;
        devs.push((n - 1.0).abs());
    }
    let worst = devs.iter().copied().fold(0.0, f64::max);
    let diag = format!("labels={} deviations={}", labels.len(), list(&devs));
    Ok(AxiomReport::new(
        Axiom::Normalization,
        family,
        json!({ "labels": labels.len() }),
        worst,
        0.0,
        tolerance,
        diag,
        seed,
    ))
}

/// ‖|q,p⟩ − |q+δ,p⟩‖² for each δ; the reported value is the smallest δ's.
pub fn check_continuity(
    family: &Family,
    label: PhaseLabel,
    deltas: &[f64],
    tolerance: f64,
    seed: u64,
) -> Result<AxiomReport> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("continuity needs at least one δ".into()));
    }
    let base = family.coherent(label)?;
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let mut moduli = Vec::new();
    for d in &ds {
        let moved = family.coherent(PhaseLabel::qp(label.q + d, label.p))?;
        moduli.push(continuity_modulus(&base, &moved, 1e-12)?);
    }
    let monotone = moduli.windows(2).all(|w| w[1] < w[0]);
    let diag = format!("deltas={} moduli={} monotone={monotone}", list(&ds), list(&moduli));
    Ok(AxiomReport::new(
        Axiom::Continuity,
        family,
        json!({ "q": label.q, "p": label.p, "deltas": ds }),
        *moduli.last().unwrap(),
        0.0,
        tolerance,
        diag,
        seed,
    ))
}

/// Defects below this count as converged for the monotone flag.
pub const DEFECT_FLOOR: f64 = 1e-14;

/// One truncation of the phase plane to |q − q_c|, |p − p_c| ≤ radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityRung {
    pub radius: f64,
    pub re: f64,
    pub im: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResolution {
    /// ⟨f|g⟩ in closed form.
    pub predicted: [f64; 2],
    pub center: [f64; 2],
    pub rungs: Vec<IdentityRung>,
    pub monotone: bool,
    pub evaluations: usize,
}

/// Where ⟨h|q,p⟩ lives: ridge lines p(q) of half-width `width`.
enum Ridges {
    /// p = const for every q (free families).
    Flat(Vec<f64>),
    /// p = ℏ(κ ∓ (c − q)/2) for each probe part (chirped inverted-oscillator states).
    Chirp(Vec<(f64, f64)>),
}

struct PhasePlane<'a> {
    family: &'a Family,
    f: &'a Probe,
    g: &'a Probe,
    same: bool,
    fast: Option<StateEvaluator>,
    hbar: f64,
    q_c: f64,
    p_c: f64,
    ridges: Ridges,
    width: f64,
    q_panel: f64,
    /// Beyond this distance from q_c the outer integral runs in ln|q − q_c|.
    linear_reach: f64,
    evals: AtomicUsize,
    tol: f64,
}

impl PhasePlane<'_> {
    fn overlap(&self, h: &Probe, q: f64, p: f64) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for (c, gp) in &h.parts {
            let v = match (self.family, &self.fast) {
                (Family::Free { family, params }, _) => family.probe_overlap(gp, PhaseLabel::qp(q, p), *params)?,
                (Family::Iho { .. }, Some(psi)) => {
                    let (ph, back) = gp.pulled_back(q, p / self.hbar);
                    ph * probe_overlap(&back, psi, 1e-10)?
                }
                (Family::Iho { .. }, None) => unreachable!(),
            };
            s += c.conj() * v;
        }
        Ok(s)
    }

    /// ⟨f|q,p⟩⟨q,p|g⟩/(2πℏ).
    fn integrand(&self, q: f64, p: f64) -> Result<Complex64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let of = self.overlap(self.f, q, p)?;
        let og = if self.same { of } else { self.overlap(self.g, q, p)? };
        Ok(of * og.conj() / (2.0 * PI * self.hbar))
    }

    fn ridge_points(&self, q: f64) -> Vec<f64> {
        match &self.ridges {
            Ridges::Flat(ps) => ps.clone(),
            Ridges::Chirp(parts) => parts
                .iter()
                .flat_map(|&(c, k)| [self.hbar * (k - 0.5 * (c - q)), self.hbar * (k + 0.5 * (c - q))])
                .collect(),
        }
    }

    fn p_integral(&self, q: f64, ranges: &[(f64, f64)], tol: f64) -> Result<Complex64> {
        let ridges = self.ridge_points(q);
        let mut total = Complex64::new(0.0, 0.0);
        let err: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
        for &(a, b) in ranges {
            let mut breaks = Vec::new();
            for r in &ridges {
                breaks.push(*r);
                for m in [0.5, 1.0, 2.0, 4.0, 8.0] {
                    breaks.push(r - m * self.width);
                    breaks.push(r + m * self.width);
                }
            }
            breaks.retain(|x| *x > a && *x < b);
            breaks.sort_by(f64::total_cmp);
            let f = |p: f64| match self.integrand(q, p) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            };
            let r = integrate_with(&f, a, b, &breaks, &QuadConfig::abs(tol / ranges.len() as f64).rel(1e-9).budget(1 << 16))?;
            if let Some(e) = err.borrow_mut().take() {
                return Err(e);
            }
            total += r.require()?.value;
        }
        Ok(total)
    }

    /// ∫ over q_c ± d, d ∈ [d_lo, d_hi], of the p-integral over `ranges`
    /// (given relative to p_c).
    fn region(&self, d_lo: f64, d_hi: f64, ranges: &[(f64, f64)], tol: f64) -> Result<Complex64> {
        let abs_ranges: Vec<(f64, f64)> = ranges.iter().map(|(a, b)| (self.p_c + a, self.p_c + b)).collect();
        let inner_tol = 0.1 * tol / (2.0 * d_hi.min(self.linear_reach) + 1.0);
        let first_err = std::sync::Mutex::new(None::<Error>);
        let record = |e: Error| {
            first_err.lock().unwrap().get_or_insert(e);
            Complex64::new(0.0, 0.0)
        };
        let mut total = Complex64::new(0.0, 0.0);

        let lin_hi = d_hi.min(self.linear_reach);
        if lin_hi > d_lo {
            let n = (((lin_hi - d_lo) / self.q_panel).ceil() as usize).max(1);
            let step = (lin_hi - d_lo) / n as f64;
            let mut edges: Vec<f64> = Vec::new();
            if d_lo == 0.0 {
                edges.extend((0..=2 * n).map(|i| self.q_c - lin_hi + step * i as f64));
                let f = |q: f64| self.p_integral(q, &abs_ranges, inner_tol).unwrap_or_else(record);
                total += integrate_segments_par(&f, &edges, &QuadConfig::abs(0.5 * tol).rel(1e-9).budget(1 << 14))?
                    .require()?
                    .value;
            } else {
                for side in [-1.0, 1.0] {
                    let edges: Vec<f64> = (0..=n).map(|i| d_lo + step * i as f64).collect();
                    let f = |d: f64| self.p_integral(self.q_c + side * d, &abs_ranges, inner_tol).unwrap_or_else(record);
                    total += integrate_segments_par(&f, &edges, &QuadConfig::abs(0.25 * tol).rel(1e-9).budget(1 << 14))?
                        .require()?
                        .value;
                }
            }
        }
        if d_hi > self.linear_reach {
            let (u0, u1) = (d_lo.max(self.linear_reach).ln(), d_hi.ln());
            let n = (((u1 - u0) / 1.5).ceil() as usize).max(1);
            let edges: Vec<f64> = (0..=n).map(|i| u0 + (u1 - u0) * i as f64 / n as f64).collect();
            for side in [-1.0, 1.0] {
                let f = |u: f64| {
                    let d = u.exp();
                    self.p_integral(self.q_c + side * d, &abs_ranges, inner_tol * d.max(1.0))
                        .unwrap_or_else(record)
                        * d
                };
                total += integrate_segments_par(&f, &edges, &QuadConfig::abs(0.25 * tol).rel(1e-9).budget(1 << 12))?
                    .require()?
                    .value;
            }
        }
        if let Some(e) = first_err.into_inner().unwrap() {
            return Err(e);
        }
        Ok(total)
    }
}

/// ∬ ⟨f|q,p⟩⟨q,p|g⟩ dq dp/(2πℏ) over nested boxes |q − q_c|, |p − p_c| ≤ R.
///
/// The box is centred where the overlap with f peaks. Each rung adds the
/// ring between it and the previous box, so the whole ladder costs one
/// evaluation of the largest box.
pub fn identity_resolution(
    family: &Family,
    f: &Probe,
    g: &Probe,
    radii: &[f64],
    tol: f64,
) -> Result<IdentityResolution> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidParameter("radii must be positive and increasing".into()));
    }
    let weight: f64 = f.parts.iter().map(|(c, _)| c.norm_sqr()).sum();
    let xf = f.parts.iter().map(|(c, p)| c.norm_sqr() * p.center).sum::<f64>() / weight;
    let kf = f.parts.iter().map(|(c, p)| c.norm_sqr() * p.wavenumber).sum::<f64>() / weight;
    let smin = f.parts.iter().chain(&g.parts).map(|(_, p)| p.width).fold(f64::INFINITY, f64::min);
    let hbar = family.physical().hbar;
    let kappas: Vec<f64> = f.parts.iter().chain(&g.parts).map(|(_, p)| p.wavenumber).collect();
    let plane = match family {
        Family::Free { family: fam, .. } => {
            let (mean, var) = fam.wavenumber_moments();
            let q_panel = match fam {
                FreeFamily::Gaussian { a, .. } => 0.5 * (smin * smin + a).sqrt(),
                FreeFamily::Window { k0, k1 } | FreeFamily::Bump { k0, k1 } => (2.0 * PI / (k1 - k0)).min(4.0 * smin),
            };
            PhasePlane {
                family,
                f,
                g,
                same: f == g,
                fast: None,
                hbar,
                q_c: xf,
                p_c: hbar * (kf - mean),
                ridges: Ridges::Flat(kappas.iter().map(|k| hbar * (k - mean)).collect()),
                width: hbar * (0.5 / smin + 1.8 * var.sqrt()),
                q_panel,
                linear_reach: f64::INFINITY,
                evals: AtomicUsize::new(0),
                tol,
            }
        }
        Family::Iho { basis } => {
            let psi = basis.state(0.0, false);
            let reach = basis.x_a + 24.0 * smin + 2.0;
            let fast = psi.tabulated(-reach - xf.abs(), reach + xf.abs(), 0.05 / (0.5 * (reach + xf.abs()) + 5.0));
            PhasePlane {
                family,
                f,
                g,
                same: f == g,
                fast: Some(fast),
                hbar,
                q_c: xf,
                p_c: hbar * kf,
                ridges: Ridges::Chirp(f.parts.iter().chain(&g.parts).map(|(_, p)| (p.center, p.wavenumber)).collect()),
                width: hbar * (0.5 / smin + 0.5 * smin),
                q_panel: 4.0 * smin,
                linear_reach: basis.x_a + 24.0 * smin,
                evals: AtomicUsize::new(0),
                tol,
            }
        }
    };
    let predicted = f.inner(g);
    let mut rungs = Vec::new();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prev = 0.0;
    for &r in radii {
        let tol_r = plane.tol / radii.len() as f64;
        // new q-ring with the full p-range, then the new p-ring over the old q-range
        acc += plane.region(prev, r, &[(-r, r)], 0.5 * tol_r)?;
        if prev > 0.0 {
            acc += plane.region(0.0, prev, &[(-r, -prev), (prev, r)], 0.5 * tol_r)?;
        }
        rungs.push(IdentityRung {
            radius: r,
            re: acc.re,
            im: acc.im,
            defect: (acc - predicted).norm(),
        });
        prev = r;
    }
    // rungs already at roundoff cannot keep shrinking
    let monotone = rungs
        .windows(2)
        .all(|w| w[1].defect < w[0].defect || w[0].defect.max(w[1].defect) < DEFECT_FLOOR);
    Ok(IdentityResolution {
        predicted: [predicted.re, predicted.im],
        center: [plane.q_c, plane.p_c],
        rungs,
        monotone,
        evaluations: plane.evals.load(Ordering::Relaxed),
    })
}

/// Default probes and radii: f = g a unit Gaussian sitting on the family's
/// mean wavenumber, radii chosen so the last rung's truncation loss is below
/// the family's tolerance.
pub fn default_identity_setup(family: &Family) -> (Probe, Probe, Vec<f64>, f64) {
    match family {
        Family::Free { family: fam, params } => {
            let (mean, var) = fam.wavenumber_moments();
            let f = Probe::gaussian(0.5, 1.0, mean);
            let (r, tol) = match fam {
                FreeFamily::Gaussian { a, .. } => {
                    let s = (1.0 + a).sqrt().max(params.hbar * (0.25 + var).sqrt());
                    (12.0 * s, 1e-6)
                }
                // |⟨f|q,p⟩|² falls like 1/q² past the window edges, so the loss
                // outside the box is about 2/(π(k₁−k₀)R)
                FreeFamily::Window { k0, k1 } => (4e4 / (PI * (k1 - k0)), 1e-4),
                FreeFamily::Bump { k0, k1 } => (12.0 * (1.0 + (8.0 / (k1 - k0)).powi(2)).sqrt(), 1e-4),
            };
            (f.clone(), f, vec![0.25 * r, 0.5 * r, r], tol)
        }
        Family::Iho { basis } => {
            // |Ψ|² is close to log-normal in |x|: centre u₀, width √A
            let r = (basis.u0 + 3.5 * basis.params.a.sqrt()).exp().max(4.0 * basis.x_a);
            let f = Probe::gaussian(0.0, 1.0, 0.0);
            (f.clone(), f, vec![0.25 * r, 0.5 * r, r], 1e-3)
        }
    }
}

pub fn check_identity_resolution(
    family: &Family,
    f: &Probe,
    g: &Probe,
    radii: &[f64],
    tolerance: f64,
    seed: u64,
) -> Result<AxiomReport> {
    let res = identity_resolution(family, f, g, radii, 0.01 * tolerance)?;
    let last = *res.rungs.last().unwrap();
    let mut diag = String::new();
    let _ = write!(
        diag,
        "<f|g>=({:.12e},{:.12e}) center=({:.6e},{:.6e}) radii={} defects={} monotone={} evaluations={}",
        res.predicted[0],
        res.predicted[1],
        res.center[0],
        res.center[1],
        list(&res.rungs.iter().map(|r| r.radius).collect::<Vec<_>>()),
        list(&res.rungs.iter().map(|r| r.defect).collect::<Vec<_>>()),
        res.monotone,
        res.evaluations
    );
    Ok(AxiomReport::new(
        Axiom::IdentityResolution,
        family,
        json!({ "radii": radii, "f": probe_json(f), "g": probe_json(g) }),
        last.defect,
        0.0,
        tolerance,
        diag,
        seed,
    ))
}

fn probe_json(p: &Probe) -> Value {
    Value::Array(
        p.parts
            .iter()
            .map(|(c, g)| json!({ "coef": [c.re, c.im], "center": g.center, "width": g.width, "wavenumber": g.wavenumber }))
            .collect(),
    )
}

/// Largest |ψ_{τ+t}(x) − e^{−itH}ψ_τ(x)| on a grid, with the right side built
/// by applying the two propagators one after the other in k-space.
fn free_relabel_error(family: FreeFamily, label: PhaseLabel, tau: f64, t: f64, params: PhysicalParams) -> Result<Option<f64>> {
    let (h, m) = (params.hbar, params.mass);
    let kp = label.p / h;
    let (lo, hi, weight): (f64, f64, Box<dyn Fn(f64) -> f64>) = match family {
        FreeFamily::Window { k0, k1 } => {
            let c = 1.0 / (k1 - k0).sqrt();
            (k0, k1, Box::new(move |_| c))
        }
        FreeFamily::Gaussian { kbar, a } => {
            let c = (2.0 * a / PI).powf(0.25);
            let half = 9.0 / a.sqrt();
            (kbar - half, kbar + half, Box::new(move |k: f64| c * (-a * (k - kbar).powi(2)).exp()))
        }
        FreeFamily::Bump { .. } => return Ok(None),
    };
    let direct = family.evolved(PhaseLabel::new(label.q, label.p, tau + t), params)?;
    let mut worst: f64 = 0.0;
    for i in 0..9 {
        let x = label.q + (i as f64 - 4.0) * 1.5;
        let u = x - label.q;
        let f = |k: f64| {
            let kk = k + kp;
            let first = Complex64::from_polar(1.0, -h * tau * kk * kk / (2.0 * m));
            let second = Complex64::from_polar(1.0, -h * t * kk * kk / (2.0 * m));
            first * second * Complex64::from_polar(weight(k), kk * u)
        };
        let span = (u.abs() + h * (tau + t).abs() * (lo.abs().max(hi.abs()) + kp.abs()) / m) * (hi - lo);
        let pieces = ((span / 3.0).ceil() as usize).clamp(4, 20000);
        let breaks: Vec<f64> = (1..pieces).map(|j| lo + (hi - lo) * j as f64 / pieces as f64).collect();
        let v = integrate_with(&f, lo, hi, &breaks, &QuadConfig::abs(1e-14).rel(1e-12))?.require()?.value
            / (2.0 * PI).sqrt();
        worst = worst.max((v - direct.amplitude(x)).norm());
    }
    Ok(Some(worst))
}

/// Phase-minimized ‖e^{−iτH/ℏ}|q,p⟩ − e^{iθ}|q′,p⟩‖² against the family's
/// closed-form remainder; tolerance is `rel_tol`·predicted.
pub fn check_temporal_stability(
    family: &Family,
    label: PhaseLabel,
    tau: f64,
    ktilde: Option<f64>,
    rel_tol: f64,
    seed: u64,
) -> Result<AxiomReport> {
    match family {
        Family::Free { family: fam, params } => {
            let (measured, pred) = stability_deviation(*fam, label, tau, ktilde, *params, 1e-12)?;
            let relabel = free_relabel_error(*fam, label, 0.5 * tau, 0.5 * tau, *params)?;
            let diag = format!(
                "order={:?} leading_phase={:.6e} shifted_q={:.6e} phase_minimized_leading={:.6e} ratio={:.6e} relabel_max_error={}",
                pred.order_tag,
                pred.leading_phase,
                pred.shifted_label.q,
                pred.phase_minimized_leading,
                measured / pred.remainder_norm_sq,
                relabel.map_or("n/a".into(), |e| format!("{e:.3e}"))
            );
            Ok(AxiomReport::new(
                Axiom::TemporalStability,
                family,
                json!({ "q": label.q, "p": label.p, "tau": tau, "ktilde": ktilde }),
                measured,
                pred.remainder_norm_sq,
                rel_tol * pred.remainder_norm_sq,
                diag,
                seed,
            ))
        }
        Family::Iho { basis } => {
            let b = if basis.options.t_max >= tau.abs() {
                basis.clone()
            } else {
                IhoBasis::new(basis.params, IhoOptions { t_max: tau.abs(), ..basis.options })?
            };
            let (measured, exact) = stability_overlap_deviation(&b, tau, 1e-12)?;
            let (closed, quad) = stability_remainder(b.params.ebar, b.params.a, tau, 1.0)?;
            let diag = format!(
                "exact={exact:.12e} remainder_quadrature={quad:.12e} ratio={:.6e} label=(0,0) relabel=spectral",
                measured / closed
            );
            Ok(AxiomReport::new(
                Axiom::TemporalStability,
                family,
                json!({ "q": 0.0, "p": 0.0, "t": tau }),
                measured,
                closed,
                rel_tol * closed,
                diag,
                seed,
            ))
        }
    }
}

/// Round trip J → (q, p) → ⟨H⟩ = ωJ, with J recomputed at τ ∈ {0, 1, 2}.
pub fn check_action_identity(family: &Family, j: f64, omega: f64, tolerance: f64, seed: u64) -> Result<AxiomReport> {
    match family {
        Family::Free { family: fam, params } => {
            let label = action_invert(*fam, j, omega, *params)?;
            let e = energy_expectation(*fam, label, *params)?;
            let mut js = Vec::new();
            for tau in [0.0, 1.0, 2.0] {
                let eq = energy_quadrature(*fam, PhaseLabel::new(label.q, label.p, tau), *params, 1e-12)?;
                js.push(eq / omega);
            }
            let spread = js.iter().map(|x| (x - js[0]).abs()).fold(0.0, f64::max);
            let diag = format!(
                "q={:.12e} p={:.12e} J_tau(0,1,2)={} J_tau_spread={spread:.3e}",
                label.q,
                label.p,
                list(&js)
            );
            Ok(AxiomReport::new(
                Axiom::ActionIdentity,
                family,
                json!({ "j": j, "omega": omega }),
                (e - omega * j).abs(),
                0.0,
                tolerance,
                diag,
                seed,
            ))
        }
        Family::Iho { basis } => {
            let b = if basis.options.max_moment >= 1 && basis.options.t_max >= 2.0 {
                basis.clone()
            } else {
                IhoBasis::new(basis.params, IhoOptions { max_moment: 1, t_max: 2.0 })?
            };
            let sys = action_system_solve(&b, j, omega, true, 1e-12)?;
            // the only τ-dependent input is the fiducial's ⟨H⟩
            let mut hs = Vec::new();
            for tau in [0.0, 1.0, 2.0] {
                hs.push(inner_product(&b.state(tau, false), &b.state(tau, true), 1e-12)?.re);
            }
            let js: Vec<f64> = hs.iter().map(|h| (sys.energy_quadrature + h - hs[0]) / omega).collect();
            let spread = js.iter().map(|x| (x - js[0]).abs()).fold(0.0, f64::max);
            let diag = format!(
                "q={:.12e} p={:.12e} K1={:.6e} K2={:.6e} residuals=[{:.3e}, {:.3e}] closed_form_p={:.12e} moment_truncation={:.3e} J_tau(0,1,2)={} J_tau_spread={spread:.3e}",
                sys.solution.q,
                sys.solution.p,
                sys.k1,
                sys.k2,
                sys.residuals[0],
                sys.residuals[1],
                sys.closed_form_p,
                b.moment_truncation,
                list(&js)
            );
            Ok(AxiomReport::new(
                Axiom::ActionIdentity,
                family,
                json!({ "j": j, "omega": omega }),
                (sys.energy_quadrature - omega * j).abs(),
                0.0,
                tolerance,
                diag,
                seed,
            ))
        }
    }
}

/// Which axioms to run and with which inputs; `None` picks the family default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub axioms: Vec<Axiom>,
    pub seed: u64,
    pub label: PhaseLabel,
    pub tau: f64,
    pub ktilde: Option<f64>,
    /// (J, ω) for the action identity.
    pub action: Option<(f64, f64)>,
    pub labels: Option<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            axioms: Axiom::ALL.to_vec(),
            seed: 0,
            label: PhaseLabel::qp(0.5, 0.3),
            tau: 1.0,
            ktilde: None,
            action: None,
            labels: None,
        }
    }
}

/// (J, ω) one half unit above the family's smallest action at ω = 1 for
/// free families, and J = (Ē + 1)/ω at ω = π/4 for the inverted oscillator.
pub fn default_action(family: &Family) -> Result<(f64, f64)> {
    match family {
        Family::Free { family: fam, params } => {
            let (mean, _) = fam.wavenumber_moments();
            let ground = energy_expectation(*fam, PhaseLabel::qp(0.0, -params.hbar * mean), *params)?;
            Ok((ground + 0.5, 1.0))
        }
        Family::Iho { basis } => {
            let omega = 0.25 * PI;
            Ok(((basis.params.ebar + 1.0) / omega, omega))
        }
    }
}

pub fn axiom_suite(family: &Family, opts: &SuiteOptions) -> Result<Vec<AxiomReport>> {
    let is_iho = matches!(family, Family::Iho { .. });
    let mut out = Vec::new();
    for axiom in &opts.axioms {
        let report = match axiom {
            Axiom::Normalization => {
                let (n, tol) = if is_iho { (5, 1e-4) } else { (20, 1e-8) };
                let labels = sample_labels(opts.labels.unwrap_or(n), opts.seed, (-3.0, 3.0), (-2.0, 2.0));
                check_normalization(family, &labels, tol, opts.seed)?
            }
            Axiom::Continuity => check_continuity(family, opts.label, &[1e-1, 1e-2, 1e-3], 1e-4, opts.seed)?,
            Axiom::IdentityResolution => {
                let (f, g, radii, tol) = default_identity_setup(family);
                check_identity_resolution(family, &f, &g, &radii, tol, opts.seed)?
            }
            Axiom::TemporalStability => {
                if is_iho {
                    check_temporal_stability(family, opts.label, opts.tau, None, 0.10, opts.seed)?
                } else {
                    let label = PhaseLabel::qp(opts.label.q, opts.label.p);
                    check_temporal_stability(family, label, opts.tau, opts.ktilde, 0.15, opts.seed)?
                }
            }
            Axiom::ActionIdentity => {
                let (j, omega) = match opts.action {
                    Some(a) => a,
                    None => default_action(family)?,
                };
                check_action_identity(family, j, omega, if is_iho { 1e-3 } else { 1e-10 }, opts.seed)?
            }
        };
        out.push(report);
    }
    Ok(out)
}

/// The axiom suite on the Gaussian-regularized inverted-oscillator family.
pub fn iho_axiom_suite(ebar: f64, a: f64, opts: &SuiteOptions) -> Result<Vec<AxiomReport>> {
    let family = Family::iho(IhoFiducialParams::new(ebar, a)?, IhoOptions { max_moment: 0, t_max: opts.tau.abs() })?;
    axiom_suite(&family, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> Family {
        Family::free(FreeFamily::Gaussian { kbar: 1.0, a: 10.0 }, PhysicalParams::default()).unwrap()
    }

    #[test]
    fn axiom_names_round_trip() {
        for a in Axiom::ALL {
            assert_eq!(a.name().parse::<Axiom>().unwrap(), a);
            assert_eq!(serde_json::to_value(a).unwrap(), json!(a.name()));
        }
        assert!("bogus".parse::<Axiom>().is_err());
    }

    #[test]
    fn halton_labels_are_deterministic_and_in_box() {
        let a = sample_labels(20, 7, (-3.0, 3.0), (-2.0, 2.0));
        assert_eq!(a, sample_labels(20, 7, (-3.0, 3.0), (-2.0, 2.0)));
        assert_ne!(a, sample_labels(20, 8, (-3.0, 3.0), (-2.0, 2.0)));
        assert!(a.iter().all(|l| l.q.abs() <= 3.0 && l.p.abs() <= 2.0));
        // seed shifts the sequence by one index
        assert_eq!(a[1], sample_labels(1, 8, (-3.0, 3.0), (-2.0, 2.0))[0]);
    }

    #[test]
    fn report_schema_and_pass_rule() {
        let fam = gaussian();
        let r = AxiomReport::new(Axiom::Continuity, &fam, json!({"q": 1.0}), 1.5, 1.0, 0.5, "d".into(), 3);
        assert!(r.pass);
        let r2 = AxiomReport::new(Axiom::Continuity, &fam, json!({}), 1.5, 1.0, 0.4999, "d".into(), 3);
        assert!(!r2.pass);
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in ["axiom", "family", "params", "measured", "predicted", "tolerance", "pass", "diagnostics", "seed"] {
            assert!(keys.contains(&k), "{k}");
        }
        assert_eq!(v["params"]["q"], json!(1.0));
        assert_eq!(v["params"]["kbar"], json!(1.0));
        assert_eq!(v["family"], json!("free-gaussian"));
    }

    #[test]
    fn normalization_and_continuity_free() {
        let fam = gaussian();
        let labels = sample_labels(20, 0, (-3.0, 3.0), (-2.0, 2.0));
        let r = check_normalization(&fam, &labels, 1e-8, 0).unwrap();
        assert!(r.pass, "{}", r.measured);
        let c = check_continuity(&fam, PhaseLabel::qp(0.5, 0.3), &[1e-3, 1e-1, 1e-2], 1e-4, 0).unwrap();
        assert!(c.pass);
        assert!(c.diagnostics.contains("monotone=true"));
        assert!(check_continuity(&fam, PhaseLabel::qp(0.0, 0.0), &[], 1e-4, 0).is_err());
    }

    #[test]
    fn identity_resolution_gaussian_converges() {
        let fam = gaussian();
        let (f, g, radii, tol) = default_identity_setup(&fam);
        let res = identity_resolution(&fam, &f, &g, &radii, 0.01 * tol).unwrap();
        assert!(res.monotone);
        assert!(res.rungs.last().unwrap().defect < 1e-6);
        assert!((res.predicted[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_resolution_parity_pair_vanishes() {
        let fam = gaussian();
        let (_, _, radii, tol) = default_identity_setup(&fam);
        let f = Probe::pair(1.0, 1.0, false);
        let g = Probe::pair(1.0, 1.0, true);
        let r = check_identity_resolution(&fam, &f, &g, &radii, tol, 0).unwrap();
        assert!(r.pass, "{}", r.diagnostics);
        assert!(r.diagnostics.contains("monotone=true"));
    }

    #[test]
    fn action_identity_window_third() {
        let fam = Family::free(FreeFamily::Window { k0: 0.0, k1: 2.0 }, PhysicalParams::default()).unwrap();
        let r = check_action_identity(&fam, 1.0 / 3.0, 1.0, 1e-10, 0).unwrap();
        assert!(r.pass, "{}", r.diagnostics);
    }

    #[test]
    fn suite_is_deterministic() {
        let fam = Family::free(FreeFamily::Window { k0: 0.0, k1: 2.0 }, PhysicalParams::default()).unwrap();
        let opts = SuiteOptions {
            axioms: vec![Axiom::Normalization, Axiom::Continuity, Axiom::TemporalStability],
            seed: 5,
            ..SuiteOptions::default()
        };
        let a = serde_json::to_string(&axiom_suite(&fam, &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&axiom_suite(&fam, &opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
