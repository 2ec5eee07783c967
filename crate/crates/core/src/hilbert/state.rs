use crate::hilbert::{PhaseLabel, PhysicalParams};
use num_complex::Complex64;
use std::sync::Arc;

pub type AmpFn = Arc<dyn Fn(f64) -> (Complex64, Complex64) + Send + Sync>;

/// Phase e^{i(quad·y² + lin·y)} carried by one tail component, y measured
/// outward from the origin (y = x on the right, y = −x on the left).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailTerm {
    pub quad: f64,
    pub lin: f64,
}

/// Analytic tail model Φ(±y) = Σ_j e^{i(quad_j y² + lin_j y)} A_j(y).
///
/// `eval` must accept complex y near the positive real axis: tail integrals
/// are taken along rotated contours.
pub trait TailEnvelope: Send + Sync {
    fn terms(&self) -> &[TailTerm];
    fn eval(&self, y: Complex64, vals: &mut [Complex64], ders: &mut [Complex64]);
    /// Largest |y| where the model is trusted.
    fn reach(&self) -> f64 {
        f64::INFINITY
    }
}

#[derive(Clone)]
pub enum Tail {
    /// The state is below double precision beyond the core.
    Negligible,
    Oscillatory(Arc<dyn TailEnvelope>),
    /// No model; integrals fall back to a mapped real-axis quadrature.
    Unknown,
}

/// Where the state's local wavenumbers live, used to skip probe overlaps
/// that vanish to double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    Global { lo: f64, hi: f64 },
    /// k ∈ k0 ± (slope·|x − x0| + half)
    Radial { x0: f64, k0: f64, slope: f64, half: f64 },
    Unbounded,
}

impl Band {
    pub fn over(&self, xlo: f64, xhi: f64) -> Option<(f64, f64)> {
        match *self {
            Band::Global { lo, hi } => Some((lo, hi)),
            Band::Radial { x0, k0, slope, half } => {
                let d = (xlo - x0).abs().max((xhi - x0).abs());
                let w = slope * d + half;
                Some((k0 - w, k0 + w))
            }
            Band::Unbounded => None,
        }
    }

    fn displaced(&self, q: f64, kshift: f64) -> Band {
        match *self {
            Band::Global { lo, hi } => Band::Global {
                lo: lo + kshift,
                hi: hi + kshift,
            },
            Band::Radial { x0, k0, slope, half } => Band::Radial {
                x0: x0 + q,
                k0: k0 + kshift,
                slope,
                half,
            },
            Band::Unbounded => Band::Unbounded,
        }
    }
}

/// A wavefunction as a pure map x → (ψ(x), ψ′(x)) plus the quadrature
/// metadata every consumer needs.
#[derive(Clone)]
pub struct StateEvaluator {
    amp: AmpFn,
    hints: Vec<f64>,
    left_start: f64,
    right_start: f64,
    left: Tail,
    right: Tail,
    band: Band,
}

impl std::fmt::Debug for StateEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StateEvaluator")
            .field("hints", &self.hints)
            .field("core", &(self.left_start, self.right_start))
            .field("band", &self.band)
            .finish()
    }
}

impl StateEvaluator {
    /// `core` is the interval handled by direct quadrature; outside it the
    /// tails take over.
    pub fn new<F>(amp: F, hints: Vec<f64>, core: (f64, f64)) -> Self
    where
        F: Fn(f64) -> (Complex64, Complex64) + Send + Sync + 'static,
    {
        StateEvaluator {
            amp: Arc::new(amp),
            hints,
            left_start: core.0,
            right_start: core.1,
            left: Tail::Unknown,
            right: Tail::Unknown,
            band: Band::Unbounded,
        }
    }

    pub fn with_tails(mut self, left: Tail, right: Tail) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn with_band(mut self, band: Band) -> Self {
        self.band = band;
        self
    }

    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        (self.amp)(x)
    }

    pub fn amplitude(&self, x: f64) -> Complex64 {
        (self.amp)(x).0
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        (self.amp)(x).1
    }

    pub fn hints(&self) -> &[f64] {
        &self.hints
    }

    pub fn core(&self) -> (f64, f64) {
        (self.left_start, self.right_start)
    }

    pub fn left_tail(&self) -> &Tail {
        &self.left
    }

    pub fn right_tail(&self) -> &Tail {
        &self.right
    }

    pub fn band(&self) -> Band {
        self.band
    }

    /// The same state with [lo, hi] served from a cubic Hermite table of
    /// spacing at most `step`. Core, tails, hints and band are kept.
    pub fn tabulated(&self, lo: f64, hi: f64, step: f64) -> StateEvaluator {
        let n = (((hi - lo) / step).ceil() as usize).max(1);
        let h = (hi - lo) / n as f64;
        let table: Vec<(Complex64, Complex64)> = (0..=n).map(|i| (self.amp)(lo + h * i as f64)).collect();
        let table = Arc::new(table);
        let exact = self.amp.clone();
        let amp = move |x: f64| {
            if x < lo || x > hi {
                return exact(x);
            }
            let t = (x - lo) / h;
            let i = (t.floor() as usize).min(n - 1);
            let u = t - i as f64;
            let ((v0, d0), (v1, d1)) = (table[i], table[i + 1]);
            let (d0, d1) = (d0 * h, d1 * h);
            let (u2, u3) = (u * u, u * u * u);
            let v = v0 * (2.0 * u3 - 3.0 * u2 + 1.0)
                + d0 * (u3 - 2.0 * u2 + u)
                + v1 * (-2.0 * u3 + 3.0 * u2)
                + d1 * (u3 - u2);
            let d = (v0 - v1) * (6.0 * (u2 - u)) + d0 * (3.0 * u2 - 4.0 * u + 1.0) + d1 * (3.0 * u2 - 2.0 * u);
            (v, d / h)
        };
        StateEvaluator {
            amp: Arc::new(amp),
            ..self.clone()
        }
    }
}

struct Displaced {
    inner: Arc<dyn TailEnvelope>,
    terms: Vec<TailTerm>,
    phases: Vec<Complex64>,
    shift: f64,
}

impl TailEnvelope for Displaced {
    fn terms(&self) -> &[TailTerm] {
        &self.terms
    }

    fn eval(&self, y: Complex64, vals: &mut [Complex64], ders: &mut [Complex64]) {
        self.inner.eval(y - self.shift, vals, ders);
        for j in 0..self.terms.len() {
            vals[j] *= self.phases[j];
            ders[j] *= self.phases[j];
        }
    }

    fn reach(&self) -> f64 {
        self.inner.reach() + self.shift.abs()
    }
}

fn displace_tail(tail: &Tail, side: f64, q: f64, k: f64) -> Tail {
    match tail {
        Tail::Oscillatory(env) => {
            let mut terms = Vec::new();
            let mut phases = Vec::new();
            for t in env.terms() {
                terms.push(TailTerm {
                    quad: t.quad,
                    lin: t.lin - 2.0 * t.quad * side * q + side * k,
                });
                let ph = t.quad * q * q - t.lin * side * q - k * q;
                phases.push(Complex64::from_polar(1.0, ph));
            }
            Tail::Oscillatory(Arc::new(Displaced {
                inner: env.clone(),
                terms,
                phases,
                shift: side * q,
            }))
        }
        other => other.clone(),
    }
}

/// x ↦ e^{(i/ℏ)p(x−q)} ψ(x−q).
pub fn displace(psi: &StateEvaluator, label: PhaseLabel, params: PhysicalParams) -> StateEvaluator {
    let (q, k) = (label.q, label.p / params.hbar);
    if q == 0.0 && k == 0.0 {
        return psi.clone();
    }
    let inner = psi.amp.clone();
    let amp = move |x: f64| {
        let y = x - q;
        let (v, d) = inner(y);
        let ph = Complex64::from_polar(1.0, k * y);
        (ph * v, ph * (d + Complex64::new(0.0, k) * v))
    };
    StateEvaluator {
        amp: Arc::new(amp),
        hints: psi.hints.iter().map(|h| h + q).collect(),
        left_start: psi.left_start + q,
        right_start: psi.right_start + q,
        left: displace_tail(&psi.left, -1.0, q, k),
        right: displace_tail(&psi.right, 1.0, q, k),
        band: psi.band.displaced(q, k),
    }
}
