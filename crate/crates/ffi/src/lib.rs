//! C ABI over `regcoh`. States and families are opaque heap handles owned by
//! the caller and released with the matching `*_free`. Every fallible call
//! returns a `RegcohStatus`; the message of the last failure on the calling
//! thread is available from `regcoh_last_error`.

use regcoh::free_particle::FreeFamily;
use regcoh::hilbert::{inner_product, norm, PhaseLabel, PhysicalParams, StateEvaluator};
use regcoh::iho::{iho_coherent, IhoBasis, IhoFiducialParams, IhoOptions};
use regcoh::verify::{axiom_suite, Axiom, Family, SuiteOptions};
use regcoh::{Complex64, Error};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegcohStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    NonConvergence = 3,
    NonFinite = 4,
    DomainError = 5,
    OutOfRange = 6,
    BelowGroundAction = 7,
    Pole = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegcohScheme {
    Window = 0,
    Gaussian = 1,
    Bump = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegcohAxiom {
    Normalization = 0,
    Continuity = 1,
    IdentityResolution = 2,
    TemporalStability = 3,
    ActionIdentity = 4,
}

impl From<RegcohAxiom> for Axiom {
    fn from(a: RegcohAxiom) -> Self {
        match a {
            RegcohAxiom::Normalization => Axiom::Normalization,
            RegcohAxiom::Continuity => Axiom::Continuity,
            RegcohAxiom::IdentityResolution => Axiom::IdentityResolution,
            RegcohAxiom::TemporalStability => Axiom::TemporalStability,
            RegcohAxiom::ActionIdentity => Axiom::ActionIdentity,
        }
    }
}

/// Verdict of one axiom check; the full report is available as JSON.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RegcohReport {
    pub measured: f64,
    pub predicted: f64,
    pub tolerance: f64,
    /// 1 if |measured − predicted| <= tolerance.
    pub pass: u8,
}

/// A wavefunction x → ψ(x).
pub struct RegcohState {
    inner: StateEvaluator,
}

/// A coherent-state family.
pub struct RegcohFamily {
    inner: Family,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> RegcohStatus {
    match e {
        Error::NonConvergence { .. } | Error::NoConvergence { .. } | Error::StepUnderflow { .. } => {
            RegcohStatus::NonConvergence
        }
        Error::NonFinite { .. } => RegcohStatus::NonFinite,
        Error::DomainError(_) => RegcohStatus::DomainError,
        Error::OutOfAsymptoticRange { .. } | Error::OutOfSupportedRange(_) => RegcohStatus::OutOfRange,
        Error::BelowGroundAction { .. } => RegcohStatus::BelowGroundAction,
        Error::PoleError { .. } => RegcohStatus::Pole,
        Error::NotNormalized { .. }
        | Error::InvalidWindow { .. }
        | Error::InvalidWidth(_)
        | Error::InvalidParameter(_) => RegcohStatus::InvalidParameter,
    }
}

/// Runs `f`, turning errors and panics into a status.
fn guard<F>(f: F) -> RegcohStatus
where
    F: FnOnce() -> Result<(), (RegcohStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RegcohStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside regcoh".into());
            RegcohStatus::Panic
        }
    }
}

fn lib<T>(r: regcoh::Result<T>) -> Result<T, (RegcohStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (RegcohStatus, String) {
    (RegcohStatus::NullPointer, "null pointer argument".into())
}

fn free_family(scheme: RegcohScheme, a: f64, b: f64) -> FreeFamily {
    match scheme {
        RegcohScheme::Window => FreeFamily::Window { k0: a, k1: b },
        RegcohScheme::Gaussian => FreeFamily::Gaussian { kbar: a, a: b },
        RegcohScheme::Bump => FreeFamily::Bump { k0: a, k1: b },
    }
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), (RegcohStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn regcoh_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Free-particle fiducial. `a, b` are (k0, k1) for the window and bump
/// schemes and (kbar, A) for the Gaussian one.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn regcoh_free_fiducial(
    scheme: RegcohScheme,
    a: f64,
    b: f64,
    out: *mut *mut RegcohState,
) -> RegcohStatus {
    guard(|| {
        let psi = lib(free_family(scheme, a, b).fiducial())?;
        put(out, RegcohState { inner: psi })
    })
}

/// e^{−iτH/ℏ}|q,p⟩ for a free-particle family; τ = 0 gives |q,p⟩.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn regcoh_free_coherent(
    scheme: RegcohScheme,
    a: f64,
    b: f64,
    hbar: f64,
    mass: f64,
    q: f64,
    p: f64,
    tau: f64,
    out: *mut *mut RegcohState,
) -> RegcohStatus {
    guard(|| {
        let params = lib(PhysicalParams::new(hbar, mass, 0.0))?;
        let fam = free_family(scheme, a, b);
        let psi = if tau == 0.0 {
            lib(fam.coherent(PhaseLabel::qp(q, p), params))?
        } else {
            lib(fam.evolved(PhaseLabel::new(q, p, tau), params))?
        };
        put(out, RegcohState { inner: psi })
    })
}

/// e^{−itH}Ψ for the Gaussian-regularized inverted-oscillator fiducial
/// (ℏ = m = ω = 1); t = 0 gives the fiducial itself.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn regcoh_iho_fiducial(ebar: f64, a: f64, t: f64, out: *mut *mut RegcohState) -> RegcohStatus {
    guard(|| {
        let p = lib(IhoFiducialParams::new(ebar, a))?;
        let basis = lib(IhoBasis::new(p, IhoOptions { max_moment: 0, t_max: t.abs() }))?;
        put(out, RegcohState { inner: basis.state(t, false) })
    })
}

/// Inverted-oscillator coherent state |q,p⟩.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn regcoh_iho_coherent(
    ebar: f64,
    a: f64,
    q: f64,
    p: f64,
    out: *mut *mut RegcohState,
) -> RegcohStatus {
    guard(|| {
        let params = lib(IhoFiducialParams::new(ebar, a))?;
        let basis = lib(IhoBasis::new(params, IhoOptions::default()))?;
        put(out, RegcohState { inner: iho_coherent(&basis, PhaseLabel::qp(q, p)) })
    })
}

/// # Safety
/// `state` must come from a regcoh constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn regcoh_state_free(state: *mut RegcohState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// ψ(x) into (re, im).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn regcoh_state_eval(
    state: *const RegcohState,
    x: f64,
    re: *mut f64,
    im: *mut f64,
) -> RegcohStatus {
    guard(|| {
        if state.is_null() || re.is_null() || im.is_null() {
            return Err(null());
        }
        let v = (*state).inner.amplitude(x);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err((RegcohStatus::NonFinite, format!("non-finite amplitude at x = {x}")));
        }
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// ψ on `n` points.
///
/// # Safety
/// `xs`, `re`, `im` must each hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn regcoh_state_eval_grid(
    state: *const RegcohState,
    xs: *const f64,
    n: usize,
    re: *mut f64,
    im: *mut f64,
) -> RegcohStatus {
    guard(|| {
        if state.is_null() || xs.is_null() || re.is_null() || im.is_null() {
            return Err(null());
        }
        let xs = std::slice::from_raw_parts(xs, n);
        let re = std::slice::from_raw_parts_mut(re, n);
        let im = std::slice::from_raw_parts_mut(im, n);
        for (i, &x) in xs.iter().enumerate() {
            let v = (*state).inner.amplitude(x);
            re[i] = v.re;
            im[i] = v.im;
        }
        Ok(())
    })
}

/// ‖ψ‖ by adaptive quadrature.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn regcoh_state_norm(state: *const RegcohState, tol: f64, out: *mut f64) -> RegcohStatus {
    guard(|| {
        if state.is_null() || out.is_null() {
            return Err(null());
        }
        *out = lib(norm(&(*state).inner, tol))?;
        Ok(())
    })
}

/// ⟨φ|ψ⟩.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn regcoh_state_inner(
    phi: *const RegcohState,
    psi: *const RegcohState,
    tol: f64,
    re: *mut f64,
    im: *mut f64,
) -> RegcohStatus {
    guard(|| {
        if phi.is_null() || psi.is_null() || re.is_null() || im.is_null() {
            return Err(null());
        }
        let v = lib(inner_product(&(*phi).inner, &(*psi).inner, tol))?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn regcoh_family_free_particle(
    scheme: RegcohScheme,
    a: f64,
    b: f64,
    hbar: f64,
    mass: f64,
    out: *mut *mut RegcohFamily,
) -> RegcohStatus {
    guard(|| {
        let params = lib(PhysicalParams::new(hbar, mass, 0.0))?;
        let fam = lib(Family::free(free_family(scheme, a, b), params))?;
        put(out, RegcohFamily { inner: fam })
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn regcoh_family_iho(ebar: f64, a: f64, t_max: f64, out: *mut *mut RegcohFamily) -> RegcohStatus {
    guard(|| {
        let p = lib(IhoFiducialParams::new(ebar, a))?;
        let fam = lib(Family::iho(p, IhoOptions { max_moment: 0, t_max: t_max.abs() }))?;
        put(out, RegcohFamily { inner: fam })
    })
}

/// # Safety
/// `family` must come from a regcoh constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn regcoh_family_free(family: *mut RegcohFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Runs one axiom with the suite defaults at label (q, p) and time τ.
/// If `json` is non-null the full report is written there as JSON
/// (NUL-terminated); `json_len` receives the length it needs.
///
/// # Safety
/// `family` and `report` must be valid; `json` must hold `json_cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn regcoh_verify(
    family: *const RegcohFamily,
    axiom: RegcohAxiom,
    q: f64,
    p: f64,
    tau: f64,
    seed: u64,
    report: *mut RegcohReport,
    json: *mut c_char,
    json_cap: usize,
    json_len: *mut usize,
) -> RegcohStatus {
    guard(|| {
        if family.is_null() || report.is_null() {
            return Err(null());
        }
        let opts = SuiteOptions {
            axioms: vec![axiom.into()],
            seed,
            label: PhaseLabel::qp(q, p),
            tau,
            ..SuiteOptions::default()
        };
        let r = lib(axiom_suite(&(*family).inner, &opts))?.remove(0);
        *report = RegcohReport {
            measured: r.measured,
            predicted: r.predicted,
            tolerance: r.tolerance,
            pass: r.pass as u8,
        };
        let text = r.to_json();
        if !json_len.is_null() {
            *json_len = text.len();
        }
        if !json.is_null() {
            if json_cap <= text.len() {
                return Err((RegcohStatus::BufferTooSmall, format!("report needs {} bytes", text.len() + 1)));
            }
            ptr::copy_nonoverlapping(text.as_ptr(), json as *mut u8, text.len());
            *json.add(text.len()) = 0;
        }
        Ok(())
    })
}

/// Axiom from its snake_case name, e.g. "identity_resolution".
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn regcoh_axiom_from_name(name: *const c_char, out: *mut RegcohAxiom) -> RegcohStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return Err(null());
        }
        let s = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| (RegcohStatus::InvalidParameter, "name is not UTF-8".to_string()))?;
        let a: Axiom = s
            .parse()
            .map_err(|_| (RegcohStatus::InvalidParameter, format!("unknown axiom '{s}'")))?;
        *out = match a {
            Axiom::Normalization => RegcohAxiom::Normalization,
            Axiom::Continuity => RegcohAxiom::Continuity,
            Axiom::IdentityResolution => RegcohAxiom::IdentityResolution,
            Axiom::TemporalStability => RegcohAxiom::TemporalStability,
            Axiom::ActionIdentity => RegcohAxiom::ActionIdentity,
        };
        Ok(())
    })
}

/// W(E, x) and its x-derivative.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn regcoh_weber_w(e: f64, x: f64, w: *mut f64, dw: *mut f64) -> RegcohStatus {
    guard(|| {
        if w.is_null() || dw.is_null() {
            return Err(null());
        }
        let pt = lib(regcoh::weber::weber_w(e, x))?;
        *w = pt.value;
        *dw = pt.derivative;
        Ok(())
    })
}

/// κ(E), φ(E) = arg Γ(½ − iE) and the normalization C₀(E).
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn regcoh_energy_constants(e: f64, kappa: *mut f64, phi: *mut f64, c0: *mut f64) -> RegcohStatus {
    guard(|| {
        if kappa.is_null() || phi.is_null() || c0.is_null() {
            return Err(null());
        }
        let k = lib(regcoh::weber::energy_constants(e))?;
        *kappa = k.kappa;
        *phi = k.phi;
        *c0 = k.c0;
        Ok(())
    })
}

/// w(z) = e^{−z²} erfc(−iz).
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn regcoh_faddeeva(re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> RegcohStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null());
        }
        let w = regcoh::numerics::faddeeva::faddeeva(Complex64::new(re, im));
        *out_re = w.re;
        *out_im = w.im;
        Ok(())
    })
}
