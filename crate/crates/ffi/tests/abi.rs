use regcoh_ffi::*;
use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { regcoh_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n.min(511));
    String::from_utf8(buf).unwrap()
}

#[test]
fn gaussian_coherent_state_is_normalized() {
    let mut psi = ptr::null_mut();
    unsafe {
        assert_eq!(
            regcoh_free_coherent(RegcohScheme::Gaussian, 1.0, 10.0, 1.0, 1.0, 0.5, 0.3, 0.0, &mut psi),
            RegcohStatus::Ok
        );
        let mut n = 0.0;
        assert_eq!(regcoh_state_norm(psi, 1e-10, &mut n), RegcohStatus::Ok);
        assert!((n - 1.0).abs() < 1e-8);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(regcoh_state_inner(psi, psi, 1e-10, &mut re, &mut im), RegcohStatus::Ok);
        assert!((re - 1.0).abs() < 1e-8 && im.abs() < 1e-10);
        regcoh_state_free(psi);
    }
}

#[test]
fn grid_matches_pointwise() {
    let mut psi = ptr::null_mut();
    unsafe {
        assert_eq!(regcoh_free_fiducial(RegcohScheme::Window, 0.0, 2.0, &mut psi), RegcohStatus::Ok);
        let xs = [-1.0, 0.0, 2.5];
        let (mut re, mut im) = ([0.0; 3], [0.0; 3]);
        assert_eq!(
            regcoh_state_eval_grid(psi, xs.as_ptr(), 3, re.as_mut_ptr(), im.as_mut_ptr()),
            RegcohStatus::Ok
        );
        for i in 0..3 {
            let (mut r, mut m) = (0.0, 0.0);
            assert_eq!(regcoh_state_eval(psi, xs[i], &mut r, &mut m), RegcohStatus::Ok);
            assert_eq!((r, m), (re[i], im[i]));
        }
        assert!((re[1] * re[1] + im[1] * im[1] - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        regcoh_state_free(psi);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut psi = ptr::null_mut();
    unsafe {
        assert_eq!(regcoh_free_fiducial(RegcohScheme::Window, 2.0, 1.0, &mut psi), RegcohStatus::InvalidParameter);
        assert!(psi.is_null());
        assert!(last_error().contains("invalid window"));
        assert_eq!(regcoh_iho_fiducial(-2.0, 1.0, 0.0, &mut psi), RegcohStatus::OutOfRange);
        assert_eq!(regcoh_free_fiducial(RegcohScheme::Window, 0.0, 1.0, ptr::null_mut()), RegcohStatus::NullPointer);
        let mut n = 0.0;
        assert_eq!(regcoh_state_norm(ptr::null(), 1e-10, &mut n), RegcohStatus::NullPointer);
        regcoh_state_free(ptr::null_mut());
        regcoh_family_free(ptr::null_mut());
    }
}

#[test]
fn special_functions() {
    unsafe {
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(regcoh_faddeeva(0.0, 1.0, &mut re, &mut im), RegcohStatus::Ok);
        assert!((re - 0.427_583_576_155_807).abs() < 1e-12 && im.abs() < 1e-15);
        let (mut k, mut phi, mut c0) = (0.0, 0.0, 0.0);
        assert_eq!(regcoh_energy_constants(1.0, &mut k, &mut phi, &mut c0), RegcohStatus::Ok);
        let m = (-std::f64::consts::PI).exp();
        assert!((k * (k + 2.0 * m) - 1.0).abs() < 1e-14);
        let (mut w, mut dw) = (0.0, 0.0);
        assert_eq!(regcoh_weber_w(0.5, 3.0, &mut w, &mut dw), RegcohStatus::Ok);
        assert!(w.is_finite() && dw.is_finite());
    }
}

#[test]
fn verify_through_the_abi() {
    let mut fam = ptr::null_mut();
    unsafe {
        assert_eq!(
            regcoh_family_free_particle(RegcohScheme::Window, 0.0, 2.0, 1.0, 1.0, &mut fam),
            RegcohStatus::Ok
        );
        let name = CString::new("normalization").unwrap();
        let mut axiom = RegcohAxiom::ActionIdentity;
        assert_eq!(regcoh_axiom_from_name(name.as_ptr(), &mut axiom), RegcohStatus::Ok);
        assert_eq!(axiom, RegcohAxiom::Normalization);
        let mut rep = RegcohReport::default();
        let mut need = 0usize;
        // size query first, then the real call
        assert_eq!(
            regcoh_verify(fam, axiom, 0.5, 0.3, 1.0, 0, &mut rep, ptr::null_mut(), 0, &mut need),
            RegcohStatus::Ok
        );
        assert_eq!(rep.pass, 1);
        let mut small = vec![0 as c_char; 8];
        assert_eq!(
            regcoh_verify(fam, axiom, 0.5, 0.3, 1.0, 0, &mut rep, small.as_mut_ptr(), small.len(), &mut need),
            RegcohStatus::BufferTooSmall
        );
        let mut buf = vec![0u8; need + 1];
        assert_eq!(
            regcoh_verify(fam, axiom, 0.5, 0.3, 1.0, 0, &mut rep, buf.as_mut_ptr() as *mut c_char, buf.len(), &mut need),
            RegcohStatus::Ok
        );
        let text = std::str::from_utf8(&buf[..need]).unwrap();
        assert!(text.starts_with("{\"axiom\":\"normalization\""));
        let bogus = CString::new("bogus").unwrap();
        assert_eq!(regcoh_axiom_from_name(bogus.as_ptr(), &mut axiom), RegcohStatus::InvalidParameter);
        regcoh_family_free(fam);
    }
}

fn include_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_is_generated_and_compiles() {
    let header = include_dir().join("regcoh.h");
    let text = std::fs::read_to_string(&header).expect("build.rs writes include/regcoh.h");
    for sym in ["regcoh_free_coherent", "regcoh_verify", "REGCOH_STATUS_NON_CONVERGENCE", "typedef struct RegcohState RegcohState"] {
        assert!(text.contains(sym), "{sym}");
    }
    if !have_cc() {
        eprintln!("cc not found; skipping compile check");
        return;
    }
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let st = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include_dir())
        .arg(&src)
        .status()
        .unwrap();
    assert!(st.success());
}

#[test]
fn c_program_links_against_staticlib() {
    if !have_cc() {
        eprintln!("cc not found; skipping link check");
        return;
    }
    // target/<profile>/deps/<this test> → target/<profile>/libregcoh_ffi.a
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libregcoh_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping link check", lib.display());
        return;
    }
    let out = std::env::temp_dir().join(format!("regcoh_smoke_{}", std::process::id()));
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let st = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{:?}", run);
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("norm=1.0000000000"));
}
