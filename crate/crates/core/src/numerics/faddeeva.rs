//! Faddeeva function w(z) = e^{−z²} erfc(−iz) by Weideman's rational expansion.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const N: usize = 48;

struct Expansion {
    a: [f64; N],
    l: f64,
}

fn expansion() -> &'static Expansion {
    static CELL: OnceLock<Expansion> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = 2 * N;
        let m2 = 2 * m;
        let l = (N as f64 / 2f64.sqrt()).sqrt();
        let mut f = vec![0.0; m2];
        for (idx, slot) in f.iter_mut().enumerate().skip(1) {
            let k = idx as f64 - m as f64;
            let t = l * (0.5 * k * PI / m as f64).tan();
            *slot = (-t * t).exp() * (l * l + t * t);
        }
        // coefficients are the real part of the DFT of the half-shifted samples
        let mut a = [0.0; N];
        for (j, aj) in a.iter_mut().enumerate() {
            let jj = (j + 1) as f64;
            let mut s = 0.0;
            for i in 0..m2 {
                let g = f[(i + m) % m2];
                s += g * (2.0 * PI * i as f64 * jj / m2 as f64).cos();
            }
            *aj = s / m2 as f64;
        }
        Expansion { a, l }
    })
}

fn upper(z: Complex64) -> Complex64 {
    let e = expansion();
    let iz = Complex64::i() * z;
    let den = Complex64::new(e.l, 0.0) - iz;
    let zz = (Complex64::new(e.l, 0.0) + iz) / den;
    let mut p = Complex64::new(0.0, 0.0);
    for &c in e.a.iter().rev() {
        p = p * zz + c;
    }
    p * 2.0 / (den * den) + 1.0 / (PI.sqrt() * den)
}

/// w(z) for any finite z.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        upper(z)
    } else {
        (-z * z).exp() * 2.0 - upper(-z)
    }
}

/// Complementary error function of complex argument.
pub fn erfc(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        (-z * z).exp() * faddeeva(Complex64::i() * z)
    } else {
        Complex64::new(2.0, 0.0) - (-z * z).exp() * faddeeva(-Complex64::i() * z)
    }
}

/// ∫_a^b exp(−α k² + β k) dk for ℜα ≥ 0, α ≠ 0.
pub fn gaussian_segment(alpha: Complex64, beta: Complex64, a: f64, b: f64) -> Complex64 {
    gaussian_segment_c(alpha, beta, Complex64::new(0.0, 0.0), a, b)
}

/// ∫_a^b exp(−α k² + β k + γ) dk for ℜα ≥ 0, α ≠ 0.
///
/// Every erfc is taken at an argument with non-negative real part and is
/// paired with the integrand's own value at the endpoint, so nothing
/// overflows when ℑβ is large.
pub fn gaussian_segment_c(alpha: Complex64, beta: Complex64, gamma: Complex64, a: f64, b: f64) -> Complex64 {
    let sa = alpha.sqrt();
    let z = |k: f64| sa * k - beta / (sa * 2.0);
    let fk = |k: f64| (-alpha * k * k + beta * k + gamma).exp();
    let peak = || (beta * beta / (alpha * 4.0) + gamma).exp() * 2.0;
    let (za, zb) = (z(a), z(b));
    let i = Complex64::i();
    let diff = if za.re >= 0.0 && zb.re >= 0.0 {
        fk(a) * faddeeva(i * za) - fk(b) * faddeeva(i * zb)
    } else if za.re <= 0.0 && zb.re <= 0.0 {
        fk(b) * faddeeva(-i * zb) - fk(a) * faddeeva(-i * za)
    } else if za.re < 0.0 {
        peak() - fk(b) * faddeeva(i * zb) - fk(a) * faddeeva(-i * za)
    } else {
        -(peak() - fk(a) * faddeeva(i * za) - fk(b) * faddeeva(-i * zb))
    };
    diff * (PI.sqrt() / (sa * 2.0))
}

/// ∫_a^b k·exp(−α k² + β k + γ) dk, same regime as [`gaussian_segment_c`].
pub fn gaussian_segment_k(alpha: Complex64, beta: Complex64, gamma: Complex64, a: f64, b: f64) -> Complex64 {
    let fk = |k: f64| (-alpha * k * k + beta * k + gamma).exp();
    (beta * gaussian_segment_c(alpha, beta, gamma, a, b) - (fk(b) - fk(a))) / (alpha * 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_is_one() {
        assert!((faddeeva(c(0.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn imaginary_unit() {
        let w = faddeeva(c(0.0, 1.0));
        assert!((w.re - 0.427583576155807).abs() < 1e-14);
        assert!(w.im.abs() < 1e-15);
    }

    #[test]
    fn conjugation_reflection() {
        let z = c(1.0, 2.0);
        let lhs = faddeeva(-z.conj());
        assert!((lhs - faddeeva(z).conj()).norm() < 1e-15);
    }

    // reference values from a 30-digit evaluation
    #[test]
    fn reference_points() {
        let pts = [
            (c(1.5, 0.3), c(0.17386534625254563, 0.39166525260814467)),
            (c(-3.0, 0.01), c(0.0009088307067415805, -0.2011464625401964)),
            (c(10.0, 10.0), c(0.028279467454232456, 0.028138433276336895)),
            (c(0.5, -0.5), c(1.2220084158685705, 1.1893393085928645)),
            (c(18.0, 0.0), c(1.9435148500492928e-141, 0.03139246159862251)),
        ];
        for (z, w) in pts {
            let got = faddeeva(z);
            assert!((got - w).norm() / w.norm() < 1e-12, "z={z} got={got} want={w}");
        }
    }

    #[test]
    fn erfc_real_axis() {
        assert!((erfc(c(1.0, 0.0)).re - 0.15729920705028513).abs() < 1e-15);
        assert!((erfc(c(-1.0, 0.0)).re - 1.8427007929497148).abs() < 1e-15);
    }

    #[test]
    fn gaussian_segment_real_case() {
        // ∫_{-1}^{2} e^{-k²} dk = (√π/2)(erf 2 + erf 1)
        let v = gaussian_segment(c(1.0, 0.0), c(0.0, 0.0), -1.0, 2.0);
        let want = 0.886226925452758 * (0.9953222650189527 + 0.8427007929497149);
        assert!((v - c(want, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn first_moment_segment() {
        let (al, be, ga) = (c(0.3, 0.8), c(0.5, -6.0), c(0.1, 0.2));
        let got = gaussian_segment_k(al, be, ga, -1.5, 2.5);
        let f = |k: f64| (-al * k * k + be * k + ga).exp() * k;
        let q = crate::numerics::quad::integrate_with(&f, -1.5, 2.5, &[], &crate::numerics::quad::QuadConfig::abs(1e-14))
            .unwrap();
        assert!((got - q.value).norm() < 1e-12);
    }

    #[test]
    fn gaussian_segment_pure_phase_matches_quadrature() {
        let alpha = c(0.0, 0.7);
        for beta in [c(0.0, 3.0), c(0.0, -40.0), c(0.0, 0.2)] {
            for (a, b) in [(-1.0, 2.0), (0.5, 3.0), (-4.0, -1.0)] {
                let got = gaussian_segment(alpha, beta, a, b);
                let f = |k: f64| (-alpha * k * k + beta * k).exp();
                let q = crate::numerics::quad::integrate_with(
                    &f,
                    a,
                    b,
                    &[],
                    &crate::numerics::quad::QuadConfig::abs(1e-13),
                )
                .unwrap();
                assert!((got - q.value).norm() < 1e-11, "beta={beta} [{a},{b}]");
            }
        }
    }
}
