//! Complex log-gamma on the branch continuous off the negative real axis.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

// B_{2k} / (2k (2k−1)) for k = 1..10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

const SHIFT_TO: f64 = 12.0;

fn stirling(z: Complex64) -> Complex64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series
}

/// ln Γ(z). For ℜz < 12 the argument is shifted up with
/// ln Γ(z) = ln Γ(z+n) − Σ ln(z+k), which keeps ℑ ln Γ continuous in z
/// (this replaces a reflection step; both give the same exp).
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::PoleError { re: z.re, im: z.im });
    }
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_TO {
        acc += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - acc)
}

/// arg Γ(z) on the continuous branch (ℑ ln Γ).
pub fn arg_gamma(z: Complex64) -> Result<f64> {
    log_gamma_complex(z).map(|v| v.im)
}

/// Digamma ψ(z) by the same shift plus asymptotic series.
pub fn digamma(z: Complex64) -> Complex64 {
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_TO {
        acc += 1.0 / w;
        w += 1.0;
    }
    let inv2 = 1.0 / (w * w);
    // B_{2k}/(2k) for k = 1..8
    let coeffs = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
        -3617.0 / 8160.0,
    ];
    let mut s = Complex64::new(0.0, 0.0);
    let mut pow = inv2;
    for c in coeffs {
        s += pow * c;
        pow *= inv2;
    }
    w.ln() - 0.5 / w - s - acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_and_one() {
        let h = log_gamma_complex(c(0.5, 0.0)).unwrap();
        assert!((h.re - 0.5723649429247001).abs() < 1e-14 && h.im.abs() < 1e-15);
        let o = log_gamma_complex(c(1.0, 0.0)).unwrap();
        assert!(o.norm() < 1e-14);
    }

    #[test]
    fn arg_at_half_minus_i() {
        // 30-digit reference: Im lnΓ(1/2 − i)
        let v = log_gamma_complex(c(0.5, -1.0)).unwrap();
        assert!((v.im - 0.955007724342569).abs() < 1e-12, "{v}");
        assert!((v.re - (-0.6527906442043729)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn poles_rejected() {
        for n in [0.0, -1.0, -7.0] {
            assert!(matches!(log_gamma_complex(c(n, 0.0)), Err(Error::PoleError { .. })));
        }
        assert!(log_gamma_complex(c(-2.5, 0.0)).is_ok());
    }

    #[test]
    fn gamma_of_integers() {
        let mut fact = 1.0f64;
        for n in 1..15 {
            let v = log_gamma_complex(c(n as f64, 0.0)).unwrap();
            assert!((v.re - fact.ln()).abs() < 1e-12 * (1.0 + fact.ln().abs()));
            fact *= n as f64;
        }
    }

    #[test]
    fn continuous_imaginary_part_along_half_line() {
        let mut prev = arg_gamma(c(0.5, 0.0)).unwrap();
        for k in 1..400 {
            let e = k as f64 * 0.05;
            let v = arg_gamma(c(0.5, -e)).unwrap();
            assert!((v - prev).abs() < 0.5, "jump at E = {e}");
            prev = v;
        }
    }

    #[test]
    fn digamma_at_one_and_half() {
        let g = 0.5772156649015329;
        assert!((digamma(c(1.0, 0.0)).re + g).abs() < 1e-14);
        assert!((digamma(c(0.5, 0.0)).re + g + 2.0 * 2f64.ln()).abs() < 1e-14);
    }
}
