//! Dormand–Prince 8(5,3) integrator for scalar second-order equations
//! y″ = f(x, y, y′), carried as the first-order pair (y, y′).

use crate::error::{Error, Result};

const C: [f64; 12] = [
    0.0,
    5.260_015_195_876_773E-2,
    7.890_022_793_815_16E-2,
    1.183_503_419_072_274E-1,
    2.816_496_580_927_726E-1,
    3.333_333_333_333_333E-1,
    0.25,
    3.076_923_076_923_077E-1,
    6.512_820_512_820_513E-1,
    0.6,
    8.571_428_571_428_571E-1,
    1.0,
];

const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [5.260_015_195_876_773E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.972_505_698_453_79E-2, 5.917_517_095_361_37E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.958_758_547_680_685E-2, 0.0, 8.876_275_643_042_054E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        2.413_651_341_592_667E-1,
        0.0,
        -8.845_494_793_282_861E-1,
        9.248_340_032_617_92E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.703_703_703_703_703_5E-2,
        0.0,
        0.0,
        1.708_286_087_294_738_6E-1,
        1.254_676_875_668_224_2E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.7109375E-2,
        0.0,
        0.0,
        1.702_522_110_195_440_5E-1,
        6.021_653_898_045_596E-2,
        -1.7578125E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.709_200_011_850_479E-2,
        0.0,
        0.0,
        1.703_839_257_122_399_8E-1,
        1.072_620_304_463_732_8E-1,
        -1.531_943_774_862_440_2E-2,
        8.273_789_163_814_023E-3,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        6.241_109_587_160_757E-1,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -8.682_193_468_417_26E-1,
        2.759_209_969_944_671E1,
        2.015_406_755_047_789_4E1,
        -4.348_988_418_106_996E1,
        0.0,
        0.0,
        0.0,
    ],
    [
        4.776_625_364_382_643_4E-1,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -5.902_908_268_368_43E-1,
        2.123_005_144_818_119_3E1,
        1.527_923_363_288_242_3E1,
        -3.328_821_096_898_486E1,
        -2.033_120_170_850_862_7E-2,
        0.0,
        0.0,
    ],
    [
        -9.371_424_300_859_873E-1,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -1.852_006_565_999_696E1,
        2.273_948_709_935_050_5E1,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -1.053_449_546_673_725E1,
        -2.000_872_058_224_862_5,
        -1.795_893_186_311_88E1,
        2.794_888_452_941_996E1,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        1.236_056_717_579_430_3E1,
        6.433_927_460_157_636E-1,
    ],
];

const B: [f64; 12] = [
    5.429_373_411_656_876_5E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199E-1,
    -1.521_609_496_625_161E-1,
    2.013_654_008_040_303_4E-1,
    4.471_061_572_777_259E-2,
];

const ER: [f64; 12] = [
    1.312_004_499_419_488E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -4.957_589_496_572_502E-1,
    1.664_377_182_454_986_4,
    -3.503_288_487_499_736_6E-1,
    3.341_791_187_130_175E-1,
    8.192_320_648_511_571E-2,
    -2.235_530_786_388_629_4E-2,
];

const BHH: [f64; 3] = [
    2.440_944_881_889_764E-1,
    7.338_466_882_816_118E-1,
    2.205_882_352_941_176_6E-2,
];

const MAX_STEPS: usize = 1_000_000;

/// Accepted steps of one integration; `x` is strictly monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub local_error: Vec<f64>,
}

impl OdeSolution {
    pub fn end(&self) -> (f64, f64, f64) {
        let n = self.x.len() - 1;
        (self.x[n], self.y[n], self.dy[n])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

impl OdeConfig {
    pub fn tol(tol: f64) -> Self {
        OdeConfig {
            rtol: tol,
            atol: tol,
            h_max: f64::INFINITY,
        }
    }
}

/// Integrate y″ = rhs(x, y, y′) from (x0, y0, dy0) to x1.
pub fn integrate_ode<F: Fn(f64, f64, f64) -> f64>(
    rhs: F,
    x0: f64,
    y0: f64,
    dy0: f64,
    x1: f64,
    tol: f64,
) -> Result<OdeSolution> {
    integrate_ode_with(rhs, x0, y0, dy0, x1, &OdeConfig::tol(tol))
}

pub fn integrate_ode_with<F: Fn(f64, f64, f64) -> f64>(
    rhs: F,
    x0: f64,
    y0: f64,
    dy0: f64,
    x1: f64,
    cfg: &OdeConfig,
) -> Result<OdeSolution> {
    let f = |x: f64, s: [f64; 2]| [s[1], rhs(x, s[0], s[1])];
    let mut sol = OdeSolution {
        x: vec![x0],
        y: vec![y0],
        dy: vec![dy0],
        local_error: vec![0.0],
    };
    if x1 == x0 {
        return Ok(sol);
    }
    let dir = (x1 - x0).signum();
    let span = (x1 - x0).abs();
    let mut x = x0;
    let mut s = [y0, dy0];
    let mut h = (0.01 * span).min(cfg.h_max).min(0.1);
    let mut k = [[0.0f64; 2]; 12];
    let mut steps = 0;
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepUnderflow { at: x });
        }
        let last = h >= (x1 - x).abs();
        let hh = if last { x1 - x } else { dir * h };
        k[0] = f(x, s);
        for i in 1..12 {
            let mut st = s;
            for (j, kj) in k.iter().enumerate().take(i) {
                let a = A[i][j];
                if a != 0.0 {
                    st[0] += hh * a * kj[0];
                    st[1] += hh * a * kj[1];
                }
            }
            k[i] = f(x + C[i] * hh, st);
        }
        let mut inc = [0.0; 2];
        let mut e5 = [0.0; 2];
        for i in 0..12 {
            for d in 0..2 {
                inc[d] += B[i] * k[i][d];
                e5[d] += ER[i] * k[i][d];
            }
        }
        let snew = [s[0] + hh * inc[0], s[1] + hh * inc[1]];
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for d in 0..2 {
            let sk = cfg.atol + cfg.rtol * s[d].abs().max(snew[d].abs());
            let e3 = inc[d] - BHH[0] * k[0][d] - BHH[1] * k[8][d] - BHH[2] * k[11][d];
            err5 += (e5[d] / sk).powi(2);
            err3 += (e3 / sk).powi(2);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = hh.abs() * err5 * (1.0 / (2.0 * deno)).sqrt();
        if !err.is_finite() {
            h *= 0.2;
        } else if err <= 1.0 {
            x = if last { x1 } else { x + hh };
            s = snew;
            sol.x.push(x);
            sol.y.push(s[0]);
            sol.dy.push(s[1]);
            sol.local_error.push(err * cfg.atol.max(cfg.rtol * s[0].abs()));
            let fac = (0.9 * err.powf(-0.125)).clamp(0.333, 6.0);
            h = (hh.abs() * fac).min(cfg.h_max);
        } else {
            let fac = (0.9 * err.powf(-0.125)).clamp(0.2, 1.0);
            h = hh.abs() * fac;
        }
        if h < 1e-14 * x.abs().max(1.0) {
            return Err(Error::StepUnderflow { at: x });
        }
        if !(s[0].is_finite() && s[1].is_finite()) {
            return Err(Error::StepUnderflow { at: x });
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine() {
        let s = integrate_ode(|_, y, _| -y, 0.0, 0.0, 1.0, PI / 2.0, 1e-12).unwrap();
        let (x, y, dy) = s.end();
        assert_eq!(x, PI / 2.0);
        assert!((y - 1.0).abs() < 1e-10 && dy.abs() < 1e-10);
    }

    #[test]
    fn exponential() {
        let s = integrate_ode(|_, y, _| y, 0.0, 1.0, 1.0, 1.0, 1e-12).unwrap();
        assert!((s.end().1 - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn backward_direction() {
        let s = integrate_ode(|_, y, _| -y, 1.0, 1f64.sin(), 1f64.cos(), -2.0, 1e-12).unwrap();
        let (_, y, dy) = s.end();
        assert!((y - (-2f64).sin()).abs() < 1e-10 && (dy - (-2f64).cos()).abs() < 1e-10);
        assert!(s.x.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn weber_round_trip() {
        let a = 0.7;
        let rhs = |x: f64, y: f64, _| (x * x / 4.0 - a) * y;
        let fwd = integrate_ode(rhs, 0.0, 0.3, -0.8, 3.0, 1e-13).unwrap();
        let (_, y, dy) = fwd.end();
        let back = integrate_ode(rhs, 3.0, y, dy, 0.0, 1e-13).unwrap();
        let (_, y0, dy0) = back.end();
        assert!((y0 - 0.3).abs() < 1e-9 && (dy0 + 0.8).abs() < 1e-9);
    }

    #[test]
    fn energy_conserved() {
        let tol = 1e-10;
        let s = integrate_ode(|_, y, _| -y, 0.0, 0.0, 1.0, 50.0, tol).unwrap();
        for i in 0..s.x.len() {
            let e = s.y[i] * s.y[i] + s.dy[i] * s.dy[i];
            assert!((e - 1.0).abs() < tol * 10.0, "x={} drift {}", s.x[i], e - 1.0);
        }
    }

    #[test]
    fn blowup_underflows() {
        let r = integrate_ode(|_, y, _| y * y * y, 0.0, 1.0, 1.0, 10.0, 1e-10);
        assert!(r.is_err());
    }
}
