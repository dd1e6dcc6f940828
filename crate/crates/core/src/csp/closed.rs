//! Closed-form flows of the Riccati equation `v' = a + b·v²`.
//!
//! `ric_v(a,b,v0,t)` is the state after time `t`, `ric_x(a,b,v0,t)` the
//! integral of the state over `[0,t]`. Past a finite-time blow-up both
//! return NaN.

use crate::casp::NumFn;

/// ln(cosh(u)) without overflow.
fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// ln|sinh(u)| without overflow.
fn ln_abs_sinh(u: f64) -> f64 {
    let a = u.abs();
    a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2
}

enum Regime {
    Linear,
    Pure,
    Tan { s: f64, th0: f64 },
    Tanh { s: f64, u0: f64 },
    Coth { s: f64, u0: f64 },
    Rest,
}

fn regime(a: f64, b: f64, v0: f64) -> Regime {
    if b == 0.0 {
        return Regime::Linear;
    }
    if a == 0.0 {
        return Regime::Pure;
    }
    if a * b > 0.0 {
        let s = (a / b).sqrt();
        return Regime::Tan { s, th0: (v0 / s).atan() };
    }
    let s = (-a / b).sqrt();
    let r = v0 / s;
    if (r.abs() - 1.0).abs() < 1e-15 {
        Regime::Rest
    } else if r.abs() < 1.0 {
        Regime::Tanh { s, u0: -r.atanh() }
    } else {
        Regime::Coth { s, u0: -(1.0 / r).atanh() }
    }
}

pub fn ric_v(a: f64, b: f64, v0: f64, t: f64) -> f64 {
    match regime(a, b, v0) {
        Regime::Linear => v0 + a * t,
        Regime::Pure => {
            let den = 1.0 - b * v0 * t;
            if den <= 0.0 {
                f64::NAN
            } else {
                v0 / den
            }
        }
        Regime::Tan { s, th0 } => {
            let th = b * s * t + th0;
            if th.abs() >= std::f64::consts::FRAC_PI_2 {
                f64::NAN
            } else {
                s * th.tan()
            }
        }
        Regime::Tanh { s, u0 } => -s * (b * s * t + u0).tanh(),
        Regime::Coth { s, u0 } => {
            let u = b * s * t + u0;
            if u == 0.0 || u.signum() != u0.signum() {
                f64::NAN
            } else {
                -s / u.tanh()
            }
        }
        Regime::Rest => v0,
    }
}

pub fn ric_x(a: f64, b: f64, v0: f64, t: f64) -> f64 {
    match regime(a, b, v0) {
        Regime::Linear => v0 * t + 0.5 * a * t * t,
        Regime::Pure => {
            let den = 1.0 - b * v0 * t;
            if den <= 0.0 {
                f64::NAN
            } else {
                -den.ln() / b
            }
        }
        Regime::Tan { s, th0 } => {
            let th = b * s * t + th0;
            if th.abs() >= std::f64::consts::FRAC_PI_2 {
                f64::NAN
            } else {
                -(th.cos() / th0.cos()).ln() / b
            }
        }
        Regime::Tanh { s, u0 } => {
            let u = b * s * t + u0;
            -(ln_cosh(u) - ln_cosh(u0)) / b
        }
        Regime::Coth { s, u0 } => {
            let u = b * s * t + u0;
            if u == 0.0 || u.signum() != u0.signum() {
                f64::NAN
            } else {
                -(ln_abs_sinh(u) - ln_abs_sinh(u0)) / b
            }
        }
        Regime::Rest => v0 * t,
    }
}

/// Time at which the flow through `v0` crosses zero, if it does.
pub fn ric_zero_time(a: f64, b: f64, v0: f64) -> Option<f64> {
    if v0 == 0.0 {
        return Some(0.0);
    }
    let t = match regime(a, b, v0) {
        Regime::Linear if a != 0.0 => -v0 / a,
        Regime::Tan { s, th0 } => -th0 / (b * s),
        Regime::Tanh { s, u0 } => -u0 / (b * s),
        _ => return None,
    };
    t.is_finite().then_some(t)
}

pub fn eval_fn(g: NumFn, args: &[f64]) -> f64 {
    if args.len() != 4 {
        return f64::NAN;
    }
    match g {
        NumFn::RicV => ric_v(args[0], args[1], args[2], args[3]),
        NumFn::RicX => ric_x(args[0], args[1], args[2], args[3]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent RK4 reference for the same ODE.
    fn rk4(a: f64, b: f64, v0: f64, t: f64) -> (f64, f64) {
        let n = 20000;
        let h = t / n as f64;
        let f = |v: f64| a + b * v * v;
        let (mut v, mut x) = (v0, 0.0);
        for _ in 0..n {
            let k1 = f(v);
            let k2 = f(v + 0.5 * h * k1);
            let k3 = f(v + 0.5 * h * k2);
            let k4 = f(v + h * k3);
            let l1 = v;
            let l2 = v + 0.5 * h * k1;
            let l3 = v + 0.5 * h * k2;
            let l4 = v + h * k3;
            x += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        (v, x)
    }

    #[test]
    fn matches_numeric_integration_in_every_regime() {
        let cases = [
            (1.0, -0.1, 0.0, 7.0),
            (1.0, -0.1, 5.0, 3.0),
            (-1.0, -0.1, 2.5, 1.5),
            (0.0, -0.1, 3.0, 4.0),
            (2.0, 0.0, -1.0, 2.0),
            (-3.0, -0.1, -4.0, 0.8),
            (0.5, 0.1, 0.2, 1.0),
        ];
        for (a, b, v0, t) in cases {
            let (v, x) = rk4(a, b, v0, t);
            assert!((ric_v(a, b, v0, t) - v).abs() < 1e-7, "v {a} {b} {v0} {t}");
            assert!((ric_x(a, b, v0, t) - x).abs() < 1e-7, "x {a} {b} {v0} {t}");
        }
    }

    #[test]
    fn terminal_velocity_and_stop_time() {
        assert!((ric_v(1.0, -0.1, 0.0, 200.0) - 10f64.sqrt()).abs() < 1e-9);
        let t = ric_zero_time(-1.0, -0.1, 3.0).unwrap();
        assert!(ric_v(-1.0, -0.1, 3.0, t).abs() < 1e-12);
        assert!(ric_zero_time(0.0, -0.1, 3.0).is_none());
    }

    #[test]
    fn blow_up_is_nan() {
        assert!(ric_v(-1.0, -0.1, 0.0, 100.0).is_nan());
        assert!(ric_v(0.0, 1.0, 1.0, 2.0).is_nan());
    }
}
