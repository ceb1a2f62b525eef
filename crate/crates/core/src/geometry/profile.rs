//! Oscillation profiles g(s, y): the strip depth modulator, periodic in the
//! fast variable y with period l(s), together with its mean value mu(s).

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Profile of the strip depth. All presets use the fast period l(s) = 2*pi.
#[derive(Clone, Debug)]
pub enum Profile {
    /// g(s, y) = value.
    Constant { value: f64 },
    /// g(s, y) = 2 + cos(y); mean value 2.
    TwoPlusCos,
    /// g(s, y) = 2 + amp*sin(s) + cos(y); mean value 2 + amp*sin(s).
    /// Requires |amp| < 1 so that g stays positive.
    SinShiftedCos { amp: f64 },
}

impl Profile {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Config(format!("constant profile must be positive, got {value}")));
        }
        Ok(Profile::Constant { value })
    }

    pub fn sin_shifted_cos(amp: f64) -> Result<Self> {
        if !(amp.abs() < 1.0) {
            return Err(Error::Config(format!(
                "sin-shifted profile needs |amp| < 1 to keep g positive, got {amp}"
            )));
        }
        Ok(Profile::SinShiftedCos { amp })
    }

    pub fn eval(&self, s: f64, y: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::TwoPlusCos => 2.0 + y.cos(),
            Profile::SinShiftedCos { amp } => 2.0 + amp * s.sin() + y.cos(),
        }
    }

    /// Fast-variable period l(s).
    pub fn l(&self, _s: f64) -> f64 {
        2.0 * std::f64::consts::PI
    }

    /// Lower bound on g.
    pub fn g0(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::TwoPlusCos => 1.0,
            Profile::SinShiftedCos { amp } => 1.0 - amp.abs(),
        }
    }

    /// Upper bound on g.
    pub fn g1(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::TwoPlusCos => 3.0,
            Profile::SinShiftedCos { amp } => 3.0 + amp.abs(),
        }
    }

    /// Strict lower bound on the fast period.
    pub fn l0(&self) -> f64 {
        6.0
    }

    /// Strict upper bound on the fast period.
    pub fn l1(&self) -> f64 {
        6.5
    }
}

/// Mean of g(s, .) over one fast period: composite Gauss-Legendre starting at
/// 32 points, doubled until two successive values agree to 1e-12.
pub fn mu(profile: &Profile, s: f64) -> Result<f64> {
    let l = profile.l(s);
    let mut n = 32;
    let mut prev = f64::NAN;
    while n <= 2048 {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * l;
        let mut sum = 0.0;
        for (xi, wi) in x.iter().zip(w.iter()) {
            sum += wi * profile.eval(s, half * (1.0 + xi));
        }
        let value = sum * half / l;
        if (value - prev).abs() < 1e-12 * value.abs().max(1.0) {
            return Ok(value);
        }
        prev = value;
        n *= 2;
    }
    Err(Error::Numerical(format!(
        "mean-value quadrature did not converge at s = {s}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_profile_mean() {
        let p = Profile::constant(1.7).unwrap();
        for k in 0..10 {
            let s = 0.7 * k as f64;
            assert!((mu(&p, s).unwrap() - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_averages_out() {
        let p = Profile::TwoPlusCos;
        for k in 0..20 {
            let s = 0.4 * k as f64;
            assert!((mu(&p, s).unwrap() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn additive_shift_passes_through_mean() {
        let amp = 0.99;
        let p = Profile::sin_shifted_cos(amp).unwrap();
        for k in 0..20 {
            let s = 2.0 * PI * k as f64 / 20.0;
            let expected = 2.0 + amp * s.sin();
            assert!(
                (mu(&p, s).unwrap() - expected).abs() < 1e-10,
                "mu at s={s}"
            );
        }
    }

    #[test]
    fn bounds_and_periodicity() {
        for p in [
            Profile::constant(0.5).unwrap(),
            Profile::TwoPlusCos,
            Profile::sin_shifted_cos(0.5).unwrap(),
        ] {
            assert!(p.g0() > 0.0);
            assert!(0.0 < p.l0() && p.l0() < p.l(0.0) && p.l(0.0) < p.l1());
            for i in 0..40 {
                for j in 0..40 {
                    let s = 0.33 * i as f64;
                    let y = 0.41 * j as f64;
                    let g = p.eval(s, y);
                    assert!(p.g0() <= g + 1e-14 && g <= p.g1() + 1e-14);
                    let l = p.l(s);
                    assert!((p.eval(s, y + l) - g).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_degenerate_profiles() {
        assert!(Profile::constant(0.0).is_err());
        assert!(Profile::sin_shifted_cos(1.0).is_err());
    }
}
