//! Closed boundary curves with arclength (unit-speed) parametrization.

use crate::error::{Error, Result};

/// Number of panels in the ellipse arclength table.
const ELLIPSE_TABLE_PANELS: usize = 4096;

/// 5-point Gauss-Legendre rule on [-1, 1].
const GL5_X: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_W: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

/// A closed C^2 curve traversed counterclockwise at unit speed.
///
/// `eval` maps arclength s in [0, period] to a point. Derivatives are taken
/// with respect to arclength, so the tangent `d1` has unit length everywhere.
/// The outward normal is (y', -x') and `kappa` is the curvature factor
/// x'y'' - y'x'', positive for a convex counterclockwise curve.
#[derive(Clone, Debug)]
pub enum Curve {
    Circle { radius: f64 },
    Ellipse(Ellipse),
}

/// Ellipse with semi-axes a >= b, reparametrized by arclength through a
/// precomputed monotone table s(theta) inverted by Newton iteration.
#[derive(Clone, Debug)]
pub struct Ellipse {
    a: f64,
    b: f64,
    perimeter: f64,
    /// Cumulative arclength at theta_k = 2*pi*k / ELLIPSE_TABLE_PANELS.
    s_table: Vec<f64>,
}

impl Ellipse {
    fn speed(&self, theta: f64) -> f64 {
        let (sin, cos) = theta.sin_cos();
        (self.a * self.a * sin * sin + self.b * self.b * cos * cos).sqrt()
    }

    /// Arclength from theta_k (nearest table node below) to theta, plus the
    /// table value: accurate continuous s(theta).
    fn s_of_theta(&self, theta: f64) -> f64 {
        let step = 2.0 * std::f64::consts::PI / ELLIPSE_TABLE_PANELS as f64;
        let k = ((theta / step).floor() as isize).clamp(0, ELLIPSE_TABLE_PANELS as isize - 1)
            as usize;
        let t0 = k as f64 * step;
        let half = 0.5 * (theta - t0);
        let mid = t0 + half;
        let mut inc = 0.0;
        for (x, w) in GL5_X.iter().zip(GL5_W.iter()) {
            inc += w * self.speed(mid + half * x);
        }
        self.s_table[k] + inc * half
    }

    /// Invert s(theta) by bisection seed from the table plus Newton steps.
    fn theta_of_s(&self, s: f64) -> f64 {
        let step = 2.0 * std::f64::consts::PI / ELLIPSE_TABLE_PANELS as f64;
        // Table is monotone: binary search for the panel containing s.
        let k = match self
            .s_table
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        }
        .min(ELLIPSE_TABLE_PANELS - 1);
        let mut theta = k as f64 * step
            + step * (s - self.s_table[k]) / (self.s_table[k + 1] - self.s_table[k]);
        for _ in 0..20 {
            let f = self.s_of_theta(theta) - s;
            let d = self.speed(theta);
            let delta = f / d;
            theta -= delta;
            if delta.abs() < 1e-15 * (1.0 + theta.abs()) {
                break;
            }
        }
        theta
    }
}

impl Curve {
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Curve::Circle { radius })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!(
                "ellipse semi-axes must be positive, got a={a}, b={b}"
            )));
        }
        let mut ell = Ellipse { a, b, perimeter: 0.0, s_table: Vec::new() };
        let step = 2.0 * std::f64::consts::PI / ELLIPSE_TABLE_PANELS as f64;
        let mut table = Vec::with_capacity(ELLIPSE_TABLE_PANELS + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 0..ELLIPSE_TABLE_PANELS {
            let t0 = k as f64 * step;
            let half = 0.5 * step;
            let mid = t0 + half;
            let mut inc = 0.0;
            for (x, w) in GL5_X.iter().zip(GL5_W.iter()) {
                inc += w * ell.speed(mid + half * x);
            }
            acc += inc * half;
            table.push(acc);
        }
        ell.perimeter = acc;
        ell.s_table = table;
        Ok(Curve::Ellipse(ell))
    }

    /// Total arclength of the curve (the parametrization period).
    pub fn period(&self) -> f64 {
        match self {
            Curve::Circle { radius } => 2.0 * std::f64::consts::PI * radius,
            Curve::Ellipse(e) => e.perimeter,
        }
    }

    /// Point on the curve at arclength s.
    pub fn eval(&self, s: f64) -> [f64; 2] {
        match self {
            Curve::Circle { radius } => {
                let phi = s / radius;
                [radius * phi.cos(), radius * phi.sin()]
            }
            Curve::Ellipse(e) => {
                let theta = e.theta_of_s(s);
                [e.a * theta.cos(), e.b * theta.sin()]
            }
        }
    }

    /// Unit tangent (derivative with respect to arclength).
    pub fn d1(&self, s: f64) -> [f64; 2] {
        match self {
            Curve::Circle { radius } => {
                let phi = s / radius;
                [-phi.sin(), phi.cos()]
            }
            Curve::Ellipse(e) => {
                let theta = e.theta_of_s(s);
                let v = e.speed(theta);
                [-e.a * theta.sin() / v, e.b * theta.cos() / v]
            }
        }
    }

    /// Second derivative with respect to arclength.
    pub fn d2(&self, s: f64) -> [f64; 2] {
        match self {
            Curve::Circle { radius } => {
                let phi = s / radius;
                [-phi.cos() / radius, -phi.sin() / radius]
            }
            Curve::Ellipse(e) => {
                let theta = e.theta_of_s(s);
                let (sin, cos) = theta.sin_cos();
                let v = e.speed(theta);
                let dv = (e.a * e.a - e.b * e.b) * sin * cos / v;
                let v2 = v * v;
                let v3 = v2 * v;
                // d/ds (p'(theta)/v) with dtheta/ds = 1/v.
                [
                    -e.a * cos / v2 + e.a * sin * dv / v3,
                    -e.b * sin / v2 - e.b * cos * dv / v3,
                ]
            }
        }
    }

    /// Outward unit normal (y', -x').
    pub fn normal(&self, s: f64) -> [f64; 2] {
        let t = self.d1(s);
        [t[1], -t[0]]
    }

    /// Curvature factor x'y'' - y'x''.
    pub fn kappa(&self, s: f64) -> f64 {
        let t = self.d1(s);
        let c = self.d2(s);
        t[0] * c[1] - t[1] * c[0]
    }

    /// Map s into [0, period).
    pub fn wrap(&self, s: f64) -> f64 {
        let period = self.period();
        let mut w = s % period;
        if w < 0.0 {
            w += period;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn norm(v: [f64; 2]) -> f64 {
        v[0].hypot(v[1])
    }

    #[test]
    fn circle_basics() {
        let c = Curve::circle(1.0).unwrap();
        assert!((c.period() - 2.0 * PI).abs() < 1e-15);
        let p = c.eval(0.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        let p = c.eval(PI / 2.0);
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        assert!((c.kappa(0.7) - 1.0).abs() < 1e-14);
        // Radius 2: curvature factor 1/R.
        let c2 = Curve::circle(2.0).unwrap();
        assert!((c2.kappa(1.3) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn unit_speed_and_frame() {
        for curve in [Curve::circle(1.5).unwrap(), Curve::ellipse(1.3, 1.0).unwrap()] {
            let period = curve.period();
            for k in 0..1000 {
                let s = period * k as f64 / 1000.0;
                let t = curve.d1(s);
                assert!(
                    (norm(t) - 1.0).abs() < 1e-10,
                    "speed {} at s={}",
                    norm(t),
                    s
                );
                let n = curve.normal(s);
                assert!((norm(n) - 1.0).abs() < 1e-10);
                assert!((t[0] * n[0] + t[1] * n[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_curve() {
        for curve in [Curve::circle(1.0).unwrap(), Curve::ellipse(1.3, 1.0).unwrap()] {
            let period = curve.period();
            let p0 = curve.eval(0.0);
            let p1 = curve.eval(period);
            assert!(norm([p1[0] - p0[0], p1[1] - p0[1]]) < 1e-10);
            let t0 = curve.d1(0.0);
            let t1 = curve.d1(period);
            assert!(norm([t1[0] - t0[0], t1[1] - t0[1]]) < 1e-10);
        }
    }

    #[test]
    fn ellipse_perimeter_against_independent_quadrature() {
        let (a, b) = (1.3, 1.0);
        let curve = Curve::ellipse(a, b).unwrap();
        // Independent oracle: composite Simpson on the speed.
        let n = 200_000;
        let h = 2.0 * PI / n as f64;
        let speed = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let mut sum = speed(0.0) + speed(2.0 * PI);
        for k in 1..n {
            sum += speed(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let perim = sum * h / 3.0;
        assert!(
            (curve.period() - perim).abs() < 1e-9,
            "period {} vs simpson {}",
            curve.period(),
            perim
        );
    }

    #[test]
    fn ellipse_reduces_to_circle() {
        let e = Curve::ellipse(1.0, 1.0).unwrap();
        let c = Curve::circle(1.0).unwrap();
        for k in 0..100 {
            let s = 2.0 * PI * k as f64 / 100.0;
            let pe = e.eval(s);
            let pc = c.eval(s);
            assert!(norm([pe[0] - pc[0], pe[1] - pc[1]]) < 1e-10);
            assert!((e.kappa(s) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn ellipse_curvature_closed_form() {
        // kappa = a*b / speed(theta)^3 for the counterclockwise ellipse.
        let (a, b) = (1.3, 0.8);
        let curve = Curve::ellipse(a, b).unwrap();
        if let Curve::Ellipse(e) = &curve {
            for k in 0..200 {
                let s = curve.period() * k as f64 / 200.0;
                let theta = e.theta_of_s(s);
                let expected = a * b / e.speed(theta).powi(3);
                assert!(
                    (curve.kappa(s) - expected).abs() < 1e-8,
                    "kappa mismatch at s={s}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Curve::circle(0.0).is_err());
        assert!(Curve::circle(-1.0).is_err());
        assert!(Curve::ellipse(1.0, 0.0).is_err());
    }
}
