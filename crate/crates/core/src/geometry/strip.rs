//! The oscillating boundary strip: the set of points at inward-normal depth
//! t < epsilon * g(s, s/epsilon) below the boundary point at arclength s.

use super::curve::Curve;
use super::profile::Profile;
use crate::error::{Error, Result};

/// Samples in the closest-point initialization table.
const LOOKUP_SAMPLES: usize = 4096;

/// Hard cap on the injectivity bound, so flat curves (kappa <= 0 everywhere)
/// still get a finite admissible range.
const EPS0_CAP: f64 = 0.5;

/// Boundary strip of depth epsilon * g(s, s/epsilon) along the inward normal.
///
/// Construction fails fast if epsilon exceeds the injectivity bound eps0 of
/// the inward normal map, computed as 0.9 / (g1 * max_s kappa_+(s)) and
/// clamped to a fixed cap.
#[derive(Clone, Debug)]
pub struct StripRegion {
    pub curve: Curve,
    pub profile: Profile,
    pub epsilon: f64,
    eps0: f64,
    /// Boundary points at s_k = k*T/N, seeding the closest-point projection.
    lookup: Vec<[f64; 2]>,
}

impl StripRegion {
    pub fn new(curve: Curve, profile: Profile, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        let eps0 = injectivity_bound(&curve, &profile);
        if epsilon > eps0 {
            return Err(Error::Eps0Violation { epsilon, eps0 });
        }
        let period = curve.period();
        let lookup = (0..LOOKUP_SAMPLES)
            .map(|k| curve.eval(period * k as f64 / LOOKUP_SAMPLES as f64))
            .collect();
        Ok(StripRegion { curve, profile, epsilon, eps0, lookup })
    }

    /// The injectivity bound this region was validated against.
    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    /// Local strip depth factor g(s, s/epsilon).
    pub fn g_eps(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        Ok(self.profile.eval(s, s / self.epsilon))
    }

    fn check_s(&self, s: f64) -> Result<()> {
        let period = self.curve.period();
        if !(0.0..=period).contains(&s) {
            return Err(Error::Domain(format!(
                "arclength {s} outside [0, {period}]"
            )));
        }
        Ok(())
    }

    /// Physical point at boundary arclength s and inward depth t, together
    /// with the Jacobian 1 - t*kappa(s) of the (t, s) -> point map.
    pub fn strip_map(&self, s: f64, t: f64) -> Result<([f64; 2], f64)> {
        let depth = self.epsilon * self.g_eps(s)?;
        if !(0.0..depth).contains(&t) {
            return Err(Error::Domain(format!(
                "depth {t} outside [0, {depth}) at s = {s}"
            )));
        }
        let jac = 1.0 - t * self.curve.kappa(s);
        if jac <= 0.0 {
            return Err(Error::Eps0Violation { epsilon: self.epsilon, eps0: self.eps0 });
        }
        let p = self.curve.eval(s);
        let n = self.curve.normal(s);
        Ok(([p[0] - t * n[0], p[1] - t * n[1]], jac))
    }

    /// Invert the strip map: if the point lies in the strip, return its
    /// (arclength, depth) coordinates; otherwise `None`.
    ///
    /// The circle preset is inverted analytically; general curves use a
    /// closest-point Newton projection seeded from a precomputed boundary
    /// sample table.
    pub fn strip_membership(&self, xi: [f64; 2]) -> Result<Option<(f64, f64)>> {
        let (s, t) = match &self.curve {
            Curve::Circle { radius } => {
                let r = xi[0].hypot(xi[1]);
                let t = radius - r;
                let mut s = radius * xi[1].atan2(xi[0]);
                if s < 0.0 {
                    s += self.curve.period();
                }
                (s, t)
            }
            _ => {
                let s = self.closest_point(xi)?;
                let p = self.curve.eval(s);
                let n = self.curve.normal(s);
                let t = (p[0] - xi[0]) * n[0] + (p[1] - xi[1]) * n[1];
                // Residual orthogonal to the normal must vanish for a true
                // inversion; it is the closest-point optimality condition.
                let rx = xi[0] - (p[0] - t * n[0]);
                let ry = xi[1] - (p[1] - t * n[1]);
                if rx.hypot(ry) > 1e-9 {
                    return Err(Error::Numerical(format!(
                        "projection residual {:e} at point ({}, {})",
                        rx.hypot(ry),
                        xi[0],
                        xi[1]
                    )));
                }
                (s, t)
            }
        };
        let t = if (-1e-12..0.0).contains(&t) { 0.0 } else { t };
        if t < 0.0 {
            // Outside the closed domain.
            return Ok(None);
        }
        let depth = self.epsilon * self.g_eps(s.min(self.curve.period()))?;
        Ok(if t < depth { Some((s, t)) } else { None })
    }

    /// Closest-point arclength on the boundary: Newton on the stationarity
    /// condition (xi - zeta(s)) . zeta'(s) = 0, seeded from the lookup table.
    fn closest_point(&self, xi: [f64; 2]) -> Result<f64> {
        let period = self.curve.period();
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.lookup.iter().enumerate() {
            let d = (xi[0] - p[0]).powi(2) + (xi[1] - p[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        let mut s = period * best as f64 / LOOKUP_SAMPLES as f64;
        for _ in 0..30 {
            let p = self.curve.eval(s);
            let t = self.curve.d1(s);
            let c = self.curve.d2(s);
            let rx = xi[0] - p[0];
            let ry = xi[1] - p[1];
            let f = rx * t[0] + ry * t[1];
            let df = -1.0 + rx * c[0] + ry * c[1];
            if df.abs() < 1e-14 {
                break;
            }
            let step = f / df;
            s = self.curve.wrap(s - step);
            if step.abs() < 1e-14 * period {
                return Ok(s);
            }
        }
        // Check convergence rather than trust the iteration count.
        let p = self.curve.eval(s);
        let t = self.curve.d1(s);
        let f = (xi[0] - p[0]) * t[0] + (xi[1] - p[1]) * t[1];
        if f.abs() < 1e-9 {
            Ok(s)
        } else {
            Err(Error::Numerical(format!(
                "closest-point projection stalled at s = {s} for ({}, {}), tangency residual {f:e}",
                xi[0], xi[1]
            )))
        }
    }
}

/// 0.9 / (g1 * max kappa_+), sampled densely, clamped to EPS0_CAP.
pub fn injectivity_bound(curve: &Curve, profile: &Profile) -> f64 {
    let period = curve.period();
    let mut kmax: f64 = 0.0;
    for k in 0..LOOKUP_SAMPLES {
        let s = period * k as f64 / LOOKUP_SAMPLES as f64;
        kmax = kmax.max(curve.kappa(s).max(0.0));
    }
    if kmax <= 0.0 {
        EPS0_CAP
    } else {
        (0.9 / (profile.g1() * kmax)).min(EPS0_CAP)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_circle_strip(profile: Profile, eps: f64) -> StripRegion {
        StripRegion::new(Curve::circle(1.0).unwrap(), profile, eps).unwrap()
    }

    #[test]
    fn depth_factor_values() {
        let region = unit_circle_strip(Profile::TwoPlusCos, 0.1);
        assert!((region.g_eps(0.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((region.g_eps(0.1 * PI).unwrap() - 1.0).abs() < 1e-12);
        let region = unit_circle_strip(Profile::constant(1.3).unwrap(), 0.1);
        assert!((region.g_eps(2.0).unwrap() - 1.3).abs() < 1e-14);
        assert!(region.g_eps(-0.1).is_err());
        assert!(region.g_eps(7.0).is_err());
    }

    #[test]
    fn map_on_the_unit_circle() {
        let region = unit_circle_strip(Profile::constant(1.0).unwrap(), 0.1);
        let (p, jac) = region.strip_map(0.0, 0.05).unwrap();
        assert!((p[0] - 0.95).abs() < 1e-14 && p[1].abs() < 1e-14);
        assert!((jac - 0.95).abs() < 1e-14);
        let (p, jac) = region.strip_map(PI / 2.0, 0.0).unwrap();
        assert!(p[0].abs() < 1e-14 && (p[1] - 1.0).abs() < 1e-14);
        assert!((jac - 1.0).abs() < 1e-15);
        let region = unit_circle_strip(Profile::TwoPlusCos, 0.11);
        let (p, jac) = region.strip_map(PI / 2.0, 0.1).unwrap();
        assert!(p[0].abs() < 1e-13 && (p[1] - 0.9).abs() < 1e-13);
        assert!((jac - 0.9).abs() < 1e-14);
        assert!(region.strip_map(0.0, 0.5).is_err());
    }

    #[test]
    fn membership_on_the_unit_circle() {
        let region = unit_circle_strip(Profile::constant(1.0).unwrap(), 0.1);
        let (s, t) = region.strip_membership([0.95, 0.0]).unwrap().unwrap();
        assert!(s.abs() < 1e-12 && (t - 0.05).abs() < 1e-14);
        assert!(region.strip_membership([0.5, 0.0]).unwrap().is_none());

        let region = unit_circle_strip(Profile::TwoPlusCos, 0.1);
        // t = 0.25 is below the local threshold eps*g(0, 0) = 0.3.
        let (s, t) = region.strip_membership([0.75, 0.0]).unwrap().unwrap();
        assert!(s.abs() < 1e-12 && (t - 0.25).abs() < 1e-14);
    }

    #[test]
    fn injectivity_bound_values() {
        // Unit circle with g1 = 3: eps0 = 0.9 / 3 = 0.3.
        let region = unit_circle_strip(Profile::TwoPlusCos, 0.2);
        assert!((region.eps0() - 0.3).abs() < 1e-6);
        assert!(StripRegion::new(
            Curve::circle(1.0).unwrap(),
            Profile::TwoPlusCos,
            0.31
        )
        .is_err());
    }

    #[test]
    fn round_trip_on_the_ellipse() {
        let curve = Curve::ellipse(1.3, 1.0).unwrap();
        let region =
            StripRegion::new(curve, Profile::TwoPlusCos, 0.05).unwrap();
        let period = region.curve.period();
        for i in 0..60 {
            let s = period * i as f64 / 60.0;
            let depth = region.epsilon * region.g_eps(s).unwrap();
            for j in 0..5 {
                let t = depth * (j as f64 + 0.3) / 6.0;
                let (p, _) = region.strip_map(s, t).unwrap();
                let (s2, t2) = region
                    .strip_membership(p)
                    .unwrap()
                    .unwrap_or_else(|| panic!("lost point at s={s} t={t}"));
                let ds = (s2 - s).abs().min(period - (s2 - s).abs());
                assert!(ds < 1e-9, "s mismatch {s} vs {s2}");
                assert!((t2 - t).abs() < 1e-9, "t mismatch {t} vs {t2}");
            }
        }
    }

    #[test]
    fn membership_depth_below_uniform_strip() {
        // Every member lies inside the non-oscillating strip of depth eps*g1.
        let region = unit_circle_strip(Profile::TwoPlusCos, 0.1);
        let cap = region.epsilon * region.profile.g1();
        for i in 0..100 {
            for j in 0..10 {
                let angle = 2.0 * PI * i as f64 / 100.0;
                let r = 1.0 - 0.35 * j as f64 / 10.0;
                let xi = [r * angle.cos(), r * angle.sin()];
                if let Some((_, t)) = region.strip_membership(xi).unwrap() {
                    assert!(t < cap);
                }
            }
        }
    }

    #[test]
    fn jacobian_stays_in_band() {
        let region = unit_circle_strip(Profile::TwoPlusCos, 0.2);
        let lower = 1.0 - region.epsilon * region.profile.g1() * 1.0;
        let period = region.curve.period();
        for i in 0..50 {
            let s = period * i as f64 / 50.0;
            let depth = region.epsilon * region.g_eps(s).unwrap();
            for j in 0..8 {
                let t = depth * j as f64 / 8.0;
                let (_, jac) = region.strip_map(s, t).unwrap();
                assert!(jac > lower - 1e-12 && jac <= 1.0 + 1e-15);
            }
        }
    }
}
