//! Concentrating integrals over the oscillating strip, their boundary-limit
//! counterparts, convergence tables along an ε-ladder, and a Monte-Carlo
//! oracle for cross-checking the deterministic quadrature.

mod field;
mod gauss;
mod nodes;

pub use field::ScalarField;
pub use gauss::gauss_legendre;
pub use nodes::{strip_quadrature, QuadSpec, StripNode};

use crate::error::{Error, Result};
use crate::geometry::{mu, Curve, Profile, StripRegion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (1/ε) ∫_{ω_ε} h·φ dξ in fiber coordinates. Deterministic for a fixed
/// spec; h and φ enter symmetrically through the shared node set.
pub fn conc_integral(
    region: &StripRegion,
    h: &ScalarField,
    phi: &ScalarField,
    spec: &QuadSpec,
) -> Result<f64> {
    let nodes = strip_quadrature(region, spec)?;
    Ok(nodes
        .iter()
        .map(|n| n.w * (h.eval(n.s, n.xi) * phi.eval(n.s, n.xi)))
        .sum())
}

/// ∫₀^T weight(s)·h(ζ(s))·φ(ζ(s)) ds, by composite Gauss–Legendre with
/// panel doubling until two successive refinements agree to near machine
/// precision.
pub fn boundary_integral(
    curve: &Curve,
    weight: &dyn Fn(f64) -> f64,
    h: &ScalarField,
    phi: &ScalarField,
) -> f64 {
    let period = curve.period();
    let (gx, gw) = gauss_legendre(8);
    let eval_panels = |n: usize| -> f64 {
        let ds = period / n as f64;
        let mut total = 0.0;
        for p in 0..n {
            let lo = p as f64 * ds;
            for (x, w) in gx.iter().zip(gw.iter()) {
                let s = lo + 0.5 * ds * (x + 1.0);
                let xi = curve.eval(s);
                total += 0.5 * ds * w * weight(s) * h.eval(s, xi) * phi.eval(s, xi);
            }
        }
        total
    };
    let mut n = 8;
    let mut prev = eval_panels(n);
    loop {
        n *= 2;
        let next = eval_panels(n);
        if (next - prev).abs() <= 1e-13 * (1.0 + next.abs()) || n >= 4096 {
            return next;
        }
        prev = next;
    }
}

/// One row of a concentration-convergence table.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub value: f64,
    pub limit: f64,
    pub abs_error: f64,
    /// log-ratio rate against the previous row; `None` on the first row or
    /// when an error vanishes.
    pub rate: Option<f64>,
}

/// Tabulate (1/ε)∫_{ω_ε} h φ against its boundary limit ∫_{∂Ω} μ h φ dS
/// along a strictly decreasing ε-ladder.
pub fn conc_convergence_table(
    curve: &Curve,
    profile: &Profile,
    h: &ScalarField,
    phi: &ScalarField,
    spec: &QuadSpec,
    epsilons: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    if epsilons.is_empty() {
        return Err(Error::Config("epsilon ladder is empty".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("epsilon ladder must descend".into()));
    }
    let prof = profile.clone();
    let limit = boundary_integral(
        curve,
        &move |s| mu(&prof, s).expect("mean profile evaluation"),
        h,
        phi,
    );
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let region = StripRegion::new(curve.clone(), profile.clone(), eps)?;
        let value = conc_integral(&region, h, phi, spec)?;
        let abs_error = (value - limit).abs();
        let rate = rows.last().and_then(|p| {
            if p.abs_error > 0.0 && abs_error > 0.0 {
                Some((p.abs_error / abs_error).ln() / (p.epsilon / eps).ln())
            } else {
                None
            }
        });
        rows.push(ConvergenceRow { epsilon: eps, value, limit, abs_error, rate });
    }
    Ok(rows)
}

/// ((1/ε) ∫_{ω_ε} |v|^q dξ)^{1/q} for the exponents used downstream.
pub fn strip_lq_norm(region: &StripRegion, v: &ScalarField, q: f64) -> Result<f64> {
    if q != 2.0 && q != 4.0 {
        return Err(Error::Config(format!("unsupported strip norm exponent q={q}; use 2 or 4")));
    }
    let nodes = strip_quadrature(region, &QuadSpec::default())?;
    let total: f64 = nodes
        .iter()
        .map(|n| {
            let val = v.eval(n.s, n.xi).abs();
            n.w * val.powf(q)
        })
        .sum();
    Ok(total.max(0.0).powf(1.0 / q))
}

/// Monte-Carlo estimate of (1/ε)∫_{ω_ε} h φ dξ: uniform samples in the
/// annulus bounding the strip, filtered by membership. Returns the estimate
/// and its standard error.
pub fn mc_conc_integral(
    region: &StripRegion,
    h: &ScalarField,
    phi: &ScalarField,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let period = region.curve.period();
    let mut r_hi: f64 = 0.0;
    let mut r_lo = f64::INFINITY;
    let m = 4096;
    for k in 0..m {
        let s = period * k as f64 / m as f64;
        let p = region.curve.eval(s);
        let n = region.curve.normal(s);
        let depth = region.epsilon * region.g_eps(s)?;
        r_hi = r_hi.max(p[0].hypot(p[1]));
        let inner = [p[0] - depth * n[0], p[1] - depth * n[1]];
        r_lo = r_lo.min(inner[0].hypot(inner[1]));
    }
    let r_lo = (r_lo - 1e-4).max(0.0);
    let r_hi = r_hi + 1e-12;
    let area = std::f64::consts::PI * (r_hi * r_hi - r_lo * r_lo);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = area / region.epsilon;
    let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let u: f64 = rng.random();
        let theta: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
        let r = (r_lo * r_lo + u * (r_hi * r_hi - r_lo * r_lo)).sqrt();
        let xi = [r * theta.cos(), r * theta.sin()];
        let f = match region.strip_membership(xi)? {
            Some((s, _t)) => scale * h.eval(s, xi) * phi.eval(s, xi),
            None => 0.0,
        };
        sum += f;
        sumsq += f * f;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_circle() -> Curve {
        Curve::circle(1.0).unwrap()
    }

    fn region(profile: Profile, eps: f64) -> StripRegion {
        StripRegion::new(unit_circle(), profile, eps).unwrap()
    }

    #[test]
    fn closed_form_annulus_values() {
        let one = ScalarField::constant(1.0);
        let r = region(Profile::constant(1.0).unwrap(), 0.1);
        let v = conc_integral(&r, &one, &one, &QuadSpec::default()).unwrap();
        assert!((v - (2.0 * PI - 0.1 * PI)).abs() < 1e-12, "got {v}");

        let r = region(Profile::constant(2.0).unwrap(), 0.05);
        let v = conc_integral(&r, &one, &one, &QuadSpec::default()).unwrap();
        assert!((v - (4.0 * PI - 4.0 * PI * 0.05)).abs() < 1e-12, "got {v}");

        let zero = ScalarField::constant(0.0);
        let v = conc_integral(&r, &zero, &one, &QuadSpec::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn boundary_integral_frozen_values() {
        let curve = unit_circle();
        let one = ScalarField::constant(1.0);
        let x = ScalarField::smooth(|x, _| x);
        let v = boundary_integral(&curve, &|_| 2.0, &one, &one);
        assert!((v - 4.0 * PI).abs() < 1e-12);
        let v = boundary_integral(&curve, &|_| 1.0, &x, &one);
        assert!(v.abs() < 1e-12);
        let v = boundary_integral(&curve, &|_| 1.0, &x, &x);
        assert!((v - PI).abs() < 1e-12);
    }

    #[test]
    fn convergence_table_oscillating_profile() {
        let one = ScalarField::constant(1.0);
        let rows = conc_convergence_table(
            &unit_circle(),
            &Profile::TwoPlusCos,
            &one,
            &one,
            &QuadSpec::default(),
            &[0.2, 0.1, 0.05, 0.025],
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert!((rows[0].limit - 4.0 * PI).abs() < 1e-10);
        for w in rows.windows(2) {
            assert!(w[1].abs_error < w[0].abs_error, "errors not monotone: {rows:?}");
        }
        assert!(rows[3].abs_error < rows[0].abs_error / 4.0);
        let rate = rows[3].rate.unwrap();
        assert!((rate - 1.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn convergence_table_constant_profile_exact_rate() {
        let one = ScalarField::constant(1.0);
        let rows = conc_convergence_table(
            &unit_circle(),
            &Profile::constant(1.0).unwrap(),
            &one,
            &one,
            &QuadSpec::default(),
            &[0.2, 0.1, 0.05, 0.025],
        )
        .unwrap();
        for row in &rows {
            let exact = 2.0 * PI - PI * row.epsilon;
            assert!((row.value - exact).abs() < 1e-10, "{row:?}");
        }
        for row in &rows[1..] {
            assert!((row.rate.unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn table_rejects_bad_ladder() {
        let one = ScalarField::constant(1.0);
        let err = conc_convergence_table(
            &unit_circle(),
            &Profile::TwoPlusCos,
            &one,
            &one,
            &QuadSpec::default(),
            &[0.05, 0.1],
        );
        assert!(err.is_err());
    }

    #[test]
    fn strip_lq_norm_values() {
        let r = region(Profile::constant(1.0).unwrap(), 0.1);
        let one = ScalarField::constant(1.0);
        let v = strip_lq_norm(&r, &one, 2.0).unwrap();
        assert!((v - (1.9 * PI).sqrt()).abs() < 1e-10, "got {v}");
        let zero = ScalarField::constant(0.0);
        assert_eq!(strip_lq_norm(&r, &zero, 2.0).unwrap(), 0.0);
        assert!(strip_lq_norm(&r, &one, 3.0).is_err());

        // v = x: the strip L² norm approaches the boundary value sqrt(pi).
        let x = ScalarField::smooth(|x, _| x);
        let mut prev_err = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let r = region(Profile::constant(1.0).unwrap(), eps);
            let err = (strip_lq_norm(&r, &x, 2.0).unwrap() - PI.sqrt()).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 0.05);
    }

    #[test]
    fn symmetry_is_exact() {
        let r = region(Profile::TwoPlusCos, 0.1);
        let h = ScalarField::smooth(|x, y| (x + 2.0 * y).cos());
        let phi = ScalarField::smooth(|x, y| x * y + 0.5 * x);
        let spec = QuadSpec::default();
        let a = conc_integral(&r, &h, &phi, &spec).unwrap();
        let b = conc_integral(&r, &phi, &h, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linearity_within_roundoff() {
        let r = region(Profile::TwoPlusCos, 0.1);
        let h1 = ScalarField::smooth(|x, y| (x - y).sin());
        let h2 = ScalarField::smooth(|x, y| x * x + y);
        let phi = ScalarField::smooth(|x, y| 1.0 + 0.3 * x * y);
        let (a, b) = (1.7, -0.4);
        let combo = ScalarField::smooth(move |x, y| {
            a * (x - y).sin() + b * (x * x + y)
        });
        let spec = QuadSpec::default();
        let lhs = conc_integral(&r, &combo, &phi, &spec).unwrap();
        let rhs = a * conc_integral(&r, &h1, &phi, &spec).unwrap()
            + b * conc_integral(&r, &h2, &phi, &spec).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn mc_oracle_matches_quadrature() {
        let r = region(Profile::TwoPlusCos, 0.1);
        let h = ScalarField::smooth(|x, y| 1.0 + 0.5 * (x + 2.0 * y).cos());
        let phi = ScalarField::smooth(|x, y| x - 0.3 * y + 0.2 * x * y);
        let exact = conc_integral(&r, &h, &phi, &QuadSpec::default()).unwrap();
        let (est, se) = mc_conc_integral(&r, &h, &phi, 200_000, 42).unwrap();
        assert!(se > 0.0);
        assert!(
            (est - exact).abs() <= 3.0 * se,
            "mc {est} +- {se} vs quadrature {exact}"
        );
    }

    #[test]
    fn weak_star_defect_decreases() {
        // |∫ (g_ε - μ) h ds| shrinks along the ladder. The test function is
        // analytic with a pole off the real axis, so its Fourier cosine
        // coefficients decay geometrically but stay comfortably nonzero at
        // every ladder frequency 1/ε.
        let profile = Profile::TwoPlusCos;
        let h = |s: f64| 1.0 / (1.05 - (s - 0.9).cos());
        let (gx, gw) = gauss_legendre(8);
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let r = region(profile.clone(), eps);
            let n = (2.0 * PI / (eps * profile.l0() / 4.0)).ceil() as usize;
            let ds = 2.0 * PI / n as f64;
            let mut defect = 0.0;
            for p in 0..n {
                let lo = p as f64 * ds;
                for (x, w) in gx.iter().zip(gw.iter()) {
                    let s = lo + 0.5 * ds * (x + 1.0);
                    let diff = r.g_eps(s).unwrap() - mu(&profile, s).unwrap();
                    defect += 0.5 * ds * w * diff * h(s);
                }
            }
            let defect = defect.abs();
            assert!(defect < prev, "defect {defect} not below {prev} at eps {eps}");
            prev = defect;
        }
        assert!(prev < 1e-5, "final defect {prev}");
    }

    #[test]
    fn quadspec_validation() {
        let mut spec = QuadSpec::default();
        spec.s_panel_fraction = 0.5;
        assert!(spec.validate().is_err());
        let mut spec = QuadSpec::default();
        spec.beta_points = 1;
        assert!(spec.validate().is_err());
        assert!(QuadSpec::resolving_mesh(0.01).validate().is_ok());
    }
}
