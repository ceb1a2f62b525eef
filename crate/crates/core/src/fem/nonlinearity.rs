//! Reaction nonlinearities satisfying the global bound hypothesis: value,
//! first and second derivatives bounded on all of ℝ, plus a primitive for
//! energy bookkeeping.

/// A C² nonlinearity with globally bounded value and first two derivatives.
///
/// `CutoffCubic` is the bistable cubic u - u³ on |u| ≤ 2, blended by an odd
/// quintic Hermite polynomial on 2 ≤ |u| ≤ 3 to the constant values ∓6, so
/// that all equilibria of interest (which live in |u| ≤ 2) see the exact
/// cubic while the global bound hypothesis holds verbatim.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    Zero,
    Constant(f64),
    CutoffCubic,
}

// Quintic Hermite data on [2,3]: match (f, f', f'') = (-6, -11, -12) of the
// cubic at u=2 and flatten to (-6, 0, 0) at u=3. With H1(t) = t(1-t)³(1+3t)
// and H2(t) = t²(1-t)³/2 the blend is -6 - 11·H1 - 12·H2.
fn blend(t: f64) -> f64 {
    let omt = 1.0 - t;
    let omt3 = omt * omt * omt;
    -6.0 - 11.0 * t * omt3 * (1.0 + 3.0 * t) - 6.0 * t * t * omt3
}

fn blend_d1(t: f64) -> f64 {
    // d/dt of the two Hermite terms.
    let h1p = 1.0 - 18.0 * t * t + 32.0 * t.powi(3) - 15.0 * t.powi(4);
    let h2p = t - 4.5 * t * t + 6.0 * t.powi(3) - 2.5 * t.powi(4);
    -11.0 * h1p - 12.0 * h2p
}

fn blend_d2(t: f64) -> f64 {
    let h1pp = -36.0 * t + 96.0 * t * t - 60.0 * t.powi(3);
    let h2pp = 1.0 - 9.0 * t + 18.0 * t * t - 10.0 * t.powi(3);
    -11.0 * h1pp - 12.0 * h2pp
}

/// ∫₀ᵗ blend = -6t - 11·∫H1 - 12·∫H2.
fn blend_prim(t: f64) -> f64 {
    let ih1 = t * t / 2.0 - 1.5 * t.powi(4) + 1.6 * t.powi(5) - 0.5 * t.powi(6);
    let ih2 = t.powi(3) / 6.0 - 0.375 * t.powi(4) + 0.3 * t.powi(5) - t.powi(6) / 12.0;
    -6.0 * t - 11.0 * ih1 - 12.0 * ih2
}

impl Nonlinearity {
    pub fn f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Constant(c) => *c,
            Nonlinearity::CutoffCubic => {
                let a = u.abs();
                let core = if a <= 2.0 {
                    a - a * a * a
                } else if a < 3.0 {
                    blend(a - 2.0)
                } else {
                    -6.0
                };
                core * u.signum()
            }
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero | Nonlinearity::Constant(_) => 0.0,
            Nonlinearity::CutoffCubic => {
                let a = u.abs();
                if a <= 2.0 {
                    1.0 - 3.0 * a * a
                } else if a < 3.0 {
                    blend_d1(a - 2.0)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn d2f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero | Nonlinearity::Constant(_) => 0.0,
            Nonlinearity::CutoffCubic => {
                let a = u.abs();
                let core = if a <= 2.0 {
                    -6.0 * a
                } else if a < 3.0 {
                    blend_d2(a - 2.0)
                } else {
                    0.0
                };
                core * u.signum()
            }
        }
    }

    /// Primitive W(u) = ∫₀ᵘ f, even for odd f, with W(0) = 0.
    pub fn prim(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Constant(c) => c * u,
            Nonlinearity::CutoffCubic => {
                let a = u.abs();
                if a <= 2.0 {
                    a * a / 2.0 - a.powi(4) / 4.0
                } else if a < 3.0 {
                    -2.0 + blend_prim(a - 2.0)
                } else {
                    -2.0 + blend_prim(1.0) - 6.0 * (a - 3.0)
                }
            }
        }
    }

    /// A constant K with |f| + |f'| + |f''| ≤ 3K everywhere, found by dense
    /// sampling of the compact support plus the constant tails.
    pub fn bound_constant(&self) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Constant(c) => c.abs(),
            Nonlinearity::CutoffCubic => {
                let mut k: f64 = 6.0;
                let n = 6000;
                for i in 0..=n {
                    let u = -3.0 + 6.0 * i as f64 / n as f64;
                    k = k.max(self.f(u).abs()).max(self.df(u).abs()).max(self.d2f(u).abs());
                }
                k
            }
        }
    }

    /// Does s·f(s) < 0 hold for all |s| ≥ s_diss (checked by sampling up to
    /// the constant tails)?
    pub fn is_dissipative_beyond(&self, s_diss: f64) -> bool {
        let n = 4000;
        for i in 0..=n {
            let s = s_diss + (4.0 - s_diss.min(4.0)) * i as f64 / n as f64;
            if s * self.f(s) >= 0.0 || (-s) * self.f(-s) >= 0.0 {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_core_is_exact() {
        let f = Nonlinearity::CutoffCubic;
        assert_eq!(f.f(0.0), 0.0);
        assert_eq!(f.f(1.0), 0.0);
        assert!((f.f(1.5) + 1.875).abs() < 1e-15);
        assert!((f.f(2.0) + 6.0).abs() < 1e-15);
        assert!((f.df(2.0) + 11.0).abs() < 1e-12);
        assert_eq!(f.f(3.5), -6.0);
        assert_eq!(f.df(4.0), 0.0);
    }

    #[test]
    fn odd_symmetry() {
        let f = Nonlinearity::CutoffCubic;
        for i in 0..400 {
            let u = -4.0 + 8.0 * i as f64 / 400.0;
            assert!((f.f(-u) + f.f(u)).abs() < 1e-14);
            assert!((f.df(-u) - f.df(u)).abs() < 1e-12);
            assert!((f.d2f(-u) + f.d2f(u)).abs() < 1e-12);
            assert!((f.prim(-u) - f.prim(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_joins() {
        let f = Nonlinearity::CutoffCubic;
        for join in [2.0f64, 3.0] {
            let h = 1e-6;
            // Value, slope, curvature continuous: compare one-sided finite
            // differences across the joint.
            assert!((f.f(join - 1e-12) - f.f(join + 1e-12)).abs() < 1e-9);
            let dl = (f.f(join) - f.f(join - h)) / h;
            let dr = (f.f(join + h) - f.f(join)) / h;
            assert!((dl - dr).abs() < 1e-4, "slope jump at {join}: {dl} vs {dr}");
            let cl = (f.f(join) - 2.0 * f.f(join - h) + f.f(join - 2.0 * h)) / (h * h);
            let cr = (f.f(join + 2.0 * h) - 2.0 * f.f(join + h) + f.f(join)) / (h * h);
            assert!((cl - cr).abs() < 1e-2, "curvature jump at {join}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = Nonlinearity::CutoffCubic;
        let h = 1e-5;
        for i in 0..200 {
            let u = -3.4 + 6.8 * i as f64 / 200.0;
            let fd = (f.f(u + h) - f.f(u - h)) / (2.0 * h);
            assert!((fd - f.df(u)).abs() < 1e-7, "df at {u}");
            let fd2 = (f.df(u + h) - f.df(u - h)) / (2.0 * h);
            assert!((fd2 - f.d2f(u)).abs() < 1e-6, "d2f at {u}");
            let fp = (f.prim(u + h) - f.prim(u - h)) / (2.0 * h);
            assert!((fp - f.f(u)).abs() < 1e-8, "prim' at {u}");
        }
    }

    #[test]
    fn global_bounds_and_dissipativeness() {
        let f = Nonlinearity::CutoffCubic;
        let k = f.bound_constant();
        // The blend's second derivative peaks near 47; what matters is that
        // the bound is finite and honored everywhere.
        assert!(k.is_finite() && k < 60.0, "bound {k}");
        for i in 0..2000 {
            let u = -50.0 + 100.0 * i as f64 / 2000.0;
            assert!(f.f(u).abs() <= k + 1e-12);
            assert!(f.df(u).abs() <= k + 1e-12);
            assert!(f.d2f(u).abs() <= k + 1e-12);
        }
        assert!(f.is_dissipative_beyond(1.5));
        assert!(!Nonlinearity::Zero.is_dissipative_beyond(1.5));
    }

    #[test]
    fn trivial_presets() {
        assert_eq!(Nonlinearity::Zero.f(7.0), 0.0);
        assert_eq!(Nonlinearity::Constant(2.5).f(-3.0), 2.5);
        assert_eq!(Nonlinearity::Constant(2.5).df(-3.0), 0.0);
        assert_eq!(Nonlinearity::Constant(2.5).prim(2.0), 5.0);
    }
}
