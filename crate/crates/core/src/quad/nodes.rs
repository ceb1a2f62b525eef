//! Tensor Gauss–Legendre nodes for strip integrals in fiber coordinates
//! (s, β), with the area element of the substitution t = ε g_ε(s) β folded
//! into the weights (including the leading 1/ε).

use crate::error::{Error, Result};
use crate::geometry::StripRegion;
use crate::quad::gauss_legendre;

/// Resolution of the strip quadrature and of the Monte-Carlo oracle.
#[derive(Clone, Debug)]
pub struct QuadSpec {
    /// Gauss points per β-panel.
    pub beta_points: usize,
    /// Gauss points per s-panel.
    pub s_points: usize,
    /// s-panel width as a fraction of ε·l0 (at most 1/4 so every oscillation
    /// period of g_ε is resolved by at least four panels).
    pub s_panel_fraction: f64,
    /// Number of equal β-panels on [0, 1].
    pub beta_panels: usize,
    /// Optional absolute cap on the s-panel width (used when quadrature
    /// nodes must also resolve a mesh scale).
    pub s_width_cap: Option<f64>,
    /// Optional absolute cap on the physical depth of a β-panel.
    pub t_width_cap: Option<f64>,
    /// Sample count for the Monte-Carlo oracle.
    pub mc_samples: u64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            beta_points: 4,
            s_points: 6,
            s_panel_fraction: 0.25,
            beta_panels: 1,
            s_width_cap: None,
            t_width_cap: None,
            mc_samples: 2_000_000,
        }
    }
}

impl QuadSpec {
    /// A spec whose panels also resolve a mesh of boundary size `h_b`, so
    /// the same nodes can integrate piecewise-linear functions accurately.
    pub fn resolving_mesh(h_b: f64) -> Self {
        QuadSpec {
            s_width_cap: Some(4.0 * h_b),
            t_width_cap: Some(1.5 * h_b),
            ..QuadSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_points < 2 || self.s_points < 2 {
            return Err(Error::Config(format!(
                "need at least 2 Gauss points per panel, got beta={} s={}",
                self.beta_points, self.s_points
            )));
        }
        if !(self.s_panel_fraction > 0.0 && self.s_panel_fraction <= 0.25 + 1e-12) {
            return Err(Error::Config(format!(
                "s-panel fraction {} outside (0, 1/4]",
                self.s_panel_fraction
            )));
        }
        if self.beta_panels == 0 {
            return Err(Error::Config("need at least one beta panel".into()));
        }
        for cap in [self.s_width_cap, self.t_width_cap].into_iter().flatten() {
            if !(cap > 0.0) {
                return Err(Error::Config(format!("panel width cap {cap} must be positive")));
            }
        }
        Ok(())
    }
}

/// One quadrature node of a strip integral: position `xi` in the plane, the
/// arclength `s` of its boundary foot, the fiber depth `t`, and a weight
/// such that (1/ε)∫_{ω_ε} f dξ ≈ Σ w·f(xi).
#[derive(Clone, Copy, Debug)]
pub struct StripNode {
    pub s: f64,
    pub t: f64,
    pub xi: [f64; 2],
    pub w: f64,
}

/// Build the tensor node set for a strip region. Deterministic for a fixed
/// spec: panels and Gauss points are laid out in increasing (s, β) order.
pub fn strip_quadrature(region: &StripRegion, spec: &QuadSpec) -> Result<Vec<StripNode>> {
    spec.validate()?;
    let period = region.curve.period();
    let mut s_width = spec.s_panel_fraction * region.epsilon * region.profile.l0();
    if let Some(cap) = spec.s_width_cap {
        s_width = s_width.min(cap);
    }
    let n_s = (period / s_width).ceil() as usize;
    let (sx, sw) = gauss_legendre(spec.s_points);
    let (bx, bw) = gauss_legendre(spec.beta_points);

    let mut nodes = Vec::new();
    let ds = period / n_s as f64;
    for ps in 0..n_s {
        let s_lo = ps as f64 * ds;
        for (xs, ws) in sx.iter().zip(sw.iter()) {
            let s = s_lo + 0.5 * ds * (xs + 1.0);
            let g = region.g_eps(s)?;
            let depth = region.epsilon * g;
            let mut n_b = spec.beta_panels;
            if let Some(cap) = spec.t_width_cap {
                n_b = n_b.max((depth / cap).ceil() as usize);
            }
            let db = 1.0 / n_b as f64;
            for pb in 0..n_b {
                let b_lo = pb as f64 * db;
                for (xb, wb) in bx.iter().zip(bw.iter()) {
                    let beta = b_lo + 0.5 * db * (xb + 1.0);
                    let t = depth * beta;
                    let (xi, jac) = region.strip_map(s, t)?;
                    nodes.push(StripNode {
                        s,
                        t,
                        xi,
                        w: g * jac * (0.5 * ds * ws) * (0.5 * db * wb),
                    });
                }
            }
        }
    }
    Ok(nodes)
}
