//! Time integration of the parabolic problem by a first-order IMEX scheme
//! (implicit linear part, explicit reaction), with the semigroup-convergence
//! diagnostics comparing ε > 0 evolutions to the boundary-limit evolution.

use crate::error::{Error, Result};
use crate::fem::{FemField, FemSystem};

/// Exponent of the t-weight in the linear semigroup comparison.
pub const BETA: f64 = 0.5;
/// Exponent of the t-weight in the nonlinear semigroup comparison.
pub const GAMMA: f64 = 0.5;

/// A sampled solution path: uniform time grid starting at 0, one nodal
/// state per grid point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FemField>,
    pub epsilon: f64,
    pub dt: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &FemField {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Norm time series (t, l2, h1, energy) for reporting.
    pub fn norm_series(&self, fem: &FemSystem) -> Vec<(f64, f64, f64, f64)> {
        self.times
            .iter()
            .zip(self.states.iter())
            .map(|(&t, u)| (t, fem.l2_norm(u), fem.h1_norm(u), energy(fem, u)))
            .collect()
    }
}

/// Lyapunov functional of the gradient structure: E(u) = ½ a(u,u) − ∫W(u)
/// with the reaction primitive integrated over the strip (or boundary).
pub fn energy(fem: &FemSystem, u: &[f64]) -> f64 {
    0.5 * fem.s.quad_form(u, u) - fem.reaction_potential_energy(u)
}

fn imex_update(fem: &FemSystem, u: &[f64], dt: f64, with_reaction: bool) -> Result<FemField> {
    let fact = fem.step_factor(dt)?;
    let mut rhs = fem.m.matvec(u);
    if with_reaction {
        let fu = fem.apply_f(u);
        for (r, f) in rhs.iter_mut().zip(fu.iter()) {
            *r += dt * f;
        }
    }
    Ok(fact.solve(&rhs))
}

/// One IMEX step: solve (M + dt·S) u⁺ = M u + dt·F(u).
pub fn step_imex(fem: &FemSystem, u: &[f64], dt: f64) -> Result<FemField> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    imex_update(fem, u, dt, true)
}

fn check_finite(u: &[f64], t: f64) -> Result<()> {
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::Blowup { t });
    }
    Ok(())
}

fn run_steps(
    fem: &FemSystem,
    phi: &[f64],
    t_end: f64,
    dt: f64,
    with_reaction: bool,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(Error::Config(format!("need positive t_end and dt, got {t_end}, {dt}")));
    }
    let steps_f = t_end / dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::Config(format!("dt {dt} does not divide t_end {t_end}")));
    }
    let stride = sample_every.max(1);
    let mut u = phi.to_vec();
    check_finite(&u, 0.0)?;
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    for k in 1..=steps {
        u = imex_update(fem, &u, dt, with_reaction)?;
        let t = k as f64 * dt;
        check_finite(&u, t)?;
        if k % stride == 0 || k == steps {
            times.push(t);
            states.push(u.clone());
        }
    }
    Ok(Trajectory { times, states, epsilon: fem.epsilon, dt })
}

/// Integrate up to t_end with every state stored.
pub fn evolve(fem: &FemSystem, phi: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    run_steps(fem, phi, t_end, dt, true, 1)
}

/// Integrate storing only every `sample_every`-th state (plus the initial
/// and final ones).
pub fn evolve_sampled(
    fem: &FemSystem,
    phi: &[f64],
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    run_steps(fem, phi, t_end, dt, true, sample_every)
}

/// Weighted linear-semigroup distance: sup over the time grid of
/// t^β e^{bt} · h1(e^{−tA_ε}φ − e^{−tA₀}φ), with the reaction disabled and
/// b = 0.9 · min(coercivity constants). Returns (sup, b).
pub fn linear_semigroup_gap(
    fem_eps: &FemSystem,
    fem_0: &FemSystem,
    phi: &[f64],
    t_grid: &[f64],
    dt: f64,
) -> Result<(f64, f64)> {
    if t_grid.is_empty() {
        return Err(Error::Config("empty time grid".into()));
    }
    let t_end = *t_grid.last().unwrap();
    for w in t_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config("time grid must increase".into()));
        }
    }
    if t_grid[0] <= 0.0 {
        return Err(Error::Config("time grid must start after 0".into()));
    }
    let b = 0.9 * fem_eps.coercivity_constant()?.min(fem_0.coercivity_constant()?);
    let steps = (t_end / dt).round() as usize;
    if ((t_end / dt) - steps as f64).abs() > 1e-9 {
        return Err(Error::Config(format!("dt {dt} does not divide grid end {t_end}")));
    }
    let mut ue = phi.to_vec();
    let mut u0 = phi.to_vec();
    let mut sup: f64 = 0.0;
    let mut next_idx = 0;
    for k in 1..=steps {
        ue = imex_update(fem_eps, &ue, dt, false)?;
        u0 = imex_update(fem_0, &u0, dt, false)?;
        let t = k as f64 * dt;
        check_finite(&ue, t)?;
        check_finite(&u0, t)?;
        while next_idx < t_grid.len() && t_grid[next_idx] <= t + 1e-12 {
            if (t_grid[next_idx] - t).abs() <= 1e-9 {
                let diff: Vec<f64> = ue.iter().zip(u0.iter()).map(|(a, b)| a - b).collect();
                let g = fem_0.h1_norm(&diff);
                sup = sup.max(t.powf(BETA) * (b * t).exp() * g);
            }
            next_idx += 1;
        }
    }
    Ok((sup, b))
}

/// One row of the nonlinear semigroup comparison: time, raw H¹ gap, and the
/// t^γ-weighted gap.
#[derive(Clone, Copy, Debug)]
pub struct GapRow {
    pub t: f64,
    pub gap: f64,
    pub weighted: f64,
}

/// Nonlinear semigroup comparison up to time τ: both systems evolve their
/// own initial data with the reaction on; the table reports the H¹ gap and
/// its t^γ weighting at every recorded step.
pub fn nonlinear_semigroup_gap(
    fem_eps: &FemSystem,
    fem_0: &FemSystem,
    phi_eps: &[f64],
    phi_0: &[f64],
    tau: f64,
    dt: f64,
) -> Result<Vec<GapRow>> {
    if !(tau > 0.0 && dt > 0.0) {
        return Err(Error::Config(format!("need positive tau and dt, got {tau}, {dt}")));
    }
    let steps = (tau / dt).round() as usize;
    if steps == 0 || ((tau / dt) - steps as f64).abs() > 1e-9 {
        return Err(Error::Config(format!("dt {dt} does not divide tau {tau}")));
    }
    let stride = (steps / 200).max(1);
    let mut ue = phi_eps.to_vec();
    let mut u0 = phi_0.to_vec();
    let mut rows = Vec::new();
    for k in 1..=steps {
        ue = step_imex(fem_eps, &ue, dt)?;
        u0 = step_imex(fem_0, &u0, dt)?;
        let t = k as f64 * dt;
        check_finite(&ue, t)?;
        check_finite(&u0, t)?;
        if k % stride == 0 || k == steps {
            let diff: Vec<f64> = ue.iter().zip(u0.iter()).map(|(a, b)| a - b).collect();
            let gap = fem_0.h1_norm(&diff);
            rows.push(GapRow { t, gap, weighted: t.powf(GAMMA) * gap });
        }
    }
    Ok(rows)
}

/// Sup of the weighted column of a gap table.
pub fn weighted_sup(rows: &[GapRow]) -> f64 {
    rows.iter().fold(0.0, |a, r| a.max(r.weighted))
}
