//! Stationary solutions of the strip and boundary-limit problems: damped
//! Newton solves, linearization spectra and hyperbolicity, continuation of
//! equilibria along the ε ladder, and matching of equilibrium sets.

use crate::error::{Error, Result};
use crate::fem::{FemField, FemSystem};
use crate::linalg::{smallest_pencil_eigs, SpMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How many of the lowest pencil eigenvalues are attached to each
/// equilibrium (enough to read off desk-scale Morse indices).
pub const SPECTRUM_K: usize = 6;
/// Default hyperbolicity threshold on |eigenvalue|.
pub const GAP_TOL: f64 = 1e-3;

/// A converged stationary point with its linearization data.
#[derive(Clone, Debug)]
pub struct EquilibriumPoint {
    pub state: FemField,
    pub epsilon: f64,
    /// Dual norm of S u − F(u) at convergence.
    pub residual: f64,
    /// Lowest eigenvalues of the pencil (S − J(u), K + M), ascending.
    pub spectrum: Vec<f64>,
    /// min |eigenvalue| ≥ GAP_TOL at construction time.
    pub hyperbolic: bool,
    /// Count of negative eigenvalues among the computed spectrum.
    pub morse_index: usize,
}

impl EquilibriumPoint {
    pub fn min_abs_eig(&self) -> f64 {
        self.spectrum.iter().fold(f64::INFINITY, |a, &t| a.min(t.abs()))
    }

    /// Mean nodal value; a cheap deterministic sort key for sets of
    /// equilibria of an odd nonlinearity.
    pub fn mean_value(&self) -> f64 {
        self.state.iter().sum::<f64>() / self.state.len() as f64
    }
}

/// Is zero separated from the computed spectrum by at least gap_tol?
pub fn is_hyperbolic(point: &EquilibriumPoint, gap_tol: f64) -> bool {
    point.min_abs_eig() >= gap_tol
}

/// Lowest k eigenvalues of the linearization pencil (S − J(u), K + M).
pub fn linearization_spectrum(fem: &FemSystem, u: &[f64], k: usize) -> Result<Vec<f64>> {
    let j = fem.apply_fprime(u)?;
    let l = SpMat::linear_combo(1.0, &fem.s, -1.0, &j)?;
    let (vals, _) = smallest_pencil_eigs(&l, &fem.n, k, 0xE16)?;
    Ok(vals)
}

fn lowest_eigvec(fem: &FemSystem, u: &[f64]) -> Result<Vec<f64>> {
    let j = fem.apply_fprime(u)?;
    let l = SpMat::linear_combo(1.0, &fem.s, -1.0, &j)?;
    let (_, vecs) = smallest_pencil_eigs(&l, &fem.n, 1, 0xE17)?;
    Ok(vecs.into_iter().next().unwrap())
}

/// Damped Newton iteration on G(u) = S u − F(u), refactorizing S − J(u)
/// every step; step halving (up to 8 times) on residual increase.
pub fn newton_equilibrium(fem: &FemSystem, guess: &[f64], tol: f64) -> Result<EquilibriumPoint> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("newton tolerance must be positive, got {tol}")));
    }
    let mut u = guess.to_vec();
    let mut res_vec = fem.residual(&u);
    let mut res = fem.dual_norm(&res_vec);
    let mut converged = res <= tol;
    let mut iterations = 0;
    while !converged {
        if iterations >= 50 {
            return Err(Error::NewtonDiverged { iterations, residual: res });
        }
        iterations += 1;
        let j = fem.apply_fprime(&u)?;
        let lmat = SpMat::linear_combo(1.0, &fem.s, -1.0, &j)?;
        let fact = lmat.lu().map_err(|_| {
            Error::Numerical(format!(
                "singular Newton matrix at iteration {iterations}: \
                 equilibrium is at or near non-hyperbolicity"
            ))
        })?;
        let neg: Vec<f64> = res_vec.iter().map(|r| -r).collect();
        let step = fact.solve(&neg);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=8 {
            let trial: Vec<f64> =
                u.iter().zip(step.iter()).map(|(x, d)| x + alpha * d).collect();
            let trial_vec = fem.residual(&trial);
            let trial_res = fem.dual_norm(&trial_vec);
            if trial_res <= tol || trial_res < res * (1.0 - 1e-4) {
                u = trial;
                res_vec = trial_vec;
                res = trial_res;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged { iterations, residual: res });
        }
        converged = res <= tol;
    }
    let spectrum = linearization_spectrum(fem, &u, SPECTRUM_K.min(fem.dim()))?;
    let morse_index = spectrum.iter().filter(|&&t| t < 0.0).count();
    let hyperbolic = spectrum.iter().fold(f64::INFINITY, |a, &t| a.min(t.abs())) >= GAP_TOL;
    Ok(EquilibriumPoint {
        state: u,
        epsilon: fem.epsilon,
        residual: res,
        spectrum,
        hyperbolic,
        morse_index,
    })
}

/// An equilibrium continued across the ε ladder down to its limit point.
#[derive(Clone, Debug)]
pub struct EquilibriumBranch {
    /// (ε, point) with ε strictly decreasing, ending with the ε = 0 entry.
    pub entries: Vec<(f64, EquilibriumPoint)>,
    /// h1 distance from each ε > 0 entry to the limit point.
    pub distances: Vec<f64>,
}

/// Continue a hyperbolic ε = 0 equilibrium through a descending ladder of
/// strip systems, seeding each Newton solve with the previous branch point
/// and insisting the branch stays in the δ-ball around the limit.
pub fn continue_branch(
    fems: &[FemSystem],
    limit: &EquilibriumPoint,
    delta: f64,
    tol: f64,
) -> Result<EquilibriumBranch> {
    if fems.is_empty() {
        return Err(Error::Config("empty epsilon ladder for continuation".into()));
    }
    for w in fems.windows(2) {
        if w[1].epsilon >= w[0].epsilon {
            return Err(Error::Config("epsilon ladder must descend".into()));
        }
    }
    if fems.last().unwrap().epsilon <= 0.0 {
        return Err(Error::Config("continuation ladder must stay at epsilon > 0".into()));
    }
    if !limit.hyperbolic {
        return Err(Error::Config(
            "continuation requires a hyperbolic limit equilibrium".into(),
        ));
    }
    // Grow the branch out of the known ε = 0 point, thinnest strip first:
    // consecutive rungs are then closest, so every Newton starts near its
    // root. Walking the other way can hop basins when the top rung sits
    // near the edge of the instability window.
    let mut entries = Vec::with_capacity(fems.len() + 1);
    let mut distances = Vec::with_capacity(fems.len());
    let mut seed = limit.state.clone();
    for fem in fems.iter().rev() {
        let point = newton_equilibrium(fem, &seed, tol)?;
        let diff: Vec<f64> =
            point.state.iter().zip(limit.state.iter()).map(|(a, b)| a - b).collect();
        let distance = fem.h1_norm(&diff);
        if distance > delta {
            return Err(Error::BranchEscape { epsilon: fem.epsilon, distance, delta });
        }
        seed = point.state.clone();
        distances.push(distance);
        entries.push((fem.epsilon, point));
    }
    entries.reverse();
    distances.reverse();
    entries.push((0.0, limit.clone()));
    Ok(EquilibriumBranch { entries, distances })
}

/// A minimum-total-distance pairing between two equilibrium sets.
#[derive(Clone, Debug)]
pub struct Matching {
    /// (index into E_ε, index into E_0, h1 distance), sorted by the E_0 index.
    pub pairs: Vec<(usize, usize, f64)>,
    pub total: f64,
}

fn best_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    // Branch-and-bound over permutations; equilibrium sets are tiny.
    fn search(
        cost: &[Vec<f64>],
        row: usize,
        acc: f64,
        perm: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut (Vec<usize>, f64),
    ) {
        if acc >= best.1 {
            return;
        }
        if row == cost.len() {
            *best = (perm.clone(), acc);
            return;
        }
        for col in 0..cost.len() {
            if !used[col] {
                used[col] = true;
                perm.push(col);
                search(cost, row + 1, acc + cost[row][col], perm, used, best);
                perm.pop();
                used[col] = false;
            }
        }
    }
    let m = cost.len();
    let mut best = (Vec::new(), f64::INFINITY);
    let mut perm: Vec<usize> = Vec::with_capacity(m);
    let mut used = vec![false; m];
    search(cost, 0, 0.0, &mut perm, &mut used, &mut best);
    best
}

/// Optimal bipartite matching of two equilibrium sets by total h1 distance.
/// The sets must have equal cardinality; `fem` supplies the norm.
pub fn match_equilibria(
    fem: &FemSystem,
    e_eps: &[EquilibriumPoint],
    e_0: &[EquilibriumPoint],
) -> Result<Matching> {
    if e_eps.len() != e_0.len() {
        return Err(Error::CountMismatch { left: e_eps.len(), right: e_0.len() });
    }
    if e_eps.is_empty() {
        return Ok(Matching { pairs: Vec::new(), total: 0.0 });
    }
    if e_eps.len() > 9 {
        return Err(Error::Config(format!(
            "matching supports at most 9 equilibria, got {}",
            e_eps.len()
        )));
    }
    let cost: Vec<Vec<f64>> = e_eps
        .iter()
        .map(|a| {
            e_0.iter()
                .map(|b| {
                    let diff: Vec<f64> =
                        a.state.iter().zip(b.state.iter()).map(|(x, y)| x - y).collect();
                    fem.h1_norm(&diff)
                })
                .collect()
        })
        .collect();
    let (perm, total) = best_assignment(&cost);
    let mut pairs: Vec<(usize, usize, f64)> = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (i, j, cost[i][j]))
        .collect();
    pairs.sort_by_key(|p| p.1);
    Ok(Matching { pairs, total })
}

/// Multi-start Newton: constant seeds {−2, −1, −0.5, 0, 0.5, 1, 2}, then ±
/// lowest-eigenvector perturbations of every point found, deduplicated at
/// h1 distance 1e−4 and sorted by mean value. Non-converged seeds are
/// skipped.
pub fn find_all_equilibria(fem: &FemSystem, tol: f64) -> Result<Vec<EquilibriumPoint>> {
    const SEEDS: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let n = fem.dim();
    let mut found: Vec<EquilibriumPoint> = Vec::new();
    let push = |found: &mut Vec<EquilibriumPoint>, p: EquilibriumPoint| {
        let fresh = found.iter().all(|q| {
            let diff: Vec<f64> =
                p.state.iter().zip(q.state.iter()).map(|(a, b)| a - b).collect();
            fem.h1_norm(&diff) >= 1e-4
        });
        if fresh {
            found.push(p);
        }
    };
    for c in SEEDS {
        if let Ok(p) = newton_equilibrium(fem, &vec![c; n], tol) {
            push(&mut found, p);
        }
    }
    let base: Vec<FemField> = found.iter().map(|p| p.state.clone()).collect();
    for u in &base {
        let v = lowest_eigvec(fem, u)?;
        for sign in [1.0, -1.0] {
            let seed: Vec<f64> =
                u.iter().zip(v.iter()).map(|(x, e)| x + sign * e).collect();
            if let Ok(p) = newton_equilibrium(fem, &seed, tol) {
                push(&mut found, p);
            }
        }
    }
    found.sort_by(|a, b| {
        a.mean_value()
            .partial_cmp(&b.mean_value())
            .unwrap()
            .then(a.residual.partial_cmp(&b.residual).unwrap())
    });
    Ok(found)
}

/// Pick λ by bisection so that the trivial equilibrium of the cutoff-cubic
/// scenario has exactly one negative linearization eigenvalue: returns the
/// midpoint of the index-1 window together with the window itself. `make`
/// assembles the scenario system at a given λ.
pub fn calibrate_bistable_lambda<Fm>(
    make: Fm,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, (f64, f64))>
where
    Fm: Fn(f64) -> Result<FemSystem>,
{
    let (a, b) = bracket;
    if !(a > 0.0 && b > a && tol > 0.0) {
        return Err(Error::Config(format!("bad calibration bracket ({a}, {b}) or tol {tol}")));
    }
    let index_at = |lam: f64| -> Result<usize> {
        let fem = make(lam)?;
        let zero = vec![0.0; fem.dim()];
        let spec = linearization_spectrum(&fem, &zero, 3.min(fem.dim()))?;
        Ok(spec.iter().filter(|&&t| t < 0.0).count())
    };
    let ia = index_at(a)?;
    let ib = index_at(b)?;
    // The negative count is non-increasing in λ (S grows by λM).
    if ia < 1 {
        return Err(Error::Config(format!(
            "bracket start λ={a} already has index {ia} < 1; move it left"
        )));
    }
    if ib > 0 {
        return Err(Error::Config(format!(
            "bracket end λ={b} still has index {ib} > 0; move it right"
        )));
    }
    // Upper edge: where the index drops to 0.
    let mut lo = a;
    let mut hi = b;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if index_at(mid)? >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let upper = 0.5 * (lo + hi);
    // Lower edge: where the index drops to 1 (or the bracket start if the
    // index is already 1 there).
    let lower = if ia == 1 {
        a
    } else {
        let mut lo = a;
        let mut hi = upper;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if index_at(mid)? >= 2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    if !(upper > lower) {
        return Err(Error::Numerical(format!(
            "empty index-1 window: ({lower}, {upper})"
        )));
    }
    Ok((0.5 * (lower + upper), (lower, upper)))
}

/// Max over test loads of h1(L_ε⁻¹ w − L₀⁻¹ w) with L = S − J(u*): a proxy
/// for resolvent convergence at paired equilibria.
pub fn resolvent_gap(
    fem_eps: &FemSystem,
    u_eps: &[f64],
    fem_0: &FemSystem,
    u_0: &[f64],
    loads: &[FemField],
) -> Result<f64> {
    let solve_at = |fem: &FemSystem, u: &[f64]| -> Result<crate::linalg::Factor> {
        let j = fem.apply_fprime(u)?;
        let l = SpMat::linear_combo(1.0, &fem.s, -1.0, &j)?;
        l.lu()
    };
    let fe = solve_at(fem_eps, u_eps)?;
    let f0 = solve_at(fem_0, u_0)?;
    let mut worst: f64 = 0.0;
    for w in loads {
        let xe = fe.solve(w);
        let x0 = f0.solve(w);
        let diff: Vec<f64> = xe.iter().zip(x0.iter()).map(|(a, b)| a - b).collect();
        worst = worst.max(fem_0.h1_norm(&diff));
    }
    Ok(worst)
}

/// Deterministic random states in the δ-ball around a center (h1 radius
/// scaled to `radius`), for uniqueness probes.
pub fn ball_samples(
    fem: &FemSystem,
    center: &[f64],
    radius: f64,
    count: usize,
    seed: u64,
) -> Vec<FemField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let noise: Vec<f64> =
                (0..center.len()).map(|_| rng.random::<f64>() - 0.5).collect();
            let h1 = fem.h1_norm(&noise).max(1e-300);
            let scale = radius * rng.random::<f64>() / h1;
            center.iter().zip(noise.iter()).map(|(c, z)| c + scale * z).collect()
        })
        .collect()
}
