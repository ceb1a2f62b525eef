//! Assembled P1 systems for the strip problem (ε > 0) and its boundary
//! limit (ε = 0): stiffness, mass, potential matrices, the reaction map F
//! and its Jacobian, discrete norms, and the coercivity constant.

use crate::error::{Error, Result};
use crate::fem::{Mesh, Nonlinearity};
use crate::geometry::{mu, Profile, StripRegion};
use crate::linalg::{pencil_max_abs, smallest_pencil_eigs, Factor, SpMat};
use crate::quad::{strip_quadrature, QuadSpec, ScalarField};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodal coefficient vector of a P1 function (length = vertex count).
pub type FemField = Vec<f64>;

/// A strip quadrature node resolved against the mesh: containing triangle,
/// barycentric coordinates, boundary-foot arclength and quadrature weight
/// (with the 1/ε and area-element factors folded in).
#[derive(Clone, Copy, Debug)]
pub struct LocatedNode {
    pub tri: u32,
    pub bary: [f64; 3],
    pub s: f64,
    pub w: f64,
}

/// Where the reaction and potential terms live.
enum Reaction {
    /// Concentrated in the ε-strip: shared located quadrature nodes.
    Strip { nodes: Arc<Vec<LocatedNode>> },
    /// Concentrated on the boundary: lumped weights μ(s_i)·Δs_i per
    /// boundary vertex (zero for interior vertices).
    Boundary { bmu: Arc<Vec<f64>> },
}

/// Assembled operators for one value of ε (or the ε = 0 limit).
pub struct FemSystem {
    pub mesh: Arc<Mesh>,
    pub lambda: f64,
    /// 0.0 in boundary-limit mode.
    pub epsilon: f64,
    /// Stiffness ∫∇u·∇v.
    pub k: SpMat,
    /// Mass ∫uv.
    pub m: SpMat,
    /// Norm matrix K + M defining the discrete H¹ inner product.
    pub n: SpMat,
    /// Potential matrix: strip (1/ε)∫_{ω_ε}V uv or boundary ∫_{∂Ω}V₀ uv.
    pub p: SpMat,
    /// System matrix S = K + λM + P.
    pub s: SpMat,
    pub f: Nonlinearity,
    reaction: Reaction,
    nfact: OnceLock<Factor>,
    step_facts: Mutex<HashMap<u64, Arc<Factor>>>,
}

/// Stiffness and mass by exact P1 integration, plus their λ-combination.
pub fn assemble_base(mesh: &Mesh, lambda: f64) -> Result<(SpMat, SpMat, SpMat)> {
    let nv = mesh.n_vertices();
    let nt = mesh.n_triangles();
    let mut ktrip = Vec::with_capacity(9 * nt);
    let mut mtrip = Vec::with_capacity(9 * nt);
    for t in 0..nt {
        let [a, b, c] = mesh.triangles[t];
        let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let d = mesh.double_area(t);
        if d <= 0.0 {
            return Err(Error::Mesh(format!("degenerate triangle {t}")));
        }
        let area = 0.5 * d;
        // Constant P1 gradients: ∇λ_a = rot(pc - pb)/d etc.
        let grads = [
            [(pb[1] - pc[1]) / d, (pc[0] - pb[0]) / d],
            [(pc[1] - pa[1]) / d, (pa[0] - pc[0]) / d],
            [(pa[1] - pb[1]) / d, (pb[0] - pa[0]) / d],
        ];
        let idx = [a, b, c];
        for i in 0..3 {
            for j in 0..3 {
                let kij = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                ktrip.push((idx[i], idx[j], kij));
                let mij = if i == j { area / 6.0 } else { area / 12.0 };
                mtrip.push((idx[i], idx[j], mij));
            }
        }
    }
    let k = SpMat::from_triplets(nv, &ktrip)?;
    let m = SpMat::from_triplets(nv, &mtrip)?;
    let base = SpMat::linear_combo(1.0, &k, lambda, &m)?;
    Ok((k, m, base))
}

/// Lumped boundary matrix for a weight w(s): diagonal entries
/// w(s_i)·(Δs_prev + Δs_next)/2 over the exact curved arclength.
pub fn assemble_boundary_potential(mesh: &Mesh, w: &dyn Fn(f64) -> f64) -> Result<SpMat> {
    let nv = mesh.n_vertices();
    let mut trip = Vec::with_capacity(2 * mesh.boundary.len());
    for e in &mesh.boundary {
        let ds = e.s_j - e.s_i;
        trip.push((e.i, e.i, 0.5 * ds * w(e.s_i)));
        trip.push((e.j, e.j, 0.5 * ds * w(e.s_j)));
    }
    SpMat::from_triplets(nv, &trip)
}

/// Resolve the shared strip quadrature against the mesh. Errors with a node
/// report if any node misses point location (all nodes lie inside Ω by the
/// strip map, so a miss indicates an unresolved mesh).
pub fn locate_strip_nodes(mesh: &Mesh, region: &StripRegion) -> Result<Vec<LocatedNode>> {
    let spacing = mesh.boundary_spacing();
    if spacing <= 0.0 {
        return Err(Error::Mesh("mesh has no boundary edges".into()));
    }
    let h_b = spacing * std::f64::consts::SQRT_2;
    let raw = strip_quadrature(region, &QuadSpec::resolving_mesh(h_b))?;
    let mut nodes = Vec::with_capacity(raw.len());
    for n in &raw {
        let (tri, bary) = mesh.locate(n.xi).ok_or_else(|| {
            Error::Numerical(format!(
                "strip quadrature node at {:?} (s={}, t={}) missed point location",
                n.xi, n.s, n.t
            ))
        })?;
        nodes.push(LocatedNode { tri: tri as u32, bary, s: n.s, w: n.w });
    }
    Ok(nodes)
}

/// Strip potential matrix: (i,j) entry (1/ε)∫_{ω_ε} V φ_i φ_j through the
/// located node set.
pub fn assemble_strip_potential(
    mesh: &Mesh,
    nodes: &[LocatedNode],
    v: &ScalarField,
) -> Result<SpMat> {
    let mut trip = Vec::with_capacity(9 * nodes.len());
    for node in nodes {
        let tri = mesh.triangles[node.tri as usize];
        let xi = physical_point(mesh, node);
        let wv = node.w * v.eval(node.s, xi);
        if wv == 0.0 {
            continue;
        }
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], wv * node.bary[i] * node.bary[j]));
            }
        }
    }
    SpMat::from_triplets(mesh.n_vertices(), &trip)
}

fn physical_point(mesh: &Mesh, node: &LocatedNode) -> [f64; 2] {
    let tri = mesh.triangles[node.tri as usize];
    let mut p = [0.0, 0.0];
    for (l, &v) in node.bary.iter().zip(tri.iter()) {
        p[0] += l * mesh.vertices[v][0];
        p[1] += l * mesh.vertices[v][1];
    }
    p
}

impl FemSystem {
    /// Assemble the ε > 0 problem: reaction and potential concentrated in
    /// the strip, both integrated over one shared node set so that the
    /// Jacobian of F at 0 coincides exactly with the potential matrix for
    /// V ≡ f′(0).
    pub fn strip(
        mesh: Arc<Mesh>,
        region: &StripRegion,
        v: &ScalarField,
        lambda: f64,
        f: Nonlinearity,
    ) -> Result<FemSystem> {
        let (k, m, base) = assemble_base(&mesh, lambda)?;
        let nodes = Arc::new(locate_strip_nodes(&mesh, region)?);
        let p = assemble_strip_potential(&mesh, &nodes, v)?;
        let s = SpMat::linear_combo(1.0, &base, 1.0, &p)?;
        let n = SpMat::linear_combo(1.0, &k, 1.0, &m)?;
        Ok(FemSystem {
            mesh,
            lambda,
            epsilon: region.epsilon,
            k,
            m,
            n,
            p,
            s,
            f,
            reaction: Reaction::Strip { nodes },
            nfact: OnceLock::new(),
            step_facts: Mutex::new(HashMap::new()),
        })
    }

    /// Assemble the ε = 0 limit problem: potential V₀ = μ·V and reaction
    /// weight μ live on the boundary.
    pub fn boundary(
        mesh: Arc<Mesh>,
        profile: &Profile,
        v: &ScalarField,
        lambda: f64,
        f: Nonlinearity,
    ) -> Result<FemSystem> {
        let (k, m, base) = assemble_base(&mesh, lambda)?;
        let mu_at = |s: f64| mu(profile, s).expect("mean profile evaluation");
        // Lumped boundary weights b_i = μ(s_i)·(Δs_prev + Δs_next)/2.
        let mut bmu = vec![0.0; mesh.n_vertices()];
        for e in &mesh.boundary {
            let ds = e.s_j - e.s_i;
            bmu[e.i] += 0.5 * ds * mu_at(e.s_i);
            bmu[e.j] += 0.5 * ds * mu_at(e.s_j);
        }
        let curve_point = |mesh: &Mesh, i: usize| mesh.vertices[i];
        let mut ptrip = Vec::with_capacity(mesh.boundary.len());
        for (i, &b) in bmu.iter().enumerate() {
            if b != 0.0 {
                let xi = curve_point(&mesh, i);
                let s = mesh.vertex_s[i].expect("boundary vertex arclength");
                ptrip.push((i, i, b * v.eval(s, xi)));
            }
        }
        let p = SpMat::from_triplets(mesh.n_vertices(), &ptrip)?;
        let s = SpMat::linear_combo(1.0, &base, 1.0, &p)?;
        let n = SpMat::linear_combo(1.0, &k, 1.0, &m)?;
        Ok(FemSystem {
            mesh,
            lambda,
            epsilon: 0.0,
            k,
            m,
            n,
            p,
            s,
            f,
            reaction: Reaction::Boundary { bmu: Arc::new(bmu) },
            nfact: OnceLock::new(),
            step_facts: Mutex::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.n_vertices()
    }

    fn check_field(&self, u: &[f64]) {
        assert_eq!(u.len(), self.dim(), "field length does not match mesh");
    }

    /// ⟨F(u), φ_i⟩: strip mode (1/ε)∫_{ω_ε} f(u)φ_i, boundary mode
    /// ∫_{∂Ω} μ f(u) φ_i dS (lumped).
    pub fn apply_f(&self, u: &[f64]) -> FemField {
        self.check_field(u);
        let mut out = vec![0.0; self.dim()];
        match &self.reaction {
            Reaction::Strip { nodes } => {
                for node in nodes.iter() {
                    let tri = self.mesh.triangles[node.tri as usize];
                    let uval = node.bary[0] * u[tri[0]]
                        + node.bary[1] * u[tri[1]]
                        + node.bary[2] * u[tri[2]];
                    let wf = node.w * self.f.f(uval);
                    for k in 0..3 {
                        out[tri[k]] += wf * node.bary[k];
                    }
                }
            }
            Reaction::Boundary { bmu } => {
                for (o, (b, ui)) in out.iter_mut().zip(bmu.iter().zip(u.iter())) {
                    if *b != 0.0 {
                        *o = b * self.f.f(*ui);
                    }
                }
            }
        }
        out
    }

    /// Jacobian of `apply_f` at u*: the symmetric matrix weighting test and
    /// trial functions by f′(u*).
    pub fn apply_fprime(&self, u: &[f64]) -> Result<SpMat> {
        self.check_field(u);
        match &self.reaction {
            Reaction::Strip { nodes } => {
                let mut trip = Vec::with_capacity(9 * nodes.len());
                for node in nodes.iter() {
                    let tri = self.mesh.triangles[node.tri as usize];
                    let uval = node.bary[0] * u[tri[0]]
                        + node.bary[1] * u[tri[1]]
                        + node.bary[2] * u[tri[2]];
                    let wdf = node.w * self.f.df(uval);
                    if wdf == 0.0 {
                        continue;
                    }
                    for i in 0..3 {
                        for j in 0..3 {
                            trip.push((tri[i], tri[j], wdf * node.bary[i] * node.bary[j]));
                        }
                    }
                }
                SpMat::from_triplets(self.dim(), &trip)
            }
            Reaction::Boundary { bmu } => {
                let trip: Vec<(usize, usize, f64)> = bmu
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b != 0.0)
                    .map(|(i, b)| (i, i, b * self.f.df(u[i])))
                    .collect();
                SpMat::from_triplets(self.dim(), &trip)
            }
        }
    }

    /// Concentrated integral of the primitive W(u) (for energies): strip
    /// (1/ε)∫_{ω_ε} W(u), boundary ∫_{∂Ω} μ W(u) dS.
    pub fn reaction_potential_energy(&self, u: &[f64]) -> f64 {
        self.check_field(u);
        match &self.reaction {
            Reaction::Strip { nodes } => nodes
                .iter()
                .map(|node| {
                    let tri = self.mesh.triangles[node.tri as usize];
                    let uval = node.bary[0] * u[tri[0]]
                        + node.bary[1] * u[tri[1]]
                        + node.bary[2] * u[tri[2]];
                    node.w * self.f.prim(uval)
                })
                .sum(),
            Reaction::Boundary { bmu } => bmu
                .iter()
                .zip(u.iter())
                .map(|(b, ui)| b * self.f.prim(*ui))
                .sum(),
        }
    }

    fn norm_factor(&self) -> &Factor {
        self.nfact
            .get_or_init(|| self.n.cholesky().expect("K+M is positive definite"))
    }

    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        self.check_field(u);
        self.n.quad_form(u, u).max(0.0).sqrt()
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.check_field(u);
        self.m.quad_form(u, u).max(0.0).sqrt()
    }

    /// Discrete dual norm √(rᵀ(K+M)⁻¹r) of a load vector.
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        self.check_field(r);
        let x = self.norm_factor().solve(r);
        r.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// H¹ inner product ⟨u, v⟩ = uᵀ(K+M)v.
    pub fn h1_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.n.quad_form(u, v)
    }

    /// Equilibrium residual S u − F(u) as a load vector.
    pub fn residual(&self, u: &[f64]) -> FemField {
        let su = self.s.matvec(u);
        let fu = self.apply_f(u);
        su.iter().zip(fu.iter()).map(|(a, b)| a - b).collect()
    }

    /// Smallest eigenvalue of the pencil (S, K+M): the discrete coercivity
    /// constant of the bilinear form.
    pub fn coercivity_constant(&self) -> Result<f64> {
        let (vals, _) = smallest_pencil_eigs(&self.s, &self.n, 1, 0xC0)?;
        Ok(vals[0])
    }

    /// Cached factorization of M + dt·S for implicit stepping.
    pub fn step_factor(&self, dt: f64) -> Result<Arc<Factor>> {
        let key = dt.to_bits();
        let mut cache = self.step_facts.lock().unwrap();
        if let Some(f) = cache.get(&key) {
            return Ok(f.clone());
        }
        let mat = SpMat::linear_combo(1.0, &self.m, dt, &self.s)?;
        let fact = Arc::new(mat.cholesky().or_else(|_| mat.lu())?);
        cache.insert(key, fact.clone());
        Ok(fact)
    }
}

/// Operator-norm distance between the strip potential for V_ε and the
/// boundary potential for V₀ on the same mesh, measured from discrete H¹ to
/// its dual: the largest |θ| of the pencil (P_ε − P₀) v = θ (K+M) v.
pub fn potential_operator_gap(
    fem: &FemSystem,
    region: &StripRegion,
    v_eps: &ScalarField,
    v_0: &ScalarField,
) -> Result<f64> {
    let nodes = locate_strip_nodes(&fem.mesh, region)?;
    let p_eps = assemble_strip_potential(&fem.mesh, &nodes, v_eps)?;
    let mut trip = Vec::new();
    for e in &fem.mesh.boundary {
        let ds = e.s_j - e.s_i;
        for &(i, s) in [(e.i, e.s_i), (e.j, e.s_j)].iter() {
            let xi = fem.mesh.vertices[i];
            trip.push((i, i, 0.5 * ds * v_0.eval(s, xi)));
        }
    }
    let p_0 = SpMat::from_triplets(fem.mesh.n_vertices(), &trip)?;
    let diff = SpMat::linear_combo(1.0, &p_eps, -1.0, &p_0)?;
    if diff.nnz() == 0 {
        return Ok(0.0);
    }
    pencil_max_abs(&diff, &fem.n, 0x6A9)
}
