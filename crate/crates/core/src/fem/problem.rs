use std::fmt;
use std::fmt::Write as _;
use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;

use super::quadrature::{gauss3_unit, TriangleRule};
use super::space::{p1_shape, p2_edge_shape, p2_shape, VelocitySpace};
use crate::checks::rng;
use crate::constitutive::{voigt_norm, ConstitutiveLaw};
use crate::error::{Error, Result};
use crate::linalg::{dot, SaddleSolver, SparseMatrix, TripletBuilder};
use crate::mesh::{tangent_of, BoundaryTag};
use crate::potentials::{ConvexPotentialSpec, SlipModel};

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KKind {
    /// `k(v) = ‖𝔻v‖_{L²}`
    VSeminorm,
    /// `k(v) = ν₀ ∫ ‖𝔻v‖²`
    DissipationSq { nu0: f64 },
}

#[derive(Clone)]
pub enum RKind {
    /// `r(v) = α + ∫ ‖v‖ ϱ`
    AffineL1 { alpha: f64, rho: ScalarField },
    Constant(f64),
}

impl fmt::Debug for RKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AffineL1 { alpha, .. } => write!(f, "AffineL1 {{ alpha: {alpha}, rho: .. }}"),
            Self::Constant(c) => write!(f, "Constant({c})"),
        }
    }
}

/// The pair `(k, r)` defining `K(u) = {v : k(v) ≤ r(u)}`.
#[derive(Clone, Debug)]
pub struct ConstraintFunctionals {
    pub k: KKind,
    pub r: RKind,
}

impl ConstraintFunctionals {
    pub fn new(k: KKind, r: RKind) -> Result<Self> {
        match k {
            KKind::DissipationSq { nu0 } if !(nu0 > 0.0 && nu0.is_finite()) => {
                return Err(Error::Parameter("nu0 must be positive".into()))
            }
            _ => {}
        }
        match &r {
            RKind::AffineL1 { alpha, .. } if !(*alpha > 0.0 && alpha.is_finite()) => {
                return Err(Error::Parameter("alpha must be positive".into()))
            }
            RKind::Constant(c) if !(*c > 0.0) => {
                return Err(Error::Parameter("constant bound must be positive".into()))
            }
            _ => {}
        }
        Ok(Self { k, r })
    }

    /// A bound that never binds.
    pub fn inactive() -> Self {
        Self {
            k: KKind::VSeminorm,
            r: RKind::Constant(f64::INFINITY),
        }
    }

    /// Radius `R` with `{k ≤ c} = {‖v‖_V ≤ R}`.
    pub fn ball_radius(&self, c: f64) -> f64 {
        match self.k {
            KKind::VSeminorm => c,
            KKind::DissipationSq { nu0 } => (c / nu0).sqrt(),
        }
    }

    /// `k` as a function of `‖v‖_V`.
    pub fn k_of_norm(&self, n: f64) -> f64 {
        match self.k {
            KKind::VSeminorm => n,
            KKind::DissipationSq { nu0 } => nu0 * n * n,
        }
    }
}

/// Mesh-level data that does not depend on the material or the load.
pub struct Discretization {
    pub space: VelocitySpace,
    pub rule: TriangleRule,
    /// Quadrature points per element.
    pub nq: usize,
    pub qp_weight: Vec<f64>,
    pub qp_pos: Vec<[f64; 2]>,
    elem_dofs: Vec<Vec<usize>>,
    /// Per quadrature point, scaled-Voigt strain of each local free dof.
    strain: Vec<Vec<[f64; 3]>>,
    /// Per quadrature point, velocity value of each local free dof.
    value: Vec<Vec<[f64; 2]>>,
    pub gram_v: SparseMatrix,
    pub b: SparseMatrix,
    /// Tangential trace at the slip-wall quadrature points.
    pub m: SparseMatrix,
    /// Diagonal of the `L²(Γ₁)` Gram matrix.
    pub gram_x: Vec<f64>,
    pub x_pos: Vec<[f64; 2]>,
    pub x_tangent: Vec<[f64; 2]>,
    pub area: f64,
    pub gamma1_length: f64,
    solver: SaddleSolver,
}

impl fmt::Debug for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Discretization")
            .field("n_free", &self.space.n_free)
            .field("n_pressure", &self.space.n_pressure)
            .field("n_trace", &self.gram_x.len())
            .finish()
    }
}

impl Discretization {
    pub fn new(space: VelocitySpace, quad_degree: usize) -> Result<Self> {
        let rule = TriangleRule::with_degree(quad_degree)?;
        let nq = rule.points.len();
        let n = space.n_free;
        let ne = space.elements.len();
        let mut qp_weight = Vec::with_capacity(ne * nq);
        let mut qp_pos = Vec::with_capacity(ne * nq);
        let mut elem_dofs = Vec::with_capacity(ne);
        let mut strain = Vec::with_capacity(ne * nq);
        let mut value = Vec::with_capacity(ne * nq);
        let mut gram = TripletBuilder::with_capacity(n, n, ne * 144);
        let mut div = TripletBuilder::with_capacity(space.n_pressure, n, ne * 36);
        let s2 = std::f64::consts::SQRT_2;
        for el in &space.elements {
            let p: Vec<[f64; 2]> = (0..3).map(|i| space.nodes[el[i]]).collect();
            let j = [
                [p[1][0] - p[0][0], p[2][0] - p[0][0]],
                [p[1][1] - p[0][1], p[2][1] - p[0][1]],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let mut dofs = Vec::with_capacity(12);
            let mut slots = Vec::with_capacity(12);
            for (a, &node) in el.iter().enumerate() {
                for k in 0..2 {
                    if let Some(d) = space.dofs[node][k] {
                        dofs.push(d);
                        slots.push((a, space.frames[node][k]));
                    }
                }
            }
            let nl = dofs.len();
            let mut local = vec![0.0; nl * nl];
            for &(xi, eta, w) in &rule.points {
                let (nv, gr) = p2_shape(xi, eta);
                let psi = p1_shape(xi, eta);
                let weight = w * det;
                let x = [
                    p[0][0] + j[0][0] * xi + j[0][1] * eta,
                    p[0][1] + j[1][0] * xi + j[1][1] * eta,
                ];
                let mut es = Vec::with_capacity(nl);
                let mut vs = Vec::with_capacity(nl);
                for &(a, t) in &slots {
                    let gx = (j[1][1] * gr[a][0] - j[1][0] * gr[a][1]) / det;
                    let gy = (-j[0][1] * gr[a][0] + j[0][0] * gr[a][1]) / det;
                    let d12 = 0.5 * (t[0] * gy + t[1] * gx);
                    es.push([t[0] * gx, s2 * d12, t[1] * gy]);
                    vs.push([nv[a] * t[0], nv[a] * t[1]]);
                }
                for r in 0..nl {
                    for c in 0..nl {
                        local[r * nl + c] += weight * dot(&es[r], &es[c]);
                    }
                    let dv = es[r][0] + es[r][2];
                    for (i, &v) in el[..3].iter().enumerate() {
                        if let Some(row) = space.pressure_index[v] {
                            div.push(row, dofs[r], -weight * psi[i] * dv);
                        }
                    }
                }
                qp_weight.push(weight);
                qp_pos.push(x);
                strain.push(es);
                value.push(vs);
            }
            for r in 0..nl {
                for c in 0..nl {
                    gram.push(dofs[r], dofs[c], local[r * nl + c]);
                }
            }
            elem_dofs.push(dofs);
        }
        let gram_v = gram.build();
        let b = div.build();

        let mut x_pos = Vec::new();
        let mut x_tangent = Vec::new();
        let mut gram_x = Vec::new();
        let mut trace = Vec::new();
        let mesh = &space.mesh;
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Gamma1) {
            let [a, b_] = e.nodes;
            let mid = space.midpoint(a, b_);
            let (pa, pb) = (mesh.nodes[a], mesh.nodes[b_]);
            let len = mesh.edge_length(e);
            let tau = tangent_of(mesh.edge_normal(e));
            for (t, w) in gauss3_unit() {
                let row = gram_x.len();
                let sh = p2_edge_shape(t);
                for (node, nval) in [(a, sh[0]), (b_, sh[1]), (mid, sh[2])] {
                    for k in 0..2 {
                        if let Some(d) = space.dofs[node][k] {
                            let f = space.frames[node][k];
                            let c = nval * (f[0] * tau[0] + f[1] * tau[1]);
                            if c != 0.0 {
                                trace.push((row, d, c));
                            }
                        }
                    }
                }
                x_pos.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
                x_tangent.push(tau);
                gram_x.push(w * len);
            }
        }
        let mut mb = TripletBuilder::with_capacity(gram_x.len(), n, trace.len());
        for (r, c, v) in trace {
            mb.push(r, c, v);
        }
        let m = mb.build();
        let solver = SaddleSolver::new(&gram_v, Some(&b))?;
        let area = mesh.area();
        let gamma1_length = mesh.boundary_length(BoundaryTag::Gamma1);
        Ok(Self {
            space,
            rule,
            nq,
            qp_weight,
            qp_pos,
            elem_dofs,
            strain,
            value,
            gram_v,
            b,
            m,
            gram_x,
            x_pos,
            x_tangent,
            area,
            gamma1_length,
            solver,
        })
    }

    pub fn n_free(&self) -> usize {
        self.space.n_free
    }

    pub fn n_trace(&self) -> usize {
        self.gram_x.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elem_dofs.len()
    }

    /// Factorization of `[G Bᵀ; B 0]`.
    pub fn gram_solver(&self) -> &SaddleSolver {
        &self.solver
    }

    #[inline]
    pub fn strain_at(&self, u: &[f64], q: usize) -> [f64; 3] {
        let dofs = &self.elem_dofs[q / self.nq];
        let mut e = [0.0; 3];
        for (d, s) in dofs.iter().zip(&self.strain[q]) {
            let c = u[*d];
            e[0] += c * s[0];
            e[1] += c * s[1];
            e[2] += c * s[2];
        }
        e
    }

    #[inline]
    pub fn velocity_at(&self, u: &[f64], q: usize) -> [f64; 2] {
        let dofs = &self.elem_dofs[q / self.nq];
        let mut v = [0.0; 2];
        for (d, s) in dofs.iter().zip(&self.value[q]) {
            v[0] += u[*d] * s[0];
            v[1] += u[*d] * s[1];
        }
        v
    }

    /// `Σ_q weight_q · Eᵀ s(e_q)` for a per-point stress map `s`.
    pub fn integrate_strain_dual<F>(&self, u: &[f64], mut stress: F) -> Vec<f64>
    where
        F: FnMut(&[f64; 3]) -> [f64; 3],
    {
        let mut out = vec![0.0; self.n_free()];
        for q in 0..self.qp_weight.len() {
            let e = self.strain_at(u, q);
            let s = stress(&e);
            let w = self.qp_weight[q];
            for (d, es) in self.elem_dofs[q / self.nq].iter().zip(&self.strain[q]) {
                out[*d] += w * dot(&s, es);
            }
        }
        out
    }

    /// `Σ_q weight_q · Eᵀ C(e_q) E` for a per-point symmetric tangent `C`.
    pub fn integrate_strain_tangent<F>(&self, u: &[f64], mut tangent: F) -> SparseMatrix
    where
        F: FnMut(&[f64; 3]) -> [[f64; 3]; 3],
    {
        let n = self.n_free();
        let mut t = TripletBuilder::with_capacity(n, n, self.n_elements() * 144);
        for (el, dofs) in self.elem_dofs.iter().enumerate() {
            let nl = dofs.len();
            let mut local = vec![0.0; nl * nl];
            for q in el * self.nq..(el + 1) * self.nq {
                let e = self.strain_at(u, q);
                let c = tangent(&e);
                let w = self.qp_weight[q];
                let es = &self.strain[q];
                for r in 0..nl {
                    let ce = [
                        dot(&c[0], &es[r]),
                        dot(&c[1], &es[r]),
                        dot(&c[2], &es[r]),
                    ];
                    for cc in 0..nl {
                        local[r * nl + cc] += w * dot(&ce, &es[cc]);
                    }
                }
            }
            for r in 0..nl {
                for c in 0..nl {
                    t.push(dofs[r], dofs[c], local[r * nl + c]);
                }
            }
        }
        t.build()
    }

    /// `Σ_q weight_q · f(e_q)`.
    pub fn integrate_strain_scalar<F>(&self, u: &[f64], mut f: F) -> f64
    where
        F: FnMut(&[f64; 3]) -> f64,
    {
        (0..self.qp_weight.len())
            .map(|q| self.qp_weight[q] * f(&self.strain_at(u, q)))
            .sum()
    }

    /// Load vector `∫ f·v`.
    pub fn load_vector(&self, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free()];
        for q in 0..self.qp_weight.len() {
            let x = self.qp_pos[q];
            let fv = f(x[0], x[1]);
            if fv == [0.0, 0.0] {
                continue;
            }
            let w = self.qp_weight[q];
            for (d, v) in self.elem_dofs[q / self.nq].iter().zip(&self.value[q]) {
                out[*d] += w * (fv[0] * v[0] + fv[1] * v[1]);
            }
        }
        out
    }

    pub fn inner_v(&self, a: &[f64], b: &[f64]) -> f64 {
        self.gram_v.bilinear(a, b)
    }

    pub fn norm_v(&self, u: &[f64]) -> f64 {
        self.inner_v(u, u).max(0.0).sqrt()
    }

    pub fn norm_x(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(&self.gram_x)
            .map(|(a, g)| g * a * a)
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self, u: &[f64]) -> Vec<f64> {
        self.m.mul_vec(u)
    }

    /// `Mᵀ·gram_X·w`, the functional `v ↦ ⟨w, Mv⟩_X`.
    pub fn trace_adjoint(&self, w: &[f64]) -> Vec<f64> {
        let gw: Vec<f64> = w.iter().zip(&self.gram_x).map(|(a, g)| a * g).collect();
        self.m.tr_mul_vec(&gw)
    }

    /// `‖f‖_{V*} = sup_{v ∈ V} ⟨f, v⟩ / ‖v‖_V` over discretely divergence-free `v`.
    pub fn dual_norm(&self, f: &[f64]) -> Result<f64> {
        let (y, _) = self.solver.solve(f, None)?;
        Ok(self.norm_v(&y))
    }

    /// Riesz representative of `f` in the divergence-free subspace.
    pub fn riesz(&self, f: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solver.solve(f, None)?.0)
    }

    /// `V`-orthogonal projection onto the divergence-free subspace.
    pub fn project_div_free(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.riesz(&self.gram_v.mul_vec(u))
    }

    pub fn div_residual(&self, u: &[f64]) -> f64 {
        crate::linalg::norm2(&self.b.mul_vec(u))
    }

    /// Largest ratio `‖Mv‖_X / ‖v‖_V` over divergence-free `v`, by power
    /// iteration on `G⁻¹ Mᵀ W M` restricted to `ker B`.
    pub fn estimate_trace_norm(&self) -> Result<f64> {
        self.estimate_trace_norm_with(1e-12, 50_000)
    }

    pub fn estimate_trace_norm_with(&self, rel_tol: f64, max_iter: usize) -> Result<f64> {
        if self.n_trace() == 0 || self.m.nnz() == 0 {
            return Ok(0.0);
        }
        let mut r = rng(0x7ace);
        let start: Vec<f64> = (0..self.n_trace()).map(|_| r.gen_range(0.5..1.5)).collect();
        let mut x = self.riesz(&self.trace_adjoint(&start))?;
        let nx = self.norm_v(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut lambda = 0.0;
        for _ in 0..max_iter {
            let t = self.trace_adjoint(&self.trace(&x));
            let next = dot(&x, &t);
            let mut y = self.riesz(&t)?;
            let ny = self.norm_v(&y);
            if ny == 0.0 {
                return Ok(0.0);
            }
            y.iter_mut().for_each(|v| *v /= ny);
            x = y;
            if (next - lambda).abs() <= rel_tol * next.abs() {
                return Ok(next.sqrt());
            }
            lambda = next;
        }
        Err(Error::NonConvergence {
            iterations: max_iter,
            residual: lambda,
            best: x,
            history: Vec::new(),
        })
    }

    /// Velocity `L²` error against an exact field, integrated with the
    /// degree-5 rule independently of the assembly rule.
    pub fn l2_error(&self, u: &[f64], exact: &dyn Fn(f64, f64) -> [f64; 2]) -> f64 {
        let rule = TriangleRule::with_degree(5).expect("degree 5 rule");
        let nodal = self.space.nodal_velocity(u);
        let mut err = 0.0;
        for el in &self.space.elements {
            let p: Vec<[f64; 2]> = (0..3).map(|i| self.space.nodes[el[i]]).collect();
            let j = [
                [p[1][0] - p[0][0], p[2][0] - p[0][0]],
                [p[1][1] - p[0][1], p[2][1] - p[0][1]],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            for &(xi, eta, w) in &rule.points {
                let (nv, _) = p2_shape(xi, eta);
                let mut uh = [0.0; 2];
                for a in 0..6 {
                    uh[0] += nv[a] * nodal[el[a]][0];
                    uh[1] += nv[a] * nodal[el[a]][1];
                }
                let x = p[0][0] + j[0][0] * xi + j[0][1] * eta;
                let y = p[0][1] + j[1][0] * xi + j[1][1] * eta;
                let ue = exact(x, y);
                err += w * det * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
            }
        }
        err.sqrt()
    }

    /// Mean `‖𝔻u‖` per mesh triangle.
    pub fn cell_strain_norm(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n_elements())
            .map(|el| {
                let qs = el * self.nq..(el + 1) * self.nq;
                let wsum: f64 = qs.clone().map(|q| self.qp_weight[q]).sum();
                qs.map(|q| self.qp_weight[q] * voigt_norm(&self.strain_at(u, q)))
                    .sum::<f64>()
                    / wsum
            })
            .collect()
    }

    /// VTK legacy ASCII dump on quadratic triangles with nodal velocity and
    /// per-cell strain-rate norm.
    pub fn to_vtk(&self, u: &[f64], title: &str) -> String {
        let nodal = self.space.nodal_velocity(u);
        let strain = self.cell_strain_norm(u);
        let nn = self.space.n_nodes();
        let ne = self.n_elements();
        let mut s = String::new();
        writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
        writeln!(s, "POINTS {nn} double").unwrap();
        for p in &self.space.nodes {
            writeln!(s, "{:?} {:?} 0", p[0], p[1]).unwrap();
        }
        writeln!(s, "CELLS {ne} {}", 7 * ne).unwrap();
        for el in &self.space.elements {
            writeln!(s, "6 {} {} {} {} {} {}", el[0], el[1], el[2], el[3], el[4], el[5]).unwrap();
        }
        writeln!(s, "CELL_TYPES {ne}").unwrap();
        for _ in 0..ne {
            s.push_str("22\n");
        }
        writeln!(s, "POINT_DATA {nn}\nVECTORS velocity double").unwrap();
        for v in &nodal {
            writeln!(s, "{:?} {:?} 0", v[0], v[1]).unwrap();
        }
        writeln!(s, "CELL_DATA {ne}\nSCALARS strain_rate_norm double 1\nLOOKUP_TABLE default").unwrap();
        for v in &strain {
            writeln!(s, "{v:?}").unwrap();
        }
        s
    }
}

/// Operators of the flow problem on a fixed discretization.
#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    pub disc: Arc<Discretization>,
    pub law: ConstitutiveLaw,
    pub f1: Vec<f64>,
    pub yield_stress: f64,
    pub slip: SlipModel,
    pub constraints: ConstraintFunctionals,
    rho_qp: Vec<f64>,
}

impl Deref for DiscreteProblem {
    type Target = Discretization;
    fn deref(&self) -> &Discretization {
        &self.disc
    }
}

impl DiscreteProblem {
    pub fn assemble(
        disc: Arc<Discretization>,
        law: ConstitutiveLaw,
        body_force: &dyn Fn(f64, f64) -> [f64; 2],
        slip: SlipModel,
        yield_stress: f64,
        constraints: ConstraintFunctionals,
    ) -> Result<Self> {
        if !(yield_stress >= 0.0 && yield_stress.is_finite()) {
            return Err(Error::Parameter(format!(
                "yield stress must be nonnegative, got {yield_stress}"
            )));
        }
        let f1 = disc.load_vector(body_force);
        if f1.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("body force is not finite on the mesh".into()));
        }
        let rho_qp = match &constraints.r {
            RKind::AffineL1 { rho, .. } => {
                let v: Vec<f64> = disc.qp_pos.iter().map(|x| rho(x[0], x[1])).collect();
                if v.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
                    return Err(Error::Parameter("rho must be finite and nonnegative".into()));
                }
                v
            }
            RKind::Constant(_) => Vec::new(),
        };
        Ok(Self {
            disc,
            law,
            f1,
            yield_stress,
            slip,
            constraints,
            rho_qp,
        })
    }

    pub fn with_yield_stress(&self, g: f64) -> Self {
        Self {
            yield_stress: g,
            ..self.clone()
        }
    }

    pub fn with_load(&self, f1: Vec<f64>) -> Self {
        assert_eq!(f1.len(), self.n_free());
        Self { f1, ..self.clone() }
    }

    pub fn convex_spec(&self) -> ConvexPotentialSpec {
        ConvexPotentialSpec::bingham(self.yield_stress, self.area)
            .unwrap_or_else(|_| ConvexPotentialSpec::zero())
    }

    /// `A(u)` as a vector of free-dof functionals.
    pub fn apply_a(&self, u: &[f64]) -> Vec<f64> {
        if self.law.is_linear() {
            let mu = self.law.viscosity(0.0);
            return self.gram_v.mul_vec(u).into_iter().map(|v| mu * v).collect();
        }
        self.integrate_strain_dual(u, |e| self.law.stress_voigt(e))
    }

    pub fn jacobian_a(&self, u: &[f64]) -> SparseMatrix {
        if self.law.is_linear() {
            return self.gram_v.scaled(self.law.viscosity(0.0));
        }
        self.integrate_strain_tangent(u, |e| self.law.tangent_voigt(e))
    }

    /// Potential of `A`: `Σ_q w_q Ψ(‖e_q‖)` with `Ψ' (s) = μ(s) s`.
    pub fn energy_a(&self, u: &[f64]) -> f64 {
        if self.law.is_linear() {
            return 0.5 * self.law.viscosity(0.0) * self.inner_v(u, u);
        }
        self.integrate_strain_scalar(u, |e| self.law.energy_density(voigt_norm(e)))
    }

    /// `φ(v) = g ∫ ‖𝔻v‖`.
    pub fn eval_phi(&self, u: &[f64]) -> f64 {
        if self.yield_stress == 0.0 {
            return 0.0;
        }
        self.yield_stress * self.integrate_strain_scalar(u, voigt_norm)
    }

    /// Value and gradient of `g ∫ (√(‖𝔻v‖² + ε²) − ε)`.
    pub fn eval_phi_smoothed(&self, u: &[f64], eps: f64) -> (f64, Vec<f64>) {
        let g = self.yield_stress;
        if g == 0.0 {
            return (0.0, vec![0.0; self.n_free()]);
        }
        let value = g * self.integrate_strain_scalar(u, |e| (dot(e, e) + eps * eps).sqrt() - eps);
        let grad = self.integrate_strain_dual(u, |e| {
            let s = (dot(e, e) + eps * eps).sqrt();
            [g * e[0] / s, g * e[1] / s, g * e[2] / s]
        });
        (value, grad)
    }

    /// Hessian of `Ψ`-energy plus smoothed `φ`.
    pub fn hessian(&self, u: &[f64], eps: f64) -> SparseMatrix {
        let g = self.yield_stress;
        if g == 0.0 {
            return self.jacobian_a(u);
        }
        self.integrate_strain_tangent(u, |e| {
            let mut c = self.law.tangent_voigt(e);
            let s2 = dot(e, e) + eps * eps;
            let s = s2.sqrt();
            for i in 0..3 {
                for j in 0..3 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    c[i][j] += g * (delta / s - e[i] * e[j] / (s2 * s));
                }
            }
            c
        })
    }

    pub fn eval_k(&self, u: &[f64]) -> f64 {
        self.constraints.k_of_norm(self.norm_v(u))
    }

    pub fn eval_r(&self, u: &[f64]) -> f64 {
        match &self.constraints.r {
            RKind::Constant(c) => *c,
            RKind::AffineL1 { alpha, .. } => {
                alpha
                    + (0..self.qp_weight.len())
                        .filter(|&q| self.rho_qp[q] != 0.0)
                        .map(|q| {
                            let v = self.velocity_at(u, q);
                            self.qp_weight[q] * v[0].hypot(v[1]) * self.rho_qp[q]
                        })
                        .sum::<f64>()
            }
        }
    }

    /// Pointwise slip traction `h(u_τ)·ζ(u_τ)` at the slip-wall quadrature
    /// points, stored as tangential components.
    pub fn slip_traction(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.trace(u)
            .iter()
            .zip(&self.x_tangent)
            .map(|(s, t)| {
                let z = self.slip.traction([s * t[0], s * t[1]])?;
                Ok(z[0] * t[0] + z[1] * t[1])
            })
            .collect()
    }
}
