//! Taylor–Hood P2/P1 dof layout with strong wall conditions.
//!
//! P2 nodes are the mesh vertices followed by one midpoint per edge. Each
//! velocity node carries a local frame; its velocity is `Σ_k q_k·frame[k]`
//! over the free slots. Nodes on the no-slip wall have no free slot, slip
//! wall nodes keep only the tangential slot, and a slip-wall corner is fixed.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::{tangent_of, BoundaryTag, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Slip,
    Fixed,
}

#[derive(Clone, Debug)]
pub struct VelocitySpace {
    pub mesh: Mesh,
    /// Coordinates of all P2 nodes.
    pub nodes: Vec<[f64; 2]>,
    /// Per element: three vertices then midpoints of edges (0,1), (1,2), (2,0).
    pub elements: Vec<[usize; 6]>,
    pub kinds: Vec<NodeKind>,
    pub frames: Vec<[[f64; 2]; 2]>,
    pub dofs: Vec<[Option<usize>; 2]>,
    pub n_free: usize,
    /// Pressure row per mesh vertex; the pinned vertex has `None`.
    pub pressure_index: Vec<Option<usize>>,
    pub n_pressure: usize,
    /// Midpoint node of each undirected mesh edge.
    pub edge_midpoint: BTreeMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl VelocitySpace {
    pub fn build(mesh: &Mesh) -> Result<Self> {
        if !mesh.boundary_edges.iter().any(|e| e.tag == BoundaryTag::Gamma0) {
            return Err(Error::InvalidDomain(
                "no-slip boundary part is empty; the energy seminorm would not be a norm".into(),
            ));
        }
        let nv = mesh.nodes.len();
        let mut nodes = mesh.nodes.clone();
        let mut edge_midpoint = BTreeMap::new();
        for tri in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_midpoint.entry(key(a, b)).or_insert(usize::MAX);
            }
        }
        for (i, (&(a, b), mid)) in edge_midpoint.iter_mut().enumerate() {
            *mid = nv + i;
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
        let elements = mesh
            .triangles
            .iter()
            .map(|t| {
                [
                    t[0],
                    t[1],
                    t[2],
                    edge_midpoint[&key(t[0], t[1])],
                    edge_midpoint[&key(t[1], t[2])],
                    edge_midpoint[&key(t[2], t[0])],
                ]
            })
            .collect();

        let n = nodes.len();
        let mut kinds = vec![NodeKind::Interior; n];
        let mut frames = vec![[[1.0, 0.0], [0.0, 1.0]]; n];
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Gamma0) {
            let [a, b] = e.nodes;
            for v in [a, b, edge_midpoint[&key(a, b)]] {
                kinds[v] = NodeKind::Fixed;
            }
        }
        let bf = mesh.boundary_frames();
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Gamma1) {
            let [a, b] = e.nodes;
            let mid = edge_midpoint[&key(a, b)];
            let nrm = mesh.edge_normal(e);
            kinds[mid] = NodeKind::Slip;
            frames[mid] = [tangent_of(nrm), nrm];
            for v in [a, b] {
                if kinds[v] == NodeKind::Fixed {
                    continue;
                }
                let f = bf.get(v).expect("slip vertex has a frame");
                if f.corner {
                    kinds[v] = NodeKind::Fixed;
                } else {
                    kinds[v] = NodeKind::Slip;
                    frames[v] = [f.tangent, f.normal];
                }
            }
        }
        let mut n_free = 0;
        let dofs = kinds
            .iter()
            .map(|k| {
                let mut next = || {
                    n_free += 1;
                    Some(n_free - 1)
                };
                match k {
                    NodeKind::Interior => [next(), next()],
                    NodeKind::Slip => [next(), None],
                    NodeKind::Fixed => [None, None],
                }
            })
            .collect();
        let pressure_index = (0..nv).map(|v| v.checked_sub(1)).collect();
        Ok(Self {
            mesh: mesh.clone(),
            nodes,
            elements,
            kinds,
            frames,
            dofs,
            n_free,
            pressure_index,
            n_pressure: nv - 1,
            edge_midpoint,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn midpoint(&self, a: usize, b: usize) -> usize {
        self.edge_midpoint[&key(a, b)]
    }

    /// Cartesian velocity at every P2 node.
    pub fn nodal_velocity(&self, u: &[f64]) -> Vec<[f64; 2]> {
        assert_eq!(u.len(), self.n_free);
        self.dofs
            .iter()
            .zip(&self.frames)
            .map(|(d, f)| {
                let mut v = [0.0, 0.0];
                for k in 0..2 {
                    if let Some(i) = d[k] {
                        v[0] += u[i] * f[k][0];
                        v[1] += u[i] * f[k][1];
                    }
                }
                v
            })
            .collect()
    }

    /// Free-dof coefficients of the nodal interpolant of `field`; components
    /// along constrained frame directions are dropped.
    pub fn interpolate(&self, field: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        let mut u = vec![0.0; self.n_free];
        for (i, p) in self.nodes.iter().enumerate() {
            let v = field(p[0], p[1]);
            for k in 0..2 {
                if let Some(d) = self.dofs[i][k] {
                    let f = self.frames[i][k];
                    u[d] = v[0] * f[0] + v[1] * f[1];
                }
            }
        }
        u
    }
}

/// P2 shape functions and reference gradients at `(ξ, η)`, ordered as
/// [`VelocitySpace::elements`].
pub fn p2_shape(xi: f64, eta: f64) -> ([f64; 6], [[f64; 2]; 6]) {
    let l = [1.0 - xi - eta, xi, eta];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut n = [0.0; 6];
    let mut g = [[0.0; 2]; 6];
    for i in 0..3 {
        n[i] = l[i] * (2.0 * l[i] - 1.0);
        for c in 0..2 {
            g[i][c] = (4.0 * l[i] - 1.0) * dl[i][c];
        }
    }
    for (m, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        n[3 + m] = 4.0 * l[i] * l[j];
        for c in 0..2 {
            g[3 + m][c] = 4.0 * (dl[i][c] * l[j] + l[i] * dl[j][c]);
        }
    }
    (n, g)
}

/// P1 shape functions at `(ξ, η)`.
pub fn p1_shape(xi: f64, eta: f64) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

/// Quadratic Lagrange basis on `[0, 1]` with nodes `0, 1/2, 1`, returned in
/// the order (start, end, middle).
pub fn p2_edge_shape(t: f64) -> [f64; 3] {
    [
        (1.0 - t) * (1.0 - 2.0 * t),
        t * (2.0 * t - 1.0),
        4.0 * t * (1.0 - t),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Side;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_cell_dof_count() {
        let m = Mesh::generate_rectangle(1.0, 1.0, 1, 1, &[Side::Bottom]).unwrap();
        let s = VelocitySpace::build(&m).unwrap();
        assert_eq!(s.n_nodes(), 13);
        // 5 interior P2 nodes with 2 dofs, the bottom midpoint with 1
        assert_eq!(s.n_free, 11);
        assert_eq!(s.n_pressure, 4);
        let bottom_mid = s.midpoint(0, 1);
        assert_eq!(s.kinds[bottom_mid], NodeKind::Slip);
        assert_eq!(s.frames[bottom_mid][0], [-1.0, 0.0]);
    }

    #[test]
    fn refinement_adds_dofs() {
        let mut last = 0;
        for n in [1, 2, 4] {
            let m = Mesh::generate_rectangle(2.0, 1.0, 2 * n, n, &[Side::Bottom]).unwrap();
            let s = VelocitySpace::build(&m).unwrap();
            assert!(s.n_free > last);
            last = s.n_free;
        }
    }

    #[test]
    fn slip_corners_are_fixed() {
        let m = Mesh::generate_rectangle(1.0, 1.0, 2, 2, &[Side::Bottom, Side::Right]).unwrap();
        let s = VelocitySpace::build(&m).unwrap();
        // (1, 0) joins two slip sides
        assert_eq!(s.kinds[2], NodeKind::Fixed);
        assert_eq!(s.kinds[1], NodeKind::Slip);
        assert_eq!(s.kinds[5], NodeKind::Slip);
    }

    #[test]
    fn shape_functions_partition_unity() {
        for &(x, y) in &[(0.1, 0.2), (0.3, 0.3), (0.0, 1.0)] {
            let (n, g) = p2_shape(x, y);
            assert_abs_diff_eq!(n.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
            for c in 0..2 {
                assert_abs_diff_eq!(g.iter().map(|v| v[c]).sum::<f64>(), 0.0, epsilon = 1e-14);
            }
        }
        let e = p2_edge_shape(0.3);
        assert_abs_diff_eq!(e.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn interpolation_round_trips_through_nodal_values() {
        let m = Mesh::generate_rectangle(1.0, 1.0, 2, 2, &[Side::Bottom]).unwrap();
        let s = VelocitySpace::build(&m).unwrap();
        let u: Vec<f64> = (0..s.n_free).map(|i| (i as f64).sin()).collect();
        let nodal = s.nodal_velocity(&u);
        let back = s.interpolate(|x, y| {
            let i = s
                .nodes
                .iter()
                .position(|p| p[0] == x && p[1] == y)
                .unwrap();
            nodal[i]
        });
        for (a, b) in u.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }
}
