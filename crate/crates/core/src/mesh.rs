//! Triangular meshes of planar domains with boundary tagging.
//!
//! The boundary is split into `Gamma0` (no-slip wall) and `Gamma1`
//! (impermeable slip wall). Tangents are the outward normal rotated by −90°,
//! i.e. `τ = (ν_y, −ν_x)`.
//!
//! ASCII file layout, one record per line (`#` starts a comment):
//!
//! ```text
//! NODES <n>
//! <x> <y>
//! TRIANGLES <m>
//! <a> <b> <c>
//! BOUNDARY <k>
//! <a> <b> <gamma0|gamma1>
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    Gamma0,
    Gamma1,
}

impl BoundaryTag {
    fn as_str(self) -> &'static str {
        match self {
            Self::Gamma0 => "gamma0",
            Self::Gamma1 => "gamma1",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bottom" => Ok(Self::Bottom),
            "top" => Ok(Self::Top),
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            other => Err(Error::Parameter(format!("unknown side '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// Unit outward normal and tangent at a boundary node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    /// The adjacent slip edges are not collinear.
    pub corner: bool,
}

/// Frames at every node touched by a `Gamma1` edge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryFrames {
    pub frames: BTreeMap<usize, Frame>,
}

impl BoundaryFrames {
    pub fn get(&self, node: usize) -> Option<&Frame> {
        self.frames.get(&node)
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn tangent_of(normal: [f64; 2]) -> [f64; 2] {
    [normal[1], -normal[0]]
}

impl Mesh {
    /// Builds a mesh and checks all invariants.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let m = Self {
            nodes,
            triangles,
            boundary_edges,
        };
        m.validate()?;
        Ok(m)
    }

    /// Structured crossed-triangle mesh of `[0, lx] × [0, ly]`: every cell is
    /// split into four triangles through an added center node.
    pub fn generate_rectangle(
        lx: f64,
        ly: f64,
        nx: usize,
        ny: usize,
        gamma1_sides: &[Side],
    ) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::Parameter("rectangle sides must be positive".into()));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::Parameter("nx and ny must be at least 1".into()));
        }
        let all = [Side::Bottom, Side::Top, Side::Left, Side::Right];
        if all.iter().all(|s| gamma1_sides.contains(s)) {
            return Err(Error::InvalidDomain(
                "no-slip part of the boundary would be empty".into(),
            ));
        }
        let corner = |i: usize, j: usize| j * (nx + 1) + i;
        let center = |i: usize, j: usize| (nx + 1) * (ny + 1) + j * nx + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                nodes.push([
                    lx * (i as f64 + 0.5) / nx as f64,
                    ly * (j as f64 + 0.5) / ny as f64,
                ]);
            }
        }
        let mut triangles = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (
                    corner(i, j),
                    corner(i + 1, j),
                    corner(i + 1, j + 1),
                    corner(i, j + 1),
                );
                let m = center(i, j);
                triangles.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
            }
        }
        let tag = |s: Side| {
            if gamma1_sides.contains(&s) {
                BoundaryTag::Gamma1
            } else {
                BoundaryTag::Gamma0
            }
        };
        let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary_edges.push(BoundaryEdge {
                nodes: [corner(i, 0), corner(i + 1, 0)],
                tag: tag(Side::Bottom),
            });
        }
        for j in 0..ny {
            boundary_edges.push(BoundaryEdge {
                nodes: [corner(nx, j), corner(nx, j + 1)],
                tag: tag(Side::Right),
            });
        }
        for i in (0..nx).rev() {
            boundary_edges.push(BoundaryEdge {
                nodes: [corner(i + 1, ny), corner(i, ny)],
                tag: tag(Side::Top),
            });
        }
        for j in (0..ny).rev() {
            boundary_edges.push(BoundaryEdge {
                nodes: [corner(0, j + 1), corner(0, j)],
                tag: tag(Side::Left),
            });
        }
        Self::new(nodes, triangles, boundary_edges)
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let (p, q) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.edge_length(e))
            .sum()
    }

    /// Maximum triangle diameter.
    pub fn mesh_size(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let d = |a: usize, b: usize| {
                    let (p, q) = (self.nodes[a], self.nodes[b]);
                    (q[0] - p[0]).hypot(q[1] - p[1])
                };
                d(t[0], t[1]).max(d(t[1], t[2])).max(d(t[2], t[0]))
            })
            .fold(0.0, f64::max)
    }

    /// Map from undirected edge to the triangles containing it (in order).
    pub fn edge_triangles(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Validation("non-finite node coordinate".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Validation(format!(
                    "triangle {t} references a node out of range"
                )));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::Validation(format!(
                    "triangle {t} {tri:?} is not counterclockwise (signed area {:e})",
                    self.signed_area(t)
                )));
            }
        }
        let edges = self.edge_triangles();
        if let Some((e, ts)) = edges.iter().find(|(_, ts)| ts.len() > 2) {
            return Err(Error::Validation(format!(
                "edge {e:?} is shared by {} triangles",
                ts.len()
            )));
        }
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for (i, be) in self.boundary_edges.iter().enumerate() {
            let [a, b] = be.nodes;
            if a >= n || b >= n || a == b {
                return Err(Error::Validation(format!("boundary edge {i} is malformed")));
            }
            let key = edge_key(a, b);
            if tagged.insert(key, be.tag).is_some() {
                return Err(Error::Validation(format!(
                    "boundary edge {key:?} is listed twice"
                )));
            }
            match edges.get(&key) {
                Some(ts) if ts.len() == 1 => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "boundary edge {key:?} is not on the mesh boundary"
                    )))
                }
            }
        }
        if let Some((e, _)) = edges
            .iter()
            .find(|(e, ts)| ts.len() == 1 && !tagged.contains_key(e))
        {
            return Err(Error::Validation(format!("boundary edge {e:?} is untagged")));
        }
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for be in &self.boundary_edges {
            *degree.entry(be.nodes[0]).or_default() += 1;
            *degree.entry(be.nodes[1]).or_default() += 1;
        }
        if let Some((v, d)) = degree.iter().find(|(_, &d)| d != 2) {
            return Err(Error::Validation(format!(
                "boundary node {v} has {d} boundary edges; loops must be closed and simple"
            )));
        }
        if !self.boundary_edges.iter().any(|e| e.tag == BoundaryTag::Gamma0) {
            return Err(Error::InvalidDomain(
                "the no-slip boundary part is empty".into(),
            ));
        }
        Ok(())
    }

    /// Outward unit normal of a boundary edge, from its owning triangle.
    pub fn edge_normal(&self, e: &BoundaryEdge) -> [f64; 2] {
        let [a, b] = e.nodes;
        let (p, q) = (self.nodes[a], self.nodes[b]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        let mut nrm = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
        // flip if the opposite vertex of the owning triangle lies outside
        if let Some(tri) = self
            .triangles
            .iter()
            .find(|t| t.contains(&a) && t.contains(&b))
        {
            let c = tri.iter().copied().find(|&v| v != a && v != b).unwrap();
            let r = self.nodes[c];
            if (r[0] - p[0]) * nrm[0] + (r[1] - p[1]) * nrm[1] > 0.0 {
                nrm = [-nrm[0], -nrm[1]];
            }
        }
        nrm
    }

    /// Normals and tangents at slip-wall nodes; at a node joining two
    /// non-collinear slip edges the normal is their normalized average.
    pub fn boundary_frames(&self) -> BoundaryFrames {
        let mut normals: BTreeMap<usize, Vec<[f64; 2]>> = BTreeMap::new();
        for e in self.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Gamma1) {
            let nrm = self.edge_normal(e);
            for v in e.nodes {
                normals.entry(v).or_default().push(nrm);
            }
        }
        let frames = normals
            .into_iter()
            .map(|(v, ns)| {
                let sum = ns.iter().fold([0.0, 0.0], |s, n| [s[0] + n[0], s[1] + n[1]]);
                let len = sum[0].hypot(sum[1]);
                let normal = [sum[0] / len, sum[1] / len];
                let corner = ns
                    .iter()
                    .any(|n| (n[0] * ns[0][0] + n[1] * ns[0][1]) < 1.0 - 1e-12);
                (
                    v,
                    Frame {
                        normal,
                        tangent: tangent_of(normal),
                        corner,
                    },
                )
            })
            .collect();
        BoundaryFrames { frames }
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        writeln!(s, "NODES {}", self.nodes.len()).unwrap();
        for p in &self.nodes {
            writeln!(s, "{:?} {:?}", p[0], p[1]).unwrap();
        }
        writeln!(s, "TRIANGLES {}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "BOUNDARY {}", self.boundary_edges.len()).unwrap();
        for e in &self.boundary_edges {
            writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.as_str()).unwrap();
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_ascii())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut r = Reader {
            path,
            lines: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty())
                .collect::<Vec<_>>()
                .into_iter(),
        };
        let n_nodes = r.header("NODES")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let (ln, f) = r.record(2, "node record needs 2 coordinates")?;
            let x: f64 = r.parse_field(ln, f[0], "number")?;
            let y: f64 = r.parse_field(ln, f[1], "number")?;
            nodes.push([x, y]);
        }
        let n_tri = r.header("TRIANGLES")?;
        let mut triangles = Vec::with_capacity(n_tri);
        for _ in 0..n_tri {
            let (ln, f) = r.record(3, "triangle record needs 3 indices")?;
            triangles.push([
                r.parse_field(ln, f[0], "index")?,
                r.parse_field(ln, f[1], "index")?,
                r.parse_field(ln, f[2], "index")?,
            ]);
        }
        let n_b = r.header("BOUNDARY")?;
        let mut boundary_edges = Vec::with_capacity(n_b);
        for _ in 0..n_b {
            let (ln, f) = r.record(3, "boundary record needs 2 indices and a tag")?;
            let a = r.parse_field(ln, f[0], "index")?;
            let b = r.parse_field(ln, f[1], "index")?;
            let tag = match f[2].to_ascii_lowercase().as_str() {
                "gamma0" | "0" => BoundaryTag::Gamma0,
                "gamma1" | "1" => BoundaryTag::Gamma1,
                other => return Err(r.err(ln, format!("unknown boundary tag '{other}'"))),
            };
            boundary_edges.push(BoundaryEdge { nodes: [a, b], tag });
        }
        if let Some((ln, _)) = r.lines.next() {
            return Err(r.err(ln, "trailing content after BOUNDARY section".into()));
        }
        Self::new(nodes, triangles, boundary_edges)
    }

    /// VTK legacy ASCII unstructured grid with a cell tag array
    /// (boundary edges are written as line cells with tag 0/1, triangles as -1).
    pub fn to_vtk(&self) -> String {
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\nqvhi mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
        writeln!(s, "POINTS {} double", self.nodes.len()).unwrap();
        for p in &self.nodes {
            writeln!(s, "{:?} {:?} 0", p[0], p[1]).unwrap();
        }
        let nt = self.triangles.len();
        let nb = self.boundary_edges.len();
        writeln!(s, "CELLS {} {}", nt + nb, 4 * nt + 3 * nb).unwrap();
        for t in &self.triangles {
            writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
        }
        for e in &self.boundary_edges {
            writeln!(s, "2 {} {}", e.nodes[0], e.nodes[1]).unwrap();
        }
        writeln!(s, "CELL_TYPES {}", nt + nb).unwrap();
        for _ in 0..nt {
            s.push_str("5\n");
        }
        for _ in 0..nb {
            s.push_str("3\n");
        }
        writeln!(s, "CELL_DATA {}\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default", nt + nb).unwrap();
        for _ in 0..nt {
            s.push_str("-1\n");
        }
        for e in &self.boundary_edges {
            writeln!(s, "{}", e.tag as i32).unwrap();
        }
        s
    }
}

struct Reader<'a> {
    path: &'a Path,
    lines: std::vec::IntoIter<(usize, &'a str)>,
}

impl<'a> Reader<'a> {
    fn err(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message,
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .ok_or_else(|| self.err(0, "unexpected end of file".into()))
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let (ln, l) = self.next_line()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(self.err(ln, format!("expected '{name} <count>'")));
        }
        it.next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| self.err(ln, format!("bad {name} count")))
    }

    fn record(&mut self, arity: usize, msg: &str) -> Result<(usize, Vec<&'a str>)> {
        let (ln, l) = self.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != arity {
            return Err(self.err(ln, msg.into()));
        }
        Ok((ln, f))
    }

    fn parse_field<T: std::str::FromStr>(&self, ln: usize, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(ln, format!("bad {what} '{s}'")))
    }
}
