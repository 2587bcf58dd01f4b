//! Conforming triangulations of polygonal domains.
//!
//! A [`Mesh`] is immutable once built. Construction normalises every triangle to
//! counterclockwise orientation, derives the edge list with adjacency, flags the
//! boundary and precomputes the counterclockwise vertex patches.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative area threshold: a triangle is degenerate when `area < DEGENERACY_TOL * h_K^2`.
pub const DEGENERACY_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("non-conforming triangulation: {0}")]
    NonConforming(String),
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("vertex index {index} out of range (mesh has {len} vertices)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("parameter {name} = {value} outside of {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("mesh file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Vertex ids of a triangle, counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    pub vertices: [usize; 3],
}

/// An edge stored as a sorted vertex pair. `triangles[0]` is the lower triangle id; the
/// edge normal points out of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub triangles: [usize; 2],
    pub is_boundary: bool,
}

impl Edge {
    /// The second adjacent triangle, if the edge is interior.
    pub fn neighbour(&self) -> Option<usize> {
        (!self.is_boundary).then_some(self.triangles[1])
    }
}

/// Counterclockwise triangle fan around a vertex `z`.
///
/// For an interior vertex, `edges[j]` is the far endpoint of `E_j = K_{j-1} ∩ K_j`
/// (cyclically). For a boundary vertex `edges` has `N_z + 1` entries: `edges[0]` and
/// `edges[N_z]` are the boundary edges, `edges[j]` is shared by `K_{j-1}` and `K_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPatch {
    pub center: usize,
    pub triangles: Vec<usize>,
    /// Angle at `z` in each triangle, in radians.
    pub angles: Vec<f64>,
    /// `(sin θ_j, cos θ_j)` from normalised cross and dot products.
    pub sin_cos: Vec<(f64, f64)>,
    pub edges: Vec<usize>,
    pub is_boundary: bool,
}

impl VertexPatch {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn angle_sum(&self) -> f64 {
        self.angles.iter().sum()
    }

    /// Position (0-based) of triangle `t` in the fan.
    pub fn position(&self, t: usize) -> Option<usize> {
        self.triangles.iter().position(|&s| s == t)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    /// Local edge `i` of a triangle is opposite local vertex `i`.
    triangle_edges: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    patches: Vec<VertexPatch>,
}

fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * b.sub(a).cross(c.sub(a))
}

fn on_open_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let ap = p.sub(a);
    let t = ap.dot(ab) / len2;
    if t <= 1e-12 || t >= 1.0 - 1e-12 {
        return false;
    }
    ab.cross(ap).abs() <= 1e-12 * len2
}

impl Mesh {
    /// Validates and builds a mesh. Triangles given clockwise are reoriented.
    pub fn new(vertices: Vec<Point2>, triangles: &[[usize; 3]]) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (i, p) in vertices.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(MeshError::Parse {
                    line: i,
                    msg: format!("vertex {i} has non-finite coordinates"),
                });
            }
        }
        let mut tris = Vec::with_capacity(triangles.len());
        for (t, &[a, b, c]) in triangles.iter().enumerate() {
            for idx in [a, b, c] {
                if idx >= nv {
                    return Err(MeshError::IndexOutOfRange { index: idx, len: nv });
                }
            }
            if a == b || b == c || a == c {
                return Err(MeshError::DegenerateTriangle { triangle: t, area: 0.0 });
            }
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            let area = signed_area(pa, pb, pc);
            let h = pa.dist(pb).max(pb.dist(pc)).max(pc.dist(pa));
            if area.abs() < DEGENERACY_TOL * h * h {
                return Err(MeshError::DegenerateTriangle {
                    triangle: t,
                    area: area.abs(),
                });
            }
            let v = if area > 0.0 { [a, b, c] } else { [a, c, b] };
            tris.push(Triangle { vertices: v });
        }

        // Each directed edge may appear once; an interior edge appears once in each direction.
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangle_edges = vec![[0usize; 3]; tris.len()];
        for (t, tri) in tris.iter().enumerate() {
            let v = tri.vertices;
            for i in 0..3 {
                let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                if directed.insert((a, b), t).is_some() {
                    return Err(MeshError::NonConforming(format!(
                        "edge ({a}, {b}) traversed twice in the same direction (overlap or inconsistent orientation)"
                    )));
                }
                let key = (a.min(b), a.max(b));
                let e = match edge_map.get(&key) {
                    Some(&e) => {
                        if !edges[e].is_boundary {
                            return Err(MeshError::NonConforming(format!(
                                "edge ({}, {}) shared by more than two triangles",
                                key.0, key.1
                            )));
                        }
                        edges[e].triangles[1] = t;
                        edges[e].is_boundary = false;
                        e
                    }
                    None => {
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            triangles: [t, t],
                            is_boundary: true,
                        });
                        edge_map.insert(key, edges.len() - 1);
                        edges.len() - 1
                    }
                };
                triangle_edges[t][i] = e;
            }
        }

        let mut boundary_vertex = vec![false; nv];
        for e in edges.iter().filter(|e| e.is_boundary) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }

        // Hanging nodes show up as vertices inside an edge that has only one neighbour.
        let mut used = vec![false; nv];
        for tri in &tris {
            for &v in &tri.vertices {
                used[v] = true;
            }
        }
        for e in edges.iter().filter(|e| e.is_boundary) {
            let (a, b) = (vertices[e.vertices[0]], vertices[e.vertices[1]]);
            for (i, &p) in vertices.iter().enumerate() {
                if used[i] && i != e.vertices[0] && i != e.vertices[1] && on_open_segment(p, a, b) {
                    return Err(MeshError::NonConforming(format!(
                        "vertex {i} lies inside edge ({}, {}) (hanging node)",
                        e.vertices[0], e.vertices[1]
                    )));
                }
            }
        }

        let mut vertex_triangles: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (t, tri) in tris.iter().enumerate() {
            for &v in &tri.vertices {
                vertex_triangles[v].push(t);
            }
        }

        let mut patches = Vec::with_capacity(nv);
        for z in 0..nv {
            patches.push(build_patch(
                z,
                &vertices,
                &tris,
                &vertex_triangles[z],
                boundary_vertex[z],
            )?);
        }

        Ok(Self {
            vertices,
            triangles: tris,
            edges,
            triangle_edges,
            boundary_vertex,
            patches,
        })
    }

    /// Criss-cross triangulation of the unit square with the centre vertex moved to
    /// `(1/2 + eps, 1/2)`. The centre is vertex 4.
    pub fn criss_cross(eps: f64) -> Result<Self, MeshError> {
        if !(0.0..0.5).contains(&eps) {
            return Err(MeshError::OutOfRange {
                name: "eps",
                value: eps,
                range: "[0, 1/2)",
            });
        }
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5 + eps, 0.5),
        ];
        Self::new(v, &[[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    }

    /// Uniform red refinement: every triangle is split into four children through its
    /// edge midpoints. Existing vertices keep their ids; the midpoint of edge `e` gets id
    /// `num_vertices() + e`.
    pub fn red_refine(&self) -> Result<Self, MeshError> {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(
            self.edges
                .iter()
                .map(|e| self.vertices[e.vertices[0]].midpoint(self.vertices[e.vertices[1]])),
        );
        let mut tris = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [v0, v1, v2] = tri.vertices;
            let te = self.triangle_edges[t];
            let (m12, m20, m01) = (nv + te[0], nv + te[1], nv + te[2]);
            tris.push([v0, m01, m20]);
            tris.push([m01, v1, m12]);
            tris.push([m20, m12, v2]);
            tris.push([m01, m12, m20]);
        }
        Self::new(vertices, &tris)
    }

    /// Applies `levels` red refinements.
    pub fn refined(&self, levels: usize) -> Result<Self, MeshError> {
        let mut m = self.clone();
        for _ in 0..levels {
            m = m.red_refine()?;
        }
        Ok(m)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn boundary_edge_flags(&self) -> Vec<bool> {
        self.edges.iter().map(|e| e.is_boundary).collect()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary).count()
    }

    pub fn num_interior_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|b| !**b).count()
    }

    pub fn corners(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].vertices.map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    /// Diameter of the inscribed circle.
    pub fn inscribed_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        let s = 0.5 * (a.dist(b) + b.dist(c) + c.dist(a));
        2.0 * self.area(t) / s
    }

    /// Local index (0..3) of vertex `v` in triangle `t`.
    pub fn local_index(&self, t: usize, v: usize) -> Option<usize> {
        self.triangles[t].vertices.iter().position(|&w| w == v)
    }

    /// Unit normal of edge `e`, pointing out of `edges[e].triangles[0]`.
    pub fn edge_normal(&self, e: usize) -> Point2 {
        let edge = &self.edges[e];
        let (a, b) = (self.vertices[edge.vertices[0]], self.vertices[edge.vertices[1]]);
        let d = b.sub(a);
        let len = d.norm();
        let mut n = Point2::new(d.y / len, -d.x / len);
        let t = &self.triangles[edge.triangles[0]];
        let third = t
            .vertices
            .iter()
            .copied()
            .find(|v| !edge.vertices.contains(v))
            .expect("triangle has a vertex off the edge");
        if n.dot(self.vertices[third].sub(a)) > 0.0 {
            n = Point2::new(-n.x, -n.y);
        }
        n
    }

    pub fn vertex_patch(&self, z: usize) -> &VertexPatch {
        &self.patches[z]
    }

    pub fn patches(&self) -> &[VertexPatch] {
        &self.patches
    }

    /// `h_z`: the largest triangle diameter in the patch of `z`.
    pub fn patch_width(&self, z: usize) -> f64 {
        self.patches[z]
            .triangles
            .iter()
            .map(|&t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    /// Largest `h_K / ρ_K` over all triangles.
    pub fn shape_regularity(&self) -> Result<f64, MeshError> {
        let mut gamma: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let h = self.diameter(t);
            let rho = self.inscribed_diameter(t);
            if rho <= DEGENERACY_TOL * h {
                return Err(MeshError::DegenerateTriangle {
                    triangle: t,
                    area: self.area(t),
                });
            }
            gamma = gamma.max(h / rho);
        }
        Ok(gamma)
    }

    /// Smallest interior angle of any triangle.
    pub fn min_angle(&self) -> f64 {
        self.patches
            .iter()
            .flat_map(|p| p.angles.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Exterior angle `2π - Σθ_j` at a boundary vertex.
    pub fn outer_angle(&self, z: usize) -> Option<f64> {
        self.boundary_vertex[z].then(|| 2.0 * PI - self.patches[z].angle_sum())
    }

    /// Minimal outer angle over boundary vertices, `None` for a mesh without boundary.
    pub fn min_outer_angle(&self) -> Option<f64> {
        (0..self.vertices.len())
            .filter_map(|z| self.outer_angle(z))
            .reduce(f64::min)
    }

    /// Reads the text format: `nv nt`, `nv` lines `x y b`, `nt` lines `i j k`.
    /// The boundary flags are recomputed and must agree with the file.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self, MeshError> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let mut next = |what: &str| -> Result<(usize, Vec<String>), MeshError> {
            let (line, text) = lines.next().ok_or_else(|| MeshError::Parse {
                line: 0,
                msg: format!("unexpected end of file while reading {what}"),
            })?;
            Ok((line, text?.split_whitespace().map(str::to_owned).collect()))
        };
        fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, MeshError> {
            s.parse().map_err(|_| MeshError::Parse {
                line,
                msg: format!("cannot parse {s:?}"),
            })
        }
        let (line, head) = next("header")?;
        if head.len() != 2 {
            return Err(MeshError::Parse {
                line,
                msg: "header must be `nv nt`".into(),
            });
        }
        let nv: usize = parse(line, &head[0])?;
        let nt: usize = parse(line, &head[1])?;
        let mut verts = Vec::with_capacity(nv);
        let mut flags = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, f) = next("vertex")?;
            if f.len() != 3 {
                return Err(MeshError::Parse {
                    line,
                    msg: "vertex line must be `x y b`".into(),
                });
            }
            verts.push(Point2::new(parse(line, &f[0])?, parse(line, &f[1])?));
            let b: u8 = parse(line, &f[2])?;
            if b > 1 {
                return Err(MeshError::Parse {
                    line,
                    msg: "boundary flag must be 0 or 1".into(),
                });
            }
            flags.push((line, b == 1));
        }
        let mut tris = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (line, f) = next("triangle")?;
            if f.len() != 3 {
                return Err(MeshError::Parse {
                    line,
                    msg: "triangle line must be `i j k`".into(),
                });
            }
            tris.push([parse(line, &f[0])?, parse(line, &f[1])?, parse(line, &f[2])?]);
        }
        if let Some(Ok((line, _))) = lines.next().map(|(l, t)| t.map(|t| (l, t))) {
            return Err(MeshError::Parse {
                line,
                msg: "trailing data after the declared counts".into(),
            });
        }
        let mesh = Self::new(verts, &tris)?;
        for (v, &(line, b)) in flags.iter().enumerate() {
            if mesh.boundary_vertex[v] != b {
                return Err(MeshError::Parse {
                    line,
                    msg: format!(
                        "boundary flag of vertex {v} is {} but the mesh says {}",
                        b as u8, mesh.boundary_vertex[v] as u8
                    ),
                });
            }
        }
        Ok(mesh)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vertices.len(), self.triangles.len())?;
        for (p, &b) in self.vertices.iter().zip(&self.boundary_vertex) {
            writeln!(w, "{:e} {:e} {}", p.x, p.y, b as u8)?;
        }
        for t in &self.triangles {
            let [a, b, c] = t.vertices;
            writeln!(w, "{a} {b} {c}")?;
        }
        Ok(())
    }
}

fn build_patch(
    z: usize,
    vertices: &[Point2],
    tris: &[Triangle],
    around: &[usize],
    is_boundary: bool,
) -> Result<VertexPatch, MeshError> {
    if around.is_empty() {
        return Ok(VertexPatch {
            center: z,
            triangles: Vec::new(),
            angles: Vec::new(),
            sin_cos: Vec::new(),
            edges: Vec::new(),
            is_boundary,
        });
    }
    // For each triangle (z, a, b) in counterclockwise order the fan sweeps from a to b.
    let spans: Vec<(usize, usize, usize)> = around
        .iter()
        .map(|&t| {
            let v = tris[t].vertices;
            let i = v.iter().position(|&w| w == z).unwrap();
            (t, v[(i + 1) % 3], v[(i + 2) % 3])
        })
        .collect();
    let start = if is_boundary {
        let starts: Vec<_> = spans
            .iter()
            .filter(|(_, a, _)| !spans.iter().any(|(_, _, b)| b == a))
            .collect();
        if starts.len() != 1 {
            return Err(MeshError::NonConforming(format!(
                "vertex {z} has {} boundary fans",
                starts.len()
            )));
        }
        *starts[0]
    } else {
        *spans.iter().min_by_key(|s| s.0).unwrap()
    };

    let mut order = vec![start];
    let mut current = start;
    while order.len() < spans.len() {
        match spans.iter().find(|(_, a, _)| *a == current.2) {
            Some(&next) if next.0 != start.0 => {
                order.push(next);
                current = next;
            }
            _ => break,
        }
    }
    if order.len() != spans.len() {
        return Err(MeshError::NonConforming(format!(
            "triangles around vertex {z} do not form a single fan"
        )));
    }
    if !is_boundary && order.last().unwrap().2 != start.1 {
        return Err(MeshError::NonConforming(format!(
            "fan around interior vertex {z} does not close"
        )));
    }

    let pz = vertices[z];
    let mut angles = Vec::with_capacity(order.len());
    let mut sin_cos = Vec::with_capacity(order.len());
    for &(_, a, b) in &order {
        let (ea, eb) = (vertices[a].sub(pz), vertices[b].sub(pz));
        let (cr, dt) = (ea.cross(eb), ea.dot(eb));
        angles.push(cr.atan2(dt));
        let n = ea.norm() * eb.norm();
        sin_cos.push((cr / n, dt / n));
    }
    let mut edges: Vec<usize> = order.iter().map(|s| s.1).collect();
    if is_boundary {
        edges.push(order.last().unwrap().2);
    }
    Ok(VertexPatch {
        center: z,
        triangles: order.iter().map(|s| s.0).collect(),
        angles,
        sin_cos,
        edges,
        is_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> Mesh {
        Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            &[[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_counts() {
        let m = reference();
        assert_eq!(m.num_boundary_edges(), 3);
        assert_eq!(m.num_edges() - m.num_boundary_edges(), 0);
    }

    #[test]
    fn criss_cross_counts() {
        let m = Mesh::criss_cross(0.0).unwrap();
        assert_eq!(m.num_edges() - m.num_boundary_edges(), 4);
        assert_eq!(m.num_boundary_edges(), 4);
        assert_eq!(m.num_interior_vertices(), 1);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let m = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            &[[0, 2, 1]],
        )
        .unwrap();
        assert!(m.area(0) > 0.0);
    }

    #[test]
    fn partial_edge_is_rejected() {
        // Square split into a big lower triangle and two upper ones whose shared vertex
        // sits in the middle of the diagonal.
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
        ];
        let err = Mesh::new(v, &[[0, 1, 2], [0, 4, 3], [4, 2, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::NonConforming(_)), "{err}");
    }

    #[test]
    fn degenerate_and_out_of_range() {
        let v = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];
        assert!(matches!(
            Mesh::new(v.clone(), &[[0, 1, 2]]),
            Err(MeshError::DegenerateTriangle { .. })
        ));
        assert!(matches!(
            Mesh::new(v, &[[0, 1, 5]]),
            Err(MeshError::IndexOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn tiny_perturbation_is_still_valid() {
        let m = Mesh::criss_cross(1e-8).unwrap();
        assert_eq!(m.num_triangles(), 4);
    }

    #[test]
    fn criss_cross_eps_range() {
        assert!(matches!(Mesh::criss_cross(0.5), Err(MeshError::OutOfRange { .. })));
        assert!(matches!(Mesh::criss_cross(-0.1), Err(MeshError::OutOfRange { .. })));
        let m = Mesh::criss_cross(0.01).unwrap();
        assert_eq!(m.vertices()[4], Point2::new(0.51, 0.5));
    }

    #[test]
    fn centre_patch_is_a_right_angle_cross() {
        let m = Mesh::criss_cross(0.0).unwrap();
        let p = m.vertex_patch(4);
        assert_eq!(p.len(), 4);
        assert!(!p.is_boundary);
        for a in &p.angles {
            assert!((a - PI / 2.0).abs() < 1e-15);
        }
        // Both diagonals end in a corner, so each corner sees two triangles.
        let corner = m.vertex_patch(0);
        assert_eq!(corner.len(), 2);
        assert!(corner.is_boundary);
    }

    #[test]
    fn refinement_counts_and_boundary_midpoint_patch() {
        let one = reference().red_refine().unwrap();
        assert_eq!(one.num_triangles(), 4);
        assert_eq!(one.num_vertices(), 6);

        let m = Mesh::criss_cross(0.0).unwrap().red_refine().unwrap();
        assert_eq!(m.num_triangles(), 16);
        let mid = m.vertices().iter().position(|p| *p == Point2::new(0.5, 0.0)).unwrap();
        assert_eq!(m.vertex_patch(mid).len(), 3);
        assert!(m.vertex_patch(mid).is_boundary);
        assert_eq!(m.refined(1).unwrap().num_triangles(), 64);
    }

    #[test]
    fn shape_regularity_values() {
        let eq = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.5, 3f64.sqrt() / 2.0),
            ],
            &[[0, 1, 2]],
        )
        .unwrap();
        assert!((eq.shape_regularity().unwrap() - 3f64.sqrt()).abs() < 1e-14);

        // Right isosceles triangle with legs l: h = l√2, r = area / s.
        let cc = Mesh::criss_cross(0.0).unwrap();
        let l = 0.5f64.sqrt();
        let (area, s) = (0.5 * l * l, 0.5 * (2.0 * l + 1.0));
        let expected = 1.0 / (2.0 * area / s);
        let g = cc.shape_regularity().unwrap();
        assert!((g - expected).abs() < 1e-13);
        assert!((cc.red_refine().unwrap().shape_regularity().unwrap() - g).abs() < 1e-12);
    }

    #[test]
    fn outer_angles() {
        let cc = Mesh::criss_cross(0.0).unwrap();
        assert!((cc.outer_angle(0).unwrap() - 1.5 * PI).abs() < 1e-14);
        let fine = cc.red_refine().unwrap();
        assert!((fine.min_outer_angle().unwrap() - PI).abs() < 1e-14);

        // L-shape made of three unit squares; the reentrant corner is (1, 1).
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 1.0),
            Point2::new(0.0, 2.0),
            Point2::new(1.0, 2.0),
        ];
        let t = [[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [3, 4, 7], [3, 7, 6]];
        let l = Mesh::new(v, &t).unwrap();
        assert!((l.outer_angle(4).unwrap() - PI / 2.0).abs() < 1e-14);
        assert!((l.min_outer_angle().unwrap() - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn text_round_trip_and_flag_check() {
        let m = Mesh::criss_cross(0.01).unwrap().red_refine().unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = Mesh::read_text(&buf[..]).unwrap();
        assert_eq!(back.num_triangles(), m.num_triangles());
        assert_eq!(back.vertices(), m.vertices());

        let bad = "3 1\n0 0 1\n1 0 1\n0 1 0\n0 1 2\n";
        assert!(matches!(
            Mesh::read_text(bad.as_bytes()),
            Err(MeshError::Parse { line: 4, .. })
        ));
        let short = "3 2\n0 0 1\n1 0 1\n0 1 1\n0 1 2\n";
        assert!(matches!(
            Mesh::read_text(short.as_bytes()),
            Err(MeshError::Parse { .. })
        ));
        let long = "3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 2\n0 1 2\n";
        assert!(matches!(Mesh::read_text(long.as_bytes()), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn edge_normals_point_out_of_the_lower_triangle() {
        let m = Mesh::criss_cross(0.1).unwrap();
        for (e, edge) in m.edges().iter().enumerate() {
            let n = m.edge_normal(e);
            assert!((n.norm() - 1.0).abs() < 1e-14);
            let [a, b, c] = m.corners(edge.triangles[0]);
            let centroid = Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            let on_edge = m.vertices()[edge.vertices[0]];
            assert!(n.dot(centroid.sub(on_edge)) < 0.0);
        }
    }
}
