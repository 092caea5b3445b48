//! Mesh data structures shared by all pipeline stages: triangle surfaces for
//! the field stage and polygonal cell meshes for the beam/cell stages.
//!
//! Units are millimetres for lengths and newtons for forces throughout.

mod gen;
mod io;

pub use gen::{generate_test_surface, icosphere, SurfaceKind, SurfaceSpec};
pub use io::{load_cell_json, load_obj, save_cell_json, save_obj, save_structure_obj};

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("non-manifold edge ({0}, {1}) shared by {2} faces")]
    NonManifold(usize, usize, usize),
    #[error("mesh is not orientable: conflicting windings at face {0}")]
    NotOrientable(usize),
    #[error("degenerate face {0}: {1}")]
    DegenerateFace(usize, String),
    #[error("vertex index {index} out of range ({len} vertices)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("mesh structure error: {0}")]
    Structure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Triangle surface mesh with per-triangle tangent reference directions.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Unit in-plane reference direction per triangle.
    pub reference_dirs: Vec<Vector3<f64>>,
    /// Triangle areas (mm^2).
    pub areas: Vec<f64>,
    /// Initial shell thickness h0 per triangle (mm).
    pub shell_thickness: Vec<f64>,
    /// Unique edges; local edge `i` of a triangle is opposite local vertex `i`.
    edges: Vec<MeshEdge>,
    tri_edges: Vec<[usize; 3]>,
}

#[derive(Debug, Clone)]
pub struct MeshEdge {
    pub vertices: [usize; 2],
    /// Incident triangles (1 for boundary edges, 2 for interior).
    pub triangles: Vec<usize>,
}

impl TriMesh {
    /// Validates connectivity and computes areas, adjacency and default
    /// reference directions (projection of a global axis onto each triangle).
    pub fn new(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[usize; 3]>,
        shell_thickness: f64,
    ) -> Result<Self, MeshError> {
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        index: v,
                        len: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateFace(t, "repeated vertex".into()));
            }
            let a = triangle_area(&vertices, tri);
            if a <= MIN_TRIANGLE_AREA {
                return Err(MeshError::DegenerateFace(t, format!("area {a:.3e}")));
            }
            areas.push(a);
        }
        let (edges, tri_edges) = build_edges(vertices.len(), &triangles)?;
        let reference_dirs = triangles
            .iter()
            .map(|tri| default_reference_dir(&vertices, tri))
            .collect();
        let h0 = vec![shell_thickness; triangles.len()];
        Ok(TriMesh {
            vertices,
            triangles,
            reference_dirs,
            areas,
            shell_thickness: h0,
            edges,
            tri_edges,
        })
    }

    /// Replace reference directions; each is projected into its triangle
    /// plane and normalized.
    pub fn set_reference_dirs(&mut self, dirs: &[Vector3<f64>]) -> Result<(), MeshError> {
        if dirs.len() != self.triangles.len() {
            return Err(MeshError::Parameter(
                "reference direction count must match triangle count".into(),
            ));
        }
        for (t, d) in dirs.iter().enumerate() {
            let n = self.normal(t);
            let proj = d - n * d.dot(&n);
            let len = proj.norm();
            if len < 1e-9 {
                return Err(MeshError::Parameter(format!(
                    "reference direction of triangle {t} is normal to its plane"
                )));
            }
            self.reference_dirs[t] = proj / len;
        }
        Ok(())
    }

    pub fn normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangles[t];
        let n = (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]));
        n / n.norm()
    }

    /// Orthonormal tangent frame (t1, t2, n) with t1 the reference direction.
    pub fn tangent_frame(&self, t: usize) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let n = self.normal(t);
        let t1 = self.reference_dirs[t];
        let t2 = n.cross(&t1);
        (t1, t2, n)
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    /// Edge id of local edge `i` (opposite local vertex `i`) of triangle `t`.
    pub fn triangle_edge(&self, t: usize, i: usize) -> usize {
        self.tri_edges[t][i]
    }

    /// Neighbor triangle across local edge `i` of triangle `t`.
    pub fn neighbor(&self, t: usize, i: usize) -> Option<usize> {
        let e = &self.edges[self.tri_edges[t][i]];
        e.triangles.iter().copied().find(|&o| o != t)
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.edges
            .iter()
            .any(|e| e.triangles.len() == 1 && (e.vertices[0] == v || e.vertices[1] == v))
    }

    /// Signed volume via the divergence theorem; positive for outward-oriented
    /// closed surfaces.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                pa.coords.dot(&pb.coords.cross(&pc.coords)) / 6.0
            })
            .sum()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn dof_count(&self) -> usize {
        3 * self.vertices.len()
    }
}

fn triangle_area(vertices: &[Point3<f64>], tri: &[usize; 3]) -> f64 {
    let e1 = vertices[tri[1]] - vertices[tri[0]];
    let e2 = vertices[tri[2]] - vertices[tri[0]];
    0.5 * e1.cross(&e2).norm()
}

fn default_reference_dir(vertices: &[Point3<f64>], tri: &[usize; 3]) -> Vector3<f64> {
    let e1 = vertices[tri[1]] - vertices[tri[0]];
    let e2 = vertices[tri[2]] - vertices[tri[0]];
    let n = e1.cross(&e2).normalize();
    for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
        let proj = axis - n * axis.dot(&n);
        if proj.norm() > 1e-6 {
            return proj.normalize();
        }
    }
    e1.normalize()
}

fn build_edges(
    vertex_count: usize,
    triangles: &[[usize; 3]],
) -> Result<(Vec<MeshEdge>, Vec<[usize; 3]>), MeshError> {
    let _ = vertex_count;
    let mut map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut edges: Vec<MeshEdge> = Vec::new();
    let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for i in 0..3 {
            let a = tri[(i + 1) % 3];
            let b = tri[(i + 2) % 3];
            let key = (a.min(b), a.max(b));
            let id = *map.entry(key).or_insert_with(|| {
                edges.push(MeshEdge {
                    vertices: [key.0, key.1],
                    triangles: Vec::new(),
                });
                edges.len() - 1
            });
            edges[id].triangles.push(t);
            tri_edges[t][i] = id;
        }
    }
    for e in &edges {
        if e.triangles.len() > 2 {
            return Err(MeshError::NonManifold(
                e.vertices[0],
                e.vertices[1],
                e.triangles.len(),
            ));
        }
    }
    Ok((edges, tri_edges))
}

/// External load specification: per-vertex forces plus fixed vertices.
#[derive(Debug, Clone)]
pub struct LoadCase {
    /// Per-vertex force vectors (N). Forces on support vertices are ignored.
    pub forces: Vec<Vector3<f64>>,
    pub supports: Vec<usize>,
    /// Maximum allowable stress (normalized).
    pub sigma0: f64,
    /// Maximum allowable strain (normalized).
    pub eps0: f64,
}

impl LoadCase {
    pub fn new(
        vertex_count: usize,
        forces: Vec<(usize, Vector3<f64>)>,
        supports: Vec<usize>,
    ) -> Result<Self, MeshError> {
        if supports.is_empty() {
            return Err(MeshError::Parameter(
                "support set must be nonempty".into(),
            ));
        }
        let mut f = vec![Vector3::zeros(); vertex_count];
        for (v, force) in forces {
            if v >= vertex_count {
                return Err(MeshError::IndexOutOfRange {
                    index: v,
                    len: vertex_count,
                });
            }
            f[v] += force;
        }
        let mut supports = supports;
        supports.sort_unstable();
        supports.dedup();
        if let Some(&v) = supports.iter().find(|&&v| v >= vertex_count) {
            return Err(MeshError::IndexOutOfRange {
                index: v,
                len: vertex_count,
            });
        }
        Ok(LoadCase {
            forces: f,
            supports,
            sigma0: 1.0,
            eps0: 1.0,
        })
    }

    pub fn is_support(&self, v: usize) -> bool {
        self.supports.binary_search(&v).is_ok()
    }
}

/// Edge classification in a cell mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeFlag {
    /// On the surface boundary (one incident polygonal face).
    Boundary,
    /// Shared by two polygonal faces.
    FaceEdge,
    /// Inserted when triangulating a polygonal face.
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct CellEdge {
    pub nodes: [usize; 2],
    pub flag: EdgeFlag,
    /// Incident subcells (triangles).
    pub subcells: Vec<usize>,
    /// Incident polygonal faces.
    pub faces: Vec<usize>,
}

/// Triangular subcell of a polygonal face.
#[derive(Debug, Clone)]
pub struct Subcell {
    /// CCW node indices.
    pub nodes: [usize; 3],
    /// Parent polygonal face.
    pub face: usize,
    /// Edge ids; local edge `i` connects nodes[i] and nodes[(i+1)%3].
    pub edge_ids: [usize; 3],
    /// Edge lengths l_i (mm).
    pub lengths: [f64; 3],
    /// Opposite heights a_i = 2A/l_i (mm).
    pub heights: [f64; 3],
    pub area: f64,
}

/// Polygonal cell mesh: faces (mostly quads) triangulated into subcells with
/// flagged diagonals, plus the node fan structure needed by the beam model.
#[derive(Debug, Clone)]
pub struct CellMesh {
    pub nodes: Vec<Point3<f64>>,
    pub faces: Vec<Vec<usize>>,
    pub subcells: Vec<Subcell>,
    pub edges: Vec<CellEdge>,
    pub node_normals: Vec<Vector3<f64>>,
    /// Per node, incident edge ids in CCW order around the node normal.
    /// Open fans (boundary nodes) start and end at boundary edges.
    pub node_edges: Vec<Vec<usize>>,
    /// True if the fan at the node is a closed cycle (interior node).
    pub node_interior: Vec<bool>,
}

impl CellMesh {
    /// Build from polygonal faces. Quads are split along the shorter diagonal
    /// (ties broken toward the lower vertex index); faces with more than four
    /// sides are fan-triangulated from their lowest-index vertex. All inserted
    /// edges are flagged as diagonals.
    pub fn from_polygons(
        nodes: Vec<Point3<f64>>,
        faces: Vec<Vec<usize>>,
        normals: Vec<Vector3<f64>>,
    ) -> Result<Self, MeshError> {
        if normals.len() != nodes.len() {
            return Err(MeshError::Parameter(
                "need one normal per node".into(),
            ));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.len() < 3 {
                return Err(MeshError::DegenerateFace(fi, "fewer than 3 vertices".into()));
            }
            for &v in f {
                if v >= nodes.len() {
                    return Err(MeshError::IndexOutOfRange {
                        index: v,
                        len: nodes.len(),
                    });
                }
            }
            let mut sorted = f.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != f.len() {
                return Err(MeshError::DegenerateFace(fi, "repeated vertex".into()));
            }
        }

        // triangulate faces
        let mut subcell_nodes: Vec<([usize; 3], usize)> = Vec::new();
        let mut diagonal_pairs: Vec<(usize, usize)> = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            match f.len() {
                3 => subcell_nodes.push(([f[0], f[1], f[2]], fi)),
                4 => {
                    let d02 = (nodes[f[0]] - nodes[f[2]]).norm();
                    let d13 = (nodes[f[1]] - nodes[f[3]]).norm();
                    let use02 = if (d02 - d13).abs() <= 1e-12 * (d02 + d13) {
                        f[0].min(f[2]) < f[1].min(f[3])
                    } else {
                        d02 < d13
                    };
                    if use02 {
                        subcell_nodes.push(([f[0], f[1], f[2]], fi));
                        subcell_nodes.push(([f[0], f[2], f[3]], fi));
                        diagonal_pairs.push((f[0], f[2]));
                    } else {
                        subcell_nodes.push(([f[1], f[2], f[3]], fi));
                        subcell_nodes.push(([f[1], f[3], f[0]], fi));
                        diagonal_pairs.push((f[1], f[3]));
                    }
                }
                _ => {
                    // fan from the lowest-index vertex; interior spokes of the
                    // fan are the inserted diagonals
                    let start = f
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, &v)| v)
                        .map(|(i, _)| i)
                        .unwrap();
                    let m = f.len();
                    let rot: Vec<usize> = (0..m).map(|i| f[(start + i) % m]).collect();
                    for i in 1..m - 1 {
                        subcell_nodes.push(([rot[0], rot[i], rot[i + 1]], fi));
                    }
                    for i in 2..m - 1 {
                        diagonal_pairs.push((rot[0], rot[i]));
                    }
                }
            }
        }
        diagonal_pairs.sort_unstable_by_key(|&(a, b)| (a.min(b), a.max(b)));
        diagonal_pairs.dedup_by_key(|&mut (a, b)| (a.min(b), a.max(b)));

        Self::assemble(nodes, faces, normals, subcell_nodes, &diagonal_pairs)
    }

    fn assemble(
        nodes: Vec<Point3<f64>>,
        faces: Vec<Vec<usize>>,
        normals: Vec<Vector3<f64>>,
        subcell_nodes: Vec<([usize; 3], usize)>,
        diagonal_pairs: &[(usize, usize)],
    ) -> Result<Self, MeshError> {
        let diag_set: std::collections::BTreeSet<(usize, usize)> = diagonal_pairs
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();

        // face boundary edge set (ccw edges of polygonal faces)
        let mut face_edge_count: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for i in 0..f.len() {
                let a = f[i];
                let b = f[(i + 1) % f.len()];
                face_edge_count
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push(fi);
            }
        }
        for (&(a, b), fs) in &face_edge_count {
            if fs.len() > 2 {
                return Err(MeshError::NonManifold(a, b, fs.len()));
            }
            if diag_set.contains(&(a, b)) {
                return Err(MeshError::Structure(format!(
                    "edge ({a}, {b}) is both a face edge and a diagonal"
                )));
            }
        }

        let mut edge_map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<CellEdge> = Vec::new();
        let mut subcells: Vec<Subcell> = Vec::new();
        for (snodes, face) in subcell_nodes {
            let mut edge_ids = [usize::MAX; 3];
            let mut lengths = [0.0; 3];
            let p = [nodes[snodes[0]], nodes[snodes[1]], nodes[snodes[2]]];
            let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            if area <= MIN_TRIANGLE_AREA {
                return Err(MeshError::DegenerateFace(
                    face,
                    format!("subcell area {area:.3e}"),
                ));
            }
            for i in 0..3 {
                let a = snodes[i];
                let b = snodes[(i + 1) % 3];
                let key = (a.min(b), a.max(b));
                let id = *edge_map.entry(key).or_insert_with(|| {
                    let flag = if diag_set.contains(&key) {
                        EdgeFlag::Diagonal
                    } else if face_edge_count.get(&key).map(|v| v.len()) == Some(1) {
                        EdgeFlag::Boundary
                    } else {
                        EdgeFlag::FaceEdge
                    };
                    edges.push(CellEdge {
                        nodes: [key.0, key.1],
                        flag,
                        subcells: Vec::new(),
                        faces: face_edge_count.get(&key).cloned().unwrap_or_default(),
                    });
                    edges.len() - 1
                });
                edges[id].subcells.push(subcells.len());
                edge_ids[i] = id;
                lengths[i] = (nodes[b] - nodes[a]).norm();
            }
            let heights = [
                2.0 * area / lengths[0],
                2.0 * area / lengths[1],
                2.0 * area / lengths[2],
            ];
            subcells.push(Subcell {
                nodes: snodes,
                face,
                edge_ids,
                lengths,
                heights,
                area,
            });
        }
        for e in &edges {
            let max_subcells = if e.flag == EdgeFlag::Diagonal { 2 } else { 2 };
            if e.subcells.len() > max_subcells {
                return Err(MeshError::NonManifold(
                    e.nodes[0],
                    e.nodes[1],
                    e.subcells.len(),
                ));
            }
            if e.flag == EdgeFlag::Diagonal {
                let f0 = subcells[e.subcells[0]].face;
                if !e.subcells.iter().all(|&s| subcells[s].face == f0) {
                    return Err(MeshError::Structure(format!(
                        "diagonal ({}, {}) spans multiple faces",
                        e.nodes[0], e.nodes[1]
                    )));
                }
            }
        }

        let (node_edges, node_interior) = build_node_fans(&nodes, &subcells, &edges, &normals)?;

        Ok(CellMesh {
            nodes,
            faces,
            subcells,
            edges,
            node_normals: normals,
            node_edges,
            node_interior,
        })
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].nodes;
        (self.nodes[b] - self.nodes[a]).norm()
    }

    /// Neighbor node reached from `node` along edge `e`.
    pub fn edge_other(&self, e: usize, node: usize) -> usize {
        let [a, b] = self.edges[e].nodes;
        if a == node {
            b
        } else {
            a
        }
    }

    pub fn total_face_area(&self) -> f64 {
        self.subcells.iter().map(|s| s.area).sum()
    }

    /// The triangle surface obtained by taking subcells as triangles.
    pub fn to_tri_mesh(&self, shell_thickness: f64) -> Result<TriMesh, MeshError> {
        TriMesh::new(
            self.nodes.clone(),
            self.subcells.iter().map(|s| s.nodes).collect(),
            shell_thickness,
        )
    }
}

/// Order incident edges CCW around each node by walking subcell fans.
fn build_node_fans(
    nodes: &[Point3<f64>],
    subcells: &[Subcell],
    edges: &[CellEdge],
    normals: &[Vector3<f64>],
) -> Result<(Vec<Vec<usize>>, Vec<bool>), MeshError> {
    let node_count = nodes.len();
    // For each node: successor map over incident edges. In a CCW subcell
    // (v, b, c) the CCW successor of edge (v,b) at v is edge (v,c).
    let mut succ: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); node_count];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for s in subcells {
        for i in 0..3 {
            let v = s.nodes[i];
            let e_in = s.edge_ids[i]; // (v, next)
            let e_out = s.edge_ids[(i + 2) % 3]; // (prev, v)
            if succ[v].insert(e_in, e_out).is_some() {
                return Err(MeshError::Structure(format!(
                    "inconsistent CCW ordering at node {v}"
                )));
            }
            incident[v].push(e_in);
            incident[v].push(e_out);
        }
    }
    let mut node_edges = vec![Vec::new(); node_count];
    let mut node_interior = vec![false; node_count];
    for v in 0..node_count {
        incident[v].sort_unstable();
        incident[v].dedup();
        if incident[v].is_empty() {
            continue;
        }
        // an edge with no predecessor starts an open fan
        let has_pred: std::collections::BTreeSet<usize> = succ[v].values().copied().collect();
        let start = incident[v]
            .iter()
            .copied()
            .find(|e| !has_pred.contains(e));
        let (start, interior) = match start {
            Some(e) => (e, false),
            None => (incident[v][0], true),
        };
        let mut chain = vec![start];
        let mut cur = start;
        while let Some(&next) = succ[v].get(&cur) {
            if next == start {
                break;
            }
            chain.push(next);
            cur = next;
            if chain.len() > incident[v].len() {
                return Err(MeshError::Structure(format!(
                    "fan walk does not terminate at node {v}"
                )));
            }
        }
        if chain.len() != incident[v].len() {
            return Err(MeshError::Structure(format!(
                "node {v} has a disconnected or non-manifold fan"
            )));
        }
        // the CCW fan must wind around the stored outward normal
        if chain.len() >= 2 {
            let dir = |e: usize| -> Vector3<f64> {
                let [a, b] = edges[e].nodes;
                let to = if a == v { b } else { a };
                nodes[to] - nodes[v]
            };
            // cross products of consecutive fan edges accumulate along +normal
            let mut acc = Vector3::zeros();
            let pairs = if interior { chain.len() } else { chain.len() - 1 };
            for t in 0..pairs {
                let e1 = dir(chain[t]);
                let e2 = dir(chain[(t + 1) % chain.len()]);
                acc += e1.cross(&e2);
            }
            if acc.dot(&normals[v]) <= 0.0 {
                return Err(MeshError::Structure(format!(
                    "CCW fan at node {v} disagrees with its normal"
                )));
            }
        }
        node_edges[v] = chain;
        node_interior[v] = interior;
    }
    Ok((node_edges, node_interior))
}

#[cfg(test)]
mod tests;
