//! Mesh file I/O: ASCII OBJ (v/f records) and the quad-JSON cell format.
//!
//! OBJ output keeps input ordering and prints coordinates with shortest
//! round-trip formatting, so save/load is exact.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{CellMesh, MeshError, TriMesh};

pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    out.push_str("# shellopt triangle mesh\n");
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn load_obj(path: &Path) -> Result<TriMesh, MeshError> {
    let text = fs::read_to_string(path)?;
    let (vertices, faces) = parse_obj(&text)?;
    let triangles = triangulate_and_orient(vertices.len(), &faces)?;
    TriMesh::new(vertices, triangles, 0.0)
}

fn parse_obj(text: &str) -> Result<(Vec<Point3<f64>>, Vec<Vec<usize>>), MeshError> {
    let mut vertices = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut it = l.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = it.next().ok_or(MeshError::Parse {
                        line,
                        message: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| MeshError::Parse {
                        line,
                        message: format!("bad coordinate '{tok}'"),
                    })?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or(tok);
                    let i: i64 = first.parse().map_err(|_| MeshError::Parse {
                        line,
                        message: format!("bad face index '{tok}'"),
                    })?;
                    if i < 1 {
                        return Err(MeshError::Parse {
                            line,
                            message: format!("face index {i} must be positive"),
                        });
                    }
                    let i = (i - 1) as usize;
                    if i >= vertices.len() {
                        return Err(MeshError::Parse {
                            line,
                            message: format!("face index {} out of range", i + 1),
                        });
                    }
                    idx.push(i);
                }
                if idx.len() < 3 {
                    return Err(MeshError::Parse {
                        line,
                        message: "face needs at least 3 indices".into(),
                    });
                }
                faces.push(idx);
            }
            // ignore normals, texcoords, groups and other records
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// Fan-triangulate polygons and enforce a consistent winding by propagation
/// from the seed face.
fn triangulate_and_orient(
    vertex_count: usize,
    faces: &[Vec<usize>],
) -> Result<Vec<[usize; 3]>, MeshError> {
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut tri_face: Vec<usize> = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        for i in 1..f.len() - 1 {
            tris.push([f[0], f[i], f[i + 1]]);
            tri_face.push(fi);
        }
    }
    let _ = vertex_count;

    // undirected edge -> incident triangles
    let mut edge_map: std::collections::BTreeMap<(usize, usize), Vec<usize>> =
        std::collections::BTreeMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for i in 0..3 {
            let a = tri[i];
            let b = tri[(i + 1) % 3];
            edge_map.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    for (&(a, b), ts) in &edge_map {
        if ts.len() > 2 {
            return Err(MeshError::NonManifold(a, b, ts.len()));
        }
    }

    let directed = |tri: &[usize; 3], a: usize, b: usize| -> bool {
        // true if tri traverses a -> b
        (0..3).any(|i| tri[i] == a && tri[(i + 1) % 3] == b)
    };
    let mut visited = vec![false; tris.len()];
    for seed in 0..tris.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut queue = std::collections::VecDeque::from([seed]);
        while let Some(t) = queue.pop_front() {
            let tri = tris[t];
            for i in 0..3 {
                let a = tri[i];
                let b = tri[(i + 1) % 3];
                let key = (a.min(b), a.max(b));
                for &o in &edge_map[&key] {
                    if o == t {
                        continue;
                    }
                    // consistent orientation: the neighbor traverses b -> a
                    let consistent = directed(&tris[o], b, a);
                    if visited[o] {
                        if !consistent {
                            return Err(MeshError::NotOrientable(tri_face[o]));
                        }
                    } else {
                        if !consistent {
                            tris[o].swap(1, 2);
                        }
                        visited[o] = true;
                        queue.push_back(o);
                    }
                }
            }
        }
    }
    Ok(tris)
}

#[derive(Serialize, Deserialize)]
struct QuadJson {
    nodes: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    normals: Vec<[f64; 3]>,
}

pub fn save_cell_json(cells: &CellMesh, path: &Path) -> Result<(), MeshError> {
    let doc = QuadJson {
        nodes: cells.nodes.iter().map(|p| [p.x, p.y, p.z]).collect(),
        faces: cells.faces.clone(),
        normals: cells.node_normals.iter().map(|n| [n.x, n.y, n.z]).collect(),
    };
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    fs::write(path, text)?;
    Ok(())
}

pub fn load_cell_json(path: &Path) -> Result<CellMesh, MeshError> {
    let text = fs::read_to_string(path)?;
    let doc: QuadJson = serde_json::from_str(&text).map_err(|e| MeshError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|c| Point3::new(c[0], c[1], c[2]))
        .collect();
    let normals = doc
        .normals
        .into_iter()
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect();
    CellMesh::from_polygons(nodes, doc.faces, normals)
}

/// One named solid in a multi-object OBJ file.
#[derive(Debug, Clone)]
pub struct ObjObject {
    pub name: String,
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

impl ObjObject {
    /// Signed volume via the divergence theorem.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                pa.coords.dot(&pb.coords.cross(&pc.coords)) / 6.0
            })
            .sum()
    }
}

/// Write solids as a multi-object OBJ, one `o` record per block.
pub fn save_structure_obj(objects: &[ObjObject], path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    out.push_str("# shellopt block structure\n");
    let mut base = 1usize;
    for obj in objects {
        out.push_str(&format!("o {}\n", obj.name));
        for v in &obj.vertices {
            out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for t in &obj.triangles {
            out.push_str(&format!(
                "f {} {} {}\n",
                base + t[0],
                base + t[1],
                base + t[2]
            ));
        }
        base += obj.vertices.len();
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn load_structure_obj(path: &Path) -> Result<Vec<ObjObject>, MeshError> {
    let text = fs::read_to_string(path)?;
    let mut objects: Vec<ObjObject> = Vec::new();
    let mut all_vertices: Vec<Point3<f64>> = Vec::new();
    let mut starts: Vec<usize> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut it = l.split_whitespace();
        match it.next() {
            Some("o") => {
                objects.push(ObjObject {
                    name: it.next().unwrap_or("block").to_string(),
                    vertices: Vec::new(),
                    triangles: Vec::new(),
                });
                starts.push(all_vertices.len());
            }
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = it.next().ok_or(MeshError::Parse {
                        line,
                        message: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| MeshError::Parse {
                        line,
                        message: format!("bad coordinate '{tok}'"),
                    })?;
                }
                let p = Point3::new(coords[0], coords[1], coords[2]);
                all_vertices.push(p);
                if let Some(obj) = objects.last_mut() {
                    obj.vertices.push(p);
                }
            }
            Some("f") => {
                let obj = objects.last_mut().ok_or(MeshError::Parse {
                    line,
                    message: "face before any object record".into(),
                })?;
                let start = *starts.last().unwrap();
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or(tok);
                    let i: i64 = first.parse().map_err(|_| MeshError::Parse {
                        line,
                        message: format!("bad face index '{tok}'"),
                    })?;
                    let i = (i - 1) as usize;
                    if i < start || i >= all_vertices.len() {
                        return Err(MeshError::Parse {
                            line,
                            message: format!("face index {} outside current object", i + 1),
                        });
                    }
                    idx.push(i - start);
                }
                for k in 1..idx.len() - 1 {
                    obj.triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(objects)
}
