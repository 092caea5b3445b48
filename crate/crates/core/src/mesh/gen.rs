//! Deterministic parametric test-surface generators.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use super::{CellMesh, MeshError, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    /// Rectangular plate in the z = 0 plane, dims = (length x, length y).
    Plate,
    /// Cylinder with axis along z, dims = (radius, height); closed in the
    /// angular direction.
    Cylinder,
    /// Long plate strip in the z = 0 plane, dims = (length x, width y).
    CantileverStrip,
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub dims: [f64; 2],
    pub resolution: [usize; 2],
    pub shell_thickness: f64,
}

/// Build a structured quad cell mesh and its underlying triangle mesh.
/// Each quad is split into two subcells along its shorter diagonal.
pub fn generate_test_surface(spec: &SurfaceSpec) -> Result<(TriMesh, CellMesh), MeshError> {
    if spec.dims[0] <= 0.0 || spec.dims[1] <= 0.0 {
        return Err(MeshError::Parameter(format!(
            "dims must be positive, got {:?}",
            spec.dims
        )));
    }
    if spec.resolution[0] < 2 || spec.resolution[1] < 2 {
        return Err(MeshError::Parameter(format!(
            "resolution must be at least 2 in each direction, got {:?}",
            spec.resolution
        )));
    }
    let cells = match spec.kind {
        SurfaceKind::Plate | SurfaceKind::CantileverStrip => plate_cells(spec),
        SurfaceKind::Cylinder => {
            if spec.resolution[0] < 3 {
                return Err(MeshError::Parameter(
                    "cylinder needs at least 3 angular cells".into(),
                ));
            }
            cylinder_cells(spec)
        }
    }?;
    let tri = cells.to_tri_mesh(spec.shell_thickness)?;
    Ok((tri, cells))
}

fn plate_cells(spec: &SurfaceSpec) -> Result<CellMesh, MeshError> {
    let [nx, ny] = spec.resolution;
    let [lx, ly] = spec.dims;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut normals = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point3::new(
                lx * i as f64 / nx as f64,
                ly * j as f64 / ny as f64,
                0.0,
            ));
            normals.push(Vector3::z());
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    CellMesh::from_polygons(nodes, faces, normals)
}

fn cylinder_cells(spec: &SurfaceSpec) -> Result<CellMesh, MeshError> {
    let [ntheta, nz] = spec.resolution;
    let [r, h] = spec.dims;
    let mut nodes = Vec::with_capacity(ntheta * (nz + 1));
    let mut normals = Vec::with_capacity(ntheta * (nz + 1));
    for j in 0..=nz {
        for i in 0..ntheta {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / ntheta as f64;
            let (s, c) = theta.sin_cos();
            nodes.push(Point3::new(r * c, r * s, h * j as f64 / nz as f64));
            normals.push(Vector3::new(c, s, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * ntheta + (i % ntheta);
    let mut faces = Vec::with_capacity(ntheta * nz);
    for j in 0..nz {
        for i in 0..ntheta {
            faces.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    CellMesh::from_polygons(nodes, faces, normals)
}

/// Geodesic sphere from subdividing an icosahedron; used by field tests on
/// closed surfaces.
pub fn icosphere(radius: f64, subdivisions: usize) -> Result<TriMesh, MeshError> {
    if radius <= 0.0 {
        return Err(MeshError::Parameter("radius must be positive".into()));
    }
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let mut mid = |u: usize, v: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
                let key = (u.min(v), u.max(v));
                *midpoint.entry(key).or_insert_with(|| {
                    verts.push((verts[u] + verts[v]).normalize());
                    verts.len() - 1
                })
            };
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    let points = verts
        .into_iter()
        .map(|v| Point3::from(v * radius))
        .collect();
    TriMesh::new(points, tris, 0.0)
}
