//! Indexed triangle meshes, manifold diagnostics and STL output.

use std::collections::HashMap;
use std::fmt::Write as _;

/// Triangles wind counter-clockwise seen from outside.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new() -> Self {
        Self::default()
    }

    /// Axis-aligned box, 12 triangles.
    pub fn cuboid(min: [f64; 3], max: [f64; 3]) -> TriMesh {
        let v = |i: usize| {
            [
                if i & 1 == 0 { min[0] } else { max[0] },
                if i & 2 == 0 { min[1] } else { max[1] },
                if i & 4 == 0 { min[2] } else { max[2] },
            ]
        };
        let vertices = (0..8).map(v).collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // z min
            [4, 5, 6], [5, 7, 6], // z max
            [0, 1, 4], [1, 5, 4], // y min
            [2, 6, 3], [3, 6, 7], // y max
            [0, 4, 2], [2, 4, 6], // x min
            [1, 3, 5], [3, 7, 5], // x max
        ];
        TriMesh { vertices, triangles }
    }

    /// Appends `other` as a separate shell.
    pub fn append(&mut self, other: &TriMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }

    pub fn triangle(&self, i: usize) -> [[f64; 3]; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0] as usize], self.vertices[t[1] as usize], self.vertices[t[2] as usize]]
    }

    /// Divergence-theorem volume; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    pub fn bbox(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                [lo[0].min(v[0]), lo[1].min(v[1]), lo[2].min(v[2])],
                [hi[0].max(v[0]), hi[1].max(v[1]), hi[2].max(v[2])],
            )
        }))
    }
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Twice the area below which a triangle counts as degenerate.
const DEGENERATE_AREA2: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshDiagnostics {
    /// Every edge used exactly twice, once in each direction.
    pub watertight: bool,
    pub boundary_edges: usize,
    /// Edges used by more than two triangles.
    pub non_manifold_edges: usize,
    /// Edges used twice in the same direction.
    pub misoriented_edges: usize,
    pub degenerate_triangles: usize,
    /// Components connected through shared edges.
    pub components: usize,
    pub signed_volume: f64,
    pub bbox: Option<([f64; 3], [f64; 3])>,
    pub triangle_count: usize,
}

impl MeshDiagnostics {
    /// Watertight, non-degenerate, one piece, positive volume.
    pub fn is_sound(&self) -> bool {
        self.watertight && self.degenerate_triangles == 0 && self.components == 1 && self.signed_volume > 0.0
    }

    pub fn summary(&self) -> String {
        format!(
            "triangles {}, watertight {}, boundary edges {}, non-manifold edges {}, misoriented edges {}, degenerate {}, components {}, volume {:.3} mm^3",
            self.triangle_count,
            self.watertight,
            self.boundary_edges,
            self.non_manifold_edges,
            self.misoriented_edges,
            self.degenerate_triangles,
            self.components,
            self.signed_volume
        )
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn mesh_diagnostics(mesh: &TriMesh) -> MeshDiagnostics {
    // (min, max) -> (forward uses, backward uses, first triangle)
    let mut edges: HashMap<(u32, u32), (usize, usize, usize)> = HashMap::new();
    let mut degenerate = 0;
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = mesh.triangle(ti);
        if norm(cross(sub(b, a), sub(c, a))) <= DEGENERATE_AREA2 {
            degenerate += 1;
        }
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            let e = edges.entry((u.min(v), u.max(v))).or_insert((0, 0, ti));
            if u < v {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    let mut parent: Vec<usize> = (0..mesh.triangles.len()).collect();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            let first = edges[&(u.min(v), u.max(v))].2;
            let (ra, rb) = (find(&mut parent, ti), find(&mut parent, first));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let components = (0..mesh.triangles.len()).filter(|&i| find(&mut parent, i) == i).count();
    let (mut boundary, mut non_manifold, mut misoriented) = (0, 0, 0);
    for (f, b, _) in edges.values() {
        match f + b {
            1 => boundary += 1,
            2 if *f != 1 => misoriented += 1,
            2 => {}
            _ => non_manifold += 1,
        }
    }
    MeshDiagnostics {
        watertight: boundary == 0 && non_manifold == 0 && misoriented == 0,
        boundary_edges: boundary,
        non_manifold_edges: non_manifold,
        misoriented_edges: misoriented,
        degenerate_triangles: degenerate,
        components,
        signed_volume: mesh.signed_volume(),
        bbox: mesh.bbox(),
        triangle_count: mesh.triangles.len(),
    }
}

fn unit_normal(tri: [[f64; 3]; 3]) -> [f32; 3] {
    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let l = norm(n);
    if l == 0.0 {
        return [0.0; 3];
    }
    [(n[0] / l) as f32, (n[1] / l) as f32, (n[2] / l) as f32]
}

const STL_HEADER: &[u8] = b"housingforge binary STL";

/// Binary STL (80-byte header, little-endian count, 50 bytes per facet)
/// or ASCII STL. Normals come from the winding.
pub fn emit_stl(mesh: &TriMesh, ascii: bool) -> Vec<u8> {
    if ascii {
        let mut s = String::from("solid housing\n");
        for i in 0..mesh.triangles.len() {
            let tri = mesh.triangle(i);
            let n = unit_normal(tri);
            let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2]);
            s.push_str("    outer loop\n");
            for v in tri {
                let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v[0] as f32, v[1] as f32, v[2] as f32);
            }
            s.push_str("    endloop\n  endfacet\n");
        }
        s.push_str("endsolid housing\n");
        return s.into_bytes();
    }
    let mut out = Vec::with_capacity(84 + 50 * mesh.triangles.len());
    let mut header = [b' '; 80];
    header[..STL_HEADER.len()].copy_from_slice(STL_HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for i in 0..mesh.triangles.len() {
        let tri = mesh.triangle(i);
        for c in unit_normal(tri) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for v in tri {
            for c in v {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

/// Ray-parity inside test. The ray direction is tilted off the axes so it
/// avoids grazing the axis-aligned walls and edges of housing meshes.
pub fn point_in_mesh(mesh: &TriMesh, p: [f64; 3]) -> bool {
    const DIR: [f64; 3] = [1.234e-3, 2.345e-3, 1.0];
    let mut hits = 0usize;
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(i);
        // Cheap rejection: the ray barely moves in x/y before leaving the mesh.
        let reach = 10.0 * (1.0 + (a[2] - p[2]).abs().max((b[2] - p[2]).abs()).max((c[2] - p[2]).abs()));
        let (xmin, xmax) = (a[0].min(b[0]).min(c[0]), a[0].max(b[0]).max(c[0]));
        let (ymin, ymax) = (a[1].min(b[1]).min(c[1]), a[1].max(b[1]).max(c[1]));
        let slack = reach * 3e-3;
        if p[0] < xmin - slack || p[0] > xmax + slack || p[1] < ymin - slack || p[1] > ymax + slack {
            continue;
        }
        // Moller-Trumbore.
        let e1 = sub(b, a);
        let e2 = sub(c, a);
        let h = cross(DIR, e2);
        let det = dot(e1, h);
        if det.abs() < 1e-15 {
            continue;
        }
        let inv = 1.0 / det;
        let s = sub(p, a);
        let u = inv * dot(s, h);
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = cross(s, e1);
        let v = inv * dot(DIR, q);
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if inv * dot(e2, q) > 0.0 {
            hits += 1;
        }
    }
    hits % 2 == 1
}
