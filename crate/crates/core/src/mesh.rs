//! Triangle meshes: STL ingestion, validation and rigid transforms.
//!
//! Meshes loaded from STL are translated so their area-weighted centroid sits
//! at the origin. Downstream imaging treats that point as the motion
//! compensation reference, so only rotational aspect change remains.

use std::collections::HashMap;

use thiserror::Error;

use crate::vec3::Vec3;

/// Triangles with area at or below this (m²) are degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// A centroid closer to the origin than this fraction of the bounding-box
/// diagonal counts as already centered; reloading a centered export then
/// leaves every vertex untouched.
const CENTER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("truncated STL: {0}")]
    Truncated(String),
    #[error("STL triangle count mismatch: header declares {declared}, payload holds {actual}")]
    CountMismatch { declared: usize, actual: usize },
    #[error("malformed ASCII STL at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("all {0} triangles are degenerate")]
    AllDegenerate(usize),
    #[error("mesh has no triangles")]
    Empty,
    #[error("non-finite coordinate in vertex {0}")]
    NonFinite(usize),
    #[error("triangle {triangle} references vertex {index} but only {len} vertices exist")]
    IndexOutOfRange { triangle: usize, index: u32, len: usize },
    #[error("triangle {0} is degenerate (area <= 1e-12 m^2)")]
    Degenerate(usize),
    #[error("invalid scale factor {0}")]
    BadScale(f64),
}

/// An immutable, validated triangle mesh in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
}

/// One STL facet before indexing.
#[derive(Clone, Copy, Debug)]
pub struct Facet {
    pub normal: Vec3,
    pub vertices: [Vec3; 3],
}

/// Result of [`load_stl`].
#[derive(Clone, Debug)]
pub struct StlLoad {
    pub mesh: TriangleMesh,
    /// Degenerate facets dropped during ingestion.
    pub dropped: usize,
    pub format: StlFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StlFormat {
    Binary,
    Ascii,
}

fn winding_normal(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    (b - a).cross(c - a)
}

fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * winding_normal(a, b, c).norm()
}

impl TriangleMesh {
    /// Builds a mesh from indexed triangles, deriving normals from winding.
    /// Degenerate triangles are rejected; use [`TriangleMesh::from_facets`]
    /// to drop them instead.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        let mut normals = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index as usize >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange { triangle: t, index, len: vertices.len() });
                }
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            let n = winding_normal(a, b, c);
            if 0.5 * n.norm() <= MIN_TRIANGLE_AREA {
                return Err(MeshError::Degenerate(t));
            }
            normals.push(n.normalize());
        }
        Ok(TriangleMesh { vertices, triangles, normals })
    }

    /// Indexes a facet soup, merging bit-identical vertices and dropping
    /// degenerate facets. Returns the mesh and the number of dropped facets.
    ///
    /// A facet's stored normal is kept (renormalized) when it is nonzero and
    /// within 90° of the winding normal; otherwise the winding normal is used.
    pub fn from_facets<I>(facets: I) -> Result<(Self, usize), MeshError>
    where
        I: IntoIterator<Item = Facet>,
    {
        let mut index_of: HashMap<[u64; 3], u32> = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut normals = Vec::new();
        let mut total = 0usize;
        let mut dropped = 0usize;

        for facet in facets {
            total += 1;
            if let Some(i) = facet.vertices.iter().position(|v| !v.is_finite()) {
                return Err(MeshError::NonFinite(vertices.len() + i));
            }
            let [a, b, c] = facet.vertices;
            let wn = winding_normal(a, b, c);
            if 0.5 * wn.norm() <= MIN_TRIANGLE_AREA {
                dropped += 1;
                continue;
            }
            let wn = wn.normalize();
            let normal = match facet.normal.try_normalize() {
                Some(n) if n.dot(wn) > 0.0 => n,
                _ => wn,
            };
            let mut tri = [0u32; 3];
            for (slot, v) in tri.iter_mut().zip(facet.vertices) {
                let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
                *slot = *index_of.entry(key).or_insert_with(|| {
                    vertices.push(v);
                    (vertices.len() - 1) as u32
                });
            }
            triangles.push(tri);
            normals.push(normal);
        }

        if triangles.is_empty() {
            return Err(if total == 0 { MeshError::Empty } else { MeshError::AllDegenerate(total) });
        }
        Ok((TriangleMesh { vertices, triangles, normals }, dropped))
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Corner positions of triangle `t`.
    #[inline]
    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        triangle_area(a, b, c)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted centroid of the surface.
    pub fn centroid(&self) -> Vec3 {
        let mut acc = Vec3::ZERO;
        let mut area = 0.0;
        for t in 0..self.len() {
            let [a, b, c] = self.corners(t);
            let w = triangle_area(a, b, c);
            acc += (a + b + c) * (w / 3.0);
            area += w;
        }
        acc / area
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for t in &self.triangles {
            for &i in t {
                let v = self.vertices[i as usize];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Largest distance from `center` to any referenced vertex.
    pub fn radius_about(&self, center: Vec3) -> f64 {
        self.triangles
            .iter()
            .flatten()
            .map(|&i| (self.vertices[i as usize] - center).norm())
            .fold(0.0, f64::max)
    }

    fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3, g: impl Fn(Vec3) -> Vec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().copied().map(f).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.iter().copied().map(g).collect(),
        }
    }

    pub fn translated(&self, offset: Vec3) -> TriangleMesh {
        self.map_vertices(|v| v + offset, |n| n)
    }

    /// Uniform scale about the origin.
    pub fn scaled(&self, factor: f64) -> Result<TriangleMesh, MeshError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(MeshError::BadScale(factor));
        }
        let scaled = self.map_vertices(|v| v * factor, |n| n);
        for t in 0..scaled.len() {
            if scaled.triangle_area(t) <= MIN_TRIANGLE_AREA {
                return Err(MeshError::Degenerate(t));
            }
        }
        Ok(scaled)
    }

    /// Moves the area-weighted centroid to the origin and rounds vertices to
    /// single precision so that a binary STL export reloads bit-identically.
    pub fn centered(&self) -> TriangleMesh {
        let c = self.centroid();
        let (lo, hi) = self.bounds();
        let diag = (hi - lo).norm();
        if c.norm() <= CENTER_TOLERANCE * diag {
            return self.clone();
        }
        let q = |v: f64| v as f32 as f64;
        self.map_vertices(|v| {
            let s = v - c;
            Vec3::new(q(s.x), q(s.y), q(s.z))
        }, |n| n)
    }
}

/// Rotates the mesh about the vertical (+z) axis through its centroid.
pub fn rotate_mesh(mesh: &TriangleMesh, yaw_deg: f64) -> TriangleMesh {
    let c = mesh.centroid();
    let angle = yaw_deg.to_radians();
    mesh.map_vertices(|v| c + (v - c).rotate_z(angle), |n| n.rotate_z(angle))
}

/// Parses a binary or ASCII STL, drops degenerate facets and centers the mesh.
pub fn load_stl(bytes: &[u8]) -> Result<StlLoad, MeshError> {
    let (facets, format) = parse_stl(bytes)?;
    let (mesh, dropped) = TriangleMesh::from_facets(facets)?;
    Ok(StlLoad { mesh: mesh.centered(), dropped, format })
}

fn parse_stl(bytes: &[u8]) -> Result<(Vec<Facet>, StlFormat), MeshError> {
    if bytes.len() >= 84 {
        let declared = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if declared.checked_mul(50).and_then(|n| n.checked_add(84)) == Some(bytes.len()) {
            return Ok((parse_binary(bytes, declared), StlFormat::Binary));
        }
    }
    if looks_ascii(bytes) {
        return Ok((parse_ascii(bytes)?, StlFormat::Ascii));
    }
    if bytes.len() < 84 {
        return Err(MeshError::Truncated(format!(
            "{} bytes is shorter than the 84-byte binary header",
            bytes.len()
        )));
    }
    let declared = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let payload = bytes.len() - 84;
    if payload < declared.saturating_mul(50) {
        return Err(MeshError::Truncated(format!(
            "header declares {declared} triangles ({} bytes) but only {payload} bytes follow",
            declared.saturating_mul(50)
        )));
    }
    Err(MeshError::CountMismatch { declared, actual: payload / 50 })
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let head = &bytes[..bytes.len().min(512)];
    let text = String::from_utf8_lossy(head);
    text.trim_start().starts_with("solid") && std::str::from_utf8(bytes).is_ok()
}

fn parse_binary(bytes: &[u8], count: usize) -> Vec<Facet> {
    let f = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
    let v = |off: usize| Vec3::new(f(off), f(off + 4), f(off + 8));
    (0..count)
        .map(|i| {
            let base = 84 + 50 * i;
            Facet {
                normal: v(base),
                vertices: [v(base + 12), v(base + 24), v(base + 36)],
            }
        })
        .collect()
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<Facet>, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::Parse { line: 0, msg: e.to_string() })?;
    let mut tokens = text
        .lines()
        .enumerate()
        .flat_map(|(n, l)| l.split_whitespace().map(move |t| (n + 1, t)));

    let mut next = |what: &str| -> Result<(usize, &str), MeshError> {
        tokens
            .next()
            .ok_or_else(|| MeshError::Truncated(format!("ASCII STL ended while expecting {what}")))
    };
    fn expect(tok: (usize, &str), want: &str) -> Result<(), MeshError> {
        if tok.1.eq_ignore_ascii_case(want) {
            Ok(())
        } else {
            Err(MeshError::Parse { line: tok.0, msg: format!("expected `{want}`, found `{}`", tok.1) })
        }
    }
    fn number(tok: (usize, &str)) -> Result<f64, MeshError> {
        tok.1
            .parse::<f32>()
            .map(f64::from)
            .map_err(|_| MeshError::Parse { line: tok.0, msg: format!("bad number `{}`", tok.1) })
    }

    expect(next("solid")?, "solid")?;
    let mut facets = Vec::new();
    // Skip the optional solid name.
    let mut tok = next("facet")?;
    while !tok.1.eq_ignore_ascii_case("facet") && !tok.1.eq_ignore_ascii_case("endsolid") {
        tok = next("facet")?;
    }
    loop {
        if tok.1.eq_ignore_ascii_case("endsolid") {
            break;
        }
        expect(tok, "facet")?;
        expect(next("normal")?, "normal")?;
        let normal = Vec3::new(number(next("nx")?)?, number(next("ny")?)?, number(next("nz")?)?);
        expect(next("outer")?, "outer")?;
        expect(next("loop")?, "loop")?;
        let mut corners = [Vec3::ZERO; 3];
        for c in &mut corners {
            expect(next("vertex")?, "vertex")?;
            *c = Vec3::new(number(next("x")?)?, number(next("y")?)?, number(next("z")?)?);
        }
        expect(next("endloop")?, "endloop")?;
        expect(next("endfacet")?, "endfacet")?;
        facets.push(Facet { normal, vertices: corners });
        tok = next("facet or endsolid")?;
    }
    Ok(facets)
}

/// Serializes as little-endian binary STL (single-precision coordinates).
pub fn to_binary_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.len());
    let mut header = [0u8; 80];
    let tag = b"isarsim binary STL";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.len() as u32).to_le_bytes());
    let put = |v: Vec3, out: &mut Vec<u8>| {
        for c in v.to_array() {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    };
    for t in 0..mesh.len() {
        put(mesh.normals[t], &mut out);
        for v in mesh.corners(t) {
            put(v, &mut out);
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

/// Serializes as ASCII STL.
pub fn to_ascii_stl(mesh: &TriangleMesh, name: &str) -> String {
    use std::fmt::Write;
    let mut s = format!("solid {name}\n");
    for t in 0..mesh.len() {
        let n = mesh.normals[t];
        let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n.x, n.y, n.z);
        s.push_str("    outer loop\n");
        for v in mesh.corners(t) {
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v.x as f32, v.y as f32, v.z as f32);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s
}
