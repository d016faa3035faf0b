//! Procedural meshes: canonical scatterers, a Slicy-style calibration target
//! and coarse aircraft surrogates for the seven-class table.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::mesh::TriangleMesh;
use crate::vec3::Vec3;

/// Footprint and height of the Slicy calibration block, in meters.
pub const SLICY_WIDTH_M: f64 = 2.445;
pub const SLICY_LENGTH_M: f64 = 2.75;
pub const SLICY_BOX_HEIGHT_M: f64 = 0.765;
/// Height of the tallest cylinder above the block top.
pub const SLICY_CYLINDER_EXTRA_M: f64 = 0.915;
pub const SLICY_FACE_COUNT: usize = 6400;

/// Incremental triangle soup with orientation helpers.
#[derive(Default)]
struct Builder {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl Builder {
    fn vertex(&mut self, v: Vec3) -> u32 {
        self.vertices.push(v);
        (self.vertices.len() - 1) as u32
    }

    /// Adds a triangle wound so its normal points along `outward`.
    fn tri(&mut self, a: Vec3, b: Vec3, c: Vec3, outward: Vec3) {
        let (b, c) = if (b - a).cross(c - a).dot(outward) < 0.0 { (c, b) } else { (b, c) };
        let ia = self.vertex(a);
        let ib = self.vertex(b);
        let ic = self.vertex(c);
        self.triangles.push([ia, ib, ic]);
    }

    /// Parallelogram `origin + s·eu + t·ev`, s,t ∈ [0,1], split into a
    /// `nu × nv` grid of quads (two triangles each).
    fn grid(&mut self, origin: Vec3, eu: Vec3, ev: Vec3, nu: usize, nv: usize, outward: Vec3) {
        for i in 0..nu {
            for j in 0..nv {
                let p = |a: usize, b: usize| origin + eu * (a as f64 / nu as f64) + ev * (b as f64 / nv as f64);
                let (p00, p10, p01, p11) = (p(i, j), p(i + 1, j), p(i, j + 1), p(i + 1, j + 1));
                self.tri(p00, p10, p11, outward);
                self.tri(p00, p11, p01, outward);
            }
        }
    }

    /// Axis-aligned rectangle in a plane of constant `axis`, tessellated at
    /// roughly `cell` meters.
    fn rect(&mut self, axis: usize, level: f64, lo: (f64, f64), hi: (f64, f64), outward: f64, cell: f64) {
        let (nu, nv) = (cells(hi.0 - lo.0, cell), cells(hi.1 - lo.1, cell));
        let (origin, eu, ev, n) = match axis {
            0 => (Vec3::new(level, lo.0, lo.1), Vec3::new(0.0, hi.0 - lo.0, 0.0), Vec3::new(0.0, 0.0, hi.1 - lo.1), Vec3::new(outward, 0.0, 0.0)),
            1 => (Vec3::new(lo.0, level, lo.1), Vec3::new(hi.0 - lo.0, 0.0, 0.0), Vec3::new(0.0, 0.0, hi.1 - lo.1), Vec3::new(0.0, outward, 0.0)),
            _ => (Vec3::new(lo.0, lo.1, level), Vec3::new(hi.0 - lo.0, 0.0, 0.0), Vec3::new(0.0, hi.1 - lo.1, 0.0), Vec3::new(0.0, 0.0, outward)),
        };
        self.grid(origin, eu, ev, nu, nv, n);
    }

    /// Vertical cylindrical wall around `center` (base point) from z0 to z1.
    /// `inward` flips the normals toward the axis (cavity interiors).
    /// Facet centers sit at multiples of 360°/segments.
    #[allow(clippy::too_many_arguments)]
    fn cylinder_wall(&mut self, center: Vec3, radius: f64, z0: f64, z1: f64, segments: usize, rows: usize, inward: bool) {
        for s in 0..segments {
            let a0 = TAU * (s as f64 - 0.5) / segments as f64;
            let a1 = TAU * (s as f64 + 0.5) / segments as f64;
            let mid = 0.5 * (a0 + a1);
            let mut n = Vec3::new(mid.cos(), mid.sin(), 0.0);
            if inward {
                n = -n;
            }
            let rim = |a: f64, z: f64| center + Vec3::new(radius * a.cos(), radius * a.sin(), z);
            for r in 0..rows {
                let za = z0 + (z1 - z0) * r as f64 / rows as f64;
                let zb = z0 + (z1 - z0) * (r + 1) as f64 / rows as f64;
                self.tri(rim(a0, za), rim(a1, za), rim(a1, zb), n);
                self.tri(rim(a0, za), rim(a1, zb), rim(a0, zb), n);
            }
        }
    }

    /// Horizontal disc (inner = 0) or annulus at height z, facing up or down.
    fn ring(&mut self, center: Vec3, inner: f64, outer: f64, z: f64, segments: usize, up: bool) {
        let n = Vec3::new(0.0, 0.0, if up { 1.0 } else { -1.0 });
        let c = center + Vec3::new(0.0, 0.0, z);
        for s in 0..segments {
            let a0 = TAU * (s as f64 - 0.5) / segments as f64;
            let a1 = TAU * (s as f64 + 0.5) / segments as f64;
            let p = |r: f64, a: f64| c + Vec3::new(r * a.cos(), r * a.sin(), 0.0);
            if inner == 0.0 {
                self.tri(c, p(outer, a0), p(outer, a1), n);
            } else {
                self.tri(p(inner, a0), p(outer, a0), p(outer, a1), n);
                self.tri(p(inner, a0), p(outer, a1), p(inner, a1), n);
            }
        }
    }

    /// Closed prism over a convex planar polygon, extruded by `depth`.
    fn prism(&mut self, base: &[Vec3], depth: Vec3) {
        let k = base.len();
        let top: Vec<Vec3> = base.iter().map(|&p| p + depth).collect();
        let center = base.iter().chain(&top).fold(Vec3::ZERO, |a, &p| a + p) / (2 * k) as f64;
        for i in 1..k - 1 {
            let nb = (base[i] - base[0]).cross(base[i + 1] - base[0]);
            let out_b = if nb.dot(base[0] - center) > 0.0 { nb } else { -nb };
            self.tri(base[0], base[i], base[i + 1], out_b);
            self.tri(top[0], top[i], top[i + 1], -out_b);
        }
        for i in 0..k {
            let j = (i + 1) % k;
            let mid = (base[i] + base[j] + top[i] + top[j]) / 4.0;
            let out = mid - center;
            self.tri(base[i], base[j], top[j], out);
            self.tri(base[i], top[j], top[i], out);
        }
    }

    fn count(&self) -> usize {
        self.triangles.len()
    }

    fn finish(self) -> TriangleMesh {
        TriangleMesh::new(self.vertices, self.triangles).expect("procedural mesh is valid")
    }
}

fn cells(extent: f64, cell: f64) -> usize {
    ((extent / cell).ceil() as usize).max(1)
}

/// Axis-aligned unit cube centered on the origin (12 triangles).
pub fn unit_cube() -> TriangleMesh {
    let mut b = Builder::default();
    for axis in 0..3 {
        for side in [-0.5, 0.5] {
            b.rect(axis, side, (-0.5, -0.5), (0.5, 0.5), side.signum(), 1.0);
        }
    }
    b.finish()
}

/// Flat rectangular plate in the plane x = `x`, facing +x, centered on the
/// x axis.
pub fn plate_facing_x(width: f64, height: f64, x: f64, subdivisions: usize) -> TriangleMesh {
    let mut b = Builder::default();
    b.grid(
        Vec3::new(x, -width / 2.0, -height / 2.0),
        Vec3::new(0.0, width, 0.0),
        Vec3::new(0.0, 0.0, height),
        subdivisions,
        subdivisions,
        Vec3::new(1.0, 0.0, 0.0),
    );
    b.finish()
}

/// 90° dihedral: faces on x = 0 and y = 0 meeting along the z axis, opening
/// toward +x+y. Each face is `side` wide and `height` tall.
pub fn dihedral(side: f64, height: f64) -> TriangleMesh {
    let mut b = Builder::default();
    let h = height / 2.0;
    b.rect(0, 0.0, (0.0, -h), (side, h), 1.0, side / 4.0);
    b.rect(1, 0.0, (0.0, -h), (side, h), 1.0, side / 4.0);
    b.finish()
}

/// Trihedral corner reflector: square faces on the three coordinate planes
/// in the positive octant; the symmetry axis is (1, 1, 1).
pub fn trihedral(side: f64) -> TriangleMesh {
    let mut b = Builder::default();
    for axis in 0..3 {
        b.rect(axis, 0.0, (0.0, 0.0), (side, side), 1.0, side / 4.0);
    }
    b.finish()
}

/// Slicy-style calibration target with exactly [`SLICY_FACE_COUNT`] faces,
/// centered on its surface centroid.
///
/// A 2.445 × 2.75 × 0.765 m block with a lowered corner step (dihedral and
/// trihedral corners), a tall solid cylinder, a top hat, and an open hollow
/// cylinder (cavity) on top.
pub fn slicy() -> TriangleMesh {
    let (w, l, h) = (SLICY_WIDTH_M, SLICY_LENGTH_M, SLICY_BOX_HEIGHT_M);
    let (a, bn, h1) = (1.2, 1.3, 0.38);
    let cell = 0.1;
    let mut b = Builder::default();

    // Upper block top (L-shaped) and the lowered step floor.
    b.rect(2, h, (a, 0.0), (w, bn), 1.0, cell);
    b.rect(2, h, (0.0, bn), (w, l), 1.0, cell);
    b.rect(2, h1, (0.0, 0.0), (a, bn), 1.0, cell);
    // Step walls.
    b.rect(0, a, (0.0, h1), (bn, h), -1.0, cell);
    b.rect(1, bn, (0.0, h1), (a, h), -1.0, cell);
    // Outer walls.
    b.rect(0, 0.0, (0.0, 0.0), (bn, h1), -1.0, cell);
    b.rect(0, 0.0, (bn, 0.0), (l, h), -1.0, cell);
    b.rect(1, 0.0, (0.0, 0.0), (a, h1), -1.0, cell);
    b.rect(1, 0.0, (a, 0.0), (w, h), -1.0, cell);
    b.rect(0, w, (0.0, 0.0), (l, h), 1.0, cell);
    b.rect(1, l, (0.0, 0.0), (w, h), 1.0, cell);

    // Tall solid cylinder beside the step.
    let tall = Vec3::new(1.82, 0.65, 0.0);
    b.cylinder_wall(tall, 0.3, h, h + SLICY_CYLINDER_EXTRA_M, 64, 8, false);
    b.ring(tall, 0.0, 0.3, h + SLICY_CYLINDER_EXTRA_M, 64, true);

    // Top hat: brim disc with a crown on it.
    let hat = Vec3::new(0.6, 2.05, 0.0);
    let brim_top = h + 0.04;
    b.cylinder_wall(hat, 0.35, h, brim_top, 48, 1, false);
    b.ring(hat, 0.2, 0.35, brim_top, 48, true);
    b.cylinder_wall(hat, 0.2, brim_top, brim_top + 0.3, 48, 4, false);
    b.ring(hat, 0.0, 0.2, brim_top + 0.3, 48, true);

    // Hollow cylinder; the block top is its floor.
    let cup = Vec3::new(1.8, 2.05, 0.0);
    b.cylinder_wall(cup, 0.3, h, h + 0.4, 64, 4, false);
    b.cylinder_wall(cup, 0.24, h, h + 0.4, 64, 4, true);
    b.ring(cup, 0.24, 0.3, h + 0.4, 64, true);

    // Underside: never illuminated from positive elevations, so it absorbs
    // the remaining face budget as strips.
    let remaining = SLICY_FACE_COUNT - b.count();
    assert!(remaining >= 2 && remaining.is_multiple_of(2), "slicy face budget: {remaining} left");
    b.grid(Vec3::ZERO, Vec3::new(w, 0.0, 0.0), Vec3::new(0.0, l, 0.0), remaining / 2, 1, Vec3::new(0.0, 0.0, -1.0));

    b.finish().centered()
}

/// Coarse airframe parameters for a surrogate target.
#[derive(Clone, Copy, Debug)]
struct Airframe {
    length: f64,
    span: f64,
    fuselage_radius: f64,
    /// Leading-edge sweep of the main wing, degrees.
    sweep_deg: f64,
    root_chord: f64,
    tip_chord: f64,
    twin_tails: bool,
    canards: bool,
    tail_height: f64,
}

fn airframe(class: &str) -> Option<Airframe> {
    let a = |length, span, sweep_deg, root_chord, tip_chord, twin_tails, canards, tail_height| Airframe {
        length,
        span,
        fuselage_radius: 0.06 * length,
        sweep_deg,
        root_chord,
        tip_chord,
        twin_tails,
        canards,
        tail_height,
    };
    Some(match class {
        "F15" => a(19.4, 13.0, 45.0, 6.0, 1.6, true, false, 3.0),
        "F16" => a(15.0, 9.96, 40.0, 5.0, 1.1, false, false, 3.2),
        "J11" => a(21.9, 14.7, 42.0, 6.8, 1.5, true, false, 3.4),
        "J15" => a(21.9, 14.7, 42.0, 6.8, 1.5, true, true, 3.4),
        "MIG29" => a(17.3, 11.4, 42.0, 5.6, 1.3, true, false, 2.8),
        "MIG35" => a(17.3, 12.0, 42.0, 5.9, 1.4, true, false, 2.9),
        "EF2000" => a(15.96, 10.95, 53.0, 7.0, 0.9, false, true, 2.6),
        _ => return None,
    })
}

/// Surface of revolution about the x axis through `(x, r)` stations, wound
/// with radially outward normals. Stations with r = 0 collapse to a point.
/// Facet centers sit at multiples of 360°/segments.
fn revolve(b: &mut Builder, center: Vec3, profile: &[(f64, f64)], segments: usize) {
    let at = |x: f64, r: f64, a: f64| center + Vec3::new(x, r * a.cos(), r * a.sin());
    for w in profile.windows(2) {
        let ((x0, r0), (x1, r1)) = (w[0], w[1]);
        for s in 0..segments {
            let a0 = TAU * (s as f64 - 0.5) / segments as f64;
            let a1 = TAU * (s as f64 + 0.5) / segments as f64;
            let mid = 0.5 * (a0 + a1);
            let out = Vec3::new(0.0, mid.cos(), mid.sin());
            if r0 > 0.0 {
                b.tri(at(x0, r0, a0), at(x1, r1, a0), at(x0, r0, a1), out);
            }
            if r1 > 0.0 {
                b.tri(at(x0, r0, a1), at(x1, r1, a0), at(x1, r1, a1), out);
            }
        }
    }
}

/// Blind circular duct along x: a tube from the open mouth at `mouth_x`
/// to a closed back wall `depth` further along `-dir`.
fn duct(b: &mut Builder, center: Vec3, radius: f64, mouth_x: f64, depth: f64, dir: f64, segments: usize) {
    let back = mouth_x - dir * depth;
    revolve(b, center, &[(mouth_x, radius), (back, radius)], segments);
    let back_center = center + Vec3::new(back, 0.0, 0.0);
    for s in 0..segments {
        let a0 = TAU * (s as f64 - 0.5) / segments as f64;
        let a1 = TAU * (s as f64 + 0.5) / segments as f64;
        let p = |a: f64| back_center + Vec3::new(0.0, radius * a.cos(), radius * a.sin());
        b.tri(back_center, p(a0), p(a1), Vec3::new(dir, 0.0, 0.0));
    }
}

/// A fuselage + wing + tail surrogate for one of the seven class names,
/// nose toward +x. `None` for unknown names.
///
/// The fuselage has an elliptical nose and a blind nozzle, with blind
/// intake ducts and a canopy, so every aspect sees some specular feature.
pub fn aircraft_surrogate(class: &str) -> Option<TriangleMesh> {
    let af = airframe(class)?;
    let mut b = Builder::default();
    let r = af.fuselage_radius;
    let half = af.length / 2.0;
    let nose_len = 0.18 * af.length;
    let segs = 72;

    // Fuselage profile: elliptical nose sampled every 2.5° of surface slope,
    // straight wing-root section, tapered tail.
    let x_nose_base = half - nose_len;
    let x_tail = -half;
    let r_nozzle = 0.6 * r;
    let mut profile = vec![(x_tail, r_nozzle), (x_tail + 0.15 * af.length, r)];
    // Barrel-shaped sections fore and aft of the wing root, slopes up to ±8°
    // in 2° steps, so the near-broadside glint is not hidden behind the root
    // panels.
    let x_root_le = 0.15 * af.length;
    let (x_root_te, xa) = (x_root_le - af.root_chord, x_tail + 0.15 * af.length);
    for (x0, x1) in [(xa, x_root_te), (x_root_le, x_nose_base)] {
        let h = 0.5 * (x1 - x0);
        let bulge = 0.5 * h * 8f64.to_radians().tan();
        for i in 1..=8 {
            let x = x0 + (x1 - x0) * i as f64 / 8.0;
            let u = (x - x0 - h) / h;
            profile.push((x, r + bulge * (1.0 - u * u)));
        }
    }
    for i in 1..=36 {
        let psi = (90.0 * i as f64 / 36.0).to_radians();
        let t = if i == 36 { FRAC_PI_2 } else { ((nose_len / r) * psi.tan()).atan() };
        profile.push((x_nose_base + nose_len * t.sin(), if i == 36 { 0.0 } else { r * t.cos() }));
    }
    revolve(&mut b, Vec3::ZERO, &profile, segs);
    duct(&mut b, Vec3::ZERO, r_nozzle, x_tail, 1.2 * r_nozzle, -1.0, segs);

    // Intakes beside the fuselage, under the wing roots.
    let r_in = 0.45 * r;
    let mouth = x_nose_base - 0.4;
    for side in [1.0, -1.0] {
        let c = Vec3::new(0.0, side * (r + 0.8 * r_in), -0.35 * r);
        duct(&mut b, c, r_in, mouth, 2.0 * r_in, 1.0, 36);
    }

    // Canopy: upper half of an ellipsoid.
    let canopy = Vec3::new(x_nose_base - 0.08 * af.length, 0.0, 0.7 * r);
    let (ca, cb, cc) = (0.1 * af.length, 0.55 * r, 0.7 * r);
    let (lat, lon) = (10, 48);
    let p = |i: usize, j: usize| {
        let th = FRAC_PI_2 * i as f64 / lat as f64;
        let ph = TAU * j as f64 / lon as f64;
        canopy + Vec3::new(ca * th.cos() * ph.cos(), cb * th.cos() * ph.sin(), cc * th.sin())
    };
    for i in 0..lat {
        for j in 0..lon {
            let out = (p(i, j) + p(i + 1, j + 1)) * 0.5 - canopy;
            b.tri(p(i, j), p(i, j + 1), p(i + 1, j + 1), out);
            if i + 1 < lat {
                b.tri(p(i, j), p(i + 1, j + 1), p(i + 1, j), out);
            }
        }
    }

    // Main wings as thin trapezoidal slabs.
    let thickness = 0.12;
    let semi = af.span / 2.0;
    let sweep = af.sweep_deg.to_radians().tan() * (semi - r);
    for side in [1.0, -1.0] {
        let wing = [
            Vec3::new(x_root_le, side * r * 0.9, -thickness / 2.0),
            Vec3::new(x_root_le - sweep, side * semi, -thickness / 2.0),
            Vec3::new(x_root_le - sweep - af.tip_chord, side * semi, -thickness / 2.0),
            Vec3::new(x_root_le - af.root_chord, side * r * 0.9, -thickness / 2.0),
        ];
        b.prism(&wing, Vec3::new(0.0, 0.0, thickness));

        // Flat fuselage side panel and a nacelle box on the wing root. The
        // box's front and rear faces close two corner reflectors with the
        // panel and the wing top.
        let top = thickness / 2.0;
        let (x_front, x_back) = (x_root_le - 0.3 * af.root_chord, x_root_le - 0.7 * af.root_chord);
        let (nacelle_w, nacelle_h) = (0.9, 0.6 * r);
        let y_panel = side * r;
        b.rect(1, y_panel, (x_root_le - af.root_chord, top), (x_root_le, top + 0.9 * r), side, 0.5);
        let base = [
            Vec3::new(x_front, y_panel, top),
            Vec3::new(x_front, y_panel + side * nacelle_w, top),
            Vec3::new(x_back, y_panel + side * nacelle_w, top),
            Vec3::new(x_back, y_panel, top),
        ];
        b.prism(&base, Vec3::new(0.0, 0.0, nacelle_h));

        // Horizontal stabilizers.
        let hs = 0.35 * semi;
        let stab = [
            Vec3::new(x_tail + 2.2, side * r * 0.9, -thickness / 2.0),
            Vec3::new(x_tail + 0.9, side * (r + hs), -thickness / 2.0),
            Vec3::new(x_tail + 0.2, side * (r + hs), -thickness / 2.0),
            Vec3::new(x_tail, side * r * 0.9, -thickness / 2.0),
        ];
        b.prism(&stab, Vec3::new(0.0, 0.0, thickness));

        if af.canards {
            let cx = x_nose_base - 0.5;
            let canard = [
                Vec3::new(cx, side * r * 0.9, -thickness / 2.0),
                Vec3::new(cx - 0.8, side * (r + 1.4), -thickness / 2.0),
                Vec3::new(cx - 1.3, side * (r + 1.4), -thickness / 2.0),
                Vec3::new(cx - 1.6, side * r * 0.9, -thickness / 2.0),
            ];
            b.prism(&canard, Vec3::new(0.0, 0.0, thickness));
        }
    }

    // Vertical tails.
    let fin_offsets: &[f64] = if af.twin_tails { &[1.0, -1.0] } else { &[0.0] };
    for &side in fin_offsets {
        let y = side * 0.8 * r;
        let fin = [
            Vec3::new(x_tail + 3.0, y - thickness / 2.0, r * 0.5),
            Vec3::new(x_tail + 1.0, y - thickness / 2.0, r + af.tail_height),
            Vec3::new(x_tail + 0.2, y - thickness / 2.0, r + af.tail_height),
            Vec3::new(x_tail, y - thickness / 2.0, r * 0.5),
        ];
        b.prism(&fin, Vec3::new(0.0, thickness, 0.0));
    }

    Some(b.finish().centered())
}
