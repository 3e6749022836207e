//! Articulated capsule hands: a palm and five three-segment fingers.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Rotation3, Vector3};
use rand::Rng;

use super::mesh::HandMesh;

/// Surface of a tapered capsule from `a` (radius `ra`) to `b` (radius `rb`).
/// `n_lat` rings per hemisphere, `n_lon` vertices per ring.
pub fn capsule(a: Vector3<f64>, b: Vector3<f64>, ra: f64, rb: f64, n_lat: usize, n_lon: usize) -> HandMesh {
    let axis = (b - a).try_normalize(1e-12).unwrap_or_else(Vector3::z);
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    let mut vertices = Vec::with_capacity(2 * (n_lat + 1) * n_lon);
    for (center, r, phi0) in [(a, ra, -FRAC_PI_2), (b, rb, 0.0)] {
        for i in 0..=n_lat {
            let phi = phi0 + FRAC_PI_2 * i as f64 / n_lat as f64;
            for j in 0..n_lon {
                let lam = 2.0 * PI * j as f64 / n_lon as f64;
                let radial = e1 * lam.cos() + e2 * lam.sin();
                vertices.push(center + (radial * phi.cos() + axis * phi.sin()) * r);
            }
        }
    }
    let rings = 2 * (n_lat + 1);
    let mut faces = Vec::with_capacity(2 * (rings - 1) * n_lon);
    for i in 0..rings - 1 {
        for j in 0..n_lon {
            let (p, q) = (i * n_lon + j, i * n_lon + (j + 1) % n_lon);
            let (r, s) = (p + n_lon, q + n_lon);
            faces.push([p, q, s]);
            faces.push([p, s, r]);
        }
    }
    HandMesh::new(vertices, faces, a).expect("capsule geometry is finite")
}

pub fn uv_sphere(center: Vector3<f64>, r: f64, n_lat: usize, n_lon: usize) -> HandMesh {
    capsule(center, center, r, r, n_lat, n_lon)
}

/// Joint angles and placement of a hand. The unposed hand has its wrist at
/// the origin, fingers along +x and the palm facing −z.
#[derive(Debug, Clone, PartialEq)]
pub struct HandPose {
    pub wrist: Vector3<f64>,
    /// Rotation about +z, radians.
    pub yaw: f64,
    /// Downward pitch of the whole hand about its width axis, radians.
    pub tilt: f64,
    /// Flexion of each finger's three joints (thumb first), radians.
    pub curls: [[f64; 3]; 5],
    /// Extra angular spacing between neighboring fingers, radians.
    pub spread: f64,
}

impl Default for HandPose {
    fn default() -> Self {
        Self {
            wrist: Vector3::zeros(),
            yaw: 0.0,
            tilt: 0.35,
            curls: [[0.3, 0.2, 0.1]; 5],
            spread: 0.05,
        }
    }
}

const PHALANX_M: [[f64; 3]; 5] = [
    [0.040, 0.032, 0.028],
    [0.046, 0.027, 0.022],
    [0.050, 0.031, 0.024],
    [0.046, 0.029, 0.023],
    [0.038, 0.022, 0.020],
];
const FINGER_RADIUS_M: [f64; 5] = [0.0105, 0.0092, 0.0095, 0.0090, 0.0080];
const KNUCKLE_Y_M: [f64; 5] = [-0.040, -0.027, -0.009, 0.009, 0.027];

/// Triangulated surface of a posed hand; the wrist is the mesh origin.
pub fn hand_mesh(pose: &HandPose, n_lat: usize, n_lon: usize) -> HandMesh {
    let place = Rotation3::from_axis_angle(&Vector3::z_axis(), pose.yaw)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), pose.tilt);
    let to_world = |p: Vector3<f64>| pose.wrist + place * p;

    let mut mesh = capsule(
        to_world(Vector3::new(0.015, 0.0, 0.0)),
        to_world(Vector3::new(0.065, 0.0, 0.0)),
        0.028,
        0.030,
        n_lat,
        n_lon,
    );
    mesh = HandMesh::new(mesh.raw_vertices().to_vec(), mesh.faces().to_vec(), pose.wrist)
        .expect("palm geometry is finite");

    for f in 0..5 {
        let (mut p, heading) = if f == 0 {
            (Vector3::new(0.025, KNUCKLE_Y_M[0], -0.008), -0.9)
        } else {
            (
                Vector3::new(0.085, KNUCKLE_Y_M[f], -0.004),
                (f as f64 - 2.5) * pose.spread,
            )
        };
        let mut pitch = 0.0;
        let r = FINGER_RADIUS_M[f];
        for k in 0..3 {
            pitch += pose.curls[f][k];
            let dir = Rotation3::from_axis_angle(&Vector3::z_axis(), heading)
                * Rotation3::from_axis_angle(&Vector3::y_axis(), pitch)
                * Vector3::x();
            let q = p + dir * PHALANX_M[f][k];
            let (ra, rb) = (r * (1.0 - 0.06 * k as f64), r * (1.0 - 0.06 * (k + 1) as f64));
            mesh.append(&capsule(to_world(p), to_world(q), ra, rb, n_lat, n_lon));
            p = q;
        }
    }
    mesh
}

impl HandPose {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut curls = [[0.0; 3]; 5];
        for c in curls.iter_mut() {
            *c = [rng.gen_range(0.1..0.6), rng.gen_range(0.1..0.5), rng.gen_range(0.0..0.3)];
        }
        Self {
            wrist: Vector3::new(rng.gen_range(-0.11..-0.07), rng.gen_range(-0.02..0.02), 0.0),
            yaw: rng.gen_range(-0.3..0.3),
            tilt: rng.gen_range(0.2..0.45),
            curls,
            spread: rng.gen_range(0.0..0.12),
        }
    }

    fn jittered<R: Rng>(&self, rng: &mut R) -> Self {
        let mut p = self.clone();
        for c in p.curls.iter_mut().flatten() {
            *c += rng.gen_range(-0.04..0.04);
        }
        p.wrist.x += rng.gen_range(-0.003..0.003);
        p.wrist.y += rng.gen_range(-0.003..0.003);
        p.yaw += rng.gen_range(-0.02..0.02);
        p
    }
}

/// Lowers a hand until its deepest vertex sits `depth` meters below z = 0.
pub fn press_to_depth(mesh: &HandMesh, depth: f64) -> HandMesh {
    let lowest = mesh.vertices().map(|v| v.z).fold(f64::INFINITY, f64::min);
    mesh.translated(Vector3::new(0.0, 0.0, -depth - lowest))
}

/// A short sequence of a hand pressing into the plane z = 0 by 0.5 to 3 mm
/// at unit scale, with small pose changes between frames.
pub fn pressing_sequence<R: Rng>(rng: &mut R, frames: usize, n_lat: usize, n_lon: usize) -> Vec<HandMesh> {
    hidden_scale_sequence(rng, frames, 1.0, n_lat, n_lon)
}

/// Like [`pressing_sequence`], but the hand that actually presses is
/// `scale` times larger about the wrist. The returned meshes carry unit
/// scale, as a scale-unaware pose estimate would; `with_scale(scale)`
/// restores the pressing hand.
pub fn hidden_scale_sequence<R: Rng>(
    rng: &mut R,
    frames: usize,
    scale: f64,
    n_lat: usize,
    n_lon: usize,
) -> Vec<HandMesh> {
    let base = HandPose::random(rng);
    (0..frames)
        .map(|_| {
            let pose = base.jittered(rng);
            let depth = rng.gen_range(0.0005..0.003);
            let true_hand = hand_mesh(&pose, n_lat, n_lon)
                .with_scale(scale)
                .expect("hidden scale is positive");
            press_to_depth(&true_hand, depth).with_scale(1.0).unwrap()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capsule_vertices_lie_on_surface() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(0.0, 0.1, 0.0);
        let m = capsule(a, b, 0.01, 0.01, 6, 12);
        for v in m.vertices() {
            let t = v.y.clamp(0.0, 0.1);
            let d = (v - Vector3::new(0.0, t, 0.0)).norm();
            assert!((d - 0.01).abs() < 1e-12, "{v:?}");
        }
        assert_eq!(m.len(), 2 * 7 * 12);
        assert!(m.faces().iter().flatten().all(|&i| i < m.len()));
    }

    #[test]
    fn pressed_hand_touches_only_slightly() {
        let m = press_to_depth(&hand_mesh(&HandPose::default(), 8, 16), 0.002);
        let zmin = m.vertices().map(|v| v.z).fold(f64::INFINITY, f64::min);
        assert!((zmin + 0.002).abs() < 1e-12);
        assert!(m.origin().z > 0.02, "wrist at {}", m.origin().z);
    }
}
