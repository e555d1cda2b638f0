//! Feature-level stereo camera.
//!
//! Landmarks are projected through a pinhole model with Brown-Conrady
//! distortion into a rectified stereo pair; no images are rendered. Camera
//! coordinates use the optical convention: `+z` along the optical axis, `+x`
//! right, `+y` down. The right eye sits `baseline` metres along `+x`.

use crate::geometry::{Pose, UnitQuat, Vec3};
use crate::rng::RngStream;
use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CameraError {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("landmark file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub skew: f64,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default)]
    pub k3: f64,
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    #[serde(default)]
    pub noise_mean: f64,
    #[serde(default)]
    pub noise_stddev: f64,
    pub near: f64,
    pub far: f64,
    pub baseline: f64,
}

impl Default for CameraIntrinsics {
    /// 752x480 global-shutter stereo head, 6 cm baseline, no distortion.
    fn default() -> Self {
        Self {
            width: 752,
            height: 480,
            fx: 400.0,
            fy: 400.0,
            cx: 376.0,
            cy: 240.0,
            skew: 0.0,
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            p1: 0.0,
            p2: 0.0,
            noise_mean: 0.0,
            noise_stddev: 0.0,
            near: 0.1,
            far: 100.0,
            baseline: 0.06,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), CameraError> {
        use CameraError::InvalidIntrinsics as E;
        if self.width == 0 || self.height == 0 {
            return Err(E("image size must be positive"));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(E("focal lengths must be positive"));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(E("clip planes must satisfy 0 < near < far"));
        }
        if !(self.baseline > 0.0) {
            return Err(E("baseline must be positive"));
        }
        if !(self.noise_stddev >= 0.0) {
            return Err(E("noise stddev must be non-negative"));
        }
        Ok(())
    }

    /// Applies radial and tangential distortion to normalized coordinates.
    /// The distortion centre is the principal point.
    pub fn distort(&self, x: f64, y: f64) -> (f64, f64) {
        let r2 = x * x + y * y;
        let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2 + self.k3 * r2 * r2 * r2;
        let xd = x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x);
        let yd = y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y;
        (xd, yd)
    }

    pub fn in_frame(&self, u: f64, v: f64) -> bool {
        (0.0..self.width as f64).contains(&u) && (0.0..self.height as f64).contains(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cull {
    ClipPlane,
    OutOfFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Visible { u: f64, v: f64 },
    NotVisible(Cull),
}

impl Projection {
    pub fn pixel(self) -> Option<(f64, f64)> {
        match self {
            Projection::Visible { u, v } => Some((u, v)),
            Projection::NotVisible(_) => None,
        }
    }
}

/// Projects a point given in camera (optical) coordinates.
pub fn project(point_cam: &Vec3, intr: &CameraIntrinsics) -> Projection {
    let z = point_cam.z;
    if !(z >= intr.near && z <= intr.far) {
        return Projection::NotVisible(Cull::ClipPlane);
    }
    let (xd, yd) = intr.distort(point_cam.x / z, point_cam.y / z);
    let u = intr.fx * xd + intr.skew * yd + intr.cx;
    let v = intr.fy * yd + intr.cy;
    if intr.in_frame(u, v) {
        Projection::Visible { u, v }
    } else {
        Projection::NotVisible(Cull::OutOfFrame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: u32,
    pub p: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoObservation {
    pub landmark_id: u32,
    pub ul: f64,
    pub vl: f64,
    pub ur: f64,
    pub vr: f64,
}

/// Observes landmarks from a camera pose (optical frame to world).
///
/// Pixel noise is drawn for every landmark visible in both eyes, in the order
/// `uL, vL, uR, vR`; an observation pushed out of either image by the noise is
/// dropped.
pub fn stereo_observe(
    landmarks: &[Landmark],
    cam_pose: &Pose,
    intr: &CameraIntrinsics,
    rng: &mut RngStream,
) -> Vec<StereoObservation> {
    let q_inv = cam_pose.q.inverse();
    let right_offset = Vec3::new(intr.baseline, 0.0, 0.0);
    let mut out = Vec::new();
    for lm in landmarks {
        let pc = q_inv * (lm.p - cam_pose.p);
        let (Some((ul, vl)), Some((ur, vr))) = (project(&pc, intr).pixel(), project(&(pc - right_offset), intr).pixel())
        else {
            continue;
        };
        let obs = if intr.noise_stddev > 0.0 || intr.noise_mean != 0.0 {
            let mut noisy = |x: f64| x + rng.normal(intr.noise_mean, intr.noise_stddev);
            StereoObservation {
                landmark_id: lm.id,
                ul: noisy(ul),
                vl: noisy(vl),
                ur: noisy(ur),
                vr: noisy(vr),
            }
        } else {
            StereoObservation {
                landmark_id: lm.id,
                ul,
                vl,
                ur,
                vr,
            }
        };
        if intr.in_frame(obs.ul, obs.vl) && intr.in_frame(obs.ur, obs.vr) {
            out.push(obs);
        }
    }
    out
}

/// Rigid mount of the left camera on the vehicle body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraMount {
    /// Left optical centre in the body frame (m).
    pub offset: Vec3,
    /// Optical-to-body rotation.
    pub rotation: UnitQuat,
}

impl CameraMount {
    /// Forward-looking camera: optical `z` along body `x`, optical `x` along
    /// body `-y`, optical `y` along body `-z`.
    pub fn forward(offset: Vec3) -> Self {
        let cols = Matrix3::from_columns(&[-Vec3::y(), -Vec3::z(), Vec3::x()]);
        let rot = Rotation3::from_matrix_unchecked(cols);
        Self {
            offset,
            rotation: UnitQuat::from_rotation_matrix(&rot),
        }
    }

    /// World pose of the left camera for a vehicle pose.
    pub fn camera_pose(&self, body: &Pose) -> Pose {
        Pose::new(body.t, body.p + body.q * self.offset, body.q * self.rotation)
    }
}

impl Default for CameraMount {
    fn default() -> Self {
        Self::forward(Vec3::new(0.1, 0.03, 0.0))
    }
}

/// Uniformly distributed landmarks inside an axis-aligned box.
pub fn generate_landmarks(n: usize, min: &Vec3, max: &Vec3, seed: u64) -> Vec<Landmark> {
    let mut rng = RngStream::new(seed, u64::MAX);
    (0..n)
        .map(|i| Landmark {
            id: i as u32,
            p: Vec3::new(
                rng.uniform(min.x, max.x),
                rng.uniform(min.y, max.y),
                rng.uniform(min.z, max.z),
            ),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct LandmarkRow {
    id: u32,
    x: f64,
    y: f64,
    z: f64,
}

/// Reads a world landmark file (`id,x,y,z` with header).
pub fn read_landmarks<R: std::io::Read>(reader: R) -> Result<Vec<Landmark>, CameraError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<LandmarkRow>()
        .enumerate()
        .map(|(i, row)| {
            row.map(|r| Landmark {
                id: r.id,
                p: Vec3::new(r.x, r.y, r.z),
            })
            .map_err(|e| CameraError::Parse {
                line: i + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn load_landmarks(path: &Path) -> Result<Vec<Landmark>, CameraError> {
    read_landmarks(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_landmarks<W: Write>(mut w: W, landmarks: &[Landmark]) -> std::io::Result<()> {
    writeln!(w, "id,x,y,z")?;
    for lm in landmarks {
        writeln!(w, "{},{},{},{}", lm.id, lm.p.x, lm.p.y, lm.p.z)?;
    }
    w.flush()
}

/// Header of the observation log.
pub const OBSERVATION_HEADER: &str = "t,cam_id,landmark_id,uL,vL,uR,vR";

pub fn write_observations<W: Write>(w: &mut W, t: f64, cam_id: u32, obs: &[StereoObservation]) -> std::io::Result<()> {
    for o in obs {
        writeln!(w, "{t},{cam_id},{},{},{},{},{}", o.landmark_id, o.ul, o.vl, o.ur, o.vr)?;
    }
    Ok(())
}

/// Parses one observation log line back into `(t, cam_id, observation)`.
pub fn parse_observation_line(line: &str) -> Option<(f64, u32, StereoObservation)> {
    let f: Vec<&str> = line.trim().split(',').collect();
    if f.len() != 7 {
        return None;
    }
    Some((
        f[0].parse().ok()?,
        f[1].parse().ok()?,
        StereoObservation {
            landmark_id: f[2].parse().ok()?,
            ul: f[3].parse().ok()?,
            vl: f[4].parse().ok()?,
            ur: f[5].parse().ok()?,
            vr: f[6].parse().ok()?,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::default()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let p = project(&Vec3::new(0.0, 0.0, 2.0), &cam());
        assert_eq!(p, Projection::Visible { u: 376.0, v: 240.0 });
    }

    #[test]
    fn pinhole_arithmetic() {
        let p = project(&Vec3::new(0.5, 0.0, 2.0), &cam());
        assert_eq!(p, Projection::Visible { u: 476.0, v: 240.0 });
    }

    #[test]
    fn clip_planes_are_inclusive() {
        let c = cam();
        assert_eq!(project(&Vec3::new(0.0, 0.0, c.near / 2.0), &c), Projection::NotVisible(Cull::ClipPlane));
        assert!(matches!(project(&Vec3::new(0.0, 0.0, c.near), &c), Projection::Visible { .. }));
        assert!(matches!(project(&Vec3::new(0.0, 0.0, c.far), &c), Projection::Visible { .. }));
        let beyond = c.far + c.far * f64::EPSILON;
        assert_eq!(project(&Vec3::new(0.0, 0.0, beyond), &c), Projection::NotVisible(Cull::ClipPlane));
        assert_eq!(project(&Vec3::new(0.0, 0.0, -1.0), &c), Projection::NotVisible(Cull::ClipPlane));
    }

    #[test]
    fn out_of_frame_is_dropped() {
        assert_eq!(project(&Vec3::new(5.0, 0.0, 1.0), &cam()), Projection::NotVisible(Cull::OutOfFrame));
    }

    #[test]
    fn on_axis_disparity() {
        let lm = [Landmark {
            id: 7,
            p: Vec3::new(0.0, 0.0, 2.0),
        }];
        let obs = stereo_observe(&lm, &Pose::identity(0.0), &cam(), &mut RngStream::new(0, 0));
        assert_eq!(obs.len(), 1);
        let d = obs[0].ul - obs[0].ur;
        assert!((d - 12.0).abs() < 1e-9);
        assert_eq!(obs[0].vl, obs[0].vr);
    }

    #[test]
    fn forward_mount_looks_along_body_x() {
        let mount = CameraMount::forward(Vec3::zeros());
        let pose = mount.camera_pose(&Pose::identity(0.0));
        let axis = pose.q * Vec3::z();
        assert!((axis - Vec3::x()).norm() < 1e-12);
        let right = pose.q * Vec3::x();
        assert!((right + Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn landmark_csv_round_trip() {
        let lms = generate_landmarks(20, &Vec3::new(-5.0, -5.0, 0.0), &Vec3::new(5.0, 5.0, 3.0), 4);
        let mut buf = Vec::new();
        write_landmarks(&mut buf, &lms).unwrap();
        let back = read_landmarks(buf.as_slice()).unwrap();
        assert_eq!(back, lms);
        assert!(lms.iter().all(|l| l.p.x >= -5.0 && l.p.x < 5.0 && l.p.z >= 0.0 && l.p.z < 3.0));
    }

    #[test]
    fn bad_landmark_row_reports_line() {
        let err = read_landmarks("id,x,y,z\n0,1,2,3\n1,a,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CameraError::Parse { line: 3, .. }));
    }

    #[test]
    fn rejects_bad_intrinsics() {
        let c = CameraIntrinsics { near: 5.0, far: 1.0, ..cam() };
        assert!(c.validate().is_err());
        let c = CameraIntrinsics { baseline: 0.0, ..cam() };
        assert!(c.validate().is_err());
        assert!(cam().validate().is_ok());
    }
}
