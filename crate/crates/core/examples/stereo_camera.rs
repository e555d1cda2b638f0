//! Generates a landmark map and prints the stereo observations seen by a
//! forward-looking camera on a vehicle hovering at 2 m.
//!
//! cargo run -p swarmsim --example stereo_camera

use std::io::Write;
use swarmsim::camera::{
    generate_landmarks, stereo_observe, write_observations, CameraIntrinsics, CameraMount, OBSERVATION_HEADER,
};
use swarmsim::geometry::{yaw_quat, Pose};
use swarmsim::rng::RngStream;
use swarmsim::Vec3;

fn main() -> std::io::Result<()> {
    let landmarks = generate_landmarks(400, &Vec3::new(-20.0, -20.0, 0.0), &Vec3::new(20.0, 20.0, 6.0), 1);
    let intr = CameraIntrinsics {
        noise_stddev: 0.5,
        ..CameraIntrinsics::default()
    };
    let mount = CameraMount::forward(Vec3::new(0.1, 0.03, 0.0));
    let body = Pose::new(0.0, Vec3::new(0.0, 0.0, 2.0), yaw_quat(0.3));
    let cam = mount.camera_pose(&body);
    let mut rng = RngStream::new(0, 0);
    let obs = stereo_observe(&landmarks, &cam, &intr, &mut rng);

    eprintln!("{} of {} landmarks visible in both eyes", obs.len(), landmarks.len());
    for o in obs.iter().take(5) {
        let lm = landmarks.iter().find(|l| l.id == o.landmark_id).unwrap();
        let depth = (cam.q.inverse() * (lm.p - cam.p)).z;
        eprintln!(
            "  landmark {:>3}: depth {depth:5.2} m, disparity {:6.2} px (noiseless {:6.2})",
            o.landmark_id,
            o.ul - o.ur,
            intr.fx * intr.baseline / depth
        );
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{OBSERVATION_HEADER}")?;
    write_observations(&mut out, 0.0, 0, &obs)
}
