//! On-disk log bundle.
//!
//! ```text
//! <log_dir>/
//!   config.json                resolved configuration
//!   commands.jsonl             {"tick":k,"cmd":{...}} per applied command
//!   formation.csv              t,shape,max_error           (formation runs)
//!   landmarks.csv              id,x,y,z                    (camera runs)
//!   uav<id>/groundtruth.tum    t x y z qx qy qz qw
//!   uav<id>/velocity.csv       t,vref_x,vref_y,vref_z,v_x,v_y,v_z
//!   uav<id>/accel.csv          t,true_x,true_y,true_z,meas_x,meas_y,meas_z
//!   uav<id>/gyro.csv           (same columns)
//!   uav<id>/mag.csv            (same columns)
//!   uav<id>/baro.csv           t,true_alt,meas_alt
//!   uav<id>/gps_pos.csv        (xyz columns)
//!   uav<id>/gps_vel.csv        (xyz columns)
//!   uav<id>/camera.csv         t,cam_id,landmark_id,uL,vL,uR,vR (camera fitted)
//! ```
//!
//! Floats use the shortest text that parses back to the same `f64`.

use crate::camera::{write_landmarks, write_observations, Landmark, StereoObservation, OBSERVATION_HEADER};
use crate::geometry::{Pose, Vec3};
use crate::sim::command::Command;
use crate::traj_eval::write_tum_pose;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

type Sink = BufWriter<File>;

fn create(path: &Path, header: Option<&str>) -> std::io::Result<Sink> {
    let mut w = BufWriter::new(File::create(path)?);
    if let Some(h) = header {
        writeln!(w, "{h}")?;
    }
    Ok(w)
}

const XYZ_HEADER: &str = "t,true_x,true_y,true_z,meas_x,meas_y,meas_z";

/// Sensor channels with their own CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorLog {
    Accel,
    Gyro,
    Mag,
    GpsPos,
    GpsVel,
}

pub struct VehicleLog {
    truth: Sink,
    velocity: Sink,
    accel: Option<Sink>,
    gyro: Option<Sink>,
    mag: Option<Sink>,
    baro: Option<Sink>,
    gps_pos: Option<Sink>,
    gps_vel: Option<Sink>,
    camera: Option<Sink>,
}

impl VehicleLog {
    fn create(dir: &Path, sensors: bool, camera: bool) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let opt = |on: bool, name: &str, header: &str| -> std::io::Result<Option<Sink>> {
            if on {
                Ok(Some(create(&dir.join(name), Some(header))?))
            } else {
                Ok(None)
            }
        };
        Ok(Self {
            truth: create(&dir.join("groundtruth.tum"), None)?,
            velocity: create(&dir.join("velocity.csv"), Some("t,vref_x,vref_y,vref_z,v_x,v_y,v_z"))?,
            accel: opt(sensors, "accel.csv", XYZ_HEADER)?,
            gyro: opt(sensors, "gyro.csv", XYZ_HEADER)?,
            mag: opt(sensors, "mag.csv", XYZ_HEADER)?,
            baro: opt(sensors, "baro.csv", "t,true_alt,meas_alt")?,
            gps_pos: opt(sensors, "gps_pos.csv", XYZ_HEADER)?,
            gps_vel: opt(sensors, "gps_vel.csv", XYZ_HEADER)?,
            camera: opt(camera, "camera.csv", OBSERVATION_HEADER)?,
        })
    }

    pub fn truth(&mut self, pose: &Pose) -> std::io::Result<()> {
        write_tum_pose(&mut self.truth, pose)
    }

    pub fn velocity(&mut self, t: f64, v_ref: &Vec3, v: &Vec3) -> std::io::Result<()> {
        writeln!(self.velocity, "{},{},{},{},{},{},{}", t, v_ref.x, v_ref.y, v_ref.z, v.x, v.y, v.z)
    }

    pub fn sensor3(&mut self, which: SensorLog, t: f64, truth: &Vec3, meas: &Vec3) -> std::io::Result<()> {
        let sink = match which {
            SensorLog::Accel => &mut self.accel,
            SensorLog::Gyro => &mut self.gyro,
            SensorLog::Mag => &mut self.mag,
            SensorLog::GpsPos => &mut self.gps_pos,
            SensorLog::GpsVel => &mut self.gps_vel,
        };
        match sink {
            Some(w) => writeln!(w, "{},{},{},{},{},{},{}", t, truth.x, truth.y, truth.z, meas.x, meas.y, meas.z),
            None => Ok(()),
        }
    }

    pub fn baro(&mut self, t: f64, truth: f64, meas: f64) -> std::io::Result<()> {
        match &mut self.baro {
            Some(w) => writeln!(w, "{t},{truth},{meas}"),
            None => Ok(()),
        }
    }

    pub fn camera(&mut self, t: f64, cam_id: u32, obs: &[StereoObservation]) -> std::io::Result<()> {
        match &mut self.camera {
            Some(w) => write_observations(w, t, cam_id, obs),
            None => Ok(()),
        }
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.truth.flush()?;
        self.velocity.flush()?;
        for w in [
            &mut self.accel,
            &mut self.gyro,
            &mut self.mag,
            &mut self.baro,
            &mut self.gps_pos,
            &mut self.gps_vel,
            &mut self.camera,
        ]
        .into_iter()
        .flatten()
        {
            w.flush()?;
        }
        Ok(())
    }
}

/// One line of the command transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// Tick at whose start the command took effect.
    pub tick: u64,
    pub cmd: Command,
}

/// Parses a `commands.jsonl` transcript.
pub fn read_transcript(text: &str) -> Result<Vec<TranscriptEntry>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("transcript line {}: {e}", i + 1)))
        .collect()
}

pub struct LogBundle {
    dir: PathBuf,
    pub vehicles: Vec<VehicleLog>,
    commands: Sink,
    formation: Option<Sink>,
}

impl LogBundle {
    /// `vehicles` lists `(id, sensors fitted, camera fitted)`.
    pub fn create(
        dir: &Path,
        config_json: &str,
        vehicles: &[(u32, bool, bool)],
        formation: bool,
        landmarks: Option<&[Landmark]>,
    ) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.json"), config_json)?;
        if let Some(lms) = landmarks {
            write_landmarks(BufWriter::new(File::create(dir.join("landmarks.csv"))?), lms)?;
        }
        let vehicles = vehicles
            .iter()
            .map(|&(id, sensors, camera)| VehicleLog::create(&dir.join(format!("uav{id}")), sensors, camera))
            .collect::<std::io::Result<_>>()?;
        let formation = if formation {
            Some(create(&dir.join("formation.csv"), Some("t,shape,max_error"))?)
        } else {
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            vehicles,
            commands: create(&dir.join("commands.jsonl"), None)?,
            formation,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn command(&mut self, entry: &TranscriptEntry) -> std::io::Result<()> {
        writeln!(self.commands, "{}", serde_json::to_string(entry).expect("commands serialize"))
    }

    pub fn formation(&mut self, t: f64, shape: &str, max_error: f64) -> std::io::Result<()> {
        match &mut self.formation {
            Some(w) => writeln!(w, "{t},{shape},{max_error}"),
            None => Ok(()),
        }
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        for v in &mut self.vehicles {
            v.flush()?;
        }
        self.commands.flush()?;
        if let Some(w) = &mut self.formation {
            w.flush()?;
        }
        Ok(())
    }
}
