//! Centralized leader-follower formation.
//!
//! The leader broadcasts its kinematics once per control tick; every follower
//! tracks `leader.p + offset` with a PD law plus leader-acceleration
//! feedforward. The same follower law drives both the point-mass fast
//! simulator in this module and the full quadrotor simulation (through a
//! velocity-setpoint adapter).

use crate::clock::{RealtimeFactor, SimClock};
use crate::geometry::Vec3;
use crate::rigid_body::RigidBodyState;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::Write;
use thiserror::Error;

/// Follower count of the built-in shapes.
pub const BUILTIN_FOLLOWERS: usize = 8;

/// Default minimum separation between follower targets (m).
pub const DEFAULT_D_SAFE: f64 = 0.8;

#[derive(Debug, Error)]
pub enum FormationError {
    #[error("unknown formation shape {0:?}")]
    UnknownShape(String),
    #[error("shape {current} has {current_n} followers but {target} has {target_n}")]
    ShapeMismatch {
        current: String,
        current_n: usize,
        target: String,
        target_n: usize,
    },
    #[error("shape {name}: followers {a} and {b} are {dist:.3} m apart, below {d_safe} m")]
    TooClose {
        name: String,
        a: usize,
        b: usize,
        dist: f64,
        d_safe: f64,
    },
    #[error("shape file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Named list of follower offsets relative to the leader (world-aligned).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationShape {
    pub name: String,
    pub offsets: Vec<Vec3>,
}

const CUBE_CSV: &str = include_str!("../data/shapes/cube.csv");
const PYRAMID_CSV: &str = include_str!("../data/shapes/pyramid.csv");
const TRIANGLE_CSV: &str = include_str!("../data/shapes/triangle.csv");

#[derive(Debug, Deserialize)]
struct OffsetRow {
    follower_index: usize,
    dx: f64,
    dy: f64,
    dz: f64,
}

impl FormationShape {
    pub fn new(name: impl Into<String>, offsets: Vec<Vec3>) -> Self {
        Self {
            name: name.into(),
            offsets,
        }
    }

    /// 8 vertices of a 2 m cube centred on the leader.
    pub fn cube() -> Self {
        Self::parse_builtin("cube", CUBE_CSV)
    }

    /// 2 m square base 1 m below the leader plus the four base-edge midpoints
    /// raised to the leader's height.
    pub fn pyramid() -> Self {
        Self::parse_builtin("pyramid", PYRAMID_CSV)
    }

    /// 8 points spaced evenly along the outline of a horizontal equilateral
    /// triangle with 4 m sides, leader at the centroid.
    pub fn triangle() -> Self {
        Self::parse_builtin("triangle", TRIANGLE_CSV)
    }

    fn parse_builtin(name: &str, csv: &str) -> Self {
        Self::read_csv(name, csv.as_bytes()).expect("built-in shape file is valid")
    }

    pub fn builtin(name: &str) -> Result<Self, FormationError> {
        match name {
            "cube" => Ok(Self::cube()),
            "pyramid" => Ok(Self::pyramid()),
            "triangle" => Ok(Self::triangle()),
            other => Err(FormationError::UnknownShape(other.to_string())),
        }
    }

    pub fn builtin_names() -> [&'static str; 3] {
        ["cube", "pyramid", "triangle"]
    }

    /// Reads `follower_index,dx,dy,dz` rows; indices must be `0..n` in order.
    pub fn read_csv<R: std::io::Read>(name: &str, reader: R) -> Result<Self, FormationError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut offsets = Vec::new();
        for (i, row) in rdr.deserialize::<OffsetRow>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| FormationError::Parse {
                line,
                msg: e.to_string(),
            })?;
            if row.follower_index != i {
                return Err(FormationError::Parse {
                    line,
                    msg: format!("expected follower_index {i}, got {}", row.follower_index),
                });
            }
            offsets.push(Vec3::new(row.dx, row.dy, row.dz));
        }
        Ok(Self::new(name, offsets))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, FormationError> {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom").to_string();
        Self::read_csv(&name, std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "follower_index,dx,dy,dz")?;
        for (i, o) in self.offsets.iter().enumerate() {
            writeln!(w, "{i},{},{},{}", o.x, o.y, o.z)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Closest pair of follower targets, `(a, b, distance)`.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..self.offsets.len() {
            for b in a + 1..self.offsets.len() {
                let d = (self.offsets[a] - self.offsets[b]).norm();
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((a, b, d));
                }
            }
        }
        best
    }

    pub fn check_separation(&self, d_safe: f64) -> Result<(), FormationError> {
        match self.closest_pair() {
            Some((a, b, dist)) if dist < d_safe => Err(FormationError::TooClose {
                name: self.name.clone(),
                a,
                b,
                dist,
                d_safe,
            }),
            _ => Ok(()),
        }
    }
}

/// Translational state of a point-mass agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointMassState {
    pub p: Vec3,
    pub v: Vec3,
}

impl PointMassState {
    pub fn at(p: Vec3) -> Self {
        Self { p, v: Vec3::zeros() }
    }
}

/// Leader kinematics as broadcast to followers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderMsg {
    pub t: f64,
    pub p: Vec3,
    pub v: Vec3,
    pub a: Vec3,
}

/// Anything that can act as a formation leader.
pub trait LeaderKinematics {
    fn position(&self) -> Vec3;
    fn velocity(&self) -> Vec3;
}

impl LeaderKinematics for PointMassState {
    fn position(&self) -> Vec3 {
        self.p
    }
    fn velocity(&self) -> Vec3 {
        self.v
    }
}

impl LeaderKinematics for RigidBodyState {
    fn position(&self) -> Vec3 {
        self.p
    }
    fn velocity(&self) -> Vec3 {
        self.v
    }
}

pub fn leader_broadcast<L: LeaderKinematics>(t: f64, leader: &L, a_leader: &Vec3) -> LeaderMsg {
    LeaderMsg {
        t,
        p: leader.position(),
        v: leader.velocity(),
        a: *a_leader,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowerLaw {
    pub kp: f64,
    pub kd: f64,
    /// Acceleration norm clamp (m/s^2).
    pub a_max: f64,
    /// Speed clamp of the point-mass plant (m/s).
    pub v_max: f64,
}

impl Default for FollowerLaw {
    fn default() -> Self {
        Self {
            kp: 2.0,
            kd: 3.0,
            a_max: 4.0,
            v_max: 3.0,
        }
    }
}

impl FollowerLaw {
    pub fn is_valid(&self) -> bool {
        self.kp > 0.0 && self.kd > 0.0 && self.a_max > 0.0 && self.v_max > 0.0
    }
}

fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// `u = a_L + kp (p_L + offset - p) + kd (v_L - v)`, norm-clamped to `a_max`.
pub fn follower_accel(me: &PointMassState, msg: &LeaderMsg, offset: &Vec3, law: &FollowerLaw) -> Vec3 {
    let u = msg.a + ((msg.p + offset) - me.p) * law.kp + (msg.v - me.v) * law.kd;
    clamp_norm(u, law.a_max)
}

/// Velocity setpoint for a follower flown through a velocity-controlled
/// vehicle: `v_L + (kp / kd) (p_L + offset - p)`, norm-clamped to `v_max`.
///
/// The `kp / kd` scaling keeps the same error time constant as the PD law's
/// dominant pole when the inner velocity loop is fast.
pub fn follower_velocity_setpoint(p: &Vec3, msg: &LeaderMsg, offset: &Vec3, law: &FollowerLaw) -> Vec3 {
    let v = msg.v + ((msg.p + offset) - p) * (law.kp / law.kd);
    clamp_norm(v, law.v_max)
}

/// Semi-implicit Euler on the double integrator with a speed clamp.
pub fn point_mass_step(s: &PointMassState, u: &Vec3, law: &FollowerLaw, dt: f64) -> PointMassState {
    let v = clamp_norm(s.v + u * dt, law.v_max);
    PointMassState { p: s.p + v * dt, v }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// Follower `i` takes target slot `i`.
    #[default]
    Identity,
    /// Minimizes the summed distance between old and new offsets.
    MinDistance,
}

/// New offset for every follower when switching shapes.
pub fn reconfigure(
    current: &FormationShape,
    target: &FormationShape,
    policy: AssignmentPolicy,
) -> Result<Vec<(usize, Vec3)>, FormationError> {
    if current.len() != target.len() {
        return Err(FormationError::ShapeMismatch {
            current: current.name.clone(),
            current_n: current.len(),
            target: target.name.clone(),
            target_n: target.len(),
        });
    }
    Ok(match policy {
        AssignmentPolicy::Identity => target.offsets.iter().copied().enumerate().collect(),
        AssignmentPolicy::MinDistance => {
            let cost: Vec<Vec<f64>> = current
                .offsets
                .iter()
                .map(|a| target.offsets.iter().map(|b| (a - b).norm()).collect())
                .collect();
            min_cost_assignment(&cost)
                .into_iter()
                .enumerate()
                .map(|(i, j)| (i, target.offsets[j]))
                .collect()
        }
    })
}

/// Hungarian algorithm on a square cost matrix; returns the column assigned
/// to each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials formulation; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Fixed-latency link: a message pushed at tick `k` is delivered at tick
/// `k + delay`. Before the link has filled, the oldest message is delivered.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    delay: usize,
    buf: VecDeque<T>,
}

impl<T: Clone> DelayLine<T> {
    pub fn new(delay_ticks: usize) -> Self {
        Self {
            delay: delay_ticks,
            buf: VecDeque::with_capacity(delay_ticks + 1),
        }
    }

    pub fn push(&mut self, msg: T) -> T {
        self.buf.push_back(msg);
        while self.buf.len() > self.delay + 1 {
            self.buf.pop_front();
        }
        self.buf.front().cloned().expect("just pushed")
    }
}

/// Largest distance between a follower and its target slot.
pub fn max_formation_error(leader_p: &Vec3, followers: &[Vec3], offsets: &[Vec3]) -> f64 {
    followers
        .iter()
        .zip(offsets)
        .map(|(p, o)| ((leader_p + o) - p).norm())
        .fold(0.0, f64::max)
}

/// Leader behaviour in the fast simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum LeaderScript {
    Hold,
    /// Velocity command, as from a keyboard.
    Velocity(Vec3),
    /// `(time, position)` waypoints; the latest waypoint whose time has
    /// passed is the target.
    Waypoints(Vec<(f64, Vec3)>),
}

/// 2nd-order point-mass swarm simulator for rapid formation iteration.
#[derive(Debug, Clone)]
pub struct FastFormationSim {
    clock: SimClock,
    pub law: FollowerLaw,
    pub leader_law: FollowerLaw,
    pub leader: PointMassState,
    leader_accel: Vec3,
    pub script: LeaderScript,
    pub followers: Vec<PointMassState>,
    pub shape: FormationShape,
    pub policy: AssignmentPolicy,
    offsets: Vec<Vec3>,
    link: DelayLine<LeaderMsg>,
}

impl FastFormationSim {
    pub fn new(
        dt: f64,
        leader: PointMassState,
        followers: Vec<PointMassState>,
        shape: FormationShape,
        law: FollowerLaw,
        link_delay_ticks: usize,
    ) -> Result<Self, FormationError> {
        if followers.len() != shape.len() {
            return Err(FormationError::ShapeMismatch {
                current: "roster".into(),
                current_n: followers.len(),
                target: shape.name.clone(),
                target_n: shape.len(),
            });
        }
        Ok(Self {
            clock: SimClock::new(dt, RealtimeFactor::Unbounded),
            law,
            leader_law: law,
            leader,
            leader_accel: Vec3::zeros(),
            script: LeaderScript::Hold,
            offsets: shape.offsets.clone(),
            followers,
            shape,
            policy: AssignmentPolicy::Identity,
            link: DelayLine::new(link_delay_ticks),
        })
    }

    /// One leader and `shape.len()` followers placed on a ground-level grid
    /// 3 m below the leader.
    pub fn with_grid_start(dt: f64, leader_p: Vec3, shape: FormationShape, law: FollowerLaw) -> Result<Self, FormationError> {
        let followers = grid_positions(&leader_p, shape.len(), 2.0)
            .into_iter()
            .map(PointMassState::at)
            .collect();
        Self::new(dt, PointMassState::at(leader_p), followers, shape, law, 0)
    }

    pub fn t(&self) -> f64 {
        self.clock.t()
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn offsets(&self) -> &[Vec3] {
        &self.offsets
    }

    pub fn set_shape(&mut self, target: FormationShape) -> Result<(), FormationError> {
        let current = FormationShape::new(self.shape.name.clone(), self.offsets.clone());
        let assignment = reconfigure(&current, &target, self.policy)?;
        for (i, off) in assignment {
            self.offsets[i] = off;
        }
        self.shape = target;
        Ok(())
    }

    fn leader_command(&self) -> Vec3 {
        let static_target = |p: Vec3| LeaderMsg {
            t: 0.0,
            p,
            v: Vec3::zeros(),
            a: Vec3::zeros(),
        };
        match &self.script {
            LeaderScript::Hold => Vec3::zeros() - self.leader.v * self.leader_law.kd,
            LeaderScript::Velocity(v) => clamp_norm((v - self.leader.v) * self.leader_law.kd, self.leader_law.a_max),
            LeaderScript::Waypoints(wps) => {
                let t = self.clock.t();
                match wps.iter().rev().find(|(wt, _)| *wt <= t).or(wps.first()) {
                    Some((_, p)) => follower_accel(&self.leader, &static_target(*p), &Vec3::zeros(), &self.leader_law),
                    None => Vec3::zeros(),
                }
            }
        }
    }

    /// Advances one tick and returns the broadcast leader message.
    pub fn step(&mut self) -> LeaderMsg {
        let dt = self.clock.dt();
        let u_leader = clamp_norm(self.leader_command(), self.leader_law.a_max);
        let msg = leader_broadcast(self.clock.t(), &self.leader, &self.leader_accel);
        let delivered = self.link.push(msg);
        for (f, off) in self.followers.iter_mut().zip(&self.offsets) {
            let u = follower_accel(f, &delivered, off, &self.law);
            *f = point_mass_step(f, &u, &self.law, dt);
        }
        let before = self.leader.v;
        self.leader = point_mass_step(&self.leader, &u_leader, &self.leader_law, dt);
        self.leader_accel = (self.leader.v - before) / dt;
        self.clock.advance();
        msg
    }

    pub fn max_error(&self) -> f64 {
        let ps: Vec<Vec3> = self.followers.iter().map(|f| f.p).collect();
        max_formation_error(&self.leader.p, &ps, &self.offsets)
    }
}

/// Row-major grid of `n` positions with `spacing`, centred under `center`
/// and 3 m lower.
pub fn grid_positions(center: &Vec3, n: usize, spacing: f64) -> Vec<Vec3> {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols);
    (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            Vec3::new(
                center.x + (c as f64 - (cols - 1) as f64 / 2.0) * spacing,
                center.y + (r as f64 - (rows - 1) as f64 / 2.0) * spacing,
                center.z - 3.0,
            )
        })
        .collect()
}

/// Result of one shape switch in a sequence run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchReport {
    pub shape: String,
    pub switched_at: f64,
    /// Largest follower error over `[switched_at + settle, next switch)`.
    pub max_error_after_settle: f64,
    /// Time after the switch at which the error last exceeded the threshold.
    pub settle_time: f64,
}

/// Runs the fast simulator through a shape sequence with `dwell` seconds per
/// shape. `sample` is called at every tick with `(t, max_error)`.
pub fn run_fast_sequence(
    sim: &mut FastFormationSim,
    shapes: &[FormationShape],
    dwell: f64,
    settle: f64,
    threshold: f64,
    mut sample: impl FnMut(f64, f64),
) -> Result<Vec<SwitchReport>, FormationError> {
    let ticks = (dwell / sim.clock.dt()).round() as u64;
    let mut reports = Vec::new();
    for shape in shapes {
        sim.set_shape(shape.clone())?;
        let start = sim.t();
        let mut worst: f64 = 0.0;
        let mut last_violation = 0.0;
        for _ in 0..ticks {
            sim.step();
            let err = sim.max_error();
            let since = sim.t() - start;
            sample(sim.t(), err);
            if err >= threshold {
                last_violation = since;
            }
            if since >= settle {
                worst = worst.max(err);
            }
        }
        reports.push(SwitchReport {
            shape: shape.name.clone(),
            switched_at: start,
            max_error_after_settle: worst,
            settle_time: last_violation,
        });
    }
    Ok(reports)
}
