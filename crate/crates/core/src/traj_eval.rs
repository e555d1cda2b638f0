//! Trajectory accuracy metrics: TUM file I/O, timestamp association,
//! absolute pose error (optionally after SE(3) alignment) and
//! distance-parameterized relative pose error.

use crate::geometry::{quat_wxyz, Pose, UnitQuat, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: timestamp does not increase")]
    NonMonotonicTime { line: usize },
    #[error("trajectories share no timestamps within the association window")]
    NoOverlap,
    #[error("alignment needs at least 3 non-collinear positions")]
    DegenerateAlignment,
    #[error("reference path is {length:.3} m long, shorter than the {delta} m RPE interval")]
    PathTooShort { length: f64, delta: f64 },
    #[error("trajectory needs at least 2 samples with increasing timestamps")]
    InvalidTrajectory,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Time-ordered pose sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    samples: Vec<Pose>,
}

impl Trajectory {
    /// Fails unless timestamps strictly increase.
    pub fn new(samples: Vec<Pose>) -> Result<Self, EvalError> {
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(EvalError::InvalidTrajectory);
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Pose] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Applies `x -> R x + t` to every pose.
    pub fn transformed(&self, rot: &UnitQuat, trans: &Vec3) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| Pose::new(s.t, rot * s.p + trans, rot * s.q))
                .collect(),
        }
    }

    /// Summed distance between consecutive positions.
    pub fn path_length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].p - w[0].p).norm()).sum()
    }
}

/// Time-matched reference and estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePair {
    pub reference: Pose,
    pub estimate: Pose,
}

/// Greedy nearest-timestamp matching.
///
/// All candidate pairs within `max_dt` are ranked by `|dt|` (ties broken by
/// reference then estimate index) and accepted when neither sample is taken
/// yet. Output is ordered by reference time.
pub fn associate(reference: &Trajectory, estimate: &Trajectory, max_dt: f64) -> Result<Vec<PosePair>, EvalError> {
    let (r, e) = (reference.samples(), estimate.samples());
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut lo = 0;
    for (i, rs) in r.iter().enumerate() {
        while lo < e.len() && e[lo].t < rs.t - max_dt {
            lo += 1;
        }
        let mut j = lo;
        while j < e.len() && e[j].t <= rs.t + max_dt {
            candidates.push(((e[j].t - rs.t).abs(), i, j));
            j += 1;
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ref_used = vec![false; r.len()];
    let mut est_used = vec![false; e.len()];
    let mut matched: Vec<(usize, usize)> = Vec::new();
    for (_, i, j) in candidates {
        if !ref_used[i] && !est_used[j] {
            ref_used[i] = true;
            est_used[j] = true;
            matched.push((i, j));
        }
    }
    if matched.is_empty() {
        return Err(EvalError::NoOverlap);
    }
    matched.sort_unstable();
    Ok(matched
        .into_iter()
        .map(|(i, j)| PosePair {
            reference: r[i],
            estimate: e[j],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    #[default]
    None,
    Se3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Deg,
    Rad,
}

impl AngleUnit {
    fn from_rad(self, a: f64) -> f64 {
        match self {
            AngleUnit::Deg => a.to_degrees(),
            AngleUnit::Rad => a,
        }
    }

    fn label(self) -> &'static str {
        match self {
            AngleUnit::Deg => "deg",
            AngleUnit::Rad => "rad",
        }
    }
}

/// Summary statistics of a set of per-pair errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub unit: String,
    pub n_pairs: usize,
}

/// Sum in a fixed pairwise order, independent of how the caller splits work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

impl MetricReport {
    /// Panics on an empty slice.
    pub fn from_errors(errors: &[f64], unit: &str) -> Self {
        assert!(!errors.is_empty(), "metric over zero pairs");
        let n = errors.len() as f64;
        let mean = pairwise_sum(errors) / n;
        let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let rmse = (pairwise_sum(&squares) / n).sqrt();
        let dev: Vec<f64> = errors.iter().map(|e| (e - mean) * (e - mean)).collect();
        let std = (pairwise_sum(&dev) / n).sqrt();
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let median = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        };
        Self {
            rmse,
            mean,
            median,
            std,
            min: sorted[0],
            max: sorted[m - 1],
            unit: unit.to_string(),
            n_pairs: m,
        }
    }
}

/// Rotation angle of a unit quaternion, in `[0, pi]`.
pub fn rotation_angle(q: &UnitQuat) -> f64 {
    2.0 * q.imag().norm().atan2(q.w.abs())
}

/// Closed-form least-squares rigid transform (no scale) mapping `src` onto
/// `dst`: returns `(R, t)` minimizing `sum |dst - (R src + t)|^2`.
pub fn umeyama_se3(src: &[Vec3], dst: &[Vec3]) -> Result<(UnitQuat, Vec3), EvalError> {
    let n = src.len();
    if n < 3 || n != dst.len() {
        return Err(EvalError::DegenerateAlignment);
    }
    let mean = |pts: &[Vec3]| pts.iter().fold(Vec3::zeros(), |a, p| a + p) / n as f64;
    let (mu_s, mu_d) = (mean(src), mean(dst));
    let mut cov = Matrix3::zeros();
    let mut spread_s = Matrix3::zeros();
    let mut spread_d = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let (cs, cd) = (s - mu_s, d - mu_d);
        cov += cd * cs.transpose();
        spread_s += cs * cs.transpose();
        spread_d += cd * cd.transpose();
    }
    for spread in [spread_s, spread_d] {
        let mut ev: Vec<f64> = spread.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        // Collinear sets have a single non-zero principal direction.
        if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
            return Err(EvalError::DegenerateAlignment);
        }
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut s = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let r = u * s * v_t;
    let rot = UnitQuat::from_matrix(&r);
    Ok((rot, mu_d - rot * mu_s))
}

/// Absolute pose error: `(translation m, rotation)` reports.
pub fn ape(pairs: &[PosePair], align: Alignment, unit: AngleUnit) -> Result<(MetricReport, MetricReport), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::NoOverlap);
    }
    let (rot, trans) = match align {
        Alignment::None => (UnitQuat::identity(), Vec3::zeros()),
        Alignment::Se3 => {
            let src: Vec<Vec3> = pairs.iter().map(|p| p.estimate.p).collect();
            let dst: Vec<Vec3> = pairs.iter().map(|p| p.reference.p).collect();
            umeyama_se3(&src, &dst)?
        }
    };
    let mut te = Vec::with_capacity(pairs.len());
    let mut re = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let est_p = rot * pair.estimate.p + trans;
        let est_q = rot * pair.estimate.q;
        te.push((pair.reference.p - est_p).norm());
        re.push(unit.from_rad(rotation_angle(&(pair.reference.q.inverse() * est_q))));
    }
    Ok((MetricReport::from_errors(&te, "m"), MetricReport::from_errors(&re, unit.label())))
}

/// Relative pose error over sub-trajectories spanning `delta` metres of
/// reference path.
///
/// For each start `i` the end `j` is the first sample whose reference arc
/// length from `i` reaches `delta`; the error is
/// `(P_ref_i^-1 P_ref_j)^-1 (P_est_i^-1 P_est_j)`.
pub fn rpe(pairs: &[PosePair], delta: f64, unit: AngleUnit) -> Result<(MetricReport, MetricReport), EvalError> {
    assert!(delta > 0.0, "RPE interval must be positive");
    let mut arc = Vec::with_capacity(pairs.len());
    let mut s = 0.0;
    for (k, p) in pairs.iter().enumerate() {
        if k > 0 {
            s += (p.reference.p - pairs[k - 1].reference.p).norm();
        }
        arc.push(s);
    }
    // Relative slack absorbs rounding in the accumulated arc length.
    let reach = delta * (1.0 - 1e-9);
    let mut te = Vec::new();
    let mut re = Vec::new();
    let mut j = 0;
    for i in 0..pairs.len() {
        j = j.max(i + 1);
        while j < pairs.len() && arc[j] - arc[i] < reach {
            j += 1;
        }
        if j >= pairs.len() {
            break;
        }
        let (tr, qr) = pairs[i].reference.relative_to(&pairs[j].reference);
        let (tq, qe) = pairs[i].estimate.relative_to(&pairs[j].estimate);
        let qr_inv = qr.inverse();
        te.push((qr_inv * (tq - tr)).norm());
        re.push(unit.from_rad(rotation_angle(&(qr_inv * qe))));
    }
    if te.is_empty() {
        return Err(EvalError::PathTooShort {
            length: arc.last().copied().unwrap_or(0.0),
            delta,
        });
    }
    Ok((MetricReport::from_errors(&te, "m"), MetricReport::from_errors(&re, unit.label())))
}

/// Reads a TUM trajectory: `timestamp tx ty tz qx qy qz qw` per line,
/// whitespace separated, `#` comments and blank lines skipped.
pub fn read_tum<R: BufRead>(reader: R) -> Result<Trajectory, EvalError> {
    let mut samples: Vec<Pose> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(EvalError::Parse {
                line: line_no,
                msg: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 8];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse::<f64>().map_err(|e| EvalError::Parse {
                line: line_no,
                msg: format!("{f:?}: {e}"),
            })?;
            if !slot.is_finite() {
                return Err(EvalError::Parse {
                    line: line_no,
                    msg: format!("non-finite value {f:?}"),
                });
            }
        }
        let [t, x, y, z, qx, qy, qz, qw] = v;
        if qx == 0.0 && qy == 0.0 && qz == 0.0 && qw == 0.0 {
            return Err(EvalError::Parse {
                line: line_no,
                msg: "zero quaternion".into(),
            });
        }
        if let Some(prev) = samples.last() {
            if !(t > prev.t) {
                return Err(EvalError::NonMonotonicTime { line: line_no });
            }
        }
        samples.push(Pose::new(t, Vec3::new(x, y, z), quat_wxyz(qw, qx, qy, qz)));
    }
    Ok(Trajectory { samples })
}

pub fn load_tum(path: &Path) -> Result<Trajectory, EvalError> {
    read_tum(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Writes one TUM line. Values use the shortest representation that parses
/// back to the same `f64`.
pub fn write_tum_pose<W: Write>(w: &mut W, pose: &Pose) -> std::io::Result<()> {
    let q = pose.q;
    writeln!(
        w,
        "{} {} {} {} {} {} {} {}",
        pose.t, pose.p.x, pose.p.y, pose.p.z, q.i, q.j, q.k, q.w
    )
}

pub fn write_tum<W: Write>(mut w: W, traj: &Trajectory) -> std::io::Result<()> {
    for pose in traj.samples() {
        write_tum_pose(&mut w, pose)?;
    }
    w.flush()
}

pub fn save_tum(path: &Path, traj: &Trajectory) -> std::io::Result<()> {
    write_tum(std::io::BufWriter::new(std::fs::File::create(path)?), traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Ape,
    Rpe,
}

/// JSON report written by the `eval` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub align: Alignment,
    /// RPE interval (m); absent for APE.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    pub max_dt: f64,
    pub n_associated: usize,
    pub translation: MetricReport,
    pub rotation: MetricReport,
}

/// Associates and evaluates two trajectories. For RPE, `align` is applied
/// to the estimate before computing increments (which leaves RPE unchanged).
pub fn evaluate(
    reference: &Trajectory,
    estimate: &Trajectory,
    mode: EvalMode,
    align: Alignment,
    delta: f64,
    max_dt: f64,
) -> Result<EvalReport, EvalError> {
    let pairs = associate(reference, estimate, max_dt)?;
    let (translation, rotation) = match mode {
        EvalMode::Ape => ape(&pairs, align, AngleUnit::Deg)?,
        EvalMode::Rpe => rpe(&pairs, delta, AngleUnit::Deg)?,
    };
    Ok(EvalReport {
        mode,
        align,
        delta: (mode == EvalMode::Rpe).then_some(delta),
        max_dt,
        n_associated: pairs.len(),
        translation,
        rotation,
    })
}
