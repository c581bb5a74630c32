//! File formats: JSON Lines sensor logs, trajectory CSV and chain JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lie_core::Pose64;
use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{BaseEstimate, EncoderSample, ImuSample};
use crate::kinematics::{quat_to_rotation, rotation_to_quat, ChainSpec, KinematicChain};

/// Payload of one log line, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Imu {
        acc: [f64; 3],
        gyro: [f64; 3],
        /// Attitude output `(w, x, y, z)`, if the unit provides one.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        orientation: Option<[f64; 4]>,
    },
    Encoder {
        s: Vec<f64>,
        #[serde(default)]
        sdot: Vec<f64>,
    },
    /// Sole-frame wrenches `(fx, fy, fz, tx, ty, tz)`.
    Wrench { left: [f64; 6], right: [f64; 6] },
    Contact { left: bool, right: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    pub t: f64,
    #[serde(flatten)]
    pub payload: Payload,
}

impl SensorRecord {
    fn stream(&self) -> usize {
        match self.payload {
            Payload::Imu { .. } => 0,
            Payload::Encoder { .. } => 1,
            Payload::Wrench { .. } => 2,
            Payload::Contact { .. } => 3,
        }
    }
}

pub fn write_log(path: &Path, records: &[SensorRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<SensorRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    let mut last = [f64::NEG_INFINITY; 4];
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SensorRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if !record.t.is_finite() {
            return Err(Error::Input(format!("{}:{}: non-finite timestamp", path.display(), i + 1)));
        }
        let k = record.stream();
        if record.t < last[k] {
            return Err(Error::Input(format!("{}:{}: timestamps go backwards", path.display(), i + 1)));
        }
        last[k] = record.t;
        out.push(record);
    }
    Ok(out)
}

/// Everything logged at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub t: f64,
    pub imu: Option<ImuSample>,
    pub encoders: Option<EncoderSample>,
    pub wrenches: Option<[[f64; 6]; 2]>,
    pub contacts: Option<[bool; 2]>,
}

/// Groups records by timestamp, in time order.
pub fn frames(records: &[SensorRecord]) -> Result<Vec<Frame>> {
    let mut sorted: Vec<&SensorRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut out: Vec<Frame> = Vec::new();
    for r in sorted {
        if out.last().is_none_or(|f| f.t != r.t) {
            out.push(Frame { t: r.t, ..Default::default() });
        }
        let frame = out.last_mut().unwrap();
        match &r.payload {
            Payload::Imu { acc, gyro, orientation } => {
                frame.imu = Some(ImuSample {
                    acc: Vector3::from(*acc),
                    gyro: Vector3::from(*gyro),
                    orientation: orientation.map(quat_to_rotation),
                })
            }
            Payload::Encoder { s, sdot } => {
                let sdot = if sdot.is_empty() { vec![0.0; s.len()] } else { sdot.clone() };
                if sdot.len() != s.len() {
                    return Err(Error::Input(format!("encoder record at t={}: s and sdot lengths differ", r.t)));
                }
                frame.encoders = Some(EncoderSample { s: DVector::from_vec(s.clone()), sdot: DVector::from_vec(sdot) })
            }
            Payload::Wrench { left, right } => frame.wrenches = Some([*left, *right]),
            Payload::Contact { left, right } => frame.contacts = Some([*left, *right]),
        }
    }
    Ok(out)
}

/// One row of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub pose: Pose64,
    pub v: Vector3<f64>,
    pub extras: Vec<(String, f64)>,
}

impl TrajectoryRow {
    pub fn from_estimate(t: f64, e: BaseEstimate) -> Self {
        Self { t, pose: e.pose, v: e.v, extras: e.extras }
    }
}

pub const TRAJECTORY_HEADER: [&str; 11] = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz"];

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Input(format!("{other:?}")),
    }
}

pub fn write_trajectory<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let extra_names: Vec<&str> = rows.first().map(|r| r.extras.iter().map(|(n, _)| n.as_str()).collect()).unwrap_or_default();
    let header: Vec<&str> = TRAJECTORY_HEADER.iter().copied().chain(extra_names.iter().copied()).collect();
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        let q = rotation_to_quat(&r.pose.rot);
        let p = r.pose.trans;
        let mut fields = vec![r.t, p.x, p.y, p.z, q[0], q[1], q[2], q[3], r.v.x, r.v.y, r.v.z];
        fields.extend(r.extras.iter().map(|(_, v)| *v));
        w.write_record(fields.iter().map(|x| format!("{x:e}"))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    write_trajectory(BufWriter::new(File::create(path)?), rows)
}

pub fn load_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    if header.len() < TRAJECTORY_HEADER.len() || header.iter().zip(TRAJECTORY_HEADER).any(|(a, b)| a != b) {
        return Err(Error::Input(format!("{}: trajectory header must start with {}", path.display(), TRAJECTORY_HEADER.join(","))));
    }
    let extras = &header[TRAJECTORY_HEADER.len()..];
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let x: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Input(format!("{}: row {}: {e}", path.display(), i + 2)))?;
        if x.len() != header.len() {
            return Err(Error::Input(format!("{}: row {} has {} fields", path.display(), i + 2, x.len())));
        }
        out.push(TrajectoryRow {
            t: x[0],
            pose: Pose64::new(quat_to_rotation([x[4], x[5], x[6], x[7]]), Vector3::new(x[1], x[2], x[3])),
            v: Vector3::new(x[8], x[9], x[10]),
            extras: extras.iter().cloned().zip(x[11..].iter().copied()).collect(),
        });
    }
    Ok(out)
}

pub fn load_chain(path: &Path) -> Result<KinematicChain> {
    let spec: ChainSpec = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    spec.build()
}

pub fn save_chain(path: &Path, chain: &KinematicChain) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &ChainSpec::from_chain(chain))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Reads a JSON file into `T`, reporting the path on failure.
pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}
