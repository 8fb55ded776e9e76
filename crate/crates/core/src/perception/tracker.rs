use std::cmp::Ordering;
use std::collections::VecDeque;

use nalgebra::{Matrix3, Matrix3x6, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::world::{BBox, DetectionClass};

use super::LocatedDetection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub gate_distance: f64,
    pub confirm_hits: u32,
    pub delete_misses: u32,
    pub max_confirmed: usize,
    pub process_noise_accel: f64,
    pub measurement_noise: f64,
    pub init_velocity_sigma: f64,
    pub dt: f64,
    pub history_len: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            gate_distance: 2.0,
            confirm_hits: 3,
            delete_misses: 5,
            max_confirmed: 60,
            process_noise_accel: 0.5,
            measurement_noise: 0.05,
            init_velocity_sigma: 1.0,
            dt: 0.1,
            history_len: 64,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrackerError {
    #[error("tick {tick} does not follow previous tick {last}")]
    NonMonotoneTick { tick: u64, last: u64 },
    #[error("invalid tracker config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBoxSample {
    pub tick: u64,
    /// Simulated seconds.
    pub time: f64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    /// Measured world height of the object centre.
    pub z: f64,
}

impl BBoxSample {
    pub fn aspect(&self) -> f64 {
        self.w / self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub class_label: DetectionClass,
    pub state: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    pub bbox_history: VecDeque<BBoxSample>,
    pub status: TrackStatus,
    pub hits: u32,
    pub misses: u32,
    pub last_tick: u64,
}

impl Track {
    pub fn position(&self) -> [f64; 3] {
        [self.state[0], self.state[1], self.state[2]]
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.state[3], self.state[4], self.state[5]]
    }

    pub fn distance_to(&self, other: &Track) -> f64 {
        (self.state.fixed_rows::<3>(0) - other.state.fixed_rows::<3>(0)).norm()
    }
}

/// Tracker input: a world-frame position measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackInput {
    pub class_label: DetectionClass,
    pub position: [f64; 3],
    pub bbox: Option<BBox>,
}

impl From<&LocatedDetection> for TrackInput {
    fn from(l: &LocatedDetection) -> Self {
        TrackInput {
            class_label: l.raw.class_label,
            position: l.world,
            bbox: Some(l.raw.bbox),
        }
    }
}

/// Constant-velocity Kalman tracker with greedy nearest-neighbour association.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_tick: Option<u64>,
    /// Track id assigned to each input of the last step, in input order.
    pub last_assignments: Vec<u64>,
}

fn transition(dt: f64) -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    for k in 0..3 {
        f[(k, k + 3)] = dt;
    }
    f
}

fn process_noise(dt: f64, sigma_a: f64) -> Matrix6<f64> {
    let q = sigma_a * sigma_a;
    let mut m = Matrix6::zeros();
    for k in 0..3 {
        m[(k, k)] = q * dt.powi(4) / 4.0;
        m[(k, k + 3)] = q * dt.powi(3) / 2.0;
        m[(k + 3, k)] = q * dt.powi(3) / 2.0;
        m[(k + 3, k + 3)] = q * dt * dt;
    }
    m
}

fn observation() -> Matrix3x6<f64> {
    let mut h = Matrix3x6::zeros();
    for k in 0..3 {
        h[(k, k)] = 1.0;
    }
    h
}

fn symmetrise(p: &mut Matrix6<f64>) {
    *p = (*p + p.transpose()) * 0.5;
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackerError> {
        if config.max_confirmed < 1 {
            return Err(TrackerError::InvalidConfig("max_confirmed must be at least 1".into()));
        }
        if config.gate_distance <= 0.0 || config.dt <= 0.0 || config.measurement_noise < 0.0 {
            return Err(TrackerError::InvalidConfig(
                "gate_distance and dt must be positive, measurement_noise non-negative".into(),
            ));
        }
        Ok(Tracker {
            config,
            tracks: Vec::new(),
            next_id: 1,
            last_tick: None,
            last_assignments: Vec::new(),
        })
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn confirmed(&self) -> impl Iterator<Item = &Track> {
        self.tracks.iter().filter(|t| t.status == TrackStatus::Confirmed)
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn get(&self, id: u64) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// Creates a Tentative track with the next id. Velocity starts from `state[3..]`.
    pub fn spawn(&mut self, class_label: DetectionClass, state: Vector6<f64>, tick: u64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let r = self.config.measurement_noise.max(1e-6).powi(2);
        let v = self.config.init_velocity_sigma.powi(2);
        let covariance = Matrix6::from_diagonal(&Vector6::new(r, r, r, v, v, v));
        self.tracks.push(Track {
            id,
            class_label,
            state,
            covariance,
            bbox_history: VecDeque::new(),
            status: TrackStatus::Tentative,
            hits: 1,
            misses: 0,
            last_tick: tick,
        });
        id
    }

    fn predict(&mut self, tick: u64) {
        let sigma_a = self.config.process_noise_accel;
        for t in &mut self.tracks {
            let dt = self.config.dt * (tick - t.last_tick) as f64;
            let f = transition(dt);
            t.state = f * t.state;
            t.covariance = f * t.covariance * f.transpose() + process_noise(dt, sigma_a);
            symmetrise(&mut t.covariance);
            t.last_tick = tick;
        }
    }

    fn update(track: &mut Track, z: [f64; 3], sigma: f64) {
        let h = observation();
        let r = Matrix3::identity() * sigma.max(1e-6).powi(2);
        let y = Vector3::from(z) - h * track.state;
        let s = h * track.covariance * h.transpose() + r;
        let s_inv = s.try_inverse().expect("innovation covariance is positive definite");
        let k = track.covariance * h.transpose() * s_inv;
        track.state += k * y;
        let a = Matrix6::identity() - k * h;
        track.covariance = a * track.covariance * a.transpose() + k * r * k.transpose();
        symmetrise(&mut track.covariance);
    }

    fn push_history(&mut self, idx: usize, input: &TrackInput, tick: u64) {
        let Some(b) = input.bbox else { return };
        let cap = self.config.history_len.max(2);
        let time = tick as f64 * self.config.dt;
        let h = &mut self.tracks[idx].bbox_history;
        h.push_back(BBoxSample {
            tick,
            time,
            cx: b.cx,
            cy: b.cy,
            w: b.w,
            h: b.h,
            z: input.position[2],
        });
        while h.len() > cap {
            h.pop_front();
        }
    }

    /// Predict, associate, update, spawn, then promote or retire tracks.
    pub fn step(&mut self, inputs: &[TrackInput], tick: u64) -> Result<&[Track], TrackerError> {
        if let Some(last) = self.last_tick {
            if tick <= last {
                return Err(TrackerError::NonMonotoneTick { tick, last });
            }
        }
        self.last_tick = Some(tick);
        self.predict(tick);

        let gate = self.config.gate_distance;
        let mut pairs: Vec<(f64, u64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            for (di, d) in inputs.iter().enumerate() {
                if d.class_label != t.class_label {
                    continue;
                }
                let dist = (Vector3::from(d.position) - t.state.fixed_rows::<3>(0)).norm();
                if dist <= gate {
                    pairs.push((dist, t.id, di, ti));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut track_used = vec![false; self.tracks.len()];
        let mut assignment: Vec<Option<u64>> = vec![None; inputs.len()];
        for (_, id, di, ti) in pairs {
            if track_used[ti] || assignment[di].is_some() {
                continue;
            }
            track_used[ti] = true;
            assignment[di] = Some(id);
            Self::update(&mut self.tracks[ti], inputs[di].position, self.config.measurement_noise);
            let t = &mut self.tracks[ti];
            t.hits += 1;
            t.misses = 0;
            self.push_history(ti, &inputs[di], tick);
        }
        for (ti, used) in track_used.iter().enumerate() {
            if !used {
                let t = &mut self.tracks[ti];
                t.misses += 1;
                t.hits = 0;
            }
        }
        // new tracks in a canonical order so ids do not depend on input order
        let mut fresh: Vec<usize> = (0..inputs.len()).filter(|di| assignment[*di].is_none()).collect();
        fresh.sort_by(|a, b| {
            let (pa, pb) = (&inputs[*a], &inputs[*b]);
            pa.class_label
                .cmp(&pb.class_label)
                .then_with(|| pa.position.iter().zip(&pb.position).fold(Ordering::Equal, |o, (x, y)| o.then(x.total_cmp(y))))
        });
        for di in fresh {
            let input = &inputs[di];
            let p = input.position;
            let id = self.spawn(input.class_label, Vector6::new(p[0], p[1], p[2], 0.0, 0.0, 0.0), tick);
            let idx = self.tracks.len() - 1;
            self.push_history(idx, input, tick);
            assignment[di] = Some(id);
        }

        let mut confirmed = self.confirmed().count();
        for t in &mut self.tracks {
            if t.misses >= self.config.delete_misses {
                t.status = TrackStatus::Lost;
            } else if t.status == TrackStatus::Tentative
                && t.hits >= self.config.confirm_hits
                && confirmed < self.config.max_confirmed
            {
                t.status = TrackStatus::Confirmed;
                confirmed += 1;
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Lost);
        self.last_assignments = assignment.into_iter().map(|a| a.expect("every input assigned")).collect();
        Ok(&self.tracks)
    }
}
