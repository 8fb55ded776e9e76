//! Oracles, generators and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BinaryHeap, VecDeque};
use std::path::PathBuf;

use nalgebra::Vector6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rover_core::harness::Scenario;
use rover_core::navmap::{GridGeometry, OccupancyGrid};
use rover_core::perception::{BBoxSample, Track, Tracker, TrackerConfig};
use rover_core::world::DetectionClass;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).expect("fixture scenario loads")
}

// ---- eikonal relaxation oracle ----

/// Smallest root of the two-axis upwind equation
/// `(T - a)^2 + (T - b)^2 = s^2` that is not below either input, falling
/// back to the one-sided value `min(a, b) + s`.
fn upwind(a: f64, b: f64, s: f64) -> f64 {
    let lo = a.min(b);
    let hi = a.max(b);
    if lo == f64::INFINITY {
        return f64::INFINITY;
    }
    if hi.is_finite() {
        let disc = 2.0 * s * s - (a - b) * (a - b);
        if disc >= 0.0 {
            let root = 0.5 * (a + b + disc.sqrt());
            if root >= hi {
                return root;
            }
        }
    }
    lo + s
}

/// Gauss-Seidel relaxation over alternating sweep orders until no value
/// decreases. `cost[k]` is slowness times cell size, `None` for walls.
pub fn relax_eikonal(width: usize, height: usize, sources: &[(usize, f64)], cost: &[Option<f64>]) -> Vec<f64> {
    let n = width * height;
    let mut t = vec![f64::INFINITY; n];
    let mut fixed = vec![false; n];
    for &(k, v) in sources {
        t[k] = t[k].min(v);
        fixed[k] = true;
    }
    let at = |t: &[f64], i: i64, j: i64| {
        if i < 0 || j < 0 || i >= width as i64 || j >= height as i64 {
            f64::INFINITY
        } else {
            t[j as usize * width + i as usize]
        }
    };
    for sweep in 0.. {
        let mut changed = false;
        for a in 0..height {
            for b in 0..width {
                let j = if sweep & 1 == 0 { a } else { height - 1 - a };
                let i = if sweep & 2 == 0 { b } else { width - 1 - b };
                let k = j * width + i;
                if fixed[k] {
                    continue;
                }
                let Some(s) = cost[k] else { continue };
                let (ii, jj) = (i as i64, j as i64);
                let tx = at(&t, ii - 1, jj).min(at(&t, ii + 1, jj));
                let ty = at(&t, ii, jj - 1).min(at(&t, ii, jj + 1));
                let cand = upwind(tx, ty, s);
                if cand < t[k] {
                    t[k] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    t
}

// ---- A* oracle ----

#[derive(PartialEq)]
struct Open(f64, usize);

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

/// 8-connected shortest path over free cells without corner cutting.
/// Returns cell indices from start to goal.
pub fn astar(occupied: &[bool], width: usize, height: usize, start: usize, goal: usize) -> Option<Vec<usize>> {
    if occupied[start] || occupied[goal] {
        return None;
    }
    let n = width * height;
    let (gx, gy) = ((goal % width) as f64, (goal / width) as f64);
    let h = |k: usize| ((k % width) as f64 - gx).hypot((k / width) as f64 - gy);
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start] = 0.0;
    open.push(Open(h(start), start));
    while let Some(Open(_, k)) = open.pop() {
        if closed[k] {
            continue;
        }
        if k == goal {
            let mut path = vec![k];
            let mut c = k;
            while c != start {
                c = parent[c];
                path.push(c);
            }
            path.reverse();
            return Some(path);
        }
        closed[k] = true;
        let (i, j) = ((k % width) as i64, (k / width) as i64);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= width as i64 || nj >= height as i64 {
                    continue;
                }
                let nk = nj as usize * width + ni as usize;
                if occupied[nk] || closed[nk] {
                    continue;
                }
                if di != 0 && dj != 0 {
                    let side_a = j as usize * width + ni as usize;
                    let side_b = nj as usize * width + i as usize;
                    if occupied[side_a] || occupied[side_b] {
                        continue;
                    }
                }
                let step = if di != 0 && dj != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let cand = g[k] + step;
                if cand < g[nk] {
                    g[nk] = cand;
                    parent[nk] = k;
                    open.push(Open(cand + h(nk), nk));
                }
            }
        }
    }
    None
}

/// Brute-force Euclidean distance from `p` to the nearest occupied cell centre.
pub fn clearance(grid: &OccupancyGrid, occupied: &[bool], p: [f64; 2]) -> f64 {
    let g = &grid.geometry;
    (0..g.len())
        .filter(|k| occupied[*k])
        .map(|k| {
            let (i, j) = g.coords(k);
            let c = g.cell_center(i, j);
            (c[0] - p[0]).hypot(c[1] - p[1])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cells connected to `start` through free cells (4-neighbourhood).
pub fn reachable(occupied: &[bool], width: usize, height: usize, start: usize) -> Vec<bool> {
    let mut seen = vec![false; width * height];
    let mut q = VecDeque::from([start]);
    seen[start] = true;
    while let Some(k) = q.pop_front() {
        let (i, j) = (k % width, k / width);
        let mut push = |nk: usize| {
            if !occupied[nk] && !seen[nk] {
                seen[nk] = true;
                q.push_back(nk);
            }
        };
        if i > 0 {
            push(k - 1);
        }
        if i + 1 < width {
            push(k + 1);
        }
        if j > 0 {
            push(k - width);
        }
        if j + 1 < height {
            push(k + width);
        }
    }
    seen
}

// ---- map generators ----

pub fn empty_grid(width: usize, height: usize, res: f64) -> OccupancyGrid {
    OccupancyGrid::new(GridGeometry::new(width, height, res, [0.0, 0.0]), "test")
}

/// Free-space grid with random discs and boxes marked fully occupied.
pub fn random_obstacle_map(r: &mut ChaCha8Rng, width: usize, height: usize, res: f64) -> OccupancyGrid {
    let mut g = empty_grid(width, height, res);
    let lo = g.clamp[0];
    g.logodds.iter_mut().for_each(|l| *l = lo);
    let (wx, wy) = (width as f64 * res, height as f64 * res);
    for _ in 0..r.random_range(2..7) {
        let c = [r.random_range(0.0..wx), r.random_range(0.0..wy)];
        g.stamp_disc(c, r.random_range(0.1..0.5) * wx.min(wy) / 4.0);
    }
    for _ in 0..r.random_range(0..4) {
        let (i0, j0) = (r.random_range(0..width), r.random_range(0..height));
        let (bw, bh) = (r.random_range(1..width / 4), r.random_range(1..height / 4));
        for j in j0..(j0 + bh).min(height) {
            for i in i0..(i0 + bw).min(width) {
                g.set(i, j, 5.0);
            }
        }
    }
    g
}

// ---- fall fixtures ----

pub fn astronaut_track() -> Track {
    let mut t = Tracker::new(TrackerConfig::default()).unwrap();
    t.spawn(DetectionClass::Astronaut, Vector6::zeros(), 0);
    t.tracks()[0].clone()
}

/// One bbox sample: body 1.8 m tall when upright, width chosen for `aspect`.
pub fn body_sample(tick: u64, dt: f64, aspect: f64, z: f64) -> BBoxSample {
    let h = 60.0;
    BBoxSample {
        tick,
        time: tick as f64 * dt,
        cx: 80.0,
        cy: 60.0,
        w: aspect * h,
        h,
        z,
    }
}

/// Upright standing, a free fall of `drop` meters under `g` with the aspect
/// ramping from 0.5 to 1.8 as the body goes down, then lying still.
/// Returns samples at `dt` spacing starting at `tick0`.
pub fn free_fall(tick0: u64, dt: f64, g: f64, drop: f64) -> Vec<BBoxSample> {
    let z0 = 0.9;
    let mut out = Vec::new();
    let mut tick = tick0;
    for _ in 0..10 {
        out.push(body_sample(tick, dt, 0.5, z0));
        tick += 1;
    }
    let t_fall = (2.0 * drop / g).sqrt();
    let mut t = dt;
    loop {
        let d = (0.5 * g * t * t).min(drop);
        let frac = d / drop;
        out.push(body_sample(tick, dt, 0.5 + 1.3 * frac, z0 - d));
        tick += 1;
        if t >= t_fall {
            break;
        }
        t += dt;
    }
    for _ in 0..20 {
        out.push(body_sample(tick, dt, 1.8, z0 - drop));
        tick += 1;
    }
    out
}

/// Upright, then a steady crouch that loses `drop` meters over `duration`
/// seconds while the aspect ramps up the same way, then holds.
pub fn slow_crouch(tick0: u64, dt: f64, drop: f64, duration: f64) -> Vec<BBoxSample> {
    let z0 = 0.9;
    let steps = (duration / dt).ceil() as u64;
    let mut out = Vec::new();
    let mut tick = tick0;
    for _ in 0..10 {
        out.push(body_sample(tick, dt, 0.5, z0));
        tick += 1;
    }
    for k in 1..=steps {
        let frac = k as f64 / steps as f64;
        out.push(body_sample(tick, dt, 0.5 + 1.3 * frac, z0 - drop * frac));
        tick += 1;
    }
    for _ in 0..20 {
        out.push(body_sample(tick, dt, 1.8, z0 - drop));
        tick += 1;
    }
    out
}

/// Standing back up: aspect returns to upright at the original height.
pub fn stand_up(tick0: u64, dt: f64) -> Vec<BBoxSample> {
    (0..10).map(|k| body_sample(tick0 + k, dt, 0.5, 0.9)).collect()
}
