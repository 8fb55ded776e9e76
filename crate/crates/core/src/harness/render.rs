use std::collections::BTreeMap;

use crate::navmap::OccupancyGrid;
use crate::planner::{distance_field, velocity_map, PlannerConfig};
use crate::pnm::Rgb;
use crate::raster::Raster;

use super::TraceEvent;

const PALETTE: [Rgb; 4] = [[220, 40, 40], [40, 90, 220], [30, 160, 60], [200, 140, 20]];

/// FM² speed map in grey (black where the rover may not go) with the
/// waypoints drawn in red.
pub fn render_path(grid: &OccupancyGrid, waypoints: &[[f64; 2]], cfg: &PlannerConfig) -> Raster<Rgb> {
    let g = grid.geometry;
    let grey: Vec<u8> = match distance_field(grid, cfg.p_occ) {
        Ok(d) => velocity_map(&d, cfg.d_sat, cfg.alpha)
            .w
            .iter()
            .map(|w| (w * 255.0).round() as u8)
            .collect(),
        Err(_) => vec![0; g.len()],
    };
    let mut img = Raster::filled(g.width, g.height, [0u8; 3]);
    for j in 0..g.height {
        for i in 0..g.width {
            let v = grey[g.index(i, j)];
            img.set(i, g.height - 1 - j, [v, v, v]);
        }
    }
    for p in waypoints {
        if let Some((i, j)) = g.cell_of(*p) {
            img.set(i, g.height - 1 - j, PALETTE[0]);
        }
    }
    img
}

/// Top-down plot of the rover tracks recorded in a trace, one colour per
/// rover, at `px_per_m` over the bounding box of all poses.
pub fn render_trace(trace: &[TraceEvent], px_per_m: f64) -> Raster<Rgb> {
    let mut tracks: BTreeMap<String, Vec<[f64; 2]>> = BTreeMap::new();
    for e in trace.iter().filter(|e| e.kind == "poses") {
        let Some(rovers) = e.payload.get("rovers").and_then(|r| r.as_object()) else { continue };
        for (id, p) in rovers {
            if let Ok([x, y, _]) = serde_json::from_value::<[f64; 3]>(p.clone()) {
                tracks.entry(id.clone()).or_default().push([x, y]);
            }
        }
    }
    let pts = tracks.values().flatten();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        return Raster::filled(1, 1, [255; 3]);
    }
    let margin = 1.0;
    let w = (((hi[0] - lo[0]) + 2.0 * margin) * px_per_m).ceil() as usize + 1;
    let h = (((hi[1] - lo[1]) + 2.0 * margin) * px_per_m).ceil() as usize + 1;
    let mut img = Raster::filled(w, h, [255u8; 3]);
    for (k, pts) in tracks.values().enumerate() {
        for p in pts {
            let x = ((p[0] - lo[0] + margin) * px_per_m) as usize;
            let y = ((p[1] - lo[1] + margin) * px_per_m) as usize;
            img.set(x.min(w - 1), h - 1 - y.min(h - 1), PALETTE[k % PALETTE.len()]);
        }
    }
    img
}
