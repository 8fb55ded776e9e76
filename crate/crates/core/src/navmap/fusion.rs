use crate::geometry::Se2;

use super::{GridGeometry, NavmapError, OccupancyGrid};

/// Fuses `b` into `a`'s frame. `b_to_a` maps points expressed in `b`'s frame
/// into `a`'s frame.
///
/// The output lattice is aligned with `a` and extended to cover the union of
/// both extents. Each output cell sums the nearest-cell log-odds of both
/// inputs (zero where an input does not cover it) and is clamped to `a`'s
/// bounds.
pub fn fuse_maps(a: &OccupancyGrid, b: &OccupancyGrid, b_to_a: Se2) -> Result<OccupancyGrid, NavmapError> {
    let ga = a.geometry;
    let gb = b.geometry;
    if (ga.resolution - gb.resolution).abs() > 1e-12 * ga.resolution.max(gb.resolution) {
        return Err(NavmapError::ResolutionMismatch {
            a: ga.resolution,
            b: gb.resolution,
        });
    }
    let res = ga.resolution;

    // b's extent in a's frame
    let bmax = gb.max_corner();
    let corners = [
        gb.origin,
        [bmax[0], gb.origin[1]],
        [gb.origin[0], bmax[1]],
        bmax,
    ]
    .map(|p| b_to_a.apply(p));
    let amax = ga.max_corner();
    let mut lo = ga.origin;
    let mut hi = amax;
    for c in corners {
        lo = [lo[0].min(c[0]), lo[1].min(c[1])];
        hi = [hi[0].max(c[0]), hi[1].max(c[1])];
    }
    // snap to a's lattice; small tolerance keeps exactly aligned edges from growing a cell
    let eps = 1e-9;
    let i0 = ((lo[0] - ga.origin[0]) / res + eps).floor() as i64;
    let j0 = ((lo[1] - ga.origin[1]) / res + eps).floor() as i64;
    let i1 = ((hi[0] - ga.origin[0]) / res - eps).ceil() as i64;
    let j1 = ((hi[1] - ga.origin[1]) / res - eps).ceil() as i64;
    let width = (i1 - i0).max(1) as usize;
    let height = (j1 - j0).max(1) as usize;
    let geometry = GridGeometry::new(
        width,
        height,
        res,
        [ga.origin[0] + i0 as f64 * res, ga.origin[1] + j0 as f64 * res],
    );

    let a_to_b = b_to_a.inverse();
    let mut out = OccupancyGrid::new(geometry, "fused");
    out.clamp = a.clamp;
    for j in 0..height {
        for i in 0..width {
            let la = {
                let (ai, aj) = (i as i64 + i0, j as i64 + j0);
                if ga.in_bounds(ai, aj) {
                    a.get(ai as usize, aj as usize)
                } else {
                    0.0
                }
            };
            let lb = b.at(a_to_b.apply(geometry.cell_center(i, j))).unwrap_or(0.0);
            out.logodds[geometry.index(i, j)] = (la + lb).clamp(out.clamp[0], out.clamp[1]);
        }
    }
    Ok(out)
}
