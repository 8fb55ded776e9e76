use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Upwind update for a 4-connected grid. `ta`, `tb` are the smaller
/// neighbour values along each axis (either may be infinite), `s` the
/// slowness times cell size.
pub fn eikonal_update(ta: f64, tb: f64, s: f64) -> f64 {
    let (ta, tb) = if ta <= tb { (ta, tb) } else { (tb, ta) };
    if !tb.is_finite() || tb - ta >= s {
        ta + s
    } else {
        let d = ta - tb;
        (ta + tb + (2.0 * s * s - d * d).sqrt()) / 2.0
    }
}

#[derive(PartialEq)]
struct Entry {
    t: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (t, idx)
        other.t.total_cmp(&self.t).then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn axis_minima(t: &[f64], width: usize, height: usize, idx: usize, accepted: Option<&[bool]>) -> (f64, f64) {
    let (i, j) = (idx % width, idx / width);
    let val = |k: usize| match accepted {
        Some(a) if !a[k] => f64::INFINITY,
        _ => t[k],
    };
    let mut tx = f64::INFINITY;
    let mut ty = f64::INFINITY;
    if i > 0 {
        tx = tx.min(val(idx - 1));
    }
    if i + 1 < width {
        tx = tx.min(val(idx + 1));
    }
    if j > 0 {
        ty = ty.min(val(idx - width));
    }
    if j + 1 < height {
        ty = ty.min(val(idx + width));
    }
    (tx, ty)
}

/// Narrow-band fast marching. `cost(idx)` is cell size over speed, or
/// `None` for cells the front may not enter. Sources start at their given
/// value and are never updated.
pub fn march(width: usize, height: usize, sources: &[(usize, f64)], cost: impl Fn(usize) -> Option<f64>) -> Vec<f64> {
    let n = width * height;
    let mut t = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let mut heap = BinaryHeap::new();
    // sources are boundary values and never relaxed
    let mut fixed = vec![false; n];
    for &(idx, v) in sources {
        fixed[idx] = true;
        if v < t[idx] {
            t[idx] = v;
            heap.push(Entry { t: v, idx });
        }
    }
    while let Some(Entry { t: tv, idx }) = heap.pop() {
        if accepted[idx] || tv > t[idx] {
            continue;
        }
        accepted[idx] = true;
        let (i, j) = (idx % width, idx / width);
        let mut neighbours = [usize::MAX; 4];
        if i > 0 {
            neighbours[0] = idx - 1;
        }
        if i + 1 < width {
            neighbours[1] = idx + 1;
        }
        if j > 0 {
            neighbours[2] = idx - width;
        }
        if j + 1 < height {
            neighbours[3] = idx + width;
        }
        for nb in neighbours {
            if nb == usize::MAX || accepted[nb] || fixed[nb] {
                continue;
            }
            let Some(s) = cost(nb) else { continue };
            let (tx, ty) = axis_minima(&t, width, height, nb, Some(&accepted));
            let cand = eikonal_update(tx, ty, s);
            if cand < t[nb] {
                t[nb] = cand;
                heap.push(Entry { t: cand, idx: nb });
            }
        }
    }
    t
}
