use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::geometry::Vec3;
use crate::navmap::{SegClass, SegMask};
use crate::raster::Raster;

use super::{BBox, DetectionClass, Entity, EntityKind, EntityState, PanelDamage, RawDetection, World, WorldError};

/// One synthetic camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub agent_id: String,
    pub tick: u64,
    pub rgb_detections: Vec<RawDetection>,
    /// Euclidean range along each pixel ray in meters; `+∞` where nothing is hit.
    pub depth: Raster<f64>,
    pub seg_mask: SegMask,
    pub camera: CameraModel,
}

/// Noiseless visibility record for an entity inside the camera frustum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleEntity {
    pub entity_id: String,
    pub class: DetectionClass,
    /// Body centre in world coordinates.
    pub position: [f64; 3],
}

const TAG_SIZE: f64 = 0.15;
const CRACK_SIZE: f64 = 0.3;

fn entity_center(world: &World, e: &Entity) -> Vec3 {
    e.body_box(world.terrain.elevation_at(e.pose.x, e.pose.y)).center
}

fn is_visible(world: &World, cam: &CameraModel, p: &Vec3) -> bool {
    let pc = cam.world_to_camera(p);
    if pc.z <= 0.0 || pc.norm() > world.sensor.max_range {
        return false;
    }
    cam.project(&pc).is_some_and(|uv| cam.in_image(uv))
}

/// Entities whose centre lies in front of the camera, inside the image and
/// within `max_range`.
pub fn ground_truth_visible(world: &World, agent_id: &str) -> Result<Vec<VisibleEntity>, WorldError> {
    let cam = world.camera_for(agent_id)?;
    Ok(world
        .entities
        .iter()
        .filter(|e| e.id != agent_id)
        .filter_map(|e| {
            let c = entity_center(world, e);
            is_visible(world, &cam, &c).then(|| VisibleEntity {
                entity_id: e.id.clone(),
                class: e.kind.detection_class(),
                position: [c.x, c.y, c.z],
            })
        })
        .collect())
}

fn project_bbox(cam: &CameraModel, pts: &[Vec3]) -> Option<BBox> {
    let mut x0 = f64::INFINITY;
    let mut y0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    let mut any = false;
    for p in pts {
        let pc = cam.world_to_camera(p);
        if pc.z < 0.05 {
            continue;
        }
        let uv = cam.project(&pc)?;
        x0 = x0.min(uv[0]);
        x1 = x1.max(uv[0]);
        y0 = y0.min(uv[1]);
        y1 = y1.max(uv[1]);
        any = true;
    }
    let k = &cam.intrinsics;
    any.then(|| BBox::from_corners(x0, y0, x1, y1))
        .and_then(|b| b.clip(k.width as f64, k.height as f64))
}

/// Corners of a rectangle on a panel's front face, offset from the face centre.
pub(crate) fn panel_patch(world: &World, panel: &Entity, lateral: f64, up: f64, w: f64, h: f64) -> [Vec3; 4] {
    let b = panel.body_box(world.terrain.elevation_at(panel.pose.x, panel.pose.y));
    let face = b.center + b.forward() * b.half[1];
    let c = face + b.lateral() * lateral + Vec3::z() * up;
    let (l, u) = (b.lateral() * (w / 2.0), Vec3::z() * (h / 2.0));
    [c - l - u, c + l - u, c + l + u, c - l + u]
}

fn patch_center(p: &[Vec3; 4]) -> Vec3 {
    (p[0] + p[1] + p[2] + p[3]) / 4.0
}

fn faces_camera(panel: &Entity, cam: &CameraModel, p: &Vec3) -> bool {
    let f = Vec3::new(panel.pose.heading.cos(), panel.pose.heading.sin(), 0.0);
    f.dot(&(cam.center() - p)) > 0.0
}

/// April tag patch on a panel: centred low on the front face.
pub(crate) fn tag_patch(world: &World, panel: &Entity) -> [Vec3; 4] {
    let h = panel.extent.h;
    panel_patch(world, panel, 0.0, -(h / 2.0 - TAG_SIZE), TAG_SIZE, TAG_SIZE)
}

pub(crate) fn crack_patch(world: &World, panel: &Entity) -> [Vec3; 4] {
    panel_patch(world, panel, panel.extent.w * 0.25, 0.1, CRACK_SIZE, CRACK_SIZE)
}

struct Hit {
    t: f64,
    class: SegClass,
}

fn march_terrain(world: &World, origin: &Vec3, dir: &Vec3, max_t: f64, flat: Option<f64>, max_elev: f64) -> Option<Hit> {
    let terrain = &world.terrain;
    if let Some(e) = flat {
        if dir.z >= -1e-12 {
            return None;
        }
        let t = (origin.z - e) / -dir.z;
        if t <= 0.0 || t > max_t {
            return None;
        }
        let p = origin + dir * t;
        if !terrain.contains(p.x, p.y) {
            return None;
        }
        return Some(Hit {
            t,
            class: terrain.rock_at(p.x, p.y).seg_class(),
        });
    }
    if dir.z >= 0.0 && origin.z > max_elev {
        return None;
    }
    let step = (terrain.resolution * 0.5).min(0.1);
    let mut t_prev = 0.0;
    let mut t = step;
    while t <= max_t {
        let p = origin + dir * t;
        if !terrain.contains(p.x, p.y) {
            return None;
        }
        if p.z <= terrain.elevation_at(p.x, p.y) {
            let (mut lo, mut hi) = (t_prev, t);
            for _ in 0..10 {
                let mid = 0.5 * (lo + hi);
                let q = origin + dir * mid;
                if q.z <= terrain.elevation_at(q.x, q.y) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let q = origin + dir * hi;
            return Some(Hit {
                t: hi,
                class: terrain.rock_at(q.x, q.y).seg_class(),
            });
        }
        t_prev = t;
        t += step;
    }
    None
}

fn entity_seg_class(e: &Entity) -> SegClass {
    match e.state {
        EntityState::Rock { class } => class.seg_class(),
        _ => SegClass::NotLabelled,
    }
}

fn render_images(world: &World, agent_id: &str, cam: &CameraModel, rng: &mut ChaCha8Rng) -> (Raster<f64>, SegMask) {
    let k = cam.intrinsics;
    let max_range = world.sensor.max_range;
    let origin = cam.center();
    let boxes: Vec<_> = world
        .entities
        .iter()
        .filter(|e| e.id != agent_id)
        .filter_map(|e| {
            let b = e.body_box(world.terrain.elevation_at(e.pose.x, e.pose.y));
            let reach = b.half.iter().map(|h| h * h).sum::<f64>().sqrt();
            ((b.center - origin).norm() <= max_range + reach).then_some((b, entity_seg_class(e)))
        })
        .collect();
    let flat = world.terrain.is_flat().then(|| world.terrain.elevation[0]);
    let max_elev = world.terrain.max_elevation();
    let noise = (world.noise.depth_noise_sigma > 0.0).then(|| Normal::new(0.0, world.noise.depth_noise_sigma).unwrap());

    let mut depth = Raster::filled(k.width, k.height, f64::INFINITY);
    let mut seg = Raster::filled(k.width, k.height, SegClass::Soil);
    for v in 0..k.height {
        for u in 0..k.width {
            let dir = cam.direction_to_world(&cam.pixel_ray(u as f64 + 0.5, v as f64 + 0.5));
            let mut best = march_terrain(world, &origin, &dir, max_range, flat, max_elev);
            for (b, class) in &boxes {
                if let Some(t) = b.intersect(&origin, &dir) {
                    if t <= max_range && best.as_ref().is_none_or(|h| t < h.t) {
                        best = Some(Hit { t, class: *class });
                    }
                }
            }
            if let Some(hit) = best {
                let mut d = hit.t;
                if let Some(n) = &noise {
                    d = (d + n.sample(rng)).max(0.01);
                }
                depth.set(u, v, d);
                seg.set(u, v, hit.class);
            }
        }
    }
    (depth, seg)
}

fn jitter(b: BBox, sigma: f64, rng: &mut ChaCha8Rng) -> BBox {
    if sigma <= 0.0 {
        return b;
    }
    let n = Normal::new(0.0, sigma).unwrap();
    BBox {
        cx: b.cx + n.sample(rng),
        cy: b.cy + n.sample(rng),
        w: (b.w + n.sample(rng)).max(1.0),
        h: (b.h + n.sample(rng)).max(1.0),
    }
}

/// Synthesises the frame an agent's camera would produce at the current world state.
///
/// Detections cover every visible entity (minus false negatives) plus April
/// tags and cracks on panels facing the camera, plus false-positive clutter.
/// Output is a pure function of world state, noise seed, agent and tick.
pub fn render_frame(world: &World, agent_id: &str, tick: u64) -> Result<SensorFrame, WorldError> {
    let cam = world.camera_for(agent_id)?;
    let mut rng = world.noise.frame_rng(agent_id, tick);
    let (depth, seg_mask) = render_images(world, agent_id, &cam, &mut rng);
    let k = cam.intrinsics;
    let noise = &world.noise;

    let mut candidates: Vec<(DetectionClass, BBox, Option<u32>)> = Vec::new();
    for e in world.entities.iter().filter(|e| e.id != agent_id) {
        let ground = world.terrain.elevation_at(e.pose.x, e.pose.y);
        let body = e.body_box(ground);
        if is_visible(world, &cam, &body.center) {
            if let Some(b) = project_bbox(&cam, &body.corners()) {
                candidates.push((e.kind.detection_class(), b, None));
            }
        }
        if let (EntityKind::SolarPanel, EntityState::Panel { tag_id, damage }) = (e.kind, &e.state) {
            let tag = tag_patch(world, e);
            let tc = patch_center(&tag);
            if faces_camera(e, &cam, &tc) && is_visible(world, &cam, &tc) {
                if let Some(b) = project_bbox(&cam, &tag) {
                    candidates.push((DetectionClass::AprilTag, b, Some(*tag_id)));
                }
            }
            if *damage == PanelDamage::Crack {
                let crack = crack_patch(world, e);
                let cc = patch_center(&crack);
                if faces_camera(e, &cam, &cc) && is_visible(world, &cam, &cc) {
                    if let Some(b) = project_bbox(&cam, &crack) {
                        candidates.push((DetectionClass::Crack, b, None));
                    }
                }
            }
        }
    }

    let mut detections = Vec::new();
    for (class, bbox, tag_id) in candidates {
        let dropped = rng.random::<f64>() < noise.fn_(class);
        let bbox = jitter(bbox, noise.bbox_jitter_sigma, &mut rng);
        let confidence = rng.random_range(0.75..0.99);
        if dropped {
            continue;
        }
        if let Some(bbox) = bbox.clip(k.width as f64, k.height as f64) {
            detections.push(RawDetection {
                class_label: class,
                bbox,
                confidence,
                tag_id,
            });
        }
    }
    for class in DetectionClass::ALL {
        if noise.fp(class) > 0.0 && rng.random::<f64>() < noise.fp(class) {
            let (w, h) = (k.width as f64, k.height as f64);
            let bw = rng.random_range(3.0..(w / 4.0).max(4.0));
            let bh = rng.random_range(3.0..(h / 4.0).max(4.0));
            let bbox = BBox {
                cx: rng.random_range(0.0..w),
                cy: rng.random_range(0.0..h),
                w: bw,
                h: bh,
            };
            let tag_id = (class == DetectionClass::AprilTag).then(|| 9000 + rng.random_range(0..100));
            if let Some(bbox) = bbox.clip(w, h) {
                detections.push(RawDetection {
                    class_label: class,
                    bbox,
                    confidence: rng.random_range(0.3..0.6),
                    tag_id,
                });
            }
        }
    }

    Ok(SensorFrame {
        agent_id: agent_id.to_string(),
        tick,
        rgb_detections: detections,
        depth,
        seg_mask,
        camera: cam,
    })
}
