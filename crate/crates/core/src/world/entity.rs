use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2, Vec3};

use super::RockClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    RoverLamarr,
    RoverMae,
    Astronaut,
    Rock,
    SolarPanel,
}

impl EntityKind {
    pub fn detection_class(self) -> DetectionClass {
        match self {
            EntityKind::RoverLamarr | EntityKind::RoverMae => DetectionClass::Rover,
            EntityKind::Astronaut => DetectionClass::Astronaut,
            EntityKind::Rock => DetectionClass::Rock,
            EntityKind::SolarPanel => DetectionClass::SolarPanel,
        }
    }

    pub(super) fn expected_state_matches(self, state: &EntityState) -> bool {
        matches!(
            (self, state),
            (EntityKind::RoverLamarr | EntityKind::RoverMae, EntityState::Rover)
                | (EntityKind::Astronaut, EntityState::Astronaut { .. })
                | (EntityKind::Rock, EntityState::Rock { .. })
                | (EntityKind::SolarPanel, EntityState::Panel { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionClass {
    Astronaut,
    Rover,
    Rock,
    SolarPanel,
    Crack,
    AprilTag,
}

impl DetectionClass {
    pub const ALL: [DetectionClass; 6] = [
        DetectionClass::Astronaut,
        DetectionClass::Rover,
        DetectionClass::Rock,
        DetectionClass::SolarPanel,
        DetectionClass::Crack,
        DetectionClass::AprilTag,
    ];

    /// Classes that become tracked objects (cracks and tags feed inspection instead).
    pub fn is_trackable(self) -> bool {
        !matches!(self, DetectionClass::Crack | DetectionClass::AprilTag)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DetectionClass::Astronaut => "astronaut",
            DetectionClass::Rover => "rover",
            DetectionClass::Rock => "rock",
            DetectionClass::SolarPanel => "solar_panel",
            DetectionClass::Crack => "crack",
            DetectionClass::AprilTag => "april_tag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelDamage {
    #[default]
    None,
    Crack,
    Burnout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EntityState {
    Rover,
    Astronaut { upright: bool },
    Rock { class: RockClass },
    Panel { tag_id: u32, damage: PanelDamage },
}

/// Box dimensions: `w` across the heading, `h` vertical, `depth` along the heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub w: f64,
    pub h: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    pub pose: Pose2,
    pub extent: Extent,
    pub state: EntityState,
    /// Height of the box bottom above the ground.
    #[serde(default)]
    pub lift: f64,
    #[serde(default)]
    pub velocity: Velocity,
}

impl Entity {
    pub const ROVER_EXTENT: Extent = Extent {
        w: 0.5,
        h: 0.6,
        depth: 0.6,
    };
    pub const ASTRONAUT_EXTENT: Extent = Extent {
        w: 0.6,
        h: 2.0,
        depth: 0.4,
    };
    pub const PANEL_EXTENT: Extent = Extent {
        w: 2.0,
        h: 1.0,
        depth: 0.05,
    };
    pub const PANEL_LIFT: f64 = 0.3;

    pub fn rover(id: impl Into<String>, kind: EntityKind, pose: Pose2) -> Self {
        Entity {
            id: id.into(),
            kind,
            pose,
            extent: Self::ROVER_EXTENT,
            state: EntityState::Rover,
            lift: 0.0,
            velocity: Velocity::default(),
        }
    }

    pub fn astronaut(id: impl Into<String>, pose: Pose2) -> Self {
        Entity {
            id: id.into(),
            kind: EntityKind::Astronaut,
            pose,
            extent: Self::ASTRONAUT_EXTENT,
            state: EntityState::Astronaut { upright: true },
            lift: 0.0,
            velocity: Velocity::default(),
        }
    }

    pub fn rock(id: impl Into<String>, pose: Pose2, size: f64, class: RockClass) -> Self {
        Entity {
            id: id.into(),
            kind: EntityKind::Rock,
            pose,
            extent: Extent {
                w: size,
                h: size * 0.8,
                depth: size,
            },
            state: EntityState::Rock { class },
            lift: 0.0,
            velocity: Velocity::default(),
        }
    }

    /// Panel facing along `pose.heading`.
    pub fn panel(id: impl Into<String>, pose: Pose2, tag_id: u32) -> Self {
        Entity {
            id: id.into(),
            kind: EntityKind::SolarPanel,
            pose,
            extent: Self::PANEL_EXTENT,
            state: EntityState::Panel {
                tag_id,
                damage: PanelDamage::None,
            },
            lift: Self::PANEL_LIFT,
            velocity: Velocity::default(),
        }
    }

    pub fn tag_id(&self) -> Option<u32> {
        match self.state {
            EntityState::Panel { tag_id, .. } => Some(tag_id),
            _ => None,
        }
    }

    pub fn is_upright(&self) -> bool {
        !matches!(self.state, EntityState::Astronaut { upright: false })
    }

    pub fn is_mobile(&self) -> bool {
        match self.kind {
            EntityKind::RoverLamarr | EntityKind::RoverMae => true,
            EntityKind::Astronaut => self.is_upright(),
            _ => false,
        }
    }

    /// Solid box used for rendering. A fallen astronaut lies on the ground
    /// with width and height swapped.
    pub fn body_box(&self, ground: f64) -> OrientedBox {
        let Extent { w, h, depth } = self.extent;
        let (lateral, vertical, lift) = if self.is_upright() {
            (w, h, self.lift)
        } else {
            (h, w, 0.0)
        };
        OrientedBox {
            center: Vec3::new(self.pose.x, self.pose.y, ground + lift + vertical / 2.0),
            heading: self.pose.heading,
            half: [lateral / 2.0, depth / 2.0, vertical / 2.0],
        }
    }
}

/// Box with a vertical axis, rotated about z by `heading`.
/// `half` = (lateral, forward, vertical) half-extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub heading: f64,
    pub half: [f64; 3],
}

impl OrientedBox {
    pub fn forward(&self) -> Vec3 {
        Vec3::new(self.heading.cos(), self.heading.sin(), 0.0)
    }

    pub fn lateral(&self) -> Vec3 {
        Vec3::new(-self.heading.sin(), self.heading.cos(), 0.0)
    }

    fn to_local(&self, v: &Vec3) -> Vec3 {
        Vec3::new(v.dot(&self.lateral()), v.dot(&self.forward()), v.z)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (l, f, u) = (self.lateral(), self.forward(), Vec3::z());
        let [hl, hf, hu] = self.half;
        let mut out = [Vec3::zeros(); 8];
        let mut k = 0;
        for sl in [-1.0, 1.0] {
            for sf in [-1.0, 1.0] {
                for su in [-1.0, 1.0] {
                    out[k] = self.center + l * (sl * hl) + f * (sf * hf) + u * (su * hu);
                    k += 1;
                }
            }
        }
        out
    }

    /// Entry distance of the ray `origin + t·dir` (t > 0), slab method.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let o = self.to_local(&(origin - self.center));
        let d = self.to_local(dir);
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for k in 0..3 {
            if d[k].abs() < 1e-12 {
                if o[k].abs() > self.half[k] {
                    return None;
                }
                continue;
            }
            let a = (-self.half[k] - o[k]) / d[k];
            let b = (self.half[k] - o[k]) / d[k];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 {
                return None;
            }
        }
        if t1 <= 0.0 {
            None
        } else if t0 > 0.0 {
            Some(t0)
        } else {
            None
        }
    }
}

/// Pixel bounding box, centre and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(a: [f64; 4]) -> Self {
        BBox {
            cx: a[0],
            cy: a[1],
            w: a[2],
            h: a[3],
        }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.cx, b.cy, b.w, b.h]
    }
}

impl BBox {
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox {
            cx: (x0 + x1) / 2.0,
            cy: (y0 + y1) / 2.0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    pub fn x0(&self) -> f64 {
        self.cx - self.w / 2.0
    }
    pub fn x1(&self) -> f64 {
        self.cx + self.w / 2.0
    }
    pub fn y0(&self) -> f64 {
        self.cy - self.h / 2.0
    }
    pub fn y1(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn aspect(&self) -> f64 {
        self.w / self.h
    }

    /// Clips to `[0, width] × [0, height]`; `None` if nothing remains.
    pub fn clip(&self, width: f64, height: f64) -> Option<BBox> {
        let x0 = self.x0().max(0.0);
        let y0 = self.y0().max(0.0);
        let x1 = self.x1().min(width);
        let y1 = self.y1().min(height);
        (x1 > x0 && y1 > y0).then(|| BBox::from_corners(x0, y0, x1, y1))
    }

    pub fn overlaps(&self, other: &BBox) -> bool {
        self.x0() < other.x1() && other.x0() < self.x1() && self.y0() < other.y1() && other.y0() < self.y1()
    }
}

/// One detector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDetection {
    #[serde(rename = "class")]
    pub class_label: DetectionClass,
    pub bbox: BBox,
    #[serde(rename = "conf")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag_id: Option<u32>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_box_front_face() {
        let b = OrientedBox {
            center: Vec3::new(5.0, 0.0, 1.0),
            heading: 0.3,
            half: [0.3, 0.2, 1.0],
        };
        let t = b.intersect(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(t > 4.5 && t < 5.0);
        assert!(b.intersect(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(-1.0, 0.0, 0.0)).is_none());
        assert!(b.intersect(&Vec3::new(0.0, 0.0, 5.0), &Vec3::new(1.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn fallen_astronaut_swaps_box() {
        let mut a = Entity::astronaut("a", Pose2::new(0.0, 0.0, 0.0));
        let up = a.body_box(0.0);
        a.state = EntityState::Astronaut { upright: false };
        let down = a.body_box(0.0);
        assert_eq!(up.half[0], down.half[2]);
        assert_eq!(up.half[2], down.half[0]);
        assert!(down.center.z < up.center.z);
    }

    #[test]
    fn bbox_clip_and_serde() {
        let b = BBox::from_corners(-5.0, 10.0, 20.0, 30.0).clip(80.0, 60.0).unwrap();
        assert_eq!(b.x0(), 0.0);
        assert!(BBox::from_corners(90.0, 0.0, 95.0, 5.0).clip(80.0, 60.0).is_none());
        assert_eq!(serde_json::to_string(&b).unwrap(), "[10.0,20.0,20.0,20.0]");
    }
}
