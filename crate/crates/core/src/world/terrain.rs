use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::navmap::{GroundHeight, SegClass};

/// Surface rock class painted on a terrain cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RockClass {
    #[default]
    None,
    Little,
    Far,
    Close,
}

impl RockClass {
    /// Segmentation label the class renders as.
    pub fn seg_class(self) -> SegClass {
        match self {
            RockClass::None => SegClass::Soil,
            RockClass::Little => SegClass::LittleRock,
            RockClass::Far => SegClass::FarRock,
            RockClass::Close => SegClass::CloseRock,
        }
    }
}

/// 2.5D heightfield with a per-cell rock class. Cell `(i, j)` covers
/// `[i·res, (i+1)·res) × [j·res, (j+1)·res)` in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terrain {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub elevation: Vec<f64>,
    pub rock_map: Vec<RockClass>,
}

/// Parameters for seeded value-noise terrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProceduralTerrain {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    /// Peak elevation deviation in meters.
    pub roughness: f64,
    /// Lattice spacing of the value noise in meters.
    pub feature_size: f64,
    /// Fraction of cells painted as little-rock gravel.
    pub gravel_density: f64,
}

impl Default for ProceduralTerrain {
    fn default() -> Self {
        ProceduralTerrain {
            width: 150,
            height: 100,
            resolution: 0.2,
            roughness: 0.0,
            feature_size: 4.0,
            gravel_density: 0.0,
        }
    }
}

impl Terrain {
    pub fn flat(width: usize, height: usize, resolution: f64) -> Self {
        assert!(width * height > 0 && resolution > 0.0);
        Terrain {
            width,
            height,
            resolution,
            elevation: vec![0.0; width * height],
            rock_map: vec![RockClass::None; width * height],
        }
    }

    pub fn procedural(params: &ProceduralTerrain, seed: u64) -> Self {
        let mut t = Terrain::flat(params.width, params.height, params.resolution);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if params.roughness > 0.0 {
            let lw = (t.extent()[0] / params.feature_size).ceil() as usize + 2;
            let lh = (t.extent()[1] / params.feature_size).ceil() as usize + 2;
            let lattice: Vec<f64> = (0..lw * lh).map(|_| rng.random_range(-1.0..1.0)).collect();
            let smooth = |x: f64| x * x * (3.0 - 2.0 * x);
            for j in 0..t.height {
                for i in 0..t.width {
                    let x = (i as f64 + 0.5) * t.resolution / params.feature_size;
                    let y = (j as f64 + 0.5) * t.resolution / params.feature_size;
                    let (xi, yi) = (x.floor() as usize, y.floor() as usize);
                    let (fx, fy) = (smooth(x - xi as f64), smooth(y - yi as f64));
                    let v = |a: usize, b: usize| lattice[b * lw + a];
                    let top = v(xi, yi) * (1.0 - fx) + v(xi + 1, yi) * fx;
                    let bot = v(xi, yi + 1) * (1.0 - fx) + v(xi + 1, yi + 1) * fx;
                    t.elevation[j * t.width + i] = params.roughness * (top * (1.0 - fy) + bot * fy);
                }
            }
        }
        if params.gravel_density > 0.0 {
            for r in t.rock_map.iter_mut() {
                if rng.random::<f64>() < params.gravel_density {
                    *r = RockClass::Little;
                }
            }
        }
        t
    }

    pub fn extent(&self) -> [f64; 2] {
        [
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let e = self.extent();
        x >= 0.0 && y >= 0.0 && x < e[0] && y < e[1]
    }

    fn cell(&self, x: f64, y: f64) -> usize {
        let i = ((x / self.resolution).floor().max(0.0) as usize).min(self.width - 1);
        let j = ((y / self.resolution).floor().max(0.0) as usize).min(self.height - 1);
        j * self.width + i
    }

    /// Elevation of the cell containing `(x, y)`; points outside read the nearest edge cell.
    pub fn elevation_at(&self, x: f64, y: f64) -> f64 {
        self.elevation[self.cell(x, y)]
    }

    pub fn rock_at(&self, x: f64, y: f64) -> RockClass {
        self.rock_map[self.cell(x, y)]
    }

    pub fn set_rock(&mut self, x: f64, y: f64, class: RockClass) {
        let c = self.cell(x, y);
        self.rock_map[c] = class;
    }

    pub fn max_elevation(&self) -> f64 {
        self.elevation.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_flat(&self) -> bool {
        let e0 = self.elevation[0];
        self.elevation.iter().all(|e| *e == e0)
    }

    /// Clamps a point into the terrain's extent.
    pub fn clamp_point(&self, x: f64, y: f64) -> (f64, f64) {
        let e = self.extent();
        let eps = 1e-6;
        (x.clamp(0.0, e[0] - eps), y.clamp(0.0, e[1] - eps))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.width * self.height == 0 {
            return Err("terrain must have at least one cell".into());
        }
        if !(self.resolution > 0.0) {
            return Err("terrain resolution must be positive".into());
        }
        if self.elevation.len() != self.width * self.height || self.rock_map.len() != self.width * self.height {
            return Err("terrain layers do not match width·height".into());
        }
        Ok(())
    }
}

impl GroundHeight for Terrain {
    fn ground_height(&self, x: f64, y: f64) -> f64 {
        self.elevation_at(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn procedural_is_seeded() {
        let p = ProceduralTerrain {
            roughness: 0.1,
            gravel_density: 0.05,
            ..Default::default()
        };
        assert_eq!(Terrain::procedural(&p, 3), Terrain::procedural(&p, 3));
        assert_ne!(Terrain::procedural(&p, 3), Terrain::procedural(&p, 4));
        let t = Terrain::procedural(&p, 3);
        assert!(t.elevation.iter().all(|e| e.abs() <= 0.1 + 1e-12));
    }

    #[test]
    fn lookups_clamp_to_edges() {
        let mut t = Terrain::flat(4, 4, 1.0);
        t.elevation[15] = 2.0;
        assert_eq!(t.elevation_at(3.5, 3.5), 2.0);
        assert_eq!(t.elevation_at(10.0, 10.0), 2.0);
        assert!(!t.contains(4.0, 1.0));
    }
}
