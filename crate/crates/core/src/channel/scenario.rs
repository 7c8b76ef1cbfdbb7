use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::UlaConfig;
use crate::error::{Error, Result};

/// Default wall reflection coefficient, `0.6·e^{jπ}`.
pub const DEFAULT_GAMMA: Complex64 = Complex64::new(-0.6, 0.0);

/// Vertical planar reflector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    /// Any point on the plane.
    pub anchor: [f64; 3],
    /// Horizontal unit normal pointing into the propagation region.
    pub normal: [f64; 3],
    /// Reflection coefficient, serialized as `[re, im]`.
    #[serde(default = "default_gamma")]
    pub gamma: Complex64,
    /// Extent along the wall tangent, measured from the anchor. `None` is unbounded.
    #[serde(default)]
    pub along: Option<[f64; 2]>,
    /// Vertical extent. `None` is unbounded.
    #[serde(default)]
    pub z_range: Option<[f64; 2]>,
}

fn default_gamma() -> Complex64 {
    DEFAULT_GAMMA
}

impl Wall {
    pub fn infinite(anchor: [f64; 3], normal: [f64; 3]) -> Self {
        Self {
            anchor,
            normal,
            gamma: DEFAULT_GAMMA,
            along: None,
            z_range: None,
        }
    }

    pub(crate) fn anchor_v(&self) -> Vector3<f64> {
        Vector3::from(self.anchor)
    }

    pub(crate) fn normal_v(&self) -> Vector3<f64> {
        Vector3::from(self.normal)
    }

    fn tangent(&self) -> Vector3<f64> {
        Vector3::new(-self.normal[1], self.normal[0], 0.0)
    }

    /// Signed distance of `p` from the plane, positive on the inward side.
    pub(crate) fn side(&self, p: &Vector3<f64>) -> f64 {
        (p - self.anchor_v()).dot(&self.normal_v())
    }

    pub(crate) fn mirror(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - 2.0 * self.side(p) * self.normal_v()
    }

    /// Whether a point on the plane lies within the wall's finite extent.
    pub(crate) fn contains(&self, p: &Vector3<f64>) -> bool {
        let rel = p - self.anchor_v();
        let s = rel.dot(&self.tangent());
        let along_ok = self.along.is_none_or(|[lo, hi]| s >= lo && s <= hi);
        let z_ok = self.z_range.is_none_or(|[lo, hi]| p.z >= lo && p.z <= hi);
        along_ok && z_ok
    }

    /// Fractional position along `from → to` where the segment meets the plane.
    pub(crate) fn crossing(&self, from: &Vector3<f64>, to: &Vector3<f64>) -> Option<f64> {
        let denom = (to - from).dot(&self.normal_v());
        if denom.abs() < 1e-15 {
            return None;
        }
        Some((self.anchor_v() - from).dot(&self.normal_v()) / denom)
    }

    fn validate(&self, index: usize) -> Result<()> {
        let n = self.normal_v();
        if self.normal[2] != 0.0 || (n.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                format!("walls[{index}].normal"),
                "must be a horizontal unit vector",
            ));
        }
        if self.gamma.norm() > 1.0 + 1e-12 {
            return Err(Error::config(
                format!("walls[{index}].gamma"),
                "reflection coefficient magnitude exceeds 1",
            ));
        }
        Ok(())
    }
}

/// Axis-aligned box, used both for occluders and for scenario bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Slab test restricted to the open parameter interval `(eps, 1 - eps)`.
    pub(crate) fn intersects_segment(&self, from: &Vector3<f64>, to: &Vector3<f64>, eps: f64) -> bool {
        let dir = to - from;
        let (mut t0, mut t1) = (eps, 1.0 - eps);
        for i in 0..3 {
            if dir[i].abs() < 1e-15 {
                if from[i] < self.min[i] || from[i] > self.max[i] {
                    return false;
                }
                continue;
            }
            let a = (self.min[i] - from[i]) / dir[i];
            let b = (self.max[i] - from[i]) / dir[i];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Propagation environment around one gNB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Receive array; its origin is the gNB position.
    pub ula: UlaConfig,
    #[serde(default)]
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub blockers: Vec<Aabb>,
    pub max_reflection_order: usize,
    /// Region where UE positions are accepted.
    pub bounds: Aabb,
}

pub const PRESET_NAMES: [&str; 3] = ["freespace", "canyon_o3", "canyon_o5"];

impl Scenario {
    pub fn gnb_position(&self) -> [f64; 3] {
        self.ula.origin
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.max_reflection_order = order;
        self
    }

    /// Line-of-sight only, no reflectors or occluders. Used for calibration.
    pub fn free_space(ula: UlaConfig) -> Self {
        Self {
            name: "free_space".into(),
            ula,
            walls: Vec::new(),
            blockers: Vec::new(),
            max_reflection_order: 0,
            bounds: Aabb::new([-1e6; 3], [1e6; 3]),
        }
    }

    /// Built-in scenarios.
    ///
    /// All share one street canyon: a 24 m wide street running along +X,
    /// lined by building faces at y = ±12 m from x = -20 m to 220 m. The
    /// array sits 8 m up at (0, -4), looking down the street. A parked truck
    /// (x 28–34 m, y 4–7 m, 4.5 m tall) shadows part of the far lane.
    /// `freespace` drops the building faces so only the direct path exists.
    pub fn preset(name: &str) -> Result<Self> {
        let ula = UlaConfig::default().with_origin([0.0, -4.0, 8.0]);
        let facade = |y: f64, ny: f64| Wall {
            anchor: [0.0, y, 0.0],
            normal: [0.0, ny, 0.0],
            gamma: DEFAULT_GAMMA,
            // tangent is (-ny, 0) so s = -ny·x
            along: Some(sorted([20.0 * ny, -220.0 * ny])),
            z_range: Some([0.0, 30.0]),
        };
        let truck = Aabb::new([28.0, 4.0, 0.0], [34.0, 7.0, 4.5]);
        let bounds = Aabb::new([1.0, -11.5, 0.0], [215.0, 11.5, 30.0]);
        let (walls, order) = match name {
            "freespace" => (Vec::new(), 0),
            "canyon_o3" => (vec![facade(-12.0, 1.0), facade(12.0, -1.0)], 3),
            "canyon_o5" => (vec![facade(-12.0, 1.0), facade(12.0, -1.0)], 5),
            other => {
                return Err(Error::config(
                    "scenario",
                    format!("unknown preset '{other}' (expected one of {PRESET_NAMES:?})"),
                ))
            }
        };
        Ok(Self {
            name: name.into(),
            ula,
            walls,
            blockers: vec![truck],
            max_reflection_order: order,
            bounds,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.ula.validate()?;
        for (i, w) in self.walls.iter().enumerate() {
            w.validate(i)?;
        }
        Ok(())
    }
}

fn sorted([a, b]: [f64; 2]) -> [f64; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_validate() {
        for name in PRESET_NAMES {
            let s = Scenario::preset(name).unwrap();
            s.validate().unwrap();
        }
        assert!(matches!(Scenario::preset("moon"), Err(Error::Config { .. })));
    }

    #[test]
    fn facade_extent_covers_street() {
        let s = Scenario::preset("canyon_o5").unwrap();
        for w in &s.walls {
            assert!(w.contains(&Vector3::new(100.0, w.anchor[1], 5.0)));
            assert!(w.contains(&Vector3::new(-19.0, w.anchor[1], 5.0)));
            assert!(!w.contains(&Vector3::new(230.0, w.anchor[1], 5.0)));
        }
    }

    #[test]
    fn mirror_and_crossing() {
        let w = Wall::infinite([0.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let p = Vector3::new(3.0, 5.0, 2.0);
        assert_eq!(w.mirror(&p), Vector3::new(3.0, -5.0, 2.0));
        let t = w.crossing(&p, &Vector3::new(3.0, -5.0, 2.0)).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scenario_json_round_trip() {
        let s = Scenario::preset("canyon_o3").unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn rejects_gain_above_one() {
        let mut s = Scenario::preset("canyon_o3").unwrap();
        s.walls[1].gamma = Complex64::new(0.0, 1.2);
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("walls[1].gamma"), "{err}");
    }
}
