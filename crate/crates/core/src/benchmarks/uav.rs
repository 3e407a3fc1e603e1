//! Simplified UAV path planning: choose `K` waypoints in a 3D box so that the
//! polyline start → waypoints → goal is short and stays clear of vertical
//! cylindrical threats.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::RngStream;
use crate::{Error, Result};

/// Samples per segment for the penetration integral.
pub const SAMPLES_PER_SEGMENT: usize = 32;

/// Vertical cylinder standing on the ground plane `z = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    /// Axis position `(x, y)` in meters.
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
}

impl Cylinder {
    /// How far `p` lies inside the cylinder, measured radially; 0 outside.
    pub fn penetration(&self, p: [f64; 3]) -> f64 {
        if p[2] < 0.0 || p[2] > self.height {
            return 0.0;
        }
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        (self.radius - (dx * dx + dy * dy).sqrt()).max(0.0)
    }
}

/// Axis-aligned flight region (meters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UavScenario {
    pub start: [f64; 3],
    pub goal: [f64; 3],
    /// Number of free waypoints `K`; the decision vector has `3K` entries.
    pub nodes: usize,
    pub threats: Vec<Cylinder>,
    /// Cost per meter of path length spent at one meter of penetration.
    pub penalty: f64,
    pub region: Region,
}

impl UavScenario {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidArgument("scenario needs at least one node".into()));
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad penalty {}", self.penalty)));
        }
        for k in 0..3 {
            if !(self.region.lower[k] < self.region.upper[k]) {
                return Err(Error::InvalidArgument(format!("degenerate region axis {k}")));
            }
        }
        for (i, c) in self.threats.iter().enumerate() {
            if !(c.radius > 0.0 && c.height > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "threat {i} needs positive radius and height"
                )));
            }
            if c.penetration(self.start) > 0.0 || c.penetration(self.goal) > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "start or goal lies inside threat {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        3 * self.nodes
    }

    /// Per-coordinate search box for the flattened `3K` decision vector.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lower = (0..self.dim()).map(|i| self.region.lower[i % 3]).collect();
        let upper = (0..self.dim()).map(|i| self.region.upper[i % 3]).collect();
        (lower, upper)
    }

    /// Default scenario: 200 × 200 × 50 m region, 10 waypoints, 5 seeded
    /// cylinders placed between start and goal.
    pub fn default_lite() -> Self {
        Self::generate(10, 5, 7)
    }

    /// Random scenario in the 200 × 200 × 50 m region.
    pub fn generate(nodes: usize, threats: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed, 0x0a5f);
        let start = [10.0, 10.0, 5.0];
        let goal = [190.0, 190.0, 5.0];
        let mut cylinders = Vec::with_capacity(threats);
        while cylinders.len() < threats {
            let c = Cylinder {
                center: [rng.random_range(40.0..160.0), rng.random_range(40.0..160.0)],
                radius: rng.random_range(10.0..25.0),
                height: rng.random_range(20.0..50.0),
            };
            if c.penetration(start) == 0.0 && c.penetration(goal) == 0.0 {
                cylinders.push(c);
            }
        }
        Self {
            start,
            goal,
            nodes,
            threats: cylinders,
            penalty: 100.0,
            region: Region {
                lower: [0.0, 0.0, 0.0],
                upper: [200.0, 200.0, 50.0],
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let scenario: Self = serde_json::from_str(&text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Start, the decoded waypoints and the goal, in flight order.
    pub fn decode(&self, flat: &[f64]) -> Result<Vec<[f64; 3]>> {
        if flat.len() != self.dim() {
            return Err(Error::shape(
                "uav_path_cost",
                format!("expected {} coordinates ({} nodes), got {}", self.dim(), self.nodes, flat.len()),
            ));
        }
        let mut points = Vec::with_capacity(self.nodes + 2);
        points.push(self.start);
        points.extend(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]));
        points.push(self.goal);
        Ok(points)
    }

    /// Path length plus `penalty ·` (length-weighted mean penetration into
    /// every threat and below ground) over every segment.
    pub fn path_cost(&self, flat: &[f64]) -> Result<f64> {
        let points = self.decode(flat)?;
        Ok(polyline_cost(&points, &self.threats, self.penalty))
    }
}

fn polyline_cost(points: &[[f64; 3]], threats: &[Cylinder], penalty: f64) -> f64 {
    let mut length = 0.0;
    let mut violation = 0.0;
    for seg in points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let delta = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let seg_len = (delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2]).sqrt();
        length += seg_len;
        if seg_len == 0.0 {
            continue;
        }
        let mut depth = 0.0;
        for s in 0..SAMPLES_PER_SEGMENT {
            let t = (s as f64 + 0.5) / SAMPLES_PER_SEGMENT as f64;
            let p = [a[0] + t * delta[0], a[1] + t * delta[1], a[2] + t * delta[2]];
            depth += (-p[2]).max(0.0);
            depth += threats.iter().map(|c| c.penetration(p)).sum::<f64>();
        }
        violation += seg_len * depth / SAMPLES_PER_SEGMENT as f64;
    }
    length + penalty * violation
}

/// Free-function form of [`UavScenario::path_cost`].
pub fn uav_path_cost(scenario: &UavScenario, nodes: &[f64]) -> Result<f64> {
    scenario.path_cost(nodes)
}
