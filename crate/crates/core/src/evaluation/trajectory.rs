use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DT_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub k: u64,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub dt_s: f64,
}

impl Trajectory {
    pub fn new(steps: Vec<TrajectoryStep>) -> Result<Self> {
        for (i, w) in steps.windows(2).enumerate() {
            if w[1].k <= w[0].k {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("step index {} does not increase past {}", w[1].k, w[0].k),
                });
            }
        }
        Ok(Self { steps, dt_s: DEFAULT_DT_S })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Constant-velocity path with `num_steps` points, `k = 0..num_steps`.
    pub fn straight_line(start: [f64; 3], end: [f64; 3], num_steps: usize) -> Self {
        let last = num_steps.saturating_sub(1).max(1) as f64;
        let steps = (0..num_steps)
            .map(|k| {
                let t = k as f64 / last;
                TrajectoryStep {
                    k: k as u64,
                    position: std::array::from_fn(|i| start[i] + t * (end[i] - start[i])),
                }
            })
            .collect();
        Self { steps, dt_s: DEFAULT_DT_S }
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let mut text = String::from("k,x,y,z\n");
        for s in &self.steps {
            let [x, y, z] = s.position;
            text.push_str(&format!("{},{x},{y},{z}\n", s.k));
        }
        out.write_all(text.as_bytes())?;
        Ok(())
    }
}

/// Parses a `k,x,y,z` CSV. Columns are located by header name; line numbers
/// in errors count the header as line 1.
pub fn parse_trajectory(input: impl Read) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let cols = [column("k")?, column("x")?, column("y")?, column("z")?];

    let mut steps: Vec<TrajectoryStep> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let field = |c: usize, name: &str| {
            row.get(c).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing value for '{name}'"),
            })
        };
        let k: u64 = field(cols[0], "k")?.parse().map_err(|_| Error::Parse {
            line,
            message: format!("'{}' is not a step index", &row[cols[0]]),
        })?;
        let mut position = [0.0; 3];
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            let raw = field(cols[axis + 1], name)?;
            position[axis] = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("'{raw}' is not a finite {name} coordinate"),
                })?;
        }
        if let Some(prev) = steps.last() {
            if k <= prev.k {
                return Err(Error::Parse {
                    line,
                    message: format!("step index {k} does not increase past {}", prev.k),
                });
            }
        }
        steps.push(TrajectoryStep { k, position });
    }
    Ok(Trajectory { steps, dt_s: DEFAULT_DT_S })
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(std::fs::File::open(path)?)
}
