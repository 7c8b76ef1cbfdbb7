//! Image-method specular tracer.

use nalgebra::Vector3;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::scenario::Scenario;
use super::PathComponent;
use crate::array::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

/// Parametric tolerance used to keep segment endpoints on reflectors from
/// registering as crossings.
const SEGMENT_EPS: f64 = 1e-9;

/// Every LOS and specular path between `ue_position` and the gNB.
///
/// Reflection sequences of length 1 through `max_reflection_order` are
/// enumerated (consecutive bounces on the same wall excluded), unfolded via
/// image sources of the UE, and kept only when every bounce lands on the
/// wall's finite face and no leg is occluded by a blocker or another wall.
/// The result is ordered by reflection order, then path length.
pub fn trace_paths(scenario: &Scenario, ue_position: [f64; 3]) -> Result<Vec<PathComponent>> {
    if !scenario.bounds.contains(ue_position) {
        return Err(Error::OutOfBounds(ue_position));
    }
    let gnb = Vector3::from(scenario.gnb_position());
    let ue = Vector3::from(ue_position);
    if (gnb - ue).norm() < 1e-9 {
        return Err(Error::DegenerateGeometry("UE coincides with gNB".into()));
    }
    let ctx = TraceContext { scenario, gnb, ue };

    let mut paths = Vec::new();
    if let Some(p) = ctx.evaluate(&[]) {
        paths.push(p);
    }
    let walls = scenario.walls.len();
    let mut sequence = Vec::with_capacity(scenario.max_reflection_order);
    for order in 1..=scenario.max_reflection_order {
        sequence.clear();
        enumerate(walls, order, &mut sequence, &mut |seq| {
            if let Some(p) = ctx.evaluate(seq) {
                paths.push(p);
            }
        });
    }
    paths.sort_by(|a, b| a.order.cmp(&b.order).then(a.delay_s.total_cmp(&b.delay_s)));
    Ok(paths)
}

fn enumerate(walls: usize, remaining: usize, seq: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if remaining == 0 {
        visit(seq);
        return;
    }
    for w in 0..walls {
        if seq.last() == Some(&w) {
            continue;
        }
        seq.push(w);
        enumerate(walls, remaining - 1, seq, visit);
        seq.pop();
    }
}

struct TraceContext<'a> {
    scenario: &'a Scenario,
    gnb: Vector3<f64>,
    ue: Vector3<f64>,
}

impl TraceContext<'_> {
    /// `sequence` lists wall indices in the order the wave meets them leaving the UE.
    fn evaluate(&self, sequence: &[usize]) -> Option<PathComponent> {
        let walls = &self.scenario.walls;

        // images[i] is the UE mirrored through the first i walls
        let mut images = Vec::with_capacity(sequence.len() + 1);
        images.push(self.ue);
        for &w in sequence {
            let last = images.last().unwrap();
            images.push(walls[w].mirror(last));
        }

        // walk back from the gNB, locating each bounce point
        let mut bounces = vec![Vector3::zeros(); sequence.len()];
        let mut current = self.gnb;
        for i in (0..sequence.len()).rev() {
            let wall = &walls[sequence[i]];
            if wall.side(&current) <= 0.0 {
                return None;
            }
            let t = wall.crossing(&current, &images[i + 1])?;
            if !(SEGMENT_EPS..=1.0 - SEGMENT_EPS).contains(&t) {
                return None;
            }
            let hit = current + t * (images[i + 1] - current);
            if !wall.contains(&hit) {
                return None;
            }
            bounces[i] = hit;
            current = hit;
        }
        if let Some(&first) = sequence.first() {
            if walls[first].side(&self.ue) <= 0.0 {
                return None;
            }
        }

        // polyline UE → bounces → gNB
        let mut vertices = Vec::with_capacity(sequence.len() + 2);
        vertices.push(self.ue);
        vertices.extend_from_slice(&bounces);
        vertices.push(self.gnb);
        for leg in vertices.windows(2) {
            if self.occluded(&leg[0], &leg[1]) {
                return None;
            }
        }

        let length = (self.gnb - images[sequence.len()]).norm();
        let wavelength = self.scenario.ula.wavelength_m();
        let reflection: Complex64 = sequence.iter().map(|&w| walls[w].gamma).product();
        let gain = reflection * (wavelength / (4.0 * PI * length));

        let arrival = (vertices[vertices.len() - 2] - self.gnb).normalize();
        let along = arrival.dot(&self.scenario.ula.axis()).clamp(-1.0, 1.0);

        Some(PathComponent {
            delay_s: length / SPEED_OF_LIGHT,
            gain,
            azimuth_deg: along.asin().to_degrees(),
            elevation_offset_m: self.gnb.z - self.ue.z,
            order: sequence.len(),
            is_los: sequence.is_empty(),
        })
    }

    fn occluded(&self, from: &Vector3<f64>, to: &Vector3<f64>) -> bool {
        if self
            .scenario
            .blockers
            .iter()
            .any(|b| b.intersects_segment(from, to, SEGMENT_EPS))
        {
            return true;
        }
        self.scenario.walls.iter().any(|w| {
            w.crossing(from, to).is_some_and(|t| {
                t > SEGMENT_EPS && t < 1.0 - SEGMENT_EPS && w.contains(&(from + t * (to - from)))
            })
        })
    }
}
