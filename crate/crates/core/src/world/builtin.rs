//! Bundled scenarios, addressable by name from the CLI and tests.

use nalgebra::Point2;

use super::Scenario;
use crate::geometry::{Polygon, Pose};

const NAMES: &[&str] = &["empty", "corridor", "fig6", "pocket", "narrow_gap", "enclosed"];

/// Names accepted by [`builtin_scenario`], in suite order.
pub fn builtin_names() -> &'static [&'static str] {
    NAMES
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    let (obstacles, start, goal) = match name {
        "empty" => (vec![], Pose::new(0.0, 0.0, 0.0), [10.0, 0.0]),
        "corridor" => (corridor(), Pose::new(0.0, 0.0, 0.0), [30.0, 0.8]),
        "fig6" => (staggered_field(), Pose::new(0.0, 0.0, 0.0), [42.0, 0.0]),
        "pocket" => (pocket(), Pose::new(0.0, 0.0, 0.0), [24.0, 0.0]),
        "narrow_gap" => (narrow_gap(), Pose::new(0.0, 0.0, 0.0), [20.0, 2.5]),
        "enclosed" => (enclosure(), Pose::new(0.0, 0.0, 0.0), [12.0, 0.0]),
        _ => return None,
    };
    Some(Scenario {
        name: name.to_string(),
        obstacles,
        start,
        goal: Point2::new(goal[0], goal[1]),
    })
}

fn corridor() -> Vec<Polygon> {
    vec![
        Polygon::rect(-2.0, 2.0, 34.0, 2.5),
        Polygon::rect(-2.0, -2.5, 34.0, -2.0),
    ]
}

/// Start at one end, goal beyond a field of staggered blocks, bounded by
/// side walls.
fn staggered_field() -> Vec<Polygon> {
    vec![
        Polygon::rect(7.0, -0.4, 9.0, 1.6),
        Polygon::rect(14.0, -2.4, 16.0, -0.4),
        Polygon::rect(21.0, 0.0, 23.0, 2.0),
        Polygon::rect(28.0, -2.0, 30.0, 0.0),
        Polygon::rect(34.0, 1.0, 35.5, 2.5),
        Polygon::rect(-2.0, 7.0, 46.0, 7.5),
        Polygon::rect(-2.0, -7.5, 46.0, -7.0),
    ]
}

/// U-shaped trap opening towards the start, flanked by two pillars.
fn pocket() -> Vec<Polygon> {
    vec![
        Polygon::rect(12.0, -3.0, 12.5, 3.0),
        Polygon::rect(9.0, 2.5, 12.0, 3.0),
        Polygon::rect(9.0, -3.0, 12.0, -2.5),
        Polygon::rect(10.0, 6.5, 11.0, 7.5),
        Polygon::rect(10.0, -7.5, 11.0, -6.5),
    ]
}

/// A cross wall with one 2.5 m opening to the left of the start axis.
fn narrow_gap() -> Vec<Polygon> {
    vec![
        Polygon::rect(10.0, -12.0, 10.5, 0.0),
        Polygon::rect(10.0, 2.5, 10.5, 12.0),
    ]
}

/// Closed box around the start; the goal is outside and unreachable.
fn enclosure() -> Vec<Polygon> {
    vec![
        Polygon::rect(-4.5, 4.0, 4.5, 4.5),
        Polygon::rect(-4.5, -4.5, 4.5, -4.0),
        Polygon::rect(4.0, -4.0, 4.5, 4.0),
        Polygon::rect(-4.5, -4.0, -4.0, 4.0),
    ]
}
