//! SVG rendering of planar scenes: obstacles with uncertainty halos,
//! milestones, and the workspace trace of each robot body along a path.

use std::fmt::Write as _;

use uplan_core::scenario::{ObstacleShape, RobotModel};
use uplan_core::{Configuration, Roadmap, Scenario};

const BODY_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    min: [f64; 2],
    max: [f64; 2],
    scale: f64,
    pad: f64,
}

impl Frame {
    fn new(scenario: &Scenario) -> Self {
        let (min, max) = workspace_extent(scenario);
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-9);
        Frame {
            min,
            max,
            scale: 600.0 / span,
            pad: 20.0,
        }
    }

    fn x(&self, wx: f64) -> f64 {
        (wx - self.min[0]) * self.scale + self.pad
    }

    fn y(&self, wy: f64) -> f64 {
        (self.max[1] - wy) * self.scale + self.pad
    }

    fn len(&self, l: f64) -> f64 {
        l * self.scale
    }

    fn width(&self) -> f64 {
        (self.max[0] - self.min[0]) * self.scale + 2.0 * self.pad
    }

    fn height(&self) -> f64 {
        (self.max[1] - self.min[1]) * self.scale + 2.0 * self.pad
    }
}

fn workspace_extent(scenario: &Scenario) -> ([f64; 2], [f64; 2]) {
    match &scenario.robot {
        RobotModel::DiscSet { radii } => {
            let mut min = [f64::INFINITY; 2];
            let mut max = [f64::NEG_INFINITY; 2];
            for b in 0..radii.len() {
                for axis in 0..2 {
                    min[axis] = min[axis].min(scenario.bounds.lo[2 * b + axis]);
                    max[axis] = max[axis].max(scenario.bounds.hi[2 * b + axis]);
                }
            }
            (min, max)
        }
        RobotModel::PlanarArm { base, link_lengths } => {
            let reach: f64 = link_lengths.iter().sum();
            (
                [base[0] - reach, base[1] - reach],
                [base[0] + reach, base[1] + reach],
            )
        }
    }
}

/// Workspace anchor points of each robot body at a configuration: disc
/// centers for `DiscSet`, the end effector for `PlanarArm`.
fn body_anchors(scenario: &Scenario, config: &Configuration) -> Vec<[f64; 2]> {
    match &scenario.robot {
        RobotModel::DiscSet { radii } => (0..radii.len())
            .map(|b| [config.coords()[2 * b], config.coords()[2 * b + 1]])
            .collect(),
        RobotModel::PlanarArm { .. } => vec![*arm_joints(scenario, config).last().unwrap()],
    }
}

fn arm_joints(scenario: &Scenario, config: &Configuration) -> Vec<[f64; 2]> {
    let RobotModel::PlanarArm { base, link_lengths } = &scenario.robot else {
        return Vec::new();
    };
    let mut pts = vec![*base];
    let mut p = *base;
    let mut angle = 0.0;
    for (&len, &theta) in link_lengths.iter().zip(config.coords()) {
        angle += theta;
        p = [p[0] + len * angle.cos(), p[1] + len * angle.sin()];
        pts.push(p);
    }
    pts
}

/// Render the scene. `path` is the waypoint sequence of a planned path;
/// one `<path>` element is emitted per robot body trace.
pub fn render_svg(scenario: &Scenario, roadmap: Option<&Roadmap>, path: &[Configuration]) -> String {
    let f = Frame::new(scenario);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
        f.width(),
        f.height(),
        f.width(),
        f.height()
    );
    let _ = writeln!(
        s,
        "  <rect x=\"0\" y=\"0\" width=\"{:.0}\" height=\"{:.0}\" fill=\"#ffffff\"/>",
        f.width(),
        f.height()
    );
    let _ = writeln!(
        s,
        "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\"/>",
        f.x(f.min[0]),
        f.y(f.max[1]),
        f.len(f.max[0] - f.min[0]),
        f.len(f.max[1] - f.min[1])
    );

    // Obstacles, uncertainty halos first (2 sigma under 1 sigma).
    for obs in &scenario.obstacles {
        let [cx, cy] = obs.nominal_position;
        let [sx, sy] = obs.position_std;
        for (k, opacity) in [(2.0, 0.12), (1.0, 0.2)] {
            if sx <= 0.0 && sy <= 0.0 {
                continue;
            }
            match obs.shape {
                ObstacleShape::Disc { radius } => {
                    let _ = writeln!(
                        s,
                        "  <ellipse cx=\"{:.2}\" cy=\"{:.2}\" rx=\"{:.2}\" ry=\"{:.2}\" fill=\"#c0392b\" opacity=\"{opacity}\"/>",
                        f.x(cx),
                        f.y(cy),
                        f.len(radius + k * sx),
                        f.len(radius + k * sy)
                    );
                }
                ObstacleShape::Rect { width, height } => {
                    let w = width + 2.0 * k * sx;
                    let h = height + 2.0 * k * sy;
                    let _ = writeln!(
                        s,
                        "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#c0392b\" opacity=\"{opacity}\"/>",
                        f.x(cx - w / 2.0),
                        f.y(cy + h / 2.0),
                        f.len(w),
                        f.len(h)
                    );
                }
            }
        }
        match obs.shape {
            ObstacleShape::Disc { radius } => {
                let _ = writeln!(
                    s,
                    "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#c0392b\"/>",
                    f.x(cx),
                    f.y(cy),
                    f.len(radius)
                );
            }
            ObstacleShape::Rect { width, height } => {
                let _ = writeln!(
                    s,
                    "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#c0392b\"/>",
                    f.x(cx - width / 2.0),
                    f.y(cy + height / 2.0),
                    f.len(width),
                    f.len(height)
                );
            }
        }
    }

    // Milestones as faint dots (one per body anchor).
    if let Some(rm) = roadmap {
        for id in 1..=rm.interior_count() {
            if let Some(cfg) = rm.config(id) {
                for p in body_anchors(scenario, cfg) {
                    let _ = writeln!(
                        s,
                        "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"#888888\" opacity=\"0.5\"/>",
                        f.x(p[0]),
                        f.y(p[1])
                    );
                }
            }
        }
    }

    // Arm scenarios: link chains at every waypoint.
    if matches!(scenario.robot, RobotModel::PlanarArm { .. }) {
        for (w, cfg) in path.iter().enumerate() {
            let joints = arm_joints(scenario, cfg);
            let pts: Vec<String> = joints
                .iter()
                .map(|p| format!("{:.2},{:.2}", f.x(p[0]), f.y(p[1])))
                .collect();
            let shade = if w == 0 || w + 1 == path.len() { 0.9 } else { 0.35 };
            let _ = writeln!(
                s,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"#555555\" stroke-width=\"2\" opacity=\"{shade}\"/>",
                pts.join(" ")
            );
        }
    }

    // One path element per robot body trace.
    if path.len() >= 2 {
        let n_bodies = body_anchors(scenario, &path[0]).len();
        for b in 0..n_bodies {
            let mut d = String::new();
            for (w, cfg) in path.iter().enumerate() {
                let p = body_anchors(scenario, cfg)[b];
                let _ = write!(
                    d,
                    "{}{:.2} {:.2}",
                    if w == 0 { "M" } else { " L" },
                    f.x(p[0]),
                    f.y(p[1])
                );
            }
            let color = BODY_COLORS[b % BODY_COLORS.len()];
            let _ = writeln!(
                s,
                "  <path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2.5\"/>"
            );
        }
        // Start and goal markers per body.
        for (cfg, fill) in [(&path[0], "#2ecc71"), (&path[path.len() - 1], "#8e44ad")] {
            for p in body_anchors(scenario, cfg) {
                let _ = writeln!(
                    s,
                    "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{fill}\" stroke=\"#222222\" stroke-width=\"1\"/>",
                    f.x(p[0]),
                    f.y(p[1])
                );
            }
        }
    }

    s.push_str("</svg>\n");
    s
}
