//! Per-episode trace exports.

use std::fmt::Write;

use super::{Episode, EpisodeRun};
use crate::world::World;

/// `step,x,y,yaw,v,omega,d_goal`, one row per executed step plus the final
/// pose (with zero command).
pub fn trajectory_csv(run: &EpisodeRun) -> String {
    let mut s = String::from("step,x,y,yaw,v,omega,d_goal\n");
    for l in &run.log {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            l.step, l.pose.x, l.pose.y, l.pose.yaw, l.command.v, l.command.omega, l.d_goal
        );
    }
    if let Some(p) = run.poses.last() {
        let _ = writeln!(
            s,
            "{},{},{},{},0,0,{}",
            run.log.len(),
            p.x,
            p.y,
            p.yaw,
            run.result.d_final
        );
    }
    s
}

/// `step,delta_phi,v_raw,omega_raw,v,omega`, one row per executed step. The
/// steering offset is empty on fallback steps.
pub fn command_csv(run: &EpisodeRun) -> String {
    let mut s = String::from("step,delta_phi,v_raw,omega_raw,v,omega\n");
    for l in &run.log {
        let dphi = l.delta_phi.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            l.step, dphi, l.raw.v, l.raw.omega, l.command.v, l.command.omega
        );
    }
    s
}

/// Top-down view: obstacles, the map path, the executed path, start and goal.
pub fn trajectory_svg(world: &World, ep: &Episode, run: &EpisodeRun) -> String {
    use crate::geometry::Footprint;
    let b = world.bounds();
    let scale = 40.0;
    let (w, h) = (b.width() * scale, b.height() * scale);
    let tx = |x: f64| (x - b.min.x) * scale;
    let ty = |y: f64| (b.max.y - y) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#fafafa"/>"##);
    for o in world.obstacles().iter().filter(|o| o.blocks_motion()) {
        let fill = if o.category == crate::world::CATEGORY_WALL {
            "#555"
        } else if o.id == ep.goal_instance {
            "#2a9d2a"
        } else {
            "#b8b8b8"
        };
        match &o.footprint {
            Footprint::Polygon { vertices } => {
                let pts: Vec<String> = vertices
                    .iter()
                    .map(|p| format!("{:.2},{:.2}", tx(p.x), ty(p.y)))
                    .collect();
                let _ = writeln!(s, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
            }
            Footprint::Disc { center, radius } => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{fill}"/>"#,
                    tx(center.x),
                    ty(center.y),
                    radius * scale
                );
            }
        }
    }
    let line = |pts: Vec<(f64, f64)>, color: &str, dash: &str| -> String {
        let p: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", tx(*x), ty(*y)))
            .collect();
        format!(
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="3" {dash}/>"#,
            p.join(" ")
        )
    };
    let _ = writeln!(
        s,
        "{}",
        line(
            ep.map_trajectory.iter().map(|p| (p.x, p.y)).collect(),
            "#3b6fd8",
            r#"stroke-dasharray="8 6""#
        )
    );
    let _ = writeln!(
        s,
        "{}",
        line(run.poses.iter().map(|p| (p.x, p.y)).collect(), "#d8453b", "")
    );
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="6" fill="#d8453b"/>"##,
        tx(ep.start_pose.x),
        ty(ep.start_pose.y)
    );
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#2a9d2a" stroke-width="2"/>"##,
        tx(ep.goal_position.x),
        ty(ep.goal_position.y),
        scale
    );
    s.push_str("</svg>\n");
    s
}
