//! Fixed-canvas SVG rendering of 2-D trajectories.
//!
//! Colour roles: trajectories grey, start points blue, end points red,
//! matching segments (x0 to x1 of each pair) dashed green.

use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 56.0;
const TICKS: usize = 5;

pub const TRAJECTORY_COLOR: &str = "#7f7f7f";
pub const START_COLOR: &str = "#1f77b4";
pub const END_COLOR: &str = "#d62728";
pub const MATCHING_COLOR: &str = "#2ca02c";

#[derive(Default)]
pub struct Scene {
    pub trajectories: Vec<Vec<[f64; 2]>>,
    pub matchings: Vec<([f64; 2], [f64; 2])>,
}

struct Frame {
    x0: f64,
    y0: f64,
    span: f64,
}

impl Frame {
    /// Equal scaling on both axes around the bounding box of all points.
    fn fit(scene: &Scene) -> Self {
        let points = scene
            .trajectories
            .iter()
            .flatten()
            .chain(scene.matchings.iter().flat_map(|(a, b)| [a, b]));
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            return Frame {
                x0: -1.0,
                y0: -1.0,
                span: 2.0,
            };
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.1;
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        Frame {
            x0: cx - 0.5 * span,
            y0: cy - 0.5 * span,
            span,
        }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let inner = WIDTH - 2.0 * MARGIN;
        let x = MARGIN + (p[0] - self.x0) / self.span * inner;
        let y = HEIGHT - MARGIN - (p[1] - self.y0) / self.span * inner;
        (x, y)
    }
}

fn axes(out: &mut String, frame: &Frame) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(
        out,
        r#"<g class="axes" stroke="black" stroke-width="1" fill="none">"#
    )
    .unwrap();
    writeln!(out, r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/>"#).unwrap();
    writeln!(out, r#"<line x1="{l}" y1="{b}" x2="{l}" y2="{t}"/>"#).unwrap();
    writeln!(out, "</g>").unwrap();
    writeln!(
        out,
        r#"<g class="ticks" font-family="sans-serif" font-size="11" fill="black">"#
    )
    .unwrap();
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let vx = frame.x0 + f * frame.span;
        let vy = frame.y0 + f * frame.span;
        let (px, _) = frame.px([vx, frame.y0]);
        let (_, py) = frame.px([frame.x0, vy]);
        writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{vx:.3}</text>"#,
            b + 16.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{vy:.3}</text>"#,
            l - 6.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
}

pub fn render(scene: &Scene) -> String {
    let frame = Frame::fit(scene);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    axes(&mut out, &frame);

    writeln!(
        out,
        r#"<g class="matchings" stroke="{MATCHING_COLOR}" stroke-width="1" stroke-dasharray="4 3" opacity="0.6">"#
    )
    .unwrap();
    for (a, b) in &scene.matchings {
        let ((x1, y1), (x2, y2)) = (frame.px(*a), frame.px(*b));
        writeln!(
            out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();

    writeln!(
        out,
        r#"<g class="trajectories" stroke="{TRAJECTORY_COLOR}" stroke-width="1" fill="none" opacity="0.7">"#
    )
    .unwrap();
    for traj in &scene.trajectories {
        let pts: Vec<String> = traj
            .iter()
            .map(|p| {
                let (x, y) = frame.px(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(out, r#"<polyline points="{}"/>"#, pts.join(" ")).unwrap();
    }
    writeln!(out, "</g>").unwrap();

    for (class, color, pick) in [("starts", START_COLOR, true), ("ends", END_COLOR, false)] {
        writeln!(out, r#"<g class="{class}" fill="{color}">"#).unwrap();
        for traj in &scene.trajectories {
            let p = if pick { traj.first() } else { traj.last() };
            if let Some(p) = p {
                let (x, y) = frame.px(*p);
                writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5"/>"#).unwrap();
            }
        }
        writeln!(out, "</g>").unwrap();
    }
    out.push_str("</svg>\n");
    out
}
