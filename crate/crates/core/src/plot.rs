//! Static SVG renderings of confidence bands and power curves.
//!
//! The plots are hand-emitted SVG (a band polygon, polylines, axes and a
//! zero line); no renderer dependency. All coordinates are formatted with
//! fixed precision, so a plot is a deterministic function of its inputs.

use crate::error::Error;
use crate::mcar_tests::ConfidenceBand;
use crate::simulation::PowerPoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 55.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        // Guard against a flat range so division below stays finite.
        let (y_min, y_max) = if y_max - y_min > 1e-12 {
            (y_min, y_max)
        } else {
            (y_min - 1.0, y_max + 1.0)
        };
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

fn polyline_points(frame: &Frame, xs: &[f64], ys: &[f64]) -> String {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{},{}", coord(frame.x(x)), coord(frame.y(y))))
        .collect::<Vec<_>>()
        .join(" ")
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    )
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let x0 = coord(MARGIN);
    let x1 = coord(WIDTH - MARGIN);
    let y0 = coord(HEIGHT - MARGIN);
    let y1 = coord(MARGIN);
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for k in 0..=4 {
        let fx = frame.x_min + k as f64 / 4.0 * (frame.x_max - frame.x_min);
        let fy = frame.y_min + k as f64 / 4.0 * (frame.y_max - frame.y_min);
        let px = coord(frame.x(fx));
        let py = coord(frame.y(fy));
        s.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{y0}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{px}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            coord(HEIGHT - MARGIN + 5.0),
            coord(HEIGHT - MARGIN + 20.0),
            coord(fx)
        ));
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{x0}\" y2=\"{py}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            coord(MARGIN - 5.0),
            coord(MARGIN - 8.0),
            coord(frame.y(fy) + 4.0),
            coord(fy)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        coord(WIDTH / 2.0),
        coord(HEIGHT - 12.0),
        coord(HEIGHT / 2.0),
        coord(HEIGHT / 2.0),
    ));
    s
}

/// Render a simultaneous confidence band for the group mean difference
/// over the given grid coordinates (one per kept column).
pub fn band_svg(t: &[f64], band: &ConfidenceBand) -> Result<String, Error> {
    if t.len() != band.center.len() || t.is_empty() {
        return Err(Error::Dimension(format!(
            "band over {} points cannot be drawn on {} coordinates",
            band.center.len(),
            t.len()
        )));
    }
    if !band.half_width.is_finite() {
        return Err(Error::Config("band half-width is not finite".into()));
    }
    let upper: Vec<f64> = band.center.iter().map(|c| c + band.half_width).collect();
    let lower: Vec<f64> = band.center.iter().map(|c| c - band.half_width).collect();
    let y_min = lower.iter().cloned().fold(0.0f64, f64::min);
    let y_max = upper.iter().cloned().fold(0.0f64, f64::max);
    let pad = 0.05 * (y_max - y_min).max(1e-9);
    let frame = Frame::new(t[0], t[t.len() - 1], y_min - pad, y_max + pad);

    let mut svg = header();
    // Band polygon: upper edge left-to-right, lower edge right-to-left.
    let mut poly = polyline_points(&frame, t, &upper);
    let t_rev: Vec<f64> = t.iter().rev().cloned().collect();
    let lower_rev: Vec<f64> = lower.iter().rev().cloned().collect();
    poly.push(' ');
    poly.push_str(&polyline_points(&frame, &t_rev, &lower_rev));
    svg.push_str(&format!(
        "<polygon points=\"{poly}\" fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\"/>\n"
    ));
    // Zero reference line.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        coord(frame.x(t[0])),
        coord(frame.y(0.0)),
        coord(frame.x(t[t.len() - 1])),
        coord(frame.y(0.0)),
    ));
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>\n",
        polyline_points(&frame, t, &band.center)
    ));
    svg.push_str(&axes(&frame, "t", "mean difference"));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\">{:.0}% simultaneous band</text>\n",
        coord(MARGIN + 8.0),
        coord(MARGIN + 16.0),
        100.0 * band.level,
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Render power curves (one polyline per method) over the censoring
/// upper-bound grid, with a dashed line at the nominal level.
pub fn power_svg(points: &[PowerPoint], alpha: f64) -> Result<String, Error> {
    if points.is_empty() {
        return Err(Error::Dimension("no power points to draw".into()));
    }
    let b: Vec<f64> = points.iter().map(|p| p.b).collect();
    let frame = Frame::new(b[0], b[b.len() - 1].max(b[0] + 1e-9), 0.0, 1.0);
    let mut svg = header();
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        coord(frame.x(frame.x_min)),
        coord(frame.y(alpha)),
        coord(frame.x(frame.x_max)),
        coord(frame.y(alpha)),
    ));
    let styles = [
        ("#1b9e77", "L2 mean"),
        ("#d95f02", "sup mean"),
        ("#7570b3", "distributional"),
    ];
    for (k, (color, name)) in styles.iter().enumerate() {
        let ys: Vec<f64> = points.iter().map(|p| p.rejection[k]).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            polyline_points(&frame, &b, &ys)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name}</text>\n",
            coord(MARGIN + 8.0),
            coord(MARGIN + 16.0 + 16.0 * k as f64),
        ));
    }
    svg.push_str(&axes(&frame, "censoring upper bound b", "rejection rate"));
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcar_tests::BandSource;

    fn toy_band() -> ConfidenceBand {
        ConfidenceBand {
            center: vec![0.1, -0.2, 0.3, 0.0],
            half_width: 0.5,
            level: 0.95,
            source: BandSource::Asymptotic,
        }
    }

    #[test]
    fn band_svg_is_deterministic_and_well_formed() {
        let t = [0.25, 0.5, 0.75, 1.0];
        let band = toy_band();
        let s1 = band_svg(&t, &band).unwrap();
        let s2 = band_svg(&t, &band).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.starts_with("<svg"));
        assert!(s1.ends_with("</svg>\n"));
        assert_eq!(s1.matches("<polygon").count(), 1);
        assert!(s1.contains("95% simultaneous band"));
    }

    #[test]
    fn band_svg_rejects_mismatched_lengths() {
        let band = toy_band();
        assert!(band_svg(&[0.5, 1.0], &band).is_err());
        assert!(band_svg(&[], &ConfidenceBand { center: vec![], ..toy_band() }).is_err());
    }

    #[test]
    fn band_svg_coordinates_stay_inside_the_viewbox() {
        let t = [0.1, 0.4, 0.9];
        let band = ConfidenceBand {
            center: vec![5.0, -3.0, 12.0],
            half_width: 2.0,
            level: 0.9,
            source: BandSource::Bootstrap,
        };
        let svg = band_svg(&t, &band).unwrap();
        for chunk in svg.split("points=\"").skip(1) {
            let pts = chunk.split('"').next().unwrap();
            for pair in pts.split_whitespace() {
                let (x, y) = pair.split_once(',').unwrap();
                let x: f64 = x.parse().unwrap();
                let y: f64 = y.parse().unwrap();
                assert!((0.0..=WIDTH).contains(&x), "x = {x}");
                assert!((0.0..=HEIGHT).contains(&y), "y = {y}");
            }
        }
    }

    #[test]
    fn power_svg_draws_three_curves() {
        let points = vec![
            PowerPoint {
                b: 1.0,
                rejection: [0.05, 0.06, 0.3],
            },
            PowerPoint {
                b: 1.5,
                rejection: [0.2, 0.25, 0.7],
            },
            PowerPoint {
                b: 2.0,
                rejection: [0.5, 0.55, 0.95],
            },
        ];
        let svg = power_svg(&points, 0.05).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(power_svg(&[], 0.05).is_err());
        assert_eq!(svg, power_svg(&points, 0.05).unwrap());
    }
}
