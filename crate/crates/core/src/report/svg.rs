//! Dependency-free error-bar charts.
//!
//! Output is a fixed 800×500 SVG with every coordinate written to 4
//! decimals, so identical specs render to identical bytes.

use std::fmt::Write as _;

use crate::format::sig7;
use crate::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 90.0;
const TICKS: usize = 5;
const CAP: f64 = 8.0;
const SECONDARY_COLOR: &str = "#b0b0b0";
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub label: String,
    pub point: f64,
    /// Half-width of the colored whisker.
    pub primary_half_width: f64,
    /// Half-width of the optional grey whisker drawn behind it.
    pub secondary_half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub series: Vec<ChartSeries>,
    /// Visible accuracy window, inside `[0, 1]`.
    pub y_range: (f64, f64),
}

impl ChartSpec {
    /// Builds a spec whose y window covers every whisker with 10% padding,
    /// clamped to `[0, 1]`.
    pub fn new(title: &str, series: Vec<ChartSeries>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::InsufficientData(
                "chart needs at least one series".into(),
            ));
        }
        let reach = |s: &ChartSeries| {
            s.primary_half_width
                .max(s.secondary_half_width.unwrap_or(0.0))
        };
        let lo = series
            .iter()
            .map(|s| s.point - reach(s))
            .fold(f64::INFINITY, f64::min);
        let hi = series
            .iter()
            .map(|s| s.point + reach(s))
            .fold(f64::NEG_INFINITY, f64::max);
        let pad = (0.1 * (hi - lo)).max(0.01);
        let spec = Self {
            title: title.to_string(),
            series,
            y_range: ((lo - pad).max(0.0), (hi + pad).min(1.0)),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::InsufficientData(
                "chart needs at least one series".into(),
            ));
        }
        let (lo, hi) = self.y_range;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Domain(format!(
                "y range [{lo}, {hi}] must be increasing inside [0, 1]"
            )));
        }
        for s in &self.series {
            let widths_ok =
                s.primary_half_width >= 0.0 && s.secondary_half_width.is_none_or(|w| w >= 0.0);
            if !(0.0..=1.0).contains(&s.point) || !widths_ok {
                return Err(Error::Domain(format!(
                    "series `{}` has an invalid point or half-width",
                    s.label
                )));
            }
        }
        Ok(())
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn y(&self, v: f64) -> f64 {
        let v = v.clamp(self.lo, self.hi);
        TOP + (self.hi - v) / (self.hi - self.lo) * (HEIGHT - TOP - BOTTOM)
    }
}

fn whisker(out: &mut String, class: &str, color: &str, stroke: f64, x: f64, y_lo: f64, y_hi: f64) {
    let _ = writeln!(
        out,
        r#"<g class="whisker {class}" stroke="{color}" stroke-width="{stroke:.4}">"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x:.4}" y1="{y_lo:.4}" x2="{x:.4}" y2="{y_hi:.4}"/>"#
    );
    for y in [y_lo, y_hi] {
        let _ = writeln!(
            out,
            r#"<line x1="{:.4}" y1="{y:.4}" x2="{:.4}" y2="{y:.4}"/>"#,
            x - CAP,
            x + CAP
        );
    }
    out.push_str("</g>\n");
}

/// Renders the chart as a standalone SVG document.
pub fn render_error_bar_svg(spec: &ChartSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    let frame = Frame {
        lo: spec.y_range.0,
        hi: spec.y_range.1,
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.4}" y="{:.4}" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        TOP / 2.0 + 5.0,
        escape(&spec.title)
    );

    // axes and ticks
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y_top, y_bottom) = (TOP, HEIGHT - BOTTOM);
    out.push_str("<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n");
    let _ = writeln!(
        out,
        r#"<line x1="{x0:.4}" y1="{y_top:.4}" x2="{x0:.4}" y2="{y_bottom:.4}"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x0:.4}" y1="{y_bottom:.4}" x2="{x1:.4}" y2="{y_bottom:.4}"/>"#
    );
    out.push_str("</g>\n");
    out.push_str(
        "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">\n",
    );
    for i in 0..=TICKS {
        let v = frame.lo + (frame.hi - frame.lo) * i as f64 / TICKS as f64;
        let y = frame.y(v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.4}" y1="{y:.4}" x2="{x0:.4}" y2="{y:.4}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.4}" y="{:.4}">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            sig7((v * 1e4).round() / 1e4)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text x="{:.4}" y="{:.4}" transform="rotate(-90 {:.4} {:.4})" text-anchor="middle" font-family="sans-serif" font-size="13">accuracy</text>"#,
        20.0,
        (y_top + y_bottom) / 2.0,
        20.0,
        (y_top + y_bottom) / 2.0
    );

    let slot = plot_w / spec.series.len() as f64;
    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = LEFT + (i as f64 + 0.5) * slot;
        let _ = writeln!(
            out,
            r#"<g class="series" data-label="{}">"#,
            escape(&s.label)
        );
        if let Some(w) = s.secondary_half_width {
            whisker(
                &mut out,
                "secondary",
                SECONDARY_COLOR,
                6.0,
                x,
                frame.y(s.point - w),
                frame.y(s.point + w),
            );
        }
        let w = s.primary_half_width;
        whisker(
            &mut out,
            "primary",
            color,
            2.0,
            x,
            frame.y(s.point - w),
            frame.y(s.point + w),
        );
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.4}" cy="{:.4}" r="4" fill="{color}"/>"#,
            frame.y(s.point)
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.4}" y="{:.4}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            y_bottom + 20.0,
            escape(&s.label)
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out.into_bytes())
}
