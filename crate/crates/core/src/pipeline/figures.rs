//! SVG figures: the model accuracy comparison and the 2-D PCA view of the
//! test split. Output depends only on the inputs, with every coordinate
//! printed to two decimals.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::eval::EvaluationReport;
use crate::matrix::Matrix;

pub const BAR_CHART_FILE: &str = "accuracy_comparison.svg";
pub const SCATTER_FILE: &str = "pca_test_scatter.svg";

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Test rows projected onto the leading principal components, with the class
/// a model predicted for each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoints {
    pub model: String,
    pub class_labels: Vec<String>,
    pub points: Matrix,
    pub predicted: Vec<usize>,
    pub explained_variance_ratio: Vec<f64>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn color(class: usize) -> &'static str {
    PALETTE[class % PALETTE.len()]
}

/// Horizontal bars of holdout accuracy, best first. Equal accuracies keep
/// report order.
pub fn accuracy_bar_chart(report: &EvaluationReport) -> String {
    let mut entries: Vec<(&str, f64, Option<f64>)> = report
        .models
        .iter()
        .map(|m| {
            (
                m.name.as_str(),
                m.holdout.accuracy,
                m.cross_validation.as_ref().map(|c| c.mean),
            )
        })
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));

    let (left, top, bar_h, gap, plot_w) = (140.0, 50.0, 24.0, 10.0, 420.0);
    let height = top + entries.len() as f64 * (bar_h + gap) + 40.0;
    let width = left + plot_w + 120.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-size="16" text-anchor="middle">Model accuracy on the test split</text>"#,
        width / 2.0
    )
    .unwrap();
    for (i, (name, acc, cv)) in entries.iter().enumerate() {
        let y = top + i as f64 * (bar_h + gap);
        let w = plot_w * acc.clamp(0.0, 1.0);
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + bar_h * 0.7,
            escape(name)
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect class="bar" x="{left:.2}" y="{y:.2}" width="{w:.2}" height="{bar_h:.2}" fill="{}"/>"#,
            color(i)
        )
        .unwrap();
        let label = match cv {
            Some(m) => format!("{:.2}% (CV {:.2}%)", acc * 100.0, m * 100.0),
            None => format!("{:.2}%", acc * 100.0),
        };
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{label}</text>"#,
            left + w + 6.0,
            y + bar_h * 0.7
        )
        .unwrap();
    }
    let axis_y = top + entries.len() as f64 * (bar_h + gap);
    writeln!(
        s,
        r#"<line x1="{left:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        left + plot_w
    )
    .unwrap();
    for tick in 0..=5 {
        let x = left + plot_w * tick as f64 / 5.0;
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}%</text>"#,
            axis_y + 16.0,
            tick * 20
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// One marker per row, colored by predicted class, with a legend. A single
/// component is drawn on a horizontal line.
pub fn pca_scatter(points: &PcaPoints) -> String {
    let n = points.points.rows();
    let coord = |i: usize, j: usize| {
        if j < points.points.cols() {
            points.points[(i, j)]
        } else {
            0.0
        }
    };
    let range = |j: usize| {
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            (lo.min(coord(i, j)), hi.max(coord(i, j)))
        });
        if n == 0 {
            (-1.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 1.0, hi + 1.0)
        } else {
            (lo, hi)
        }
    };
    let ((x_lo, x_hi), (y_lo, y_hi)) = (range(0), range(1));
    let (left, top, plot_w, plot_h) = (60.0, 50.0, 480.0, 400.0);
    let width = left + plot_w + 220.0;
    let height = top + plot_h + 60.0;
    let sx = |v: f64| left + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| top + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-size="16" text-anchor="middle">Test split in two principal components ({})</text>"#,
        left + plot_w / 2.0,
        escape(&points.model)
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let pct = |j: usize| {
        points
            .explained_variance_ratio
            .get(j)
            .map_or(0.0, |r| r * 100.0)
    };
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">PC1 ({:.1}%)</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 36.0,
        pct(0)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">PC2 ({:.1}%)</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        pct(1)
    )
    .unwrap();
    for i in 0..n {
        writeln!(
            s,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.7"/>"#,
            sx(coord(i, 0)),
            sy(coord(i, 1)),
            color(points.predicted[i])
        )
        .unwrap();
    }
    let lx = left + plot_w + 20.0;
    for (c, label) in points.class_labels.iter().enumerate() {
        let y = top + 10.0 + c as f64 * 22.0;
        writeln!(
            s,
            r#"<rect class="legend" x="{lx:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#,
            color(c)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 18.0,
            y + 10.0,
            escape(label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
