//! Static SVG line charts of learning curves.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::eval::LearningCurve;

/// Horizontal axis of a learning-curve chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    /// Number of validated items.
    Count,
    /// Percentage of the pool that has been validated.
    Percent,
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// Writes one SVG chart with a line per labelled curve (F1 on the vertical
/// axis, clipped to `[0, 1]`).
pub fn learning_curves_svg(
    path: impl AsRef<Path>,
    title: &str,
    curves: &[(String, LearningCurve)],
    x_axis: XAxis,
) -> Result<()> {
    let xs = |c: &LearningCurve| -> Vec<(f64, f64)> {
        c.points
            .iter()
            .map(|p| {
                let x = match x_axis {
                    XAxis::Count => p.labeled_count as f64,
                    XAxis::Percent => 100.0 * c.fraction(p),
                };
                (x, p.f1)
            })
            .collect()
    };
    let x_max = curves
        .iter()
        .flat_map(|(_, c)| xs(c))
        .map(|(x, _)| x)
        .fold(1.0_f64, f64::max);

    let root = SVGBackend::new(path.as_ref(), (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..x_max, 0.0..1.0)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(match x_axis {
            XAxis::Count => "validated items",
            XAxis::Percent => "% of pool validated",
        })
        .y_desc("F1")
        .draw()
        .map_err(plot_err)?;

    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(xs(curve), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}
