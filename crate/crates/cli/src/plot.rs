//! SVG figures: prediction RMSE and mean rate per epoch, and the rate CDF.

use std::path::Path;

use plotters::prelude::*;
use t2u_core::{Error, MetricsReport};

const PALETTE: [RGBColor; 7] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
];

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

type Series = (String, Vec<(f64, f64)>);

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series
        .iter()
        .flat_map(|(_, p)| p.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    (x0, x1, y0 - pad, y1 + pad)
}

fn line_chart<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    caption: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<(), Error>
where
    DB::ErrorType: 'static,
{
    let (x0, x1, y0, y1) = bounds(series);
    let mut chart = ChartBuilder::on(area)
        .caption(caption, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(plot_err)?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

/// Writes `rmse_vs_time.svg`, `rate_vs_time.svg` and `rate_cdf.svg`.
pub fn write_all(report: &MetricsReport, dir: &Path) -> Result<(), Error> {
    let per_epoch = |f: fn(&t2u_core::scenario::report::EpochSummary) -> f64| -> Vec<Series> {
        report
            .schemes
            .iter()
            .map(|s| {
                (
                    s.scheme.to_string(),
                    s.per_epoch.iter().map(|e| (e.time, f(e))).collect(),
                )
            })
            .collect()
    };

    let path = dir.join("rmse_vs_time.svg");
    let root = SVGBackend::new(&path, (900, 900)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (top, bottom) = root.split_vertically(450);
    line_chart(
        &top,
        "Distance prediction RMSE",
        "time [s]",
        "RMSE [m]",
        &per_epoch(|e| e.distance_rmse),
    )?;
    line_chart(
        &bottom,
        "Angle prediction RMSE",
        "time [s]",
        "RMSE [rad]",
        &per_epoch(|e| e.angle_rmse),
    )?;
    root.present().map_err(plot_err)?;

    let path = dir.join("rate_vs_time.svg");
    let root = SVGBackend::new(&path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    line_chart(
        &root,
        "Mean achievable rate",
        "time [s]",
        "rate [bps/Hz]",
        &per_epoch(|e| e.mean_rate),
    )?;
    root.present().map_err(plot_err)?;

    let cdf: Vec<Series> = report
        .schemes
        .iter()
        .map(|s| (s.scheme.to_string(), s.rate_cdf.clone()))
        .collect();
    let path = dir.join("rate_cdf.svg");
    let root = SVGBackend::new(&path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    line_chart(&root, "Rate CDF", "rate [bps/Hz]", "CDF", &cdf)?;
    root.present().map_err(plot_err)?;
    Ok(())
}
