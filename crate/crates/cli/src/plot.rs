//! Standalone SVG plots.

use glmdiag::diagnostics::EnvelopeBand;
use plotters::prelude::*;

use crate::error::CliError;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Run(format!("plot: {e}"))
}

/// Residuals against the linear predictor, with reference lines at 0 and ±2.
pub fn residuals_vs_eta(title: &str, eta: &[f64], r: &[f64]) -> Result<String, CliError> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let (x0, x1) = range(eta.iter().copied());
        let (y0, y1) = range(r.iter().copied().chain([-2.5, 2.5]));
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(48)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc("linear predictor")
            .y_desc("residual")
            .draw()
            .map_err(plot_err)?;
        for (level, style) in [
            (0.0, BLACK.mix(0.6)),
            (2.0, RED.mix(0.5)),
            (-2.0, RED.mix(0.5)),
        ] {
            chart
                .draw_series(LineSeries::new([(x0, level), (x1, level)], style))
                .map_err(plot_err)?;
        }
        chart
            .draw_series(
                eta.iter()
                    .zip(r)
                    .map(|(&x, &y)| Circle::new((x, y), 3, BLUE.filled())),
            )
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Sorted residuals against expected positions, with the simulated band.
pub fn envelope(title: &str, bands: &[EnvelopeBand], x_desc: &str) -> Result<String, CliError> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let (x0, x1) = range(bands.iter().map(|b| b.expected_quantile));
        let (y0, y1) = range(bands.iter().flat_map(|b| [b.lower, b.upper, b.observed]));
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(48)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc(x_desc)
            .y_desc("sorted residual")
            .draw()
            .map_err(plot_err)?;
        let edge =
            |f: fn(&EnvelopeBand) -> f64| bands.iter().map(move |b| (b.expected_quantile, f(b)));
        chart
            .draw_series(LineSeries::new(edge(|b| b.lower), BLACK))
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(edge(|b| b.upper), BLACK))
            .map_err(plot_err)?;
        chart
            .draw_series(bands.iter().map(|b| {
                let color = if b.contains_observed() { BLUE } else { RED };
                Circle::new((b.expected_quantile, b.observed), 3, color.filled())
            }))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}
