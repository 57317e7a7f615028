//! SVG figures. Plotting never feeds back into the numbers, so failures here
//! are reported as warnings by the callers.

use plotters::prelude::*;

const SIZE: (u32, u32) = (800, 520);
const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

type PlotResult = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    format!("plot: {e}")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Semilog plot of positive series against time, one line per label.
pub fn semilog(title: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> PlotResult {
    let positive = || {
        series
            .iter()
            .flat_map(|s| s.1.iter())
            .filter(|p| p.1 > 0.0 && p.1.is_finite())
    };
    let t_max = positive().map(|p| p.0).fold(0.0, f64::max).max(1e-9);
    let lo = positive().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = positive().map(|p| p.1).fold(0.0, f64::max);
    if !(lo > 0.0 && hi > 0.0) {
        return Err("plot: no positive values to draw".into());
    }
    let (lo, hi) = (lo * 0.8, hi * 1.25);

    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(0f64..t_max, (lo..hi).log_scale())
            .map_err(err)?;
        chart
            .configure_mesh()
            .x_desc("t")
            .y_desc(y_label)
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()
            .map_err(err)?;
        for (i, (label, pts)) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(
                    pts.iter().copied().filter(|p| p.1 > 0.0 && p.1.is_finite()),
                    color.stroke_width(2),
                ))
                .map_err(err)?
                .label(label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(err)?;
        root.present().map_err(err)?;
    }
    Ok(buf)
}

/// Scatter of the two eigenvalue branches in the complex plane.
pub fn eigenvalue_scatter(title: &str, minus: &[(f64, f64)], plus: &[(f64, f64)], gap: f64) -> PlotResult {
    let all = || minus.iter().chain(plus.iter());
    let (x0, x1) = bounds(all().map(|p| p.0).chain([0.0, gap]));
    let (y0, y1) = bounds(all().map(|p| p.1));

    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(err)?;
        chart
            .configure_mesh()
            .x_desc("Re λ")
            .y_desc("Im λ")
            .draw()
            .map_err(err)?;
        for (pts, color, label) in [(minus, PALETTE[0], "λ₋"), (plus, PALETTE[1], "λ₊")] {
            chart
                .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                .map_err(err)?
                .label(label)
                .legend(move |(x, y)| Circle::new((x + 10, y), 3, color.filled()));
        }
        chart
            .draw_series(LineSeries::new([(gap, y0), (gap, y1)], BLACK.stroke_width(1)))
            .map_err(err)?
            .label(format!("spectral gap {gap:.5}"))
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(err)?;
        root.present().map_err(err)?;
    }
    Ok(buf)
}

/// `μ(σ)` against `σ`, split at `mark` so the kink is not bridged.
pub fn rate_curve(points: &[(f64, f64)], mark: f64) -> PlotResult {
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (_, y1) = bounds(points.iter().map(|p| p.1));
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("spectral gap μ(σ)", ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0.max(0.0)..x1, 0.0..y1)
            .map_err(err)?;
        chart
            .configure_mesh()
            .x_desc("σ")
            .y_desc("μ")
            .draw()
            .map_err(err)?;
        let color = PALETTE[0];
        for part in [
            points.iter().filter(|p| p.0 <= mark).copied().collect::<Vec<_>>(),
            points.iter().filter(|p| p.0 >= mark).copied().collect(),
        ] {
            chart
                .draw_series(LineSeries::new(part, color.stroke_width(2)))
                .map_err(err)?;
        }
        chart
            .draw_series(LineSeries::new([(mark, 0.0), (mark, y1)], BLACK.mix(0.5)))
            .map_err(err)?;
        root.present().map_err(err)?;
    }
    Ok(buf)
}
