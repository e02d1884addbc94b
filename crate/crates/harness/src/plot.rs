//! SVG heatmaps and line charts of result tables.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::config::{Experiment, RunConfig};
use crate::error::{HarnessError, Result};
use crate::table::ResultTable;

#[derive(Debug, Clone, PartialEq)]
pub enum PlotKind {
    /// Colour map of `z` over the `(x, y)` grid.
    Heatmap { x: String, y: String, z: String },
    /// One line per `y` column and per distinct value of the `group` columns.
    Lines { x: String, y: Vec<String>, group: Vec<String> },
}

impl PlotKind {
    fn heatmap(x: &str, y: &str, z: &str) -> Self {
        PlotKind::Heatmap { x: x.into(), y: y.into(), z: z.into() }
    }

    fn lines(x: &str, y: &[&str], group: &[&str]) -> Self {
        PlotKind::Lines {
            x: x.into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            group: group.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// The natural plot of an experiment: maps for two-axis sweeps, lines otherwise.
pub fn default_plot(config: &RunConfig) -> PlotKind {
    match &config.experiment {
        Experiment::EigenMap(_) => PlotKind::heatmap("Omega_R", "delta_nu", "shift_Hz"),
        Experiment::ShiftSweep(s) => {
            let mut y = vec!["shift_eigen_Hz", "shift_analytic_Hz"];
            if s.simulated {
                y.push("shift_simulated_Hz");
            }
            PlotKind::lines("lambda", &y, &[])
        }
        Experiment::ThresholdMap(t) if t.delta_nu.values().len() > 1 && t.n_th.values().len() == 1 => {
            PlotKind::heatmap("detuning", "delta_nu", "lambda_min_Hz")
        }
        Experiment::ThresholdMap(_) => PlotKind::lines("detuning", &["lambda_min_Hz"], &["n_th", "delta_nu"]),
        Experiment::GateSweep(g) => {
            let x = if g.ratio.is_some() { "ratio" } else { "detuning" };
            if g.lambda.values().len() > 1 {
                PlotKind::heatmap(x, "lambda", "fidelity")
            } else {
                PlotKind::lines(x, &["fidelity"], &["lambda"])
            }
        }
        Experiment::GammaSweep(_) => PlotKind::lines("gamma_pct", &["fidelity"], &["lambda", "detuning"]),
        Experiment::DonorCoupling(_) => PlotKind::lines("distance", &["lambda_Hz"], &[]),
        Experiment::Spectrum(_) => PlotKind::lines("freq", &["S"], &[]),
    }
}

fn column<'a>(table: &'a ResultTable, name: &str) -> Result<(usize, &'a crate::table::Column)> {
    table
        .column(name)
        .map(|k| (k, &table.columns[k]))
        .ok_or_else(|| HarnessError::Precondition(format!("table has no column `{name}`")))
}

fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        None
    } else if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        Some((lo - pad, hi + pad))
    } else {
        Some((lo, hi))
    }
}

/// Cell edges around sorted distinct centres.
fn edges(centres: &[f64]) -> Vec<f64> {
    if centres.len() == 1 {
        let pad = if centres[0] == 0.0 { 0.5 } else { 0.05 * centres[0].abs() };
        return vec![centres[0] - pad, centres[0] + pad];
    }
    let n = centres.len();
    let mut e = Vec::with_capacity(n + 1);
    e.push(centres[0] - 0.5 * (centres[1] - centres[0]));
    for w in centres.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    e.push(centres[n - 1] + 0.5 * (centres[n - 1] - centres[n - 2]));
    e
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn plot(table: &ResultTable, kind: &PlotKind, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if table.rows.is_empty() {
        return Err(HarnessError::Precondition("cannot plot an empty table".into()));
    }
    let draw = |e: &dyn std::fmt::Display| HarnessError::io(path, e);
    match kind {
        PlotKind::Heatmap { x, y, z } => heatmap(table, x, y, z, path).map_err(|e| draw(&e)),
        PlotKind::Lines { x, y, group } => lines(table, x, y, group, path).map_err(|e| draw(&e)),
    }
}

type DrawResult = std::result::Result<(), Box<dyn std::error::Error>>;

fn heatmap(table: &ResultTable, x: &str, y: &str, z: &str, path: &Path) -> DrawResult {
    let (kx, cx) = column(table, x)?;
    let (ky, cy) = column(table, y)?;
    let (kz, cz) = column(table, z)?;
    let xs = distinct(table.rows.iter().filter_map(|r| r[kx].number()));
    let ys = distinct(table.rows.iter().filter_map(|r| r[ky].number()));
    if xs.is_empty() || ys.is_empty() {
        return Err("no numeric grid to plot".into());
    }
    let (ex, ey) = (edges(&xs), edges(&ys));
    let (z0, z1) = span(table.rows.iter().filter_map(|r| r[kz].number())).unwrap_or((0.0, 1.0));

    let root = SVGBackend::new(path, (900, 640)).into_drawing_area();
    root.fill(&WHITE)?;
    let (main, bar) = root.split_horizontally(780);
    let mut chart = ChartBuilder::on(&main)
        .caption(cz.label(), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(48)
        .y_label_area_size(80)
        .build_cartesian_2d(ex[0]..ex[ex.len() - 1], ey[0]..ey[ey.len() - 1])?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc(cx.label())
        .y_desc(cy.label())
        .x_label_formatter(&|v| format!("{v:.3e}"))
        .y_label_formatter(&|v| format!("{v:.3e}"))
        .draw()?;
    let cell = |v: f64, centres: &[f64], e: &[f64]| {
        let k = centres.partition_point(|c| *c < v);
        (e[k], e[k + 1])
    };
    chart.draw_series(table.rows.iter().filter_map(|r| {
        let (xv, yv) = (r[kx].number()?, r[ky].number()?);
        let (x0, x1) = cell(xv, &xs, &ex);
        let (y0, y1) = cell(yv, &ys, &ey);
        let colour = match r[kz].number().filter(|v| v.is_finite()) {
            Some(v) => ViridisRGB.get_color_normalized(v, z0, z1),
            None => RGBColor(200, 200, 200),
        };
        Some(Rectangle::new([(x0, y0), (x1, y1)], colour.filled()))
    }))?;

    let steps = 64;
    let mut scale = ChartBuilder::on(&bar)
        .margin_top(44)
        .margin_bottom(60)
        .margin_right(8)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..1.0, z0..z1)?;
    scale
        .configure_mesh()
        .disable_mesh()
        .disable_x_axis()
        .y_label_formatter(&|v| format!("{v:.3e}"))
        .draw()?;
    scale.draw_series((0..steps).map(|k| {
        let a = z0 + (z1 - z0) * k as f64 / steps as f64;
        let b = z0 + (z1 - z0) * (k + 1) as f64 / steps as f64;
        Rectangle::new([(0.0, a), (1.0, b)], ViridisRGB.get_color_normalized(0.5 * (a + b), z0, z1).filled())
    }))?;
    root.present()?;
    Ok(())
}

fn lines(table: &ResultTable, x: &str, ys: &[String], group: &[String], path: &Path) -> DrawResult {
    let (kx, cx) = column(table, x)?;
    let y_cols: Vec<(usize, &crate::table::Column)> = ys.iter().map(|y| column(table, y)).collect::<Result<_>>()?;
    let g_cols: Vec<(usize, &crate::table::Column)> = group.iter().map(|g| column(table, g)).collect::<Result<_>>()?;

    // (y column, group key) -> points, in row order.
    let mut series: BTreeMap<(usize, String), Vec<(f64, f64)>> = BTreeMap::new();
    for row in &table.rows {
        let Some(xv) = row[kx].number() else { continue };
        let key: Vec<String> = g_cols
            .iter()
            .map(|(k, c)| format!("{}={}", c.name, row[*k].number().map_or("-".into(), |v| format!("{v:e}"))))
            .collect();
        for (slot, (ky, _)) in y_cols.iter().enumerate() {
            if let Some(yv) = row[*ky].number().filter(|v| v.is_finite()) {
                series.entry((slot, key.join(" "))).or_default().push((xv, yv));
            }
        }
    }
    let (x0, x1) = span(series.values().flatten().map(|p| p.0)).ok_or("no finite points to plot")?;
    let (y0, y1) = span(series.values().flatten().map(|p| p.1)).ok_or("no finite points to plot")?;
    let y_label = if y_cols.len() == 1 {
        y_cols[0].1.label()
    } else {
        let unit = &y_cols[0].1.unit;
        if y_cols.iter().all(|(_, c)| &c.unit == unit) && !unit.is_empty() {
            format!("value [{unit}]")
        } else {
            "value".into()
        }
    };

    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .x_label_area_size(48)
        .y_label_area_size(90)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart
        .configure_mesh()
        .x_desc(cx.label())
        .y_desc(y_label)
        .x_label_formatter(&|v| format!("{v:.3e}"))
        .y_label_formatter(&|v| format!("{v:.3e}"))
        .draw()?;
    for (k, ((slot, key), points)) in series.into_iter().enumerate() {
        let colour = Palette99::pick(k).to_rgba();
        let mut name = y_cols[slot].1.name.clone();
        if !key.is_empty() {
            name = format!("{name} {key}");
        }
        chart
            .draw_series(LineSeries::new(points.iter().copied(), colour.stroke_width(2)))?
            .label(name)
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], colour.stroke_width(2)));
        chart.draw_series(points.into_iter().map(|p| Circle::new(p, 3, colour.filled())))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}
