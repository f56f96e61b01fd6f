//! File formats: CSV tables, JSON documents, PGM/PPM images and SVG plots.
//!
//! CSVs are UTF-8 with LF endings and `.` decimals. Floats are written in
//! shortest round-trip form so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use serde::Deserialize;

use crate::bdmc::{Event, EventKind};
use crate::criteria::CriterionScan;
use crate::gmm::{Component, MixtureEstimate};
use crate::error::{Error, Result};
use crate::field::{ObservationSet, SolutionField};
use crate::gmm::TraceRow;
use crate::pinn::{CoefficientSamples, LossRecord};
use crate::pipeline::{ReportRow, SeriesEstimate};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format("json", e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::format(&path.display().to_string(), e.to_string()))
}

/// Header plus rows of numbers.
pub fn csv_table(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses a numeric CSV; returns the header and the rows.
pub fn parse_csv(text: &str, what: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::format(what, "empty file"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(what, format!("line {}: {e}", n + 2)))?;
        if row.len() != header.len() {
            return Err(Error::format(what, format!("line {}: {} fields, header has {}", n + 2, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn value_names(channels: usize) -> Vec<String> {
    (0..channels).map(|c| if c == 0 { "u".to_string() } else { format!("u{}", c + 1) }).collect()
}

pub fn field_csv(field: &SolutionField) -> String {
    let mut header = field.grid.coord_names();
    header.extend(value_names(field.channels));
    csv_table(
        &header,
        (0..field.grid.len()).map(|k| {
            let mut row = field.grid.coords(k);
            row.extend((0..field.channels).map(|c| field.get(k, c)));
            row
        }),
    )
}

pub fn observations_csv(obs: &ObservationSet, coord_names: &[String]) -> String {
    let mut header = coord_names.to_vec();
    header.extend(value_names(obs.channels));
    csv_table(
        &header,
        (0..obs.len()).map(|i| {
            let mut row = obs.point(i).to_vec();
            row.extend((0..obs.channels).map(|c| obs.value(i, c)));
            row
        }),
    )
}

/// Reads an observation CSV with `dim` coordinate columns.
pub fn parse_observations(text: &str, dim: usize) -> Result<ObservationSet> {
    let (header, rows) = parse_csv(text, "observations")?;
    if header.len() <= dim {
        return Err(Error::format("observations", format!("need {dim} coordinate columns and at least one value column")));
    }
    let channels = header.len() - dim;
    let mut obs = ObservationSet { dim, channels, coords: Vec::new(), values: Vec::new(), nodes: Vec::new() };
    for row in rows {
        obs.coords.extend_from_slice(&row[..dim]);
        obs.values.extend_from_slice(&row[dim..]);
    }
    if obs.is_empty() {
        return Err(Error::format("observations", "no rows"));
    }
    Ok(obs)
}

/// Reads node values of a field CSV written by [`field_csv`] back onto `field`'s grid.
pub fn parse_field_values(text: &str, field: &mut SolutionField) -> Result<()> {
    let (header, rows) = parse_csv(text, "field")?;
    let dim = field.grid.dim();
    if rows.len() != field.grid.len() || header.len() != dim + field.channels {
        return Err(Error::format("field", format!("expected {} rows of {} columns", field.grid.len(), dim + field.channels)));
    }
    field.values = rows.into_iter().flat_map(|r| r[dim..].to_vec()).collect();
    Ok(())
}

pub fn samples_csv(s: &CoefficientSamples) -> String {
    let mut header = s.axes.clone();
    header.extend(s.names.iter().cloned());
    let dim = s.axes.len();
    csv_table(
        &header,
        (0..s.len()).map(|i| {
            let mut row = s.coords[i * dim..(i + 1) * dim].to_vec();
            row.extend(s.values.iter().map(|v| v[i]));
            row
        }),
    )
}

/// Reads sample values back into `template`, which fixes axes, shape and names.
pub fn parse_samples(text: &str, template: &CoefficientSamples) -> Result<CoefficientSamples> {
    let (header, rows) = parse_csv(text, "samples")?;
    let dim = template.axes.len();
    let mut want = template.axes.clone();
    want.extend(template.names.iter().cloned());
    if header != want || rows.len() != template.len() {
        return Err(Error::format("samples", format!("expected columns {want:?} and {} rows", template.len())));
    }
    let mut out = template.clone();
    for (k, series) in out.values.iter_mut().enumerate() {
        *series = rows.iter().map(|r| r[dim + k]).collect();
    }
    Ok(out)
}

pub fn loss_csv(history: &[LossRecord]) -> String {
    let header: Vec<String> = ["iter", "res", "obs", "total"].iter().map(|s| s.to_string()).collect();
    csv_table(&header, history.iter().map(|r| vec![r.iteration as f64, r.loss.residual, r.loss.observation, r.loss.total]))
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let header: Vec<String> = ["sweep", "k", "eta", "mu", "sigma2", "loglik"].iter().map(|s| s.to_string()).collect();
    csv_table(
        &header,
        trace.iter().map(|t| vec![t.sweep as f64, (t.component + 1) as f64, t.params.eta, t.params.mu, t.params.sigma2, t.log_likelihood]),
    )
}

pub fn events_csv(events: &[Event]) -> String {
    let mut out = String::from("event_time,type,k_before,k_after\n");
    for e in events {
        let kind = match e.kind {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
        };
        writeln!(out, "{},{kind},{},{}", e.time, e.k_before, e.k_after).unwrap();
    }
    out
}

/// `{K: T_K}` with string keys, as JSON objects require.
pub fn visits_json(visits: &BTreeMap<usize, f64>) -> BTreeMap<String, f64> {
    visits.iter().map(|(k, t)| (k.to_string(), *t)).collect()
}

/// Flagged node indices, one per line.
pub fn mask_index_csv(mask: &[bool]) -> String {
    let mut out = String::from("index\n");
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        writeln!(out, "{i}").unwrap();
    }
    out
}

/// Binary PGM of a `rows x cols` mask stored row-major; set nodes are white.
pub fn mask_pgm(mask: &[bool], rows: usize, cols: usize) -> Vec<u8> {
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    // image rows run top to bottom, so flip the first storage axis
    for r in (0..rows).rev() {
        out.extend(mask[r * cols..(r + 1) * cols].iter().map(|&m| if m { 255u8 } else { 0 }));
    }
    out
}

/// Grey-scale PGM of a `rows x cols` row-major scalar array, scaled to its own range.
pub fn heatmap_pgm(values: &[f64], rows: usize, cols: usize) -> Vec<u8> {
    let (lo, hi) = range(values);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for r in (0..rows).rev() {
        out.extend(values[r * cols..(r + 1) * cols].iter().map(|&v| (255.0 * (v - lo) / (hi - lo)).round() as u8));
    }
    out
}

/// Colour PPM with a blue-white-red map centred on the midpoint of the range.
pub fn heatmap_ppm(values: &[f64], rows: usize, cols: usize) -> Vec<u8> {
    let (lo, hi) = range(values);
    let mut out = format!("P6\n{cols} {rows}\n255\n").into_bytes();
    for r in (0..rows).rev() {
        for &v in &values[r * cols..(r + 1) * cols] {
            let s = 2.0 * (v - lo) / (hi - lo) - 1.0;
            let (cr, cg, cb) = if s < 0.0 { (1.0 + s, 1.0 + s, 1.0) } else { (1.0, 1.0 - s, 1.0 - s) };
            out.extend([cr, cg, cb].map(|c| (255.0 * c).round() as u8));
        }
    }
    out
}

fn range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Line plot of one or more series sharing an x axis.
pub fn line_plot_svg(title: &str, x: &[f64], series: &[(&str, &[f64])], log_y: bool) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let tf = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
    let all: Vec<f64> = series.iter().flat_map(|(_, s)| s.iter().map(|&v| tf(v))).filter(|v| v.is_finite()).collect();
    let (y0, y1) = range(&all);
    let (x0, x1) = range(x);
    let px = |v: f64| M + (v - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |v: f64| H - M - (tf(v) - y0) / (y1 - y0) * (H - 2.0 * M);
    let colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut out = String::new();
    writeln!(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">").unwrap();
    writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    writeln!(out, "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, escape(title)).unwrap();
    writeln!(out, "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", W - 2.0 * M, H - 2.0 * M).unwrap();
    let label = |v: f64| if log_y { format!("1e{v:.1}") } else { format!("{v:.4}") };
    writeln!(out, "<text x=\"4\" y=\"{}\" font-size=\"10\">{}</text>", H - M, label(y0)).unwrap();
    writeln!(out, "<text x=\"4\" y=\"{}\" font-size=\"10\">{}</text>", M + 4.0, label(y1)).unwrap();
    writeln!(out, "<text x=\"{M}\" y=\"{}\" font-size=\"10\">{x0}</text>", H - M + 14.0).unwrap();
    writeln!(out, "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{x1}</text>", W - M, H - M + 14.0).unwrap();
    for (i, (name, s)) in series.iter().enumerate() {
        let colour = colours[i % colours.len()];
        let mut d = String::new();
        for (j, (&a, &b)) in x.iter().zip(s.iter()).enumerate() {
            if !tf(b).is_finite() {
                continue;
            }
            write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, px(a), py(b)).unwrap();
        }
        writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>", d.trim_end()).unwrap();
        writeln!(out, "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{colour}\">{}</text>", W - M - 90.0, M + 16.0 + 14.0 * i as f64, escape(name)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("equation,case,noise_variance,mse,parameter,reference,predicted,relative_error\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.4e},{},{},{:.4},{:+.2}",
            r.equation, r.case, r.noise_variance, r.mse, r.parameter, r.reference, r.predicted, r.relative_error
        )
        .unwrap();
    }
    out
}

/// Fixed-width text rendering of report rows.
pub fn report_text(rows: &[ReportRow]) -> String {
    let mut table = vec![["Equation", "Case", "Noise", "MSE", "Parameter", "Reference", "Predicted", "Rel. error"].map(String::from).to_vec()];
    for r in rows {
        table.push(vec![
            r.equation.clone(),
            r.case.clone(),
            format!("{}", r.noise_variance),
            format!("{:.4e}", r.mse),
            r.parameter.clone(),
            format!("{:.4}", r.reference),
            format!("{:.4}", r.predicted),
            format!("{:+.2}%", r.relative_error),
        ]);
    }
    align(&table)
}

pub fn align(table: &[Vec<String>]) -> String {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols).map(|c| table.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in table {
        let cells: Vec<String> = row.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Fitted mixture of one coefficient as stored by the estimate stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateDoc {
    pub parameter: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub components: Vec<Component>,
    pub burn_in: usize,
    pub sweeps: usize,
    /// Empirical state-transition matrix of the MAP labels.
    pub transition: Vec<Vec<f64>>,
}

impl EstimateDoc {
    pub fn new(parameter: &str, est: &SeriesEstimate) -> Self {
        EstimateDoc {
            parameter: parameter.to_string(),
            k: est.estimate.k,
            components: est.estimate.components.clone(),
            burn_in: est.estimate.burn_in,
            sweeps: est.estimate.sweeps,
            transition: est.transition.clone(),
        }
    }

    pub fn mixture_estimate(&self) -> MixtureEstimate {
        MixtureEstimate { k: self.k, components: self.components.clone(), burn_in: self.burn_in, sweeps: self.sweeps }
    }
}

/// How the number of states was chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionDoc {
    pub parameter: String,
    /// `birth_death`, or `constant` when the samples had no spread.
    pub method: String,
    pub k_hat: usize,
    /// Order of the birth-death chain before nearby states were merged.
    pub k_hat_raw: Option<usize>,
    pub occupation_fractions: BTreeMap<String, f64>,
    pub criteria: Option<CriterionScan>,
}

impl SelectionDoc {
    pub fn new(parameter: &str, est: &SeriesEstimate) -> Self {
        SelectionDoc {
            parameter: parameter.to_string(),
            method: if est.bdmc.is_some() { "birth_death" } else { "constant" }.into(),
            k_hat: est.estimate.k,
            k_hat_raw: est.bdmc.as_ref().map(|b| b.k_hat),
            occupation_fractions: est.bdmc.as_ref().map(|b| visits_json(&b.occupation_fractions())).unwrap_or_default(),
            criteria: est.criteria.clone(),
        }
    }
}

/// Summary of the reconstruction stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDoc {
    /// Mean squared error against the reference on the data grid.
    pub mse: f64,
    pub refine: usize,
    pub nodes: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Grid};

    #[test]
    fn field_csv_round_trips() {
        let grid = Grid::new(vec![Axis::space("x", 0.0, 1.0, 3).unwrap()], Some(Axis::time(1.0, 2).unwrap())).unwrap();
        let f = SolutionField::from_fn(grid, 1, |p| vec![p[0] * 0.1 + p[1] / 3.0]);
        let text = field_csv(&f);
        assert!(text.starts_with("x,t,u\n"));
        let mut g = SolutionField::zeros(f.grid.clone(), 1);
        parse_field_values(&text, &mut g).unwrap();
        assert_eq!(f, g);
        let obs = parse_observations(&text, 2).unwrap();
        assert_eq!(obs.len(), 6);
        assert_eq!(obs.coords, f.grid.all_coords());
    }

    #[test]
    fn pgm_header_and_size() {
        let img = mask_pgm(&[true, false, false, true, true, false], 2, 3);
        assert!(img.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(img.len(), b"P5\n3 2\n255\n".len() + 6);
        // last storage row is drawn first
        assert_eq!(&img[img.len() - 6..], &[255, 255, 0, 255, 0, 0]);
    }

    #[test]
    fn report_rounding() {
        let row = ReportRow {
            equation: "burgers".into(),
            case: "3.1".into(),
            noise_variance: 0.0,
            mse: 2.60071e-10,
            parameter: "lambda1".into(),
            reference: 1.5,
            predicted: 1.49963,
            relative_error: -0.02467,
        };
        let csv = report_csv(&[row]);
        assert!(csv.ends_with("burgers,3.1,0,2.6007e-10,lambda1,1.5,1.4996,-0.02\n"), "{csv}");
    }
}
