//! Distance-based evaluation: pairwise Hamming and latent Euclidean
//! distances, intra-set and nearest-percentile statistics, Gaussian kernel
//! density summaries, and the 2-metric x 4-comparison report table.

use crate::ae::LatentVec;
use crate::error::{Error, Result};
use crate::midi::BinaryPianoroll;
use serde::{Deserialize, Serialize};

/// Cells where the two binarized grids differ; range 0..=1152.
pub fn hamming(a: &BinaryPianoroll, b: &BinaryPianoroll) -> u32 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x != y) as u32)
        .sum()
}

/// L2 distance between two latent codes.
pub fn euclidean_latent(a: &LatentVec, b: &LatentVec) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| {
            let d = (*x - *y) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// All N(N-1)/2 unordered pairwise distances.
pub fn intra_set<T>(items: &[T], metric: impl Fn(&T, &T) -> f64) -> Result<Vec<f64>> {
    if items.len() < 2 {
        return Err(Error::BatchTooSmall(format!(
            "intra-set distances need N >= 2, got {}",
            items.len()
        )));
    }
    let mut out = Vec::with_capacity(items.len() * (items.len() - 1) / 2);
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            out.push(metric(&items[i], &items[j]));
        }
    }
    Ok(out)
}

/// Distances from `gen` to every dataset item, sorted ascending and cut to
/// the closest ceil(p * |dataset|); values tied with the boundary are kept.
pub fn nearest_percentile<G, T>(
    gen: &G,
    dataset: &[T],
    metric: impl Fn(&G, &T) -> f64,
    p: f64,
) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("percentile must be in (0,1], got {p}")));
    }
    let mut d: Vec<f64> = dataset.iter().map(|item| metric(gen, item)).collect();
    d.sort_by(f64::total_cmp);
    let keep = (p * dataset.len() as f64).ceil() as usize;
    let boundary = d[keep - 1];
    let end = d.iter().position(|&v| v > boundary).unwrap_or(d.len());
    d.truncate(end.max(keep));
    Ok(d)
}

/// Smoothed density curve on an explicit grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.grid.len() {
            acc += 0.5 * (self.density[i] + self.density[i - 1]) * (self.grid[i] - self.grid[i - 1]);
        }
        acc
    }
}

const KDE_GRID_POINTS: usize = 256;

/// Gaussian KDE; bandwidth defaults to Scott's rule (std * n^(-1/5)),
/// evaluated on 256 points spanning [min - 4h, max + 4h] so the trapezoid
/// integral stays within 1e-3 of one.
pub fn kde(values: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve> {
    if values.len() < 2 {
        return Err(Error::BatchTooSmall("kde needs at least 2 values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::Config(format!("bandwidth must be positive, got {h}"))),
        None => var.sqrt() * n.powf(-0.2),
    };

    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());

    let mut grid = Vec::with_capacity(KDE_GRID_POINTS);
    let mut density = Vec::with_capacity(KDE_GRID_POINTS);
    for i in 0..KDE_GRID_POINTS {
        let x = lo + step * i as f64;
        let mut acc = 0.0;
        for &v in values {
            let u = (x - v) / h;
            acc += (-0.5 * u * u).exp();
        }
        grid.push(x);
        density.push(acc * norm);
    }
    Ok(DensityCurve { grid, density })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Hamming,
    Euclidean,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Hamming => "hamming",
            Metric::Euclidean => "euclidean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    SameTextDataset,
    RandomDataset,
    GeneratedVsDataset,
    GeneratedVsGenerated,
}

impl Comparison {
    pub fn name(self) -> &'static str {
        match self {
            Comparison::SameTextDataset => "same_text_dataset",
            Comparison::RandomDataset => "random_dataset",
            Comparison::GeneratedVsDataset => "generated_vs_dataset",
            Comparison::GeneratedVsGenerated => "generated_vs_generated",
        }
    }

    pub fn all() -> [Comparison; 4] {
        [
            Comparison::SameTextDataset,
            Comparison::RandomDataset,
            Comparison::GeneratedVsDataset,
            Comparison::GeneratedVsGenerated,
        ]
    }
}

/// One report row: a metric/comparison cell with its raw values and stats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceReport {
    pub metric: Metric,
    pub comparison: Comparison,
    pub min: f64,
    pub mean: f64,
    pub std: f64,
    pub raw: Vec<f64>,
}

impl DistanceReport {
    pub fn from_values(metric: Metric, comparison: Comparison, raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Config(format!(
                "no values for {}/{}",
                metric.name(),
                comparison.name()
            )));
        }
        let n = raw.len() as f64;
        let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = raw.iter().sum::<f64>() / n;
        let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(DistanceReport {
            metric,
            comparison,
            min,
            mean,
            std: var.sqrt(),
            raw,
        })
    }
}

/// CSV with one row per metric/comparison cell.
pub fn report_csv(rows: &[DistanceReport]) -> String {
    let mut out = String::from("metric,comparison,min,mean,std,n\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{}\n",
            r.metric.name(),
            r.comparison.name(),
            r.min,
            r.mean,
            r.std,
            r.raw.len()
        ));
    }
    out
}

/// Minimal standalone SVG line plot of one or more density curves.
pub fn density_svg(curves: &[(&str, &DensityCurve)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_hi = 0.0f64;
    for (_, c) in curves {
        for &x in &c.grid {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
        for &y in &c.density {
            y_hi = y_hi.max(y);
        }
    }
    if !x_lo.is_finite() || x_hi <= x_lo || y_hi <= 0.0 {
        x_lo = 0.0;
        x_hi = 1.0;
        y_hi = 1.0;
    }

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = colors[i % colors.len()];
        let mut path = String::new();
        for (k, (&x, &y)) in curve.grid.iter().zip(&curve.density).enumerate() {
            let px = PAD + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * PAD);
            let py = H - PAD - y / y_hi * (H - 2.0 * PAD);
            path.push_str(if k == 0 { "M" } else { "L" });
            path.push_str(&format!("{px:.2},{py:.2} "));
        }
        svg.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n\
             <text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"12\">{label}</text>\n",
            PAD + 4.0,
            PAD + 14.0 * (i + 1) as f64,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
