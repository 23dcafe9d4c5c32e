// SPDX-License-Identifier: Apache-2.0

//! Scaling series: greedy conflicts and coloring time against mesh size.

use std::time::Duration;

use thiserror::Error;

use crate::coloring::{color, ColoringConfig, ColoringError, ColoringReport};
use crate::generators::{Family, GeneratorError, GeneratorSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("resolution {resolution}: {source}")]
    Coloring {
        resolution: usize,
        source: ColoringError,
    },
    #[error("surface counts must strictly increase, resolution {resolution} gives {surfaces}")]
    NotIncreasing { resolution: usize, surfaces: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesOptions {
    pub seed: u64,
    /// Element-order shuffle applied to every generated mesh.
    pub shuffle: Option<u64>,
    /// Colorings per size; the fastest one is kept.
    pub repeats: usize,
    pub coloring: ColoringConfig,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            seed: 0,
            shuffle: Some(0),
            repeats: 1,
            coloring: ColoringConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub resolution: usize,
    pub report: ColoringReport,
}

impl SeriesPoint {
    pub fn surfaces(&self) -> usize {
        self.report.surfaces
    }

    pub fn conflicts(&self) -> usize {
        self.report.greedy_conflicts
    }

    pub fn time(&self) -> Duration {
        self.report.total_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSeries {
    pub family: Family,
    pub points: Vec<SeriesPoint>,
}

impl ScalingSeries {
    /// Log-log slope of coloring time against surfaces.
    pub fn time_slope(&self) -> Option<f64> {
        loglog_slope(
            self.points
                .iter()
                .map(|p| (p.surfaces() as f64, p.time().as_secs_f64())),
        )
    }

    /// Log-log slope of greedy conflicts against surfaces.
    pub fn conflict_slope(&self) -> Option<f64> {
        loglog_slope(
            self.points
                .iter()
                .map(|p| (p.surfaces() as f64, p.conflicts() as f64)),
        )
    }
}

/// Least-squares slope of `ln y` on `ln x`. Needs two distinct positive `x`;
/// points with a nonpositive coordinate are skipped.
pub fn loglog_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx).filter(|s| s.is_finite())
}

/// Colors the family's mesh at each resolution (cells per axis).
pub fn run_series(
    family: Family,
    resolutions: &[usize],
    options: &SeriesOptions,
) -> Result<ScalingSeries, StatsError> {
    let mut points: Vec<SeriesPoint> = Vec::with_capacity(resolutions.len());
    for &resolution in resolutions {
        let mesh = GeneratorSpec {
            shuffle: options.shuffle,
            ..GeneratorSpec::uniform(family, resolution)
        }
        .generate()?;
        if let Some(last) = points.last() {
            if mesh.surface_count() <= last.surfaces() {
                return Err(StatsError::NotIncreasing {
                    resolution,
                    surfaces: mesh.surface_count(),
                });
            }
        }
        let cfg = ColoringConfig {
            rng_seed: options.seed,
            ..options.coloring
        };
        let mut best: Option<ColoringReport> = None;
        for _ in 0..options.repeats.max(1) {
            let (_, report) =
                color(&mesh, &cfg).map_err(|source| StatsError::Coloring { resolution, source })?;
            if best
                .as_ref()
                .is_none_or(|b| report.total_time < b.total_time)
            {
                best = Some(report);
            }
        }
        points.push(SeriesPoint {
            resolution,
            report: best.unwrap(),
        });
    }
    Ok(ScalingSeries { family, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let s = loglog_slope([(10.0, 3.0), (100.0, 30.0), (1000.0, 300.0)]).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        let s = loglog_slope([(2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn figure_data_slope() {
        let s = loglog_slope([(14775.0, 1697.0), (3774165.0, 416542.0)]).unwrap();
        assert!((s - 0.993).abs() < 0.001, "{s}");
    }

    #[test]
    fn degenerate_series_has_no_slope() {
        assert_eq!(loglog_slope([(5.0, 1.0)]), None);
        assert_eq!(loglog_slope([(5.0, 1.0), (5.0, 2.0)]), None);
        let s = run_series(Family::TriRect, &[8], &SeriesOptions::default()).unwrap();
        assert_eq!(s.conflict_slope(), None);
    }

    #[test]
    fn series_is_deterministic_in_conflicts() {
        let o = SeriesOptions::default();
        let a = run_series(Family::QuadRect, &[8, 16, 32], &o).unwrap();
        let b = run_series(Family::QuadRect, &[8, 16, 32], &o).unwrap();
        let ca: Vec<_> = a.points.iter().map(|p| p.conflicts()).collect();
        let cb: Vec<_> = b.points.iter().map(|p| p.conflicts()).collect();
        assert_eq!(ca, cb);
        assert!(a.conflict_slope().is_some());
    }

    #[test]
    fn sizes_must_increase() {
        assert!(matches!(
            run_series(Family::TriRect, &[8, 8], &SeriesOptions::default()),
            Err(StatsError::NotIncreasing { .. })
        ));
    }
}
