//! Summary tables, scatter CSV and the optimal compression point.

use std::cmp::Ordering;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::experiment::{RunRecord, RunStatus};
use crate::{Error, Result, Scalar};

/// One (provider, variant) result in rate-performance space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint<T> {
    pub provider: String,
    pub modifier: String,
    pub avg_size_mb: T,
    pub map: T,
    pub ar: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Grouped by provider (first appearance), size descending within.
    pub rows: Vec<RatePoint<f64>>,
    pub failed: usize,
}

impl Summary {
    pub fn providers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.provider.as_str()) {
                out.push(&r.provider);
            }
        }
        out
    }

    pub fn points_for(&self, provider: &str) -> Vec<RatePoint<f64>> {
        self.rows.iter().filter(|r| r.provider == provider).cloned().collect()
    }
}

fn rate_point(r: &RunRecord) -> Result<RatePoint<f64>> {
    let get = |k: &str| {
        r.metrics
            .get(k)
            .copied()
            .ok_or_else(|| Error::invalid(format!("run {} has no {k} metric", r.run_id)))
    };
    Ok(RatePoint {
        provider: r.provider.clone(),
        modifier: r.dataset_variant.clone(),
        avg_size_mb: r
            .avg_size_mb
            .ok_or_else(|| Error::invalid(format!("run {} has no size", r.run_id)))?,
        map: get("map")?,
        ar: get("ar")?,
    })
}

/// Ok runs as table rows; failed runs are only counted.
pub fn summarize(runs: &[RunRecord]) -> Result<Summary> {
    let mut order: Vec<&str> = Vec::new();
    let mut rows = Vec::new();
    let mut failed = 0;
    for r in runs {
        if r.status == RunStatus::Failed {
            failed += 1;
            continue;
        }
        if !order.contains(&r.provider.as_str()) {
            order.push(&r.provider);
        }
        rows.push(rate_point(r)?);
    }
    if rows.is_empty() {
        return Err(Error::NoSuccessfulRuns);
    }
    let group = |p: &str| order.iter().position(|o| *o == p).unwrap();
    rows.sort_by(|a, b| {
        group(&a.provider)
            .cmp(&group(&b.provider))
            .then(b.avg_size_mb.partial_cmp(&a.avg_size_mb).unwrap_or(Ordering::Equal))
    });
    Ok(Summary { rows, failed })
}

/// Side-by-side AR/mAP per provider with the size column last, one line per
/// dataset variant, largest size first. Missing cells print as `-`.
pub fn render_table(summary: &Summary) -> String {
    let providers = summary.providers();
    let mut variants: Vec<(&str, f64)> = Vec::new();
    for r in &summary.rows {
        if !variants.iter().any(|v| v.0 == r.modifier) {
            variants.push((&r.modifier, r.avg_size_mb));
        }
    }
    variants.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));

    let mut s = String::new();
    write!(s, "{:<20}", "variant").unwrap();
    for p in &providers {
        write!(s, " {:>9} {:>9}", format!("{p} AR"), format!("{p} mAP")).unwrap();
    }
    writeln!(s, " {:>8}", "size MB").unwrap();
    for (modifier, size) in &variants {
        write!(s, "{modifier:<20}").unwrap();
        for p in &providers {
            match summary
                .rows
                .iter()
                .find(|r| r.provider == *p && r.modifier == *modifier)
            {
                Some(r) => write!(s, " {:>9.3} {:>9.3}", r.ar, r.map).unwrap(),
                None => write!(s, " {:>9} {:>9}", "-", "-").unwrap(),
            }
        }
        writeln!(s, " {size:>8.3}").unwrap();
    }
    if summary.failed > 0 {
        writeln!(s, "({} failed runs omitted)", summary.failed).unwrap();
    }
    s
}

/// Smallest-size point whose mAP is within `epsilon` of the best one; equal
/// sizes go to the higher mAP.
///
/// The band edge gets a few ulps of slack so that a value written as
/// exactly `max - epsilon` in decimal is admitted.
pub fn optimal_point<T: Scalar>(points: &[RatePoint<T>], epsilon: T) -> Result<&RatePoint<T>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("rate points"));
    }
    if !(epsilon >= T::zero() && epsilon < T::one()) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1)")));
    }
    let best = points.iter().map(|p| p.map).fold(T::neg_infinity(), T::max);
    let slack = T::lit(8.0) * T::epsilon() * best.abs().max(T::one());
    let floor = best - epsilon - slack;
    points
        .iter()
        .filter(|p| p.map >= floor)
        .min_by(|a, b| {
            a.avg_size_mb
                .partial_cmp(&b.avg_size_mb)
                .unwrap_or(Ordering::Equal)
                .then(b.map.partial_cmp(&a.map).unwrap_or(Ordering::Equal))
        })
        .ok_or(Error::EmptyInput("rate points"))
}

pub const SCATTER_HEADER: &str = "provider,modifier,avg_size_mb,map,ar";

#[derive(Serialize, Deserialize)]
struct ScatterRow {
    provider: String,
    modifier: String,
    avg_size_mb: f64,
    map: f64,
    ar: f64,
}

/// CSV with one row per ok run, numbers in shortest round-trip form.
pub fn emit_scatter(runs: &[RunRecord]) -> Result<String> {
    let summary = summarize(runs)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &summary.rows {
        w.serialize(ScatterRow {
            provider: p.provider.clone(),
            modifier: p.modifier.clone(),
            avg_size_mb: p.avg_size_mb,
            map: p.map,
            ar: p.ar,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_scatter(text: &str) -> Result<Vec<RatePoint<f64>>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header.join(",") != SCATTER_HEADER {
        return Err(Error::invalid(format!(
            "unexpected scatter header {:?}",
            header.join(",")
        )));
    }
    r.deserialize::<ScatterRow>()
        .map(|row| {
            let row = row?;
            Ok(RatePoint {
                provider: row.provider,
                modifier: row.modifier,
                avg_size_mb: row.avg_size_mb,
                map: row.map,
                ar: row.ar,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    const SIZES: [f64; 13] = [
        0.332, 0.321, 0.311, 0.313, 0.305, 0.273, 0.245, 0.226, 0.209, 0.191, 0.171, 0.138, 0.097,
    ];
    const FCOS_MAP: [f64; 13] = [
        0.688, 0.677, 0.692, 0.679, 0.679, 0.685, 0.677, 0.675, 0.673, 0.666, 0.651, 0.643, 0.598,
    ];
    const RCNN_MAP: [f64; 13] = [
        0.662, 0.658, 0.668, 0.666, 0.663, 0.668, 0.669, 0.659, 0.660, 0.658, 0.649, 0.636, 0.588,
    ];

    fn points(provider: &str, maps: &[f64], sizes: &[f64]) -> Vec<RatePoint<f64>> {
        maps.iter()
            .zip(sizes)
            .enumerate()
            .map(|(i, (&map, &s))| RatePoint {
                provider: provider.to_string(),
                modifier: format!("v{i}"),
                avg_size_mb: s,
                map,
                ar: 0.8,
            })
            .collect()
    }

    fn run(provider: &str, modifier: &str, size: f64, map: f64, ar: f64, ok: bool) -> RunRecord {
        let t = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        RunRecord {
            run_id: format!("{provider}-{modifier}"),
            dataset_variant: modifier.to_string(),
            provider: provider.to_string(),
            metrics: if ok {
                BTreeMap::from([("map".to_string(), map), ("ar".to_string(), ar)])
            } else {
                BTreeMap::new()
            },
            avg_size_mb: Some(size),
            started_at: t,
            finished_at: t,
            status: if ok { RunStatus::Ok } else { RunStatus::Failed },
            diagnostics: None,
        }
    }

    #[test]
    fn sweep_journal_optima() {
        let rcnn = points("rcnn", &RCNN_MAP, &SIZES);
        let p = optimal_point(&rcnn, 0.007).unwrap();
        assert_eq!((p.avg_size_mb, p.map), (0.245, 0.669));
        let fcos = points("fcos", &FCOS_MAP, &SIZES);
        let p = optimal_point(&fcos, 0.007).unwrap();
        assert_eq!((p.avg_size_mb, p.map), (0.273, 0.685));
    }

    #[test]
    fn airplane_nano_column() {
        let nano = points(
            "nano",
            &[0.669, 0.666, 0.663, 0.657, 0.636],
            &[2.051, 1.428, 1.256, 0.988, 0.874],
        );
        assert_eq!(optimal_point(&nano, 0.007).unwrap().avg_size_mb, 1.256);
    }

    #[test]
    fn zero_epsilon_and_ties() {
        let inc = points("p", &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]);
        assert_eq!(optimal_point(&inc, 0.0).unwrap().avg_size_mb, 3.0);
        let tied = points("p", &[0.5, 0.6, 0.6], &[1.0, 2.0, 1.0]);
        let p = optimal_point(&tied, 0.2).unwrap();
        assert_eq!((p.avg_size_mb, p.map), (1.0, 0.6));
        assert!(optimal_point::<f64>(&[], 0.1).is_err());
        assert!(optimal_point(&inc, 1.0).is_err());
    }

    #[test]
    fn f32_points() {
        let pts: Vec<RatePoint<f32>> = RCNN_MAP
            .iter()
            .zip(SIZES)
            .map(|(&m, s)| RatePoint {
                provider: "rcnn".into(),
                modifier: String::new(),
                avg_size_mb: s as f32,
                map: m as f32,
                ar: 0.0,
            })
            .collect();
        assert_eq!(optimal_point(&pts, 0.007f32).unwrap().avg_size_mb, 0.245f32);
    }

    #[test]
    fn summary_rows_and_table() {
        let runs = vec![
            run("fcos", "jpeg_q10", 0.097, 0.598, 0.799, true),
            run("fcos", "jpeg_q95", 0.332, 0.688, 0.869, true),
            run("rcnn", "jpeg_q95", 0.332, 0.662, 0.806, true),
            run("rcnn", "jpeg_q10", 0.097, 0.0, 0.0, false),
        ];
        let s = summarize(&runs).unwrap();
        assert_eq!(s.failed, 1);
        assert_eq!(s.rows.len(), 3);
        assert_eq!(s.rows[0].modifier, "jpeg_q95");
        assert_eq!(s.rows[2].provider, "rcnn");
        let table = render_table(&s);
        let first = table.lines().nth(1).unwrap();
        assert!(
            first.contains("0.869") && first.contains("0.688") && first.contains("0.332"),
            "{table}"
        );
        assert!(table.contains("1 failed runs omitted"));
        assert!(matches!(summarize(&runs[3..]), Err(Error::NoSuccessfulRuns)));
        let single = summarize(&runs[..1]).unwrap();
        assert_eq!(single.rows.len(), 1);
    }

    #[test]
    fn scatter_shape() {
        let runs = vec![run("fcos", "jpeg_q10", 0.097, 0.598, 0.799, true)];
        let csv = emit_scatter(&runs).unwrap();
        assert_eq!(
            csv,
            "provider,modifier,avg_size_mb,map,ar\nfcos,jpeg_q10,0.097,0.598,0.799\n"
        );
    }

    proptest! {
        #[test]
        fn scatter_round_trip(rows in prop::collection::vec((0.001f64..10.0, 0.0f64..=1.0, 0.0f64..=1.0, 0u8..=100), 1..30)) {
            let runs: Vec<_> = rows
                .iter()
                .enumerate()
                .map(|(i, &(s, m, a, q))| run(if i % 2 == 0 { "a" } else { "b" }, &format!("jpeg_q{q}"), s, m, a, true))
                .collect();
            let parsed = parse_scatter(&emit_scatter(&runs).unwrap()).unwrap();
            prop_assert_eq!(parsed, summarize(&runs).unwrap().rows);
        }

        #[test]
        fn larger_epsilon_never_grows_size(
            pts in prop::collection::vec((0.01f64..5.0, 0.0f64..=1.0), 2..20),
            e1 in 0.0f64..0.5,
            e2 in 0.0f64..0.5,
        ) {
            let points: Vec<RatePoint<f64>> = pts.iter().map(|&(s, m)| RatePoint { provider: "p".into(), modifier: "m".into(), avg_size_mb: s, map: m, ar: 0.0 }).collect();
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let a = optimal_point(&points, lo).unwrap();
            let b = optimal_point(&points, hi).unwrap();
            prop_assert!(b.avg_size_mb <= a.avg_size_mb);
            let z = optimal_point(&points, 0.0).unwrap();
            let best = points.iter().map(|p| p.map).fold(f64::MIN, f64::max);
            prop_assert_eq!(z.map, best);
            prop_assert!(points.iter().filter(|p| p.map == best).all(|p| p.avg_size_mb >= z.avg_size_mb));
        }
    }
}
