//! Navigation metrics: navigation error, success, oracle success and SPL,
//! plus the line-delimited record format shared with external evaluators.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SUCCESS_RADIUS: f64 = 3.0;
pub const DESK_SUCCESS_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    /// Visited positions, start first.
    pub trajectory: Vec<(f64, f64)>,
    pub final_position: (f64, f64),
    pub goal: (f64, f64),
    pub shortest_path_length: f64,
    pub path_length: f64,
    /// False when the step cap ended the rollout.
    pub stopped: bool,
}

impl EpisodeResult {
    /// Fills `final_position` and `path_length` from the trajectory.
    pub fn from_trajectory(
        episode_id: impl Into<String>,
        trajectory: Vec<(f64, f64)>,
        goal: (f64, f64),
        shortest_path_length: f64,
        stopped: bool,
    ) -> Result<Self> {
        let final_position = *trajectory.last().ok_or(Error::EmptyTrajectory)?;
        let path_length = trajectory.windows(2).map(|w| dist(w[0], w[1])).sum();
        Ok(Self { episode_id: episode_id.into(), trajectory, final_position, goal, shortest_path_length, path_length, stopped })
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

pub fn navigation_error(r: &EpisodeResult) -> f64 {
    dist(r.final_position, r.goal)
}

/// Inclusive: an agent exactly `radius` away has succeeded.
pub fn success(r: &EpisodeResult, radius: f64) -> bool {
    navigation_error(r) <= radius
}

pub fn oracle_success(r: &EpisodeResult, radius: f64) -> bool {
    r.trajectory.iter().chain(std::iter::once(&r.final_position)).any(|&p| dist(p, r.goal) <= radius)
}

/// `S * L / max(P, L)`.
pub fn spl_term(r: &EpisodeResult, radius: f64) -> Result<f64> {
    let l = r.shortest_path_length;
    if !(l > 0.0) {
        return Err(Error::NonPositiveShortestPath(l));
    }
    if !success(r, radius) {
        return Ok(0.0);
    }
    Ok(l / r.path_length.max(l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub episode_count: usize,
    pub ne_mean: f64,
    pub os: f64,
    pub sr: f64,
    pub spl: f64,
}

/// One line of a metrics file for a single episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub episode_id: String,
    pub ne: f64,
    pub success: bool,
    pub oracle_success: bool,
    pub spl_term: f64,
    pub path_length: f64,
}

impl EpisodeRecord {
    pub fn from_result(r: &EpisodeResult, radius: f64) -> Result<Self> {
        Ok(Self {
            episode_id: r.episode_id.clone(),
            ne: navigation_error(r),
            success: success(r, radius),
            oracle_success: oracle_success(r, radius),
            spl_term: spl_term(r, radius)?,
            path_length: r.path_length,
        })
    }
}

/// Trailing summary line of a metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub summary: MetricSummary,
    pub radius: f64,
}

pub fn aggregate(results: &[EpisodeResult], radius: f64) -> Result<MetricSummary> {
    let records = results.iter().map(|r| EpisodeRecord::from_result(r, radius)).collect::<Result<Vec<_>>>()?;
    summarize_records(&records)
}

pub fn summarize_records(records: &[EpisodeRecord]) -> Result<MetricSummary> {
    if records.is_empty() {
        return Err(Error::EmptyEpisodeSet);
    }
    let n = records.len() as f64;
    let frac = |f: fn(&EpisodeRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    Ok(MetricSummary {
        episode_count: records.len(),
        ne_mean: frac(|r| r.ne),
        os: frac(|r| r.oracle_success as u8 as f64),
        sr: frac(|r| r.success as u8 as f64),
        spl: frac(|r| r.spl_term),
    })
}

pub fn write_metrics(path: &Path, records: &[EpisodeRecord], radius: f64) -> Result<MetricSummary> {
    let summary = summarize_records(records)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut w, &SummaryRecord { summary, radius })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsFile {
    pub records: Vec<EpisodeRecord>,
    pub summary: MetricSummary,
    pub radius: f64,
}

/// Parses and checks a metrics file: every episode line well formed and
/// internally consistent, ids unique, exactly one summary line at the end
/// agreeing with the episode lines.
pub fn read_metrics(path: &Path) -> Result<MetricsFile> {
    let text = fs::read_to_string(path)?;
    let malformed = |line: usize, reason: String| Error::MalformedRecord { path: path.to_path_buf(), line, reason };
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty()).collect();
    let Some((&(last_no, last), body)) = lines.split_last() else {
        return Err(Error::EmptyEpisodeSet);
    };
    let trailer: SummaryRecord =
        serde_json::from_str(last).map_err(|e| malformed(last_no, format!("expected summary record: {e}")))?;

    let mut records = Vec::with_capacity(body.len());
    let mut seen = BTreeSet::new();
    for &(no, line) in body {
        let r: EpisodeRecord = serde_json::from_str(line).map_err(|e| malformed(no, e.to_string()))?;
        let finite = r.ne.is_finite() && r.spl_term.is_finite() && r.path_length.is_finite();
        if !finite || r.ne < 0.0 || r.path_length < 0.0 || !(0.0..=1.0).contains(&r.spl_term) {
            return Err(malformed(no, "value out of range".into()));
        }
        if r.spl_term > r.success as u8 as f64 || r.success && !r.oracle_success {
            return Err(malformed(no, "violates spl <= success <= oracle_success".into()));
        }
        if r.success != (r.ne <= trailer.radius) {
            return Err(malformed(no, format!("success flag disagrees with ne {} at radius {}", r.ne, trailer.radius)));
        }
        if !seen.insert(r.episode_id.clone()) {
            return Err(malformed(no, format!("duplicate episode id {}", r.episode_id)));
        }
        records.push(r);
    }
    let recomputed = summarize_records(&records)?;
    let s = trailer.summary;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    if s.episode_count != recomputed.episode_count
        || !close(s.ne_mean, recomputed.ne_mean)
        || !close(s.os, recomputed.os)
        || !close(s.sr, recomputed.sr)
        || !close(s.spl, recomputed.spl)
    {
        return Err(malformed(last_no, format!("summary {s:?} disagrees with episode records {recomputed:?}")));
    }
    Ok(MetricsFile { records, summary: s, radius: trailer.radius })
}

/// Fixed-width table with one row per labeled summary.
pub fn format_table(rows: &[(String, MetricSummary)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(7);
    let mut out = format!("{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>4}\n", "Setting", "NE", "OS", "SR", "SPL", "N");
    for (label, s) in rows {
        out += &format!(
            "{label:<width$}  {:>6.3}  {:>6.3}  {:>6.3}  {:>6.3}  {:>4}\n",
            s.ne_mean, s.os, s.sr, s.spl, s.episode_count
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn res(traj: Vec<(f64, f64)>, goal: (f64, f64), l: f64) -> EpisodeResult {
        EpisodeResult::from_trajectory("e", traj, goal, l, true).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(navigation_error(&res(vec![(0.0, 0.0)], (0.0, 0.0), 1.0)), 0.0);
        let r = res(vec![(3.0, 4.0)], (0.0, 0.0), 1.0);
        assert_eq!(navigation_error(&r), 5.0);
        let swapped = res(vec![(0.0, 0.0)], (3.0, 4.0), 1.0);
        assert_eq!(navigation_error(&swapped), 5.0);

        for (ne, want) in [(2.9, true), (3.0, true), (3.1, false)] {
            assert_eq!(success(&res(vec![(ne, 0.0)], (0.0, 0.0), 1.0), 3.0), want);
        }

        let passing = res(vec![(5.0, 0.0), (1.0, 0.0), (5.0, 0.0)], (0.0, 0.0), 1.0);
        assert!(oracle_success(&passing, 1.0));
        assert!(!success(&passing, 1.0));

        let straight = res(vec![(0.0, 0.0), (2.0, 0.0)], (2.0, 0.0), 2.0);
        assert_eq!(spl_term(&straight, 1.0).unwrap(), 1.0);
        let doubled = res(vec![(0.0, 0.0), (2.0, 0.0), (0.0, 0.0), (2.0, 0.0)], (2.0, 0.0), 2.0);
        assert!((spl_term(&doubled, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let half = res(vec![(0.0, 0.0), (0.0, 2.0), (0.0, 0.0)], (0.0, 0.0), 2.0);
        assert_eq!(spl_term(&half, 1.0).unwrap(), 0.5);
        let fail = res(vec![(0.0, 0.0), (9.0, 0.0)], (0.0, 0.0), 2.0);
        assert_eq!(spl_term(&fail, 1.0).unwrap(), 0.0);
        assert!(matches!(spl_term(&res(vec![(0.0, 0.0)], (0.0, 0.0), 0.0), 1.0), Err(Error::NonPositiveShortestPath(_))));
        assert!(matches!(aggregate(&[], 1.0), Err(Error::EmptyEpisodeSet)));
    }

    #[test]
    fn one_in_four() {
        let mut rs = vec![res(vec![(0.0, 0.0), (5.0, 0.0)], (5.0, 0.0), 5.0)];
        rs.extend((0..3).map(|_| res(vec![(0.0, 0.0)], (5.0, 0.0), 5.0)));
        let s = aggregate(&rs, 1.0).unwrap();
        assert_eq!(s.sr, 0.25);
        let perfect = aggregate(&rs[..1], 1.0).unwrap();
        assert_eq!((perfect.sr, perfect.os, perfect.spl, perfect.ne_mean), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn file_round_trip_and_tamper() {
        let rs = vec![
            res(vec![(0.0, 0.0), (5.0, 0.0)], (5.0, 0.0), 5.0),
            EpisodeResult { episode_id: "f".into(), ..res(vec![(0.0, 0.0), (1.0, 0.0)], (5.0, 0.0), 5.0) },
        ];
        let recs: Vec<_> = rs.iter().map(|r| EpisodeRecord::from_result(r, 1.0).unwrap()).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let s = write_metrics(&p, &recs, 1.0).unwrap();
        let back = read_metrics(&p).unwrap();
        assert_eq!(back.records, recs);
        assert_eq!(back.summary, s);
        let text = fs::read_to_string(&p).unwrap().replace("\"success\":true", "\"success\":false");
        fs::write(&p, text).unwrap();
        assert!(matches!(read_metrics(&p), Err(Error::MalformedRecord { .. })));
    }

    fn arb_result() -> impl Strategy<Value = EpisodeResult> {
        (
            proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..12),
            (-10.0f64..10.0, -10.0f64..10.0),
            0.1f64..20.0,
        )
            .prop_map(|(t, g, l)| EpisodeResult::from_trajectory("p", t, g, l, true).unwrap())
    }

    proptest! {
        #[test]
        fn ordering_and_translation(rs in proptest::collection::vec(arb_result(), 1..20), radius in 0.1f64..5.0, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
            for r in &rs {
                let (s, o, p) = (success(r, radius), oracle_success(r, radius), spl_term(r, radius).unwrap());
                prop_assert!(p <= s as u8 as f64 && s <= o);
            }
            let a = aggregate(&rs, radius).unwrap();
            prop_assert!(a.spl <= a.sr && a.sr <= a.os);
            let moved: Vec<_> = rs.iter().map(|r| {
                let t = r.trajectory.iter().map(|&(x, y)| (x + dx, y + dy)).collect();
                EpisodeResult::from_trajectory("p", t, (r.goal.0 + dx, r.goal.1 + dy), r.shortest_path_length, true).unwrap()
            }).collect();
            let b = aggregate(&moved, radius).unwrap();
            prop_assert!((a.ne_mean - b.ne_mean).abs() < 1e-9);
            prop_assert!((a.spl - b.spl).abs() < 1e-9);
            let mut rev = rs.clone();
            rev.reverse();
            let c = aggregate(&rev, radius).unwrap();
            prop_assert!((a.ne_mean - c.ne_mean).abs() < 1e-12 && a.sr == c.sr && a.os == c.os);
        }
    }
}
