//! Grid encoder: turns one frame into an N x N matrix of textual cell summaries.
//!
//! Each cell reports the mean valid depth, the majority semantic label and a
//! palette color name for the mean RGB, serialized as
//! `[i,j]: depth=d, semantic=s, color=c`.

pub mod color;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, LabelTable};

pub use color::{color_name, hsv_name, rgb_to_hsv, Hsv, PALETTE};

pub const UNKNOWN: &str = "unknown";

/// Half-open pixel rectangle `[row0, row1) x [col0, col1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

impl Rect {
    pub fn height(&self) -> usize {
        self.row1 - self.row0
    }

    pub fn width(&self) -> usize {
        self.col1 - self.col0
    }

    pub fn area(&self) -> usize {
        self.height() * self.width()
    }

    fn pixels(&self, frame_width: usize) -> impl Iterator<Item = usize> + '_ {
        (self.row0..self.row1)
            .flat_map(move |r| (self.col0..self.col1).map(move |c| r * frame_width + c))
    }
}

/// Floor-boundary partition: cell `i` spans `[floor(i*H/n), floor((i+1)*H/n))`.
pub fn partition_grid(height: usize, width: usize, n: usize) -> Result<Vec<Vec<Rect>>> {
    if n == 0 || height < n || width < n {
        return Err(Error::DimensionTooSmall { height, width, n });
    }
    let rows = boundaries(height, n);
    let cols = boundaries(width, n);
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| Rect { row0: rows[i], row1: rows[i + 1], col0: cols[j], col1: cols[j + 1] })
                .collect()
        })
        .collect())
}

fn boundaries(len: usize, n: usize) -> Vec<usize> {
    (0..=n).map(|i| i * len / n).collect()
}

/// Mean of the valid (finite, positive) depths in `rect`, rendered with one decimal.
pub fn cell_depth(depth: &[f32], frame_width: usize, rect: Rect) -> String {
    let (mut sum, mut n) = (0.0f64, 0usize);
    for k in rect.pixels(frame_width) {
        let d = depth[k];
        if d.is_finite() && d > 0.0 {
            sum += d as f64;
            n += 1;
        }
    }
    if n == 0 {
        UNKNOWN.to_string()
    } else {
        format_tenths(sum / n as f64)
    }
}

/// Formats a non-negative value to one decimal place, rounding half away from zero.
///
/// The value is first snapped to micrometers so that single-precision storage
/// noise (e.g. a stored 2.05 reading back as 2.0499999) does not flip the
/// rounding direction.
pub fn format_tenths(v: f64) -> String {
    let micro = (v * 1e6).round() as i64;
    let tenths = if micro >= 0 { (micro + 50_000) / 100_000 } else { (micro - 50_000) / 100_000 };
    let sign = if tenths < 0 { "-" } else { "" };
    format!("{sign}{}.{}", tenths.abs() / 10, tenths.abs() % 10)
}

/// Name of the label covering the most pixels; ties go to the smallest id.
pub fn cell_semantic(segmentation: &[u16], frame_width: usize, rect: Rect, labels: &LabelTable) -> String {
    let mut counts: BTreeMap<u16, usize> = BTreeMap::new();
    for k in rect.pixels(frame_width) {
        *counts.entry(segmentation[k]).or_default() += 1;
    }
    let mut best: Option<(u16, usize)> = None;
    // BTreeMap iterates ids ascending, so a strict comparison keeps the smallest id on ties
    for (id, c) in counts {
        if best.map_or(true, |(_, bc)| c > bc) {
            best = Some((id, c));
        }
    }
    best.and_then(|(id, _)| labels.get(&id).cloned())
        .unwrap_or_else(|| UNKNOWN.to_string())
}

/// Palette name of the per-channel mean color of `rect`.
pub fn cell_color(rgb: &[[u8; 3]], frame_width: usize, rect: Rect) -> &'static str {
    let mut sum = [0u64; 3];
    for k in rect.pixels(frame_width) {
        for c in 0..3 {
            sum[c] += rgb[k][c] as u64;
        }
    }
    let n = rect.area().max(1) as f64;
    color_name([sum[0] as f64 / n, sum[1] as f64 / n, sum[2] as f64 / n])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSummary {
    /// 1-based row.
    pub row: usize,
    /// 1-based column.
    pub col: usize,
    pub depth_text: String,
    pub semantic: String,
    pub color: String,
}

pub fn serialize_cell(c: &CellSummary, use_depth: bool) -> String {
    if use_depth {
        format!(
            "[{},{}]: depth={}, semantic={}, color={}",
            c.row, c.col, c.depth_text, c.semantic, c.color
        )
    } else {
        format!("[{},{}]: semantic={}, color={}", c.row, c.col, c.semantic, c.color)
    }
}

/// An encoded frame. `timestep` is 0 for the current frame and negative for the past.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredObservation {
    pub timestep: i64,
    pub grid_n: usize,
    pub use_depth: bool,
    /// Row-major, `grid_n * grid_n` entries.
    pub cells: Vec<CellSummary>,
}

impl StructuredObservation {
    pub fn cell(&self, row: usize, col: usize) -> &CellSummary {
        &self.cells[(row - 1) * self.grid_n + (col - 1)]
    }

    pub fn cell_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.cells.iter().map(|c| serialize_cell(c, self.use_depth))
    }

    /// One cell per line in row-major order, LF-terminated.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for line in self.cell_lines() {
            let _ = writeln!(s, "{line}");
        }
        s
    }
}

pub fn encode_frame(frame: &Frame, n: usize, timestep: i64, use_depth: bool) -> Result<StructuredObservation> {
    let grid = partition_grid(frame.height(), frame.width(), n)?;
    let w = frame.width();
    let mut cells = Vec::with_capacity(n * n);
    for (i, row) in grid.iter().enumerate() {
        for (j, &rect) in row.iter().enumerate() {
            cells.push(CellSummary {
                row: i + 1,
                col: j + 1,
                depth_text: cell_depth(frame.depth(), w, rect),
                semantic: cell_semantic(frame.segmentation(), w, rect, frame.label_table()),
                color: cell_color(frame.rgb(), w, rect).to_string(),
            });
        }
    }
    Ok(StructuredObservation { timestep, grid_n: n, use_depth, cells })
}
