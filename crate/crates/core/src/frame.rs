//! RGB-D + segmentation frames and their on-disk directory layout.
//!
//! A frame directory holds `rgb.ppm` (binary P6), `depth.pfm` (single channel,
//! little-endian), `seg.pgm` (binary P5 label ids) and `labels.tsv`
//! (`id<TAB>name` per line).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const RGB_FILE: &str = "rgb.ppm";
pub const DEPTH_FILE: &str = "depth.pfm";
pub const SEG_FILE: &str = "seg.pgm";
pub const LABELS_FILE: &str = "labels.tsv";

pub type LabelTable = BTreeMap<u16, String>;

/// One timestep of RGB, depth (meters, 0 or NaN = invalid) and segmentation ids, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    rgb: Vec<[u8; 3]>,
    depth: Vec<f32>,
    segmentation: Vec<u16>,
    label_table: LabelTable,
}

impl Frame {
    pub fn new(
        width: usize,
        height: usize,
        rgb: Vec<[u8; 3]>,
        depth: Vec<f32>,
        segmentation: Vec<u16>,
        label_table: LabelTable,
    ) -> Result<Self> {
        let n = width * height;
        if width == 0 || height == 0 {
            return Err(Error::FrameShape("zero-sized frame".into()));
        }
        for (name, len) in [("rgb", rgb.len()), ("depth", depth.len()), ("segmentation", segmentation.len())] {
            if len != n {
                return Err(Error::FrameShape(format!(
                    "{name} has {len} pixels, expected {width}x{height}={n}"
                )));
            }
        }
        for id in &segmentation {
            if !label_table.contains_key(id) {
                return Err(Error::UnknownLabel(*id));
            }
        }
        Ok(Self { width, height, rgb, depth, segmentation, label_table })
    }

    /// A frame with a single label, color and depth everywhere.
    pub fn uniform(width: usize, height: usize, rgb: [u8; 3], depth: f32, label: (u16, &str)) -> Self {
        let n = width * height;
        let mut table = LabelTable::new();
        table.insert(label.0, label.1.to_string());
        Self {
            width,
            height,
            rgb: vec![rgb; n],
            depth: vec![depth; n],
            segmentation: vec![label.0; n],
            label_table: table,
        }
    }

    /// Left-right reflection of every layer.
    pub fn mirrored(&self) -> Self {
        fn flip<T: Copy>(v: &[T], w: usize) -> Vec<T> {
            v.chunks(w).flat_map(|row| row.iter().rev().copied()).collect()
        }
        Self {
            width: self.width,
            height: self.height,
            rgb: flip(&self.rgb, self.width),
            depth: flip(&self.depth, self.width),
            segmentation: flip(&self.segmentation, self.width),
            label_table: self.label_table.clone(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgb(&self) -> &[[u8; 3]] {
        &self.rgb
    }

    pub fn depth(&self) -> &[f32] {
        &self.depth
    }

    pub fn segmentation(&self) -> &[u16] {
        &self.segmentation
    }

    pub fn label_table(&self) -> &LabelTable {
        &self.label_table
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let labels_path = dir.join(LABELS_FILE);
        if !labels_path.is_file() {
            return Err(Error::MissingFile(LABELS_FILE.into()));
        }
        let label_table = read_labels(&labels_path)?;
        let (w, h, rgb) = read_ppm(&require(dir, RGB_FILE)?)?;
        let (dw, dh, depth) = read_pfm(&require(dir, DEPTH_FILE)?)?;
        let (sw, sh, seg) = read_pgm(&require(dir, SEG_FILE)?)?;
        if (dw, dh) != (w, h) || (sw, sh) != (w, h) {
            return Err(Error::FrameShape(format!(
                "rgb {w}x{h}, depth {dw}x{dh}, segmentation {sw}x{sh}"
            )));
        }
        Self::new(w, h, rgb, depth, seg, label_table)
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_ppm(&dir.join(RGB_FILE), self.width, self.height, &self.rgb)?;
        write_pfm(&dir.join(DEPTH_FILE), self.width, self.height, &self.depth)?;
        write_pgm(&dir.join(SEG_FILE), self.width, self.height, &self.segmentation)?;
        write_labels(&dir.join(LABELS_FILE), &self.label_table)?;
        Ok(())
    }
}

fn require(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::MissingFile(name.into()))
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

/// Splits a netpbm-style header into `count` tokens, skipping `#` comments.
/// Returns the tokens and the offset of the first payload byte.
fn header_tokens(path: &Path, bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(format_err(path, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the payload
    if i >= bytes.len() {
        return Err(format_err(path, "missing payload"));
    }
    Ok((tokens, i + 1))
}

fn parse_dim(path: &Path, s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format_err(path, format!("bad dimension {s:?}"))),
    }
}

pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let bytes = fs::read(path)?;
    let (t, off) = header_tokens(path, &bytes, 4)?;
    if t[0] != "P6" {
        return Err(format_err(path, "expected binary P6"));
    }
    let (w, h) = (parse_dim(path, &t[1])?, parse_dim(path, &t[2])?);
    if t[3] != "255" {
        return Err(format_err(path, "only maxval 255 is supported"));
    }
    let data = &bytes[off..];
    if data.len() < w * h * 3 {
        return Err(format_err(path, "truncated pixel data"));
    }
    let px = data[..w * h * 3].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok((w, h, px))
}

pub fn write_ppm(path: &Path, w: usize, h: usize, px: &[[u8; 3]]) -> Result<()> {
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(px.len() * 3);
    for p in px {
        out.extend_from_slice(p);
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = fs::read(path)?;
    let (t, off) = header_tokens(path, &bytes, 4)?;
    if t[0] != "P5" {
        return Err(format_err(path, "expected binary P5"));
    }
    let (w, h) = (parse_dim(path, &t[1])?, parse_dim(path, &t[2])?);
    let maxval: u32 = t[3].parse().map_err(|_| format_err(path, "bad maxval"))?;
    let data = &bytes[off..];
    let n = w * h;
    let ids = match maxval {
        1..=255 => {
            if data.len() < n {
                return Err(format_err(path, "truncated pixel data"));
            }
            data[..n].iter().map(|&b| b as u16).collect()
        }
        256..=65535 => {
            if data.len() < 2 * n {
                return Err(format_err(path, "truncated pixel data"));
            }
            data[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        }
        _ => return Err(format_err(path, "bad maxval")),
    };
    Ok((w, h, ids))
}

pub fn write_pgm(path: &Path, w: usize, h: usize, ids: &[u16]) -> Result<()> {
    let wide = ids.iter().any(|&v| v > 255);
    let maxval = if wide { 65535 } else { 255 };
    let mut out = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
    for &v in ids {
        if wide {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a grayscale PFM. Rows are stored bottom-to-top; the result is top-to-bottom.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path)?;
    let (t, off) = header_tokens(path, &bytes, 4)?;
    if t[0] != "Pf" {
        return Err(format_err(path, "expected single-channel Pf"));
    }
    let (w, h) = (parse_dim(path, &t[1])?, parse_dim(path, &t[2])?);
    let scale: f32 = t[3].parse().map_err(|_| format_err(path, "bad scale"))?;
    let little = scale < 0.0;
    let data = &bytes[off..];
    if data.len() < w * h * 4 {
        return Err(format_err(path, "truncated pixel data"));
    }
    let mut out = vec![0.0f32; w * h];
    for (k, c) in data[..w * h * 4].chunks_exact(4).enumerate() {
        let b = [c[0], c[1], c[2], c[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (file_row, col) = (k / w, k % w);
        out[(h - 1 - file_row) * w + col] = v;
    }
    Ok((w, h, out))
}

pub fn write_pfm(path: &Path, w: usize, h: usize, depth: &[f32]) -> Result<()> {
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(depth.len() * 4);
    for row in (0..h).rev() {
        for v in &depth[row * w..(row + 1) * w] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<LabelTable> {
    let text = fs::read_to_string(path)?;
    let mut table = LabelTable::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: i + 1,
            reason: reason.into(),
        };
        let (id, name) = line.split_once('\t').ok_or_else(|| bad("expected id<TAB>name"))?;
        let id: u16 = id.trim().parse().map_err(|_| bad("label id is not an integer"))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(bad("empty label name"));
        }
        table.insert(id, name.to_string());
    }
    Ok(table)
}

pub fn write_labels(path: &Path, table: &LabelTable) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for (id, name) in table {
        writeln!(f, "{id}\t{name}")?;
    }
    Ok(())
}
