//! Fixed HSV lookup table mapping a mean cell color to one of a small set of names.

/// Every name the lookup table can produce.
pub const PALETTE: [&str; 13] = [
    "black",
    "white",
    "light_gray",
    "gray",
    "dark_gray",
    "red",
    "orange",
    "yellow",
    "green",
    "cyan",
    "blue",
    "purple",
    "pink",
];

/// Hue in degrees [0, 360), saturation and value in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Hexcone conversion from 8-bit (or mean) RGB channels.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> Hsv {
    let (r, g, b) = (r / 255.0, g / 255.0, b / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    Hsv { h: h.rem_euclid(360.0), s, v }
}

pub fn hsv_name(c: Hsv) -> &'static str {
    if c.v < 0.20 {
        return "black";
    }
    if c.s < 0.15 {
        return match c.v {
            v if v >= 0.85 => "white",
            v if v >= 0.60 => "light_gray",
            v if v >= 0.35 => "gray",
            _ => "dark_gray",
        };
    }
    match c.h {
        h if !(15.0..345.0).contains(&h) => "red",
        h if h < 45.0 => "orange",
        h if h < 70.0 => "yellow",
        h if h < 160.0 => "green",
        h if h < 200.0 => "cyan",
        h if h < 260.0 => "blue",
        h if h < 290.0 => "purple",
        _ => "pink",
    }
}

pub fn color_name(rgb: [f64; 3]) -> &'static str {
    hsv_name(rgb_to_hsv(rgb[0], rgb[1], rgb[2]))
}
