//! Turns an unwrapped cloud into a grayscale image: samples are binned on a
//! square pixel grid, per-pixel heights are averaged, interior holes are
//! filled by neighbor diffusion, and heights map to intensity with low z
//! rendered bright. Ridge crests (high z) therefore come out dark on a white
//! background.

use crate::math;
use crate::unwrap::UnwrappedCloud;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Pixel budget guard against absurd pitches.
const MAX_PIXELS: usize = 1 << 28;

/// Diffusion fill stops when assignments settle below this fraction of the
/// height range, or after `FILL_MAX_ITERS` sweeps for pathological holes.
const FILL_REL_TOL: f64 = 1e-9;
const FILL_MAX_ITERS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    /// round(2.5) = 3, round(-2.5) = -3. The default.
    HalfAwayFromZero,
    /// round(2.5) = 2, round(3.5) = 4.
    HalfToEven,
}

impl Rounding {
    fn apply(self, v: f64) -> f64 {
        match self {
            Rounding::HalfAwayFromZero => math::round(v),
            Rounding::HalfToEven => math::round_ties_even(v),
        }
    }
}

/// Rasterization knobs. `pitch: None` derives the pixel size from the data:
/// the median x' gap between laterally adjacent valid samples.
#[derive(Clone, Debug)]
pub struct RasterConfig {
    pub pitch: Option<f64>,
    pub rounding: Rounding,
    pub background: u8,
    pub fill_holes: bool,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            pitch: None,
            rounding: Rounding::HalfAwayFromZero,
            background: 255,
            fill_holes: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RasterError {
    /// No valid samples to rasterize.
    EmptyCloud,
    NonPositivePitch,
    /// Auto pitch needs at least one laterally adjacent pair of valid cells.
    NoAdjacentSamples,
    ImageTooLarge { width: usize, height: usize },
}

impl fmt::Display for RasterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RasterError::EmptyCloud => write!(f, "cloud has no valid samples"),
            RasterError::NonPositivePitch => write!(f, "pitch must be positive and finite"),
            RasterError::NoAdjacentSamples => {
                write!(f, "cannot derive a pitch: no adjacent valid samples")
            }
            RasterError::ImageTooLarge { width, height } => {
                write!(f, "{width}x{height} image exceeds the pixel budget")
            }
        }
    }
}

impl core::error::Error for RasterError {}

/// 8-bit grayscale raster, row-major, top row first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return None;
        }
        Some(GrayImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Rasterization result: the image plus the pitch actually used and whether
/// height normalization degenerated to a flat gray.
#[derive(Clone, Debug)]
pub struct Raster {
    pub image: GrayImage,
    pub pitch: f64,
    pub degenerate_range: bool,
}

/// Maps heights to intensities: I(z) = round(255 * (z_max - z) / range), so
/// the highest point renders black and the lowest white. A zero or non-finite
/// range cannot be scaled; every pixel becomes mid-gray 128 and the flag is
/// set so callers can warn.
pub fn normalize_heights(heights: &[f64], rounding: Rounding) -> (Vec<u8>, bool) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &z in heights {
        lo = lo.min(z);
        hi = hi.max(z);
    }
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return (vec![128; heights.len()], true);
    }
    let out = heights
        .iter()
        .map(|&z| {
            let v = rounding.apply(255.0 * (hi - z) / range);
            v.clamp(0.0, 255.0) as u8
        })
        .collect();
    (out, false)
}

/// Median x' gap between laterally adjacent valid cells. Gaps that jump a
/// masked run are excluded so occlusions do not inflate the pixel size.
fn median_adjacent_step(cloud: &UnwrappedCloud) -> Result<f64, RasterError> {
    let mut steps = Vec::new();
    for r in 0..cloud.height() {
        for c in 1..cloud.width() {
            if cloud.is_valid(r, c - 1) && cloud.is_valid(r, c) {
                steps.push(cloud.point(r, c).xp - cloud.point(r, c - 1).xp);
            }
        }
    }
    if steps.is_empty() {
        return Err(RasterError::NoAdjacentSamples);
    }
    steps.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = steps.len();
    Ok(if n % 2 == 1 { steps[n / 2] } else { (steps[n / 2 - 1] + steps[n / 2]) / 2.0 })
}

/// Convex hull of integer pixel coordinates (monotone chain). Returns the
/// hull in counterclockwise order; collinear inputs collapse to a segment.
fn convex_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Per-row [min_col, max_col] spans covered by the hull, via scanline
/// intersection with every hull edge.
fn hull_row_spans(hull: &[(i64, i64)], height: usize) -> Vec<Option<(usize, usize)>> {
    let mut spans: Vec<Option<(f64, f64)>> = vec![None; height];
    let mut note = |row: i64, x: f64| {
        if row < 0 || row as usize >= height {
            return;
        }
        let e = &mut spans[row as usize];
        *e = Some(match *e {
            None => (x, x),
            Some((lo, hi)) => (lo.min(x), hi.max(x)),
        });
    };
    if hull.len() == 1 {
        note(hull[0].1, hull[0].0 as f64);
    } else {
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            if a.1 == b.1 {
                note(a.1, a.0 as f64);
                note(b.1, b.0 as f64);
                continue;
            }
            for y in a.1.min(b.1)..=a.1.max(b.1) {
                let t = (y - a.1) as f64 / (b.1 - a.1) as f64;
                note(y, a.0 as f64 + t * (b.0 - a.0) as f64);
            }
        }
    }
    spans
        .into_iter()
        .map(|s| {
            s.map(|(lo, hi)| {
                let l = math::ceil(lo - 1e-9).max(0.0) as usize;
                let h = math::floor(hi + 1e-9).max(0.0) as usize;
                (l, h)
            })
        })
        .collect()
}

/// Fills interior holes (unsampled pixels inside the convex support) by
/// repeated 4-neighbor averaging until values settle. Pixels outside the
/// support are left untouched. Returns the number of pixels filled.
fn diffuse_fill(z: &mut [f64], width: usize, spans: &[Option<(usize, usize)>]) -> usize {
    let mut holes = Vec::new();
    for (row, span) in spans.iter().enumerate() {
        if let Some((lo, hi)) = span {
            for col in *lo..=*hi {
                if z[row * width + col].is_nan() {
                    holes.push(row * width + col);
                }
            }
        }
    }
    if holes.is_empty() {
        return 0;
    }
    let height = spans.len();
    let mut scale: f64 = 0.0;
    for &v in z.iter() {
        if v.is_finite() {
            scale = scale.max(math::fabs(v));
        }
    }
    let tol = FILL_REL_TOL * (1.0 + scale);
    for _ in 0..FILL_MAX_ITERS {
        let snapshot = z.to_vec();
        let mut worst: f64 = 0.0;
        let mut unassigned = 0usize;
        for &i in &holes {
            let (row, col) = (i / width, i % width);
            let mut sum = 0.0;
            let mut count = 0;
            let mut push = |v: f64| {
                if v.is_finite() {
                    sum += v;
                    count += 1;
                }
            };
            if col > 0 {
                push(snapshot[i - 1]);
            }
            if col + 1 < width {
                push(snapshot[i + 1]);
            }
            if row > 0 {
                push(snapshot[i - width]);
            }
            if row + 1 < height {
                push(snapshot[i + width]);
            }
            if count == 0 {
                unassigned += 1;
                continue;
            }
            let next = sum / count as f64;
            let old = snapshot[i];
            worst = worst.max(if old.is_finite() { math::fabs(next - old) } else { f64::INFINITY });
            z[i] = next;
        }
        if unassigned == 0 && worst <= tol {
            break;
        }
    }
    holes.len()
}

/// Bins the cloud onto a square pixel grid and produces the image.
///
/// Pixel size is `config.pitch` or the median adjacent x' step. Pixel (0, 0)
/// anchors at (min x', min y'); a sample lands in column
/// floor((x' - min) / pitch), clamped to the last column (and likewise for
/// rows), and a pixel's height is the mean of its samples. Holes inside the
/// convex support are diffusion-filled when `fill_holes` is set, heights are
/// normalized to intensities, and unsupported pixels take `background`.
pub fn rasterize(cloud: &UnwrappedCloud, config: &RasterConfig) -> Result<Raster, RasterError> {
    let pitch = match config.pitch {
        Some(p) => {
            if !(p > 0.0) || !p.is_finite() {
                return Err(RasterError::NonPositivePitch);
            }
            p
        }
        None => median_adjacent_step(cloud)?,
    };
    if !(pitch > 0.0) || !pitch.is_finite() {
        return Err(RasterError::NonPositivePitch);
    }

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    let mut any = false;
    for r in 0..cloud.height() {
        for c in 0..cloud.width() {
            if cloud.is_valid(r, c) {
                let p = cloud.point(r, c);
                x_lo = x_lo.min(p.xp);
                x_hi = x_hi.max(p.xp);
                y_lo = y_lo.min(p.yp);
                y_hi = y_hi.max(p.yp);
                any = true;
            }
        }
    }
    if !any {
        return Err(RasterError::EmptyCloud);
    }

    let width = (math::floor((x_hi - x_lo) / pitch) as usize).saturating_add(1);
    let height = (math::floor((y_hi - y_lo) / pitch) as usize).saturating_add(1);
    if width.saturating_mul(height) > MAX_PIXELS {
        return Err(RasterError::ImageTooLarge { width, height });
    }

    let mut sum = vec![0.0f64; width * height];
    let mut count = vec![0u32; width * height];
    let mut occupied = Vec::new();
    for r in 0..cloud.height() {
        for c in 0..cloud.width() {
            if !cloud.is_valid(r, c) {
                continue;
            }
            let p = cloud.point(r, c);
            let col = (math::floor((p.xp - x_lo) / pitch) as usize).min(width - 1);
            let row = (math::floor((p.yp - y_lo) / pitch) as usize).min(height - 1);
            sum[row * width + col] += p.z;
            count[row * width + col] += 1;
            occupied.push((col as i64, row as i64));
        }
    }

    let mut z = vec![f64::NAN; width * height];
    for i in 0..z.len() {
        if count[i] > 0 {
            z[i] = sum[i] / count[i] as f64;
        }
    }

    if config.fill_holes {
        let hull = convex_hull(occupied);
        let spans = hull_row_spans(&hull, height);
        diffuse_fill(&mut z, width, &spans);
    }

    let filled: Vec<f64> = z.iter().copied().filter(|v| v.is_finite()).collect();
    let (levels, degenerate) = normalize_heights(&filled, config.rounding);
    let mut pixels = vec![config.background; width * height];
    let mut k = 0;
    for (i, v) in z.iter().enumerate() {
        if v.is_finite() {
            pixels[i] = levels[k];
            k += 1;
        }
    }

    let image = GrayImage::new(width, height, pixels).expect("dimensions already validated");
    Ok(Raster { image, pitch, degenerate_range: degenerate })
}

/// Binary PGM (P5) encoding: `P5\n{width} {height}\n255\n` then one byte per
/// pixel, row-major from the top row.
pub fn pgm_bytes(image: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(image.pixels().len() + 32);
    out.extend_from_slice(b"P5\n");
    push_decimal(&mut out, image.width());
    out.push(b' ');
    push_decimal(&mut out, image.height());
    out.extend_from_slice(b"\n255\n");
    out.extend_from_slice(image.pixels());
    out
}

fn push_decimal(out: &mut Vec<u8>, mut v: usize) {
    let mut digits = [0u8; 20];
    let mut i = digits.len();
    loop {
        i -= 1;
        digits[i] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    out.extend_from_slice(&digits[i..]);
}
