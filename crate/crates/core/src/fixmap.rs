//! Dense saliency maps from sparse gaze points: each point contributes a
//! truncated Gaussian kernel, per-point splats are summed pixel-wise, and the
//! summed map is normalized to unit mass.
//!
//! Kernel mass falling outside the image is clipped without per-point
//! renormalization; only the final summed map is normalized. All arithmetic
//! is double precision and accumulation follows input order, so identical
//! inputs produce bit-identical maps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::gaze::GazeStream;

/// Default kernel width: ~2 degrees of visual angle at 640x480 desktop viewing.
pub const DEFAULT_SIGMA_PX: f64 = 25.0;

#[derive(Debug, Error, PartialEq)]
pub enum FixmapError {
    #[error("point ({x}, {y}) outside {width}x{height} image")]
    PointOutOfBounds {
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("no points to build a map from")]
    NoPoints,
    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),
    #[error("map CSV malformed: {0}")]
    BadCsv(String),
}

/// Gaussian splat parameters: standard deviation and truncation half-width,
/// both in pixels. The default half-width is `ceil(3 * sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    sigma_px: f64,
    truncate_radius_px: u32,
}

impl KernelParams {
    pub fn new(sigma_px: f64) -> Result<Self, FixmapError> {
        if !sigma_px.is_finite() || sigma_px <= 0.0 {
            return Err(FixmapError::InvalidKernel(format!(
                "sigma must be positive and finite, got {sigma_px}"
            )));
        }
        let radius = (3.0 * sigma_px).ceil() as u32;
        Self::with_radius(sigma_px, radius.max(1))
    }

    pub fn with_radius(sigma_px: f64, truncate_radius_px: u32) -> Result<Self, FixmapError> {
        if !sigma_px.is_finite() || sigma_px <= 0.0 {
            return Err(FixmapError::InvalidKernel(format!(
                "sigma must be positive and finite, got {sigma_px}"
            )));
        }
        if truncate_radius_px == 0 {
            return Err(FixmapError::InvalidKernel(
                "truncate radius must be at least 1 pixel".into(),
            ));
        }
        Ok(Self {
            sigma_px,
            truncate_radius_px,
        })
    }

    pub fn sigma_px(&self) -> f64 {
        self.sigma_px
    }

    pub fn truncate_radius_px(&self) -> u32 {
        self.truncate_radius_px
    }
}

/// Dense non-negative field over the image grid, stored row-major (y, x).
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width_px: u32,
    height_px: u32,
    values: Vec<f64>,
    normalized: bool,
}

impl SaliencyMap {
    fn zeros(width_px: u32, height_px: u32) -> Self {
        Self {
            width_px,
            height_px,
            values: vec![0.0; width_px as usize * height_px as usize],
            normalized: false,
        }
    }

    pub(crate) fn from_values(
        width_px: u32,
        height_px: u32,
        values: Vec<f64>,
        normalized: bool,
    ) -> Self {
        debug_assert_eq!(values.len(), width_px as usize * height_px as usize);
        Self {
            width_px,
            height_px,
            values,
            normalized,
        }
    }

    pub fn width_px(&self) -> u32 {
        self.width_px
    }

    pub fn height_px(&self) -> u32 {
        self.height_px
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width_px as usize + x as usize]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Pixel of the largest value (first hit in row-major scan order).
    pub fn argmax(&self) -> (u32, u32) {
        let mut best = 0usize;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (
            (best % self.width_px as usize) as u32,
            (best / self.width_px as usize) as u32,
        )
    }
}

fn check_in_bounds(dims: (u32, u32), point: (f64, f64)) -> Result<(), FixmapError> {
    let (w, h) = dims;
    let (x, y) = point;
    if !x.is_finite() || !y.is_finite() || x < 0.0 || x >= w as f64 || y < 0.0 || y >= h as f64 {
        return Err(FixmapError::PointOutOfBounds {
            x,
            y,
            width: w,
            height: h,
        });
    }
    Ok(())
}

/// Add one truncated Gaussian centered at `(x, y)` into `values`.
/// The footprint is every pixel with |px - x| <= r and |py - y| <= r.
fn accumulate_splat(values: &mut [f64], width: u32, height: u32, x: f64, y: f64, params: &KernelParams) {
    let r = params.truncate_radius_px as f64;
    let two_sigma_sq = 2.0 * params.sigma_px * params.sigma_px;
    let px_lo = (x - r).ceil().max(0.0) as u32;
    let px_hi = (x + r).floor().min((width - 1) as f64) as u32;
    let py_lo = (y - r).ceil().max(0.0) as u32;
    let py_hi = (y + r).floor().min((height - 1) as f64) as u32;
    for py in py_lo..=py_hi {
        let dy = py as f64 - y;
        let dy_sq = dy * dy;
        let row = py as usize * width as usize;
        for px in px_lo..=px_hi {
            let dx = px as f64 - x;
            values[row + px as usize] += (-(dx * dx + dy_sq) / two_sigma_sq).exp();
        }
    }
}

/// Single unnormalized Gaussian splat. The peak value is at the pixel nearest
/// `point`; mass outside the image is clipped.
pub fn splat_gaussian(
    dims: (u32, u32),
    point: (f64, f64),
    params: &KernelParams,
) -> Result<SaliencyMap, FixmapError> {
    check_in_bounds(dims, point)?;
    let mut map = SaliencyMap::zeros(dims.0, dims.1);
    accumulate_splat(&mut map.values, dims.0, dims.1, point.0, point.1, params);
    Ok(map)
}

/// Pixel-wise sum of per-point splats, normalized to total mass 1.
pub fn build_fixation_map(
    points: &[(f64, f64)],
    dims: (u32, u32),
    params: &KernelParams,
) -> Result<SaliencyMap, FixmapError> {
    if points.is_empty() {
        return Err(FixmapError::NoPoints);
    }
    for &point in points {
        check_in_bounds(dims, point)?;
    }
    let mut map = SaliencyMap::zeros(dims.0, dims.1);
    for &(x, y) in points {
        accumulate_splat(&mut map.values, dims.0, dims.1, x, y, params);
    }
    let total: f64 = map.values.iter().sum();
    for v in &mut map.values {
        *v /= total;
    }
    map.normalized = true;
    Ok(map)
}

/// Normalized map for one frame window, or `None` when the window holds no
/// valid gaze sample.
pub fn map_for_frame(
    stream: &GazeStream,
    frame: u32,
    window: u32,
    params: &KernelParams,
) -> Option<SaliencyMap> {
    let points = stream.samples_for_frame(frame, window);
    if points.is_empty() {
        return None;
    }
    let dims = (stream.meta.width_px, stream.meta.height_px);
    Some(build_fixation_map(&points, dims, params).expect("valid samples lie in bounds"))
}

/// Write a binary 16-bit PGM (P5, big-endian) scaled so the map maximum maps
/// to 65535.
pub fn write_pgm16<W: Write>(map: &SaliencyMap, mut out: W) -> io::Result<()> {
    write!(out, "P5\n{} {}\n65535\n", map.width_px, map.height_px)?;
    let max = map.max();
    for &v in &map.values {
        let level = if max > 0.0 {
            (v / max * 65535.0).round() as u16
        } else {
            0
        };
        out.write_all(&level.to_be_bytes())?;
    }
    Ok(())
}

pub fn write_pgm16_file<P: AsRef<Path>>(map: &SaliencyMap, path: P) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_pgm16(map, &mut out)?;
    out.flush()
}

/// Lossless CSV export: one row of comma-separated full-precision values per
/// image row. Rust's shortest round-trip float formatting guarantees that
/// re-importing reproduces the map bit-exactly.
pub fn write_map_csv<W: Write>(map: &SaliencyMap, mut out: W) -> io::Result<()> {
    let width = map.width_px as usize;
    for row in map.values.chunks(width) {
        let mut line = String::with_capacity(width * 8);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_map_csv_file<P: AsRef<Path>>(map: &SaliencyMap, path: P) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_map_csv(map, &mut out)?;
    out.flush()
}

/// Re-import a lossless map CSV. Dimensions are inferred from the grid; the
/// normalized flag is restored by checking the total against 1 within 1e-9.
pub fn read_map_csv(text: &str) -> Result<SaliencyMap, FixmapError> {
    let mut values: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let mut height = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| FixmapError::BadCsv(format!("row {}: {e}", i + 1)))?;
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FixmapError::BadCsv(format!(
                "row {}: values must be finite and non-negative",
                i + 1
            )));
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(FixmapError::BadCsv(format!(
                    "row {} has {} columns, expected {w}",
                    i + 1,
                    row.len()
                )));
            }
            _ => {}
        }
        values.extend_from_slice(&row);
        height += 1;
    }
    let width = width.ok_or_else(|| FixmapError::BadCsv("empty map".into()))?;
    if width == 0 {
        return Err(FixmapError::BadCsv("empty rows".into()));
    }
    let sum: f64 = values.iter().sum();
    let normalized = (sum - 1.0).abs() <= 1e-9;
    Ok(SaliencyMap::from_values(
        width as u32,
        height as u32,
        values,
        normalized,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze::{parse_gaze_log, VideoMeta};

    /// Independent dense evaluation of the truncated-Gaussian sum over the
    /// whole grid, written directly from the definition.
    fn oracle_map(points: &[(f64, f64)], dims: (u32, u32), sigma: f64, normalize: bool) -> Vec<f64> {
        let (w, h) = dims;
        let radius = (3.0 * sigma).ceil();
        let mut values = vec![0.0f64; (w * h) as usize];
        for py in 0..h {
            for px in 0..w {
                let mut acc = 0.0;
                for &(x, y) in points {
                    let dx = px as f64 - x;
                    let dy = py as f64 - y;
                    if dx.abs() <= radius && dy.abs() <= radius {
                        acc += (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                    }
                }
                values[(py * w + px) as usize] = acc;
            }
        }
        if normalize {
            let total: f64 = values.iter().sum();
            for v in &mut values {
                *v /= total;
            }
        }
        values
    }

    #[test]
    fn splat_peak_at_center() {
        let params = KernelParams::new(25.0).unwrap();
        let map = splat_gaussian((640, 480), (320.0, 240.0), &params).unwrap();
        assert_eq!(map.argmax(), (320, 240));
        assert_eq!(map.get(320, 240), 1.0);
    }

    #[test]
    fn splat_value_at_one_sigma() {
        let params = KernelParams::new(25.0).unwrap();
        let map = splat_gaussian((640, 480), (320.0, 240.0), &params).unwrap();
        let expected = (-0.5f64).exp();
        assert!((map.get(345, 240) - expected).abs() < 1e-15);
        assert!((map.get(320, 265) - expected).abs() < 1e-15);
    }

    #[test]
    fn corner_splat_clips_mass() {
        let params = KernelParams::new(10.0).unwrap();
        let corner = splat_gaussian((640, 480), (0.0, 0.0), &params).unwrap();
        let interior = splat_gaussian((640, 480), (320.0, 240.0), &params).unwrap();
        assert!(corner.sum() < interior.sum());
        // only the in-image quadrant of the footprint is populated
        assert!(corner.get(0, 0) == 1.0);
        assert_eq!(corner.get(31, 0), 0.0);
    }

    #[test]
    fn splat_rejects_out_of_bounds() {
        let params = KernelParams::new(10.0).unwrap();
        assert!(matches!(
            splat_gaussian((640, 480), (640.0, 100.0), &params),
            Err(FixmapError::PointOutOfBounds { .. })
        ));
        assert!(matches!(
            splat_gaussian((640, 480), (f64::NAN, 100.0), &params),
            Err(FixmapError::PointOutOfBounds { .. })
        ));
    }

    #[test]
    fn kernel_radius_default_is_three_sigma() {
        assert_eq!(KernelParams::new(25.0).unwrap().truncate_radius_px(), 75);
        assert_eq!(KernelParams::new(10.5).unwrap().truncate_radius_px(), 32);
        assert_eq!(KernelParams::new(0.1).unwrap().truncate_radius_px(), 1);
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::with_radius(5.0, 0).is_err());
    }

    #[test]
    fn build_single_point_normalizes() {
        let params = KernelParams::new(10.0).unwrap();
        let map = build_fixation_map(&[(80.0, 60.0)], (160, 120), &params).unwrap();
        assert!(map.is_normalized());
        assert!((map.sum() - 1.0).abs() < 1e-9);
        assert_eq!(map.argmax(), (80, 60));
    }

    #[test]
    fn duplicate_point_is_bit_identical_to_single() {
        let params = KernelParams::new(10.0).unwrap();
        let single = build_fixation_map(&[(80.0, 60.0)], (160, 120), &params).unwrap();
        let double =
            build_fixation_map(&[(80.0, 60.0), (80.0, 60.0)], (160, 120), &params).unwrap();
        assert_eq!(single.values(), double.values());
    }

    #[test]
    fn empty_points_error() {
        let params = KernelParams::new(10.0).unwrap();
        assert_eq!(
            build_fixation_map(&[], (160, 120), &params).unwrap_err(),
            FixmapError::NoPoints
        );
    }

    #[test]
    fn two_far_points_split_mass_evenly() {
        // 10 sigma apart horizontally; compare against the independent oracle
        // and check the mass split about the midpoint column.
        let sigma = 5.0;
        let params = KernelParams::new(sigma).unwrap();
        let points = [(55.0, 60.0), (105.0, 60.0)];
        let map = build_fixation_map(&points, (160, 120), &params).unwrap();
        let oracle = oracle_map(&points, (160, 120), sigma, true);
        for (a, b) in map.values().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        let left_mass: f64 = (0..120)
            .flat_map(|y| (0..80).map(move |x| (x, y)))
            .map(|(x, y)| map.get(x, y))
            .sum();
        assert!((left_mass - 0.5).abs() < 1e-6, "left mass {left_mass}");
    }

    #[test]
    fn interior_splat_is_mirror_symmetric() {
        let params = KernelParams::new(8.0).unwrap();
        let map = splat_gaussian((160, 120), (80.0, 60.0), &params).unwrap();
        for dy in 0..=24i32 {
            for dx in 0..=24i32 {
                let v = map.get((80 + dx) as u32, (60 + dy) as u32);
                assert!((v - map.get((80 - dx) as u32, (60 + dy) as u32)).abs() < 1e-12);
                assert!((v - map.get((80 + dx) as u32, (60 - dy) as u32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_translation_is_exact() {
        let params = KernelParams::new(5.0).unwrap();
        let r = params.truncate_radius_px() as i64;
        let a = splat_gaussian((160, 120), (60.0, 60.0), &params).unwrap();
        let b = splat_gaussian((160, 120), (72.0, 60.0), &params).unwrap();
        for y in 0..120i64 {
            for x in 0..160i64 {
                // compare where both footprints are interior
                if (x - 60).abs() <= r && (y - 60).abs() <= r {
                    assert_eq!(a.get(x as u32, y as u32), b.get((x + 12) as u32, y as u32));
                }
            }
        }
    }

    #[test]
    fn map_for_frame_matches_direct_build() {
        let meta = VideoMeta::new(160, 120, 15.0, 4).unwrap();
        let text = "0,0.000,40,30,1\n0,0.033,40,30,1\n2,0.133,80,60,1";
        let stream = parse_gaze_log(text.as_bytes(), meta, "actor").unwrap();
        let params = KernelParams::new(10.0).unwrap();

        let two_same = map_for_frame(&stream, 0, 0, &params).unwrap();
        let single = build_fixation_map(&[(40.0, 30.0)], (160, 120), &params).unwrap();
        assert_eq!(two_same.values(), single.values());

        assert!(map_for_frame(&stream, 1, 0, &params).is_none());
        assert!(map_for_frame(&stream, 3, 0, &params).is_none());

        // empty frame picks up neighbors with window 1
        let neighbor = map_for_frame(&stream, 1, 1, &params).unwrap();
        let direct = build_fixation_map(
            &[(40.0, 30.0), (40.0, 30.0), (80.0, 60.0)],
            (160, 120),
            &params,
        )
        .unwrap();
        assert_eq!(neighbor.values(), direct.values());
    }

    #[test]
    fn builds_are_deterministic() {
        let params = KernelParams::new(7.0).unwrap();
        let points = [(12.5, 80.25), (100.0, 10.0), (159.0, 119.0)];
        let a = build_fixation_map(&points, (160, 120), &params).unwrap();
        let b = build_fixation_map(&points, (160, 120), &params).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn pgm_header_and_peak_scaling() {
        let params = KernelParams::new(10.0).unwrap();
        let map = build_fixation_map(&[(80.0, 60.0)], (160, 120), &params).unwrap();
        let mut buf = Vec::new();
        write_pgm16(&map, &mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n160 120\n65535\n"));
        let header_len = b"P5\n160 120\n65535\n".len();
        assert_eq!(buf.len() - header_len, 160 * 120 * 2);
        let max_level = buf[header_len..]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .max()
            .unwrap();
        assert_eq!(max_level, 65535);
    }

    #[test]
    fn map_csv_round_trip_is_bit_exact() {
        let params = KernelParams::new(6.5).unwrap();
        let map = build_fixation_map(&[(40.0, 30.5), (120.0, 90.0)], (160, 120), &params).unwrap();
        let mut buf = Vec::new();
        write_map_csv(&map, &mut buf).unwrap();
        let back = read_map_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.width_px(), 160);
        assert_eq!(back.height_px(), 120);
        assert!(back.is_normalized());
        assert_eq!(back.values(), map.values());
    }

    #[test]
    fn map_csv_rejects_ragged_and_negative() {
        assert!(matches!(
            read_map_csv("1,2\n3\n"),
            Err(FixmapError::BadCsv(_))
        ));
        assert!(matches!(
            read_map_csv("1,-2\n"),
            Err(FixmapError::BadCsv(_))
        ));
        assert!(matches!(read_map_csv(""), Err(FixmapError::BadCsv(_))));
    }
}
