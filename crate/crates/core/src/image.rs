//! Hyperspectral cube container, raw BIL file I/O and traversal order.
//!
//! Raw files carry no header: geometry is supplied out of band, either
//! directly or through a small `key=value` sidecar file. Samples are stored
//! band-interleaved-by-line: for each row, every band of that row, each band
//! a run of `n_cols` samples. Depths above 8 bits use two bytes per sample.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ByteOrder {
    #[default]
    Little,
    Big,
}

impl FromStr for ByteOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "le" | "little" | "little-endian" => Ok(ByteOrder::Little),
            "be" | "big" | "big-endian" => Ok(ByteOrder::Big),
            other => Err(Error::Geometry(format!("unknown byte order `{other}`"))),
        }
    }
}

impl fmt::Display for ByteOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ByteOrder::Little => "le",
            ByteOrder::Big => "be",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeGeometry {
    pub n_cols: usize,
    pub n_rows: usize,
    pub n_bands: usize,
    pub bit_depth: u8,
    pub signed: bool,
    pub byte_order: ByteOrder,
}

impl CubeGeometry {
    /// Unsigned little-endian geometry.
    pub fn new(n_cols: usize, n_rows: usize, n_bands: usize, bit_depth: u8) -> Result<Self> {
        let g = CubeGeometry {
            n_cols,
            n_rows,
            n_bands,
            bit_depth,
            signed: false,
            byte_order: ByteOrder::Little,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cols == 0 || self.n_rows == 0 || self.n_bands == 0 {
            return Err(Error::Geometry(format!(
                "dimensions must be positive, got {}x{}x{}",
                self.n_cols, self.n_rows, self.n_bands
            )));
        }
        if !(2..=16).contains(&self.bit_depth) {
            return Err(Error::Geometry(format!(
                "bit depth {} outside [2, 16]",
                self.bit_depth
            )));
        }
        self.n_cols
            .checked_mul(self.n_rows)
            .and_then(|n| n.checked_mul(self.n_bands))
            .ok_or_else(|| Error::Geometry("sample count overflows".into()))?;
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.n_cols * self.n_rows * self.n_bands
    }

    pub fn bytes_per_sample(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }

    pub fn min_sample(&self) -> i32 {
        if self.signed {
            -(1 << (self.bit_depth - 1))
        } else {
            0
        }
    }

    pub fn max_sample(&self) -> i32 {
        if self.signed {
            (1 << (self.bit_depth - 1)) - 1
        } else {
            (1 << self.bit_depth) - 1
        }
    }

    /// Mid-range value used when nothing causal is available.
    pub fn mid_sample(&self) -> i32 {
        if self.signed {
            0
        } else {
            1 << (self.bit_depth - 1)
        }
    }

    /// Linear BIL index of `(x, y, z)`.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (y * self.n_bands + z) * self.n_cols + x
    }

    /// Parses a sidecar of `key=value` lines (`cols`, `rows`, `bands`,
    /// `depth`, `signed`, `byteorder`). Blank lines and `#` comments are
    /// ignored.
    pub fn parse_sidecar(text: &str) -> Result<Self> {
        let mut cols = None;
        let mut rows = None;
        let mut bands = None;
        let mut depth = None;
        let mut signed = false;
        let mut byte_order = ByteOrder::Little;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Geometry(format!("line {}: expected key=value", lineno + 1))
            })?;
            let value = value.trim();
            let bad =
                |what: &str| Error::Geometry(format!("line {}: bad {what} `{value}`", lineno + 1));
            match key.trim().to_ascii_lowercase().as_str() {
                "cols" => cols = Some(value.parse::<usize>().map_err(|_| bad("cols"))?),
                "rows" => rows = Some(value.parse::<usize>().map_err(|_| bad("rows"))?),
                "bands" => bands = Some(value.parse::<usize>().map_err(|_| bad("bands"))?),
                "depth" => depth = Some(value.parse::<u8>().map_err(|_| bad("depth"))?),
                "signed" => signed = parse_flag(value).ok_or_else(|| bad("signed"))?,
                "byteorder" => byte_order = value.parse()?,
                other => {
                    return Err(Error::Geometry(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        let missing = |k: &str| Error::Geometry(format!("sidecar is missing `{k}`"));
        let g = CubeGeometry {
            n_cols: cols.ok_or_else(|| missing("cols"))?,
            n_rows: rows.ok_or_else(|| missing("rows"))?,
            n_bands: bands.ok_or_else(|| missing("bands"))?,
            bit_depth: depth.ok_or_else(|| missing("depth"))?,
            signed,
            byte_order,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn to_sidecar(&self) -> String {
        format!(
            "cols={}\nrows={}\nbands={}\ndepth={}\nsigned={}\nbyteorder={}\n",
            self.n_cols, self.n_rows, self.n_bands, self.bit_depth, self.signed, self.byte_order
        )
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

/// Role of a sample in the per-line estimation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelType {
    /// Interior sample: residual is buffered.
    A,
    /// Closes a subset of `L` samples: subset median is taken.
    B,
    /// Last column of a band: median of medians is taken.
    C,
    /// Last column of the last band: the controller runs.
    D,
}

impl PixelType {
    pub fn classify(x: usize, z: usize, n_cols: usize, n_bands: usize, subset_len: usize) -> Self {
        if x + 1 == n_cols {
            if z + 1 == n_bands {
                PixelType::D
            } else {
                PixelType::C
            }
        } else if x % subset_len == subset_len - 1 {
            PixelType::B
        } else {
            PixelType::A
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub kind: PixelType,
}

/// Iterator over every position of a cube in BIL order.
#[derive(Debug, Clone)]
pub struct BilPositions {
    n_cols: usize,
    n_rows: usize,
    n_bands: usize,
    subset_len: usize,
    next: usize,
    total: usize,
}

impl Iterator for BilPositions {
    type Item = Position;

    fn next(&mut self) -> Option<Position> {
        if self.next >= self.total {
            return None;
        }
        let i = self.next;
        self.next += 1;
        let x = i % self.n_cols;
        let z = (i / self.n_cols) % self.n_bands;
        let y = i / (self.n_cols * self.n_bands);
        debug_assert!(y < self.n_rows);
        Some(Position {
            x,
            y,
            z,
            kind: PixelType::classify(x, z, self.n_cols, self.n_bands, self.subset_len),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.total - self.next;
        (n, Some(n))
    }
}

impl ExactSizeIterator for BilPositions {}

/// Positions ordered by row, then band, then column, tagged with their
/// pixel type for subset length `subset_len` (must be at least 1).
pub fn bil_positions(geometry: &CubeGeometry, subset_len: usize) -> BilPositions {
    assert!(subset_len >= 1, "subset length must be positive");
    BilPositions {
        n_cols: geometry.n_cols,
        n_rows: geometry.n_rows,
        n_bands: geometry.n_bands,
        subset_len,
        next: 0,
        total: geometry.sample_count(),
    }
}

/// A hyperspectral cube held in BIL order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageCube {
    geometry: CubeGeometry,
    samples: Vec<i32>,
}

impl ImageCube {
    /// Wraps BIL-ordered samples, checking count and range.
    pub fn from_samples(geometry: CubeGeometry, samples: Vec<i32>) -> Result<Self> {
        geometry.validate()?;
        if samples.len() != geometry.sample_count() {
            return Err(Error::Geometry(format!(
                "{} samples supplied for a {}-sample cube",
                samples.len(),
                geometry.sample_count()
            )));
        }
        let (lo, hi) = (geometry.min_sample(), geometry.max_sample());
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, &v)| v < lo || v > hi) {
            return Err(Error::SampleRange {
                index,
                value: value.into(),
                bit_depth: geometry.bit_depth,
            });
        }
        Ok(ImageCube { geometry, samples })
    }

    /// Builds a cube by evaluating `f(x, y, z)`; values are clamped to the
    /// sample range.
    pub fn from_fn(
        geometry: CubeGeometry,
        mut f: impl FnMut(usize, usize, usize) -> i32,
    ) -> Result<Self> {
        geometry.validate()?;
        let (lo, hi) = (geometry.min_sample(), geometry.max_sample());
        let mut samples = Vec::with_capacity(geometry.sample_count());
        for y in 0..geometry.n_rows {
            for z in 0..geometry.n_bands {
                for x in 0..geometry.n_cols {
                    samples.push(f(x, y, z).clamp(lo, hi));
                }
            }
        }
        Ok(ImageCube { geometry, samples })
    }

    pub fn geometry(&self) -> &CubeGeometry {
        &self.geometry
    }

    pub fn samples(&self) -> &[i32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<i32> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> i32 {
        self.samples[self.geometry.index(x, y, z)]
    }

    /// Decodes raw BIL bytes.
    pub fn from_raw_bytes(geometry: CubeGeometry, bytes: &[u8]) -> Result<Self> {
        geometry.validate()?;
        let width = geometry.bytes_per_sample();
        let expected = (geometry.sample_count() * width) as u64;
        if bytes.len() as u64 != expected {
            return Err(Error::SizeMismatch {
                expected,
                actual: bytes.len() as u64,
            });
        }
        let samples = bytes
            .chunks_exact(width)
            .map(|c| {
                let raw: u16 = match (width, geometry.byte_order) {
                    (1, _) => c[0] as u16,
                    (_, ByteOrder::Little) => u16::from_le_bytes([c[0], c[1]]),
                    (_, ByteOrder::Big) => u16::from_be_bytes([c[0], c[1]]),
                };
                decode_word(raw, geometry.signed, width)
            })
            .collect();
        ImageCube::from_samples(geometry, samples)
    }

    /// Encodes the cube as raw BIL bytes.
    pub fn to_raw_bytes(&self) -> Vec<u8> {
        let g = &self.geometry;
        let mut out = Vec::with_capacity(g.sample_count() * g.bytes_per_sample());
        for &s in &self.samples {
            if g.bytes_per_sample() == 1 {
                out.push(s as u8);
            } else {
                let w = s as u16;
                match g.byte_order {
                    ByteOrder::Little => out.extend_from_slice(&w.to_le_bytes()),
                    ByteOrder::Big => out.extend_from_slice(&w.to_be_bytes()),
                }
            }
        }
        out
    }

    pub fn load_raw(path: impl AsRef<Path>, geometry: CubeGeometry) -> Result<Self> {
        let bytes = fs::read(path)?;
        ImageCube::from_raw_bytes(geometry, &bytes)
    }

    pub fn store_raw(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_raw_bytes())?;
        Ok(())
    }
}

/// Signed samples are stored two's complement in the full word, so an
/// 8-bit-wide signed sample of depth 6 is sign-extended from bit 7.
fn decode_word(raw: u16, signed: bool, width: usize) -> i32 {
    if !signed {
        return raw as i32;
    }
    match width {
        1 => raw as u8 as i8 as i32,
        _ => raw as i16 as i32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn geom(c: usize, r: usize, b: usize, d: u8) -> CubeGeometry {
        CubeGeometry::new(c, r, b, d).unwrap()
    }

    #[test]
    fn decodes_little_endian_words() {
        let cube = ImageCube::from_raw_bytes(geom(2, 1, 1, 16), &[0x01, 0x00, 0xFF, 0x00]).unwrap();
        assert_eq!(cube.samples(), &[1, 255]);
    }

    #[test]
    fn bil_index_matches_seventh_word() {
        let g = geom(2, 2, 2, 16);
        let bytes: Vec<u8> = (0u16..8).flat_map(|w| w.to_le_bytes()).collect();
        let cube = ImageCube::from_raw_bytes(g, &bytes).unwrap();
        // enumerate the BIL layout by hand
        let mut k = 0;
        for y in 0..2 {
            for z in 0..2 {
                for x in 0..2 {
                    assert_eq!(cube.get(x, y, z), k);
                    k += 1;
                }
            }
        }
        assert_eq!(cube.get(0, 1, 1), 6);
    }

    #[test]
    fn short_file_is_rejected() {
        let err = ImageCube::from_raw_bytes(geom(2, 2, 2, 16), &[0u8; 15]).unwrap_err();
        assert!(matches!(
            err,
            Error::SizeMismatch {
                expected: 16,
                actual: 15
            }
        ));
    }

    #[test]
    fn out_of_range_sample_is_rejected() {
        let err = ImageCube::from_raw_bytes(geom(1, 1, 1, 12), &[0x00, 0x10]).unwrap_err();
        assert!(matches!(err, Error::SampleRange { value: 4096, .. }));
    }

    #[test]
    fn single_sample_word_layout() {
        let cube = ImageCube::from_samples(geom(1, 1, 1, 16), vec![42]).unwrap();
        assert_eq!(cube.to_raw_bytes(), vec![0x2A, 0x00]);
    }

    #[test]
    fn empty_path_fails() {
        let cube = ImageCube::from_samples(geom(1, 1, 1, 16), vec![42]).unwrap();
        assert!(matches!(cube.store_raw(""), Err(Error::Io(_))));
    }

    #[test]
    fn signed_big_endian_round_trip() {
        let g = CubeGeometry {
            signed: true,
            byte_order: ByteOrder::Big,
            ..geom(3, 1, 1, 12)
        };
        let cube = ImageCube::from_samples(g, vec![-2048, 0, 2047]).unwrap();
        let bytes = cube.to_raw_bytes();
        assert_eq!(&bytes[..2], &[0xF8, 0x00]);
        assert_eq!(ImageCube::from_raw_bytes(g, &bytes).unwrap(), cube);
    }

    #[test]
    fn bil_order_small() {
        let order: Vec<_> = bil_positions(&geom(2, 1, 2, 8), 17)
            .map(|p| (p.x, p.y, p.z))
            .collect();
        assert_eq!(order, vec![(0, 0, 0), (1, 0, 0), (0, 0, 1), (1, 0, 1)]);
    }

    #[test]
    fn pixel_types_follow_schedule() {
        let g = geom(4, 1, 2, 8);
        let kinds: Vec<_> = bil_positions(&g, 2).map(|p| p.kind).collect();
        use PixelType::*;
        assert_eq!(kinds, vec![A, B, A, C, A, B, A, D]);
        let single: Vec<_> = bil_positions(&geom(1, 1, 1, 8), 17).collect();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].kind, D);
    }

    #[test]
    fn positions_cover_cube_exactly_once() {
        let g = geom(5, 3, 4, 8);
        let all: Vec<_> = bil_positions(&g, 3).collect();
        assert_eq!(all.len(), g.sample_count());
        let uniq: HashSet<_> = all.iter().map(|p| (p.x, p.y, p.z)).collect();
        assert_eq!(uniq.len(), g.sample_count());
        let d_count = all.iter().filter(|p| p.kind == PixelType::D).count();
        assert_eq!(d_count, g.n_rows);
        for (i, p) in all.iter().enumerate() {
            assert_eq!(g.index(p.x, p.y, p.z), i);
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let g = CubeGeometry {
            signed: true,
            byte_order: ByteOrder::Big,
            ..geom(680, 512, 224, 16)
        };
        assert_eq!(CubeGeometry::parse_sidecar(&g.to_sidecar()).unwrap(), g);
        assert!(CubeGeometry::parse_sidecar("cols=1\nrows=1\n").is_err());
        assert!(CubeGeometry::parse_sidecar("cols=1\nrows=1\nbands=1\ndepth=17\n").is_err());
    }
}
