//! Reconstruction quality.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::ImageCube;

/// Signal-to-noise ratio and maximum absolute distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quality {
    /// `10 log10(Σ s² / Σ (s - s̃)²)`; infinite for an exact reconstruction.
    pub snr_db: f64,
    pub mad: u32,
}

impl Quality {
    pub fn is_exact(&self) -> bool {
        self.mad == 0
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.snr_db.is_infinite() && self.snr_db > 0.0 {
            write!(f, "snr_db=inf mad={}", self.mad)
        } else {
            write!(f, "snr_db={:.2} mad={}", self.snr_db, self.mad)
        }
    }
}

pub fn metrics(original: &ImageCube, reconstructed: &ImageCube) -> Result<Quality> {
    if original.geometry() != reconstructed.geometry() {
        return Err(Error::Geometry(
            "original and reconstruction have different geometry".into(),
        ));
    }
    let mut signal: u128 = 0;
    let mut noise: u128 = 0;
    let mut mad = 0u32;
    for (&s, &r) in original.samples().iter().zip(reconstructed.samples()) {
        let e = (s as i64 - r as i64).unsigned_abs();
        signal += (s as i64 * s as i64) as u128;
        noise += (e * e) as u128;
        mad = mad.max(e as u32);
    }
    let snr_db = if noise == 0 {
        f64::INFINITY
    } else {
        10.0 * (signal as f64 / noise as f64).log10()
    };
    Ok(Quality { snr_db, mad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::CubeGeometry;

    #[test]
    fn identical_cubes() {
        let g = CubeGeometry::new(2, 1, 1, 8).unwrap();
        let a = ImageCube::from_samples(g, vec![3, 4]).unwrap();
        let q = metrics(&a, &a).unwrap();
        assert!(q.snr_db.is_infinite() && q.snr_db > 0.0);
        assert_eq!(q.mad, 0);
        assert_eq!(q.to_string(), "snr_db=inf mad=0");
    }

    #[test]
    fn worked_example() {
        let g = CubeGeometry::new(2, 1, 1, 8).unwrap();
        let a = ImageCube::from_samples(g, vec![3, 4]).unwrap();
        let b = ImageCube::from_samples(g, vec![3, 3]).unwrap();
        let q = metrics(&a, &b).unwrap();
        assert!((q.snr_db - 10.0 * 25f64.log10()).abs() < 1e-12);
        assert!((q.snr_db - 13.979).abs() < 1e-3);
        assert_eq!(q.mad, 1);
    }

    #[test]
    fn geometry_mismatch() {
        let a =
            ImageCube::from_samples(CubeGeometry::new(2, 1, 1, 8).unwrap(), vec![3, 4]).unwrap();
        let b =
            ImageCube::from_samples(CubeGeometry::new(1, 2, 1, 8).unwrap(), vec![3, 4]).unwrap();
        assert!(metrics(&a, &b).is_err());
    }
}
