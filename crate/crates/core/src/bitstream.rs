//! Compressed container layout.
//!
//! All multi-byte fields are little-endian.
//!
//! | field            | type      |
//! |------------------|-----------|
//! | magic `HRC1`     | 4 bytes   |
//! | version          | u8        |
//! | cols, rows, bands| u32 x 3   |
//! | bit depth        | u8        |
//! | signed           | u8        |
//! | byte order       | u8 (0 = le, 1 = be) |
//! | P                | u16       |
//! | Ω, ρ_init, ρ_final | u8 x 3  |
//! | ρ interval       | u16       |
//! | register size    | u8        |
//! | target millibits | u32       |
//! | Q_max, τ, window, Q_init | u16 x 4 |
//! | L                | u16       |
//! | payload length   | u64       |
//! | δ per row        | `rows` bytes |
//! | payload          | range-coded indices, BIL order |

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::image::{ByteOrder, CubeGeometry};
use crate::predictor::PredictorConfig;

pub const MAGIC: [u8; 4] = *b"HRC1";
pub const VERSION: u8 = 1;
/// Fixed header size before the δ table.
pub const HEADER_LEN: usize = 4 + 1 + 12 + 3 + 2 + 3 + 2 + 1 + 4 + 8 + 2 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub geometry: CubeGeometry,
    pub predictor: PredictorConfig,
    /// Echo of the encoder settings; the decoder does not need them.
    pub target_millibits: u32,
    pub q_max: u16,
    pub tau: u16,
    pub window: u16,
    pub q_init: u16,
    pub subset_len: u16,
}

impl Header {
    pub fn new(
        geometry: CubeGeometry,
        predictor: PredictorConfig,
        controller: &ControllerConfig,
        subset_len: usize,
    ) -> Self {
        Header {
            geometry,
            predictor,
            target_millibits: controller.target_millibits().clamp(0, u32::MAX as i64) as u32,
            q_max: controller.q_max,
            tau: controller.tau.min(u16::MAX as u32) as u16,
            window: controller.window.min(u16::MAX as u32) as u16,
            q_init: controller.q_init,
            subset_len: subset_len.min(u16::MAX as usize) as u16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub header: Header,
    /// `δ_y = (Q_y - 1) / 2` for every row.
    pub deltas: Vec<u8>,
    pub payload: Vec<u8>,
}

impl Bitstream {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.deltas.len() + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let g = &h.geometry;
        let p = &h.predictor;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        for dim in [g.n_cols, g.n_rows, g.n_bands] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.push(g.bit_depth);
        out.push(g.signed as u8);
        out.push(match g.byte_order {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        });
        out.extend_from_slice(&p.bands.to_le_bytes());
        out.extend_from_slice(&[p.weight_resolution, p.rho_initial, p.rho_final]);
        out.extend_from_slice(&p.rho_interval.to_le_bytes());
        out.push(p.register_size);
        out.extend_from_slice(&h.target_millibits.to_le_bytes());
        for v in [h.q_max, h.tau, h.window, h.q_init, h.subset_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        debug_assert_eq!(out.len(), HEADER_LEN);
        out.extend_from_slice(&self.deltas);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Corrupt("bad magic".into()));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Corrupt(format!("unsupported version {version}")));
        }
        let n_cols = r.u32()? as usize;
        let n_rows = r.u32()? as usize;
        let n_bands = r.u32()? as usize;
        let bit_depth = r.u8()?;
        let signed = match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(Error::Corrupt(format!("bad signedness flag {v}"))),
        };
        let byte_order = match r.u8()? {
            0 => ByteOrder::Little,
            1 => ByteOrder::Big,
            v => return Err(Error::Corrupt(format!("bad byte order {v}"))),
        };
        let geometry = CubeGeometry {
            n_cols,
            n_rows,
            n_bands,
            bit_depth,
            signed,
            byte_order,
        };
        geometry
            .validate()
            .map_err(|e| Error::Corrupt(format!("header geometry: {e}")))?;
        let predictor = PredictorConfig {
            bands: r.u16()?,
            weight_resolution: r.u8()?,
            rho_initial: r.u8()?,
            rho_final: r.u8()?,
            rho_interval: r.u16()?,
            register_size: r.u8()?,
        };
        predictor
            .validate(&geometry)
            .map_err(|e| Error::Corrupt(format!("header predictor: {e}")))?;
        let target_millibits = r.u32()?;
        let q_max = r.u16()?;
        let tau = r.u16()?;
        let window = r.u16()?;
        let q_init = r.u16()?;
        let subset_len = r.u16()?;
        if subset_len == 0 {
            return Err(Error::Corrupt("subset length is zero".into()));
        }
        let payload_len = r.u64()?;
        let deltas = r.take(n_rows)?.to_vec();
        let remaining = (bytes.len() - r.pos) as u64;
        if payload_len != remaining {
            return Err(Error::Corrupt(format!(
                "payload is {remaining} bytes, header declares {payload_len}"
            )));
        }
        let payload = bytes[r.pos..].to_vec();
        Ok(Bitstream {
            header: Header {
                geometry,
                predictor,
                target_millibits,
                q_max,
                tau,
                window,
                q_init,
                subset_len,
            },
            deltas,
            payload,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt("container truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
