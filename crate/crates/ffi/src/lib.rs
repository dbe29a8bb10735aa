//! C ABI for the hyperrate codec.
//!
//! Cubes, compressed buffers and rate tables are opaque handles owned by the
//! library and released with their `_free` function. Every fallible call
//! returns an [`HrStatus`]; on failure a description is available from
//! [`hr_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hyperrate::{
    decode, encode, metrics, ByteOrder, ControllerConfig, CubeGeometry, EncoderConfig, Error,
    ImageCube, RateLut, DEFAULT_SUBSET_LEN,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Corrupt = 4,
    Panic = 5,
}

/// Cube shape and sample format.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HrGeometry {
    pub cols: u32,
    pub rows: u32,
    pub bands: u32,
    pub bit_depth: u8,
    pub is_signed: bool,
    pub big_endian: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HrEncodeOptions {
    /// Bits per sample.
    pub target_rate: f64,
    pub q_max: u16,
    pub q_init: u16,
    pub tau: u32,
    pub subset_len: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrEncodeStats {
    pub samples: u64,
    pub payload_bytes: u64,
    pub container_bytes: u64,
    pub lookups: u64,
    pub payload_bpp: f64,
    pub container_bpp: f64,
    pub lossless: bool,
}

pub struct HrCube(ImageCube);

pub struct HrBuffer(Vec<u8>);

pub struct HrLut(RateLut);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HrStatus {
    match e {
        Error::Io(_) => HrStatus::Io,
        Error::Corrupt(_) => HrStatus::Corrupt,
        _ => HrStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HrStatus>) -> HrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HrStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            HrStatus::Panic
        }
    }
}

fn fail(e: Error) -> HrStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> HrStatus {
    set_error(format!("{what} is null"));
    HrStatus::NullPointer
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], HrStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

impl HrGeometry {
    fn to_core(self) -> Result<CubeGeometry, HrStatus> {
        let g = CubeGeometry {
            n_cols: self.cols as usize,
            n_rows: self.rows as usize,
            n_bands: self.bands as usize,
            bit_depth: self.bit_depth,
            signed: self.is_signed,
            byte_order: if self.big_endian {
                ByteOrder::Big
            } else {
                ByteOrder::Little
            },
        };
        g.validate().map_err(fail)?;
        Ok(g)
    }

    fn from_core(g: &CubeGeometry) -> Self {
        HrGeometry {
            cols: g.n_cols as u32,
            rows: g.n_rows as u32,
            bands: g.n_bands as u32,
            bit_depth: g.bit_depth,
            is_signed: g.signed,
            big_endian: g.byte_order == ByteOrder::Big,
        }
    }
}

/// Message for the last failure on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn hr_encode_options_default() -> HrEncodeOptions {
    let c = ControllerConfig::default();
    HrEncodeOptions {
        target_rate: c.target_rate,
        q_max: c.q_max,
        q_init: c.q_init,
        tau: c.tau,
        subset_len: DEFAULT_SUBSET_LEN as u32,
    }
}

/// Builds the rate table.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hr_lut_new(out: *mut *mut HrLut) -> HrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(HrLut(RateLut::build())));
        Ok(())
    })
}

/// Loads a rate table blob written by `hyperrate lut-dump`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hr_lut_load(path: *const c_char, out: *mut *mut HrLut) -> HrStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| {
            set_error("path is not UTF-8".into());
            HrStatus::InvalidArgument
        })?;
        let lut = RateLut::load(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(HrLut(lut)));
        Ok(())
    })
}

/// # Safety
/// `lut` must be null or a handle from `hr_lut_new`/`hr_lut_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_lut_free(lut: *mut HrLut) {
    if !lut.is_null() {
        drop(Box::from_raw(lut));
    }
}

/// Creates a cube from `len` samples in band-interleaved-by-line order.
///
/// # Safety
/// `geometry` and `out` must be valid; `samples` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn hr_cube_from_samples(
    geometry: *const HrGeometry,
    samples: *const i32,
    len: usize,
    out: *mut *mut HrCube,
) -> HrStatus {
    guard(|| {
        if geometry.is_null() {
            return Err(null("geometry"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let g = (*geometry).to_core()?;
        let data = slice(samples, len, "samples")?;
        let cube = ImageCube::from_samples(g, data.to_vec()).map_err(fail)?;
        *out = Box::into_raw(Box::new(HrCube(cube)));
        Ok(())
    })
}

/// Creates a cube from headerless raw bytes laid out as `geometry` describes.
///
/// # Safety
/// `geometry` and `out` must be valid; `bytes` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hr_cube_from_raw(
    geometry: *const HrGeometry,
    bytes: *const u8,
    len: usize,
    out: *mut *mut HrCube,
) -> HrStatus {
    guard(|| {
        if geometry.is_null() {
            return Err(null("geometry"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let g = (*geometry).to_core()?;
        let data = slice(bytes, len, "bytes")?;
        let cube = ImageCube::from_raw_bytes(g, data).map_err(fail)?;
        *out = Box::into_raw(Box::new(HrCube(cube)));
        Ok(())
    })
}

/// # Safety
/// `cube` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hr_cube_geometry(cube: *const HrCube, out: *mut HrGeometry) -> HrStatus {
    guard(|| {
        if cube.is_null() {
            return Err(null("cube"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = HrGeometry::from_core((*cube).0.geometry());
        Ok(())
    })
}

/// Borrows the cube's samples; valid while the handle lives.
///
/// # Safety
/// `cube` must be a live handle; `data` and `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hr_cube_samples(
    cube: *const HrCube,
    data: *mut *const i32,
    len: *mut usize,
) -> HrStatus {
    guard(|| {
        if cube.is_null() {
            return Err(null("cube"));
        }
        if data.is_null() || len.is_null() {
            return Err(null("data or len"));
        }
        let s = (*cube).0.samples();
        *data = s.as_ptr();
        *len = s.len();
        Ok(())
    })
}

/// # Safety
/// `cube` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_cube_free(cube: *mut HrCube) {
    if !cube.is_null() {
        drop(Box::from_raw(cube));
    }
}

/// Compresses `cube`. `lut` may be null, in which case a table is built
/// for this call. `stats` may be null.
///
/// # Safety
/// `cube`, `options` and `out` must be valid; `lut` and `stats` valid or null.
#[no_mangle]
pub unsafe extern "C" fn hr_compress(
    cube: *const HrCube,
    options: *const HrEncodeOptions,
    lut: *const HrLut,
    out: *mut *mut HrBuffer,
    stats: *mut HrEncodeStats,
) -> HrStatus {
    guard(|| {
        if cube.is_null() {
            return Err(null("cube"));
        }
        if options.is_null() {
            return Err(null("options"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let o = *options;
        let cfg = EncoderConfig {
            controller: ControllerConfig {
                target_rate: o.target_rate,
                q_max: o.q_max,
                tau: o.tau,
                window: 1,
                q_init: o.q_init,
            },
            predictor: None,
            subset_len: o.subset_len as usize,
            trace: false,
        };
        let built;
        let table = if lut.is_null() {
            built = RateLut::build();
            &built
        } else {
            &(*lut).0
        };
        let enc = encode(&(*cube).0, &cfg, table).map_err(fail)?;
        if !stats.is_null() {
            let r = &enc.report;
            *stats = HrEncodeStats {
                samples: r.samples,
                payload_bytes: r.payload_bytes,
                container_bytes: r.container_bytes,
                lookups: r.lookups,
                payload_bpp: r.payload_bpp(),
                container_bpp: r.container_bpp(),
                lossless: r.lossless(),
            };
        }
        *out = Box::into_raw(Box::new(HrBuffer(enc.bitstream.to_bytes())));
        Ok(())
    })
}

/// Borrows the buffer contents; valid while the handle lives.
///
/// # Safety
/// `buffer` must be a live handle; `data` and `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hr_buffer_data(
    buffer: *const HrBuffer,
    data: *mut *const u8,
    len: *mut usize,
) -> HrStatus {
    guard(|| {
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if data.is_null() || len.is_null() {
            return Err(null("data or len"));
        }
        *data = (*buffer).0.as_ptr();
        *len = (*buffer).0.len();
        Ok(())
    })
}

/// # Safety
/// `buffer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_buffer_free(buffer: *mut HrBuffer) {
    if !buffer.is_null() {
        drop(Box::from_raw(buffer));
    }
}

/// Decodes a container produced by `hr_compress`.
///
/// # Safety
/// `bytes` must point to `len` bytes and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hr_decompress(
    bytes: *const u8,
    len: usize,
    out: *mut *mut HrCube,
) -> HrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = slice(bytes, len, "bytes")?;
        let cube = decode(data).map_err(fail)?;
        *out = Box::into_raw(Box::new(HrCube(cube)));
        Ok(())
    })
}

/// SNR in dB (infinite when identical) and maximum absolute difference.
///
/// # Safety
/// Both cubes must be live handles; `snr_db` and `mad` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hr_metrics(
    original: *const HrCube,
    reconstructed: *const HrCube,
    snr_db: *mut f64,
    mad: *mut u32,
) -> HrStatus {
    guard(|| {
        if original.is_null() || reconstructed.is_null() {
            return Err(null("cube"));
        }
        if snr_db.is_null() || mad.is_null() {
            return Err(null("snr_db or mad"));
        }
        let q = metrics(&(*original).0, &(*reconstructed).0).map_err(fail)?;
        *snr_db = q.snr_db;
        *mad = q.mad;
        Ok(())
    })
}
