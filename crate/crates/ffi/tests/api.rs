use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hyperrate_ffi::*;

fn geometry() -> HrGeometry {
    HrGeometry {
        cols: 16,
        rows: 6,
        bands: 3,
        bit_depth: 10,
        is_signed: false,
        big_endian: false,
    }
}

fn ramp(g: &HrGeometry) -> Vec<i32> {
    let n = (g.cols * g.rows * g.bands) as usize;
    (0..n).map(|i| ((i * 37) % 1024) as i32).collect()
}

fn last_error() -> String {
    let p = hr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn lossless_round_trip_through_handles() {
    let g = geometry();
    let samples = ramp(&g);
    unsafe {
        let mut cube = ptr::null_mut();
        assert_eq!(
            hr_cube_from_samples(&g, samples.as_ptr(), samples.len(), &mut cube),
            HrStatus::Ok
        );

        let mut opts = hr_encode_options_default();
        opts.target_rate = 16.0;
        let mut buf = ptr::null_mut();
        let mut stats = HrEncodeStats::default();
        assert_eq!(
            hr_compress(cube, &opts, ptr::null(), &mut buf, &mut stats),
            HrStatus::Ok
        );
        assert!(stats.lossless);
        assert_eq!(stats.samples, samples.len() as u64);

        let (mut data, mut len) = (ptr::null(), 0usize);
        assert_eq!(hr_buffer_data(buf, &mut data, &mut len), HrStatus::Ok);
        assert_eq!(len as u64, stats.container_bytes);

        let mut back = ptr::null_mut();
        assert_eq!(hr_decompress(data, len, &mut back), HrStatus::Ok);
        let mut out = HrGeometry {
            cols: 0,
            rows: 0,
            bands: 0,
            bit_depth: 0,
            is_signed: true,
            big_endian: true,
        };
        assert_eq!(hr_cube_geometry(back, &mut out), HrStatus::Ok);
        assert_eq!(
            (out.cols, out.rows, out.bands, out.bit_depth),
            (16, 6, 3, 10)
        );
        assert!(!out.is_signed && !out.big_endian);

        let (mut s, mut n) = (ptr::null(), 0usize);
        assert_eq!(hr_cube_samples(back, &mut s, &mut n), HrStatus::Ok);
        assert_eq!(std::slice::from_raw_parts(s, n), &samples[..]);

        let (mut snr, mut mad) = (0.0, 1u32);
        assert_eq!(hr_metrics(cube, back, &mut snr, &mut mad), HrStatus::Ok);
        assert!(snr.is_infinite());
        assert_eq!(mad, 0);

        hr_buffer_free(buf);
        hr_cube_free(cube);
        hr_cube_free(back);
    }
}

#[test]
fn raw_bytes_and_lut_handles() {
    let g = HrGeometry {
        big_endian: true,
        ..geometry()
    };
    let samples = ramp(&g);
    let raw: Vec<u8> = samples
        .iter()
        .flat_map(|&v| (v as u16).to_be_bytes())
        .collect();
    let dir = std::env::temp_dir().join(format!("hr-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let blob = dir.join("lut.bin");
    std::fs::write(&blob, hyperrate::RateLut::build().to_blob()).unwrap();
    let path = std::ffi::CString::new(blob.to_str().unwrap()).unwrap();
    unsafe {
        let mut cube = ptr::null_mut();
        assert_eq!(
            hr_cube_from_raw(&g, raw.as_ptr(), raw.len(), &mut cube),
            HrStatus::Ok
        );
        let (mut s, mut n) = (ptr::null(), 0usize);
        hr_cube_samples(cube, &mut s, &mut n);
        assert_eq!(std::slice::from_raw_parts(s, n), &samples[..]);

        let mut lut = ptr::null_mut();
        assert_eq!(hr_lut_load(path.as_ptr(), &mut lut), HrStatus::Ok);
        let mut opts = hr_encode_options_default();
        opts.target_rate = 1.0;
        opts.q_max = 7;
        let mut buf = ptr::null_mut();
        assert_eq!(
            hr_compress(cube, &opts, lut, &mut buf, ptr::null_mut()),
            HrStatus::Ok
        );
        let (mut d, mut len) = (ptr::null(), 0usize);
        hr_buffer_data(buf, &mut d, &mut len);
        let mut back = ptr::null_mut();
        assert_eq!(hr_decompress(d, len, &mut back), HrStatus::Ok);
        let (mut snr, mut mad) = (0.0, 0u32);
        hr_metrics(cube, back, &mut snr, &mut mad);
        assert!(mad <= 3);

        hr_buffer_free(buf);
        hr_cube_free(cube);
        hr_cube_free(back);
        hr_lut_free(lut);
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn errors_carry_codes_and_messages() {
    let g = geometry();
    unsafe {
        let mut cube = ptr::null_mut();
        assert_eq!(
            hr_cube_from_samples(&g, ptr::null(), 5, &mut cube),
            HrStatus::NullPointer
        );
        assert!(last_error().contains("samples"));

        let short = [1i32; 4];
        assert_eq!(
            hr_cube_from_samples(&g, short.as_ptr(), 4, &mut cube),
            HrStatus::InvalidArgument
        );
        assert!(cube.is_null());

        let bad = HrGeometry { bit_depth: 40, ..g };
        assert_eq!(
            hr_cube_from_samples(&bad, short.as_ptr(), 4, &mut cube),
            HrStatus::InvalidArgument
        );

        let mut back = ptr::null_mut();
        assert_eq!(
            hr_decompress(b"HRC1xx".as_ptr(), 6, &mut back),
            HrStatus::Corrupt
        );
        assert!(!last_error().is_empty());

        let mut lut = ptr::null_mut();
        let missing = c"/nonexistent/lut.bin";
        assert_eq!(hr_lut_load(missing.as_ptr(), &mut lut), HrStatus::Io);

        let samples = ramp(&g);
        hr_cube_from_samples(&g, samples.as_ptr(), samples.len(), &mut cube);
        let mut opts = hr_encode_options_default();
        opts.q_max = 4;
        let mut buf = ptr::null_mut();
        assert_eq!(
            hr_compress(cube, &opts, ptr::null(), &mut buf, ptr::null_mut()),
            HrStatus::InvalidArgument
        );
        assert!(buf.is_null());
        hr_cube_free(cube);

        hr_cube_free(ptr::null_mut());
        hr_buffer_free(ptr::null_mut());
        hr_lut_free(ptr::null_mut());
    }
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/hyperrate.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "hr_compress",
        "hr_decompress",
        "hr_metrics",
        "hr_last_error_message",
        "HR_STATUS_CORRUPT",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }

    let lib = target_dir().join("libhyperrate_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!(
            "skipping C link check: no cc or no static library at {}",
            lib.display()
        );
        return;
    }
    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let exe = out_dir.join("hr_roundtrip");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/c/roundtrip.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "C program exited with {:?}: {}",
        run.status,
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("mad="));
}
