use std::sync::OnceLock;

use hyperrate::synthetic::{correlated_cube, SyntheticParams};
use hyperrate::{
    decode, encode, metrics, ByteOrder, CubeGeometry, EncoderConfig, ImageCube, RateLut,
};
use proptest::prelude::*;

fn lut() -> &'static RateLut {
    static LUT: OnceLock<RateLut> = OnceLock::new();
    LUT.get_or_init(RateLut::build)
}

#[test]
fn feedback_settles_on_white_noise() {
    let g = CubeGeometry::new(128, 200, 16, 12).unwrap();
    let cube = correlated_cube(&g, &SyntheticParams::white(40.0), 77);
    let cfg = EncoderConfig {
        trace: true,
        ..EncoderConfig::with_rate(2.0)
    };
    let enc = encode(&cube, &cfg, lut()).unwrap();
    let line_samples = (g.n_cols * g.n_bands) as f64;
    let mut bits = 0u64;
    for (i, row) in enc.report.trace.iter().enumerate() {
        bits += row.actual_bits;
        if i >= 50 {
            let rate = bits as f64 / ((i + 1) as f64 * line_samples);
            assert!((rate - 2.0).abs() < 0.04, "line {i}: cumulative {rate}");
        }
    }
}

#[test]
fn lower_targets_give_smaller_files() {
    let g = CubeGeometry::new(64, 48, 12, 16).unwrap();
    let cube = correlated_cube(&g, &SyntheticParams::default(), 5);
    let sizes: Vec<u64> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&r| {
            encode(&cube, &EncoderConfig::with_rate(r), lut())
                .unwrap()
                .report
                .payload_bytes
        })
        .collect();
    assert!(sizes.windows(2).all(|w| w[0] < w[1]), "{sizes:?}");
}

#[test]
fn signed_big_endian_file_round_trip() {
    let g = CubeGeometry {
        signed: true,
        byte_order: ByteOrder::Big,
        ..CubeGeometry::new(20, 9, 6, 14).unwrap()
    };
    let cube = correlated_cube(&g, &SyntheticParams::default(), 11);
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("c.raw");
    cube.store_raw(&raw).unwrap();
    let loaded = ImageCube::load_raw(&raw, g).unwrap();
    assert_eq!(loaded, cube);

    let enc = encode(&loaded, &EncoderConfig::with_rate(3.0), lut()).unwrap();
    let decoded = decode(&enc.bitstream.to_bytes()).unwrap();
    assert_eq!(decoded.geometry(), &g);
    assert_eq!(decoded, enc.reconstruction);
    let q = metrics(&cube, &decoded).unwrap();
    let max_delta = *enc.bitstream.deltas.iter().max().unwrap() as u32;
    assert!(q.mad <= max_delta);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decode_matches_encoder_reconstruction(
        cols in 1usize..24,
        rows in 1usize..12,
        bands in 1usize..6,
        depth in 2u8..=16,
        signed in any::<bool>(),
        rate in 0.1f64..10.0,
        q_max_delta in 0u8..=255,
        subset_len in 1usize..20,
        seed in any::<u64>(),
    ) {
        let g = CubeGeometry { signed, ..CubeGeometry::new(cols, rows, bands, depth).unwrap() };
        let span = (g.max_sample() - g.min_sample()) as f64;
        let params = SyntheticParams { field_std: span / 6.0, noise_std: span / 50.0, ..Default::default() };
        let cube = correlated_cube(&g, &params, seed);
        let mut cfg = EncoderConfig::with_rate(rate);
        cfg.controller.q_max = 2 * q_max_delta as u16 + 1;
        cfg.subset_len = subset_len;
        let enc = encode(&cube, &cfg, lut()).unwrap();
        let decoded = decode(&enc.bitstream.to_bytes()).unwrap();
        prop_assert_eq!(&decoded, &enc.reconstruction);
        for y in 0..rows {
            let delta = enc.bitstream.deltas[y] as i32;
            prop_assert!(delta <= q_max_delta as i32);
            for z in 0..bands {
                for x in 0..cols {
                    prop_assert!((cube.get(x, y, z) - decoded.get(x, y, z)).abs() <= delta);
                }
            }
        }
    }
}
