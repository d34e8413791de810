use i2e_core::formats::{
    self, decode_dense, decode_sparse, dense_file_len, dense_to_sparse, encode_dense,
    encode_sparse, sparse_file_len, sparse_to_dense, FileMeta, DENSE_HEADER_LEN,
    SPARSE_HEADER_LEN,
};
use i2e_core::{ConversionConfig, EventVolume, Polarity, TimestepOrder};
use proptest::prelude::*;

fn volume_strategy() -> impl Strategy<Value = EventVolume> {
    (1usize..=8, 1usize..40, 1usize..40, 0.0f64..0.5).prop_flat_map(|(t, h, w, density)| {
        proptest::collection::vec(0.0f64..1.0, t * h * w).prop_map(move |draws| {
            let mut vol = EventVolume::zeros(t, h, w);
            for (i, u) in draws.into_iter().enumerate() {
                if u < density {
                    let p = if u < density / 2.0 { Polarity::On } else { Polarity::Off };
                    let (x, y, ti) = (i % w, (i / w) % h, i / (w * h));
                    vol.set(ti, p, x, y, true);
                }
            }
            vol
        })
    })
}

fn meta_strategy() -> impl Strategy<Value = FileMeta> {
    (
        prop::sample::select(vec!["abg", "gab", "bga", "gba"]),
        0.001f64..1.0,
        any::<[u8; 32]>(),
    )
        .prop_map(|(o, s_th0, source_hash)| FileMeta {
            order: TimestepOrder::parse(o).unwrap(),
            s_th0,
            source_hash,
        })
}

proptest! {
    #[test]
    fn dense_and_sparse_round_trip(vol in volume_strategy(), meta in meta_strategy()) {
        let dense = encode_dense(&vol, &meta).unwrap();
        let sparse = encode_sparse(&vol, &meta).unwrap();
        prop_assert_eq!(dense.len(), dense_file_len(vol.timesteps(), vol.height(), vol.width()));
        prop_assert_eq!(sparse.len(), sparse_file_len(vol.count(), vol.height(), vol.width()));

        let (from_dense, m1) = decode_dense(&dense).unwrap();
        let (from_sparse, m2) = decode_sparse(&sparse).unwrap();
        prop_assert_eq!(&from_dense, &vol);
        prop_assert_eq!(&from_sparse, &vol);
        prop_assert_eq!(&m1, &meta);
        prop_assert_eq!(&m2, &meta);

        // canonical byte form
        prop_assert_eq!(encode_dense(&from_dense, &m1).unwrap(), dense.clone());
        prop_assert_eq!(dense_to_sparse(&dense).unwrap(), sparse.clone());
        prop_assert_eq!(sparse_to_dense(&sparse).unwrap(), dense);
    }

    #[test]
    fn file_size_is_linear_in_timesteps(h in 1usize..64, w in 1usize..64, t in 1usize..8) {
        let one = dense_file_len(1, h, w) - DENSE_HEADER_LEN;
        prop_assert_eq!(dense_file_len(t, h, w) - DENSE_HEADER_LEN, t * one);
    }

    #[test]
    fn truncation_is_always_detected(vol in volume_strategy(), cut in 1usize..64) {
        let meta = FileMeta::default();
        let dense = encode_dense(&vol, &meta).unwrap();
        let sparse = encode_sparse(&vol, &meta).unwrap();
        let dense_cut = &dense[..dense.len().saturating_sub(cut)];
        prop_assert!(decode_dense(dense_cut).is_err());
        if sparse.len() > SPARSE_HEADER_LEN {
            let sparse_cut = &sparse[..sparse.len() - cut.min(sparse.len() - SPARSE_HEADER_LEN)];
            prop_assert!(decode_sparse(sparse_cut).is_err());
        }
    }
}

#[test]
fn sparse_record_bytes_at_five_percent() {
    // deterministic 5% event pattern at 224x224, T=8
    let mut vol = EventVolume::zeros(8, 224, 224);
    let mut state = 1u64;
    let mut n = 0;
    for t in 0..8 {
        for y in 0..224 {
            for x in 0..224 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                if u < 0.10 {
                    let p = if u < 0.05 { Polarity::On } else { Polarity::Off };
                    vol.set(t, p, x, y, true);
                    n += 1;
                }
            }
        }
    }
    assert_eq!(vol.count(), n);
    let meta = FileMeta::from_config(&ConversionConfig::default(), [0; 32]);
    let sparse = encode_sparse(&vol, &meta).unwrap();
    let dense = encode_dense(&vol, &meta).unwrap();
    assert_eq!(sparse.len() - SPARSE_HEADER_LEN, 4 * n);
    assert_eq!(dense.len() - DENSE_HEADER_LEN, 100_352);
    assert_eq!(decode_sparse(&sparse).unwrap().0, decode_dense(&dense).unwrap().0);
    assert_eq!(formats::decode(&sparse).unwrap().0, vol);
}
