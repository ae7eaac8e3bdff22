//! Metric-space properties of the two evaluation distances, checked on
//! random triples.

use drumgen_core::ae::LatentVec;
use drumgen_core::eval::{euclidean_latent, hamming, intra_set};
use drumgen_core::midi::{BinaryPianoroll, CELLS};
use proptest::prelude::*;

fn bits() -> impl Strategy<Value = BinaryPianoroll> {
    proptest::collection::vec(proptest::bool::weighted(0.2), CELLS)
        .prop_map(|v| BinaryPianoroll::from_bits(v.iter().map(|&b| b as u8).collect()).unwrap())
}

fn latent() -> impl Strategy<Value = LatentVec> {
    proptest::collection::vec(-5.0f32..5.0, 128).prop_map(LatentVec)
}

proptest! {
    #[test]
    fn hamming_is_a_metric(a in bits(), b in bits(), c in bits()) {
        prop_assert_eq!(hamming(&a, &a), 0);
        prop_assert_eq!(hamming(&a, &b), hamming(&b, &a));
        prop_assert!(hamming(&a, &c) <= hamming(&a, &b) + hamming(&b, &c));
    }

    #[test]
    fn euclidean_is_a_metric(a in latent(), b in latent(), c in latent()) {
        prop_assert_eq!(euclidean_latent(&a, &a), 0.0);
        prop_assert_eq!(euclidean_latent(&a, &b), euclidean_latent(&b, &a));
        prop_assert!(
            euclidean_latent(&a, &c) <= euclidean_latent(&a, &b) + euclidean_latent(&b, &c) + 1e-9
        );
    }

    #[test]
    fn intra_set_length_is_n_choose_2(n in 2usize..20) {
        let items: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let d = intra_set(&items, |a, b| (a - b).abs()).unwrap();
        prop_assert_eq!(d.len(), n * (n - 1) / 2);
    }
}
