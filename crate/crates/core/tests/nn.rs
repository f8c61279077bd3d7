mod common;

use proptest::prelude::*;
use rfsynth::nn::{read_checkpoint, softplus, write_checkpoint, MlpModel, NormStats};

#[test]
fn analytic_gradients_match_finite_differences() {
    for (widths, seed) in [(vec![5, 4], 1), (vec![8, 6, 3], 2), (vec![4, 7, 4, 3], 3)] {
        let e = common::gradient_check(&widths, seed);
        assert!(e < 1e-3, "widths {widths:?}: relative error {e}");
    }
}

#[test]
fn forward_is_pure() {
    let (model, stats, rows, _) = common::random_net(&[6, 5], 9);
    let a = model.forward_batch(&stats, &rows).unwrap();
    let b = model.forward_batch(&stats, &rows).unwrap();
    assert_eq!(a, b);
    let singles: Vec<f64> = rows.iter().map(|r| model.forward(&stats, r).unwrap()).collect();
    for (x, y) in a.iter().zip(&singles) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn checkpoint_bytes_round_trip() {
    let (model, stats, rows, _) = common::random_net(&[6, 5], 4);
    let mut buf = Vec::new();
    write_checkpoint(&model, &stats, &mut buf).unwrap();
    let (m2, s2) = read_checkpoint(buf.as_slice(), Some(&[6, 5])).unwrap();
    assert_eq!(s2, stats);
    assert_eq!(m2.forward_batch(&s2, &rows).unwrap(), model.forward_batch(&stats, &rows).unwrap());
    assert!(read_checkpoint(buf.as_slice(), Some(&[6, 6])).is_err());
    assert!(read_checkpoint(&buf[..buf.len() - 3], None).is_err());
}

#[test]
fn paper_model_size() {
    let m = MlpModel::paper(0);
    assert_eq!(m.widths(), vec![256, 256, 256, 128, 128, 128, 64, 64, 64, 32]);
    // dense weights and biases plus LayerNorm gain and shift
    let dense: usize = [6, 256, 256, 256, 128, 128, 128, 64, 64, 64, 32]
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum::<usize>()
        + 33;
    let ln: usize = 2 * (256 * 3 + 128 * 3 + 64 * 3 + 32);
    assert_eq!(m.param_count(), dense + ln);
}

proptest! {
    #[test]
    fn softplus_positive_and_increasing(a in -700.0..700.0f64, d in 1e-6..10.0f64) {
        prop_assert!(softplus(a) > 0.0);
        prop_assert!(softplus(a + d) >= softplus(a));
    }

    #[test]
    fn normalization_round_trip(rows in proptest::collection::vec(proptest::array::uniform6(-1e3..1e3f64), 2..20)) {
        prop_assume!((0..6).all(|j| rows.iter().any(|r| (r[j] - rows[0][j]).abs() > 1e-3)));
        let stats = NormStats::from_rows(&rows).unwrap();
        for r in &rows {
            let back = stats.denormalize(&stats.normalize(r));
            for (a, b) in back.iter().zip(r) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
