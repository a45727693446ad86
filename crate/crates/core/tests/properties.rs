use proptest::prelude::*;
use swar_guidance::guidance::{igg_field, mixed_field};
use swar_guidance::*;

fn pair_strategy(max_side: usize, max_vocab: usize) -> impl Strategy<Value = (LogitTensorF64, LogitTensorF64)> {
    (1..=max_side, 1..=max_side, 2..=max_vocab).prop_flat_map(|(h, w, v)| {
        let n = h * w * v;
        (
            prop::collection::vec(-8.0f64..8.0, n),
            prop::collection::vec(-8.0f64..8.0, n),
        )
            .prop_map(move |(u, c)| {
                let vocab = VocabSpec::new(v).unwrap();
                (
                    LogitTensor::new(h, w, vocab, u).unwrap(),
                    LogitTensor::new(h, w, vocab, c).unwrap(),
                )
            })
    })
}

fn dist_strategy(n: usize) -> impl Strategy<Value = TokenGuidanceDistF64> {
    prop::collection::vec(0.0f64..1.0, n)
        .prop_filter("non-zero mass", |w| w.iter().sum::<f64>() > 1e-6)
        .prop_map(|w| TokenGuidanceDist::from_weights(&w).unwrap())
}

fn permute_positions(t: &LogitTensorF64, perm: &[usize]) -> LogitTensorF64 {
    let values = perm.iter().flat_map(|&p| t.row(p).to_vec()).collect();
    LogitTensor::new(1, perm.len(), t.vocab(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cfg_is_uncond_plus_nudge((u, c) in pair_strategy(6, 24), lambda in -1.0f64..6.0) {
        let guided = cfg_guide(&u, &c, lambda).unwrap();
        let field = nudge(&u, &c, 1.0 + lambda).unwrap();
        let rebuilt = u.add_field(&field).unwrap();
        for (a, b) in guided.values().iter().zip(rebuilt.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn attention_rows_are_stochastic((u, c) in pair_strategy(5, 32), gamma in 0.0f64..4.0) {
        let field = nudge(&u, &c, gamma).unwrap();
        let a = attention_weights(&field, u.vocab()).unwrap();
        for i in 0..a.n() {
            let row = a.row(i);
            prop_assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn windowed_rows_are_stochastic_and_local((u, c) in pair_strategy(6, 8), window in 1usize..5) {
        let field = nudge(&u, &c, 1.5).unwrap();
        let a = attention_weights_windowed(&field, u.vocab(), window).unwrap();
        let w = field.width();
        for i in 0..a.n() {
            prop_assert!((a.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            for j in 0..a.n() {
                let d = (i / w).abs_diff(j / w).max((i % w).abs_diff(j % w));
                if d > window / 2 {
                    prop_assert_eq!(a.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn wide_window_equals_global((u, c) in pair_strategy(6, 8), gamma in 0.5f64..3.0) {
        let side = u.height().max(u.width());
        let global = igg_field(&u, &c, gamma, u.vocab(), None).unwrap();
        let windowed = igg_field(&u, &c, gamma, u.vocab(), Some(2 * side)).unwrap();
        prop_assert_eq!(global.values(), windowed.values());
    }

    #[test]
    fn igg_is_permutation_equivariant(
        (u, c) in pair_strategy(4, 12),
        seed in any::<u64>(),
    ) {
        // flatten onto a single row so any permutation is a reordering of positions
        let n = u.positions();
        let flat = |t: &LogitTensorF64| LogitTensor::new(1, n, t.vocab(), t.values().to_vec()).unwrap();
        let (u, c) = (flat(&u), flat(&c));
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let base = igg_field(&u, &c, 2.0, u.vocab(), None).unwrap();
        let permuted = igg_field(&permute_positions(&u, &perm), &permute_positions(&c, &perm), 2.0, u.vocab(), None).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            for (a, b) in permuted.row(i).iter().zip(base.row(p)) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn larger_vocab_flattens_attention((u, c) in pair_strategy(4, 16), v2 in 17usize..512) {
        let field = nudge(&u, &c, 2.0).unwrap();
        let entropy = |a: &AttentionMatrixF64, i: usize| -> f64 {
            a.row(i).iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
        };
        let sharp = attention_weights(&field, u.vocab()).unwrap();
        // same nudges, softmax temperature from a bigger vocabulary
        let wide = GuidanceField::new(field.height(), field.width(), VocabSpec::new(v2).unwrap(), {
            let mut vals = Vec::new();
            for row in field.rows() {
                vals.extend_from_slice(row);
                vals.extend(std::iter::repeat_n(0.0, v2 - row.len()));
            }
            vals
        })
        .unwrap();
        let flat = attention_weights(&wide, wide.vocab()).unwrap();
        for i in 0..sharp.n() {
            prop_assert!(entropy(&flat, i) >= entropy(&sharp, i) - 1e-9);
        }
    }

    #[test]
    fn identity_attention_collapses_to_cfg((u, c) in pair_strategy(5, 16), lambda in 0.0f64..4.0) {
        let field = nudge(&u, &c, 1.0 + lambda).unwrap();
        let via_identity = u.add_field(&AttentionMatrix::identity(field.positions()).apply(&field).unwrap()).unwrap();
        let cfg = cfg_guide(&u, &c, lambda).unwrap();
        for (a, b) in via_identity.values().iter().zip(cfg.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn mixed_reduces_to_each_part((u, c) in pair_strategy(5, 16), g in 0.5f64..4.0) {
        let vocab = u.vocab();
        let no_igg = mixed_field(&u, &c, g, 0.0, vocab).unwrap();
        let cfg = nudge(&u, &c, g).unwrap();
        for (a, b) in no_igg.values().iter().zip(cfg.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let no_cfg = mixed_field(&u, &c, 0.0, g, vocab).unwrap();
        let igg = igg_field(&u, &c, g, vocab, None).unwrap();
        for (a, b) in no_cfg.values().iter().zip(igg.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn evenness_is_bounded(p in (2usize..64).prop_flat_map(dist_strategy)) {
        let e = pielou_evenness(&p).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn evenness_ignores_scaling(w in prop::collection::vec(0.01f64..1.0, 2..40), k in 0.1f64..100.0) {
        let a = pielou_evenness(&TokenGuidanceDist::from_weights(&w).unwrap()).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| x * k).collect();
        let b = pielou_evenness(&TokenGuidanceDist::from_weights(&scaled).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn jsd_is_a_bounded_symmetric_metric(
        (p, q, r) in (2usize..32).prop_flat_map(|n| (dist_strategy(n), dist_strategy(n), dist_strategy(n)))
    ) {
        let pq = jsd(&p, &q).unwrap();
        let qp = jsd(&q, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert!((pq - qp).abs() <= 1e-12);
        prop_assert!(jsd(&p, &p).unwrap().abs() <= 1e-12);
        let (a, b, c) = (pq, jsd(&q, &r).unwrap(), jsd(&p, &r).unwrap());
        prop_assert!(c <= a + b + 1e-9);
    }

    #[test]
    fn f32_and_f64_agree((u, c) in pair_strategy(4, 16)) {
        let f64_field = igg_field(&u, &c, 1.85, u.vocab(), None).unwrap();
        let (u32_, c32) = (u.cast::<f32>(), c.cast::<f32>());
        let f32_field = igg_field(&u32_, &c32, 1.85f32, u.vocab(), None).unwrap();
        for (a, b) in f64_field.values().iter().zip(f32_field.values()) {
            prop_assert!((a - *b as f64).abs() <= 1e-3 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn downsampled_mask_keeps_extremes(h in 1usize..20, w in 1usize..20, th in 1usize..20, tw in 1usize..20) {
        prop_assume!(th <= h && tw <= w);
        let full = SegMask::from_fn(h, w, |_, _| true);
        prop_assert_eq!(downsample_mask(&full, th, tw).unwrap().foreground_count(), th * tw);
        let empty = SegMask::from_fn(h, w, |_, _| false);
        prop_assert_eq!(downsample_mask(&empty, th, tw).unwrap().foreground_count(), 0);
    }
}
