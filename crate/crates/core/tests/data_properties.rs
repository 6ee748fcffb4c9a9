use proptest::prelude::*;
use sketchvote::data::{
    class_histogram, clean_by_guess_rate, load_embedding_set, rebalance_classes,
    save_embedding_set, stratified_split_indices, EmbeddingSet, SampleMeta, SplitSpec,
};

fn arb_set(max_classes: usize, max_n: usize) -> impl Strategy<Value = EmbeddingSet> {
    (1..=max_classes, 1usize..=6).prop_flat_map(move |(classes, d)| {
        prop::collection::vec(
            (0..classes as u32, prop::collection::vec(-1e6f32..1e6, d)),
            1..=max_n,
        )
        .prop_map(move |rows| {
            let labels = rows.iter().map(|r| r.0).collect();
            let data = rows.into_iter().flat_map(|r| r.1).collect();
            let names = (0..classes).map(|c| format!("label \"{c}\", x")).collect();
            EmbeddingSet::new(d, data, labels, names).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_load_is_identity(set in arb_set(5, 40)) {
        let dir = tempfile::tempdir().unwrap();
        save_embedding_set(&set, dir.path()).unwrap();
        let back = load_embedding_set(dir.path()).unwrap();
        prop_assert_eq!(&back, &set);
        let again = tempfile::tempdir().unwrap();
        save_embedding_set(&back, again.path()).unwrap();
        for f in ["meta.json", "embeddings.f32", "labels.u32"] {
            prop_assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(again.path().join(f)).unwrap());
        }
    }

    #[test]
    fn clean_matches_brute_force_filter(set in arb_set(4, 50), seed in any::<u64>(), threshold in 0.0f64..=1.0) {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let metas: Vec<SampleMeta> = (0..set.n())
            .map(|i| SampleMeta { sample_id: i.to_string(), label_id: set.labels()[i], guess_rate: r.random() })
            .collect();
        let out = clean_by_guess_rate(&set, &metas, threshold).unwrap();
        let mut expected = Vec::new();
        for (i, m) in metas.iter().enumerate() {
            if m.guess_rate >= threshold {
                expected.extend_from_slice(set.row(i));
            }
        }
        prop_assert_eq!(out.data(), expected.as_slice());
        // subsequence of the input and idempotent
        let kept: Vec<SampleMeta> = metas.iter().filter(|m| m.guess_rate >= threshold).cloned().collect();
        prop_assert_eq!(clean_by_guess_rate(&out, &kept, threshold).unwrap(), out);
    }

    #[test]
    fn rebalance_equalises_with_same_class_copies(set in arb_set(4, 40), seed in any::<u64>()) {
        prop_assume!(set.class_counts().iter().all(|&c| c > 0));
        let out = rebalance_classes(&set, seed).unwrap();
        let max = *set.class_counts().iter().max().unwrap();
        prop_assert!(out.class_counts().iter().all(|&c| c == max));
        for i in 0..out.n() {
            let found = (0..set.n()).any(|j| set.label(j) == out.label(i) && set.row(j) == out.row(i));
            prop_assert!(found);
        }
        prop_assert_eq!(rebalance_classes(&set, seed).unwrap(), out);
    }

    #[test]
    fn histogram_matches_tally(set in arb_set(8, 60), bins in 1usize..12) {
        let h = class_histogram(&set, bins).unwrap();
        let mut tally = vec![0; set.num_classes()];
        for &l in set.labels() {
            tally[l as usize] += 1;
        }
        prop_assert_eq!(&h.counts, &tally);
        prop_assert_eq!(h.bin_counts.iter().sum::<usize>(), set.num_classes());
        prop_assert_eq!(h.edges.len(), bins + 1);
    }
}

/// Partition, global sizes and per-class stratification over 50 random
/// label vectors.
#[test]
fn split_partitions_and_stratifies() {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let classes = r.random_range(1..8usize);
        let n = r.random_range(30..400usize);
        let labels: Vec<u32> = (0..n).map(|_| r.random_range(0..classes as u32)).collect();
        let spec = SplitSpec {
            seed: trial,
            ..Default::default()
        };
        let [train, val, test] = stratified_split_indices(&labels, classes, &spec).unwrap();

        let mut all: Vec<usize> = train.iter().chain(&val).chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(
            all,
            (0..n).collect::<Vec<_>>(),
            "trial {trial}: not a partition"
        );

        assert_eq!(val.len(), (n as f64 * 0.1 + 1e-9).floor() as usize);
        assert_eq!(test.len(), (n as f64 * 0.1 + 1e-9).floor() as usize);
        assert!((val.len() as f64 - n as f64 * 0.1).abs() < 1.0);

        let realized = train.len() as f64 / n as f64;
        for c in 0..classes as u32 {
            let m = labels.iter().filter(|&&l| l == c).count();
            let t = train.iter().filter(|&&i| labels[i] == c).count();
            let gap = (t as f64 - m as f64 * realized).abs();
            assert!(
                gap <= 1.0 + 1e-9,
                "trial {trial} class {c}: {t} of {m} vs fraction {realized}"
            );
        }
    }
}
