use proptest::prelude::*;
use std::collections::HashSet;
use vaa_core::dataset::{binarize_value, encode_likert, mask, split, SplitMaskConfig, TestSize};
use vaa_core::ReactionMatrix;

fn likert_matrix(n_users: usize, n_q: usize, cells: &[u8]) -> ReactionMatrix {
    let users = (0..n_users).map(|u| format!("u{u}")).collect();
    let qs = (0..n_q).map(|j| format!("q{j}")).collect();
    let values = (0..n_users * n_q)
        .map(|i| Some(f64::from(cells[i % cells.len()] % 4) / 3.0))
        .collect();
    ReactionMatrix::new(users, qs, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_is_a_partition(n_users in 2usize..60, n_q in 1usize..8, frac in 0.05f64..0.95, seed in any::<u64>(), cells in prop::collection::vec(any::<u8>(), 1..32)) {
        let m = likert_matrix(n_users, n_q, &cells);
        let cfg = SplitMaskConfig { test_size: TestSize::Fraction(frac), seed, ..SplitMaskConfig::default() };
        let (train, test) = split(&m, &cfg).unwrap();
        let expect = (frac * n_users as f64).round() as usize;
        prop_assert_eq!(test.n_users(), expect);
        prop_assert_eq!(train.n_users() + test.n_users(), n_users);
        let a: HashSet<&String> = train.user_ids().iter().collect();
        let b: HashSet<&String> = test.user_ids().iter().collect();
        prop_assert!(a.is_disjoint(&b));
        for part in [&train, &test] {
            for (r, id) in part.user_ids().iter().enumerate() {
                let u: usize = id[1..].parse().unwrap();
                prop_assert_eq!(part.row(r), m.row(u));
            }
        }
        let again = split(&m, &cfg).unwrap();
        prop_assert_eq!(again.1.user_ids(), test.user_ids());
    }

    #[test]
    fn mask_removes_the_rounded_count(n_users in 1usize..30, n_q in 1usize..10, s in 0.0f64..0.99, seed in any::<u64>()) {
        let m = likert_matrix(n_users, n_q, &[0, 1, 2, 3, 2]);
        let masked = mask(&m, s, seed).unwrap();
        let expect = (s * m.n_cells() as f64).round() as usize;
        prop_assert_eq!(m.present_count() - masked.present_count(), expect);
        prop_assert_eq!(m.masked_cells(&masked).len(), expect);
        for (u, j) in masked.present_cells() {
            prop_assert_eq!(masked.get(u, j), m.get(u, j));
        }
        prop_assert_eq!(mask(&m, s, seed).unwrap(), masked);
    }

    #[test]
    fn csv_round_trip(n_users in 1usize..12, n_q in 1usize..6, cells in prop::collection::vec(0u8..5, 1..40)) {
        let users = (0..n_users).map(|u| format!("user {u}")).collect();
        let qs = (0..n_q).map(|j| format!("q,{j}")).collect();
        let values = (0..n_users * n_q)
            .map(|i| match cells[i % cells.len()] { 4 => None, k => Some(f64::from(k) / 3.0) })
            .collect();
        let m = ReactionMatrix::new(users, qs, values).unwrap();
        let mut buf = Vec::new();
        m.to_csv_writer(&mut buf).unwrap();
        let back = ReactionMatrix::from_csv_reader(buf.as_slice()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn binarize_thresholds_at_one_half(r in 0.0f64..=1.0) {
        prop_assert_eq!(binarize_value(r), if r >= 0.5 { 1.0 } else { 0.0 });
    }
}

#[test]
fn four_level_scale_binarizes_to_its_upper_half() {
    let encoded: Vec<f64> = (0..4).map(|k| encode_likert(k, 4).unwrap()).collect();
    assert_eq!(encoded, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
    let bin: Vec<f64> = encoded.iter().map(|&r| binarize_value(r)).collect();
    assert_eq!(bin, vec![0.0, 0.0, 1.0, 1.0]);
    assert!(encode_likert(4, 4).is_err());
    assert!(encode_likert(0, 1).is_err());
}

#[test]
fn split_rejects_incomplete_input() {
    let m = ReactionMatrix::new(vec!["a".into(), "b".into()], vec!["q".into()], vec![Some(1.0), None]).unwrap();
    assert!(split(&m, &SplitMaskConfig::default()).is_err());
    assert!(mask(&m, 1.0, 0).is_err());
}
