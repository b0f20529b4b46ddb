mod common;

use common::toy_from_seed;
use proptest::prelude::*;
use vaa_core::latent::IdealModel;
use vaa_core::{LatentGrid, LikelihoodTable, PosteriorBelief};

fn answers_from(n_q: usize, mask: u32, bits: u32, rotate: usize) -> Vec<(usize, bool)> {
    let mut a: Vec<(usize, bool)> = (0..n_q)
        .filter(|j| mask >> j & 1 == 1)
        .map(|j| (j, bits >> j & 1 == 1))
        .collect();
    if !a.is_empty() {
        let k = rotate % a.len();
        a.rotate_left(k);
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn iterative_equals_batch_equals_direct(seed in any::<u64>(), mask in any::<u32>(), bits in any::<u32>(), rot in 0usize..8) {
        let toy = toy_from_seed(seed, 81, 6);
        let engine = toy.engine();
        let answers = answers_from(toy.n_questions(), mask, bits, rot);
        let mut it = PosteriorBelief::prior(engine.grid());
        for &(j, y) in &answers {
            it = it.update(engine.table(), j, y).unwrap();
        }
        let batch = PosteriorBelief::batch(engine.grid(), engine.table(), answers.iter().copied()).unwrap();
        let direct = toy.posterior(&answers);
        for ((a, b), d) in it.mass().iter().zip(batch.mass()).zip(&direct) {
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!((a - d).abs() < 1e-9);
        }
        prop_assert!((it.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn law_of_total_variance(seed in any::<u64>(), mask in any::<u32>(), bits in any::<u32>(), q in 0usize..6) {
        let toy = toy_from_seed(seed, 81, 6);
        let engine = toy.engine();
        let answers = answers_from(toy.n_questions(), mask, bits, 0);
        let j = q % toy.n_questions();
        prop_assume!(!answers.iter().any(|(a, _)| *a == j));
        let grid = engine.grid();
        let b = PosteriorBelief::batch(grid, engine.table(), answers.iter().copied()).unwrap();
        let p = b.predictive(engine.table(), j);
        let yes = b.update(engine.table(), j, true).unwrap();
        let no = b.update(engine.table(), j, false).unwrap();
        let m = b.mean(grid);
        let (my, mn) = (yes.mean(grid), no.mean(grid));
        let between = p * ((my[0] - m[0]).powi(2) + (my[1] - m[1]).powi(2))
            + (1.0 - p) * ((mn[0] - m[0]).powi(2) + (mn[1] - m[1]).powi(2));
        let within = p * yes.spatial_variance(grid) + (1.0 - p) * no.spatial_variance(grid);
        prop_assert!((b.spatial_variance(grid) - (within + between)).abs() < 1e-9);
        // The predictive of the mixture is the mixture of predictives.
        for k in 0..toy.n_questions() {
            let mix = p * yes.predictive(engine.table(), k) + (1.0 - p) * no.predictive(engine.table(), k);
            prop_assert!((b.predictive(engine.table(), k) - mix).abs() < 1e-9);
        }
    }

    #[test]
    fn predictive_is_a_probability(seed in any::<u64>(), mask in any::<u32>(), bits in any::<u32>()) {
        let toy = toy_from_seed(seed, 81, 6);
        let engine = toy.engine();
        let answers = answers_from(toy.n_questions(), mask, bits, 0);
        let b = PosteriorBelief::batch(engine.grid(), engine.table(), answers).unwrap();
        for p in b.predictive_all(engine.table()) {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        prop_assert!(b.spatial_variance(engine.grid()) >= 0.0);
    }
}

/// Variance of one standard-normal coordinate truncated to [-3, 3], by
/// composite Simpson integration.
fn truncated_normal_variance() -> f64 {
    let n = 200_000;
    let h = 6.0 / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=n {
        let x = -3.0 + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = (-0.5 * x * x).exp();
        num += w * x * x * f;
        den += w * f;
    }
    num / den
}

#[test]
fn prior_variance_approaches_truncated_normal() {
    let exact = 2.0 * truncated_normal_variance();
    assert!((exact - 1.946_673_849_325_083).abs() < 1e-9, "{exact}");
    let errs: Vec<f64> = [31, 61, 121, 241]
        .iter()
        .map(|&g| {
            let grid = LatentGrid::new(g).unwrap();
            PosteriorBelief::prior(&grid).spatial_variance(&grid) - exact
        })
        .collect();
    // Point masses on the boundary make the error first order in the spacing.
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.85..2.15).contains(&ratio), "{errs:?}");
    }
    assert!(errs[1].abs() < 7e-3 && errs[3].abs() < 2e-3, "{errs:?}");
}

#[test]
fn decisive_answer_moves_mass_across_the_boundary() {
    let model = IdealModel::new(vec!["q".into()], vec![0.0], vec![[3.0, 0.0]]).unwrap();
    let grid = LatentGrid::new(61).unwrap();
    let table = LikelihoodTable::from_model(&model, &grid);
    let b = PosteriorBelief::prior(&grid).update(&table, 0, true).unwrap();
    let side = |keep: fn(f64) -> bool| -> f64 {
        b.mass()
            .iter()
            .zip(grid.points())
            .filter(|(_, p)| keep(p[0]))
            .map(|(m, _)| m)
            .sum()
    };
    // P(x₁ > 0 | yes) = 1/2 + atan(3)/π for a standard normal prior.
    let right = side(|x| x > 0.0) + 0.5 * side(|x| x == 0.0);
    assert!(
        (right - (0.5 + 3f64.atan() / std::f64::consts::PI)).abs() < 5e-3,
        "{right}"
    );
    assert!(b.map_point(&grid)[0] > 0.0);
    let export = b.export(&grid);
    assert_eq!(export.resolution, 61);
    assert_eq!(export.mass.len(), 3721);
    let total: f64 = export.mass.iter().sum();
    assert!((total - 1.0).abs() < 1e-6);
}

#[test]
fn evidence_matches_quadrature_of_the_prior() {
    let model = IdealModel::new(
        vec!["a".into(), "b".into()],
        vec![0.4, -0.2],
        vec![[1.2, -0.3], [0.0, 0.0]],
    )
    .unwrap();
    let grid = LatentGrid::new(61).unwrap();
    let table = LikelihoodTable::from_model(&model, &grid);
    let prior = PosteriorBelief::prior(&grid);
    for j in 0..2 {
        assert!((grid.evidence(&model, j) - prior.predictive(&table, j)).abs() < 1e-12);
    }
    // A flat question answers yes with probability Φ(−α) everywhere.
    let flat = prior.predictive(&table, 1);
    assert!((flat - 0.579259709439103).abs() < 1e-12, "{flat}");
}
