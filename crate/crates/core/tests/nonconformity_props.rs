mod common;

use common::{classes, random_regression};
use conformal_core::nonconformity::{knn_scores, residual_scores};
use conformal_core::rrcm::residual_lines;
use conformal_core::{Dataset, Example, KernelSpec, KnnConfig, KnnIndex, Label, LabelSpace, RidgeConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn class_data() -> impl Strategy<Value = (Vec<(Vec<f64>, usize)>, usize)> {
    (2usize..4, 1usize..3).prop_flat_map(|(alphabet, dim)| {
        (
            prop::collection::vec(
                (prop::collection::vec(-5.0f64..5.0, dim), 0..alphabet),
                2..12,
            ),
            Just(alphabet),
        )
    })
}

fn to_dataset(rows: &[(Vec<f64>, usize)], alphabet: usize) -> Dataset {
    let dim = rows[0].0.len();
    let examples = rows.iter().map(|(x, y)| Example::class(x.clone(), *y)).collect();
    Dataset::new(dim, classes(alphabet), examples).unwrap()
}

fn kernels() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::Linear),
        Just(KernelSpec::Polynomial { degree: 2, offset: 1.0 }),
        (0.05f64..2.0).prop_map(|gamma| KernelSpec::Rbf { gamma }),
    ]
}

proptest! {
    #[test]
    fn knn_transposition_moves_scores((rows, alphabet) in class_data(), k in 1usize..4, kernel in kernels(),
                                      i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let cfg = KnnConfig::new(k, kernel).unwrap();
        let base = knn_scores(&to_dataset(&rows, alphabet), &cfg).unwrap().0;
        let (i, j) = (i.index(rows.len()), j.index(rows.len()));
        let mut swapped = rows.clone();
        swapped.swap(i, j);
        let mut expected = base.clone();
        expected.swap(i, j);
        let got = knn_scores(&to_dataset(&swapped, alphabet), &cfg).unwrap().0;
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn knn_ignores_symbol_names((rows, alphabet) in class_data(), k in 1usize..4, shift in 1usize..3) {
        let cfg = KnnConfig::new(k, KernelSpec::Linear).unwrap();
        let base = knn_scores(&to_dataset(&rows, alphabet), &cfg).unwrap();
        let renamed: Vec<_> = rows.iter().map(|(x, y)| (x.clone(), (y + shift) % alphabet)).collect();
        prop_assert_eq!(knn_scores(&to_dataset(&renamed, alphabet), &cfg).unwrap(), base);
    }

    #[test]
    fn residual_transposition_moves_scores(seed in any::<u64>(), l in 1usize..10, p in 1usize..4,
                                           a in prop_oneof![Just(0.1f64), Just(1.0), Just(10.0)],
                                           i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_regression(l, p, &mut rng);
        let cfg = RidgeConfig::primal(a).unwrap();
        let base = residual_scores(&data, &cfg).unwrap().0;
        let (i, j) = (i.index(l), j.index(l));
        let mut rows = data.examples().to_vec();
        rows.swap(i, j);
        let swapped = Dataset::new(p, LabelSpace::RealLine, rows).unwrap();
        let got = residual_scores(&swapped, &cfg).unwrap().0;
        let mut expected = base;
        expected.swap(i, j);
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g - e).abs() <= 1e-9 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn index_matches_brute_force((rows, alphabet) in class_data(), k in 1usize..4, kernel in kernels(),
                                 probe in prop::collection::vec(-5.0f64..5.0, 2)) {
        let dim = rows[0].0.len();
        let cfg = KnnConfig::new(k, kernel).unwrap();
        let mut index = KnnIndex::new(cfg, alphabet);
        for (x, y) in &rows {
            index.insert(x.clone(), conformal_core::ClassLabel(*y)).unwrap();
        }
        let object = &probe[..dim];
        let completed = index.completed_scores(object);
        prop_assert_eq!(completed.len(), alphabet);
        let training = to_dataset(&rows, alphabet);
        for (y, scores) in completed.iter().enumerate() {
            let seq = training.complete(object, Label::Class(conformal_core::ClassLabel(y))).unwrap();
            let brute = knn_scores(&seq, &cfg).unwrap();
            prop_assert_eq!(scores.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            brute.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}

#[test]
fn residual_lines_match_refit() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for problem in 0..20 {
        let l = 1 + problem % 10;
        let p = 1 + problem % 3;
        let data = random_regression(l, p, &mut rng);
        let object: Vec<f64> = (0..p).map(|j| j as f64 - 0.5 * problem as f64 / 10.0).collect();
        let cfg = RidgeConfig::primal([0.1, 1.0, 10.0][problem % 3]).unwrap();
        let lines = residual_lines(&data, &object, &cfg).unwrap();
        assert_eq!(lines.len(), l + 1);
        for y in [-7.5, -1.0, 0.0, 0.3, 12.0] {
            let seq = data.complete(&object, Label::Real(y)).unwrap();
            let refit = residual_scores(&seq, &cfg).unwrap().0;
            for (line, r) in lines.iter().zip(&refit) {
                assert!((line.at(y).abs() - r).abs() <= 1e-9, "problem {problem}, y {y}");
            }
        }
    }
}

#[test]
fn kernel_residual_lines_match_refit() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let kernels = [KernelSpec::Linear, KernelSpec::Polynomial { degree: 2, offset: 1.0 }, KernelSpec::Rbf { gamma: 0.3 }];
    for (problem, kernel) in kernels.iter().cycle().take(9).enumerate() {
        let data = random_regression(3 + problem, 2, &mut rng);
        let cfg = RidgeConfig::kernel(0.5, *kernel).unwrap();
        let object = [0.25, -1.5];
        let lines = residual_lines(&data, &object, &cfg).unwrap();
        for y in [-3.0, 0.0, 4.5] {
            let seq = data.complete(&object, Label::Real(y)).unwrap();
            let refit = residual_scores(&seq, &cfg).unwrap().0;
            for (line, r) in lines.iter().zip(&refit) {
                assert!((line.at(y).abs() - r).abs() <= 1e-9);
            }
        }
    }
}
