mod common;

use common::oracle;
use fkm_core::fkm::restart_init;
use fkm_core::{
    assign_subjects, ccr, empirical_loss, fit, fit_once, penalized_objective, random_initial_assignment,
    update_centers, Assignment, BasisKind, BasisSystem, ClusterModel, FitConfig, SparseFunctionalDataset,
    SubjectRecord, TimeTransform, WeightScheme,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Subjects on `[0, 1]` scattered around one of a few smooth shapes.
fn random_dataset(rng: &mut ChaCha8Rng, n: usize, obs: std::ops::RangeInclusive<usize>) -> SparseFunctionalDataset {
    let subjects = (0..n)
        .map(|i| {
            let shape = rng.random_range(0..3) as f64;
            let ni = rng.random_range(obs.clone());
            let times: Vec<f64> = (0..ni).map(|_| rng.random::<f64>()).collect();
            let values = times
                .iter()
                .map(|&t| (2.0 * t + shape).sin() * (1.0 + shape) + rng.random_range(-0.3..0.3))
                .collect();
            SubjectRecord::new(format!("s{i}"), times, values)
        })
        .collect();
    SparseFunctionalDataset::with_domain(subjects, 0.0, 1.0).unwrap()
}

fn random_basis(rng: &mut ChaCha8Rng) -> BasisSystem {
    if rng.random_bool(0.5) {
        BasisSystem::construct(BasisKind::Fourier, [1, 3, 5, 7][rng.random_range(0..4)], None).unwrap()
    } else {
        BasisSystem::construct(BasisKind::BSpline, rng.random_range(4..=8), Some(4)).unwrap()
    }
}

fn random_model(rng: &mut ChaCha8Rng, basis: &BasisSystem, k: usize) -> ClusterModel {
    let coefficients = (0..k)
        .map(|_| (0..basis.m()).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    ClusterModel::new(basis.clone(), coefficients, TimeTransform::identity()).unwrap()
}

fn subject_rss(basis: &BasisSystem, s: &SubjectRecord, beta: &[f64]) -> f64 {
    s.times
        .iter()
        .zip(&s.values)
        .map(|(&t, &y)| {
            let f: f64 = oracle::phi(basis, t, 0).iter().zip(beta).map(|(p, b)| p * b).sum();
            (y - f).powi(2)
        })
        .sum()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn empirical_loss_matches_double_loop() {
    for seed in 0..40 {
        let mut r = rng(seed);
        let n = r.random_range(1..15);
        let ds = random_dataset(&mut r, n, 1..=6);
        let basis = random_basis(&mut r);
        let k = r.random_range(1..=4);
        let model = random_model(&mut r, &basis, k);
        for scheme in [WeightScheme::Subj, WeightScheme::Obs] {
            let w = oracle::subject_weights(&ds, scheme);
            let mut total = 0.0;
            for (i, s) in ds.subjects().iter().enumerate() {
                let best = model
                    .coefficients
                    .iter()
                    .map(|b| w[i] * subject_rss(&basis, s, b))
                    .fold(f64::INFINITY, f64::min);
                total += best;
            }
            let want = total / ds.n() as f64;
            let got = empirical_loss(&ds, &model, scheme).unwrap();
            assert!(close(got, want, 1e-12), "seed {seed} {scheme:?}: {got} vs {want}");
        }
    }
}

#[test]
fn penalized_objective_matches_quadrature() {
    for seed in 0..30 {
        let mut r = rng(100 + seed);
        let ds = random_dataset(&mut r, 12, 1..=5);
        let basis = random_basis(&mut r);
        let k = r.random_range(1..=3);
        let model = random_model(&mut r, &basis, k);
        let labels: Vec<usize> = (0..ds.n()).map(|_| r.random_range(0..k)).collect();
        let assignment = Assignment::new(labels.clone(), k).unwrap();
        let lambdas: Vec<f64> = (0..k).map(|_| r.random_range(0.0..5.0)).collect();
        let rq = oracle::gram(&basis, 2);
        for scheme in [WeightScheme::Subj, WeightScheme::Obs] {
            let w = oracle::subject_weights(&ds, scheme);
            let mut want = 0.0;
            for (i, s) in ds.subjects().iter().enumerate() {
                want += w[i] * subject_rss(&basis, s, &model.coefficients[labels[i]]);
            }
            for (lam, beta) in lambdas.iter().zip(&model.coefficients) {
                want += lam * oracle::quadratic_form(&rq, beta);
            }
            let got = penalized_objective(&ds, &model, &assignment, &lambdas, scheme).unwrap();
            assert!(close(got, want, 1e-9), "seed {seed}: {got} vs {want}");
        }
    }
}

#[test]
fn center_update_matches_normal_equations() {
    for seed in 0..60 {
        let mut r = rng(200 + seed);
        let basis = random_basis(&mut r);
        let k = r.random_range(1..=3);
        // enough observations per cluster for a full-rank system
        let ds = random_dataset(&mut r, 8 * k, 3..=6);
        let labels: Vec<usize> = (0..ds.n()).map(|i| i % k).collect();
        let assignment = Assignment::new(labels, k).unwrap();
        let lambda = [0.0, 1e-2, 1.0, 30.0][r.random_range(0..4)];
        let scheme = if r.random_bool(0.5) { WeightScheme::Subj } else { WeightScheme::Obs };
        let rq = oracle::gram(&basis, 2);
        let got = update_centers(&ds, &assignment, &basis, &[lambda], scheme).unwrap();
        for (c, beta) in got.iter().enumerate() {
            let want = oracle::center_update(&ds, &assignment.members(c), &basis, &rq, lambda, scheme);
            let norm = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let err = beta.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm;
            assert!(err < 1e-8, "seed {seed} cluster {c}: {err:e}");
        }
    }
}

#[test]
fn center_update_interpolates_exact_data() {
    for seed in 0..20 {
        let mut r = rng(300 + seed);
        let basis = random_basis(&mut r);
        let m = basis.m();
        let truth: Vec<f64> = (0..m).map(|_| r.random_range(-2.0..2.0)).collect();
        let subjects = (0..3)
            .map(|i| {
                let times: Vec<f64> = (0..m + 2).map(|_| r.random::<f64>()).collect();
                let values = times
                    .iter()
                    .map(|&t| oracle::phi(&basis, t, 0).iter().zip(&truth).map(|(p, b)| p * b).sum())
                    .collect();
                SubjectRecord::new(format!("s{i}"), times, values)
            })
            .collect();
        let ds = SparseFunctionalDataset::with_domain(subjects, 0.0, 1.0).unwrap();
        let one = Assignment::new(vec![0; 3], 1).unwrap();
        let got = &update_centers(&ds, &one, &basis, &[0.0], WeightScheme::Subj).unwrap()[0];
        for (g, w) in got.iter().zip(&truth) {
            assert!((g - w).abs() < 1e-8, "seed {seed}: {g} vs {w}");
        }
    }
}

#[test]
fn roughness_falls_as_lambda_grows() {
    let basis = BasisSystem::construct(BasisKind::BSpline, 10, Some(4)).unwrap();
    let r_pen = basis.roughness().unwrap();
    for seed in 0..10 {
        let mut r = rng(400 + seed);
        let ds = random_dataset(&mut r, 20, 3..=8);
        let one = Assignment::new(vec![0; ds.n()], 1).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1.0, 10.0, 1e3] {
            let beta = &update_centers(&ds, &one, &basis, &[lambda], WeightScheme::Subj).unwrap()[0];
            let rough = r_pen.quadratic_form(beta);
            assert!(rough <= last * (1.0 + 1e-9) + 1e-12, "seed {seed} λ={lambda}: {rough} > {last}");
            last = rough;
        }
        assert!(last < 1e-2);
    }
}

#[test]
fn assignment_matches_exhaustive_comparison() {
    for seed in 0..20 {
        let mut r = rng(500 + seed);
        let ds = random_dataset(&mut r, 20, 1..=6);
        let basis = random_basis(&mut r);
        let model = random_model(&mut r, &basis, 3);
        let got = assign_subjects(&ds, &model).unwrap();
        for (i, s) in ds.subjects().iter().enumerate() {
            let d: Vec<f64> = model.coefficients.iter().map(|b| subject_rss(&basis, s, b)).collect();
            let mut best = 0;
            for k in 1..3 {
                if d[k] < d[best] {
                    best = k;
                }
            }
            assert_eq!(got.labels()[i], best, "seed {seed} subject {i}");
            assert_eq!(model.predict(s).unwrap(), best);
        }
    }
}

#[test]
fn permuting_centers_permutes_labels() {
    for seed in 0..20 {
        let mut r = rng(600 + seed);
        let ds = random_dataset(&mut r, 25, 2..=6);
        let basis = random_basis(&mut r);
        let model = random_model(&mut r, &basis, 3);
        let base = assign_subjects(&ds, &model).unwrap();
        let perm = [2usize, 0, 1];
        // center k of the permuted model is old center perm[k]
        let permuted = ClusterModel::new(
            basis.clone(),
            perm.iter().map(|&p| model.coefficients[p].clone()).collect(),
            TimeTransform::identity(),
        )
        .unwrap();
        let moved = assign_subjects(&ds, &permuted).unwrap();
        for (old, new) in base.labels().iter().zip(moved.labels()) {
            assert_eq!(perm[*new], *old);
        }
    }
}

fn bands(n: usize, gap: f64, seed: u64) -> (SparseFunctionalDataset, Vec<usize>) {
    let mut r = rng(seed);
    let mut subjects = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let c = i % 2;
        let ni = r.random_range(2..=5);
        let times: Vec<f64> = (0..ni).map(|_| r.random::<f64>()).collect();
        let values = times.iter().map(|_| c as f64 * gap + r.random_range(-0.1..0.1)).collect();
        subjects.push(SubjectRecord::new(format!("b{i}"), times, values));
        labels.push(c);
    }
    (SparseFunctionalDataset::with_domain(subjects, 0.0, 1.0).unwrap(), labels)
}

#[test]
fn planted_bands_are_recovered() {
    for seed in 0..5 {
        let (ds, truth) = bands(40, 10.0, seed);
        let config = FitConfig::new(2, BasisKind::Fourier, 3).with_restarts(5).with_seed(seed);
        let res = fit(&ds, &config).unwrap();
        assert!(res.converged);
        assert_eq!(ccr(&truth, res.assignment.labels()).unwrap(), 100.0);
    }
}

#[test]
fn single_cluster_is_global_regression() {
    let mut r = rng(700);
    let ds = random_dataset(&mut r, 15, 2..=6);
    for scheme in [WeightScheme::Subj, WeightScheme::Obs] {
        let config = FitConfig::new(1, BasisKind::BSpline, 6).with_weights(scheme);
        let basis = config.build_basis().unwrap();
        let res = fit(&ds, &config).unwrap();
        assert_eq!(res.iterations, 1);
        let all: Vec<usize> = (0..ds.n()).collect();
        let want = oracle::center_update(&ds, &all, &basis, &oracle::gram(&basis, 2), 0.0, scheme);
        for (g, w) in res.model.coefficients[0].iter().zip(&want) {
            assert!((g - w).abs() <= 1e-8 * w.abs().max(1.0));
        }
    }
}

/// Global minimum of the objective over every two-cluster split with both
/// clusters nonempty, with its labels.
fn global_optimum(ds: &SparseFunctionalDataset, basis: &BasisSystem) -> (f64, Vec<usize>) {
    let n = ds.n();
    let r = oracle::gram(basis, 2);
    let w = oracle::subject_weights(ds, WeightScheme::Subj);
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 1..(1u32 << n) - 1 {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let mut total = 0.0;
        for k in 0..2 {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
            let beta = oracle::center_update(ds, &members, basis, &r, 0.0, WeightScheme::Subj);
            for &i in &members {
                total += w[i] * subject_rss(basis, &ds.subjects()[i], &beta);
            }
        }
        if total < best.0 {
            best = (total, labels);
        }
    }
    best
}

#[test]
fn tiny_instances_against_enumeration() {
    for seed in 0..10 {
        let mut r = rng(800 + seed);
        let ds = random_dataset(&mut r, 6, 4..=6);
        let config = FitConfig::new(2, BasisKind::Fourier, 3);
        let basis = config.build_basis().unwrap();
        let (optimum, labels) = global_optimum(&ds, &basis);
        for start in 0..8 {
            let init = random_initial_assignment(6, 2, &mut r).unwrap();
            let res = fit_once(&ds, &config, &init).unwrap();
            let first = res.objective_trace[0];
            let last = *res.objective_trace.last().unwrap();
            assert!(last <= first * (1.0 + 1e-12));
            assert!(last >= optimum * (1.0 - 1e-9), "seed {seed} start {start}: {last} < {optimum}");
        }
        // the optimum is a fixed point of the alternation
        let res = fit_once(&ds, &config, &Assignment::new(labels, 2).unwrap()).unwrap();
        assert!(close(res.penalized_objective, optimum, 1e-9));
    }
}

/// Lloyd's algorithm on coefficient vectors in the metric `M`.
fn coefficient_kmeans(coefs: &[Vec<f64>], metric: &[Vec<f64>], mut labels: Vec<usize>, k: usize) -> Vec<usize> {
    let m = metric.len();
    for _ in 0..100 {
        let centers: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                let members: Vec<&Vec<f64>> = coefs.iter().zip(&labels).filter(|(_, l)| **l == c).map(|(v, _)| v).collect();
                (0..m).map(|j| members.iter().map(|v| v[j]).sum::<f64>() / members.len() as f64).collect()
            })
            .collect();
        let next: Vec<usize> = coefs
            .iter()
            .map(|v| {
                let d: Vec<f64> = centers
                    .iter()
                    .map(|c| {
                        let diff: Vec<f64> = v.iter().zip(c).map(|(a, b)| a - b).collect();
                        oracle::quadratic_form(metric, &diff)
                    })
                    .collect();
                (1..k).fold(0, |best, j| if d[j] < d[best] { j } else { best })
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

#[test]
fn dense_regular_design_reduces_to_coefficient_kmeans() {
    let basis = BasisSystem::construct(BasisKind::Fourier, 5, None).unwrap();
    let grid: Vec<f64> = (0..5).map(|j| (j as f64 + 0.3) / 5.0).collect();
    let design: Vec<Vec<f64>> = grid.iter().map(|&t| oracle::phi(&basis, t, 0)).collect();
    let mut metric = vec![vec![0.0; 5]; 5];
    for row in &design {
        for a in 0..5 {
            for b in 0..5 {
                metric[a][b] += row[a] * row[b];
            }
        }
    }
    for seed in 0..10 {
        let mut r = rng(900 + seed);
        let k = r.random_range(2..=3);
        let offsets: Vec<Vec<f64>> = (0..k).map(|_| (0..5).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let mut subjects = Vec::new();
        let mut coefs = Vec::new();
        for i in 0..30 {
            let c = i % k;
            let values: Vec<f64> = (0..5).map(|j| offsets[c][j] + r.random_range(-1.0..1.0)).collect();
            let transposed: Vec<Vec<f64>> = (0..5).map(|a| design.iter().map(|row| row[a]).collect()).collect();
            let mut normal = vec![vec![0.0; 5]; 5];
            let mut rhs = vec![0.0; 5];
            for a in 0..5 {
                for b in 0..5 {
                    normal[a][b] = metric[a][b];
                }
                rhs[a] = transposed[a].iter().zip(&values).map(|(p, y)| p * y).sum();
            }
            coefs.push(oracle::solve(normal, rhs));
            subjects.push(SubjectRecord::new(format!("d{i}"), grid.clone(), values));
        }
        let ds = SparseFunctionalDataset::with_domain(subjects, 0.0, 1.0).unwrap();
        let init = restart_init(ds.n(), k, seed, 0).unwrap();
        let config = FitConfig::new(k, BasisKind::Fourier, 5);
        let res = fit_once(&ds, &config, &init).unwrap();
        let want = coefficient_kmeans(&coefs, &metric, init.labels().to_vec(), k);
        assert!(oracle::same_partition(res.assignment.labels(), &want), "seed {seed}");
    }
}

#[test]
fn equal_counts_make_weight_schemes_agree() {
    let mut r = rng(1000);
    let ds = random_dataset(&mut r, 30, 4..=4);
    let base = FitConfig::new(3, BasisKind::BSpline, 6).with_lambda(0.5).with_restarts(6).with_seed(3);
    let subj = fit(&ds, &base.clone().with_weights(WeightScheme::Subj)).unwrap();
    let obs = fit(&ds, &base.with_weights(WeightScheme::Obs)).unwrap();
    assert_eq!(subj.assignment, obs.assignment);
    for (a, b) in subj.model.coefficients.iter().flatten().zip(obs.model.coefficients.iter().flatten()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn restarts_are_deterministic_and_never_worse() {
    let mut r = rng(1100);
    let ds = random_dataset(&mut r, 40, 2..=5);
    let one = FitConfig::new(3, BasisKind::Fourier, 5).with_seed(9);
    let many = one.clone().with_restarts(20);
    let a = fit(&ds, &many).unwrap();
    let b = fit(&ds, &many).unwrap();
    assert_eq!(a, b);
    let single = fit(&ds, &one).unwrap();
    assert!(a.empirical_loss <= single.empirical_loss);
    assert_eq!(a.restart_losses[0], single.empirical_loss);
    let direct = fit_once(&ds, &one, &restart_init(ds.n(), 3, 9, 0).unwrap()).unwrap();
    assert_eq!(direct.assignment, single.assignment);
    assert_eq!(direct.model, single.model);
}

#[test]
fn fit_is_independent_of_pool_size() {
    let mut r = rng(1200);
    let ds = random_dataset(&mut r, 40, 2..=5);
    let config = FitConfig::new(2, BasisKind::BSpline, 7).with_lambda(0.1).with_restarts(12).with_seed(4);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit(&ds, &config).unwrap())
    };
    assert_eq!(run(1), run(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_never_rises(seed in any::<u64>(), k in 1usize..=4, lambda in prop::sample::select(vec![0.0, 0.1, 10.0]), obs in any::<bool>()) {
        let mut r = rng(seed);
        let ds = random_dataset(&mut r, 20, 1..=6);
        let scheme = if obs { WeightScheme::Obs } else { WeightScheme::Subj };
        let config = FitConfig::new(k, BasisKind::BSpline, 6).with_lambda(lambda).with_weights(scheme).with_max_iter(50);
        let init = random_initial_assignment(ds.n(), k, &mut r).unwrap();
        let res = fit_once(&ds, &config, &init).unwrap();
        prop_assert!(res.iterations <= 50);
        prop_assert!(res.empirical_loss >= 0.0);
        for w in res.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }
}
