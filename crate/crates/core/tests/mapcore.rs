use approx::assert_relative_eq;
use icr_core::fov::{self, ConeFov};
use icr_core::liegroup::Pose;
use icr_core::mapcore::{self, GridMap, Information, MapBelief, Measurement, Occupancy};
use nalgebra::{DMatrix, DVector, Vector2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    &a * a.transpose() + DMatrix::identity(n, n) * rng.random_range(0.2..2.0)
}

fn measurement(z: DVector<f64>) -> Measurement {
    let n = z.len();
    Measurement { z, mask: vec![true; n] }
}

#[test]
fn scalar_filter_by_hand() {
    let belief = MapBelief::new(DVector::from_element(1, 0.0), Information::Diagonal(DVector::from_element(1, 0.01))).unwrap();
    let m = DVector::from_element(1, 1.0);
    let post = belief.eif_update(&m, &measurement(DVector::from_element(1, 1.0))).unwrap();
    assert_relative_eq!(post.info_diagonal()[0], 1.01, epsilon = 1e-15);
    assert_relative_eq!(post.mean()[0], 1.0 / 1.01, epsilon = 1e-15);

    let (mean, cov) = mapcore::ekf_update(
        &DVector::from_element(1, 0.0),
        &DMatrix::from_element(1, 1, 100.0),
        &measurement(DVector::from_element(1, 1.0)),
        &m,
    )
    .unwrap();
    assert_relative_eq!(cov[(0, 0)], 1.0 / 1.01, epsilon = 1e-13);
    assert_relative_eq!(mean[0], 1.0 / 1.01, epsilon = 1e-13);
}

#[test]
fn contribution_matches_per_cell_noise() {
    let map = GridMap::filled(10, 10, 0.5, Vector2::new(-1.0, -2.5), Occupancy::Free).unwrap();
    let fov = ConeFov::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let pose = Pose::planar(rng.random_range(-1.0..3.0), rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0));
        let m = mapcore::info_contribution(&pose, map.positions(), &fov);
        for (j, p) in map.positions().iter().enumerate() {
            assert_eq!(m[j], fov::inv_noise_var(&pose, p, &fov));
        }
    }
}

#[test]
fn view_away_from_map_contributes_nothing() {
    let map = GridMap::filled(6, 6, 0.5, Vector2::zeros(), Occupancy::Free).unwrap();
    let m = mapcore::info_contribution(&Pose::planar(-20.0, 0.0, std::f64::consts::PI), map.positions(), &ConeFov::default());
    assert!(m.amax() < 1e-9);
    let z = mapcore::sample_measurement(&map, &Pose::planar(-20.0, 0.0, 0.0), &ConeFov::default(), &DVector::from_element(36, 0.25)).unwrap();
    assert!(z.mask.iter().all(|&m| !m));
    assert!(z.z.iter().all(|&v| v == 0.25));
}

#[test]
fn free_map_reads_minus_one_in_view() {
    let map = GridMap::filled(12, 12, 0.25, Vector2::new(-0.5, -1.5), Occupancy::Free).unwrap();
    let fov = ConeFov::default();
    let pose = Pose::planar(0.0, 0.0, 0.1);
    let z = mapcore::sample_measurement(&map, &pose, &fov, &DVector::zeros(map.len())).unwrap();
    let seen = z.mask.iter().filter(|&&m| m).count();
    assert!(seen > 0);
    for (j, p) in map.positions().iter().enumerate() {
        let inside = fov::sdf_cone2d(&fov::body_frame(&pose, p).xy(), &fov).distance < 0.0;
        assert_eq!(z.mask[j], inside);
        assert_eq!(z.z[j], if inside { -1.0 } else { 0.0 });
    }
}

#[test]
fn log_det_closed_forms() {
    assert_eq!(Information::Diagonal(DVector::from_element(5, 1.0)).log_det().unwrap(), 0.0);
    assert_relative_eq!(
        Information::Diagonal(DVector::from_element(4, 100.0)).log_det().unwrap(),
        4.0 * 100f64.ln(),
        epsilon = 1e-12
    );
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y = random_spd(&mut rng, 8);
    let oracle: f64 = y.clone().symmetric_eigen().eigenvalues.iter().map(|e| e.ln()).sum();
    assert_relative_eq!(Information::Dense(y).log_det().unwrap(), oracle, epsilon = 1e-9);
}

#[test]
fn threshold_rule() {
    let labels = mapcore::threshold_map(&DVector::from_vec(vec![0.3, -0.2, 0.0]));
    assert_eq!(labels, vec![Occupancy::Occupied, Occupancy::Free, Occupancy::Free]);
    let again = mapcore::threshold_map(&DVector::from_iterator(3, labels.iter().map(|l| l.value())));
    assert_eq!(again, labels);
}

#[test]
fn rejects_non_positive_covariance() {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    let r = mapcore::ekf_update(&DVector::zeros(2), &cov, &measurement(DVector::zeros(2)), &DVector::from_element(2, 1.0));
    assert!(r.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn information_and_covariance_forms_agree(seed in any::<u64>(), n in 1usize..=25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov0 = random_spd(&mut rng, n);
        let mean0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut belief = MapBelief::new(mean0.clone(), Information::Dense(cov0.clone().cholesky().unwrap().inverse())).unwrap();
        let (mut mean, mut cov) = (mean0, cov0);
        for _ in 0..10 {
            // some cells unobserved in each step
            let m = DVector::from_fn(n, |_, _| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..2.0) });
            let z = measurement(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
            let prev = cov.clone();
            (mean, cov) = mapcore::ekf_update(&mean, &cov, &z, &m).unwrap();
            belief = belief.eif_update(&m, &z).unwrap();
            let y_inv = belief.info().to_dense().cholesky().unwrap().inverse();
            prop_assert!((&cov - y_inv).amax() < 1e-8);
            prop_assert!((&mean - belief.mean()).amax() < 1e-8);
            // posterior never more uncertain than the prior
            let min_eig = (prev - &cov).symmetric_eigen().eigenvalues.min();
            prop_assert!(min_eig > -1e-9);
        }
    }

    #[test]
    fn reward_never_decreases(seed in any::<u64>(), n in 1usize..40, dense in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut belief = if dense {
            MapBelief::dense_prior(n, 10.0).unwrap()
        } else {
            MapBelief::diagonal_prior(n, 10.0).unwrap()
        };
        let y0 = belief.info_diagonal();
        let mut total = DVector::zeros(n);
        let mut last = belief.log_det_info().unwrap();
        for _ in 0..8 {
            let m = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
            total += &m;
            let z = measurement(DVector::from_fn(n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 }));
            belief.eif_update_in_place(&m, &z).unwrap();
            let r = belief.log_det_info().unwrap();
            prop_assert!(r >= last);
            last = r;
        }
        // Y_K = Y_0 + sum of contributions
        prop_assert!((belief.info_diagonal() - (y0 + total)).amax() < 1e-12);
    }

    #[test]
    fn zero_contribution_keeps_belief(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let belief = MapBelief::new(mean.clone(), Information::Diagonal(DVector::from_element(n, 0.5))).unwrap();
        let z = measurement(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        let post = belief.clone().eif_update(&DVector::zeros(n), &z).unwrap();
        prop_assert_eq!(post, belief);
        let cov = random_spd(&mut rng, n);
        let (m2, c2) = mapcore::ekf_update(&mean, &cov, &z, &DVector::zeros(n)).unwrap();
        prop_assert_eq!(m2, mean);
        prop_assert_eq!(c2, cov);
    }
}
