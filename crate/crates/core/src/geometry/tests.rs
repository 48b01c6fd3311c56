use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kernels::{ball_kernel, polydisc_kernel, siegel_kernel, SiegelKernel};
use crate::tol;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ball_point(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> Vec<Complex64> {
    loop {
        let z: Vec<Complex64> = (0..n)
            .map(|_| c(rng.gen_range(-rmax..rmax), rng.gen_range(-rmax..rmax)))
            .collect();
        if z.iter().map(|zi| zi.norm_sqr()).sum::<f64>() < rmax * rmax {
            return z;
        }
    }
}

fn direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    loop {
        let x: Vec<Complex64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        if x.iter().map(|xi| xi.norm_sqr()).sum::<f64>() > 1e-2 {
            return x;
        }
    }
}

#[test]
fn ball_bergman_metric_at_origin() {
    let provider = ball_kernel(2);
    let g = bergman_metric(provider.as_ref(), &[Complex64::ZERO, Complex64::ZERO]).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let expected = if a == b { 3.0 } else { 0.0 };
            assert!((g.matrix[(a, b)] - c(expected, 0.0)).norm() < 1e-13);
        }
    }
}

#[test]
fn disc_bergman_metric_off_center() {
    let provider = ball_kernel(1);
    let g = bergman_metric(provider.as_ref(), &[c(0.5, 0.0)]).unwrap();
    // 2/(1 - 0.25)^2 = 32/9
    assert!((g.matrix[(0, 0)] - c(32.0 / 9.0, 0.0)).norm() < 1e-12);
}

#[test]
fn polydisc_bergman_metric_is_diagonal() {
    let provider = polydisc_kernel(2);
    let z = vec![c(0.3, 0.0), c(0.0, 0.4)];
    let g = bergman_metric(provider.as_ref(), &z).unwrap();
    let d1 = 2.0 / (1.0 - 0.09f64).powi(2);
    let d2 = 2.0 / (1.0 - 0.16f64).powi(2);
    assert!((g.matrix[(0, 0)] - c(d1, 0.0)).norm() < 1e-12 * d1);
    assert!((g.matrix[(1, 1)] - c(d2, 0.0)).norm() < 1e-12 * d2);
    assert!(g.matrix[(0, 1)].norm() < 1e-13);
}

#[test]
fn ball_volume_element() {
    let provider = ball_kernel(2);
    let origin = vec![Complex64::ZERO; 2];
    assert!((bergman_volume(provider.as_ref(), &origin).unwrap() - 9.0).abs() < 1e-12);
    // |z|^2 = 1/2: (n+1)^n / (1/2)^{n+1} = 72
    let z = vec![c(0.5f64.sqrt(), 0.0), Complex64::ZERO];
    assert!((bergman_volume(provider.as_ref(), &z).unwrap() - 72.0).abs() < 1e-10);
    let disc = ball_kernel(1);
    assert!((bergman_volume(disc.as_ref(), &[Complex64::ZERO]).unwrap() - 2.0).abs() < 1e-13);
}

#[test]
fn ball_bergman_ricci_is_minus_one() {
    let provider = ball_kernel(2);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let z = ball_point(&mut rng, 2, 0.7);
        let x = direction(&mut rng, 2);
        let ric = ricci_curvature(provider.as_ref(), &z, &x, MetricKind::Bergman).unwrap();
        assert!((ric + 1.0).abs() < 1e-9, "Ric_b = {ric}");
    }
}

#[test]
fn polydisc_bergman_ricci_along_axis() {
    let provider = polydisc_kernel(2);
    let z = vec![c(0.2, 0.1), c(-0.3, 0.2)];
    let x = vec![Complex64::ONE, Complex64::ZERO];
    let ric = ricci_curvature(provider.as_ref(), &z, &x, MetricKind::Bergman).unwrap();
    assert!((ric + 1.0).abs() < 1e-9);
}

#[test]
fn kobayashi_bound_on_bergman_ricci() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for provider in [ball_kernel(2), polydisc_kernel(2)] {
        for _ in 0..10 {
            let z = ball_point(&mut rng, 2, 0.6);
            let x = direction(&mut rng, 2);
            let ric = ricci_curvature(provider.as_ref(), &z, &x, MetricKind::Bergman).unwrap();
            assert!(ric < 3.0, "Kobayashi bound violated: {ric}");
        }
    }
}

#[test]
fn ball_kf_metric_at_origin() {
    let provider = ball_kernel(2);
    let g = kf_metric(provider.as_ref(), &[Complex64::ZERO, Complex64::ZERO]).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let expected = if a == b { 12.0 } else { 0.0 };
            assert!((g.matrix[(a, b)] - c(expected, 0.0)).norm() < 1e-11);
        }
    }
}

#[test]
fn polydisc_kf_metric_matches_product_form() {
    for n in 1..=3usize {
        let provider = polydisc_kernel(n);
        let z: Vec<Complex64> =
            (0..n).map(|i| c(0.1 + 0.15 * i as f64, -0.05 * i as f64)).collect();
        let g = kf_metric(provider.as_ref(), &z).unwrap();
        for a in 0..n {
            for b in 0..n {
                let expected = if a == b {
                    2.0 * (n as f64 + 2.0) / (1.0 - z[a].norm_sqr()).powi(2)
                } else {
                    0.0
                };
                assert!(
                    (g.matrix[(a, b)] - c(expected, 0.0)).norm()
                        <= tol::POLYDISC_DIAGONAL * expected.abs().max(1.0),
                    "n={n} entry ({a},{b})"
                );
            }
        }
    }
}

#[test]
fn siegel_kf_metric_at_base_point() {
    let provider = siegel_kernel(2);
    let b = SiegelKernel::base_point(2);
    let g = kf_metric(provider.as_ref(), &b).unwrap();
    // pullback of 12 Id under H'(b*) = -diag(1/sqrt2, 1/2)
    assert!((g.matrix[(0, 0)] - c(6.0, 0.0)).norm() < 1e-10);
    assert!((g.matrix[(1, 1)] - c(3.0, 0.0)).norm() < 1e-10);
    assert!(g.matrix[(0, 1)].norm() < 1e-11);
}

#[test]
fn canonical_invariants_on_the_ball() {
    // beta_b = (n+1)^n pi^n/n!, beta_kf = (n+1)^n (n+2)^n pi^n/n!
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in 1..=2usize {
        let provider = ball_kernel(n);
        let beta_b_target = (n as f64 + 1.0).powi(n as i32) * PI.powi(n as i32)
            / crate::kernels::factorial(n);
        let beta_kf_target = beta_b_target * (n as f64 + 2.0).powi(n as i32);
        for _ in 0..5 {
            let z = ball_point(&mut rng, n, 0.7);
            let inv = PointInvariants::new(provider.as_ref(), &z, FULL_DEGREE).unwrap();
            let beta_b = inv.canonical_invariant(MetricKind::Bergman).unwrap();
            let beta_kf = inv.canonical_invariant(MetricKind::KobayashiFuks).unwrap();
            assert!((beta_b - beta_b_target).abs() < 1e-9 * beta_b_target);
            assert!((beta_kf - beta_kf_target).abs() < 1e-9 * beta_kf_target);
        }
    }
    // disc: beta_kf = 6 pi
    let disc = ball_kernel(1);
    let inv = PointInvariants::new(disc.as_ref(), &[c(0.4, -0.2)], FULL_DEGREE).unwrap();
    assert!(
        (inv.canonical_invariant(MetricKind::KobayashiFuks).unwrap() - 6.0 * PI).abs()
            < 1e-10 * 6.0 * PI
    );
}

#[test]
fn tangent_lengths() {
    let provider = ball_kernel(2);
    let origin = vec![Complex64::ZERO; 2];
    let e1 = vec![Complex64::ONE, Complex64::ZERO];
    let l = length(provider.as_ref(), &origin, &e1, MetricKind::KobayashiFuks).unwrap();
    assert!((l - 12f64.sqrt()).abs() < 1e-11);
    let zero = vec![Complex64::ZERO; 2];
    assert_eq!(length(provider.as_ref(), &origin, &zero, MetricKind::Bergman).unwrap(), 0.0);

    // homogeneity |c| length
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..10 {
        let z = ball_point(&mut rng, 2, 0.6);
        let x = direction(&mut rng, 2);
        let s = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let sx: Vec<Complex64> = x.iter().map(|xi| xi * s).collect();
        let inv = PointInvariants::new(provider.as_ref(), &z, FULL_DEGREE).unwrap();
        let l1 = inv.length(&sx, MetricKind::KobayashiFuks).unwrap();
        let l2 = inv.length(&x, MetricKind::KobayashiFuks).unwrap() * s.norm();
        assert!((l1 - l2).abs() < 1e-10 * l2.max(1e-10));
    }
}

#[test]
fn ball_sectional_curvatures() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for n in 1..=2usize {
        let provider = ball_kernel(n);
        let nf = n as f64;
        for _ in 0..8 {
            let z = ball_point(&mut rng, n, 0.7);
            let x = direction(&mut rng, n);
            let inv = PointInvariants::new(provider.as_ref(), &z, FULL_DEGREE).unwrap();
            let r_b = inv.sectional_curvature(&x, MetricKind::Bergman).unwrap();
            assert!((r_b + 2.0 / (nf + 1.0)).abs() < 1e-9, "R_b = {r_b}");
            let r_kf = inv.sectional_curvature(&x, MetricKind::KobayashiFuks).unwrap();
            assert!(
                (r_kf + 2.0 / ((nf + 1.0) * (nf + 2.0))).abs() < 1e-9,
                "R_kf = {r_kf} at n = {n}"
            );
        }
    }
}

#[test]
fn polydisc_axis_sectional_curvature_matches_disc() {
    // along a coordinate axis the product metric restricts to the disc
    // factor, whose Bergman sectional curvature is -1
    let provider = polydisc_kernel(2);
    let z = vec![c(0.25, -0.1), c(0.3, 0.15)];
    let x = vec![Complex64::ONE, Complex64::ZERO];
    let r = hsc(provider.as_ref(), &z, &x, MetricKind::Bergman).unwrap();
    assert!((r + 1.0).abs() < 1e-9, "axis R_b = {r}");
}

#[test]
fn curvature_and_ricci_are_scale_invariant_in_x() {
    let provider = ball_kernel(2);
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let z = ball_point(&mut rng, 2, 0.5);
    let inv = PointInvariants::new(provider.as_ref(), &z, FULL_DEGREE).unwrap();
    for _ in 0..10 {
        let x = direction(&mut rng, 2);
        let s = c(rng.gen_range(0.1..3.0), rng.gen_range(-2.0..2.0));
        let sx: Vec<Complex64> = x.iter().map(|xi| xi * s).collect();
        for kind in [MetricKind::Bergman, MetricKind::KobayashiFuks] {
            let r1 = inv.sectional_curvature(&x, kind).unwrap();
            let r2 = inv.sectional_curvature(&sx, kind).unwrap();
            assert!((r1 - r2).abs() < 1e-9 * r1.abs());
            let q1 = inv.ricci_curvature(&x, kind).unwrap();
            let q2 = inv.ricci_curvature(&sx, kind).unwrap();
            assert!((q1 - q2).abs() < 1e-9 * q1.abs());
        }
    }
}

#[test]
fn kf_ricci_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    // ball n=2: -1/4; disc: -1/3
    let provider = ball_kernel(2);
    let z = ball_point(&mut rng, 2, 0.6);
    let x = direction(&mut rng, 2);
    let ric = ricci_curvature(provider.as_ref(), &z, &x, MetricKind::KobayashiFuks).unwrap();
    assert!((ric + 0.25).abs() < 1e-9);

    let disc = ball_kernel(1);
    let ric = ricci_curvature(disc.as_ref(), &[c(0.3, 0.2)], &[Complex64::ONE], MetricKind::KobayashiFuks)
        .unwrap();
    assert!((ric + 1.0 / 3.0).abs() < 1e-9);
    // and the disc KF sectional curvature coincides with it (Gaussian)
    let r = hsc(disc.as_ref(), &[c(0.3, 0.2)], &[Complex64::ONE], MetricKind::KobayashiFuks).unwrap();
    assert!((r + 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn metric_tensors_are_hermitian_and_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for provider in [ball_kernel(2), polydisc_kernel(2)] {
        for _ in 0..10 {
            let z = ball_point(&mut rng, 2, 0.7);
            let inv = PointInvariants::new(provider.as_ref(), &z, FULL_DEGREE).unwrap();
            for kind in [MetricKind::Bergman, MetricKind::KobayashiFuks] {
                let g = inv.metric(kind).unwrap();
                assert!(g.hermitian_defect() < tol::METRIC_HERMITIAN);
                assert!(g.is_positive_definite());
                assert!(g.min_eigenvalue() > 0.0);
            }
        }
    }
}

#[test]
fn curvature_table_symmetries() {
    let provider = ball_kernel(2);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let z = ball_point(&mut rng, 2, 0.6);
    let inv = PointInvariants::new(provider.as_ref(), &z, FULL_DEGREE).unwrap();
    for kind in [MetricKind::Bergman, MetricKind::KobayashiFuks] {
        let data = inv.curvature(kind).unwrap();
        assert!(data.kahler_symmetry_defect() < tol::CURVATURE_SYMMETRY);
        assert!(data.inverse_defect() < tol::METRIC_INVERSE);
    }
}

#[test]
fn zero_vector_is_rejected() {
    let provider = ball_kernel(2);
    let origin = vec![Complex64::ZERO; 2];
    let inv = PointInvariants::new(provider.as_ref(), &origin, FULL_DEGREE).unwrap();
    let zero = vec![Complex64::ZERO; 2];
    assert!(matches!(
        inv.sectional_curvature(&zero, MetricKind::Bergman),
        Err(GeometryError::ZeroVector)
    ));
    assert!(matches!(
        inv.ricci_curvature(&zero, MetricKind::KobayashiFuks),
        Err(GeometryError::ZeroVector)
    ));
}

#[test]
fn degree_requirements_are_enforced() {
    let provider = ball_kernel(2);
    let origin = vec![Complex64::ZERO; 2];
    let inv = PointInvariants::new(provider.as_ref(), &origin, 2).unwrap();
    assert!(inv.metric(MetricKind::Bergman).is_ok());
    assert!(matches!(
        inv.metric(MetricKind::KobayashiFuks),
        Err(GeometryError::DegreeTooLow { .. })
    ));
    let inv4 = PointInvariants::new(provider.as_ref(), &origin, 4).unwrap();
    assert!(inv4.metric(MetricKind::KobayashiFuks).is_ok());
    assert!(inv4.sectional_curvature(&[Complex64::ONE, Complex64::ZERO], MetricKind::Bergman).is_ok());
    assert!(matches!(
        inv4.sectional_curvature(&[Complex64::ONE, Complex64::ZERO], MetricKind::KobayashiFuks),
        Err(GeometryError::DegreeTooLow { .. })
    ));
}

#[test]
fn canonical_invariant_is_stable_under_kernel_pushforward() {
    // pull the ball kernel back through an automorphism: the resulting
    // provider describes the same domain, and beta computed from it at z
    // equals beta of the original kernel at F(z)
    use crate::kernels::{transform_kernel, Biholomorphism, MobiusBall};
    use std::sync::Arc;
    let ball = ball_kernel(2);
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..5 {
        let a = ball_point(&mut rng, 2, 0.5);
        let phi = Arc::new(MobiusBall::new(a).unwrap());
        let pushed = transform_kernel(ball.clone(), phi.clone());
        let z = ball_point(&mut rng, 2, 0.7);
        let fz = phi.forward(&z).unwrap();
        for kind in [MetricKind::Bergman, MetricKind::KobayashiFuks] {
            let here = canonical_invariant(pushed.as_ref(), &z, kind).unwrap();
            let there = canonical_invariant(ball.as_ref(), &fz, kind).unwrap();
            assert!(
                (here - there).abs() < tol::EQUIVARIANCE * there,
                "beta through pushforward: {here} vs {there}"
            );
        }
        // and the transported sectional curvature agrees too
        let x = direction(&mut rng, 2);
        let r_pushed = hsc(pushed.as_ref(), &z, &x, MetricKind::KobayashiFuks).unwrap();
        assert!((r_pushed + 1.0 / 6.0).abs() < 1e-9);
    }
}

#[test]
fn equivariance_under_ball_automorphisms() {
    use crate::kernels::{Biholomorphism, MobiusBall};
    let provider = ball_kernel(2);
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..10 {
        let a = ball_point(&mut rng, 2, 0.5);
        let phi = MobiusBall::new(a).unwrap();
        let z = ball_point(&mut rng, 2, 0.7);
        let fz = phi.forward(&z).unwrap();
        let jac = phi.jacobian(&z).unwrap();

        let g_here = kf_metric(provider.as_ref(), &z).unwrap().matrix;
        let g_there = kf_metric(provider.as_ref(), &fz).unwrap().matrix;
        let pulled = jac.transpose() * g_there * jac.map(|c| c.conj());
        let scale = g_here.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let defect =
            (&pulled - &g_here).iter().map(|c| c.norm()).fold(0.0, f64::max) / scale;
        assert!(defect < tol::EQUIVARIANCE, "pullback defect {defect:.3e}");

        // scalar invariants agree at matched points/vectors
        let x = direction(&mut rng, 2);
        let jx: Vec<Complex64> = (0..2)
            .map(|i| (0..2).map(|j| jac[(i, j)] * x[j]).sum())
            .collect();
        let inv_z = PointInvariants::new(provider.as_ref(), &z, FULL_DEGREE).unwrap();
        let inv_fz = PointInvariants::new(provider.as_ref(), &fz, FULL_DEGREE).unwrap();
        let kf = MetricKind::KobayashiFuks;
        assert!(
            (inv_z.canonical_invariant(kf).unwrap() - inv_fz.canonical_invariant(kf).unwrap())
                .abs()
                < tol::EQUIVARIANCE * inv_z.canonical_invariant(kf).unwrap()
        );
        let l1 = inv_z.length(&x, kf).unwrap();
        let l2 = inv_fz.length(&jx, kf).unwrap();
        assert!((l1 - l2).abs() < tol::EQUIVARIANCE * l1);
        let r1 = inv_z.sectional_curvature(&x, kf).unwrap();
        let r2 = inv_fz.sectional_curvature(&jx, kf).unwrap();
        assert!((r1 - r2).abs() < tol::EQUIVARIANCE * r1.abs());
        let q1 = inv_z.ricci_curvature(&x, kf).unwrap();
        let q2 = inv_fz.ricci_curvature(&jx, kf).unwrap();
        assert!((q1 - q2).abs() < tol::EQUIVARIANCE * q1.abs());
    }
}
