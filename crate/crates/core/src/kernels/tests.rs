use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::tol;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_ball_point(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> Vec<Complex64> {
    loop {
        let z: Vec<Complex64> = (0..n)
            .map(|_| c(rng.gen_range(-rmax..rmax), rng.gen_range(-rmax..rmax)))
            .collect();
        if z.iter().map(|zi| zi.norm_sqr()).sum::<f64>() < rmax * rmax {
            return z;
        }
    }
}

#[test]
fn ball_kernel_at_origin() {
    let k = BallKernel::new(2);
    let z = vec![Complex64::ZERO; 2];
    let v = k.evaluate(&z, &z).unwrap();
    assert!((v - c(2.0 / (PI * PI), 0.0)).norm() < 1e-15);
}

#[test]
fn polydisc_kernel_at_origin() {
    let k = PolydiscKernel::new(2);
    let z = vec![Complex64::ZERO; 2];
    let v = k.evaluate(&z, &z).unwrap();
    assert!((v - c(1.0 / (PI * PI), 0.0)).norm() < 1e-16);
}

#[test]
fn siegel_kernel_at_base_point() {
    let k = SiegelKernel::new(2);
    let b = SiegelKernel::base_point(2);
    let v = k.evaluate(&b, &b).unwrap();
    // n!/pi^n * 2^{-(n+1)}
    assert!((v - c(1.0 / (4.0 * PI * PI), 0.0)).norm() < 1e-16);
}

#[test]
fn outside_domain_is_an_error() {
    let k = BallKernel::new(2);
    let z = vec![c(1.2, 0.0), Complex64::ZERO];
    let origin = vec![Complex64::ZERO; 2];
    assert!(matches!(k.evaluate(&z, &origin), Err(KernelError::OutsideDomain { .. })));
    assert!(matches!(k.log_jet(&z, 4), Err(KernelError::OutsideDomain { .. })));
}

#[test]
fn hermitian_symmetry_and_jet_consistency() {
    let providers: Vec<Arc<dyn KernelProvider>> = vec![
        ball_kernel(2),
        polydisc_kernel(2),
        siegel_sampleable(),
        Arc::new(ReinhardtKernel::new(ReinhardtSpec::new(vec![1.0, 2.0]).unwrap(), 30).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for provider in providers {
        for _ in 0..50 {
            let (z, w) = loop {
                let z = random_ball_point(&mut rng, 2, 0.6);
                let w = random_ball_point(&mut rng, 2, 0.6);
                let (z, w) = if provider.tag().starts_with("siegel") {
                    (to_siegel(&z), to_siegel(&w))
                } else {
                    (z, w)
                };
                if provider.contains(&z) && provider.contains(&w) {
                    break (z, w);
                }
            };
            let kzw = provider.evaluate(&z, &w).unwrap();
            let kwz = provider.evaluate(&w, &z).unwrap();
            assert!(
                (kzw - kwz.conj()).norm() <= tol::KERNEL_SYMMETRY * kzw.norm(),
                "{}: Hermitian symmetry violated",
                provider.tag()
            );
            let kzz = provider.evaluate(&z, &z).unwrap();
            assert!(kzz.re > 0.0 && kzz.im.abs() < 1e-12 * kzz.re);
            let jet = provider.log_jet(&z, 4).unwrap();
            let from_jet = jet.constant_term().re.exp();
            assert!(
                (from_jet - kzz.re).abs() <= tol::KERNEL_SYMMETRY * kzz.re,
                "{}: jet constant inconsistent",
                provider.tag()
            );
            assert!(jet.hermitian_defect() < tol::JET_HERMITIAN);
        }
    }
}

fn siegel_sampleable() -> Arc<dyn KernelProvider> {
    siegel_kernel(2)
}

/// Map a ball sample into the Siegel half-space.
fn to_siegel(z: &[Complex64]) -> Vec<Complex64> {
    let mut out = z.to_vec();
    let tangential: f64 = z[..z.len() - 1].iter().map(|zi| zi.norm_sqr()).sum();
    out[z.len() - 1] = c(-0.5 * tangential - 0.3 - z[z.len() - 1].norm_sqr(), z[z.len() - 1].im);
    out
}

#[test]
fn identity_pushforward_is_identity() {
    let inner = ball_kernel(2);
    let pushed = transform_kernel(inner.clone(), Arc::new(AffineMap::identity(2)));
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let z = random_ball_point(&mut rng, 2, 0.8);
        let w = random_ball_point(&mut rng, 2, 0.8);
        let a = inner.evaluate(&z, &w).unwrap();
        let b = pushed.evaluate(&z, &w).unwrap();
        assert!((a - b).norm() < 1e-14 * a.norm());
        let ja = inner.log_jet(&z, 4).unwrap();
        let jb = pushed.log_jet(&z, 4).unwrap();
        assert!(ja.max_diff(&jb) < 1e-12);
    }
}

#[test]
fn pushforward_is_functorial() {
    // pushing through F then G equals pushing through G after F
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a1 = random_ball_point(&mut rng, 2, 0.4);
    let a2 = random_ball_point(&mut rng, 2, 0.4);
    let f: Arc<dyn Biholomorphism> = Arc::new(MobiusBall::new(a1).unwrap());
    let g: Arc<dyn Biholomorphism> = Arc::new(MobiusBall::new(a2).unwrap());
    let ball = ball_kernel(2);

    let two_step = transform_kernel(transform_kernel(ball.clone(), g.clone()), f.clone());
    let composed = transform_kernel(ball, Arc::new(ComposedMap::new(vec![f, g])));
    for _ in 0..20 {
        let z = random_ball_point(&mut rng, 2, 0.7);
        let w = random_ball_point(&mut rng, 2, 0.7);
        let a = two_step.evaluate(&z, &w).unwrap();
        let b = composed.evaluate(&z, &w).unwrap();
        assert!((a - b).norm() <= tol::PUSHFORWARD * a.norm());
        let ja = two_step.log_jet(&z, 4).unwrap();
        let jb = composed.log_jet(&z, 4).unwrap();
        assert!(ja.max_diff(&jb) <= tol::PUSHFORWARD * ja.max_coeff_norm().max(1.0));
    }
}

#[test]
fn mobius_is_an_involution_with_consistent_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10 {
        let a = random_ball_point(&mut rng, 2, 0.5);
        let phi = MobiusBall::new(a.clone()).unwrap();
        let z = random_ball_point(&mut rng, 2, 0.8);
        let fz = phi.forward(&z).unwrap();
        assert!(fz.iter().map(|c| c.norm_sqr()).sum::<f64>() < 1.0);
        let back = phi.forward(&fz).unwrap();
        let drift: f64 = back.iter().zip(&z).map(|(b, z)| (b - z).norm()).sum();
        assert!(drift < tol::MAP_INVERSE, "involution drift {drift}");
        // phi(a) = 0 and phi(0) = a
        let at_a = phi.forward(&a).unwrap();
        assert!(at_a.iter().map(|c| c.norm()).sum::<f64>() < 1e-12);

        // closed-form determinant against the Jacobian matrix determinant
        let jac = phi.jacobian(&z).unwrap();
        let det_direct = jac.lu().determinant();
        let det_closed = phi.jac_det(&z).unwrap();
        assert!((det_direct - det_closed).norm() <= tol::JACOBIAN_FD * det_closed.norm());
    }
}

#[test]
fn jacobian_determinant_against_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a = random_ball_point(&mut rng, 2, 0.4);
    let phi = MobiusBall::new(a).unwrap();
    let z = random_ball_point(&mut rng, 2, 0.5);
    let h = 1e-5;
    let mut jac = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
    for j in 0..2 {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += c(h, 0.0);
        zm[j] -= c(h, 0.0);
        let fp = phi.forward(&zp).unwrap();
        let fm = phi.forward(&zm).unwrap();
        for i in 0..2 {
            jac[(i, j)] = (fp[i] - fm[i]) / c(2.0 * h, 0.0);
        }
    }
    let det_fd = jac.lu().determinant();
    let det = phi.jac_det(&z).unwrap();
    assert!((det_fd - det).norm() <= tol::JACOBIAN_FD * det.norm().max(1.0));
}

#[test]
fn reinhardt_matches_ball_closed_form() {
    let spec = ReinhardtSpec::new(vec![1.0, 1.0]).unwrap();
    let kernel = ReinhardtKernel::new(spec, 40).unwrap();
    let ball = BallKernel::new(2);
    // only alpha = 0 contributes at the origin
    let origin = vec![Complex64::ZERO; 2];
    let k0 = kernel.evaluate(&origin, &origin).unwrap();
    assert!((k0 - c(2.0 / (PI * PI), 0.0)).norm() < 1e-14);

    let z = vec![c(0.5, 0.0), Complex64::ZERO];
    let truncated = kernel.evaluate(&z, &z).unwrap();
    let exact = ball.evaluate(&z, &z).unwrap();
    assert!((truncated - exact).norm() <= 1e-8 * exact.norm());

    let jet_t = kernel.log_jet(&z, 4).unwrap();
    let jet_e = ball.log_jet(&z, 4).unwrap();
    assert!(jet_t.max_diff(&jet_e) <= 1e-6 * jet_e.max_coeff_norm());
}

#[test]
fn reinhardt_self_convergence() {
    let spec = ReinhardtSpec::new(vec![1.0, 2.0]).unwrap();
    let k30 = ReinhardtKernel::new(spec.clone(), 30).unwrap();
    let k40 = ReinhardtKernel::new(spec, 40).unwrap();
    let z = vec![c(0.5, 0.0), c(0.5, 0.0)];
    let a = k30.evaluate(&z, &z).unwrap();
    let b = k40.evaluate(&z, &z).unwrap();
    assert!((a - b).norm() <= 1e-6 * b.norm(), "drift {:.3e}", (a - b).norm() / b.norm());
}

#[test]
fn truncated_diagonal_sums_are_monotone_in_truncation() {
    let z = vec![c(0.68, 0.1)];
    let mut last = 0.0;
    for n in [5usize, 10, 15, 20, 30, 45] {
        let spec = ReinhardtSpec::new(vec![1.0]).unwrap();
        let k = ReinhardtKernel::new(spec, n).unwrap();
        let v = k.evaluate(&z, &z).unwrap().re;
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn tail_estimate_reflects_depth() {
    let spec = ReinhardtSpec::new(vec![1.0, 1.0]).unwrap();
    let kernel = ReinhardtKernel::new(spec, 40).unwrap();
    let shallow = vec![c(0.3, 0.0), Complex64::ZERO];
    let deep = vec![c(0.9, 0.0), Complex64::ZERO];
    let t_shallow = kernel.tail_estimate(&shallow).unwrap();
    let t_deep = kernel.tail_estimate(&deep).unwrap();
    assert!(t_shallow < 1e-10, "shallow tail {t_shallow:.3e}");
    assert!(t_deep > t_shallow);
}

#[test]
fn auto_truncation_meets_target() {
    let spec = ReinhardtSpec::new(vec![1.0, 1.0]).unwrap();
    let probe = vec![c(0.8, 0.0), Complex64::ZERO];
    let kernel = ReinhardtKernel::auto(spec, &[probe.clone()], 1e-8).unwrap();
    assert!(kernel.tail_estimate(&probe).unwrap() <= 1e-8);
    assert!(kernel.truncation() > 40);
}

#[test]
fn moment_closed_forms() {
    // disc: c_k = pi/(k+1)
    let disc = ReinhardtSpec::new(vec![1.0]).unwrap();
    for k in 0..8usize {
        let expected = PI / (k as f64 + 1.0);
        assert!((disc.moment(&[k]) - expected).abs() < 1e-13 * expected);
    }
    // ball volume pi^2/2 and the (1,1) moment pi^2/24
    let ball = ReinhardtSpec::new(vec![1.0, 1.0]).unwrap();
    assert!((ball.moment(&[0, 0]) - PI * PI / 2.0).abs() < 1e-13);
    assert!((ball.moment(&[1, 1]) - PI * PI / 24.0).abs() < 1e-14);
    // ellipsoid volume pinned by quadrature
    let egg = ReinhardtSpec::new(vec![1.0, 2.0]).unwrap();
    let quad = egg.moment_quadrature(&[0, 0], 200);
    assert!((egg.moment(&[0, 0]) - quad).abs() < 1e-10 * quad);
    egg.validate_moments(6).unwrap();
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(ReinhardtSpec::new(vec![]).is_err());
    assert!(ReinhardtSpec::new(vec![1.0, -2.0]).is_err());
    assert!(ReinhardtSpec::new(vec![1.0, f64::NAN]).is_err());
}

#[test]
fn moment_table_csv_roundtrip() {
    let spec = ReinhardtSpec::new(vec![1.0, 2.0]).unwrap();
    let table = MomentTable::tabulate(&spec, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moments.csv");
    table.write_csv(&path).unwrap();
    let back = MomentTable::read_csv(&path, 2).unwrap();
    assert_eq!(back.len(), table.len());
    for (alpha, value) in table.iter() {
        assert_eq!(back.get(alpha), Some(value));
    }
    // a provider built on the cached table agrees with the formula path
    let with_table = ReinhardtKernel::with_moment_table(spec.clone(), 4, back).unwrap();
    let plain = ReinhardtKernel::new(spec, 4).unwrap();
    let z = vec![c(0.4, 0.1), c(0.2, -0.3)];
    let a = with_table.evaluate(&z, &z).unwrap();
    let b = plain.evaluate(&z, &z).unwrap();
    assert!((a - b).norm() < 1e-12 * b.norm());
}
