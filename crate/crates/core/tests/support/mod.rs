//! Shared oracles for the integration suites.

use kfuks::kernels::KernelProvider;
use kfuks::Complex64;

/// Mixed Wirtinger derivative d^alpha_z d^beta_zbar log K(z, z) by central
/// finite differences, Richardson-refined to fourth order.
///
/// Off the diagonal, log K(z, w) is holomorphic in z and antiholomorphic in
/// w, so the polarized function G(h, k) = log K(z + h, z + conj(k)) is
/// jointly holomorphic in (h, k) and the requested derivative is
/// d^alpha_h d^beta_k G(0, 0). Each variable gets an ordinary complex-step
/// central difference, iterated over the derivative order. This path never
/// touches the jet machinery it checks.
pub fn wirtinger_fd(
    provider: &dyn KernelProvider,
    z: &[Complex64],
    alpha: &[usize],
    beta: &[usize],
    step: f64,
) -> Complex64 {
    let n = z.len();
    let mut dirs = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            dirs.push(i);
        }
    }
    for (i, &b) in beta.iter().enumerate() {
        for _ in 0..b {
            dirs.push(n + i);
        }
    }
    let coarse = fd_recursive(provider, z, &dirs, &mut vec![Complex64::ZERO; 2 * n], step);
    let fine = fd_recursive(provider, z, &dirs, &mut vec![Complex64::ZERO; 2 * n], step / 2.0);
    (fine * 4.0 - coarse) / 3.0
}

fn fd_recursive(
    provider: &dyn KernelProvider,
    z: &[Complex64],
    dirs: &[usize],
    offsets: &mut Vec<Complex64>,
    step: f64,
) -> Complex64 {
    let n = z.len();
    if dirs.is_empty() {
        let zz: Vec<Complex64> = (0..n).map(|i| z[i] + offsets[i]).collect();
        let ww: Vec<Complex64> = (0..n).map(|i| z[i] + offsets[n + i].conj()).collect();
        return provider.evaluate(&zz, &ww).expect("FD probe left the domain").ln();
    }
    let d = dirs[0];
    let h = Complex64::new(step, 0.0);
    offsets[d] += h;
    let plus = fd_recursive(provider, z, &dirs[1..], offsets, step);
    offsets[d] -= h * 2.0;
    let minus = fd_recursive(provider, z, &dirs[1..], offsets, step);
    offsets[d] += h;
    (plus - minus) / (h * 2.0)
}

/// Relative error with an absolute fallback near zero.
pub fn rel_err(value: f64, target: f64) -> f64 {
    if target.abs() < 1e-14 {
        (value - target).abs()
    } else {
        ((value - target) / target).abs()
    }
}
