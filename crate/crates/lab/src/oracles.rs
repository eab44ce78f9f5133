//! Independent reference computations used by the suites.

use std::f64::consts::PI;

use laelab_core::VectorField;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Discrete Leray projection on a flat `nx × ny` torus by FFT, using the symbol
/// `sin(2πk/n)/h` of the centered first difference.
pub fn fft_leray(u: &VectorField, nx: usize, ny: usize, hx: f64, hy: f64) -> VectorField {
    let mut planner = FftPlanner::<f64>::new();
    let (fx, fy) = (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny));
    let (ix, iy) = (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny));
    let forward = |data: &[f64]| {
        let mut a: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft2_in_place(&mut a, nx, ny, &*fx, &*fy);
        a
    };
    let a = forward(&u.c[0].data);
    let b = forward(&u.c[1].data);
    let (mut pa, mut pb) = (a.clone(), b.clone());
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let kx = (2.0 * PI * i as f64 / nx as f64).sin() / hx;
            let ky = (2.0 * PI * j as f64 / ny as f64).sin() / hy;
            let k2 = kx * kx + ky * ky;
            // Modes with vanishing symbol lie in the kernel of the discrete gradient.
            if k2 > 1e-12 {
                let d = (a[k] * kx + b[k] * ky) / k2;
                pa[k] = a[k] - d * kx;
                pb[k] = b[k] - d * ky;
            }
        }
    }
    let back = |mut c: Vec<Complex<f64>>| -> Vec<f64> {
        fft2_in_place(&mut c, nx, ny, &*ix, &*iy);
        c.iter().map(|v| v.re / (nx * ny) as f64).collect()
    };
    let mut out = u.clone();
    out.c[0].data = back(pa);
    out.c[1].data = back(pb);
    out
}

fn fft2_in_place(a: &mut [Complex<f64>], nx: usize, ny: usize, fx: &dyn Fft<f64>, fy: &dyn Fft<f64>) {
    for row in a.chunks_mut(nx) {
        fx.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = a[j * nx + i];
        }
        fy.process(&mut col);
        for j in 0..ny {
            a[j * nx + i] = col[j];
        }
    }
}
