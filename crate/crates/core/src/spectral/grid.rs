//! Dense coefficient blocks over `[-T, T]^n` and their uniform-grid transforms.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

/// Number of entries of a dense block of half-width `t` in `n` dimensions.
pub fn block_len(n: usize, t: usize) -> usize {
    (2 * t + 1).pow(n as u32)
}

/// Flat index of `tau` in a block of half-width `t`; `None` outside.
pub fn index_of(tau: &[i64], t: usize) -> Option<usize> {
    let side = 2 * t as i64 + 1;
    let mut idx = 0i64;
    for &x in tau {
        if x.abs() > t as i64 {
            return None;
        }
        idx = idx * side + x + t as i64;
    }
    Some(idx as usize)
}

/// Inverse of [`index_of`].
pub fn tau_of(mut idx: usize, n: usize, t: usize) -> Vec<i64> {
    let side = 2 * t + 1;
    let mut out = vec![0i64; n];
    for i in (0..n).rev() {
        out[i] = (idx % side) as i64 - t as i64;
        idx /= side;
    }
    out
}

/// Re-embeds a block into a larger (or smaller, truncating) half-width.
pub fn resize(src: &[Complex64], n: usize, t_src: usize, t_dst: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); block_len(n, t_dst)];
    for (i, v) in src.iter().enumerate() {
        if *v == Complex64::new(0.0, 0.0) {
            continue;
        }
        let tau = tau_of(i, n, t_src);
        if let Some(j) = index_of(&tau, t_dst) {
            out[j] = *v;
        }
    }
    out
}

/// Smallest `2^a 3^b 5^c >= m`; FFTs of such sizes avoid the slow prime path.
pub fn fft_size(m: usize) -> usize {
    (m.max(1)..).find(|&k| {
        let mut r = k;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        r == 1
    })
    .expect("smooth numbers are unbounded")
}

thread_local! {
    // the planner caches plans by length and direction
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_axes(data: &mut [Complex64], n: usize, m: usize, inverse: bool) {
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse { p.plan_fft_inverse(m) } else { p.plan_fft_forward(m) }
    });
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..n {
        let stride = m.pow((n - 1 - axis) as u32);
        let outer = data.len() / (m * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * m * stride + s;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

/// Values `sum_tau c_tau e^{i<tau, t>}` at `t = 2 pi m / M` (row-major grid,
/// first coordinate slowest). Requires `M >= 2T + 1`.
pub fn synthesize(coeffs: &[Complex64], n: usize, t: usize, m: usize) -> Vec<Complex64> {
    assert!(m > 2 * t, "grid too coarse for the block");
    let mut data = vec![Complex64::new(0.0, 0.0); m.pow(n as u32)];
    for (i, c) in coeffs.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let tau = tau_of(i, n, t);
        let mut idx = 0usize;
        for &x in &tau {
            idx = idx * m + x.rem_euclid(m as i64) as usize;
        }
        data[idx] = *c;
    }
    fft_axes(&mut data, n, m, true);
    data
}

/// Coefficients of half-width `t` from grid values (aliasing folds
/// frequencies modulo `M`).
pub fn analyze(values: &[Complex64], n: usize, m: usize, t: usize) -> Vec<Complex64> {
    assert!(m > 2 * t, "grid too coarse for the block");
    let mut data = values.to_vec();
    fft_axes(&mut data, n, m, false);
    let scale = 1.0 / (m.pow(n as u32) as f64);
    let mut out = vec![Complex64::new(0.0, 0.0); block_len(n, t)];
    for (i, v) in out.iter_mut().enumerate() {
        let tau = tau_of(i, n, t);
        let mut idx = 0usize;
        for &x in &tau {
            idx = idx * m + x.rem_euclid(m as i64) as usize;
        }
        *v = data[idx] * scale;
    }
    out
}

/// Grid point `t` (radians) of flat grid index `idx`.
pub fn grid_point(mut idx: usize, n: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for i in (0..n).rev() {
        out[i] = 2.0 * std::f64::consts::PI * (idx % m) as f64 / m as f64;
        idx /= m;
    }
    out
}

/// Pairwise summation for reproducible reductions.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        len => {
            let (a, b) = v.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_sizes_are_smooth() {
        assert_eq!(fft_size(17), 18);
        assert_eq!(fft_size(97), 100);
        assert_eq!(fft_size(64), 64);
        assert_eq!(fft_size(0), 1);
    }

    #[test]
    fn index_round_trip() {
        for i in 0..block_len(3, 2) {
            assert_eq!(index_of(&tau_of(i, 3, 2), 2), Some(i));
        }
        assert_eq!(index_of(&[3, 0], 2), None);
    }

    #[test]
    fn synth_analyze_round_trip() {
        let n = 2;
        let t = 3;
        let coeffs: Vec<Complex64> = (0..block_len(n, t))
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let vals = synthesize(&coeffs, n, t, 2 * t + 1);
        let back = analyze(&vals, n, 2 * t + 1, t);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn synthesis_matches_direct_sum() {
        let mut c = vec![Complex64::new(0.0, 0.0); block_len(1, 2)];
        c[index_of(&[1], 2).unwrap()] = Complex64::new(0.5, 0.0);
        c[index_of(&[-1], 2).unwrap()] = Complex64::new(0.5, 0.0);
        let vals = synthesize(&c, 1, 2, 8);
        for (i, v) in vals.iter().enumerate() {
            let t = grid_point(i, 1, 8)[0];
            assert!((v.re - t.cos()).abs() < 1e-15 && v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn pairwise_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
