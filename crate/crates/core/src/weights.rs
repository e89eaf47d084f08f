//! Polynomial weights on lattices.

/// Euclidean norm of an integer vector.
pub fn norm(v: &[i64]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// `1 + |v|`.
pub fn bracket(v: &[i64]) -> f64 {
    1.0 + norm(v)
}

/// Checks `(1+|z|)^s <= (1+|w|)^s (1+|z-w|)^{|s|}` with a relative slack of `1e-12`.
pub fn peetre_holds(z: &[i64], w: &[i64], s: f64) -> bool {
    let diff: Vec<i64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
    let lhs = s * bracket(z).ln();
    let rhs = s * bracket(w).ln() + s.abs() * bracket(&diff).ln();
    lhs <= rhs + 1e-12 * (1.0 + rhs.abs())
}

/// Exhaustive check over all pairs in the ball of radius `r` in `Z^dim`
/// (`dim` 1 or 2) and integer exponents in `[-smax, smax]`; returns the number
/// of checked triples and the violations found.
pub fn peetre_exhaustive(dim: usize, r: i64, smax: i64) -> (usize, Vec<(Vec<i64>, Vec<i64>, i64)>) {
    let pts = ball(dim, r);
    let mut checked = 0;
    let mut bad = Vec::new();
    for z in &pts {
        for w in &pts {
            for s in -smax..=smax {
                checked += 1;
                if !peetre_holds(z, w, s as f64) {
                    bad.push((z.clone(), w.clone(), s));
                }
            }
        }
    }
    (checked, bad)
}

/// Lattice points of `Z^dim` with Euclidean norm at most `r`.
pub fn ball(dim: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for p in &out {
            for x in -r..=r {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out.retain(|p| p.iter().map(|x| x * x).sum::<i64>() <= r * r);
    out
}
