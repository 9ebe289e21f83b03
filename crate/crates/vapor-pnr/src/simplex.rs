//! Nelder-Mead simplex minimization with box bounds.
//!
//! Candidates are projected onto the box before evaluation, which keeps the
//! whole simplex feasible. Deterministic: no randomness anywhere in the
//! loop, so a fixed starting point gives a fixed trace.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<S> {
    pub max_iters: usize,
    /// Stop when the spread of simplex objective values falls below this.
    pub f_tol: S,
    /// Stop when every vertex coordinate is within this of the best vertex.
    pub x_tol: S,
    /// Initial step per coordinate, as a fraction of the box width.
    pub initial_step: S,
}

impl<S: Scalar> Default for SimplexOptions<S> {
    fn default() -> Self {
        SimplexOptions {
            max_iters: 2_000,
            f_tol: S::of(1e-12),
            x_tol: S::of(1e-10),
            initial_step: S::of(0.05),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult<S> {
    pub x: Vec<S>,
    pub f: S,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

fn clamp_to<S: Scalar>(x: &mut [S], bounds: &[(S, S)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = (*v).max(lo).min(hi);
    }
}

/// Minimizes `f` from `x0` inside `bounds` (one (lo, hi) pair per
/// coordinate).
pub fn minimize<S: Scalar>(
    mut f: impl FnMut(&[S]) -> S,
    x0: &[S],
    bounds: &[(S, S)],
    opts: &SimplexOptions<S>,
) -> SimplexResult<S> {
    assert_eq!(x0.len(), bounds.len(), "one bound pair per coordinate");
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &mut Vec<S>, evals: &mut usize| -> S {
        clamp_to(x, bounds);
        *evals += 1;
        f(x)
    };

    // standard coefficients: reflection 1, expansion 2, contraction 1/2,
    // shrink 1/2
    let alpha = S::one();
    let gamma = S::of(2.0);
    let rho = S::of(0.5);
    let sigma = S::of(0.5);

    let mut vertices: Vec<(Vec<S>, S)> = Vec::with_capacity(dim + 1);
    {
        let mut v0 = x0.to_vec();
        let fv = eval(&mut v0, &mut evals);
        vertices.push((v0, fv));
        for i in 0..dim {
            let mut v = x0.to_vec();
            let width = bounds[i].1 - bounds[i].0;
            let step = if width > S::zero() {
                width * opts.initial_step
            } else {
                S::of(1e-3)
            };
            // step inward when sitting on the upper bound
            v[i] = if v[i] + step <= bounds[i].1 { v[i] + step } else { v[i] - step };
            let fv = eval(&mut v, &mut evals);
            vertices.push((v, fv));
        }
    }

    let mut iters = 0usize;
    let mut converged = false;
    while iters < opts.max_iters {
        iters += 1;
        vertices.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));

        let f_best = vertices[0].1;
        let f_worst = vertices[dim].1;
        let x_spread = (0..dim)
            .map(|i| {
                vertices
                    .iter()
                    .map(|(v, _)| (v[i] - vertices[0].0[i]).abs())
                    .fold(S::zero(), |a, b| a.max(b))
            })
            .fold(S::zero(), |a, b| a.max(b));
        if (f_worst - f_best).abs() <= opts.f_tol && x_spread <= opts.x_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![S::zero(); dim];
        for (v, _) in vertices.iter().take(dim) {
            for (c, &vi) in centroid.iter_mut().zip(v) {
                *c += vi;
            }
        }
        for c in centroid.iter_mut() {
            *c /= S::from_count(dim as u64);
        }

        let worst = vertices[dim].clone();
        let mut reflected: Vec<S> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(&c, &w)| c + alpha * (c - w))
            .collect();
        let f_reflected = eval(&mut reflected, &mut evals);

        if f_reflected < vertices[0].1 {
            // try expanding past the reflection
            let mut expanded: Vec<S> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + gamma * (c - w))
                .collect();
            let f_expanded = eval(&mut expanded, &mut evals);
            vertices[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < vertices[dim - 1].1 {
            vertices[dim] = (reflected, f_reflected);
            continue;
        }

        // contract toward the centroid, outside or inside
        let (base, f_base) = if f_reflected < worst.1 {
            (&reflected, f_reflected)
        } else {
            (&worst.0, worst.1)
        };
        let mut contracted: Vec<S> = centroid
            .iter()
            .zip(base)
            .map(|(&c, &b)| c + rho * (b - c))
            .collect();
        let f_contracted = eval(&mut contracted, &mut evals);
        if f_contracted < f_base {
            vertices[dim] = (contracted, f_contracted);
            continue;
        }

        // shrink everything toward the best vertex
        let best = vertices[0].0.clone();
        for (v, fv) in vertices.iter_mut().skip(1) {
            for (vi, &bi) in v.iter_mut().zip(&best) {
                *vi = bi + sigma * (*vi - bi);
            }
            *fv = eval(v, &mut evals);
        }
    }

    vertices.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, f) = vertices.swap_remove(0);
    SimplexResult {
        x,
        f,
        iters,
        evals,
        converged,
    }
}
