//! Deterministic derivative-free and quasi-Newton optimizers.
//!
//! No randomness anywhere: fixed grids, fixed shrink factors and fixed
//! simplex construction, so repeated runs are bit-identical.

use crate::scalar::Scalar;

/// One-dimensional minimization: a coarse uniform scan picks the bracket,
/// golden-section narrows it to `xtol`, and a final parabolic fit refines
/// the minimum. Returns `(x_min, f_min)`.
pub fn minimize_scalar<T: Scalar>(
    f: &mut dyn FnMut(T) -> T,
    lo: T,
    hi: T,
    grid_points: usize,
    xtol: T,
) -> (T, T) {
    debug_assert!(hi > lo);
    let n = grid_points.max(5);
    let step = (hi - lo) / T::cast((n - 1) as f64);
    let mut best_idx = 0usize;
    let mut best_val = T::infinity();
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + step * T::cast(i as f64);
        let v = f(x);
        values.push(v);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let mut a = if best_idx == 0 {
        lo
    } else {
        lo + step * T::cast((best_idx - 1) as f64)
    };
    let mut b = if best_idx == n - 1 {
        hi
    } else {
        lo + step * T::cast((best_idx + 1) as f64)
    };

    // golden section inside [a, b]
    let inv_phi = T::cast(0.618_033_988_749_894_8);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (mut x_min, mut f_min) = if fc < fd { (c, fc) } else { (d, fd) };

    // parabolic refinement through (a, x_min, b)
    let fa = f(a);
    let fb = f(b);
    let num = (x_min - a) * (x_min - a) * (f_min - fb) - (x_min - b) * (x_min - b) * (f_min - fa);
    let den = (x_min - a) * (f_min - fb) - (x_min - b) * (f_min - fa);
    if den.abs() > T::cast(1e-300) {
        let candidate = x_min - T::cast(0.5) * num / den;
        if candidate > a && candidate < b {
            let fx = f(candidate);
            if fx < f_min {
                x_min = candidate;
                f_min = fx;
            }
        }
    }
    (x_min, f_min)
}

#[derive(Debug, Clone)]
pub struct QuasiNewtonIteration<T> {
    pub value: T,
    pub gradient_norm: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct QuasiNewtonOutcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
    pub gradient_norm: T,
    pub converged: bool,
    pub trace: Vec<QuasiNewtonIteration<T>>,
}

/// BFGS with backtracking line search. The gradient closure reports how many
/// function evaluations it spent so the evaluation budget stays honest; it
/// receives the objective so finite-difference schemes can share the counter.
#[allow(clippy::type_complexity)]
pub fn bfgs_minimize<T: Scalar>(
    f: &mut dyn FnMut(&[T]) -> T,
    gradient: &mut dyn FnMut(&mut dyn FnMut(&[T]) -> T, &[T]) -> (Vec<T>, usize),
    x0: Vec<T>,
    gradient_tol: T,
    max_evals: usize,
) -> QuasiNewtonOutcome<T> {
    let n = x0.len();
    let mut evaluations = 0usize;
    let call = |f: &mut dyn FnMut(&[T]) -> T, x: &[T], evals: &mut usize| -> T {
        *evals += 1;
        f(x)
    };

    let mut x = x0;
    let mut fx = call(f, &x, &mut evaluations);
    let mut trace = Vec::new();
    if n == 0 {
        return QuasiNewtonOutcome {
            x,
            value: fx,
            evaluations,
            gradient_norm: T::zero(),
            converged: true,
            trace,
        };
    }
    let (mut g, spent) = gradient(f, &x);
    evaluations += spent;

    // inverse Hessian estimate
    let mut h_inv: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();

    let norm2 = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>().sqrt();
    let step_cap = T::cast(0.75);

    loop {
        let gnorm = norm2(&g);
        trace.push(QuasiNewtonIteration {
            value: fx,
            gradient_norm: gnorm,
            evaluations,
        });
        if gnorm < gradient_tol {
            return QuasiNewtonOutcome {
                x,
                value: fx,
                evaluations,
                gradient_norm: gnorm,
                converged: true,
                trace,
            };
        }
        if evaluations >= max_evals {
            return QuasiNewtonOutcome {
                x,
                value: fx,
                evaluations,
                gradient_norm: gnorm,
                converged: false,
                trace,
            };
        }

        let mut direction: Vec<T> = (0..n)
            .map(|i| -(0..n).map(|j| h_inv[i][j] * g[j]).sum::<T>())
            .collect();
        let mut slope: T = direction.iter().zip(&g).map(|(&d, &gi)| d * gi).sum();
        if slope >= T::zero() {
            // reset to steepest descent if the estimate lost descent
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] = if i == j { T::one() } else { T::zero() };
                }
            }
            direction = g.iter().map(|&gi| -gi).collect();
            slope = -gnorm * gnorm;
        }

        let dir_norm = norm2(&direction);
        let mut alpha = if dir_norm > step_cap {
            step_cap / dir_norm
        } else {
            T::one()
        };
        let armijo = T::cast(1e-4);
        let mut accepted = None;
        for _ in 0..30 {
            let candidate: Vec<T> = x
                .iter()
                .zip(&direction)
                .map(|(&xi, &di)| xi + alpha * di)
                .collect();
            let fc = call(f, &candidate, &mut evaluations);
            if fc <= fx + armijo * alpha * slope {
                accepted = Some((candidate, fc));
                break;
            }
            alpha *= T::cast(0.5);
            if evaluations >= max_evals {
                break;
            }
        }
        let Some((x_new, fx_new)) = accepted else {
            return QuasiNewtonOutcome {
                x,
                value: fx,
                evaluations,
                gradient_norm: gnorm,
                converged: gnorm < gradient_tol,
                trace,
            };
        };
        let (g_new, spent) = gradient(f, &x_new);
        evaluations += spent;

        let s: Vec<T> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy: T = s.iter().zip(&y).map(|(&a, &b)| a * b).sum();
        if sy > T::cast(1e-12) {
            let rho = T::one() / sy;
            // H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let mut hy = vec![T::zero(); n];
            for i in 0..n {
                hy[i] = (0..n).map(|j| h_inv[i][j] * y[j]).sum();
            }
            let yhy: T = y.iter().zip(&hy).map(|(&a, &b)| a * b).sum();
            let mut updated = vec![vec![T::zero(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    updated[i][j] = h_inv[i][j] - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
            h_inv = updated;
        }
        x = x_new;
        fx = fx_new;
        g = g_new;
    }
}

/// Central finite-difference gradient with a fixed step.
pub fn central_difference_gradient<T: Scalar>(
    f: &mut dyn FnMut(&[T]) -> T,
    x: &[T],
    step: T,
) -> (Vec<T>, usize) {
    let mut grad = Vec::with_capacity(x.len());
    let mut evals = 0usize;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe);
        probe[i] = x[i] - step;
        let minus = f(&probe);
        probe[i] = x[i];
        evals += 2;
        grad.push((plus - minus) / (T::cast(2.0) * step));
    }
    (grad, evals)
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub history: Vec<T>,
    pub converged: bool,
}

/// Nelder-Mead simplex descent with a restart-once policy: after the first
/// run converges (best-value decrease per step below `decrease_tol`), a fresh
/// simplex is spanned at the optimum and the search repeats once.
pub fn nelder_mead<T: Scalar, E>(
    f: &mut dyn FnMut(&[T]) -> Result<T, E>,
    x0: Vec<T>,
    initial_step: T,
    decrease_tol: T,
    max_iter: usize,
) -> Result<SimplexOutcome<T>, E> {
    let mut best_x = x0.clone();
    let mut best_val = f(&x0)?;
    let mut history = vec![best_val];
    let mut converged = false;
    for _restart in 0..2 {
        let outcome = nelder_mead_single(f, best_x.clone(), initial_step, decrease_tol, max_iter)?;
        history.extend_from_slice(&outcome.history);
        if outcome.value < best_val {
            best_val = outcome.value;
            best_x = outcome.x;
        }
        converged = outcome.converged;
    }
    Ok(SimplexOutcome {
        x: best_x,
        value: best_val,
        history,
        converged,
    })
}

fn nelder_mead_single<T: Scalar, E>(
    f: &mut dyn FnMut(&[T]) -> Result<T, E>,
    x0: Vec<T>,
    initial_step: T,
    decrease_tol: T,
    max_iter: usize,
) -> Result<SimplexOutcome<T>, E> {
    let n = x0.len();
    if n == 0 {
        let value = f(&x0)?;
        return Ok(SimplexOutcome {
            x: x0,
            value,
            history: vec![value],
            converged: true,
        });
    }
    let mut simplex: Vec<Vec<T>> = vec![x0.clone()];
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += initial_step;
        simplex.push(v);
    }
    let mut values: Vec<T> = Vec::with_capacity(n + 1);
    for v in &simplex {
        values.push(f(v)?);
    }
    let mut history = Vec::new();
    let mut converged = false;

    for _iter in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite cost"));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        history.push(values[best]);

        // centroid of all but the worst
        let mut centroid = vec![T::zero(); n];
        for &idx in order.iter().take(n) {
            for d in 0..n {
                centroid[d] += simplex[idx][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= T::cast(n as f64);
        }

        let lerp = |from: &[T], towards: &[T], t: T| -> Vec<T> {
            from.iter()
                .zip(towards)
                .map(|(&a, &b)| a + t * (b - a))
                .collect()
        };
        // reflection
        let reflected = lerp(&centroid, &simplex[worst], -T::one());
        let f_reflected = f(&reflected)?;
        if f_reflected < values[best] {
            // expansion
            let expanded = lerp(&centroid, &simplex[worst], -T::cast(2.0));
            let f_expanded = f(&expanded)?;
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            // contraction
            let contracted = lerp(&centroid, &simplex[worst], T::cast(0.5));
            let f_contracted = f(&contracted)?;
            if f_contracted < values[worst] {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // shrink towards the best vertex
                let best_point = simplex[best].clone();
                for idx in 0..=n {
                    if idx == best {
                        continue;
                    }
                    simplex[idx] = lerp(&best_point, &simplex[idx], T::cast(0.5));
                    values[idx] = f(&simplex[idx])?;
                }
            }
        }

        // the value spread bounds the decrease any further step can achieve
        let new_best = values
            .iter()
            .cloned()
            .fold(T::infinity(), |a, b| if b < a { b } else { a });
        let new_worst = values
            .iter()
            .cloned()
            .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
        if new_worst - new_best < decrease_tol {
            converged = true;
            break;
        }
    }

    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite cost"));
    Ok(SimplexOutcome {
        x: simplex[order[0]].clone(),
        value: values[order[0]],
        history,
        converged,
    })
}
