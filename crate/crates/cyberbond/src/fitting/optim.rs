//! Unconstrained minimizers used by the MLE driver: a Nelder-Mead simplex
//! and BFGS with numeric gradients plus backtracking line search.

pub(crate) struct Solution {
    pub point: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

const MAX_ITER_NM: usize = 4000;
const MAX_ITER_BFGS: usize = 500;
const F_TOL: f64 = 1e-12;
const X_TOL: f64 = 1e-10;
const GRAD_TOL: f64 = 1e-8;

/// Nelder-Mead downhill simplex with standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64]) -> Solution {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        let step = if v[i].abs() > 1e-8 {
            0.1 * v[i].abs()
        } else {
            0.1
        };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let mut converged = false;
    for _ in 0..MAX_ITER_NM {
        // Order best..worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n.saturating_sub(1)];

        let f_spread = (values[worst] - values[best]).abs();
        let x_spread: f64 = (0..n)
            .map(|i| (simplex[worst][i] - simplex[best][i]).abs())
            .fold(0.0, f64::max);
        if f_spread <= F_TOL * (1.0 + values[best].abs()) && x_spread <= X_TOL {
            converged = true;
            break;
        }

        // Centroid of all but the worst.
        let mut centroid = vec![0.0; n];
        for (idx, point) in simplex.iter().enumerate() {
            if idx != worst {
                for i in 0..n {
                    centroid[i] += point[i] / n as f64;
                }
            }
        }

        // Points along the line through the centroid away from the worst
        // vertex: x(a) = c + a * (c - worst).
        let along = |a: f64| -> Vec<f64> {
            (0..n)
                .map(|i| centroid[i] + a * (centroid[i] - simplex[worst][i]))
                .collect()
        };

        let reflected = along(1.0);
        let f_reflected = f(&reflected);

        if f_reflected < values[best] {
            let expanded = along(2.0);
            let f_expanded = f(&expanded);
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
            let contracted = if f_reflected < values[worst] {
                along(0.5)
            } else {
                along(-0.5)
            };
            let f_contracted = f(&contracted);
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for (idx, point) in simplex.iter_mut().enumerate() {
                    if idx != best {
                        for i in 0..n {
                            point[i] = anchor[i] + 0.5 * (point[i] - anchor[i]);
                        }
                    }
                }
                for idx in 0..=n {
                    if idx != best {
                        values[idx] = f(&simplex[idx]);
                    }
                }
            }
        }
    }

    let (arg, &value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty simplex");
    Solution {
        point: simplex[arg].clone(),
        value,
        converged,
    }
}

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    for i in 0..n {
        let h = 1e-6 * x[i].abs().max(1.0);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[i] += h;
        dn[i] -= h;
        g[i] = (f(&up) - f(&dn)) / (2.0 * h);
    }
    g
}

/// BFGS with inverse-Hessian updates and Armijo backtracking.
pub(crate) fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64]) -> Solution {
    let n = start.len();
    let mut x = start.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Solution {
            point: x,
            value: fx,
            converged: false,
        };
    }
    let mut g = gradient(f, &x);

    // Inverse Hessian approximation, starts at identity.
    let mut h_inv = vec![vec![0.0; n]; n];
    for (i, row) in h_inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let mut converged = false;
    for _ in 0..MAX_ITER_BFGS {
        let grad_norm = g.iter().map(|gi| gi * gi).sum::<f64>().sqrt();
        if grad_norm < GRAD_TOL {
            converged = true;
            break;
        }

        // Search direction d = -H_inv * g.
        let mut d = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                d[i] -= h_inv[i][j] * g[j];
            }
        }
        let descent: f64 = d.iter().zip(&g).map(|(di, gi)| di * gi).sum();
        if descent >= 0.0 || descent.is_nan() {
            // Not a descent direction: reset to steepest descent.
            for i in 0..n {
                d[i] = -g[i];
                for (j, row) in h_inv.iter_mut().enumerate() {
                    for (k, v) in row.iter_mut().enumerate() {
                        *v = if j == k { 1.0 } else { 0.0 };
                    }
                }
            }
        }

        // Armijo backtracking.
        let slope: f64 = d.iter().zip(&g).map(|(di, gi)| di * gi).sum();
        let mut alpha = 1.0;
        let mut x_new;
        let mut f_new;
        let mut accepted = false;
        for _ in 0..60 {
            x_new = x
                .iter()
                .zip(&d)
                .map(|(xi, di)| xi + alpha * di)
                .collect::<Vec<f64>>();
            f_new = f(&x_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * alpha * slope {
                let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let g_new = gradient(f, &x_new);
                let yk: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy: f64 = step.iter().zip(&yk).map(|(s, y)| s * y).sum();
                if sy > 1e-12 {
                    // BFGS inverse update (Sherman-Morrison form).
                    let rho = 1.0 / sy;
                    let mut hy = vec![0.0; n];
                    for i in 0..n {
                        for j in 0..n {
                            hy[i] += h_inv[i][j] * yk[j];
                        }
                    }
                    let yhy: f64 = yk.iter().zip(&hy).map(|(y, h)| y * h).sum();
                    for i in 0..n {
                        for j in 0..n {
                            h_inv[i][j] += (1.0 + rho * yhy) * rho * step[i] * step[j]
                                - rho * (hy[i] * step[j] + step[i] * hy[j]);
                        }
                    }
                }
                let x_moved: f64 = step.iter().map(|s| s.abs()).fold(0.0, f64::max);
                let f_drop = (fx - f_new).abs();
                x = x_new;
                fx = f_new;
                g = g_new;
                accepted = true;
                if x_moved < X_TOL && f_drop <= F_TOL * (1.0 + fx.abs()) {
                    converged = true;
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Line search exhausted; likely at a non-smooth point or optimum.
            let grad_norm = g.iter().map(|gi| gi * gi).sum::<f64>().sqrt();
            converged = grad_norm < 1e-4;
            break;
        }
        if converged {
            break;
        }
    }
    Solution {
        point: x,
        value: fx,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn quadratic(x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * (v - 2.0) * (v - 2.0))
            .sum()
    }

    #[test]
    fn nelder_mead_minimizes_quadratic() {
        let sol = nelder_mead(&quadratic, &[10.0, -3.0, 0.5]);
        assert!(sol.converged);
        for v in sol.point {
            assert!((v - 2.0).abs() < 1e-5, "{v}");
        }
    }

    #[test]
    fn nelder_mead_one_dimensional() {
        let f = |x: &[f64]| (x[0] - 3.5) * (x[0] - 3.5) + 1.0;
        let sol = nelder_mead(&f, &[0.0]);
        assert!(sol.converged);
        assert!((sol.point[0] - 3.5).abs() < 1e-6);
    }

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let sol = bfgs(&rosenbrock, &[-1.2, 1.0]);
        assert!((sol.point[0] - 1.0).abs() < 1e-5, "x0 {}", sol.point[0]);
        assert!((sol.point[1] - 1.0).abs() < 1e-5, "x1 {}", sol.point[1]);
    }

    #[test]
    fn bfgs_handles_infinite_regions() {
        // Objective infinite left of 0.5: the optimizer must stay in the
        // feasible region and home in on the minimum at 1.
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::INFINITY
            } else {
                (x[0] - 1.0) * (x[0] - 1.0)
            }
        };
        let sol = bfgs(&f, &[2.0]);
        assert!((sol.point[0] - 1.0).abs() < 1e-4);
    }
}
