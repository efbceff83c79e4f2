//! Derivative-free minimization in the plane.

use crate::geom::Point;

#[derive(Debug, Clone, Copy)]
pub struct Minimum {
    pub x: Point,
    pub value: f64,
    #[allow(dead_code)]
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex descent for a function of two variables.
///
/// Stops once the simplex diameter drops below `tol_x` or after `max_iter`
/// iterations, in which case `converged` is false.
pub fn nelder_mead<F>(f: F, start: Point, step: f64, tol_x: f64, max_iter: usize) -> Minimum
where
    F: Fn(Point) -> f64,
{
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut values = simplex.map(&f);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        // order best..worst
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| {
            values[a]
                .total_cmp(&values[b])
                .then(simplex[a][0].total_cmp(&simplex[b][0]))
                .then(simplex[a][1].total_cmp(&simplex[b][1]))
        });
        simplex = idx.map(|i| simplex[i]);
        values = idx.map(|i| values[i]);

        let diameter = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| dist(simplex[i], simplex[j]))
            .fold(0.0, f64::max);
        if diameter <= tol_x {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid = mid(simplex[0], simplex[1]);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                lerp(centroid, simplex[2], -0.5)
            } else {
                lerp(centroid, simplex[2], 0.5)
            };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = mid(simplex[0], simplex[i]);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }

    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best],
        value: values[best],
        iterations,
        converged,
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn mid(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// `c + t (p - c)`
fn lerp(c: Point, p: Point, t: f64) -> Point {
    [c[0] + t * (p[0] - c[0]), c[1] + t * (p[1] - c[1])]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let m = nelder_mead(
            |x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.25).powi(2),
            [0.0, 0.0],
            0.5,
            1e-10,
            500,
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.5).abs() < 1e-8);
        assert!((m.x[1] + 0.25).abs() < 1e-8);
    }

    #[test]
    fn reports_non_convergence() {
        let m = nelder_mead(|x| x[0] + x[1], [0.0, 0.0], 1.0, 1e-12, 10);
        assert!(!m.converged);
        assert_eq!(m.iterations, 10);
    }
}
