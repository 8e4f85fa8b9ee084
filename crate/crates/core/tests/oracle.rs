//! Reference solver checked against closed forms and brute force.

use proptest::prelude::*;
use signcon::objective::primal_value;
use signcon::oracle::{grid_argmax_1d, reference_solve, OracleOptions};
use signcon::{dataio, DataMatrix, Labels, LossFamily, LossSpec, SignPattern};

fn tight() -> OracleOptions {
    OracleOptions {
        tol: 1e-10,
        ..OracleOptions::default()
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (v, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[test]
fn ridge_matches_normal_equations() {
    let data = dataio::synth_regression(41, 20, 4, &SignPattern::unconstrained(4), 0.3).unwrap();
    let loss = LossSpec::new(LossFamily::SquareError, data.labels()).unwrap();
    let lambda = 0.05;
    let (d, n) = (data.dim(), data.len());
    let y = data.labels().values().unwrap();
    // (X Xᵀ + λ n I) w = X y
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (i, x) in data.columns().enumerate() {
        for r in 0..d {
            b[r] += x[r] * y[i];
            for c in 0..d {
                a[r][c] += x[r] * x[c];
            }
        }
    }
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += lambda * n as f64;
    }
    let expected = solve_dense(a, b);
    // the certificate bounds the objective; ‖w − w*‖² ≤ 2 tol / λ, so go tight
    let opts = OracleOptions {
        tol: 1e-15,
        ..OracleOptions::default()
    };
    let sol = reference_solve(&data, &loss, lambda, &SignPattern::unconstrained(d), &opts).unwrap();
    for (got, want) in sol.weights.iter().zip(&expected) {
        assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn hinge_in_two_dimensions_matches_grid() {
    let pattern = SignPattern::from_ints(&[1, -1]).unwrap();
    let data = DataMatrix::from_columns(
        &[vec![1.0, 0.5], vec![-0.3, 1.2], vec![0.8, -1.0], vec![-1.1, -0.2], vec![0.2, 0.9]],
        Labels::binary(vec![1.0, -1.0, 1.0, -1.0, 1.0]).unwrap(),
    )
    .unwrap();
    let loss = LossSpec::new(LossFamily::Hinge, data.labels()).unwrap();
    let lambda = 0.3;
    let sol = reference_solve(&data, &loss, lambda, &pattern, &tight()).unwrap();

    // w0 >= 0, w1 <= 0 on a 1e-3 grid
    let step = 1e-3;
    let mut best = f64::INFINITY;
    for a in 0..=3000 {
        for b in 0..=3000 {
            let w = [a as f64 * step, -(b as f64) * step];
            best = best.min(primal_value(&w, &data, &loss, lambda).unwrap());
        }
    }
    assert!(sol.objective <= best + 1e-9, "{} vs grid {best}", sol.objective);
    assert!(best - sol.objective <= 1e-3, "{} vs grid {best}", sol.objective);
    assert!(pattern.is_feasible(&sol.weights));
}

#[test]
fn grid_finds_parabola_peak() {
    let (x, fx) = grid_argmax_1d(|x| -(x - 3.0) * (x - 3.0), 0.0, 10.0, 1e-4);
    assert!((x - 3.0).abs() <= 1e-4, "{x}");
    assert!((-1e-8..=0.0).contains(&fx));
}

fn small_problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>, Vec<i64>, f64)> {
    (1usize..4, 3usize..12).prop_flat_map(|(d, n)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, d), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(-1i64..=1, d),
            0.05..1.0f64,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimum_beats_random_feasible_points(
        (columns, signs, ints, lambda) in small_problem(),
        probes in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 20),
    ) {
        let labels = Labels::binary(signs.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect()).unwrap();
        let data = DataMatrix::from_columns(&columns, labels).unwrap();
        let pattern = SignPattern::from_ints(&ints).unwrap();
        let loss = LossSpec::new(LossFamily::Logistic, data.labels()).unwrap();
        let sol = reference_solve(&data, &loss, lambda, &pattern, &OracleOptions::default()).unwrap();
        prop_assert!(pattern.is_feasible(&sol.weights));
        prop_assert!((primal_value(&sol.weights, &data, &loss, lambda).unwrap() - sol.objective).abs() < 1e-12);
        for p in probes {
            // fold into the cone by flipping offending coordinates
            let w: Vec<f64> = p[..ints.len()]
                .iter()
                .zip(&ints)
                .map(|(&v, &c)| if c as f64 * v < 0.0 { -v } else { v })
                .collect();
            prop_assert!(sol.objective <= primal_value(&w, &data, &loss, lambda).unwrap() + 1e-9);
        }
    }
}
