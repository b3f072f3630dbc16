//! The dense interior-point solver on a small concave quadratic program with
//! one ball and one half-space constraint, plus the phase-I routine that
//! finds a strictly feasible start.

use nalgebra::{DMatrix, DVector};
use ris_swipt::qcqp::{
    find_interior, solve, BarrierOptions, ConvexQuadraticProgram, QuadraticForm,
};

fn main() -> ris_swipt::Result<()> {
    // maximize -‖x - (2, 1)‖²  s.t.  ‖x‖² ≤ 1,  x₀ + x₁ ≤ 0.5
    let target = DVector::from_column_slice(&[2.0, 1.0]);
    let objective = QuadraticForm {
        a: -DMatrix::identity(2, 2),
        b: target.clone(),
        c: -target.norm_squared(),
    };
    let ball = QuadraticForm {
        a: DMatrix::identity(2, 2),
        b: DVector::zeros(2),
        c: -1.0,
    };
    let half = QuadraticForm {
        a: DMatrix::zeros(2, 2),
        b: DVector::from_column_slice(&[0.5, 0.5]),
        c: -0.5,
    };
    let prob = ConvexQuadraticProgram {
        objective,
        constraints: vec![ball, half],
        x0: DVector::zeros(2),
    };
    let sol = solve(&prob, 1e-9)?;
    println!(
        "status {:?} after {} Newton steps",
        sol.status, sol.iterations
    );
    println!(
        "x* = [{:.6}, {:.6}], objective {:.6}",
        sol.x[0], sol.x[1], sol.objective_value
    );
    println!(
        "multipliers {:?}, KKT residual {:.2e}",
        sol.multipliers, sol.kkt_residual
    );

    // phase I from an infeasible start
    let far = ConvexQuadraticProgram {
        x0: DVector::from_column_slice(&[3.0, -2.0]),
        ..prob
    };
    match find_interior(&far, 1e-3, None, &BarrierOptions::default())? {
        Some((x, steps)) => println!(
            "interior point [{:.4}, {:.4}] found in {steps} steps",
            x[0], x[1]
        ),
        None => println!("no strictly feasible point"),
    }
    Ok(())
}
