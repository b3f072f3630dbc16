//! Per-element phase selection under the practical amplitude model: the best
//! phase for a target coefficient differs from its argument when the
//! amplitude depends on the phase.

use num_complex::Complex64;
use ris_swipt::model::ReflectionModel;
use ris_swipt::reflection::{optimal_theta, phase_objective, project_c4, reflection_amplitude};

fn main() {
    let practical = ReflectionModel::default();
    let ideal = ReflectionModel::ideal();
    println!(
        "amplitude at θ = 0: practical {:.4}, ideal {:.4}",
        reflection_amplitude(&practical, 0.0),
        reflection_amplitude(&ideal, 0.0)
    );

    for v in [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -0.5),
        Complex64::from_polar(0.8, 2.5),
        Complex64::from_polar(0.3, -1.2),
    ] {
        let t_ideal = optimal_theta(&ideal, v);
        let t_prac = optimal_theta(&practical, v);
        println!(
            "v = {v:.3}: arg {:.4}, ideal θ {:.4}, practical θ {:.4} (objective {:.5})",
            v.arg(),
            t_ideal,
            t_prac,
            phase_objective(&practical, v, t_prac)
        );
    }

    let theta = nalgebra::DVector::from_column_slice(&[0.0, 1.0, -2.0]);
    let coeffs = project_c4(&practical, &theta);
    println!(
        "coefficients on the amplitude model: {:?}",
        coeffs.iter().map(|z| format!("{z:.3}")).collect::<Vec<_>>()
    );
}
