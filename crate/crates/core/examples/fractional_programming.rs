//! The fractional-programming reformulation: with the closed-form auxiliaries
//! the reformulated value equals the weighted objective, any other auxiliaries
//! give a lower bound, and the split-ratio block has a closed-form interval.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_swipt::channels::{sample_channels_from_seed, GeometryConfig};
use ris_swipt::fp::{
    f_a_value, rho_feasible_interval, tight_aux, update_aux_eh, update_aux_id, update_rho, AuxVars,
};
use ris_swipt::model::{evaluate, SystemConfig};
use ris_swipt::optimizer::initialize;

fn main() -> ris_swipt::Result<()> {
    // 0 dB SINR target so the maximum-ratio start leaves room for the split
    let cfg = SystemConfig {
        gamma_min: 1.0,
        ..SystemConfig::reference()
    };
    let channels = sample_channels_from_seed(&cfg, &GeometryConfig::default(), 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sol = initialize(&cfg, &channels, &mut rng)?;
    let target = evaluate(&cfg, &channels, &sol)?.objective;

    let tight = tight_aux(&cfg, &channels, &sol, true)?;
    println!("weighted objective        {target:.10}");
    println!(
        "f_A at closed-form aux    {:.10}",
        f_a_value(&cfg, &channels, &sol, &tight)?
    );
    println!(
        "f_A at zero aux           {:.10}",
        f_a_value(&cfg, &channels, &sol, &AuxVars::zeros(cfg.k))?
    );

    // alternating the two closed forms from zero climbs to the same value
    let mut aux = AuxVars::zeros(cfg.k);
    for pass in 1..=5 {
        let (ai, bi) = update_aux_id(&cfg, &channels, &sol, &aux)?;
        let (ae, be) = update_aux_eh(&cfg, &channels, &sol, &aux)?;
        aux = AuxVars {
            alpha_i: ai,
            beta_i: bi,
            alpha_e: ae,
            beta_e: be,
        };
        println!(
            "pass {pass}: f_A = {:.10}",
            f_a_value(&cfg, &channels, &sol, &aux)?
        );
    }

    // the maximum-ratio start need not meet every SINR target
    for k in 0..cfg.k {
        match rho_feasible_interval(&cfg, &channels, &sol, k) {
            Ok((lo, hi)) => {
                let best = update_rho(&cfg, &channels, &sol, &tight, k)?;
                println!("user {k}: feasible split [{lo:.4}, {hi:.4}], block optimum {best:.4}");
            }
            Err(e) => println!("user {k}: {e}"),
        }
    }
    Ok(())
}
