//! Full joint design on the reference scenario (8 antennas, 4 users,
//! 60 elements, channel seed 42) with a per-stage summary of the trace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_swipt::channels::{sample_channels_from_seed, GeometryConfig};
use ris_swipt::model::SystemConfig;
use ris_swipt::optimizer::{penalty_solve, Block, SolveOptions};

fn main() -> ris_swipt::Result<()> {
    let cfg = SystemConfig::reference();
    let channels = sample_channels_from_seed(&cfg, &GeometryConfig::default(), 42)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let start = std::time::Instant::now();
    let report = penalty_solve(&cfg, &channels, &SolveOptions::default(), &mut rng)?;
    let m = &report.metrics;

    println!(
        "status {} in {:.2?}",
        report.status.as_str(),
        start.elapsed()
    );
    println!(
        "sum rate {:.4} bps/Hz, harvesting rate {:.4}, objective {:.4}",
        m.rate_id, m.rate_ph, m.objective
    );
    println!(
        "harvested power {:.4e} mW, largest residual {:.2e}, c4 {:.1e}",
        m.harvested_total(),
        report.residuals.max_inequality(),
        m.c4_violation
    );
    let t = &report.trace;
    println!(
        "ramp levels {:?}, restorations {}, penalty stages {}, inner iterations {}, Newton steps {}",
        t.ramp_levels, t.restorations, t.outer_stages, t.inner_iterations, t.newton_steps
    );

    println!("stage  penalty   ramp  last block    penalized  objective  c4");
    let last_stage = t.records.iter().map(|r| r.stage).max().unwrap_or(0);
    for stage in 0..=last_stage {
        let records: Vec<_> = t.stage(stage).collect();
        if let Some(r) = records.iter().rev().find(|r| r.block != Block::Aux) {
            println!(
                "{:5}  {:8.1e}  {:4.2}  {:12} {:10.5}  {:9.5}  {:.2e}",
                stage,
                r.penalty,
                r.ramp,
                format!("{:?}", r.block),
                r.penalized,
                r.objective,
                r.c4
            );
        }
    }
    Ok(())
}
