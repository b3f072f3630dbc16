//! Evaluates rates, harvested power and constraint residuals of a hand-made
//! operating point: maximum-ratio beamformers, mid split ratios and a surface
//! whose phases are all zero.

use nalgebra::DVector;
use ris_swipt::channels::{sample_channels_from_seed, GeometryConfig};
use ris_swipt::model::{
    constraint_residuals, effective_channels, evaluate, Solution, SystemConfig,
};
use ris_swipt::reflection::project_c4;

fn main() -> ris_swipt::Result<()> {
    let cfg = SystemConfig::reference();
    let channels = sample_channels_from_seed(&cfg, &GeometryConfig::default(), 7)?;

    let theta = DVector::zeros(cfg.n);
    let v = project_c4(&cfg.reflection, &theta);
    let h_eff = effective_channels(&channels, &v)?;
    let per_user = cfg.p_t / cfg.k as f64;
    let w = h_eff
        .iter()
        .map(|h| {
            let scale = per_user.sqrt() / h.norm();
            h.map(|z| z.conj() * scale)
        })
        .collect();
    let sol = Solution {
        w,
        v,
        theta,
        rho: vec![0.5; cfg.k],
    };

    let m = evaluate(&cfg, &channels, &sol)?;
    println!(
        "per-user SINR:      {:?}",
        m.sinr.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>()
    );
    println!("sum rate:           {:.4} bps/Hz", m.rate_id);
    println!("harvested power:    {:.4e} mW total", m.harvested_total());
    println!("harvesting rate:    {:.4}", m.rate_ph);
    println!("weighted objective: {:.4}", m.objective);
    println!("amplitude-model violation: {:.3e}", m.c4_violation);

    let r = constraint_residuals(&cfg, &channels, &sol)?;
    println!(
        "largest inequality residual: {:.4e} (positive means violated)",
        r.max_inequality()
    );
    println!(
        "SINR residuals: {:?}",
        r.c1.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>()
    );
    Ok(())
}
