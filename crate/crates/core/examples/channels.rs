//! Draws one channel realization of the reference geometry and prints the
//! large-scale gains of every link.

use ris_swipt::channels::{path_loss, sample_channels_from_seed, steering_vector, GeometryConfig};
use ris_swipt::model::SystemConfig;

fn main() -> ris_swipt::Result<()> {
    let cfg = SystemConfig::reference();
    let geo = GeometryConfig::default();
    let channels = sample_channels_from_seed(&cfg, &geo, 42)?;

    println!(
        "M = {}, N = {}, K = {}",
        channels.antennas(),
        channels.elements(),
        channels.users()
    );
    println!("Rician factor (linear): {:.4}", geo.rician_factor());
    println!(
        "path loss BS-RIS at 5 m: {:.3e}",
        path_loss(5.0, geo.pathloss_ris, &geo)?
    );

    let g_gain = channels.g.norm_squared() / (cfg.m * cfg.n) as f64;
    println!("mean |G|^2 per entry: {g_gain:.3e}");
    for k in 0..cfg.k {
        let direct = channels.h_d[k].norm_squared() / cfg.m as f64;
        let reflect = channels.h_r[k].norm_squared() / cfg.n as f64;
        println!("user {k}: mean |h_d|^2 = {direct:.3e}, mean |h_r|^2 = {reflect:.3e}");
    }

    let a = steering_vector(4, 0.3, geo.d_over_lambda)?;
    println!(
        "steering vector (4 elements, 0.3 rad): {:?}",
        a.iter().map(|z| format!("{z:.3}")).collect::<Vec<_>>()
    );

    // the same seed always gives the same draw
    let again = sample_channels_from_seed(&cfg, &geo, 42)?;
    assert_eq!(channels, again);
    Ok(())
}
