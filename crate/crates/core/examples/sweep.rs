//! A small Monte-Carlo sweep over the number of surface elements, loaded from
//! the reference configuration file. Writes the row CSV, the aggregate CSV and
//! a gnuplot script into a temporary directory.

use ris_swipt::harness::{load_config, run_sweep, Method, SweepParam, SweepRunOptions, SweepSpec};

fn main() -> ris_swipt::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.cfg");
    let cfg = load_config(path)?;
    let spec = SweepSpec {
        parameter: SweepParam::NRis,
        values: vec![10.0, 30.0],
        drops: 2,
        master_seed: 2024,
    };
    let out = std::env::temp_dir().join("ris-swipt-sweep-example");
    let opts = SweepRunOptions {
        methods: vec![Method::FullRis, Method::NoRis],
        timing: true,
    };
    let outcome = run_sweep(&cfg, &spec, &out, &opts)?;
    println!(
        "{} rows written to {}",
        outcome.rows.len(),
        outcome.rows_path.display()
    );
    for a in &outcome.aggregates {
        println!(
            "N = {:>4}  {:<8}  mean sum rate {:8.4}  mean harvested {:.4e} mW  converged {}/{}",
            a.value,
            a.method,
            a.mean_sum_rate_bpshz,
            a.mean_harvested_power_mw_total,
            a.converged,
            a.rows
        );
    }
    println!("plot script: {}", outcome.plot_path.display());
    Ok(())
}
