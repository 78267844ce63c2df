//! Simulated steady-state MSD against the closed-form prediction for several
//! values of L, with ideal and with noisy links.
//!
//! cargo run --release --example theory_vs_simulation

use pdrls::config::Preset;
use pdrls::experiment::{compare_theory_sim, Scenario};

fn main() -> pdrls::Result<()> {
    let cfg = Preset::Desk.config();
    let noisy = Scenario::resolve(&cfg)?;
    for (label, scenario) in [("ideal links", noisy.with_link_noise_scale(0.0)?), ("noisy links", noisy)] {
        println!("{label}");
        println!("{:>3} {:>10} {:>10} {:>10} {:>8}", "L", "sim dB", "ideal dB", "noisy dB", "gap dB");
        let report = compare_theory_sim(&scenario, &cfg.selection.sweep)?;
        for r in &report.rows {
            println!(
                "{:>3} {:>10.2} {:>10.2} {:>10.2} {:>8.2}",
                r.entries, r.msd_sim_db, r.msd_ideal_db, r.msd_noisy_db, r.gap_db
            );
        }
    }
    Ok(())
}
