//! Effect of link noise: noise penalty against L, and the loss of convergence
//! without forgetting.
//!
//! cargo run --release --example noisy_links

use pdrls::config::Preset;
use pdrls::experiment::{monte_carlo, Scenario, TheorySummary};

fn main() -> pdrls::Result<()> {
    let mut cfg = Preset::Desk.config();
    cfg.runs = 20;
    let scenario = Scenario::resolve(&cfg)?;

    println!("predicted noise penalty at lambda = {}", cfg.lambda);
    for l in 1..=cfg.selection.dim {
        let t = TheorySummary::from_model(&scenario.with_entries(l)?.theory()?)?;
        println!("  L = {l}: {:.4e} ({:+.2} dB over ideal links)", t.noise_penalty, t.noise_penalty_db);
    }

    for scale in [0.0, 1.0] {
        let s = scenario.with_lambda(1.0)?.with_link_noise_scale(scale)?;
        let (_, summary) = monte_carlo(&s)?;
        let ss = summary.steady_state.expect("runs stay finite");
        println!(
            "lambda = 1, noise scale {scale}: tail {:.2} dB, trailing slope {:+.2e} dB/iteration",
            ss.msd_db,
            summary.trailing_slope_db_per_iteration.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
