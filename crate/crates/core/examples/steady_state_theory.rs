//! Mean and mean-square stability checks and the steady-state MSD prediction
//! for the desk configuration, plus the predicted learning curve.
//!
//! cargo run --release --example steady_state_theory

use pdrls::config::Preset;
use pdrls::experiment::Scenario;
use pdrls::theory::to_db;

fn main() -> pdrls::Result<()> {
    let scenario = Scenario::resolve(&Preset::Desk.config())?;
    let model = scenario.theory()?;
    let radii = model.stability_checks()?;
    println!(
        "rho(lambda Q) = {:.12}, rho(lambda^2 Phi) = {:.12}",
        radii.spectral_radius_mean, radii.spectral_radius_ms
    );

    let msd = model.steady_state_msd()?;
    println!(
        "ideal links {:.2} dB, noisy links {:.2} dB (penalty {:.3e})",
        to_db(msd.msd_ideal),
        to_db(msd.msd_noisy),
        msd.noise_penalty
    );

    let w_o = scenario.ground_truth(0)?;
    let curve = model.transient_msd(&w_o, 3000)?;
    for i in [0, 100, 500, 1000, 2000, 3000] {
        println!("  i = {i:4}: {:.2} dB", to_db(curve[i]));
    }
    Ok(())
}
