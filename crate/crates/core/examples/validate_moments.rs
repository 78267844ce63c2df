//! Monte-Carlo checks of E[B], E[B' (x) B'] and the aggregate link-noise
//! covariance against their closed forms on a three-node network.
//!
//! cargo run --release --example validate_moments

use pdrls::config::Preset;
use pdrls::experiment::Scenario;
use pdrls::selection::SchemeKind;
use pdrls::theory::oracle::{validate_moments, OracleSettings};

fn main() -> pdrls::Result<()> {
    let scenario = Scenario::resolve(&Preset::Tiny.config())?;
    let settings = OracleSettings::default();
    for kind in [SchemeKind::Sequential, SchemeKind::Stochastic, SchemeKind::UniformSubset] {
        for entries in [1, 2] {
            println!("{} L = {entries}", kind.as_str());
            let checks = validate_moments(&scenario.weights, &scenario.link_noise, kind, entries, 2, &settings)?;
            for c in checks {
                println!("  {c}");
            }
        }
    }
    Ok(())
}
