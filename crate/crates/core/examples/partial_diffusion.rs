//! Step-by-step partial diffusion on a five-node line, comparing how many
//! entries are exchanged per iteration.
//!
//! cargo run --release --example partial_diffusion

use pdrls::algorithm::{Channels, NetworkState, Observation, PdrlsNetwork, DEFAULT_DELTA};
use pdrls::experiment::simulated_msd;
use pdrls::network::{build_uniform_combination, enumerate_links, Topology};
use pdrls::rng::{stream, Purpose, StreamRng};
use pdrls::selection::{SchemeKind, SelectionScheme};
use pdrls::signal::{draw_measurement, draw_regressor, GroundTruth, LinkNoiseProfile, NodeProfile};
use pdrls::theory::to_db;

fn main() -> pdrls::Result<()> {
    let topology = Topology::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])?;
    let dim = 4;
    let w_o = GroundTruth::draw(dim, &mut stream(1, 0, Purpose::GroundTruth, 0));
    let profiles: Vec<NodeProfile> = (0..5)
        .map(|k| NodeProfile::new(vec![0.5 + 0.3 * k as f64; dim], 0.005))
        .collect::<pdrls::Result<_>>()?;

    for kind in [SchemeKind::Sequential, SchemeKind::Stochastic, SchemeKind::UniformSubset] {
        for entries in [1, 2, 4] {
            let net = PdrlsNetwork::new(
                topology.clone(),
                build_uniform_combination(&topology),
                LinkNoiseProfile::noiseless(enumerate_links(&topology)),
                SelectionScheme::new(kind, entries, dim)?,
                0.995,
            )?;
            let mut data: Vec<StreamRng> = (0..5).map(|k| stream(1, 0, Purpose::NodeData, k)).collect();
            let mut channels = Channels::new(1, 0, 5, net.link_noise.index().len());
            let mut state = NetworkState::init(5, dim, DEFAULT_DELTA)?;
            let mut tail = 0.0;
            for i in 0..2000 {
                let obs: Vec<Observation> = profiles
                    .iter()
                    .zip(data.iter_mut())
                    .map(|(p, rng)| {
                        let u = draw_regressor(p, rng);
                        let d = draw_measurement(&u, &w_o, p.sigma2_v(), rng);
                        Observation { u, d }
                    })
                    .collect();
                state = net.step(&state, &obs, &mut channels)?;
                if i >= 1800 {
                    tail += simulated_msd(&state, &w_o) / 200.0;
                }
            }
            println!("{:>14} L = {entries}: tail MSD {:.2} dB", kind.as_str(), to_db(tail));
        }
    }
    Ok(())
}
