//! Random connected topology, uniform combination weights and the link list.
//!
//! cargo run --example random_topology -- 10 2.0 42

use pdrls::network::{build_uniform_combination, enumerate_links, generate_random_topology};

fn main() -> pdrls::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(10);
    let degree: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(42);

    let topology = generate_random_topology(n, degree, seed)?;
    println!("{n} nodes, mean degree {:.2}, seed {seed}", topology.mean_degree());
    for (a, b) in topology.edges() {
        println!("  {} -- {}", a + 1, b + 1);
    }

    let weights = build_uniform_combination(&topology);
    println!("combination weights (column k holds node k's weights):");
    for row in weights.to_rows() {
        let cells: Vec<String> = row.iter().map(|w| format!("{w:5.3}")).collect();
        println!("  {}", cells.join(" "));
    }

    let links = enumerate_links(&topology);
    let names: Vec<String> = links.links().iter().map(|l| l.to_string()).collect();
    println!("{} directed links: {}", links.len(), names.join(" "));
    Ok(())
}
