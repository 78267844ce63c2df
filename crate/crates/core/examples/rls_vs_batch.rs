//! A single exponentially weighted RLS filter against the regularized batch
//! least-squares solution over the same data.
//!
//! cargo run --example rls_vs_batch

use nalgebra::DVector;
use pdrls::algorithm::{batch_ls_solve, NodeState, DEFAULT_DELTA};
use pdrls::rng::{stream, Purpose};
use pdrls::signal::{assemble_batch, draw_measurement, draw_regressor, GroundTruth, NodeProfile, Sample};

fn main() -> pdrls::Result<()> {
    let (dim, lambda, steps) = (4, 0.99, 200);
    let w_o = GroundTruth::new(DVector::from_vec(vec![0.3, -1.2, 0.7, 2.0]))?;
    let profile = NodeProfile::new(vec![1.0, 0.5, 2.0, 1.5], 0.01)?;
    let mut rng = stream(3, 0, Purpose::NodeData, 0);

    let mut node = NodeState::init(dim, DEFAULT_DELTA)?;
    let mut history = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..steps {
        let u = draw_regressor(&profile, &mut rng);
        let d = draw_measurement(&u, &w_o, profile.sigma2_v(), &mut rng);
        history.push(Sample { u: u.clone(), d, noise: None });
        node.adapt(&u, d, lambda)?;
        // a lone node combines with nobody
        node.w = node.psi.clone();

        let batch = batch_ls_solve(&assemble_batch(&history, lambda)?, Some(DEFAULT_DELTA))?;
        worst = worst.max((&node.w - &batch).amax());
        if (i + 1) % 50 == 0 {
            println!(
                "i = {:3}  |w - w_o| = {:.3e}  |w - batch| = {:.3e}",
                i + 1,
                (&node.w - w_o.vector()).norm(),
                (&node.w - &batch).amax()
            );
        }
    }
    println!("largest difference from the batch solution: {worst:.3e}");
    Ok(())
}
