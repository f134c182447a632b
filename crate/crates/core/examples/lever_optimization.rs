//! Solves the lever sizing problem and cross-checks it against the
//! brute-force grid.

use ergodesign::optimizer::{grid_search_oracle, solve, OptimizationProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = OptimizationProblem::default();

    let r = solve(&problem, None)?;
    let g = &r.geometry;
    println!("status     {:?}", r.status);
    println!("oe cb bd   {:.3} {:.3} {:.3} cm", g.oe, g.cb, g.bd);
    println!("MA         {:.5}", r.objective);
    println!(
        "trace      {} starts, {} outer / {} inner iterations",
        r.trace.starts, r.trace.outer_iterations, r.trace.inner_iterations
    );

    let grid = grid_search_oracle(&problem, 0.5)?;
    let gg = &grid.geometry;
    println!("grid 0.5   {:.1} {:.1} {:.1} cm, MA {:.5}", gg.oe, gg.cb, gg.bd, grid.objective);

    // a container requirement no lever can meet
    let mut tight = problem;
    tight.bounds.min_container_volume = 1e9;
    println!("huge bin   {:?}", solve(&tight, None)?.status);
    Ok(())
}
