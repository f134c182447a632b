//! Sweeps the lever through its tilt range and prints handle height,
//! capacity and mechanical advantage for the reference geometry.

use ergodesign::anthro::ConstraintBounds;
use ergodesign::mechanism::{
    check_feasibility, container_capacity, handle_height, load_capacity, mechanical_advantage, turning_width,
    equipment_length, MechanismGeometry,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = MechanismGeometry::default();
    let bounds = ConstraintBounds::default();

    println!("alpha  handle_cm  volume_cm3  turning_cm");
    for alpha in (0..=60).step_by(10) {
        let a = alpha as f64;
        let h = handle_height(&g, a)?;
        let v = container_capacity(&g, a)?.volume;
        let t = turning_width(equipment_length(&g, a), g.width_w, bounds.worker_depth);
        println!("{alpha:>5}  {h:>9.2}  {v:>10.0}  {t:>10.2}");
    }

    println!("\ngamma  MA      load for 100 N effort");
    for gamma in [30.0, 60.0, 90.0, 120.0] {
        println!(
            "{gamma:>5}  {:.4}  {:.1} N",
            mechanical_advantage(&g, gamma)?,
            load_capacity(&g, 100.0, gamma)?
        );
    }

    let s = check_feasibility(&g, &bounds)?;
    println!("\nfeasible: {} (handle slack {:.2}, volume slack {:.0}, turning slack {:.2})",
        s.feasible, s.handle_height_slack, s.volume_slack, s.turning_slack);
    Ok(())
}
