//! Penetration depth per material and the resulting base plate length.

use ergodesign::scooping::{
    base_plate_length, calibrate_material, default_materials, penetration_depth, ScoopConditions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cond = ScoopConditions::default();
    let mut materials = default_materials();

    for m in &materials {
        println!("{:<12} {:>6.2} cm", m.name, penetration_depth(m, &cond)? * 100.0);
    }
    let plate = base_plate_length(&materials, &cond)?;
    println!("plate length {} cm (set by {})", plate.length_cm, plate.governing_material);

    // a material observed to stop the bucket at 4.5 cm
    materials.push(calibrate_material("clay", 0.045, &cond)?);
    let plate = base_plate_length(&materials, &cond)?;
    println!("with clay    {} cm (set by {})", plate.length_cm, plate.governing_material);
    Ok(())
}
