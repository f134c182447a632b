//! Design bounds from the built-in anthropometric table, then from a
//! custom population loaded as CSV.

use ergodesign::anthro::{derive_bounds, derive_bounds_for, AnthroTable, Population};

const CUSTOM: &str = "\
name,population,percentile,value_mm
vertical_grasp_reach,plant_crew,5,1905
bideltoid_width,plant_crew,95,455
chest_thickness,plant_crew,95,248
forearm_length,plant_crew,5,212
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = derive_bounds(&AnthroTable::indian_defaults())?;
    println!("default population");
    println!("  max handle height   {} cm", b.max_handle_height);
    println!("  min equipment width {} cm", b.min_equipment_width);
    println!("  worker depth        {} cm", b.worker_depth);
    println!("  slider gap          {} cm", b.slider_gap);

    let table = AnthroTable::from_csv_reader(CUSTOM.as_bytes())?;
    let b = derive_bounds_for(&table, &Population::Custom("plant_crew".into()))?;
    println!("plant_crew");
    println!("  max handle height   {} cm", b.max_handle_height);
    println!("  min equipment width {} cm", b.min_equipment_width);
    Ok(())
}
