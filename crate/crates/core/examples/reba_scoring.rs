//! Scores a single posture by hand, then a batch file.

use std::fs::File;
use std::path::Path;

use ergodesign::reba::{batch_score, score, AngleCaps, Coupling, LoadClass, LoadCoupling, PostureAngles};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut p = PostureAngles::neutral();
    p.trunk_flexion = 35.0;
    p.neck_flexion = 25.0;
    p.knee_flexion = 45.0;
    p.right.upper_arm_flexion = 70.0;
    p.right.lower_arm_flexion = 40.0;
    p.right.wrist_deviation = 20.0;

    let load = LoadCoupling {
        load_class: LoadClass::from_kg(8.0),
        coupling: Coupling::Fair,
        ..Default::default()
    };
    let r = score(&p, &load)?;
    println!("trunk {} neck {} legs {}", r.trunk, r.neck, r.legs);
    println!("left  {} ({:?})", r.left.final_score, r.left.risk_band);
    println!("right {} ({:?})", r.right.final_score, r.right.risk_band);

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/postures.csv");
    for row in batch_score(File::open(path)?, &load, AngleCaps::default())? {
        let id = row.id.as_deref().unwrap_or("-");
        match (&row.result, &row.error) {
            (Some(r), _) => println!("{id:<14} {:>2}  {:?}", r.final_score(), r.right.risk_band.max(r.left.risk_band)),
            (None, Some(e)) => println!("{id:<14} line {}: {e}", row.line),
            _ => {}
        }
    }
    Ok(())
}
