//! Lift threshold, shelf tiers and the push/pull handle height from the
//! body-part discomfort curves in `data/`.

use std::fs::File;
use std::path::Path;

use ergodesign::handle::{
    maneuver_height, min_lift_height, read_curve, tier_layout, Task, DEFAULT_SPIKE_RATIO, DEFAULT_TIER_GAP,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let open = |name: &str, task| read_curve(File::open(data.join(name))?, Some(task), None);

    let lift = open("bcf_lift.csv", Task::Lift)?;
    let push = open("bcf_push.csv", Task::Push)?;
    let pull = open("bcf_pull.csv", Task::Pull)?;

    let low = min_lift_height(&lift, DEFAULT_SPIKE_RATIO)?;
    println!("lowest comfortable lift  {} cm (spike found: {})", low.height, low.spike);
    println!("tiers                    {:?}", tier_layout(175.0, low.height, DEFAULT_TIER_GAP)?);

    let sel = maneuver_height(&push, &pull)?;
    println!("handle height            {} cm", sel.height);
    println!("ranks push/pull          {:.2} / {:.2}", sel.rank_push, sel.rank_pull);
    println!("{}", sel.rationale);
    Ok(())
}
