//! Stepwise response-surface fit of the wheel experiment, its ANOVA and the
//! setting that minimizes handle effort.

use std::fs::File;
use std::path::Path;

use ergodesign::doe::{
    anova, desirability_optimize, fit_stepwise, level_grid, r_squared, read_observations, wheel_experiment_factors,
    DEFAULT_ALPHA,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/wheel_observations.csv");
    let factors = wheel_experiment_factors();
    let obs = read_observations(File::open(path)?, &factors, "effort_kgf")?;
    println!("{} runs", obs.response().len());

    let model = fit_stepwise(&obs, DEFAULT_ALPHA, DEFAULT_ALPHA)?;
    for (label, c) in model.labels().iter().zip(model.coefficients()) {
        println!("  {label:<10} {c:>9.4}");
    }
    println!("R^2 {:.2}%", r_squared(&model, &obs)?);

    let table = anova(&model, &obs)?;
    println!("\nterm        df    adj SS        F         p");
    for r in &table.rows {
        println!("{:<10} {:>3} {:>9.3} {:>9.2} {:>9.3e}", r.term, r.df, r.adj_ss, r.f, r.p);
    }
    println!("error      {:>3} {:>9.3}", table.error_df, table.error_ss);

    let best = desirability_optimize(&model, &obs, &level_grid(&factors))?;
    let setting: Vec<String> = best.settings.iter().map(|(f, l)| format!("{f}={l}")).collect();
    println!("\nbest setting {} (predicted {:.3}, d = {:.3})", setting.join(" "), best.predicted, best.desirability);
    Ok(())
}
