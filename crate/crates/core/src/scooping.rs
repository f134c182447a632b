//! Bucket base-plate sizing from a work-energy balance between the moving
//! equipment and the frictional resistance of the scooped material.
//!
//! SI units throughout (m, kg, s, N); plate lengths are reported in cm.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shipped material database. Gravel is measured; the other materials carry
/// effective density-friction products calibrated against reference depths.
pub const DEFAULT_MATERIALS_CSV: &str = include_str!("../data/materials.csv");

#[derive(Debug, Error)]
pub enum ScoopError {
    #[error("division by zero: {0}")]
    Division(&'static str),
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("material list is empty")]
    NoMaterials,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Measured,
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialSpec {
    pub name: String,
    /// kg/m³
    pub density: Option<f64>,
    pub friction_mu: Option<f64>,
    /// kg/m³; equals `density * friction_mu` when both are known.
    pub effective_rho_mu: f64,
    pub provenance: Provenance,
}

impl MaterialSpec {
    pub fn measured(name: impl Into<String>, density: f64, mu: f64) -> Result<Self, ScoopError> {
        positive("density", density)?;
        positive("friction_mu", mu)?;
        Ok(Self {
            name: name.into(),
            density: Some(density),
            friction_mu: Some(mu),
            effective_rho_mu: density * mu,
            provenance: Provenance::Measured,
        })
    }

    pub fn effective(name: impl Into<String>, effective_rho_mu: f64) -> Result<Self, ScoopError> {
        positive("effective_rho_mu", effective_rho_mu)?;
        Ok(Self {
            name: name.into(),
            density: None,
            friction_mu: None,
            effective_rho_mu,
            provenance: Provenance::Calibrated,
        })
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ScoopError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ScoopError::Invalid {
            field,
            reason: format!("must be positive, got {v}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoopConditions {
    /// kg
    pub kerb_mass: f64,
    /// m/s
    pub approach_velocity: f64,
    /// m/s
    pub final_velocity: f64,
    /// m²
    pub bucket_area: f64,
    /// m/s²
    pub gravity: f64,
    /// cm
    pub blade_width: f64,
}

impl Default for ScoopConditions {
    fn default() -> Self {
        Self {
            kerb_mass: 38.0,
            approach_velocity: 0.5,
            final_velocity: 0.0,
            bucket_area: 0.063,
            gravity: 9.81,
            blade_width: 45.0,
        }
    }
}

impl ScoopConditions {
    pub fn validate(&self) -> Result<(), ScoopError> {
        positive("kerb_mass", self.kerb_mass)?;
        positive("gravity", self.gravity)?;
        if !(self.bucket_area.is_finite() && self.bucket_area >= 0.0) {
            return Err(ScoopError::Invalid {
                field: "bucket_area",
                reason: format!("must be non-negative, got {}", self.bucket_area),
            });
        }
        let (u, v) = (self.approach_velocity, self.final_velocity);
        if !(v.is_finite() && u.is_finite() && 0.0 <= v && v <= u) {
            return Err(ScoopError::Invalid {
                field: "final_velocity",
                reason: format!("need 0 <= v <= u, got v = {v}, u = {u}"),
            });
        }
        Ok(())
    }

    /// Twice the kinetic energy given up during penetration, `m (u² - v²)`.
    fn energy2(&self) -> f64 {
        self.kerb_mass
            * (self.approach_velocity * self.approach_velocity
                - self.final_velocity * self.final_velocity)
    }
}

/// Distance the base plate travels into the material before stopping.
pub fn penetration_depth(material: &MaterialSpec, cond: &ScoopConditions) -> Result<f64, ScoopError> {
    cond.validate()?;
    if material.effective_rho_mu == 0.0 {
        return Err(ScoopError::Division("effective_rho_mu is zero"));
    }
    if cond.bucket_area == 0.0 {
        return Err(ScoopError::Division("bucket area is zero"));
    }
    Ok((cond.energy2() / (2.0 * material.effective_rho_mu * cond.bucket_area * cond.gravity)).sqrt())
}

/// Constant deceleration that stops the equipment over `s` metres.
pub fn deceleration(cond: &ScoopConditions, s: f64) -> Result<f64, ScoopError> {
    if s == 0.0 {
        return Err(ScoopError::Division("penetration distance is zero"));
    }
    let (u, v) = (cond.approach_velocity, cond.final_velocity);
    Ok((v * v - u * u) / (2.0 * s))
}

/// Force delivered by the decelerating equipment over `s` metres.
pub fn scoop_force(cond: &ScoopConditions, s: f64) -> Result<f64, ScoopError> {
    if s == 0.0 {
        return Err(ScoopError::Division("penetration distance is zero"));
    }
    Ok(cond.energy2() / (2.0 * s))
}

/// Frictional resistance of the material over a plate depth `s`.
pub fn resistance_force(material: &MaterialSpec, cond: &ScoopConditions, s: f64) -> f64 {
    material.effective_rho_mu * cond.bucket_area * s * cond.gravity
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateSizing {
    /// Whole centimetres.
    pub length_cm: f64,
    pub governing_material: String,
    pub min_depth_m: f64,
    /// Set when the shallowest depth is under 1 cm.
    pub degenerate: bool,
}

/// Plate length that every listed material fully covers: the smallest
/// penetration depth, floored to whole centimetres.
pub fn base_plate_length(
    materials: &[MaterialSpec],
    cond: &ScoopConditions,
) -> Result<PlateSizing, ScoopError> {
    let mut best: Option<(&MaterialSpec, f64)> = None;
    for m in materials {
        let d = penetration_depth(m, cond)?;
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((m, d));
        }
    }
    let (m, depth) = best.ok_or(ScoopError::NoMaterials)?;
    // guard against 6.999999 style representation error before flooring
    let length_cm = (depth * 100.0 + 1e-9).floor();
    Ok(PlateSizing {
        length_cm,
        governing_material: m.name.clone(),
        min_depth_m: depth,
        degenerate: length_cm < 1.0,
    })
}

/// Effective product that makes the material stop at `target_depth` metres.
pub fn calibrate_material(
    name: impl Into<String>,
    target_depth: f64,
    cond: &ScoopConditions,
) -> Result<MaterialSpec, ScoopError> {
    cond.validate()?;
    if target_depth == 0.0 {
        return Err(ScoopError::Division("target depth is zero"));
    }
    positive("target_depth", target_depth)?;
    if cond.bucket_area == 0.0 {
        return Err(ScoopError::Division("bucket area is zero"));
    }
    let eff = cond.energy2() / (2.0 * cond.bucket_area * cond.gravity * target_depth * target_depth);
    MaterialSpec::effective(name, eff)
}

/// Parses a `name,density_kgm3,mu,effective_rho_mu` table.
pub fn read_materials<R: Read>(reader: R) -> Result<Vec<MaterialSpec>, ScoopError> {
    #[derive(Deserialize)]
    struct Row {
        name: String,
        density_kgm3: Option<f64>,
        mu: Option<f64>,
        effective_rho_mu: Option<f64>,
    }

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let err = |message: String| ScoopError::Parse { line, message };
        let row = rec.map_err(|e| err(e.to_string()))?;
        let spec = match (row.density_kgm3, row.mu, row.effective_rho_mu) {
            (Some(rho), Some(mu), eff) => {
                let spec = MaterialSpec::measured(&row.name, rho, mu).map_err(|e| err(e.to_string()))?;
                if let Some(eff) = eff {
                    if (eff - spec.effective_rho_mu).abs() > 1e-6 * spec.effective_rho_mu {
                        return Err(err(format!(
                            "effective_rho_mu {eff} disagrees with density * mu = {}",
                            spec.effective_rho_mu
                        )));
                    }
                }
                spec
            }
            (_, _, Some(eff)) => MaterialSpec::effective(&row.name, eff).map_err(|e| err(e.to_string()))?,
            _ => {
                return Err(err(format!(
                    "material {} needs density and mu, or effective_rho_mu",
                    row.name
                )))
            }
        };
        out.push(spec);
    }
    Ok(out)
}

pub fn default_materials() -> Vec<MaterialSpec> {
    read_materials(DEFAULT_MATERIALS_CSV.as_bytes()).expect("shipped material table parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gravel() -> MaterialSpec {
        MaterialSpec::measured("gravel", 2400.0, 0.8).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gravel_depth() {
        let d = penetration_depth(&gravel(), &ScoopConditions::default()).unwrap();
        assert!((0.0632..=0.0633).contains(&d), "{d}");
    }

    #[test]
    fn no_kinetic_energy_no_depth() {
        let c = ScoopConditions {
            final_velocity: 0.5,
            ..ScoopConditions::default()
        };
        assert_eq!(penetration_depth(&gravel(), &c).unwrap(), 0.0);
        assert_eq!(scoop_force(&c, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn doubling_resistance_scales_depth() {
        let c = ScoopConditions::default();
        let d1 = penetration_depth(&MaterialSpec::effective("a", 1000.0).unwrap(), &c).unwrap();
        let d2 = penetration_depth(&MaterialSpec::effective("b", 2000.0).unwrap(), &c).unwrap();
        assert!(rel(d1 / d2, 2f64.sqrt()) < 1e-12);
    }

    #[test]
    fn zero_area_or_product_is_division_error() {
        let c = ScoopConditions {
            bucket_area: 0.0,
            ..ScoopConditions::default()
        };
        assert!(matches!(penetration_depth(&gravel(), &c), Err(ScoopError::Division(_))));
        let mut zero = gravel();
        zero.effective_rho_mu = 0.0;
        assert!(matches!(
            penetration_depth(&zero, &ScoopConditions::default()),
            Err(ScoopError::Division(_))
        ));
    }

    #[test]
    fn forces_at_reference_depth() {
        let c = ScoopConditions::default();
        let s = 0.063269;
        assert!((scoop_force(&c, s).unwrap() - 75.08).abs() < 0.01);
        assert!((resistance_force(&gravel(), &c, s) - 75.07).abs() < 0.01);
        assert_eq!(resistance_force(&gravel(), &c, 0.0), 0.0);
        assert!(rel(scoop_force(&c, s / 2.0).unwrap(), 2.0 * scoop_force(&c, s).unwrap()) < 1e-12);
        assert!(rel(
            resistance_force(&gravel(), &c, 2.0 * s),
            2.0 * resistance_force(&gravel(), &c, s)
        ) < 1e-12);
        assert!(matches!(scoop_force(&c, 0.0), Err(ScoopError::Division(_))));
    }

    #[test]
    fn calibration_values() {
        let c = ScoopConditions::default();
        let mud = calibrate_material("mud", 0.0898, &c).unwrap();
        assert!((mud.effective_rho_mu - 953.1).abs() < 0.05);
        assert_eq!(mud.provenance, Provenance::Calibrated);
        let sand = calibrate_material("sand", 0.0894, &c).unwrap();
        assert!((sand.effective_rho_mu - 961.6).abs() < 0.05);
        let waste = calibrate_material("domestic_waste", 0.1611, &c).unwrap();
        assert!((waste.effective_rho_mu - 296.1).abs() < 0.05);
        assert!(matches!(calibrate_material("x", 0.0, &c), Err(ScoopError::Division(_))));
    }

    #[test]
    fn plate_length() {
        let c = ScoopConditions::default();
        let all = default_materials();
        assert_eq!(all.len(), 4);
        let p = base_plate_length(&all, &c).unwrap();
        assert_eq!(p.length_cm, 6.0);
        assert_eq!(p.governing_material, "gravel");
        assert!(!p.degenerate);

        assert_eq!(base_plate_length(&[gravel()], &c).unwrap().length_cm, 6.0);

        let dense = MaterialSpec::effective("lead_shot", 1e9).unwrap();
        let p = base_plate_length(&[dense], &c).unwrap();
        assert_eq!(p.length_cm, 0.0);
        assert!(p.degenerate);

        assert!(matches!(base_plate_length(&[], &c), Err(ScoopError::NoMaterials)));
    }

    #[test]
    fn material_table_parsing() {
        let all = default_materials();
        assert_eq!(all[0].provenance, Provenance::Measured);
        assert_eq!(all[0].effective_rho_mu, 1920.0);
        assert!(all[1..].iter().all(|m| m.provenance == Provenance::Calibrated));

        let bad = "name,density_kgm3,mu,effective_rho_mu\ngravel,2400,0.8,\nclay,abc,,\n";
        match read_materials(bad.as_bytes()) {
            Err(ScoopError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let inconsistent = "name,density_kgm3,mu,effective_rho_mu\ngravel,2400,0.8,1000\n";
        assert!(read_materials(inconsistent.as_bytes()).is_err());
        let empty = "name,density_kgm3,mu,effective_rho_mu\n";
        assert!(read_materials(empty.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn invalid_conditions() {
        let c = ScoopConditions {
            final_velocity: 0.6,
            ..ScoopConditions::default()
        };
        assert!(penetration_depth(&gravel(), &c).is_err());
        let c = ScoopConditions {
            kerb_mass: 0.0,
            ..ScoopConditions::default()
        };
        assert!(penetration_depth(&gravel(), &c).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn cond(m: f64, u: f64, a: f64) -> ScoopConditions {
            ScoopConditions {
                kerb_mass: m,
                approach_velocity: u,
                bucket_area: a,
                ..ScoopConditions::default()
            }
        }

        proptest! {
            #[test]
            fn force_balance_at_depth(eff in 10.0f64..5000.0, m in 1.0f64..200.0, u in 0.05f64..3.0, a in 0.01f64..0.5) {
                let c = cond(m, u, a);
                let mat = MaterialSpec::effective("x", eff).unwrap();
                let s = penetration_depth(&mat, &c).unwrap();
                let push = scoop_force(&c, s).unwrap();
                let resist = resistance_force(&mat, &c, s);
                prop_assert!((push - resist).abs() <= 1e-6 * push);
                // m a = -F
                let acc = deceleration(&c, s).unwrap();
                prop_assert!((m * acc + push).abs() <= 1e-9 * push);
            }

            #[test]
            fn depth_monotone(eff in 10.0f64..5000.0, k in 1.01f64..3.0, u in 0.05f64..3.0) {
                let c = cond(38.0, u, 0.063);
                let a = MaterialSpec::effective("a", eff).unwrap();
                let b = MaterialSpec::effective("b", eff * k).unwrap();
                prop_assert!(penetration_depth(&b, &c).unwrap() < penetration_depth(&a, &c).unwrap());
                let faster = cond(38.0, u * k, 0.063);
                prop_assert!(penetration_depth(&a, &faster).unwrap() > penetration_depth(&a, &c).unwrap());
            }

            #[test]
            fn calibration_round_trip(depth in 0.001f64..1.0, m in 1.0f64..200.0, u in 0.05f64..3.0) {
                let c = cond(m, u, 0.063);
                let mat = calibrate_material("x", depth, &c).unwrap();
                let back = penetration_depth(&mat, &c).unwrap();
                prop_assert!(((back - depth) / depth).abs() <= 1e-9);
            }
        }
    }
}
