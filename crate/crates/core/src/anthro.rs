//! Anthropometric reference dimensions and the design bounds derived from them.
//!
//! The default table carries the Indian anthropometric values used for the
//! cleaning-equipment case study. Custom tables can be loaded from CSV with
//! the header `name,population,percentile,value_mm`.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERTICAL_GRASP_REACH: &str = "vertical_grasp_reach";
pub const BIDELTOID_WIDTH: &str = "bideltoid_width";
pub const CHEST_THICKNESS: &str = "chest_thickness";
pub const FOREARM_LENGTH: &str = "forearm_length";

#[derive(Debug, Error)]
pub enum AnthroError {
    #[error("unknown dimension: {name} (P{percentile}, {population})")]
    UnknownDimension {
        name: String,
        percentile: Percentile,
        population: Population,
    },
    #[error("invalid dimension {name}: {reason}")]
    InvalidDimension { name: String, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Population {
    IndianMale,
    IndianFemale,
    Mixed,
    Custom(String),
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Population::IndianMale => f.write_str("indian_male"),
            Population::IndianFemale => f.write_str("indian_female"),
            Population::Mixed => f.write_str("mixed"),
            Population::Custom(name) => f.write_str(name),
        }
    }
}

impl FromStr for Population {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "" => Err("empty population".into()),
            "indian_male" | "male" => Ok(Population::IndianMale),
            "indian_female" | "female" => Ok(Population::IndianFemale),
            "mixed" => Ok(Population::Mixed),
            _ => Ok(Population::Custom(s.to_string())),
        }
    }
}

impl From<Population> for String {
    fn from(p: Population) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Population {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Percentile {
    P5,
    P50,
    P95,
}

impl Percentile {
    pub fn value(self) -> u8 {
        match self {
            Percentile::P5 => 5,
            Percentile::P50 => 50,
            Percentile::P95 => 95,
        }
    }
}

impl fmt::Display for Percentile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl From<Percentile> for u8 {
    fn from(p: Percentile) -> u8 {
        p.value()
    }
}

impl TryFrom<u8> for Percentile {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            5 => Ok(Percentile::P5),
            50 => Ok(Percentile::P50),
            95 => Ok(Percentile::P95),
            other => Err(format!("percentile must be 5, 50 or 95, got {other}")),
        }
    }
}

/// One body dimension for a population percentile, in millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnthroDimension {
    pub name: String,
    pub population: Population,
    pub percentile: Percentile,
    pub value_mm: f64,
}

impl AnthroDimension {
    pub fn new(
        name: impl Into<String>,
        population: Population,
        percentile: Percentile,
        value_mm: f64,
    ) -> Result<Self, AnthroError> {
        let name = name.into();
        if !(value_mm.is_finite() && value_mm > 0.0) {
            return Err(AnthroError::InvalidDimension {
                name,
                reason: format!("value must be positive, got {value_mm}"),
            });
        }
        Ok(Self {
            name,
            population,
            percentile,
            value_mm,
        })
    }
}

/// Lookup table of anthropometric dimensions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnthroTable {
    dims: Vec<AnthroDimension>,
}

impl AnthroTable {
    pub fn new(dims: Vec<AnthroDimension>) -> Self {
        Self { dims }
    }

    /// The four reference values used by the lever and handle constraints.
    pub fn indian_defaults() -> Self {
        use Percentile::*;
        let male = Population::IndianMale;
        let row = |name: &str, p, v| AnthroDimension {
            name: name.to_string(),
            population: male.clone(),
            percentile: p,
            value_mm: v,
        };
        Self::new(vec![
            row(VERTICAL_GRASP_REACH, P5, 1744.0),
            row(BIDELTOID_WIDTH, P95, 482.0),
            row(CHEST_THICKNESS, P95, 254.0),
            row(FOREARM_LENGTH, P5, 200.0),
        ])
    }

    pub fn dimensions(&self) -> &[AnthroDimension] {
        &self.dims
    }

    /// Adds or replaces the entry for the dimension's (name, percentile, population).
    pub fn insert(&mut self, dim: AnthroDimension) {
        match self.dims.iter_mut().find(|d| {
            d.name == dim.name && d.percentile == dim.percentile && d.population == dim.population
        }) {
            Some(slot) => *slot = dim,
            None => self.dims.push(dim),
        }
    }

    pub fn remove(&mut self, name: &str) {
        self.dims.retain(|d| d.name != name);
    }

    pub fn lookup(
        &self,
        name: &str,
        percentile: Percentile,
        population: &Population,
    ) -> Result<f64, AnthroError> {
        self.dims
            .iter()
            .find(|d| d.name == name && d.percentile == percentile && &d.population == population)
            .map(|d| d.value_mm)
            .ok_or_else(|| AnthroError::UnknownDimension {
                name: name.to_string(),
                percentile,
                population: population.clone(),
            })
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, AnthroError> {
        #[derive(Deserialize)]
        struct Row {
            name: String,
            population: String,
            percentile: u8,
            value_mm: f64,
        }

        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut dims = Vec::new();
        for (i, rec) in rdr.deserialize::<Row>().enumerate() {
            // header is line 1
            let line = i + 2;
            let row = rec.map_err(|e| AnthroError::Parse {
                line,
                message: e.to_string(),
            })?;
            let population = row
                .population
                .parse()
                .map_err(|message| AnthroError::Parse { line, message })?;
            let percentile = Percentile::try_from(row.percentile)
                .map_err(|message| AnthroError::Parse { line, message })?;
            let dim = AnthroDimension::new(row.name, population, percentile, row.value_mm)
                .map_err(|e| AnthroError::Parse {
                    line,
                    message: e.to_string(),
                })?;
            dims.push(dim);
        }
        Ok(Self::new(dims))
    }
}

/// Right-hand sides of the lever design constraints, in cm and cm³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintBounds {
    pub max_handle_height: f64,
    pub min_equipment_width: f64,
    pub worker_depth: f64,
    pub max_turning_width: f64,
    pub min_container_volume: f64,
    pub ground_clearance: f64,
    pub slider_gap: f64,
    pub tier_gap: f64,
}

impl Default for ConstraintBounds {
    fn default() -> Self {
        Self {
            max_handle_height: 175.0,
            min_equipment_width: 50.0,
            worker_depth: 25.0,
            max_turning_width: 300.0,
            min_container_volume: 60_000.0,
            ground_clearance: 15.0,
            slider_gap: 5.0,
            tier_gap: 20.0,
        }
    }
}

impl ConstraintBounds {
    /// Lists every non-positive field by name. `min_container_volume` may be
    /// zero to relax the capacity requirement.
    pub fn invalid_fields(&self) -> Vec<&'static str> {
        let fields = [
            ("max_handle_height", self.max_handle_height, false),
            ("min_equipment_width", self.min_equipment_width, false),
            ("worker_depth", self.worker_depth, false),
            ("max_turning_width", self.max_turning_width, false),
            ("min_container_volume", self.min_container_volume, true),
            ("ground_clearance", self.ground_clearance, false),
            ("slider_gap", self.slider_gap, false),
            ("tier_gap", self.tier_gap, false),
        ];
        fields
            .iter()
            .filter(|(_, v, zero_ok)| !(v.is_finite() && (*v > 0.0 || (*zero_ok && *v == 0.0))))
            .map(|(n, _, _)| *n)
            .collect()
    }
}

/// Rounds a millimetre measurement to the nearest 5 cm.
fn nearest_5cm(mm: f64) -> f64 {
    (mm / 50.0).round() * 5.0
}

/// Derives the constraint bounds from the Indian-male reference dimensions.
pub fn derive_bounds(table: &AnthroTable) -> Result<ConstraintBounds, AnthroError> {
    derive_bounds_for(table, &Population::IndianMale)
}

/// Body-derived bounds are rounded to the nearest 5 cm (1744 mm reach gives
/// 175 cm, 482 mm shoulders give 50 cm, 254 mm chest gives 25 cm, 200 mm
/// forearm gives 20 cm). The remaining bounds are equipment requirements and
/// keep their default values.
pub fn derive_bounds_for(
    table: &AnthroTable,
    population: &Population,
) -> Result<ConstraintBounds, AnthroError> {
    let reach = table.lookup(VERTICAL_GRASP_REACH, Percentile::P5, population)?;
    let shoulders = table.lookup(BIDELTOID_WIDTH, Percentile::P95, population)?;
    let chest = table.lookup(CHEST_THICKNESS, Percentile::P95, population)?;
    let forearm = table.lookup(FOREARM_LENGTH, Percentile::P5, population)?;

    Ok(ConstraintBounds {
        max_handle_height: nearest_5cm(reach),
        min_equipment_width: nearest_5cm(shoulders),
        worker_depth: nearest_5cm(chest),
        tier_gap: nearest_5cm(forearm),
        ..ConstraintBounds::default()
    })
}
