//! REBA (Rapid Entire Body Assessment) posture scoring.
//!
//! Angles are in degrees. Flexion is positive, extension negative. An angle
//! exactly on a band boundary (20, 45, 60, ...) falls in the less severe band.

use std::io::Read;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

/// Group A: [neck][trunk][legs].
pub const TABLE_A: [[[u8; 4]; 5]; 3] = [
    [[1, 2, 3, 4], [2, 3, 4, 5], [2, 4, 5, 6], [3, 5, 6, 7], [4, 6, 7, 8]],
    [[1, 2, 3, 4], [3, 4, 5, 6], [4, 5, 6, 7], [5, 6, 7, 8], [6, 7, 8, 9]],
    [[3, 3, 5, 6], [4, 5, 6, 7], [5, 6, 7, 8], [6, 7, 8, 9], [7, 8, 9, 9]],
];

/// Group B: [lower arm][upper arm][wrist].
pub const TABLE_B: [[[u8; 3]; 6]; 2] = [
    [[1, 2, 2], [1, 2, 3], [3, 4, 5], [4, 5, 5], [6, 7, 8], [7, 8, 8]],
    [[1, 2, 3], [2, 3, 4], [4, 5, 5], [5, 6, 7], [7, 8, 8], [8, 9, 9]],
];

/// [score A][score B].
pub const TABLE_C: [[u8; 12]; 12] = [
    [1, 1, 1, 2, 3, 3, 4, 5, 6, 7, 7, 7],
    [1, 2, 2, 3, 4, 4, 5, 6, 6, 7, 7, 8],
    [2, 3, 3, 3, 4, 5, 6, 7, 7, 8, 8, 8],
    [3, 4, 4, 4, 5, 6, 7, 8, 8, 9, 9, 9],
    [4, 4, 4, 5, 6, 7, 8, 8, 9, 9, 9, 9],
    [6, 6, 6, 7, 8, 8, 9, 9, 10, 10, 10, 10],
    [7, 7, 7, 8, 9, 9, 9, 10, 10, 11, 11, 11],
    [8, 8, 8, 9, 10, 10, 10, 10, 10, 11, 11, 11],
    [9, 9, 9, 10, 10, 10, 11, 11, 11, 12, 12, 12],
    [10, 10, 10, 11, 11, 11, 11, 12, 12, 12, 12, 12],
    [11, 11, 11, 11, 12, 12, 12, 12, 12, 12, 12, 12],
    [12, 12, 12, 12, 12, 12, 12, 12, 12, 12, 12, 12],
];

#[derive(Debug, Error, PartialEq)]
pub enum RebaError {
    #[error("{field} = {value} outside [-{cap}, {cap}] degrees")]
    AngleOutOfRange { field: &'static str, value: f64, cap: f64 },
    #[error("final score {0} outside 1..=15")]
    ScoreOutOfRange(u8),
    #[error("cannot read posture file: {0}")]
    Read(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmPosture {
    pub upper_arm_flexion: f64,
    pub shoulder_raised: bool,
    pub arm_abducted: bool,
    pub arm_supported: bool,
    pub lower_arm_flexion: f64,
    pub wrist_deviation: f64,
    pub wrist_bent_or_twisted: bool,
}

impl ArmPosture {
    pub fn neutral() -> Self {
        Self {
            lower_arm_flexion: 80.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostureAngles {
    pub trunk_flexion: f64,
    pub trunk_twisted: bool,
    pub trunk_side_flexed: bool,
    pub neck_flexion: f64,
    pub neck_twisted: bool,
    pub neck_side_flexed: bool,
    pub legs_bilateral: bool,
    pub knee_flexion: f64,
    pub left: ArmPosture,
    pub right: ArmPosture,
}

impl Default for PostureAngles {
    fn default() -> Self {
        Self::neutral()
    }
}

impl PostureAngles {
    pub fn neutral() -> Self {
        Self {
            trunk_flexion: 0.0,
            trunk_twisted: false,
            trunk_side_flexed: false,
            neck_flexion: 10.0,
            neck_twisted: false,
            neck_side_flexed: false,
            legs_bilateral: true,
            knee_flexion: 0.0,
            left: ArmPosture::neutral(),
            right: ArmPosture::neutral(),
        }
    }

    pub fn validate(&self, caps: AngleCaps) -> Result<(), RebaError> {
        let mut angles = vec![
            ("trunk_flexion", self.trunk_flexion),
            ("neck_flexion", self.neck_flexion),
            ("knee_flexion", self.knee_flexion),
        ];
        for (side, arm) in [("left", &self.left), ("right", &self.right)] {
            let names: [&'static str; 3] = if side == "left" {
                ["left_upper_arm_flexion", "left_lower_arm_flexion", "left_wrist_deviation"]
            } else {
                ["right_upper_arm_flexion", "right_lower_arm_flexion", "right_wrist_deviation"]
            };
            angles.push((names[0], arm.upper_arm_flexion));
            angles.push((names[1], arm.lower_arm_flexion));
            angles.push((names[2], arm.wrist_deviation));
        }
        for (field, value) in angles {
            if !(value.is_finite() && value.abs() <= caps.max_abs_deg) {
                return Err(RebaError::AngleOutOfRange {
                    field,
                    value,
                    cap: caps.max_abs_deg,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleCaps {
    pub max_abs_deg: f64,
}

impl Default for AngleCaps {
    fn default() -> Self {
        Self { max_abs_deg: 180.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadClass {
    /// Under 5 kg.
    #[default]
    Light,
    /// 5 to 10 kg.
    Moderate,
    /// Over 10 kg.
    Heavy,
}

impl LoadClass {
    pub fn from_kg(kg: f64) -> Self {
        if kg < 5.0 {
            LoadClass::Light
        } else if kg <= 10.0 {
            LoadClass::Moderate
        } else {
            LoadClass::Heavy
        }
    }

    fn points(self) -> u8 {
        match self {
            LoadClass::Light => 0,
            LoadClass::Moderate => 1,
            LoadClass::Heavy => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    #[default]
    Good,
    Fair,
    Poor,
    Unacceptable,
}

impl Coupling {
    fn points(self) -> u8 {
        match self {
            Coupling::Good => 0,
            Coupling::Fair => 1,
            Coupling::Poor => 2,
            Coupling::Unacceptable => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Activity {
    pub static_hold_over_1min: bool,
    pub repeated_over_4_per_min: bool,
    pub rapid_large_range_change: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadCoupling {
    pub load_class: LoadClass,
    pub shock_force: bool,
    pub coupling: Coupling,
    pub activity: Activity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskBand {
    Negligible,
    Low,
    Medium,
    High,
    VeryHigh,
}

pub fn risk_band(final_score: u8) -> Result<RiskBand, RebaError> {
    Ok(match final_score {
        1 => RiskBand::Negligible,
        2..=3 => RiskBand::Low,
        4..=7 => RiskBand::Medium,
        8..=10 => RiskBand::High,
        11..=15 => RiskBand::VeryHigh,
        other => return Err(RebaError::ScoreOutOfRange(other)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SideScore {
    pub upper_arm: u8,
    pub lower_arm: u8,
    pub wrist: u8,
    pub score_a: u8,
    pub score_b: u8,
    pub score_c: u8,
    #[serde(rename = "final")]
    pub final_score: u8,
    pub risk_band: RiskBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RebaResult {
    pub trunk: u8,
    pub neck: u8,
    pub legs: u8,
    pub left: SideScore,
    pub right: SideScore,
}

impl RebaResult {
    /// The worse of the two sides.
    pub fn final_score(&self) -> u8 {
        self.left.final_score.max(self.right.final_score)
    }
}

pub fn trunk_score(p: &PostureAngles) -> u8 {
    let f = p.trunk_flexion;
    let base = if f == 0.0 {
        1
    } else if f > 0.0 {
        match f {
            f if f <= 20.0 => 2,
            f if f <= 60.0 => 3,
            _ => 4,
        }
    } else if -f <= 20.0 {
        2
    } else {
        3
    };
    base + u8::from(p.trunk_twisted || p.trunk_side_flexed)
}

pub fn neck_score(p: &PostureAngles) -> u8 {
    let base = if (0.0..=20.0).contains(&p.neck_flexion) { 1 } else { 2 };
    base + u8::from(p.neck_twisted || p.neck_side_flexed)
}

pub fn legs_score(p: &PostureAngles) -> u8 {
    let base = if p.legs_bilateral { 1 } else { 2 };
    let knee = match p.knee_flexion {
        k if k <= 30.0 => 0,
        k if k <= 60.0 => 1,
        _ => 2,
    };
    base + knee
}

pub fn upper_arm_score(a: &ArmPosture) -> u8 {
    let f = a.upper_arm_flexion;
    let base: i8 = if f < -20.0 {
        2
    } else if f <= 20.0 {
        1
    } else if f <= 45.0 {
        2
    } else if f <= 90.0 {
        3
    } else {
        4
    };
    let adj = i8::from(a.arm_abducted) + i8::from(a.shoulder_raised) - i8::from(a.arm_supported);
    (base + adj).max(1) as u8
}

pub fn lower_arm_score(a: &ArmPosture) -> u8 {
    if (60.0..=100.0).contains(&a.lower_arm_flexion) {
        1
    } else {
        2
    }
}

pub fn wrist_score(a: &ArmPosture) -> u8 {
    let base = if a.wrist_deviation.abs() <= 15.0 { 1 } else { 2 };
    base + u8::from(a.wrist_bent_or_twisted)
}

pub fn table_a(neck: u8, trunk: u8, legs: u8) -> u8 {
    TABLE_A[usize::from(neck) - 1][usize::from(trunk) - 1][usize::from(legs) - 1]
}

pub fn table_b(lower_arm: u8, upper_arm: u8, wrist: u8) -> u8 {
    TABLE_B[usize::from(lower_arm) - 1][usize::from(upper_arm) - 1][usize::from(wrist) - 1]
}

pub fn table_c(score_a: u8, score_b: u8) -> u8 {
    TABLE_C[usize::from(score_a) - 1][usize::from(score_b) - 1]
}

pub fn score(posture: &PostureAngles, load: &LoadCoupling) -> Result<RebaResult, RebaError> {
    score_with_caps(posture, load, AngleCaps::default())
}

/// Group A is shared by both sides; Group B, Table C and the final score are
/// computed per arm.
pub fn score_with_caps(posture: &PostureAngles, load: &LoadCoupling, caps: AngleCaps) -> Result<RebaResult, RebaError> {
    posture.validate(caps)?;
    let trunk = trunk_score(posture);
    let neck = neck_score(posture);
    let legs = legs_score(posture);
    let score_a = table_a(neck, trunk, legs) + load.load_class.points() + u8::from(load.shock_force);
    let activity = u8::from(load.activity.static_hold_over_1min)
        + u8::from(load.activity.repeated_over_4_per_min)
        + u8::from(load.activity.rapid_large_range_change);

    let side = |arm: &ArmPosture| -> Result<SideScore, RebaError> {
        let upper_arm = upper_arm_score(arm);
        let lower_arm = lower_arm_score(arm);
        let wrist = wrist_score(arm);
        let score_b = table_b(lower_arm, upper_arm, wrist) + load.coupling.points();
        let score_c = table_c(score_a, score_b);
        let final_score = score_c + activity;
        Ok(SideScore {
            upper_arm,
            lower_arm,
            wrist,
            score_a,
            score_b,
            score_c,
            final_score,
            risk_band: risk_band(final_score)?,
        })
    };
    Ok(RebaResult {
        trunk,
        neck,
        legs,
        left: side(&posture.left)?,
        right: side(&posture.right)?,
    })
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "n" => Ok(false),
        "1" | "true" | "yes" | "y" => Ok(true),
        other => Err(serde::de::Error::custom(format!("'{other}' is not a flag"))),
    }
}

/// One posture per CSV row, with `left_`/`right_` prefixed arm columns.
#[derive(Debug, Deserialize)]
struct PostureRow {
    #[serde(default)]
    id: Option<String>,
    trunk_flexion: f64,
    #[serde(deserialize_with = "flag")]
    trunk_twisted: bool,
    #[serde(deserialize_with = "flag")]
    trunk_side_flexed: bool,
    neck_flexion: f64,
    #[serde(deserialize_with = "flag")]
    neck_twisted: bool,
    #[serde(deserialize_with = "flag")]
    neck_side_flexed: bool,
    #[serde(deserialize_with = "flag")]
    legs_bilateral: bool,
    knee_flexion: f64,
    left_upper_arm_flexion: f64,
    #[serde(deserialize_with = "flag")]
    left_shoulder_raised: bool,
    #[serde(deserialize_with = "flag")]
    left_arm_abducted: bool,
    #[serde(deserialize_with = "flag")]
    left_arm_supported: bool,
    left_lower_arm_flexion: f64,
    left_wrist_deviation: f64,
    #[serde(deserialize_with = "flag")]
    left_wrist_bent_or_twisted: bool,
    right_upper_arm_flexion: f64,
    #[serde(deserialize_with = "flag")]
    right_shoulder_raised: bool,
    #[serde(deserialize_with = "flag")]
    right_arm_abducted: bool,
    #[serde(deserialize_with = "flag")]
    right_arm_supported: bool,
    right_lower_arm_flexion: f64,
    right_wrist_deviation: f64,
    #[serde(deserialize_with = "flag")]
    right_wrist_bent_or_twisted: bool,
}

impl PostureRow {
    fn into_posture(self) -> (Option<String>, PostureAngles) {
        (
            self.id,
            PostureAngles {
                trunk_flexion: self.trunk_flexion,
                trunk_twisted: self.trunk_twisted,
                trunk_side_flexed: self.trunk_side_flexed,
                neck_flexion: self.neck_flexion,
                neck_twisted: self.neck_twisted,
                neck_side_flexed: self.neck_side_flexed,
                legs_bilateral: self.legs_bilateral,
                knee_flexion: self.knee_flexion,
                left: ArmPosture {
                    upper_arm_flexion: self.left_upper_arm_flexion,
                    shoulder_raised: self.left_shoulder_raised,
                    arm_abducted: self.left_arm_abducted,
                    arm_supported: self.left_arm_supported,
                    lower_arm_flexion: self.left_lower_arm_flexion,
                    wrist_deviation: self.left_wrist_deviation,
                    wrist_bent_or_twisted: self.left_wrist_bent_or_twisted,
                },
                right: ArmPosture {
                    upper_arm_flexion: self.right_upper_arm_flexion,
                    shoulder_raised: self.right_shoulder_raised,
                    arm_abducted: self.right_arm_abducted,
                    arm_supported: self.right_arm_supported,
                    lower_arm_flexion: self.right_lower_arm_flexion,
                    wrist_deviation: self.right_wrist_deviation,
                    wrist_bent_or_twisted: self.right_wrist_bent_or_twisted,
                },
            },
        )
    }
}

pub const POSTURE_COLUMNS: [&str; 22] = [
    "trunk_flexion",
    "trunk_twisted",
    "trunk_side_flexed",
    "neck_flexion",
    "neck_twisted",
    "neck_side_flexed",
    "legs_bilateral",
    "knee_flexion",
    "left_upper_arm_flexion",
    "left_shoulder_raised",
    "left_arm_abducted",
    "left_arm_supported",
    "left_lower_arm_flexion",
    "left_wrist_deviation",
    "left_wrist_bent_or_twisted",
    "right_upper_arm_flexion",
    "right_shoulder_raised",
    "right_arm_abducted",
    "right_arm_supported",
    "right_lower_arm_flexion",
    "right_wrist_deviation",
    "right_wrist_bent_or_twisted",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRow {
    pub line: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<RebaResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Scores every row of a posture CSV. Rows that fail to parse or validate
/// are reported with their line number; the rest are still scored.
pub fn batch_score<R: Read>(reader: R, load: &LoadCoupling, caps: AngleCaps) -> Result<Vec<BatchRow>, RebaError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| RebaError::Read(e.to_string()))?.clone();
    let mut rows = Vec::new();
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {
                let line = rec.position().map_or(0, |p| p.line());
                let row = match rec.deserialize::<PostureRow>(Some(&headers)) {
                    Ok(r) => {
                        let (id, posture) = r.into_posture();
                        match score_with_caps(&posture, load, caps) {
                            Ok(res) => BatchRow {
                                line,
                                id,
                                result: Some(res),
                                error: None,
                            },
                            Err(e) => BatchRow {
                                line,
                                id,
                                result: None,
                                error: Some(e.to_string()),
                            },
                        }
                    }
                    Err(e) => BatchRow {
                        line,
                        id: None,
                        result: None,
                        error: Some(e.to_string()),
                    },
                };
                rows.push(row);
            }
            Err(e) => {
                // a ragged row is still only one bad row
                let line = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(RebaError::Read(e.to_string()));
                }
                rows.push(BatchRow {
                    line,
                    id: None,
                    result: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worst() -> (PostureAngles, LoadCoupling) {
        let arm = ArmPosture {
            upper_arm_flexion: 120.0,
            shoulder_raised: true,
            arm_abducted: true,
            arm_supported: false,
            lower_arm_flexion: 140.0,
            wrist_deviation: 40.0,
            wrist_bent_or_twisted: true,
        };
        (
            PostureAngles {
                trunk_flexion: 80.0,
                trunk_twisted: true,
                trunk_side_flexed: true,
                neck_flexion: 40.0,
                neck_twisted: true,
                neck_side_flexed: false,
                legs_bilateral: false,
                knee_flexion: 90.0,
                left: arm,
                right: arm,
            },
            LoadCoupling {
                load_class: LoadClass::Heavy,
                shock_force: true,
                coupling: Coupling::Unacceptable,
                activity: Activity {
                    static_hold_over_1min: true,
                    repeated_over_4_per_min: true,
                    rapid_large_range_change: true,
                },
            },
        )
    }

    #[test]
    fn neutral_is_one() {
        let r = score(&PostureAngles::neutral(), &LoadCoupling::default()).unwrap();
        assert_eq!(r.left.final_score, 1);
        assert_eq!(r.right.final_score, 1);
        assert_eq!(r.left.risk_band, RiskBand::Negligible);
    }

    #[test]
    fn worst_is_fifteen() {
        let (p, l) = worst();
        let r = score(&p, &l).unwrap();
        assert_eq!((r.trunk, r.neck, r.legs), (5, 3, 4));
        assert_eq!((r.left.upper_arm, r.left.lower_arm, r.left.wrist), (6, 2, 3));
        assert_eq!((r.left.score_a, r.left.score_b, r.left.score_c), (12, 12, 12));
        assert_eq!(r.final_score(), 15);
        assert_eq!(r.left.risk_band, RiskBand::VeryHigh);
    }

    #[test]
    fn mid_fixture() {
        let arm = ArmPosture {
            upper_arm_flexion: 50.0,
            arm_abducted: true,
            lower_arm_flexion: 110.0,
            wrist_deviation: 20.0,
            wrist_bent_or_twisted: true,
            ..ArmPosture::default()
        };
        let p = PostureAngles {
            trunk_flexion: 30.0,
            trunk_twisted: true,
            neck_flexion: 25.0,
            legs_bilateral: false,
            knee_flexion: 45.0,
            left: arm,
            right: arm,
            ..PostureAngles::neutral()
        };
        let l = LoadCoupling {
            load_class: LoadClass::Moderate,
            coupling: Coupling::Fair,
            activity: Activity {
                static_hold_over_1min: true,
                ..Activity::default()
            },
            ..LoadCoupling::default()
        };
        let r = score(&p, &l).unwrap();
        assert_eq!((r.trunk, r.neck, r.legs), (4, 2, 3));
        assert_eq!(r.left.score_a, 8);
        assert_eq!(r.left.score_b, 8);
        assert_eq!(r.left.score_c, 10);
        assert_eq!(r.left.final_score, 11);
        assert_eq!(r.left.risk_band, RiskBand::VeryHigh);
    }

    #[test]
    fn band_boundaries_fall_low() {
        let mut p = PostureAngles::neutral();
        p.trunk_flexion = 20.0;
        assert_eq!(trunk_score(&p), 2);
        p.trunk_flexion = 60.0;
        assert_eq!(trunk_score(&p), 3);
        p.trunk_flexion = 60.001;
        assert_eq!(trunk_score(&p), 4);
        p.trunk_flexion = -20.0;
        assert_eq!(trunk_score(&p), 2);
        p.neck_flexion = 20.0;
        assert_eq!(neck_score(&p), 1);
        p.neck_flexion = -1.0;
        assert_eq!(neck_score(&p), 2);
        p.knee_flexion = 60.0;
        assert_eq!(legs_score(&p), 2);

        let mut a = ArmPosture::neutral();
        for (angle, want) in [(20.0, 1), (-20.0, 1), (-21.0, 2), (45.0, 2), (90.0, 3), (90.5, 4)] {
            a.upper_arm_flexion = angle;
            assert_eq!(upper_arm_score(&a), want, "{angle}");
        }
        a.upper_arm_flexion = 0.0;
        a.arm_supported = true;
        assert_eq!(upper_arm_score(&a), 1);
        a.lower_arm_flexion = 100.0;
        assert_eq!(lower_arm_score(&a), 1);
        a.wrist_deviation = -15.0;
        assert_eq!(wrist_score(&a), 1);
    }

    #[test]
    fn risk_bands() {
        assert_eq!(risk_band(1), Ok(RiskBand::Negligible));
        assert_eq!(risk_band(3), Ok(RiskBand::Low));
        assert_eq!(risk_band(7), Ok(RiskBand::Medium));
        assert_eq!(risk_band(9), Ok(RiskBand::High));
        assert_eq!(risk_band(15), Ok(RiskBand::VeryHigh));
        assert!(risk_band(0).is_err());
        assert!(risk_band(16).is_err());
    }

    #[test]
    fn tables_in_range_and_monotone() {
        for n in 1..=3u8 {
            for t in 1..=5u8 {
                for l in 1..=4u8 {
                    let v = table_a(n, t, l);
                    assert!((1..=9).contains(&v));
                    if n < 3 {
                        assert!(table_a(n + 1, t, l) >= v);
                    }
                    if t < 5 {
                        assert!(table_a(n, t + 1, l) >= v);
                    }
                    if l < 4 {
                        assert!(table_a(n, t, l + 1) >= v);
                    }
                }
            }
        }
        for la in 1..=2u8 {
            for ua in 1..=6u8 {
                for w in 1..=3u8 {
                    let v = table_b(la, ua, w);
                    assert!((1..=9).contains(&v));
                    if la < 2 {
                        assert!(table_b(la + 1, ua, w) >= v);
                    }
                    if ua < 6 {
                        assert!(table_b(la, ua + 1, w) >= v);
                    }
                    if w < 3 {
                        assert!(table_b(la, ua, w + 1) >= v);
                    }
                }
            }
        }
        for a in 1..=12u8 {
            for b in 1..=12u8 {
                let v = table_c(a, b);
                assert!((1..=12).contains(&v));
                if a < 12 {
                    assert!(table_c(a + 1, b) >= v);
                }
                if b < 12 {
                    assert!(table_c(a, b + 1) >= v);
                }
            }
        }
    }

    #[test]
    fn caps_enforced() {
        let mut p = PostureAngles::neutral();
        p.right.wrist_deviation = 200.0;
        assert!(matches!(
            score(&p, &LoadCoupling::default()),
            Err(RebaError::AngleOutOfRange {
                field: "right_wrist_deviation",
                ..
            })
        ));
        p.right.wrist_deviation = 50.0;
        assert!(score_with_caps(&p, &LoadCoupling::default(), AngleCaps { max_abs_deg: 45.0 }).is_err());
    }

    #[test]
    fn load_classes() {
        assert_eq!(LoadClass::from_kg(4.9), LoadClass::Light);
        assert_eq!(LoadClass::from_kg(5.0), LoadClass::Moderate);
        assert_eq!(LoadClass::from_kg(10.0), LoadClass::Moderate);
        assert_eq!(LoadClass::from_kg(10.1), LoadClass::Heavy);
    }

    fn csv_line(p: &PostureAngles) -> String {
        let b = |x: bool| if x { "1" } else { "0" };
        let arm = |a: &ArmPosture| {
            format!(
                "{},{},{},{},{},{},{}",
                a.upper_arm_flexion,
                b(a.shoulder_raised),
                b(a.arm_abducted),
                b(a.arm_supported),
                a.lower_arm_flexion,
                a.wrist_deviation,
                b(a.wrist_bent_or_twisted)
            )
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            p.trunk_flexion,
            b(p.trunk_twisted),
            b(p.trunk_side_flexed),
            p.neck_flexion,
            b(p.neck_twisted),
            b(p.neck_side_flexed),
            b(p.legs_bilateral),
            p.knee_flexion,
            arm(&p.left),
            arm(&p.right)
        )
    }

    #[test]
    fn batch() {
        let header = POSTURE_COLUMNS.join(",");
        let (w, _) = worst();
        let n = PostureAngles::neutral();
        let text = format!(
            "{header}\n{}\n{}\n{}\n{}\n",
            csv_line(&n),
            csv_line(&w),
            csv_line(&n).replacen("0", "abc", 1),
            csv_line(&n)
        );
        let rows = batch_score(text.as_bytes(), &LoadCoupling::default(), AngleCaps::default()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].result.unwrap().final_score(), 1);
        assert!(rows[1].result.unwrap().final_score() > 1);
        assert!(rows[2].result.is_none());
        assert_eq!(rows[2].line, 4);
        assert!(rows[2].error.is_some());
        assert_eq!(rows[3].result.unwrap().final_score(), 1);
        assert_eq!(rows.iter().map(|r| r.line).collect::<Vec<_>>(), vec![2, 3, 4, 5]);

        assert!(batch_score("".as_bytes(), &LoadCoupling::default(), AngleCaps::default())
            .unwrap()
            .is_empty());
        let ragged = format!("{header}\n1,2\n{}\n", csv_line(&n));
        let rows = batch_score(ragged.as_bytes(), &LoadCoupling::default(), AngleCaps::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_some());
        assert!(rows[1].result.is_some());
    }
}
