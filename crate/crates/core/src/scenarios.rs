//! Walking cases as quasi-static snapshots: a posture from the phase library
//! plus the support forces at the feet and crutch tips.
//!
//! Support sharing per phase (`W` body weight, `f` injured-foot fraction,
//! `κ` crutch share):
//!
//! | case | phase | injured foot | healthy foot | crutches |
//! |---|---|---|---|---|
//! | normal | heel_strike, mid_stance, toe_off | W/2 | W/2 | – |
//! | single_crutch | advance | – | W | – |
//! | single_crutch | shared_support | fW | (1−κ)(1−f)W | κ(1−f)W |
//! | single_crutch | swing | fW | – | (1−f)W |
//! | double_crutch | crutch_advance | fW | (1−f)W | – |
//! | double_crutch | injured_step | – | (1−κ)W | κW/2 each |
//! | double_crutch | healthy_step | fW | – | (1−f)W/2 each |
//!
//! The single crutch is always held on the healthy side. A crutch only
//! transmits force along its shaft, so its tip force points from the tip to
//! the grip with the tabulated vertical component. Library postures are
//! authored for a right-side injury and mirrored for a left one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::ExternalLoad;
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, Posture};
use crate::model::{attach_crutches, crutch, CrutchConfig, Model, Side};

/// Ground contact point in the foot frame (m).
pub const FOOT_CONTACT: [f64; 3] = [0.0, -0.08, 0.05];

pub const DEFAULT_INJURED_FOOT_FRACTION: f64 = 0.10;
pub const DEFAULT_CRUTCH_SHARE: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Normal,
    SingleCrutch,
    DoubleCrutch,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Normal, Case::SingleCrutch, Case::DoubleCrutch];

    pub fn phases(self) -> &'static [Phase] {
        use Phase::*;
        match self {
            Case::Normal => &[HeelStrike, MidStance, ToeOff],
            Case::SingleCrutch => &[Advance, SharedSupport, Swing],
            Case::DoubleCrutch => &[CrutchAdvance, InjuredStep, HealthyStep],
        }
    }

    /// The loaded phase analyzed when none is given.
    pub fn default_phase(self) -> Phase {
        match self {
            Case::Normal => Phase::MidStance,
            Case::SingleCrutch => Phase::SharedSupport,
            Case::DoubleCrutch => Phase::HealthyStep,
        }
    }

    pub fn crutch_count(self) -> u8 {
        match self {
            Case::Normal => 0,
            Case::SingleCrutch => 1,
            Case::DoubleCrutch => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Case::Normal => "normal",
            Case::SingleCrutch => "single_crutch",
            Case::DoubleCrutch => "double_crutch",
        }
    }

    /// Resolves a phase label for this case. `advance` names the
    /// healthy-foot-lifted phase of double-crutch walking.
    pub fn parse_phase(self, label: &str) -> Result<Phase> {
        let phase = match (self, label) {
            (Case::DoubleCrutch, "advance") => Some(Phase::HealthyStep),
            _ => Phase::from_label(label),
        };
        phase
            .filter(|p| self.phases().contains(p))
            .ok_or_else(|| Error::UnknownPhase {
                case: self.as_str().into(),
                phase: label.into(),
            })
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown case `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    HeelStrike,
    MidStance,
    ToeOff,
    Advance,
    SharedSupport,
    Swing,
    CrutchAdvance,
    InjuredStep,
    HealthyStep,
}

impl Phase {
    const ALL: [Phase; 9] = [
        Phase::HeelStrike,
        Phase::MidStance,
        Phase::ToeOff,
        Phase::Advance,
        Phase::SharedSupport,
        Phase::Swing,
        Phase::CrutchAdvance,
        Phase::InjuredStep,
        Phase::HealthyStep,
    ];

    pub fn as_str(self) -> &'static str {
        use Phase::*;
        match self {
            HeelStrike => "heel_strike",
            MidStance => "mid_stance",
            ToeOff => "toe_off",
            Advance => "advance",
            SharedSupport => "shared_support",
            Swing => "swing",
            CrutchAdvance => "crutch_advance",
            InjuredStep => "injured_step",
            HealthyStep => "healthy_step",
        }
    }

    fn from_label(label: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.as_str() == label)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub case: Case,
    pub phase: Phase,
    pub injured_side: Side,
    pub injured_foot_fraction: f64,
    /// Fraction of the weight not on the injured foot that the crutch(es)
    /// carry in shared-support phases.
    pub crutch_share: f64,
    /// Body weight W (N).
    pub body_weight: f64,
}

impl ScenarioConfig {
    /// Defaults for `case` on `model`: right foot injured, its default
    /// phase, W from the model's mass.
    pub fn new(case: Case, model: &Model) -> Self {
        Self {
            case,
            phase: case.default_phase(),
            injured_side: Side::Right,
            injured_foot_fraction: DEFAULT_INJURED_FOOT_FRACTION,
            crutch_share: DEFAULT_CRUTCH_SHARE,
            body_weight: model.weight(),
        }
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_injured_side(mut self, side: Side) -> Self {
        self.injured_side = side;
        self
    }

    pub fn healthy_side(&self) -> Side {
        self.injured_side.opposite()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.injured_foot_fraction) {
            return Err(Error::Config(format!(
                "injured_foot_fraction {} outside [0, 1]",
                self.injured_foot_fraction
            )));
        }
        if !unit(self.crutch_share) {
            return Err(Error::Config(format!(
                "crutch_share {} outside [0, 1]",
                self.crutch_share
            )));
        }
        if !(self.body_weight.is_finite() && self.body_weight > 0.0) {
            return Err(Error::Config(format!(
                "body_weight {} must be positive",
                self.body_weight
            )));
        }
        if self.injured_side == Side::Midline {
            return Err(Error::Config("injured_side must be left or right".into()));
        }
        if !self.case.phases().contains(&self.phase) {
            return Err(Error::UnknownPhase {
                case: self.case.as_str().into(),
                phase: self.phase.as_str().into(),
            });
        }
        Ok(())
    }
}

/// Which body part a support force acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    InjuredFoot,
    HealthyFoot,
    Crutch(Side),
}

fn foot_segment(side: Side) -> String {
    format!("foot{}", side.suffix().unwrap_or_default())
}

fn support_load(config: &ScenarioConfig, support: Support, magnitude: f64) -> ExternalLoad {
    let up = Vector3::new(0.0, magnitude, 0.0);
    match support {
        Support::InjuredFoot => ExternalLoad::force_at(
            foot_segment(config.injured_side),
            Vector3::from(FOOT_CONTACT),
            up,
        ),
        Support::HealthyFoot => ExternalLoad::force_at(
            foot_segment(config.healthy_side()),
            Vector3::from(FOOT_CONTACT),
            up,
        ),
        Support::Crutch(side) => {
            ExternalLoad::force_at(crutch::crutch_segment(side), crutch::crutch_tip(), up)
        }
    }
}

/// Support magnitudes (N) for each contact of the configured phase.
pub fn support_forces(config: &ScenarioConfig) -> Result<Vec<(Support, f64)>> {
    config.validate()?;
    let w = config.body_weight;
    let f = config.injured_foot_fraction;
    let k = config.crutch_share;
    let healthy = config.healthy_side();
    use Phase::*;
    use Support::*;
    Ok(match config.phase {
        HeelStrike | MidStance | ToeOff => {
            vec![(InjuredFoot, 0.5 * w), (HealthyFoot, 0.5 * w)]
        }
        Advance => vec![(HealthyFoot, w)],
        SharedSupport => {
            let injured = f * w;
            let crutch = k * (1.0 - f) * w;
            vec![
                (InjuredFoot, injured),
                (HealthyFoot, w - injured - crutch),
                (Crutch(healthy), crutch),
            ]
        }
        Swing => vec![(InjuredFoot, f * w), (Crutch(healthy), w - f * w)],
        CrutchAdvance => vec![(InjuredFoot, f * w), (HealthyFoot, w - f * w)],
        InjuredStep => {
            let each = 0.5 * k * w;
            vec![
                (HealthyFoot, w - 2.0 * each),
                (Crutch(Side::Left), each),
                (Crutch(Side::Right), each),
            ]
        }
        HealthyStep => {
            let each = 0.5 * (w - f * w);
            vec![
                (InjuredFoot, w - 2.0 * each),
                (Crutch(Side::Left), each),
                (Crutch(Side::Right), each),
            ]
        }
    })
}

/// Vertical support forces at feet and crutch tips whose sum is the body
/// weight. Snapshots tilt the crutch forces onto the shaft axis.
pub fn distribute_loads(config: &ScenarioConfig) -> Result<Vec<ExternalLoad>> {
    Ok(support_forces(config)?
        .into_iter()
        .map(|(support, magnitude)| support_load(config, support, magnitude))
        .collect())
}

/// A scenario file: the configuration knobs plus a posture table.
///
/// ```toml
/// case = "single_crutch"
/// phase = "shared_support"
/// injured_side = "right"        # optional
/// injured_foot_fraction = 0.10  # optional
/// crutch_share = 0.30           # optional
/// body_weight = 700.0           # optional, defaults to the model's weight
/// description = "..."           # optional
///
/// [posture]
/// lumbar_flexion = 0.1
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScenarioFile {
    pub case: Case,
    pub phase: String,
    pub injured_side: Option<Side>,
    pub injured_foot_fraction: Option<f64>,
    pub crutch_share: Option<f64>,
    pub body_weight: Option<f64>,
    pub description: Option<String>,
    #[serde(default)]
    pub posture: BTreeMap<String, f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str, lenient: bool) -> Result<Self> {
        crate::model::parse_toml(text, lenient)
    }

    /// Configuration for `model`, with defaults for omitted knobs.
    pub fn config(&self, model: &Model) -> Result<ScenarioConfig> {
        let mut config =
            ScenarioConfig::new(self.case, model).with_phase(self.case.parse_phase(&self.phase)?);
        if let Some(side) = self.injured_side {
            config.injured_side = side;
        }
        if let Some(f) = self.injured_foot_fraction {
            config.injured_foot_fraction = f;
        }
        if let Some(k) = self.crutch_share {
            config.crutch_share = k;
        }
        if let Some(w) = self.body_weight {
            config.body_weight = w;
        }
        Ok(config)
    }
}

/// Shipped phase-posture library, authored for a right-side injury.
const LIBRARY: [(Case, Phase, &str); 9] = [
    (
        Case::Normal,
        Phase::HeelStrike,
        include_str!("../data/scenarios/normal_heel_strike.toml"),
    ),
    (
        Case::Normal,
        Phase::MidStance,
        include_str!("../data/scenarios/normal_mid_stance.toml"),
    ),
    (
        Case::Normal,
        Phase::ToeOff,
        include_str!("../data/scenarios/normal_toe_off.toml"),
    ),
    (
        Case::SingleCrutch,
        Phase::Advance,
        include_str!("../data/scenarios/single_crutch_advance.toml"),
    ),
    (
        Case::SingleCrutch,
        Phase::SharedSupport,
        include_str!("../data/scenarios/single_crutch_shared_support.toml"),
    ),
    (
        Case::SingleCrutch,
        Phase::Swing,
        include_str!("../data/scenarios/single_crutch_swing.toml"),
    ),
    (
        Case::DoubleCrutch,
        Phase::CrutchAdvance,
        include_str!("../data/scenarios/double_crutch_crutch_advance.toml"),
    ),
    (
        Case::DoubleCrutch,
        Phase::InjuredStep,
        include_str!("../data/scenarios/double_crutch_injured_step.toml"),
    ),
    (
        Case::DoubleCrutch,
        Phase::HealthyStep,
        include_str!("../data/scenarios/double_crutch_healthy_step.toml"),
    ),
];

/// The shipped scenario file text for `(case, phase)`.
pub fn library_scenario(case: Case, phase: Phase) -> &'static str {
    LIBRARY
        .iter()
        .find(|(c, p, _)| *c == case && *p == phase)
        .map(|(_, _, text)| *text)
        .expect("library covers every phase of every case")
}

/// File name the library entry ships under.
pub fn library_file_name(case: Case, phase: Phase) -> String {
    format!("{case}_{phase}.toml")
}

/// A walking case frozen at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSnapshot {
    pub config: ScenarioConfig,
    pub posture: Posture,
    pub loads: Vec<ExternalLoad>,
    pub description: String,
    /// SHA-256 of the scenario text the posture came from.
    pub posture_hash: String,
}

impl ScenarioSnapshot {
    /// Sum of the vertical components of all support forces (N).
    pub fn vertical_support(&self) -> f64 {
        self.loads.iter().map(|l| l.force.y).sum()
    }

    pub fn crutch_loads(&self) -> usize {
        self.loads
            .iter()
            .filter(|l| l.segment.starts_with("crutch"))
            .count()
    }
}

fn hash_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn check_crutches(config: &ScenarioConfig, model: &Model) -> Result<()> {
    let present = crutch::crutch_sides(model);
    let needed: Vec<Side> = match config.case {
        Case::Normal => vec![],
        Case::SingleCrutch => vec![config.healthy_side()],
        Case::DoubleCrutch => vec![Side::Left, Side::Right],
    };
    for side in needed {
        if !present.contains(&side) {
            return Err(Error::ModelMismatch(format!(
                "{} needs a crutch in the {side} hand but the model has none there",
                config.case
            )));
        }
    }
    Ok(())
}

/// Turn vertical crutch-tip forces onto the shaft, keeping their vertical
/// component.
fn align_crutch_forces(model: &Model, posture: &Posture, loads: &mut [ExternalLoad]) -> Result<()> {
    let frames = forward_kinematics(model, posture)?;
    for load in loads.iter_mut() {
        let Some(side) = crutch::crutch_side_of(&load.segment) else {
            continue;
        };
        let placement = frames.segment(model, &load.segment).expect("checked above");
        // shaft direction, tip to grip
        let shaft = placement.rotation * -crutch::crutch_tip().normalize();
        if shaft.y < 0.2 {
            return Err(Error::Config(format!(
                "{side} crutch tilted too far from vertical to bear weight"
            )));
        }
        load.force = shaft * (load.force.y / shaft.y);
    }
    Ok(())
}

/// Library posture reflected through the sagittal plane. The reflection is
/// taken on a two-crutch copy of `model` so crutch angles find their partner
/// even when `model` holds a single crutch.
fn mirrored_table(model: &Model, table: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let not_bilateral =
        || Error::ModelMismatch("model is not bilateral; cannot mirror the library posture".into());
    let full =
        attach_crutches(model, &CrutchConfig::double(Side::Right)).map_err(|_| not_bilateral())?;
    let posture = Posture::from_named(&full, table)?
        .mirrored(&full)
        .ok_or_else(not_bilateral)?;
    Ok(full
        .coordinates()
        .iter()
        .zip(posture.q)
        .map(|(c, q)| (c.name.clone(), q))
        .collect())
}

/// Snapshot for `config` using the shipped phase-posture library.
pub fn build_snapshot(config: &ScenarioConfig, model: &Model) -> Result<ScenarioSnapshot> {
    config.validate()?;
    let text = library_scenario(config.case, config.phase);
    let file = ScenarioFile::parse(text, false)?;
    let mut table = file.posture.clone();
    if config.injured_side == Side::Left {
        table = mirrored_table(model, &table)?;
    }
    // crutch coordinates absent from the model stay at zero
    table.retain(|name, _| !name.starts_with("crutch_") || model.coordinate_index(name).is_some());
    let posture = Posture::from_named(model, &table)?;
    let description = file.description.unwrap_or_default();
    snapshot(config, model, posture, description, hash_text(text))
}

/// Snapshot from a user scenario file; its posture is used as written.
pub fn snapshot_from_file(text: &str, model: &Model, lenient: bool) -> Result<ScenarioSnapshot> {
    let file = ScenarioFile::parse(text, lenient)?;
    snapshot_from_parsed(&file, text, model)
}

/// Like [`snapshot_from_file`] for an already parsed (and possibly edited)
/// file; `source` is the text whose hash is recorded.
pub fn snapshot_from_parsed(
    file: &ScenarioFile,
    source: &str,
    model: &Model,
) -> Result<ScenarioSnapshot> {
    let config = file.config(model)?;
    config.validate()?;
    let posture = Posture::from_named(model, &file.posture)?;
    let description = file.description.clone().unwrap_or_default();
    snapshot(&config, model, posture, description, hash_text(source))
}

fn snapshot(
    config: &ScenarioConfig,
    model: &Model,
    posture: Posture,
    description: String,
    posture_hash: String,
) -> Result<ScenarioSnapshot> {
    check_crutches(config, model)?;
    let loads = distribute_loads(config)?;
    let mut loads = loads;
    for load in &loads {
        if !model.has_segment(&load.segment) {
            return Err(Error::ModelMismatch(format!(
                "support segment `{}` missing from model",
                load.segment
            )));
        }
    }
    align_crutch_forces(model, &posture, &mut loads)?;
    Ok(ScenarioSnapshot {
        config: config.clone(),
        posture,
        loads,
        description,
        posture_hash,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::model::{attach_crutches, default_model, CrutchConfig};

    fn config(case: Case, phase: Phase, w: f64) -> ScenarioConfig {
        ScenarioConfig {
            case,
            phase,
            injured_side: Side::Right,
            injured_foot_fraction: 0.10,
            crutch_share: 0.30,
            body_weight: w,
        }
    }

    fn by_segment(loads: &[ExternalLoad]) -> BTreeMap<String, f64> {
        loads
            .iter()
            .map(|l| (l.segment.clone(), l.force.y))
            .collect()
    }

    #[test]
    fn normal_mid_stance_splits_evenly() {
        let loads = distribute_loads(&config(Case::Normal, Phase::MidStance, 700.0)).unwrap();
        assert_eq!(
            by_segment(&loads),
            BTreeMap::from([("foot_l".into(), 350.0), ("foot_r".into(), 350.0)])
        );
    }

    #[test]
    fn crutch_force_follows_the_shaft() {
        let base = default_model();
        let model = attach_crutches(&base, &CrutchConfig::single(Side::Right)).unwrap();
        let snap =
            build_snapshot(&ScenarioConfig::new(Case::SingleCrutch, &model), &model).unwrap();
        let load = snap.loads.iter().find(|l| l.segment == "crutch_l").unwrap();
        let frames = forward_kinematics(&model, &snap.posture).unwrap();
        let crutch = frames.segment(&model, "crutch_l").unwrap();
        let grip = crutch.translation;
        let tip = crutch.transform_point(&crutch::crutch_tip());
        let shaft = (grip - tip).normalize();
        assert!((load.force.normalize() - shaft).norm() < 1e-12);
        let expected = 0.3 * 0.9 * model.weight();
        assert!((load.force.y - expected).abs() < 1e-9);
    }

    #[test]
    fn single_crutch_shared_support_split() {
        let loads =
            distribute_loads(&config(Case::SingleCrutch, Phase::SharedSupport, 700.0)).unwrap();
        let m = by_segment(&loads);
        assert_relative_eq!(m["foot_r"], 70.0, epsilon = 1e-9);
        assert_relative_eq!(m["crutch_l"], 189.0, epsilon = 1e-9);
        assert_relative_eq!(m["foot_l"], 441.0, epsilon = 1e-9);
    }

    #[test]
    fn double_crutch_healthy_step_split() {
        let loads =
            distribute_loads(&config(Case::DoubleCrutch, Phase::HealthyStep, 700.0)).unwrap();
        let m = by_segment(&loads);
        assert_relative_eq!(m["foot_r"], 70.0, epsilon = 1e-9);
        assert_relative_eq!(m["crutch_l"], 315.0, epsilon = 1e-9);
        assert_relative_eq!(m["crutch_r"], 315.0, epsilon = 1e-9);
        assert!(!m.contains_key("foot_l"));
    }

    #[test]
    fn fractions_outside_unit_interval_are_rejected() {
        let mut c = config(Case::SingleCrutch, Phase::SharedSupport, 700.0);
        c.injured_foot_fraction = 1.2;
        assert!(matches!(distribute_loads(&c), Err(Error::Config(_))));
        c.injured_foot_fraction = 0.1;
        c.crutch_share = -0.1;
        assert!(matches!(distribute_loads(&c), Err(Error::Config(_))));
    }

    #[test]
    fn phase_labels() {
        assert_eq!(
            Case::DoubleCrutch.parse_phase("advance").unwrap(),
            Phase::HealthyStep
        );
        assert_eq!(
            Case::SingleCrutch.parse_phase("advance").unwrap(),
            Phase::Advance
        );
        assert!(matches!(
            Case::Normal.parse_phase("swing"),
            Err(Error::UnknownPhase { .. })
        ));
    }

    #[test]
    fn every_library_entry_parses_and_builds() {
        let base = default_model();
        for case in Case::ALL {
            let model = attach_crutches(
                &base,
                &CrutchConfig {
                    count: case.crutch_count(),
                    injured_side: Side::Right,
                    hand: None,
                },
            )
            .unwrap();
            for &phase in case.phases() {
                let file = ScenarioFile::parse(library_scenario(case, phase), false).unwrap();
                assert_eq!(file.case, case);
                assert_eq!(case.parse_phase(&file.phase).unwrap(), phase);
                for name in file.posture.keys() {
                    assert!(
                        model.coordinate_index(name).is_some(),
                        "{case}/{phase}: {name}"
                    );
                }
                let snap =
                    build_snapshot(&ScenarioConfig::new(case, &model).with_phase(phase), &model)
                        .unwrap();
                assert_relative_eq!(snap.vertical_support(), model.weight(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn crutch_case_on_crutchless_model_is_a_mismatch() {
        let model = default_model();
        let c = ScenarioConfig::new(Case::SingleCrutch, &model);
        assert!(matches!(
            build_snapshot(&c, &model),
            Err(Error::ModelMismatch(_))
        ));
    }

    #[test]
    fn snapshot_case_structure() {
        let base = default_model();
        let single = attach_crutches(&base, &CrutchConfig::single(Side::Right)).unwrap();
        let double = attach_crutches(&base, &CrutchConfig::double(Side::Right)).unwrap();
        let n = build_snapshot(&ScenarioConfig::new(Case::Normal, &base), &base).unwrap();
        let s = build_snapshot(&ScenarioConfig::new(Case::SingleCrutch, &single), &single).unwrap();
        let d = build_snapshot(&ScenarioConfig::new(Case::DoubleCrutch, &double), &double).unwrap();
        assert_eq!((n.crutch_loads(), n.loads.len()), (0, 2));
        assert_eq!((s.crutch_loads(), s.loads.len()), (1, 3));
        assert_eq!((d.crutch_loads(), d.loads.len()), (2, 3));
    }

    #[test]
    fn normal_mid_stance_posture_is_symmetric() {
        let model = default_model();
        let snap = build_snapshot(&ScenarioConfig::new(Case::Normal, &model), &model).unwrap();
        assert_eq!(snap.posture.mirrored(&model).unwrap(), snap.posture);
    }

    #[test]
    fn user_file_overrides() {
        let model = default_model();
        let text = r#"
case = "normal"
phase = "heel_strike"
body_weight = 600.0
[posture]
lumbar_flexion = 0.2
"#;
        let snap = snapshot_from_file(text, &model, false).unwrap();
        assert_eq!(snap.config.body_weight, 600.0);
        assert_relative_eq!(snap.vertical_support(), 600.0, epsilon = 1e-12);
        let flex = model.coordinate_index("lumbar_flexion").unwrap();
        assert_eq!(snap.posture.q[flex], 0.2);

        let bad = text.replace("lumbar_flexion", "tail_wag");
        assert!(matches!(
            snapshot_from_file(&bad, &model, false),
            Err(Error::UnknownCoordinate(_))
        ));
    }
}
