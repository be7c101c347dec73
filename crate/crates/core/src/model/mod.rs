//! Rigid-body musculoskeletal model: segments joined into a tree rooted at
//! `ground`, muscle elements spanning them as polylines, and the anatomical
//! groups those elements are reported under.
//!
//! A [`ModelDef`] is the declarative content as written in a model document.
//! A [`Model`] is a `ModelDef` that passed validation, together with the
//! derived, frozen list of generalized coordinates.

pub(crate) mod crutch;
mod document;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use crutch::{attach_crutches, CrutchConfig, CRUTCH_LENGTH};
pub(crate) use document::parse_toml;
pub use document::{load_model, load_model_with, ParseOptions};
pub use validate::validate_model;

/// Name of the root segment every model must declare.
pub const GROUND: &str = "ground";

/// Shipped reduced trunk model.
pub const DEFAULT_MODEL_DOC: &str = include_str!("../../data/default_model.toml");

/// Loads the shipped default model.
pub fn default_model() -> Model {
    load_model(DEFAULT_MODEL_DOC).expect("shipped default model is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Midline,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Midline => Side::Midline,
        }
    }

    /// Name suffix used by the bilateral naming convention (`_l` / `_r`).
    pub fn suffix(self) -> Option<&'static str> {
        match self {
            Side::Left => Some("_l"),
            Side::Right => Some("_r"),
            Side::Midline => None,
        }
    }

    /// Side implied by a name's `_l` / `_r` suffix.
    pub fn from_name(name: &str) -> Option<Side> {
        if name.ends_with("_l") {
            Some(Side::Left)
        } else if name.ends_with("_r") {
            Some(Side::Right)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Midline => "midline",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            "midline" => Ok(Side::Midline),
            other => Err(Error::Config(format!("unknown side `{other}`"))),
        }
    }
}

/// Swaps a trailing `_l` for `_r` and vice versa; other names map to themselves.
pub fn mirror_name(name: &str) -> String {
    if let Some(stem) = name.strip_suffix("_l") {
        format!("{stem}_r")
    } else if let Some(stem) = name.strip_suffix("_r") {
        format!("{stem}_l")
    } else {
        name.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySegment {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Center of mass in the body frame (m).
    pub com: Vector3<f64>,
    /// Inertia about the COM, body frame (kg·m²).
    pub inertia: Matrix3<f64>,
}

impl BodySegment {
    pub fn massless(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            mass: 0.0,
            com: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

/// A joint between two segments. A joint carries one coordinate per axis;
/// multi-axis revolute joints compose their rotations in declaration order
/// (intrinsic), all about the common anchor point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDef {
    pub name: String,
    pub parent: String,
    pub child: String,
    pub kind: JointKind,
    /// Unit axes in the parent frame at the zero configuration.
    pub axes: Vec<Vector3<f64>>,
    pub coordinate_names: Vec<String>,
    pub anchor_parent: Vector3<f64>,
    pub anchor_child: Vector3<f64>,
    /// Optional `[min, max]` per coordinate.
    pub limits: Option<Vec<[f64; 2]>>,
}

impl JointDef {
    pub fn dof(&self) -> usize {
        match self.kind {
            JointKind::Fixed => 0,
            _ => self.axes.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub segment: String,
    pub point: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleElement {
    pub name: String,
    pub group: String,
    pub side: Side,
    pub path: Vec<PathPoint>,
    /// Force at full activation (N).
    pub f_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnatomicalGroup {
    RectusAbdominis,
    Iliacus,
    ExternalOblique,
    InternalOblique,
    QuadratusLumborum,
    Iliocostalis,
    LatissimusDorsi,
    Longissimus,
    Other,
}

impl AnatomicalGroup {
    /// The eight analyzed trunk groups, in reporting order.
    pub const TRUNK: [AnatomicalGroup; 8] = [
        AnatomicalGroup::RectusAbdominis,
        AnatomicalGroup::Iliacus,
        AnatomicalGroup::ExternalOblique,
        AnatomicalGroup::InternalOblique,
        AnatomicalGroup::QuadratusLumborum,
        AnatomicalGroup::Iliocostalis,
        AnatomicalGroup::LatissimusDorsi,
        AnatomicalGroup::Longissimus,
    ];

    /// Number of muscle elements the full-body reference model uses for this
    /// group. `None` for [`AnatomicalGroup::Other`].
    pub fn reference_element_count(self) -> Option<u32> {
        use AnatomicalGroup::*;
        match self {
            RectusAbdominis => Some(2),
            Iliacus => Some(22),
            ExternalOblique => Some(12),
            InternalOblique => Some(12),
            QuadratusLumborum => Some(36),
            Iliocostalis => Some(24),
            LatissimusDorsi => Some(28),
            Longissimus => Some(10),
            Other => None,
        }
    }

    pub fn is_trunk(self) -> bool {
        self != AnatomicalGroup::Other
    }

    pub fn as_str(self) -> &'static str {
        use AnatomicalGroup::*;
        match self {
            RectusAbdominis => "rectus_abdominis",
            Iliacus => "iliacus",
            ExternalOblique => "external_oblique",
            InternalOblique => "internal_oblique",
            QuadratusLumborum => "quadratus_lumborum",
            Iliocostalis => "iliocostalis",
            LatissimusDorsi => "latissimus_dorsi",
            Longissimus => "longissimus",
            Other => "other",
        }
    }
}

impl fmt::Display for AnatomicalGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleGroup {
    pub id: String,
    pub anatomical_name: AnatomicalGroup,
    pub anatomical_element_count: u32,
}

/// Declarative model content, exactly as written in a model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDef {
    pub segments: Vec<BodySegment>,
    pub joints: Vec<JointDef>,
    pub muscles: Vec<MuscleElement>,
    pub groups: Vec<MuscleGroup>,
    pub gravity: Vector3<f64>,
}

pub fn default_gravity() -> Vector3<f64> {
    Vector3::new(0.0, -9.81, 0.0)
}

/// One generalized coordinate: axis `axis` of joint `joint`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coordinate {
    pub name: String,
    pub joint: usize,
    pub axis: usize,
    pub kind: JointKind,
}

/// A validated model with its derived coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    def: ModelDef,
    coordinates: Vec<Coordinate>,
    /// Joint indices in tree pre-order from ground.
    joint_order: Vec<usize>,
    /// First coordinate index of each joint.
    joint_coord_start: Vec<usize>,
    /// Joint whose child is the segment; `None` for ground.
    parent_joint: Vec<Option<usize>>,
    segment_index: BTreeMap<String, usize>,
    muscle_index: BTreeMap<String, usize>,
    coordinate_index: BTreeMap<String, usize>,
}

impl Model {
    /// Validates `def` and derives the coordinate ordering.
    pub fn new(def: ModelDef) -> Result<Self> {
        let violations = validate_model(&def);
        if !violations.is_empty() {
            return Err(Error::Validation { violations });
        }
        Ok(Self::build(def))
    }

    fn build(def: ModelDef) -> Self {
        let segment_index: BTreeMap<String, usize> = def
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), i))
            .collect();
        let mut parent_joint = vec![None; def.segments.len()];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); def.segments.len()];
        for (j, joint) in def.joints.iter().enumerate() {
            let p = segment_index[&joint.parent];
            let c = segment_index[&joint.child];
            parent_joint[c] = Some(j);
            children[p].push(j);
        }

        let mut joint_order = Vec::with_capacity(def.joints.len());
        let mut stack: Vec<usize> = children[segment_index[GROUND]]
            .iter()
            .rev()
            .copied()
            .collect();
        while let Some(j) = stack.pop() {
            joint_order.push(j);
            let c = segment_index[&def.joints[j].child];
            stack.extend(children[c].iter().rev().copied());
        }

        let mut coordinates = Vec::new();
        let mut joint_coord_start = vec![0; def.joints.len()];
        for &j in &joint_order {
            let joint = &def.joints[j];
            joint_coord_start[j] = coordinates.len();
            for axis in 0..joint.dof() {
                coordinates.push(Coordinate {
                    name: joint.coordinate_names[axis].clone(),
                    joint: j,
                    axis,
                    kind: joint.kind,
                });
            }
        }
        let coordinate_index = coordinates
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();
        let muscle_index = def
            .muscles
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name.clone(), i))
            .collect();

        Self {
            def,
            coordinates,
            joint_order,
            joint_coord_start,
            parent_joint,
            segment_index,
            muscle_index,
            coordinate_index,
        }
    }

    pub fn def(&self) -> &ModelDef {
        &self.def
    }

    pub fn into_def(self) -> ModelDef {
        self.def
    }

    pub fn segments(&self) -> &[BodySegment] {
        &self.def.segments
    }

    pub fn joints(&self) -> &[JointDef] {
        &self.def.joints
    }

    pub fn muscles(&self) -> &[MuscleElement] {
        &self.def.muscles
    }

    pub fn groups(&self) -> &[MuscleGroup] {
        &self.def.groups
    }

    pub fn gravity(&self) -> Vector3<f64> {
        self.def.gravity
    }

    pub fn coordinates(&self) -> &[Coordinate] {
        &self.coordinates
    }

    pub fn dof(&self) -> usize {
        self.coordinates.len()
    }

    pub fn joint_order(&self) -> &[usize] {
        &self.joint_order
    }

    pub fn joint_coord_start(&self, joint: usize) -> usize {
        self.joint_coord_start[joint]
    }

    pub fn parent_joint(&self, segment: usize) -> Option<usize> {
        self.parent_joint[segment]
    }

    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segment_index.get(name).copied()
    }

    pub fn muscle_index(&self, name: &str) -> Option<usize> {
        self.muscle_index.get(name).copied()
    }

    pub fn coordinate_index(&self, name: &str) -> Option<usize> {
        self.coordinate_index.get(name).copied()
    }

    pub fn group(&self, id: &str) -> Option<&MuscleGroup> {
        self.def.groups.iter().find(|g| g.id == id)
    }

    pub fn has_segment(&self, name: &str) -> bool {
        self.segment_index.contains_key(name)
    }

    /// Total mass of all segments (kg).
    pub fn total_mass(&self) -> f64 {
        self.def.segments.iter().map(|s| s.mass).sum()
    }

    /// Body weight implied by the model's mass and gravity (N).
    pub fn weight(&self) -> f64 {
        self.total_mass() * self.def.gravity.norm()
    }

    /// For each coordinate, its bilateral mirror partner and the sign relating
    /// the two under reflection through the sagittal (x = 0) plane:
    /// mirrored posture has `q'[partner] = sign * q[i]`.
    ///
    /// Returns `None` when some coordinate has no geometrically matching partner.
    pub fn coordinate_mirror(&self) -> Option<Vec<(usize, f64)>> {
        self.coordinates
            .iter()
            .map(|c| {
                let partner = self.coordinate_index(&mirror_name(&c.name))?;
                let pc = &self.coordinates[partner];
                let axis = self.def.joints[c.joint].axes[c.axis];
                let partner_axis = self.def.joints[pc.joint].axes[pc.axis];
                let mirrored = match c.kind {
                    // axial vector: reflection flips the in-plane components
                    JointKind::Revolute => -reflect(&axis),
                    _ => reflect(&axis),
                };
                if (mirrored - partner_axis).norm() < 1e-9 {
                    Some((partner, 1.0))
                } else if (mirrored + partner_axis).norm() < 1e-9 {
                    Some((partner, -1.0))
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Reflection through the sagittal plane (x ↦ −x).
pub fn reflect(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-v.x, v.y, v.z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_names() {
        assert_eq!(mirror_name("hip_flexion_l"), "hip_flexion_r");
        assert_eq!(mirror_name("arm_r"), "arm_l");
        assert_eq!(mirror_name("lumbar_bending"), "lumbar_bending");
    }

    #[test]
    fn default_model_mirror_map_is_an_involution() {
        let model = default_model();
        let map = model
            .coordinate_mirror()
            .expect("default model is bilateral");
        for (i, &(p, s)) in map.iter().enumerate() {
            let (back, s2) = map[p];
            assert_eq!(back, i);
            assert_eq!(s * s2, 1.0);
        }
        let bending = model.coordinate_index("lumbar_bending").unwrap();
        assert_eq!(map[bending], (bending, -1.0));
        let flexion = model.coordinate_index("lumbar_flexion").unwrap();
        assert_eq!(map[flexion], (flexion, 1.0));
    }

    #[test]
    fn reference_counts() {
        let counts: Vec<u32> = AnatomicalGroup::TRUNK
            .iter()
            .map(|g| g.reference_element_count().unwrap())
            .collect();
        assert_eq!(counts, vec![2, 22, 12, 12, 36, 24, 28, 10]);
        assert_eq!(AnatomicalGroup::Other.reference_element_count(), None);
    }
}
