//! TOML model documents.
//!
//! ```toml
//! gravity = [0.0, -9.81, 0.0]
//!
//! [[segments]]
//! name = "ground"
//! mass = 0.0
//!
//! [[joints]]
//! name = "hinge"
//! parent = "ground"
//! child = "link"
//! kind = "revolute"
//! axis = [0.0, 0.0, 1.0]          # or a list of axes for a multi-coordinate joint
//! coordinates = ["hinge_angle"]   # optional; defaults to the joint name
//! limits = [-1.5, 1.5]            # optional; one pair per coordinate
//! ```
//!
//! Unknown fields are rejected unless [`ParseOptions::lenient`] is set.

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use super::{
    default_gravity, AnatomicalGroup, BodySegment, JointDef, JointKind, Model, ModelDef,
    MuscleElement, MuscleGroup, PathPoint, Side,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Ignore unknown fields instead of failing.
    pub lenient: bool,
}

/// Parses and validates a model document in strict mode.
pub fn load_model(doc: &str) -> Result<Model> {
    load_model_with(doc, ParseOptions::default())
}

pub fn load_model_with(doc: &str, options: ParseOptions) -> Result<Model> {
    let raw = parse_document(doc, options)?;
    Model::new(raw.into_def())
}

pub(crate) fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Deserializes a TOML document, collecting fields serde skipped.
pub(crate) fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, lenient: bool) -> Result<T> {
    let to_parse_error = |e: toml::de::Error| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    };
    let de = toml::Deserializer::parse(text).map_err(to_parse_error)?;
    let mut unknown = Vec::new();
    let value: T = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(to_parse_error)?;
    if !lenient && !unknown.is_empty() {
        return Err(Error::Parse {
            line: None,
            message: format!("unknown field(s): {}", unknown.join(", ")),
        });
    }
    Ok(value)
}

fn parse_document(doc: &str, options: ParseOptions) -> Result<RawModel> {
    parse_toml(doc, options.lenient)
}

#[derive(Debug, Deserialize)]
struct RawModel {
    #[serde(default)]
    segments: Vec<RawSegment>,
    #[serde(default)]
    joints: Vec<RawJoint>,
    #[serde(default)]
    muscles: Vec<RawMuscle>,
    #[serde(default)]
    groups: Vec<RawGroup>,
    gravity: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
struct RawSegment {
    name: String,
    mass: f64,
    #[serde(default)]
    com: [f64; 3],
    #[serde(default)]
    inertia: [[f64; 3]; 3],
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawJoint {
    name: String,
    parent: String,
    child: String,
    kind: JointKind,
    axis: Option<OneOrMany<[f64; 3]>>,
    coordinates: Option<Vec<String>>,
    #[serde(default)]
    anchor_parent: [f64; 3],
    #[serde(default)]
    anchor_child: [f64; 3],
    limits: Option<OneOrMany<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
struct RawPathPoint {
    segment: String,
    point: [f64; 3],
}

#[derive(Debug, Deserialize)]
struct RawMuscle {
    name: String,
    group: String,
    side: Side,
    path: Vec<RawPathPoint>,
    f_max: f64,
}

#[derive(Debug, Deserialize)]
struct RawGroup {
    id: String,
    anatomical_name: AnatomicalGroup,
    anatomical_element_count: u32,
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

impl RawModel {
    fn into_def(self) -> ModelDef {
        let segments = self
            .segments
            .into_iter()
            .map(|s| BodySegment {
                name: s.name,
                mass: s.mass,
                com: v3(s.com),
                inertia: Matrix3::from_fn(|r, c| s.inertia[r][c]),
            })
            .collect();
        let joints = self
            .joints
            .into_iter()
            .map(|j| {
                let axes: Vec<Vector3<f64>> = j
                    .axis
                    .map(|a| a.into_vec().into_iter().map(v3).collect())
                    .unwrap_or_default();
                let coordinate_names = j.coordinates.unwrap_or_else(|| match axes.len() {
                    1 => vec![j.name.clone()],
                    n => (0..n).map(|k| format!("{}_{k}", j.name)).collect(),
                });
                JointDef {
                    name: j.name,
                    parent: j.parent,
                    child: j.child,
                    kind: j.kind,
                    axes,
                    coordinate_names,
                    anchor_parent: v3(j.anchor_parent),
                    anchor_child: v3(j.anchor_child),
                    limits: j.limits.map(OneOrMany::into_vec),
                }
            })
            .collect();
        let muscles = self
            .muscles
            .into_iter()
            .map(|m| MuscleElement {
                name: m.name,
                group: m.group,
                side: m.side,
                path: m
                    .path
                    .into_iter()
                    .map(|p| PathPoint {
                        segment: p.segment,
                        point: v3(p.point),
                    })
                    .collect(),
                f_max: m.f_max,
            })
            .collect();
        let groups = self
            .groups
            .into_iter()
            .map(|g| MuscleGroup {
                id: g.id,
                anatomical_name: g.anatomical_name,
                anatomical_element_count: g.anatomical_element_count,
            })
            .collect();
        ModelDef {
            segments,
            joints,
            muscles,
            groups,
            gravity: self.gravity.map(v3).unwrap_or_else(default_gravity),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[segments]]
name = "ground"
mass = 0.0

[[segments]]
name = "link"
mass = 1.0
com = [0.5, 0.0, 0.0]

[[joints]]
name = "hinge"
parent = "ground"
child = "link"
kind = "revolute"
axis = [0.0, 0.0, 1.0]
"#;

    #[test]
    fn minimal_document_has_one_coordinate() {
        let model = load_model(MINIMAL).unwrap();
        assert_eq!(model.dof(), 1);
        assert_eq!(model.coordinates()[0].name, "hinge");
        assert_eq!(model.gravity(), Vector3::new(0.0, -9.81, 0.0));
    }

    #[test]
    fn unknown_field_is_rejected_unless_lenient() {
        let doc = MINIMAL.replace("mass = 1.0", "mass = 1.0\ncolour = \"red\"");
        match load_model(&doc) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("colour"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let model = load_model_with(&doc, ParseOptions { lenient: true }).unwrap();
        assert_eq!(model.dof(), 1);
    }

    #[test]
    fn syntax_error_reports_line() {
        let doc = "[[segments]]\nname = \"ground\"\nmass = = 0\n";
        match load_model(doc) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_a_parse_error() {
        let doc = "[[segments]]\nname = \"ground\"\n";
        assert!(matches!(load_model(doc), Err(Error::Parse { .. })));
    }

    #[test]
    fn joint_cycle_is_rejected() {
        let doc = r#"
[[segments]]
name = "ground"
mass = 0.0
[[segments]]
name = "a"
mass = 1.0
[[segments]]
name = "b"
mass = 1.0
[[joints]]
name = "ab"
parent = "a"
child = "b"
kind = "fixed"
[[joints]]
name = "ba"
parent = "b"
child = "a"
kind = "fixed"
"#;
        match load_model(doc) {
            Err(Error::Validation { violations }) => {
                assert!(
                    violations.iter().any(|v| v.rule.contains("cycle")),
                    "{violations:?}"
                )
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn multi_axis_joint_names_coordinates() {
        let doc = MINIMAL.replace(
            "axis = [0.0, 0.0, 1.0]",
            "axis = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]\nlimits = [[-1.0, 1.0], [-0.5, 0.5]]",
        );
        let model = load_model(&doc).unwrap();
        let names: Vec<_> = model
            .coordinates()
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(names, ["hinge_0", "hinge_1"]);
    }

    #[test]
    fn loading_is_deterministic() {
        let a = load_model(super::super::DEFAULT_MODEL_DOC).unwrap();
        let b = load_model(super::super::DEFAULT_MODEL_DOC).unwrap();
        assert_eq!(a, b);
    }
}
