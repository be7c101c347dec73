use nalgebra::Vector3;

use super::{BodySegment, JointDef, JointKind, Model, ModelDef, Side};
use crate::error::{Error, Result};

/// Distance from the hand grip to the crutch tip (m).
pub const CRUTCH_LENGTH: f64 = 0.90;

/// Which crutches to attach.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrutchConfig {
    /// 0, 1 or 2.
    pub count: u8,
    pub injured_side: Side,
    /// Hand holding a single crutch; defaults to the side opposite the injury.
    pub hand: Option<Side>,
}

impl CrutchConfig {
    pub fn none() -> Self {
        Self {
            count: 0,
            injured_side: Side::Right,
            hand: None,
        }
    }

    pub fn single(injured_side: Side) -> Self {
        Self {
            count: 1,
            injured_side,
            hand: None,
        }
    }

    pub fn double(injured_side: Side) -> Self {
        Self {
            count: 2,
            injured_side,
            hand: None,
        }
    }

    fn hands(&self) -> Result<Vec<Side>> {
        match self.count {
            0 => Ok(vec![]),
            1 => {
                if self.injured_side == Side::Midline {
                    return Err(Error::Config("injured side must be left or right".into()));
                }
                let hand = self.hand.unwrap_or(self.injured_side.opposite());
                if hand == self.injured_side {
                    return Err(Error::Config(format!(
                        "a single crutch must be held on the non-injured side, not {hand}"
                    )));
                }
                if hand == Side::Midline {
                    return Err(Error::Config("crutch hand must be left or right".into()));
                }
                Ok(vec![hand])
            }
            2 => Ok(vec![Side::Left, Side::Right]),
            n => Err(Error::Config(format!(
                "crutch count must be 0, 1 or 2, got {n}"
            ))),
        }
    }
}

pub(crate) fn crutch_segment(side: Side) -> String {
    format!("crutch{}", side.suffix().unwrap_or_default())
}

pub(crate) fn hand_segment(side: Side) -> String {
    format!("hand{}", side.suffix().unwrap_or_default())
}

fn is_crutch_segment(name: &str) -> bool {
    crutch_side_of(name).is_some()
}

pub(crate) fn crutch_side_of(segment: &str) -> Option<Side> {
    match segment {
        "crutch_l" => Some(Side::Left),
        "crutch_r" => Some(Side::Right),
        _ => None,
    }
}

/// Returns a copy of `model` with the requested crutches hanging from the
/// hands. Any crutches already present are removed first, so `count = 0`
/// detaches them.
///
/// Each crutch is a massless rigid segment joined to its hand by a
/// two-coordinate revolute joint (sagittal then frontal swing).
pub fn attach_crutches(model: &Model, config: &CrutchConfig) -> Result<Model> {
    let hands = config.hands()?;
    let mut def: ModelDef = model.def().clone();
    let had_crutches = def.segments.iter().any(|s| is_crutch_segment(&s.name));
    if hands.is_empty() && !had_crutches {
        return Ok(model.clone());
    }

    def.joints.retain(|j| !is_crutch_segment(&j.child));
    def.segments.retain(|s| !is_crutch_segment(&s.name));

    for side in hands {
        let hand = hand_segment(side);
        if !def.segments.iter().any(|s| s.name == hand) {
            return Err(Error::ModelMismatch(format!(
                "no `{hand}` segment to attach a crutch to"
            )));
        }
        let suffix = side.suffix().unwrap_or_default();
        let frontal = match side {
            Side::Right => Vector3::new(0.0, 0.0, -1.0),
            _ => Vector3::new(0.0, 0.0, 1.0),
        };
        let crutch = crutch_segment(side);
        def.segments.push(BodySegment::massless(&crutch));
        def.joints.push(JointDef {
            name: format!("grip{suffix}"),
            parent: hand,
            child: crutch,
            kind: JointKind::Revolute,
            axes: vec![Vector3::x(), frontal],
            coordinate_names: vec![
                format!("crutch_sagittal{suffix}"),
                format!("crutch_frontal{suffix}"),
            ],
            anchor_parent: Vector3::zeros(),
            anchor_child: Vector3::zeros(),
            limits: None,
        });
    }
    Model::new(def)
}

/// Crutch tip in the crutch body frame.
pub(crate) fn crutch_tip() -> Vector3<f64> {
    Vector3::new(0.0, -CRUTCH_LENGTH, 0.0)
}

/// Sides that currently carry a crutch.
pub(crate) fn crutch_sides(model: &Model) -> Vec<Side> {
    [Side::Left, Side::Right]
        .into_iter()
        .filter(|s| model.has_segment(&crutch_segment(*s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_model;

    #[test]
    fn two_crutches_add_two_bodies_and_four_coordinates() {
        let base = default_model();
        let with = attach_crutches(&base, &CrutchConfig::double(Side::Right)).unwrap();
        assert_eq!(with.segments().len(), base.segments().len() + 2);
        assert_eq!(with.dof(), base.dof() + 4);
    }

    #[test]
    fn one_crutch_is_half_the_double_delta() {
        let base = default_model();
        let one = attach_crutches(&base, &CrutchConfig::single(Side::Right)).unwrap();
        let two = attach_crutches(&base, &CrutchConfig::double(Side::Right)).unwrap();
        assert_eq!(one.segments().len() - base.segments().len(), 1);
        assert_eq!(2 * (one.dof() - base.dof()), two.dof() - base.dof());
        assert!(one.has_segment("crutch_l"));
        assert!(!one.has_segment("crutch_r"));
    }

    #[test]
    fn zero_is_identity_and_detaches() {
        let base = default_model();
        assert_eq!(attach_crutches(&base, &CrutchConfig::none()).unwrap(), base);
        let with = attach_crutches(&base, &CrutchConfig::double(Side::Left)).unwrap();
        let back = attach_crutches(&with, &CrutchConfig::none()).unwrap();
        assert_eq!(back, base);
    }

    #[test]
    fn single_crutch_on_injured_side_is_rejected() {
        let base = default_model();
        let cfg = CrutchConfig {
            count: 1,
            injured_side: Side::Right,
            hand: Some(Side::Right),
        };
        assert!(matches!(
            attach_crutches(&base, &cfg),
            Err(Error::Config(_))
        ));
        let bad = CrutchConfig {
            count: 3,
            ..CrutchConfig::none()
        };
        assert!(matches!(
            attach_crutches(&base, &bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn original_is_untouched() {
        let base = default_model();
        let copy = base.clone();
        let _ = attach_crutches(&base, &CrutchConfig::double(Side::Right)).unwrap();
        assert_eq!(base, copy);
    }

    #[test]
    fn missing_hand_is_a_mismatch() {
        let doc = "[[segments]]\nname = \"ground\"\nmass = 0.0\n";
        let model = crate::model::load_model(doc).unwrap();
        assert!(matches!(
            attach_crutches(&model, &CrutchConfig::single(Side::Right)),
            Err(Error::ModelMismatch(_))
        ));
    }
}
