//! Forward kinematics of the segment tree, musculotendon lengths and moment
//! arms.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JointKind, Model, MuscleElement};

/// Central finite-difference step for moment arms (rad or m).
pub const MOMENT_ARM_STEP: f64 = 1e-5;

/// Generalized coordinate state, ordered per [`Model::coordinates`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posture {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
}

impl Posture {
    pub fn zeros(model: &Model) -> Self {
        Self::at_rest(vec![0.0; model.dof()])
    }

    /// Static posture: given positions, zero rates.
    pub fn at_rest(q: Vec<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            qdot: vec![0.0; n],
            qddot: vec![0.0; n],
        }
    }

    /// Static posture from a `coordinate name -> value` table; unlisted
    /// coordinates are 0.
    pub fn from_named(model: &Model, values: &BTreeMap<String, f64>) -> Result<Self> {
        let mut q = vec![0.0; model.dof()];
        for (name, &v) in values {
            let i = model
                .coordinate_index(name)
                .ok_or_else(|| Error::UnknownCoordinate(name.clone()))?;
            q[i] = v;
        }
        Ok(Self::at_rest(q))
    }

    pub fn check(&self, model: &Model) -> Result<()> {
        let expected = model.dof();
        for (what, v) in [("q", &self.q), ("qdot", &self.qdot), ("qddot", &self.qddot)] {
            if v.len() != expected {
                return Err(Error::Dimension {
                    what,
                    expected,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Coordinates outside their declared limits. Exploratory postures are
    /// allowed, so these are warnings only.
    pub fn limit_warnings(&self, model: &Model) -> Vec<String> {
        let mut out = Vec::new();
        for (i, c) in model.coordinates().iter().enumerate() {
            let joint = &model.joints()[c.joint];
            if let (Some(limits), Some(&q)) = (&joint.limits, self.q.get(i)) {
                let [lo, hi] = limits[c.axis];
                if q < lo || q > hi {
                    out.push(format!("{} = {q} outside [{lo}, {hi}]", c.name));
                }
            }
        }
        out
    }

    /// Mirror image through the sagittal plane, if the model is bilateral.
    pub fn mirrored(&self, model: &Model) -> Option<Self> {
        let map = model.coordinate_mirror()?;
        let apply = |v: &[f64]| {
            let mut out = vec![0.0; v.len()];
            for (i, &(p, s)) in map.iter().enumerate() {
                out[p] = s * v[i];
            }
            out
        };
        Some(Self {
            q: apply(&self.q),
            qdot: apply(&self.qdot),
            qddot: apply(&self.qddot),
        })
    }
}

/// Body-to-ground transform of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Placement {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn transform_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * local + self.translation
    }
}

/// Placement of every segment, indexed like [`Model::segments`].
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlacement {
    pub placements: Vec<Placement>,
}

impl FramePlacement {
    pub fn segment(&self, model: &Model, name: &str) -> Option<&Placement> {
        model.segment_index(name).map(|i| &self.placements[i])
    }
}

/// Forward kinematics plus the world-frame joint geometry inverse dynamics
/// needs.
pub(crate) struct TreeState {
    pub placements: Vec<Placement>,
    /// World axis of each coordinate.
    pub axes: Vec<Vector3<f64>>,
    /// World position of each joint's anchor.
    pub joint_points: Vec<Vector3<f64>>,
}

pub(crate) fn tree_state(model: &Model, q: &[f64]) -> TreeState {
    let mut placements = vec![Placement::identity(); model.segments().len()];
    let mut axes = vec![Vector3::zeros(); model.dof()];
    let mut joint_points = vec![Vector3::zeros(); model.joints().len()];

    for &j in model.joint_order() {
        let joint = &model.joints()[j];
        let parent = placements[model.segment_index(&joint.parent).expect("validated")];
        let child = model.segment_index(&joint.child).expect("validated");
        let start = model.joint_coord_start(j);

        let (rotation, anchor) = match joint.kind {
            JointKind::Revolute => {
                let mut r = parent.rotation;
                for (k, axis) in joint.axes.iter().enumerate() {
                    let world_axis = r * axis;
                    axes[start + k] = world_axis;
                    r *= Rotation3::from_axis_angle(&Unit::new_unchecked(*axis), q[start + k]);
                }
                (r, joint.anchor_parent)
            }
            JointKind::Prismatic => {
                let mut offset = joint.anchor_parent;
                for (k, axis) in joint.axes.iter().enumerate() {
                    axes[start + k] = parent.rotation * axis;
                    offset += axis * q[start + k];
                }
                (parent.rotation, offset)
            }
            JointKind::Fixed => (parent.rotation, joint.anchor_parent),
        };
        let point = parent.transform_point(&anchor);
        joint_points[j] = point;
        placements[child] = Placement {
            rotation,
            translation: point - rotation * joint.anchor_child,
        };
    }

    TreeState {
        placements,
        axes,
        joint_points,
    }
}

pub fn forward_kinematics(model: &Model, posture: &Posture) -> Result<FramePlacement> {
    posture.check(model)?;
    Ok(FramePlacement {
        placements: tree_state(model, &posture.q).placements,
    })
}

fn path_length(model: &Model, placements: &[Placement], muscle: &MuscleElement) -> f64 {
    muscle
        .path
        .windows(2)
        .map(|w| {
            if w[0].segment == w[1].segment {
                // same rigid body: frame independent
                (w[1].point - w[0].point).norm()
            } else {
                let a = placements[model.segment_index(&w[0].segment).expect("validated")];
                let b = placements[model.segment_index(&w[1].segment).expect("validated")];
                (b.transform_point(&w[1].point) - a.transform_point(&w[0].point)).norm()
            }
        })
        .sum()
}

fn lookup_muscle<'m>(model: &'m Model, name: &str) -> Result<&'m MuscleElement> {
    model
        .muscle_index(name)
        .map(|i| &model.muscles()[i])
        .ok_or_else(|| Error::UnknownMuscle(name.to_string()))
}

/// Musculotendon path length (m): sum of straight-line distances between
/// consecutive via points.
pub fn muscle_length(model: &Model, posture: &Posture, muscle: &str) -> Result<f64> {
    let m = lookup_muscle(model, muscle)?;
    posture.check(model)?;
    Ok(path_length(
        model,
        &tree_state(model, &posture.q).placements,
        m,
    ))
}

/// All muscle lengths at `q`, indexed like [`Model::muscles`].
pub fn muscle_lengths(model: &Model, q: &[f64]) -> Vec<f64> {
    let placements = tree_state(model, q).placements;
    model
        .muscles()
        .iter()
        .map(|m| path_length(model, &placements, m))
        .collect()
}

/// Moment arm r = −∂L/∂q by central difference. Positive r means tension
/// produces a positive generalized force on the coordinate.
pub fn moment_arm(model: &Model, posture: &Posture, muscle: &str, coordinate: &str) -> Result<f64> {
    let m = lookup_muscle(model, muscle)?;
    let c = model
        .coordinate_index(coordinate)
        .ok_or_else(|| Error::UnknownCoordinate(coordinate.to_string()))?;
    posture.check(model)?;
    let mut q = posture.q.clone();
    q[c] += MOMENT_ARM_STEP;
    let plus = path_length(model, &tree_state(model, &q).placements, m);
    q[c] = posture.q[c] - MOMENT_ARM_STEP;
    let minus = path_length(model, &tree_state(model, &q).placements, m);
    Ok(-(plus - minus) / (2.0 * MOMENT_ARM_STEP))
}

/// Moment arms of every muscle about every coordinate (muscles × coordinates).
pub fn moment_arm_matrix(model: &Model, posture: &Posture) -> Result<DMatrix<f64>> {
    posture.check(model)?;
    let mut r = DMatrix::zeros(model.muscles().len(), model.dof());
    let mut q = posture.q.clone();
    for c in 0..model.dof() {
        q[c] = posture.q[c] + MOMENT_ARM_STEP;
        let plus = muscle_lengths(model, &q);
        q[c] = posture.q[c] - MOMENT_ARM_STEP;
        let minus = muscle_lengths(model, &q);
        q[c] = posture.q[c];
        for (i, (p, m)) in plus.iter().zip(&minus).enumerate() {
            r[(i, c)] = -(p - m) / (2.0 * MOMENT_ARM_STEP);
        }
    }
    Ok(r)
}
