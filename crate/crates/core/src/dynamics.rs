//! Recursive Newton-Euler inverse dynamics over the segment tree, evaluated
//! entirely in the ground frame.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{tree_state, Posture};
use crate::model::{mirror_name, reflect, JointKind, Model};

/// A force (and optional couple) applied to a segment. The application point
/// is in the segment frame; force and torque are in the ground frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalLoad {
    pub segment: String,
    pub point: Vector3<f64>,
    pub force: Vector3<f64>,
    #[serde(default = "Vector3::zeros")]
    pub torque: Vector3<f64>,
}

impl ExternalLoad {
    pub fn force_at(segment: impl Into<String>, point: Vector3<f64>, force: Vector3<f64>) -> Self {
        Self {
            segment: segment.into(),
            point,
            force,
            torque: Vector3::zeros(),
        }
    }

    /// Reflection through the sagittal plane onto the bilateral partner segment.
    pub fn mirrored(&self) -> Self {
        Self {
            segment: mirror_name(&self.segment),
            point: reflect(&self.point),
            force: reflect(&self.force),
            torque: -reflect(&self.torque),
        }
    }
}

/// Joint moments (N·m) or forces (N), ordered per [`Model::coordinates`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedForces {
    pub tau: Vec<f64>,
}

impl GeneralizedForces {
    pub fn zeros(n: usize) -> Self {
        Self { tau: vec![0.0; n] }
    }

    pub fn max_abs(&self) -> f64 {
        self.tau.iter().fold(0.0, |m, t| m.max(t.abs()))
    }
}

/// Generalized forces the joints must supply so that the tree follows the
/// posture's accelerations under gravity and `loads`. With zero rates this is
/// the quasi-static moment balance.
pub fn inverse_dynamics(
    model: &Model,
    posture: &Posture,
    loads: &[ExternalLoad],
) -> Result<GeneralizedForces> {
    posture.check(model)?;
    let n_seg = model.segments().len();

    // external force sum and moment about the ground origin, per segment
    let mut ext_force = vec![Vector3::zeros(); n_seg];
    let mut ext_moment = vec![Vector3::zeros(); n_seg];

    let state = tree_state(model, &posture.q);
    for load in loads {
        let s = model
            .segment_index(&load.segment)
            .ok_or_else(|| Error::UnknownSegment(load.segment.clone()))?;
        if !(load
            .force
            .iter()
            .chain(load.torque.iter())
            .all(|x| x.is_finite()))
        {
            return Err(Error::Config(format!(
                "load on `{}` is not finite",
                load.segment
            )));
        }
        let p = state.placements[s].transform_point(&load.point);
        ext_force[s] += load.force;
        ext_moment[s] += p.cross(&load.force) + load.torque;
    }

    // forward pass: angular velocity/acceleration and origin acceleration
    let mut omega = vec![Vector3::zeros(); n_seg];
    let mut alpha = vec![Vector3::zeros(); n_seg];
    let mut acc = vec![Vector3::zeros(); n_seg];

    let point_acc = |s: usize,
                     x: &Vector3<f64>,
                     w: &[Vector3<f64>],
                     al: &[Vector3<f64>],
                     ac: &[Vector3<f64>]| {
        let r = x - state.placements[s].translation;
        ac[s] + al[s].cross(&r) + w[s].cross(&w[s].cross(&r))
    };

    for &j in model.joint_order() {
        let joint = &model.joints()[j];
        let p = model.segment_index(&joint.parent).expect("validated");
        let c = model.segment_index(&joint.child).expect("validated");
        let start = model.joint_coord_start(j);
        let origin = state.placements[c].translation;
        match joint.kind {
            JointKind::Revolute => {
                let mut w = omega[p];
                let mut al = alpha[p];
                for k in 0..joint.dof() {
                    let s = state.axes[start + k];
                    let (qd, qdd) = (posture.qdot[start + k], posture.qddot[start + k]);
                    al += s * qdd + w.cross(&(s * qd));
                    w += s * qd;
                }
                let a_joint = point_acc(p, &state.joint_points[j], &omega, &alpha, &acc);
                let r = origin - state.joint_points[j];
                omega[c] = w;
                alpha[c] = al;
                acc[c] = a_joint + al.cross(&r) + w.cross(&w.cross(&r));
            }
            JointKind::Prismatic => {
                let mut a = point_acc(p, &origin, &omega, &alpha, &acc);
                for k in 0..joint.dof() {
                    let s = state.axes[start + k];
                    let (qd, qdd) = (posture.qdot[start + k], posture.qddot[start + k]);
                    a += s * qdd + 2.0 * omega[p].cross(&(s * qd));
                }
                omega[c] = omega[p];
                alpha[c] = alpha[p];
                acc[c] = a;
            }
            JointKind::Fixed => {
                acc[c] = point_acc(p, &origin, &omega, &alpha, &acc);
                omega[c] = omega[p];
                alpha[c] = alpha[p];
            }
        }
    }

    // backward pass: force and moment (about ground origin) each segment needs
    // from its parent joint
    let g = model.gravity();
    let mut force = vec![Vector3::zeros(); n_seg];
    let mut moment = vec![Vector3::zeros(); n_seg];
    for (s, seg) in model.segments().iter().enumerate() {
        let pl = &state.placements[s];
        let com = pl.transform_point(&seg.com);
        let a_com = point_acc(s, &com, &omega, &alpha, &acc);
        let inertia = pl.rotation.matrix() * seg.inertia * pl.rotation.matrix().transpose();
        let lin = seg.mass * (a_com - g);
        force[s] = lin - ext_force[s];
        moment[s] = inertia * alpha[s] + omega[s].cross(&(inertia * omega[s])) + com.cross(&lin)
            - ext_moment[s];
    }

    let mut tau = vec![0.0; model.dof()];
    for &j in model.joint_order().iter().rev() {
        let joint = &model.joints()[j];
        let p = model.segment_index(&joint.parent).expect("validated");
        let c = model.segment_index(&joint.child).expect("validated");
        let start = model.joint_coord_start(j);
        let point = state.joint_points[j];
        let about_joint = moment[c] - point.cross(&force[c]);
        for k in 0..joint.dof() {
            let s = state.axes[start + k];
            tau[start + k] = match joint.kind {
                JointKind::Revolute => s.dot(&about_joint),
                _ => s.dot(&force[c]),
            };
        }
        let (f, m) = (force[c], moment[c]);
        force[p] += f;
        moment[p] += m;
    }

    Ok(GeneralizedForces { tau })
}
