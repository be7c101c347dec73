use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, SymmetricEigen};

use super::{JointKind, ModelDef, Side, GROUND};
use crate::error::Violation;

const AXIS_NORM_TOL: f64 = 1e-9;

/// Checks every model invariant. Empty iff the definition is valid.
pub fn validate_model(def: &ModelDef) -> Vec<Violation> {
    let mut out = Vec::new();

    duplicates(
        def.segments.iter().map(|s| s.name.as_str()),
        "segment",
        &mut out,
    );
    duplicates(
        def.joints.iter().map(|j| j.name.as_str()),
        "joint",
        &mut out,
    );
    duplicates(
        def.muscles.iter().map(|m| m.name.as_str()),
        "muscle",
        &mut out,
    );
    duplicates(def.groups.iter().map(|g| g.id.as_str()), "group", &mut out);
    duplicates(
        def.joints
            .iter()
            .filter(|j| j.kind != JointKind::Fixed)
            .flat_map(|j| j.coordinate_names.iter().map(String::as_str)),
        "coordinate",
        &mut out,
    );

    if !def.gravity.iter().all(|g| g.is_finite()) {
        out.push(Violation::new("gravity", "gravity must be finite"));
    }

    let segment_names: BTreeSet<&str> = def.segments.iter().map(|s| s.name.as_str()).collect();
    if !segment_names.contains(GROUND) {
        out.push(Violation::new(GROUND, "model has no ground segment"));
    }

    for seg in &def.segments {
        let entity = format!("segment {}", seg.name);
        if !(seg.mass.is_finite() && seg.mass >= 0.0) {
            out.push(Violation::new(&entity, "mass must be finite and >= 0"));
        }
        if !seg.com.iter().all(|x| x.is_finite()) {
            out.push(Violation::new(&entity, "com must be finite"));
        }
        check_inertia(&seg.inertia, &entity, &mut out);
    }

    for joint in &def.joints {
        check_joint(joint, &segment_names, &mut out);
    }
    check_tree(def, &segment_names, &mut out);

    let group_ids: BTreeSet<&str> = def.groups.iter().map(|g| g.id.as_str()).collect();
    for m in &def.muscles {
        let entity = format!("muscle {}", m.name);
        if !(m.f_max.is_finite() && m.f_max > 0.0) {
            out.push(Violation::new(&entity, "f_max must be finite and > 0"));
        }
        if m.path.len() < 2 {
            out.push(Violation::new(&entity, "path needs at least 2 points"));
        }
        for p in &m.path {
            if !segment_names.contains(p.segment.as_str()) {
                out.push(Violation::new(
                    &entity,
                    format!("path point references unknown segment `{}`", p.segment),
                ));
            }
            if !p.point.iter().all(|x| x.is_finite()) {
                out.push(Violation::new(&entity, "path point must be finite"));
            }
        }
        if !group_ids.contains(m.group.as_str()) {
            out.push(Violation::new(
                &entity,
                format!("unknown group `{}`", m.group),
            ));
        }
        let by_name = Side::from_name(&m.name).unwrap_or(Side::Midline);
        if by_name != m.side {
            out.push(Violation::new(
                &entity,
                format!("side {} inconsistent with name suffix ({by_name})", m.side),
            ));
        }
    }

    for g in &def.groups {
        if let Some(expected) = g.anatomical_name.reference_element_count() {
            if g.anatomical_element_count != expected {
                out.push(Violation::new(
                    format!("group {}", g.id),
                    format!(
                        "anatomical_element_count {} for {} must be {expected}",
                        g.anatomical_element_count, g.anatomical_name
                    ),
                ));
            }
        }
    }

    out
}

fn duplicates<'a>(names: impl Iterator<Item = &'a str>, kind: &str, out: &mut Vec<Violation>) {
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for name in names {
        if !seen.insert(name) && reported.insert(name) {
            out.push(Violation::new(
                format!("{kind} {name}"),
                "name is not unique",
            ));
        }
    }
}

fn check_inertia(inertia: &Matrix3<f64>, entity: &str, out: &mut Vec<Violation>) {
    if !inertia.iter().all(|x| x.is_finite()) {
        out.push(Violation::new(entity, "inertia must be finite"));
        return;
    }
    let scale = inertia.abs().max().max(1.0);
    if (inertia - inertia.transpose()).abs().max() > 1e-9 * scale {
        out.push(Violation::new(entity, "inertia is not symmetric"));
        return;
    }
    let eig = SymmetricEigen::new(*inertia);
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * scale) {
        out.push(Violation::new(entity, "inertia has a negative eigenvalue"));
    }
}

// negated comparisons below also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_joint(joint: &super::JointDef, segments: &BTreeSet<&str>, out: &mut Vec<Violation>) {
    let entity = format!("joint {}", joint.name);
    for (role, seg) in [("parent", &joint.parent), ("child", &joint.child)] {
        if !segments.contains(seg.as_str()) {
            out.push(Violation::new(
                &entity,
                format!("{role} `{seg}` is not a segment"),
            ));
        }
    }
    if joint.child == GROUND {
        out.push(Violation::new(&entity, "ground cannot be a child"));
    }
    if joint.parent == joint.child {
        out.push(Violation::new(
            &entity,
            "cycle: joint connects a segment to itself",
        ));
    }
    for v in [&joint.anchor_parent, &joint.anchor_child] {
        if !v.iter().all(|x| x.is_finite()) {
            out.push(Violation::new(&entity, "anchor must be finite"));
        }
    }
    match joint.kind {
        JointKind::Fixed => {
            if !joint.axes.is_empty() {
                out.push(Violation::new(&entity, "fixed joint declares axes"));
            }
        }
        JointKind::Revolute | JointKind::Prismatic => {
            if joint.axes.is_empty() {
                out.push(Violation::new(
                    &entity,
                    "moving joint needs at least one axis",
                ));
            }
            for axis in &joint.axes {
                if !((axis.norm() - 1.0).abs() <= AXIS_NORM_TOL) {
                    out.push(Violation::new(
                        &entity,
                        format!("axis norm {} is not 1", axis.norm()),
                    ));
                }
            }
            if joint.coordinate_names.len() != joint.axes.len() {
                out.push(Violation::new(
                    &entity,
                    "coordinate name count differs from axis count",
                ));
            }
            if let Some(limits) = &joint.limits {
                if limits.len() != joint.axes.len() {
                    out.push(Violation::new(
                        &entity,
                        "limit count differs from axis count",
                    ));
                }
                if limits.iter().any(|[lo, hi]| !(lo <= hi)) {
                    out.push(Violation::new(&entity, "limit min exceeds max"));
                }
            }
        }
    }
}

/// Every non-ground segment has exactly one parent joint and reaches ground
/// by following parents.
fn check_tree(def: &ModelDef, segments: &BTreeSet<&str>, out: &mut Vec<Violation>) {
    let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for j in &def.joints {
        parents
            .entry(j.child.as_str())
            .or_default()
            .push(j.parent.as_str());
    }
    for seg in segments.iter().copied().filter(|s| *s != GROUND) {
        match parents.get(seg).map(Vec::len).unwrap_or(0) {
            0 => out.push(Violation::new(
                format!("segment {seg}"),
                "segment has no parent joint (not connected to ground)",
            )),
            1 => {}
            n => out.push(Violation::new(
                format!("segment {seg}"),
                format!("segment has {n} parent joints"),
            )),
        }
    }

    let mut on_cycle = BTreeSet::new();
    for start in segments.iter().copied() {
        let mut seen = vec![start];
        let mut cur = start;
        while let Some(&parent) = parents.get(cur).and_then(|p| p.first()) {
            if parent == GROUND || !segments.contains(parent) {
                break;
            }
            if seen.contains(&parent) {
                on_cycle.insert(parent);
                break;
            }
            seen.push(parent);
            cur = parent;
        }
    }
    for seg in on_cycle {
        out.push(Violation::new(
            format!("segment {seg}"),
            "cycle in joint graph",
        ));
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;

    use super::*;
    use crate::model::default_model;

    #[test]
    fn default_model_is_valid() {
        assert_eq!(validate_model(default_model().def()), vec![]);
    }

    #[test]
    fn negative_f_max_names_the_muscle() {
        let mut def = default_model().into_def();
        def.muscles[3].f_max = -10.0;
        let name = def.muscles[3].name.clone();
        let v = validate_model(&def);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].entity.contains(&name));
        assert!(v[0].rule.contains("f_max"));
    }

    #[test]
    fn non_unit_axis_is_flagged() {
        let mut def = default_model().into_def();
        let j = def
            .joints
            .iter()
            .position(|j| j.kind == JointKind::Revolute)
            .unwrap();
        def.joints[j].axes[0] = Vector3::new(0.0, 0.0, 2.0);
        let v = validate_model(&def);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].rule.contains("axis norm"));
    }

    #[test]
    fn negative_mass_and_asymmetric_inertia() {
        let mut def = default_model().into_def();
        def.segments[1].mass = -1.0;
        def.segments[2].inertia[(0, 1)] = 0.5;
        let v = validate_model(&def);
        assert!(v.iter().any(|v| v.rule.contains("mass")));
        assert!(v.iter().any(|v| v.rule.contains("symmetric")));
    }

    #[test]
    fn side_must_follow_name_suffix() {
        let mut def = default_model().into_def();
        let i = def
            .muscles
            .iter()
            .position(|m| m.side == Side::Left)
            .unwrap();
        def.muscles[i].side = Side::Right;
        let v = validate_model(&def);
        assert!(v.iter().any(|v| v.rule.contains("inconsistent")), "{v:?}");
    }

    #[test]
    fn wrong_element_count_is_flagged() {
        let mut def = default_model().into_def();
        def.groups[0].anatomical_element_count = 3;
        assert_eq!(validate_model(&def).len(), 1);
    }

    #[test]
    fn unknown_path_segment_and_group() {
        let mut def = default_model().into_def();
        def.muscles[0].path[0].segment = "tail".into();
        def.muscles[1].group = "nope".into();
        let v = validate_model(&def);
        assert!(v.iter().any(|v| v.rule.contains("tail")));
        assert!(v.iter().any(|v| v.rule.contains("nope")));
    }
}
