//! Group-level activation summaries, left/right asymmetry and case
//! comparison.

mod export;

use serde::Serialize;

pub use export::{
    comparison_json, plot_columns, render_comparison, render_report, report_csv, report_json,
    solution_json, svg_bar_chart, CoordinateRecord, MuscleRecord, SolutionRecord,
};

use crate::error::{Error, Result};
use crate::model::{AnatomicalGroup, Model, Side};
use crate::redundancy::ActivationSolution;
use crate::scenarios::{Case, Phase, ScenarioSnapshot};

/// Guard on the asymmetry denominator.
pub const AI_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupActivation {
    pub group: String,
    pub side: Side,
    /// Mean activation over the group-side's elements.
    pub level: f64,
    pub peak: f64,
}

pub fn group_activation(
    solution: &ActivationSolution,
    model: &Model,
    group: &str,
    side: Side,
) -> Result<GroupActivation> {
    if solution.activations.len() != model.muscles().len() {
        return Err(Error::Dimension {
            what: "activations",
            expected: model.muscles().len(),
            got: solution.activations.len(),
        });
    }
    let members: Vec<f64> = model
        .muscles()
        .iter()
        .zip(&solution.activations)
        .filter(|(m, _)| m.group == group && m.side == side)
        .map(|(_, &a)| a)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyGroup {
            group: group.into(),
            side: side.to_string(),
        });
    }
    Ok(GroupActivation {
        group: group.into(),
        side,
        level: members.iter().sum::<f64>() / members.len() as f64,
        peak: members.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// `(left − right) / max(left, right, ε)`: positive when the left side works
/// harder, bounded in `[−1, 1]` for levels in `[0, 1]`.
pub fn asymmetry_index(left: f64, right: f64) -> f64 {
    (left - right) / left.max(right).max(AI_EPSILON)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideLevels {
    pub level: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSymmetry {
    pub group: String,
    pub anatomical_name: AnatomicalGroup,
    pub left: SideLevels,
    pub right: SideLevels,
    pub asymmetry_index: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warn,
    Severe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskFlag {
    pub group: String,
    pub asymmetry_index: f64,
    pub severity: Severity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskThresholds {
    pub warn: f64,
    pub severe: f64,
}

impl Default for RiskThresholds {
    fn default() -> Self {
        Self {
            warn: 0.3,
            severe: 0.6,
        }
    }
}

/// The knobs a report depends on, echoed so results can be traced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumptions {
    pub injured_side: Side,
    pub injured_foot_fraction: f64,
    pub crutch_share: f64,
    pub body_weight: f64,
    pub exponent: u8,
    pub posture_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub case: Case,
    pub phase: Phase,
    pub groups: Vec<GroupSymmetry>,
    /// Mean over every trunk group-side level.
    pub trunk_mean: f64,
    pub flags: Vec<RiskFlag>,
    pub assumptions: Assumptions,
}

impl SymmetryReport {
    pub fn group(&self, id: &str) -> Option<&GroupSymmetry> {
        self.groups.iter().find(|g| g.group == id)
    }

    /// Column label used in comparisons.
    pub fn label(&self) -> String {
        self.case.as_str().to_string()
    }
}

/// Summarize the trunk groups of `model` for one solved snapshot.
pub fn symmetry_report(
    model: &Model,
    snapshot: &ScenarioSnapshot,
    solution: &ActivationSolution,
    exponent: u8,
    thresholds: &RiskThresholds,
) -> Result<SymmetryReport> {
    let mut groups = Vec::new();
    for g in model
        .groups()
        .iter()
        .filter(|g| g.anatomical_name.is_trunk())
    {
        let left = group_activation(solution, model, &g.id, Side::Left)?;
        let right = group_activation(solution, model, &g.id, Side::Right)?;
        groups.push(GroupSymmetry {
            group: g.id.clone(),
            anatomical_name: g.anatomical_name,
            left: SideLevels {
                level: left.level,
                peak: left.peak,
            },
            right: SideLevels {
                level: right.level,
                peak: right.peak,
            },
            asymmetry_index: asymmetry_index(left.level, right.level),
        });
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput("trunk muscle groups"));
    }
    let trunk_mean = groups
        .iter()
        .map(|g| g.left.level + g.right.level)
        .sum::<f64>()
        / (2 * groups.len()) as f64;
    let config = &snapshot.config;
    let mut report = SymmetryReport {
        case: config.case,
        phase: config.phase,
        groups,
        trunk_mean,
        flags: Vec::new(),
        assumptions: Assumptions {
            injured_side: config.injured_side,
            injured_foot_fraction: config.injured_foot_fraction,
            crutch_share: config.crutch_share,
            body_weight: config.body_weight,
            exponent,
            posture_hash: snapshot.posture_hash.clone(),
        },
    };
    report.flags = risk_flags(&report, thresholds);
    Ok(report)
}

/// Flags every trunk group whose `|AI|` reaches a cutoff (inclusive).
pub fn risk_flags(report: &SymmetryReport, thresholds: &RiskThresholds) -> Vec<RiskFlag> {
    report
        .groups
        .iter()
        .filter(|g| g.anatomical_name.is_trunk())
        .filter_map(|g| {
            let ai = g.asymmetry_index.abs();
            let severity = if ai >= thresholds.severe {
                Severity::Severe
            } else if ai >= thresholds.warn {
                Severity::Warn
            } else {
                return None;
            };
            Some(RiskFlag {
                group: g.group.clone(),
                asymmetry_index: g.asymmetry_index,
                severity,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub group: Option<String>,
    pub side: Option<Side>,
    /// One value per column; `None` where a report lacks the group.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub columns: Vec<String>,
    pub phases: Vec<Phase>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn trunk_means(&self) -> &[Option<f64>] {
        &self
            .rows
            .last()
            .expect("comparison has a trunk_mean row")
            .values
    }
}

/// Levels per group-side (rows) and report (columns), closed by a
/// `trunk_mean` row.
pub fn compare_cases(reports: &[SymmetryReport]) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("reports"));
    }
    let mut order: Vec<&str> = Vec::new();
    for r in reports {
        for g in &r.groups {
            if !order.contains(&g.group.as_str()) {
                order.push(&g.group);
            }
        }
    }
    let mut rows = Vec::new();
    for id in order {
        for side in [Side::Left, Side::Right] {
            let values = reports
                .iter()
                .map(|r| {
                    r.group(id).map(|g| match side {
                        Side::Left => g.left.level,
                        _ => g.right.level,
                    })
                })
                .collect();
            rows.push(ComparisonRow {
                label: format!("{id} {side}"),
                group: Some(id.to_string()),
                side: Some(side),
                values,
            });
        }
    }
    rows.push(ComparisonRow {
        label: "trunk_mean".into(),
        group: None,
        side: None,
        values: reports.iter().map(|r| Some(r.trunk_mean)).collect(),
    });
    Ok(ComparisonTable {
        columns: reports.iter().map(SymmetryReport::label).collect(),
        phases: reports.iter().map(|r| r.phase).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_model;
    use crate::redundancy::SolveStatus;
    use crate::scenarios::{build_snapshot, ScenarioConfig};

    fn solution(activations: Vec<f64>) -> ActivationSolution {
        ActivationSolution {
            activations,
            reserves: vec![],
            residuals: vec![],
            objective: 0.0,
            status: SolveStatus::Optimal,
            degenerate: false,
            iterations: 0,
        }
    }

    fn with_levels(model: &Model, set: &[(&str, Side, f64)]) -> ActivationSolution {
        let mut a = vec![0.0; model.muscles().len()];
        for (group, side, v) in set {
            for (i, m) in model.muscles().iter().enumerate() {
                if m.group == *group && m.side == *side {
                    a[i] = *v;
                }
            }
        }
        solution(a)
    }

    #[test]
    fn singleton_group() {
        let model = default_model();
        let s = with_levels(&model, &[("quadratus_lumborum", Side::Left, 0.78)]);
        let g = group_activation(&s, &model, "quadratus_lumborum", Side::Left).unwrap();
        assert_eq!((g.level, g.peak), (0.78, 0.78));
    }

    #[test]
    fn mean_and_peak() {
        let mut def = default_model().into_def();
        let mut extra = def
            .muscles
            .iter()
            .find(|m| m.name == "longissimus_l")
            .unwrap()
            .clone();
        extra.name = "longissimus_2_l".into();
        def.muscles.push(extra);
        let model = Model::new(def).unwrap();
        let mut a = vec![0.0; model.muscles().len()];
        a[model.muscle_index("longissimus_l").unwrap()] = 1.0;
        let g = group_activation(&solution(a), &model, "longissimus", Side::Left).unwrap();
        assert_eq!((g.level, g.peak), (0.5, 1.0));
    }

    #[test]
    fn empty_group() {
        let model = default_model();
        let s = solution(vec![0.0; model.muscles().len()]);
        assert!(matches!(
            group_activation(&s, &model, "longissimus", Side::Midline),
            Err(Error::EmptyGroup { .. })
        ));
        assert!(matches!(
            group_activation(&s, &model, "deltoid", Side::Left),
            Err(Error::EmptyGroup { .. })
        ));
    }

    #[test]
    fn asymmetry_examples() {
        assert!((asymmetry_index(0.78, 0.01) - 0.77 / 0.78).abs() < 1e-15);
        assert!((asymmetry_index(0.78, 0.01) - 0.9872).abs() < 1e-4);
        assert_eq!(asymmetry_index(0.4, 0.4), 0.0);
        assert_eq!(asymmetry_index(0.0, 0.0), 0.0);
        assert_eq!(asymmetry_index(0.0, 1.0), -1.0);
    }

    fn report_with(ais: &[f64]) -> SymmetryReport {
        let model = default_model();
        let snap = build_snapshot(&ScenarioConfig::new(Case::Normal, &model), &model).unwrap();
        let s = solution(vec![0.0; model.muscles().len()]);
        let mut r = symmetry_report(&model, &snap, &s, 2, &RiskThresholds::default()).unwrap();
        for (g, &ai) in r.groups.iter_mut().zip(ais) {
            g.asymmetry_index = ai;
        }
        r
    }

    #[test]
    fn flag_thresholds() {
        let t = RiskThresholds::default();
        let r = report_with(&[0.987, 0.3, -0.6, 0.2999, -0.45]);
        let flags = risk_flags(&r, &t);
        let sev: Vec<_> = flags
            .iter()
            .map(|f| (f.group.as_str(), f.severity))
            .collect();
        assert_eq!(
            sev,
            vec![
                ("rectus_abdominis", Severity::Severe),
                ("iliacus", Severity::Warn),
                ("external_oblique", Severity::Severe),
                ("quadratus_lumborum", Severity::Warn),
            ]
        );
        assert!(risk_flags(&report_with(&[0.0; 8]), &t).is_empty());
    }

    #[test]
    fn comparison_shape() {
        assert!(matches!(compare_cases(&[]), Err(Error::EmptyInput(_))));
        let r = report_with(&[]);
        let t = compare_cases(std::slice::from_ref(&r)).unwrap();
        assert_eq!(t.columns, vec!["normal"]);
        assert_eq!(t.rows.len(), 17);
        assert!(t.rows.iter().all(|row| row.values.len() == 1));
        assert_eq!(t.rows.last().unwrap().label, "trunk_mean");
        let t = compare_cases(&[r.clone(), r]).unwrap();
        assert_eq!(t.columns.len(), 2);
        assert!(t.rows.iter().all(|row| row.values[0] == row.values[1]));
    }
}
