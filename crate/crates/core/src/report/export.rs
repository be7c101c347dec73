//! Machine and human renderings of reports: JSON, CSV, SVG bar charts, plain
//! plot columns and fixed-width text tables.

use std::fmt::Write as _;

use serde::Serialize;

use super::{ComparisonTable, Severity, SymmetryReport};
use crate::dynamics::GeneralizedForces;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::redundancy::{ActivationSolution, SolveStatus};
use crate::scenarios::{Case, Phase};

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn report_json(report: &SymmetryReport) -> Result<String> {
    to_json(report)
}

pub fn comparison_json(table: &ComparisonTable, reports: &[SymmetryReport]) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        table: &'a ComparisonTable,
        reports: &'a [SymmetryReport],
    }
    to_json(&Doc { table, reports })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuscleRecord {
    pub muscle: String,
    pub group: String,
    pub activation: f64,
    pub force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateRecord {
    pub coordinate: String,
    pub tau: f64,
    pub reserve: f64,
    pub residual: f64,
}

/// Per-muscle and per-coordinate detail of one solve, keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRecord {
    pub case: Case,
    pub phase: Phase,
    pub status: SolveStatus,
    pub objective: f64,
    pub degenerate: bool,
    pub muscles: Vec<MuscleRecord>,
    pub coordinates: Vec<CoordinateRecord>,
}

impl SolutionRecord {
    pub fn new(
        model: &Model,
        case: Case,
        phase: Phase,
        tau: &GeneralizedForces,
        solution: &ActivationSolution,
    ) -> Self {
        Self {
            case,
            phase,
            status: solution.status,
            objective: solution.objective,
            degenerate: solution.degenerate,
            muscles: model
                .muscles()
                .iter()
                .zip(&solution.activations)
                .map(|(m, &a)| MuscleRecord {
                    muscle: m.name.clone(),
                    group: m.group.clone(),
                    activation: a,
                    force: a * m.f_max,
                })
                .collect(),
            coordinates: model
                .coordinates()
                .iter()
                .enumerate()
                .map(|(j, c)| CoordinateRecord {
                    coordinate: c.name.clone(),
                    tau: tau.tau[j],
                    reserve: solution.reserves[j],
                    residual: solution.residuals[j],
                })
                .collect(),
        }
    }
}

pub fn solution_json(record: &SolutionRecord) -> Result<String> {
    to_json(record)
}

/// One row per trunk group-side per report; `muscle` is the anatomical name.
pub fn report_csv(reports: &[SymmetryReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(e.to_string());
    w.write_record([
        "muscle",
        "group",
        "side",
        "case",
        "phase",
        "activation_mean",
        "activation_peak",
    ])
    .map_err(io)?;
    for r in reports {
        for g in &r.groups {
            for (side, levels) in [("left", &g.left), ("right", &g.right)] {
                w.write_record([
                    g.anatomical_name.as_str(),
                    &g.group,
                    side,
                    r.case.as_str(),
                    r.phase.as_str(),
                    &levels.level.to_string(),
                    &levels.peak.to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

fn percent(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.0}%", x * 100.0),
        None => "-".into(),
    }
}

pub fn render_report(report: &SymmetryReport) -> String {
    let a = &report.assumptions;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "case {} / phase {}  (injured {}, f = {:.2}, crutch share = {:.2}, W = {:.1} N, p = {})",
        report.case,
        report.phase,
        a.injured_side,
        a.injured_foot_fraction,
        a.crutch_share,
        a.body_weight,
        a.exponent
    );
    let _ = writeln!(
        out,
        "{:<20} {:>6} {:>6} {:>7}  flag",
        "group", "left", "right", "AI"
    );
    for g in &report.groups {
        let flag = report
            .flags
            .iter()
            .find(|f| f.group == g.group)
            .map(|f| match f.severity {
                Severity::Warn => "warn",
                Severity::Severe => "SEVERE",
            })
            .unwrap_or("");
        let _ = writeln!(
            out,
            "{:<20} {:>6} {:>6} {:>+7.3}  {flag}",
            g.group,
            percent(Some(g.left.level)),
            percent(Some(g.right.level)),
            g.asymmetry_index
        );
    }
    let _ = writeln!(
        out,
        "{:<20} {:>6}",
        "trunk_mean",
        percent(Some(report.trunk_mean))
    );
    out
}

pub fn render_comparison(table: &ComparisonTable) -> String {
    let width = table
        .columns
        .iter()
        .map(|c| c.len())
        .max()
        .unwrap_or(0)
        .max(6);
    let mut out = String::new();
    let _ = write!(out, "{:<28}", "group side");
    for c in &table.columns {
        let _ = write!(out, " {c:>width$}");
    }
    out.push('\n');
    for row in &table.rows {
        let _ = write!(out, "{:<28}", row.label);
        for v in &row.values {
            let _ = write!(out, " {:>width$}", percent(*v));
        }
        out.push('\n');
    }
    out
}

/// Whitespace-separated columns: row label then one level per case.
pub fn plot_columns(table: &ComparisonTable) -> String {
    let mut out = String::from("# label");
    for c in &table.columns {
        let _ = write!(out, " {c}");
    }
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.label.replace(' ', "_"));
        for v in &row.values {
            match v {
                Some(x) => {
                    let _ = write!(out, " {x}");
                }
                None => out.push_str(" nan"),
            }
        }
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 6] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
];

/// Grouped bar chart of a comparison: one cluster per row, one bar per case.
pub fn svg_bar_chart(table: &ComparisonTable) -> String {
    let bar = 12.0;
    let gap = 10.0;
    let n_cols = table.columns.len().max(1) as f64;
    let cluster = bar * n_cols + gap;
    let (left, top, plot_h, bottom) = (50.0, 30.0, 200.0, 120.0);
    let width = left + cluster * table.rows.len() as f64 + 20.0;
    let height = top + plot_h + bottom;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for k in 0..=4 {
        let v = k as f64 * 0.25;
        let _ = writeln!(
            s,
            "<line x1=\"{left}\" y1=\"{yy:.1}\" x2=\"{x2:.1}\" y2=\"{yy:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{tx}\" y=\"{ty:.1}\" text-anchor=\"end\">{p:.0}%</text>",
            yy = y(v),
            x2 = width - 20.0,
            tx = left - 4.0,
            ty = y(v) + 3.0,
            p = v * 100.0
        );
    }
    for (i, row) in table.rows.iter().enumerate() {
        let x0 = left + gap / 2.0 + cluster * i as f64;
        for (c, v) in row.values.iter().enumerate() {
            let Some(v) = v else { continue };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar}" height="{:.1}" fill="{}"><title>{} {}: {:.1}%</title></rect>"#,
                x0 + bar * c as f64,
                y(*v),
                plot_h * v.clamp(0.0, 1.0),
                PALETTE[c % PALETTE.len()],
                row.label,
                table.columns[c],
                v * 100.0
            );
        }
        let lx = x0 + bar * n_cols / 2.0;
        let ly = top + plot_h + 8.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" transform="rotate(60 {lx:.1} {ly:.1})">{}</text>"#,
            row.label
        );
    }
    for (c, name) in table.columns.iter().enumerate() {
        let x = left + 120.0 * c as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="8" width="10" height="10" fill="{}"/><text x="{:.1}" y="17">{name}</text>"#,
            PALETTE[c % PALETTE.len()],
            x + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_model;
    use crate::redundancy::{solve_static_optimization, SolverParams};
    use crate::report::{compare_cases, symmetry_report, RiskThresholds};
    use crate::scenarios::{build_snapshot, ScenarioConfig};

    fn normal_report() -> SymmetryReport {
        let model = default_model();
        let snap = build_snapshot(&ScenarioConfig::new(Case::Normal, &model), &model).unwrap();
        let tau = crate::dynamics::inverse_dynamics(&model, &snap.posture, &snap.loads).unwrap();
        let params = SolverParams::default();
        let sol = solve_static_optimization(&model, &snap.posture, &tau, &params).unwrap();
        symmetry_report(&model, &snap, &sol, 2, &RiskThresholds::default()).unwrap()
    }

    #[test]
    fn csv_layout() {
        let csv = report_csv(&[normal_report()]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "muscle,group,side,case,phase,activation_mean,activation_peak"
        );
        assert_eq!(lines.len(), 17);
        assert!(lines[1].starts_with("rectus_abdominis,rectus_abdominis,left,normal,mid_stance,"));
    }

    #[test]
    fn json_fields() {
        let r = normal_report();
        let v: serde_json::Value = serde_json::from_str(&report_json(&r).unwrap()).unwrap();
        for key in [
            "case",
            "phase",
            "groups",
            "trunk_mean",
            "flags",
            "assumptions",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["assumptions"]["injured_foot_fraction"], 0.1);
        assert_eq!(
            report_json(&r).unwrap(),
            report_json(&normal_report()).unwrap()
        );
    }

    #[test]
    fn text_and_plot_outputs() {
        let r = normal_report();
        let t = compare_cases(&[r.clone(), r.clone()]).unwrap();
        let text = render_comparison(&t);
        assert!(text.lines().last().unwrap().starts_with("trunk_mean"));
        let cols = plot_columns(&t);
        assert!(cols.starts_with("# label normal normal\n"));
        assert_eq!(cols.lines().count(), 18);
        let svg = svg_bar_chart(&t);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<title>").count(), 34);
        assert!(render_report(&r).contains("f = 0.10"));
    }
}
