//! Output files of an experiment run.

use std::fmt::Write as _;

use serde::Serialize;

use super::config::{DPrimeConfig, ExperimentConfig, NormingChoice};
use crate::engine::{ComparisonReport, DPrimePoint, MarginalReport, ReplicationOutcome};
use crate::limits::LimitLaw;
use crate::models::{EvalGrid, Mixing};
use crate::norming::Norming;

pub const SURFACE_EMPIRICAL: &str = "surface_empirical.csv";
pub const SURFACE_THEORY: &str = "surface_theory.csv";
pub const MARGINALS: &str = "marginals.csv";
pub const REPORT: &str = "report.json";
pub const PLOT_SCRIPT: &str = "plot_surfaces.py";

/// `v` with 9 significant digits, in plain or scientific notation.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.8e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exponent) = match s.find('e') {
        Some(i) => s.split_at(i),
        None => (s, ""),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}{exponent}")
}

/// `x,y,value` rows over the grid, `x` outermost.
pub fn surface_csv(grid: &EvalGrid, values: &[Vec<f64>]) -> String {
    let mut out = String::from("x,y,value\n");
    for (i, x) in grid.xs.iter().enumerate() {
        for (j, y) in grid.ys.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", format_sig(*x), format_sig(*y), format_sig(values[i][j]));
        }
    }
    out
}

/// One row per axis point: which maximum, the point, and both distribution functions.
pub fn marginals_csv(m: &MarginalReport) -> String {
    let mut out = String::from("maximum,t,empirical,theory\n");
    let rows = [
        ("perturbed", &m.xs, &m.perturbed_empirical, &m.perturbed_theory),
        ("original", &m.ys, &m.original_empirical, &m.original_theory),
    ];
    for (label, axis, emp, theory) in rows {
        for ((t, e), g) in axis.iter().zip(emp.iter()).zip(theory.iter()) {
            let _ = writeln!(out, "{label},{},{},{}", format_sig(*t), format_sig(*e), format_sig(*g));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let count = values.clone().count().max(1) as f64;
        let mean = values.clone().sum::<f64>() / count;
        let var = values.clone().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Summary {
            mean,
            sd: var.sqrt(),
            min: if min.is_finite() { min } else { 0.0 },
            max: if max.is_finite() { max } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstCell {
    pub x: f64,
    pub y: f64,
    pub empirical: f64,
    pub theory: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalSummary {
    pub perturbed_sup_distance: f64,
    pub original_sup_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho<'a> {
    pub process: &'a crate::models::ProcessSpec,
    pub selection: &'a crate::models::SelectionSpec,
    pub mode: crate::models::PerturbationMode,
    pub n: usize,
    pub replications: u64,
    pub grid: &'a EvalGrid,
    pub norming_choice: &'a NormingChoice,
    pub dprime: &'a Option<DPrimeConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<'a> {
    pub name: &'a str,
    pub description: &'a str,
    pub seed: u64,
    pub limit_law: LimitLaw,
    pub mixing: Mixing,
    pub norming: &'a Norming,
    pub sup_distance: f64,
    pub mc_standard_error: f64,
    pub worst_cell: WorstCell,
    pub marginals: MarginalSummary,
    pub realized_lambda: Summary,
    pub selected_fraction: Summary,
    pub all_unobserved_replications: u64,
    pub dprime: Option<Vec<DPrimePoint>>,
    pub config: ConfigEcho<'a>,
}

impl<'a> RunReport<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: &'a ExperimentConfig,
        seed: u64,
        norming: &'a Norming,
        comparison: &ComparisonReport,
        limit_law: LimitLaw,
        marginals: &MarginalReport,
        outcomes: &[ReplicationOutcome],
        dprime: Option<Vec<DPrimePoint>>,
    ) -> Self {
        let (i, j) = comparison.argmax();
        RunReport {
            name: &config.name,
            description: &config.description,
            seed,
            limit_law,
            mixing: config.mixing,
            norming,
            sup_distance: comparison.sup_distance,
            mc_standard_error: comparison.mc_standard_error,
            worst_cell: WorstCell {
                x: comparison.grid.xs[i],
                y: comparison.grid.ys[j],
                empirical: comparison.empirical[i][j],
                theory: comparison.theoretical[i][j],
                standard_error: comparison.cell_standard_errors[i][j],
            },
            marginals: MarginalSummary {
                perturbed_sup_distance: marginals.perturbed_sup_distance,
                original_sup_distance: marginals.original_sup_distance,
            },
            realized_lambda: Summary::of(outcomes.iter().map(|o| o.realized_lambda)),
            selected_fraction: Summary::of(outcomes.iter().map(|o| o.s_n_over_n)),
            all_unobserved_replications: outcomes.iter().filter(|o| o.m_perturbed.is_none()).count() as u64,
            dprime,
            config: ConfigEcho {
                process: &config.process,
                selection: &config.selection,
                mode: config.mode,
                n: config.n,
                replications: config.replications,
                grid: &config.grid,
                norming_choice: &config.norming,
                dprime: &config.dprime,
            },
        }
    }
}

/// Path of the first non-finite number in a JSON document, if any.
pub fn first_non_finite(value: &serde_json::Value, path: &str) -> Option<String> {
    match value {
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(f) if f.is_finite() => None,
            _ => Some(path.to_string()),
        },
        // serde_json writes NaN and infinities as null.
        serde_json::Value::Null if !path.ends_with("dprime") => Some(path.to_string()),
        serde_json::Value::Array(items) => items
            .iter()
            .enumerate()
            .find_map(|(i, v)| first_non_finite(v, &format!("{path}[{i}]"))),
        serde_json::Value::Object(map) => map.iter().find_map(|(k, v)| first_non_finite(v, &format!("{path}.{k}"))),
        _ => None,
    }
}

pub const PLOT_STUB: &str = r#"#!/usr/bin/env python3
"""Plot the empirical and limiting joint distribution functions of a run.

Usage: python3 plot_surfaces.py [run directory]
"""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def load_surface(path):
    rows = list(csv.DictReader(open(path)))
    xs = sorted({float(r["x"]) for r in rows})
    ys = sorted({float(r["y"]) for r in rows})
    z = [[0.0] * len(xs) for _ in ys]
    for r in rows:
        z[ys.index(float(r["y"]))][xs.index(float(r["x"]))] = float(r["value"])
    return xs, ys, z


def main():
    run = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    xs, ys, emp = load_surface(run / "surface_empirical.csv")
    _, _, theory = load_surface(run / "surface_theory.csv")
    diff = [[e - t for e, t in zip(er, tr)] for er, tr in zip(emp, theory)]

    fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
    for ax, z, title in zip(axes, (emp, theory, diff), ("empirical", "limit", "empirical - limit")):
        mesh = ax.pcolormesh(xs, ys, z, shading="nearest")
        ax.set_title(title)
        ax.set_xlabel("x (perturbed maximum)")
        ax.set_ylabel("y (original maximum)")
        fig.colorbar(mesh, ax=ax)

    marg = list(csv.DictReader(open(run / "marginals.csv")))
    fig2, ax2 = plt.subplots(figsize=(6, 4.5))
    for label in ("perturbed", "original"):
        pts = [r for r in marg if r["maximum"] == label]
        t = [float(r["t"]) for r in pts]
        ax2.step(t, [float(r["empirical"]) for r in pts], where="post", label=f"{label} empirical")
        ax2.plot(t, [float(r["theory"]) for r in pts], "--", label=f"{label} limit")
    ax2.legend()
    fig.savefig(run / "surfaces.png", dpi=120)
    fig2.savefig(run / "marginals.png", dpi=120)


if __name__ == "__main__":
    main()
"#;
