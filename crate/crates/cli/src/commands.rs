//! One table builder per command. Each takes the resolved config and the
//! grid point count so a convergence rerun only changes `n`.

use std::f64::consts::PI;

use pulsed_squeezing::grid::{CavityParams, FrequencyGrid};
use pulsed_squeezing::lo_shaping::{filtered_lo, measured_squeezing, optimize_filter, overlap, LoConfig};
use pulsed_squeezing::observables::squeezed_variance;
use pulsed_squeezing::pipeline::{default_span, Scenario, Solution};
use pulsed_squeezing::sweep::{axis, try_map_points, Execution};
use pulsed_squeezing::threshold::{threshold_power_ratio, threshold_span, PowerDefinition};
use pulsed_squeezing::Result;

use crate::config::{RunConfig, SweepSpec, Variable};
use crate::table::{relative_change, Cell, Compare, Table};

fn sweep_axis(s: &SweepSpec) -> Result<Vec<f64>> {
    axis(s.min, s.max, s.count, s.spacing)
}

fn sweep(cfg: &RunConfig) -> &SweepSpec {
    cfg.sweep.as_ref().expect("sweep commands always resolve a sweep")
}

/// Squeezing grid: the configured span, else the default for the point.
fn solve_grid(cfg: &RunConfig, delta: f64, params: &CavityParams, n: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(cfg.grid_span.unwrap_or_else(|| default_span(delta, params)), n)
}

fn threshold_grid(cfg: &RunConfig, delta: f64, params: &CavityParams, n: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(cfg.grid_span.unwrap_or_else(|| threshold_span(delta, params)), n)
}

fn solve(cfg: &RunConfig, params: CavityParams, delta: f64, power: f64, n: usize) -> Result<Solution> {
    let grid = solve_grid(cfg, delta, &params, n)?;
    Scenario::new(params, delta, power, grid)?.solve()
}

fn power_column(def: PowerDefinition) -> String {
    format!("p_ratio_{def}")
}

pub fn threshold(cfg: &RunConfig, n: usize, exec: Execution) -> Result<Table> {
    let defs = cfg.power_def.definitions();
    let names: Vec<String> = defs.iter().map(|&d| power_column(d)).collect();
    let mut cols = vec![("delta", Compare::Axis)];
    cols.extend(names.iter().map(|s| (s.as_str(), Compare::Relative)));
    let mut table = Table::new(&cols);
    let deltas = sweep_axis(sweep(cfg))?;
    let rows = try_map_points(&deltas, exec, |&d| {
        let grid = threshold_grid(cfg, d, &cfg.params, n)?;
        let mut row = vec![Cell::Num(d)];
        for &def in &defs {
            row.push(Cell::Num(threshold_power_ratio(d, &cfg.params, &grid, def)?));
        }
        Ok(row)
    })?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// Phase along the grid with 2π jumps removed.
fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut shift = 0.0;
    for (j, &p) in phase.iter().enumerate() {
        if j > 0 {
            let d = p - phase[j - 1];
            shift -= 2.0 * PI * (d / (2.0 * PI)).round();
        }
        out.push(p + shift);
    }
    out
}

pub fn modes(cfg: &RunConfig, n: usize, _exec: Execution) -> Result<Table> {
    let sol = solve(cfg, cfg.params, cfg.delta, cfg.power_fraction, n)?;
    let count = cfg.modes.min(n);
    let names: Vec<(String, String)> = (1..=count).map(|k| (format!("abs_f{k}"), format!("phase_f{k}"))).collect();
    let mut cols = vec![("nu", Compare::Axis)];
    for (a, p) in &names {
        cols.push((a.as_str(), Compare::ColumnScaled));
        cols.push((p.as_str(), Compare::Skip));
    }
    let mut table = Table::new(&cols);
    let mut shapes = Vec::with_capacity(count);
    for k in 0..count {
        let (input, _) = sol.modes(k)?;
        let amp = input.amplitude().to_vec();
        let phase = unwrap_phase(&amp.iter().map(|z| z.arg()).collect::<Vec<_>>());
        shapes.push((amp, phase));
    }
    for (j, nu) in sol.grid().points().into_iter().enumerate() {
        let mut row = vec![Cell::Num(nu)];
        for (amp, phase) in &shapes {
            row.push(Cell::Num(amp[j].norm()));
            row.push(Cell::Num(phase[j]));
        }
        table.push(row);
    }
    Ok(table)
}

pub fn squeeze(cfg: &RunConfig, n: usize, exec: Execution) -> Result<Table> {
    let s = sweep(cfg);
    if s.variable == Variable::Mode {
        let sol = solve(cfg, cfg.params, cfg.delta, cfg.power_fraction, n)?;
        let mut table = Table::new(&[
            ("mode", Compare::Axis),
            ("xi", Compare::Relative),
            ("variance", Compare::Relative),
            ("db", Compare::Relative),
        ]);
        let report = sol.report()?;
        let last = (s.max as usize).min(n);
        for k in s.min as usize..=last {
            table.push(vec![
                Cell::Int(k as i64),
                Cell::Num(sol.decomposition.xi[k - 1]),
                Cell::Num(report.variances[k - 1]),
                Cell::Num(report.db[k - 1]),
            ]);
        }
        return Ok(table);
    }
    let mut table = Table::new(&[
        ("power_fraction", Compare::Axis),
        ("xi_1", Compare::Relative),
        ("variance_1", Compare::Relative),
        ("db_1", Compare::Relative),
    ]);
    let powers = sweep_axis(s)?;
    let rows = try_map_points(&powers, exec, |&p| {
        let sol = solve(cfg, cfg.params, cfg.delta, p, n)?;
        let xi = sol.decomposition.xi[0];
        let report = sol.report()?;
        Ok(vec![
            Cell::Num(p),
            Cell::Num(xi),
            Cell::Num(report.variances[0]),
            Cell::Num(report.db[0]),
        ])
    })?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

pub fn mode_number(cfg: &RunConfig, n: usize, exec: Execution) -> Result<Table> {
    let s = sweep(cfg);
    let mut table = Table::new(&[
        (s.variable.name(), Compare::Axis),
        ("k_eff", Compare::Relative),
        ("fwhm_1", Compare::Relative),
        ("db_1", Compare::Relative),
    ]);
    let xs = sweep_axis(s)?;
    let rows = try_map_points(&xs, exec, |&x| {
        let (params, delta, power) = match s.variable {
            Variable::Delta => (cfg.params, x, cfg.power_fraction),
            Variable::GammaP => (cfg.params.with_gamma_p(x)?, cfg.delta, cfg.power_fraction),
            _ => (cfg.params, cfg.delta, x),
        };
        let report = solve(cfg, params, delta, power, n)?.report()?;
        Ok(vec![
            Cell::Num(x),
            Cell::Num(report.k),
            Cell::Num(report.fwhm1.unwrap_or(f64::NAN)),
            Cell::Num(report.db.first().copied().unwrap_or(0.0)),
        ])
    })?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

pub fn lo(cfg: &RunConfig, n: usize, exec: Execution) -> Result<Table> {
    let mut table = Table::new(&[
        ("delta", Compare::Axis),
        ("overlap", Compare::Relative),
        ("measured_db", Compare::Relative),
        ("matched_db", Compare::Relative),
        ("gamma_f", Compare::Relative),
        ("unfiltered_overlap", Compare::Relative),
        ("unfiltered_db", Compare::Relative),
        ("at_boundary", Compare::Skip),
    ]);
    let deltas = sweep_axis(sweep(cfg))?;
    let rows = try_map_points(&deltas, exec, |&d| {
        let sol = solve(cfg, cfg.params, d, cfg.power_fraction, n)?;
        let grid = *sol.grid();
        let (_, target) = sol.modes(0)?;
        let moments = sol.moments();
        let delta_lo = cfg.delta_lo.unwrap_or_else(|| cfg.lo_bandwidth.delta_lo(d));
        let template = LoConfig::unfiltered(delta_lo)?;
        let plain = overlap(&filtered_lo(&template, &grid)?, &target, true)?;
        let plain_lo = filtered_lo(&LoConfig::new(delta_lo, f64::INFINITY, plain.delay)?, &grid)?;
        let (gamma_f, value, delay, at_boundary) = match cfg.gamma_f {
            Some(gf) => {
                let o = overlap(&filtered_lo(&template.with_filter(gf)?, &grid)?, &target, true)?;
                (gf, o.value, o.delay, false)
            }
            None => {
                let o = optimize_filter(&template, &target)?;
                (o.gamma_f, o.overlap, o.delay, o.at_boundary)
            }
        };
        let best = filtered_lo(&LoConfig::new(delta_lo, gamma_f, delay)?, &grid)?;
        Ok(vec![
            Cell::Num(d),
            Cell::Num(value),
            Cell::Num(measured_squeezing(&moments, &best)?),
            Cell::Num(sol.report()?.db[0]),
            Cell::Num(gamma_f),
            Cell::Num(plain.value),
            Cell::Num(measured_squeezing(&moments, &plain_lo)?),
            Cell::Int(at_boundary as i64),
        ])
    })?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// Key observables at one grid.
fn observables(cfg: &RunConfig, solve_grid: FrequencyGrid, threshold_grid: FrequencyGrid) -> Result<Vec<(String, f64)>> {
    let sol = Scenario::new(cfg.params, cfg.delta, cfg.power_fraction, solve_grid)?.solve()?;
    let report = sol.report()?;
    let xi1 = sol.decomposition.xi.first().copied().unwrap_or(0.0);
    let mut out = vec![
        ("k_eff".to_string(), report.k),
        ("db_1".to_string(), report.db.first().copied().unwrap_or(0.0)),
        ("variance_1".to_string(), squeezed_variance(xi1, &cfg.params)),
        ("fwhm_1".to_string(), report.fwhm1.unwrap_or(f64::NAN)),
    ];
    for def in cfg.power_def.definitions() {
        out.push((power_column(def), threshold_power_ratio(cfg.delta, &cfg.params, &threshold_grid, def)?));
    }
    Ok(out)
}

/// Observables at the configured grid, at twice the points, and at twice
/// the points over twice the span.
pub fn convergence(cfg: &RunConfig, n: usize, exec: Execution) -> Result<Table> {
    let sg = solve_grid(cfg, cfg.delta, &cfg.params, n)?;
    let tg = threshold_grid(cfg, cfg.delta, &cfg.params, n)?;
    let grids = [(sg, tg), (sg.refined(), tg.refined()), (sg.doubled(), tg.doubled())];
    let runs = try_map_points(&grids, exec, |&(s, t)| observables(cfg, s, t))?;
    let mut table = Table::new(&[
        ("quantity", Compare::Skip),
        ("base", Compare::Skip),
        ("refined", Compare::Skip),
        ("rel_change_refined", Compare::Skip),
        ("extended", Compare::Skip),
        ("rel_change_extended", Compare::Skip),
    ]);
    for (i, (name, base)) in runs[0].iter().enumerate() {
        let refined = runs[1][i].1;
        let extended = runs[2][i].1;
        table.push(vec![
            Cell::Text(name.clone()),
            Cell::Num(*base),
            Cell::Num(refined),
            Cell::Num(relative_change(*base, refined)),
            Cell::Num(extended),
            Cell::Num(relative_change(*base, extended)),
        ]);
    }
    Ok(table)
}
