//! One function per subcommand: resolve parameters, compute, tabulate.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_6;

use anyhow::{bail, Result};
use grm_core::basis::{BareLabel, BasisSpec};
use grm_core::dynamics::{chirality_diagnostic, junction_experiment, Horizon, JunctionSetup, TAIL_LIMIT};
use grm_core::models::ModelParams;
use grm_core::perturbation::{
    effective_coupling, frequency_coefficients, path_sum_coupling, perturbative_result, resonant_frequency,
    stark_resonant_frequency,
};
use grm_core::spectrum::{
    default_cutoff, default_window, eigendecompose, error_grid, find_avoided_crossing, ScanOptions,
};
use grm_core::{build_grm, build_grm_rwa, ResonanceSpec};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{grid, HorizonUnit, Overrides, SweepAxis};
use crate::output::{Cell, Table};

/// A finished command: the table plus what goes into the manifest.
pub struct Report {
    pub config: Value,
    pub derived: Value,
    pub table: Table,
}

fn resonance(o: &Overrides) -> Result<ResonanceSpec> {
    Ok(ResonanceSpec::new(o.n.unwrap_or(4), o.n0.unwrap_or(0), o.rwa.unwrap_or(false))?)
}

fn window(o: &Overrides) -> Option<(f64, f64)> {
    match (o.window_lo, o.window_hi) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(0.0))),
    }
}

#[derive(Serialize)]
struct Grid {
    min: f64,
    max: f64,
    count: usize,
}

fn lambda_grid(o: &Overrides) -> Grid {
    Grid { min: o.lambda_min.unwrap_or(0.0), max: o.lambda_max.unwrap_or(0.1), count: o.lambda_count.unwrap_or(11) }
}

fn kappa_grid(o: &Overrides) -> Grid {
    Grid { min: o.kappa_min.unwrap_or(0.0), max: o.kappa_max.unwrap_or(0.1), count: o.kappa_count.unwrap_or(11) }
}

fn values(g: &Grid) -> Result<Vec<f64>> {
    grid(g.min, g.max, g.count)
}

pub fn scan_resonance(o: &Overrides) -> Result<Report> {
    let spec = resonance(o)?;
    let sweep = o.sweep.unwrap_or(SweepAxis::Kappa);
    let lambda = o.lambda.unwrap_or(0.05);
    let kappa = o.kappa.unwrap_or(0.01);
    let cutoff = o.cutoff.unwrap_or_else(|| default_cutoff(&spec));
    let (swept, points) = match sweep {
        SweepAxis::Kappa => ("kappa", kappa_grid(o)),
        SweepAxis::Lambda => ("lambda", lambda_grid(o)),
    };
    let cells: Vec<(f64, f64)> = values(&points)?
        .into_iter()
        .map(|x| if sweep == SweepAxis::Kappa { (lambda, x) } else { (x, kappa) })
        .collect();
    let options = ScanOptions { window: window(o), cutoff: Some(cutoff) };

    let rows: Vec<Vec<Cell>> = cells
        .par_iter()
        .map(|&(l, k)| {
            let mut reasons = Vec::new();
            let pert = perturbative_result(&spec, l, k).map_err(|e| reasons.push(format!("perturbative: {e}"))).ok();
            let num = find_avoided_crossing(&spec, l, k, &options).map_err(|e| reasons.push(format!("scan: {e}"))).ok();
            vec![
                l.into(),
                k.into(),
                spec.n.into(),
                spec.n0.into(),
                spec.rwa.into(),
                pert.map(|p| p.omega_c_res).into(),
                num.as_ref().map(|r| r.omega_c_res).into(),
                pert.map(|p| p.delta).into(),
                num.as_ref().map(|r| r.delta).into(),
                cutoff.into(),
                reasons.join("; ").into(),
            ]
        })
        .collect();

    let mut table = Table::new(&[
        "lambda",
        "kappa",
        "n",
        "n0",
        "rwa",
        "omega_pert",
        "omega_num",
        "delta_pert",
        "delta_num",
        "cutoff",
        "reason",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let config = json!({
        "n": spec.n, "n0": spec.n0, "rwa": spec.rwa, "sweep": swept,
        "lambda": if sweep == SweepAxis::Kappa { json!(lambda) } else { json!(points) },
        "kappa": if sweep == SweepAxis::Lambda { json!(kappa) } else { json!(points) },
        "cutoff": cutoff, "window": options.window,
    });
    Ok(Report { config, derived: json!({}), table })
}

pub fn error_grid_cmd(o: &Overrides) -> Result<Report> {
    let spec = resonance(o)?;
    let cutoff = o.cutoff.unwrap_or_else(|| default_cutoff(&spec));
    let (lg, kg) = (lambda_grid(o), kappa_grid(o));
    let options = ScanOptions { window: window(o), cutoff: Some(cutoff) };
    let cells = error_grid(&spec, &values(&lg)?, &values(&kg)?, &options);
    let mut table = Table::new(&[
        "lambda",
        "kappa",
        "err_omega_pct",
        "err_delta_pct",
        "omega_pert",
        "omega_num",
        "delta_pert",
        "delta_num",
        "crossing",
        "flags",
    ]);
    for c in cells {
        table.push(vec![
            c.lambda.into(),
            c.kappa.into(),
            c.err_omega_pct.into(),
            c.err_delta_pct.into(),
            c.perturbative.map(|p| p.omega_c_res).into(),
            c.numeric.as_ref().map(|r| r.omega_c_res).into(),
            c.perturbative.map(|p| p.delta).into(),
            c.numeric.as_ref().map(|r| r.delta).into(),
            c.numeric.as_ref().map_or(Cell::Empty, |r| r.crossing.into()),
            c.flags.into(),
        ]);
    }
    let config = json!({
        "n": spec.n, "n0": spec.n0, "rwa": spec.rwa, "lambda": lg, "kappa": kg,
        "cutoff": cutoff, "window": options.window,
        "error_definition": "|pert - num| / |num| * 100",
    });
    Ok(Report { config, derived: json!({}), table })
}

pub fn path_sum(o: &Overrides) -> Result<Report> {
    let ns: Vec<u32> = o.n.map_or((3..=6).collect(), |n| vec![n]);
    let n0s: Vec<u32> = o.n0.map_or((0..=2).collect(), |n0| vec![n0]);
    let (lg, kg) = (
        o.lambda.map_or_else(
            || Grid { count: o.lambda_count.unwrap_or(5), ..lambda_grid(o) },
            |l| Grid { min: l, max: l, count: 1 },
        ),
        o.kappa.map_or_else(
            || Grid { count: o.kappa_count.unwrap_or(5), ..kappa_grid(o) },
            |k| Grid { min: k, max: k, count: 1 },
        ),
    );
    let (lambdas, kappas) = (values(&lg)?, values(&kg)?);
    let mut table = Table::new(&[
        "n",
        "n0",
        "rwa",
        "lambda",
        "kappa",
        "oracle",
        "closed_form",
        "diff",
        "freq_closed",
        "freq_stark",
    ]);
    for &n in &ns {
        for &n0 in &n0s {
            for rwa in [false, true] {
                let spec = ResonanceSpec::new(n, n0, false)?;
                // RWA rows for n > 3 evaluate the RWA path sum, whose closed form is zero
                let rwa_spec = if rwa && n == 3 { Some(ResonanceSpec::new(n, n0, true)?) } else { None };
                for &l in &lambdas {
                    for &k in &kappas {
                        let params = ModelParams::new(1.0 / n as f64, l, k)?;
                        let oracle = path_sum_coupling(&spec, &params, rwa)?;
                        let closed = match (rwa, rwa_spec, n0) {
                            (_, _, n0) if n0 > 0 => None,
                            (true, Some(s), _) => Some(effective_coupling(&s, l, k)?),
                            (true, None, _) => Some(0.0),
                            (false, _, _) => Some(effective_coupling(&spec, l, k)?),
                        };
                        // relative difference, absolute when the closed form vanishes
                        let diff = closed.map(|c| if c == 0.0 { (oracle - c).abs() } else { ((oracle - c) / c).abs() });
                        let freq_spec = if rwa { rwa_spec } else { Some(spec) };
                        let (freq_closed, freq_stark) = match freq_spec {
                            Some(s) => (Some(resonant_frequency(&s, l, k)?), Some(stark_resonant_frequency(&s, l, k)?)),
                            None => (None, None),
                        };
                        table.push(vec![
                            n.into(),
                            n0.into(),
                            rwa.into(),
                            l.into(),
                            k.into(),
                            oracle.into(),
                            closed.into(),
                            diff.into(),
                            freq_closed.into(),
                            freq_stark.into(),
                        ]);
                    }
                }
            }
        }
    }
    let coefficients: BTreeMap<String, [f64; 2]> = ns
        .iter()
        .map(|&n| {
            let (cl, ck) = frequency_coefficients::<f64>(&ResonanceSpec::new(n, 0, false).unwrap());
            (n.to_string(), [cl, ck])
        })
        .collect();
    let config = json!({ "n": ns, "n0": n0s, "lambda": lg, "kappa": kg });
    Ok(Report { config, derived: json!({ "frequency_coefficients_n0_0": coefficients }), table })
}

pub fn spectrum(o: &Overrides) -> Result<Report> {
    let spec = resonance(o)?;
    let lambda = o.lambda.unwrap_or(0.05);
    let kappa = o.kappa.unwrap_or(0.01);
    let cutoff = o.cutoff.unwrap_or_else(|| default_cutoff(&spec));
    let (w_lo, w_hi) = default_window(&spec, lambda, kappa);
    let (lo, hi) = (o.omega_min.unwrap_or(w_lo), o.omega_max.unwrap_or(w_hi));
    let points = o.points.unwrap_or(201);
    let basis = BasisSpec::single(cutoff)?;
    let levels = o.levels.unwrap_or(12).min(basis.dim());
    let idx_i = basis.encode(&[spec.initial_state()])?;
    let idx_f = basis.encode(&[spec.final_state()])?;
    let omegas = grid(lo, hi, points)?;
    if lo <= 0.0 {
        bail!("omega_min must be positive");
    }
    let blocks: Vec<Result<Vec<Vec<Cell>>>> = omegas
        .par_iter()
        .map(|&w| {
            let params = ModelParams::new(w, lambda, kappa)?;
            let h = if spec.rwa { build_grm_rwa(&params, &basis)? } else { build_grm(&params, &basis)? };
            let s = eigendecompose(&h)?;
            Ok((0..levels)
                .map(|k| {
                    vec![
                        w.into(),
                        k.into(),
                        s.eigenvalues[k].into(),
                        s.eigenvectors[[idx_i, k]].norm_sqr().into(),
                        s.eigenvectors[[idx_f, k]].norm_sqr().into(),
                    ]
                })
                .collect())
        })
        .collect();
    let mut table = Table::new(&["omega_c", "level", "energy", "weight_initial", "weight_final"]);
    for block in blocks {
        block?.into_iter().for_each(|r| table.push(r));
    }
    let label = |l: BareLabel| format!("|{},{}>", l.atom, l.photons);
    let config = json!({
        "n": spec.n, "n0": spec.n0, "rwa": spec.rwa, "lambda": lambda, "kappa": kappa,
        "cutoff": cutoff, "omega_min": lo, "omega_max": hi, "points": points, "levels": levels,
    });
    let derived = json!({ "initial": label(spec.initial_state()), "final": label(spec.final_state()) });
    Ok(Report { config, derived, table })
}

pub fn evolve_junction(o: &Overrides) -> Result<Report> {
    // the resonance fixing omega_c and the timescales is the full-model one;
    // --rwa switches the cells only
    let spec = ResonanceSpec::new(o.n.unwrap_or(4), o.n0.unwrap_or(0), false)?;
    let setup = JunctionSetup {
        lambda: o.lambda.unwrap_or(0.05),
        kappa: o.kappa.unwrap_or(0.01),
        theta: o.theta.unwrap_or(FRAC_PI_6),
        rwa: o.rwa.unwrap_or(false),
        mu: o.mu.unwrap_or(10.0),
        cutoff: o.cutoff.unwrap_or(8),
        tail_limit: o.tail_limit.unwrap_or(TAIL_LIMIT),
    };
    let unit = o.horizon_unit.unwrap_or(HorizonUnit::Hop);
    let span = o.horizon.unwrap_or(10.0);
    // also rejects NaN
    if !(span > 0.0) {
        bail!("horizon must be positive");
    }
    let horizon = match unit {
        HorizonUnit::Hop => Horizon::HopPeriods(span),
        HorizonUnit::Rabi => Horizon::RabiPeriods(span),
    };
    // T_H / T_R = 3 / (2 mu)
    let hop_periods = match unit {
        HorizonUnit::Hop => span,
        HorizonUnit::Rabi => span * 2.0 * setup.mu / 3.0,
    };
    let per_hop = 400f64.max(40.0 * 1.5 / setup.mu);
    let samples = o.samples.unwrap_or((hop_periods * per_hop).ceil() as usize + 1);
    let compare = o.compare_rwa.unwrap_or(false);

    let run = junction_experiment(&setup, &spec, horizon, samples)?;
    let comparison = if compare {
        Some(junction_experiment(&JunctionSetup { rwa: !setup.rwa, ..setup }, &spec, horizon, samples)?)
    } else {
        None
    };
    let ts = run.timescales;
    let scale = match unit {
        HorizonUnit::Hop => ts.hop_period,
        HorizonUnit::Rabi => ts.rabi_period,
    };
    let time_column = match unit {
        HorizonUnit::Hop => "t_over_TH",
        HorizonUnit::Rabi => "t_over_TR",
    };
    let mut columns = vec![time_column, "n1", "n2", "n3", "q1", "q2", "q3", "norm"];
    let suffixed =
        ["n1", "n2", "n3", "q1", "q2", "q3"].map(|c| format!("{c}_{}", if setup.rwa { "full" } else { "rwa" }));
    if compare {
        columns.extend(suffixed.iter().map(String::as_str));
    }
    let mut table = Table::new(&columns);
    let tr = &run.trajectory;
    for k in 0..tr.len() {
        let mut row: Vec<Cell> = vec![(tr.times[k] / scale).into()];
        row.extend((0..3).map(|j| Cell::from(tr.photons[j][k])));
        row.extend((0..3).map(|j| Cell::from(tr.qubits[j][k])));
        row.push(tr.norm[k].into());
        if let Some(other) = &comparison {
            let t = &other.trajectory;
            row.extend((0..3).map(|j| Cell::from(t.photons[j][k])));
            row.extend((0..3).map(|j| Cell::from(t.qubits[j][k])));
        }
        table.push(row);
    }

    let chirality =
        chirality_diagnostic(tr, ts.hop_period).map(|r| r.chirality.to_string()).unwrap_or_else(|e| e.to_string());
    let config = json!({
        "n": spec.n, "n0": spec.n0, "lambda": setup.lambda, "kappa": setup.kappa, "theta": setup.theta,
        "rwa": setup.rwa, "mu": setup.mu, "cutoff": setup.cutoff, "horizon": span,
        "horizon_unit": unit, "samples": samples, "compare_rwa": compare, "tail_limit": setup.tail_limit,
    });
    let derived = json!({
        "omega_c": run.params.cell.omega_c, "hopping": run.params.hopping, "omega_eff": run.omega_eff,
        "t_hop": ts.t_hop, "hop_period": ts.hop_period, "t_rabi": ts.t_rabi, "rabi_period": ts.rabi_period,
        "fock_tail": tr.fock_tail, "max_norm_deviation": tr.max_norm_deviation(),
        "max_energy_drift": tr.max_energy_drift(), "chirality": chirality,
    });
    Ok(Report { config, derived, table })
}
