//! One function per subcommand. Each returns the files it wrote.

use std::path::PathBuf;

use floquet_core::bch::{
    bch_truncated, boundary_decay_profile, convergence_bound, default_cutoff, fit_decay, perturbation_split_cells,
    Diagonal,
};
use floquet_core::fit::log_log_fit;
use floquet_core::floquet::{averaged_hamiltonian, extract_hf, floquet_eigensystem, quasienergies};
use floquet_core::linalg::C64;
use floquet_core::models::ModelSpec;
use floquet_core::observables::{
    bandwidth_criterion, bandwidth_critical_parameter, default_eps_im, detect_eps, deviating_fraction,
    first_ep_bracket, mean_positions, scale_free_row, spectrum_record, spectrum_sweep, threshold_lambda_c,
    trajectory as track_pair, PairSelection, ThresholdOptions, TrajectoryPoint, MIN_K_POINTS,
};
use floquet_core::sweep::{linspace, parallel_map};
use floquet_core::symmetry::audit;
use floquet_core::Error;
use serde_json::{json, Value};

use crate::config::{Experiment, Observable};
use crate::output::{write_file, write_json, Table};
use crate::svg::{Chart, Heatmap, Series};
use crate::CliError;

type Written = Result<Vec<PathBuf>, CliError>;

/// Deviation threshold for `|⟨x⟩/N − 1/2|` in the scale-free summary.
const POSITION_THRESHOLD: f64 = 0.05;
/// Largest heatmap drawn cell by cell; bigger matrices are block-averaged.
const HEATMAP_PIXELS: usize = 100;

fn model_json(m: &ModelSpec) -> Value {
    json!({
        "name": m.name(),
        "parameter": m.parameter_name(),
        "sites": m.sites,
        "band_dim": m.band_dim(),
        "eta": m.eta,
        "period": m.period,
    })
}

fn collect<T>(v: Vec<floquet_core::Result<T>>) -> Result<Vec<T>, CliError> {
    Ok(v.into_iter().collect::<floquet_core::Result<Vec<T>>>()?)
}

pub fn spectrum(exp: &Experiment) -> Written {
    let sweep = exp.sweep();
    let params = linspace(sweep.start, sweep.stop, sweep.steps);
    let records = spectrum_sweep(&exp.model, &params, exp.workers)?;
    let dir = &exp.out_dir;
    let mut out = Vec::new();

    let mut spec = Table::new(&["param", "index", "re_E", "im_E"]);
    let mut pcom = Table::new(&["param", "p_com", "n_com", "max_abs_im"]);
    for r in &records {
        for (i, z) in r.quasienergies.iter().enumerate() {
            spec.row(vec![r.param.into(), i.into(), z.re.into(), z.im.into()]);
        }
        pcom.row(vec![r.param.into(), r.p_com.into(), r.n_com.into(), r.max_abs_im.into()]);
    }
    out.push(spec.write(dir, "spectrum.csv")?);
    out.push(pcom.write(dir, "p_com.csv")?);

    let mut summary = json!({
        "command": "spectrum",
        "model": model_json(&exp.model),
        "sweep": exp.sweep,
        "max_p_com": records.iter().map(|r| r.p_com).fold(0.0, f64::max),
        "first_broken_param": records.iter().find(|r| r.n_com > 0).map(|r| r.param),
    });
    if exp.wants(Observable::ExceptionalPoints) {
        let eps = detect_eps(&records);
        let mut t = Table::new(&[
            "lambda_ep",
            "pair_i",
            "pair_j",
            "fit_exponent",
            "fit_prefactor",
            "fit_residual",
            "window_lo",
            "window_hi",
        ]);
        for e in &eps {
            t.row(vec![
                e.lambda_ep.into(),
                e.pair.0.into(),
                e.pair.1.into(),
                e.fit_exponent.into(),
                e.fit_prefactor.into(),
                e.fit_residual.into(),
                e.window.0.into(),
                e.window.1.into(),
            ]);
        }
        out.push(t.write(dir, "exceptional_points.csv")?);
        summary["exceptional_points"] = json!(eps.len());
    }
    out.push(write_json(dir, "summary.json", &summary)?);

    let re: Vec<(f64, f64)> =
        records.iter().flat_map(|r| r.quasienergies.iter().map(move |z| (r.param, z.re))).collect();
    let im: Vec<(f64, f64)> = records
        .iter()
        .flat_map(|r| r.quasienergies.iter().filter(|z| z.im != 0.0).map(move |z| (r.param, z.im)))
        .collect();
    let pname = exp.model.parameter_name();
    let chart = Chart::new("Quasienergy spectrum", pname, "E")
        .add(Series::points("Re E", re))
        .add(Series::points("Im E", im));
    out.push(write_file(dir, "spectrum.svg", &chart.render())?);
    let chart = Chart::new("Fraction of complex quasienergies", pname, "P_com")
        .add(Series::line("", records.iter().map(|r| (r.param, r.p_com)).collect()));
    out.push(write_file(dir, "p_com.svg", &chart.render())?);
    Ok(out)
}

pub fn phase_diagram(exp: &Experiment) -> Written {
    let sweep = exp.sweep();
    let params = linspace(sweep.start, sweep.stop, sweep.steps);
    let models: Vec<ModelSpec> = exp.sizes.iter().map(|&n| exp.model.with_sites(n)).collect();
    for m in &models {
        m.validate()?;
    }
    let grid: Vec<(usize, f64)> = (0..models.len()).flat_map(|k| params.iter().map(move |&x| (k, x))).collect();
    let p_com = collect(parallel_map(&grid, exp.workers, |&(k, x)| spectrum_record(&models[k], x).map(|r| r.p_com)))?;
    let dir = &exp.out_dir;
    let mut out = Vec::new();

    let mut t = Table::new(&["param", "sites", "p_com"]);
    for (&(k, x), &p) in grid.iter().zip(&p_com) {
        t.row(vec![x.into(), models[k].sites.into(), p.into()]);
    }
    out.push(t.write(dir, "phase_diagram.csv")?);

    let bracket = exp.bracket.unwrap_or((sweep.start, sweep.stop));
    let mut summary = json!({
        "command": "phase-diagram",
        "model": model_json(&exp.model),
        "sweep": exp.sweep,
        "sizes": exp.sizes,
    });
    let mut overlay = Vec::new();
    if exp.wants(Observable::Thresholds) {
        let found = parallel_map(&models, exp.workers, |m| match threshold_lambda_c(m, bracket) {
            Ok(x) => Ok(Some(x)),
            Err(Error::BracketNotStraddling { .. }) => Ok(None),
            Err(e) => Err(e),
        });
        let found = collect(found)?;
        let mut t = Table::new(&["sites", "threshold"]);
        let mut missing = Vec::new();
        for (k, (m, x)) in models.iter().zip(&found).enumerate() {
            match x {
                Some(x) => {
                    t.row(vec![m.sites.into(), (*x).into()]);
                    overlay.push((*x, k as f64));
                }
                None => missing.push(m.sites),
            }
        }
        out.push(t.write(dir, "thresholds.csv")?);
        summary["threshold_bracket"] = json!([bracket.0, bracket.1]);
        summary["unbracketed_sizes"] = json!(missing);
    }
    if exp.wants(Observable::Bandwidth) {
        let crit = match bandwidth_critical_parameter(&exp.model, bracket, MIN_K_POINTS) {
            Ok(x) => Some(x),
            Err(Error::BracketNotStraddling { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        summary["bandwidth_critical_parameter"] = json!(crit);
    }
    out.push(write_json(dir, "summary.json", &summary)?);

    let map = Heatmap {
        title: "Phase diagram".into(),
        x_label: exp.model.parameter_name().into(),
        y_label: "N".into(),
        x_range: (sweep.start, sweep.stop),
        y_ticks: models.iter().enumerate().map(|(k, m)| (k, m.sites.to_string())).collect(),
        values: p_com.chunks(params.len()).map(<[f64]>::to_vec).collect(),
        value_label: "P_com".into(),
        overlay,
    };
    out.push(write_file(dir, "phase_diagram.svg", &map.render())?);
    Ok(out)
}

/// Multiplier where the first pair leaves the unit circle, as a selection
/// for the tracker, plus the bracket around the collision.
fn collision_selection(model: &ModelSpec, range: (f64, f64)) -> Result<(PairSelection, (f64, f64)), CliError> {
    let opts = ThresholdOptions { width: 1e-10, ..ThresholdOptions::default() };
    let (lo, hi) = first_ep_bracket(model, range, &opts)?;
    let broken = spectrum_record(model, hi)?;
    let eps = default_eps_im(&broken.quasienergies);
    let z = broken
        .quasienergies
        .iter()
        .filter(|z| z.im > eps)
        .min_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)))
        .ok_or(Error::NoExceptionalPoint)?;
    let xi = (C64::new(0.0, -model.period) * z).exp();
    Ok((PairSelection::NearestTo { re: xi.re, im: xi.im }, (lo, hi)))
}

pub fn trajectory(exp: &Experiment) -> Written {
    let sweep = exp.sweep();
    let params = linspace(sweep.start, sweep.stop, sweep.steps);
    let model = &exp.model;
    let (points, selection, collision): (Vec<TrajectoryPoint>, PairSelection, Option<(f64, f64)>) = match exp.pair {
        Some(sel) => (track_pair(model, &params, sel, exp.workers)?, sel, None),
        None => {
            // Track outward from the collision so the pair is identified
            // where it is unambiguous.
            let range = exp.bracket.unwrap_or((sweep.start, sweep.stop));
            let (sel, (lo, hi)) = collision_selection(model, range)?;
            let down: Vec<f64> = std::iter::once(lo).chain(params.iter().rev().copied().filter(|&x| x <= lo)).collect();
            let up: Vec<f64> = std::iter::once(lo).chain(params.iter().copied().filter(|&x| x > lo)).collect();
            let mut below = track_pair(model, &down, sel, exp.workers)?;
            let above = track_pair(model, &up, sel, exp.workers)?;
            below.reverse();
            below.pop();
            below.extend(above.into_iter().skip(1));
            (below, sel, Some((lo, hi)))
        }
    };
    let dir = &exp.out_dir;
    let mut out = Vec::new();
    let mut t = Table::new(&[
        "param",
        "re_xi1",
        "im_xi1",
        "re_xi2",
        "im_xi2",
        "abs_xi1",
        "abs_xi2",
        "product_modulus",
        "fallback",
    ]);
    for p in &points {
        t.row(vec![
            p.param.into(),
            p.xi1.re.into(),
            p.xi1.im.into(),
            p.xi2.re.into(),
            p.xi2.im.into(),
            p.xi1.norm().into(),
            p.xi2.norm().into(),
            p.product_modulus.into(),
            p.fallback.into(),
        ]);
    }
    out.push(t.write(dir, "trajectory.csv")?);

    let summary = json!({
        "command": "trajectory",
        "model": model_json(model),
        "sweep": exp.sweep,
        "selection": selection,
        "collision_bracket": collision.map(|(a, b)| [a, b]),
        "max_product_deviation": points.iter().map(|p| (p.product_modulus - 1.0).abs()).fold(0.0, f64::max),
        "max_modulus_deviation": points
            .iter()
            .map(|p| (p.xi1.norm() - 1.0).abs().max((p.xi2.norm() - 1.0).abs()))
            .fold(0.0, f64::max),
        "fallback_steps": points.iter().filter(|p| p.fallback).count(),
    });
    out.push(write_json(dir, "summary.json", &summary)?);

    let circle: Vec<(f64, f64)> = (0..=256)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
            (a.cos(), a.sin())
        })
        .collect();
    let mut chart = Chart::new("Floquet multipliers", "Re xi", "Im xi")
        .add(Series::line("", circle))
        .add(Series::points("xi1", points.iter().map(|p| (p.xi1.re, p.xi1.im)).collect()))
        .add(Series::points("xi2", points.iter().map(|p| (p.xi2.re, p.xi2.im)).collect()));
    chart.equal_aspect = true;
    out.push(write_file(dir, "trajectory.svg", &chart.render())?);
    Ok(out)
}

struct SizeResult {
    sites: usize,
    n_com: usize,
    mean_abs_im: f64,
    /// `(Im E, α)` of the complex states in ascending `Im E`.
    alphas: Vec<(f64, f64)>,
    /// `(Im E, ⟨x⟩)` of every state in ascending `Im E`.
    positions: Vec<(f64, f64)>,
    deviating: Option<f64>,
    /// Cell amplitudes of the most amplified state, scaled to a unit maximum.
    envelope: Vec<f64>,
}

fn scale_free_size(model: &ModelSpec, x: f64, vectors: bool) -> floquet_core::Result<SizeResult> {
    let u = model.floquet_operator(x)?;
    let n = model.sites;
    let m = model.band_dim();
    if !vectors {
        let e = quasienergies(&u, model.period)?;
        let row = scale_free_row(model, x, &e, None)?;
        return Ok(SizeResult {
            sites: n,
            n_com: row.n_com,
            mean_abs_im: row.mean_abs_im,
            alphas: vec![],
            positions: vec![],
            deviating: None,
            envelope: vec![],
        });
    }
    let sys = floquet_eigensystem(&u, model.period)?;
    let e = &sys.quasienergies;
    let row = scale_free_row(model, x, e, Some(&sys.eigvecs))?;
    let mut ims: Vec<f64> = {
        let eps = default_eps_im(e);
        e.iter().map(|z| z.im).filter(|v| v.abs() > eps).collect()
    };
    ims.sort_by(f64::total_cmp);
    let alphas = ims.into_iter().zip(row.alphas.unwrap_or_default()).collect();
    let rec = mean_positions(&sys.eigvecs, e, n, m)?;
    let top = (0..e.len()).max_by(|&a, &b| e[a].im.total_cmp(&e[b].im).then(b.cmp(&a))).unwrap_or(0);
    let col = sys.eigvecs.column(top);
    let cells: Vec<f64> =
        (0..n).map(|j| col[j * m..(j + 1) * m].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let peak = cells.iter().copied().fold(0.0, f64::max);
    Ok(SizeResult {
        sites: n,
        n_com: row.n_com,
        mean_abs_im: row.mean_abs_im,
        alphas,
        deviating: Some(deviating_fraction(&rec, n, POSITION_THRESHOLD)),
        positions: rec.im_parts.into_iter().zip(rec.mean_positions).collect(),
        envelope: cells.iter().map(|c| if peak > 0.0 { c / peak } else { 0.0 }).collect(),
    })
}

pub fn scale_free(exp: &Experiment) -> Written {
    let x = exp.parameter();
    let models: Vec<ModelSpec> = exp.sizes.iter().map(|&n| exp.model.with_sites(n)).collect();
    for m in &models {
        m.validate()?;
    }
    let vectors = exp.wants(Observable::Positions) || exp.wants(Observable::Envelopes);
    let rows = collect(parallel_map(&models, exp.workers, |m| scale_free_size(m, x, vectors)))?;
    let dir = &exp.out_dir;
    let mut out = Vec::new();

    let mut t = Table::new(&["sites", "inv_sites", "n_com", "mean_abs_im"]);
    for r in &rows {
        t.row(vec![r.sites.into(), (1.0 / r.sites as f64).into(), r.n_com.into(), r.mean_abs_im.into()]);
    }
    out.push(t.write(dir, "scale_free.csv")?);
    let ns: Vec<f64> = rows.iter().map(|r| r.sites as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_abs_im).collect();
    let fit = log_log_fit(&ns, &ys)?;

    let mut summary = json!({
        "command": "scale-free",
        "model": model_json(&exp.model),
        "parameter": x,
        "sizes": exp.sizes,
        "log_log_fit": fit,
    });
    if exp.wants(Observable::Positions) {
        let mut t = Table::new(&["sites", "rank", "im_E", "mean_position", "scaled_position"]);
        for r in &rows {
            for (k, (im, pos)) in r.positions.iter().enumerate() {
                t.row(vec![r.sites.into(), k.into(), (*im).into(), (*pos).into(), (pos / r.sites as f64).into()]);
            }
        }
        out.push(t.write(dir, "positions.csv")?);
        summary["position_threshold"] = json!(POSITION_THRESHOLD);
        summary["deviating_fractions"] = json!(rows.iter().map(|r| r.deviating).collect::<Vec<_>>());
        let mut chart = Chart::new("Mean positions", "state rank / dim", "<x>/N");
        for r in &rows {
            let dim = r.positions.len().max(1) as f64;
            let pts = r.positions.iter().enumerate().map(|(k, (_, p))| (k as f64 / dim, p / r.sites as f64)).collect();
            chart = chart.add(Series::points(format!("N = {}", r.sites), pts));
        }
        out.push(write_file(dir, "positions.svg", &chart.render())?);
    }
    if exp.wants(Observable::Envelopes) {
        let mut t = Table::new(&["sites", "cell", "scaled_cell", "amplitude"]);
        let mut chart = Chart::new("Most amplified state", "x/N", "|psi| / max");
        for r in &rows {
            for (j, a) in r.envelope.iter().enumerate() {
                t.row(vec![r.sites.into(), (j + 1).into(), ((j + 1) as f64 / r.sites as f64).into(), (*a).into()]);
            }
            let pts = r.envelope.iter().enumerate().map(|(j, a)| ((j + 1) as f64 / r.sites as f64, *a)).collect();
            chart = chart.add(Series::line(format!("N = {}", r.sites), pts));
        }
        out.push(t.write(dir, "envelopes.csv")?);
        out.push(write_file(dir, "envelopes.svg", &chart.render())?);
        let mut t = Table::new(&["sites", "rank", "im_E", "alpha"]);
        for r in &rows {
            for (k, (im, a)) in r.alphas.iter().enumerate() {
                t.row(vec![r.sites.into(), k.into(), (*im).into(), (*a).into()]);
            }
        }
        out.push(t.write(dir, "alphas.csv")?);
    }
    out.push(write_json(dir, "summary.json", &summary)?);

    let chart = Chart::new("Mean |Im E| against N", "ln N", "ln mean |Im E|")
        .add(Series::points("data", ns.iter().zip(&ys).map(|(n, y)| (n.ln(), y.ln())).collect()))
        .add(Series::line(
            format!("slope {:.4}", fit.slope),
            ns.iter().map(|n| (n.ln(), fit.eval(n.ln()))).collect(),
        ));
    out.push(write_file(dir, "scale_free.svg", &chart.render())?);
    Ok(out)
}

fn gamma_p(model: &ModelSpec, x: f64) -> floquet_core::Result<f64> {
    let p = model.protocol(x)?;
    let hf = extract_hf(&model.floquet_operator(x)?, model.period)?;
    let split = perturbation_split_cells(&hf.h_f, &averaged_hamiltonian(&p), default_cutoff(model.sites), model.band_dim())?;
    Ok(split.gamma_p)
}

pub fn perturbation(exp: &Experiment) -> Written {
    let x = exp.parameter();
    let model = &exp.model;
    let p = model.protocol(x)?;
    let hf = extract_hf(&model.floquet_operator(x)?, model.period)?;
    let cutoff = exp.cutoff.unwrap_or_else(|| default_cutoff(model.sites));
    let split = perturbation_split_cells(&hf.h_f, &averaged_hamiltonian(&p), cutoff, model.band_dim())?;
    let dir = &exp.out_dir;
    let mut out = Vec::new();
    let dim = split.v.dim();

    let truncation: Vec<Value> = (1..=3u8)
        .map(|k| {
            bch_truncated(&p, k).map(|z| json!({"order": k, "frobenius_distance": (&z - &hf.h_f).norm_fro()}))
        })
        .collect::<floquet_core::Result<_>>()?;
    let mut summary = json!({
        "command": "perturbation",
        "model": model_json(model),
        "parameter": x,
        "cutoff": cutoff,
        "gamma_p": split.gamma_p,
        "log_method": hf.method,
        "condition_estimate": hf.condition_estimate,
        "convergence_bound": convergence_bound(&p)?,
        "bch_truncation": truncation,
    });

    if exp.wants(Observable::Heatmap) {
        let mut t = Table::new(&["row", "col", "abs_v"]);
        for i in 0..dim {
            for j in 0..dim {
                t.row(vec![i.into(), j.into(), split.v[(i, j)].norm().into()]);
            }
        }
        out.push(t.write(dir, "heatmap.csv")?);
        // Block maxima of log10 |V| so large matrices stay drawable.
        let block = dim.div_ceil(HEATMAP_PIXELS).max(1);
        let cells = dim.div_ceil(block);
        let floor = -16.0;
        let values: Vec<Vec<f64>> = (0..cells)
            .rev()
            .map(|bi| {
                (0..cells)
                    .map(|bj| {
                        let mut v: f64 = 0.0;
                        for i in bi * block..((bi + 1) * block).min(dim) {
                            for j in bj * block..((bj + 1) * block).min(dim) {
                                v = v.max(split.v[(i, j)].norm());
                            }
                        }
                        if v > 0.0 { v.log10().max(floor) } else { floor }
                    })
                    .collect()
            })
            .collect();
        let map = Heatmap {
            title: "Non-Hermitian correction |V|".into(),
            x_label: "column".into(),
            y_label: "row".into(),
            x_range: (0.0, dim as f64),
            y_ticks: vec![(0, format!("{}", dim)), (cells - 1, "1".into())],
            values,
            value_label: "log10 |V|".into(),
            overlay: vec![],
        };
        out.push(write_file(dir, "heatmap.svg", &map.render())?);
    }
    if exp.wants(Observable::Diagonals) {
        let mut t = Table::new(&["diagonal", "cell", "abs_v"]);
        let mut chart = Chart::new("Diagonal profiles of |V|", "cell", "log10 |V|");
        let mut fits = serde_json::Map::new();
        for (k, (which, name)) in [(Diagonal::Main, "main"), (Diagonal::Secondary, "secondary")].into_iter().enumerate() {
            let profile = boundary_decay_profile(&split, which);
            for &(c, v) in &profile {
                t.row(vec![k.into(), c.into(), v.into()]);
            }
            let fit = match fit_decay(&profile, cutoff) {
                Ok(f) => json!(f),
                Err(Error::InvalidArgument(_) | Error::NonFinite) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            fits.insert(name.into(), fit);
            let pts = profile.iter().map(|&(c, v)| (c as f64, if v > 0.0 { v.log10() } else { f64::NAN })).collect();
            chart = chart.add(Series::line(name, pts));
        }
        out.push(t.write(dir, "diagonals.csv")?);
        out.push(write_file(dir, "diagonals.svg", &chart.render())?);
        summary["decay_fits"] = Value::Object(fits);
    }
    if exp.wants(Observable::Gamma) {
        let sizes = if exp.sizes.is_empty() { vec![model.sites] } else { exp.sizes.clone() };
        let models: Vec<ModelSpec> = sizes.iter().map(|&n| model.with_sites(n)).collect();
        for m in &models {
            m.validate()?;
        }
        let gammas = collect(parallel_map(&models, exp.workers, |m| gamma_p(m, x)))?;
        let mut t = Table::new(&["sites", "cutoff", "gamma_p"]);
        for (n, g) in sizes.iter().zip(&gammas) {
            t.row(vec![(*n).into(), default_cutoff(*n).into(), (*g).into()]);
        }
        out.push(t.write(dir, "gamma.csv")?);
        if sizes.len() >= 2 {
            let ns: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
            let fit = log_log_fit(&ns, &gammas)?;
            summary["gamma_fit"] = json!(fit);
            let chart = Chart::new("Averaged bulk perturbation", "ln N", "ln Gamma_p")
                .add(Series::points("data", ns.iter().zip(&gammas).map(|(n, g)| (n.ln(), g.ln())).collect()))
                .add(Series::line(
                    format!("slope {:.4}", fit.slope),
                    ns.iter().map(|n| (n.ln(), fit.eval(n.ln()))).collect(),
                ));
            out.push(write_file(dir, "gamma.svg", &chart.render())?);
        }
    }
    out.push(write_json(dir, "summary.json", &summary)?);
    Ok(out)
}

pub fn validate_model(exp: &Experiment) -> Written {
    let x = exp.parameter();
    let model = &exp.model;
    let report = audit(&model.ansatz(x), model.sites, model.period, &model.pt_operators())?;
    let checks = [
        ("pt_protocol", report.cond_pt.passed),
        ("pt_floquet", report.cond_pt_floquet.passed),
        ("pbc_hermitian", report.cond_pbc_hermitian.passed),
        ("pbc_commute", report.cond_pbc_commute.passed),
        ("obc_noncommute", report.cond_obc_noncommute.passed),
        ("hopping_inequalities", report.hopping.passed),
    ];
    let mut value = json!({
        "command": "validate-model",
        "model": model_json(model),
        "parameter": x,
        "audit": report,
        "all_passed": report.all_passed(),
    });
    if exp.wants(Observable::Bandwidth) {
        value["bandwidth"] = json!(bandwidth_criterion(model, x, MIN_K_POINTS)?);
    }
    for (name, ok) in checks {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
    }
    Ok(vec![write_json(&exp.out_dir, "report.json", &value)?])
}
