//! Spectral observables: complex fraction, thresholds, exceptional points,
//! trajectories, bandwidths and localisation.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, log_log_fit, LinearFit};
use crate::floquet::{floquet_eigensystem, quasienergies, FloquetEigensystem};
use crate::lattice::{bloch_hamiltonian, MultiBandSpec};
use crate::linalg::{eig_general, eigenvalues, quasienergy_from_eigenvalue, ComplexMatrix, Tolerances, C64};
use crate::models::ModelSpec;
use crate::sweep::parallel_map;

/// `1e−8 · max(1, max|E|)`.
pub fn default_eps_im(e: &[C64]) -> f64 {
    1e-8 * e.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub n_com: usize,
    pub p_com: f64,
    pub max_abs_im: f64,
    pub eps_im: f64,
}

/// Counts quasienergies with `|Im E| > eps_im`.
pub fn classify_spectrum(e: &[C64], eps_im: f64) -> Result<Classification> {
    if !(eps_im > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_im must be positive, got {eps_im}")));
    }
    let n_com = e.iter().filter(|z| z.im.abs() > eps_im).count();
    Ok(Classification {
        n_com,
        p_com: if e.is_empty() { 0.0 } else { n_com as f64 / e.len() as f64 },
        max_abs_im: e.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
        eps_im,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub param: f64,
    /// Sorted by real part, then imaginary part.
    pub quasienergies: Vec<C64>,
    pub p_com: f64,
    pub n_com: usize,
    pub max_abs_im: f64,
}

/// Quasienergies of `model` at parameter `x`, classified with the default
/// threshold.
pub fn spectrum_record(model: &ModelSpec, x: f64) -> Result<SpectrumRecord> {
    let e = quasienergies(&model.floquet_operator(x)?, model.period)?;
    let c = classify_spectrum(&e, default_eps_im(&e))?;
    Ok(SpectrumRecord { param: x, quasienergies: e, p_com: c.p_com, n_com: c.n_com, max_abs_im: c.max_abs_im })
}

pub fn spectrum_sweep(model: &ModelSpec, params: &[f64], workers: usize) -> Result<Vec<SpectrumRecord>> {
    parallel_map(params, workers, |x| spectrum_record(model, *x)).into_iter().collect()
}

/// Eigenbasis shared by all blocks of `ansatz`, as `(V, V⁻¹)`, when a
/// generic combination of the blocks has a simple, well-conditioned spectrum.
fn common_eigenbasis(ansatz: &MultiBandSpec) -> Option<(ComplexMatrix, ComplexMatrix)> {
    let m = ansatz.band_dim();
    let blocks = [&ansatz.a1, &ansatz.a2]
        .into_iter()
        .chain(&ansatz.x1)
        .chain(&ansatz.x2)
        .chain(&ansatz.y1)
        .chain(&ansatz.y2);
    let mut comb = ComplexMatrix::zeros(m);
    for (k, b) in blocks.enumerate() {
        comb += &b.scale_real(1.0 / (k as f64 + SQRT_2));
    }
    let d = eig_general(&comb).ok()?;
    let scale = comb.norm_fro().max(f64::MIN_POSITIVE);
    let simple = (0..m).all(|i| (i + 1..m).all(|j| (d.eigenvalues[i] - d.eigenvalues[j]).norm() > 1e-8 * scale));
    if !simple || !(d.condition_estimate < 1e8) {
        return None;
    }
    let inv = d.vectors_inverse?;
    Some((d.vectors, inv))
}

/// Floquet multipliers grouped by band sector. When the blocks commute,
/// `U_F` is block diagonal in their common eigenbasis and levels of
/// different sectors cross without interacting, so they are kept apart;
/// otherwise there is a single sector.
fn sector_multipliers(model: &ModelSpec, x: f64) -> Result<Vec<Vec<C64>>> {
    let u = model.floquet_operator(x)?;
    let m = model.band_dim();
    if m > 1 && model.bands_decouple_at(x) {
        if let Some((v, w)) = common_eigenbasis(&model.ansatz(x)) {
            let n = model.sites;
            return (0..m)
                .map(|b| {
                    let ub = ComplexMatrix::from_fn(n, |i, j| {
                        let mut s = C64::new(0.0, 0.0);
                        for a in 0..m {
                            for c in 0..m {
                                s += w[(b, a)] * u[(i * m + a, j * m + c)] * v[(c, b)];
                            }
                        }
                        s
                    });
                    eigenvalues(&ub)
                })
                .collect();
        }
    }
    Ok(vec![eigenvalues(&u)?])
}

fn sectors_broken(model: &ModelSpec, sectors: &[Vec<C64>]) -> bool {
    let tol = Tolerances::default();
    let e: Vec<C64> = sectors
        .iter()
        .flatten()
        .map(|xi| quasienergy_from_eigenvalue(*xi, model.period, &tol).0)
        .collect();
    let eps = default_eps_im(&e);
    e.iter().any(|z| z.im.abs() > eps)
}

fn is_broken(model: &ModelSpec, x: f64) -> Result<bool> {
    Ok(sectors_broken(model, &sector_multipliers(model, x)?))
}

/// Controls for the first-exceptional-point search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    /// Final bracket width.
    pub width: f64,
    /// Largest parameter step while marching.
    pub max_step: f64,
    /// Finite-difference step for level velocities.
    pub probe: f64,
    /// Predicted collision distance below which the far side is probed.
    pub collision_tol: f64,
    /// Gaps closing slower than this (radians per unit parameter) are
    /// treated as static degeneracies.
    pub min_speed: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { width: 1e-9, max_step: 0.02, probe: 1e-7, collision_tol: 1e-6, min_speed: 1e-5 }
    }
}

/// Smallest predicted distance to a collision of neighbouring Floquet
/// multipliers on the unit circle, from the angular gaps at `x` and `x + h`,
/// with the index of the closing gap.
fn predicted_collision(a: &[C64], b: &[C64], h: f64, min_speed: f64) -> (f64, usize) {
    let gaps = |v: &[C64]| -> Vec<f64> {
        let mut th: Vec<f64> = v.iter().map(|z| z.arg()).collect();
        th.sort_by(f64::total_cmp);
        let n = th.len();
        (0..n)
            .map(|i| if i + 1 < n { th[i + 1] - th[i] } else { th[0] + 2.0 * PI - th[n - 1] })
            .collect()
    };
    let (g0, g1) = (gaps(a), gaps(b));
    let mut best = (f64::INFINITY, 0);
    for (i, (p, q)) in g0.iter().zip(&g1).enumerate() {
        let speed = (p - q) / h;
        if speed > min_speed && p / speed < best.0 {
            best = (p / speed, i);
        }
    }
    best
}

/// Brackets the first parameter in `(lo, hi]` where complex quasienergies
/// appear. The onset indicator is not monotone (an exceptional point can
/// open a narrow broken window and close again), so instead of bisecting
/// the whole bracket the search marches upward, stepping by a fraction of
/// the predicted distance to the next level collision and probing just past
/// each predicted collision. The fraction is large while successive
/// predictions agree with a linear closing and small otherwise, since gaps
/// near an exceptional point close like a square root. Returns
/// `(last unbroken, first broken)`.
pub fn first_ep_bracket(model: &ModelSpec, bracket: (f64, f64), opts: &ThresholdOptions) -> Result<(f64, f64)> {
    let (lo, hi) = bracket;
    if !(lo < hi) || is_broken(model, lo)? || !is_broken(model, hi)? {
        return Err(Error::BracketNotStraddling { lo, hi });
    }
    let mut x = lo;
    let mut s0 = sector_multipliers(model, x)?;
    // Prediction, closing gap and step taken at the previous point.
    let mut last: Option<(f64, (usize, usize), f64)> = None;
    let broken_at = loop {
        let s1 = sector_multipliers(model, x + opts.probe)?;
        let (pred, gap) = s0
            .iter()
            .zip(&s1)
            .enumerate()
            .map(|(k, (a, b))| {
                let (p, i) = predicted_collision(a, b, opts.probe, opts.min_speed);
                (p, (k, i))
            })
            .fold((f64::INFINITY, (0, 0)), |acc, v| if v.0 < acc.0 { v } else { acc });
        let linear = last.is_some_and(|(p, g, st)| g == gap && (p - st - pred).abs() <= 0.2 * pred);
        let step = if pred <= opts.collision_tol {
            (2.5 * pred).max(opts.probe)
        } else {
            (if linear { 0.9 } else { 0.4 } * pred).min(opts.max_step)
        };
        let next = x + step;
        if next >= hi {
            break hi;
        }
        let s_next = sector_multipliers(model, next)?;
        if sectors_broken(model, &s_next) {
            break next;
        }
        last = Some((pred, gap, step));
        x = next;
        s0 = s_next;
    };
    let (mut a, mut b) = (x, broken_at);
    while b - a > opts.width {
        let mid = 0.5 * (a + b);
        if is_broken(model, mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok((a, b))
}

/// Onset of PT breaking, the midpoint of the final first-onset bracket.
pub fn threshold_lambda_c(model: &ModelSpec, bracket: (f64, f64)) -> Result<f64> {
    let (a, b) = first_ep_bracket(model, bracket, &ThresholdOptions::default())?;
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EPRecord {
    pub lambda_ep: f64,
    /// Positions of the new conjugate pair in the first broken record.
    pub pair: (usize, usize),
    pub fit_exponent: f64,
    pub fit_prefactor: f64,
    /// Root-mean-square relative deviation of the fitted law.
    pub fit_residual: f64,
    pub window: (f64, f64),
}

/// `|Im E|` of the newest complex pair: the smallest imaginary part above
/// the threshold, which is the pair closest to its onset.
fn newest_pair(r: &SpectrumRecord) -> Option<(usize, usize, f64)> {
    let eps = default_eps_im(&r.quasienergies);
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in r.quasienergies.iter().enumerate() {
        if z.im > eps && best.map_or(true, |(_, v)| z.im < v) {
            best = Some((i, z.im));
        }
    }
    let (i, v) = best?;
    let target = r.quasienergies[i].conj();
    let j = r
        .quasienergies
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .min_by(|p, q| (p.1 - target).norm().total_cmp(&(q.1 - target).norm()))?
        .0;
    Some((i.min(j), i.max(j), v))
}

fn fit_at(lambda_ep: f64, xs: &[f64], ys: &[f64]) -> Option<(LinearFit, f64)> {
    let d: Vec<f64> = xs.iter().map(|x| x - lambda_ep).collect();
    let f = log_log_fit(&d, ys).ok()?;
    let c = f.intercept.exp();
    let rel = (d.iter().zip(ys).map(|(a, y)| ((y - c * a.powf(f.slope)) / y).powi(2)).sum::<f64>() / ys.len() as f64)
        .sqrt();
    Some((f, rel))
}

/// Finds onsets of complex pairs in a parameter-sorted sweep and fits
/// `Im E = c (λ − λ_EP)^e` on the broken side. For each onset between
/// records `i−1` and `i` the fit uses the broken records up to `10δ` past
/// the onset (`δ` the local step), with `λ_EP` chosen in `[λ_{i−1}, λ_i)` to
/// minimise the residual. Onsets with fewer than three usable points are
/// skipped.
pub fn detect_eps(sweep: &[SpectrumRecord]) -> Vec<EPRecord> {
    let mut out = Vec::new();
    for i in 1..sweep.len() {
        if sweep[i].n_com <= sweep[i - 1].n_com {
            continue;
        }
        let (x0, x1) = (sweep[i - 1].param, sweep[i].param);
        let delta = x1 - x0;
        let Some((p, q, _)) = newest_pair(&sweep[i]) else { continue };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for r in &sweep[i..] {
            if r.param > x0 + 11.0 * delta * (1.0 + 1e-9) {
                break;
            }
            match newest_pair(r) {
                Some((_, _, v)) if r.n_com >= sweep[i].n_com => {
                    xs.push(r.param);
                    ys.push(v);
                }
                _ => break,
            }
        }
        if xs.len() < 3 {
            continue;
        }
        // Golden-section search for λ_EP in [x0, x1).
        let objective = |l: f64| fit_at(l, &xs, &ys).map_or(f64::INFINITY, |(_, r)| r);
        let (mut a, mut b) = (x0, x1 - 1e-3 * delta);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
        let (mut fc, mut fd) = (objective(c), objective(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = objective(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = objective(d);
            }
        }
        let l = 0.5 * (a + b);
        if let Some((f, rel)) = fit_at(l, &xs, &ys) {
            out.push(EPRecord {
                lambda_ep: l,
                pair: (p, q),
                fit_exponent: f.slope,
                fit_prefactor: f.intercept.exp(),
                fit_residual: rel,
                window: (xs[0], xs[xs.len() - 1]),
            });
        }
    }
    out
}

/// Locates the first exceptional point in `bracket` to well below `delta`,
/// then fits the bifurcation on a sweep of step `delta` across it.
pub fn locate_first_ep(model: &ModelSpec, bracket: (f64, f64), delta: f64, workers: usize) -> Result<EPRecord> {
    let opts = ThresholdOptions { width: delta * 1e-3, ..ThresholdOptions::default() };
    let (lo, _) = first_ep_bracket(model, bracket, &opts)?;
    let params: Vec<f64> = (-2..=10).map(|k| lo + k as f64 * delta).collect();
    let sweep = spectrum_sweep(model, &params, workers)?;
    detect_eps(&sweep).into_iter().next().ok_or(Error::NoExceptionalPoint)
}

/// How the tracked pair is chosen at the first grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSelection {
    /// Positions in the quasienergy-sorted spectrum.
    Indices(usize, usize),
    /// The two multipliers closest to this point.
    NearestTo { re: f64, im: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub param: f64,
    pub xi1: C64,
    pub xi2: C64,
    /// `|ξ₁ ξ₂|`.
    pub product_modulus: f64,
    /// True when overlap matching was ambiguous and the nearest eigenvalue
    /// decided.
    pub fallback: bool,
}

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

/// Follows one pair of Floquet multipliers along `params` by maximal
/// eigenvector overlap, falling back to the nearest eigenvalue when both
/// tracked states would claim the same eigenvector.
pub fn trajectory(
    model: &ModelSpec,
    params: &[f64],
    selection: PairSelection,
    workers: usize,
) -> Result<Vec<TrajectoryPoint>> {
    let systems: Vec<FloquetEigensystem> = parallel_map(params, workers, |x| {
        floquet_eigensystem(&model.floquet_operator(*x)?, model.period)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let Some(first) = systems.first() else { return Ok(vec![]) };
    let n = first.floquet_eigs.len();
    let (i0, j0) = match selection {
        PairSelection::Indices(i, j) => {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidArgument(format!("pair ({i}, {j}) is not valid for {n} states")));
            }
            (i, j)
        }
        PairSelection::NearestTo { re, im } => {
            let t = C64::new(re, im);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| (first.floquet_eigs[a] - t).norm().total_cmp(&(first.floquet_eigs[b] - t).norm()));
            if n < 2 {
                return Err(Error::InvalidArgument("need at least two states".into()));
            }
            (idx[0], idx[1])
        }
    };
    let mut track = [first.eigvecs.column(i0), first.eigvecs.column(j0)];
    let mut xi = [first.floquet_eigs[i0], first.floquet_eigs[j0]];
    let mut out = Vec::with_capacity(params.len());
    for (k, s) in systems.iter().enumerate() {
        let mut fallback = false;
        if k > 0 {
            let cols: Vec<Vec<C64>> = (0..n).map(|c| s.eigvecs.column(c)).collect();
            let best = |v: &[C64]| -> usize {
                (0..n).max_by(|&a, &b| overlap(v, &cols[a]).total_cmp(&overlap(v, &cols[b]))).unwrap()
            };
            let (mut a, mut b) = (best(&track[0]), best(&track[1]));
            if a == b {
                fallback = true;
                let nearest = |z: C64, skip: Option<usize>| -> usize {
                    (0..n)
                        .filter(|c| Some(*c) != skip)
                        .min_by(|&p, &q| (s.floquet_eigs[p] - z).norm().total_cmp(&(s.floquet_eigs[q] - z).norm()))
                        .unwrap()
                };
                a = nearest(xi[0], None);
                b = nearest(xi[1], Some(a));
            }
            track = [cols[a].clone(), cols[b].clone()];
            xi = [s.floquet_eigs[a], s.floquet_eigs[b]];
        }
        out.push(TrajectoryPoint {
            param: params[k],
            xi1: xi[0],
            xi2: xi[1],
            product_modulus: (xi[0] * xi[1]).norm(),
            fallback,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    pub param: f64,
    /// `max_k − min_k` of each band of the periodic Floquet Hamiltonian.
    pub band_widths: Vec<f64>,
    pub total_width: f64,
    /// Single-band width when the bands decouple, otherwise the total.
    pub relevant_width: f64,
    pub single_band: bool,
    /// `relevant_width ≥ 2π/T`.
    pub predicted_critical: bool,
}

pub const MIN_K_POINTS: usize = 512;

/// Bands of `H_F(k) = Σ_s h_s(k) Δτ_s / T` on a uniform grid of `k_points`
/// momenta; exact on the ring because the Bloch Hamiltonians commute.
pub fn bandwidth_criterion(model: &ModelSpec, x: f64, k_points: usize) -> Result<BandwidthReport> {
    if k_points < MIN_K_POINTS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_K_POINTS} k points, got {k_points}")));
    }
    let ansatz = model.ansatz(x);
    let m = ansatz.band_dim();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for q in 0..k_points {
        let k = -PI + 2.0 * PI * q as f64 / k_points as f64;
        let h: ComplexMatrix = (&bloch_hamiltonian(&ansatz, 1, k) + &bloch_hamiltonian(&ansatz, 2, k)).scale_real(0.5);
        let mut e: Vec<f64> = eigenvalues(&h)?.into_iter().map(|z| z.re).collect();
        e.sort_by(f64::total_cmp);
        for (b, v) in e.into_iter().enumerate() {
            lo[b] = lo[b].min(v);
            hi[b] = hi[b].max(v);
        }
    }
    let band_widths: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
    let total_width = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max) - lo.iter().copied().fold(f64::INFINITY, f64::min);
    let single_band = model.bands_decouple();
    let relevant_width = if single_band {
        band_widths.iter().copied().fold(0.0, f64::max)
    } else {
        total_width
    };
    Ok(BandwidthReport {
        param: x,
        band_widths,
        total_width,
        relevant_width,
        single_band,
        predicted_critical: relevant_width >= 2.0 * PI / model.period,
    })
}

/// Parameter at which the relevant bandwidth reaches `2π/T`, by bisection.
pub fn bandwidth_critical_parameter(model: &ModelSpec, bracket: (f64, f64), k_points: usize) -> Result<f64> {
    let (mut a, mut b) = bracket;
    let crit = |x: f64| -> Result<bool> { Ok(bandwidth_criterion(model, x, k_points)?.predicted_critical) };
    if crit(a)? || !crit(b)? {
        return Err(Error::BracketNotStraddling { lo: a, hi: b });
    }
    while b - a > 1e-10 * b.abs().max(1.0) {
        let mid = 0.5 * (a + b);
        if crit(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    /// `⟨x⟩_n` in cell units (1 to N), sorted by ascending `Im E`.
    pub mean_positions: Vec<f64>,
    /// `Im E` in the same order.
    pub im_parts: Vec<f64>,
    /// Original state index of each entry.
    pub order: Vec<usize>,
}

/// `⟨x⟩_n = Σ_j j w_j / Σ_j w_j` with `w_j` the weight of cell `j` (bands
/// summed), states ordered by `Im E`.
pub fn mean_positions(eigvecs: &ComplexMatrix, quasienergies: &[C64], sites: usize, band_dim: usize) -> Result<LocalizationRecord> {
    if eigvecs.dim() != sites * band_dim || quasienergies.len() != eigvecs.dim() {
        return Err(Error::DimensionMismatch { expected: sites * band_dim, found: eigvecs.dim() });
    }
    let n = eigvecs.dim();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for r in 0..n {
        let cell = (r / band_dim + 1) as f64;
        for (c, z) in eigvecs.row(r).iter().enumerate() {
            let w = z.norm_sqr();
            num[c] += cell * w;
            den[c] += w;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| quasienergies[a].im.total_cmp(&quasienergies[b].im).then(a.cmp(&b)));
    Ok(LocalizationRecord {
        mean_positions: order.iter().map(|&c| num[c] / den[c]).collect(),
        im_parts: order.iter().map(|&c| quasienergies[c].im).collect(),
        order,
    })
}

/// Fraction of states with `|⟨x⟩/N − 1/2| > threshold`.
pub fn deviating_fraction(record: &LocalizationRecord, sites: usize, threshold: f64) -> f64 {
    let k = record
        .mean_positions
        .iter()
        .filter(|x| (*x / sites as f64 - 0.5).abs() > threshold)
        .count();
    k as f64 / record.mean_positions.len().max(1) as f64
}

/// Envelope exponent `α` of `|ψ(x)| ∝ e^{αx/N}`: a line fit of the log of a
/// moving RMS of the cell amplitudes over the middle half of the chain. The
/// window spans `N/8` cells, which averages out standing-wave nodes.
pub fn envelope_exponent(state: &[C64], sites: usize, band_dim: usize) -> Result<f64> {
    if state.len() != sites * band_dim {
        return Err(Error::DimensionMismatch { expected: sites * band_dim, found: state.len() });
    }
    let w: Vec<f64> = (0..sites)
        .map(|j| state[j * band_dim..(j + 1) * band_dim].iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let half = (sites / 16).max(1);
    let (start, end) = (sites / 4, sites - sites / 4);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in start..end {
        let a = j.saturating_sub(half);
        let b = (j + half + 1).min(sites);
        let ms = w[a..b].iter().sum::<f64>() / (b - a) as f64;
        if ms > 0.0 {
            xs.push((j + 1) as f64 / sites as f64);
            ys.push(0.5 * ms.ln());
        }
    }
    Ok(linear_fit(&xs, &ys)?.slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFreeSize {
    pub sites: usize,
    pub n_com: usize,
    /// Mean `|Im E|` over the complex states.
    pub mean_abs_im: f64,
    /// Envelope exponents of the complex states in ascending `Im E`, when
    /// requested.
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFreeReport {
    pub param: f64,
    pub sizes: Vec<ScaleFreeSize>,
    /// Log-log fit of mean `|Im E|` against `N`.
    pub fit: LinearFit,
}

fn scale_free_size(model: &ModelSpec, x: f64, with_alpha: bool) -> Result<ScaleFreeSize> {
    let u = model.floquet_operator(x)?;
    if with_alpha {
        let s = floquet_eigensystem(&u, model.period)?;
        scale_free_row(model, x, &s.quasienergies, Some(&s.eigvecs))
    } else {
        scale_free_row(model, x, &quasienergies(&u, model.period)?, None)
    }
}

/// One row of the scale-free table from an already computed spectrum; the
/// envelope exponents are filled in when eigenvectors are given.
pub fn scale_free_row(model: &ModelSpec, x: f64, e: &[C64], vecs: Option<&ComplexMatrix>) -> Result<ScaleFreeSize> {
    let eps = default_eps_im(e);
    let complex: Vec<usize> = (0..e.len()).filter(|&i| e[i].im.abs() > eps).collect();
    if complex.is_empty() {
        return Err(Error::NoComplexStates { param: x });
    }
    let mean_abs_im = complex.iter().map(|&i| e[i].im.abs()).sum::<f64>() / complex.len() as f64;
    let alphas = match vecs {
        Some(v) => {
            let mut idx = complex.clone();
            idx.sort_by(|&a, &b| e[a].im.total_cmp(&e[b].im));
            Some(
                idx.iter()
                    .map(|&i| envelope_exponent(&v.column(i), model.sites, model.band_dim()))
                    .collect::<Result<_>>()?,
            )
        }
        None => None,
    };
    Ok(ScaleFreeSize { sites: model.sites, n_com: complex.len(), mean_abs_im, alphas })
}

/// Mean `|Im E|` of the complex states across chain lengths and its
/// log-log slope against `N`.
pub fn scale_free_fits(
    model: &ModelSpec,
    x: f64,
    sizes: &[usize],
    with_alpha: bool,
    workers: usize,
) -> Result<ScaleFreeReport> {
    if sizes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two chain lengths".into()));
    }
    let models: Vec<ModelSpec> = sizes.iter().map(|&n| model.with_sites(n)).collect();
    for m in &models {
        m.validate()?;
    }
    let rows: Vec<ScaleFreeSize> = parallel_map(&models, workers, |m| scale_free_size(m, x, with_alpha))
        .into_iter()
        .collect::<Result<_>>()?;
    let n: Vec<f64> = rows.iter().map(|r| r.sites as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean_abs_im).collect();
    let fit = log_log_fit(&n, &y)?;
    Ok(ScaleFreeReport { param: x, sizes: rows, fit })
}
