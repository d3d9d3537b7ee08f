//! Extremizing the average entropy over measurement bases on C.
//!
//! The minimum over bases is the entanglement of formation `E_F` of the
//! tripartite state, the maximum its entanglement of assistance `E_A`. Each
//! start runs nonlinear conjugate gradients on the unitary group, with the
//! ET values `S̄₁` as gradient coordinates and steps `U exp(tX)`. When a
//! geodesic step fails, a single-ET exact line search takes over. Several
//! starts are run and the best value is kept.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, CMatrix, HermitianEig, C64};
use crate::measurement::{average_entropy, MeasurementBasis};
use crate::optimality::check_optimality;
use crate::perturbation::{all_directions, apply_et, sbar1, value_and_gradient, EtDirection};
use crate::states::TripartiteState;

/// Step used when probing curvature around a stationary basis.
pub const PROBE_DELTA: f64 = 1e-3;
/// Changes below this count as flat when classifying.
pub const FLAT_TOL: f64 = 1e-10;
/// Residual a basis must meet before [`classify_stationary`] accepts it.
pub const STATIONARY_TOL: f64 = 1e-6;

const LINE_SAMPLES: i32 = 12;
const LINE_ITERS: usize = 60;
/// A geodesic step is accepted once the slope has dropped by this factor.
const LINE_REL_SLOPE: f64 = 1e-3;
const INITIAL_ANGLE: f64 = PI / 16.0;
const MAX_ANGLE: f64 = PI / 2.0;
const GOLDEN_TOL: f64 = 1e-9;
/// Relative loss tolerated when accepting a step that solves the line problem.
const ROUNDING_SLACK: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Min,
    Max,
}

impl Target {
    /// Multiplier turning the target into a minimization.
    fn sign(self) -> f64 {
        match self {
            Target::Min => 1.0,
            Target::Max => -1.0,
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Target::Min => a < b,
            Target::Max => a > b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Minimum,
    Maximum,
    Saddle,
    BoundaryFlat,
}

#[derive(Clone, Debug)]
pub struct OptimizeConfig {
    /// Number of starts: the eigenbasis of `ρ^C` plus `starts - 1` random unitaries.
    pub starts: usize,
    pub max_iter: usize,
    /// Convergence threshold on `max |S̄₁|`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self { starts: 8, max_iter: 2000, tol: 1e-8, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub target: Target,
    pub value: f64,
    pub basis: MeasurementBasis,
    pub iterations: usize,
    pub residual: f64,
    pub classification: Classification,
    pub starts: usize,
    pub per_start_values: Vec<f64>,
    /// False when the best start hit `max_iter` before meeting `tol`.
    pub converged: bool,
}

#[derive(Clone, Debug)]
struct RunOutcome {
    basis: MeasurementBasis,
    value: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Optimizes `S̄` over bases on C for the given target.
pub fn optimize(state: &TripartiteState, target: Target, config: &OptimizeConfig) -> Result<OptimizeResult> {
    optimize_with_starts(state, target, config, &[])
}

/// Like [`optimize`], with additional caller-supplied starting bases run after the default ones.
pub fn optimize_with_starts(
    state: &TripartiteState,
    target: Target,
    config: &OptimizeConfig,
    extra_starts: &[MeasurementBasis],
) -> Result<OptimizeResult> {
    if config.starts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    if !(config.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let dim = state.dims().c;
    if let Some(b) = extra_starts.iter().find(|b| b.dim() != dim) {
        return Err(Error::DimensionMismatch(format!("start basis has dimension {}, part C has {dim}", b.dim())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut bases = Vec::with_capacity(config.starts + extra_starts.len());
    bases.push(MeasurementBasis::eigenbasis(state)?);
    for _ in 1..config.starts {
        bases.push(MeasurementBasis::haar_random(dim, &mut rng));
    }
    bases.extend(extra_starts.iter().cloned());

    let outcomes: Vec<RunOutcome> = bases
        .into_par_iter()
        .map(|start| run_single(state, target, start, config))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate().skip(1) {
        if target.better(o.value, outcomes[best].value) {
            best = k;
        }
    }
    let per_start_values = outcomes.iter().map(|o| o.value).collect();
    let chosen = outcomes[best].clone();
    let classification = probe_curvature(state, &chosen.basis, PROBE_DELTA)?;
    Ok(OptimizeResult {
        target,
        value: chosen.value,
        basis: chosen.basis,
        iterations: chosen.iterations,
        residual: chosen.residual,
        classification,
        starts: outcomes.len(),
        per_start_values,
        converged: chosen.converged,
    })
}

fn run_single(state: &TripartiteState, target: Target, start: MeasurementBasis, config: &OptimizeConfig) -> Result<RunOutcome> {
    let sign = target.sign();
    let dirs = all_directions(start.dim());
    let mut basis = start;
    if dirs.is_empty() {
        let value = average_entropy(state, &basis)?;
        return Ok(RunOutcome { basis, value, iterations: 0, residual: 0.0, converged: true });
    }
    let objective = |b: &MeasurementBasis| -> Result<(f64, Vec<f64>)> {
        let (v, g) = value_and_gradient(state, b)?;
        Ok((sign * v, g.into_iter().map(|x| sign * x).collect()))
    };

    let (mut f, mut grad) = objective(&basis)?;
    let mut search: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut tau = INITIAL_ANGLE;
    let mut since_restart = 0;
    let mut residual;
    let mut converged = false;
    let mut iterations = 0;

    loop {
        residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if residual <= config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        iterations += 1;
        if dot(&search, &grad) >= 0.0 || since_restart >= dirs.len() {
            search = grad.iter().map(|g| -g).collect();
            since_restart = 0;
        }

        match geodesic_search(&objective, &basis, &search, f, &grad, tau)? {
            Some(step) => {
                basis = step.basis;
                tau = step.angle.max(1e-6);
                f = step.f;
                since_restart += 1;
                let next = step.grad;
                // Polak-Ribière, clipped at zero
                let beta = (dot(&next, &next) - dot(&next, &grad)) / dot(&grad, &grad);
                let beta = if beta.is_finite() { beta.max(0.0) } else { 0.0 };
                search = next.iter().zip(&search).map(|(g, d)| -g + beta * d).collect();
                grad = next;
            }
            None => {
                // fall back to the exact line search along the steepest single ET
                let k = (0..grad.len()).max_by(|&a, &b| grad[a].abs().total_cmp(&grad[b].abs())).expect("nonempty");
                let (next, _) = line_search(state, &basis, dirs[k], target, sign * f)?;
                if next.matrix() == basis.matrix() {
                    break;
                }
                basis = next;
                (f, grad) = objective(&basis)?;
                search = grad.iter().map(|g| -g).collect();
                since_restart = 0;
            }
        }
        if iterations % 64 == 0 {
            basis = reorthonormalize(&basis);
            (f, grad) = objective(&basis)?;
        }
    }
    let value = average_entropy(state, &basis)?;
    Ok(RunOutcome { basis, value, iterations, residual, converged })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Anti-Hermitian generator `Σ c_k G_k` where `G_k` generates the k-th ET
/// direction: `d/dε U exp(εG_k)` is the ET of [`apply_et`].
fn generator(dim: usize, coords: &[f64]) -> CMatrix {
    let mut x = CMatrix::zeros(dim, dim);
    for (dir, &c) in all_directions(dim).iter().zip(coords) {
        let z = dir.coupling();
        x[(dir.j, dir.i)] += z * c;
        x[(dir.i, dir.j)] -= z.conj() * c;
    }
    x
}

/// The curve `U exp(tX)`, evaluated through the eigendecomposition of `iX`.
struct Geodesic {
    start: CMatrix,
    eig: HermitianEig,
}

impl Geodesic {
    fn new(basis: &MeasurementBasis, x: &CMatrix) -> Result<Self> {
        let eig = hermitian_eig(&x.scale(C64::new(0.0, 1.0)))?;
        Ok(Self { start: basis.matrix().clone(), eig })
    }

    fn spectral_radius(&self) -> f64 {
        self.eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()))
    }

    fn at(&self, t: f64) -> MeasurementBasis {
        let v = &self.eig.eigenvectors;
        let n = v.rows();
        let phases: Vec<C64> = self.eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
        let vd = CMatrix::from_fn(n, n, |r, c| v[(r, c)] * phases[c]);
        MeasurementBasis::from_trusted(&self.start * &(&vd * &v.adjoint()))
    }
}

struct Step {
    basis: MeasurementBasis,
    f: f64,
    grad: Vec<f64>,
    angle: f64,
}

/// Line search for the minimizer of `f` along `U exp(tX)`, `X` built from
/// `search`. The parameter is the largest rotation angle `τ = t·‖X‖`.
/// Brackets the first sign change of the directional derivative by doubling
/// from `tau0`, then refines it by regula falsi (Illinois variant). Returns
/// `None` when no step improves on the current point.
fn geodesic_search<F>(
    objective: &F,
    basis: &MeasurementBasis,
    search: &[f64],
    f0: f64,
    grad0: &[f64],
    tau0: f64,
) -> Result<Option<Step>>
where
    F: Fn(&MeasurementBasis) -> Result<(f64, Vec<f64>)>,
{
    let geo = Geodesic::new(basis, &generator(basis.dim(), search))?;
    let radius = geo.spectral_radius();
    if !(radius > 0.0) {
        return Ok(None);
    }
    let slack = ROUNDING_SLACK * f0.abs().max(1.0);
    let eval = |tau: f64| -> Result<(Step, f64)> {
        let b = geo.at(tau / radius);
        let (f, grad) = objective(&b)?;
        let d = dot(search, &grad) / radius;
        Ok((Step { basis: b, f, grad, angle: tau }, d))
    };
    let d0 = dot(search, grad0) / radius;
    if !(d0 < 0.0) {
        return Ok(None);
    }

    // [a, b] with f'(a) < 0 and either f'(b) > 0 or f(b) > f(a)
    let (mut a, mut fa, mut da) = (0.0, f0, d0);
    let mut a_step: Option<Step> = None;
    let mut tau = tau0.clamp(1e-12, MAX_ANGLE);
    let (mut b, mut db);
    loop {
        let (step, d) = eval(tau)?;
        if d >= 0.0 || step.f > fa + slack {
            b = tau;
            db = d;
            if d < 0.0 {
                db = f64::NAN;
            }
            break;
        }
        a = tau;
        fa = step.f;
        da = d;
        a_step = Some(step);
        if tau >= MAX_ANGLE {
            return Ok(a_step);
        }
        tau = (2.0 * tau).min(MAX_ANGLE);
    }

    let mut side = 0i8;
    for _ in 0..LINE_ITERS {
        let m = if db.is_nan() {
            0.5 * (a + b)
        } else {
            let m = a - da * (b - a) / (db - da);
            let w = 0.01 * (b - a);
            m.clamp(a + w, b - w)
        };
        let (step, dm) = eval(m)?;
        let stable = step.f <= fa + slack;
        if stable && dm.abs() <= LINE_REL_SLOPE * d0.abs() {
            return Ok(Some(step));
        }
        if dm < 0.0 && stable {
            a = m;
            fa = step.f;
            da = dm;
            a_step = Some(step);
            if side == -1 && !db.is_nan() {
                db *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            db = if dm > 0.0 { dm } else { f64::NAN };
            if side == 1 {
                da *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * b.max(1e-300) {
            break;
        }
    }
    Ok(a_step.filter(|s| s.f <= f0 + slack))
}

/// Best point of `ε ↦ S̄(ET(ε))` over one period `[−π/4, π/4]`: coarse
/// sampling, then a derivative root or golden-section search in the best
/// bracket. Never returns a point worse than `ε = 0` beyond rounding.
fn line_search(
    state: &TripartiteState,
    basis: &MeasurementBasis,
    dir: EtDirection,
    target: Target,
    current: f64,
) -> Result<(MeasurementBasis, f64)> {
    let sign = target.sign();
    let f = |eps: f64| -> Result<f64> { Ok(sign * average_entropy(state, &apply_et(basis, dir, eps)?)?) };
    let df = |eps: f64| -> Result<f64> { Ok(sign * sbar1(state, &apply_et(basis, dir, eps)?, dir)?) };

    let h = FRAC_PI_4 / LINE_SAMPLES as f64;
    let mut best_k = 0;
    let mut best_f = sign * current;
    for k in -LINE_SAMPLES..=LINE_SAMPLES {
        if k == 0 {
            continue;
        }
        let fk = f(k as f64 * h)?;
        if fk < best_f {
            best_f = fk;
            best_k = k;
        }
    }
    let lo = (best_k - 1) as f64 * h;
    let hi = (best_k + 1) as f64 * h;
    let f0 = sign * current;
    let slack = ROUNDING_SLACK * f0.abs().max(1.0);

    // The derivative keeps its sign information where S̄ itself is flat to
    // rounding, so a sign change on the bracket is located by bisection.
    let mut step = None;
    let dlo = df(lo)?;
    if dlo < 0.0 {
        let dhi = df(hi)?;
        if dhi > 0.0 {
            let root = bisect_root(&df, lo, hi, dlo)?;
            let fr = f(root)?;
            if fr <= best_f + slack {
                step = Some((root, fr));
            }
        }
    }
    let (x, fx) = match step {
        Some(s) => s,
        None => {
            let (x, fx) = golden_section_min(&f, lo, hi, GOLDEN_TOL)?;
            if fx < best_f {
                (x, fx)
            } else {
                (best_k as f64 * h, best_f)
            }
        }
    };

    if x != 0.0 && fx <= f0 + slack {
        Ok((apply_et(basis, dir, x)?, sign * fx))
    } else {
        Ok((basis.clone(), current))
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub(crate) fn golden_section_min<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

fn bisect_root<F>(g: &F, mut a: f64, mut b: f64, mut ga: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(m);
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Modified Gram-Schmidt on the columns, removing rounding drift.
fn reorthonormalize(basis: &MeasurementBasis) -> MeasurementBasis {
    let m = basis.matrix();
    let n = m.rows();
    let mut cols: Vec<Vec<_>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v = m.column(c);
        for u in &cols {
            let proj = linalg::inner(u, &v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let nrm = linalg::norm_sqr(&v).sqrt();
        cols.push(v.into_iter().map(|z| z / nrm).collect());
    }
    MeasurementBasis::from_trusted(CMatrix::from_fn(n, n, |r, c| cols[c][r]))
}

/// Evaluates `S̄` at `±delta` along every ET direction and classifies the
/// stationary point from the signs of the changes. Flat directions are ignored.
fn probe_curvature(state: &TripartiteState, basis: &MeasurementBasis, delta: f64) -> Result<Classification> {
    let base = average_entropy(state, basis)?;
    let (mut ups, mut downs) = (0usize, 0usize);
    for dir in all_directions(basis.dim()) {
        for eps in [delta, -delta] {
            let change = average_entropy(state, &apply_et(basis, dir, eps)?)? - base;
            if change > FLAT_TOL {
                ups += 1;
            } else if change < -FLAT_TOL {
                downs += 1;
            }
        }
    }
    Ok(match (ups > 0, downs > 0) {
        (false, false) => Classification::BoundaryFlat,
        (true, false) => Classification::Minimum,
        (false, true) => Classification::Maximum,
        (true, true) => Classification::Saddle,
    })
}

/// Classifies a stationary basis as a local minimum, maximum, saddle, or flat point.
pub fn classify_stationary(state: &TripartiteState, basis: &MeasurementBasis, delta: f64) -> Result<Classification> {
    let report = check_optimality(state, basis, STATIONARY_TOL)?;
    if !report.stationary {
        return Err(Error::NotStationary { residual: report.worst_residual });
    }
    probe_curvature(state, basis, delta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitExtrema {
    pub min: f64,
    pub max: f64,
    /// `(θ, φ)` of the minimum.
    pub argmin: (f64, f64),
    pub argmax: (f64, f64),
}

/// Extrema of `S̄` over Bloch bases on a qubit C by exhaustive `grid_n × grid_n`
/// sampling, refined by alternating golden-section searches in θ and φ.
pub fn brute_force_qubit(state: &TripartiteState, grid_n: usize) -> Result<QubitExtrema> {
    if state.dims().c != 2 {
        return Err(Error::DimensionMismatch(format!(
            "brute force over Bloch bases needs a qubit C, got dimension {}",
            state.dims().c
        )));
    }
    if grid_n < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points per axis".into()));
    }
    let dtheta = PI / (grid_n - 1) as f64;
    let dphi = 2.0 * PI / grid_n as f64;
    let grid: Vec<(f64, f64)> = (0..grid_n)
        .flat_map(|t| (0..grid_n).map(move |p| (t as f64 * dtheta, p as f64 * dphi)))
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&(t, p)| average_entropy(state, &MeasurementBasis::bloch(t, p)))
        .collect::<Result<_>>()?;

    let pick = |better: fn(f64, f64) -> bool| {
        let mut k = 0;
        for (i, &v) in values.iter().enumerate() {
            if better(v, values[k]) {
                k = i;
            }
        }
        k
    };
    let kmin = pick(|a, b| a < b);
    let kmax = pick(|a, b| a > b);
    let (argmin, min) = refine_bloch(state, grid[kmin], values[kmin], dtheta, dphi, 1.0)?;
    let (argmax, max) = refine_bloch(state, grid[kmax], values[kmax], dtheta, dphi, -1.0)?;
    Ok(QubitExtrema { min, max, argmin, argmax })
}

fn refine_bloch(
    state: &TripartiteState,
    (mut theta, mut phi): (f64, f64),
    start: f64,
    dtheta: f64,
    dphi: f64,
    sign: f64,
) -> Result<((f64, f64), f64)> {
    let eval = |t: f64, p: f64| -> Result<f64> { Ok(sign * average_entropy(state, &MeasurementBasis::bloch(t, p))?) };
    let mut best = sign * start;
    for _ in 0..200 {
        let before = best;
        let (t, ft) = golden_section_min(&|t| eval(t, phi), (theta - dtheta).max(0.0), (theta + dtheta).min(PI), 1e-12)?;
        if ft < best {
            theta = t;
            best = ft;
        }
        let (p, fp) = golden_section_min(&|p| eval(theta, p), phi - dphi, phi + dphi, 1e-12)?;
        if fp < best {
            phi = p.rem_euclid(2.0 * PI);
            best = fp;
        }
        if before - best <= 1e-15 {
            break;
        }
    }
    Ok(((theta, phi), sign * best))
}
