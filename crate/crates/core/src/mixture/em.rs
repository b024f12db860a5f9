//! Expectation-maximisation for full-covariance 2D mixtures.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GaussianComponent, GmmModel, MixtureError, Point, Result, SymMat2};
use crate::seed;

pub const MAX_EM_ITERATIONS: usize = 200;
/// Stop once the relative log-likelihood gain drops below this.
pub const EM_TOLERANCE: f64 = 1e-6;
const REG_SCALE: f64 = 1e-4;
const REG_VARIANCE_FLOOR: f64 = 1e-4;
/// Components whose responsibility mass falls below `EMPTY_MASS * n` are
/// re-seeded.
const EMPTY_MASS: f64 = 1e-10;

/// Per-fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Log-likelihood at the initial parameters, then after every M-step.
    pub log_likelihoods: Vec<f64>,
    /// Iterations (indices into `log_likelihoods`) whose M-step re-seeded an
    /// empty component. The likelihood may drop across those steps.
    pub reseeded: Vec<usize>,
    /// Floor applied to covariance eigenvalues on every M-step.
    pub regularization: f64,
}

fn mean(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (r, c) = points
        .iter()
        .fold((0.0, 0.0), |(r, c), p| (r + p[0], c + p[1]));
    [r / n, c / n]
}

fn covariance(points: &[Point], mu: Point) -> SymMat2 {
    let n = points.len() as f64;
    let mut cov = SymMat2::new(0.0, 0.0, 0.0);
    for p in points {
        let d = [p[0] - mu[0], p[1] - mu[1]];
        cov.xx += d[0] * d[0];
        cov.xy += d[0] * d[1];
        cov.yy += d[1] * d[1];
    }
    SymMat2::new(cov.xx / n, cov.xy / n, cov.yy / n)
}

/// Eigenvalue floor for every covariance estimate on `points`:
/// `1e-4 * max(mean per-axis variance, 1e-4)`.
pub fn regularization(points: &[Point]) -> f64 {
    if points.is_empty() {
        return REG_SCALE * REG_VARIANCE_FLOOR;
    }
    let pooled = covariance(points, mean(points));
    REG_SCALE * (0.5 * pooled.trace()).max(REG_VARIANCE_FLOOR)
}

fn squared_distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// k-means++ seeding: first centre uniform, later ones proportional to the
/// squared distance to the nearest chosen centre.
fn seed_means(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut means = vec![points[rng.gen_range(0..points.len())]];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|&p| squared_distance(p, means[0]))
        .collect();
    while means.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(points.len() - 1)
        } else {
            rng.gen_range(0..points.len())
        };
        let centre = points[pick];
        for (d, &p) in nearest.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, centre));
        }
        means.push(centre);
    }
    means
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Fills `resp` (row-major, n x k) and returns the total and per-point
/// log-likelihoods.
fn e_step(
    points: &[Point],
    components: &[GaussianComponent],
    resp: &mut [f64],
    point_ll: &mut [f64],
) -> f64 {
    let k = components.len();
    let mut total = 0.0;
    for (i, &p) in points.iter().enumerate() {
        let row = &mut resp[i * k..(i + 1) * k];
        for (r, c) in row.iter_mut().zip(components) {
            *r = c.weight.ln() + c.log_density(p);
        }
        let lse = log_sum_exp(row);
        for r in row.iter_mut() {
            *r = (*r - lse).exp();
        }
        point_ll[i] = lse;
        total += lse;
    }
    total
}

/// Returns whether any component had to be re-seeded.
fn m_step(
    points: &[Point],
    resp: &[f64],
    point_ll: &[f64],
    pooled: SymMat2,
    reg: f64,
    components: &mut [GaussianComponent],
) -> bool {
    let n = points.len();
    let k = components.len();
    let mut reseeded = false;
    for (j, comp) in components.iter_mut().enumerate() {
        let mass: f64 = (0..n).map(|i| resp[i * k + j]).sum();
        if mass < EMPTY_MASS * n as f64 {
            let worst =
                point_ll.iter().enumerate().fold(
                    0,
                    |best, (i, &ll)| if ll < point_ll[best] { i } else { best },
                );
            comp.mean = points[worst];
            comp.covariance = pooled;
            comp.weight = 1.0 / n as f64;
            reseeded = true;
            continue;
        }
        let mut mu = [0.0, 0.0];
        for (i, p) in points.iter().enumerate() {
            let r = resp[i * k + j];
            mu[0] += r * p[0];
            mu[1] += r * p[1];
        }
        mu = [mu[0] / mass, mu[1] / mass];
        let mut cov = SymMat2::new(0.0, 0.0, 0.0);
        for (i, p) in points.iter().enumerate() {
            let r = resp[i * k + j];
            let d = [p[0] - mu[0], p[1] - mu[1]];
            cov.xx += r * d[0] * d[0];
            cov.xy += r * d[0] * d[1];
            cov.yy += r * d[1] * d[1];
        }
        comp.mean = mu;
        // Clamping (rather than adding to the diagonal) keeps the update the
        // exact constrained maximiser, so the likelihood cannot fall.
        comp.covariance =
            SymMat2::new(cov.xx / mass, cov.xy / mass, cov.yy / mass).clamp_eigenvalues(reg);
        comp.weight = mass / n as f64;
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in components.iter_mut() {
        c.weight /= total;
    }
    reseeded
}

/// Fits a `k`-component mixture to `points`, returning per-iteration
/// diagnostics alongside the model.
pub fn fit_gmm_traced(points: &[Point], k: usize, seed: u64) -> Result<(GmmModel, FitTrace)> {
    if k == 0 {
        return Err(MixtureError::ZeroComponents);
    }
    if points.len() < k {
        return Err(MixtureError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let n = points.len();
    let mut rng = seed::rng(seed);
    let reg = regularization(points);
    let pooled = covariance(points, mean(points)).clamp_eigenvalues(reg);

    let mut components: Vec<GaussianComponent> = seed_means(points, k, &mut rng)
        .into_iter()
        .map(|mean| GaussianComponent {
            weight: 1.0 / k as f64,
            mean,
            covariance: pooled,
        })
        .collect();

    let mut resp = vec![0.0; n * k];
    let mut point_ll = vec![0.0; n];
    let mut ll = e_step(points, &components, &mut resp, &mut point_ll);
    let mut trace = FitTrace {
        log_likelihoods: vec![ll],
        reseeded: Vec::new(),
        regularization: reg,
    };

    for iter in 1..=MAX_EM_ITERATIONS {
        let reseeded = m_step(points, &resp, &point_ll, pooled, reg, &mut components);
        let next = e_step(points, &components, &mut resp, &mut point_ll);
        trace.log_likelihoods.push(next);
        let gain = next - ll;
        ll = next;
        if reseeded {
            trace.reseeded.push(iter);
            continue;
        }
        if gain < EM_TOLERANCE * ll.abs() {
            break;
        }
    }

    Ok((
        GmmModel {
            components,
            log_likelihood: ll,
            n_points: n,
        },
        trace,
    ))
}

/// Fits a `k`-component mixture to `points`; deterministic for a given seed.
pub fn fit_gmm(points: &[Point], k: usize, seed: u64) -> Result<GmmModel> {
    fit_gmm_traced(points, k, seed).map(|(model, _)| model)
}
