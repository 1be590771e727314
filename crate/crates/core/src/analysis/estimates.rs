use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::costs::{l2, CostFunction};
use crate::error::{Error, Result};

/// Axis-aligned sampling region.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        SampleBox {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if h > l { rng.gen_range(*l..*h) } else { *l })
            .collect()
    }

    fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Stationarity slack accepted for `x_star` before estimating.
const STATIONARY_TOL: f64 = 1e-6;

/// `min (∇g(x) − ∇g(x_*))ᵀ(x − x_*) / ‖x − x_*‖²` over uniform samples in the box.
///
/// A minimum over finitely many samples can only overestimate the true RSI
/// constant restricted to the box.
pub fn rsi_estimate<G>(
    gradient: G,
    x_star: &[f64],
    sample_box: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    if n_samples == 0 {
        return Err(Error::Estimation("need at least one sample".into()));
    }
    if sample_box.dim() != x_star.len() {
        return Err(Error::DimensionMismatch {
            expected: x_star.len(),
            got: sample_box.dim(),
        });
    }
    let g_star = gradient(x_star);
    if l2(&g_star) > STATIONARY_TOL * (1.0 + l2(x_star)) {
        return Err(Error::Estimation(format!(
            "reference point is not stationary (gradient norm {:e})",
            l2(&g_star)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..n_samples {
        let x = sample_box.sample(&mut rng);
        let diff: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
        let dist2: f64 = diff.iter().map(|v| v * v).sum();
        if dist2 < 1e-24 {
            continue;
        }
        let g = gradient(&x);
        let secant: f64 = g
            .iter()
            .zip(&g_star)
            .zip(&diff)
            .map(|((a, b), dx)| (a - b) * dx)
            .sum();
        best = best.min(secant / dist2);
    }
    if best.is_infinite() {
        return Err(Error::Estimation("every sample coincided with x_star".into()));
    }
    Ok(best)
}

/// `max ‖∇F(x) − ∇F(y)‖ / ‖x − y‖` over sampled pairs.
///
/// Half of the pairs are independent uniform points; the other half pair a
/// uniform point with a nearby one at a log-uniform distance, which probes
/// local curvature. The result never exceeds the true Lipschitz constant.
pub fn lipschitz_estimate<G>(gradient: G, sample_box: &SampleBox, n_pairs: usize, seed: u64) -> Result<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    if n_pairs == 0 {
        return Err(Error::Estimation("need at least one pair".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diameter = sample_box.diameter().max(1e-12);
    let dim = sample_box.dim();
    let mut best: Option<f64> = None;
    for p in 0..n_pairs {
        let x = sample_box.sample(&mut rng);
        let y = if p % 2 == 0 {
            sample_box.sample(&mut rng)
        } else {
            let radius = diameter * 10f64.powf(rng.gen_range(-6.0..0.0));
            let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = l2(&dir).max(1e-300);
            x.iter().zip(&dir).map(|(a, u)| a + radius * u / norm).collect()
        };
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist < 1e-12 {
            continue;
        }
        let gx = gradient(&x);
        let gy = gradient(&y);
        let num = gx.iter().zip(&gy).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let ratio = num / dist;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or_else(|| Error::Estimation("every pair was coincident".into()))
}

/// Largest relative deviation between the analytic gradient and central
/// differences with step `step`, scaled by `max(‖∇f‖, 1)`.
pub fn gradient_check(cost: &dyn CostFunction, x: &[f64], step: f64) -> f64 {
    let analytic = cost.gradient(x);
    let mut numeric = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + step;
        let up = cost.value(&probe);
        probe[k] = x[k] - step;
        let down = cost.value(&probe);
        probe[k] = x[k];
        numeric[k] = (up - down) / (2.0 * step);
    }
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    l2(&diff) / l2(&analytic).max(1.0)
}

/// Same as [`gradient_check`] for the Hessian against differences of the
/// gradient; `None` when the cost has no Hessian.
pub fn hessian_check(cost: &dyn CostFunction, x: &[f64], step: f64) -> Option<f64> {
    let h = cost.hessian(x)?;
    let d = x.len();
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    let scale = h.amax().max(1.0);
    for k in 0..d {
        probe[k] = x[k] + step;
        let up = cost.gradient(&probe);
        probe[k] = x[k] - step;
        let down = cost.gradient(&probe);
        probe[k] = x[k];
        for r in 0..d {
            let numeric = (up[r] - down[r]) / (2.0 * step);
            worst = worst.max((h[(r, k)] - numeric).abs() / scale);
        }
    }
    Some(worst)
}
