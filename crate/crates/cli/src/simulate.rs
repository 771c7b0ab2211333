use anyhow::{bail, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use tomo_core::herm::DensityLike;
use tomo_core::operators::{MeasurementData, MeasurementOperator};
use tomo_core::rng::seeded;

/// Draws per row before giving up on an all-zero count vector.
const MAX_ROW_DRAWS: usize = 11;

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> Result<f64> {
    if mean <= 0.0 {
        return Ok(0.0);
    }
    Ok(Poisson::new(mean)?.sample(rng))
}

/// Exact data `Tρ`, or Poisson counts with mean `scale·Tρ` normalized per
/// row. The random stream is ChaCha8 seeded with `seed`, consumed row by
/// row in column order; a row with zero total count is redrawn (up to 10
/// times).
pub fn simulate_data(
    op: &MeasurementOperator,
    rho: &DensityLike,
    scale: f64,
    seed: u64,
    noisy: bool,
) -> Result<MeasurementData> {
    if !(scale > 0.0) || !scale.is_finite() {
        bail!("scale must be positive, got {scale}");
    }
    let mut y = op.apply(rho.matrix())?;
    if !noisy {
        return Ok(MeasurementData::from_forward(y)?);
    }
    let mut rng = seeded(seed);
    let mut counts = vec![0.0; y.ncols()];
    for m in 0..y.nrows() {
        let mut total = 0.0;
        for _ in 0..MAX_ROW_DRAWS {
            for (k, c) in counts.iter_mut().enumerate() {
                *c = poisson(scale * y[(m, k)].max(0.0), &mut rng)?;
            }
            total = counts.iter().sum();
            if total > 0.0 {
                break;
            }
        }
        if total <= 0.0 {
            bail!("row {m} drew zero counts {MAX_ROW_DRAWS} times; increase the scale");
        }
        for (k, c) in counts.iter().enumerate() {
            y[(m, k)] = c / total;
        }
    }
    Ok(MeasurementData::new(y)?)
}
