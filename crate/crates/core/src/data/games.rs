//! Games built from a model and data: empirical marginal games over a
//! background set, and closed-form or sampled conditional games.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::Dataset;
use super::family::{GaussianForm, LatentLinear, SyntheticFamily};
use super::model::{ModelOracle, Polynomial};
use crate::error::{Error, Result};
use crate::game::{full_mask, Game};

/// Largest feature count for which all `2ⁿ` marginal values are tabulated.
pub const MAX_EMPIRICAL_PLAYERS: usize = 20;

/// Upper bound on rows handed to the model in one call.
const ROWS_PER_CALL: usize = 1 << 16;

fn check_arity(x: &[f64], model: &ModelOracle, bg: Option<&Dataset>) -> Result<()> {
    if x.len() != model.arity() {
        return Err(Error::InvalidArgument(format!("explicand has {} features, model expects {}", x.len(), model.arity())));
    }
    if let Some(bg) = bg {
        if bg.n_features() != x.len() {
            return Err(Error::InvalidArgument(format!(
                "background has {} features, explicand has {}",
                bg.n_features(),
                x.len()
            )));
        }
    }
    Ok(())
}

/// Calls `sink(mask_index, predictions)` with the model evaluated at
/// `(x_S, x̃_{−S})` for every background row `x̃`, one mask at a time.
fn for_each_mask(
    x: &[f64],
    model: &ModelOracle,
    bg: &Dataset,
    masks: &[u64],
    mut sink: impl FnMut(usize, &[f64]),
) -> Result<()> {
    check_arity(x, model, Some(bg))?;
    let n = x.len();
    let r = bg.n_samples();
    let per_call = (ROWS_PER_CALL / r).max(1);
    let mut flat = Vec::with_capacity(per_call.min(masks.len()) * r * n);
    for (c, chunk) in masks.chunks(per_call).enumerate() {
        flat.clear();
        for &s in chunk {
            for row in bg.rows() {
                flat.extend((0..n).map(|i| if s >> i & 1 == 1 { x[i] } else { row[i] }));
            }
        }
        let y = model.predict(&flat).map_err(|e| match e {
            Error::Oracle(m) => Error::Oracle(format!("{m} (coalitions {:#b}..)", chunk[0])),
            other => other,
        })?;
        for (k, ys) in y.chunks_exact(r).enumerate() {
            sink(c * per_call + k, ys);
        }
    }
    Ok(())
}

/// `v̂(S) = Σ_r w_r f(x_S, x̃_{r,−S})` for the listed coalitions.
pub fn marginal_values(x: &[f64], model: &ModelOracle, bg: &Dataset, masks: &[u64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; masks.len()];
    for_each_mask(x, model, bg, masks, |k, ys| out[k] = bg.mean_of(ys))?;
    Ok(out)
}

/// Per-background-row terms `f(x_S, x̃_{r,−S})`, indexed `[mask][row]`.
pub fn marginal_replicates(x: &[f64], model: &ModelOracle, bg: &Dataset, masks: &[u64]) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); masks.len()];
    for_each_mask(x, model, bg, masks, |k, ys| out[k] = ys.to_vec())?;
    Ok(out)
}

/// The empirical marginal game of `x` over the background set, tabulated
/// for all coalitions.
pub fn empirical_marginal_game(x: &[f64], model: &ModelOracle, bg: &Dataset) -> Result<Game> {
    let n = x.len();
    if n > MAX_EMPIRICAL_PLAYERS {
        return Err(Error::TooManyPlayers { n, cap: MAX_EMPIRICAL_PLAYERS });
    }
    let masks: Vec<u64> = (0..=full_mask(n)).collect();
    Game::dense(n, marginal_values(x, model, bg, &masks)?)
}

fn unsupported(family: &SyntheticFamily, model: &ModelOracle) -> Error {
    Error::Unsupported(format!(
        "no closed-form conditional expectation for {} under {}; use the Monte Carlo conditional game",
        model.describe(),
        family.describe()
    ))
}

/// Precomputed Gaussian laws for every coalition of a latent-linear family,
/// reused across explicands.
#[derive(Debug, Clone)]
pub struct GaussianGames {
    n: usize,
    forms: Vec<GaussianForm>,
}

impl GaussianGames {
    /// Conditional laws `X | X_S = x_S`.
    pub fn conditional(family: &LatentLinear) -> Result<Self> {
        Self::build(family, |s| family.conditional(s))
    }

    /// Population marginal laws `(x_S, X_{−S})`.
    pub fn marginal(family: &LatentLinear) -> Result<Self> {
        Self::build(family, |s| family.marginal(s))
    }

    fn build(family: &LatentLinear, law: impl Fn(u64) -> GaussianForm) -> Result<Self> {
        let n = family.n_features();
        if n > MAX_EMPIRICAL_PLAYERS {
            return Err(Error::TooManyPlayers { n, cap: MAX_EMPIRICAL_PLAYERS });
        }
        Ok(GaussianGames { n, forms: (0..=full_mask(n)).map(law).collect() })
    }

    pub fn game(&self, x: &[f64], poly: &Polynomial) -> Result<Game> {
        if x.len() != self.n || poly.arity() != self.n {
            return Err(Error::InvalidArgument("explicand, model and family sizes differ".into()));
        }
        let values: Result<Vec<f64>> = self.forms.iter().map(|f| f.expectation(poly, x)).collect();
        Game::dense(self.n, values?)
    }

    pub fn form(&self, s: u64) -> &GaussianForm {
        &self.forms[s as usize]
    }
}

/// `v(S) = E[f(X) | X_S = x_S]` in closed form.
pub fn analytic_conditional_game(x: &[f64], family: &SyntheticFamily, model: &ModelOracle) -> Result<Game> {
    match (family.as_latent_linear(), model.as_polynomial()) {
        (Some(l), Some(p)) => GaussianGames::conditional(l)?.game(x, p),
        _ => Err(unsupported(family, model)),
    }
}

/// `v(S) = E[f(x_S, X_{−S})]` under the population law, in closed form.
pub fn population_marginal_game(x: &[f64], family: &SyntheticFamily, model: &ModelOracle) -> Result<Game> {
    match (family.as_latent_linear(), model.as_polynomial()) {
        (Some(l), Some(p)) => GaussianGames::marginal(l)?.game(x, p),
        _ => Err(unsupported(family, model)),
    }
}

/// Conditional game estimated by drawing `X_{−S}` from its exact
/// conditional law, independently for each coalition. Returns the game and
/// the standard error of each coalition value.
pub fn monte_carlo_conditional_game(
    x: &[f64],
    family: &LatentLinear,
    model: &ModelOracle,
    draws: usize,
    seed: u64,
) -> Result<(Game, Vec<f64>)> {
    check_arity(x, model, None)?;
    let n = x.len();
    if n != family.n_features() {
        return Err(Error::InvalidArgument("explicand and family sizes differ".into()));
    }
    if n > MAX_EMPIRICAL_PLAYERS {
        return Err(Error::TooManyPlayers { n, cap: MAX_EMPIRICAL_PLAYERS });
    }
    if draws < 2 {
        return Err(Error::InvalidArgument("need at least two draws".into()));
    }
    let full = full_mask(n);
    let mut values = vec![0.0; full as usize + 1];
    let mut errors = vec![0.0; full as usize + 1];
    let mut flat = Vec::with_capacity(draws * n);
    for s in 0..=full {
        let form = family.conditional(s);
        let mean = form.mean(x);
        if s == full {
            values[s as usize] = model.eval(x)?;
            continue;
        }
        let root = form.root();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ s.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        flat.clear();
        for _ in 0..draws {
            let z = DVector::from_fn(n, |_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
            let sample = &mean + &root * z;
            flat.extend((0..n).map(|i| if s >> i & 1 == 1 { x[i] } else { sample[i] }));
        }
        let y = model.predict(&flat)?;
        let m = y.iter().sum::<f64>() / draws as f64;
        let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (draws - 1) as f64;
        values[s as usize] = m;
        errors[s as usize] = (var / draws as f64).sqrt();
    }
    Ok((Game::dense(n, values)?, errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::shapley;

    #[test]
    fn hand_enumerated_marginal_game() {
        let model = ModelOracle::parse("poly:x1*x2", 2).unwrap();
        let bg = Dataset::with_default_names(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let g = empirical_marginal_game(&[5.0, 6.0], &model, &bg).unwrap();
        assert_eq!(g.dense_values().unwrap(), &[7.0, 15.0, 12.0, 30.0]);
        assert_eq!(shapley(&g), vec![13.0, 10.0]);
    }

    #[test]
    fn singleton_background_gives_constant_game() {
        let model = ModelOracle::parse("poly:x1*x2 + x1", 2).unwrap();
        let bg = Dataset::with_default_names(vec![vec![5.0, 6.0]]).unwrap();
        let g = empirical_marginal_game(&[5.0, 6.0], &model, &bg).unwrap();
        assert!(g.dense_values().unwrap().iter().all(|&v| v == 35.0));
    }

    #[test]
    fn conditional_game_for_rho_family() {
        let rho = 0.6;
        let fam = SyntheticFamily::parse(&format!("rho-pair:{rho},0.4")).unwrap();
        let model = ModelOracle::parse("bilinear:x2*x3", 3).unwrap();
        let x = [0.3, -1.2, 0.8];
        let g = analytic_conditional_game(&x, &fam, &model).unwrap();
        let v = g.dense_values().unwrap();
        for s in [0b000, 0b001, 0b010, 0b100, 0b011] {
            assert!(v[s].abs() < 1e-12, "v({s:#b}) = {}", v[s]);
        }
        assert!((v[0b101] - rho * x[0] * x[2]).abs() < 1e-12);
        assert!((v[0b110] - x[1] * x[2]).abs() < 1e-12);
        assert!(analytic_conditional_game(&x, &SyntheticFamily::MicTest, &model).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let fam = LatentLinear::rho_pair(0.8, 0.5).unwrap();
        let model = ModelOracle::parse("poly:x2*x3 + x2^2", 3).unwrap();
        let x = [1.0, 0.5, -0.7];
        let exact = GaussianGames::conditional(&fam).unwrap().game(&x, model.as_polynomial().unwrap()).unwrap();
        let (mc, se) = monte_carlo_conditional_game(&x, &fam, &model, 20_000, 3).unwrap();
        for s in 0..8u64 {
            assert!((exact.eval(s) - mc.eval(s)).abs() <= 4.0 * se[s as usize] + 1e-12, "{s}");
        }
    }
}
