//! Synthetic generative models, including Gaussian latent-linear families
//! with closed-form conditional expectations of polynomials.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::dataset::{default_names, Dataset};
use super::model::{Monomial, Polynomial};
use crate::error::{Error, Result};
use crate::game::{members, MAX_PLAYERS};

/// Highest monomial degree with a closed-form Gaussian moment.
pub const MAX_MOMENT_DEGREE: u32 = 12;

/// `X = μ + L·Z + σ∘ε` with independent standard normal latents `Z` and
/// noises `ε`; `L` is `n_features × n_latents`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentLinear {
    means: Vec<f64>,
    loadings: Vec<Vec<f64>>,
    noise: Vec<f64>,
}

/// Affine description of a Gaussian law obtained by fixing the coordinates
/// in `observed`: mean `offset + gain·x`, covariance `cov`.
#[derive(Debug, Clone)]
pub struct GaussianForm {
    pub observed: u64,
    gain: DMatrix<f64>,
    offset: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianForm {
    pub fn mean(&self, x: &[f64]) -> DVector<f64> {
        &self.offset + &self.gain * DVector::from_column_slice(x)
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// A factor `A` with `A·Aᵀ = cov`, for sampling.
    pub fn root(&self) -> DMatrix<f64> {
        let eig = self.cov.clone().symmetric_eigen();
        let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
    }

    /// `E[p(X)]` under this law, conditioning point `x`.
    pub fn expectation(&self, p: &Polynomial, x: &[f64]) -> Result<f64> {
        let mean = self.mean(x);
        p.terms().iter().map(|t| gaussian_moment(t, mean.as_slice(), &self.cov)).sum()
    }
}

impl LatentLinear {
    pub fn new(means: Vec<f64>, loadings: Vec<Vec<f64>>, noise: Vec<f64>) -> Result<Self> {
        let p = loadings.len();
        if p == 0 || p > MAX_PLAYERS {
            return Err(Error::InvalidArgument(format!("latent-linear family needs 1..={MAX_PLAYERS} features")));
        }
        let k = loadings[0].len();
        if means.len() != p || noise.len() != p || loadings.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("means, loadings and noise must agree in size".into()));
        }
        if loadings.iter().flatten().chain(&means).chain(&noise).any(|x| !x.is_finite()) || noise.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidArgument("parameters must be finite with nonnegative noise scales".into()));
        }
        Ok(LatentLinear { means, loadings, noise })
    }

    /// `X1 ~ N(0,1)`, `X2 = ρ·X1 + noise·ε`, `X3 ~ N(0,1)` independent of both.
    pub fn rho_pair(rho: f64, noise: f64) -> Result<Self> {
        LatentLinear::new(vec![0.0; 3], vec![vec![1.0, 0.0], vec![rho, 0.0], vec![0.0, 1.0]], vec![0.0, noise, 0.0])
    }

    /// `X1 = Z + δ·ε1`, `X2 = Z + δ·ε2`, `X3 ~ N(0,1)`: two near copies of
    /// one latent plus an independent feature.
    pub fn shared_latent(delta: f64) -> Result<Self> {
        LatentLinear::new(vec![0.0; 3], vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![delta, delta, 0.0])
    }

    /// Independent blocks of the given sizes; within a block every feature
    /// is `Z_block + noise·ε`.
    pub fn independent_blocks(sizes: &[usize], noise: f64) -> Result<Self> {
        let p: usize = sizes.iter().sum();
        let mut loadings = vec![vec![0.0; sizes.len()]; p];
        let mut i = 0;
        for (b, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                loadings[i][b] = 1.0;
                i += 1;
            }
        }
        LatentLinear::new(vec![0.0; p], loadings, vec![noise; p])
    }

    pub fn n_features(&self) -> usize {
        self.loadings.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let p = self.n_features();
        let l = DMatrix::from_fn(p, self.loadings[0].len(), |i, j| self.loadings[i][j]);
        let mut c = &l * l.transpose();
        for i in 0..p {
            c[(i, i)] += self.noise[i] * self.noise[i];
        }
        c
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.loadings[0].len()).map(|_| StandardNormal.sample(rng)).collect();
        (0..self.n_features())
            .map(|i| {
                let e: f64 = StandardNormal.sample(rng);
                self.means[i] + self.loadings[i].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + self.noise[i] * e
            })
            .collect()
    }

    /// Law of `X` given `X_S = x_S`.
    pub fn conditional(&self, observed: u64) -> GaussianForm {
        let p = self.n_features();
        let sigma = self.covariance();
        let s = members(observed);
        let u: Vec<usize> = (0..p).filter(|i| observed >> i & 1 == 0).collect();
        let mut gain = DMatrix::zeros(p, p);
        let mut offset = DVector::from_column_slice(&self.means);
        let mut cov = DMatrix::zeros(p, p);
        for &i in &s {
            gain[(i, i)] = 1.0;
            offset[i] = 0.0;
        }
        let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |a, b| sigma[(rows[a], cols[b])]);
        let (k, cond) = if s.is_empty() {
            (DMatrix::zeros(u.len(), 0), sub(&u, &u))
        } else {
            let inv = sub(&s, &s).pseudo_inverse(1e-12).expect("pseudo-inverse of a covariance block");
            let k = sub(&u, &s) * inv;
            let cond = sub(&u, &u) - &k * sub(&s, &u);
            (k, cond)
        };
        for (a, &i) in u.iter().enumerate() {
            let mut shift = 0.0;
            for (b, &j) in s.iter().enumerate() {
                gain[(i, j)] = k[(a, b)];
                shift += k[(a, b)] * self.means[j];
            }
            offset[i] -= shift;
            for (c, &j) in u.iter().enumerate() {
                cov[(i, j)] = 0.5 * (cond[(a, c)] + cond[(c, a)]);
            }
        }
        GaussianForm { observed, gain, offset, cov }
    }

    /// Law of `(x_S, X_{−S})` with `X_{−S}` drawn from its marginal.
    pub fn marginal(&self, observed: u64) -> GaussianForm {
        let p = self.n_features();
        let sigma = self.covariance();
        let mut gain = DMatrix::zeros(p, p);
        let mut offset = DVector::from_column_slice(&self.means);
        let mut cov = DMatrix::zeros(p, p);
        for i in 0..p {
            if observed >> i & 1 == 1 {
                gain[(i, i)] = 1.0;
                offset[i] = 0.0;
            } else {
                for j in 0..p {
                    if observed >> j & 1 == 0 {
                        cov[(i, j)] = sigma[(i, j)];
                    }
                }
            }
        }
        GaussianForm { observed, gain, offset, cov }
    }
}

/// `E[c·Π X_i^{p_i}]` for `X ~ N(mean, cov)` via Isserlis' theorem.
pub fn gaussian_moment(m: &Monomial, mean: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    if m.degree() > MAX_MOMENT_DEGREE {
        return Err(Error::Unsupported(format!("Gaussian moments above degree {MAX_MOMENT_DEGREE}")));
    }
    let vars: Vec<usize> = m.powers.iter().flat_map(|&(i, p)| std::iter::repeat_n(i, p as usize)).collect();
    let d = vars.len();
    let mut total = 0.0;
    // choose which factors contribute their centred part
    for sel in 0u32..(1 << d) {
        if sel.count_ones() % 2 == 1 {
            continue;
        }
        let mut outside = 1.0;
        let mut centred = Vec::with_capacity(d);
        for (t, &v) in vars.iter().enumerate() {
            if sel >> t & 1 == 1 {
                centred.push(v);
            } else {
                outside *= mean[v];
            }
        }
        if outside != 0.0 {
            total += outside * centred_moment(&centred, cov);
        }
    }
    Ok(m.coef * total)
}

fn centred_moment(vars: &[usize], cov: &DMatrix<f64>) -> f64 {
    match vars.len() {
        0 => 1.0,
        n if n % 2 == 1 => 0.0,
        _ => {
            let a = vars[0];
            let mut sum = 0.0;
            for j in 1..vars.len() {
                let c = cov[(a, vars[j])];
                if c != 0.0 {
                    let rest: Vec<usize> = vars[1..].iter().enumerate().filter(|&(k, _)| k + 1 != j).map(|(_, &v)| v).collect();
                    sum += c * centred_moment(&rest, cov);
                }
            }
            sum
        }
    }
}

/// Named generative models for synthetic experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticFamily {
    LatentLinear(LatentLinear),
    /// Seven features in three independent groups `{0,1,2,3}, {4}, {5,6}`
    /// with quadratic, sine, linear and circular dependencies.
    MicTest,
    /// `Z ~ U(−1,1)`, `X1 = Z + δε1`, `X2 = √2·sin(πZ/4) + δε2`,
    /// `X3 ~ U([−1,−0.5] ∪ [0.5,1])`, response `3·X2·X3 + U(−0.05, 0.05)`.
    PedagogicalEx1 { delta: f64 },
    /// Finite support with the given probabilities.
    Discrete { points: Vec<Vec<f64>>, probs: Vec<f64> },
}

/// Samples and, when the family defines one, the response.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    pub response: Option<Vec<f64>>,
}

impl SyntheticFamily {
    /// Two diagonal points `(0,0), (1,1)` with mass `(1−p)/2` each and the
    /// off-diagonal point `(1,0)` with mass `p`.
    pub fn rectangle_witness(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("rectangle probability {p} outside [0,1)")));
        }
        let mut points = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let mut probs = vec![0.5 * (1.0 - p), 0.5 * (1.0 - p)];
        if p > 0.0 {
            points.push(vec![1.0, 0.0]);
            probs.push(p);
        }
        Ok(SyntheticFamily::Discrete { points, probs })
    }

    /// Independent symmetric `±1` features.
    pub fn rademacher(n: usize) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::InvalidArgument("rademacher family supports 1..=16 features".into()));
        }
        let points: Vec<Vec<f64>> = (0..1usize << n)
            .map(|b| (0..n).map(|i| if b >> i & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let probs = vec![1.0 / points.len() as f64; points.len()];
        Ok(SyntheticFamily::Discrete { points, probs })
    }

    /// Parses `mictest`, `pedagogical:DELTA`, `rho-pair:RHO,NOISE`,
    /// `shared-latent:DELTA`, `blocks:SIZE,SIZE,...[;NOISE]`,
    /// `rectangle:P` or `rademacher:N`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, body) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?} in {spec:?}"))))
                .collect()
        };
        let arg = |k: usize| -> Result<Vec<f64>> {
            let v = nums(body)?;
            if v.len() != k {
                return Err(Error::Parse(format!("{spec:?} expects {k} parameter(s)")));
            }
            Ok(v)
        };
        match kind.trim() {
            "mictest" => Ok(SyntheticFamily::MicTest),
            "pedagogical" => {
                let delta = if body.is_empty() { 0.05 } else { arg(1)?[0] };
                Ok(SyntheticFamily::PedagogicalEx1 { delta })
            }
            "rho-pair" => {
                let v = arg(2)?;
                Ok(SyntheticFamily::LatentLinear(LatentLinear::rho_pair(v[0], v[1])?))
            }
            "shared-latent" => Ok(SyntheticFamily::LatentLinear(LatentLinear::shared_latent(arg(1)?[0])?)),
            "blocks" => {
                let (sizes, noise) = body.split_once(';').unwrap_or((body, "0.5"));
                let sizes: Vec<usize> = nums(sizes)?.iter().map(|&s| s as usize).collect();
                let noise = nums(noise)?.first().copied().unwrap_or(0.5);
                Ok(SyntheticFamily::LatentLinear(LatentLinear::independent_blocks(&sizes, noise)?))
            }
            "rectangle" => SyntheticFamily::rectangle_witness(arg(1)?[0]),
            "rademacher" => SyntheticFamily::rademacher(arg(1)?[0] as usize),
            other => Err(Error::Parse(format!("unknown synthetic family {other:?}"))),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            SyntheticFamily::LatentLinear(l) => l.n_features(),
            SyntheticFamily::MicTest => 7,
            SyntheticFamily::PedagogicalEx1 { .. } => 3,
            SyntheticFamily::Discrete { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        match self {
            SyntheticFamily::MicTest => (0..7).map(|i| format!("x{i}")).collect(),
            _ => default_names(self.n_features()),
        }
    }

    pub fn as_latent_linear(&self) -> Option<&LatentLinear> {
        match self {
            SyntheticFamily::LatentLinear(l) => Some(l),
            _ => None,
        }
    }

    /// Exact weighted support of a discrete family.
    pub fn support(&self) -> Result<Dataset> {
        match self {
            SyntheticFamily::Discrete { points, probs } => {
                Dataset::new(self.feature_names(), points.clone())?.with_weights(probs.clone())
            }
            _ => Err(Error::Unsupported("only discrete families have a finite support".into())),
        }
    }

    /// `n` reproducible samples for `seed`.
    pub fn generate(&self, n: usize, seed: u64) -> Result<Generated> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = |rng: &mut ChaCha8Rng, sd: f64| -> f64 { sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng) };
        let mut rows = Vec::with_capacity(n);
        let mut response = None;
        match self {
            SyntheticFamily::LatentLinear(l) => {
                for _ in 0..n {
                    rows.push(l.sample(&mut rng));
                }
            }
            SyntheticFamily::MicTest => {
                let x0d = Uniform::new(-4.0 * PI, 4.0 * PI).expect("valid range");
                let x4d = Uniform::new(0.0, 10.0).expect("valid range");
                let thd = Uniform::new(0.0, 2.0 * PI).expect("valid range");
                for _ in 0..n {
                    let x0 = x0d.sample(&mut rng);
                    let x1 = x0 * x0 + normal(&mut rng, 1.0);
                    let x2 = x0.sin() + normal(&mut rng, 0.25);
                    let x3 = 0.5 * x0 + normal(&mut rng, 0.25);
                    let x4 = x4d.sample(&mut rng);
                    let theta = thd.sample(&mut rng);
                    let x5 = 2.0 * theta.cos() + normal(&mut rng, 0.1);
                    let x6 = 2.0 * theta.sin() + normal(&mut rng, 0.1);
                    rows.push(vec![x0, x1, x2, x3, x4, x5, x6]);
                }
            }
            SyntheticFamily::PedagogicalEx1 { delta } => {
                let zd = Uniform::new(-1.0, 1.0).expect("valid range");
                let half = Uniform::new(0.5, 1.0).expect("valid range");
                let noise = Uniform::new(-0.05, 0.05).expect("valid range");
                let mut y = Vec::with_capacity(n);
                for _ in 0..n {
                    let z = zd.sample(&mut rng);
                    let x1 = z + normal(&mut rng, *delta);
                    let x2 = 2f64.sqrt() * (z * PI / 4.0).sin() + normal(&mut rng, *delta);
                    let x3 = if rng.random::<bool>() { half.sample(&mut rng) } else { -half.sample(&mut rng) };
                    y.push(3.0 * x2 * x3 + noise.sample(&mut rng));
                    rows.push(vec![x1, x2, x3]);
                }
                response = Some(y);
            }
            SyntheticFamily::Discrete { points, probs } => {
                let total: f64 = probs.iter().sum();
                for _ in 0..n {
                    let mut u = rng.random::<f64>() * total;
                    let mut k = 0;
                    while k + 1 < probs.len() && u >= probs[k] {
                        u -= probs[k];
                        k += 1;
                    }
                    rows.push(points[k].clone());
                }
            }
        }
        Ok(Generated { data: Dataset::new(self.feature_names(), rows)?, response })
    }

    pub fn describe(&self) -> String {
        match self {
            SyntheticFamily::LatentLinear(l) => format!("latent-linear({} features)", l.n_features()),
            SyntheticFamily::MicTest => "mictest".into(),
            SyntheticFamily::PedagogicalEx1 { delta } => format!("pedagogical:{delta}"),
            SyntheticFamily::Discrete { points, .. } => format!("discrete({} points)", points.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_known_values() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let mono = |c: f64, powers: Vec<(usize, u32)>| Monomial { coef: c, powers };
        // E[X0^2] = 2 + 1, E[X0 X1] = 0.5 + 1·(-2), E[X0^4] for centred = 3σ⁴
        let mean = [1.0, -2.0];
        assert!((gaussian_moment(&mono(1.0, vec![(0, 2)]), &mean, &cov).unwrap() - 3.0).abs() < 1e-12);
        assert!((gaussian_moment(&mono(1.0, vec![(0, 1), (1, 1)]), &mean, &cov).unwrap() + 1.5).abs() < 1e-12);
        assert!((gaussian_moment(&mono(1.0, vec![(0, 4)]), &[0.0, 0.0], &cov).unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(gaussian_moment(&mono(2.0, vec![]), &mean, &cov).unwrap(), 2.0);
    }

    #[test]
    fn rho_pair_conditional_mean() {
        let fam = LatentLinear::rho_pair(0.8, 0.3).unwrap();
        let form = fam.conditional(0b001);
        let m = form.mean(&[1.5, 9.0, 9.0]);
        assert!((m[0] - 1.5).abs() < 1e-12);
        assert!((m[1] - 1.2).abs() < 1e-12);
        assert!(m[2].abs() < 1e-12);
        assert!((form.cov()[(1, 1)] - 0.09).abs() < 1e-12);
        let f = Polynomial::parse("x2*x3", Some(3)).unwrap();
        let x = [0.7, -0.2, 1.1];
        assert!((fam.conditional(0b101).expectation(&f, &x).unwrap() - 0.8 * 0.7 * 1.1).abs() < 1e-12);
        assert!(fam.conditional(0b001).expectation(&f, &x).unwrap().abs() < 1e-12);
        assert!((fam.marginal(0b110).expectation(&f, &x).unwrap() + 0.22).abs() < 1e-12);
    }

    #[test]
    fn generation_is_seed_stable() {
        for fam in [SyntheticFamily::MicTest, SyntheticFamily::PedagogicalEx1 { delta: 0.05 }] {
            let a = fam.generate(50, 9).unwrap();
            assert_eq!(a, fam.generate(50, 9).unwrap());
            assert_ne!(a, fam.generate(50, 10).unwrap());
        }
        let g = SyntheticFamily::PedagogicalEx1 { delta: 0.05 }.generate(2000, 1).unwrap();
        assert!(g.data.column(2).iter().all(|x| (0.5..=1.0).contains(&x.abs())));
    }

    #[test]
    fn parse_families() {
        assert_eq!(SyntheticFamily::parse("mictest").unwrap().n_features(), 7);
        assert_eq!(SyntheticFamily::parse("blocks:2,3;0.1").unwrap().n_features(), 5);
        assert!(SyntheticFamily::parse("rho-pair:1").is_err());
        let w = SyntheticFamily::parse("rectangle:0.01").unwrap().support().unwrap();
        assert_eq!(w.n_samples(), 3);
    }
}
