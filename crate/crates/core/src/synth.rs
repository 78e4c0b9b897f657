//! Synthetic benchmarks: Max-Set-of-Gaussians landscapes and Latin hypercube
//! designs.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Axis-aligned box `[low_j, high_j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<(f64, f64)>);

impl Bounds {
    pub fn cube(dim: usize, low: f64, high: f64) -> Self {
        Bounds(vec![(low, high); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch(format!("{} bounds for dimension {dim}", self.dim())));
        }
        if let Some((lo, hi)) = self.0.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(Error::InvalidConfig(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    /// Row-major `d x d` symmetric positive definite covariance.
    pub covariance: Vec<f64>,
    /// Peak height, attained at `mean`.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LandscapeParams {
    dim: usize,
    components: Vec<GaussianComponent>,
    domain: Bounds,
}

/// `f(x) = max_k amplitude_k * exp(-1/2 (x - mu_k)' Sigma_k^-1 (x - mu_k))`.
///
/// Serializes to its parameters only; the Cholesky factors are rebuilt (and
/// the parameters revalidated) on deserialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LandscapeParams", into = "LandscapeParams")]
pub struct MsgLandscape {
    params: LandscapeParams,
    factors: Vec<Cholesky<f64, Dyn>>,
}

impl From<MsgLandscape> for LandscapeParams {
    fn from(l: MsgLandscape) -> Self {
        l.params
    }
}

impl TryFrom<LandscapeParams> for MsgLandscape {
    type Error = Error;

    fn try_from(p: LandscapeParams) -> Result<Self> {
        MsgLandscape::new(p.dim, p.components, p.domain)
    }
}

impl MsgLandscape {
    pub fn new(dim: usize, components: Vec<GaussianComponent>, domain: Bounds) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("landscape dimension must be at least 1".into()));
        }
        if components.is_empty() {
            return Err(Error::Empty("landscape components"));
        }
        domain.validate(dim)?;
        let mut factors = Vec::with_capacity(components.len());
        for (k, c) in components.iter().enumerate() {
            if c.mean.len() != dim || c.covariance.len() != dim * dim {
                return Err(Error::DimensionMismatch(format!("component {k} has wrong dimension")));
            }
            if !(c.amplitude > 0.0 && c.amplitude.is_finite()) {
                return Err(Error::InvalidConfig(format!("component {k} amplitude {}", c.amplitude)));
            }
            if c.mean.iter().zip(&domain.0).any(|(m, (lo, hi))| m < lo || m > hi) {
                return Err(Error::InvalidConfig(format!("component {k} mean outside the domain")));
            }
            let cov = DMatrix::from_row_slice(dim, dim, &c.covariance);
            if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax() {
                return Err(Error::InvalidConfig(format!("component {k} covariance is not symmetric")));
            }
            let chol = cov
                .cholesky()
                .ok_or_else(|| Error::InvalidConfig(format!("component {k} covariance is not positive definite")))?;
            factors.push(chol);
        }
        Ok(Self { params: LandscapeParams { dim, components, domain }, factors })
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.params.components
    }

    pub fn domain(&self) -> &Bounds {
        &self.params.domain
    }

    pub fn max_amplitude(&self) -> f64 {
        self.params.components.iter().map(|c| c.amplitude).fold(0.0, f64::max)
    }

    fn component_value(&self, k: usize, x: &[f64]) -> f64 {
        let c = &self.params.components[k];
        let diff = DVector::from_iterator(x.len(), x.iter().zip(&c.mean).map(|(a, m)| a - m));
        let mut z = diff;
        self.factors[k].l_dirty().solve_lower_triangular_mut(&mut z);
        c.amplitude * (-0.5 * z.norm_squared()).exp()
    }

    /// Value of a single component, for diagnostics and tests.
    pub fn evaluate_component(&self, k: usize, x: &[f64]) -> f64 {
        self.component_value(k, x)
    }

    pub fn evaluate_point(&self, x: &[f64]) -> f64 {
        (0..self.params.components.len()).map(|k| self.component_value(k, x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Random landscape: uniform means, covariances `R diag(lambda) R'` with a
/// Haar-random rotation `R` and eigenvalues log-uniform in
/// `[0.05, 0.5] * width^2` (`width` the mean side length of the domain),
/// amplitudes uniform in `(0, 1]` with the largest set to exactly 1.
pub fn generate_msg(dim: usize, n_components: usize, seed: u64, domain: &Bounds) -> Result<MsgLandscape> {
    if dim == 0 || n_components == 0 {
        return Err(Error::InvalidConfig("landscape needs dim >= 1 and n_components >= 1".into()));
    }
    domain.validate(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = domain.0.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / dim as f64;
    let (ln_lo, ln_hi) = ((0.05 * width * width).ln(), (0.5 * width * width).ln());

    let mut components: Vec<GaussianComponent> = (0..n_components)
        .map(|_| {
            let mean = domain.0.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            let rotation = random_rotation(dim, &mut rng);
            let eig = DMatrix::from_diagonal(&DVector::from_iterator(
                dim,
                (0..dim).map(|_| rng.random_range(ln_lo..ln_hi).exp()),
            ));
            let cov = &rotation * eig * rotation.transpose();
            let cov = (&cov + cov.transpose()) * 0.5;
            let amplitude = 1.0 - rng.random::<f64>();
            GaussianComponent { mean, covariance: row_major(&cov), amplitude }
        })
        .collect();
    let top = components
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.amplitude.total_cmp(&b.1.amplitude))
        .map(|(k, _)| k)
        .expect("at least one component");
    components[top].amplitude = 1.0;
    MsgLandscape::new(dim, components, domain.clone())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

// QR of a Gaussian matrix with the signs of R's diagonal folded into Q.
fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn evaluate_msg(landscape: &MsgLandscape, points: &Matrix) -> Result<Vec<f64>> {
    evaluate_msg_with(landscape, points, Execution::default())
}

pub fn evaluate_msg_with(landscape: &MsgLandscape, points: &Matrix, exec: Execution) -> Result<Vec<f64>> {
    if points.ncols() != landscape.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-column points for a {}-dimensional landscape",
            points.ncols(),
            landscape.dim()
        )));
    }
    Ok(par::map_range(points.nrows(), exec, |i| landscape.evaluate_point(points.row(i))))
}

/// Latin hypercube design: each coordinate axis is cut into `n` equal strata
/// and every stratum holds exactly one point.
pub fn latin_hypercube(n: usize, dim: usize, seed: u64, domain: &Bounds) -> Result<Matrix> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidConfig("latin hypercube needs n >= 1 and dim >= 1".into()));
    }
    domain.validate(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Matrix::zeros(n, dim);
    for (j, &(lo, hi)) in domain.0.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (i, &stratum) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            let unit = (stratum as f64 + u) / n as f64;
            // keep rounding from pushing a point into the next stratum
            let upper = (stratum + 1) as f64 / n as f64;
            let unit = if unit >= upper { upper.next_down() } else { unit };
            out.set(i, j, lo + unit * (hi - lo));
        }
    }
    Ok(out)
}

/// Stratum of each coordinate; the inverse of the design's construction.
pub fn strata_of(design: &Matrix, domain: &Bounds) -> Vec<Vec<usize>> {
    let n = design.nrows();
    (0..design.ncols())
        .map(|j| {
            let (lo, hi) = domain.0[j];
            (0..n).map(|i| (((design.get(i, j) - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize) -> Bounds {
        Bounds::cube(dim, 0.0, 1.0)
    }

    #[test]
    fn single_component_peak_and_formula() {
        let c = GaussianComponent { mean: vec![0.5, 0.5], covariance: vec![1.0, 0.0, 0.0, 1.0], amplitude: 1.0 };
        let l = MsgLandscape::new(2, vec![c], Bounds::cube(2, -3.0, 3.0)).unwrap();
        assert_eq!(l.evaluate_point(&[0.5, 0.5]), 1.0);
        // ||x - mu||^2 = 2
        assert!((l.evaluate_point(&[1.5, 1.5]) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((l.evaluate_point(&[1.5, 1.5]) - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn generated_landscape_is_valid_and_deterministic() {
        let a = generate_msg(4, 30, 11, &Bounds::cube(4, -5.0, 5.0)).unwrap();
        let b = generate_msg(4, 30, 11, &Bounds::cube(4, -5.0, 5.0)).unwrap();
        assert_eq!(a.components(), b.components());
        assert_eq!(a.max_amplitude(), 1.0);
        let top = a.components().iter().find(|c| c.amplitude == 1.0).unwrap();
        assert_eq!(a.evaluate_point(&top.mean), 1.0);
        assert!(a.components().iter().all(|c| c.amplitude > 0.0 && c.amplitude <= 1.0));
    }

    #[test]
    fn component_order_does_not_matter() {
        let l = generate_msg(3, 8, 2, &unit(3)).unwrap();
        let mut rev = l.components().to_vec();
        rev.reverse();
        let r = MsgLandscape::new(3, rev, unit(3)).unwrap();
        let pts = latin_hypercube(50, 3, 9, &unit(3)).unwrap();
        assert_eq!(evaluate_msg(&l, &pts).unwrap(), evaluate_msg(&r, &pts).unwrap());
    }

    #[test]
    fn json_round_trip_reproduces_values() {
        let l = generate_msg(2, 5, 3, &unit(2)).unwrap();
        let back: MsgLandscape = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        let pts = latin_hypercube(20, 2, 1, &unit(2)).unwrap();
        assert_eq!(evaluate_msg(&l, &pts).unwrap(), evaluate_msg(&back, &pts).unwrap());
    }

    #[test]
    fn invalid_landscapes_rejected() {
        let bad_cov = GaussianComponent { mean: vec![0.0], covariance: vec![-1.0], amplitude: 1.0 };
        assert!(MsgLandscape::new(1, vec![bad_cov], unit(1)).is_err());
        let outside = GaussianComponent { mean: vec![2.0], covariance: vec![1.0], amplitude: 1.0 };
        assert!(MsgLandscape::new(1, vec![outside], unit(1)).is_err());
        assert!(generate_msg(0, 3, 0, &unit(0)).is_err());
        assert!(generate_msg(2, 3, 0, &unit(3)).is_err());
        assert!(latin_hypercube(0, 2, 0, &unit(2)).is_err());
    }

    #[test]
    fn lhs_examples() {
        let one = latin_hypercube(1, 3, 5, &Bounds::cube(3, 2.0, 4.0)).unwrap();
        assert!(one.as_slice().iter().all(|&x| (2.0..4.0).contains(&x)));

        let d = latin_hypercube(10, 2, 5, &unit(2)).unwrap();
        for j in 0..2 {
            let mut hits = [0; 10];
            for i in 0..10 {
                let x = d.get(i, j);
                hits[(x * 10.0).floor() as usize] += 1;
                assert!((0.0..1.0).contains(&x));
            }
            assert_eq!(hits, [1; 10]);
        }
        assert_eq!(d, latin_hypercube(10, 2, 5, &unit(2)).unwrap());
    }
}
