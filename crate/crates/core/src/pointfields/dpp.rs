//! Spectral (HKPV) sampling of one-dimensional determinantal fields from a
//! Nyström discretisation of the kernel restricted to a bounded window.

use super::kernel::{bessel_kernel_from, sine_kernel, BesselPair};
use super::model::ModelSpec;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point, Window};
use crate::quadrature::gauss_legendre_on;
use crate::rng::{Purpose, SeedSpec};
use faer::{Mat, Side};
use rand::Rng;

const EIG_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
enum Kern {
    Sine,
    Bessel { alpha: f64, pairs: Vec<BesselPair> },
}

/// Discretised kernel on a window, reusable across replicas.
#[derive(Clone, Debug)]
pub struct DppSampler {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    sqrt_w: Vec<f64>,
    kern: Kern,
    /// Eigenvalues (clamped to [0, 1]) and matching eigenvectors of
    /// W^{1/2} K W^{1/2}, column-major by mode.
    eigenvalues: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl DppSampler {
    pub fn new(model: &ModelSpec, window: &Window, grid_size: usize) -> Result<Self> {
        model.validate()?;
        window.validate()?;
        if grid_size < 2 {
            return Err(Error::invalid("grid_size", "need at least two quadrature nodes"));
        }
        let (lo, hi) = window
            .as_interval()
            .ok_or_else(|| Error::UnsupportedModel("spectral sampler is one-dimensional".into()))?;
        let kern = match model {
            ModelSpec::Sine { beta: 2 } => Kern::Sine,
            ModelSpec::Bessel { alpha } => {
                if lo < 0.0 {
                    return Err(Error::Domain(format!("Bessel field lives on [0, inf), window starts at {lo}")));
                }
                Kern::Bessel { alpha: *alpha, pairs: Vec::new() }
            }
            other => {
                return Err(Error::UnsupportedModel(format!(
                    "{} has no real scalar kernel on a line",
                    other.name()
                )))
            }
        };
        let (nodes, weights) = gauss_legendre_on(grid_size, lo, hi);
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let kern = match kern {
            Kern::Bessel { alpha, .. } => {
                Kern::Bessel { alpha, pairs: nodes.iter().map(|&x| BesselPair::at(alpha, x)).collect() }
            }
            k => k,
        };
        let mut s = Self { lo, hi, nodes, sqrt_w, kern, eigenvalues: Vec::new(), vectors: Vec::new() };
        let n = grid_size;
        let a = Mat::<f64>::from_fn(n, n, |i, j| s.sqrt_w[i] * s.k_node(i, j) * s.sqrt_w[j]);
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numeric { message: format!("{e:?}"), seed: SeedSpec::new(0, 0) })?;
        let lambdas = evd.S().column_vector();
        let u = evd.U();
        for k in 0..n {
            let l = lambdas[k];
            if !(-EIG_TOL..=1.0 + EIG_TOL).contains(&l) {
                return Err(Error::KernelDiscretization { eigenvalue: l, grid_size });
            }
            s.eigenvalues.push(l.clamp(0.0, 1.0));
            s.vectors.push((0..n).map(|i| u[(i, k)]).collect());
        }
        Ok(s)
    }

    fn k_node(&self, i: usize, j: usize) -> f64 {
        match &self.kern {
            Kern::Sine => sine_kernel(self.nodes[i] - self.nodes[j]),
            Kern::Bessel { alpha, pairs } => {
                bessel_kernel_from(*alpha, self.nodes[i], pairs[i], self.nodes[j], pairs[j])
            }
        }
    }

    /// K(x, x_j)·√w_j for every node.
    fn k_row(&self, x: f64) -> Vec<f64> {
        match &self.kern {
            Kern::Sine => self.nodes.iter().zip(&self.sqrt_w).map(|(y, w)| sine_kernel(x - y) * w).collect(),
            Kern::Bessel { alpha, pairs } => {
                let bx = BesselPair::at(*alpha, x);
                self.nodes
                    .iter()
                    .zip(pairs)
                    .zip(&self.sqrt_w)
                    .map(|((&y, &by), w)| bessel_kernel_from(*alpha, x, bx, y, by) * w)
                    .collect()
            }
        }
    }

    /// Eigenvalues of the discretised window kernel.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Expected number of points: the trace of the windowed kernel.
    pub fn expected_count(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn sample(&self, seed: SeedSpec) -> Result<Configuration> {
        let mut rng = seed.rng(Purpose::Sampler);
        let selected: Vec<usize> =
            (0..self.eigenvalues.len()).filter(|&k| rng.random::<f64>() < self.eigenvalues[k]).collect();
        let k = selected.len();
        let mut pts = Vec::with_capacity(k);
        if k > 0 {
            let eval = |x: f64| -> Vec<f64> {
                let row = self.k_row(x);
                selected
                    .iter()
                    .map(|&m| {
                        let v = &self.vectors[m];
                        row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / self.eigenvalues[m]
                    })
                    .collect()
            };
            // ‖v(x)‖² at the nodes is exact; pad it for the gaps between them.
            let bound = 1.5
                * (0..self.nodes.len())
                    .map(|i| selected.iter().map(|&m| (self.vectors[m][i] / self.sqrt_w[i]).powi(2)).sum::<f64>())
                    .fold(0.0, f64::max);
            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
            let mut proposals = 0usize;
            while basis.len() < k {
                proposals += 1;
                if proposals > 2_000_000 {
                    return Err(Error::Numeric { message: "HKPV rejection sampler stalled".into(), seed });
                }
                let x = self.lo + (self.hi - self.lo) * rng.random::<f64>();
                let mut r = eval(x);
                for e in &basis {
                    let c: f64 = e.iter().zip(&r).map(|(a, b)| a * b).sum();
                    r.iter_mut().zip(e).for_each(|(ri, ei)| *ri -= c * ei);
                }
                let norm2: f64 = r.iter().map(|v| v * v).sum();
                if rng.random::<f64>() * bound < norm2 {
                    let inv = norm2.sqrt().recip();
                    basis.push(r.into_iter().map(|v| v * inv).collect());
                    pts.push(Point::d1(x));
                }
            }
        }
        let radius = self.lo.abs().max(self.hi.abs());
        let n = pts.len();
        Configuration::from_parts(1, pts, vec![false; n], radius)
    }
}

/// One sample of a determinantal field on `window` with `grid_size`
/// quadrature nodes. Build a [`DppSampler`] once when drawing many replicas.
pub fn sample_dpp(model: &ModelSpec, window: &Window, grid_size: usize, seed: SeedSpec) -> Result<Configuration> {
    DppSampler::new(model, window, grid_size)?.sample(seed)
}
