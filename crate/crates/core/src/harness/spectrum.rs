//! Exact generator, stationary law and total-variation curve of the heat-bath
//! chain on a fully enumerated hexagon.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dynamics::SITE_RATE;
use crate::error::{Error, Result};
use crate::hexlattice::{enumerate_all, neighbour_bounds, volume, HeightField, HexDomain};

/// Largest state space handled by [`exact_spectrum`].
pub const MAX_STATES: usize = 10_000;

#[derive(Clone, Debug)]
pub struct ChainSpectrum {
    pub states: Vec<HeightField>,
    /// Rate matrix, rows indexed by the source state.
    pub generator: DMatrix<f64>,
    /// Solution of πQ = 0, Σπ = 1.
    pub stationary: DVector<f64>,
    /// Declared target e^{(q/scale)·volume}/Z.
    pub target: DVector<f64>,
    pub gap: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    sqrt_target: DVector<f64>,
}

/// Spectrum with the tilt scale set to na, as in the chain default.
pub fn exact_spectrum(d: &Arc<HexDomain>, q: f64) -> Result<ChainSpectrum> {
    exact_spectrum_scaled(d, q, d.sides().0 as f64)
}

pub fn exact_spectrum_scaled(d: &Arc<HexDomain>, q: f64, scale: f64) -> Result<ChainSpectrum> {
    let states = enumerate_all(d, MAX_STATES)?;
    let n = states.len();
    let index: HashMap<&[i32], usize> = states.iter().enumerate().map(|(i, s)| (s.raw(), i)).collect();
    let p_up = 1.0 / (1.0 + (-q / scale).exp());
    let (up, down) = (SITE_RATE * p_up, SITE_RATE * (1.0 - p_up));
    let width = d.width();
    let mut gen = DMatrix::zeros(n, n);
    let mut h = Vec::new();
    for (a, s) in states.iter().enumerate() {
        for &site in d.interior() {
            let i = site as usize;
            h.clear();
            h.extend_from_slice(s.raw());
            let (lo, hi) = neighbour_bounds(&h, width, i);
            if lo == hi {
                continue;
            }
            let (to, rate) = if h[i] == lo { (hi, up) } else { (lo, down) };
            h[i] = to;
            let b = index[h.as_slice()];
            gen[(a, b)] += rate;
            gen[(a, a)] -= rate;
        }
    }

    let t = q / scale;
    let vols: Vec<f64> = states.iter().map(|s| volume(s) as f64).collect();
    let vmax = vols.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut target = DVector::from_iterator(n, vols.iter().map(|v| (t * (v - vmax)).exp()));
    target /= target.sum();

    // πQ = 0 with the last equation replaced by normalisation
    let mut a = gen.transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let stationary = a.lu().solve(&rhs).ok_or_else(|| Error::Invalid("singular stationary system".into()))?;

    let sqrt_target = target.map(f64::sqrt);
    let mut sym = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = sqrt_target[i] * gen[(i, j)] / sqrt_target[j];
        }
    }
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let gap = if n > 1 { -sorted[1] } else { 0.0 };
    Ok(ChainSpectrum {
        states,
        generator: gen,
        stationary,
        target,
        gap,
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        sqrt_target,
    })
}

impl ChainSpectrum {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn row_sum_residual(&self) -> f64 {
        self.generator.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    }

    /// max |(π_target Q)_j|.
    pub fn stationarity_residual(&self) -> f64 {
        (self.target.transpose() * &self.generator).amax()
    }

    /// max |π_i Q_ij − π_j Q_ji| for the target law.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r = self.target[i] * self.generator[(i, j)] - self.target[j] * self.generator[(j, i)];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// max |π_solved − π_target|.
    pub fn stationary_error(&self) -> f64 {
        (&self.stationary - &self.target).amax()
    }

    /// Transition matrix e^{tQ} from the eigen-decomposition.
    pub fn transition(&self, t: f64) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let e = DMatrix::from_diagonal(&self.eigenvalues.map(|l| (l * t).exp()));
        let s = v * e * v.transpose();
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| s[(i, j)] * self.sqrt_target[j] / self.sqrt_target[i])
    }

    /// max |e^{tQ} (eigen) − e^{tQ} (Padé)|.
    pub fn expm_discrepancy(&self, t: f64) -> f64 {
        (self.transition(t) - (&self.generator * t).exp()).amax()
    }

    /// ‖P_t(start, ·) − π‖_TV for every start state.
    pub fn tv_by_start(&self, t: f64) -> Vec<f64> {
        let p = self.transition(t);
        (0..self.len())
            .map(|i| 0.5 * (0..self.len()).map(|j| (p[(i, j)] - self.target[j]).abs()).sum::<f64>())
            .collect()
    }

    /// Worst-case total variation distance at time t.
    pub fn tv(&self, t: f64) -> f64 {
        self.tv_by_start(t).into_iter().fold(0.0, f64::max)
    }

    pub fn tv_curve(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.tv(t)).collect()
    }

    /// Distribution at time t from `start`.
    pub fn law_from(&self, start: usize, t: f64) -> Vec<f64> {
        let p = self.transition(t);
        (0..self.len()).map(|j| p[(start, j)]).collect()
    }

    pub fn state_index(&self, f: &HeightField) -> Option<usize> {
        self.states.iter().position(|s| s.raw() == f.raw())
    }
}

/// First t with worst-case TV ≤ ε, by bisection on the exact curve.
pub fn tmix_exact(spec: &ChainSpectrum, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Invalid(format!("ε = {eps} outside (0, 1)")));
    }
    if spec.tv(0.0) <= eps {
        return Ok(0.0);
    }
    let mut hi = 1.0 / spec.gap.max(1e-12);
    while spec.tv(hi) > eps {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Invalid("total variation does not reach ε".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if spec.tv(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// (t_mix(ε'), t_mix(ε)·⌈|ln ε'|/|ln 2ε|⌉) for 0 < ε' ≤ ε < 1/2.
pub fn submultiplicativity(spec: &ChainSpectrum, eps: f64, eps_small: f64) -> Result<(f64, f64)> {
    if !(0.0 < eps_small && eps_small <= eps && eps < 0.5) {
        return Err(Error::Invalid(format!("need 0 < ε' ≤ ε < 1/2, got ε={eps} ε'={eps_small}")));
    }
    let factor = (eps_small.ln().abs() / (2.0 * eps).ln().abs()).ceil();
    Ok((tmix_exact(spec, eps_small)?, tmix_exact(spec, eps)? * factor))
}
