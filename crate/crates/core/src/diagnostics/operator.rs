use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::spectral::{ComplexField, Grid, MultiplierSymbol, Representation, WindowEmbedding};

/// A linear map between fields with an available adjoint, both spaces
/// carrying the `dx`-weighted inner product.
pub trait LinearOperator {
    fn domain(&self) -> &Grid;
    fn codomain(&self) -> &Grid;
    fn apply(&self, x: &ComplexField) -> Result<ComplexField>;
    fn apply_adjoint(&self, y: &ComplexField) -> Result<ComplexField>;
}

/// One elementary self-adjoint or embedding factor.
#[derive(Debug, Clone)]
pub enum Factor {
    Multiply { grid: Grid, weights: Vec<f64> },
    Fourier { grid: Grid, symbol: Vec<f64> },
    Lift(WindowEmbedding),
    Restrict(WindowEmbedding),
}

impl Factor {
    pub fn multiply(grid: &Grid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.points() {
            return Err(LabError::GridMismatch(format!(
                "multiplier has {} weights for {} points",
                weights.len(),
                grid.points()
            )));
        }
        Ok(Factor::Multiply { grid: grid.clone(), weights })
    }

    /// A real Fourier multiplier sampled on `grid`.
    pub fn fourier(grid: &Grid, symbol: &MultiplierSymbol) -> Self {
        Factor::Fourier {
            grid: grid.clone(),
            symbol: symbol.sample_real(grid),
        }
    }

    fn domain(&self) -> &Grid {
        match self {
            Factor::Multiply { grid, .. } | Factor::Fourier { grid, .. } => grid,
            Factor::Lift(e) => e.torus(),
            Factor::Restrict(e) => e.line(),
        }
    }

    fn codomain(&self) -> &Grid {
        match self {
            Factor::Multiply { grid, .. } | Factor::Fourier { grid, .. } => grid,
            Factor::Lift(e) => e.line(),
            Factor::Restrict(e) => e.torus(),
        }
    }

    fn adjoint(&self) -> Factor {
        match self {
            Factor::Lift(e) => Factor::Restrict(e.clone()),
            Factor::Restrict(e) => Factor::Lift(e.clone()),
            f => f.clone(),
        }
    }

    fn apply(&self, x: &ComplexField) -> Result<ComplexField> {
        match self {
            Factor::Multiply { grid, weights } => {
                grid.ensure_same(x.grid())?;
                Ok(x.multiply_real(weights))
            }
            Factor::Fourier { grid, symbol } => {
                grid.ensure_same(x.grid())?;
                Ok(x.multiply_spectral(symbol).into_physical())
            }
            Factor::Lift(e) => e.lift(x),
            Factor::Restrict(e) => e.restrict(x),
        }
    }
}

/// `sum_k c_k F_{k,n} ... F_{k,1}`: factors of each term apply in list order.
#[derive(Debug, Clone)]
pub struct LinearMap {
    domain: Grid,
    codomain: Grid,
    terms: Vec<(f64, Vec<Factor>)>,
}

impl LinearMap {
    pub fn identity(grid: &Grid) -> Self {
        LinearMap {
            domain: grid.clone(),
            codomain: grid.clone(),
            terms: vec![(1.0, Vec::new())],
        }
    }

    pub fn chain(domain: &Grid, factors: Vec<Factor>) -> Result<Self> {
        let mut at = domain.clone();
        for f in &factors {
            at.ensure_same(f.domain())?;
            at = f.codomain().clone();
        }
        Ok(LinearMap {
            domain: domain.clone(),
            codomain: at,
            terms: vec![(1.0, factors)],
        })
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.0 *= c);
        self
    }

    pub fn plus(mut self, other: LinearMap) -> Result<Self> {
        self.domain.ensure_same(&other.domain)?;
        self.codomain.ensure_same(&other.codomain)?;
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn minus(self, other: LinearMap) -> Result<Self> {
        self.plus(other.scaled(-1.0))
    }

    /// `[a, b] = a b - b a` for maps on one grid.
    pub fn commutator(a: &Factor, b: &Factor) -> Result<Self> {
        let g = a.domain().clone();
        LinearMap::chain(&g, vec![b.clone(), a.clone()])?.minus(LinearMap::chain(&g, vec![a.clone(), b.clone()])?)
    }

    pub fn adjoint(&self) -> LinearMap {
        LinearMap {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            terms: self
                .terms
                .iter()
                .map(|(c, fs)| (*c, fs.iter().rev().map(Factor::adjoint).collect()))
                .collect(),
        }
    }

    fn eval(&self, x: &ComplexField) -> Result<ComplexField> {
        self.domain.ensure_same(x.grid())?;
        let mut out = ComplexField::zeros(&self.codomain);
        for (c, factors) in &self.terms {
            let mut v = x.to_physical();
            for f in factors {
                v = f.apply(&v)?;
            }
            out = out.add(&v.to_physical().scaled(Complex64::new(*c, 0.0)))?;
        }
        Ok(out)
    }
}

impl LinearOperator for LinearMap {
    fn domain(&self) -> &Grid {
        &self.domain
    }

    fn codomain(&self) -> &Grid {
        &self.codomain
    }

    fn apply(&self, x: &ComplexField) -> Result<ComplexField> {
        self.eval(x)
    }

    fn apply_adjoint(&self, y: &ComplexField) -> Result<ComplexField> {
        self.adjoint().eval(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Relative change between successive estimates.
    pub tol: f64,
    /// Absolute change; stops iterating on operators that vanish to roundoff.
    pub atol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tol: 1e-12,
            atol: 1e-14,
            max_iter: 20_000,
            seed: 0x5eed,
        }
    }
}

/// Krylov dimension between explicit restarts.
const RESTART: usize = 240;
/// Ritz values are extracted every this many Lanczos steps.
const CHECK_EVERY: usize = 8;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest eigenvalue of the Lanczos tridiagonal and the last component of its eigenvector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let top = eig.eigenvalues.imax();
    (eig.eigenvalues[top], eig.eigenvectors.column(top).iter().copied().collect())
}

/// Largest singular value: Lanczos on `A* A` with full reorthogonalization
/// (a Krylov-accelerated power iteration), restarted from the current Ritz
/// vector. `max_iter` bounds the total number of `A* A` applications.
pub fn operator_norm(op: &dyn LinearOperator, opts: &PowerIteration) -> Result<f64> {
    let grid = op.domain().clone();
    let n = grid.points();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let apply_normal = |x: &[Complex64]| -> Result<Vec<Complex64>> {
        let f = ComplexField::new(grid.clone(), x.to_vec(), Representation::Physical)?;
        let y = op.apply_adjoint(&op.apply(&f)?)?.to_physical().into_values();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(LabError::numeric("operator produced a non-finite value"));
        }
        Ok(y)
    };
    let mut used = 0;
    let mut theta = f64::NAN;
    while used < opts.max_iter {
        let s0 = norm(&start);
        if s0 == 0.0 {
            return Ok(0.0);
        }
        let mut basis = vec![start.iter().map(|v| v / s0).collect::<Vec<_>>()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let kmax = RESTART.min(n).min(opts.max_iter - used);
        loop {
            let j = basis.len() - 1;
            let mut w = apply_normal(&basis[j])?;
            used += 1;
            alpha.push(dot(&basis[j], &w).re);
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let b = norm(&w);
            let k = alpha.len();
            let invariant = b <= 1e-14 * alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())) || k == n;
            if invariant || k == kmax || k % CHECK_EVERY == 0 {
                let (t, s) = top_ritz(&alpha, &beta);
                let residual = b * s[k - 1].abs();
                theta = t.max(0.0);
                // Ritz value error is at most the residual; compare on the scale of sigma^2.
                if invariant || residual <= opts.tol * theta + opts.atol * opts.atol {
                    return Ok(theta.sqrt());
                }
                if k == kmax {
                    start = vec![Complex64::new(0.0, 0.0); n];
                    for (q, c) in basis.iter().zip(&s) {
                        start.iter_mut().zip(q).for_each(|(x, qi)| *x += *c * qi);
                    }
                    break;
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
    }
    Err(LabError::numeric(format!(
        "operator norm did not converge in {} iterations (last estimate {})",
        opts.max_iter,
        theta.sqrt()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::pairing;

    fn dense(op: &LinearMap) -> DMatrix<Complex64> {
        let (n, m) = (op.domain().points(), op.codomain().points());
        let mut a = DMatrix::zeros(m, n);
        for j in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            let col = op.apply(&ComplexField::from_physical(op.domain().clone(), e).unwrap()).unwrap();
            for (i, v) in col.values().iter().enumerate() {
                a[(i, j)] = *v;
            }
        }
        a
    }

    fn bump(grid: &Grid) -> Vec<f64> {
        grid.positions()
            .iter()
            .map(|&x| crate::spectral::smooth_step(3.0 - x.abs()))
            .collect()
    }

    #[test]
    fn trivial_norms() {
        let g = Grid::new(16.0, 64).unwrap();
        let p = PowerIteration::default();
        assert!((operator_norm(&LinearMap::identity(&g), &p).unwrap() - 1.0).abs() < 1e-14);
        let half = LinearMap::chain(&g, vec![Factor::fourier(&g, &MultiplierSymbol::Constant(0.5))]).unwrap();
        assert!((operator_norm(&half, &p).unwrap() - 0.5).abs() < 1e-14);
        let zero = LinearMap::chain(&g, vec![Factor::multiply(&g, vec![0.0; 64]).unwrap()]).unwrap();
        assert_eq!(operator_norm(&zero, &p).unwrap(), 0.0);
    }

    #[test]
    fn adjoint_by_construction() {
        let torus = Grid::new(16.0, 64).unwrap();
        let line = Grid::new(64.0, 256).unwrap();
        let emb = WindowEmbedding::new(&torus, &line, 6.0).unwrap();
        let chi = Factor::multiply(&torus, bump(&torus)).unwrap();
        let a = LinearMap::chain(
            &torus,
            vec![
                chi.clone(),
                Factor::Lift(emb.clone()),
                Factor::fourier(&line, &MultiplierSymbol::LowPass { cutoff: 2.0 }),
                Factor::Restrict(emb),
                chi,
            ],
        )
        .unwrap();
        let x = ComplexField::from_fn(&torus, |x| Complex64::new(x.sin(), 0.2 * x)).unwrap();
        let y = ComplexField::from_fn(&torus, |x| Complex64::new((0.4 * x).cos(), -x.cos())).unwrap();
        let lhs = pairing(&y, &a.apply(&x).unwrap()).unwrap();
        let rhs = pairing(&a.apply_adjoint(&y).unwrap(), &x).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(LinearMap::chain(&torus, vec![Factor::fourier(&line, &MultiplierSymbol::Constant(1.0))]).is_err());
    }

    #[test]
    fn commutator_matches_dense_svd() {
        let g = Grid::new(32.0, 256).unwrap();
        let chi = Factor::multiply(&g, bump(&g)).unwrap();
        for cutoff in [1.0, 2.0] {
            let p = Factor::fourier(&g, &MultiplierSymbol::LowPass { cutoff });
            let c = LinearMap::commutator(&chi, &p).unwrap();
            let est = operator_norm(&c, &PowerIteration::default()).unwrap();
            let exact = dense(&c).singular_values().max();
            assert!((est - exact).abs() <= 1e-6 * exact, "{est} vs {exact}");
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = Grid::new(32.0, 256).unwrap();
        let chi = Factor::multiply(&g, bump(&g)).unwrap();
        let p = Factor::fourier(&g, &MultiplierSymbol::LowPass { cutoff: 2.0 });
        let c = LinearMap::commutator(&chi, &p).unwrap();
        let opts = PowerIteration {
            max_iter: 2,
            ..Default::default()
        };
        match operator_norm(&c, &opts) {
            Err(LabError::Numeric(msg)) => assert!(msg.contains("last estimate")),
            other => panic!("{other:?}"),
        }
    }
}
