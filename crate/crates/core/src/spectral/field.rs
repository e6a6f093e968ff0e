use num_complex::Complex64;

use super::grid::Grid;
use super::symbol::MultiplierSymbol;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToSpectral,
    ToPhysical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionKind {
    /// `P_{<=N}`
    Low,
    /// `P_N = P_{<=N} - P_{<=N/2}`
    Band,
}

/// One time slice of a complex field on a [`Grid`].
///
/// Spectral coefficients use the unitary DFT, so `sum |u_m|^2` is the same in
/// both representations and the physical mass is `dx` times that sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
    repr: Representation,
}

fn check_finite(values: &[Complex64]) -> Result<()> {
    match values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        None => Ok(()),
        Some(i) => Err(LabError::numeric(format!("non-finite sample at index {i}"))),
    }
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>, repr: Representation) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(LabError::config(format!(
                "field has {} samples, grid has {} points",
                values.len(),
                grid.points()
            )));
        }
        check_finite(&values)?;
        Ok(ComplexField { grid, values, repr })
    }

    pub fn from_physical(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, values, Representation::Physical)
    }

    pub fn from_spectral(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, values, Representation::Spectral)
    }

    /// Samples `f(x_m)` at the grid positions.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.points()).map(|m| f(grid.position(m))).collect();
        Self::from_physical(grid.clone(), values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        ComplexField {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.points()],
            repr: Representation::Physical,
        }
    }

    /// Plane wave `a e^{i xi_k x}` for integer mode `k`.
    pub fn plane_wave(grid: &Grid, amplitude: Complex64, k: i64) -> Result<Self> {
        let xi = 2.0 * std::f64::consts::PI * k as f64 / grid.circumference();
        Self::from_fn(grid, |x| amplitude * Complex64::from_polar(1.0, xi * x))
    }

    /// Skips the finite check; callers guarantee finiteness.
    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<Complex64>, repr: Representation) -> Self {
        debug_assert_eq!(values.len(), grid.points());
        ComplexField { grid, values, repr }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn into_spectral(mut self) -> Self {
        if self.repr == Representation::Physical {
            self.grid.fft_forward(&mut self.values);
            self.repr = Representation::Spectral;
        }
        self
    }

    pub fn into_physical(mut self) -> Self {
        if self.repr == Representation::Spectral {
            self.grid.fft_inverse(&mut self.values);
            self.repr = Representation::Physical;
        }
        self
    }

    pub fn to_spectral(&self) -> Self {
        self.clone().into_spectral()
    }

    pub fn to_physical(&self) -> Self {
        self.clone().into_physical()
    }

    pub fn into_representation(self, repr: Representation) -> Self {
        match repr {
            Representation::Physical => self.into_physical(),
            Representation::Spectral => self.into_spectral(),
        }
    }

    /// `sum |values|^2`, identical in both representations.
    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `int |u|^2 dx`
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.sum_sq()
    }

    /// L^2 norm, the square root of the mass.
    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        let phys;
        let vals = match self.repr {
            Representation::Physical => &self.values,
            Representation::Spectral => {
                phys = self.to_physical();
                &phys.values
            }
        };
        vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let values = self.values.iter().map(|v| v * c).collect();
        ComplexField::from_parts_unchecked(self.grid.clone(), values, self.repr)
    }

    fn zip_with(&self, other: &ComplexField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let other = other.clone().into_representation(self.repr);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(ComplexField::from_parts_unchecked(self.grid.clone(), values, self.repr))
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product with real samples `w(x_m)`; result is physical.
    pub fn multiply_real(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.grid.points(), "weight length must match grid");
        let mut out = self.to_physical();
        out.values.iter_mut().zip(weights).for_each(|(v, w)| *v *= *w);
        out
    }

    /// Spectral multiplication by precomputed lattice values; result is spectral.
    pub fn multiply_spectral(&self, symbol: &[f64]) -> Self {
        assert_eq!(symbol.len(), self.grid.points(), "symbol length must match grid");
        let mut out = self.to_spectral();
        out.values.iter_mut().zip(symbol).for_each(|(v, m)| *v *= *m);
        out
    }

    pub fn is_finite(&self) -> bool {
        check_finite(&self.values).is_ok()
    }
}

/// Unitary DFT in the requested direction.
pub fn transform(f: &ComplexField, direction: Direction) -> Result<ComplexField> {
    check_finite(f.values())?;
    match (direction, f.representation()) {
        (Direction::ToSpectral, Representation::Physical) => Ok(f.to_spectral()),
        (Direction::ToPhysical, Representation::Spectral) => Ok(f.to_physical()),
        (d, r) => Err(LabError::config(format!("cannot apply {d:?} to a field in {r:?} representation"))),
    }
}

/// Multiplies spectral coefficient `k` by `m(xi_k)`; returns a spectral field.
pub fn apply_symbol(f: &ComplexField, symbol: &MultiplierSymbol) -> Result<ComplexField> {
    let mut out = f.to_spectral();
    let grid = out.grid.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        let m = symbol.eval(grid.wavenumber(i));
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(LabError::numeric(format!(
                "symbol {} is not finite at xi = {}",
                symbol.name(),
                grid.wavenumber(i)
            )));
        }
        *v *= m;
    }
    Ok(out)
}

/// Littlewood-Paley projection `P_{<=N}` or the dyadic band `P_N`.
pub fn lp_project(f: &ComplexField, cutoff: f64, kind: ProjectionKind) -> Result<ComplexField> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(LabError::config(format!("projection cutoff must be positive, got {cutoff}")));
    }
    let symbol = match kind {
        ProjectionKind::Low => MultiplierSymbol::LowPass { cutoff },
        ProjectionKind::Band => MultiplierSymbol::Band { cutoff },
    };
    apply_symbol(f, &symbol)
}

/// Sharp truncation to the modes `|xi| <= band` (a small relative slack
/// keeps lattice points that sit exactly on the edge); returns a spectral field.
pub fn sharp_truncate(f: &ComplexField, band: f64) -> ComplexField {
    let mut out = f.to_spectral();
    let edge = band * (1.0 + 1e-12);
    let grid = out.grid.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        if grid.wavenumber(i).abs() > edge {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// `e^{it Delta} f`; keeps the input representation.
pub fn free_evolve(f: &ComplexField, t: f64) -> Result<ComplexField> {
    let repr = f.representation();
    let out = apply_symbol(f, &MultiplierSymbol::FreePropagator { time: t })?;
    Ok(out.into_representation(repr))
}

/// `<l, u> = dx sum conj(l_m) u_m`
pub fn pairing(l: &ComplexField, u: &ComplexField) -> Result<Complex64> {
    l.grid.ensure_same(&u.grid)?;
    let u = u.clone().into_representation(l.repr);
    let s: Complex64 = l.values.iter().zip(&u.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * l.grid.dx())
}

/// `omega(u, v) = Im int u conj(v) dx`
pub fn symplectic_form(u: &ComplexField, v: &ComplexField) -> Result<f64> {
    Ok(pairing(v, u)?.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.points())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexField::from_physical(grid.clone(), values).unwrap()
    }

    fn rel_diff(a: &ComplexField, b: &ComplexField) -> f64 {
        a.sub(b).unwrap().l2_norm() / b.l2_norm()
    }

    #[test]
    fn constant_goes_to_zero_mode() {
        let g = Grid::new(5.0, 32).unwrap();
        let f = ComplexField::from_fn(&g, |_| Complex64::new(1.5, -0.5)).unwrap();
        let s = transform(&f, Direction::ToSpectral).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            if i == 0 {
                assert!(v.norm() > 1.0);
            } else {
                assert!(v.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn plane_wave_is_single_mode() {
        let g = Grid::new(7.0, 64).unwrap();
        let f = ComplexField::plane_wave(&g, Complex64::new(1.0, 0.0), 1).unwrap();
        let s = f.to_spectral();
        let idx = g.index_of_mode(1).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            if i == idx {
                assert!((v.norm() - 8.0).abs() < 1e-12);
            } else {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn direction_must_match_representation() {
        let g = Grid::new(1.0, 8).unwrap();
        let f = ComplexField::zeros(&g);
        assert!(transform(&f, Direction::ToPhysical).is_err());
        let bad = vec![Complex64::new(f64::NAN, 0.0); 8];
        assert!(matches!(ComplexField::from_physical(g, bad), Err(LabError::Numeric(_))));
    }

    #[test]
    fn trivial_symbols() {
        let g = Grid::new(10.0, 64).unwrap();
        let f = random_field(&g, 1);
        let id = apply_symbol(&f, &MultiplierSymbol::Constant(1.0)).unwrap();
        assert!(rel_diff(&id.to_physical(), &f) < 1e-14);
        let zero = apply_symbol(&f, &MultiplierSymbol::Constant(0.0)).unwrap();
        assert_eq!(zero.sum_sq(), 0.0);
        let nan = MultiplierSymbol::custom("nan", |_| Complex64::new(f64::NAN, 0.0));
        assert!(matches!(apply_symbol(&f, &nan), Err(LabError::Numeric(_))));
    }

    #[test]
    fn wide_low_pass_is_identity() {
        let g = Grid::new(10.0, 64).unwrap();
        let n = g.max_wavenumber();
        // every lattice point sits on the plateau
        let sym = MultiplierSymbol::LowPass { cutoff: n };
        assert!(sym.sample_real(&g).iter().all(|&m| m == 1.0));
        let f = random_field(&g, 2);
        let p = lp_project(&f, n, ProjectionKind::Low).unwrap();
        assert!(rel_diff(&p.to_physical(), &f) < 1e-14);
        assert!(lp_project(&f, 0.0, ProjectionKind::Low).is_err());
    }

    #[test]
    fn band_projections_telescope() {
        let g = Grid::new(20.0, 128).unwrap();
        let f = random_field(&g, 3);
        let lowest = 0.25;
        let mut acc = lp_project(&f, lowest, ProjectionKind::Low).unwrap();
        let mut n = 2.0 * lowest;
        while n / 2.0 <= g.max_wavenumber() {
            acc = acc.add(&lp_project(&f, n, ProjectionKind::Band).unwrap()).unwrap();
            n *= 2.0;
        }
        assert!(rel_diff(&acc.to_physical(), &f) < 1e-10);
    }

    #[test]
    fn plateau_plane_wave_unchanged() {
        let g = Grid::new(16.0, 64).unwrap();
        let f = ComplexField::plane_wave(&g, Complex64::new(0.3, 0.4), 3).unwrap();
        let xi3 = 2.0 * std::f64::consts::PI * 3.0 / 16.0;
        let p = lp_project(&f, xi3, ProjectionKind::Low).unwrap();
        assert!(rel_diff(&p.to_physical(), &f) < 1e-14);
    }

    #[test]
    fn free_evolution_of_plane_wave() {
        let g = Grid::new(12.0, 64).unwrap();
        let k = 2;
        let xi = 2.0 * std::f64::consts::PI * k as f64 / 12.0;
        let f = ComplexField::plane_wave(&g, Complex64::new(1.0, 0.0), k).unwrap();
        assert!(rel_diff(&free_evolve(&f, 0.0).unwrap(), &f) < 1e-15);
        let t = 0.37;
        let out = free_evolve(&f, t).unwrap();
        let exact = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, xi * x - xi * xi * t)).unwrap();
        assert!(rel_diff(&out, &exact) < 1e-13);
    }

    #[test]
    fn pairing_basics() {
        let g = Grid::new(9.0, 32).unwrap();
        let l = random_field(&g, 4);
        assert!((pairing(&l, &l).unwrap().re - l.mass()).abs() < 1e-12 * l.mass());
        assert_eq!(pairing(&l, &ComplexField::zeros(&g)).unwrap(), Complex64::new(0.0, 0.0));
        let a = ComplexField::plane_wave(&g, Complex64::new(1.0, 0.0), 2).unwrap();
        let b = ComplexField::plane_wave(&g, Complex64::new(1.0, 0.0), 5).unwrap();
        assert!(pairing(&a, &b).unwrap().norm() < 1e-12);
        let other = Grid::new(9.0, 64).unwrap();
        assert!(matches!(
            pairing(&l, &ComplexField::zeros(&other)),
            Err(LabError::GridMismatch(_))
        ));
    }

    #[test]
    fn symplectic_form_basics() {
        let g = Grid::new(9.0, 32).unwrap();
        let u = random_field(&g, 5);
        let v = random_field(&g, 6);
        assert_eq!(symplectic_form(&u, &u).unwrap(), 0.0);
        let iu = u.scaled(Complex64::i());
        assert!((symplectic_form(&u, &iu).unwrap() + u.mass()).abs() < 1e-12);
        let a = symplectic_form(&u, &v).unwrap();
        let b = symplectic_form(&v, &u).unwrap();
        assert!((a + b).abs() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_and_parseval(seed in any::<u64>(), log_m in 3usize..10) {
            let g = Grid::new(13.0, 1 << log_m).unwrap();
            let f = random_field(&g, seed);
            let s = transform(&f, Direction::ToSpectral).unwrap();
            prop_assert!((s.mass() - f.mass()).abs() <= 1e-12 * f.mass());
            let back = transform(&s, Direction::ToPhysical).unwrap();
            prop_assert!(rel_diff(&back, &f) <= 1e-12);
        }

        #[test]
        fn free_evolution_group_and_isometry(seed in any::<u64>(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
            let g = Grid::new(11.0, 64).unwrap();
            let f = random_field(&g, seed);
            let a = free_evolve(&free_evolve(&f, t1).unwrap(), t2).unwrap();
            let b = free_evolve(&f, t1 + t2).unwrap();
            prop_assert!(rel_diff(&a, &b) <= 1e-12);
            prop_assert!((b.mass() - f.mass()).abs() <= 1e-13 * f.mass());
        }

        #[test]
        fn omega_is_imaginary_part_of_pairing(seed in any::<u64>()) {
            let g = Grid::new(6.0, 32).unwrap();
            let u = random_field(&g, seed);
            let v = random_field(&g, seed.wrapping_add(1));
            let w = symplectic_form(&u, &v).unwrap();
            prop_assert!((w - pairing(&v, &u).unwrap().im).abs() <= 1e-13);
        }

        #[test]
        fn low_pass_idempotent_off_transition(seed in any::<u64>(), cutoff in 0.5f64..4.0) {
            let g = Grid::new(17.0, 128).unwrap();
            let f = random_field(&g, seed).to_spectral();
            let once = lp_project(&f, cutoff, ProjectionKind::Low).unwrap();
            let twice = lp_project(&once, cutoff, ProjectionKind::Low).unwrap();
            let m = MultiplierSymbol::LowPass { cutoff }.sample_real(&g);
            let sup = m.iter().map(|v| (v * v - v).abs()).fold(0.0, f64::max);
            let diff = twice.sub(&once).unwrap();
            prop_assert!(diff.l2_norm() <= sup * f.l2_norm() + 1e-14);
            for (i, mi) in m.iter().enumerate() {
                if *mi == 0.0 || *mi == 1.0 {
                    prop_assert!((twice.values()[i] - once.values()[i]).norm() == 0.0);
                }
            }
        }
    }
}
