use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;

/// `exp(-1/s)` for `s > 0`, zero otherwise.
pub fn theta(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// C-infinity monotone step: 0 for `s <= 0`, 1 for `s >= 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = theta(s);
        a / (a + theta(1.0 - s))
    }
}

/// The low-pass profile `m_{<=1}`: even, 1 on `|xi| <= 1`, 0 on `|xi| >= 2`.
pub fn low_pass_profile(xi: f64) -> f64 {
    smooth_step(2.0 - xi.abs())
}

type SymbolFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A Fourier multiplier `xi -> m(xi)`.
#[derive(Clone)]
pub enum MultiplierSymbol {
    Constant(f64),
    /// `m_{<=1}(xi / cutoff)`.
    LowPass { cutoff: f64 },
    /// `m_{<=1}(xi / cutoff) - m_{<=1}(2 xi / cutoff)`.
    Band { cutoff: f64 },
    /// `|xi|^{-1/2}`, with `zero_mode` used at `xi = 0`.
    InverseSqrtGradient { zero_mode: f64 },
    /// `exp(-i xi^2 t)`, the symbol of `e^{it Delta}`.
    FreePropagator { time: f64 },
    Custom { name: String, rule: Arc<SymbolFn> },
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiplierSymbol({})", self.name())
    }
}

impl MultiplierSymbol {
    pub fn custom(name: impl Into<String>, rule: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        MultiplierSymbol::Custom {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    /// `|nabla|^{-1/2}` with the zero mode pinned to the smallest nonzero
    /// lattice magnitude of `grid`.
    pub fn inverse_sqrt_gradient(grid: &Grid) -> Self {
        let xi_min = 2.0 * std::f64::consts::PI / grid.circumference();
        MultiplierSymbol::InverseSqrtGradient {
            zero_mode: xi_min.powf(-0.5),
        }
    }

    pub fn name(&self) -> String {
        match self {
            MultiplierSymbol::Constant(c) => format!("constant({c})"),
            MultiplierSymbol::LowPass { cutoff } => format!("low-pass(N={cutoff})"),
            MultiplierSymbol::Band { cutoff } => format!("band(N={cutoff})"),
            MultiplierSymbol::InverseSqrtGradient { .. } => "inverse-sqrt-gradient".to_string(),
            MultiplierSymbol::FreePropagator { time } => format!("free-propagator(t={time})"),
            MultiplierSymbol::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, xi: f64) -> Complex64 {
        match self {
            MultiplierSymbol::Constant(c) => Complex64::new(*c, 0.0),
            MultiplierSymbol::LowPass { cutoff } => Complex64::new(low_pass_profile(xi / cutoff), 0.0),
            MultiplierSymbol::Band { cutoff } => Complex64::new(
                low_pass_profile(xi / cutoff) - low_pass_profile(2.0 * xi / cutoff),
                0.0,
            ),
            MultiplierSymbol::InverseSqrtGradient { zero_mode } => {
                if xi == 0.0 {
                    Complex64::new(*zero_mode, 0.0)
                } else {
                    Complex64::new(xi.abs().powf(-0.5), 0.0)
                }
            }
            MultiplierSymbol::FreePropagator { time } => Complex64::from_polar(1.0, -xi * xi * time),
            MultiplierSymbol::Custom { rule, .. } => rule(xi),
        }
    }

    /// Real symbol values on the lattice of `grid`, in spectral index order.
    /// Only meaningful for real-valued symbols; the imaginary part is dropped.
    pub fn sample_real(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.points()).map(|i| self.eval(grid.wavenumber(i)).re).collect()
    }

    pub fn sample(&self, grid: &Grid) -> Vec<Complex64> {
        (0..grid.points()).map(|i| self.eval(grid.wavenumber(i))).collect()
    }
}
