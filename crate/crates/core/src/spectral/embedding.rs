use num_complex::Complex64;

use super::field::{ComplexField, Representation};
use super::grid::Grid;
use crate::error::{LabError, Result};

/// Identification of a torus `T_L` with the window `[c - L, c)` of a wider
/// torus standing in for the line. Both grids must share the spacing `dx`.
///
/// `lift` extends by zero outside the window, `restrict` reads the window
/// back; with the `dx`-weighted inner product they are adjoint.
#[derive(Debug, Clone)]
pub struct WindowEmbedding {
    torus: Grid,
    line: Grid,
    center: f64,
    map: Vec<usize>,
}

impl WindowEmbedding {
    pub fn new(torus: &Grid, line: &Grid, center: f64) -> Result<Self> {
        let (dx, dy) = (torus.dx(), line.dx());
        if (dx - dy).abs() > 1e-12 * dx {
            return Err(LabError::GridMismatch(format!(
                "window embedding needs equal spacing, got {dx} and {dy}"
            )));
        }
        let l = torus.circumference();
        let half = line.circumference() / 2.0;
        if center - l < -half - 0.5 * dx || center > half + 0.5 * dx {
            return Err(LabError::config(format!(
                "window [{}, {}) does not fit in a surrogate of length {}",
                center - l,
                center,
                line.circumference()
            )));
        }
        let map = (0..torus.points())
            .map(|m| {
                let x = torus.position(m);
                let x = if x < center { x } else { x - l };
                line.nearest_index(x)
            })
            .collect();
        Ok(WindowEmbedding {
            torus: torus.clone(),
            line: line.clone(),
            center,
            map,
        })
    }

    pub fn torus(&self) -> &Grid {
        &self.torus
    }

    pub fn line(&self) -> &Grid {
        &self.line
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Line index of each torus sample.
    pub fn index_map(&self) -> &[usize] {
        &self.map
    }

    pub fn lift(&self, f: &ComplexField) -> Result<ComplexField> {
        self.torus.ensure_same(f.grid())?;
        let phys = f.to_physical();
        let mut out = vec![Complex64::new(0.0, 0.0); self.line.points()];
        for (v, &j) in phys.values().iter().zip(&self.map) {
            out[j] = *v;
        }
        Ok(ComplexField::from_parts_unchecked(self.line.clone(), out, Representation::Physical))
    }

    pub fn restrict(&self, g: &ComplexField) -> Result<ComplexField> {
        self.line.ensure_same(g.grid())?;
        let phys = g.to_physical();
        let out = self.map.iter().map(|&j| phys.values()[j]).collect();
        Ok(ComplexField::from_parts_unchecked(self.torus.clone(), out, Representation::Physical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::pairing;

    #[test]
    fn lift_and_restrict_are_adjoint() {
        let torus = Grid::new(16.0, 64).unwrap();
        let line = Grid::new(64.0, 256).unwrap();
        let emb = WindowEmbedding::new(&torus, &line, 6.0).unwrap();
        let f = ComplexField::from_fn(&torus, |x| Complex64::new(x.sin(), x.cos() * 0.3)).unwrap();
        let g = ComplexField::from_fn(&line, |x| Complex64::new((0.2 * x).cos(), 0.1 * x)).unwrap();
        let lhs = pairing(&g, &emb.lift(&f).unwrap()).unwrap();
        let rhs = pairing(&emb.restrict(&g).unwrap(), &f).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((emb.restrict(&emb.lift(&f).unwrap()).unwrap().sub(&f).unwrap().l2_norm()) == 0.0);
    }

    #[test]
    fn window_representatives() {
        let torus = Grid::new(16.0, 64).unwrap();
        let line = Grid::new(64.0, 256).unwrap();
        let emb = WindowEmbedding::new(&torus, &line, 6.0).unwrap();
        for (m, &j) in emb.index_map().iter().enumerate() {
            let y = line.position(j);
            assert!((-10.0..6.0).contains(&y));
            let d = (y - torus.position(m)) / 16.0;
            assert!((d - d.round()).abs() < 1e-12);
        }
        assert!(WindowEmbedding::new(&torus, &Grid::new(64.0, 512).unwrap(), 6.0).is_err());
        assert!(WindowEmbedding::new(&torus, &Grid::new(16.0, 64).unwrap(), 6.0).is_err());
    }
}
