//! Operator norms of the cutoff / Littlewood-Paley interactions across a schedule.

use super::{default_lp_schedule, validate_schedule, ScheduleEntry};
use crate::cutoffs::{build_cutoff, build_line_cutoff, derivative_maxima, IntervalSelection, LEVELS};
use crate::diagnostics::{operator_norm, Factor, LinearMap, PowerIteration};
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{MultiplierSymbol, WindowEmbedding};

/// Largest torus mode space the operator estimates run on.
pub const DIMENSION_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct LpConfig {
    pub schedule: Vec<ScheduleEntry>,
    pub horizon: f64,
    /// Levels `j`; the mismatch uses the pair `(j, j + 1)`.
    pub levels: Vec<usize>,
    pub power: PowerIteration,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            schedule: default_lp_schedule(),
            horizon: 0.25,
            levels: vec![0, 2],
            power: PowerIteration::default(),
        }
    }
}

impl LpConfig {
    pub fn validate(&self) -> Result<()> {
        validate_schedule(&self.schedule, 2.0)?;
        if let Some(e) = self.schedule.iter().find(|e| e.points > DIMENSION_CAP) {
            return Err(LabError::config(format!(
                "schedule entry {} has {} modes, the operator estimates are capped at {DIMENSION_CAP}",
                e.n, e.points
            )));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&j| j + 1 >= LEVELS) {
            return Err(LabError::config("lp.levels must be non-empty and each in 0..=3"));
        }
        if !(self.horizon > 0.0) {
            return Err(LabError::config("lp.horizon must be positive"));
        }
        Ok(())
    }
}

/// Interval centered in `[L/4, L/2]`.
pub fn centered_selection(e: &ScheduleEntry, horizon: f64) -> Result<IntervalSelection> {
    IntervalSelection::at_center(e.circumference, 0.375 * e.circumference, e.n_freq, horizon, e.eta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelNorms {
    pub p2p: f64,
    pub comm_torus: f64,
    pub comm_line: f64,
    pub mismatch_torus: f64,
    pub mismatch_line: f64,
    pub bound: f64,
}

pub fn level_norms(e: &ScheduleEntry, horizon: f64, j: usize, power: &PowerIteration) -> Result<LevelNorms> {
    let torus = e.grid()?;
    let line = e.line_grid()?;
    let sel = centered_selection(e, horizon)?;
    let emb = WindowEmbedding::new(&torus, &line, sel.center)?;
    let low = MultiplierSymbol::LowPass { cutoff: e.n_freq };
    let p_t = Factor::fourier(&torus, &low);
    let p_l = Factor::fourier(&line, &low);
    let chi_t = build_cutoff(&sel, j, &torus)?;
    let chi_l = build_line_cutoff(&sel, j, &line)?;
    let outer_t = build_cutoff(&sel, j + 1, &torus)?;
    let outer_l = build_line_cutoff(&sel, j + 1, &line)?;
    let m_t = Factor::multiply(&torus, chi_t.values.clone())?;
    let m_l = Factor::multiply(&line, chi_l.values.clone())?;

    let through_line = LinearMap::chain(
        &torus,
        vec![
            m_t.clone(),
            Factor::Lift(emb.clone()),
            p_l.clone(),
            Factor::Restrict(emb),
            m_t.clone(),
        ],
    )?;
    let on_torus = LinearMap::chain(&torus, vec![m_t.clone(), p_t.clone(), m_t.clone()])?;
    let p2p = operator_norm(&through_line.minus(on_torus)?, power)?;
    let comm_torus = operator_norm(&LinearMap::commutator(&m_t, &p_t)?, power)?;
    let comm_line = operator_norm(&LinearMap::commutator(&m_l, &p_l)?, power)?;
    let mismatch_torus = operator_norm(
        &LinearMap::chain(
            &torus,
            vec![Factor::multiply(&torus, outer_t.complement())?, p_t, m_t],
        )?,
        power,
    )?;
    let mismatch_line = operator_norm(
        &LinearMap::chain(&line, vec![Factor::multiply(&line, outer_l.complement())?, p_l, m_l])?,
        power,
    )?;
    let slope = derivative_maxima(&chi_l, 1)[1].max(derivative_maxima(&chi_t, 1)[1]);
    Ok(LevelNorms {
        p2p,
        comm_torus,
        comm_line,
        mismatch_torus,
        mismatch_line,
        bound: 10.0 / e.n_freq * slope,
    })
}

pub fn run_lp_estimates(cfg: &LpConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rep = ExperimentReport::new("lp-check");
    rep.series("n_freq", cfg.schedule.iter().map(|e| e.n_freq).collect());
    rep.series("points", cfg.schedule.iter().map(|e| e.points as f64).collect());
    rep.scalar("horizon", cfg.horizon);
    for &j in &cfg.levels {
        for e in &cfg.schedule {
            let n = level_norms(e, cfg.horizon, j, &cfg.power)?;
            rep.push(&format!("p2p.{j}"), n.p2p);
            rep.push(&format!("comm_torus.{j}"), n.comm_torus);
            rep.push(&format!("comm_line.{j}"), n.comm_line);
            rep.push(&format!("comm.{j}"), n.comm_torus + n.comm_line);
            rep.push(&format!("mismatch_torus.{j}-{}", j + 1), n.mismatch_torus);
            rep.push(&format!("mismatch_line.{j}-{}", j + 1), n.mismatch_line);
            rep.push(&format!("mismatch.{j}-{}", j + 1), n.mismatch_torus + n.mismatch_line);
            rep.push(&format!("bound.{j}"), n.bound);
        }
        let i = j + 1;
        rep.judge(&format!("p2p_decreasing.{j}"), Rule::Decreasing(format!("p2p.{j}")));
        rep.judge(&format!("comm_decreasing.{j}"), Rule::Decreasing(format!("comm.{j}")));
        rep.judge(&format!("mismatch_decreasing.{j}-{i}"), Rule::Decreasing(format!("mismatch.{j}-{i}")));
        for side in ["torus", "line"] {
            rep.judge(
                &format!("comm_bound_{side}.{j}"),
                Rule::PairwiseAtMost(format!("comm_{side}.{j}"), format!("bound.{j}"), 1.0),
            );
            rep.judge(
                &format!("mismatch_le_comm_{side}.{j}-{i}"),
                Rule::PairwiseAtMost(format!("mismatch_{side}.{j}-{i}"), format!("comm_{side}.{j}"), 1.0 + 1e-10),
            );
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoffs::CutoffFamily;
    use crate::diagnostics::LinearOperator;
    use crate::spectral::{ComplexField, Grid};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn dense_norm(op: &LinearMap) -> f64 {
        let n = op.domain().points();
        let mut a = DMatrix::<Complex64>::zeros(op.codomain().points(), n);
        for j in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            let col = op.apply(&ComplexField::from_physical(op.domain().clone(), e).unwrap()).unwrap();
            for (i, v) in col.values().iter().enumerate() {
                a[(i, j)] = *v;
            }
        }
        a.singular_values().max()
    }

    #[test]
    fn constant_cutoff_commutes() {
        let g = Grid::new(64.0, 128).unwrap();
        let one = CutoffFamily::constant(&g, 1.0, 1.0);
        let c = LinearMap::commutator(
            &Factor::multiply(&g, one.values).unwrap(),
            &Factor::fourier(&g, &MultiplierSymbol::LowPass { cutoff: 2.0 }),
        )
        .unwrap();
        assert!(operator_norm(&c, &PowerIteration::default()).unwrap() < 1e-14);
    }

    #[test]
    fn commutator_follows_leading_order() {
        // transition width 2
        let g = Grid::new(160.0, 4096).unwrap();
        let sel = IntervalSelection::at_center(160.0, 60.0, 1.0, 1.0, 0.5).unwrap();
        let fam = build_cutoff(&sel, 2, &g).unwrap();
        let slope = derivative_maxima(&fam, 1)[1];
        // max |d/dxi m(xi)| of the unit low-pass profile, by fine sampling
        let profile = MultiplierSymbol::LowPass { cutoff: 1.0 };
        let h = 1e-5;
        let m_slope = (0..=200_000)
            .map(|i| 1.0 + i as f64 * 1e-5)
            .map(|x| ((profile.eval(x + h) - profile.eval(x - h)).re / (2.0 * h)).abs())
            .fold(0.0, f64::max);
        let chi = Factor::multiply(&g, fam.values).unwrap();
        let lead = slope * m_slope;
        // N ||[chi, P_N]|| rises towards max|chi'| max|m'| from below
        let scaled: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&n| {
                let c = LinearMap::commutator(&chi, &Factor::fourier(&g, &MultiplierSymbol::LowPass { cutoff: n })).unwrap();
                n * operator_norm(&c, &PowerIteration::default()).unwrap()
            })
            .collect();
        assert!(scaled.windows(2).all(|w| w[1] > w[0]), "{scaled:?}");
        assert!(scaled.iter().all(|v| *v <= lead * (1.0 + 1e-9)), "{scaled:?} vs {lead}");
        assert!((scaled[3] / lead - 1.0).abs() < 0.1, "{scaled:?} vs {lead}");
    }

    #[test]
    fn power_iteration_matches_dense_norm() {
        let e = &default_lp_schedule()[0];
        let g = e.grid().unwrap();
        let sel = centered_selection(e, 0.25).unwrap();
        let chi = Factor::multiply(&g, build_cutoff(&sel, 0, &g).unwrap().values).unwrap();
        let c = LinearMap::commutator(&chi, &Factor::fourier(&g, &MultiplierSymbol::LowPass { cutoff: 1.0 })).unwrap();
        let exact = dense_norm(&c);
        let est = operator_norm(&c, &PowerIteration::default()).unwrap();
        assert!((est - exact).abs() <= 1e-6 * exact, "{est} vs {exact}");
    }

    #[test]
    fn cap_and_levels_are_checked() {
        let cfg = LpConfig {
            levels: vec![4],
            ..LpConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = LpConfig::default();
        cfg.schedule[2].points = 8192;
        assert!(matches!(run_lp_estimates(&cfg), Err(LabError::Config(_))));
    }
}
