use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::rows_from_table;
use super::{AnalysisError, DesignMatrix, DesignRow, MeasureKind, MeasureRecord, MeasureTable};
use crate::stimuli::{Condition, Syncretism};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Intercept,
    S,
    G,
    A,
    #[serde(rename = "S:G")]
    SG,
    #[serde(rename = "S:A")]
    SA,
    #[serde(rename = "G:A")]
    GA,
    #[serde(rename = "S:G:A")]
    SGA,
}

impl Term {
    pub const fn label(self) -> &'static str {
        match self {
            Self::Intercept => "Intercept",
            Self::S => "S",
            Self::G => "G",
            Self::A => "A",
            Self::SG => "S:G",
            Self::SA => "S:A",
            Self::GA => "G:A",
            Self::SGA => "S:G:A",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which fixed-effects model to fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedEffects {
    /// All eight treatment-coded terms over all cells.
    #[default]
    Full,
    /// Intercept, G, A and G:A over the non-syncretic cells only.
    NonSyncreticOnly,
}

impl FixedEffects {
    pub fn terms(self) -> &'static [Term] {
        match self {
            Self::Full => &[Term::Intercept, Term::S, Term::G, Term::A, Term::SG, Term::SA, Term::GA, Term::SGA],
            Self::NonSyncreticOnly => &[Term::Intercept, Term::G, Term::A, Term::GA],
        }
    }

    fn cells(self) -> Vec<Condition> {
        Condition::ALL.into_iter().filter(|c| self == Self::Full || c.syncretism == Syncretism::NonSyncretic).collect()
    }

    fn uses(self, row: &DesignRow) -> bool {
        self == Self::Full || row.condition.syncretism == Syncretism::NonSyncretic
    }

    fn predictors(self, row: &DesignRow) -> Vec<f64> {
        match self {
            Self::Full => row.full().to_vec(),
            Self::NonSyncreticOnly => row.reduced().to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub seed: u64,
    /// Fewest complete items accepted.
    pub min_items: usize,
    /// Redraws allowed per resample before giving up on a singular design.
    pub max_redraws: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { n_resamples: 2000, seed: 1234, min_items: 8, max_redraws: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSummary {
    pub term: Term,
    /// Mean coefficient across resamples.
    pub estimate: f64,
    /// OLS coefficient on the original sample.
    pub point_estimate: f64,
    /// Fraction of resamples with a coefficient above zero.
    pub p_positive: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub measure: Option<MeasureKind>,
    pub effects: FixedEffects,
    pub terms: Vec<TermSummary>,
    pub n_items: usize,
    pub n_resamples: usize,
    pub seed: u64,
    /// Resamples redrawn because their design was singular.
    pub n_redrawn: usize,
}

impl BootstrapSummary {
    pub fn term(&self, term: Term) -> Option<&TermSummary> {
        self.terms.iter().find(|t| t.term == term)
    }
}

/// Cross-products of one item's rows.
struct ItemMoments {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
}

fn moments<'a>(rows: impl Iterator<Item = &'a DesignRow>, effects: FixedEffects) -> ItemMoments {
    let p = effects.terms().len();
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    for r in rows.filter(|r| effects.uses(r)) {
        let x = DVector::from_vec(effects.predictors(r));
        xtx += &x * x.transpose();
        xty += &x * r.value;
    }
    ItemMoments { xtx, xty }
}

fn solve(xtx: DMatrix<f64>, xty: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = xtx.diagonal().max();
    if scale <= 0.0 {
        return None;
    }
    let chol = xtx.cholesky()?;
    // Cholesky of a near-singular matrix can succeed with a tiny pivot.
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min_pivot * min_pivot < scale * 1e-10 {
        return None;
    }
    Some(chol.solve(xty))
}

/// Ordinary least squares of value on the coded predictors.
/// `None` when the design is rank-deficient.
pub fn ols(design: &DesignMatrix, effects: FixedEffects) -> Option<Vec<f64>> {
    let m = moments(design.rows.iter(), effects);
    solve(m.xtx, &m.xty).map(|b| b.iter().copied().collect())
}

fn fit(
    records: &[MeasureRecord],
    measure: MeasureKind,
    effects: FixedEffects,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary, AnalysisError> {
    let table = MeasureTable::build(records, measure)?;
    let complete = table.complete_items(&effects.cells());
    let dropped = table.items.len() - complete.len();
    if dropped > 0 {
        log::warn!("{}: {dropped} incomplete item(s) left out of the bootstrap", measure.label());
    }
    let needed = config.min_items.max(2);
    if complete.len() < needed {
        return Err(AnalysisError::TooFewItems {
            measure: measure.label(),
            what: "bootstrap".into(),
            complete: complete.len(),
            needed,
        });
    }
    let rows = rows_from_table(&table);
    let items: Vec<ItemMoments> =
        complete.iter().map(|id| moments(rows.iter().filter(|r| r.item_id == *id), effects)).collect();
    let p = effects.terms().len();
    let total = items.iter().fold(ItemMoments { xtx: DMatrix::zeros(p, p), xty: DVector::zeros(p) }, |mut acc, m| {
        acc.xtx += &m.xtx;
        acc.xty += &m.xty;
        acc
    });
    let point = solve(total.xtx, &total.xty).ok_or(AnalysisError::Singular { resample: 0 })?;

    let n = items.len();
    let draws: Vec<(DVector<f64>, usize)> = (0..config.n_resamples)
        .into_par_iter()
        .map(|resample| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(resample as u64);
            for redraw in 0..=config.max_redraws {
                let mut xtx = DMatrix::zeros(p, p);
                let mut xty = DVector::zeros(p);
                for _ in 0..n {
                    let m = &items[rng.random_range(0..n)];
                    xtx += &m.xtx;
                    xty += &m.xty;
                }
                if let Some(beta) = solve(xtx, &xty) {
                    return Ok((beta, redraw));
                }
            }
            Err(AnalysisError::Singular { resample })
        })
        .collect::<Result<_, _>>()?;

    let terms = effects
        .terms()
        .iter()
        .enumerate()
        .map(|(j, &term)| {
            let positive = draws.iter().filter(|(b, _)| b[j] > 0.0).count();
            TermSummary {
                term,
                estimate: draws.iter().map(|(b, _)| b[j]).sum::<f64>() / draws.len().max(1) as f64,
                point_estimate: point[j],
                p_positive: if draws.is_empty() { f64::NAN } else { positive as f64 / draws.len() as f64 },
            }
        })
        .collect();
    Ok(BootstrapSummary {
        measure: Some(measure),
        effects,
        terms,
        n_items: n,
        n_resamples: config.n_resamples,
        seed: config.seed,
        n_redrawn: draws.iter().map(|(_, r)| r).sum(),
    })
}

/// Item bootstrap of the eight-term fixed-effects model.
pub fn bootstrap_interactions(
    records: &[MeasureRecord],
    measure: MeasureKind,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary, AnalysisError> {
    fit(records, measure, FixedEffects::Full, config)
}

/// Item bootstrap of G, A and G:A over the non-syncretic cells.
pub fn fit_nonsyncretic_only(
    records: &[MeasureRecord],
    measure: MeasureKind,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary, AnalysisError> {
    fit(records, measure, FixedEffects::NonSyncreticOnly, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surprisal::Unit;

    fn records(n_items: u64, value: impl Fn(u64, Condition) -> f64) -> Vec<MeasureRecord> {
        let mut out = Vec::new();
        for item in 1..=n_items {
            for c in Condition::ALL {
                out.push(MeasureRecord {
                    language: "en".into(),
                    item_id: item,
                    condition: c,
                    measure: MeasureKind::Surprisal,
                    value: value(item, c),
                    model_id: "m".into(),
                    layer: None,
                    unit: Unit::Bits,
                });
            }
        }
        out
    }

    #[test]
    fn recovers_planted_ga_sign() {
        let recs = records(10, |item, c| {
            let r = DesignRow { value: 0.0, item_id: item, condition: c };
            2.0 - 1.5 * r.g() * r.a() + (item as f64 * 0.37).sin() * 1e-3
        });
        let config = BootstrapConfig { n_resamples: 200, ..Default::default() };
        let s = bootstrap_interactions(&recs, MeasureKind::Surprisal, &config).unwrap();
        assert!(s.term(Term::GA).unwrap().p_positive < 0.01);
        assert!((s.term(Term::GA).unwrap().point_estimate + 1.5).abs() < 1e-9);
        assert_eq!(s.n_redrawn, 0);
        let r = fit_nonsyncretic_only(&recs, MeasureKind::Surprisal, &config).unwrap();
        assert_eq!(r.terms.len(), 4);
        assert!(r.term(Term::GA).unwrap().p_positive < 0.01);
        assert!(r.term(Term::S).is_none());
    }

    #[test]
    fn too_few_items() {
        let recs = records(3, |_, _| 1.0);
        let err = bootstrap_interactions(&recs, MeasureKind::Surprisal, &BootstrapConfig::default()).unwrap_err();
        assert!(matches!(err, AnalysisError::TooFewItems { complete: 3, needed: 8, .. }));
    }

    #[test]
    fn rank_deficient_ols() {
        let c = Condition::ALL[0];
        let m = DesignMatrix { measure: None, rows: vec![DesignRow { value: 1.0, item_id: 1, condition: c }] };
        assert!(ols(&m, FixedEffects::Full).is_none());
    }
}
