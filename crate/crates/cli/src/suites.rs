//! The verification suites behind `verify --suite <name>`.
//!
//! Each suite runs a deterministic grid of checks against the configured
//! group and seed.  Cells that would exceed the dimension cap are reported
//! as skipped rather than silently dropped; `--strict` turns skips into
//! failures.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freeprod_core::decomp::{
    factor_space_ref, factor_translation, layer_generator, layer_product_check, unit_defect,
    verify_translation_decomposition,
};
use freeprod_core::exec;
use freeprod_core::operators::SparseOp;
use freeprod_core::recovery::{
    isometry_check, recover_translation, recovery_coefficient, recovery_defect, IsometryRoute,
};
use freeprod_core::spaces::{LengthBound, SideBases, WindowBasis};
use freeprod_core::words::{FactorFamily, Word};
use freeprod_core::Error;

use crate::report::{Metric, SuiteResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    Isometry,
    Coeff,
    Defect,
    Decomp,
    Rank,
    Jpattern,
}

impl SuiteName {
    pub const ALL: [SuiteName; 6] = [
        SuiteName::Isometry,
        SuiteName::Coeff,
        SuiteName::Defect,
        SuiteName::Decomp,
        SuiteName::Rank,
        SuiteName::Jpattern,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Isometry => "isometry",
            SuiteName::Coeff => "coeff",
            SuiteName::Defect => "defect",
            SuiteName::Decomp => "decomp",
            SuiteName::Rank => "rank",
            SuiteName::Jpattern => "jpattern",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<SuiteName>, String> {
        match s {
            "all" => Ok(Self::ALL.to_vec()),
            "isometry" => Ok(vec![SuiteName::Isometry]),
            "coeff" => Ok(vec![SuiteName::Coeff]),
            "defect" => Ok(vec![SuiteName::Defect]),
            "decomp" => Ok(vec![SuiteName::Decomp]),
            "rank" => Ok(vec![SuiteName::Rank]),
            "jpattern" => Ok(vec![SuiteName::Jpattern]),
            other => Err(format!(
                "unknown suite {other:?}; expected one of isometry, coeff, defect, decomp, rank, jpattern, all"
            )),
        }
    }
}

/// Deliberate fault injections, for exercising the failure path end to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Offset the expected recovery coefficient by 1e-3 in the coeff suite.
    CoeffOffset,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub family: FactorFamily,
    pub seed: u64,
    pub n_override: Option<usize>,
    pub tol_entry: f64,
    pub tol_norm: f64,
    pub rank_threshold: f64,
    /// Largest window dimension a suite cell may materialise.
    pub dim_cap: usize,
    pub fault: Option<Fault>,
}

impl SuiteConfig {
    pub fn new(family: FactorFamily, seed: u64) -> Self {
        SuiteConfig {
            family,
            seed,
            n_override: None,
            tol_entry: 1e-10,
            tol_norm: 1e-9,
            rank_threshold: 1e-8,
            dim_cap: 200_000,
            fault: None,
        }
    }
}

pub fn run_suite(name: SuiteName, config: &SuiteConfig) -> SuiteResult {
    match name {
        SuiteName::Isometry => isometry_suite(config),
        SuiteName::Coeff => coeff_suite(config),
        SuiteName::Defect => defect_suite(config),
        SuiteName::Decomp => decomp_suite(config),
        SuiteName::Rank => rank_suite(config),
        SuiteName::Jpattern => jpattern_suite(config),
    }
}

fn cutoffs(config: &SuiteConfig, default: &[usize]) -> Vec<usize> {
    match config.n_override {
        Some(n) => vec![n],
        None => default.to_vec(),
    }
}

/// All words of length <= max_len, reduced to a deterministic seeded sample
/// when there are more than `cap`.
fn word_sample(family: &FactorFamily, max_len: usize, cap: usize, seed: u64) -> Vec<Word> {
    let all = family.enumerate_window(max_len);
    if all.len() <= cap {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
    let mut picked: Vec<usize> = Vec::with_capacity(cap);
    while picked.len() < cap {
        let i = rng.gen_range(0..all.len());
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked.sort_unstable();
    picked.into_iter().map(|i| all[i].clone()).collect()
}

fn isometry_suite(config: &SuiteConfig) -> SuiteResult {
    let cells = cutoffs(config, &[2, 3, 4, 5, 6, 7, 8]);
    let family = config.family.clone();
    let results = exec::map_cells(cells, |n| {
        isometry_check(&family, n, n + 3, config.dim_cap).map(|report| (n, report))
    });
    let mut metrics = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok((n, report)) => {
                let route = match report.route {
                    IsometryRoute::Materialized => "materialized",
                    IsometryRoute::LengthStratified => "stratified",
                };
                metrics.push(Metric::at_most(
                    format!("isometry_gap[n={n},N={},route={route}]", report.window),
                    report.max_deviation,
                    config.tol_entry,
                ));
            }
            Err(e) => skipped.push(format!("isometry cell: {e}")),
        }
    }
    SuiteResult::from_metrics("isometry", config.seed, metrics, skipped)
}

struct CoeffCell {
    worst_value_gap: f64,
    worst_spread: f64,
    monomial_violations: usize,
    out_of_regime: usize,
}

fn coeff_columns(
    family: &FactorFamily,
    basis: &WindowBasis,
    h: &Word,
    n: usize,
    expected_offset: f64,
) -> Result<CoeffCell, Error> {
    let recovered = recover_translation(basis, h, n)?;
    let mut by_col: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
    for &(r, c, v) in recovered.entries() {
        by_col.entry(c).or_default().push((r, v));
    }
    let safe = basis.cutoff() - h.block_length();
    let mut cell = CoeffCell {
        worst_value_gap: 0.0,
        worst_spread: 0.0,
        monomial_violations: 0,
        out_of_regime: 0,
    };
    let mut groups: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
    for (col, g) in basis.words().iter().enumerate() {
        if g.block_length() > safe {
            break;
        }
        let hg = match family.multiply(h, g) {
            Ok(w) => w,
            Err(Error::WindowOverflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        let row = basis.index_of(&hg).expect("safe product fits") as u64;
        let mut value = 0.0;
        if let Some(entries) = by_col.get(&(col as u64)) {
            for &(r, v) in entries {
                if r == row {
                    value = v;
                } else {
                    cell.monomial_violations += 1;
                }
            }
        }
        let pair = (g.block_length(), hg.block_length());
        match recovery_coefficient(n, pair.0, pair.1) {
            Ok(expected) => {
                cell.worst_value_gap =
                    cell.worst_value_gap.max((value - (expected.c + expected_offset)).abs());
            }
            Err(Error::OutOfRegime { .. }) => cell.out_of_regime += 1,
            Err(e) => return Err(e),
        }
        let entry = groups.entry(pair).or_insert((value, value));
        entry.0 = entry.0.min(value);
        entry.1 = entry.1.max(value);
    }
    for (_, (lo, hi)) in groups {
        cell.worst_spread = cell.worst_spread.max(hi - lo);
    }
    Ok(cell)
}

fn coeff_suite(config: &SuiteConfig) -> SuiteResult {
    let family = config.family.clone();
    let words = word_sample(&family, 3, 48, config.seed);
    let offset = match config.fault {
        Some(Fault::CoeffOffset) => 1e-3,
        None => 0.0,
    };
    let mut cells = Vec::new();
    for n in cutoffs(config, &[4, 6, 9]) {
        for h in &words {
            cells.push((n, h.clone()));
        }
    }
    let results = exec::map_cells(cells, |(n, h)| {
        let big_n = n + h.block_length() + 1;
        if family.window_size(big_n) > config.dim_cap as u128 {
            return Err(Error::TooLarge {
                dim: family.window_size(big_n).min(usize::MAX as u128) as usize,
                max: config.dim_cap,
            });
        }
        let basis = WindowBasis::build(&family, big_n);
        coeff_columns(&family, &basis, &h, n, offset).map(|c| (n, h, c))
    });
    let mut worst_gap = 0.0f64;
    let mut worst_spread = 0.0f64;
    let mut monomial = 0usize;
    let mut out_of_regime = 0usize;
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok((_, _, cell)) => {
                worst_gap = worst_gap.max(cell.worst_value_gap);
                worst_spread = worst_spread.max(cell.worst_spread);
                monomial += cell.monomial_violations;
                out_of_regime += cell.out_of_regime;
            }
            Err(e) => skipped.push(format!("coeff cell: {e}")),
        }
    }
    let mut metrics = vec![
        Metric::at_most("max_coefficient_gap", worst_gap, config.tol_entry),
        Metric::at_most("max_length_class_spread", worst_spread, 1e-12),
        Metric::at_most("monomial_violations", monomial as f64, 0.0),
    ];
    if out_of_regime > 0 {
        skipped.push(format!("{out_of_regime} columns out of the coefficient regime"));
    }
    metrics.sort_by(|a, b| a.name.cmp(&b.name));
    SuiteResult::from_metrics("coeff", config.seed, metrics, skipped)
}

fn defect_suite(config: &SuiteConfig) -> SuiteResult {
    let family = config.family.clone();
    let words = word_sample(&family, 3, 48, config.seed);
    let mut cells = Vec::new();
    for n in cutoffs(config, &[4, 6, 9]) {
        for h in &words {
            cells.push((n, h.clone()));
        }
    }
    let results = exec::map_cells(cells, |(n, h)| {
        let big_n = n + h.block_length() + 1;
        if family.window_size(big_n) > config.dim_cap as u128 {
            return Err(Error::TooLarge {
                dim: family.window_size(big_n).min(usize::MAX as u128) as usize,
                max: config.dim_cap,
            });
        }
        let basis = WindowBasis::build(&family, big_n);
        recovery_defect(&basis, &h, n)
    });
    let mut identity_gap = 0.0f64;
    let mut bound_excess = f64::NEG_INFINITY;
    let mut skipped = Vec::new();
    let mut any = false;
    for r in results {
        match r {
            Ok(report) => {
                any = true;
                identity_gap =
                    identity_gap.max((report.matrix_defect - report.analytic_defect).abs());
                bound_excess = bound_excess
                    .max(report.matrix_defect - report.bound)
                    .max(report.analytic_defect - report.bound);
            }
            Err(e) => skipped.push(format!("defect cell: {e}")),
        }
    }
    let mut metrics = vec![Metric::at_most("max_defect_identity_gap", identity_gap, config.tol_entry)];
    if any {
        metrics.push(Metric::at_most("max_bound_excess", bound_excess, 1e-12));
    }
    SuiteResult::from_metrics("defect", config.seed, metrics, skipped)
}

fn decomp_suite(config: &SuiteConfig) -> SuiteResult {
    let family = config.family.clone();
    let words: Vec<Word> = word_sample(&family, 3, 24, config.seed)
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect();
    let mut cells = Vec::new();
    for n in cutoffs(config, &[2, 3, 4]) {
        for h in &words {
            cells.push((n, h.clone()));
        }
    }
    let results = exec::map_cells(cells, |(n, h)| {
        if family.window_size(n) > config.dim_cap as u128 {
            return Err(Error::TooLarge {
                dim: family.window_size(n).min(usize::MAX as u128) as usize,
                max: config.dim_cap,
            });
        }
        verify_translation_decomposition(&family, &h, n, LengthBound::Standard)
    });
    let mut max_error = 0.0f64;
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(report) => max_error = max_error.max(report.max_error),
            Err(e) => skipped.push(format!("decomp cell: {e}")),
        }
    }
    let metrics = vec![Metric::at_most("max_decomposition_error", max_error, config.tol_entry)];
    SuiteResult::from_metrics("decomp", config.seed, metrics, skipped)
}

fn rank_suite(config: &SuiteConfig) -> SuiteResult {
    let family = config.family.clone();
    let mut worst_rank = 0usize;
    let mut skipped = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x2a);
    for iota in 0..family.len() {
        let letters = family.letter_count(iota).min(12);
        let translations: Vec<SparseOp> = std::iter::once(None)
            .chain((0..letters as u32).map(Some))
            .map(|e| factor_translation(&family, iota, e).expect("translation builds"))
            .collect();
        for a1 in &translations {
            for a2 in &translations {
                match unit_defect(a1, a2, &family, iota) {
                    Ok((_, rank)) => worst_rank = worst_rank.max(rank),
                    Err(e) => skipped.push(format!("rank cell: {e}")),
                }
            }
        }
        let space = factor_space_ref(&family, iota);
        for _ in 0..50 {
            let random = |rng: &mut ChaCha8Rng| {
                let mut acc = SparseOp::zero(space.clone(), space.clone());
                for t in &translations {
                    let coeff: f64 = rng.gen_range(-1.0..1.0);
                    acc = acc.add(&t.scale(coeff)).expect("same basis");
                }
                acc
            };
            let a1 = random(&mut rng);
            let a2 = random(&mut rng);
            match unit_defect(&a1, &a2, &family, iota) {
                Ok((_, rank)) => worst_rank = worst_rank.max(rank),
                Err(e) => skipped.push(format!("rank cell: {e}")),
            }
        }
    }
    let metrics = vec![Metric::at_most("max_unit_defect_rank", worst_rank as f64, 1.0)];
    SuiteResult::from_metrics("rank", config.seed, metrics, skipped)
}

fn jpattern_suite(config: &SuiteConfig) -> SuiteResult {
    let family = config.family.clone();
    let n = config.n_override.unwrap_or(4);
    if family.window_size(n) > config.dim_cap as u128 {
        return SuiteResult::skipped_entirely(
            "jpattern",
            config.seed,
            format!("window W_{n} exceeds the dimension cap"),
        );
    }
    let basis = WindowBasis::build(&family, n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x4d);
    let random_generator = |rng: &mut ChaCha8Rng, p: usize| {
        let iota = rng.gen_range(0..family.len());
        let sides = SideBases::build(&family, n, p, iota, LengthBound::Standard)
            .expect("valid position");
        let l = sides.left.len();
        let pair = (rng.gen_range(0..l), rng.gen_range(0..l));
        let letters = family.letter_count(iota);
        let mid = if rng.gen_bool(0.5) {
            let r = rng.gen_range(0..letters) as u32;
            freeprod_core::decomp::compress_off_unit(
                &factor_translation(&family, iota, Some(r)).expect("translation"),
                &family,
                iota,
            )
            .expect("compression")
        } else {
            freeprod_core::operators::matrix_unit(
                freeprod_core::decomp::letters_ref(&family, iota),
                freeprod_core::decomp::letters_ref(&family, iota),
                rng.gen_range(0..letters) as u64,
                rng.gen_range(0..letters) as u64,
            )
            .expect("unit")
        };
        layer_generator(&basis, p, iota, pair, &mid, LengthBound::Standard).expect("generator")
    };
    let mut support = 0.0f64;
    let mut off_diag = 0.0f64;
    let mut tail = 0.0f64;
    let mut skipped = Vec::new();
    for p in 1..=n {
        for q in 1..=n {
            for _ in 0..20 {
                let x = random_generator(&mut rng, p);
                let y = random_generator(&mut rng, q);
                match layer_product_check(&basis, &x, p, &y, q, LengthBound::Standard) {
                    Ok(report) => {
                        support = support.max(report.support_violation);
                        off_diag = off_diag.max(report.off_diagonal_max);
                        tail = tail.max(report.tail_deviation);
                    }
                    Err(e) => skipped.push(format!("jpattern cell p={p} q={q}: {e}")),
                }
            }
        }
    }
    let metrics = vec![
        Metric::at_most("max_off_diagonal", off_diag, config.tol_entry),
        Metric::at_most("max_support_violation", support, config.tol_entry),
        Metric::at_most("max_tail_deviation", tail, config.tol_entry),
    ];
    SuiteResult::from_metrics("jpattern", config.seed, metrics, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupspec::GroupSpecFile;
    use crate::report::SuiteStatus;

    fn default_config() -> SuiteConfig {
        let family = GroupSpecFile::default_z2z3().family().unwrap();
        SuiteConfig::new(family, 42)
    }

    #[test]
    fn all_suites_pass_on_default_group() {
        let config = default_config();
        for name in SuiteName::ALL {
            let result = run_suite(name, &config);
            assert_eq!(result.status, SuiteStatus::Pass, "{}: {result:?}", name.as_str());
            assert!(result.skipped.is_empty(), "{}: {:?}", name.as_str(), result.skipped);
        }
    }

    #[test]
    fn injected_coefficient_fault_fails() {
        let mut config = default_config();
        config.fault = Some(Fault::CoeffOffset);
        config.n_override = Some(4);
        let result = run_suite(SuiteName::Coeff, &config);
        assert_eq!(result.status, SuiteStatus::Fail);
    }

    #[test]
    fn suite_name_parsing() {
        assert_eq!(SuiteName::parse_list("all").unwrap().len(), 6);
        assert_eq!(SuiteName::parse_list("rank").unwrap(), vec![SuiteName::Rank]);
        assert!(SuiteName::parse_list("bogus").is_err());
    }

    #[test]
    fn word_sampling_is_deterministic() {
        let family = GroupSpecFile::default_z2z3().family().unwrap();
        let a = word_sample(&family, 3, 5, 7);
        let b = word_sample(&family, 3, 5, 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let all = word_sample(&family, 3, 48, 7);
        assert_eq!(all.len(), 14);
    }
}
