//! Compares the rayon-backed cell dispatch against the forced-sequential
//! path on the heavy sweeps: convergence rows and decomposition checks.

use criterion::{criterion_group, criterion_main, Criterion};

use freeprod_core::exec;
use freeprod_core::recovery::{analytic_defect, recovery_defect, split_midpoint};
use freeprod_core::spaces::{LengthBound, WindowBasis};
use freeprod_core::words::{FactorFamily, FactorSpec, Word};

fn family() -> FactorFamily {
    FactorFamily::new(vec![FactorSpec::cyclic(2, "Z2"), FactorSpec::cyclic(3, "Z3")]).unwrap()
}

fn b(fam: &FactorFamily) -> Word {
    fam.word(&[(1, 1)]).unwrap()
}

fn matrix_defect_rows(fam: &FactorFamily, h: &Word, cells: Vec<usize>, parallel: bool) -> f64 {
    let run = |n: usize| {
        let basis = WindowBasis::build(fam, n + h.block_length() + 1);
        recovery_defect(&basis, h, n).unwrap().matrix_defect
    };
    let rows = if parallel { exec::map_cells(cells, run) } else { exec::map_cells_seq(cells, run) };
    rows.into_iter().fold(0.0, f64::max)
}

fn bench_convergence(c: &mut Criterion) {
    let fam = family();
    let h = b(&fam);
    let cells: Vec<usize> = (2..=14).collect();
    let mut group = c.benchmark_group("matrix_defect_rows");
    group.sample_size(10);
    group.bench_function("parallel", |bch| {
        bch.iter(|| matrix_defect_rows(&fam, &h, cells.clone(), true))
    });
    group.bench_function("sequential", |bch| {
        bch.iter(|| matrix_defect_rows(&fam, &h, cells.clone(), false))
    });
    group.finish();
}

fn bench_decomposition_sweep(c: &mut Criterion) {
    let fam = family();
    let words: Vec<Word> = fam
        .enumerate_window(3)
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect();
    let run_all = |parallel: bool| {
        let cells: Vec<Word> = words.clone();
        let run = |h: Word| {
            freeprod_core::decomp::verify_translation_decomposition(
                &fam,
                &h,
                4,
                LengthBound::Standard,
            )
            .unwrap()
            .max_error
        };
        let rows = if parallel { exec::map_cells(cells, run) } else { exec::map_cells_seq(cells, run) };
        rows.into_iter().fold(0.0, f64::max)
    };
    let mut group = c.benchmark_group("decomposition_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |bch| bch.iter(|| run_all(true)));
    group.bench_function("sequential", |bch| bch.iter(|| run_all(false)));
    group.finish();
}

fn bench_analytic_defect(c: &mut Criterion) {
    let fam = family();
    let h = b(&fam);
    // pure arithmetic; shows where parallel dispatch is NOT worth it
    let _ = split_midpoint(40).unwrap();
    let cells: Vec<usize> = (2..=40).collect();
    let mut group = c.benchmark_group("analytic_defect_rows");
    group.sample_size(20);
    group.bench_function("parallel", |bch| {
        bch.iter(|| {
            exec::map_cells(cells.clone(), |n| analytic_defect(&fam, &h, n).unwrap())
                .into_iter()
                .fold(0.0, f64::max)
        })
    });
    group.bench_function("sequential", |bch| {
        bch.iter(|| {
            exec::map_cells_seq(cells.clone(), |n| analytic_defect(&fam, &h, n).unwrap())
                .into_iter()
                .fold(0.0, f64::max)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_convergence, bench_decomposition_sweep, bench_analytic_defect);
criterion_main!(benches);
