//! Parallel versus sequential sweeps over the same per-point closures.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nhssh::fock::{cat_state, CavityParams};
use nhssh::lattice::{obc_spectrum, DressedHoppings, LatticeParams};
use nhssh::meanfield::{self_consistent_solve, SolverConfig};
use nhssh::par;
use nhssh::phasespace::{linspace, wigner_point};
use nhssh::response::{photon_spectral, ResponseConfig};
use nhssh::C64;

type Mapper = fn(&[f64], &(dyn Fn(&f64) -> f64 + Sync + Send)) -> Vec<f64>;

fn parallel(items: &[f64], f: &(dyn Fn(&f64) -> f64 + Sync + Send)) -> Vec<f64> {
    par::map(items, f)
}

fn sequential(items: &[f64], f: &(dyn Fn(&f64) -> f64 + Sync + Send)) -> Vec<f64> {
    par::map_sequential(items, f)
}

const MODES: [(&str, Mapper); 2] = [("parallel", parallel), ("sequential", sequential)];

fn wigner_grid(c: &mut Criterion) {
    let state = cat_state(C64::new(2.0, 0.5), 60).unwrap();
    let axis = linspace(-6.0, 6.0, 81);
    let mut group = c.benchmark_group("wigner_81x81");
    for (name, mapper) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mapper(&axis, &|&p| axis.iter().map(|&q| wigner_point(&state, q, p)).sum()))
        });
    }
    group.finish();
}

fn obc_sweep(c: &mut Criterion) {
    let vs = linspace(0.4, 1.6, 16);
    let mut group = c.benchmark_group("obc_spectrum_L100_x16");
    for (name, mapper) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                mapper(&vs, &|&v| {
                    let lp = LatticeParams::new(v, 1.0, 4.0 / 3.0, 100, 0.5).unwrap();
                    obc_spectrum(&lp, &DressedHoppings::bare(&lp)).unwrap().max_imag()
                })
            })
        });
    }
    group.finish();
}

fn spectral_sweep(c: &mut Criterion) {
    let gs = linspace(1.0, 20.0, 8);
    let axis = linspace(0.0, 6.0, 400);
    let mut group = c.benchmark_group("spectral_k2000_x8");
    for (name, mapper) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                mapper(&gs, &|&g| {
                    let lp = LatticeParams::new(1.5, 1.0, 4.0 / 3.0, 40, 0.5).unwrap();
                    let cp = CavityParams::new(1.0, g, 20).unwrap();
                    let cfg = ResponseConfig { k_points: Some(2000), ..ResponseConfig::for_cavity(&cp) };
                    photon_spectral(&lp, &cp, &DressedHoppings::bare(&lp), &axis, &cfg).unwrap().total_weight()
                })
            })
        });
    }
    group.finish();
}

fn meanfield_sweep(c: &mut Criterion) {
    let vs = linspace(1.0, 1.6, 8);
    let mut group = c.benchmark_group("meanfield_L30_x8");
    group.sample_size(10);
    for (name, mapper) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                mapper(&vs, &|&v| {
                    let lp = LatticeParams::new(v, 1.0, 4.0 / 3.0, 30, 0.3).unwrap();
                    let cp = CavityParams::new(0.5, 4.0, 30).unwrap();
                    self_consistent_solve(&lp, &cp, &SolverConfig::default()).unwrap().residual
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, wigner_grid, obc_sweep, spectral_sweep, meanfield_sweep);
criterion_main!(benches);
