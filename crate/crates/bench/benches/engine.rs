//! Benchmarks over the engine hot paths: combinatorial Wick expansion,
//! smeared operator assembly on the truncated Fock space, kernel quadrature,
//! the overlap-ordered time integral, and exterior-algebra products.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;

use cpqft_core::causal::{s1_matrix, theta_time_integral};
use cpqft_core::fock::FockSpace;
use cpqft_core::grassmann::{GrassmannAlgebra, GrassmannElement};
use cpqft_core::quad::{contract_integral, Axis, KernelPairSpec};
use cpqft_core::wick::{multi_product, qed_interaction, scalar_interaction, NormalPolynomial};
use cpqft_core::{
    C64, FieldRoster, FieldSpec, ModeGrid, QuadRule, QuadratureSpec, SchwartzTestFn,
};

fn qed_roster() -> (FieldRoster, cpqft_core::FieldId, cpqft_core::FieldId) {
    let mut roster = FieldRoster::new();
    let psi = roster.register(FieldSpec::dirac(1.0)).unwrap();
    let photon = roster.register(FieldSpec::photon()).unwrap();
    (roster, psi, photon)
}

/// Scalar field on two grid points with headroom for degree-3 words.
fn scalar_fixture() -> (FockSpace, Vec<NormalPolynomial>, Vec<SchwartzTestFn>) {
    let mut roster = FieldRoster::new();
    let a = roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
    let grid = ModeGrid::from_points(
        vec![Vector3::new(0.4, 0.1, -0.2), Vector3::new(-0.3, 0.5, 0.2)],
        0.2,
        4,
    );
    let space = FockSpace::new(roster, grid).unwrap();
    let blocks = vec![
        NormalPolynomial::from_monomial(cpqft_core::wick::NormalMonomial::new(
            C64::new(1.0, 0.0),
            vec![
                cpqft_core::FieldFactor::full(a, false, 0, 0),
                cpqft_core::FieldFactor::full(a, false, 0, 0),
            ],
        )),
        NormalPolynomial::from_monomial(cpqft_core::wick::NormalMonomial::new(
            C64::new(1.0, 0.0),
            vec![cpqft_core::FieldFactor::full(a, false, 0, 1)],
        )),
    ];
    let testfns = vec![
        SchwartzTestFn::gaussian(&[0.0, 0.1, 0.0, -0.1], &[1.0; 4]).unwrap(),
        SchwartzTestFn::gaussian(&[0.5, 0.0, 0.2, 0.0], &[1.0; 4]).unwrap(),
    ];
    (space, blocks, testfns)
}

/// Dense even/odd mixture touching every basis word of the rank-4 algebra.
fn dense_element(alg: &GrassmannAlgebra) -> GrassmannElement {
    let mut e = alg.scalar(C64::new(1.0, 0.0));
    for i in 0..alg.rank {
        let mut factor = alg.scalar(C64::new(1.0, 0.1 * i as f64));
        factor = factor
            .add(&alg.generator(i).unwrap().scale(C64::new(0.3 + i as f64, -0.2)))
            .unwrap();
        factor = factor
            .add(&alg.conjugate_generator(i).unwrap().scale(C64::new(-0.7, 0.4 * i as f64)))
            .unwrap();
        e = e.wedge(&factor).unwrap();
    }
    e
}

fn bench_wick_expansion(c: &mut Criterion) {
    let (roster, psi, photon) = qed_roster();
    let blocks = vec![
        qed_interaction(psi, photon, 0),
        qed_interaction(psi, photon, 1),
    ];
    c.bench_function("wick/qed_two_vertices", |b| {
        b.iter(|| multi_product(black_box(&blocks), &roster).unwrap())
    });
}

fn bench_fock_assembly(c: &mut Criterion) {
    let (space, blocks, testfns) = scalar_fixture();
    c.bench_function("fock/block_product_matrix", |b| {
        b.iter(|| {
            space
                .block_product_matrix(black_box(&blocks), &testfns, 0.1)
                .unwrap()
        })
    });
    let product = multi_product(&blocks, &space.roster).unwrap();
    c.bench_function("fock/evaluate_refined", |b| {
        b.iter(|| {
            space
                .evaluate_expression(black_box(&product.refined), &testfns, 0.1)
                .unwrap()
        })
    });
}

fn bench_quadrature(c: &mut Criterion) {
    let mut roster = FieldRoster::new();
    let photon = roster.register(FieldSpec::photon()).unwrap();
    let pair = KernelPairSpec {
        field: photon,
        left_dagger: false,
        right_dagger: false,
        left_component: 1,
        right_component: 1,
    };
    let pairs = [pair, pair];
    let phi = SchwartzTestFn::gaussian(&[0.0; 4], &[1.0; 4]).unwrap();
    let chi = SchwartzTestFn::gaussian(&[0.7, 0.0, 0.0, 0.0], &[1.0; 4]).unwrap();
    let spec = QuadratureSpec {
        half_width: 8.0,
        points_per_axis: 24,
        rule: QuadRule::RadialIsotropic,
        tolerance: 1.0, // refinement delta is the measurement, not a gate
    };
    c.bench_function("quad/radial_massless_pair", |b| {
        b.iter(|| contract_integral(&roster, black_box(&pairs), &phi, &chi, 0.0, &spec).unwrap())
    });
}

fn bench_theta_integral(c: &mut Criterion) {
    // Overlapping supports force the rotated-coordinate slow path.
    let a = Axis { center: 0.4, width: 1.0, modulation: 0.0, sign: 1.0 };
    let b_ax = Axis { center: -0.4, width: 1.0, modulation: 0.0, sign: 1.0 };
    c.bench_function("causal/theta_time_integral", |b| {
        b.iter(|| theta_time_integral(black_box((&a, 0)), (&b_ax, 0), 1.3, -0.8, 256))
    });
}

fn bench_first_order(c: &mut Criterion) {
    let mut roster = FieldRoster::new();
    let a = roster.register(FieldSpec::scalar("A", 1.0)).unwrap();
    let grid = ModeGrid::from_points(
        vec![Vector3::new(0.4, 0.1, -0.2), Vector3::new(-0.3, 0.5, 0.2)],
        0.2,
        5,
    );
    let space = FockSpace::new(roster, grid).unwrap();
    let density = scalar_interaction(a, 0);
    let phi = SchwartzTestFn::gaussian(&[0.0, 0.1, -0.1, 0.2], &[1.0; 4]).unwrap();
    c.bench_function("causal/s1_local_assembly", |b| {
        b.iter(|| s1_matrix(&space, black_box(&density), &phi, 0.05).unwrap())
    });
}

fn bench_grassmann(c: &mut Criterion) {
    let alg = GrassmannAlgebra::new(4).unwrap();
    let e = dense_element(&alg);
    let f = e.involute();
    c.bench_function("grassmann/dense_wedge", |b| {
        b.iter(|| black_box(&e).wedge(&f).unwrap())
    });
    c.bench_function("grassmann/involute", |b| {
        b.iter(|| black_box(&e).involute())
    });
}

criterion_group!(
    benches,
    bench_wick_expansion,
    bench_fock_assembly,
    bench_quadrature,
    bench_theta_integral,
    bench_first_order,
    bench_grassmann
);
criterion_main!(benches);
