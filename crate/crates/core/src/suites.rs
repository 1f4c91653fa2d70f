//! Verification suites: randomized operator-oracle equivalence, canonical
//! (anti)commutators, spinor identities, pairing cross-checks, and
//! combinatorial counts. Each suite returns one record per case.

use crate::fields::{
    dirac_u, dirac_v, gamma_matrices, pauli_matrices, FieldId, FieldRoster, FieldSpec, Statistics,
};
use crate::fock::{column_rel_diff, FockSpace, ModeGrid, OperatorMatrix};
use crate::quad::{
    contract_integral, limit_contraction, mode_sum_contraction, KernelPairSpec, QuadRule,
    QuadratureSpec, SchwartzTestFn,
};
use crate::report::CheckRecord;
use crate::wick::{
    multi_product, refine_structural, term_count, FieldFactor, NormalMonomial, NormalPolynomial,
    PairingDescriptor,
};
use crate::C64;
use nalgebra::{Matrix4, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error(transparent)]
    Field(#[from] crate::fields::FieldError),
    #[error(transparent)]
    Fock(#[from] crate::fock::FockError),
    #[error(transparent)]
    Wick(#[from] crate::wick::WickError),
    #[error(transparent)]
    Quad(#[from] crate::quad::QuadError),
    #[error("unknown suite `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random products in the oracle suite.
    pub cases: usize,
    /// Negative control: flip the Fermi reordering signs in one case; the
    /// suite must then report a failure.
    pub inject_sign_error: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 7,
            cases: 25,
            inject_sign_error: false,
        }
    }
}

fn record(suite: &str, case: String, residual: f64, tolerance: f64, detail: Option<String>) -> CheckRecord {
    CheckRecord {
        suite: suite.to_owned(),
        case,
        passed: residual <= tolerance,
        residual,
        tolerance,
        detail,
    }
}

fn rel_diff(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    (a - b).norm() / (b.norm() + f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// oracle equivalence
// ---------------------------------------------------------------------------

fn random_testfn(rng: &mut ChaCha8Rng) -> SchwartzTestFn {
    let centers: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.2..1.2)).collect();
    let widths: Vec<f64> = (0..4).map(|_| rng.gen_range(0.6..1.4)).collect();
    let modulation: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.8..0.8)).collect();
    SchwartzTestFn::gaussian(&centers, &widths)
        .expect("valid axes")
        .with_modulation(&modulation)
        .expect("matching length")
}

fn random_points(rng: &mut ChaCha8Rng, count: usize) -> Vec<Vector3<f64>> {
    (0..count)
        .map(|_| {
            Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect()
}

/// A small mixed-statistics state space with at most three modes, with the
/// Bose occupation cutoff sized so the product's raising budget cannot reach
/// it from the low-occupation cone.
fn random_case(
    rng: &mut ChaCha8Rng,
) -> Result<(FockSpace, Vec<NormalPolynomial>, usize), SuiteError> {
    let mut roster = FieldRoster::new();
    let (fields, points) = match rng.gen_range(0..3) {
        0 => {
            let id = roster.register(FieldSpec::scalar("a", 1.0))?;
            (vec![id], random_points(rng, 2))
        }
        1 => {
            let id = roster.register(FieldSpec::scalar_with_statistics(
                "c",
                0.8,
                Statistics::Fermi,
            ))?;
            (vec![id], random_points(rng, 3))
        }
        _ => {
            let a = roster.register(FieldSpec::scalar("a", 1.0))?;
            let c = roster.register(FieldSpec::scalar_with_statistics(
                "c",
                0.8,
                Statistics::Fermi,
            ))?;
            (vec![a, c], random_points(rng, 1))
        }
    };
    let n_blocks = rng.gen_range(1..=3);
    let blocks = random_blocks(rng, &fields, n_blocks);
    let budget: usize = blocks.iter().map(NormalPolynomial::total_degree).sum();
    let grid = ModeGrid::from_points(points, 0.3, budget as u32 + 1);
    Ok((FockSpace::new(roster, grid)?, blocks, budget))
}

fn random_blocks(
    rng: &mut ChaCha8Rng,
    fields: &[FieldId],
    n_blocks: usize,
) -> Vec<NormalPolynomial> {
    (0..n_blocks)
        .map(|slot| {
            let n_monomials = rng.gen_range(1..=2);
            let monomials = (0..n_monomials)
                .map(|_| {
                    let degree = rng.gen_range(0..=3);
                    let factors = (0..degree)
                        .map(|_| {
                            let field = fields[rng.gen_range(0..fields.len())];
                            FieldFactor::full(field, rng.gen(), 0, slot)
                        })
                        .collect();
                    let coeff = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    NormalMonomial::new(coeff, factors)
                })
                .collect();
            NormalPolynomial { monomials }
        })
        .collect()
}

/// Random normal-ordered products evaluated two ways: through the refined
/// Wick expansion, and as a plain product of whole-monomial matrices. The
/// comparison runs over the columns with enough Bose headroom, where the
/// rewriting identities are exact.
pub fn oracle_suite(opts: &SuiteOptions) -> Result<Vec<CheckRecord>, SuiteError> {
    let mut out = Vec::new();
    if opts.inject_sign_error {
        out.push(injected_sign_case()?);
    }
    let mut last: Option<(FockSpace, Vec<NormalPolynomial>, Vec<SchwartzTestFn>)> = None;
    for case in 0..opts.cases {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(case as u64));
        let (space, blocks, budget) = random_case(&mut rng)?;
        let testfns: Vec<SchwartzTestFn> =
            (0..blocks.len()).map(|_| random_testfn(&mut rng)).collect();
        let eps = 0.1;

        let product = multi_product(&blocks, &space.roster)?;
        let lhs = space.evaluate_product(&product, &testfns, eps)?;
        let rhs = space.block_product_matrix(&blocks, &testfns, eps)?;
        let cols = space.safe_columns(budget);
        let residual = column_rel_diff(&lhs, &rhs, &cols);
        let detail = format!(
            "blocks={} terms={} dim={} cone={}",
            blocks.len(),
            product.refined.num_terms(),
            space.dim,
            cols.len()
        );
        out.push(record(
            "oracle",
            format!("product-{case:02}"),
            residual,
            1e-10,
            Some(detail),
        ));
        last = Some((space, blocks, testfns));
    }

    // The whole-factor contraction view must refine to the same expansion.
    if let Some((space, blocks, testfns)) = last {
        let product = multi_product(&blocks, &space.roster)?;
        let alt = refine_structural(&product.structural, product.refined.total_factors, &space.roster);
        let lhs = space.evaluate_expression(&product.refined, &testfns, 0.1)?;
        let rhs = space.evaluate_expression(&alt, &testfns, 0.1)?;
        out.push(record(
            "oracle",
            "structural-consistency".to_owned(),
            rel_diff(&lhs, &rhs),
            1e-12,
            None,
        ));
    }
    Ok(out)
}

/// Deterministic failing case: a spin-statistics sign error planted in the
/// refined expansion. The comparison must catch it.
fn injected_sign_case() -> Result<CheckRecord, SuiteError> {
    let mut roster = FieldRoster::new();
    let c = roster.register(FieldSpec::scalar_with_statistics(
        "c",
        0.8,
        Statistics::Fermi,
    ))?;
    let grid = ModeGrid::from_points(vec![Vector3::new(0.3, -0.2, 0.5)], 0.3, 2);
    let space = FockSpace::new(roster, grid)?;
    let block = |slot: usize| {
        NormalPolynomial::from_monomial(NormalMonomial::new(
            C64::new(1.0, 0.0),
            vec![FieldFactor::full(c, false, 0, slot)],
        ))
    };
    let blocks = [block(0), block(1)];
    let product = multi_product(&blocks, &space.roster)?;
    let mut corrupted = product.refined.clone();
    for terms in corrupted.sectors.values_mut() {
        for t in terms.iter_mut() {
            if t.transpositions % 2 == 1 {
                t.coeff = -t.coeff;
            }
        }
    }
    let phi = SchwartzTestFn::gaussian(&[0.4, 0.0, 0.2, -0.1], &[0.8, 1.0, 1.1, 0.9])
        .expect("valid axes");
    let chi = SchwartzTestFn::gaussian(&[-0.3, 0.1, 0.0, 0.3], &[0.9, 1.2, 0.8, 1.0])
        .expect("valid axes");
    let testfns = vec![phi, chi];
    let lhs = space.evaluate_expression(&corrupted, &testfns, 0.1)?;
    let rhs = space.block_product_matrix(&blocks, &testfns, 0.1)?;
    Ok(record(
        "oracle",
        "negative-control".to_owned(),
        rel_diff(&lhs, &rhs),
        1e-10,
        Some("fermi reordering signs flipped on purpose".to_owned()),
    ))
}

// ---------------------------------------------------------------------------
// canonical commutators
// ---------------------------------------------------------------------------

/// Grid CCR/CAR on three state spaces (bosonic, fermionic, mixed); the
/// ladder defect is identically zero.
pub fn ccr_suite() -> Result<Vec<CheckRecord>, SuiteError> {
    let mut out = Vec::new();
    let points3 = vec![
        Vector3::new(0.4, 0.1, -0.2),
        Vector3::new(-0.3, 0.5, 0.2),
        Vector3::new(0.1, -0.4, 0.6),
    ];
    type Setup = Box<dyn Fn(&mut FieldRoster) -> Result<(), crate::fields::FieldError>>;
    let cases: [(&str, Setup, Vec<Vector3<f64>>); 3] = [
        (
            "bose-3-modes",
            Box::new(|r: &mut FieldRoster| r.register(FieldSpec::scalar("a", 1.0)).map(|_| ())),
            points3.clone(),
        ),
        (
            "fermi-3-modes",
            Box::new(|r: &mut FieldRoster| {
                r.register(FieldSpec::scalar_with_statistics("c", 0.8, Statistics::Fermi))
                    .map(|_| ())
            }),
            points3.clone(),
        ),
        (
            "mixed-4-modes",
            Box::new(|r: &mut FieldRoster| {
                r.register(FieldSpec::scalar("a", 1.0))?;
                r.register(FieldSpec::scalar_with_statistics("c", 0.8, Statistics::Fermi))
                    .map(|_| ())
            }),
            points3[..2].to_vec(),
        ),
    ];
    for (name, build, points) in cases {
        let mut roster = FieldRoster::new();
        build(&mut roster)?;
        // Occupations capped at 1 and a power-of-two ladder scale keep every
        // bracket entry exact, so the defect must vanish bit for bit.
        let space = FockSpace::new(roster, ModeGrid::from_points(points, 0.25, 1))?;
        out.push(record(
            "ccr",
            name.to_owned(),
            space.ccr_car_defect(),
            0.0,
            Some(format!("dim={}", space.dim)),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// spinor identities
// ---------------------------------------------------------------------------

/// Spinor algebra over a random momentum ensemble: orthonormality, the
/// momentum-space field equations, and the closed-form overlap
/// `u_s†(𝐩)·v_r(𝐩) = (𝐩·σ)_{sr}/E`.
pub fn spinor_suite(seed: u64, samples: usize) -> Vec<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1.0;
    let gamma = gamma_matrices();
    let sigma = pauli_matrices();
    let mut worst_norm = 0.0f64;
    let mut worst_dirac_u = 0.0f64;
    let mut worst_dirac_v = 0.0f64;
    let mut worst_overlap = 0.0f64;
    for _ in 0..samples {
        let p: Vector3<f64> = Vector3::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        let e = (p.norm_squared() + m * m).sqrt();
        let u = [dirac_u(1, &p, m), dirac_u(2, &p, m)];
        let v = [dirac_v(1, &p, m), dirac_v(2, &p, m)];
        for s in 0..2 {
            for r in 0..2 {
                let kr = if s == r { 1.0 } else { 0.0 };
                worst_norm = worst_norm.max((u[s].dotc(&u[r]) - kr).norm());
                worst_norm = worst_norm.max((v[s].dotc(&v[r]) - kr).norm());
                // dotc conjugates its receiver: u†v = u.dotc(v)
                let ps = sigma[0] * C64::new(p.x, 0.0)
                    + sigma[1] * C64::new(p.y, 0.0)
                    + sigma[2] * C64::new(p.z, 0.0);
                let closed = ps[(s, r)] / e;
                worst_overlap = worst_overlap.max((u[s].dotc(&v[r]) - closed).norm());
            }
        }
        let mut slash = gamma[0] * C64::new(e, 0.0);
        for (k, pk) in [p.x, p.y, p.z].into_iter().enumerate() {
            slash -= gamma[k + 1] * C64::new(pk, 0.0);
        }
        let id = Matrix4::<C64>::identity();
        for s in 0..2 {
            worst_dirac_u = worst_dirac_u.max(((slash - id * C64::new(m, 0.0)) * u[s]).norm());
            worst_dirac_v = worst_dirac_v.max(((slash + id * C64::new(m, 0.0)) * v[s]).norm());
        }
    }
    vec![
        record(
            "spinor",
            format!("orthonormality-{samples}"),
            worst_norm,
            1e-12,
            None,
        ),
        record(
            "spinor",
            format!("field-equation-u-{samples}"),
            worst_dirac_u,
            1e-10,
            None,
        ),
        record(
            "spinor",
            format!("field-equation-v-{samples}"),
            worst_dirac_v,
            1e-10,
            None,
        ),
        record(
            "spinor",
            format!("uv-overlap-{samples}"),
            worst_overlap,
            1e-12,
            Some("u†v = (p·sigma)/E".to_owned()),
        ),
    ]
}

// ---------------------------------------------------------------------------
// pairings
// ---------------------------------------------------------------------------

/// Contraction values cross-checked three ways: grid pairing against a dense
/// vacuum expectation, continuum quadrature against a refined mode sum, and
/// the inertness of massive kernels under the scaling limit.
pub fn pairing_suite() -> Result<Vec<CheckRecord>, SuiteError> {
    let mut out = Vec::new();

    // Grid pairing = vacuum expectation of assembled smeared fields, with the
    // metric twist exercised through the temporal polarization.
    let mut roster = FieldRoster::new();
    let photon = roster.register(FieldSpec::photon())?;
    let grid = ModeGrid::from_points(
        vec![Vector3::new(0.4, 0.1, -0.2), Vector3::new(-0.3, 0.5, 0.2)],
        0.2,
        1,
    );
    let space = FockSpace::new(roster, grid)?;
    let phi = SchwartzTestFn::gaussian(&[0.6, 0.1, -0.2, 0.4], &[0.8, 1.0, 1.1, 0.9])
        .expect("valid axes");
    let chi = SchwartzTestFn::gaussian(&[-0.5, 0.3, 0.2, -0.1], &[0.7, 1.2, 0.9, 1.0])
        .expect("valid axes");
    let eps = 0.1;
    let mut worst = 0.0f64;
    for mu in [0usize, 1] {
        let desc = PairingDescriptor {
            field: photon,
            left_dagger: false,
            right_dagger: false,
            left_component: mu,
            right_component: mu,
            left_slot: 0,
            right_slot: 1,
        };
        let direct = space.grid_pairing_value(&desc, &phi, &chi, eps);
        let ma = space.assemble_field(photon, false, mu, &phi, eps)?;
        let mb = space.assemble_field(photon, false, mu, &chi, eps)?;
        let vacuum = (&ma * &mb)[(space.vacuum(), space.vacuum())];
        worst = worst.max((direct - vacuum).norm() / (vacuum.norm() + f64::MIN_POSITIVE));
    }
    out.push(record(
        "pairing",
        "grid-vs-vacuum-expectation".to_owned(),
        worst,
        1e-10,
        Some("photon, temporal and spatial polarization".to_owned()),
    ));

    // Continuum quadrature against a mode sum over a midpoint lattice.
    let mut roster = FieldRoster::new();
    let scalar = roster.register(FieldSpec::scalar("a", 1.0))?;
    let pair = KernelPairSpec {
        field: scalar,
        left_dagger: false,
        right_dagger: false,
        left_component: 0,
        right_component: 0,
    };
    let phi4 = SchwartzTestFn::gaussian(&[0.3, 0.0, 0.1, -0.2], &[1.0; 4]).expect("valid axes");
    let chi4 = SchwartzTestFn::gaussian(&[-0.4, 0.2, 0.0, 0.1], &[1.0; 4]).expect("valid axes");
    let spec = QuadratureSpec {
        half_width: 10.0,
        points_per_axis: 48,
        rule: QuadRule::TensorMidpoint,
        tolerance: 1e-3,
    };
    let integral = contract_integral(&roster, &[pair], &phi4, &chi4, 0.0, &spec)?;
    let lattice = ModeGrid::cubic_centered(40, 0.5, 1);
    let summed = mode_sum_contraction(
        &roster,
        &lattice.points,
        lattice.dv,
        &[pair],
        &phi4,
        &chi4,
        0.0,
    );
    let residual = (integral.value - summed).norm() / (summed.norm() + f64::MIN_POSITIVE);
    out.push(record(
        "pairing",
        "continuum-vs-mode-sum".to_owned(),
        residual,
        1e-3,
        Some(format!("quadrature err {:.2e}", integral.err)),
    ));

    // A massive kernel ignores the deformation parameter entirely.
    let scan = limit_contraction(
        &roster,
        &[pair],
        &phi4,
        &chi4,
        &[0.4, 0.2, 0.1, 0.05],
        &QuadratureSpec::default(),
    )?;
    let worst_diff = scan
        .table
        .iter()
        .map(|s| s.abs_diff)
        .fold(0.0f64, f64::max);
    out.push(record(
        "pairing",
        "massive-scan-inert".to_owned(),
        worst_diff,
        0.0,
        Some(format!("slope={:?}", scan.slope)),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// combinatorics
// ---------------------------------------------------------------------------

/// Independent enumeration of partial matchings between two factor blocks.
fn brute_matchings(n: usize, k: usize) -> u64 {
    fn rec(i: usize, n: usize, used: &mut [bool]) -> u64 {
        if i == n {
            return 1;
        }
        let mut total = rec(i + 1, n, used);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                total += rec(i + 1, n, used);
                used[j] = false;
            }
        }
        total
    }
    let mut used = vec![false; k];
    rec(0, n, &mut used)
}

/// Closed-form counts against brute enumeration: two-block contraction
/// patterns, inductive partitions, and block reordering signs.
pub fn combinatorics_suite() -> Vec<CheckRecord> {
    let mut out = Vec::new();

    let mut bad = 0u32;
    for n in 0..=4u64 {
        for k in 0..=4u64 {
            if term_count(n, n + k) != brute_matchings(n as usize, k as usize) {
                bad += 1;
            }
        }
    }
    out.push(record(
        "combinatorics",
        "contraction-pattern-counts".to_owned(),
        bad as f64,
        0.0,
        Some("n,k <= 4 against brute matchings".to_owned()),
    ));

    let mut bad = 0u32;
    for n in 2..=7usize {
        if crate::causal::partitions(n).len() != (1usize << (n - 1)) - 1 {
            bad += 1;
        }
    }
    out.push(record(
        "combinatorics",
        "partition-counts".to_owned(),
        bad as f64,
        0.0,
        Some("2^(n-1)-1 partitions for n <= 7".to_owned()),
    ));

    let mut bad = 0u32;
    for p in 0..=5usize {
        for q in 0..=5usize {
            let perm: Vec<usize> = (p..p + q).chain(0..p).collect();
            let mask = vec![true; p + q];
            if crate::grassmann::block_swap_sign(p, q) != crate::wick::fermi_sign(&perm, &mask) {
                bad += 1;
            }
        }
    }
    out.push(record(
        "combinatorics",
        "block-swap-signs".to_owned(),
        bad as f64,
        0.0,
        Some("(-1)^{pq} against permutation parity, p,q <= 5".to_owned()),
    ));
    out
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

pub const SUITE_NAMES: [&str; 5] = ["oracle", "ccr", "spinor", "pairing", "combinatorics"];

/// Runs the named suites (or all of them for an empty list / "all").
pub fn run_suites(names: &[String], opts: &SuiteOptions) -> Result<Vec<CheckRecord>, SuiteError> {
    let all = names.is_empty() || names.iter().any(|n| n == "all");
    let wants = |name: &str| all || names.iter().any(|n| n == name);
    let mut out = Vec::new();
    for name in names {
        if name != "all" && !SUITE_NAMES.contains(&name.as_str()) {
            return Err(SuiteError::Unknown(name.clone()));
        }
    }
    if wants("oracle") {
        out.extend(oracle_suite(opts)?);
    }
    if wants("ccr") {
        out.extend(ccr_suite()?);
    }
    if wants("spinor") {
        out.extend(spinor_suite(opts.seed, 1000));
    }
    if wants("pairing") {
        out.extend(pairing_suite()?);
    }
    if wants("combinatorics") {
        out.extend(combinatorics_suite());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_suite_is_clean() {
        let opts = SuiteOptions {
            cases: 6,
            ..Default::default()
        };
        let records = oracle_suite(&opts).unwrap();
        assert_eq!(records.len(), 7);
        for r in &records {
            assert!(r.passed, "{}: residual {}", r.case, r.residual);
        }
    }

    #[test]
    fn injected_sign_error_is_caught() {
        let opts = SuiteOptions {
            cases: 2,
            inject_sign_error: true,
            ..Default::default()
        };
        let records = oracle_suite(&opts).unwrap();
        let control = records.iter().find(|r| r.case == "negative-control").unwrap();
        assert!(!control.passed, "the planted sign error must be detected");
        assert!(control.residual > 1e-3);
    }

    #[test]
    fn ccr_suite_is_exact() {
        for r in ccr_suite().unwrap() {
            assert!(r.passed && r.residual == 0.0, "{}", r.case);
        }
    }

    #[test]
    fn spinor_suite_small_sample() {
        for r in spinor_suite(11, 50) {
            assert!(r.passed, "{}: residual {}", r.case, r.residual);
        }
    }

    #[test]
    fn combinatorics_suite_is_clean() {
        for r in combinatorics_suite() {
            assert!(r.passed, "{}", r.case);
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        let err = run_suites(&["bogus".to_owned()], &SuiteOptions::default()).unwrap_err();
        assert!(matches!(err, SuiteError::Unknown(_)));
    }
}
