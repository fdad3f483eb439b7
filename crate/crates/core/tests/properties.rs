use cstar_workbench::algebra::{
    commutant, generate_algebra, kinematic_independence, wedderburn_decompose, StarAlgebra,
};
use cstar_workbench::bitcommit::{
    acceptance_threshold, build_commit_states, run_epr_attack, run_honest, run_lying, ObservablePair,
};
use cstar_workbench::classical::gelfand_transform;
use cstar_workbench::gns::{gns_construct, is_pure_on, AmbiguousMixture};
use cstar_workbench::linalg::{self, cr, frobenius, kron, random_hermitian, random_unitary, Side};
use cstar_workbench::scenario::{bundled_scenario, parse_algebra, run_scenario, Payload};
use cstar_workbench::states::{
    conveys_no_info, state_distance, transition_probability, transition_probability_full, Bipartition, Channel,
    State,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRESETS: [&str; 8] = ["M2", "M3", "M2+C", "M2xI2", "I2xM2", "D3", "M2+D2", "D2+S2"];

fn random_algebra(preset: usize, seed: u64) -> StarAlgebra {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alg = parse_algebra(PRESETS[preset % PRESETS.len()]).unwrap();
    alg.conjugate(&random_unitary(alg.ambient_dim(), &mut rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn double_commutant_is_the_algebra(preset in 0usize..8, seed in any::<u64>()) {
        let alg = random_algebra(preset, seed);
        let comm = commutant(&alg).unwrap();
        prop_assert!(kinematic_independence(&alg, &comm).unwrap());
        let back = commutant(&comm).unwrap();
        prop_assert!(back.same_span(&alg, 1e-9));
    }

    #[test]
    fn wedderburn_dimension_and_shape(preset in 0usize..8, seed in any::<u64>()) {
        let alg = random_algebra(preset, seed);
        let blocks = wedderburn_decompose(&alg).unwrap();
        prop_assert_eq!(blocks.algebra_dim(), alg.dim());
        prop_assert!(blocks.residual(&alg) < 1e-9);
        let u = blocks.unitary();
        prop_assert!(frobenius(&(u.adjoint() * &u - linalg::identity(alg.ambient_dim()))) < 1e-9);
    }

    #[test]
    fn generation_is_idempotent(preset in 0usize..8, seed in any::<u64>()) {
        let alg = random_algebra(preset, seed);
        let again = generate_algebra(alg.basis(), alg.ambient_dim()).unwrap();
        prop_assert!(again.same_span(&alg, 1e-9));
    }

    #[test]
    fn adjoint_is_an_exact_involution(n in 1usize..6, seed in any::<u64>()) {
        let m = linalg::ginibre(n, n, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn schrodinger_heisenberg_duality(n in 2usize..5, rank in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Channel::random(n, rank, &mut rng);
        let rho = State::random(n, &mut rng);
        let a = linalg::ginibre(n, n, &mut rng);
        let lhs = (t.schrodinger(&rho).unwrap().density() * &a).trace() * rho.expect(&t.identity_image());
        let rhs = rho.expect(&t.heisenberg(&a).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn channels_contract_state_distance(preset in 0usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = random_algebra(preset, seed);
        let n = alg.ambient_dim();
        let t = Channel::random(n, 3, &mut rng);
        let (rho, omega) = (State::random(n, &mut rng), State::random(n, &mut rng));
        let full = StarAlgebra::full(n);
        let before = state_distance(&rho, &omega, &full).unwrap();
        let after = state_distance(&t.schrodinger(&rho).unwrap(), &t.schrodinger(&omega).unwrap(), &full).unwrap();
        prop_assert!(after <= before + 1e-9);
        // restriction to a subalgebra can only lose distinguishability
        prop_assert!(state_distance(&rho, &omega, &alg).unwrap() <= before + 1e-9);
    }

    #[test]
    fn pure_transition_probability_is_squared_overlap(n in 2usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (linalg::random_unit_vector(n, &mut rng), linalg::random_unit_vector(n, &mut rng));
        let p = transition_probability(&State::pure(&x), &State::pure(&y), &StarAlgebra::full(n)).unwrap();
        let overlap = x.dotc(&y).norm_sqr();
        prop_assert!((p - overlap).abs() < 1e-9);
        // nonorthogonal, distinct pure states: duplication strictly lowers the overlap
        prop_assert!(p * p < p);
    }

    #[test]
    fn duplication_identities(n in 2usize..4, m in 2usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = linalg::random_unit_vector(n, &mut rng);
        let (r0, r1) = (State::pure(&x), State::pure(&(random_unitary(n, &mut rng) * &x)));
        let sigma = State::random(m, &mut rng);
        let p = transition_probability_full(&r0, &r1);
        prop_assert!((transition_probability_full(&r0.tensor(&sigma), &r1.tensor(&sigma)) - p).abs() < 1e-8);
        prop_assert!((transition_probability_full(&r0.tensor(&r0), &r1.tensor(&r1)) - p * p).abs() < 1e-8);
    }

    #[test]
    fn pure_marginal_forces_a_product(da in 2usize..4, db in 2usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // condition a generic joint state on a pure state of the first factor
        let joint = State::random(da * db, &mut rng);
        let proj = kron(&linalg::projector(&linalg::random_unit_vector(da, &mut rng)), &linalg::identity(db));
        let d = &proj * joint.density() * &proj;
        let rho = State::new(&d / d.trace()).unwrap();
        let marg = linalg::partial_trace(rho.density(), da, db, Side::A).unwrap();
        prop_assert!((marg.trace() - (&marg * &marg).trace()).norm() < 1e-9);
        let bip = Bipartition::new(da, db);
        for a in StarAlgebra::full(da).basis() {
            for b in StarAlgebra::full(db).basis() {
                let joint_value = rho.expect(&kron(a, b));
                let split = rho.expect(&bip.lift_a(a)) * rho.expect(&bip.lift_b(b));
                prop_assert!((joint_value - split).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn gns_reproduces_the_state(preset in 0usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = random_algebra(preset, seed);
        let rho = State::random(alg.ambient_dim(), &mut rng);
        let g = gns_construct(&alg, &rho).unwrap();
        prop_assert!(g.state_residual(&rho) < 1e-10);
        prop_assert!(g.homomorphism_residual() < 1e-9);
        prop_assert_eq!(g.cyclic_span_dim(), g.carrier_dim);
    }

    #[test]
    fn alice_local_channels_never_signal_to_bob(da in 2usize..4, db in 2usize..4, rank in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Channel::random(da, rank, &mut rng).tensor_identity(db);
        prop_assert!(conveys_no_info(&t, &Bipartition::new(da, db).algebra_b()).unwrap());
    }

    #[test]
    fn gelfand_values_are_real_on_self_adjoint(n in 2usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = generate_algebra(&[random_hermitian(n, &mut rng)], n).unwrap();
        let g = gelfand_transform(&alg).unwrap();
        // points are exactly the pure states: one per algebra dimension
        prop_assert_eq!(g.space.len(), alg.dim());
        for x in 0..g.space.len() {
            prop_assert!(is_pure_on(&g.point_state(x), &alg).unwrap());
        }
        let h = alg.random_hermitian(&mut rng);
        prop_assert!(g.transform(&h).iter().all(|v| v.im.abs() < 1e-10));
    }

    #[test]
    fn observables_square_to_identity(v in prop::array::uniform3(-5.0f64..5.0)) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-6);
        let o = ObservablePair::bloch(v);
        prop_assert!(frobenius(&(&o * &o - linalg::identity(2))) < 1e-12);
    }

    #[test]
    fn transcripts_are_consistent(bit in 0u8..2, rounds in 50usize..400, seed in any::<u64>()) {
        let pair = build_commit_states(&AmbiguousMixture::qubit());
        for t in [
            run_honest(&pair, bit, rounds, 0.01, seed).unwrap(),
            run_lying(&pair, bit, rounds, 0.01, seed).unwrap(),
            run_epr_attack(&pair, bit, rounds, 0.01, seed).unwrap(),
        ] {
            prop_assert!(t.is_consistent());
            prop_assert_eq!(t.tallies.agree + t.tallies.disagree, rounds);
        }
    }
}

#[test]
fn concealment_is_exact() {
    let pair = build_commit_states(&AmbiguousMixture::qubit());
    assert!(pair.concealment_residual().unwrap() < 1e-12);
    let (w1, w2) = (pair.mixture.omega1.density(), pair.mixture.omega2.density());
    let d0 = (kron(w1, w1) + kron(w2, w2)) * cr(0.5);
    assert!(frobenius(&(d0 - pair.rho0.density())) < 1e-12);
}

#[test]
fn steering_reaches_all_four_states_with_equal_weights() {
    let pair = build_commit_states(&AmbiguousMixture::qubit());
    for bit in [0, 1] {
        let t = run_epr_attack(&pair, bit, 2000, 0.01, 11 + bit as u64).unwrap();
        assert!(t.residuals["conditional_states"] < 1e-9);
        assert!(t.residuals["conditional_probabilities"] < 1e-9);
        assert!(t.residuals["weight_deviation_sigma"] <= 5.0);
    }
}

/// `ln P(Binomial(n, ½) >= k)`, summed in log space.
fn log_upper_tail(n: usize, k: usize) -> f64 {
    let ln_choose = |j: usize| -> f64 {
        (1..=j).map(|i| ((n - j + i) as f64).ln() - (i as f64).ln()).sum()
    };
    let terms: Vec<f64> = (k..=n).map(|j| ln_choose(j) - n as f64 * 2f64.ln()).collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

#[test]
fn lying_acceptance_probability_is_exponentially_small() {
    for rounds in [500usize, 1000, 2000, 5000] {
        let k = (acceptance_threshold(0.01, rounds) * rounds as f64).ceil() as usize;
        let ln_p = log_upper_tail(rounds, k);
        assert!(ln_p <= -(rounds as f64) / 50.0, "rounds {rounds}: ln P = {ln_p}");
    }
    let pair = build_commit_states(&AmbiguousMixture::qubit());
    let accepted = (0..50).filter(|&s| run_lying(&pair, 1, 500, 0.01, s).unwrap().accept).count();
    assert_eq!(accepted, 0);
}

#[test]
fn failed_checks_carry_witnesses() {
    for name in ["broadcast-commuting-noncommuting", "ambiguous-mixture-d3"] {
        let r = run_scenario(&bundled_scenario(name).unwrap().unwrap());
        match r.payload.unwrap() {
            Payload::Check(c) => {
                assert!(!c.witnesses.is_empty(), "{name}");
                assert!(c.is_well_formed());
                assert!(c.residuals.values().all(|v| v.is_finite()));
            }
            Payload::Transcript(_) => panic!("{name} should produce a check report"),
        }
    }
}

#[test]
fn classical_broadcaster_is_not_injective() {
    let r = run_scenario(&bundled_scenario("broadcast-classical").unwrap().unwrap());
    let collision = r.payload.unwrap().residual("collision_distance").unwrap();
    assert_eq!(collision, 0.0);
}
