//! End-to-end acceptance gate: one test per release criterion, each
//! printing a single PASS/FAIL line (visible with --nocapture).

use std::time::Instant;

use num_complex::Complex64;
use qdh_core::algebra::{singlet_op, Sqrt2Ext};
use qdh_core::analysis::{
    self, local_count_strategy_for, locc_distinguish_omega, omega_ensemble, security_bound,
    trace_distance, OmegaSign,
};
use qdh_core::fock::{FockState, Mode};
use qdh_core::gba;
use qdh_core::protocol::{self, trial_rng, PairSource, SessionConfig};
use qdh_core::states::{
    self, bell, decomposition_rhs_with_signs, theta_poly, BellKind, SourceParams, StateSet,
    DECOMPOSITION_SIGNS,
};

fn report(name: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance {name} failed: {detail}");
}

#[test]
fn a01_four_photon_decomposition_identity() {
    let c = states::verify_decomposition().expect("proportional");
    let exact = c == Sqrt2Ext::ratio(1, 2);

    // negative control: flipping any single sign must break the identity
    let mut mutations_break = true;
    for k in 0..10 {
        let mut signs = DECOMPOSITION_SIGNS;
        signs[k] = -signs[k];
        let rhs = decomposition_rhs_with_signs(&signs);
        if theta_poly().proportionality_to(&rhs).is_some() {
            mutations_break = false;
        }
    }
    report(
        "four-photon-decomposition",
        exact && mutations_break,
        &format!("constant = {c}, all 10 sign flips rejected: {mutations_break}"),
    );
}

#[test]
fn a02_basis_states_are_orthonormal() {
    let states: Vec<FockState> = BellKind::ALL
        .iter()
        .map(|&k| bell(k, 2, 4).unwrap())
        .collect();
    let mut worst = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b) - Complex64::new(expect, 0.0)).norm());
        }
    }
    report(
        "basis-orthonormality",
        worst <= 1e-12,
        &format!("max |gram - identity| = {worst:.3e}"),
    );
}

#[test]
fn a03_analyzer_table_is_deterministic() {
    let circuit = gba::calibrate().unwrap();
    let mut ok = true;
    for (which, &kind) in BellKind::ALL.iter().enumerate() {
        let state = bell(kind, 2, 4).unwrap();
        let mut rng = trial_rng(0xa03, which as u64);
        for _ in 0..1000 {
            let (outcome, _) = gba::measure(&state, (2, 4), &circuit, &mut rng).unwrap();
            if outcome.klass != Some(kind.gba_class()) {
                ok = false;
            }
        }
    }
    report(
        "analyzer-table",
        ok,
        "10 input states x 1000 seeded shots all classified per table",
    );
}

#[test]
fn a04_heralded_statistics_match_theory() {
    let start = Instant::now();
    let params = SourceParams::new(0.01).unwrap();
    let circuit = gba::calibrate().unwrap();
    let source = PairSource::new(params, circuit).unwrap();

    let labels: Vec<(BellKind, FockState)> = BellKind::ALL
        .iter()
        .map(|&k| (k, bell(k, 2, 4).unwrap()))
        .collect();

    const HERALDS: usize = 100_000;
    let mut rng = trial_rng(0xa04, 0);
    let mut label_counts = [0u64; 10];
    let mut class_counts = [0u64; 3];
    let mut s1_count = 0u64;
    for _ in 0..HERALDS {
        let record = source.next_heralded(&mut rng);
        class_counts[record.klass.index()] += 1;
        // resolve the posterior into one of the ten labels by a Born draw
        let mut draw = rand::Rng::random::<f64>(&mut rng);
        let mut chosen = 0usize;
        for (idx, (_, ket)) in labels.iter().enumerate() {
            let p = ket.inner(&record.pair_state).norm_sqr();
            if draw < p {
                chosen = idx;
                break;
            }
            draw -= p;
        }
        label_counts[chosen] += 1;
        if labels[chosen].0.set() == StateSet::S1 {
            s1_count += 1;
        }
    }

    let label_err = label_counts
        .iter()
        .map(|&c| (c as f64 / HERALDS as f64 - 0.1).abs())
        .fold(0.0, f64::max);
    let class_freq: Vec<f64> = class_counts
        .iter()
        .map(|&c| c as f64 / HERALDS as f64)
        .collect();
    let class_err = [(class_freq[0] - 0.2).abs(), (class_freq[1] - 0.2).abs(),
        (class_freq[2] - 0.6).abs()]
    .into_iter()
    .fold(0.0, f64::max);
    let s1_freq = s1_count as f64 / HERALDS as f64;
    let overhead = 1.0 / s1_freq;
    let secs = start.elapsed().as_secs_f64();

    let ok = label_err <= 0.01
        && class_err <= 0.01
        && (s1_freq - 0.4).abs() <= 0.01
        && (overhead - 2.5).abs() <= 0.06
        && secs < 60.0;
    report(
        "heralded-statistics",
        ok,
        &format!(
            "label err {label_err:.4}, class err {class_err:.4}, S1 {s1_freq:.4}, \
             overhead {overhead:.3}, {secs:.1}s"
        ),
    );
}

#[test]
fn a05_heralding_soundness_by_enumeration() {
    let circuit = gba::calibrate().unwrap();
    // vacuum event: no clicks
    let vac_ok = {
        let branches =
            gba::outcome_distribution(&FockState::vacuum(), (1, 3), &circuit).unwrap();
        branches.iter().all(|b| b.pattern.total() == 0)
    };
    // one-pair event: exactly one photon reaches the analyzer
    let single_ok = {
        let one_pair = singlet_op(1, 2)
            .unwrap()
            .add(&singlet_op(3, 4).unwrap())
            .apply_to_vacuum()
            .normalized();
        let branches = gba::outcome_distribution(&one_pair, (1, 3), &circuit).unwrap();
        branches.iter().all(|b| b.pattern.total() == 1)
    };
    // two-pair event: always a two-click herald with a defined class
    let theta_ok = {
        let theta = states::theta().normalized();
        let branches = gba::outcome_distribution(&theta, (1, 3), &circuit).unwrap();
        !branches.is_empty()
            && branches
                .iter()
                .all(|b| b.pattern.total() == 2 && gba::classify(&b.pattern).is_ok())
    };
    report(
        "heralding-soundness",
        vac_ok && single_ok && theta_ok,
        &format!("vacuum {vac_ok}, one-pair {single_ok}, two-pair {theta_ok}"),
    );
}

#[test]
fn a06_decode_always_recovers_the_secret() {
    let start = Instant::now();
    let mut all_ok = true;
    let mut detail = String::new();
    for &n in &[1usize, 2, 4, 8, 16] {
        for secret in 0u8..=1 {
            let config = SessionConfig {
                n,
                secret,
                p: 0.1,
                trials: 1000,
                seed: 0xa06 ^ (n as u64) << 8 ^ secret as u64,
            };
            let run = protocol::run_sessions(&config, false).unwrap();
            if run.stats.success_rate != 1.0 {
                all_ok = false;
                detail = format!("n={n} b={secret}: rate {}", run.stats.success_rate);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = all_ok && secs < 30.0;
    if detail.is_empty() {
        detail = format!("10 configs x 1000 sessions all decoded, {secs:.1}s");
    }
    report("decode-correctness", ok, &detail);
}

#[test]
fn a07_security_bound_closed_form() {
    let mut ok = true;
    for m in 1..=20u32 {
        let bound = security_bound(m, &[0.5, 0.5]).unwrap();
        if bound != 2f64.powi(1 - m as i32) {
            ok = false;
        }
    }
    report(
        "security-bound",
        ok,
        "bound(m, uniform) = 2^(1-m) exactly for m = 1..=20",
    );
}

#[test]
fn a08_hiding_ensembles_are_orthogonal() {
    let mut ok = true;
    let mut detail = String::new();
    for n in 1..=2usize {
        let r0 = analysis::hiding_density_matrix(0, n).unwrap();
        let r1 = analysis::hiding_density_matrix(1, n).unwrap();
        let product = r0.mul(&r1).unwrap();
        let worst = product.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let dist = trace_distance(&r0, &r1).unwrap();
        if worst > 1e-10 || (dist - 1.0).abs() > 1e-10 {
            ok = false;
        }
        detail.push_str(&format!("n={n}: |r0 r1| {worst:.1e}, T {dist:.12}; "));
    }
    report("ensemble-orthogonality", ok, detail.trim_end_matches("; "));
}

#[test]
fn a09_omega_pair_locc_distinguishable_but_count_blind() {
    let mut rng = trial_rng(0xa09, 0);
    let mut locc_ok = true;
    for _ in 0..1000 {
        if locc_distinguish_omega(OmegaSign::Plus, &mut rng).unwrap() != OmegaSign::Plus {
            locc_ok = false;
        }
        if locc_distinguish_omega(OmegaSign::Minus, &mut rng).unwrap() != OmegaSign::Minus {
            locc_ok = false;
        }
    }
    let (rp, rm) = omega_ensemble().unwrap();
    let counting = local_count_strategy_for(&rp, &rm, &[0.5, 0.5], "omega").unwrap();
    let blind = counting.mutual_information.abs() <= 1e-9;
    report(
        "omega-discrimination",
        locc_ok && blind,
        &format!(
            "2000 two-round runs exact, counting I = {:.2e} bits",
            counting.mutual_information
        ),
    );
}

#[test]
fn a10_engine_agrees_with_exact_oracle() {
    // independent ladder-operator construction of the two-pair component
    let singlet_ladder = |state: &FockState, i: u32, j: u32| {
        let a = state.create(Mode::h(i)).unwrap().create(Mode::v(j)).unwrap();
        let b = state.create(Mode::v(i)).unwrap().create(Mode::h(j)).unwrap();
        a.sub(&b)
            .scaled(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
    };
    let vac = FockState::vacuum();
    let half = Complex64::new(0.5, 0.0);
    let cross = singlet_ladder(&singlet_ladder(&vac, 1, 2), 3, 4);
    let dbl12 = singlet_ladder(&singlet_ladder(&vac, 1, 2), 1, 2).scaled(half);
    let dbl34 = singlet_ladder(&singlet_ladder(&vac, 3, 4), 3, 4).scaled(half);
    let ladder_theta = cross.add(&dbl12).add(&dbl34);

    let oracle_theta = theta_poly().apply_to_vacuum();
    let mut worst = 0.0f64;
    for (occ, amp) in oracle_theta.terms() {
        worst = worst.max((amp - ladder_theta.amplitude(occ)).norm());
    }
    for (occ, amp) in ladder_theta.terms() {
        worst = worst.max((amp - oracle_theta.amplitude(occ)).norm());
    }

    let norm2 = theta_poly().exact_norm2();
    let norm_ok = norm2 == Sqrt2Ext::ratio(5, 2);
    let dbl = singlet_op(1, 2)
        .unwrap()
        .mul(&singlet_op(1, 2).unwrap())
        .scaled(&Sqrt2Ext::ratio(1, 2));
    let dbl_ok = dbl.exact_norm2() == Sqrt2Ext::ratio(3, 4);

    report(
        "oracle-agreement",
        worst <= 1e-12 && norm_ok && dbl_ok,
        &format!("max ket error {worst:.3e}, |theta|^2 = {norm2}, double-pair term 3/4"),
    );
}
