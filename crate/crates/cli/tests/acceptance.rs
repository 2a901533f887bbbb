//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use kext_core::bounds::{
    best_bound, erasure_privcap_bound, isotropic_key_bound, key_bound, key_bound_nshot_sandwich, min_copies_isotropic,
    min_uses_erasure, privcap_nshot_geo,
};
use kext_core::conic::{SolveOptions, SolveStatus};
use kext_core::diverge::{
    dh_bernoulli_n, dh_classical, dh_quantum, e_geo_channel, e_hyp_state, BinaryDistributionPair, ExtOrder,
};
use kext_core::privtest::{
    max_pass_probability_ext, pass_probability, pass_probability_ceiling, privacy_test, private_state, ControlRegister,
    ExtensionMode, TwistSpec,
};
use kext_core::qmat::{depolarize_subsystem, erasure_choi, fidelity, isotropic, partial_trace, random, DensityMatrix};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_kext");
const INSTANCES: usize = 50;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {:.1}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn diagonal(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|i| rho.as_matrix()[(i, i)].re).collect()
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn ceiling_criterion() -> Check {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut values = Vec::new();
    for (d, k, expected) in [(2, 2, 0.75), (2, 3, 2.0 / 3.0), (3, 2, 2.0 / 3.0)] {
        let test = privacy_test(&TwistSpec::identity(d, (1, 1)).map_err(e)?).map_err(e)?;
        let r = max_pass_probability_ext(&test, (d, d), k, ExtensionMode::Twirled, &opts).map_err(e)?;
        ensure(r.status == SolveStatus::Optimal && (r.value - expected).abs() < 1e-5, || {
            format!("trivial shields d={d} k={k}: {} vs {expected}", r.value)
        })?;
        values.push(format!("{:.6}", r.value));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..5 {
        let spec = TwistSpec::random(&mut rng, 2, (2, 2), ControlRegister::A).map_err(e)?;
        let test = privacy_test(&spec).map_err(e)?;
        let r = max_pass_probability_ext(&test, (4, 4), 2, ExtensionMode::Twirled, &opts).map_err(e)?;
        ensure(r.value <= 0.75 + 1e-5 && r.value >= 0.75 - 1e-4, || format!("random twist optimum {}", r.value))?;
        worst = (worst.0.min(r.value), worst.1.max(r.value));
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "trivial {}; random twists in [{:.8}, {:.8}]; {:.1}s",
        values.join(", "),
        worst.0,
        worst.1,
        start.elapsed().as_secs_f64()
    ))
}

fn erasure_datum_criterion() -> Check {
    let start = Instant::now();
    let mut largest = None;
    for n in 1..=1000 {
        let v = dh_bernoulli_n(&BinaryDistributionPair::new(0.7, 0.5, n).map_err(e)?, 1e-5).map_err(e)?.bits;
        if v <= 1.0 {
            largest = Some(n);
        } else {
            break;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    ensure(largest == Some(104), || format!("largest n = {largest:?}"))?;
    Ok(format!("largest n = 104; {:.3}s", start.elapsed().as_secs_f64()))
}

fn oracle_equivalence_criterion() -> Check {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut max_gap: f64 = 0.0;
    for f in [0.8, 0.9, 0.95] {
        for eps in [0.01, 0.05] {
            let sdp = e_hyp_state(&isotropic(f, 2).map_err(e)?, (2, 2), 2, eps, &opts).map_err(e)?.bits;
            let bern = dh_bernoulli_n(&BinaryDistributionPair::new(f, 0.75, 1).map_err(e)?, eps).map_err(e)?.bits;
            max_gap = max_gap.max((sdp - bern).abs());
            ensure((sdp - bern).abs() < 1e-4, || format!("F={f} eps={eps}: sdp {sdp} vs {bern}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("max gap {max_gap:.2e}; {:.2}s", start.elapsed().as_secs_f64()))
}

fn key_bound_values_criterion() -> Check {
    let k2 = ExtOrder::Finite(2);
    let a = isotropic_key_bound(0.95, 2, k2, 1, 0.05).map_err(e)?.bits;
    let b = isotropic_key_bound(1.0, 2, k2, 1, 0.05).map_err(e)?.bits;
    ensure((a - 1.0).abs() < 1e-4, || format!("F=0.95: {a}"))?;
    ensure((b - 1.2345).abs() < 1e-3, || format!("F=1: {b}"))?;
    Ok(format!("F=0.95 -> {a:.6}, F=1 -> {b:.6}"))
}

fn invariants_criterion() -> Check {
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut count = 0;

    for _ in 0..INSTANCES {
        let (r1, r2) = (1 + (rng.next_u32() % 6) as usize, 1 + (rng.next_u32() % 6) as usize);
        let rho = random::state(&mut rng, &[2, 3], r1);
        let sigma = random::state(&mut rng, &[2, 3], r2);
        let reduced = partial_trace(rho.hermitian(), &[2, 3], &[1]).map_err(e)?;
        ensure((reduced.trace() - 1.0).abs() < 1e-10 && reduced.min_eigenvalue() > -1e-10, || "partial trace".into())?;
        let (f1, f2) = (fidelity(&rho, &sigma).map_err(e)?, fidelity(&sigma, &rho).map_err(e)?);
        ensure((f1 - f2).abs() < 1e-9 && (0.0..=1.0).contains(&f1), || format!("fidelity {f1} {f2}"))?;
    }
    count += 2;

    for _ in 0..INSTANCES {
        let d = 2 + (rng.next_u32() % 2) as usize;
        let shields = (1 + (rng.next_u32() % 2) as usize, 1 + (rng.next_u32() % 2) as usize);
        let spec = TwistSpec::random(&mut rng, d, shields, ControlRegister::A).map_err(e)?;
        let tau = random::state(&mut rng, &[shields.0, shields.1], 1);
        let gamma = private_state(&spec, &tau).map_err(e)?;
        let test = privacy_test(&spec).map_err(e)?;
        let pass = pass_probability(&test, &gamma).map_err(e)?;
        ensure((pass - 1.0).abs() < 1e-8, || format!("private state passes with {pass}"))?;
        ensure(pass_probability_ceiling(d, 2) <= 1.0, || "ceiling".into())?;
    }
    count += 1;

    for _ in 0..INSTANCES {
        let n = 2 + (rng.next_u32() % 3) as usize;
        let rho = random::diagonal_state(&mut rng, n);
        let sigma = random::diagonal_state(&mut rng, n);
        let eps = 0.3 * uniform(&mut rng);
        let q = dh_quantum(&rho, &sigma, eps, &opts).map_err(e)?.bits;
        let c = dh_classical(&diagonal(&rho), &diagonal(&sigma), eps).map_err(e)?.bits;
        ensure((q - c).abs() < 1e-6, || format!("commuting pair: {q} vs {c}"))?;
        ensure(c >= -(1.0 - eps).log2() - 1e-9, || format!("trivial lower bound: {c}"))?;
    }
    count += 2;

    for _ in 0..INSTANCES {
        let rho = random::state(&mut rng, &[2, 2], 2);
        let sigma = random::state(&mut rng, &[2, 2], 4);
        let mut last = f64::NEG_INFINITY;
        for eps in [0.0, 0.01, 0.05, 0.2] {
            let v = dh_quantum(&rho, &sigma, eps, &opts).map_err(e)?.bits;
            ensure(v >= last - 1e-6, || format!("eps monotonicity: {v} after {last}"))?;
            last = v;
        }
    }
    count += 1;

    for _ in 0..INSTANCES {
        let rank = 1 + (rng.next_u32() % 2) as usize;
        let rho = random::state(&mut rng, &[2, 2], rank);
        let e2 = e_hyp_state(&rho, (2, 2), 2, 0.05, &opts).map_err(e)?.bits;
        let e3 = e_hyp_state(&rho, (2, 2), 3, 0.05, &opts).map_err(e)?.bits;
        ensure(e3 >= e2 - 1e-6, || format!("k monotonicity: {e2} then {e3}"))?;
        let mut last = e2;
        for q in [0.1, 0.3, 0.6] {
            let v = e_hyp_state(&depolarize_subsystem(&rho, 1, q).map_err(e)?, (2, 2), 2, 0.05, &opts).map_err(e)?.bits;
            ensure(v <= last + 1e-6, || format!("data processing q={q}: {v} after {last}"))?;
            last = v;
        }
    }
    count += 2;

    for k in [2u64, 3, 5, 16] {
        let top = (k as f64).log2();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..100 {
            let x = top * i as f64 / 100.0;
            let b = key_bound(x, ExtOrder::Finite(k)).map_err(e)?.bits;
            ensure(b > prev && b - x >= -1e-9, || format!("key bound at k={k} E={x}: {b}"))?;
            prev = b;
        }
        for x in [0.0, 0.1, 0.4, 0.9] {
            let one = key_bound(x, ExtOrder::Finite(k)).map_err(e)?;
            let n1 = key_bound_nshot_sandwich(x, 1, ExtOrder::Finite(k), f64::INFINITY, 0.0).map_err(e)?;
            ensure(one.valid == n1.valid && (!one.valid || (one.bits - n1.bits).abs() < 1e-12), || "collapse".into())?;
        }
    }
    count += 3;

    for _ in 0..INSTANCES {
        let k = ExtOrder::Finite(2 + rng.next_u64() % 100);
        let r = privcap_nshot_geo(0.5 * uniform(&mut rng), 1 + rng.next_u64() % 20, k, 1.5, 0.1 * uniform(&mut rng))
            .map_err(e)?;
        let again = r.recompute().map_err(e)?;
        ensure(again == r, || "recompute round trip".into())?;
    }
    count += 1;

    let ks = [ExtOrder::Finite(2), ExtOrder::Infinite];
    let scan = (1..).find(|&n| best_bound(&ks, |k| erasure_privcap_bound(0.3, k, n, 1e-5)).unwrap().0 >= 1.0).unwrap();
    let found = min_uses_erasure(0.3, 1e-5, &ks).map_err(e)?.n_min;
    ensure(found == scan, || format!("erasure search {found} vs scan {scan}"))?;
    let ks = [ExtOrder::Finite(2), ExtOrder::Finite(3), ExtOrder::Infinite];
    for f in [0.8, 0.9, 0.95, 1.0] {
        let scan =
            (1..).find(|&n| best_bound(&ks, |k| isotropic_key_bound(f, 2, k, n, 1e-5)).unwrap().0 >= 1.0).unwrap();
        let found = min_copies_isotropic(f, 2, 1e-5, &ks).map_err(e)?.n_min;
        ensure(found == scan, || format!("isotropic search F={f}: {found} vs scan {scan}"))?;
    }
    count += 1;

    Ok(format!("{count} properties on {INSTANCES} seeded instances each where applicable"))
}

fn geometric_criterion() -> Check {
    let opts = SolveOptions::default();
    let at_half = e_geo_channel(&erasure_choi(0.5, 2).map_err(e)?, 2, 1, &opts).map_err(e)?.bits;
    let at_03 = e_geo_channel(&erasure_choi(0.3, 2).map_err(e)?, 2, 1, &opts).map_err(e)?.bits;
    ensure(at_half <= 1e-6, || format!("p=0.5: {at_half}"))?;
    ensure(at_03 > 0.0 && at_03 <= 0.169878 + 1e-4, || format!("p=0.3: {at_03}"))?;
    Ok(format!("p=0.5 -> {at_half:.2e}, p=0.3 -> {at_03:.6}"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(BIN).args(args).output().map_err(e)?;
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(format!("{args:?} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

fn records(bytes: &[u8]) -> Result<Vec<csv::StringRecord>, String> {
    csv::Reader::from_reader(bytes).records().collect::<Result<_, _>>().map_err(e)
}

fn shape_criterion() -> Check {
    let start = Instant::now();
    let rates =
        records(&run_cli(&["fig2", "--fidelity", "0.95", "--eps", "1e-5", "--k", "2,3,100000,inf", "--n", "1:50"])?)?;
    let valid = |k: &str| -> Vec<bool> { rates.iter().filter(|r| &r[1] == k).map(|r| &r[5] == "true").collect() };
    let k2 = valid("2");
    let end = k2.iter().position(|v| !v).ok_or("k=2 curve never terminates")?;
    ensure(k2[end..].iter().all(|v| !v), || "k=2 curve resumes after terminating".into())?;
    ensure(valid("inf").iter().all(|v| *v), || "k=inf curve terminates".into())?;

    let copies =
        records(&run_cli(&["fig3", "--fidelity", "0.8:1.0:0.01", "--eps", "1e-5,1e-3,0.01,0.05", "--k", "2,3,inf"])?)?;
    let n_min = |r: &csv::StringRecord| -> f64 {
        if &r[2] == "inf" {
            f64::INFINITY
        } else {
            r[2].parse().unwrap()
        }
    };
    let eps_list = ["0.00001", "0.001", "0.01", "0.05"];
    let rows: Vec<Vec<f64>> =
        eps_list.iter().map(|eps| copies.iter().filter(|r| &r[1] == *eps).map(n_min).collect()).collect();
    for (eps, row) in eps_list.iter().zip(&rows) {
        ensure(row.windows(2).all(|w| w[1] <= w[0]), || format!("n_min not nonincreasing in F at eps={eps}"))?;
    }
    for pair in rows.windows(2) {
        ensure(pair[0].iter().zip(&pair[1]).all(|(a, b)| a >= b), || "n_min decreased with smaller eps".into())?;
    }
    let single = min_copies_isotropic(1.0, 2, 1e-5, &[ExtOrder::Finite(2), ExtOrder::Infinite]).map_err(e)?.n_min;
    ensure(single == 1, || format!("F=1 needs {single} copies"))?;
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("k=2 ends after n={end}; F=1 needs 1 copy; {:.2}s", start.elapsed().as_secs_f64()))
}

fn determinism_criterion() -> Check {
    let commands: [&[&str]; 6] = [
        &["privacy-max", "--d", "2", "--k", "2", "--random-twist", "--seed", "7"],
        &["fig1", "--fidelity", "0.75:1.0:0.05", "--k", "2,inf"],
        &["fig2", "--n", "1:50", "--k", "2,3,inf"],
        &["fig3", "--fidelity", "0.8:1.0:0.05"],
        &["fig4a", "--n", "1:120"],
        &["fig4b", "--p", "0:0.45:0.05"],
    ];
    for args in commands {
        let a = run_cli(args)?;
        let b = run_cli(&[args, &["--jobs", "1"]].concat())?;
        ensure(a == b, || format!("{args:?} differs between runs"))?;
    }
    Ok(format!("{} commands byte-identical across runs", commands.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("privacy test ceiling", ceiling_criterion),
        ("erasure use count datum", erasure_datum_criterion),
        ("isotropic SDP vs Bernoulli oracle", oracle_equivalence_criterion),
        ("derived key-bound values", key_bound_values_criterion),
        ("invariant suites", invariants_criterion),
        ("geometric SDP sanity", geometric_criterion),
        ("rate curve and minimum-copy shape properties", shape_criterion),
        ("CLI determinism", determinism_criterion),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({why})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
