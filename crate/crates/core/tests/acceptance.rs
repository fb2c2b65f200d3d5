//! Acceptance suite: one verdict line per criterion.
//!
//! Criteria that are out of reach by construction are still evaluated at
//! their stated tolerance and reported as `FAIL (expected)`; the suite only
//! fails on an unexpected verdict or a broken internal oracle.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use cocycle::averages::{
    agree, ergodicity_correlation, exact_average_series, exact_correlation_average,
    reduced_average_series, zero_entropy_proxy, ratio_check, ArcSet, AverageSeries, PartitionStepFn,
    ThetaFilter,
};
use cocycle::eset::{
    generate_paper_schedule, verify_schedule, BoundFn, ConstantsSource, ESet, LogNum, Schedule,
};
use cocycle::rotation::{advance, resolve_alpha, AlphaSpec, FixedAngle};
use cocycle::sampling::{sample_thetas, stream, with_threads, Purpose};
use cocycle::symbolic::{
    apply_pi_e, apply_s, apply_t, mc_triple_average, CylinderSpec, MonteCarloOptions, SymbolWindow,
    SymbolicPoint,
};
use cocycle::walk::{estimate_constants, run_walk};
use rand::Rng;

const DESK_PAIRS: [(u64, u64); 2] = [(2, 6), (30, 300)];
const SEED: u64 = 1;

fn golden() -> FixedAngle {
    resolve_alpha(&AlphaSpec::Golden).expect("golden resolves")
}

fn pilot() -> toml::Table {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../config/pilot.toml");
    std::fs::read_to_string(&path)
        .expect("pilot values are checked in")
        .parse()
        .expect("pilot file is valid TOML")
}

fn float(t: &toml::Table, section: &str, key: &str) -> f64 {
    let v = if section.is_empty() { &t[key] } else { &t[section][key] };
    v.as_float().unwrap_or_else(|| panic!("{section}.{key} is a float"))
}

fn floats(t: &toml::Table, section: &str, key: &str) -> Vec<f64> {
    t[section][key]
        .as_array()
        .expect("array")
        .iter()
        .map(|x| x.as_float().expect("float"))
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

enum Verdict {
    Pass(String),
    Fail(String),
}

struct Criterion {
    id: u32,
    title: &'static str,
    /// Known to be unreachable; a FAIL does not fail the suite.
    expect_fail: bool,
    budget: Duration,
    run: fn(&toml::Table) -> Verdict,
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn desk_set() -> ESet {
    ESet::from_pairs(&DESK_PAIRS).expect("desk pairs are valid")
}

fn three_routes(_: &toml::Table) -> Verdict {
    let a = golden();
    let e = desk_set();
    let n_list = [64, 256, 512];
    let samples = 10_000;
    // The literal triple indicator built from E reduces to the occupation
    // integrand of the side of E containing 0, so all three routes evaluate
    // that set; for E itself it equals 1/2 - A_N(E).
    let side = e.zero_side();
    let exact = exact_average_series(a, &side, &n_list).expect("exact route");
    let reduced =
        reduced_average_series(a, &side, &ThetaFilter::AcceptAll, &n_list, samples, SEED).expect("reduced route");
    let mc = mc_triple_average(a, &e, &n_list, samples, SEED, &|_| true, MonteCarloOptions::default())
        .expect("Monte Carlo route");
    let exact_e = exact_average_series(a, &e, &n_list).expect("exact route");
    let reduced_e =
        reduced_average_series(a, &e, &ThetaFilter::AcceptAll, &n_list, samples, SEED).expect("reduced route");

    let mut ok = true;
    let mut detail = Vec::new();
    for &n in &n_list {
        let (x, r, m) = (exact.get(n).unwrap(), reduced.get(n).unwrap(), mc.get(n).unwrap());
        let (xe, re) = (exact_e.get(n).unwrap(), reduced_e.get(n).unwrap());
        let complementary = (x.a + xe.a - 0.5).abs() <= 1e-12;
        ok &= agree(x, r, 3.0) && agree(x, m, 3.0) && agree(r, m, 3.0) && agree(xe, re, 3.0) && complementary;
        detail.push(format!(
            "N={n}: exact {:.5} reduced {:.5}±{:.5} mc {:.5}±{:.5} (on E: exact {:.5} reduced {:.5}±{:.5})",
            x.a, r.a, r.stderr, m.a, m.stderr, xe.a, re.a, re.stderr
        ));
    }
    check(ok, detail.join("; "))
}

fn exact_partition(_: &toml::Table) -> Verdict {
    let a = golden();
    let mut f = PartitionStepFn::new(a);
    f.step();
    f.step();
    // Hand partition: phi_2 = 0 on two arcs of length 1 - alpha each, and
    // phi_2 = +2 (resp. -2) on an arc of length alpha - 1/2.
    let one_minus_alpha = a.bits().wrapping_neg();
    let half_gap = a.bits() - FixedAngle::HALF.bits();
    let zero = f.measure_where(|v| v == 0).parts();
    let plus = f.measure_where(|v| v == 2).parts();
    let minus = f.measure_where(|v| v == -2).parts();
    let ok = zero == (0, 2 * one_minus_alpha) && plus == (0, half_gap) && minus == (0, half_gap);
    check(
        ok,
        format!(
            "m(phi_2=0) = {:.16}, m(phi_2=±2) = {:.16}, compared in units of 2^-128",
            f.measure_where(|v| v == 0).to_f64(),
            f.measure_where(|v| v == 2).to_f64()
        ),
    )
}

fn desk_oscillation(p: &toml::Table) -> Verdict {
    let n_list: Vec<u64> = (0..=32)
        .map(|k| 10f64.powf(2.0 + k as f64 / 8.0).round() as u64)
        .collect();
    let series = reduced_average_series(golden(), &desk_set(), &ThetaFilter::AcceptAll, &n_list, 1000, SEED)
        .expect("reduced route");
    let osc = series.oscillation();
    let pinned = float(p, "desk", "oscillation");
    let required = float(p, "desk", "required");
    let tol = float(p, "", "tolerance");
    check(
        osc >= required && rel(osc, pinned) <= tol,
        format!("max-min = {osc:.6} (pinned {pinned:.6}, required >= {required})"),
    )
}

fn paper_schedule(_: &toml::Table) -> Verdict {
    let bound = BoundFn::Constant(2.0);
    let src = ConstantsSource::Bound(bound);
    let margin = 0.99;
    let s = generate_paper_schedule(bound, 10, margin);
    let rep = verify_schedule(&s, &src, margin).expect("constant bound is total");
    let ratio_ok = rep.rows[0].interval_bound.ratio.is_some_and(|r| r <= margin);

    // Independent double-precision recomputation of the first level.
    let r1 = s.intervals[0].r.as_int().expect("first level is an integer") as f64;
    // m * C * l / sqrt(ln(l + r)) with m = 1, C = 2, l = 2
    let direct = 2.0 * 2.0 / (2.0 + r1).ln().sqrt();
    let lhs = s.intervals[0].end().ln().small().unwrap();
    let lognum_ok = rel(lhs, (2.0 + r1).ln()) <= 1e-12 && direct <= margin;

    let lowered = |s: &Schedule| !verify_schedule(s, &src, margin).unwrap().passes_margin;
    let mut flips = 0;
    let mut total = 0;
    for i in 0..s.intervals.len() {
        for which in 0..2 {
            let mut t = s.clone();
            let v = if which == 0 { &mut t.intervals[i].l } else { &mut t.intervals[i].r };
            *v = LogNum::next_down(*v);
            flips += usize::from(lowered(&t));
            total += 1;
        }
    }
    let mut t = s.clone();
    t.next_l = t.next_l.map(LogNum::next_down);
    flips += usize::from(lowered(&t));
    total += 1;
    check(
        rep.passes && rep.passes_margin && ratio_ok && lognum_ok && flips == total,
        format!(
            "10 levels pass at margin {margin}; r_1 = {r1}, first ratio {direct:.6}; {flips}/{total} downward steps flip the verdict"
        ),
    )
}

fn occupation_band(p: &toml::Table) -> Verdict {
    let times = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];
    let thetas = sample_thetas(SEED, 1000);
    let table = estimate_constants(golden(), &thetas, 10_000_000, 0, Some(&times)).expect("walks run");
    let means: Vec<f64> = table.bands.iter().map(|b| b.normalized_mean).collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(0.0, f64::max);
    let sup_ratio = table.bands.iter().map(|b| b.sup_over_mean).fold(0.0, f64::max);
    let pinned = floats(p, "band", "normalized_mean");
    let reproduces = means.len() == pinned.len() && means.iter().zip(&pinned).all(|(a, b)| rel(*a, *b) <= 1e-12);
    check(
        lo > 0.0 && hi / lo <= 10.0 && sup_ratio <= 10.0 && reproduces,
        format!("normalized means {means:.4?}, spread x{:.3}, max sup/mean {sup_ratio:.3}", hi / lo),
    )
}

fn ratio_trend(p: &toml::Table) -> Verdict {
    let v_list = [-3, -2, -1, 1, 2, 3];
    let (early, late) = (100_000, 10_000_000);
    let table = ratio_check(golden(), &sample_thetas(SEED, 100), &v_list, &[early, late]).expect("walks run");
    let dev = |v: i64, n: u64| table.summary_at(v, n).unwrap().median_deviation;
    let decreasing = |sign: i64| (1..=3).filter(|&v| dev(sign * v, late) < dev(sign * v, early)).count();
    let (pos, neg) = (decreasing(1), decreasing(-1));
    let band = float(p, "ratio", "band");
    let within_band = v_list.iter().all(|&v| dev(v, late) <= band);
    let tol = float(p, "", "tolerance");
    let pinned_late = floats(p, "ratio", "deviation_late");
    let reproduces = v_list.iter().zip(&pinned_late).all(|(&v, &x)| rel(dev(v, late), x) <= tol);
    check(
        pos >= 2 && neg >= 2 && within_band && reproduces,
        format!(
            "deviation decreases for {pos}/3 positive and {neg}/3 negative heights; late medians {:.3?}",
            v_list.iter().map(|&v| dev(v, late)).collect::<Vec<_>>()
        ),
    )
}

fn range_decay(_: &toml::Table) -> Verdict {
    let table = zero_entropy_proxy(golden(), &sample_thetas(SEED, 100), &[1_000_000]).expect("walks run");
    let max = table.max_by_n[0].1;
    check(max < 0.01, format!("max a_N/N at N = 10^6: {max:.3e}"))
}

fn correlation(p: &toml::Table) -> Verdict {
    let a = golden();
    let d = CylinderSpec::new(&[(0, 1)]).unwrap();
    let n = 100_000;
    let samples = 10_000;
    let est = ergodicity_correlation(a, &d, &d, &ArcSet::Circle, &ArcSet::Circle, n, samples, SEED)
        .expect("correlation runs");
    let z = est.z_score();

    // The estimator itself must be sound: at a horizon the exact partition
    // reaches, it matches the exact Cesàro value.
    let small = 1 << 14;
    let exact = exact_correlation_average(a, small).expect("within the exact cap");
    let check_small = ergodicity_correlation(a, &d, &d, &ArcSet::Circle, &ArcSet::Circle, small, 2000, SEED)
        .expect("correlation runs");
    assert!(
        (check_small.lhs - exact).abs() <= 4.0 * check_small.lhs_stderr,
        "Monte Carlo correlation {} ± {} disagrees with the exact value {exact} at N = {small}",
        check_small.lhs,
        check_small.lhs_stderr
    );
    // Each term is 1/4 + m(phi_n = 0)/4, so the finite-N value sits above 1/4 by
    // a quarter of the mean return frequency, which the walks measure directly.
    let walks: Vec<f64> = sample_thetas(SEED, 1000)
        .iter()
        .map(|&t| run_walk(t, a, n, &[]).unwrap().histogram.get(0) as f64 / n as f64)
        .collect();
    let predicted = 0.25 + 0.25 * walks.iter().sum::<f64>() / walks.len() as f64;
    assert!(
        (est.lhs - predicted).abs() <= 4.0 * est.lhs_stderr,
        "correlation {} ± {} disagrees with the return-frequency prediction {predicted}",
        est.lhs,
        est.lhs_stderr
    );
    let pinned = float(p, "correlation", "lhs");
    assert!(rel(est.lhs, pinned) <= float(p, "", "tolerance"), "pilot value not reproduced");

    check(
        z <= 4.0,
        format!(
            "lhs {:.5} ± {:.5} vs 1/4: z = {z:.1}; exact value at N = 2^14 is {exact:.5}; \
             return-frequency prediction at N = 10^5 is {predicted:.5}",
            est.lhs, est.lhs_stderr
        ),
    )
}

fn structural(_: &toml::Table) -> Verdict {
    let a = golden();
    let e = desk_set();
    let mut rng = stream(SEED, Purpose::Theta, u64::MAX);
    let mut failures = Vec::new();

    // pi_E is an involution on shifted windows.
    for i in 0..100_000u64 {
        let mut w = SymbolWindow::sample(48, SEED, i);
        w.shift(rng.random_range(-16..=16)).unwrap();
        if apply_pi_e(&apply_pi_e(&w, &e), &e) != w {
            failures.push(format!("involution, window {i}"));
            break;
        }
    }

    // S^n = pi T^n pi, stepwise up to n = 1000, and the offset identity.
    'points: for i in 0..1000u64 {
        let theta = FixedAngle::from_bits(rng.random());
        let start = SymbolicPoint::new(theta, SymbolWindow::sample(96, SEED, i));
        let mut s = start.clone();
        let mut t = SymbolicPoint::new(theta, apply_pi_e(&start.window, &e));
        let mut plain = start.clone();
        let walk = run_walk(theta, a, 1000, &(1..=1000).collect::<Vec<_>>()).unwrap();
        for n in 1..=1000u64 {
            s = apply_s(&s, a, &e).unwrap();
            t = apply_t(&t, a).unwrap();
            plain = apply_t(&plain, a).unwrap();
            let conj = SymbolicPoint::new(t.theta, apply_pi_e(&t.window, &e));
            if conj != s {
                failures.push(format!("conjugacy, point {i}, n = {n}"));
                break 'points;
            }
            let h = walk.checkpoint(n).unwrap().height;
            if plain.window.offset() != h || plain.theta != advance(theta, a, n) {
                failures.push(format!("offset identity, point {i}, n = {n}"));
                break 'points;
            }
        }
    }

    // Conservation: occupation counts sum to N.
    for i in 0..200 {
        let theta = FixedAngle::from_bits(rng.random());
        let n = rng.random_range(1..20_000);
        if run_walk(theta, a, n, &[]).unwrap().histogram.total() != n {
            failures.push(format!("conservation, walk {i}"));
            break;
        }
    }

    // Random gapped unions are symmetric and avoid 0 and ±1.
    for i in 0..2000 {
        let mut pairs = Vec::new();
        let mut l = rng.random_range(2..10u64);
        for _ in 0..rng.random_range(0..6) {
            let r = rng.random_range(1..50u64);
            pairs.push((l, r));
            l += r + rng.random_range(2..50u64);
        }
        let set = ESet::from_pairs(&pairs).unwrap();
        let symmetric = (-600i64..=600).all(|v| set.contains(v) == set.contains(-v));
        if !symmetric || set.contains(0) || set.contains(1) || set.contains(-1) {
            failures.push(format!("symmetry, set {i}"));
            break;
        }
    }

    // advance(advance(theta, m), n) = advance(theta, m + n).
    for _ in 0..100_000 {
        let theta = FixedAngle::from_bits(rng.random());
        let alpha = FixedAngle::from_bits(rng.random());
        let (m, n) = (rng.random_range(0..1u64 << 40), rng.random_range(0..1u64 << 40));
        if advance(advance(theta, alpha, m), alpha, n) != advance(theta, alpha, m + n) {
            failures.push("semigroup law".into());
            break;
        }
    }

    // Thread count does not change any result bit.
    let n_list = [16, 64, 256];
    let run = || {
        let reduced = reduced_average_series(a, &e, &ThetaFilter::AcceptAll, &n_list, 300, 7).unwrap();
        let mc = mc_triple_average(a, &e, &n_list, 300, 7, &|_| true, MonteCarloOptions::default()).unwrap();
        let constants = estimate_constants(a, &sample_thetas(7, 50), 10_000, 3, None).unwrap();
        (bits(&reduced), bits(&mc), constants)
    };
    let single = with_threads(1, run);
    if with_threads(4, run) != single || with_threads(3, run) != single {
        failures.push("thread invariance".into());
    }

    check(
        failures.is_empty(),
        if failures.is_empty() {
            "involution, conjugacy, offset identity, conservation, symmetry, semigroup law, thread invariance".into()
        } else {
            format!("violated: {}", failures.join(", "))
        },
    )
}

fn bits(s: &AverageSeries) -> Vec<(u64, u64, u64)> {
    s.entries.iter().map(|e| (e.n, e.a.to_bits(), e.stderr.to_bits())).collect()
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "three-route agreement", expect_fail: false, budget: Duration::from_secs(120), run: three_routes },
        Criterion { id: 2, title: "exact partition values", expect_fail: false, budget: Duration::from_secs(1), run: exact_partition },
        Criterion { id: 3, title: "desk oscillation", expect_fail: false, budget: Duration::from_secs(600), run: desk_oscillation },
        Criterion { id: 4, title: "schedule certificate", expect_fail: false, budget: Duration::from_secs(1), run: paper_schedule },
        Criterion { id: 5, title: "occupation band", expect_fail: false, budget: Duration::from_secs(1800), run: occupation_band },
        Criterion { id: 6, title: "ratio convergence trend", expect_fail: false, budget: Duration::from_secs(1800), run: ratio_trend },
        Criterion { id: 7, title: "range decay", expect_fail: false, budget: Duration::from_secs(600), run: range_decay },
        Criterion { id: 8, title: "correlation equals product", expect_fail: true, budget: Duration::from_secs(1800), run: correlation },
        Criterion { id: 9, title: "structural properties", expect_fail: false, budget: Duration::from_secs(1800), run: structural },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let pilot = pilot();
    let mut unexpected = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let verdict = (c.run)(&pilot);
        let elapsed = start.elapsed();
        let over = elapsed > c.budget;
        let (label, detail) = match verdict {
            Verdict::Pass(d) if !over => ("PASS", d),
            Verdict::Pass(d) => ("FAIL", format!("{d}; over the {:?} budget", c.budget)),
            Verdict::Fail(d) if c.expect_fail => ("FAIL (expected)", d),
            Verdict::Fail(d) => ("FAIL", d),
        };
        if label == "FAIL" {
            unexpected += 1;
        }
        println!("criterion {} [{}]: {label} in {:.2}s: {detail}", c.id, c.title, elapsed.as_secs_f64());
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
