//! Acceptance run: one line per criterion.
//!
//! Exits 0 after printing; set `ACCEPTANCE_STRICT=1` to exit 1 when any
//! criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{britton_crossings, normalized_l1_distance, period, periods_hopf};
use degenlab::charvar::{fuchsian_base, length_spectrum, projectivize, Family};
use degenlab::flat::{
    abelian_length_spectrum, abelian_periods, flat_length_of, flat_length_spectrum, l_surface, one_cylinder_surface,
    Convention, QuadDiffHandle,
};
use degenlab::harmonic::{
    build_octagon_mesh, degeneration_ray, hopf, solve_harmonic, EquivariantMap, RayOptions, SolveOptions,
};
use degenlab::rtree::{check_conjugation, check_fold_validity, check_length_axioms, MetricTree};
use degenlab::sl2c::{classify, translation_length, Classification, Mobius};
use degenlab::words::{enumerate_classes, ConjClassSet, Presentation};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};

const L_PERIODS: [f64; 4] = [0.0, 1.0, 0.0, -2.0];
const SCHEDULE: [f64; 6] = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(start: Instant, budget: Duration) -> bool {
    start.elapsed() <= budget
}

fn gs() -> SolveOptions {
    SolveOptions { tol: 1e-12, relax: 1.5, ..Default::default() }
}

fn trace_sandwich() -> Outcome {
    let start = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let (mut n, mut worst) = (0, f64::NEG_INFINITY);
    while n < 1000 {
        let mut c = || Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let Ok(m) = Mobius::new(c(), c(), c(), c()).normalized() else {
            continue;
        };
        if classify(&m) != Classification::Loxodromic {
            continue;
        }
        let l = translation_length(&m);
        let tr = m.trace().norm();
        worst = worst.max(2.0 * (l / 2.0).sinh() - tr).max(tr - 2.0 * (l / 2.0).cosh());
        n += 1;
    }
    let ok = worst <= 1e-9 && within(start, Duration::from_secs(1));
    outcome(ok, format!("1000 matrices, worst violation {worst:.2e}, {:.2?}", start.elapsed()))
}

fn length_axioms(p: &Presentation, c6: &ConjClassSet) -> Outcome {
    let start = Instant::now();
    let rep = fuchsian_base(2).unwrap();
    let tr = length_spectrum(&rep, c6);
    let tr_report = check_length_axioms(&tr, c6, 1e-8).merge(check_conjugation(
        &tr,
        c6,
        p,
        |w| translation_length(&rep.evaluate(w)),
        1e-8,
    ));

    let s = l_surface();
    let flat = flat_length_spectrum(&QuadDiffHandle::new(s.clone(), 1.0).unwrap(), c6).unwrap();
    let flat_report = check_length_axioms(&flat, c6, 0.0).merge(check_conjugation(
        &flat,
        c6,
        p,
        |w| flat_length_of(&s, w).unwrap() as f64,
        0.0,
    ));

    let periods = abelian_periods(&s, Convention::Dx).unwrap();
    let ab = abelian_length_spectrum(&periods, c6);
    let ab_report =
        check_length_axioms(&ab, c6, 0.0).merge(check_conjugation(&ab, c6, p, |w| period(w, &L_PERIODS).abs(), 0.0));
    let hand = c6
        .classes()
        .iter()
        .enumerate()
        .all(|(i, w)| ab.exact.as_ref().unwrap()[i] == Ratio::from_integer(period(w, &L_PERIODS).abs() as i64));

    let ok = tr_report.passed()
        && flat_report.passed()
        && ab_report.passed()
        && hand
        && within(start, Duration::from_secs(30));
    outcome(
        ok,
        format!(
            "C_6 ({} classes): translation max defect {:.1e} ({} checks), flat {} violations, abelian {} violations, {:.2?}",
            c6.len(),
            tr_report.max_defect,
            tr_report.checked,
            flat_report.violations.len(),
            ab_report.violations.len(),
            start.elapsed()
        ),
    )
}

fn hopf_uniqueness(monotone: &mut Vec<bool>) -> Outcome {
    let start = Instant::now();
    let mesh = Arc::new(build_octagon_mesh(3).unwrap());
    let rep = Family::twist(fuchsian_base(2).unwrap(), 1).sample(4.0).unwrap();
    let mut samples = Vec::new();
    for seed in [11, 29] {
        let init = EquivariantMap::random(mesh.clone(), rep.clone(), seed, 1.0).unwrap();
        let (u, r) = solve_harmonic(init, &gs()).unwrap();
        monotone.push(r.is_monotone());
        samples.push(hopf(&u).normalized());
    }
    let d = samples[1].relative_l1(&samples[0]);
    let ok = d < 0.01 && within(start, Duration::from_secs(300));
    outcome(ok, format!("seeds 11, 29 at t = 4, level 3: relative L1 {d:.2e}, {:.2?}", start.elapsed()))
}

fn abelian(p: &Presentation, c6: &ConjClassSet, monotone: &mut Vec<bool>) -> Outcome {
    let start = Instant::now();
    let family = Family::diagonal(*p, L_PERIODS.to_vec()).unwrap();
    let mesh = Arc::new(build_octagon_mesh(3).unwrap());
    let rep = family.sample(8.0).unwrap();
    let init = EquivariantMap::fuchsian_embedding(mesh.clone(), rep.clone()).unwrap();
    let (u, r) = solve_harmonic(init, &gs()).unwrap();
    monotone.push(r.is_monotone());
    let hopf_defect = normalized_l1_distance(&hopf(&u), &periods_hopf(&mesh, &L_PERIODS, 8.0));

    let tr = projectivize(&length_spectrum(&rep, c6)).unwrap();
    let ab =
        projectivize(&abelian_length_spectrum(&abelian_periods(&l_surface(), Convention::Dx).unwrap(), c6)).unwrap();
    let spectrum_defect = tr.max_abs_diff(&ab);
    let ok = hopf_defect < 0.1 && spectrum_defect < 1e-6 && within(start, Duration::from_secs(300));
    outcome(
        ok,
        format!(
            "(a) Hopf vs squared form {hopf_defect:.2e}, (b) spectrum vs periods {spectrum_defect:.1e}, {:.2?}",
            start.elapsed()
        ),
    )
}

fn fold_combinatorics() -> Outcome {
    let start = Instant::now();
    let one = Ratio::from_integer(1);
    let mut mismatches = 0;
    let mut checked = 0;
    for k in 3..=8 {
        let star = MetricTree::star(&vec![one; k]).unwrap();
        let pairs: Vec<(usize, usize)> =
            (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        let adjacent = |&(i, j): &(usize, usize)| i.abs_diff(j) == 1 || i.abs_diff(j) == k - 1;
        for p in &pairs {
            let expected = k > 3 && !adjacent(p);
            checked += 1;
            if check_fold_validity(&star, 0, k, &[*p]) != expected {
                mismatches += 1;
            }
        }
        for a in &pairs {
            for b in &pairs {
                let expected = k > 3 && !adjacent(a) && !adjacent(b);
                checked += 1;
                if check_fold_validity(&star, 0, k, &[*a, *b]) != expected {
                    mismatches += 1;
                }
            }
        }
    }
    let ok = mismatches == 0 && within(start, Duration::from_secs(1));
    outcome(ok, format!("{checked} fold sets at 3 to 8 prongs, {mismatches} mismatches, {:.2?}", start.elapsed()))
}

fn refinement(monotone: &mut Vec<bool>) -> (Vec<f64>, Vec<f64>) {
    let rep = fuchsian_base(2).unwrap();
    let (mut identity, mut solved) = (Vec::new(), Vec::new());
    for level in 1..=3 {
        let mesh = Arc::new(build_octagon_mesh(level).unwrap());
        let init = EquivariantMap::fuchsian_embedding(mesh, rep.clone()).unwrap();
        identity.push(init.energy());
        let (u, r) = solve_harmonic(init, &gs()).unwrap();
        monotone.push(r.is_monotone());
        solved.push(u.energy());
    }
    (identity, solved)
}

/// Least-squares slope and R² of `y` against `x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

fn report(results: &[(usize, &str, Outcome)]) -> usize {
    let mut passed = 0;
    for (i, name, o) in results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {i} {name}: {}", o.detail);
        passed += o.passed as usize;
    }
    passed
}

fn main() {
    let p = Presentation::new(2).unwrap();
    let c6 = enumerate_classes(&p, 6);
    let c4 = enumerate_classes(&p, 4);
    let mut monotone = Vec::new();
    let mut results = Vec::new();

    results.push((1, "trace sandwich", trace_sandwich()));
    results.push((2, "length axioms", length_axioms(&p, &c6)));
    results.push((3, "Hopf uniqueness", hopf_uniqueness(&mut monotone)));
    results.push((4, "abelian case", abelian(&p, &c6, &mut monotone)));

    // criteria 5 to 7 share one ray
    let start = Instant::now();
    let family = Family::twist(fuchsian_base(2).unwrap(), 1);
    let cylinder = flat_length_spectrum(&QuadDiffHandle::new(one_cylinder_surface(), 1.0).unwrap(), &c6).unwrap();
    let ray = degeneration_ray(&family, &c6, &c4, &SCHEDULE, 3, Some(&cylinder), &RayOptions::default()).unwrap();
    let elapsed = start.elapsed();
    monotone.extend(ray.samples.iter().map(|s| s.monotone));

    let tail = *ray.translation_cauchy.last().unwrap();
    let oracle_support: Vec<bool> = c6.classes().iter().map(|w| britton_crossings(w) > 0).collect();
    let support_mismatch = oracle_support.iter().zip(&ray.support).filter(|(a, b)| a != b).count();
    let flat = ray.flat_comparison.as_ref().unwrap();
    let ok5 = tail < 0.02
        && support_mismatch == 0
        && flat.rate_defect < 0.05
        && ray.all_converged()
        && elapsed <= Duration::from_secs(1200);
    results.push((
        5,
        "twist ray limit",
        outcome(
            ok5,
            format!(
                "tail Cauchy {:.2}% (cap 2%), support mismatches {support_mismatch}/{}, flat defect {:.1}% from growth rates and {:.1}% from last iterate (cap 5%), ray {elapsed:.2?}",
                100.0 * tail,
                c6.len(),
                100.0 * flat.rate_defect,
                100.0 * flat.iterate_defect
            ),
        ),
    ));

    let medians: Vec<f64> = ray.samples.iter().filter_map(|s| s.beltrami_median).collect();
    let norms: Vec<f64> = ray.samples.iter().map(|s| s.hopf_norm).collect();
    let decreasing = medians.len() == SCHEDULE.len() && medians.windows(2).all(|w| w[1] < w[0]);
    let logs: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (slope, r2) = if medians.len() == norms.len() { linear_fit(&norms, &logs) } else { (f64::NAN, f64::NAN) };
    results.push((
        6,
        "Beltrami decay",
        outcome(
            decreasing && slope < 0.0 && r2 > 0.9,
            format!(
                "medians {:?}, fit slope {slope:.3} R^2 {r2:.3}",
                medians.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>()
            ),
        ),
    ));

    let n = c4.len();
    let mut lower_gap: f64 = f64::INFINITY;
    for s in &ray.samples {
        for (lu, lr) in s.pullback.iter().zip(&s.pullback_translation) {
            lower_gap = lower_gap.min(lu - lr);
        }
    }
    let ratios: Vec<Vec<f64>> =
        (0..n).map(|i| ray.samples.iter().map(|s| s.pullback[i] / s.pullback_translation[i]).collect()).collect();
    let last: Vec<f64> = ratios.iter().map(|r| *r.last().unwrap()).collect();
    let (lo, hi) = last.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let worst = (0..n).max_by(|&i, &j| last[i].total_cmp(&last[j])).unwrap();
    let nonincreasing = ratios.iter().filter(|r| r.windows(2).all(|w| w[1] <= w[0] + 1e-9)).count();
    let ok7 = lower_gap >= -1e-6 && lo >= 1.0 - 1e-6 && hi <= 1.25 && nonincreasing * 10 >= n * 9;
    results.push((
        7,
        "length sandwich",
        outcome(
            ok7,
            format!(
                "C_4 ({n} classes): min (l_u - l_rho) {lower_gap:.2e}, ratio at t = 12 in [{lo:.4}, {hi:.4}] (max at {}), nonincreasing {nonincreasing}/{n}",
                c4.classes()[worst]
            ),
        ),
    ));

    results.push((8, "fold combinatorics", fold_combinatorics()));

    let (identity, solved) = refinement(&mut monotone);
    let approach = identity.windows(2).all(|w| w[1] < w[0])
        && solved.windows(2).all(|w| w[1] < w[0])
        && identity.iter().chain(&solved).all(|&e| e > FOUR_PI * 0.99)
        && (identity[2] - FOUR_PI) / FOUR_PI < 0.05;
    let traces = monotone.iter().filter(|&&m| m).count();
    results.push((
        9,
        "energy monotonicity and refinement",
        outcome(
            approach && traces == monotone.len(),
            format!(
                "{traces}/{} traces monotone, identity energy {:?} and solved {:?} against 4pi = {FOUR_PI:.4}",
                monotone.len(),
                identity.iter().map(|e| (e * 1e4).round() / 1e4).collect::<Vec<_>>(),
                solved.iter().map(|e| (e * 1e4).round() / 1e4).collect::<Vec<_>>()
            ),
        ),
    ));

    let passed = report(&results);
    println!("{passed}/{} criteria passed", results.len());
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") && passed < results.len() {
        std::process::exit(1);
    }
}
