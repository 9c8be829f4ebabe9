//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use qmerge::builtin;
use qmerge::decoupling;
use qmerge::entropy;
use qmerge::experiment::{self, MergeRow};
use qmerge::linalg::{self, cr, CMat, CVec};
use qmerge::merging::{self, CostMode};
use qmerge::metrics;
use qmerge::random::{self, random_channel, random_density, random_pure_state, substream};
use qmerge::smoothing;
use qmerge::{DensityOperator, PureState, SystemLayout};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|e| Outcome {
        pass: false,
        detail: format!(
            "panicked: {}",
            e.downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        ),
    });
    println!(
        "{} [{id}] {name}: {} ({:.1}s)",
        if r.pass { "PASS" } else { "FAIL" },
        r.detail,
        t.elapsed().as_secs_f64()
    );
    r.pass
}

// Oracles written against nalgebra directly.

fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * cr(0.5);
    let e = h.symmetric_eigen();
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

fn fn_of(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (v, u) = herm_eig(m);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| cr(f(x)))));
    &u * d * u.adjoint()
}

fn oracle_fidelity(rho: &CMat, sigma: &CMat) -> f64 {
    // (tr sqrt(sqrt rho sigma sqrt rho))^2. Rounding noise on the null space
    // would be amplified by the square roots, so it is zeroed first.
    let floor = |m: &CMat| 1e-12 * herm_eig(m).0.iter().cloned().fold(0.0, f64::max);
    let fr = floor(rho);
    let s = fn_of(rho, |x| if x > fr { x.sqrt() } else { 0.0 });
    let inner = &s * sigma * &s;
    let fi = floor(&inner);
    let (v, _) = herm_eig(&inner);
    let t: f64 = v.iter().map(|&x| if x > fi { x.sqrt() } else { 0.0 }).sum();
    t * t
}

fn oracle_trace_norm(m: &CMat) -> f64 {
    herm_eig(m).0.iter().map(|x| x.abs()).sum()
}

/// 2^{-H_2(rho_AR | sigma_R)} with A first and R last.
fn oracle_collision(rho: &CMat, sigma: &CMat) -> f64 {
    let da = rho.nrows() / sigma.nrows();
    let s = fn_of(sigma, |x| if x > 1e-12 { x.powf(-0.25) } else { 0.0 });
    let g = linalg::kron(&CMat::identity(da, da), &s);
    let m = &g * rho * &g;
    (&m * &m).trace().re
}

/// H_min(rho_AR | sigma_R) from the generalized inverse, A first.
fn oracle_hmin_rel(rho: &CMat, sigma: &CMat) -> f64 {
    let da = rho.nrows() / sigma.nrows();
    let s = fn_of(sigma, |x| if x > 1e-12 { x.powf(-0.5) } else { 0.0 });
    let g = linalg::kron(&CMat::identity(da, da), &s);
    let m = &g * rho * &g;
    let (v, _) = herm_eig(&m);
    -v.iter().cloned().fold(f64::MIN, f64::max).log2()
}

fn layout(spec: &[(&str, usize)]) -> SystemLayout {
    SystemLayout::new(spec).unwrap()
}

fn c1_duality() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (i, &(da, db, dr)) in [(2, 2, 2), (2, 3, 4), (3, 2, 4)].iter().enumerate() {
        let mut rng = substream(101, i as u64);
        for _ in 0..100 {
            let psi = random_pure_state(layout(&[("A", da), ("B", db), ("R", dr)]), &mut rng);
            worst = worst.max(entropy::duality_gap(&psi, "A", "B", "R").unwrap());
            count += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-6 && secs <= 60.0,
        detail: format!("{count} states, max |H_min + H_max| = {worst:.2e}, {secs:.1}s (limit 60s)"),
    }
}

fn c2_schmidt() -> Outcome {
    let mut rng = substream(102, 0);
    let mut worst: f64 = 0.0;
    use rand::Rng;
    for _ in 0..100 {
        let da = rng.random_range(1..=8usize);
        let db = rng.random_range(1..=8usize);
        let r = rng.random_range(1..=da.min(db));
        // sum_k s_k |u_k>|v_k> with exactly r positive coefficients
        let u = random::haar_unitary(da, &mut rng);
        let v = random::haar_unitary(db, &mut rng);
        let s: Vec<f64> = (0..r).map(|_| rng.random_range(0.1..1.0)).collect();
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut vec = CVec::zeros(da * db);
        for (k, sk) in s.iter().enumerate() {
            let a = u.column(k);
            let b = v.column(k);
            for i in 0..da {
                for j in 0..db {
                    vec[i * db + j] += a[i] * b[j] * cr(sk / norm);
                }
            }
        }
        let psi = PureState::new(layout(&[("A", da), ("B", db)]), vec).unwrap();
        let rho = psi.density();
        let rb = rho.partial_trace(&["B"]).unwrap();
        let h = entropy::h_min_rel(&rho, &rb).unwrap().bits;
        worst = worst.max((h + (r as f64).log2()).abs());
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("100 states, max |H_min + log r| = {worst:.2e}"),
    }
}

fn c3_sdp() -> Outcome {
    let bell = max_bell();
    let hb = entropy::h_min_cond(&bell, &["R"]).unwrap();
    let cl = DensityOperator::diagonal(layout(&[("A", 2), ("R", 2)]), &[0.5, 0.0, 0.0, 0.5]).unwrap();
    let hc = entropy::h_min_cond(&cl, &["R"]).unwrap();
    let mut gaps = vec![hb.gap, hc.gap];
    // further solves on random states, checked against a feasible witness
    let mut rng = substream(103, 0);
    let mut worst_cert: f64 = 0.0;
    for _ in 0..20 {
        let rho = random_density(layout(&[("A", 2), ("R", 3)]), &mut rng);
        let v = entropy::h_min_cond(&rho, &["R"]).unwrap();
        gaps.push(v.gap);
        // the witness sigma must certify the value: H_min(rho|sigma) = value
        let sigma = v.witness.unwrap();
        let h = oracle_hmin_rel(rho.matrix(), sigma.matrix());
        worst_cert = worst_cert.max((h - v.bits).abs());
    }
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: (hb.bits + 1.0).abs() <= 1e-7 && hc.bits.abs() <= 1e-7 && max_gap <= 1e-8 && worst_cert <= 1e-6,
        detail: format!(
            "Bell {:.10}, classical {:.3e}, max gap {max_gap:.2e} over {} solves, witness agreement {worst_cert:.2e}",
            hb.bits,
            hc.bits,
            gaps.len()
        ),
    }
}

fn max_bell() -> DensityOperator {
    qmerge::max_entangled(2, "A", "R").unwrap().density()
}

fn c4_decoupling() -> Outcome {
    let t = Instant::now();
    let mut cells = Vec::new();
    for &da in &[2usize, 4, 8] {
        for k in 0..5u64 {
            let mut rng = substream(104, (da as u64) << 8 | k);
            let rho = random_density(layout(&[("A", da), ("R", 2)]), &mut rng);
            for l in (1..=da).filter(|l| da % l == 0) {
                cells.push((da, k, l, rho.clone()));
            }
        }
    }
    let results: Vec<_> = cells
        .par_iter()
        .enumerate()
        .map(|(i, (da, k, l, rho))| {
            let sigma = rho.partial_trace(&["R"]).unwrap();
            let rep = decoupling::estimate_decoupling(rho, &sigma, *l, 2000, 5000 + i as u64).unwrap();
            let bound = (oracle_collision(rho.matrix(), sigma.matrix()) * *l as f64).sqrt();
            (*da, *k, *l, rep, bound)
        })
        .collect();
    let mut failures = Vec::new();
    let mut min_z = f64::INFINITY;
    let mut bound_err: f64 = 0.0;
    for (da, k, l, rep, bound) in &results {
        bound_err = bound_err.max((rep.bound_h2 - bound).abs());
        let z = (bound - rep.mean) / rep.stderr.max(1e-300);
        min_z = min_z.min(z);
        if rep.mean > bound + 3.0 * rep.stderr {
            failures.push(format!("d_A={da} L={l} state {k}: mean {:.4} bound {:.4}", rep.mean, bound));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: failures.is_empty() && bound_err < 1e-9 && secs <= 600.0,
        detail: format!(
            "{} cells, {} violations, smallest (bound-mean)/stderr {min_z:.1}, bound oracle diff {bound_err:.1e}, {secs:.1}s{}",
            results.len(),
            failures.len(),
            if failures.is_empty() { String::new() } else { format!(": {}", failures.join("; ")) }
        ),
    }
}

struct MergeSuite {
    per_state: Vec<(String, usize, usize)>,
    rows: Vec<MergeRow>,
}

fn merge_suite() -> MergeSuite {
    let mut states = vec![("bell".to_string(), builtin::bell())];
    let mut rng = substream(105, 0);
    for k in 0..20 {
        states.push((format!("rand-{k}"), random_pure_state(layout(&[("A", 2), ("B", 2), ("R", 2)]), &mut rng)));
    }
    let mut per_state = Vec::new();
    let mut rows = Vec::new();
    for (i, (id, psi)) in states.iter().enumerate() {
        let rho_ar = psi.density().partial_trace(&["A", "R"]).unwrap();
        let plan = merging::plan_cost(&rho_ar, 0.1, CostMode::Nonsmooth).unwrap();
        let r = experiment::merge_runs(id, psi, &plan, 10_000 * i as u64, 100).unwrap();
        let ok = r.iter().filter(|x| x.error <= plan.guarantee).count();
        per_state.push((id.clone(), ok, r.len()));
        rows.extend(r);
    }
    MergeSuite { per_state, rows }
}

fn c5_achievability(s: &MergeSuite) -> Outcome {
    let worst = s.per_state.iter().min_by_key(|x| x.1).unwrap();
    let bad: Vec<_> = s.per_state.iter().filter(|x| x.1 * 100 < 95 * x.2).collect();
    let guarantee = 2.0 * (0.2f64).sqrt();
    let max_err = s.rows.iter().map(|r| r.error).fold(0.0, f64::max);
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "{} states x 100 runs, guarantee {guarantee:.4}; worst state {} at {}/{}; largest error {max_err:.4}",
            s.per_state.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    }
}

fn c6_chain(s: &MergeSuite) -> Outcome {
    // merge_runs already refuses runs that break the chain; re-check here.
    let viol = s
        .rows
        .iter()
        .filter(|r| r.error > 2.0 * r.condition_value.sqrt() + 1e-6)
        .count();
    let tight = s
        .rows
        .iter()
        .map(|r| r.error - 2.0 * r.condition_value.sqrt())
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: viol == 0,
        detail: format!("{} runs, {viol} violations, max error - 2 sqrt(c) = {tight:.3e}", s.rows.len()),
    }
}

fn c7_converse(s: &MergeSuite) -> Outcome {
    let viol = s.rows.iter().filter(|r| r.cost_bits < r.lower_bound_at_error - 1e-6).count();
    let min_slack = s.rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Outcome {
        pass: viol == 0,
        detail: format!("{} runs, {viol} violations, smallest slack {min_slack:.4} bits", s.rows.len()),
    }
}

fn c8_smoothing() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    // eps = 0 reductions
    let mut rng = substream(108, 0);
    let mut red: f64 = 0.0;
    for _ in 0..20 {
        let rho = random_density(layout(&[("A", 2), ("R", 2)]), &mut rng);
        let sigma = random_density(layout(&[("R", 2)]), &mut rng);
        let s0 = smoothing::h_min_smooth_rel(&rho, &sigma, 0.0).unwrap().bits;
        red = red.max((s0 - oracle_hmin_rel(rho.matrix(), sigma.matrix())).abs());
        let c0 = smoothing::h_min_smooth_cond(&rho, &["R"], 0.0).unwrap();
        let direct = entropy::h_min_cond(&rho, &["R"]).unwrap().bits;
        red = red.max((c0.bits - direct).abs());
    }
    pass &= red <= 1e-7;
    notes.push(format!("eps=0 max dev {red:.1e}"));

    // monotonicity in eps
    let eps = [0.0, 0.05, 0.1, 0.2];
    let states: Vec<DensityOperator> = (0..50)
        .map(|_| {
            let psi = random_pure_state(layout(&[("A", 2), ("B", 2), ("R", 2)]), &mut rng);
            psi.density().partial_trace(&["A", "R"]).unwrap()
        })
        .collect();
    let mono: Vec<f64> = states
        .par_iter()
        .map(|rho| {
            let v: Vec<f64> = eps
                .iter()
                .map(|&e| smoothing::h_min_smooth_cond(rho, &["R"], e).unwrap().bits)
                .collect();
            v.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let worst_mono = mono.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    pass &= worst_mono <= 1e-7;
    notes.push(format!("monotonicity worst drop {worst_mono:.1e} on 50 states"));

    // superadditivity on product instances
    let mut worst_sup = f64::NEG_INFINITY;
    for _ in 0..8 {
        let r1 = random_density(layout(&[("A", 2), ("B", 2)]), &mut rng);
        let s1 = random_density(layout(&[("B", 2)]), &mut rng);
        let r2 = random_density(layout(&[("A2", 2), ("B2", 2)]), &mut rng);
        let s2 = random_density(layout(&[("B2", 2)]), &mut rng);
        let (e1, e2) = (0.05, 0.1);
        let h1 = smoothing::h_min_smooth_rel(&r1, &s1, e1).unwrap().bits;
        let h2 = smoothing::h_min_smooth_rel(&r2, &s2, e2).unwrap().bits;
        let joint = r1.tensor(&r2).unwrap();
        let sj = s1.tensor(&s2).unwrap();
        let h12 = smoothing::h_min_smooth_rel(&joint, &sj, e1 + e2).unwrap().bits;
        worst_sup = worst_sup.max(h1 + h2 - h12);
    }
    pass &= worst_sup <= 1e-6;
    notes.push(format!("superadditivity worst {worst_sup:.1e}"));

    // strong subadditivity, smooth and non-smooth
    let mut worst_ssa = f64::NEG_INFINITY;
    for _ in 0..10 {
        let rho = random_density(layout(&[("A", 2), ("B", 2), ("R", 2)]), &mut rng);
        let sigma_br = random_density(layout(&[("B", 2), ("R", 2)]), &mut rng);
        let sigma_b = sigma_br.partial_trace(&["B"]).unwrap();
        let rho_ab = rho.partial_trace(&["A", "B"]).unwrap();
        for e in [0.0, 0.1] {
            let big = smoothing::h_min_smooth_rel(&rho, &sigma_br, e).unwrap().bits;
            let small = smoothing::h_min_smooth_rel(&rho_ab, &sigma_b, e).unwrap().bits;
            worst_ssa = worst_ssa.max(big - small);
        }
    }
    pass &= worst_ssa <= 1e-6;
    notes.push(format!("strong subadditivity worst {worst_ssa:.1e}"));
    Outcome {
        pass,
        detail: notes.join(", "),
    }
}

fn c9_convergence() -> Outcome {
    let t = Instant::now();
    let s = smoothing::convergence_series(&builtin::bell(), 0.05, 3).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let vals: Vec<String> = s.points.iter().map(|p| format!("{:.6}", p.value_bits_per_copy)).collect();
    let last = s.points.last().unwrap();
    Outcome {
        pass: s.weakly_monotone_toward_target(1e-7) && secs <= 900.0,
        detail: format!(
            "per-copy values [{}] toward S(A|R) = {:.3}, final gap {:.4}, {secs:.1}s",
            vals.join(", "),
            s.target_bits,
            last.gap
        ),
    }
}

fn c10_metrics() -> Outcome {
    let mut rng = substream(110, 0);
    let mut fvdg: f64 = f64::NEG_INFINITY;
    let mut mono_d: f64 = f64::NEG_INFINITY;
    let mut mono_f: f64 = f64::NEG_INFINITY;
    let mut fid_oracle: f64 = 0.0;
    let mut td_oracle_diff: f64 = 0.0;
    use rand::Rng;
    for _ in 0..1000 {
        let d = rng.random_range(2..=4usize);
        let l = layout(&[("S", d)]);
        let rho = random::random_density_env(l.clone(), rng.random_range(1..=d), &mut rng);
        let sigma = random::random_density_env(l.clone(), rng.random_range(1..=d), &mut rng);
        let td = metrics::trace_distance(&rho, &sigma).unwrap();
        let f = metrics::fidelity(&rho, &sigma).unwrap();
        fid_oracle = fid_oracle.max((f - oracle_fidelity(rho.matrix(), sigma.matrix())).abs());
        let td_oracle = 0.5 * oracle_trace_norm(&(rho.matrix() - sigma.matrix()));
        td_oracle_diff = td_oracle_diff.max((td - td_oracle).abs());
        fvdg = fvdg.max((1.0 - f.sqrt()) - td).max(td - (1.0 - f).max(0.0).sqrt());
        let dout = rng.random_range(1..=4usize);
        // Stinespring dimension dout * kraus must cover the input.
        let kraus = rng.random_range(d.div_ceil(dout)..=d.div_ceil(dout) + 2);
        let ch = random_channel(d, layout(&[("T", dout)]), kraus, &mut rng).unwrap();
        let (a, b) = (ch.apply(&rho).unwrap(), ch.apply(&sigma).unwrap());
        mono_d = mono_d.max(metrics::trace_distance(&a, &b).unwrap() - td);
        mono_f = mono_f.max(f - metrics::fidelity(&a, &b).unwrap());
    }
    let worst = fvdg.max(mono_d).max(mono_f).max(fid_oracle).max(td_oracle_diff);
    Outcome {
        pass: worst <= 1e-9,
        detail: format!(
            "1000 pairs: FvdG {fvdg:.1e}, trace-distance monotonicity {mono_d:.1e}, fidelity monotonicity {mono_f:.1e}, fidelity oracle diff {fid_oracle:.1e}, trace-distance oracle diff {td_oracle_diff:.1e}"
        ),
    }
}

fn main() {
    let _ = Complex64::new(0.0, 0.0);
    // Optional criterion numbers select a subset; cargo's own flags are ignored.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |id: usize| only.is_empty() || only.contains(&id);
    let mut all = true;
    let mut run = |id: usize, name: &str, f: &dyn Fn() -> Outcome| {
        if want(id) {
            all &= check(id, name, f);
        }
    };
    run(1, "duality of min- and max-entropy", &c1_duality);
    run(2, "Schmidt-rank formula", &c2_schmidt);
    run(3, "SDP correctness", &c3_sdp);
    run(4, "decoupling bound", &c4_decoupling);
    if [5, 6, 7].iter().any(|&i| want(i)) {
        let t = Instant::now();
        let suite = merge_suite();
        println!("  merge suite: {} protocol runs in {:.1}s", suite.rows.len(), t.elapsed().as_secs_f64());
        run(5, "achievability at design error", &|| c5_achievability(&suite));
        run(6, "merging-condition chain", &|| c6_chain(&suite));
        run(7, "converse bound", &|| c7_converse(&suite));
    }
    run(8, "smoothing sanity", &c8_smoothing);
    run(9, "convergence trend", &c9_convergence);
    run(10, "metric axioms", &c10_metrics);
    if !all {
        std::process::exit(1);
    }
}
