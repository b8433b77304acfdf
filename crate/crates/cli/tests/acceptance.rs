//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use sleepcell_core::association::{best_case_access_rr, AccessModel};
use sleepcell_core::channel::{
    cross_signal_stat_approx, CrossExact, CrossSeries, GammaFit, LinkParams, SignalStat,
};
use sleepcell_core::geometry::{Discretization, ZoneWeighting};
use sleepcell_core::metrics::{analyze_with, network_power, PowerModel};
use sleepcell_core::montecarlo::{
    best_case_greedy_frequency, iteration_rng, rr_selection_frequency, run, sample_cross_power,
    SimConfig,
};
use sleepcell_core::scenario::{Association, EnumerationPolicy, Scenario, Scheduling, Scheme};

type Outcome = Result<String, String>;

const RADIUS: f64 = 500.0;
const NEIGHBOR: f64 = 2.0 * RADIUS;
const THRESHOLDS: [f64; 3] = [0.5, 1.0, 2.0];

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn core<T>(r: sleepcell_core::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rr_best_case() -> Outcome {
    for u in 0..=10u32 {
        let want = 1.0 / (u as f64 + 1.0);
        ensure(
            best_case_access_rr(u) == want,
            format!("U={u}: {} != {want}", best_case_access_rr(u)),
        )?;
        let mc = rr_selection_frequency(u, 100_000, 3 + u as u64);
        let sigma = (want * (1.0 - want) / mc.samples as f64).sqrt();
        ensure(
            (mc.mean - want).abs() <= 3.0 * sigma,
            format!("U={u}: MC {} vs {want} (3σ = {})", mc.mean, 3.0 * sigma),
        )?;
    }
    Ok("exact for U=0..10, MC within 3σ".into())
}

fn pair_scenario(local_users: u32) -> std::result::Result<Scenario, String> {
    let mut loads = vec![1; 7];
    loads[1] = local_users;
    core(Scenario::with_sleep_set(1, RADIUS, loads, &[0]))
}

fn greedy_best_case() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut previous = f64::INFINITY;
    for u in 1..=10u32 {
        let s = pair_scenario(u)?;
        let m = core(AccessModel::build(&s))?;
        let p = core(m.best_case_access_greedy(0, 1))?;
        ensure(p < previous, format!("not decreasing at U={u}: {p}"))?;
        ensure(
            p < best_case_access_rr(u),
            format!("U={u}: greedy {p} not below round robin"),
        )?;
        previous = p;
        if [1, 3, 5, 10].contains(&u) {
            let mc = core(best_case_greedy_frequency(&s, NEIGHBOR, u, 100_000, 5))?;
            let d = (p - mc.mean).abs();
            worst = worst.max(d);
            ensure(d <= 0.01, format!("U={u}: analytic {p} vs MC {}", mc.mean))?;
        }
    }
    Ok(format!(
        "max |Δ| {worst:.4}, decreasing and below round robin"
    ))
}

/// Kolmogorov distance to the empirical law, probed at every `stride`-th order statistic.
///
/// Monotonicity bounds the gap between probes by `stride/n`, which is added back.
fn sup_norm(law: impl Fn(f64) -> f64, mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let stride = (n / 4000).max(1);
    let probed = (0..n)
        .step_by(stride)
        .map(|i| {
            let f = law(samples[i]);
            (f - i as f64 / n as f64)
                .abs()
                .max((f - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    probed + stride as f64 / n as f64
}

fn cross_samples(fit: GammaFit, link: LinkParams, n: u64, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut rng = iteration_rng(seed, i);
            sample_cross_power(fit, link, NEIGHBOR, RADIUS, &mut rng).expect("valid link")
        })
        .collect()
}

/// `∫ e^{-tx} f(x) dx` by composite Simpson in `ln x`.
fn laplace_of_density(pdf: impl Fn(f64) -> f64, lo: f64, hi: f64, t: f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    let n = 20_000;
    let h = (b - a) / n as f64;
    let g = |u: f64| {
        let x = u.exp();
        (-t * x).exp() * pdf(x) * x
    };
    let mut acc = g(a) + g(b);
    for i in 1..n {
        acc += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn cross_power() -> Outcome {
    let fit = GammaFit::new(2.0, 4.0).map_err(|e| e.to_string())?;
    let low = core(LinkParams::new(1.0, 2.0, 1.0))?;
    let grid = Discretization {
        rings: 50,
        sectors: 10,
        weighting: ZoneWeighting::Uniform,
    };
    let approx = core(cross_signal_stat_approx(
        fit, low, NEIGHBOR, 0.0, RADIUS, &grid,
    ))?;
    let approx_gap = sup_norm(|x| approx.cdf(x), cross_samples(fit, low, 1_000_000, 21));
    ensure(
        approx_gap <= 0.03,
        format!("mixture sup-norm {approx_gap:.4}"),
    )?;

    let mid = core(LinkParams::new(1.0, 2.6, 1.0))?;
    let exact = core(CrossExact::new(
        fit,
        mid,
        NEIGHBOR,
        RADIUS,
        CrossSeries::default(),
    ))?;
    let exact_gap = sup_norm(|x| exact.cdf(x), cross_samples(fit, mid, 1_000_000, 22));
    ensure(exact_gap <= 0.02, format!("series sup-norm {exact_gap:.4}"))?;

    let law = SignalStat::CrossExact(exact.clone());
    let (lo, hi) = law.support_hint();
    let mean = exact.mean();
    let mut worst: f64 = 0.0;
    for f in [0.1, 1.0, 10.0] {
        let t = f / mean;
        let want = laplace_of_density(|x| exact.pdf(x), lo, hi, t);
        let d = (exact.mgf(t) - want).abs();
        worst = worst.max(d);
        ensure(d <= 1e-4, format!("t·mean={f}: {} vs {want}", exact.mgf(t)))?;
    }
    Ok(format!(
        "mixture {approx_gap:.4}, series {exact_gap:.4}, transform {worst:.1e}"
    ))
}

fn association_rows() -> Outcome {
    let s = core(Scenario::bundled(3))?;
    let m = core(AccessModel::build(&s))?;
    let mut worst: f64 = 0.0;
    for j in s.populated_sleeping() {
        let sum: f64 = core(m.mrsp_row(j))?.iter().map(|e| e.1).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    ensure(worst <= 1e-6, format!("row sum off by {worst:e}"))?;

    // Focus cell 0 sees 3 + 4 + 3 = 10 competitors.
    let loads = vec![4, 4, 3, 3, 3, 3, 3];
    let mut exact = core(Scenario::with_sleep_set(1, RADIUS, loads, &[0, 1, 2]))?;
    exact.scheme = Scheme::new(Association::Mrsp, Scheduling::RoundRobin);
    let model = core(AccessModel::build(&exact))?;
    let mut detail = String::new();
    for k in model.active().to_vec() {
        let states = core(model.enumerate_user_states(0, k))?;
        ensure(
            states.competitors.len() == 10,
            format!("{} competitors", states.competitors.len()),
        )?;
        let mass = states.total_probability();
        ensure(
            (mass - 1.0).abs() <= 1e-9,
            format!("enumeration mass {mass}"),
        )?;
        let base = exact.loads[k] as f64 + 1.0;
        let share = |bits: &[bool]| 1.0 / (base + bits.iter().filter(|&&b| b).count() as f64);
        let first: f64 = states.states.iter().map(|s| s.prob * share(&s.bits)).sum();
        let second: f64 = states
            .states
            .iter()
            .map(|s| s.prob * share(&s.bits).powi(2))
            .sum();
        let want = core(model.exact_access_rr_mrsp(0, k))?;
        ensure(
            (want - first).abs() <= 1e-12,
            format!("BS {k}: counting law {want} vs enumeration {first}"),
        )?;
        let draws = 4000;
        let mut sampled = exact.clone();
        sampled.enumeration = EnumerationPolicy::Sampled { draws, seed: 9 };
        let got = core(core(AccessModel::build(&sampled))?.exact_access_rr_mrsp(0, k))?;
        let sigma = ((second - first * first).max(0.0) / draws as f64).sqrt();
        ensure(
            (got - want).abs() <= 3.0 * sigma.max(1e-15),
            format!("BS {k}: sampled {got} vs exact {want} (σ {sigma:e})"),
        )?;
        detail = format!("sampled within 3σ at {} BSs", model.active().len());
    }
    Ok(format!("row error {worst:.1e}, {detail}"))
}

fn mmap_choice(threshold: u32, swept: u32) -> std::result::Result<Option<usize>, String> {
    let mut s = core(Scenario::bundled(threshold))?;
    core(s.set_load(2, swept))?;
    if !s.pattern.is_sleeping(0) || s.pattern.is_sleeping(2) {
        return Ok(None);
    }
    let m = core(AccessModel::build(&s))?;
    Ok(Some(core(m.mmap_associate(Scheduling::Greedy))?.chosen[&0]))
}

fn mmap_switching() -> Outcome {
    for u in 1..=10u32 {
        if let Some(k) = mmap_choice(3, u)? {
            // Cell 1 carries five users; the user leaves cell 2 once it holds as many.
            let want = if u >= 5 { 1 } else { 2 };
            ensure(k == want, format!("threshold 3, U2={u}: chose {k}"))?;
        }
        if let Some(k) = mmap_choice(2, u)? {
            let want = if u > 3 { 3 } else { 2 };
            ensure(k == want, format!("threshold 2, U2={u}: chose {k}"))?;
        }
    }
    Ok("switch at U2=5 (threshold 3) and past U2=3 (threshold 2)".into())
}

fn reduced_scenario() -> std::result::Result<Scenario, String> {
    core(Scenario::with_sleep_set(1, RADIUS, vec![3; 7], &[0, 1]))
}

fn reduced_config() -> SimConfig {
    SimConfig {
        iterations: 100_000,
        seed: 11,
        outage_thresholds: THRESHOLDS.to_vec(),
        ..Default::default()
    }
}

/// `e^x E₁(x)` from the convergent series of `E₁`.
fn scaled_exp_integral(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -x / k as f64;
        sum += term / k as f64;
    }
    x.exp() * (-EULER - x.ln() - sum)
}

fn exponential_oracle() -> std::result::Result<f64, String> {
    use sleepcell_core::metrics::spectral_efficiency;
    use sleepcell_core::sigint::{InterferenceStat, ServedLaw, SignalPowerStat};
    use std::sync::Arc;
    let grid = Discretization {
        rings: 1,
        sectors: 1,
        weighting: ZoneWeighting::Uniform,
    };
    let fit = core(GammaFit::new(1.0, 1.0))?;
    let link = core(LinkParams::new(1.0, 2.6, 1.0))?;
    let law = core(cross_signal_stat_approx(
        fit, link, NEIGHBOR, 0.0, RADIUS, &grid,
    ))?;
    let mean = law.mean();
    let signal = core(SignalPowerStat::new(
        1.0,
        ServedLaw::Scaled {
            law: Arc::new(law),
            factor: 1.0,
        },
    ))?;
    let quiet = InterferenceStat::new(Vec::new(), 1.0);
    let mut worst: f64 = 0.0;
    for inv_snr in [0.1, 0.5, 1.0, 2.0] {
        let got = core(spectral_efficiency(&signal, &quiet, inv_snr * mean))?;
        worst = worst.max((got - scaled_exp_integral(inv_snr)).abs());
    }
    Ok(worst)
}

fn reduced_checks() -> std::result::Result<(Outcome, Outcome), String> {
    let base = reduced_scenario()?;
    let cfg = reduced_config();
    let mut se_worst: f64 = 0.0;
    let mut outage_worst: f64 = 0.0;
    let mut se_fail = Vec::new();
    let mut outage_fail = Vec::new();
    for scheme in Scheme::ANALYTIC {
        let mut s = base.clone();
        s.scheme = scheme;
        let m = core(AccessModel::build(&s))?;
        let (report, curve) = core(analyze_with(&m, scheme, &THRESHOLDS))?;
        let sim = core(run(&s, &cfg))?;
        let rel = (report.se_nats / sim.se_nats.mean - 1.0).abs();
        se_worst = se_worst.max(rel);
        if rel > 0.05 {
            se_fail.push(format!(
                "{scheme}: {} vs {}",
                report.se_nats, sim.se_nats.mean
            ));
        }
        for (a, (q, mc)) in curve.iter().zip(&sim.outage) {
            let d = (a - mc.mean).abs();
            outage_worst = outage_worst.max(d);
            if d > 0.01 {
                outage_fail.push(format!("{scheme} Q={q}: {a} vs {}", mc.mean));
            }
        }
    }
    let oracle = exponential_oracle()?;
    if oracle > 1e-4 {
        se_fail.push(format!("exponential oracle off by {oracle:e}"));
    }
    let symmetric = symmetric_outage()?;
    if (symmetric - 0.5).abs() > 1e-3 {
        outage_fail.push(format!("symmetric outage {symmetric}"));
    }
    let se = if se_fail.is_empty() {
        Ok(format!(
            "max rel {:.2}%, exponential oracle {oracle:.1e}",
            100.0 * se_worst
        ))
    } else {
        Err(se_fail.join("; "))
    };
    let outage = if outage_fail.is_empty() {
        Ok(format!(
            "max |Δ| {outage_worst:.4}, symmetric {symmetric:.6}"
        ))
    } else {
        Err(outage_fail.join("; "))
    };
    Ok((se, outage))
}

fn symmetric_outage() -> std::result::Result<f64, String> {
    use sleepcell_core::metrics::outage_probability;
    use sleepcell_core::sigint::{InterferenceStat, Interferer, ServedLaw, SignalPowerStat};
    use std::sync::Arc;
    let fit = core(GammaFit::new(2.0, 4.0))?;
    let link = core(LinkParams::new(1.0, 2.6, 1.0))?;
    let law = Arc::new(
        core(CrossExact::new(
            fit,
            link,
            NEIGHBOR,
            RADIUS,
            CrossSeries::default(),
        ))
        .map(SignalStat::CrossExact)?,
    );
    let signal = core(SignalPowerStat::new(
        1.0,
        ServedLaw::Scaled {
            law: law.clone(),
            factor: 1.0,
        },
    ))?;
    let interference = InterferenceStat::new(
        vec![Interferer {
            bs: 1,
            law,
            zoom_probability: 0.0,
        }],
        1.0,
    );
    core(outage_probability(&signal, &interference, 1.0))
}

fn power_model(sleeping: usize, zooming: f64, zoom: f64) -> PowerModel {
    PowerModel {
        transmit_power: 1.0,
        static_power: 200.0,
        sleep_power: 2.0,
        dynamic_slope: 3.77,
        zoom,
        cells: 19,
        active: 19 - sleeping,
        sleeping,
        zooming,
        constituents: None,
    }
}

fn power_and_trends() -> Outcome {
    let all = core(network_power(&power_model(0, 0.0, 1.0)))?;
    ensure(
        all.total == 19.0 * (3.77 + 200.0) && format!("{:.2}", all.total) == "3871.63",
        format!("total power {}", all.total),
    )?;
    ensure(
        all.after_sleep == all.total,
        "no sleepers must keep the total",
    )?;
    let idle = core(network_power(&power_model(8, 5.0, 1.0)))?;
    ensure(
        idle.after_zoom == idle.after_sleep,
        "unit zoom must not change power",
    )?;

    let base = core(Scenario::bundled(2))?;
    ensure(base.loads[2] == 5, "swept cell must hold 5 users")?;
    let cfg = SimConfig {
        iterations: 40_000,
        seed: 17,
        ..Default::default()
    };
    let zooms = [1.0, 2.0, 4.0, 8.0];
    let mut notes = Vec::new();
    for scheme in Scheme::ANALYTIC {
        let mut prev: Option<(f64, f64, f64)> = None;
        for &a in &zooms {
            let mut s = base.clone();
            s.scheme = scheme;
            core(s.set_zoom(a))?;
            let sim = core(run(&s, &cfg))?;
            let now = (
                sim.energy_efficiency.mean,
                sim.network_se_nats.mean,
                sim.se_nats.mean,
            );
            if let Some(p) = prev {
                ensure(
                    now.0 <= p.0,
                    format!("{scheme} α={a}: EE rose to {}", now.0),
                )?;
                ensure(
                    now.1 <= p.1,
                    format!("{scheme} α={a}: network SE rose to {}", now.1),
                )?;
                if scheme == Scheme::new(Association::Mmap, Scheduling::Greedy) {
                    ensure(
                        now.2 >= p.2,
                        format!("{scheme} α={a}: sleeping-user SE fell to {}", now.2),
                    )?;
                }
            }
            prev = Some(now);
        }
        notes.push(scheme.to_string());
    }
    Ok(format!("3871.63 W, trends hold for {}", notes.join(", ")))
}

fn reproducible_cli() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_sleepcell");
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/bundled.toml");
    let dir = std::env::temp_dir().join(format!("sleepcell-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in [1, 2] {
        let out = dir.join(format!("validate-{threads}.csv"));
        let status = Command::new(exe)
            .args([
                "validate",
                "--scenario",
                scenario,
                "--seed",
                "42",
                "--threads",
            ])
            .arg(threads.to_string())
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(
            matches!(status.code(), Some(0) | Some(4)),
            format!("validate exited with {status}"),
        )?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(!outputs[0].is_empty(), "empty validate output")?;
    ensure(
        outputs[0] == outputs[1],
        "outputs differ between thread counts",
    )?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn report(id: usize, budget: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome =
        catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
    verdict(id, budget, start.elapsed(), outcome)
}

fn verdict(id: usize, budget: Duration, took: Duration, outcome: Outcome) -> bool {
    let outcome = match outcome {
        Ok(_) if took > budget => Err(format!("took {took:.1?}, budget {budget:?}")),
        o => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let mut err = std::io::stderr();
    let _ = writeln!(
        err,
        "{tag} criterion {id} ({:.1} s): {detail}",
        took.as_secs_f64()
    );
    outcome.is_ok()
}

fn main() {
    let secs = Duration::from_secs;
    let mut passed = vec![
        report(1, secs(10), rr_best_case),
        report(2, secs(120), greedy_best_case),
        report(3, secs(180), cross_power),
        report(4, secs(120), association_rows),
        report(5, secs(60), mmap_switching),
    ];
    // Both criteria share one set of analytic evaluations and simulations.
    let start = Instant::now();
    let (se, outage) = match catch_unwind(reduced_checks) {
        Ok(Ok(pair)) => pair,
        Ok(Err(e)) => (Err(e.clone()), Err(e)),
        Err(_) => (Err("panicked".into()), Err("panicked".into())),
    };
    let took = start.elapsed();
    passed.push(verdict(6, secs(600), took, se));
    passed.push(verdict(7, secs(300), took, outage));
    passed.push(report(8, secs(600), power_and_trends));
    passed.push(report(9, secs(300), reproducible_cli));
    let failed = passed.iter().filter(|p| !**p).count();
    let _ = writeln!(
        std::io::stderr(),
        "acceptance: {} of {} criteria passed",
        passed.len() - failed,
        passed.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
