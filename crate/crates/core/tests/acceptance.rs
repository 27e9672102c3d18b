//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fot_core::braess::{braess_ratio_with, sweep_transpose_m3_with, SubgraphPolicy, SweepGridJson};
use fot_core::dynamics::{certify_nash, validate_feasible};
use fot_core::equilibrium::{nash_flow, nash_flow_with, EngineOptions, EquilibriumRun, Trigger};
use fot_core::gen::{embed_paradox_instance, lemma1_alphas, make_m3_variants, make_mn, make_mn_transpose, random_dag, MnParams};
use fot_core::scalar::{format_rational, int, one, pow, ratio, Rational, Scalar};
use fot_core::topology::{find_subdivision, isomorphic, series_parallel, uses_only_chains, PatternId};
use fot_core::Instance;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ok<T>(r: fot_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn certified() -> EngineOptions {
    EngineOptions { certify: true, ..EngineOptions::default() }
}

fn a_n(n: usize, eps: &Rational) -> Result<Instance, String> {
    let alphas = ok(lemma1_alphas(n, eps, 1))?;
    ok(make_mn(&ok(MnParams::new(n, one(), alphas))?))
}

fn a_n_transpose(n: usize, eps: &Rational) -> Result<Instance, String> {
    let alphas = ok(lemma1_alphas(n, eps, 1))?;
    ok(make_mn_transpose(&ok(MnParams::new(n, one(), alphas))?))
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("{what} took {took:?}, limit {limit:?}"))
}

fn m2() -> Result<Instance, String> {
    ok(make_mn(&ok(MnParams::new(2, int(1), vec![int(2), int(1)]))?))
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let inst = m2()?;
    let run = ok(nash_flow(&inst))?;
    within(start, Duration::from_secs(1), "M_2 run")?;
    let (a0, a1, t) = (int(2), int(1), int(1));
    let expected = &t * &a1 / (&a0 - &a1);
    let events: Vec<_> = run.events().collect();
    ensure(events.len() == 1, format!("{} events", events.len()))?;
    ensure(events[0].trigger == Trigger::Activation, "first event is not an activation")?;
    ensure(events[0].theta == expected, format!("activation at {}", format_rational(&events[0].theta)))?;
    ensure(run.social_cost == Scalar::Finite(t), format!("sigma = {}", run.social_cost))?;
    Ok(format!("activation at theta = 1, sigma = 1, {:?}", start.elapsed()))
}

fn lemma1_case(n: usize, eps: &Rational) -> Result<String, String> {
    let start = Instant::now();
    let inst = a_n(n, eps)?;
    let run = ok(nash_flow(&inst))?;
    within(start, Duration::from_secs(10), "A_n run")?;
    let t = one();
    let probe = &t / pow(eps, 1 + n as u32) + one();
    let psi = ok(run.sink_latency().eval(&probe))?;
    let bound = (one() - int(2 * n as i64) * eps) * int(n as i64 - 1) * &t;
    ensure(psi > bound, format!("psi_t = {} <= {}", format_rational(&psi), format_rational(&bound)))?;
    let alphas = ok(lemma1_alphas(n, eps, 1))?;
    let net = inst.network();
    for k in 1..n {
        let mu = &t * &alphas[n - 1] / (&alphas[k - 1] - &alphas[n - 1]);
        let id = format!("f{k}");
        let ev = run
            .events()
            .find(|e| e.trigger == Trigger::Activation && e.edge.map(|x| net.edges()[x].id.as_str()) == Some(id.as_str()))
            .ok_or(format!("{id} never activates"))?;
        ensure(ev.tail_time == mu, format!("{id} at {} vs mu {}", format_rational(&ev.tail_time), format_rational(&mu)))?;
    }
    Ok(format!("n={n} eps={}: psi_t={} > {}", format_rational(eps), format_rational(&psi), format_rational(&bound)))
}

fn criterion_2() -> Check {
    let mut parts = Vec::new();
    for n in [3, 4] {
        for eps in [ratio(1, 10), ratio(1, 100)] {
            parts.push(lemma1_case(n, &eps)?);
        }
    }
    Ok(parts.join("; "))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let inst = a_n(3, &ratio(1, 100))?;
    let r = ok(braess_ratio_with(&inst, &SubgraphPolicy::AllSubsets { cap: 16 }, &EngineOptions::default()))?;
    within(start, Duration::from_secs(10), "enumeration")?;
    ensure(r.entries.len() == 16, format!("{} subsets", r.entries.len()))?;
    ensure(r.entries.iter().all(|e| e.error.is_none()), "a subset failed")?;
    ensure(r.argmax == ["e1", "f1", "f2"], format!("argmax {:?}", r.argmax))?;
    let sigma_h = r.entry(&["e1", "f1", "f2"]).and_then(|e| e.sigma.clone());
    ensure(sigma_h == Some(Scalar::Finite(int(1))), format!("sigma_H = {sigma_h:?}"))?;
    let bound = Scalar::Finite(ratio(99, 50));
    ensure(r.ratio > bound, format!("rho = {}", r.ratio))?;
    ensure(r.ratio == Scalar::Finite(ratio(20001, 10100)), format!("rho = {}", r.ratio))?;
    Ok(format!("rho = {} > 99/50, argmax minus e2, {:?}", r.ratio, start.elapsed()))
}

fn criterion_4() -> Check {
    let mut parts = Vec::new();
    for n in [3, 4] {
        let inst = a_n_transpose(n, &ratio(1, 100))?;
        let r = ok(braess_ratio_with(&inst, &SubgraphPolicy::default(), &EngineOptions::default()))?;
        ensure(r.entries.len() == 1 << inst.network().edge_count(), "not a full enumeration")?;
        ensure(r.entries.iter().all(|e| e.error.is_none()), "a subset failed")?;
        ensure(r.ratio == Scalar::Finite(one()), format!("n={n}: rho = {}", r.ratio))?;
        ensure(r.sigma_full == Scalar::Finite(one()), format!("n={n}: sigma = {}", r.sigma_full))?;
        parts.push(format!("n={n}: rho = 1 over {} subsets", r.entries.len()));
    }
    Ok(parts.join("; "))
}

fn default_grid_checks(grid: &SweepGridJson) -> Result<(), String> {
    ensure(grid.point_count() >= 50, format!("{} points", grid.point_count()))?;
    let over_capacity = grid.capacities.iter().any(|c| {
        let total: Rational = c.values().map(|v| fot_core::scalar::parse_rational(v).unwrap()).sum();
        grid.supplies.iter().any(|d| fot_core::scalar::parse_rational(d).unwrap() > total)
    });
    ensure(over_capacity, "no supply above total capacity")?;
    let placements: BTreeSet<_> = grid.terminals.iter().collect();
    ensure(placements.len() >= 3, "fewer than three terminal placements")
}

fn criterion_5() -> Check {
    let grid = SweepGridJson::default_transpose_m3();
    default_grid_checks(&grid)?;
    let r = ok(sweep_transpose_m3_with(&grid, &EngineOptions::default()))?;
    ensure(r.failed.is_empty(), format!("failed points {:?}", r.failed))?;
    let off: Vec<_> = r.points.iter().filter(|p| p.ratio != Some(Scalar::Finite(one()))).map(|p| p.index).collect();
    ensure(off.is_empty(), format!("rho != 1 at {off:?}"))?;
    Ok(format!("{} points, all rho = 1", r.points.len()))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut chains = 0;
    for seed in 1..=500 {
        let net = ok(random_dag(8, 14, seed))?;
        let (only, _) = ok(uses_only_chains(&net))?;
        let mut minor = false;
        for p in PatternId::CHAIN_OBSTRUCTIONS {
            minor |= ok(find_subdivision(&net, p))?.is_some();
        }
        ensure(only != minor, format!("seed {seed}: chains {only}, minor {minor}"))?;
        chains += only as usize;
    }
    within(start, Duration::from_secs(60), "corpus")?;
    Ok(format!("500/500 agree ({chains} chain networks), {:?}", start.elapsed()))
}

fn embedded_instance() -> Result<Instance, String> {
    let host = a_n(4, &ratio(1, 100))?;
    let emb = ok(find_subdivision(host.network(), PatternId::M3))?.ok_or("M_4 has no M3 minor")?;
    ok(embed_paradox_instance(host.network(), &emb, &one(), &ok(lemma1_alphas(3, &ratio(1, 100), 1))?))
}

fn criterion_7() -> Check {
    let inst = embedded_instance()?;
    let run = ok(nash_flow(&inst))?;
    let detour = int(3);
    let net = inst.network();
    let detours: Vec<usize> = (0..net.edge_count()).filter(|&k| *inst.transit(k) == detour).collect();
    ensure(!detours.is_empty(), "no detour edges")?;
    for &k in &detours {
        ensure(run.flow.inflow[k].sup() == Some(int(0)), format!("flow on {}", net.edges()[k].id))?;
    }
    let r = ok(braess_ratio_with(&inst, &SubgraphPolicy::default(), &EngineOptions::default()))?;
    ensure(r.ratio >= Scalar::Finite(ratio(99, 50)), format!("rho = {}", r.ratio))?;
    Ok(format!("rho = {}, {} detour edges unused", r.ratio, detours.len()))
}

fn oracle(run: &EquilibriumRun) -> Result<(), String> {
    ensure(ok(validate_feasible(&run.instance, &run.flow))?.ok, "validator rejects the flow")?;
    let (nash, _) = ok(certify_nash(&run.instance, &run.flow))?;
    ensure(nash, "certificate rejects the flow")
}

fn criterion_8() -> Check {
    let mut runs = 0usize;
    let mut single = vec![m2()?];
    for n in [3, 4] {
        for eps in [ratio(1, 10), ratio(1, 100)] {
            single.push(a_n(n, &eps)?);
        }
    }
    for inst in &single {
        oracle(&ok(nash_flow(inst))?)?;
        runs += 1;
    }
    let mut enumerated = vec![a_n(3, &ratio(1, 100))?, a_n_transpose(3, &ratio(1, 100))?, a_n_transpose(4, &ratio(1, 100))?];
    enumerated.push(embedded_instance()?);
    for inst in &enumerated {
        let r = ok(braess_ratio_with(inst, &SubgraphPolicy::default(), &certified()))?;
        let bad: Vec<_> = r.entries.iter().filter_map(|e| e.error.clone()).collect();
        ensure(bad.is_empty(), bad.join("; "))?;
        runs += r.entries.len();
    }
    let sweep = ok(sweep_transpose_m3_with(&SweepGridJson::default_transpose_m3(), &certified()))?;
    ensure(sweep.failed.is_empty(), format!("sweep points {:?} rejected", sweep.failed))?;
    runs += sweep.points.len() * 16;
    Ok(format!("{runs} instances and subnetworks feasible and Nash under both criteria"))
}

fn criterion_9() -> Check {
    for n in 2..=8 {
        let inst = a_n(n, &ratio(1, 100))?;
        ensure(ok(series_parallel(inst.network()))?, format!("M_{n} not series-parallel"))?;
    }
    let (_, double) = make_m3_variants();
    ensure(isomorphic(&PatternId::Wheatstone.network(), &double), "Wheatstone not isomorphic to M3''")?;
    let m3t = a_n_transpose(3, &ratio(1, 100))?;
    ensure(ok(find_subdivision(m3t.network(), PatternId::M3))?.is_none(), "M3 found in M_3^T")?;
    let a = ok(nash_flow_with(&m3t, &certified()))?.social_cost;
    ensure(a == Scalar::Finite(one()), format!("sigma(M_3^T) = {a}"))?;
    Ok("M_2..M_8 series-parallel; Wheatstone = M3''; no M3 in M_3^T".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("base case M_2", criterion_1),
        ("sink latency bound on A_n", criterion_2),
        ("paradox ratio on A_3", criterion_3),
        ("no paradox on A_n^T", criterion_4),
        ("transpose M3 sweep", criterion_5),
        ("chain test vs minor search", criterion_6),
        ("embedding into M_4", criterion_7),
        ("self-oracle on all runs", criterion_8),
        ("classifier facts", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
