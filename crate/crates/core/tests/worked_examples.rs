use fot_core::braess::{braess_ratio, conjecture_search, extended_ratio, SubgraphPolicy, SweepGridJson};
use fot_core::equilibrium::{nash_flow, social_cost_ne, RunReport};
use fot_core::gen::{integer_alphas, lemma1_alphas, make_mn, make_mn_transpose, random_dag, MnParams};
use fot_core::presets::{run_preset, Overrides, PresetId};
use fot_core::scalar::{int, one, ratio, Rational, Scalar};
use fot_core::topology::smooth;
use fot_core::Instance;

fn a3(eps: Rational) -> Instance {
    make_mn(&MnParams::new(3, one(), lemma1_alphas(3, &eps, 1).unwrap()).unwrap()).unwrap()
}

#[test]
fn first_edge_latency_at_first_activation() {
    let alphas = lemma1_alphas(3, &ratio(1, 10), 1).unwrap();
    let (a0, a1, a2) = (&alphas[0], &alphas[1], &alphas[2]);
    let closed_form = one() - a0 * (a1 - a2) / (a1 * (a0 - a2));
    assert_eq!(closed_form, ratio(91, 101));
    let run = nash_flow(&a3(ratio(1, 10))).unwrap();
    let theta1 = run.events().next().unwrap().theta.clone();
    assert_eq!(run.edge_latency("e1", &theta1).unwrap(), closed_form);
}

#[test]
fn sink_latency_within_lemma_band() {
    let eps = ratio(1, 100);
    let sigma = social_cost_ne(&a3(eps.clone())).unwrap();
    let low = Scalar::Finite((one() - int(6) * &eps) * int(2));
    assert!(sigma > low && sigma <= Scalar::Finite(int(2)));
    assert!(sigma > Scalar::Finite(ratio(47, 25)));
}

#[test]
fn removing_the_middle_edge_gives_free_flow() {
    let inst = a3(ratio(1, 100));
    let keep = ["e1", "f1", "f2"].iter().map(|s| s.to_string()).collect();
    assert_eq!(social_cost_ne(&inst.restrict(&keep).unwrap()).unwrap(), Scalar::Finite(one()));
}

#[test]
fn integer_capacities_keep_the_paradox() {
    let ia = integer_alphas(3, &ratio(1, 10), 1).unwrap();
    let inst = make_mn(&MnParams::new(3, one(), ia.alphas).unwrap()).unwrap();
    let r = braess_ratio(&inst, &SubgraphPolicy::default()).unwrap();
    assert!(r.sigma_full > Scalar::Finite(ia.bound_per_t));
    assert!(r.paradox);
}

#[test]
fn smoothing_a3_does_not_change_sigma() {
    let inst = a3(ratio(1, 10));
    assert_eq!(social_cost_ne(&smooth(&inst).unwrap()).unwrap(), Scalar::Finite(ratio(201, 110)));
}

#[test]
fn ratio_conventions() {
    let inf = Scalar::PosInfinity;
    assert_eq!(extended_ratio(&Scalar::Finite(int(3)), &Scalar::Finite(int(0))), inf);
    assert_eq!(extended_ratio(&inf, &inf), Scalar::Finite(one()));
}

#[test]
fn conjecture_search_flags_nothing_on_chain_free_transposes() {
    let mut family = Vec::new();
    for n in [3, 4] {
        let p = MnParams::new(n, one(), lemma1_alphas(n, &ratio(1, 10), 1).unwrap()).unwrap();
        let forward = make_mn(&p).unwrap();
        let back = make_mn_transpose(&p).unwrap();
        family.push((format!("M_{n}"), forward.network().clone(), vec![forward]));
        family.push((format!("M_{n}^T"), back.network().clone(), vec![back]));
    }
    let out = conjecture_search(&family).unwrap();
    assert_eq!(out.len(), 4);
    for e in &out {
        assert!(!e.flagged_for_review, "{}", e.network);
        assert_eq!(e.forward_minor, !e.network.ends_with("^T"));
        assert_eq!(e.sweep.paradox_found, e.forward_minor);
    }
}

#[test]
fn conjecture_search_rejects_foreign_instances() {
    let a = a3(ratio(1, 10));
    let other = random_dag(5, 6, 3).unwrap();
    assert!(conjecture_search(&[("x".into(), other, vec![a])]).is_err());
}

#[test]
fn run_report_json_round_trip() {
    let run = nash_flow(&a3(ratio(1, 10))).unwrap();
    let report = RunReport::from_run(&run);
    let back: RunReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.social_cost, Scalar::Finite(ratio(201, 110)));
}

#[test]
fn default_grid_round_trips() {
    let g = SweepGridJson::default_transpose_m3();
    let back: SweepGridJson = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
    assert_eq!(back, g);
    assert_eq!(g.point_count(), 108);
}

#[test]
fn presets_pass_with_defaults() {
    for id in PresetId::ALL {
        let r = run_preset(id, &Overrides::default()).unwrap();
        assert!(r.passed, "{id}: {:?}", r.first_failure());
    }
}

#[test]
fn theorem1_preset_reports_construction() {
    let r = run_preset(PresetId::Theorem1, &Overrides::default()).unwrap();
    assert_eq!(r.value("construction_eps"), Some("1/60"));
    assert_eq!(r.value("sigma_without_e2"), Some("1/1"));
    assert_eq!(r.value("argmax"), Some("e1,f1,f2"));
}
