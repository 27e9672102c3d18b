//! Reproduction presets: parameterized runs that check the headline claims
//! exactly and record every intermediate value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::braess::{braess_ratio_with, SubgraphPolicy};
use crate::dynamics::certify_nash;
use crate::equilibrium::{nash_flow, EngineOptions, EquilibriumRun, Trigger};
use crate::error::{Error, Result};
use crate::gen::{
    embed_paradox_instance, instantiate_m3_variant, lemma1_alphas, make_m3_variants, make_mn, make_mn_transpose,
    random_dag, MnParams,
};
use crate::network::Instance;
use crate::scalar::{format_rational, int, one, pow, ratio, Rational, Scalar};
use crate::topology::{find_subdivision, uses_only_chains, PatternId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetId {
    Lemma1,
    Theorem1,
    Lemma2,
    Lemma3,
    Theorem5,
}

impl PresetId {
    pub const ALL: [PresetId; 5] =
        [PresetId::Lemma1, PresetId::Theorem1, PresetId::Lemma2, PresetId::Lemma3, PresetId::Theorem5];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Lemma1 => "lemma1",
            PresetId::Theorem1 => "theorem1",
            PresetId::Lemma2 => "lemma2",
            PresetId::Lemma3 => "lemma3",
            PresetId::Theorem5 => "theorem5",
        }
    }

    pub fn claim(self) -> &'static str {
        match self {
            PresetId::Lemma1 => "on A_n the sink latency eventually exceeds (1-2n eps)(n-1)T",
            PresetId::Theorem1 => "removing e_{n-1} from A_n improves the equilibrium cost by a factor above (1-eps)(n-1)",
            PresetId::Lemma2 => "no subnetwork of the transposed instance A_n^T has a lower equilibrium cost",
            PresetId::Lemma3 => "a DAG uses only chains of parallel paths iff it has none of M3, M3T, M3', M3'' as a minor",
            PresetId::Theorem5 => "a network with an M3, M3' or M3'' minor admits the paradox",
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset {s}")))
    }
}

/// Parameter overrides; unset fields take the preset's defaults.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub eps: Option<Rational>,
    pub j: Option<u32>,
    pub big_t: Option<Rational>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub nodes: Option<usize>,
    pub edges: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub claim: String,
    pub holds: bool,
    /// The compared values, or the counterexample when the claim fails.
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresetReport {
    pub id: PresetId,
    pub claim: String,
    pub parameters: BTreeMap<String, String>,
    /// Exact intermediate values, in the order they were computed.
    pub values: Vec<(String, String)>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl PresetReport {
    pub fn first_failure(&self) -> Option<&Assertion> {
        self.assertions.iter().find(|a| !a.holds)
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

struct Builder {
    id: PresetId,
    parameters: BTreeMap<String, String>,
    values: Vec<(String, String)>,
    assertions: Vec<Assertion>,
}

impl Builder {
    fn new(id: PresetId) -> Self {
        Builder { id, parameters: BTreeMap::new(), values: Vec::new(), assertions: Vec::new() }
    }

    fn param(&mut self, k: &str, v: impl fmt::Display) {
        self.parameters.insert(k.into(), v.to_string());
    }

    fn value(&mut self, k: impl Into<String>, v: impl fmt::Display) {
        self.values.push((k.into(), v.to_string()));
    }

    fn check(&mut self, claim: impl Into<String>, holds: bool, witness: impl Into<String>) {
        self.assertions.push(Assertion { claim: claim.into(), holds, witness: witness.into() });
    }

    /// Validator and Nash certificate on an engine run.
    fn self_oracle(&mut self, what: &str, inst: &Instance, run: &EquilibriumRun) -> Result<()> {
        let (nash, report) = certify_nash(inst, &run.flow)?;
        let witness = match report.violations.first() {
            Some(v) => v.message.clone(),
            None => "no violations".into(),
        };
        self.check(format!("{what}: engine output is a feasible Nash flow"), nash, witness);
        Ok(())
    }

    fn finish(self) -> PresetReport {
        PresetReport {
            passed: self.assertions.iter().all(|a| a.holds),
            id: self.id,
            claim: self.id.claim().into(),
            parameters: self.parameters,
            values: self.values,
            assertions: self.assertions,
        }
    }
}

fn q(x: &Rational) -> String {
    format_rational(x)
}

fn cmp_witness(lhs: &impl fmt::Display, op: &str, rhs: &impl fmt::Display) -> String {
    format!("{lhs} {op} {rhs}")
}

pub fn run_preset(id: PresetId, o: &Overrides) -> Result<PresetReport> {
    match id {
        PresetId::Lemma1 => lemma1(o),
        PresetId::Theorem1 => theorem1(o),
        PresetId::Lemma2 => lemma2(o),
        PresetId::Lemma3 => lemma3(o),
        PresetId::Theorem5 => theorem5(o),
    }
}

struct MnArgs {
    n: usize,
    eps: Rational,
    j: u32,
    big_t: Rational,
}

fn mn_args(o: &Overrides, n: usize, eps: Rational) -> Result<MnArgs> {
    let args = MnArgs {
        n: o.n.unwrap_or(n),
        eps: o.eps.clone().unwrap_or(eps),
        j: o.j.unwrap_or(1),
        big_t: o.big_t.clone().unwrap_or_else(one),
    };
    if args.n < 3 {
        return Err(Error::InvalidParameter("n must be at least 3".into()));
    }
    Ok(args)
}

fn record_mn(b: &mut Builder, a: &MnArgs) {
    b.param("n", a.n);
    b.param("eps", q(&a.eps));
    b.param("j", a.j);
    b.param("T", q(&a.big_t));
}

/// `μ_k = T·α_{n−1}/(α_{k−1} − α_{n−1})`, the real time at which `f_k`
/// becomes tight, for `k = 1..n−1`.
pub fn activation_times(big_t: &Rational, alphas: &[Rational]) -> Vec<Rational> {
    let n = alphas.len();
    (1..n).map(|k| big_t * &alphas[n - 1] / (&alphas[k - 1] - &alphas[n - 1])).collect()
}

fn lemma1(o: &Overrides) -> Result<PresetReport> {
    let a = mn_args(o, 3, ratio(1, 10))?;
    let mut b = Builder::new(PresetId::Lemma1);
    record_mn(&mut b, &a);
    let alphas = lemma1_alphas(a.n, &a.eps, a.j)?;
    for (k, al) in alphas.iter().enumerate() {
        b.value(format!("alpha_{k}"), q(al));
    }
    let inst = make_mn(&MnParams::new(a.n, a.big_t.clone(), alphas.clone())?)?;
    let run = nash_flow(&inst)?;
    b.self_oracle("A_n", &inst, &run)?;
    let net = inst.network();

    let mu = activation_times(&a.big_t, &alphas);
    for (k, m) in mu.iter().enumerate() {
        let name = format!("f{}", k + 1);
        b.value(format!("mu_{}", k + 1), q(m));
        let ev = run
            .events()
            .find(|e| e.trigger == Trigger::Activation && e.edge.map(|x| net.edges()[x].id.as_str()) == Some(&name));
        match ev {
            Some(ev) => {
                b.value(format!("theta_{}", k + 1), q(&ev.theta));
                b.check(
                    format!("{name} becomes tight at real time mu_{}", k + 1),
                    ev.tail_time == *m,
                    cmp_witness(&q(&ev.tail_time), "vs", &q(m)),
                );
            }
            None => b.check(format!("{name} becomes tight"), false, "no activation event"),
        }
    }

    let probe = &a.big_t / pow(&a.eps, a.j + a.n as u32) + one();
    let psi = run.sink_latency().eval(&probe)?;
    let bound = (one() - int(2 * a.n as i64) * &a.eps) * int(a.n as i64 - 1) * &a.big_t;
    b.value("probe_theta", q(&probe));
    b.value("psi_t(probe)", q(&psi));
    b.value("bound", q(&bound));
    b.check("psi_t(probe) > (1-2n eps)(n-1)T", psi > bound, cmp_witness(&q(&psi), ">", &q(&bound)));
    let cap = int(a.n as i64 - 1) * &a.big_t;
    b.value("sigma", &run.social_cost);
    b.check(
        "sigma <= (n-1)T",
        run.social_cost <= Scalar::Finite(cap.clone()),
        cmp_witness(&run.social_cost, "<=", &q(&cap)),
    );
    Ok(b.finish())
}

fn theorem1(o: &Overrides) -> Result<PresetReport> {
    let a = mn_args(o, 3, ratio(1, 10))?;
    let mut b = Builder::new(PresetId::Theorem1);
    record_mn(&mut b, &a);
    let inner = &a.eps / int(2 * a.n as i64);
    b.value("construction_eps", q(&inner));
    let alphas = lemma1_alphas(a.n, &inner, a.j)?;
    let inst = make_mn(&MnParams::new(a.n, a.big_t.clone(), alphas)?)?;
    let run = nash_flow(&inst)?;
    b.self_oracle("A_n", &inst, &run)?;

    let opts = EngineOptions { certify: true, ..EngineOptions::default() };
    let report = braess_ratio_with(&inst, &SubgraphPolicy::AllSubsets { cap: 2 * a.n }, &opts)?;
    let failed: Vec<&str> = report.entries.iter().filter_map(|e| e.error.as_deref()).collect();
    b.check("every subnetwork equilibrium is computed and certified", failed.is_empty(), failed.join("; "));
    b.value("subsets", report.entries.len());
    b.value("sigma_full", &report.sigma_full);
    let removed = format!("e{}", a.n - 1);
    let h: Vec<String> = inst.network().edges().iter().filter(|e| e.id != removed).map(|e| e.id.clone()).collect();
    let h_refs: Vec<&str> = h.iter().map(String::as_str).collect();
    let sigma_h = report.entry(&h_refs).and_then(|e| e.sigma.clone());
    b.value(format!("sigma_without_{removed}"), sigma_h.as_ref().map_or("error".into(), |s| s.to_string()));
    b.check(
        format!("sigma without {removed} equals T"),
        sigma_h == Some(Scalar::Finite(a.big_t.clone())),
        format!("{sigma_h:?}"),
    );
    b.value("rho", &report.ratio);
    b.value("argmax", report.argmax.join(","));
    let bound = Scalar::Finite((one() - &a.eps) * int(a.n as i64 - 1));
    b.check("rho > (1-eps)(n-1)", report.ratio > bound, cmp_witness(&report.ratio, ">", &bound));
    Ok(b.finish())
}

fn lemma2(o: &Overrides) -> Result<PresetReport> {
    let a = mn_args(o, 3, ratio(1, 10))?;
    let mut b = Builder::new(PresetId::Lemma2);
    record_mn(&mut b, &a);
    let alphas = lemma1_alphas(a.n, &a.eps, a.j)?;
    let inst = make_mn_transpose(&MnParams::new(a.n, a.big_t.clone(), alphas)?)?;
    let run = nash_flow(&inst)?;
    b.self_oracle("A_n^T", &inst, &run)?;
    let opts = EngineOptions { certify: true, ..EngineOptions::default() };
    let report = braess_ratio_with(&inst, &SubgraphPolicy::AllSubsets { cap: 2 * a.n }, &opts)?;
    let failed: Vec<&str> = report.entries.iter().filter_map(|e| e.error.as_deref()).collect();
    b.check("every subnetwork equilibrium is computed and certified", failed.is_empty(), failed.join("; "));
    b.value("subsets", report.entries.len());
    b.value("sigma_full", &report.sigma_full);
    b.check(
        "sigma of A_n^T equals T",
        report.sigma_full == Scalar::Finite(a.big_t.clone()),
        cmp_witness(&report.sigma_full, "vs", &q(&a.big_t)),
    );
    b.value("rho", &report.ratio);
    b.check("rho = 1", report.ratio == Scalar::Finite(one()), format!("argmax {}", report.argmax.join(",")));
    Ok(b.finish())
}

fn lemma3(o: &Overrides) -> Result<PresetReport> {
    let samples = o.samples.unwrap_or(500);
    let seed = o.seed.unwrap_or(1);
    let nodes = o.nodes.unwrap_or(8);
    let edges = o.edges.unwrap_or(14);
    let mut b = Builder::new(PresetId::Lemma3);
    b.param("samples", samples);
    b.param("seed", seed);
    b.param("nodes", nodes);
    b.param("edges", edges);
    let verdicts: Vec<(u64, bool, bool)> = (seed..seed + samples)
        .into_par_iter()
        .map(|s| {
            let net = random_dag(nodes, edges, s)?;
            let (chains, _) = uses_only_chains(&net)?;
            let mut minor = false;
            for p in PatternId::CHAIN_OBSTRUCTIONS {
                if find_subdivision(&net, p)?.is_some() {
                    minor = true;
                    break;
                }
            }
            Ok((s, chains, minor))
        })
        .collect::<Result<_>>()?;
    let chains = verdicts.iter().filter(|v| v.1).count();
    let disagree: Vec<u64> = verdicts.iter().filter(|v| v.1 == v.2).map(|v| v.0).collect();
    b.value("only_chains", chains);
    b.value("with_minor", verdicts.len() - chains);
    b.value("disagreements", disagree.len());
    b.check(
        "chain test and minor search agree on every sample",
        disagree.is_empty(),
        format!("seeds {disagree:?}"),
    );
    Ok(b.finish())
}

fn theorem5(o: &Overrides) -> Result<PresetReport> {
    let a = mn_args(o, 4, ratio(1, 100))?;
    let mut b = Builder::new(PresetId::Theorem5);
    b.param("host", format!("M_{}", a.n));
    b.param("eps", q(&a.eps));
    b.param("j", a.j);
    b.param("T", q(&a.big_t));
    let alphas3 = lemma1_alphas(3, &a.eps, a.j)?;
    let lower = Scalar::Finite((one() - int(6) * &a.eps) * int(2));
    b.value("bound", &lower);
    let opts = EngineOptions { certify: true, ..EngineOptions::default() };

    let host = make_mn(&MnParams::new(a.n, a.big_t.clone(), lemma1_alphas(a.n, &a.eps, a.j)?)?)?;
    let emb = find_subdivision(host.network(), PatternId::M3)?;
    b.check("host contains M3", emb.is_some(), "");
    if let Some(emb) = emb {
        b.value("embedding", serde_json::to_string(&emb.paths).expect("serializable"));
        let inst = embed_paradox_instance(host.network(), &emb, &a.big_t, &alphas3)?;
        let run = nash_flow(&inst)?;
        b.self_oracle("embedded instance", &inst, &run)?;
        let detour = int(3) * &a.big_t;
        let net = inst.network();
        let used: Vec<&str> = (0..net.edge_count())
            .filter(|&k| *inst.transit(k) == detour && run.flow.inflow[k].sup() != Some(int(0)))
            .map(|k| net.edges()[k].id.as_str())
            .collect();
        b.check("no flow enters an edge of transit 3T", used.is_empty(), used.join(","));
        let report = braess_ratio_with(&inst, &SubgraphPolicy::AllSubsets { cap: 16 }, &opts)?;
        b.value("sigma_full", &report.sigma_full);
        b.value("rho", &report.ratio);
        b.value("argmax", report.argmax.join(","));
        b.check("embedded rho > (1-6 eps)2", report.ratio > lower, cmp_witness(&report.ratio, ">", &lower));
    }

    let (prime, double) = make_m3_variants();
    let p = MnParams::new(3, a.big_t.clone(), alphas3)?;
    for (name, net) in [("M3'", prime), ("M3''", double)] {
        let inst = instantiate_m3_variant(&net, &p)?;
        let run = nash_flow(&inst)?;
        b.self_oracle(name, &inst, &run)?;
        let report = braess_ratio_with(&inst, &SubgraphPolicy::default(), &opts)?;
        b.value(format!("rho({name})"), &report.ratio);
        b.check(format!("{name} instance has rho > (1-6 eps)2"), report.ratio > lower, cmp_witness(&report.ratio, ">", &lower));
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PresetId::ALL {
            assert_eq!(p.name().parse::<PresetId>().unwrap(), p);
        }
        assert!("lemma9".parse::<PresetId>().is_err());
    }

    #[test]
    fn activation_times_for_a3() {
        let alphas = lemma1_alphas(3, &ratio(1, 10), 1).unwrap();
        assert_eq!(activation_times(&int(1), &alphas), vec![ratio(91, 9), ratio(1001, 9)]);
    }

    #[test]
    fn lemma1_default_passes() {
        let r = run_preset(PresetId::Lemma1, &Overrides::default()).unwrap();
        assert!(r.passed, "{}", r.to_json());
        assert_eq!(r.value("probe_theta"), Some("10001/1"));
        assert_eq!(r.value("bound"), Some("4/5"));
    }

    #[test]
    fn small_lemma3_corpus() {
        let o = Overrides { samples: Some(20), ..Overrides::default() };
        assert!(run_preset(PresetId::Lemma3, &o).unwrap().passed);
    }

    #[test]
    fn too_small_n_rejected() {
        let o = Overrides { n: Some(2), ..Overrides::default() };
        assert!(run_preset(PresetId::Lemma2, &o).is_err());
    }
}
