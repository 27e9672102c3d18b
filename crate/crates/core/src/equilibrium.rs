//! Nash flows over time computed phase by phase.
//!
//! The engine works in source departure time `θ`. Within a phase every label
//! `l_v`, every exit time `T_e = l_v + w_e(l_v) + τ_e` and every cumulative
//! particle count `A_e` is affine, with slopes given by a thin flow with
//! resetting on the current tight edges. The real-time flow is recovered at
//! the end by pushing the particle counts onto the label and exit clocks.

use std::collections::BTreeMap;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::dynamics::certify_nash;
use crate::error::{Error, Result};
use crate::flow::FlowOverTime;
use crate::lp::{Lp, LpOutcome, Relation};
use crate::network::Instance;
use crate::pwl::{Pwl, PwlJson};
use crate::scalar::{format_rational, one, parse_rational, zero, Rational, Scalar};

pub const DEFAULT_PHASE_CAP: usize = 1000;

/// Printed with every cost or ratio derived from [`nash_flow`].
pub const EQUILIBRIUM_CAVEAT: &str =
    "costs refer to the equilibrium constructed by the phase engine; other Nash flows of the instance are not examined";

/// Per-phase derivatives. `node_rate[v]` is `None` for nodes outside the
/// tight subnetwork; `edge_rate[e]` is zero for edges outside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinFlow {
    pub node_rate: Vec<Option<Rational>>,
    pub edge_rate: Vec<Rational>,
}

/// How the label slope at the head of a non-resetting edge compares with the
/// one at its tail. Declaration order is the enumeration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rel {
    /// `l′_w < l′_v`: the edge carries nothing.
    HeadLower,
    /// `l′_w = l′_v`: any rate up to `c·l′_w`.
    Equal,
    /// `l′_w > l′_v`: the edge builds a queue at rate exactly `c·l′_w`.
    HeadHigher,
}

const RELS: [Rel; 3] = [Rel::HeadLower, Rel::Equal, Rel::HeadHigher];

struct ThinFlowProblem<'a> {
    inst: &'a Instance,
    node_var: Vec<Option<usize>>,
    edge_var: Vec<Option<usize>>,
    resetting: &'a [bool],
    free: Vec<usize>,
    /// Nodes whose attainment can be decided once `free[i]` is assigned.
    settled_at: Vec<Vec<usize>>,
    delta: usize,
}

impl ThinFlowProblem<'_> {
    fn solve_pattern(&self, rels: &[Option<Rel>]) -> Option<Vec<Rational>> {
        let net = self.inst.network();
        let mut lp = Lp::new(self.delta + 1);
        let s = self.node_var[net.source_index()].unwrap();
        lp.constraint(vec![(s, one())], Relation::Eq, one());
        lp.constraint(vec![(self.delta, one())], Relation::Le, one());
        let d = self.inst.supply();
        for v in 0..net.node_count() {
            if self.node_var[v].is_none() {
                continue;
            }
            let mut row = Vec::new();
            for &e in net.out_edges(v) {
                if let Some(x) = self.edge_var[e] {
                    row.push((x, one()));
                }
            }
            for &e in net.in_edges(v) {
                if let Some(x) = self.edge_var[e] {
                    row.push((x, -one()));
                }
            }
            let rhs = if v == net.source_index() {
                d.clone()
            } else if v == net.sink_index() {
                -d.clone()
            } else {
                zero()
            };
            lp.constraint(row, Relation::Eq, rhs);
        }
        let mut strict = false;
        let mut rel_of = vec![None; net.edge_count()];
        for (i, &e) in self.free.iter().enumerate() {
            rel_of[e] = rels[i];
        }
        for e in 0..net.edge_count() {
            let Some(x) = self.edge_var[e] else { continue };
            let (v, w) = net.ends(e);
            let (lv, lw) = (self.node_var[v].unwrap(), self.node_var[w].unwrap());
            let c = self.inst.capacity(e).clone();
            let at_rate = vec![(x, one()), (lw, -c)];
            if self.resetting[e] {
                lp.constraint(at_rate, Relation::Eq, zero());
                continue;
            }
            match rel_of[e] {
                None => lp.constraint(at_rate, Relation::Le, zero()),
                Some(Rel::HeadLower) => {
                    strict = true;
                    lp.constraint(vec![(x, one())], Relation::Eq, zero());
                    lp.constraint(vec![(lv, one()), (lw, -one()), (self.delta, -one())], Relation::Ge, zero());
                }
                Some(Rel::Equal) => {
                    lp.constraint(vec![(lv, one()), (lw, -one())], Relation::Eq, zero());
                    lp.constraint(at_rate, Relation::Le, zero());
                }
                Some(Rel::HeadHigher) => {
                    strict = true;
                    lp.constraint(at_rate, Relation::Eq, zero());
                    lp.constraint(vec![(lw, one()), (lv, -one()), (self.delta, -one())], Relation::Ge, zero());
                }
            }
        }
        lp.maximize(vec![(self.delta, one())]);
        match lp.solve() {
            LpOutcome::Optimal { x, value } if value.is_positive() || !strict => Some(x),
            _ => None,
        }
    }

    fn attained(&self, w: usize, rels: &[Option<Rel>], pos: &[Option<usize>]) -> bool {
        self.inst.network().in_edges(w).iter().any(|&e| {
            self.edge_var[e].is_some()
                && (self.resetting[e]
                    || pos[e].is_some_and(|i| matches!(rels[i], Some(Rel::Equal | Rel::HeadHigher))))
        })
    }

    fn search(&self, i: usize, rels: &mut Vec<Option<Rel>>, pos: &[Option<usize>]) -> Option<Vec<Rational>> {
        if i == self.free.len() {
            return self.solve_pattern(rels);
        }
        for r in RELS {
            rels[i] = Some(r);
            if self.settled_at[i].iter().all(|&w| self.attained(w, rels, pos)) {
                if i + 1 == self.free.len() {
                    if let Some(x) = self.solve_pattern(rels) {
                        return Some(x);
                    }
                } else if self.solve_pattern(rels).is_some() {
                    if let Some(x) = self.search(i + 1, rels, pos) {
                        return Some(x);
                    }
                }
            }
        }
        rels[i] = None;
        None
    }
}

/// Thin flow with resetting on the tight edges `active`, with queued edges
/// `resetting ⊆ active`, using the instance capacities and supply.
///
/// Relation patterns between tail and head label slopes of the non-resetting
/// edges are enumerated in lexicographic order (edges sorted by the
/// topological position of their head, relations ordered as carrying nothing,
/// equal, queue-building); each pattern is a linear program with strict
/// inequalities encoded through a common margin. Partial patterns are pruned
/// with the relaxation `x′_e ≤ c_e·l′_w`. The first valid pattern is returned.
pub fn thin_flow(inst: &Instance, active: &[bool], resetting: &[bool]) -> Result<ThinFlow> {
    let net = inst.network();
    let m = net.edge_count();
    if active.len() != m || resetting.len() != m {
        return Err(Error::Contract("edge masks must cover every edge".into()));
    }
    if (0..m).any(|e| resetting[e] && !active[e]) {
        return Err(Error::Contract("resetting edges must be tight".into()));
    }
    let order = net
        .topological_order()
        .ok_or_else(|| Error::UnsupportedTopology("thin flows need an acyclic network".into()))?;
    let mut topo_pos = vec![0; net.node_count()];
    for (i, &v) in order.iter().enumerate() {
        topo_pos[v] = i;
    }

    let mut touched = vec![false; net.node_count()];
    touched[net.source_index()] = true;
    for e in (0..m).filter(|&e| active[e]) {
        let (v, w) = net.ends(e);
        touched[v] = true;
        touched[w] = true;
    }
    if !touched[net.sink_index()] {
        return Err(Error::Contract("tight edges do not reach the sink".into()));
    }
    for v in (0..net.node_count()).filter(|&v| touched[v] && v != net.source_index()) {
        if !net.in_edges(v).iter().any(|&e| active[e]) {
            return Err(Error::Contract(format!("node {} has no tight incoming edge", net.nodes()[v])));
        }
    }

    let mut next = 0;
    let mut node_var = vec![None; net.node_count()];
    for v in 0..net.node_count() {
        if touched[v] {
            node_var[v] = Some(next);
            next += 1;
        }
    }
    let mut edge_var = vec![None; m];
    for e in 0..m {
        if active[e] {
            edge_var[e] = Some(next);
            next += 1;
        }
    }
    let mut free: Vec<usize> = (0..m).filter(|&e| active[e] && !resetting[e]).collect();
    free.sort_by_key(|&e| (topo_pos[net.ends(e).1], topo_pos[net.ends(e).0], e));
    let mut pos = vec![None; m];
    for (i, &e) in free.iter().enumerate() {
        pos[e] = Some(i);
    }
    let mut settled_at = vec![Vec::new(); free.len()];
    let mut settled_now = Vec::new();
    for w in (0..net.node_count()).filter(|&w| touched[w] && w != net.source_index()) {
        match net.in_edges(w).iter().filter_map(|&e| pos[e]).max() {
            Some(i) => settled_at[i].push(w),
            None => settled_now.push(w),
        }
    }
    let problem = ThinFlowProblem { inst, node_var, edge_var, resetting, free, settled_at, delta: next };
    let mut rels = vec![None; problem.free.len()];
    let found = if settled_now.iter().all(|&w| problem.attained(w, &rels, &pos)) {
        problem.search(0, &mut rels, &pos)
    } else {
        None
    };
    let x = found.ok_or_else(|| Error::Internal("no thin flow pattern is valid".into()))?;
    Ok(ThinFlow {
        node_rate: problem.node_var.iter().map(|v| v.map(|i| x[i].clone())).collect(),
        edge_rate: problem.edge_var.iter().map(|v| v.map(|i| x[i].clone()).unwrap_or_else(zero)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Start,
    Activation,
    Depletion,
}

/// A phase boundary. `tail_time` is the real time `l_v(θ)` at the tail of
/// the edge, i.e. when the first particle of the new phase reaches it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub theta: Rational,
    pub trigger: Trigger,
    pub edge: Option<usize>,
    pub tail_time: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub start: Rational,
    pub end: Option<Rational>,
    pub active: Vec<bool>,
    pub resetting: Vec<bool>,
    pub node_rate: Vec<Option<Rational>>,
    pub edge_rate: Vec<Rational>,
    pub triggers: Vec<Event>,
}

#[derive(Clone, Debug)]
pub struct EquilibriumRun {
    pub instance: Instance,
    pub phases: Vec<Phase>,
    pub flow: FlowOverTime,
    /// `l_v` in departure time, `None` for nodes on no source–sink path.
    pub labels: Vec<Option<Pwl>>,
    /// `T_e` in departure time for edges on source–sink paths.
    pub exit_times: Vec<Option<Pwl>>,
    /// Cumulative particles that have entered each edge, in departure time.
    pub particles: Vec<Pwl>,
    pub steady: bool,
    pub diverging: bool,
    pub social_cost: Scalar,
}

impl EquilibriumRun {
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.phases.iter().flat_map(|p| p.triggers.iter()).filter(|e| e.trigger != Trigger::Start)
    }

    pub fn label(&self, v: &str) -> Option<&Pwl> {
        self.instance.network().node_index(v).and_then(|i| self.labels[i].as_ref())
    }

    /// `Ψ_t(θ) = l_t(θ) − θ`.
    pub fn sink_latency(&self) -> Pwl {
        self.labels[self.instance.network().sink_index()].as_ref().expect("sink is reached").sub(&Pwl::identity())
    }

    /// Waiting time of a particle leaving the source at `θ` and using `edge`.
    pub fn edge_latency(&self, edge: &str, theta: &Rational) -> Result<Rational> {
        let net = self.instance.network();
        let e = net.edge_index(edge).ok_or_else(|| Error::InvalidParameter(format!("unknown edge {edge}")))?;
        let (Some(t), Some(lv)) = (&self.exit_times[e], &self.labels[net.ends(e).0]) else {
            return Err(Error::InvalidParameter(format!("edge {edge} is on no source-sink path")));
        };
        Ok(t.eval(theta)? - lv.eval(theta)? - self.instance.transit(e))
    }
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub phase_cap: usize,
    /// Check every run with the independent validator and Nash certificate;
    /// a rejected run is an internal error.
    pub certify: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { phase_cap: DEFAULT_PHASE_CAP, certify: false }
    }
}

pub fn nash_flow(inst: &Instance) -> Result<EquilibriumRun> {
    nash_flow_with(inst, &EngineOptions::default())
}

fn affine_points(points: Vec<(Rational, Rational)>, tail: Rational) -> Result<Pwl> {
    Pwl::new(points, tail)
}

/// Candidate phase end: time until an inactive edge turns tight or a queue
/// empties, for the current slopes.
fn next_events(
    inst: &Instance,
    on_path: &[bool],
    lab: &[Option<Rational>],
    exit: &[Rational],
    tf: &ThinFlow,
    rho: &[Rational],
    active: &[bool],
    resetting: &[bool],
) -> Option<(Rational, Vec<(usize, Trigger)>)> {
    let net = inst.network();
    let mut best: Option<(Rational, Vec<(usize, Trigger)>)> = None;
    let mut offer = |dt: Rational, e: usize, t: Trigger| match &mut best {
        Some((b, list)) if *b == dt => list.push((e, t)),
        Some((b, _)) if *b < dt => {}
        _ => best = Some((dt, vec![(e, t)])),
    };
    for e in (0..net.edge_count()).filter(|&e| on_path[e]) {
        let (v, w) = net.ends(e);
        let (lv, lw) = (lab[v].as_ref().unwrap(), lab[w].as_ref().unwrap());
        let (dv, dw) = (tf.node_rate[v].as_ref().unwrap(), tf.node_rate[w].as_ref().unwrap());
        if !active[e] {
            let gap = &exit[e] - lw;
            let closing = dw - &rho[e];
            if closing.is_positive() {
                offer(gap / closing, e, Trigger::Activation);
            }
        }
        if resetting[e] {
            let queued = &exit[e] - lv - inst.transit(e);
            let draining = dv - &rho[e];
            if draining.is_positive() {
                offer(queued / draining, e, Trigger::Depletion);
            }
        }
    }
    best
}

fn dump(inst: &Instance, phases: &[Phase]) -> String {
    let net = inst.network();
    let mut out = String::new();
    for (i, p) in phases.iter().enumerate() {
        let ids = |mask: &[bool]| {
            (0..mask.len()).filter(|&e| mask[e]).map(|e| net.edges()[e].id.clone()).collect::<Vec<_>>().join(",")
        };
        out.push_str(&format!(
            "phase {i}: start {} tight [{}] queued [{}]\n",
            format_rational(&p.start),
            ids(&p.active),
            ids(&p.resetting)
        ));
    }
    out
}

/// Runs the phase engine until no further event occurs.
pub fn nash_flow_with(inst: &Instance, opts: &EngineOptions) -> Result<EquilibriumRun> {
    let net = inst.network();
    if !net.is_acyclic() {
        return Err(Error::UnsupportedTopology("the phase engine needs an acyclic network".into()));
    }
    if !net.has_st_path() {
        return Err(Error::NoPath);
    }
    let (n, m) = (net.node_count(), net.edge_count());
    let on_path = net.st_edges();
    let order = net.topological_order().expect("acyclic");

    let mut lab: Vec<Option<Rational>> = vec![None; n];
    lab[net.source_index()] = Some(zero());
    for &w in &order {
        for &e in net.in_edges(w) {
            if !on_path[e] {
                continue;
            }
            let v = net.ends(e).0;
            let via = lab[v].as_ref().expect("tail precedes head") + inst.transit(e);
            if lab[w].as_ref().is_none_or(|cur| via < *cur) {
                lab[w] = Some(via);
            }
        }
    }
    let mut exit: Vec<Rational> = (0..m)
        .map(|e| match (on_path[e], &lab[net.ends(e).0]) {
            (true, Some(l)) => l + inst.transit(e),
            _ => zero(),
        })
        .collect();
    let mut mass: Vec<Rational> = vec![zero(); m];

    let mut label_pts: Vec<Vec<(Rational, Rational)>> = vec![Vec::new(); n];
    let mut exit_pts: Vec<Vec<(Rational, Rational)>> = vec![Vec::new(); m];
    let mut mass_pts: Vec<Vec<(Rational, Rational)>> = vec![Vec::new(); m];
    let mut phases: Vec<Phase> = Vec::new();
    let mut theta = zero();
    let mut triggers = vec![Event { theta: zero(), trigger: Trigger::Start, edge: None, tail_time: zero() }];

    loop {
        if phases.len() >= opts.phase_cap {
            return Err(Error::PhaseCap { cap: opts.phase_cap, dump: dump(inst, &phases) });
        }
        let active: Vec<bool> = (0..m)
            .map(|e| on_path[e] && exit[e] == *lab[net.ends(e).1].as_ref().unwrap())
            .collect();
        let resetting: Vec<bool> = (0..m)
            .map(|e| on_path[e] && exit[e] > lab[net.ends(e).0].as_ref().unwrap() + inst.transit(e))
            .collect();
        if let Some(e) = (0..m).find(|&e| resetting[e] && !active[e]) {
            return Err(Error::Internal(format!(
                "edge {} holds a queue but is not tight\n{}",
                net.edges()[e].id,
                dump(inst, &phases)
            )));
        }
        let tf = thin_flow(inst, &active, &resetting)?;
        let rho: Vec<Rational> = (0..m)
            .map(|e| {
                if !on_path[e] {
                    return zero();
                }
                let x = &tf.edge_rate[e] / inst.capacity(e);
                if resetting[e] {
                    x
                } else {
                    std::cmp::max(tf.node_rate[net.ends(e).0].clone().unwrap(), x)
                }
            })
            .collect();

        for v in 0..n {
            if let Some(l) = &lab[v] {
                label_pts[v].push((theta.clone(), l.clone()));
            }
        }
        for e in (0..m).filter(|&e| on_path[e]) {
            exit_pts[e].push((theta.clone(), exit[e].clone()));
            mass_pts[e].push((theta.clone(), mass[e].clone()));
        }

        let next = next_events(inst, &on_path, &lab, &exit, &tf, &rho, &active, &resetting);
        let end = next.as_ref().map(|(dt, _)| &theta + dt);
        phases.push(Phase {
            start: theta.clone(),
            end: end.clone(),
            active,
            resetting,
            node_rate: tf.node_rate.clone(),
            edge_rate: tf.edge_rate.clone(),
            triggers: std::mem::take(&mut triggers),
        });
        let Some((dt, fired)) = next else {
            let run = finish(inst, phases, &on_path, label_pts, exit_pts, mass_pts, &tf, &rho)?;
            if opts.certify {
                let (nash, report) = certify_nash(inst, &run.flow)?;
                if !nash {
                    return Err(Error::Internal(format!("engine output rejected by the certificate: {}", report.to_json())));
                }
            }
            return Ok(run);
        };
        for v in 0..n {
            if let (Some(l), Some(r)) = (&mut lab[v], &tf.node_rate[v]) {
                *l += r * &dt;
            }
        }
        for e in (0..m).filter(|&e| on_path[e]) {
            exit[e] += &rho[e] * &dt;
            mass[e] += &tf.edge_rate[e] * &dt;
        }
        theta += dt;
        triggers = fired
            .into_iter()
            .map(|(e, trigger)| Event {
                theta: theta.clone(),
                trigger,
                edge: Some(e),
                tail_time: lab[net.ends(e).0].clone().unwrap(),
            })
            .collect();
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    inst: &Instance,
    phases: Vec<Phase>,
    on_path: &[bool],
    label_pts: Vec<Vec<(Rational, Rational)>>,
    exit_pts: Vec<Vec<(Rational, Rational)>>,
    mass_pts: Vec<Vec<(Rational, Rational)>>,
    last: &ThinFlow,
    rho: &[Rational],
) -> Result<EquilibriumRun> {
    let net = inst.network();
    let labels = label_pts
        .into_iter()
        .enumerate()
        .map(|(v, pts)| match (&last.node_rate[v], pts.is_empty()) {
            (Some(r), false) => affine_points(pts, r.clone()).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut exit_times = vec![None; net.edge_count()];
    let mut particles = vec![Pwl::constant(zero()); net.edge_count()];
    let mut inflow = particles.clone();
    let mut outflow = particles.clone();
    for (e, (tp, mp)) in exit_pts.into_iter().zip(mass_pts).enumerate() {
        if !on_path[e] {
            continue;
        }
        let t = affine_points(tp, rho[e].clone())?;
        let a = affine_points(mp, last.edge_rate[e].clone())?;
        let lv = labels[net.ends(e).0].as_ref().expect("tail is labelled");
        inflow[e] = a.pushforward(lv)?;
        outflow[e] = a.pushforward(&t)?;
        exit_times[e] = Some(t);
        particles[e] = a;
    }
    let mut sink = Pwl::constant(zero());
    for &e in net.in_edges(net.sink_index()) {
        sink = sink.add(&outflow[e]);
    }
    let flow = FlowOverTime::new(inst, inflow, outflow, sink, None)?;
    let t = net.sink_index();
    let final_rates = &phases.last().expect("at least one phase").node_rate;
    let steady = final_rates.iter().flatten().all(|r| *r == one());
    let diverging = final_rates[t].as_ref().is_some_and(|r| *r > one());
    let lt = labels[t].as_ref().expect("sink is labelled");
    let social_cost = match lt.sub(&Pwl::identity()).sup() {
        Some(v) => Scalar::Finite(v),
        None => Scalar::PosInfinity,
    };
    let run = EquilibriumRun {
        instance: inst.clone(),
        phases,
        flow,
        labels,
        exit_times,
        particles,
        steady,
        diverging,
        social_cost,
    };
    Ok(run)
}

/// σ of the computed equilibrium; `PosInfinity` without a source–sink path.
pub fn social_cost_ne(inst: &Instance) -> Result<Scalar> {
    social_cost_ne_with(inst, &EngineOptions::default())
}

pub fn social_cost_ne_with(inst: &Instance, opts: &EngineOptions) -> Result<Scalar> {
    match nash_flow_with(inst, opts) {
        Ok(run) => Ok(run.social_cost),
        Err(Error::NoPath) => Ok(Scalar::PosInfinity),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseJson {
    pub start: String,
    pub end: Option<String>,
    pub tight: Vec<String>,
    pub queued: Vec<String>,
    pub node_rate: BTreeMap<String, String>,
    pub edge_rate: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventJson {
    pub theta: String,
    pub trigger: Trigger,
    pub edge: String,
    pub tail_time: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub steady: bool,
    pub diverging: bool,
    pub social_cost: Scalar,
    pub caveat: String,
    pub phases: Vec<PhaseJson>,
    pub events: Vec<EventJson>,
    pub labels: BTreeMap<String, PwlJson>,
    /// Queue length `z_e(ϑ) = F⁺_e(ϑ) − F⁻_e(ϑ + τ_e)` in real time.
    pub queues: BTreeMap<String, PwlJson>,
}

impl RunReport {
    pub fn from_run(run: &EquilibriumRun) -> Self {
        let net = run.instance.network();
        let edge_id = |e: usize| net.edges()[e].id.clone();
        let phases = run
            .phases
            .iter()
            .map(|p| {
                let m = net.edge_count();
                PhaseJson {
                    start: format_rational(&p.start),
                    end: p.end.as_ref().map(format_rational),
                    tight: (0..m).filter(|&e| p.active[e]).map(edge_id).collect(),
                    queued: (0..m).filter(|&e| p.resetting[e]).map(edge_id).collect(),
                    node_rate: p
                        .node_rate
                        .iter()
                        .enumerate()
                        .filter_map(|(v, r)| r.as_ref().map(|r| (net.nodes()[v].clone(), format_rational(r))))
                        .collect(),
                    edge_rate: (0..m)
                        .filter(|&e| p.active[e])
                        .map(|e| (edge_id(e), format_rational(&p.edge_rate[e])))
                        .collect(),
                }
            })
            .collect();
        let events = run
            .events()
            .map(|ev| EventJson {
                theta: format_rational(&ev.theta),
                trigger: ev.trigger,
                edge: ev.edge.map(edge_id).unwrap_or_default(),
                tail_time: format_rational(&ev.tail_time),
            })
            .collect();
        let labels = run
            .labels
            .iter()
            .enumerate()
            .filter_map(|(v, l)| l.as_ref().map(|l| (net.nodes()[v].clone(), PwlJson::from(l))))
            .collect();
        let queues = (0..net.edge_count())
            .map(|e| {
                let out = run.flow.outflow[e].shift_arg(run.instance.transit(e)).expect("outflow starts at 0");
                (edge_id(e), PwlJson::from(&run.flow.inflow[e].sub(&out)))
            })
            .collect();
        RunReport {
            queues,
            steady: run.steady,
            diverging: run.diverging,
            social_cost: run.social_cost.clone(),
            caveat: EQUILIBRIUM_CAVEAT.to_string(),
            phases,
            events,
            labels,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Plot series `series,key,x,value`: labels `l_v` over departure time and
/// queue lengths over real time, one row per breakpoint plus one row a unit
/// past the last breakpoint to show the final slope.
pub fn plotdata_csv(report: &RunReport) -> Result<String> {
    let mut out = String::from("series,key,x,value\n");
    let mut emit = |series: &str, key: &str, json: &PwlJson| -> Result<()> {
        let f = Pwl::try_from(json)?;
        let mut xs: Vec<Rational> = f.points().iter().map(|(x, _)| x.clone()).collect();
        xs.push(xs.last().expect("nonempty") + one());
        for x in xs {
            let y = f.eval(&x)?;
            out.push_str(&format!("{series},{key},{},{}\n", format_rational(&x), format_rational(&y)));
        }
        Ok(())
    };
    for (v, l) in &report.labels {
        emit("label", v, l)?;
    }
    for (e, z) in &report.queues {
        emit("queue", e, z)?;
    }
    Ok(out)
}

/// One row per phase attribute: `phase,start,end,kind,key,value`, where
/// `kind` is `node_rate`, `edge_rate`, `tight` or `queued`.
pub fn phases_to_csv(phases: &[PhaseJson]) -> String {
    let mut out = String::from("phase,start,end,kind,key,value\n");
    for (i, p) in phases.iter().enumerate() {
        let end = p.end.clone().unwrap_or_else(|| "inf".into());
        let mut row = |kind: &str, key: &str, value: &str| {
            out.push_str(&format!("{i},{},{end},{kind},{key},{value}\n", p.start));
        };
        for (k, v) in &p.node_rate {
            row("node_rate", k, v);
        }
        for (k, v) in &p.edge_rate {
            row("edge_rate", k, v);
        }
        for k in &p.tight {
            row("tight", k, "");
        }
        for k in &p.queued {
            row("queued", k, "");
        }
    }
    out
}

pub fn phases_from_csv(csv: &str) -> Result<Vec<PhaseJson>> {
    let mut phases: Vec<PhaseJson> = Vec::new();
    for (lineno, line) in csv.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("phase csv line {}: {line}", lineno + 1));
        if cols.len() != 6 {
            return Err(bad());
        }
        let i: usize = cols[0].parse().map_err(|_| bad())?;
        parse_rational(cols[1]).map_err(|_| bad())?;
        if i == phases.len() {
            phases.push(PhaseJson {
                start: cols[1].to_string(),
                end: if cols[2] == "inf" { None } else { Some(cols[2].to_string()) },
                tight: Vec::new(),
                queued: Vec::new(),
                node_rate: BTreeMap::new(),
                edge_rate: BTreeMap::new(),
            });
        } else if i + 1 != phases.len() {
            return Err(bad());
        }
        let p = phases.last_mut().unwrap();
        match cols[3] {
            "node_rate" => {
                p.node_rate.insert(cols[4].to_string(), cols[5].to_string());
            }
            "edge_rate" => {
                p.edge_rate.insert(cols[4].to_string(), cols[5].to_string());
            }
            "tight" => p.tight.push(cols[4].to_string()),
            "queued" => p.queued.push(cols[4].to_string()),
            _ => return Err(bad()),
        }
    }
    Ok(phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{certify_nash, validate_feasible};
    use crate::network::Network;
    use crate::scalar::{int, ratio};

    fn m2() -> Instance {
        let net = Network::from_triples(&[("e1", "v1", "v2"), ("f1", "v1", "v2")], "v1", "v2").unwrap();
        Instance::new(net, vec![int(1), int(2)], vec![int(0), int(1)], int(2)).unwrap()
    }

    #[test]
    fn thin_flow_single_uncongested_edge() {
        let net = Network::from_triples(&[("e", "s", "t")], "s", "t").unwrap();
        let inst = Instance::new(net, vec![int(3)], vec![int(1)], int(2)).unwrap();
        let tf = thin_flow(&inst, &[true], &[false]).unwrap();
        assert_eq!(tf.edge_rate, vec![int(2)]);
        assert_eq!(tf.node_rate[1], Some(int(1)));
    }

    #[test]
    fn thin_flow_m2_phases() {
        let inst = m2();
        let tf = thin_flow(&inst, &[true, false], &[false, false]).unwrap();
        assert_eq!(tf.edge_rate, vec![int(2), int(0)]);
        assert_eq!(tf.node_rate[1], Some(int(2)));
        let tf = thin_flow(&inst, &[true, true], &[true, false]).unwrap();
        assert_eq!(tf.edge_rate, vec![int(1), int(1)]);
        assert_eq!(tf.node_rate[1], Some(int(1)));
    }

    #[test]
    fn m2_run() {
        let inst = m2();
        let run = nash_flow(&inst).unwrap();
        assert_eq!(run.phases.len(), 2);
        let ev: Vec<_> = run.events().collect();
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].theta.clone(), ev[0].trigger, ev[0].edge), (int(1), Trigger::Activation, Some(1)));
        assert!(run.steady && !run.diverging);
        assert_eq!(run.social_cost, Scalar::Finite(int(1)));
        assert_eq!(run.label("v2").unwrap().eval(&ratio(1, 2)).unwrap(), int(1));
        assert_eq!(run.label("v2").unwrap().eval(&int(3)).unwrap(), int(4));
        assert_eq!(run.flow.inflow[0].eval(&int(2)).unwrap(), int(3));
        assert!(validate_feasible(&inst, &run.flow).unwrap().ok);
        assert!(certify_nash(&inst, &run.flow).unwrap().0);
    }

    #[test]
    fn over_capacity_diverges() {
        let net = Network::from_triples(&[("e", "s", "t")], "s", "t").unwrap();
        let inst = Instance::new(net, vec![int(1)], vec![int(1)], int(2)).unwrap();
        let run = nash_flow(&inst).unwrap();
        assert!(run.diverging);
        assert_eq!(run.social_cost, Scalar::PosInfinity);
    }

    #[test]
    fn cyclic_network_is_rejected() {
        let net = Network::from_triples(&[("a", "s", "x"), ("b", "x", "y"), ("c", "y", "x"), ("d", "y", "t")], "s", "t")
            .unwrap();
        let inst = Instance::new(net, vec![int(1); 4], vec![int(1); 4], int(1)).unwrap();
        assert!(matches!(nash_flow(&inst), Err(Error::UnsupportedTopology(_))));
    }

    #[test]
    fn phase_cap_produces_dump() {
        let err = nash_flow_with(&m2(), &EngineOptions { phase_cap: 1, certify: false }).unwrap_err();
        match err {
            Error::PhaseCap { cap, dump } => {
                assert_eq!(cap, 1);
                assert!(dump.contains("phase 0"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phase_csv_round_trip() {
        let report = RunReport::from_run(&nash_flow(&m2()).unwrap());
        let csv = phases_to_csv(&report.phases);
        assert_eq!(phases_from_csv(&csv).unwrap(), report.phases);
    }
}
