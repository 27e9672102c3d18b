//! Queue dynamics of a given flow over time: waiting times, earliest arrival
//! labels, feasibility checks, Nash certification and social cost.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{path_name, FlowOverTime};
use crate::network::Instance;
use crate::pwl::Pwl;
use crate::scalar::{format_rational, int, one, zero, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Capacity,
    LinkConservation,
    NodeConservation,
    QueueDiscipline,
    ShortestPaths,
    NoOvertaking,
}

/// One failed check with a witness time and the two sides that disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(with = "crate::scalar::rational_str")]
    pub theta: Rational,
    #[serde(with = "crate::scalar::rational_str")]
    pub lhs: Rational,
    #[serde(with = "crate::scalar::rational_str")]
    pub rhs: Rational,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ViolationReport { ok: violations.is_empty(), violations }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Earliest arrival label of a node as a function of source departure time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Label {
    Reached(Pwl),
    Unreachable,
}

impl Label {
    pub fn function(&self) -> Option<&Pwl> {
        match self {
            Label::Reached(f) => Some(f),
            Label::Unreachable => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    nodes: Vec<String>,
    labels: Vec<Label>,
}

impl Labels {
    pub fn get(&self, v: &str) -> Option<&Label> {
        self.nodes.iter().position(|n| n == v).map(|i| &self.labels[i])
    }

    pub fn by_index(&self, v: usize) -> &Label {
        &self.labels[v]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Label)> {
        self.nodes.iter().map(|s| s.as_str()).zip(&self.labels)
    }
}

/// `w_e` as a function of the entry time.
pub fn waiting_time_fn(inst: &Instance, flow: &FlowOverTime, e: usize) -> Result<Pwl> {
    let shifted = flow.outflow[e].shift_arg(inst.transit(e))?;
    Ok(flow.inflow[e].sub(&shifted).scale(&(one() / inst.capacity(e))))
}

pub fn waiting_time(inst: &Instance, flow: &FlowOverTime, edge: &str, theta: &Rational) -> Result<Rational> {
    let e = edge_index(inst, edge)?;
    waiting_time_fn(inst, flow, e)?.eval(theta)
}

/// Exit time `ϑ + w_e(ϑ) + τ_e` of a particle entering `e` at `ϑ`.
pub fn exit_time_fn(inst: &Instance, flow: &FlowOverTime, e: usize) -> Result<Pwl> {
    Ok(waiting_time_fn(inst, flow, e)?.add(&Pwl::identity()).add_const(inst.transit(e)))
}

fn edge_index(inst: &Instance, edge: &str) -> Result<usize> {
    inst.network().edge_index(edge).ok_or_else(|| Error::InvalidParameter(format!("unknown edge {edge}")))
}

/// Earliest arrival labels `l_v` for every node. Requires an acyclic network.
pub fn labels(inst: &Instance, flow: &FlowOverTime) -> Result<Labels> {
    let net = inst.network();
    let order = net
        .topological_order()
        .ok_or_else(|| Error::UnsupportedTopology("labels need an acyclic network".into()))?;
    let exits = (0..net.edge_count()).map(|e| exit_time_fn(inst, flow, e)).collect::<Result<Vec<_>>>()?;
    let mut labels = vec![Label::Unreachable; net.node_count()];
    let s = net.source_index();
    labels[s] = Label::Reached(Pwl::identity());
    for &w in &order {
        if w == s {
            continue;
        }
        let mut best: Option<Pwl> = None;
        for &e in net.in_edges(w) {
            let Label::Reached(lv) = &labels[net.ends(e).0] else { continue };
            let via = exits[e].compose_any(lv)?;
            best = Some(match best {
                None => via,
                Some(b) => b.min(&via),
            });
        }
        if let Some(b) = best {
            labels[w] = Label::Reached(b);
        }
    }
    Ok(Labels { nodes: net.nodes().to_vec(), labels })
}

pub fn node_latency(inst: &Instance, flow: &FlowOverTime, v: &str, theta: &Rational) -> Result<Scalar> {
    let ls = labels(inst, flow)?;
    match ls.get(v) {
        None => Err(Error::InvalidParameter(format!("unknown node {v}"))),
        Some(Label::Unreachable) => Ok(Scalar::PosInfinity),
        Some(Label::Reached(f)) => Ok(Scalar::Finite(f.eval(theta)?)),
    }
}

/// Sorted union of the breakpoints of all `fs`, always containing 0.
fn grid(fs: &[&Pwl]) -> Vec<Rational> {
    let mut xs: Vec<Rational> = fs.iter().flat_map(|f| f.breakpoints().cloned()).collect();
    xs.push(zero());
    xs.sort();
    xs.dedup();
    xs
}

/// One interior point per linear piece of the common refinement, including
/// a point on the final unbounded piece.
fn probes(xs: &[Rational]) -> Vec<Rational> {
    let mut out: Vec<Rational> = xs.windows(2).map(|w| (&w[0] + &w[1]) / int(2)).collect();
    out.push(xs.last().unwrap() + one());
    out
}

/// First time where `f` and `g` differ, with both values.
fn first_difference(f: &Pwl, g: &Pwl) -> Option<(Rational, Rational, Rational)> {
    let d = f.sub(g);
    let at = |x: &Rational| (x.clone(), f.eval(x).unwrap(), g.eval(x).unwrap());
    if let Some((x, _)) = d.points().iter().find(|(_, v)| !v.is_zero()) {
        return Some(at(x));
    }
    if !d.tail_slope().is_zero() {
        return Some(at(&(d.last_breakpoint() + one())));
    }
    None
}

fn violation(
    condition: Condition,
    edge: Option<&str>,
    node: Option<&str>,
    (theta, lhs, rhs): (Rational, Rational, Rational),
    message: impl Into<String>,
) -> Violation {
    Violation {
        condition,
        edge: edge.map(str::to_owned),
        node: node.map(str::to_owned),
        theta,
        lhs,
        rhs,
        message: message.into(),
    }
}

/// Checks capacity, link conservation, node conservation and the queue
/// discipline exactly, as identities of piecewise-linear functions.
pub fn validate_feasible(inst: &Instance, flow: &FlowOverTime) -> Result<ViolationReport> {
    flow.check_structure(inst)?;
    let net = inst.network();
    let mut out = Vec::new();
    for (k, edge) in net.edges().iter().enumerate() {
        let id = Some(edge.id.as_str());
        let c = inst.capacity(k);
        for (a, _, slope) in flow.outflow[k].segments() {
            if slope > *c {
                out.push(violation(Condition::Capacity, id, None, (a, slope, c.clone()), "outflow rate exceeds capacity"));
                break;
            }
        }

        let w = waiting_time_fn(inst, flow, k)?;
        let mut queue_ok = true;
        if let Some((x, v)) = w.points().iter().find(|(_, v)| v.is_negative()) {
            out.push(violation(Condition::QueueDiscipline, id, None, (x.clone(), v.clone(), zero()), "negative queue"));
            queue_ok = false;
        } else if w.tail_slope().is_negative() {
            let last = w.last_breakpoint();
            let x = last + w.eval(last)? / -w.tail_slope() + one();
            let v = w.eval(&x)?;
            out.push(violation(Condition::QueueDiscipline, id, None, (x, v, zero()), "negative queue"));
            queue_ok = false;
        }
        if queue_ok {
            let exit = exit_time_fn(inst, flow, k)?;
            let through = flow.outflow[k].compose_any(&exit)?;
            if let Some(wit) = first_difference(&flow.inflow[k], &through) {
                out.push(violation(
                    Condition::LinkConservation,
                    id,
                    None,
                    wit,
                    "inflow differs from outflow at the exit time",
                ));
            }
            let shifted = flow.outflow[k].shift_arg(inst.transit(k))?;
            for m in probes(&grid(&[&w, &shifted])) {
                if w.eval(&m)?.is_positive() {
                    let rate = shifted.slope_right(&m)?;
                    if rate != *c {
                        out.push(violation(
                            Condition::QueueDiscipline,
                            id,
                            None,
                            (m, rate, c.clone()),
                            "queue is nonempty but the edge does not discharge at capacity",
                        ));
                        break;
                    }
                }
            }
        }
    }

    let d = inst.supply();
    for v in 0..net.node_count() {
        let mut balance = Pwl::constant(zero());
        for &e in net.in_edges(v) {
            balance = balance.add(&flow.outflow[e]);
        }
        for &e in net.out_edges(v) {
            balance = balance.sub(&flow.inflow[e]);
        }
        let expected = if v == net.source_index() {
            Pwl::affine(-d.clone(), zero())
        } else if v == net.sink_index() {
            flow.sink.clone()
        } else {
            Pwl::constant(zero())
        };
        if let Some(wit) = first_difference(&balance, &expected) {
            out.push(violation(
                Condition::NodeConservation,
                None,
                Some(&net.nodes()[v]),
                wit,
                "cumulative balance does not match",
            ));
        }
    }
    Ok(ViolationReport::from_violations(out))
}

/// Nash certificate: every used edge lies on a current shortest path, and
/// the sink receives flow in departure order. The two criteria coincide for
/// feasible flows; a disagreement is reported as an internal error.
pub fn certify_nash(inst: &Instance, flow: &FlowOverTime) -> Result<(bool, ViolationReport)> {
    let feasible = validate_feasible(inst, flow)?;
    if !feasible.ok {
        return Ok((false, feasible));
    }
    let net = inst.network();
    let ls = labels(inst, flow)?;
    let Label::Reached(lt) = ls.by_index(net.sink_index()) else {
        return Err(Error::NoPath);
    };

    let mut shortest = Vec::new();
    for (k, edge) in net.edges().iter().enumerate() {
        let (v, w) = net.ends(k);
        let (Label::Reached(lv), Label::Reached(lw)) = (ls.by_index(v), ls.by_index(w)) else { continue };
        let via = exit_time_fn(inst, flow, k)?.compose_any(lv)?;
        let entered = flow.inflow[k].compose(lv)?;
        for m in probes(&grid(&[&via, lw, &entered])) {
            let (a, b) = (via.eval(&m)?, lw.eval(&m)?);
            if a > b && entered.slope_right(&m)?.is_positive() {
                shortest.push(violation(
                    Condition::ShortestPaths,
                    Some(&edge.id),
                    None,
                    (m, b, a),
                    "flow enters an edge that is not on a shortest path",
                ));
                break;
            }
        }
    }

    let mut overtaking = Vec::new();
    let arrived = flow.sink.compose(lt)?;
    let target = Pwl::affine(inst.supply().clone(), zero());
    if let Some(wit) = first_difference(&arrived, &target) {
        overtaking.push(violation(
            Condition::NoOvertaking,
            None,
            Some(net.sink()),
            wit,
            "sink arrivals are not in departure order",
        ));
    }
    if shortest.is_empty() != overtaking.is_empty() {
        return Err(Error::Internal(format!(
            "Nash criteria disagree: {} shortest-path violations, {} overtaking violations",
            shortest.len(),
            overtaking.len()
        )));
    }
    shortest.extend(overtaking);
    let report = ViolationReport::from_violations(shortest);
    Ok((report.ok, report))
}

/// Latency `Ψ_p(θ)` of a path for a particle leaving the source at `θ`.
pub fn path_latency(inst: &Instance, flow: &FlowOverTime, path: &[usize]) -> Result<Pwl> {
    let mut clock = Pwl::identity();
    for &e in path {
        clock = exit_time_fn(inst, flow, e)?.compose_any(&clock)?;
    }
    Ok(clock.sub(&Pwl::identity()))
}

/// Largest latency experienced by any particle. With a path decomposition
/// this is the supremum over used paths; otherwise the flow must be Nash and
/// the value is the supremum of `l_t(θ) − θ`.
pub fn social_cost(inst: &Instance, flow: &FlowOverTime) -> Result<Scalar> {
    flow.check_structure(inst)?;
    if let Some(paths) = &flow.paths {
        let mut best: Option<Rational> = None;
        for p in paths {
            let psi = path_latency(inst, flow, &p.edges)?;
            let xs = grid(&[&psi, &p.entered]);
            for (i, a) in xs.iter().enumerate() {
                if !p.entered.slope_right(a)?.is_positive() {
                    continue;
                }
                let hi = match xs.get(i + 1) {
                    Some(b) => std::cmp::max(psi.eval(a)?, psi.eval(b)?),
                    None if psi.tail_slope().is_positive() => return Ok(Scalar::PosInfinity),
                    None => psi.eval(a)?,
                };
                if best.as_ref().is_none_or(|b| hi > *b) {
                    best = Some(hi);
                }
            }
        }
        return best.map(Scalar::Finite).ok_or_else(|| {
            Error::MalformedFlow(format!("no path carries flow ({})", paths.iter().map(|p| path_name(inst, &p.edges)).collect::<Vec<_>>().join("; ")))
        });
    }
    let (nash, report) = certify_nash(inst, flow)?;
    if !nash {
        let first = report.violations.first().map(|v| v.message.clone()).unwrap_or_default();
        return Err(Error::Contract(format!(
            "social cost without a path decomposition needs a Nash flow ({first})"
        )));
    }
    let ls = labels(inst, flow)?;
    let Label::Reached(lt) = ls.by_index(inst.network().sink_index()) else {
        return Err(Error::NoPath);
    };
    Ok(match lt.sub(&Pwl::identity()).sup() {
        Some(v) => Scalar::Finite(v),
        None => Scalar::PosInfinity,
    })
}

/// `θ,label` rows for every reached node.
pub fn labels_to_csv(ls: &Labels) -> String {
    let mut out = String::from("node,theta,value\n");
    for (v, l) in ls.iter() {
        if let Label::Reached(f) = l {
            for (x, y) in f.points() {
                out.push_str(&format!("{v},{},{}\n", format_rational(x), format_rational(y)));
            }
            out.push_str(&format!("{v}:tail_slope,,{}\n", format_rational(f.tail_slope())));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::PathFlow;
    use crate::network::Network;

    fn rates(r: &[(i64, i64)]) -> Pwl {
        Pwl::from_rates(&r.iter().map(|&(a, b)| (int(a), int(b))).collect::<Vec<_>>()).unwrap()
    }

    /// Single edge, τ = 1, c = 1, supply 2: the queue grows at rate 1.
    fn single() -> (Instance, FlowOverTime) {
        let net = Network::from_triples(&[("e", "s", "t")], "s", "t").unwrap();
        let inst = Instance::new(net, vec![int(1)], vec![int(1)], int(2)).unwrap();
        let inflow = rates(&[(0, 2)]);
        let outflow = rates(&[(0, 0), (1, 1)]);
        let flow = FlowOverTime::new(&inst, vec![inflow], vec![outflow.clone()], outflow, None).unwrap();
        (inst, flow)
    }

    #[test]
    fn waiting_time_single_edge() {
        let (inst, flow) = single();
        assert_eq!(waiting_time(&inst, &flow, "e", &int(3)).unwrap(), int(3));
        let ls = labels(&inst, &flow).unwrap();
        let lt = ls.get("t").unwrap().function().unwrap();
        assert_eq!(lt, &Pwl::affine(int(2), int(1)));
    }

    #[test]
    fn single_edge_is_feasible_and_nash() {
        let (inst, flow) = single();
        assert!(validate_feasible(&inst, &flow).unwrap().ok);
        assert!(certify_nash(&inst, &flow).unwrap().0);
        assert_eq!(social_cost(&inst, &flow).unwrap(), Scalar::PosInfinity);
    }

    #[test]
    fn capacity_violation_has_witness() {
        let (inst, mut flow) = single();
        flow.outflow[0] = rates(&[(0, 0), (1, 2)]);
        flow.sink = flow.outflow[0].clone();
        let report = validate_feasible(&inst, &flow).unwrap();
        let v = report.violations.iter().find(|v| v.condition == Condition::Capacity).unwrap();
        assert_eq!((v.theta.clone(), v.lhs.clone(), v.rhs.clone()), (int(1), int(2), int(1)));
    }

    #[test]
    fn idle_edge_with_queue_breaks_discipline() {
        let (inst, mut flow) = single();
        flow.outflow[0] = rates(&[(0, 0), (1, 1), (2, 0), (3, 1)]);
        flow.sink = flow.outflow[0].clone();
        let report = validate_feasible(&inst, &flow).unwrap();
        assert!(report.violations.iter().any(|v| v.condition == Condition::QueueDiscipline));
    }

    #[test]
    fn path_based_cost_on_parallel_links() {
        // e: τ 0, c 1; f: τ 1, c 1; supply 2 split evenly, no queues
        let net = Network::from_triples(&[("e", "s", "t"), ("f", "s", "t")], "s", "t").unwrap();
        let inst = Instance::new(net, vec![int(1), int(1)], vec![int(0), int(1)], int(2)).unwrap();
        let mut flow = FlowOverTime::new(
            &inst,
            vec![rates(&[(0, 1)]), rates(&[(0, 1)])],
            vec![rates(&[(0, 1)]), rates(&[(0, 0), (1, 1)])],
            rates(&[(0, 1), (1, 2)]),
            None,
        )
        .unwrap();
        assert!(validate_feasible(&inst, &flow).unwrap().ok);
        let (nash, report) = certify_nash(&inst, &flow).unwrap();
        assert!(!nash);
        assert!(report.violations.iter().any(|v| v.condition == Condition::ShortestPaths));
        flow.paths = Some(vec![
            PathFlow { edges: vec![0], entered: rates(&[(0, 1)]) },
            PathFlow { edges: vec![1], entered: rates(&[(0, 1)]) },
        ]);
        assert_eq!(social_cost(&inst, &flow).unwrap(), Scalar::Finite(int(1)));
        assert!(social_cost(&inst, &FlowOverTime { paths: None, ..flow.clone() }).is_err());
    }
}
