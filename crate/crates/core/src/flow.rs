//! Flows over time as cumulative curves on the real timeline.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Instance;
use crate::pwl::{Pwl, PwlJson};
use crate::scalar::{format_rational, parse_rational, zero, Rational};

/// Entry-rate curve of one source–sink path, stored cumulatively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathFlow {
    pub edges: Vec<usize>,
    pub entered: Pwl,
}

/// Per-edge cumulative inflow `F⁺_e` and outflow `F⁻_e`, cumulative sink flow
/// `Γ`, and an optional path decomposition. All curves live on `[0, ∞)` and
/// start at zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowOverTime {
    pub inflow: Vec<Pwl>,
    pub outflow: Vec<Pwl>,
    pub sink: Pwl,
    pub paths: Option<Vec<PathFlow>>,
}

impl FlowOverTime {
    pub fn new(
        inst: &Instance,
        inflow: Vec<Pwl>,
        outflow: Vec<Pwl>,
        sink: Pwl,
        paths: Option<Vec<PathFlow>>,
    ) -> Result<Self> {
        let flow = FlowOverTime { inflow, outflow, sink, paths };
        flow.check_structure(inst)?;
        Ok(flow)
    }

    pub fn zero(inst: &Instance) -> Self {
        let m = inst.network().edge_count();
        let z = Pwl::constant(zero());
        FlowOverTime { inflow: vec![z.clone(); m], outflow: vec![z.clone(); m], sink: z, paths: None }
    }

    /// Shape checks that precede any feasibility condition.
    pub fn check_structure(&self, inst: &Instance) -> Result<()> {
        let net = inst.network();
        let m = net.edge_count();
        if self.inflow.len() != m || self.outflow.len() != m {
            return Err(Error::MalformedFlow("flow must list every edge".into()));
        }
        let check = |f: &Pwl, what: String| -> Result<()> {
            if !f.start().is_zero() {
                return Err(Error::MalformedFlow(format!("{what} does not start at time 0")));
            }
            if !f.points()[0].1.is_zero() {
                return Err(Error::MalformedFlow(format!("{what} is nonzero at time 0")));
            }
            if !f.is_nondecreasing() {
                return Err(Error::MalformedFlow(format!("{what} decreases (negative rate)")));
            }
            Ok(())
        };
        for (k, e) in net.edges().iter().enumerate() {
            check(&self.inflow[k], format!("inflow of {}", e.id))?;
            check(&self.outflow[k], format!("outflow of {}", e.id))?;
        }
        check(&self.sink, "sink curve".into())?;
        if let Some(paths) = &self.paths {
            let mut total = Pwl::constant(zero());
            for p in paths {
                let name = path_name(inst, &p.edges);
                check(&p.entered, format!("path {name}"))?;
                let mut at = net.source_index();
                for &e in &p.edges {
                    if e >= m || net.ends(e).0 != at {
                        return Err(Error::MalformedFlow(format!("path {name} is not a walk from the source")));
                    }
                    at = net.ends(e).1;
                }
                if at != net.sink_index() || p.edges.is_empty() {
                    return Err(Error::MalformedFlow(format!("path {name} does not end at the sink")));
                }
                total = total.add(&p.entered);
            }
            if total != Pwl::affine(inst.supply().clone(), zero()) {
                return Err(Error::MalformedFlow("path entry rates do not sum to the supply".into()));
            }
        }
        Ok(())
    }
}

pub fn path_name(inst: &Instance, edges: &[usize]) -> String {
    let edge_list = inst.network().edges();
    edges
        .iter()
        .map(|&e| edge_list.get(e).map(|x| x.id.as_str()).unwrap_or("?"))
        .collect::<Vec<_>>()
        .join(",")
}

type RateList = Vec<(String, String)>;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EdgeFlowJson {
    pub inflow: RateList,
    pub outflow: RateList,
}

/// Wire form: per edge `(θ_start, rate)` lists, `Γ` as a breakpoint list and
/// an optional map from comma-joined edge ids to entry-rate lists.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FlowJson {
    pub edges: BTreeMap<String, EdgeFlowJson>,
    pub sink: PwlJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<BTreeMap<String, RateList>>,
}

fn rates_json(f: &Pwl) -> RateList {
    f.rates().iter().map(|(a, r)| (format_rational(a), format_rational(r))).collect()
}

fn rates_from_json(list: &RateList, what: &str) -> Result<Pwl> {
    let rates = list
        .iter()
        .map(|(a, r)| Ok((parse_rational(a)?, parse_rational(r)?)))
        .collect::<Result<Vec<(Rational, Rational)>>>()?;
    Pwl::from_rates(&rates).map_err(|e| Error::MalformedFlow(format!("{what}: {e}")))
}

impl FlowJson {
    pub fn from_flow(inst: &Instance, flow: &FlowOverTime) -> Self {
        let edges = inst
            .network()
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                (
                    e.id.clone(),
                    EdgeFlowJson { inflow: rates_json(&flow.inflow[k]), outflow: rates_json(&flow.outflow[k]) },
                )
            })
            .collect();
        let paths = flow.paths.as_ref().map(|ps| {
            ps.iter().map(|p| (path_name(inst, &p.edges), rates_json(&p.entered))).collect()
        });
        FlowJson { edges, sink: PwlJson::from(&flow.sink), paths }
    }

    pub fn to_flow(&self, inst: &Instance) -> Result<FlowOverTime> {
        let net = inst.network();
        let mut inflow = Vec::new();
        let mut outflow = Vec::new();
        for e in net.edges() {
            let ej = self
                .edges
                .get(&e.id)
                .ok_or_else(|| Error::MalformedFlow(format!("edge {} missing from flow", e.id)))?;
            inflow.push(rates_from_json(&ej.inflow, &e.id)?);
            outflow.push(rates_from_json(&ej.outflow, &e.id)?);
        }
        if let Some(extra) = self.edges.keys().find(|id| net.edge_index(id).is_none()) {
            return Err(Error::MalformedFlow(format!("flow mentions unknown edge {extra}")));
        }
        let sink = Pwl::try_from(&self.sink)?;
        let paths = match &self.paths {
            None => None,
            Some(map) => Some(
                map.iter()
                    .map(|(key, rates)| {
                        let edges = key
                            .split(',')
                            .map(|id| {
                                net.edge_index(id.trim())
                                    .ok_or_else(|| Error::MalformedFlow(format!("unknown edge {id} in path")))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok(PathFlow { edges, entered: rates_from_json(rates, key)? })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        FlowOverTime::new(inst, inflow, outflow, sink, paths)
    }
}

pub fn flow_to_json(inst: &Instance, flow: &FlowOverTime) -> String {
    serde_json::to_string_pretty(&FlowJson::from_flow(inst, flow)).expect("serializable")
}

pub fn flow_from_json(inst: &Instance, s: &str) -> Result<FlowOverTime> {
    serde_json::from_str::<FlowJson>(s)?.to_flow(inst)
}

/// `curve,theta,value` rows, one per breakpoint of every cumulative curve.
pub fn flow_to_csv(inst: &Instance, flow: &FlowOverTime) -> String {
    let mut out = String::from("curve,theta,value\n");
    let mut emit = |name: String, f: &Pwl| {
        for (x, y) in f.points() {
            out.push_str(&format!("{name},{},{}\n", format_rational(x), format_rational(y)));
        }
        out.push_str(&format!("{name}:tail_slope,,{}\n", format_rational(f.tail_slope())));
    };
    for (k, e) in inst.network().edges().iter().enumerate() {
        emit(format!("inflow:{}", e.id), &flow.inflow[k]);
        emit(format!("outflow:{}", e.id), &flow.outflow[k]);
    }
    emit("sink".into(), &flow.sink);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Network;
    use crate::scalar::int;

    fn m2() -> Instance {
        let net = Network::from_triples(&[("e1", "v1", "v2"), ("f1", "v1", "v2")], "v1", "v2").unwrap();
        Instance::new(net, vec![int(1), int(2)], vec![int(0), int(1)], int(2)).unwrap()
    }

    #[test]
    fn structure_rejects_nonzero_start() {
        let inst = m2();
        let mut flow = FlowOverTime::zero(&inst);
        flow.inflow[0] = Pwl::affine(int(1), int(1));
        assert!(matches!(flow.check_structure(&inst), Err(Error::MalformedFlow(_))));
    }

    #[test]
    fn structure_rejects_bad_paths() {
        let inst = m2();
        let mut flow = FlowOverTime::zero(&inst);
        flow.paths = Some(vec![PathFlow { edges: vec![0], entered: Pwl::affine(int(1), int(0)) }]);
        // entry rates sum to 1, supply is 2
        assert!(flow.check_structure(&inst).is_err());
        flow.paths = Some(vec![PathFlow { edges: vec![0], entered: Pwl::affine(int(2), int(0)) }]);
        assert!(flow.check_structure(&inst).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let inst = m2();
        let mut flow = FlowOverTime::zero(&inst);
        flow.inflow[0] = Pwl::from_rates(&[(int(0), int(2)), (int(1), int(1))]).unwrap();
        flow.paths = Some(vec![PathFlow { edges: vec![1], entered: Pwl::affine(int(2), int(0)) }]);
        let s = flow_to_json(&inst, &flow);
        assert_eq!(flow_from_json(&inst, &s).unwrap(), flow);
        assert!(flow_to_csv(&inst, &flow).contains("inflow:e1,1/1,2/1"));
    }
}
