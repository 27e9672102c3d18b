//! Directed networks with a designated source and sink, and game instances on them.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub tail: String,
    pub head: String,
}

/// Directed multigraph. Node and edge order is preserved and used as the
/// canonical index order everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    source: String,
    sink: String,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    // per edge: (tail index, head index)
    ends: Vec<(usize, usize)>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(
        nodes: Vec<String>,
        edges: Vec<Edge>,
        source: impl Into<String>,
        sink: impl Into<String>,
    ) -> Result<Self> {
        let (source, sink) = (source.into(), sink.into());
        let mut node_index = HashMap::new();
        for (i, v) in nodes.iter().enumerate() {
            if node_index.insert(v.clone(), i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate node {v}")));
            }
        }
        let mut edge_index = HashMap::new();
        let mut ends = Vec::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), k).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate edge id {}", e.id)));
            }
            let lookup = |v: &str| {
                node_index
                    .get(v)
                    .copied()
                    .ok_or_else(|| Error::InvalidNetwork(format!("edge {} uses unknown node {v}", e.id)))
            };
            let (a, b) = (lookup(&e.tail)?, lookup(&e.head)?);
            if a == b {
                return Err(Error::InvalidNetwork(format!("edge {} is a loop", e.id)));
            }
            ends.push((a, b));
            out_edges[a].push(k);
            in_edges[b].push(k);
        }
        for t in [&source, &sink] {
            if !node_index.contains_key(t) {
                return Err(Error::InvalidNetwork(format!("terminal {t} is not a node")));
            }
        }
        if source == sink {
            return Err(Error::InvalidNetwork("source and sink coincide".into()));
        }
        Ok(Network { nodes, edges, source, sink, node_index, edge_index, ends, out_edges, in_edges })
    }

    /// Convenience builder from `(id, tail, head)` triples; nodes are taken in
    /// order of first appearance, terminals first.
    pub fn from_triples(triples: &[(&str, &str, &str)], source: &str, sink: &str) -> Result<Self> {
        let mut nodes: Vec<String> = Vec::new();
        let mut push = |v: &str| {
            if !nodes.iter().any(|n| n == v) {
                nodes.push(v.to_string());
            }
        };
        push(source);
        for (_, a, b) in triples {
            push(a);
            push(b);
        }
        push(sink);
        let edges = triples
            .iter()
            .map(|(id, a, b)| Edge { id: id.to_string(), tail: a.to_string(), head: b.to_string() })
            .collect();
        Network::new(nodes, edges, source, sink)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn sink(&self) -> &str {
        &self.sink
    }

    pub fn source_index(&self) -> usize {
        self.node_index[&self.source]
    }

    pub fn sink_index(&self) -> usize {
        self.node_index[&self.sink]
    }

    pub fn node_index(&self, v: &str) -> Option<usize> {
        self.node_index.get(v).copied()
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub fn ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    /// Kahn order of all nodes, `None` if there is a directed cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = self.in_edges.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &e in &self.out_edges[v] {
                let w = self.ends[e].1;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Nodes reachable from `from` (including itself) along edges in `allowed`.
    pub fn reachable_from(&self, from: usize, allowed: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.out_edges[v] {
                let w = self.ends[e].1;
                if allowed[e] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Nodes that reach `to` (including itself) along edges in `allowed`.
    pub fn reaching(&self, to: usize, allowed: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![to];
        seen[to] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.in_edges[v] {
                let u = self.ends[e].0;
                if allowed[e] && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Edges lying on some `from`→`to` walk: tail reachable from `from`, head
    /// reaching `to`. On acyclic networks these are exactly the edges of simple
    /// `from`→`to` paths.
    pub fn edges_between(&self, from: usize, to: usize) -> Vec<bool> {
        let all = vec![true; self.edges.len()];
        let fwd = self.reachable_from(from, &all);
        let bwd = self.reaching(to, &all);
        self.ends.iter().map(|&(a, b)| fwd[a] && bwd[b]).collect()
    }

    pub fn st_edges(&self) -> Vec<bool> {
        self.edges_between(self.source_index(), self.sink_index())
    }

    pub fn has_st_path(&self) -> bool {
        let all = vec![true; self.edges.len()];
        self.reachable_from(self.source_index(), &all)[self.sink_index()]
    }

    /// Every edge reversed, terminals swapped.
    pub fn transpose(&self) -> Network {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { id: e.id.clone(), tail: e.head.clone(), head: e.tail.clone() })
            .collect();
        Network::new(self.nodes.clone(), edges, self.sink.clone(), self.source.clone())
            .expect("transpose of a valid network is valid")
    }

    /// Same graph with different terminals.
    pub fn with_terminals(&self, source: &str, sink: &str) -> Result<Network> {
        Network::new(self.nodes.clone(), self.edges.clone(), source, sink)
    }

    /// Sub-network on the kept edges; all nodes and both terminals stay.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Result<Network> {
        for id in keep {
            if !self.edge_index.contains_key(id) {
                return Err(Error::InvalidParameter(format!("edge {id} is not in the network")));
            }
        }
        let edges = self.edges.iter().filter(|e| keep.contains(&e.id)).cloned().collect();
        Network::new(self.nodes.clone(), edges, self.source.clone(), self.sink.clone())
    }
}

/// A game instance: network, capacities, free-flow transit times, constant supply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    network: Network,
    capacity: Vec<Rational>,
    transit: Vec<Rational>,
    supply: Rational,
}

impl Instance {
    /// `capacity` and `transit` are indexed like `network.edges()`.
    pub fn new(
        network: Network,
        capacity: Vec<Rational>,
        transit: Vec<Rational>,
        supply: Rational,
    ) -> Result<Self> {
        let m = network.edge_count();
        if capacity.len() != m || transit.len() != m {
            return Err(Error::InvalidParameter("capacity/transit vectors must cover every edge".into()));
        }
        for (k, e) in network.edges().iter().enumerate() {
            if !capacity[k].is_positive() {
                return Err(Error::InvalidParameter(format!("capacity of {} must be positive", e.id)));
            }
            if transit[k].is_negative() {
                return Err(Error::InvalidParameter(format!("transit time of {} must be nonnegative", e.id)));
            }
        }
        if !supply.is_positive() {
            return Err(Error::InvalidParameter("supply must be positive".into()));
        }
        Ok(Instance { network, capacity, transit, supply })
    }

    /// Builder keyed by edge id.
    pub fn from_maps(
        network: Network,
        capacity: &BTreeMap<String, Rational>,
        transit: &BTreeMap<String, Rational>,
        supply: Rational,
    ) -> Result<Self> {
        let get = |map: &BTreeMap<String, Rational>, id: &str, what: &str| {
            map.get(id)
                .cloned()
                .ok_or_else(|| Error::InvalidParameter(format!("missing {what} for edge {id}")))
        };
        let mut cap = Vec::new();
        let mut tau = Vec::new();
        for e in network.edges() {
            cap.push(get(capacity, &e.id, "capacity")?);
            tau.push(get(transit, &e.id, "transit")?);
        }
        Instance::new(network, cap, tau, supply)
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn capacity(&self, e: usize) -> &Rational {
        &self.capacity[e]
    }

    pub fn transit(&self, e: usize) -> &Rational {
        &self.transit[e]
    }

    pub fn capacities(&self) -> &[Rational] {
        &self.capacity
    }

    pub fn transits(&self) -> &[Rational] {
        &self.transit
    }

    pub fn supply(&self) -> &Rational {
        &self.supply
    }

    pub fn capacity_of(&self, id: &str) -> Option<&Rational> {
        self.network.edge_index(id).map(|k| &self.capacity[k])
    }

    pub fn transit_of(&self, id: &str) -> Option<&Rational> {
        self.network.edge_index(id).map(|k| &self.transit[k])
    }

    pub fn with_supply(&self, supply: Rational) -> Result<Instance> {
        Instance::new(self.network.clone(), self.capacity.clone(), self.transit.clone(), supply)
    }

    pub fn transpose(&self) -> Instance {
        Instance {
            network: self.network.transpose(),
            capacity: self.capacity.clone(),
            transit: self.transit.clone(),
            supply: self.supply.clone(),
        }
    }

    pub fn restrict(&self, keep: &BTreeSet<String>) -> Result<Instance> {
        let network = self.network.restrict(keep)?;
        let pick = |v: &[Rational]| {
            self.network
                .edges()
                .iter()
                .zip(v)
                .filter(|(e, _)| keep.contains(&e.id))
                .map(|(_, q)| q.clone())
                .collect::<Vec<_>>()
        };
        Ok(Instance {
            network,
            capacity: pick(&self.capacity),
            transit: pick(&self.transit),
            supply: self.supply.clone(),
        })
    }

    pub fn edge_ids(&self) -> BTreeSet<String> {
        self.network.edges().iter().map(|e| e.id.clone()).collect()
    }

    /// Minimum `s`–`t` cut capacity (max static flow value), by augmenting
    /// paths over exact rationals.
    pub fn max_static_flow(&self) -> Rational {
        let net = &self.network;
        let n = net.node_count();
        let (s, t) = (net.source_index(), net.sink_index());
        let m = net.edge_count();
        let mut flow = vec![Rational::zero(); m];
        let mut total = Rational::zero();
        loop {
            // BFS in the residual graph; entries are (edge, forward?)
            let mut pred: Vec<Option<(usize, bool)>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &e in net.out_edges(v) {
                    let w = net.ends(e).1;
                    if !seen[w] && flow[e] < self.capacity[e] {
                        seen[w] = true;
                        pred[w] = Some((e, true));
                        queue.push_back(w);
                    }
                }
                for &e in net.in_edges(v) {
                    let u = net.ends(e).0;
                    if !seen[u] && flow[e].is_positive() {
                        seen[u] = true;
                        pred[u] = Some((e, false));
                        queue.push_back(u);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut path = Vec::new();
            let mut v = t;
            while v != s {
                let (e, fwd) = pred[v].unwrap();
                path.push((e, fwd));
                v = if fwd { net.ends(e).0 } else { net.ends(e).1 };
            }
            let bottleneck = path
                .iter()
                .map(|&(e, fwd)| if fwd { &self.capacity[e] - &flow[e] } else { flow[e].clone() })
                .min()
                .unwrap();
            for (e, fwd) in path {
                if fwd {
                    flow[e] += &bottleneck;
                } else {
                    flow[e] -= &bottleneck;
                }
            }
            total += bottleneck;
        }
    }
}

// ---- JSON interchange -------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EdgeJson {
    pub id: String,
    pub tail: String,
    pub head: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transit: Option<String>,
}

/// `{"nodes":[...], "edges":[{"id","tail","head","capacity","transit"}], "source", "sink", "supply"}`.
/// Networks omit the capacity, transit and supply fields.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct InstanceJson {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeJson>,
    pub source: String,
    pub sink: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply: Option<String>,
}

impl From<&Network> for InstanceJson {
    fn from(net: &Network) -> Self {
        InstanceJson {
            nodes: net.nodes.clone(),
            edges: net
                .edges
                .iter()
                .map(|e| EdgeJson {
                    id: e.id.clone(),
                    tail: e.tail.clone(),
                    head: e.head.clone(),
                    capacity: None,
                    transit: None,
                })
                .collect(),
            source: net.source.clone(),
            sink: net.sink.clone(),
            supply: None,
        }
    }
}

impl From<&Instance> for InstanceJson {
    fn from(inst: &Instance) -> Self {
        let mut j = InstanceJson::from(&inst.network);
        for (k, e) in j.edges.iter_mut().enumerate() {
            e.capacity = Some(format_rational(&inst.capacity[k]));
            e.transit = Some(format_rational(&inst.transit[k]));
        }
        j.supply = Some(format_rational(&inst.supply));
        j
    }
}

impl InstanceJson {
    pub fn to_network(&self) -> Result<Network> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { id: e.id.clone(), tail: e.tail.clone(), head: e.head.clone() })
            .collect();
        Network::new(self.nodes.clone(), edges, self.source.clone(), self.sink.clone())
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let network = self.to_network()?;
        let field = |v: &Option<String>, what: &str, id: &str| {
            v.as_deref()
                .ok_or_else(|| Error::Parse(format!("edge {id} has no {what}")))
                .and_then(parse_rational)
        };
        let mut cap = Vec::new();
        let mut tau = Vec::new();
        for e in &self.edges {
            cap.push(field(&e.capacity, "capacity", &e.id)?);
            tau.push(field(&e.transit, "transit", &e.id)?);
        }
        let supply = self
            .supply
            .as_deref()
            .ok_or_else(|| Error::Parse("instance has no supply".into()))
            .and_then(parse_rational)?;
        Instance::new(network, cap, tau, supply)
    }
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceJson::from(inst)).expect("serializable")
}

pub fn instance_from_json(s: &str) -> Result<Instance> {
    serde_json::from_str::<InstanceJson>(s)?.to_instance()
}

pub fn network_to_json(net: &Network) -> String {
    serde_json::to_string_pretty(&InstanceJson::from(net)).expect("serializable")
}

pub fn network_from_json(s: &str) -> Result<Network> {
    serde_json::from_str::<InstanceJson>(s)?.to_network()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn single_edge() -> Instance {
        let net = Network::from_triples(&[("e", "s", "t")], "s", "t").unwrap();
        Instance::new(net, vec![int(2)], vec![int(1)], int(1)).unwrap()
    }

    #[test]
    fn rejects_bad_networks() {
        assert!(Network::from_triples(&[("e", "s", "t"), ("e", "t", "s")], "s", "t").is_err());
        assert!(Network::from_triples(&[("e", "s", "t")], "s", "s").is_err());
        assert!(Network::from_triples(&[("e", "s", "s")], "s", "t").is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let net = Network::from_triples(&[("e", "s", "t")], "s", "t").unwrap();
        assert!(Instance::new(net.clone(), vec![int(0)], vec![int(1)], int(1)).is_err());
        assert!(Instance::new(net.clone(), vec![int(1)], vec![int(-1)], int(1)).is_err());
        assert!(Instance::new(net, vec![int(1)], vec![int(1)], int(0)).is_err());
    }

    #[test]
    fn transpose_single_edge_is_involution() {
        let inst = single_edge();
        let t = inst.transpose();
        assert_eq!(t.network().source(), "t");
        assert_eq!(t.network().edges()[0].tail, "t");
        assert_eq!(t.transpose(), inst);
    }

    #[test]
    fn restrict_everything_is_identity() {
        let inst = single_edge();
        assert_eq!(inst.restrict(&inst.edge_ids()).unwrap(), inst);
        let empty = inst.restrict(&BTreeSet::new()).unwrap();
        assert!(!empty.network().has_st_path());
        assert!(inst.restrict(&BTreeSet::from(["zz".to_string()])).is_err());
    }

    #[test]
    fn max_flow_of_parallel_links() {
        let net = Network::from_triples(&[("a", "s", "t"), ("b", "s", "x"), ("c", "x", "t")], "s", "t")
            .unwrap();
        let inst = Instance::new(net, vec![ratio(1, 2), int(3), int(2)], vec![int(0); 3], int(1)).unwrap();
        assert_eq!(inst.max_static_flow(), ratio(5, 2));
    }

    #[test]
    fn json_round_trip() {
        let inst = single_edge();
        let s = instance_to_json(&inst);
        assert!(s.contains("\"capacity\": \"2/1\""));
        assert_eq!(instance_from_json(&s).unwrap(), inst);
        let net = network_from_json(&network_to_json(inst.network())).unwrap();
        assert_eq!(&net, inst.network());
        assert!(instance_from_json(&network_to_json(inst.network())).is_err());
    }
}
