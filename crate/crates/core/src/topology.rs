//! Structural classification of networks: fixed-pattern topological minors,
//! unions of paths between node pairs, series-parallel reduction and link
//! smoothing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Edge, Instance, Network};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternId {
    M3,
    M3T,
    M3Prime,
    M3DoublePrime,
    Wheatstone,
}

impl PatternId {
    pub const ALL: [PatternId; 5] =
        [PatternId::M3, PatternId::M3T, PatternId::M3Prime, PatternId::M3DoublePrime, PatternId::Wheatstone];

    /// The four patterns whose absence characterises networks that use only
    /// chains of parallel paths.
    pub const CHAIN_OBSTRUCTIONS: [PatternId; 4] =
        [PatternId::M3, PatternId::M3T, PatternId::M3Prime, PatternId::M3DoublePrime];

    pub fn name(self) -> &'static str {
        match self {
            PatternId::M3 => "M3",
            PatternId::M3T => "M3T",
            PatternId::M3Prime => "M3Prime",
            PatternId::M3DoublePrime => "M3DoublePrime",
            PatternId::Wheatstone => "Wheatstone",
        }
    }

    pub fn network(self) -> Network {
        let triples: &[(&str, &str, &str)] = match self {
            PatternId::M3 => &[("e1", "s", "x"), ("e2", "x", "t"), ("f1", "s", "t"), ("f2", "x", "t")],
            PatternId::M3T => &[("e1", "x", "s"), ("e2", "t", "x"), ("f1", "t", "s"), ("f2", "t", "x")],
            PatternId::M3Prime => {
                &[("e1", "s", "x"), ("e2", "x", "y"), ("g", "y", "t"), ("f1", "s", "t"), ("f2", "x", "y")]
            }
            PatternId::M3DoublePrime => {
                &[("e1", "s", "x"), ("e2", "x", "t"), ("f1", "s", "b"), ("g", "b", "t"), ("f2", "x", "b")]
            }
            PatternId::Wheatstone => {
                &[("sa", "s", "a"), ("sb", "s", "b"), ("ab", "a", "b"), ("at", "a", "t"), ("bt", "b", "t")]
            }
        };
        let (s, t) = if self == PatternId::M3T { ("t", "s") } else { ("s", "t") };
        Network::from_triples(triples, s, t).expect("fixed pattern")
    }

    pub fn transpose(self) -> Option<PatternId> {
        match self {
            PatternId::M3 => Some(PatternId::M3T),
            PatternId::M3T => Some(PatternId::M3),
            // both variants are isomorphic to their transposes
            PatternId::M3Prime | PatternId::M3DoublePrime => Some(self),
            PatternId::Wheatstone => Some(self),
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "m3" => PatternId::M3,
            "m3t" => PatternId::M3T,
            "m3prime" => PatternId::M3Prime,
            "m3doubleprime" => PatternId::M3DoublePrime,
            "wheatstone" => PatternId::Wheatstone,
            _ => return Err(Error::Parse(format!("unknown pattern {s}"))),
        })
    }
}

/// Witness of a subdivision of a pattern inside a host: branch vertices and
/// one host path per pattern edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub pattern: PatternId,
    pub branch: BTreeMap<String, String>,
    pub paths: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Copy, Debug)]
pub struct SizeCap {
    pub nodes: usize,
    pub edges: usize,
}

impl Default for SizeCap {
    fn default() -> Self {
        SizeCap { nodes: 15, edges: 25 }
    }
}

fn check_cap(host: &Network, cap: SizeCap) -> Result<()> {
    if host.node_count() > cap.nodes || host.edge_count() > cap.edges {
        return Err(Error::SizeCap(format!(
            "host has {} nodes and {} edges, the search is limited to {} and {}",
            host.node_count(),
            host.edge_count(),
            cap.nodes,
            cap.edges
        )));
    }
    Ok(())
}

/// `reach[a][b]`: `b` is reachable from `a` (reflexive).
fn reachability(net: &Network) -> Vec<Vec<bool>> {
    let all = vec![true; net.edge_count()];
    (0..net.node_count()).map(|v| net.reachable_from(v, &all)).collect()
}

struct MinorSearch<'a> {
    host: &'a Network,
    pat: &'a Network,
    reach: Vec<Vec<bool>>,
    node_order: Vec<usize>,
    edge_order: Vec<usize>,
    branch: Vec<Option<usize>>,
    is_branch: Vec<bool>,
    used_node: Vec<bool>,
    used_edge: Vec<bool>,
    paths: Vec<Vec<usize>>,
}

impl MinorSearch<'_> {
    fn assign(&mut self, i: usize) -> bool {
        if i == self.node_order.len() {
            return self.route(0);
        }
        let p = self.node_order[i];
        let (pout, pin) = (self.pat.out_edges(p).len(), self.pat.in_edges(p).len());
        for h in 0..self.host.node_count() {
            if self.is_branch[h] || self.host.out_edges(h).len() < pout || self.host.in_edges(h).len() < pin {
                continue;
            }
            self.branch[p] = Some(h);
            self.is_branch[h] = true;
            if self.consistent(p) && self.assign(i + 1) {
                return true;
            }
            self.branch[p] = None;
            self.is_branch[h] = false;
        }
        false
    }

    /// Every pattern edge between assigned branch vertices must be realisable.
    fn consistent(&self, p: usize) -> bool {
        self.pat.out_edges(p).iter().chain(self.pat.in_edges(p)).all(|&e| {
            let (a, b) = self.pat.ends(e);
            match (self.branch[a], self.branch[b]) {
                (Some(x), Some(y)) => self.reach[x][y],
                _ => true,
            }
        })
    }

    fn route(&mut self, k: usize) -> bool {
        if k == self.edge_order.len() {
            return true;
        }
        let e = self.edge_order[k];
        let (a, b) = self.pat.ends(e);
        let (from, to) = (self.branch[a].unwrap(), self.branch[b].unwrap());
        let mut path = Vec::new();
        self.extend(k, from, to, &mut path)
    }

    fn extend(&mut self, k: usize, at: usize, to: usize, path: &mut Vec<usize>) -> bool {
        for &he in self.host.out_edges(at) {
            if self.used_edge[he] {
                continue;
            }
            let next = self.host.ends(he).1;
            if next == to {
                self.used_edge[he] = true;
                path.push(he);
                self.paths[self.edge_order[k]] = path.clone();
                if self.route(k + 1) {
                    return true;
                }
                path.pop();
                self.used_edge[he] = false;
                continue;
            }
            if self.is_branch[next] || self.used_node[next] || !self.reach[next][to] {
                continue;
            }
            self.used_edge[he] = true;
            self.used_node[next] = true;
            path.push(he);
            if self.extend(k, next, to, path) {
                return true;
            }
            path.pop();
            self.used_node[next] = false;
            self.used_edge[he] = false;
        }
        false
    }
}

/// Searches `host` for a subdivision of `pat` by backtracking over branch
/// vertex assignments and then packing internally disjoint paths.
/// Returns the branch map and the host edge path of every pattern edge.
pub fn find_subdivision_of(host: &Network, pat: &Network) -> Option<(Vec<usize>, Vec<Vec<usize>>)> {
    if pat.node_count() > host.node_count() || pat.edge_count() > host.edge_count() {
        return None;
    }
    let mut node_order: Vec<usize> = (0..pat.node_count()).collect();
    node_order.sort_by_key(|&v| std::cmp::Reverse(pat.out_edges(v).len() + pat.in_edges(v).len()));
    let mut search = MinorSearch {
        host,
        pat,
        reach: reachability(host),
        node_order,
        edge_order: (0..pat.edge_count()).collect(),
        branch: vec![None; pat.node_count()],
        is_branch: vec![false; host.node_count()],
        used_node: vec![false; host.node_count()],
        used_edge: vec![false; host.edge_count()],
        paths: vec![Vec::new(); pat.edge_count()],
    };
    if search.assign(0) {
        Some((search.branch.into_iter().map(Option::unwrap).collect(), search.paths))
    } else {
        None
    }
}

pub fn find_subdivision(host: &Network, pattern: PatternId) -> Result<Option<Embedding>> {
    find_subdivision_capped(host, pattern, SizeCap::default())
}

pub fn find_subdivision_capped(host: &Network, pattern: PatternId, cap: SizeCap) -> Result<Option<Embedding>> {
    check_cap(host, cap)?;
    let pat = pattern.network();
    let Some((branch, paths)) = find_subdivision_of(host, &pat) else {
        return Ok(None);
    };
    let emb = Embedding {
        pattern,
        branch: branch.iter().enumerate().map(|(p, &h)| (pat.nodes()[p].clone(), host.nodes()[h].clone())).collect(),
        paths: paths
            .iter()
            .enumerate()
            .map(|(e, path)| {
                (pat.edges()[e].id.clone(), path.iter().map(|&he| host.edges()[he].id.clone()).collect())
            })
            .collect(),
    };
    check_embedding(host, &emb)?;
    Ok(Some(emb))
}

/// Independent check that `emb` witnesses a subdivision of its pattern:
/// injective branch map, every pattern edge mapped to a directed host path
/// between the right branch vertices, paths internally disjoint, avoiding
/// branch vertices, and using distinct host edges.
pub fn check_embedding(host: &Network, emb: &Embedding) -> Result<()> {
    let pat = emb.pattern.network();
    let bad = |msg: String| Err(Error::Contract(format!("invalid {} embedding: {msg}", emb.pattern)));
    let mut branch = BTreeMap::new();
    for v in pat.nodes() {
        let Some(h) = emb.branch.get(v) else { return bad(format!("pattern node {v} is unmapped")) };
        let Some(hi) = host.node_index(h) else { return bad(format!("unknown host node {h}")) };
        branch.insert(v.clone(), hi);
    }
    let images: BTreeSet<usize> = branch.values().copied().collect();
    if images.len() != branch.len() || emb.branch.len() != pat.node_count() {
        return bad("branch map is not injective".into());
    }
    let mut internal = BTreeSet::new();
    let mut used = BTreeSet::new();
    for e in pat.edges() {
        let Some(path) = emb.paths.get(&e.id) else { return bad(format!("pattern edge {} is unmapped", e.id)) };
        if path.is_empty() {
            return bad(format!("pattern edge {} maps to an empty path", e.id));
        }
        let mut at = branch[&e.tail];
        for (i, id) in path.iter().enumerate() {
            let Some(he) = host.edge_index(id) else { return bad(format!("unknown host edge {id}")) };
            if !used.insert(he) {
                return bad(format!("host edge {id} is used twice"));
            }
            let (a, b) = host.ends(he);
            if a != at {
                return bad(format!("path of {} is not a directed walk", e.id));
            }
            at = b;
            if i + 1 < path.len() && (images.contains(&b) || !internal.insert(b)) {
                return bad(format!("path of {} meets another path or branch vertex", e.id));
            }
        }
        if at != branch[&e.head] {
            return bad(format!("path of {} ends at the wrong vertex", e.id));
        }
    }
    if emb.paths.len() != pat.edge_count() {
        return bad("paths mention unknown pattern edges".into());
    }
    Ok(())
}

/// Isomorphism of two small networks, ignoring terminals and edge names: a
/// subdivision of `b` in `a` with equal edge counts uses single-edge paths.
pub fn isomorphic(a: &Network, b: &Network) -> bool {
    a.node_count() == b.node_count() && a.edge_count() == b.edge_count() && find_subdivision_of(a, b).is_some()
}

/// Small multigraph over node indices used by the reductions below.
#[derive(Clone, Debug)]
struct Multi {
    edges: Vec<(usize, usize, String)>,
}

impl Multi {
    fn from_mask(net: &Network, mask: &[bool]) -> Multi {
        Multi {
            edges: (0..net.edge_count())
                .filter(|&e| mask[e])
                .map(|e| {
                    let (a, b) = net.ends(e);
                    (a, b, net.edges()[e].id.clone())
                })
                .collect(),
        }
    }

    fn degrees(&self, v: usize) -> (usize, usize) {
        let inn = self.edges.iter().filter(|e| e.1 == v).count();
        let out = self.edges.iter().filter(|e| e.0 == v).count();
        (inn, out)
    }

    /// Merges an in-edge/out-edge pair at a node of degree (1, 1) that is not
    /// a terminal. Returns the indices of the merged pair.
    fn smooth_once(&mut self, keep: &[usize]) -> Option<(usize, usize)> {
        let mut nodes: Vec<usize> = self.edges.iter().flat_map(|e| [e.0, e.1]).collect();
        nodes.sort();
        nodes.dedup();
        for v in nodes {
            if keep.contains(&v) || self.degrees(v) != (1, 1) {
                continue;
            }
            let i = self.edges.iter().position(|e| e.1 == v).unwrap();
            let o = self.edges.iter().position(|e| e.0 == v).unwrap();
            if self.edges[i].0 == self.edges[o].1 {
                continue;
            }
            let merged = (self.edges[i].0, self.edges[o].1, format!("{}+{}", self.edges[i].2, self.edges[o].2));
            self.edges[i] = merged;
            self.edges.remove(o);
            return Some((i, o));
        }
        None
    }

    fn smooth(&mut self, keep: &[usize]) {
        while self.smooth_once(keep).is_some() {}
    }

    /// All edges connect consecutive nodes of a single chain from `u` to `v`.
    fn is_chain(&self, u: usize, v: usize) -> bool {
        let mut at = u;
        let mut seen = 0;
        let mut visited = BTreeSet::new();
        while at != v {
            if !visited.insert(at) {
                return false;
            }
            let outs: Vec<usize> = self.edges.iter().filter(|e| e.0 == at).map(|e| e.1).collect();
            let Some(&next) = outs.first() else { return false };
            if outs.iter().any(|&h| h != next) {
                return false;
            }
            seen += outs.len();
            at = next;
        }
        !self.edges.is_empty() && seen == self.edges.len()
    }
}

/// Edges lying on some `u → v` path of an acyclic network.
pub fn path_union(net: &Network, u: usize, v: usize) -> Vec<bool> {
    let all = vec![true; net.edge_count()];
    let from = net.reachable_from(u, &all);
    let to = net.reaching(v, &all);
    (0..net.edge_count())
        .map(|e| {
            let (a, b) = net.ends(e);
            from[a] && to[b]
        })
        .collect()
}

/// Whether the edges form consecutive bundles of parallel links between
/// `u` and `v`. Every edge must lie on a `u → v` path.
pub fn is_chain_of_parallel_links(net: &Network, u: &str, v: &str) -> Result<bool> {
    let (ui, vi) = terminals(net, u, v)?;
    let union = path_union(net, ui, vi);
    if union.iter().any(|on| !on) {
        return Err(Error::Contract(format!("some edge lies on no path from {u} to {v}")));
    }
    Ok(Multi::from_mask(net, &union).is_chain(ui, vi))
}

fn terminals(net: &Network, u: &str, v: &str) -> Result<(usize, usize)> {
    let find = |x: &str| net.node_index(x).ok_or_else(|| Error::InvalidParameter(format!("unknown node {x}")));
    Ok((find(u)?, find(v)?))
}

/// A pair whose union of paths is not a chain of parallel paths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainWitness {
    pub from: String,
    pub to: String,
    pub union: Vec<String>,
}

/// Whether every ordered node pair with a connecting path has a union of
/// paths that smooths to a chain of parallel links.
pub fn uses_only_chains(net: &Network) -> Result<(bool, Option<ChainWitness>)> {
    if !net.is_acyclic() {
        return Err(Error::UnsupportedTopology("path unions are only analysed on acyclic networks".into()));
    }
    let reach = reachability(net);
    for u in 0..net.node_count() {
        for v in 0..net.node_count() {
            if u == v || !reach[u][v] {
                continue;
            }
            let union = path_union(net, u, v);
            let mut g = Multi::from_mask(net, &union);
            g.smooth(&[u, v]);
            if !g.is_chain(u, v) {
                let ids = (0..net.edge_count()).filter(|&e| union[e]).map(|e| net.edges()[e].id.clone()).collect();
                return Ok((
                    false,
                    Some(ChainWitness { from: net.nodes()[u].clone(), to: net.nodes()[v].clone(), union: ids }),
                ));
            }
        }
    }
    Ok((true, None))
}

/// Two-terminal series-parallel test on the source–sink union: repeated
/// parallel and series reductions must leave a single source–sink edge.
pub fn series_parallel(net: &Network) -> Result<bool> {
    if !net.is_acyclic() {
        return Err(Error::UnsupportedTopology("series-parallel reduction expects an acyclic network".into()));
    }
    let (s, t) = (net.source_index(), net.sink_index());
    let mut g = Multi::from_mask(net, &net.st_edges());
    if g.edges.is_empty() {
        return Ok(false);
    }
    loop {
        let before = g.edges.len();
        let mut seen = BTreeSet::new();
        g.edges.retain(|e| seen.insert((e.0, e.1)));
        g.smooth(&[s, t]);
        if g.edges.len() == before {
            break;
        }
    }
    Ok(g.edges.len() == 1 && g.edges[0].0 == s && g.edges[0].1 == t)
}

/// Removes every non-terminal node with one incoming and one outgoing link,
/// replacing the two links by one with summed transit, the smaller capacity
/// and id `a+b`.
pub fn smooth(inst: &Instance) -> Result<Instance> {
    let net = inst.network();
    let mut cur = inst.clone();
    loop {
        let n = cur.network();
        let candidate = (0..n.node_count()).find(|&v| {
            v != n.source_index()
                && v != n.sink_index()
                && n.in_edges(v).len() == 1
                && n.out_edges(v).len() == 1
                && n.ends(n.in_edges(v)[0]).0 != n.ends(n.out_edges(v)[0]).1
        });
        let Some(v) = candidate else { break };
        let (a, b) = (n.in_edges(v)[0], n.out_edges(v)[0]);
        let mut edges = Vec::new();
        let mut cap = Vec::new();
        let mut transit = Vec::new();
        for (k, e) in n.edges().iter().enumerate() {
            if k == b {
                continue;
            }
            if k == a {
                let merged = Edge {
                    id: format!("{}+{}", e.id, n.edges()[b].id),
                    tail: e.tail.clone(),
                    head: n.edges()[b].head.clone(),
                };
                edges.push(merged);
                cap.push(std::cmp::min(cur.capacity(a), cur.capacity(b)).clone());
                transit.push(cur.transit(a) + cur.transit(b));
            } else {
                edges.push(e.clone());
                cap.push(cur.capacity(k).clone());
                transit.push(cur.transit(k).clone());
            }
        }
        let nodes = n.nodes().iter().enumerate().filter(|(i, _)| *i != v).map(|(_, x)| x.clone()).collect();
        let next = Network::new(nodes, edges, net.source().to_string(), net.sink().to_string())?;
        cur = Instance::new(next, cap, transit, cur.supply().clone())?;
    }
    Ok(cur)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub minors: BTreeMap<PatternId, Option<Embedding>>,
    pub uses_only_chains: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_witness: Option<ChainWitness>,
    pub series_parallel: bool,
    /// Contains `M3`, `M3′` or `M3″`: some instance on the network admits
    /// the paradox.
    pub paradox_sufficient: bool,
    /// Contains any of the four obstructions: the paradox occurs on the
    /// network or on its transpose.
    pub paradox_here_or_transposed: bool,
}

impl ClassificationReport {
    pub fn has(&self, p: PatternId) -> bool {
        self.minors.get(&p).is_some_and(Option::is_some)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

pub fn classify(net: &Network) -> Result<ClassificationReport> {
    check_cap(net, SizeCap::default())?;
    let found: Vec<(PatternId, Option<Embedding>)> = PatternId::ALL
        .par_iter()
        .map(|&p| find_subdivision(net, p).map(|e| (p, e)))
        .collect::<Result<Vec<_>>>()?;
    let minors: BTreeMap<PatternId, Option<Embedding>> = found.into_iter().collect();
    let (chains, chain_witness) = uses_only_chains(net)?;
    let series_parallel = series_parallel(net)?;
    let has = |p: PatternId| minors[&p].is_some();
    let any_obstruction = PatternId::CHAIN_OBSTRUCTIONS.iter().any(|&p| has(p));
    if chains == any_obstruction {
        return Err(Error::Internal(format!(
            "path-union test says uses_only_chains={chains} but the minor search says obstruction={any_obstruction}"
        )));
    }
    if has(PatternId::Wheatstone) != has(PatternId::M3DoublePrime) {
        return Err(Error::Internal("Wheatstone and M3DoublePrime verdicts differ".into()));
    }
    Ok(ClassificationReport {
        paradox_sufficient: has(PatternId::M3) || has(PatternId::M3Prime) || has(PatternId::M3DoublePrime),
        paradox_here_or_transposed: any_obstruction,
        minors,
        uses_only_chains: chains,
        chain_witness,
        series_parallel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{chain_of_parallel_links, make_mn, MnParams};
    use crate::scalar::int;

    fn mn(n: usize) -> Network {
        let alphas = (0..n).map(|k| int((n - k) as i64 + 1)).collect();
        make_mn(&MnParams::new(n, int(1), alphas).unwrap()).unwrap().network().clone()
    }

    #[test]
    fn m3_in_m4_uses_path_for_e2() {
        let emb = find_subdivision(&mn(4), PatternId::M3).unwrap().unwrap();
        check_embedding(&mn(4), &emb).unwrap();
        let images: BTreeSet<&str> = emb.branch.values().map(String::as_str).collect();
        assert_eq!(images.len(), 3);
        assert!(emb.paths.values().any(|p| p.len() >= 2));
    }

    #[test]
    fn transpose_of_m3_has_no_m3() {
        assert!(find_subdivision(&mn(3).transpose(), PatternId::M3).unwrap().is_none());
    }

    #[test]
    fn wheatstone_is_m3_double_prime() {
        assert!(isomorphic(&PatternId::Wheatstone.network(), &PatternId::M3DoublePrime.network()));
        assert!(!isomorphic(&PatternId::Wheatstone.network(), &PatternId::M3Prime.network()));
    }

    #[test]
    fn checker_rejects_shared_vertices() {
        let host = mn(4);
        let mut emb = find_subdivision(&host, PatternId::M3).unwrap().unwrap();
        let some_edge = emb.paths.keys().next().unwrap().clone();
        emb.paths.insert(some_edge, vec!["nope".into()]);
        assert!(check_embedding(&host, &emb).is_err());
    }

    #[test]
    fn chains_examples() {
        let path = Network::from_triples(&[("a", "s", "x"), ("b", "x", "t")], "s", "t").unwrap();
        assert_eq!(uses_only_chains(&path).unwrap(), (true, None));
        let (ok, w) = uses_only_chains(&mn(3)).unwrap();
        assert!(!ok);
        let w = w.unwrap();
        assert_eq!((w.from.as_str(), w.to.as_str()), ("v1", "v3"));
    }

    #[test]
    fn chain_of_parallel_links_examples() {
        let two = Network::from_triples(&[("a", "u", "v"), ("b", "u", "v")], "u", "v").unwrap();
        assert!(is_chain_of_parallel_links(&two, "u", "v").unwrap());
        let t = mn(3).transpose();
        assert!(!is_chain_of_parallel_links(&t, "v3", "v1").unwrap());
        let off = Network::from_triples(&[("a", "u", "v"), ("b", "v", "w")], "u", "w").unwrap();
        assert!(is_chain_of_parallel_links(&off, "u", "v").is_err());
    }

    #[test]
    fn smoothing_sums_transit_and_takes_min_capacity() {
        let net = Network::from_triples(&[("a", "s", "x"), ("b", "x", "t")], "s", "t").unwrap();
        let inst = Instance::new(net, vec![int(2), int(5)], vec![int(1), int(3)], int(1)).unwrap();
        let sm = smooth(&inst).unwrap();
        assert_eq!(sm.network().edge_count(), 1);
        assert_eq!(sm.capacity_of("a+b"), Some(&int(2)));
        assert_eq!(sm.transit_of("a+b"), Some(&int(4)));
        let m3 = make_mn(&MnParams::new(3, int(1), vec![int(3), int(2), int(1)]).unwrap()).unwrap();
        assert_eq!(smooth(&m3).unwrap(), m3);
    }

    #[test]
    fn series_parallel_examples() {
        for n in 2..=8 {
            assert!(series_parallel(&mn(n)).unwrap(), "M_{n}");
        }
        assert!(!series_parallel(&PatternId::Wheatstone.network()).unwrap());
    }

    #[test]
    fn classify_examples() {
        let r = classify(&mn(4)).unwrap();
        assert!(r.series_parallel && r.has(PatternId::M3) && !r.uses_only_chains && r.paradox_sufficient);
        let w = classify(&PatternId::Wheatstone.network()).unwrap();
        assert!(!w.series_parallel && w.has(PatternId::M3DoublePrime));
        let c = classify(&chain_of_parallel_links(&[3]).unwrap()).unwrap();
        assert!(c.uses_only_chains && !c.paradox_here_or_transposed);
        assert!(c.minors.values().all(Option::is_none));
    }
}
