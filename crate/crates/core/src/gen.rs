//! Instance and network generators.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::network::{Edge, Instance, Network};
use crate::scalar::{int, one, pow, Rational};
use crate::topology::{check_embedding, Embedding, PatternId};

/// Parameters of the network `M_n`: `α_0 > α_1 > … > α_{n−1} > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MnParams {
    pub n: usize,
    pub big_t: Rational,
    pub alphas: Vec<Rational>,
}

impl MnParams {
    pub fn new(n: usize, big_t: Rational, alphas: Vec<Rational>) -> Result<Self> {
        let p = MnParams { n, big_t, alphas };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter("n must be at least 2".into()));
        }
        if !self.big_t.is_positive() {
            return Err(Error::InvalidParameter("T must be positive".into()));
        }
        if self.alphas.len() != self.n {
            return Err(Error::InvalidParameter(format!("expected {} alphas, got {}", self.n, self.alphas.len())));
        }
        if !self.alphas.last().unwrap().is_positive() || self.alphas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParameter("alphas must be positive and strictly decreasing".into()));
        }
        Ok(())
    }
}

pub fn node(k: usize) -> String {
    format!("v{k}")
}

/// Nodes `v_1…v_n`, path edges `e_k = v_k v_{k+1}` and shortcuts
/// `f_k = v_k v_n`, with `τ_e = 0`, `τ_f = T`, `c_{e_k} = α_k`,
/// `c_{f_k} = α_{k−1} − α_k` for `k ≤ n−2`, `c_{f_{n−1}} = α_{n−2}` and
/// supply `α_0`.
pub fn make_mn(p: &MnParams) -> Result<Instance> {
    p.validate()?;
    let n = p.n;
    let a = &p.alphas;
    let mut edges = Vec::new();
    let mut cap = BTreeMap::new();
    let mut transit = BTreeMap::new();
    for k in 1..n {
        let id = format!("e{k}");
        edges.push(Edge { id: id.clone(), tail: node(k), head: node(k + 1) });
        cap.insert(id.clone(), a[k].clone());
        transit.insert(id, Rational::zero());
    }
    for k in 1..n {
        let id = format!("f{k}");
        edges.push(Edge { id: id.clone(), tail: node(k), head: node(n) });
        let c = if k + 1 == n { a[n - 2].clone() } else { &a[k - 1] - &a[k] };
        cap.insert(id.clone(), c);
        transit.insert(id, p.big_t.clone());
    }
    let nodes = (1..=n).map(node).collect();
    let net = Network::new(nodes, edges, node(1), node(n))?;
    Instance::from_maps(net, &cap, &transit, a[0].clone())
}

pub fn make_mn_transpose(p: &MnParams) -> Result<Instance> {
    Ok(make_mn(p)?.transpose())
}

fn check_eps(n: usize, eps: &Rational, j: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    if j < 1 {
        return Err(Error::InvalidParameter("j must be at least 1".into()));
    }
    let bound = Rational::new(1.into(), (2 * n).into());
    if !eps.is_positive() || *eps >= bound {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/{})", 2 * n)));
    }
    Ok(())
}

/// `α_k = 1 + ε^{j+k}` for `0 ≤ k < n`, with `0 < ε < 1/(2n)`.
pub fn lemma1_alphas(n: usize, eps: &Rational, j: u32) -> Result<Vec<Rational>> {
    check_eps(n, eps, j)?;
    Ok((0..n as u32).map(|k| one() + pow(eps, j + k)).collect())
}

/// Integer capacities `α_k = 2^{a(n+j)} + 2^{a(n−k)}` with `a` the smallest
/// integer such that `2^{−a} ≤ ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerAlphas {
    pub a: u32,
    pub alphas: Vec<Rational>,
    /// Lower bound on the sink latency in units of `T`: `(1 − n/2^{a−1})(n−1)`.
    pub bound_per_t: Rational,
}

pub fn integer_alphas(n: usize, eps: &Rational, j: u32) -> Result<IntegerAlphas> {
    check_eps(n, eps, j)?;
    let mut a = 0u32;
    while Rational::new(1.into(), pow(&int(2), a).to_integer()) > *eps {
        a += 1;
    }
    let two = int(2);
    let big = pow(&two, a * (n as u32 + j));
    let alphas = (0..n as u32).map(|k| &big + pow(&two, a * (n as u32 - k))).collect();
    let bound_per_t = (one() - int(n as i64) / pow(&two, a - 1)) * int(n as i64 - 1);
    Ok(IntegerAlphas { a, alphas, bound_per_t })
}

/// The two four-node variants of `M_3`, in that order: `M_3′` with `f_2`
/// parallel to `e_2` and a tail link `g`, and `M_3″` with `f_2` feeding the
/// second branch node.
pub fn make_m3_variants() -> (Network, Network) {
    let prime = Network::from_triples(
        &[("e1", "s", "x"), ("e2", "x", "y"), ("g", "y", "t"), ("f1", "s", "t"), ("f2", "x", "y")],
        "s",
        "t",
    )
    .expect("fixed shape");
    let double_prime = Network::from_triples(
        &[("e1", "s", "x"), ("e2", "x", "t"), ("f1", "s", "b"), ("g", "b", "t"), ("f2", "x", "b")],
        "s",
        "t",
    )
    .expect("fixed shape");
    (prime, double_prime)
}

/// `M_3` parameters on a variant: the named edges as in `M_3`, `g` with
/// `τ = 0` and `c = d`.
pub fn instantiate_m3_variant(net: &Network, p: &MnParams) -> Result<Instance> {
    if p.n != 3 {
        return Err(Error::InvalidParameter("variants use the parameters of M_3".into()));
    }
    p.validate()?;
    let a = &p.alphas;
    let zero = Rational::zero();
    let params: [(&str, Rational, Rational); 5] = [
        ("e1", zero.clone(), a[1].clone()),
        ("e2", zero.clone(), a[2].clone()),
        ("f1", p.big_t.clone(), &a[0] - &a[1]),
        ("f2", p.big_t.clone(), a[1].clone()),
        ("g", zero, a[0].clone()),
    ];
    let mut cap = BTreeMap::new();
    let mut transit = BTreeMap::new();
    for (id, t, c) in params {
        transit.insert(id.to_string(), t);
        cap.insert(id.to_string(), c);
    }
    Instance::from_maps(net.clone(), &cap, &transit, a[0].clone())
}

/// Instance on `host` that behaves like `A_3` along an embedded `M3`, `M3′`
/// or `M3″`.
///
/// The first host edge of the paths for `e1`, `e2`, `f1`, `f2` carries the
/// `M_3` parameters; every other edge on an embedded path gets `τ = 0` and
/// `c = α_0`, and every remaining host edge gets `τ = 3T` and `c = α_0`.
/// Source and sink become the images of the pattern terminals; supply is
/// `α_0`.
pub fn embed_paradox_instance(host: &Network, emb: &Embedding, big_t: &Rational, alphas: &[Rational]) -> Result<Instance> {
    if !matches!(emb.pattern, PatternId::M3 | PatternId::M3Prime | PatternId::M3DoublePrime) {
        return Err(Error::Contract(format!("{} embeddings do not carry the construction", emb.pattern)));
    }
    check_embedding(host, emb)?;
    MnParams::new(3, big_t.clone(), alphas.to_vec())?;
    let a = alphas;
    let mut cap: BTreeMap<String, Rational> = BTreeMap::new();
    let mut transit: BTreeMap<String, Rational> = BTreeMap::new();
    for e in host.edges() {
        cap.insert(e.id.clone(), a[0].clone());
        transit.insert(e.id.clone(), big_t * int(3));
    }
    for path in emb.paths.values() {
        for id in path {
            transit.insert(id.clone(), Rational::zero());
        }
    }
    let designated = [
        ("e1", Rational::zero(), a[1].clone()),
        ("e2", Rational::zero(), a[2].clone()),
        ("f1", big_t.clone(), &a[0] - &a[1]),
        ("f2", big_t.clone(), a[1].clone()),
    ];
    for (name, t, c) in designated {
        let first = emb.paths[name][0].clone();
        transit.insert(first.clone(), t);
        cap.insert(first, c);
    }
    let net = host.with_terminals(&emb.branch["s"], &emb.branch["t"])?;
    Instance::from_maps(net, &cap, &transit, a[0].clone())
}

/// Consecutive bundles of parallel links `w_0 → w_1 → … → w_k`, bundle `i`
/// holding `counts[i]` links named `p{i}_{j}`.
pub fn chain_of_parallel_links(counts: &[usize]) -> Result<Network> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::InvalidParameter("every bundle needs at least one link".into()));
    }
    let nodes: Vec<String> = (0..=counts.len()).map(|i| format!("w{i}")).collect();
    let mut edges = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        for j in 0..c {
            edges.push(Edge { id: format!("p{i}_{j}"), tail: nodes[i].clone(), head: nodes[i + 1].clone() });
        }
    }
    let (s, t) = (nodes[0].clone(), nodes[counts.len()].clone());
    Network::new(nodes, edges, s, t)
}

/// Seeded random DAG on nodes `v0…v{n−1}` with source `v0` and sink
/// `v{n−1}`.
///
/// The candidate edges are the pairs `(i, j)` with `i < j`, listed in
/// lexicographic order. A `ChaCha8Rng` seeded with `seed_from_u64(seed)`
/// drives a partial Fisher–Yates shuffle: for `k = 0, 1, …, edges−1` the
/// position `k + (next_u64() mod (P − k))` is swapped into slot `k`, where
/// `P` is the number of pairs. The first `edges` pairs, sorted
/// lexicographically, become edges `a0, a1, …` from `v_i` to `v_j`.
pub fn random_dag(nodes: usize, edges: usize, seed: u64) -> Result<Network> {
    if nodes < 2 {
        return Err(Error::InvalidParameter("need at least two nodes".into()));
    }
    let mut pairs: Vec<(usize, usize)> =
        (0..nodes).flat_map(|i| (i + 1..nodes).map(move |j| (i, j))).collect();
    let total = pairs.len();
    if edges > total {
        return Err(Error::InvalidParameter(format!("{nodes} nodes admit at most {total} edges")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..edges {
        let r = k + (rng.next_u64() % (total - k) as u64) as usize;
        pairs.swap(k, r);
    }
    let mut chosen = pairs[..edges].to_vec();
    chosen.sort();
    let names: Vec<String> = (0..nodes).map(|i| format!("v{i}")).collect();
    let edge_list = chosen
        .into_iter()
        .enumerate()
        .map(|(k, (i, j))| Edge { id: format!("a{k}"), tail: names[i].clone(), head: names[j].clone() })
        .collect();
    let (s, t) = (names[0].clone(), names[nodes - 1].clone());
    Network::new(names, edge_list, s, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn m2_shape() {
        let inst = make_mn(&MnParams::new(2, int(1), vec![int(2), int(1)]).unwrap()).unwrap();
        assert_eq!(inst.capacity_of("e1"), Some(&int(1)));
        assert_eq!(inst.capacity_of("f1"), Some(&int(2)));
        assert_eq!(inst.transit_of("f1"), Some(&int(1)));
        assert_eq!(inst.supply(), &int(2));
    }

    #[test]
    fn m3_lemma_capacities() {
        let alphas = lemma1_alphas(3, &ratio(1, 10), 1).unwrap();
        assert_eq!(alphas, vec![ratio(11, 10), ratio(101, 100), ratio(1001, 1000)]);
        assert_eq!(lemma1_alphas(2, &ratio(1, 10), 1).unwrap(), vec![ratio(11, 10), ratio(101, 100)]);
        let inst = make_mn(&MnParams::new(3, int(1), alphas).unwrap()).unwrap();
        assert_eq!(inst.capacity_of("e1"), Some(&ratio(101, 100)));
        assert_eq!(inst.capacity_of("e2"), Some(&ratio(1001, 1000)));
        assert_eq!(inst.capacity_of("f1"), Some(&ratio(9, 100)));
        assert_eq!(inst.capacity_of("f2"), Some(&ratio(101, 100)));
    }

    #[test]
    fn epsilon_range() {
        assert!(lemma1_alphas(3, &ratio(1, 4), 1).is_err());
        assert!(lemma1_alphas(3, &ratio(1, 6), 1).is_err());
        assert!(integer_alphas(3, &ratio(1, 4), 1).is_err());
    }

    #[test]
    fn integer_alpha_values() {
        let ia = integer_alphas(3, &ratio(1, 8), 1).unwrap();
        assert_eq!(ia.a, 3);
        assert_eq!(ia.alphas, vec![int(4608), int(4160), int(4104)]);
        assert_eq!(ia.bound_per_t, ratio(1, 2));
        assert_eq!(integer_alphas(2, &ratio(1, 8), 1).unwrap().alphas, vec![int(576), int(520)]);
    }

    #[test]
    fn embedding_into_m3_itself_is_a3() {
        let alphas = lemma1_alphas(3, &ratio(1, 10), 1).unwrap();
        let a3 = make_mn(&MnParams::new(3, int(1), alphas.clone()).unwrap()).unwrap();
        let emb = crate::topology::find_subdivision(a3.network(), PatternId::M3).unwrap().unwrap();
        let inst = embed_paradox_instance(a3.network(), &emb, &int(1), &alphas).unwrap();
        assert_eq!(inst, a3);
    }

    #[test]
    fn random_dag_is_deterministic() {
        assert_eq!(random_dag(5, 6, 42).unwrap(), random_dag(5, 6, 42).unwrap());
        let one_edge = random_dag(2, 1, 9).unwrap();
        assert_eq!(one_edge.edges().len(), 1);
        assert_eq!((one_edge.edges()[0].tail.as_str(), one_edge.edges()[0].head.as_str()), ("v0", "v1"));
        assert!(random_dag(4, 7, 1).is_err());
    }
}
