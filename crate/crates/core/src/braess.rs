//! Braess's ratio by exhaustive subnetwork enumeration, and sweep harnesses.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{social_cost_ne_with, EngineOptions, EQUILIBRIUM_CAVEAT};
use crate::error::{Error, Result};
use crate::network::{Instance, Network};
use crate::scalar::{one, parse_rational, Rational, Scalar};
use crate::topology::classify;

pub const DEFAULT_SUBSET_CAP: usize = 16;

#[derive(Clone, Debug)]
pub enum SubgraphPolicy {
    /// Every subset of edges; refused above `cap` edges.
    AllSubsets { cap: usize },
    /// Only the listed edge sets (the full network is always added).
    List(Vec<BTreeSet<String>>),
}

impl Default for SubgraphPolicy {
    fn default() -> Self {
        SubgraphPolicy::AllSubsets { cap: DEFAULT_SUBSET_CAP }
    }
}

/// `σ_G / σ_H` with `∞/x = ∞` for finite `x`, `x/∞ = 0` for finite `x`,
/// `∞/∞ = 1`, `0/0 = 1` and `x/0 = ∞` for `x > 0`.
pub fn extended_ratio(full: &Scalar, sub: &Scalar) -> Scalar {
    match (full, sub) {
        (Scalar::PosInfinity, Scalar::PosInfinity) => Scalar::Finite(one()),
        (Scalar::PosInfinity, Scalar::Finite(_)) => Scalar::PosInfinity,
        (Scalar::Finite(_), Scalar::PosInfinity) => Scalar::Finite(Rational::zero()),
        (Scalar::Finite(a), Scalar::Finite(b)) if b.is_zero() => {
            if a.is_zero() {
                Scalar::Finite(one())
            } else {
                Scalar::PosInfinity
            }
        }
        (Scalar::Finite(a), Scalar::Finite(b)) => Scalar::Finite(a / b),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraessEntry {
    /// Kept edges, in network order.
    pub subset: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraessReport {
    pub instance_id: String,
    pub sigma_full: Scalar,
    pub ratio: Scalar,
    pub argmax: Vec<String>,
    pub paradox: bool,
    pub caveat: String,
    pub entries: Vec<BraessEntry>,
}

impl BraessReport {
    pub fn entry(&self, subset: &[&str]) -> Option<&BraessEntry> {
        let want: BTreeSet<&str> = subset.iter().copied().collect();
        self.entries.iter().find(|e| e.subset.iter().map(String::as_str).collect::<BTreeSet<_>>() == want)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

pub fn braess_ratio(inst: &Instance, policy: &SubgraphPolicy) -> Result<BraessReport> {
    braess_ratio_with(inst, policy, &EngineOptions::default())
}

/// Evaluates `σ` on every subnetwork selected by `policy`. Subnetworks with
/// the same edges on source–sink paths share one equilibrium computation.
/// Failures of individual subnetworks are recorded in their entries. Ties in
/// the maximum go to the smallest subset bitmask (bit `k` set when edge `k`
/// is kept).
pub fn braess_ratio_with(inst: &Instance, policy: &SubgraphPolicy, opts: &EngineOptions) -> Result<BraessReport> {
    let net = inst.network();
    let m = net.edge_count();
    let ids: Vec<String> = net.edges().iter().map(|e| e.id.clone()).collect();
    let masks: Vec<Vec<bool>> = match policy {
        SubgraphPolicy::AllSubsets { cap } => {
            if m > *cap || m >= 63 {
                return Err(Error::SizeCap(format!(
                    "{m} edges exceed the subset enumeration cap of {cap}; pass an explicit subset list"
                )));
            }
            (0..1u64 << m).map(|bits| (0..m).map(|k| bits >> k & 1 == 1).collect()).collect()
        }
        SubgraphPolicy::List(list) => {
            let mut out = vec![vec![true; m]];
            for set in list {
                if let Some(bad) = set.iter().find(|id| net.edge_index(id).is_none()) {
                    return Err(Error::InvalidParameter(format!("subset mentions unknown edge {bad}")));
                }
                let mask: Vec<bool> = ids.iter().map(|id| set.contains(id)).collect();
                if !out.contains(&mask) {
                    out.push(mask);
                }
            }
            out
        }
    };

    let key_of = |mask: &[bool]| -> Result<BTreeSet<String>> {
        let keep: BTreeSet<String> = (0..m).filter(|&k| mask[k]).map(|k| ids[k].clone()).collect();
        let sub = net.restrict(&keep)?;
        let on = sub.st_edges();
        Ok(sub.edges().iter().zip(on).filter(|(_, on)| *on).map(|(e, _)| e.id.clone()).collect())
    };
    let keys: Vec<BTreeSet<String>> = masks.iter().map(|mk| key_of(mk)).collect::<Result<_>>()?;
    let unique: Vec<BTreeSet<String>> = keys.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let computed: BTreeMap<BTreeSet<String>, std::result::Result<Scalar, String>> = unique
        .par_iter()
        .map(|key| {
            let value = if key.is_empty() {
                Ok(Scalar::PosInfinity)
            } else {
                inst.restrict(key).and_then(|h| social_cost_ne_with(&h, opts)).map_err(|e| e.to_string())
            };
            (key.clone(), value)
        })
        .collect();

    let full_key = key_of(&vec![true; m])?;
    let sigma_full = match &computed[&full_key] {
        Ok(s) => s.clone(),
        Err(msg) => return Err(Error::Internal(format!("equilibrium of the full network failed: {msg}"))),
    };

    let mut order: Vec<usize> = (0..masks.len()).collect();
    let bitmask = |mask: &[bool]| mask.iter().enumerate().filter(|(_, b)| **b).map(|(k, _)| 1u128 << k).sum::<u128>();
    order.sort_by_key(|&i| bitmask(&masks[i]));
    let mut entries = Vec::with_capacity(masks.len());
    let mut best: Option<(Scalar, usize)> = None;
    for &i in &order {
        let subset: Vec<String> = (0..m).filter(|&k| masks[i][k]).map(|k| ids[k].clone()).collect();
        match &computed[&keys[i]] {
            Ok(sigma) => {
                let r = extended_ratio(&sigma_full, sigma);
                if best.as_ref().is_none_or(|(b, _)| r > *b) {
                    best = Some((r.clone(), entries.len()));
                }
                entries.push(BraessEntry { subset, sigma: Some(sigma.clone()), ratio: Some(r), error: None });
            }
            Err(msg) => entries.push(BraessEntry { subset, sigma: None, ratio: None, error: Some(msg.clone()) }),
        }
    }
    let (ratio, at) = best.expect("the full network is always an entry");
    Ok(BraessReport {
        instance_id: String::new(),
        sigma_full,
        paradox: ratio > Scalar::Finite(one()),
        argmax: entries[at].subset.clone(),
        ratio,
        caveat: EQUILIBRIUM_CAVEAT.to_string(),
        entries,
    })
}

/// A point's parameters, keyed by edge id, with the terminals to use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepGridJson {
    pub transits: Vec<BTreeMap<String, String>>,
    pub capacities: Vec<BTreeMap<String, String>>,
    pub supplies: Vec<String>,
    #[serde(default = "default_terminals")]
    pub terminals: Vec<(String, String)>,
}

fn default_terminals() -> Vec<(String, String)> {
    vec![("v3".into(), "v1".into())]
}

impl SweepGridJson {
    pub fn point_count(&self) -> usize {
        self.transits.len() * self.capacities.len() * self.supplies.len() * self.terminals.len()
    }

    /// A grid of 108 points: four transit patterns, three capacity patterns
    /// (one of them the `A_3^T` capacities at `ε = 1/10`), supplies below,
    /// near and far above the total capacity, and three terminal placements.
    pub fn default_transpose_m3() -> Self {
        let map = |v: [&str; 4]| -> BTreeMap<String, String> {
            ["e1", "e2", "f1", "f2"].iter().zip(v).map(|(k, x)| (k.to_string(), x.to_string())).collect()
        };
        SweepGridJson {
            transits: vec![
                map(["0", "0", "1", "1"]),
                map(["1", "0", "1", "2"]),
                map(["0", "1", "2", "0"]),
                map(["1", "1", "3", "1"]),
            ],
            capacities: vec![
                map(["101/100", "1001/1000", "9/100", "101/100"]),
                map(["1", "1", "1", "1"]),
                map(["2", "1", "1", "3"]),
            ],
            supplies: vec!["1/2".into(), "11/10".into(), "7".into()],
            terminals: vec![("v3".into(), "v1".into()), ("v3".into(), "v2".into()), ("v2".into(), "v1".into())],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_full: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Vec<String>>,
    pub paradox: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub description: String,
    pub points: Vec<SweepPoint>,
    pub max_ratio: Option<Scalar>,
    pub paradox_found: bool,
    /// Indices of points with `ρ > 1`, to be reviewed by hand.
    pub candidates: Vec<usize>,
    pub failed: Vec<usize>,
    pub caveat: String,
}

impl SweepReport {
    fn from_points(description: String, points: Vec<SweepPoint>) -> Self {
        let max_ratio = points.iter().filter_map(|p| p.ratio.clone()).max();
        let candidates: Vec<usize> = points.iter().filter(|p| p.paradox).map(|p| p.index).collect();
        let failed = points.iter().filter(|p| p.error.is_some()).map(|p| p.index).collect();
        SweepReport {
            description,
            paradox_found: !candidates.is_empty(),
            points,
            max_ratio,
            candidates,
            failed,
            caveat: EQUILIBRIUM_CAVEAT.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn evaluate_point(index: usize, label: String, inst: Result<Instance>, opts: &EngineOptions) -> SweepPoint {
    let report = inst.and_then(|i| braess_ratio_with(&i, &SubgraphPolicy::default(), opts));
    match report {
        Ok(r) => SweepPoint {
            index,
            label,
            sigma_full: Some(r.sigma_full),
            paradox: r.paradox,
            ratio: Some(r.ratio),
            argmax: Some(r.argmax),
            error: None,
        },
        Err(e) => SweepPoint {
            index,
            label,
            sigma_full: None,
            ratio: None,
            argmax: None,
            paradox: false,
            error: Some(e.to_string()),
        },
    }
}

/// The transpose of `M_3`: `e1 = v2→v1`, `e2 = v3→v2`, `f1 = v3→v1`,
/// `f2 = v3→v2`, source `v3`, sink `v1`.
pub fn transpose_m3_network() -> Network {
    Network::from_triples(&[("e1", "v2", "v1"), ("e2", "v3", "v2"), ("f1", "v3", "v1"), ("f2", "v3", "v2")], "v3", "v1")
        .expect("fixed shape")
}

/// Braess's ratio at every point of the cartesian grid on the transpose of
/// `M_3`.
pub fn sweep_transpose_m3(grid: &SweepGridJson) -> Result<SweepReport> {
    sweep_transpose_m3_with(grid, &EngineOptions::default())
}

pub fn sweep_transpose_m3_with(grid: &SweepGridJson, opts: &EngineOptions) -> Result<SweepReport> {
    let base = transpose_m3_network();
    let parse_map = |m: &BTreeMap<String, String>| -> Result<BTreeMap<String, Rational>> {
        m.iter().map(|(k, v)| Ok((k.clone(), parse_rational(v)?))).collect()
    };
    let mut specs = Vec::new();
    for t in &grid.transits {
        for c in &grid.capacities {
            for d in &grid.supplies {
                for (s, sink) in &grid.terminals {
                    specs.push((t, c, d, s, sink));
                }
            }
        }
    }
    if specs.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    let points: Vec<SweepPoint> = specs
        .par_iter()
        .enumerate()
        .map(|(i, (t, c, d, s, sink))| {
            let inst = (|| {
                let net = base.with_terminals(s, sink)?;
                Instance::from_maps(net, &parse_map(c)?, &parse_map(t)?, parse_rational(d)?)
            })();
            let label = format!(
                "transit {:?} capacity {:?} supply {d} source {s} sink {sink}",
                t.values().collect::<Vec<_>>(),
                c.values().collect::<Vec<_>>()
            );
            evaluate_point(i, label, inst, opts)
        })
        .collect();
    Ok(SweepReport::from_points(format!("transpose of M3, {} grid points", points.len()), points))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjectureEntry {
    pub network: String,
    /// Contains `M3`, `M3′` or `M3″`.
    pub forward_minor: bool,
    pub sweep: SweepReport,
    /// A paradox on a network without any forward minor; never treated as a
    /// refutation without manual review.
    pub flagged_for_review: bool,
}

/// Classifies every network, then evaluates its instances. Instances must
/// all live on the network they are listed with.
pub fn conjecture_search(family: &[(String, Network, Vec<Instance>)]) -> Result<Vec<ConjectureEntry>> {
    let opts = EngineOptions::default();
    family
        .iter()
        .map(|(name, net, instances)| {
            let class = classify(net)?;
            if let Some(bad) = instances.iter().position(|i| i.network() != net) {
                return Err(Error::InvalidParameter(format!("instance {bad} of {name} is on another network")));
            }
            let points = instances
                .par_iter()
                .enumerate()
                .map(|(i, inst)| evaluate_point(i, format!("{name} #{i}"), Ok(inst.clone()), &opts))
                .collect();
            let sweep = SweepReport::from_points(format!("{name}, {} instances", instances.len()), points);
            Ok(ConjectureEntry {
                network: name.clone(),
                forward_minor: class.paradox_sufficient,
                flagged_for_review: !class.paradox_sufficient && sweep.paradox_found,
                sweep,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{lemma1_alphas, make_mn, MnParams};
    use crate::scalar::{int, ratio};

    #[test]
    fn extended_ratio_rules() {
        let inf = Scalar::PosInfinity;
        let two = Scalar::Finite(int(2));
        assert_eq!(extended_ratio(&inf, &two), inf);
        assert_eq!(extended_ratio(&two, &inf), Scalar::Finite(int(0)));
        assert_eq!(extended_ratio(&inf, &inf), Scalar::Finite(int(1)));
        assert_eq!(extended_ratio(&two, &Scalar::Finite(int(4))), Scalar::Finite(ratio(1, 2)));
        assert_eq!(extended_ratio(&Scalar::Finite(int(0)), &Scalar::Finite(int(0))), Scalar::Finite(int(1)));
    }

    #[test]
    fn m2_has_no_paradox() {
        let inst = make_mn(&MnParams::new(2, int(1), vec![int(2), int(1)]).unwrap()).unwrap();
        let r = braess_ratio(&inst, &SubgraphPolicy::default()).unwrap();
        assert_eq!(r.ratio, Scalar::Finite(int(1)));
        assert_eq!(r.entries.len(), 4);
        assert!(!r.paradox);
    }

    #[test]
    fn a3_paradox_and_argmax() {
        let alphas = lemma1_alphas(3, &ratio(1, 10), 1).unwrap();
        let inst = make_mn(&MnParams::new(3, int(1), alphas).unwrap()).unwrap();
        let r = braess_ratio(&inst, &SubgraphPolicy::default()).unwrap();
        assert!(r.paradox);
        assert_eq!(r.argmax, vec!["e1", "f1", "f2"]);
        assert_eq!(r.entry(&["e1", "f1", "f2"]).unwrap().sigma, Some(Scalar::Finite(int(1))));
    }

    #[test]
    fn subset_list_and_cap() {
        let inst = make_mn(&MnParams::new(2, int(1), vec![int(2), int(1)]).unwrap()).unwrap();
        let list = SubgraphPolicy::List(vec![["f1".to_string()].into_iter().collect()]);
        let r = braess_ratio(&inst, &list).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert!(matches!(braess_ratio(&inst, &SubgraphPolicy::AllSubsets { cap: 1 }), Err(Error::SizeCap(_))));
        let unknown = SubgraphPolicy::List(vec![["zz".to_string()].into_iter().collect()]);
        assert!(braess_ratio(&inst, &unknown).is_err());
    }
}
