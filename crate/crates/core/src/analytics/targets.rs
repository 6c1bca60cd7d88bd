use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Region;
use crate::text::folded_tokens;

/// Token-set Jaccard similarity at or above which two normal forms merge.
pub const JACCARD_THRESHOLD: f64 = 0.5;

const ARTICLES: [&str; 3] = ["the", "a", "an"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCluster {
    pub canonical_label: String,
    /// Distinct raw target strings, sorted.
    pub members: Vec<String>,
    /// Instances in the cluster.
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

fn singular(word: &str) -> String {
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.chars().count() >= 2 {
            return format!("{stem}y");
        }
    }
    let keep = ["ss", "us", "sis", "as", "os"].iter().any(|s| word.ends_with(s));
    match word.strip_suffix('s') {
        Some(stem) if !keep && stem.chars().count() >= 2 => stem.to_string(),
        _ => word.to_string(),
    }
}

/// Case-folded tokens without articles or punctuation, each singularized.
pub fn normalize_target(raw: &str) -> String {
    folded_tokens(raw)
        .iter()
        .filter(|t| !ARTICLES.contains(&t.as_str()))
        .map(|t| singular(t))
        .collect::<Vec<_>>()
        .join(" ")
}

fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clustering of target strings. Targets that normalize to nothing are ignored.
pub fn cluster_targets<'a>(targets: impl IntoIterator<Item = &'a str>, region: Option<Region>) -> Vec<TargetCluster> {
    // normal form -> (instance count, raw members)
    let mut forms: BTreeMap<String, (usize, BTreeSet<String>)> = BTreeMap::new();
    for raw in targets {
        let n = normalize_target(raw);
        if n.is_empty() {
            continue;
        }
        let e = forms.entry(n).or_default();
        e.0 += 1;
        e.1.insert(raw.trim().to_string());
    }
    let keys: Vec<&String> = forms.keys().collect();
    let sets: Vec<BTreeSet<&str>> = keys.iter().map(|k| k.split(' ').collect()).collect();
    let mut parent: Vec<usize> = (0..keys.len()).collect();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if jaccard(&sets[i], &sets[j]) >= JACCARD_THRESHOLD {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..keys.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut clusters: Vec<TargetCluster> = groups
        .into_values()
        .map(|idx| {
            let mut members = BTreeSet::new();
            let mut count = 0;
            let mut best: Option<(usize, &str)> = None;
            for i in idx {
                let (n, raws) = &forms[keys[i]];
                count += n;
                members.extend(raws.iter().cloned());
                // Most frequent normal form; keys ascend so the first wins ties.
                if best.map_or(true, |(bn, _)| *n > bn) {
                    best = Some((*n, keys[i].as_str()));
                }
            }
            TargetCluster {
                canonical_label: best.map(|b| b.1.to_string()).unwrap_or_default(),
                members: members.into_iter().collect(),
                count,
                region,
            }
        })
        .collect();
    clusters.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.canonical_label.cmp(&b.canonical_label)));
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    #[test]
    fn normal_forms() {
        assert_eq!(normalize_target("the Hamas"), "hamas");
        assert_eq!(normalize_target("Hamas militants!"), "hamas militant");
        assert_eq!(normalize_target("Israelis"), "israeli");
        assert_eq!(normalize_target("the authorities"), "authority");
        assert_eq!(normalize_target("\"the\""), "");
    }

    #[test]
    fn hamas_variants_merge() {
        let c = cluster_targets(["Hamas", "Hamas militants", "the Hamas"], None);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].canonical_label, "hamas");
        assert_eq!(c[0].count, 3);
        assert_eq!(c[0].members, vec!["Hamas", "Hamas militants", "the Hamas"]);
    }

    #[test]
    fn disjoint_targets_stay_apart() {
        let c = cluster_targets(["Israel", "Israeli government", "Hamas"], Some(Region::UK));
        // No normal-form token is shared, so nothing merges; "israeli" is not folded into "israel".
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|c| c.count == 1 && c.region == Some(Region::UK)));
        let c = cluster_targets(["Israel", "Israeli army", "the Israeli armies", "Hamas"], None);
        assert_eq!(c.len(), 3);
        assert_eq!((c[0].canonical_label.as_str(), c[0].count), ("israeli army", 2));
        assert!(cluster_targets([], None).is_empty());
    }

    #[test]
    fn chain_merges_through_single_linkage() {
        // a~ab (1/2), ab~b (1/2), a vs b never compared directly.
        let c = cluster_targets(["alpha", "alpha beta", "beta", "beta"], None);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].canonical_label, "beta");
        assert_eq!(c[0].count, 4);
    }

    proptest! {
        #[test]
        fn permutation_invariant(words in proptest::collection::vec(
            proptest::sample::select(vec!["Hamas", "Hamas fighters", "Israel", "Israeli army", "the army", "Gaza", "civilians", "the civilian"]), 0..20),
            seed in any::<u64>())
        {
            let base = cluster_targets(words.iter().copied(), None);
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(cluster_targets(shuffled.iter().copied(), None), base.clone());
            prop_assert_eq!(base.iter().map(|c| c.count).sum::<usize>(), words.len());
        }
    }
}
