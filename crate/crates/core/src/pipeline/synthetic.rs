//! A sentence-pair task whose labels are a function of the knowledge graph
//! only.
//!
//! Entities are random letter strings arranged in groups; every member of a
//! group is an `IsA` child of the group's concept node and a few members are
//! also `Synonym`s of each other. Concepts are tied together by `Antonym` and
//! `RelatedTo` edges, which never count towards a label. A pair
//! `a [SEP] b` is labeled 1 exactly when `a` and `b` are joined by a path of
//! at most two `Synonym`/`IsA` edges (direction ignored).

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeId};

use super::data::TaskExample;

pub const MIN_ENTITIES: usize = 8;
pub const MIN_EXAMPLES: usize = 16;

/// Relations whose paths decide the label.
pub const LABEL_RELATIONS: [&str; 2] = ["Synonym", "IsA"];
pub const LABEL_HOPS: usize = 2;

fn random_name<R: Rng>(rng: &mut R, taken: &mut HashSet<String>) -> String {
    loop {
        let name: String = (0..6).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
        if taken.insert(name.clone()) {
            return name;
        }
    }
}

/// Nodes reachable from `start` within `LABEL_HOPS` undirected
/// `Synonym`/`IsA` edges, excluding `start`.
pub(crate) fn label_reachable(kg: &KnowledgeGraph, start: NodeId) -> BTreeSet<NodeId> {
    let allowed: Vec<bool> = (0..kg.num_relations())
        .map(|r| LABEL_RELATIONS.contains(&kg.relation_name(r).unwrap_or("")))
        .collect();
    let mut frontier = vec![start];
    let mut seen = BTreeSet::from([start]);
    for _ in 0..LABEL_HOPS {
        let mut next = Vec::new();
        for &u in &frontier {
            let edges = kg.out_edges(u).iter().chain(kg.in_edges(u));
            for &ti in edges {
                let t = kg.triples()[ti];
                if !allowed[t.relation] {
                    continue;
                }
                let v = if t.head == u { t.tail } else { t.head };
                if seen.insert(v) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    seen.remove(&start);
    seen
}

/// Builds the graph and `n_examples` class-balanced pairs over `n_entities`
/// named entities (concept nodes come on top of those).
pub fn generate_synthetic_task(
    n_entities: usize,
    n_examples: usize,
    seed: u64,
) -> Result<(Vec<TaskExample>, KnowledgeGraph)> {
    if n_entities < MIN_ENTITIES {
        return Err(Error::Argument(format!(
            "n_entities must be >= {MIN_ENTITIES}, got {n_entities}"
        )));
    }
    if n_examples < MIN_EXAMPLES {
        return Err(Error::Argument(format!(
            "n_examples must be >= {MIN_EXAMPLES}, got {n_examples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = HashSet::new();
    let group_size = if n_entities >= 20 { 5 } else { 4 };
    let n_groups = n_entities / group_size;

    let members: Vec<String> = (0..n_entities).map(|_| random_name(&mut rng, &mut taken)).collect();
    let concepts: Vec<String> = (0..n_groups).map(|_| random_name(&mut rng, &mut taken)).collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    let mut order: Vec<usize> = (0..n_entities).collect();
    order.shuffle(&mut rng);
    for (k, &m) in order.iter().enumerate() {
        groups[k % n_groups].push(m);
    }

    let mut triples: Vec<(String, &str, String)> = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        for &m in group {
            triples.push((members[m].clone(), "IsA", concepts[g].clone()));
        }
        triples.push((members[group[0]].clone(), "Synonym", members[group[1]].clone()));
    }
    for g in 0..n_groups {
        let next = (g + 1) % n_groups;
        if next != g {
            triples.push((concepts[g].clone(), "Antonym", concepts[next].clone()));
        }
        let other = rng.gen_range(0..n_groups);
        if other != g {
            triples.push((concepts[g].clone(), "RelatedTo", concepts[other].clone()));
        }
    }
    let kg = KnowledgeGraph::from_triples(triples.iter().map(|(h, r, t)| (h.as_str(), *r, t.as_str())));

    let ids: Vec<NodeId> = members
        .iter()
        .map(|m| kg.node_id(m).expect("member is a node"))
        .collect();
    let reach: Vec<BTreeSet<NodeId>> = ids.iter().map(|&id| label_reachable(&kg, id)).collect();
    let is_positive = |a: usize, b: usize| reach[a].contains(&ids[b]);

    let synonym = kg.relation_id("Synonym");
    let n_pos = n_examples / 2;
    let mut used = HashSet::new();
    let mut examples = Vec::with_capacity(n_examples);
    for k in 0..n_examples {
        let want = usize::from(k < n_pos);
        let mut chosen = None;
        // Prefer unseen ordered pairs; repeats are allowed once they run out.
        for attempt in 0..200 {
            let a = rng.gen_range(0..n_entities);
            let b = rng.gen_range(0..n_entities);
            if a == b || usize::from(is_positive(a, b)) != want {
                continue;
            }
            if used.insert((a, b)) || attempt >= 100 {
                chosen = Some((a, b));
                break;
            }
        }
        let Some((a, b)) = chosen else {
            return Err(Error::Argument("could not draw a balanced pair set".into()));
        };
        let mut ex = TaskExample::pair(&members[a], &members[b], want);
        if want == 1 {
            let direct = synonym.is_some_and(|s| {
                kg.out_edges(ids[a])
                    .iter()
                    .chain(kg.in_edges(ids[a]))
                    .map(|&i| kg.triples()[i])
                    .any(|t| t.relation == s && (t.head == ids[b] || t.tail == ids[b]))
            });
            ex.relation = Some(if direct { "Synonym" } else { "IsA" }.to_string());
        }
        examples.push(ex);
    }
    examples.shuffle(&mut rng);
    Ok((examples, kg))
}
