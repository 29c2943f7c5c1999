//! Knowledge-graph storage: triple ingestion, the canonical relation
//! vocabulary and per-run fractional sampling.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type RelationId = usize;

/// The 35 relation names admitted under strict loading.
pub const RELATIONS: [&str; 35] = [
    "Antonym",
    "DistinctFrom",
    "EtymologicallyRelatedTo",
    "LocatedNear",
    "RelatedTo",
    "SimilarTo",
    "Synonym",
    "AtLocation",
    "CapableOf",
    "Causes",
    "CausesDesire",
    "CreatedBy",
    "DefinedAs",
    "DerivedFrom",
    "Desires",
    "Entails",
    "ExternalURL",
    "FormOf",
    "HasA",
    "HasContext",
    "HasFirstSubevent",
    "HasLastSubevent",
    "HasPrerequisite",
    "HasProperty",
    "InstanceOf",
    "IsA",
    "MadeOf",
    "MannerOf",
    "MotivatedByGoal",
    "ObstructedBy",
    "PartOf",
    "ReceivesAction",
    "SenseOf",
    "SymbolOf",
    "UsedFor",
];

/// Lookup over [`RELATIONS`]; ids are positions in that list.
#[derive(Clone, Copy, Debug, Default)]
pub struct RelationVocabulary;

impl RelationVocabulary {
    pub fn len(&self) -> usize {
        RELATIONS.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> &'static [&'static str] {
        &RELATIONS
    }

    /// Case-insensitive match returning the canonical spelling.
    pub fn canonical(&self, name: &str) -> Option<&'static str> {
        RELATIONS.iter().copied().find(|r| r.eq_ignore_ascii_case(name))
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        RELATIONS.iter().position(|r| r.eq_ignore_ascii_case(name))
    }
}

/// Lowercases and joins whitespace-separated pieces with underscores.
pub fn normalize_node(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: NodeId,
    pub relation: RelationId,
    pub tail: NodeId,
}

/// Bidirectional string <-> id map with ids in sorted string order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    fn from_sorted(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Vocab { names, index }
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Immutable, deduplicated triple store.
///
/// Node and relation ids follow sorted string order, so the id-ordered triple
/// list is also the lexicographic `(head, relation, tail)` order of the
/// surface strings. Two graphs built from the same set of triples are equal
/// regardless of input order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    nodes: Vocab,
    relations: Vocab,
    triples: Vec<Triple>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl KnowledgeGraph {
    /// Builds a graph from `(head, relation, tail)` strings. Node names are
    /// normalized, known relation names are canonicalized, duplicates merge.
    pub fn from_triples<I, H, R, T>(triples: I) -> Self
    where
        I: IntoIterator<Item = (H, R, T)>,
        H: AsRef<str>,
        R: AsRef<str>,
        T: AsRef<str>,
    {
        let vocab = RelationVocabulary;
        let set: BTreeSet<(String, String, String)> = triples
            .into_iter()
            .map(|(h, r, t)| {
                let r = r.as_ref().trim();
                let rel = vocab.canonical(r).map_or_else(|| r.to_string(), str::to_string);
                (normalize_node(h.as_ref()), rel, normalize_node(t.as_ref()))
            })
            .collect();
        Self::from_normalized(set)
    }

    fn from_normalized(set: BTreeSet<(String, String, String)>) -> Self {
        let node_set: BTreeSet<&String> = set.iter().flat_map(|(h, _, t)| [h, t]).collect();
        let rel_set: BTreeSet<&String> = set.iter().map(|(_, r, _)| r).collect();
        let nodes = Vocab::from_sorted(node_set.into_iter().cloned().collect());
        let relations = Vocab::from_sorted(rel_set.into_iter().cloned().collect());
        let triples: Vec<Triple> = set
            .iter()
            .map(|(h, r, t)| Triple {
                head: nodes.index[h],
                relation: relations.index[r],
                tail: nodes.index[t],
            })
            .collect();
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (i, t) in triples.iter().enumerate() {
            out_edges[t.head].push(i);
            in_edges[t.tail].push(i);
        }
        KnowledgeGraph {
            nodes,
            relations,
            triples,
            out_edges,
            in_edges,
        }
    }

    pub fn nodes(&self) -> &Vocab {
        &self.nodes
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.id(name)
    }

    pub fn node_name(&self, id: NodeId) -> Option<&str> {
        self.nodes.name(id)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.id(name)
    }

    pub fn relation_name(&self, id: RelationId) -> Option<&str> {
        self.relations.name(id)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.binary_search(triple).is_ok()
    }

    /// Indices into [`triples`](Self::triples) of edges leaving `node`.
    pub fn out_edges(&self, node: NodeId) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[usize] {
        &self.in_edges[node]
    }

    /// Undirected neighbours of `node`, with repetition for parallel edges.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let outs = self.out_edges[node].iter().map(|&i| self.triples[i].tail);
        let ins = self.in_edges[node].iter().map(|&i| self.triples[i].head);
        outs.chain(ins)
    }

    /// Number of triples incident to `node`; a self-loop counts once.
    pub fn degree(&self, node: NodeId) -> Result<usize> {
        if node >= self.num_nodes() {
            return Err(Error::Lookup(format!("node id {node}")));
        }
        let loops = self.out_edges[node]
            .iter()
            .filter(|&&i| self.triples[i].tail == node)
            .count();
        Ok(self.out_edges[node].len() + self.in_edges[node].len() - loops)
    }

    pub fn named(&self, t: &Triple) -> (&str, &str, &str) {
        (
            &self.nodes.names[t.head],
            &self.relations.names[t.relation],
            &self.nodes.names[t.tail],
        )
    }

    /// Triples as tab-separated lines in canonical order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            let (h, r, tl) = self.named(t);
            out.push_str(h);
            out.push('\t');
            out.push_str(r);
            out.push('\t');
            out.push_str(tl);
            out.push('\n');
        }
        out
    }

    /// Keeps `round(fraction * |triples|)` triples chosen uniformly without
    /// replacement. The draw indexes the canonical triple order, so the
    /// result depends only on the triple set, `fraction` and `seed`.
    pub fn sample_fraction(&self, fraction: f64, seed: u64) -> Result<KnowledgeGraph> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Argument(format!(
                "sample fraction must lie in (0, 1], got {fraction}"
            )));
        }
        let n = self.triples.len();
        let k = ((fraction * n as f64).round() as usize).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
        picked.sort_unstable();
        let set = picked
            .into_iter()
            .map(|i| {
                let (h, r, t) = self.named(&self.triples[i]);
                (h.to_string(), r.to_string(), t.to_string())
            })
            .collect();
        Ok(Self::from_normalized(set))
    }
}

/// Summary of a triple-file load.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub skipped: usize,
    pub duplicates: usize,
    pub triples: usize,
    pub nodes: usize,
    pub relations: usize,
    /// `(line number, relation)` for relations outside [`RELATIONS`], admitted
    /// because strict mode was off.
    pub flagged: Vec<(usize, String)>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lines = {}", self.lines)?;
        writeln!(f, "skipped = {}", self.skipped)?;
        writeln!(f, "triples = {}", self.triples)?;
        writeln!(f, "nodes = {}", self.nodes)?;
        writeln!(f, "relations = {}", self.relations)?;
        writeln!(f, "duplicates = {}", self.duplicates)?;
        writeln!(f, "rejected = 0")?;
        writeln!(f, "flagged = {}", self.flagged.len())?;
        for (line, rel) in &self.flagged {
            writeln!(f, "flagged.{line} = {rel}")?;
        }
        Ok(())
    }
}

/// Parses `head<TAB>relation<TAB>tail` lines; `#` lines and blank lines are
/// skipped.
pub fn parse_triples(text: &str, strict_relations: bool) -> Result<(KnowledgeGraph, LoadReport)> {
    let vocab = RelationVocabulary;
    let mut report = LoadReport::default();
    let mut set = BTreeSet::new();
    let mut seen = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        report.lines += 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            report.skipped += 1;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [h, r, t] = fields[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        let (h, r, t) = (normalize_node(h), r.trim(), normalize_node(t));
        if h.is_empty() || r.is_empty() || t.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty field".into(),
            });
        }
        let rel = match vocab.canonical(r) {
            Some(c) => c.to_string(),
            None if strict_relations => return Err(Error::UnknownRelation(r.to_string())),
            None => {
                report.flagged.push((line_no, r.to_string()));
                r.to_string()
            }
        };
        seen += 1;
        set.insert((h, rel, t));
    }
    report.duplicates = seen - set.len();
    let kg = KnowledgeGraph::from_normalized(set);
    report.triples = kg.num_triples();
    report.nodes = kg.num_nodes();
    report.relations = kg.num_relations();
    Ok((kg, report))
}

pub fn load_triples(path: impl AsRef<Path>, strict_relations: bool) -> Result<(KnowledgeGraph, LoadReport)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text, strict_relations)
}
