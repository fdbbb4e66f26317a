//! Numeric graphs for learning: four relation-grouping levels, two edge
//! directionalities, bag-of-words node features and facet ablation.
//!
//! Node 0 is always the patient. In directed graphs messages flow towards
//! the patient: a leaf is the source of its edge and the patient (or, in V4,
//! the leaf's group node) is the target. Undirected graphs add every edge in
//! the reverse direction under the same relation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pkg::{FacetCategory, HspoSchema, Relation, TripleGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Version {
    V1,
    V2,
    V3,
    V4,
}

impl Version {
    pub const ALL: [Version; 4] = [Version::V1, Version::V2, Version::V3, Version::V4];

    pub fn name(self) -> &'static str {
        match self {
            Version::V1 => "v1",
            Version::V2 => "v2",
            Version::V3 => "v3",
            Version::V4 => "v4",
        }
    }
}

impl FromStr for Version {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Version::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown graph version {s:?} (expected v1, v2, v3 or v4)")))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Directed,
    Undirected,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Directed, Direction::Undirected];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Directed => "directed",
            Direction::Undirected => "undirected",
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Direction::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown direction {s:?} (expected directed or undirected)")))
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphVersion {
    pub version: Version,
    pub direction: Direction,
}

impl GraphVersion {
    pub fn new(version: Version, direction: Direction) -> Self {
        GraphVersion { version, direction }
    }

    pub fn all() -> impl Iterator<Item = GraphVersion> {
        Version::ALL.into_iter().flat_map(|v| Direction::ALL.into_iter().map(move |d| GraphVersion::new(v, d)))
    }
}

impl fmt::Display for GraphVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.version, self.direction)
    }
}

/// Relation types of a graph version, in the order models index them.
pub fn relation_set(version: Version) -> Vec<Relation> {
    match version {
        Version::V1 => Relation::PATIENT_RELATIONS.to_vec(),
        Version::V2 => {
            vec![Relation::HasDisease, Relation::HasIntervention, Relation::HasSocialContext, Relation::HasDemographics]
        }
        Version::V3 => vec![Relation::Has],
        Version::V4 => std::iter::once(Relation::Has).chain(Relation::PATIENT_RELATIONS).collect(),
    }
}

/// Descriptor phrases of the patient and group nodes; always in the vocabulary.
pub const DESCRIPTOR_PHRASES: [&str; 8] =
    ["patient", "social context", "diseases", "interventions", "medication", "procedures", "demographics", "age"];

/// Lowercased alphanumeric runs of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Token → column index, assigned in sorted token order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn from_descriptions<'a>(descriptions: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<String> =
            descriptions.into_iter().chain(DESCRIPTOR_PHRASES).flat_map(|d| tokenize(d).collect::<Vec<_>>()).collect();
        Self::from_tokens(set.into_iter().collect())
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Restores the lookup index after deserialization.
    pub fn reindexed(self) -> Self {
        Self::from_tokens(self.tokens)
    }
}

/// Vocabulary over every node description of a corpus plus the descriptor words.
pub fn build_vocabulary(graphs: &[TripleGraph]) -> Result<Vocabulary> {
    if graphs.is_empty() {
        return Err(Error::validation("cannot build a vocabulary from an empty corpus"));
    }
    Ok(Vocabulary::from_descriptions(graphs.iter().flat_map(|g| g.node_meta.values().map(|m| m.description.as_str()))))
}

/// Sparse bag-of-words vector: sorted (column, count) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bow {
    pub entries: Vec<(u32, u32)>,
    /// Tokens dropped because they are not in the vocabulary.
    pub oov: usize,
}

impl Bow {
    pub fn to_dense(&self, dim: usize) -> Vec<u32> {
        let mut v = vec![0; dim];
        for &(c, n) in &self.entries {
            v[c as usize] = n;
        }
        v
    }
}

pub fn bow_features(description: &str, vocab: &Vocabulary) -> Bow {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    let mut oov = 0;
    for token in tokenize(description) {
        match vocab.get(&token) {
            Some(i) => *counts.entry(i as u32).or_default() += 1,
            None => oov += 1,
        }
    }
    if oov > 0 {
        log::warn!("{oov} out-of-vocabulary token(s) in {description:?}");
    }
    Bow { entries: counts.into_iter().collect(), oov }
}

/// Edges of one relation as parallel source/target arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub relation: Relation,
    pub source: Vec<u32>,
    pub target: Vec<u32>,
}

impl EdgeList {
    fn new(relation: Relation) -> Self {
        EdgeList { relation, source: Vec::new(), target: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.source.iter().zip(&self.target).map(|(&s, &t)| (s as usize, t as usize))
    }

    fn push(&mut self, source: usize, target: usize) {
        self.source.push(source as u32);
        self.target.push(target as u32);
    }
}

/// The trainable form of one admission graph.
///
/// Serialized as one JSON object: header fields, `features` as sparse rows in
/// row-major order (`[[column, count], ...]` per node) and `edges` as one
/// source/target array pair per relation of the version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericGraph {
    pub id: String,
    pub version: Version,
    pub direction: Direction,
    pub n_nodes: usize,
    pub vocab_size: usize,
    pub patient_index: usize,
    pub label: u8,
    pub node_facets: Vec<FacetCategory>,
    pub features: Vec<Vec<(u32, u32)>>,
    /// One list per entry of `relation_set(version)`, in that order.
    pub edges: Vec<EdgeList>,
}

impl NumericGraph {
    pub fn graph_version(&self) -> GraphVersion {
        GraphVersion::new(self.version, self.direction)
    }

    pub fn n_relations(&self) -> usize {
        self.edges.len()
    }

    pub fn dense_features(&self) -> Vec<Vec<u32>> {
        self.features.iter().map(|row| Bow { entries: row.clone(), oov: 0 }.to_dense(self.vocab_size)).collect()
    }

    /// Checks the structural invariants of the container.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::validation(format!("graph {}: {msg}", self.id)));
        if self.features.len() != self.n_nodes || self.node_facets.len() != self.n_nodes {
            return bad("row counts disagree with n_nodes".into());
        }
        if self.patient_index >= self.n_nodes || self.node_facets[self.patient_index] != FacetCategory::Patient {
            return bad("patient index does not point at the patient node".into());
        }
        if self.label > 1 {
            return bad(format!("label {} is not binary", self.label));
        }
        if self.features.iter().flatten().any(|&(c, _)| c as usize >= self.vocab_size) {
            return bad("feature column beyond vocabulary".into());
        }
        let relations: Vec<Relation> = self.edges.iter().map(|e| e.relation).collect();
        if relations != relation_set(self.version) {
            return bad(format!("relations {relations:?} do not match version {}", self.version));
        }
        for list in &self.edges {
            if list.source.len() != list.target.len() {
                return bad(format!("ragged edge arrays for {}", list.relation));
            }
            if list.iter().any(|(s, t)| s >= self.n_nodes || t >= self.n_nodes) {
                return bad(format!("edge endpoint out of range under {}", list.relation));
            }
            match self.direction {
                Direction::Undirected => {
                    let mut fwd: Vec<(usize, usize)> = list.iter().collect();
                    let mut rev: Vec<(usize, usize)> = list.iter().map(|(s, t)| (t, s)).collect();
                    fwd.sort_unstable();
                    rev.sort_unstable();
                    if fwd != rev {
                        return bad(format!("edges under {} are not symmetric", list.relation));
                    }
                }
                Direction::Directed if self.version != Version::V4 => {
                    if list.iter().any(|(_, t)| t != self.patient_index) {
                        return bad(format!("directed edge under {} misses the patient", list.relation));
                    }
                }
                Direction::Directed => {}
            }
        }
        Ok(())
    }
}

/// V4 group nodes, in node order after the leaves.
const GROUPS: [&str; 7] =
    ["diseases", "social context", "demographics", "age", "interventions", "procedures", "medication"];

fn group_of(category: FacetCategory) -> usize {
    match category {
        FacetCategory::Disease => 0,
        FacetCategory::Social => 1,
        FacetCategory::Age => 3,
        FacetCategory::Procedure => 5,
        FacetCategory::Medication => 6,
        // remaining demographic leaves hang off the Demographics group
        _ => 2,
    }
}

/// Converts a labeled knowledge graph into the numeric form of `gv`.
pub fn to_numeric(graph: &TripleGraph, gv: GraphVersion, vocab: &Vocabulary) -> Result<NumericGraph> {
    let label = graph.label.ok_or_else(|| Error::contract(format!("graph {} carries no label", graph.patient)))?;
    let schema = HspoSchema;
    let relations = relation_set(gv.version);
    let rel_index = |r: Relation| relations.iter().position(|&x| x == r).expect("relation belongs to version");
    let mut edges: Vec<EdgeList> = relations.iter().map(|&r| EdgeList::new(r)).collect();

    let mut descriptions = vec!["patient".to_string()];
    let mut facets = vec![FacetCategory::Patient];
    let leaves: Vec<FacetCategory> = graph.leaves().map(|(_, m)| m.category).collect();
    for (_, meta) in graph.leaves() {
        descriptions.push(meta.description.clone());
        facets.push(meta.category);
    }
    let patient = 0;
    let mut add = |rel: Relation, source: usize, target: usize| edges[rel_index(rel)].push(source, target);

    match gv.version {
        Version::V1 | Version::V2 | Version::V3 => {
            for (i, &category) in leaves.iter().enumerate() {
                let v1 = schema.relation_for(category).expect("leaf categories map to a relation");
                let rel = match gv.version {
                    Version::V1 => v1,
                    Version::V2 if category.is_demographic() => Relation::HasDemographics,
                    Version::V2 => v1,
                    _ => Relation::Has,
                };
                add(rel, i + 1, patient);
            }
        }
        Version::V4 => {
            let first_group = descriptions.len();
            for g in GROUPS {
                descriptions.push(g.to_string());
                facets.push(FacetCategory::Group);
            }
            let group = |k: usize| first_group + k;
            for k in [0, 1, 2, 4] {
                add(Relation::Has, group(k), patient);
            }
            add(Relation::Has, group(3), group(2));
            add(Relation::Has, group(5), group(4));
            add(Relation::Has, group(6), group(4));
            for (i, &category) in leaves.iter().enumerate() {
                let rel = schema.relation_for(category).expect("leaf categories map to a relation");
                add(rel, i + 1, group(group_of(category)));
            }
        }
    }

    if gv.direction == Direction::Undirected {
        for list in &mut edges {
            let n = list.len();
            for e in 0..n {
                let (s, t) = (list.source[e], list.target[e]);
                list.source.push(t);
                list.target.push(s);
            }
        }
    }

    let features = descriptions.iter().map(|d| bow_features(d, vocab).entries).collect();
    Ok(NumericGraph {
        id: graph.admission_id(),
        version: gv.version,
        direction: gv.direction,
        n_nodes: descriptions.len(),
        vocab_size: vocab.len(),
        patient_index: patient,
        label: u8::from(label),
        node_facets: facets,
        features,
        edges,
    })
}

/// Facets that can be removed for ablation studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationFacet {
    Social,
    Medication,
    Procedures,
    Diseases,
    Demographics,
}

impl AblationFacet {
    pub const ALL: [AblationFacet; 5] = [
        AblationFacet::Social,
        AblationFacet::Medication,
        AblationFacet::Procedures,
        AblationFacet::Diseases,
        AblationFacet::Demographics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationFacet::Social => "social",
            AblationFacet::Medication => "medication",
            AblationFacet::Procedures => "procedures",
            AblationFacet::Diseases => "diseases",
            AblationFacet::Demographics => "demographics",
        }
    }

    pub fn covers(self, category: FacetCategory) -> bool {
        match self {
            AblationFacet::Social => category == FacetCategory::Social,
            AblationFacet::Medication => category == FacetCategory::Medication,
            AblationFacet::Procedures => category == FacetCategory::Procedure,
            AblationFacet::Diseases => category == FacetCategory::Disease,
            AblationFacet::Demographics => category.is_demographic(),
        }
    }
}

impl FromStr for AblationFacet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("patient") {
            return Err(Error::config("the patient node cannot be ablated"));
        }
        AblationFacet::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown ablation facet {s:?}")))
    }
}

impl fmt::Display for AblationFacet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses facet names; `"patient"` and unknown names are errors.
pub fn parse_facets<S: AsRef<str>>(names: &[S]) -> Result<BTreeSet<AblationFacet>> {
    names.iter().map(|n| n.as_ref().parse()).collect()
}

/// Removes every node of the given facets with its incident edges and
/// renumbers the remaining nodes densely, preserving their order.
pub fn ablate(graph: &NumericGraph, facets: &BTreeSet<AblationFacet>) -> NumericGraph {
    let keep: Vec<bool> =
        graph.node_facets.iter().map(|&c| c == FacetCategory::Patient || !facets.iter().any(|f| f.covers(c))).collect();
    let mut new_index = vec![usize::MAX; graph.n_nodes];
    let mut next = 0;
    for (i, &k) in keep.iter().enumerate() {
        if k {
            new_index[i] = next;
            next += 1;
        }
    }
    let edges = graph
        .edges
        .iter()
        .map(|list| {
            let mut out = EdgeList::new(list.relation);
            for (s, t) in list.iter() {
                if keep[s] && keep[t] {
                    out.push(new_index[s], new_index[t]);
                }
            }
            out
        })
        .collect();
    NumericGraph {
        id: graph.id.clone(),
        version: graph.version,
        direction: graph.direction,
        n_nodes: next,
        vocab_size: graph.vocab_size,
        patient_index: new_index[graph.patient_index],
        label: graph.label,
        node_facets: kept(&graph.node_facets, &keep),
        features: kept(&graph.features, &keep),
        edges,
    }
}

fn kept<T: Clone>(values: &[T], keep: &[bool]) -> Vec<T> {
    values.iter().zip(keep).filter(|(_, &k)| k).map(|(v, _)| v.clone()).collect()
}

pub fn write_numeric_jsonl<W: Write>(mut out: W, graphs: &[NumericGraph]) -> Result<()> {
    for g in graphs {
        serde_json::to_writer(&mut out, g)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_numeric_jsonl<R: BufRead>(input: R) -> Result<Vec<NumericGraph>> {
    let mut graphs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let g: NumericGraph =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        g.validate()?;
        graphs.push(g);
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pkg::{build_pkg, NodeId, Object, Predicate, Triple};
    use crate::record::{AdmissionRecord, CodedEntry, Gender, Medication};

    fn one_disease_graph() -> TripleGraph {
        let patient = NodeId::patient("A1");
        let triple = Triple {
            subject: patient.clone(),
            predicate: Predicate::Relation(Relation::HasDisease),
            object: Object::Node(NodeId::disease("584")),
        };
        TripleGraph::new(patient, [triple], Some(true))
    }

    fn full_graph() -> TripleGraph {
        let mut r = AdmissionRecord::bare("P1", "A7", 0, 2, 55);
        r.gender = Some(Gender::Male);
        r.marital_status = Some("single".into());
        r.religion = Some("jewish".into());
        r.ethnicity = Some("asian".into());
        r.diagnoses = vec![CodedEntry::new("428", "heart failure"), CodedEntry::new("584", "acute kidney failure")];
        r.procedures = vec![CodedEntry::new("967", "other continuous invasive mechanical ventilation")];
        r.medications = vec![Medication { name: "Heparin".into() }, Medication { name: "Furosemide".into() }];
        r.employment = Some("unemployed".into());
        r.housing = Some("homeless".into());
        r.household = Some("lives alone".into());
        r.readmitted_within_window = Some(false);
        build_pkg(&r, &HspoSchema).unwrap()
    }

    fn vocab_for(graphs: &[TripleGraph]) -> Vocabulary {
        build_vocabulary(graphs).unwrap()
    }

    #[test]
    fn relation_cardinalities() {
        assert_eq!(relation_set(Version::V1).len(), 8);
        assert_eq!(relation_set(Version::V2).len(), 4);
        assert_eq!(relation_set(Version::V3), vec![Relation::Has]);
        assert!(relation_set(Version::V2).contains(&Relation::HasDemographics));
        assert_eq!(relation_set(Version::V4).len(), 9);
    }

    #[test]
    fn vocabulary_from_single_description() {
        let v = Vocabulary::from_descriptions(["acute renal failure"]);
        let descriptor_tokens: BTreeSet<String> = DESCRIPTOR_PHRASES.iter().flat_map(|p| tokenize(p)).collect();
        assert_eq!(descriptor_tokens.len(), 9);
        assert_eq!(v.len(), 3 + 9);
        let twice = Vocabulary::from_descriptions(["acute renal failure", "acute renal failure"]);
        assert_eq!(twice, v);
        let shuffled = Vocabulary::from_descriptions(["failure renal acute"]);
        assert_eq!(shuffled, v);
        assert!(build_vocabulary(&[]).is_err());
    }

    #[test]
    fn bow_counts() {
        let v = Vocabulary::from_descriptions(["acute renal failure"]);
        assert_eq!(bow_features("", &v).to_dense(v.len()), vec![0; v.len()]);
        let b = bow_features("Acute acute failure, xyzzy", &v);
        let dense = b.to_dense(v.len());
        assert_eq!(dense[v.get("acute").unwrap()], 2);
        assert_eq!(dense[v.get("failure").unwrap()], 1);
        assert_eq!(dense.iter().sum::<u32>(), 3);
        assert_eq!(b.oov, 1);
    }

    #[test]
    fn v3_directed_minimal() {
        let g = one_disease_graph();
        let v = vocab_for(std::slice::from_ref(&g));
        let n = to_numeric(&g, GraphVersion::new(Version::V3, Direction::Directed), &v).unwrap();
        assert_eq!(n.n_nodes, 2);
        assert_eq!(n.edges.len(), 1);
        assert_eq!(n.edges[0].relation, Relation::Has);
        assert_eq!(n.edges[0].iter().collect::<Vec<_>>(), vec![(1, 0)]);
        assert_eq!(n.label, 1);
        n.validate().unwrap();
    }

    #[test]
    fn every_version_validates() {
        let g = full_graph();
        let v = vocab_for(std::slice::from_ref(&g));
        for gv in GraphVersion::all() {
            let n = to_numeric(&g, gv, &v).unwrap();
            n.validate().unwrap();
            assert_eq!(n.vocab_size, v.len());
            if gv.direction == Direction::Directed && gv.version != Version::V4 {
                assert!(n.edges.iter().flat_map(|l| l.iter()).all(|(_, t)| t == n.patient_index));
            }
        }
    }

    #[test]
    fn v4_adds_seven_group_nodes() {
        let g = full_graph();
        let v = vocab_for(std::slice::from_ref(&g));
        let leaves = g.leaves().count();
        let n = to_numeric(&g, GraphVersion::new(Version::V4, Direction::Directed), &v).unwrap();
        assert_eq!(n.n_nodes, leaves + 7 + 1);
        assert_eq!(n.node_facets.iter().filter(|&&c| c == FacetCategory::Group).count(), 7);
        // every node has exactly one outgoing edge except the patient
        let mut out_degree = vec![0; n.n_nodes];
        for (s, _) in n.edges.iter().flat_map(|l| l.iter()) {
            out_degree[s] += 1;
        }
        assert_eq!(out_degree[0], 0);
        assert!(out_degree[1..].iter().all(|&d| d == 1));
    }

    #[test]
    fn v2_groups_demographics() {
        let g = full_graph();
        let v = vocab_for(std::slice::from_ref(&g));
        let n = to_numeric(&g, GraphVersion::new(Version::V2, Direction::Undirected), &v).unwrap();
        let demo = n.edges.iter().find(|l| l.relation == Relation::HasDemographics).unwrap();
        // gender, marital, religion, ethnicity, age; both directions
        assert_eq!(demo.len(), 10);
    }

    #[test]
    fn ablation() {
        let g = one_disease_graph();
        let v = vocab_for(std::slice::from_ref(&g));
        let n = to_numeric(&g, GraphVersion::new(Version::V1, Direction::Undirected), &v).unwrap();
        assert_eq!(ablate(&n, &BTreeSet::new()), n);
        let only_patient = ablate(&n, &parse_facets(&["diseases"]).unwrap());
        assert_eq!(only_patient.n_nodes, 1);
        assert!(only_patient.edges.iter().all(EdgeList::is_empty));
        only_patient.validate().unwrap();

        let g = full_graph();
        let v = vocab_for(std::slice::from_ref(&g));
        for gv in GraphVersion::all() {
            let n = to_numeric(&g, gv, &v).unwrap();
            let removed = parse_facets(&["medication", "procedures"]).unwrap();
            let a = ablate(&n, &removed);
            a.validate().unwrap();
            assert!(a.node_facets.iter().all(|&c| !removed.iter().any(|f| f.covers(c))));
            assert_eq!(a.n_nodes, n.n_nodes - 3);
        }
    }

    #[test]
    fn patient_facet_cannot_be_ablated() {
        assert!(parse_facets(&["patient"]).is_err());
        assert!(parse_facets(&["income"]).is_err());
        assert!("Diseases".parse::<AblationFacet>().is_ok());
    }

    #[test]
    fn container_round_trip() {
        let g = full_graph();
        let v = vocab_for(std::slice::from_ref(&g));
        let graphs: Vec<_> = GraphVersion::all().map(|gv| to_numeric(&g, gv, &v).unwrap()).collect();
        let mut buf = Vec::new();
        write_numeric_jsonl(&mut buf, &graphs).unwrap();
        assert_eq!(read_numeric_jsonl(buf.as_slice()).unwrap(), graphs);

        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str::<Vocabulary>(&json).unwrap().reindexed();
        assert_eq!(back, v);
    }

    #[test]
    fn unknown_version_is_an_error() {
        assert!("v5".parse::<Version>().is_err());
        assert_eq!("V3".parse::<Version>().unwrap(), Version::V3);
        assert!("sideways".parse::<Direction>().is_err());
    }
}
