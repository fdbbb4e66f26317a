//! Star-shaped person-centric knowledge graphs under the HSPO schema.
//!
//! Every admission becomes one graph centred on a patient node. Leaf nodes are
//! identified by IRIs under [`RESOURCE_NAMESPACE`]:
//!
//! | path                         | facet category  | description source          |
//! |------------------------------|-----------------|-----------------------------|
//! | `patient/{admission_id}`     | patient         | the word "patient"          |
//! | `disease/{family}`           | disease         | diagnosis family table      |
//! | `procedure/{family}`         | procedure       | procedure family table      |
//! | `medication/{name}`          | medication      | percent-decoded name        |
//! | `employment\|housing\|household/{value}` | social | percent-decoded value   |
//! | `ethnicity/{value}`          | race_ethnicity  | percent-decoded value       |
//! | `religion/{value}`           | religion        | percent-decoded value       |
//! | `gender/{value}`             | gender          | percent-decoded value       |
//! | `marital/{value}`            | marital         | percent-decoded value       |
//! | `age/{decade}`               | age             | decade label, e.g. `60-69`  |
//!
//! Predicates live under [`NAMESPACE`]. The age node additionally carries the
//! integer data property `age_in_years`.

mod ntriples;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codes;
use crate::record::AdmissionRecord;
use crate::{Error, Result};

pub use ntriples::{parse_ntriples, serialize_ntriples};

pub const NAMESPACE: &str = "https://w3id.org/hspo/";
pub const RESOURCE_NAMESPACE: &str = "https://w3id.org/hspo/resource/";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "hasDisease")]
    HasDisease,
    #[serde(rename = "hasIntervention")]
    HasIntervention,
    #[serde(rename = "hasSocialContext")]
    HasSocialContext,
    #[serde(rename = "hasRaceOrEthnicity")]
    HasRaceOrEthnicity,
    #[serde(rename = "followsReligion")]
    FollowsReligion,
    #[serde(rename = "hasGender")]
    HasGender,
    #[serde(rename = "hasMaritalStatus")]
    HasMaritalStatus,
    #[serde(rename = "hasAge")]
    HasAge,
    #[serde(rename = "hasDemographics")]
    HasDemographics,
    #[serde(rename = "has")]
    Has,
}

impl Relation {
    /// The eight relations linking a patient to its facets.
    pub const PATIENT_RELATIONS: [Relation; 8] = [
        Relation::HasDisease,
        Relation::HasIntervention,
        Relation::HasSocialContext,
        Relation::HasRaceOrEthnicity,
        Relation::FollowsReligion,
        Relation::HasGender,
        Relation::HasMaritalStatus,
        Relation::HasAge,
    ];

    pub const ALL: [Relation; 10] = [
        Relation::HasDisease,
        Relation::HasIntervention,
        Relation::HasSocialContext,
        Relation::HasRaceOrEthnicity,
        Relation::FollowsReligion,
        Relation::HasGender,
        Relation::HasMaritalStatus,
        Relation::HasAge,
        Relation::HasDemographics,
        Relation::Has,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::HasDisease => "hasDisease",
            Relation::HasIntervention => "hasIntervention",
            Relation::HasSocialContext => "hasSocialContext",
            Relation::HasRaceOrEthnicity => "hasRaceOrEthnicity",
            Relation::FollowsReligion => "followsReligion",
            Relation::HasGender => "hasGender",
            Relation::HasMaritalStatus => "hasMaritalStatus",
            Relation::HasAge => "hasAge",
            Relation::HasDemographics => "hasDemographics",
            Relation::Has => "has",
        }
    }

    pub fn from_name(name: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Relation(Relation),
    AgeInYears,
}

impl Predicate {
    pub fn name(self) -> &'static str {
        match self {
            Predicate::Relation(r) => r.name(),
            Predicate::AgeInYears => "age_in_years",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        if name == "age_in_years" {
            Some(Predicate::AgeInYears)
        } else {
            Relation::from_name(name).map(Predicate::Relation)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetCategory {
    Disease,
    Medication,
    Procedure,
    Social,
    RaceEthnicity,
    Religion,
    Gender,
    Marital,
    Age,
    Group,
    Patient,
}

impl FacetCategory {
    /// True for the demographic leaves grouped under `hasDemographics`.
    pub fn is_demographic(self) -> bool {
        matches!(
            self,
            FacetCategory::RaceEthnicity
                | FacetCategory::Religion
                | FacetCategory::Gender
                | FacetCategory::Marital
                | FacetCategory::Age
        )
    }
}

/// Path of a resource below [`RESOURCE_NAMESPACE`], e.g. `disease/410`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(kind: &str, key: &str) -> Self {
        NodeId(format!("{kind}/{}", percent_encode(key)))
    }

    pub fn patient(admission_id: &str) -> Self {
        NodeId::new("patient", admission_id)
    }

    pub fn disease(family: &str) -> Self {
        NodeId::new("disease", family)
    }

    pub fn path(&self) -> &str {
        &self.0
    }

    pub fn iri(&self) -> String {
        format!("{RESOURCE_NAMESPACE}{}", self.0)
    }

    fn from_path(path: &str) -> Result<Self> {
        let (kind, key) = path
            .split_once('/')
            .ok_or_else(|| Error::validation(format!("resource path {path:?} lacks a kind segment")))?;
        if key.is_empty() || key.contains('/') {
            return Err(Error::validation(format!("malformed resource path {path:?}")));
        }
        category_of_kind(kind).ok_or_else(|| Error::validation(format!("unknown resource kind {kind:?}")))?;
        percent_decode(key)?;
        Ok(NodeId(path.to_string()))
    }

    fn kind(&self) -> &str {
        self.0.split_once('/').map_or("", |(k, _)| k)
    }

    fn key(&self) -> String {
        let raw = self.0.split_once('/').map_or("", |(_, k)| k);
        percent_decode(raw).expect("node ids hold valid percent encodings")
    }

    pub fn category(&self) -> FacetCategory {
        category_of_kind(self.kind()).expect("node ids have a known kind")
    }

    /// Description recovered from the identifier alone.
    fn derived_description(&self) -> String {
        let key = self.key();
        match self.kind() {
            "patient" => "patient".to_string(),
            "disease" => codes::diagnosis_families().description(&key).unwrap_or(&key).to_string(),
            "procedure" => codes::procedure_families().description(&key).unwrap_or(&key).to_string(),
            _ => key,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn category_of_kind(kind: &str) -> Option<FacetCategory> {
    Some(match kind {
        "patient" => FacetCategory::Patient,
        "disease" => FacetCategory::Disease,
        "procedure" => FacetCategory::Procedure,
        "medication" => FacetCategory::Medication,
        "employment" | "housing" | "household" => FacetCategory::Social,
        "ethnicity" => FacetCategory::RaceEthnicity,
        "religion" => FacetCategory::Religion,
        "gender" => FacetCategory::Gender,
        "marital" => FacetCategory::Marital,
        "age" => FacetCategory::Age,
        _ => return None,
    })
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn percent_decode(s: &str) -> Result<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s
                .get(i + 1..i + 3)
                .and_then(|h| u8::from_str_radix(h, 16).ok())
                .ok_or_else(|| Error::validation(format!("bad percent escape in {s:?}")))?;
            out.push(hex);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::validation(format!("percent escapes in {s:?} are not UTF-8")))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Object {
    Node(NodeId),
    Integer(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: NodeId,
    pub predicate: Predicate,
    pub object: Object,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMeta {
    pub category: FacetCategory,
    pub description: String,
}

/// One admission's knowledge graph. Triples are kept sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleGraph {
    pub patient: NodeId,
    pub triples: Vec<Triple>,
    pub node_meta: BTreeMap<NodeId, NodeMeta>,
    /// Readmission label; not part of the RDF serialization.
    pub label: Option<bool>,
}

impl TripleGraph {
    /// Assembles a graph, deriving node metadata from the identifiers.
    pub fn new(patient: NodeId, triples: impl IntoIterator<Item = Triple>, label: Option<bool>) -> Self {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        let mut node_meta = BTreeMap::new();
        let mut note = |n: &NodeId| {
            node_meta
                .entry(n.clone())
                .or_insert_with(|| NodeMeta { category: n.category(), description: n.derived_description() });
        };
        note(&patient);
        for t in &triples {
            note(&t.subject);
            if let Object::Node(o) = &t.object {
                note(o);
            }
        }
        TripleGraph { patient, triples: triples.into_iter().collect(), node_meta, label }
    }

    pub fn admission_id(&self) -> String {
        self.patient.key()
    }

    /// Nodes other than the patient, in identifier order.
    pub fn leaves(&self) -> impl Iterator<Item = (&NodeId, &NodeMeta)> {
        self.node_meta.iter().filter(move |(n, _)| **n != self.patient)
    }

    /// Checks the star shape: one patient node, every other node adjacent to it.
    pub fn check_star(&self) -> Result<()> {
        let patients = self.node_meta.values().filter(|m| m.category == FacetCategory::Patient).count();
        if patients != 1 || self.node_meta.get(&self.patient).map(|m| m.category) != Some(FacetCategory::Patient) {
            return Err(Error::validation(format!("expected exactly one patient node, found {patients}")));
        }
        let mut adjacent = BTreeSet::new();
        for t in &self.triples {
            if let Object::Node(o) = &t.object {
                if t.subject == self.patient {
                    adjacent.insert(o);
                } else if *o == self.patient {
                    adjacent.insert(&t.subject);
                }
            }
        }
        for (node, _) in self.leaves() {
            if !adjacent.contains(node) {
                return Err(Error::validation(format!("node {node} is not linked to the patient")));
            }
        }
        Ok(())
    }

    /// All triples matching a single pattern, in sorted order.
    pub fn query(&self, pattern: &TriplePattern) -> Vec<&Triple> {
        self.triples.iter().filter(|t| pattern.matches(t)).collect()
    }
}

/// A single triple pattern; `None` positions are wildcards.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: Option<NodeId>,
    pub predicate: Option<Predicate>,
    pub object: Option<Object>,
}

impl TriplePattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn subject(mut self, s: NodeId) -> Self {
        self.subject = Some(s);
        self
    }

    pub fn predicate(mut self, p: Predicate) -> Self {
        self.predicate = Some(p);
        self
    }

    pub fn relation(self, r: Relation) -> Self {
        self.predicate(Predicate::Relation(r))
    }

    pub fn object(mut self, o: Object) -> Self {
        self.object = Some(o);
        self
    }

    pub fn matches(&self, t: &Triple) -> bool {
        self.subject.as_ref().is_none_or(|s| *s == t.subject)
            && self.predicate.is_none_or(|p| p == t.predicate)
            && self.object.as_ref().is_none_or(|o| *o == t.object)
    }
}

/// The HSPO vocabulary used for graph construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HspoSchema;

impl HspoSchema {
    pub fn relations(&self) -> &'static [Relation] {
        &Relation::ALL
    }

    pub fn patient_relations(&self) -> &'static [Relation] {
        &Relation::PATIENT_RELATIONS
    }

    pub fn data_properties(&self) -> &'static [Predicate] {
        &[Predicate::AgeInYears]
    }

    /// Relation linking the patient to a leaf of the given category.
    pub fn relation_for(&self, category: FacetCategory) -> Option<Relation> {
        Some(match category {
            FacetCategory::Disease => Relation::HasDisease,
            FacetCategory::Medication | FacetCategory::Procedure => Relation::HasIntervention,
            FacetCategory::Social => Relation::HasSocialContext,
            FacetCategory::RaceEthnicity => Relation::HasRaceOrEthnicity,
            FacetCategory::Religion => Relation::FollowsReligion,
            FacetCategory::Gender => Relation::HasGender,
            FacetCategory::Marital => Relation::HasMaritalStatus,
            FacetCategory::Age => Relation::HasAge,
            FacetCategory::Group | FacetCategory::Patient => return None,
        })
    }
}

/// Builds the knowledge graph of one labeled, grouped admission.
pub fn build_pkg(record: &AdmissionRecord, schema: &HspoSchema) -> Result<TripleGraph> {
    let label = record
        .readmitted_within_window
        .ok_or_else(|| Error::contract(format!("admission {} has no readmission label", record.admission_id)))?;
    let patient = NodeId::patient(&record.admission_id);
    let mut leaves: Vec<NodeId> = Vec::new();
    leaves.extend(record.diagnoses.iter().map(|d| NodeId::new("disease", &d.code)));
    leaves.extend(record.procedures.iter().map(|p| NodeId::new("procedure", &p.code)));
    leaves.extend(record.medications.iter().map(|m| NodeId::new("medication", &m.name)));
    let optional = [
        ("employment", &record.employment),
        ("housing", &record.housing),
        ("household", &record.household),
        ("ethnicity", &record.ethnicity),
        ("religion", &record.religion),
        ("marital", &record.marital_status),
    ];
    for (kind, value) in optional {
        if let Some(v) = value {
            leaves.push(NodeId::new(kind, v));
        }
    }
    if let Some(g) = record.gender {
        leaves.push(NodeId::new("gender", g.description()));
    }
    let age = NodeId::new("age", &record.age_group());

    let mut triples: Vec<Triple> = leaves
        .into_iter()
        .map(|leaf| {
            let relation = schema.relation_for(leaf.category()).expect("leaves have a patient relation");
            Triple { subject: patient.clone(), predicate: Predicate::Relation(relation), object: Object::Node(leaf) }
        })
        .collect();
    triples.push(Triple {
        subject: patient.clone(),
        predicate: Predicate::Relation(Relation::HasAge),
        object: Object::Node(age.clone()),
    });
    triples.push(Triple {
        subject: age,
        predicate: Predicate::AgeInYears,
        object: Object::Integer(i64::from(record.age_years)),
    });

    let mut graph = TripleGraph::new(patient, triples, Some(label));
    // Descriptions from the record take precedence over table lookups.
    for d in &record.diagnoses {
        if let Some(meta) = graph.node_meta.get_mut(&NodeId::new("disease", &d.code)) {
            meta.description = d.description.clone();
        }
    }
    for p in &record.procedures {
        if let Some(meta) = graph.node_meta.get_mut(&NodeId::new("procedure", &p.code)) {
            meta.description = p.description.clone();
        }
    }
    Ok(graph)
}
