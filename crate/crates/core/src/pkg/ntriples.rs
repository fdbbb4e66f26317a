//! Canonical N-Triples I/O: one triple per line, lines sorted bytewise.

use super::{NodeId, Object, Predicate, Triple, TripleGraph, NAMESPACE, RESOURCE_NAMESPACE, XSD_INTEGER};
use crate::pkg::FacetCategory;
use crate::{Error, Result};

pub fn serialize_ntriples(graph: &TripleGraph) -> Result<String> {
    for (node, meta) in &graph.node_meta {
        if meta.description.chars().any(char::is_control) {
            return Err(Error::Serialization(format!("description of {node} contains control characters")));
        }
    }
    let mut lines: Vec<String> = graph.triples.iter().map(triple_line).collect();
    lines.sort();
    lines.dedup();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn triple_line(t: &Triple) -> String {
    let object = match &t.object {
        Object::Node(n) => format!("<{}>", n.iri()),
        Object::Integer(v) => format!("\"{v}\"^^<{XSD_INTEGER}>"),
    };
    format!("<{}> <{NAMESPACE}{}> {object} .", t.subject.iri(), t.predicate.name())
}

pub fn parse_ntriples(text: &str) -> Result<TripleGraph> {
    let mut triples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        triples.push(parse_line(line).map_err(|message| Error::Parse { line: line_no, message })?);
    }
    if triples.is_empty() {
        return Err(Error::Parse { line: 0, message: "no triples".into() });
    }
    let mut patients = triples
        .iter()
        .flat_map(|t| {
            let o = match &t.object {
                Object::Node(n) => Some(n),
                Object::Integer(_) => None,
            };
            std::iter::once(&t.subject).chain(o)
        })
        .filter(|n| n.category() == FacetCategory::Patient);
    let patient = patients.next().cloned().ok_or(Error::Parse { line: 0, message: "no patient node".into() })?;
    if patients.any(|p| *p != patient) {
        return Err(Error::Parse { line: 0, message: "more than one patient node".into() });
    }
    Ok(TripleGraph::new(patient, triples, None))
}

fn parse_line(line: &str) -> std::result::Result<Triple, String> {
    let rest = line.strip_suffix('.').ok_or("missing terminating '.'")?.trim_end();
    let (subject, rest) = take_iri(rest)?;
    let (predicate, rest) = take_iri(rest.trim_start())?;
    let rest = rest.trim_start();

    let subject = resource(subject)?;
    let predicate = predicate
        .strip_prefix(NAMESPACE)
        .and_then(Predicate::from_name)
        .ok_or_else(|| format!("unknown predicate <{predicate}>"))?;
    let object = if rest.starts_with('<') {
        let (iri, tail) = take_iri(rest)?;
        if !tail.trim().is_empty() {
            return Err(format!("trailing content {tail:?}"));
        }
        Object::Node(resource(iri)?)
    } else {
        let literal = rest.strip_prefix('"').ok_or("object is neither an IRI nor a literal")?;
        let (value, datatype) = literal.split_once("\"^^").ok_or("literal lacks a datatype")?;
        if datatype != format!("<{XSD_INTEGER}>") {
            return Err(format!("unsupported datatype {datatype}"));
        }
        Object::Integer(value.parse().map_err(|_| format!("bad integer literal {value:?}"))?)
    };
    match (&predicate, &object) {
        (Predicate::AgeInYears, Object::Integer(_)) | (Predicate::Relation(_), Object::Node(_)) => {}
        _ => return Err(format!("predicate {} does not accept this object", predicate.name())),
    }
    Ok(Triple { subject, predicate, object })
}

fn take_iri(s: &str) -> std::result::Result<(&str, &str), String> {
    let body = s.strip_prefix('<').ok_or_else(|| format!("expected '<' at {s:?}"))?;
    let end = body.find('>').ok_or("unterminated IRI")?;
    let iri = &body[..end];
    if iri.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(format!("invalid character in IRI <{iri}>"));
    }
    Ok((iri, &body[end + 1..]))
}

fn resource(iri: &str) -> std::result::Result<NodeId, String> {
    let path =
        iri.strip_prefix(RESOURCE_NAMESPACE).ok_or_else(|| format!("IRI <{iri}> is outside the resource namespace"))?;
    NodeId::from_path(path).map_err(|e| e.to_string())
}
