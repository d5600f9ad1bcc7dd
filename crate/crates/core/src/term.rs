//! Terms, well-known vocabulary and prefix handling.
//!
//! Every graph, pattern and rule in the engine is built from [`Term`]s. Terms
//! are totally ordered (kind first, then lexical form) so that every result
//! list produced by the engine is deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub mod ns {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const DTD: &str = "urn:dtd:vocab#";
}

/// Full IRIs of the vocabulary the engine interprets.
pub mod vocab {
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
    pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
    pub const RDFS_SUBPROPERTY_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
    pub const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
    pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
    pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
    pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
    pub const OWL_TRANSITIVE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#TransitiveProperty";
    pub const OWL_DISJOINT_WITH: &str = "http://www.w3.org/2002/07/owl#disjointWith";
    pub const OWL_COMPLEMENT_OF: &str = "http://www.w3.org/2002/07/owl#complementOf";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
    pub const DTD_TIME_POINT: &str = "urn:dtd:vocab#TimePoint";
    pub const DTD_BEFORE: &str = "urn:dtd:vocab#before";
    pub const DTD_NEXT: &str = "urn:dtd:vocab#next";
    pub const DTD_AT_DATE_TIME: &str = "urn:dtd:vocab#atDateTime";
    pub const DTD_HAS_TIME: &str = "urn:dtd:vocab#hasTime";
    pub const DTD_HAS_START: &str = "urn:dtd:vocab#hasStart";
    pub const DTD_HAS_END: &str = "urn:dtd:vocab#hasEnd";
    pub const DTD_AGENT: &str = "urn:dtd:vocab#agent";

    /// Predicates that attach an action instance to the point where its
    /// effects land.
    pub const TIME_RELATIONS: [&str; 3] = [DTD_HAS_TIME, DTD_HAS_START, DTD_HAS_END];
}

/// Name of the reserved time variable, without the leading `?`.
pub const TIME_VAR: &str = "_T";

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Arc<str>),
    Literal {
        lexical: Arc<str>,
        datatype: Option<Arc<str>>,
    },
    /// Pattern variable. The stored name excludes the `?` sigil.
    Variable(Arc<str>),
    /// Fresh-individual placeholder (`_:label`) inside rule effects. Only
    /// ever appears in patterns; grounding replaces it with a skolem.
    Placeholder(Arc<str>),
    /// Engine-minted individual. No parser can produce one.
    Skolem(u64),
}

impl Term {
    pub fn iri(iri: impl AsRef<str>) -> Self {
        Term::Iri(Arc::from(iri.as_ref()))
    }

    pub fn var(name: impl AsRef<str>) -> Self {
        let name = name.as_ref();
        Term::Variable(Arc::from(name.strip_prefix('?').unwrap_or(name)))
    }

    pub fn time_var() -> Self {
        Term::Variable(Arc::from(TIME_VAR))
    }

    pub fn placeholder(label: impl AsRef<str>) -> Self {
        let label = label.as_ref();
        Term::Placeholder(Arc::from(label.strip_prefix("_:").unwrap_or(label)))
    }

    pub fn literal(lexical: impl AsRef<str>, datatype: Option<&str>) -> Self {
        Term::Literal {
            lexical: Arc::from(lexical.as_ref()),
            datatype: datatype.map(Arc::from),
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn is_time_var(&self) -> bool {
        matches!(self, Term::Variable(v) if &**v == TIME_VAR)
    }

    pub fn is_placeholder(&self) -> bool {
        matches!(self, Term::Placeholder(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    /// Ground terms contain neither variables nor placeholders.
    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Variable(_) | Term::Placeholder(_))
    }

    /// Named or minted individual (IRI or skolem).
    pub fn is_individual(&self) -> bool {
        matches!(self, Term::Iri(_) | Term::Skolem(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn is_iri(&self, iri: &str) -> bool {
        self.as_iri() == Some(iri)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Literal { lexical, datatype } => {
                write!(f, "\"{}\"", escape_literal(lexical))?;
                match datatype {
                    Some(dt) => write!(f, "^^<{dt}>"),
                    None => Ok(()),
                }
            }
            Term::Variable(v) => write!(f, "?{v}"),
            Term::Placeholder(p) => write!(f, "_:{p}"),
            Term::Skolem(n) => write!(f, "_:sk{n}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

/// Prefix → namespace map, used both for parsing prefixed names and for
/// compacting IRIs on output.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixMap {
    map: BTreeMap<String, String>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// The prefixes every document may use without declaring them.
    pub fn standard() -> Self {
        let mut map = Self::new();
        map.insert("rdf", ns::RDF);
        map.insert("rdfs", ns::RDFS);
        map.insert("owl", ns::OWL);
        map.insert("xsd", ns::XSD);
        map.insert("dtd", ns::DTD);
        map
    }

    pub fn insert(&mut self, prefix: &str, namespace: &str) {
        self.map.insert(prefix.to_string(), namespace.to_string());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.map.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn extend(&mut self, other: &PrefixMap) {
        for (k, v) in other.iter() {
            self.insert(k, v);
        }
    }

    pub fn expand(&self, prefix: &str, local: &str) -> Option<String> {
        self.get(prefix).map(|ns| format!("{ns}{local}"))
    }

    /// Shortest `prefix:local` rendering of an IRI, falling back to `<iri>`.
    pub fn compact_iri(&self, iri: &str) -> String {
        let mut best: Option<(usize, String)> = None;
        for (prefix, namespace) in self.iter() {
            if let Some(local) = iri.strip_prefix(namespace) {
                if is_valid_local(local) {
                    let candidate = format!("{prefix}:{local}");
                    if best.as_ref().is_none_or(|(len, _)| candidate.len() < *len) {
                        best = Some((candidate.len(), candidate));
                    }
                }
            }
        }
        best.map(|(_, s)| s).unwrap_or_else(|| format!("<{iri}>"))
    }

    pub fn compact(&self, term: &Term) -> String {
        match term {
            Term::Iri(iri) => self.compact_iri(iri),
            Term::Literal {
                lexical,
                datatype: Some(dt),
            } => format!("\"{}\"^^{}", escape_literal(lexical), self.compact_iri(dt)),
            other => other.to_string(),
        }
    }
}

pub(crate) fn is_valid_local(local: &str) -> bool {
    !local.is_empty()
        && !local.ends_with('.')
        && local
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !local.starts_with(['-', '.'])
}

/// Source of globally fresh skolem individuals.
///
/// One registry is shared by everything that mints individuals during an
/// engine run; allocation is a single atomic increment.
#[derive(Debug)]
pub struct SkolemRegistry {
    next: AtomicU64,
}

impl SkolemRegistry {
    pub fn new() -> Self {
        Self::starting_at(1)
    }

    /// Registry whose first skolem is `sk{start}`.
    pub fn starting_at(start: u64) -> Self {
        Self {
            next: AtomicU64::new(start),
        }
    }

    pub fn fresh(&self) -> Term {
        Term::Skolem(self.next.fetch_add(1, Ordering::Relaxed))
    }

    /// Number that the next call to [`fresh`](Self::fresh) will use.
    pub fn peek(&self) -> u64 {
        self.next.load(Ordering::Relaxed)
    }
}

impl Default for SkolemRegistry {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_kind_then_lexical() {
        let mut terms = vec![
            Term::Skolem(1),
            Term::var("a"),
            Term::literal("x", None),
            Term::iri("urn:b"),
            Term::iri("urn:a"),
        ];
        terms.sort();
        assert_eq!(
            terms,
            vec![
                Term::iri("urn:a"),
                Term::iri("urn:b"),
                Term::literal("x", None),
                Term::var("a"),
                Term::Skolem(1),
            ]
        );
    }

    #[test]
    fn time_var_is_reserved_name() {
        assert!(Term::var("?_T").is_time_var());
        assert!(!Term::var("?T").is_time_var());
        assert_eq!(Term::time_var().to_string(), "?_T");
    }

    #[test]
    fn compaction_prefers_prefixed_names() {
        let mut p = PrefixMap::standard();
        p.insert("", "urn:ex#");
        assert_eq!(p.compact(&Term::iri(vocab::RDF_TYPE)), "rdf:type");
        assert_eq!(p.compact(&Term::iri("urn:ex#a")), ":a");
        assert_eq!(p.compact(&Term::iri("urn:other/x y")), "<urn:other/x y>");
    }

    #[test]
    fn skolems_are_fresh() {
        let reg = SkolemRegistry::new();
        let a = reg.fresh();
        let b = reg.fresh();
        assert_ne!(a, b);
        assert!(a.is_ground() && a.is_individual());
    }
}
