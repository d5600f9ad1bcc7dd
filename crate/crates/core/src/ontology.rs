//! TBox axioms, ontologies, and the Turtle-subset ontology format.
//!
//! The format is `@prefix` declarations followed by `S P O .` statements
//! (with `;` and `,` abbreviations). Statements whose predicate is one of
//! the schema predicates become TBox axioms; `rdf:type owl:Class` and the
//! property-type markers declare names; everything else is ABox.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind};
use crate::graph::{State, Triple};
use crate::syntax::{Cursor, Pos, TermPolicy, Tok};
use crate::term::{vocab, PrefixMap, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    SubClassOf(Term, Term),
    /// Operands are stored in term order, so `(C, D)` and `(D, C)` are the
    /// same axiom.
    DisjointWith(Term, Term),
    ComplementOf(Term, Term),
    Domain(Term, Term),
    Range(Term, Term),
    SubPropertyOf(Term, Term),
    TransitiveProperty(Term),
}

fn ordered(a: Term, b: Term) -> (Term, Term) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Axiom {
    pub fn disjoint(a: Term, b: Term) -> Self {
        let (a, b) = ordered(a, b);
        Axiom::DisjointWith(a, b)
    }

    pub fn complement(a: Term, b: Term) -> Self {
        let (a, b) = ordered(a, b);
        Axiom::ComplementOf(a, b)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Axiom::SubClassOf(..) => "subClassOf",
            Axiom::DisjointWith(..) => "disjointWith",
            Axiom::ComplementOf(..) => "complementOf",
            Axiom::Domain(..) => "domain",
            Axiom::Range(..) => "range",
            Axiom::SubPropertyOf(..) => "subPropertyOf",
            Axiom::TransitiveProperty(..) => "transitiveProperty",
        }
    }

    /// The two classes of a disjointness or complement axiom.
    pub fn exclusive_pair(&self) -> Option<(&Term, &Term)> {
        match self {
            Axiom::DisjointWith(a, b) | Axiom::ComplementOf(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// The axiom as the triple that would assert it.
    pub fn to_triple(&self) -> Triple {
        let (s, p, o) = match self {
            Axiom::SubClassOf(a, b) => (a, vocab::RDFS_SUBCLASS_OF, b.clone()),
            Axiom::DisjointWith(a, b) => (a, vocab::OWL_DISJOINT_WITH, b.clone()),
            Axiom::ComplementOf(a, b) => (a, vocab::OWL_COMPLEMENT_OF, b.clone()),
            Axiom::Domain(a, b) => (a, vocab::RDFS_DOMAIN, b.clone()),
            Axiom::Range(a, b) => (a, vocab::RDFS_RANGE, b.clone()),
            Axiom::SubPropertyOf(a, b) => (a, vocab::RDFS_SUBPROPERTY_OF, b.clone()),
            Axiom::TransitiveProperty(a) => (
                a,
                vocab::RDF_TYPE,
                Term::iri(vocab::OWL_TRANSITIVE_PROPERTY),
            ),
        };
        Triple::new(s.clone(), Term::iri(p), o)
    }

    pub fn display_with(&self, prefixes: &PrefixMap) -> String {
        self.to_triple().display_with(prefixes)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TBox {
    pub axioms: BTreeSet<Axiom>,
    pub classes: BTreeSet<Term>,
    pub properties: BTreeSet<Term>,
}

impl TBox {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an axiom and records the roles of its operands.
    pub fn add(&mut self, axiom: Axiom) {
        match &axiom {
            Axiom::SubClassOf(a, b) | Axiom::DisjointWith(a, b) | Axiom::ComplementOf(a, b) => {
                self.classes.insert(a.clone());
                self.classes.insert(b.clone());
            }
            Axiom::Domain(p, c) | Axiom::Range(p, c) => {
                self.properties.insert(p.clone());
                self.classes.insert(c.clone());
            }
            Axiom::SubPropertyOf(p, q) => {
                self.properties.insert(p.clone());
                self.properties.insert(q.clone());
            }
            Axiom::TransitiveProperty(p) => {
                self.properties.insert(p.clone());
            }
        }
        self.axioms.insert(axiom);
    }

    pub fn exclusive_axioms(&self) -> impl Iterator<Item = (&Axiom, &Term, &Term)> {
        self.axioms
            .iter()
            .filter_map(|a| a.exclusive_pair().map(|(c, d)| (a, c, d)))
    }

    /// Symmetric query over disjointWith/complementOf.
    pub fn are_exclusive(&self, c: &Term, d: &Term) -> bool {
        self.axioms.contains(&Axiom::disjoint(c.clone(), d.clone()))
            || self
                .axioms
                .contains(&Axiom::complement(c.clone(), d.clone()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    pub prefixes: PrefixMap,
    pub tbox: TBox,
    pub abox: State,
    pub time_points: BTreeSet<Term>,
}

impl Ontology {
    pub fn new() -> Self {
        Self {
            prefixes: PrefixMap::standard(),
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Class,
    Property,
}

struct Declarations {
    roles: BTreeMap<Term, (Role, bool)>,
}

impl Declarations {
    fn declare(
        &mut self,
        term: &Term,
        role: Role,
        explicit: bool,
        pos: Pos,
    ) -> Result<(), ParseError> {
        let dup = |what: String| {
            ParseError::new(
                pos.line,
                pos.column,
                ParseErrorKind::DuplicateDeclaration(what),
            )
        };
        match self.roles.get_mut(term) {
            None => {
                self.roles.insert(term.clone(), (role, explicit));
                Ok(())
            }
            Some((existing, _)) if *existing != role => {
                Err(dup(format!("{term:?} (used as both class and property)")))
            }
            Some((_, was_explicit)) => {
                if explicit && *was_explicit {
                    return Err(dup(format!("{term:?}")));
                }
                *was_explicit |= explicit;
                Ok(())
            }
        }
    }
}

fn axiom_operand(t: &Term, pos: Pos) -> Result<Term, ParseError> {
    match t {
        Term::Iri(_) => Ok(t.clone()),
        _ => Err(ParseError::new(
            pos.line,
            pos.column,
            ParseErrorKind::Syntax(format!("axiom operand must be an IRI, found {t:?}")),
        )),
    }
}

/// Parse an ontology document.
pub fn parse_ontology(text: &str) -> Result<Ontology, ParseError> {
    parse_ontology_with(text, &PrefixMap::standard())
}

/// Parse an ontology document with additional predeclared prefixes.
pub fn parse_ontology_with(text: &str, base: &PrefixMap) -> Result<Ontology, ParseError> {
    let mut prefixes = PrefixMap::standard();
    prefixes.extend(base);
    let mut cursor = Cursor::new(text)?;
    let mut statements = Vec::new();
    let policy = TermPolicy {
        variables: false,
        placeholders: false,
    };
    while !cursor.at_end() {
        if let Some(Tok::LangOrDirective(d)) = cursor.peek() {
            if d == "prefix" {
                cursor.next();
                cursor.prefix_directive(&mut prefixes)?;
                continue;
            }
            return Err(cursor.error(format!("unknown directive @{d}")));
        }
        cursor.statement(&prefixes, policy, &mut statements)?;
        if cursor.peek() == Some(&Tok::RBrace) {
            return Err(cursor.error("unexpected `}`"));
        }
    }

    let mut tbox = TBox::new();
    let mut decls = Declarations {
        roles: BTreeMap::new(),
    };
    let mut abox = Vec::new();
    let mut time_points = BTreeSet::new();
    for (t, pos) in statements {
        let p = t.predicate.as_iri().unwrap_or_default();
        match p {
            vocab::RDF_TYPE => match t.object.as_iri() {
                Some(vocab::OWL_CLASS) => {
                    let c = axiom_operand(&t.subject, pos)?;
                    decls.declare(&c, Role::Class, true, pos)?;
                    tbox.classes.insert(c);
                }
                Some(
                    vocab::OWL_OBJECT_PROPERTY | vocab::OWL_DATATYPE_PROPERTY | vocab::RDF_PROPERTY,
                ) => {
                    let q = axiom_operand(&t.subject, pos)?;
                    decls.declare(&q, Role::Property, true, pos)?;
                    tbox.properties.insert(q);
                }
                Some(vocab::OWL_TRANSITIVE_PROPERTY) => {
                    let q = axiom_operand(&t.subject, pos)?;
                    decls.declare(&q, Role::Property, false, pos)?;
                    tbox.add(Axiom::TransitiveProperty(q));
                }
                _ => {
                    if t.object.is_iri(vocab::DTD_TIME_POINT) {
                        time_points.insert(t.subject.clone());
                    }
                    abox.push(t);
                }
            },
            vocab::RDFS_SUBCLASS_OF | vocab::OWL_DISJOINT_WITH | vocab::OWL_COMPLEMENT_OF => {
                let a = axiom_operand(&t.subject, pos)?;
                let b = axiom_operand(&t.object, pos)?;
                decls.declare(&a, Role::Class, false, pos)?;
                decls.declare(&b, Role::Class, false, pos)?;
                tbox.add(match p {
                    vocab::RDFS_SUBCLASS_OF => Axiom::SubClassOf(a, b),
                    vocab::OWL_DISJOINT_WITH => Axiom::disjoint(a, b),
                    _ => Axiom::complement(a, b),
                });
            }
            vocab::RDFS_DOMAIN | vocab::RDFS_RANGE => {
                let q = axiom_operand(&t.subject, pos)?;
                let c = axiom_operand(&t.object, pos)?;
                decls.declare(&q, Role::Property, false, pos)?;
                decls.declare(&c, Role::Class, false, pos)?;
                tbox.add(if p == vocab::RDFS_DOMAIN {
                    Axiom::Domain(q, c)
                } else {
                    Axiom::Range(q, c)
                });
            }
            vocab::RDFS_SUBPROPERTY_OF => {
                let a = axiom_operand(&t.subject, pos)?;
                let b = axiom_operand(&t.object, pos)?;
                decls.declare(&a, Role::Property, false, pos)?;
                decls.declare(&b, Role::Property, false, pos)?;
                tbox.add(Axiom::SubPropertyOf(a, b));
            }
            _ => abox.push(t),
        }
    }
    Ok(Ontology {
        prefixes,
        tbox,
        abox: abox.into_iter().collect(),
        time_points,
    })
}

/// Render an ontology in the same format [`parse_ontology`] reads.
pub fn serialize_ontology(ontology: &Ontology) -> String {
    let p = &ontology.prefixes;
    let mut out = String::new();
    for (prefix, ns) in p.iter() {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }
    out.push('\n');
    for c in &ontology.tbox.classes {
        let _ = writeln!(out, "{} rdf:type owl:Class .", p.compact(c));
    }
    for q in &ontology.tbox.properties {
        let _ = writeln!(out, "{} rdf:type owl:ObjectProperty .", p.compact(q));
    }
    for axiom in &ontology.tbox.axioms {
        let _ = writeln!(out, "{} .", axiom.display_with(p));
    }
    out.push('\n');
    for t in ontology.abox.iter() {
        let _ = writeln!(out, "{} .", t.display_with(p));
    }
    out
}
