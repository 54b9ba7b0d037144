//! The blackbox world: concrete values, library and predicate
//! implementations, random generation and concrete client execution.

mod builtins;
mod exec;
mod gen;
mod observe;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{FunctionSig, MethodPredicate, Prop, Sort, Var, VerificationQuery};

pub use builtins::{library, library_names, predicate, predicate_names, LibraryImpl, PredicateImpl};
pub use exec::{build_sample, eval_concrete, run_client, run_path, Env, ExecError, Frame};
pub use gen::{GenConfig, Generator};
pub use observe::{consistency_violations, find_inconsistency, observe_once, Observation};
pub(crate) use observe::{client_inputs, recursion_depth};

/// How a declared datatype is represented concretely.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Repr {
    List,
    /// Two lists, front and reversed back; front is empty only if back is.
    Queue,
    Tree,
}

impl Repr {
    pub fn parse(s: &str) -> Option<Repr> {
        match s {
            "list" => Some(Repr::List),
            "batched-queue" => Some(Repr::Queue),
            "tree" => Some(Repr::Tree),
            _ => None,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Repr::List => "list",
            Repr::Queue => "batched-queue",
            Repr::Tree => "tree",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tree {
    Leaf,
    Node(Box<Tree>, i64, Box<Tree>),
}

impl Tree {
    pub fn node(l: Tree, x: i64, r: Tree) -> Tree {
        Tree::Node(Box::new(l), x, Box::new(r))
    }

    pub fn size(&self) -> usize {
        match self {
            Tree::Leaf => 0,
            Tree::Node(l, _, r) => 1 + l.size() + r.size(),
        }
    }

    /// In-order elements.
    pub fn elements(&self, out: &mut Vec<i64>) {
        if let Tree::Node(l, x, r) = self {
            l.elements(out);
            out.push(*x);
            r.elements(out);
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf => write!(f, "leaf"),
            Tree::Node(l, x, r) => write!(f, "(node {l} {x} {r})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Elem(i64),
    Bool(bool),
    List(Vec<i64>),
    Queue { front: Vec<i64>, back: Vec<i64> },
    Tree(Tree),
}

impl Value {
    pub fn repr(&self) -> Option<Repr> {
        match self {
            Value::List(_) => Some(Repr::List),
            Value::Queue { .. } => Some(Repr::Queue),
            Value::Tree(_) => Some(Repr::Tree),
            _ => None,
        }
    }

    /// Abstract sequence of a list or queue, front first.
    pub fn sequence(&self) -> Option<Vec<i64>> {
        match self {
            Value::List(v) => Some(v.clone()),
            Value::Queue { front, back } => {
                let mut v = front.clone();
                v.extend(back.iter().rev());
                Some(v)
            }
            _ => None,
        }
    }

    /// Elements stored in a container, or the element itself.
    pub fn elements(&self) -> Vec<i64> {
        match self {
            Value::Elem(e) => vec![*e],
            Value::Bool(_) => vec![],
            Value::Tree(t) => {
                let mut v = Vec::new();
                t.elements(&mut v);
                v
            }
            other => other.sequence().unwrap_or_default(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Value::Elem(_) | Value::Bool(_) => 0,
            Value::Tree(t) => t.size(),
            other => other.elements().len(),
        }
    }

    pub fn queue(seq: &[i64]) -> Value {
        Value::Queue { front: seq.to_vec(), back: vec![] }
    }
}

fn seq_text(v: &[i64]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Elem(e) => write!(f, "{e}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(v) => write!(f, "[{}]", seq_text(v)),
            Value::Queue { front, back } => write!(f, "<{}|{}>", seq_text(front), seq_text(back)),
            Value::Tree(t) => write!(f, "{t}"),
        }
    }
}

/// Concrete shape of a sort, used to check library signatures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Elem,
    Bool,
    Repr(Repr),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Elem => write!(f, "elem"),
            Kind::Bool => write!(f, "bool"),
            Kind::Repr(r) => write!(f, "{}", r.keyword()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown datatype `{0}`")]
    UnknownDatatype(String),
    #[error("unknown implementation `{0}`")]
    UnknownImpl(String),
    #[error("`{name}` is declared as ({declared}) but `{imp}` expects ({expected})")]
    Signature { name: String, imp: String, declared: String, expected: String },
}

/// Γ_F and Γ_P bound to declared names and sorts.
#[derive(Clone, Debug, Default)]
pub struct World {
    pub datatypes: BTreeMap<String, Repr>,
    pub functions: BTreeMap<String, (FunctionSig, LibraryImpl)>,
    /// Function names in declaration order.
    pub order: Vec<String>,
    pub predicates: Vec<(MethodPredicate, PredicateImpl)>,
}

impl World {
    pub fn kind(&self, s: &Sort) -> Result<Kind, WorldError> {
        match s {
            Sort::Element => Ok(Kind::Elem),
            Sort::Bool => Ok(Kind::Bool),
            Sort::Container(n) => self
                .datatypes
                .get(n)
                .map(|r| Kind::Repr(*r))
                .ok_or_else(|| WorldError::UnknownDatatype(n.clone())),
        }
    }

    pub fn add_datatype(&mut self, name: &str, repr: Repr) {
        self.datatypes.insert(name.to_string(), repr);
    }

    pub fn add_function(&mut self, sig: FunctionSig, imp: &str) -> Result<(), WorldError> {
        let l = library(imp).ok_or_else(|| WorldError::UnknownImpl(imp.to_string()))?;
        let declared: Vec<Kind> = sig
            .params
            .iter()
            .chain([&sig.result])
            .map(|v| self.kind(&v.sort))
            .collect::<Result<_, _>>()?;
        let expected: Vec<Kind> = l.params.iter().copied().chain([l.result]).collect();
        if declared != expected {
            let show = |ks: &[Kind]| ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
            return Err(WorldError::Signature {
                name: sig.name.clone(),
                imp: imp.to_string(),
                declared: show(&declared),
                expected: show(&expected),
            });
        }
        if !self.order.contains(&sig.name) {
            self.order.push(sig.name.clone());
        }
        self.functions.insert(sig.name.clone(), (sig, l));
        Ok(())
    }

    pub fn add_predicate(&mut self, mp: MethodPredicate, imp: &str) -> Result<(), WorldError> {
        let p = predicate(imp).ok_or_else(|| WorldError::UnknownImpl(imp.to_string()))?;
        let kinds: Vec<Kind> = mp.signature.iter().map(|s| self.kind(s)).collect::<Result<_, _>>()?;
        if !p.accepts(&kinds) {
            let show = kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
            return Err(WorldError::Signature {
                name: mp.name.clone(),
                imp: imp.to_string(),
                declared: show,
                expected: p.describe(),
            });
        }
        self.predicates.push((mp, p));
        Ok(())
    }

    pub fn method_predicates(&self) -> Vec<MethodPredicate> {
        self.predicates.iter().map(|(m, _)| m.clone()).collect()
    }

    pub fn signatures(&self) -> BTreeMap<String, FunctionSig> {
        self.functions.iter().map(|(n, (s, _))| (n.clone(), s.clone())).collect()
    }
}

/// The client under verification: its interface and one query per path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Client {
    pub name: String,
    pub params: Vec<Var>,
    pub result: Var,
    pub pre: Prop,
    pub post: Prop,
    pub paths: Vec<VerificationQuery>,
}
