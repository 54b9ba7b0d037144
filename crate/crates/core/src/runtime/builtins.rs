//! Built-in library functions and method predicates.

use std::fmt;

use super::{Kind, Repr, Tree, Value};

type Eval = fn(&[Value]) -> Result<Value, String>;
type Unapply = fn(&Value) -> Option<Vec<Value>>;

/// A deterministic library function. Partial operations report a domain
/// error instead of a value.
#[derive(Clone, Copy)]
pub struct LibraryImpl {
    pub name: &'static str,
    pub params: &'static [Kind],
    pub result: Kind,
    eval: Eval,
    /// Constructors can be inverted, which is how `match` runs.
    unapply: Option<Unapply>,
}

impl fmt::Debug for LibraryImpl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LibraryImpl({})", self.name)
    }
}

impl LibraryImpl {
    pub fn eval(&self, args: &[Value]) -> Result<Value, String> {
        if args.len() != self.params.len() {
            return Err(format!("{} expects {} arguments, got {}", self.name, self.params.len(), args.len()));
        }
        (self.eval)(args)
    }

    pub fn is_constructor(&self) -> bool {
        self.unapply.is_some()
    }

    /// Arguments that rebuild `v`, if `v` was built by this constructor.
    pub fn unapply(&self, v: &Value) -> Option<Vec<Value>> {
        self.unapply.and_then(|u| u(v))
    }
}

const E: Kind = Kind::Elem;
const B: Kind = Kind::Bool;
const L: Kind = Kind::Repr(Repr::List);
const Q: Kind = Kind::Repr(Repr::Queue);
const T: Kind = Kind::Repr(Repr::Tree);

fn elem(v: &Value) -> i64 {
    match v {
        Value::Elem(e) => *e,
        other => panic!("expected an element, got {other}"),
    }
}

fn list(v: &Value) -> &[i64] {
    match v {
        Value::List(l) => l,
        other => panic!("expected a list, got {other}"),
    }
}

fn queue(v: &Value) -> (&[i64], &[i64]) {
    match v {
        Value::Queue { front, back } => (front, back),
        other => panic!("expected a queue, got {other}"),
    }
}

fn tree(v: &Value) -> &Tree {
    match v {
        Value::Tree(t) => t,
        other => panic!("expected a tree, got {other}"),
    }
}

fn cons(a: &[Value]) -> Result<Value, String> {
    let mut l = vec![elem(&a[0])];
    l.extend_from_slice(list(&a[1]));
    Ok(Value::List(l))
}

fn uncons(v: &Value) -> Option<Vec<Value>> {
    match v {
        Value::List(l) if !l.is_empty() => Some(vec![Value::Elem(l[0]), Value::List(l[1..].to_vec())]),
        _ => None,
    }
}

fn insert(x: i64, t: &Tree) -> Tree {
    match t {
        Tree::Leaf => Tree::node(Tree::Leaf, x, Tree::Leaf),
        Tree::Node(l, y, r) => {
            if x < *y {
                Tree::node(insert(x, l), *y, (**r).clone())
            } else if x > *y {
                Tree::node((**l).clone(), *y, insert(x, r))
            } else {
                t.clone()
            }
        }
    }
}

static LIBRARY: &[LibraryImpl] = &[
    LibraryImpl {
        name: "list-nil",
        params: &[],
        result: L,
        eval: |_| Ok(Value::List(vec![])),
        unapply: Some(|v| matches!(v, Value::List(l) if l.is_empty()).then(Vec::new)),
    },
    LibraryImpl { name: "list-cons", params: &[E, L], result: L, eval: cons, unapply: Some(uncons) },
    LibraryImpl { name: "list-push", params: &[E, L], result: L, eval: cons, unapply: None },
    LibraryImpl {
        name: "list-top",
        params: &[L],
        result: E,
        eval: |a| list(&a[0]).first().map(|e| Value::Elem(*e)).ok_or_else(|| "top of an empty list".into()),
        unapply: None,
    },
    LibraryImpl {
        name: "list-tail",
        params: &[L],
        result: L,
        eval: |a| match list(&a[0]) {
            [] => Err("tail of an empty list".into()),
            [_, rest @ ..] => Ok(Value::List(rest.to_vec())),
        },
        unapply: None,
    },
    LibraryImpl {
        name: "list-is-empty",
        params: &[L],
        result: B,
        eval: |a| Ok(Value::Bool(list(&a[0]).is_empty())),
        unapply: None,
    },
    LibraryImpl {
        name: "queue-empty",
        params: &[],
        result: Q,
        eval: |_| Ok(Value::Queue { front: vec![], back: vec![] }),
        unapply: None,
    },
    LibraryImpl {
        name: "queue-snoc",
        params: &[Q, E],
        result: Q,
        eval: |a| {
            let (f, b) = queue(&a[0]);
            let x = elem(&a[1]);
            Ok(if f.is_empty() {
                Value::Queue { front: vec![x], back: vec![] }
            } else {
                let mut back = vec![x];
                back.extend_from_slice(b);
                Value::Queue { front: f.to_vec(), back }
            })
        },
        unapply: None,
    },
    LibraryImpl {
        name: "queue-head",
        params: &[Q],
        result: E,
        eval: |a| queue(&a[0]).0.first().map(|e| Value::Elem(*e)).ok_or_else(|| "head of an empty queue".into()),
        unapply: None,
    },
    LibraryImpl {
        name: "queue-tail",
        params: &[Q],
        result: Q,
        eval: |a| {
            let (f, b) = queue(&a[0]);
            match f {
                [] => Err("tail of an empty queue".into()),
                [_] => Ok(Value::Queue { front: b.iter().rev().copied().collect(), back: vec![] }),
                [_, rest @ ..] => Ok(Value::Queue { front: rest.to_vec(), back: b.to_vec() }),
            }
        },
        unapply: None,
    },
    LibraryImpl {
        name: "queue-is-empty",
        params: &[Q],
        result: B,
        eval: |a| Ok(Value::Bool(queue(&a[0]).0.is_empty())),
        unapply: None,
    },
    LibraryImpl {
        name: "tree-leaf",
        params: &[],
        result: T,
        eval: |_| Ok(Value::Tree(Tree::Leaf)),
        unapply: Some(|v| matches!(v, Value::Tree(Tree::Leaf)).then(Vec::new)),
    },
    LibraryImpl {
        name: "tree-maket",
        params: &[E, T, T],
        result: T,
        eval: |a| Ok(Value::Tree(Tree::node(tree(&a[1]).clone(), elem(&a[0]), tree(&a[2]).clone()))),
        unapply: Some(|v| match v {
            Value::Tree(Tree::Node(l, x, r)) => {
                Some(vec![Value::Elem(*x), Value::Tree((**l).clone()), Value::Tree((**r).clone())])
            }
            _ => None,
        }),
    },
    LibraryImpl {
        name: "tree-insert",
        params: &[E, T],
        result: T,
        eval: |a| Ok(Value::Tree(insert(elem(&a[0]), tree(&a[1])))),
        unapply: None,
    },
    LibraryImpl {
        name: "elem-eq",
        params: &[E, E],
        result: B,
        eval: |a| Ok(Value::Bool(elem(&a[0]) == elem(&a[1]))),
        unapply: None,
    },
    LibraryImpl {
        name: "elem-lt",
        params: &[E, E],
        result: B,
        eval: |a| Ok(Value::Bool(elem(&a[0]) < elem(&a[1]))),
        unapply: None,
    },
];

pub fn library(name: &str) -> Option<LibraryImpl> {
    LIBRARY.iter().find(|l| l.name == name).copied()
}

pub fn library_names() -> Vec<&'static str> {
    LIBRARY.iter().map(|l| l.name).collect()
}

/// A total, deterministic observation on values.
#[derive(Clone, Copy)]
pub struct PredicateImpl {
    pub name: &'static str,
    /// Accepted representations of the container position, if any.
    container: Option<&'static [Repr]>,
    elems: usize,
    eval: fn(&[Value]) -> bool,
}

impl fmt::Debug for PredicateImpl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PredicateImpl({})", self.name)
    }
}

impl PredicateImpl {
    pub fn eval(&self, args: &[Value]) -> bool {
        (self.eval)(args)
    }

    pub fn accepts(&self, kinds: &[Kind]) -> bool {
        let rest = match (self.container, kinds.first()) {
            (Some(rs), Some(Kind::Repr(r))) if rs.contains(r) => &kinds[1..],
            (Some(_), _) => return false,
            (None, _) => kinds,
        };
        rest.len() == self.elems && rest.iter().all(|k| *k == Kind::Elem)
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(rs) = self.container {
            parts.push(rs.iter().map(|r| r.keyword()).collect::<Vec<_>>().join("|"));
        }
        parts.extend(std::iter::repeat("elem".to_string()).take(self.elems));
        parts.join(" ")
    }
}

const SEQ: &[Repr] = &[Repr::List, Repr::Queue];
const ANY: &[Repr] = &[Repr::List, Repr::Queue, Repr::Tree];

fn seq(v: &Value) -> Vec<i64> {
    v.sequence().unwrap_or_default()
}

static PREDICATES: &[PredicateImpl] = &[
    PredicateImpl {
        name: "hd",
        container: Some(SEQ),
        elems: 1,
        eval: |a| seq(&a[0]).first() == Some(&elem(&a[1])),
    },
    PredicateImpl {
        name: "mem",
        container: Some(ANY),
        elems: 1,
        eval: |a| a[0].elements().contains(&elem(&a[1])),
    },
    PredicateImpl {
        name: "ord",
        container: Some(SEQ),
        elems: 2,
        // v occurs strictly after some occurrence of u
        eval: |a| {
            let (s, u, v) = (seq(&a[0]), elem(&a[1]), elem(&a[2]));
            match s.iter().position(|x| *x == u) {
                Some(i) => s[i + 1..].contains(&v),
                None => false,
            }
        },
    },
    PredicateImpl {
        name: "root",
        container: Some(&[Repr::Tree]),
        elems: 1,
        eval: |a| matches!(tree(&a[0]), Tree::Node(_, x, _) if *x == elem(&a[1])),
    },
    PredicateImpl { name: "lt", container: None, elems: 2, eval: |a| elem(&a[0]) < elem(&a[1]) },
    PredicateImpl { name: "le", container: None, elems: 2, eval: |a| elem(&a[0]) <= elem(&a[1]) },
];

pub fn predicate(name: &str) -> Option<PredicateImpl> {
    PREDICATES.iter().find(|p| p.name == name).copied()
}

pub fn predicate_names() -> Vec<&'static str> {
    PREDICATES.iter().map(|p| p.name).collect()
}
