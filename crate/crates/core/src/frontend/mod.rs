//! The configuration language: datatypes, predicates and library functions
//! bound to built-in implementations, one client with its contract and
//! body, and run settings. See docs/config-grammar.md.

mod formula;
mod paths;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use crate::inference::{Limits, SpecConfig};
use crate::logic::{Formula, FunctionSig, Interface, MethodPredicate, Sort, Var};
use crate::runtime::{Client, GenConfig, Repr, World};
use crate::sexp::{parse_all, Pos, Sexp, SexpError};
use crate::smt::Backend;

pub use formula::{formula_sexp, parse_formula, parse_prop, prop_sexp, Scope};
pub use paths::compile_paths;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct FrontendError {
    pub pos: Option<Pos>,
    pub msg: String,
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{p}: {}", self.msg),
            None => write!(f, "{}", self.msg),
        }
    }
}

impl FrontendError {
    pub fn at(s: &Sexp, msg: impl Into<String>) -> FrontendError {
        FrontendError { pos: Some(s.pos()), msg: msg.into() }
    }

    fn at_pos(pos: Pos, msg: impl Into<String>) -> FrontendError {
        FrontendError { pos: Some(pos), msg: msg.into() }
    }
}

impl From<SexpError> for FrontendError {
    fn from(e: SexpError) -> Self {
        FrontendError { pos: Some(e.pos), msg: e.msg }
    }
}

/// A source position that never affects equality, so that a printed and
/// reparsed config compares equal to the original.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span(pub Pos);

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub sort: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub sorts: Vec<String>,
    pub imp: String,
    pub at: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub result: Param,
    pub imp: String,
    pub at: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Let { var: String, func: String, args: Vec<String>, at: Span },
    If { cond: String, then: Vec<Stmt>, els: Vec<Stmt>, at: Span },
    Match { scrutinee: String, arms: Vec<Arm>, at: Span },
    Return { var: String, at: Span },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arm {
    pub ctor: String,
    pub vars: Vec<String>,
    pub body: Vec<Stmt>,
    pub at: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub result: Param,
    pub requires: Sexp,
    pub ensures: Sexp,
    pub body: Vec<Stmt>,
    pub at: Span,
}

/// A parsed configuration file, before name resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub datatypes: Vec<(String, String)>,
    pub predicates: Vec<PredicateDecl>,
    pub functions: Vec<FunctionDecl>,
    pub client: ClientDecl,
    pub gen: GenConfig,
    pub limits: Limits,
    pub solver: Option<String>,
}

fn atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, FrontendError> {
    s.as_atom().ok_or_else(|| FrontendError::at(s, format!("expected {what}")))
}

fn list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp], FrontendError> {
    s.as_list().ok_or_else(|| FrontendError::at(s, format!("expected {what}")))
}

fn number<T: std::str::FromStr>(s: &Sexp, what: &str) -> Result<T, FrontendError> {
    atom(s, what)?.parse().map_err(|_| FrontendError::at(s, format!("expected {what}")))
}

fn shape<'a>(s: &'a Sexp, n: usize, usage: &str) -> Result<&'a [Sexp], FrontendError> {
    match s.as_list() {
        Some(items) if items.len() == n => Ok(items),
        _ => Err(FrontendError::at(s, format!("expected {usage}"))),
    }
}

fn param(s: &Sexp) -> Result<Param, FrontendError> {
    let it = shape(s, 2, "(name sort)")?;
    Ok(Param { name: atom(&it[0], "a name")?.to_string(), sort: atom(&it[1], "a sort")?.to_string() })
}

fn params(s: &Sexp) -> Result<Vec<Param>, FrontendError> {
    list(s, "a parameter list")?.iter().map(param).collect()
}

fn stmts(items: &[Sexp]) -> Result<Vec<Stmt>, FrontendError> {
    items.iter().map(stmt).collect()
}

fn stmt(s: &Sexp) -> Result<Stmt, FrontendError> {
    let at = Span(s.pos());
    match s.head() {
        Some("let") => {
            let it = shape(s, 3, "(let x (f args...))")?;
            let call = list(&it[2], "a call (f args...)")?;
            let Some((f, args)) = call.split_first() else { return Err(FrontendError::at(&it[2], "empty call")) };
            Ok(Stmt::Let {
                var: atom(&it[1], "a variable")?.to_string(),
                func: atom(f, "a function name")?.to_string(),
                args: args.iter().map(|a| atom(a, "a variable").map(String::from)).collect::<Result<_, _>>()?,
                at,
            })
        }
        Some("if") => {
            let it = shape(s, 4, "(if b (then...) (else...))")?;
            Ok(Stmt::If {
                cond: atom(&it[1], "a Boolean variable")?.to_string(),
                then: stmts(list(&it[2], "a statement list")?)?,
                els: stmts(list(&it[3], "a statement list")?)?,
                at,
            })
        }
        Some("match") => {
            let it = list(s, "")?;
            if it.len() < 3 {
                return Err(FrontendError::at(s, "expected (match v (ctor (vars...) stmts...)...)"));
            }
            let mut arms = Vec::new();
            for a in &it[2..] {
                let parts = list(a, "a match arm")?;
                if parts.len() < 2 {
                    return Err(FrontendError::at(a, "expected (ctor (vars...) stmts...)"));
                }
                arms.push(Arm {
                    ctor: atom(&parts[0], "a constructor")?.to_string(),
                    vars: list(&parts[1], "a variable list")?
                        .iter()
                        .map(|v| atom(v, "a variable").map(String::from))
                        .collect::<Result<_, _>>()?,
                    body: stmts(&parts[2..])?,
                    at: Span(a.pos()),
                });
            }
            Ok(Stmt::Match { scrutinee: atom(&it[1], "a variable")?.to_string(), arms, at })
        }
        Some("return") => {
            let it = shape(s, 2, "(return v)")?;
            Ok(Stmt::Return { var: atom(&it[1], "a variable")?.to_string(), at })
        }
        _ => Err(FrontendError::at(s, "expected let, if, match or return")),
    }
}

fn client(s: &Sexp) -> Result<ClientDecl, FrontendError> {
    let it = list(s, "")?;
    if it.len() < 4 {
        return Err(FrontendError::at(s, "expected (client name (params...) (result sort) clauses...)"));
    }
    let mut requires = None;
    let mut ensures = None;
    let mut body = None;
    for c in &it[4..] {
        match c.head() {
            Some("requires") => requires = Some(shape(c, 2, "(requires formula)")?[1].clone()),
            Some("ensures") => ensures = Some(shape(c, 2, "(ensures formula)")?[1].clone()),
            Some("body") => body = Some(stmts(&list(c, "")?[1..])?),
            _ => return Err(FrontendError::at(c, "expected requires, ensures or body")),
        }
    }
    Ok(ClientDecl {
        name: atom(&it[1], "a client name")?.to_string(),
        params: params(&it[2])?,
        result: param(&it[3])?,
        requires: requires.unwrap_or_else(|| Sexp::atom("true")),
        ensures: ensures.ok_or_else(|| FrontendError::at(s, "client has no ensures clause"))?,
        body: body.ok_or_else(|| FrontendError::at(s, "client has no body"))?,
        at: Span(s.pos()),
    })
}

fn settings(s: &Sexp) -> Result<Vec<(&str, &[Sexp], &Sexp)>, FrontendError> {
    list(s, "")?[1..]
        .iter()
        .map(|e| {
            let it = list(e, "(key value...)")?;
            let Some((k, v)) = it.split_first() else { return Err(FrontendError::at(e, "empty setting")) };
            Ok((atom(k, "a setting name")?, v, e))
        })
        .collect()
}

fn one<'a>(v: &'a [Sexp], e: &Sexp) -> Result<&'a Sexp, FrontendError> {
    match v {
        [x] => Ok(x),
        _ => Err(FrontendError::at(e, "expected one value")),
    }
}

fn generator(s: &Sexp, g: &mut GenConfig) -> Result<(), FrontendError> {
    for (k, v, e) in settings(s)? {
        match k {
            "seed" => g.seed = number(one(v, e)?, "an unsigned integer")?,
            "max-size" => g.max_container_size = number(one(v, e)?, "a size")?,
            "elems" => {
                let [lo, hi] = v else { return Err(FrontendError::at(e, "expected (elems lo hi)")) };
                g.elem_lo = number(lo, "an integer")?;
                g.elem_hi = number(hi, "an integer")?;
            }
            "streak" => g.consistent_streak_to_stop = number(one(v, e)?, "a count")?,
            "draws" => g.samples_per_round = number(one(v, e)?, "a count")?,
            _ => return Err(FrontendError::at(e, format!("unknown generator setting `{k}`"))),
        }
    }
    g.validate().map_err(|m| FrontendError::at(s, m))
}

fn limits(s: &Sexp, l: &mut Limits) -> Result<(), FrontendError> {
    let secs = |x: &Sexp| -> Result<Duration, FrontendError> {
        let f: f64 = number(x, "seconds")?;
        if !(f.is_finite() && f > 0.0) {
            return Err(FrontendError::at(x, "expected a positive number of seconds"));
        }
        Ok(Duration::from_secs_f64(f))
    };
    for (k, v, e) in settings(s)? {
        match k {
            "max-qvars" => l.k_max = number(one(v, e)?, "a count")?,
            "timeout-smt" => l.smt_timeout = secs(one(v, e)?)?,
            "weaken-bound" => l.weaken_bound = secs(one(v, e)?)?,
            "cex-budget" => l.cex_budget = number(one(v, e)?, "a count")?,
            _ => return Err(FrontendError::at(e, format!("unknown limit `{k}`"))),
        }
    }
    Ok(())
}

/// Parses the surface syntax. Names are resolved by [`Config::resolve`].
pub fn parse(text: &str) -> Result<Config, FrontendError> {
    let forms = parse_all(text)?;
    let mut datatypes = Vec::new();
    let mut predicates = Vec::new();
    let mut functions = Vec::new();
    let mut the_client = None;
    let mut gen = GenConfig::default();
    let mut lim = Limits::default();
    let mut solver = None;
    for f in &forms {
        let at = Span(f.pos());
        match f.head() {
            Some("datatype") => {
                let it = shape(f, 3, "(datatype name repr)")?;
                datatypes.push((atom(&it[1], "a name")?.to_string(), atom(&it[2], "a representation")?.to_string()));
            }
            Some("predicate") => {
                let it = shape(f, 4, "(predicate name (sorts...) impl)")?;
                predicates.push(PredicateDecl {
                    name: atom(&it[1], "a name")?.to_string(),
                    sorts: list(&it[2], "a sort list")?
                        .iter()
                        .map(|s| atom(s, "a sort").map(String::from))
                        .collect::<Result<_, _>>()?,
                    imp: atom(&it[3], "an implementation name")?.to_string(),
                    at,
                });
            }
            Some("function") => {
                let it = shape(f, 5, "(function name (params...) (result sort) impl)")?;
                functions.push(FunctionDecl {
                    name: atom(&it[1], "a name")?.to_string(),
                    params: params(&it[2])?,
                    result: param(&it[3])?,
                    imp: atom(&it[4], "an implementation name")?.to_string(),
                    at,
                });
            }
            Some("client") => {
                if the_client.is_some() {
                    return Err(FrontendError::at(f, "only one client per configuration"));
                }
                the_client = Some(client(f)?);
            }
            Some("generator") => generator(f, &mut gen)?,
            Some("limits") => limits(f, &mut lim)?,
            Some("solver") => solver = Some(atom(&shape(f, 2, "(solver \"command\")")?[1], "a command")?.to_string()),
            _ => return Err(FrontendError::at(f, "expected datatype, predicate, function, client, generator, limits or solver")),
        }
    }
    let client = the_client.ok_or(FrontendError { pos: None, msg: "no client declared".into() })?;
    Ok(Config { datatypes, predicates, functions, client, gen, limits: lim, solver })
}

fn pretty_stmts(out: &mut String, body: &[Stmt], indent: usize) {
    for s in body {
        out.push('\n');
        out.push_str(&" ".repeat(indent));
        pretty_stmt(out, s, indent);
    }
}

fn pretty_stmt(out: &mut String, s: &Stmt, indent: usize) {
    match s {
        Stmt::Let { var, func, args, .. } => {
            let mut call = vec![Sexp::atom(func)];
            call.extend(args.iter().map(|a| Sexp::atom(a)));
            out.push_str(&format!("(let {} {})", Sexp::atom(var), Sexp::list(call)));
        }
        Stmt::Return { var, .. } => out.push_str(&format!("(return {})", Sexp::atom(var))),
        Stmt::If { cond, then, els, .. } => {
            out.push_str(&format!("(if {}", Sexp::atom(cond)));
            for branch in [then, els] {
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
                out.push('(');
                pretty_stmts(out, branch, indent + 4);
                out.push(')');
            }
            out.push(')');
        }
        Stmt::Match { scrutinee, arms, .. } => {
            out.push_str(&format!("(match {}", Sexp::atom(scrutinee)));
            for a in arms {
                let vars = Sexp::list(a.vars.iter().map(|v| Sexp::atom(v)).collect());
                out.push_str(&format!("\n{}({} {}", " ".repeat(indent + 2), Sexp::atom(&a.ctor), vars));
                pretty_stmts(out, &a.body, indent + 4);
                out.push(')');
            }
            out.push(')');
        }
    }
}

fn param_sexp(p: &Param) -> Sexp {
    Sexp::list(vec![Sexp::atom(&p.name), Sexp::atom(&p.sort)])
}

fn params_sexp(ps: &[Param]) -> Sexp {
    Sexp::list(ps.iter().map(param_sexp).collect())
}

fn secs(d: Duration) -> String {
    format!("{}", d.as_secs_f64())
}

impl fmt::Display for Config {
    /// Canonical text; parsing it gives back an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, r) in &self.datatypes {
            writeln!(f, "(datatype {} {})", Sexp::atom(n), Sexp::atom(r))?;
        }
        for p in &self.predicates {
            let sorts = Sexp::list(p.sorts.iter().map(|s| Sexp::atom(s)).collect());
            writeln!(f, "(predicate {} {} {})", Sexp::atom(&p.name), sorts, Sexp::atom(&p.imp))?;
        }
        for d in &self.functions {
            writeln!(
                f,
                "(function {} {} {} {})",
                Sexp::atom(&d.name),
                params_sexp(&d.params),
                param_sexp(&d.result),
                Sexp::atom(&d.imp)
            )?;
        }
        let c = &self.client;
        let mut body = String::new();
        pretty_stmts(&mut body, &c.body, 4);
        writeln!(
            f,
            "(client {} {} {}\n  (requires {})\n  (ensures {})\n  (body{}))",
            Sexp::atom(&c.name),
            params_sexp(&c.params),
            param_sexp(&c.result),
            c.requires,
            c.ensures,
            body
        )?;
        let g = &self.gen;
        writeln!(
            f,
            "(generator (seed {}) (max-size {}) (elems {} {}) (streak {}) (draws {}))",
            g.seed, g.max_container_size, g.elem_lo, g.elem_hi, g.consistent_streak_to_stop, g.samples_per_round
        )?;
        let l = &self.limits;
        writeln!(
            f,
            "(limits (max-qvars {}) (timeout-smt {}) (weaken-bound {}) (cex-budget {}))",
            l.k_max,
            secs(l.smt_timeout),
            secs(l.weaken_bound),
            l.cex_budget
        )?;
        if let Some(s) = &self.solver {
            writeln!(f, "(solver \"{s}\")")?;
        }
        Ok(())
    }
}

fn is_feature_var(name: &str) -> bool {
    name.strip_prefix('u').is_some_and(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
}

impl Config {
    pub fn sort(&self, name: &str, at: Pos) -> Result<Sort, FrontendError> {
        match name {
            "elem" => Ok(Sort::Element),
            "bool" => Ok(Sort::Bool),
            n if self.datatypes.iter().any(|(d, _)| d == n) => Ok(Sort::container(n)),
            n => Err(FrontendError::at_pos(at, format!("unknown sort `{n}`"))),
        }
    }

    fn var(&self, p: &Param, at: Pos) -> Result<Var, FrontendError> {
        Ok(Var::new(&p.name, self.sort(&p.sort, at)?))
    }

    /// Calls in the client body, constructor patterns included.
    pub fn call_sites(&self) -> usize {
        fn count(body: &[Stmt]) -> usize {
            body.iter()
                .map(|s| match s {
                    Stmt::Let { .. } => 1,
                    Stmt::Return { .. } => 0,
                    Stmt::If { then, els, .. } => count(then) + count(els),
                    Stmt::Match { arms, .. } => arms.iter().map(|a| 1 + count(&a.body)).sum(),
                })
                .sum()
        }
        count(&self.client.body)
    }

    /// Resolves names and compiles the client into one query per path.
    pub fn resolve(&self) -> Result<SpecConfig, FrontendError> {
        let mut world = World::default();
        for (n, r) in &self.datatypes {
            if matches!(n.as_str(), "elem" | "bool") || world.datatypes.contains_key(n) {
                return Err(FrontendError { pos: None, msg: format!("datatype `{n}` declared twice or reserved") });
            }
            let repr = Repr::parse(r).ok_or(FrontendError {
                pos: None,
                msg: format!("unknown representation `{r}` (list, batched-queue or tree)"),
            })?;
            world.add_datatype(n, repr);
        }
        for p in &self.predicates {
            let at = p.at.0;
            if world.predicates.iter().any(|(m, _)| m.name == p.name) {
                return Err(FrontendError::at_pos(at, format!("predicate `{}` declared twice", p.name)));
            }
            let sorts = p.sorts.iter().map(|s| self.sort(s, at)).collect::<Result<Vec<_>, _>>()?;
            let mp = MethodPredicate::new(&p.name, sorts);
            mp.validate().map_err(|e| FrontendError::at_pos(at, e.to_string()))?;
            world.add_predicate(mp, &p.imp).map_err(|e| FrontendError::at_pos(at, e.to_string()))?;
        }
        for d in &self.functions {
            let at = d.at.0;
            if world.functions.contains_key(&d.name) || d.name == self.client.name {
                return Err(FrontendError::at_pos(at, format!("function `{}` declared twice", d.name)));
            }
            let mut vars: Vec<Var> = d.params.iter().map(|p| self.var(p, at)).collect::<Result<_, _>>()?;
            let result = self.var(&d.result, at)?;
            vars.push(result.clone());
            for (i, v) in vars.iter().enumerate() {
                if vars[..i].iter().any(|w| w.name == v.name) {
                    return Err(FrontendError::at_pos(at, format!("`{}` appears twice in the signature", v.name)));
                }
                if is_feature_var(&v.name) {
                    return Err(FrontendError::at_pos(at, format!("`{}` is reserved for quantified variables", v.name)));
                }
            }
            vars.pop();
            world
                .add_function(FunctionSig::new(&d.name, vars, result), &d.imp)
                .map_err(|e| FrontendError::at_pos(at, e.to_string()))?;
        }

        let c = &self.client;
        let at = c.at.0;
        let params: Vec<Var> = c.params.iter().map(|p| self.var(p, at)).collect::<Result<_, _>>()?;
        let result = self.var(&c.result, at)?;
        if result.sort == Sort::Bool {
            return Err(FrontendError::at_pos(at, "the client must return an element or a datatype value"));
        }
        let preds = world.method_predicates();
        let pre = parse_prop(&c.requires, &Scope::new(&params, &preds))?;
        let mut scope_vars = params.clone();
        scope_vars.push(result.clone());
        if scope_vars[..params.len()].iter().any(|p| p.name == result.name) {
            return Err(FrontendError::at_pos(at, format!("`{}` names both a parameter and the result", result.name)));
        }
        let post = parse_prop(&c.ensures, &Scope::new(&scope_vars, &preds))?;
        let mut client = Client { name: c.name.clone(), params, result, pre, post, paths: vec![] };
        client.paths = compile_paths(&world, &client, &c.body)?;

        let backend = self.solver.as_deref().map(Backend::parse).unwrap_or(Backend::Ground);
        Ok(SpecConfig { client, world, gen: self.gen.clone(), limits: self.limits.clone(), backend })
    }
}

/// Parses and resolves a configuration.
pub fn load(text: &str) -> Result<SpecConfig, FrontendError> {
    parse(text)?.resolve()
}

/// Parses a spec for library function `f` of `cfg`, written over its
/// parameter and result names.
pub fn parse_spec(cfg: &SpecConfig, f: &str, text: &str) -> Result<Formula, FrontendError> {
    let (sig, _) = cfg
        .world
        .functions
        .get(f)
        .ok_or(FrontendError { pos: None, msg: format!("unknown function `{f}`") })?;
    let preds = cfg.predicates();
    let s = crate::sexp::parse_one(text)?;
    parse_formula(&s, &Scope::new(&sig.vars(), &preds))
}

/// `(interface (spec f formula)...)`, one spec per line.
pub fn interface_text(delta: &Interface) -> String {
    let mut out = String::from("(interface");
    for (f, phi) in &delta.specs {
        out.push_str(&format!("\n  (spec {} {})", Sexp::atom(f), formula_sexp(phi)));
    }
    out.push(')');
    out
}

/// Inverse of [`interface_text`] for the functions of `cfg`.
pub fn parse_interface(cfg: &SpecConfig, text: &str) -> Result<Interface, FrontendError> {
    let s = crate::sexp::parse_one(text)?;
    if s.head() != Some("interface") {
        return Err(FrontendError::at(&s, "expected (interface (spec f formula)...)"));
    }
    let preds = cfg.predicates();
    let mut specs = BTreeMap::new();
    for e in &s.as_list().unwrap()[1..] {
        let it = shape(e, 3, "(spec f formula)")?;
        let f = atom(&it[1], "a function name")?;
        let (sig, _) = cfg.world.functions.get(f).ok_or_else(|| FrontendError::at(&it[1], format!("unknown function `{f}`")))?;
        specs.insert(f.to_string(), parse_formula(&it[2], &Scope::new(&sig.vars(), &preds))?);
    }
    Ok(Interface { specs })
}
