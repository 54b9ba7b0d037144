//! DNF over feature literals and a small simplifier.

use std::collections::BTreeSet;

use super::features::FeatureSet;
use super::formula::Prop;

/// A conjunction of feature literals, sorted by feature index.
pub type Cube = Vec<(usize, bool)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dnf {
    pub cubes: Vec<Cube>,
}

impl Dnf {
    pub fn bottom() -> Dnf {
        Dnf { cubes: vec![] }
    }

    pub fn top() -> Dnf {
        Dnf { cubes: vec![vec![]] }
    }

    pub fn is_top(&self) -> bool {
        self.cubes.iter().any(|c| c.is_empty())
    }

    pub fn or(mut self, other: Dnf) -> Dnf {
        self.cubes.extend(other.cubes);
        self
    }

    pub fn to_prop(&self, s: &FeatureSet) -> Prop {
        Prop::or(
            self.cubes
                .iter()
                .map(|c| Prop::and(c.iter().map(|&(i, b)| s.literal(i, b)).collect()))
                .collect(),
        )
    }

    pub fn eval(&self, fv: &[bool]) -> bool {
        self.cubes.iter().any(|c| c.iter().all(|&(i, b)| fv[i] == b))
    }

    /// Duplicate removal, absorption and merging of cubes that differ in
    /// exactly one complementary literal, to a fixpoint.
    pub fn simplify(mut self) -> Dnf {
        for c in &mut self.cubes {
            c.sort();
            c.dedup();
        }
        // contradictory cubes
        self.cubes.retain(|c| c.windows(2).all(|w| w[0].0 != w[1].0));
        if self.is_top() {
            return Dnf::top();
        }
        loop {
            let set: BTreeSet<Cube> = self.cubes.drain(..).collect();
            let mut cubes: Vec<Cube> = set.into_iter().collect();
            cubes.sort_by_key(|c| c.len());
            let mut kept: Vec<Cube> = Vec::new();
            for c in cubes {
                if !kept.iter().any(|k| subsumes(k, &c)) {
                    kept.push(c);
                }
            }
            let mut merged = None;
            'outer: for i in 0..kept.len() {
                for j in i + 1..kept.len() {
                    if let Some(m) = merge(&kept[i], &kept[j]) {
                        merged = Some((i, j, m));
                        break 'outer;
                    }
                }
            }
            if merged.is_none() {
                // self-subsuming resolution: a ∨ (b ∧ ¬l) with a = a' ∧ l, a' ⊆ b
                'res: for i in 0..kept.len() {
                    for j in 0..kept.len() {
                        if i == j {
                            continue;
                        }
                        if let Some(r) = strengthen(&kept[i], &kept[j]) {
                            kept[j] = r;
                            merged = Some((usize::MAX, usize::MAX, vec![]));
                            break 'res;
                        }
                    }
                }
            }
            match merged {
                Some((usize::MAX, _, _)) => self.cubes = kept,
                Some((i, j, m)) => {
                    kept.remove(j);
                    kept.remove(i);
                    kept.push(m);
                    self.cubes = kept;
                }
                None => {
                    kept.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
                    self.cubes = kept;
                    return self;
                }
            }
        }
    }
}

/// `a` is a sub-conjunction of `b`.
fn subsumes(a: &Cube, b: &Cube) -> bool {
    a.iter().all(|l| b.contains(l))
}

fn merge(a: &Cube, b: &Cube) -> Option<Cube> {
    if a.len() != b.len() {
        return None;
    }
    let mut diff = None;
    for (x, y) in a.iter().zip(b) {
        if x == y {
            continue;
        }
        if x.0 != y.0 || diff.is_some() {
            return None;
        }
        diff = Some(x.0);
    }
    let d = diff?;
    Some(a.iter().copied().filter(|l| l.0 != d).collect())
}

fn strengthen(a: &Cube, b: &Cube) -> Option<Cube> {
    for &(i, v) in a {
        if !b.contains(&(i, !v)) {
            continue;
        }
        if a.iter().all(|l| *l == (i, v) || b.contains(l)) {
            return Some(b.iter().copied().filter(|l| *l != (i, !v)).collect());
        }
    }
    None
}

/// Converts a quantifier-free body over features of `s` to DNF, giving up
/// past `cap` cubes.
pub fn to_dnf(p: &Prop, s: &FeatureSet, cap: usize) -> Option<Dnf> {
    dnf_of(p, true, s, cap)
}

fn dnf_of(p: &Prop, pos: bool, s: &FeatureSet, cap: usize) -> Option<Dnf> {
    match p {
        Prop::True => Some(if pos { Dnf::top() } else { Dnf::bottom() }),
        Prop::False => Some(if pos { Dnf::bottom() } else { Dnf::top() }),
        Prop::Atom(a) => {
            let i = s.index_of(a)?;
            Some(Dnf { cubes: vec![vec![(i, pos)]] })
        }
        Prop::Not(q) => dnf_of(q, !pos, s, cap),
        Prop::And(ps) if pos => conj(ps.iter().map(|q| dnf_of(q, true, s, cap)), cap),
        Prop::Or(ps) if !pos => conj(ps.iter().map(|q| dnf_of(q, false, s, cap)), cap),
        Prop::And(ps) | Prop::Or(ps) => {
            let mut out = Dnf::bottom();
            for q in ps {
                out = out.or(dnf_of(q, pos, s, cap)?);
                if out.cubes.len() > cap {
                    return None;
                }
            }
            Some(out)
        }
        Prop::Implies(a, b) => {
            let alt = Prop::Or(vec![Prop::Not(a.clone()), (**b).clone()]);
            dnf_of(&alt, pos, s, cap)
        }
        Prop::Iff(a, b) => {
            let alt = Prop::Or(vec![
                Prop::And(vec![(**a).clone(), (**b).clone()]),
                Prop::And(vec![Prop::Not(a.clone()), Prop::Not(b.clone())]),
            ]);
            dnf_of(&alt, pos, s, cap)
        }
        Prop::Forall(..) => None,
    }
}

fn conj(parts: impl Iterator<Item = Option<Dnf>>, cap: usize) -> Option<Dnf> {
    let mut acc = Dnf::top();
    for d in parts {
        let d = d?;
        let mut next = Vec::new();
        for a in &acc.cubes {
            for b in &d.cubes {
                let mut c = a.clone();
                c.extend(b.iter().copied());
                next.push(c);
                if next.len() > cap {
                    return None;
                }
            }
        }
        acc = Dnf { cubes: next }.simplify();
    }
    Some(acc)
}

/// Normalizes a body to a simplified DNF when that stays small, otherwise
/// returns it unchanged.
pub fn normalize(p: &Prop, s: &FeatureSet) -> Prop {
    match to_dnf(p, s, 4096) {
        Some(d) => d.simplify().to_prop(s),
        None => p.clone(),
    }
}
