use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Kind, Repr, Tree, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub max_container_size: usize,
    /// Inclusive element range.
    pub elem_lo: i64,
    pub elem_hi: i64,
    pub seed: u64,
    /// Draw cap for one sampling round.
    pub samples_per_round: usize,
    /// Consecutive consistent draws after which sampling gives up.
    pub consistent_streak_to_stop: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_container_size: 6,
            elem_lo: 0,
            elem_hi: 5,
            seed: 0,
            samples_per_round: 20_000,
            consistent_streak_to_stop: 200,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.elem_lo > self.elem_hi {
            return Err(format!("empty element domain {}..{}", self.elem_lo, self.elem_hi));
        }
        if self.consistent_streak_to_stop == 0 {
            return Err("consistent streak must be positive".into());
        }
        Ok(())
    }
}

/// Seeded value generator; one per thread.
pub struct Generator {
    pub cfg: GenConfig,
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(cfg: GenConfig) -> Generator {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Generator { cfg, rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn elem(&mut self) -> i64 {
        self.rng.gen_range(self.cfg.elem_lo..=self.cfg.elem_hi)
    }

    fn seq(&mut self, n: usize) -> Vec<i64> {
        (0..n).map(|_| self.elem()).collect()
    }

    fn tree(&mut self, n: usize) -> Tree {
        if n == 0 {
            return Tree::Leaf;
        }
        let left = self.rng.gen_range(0..n);
        let l = self.tree(left);
        let x = self.elem();
        let r = self.tree(n - 1 - left);
        Tree::node(l, x, r)
    }

    pub fn value(&mut self, kind: Kind) -> Value {
        let n = self.rng.gen_range(0..=self.cfg.max_container_size);
        match kind {
            Kind::Elem => Value::Elem(self.elem()),
            Kind::Bool => Value::Bool(self.rng.gen()),
            Kind::Repr(Repr::List) => Value::List(self.seq(n)),
            Kind::Repr(Repr::Queue) => {
                let s = self.seq(n);
                let split = if n == 0 { 0 } else { self.rng.gen_range(1..=n) };
                Value::Queue { front: s[..split].to_vec(), back: s[split..].iter().rev().copied().collect() }
            }
            Kind::Repr(Repr::Tree) => Value::Tree(self.tree(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn empty_containers_at_size_zero() {
        let mut g = Generator::new(GenConfig { max_container_size: 0, ..GenConfig::default() });
        assert_eq!(g.value(Kind::Repr(Repr::List)), Value::List(vec![]));
        assert_eq!(g.value(Kind::Repr(Repr::Tree)), Value::Tree(Tree::Leaf));
    }

    #[test]
    fn seeded_draws_repeat() {
        let draw = || {
            let mut g = Generator::new(GenConfig { seed: 42, ..GenConfig::default() });
            (0..20).map(|_| g.value(Kind::Repr(Repr::Queue))).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn small_lists_are_all_reached() {
        let cfg = GenConfig { max_container_size: 4, elem_lo: 0, elem_hi: 2, seed: 7, ..GenConfig::default() };
        let mut g = Generator::new(cfg);
        let seen: BTreeSet<Value> = (0..10_000).map(|_| g.value(Kind::Repr(Repr::List))).collect();
        let mut want = vec![vec![]];
        for a in 0..3 {
            want.push(vec![a]);
            for b in 0..3 {
                want.push(vec![a, b]);
            }
        }
        assert_eq!(want.len(), 13);
        for w in want {
            assert!(seen.contains(&Value::List(w.clone())), "{w:?} never drawn");
        }
    }

    #[test]
    fn queues_keep_their_invariant() {
        let mut g = Generator::new(GenConfig::default());
        for _ in 0..500 {
            if let Value::Queue { front, back } = g.value(Kind::Repr(Repr::Queue)) {
                assert!(!front.is_empty() || back.is_empty());
            }
        }
    }
}
