//! Comparison selection rules: DGF (deterministic top-K), the Chernoff test
//! variant (leader plus uniform picks) and Sluggish Procedure A (repeat the
//! previous play with probability `p_stick`, otherwise act like Chernoff).

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::belief::BeliefState;
use crate::policy::SelectionPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    Dgf,
    Chernoff,
    Sluggish { p_stick: f64 },
}

/// The `K` cells with the highest sums.
pub fn dgf_action(belief: &BeliefState, k: usize) -> Vec<usize> {
    belief.top(k)
}

/// The leader plus `K - 1` cells drawn uniformly without replacement from
/// the other `M - 1`.
pub fn chernoff_action<R: Rng + ?Sized>(belief: &BeliefState, k: usize, rng: &mut R) -> Vec<usize> {
    let m = belief.cells();
    assert!(k >= 1 && k <= m, "need 1 <= K <= M");
    let leader = belief.top(1)[0];
    let mut rest: Vec<usize> = index::sample(rng, m - 1, k - 1)
        .into_iter()
        .map(|i| if i >= leader { i + 1 } else { i })
        .collect();
    rest.sort_unstable();
    let mut action = Vec::with_capacity(k);
    action.push(leader);
    action.extend(rest);
    action
}

#[derive(Debug, Clone)]
pub struct BaselinePolicy {
    kind: BaselineKind,
    k: usize,
    rng: ChaCha8Rng,
    coin: Option<ChaCha8Rng>,
    previous: Option<Vec<usize>>,
}

impl BaselinePolicy {
    pub fn new(kind: BaselineKind, k: usize, rng: ChaCha8Rng) -> Self {
        if let BaselineKind::Sluggish { p_stick } = kind {
            assert!((0.0..1.0).contains(&p_stick), "p_stick must lie in [0, 1)");
        }
        Self {
            kind,
            k,
            rng,
            coin: None,
            previous: None,
        }
    }

    /// Separate generator for Sluggish's stick/move coin.
    pub fn with_coin(mut self, coin: ChaCha8Rng) -> Self {
        self.coin = Some(coin);
        self
    }

    pub fn previous(&self) -> Option<&[usize]> {
        self.previous.as_deref()
    }

    pub fn set_previous(&mut self, previous: Option<Vec<usize>>) {
        self.previous = previous;
    }

    fn sluggish_action(&mut self, belief: &BeliefState, p_stick: f64) -> Vec<usize> {
        if self.previous.is_some() {
            let coin = self.coin.as_mut().unwrap_or(&mut self.rng);
            if coin.gen_bool(p_stick) {
                return self.previous.clone().expect("checked above");
            }
        }
        chernoff_action(belief, self.k, &mut self.rng)
    }
}

impl SelectionPolicy for BaselinePolicy {
    fn select(&mut self, belief: &BeliefState) -> Vec<usize> {
        let action = match self.kind {
            BaselineKind::Dgf => dgf_action(belief, self.k),
            BaselineKind::Chernoff => chernoff_action(belief, self.k, &mut self.rng),
            BaselineKind::Sluggish { p_stick } => self.sluggish_action(belief, p_stick),
        };
        self.previous = Some(action.clone());
        action
    }
}
