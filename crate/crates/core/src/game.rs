//! Finite games on bitmask-encoded player sets, partitions of the player set,
//! and the derived games used by coalitional values (quotient, modified
//! quotient, two-step Shapley intermediate, projection, carrier restriction).
//!
//! Player `i` is bit `i` of a `u64`. Dense games store `2^n` payoffs indexed
//! by bitmask; lazy games wrap a pure closure and are limited only by the
//! 64-bit word.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest player count for which dense tables are built.
pub const DENSE_CAP: usize = 24;
/// Hard limit imposed by the bitmask word.
pub const MAX_PLAYERS: usize = 64;

/// Bitmask with the lowest `n` bits set.
#[inline]
pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Maps a mask over `positions.len()` local players onto the global players
/// listed in `positions`.
#[inline]
pub fn scatter(local: u64, positions: &[usize]) -> u64 {
    let mut out = 0u64;
    let mut rest = local;
    while rest != 0 {
        let k = rest.trailing_zeros() as usize;
        out |= 1u64 << positions[k];
        rest &= rest - 1;
    }
    out
}

/// Indices of the set bits of `bits`, ascending.
pub fn members(bits: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(bits.count_ones() as usize);
    let mut rest = bits;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    out
}

/// Iterator over all submasks of `mask`, including `0` and `mask` itself.
pub fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}

/// A subset of the players `0..n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlayerSet {
    bits: u64,
    n: u8,
}

impl PlayerSet {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n > MAX_PLAYERS {
            return Err(Error::TooManyPlayers { n, cap: MAX_PLAYERS });
        }
        if bits & !full_mask(n) != 0 {
            return Err(Error::PlayerOutOfRange { bits, n });
        }
        Ok(PlayerSet { bits, n: n as u8 })
    }

    pub fn from_players(players: &[usize], n: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &p in players {
            if p >= n || p >= MAX_PLAYERS {
                return Err(Error::InvalidArgument(format!(
                    "player {p} out of range for {n} players"
                )));
            }
            bits |= 1 << p;
        }
        PlayerSet::new(bits, n)
    }

    pub fn empty(n: usize) -> Self {
        PlayerSet { bits: 0, n: n.min(MAX_PLAYERS) as u8 }
    }

    pub fn full(n: usize) -> Self {
        PlayerSet { bits: full_mask(n), n: n.min(MAX_PLAYERS) as u8 }
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < 64 && self.bits >> i & 1 == 1
    }

    pub fn is_subset(&self, other: &PlayerSet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn players(&self) -> Vec<usize> {
        members(self.bits)
    }
}

impl fmt::Debug for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(members(self.bits)).finish()
    }
}

type Payoff = dyn Fn(u64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Repr {
    Dense(Arc<[f64]>),
    Lazy(Arc<Payoff>),
}

/// Storage strategy of a [`Game`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    Dense,
    Lazy,
}

/// A real-valued set function on the subsets of `n` players. The empty-set
/// value may be nonzero.
#[derive(Clone)]
pub struct Game {
    n: usize,
    repr: Repr,
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Dense(v) => f
                .debug_struct("Game")
                .field("n", &self.n)
                .field("values", v)
                .finish(),
            Repr::Lazy(_) => f.debug_struct("Game").field("n", &self.n).field("kind", &"lazy").finish(),
        }
    }
}

/// JSON form of a dense game.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GameJson {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Game {
    /// Dense game from a table of `2^n` payoffs in bitmask order.
    pub fn dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > DENSE_CAP {
            return Err(Error::TooManyPlayers { n, cap: DENSE_CAP });
        }
        let expected = 1usize << n;
        if values.len() != expected {
            return Err(Error::TableSize { n, expected, got: values.len() });
        }
        Ok(Game { n, repr: Repr::Dense(values.into()) })
    }

    /// Dense game tabulated from `f`.
    pub fn from_fn(n: usize, f: impl FnMut(u64) -> f64) -> Result<Self> {
        if n > DENSE_CAP {
            return Err(Error::TooManyPlayers { n, cap: DENSE_CAP });
        }
        let values: Vec<f64> = (0..1u64 << n).map(f).collect();
        Game::dense(n, values)
    }

    /// Lazy game backed by a pure closure. The closure is called with masks
    /// inside `0..2^n` only.
    pub fn lazy(n: usize, f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if n > MAX_PLAYERS {
            return Err(Error::TooManyPlayers { n, cap: MAX_PLAYERS });
        }
        Ok(Game { n, repr: Repr::Lazy(Arc::new(f)) })
    }

    /// Lazy game that caches every evaluated coalition.
    pub fn lazy_memo(n: usize, f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let cache: Mutex<HashMap<u64, f64>> = Mutex::new(HashMap::new());
        Game::lazy(n, move |s| {
            if let Some(&v) = cache.lock().expect("game cache poisoned").get(&s) {
                return v;
            }
            let v = f(s);
            cache.lock().expect("game cache poisoned").insert(s, v);
            v
        })
    }

    /// Game defined on an explicit set of coalitions. Evaluating any other
    /// coalition panics; used where the caller has enumerated every coalition
    /// a value computation will touch.
    pub fn from_map(n: usize, table: HashMap<u64, f64>) -> Result<Self> {
        Game::lazy(n, move |s| match table.get(&s) {
            Some(&v) => v,
            None => panic!("coalition {s:#b} was not precomputed"),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GameKind {
        match self.repr {
            Repr::Dense(_) => GameKind::Dense,
            Repr::Lazy(_) => GameKind::Lazy,
        }
    }

    /// Payoff of the coalition encoded by `bits`.
    #[inline]
    pub fn eval(&self, bits: u64) -> f64 {
        debug_assert!(bits & !full_mask(self.n) == 0);
        match &self.repr {
            Repr::Dense(v) => v[bits as usize],
            Repr::Lazy(f) => f(bits),
        }
    }

    pub fn value(&self, s: &PlayerSet) -> f64 {
        self.eval(s.bits())
    }

    #[inline]
    pub fn empty_value(&self) -> f64 {
        self.eval(0)
    }

    /// Payoff of the grand coalition.
    pub fn grand_value(&self) -> f64 {
        self.eval(full_mask(self.n))
    }

    pub fn is_cooperative(&self) -> bool {
        self.empty_value() == 0.0
    }

    pub fn full(&self) -> PlayerSet {
        PlayerSet::full(self.n)
    }

    pub fn dense_values(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Dense(v) => Some(v),
            Repr::Lazy(_) => None,
        }
    }

    pub fn to_dense(&self) -> Result<Game> {
        match self.repr {
            Repr::Dense(_) => Ok(self.clone()),
            Repr::Lazy(_) => Game::from_fn(self.n, |s| self.eval(s)),
        }
    }

    /// Applies `f` to every payoff, keeping the storage kind.
    pub fn map(&self, f: impl Fn(u64, f64) -> f64 + Send + Sync + 'static) -> Game {
        match &self.repr {
            Repr::Dense(v) => Game {
                n: self.n,
                repr: Repr::Dense(v.iter().enumerate().map(|(s, &x)| f(s as u64, x)).collect()),
            },
            Repr::Lazy(g) => {
                let g = g.clone();
                Game { n: self.n, repr: Repr::Lazy(Arc::new(move |s| f(s, g(s)))) }
            }
        }
    }

    /// `S ↦ v(S) − v(∅)`; the game every centered extension evaluates.
    pub fn centered(&self) -> Game {
        let base = self.empty_value();
        if base == 0.0 {
            return self.clone();
        }
        self.map(move |_, x| x - base)
    }

    /// `a·self + other` on the same player set.
    pub fn linear_combination(&self, a: f64, other: &Game) -> Result<Game> {
        if self.n != other.n {
            return Err(Error::InvalidArgument(format!(
                "player counts differ: {} vs {}",
                self.n, other.n
            )));
        }
        if self.n <= DENSE_CAP {
            return Game::from_fn(self.n, |s| a * self.eval(s) + other.eval(s));
        }
        let (u, w) = (self.clone(), other.clone());
        Game::lazy(self.n, move |s| a * u.eval(s) + w.eval(s))
    }

    /// The game on `players` (relabelled `0..players.len()` in the given
    /// order) with `w(T) = v(T)`.
    pub fn subgame(&self, players: &[usize]) -> Result<Game> {
        for &p in players {
            if p >= self.n {
                return Err(Error::InvalidArgument(format!("player {p} not in game")));
            }
        }
        let pos = players.to_vec();
        if players.len() <= DENSE_CAP {
            Game::from_fn(players.len(), |t| self.eval(scatter(t, &pos)))
        } else {
            let g = self.clone();
            Game::lazy(players.len(), move |t| g.eval(scatter(t, &pos)))
        }
    }

    pub fn to_json(&self) -> Result<GameJson> {
        let dense = self.to_dense()?;
        Ok(GameJson { n: self.n, values: dense.dense_values().unwrap_or(&[]).to_vec() })
    }

    pub fn from_json(json: &GameJson) -> Result<Game> {
        Game::dense(json.n, json.values.clone())
    }

    /// Wraps the game so that every evaluation bumps `counter`.
    pub fn counted(&self, counter: Arc<std::sync::atomic::AtomicUsize>) -> Game {
        let g = self.clone();
        Game {
            n: self.n,
            repr: Repr::Lazy(Arc::new(move |s| {
                counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                g.eval(s)
            })),
        }
    }
}

/// Projection onto cooperative games: `ṽ(∅) = 0`, `ṽ(S) = v(S)` otherwise.
pub fn project(v: &Game) -> Game {
    if v.is_cooperative() {
        return v.clone();
    }
    v.map(|s, x| if s == 0 { 0.0 } else { x })
}

/// An ordered list of disjoint nonempty blocks covering `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    blocks: Vec<u64>,
    members: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.members).finish()
    }
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || n > MAX_PLAYERS {
            return Err(Error::InvalidPartition(format!("player count {n} out of range")));
        }
        let mut masks = Vec::with_capacity(blocks.len());
        let mut seen = 0u64;
        for (j, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::InvalidPartition(format!("block {j} is empty")));
            }
            let mut mask = 0u64;
            for &p in b {
                if p >= n {
                    return Err(Error::InvalidPartition(format!(
                        "player {p} in block {j} is outside 0..{n}"
                    )));
                }
                if (seen | mask) >> p & 1 == 1 {
                    return Err(Error::InvalidPartition(format!("player {p} appears twice")));
                }
                mask |= 1 << p;
            }
            seen |= mask;
            masks.push(mask);
        }
        if seen != full_mask(n) {
            let missing = members(full_mask(n) & !seen);
            return Err(Error::InvalidPartition(format!("players {missing:?} are not covered")));
        }
        Ok(Partition::from_masks_unchecked(n, masks))
    }

    pub fn from_masks(n: usize, masks: Vec<u64>) -> Result<Self> {
        Partition::new(n, masks.into_iter().map(members).collect())
    }

    fn from_masks_unchecked(n: usize, blocks: Vec<u64>) -> Self {
        let members: Vec<Vec<usize>> = blocks.iter().map(|&b| crate::game::members(b)).collect();
        let mut block_of = vec![0; n];
        for (j, ms) in members.iter().enumerate() {
            for &p in ms {
                block_of[p] = j;
            }
        }
        Partition { n, blocks, members, block_of }
    }

    pub fn singletons(n: usize) -> Self {
        Partition::from_masks_unchecked(n, (0..n).map(|i| 1u64 << i).collect())
    }

    pub fn grand(n: usize) -> Self {
        Partition::from_masks_unchecked(n, vec![full_mask(n)])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks.
    #[inline]
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn block_mask(&self, j: usize) -> u64 {
        self.blocks[j]
    }

    pub fn block(&self, j: usize) -> PlayerSet {
        PlayerSet { bits: self.blocks[j], n: self.n as u8 }
    }

    pub fn block_masks(&self) -> &[u64] {
        &self.blocks
    }

    /// Players of block `j`, ascending.
    pub fn members(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.members
    }

    #[inline]
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.len() == self.n
    }

    /// Union of the blocks in `a` (a mask over block indices).
    #[inline]
    pub fn union(&self, a: u64) -> u64 {
        let mut out = 0;
        let mut rest = a;
        while rest != 0 {
            out |= self.blocks[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        out
    }

    /// `union(a)` for every `a ⊆ M`, indexed by `a`.
    pub fn union_table(&self) -> Result<Vec<u64>> {
        let m = self.m();
        if m > DENSE_CAP {
            return Err(Error::TooManyPlayers { n: m, cap: DENSE_CAP });
        }
        let mut table = vec![0u64; 1 << m];
        for a in 1..table.len() {
            let low = a.trailing_zeros() as usize;
            table[a] = table[a & (a - 1)] | self.blocks[low];
        }
        Ok(table)
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n == coarser.n
            && self.blocks.iter().all(|&b| coarser.blocks.iter().any(|&c| b & !c == 0))
    }

    /// Same blocks irrespective of order.
    pub fn same_blocks(&self, other: &Partition) -> bool {
        let mut a = self.blocks.clone();
        let mut b = other.blocks.clone();
        a.sort_unstable();
        b.sort_unstable();
        self.n == other.n && a == b
    }

    /// Blocks with their members listed; the JSON form `[[0,1],[2]]`.
    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.members.clone()
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.members.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lists: Vec<Vec<usize>> = Vec::deserialize(d)?;
        let n = lists.iter().map(Vec::len).sum();
        Partition::new(n, lists).map_err(serde::de::Error::custom)
    }
}

fn check_partition(v: &Game, p: &Partition) -> Result<()> {
    if v.n() != p.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} players, game has {}",
            p.n(),
            v.n()
        )));
    }
    if p.m() > DENSE_CAP {
        return Err(Error::TooManyPlayers { n: p.m(), cap: DENSE_CAP });
    }
    Ok(())
}

fn check_in_block(p: &Partition, j: usize, t: u64) -> Result<()> {
    if j >= p.m() {
        return Err(Error::InvalidArgument(format!("block index {j} out of range")));
    }
    if t & !p.block_mask(j) != 0 {
        return Err(Error::NotInBlock { sub: t, block: j, block_bits: p.block_mask(j) });
    }
    Ok(())
}

/// Game on the blocks: `v^P(A) = v(∪_{j∈A} S_j)`.
pub fn quotient_game(v: &Game, p: &Partition) -> Result<Game> {
    check_partition(v, p)?;
    let unions = p.union_table()?;
    Game::dense(p.m(), unions.iter().map(|&u| v.eval(u)).collect())
}

/// `v^{P|T}`: the quotient game in which block `j` is represented by `T ⊆ S_j`.
pub fn modified_quotient_game(v: &Game, p: &Partition, j: usize, t: u64) -> Result<Game> {
    check_partition(v, p)?;
    check_in_block(p, j, t)?;
    let unions = p.union_table()?;
    Ok(modified_quotient_from_unions(|s| v.eval(s), &unions, p.block_mask(j), j, t))
}

pub(crate) fn modified_quotient_from_unions(
    v: impl Fn(u64) -> f64,
    unions: &[u64],
    block: u64,
    j: usize,
    t: u64,
) -> Game {
    let values = unions
        .iter()
        .enumerate()
        .map(|(a, &u)| {
            if a >> j & 1 == 1 {
                v((u & !block) | t)
            } else {
                v(u)
            }
        })
        .collect();
    Game { n: unions.len().trailing_zeros() as usize, repr: Repr::Dense(values) }
}

/// Two-step Shapley intermediate game
/// `A ↦ (|T|/|S_j|)·v^P(A) + |A|·(v(T) − (|T|/|S_j|)·v^P({j}))`.
pub fn tsh_intermediate_game(v: &Game, p: &Partition, j: usize, t: u64) -> Result<Game> {
    check_partition(v, p)?;
    check_in_block(p, j, t)?;
    if t == 0 {
        return Err(Error::EmptyCoalition);
    }
    let unions = p.union_table()?;
    Ok(tsh_intermediate_from_unions(|s| v.eval(s), &unions, p.block_mask(j), j, t))
}

pub(crate) fn tsh_intermediate_from_unions(
    v: impl Fn(u64) -> f64,
    unions: &[u64],
    block: u64,
    j: usize,
    t: u64,
) -> Game {
    let ratio = t.count_ones() as f64 / block.count_ones() as f64;
    let shift = v(t) - ratio * v(unions[1 << j]);
    let values = unions
        .iter()
        .enumerate()
        .map(|(a, &u)| ratio * v(u) + (a as u64).count_ones() as f64 * shift)
        .collect();
    Game { n: unions.len().trailing_zeros() as usize, repr: Repr::Dense(values) }
}

/// Restriction of `v` to its carrier `T`, as a game on `|T|` players
/// (relabelled in increasing order). Dense games are checked exhaustively;
/// lazy games are trusted.
pub fn restrict_to_carrier(v: &Game, t: &PlayerSet) -> Result<Game> {
    if t.bits() & !full_mask(v.n()) != 0 {
        return Err(Error::PlayerOutOfRange { bits: t.bits(), n: v.n() });
    }
    if let Some(values) = v.dense_values() {
        for s in 0..values.len() as u64 {
            let a = values[s as usize];
            let b = values[(s & t.bits()) as usize];
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::NotACarrier { carrier: t.bits(), witness: s });
            }
        }
    }
    v.subgame(&t.players())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn majority3() -> Game {
        Game::from_fn(3, |s| if s.count_ones() >= 2 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn projection_examples() {
        let v = Game::dense(2, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        assert_eq!(project(&v).dense_values().unwrap(), &[0.0, 2.0, 3.0, 5.0]);
        let c = Game::from_fn(2, |_| 5.0).unwrap();
        assert_eq!(project(&c).dense_values().unwrap(), &[0.0, 5.0, 5.0, 5.0]);
        let w = Game::dense(2, vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(project(&w).dense_values(), w.dense_values());
    }

    #[test]
    fn quotient_of_majority() {
        let v = majority3();
        let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let q = quotient_game(&v, &p).unwrap();
        assert_eq!(q.dense_values().unwrap(), &[0.0, 1.0, 0.0, 1.0]);

        let g = quotient_game(&v, &Partition::grand(3)).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.eval(1), 1.0);

        let s = quotient_game(&v, &Partition::singletons(3)).unwrap();
        assert_eq!(s.dense_values(), v.dense_values());
    }

    #[test]
    fn modified_quotient_of_majority() {
        let v = majority3();
        let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let g = modified_quotient_game(&v, &p, 0, 0b001).unwrap();
        assert_eq!(&g.dense_values().unwrap()[1..], &[0.0, 0.0, 1.0]);
        // T = S_j gives the quotient game
        let full = modified_quotient_game(&v, &p, 0, 0b011).unwrap();
        assert_eq!(full.dense_values(), quotient_game(&v, &p).unwrap().dense_values());
        // T = ∅
        let e = modified_quotient_game(&v, &p, 0, 0).unwrap();
        assert_eq!(e.eval(0b11), v.eval(0b100));
        assert!(matches!(
            modified_quotient_game(&v, &p, 0, 0b100),
            Err(Error::NotInBlock { .. })
        ));
    }

    #[test]
    fn tsh_intermediate_of_majority() {
        let v = majority3();
        let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let g = tsh_intermediate_game(&v, &p, 0, 0b001).unwrap();
        assert!((g.eval(0b01) - 0.0).abs() < 1e-15);
        assert!((g.eval(0b11) + 0.5).abs() < 1e-15);
        let full = tsh_intermediate_game(&v, &p, 0, 0b011).unwrap();
        assert_eq!(full.dense_values(), quotient_game(&v, &p).unwrap().dense_values());
        assert!(matches!(tsh_intermediate_game(&v, &p, 0, 0), Err(Error::EmptyCoalition)));
    }

    #[test]
    fn carrier_restriction() {
        let v = Game::from_fn(2, |s| (s & 1) as f64).unwrap();
        let r = restrict_to_carrier(&v, &PlayerSet::new(0b01, 2).unwrap()).unwrap();
        assert_eq!(r.dense_values().unwrap(), &[0.0, 1.0]);
        let id = restrict_to_carrier(&v, &PlayerSet::full(2)).unwrap();
        assert_eq!(id.dense_values(), v.dense_values());

        let w = Game::dense(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        match restrict_to_carrier(&w, &PlayerSet::new(0b01, 2).unwrap()) {
            Err(Error::NotACarrier { witness, .. }) => assert_eq!(witness, 0b10),
            other => panic!("expected carrier error, got {other:?}"),
        }
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1], vec![]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 3], vec![1, 2]]).is_err());
        let p = Partition::new(4, vec![vec![3, 1], vec![0], vec![2]]).unwrap();
        assert_eq!(p.block_of(3), 0);
        assert_eq!(p.union(0b101), 0b1110);
        let table = p.union_table().unwrap();
        for a in 0..8u64 {
            assert_eq!(table[a as usize], p.union(a));
        }
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[[1,3],[0],[2]]");
        let back: Partition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn dense_json_roundtrip_and_limits() {
        let v = Game::dense(2, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        let j = v.to_json().unwrap();
        assert_eq!(serde_json::to_string(&j).unwrap(), r#"{"n":2,"values":[1.0,2.0,3.0,5.0]}"#);
        assert!(Game::dense(2, vec![0.0; 3]).is_err());
        assert!(Game::from_fn(25, |_| 0.0).is_err());
        assert!(Game::lazy(65, |_| 0.0).is_err());
        assert!(Game::lazy(64, |_| 0.0).is_ok());
        assert!(PlayerSet::new(0b100, 2).is_err());
    }

    #[test]
    fn submask_enumeration() {
        let subs: Vec<u64> = submasks(0b101).collect();
        assert_eq!(subs, vec![0b101, 0b100, 0b001, 0]);
        assert_eq!(scatter(0b11, &[2, 5]), 0b100100);
    }
}

#[cfg(test)]
pub(crate) use tests::majority3;
