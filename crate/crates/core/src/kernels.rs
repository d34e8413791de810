//! Microsaccade grid geometry.
//!
//! The 3x3 grid is numbered 1..=9 in row-major order. A direction pair
//! couples a `from` cell (kernel weight −1) with a `to` cell (weight +1);
//! correlating an intensity map with that kernel yields the image sampled at
//! the `to` offset minus the image sampled at the `from` offset.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of motion directions, one per timestep.
pub const DIRECTIONS: usize = 8;

/// Canonical (from, to) grid indices, timesteps a..h.
pub const CANONICAL_PAIRS: [[u8; 2]; DIRECTIONS] = [
    [9, 4],
    [4, 3],
    [3, 8],
    [8, 1],
    [5, 6],
    [5, 2],
    [5, 3],
    [5, 1],
];

/// Timestep labels in storage order.
pub const TIMESTEP_LABELS: [char; DIRECTIONS] = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'];

/// A cell of the 3x3 grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct GridPosition(u8);

impl GridPosition {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=9).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::GridIndex(index))
        }
    }

    pub fn from_row_col(row: u8, col: u8) -> Result<Self> {
        if row > 2 || col > 2 {
            return Err(Error::InvalidConfig(format!(
                "grid cell ({row},{col}) is outside the 3x3 grid"
            )));
        }
        Ok(Self(row * 3 + col + 1))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn row(self) -> u8 {
        (self.0 - 1) / 3
    }

    pub fn col(self) -> u8 {
        (self.0 - 1) % 3
    }

    /// All nine cells in index order.
    pub fn all() -> impl Iterator<Item = GridPosition> {
        (1..=9).map(GridPosition)
    }
}

impl TryFrom<u8> for GridPosition {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Self::new(value)
    }
}

impl From<GridPosition> for u8 {
    fn from(p: GridPosition) -> u8 {
        p.0
    }
}

/// Grid displacement `to - from` in (row, col).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Displacement {
    pub drow: i8,
    pub dcol: i8,
}

impl Displacement {
    pub fn squared_norm(self) -> i32 {
        let (r, c) = (self.drow as i32, self.dcol as i32);
        r * r + c * c
    }
}

/// An ordered pair of distinct grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectionPair {
    pub from: GridPosition,
    pub to: GridPosition,
}

impl DirectionPair {
    pub fn new(from: u8, to: u8) -> Result<Self> {
        let (from, to) = (GridPosition::new(from)?, GridPosition::new(to)?);
        if from == to {
            return Err(Error::InvalidConfig(format!(
                "direction pair needs distinct cells, got {0}->{0}",
                from.index()
            )));
        }
        Ok(Self { from, to })
    }

    pub fn displacement(self) -> Displacement {
        Displacement {
            drow: self.to.row() as i8 - self.from.row() as i8,
            dcol: self.to.col() as i8 - self.from.col() as i8,
        }
    }

    /// The 3x3 kernel: −1 at `from`, +1 at `to`.
    pub fn kernel(self) -> Kernel {
        let mut k = [[0i8; 3]; 3];
        k[self.from.row() as usize][self.from.col() as usize] = -1;
        k[self.to.row() as usize][self.to.col() as usize] = 1;
        Kernel(k)
    }
}

impl fmt::Display for DirectionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.from.index(), self.to.index())
    }
}

/// Dense 3x3 integer kernel, indexed `[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kernel(pub [[i8; 3]; 3]);

impl Kernel {
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.0[row][col]
    }

    pub fn sum(&self) -> i32 {
        self.0.iter().flatten().map(|&w| w as i32).sum()
    }

    /// Non-zero taps as `(row, col, weight)`.
    pub fn taps(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter_map(|(r, c)| {
                let w = self.0[r][c];
                (w != 0).then_some((r, c, w))
            })
    }
}

/// The canonical pair for direction `t` (0..8).
pub fn canonical_pair(t: usize) -> DirectionPair {
    let [from, to] = CANONICAL_PAIRS[t];
    DirectionPair {
        from: GridPosition(from),
        to: GridPosition(to),
    }
}

/// One kernel per direction, in timestep-label order a..h.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionKernelSet {
    pairs: [DirectionPair; DIRECTIONS],
}

impl MotionKernelSet {
    /// Builds a set from explicit pairs; each must share the displacement of
    /// the canonical pair for its direction.
    pub fn from_pairs(pairs: [DirectionPair; DIRECTIONS]) -> Result<Self> {
        for (t, p) in pairs.iter().enumerate() {
            if p.displacement() != canonical_pair(t).displacement() {
                return Err(Error::InvalidConfig(format!(
                    "pair {p} does not match direction {}",
                    TIMESTEP_LABELS[t]
                )));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[DirectionPair; DIRECTIONS] {
        &self.pairs
    }

    pub fn pair(&self, t: usize) -> DirectionPair {
        self.pairs[t]
    }

    pub fn kernel(&self, t: usize) -> Kernel {
        self.pairs[t].kernel()
    }

    pub fn kernels(&self) -> [Kernel; DIRECTIONS] {
        self.pairs.map(DirectionPair::kernel)
    }

    /// JSON debug dump with labels, pairs and dense kernels.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = self
            .pairs
            .iter()
            .enumerate()
            .map(|(t, p)| {
                serde_json::json!({
                    "label": TIMESTEP_LABELS[t].to_string(),
                    "from": p.from.index(),
                    "to": p.to.index(),
                    "displacement": [p.displacement().drow, p.displacement().dcol],
                    "kernel": p.kernel().0,
                })
            })
            .collect();
        serde_json::Value::Array(entries)
    }
}

/// The inference-mode kernel set.
pub fn build_canonical_kernels() -> MotionKernelSet {
    MotionKernelSet {
        pairs: std::array::from_fn(canonical_pair),
    }
}

/// Every ordered pair of distinct cells sharing the displacement of a
/// canonical pair. Sorted by `from` index.
pub fn equivalent_pairs(canonical: DirectionPair) -> Result<Vec<DirectionPair>> {
    if !(0..DIRECTIONS).any(|t| canonical_pair(t) == canonical) {
        return Err(Error::NotCanonical {
            from: canonical.from.index(),
            to: canonical.to.index(),
        });
    }
    let d = canonical.displacement();
    let mut out = Vec::new();
    for from in GridPosition::all() {
        let row = from.row() as i8 + d.drow;
        let col = from.col() as i8 + d.dcol;
        if (0..3).contains(&row) && (0..3).contains(&col) {
            let to = GridPosition::from_row_col(row as u8, col as u8)?;
            out.push(DirectionPair { from, to });
        }
    }
    Ok(out)
}

/// Equivalence sets for all eight directions.
pub fn equivalence_table() -> [Vec<DirectionPair>; DIRECTIONS] {
    std::array::from_fn(|t| {
        equivalent_pairs(canonical_pair(t)).expect("canonical pairs are in the table")
    })
}

/// Training-mode kernel set: one pair drawn uniformly from each direction's
/// equivalence set.
pub fn sample_kernel_set(seed: u64) -> MotionKernelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = equivalence_table();
    MotionKernelSet {
        pairs: std::array::from_fn(|t| {
            *table[t]
                .choose(&mut rng)
                .expect("equivalence sets are non-empty")
        }),
    }
}

/// Presentation groups of the eight timesteps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Alpha,
    Beta,
    Gamma,
}

impl Group {
    /// Storage indices of the group's timesteps, in label order.
    pub fn members(self) -> &'static [usize] {
        match self {
            Group::Alpha => &[0, 1],
            Group::Beta => &[2, 3],
            Group::Gamma => &[4, 5, 6, 7],
        }
    }

    pub fn of_timestep(t: usize) -> Group {
        match t {
            0 | 1 => Group::Alpha,
            2 | 3 => Group::Beta,
            _ => Group::Gamma,
        }
    }

    fn from_char(c: char) -> Option<Group> {
        match c {
            'α' | 'a' | 'A' => Some(Group::Alpha),
            'β' | 'b' | 'B' => Some(Group::Beta),
            'γ' | 'g' | 'G' => Some(Group::Gamma),
            _ => None,
        }
    }

    fn ascii(self) -> char {
        match self {
            Group::Alpha => 'a',
            Group::Beta => 'b',
            Group::Gamma => 'g',
        }
    }
}

/// Presentation order of the timesteps.
///
/// `permutation()[i]` is the storage index (label a..h) presented at
/// position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimestepOrder {
    groups: [Group; 3],
    permutation: [u8; DIRECTIONS],
}

impl TimestepOrder {
    /// Parses a group sequence such as `"γαβ"` or its ASCII form `"gab"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let groups: Vec<Group> = spec
            .trim()
            .chars()
            .map(Group::from_char)
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidOrder(spec.to_string()))?;
        let groups: [Group; 3] = groups
            .try_into()
            .map_err(|_| Error::InvalidOrder(spec.to_string()))?;
        if groups[0] == groups[1] || groups[0] == groups[2] || groups[1] == groups[2] {
            return Err(Error::InvalidOrder(spec.to_string()));
        }
        Ok(Self::from_groups(groups))
    }

    fn from_groups(groups: [Group; 3]) -> Self {
        let mut permutation = [0u8; DIRECTIONS];
        let flat = groups.iter().flat_map(|g| g.members().iter().copied());
        for (slot, t) in permutation.iter_mut().zip(flat) {
            *slot = t as u8;
        }
        Self {
            groups,
            permutation,
        }
    }

    /// Label order a..h.
    pub fn identity() -> Self {
        Self::from_groups([Group::Alpha, Group::Beta, Group::Gamma])
    }

    /// Reconstructs an order from its index permutation.
    pub fn from_permutation(perm: [u8; DIRECTIONS]) -> Result<Self> {
        let bad = || {
            Error::InvalidOrder(
                perm.iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            )
        };
        let mut groups = Vec::with_capacity(3);
        let mut i = 0;
        while i < DIRECTIONS {
            let t = perm[i] as usize;
            if t >= DIRECTIONS {
                return Err(bad());
            }
            let g = Group::of_timestep(t);
            let members = g.members();
            if i + members.len() > DIRECTIONS
                || perm[i..i + members.len()]
                    .iter()
                    .zip(members)
                    .any(|(&p, &m)| p as usize != m)
            {
                return Err(bad());
            }
            groups.push(g);
            i += members.len();
        }
        let groups: [Group; 3] = groups.try_into().map_err(|_| bad())?;
        if groups[0] == groups[1] || groups[0] == groups[2] || groups[1] == groups[2] {
            return Err(bad());
        }
        Ok(Self::from_groups(groups))
    }

    pub fn groups(&self) -> [Group; 3] {
        self.groups
    }

    pub fn permutation(&self) -> [u8; DIRECTIONS] {
        self.permutation
    }

    /// Storage index shown at presentation position `i`.
    pub fn storage_index(&self, i: usize) -> usize {
        self.permutation[i] as usize
    }

    /// Presentation position of each storage index.
    pub fn inverse(&self) -> [u8; DIRECTIONS] {
        let mut inv = [0u8; DIRECTIONS];
        for (i, &t) in self.permutation.iter().enumerate() {
            inv[t as usize] = i as u8;
        }
        inv
    }

    /// Timestep labels in presentation order, e.g. `"efghabcd"`.
    pub fn labels(&self) -> String {
        self.permutation
            .iter()
            .map(|&t| TIMESTEP_LABELS[t as usize])
            .collect()
    }

    /// ASCII group string accepted by [`TimestepOrder::parse`].
    pub fn ascii(&self) -> String {
        self.groups.iter().map(|g| g.ascii()).collect()
    }
}

impl Default for TimestepOrder {
    fn default() -> Self {
        Self::from_groups([Group::Gamma, Group::Alpha, Group::Beta])
    }
}

impl fmt::Display for TimestepOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ascii())
    }
}

impl std::str::FromStr for TimestepOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl TryFrom<String> for TimestepOrder {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<TimestepOrder> for String {
    fn from(o: TimestepOrder) -> String {
        o.ascii()
    }
}
