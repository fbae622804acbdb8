//! Zero pattern of the migration matrix and its block lower triangular form.
//!
//! Patch `j` feeds patch `i` when `a_ij` is not identically zero. The strongly
//! connected components of that graph are the irreducible diagonal blocks;
//! ordering them topologically (sources first) makes every inter-block entry
//! fall below the diagonal.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::StructureError;
use crate::model::{DelaySystem, LinearDelaySystem};
use crate::signals::QuasiPeriodicSignal;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroPattern {
    nonzero: Vec<Vec<bool>>,
}

impl ZeroPattern {
    /// Diagonal entries are forced to false.
    pub fn from_matrix(mut nonzero: Vec<Vec<bool>>) -> ZeroPattern {
        let n = nonzero.len();
        for (i, row) in nonzero.iter_mut().enumerate() {
            assert_eq!(row.len(), n, "zero pattern must be square");
            row[i] = false;
        }
        ZeroPattern { nonzero }
    }

    pub fn n(&self) -> usize {
        self.nonzero.len()
    }

    /// True iff `a_ij` is not identically zero (patch `j` feeds patch `i`).
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.nonzero[i][j]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.nonzero
    }

    /// Simultaneous row/column permutation: entry `(r, s)` of the result is
    /// entry `(order[r], order[s])` here.
    pub fn permuted(&self, order: &[usize]) -> ZeroPattern {
        ZeroPattern {
            nonzero: order.iter().map(|&i| order.iter().map(|&j| self.nonzero[i][j]).collect()).collect(),
        }
    }

    /// Successor lists of the graph with edge `j → i` iff `nonzero[i][j]`.
    fn successors(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut succ = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if self.nonzero[i][j] {
                    succ[j].push(i);
                }
            }
        }
        succ
    }
}

fn pattern_of(a: &[Vec<QuasiPeriodicSignal>]) -> ZeroPattern {
    ZeroPattern::from_matrix(
        a.iter()
            .map(|row| row.iter().map(|s| !s.is_identically_zero()).collect())
            .collect(),
    )
}

pub fn zero_pattern(sys: &DelaySystem) -> ZeroPattern {
    pattern_of(sys.a())
}

pub fn zero_pattern_linear(lin: &LinearDelaySystem) -> ZeroPattern {
    pattern_of(lin.a())
}

/// Permutation to block lower triangular form plus the deciding index sets.
///
/// Indices are 0-based: `blocks[j]` lists the original patch indices of the
/// `j`th diagonal block in ascending order, and `permutation` is the
/// concatenation of the blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    pub permutation: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
    /// Blocks with no inflow from other blocks (null off-diagonal row).
    pub i_set: Vec<usize>,
    /// Blocks with no outflow to other blocks (null off-diagonal column).
    pub j_set: Vec<usize>,
}

impl BlockStructure {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block index of every patch.
    pub fn block_of(&self) -> Vec<usize> {
        let n = self.permutation.len();
        let mut of = vec![usize::MAX; n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                of[i] = b;
            }
        }
        of
    }
}

struct Tarjan<'a> {
    succ: &'a [Vec<usize>],
    counter: usize,
    index: Vec<Option<usize>>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    comps: Vec<Vec<usize>>,
}

impl Tarjan<'_> {
    fn visit(&mut self, v: usize) {
        self.index[v] = Some(self.counter);
        self.low[v] = self.counter;
        self.counter += 1;
        self.stack.push(v);
        self.on_stack[v] = true;

        for k in 0..self.succ[v].len() {
            let w = self.succ[v][k];
            match self.index[w] {
                None => {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                }
                Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                Some(_) => {}
            }
        }

        if Some(self.low[v]) == self.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = self.stack.pop().expect("tarjan stack underflow");
                self.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            self.comps.push(comp);
        }
    }
}

fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut t = Tarjan {
        succ,
        counter: 0,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::with_capacity(n),
        comps: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.comps
}

/// Block lower triangular decomposition with irreducible diagonal blocks.
///
/// Blocks come in topological order of the condensation, sources first; ties
/// go to the block holding the smallest patch index.
pub fn condense(p: &ZeroPattern) -> BlockStructure {
    let n = p.n();
    let succ = p.successors();
    let comps = strongly_connected_components(&succ);
    let mut comp_of = vec![0; n];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }

    let ncomp = comps.len();
    let mut dag = vec![Vec::new(); ncomp];
    let mut indegree = vec![0usize; ncomp];
    for u in 0..n {
        for &v in &succ[u] {
            let (cu, cv) = (comp_of[u], comp_of[v]);
            if cu != cv && !dag[cu].contains(&cv) {
                dag[cu].push(cv);
                indegree[cv] += 1;
            }
        }
    }

    // Kahn's algorithm keyed on the smallest member index
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..ncomp)
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((comps[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(ncomp);
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(c);
        for &next in &dag[c] {
            indegree[next] -= 1;
            if indegree[next] == 0 {
                ready.push(Reverse((comps[next][0], next)));
            }
        }
    }
    debug_assert_eq!(order.len(), ncomp, "condensation must be acyclic");

    let blocks: Vec<Vec<usize>> = order.iter().map(|&c| comps[c].clone()).collect();
    let permutation = blocks.iter().flatten().copied().collect();
    let mut structure = BlockStructure { permutation, blocks, i_set: Vec::new(), j_set: Vec::new() };
    let (i_set, j_set) = sets_from_blocks(&structure.blocks, p);
    structure.i_set = i_set;
    structure.j_set = j_set;
    structure
}

fn sets_from_blocks(blocks: &[Vec<usize>], p: &ZeroPattern) -> (Vec<usize>, Vec<usize>) {
    let k = blocks.len();
    if k == 1 {
        return (vec![0], vec![0]);
    }
    // inter-block nonzero (row block r, column block s)
    let touches = |r: usize, s: usize| blocks[r].iter().any(|&i| blocks[s].iter().any(|&j| p.get(i, j)));
    let i_set = (0..k).filter(|&r| (0..k).all(|s| s == r || !touches(r, s))).collect();
    let j_set = (0..k).filter(|&s| (0..k).all(|r| r == s || !touches(r, s))).collect();
    (i_set, j_set)
}

/// Recomputes `I` and `J` for a block structure, after checking that the
/// blocks partition the patches and that the pattern is block lower
/// triangular in the given order.
pub fn index_sets(b: &BlockStructure, p: &ZeroPattern) -> Result<(Vec<usize>, Vec<usize>), StructureError> {
    let n = p.n();
    let mut seen = vec![false; n];
    for &i in b.blocks.iter().flatten() {
        if i >= n || seen[i] {
            return Err(StructureError::Inconsistent(format!("patch {i} repeated or out of range")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) || b.blocks.iter().any(Vec::is_empty) {
        return Err(StructureError::Inconsistent("blocks do not partition the patches".into()));
    }
    let flat: Vec<usize> = b.blocks.iter().flatten().copied().collect();
    if flat != b.permutation {
        return Err(StructureError::Inconsistent("permutation disagrees with blocks".into()));
    }
    let block_of = b.block_of();
    for i in 0..n {
        for j in 0..n {
            if p.get(i, j) && block_of[i] < block_of[j] {
                return Err(StructureError::Inconsistent(format!(
                    "entry ({i}, {j}) lies above the diagonal blocks"
                )));
            }
        }
    }
    Ok(sets_from_blocks(&b.blocks, p))
}

/// Mutual reachability of every ordered pair within `block`, using only edges
/// inside the block.
pub fn is_irreducible_block(p: &ZeroPattern, block: &[usize]) -> bool {
    if block.len() <= 1 {
        return true;
    }
    let reach_all = |forward: bool| {
        let mut seen = vec![false; block.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for (w, seen_w) in seen.iter_mut().enumerate() {
                let edge = if forward { p.get(block[w], block[u]) } else { p.get(block[u], block[w]) };
                if edge && !*seen_w {
                    *seen_w = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach_all(true) && reach_all(false)
}
