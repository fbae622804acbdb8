#![allow(dead_code)]

use nicholson_core::integrator::{integrate, InitialHistory, Trajectory};
use nicholson_core::model::{DelaySystem, LinearDelaySystem, Nonlinearity};
use nicholson_core::structure::{BlockStructure, ZeroPattern};
use nicholson_core::signals::{QuasiPeriodicSignal, Term};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn k(v: f64) -> QuasiPeriodicSignal {
    QuasiPeriodicSignal::constant(v)
}

/// `base` plus at most one mode of relative amplitude `< rel`.
pub fn wobble(r: &mut ChaCha8Rng, base: f64, rel: f64) -> QuasiPeriodicSignal {
    if r.random_bool(0.5) {
        return k(base);
    }
    let amp = base * rel * r.random::<f64>();
    let freq = r.random_range(0.3..3.0);
    let phase = r.random_range(0.0..std::f64::consts::TAU);
    QuasiPeriodicSignal::new(base, vec![Term::sine(amp, freq, phase)]).unwrap()
}

pub fn random_kind(r: &mut ChaCha8Rng) -> Nonlinearity {
    match r.random_range(0..3) {
        0 => Nonlinearity::Nicholson,
        1 => Nonlinearity::MackeyGlass(r.random_range(1.0..3.0)),
        _ => Nonlinearity::Linear,
    }
}

pub struct Shape {
    pub max_n: usize,
    pub edge_prob: f64,
    pub beta: (f64, f64),
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_n: 4, edge_prob: 0.4, beta: (0.3, 3.0) }
    }
}

/// A system satisfying every hypothesis with analytic margin.
pub fn random_system(seed: u64, shape: &Shape, kind: Option<Nonlinearity>) -> DelaySystem {
    let mut r = rng(seed);
    let n = r.random_range(1..=shape.max_n);
    let delays: Vec<f64> = (0..n).map(|_| *[0.5, 1.0, 1.5, 2.0].choose(&mut r).unwrap()).collect();
    let mut a = vec![vec![k(0.0); n]; n];
    let mut column_load = vec![0.0; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            if i != j && r.random_bool(shape.edge_prob) {
                let base = r.random_range(0.05..0.3);
                *entry = wobble(&mut r, base, 0.5);
                column_load[j] += entry.constant_term() + entry.amplitude_sum();
            }
        }
    }
    let d: Vec<QuasiPeriodicSignal> = column_load
        .iter()
        .map(|load| {
            let base = 0.6 + load + r.random_range(0.0..0.8);
            wobble(&mut r, base, 0.2)
        })
        .collect();
    let beta = (0..n)
        .map(|_| {
            let base = r.random_range(shape.beta.0..shape.beta.1);
            wobble(&mut r, base, 0.3)
        })
        .collect();
    let c = (0..n)
        .map(|_| {
            let base = r.random_range(0.5..2.0);
            wobble(&mut r, base, 0.3)
        })
        .collect();
    let kind = kind.unwrap_or_else(|| random_kind(&mut r));
    DelaySystem::new(delays, d, a, beta, c, kind).unwrap()
}

pub fn random_permutation(r: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(r);
    p
}

pub fn scalar(d: f64, beta: f64, tau: f64) -> DelaySystem {
    DelaySystem::scalar(d, beta, 1.0, tau, Nonlinearity::Nicholson).unwrap()
}

/// Patch 1 feeds patch 2 through `a_21`.
pub fn one_way(beta1: f64, beta2: f64, a21: f64) -> DelaySystem {
    DelaySystem::new(
        vec![1.0, 1.0],
        vec![k(1.0), k(1.0)],
        vec![vec![k(0.0), k(0.0)], vec![k(a21), k(0.0)]],
        vec![k(beta1), k(beta2)],
        vec![k(1.0), k(1.0)],
        Nonlinearity::Nicholson,
    )
    .unwrap()
}

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn random_pattern(seed: u64) -> ZeroPattern {
    let mut r = rng(seed);
    let n = r.random_range(1..=6);
    let density = r.random_range(0.05..0.5);
    let rows = (0..n).map(|_| (0..n).map(|_| r.random_bool(density)).collect()).collect();
    ZeroPattern::from_matrix(rows)
}

fn reachable(p: &ZeroPattern, from: usize, to: usize) -> bool {
    let n = p.n();
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(j) = stack.pop() {
        for i in 0..n {
            // edge j → i iff a_ij ≠ 0
            if p.get(i, j) && !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
    }
    seen[to]
}

/// Every ordered pair in the block is joined by a path inside the whole graph
/// (equivalently inside the block, since blocks are strongly connected
/// components) and singleton blocks are trivially irreducible.
pub fn irreducible_by_paths(p: &ZeroPattern, block: &[usize]) -> bool {
    block.len() == 1 || block.iter().all(|&u| block.iter().all(|&v| u == v || reachable(p, u, v)))
}

pub fn lower_triangular(p: &ZeroPattern, s: &BlockStructure) -> bool {
    let block_of = s.block_of();
    (0..p.n()).all(|i| (0..p.n()).all(|j| !p.get(i, j) || block_of[j] <= block_of[i]))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Largest number of diagonal blocks any permutation admits, where a block
/// cut after position `m` is allowed iff no entry maps the tail to the head.
pub fn max_blocks_exhaustive(p: &ZeroPattern) -> usize {
    let n = p.n();
    permutations(n)
        .into_iter()
        .map(|order| {
            let q = p.permuted(&order);
            1 + (1..n)
                .filter(|&m| (0..m).all(|i| (m..n).all(|j| !q.get(i, j))))
                .count()
        })
        .max()
        .unwrap()
}

/// Error against a fine reference run at integer times.
fn error_at(sys: &LinearDelaySystem, h: f64, reference: &Trajectory) -> f64 {
    let traj = integrate(sys, &InitialHistory::ones(sys.n()), 10.0, h).unwrap();
    (1..=10)
        .map(|t| (traj.eval(t as f64, 0).unwrap() - reference.eval(t as f64, 0).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// `z' = −(1 + ½ sin 3t) z + 2 z(t − 1)` from `φ ≡ 1`: errors at
/// h ∈ {0.02, 0.01, 0.005} against h = 0.02/32, and the observed orders.
pub fn convergence_orders() -> (Vec<f64>, Vec<f64>) {
    let d = QuasiPeriodicSignal::new(1.0, vec![Term::sine(0.5, 3.0, 0.0)]).unwrap();
    let sys = LinearDelaySystem::new(vec![1.0], vec![d], vec![vec![k(0.0)]], vec![k(2.0)]).unwrap();
    let reference = integrate(&sys, &InitialHistory::ones(1), 10.0, 0.02 / 32.0).unwrap();
    let errs: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&h| error_at(&sys, h, &reference)).collect();
    let orders = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    (errs, orders)
}
