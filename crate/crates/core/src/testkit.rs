//! Test support: a tiny deterministic RNG and reference implementations the
//! test suites check the real solvers against. Everything here is written
//! independently of the implementation paths under test; do not use it in
//! production code.

/// splitmix64; deterministic across platforms and dependency versions.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `0..n`.
    pub fn next_index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// A random point of the probability simplex (normalized uniform weights).
pub fn random_simplex(rng: &mut TestRng, n: usize) -> Vec<f64> {
    let mut weights: Vec<f64> = (0..n).map(|_| rng.next_f64() + 1e-9).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// A simplex point whose masses are multiples of `1/denominator` (exact in
/// binary floating point when the denominator is a power of two).
pub fn grid_simplex(rng: &mut TestRng, n: usize, denominator: u32) -> Vec<f64> {
    let mut counts = vec![0u32; n];
    for _ in 0..denominator {
        counts[rng.next_index(n)] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / denominator as f64)
        .collect()
}

/// Exhaustive optimum of the transportation polytope by enumerating every
/// basic solution: each spanning-tree-sized support of `2n − 1` cells is
/// solved by leaf elimination and kept if feasible. The optimum of the LP is
/// attained at such a vertex, so the minimum over feasible vertices is the
/// exact Wasserstein value. Exponential in `n²`; intended for `n ≤ 4`.
pub fn brute_force_transport_optimum(
    supply: &[f64],
    demand: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> Option<f64> {
    let n = supply.len();
    assert_eq!(n, demand.len());
    assert!(n >= 1 && n * n <= 25, "vertex enumeration is for tiny instances");
    if n == 1 {
        return Some(supply[0] * cost(0, 0));
    }
    let cells = n * n;
    let basis_size = 2 * n - 1;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << cells) {
        if mask.count_ones() as usize != basis_size {
            continue;
        }
        if let Some(value) = solve_basis(mask, supply, demand, n, &cost) {
            best = Some(match best {
                Some(b) if b <= value => b,
                _ => value,
            });
        }
    }
    best
}

/// Solves the flows on one candidate basis by repeatedly fixing cells that
/// are the last unknown in their row or column. Returns the plan cost when
/// the basis determines a feasible solution.
fn solve_basis(
    mask: u32,
    supply: &[f64],
    demand: &[f64],
    n: usize,
    cost: &impl Fn(usize, usize) -> f64,
) -> Option<f64> {
    const TOL: f64 = 1e-9;
    let mut unknown: Vec<(usize, usize)> = (0..n * n)
        .filter(|k| mask & (1 << k) != 0)
        .map(|k| (k / n, k % n))
        .collect();
    let mut row_rem = supply.to_vec();
    let mut col_rem = demand.to_vec();
    let mut row_count = vec![0usize; n];
    let mut col_count = vec![0usize; n];
    for &(i, j) in &unknown {
        row_count[i] += 1;
        col_count[j] += 1;
    }
    let mut total_cost = 0.0;
    while !unknown.is_empty() {
        let pos = unknown
            .iter()
            .position(|&(i, j)| row_count[i] == 1 || col_count[j] == 1)?;
        let (i, j) = unknown.swap_remove(pos);
        let flow = if row_count[i] == 1 { row_rem[i] } else { col_rem[j] };
        if flow < -TOL {
            return None;
        }
        row_rem[i] -= flow;
        col_rem[j] -= flow;
        row_count[i] -= 1;
        col_count[j] -= 1;
        total_cost += flow * cost(i, j);
    }
    // Disconnected supports can solve cell-by-cell yet leave marginals
    // unbalanced; reject those.
    if row_rem.iter().chain(&col_rem).any(|r| r.abs() > TOL) {
        return None;
    }
    Some(total_cost)
}
