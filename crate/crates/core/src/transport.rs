//! Exact discrete optimal transport between two distributions over one
//! answer space.
//!
//! The general path is a transportation simplex with Bland's pivot rule, so
//! solves are deterministic and cycle-free even on degenerate bases.
//! Point-mass destinations and 1-d ordinal costs take closed-form fast
//! paths that agree with the simplex to well below the feasibility
//! tolerances.

use std::io::Write;
use std::sync::Arc;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::space::{same_space, AnswerDistribution, AnswerSpace, Outcome, ScaleMap};

/// Largest support the solver accepts.
pub const MAX_SUPPORT: usize = 1024;

/// Marginal feasibility tolerance (Eq. constraints on row/column sums).
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;

/// Objective/optimality comparison tolerance.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-9;

/// Which computation produced a [`WassersteinResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GeneralLp,
    PointMass,
    Ordinal1d,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::GeneralLp => "general_lp",
            Method::PointMass => "point_mass",
            Method::Ordinal1d => "ordinal_1d",
        }
    }
}

/// A marginal-preserving joint mass assignment. Row sums reproduce the
/// source distribution, column sums the destination, all entries ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    space: Arc<AnswerSpace>,
    mass: Vec<f64>,
}

impl TransportPlan {
    pub fn from_mass(space: Arc<AnswerSpace>, mass: Vec<f64>) -> Result<Self> {
        let n = space.len();
        if mass.len() != n * n {
            return Err(Error::CostMatrixSize {
                expected: n * n,
                got: mass.len(),
            });
        }
        Ok(Self { space, mass })
    }

    pub fn space(&self) -> &Arc<AnswerSpace> {
        &self.space
    }

    pub fn mass(&self, from: usize, to: usize) -> f64 {
        self.mass[from * self.space.len() + to]
    }

    pub fn entries(&self) -> &[f64] {
        &self.mass
    }

    /// Total cost of this plan under `cost`.
    pub fn total_cost(&self, cost: &CostMatrix) -> f64 {
        self.mass
            .iter()
            .zip(cost.entries())
            .map(|(m, c)| m * c)
            .sum()
    }

    /// Nonzero cells in row-major order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.space.len();
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0.0)
            .map(move |(k, &m)| (k / n, k % n, m))
    }

    /// Debug export: `source,destination,mass` rows for nonzero cells.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source", "destination", "mass"])?;
        for (i, j, m) in self.nonzero() {
            w.write_record([
                self.space.label(i),
                self.space.label(j),
                &format!("{m}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A Wasserstein value together with the plan that witnesses it.
#[derive(Debug, Clone)]
pub struct WassersteinResult {
    pub value: f64,
    pub plan: TransportPlan,
    pub method: Method,
}

/// Outcome of checking a plan against its marginals.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanCheck {
    Ok,
    NegativeMass {
        from: usize,
        to: usize,
        mass: f64,
    },
    RowMarginal {
        index: usize,
        expected: f64,
        actual: f64,
    },
    ColumnMarginal {
        index: usize,
        expected: f64,
        actual: f64,
    },
}

impl PlanCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, PlanCheck::Ok)
    }
}

/// Checks the three feasibility constraints at `1e-8`: nonnegativity, row
/// sums against `p`, column sums against `q`.
pub fn validate_plan(
    plan: &TransportPlan,
    p: &AnswerDistribution,
    q: &AnswerDistribution,
) -> Result<PlanCheck> {
    if !same_space(plan.space(), p.space()) || !same_space(plan.space(), q.space()) {
        return Err(Error::SpaceMismatch);
    }
    let n = plan.space().len();
    for (i, j, m) in plan
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &m)| (k / n, k % n, m))
    {
        if m < -FEASIBILITY_TOLERANCE {
            return Ok(PlanCheck::NegativeMass { from: i, to: j, mass: m });
        }
    }
    for i in 0..n {
        let actual: f64 = (0..n).map(|j| plan.mass(i, j)).sum();
        if (actual - p.prob_at(i)).abs() > FEASIBILITY_TOLERANCE {
            return Ok(PlanCheck::RowMarginal {
                index: i,
                expected: p.prob_at(i),
                actual,
            });
        }
    }
    for j in 0..n {
        let actual: f64 = (0..n).map(|i| plan.mass(i, j)).sum();
        if (actual - q.prob_at(j)).abs() > FEASIBILITY_TOLERANCE {
            return Ok(PlanCheck::ColumnMarginal {
                index: j,
                expected: q.prob_at(j),
                actual,
            });
        }
    }
    Ok(PlanCheck::Ok)
}

fn check_shared_space(
    p: &AnswerDistribution,
    q: &AnswerDistribution,
    cost: &CostMatrix,
) -> Result<usize> {
    if !same_space(p.space(), q.space()) || !same_space(p.space(), cost.space()) {
        return Err(Error::SpaceMismatch);
    }
    let n = p.space().len();
    if n > MAX_SUPPORT {
        return Err(Error::SupportTooLarge {
            support: n,
            cap: MAX_SUPPORT,
        });
    }
    Ok(n)
}

/// Exact minimum-cost transport between `p` and `q` under `cost`.
pub fn wasserstein(
    p: &AnswerDistribution,
    q: &AnswerDistribution,
    cost: &CostMatrix,
) -> Result<WassersteinResult> {
    let n = check_shared_space(p, q, cost)?;
    let mass = transportation_simplex(p.probs(), q.probs(), cost, n)?;
    let plan = TransportPlan::from_mass(Arc::clone(p.space()), mass)?;
    let value = plan.total_cost(cost);
    Ok(WassersteinResult {
        value,
        plan,
        method: Method::GeneralLp,
    })
}

/// Fast path for a point-mass destination: the only feasible plan sends
/// every source cell straight to the target, so
/// `W(p, δ_t) = Σ_x p(x) · c(x, t)`.
pub fn wasserstein_to_point_mass(
    p: &AnswerDistribution,
    target: &Outcome,
    cost: &CostMatrix,
) -> Result<WassersteinResult> {
    if !same_space(p.space(), cost.space()) {
        return Err(Error::SpaceMismatch);
    }
    let n = p.space().len();
    let t = p
        .space()
        .index_of(target)
        .ok_or_else(|| Error::UnknownAnswer(target.label().to_owned()))?;
    let mut mass = vec![0.0; n * n];
    let mut value = 0.0;
    for i in 0..n {
        mass[i * n + t] = p.prob_at(i);
        value += p.prob_at(i) * cost.cost(i, t);
    }
    Ok(WassersteinResult {
        value,
        plan: TransportPlan::from_mass(Arc::clone(p.space()), mass)?,
        method: Method::PointMass,
    })
}

/// Fast path for the ordinal cost when neither distribution touches the
/// sentinel: the classical cumulative-distribution identity for |·| costs,
/// scaled by the scale span. The witnessing plan is the monotone matching.
pub fn wasserstein_1d_ordinal(
    p: &AnswerDistribution,
    q: &AnswerDistribution,
    scale: &ScaleMap,
) -> Result<WassersteinResult> {
    if !same_space(p.space(), q.space()) {
        return Err(Error::SpaceMismatch);
    }
    if p.sentinel_mass() > 1e-12 {
        return Err(Error::NonzeroSentinelMass(p.sentinel_mass()));
    }
    if q.sentinel_mass() > 1e-12 {
        return Err(Error::NonzeroSentinelMass(q.sentinel_mass()));
    }
    let span = scale.span();
    if span == 0 {
        return Err(Error::ZeroScaleSpan);
    }
    let space = p.space();
    let mut order: Vec<(i64, usize)> = space
        .answers()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            scale
                .numeric(a)
                .map(|v| (v, i))
                .ok_or_else(|| Error::UnmappedScaleAnswer(a.text().to_owned()))
        })
        .collect::<Result<_>>()?;
    order.sort_unstable();

    // CDF identity for the value.
    let mut value = 0.0;
    let mut cdf_p = 0.0;
    let mut cdf_q = 0.0;
    for w in order.windows(2) {
        let (pos, idx) = w[0];
        let (next_pos, _) = w[1];
        cdf_p += p.prob_at(idx);
        cdf_q += q.prob_at(idx);
        value += (cdf_p - cdf_q).abs() * (next_pos - pos) as f64;
    }
    value /= span as f64;

    // Monotone matching as the witnessing plan.
    let n = space.len();
    let mut mass = vec![0.0; n * n];
    let mut a = 0usize;
    let mut b = 0usize;
    let mut remaining_p = if order.is_empty() { 0.0 } else { p.prob_at(order[0].1) };
    let mut remaining_q = if order.is_empty() { 0.0 } else { q.prob_at(order[0].1) };
    while a < order.len() && b < order.len() {
        let moved = remaining_p.min(remaining_q);
        if moved > 0.0 {
            mass[order[a].1 * n + order[b].1] += moved;
        }
        remaining_p -= moved;
        remaining_q -= moved;
        if remaining_p <= 0.0 {
            a += 1;
            if a < order.len() {
                remaining_p = p.prob_at(order[a].1);
            }
        }
        if remaining_q <= 0.0 {
            b += 1;
            if b < order.len() {
                remaining_q = q.prob_at(order[b].1);
            }
        }
    }
    Ok(WassersteinResult {
        value,
        plan: TransportPlan::from_mass(Arc::clone(space), mass)?,
        method: Method::Ordinal1d,
    })
}

/// Tolerance below which a reduced cost counts as improving.
const REDUCED_COST_TOLERANCE: f64 = 1e-11;

/// Transportation simplex over a square cost grid. Returns the optimal
/// row-major mass vector. Zero-probability rows and columns stay in the
/// problem so plan indices always align with the answer space.
fn transportation_simplex(
    supply: &[f64],
    demand: &[f64],
    cost: &CostMatrix,
    n: usize,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![supply[0].min(demand[0])]);
    }

    let mut mass = vec![0.0; n * n];
    let mut in_basis = vec![false; n * n];
    // Basis edges as (row, col); a spanning tree of the bipartite graph.
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(2 * n - 1);

    // Northwest-corner start: a lattice path from (0,0) to (n-1,n-1) gives
    // exactly 2n-1 basic cells, zero-mass cells included.
    {
        let mut rs = supply.to_vec();
        let mut rd = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let moved = rs[i].min(rd[j]).max(0.0);
            mass[i * n + j] = moved;
            rs[i] -= moved;
            rd[j] -= moved;
            basis.push((i, j));
            in_basis[i * n + j] = true;
            if i == n - 1 && j == n - 1 {
                break;
            }
            if i == n - 1 {
                j += 1;
            } else if j == n - 1 {
                i += 1;
            } else if rs[i] <= rd[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    // Nodes 0..n are rows, n..2n are columns.
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); 2 * n];
    let max_iterations = 200 * n * n + 1000;

    for _ in 0..max_iterations {
        // Potentials from the basis tree, rooted at row 0 (u[0] = 0).
        for adj in &mut adjacency {
            adj.clear();
        }
        for (k, &(i, j)) in basis.iter().enumerate() {
            adjacency[i].push(k);
            adjacency[n + j].push(k);
        }
        let mut seen = vec![false; 2 * n];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &k in &adjacency[node] {
                let (i, j) = basis[k];
                let other = if node < n { n + j } else { i };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                if other < n {
                    u[other] = cost.cost(i, j) - v[j];
                } else {
                    v[other - n] = cost.cost(i, j) - u[i];
                }
                stack.push(other);
            }
        }

        // Bland's entering rule: first improving cell in row-major order.
        let mut entering = None;
        'scan: for i in 0..n {
            for j in 0..n {
                if in_basis[i * n + j] {
                    continue;
                }
                if cost.cost(i, j) - u[i] - v[j] < -REDUCED_COST_TOLERANCE {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(mass);
        };

        // Unique tree path from row `ei` to column `ej`; together with the
        // entering cell it closes the pivot cycle.
        let mut parent_edge = vec![usize::MAX; 2 * n];
        let mut parent_node = vec![usize::MAX; 2 * n];
        let mut visited = vec![false; 2 * n];
        let mut queue = std::collections::VecDeque::from([ei]);
        visited[ei] = true;
        while let Some(node) = queue.pop_front() {
            if node == n + ej {
                break;
            }
            for &k in &adjacency[node] {
                let (i, j) = basis[k];
                let other = if node < n { n + j } else { i };
                if visited[other] {
                    continue;
                }
                visited[other] = true;
                parent_edge[other] = k;
                parent_node[other] = node;
                queue.push_back(other);
            }
        }
        debug_assert!(visited[n + ej], "basis must stay a spanning tree");

        // Walk back from the column to the row; edges alternate signs,
        // starting with '-' adjacent to the entering '+' cell.
        let mut path = Vec::new();
        let mut node = n + ej;
        while node != ei {
            path.push(parent_edge[node]);
            node = parent_node[node];
        }
        let minus: Vec<usize> = path.iter().copied().step_by(2).collect();
        let plus: Vec<usize> = path.iter().copied().skip(1).step_by(2).collect();

        // Leaving cell: smallest mass on the '-' edges; ties break to the
        // smallest row-major cell index (Bland again).
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        let mut leaving_cell = usize::MAX;
        for &k in &minus {
            let (i, j) = basis[k];
            let cell = i * n + j;
            let m = mass[cell];
            if m < theta - 0.0 || (m == theta && cell < leaving_cell) {
                theta = m;
                leaving = k;
                leaving_cell = cell;
            }
        }
        debug_assert!(leaving != usize::MAX);

        for &k in &plus {
            let (i, j) = basis[k];
            mass[i * n + j] += theta;
        }
        for &k in &minus {
            let (i, j) = basis[k];
            let cell = i * n + j;
            mass[cell] -= theta;
            if mass[cell] < 0.0 {
                mass[cell] = 0.0;
            }
        }
        mass[ei * n + ej] += theta;

        let (li, lj) = basis[leaving];
        mass[li * n + lj] = 0.0;
        in_basis[li * n + lj] = false;
        in_basis[ei * n + ej] = true;
        basis[leaving] = (ei, ej);
    }
    Err(Error::SolverIterationLimit { support: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{basic_cost, ordinal_cost, CostMatrix};
    use crate::space::{Answer, ResidualMode};

    fn digit_space() -> Arc<AnswerSpace> {
        AnswerSpace::new(
            (0..=9).map(|d| Answer::new(d.to_string()).unwrap()).collect(),
            true,
        )
        .unwrap()
    }

    fn dist(space: &Arc<AnswerSpace>, weights: &[(&str, f64)]) -> AnswerDistribution {
        AnswerDistribution::build(space, weights.iter().copied(), ResidualMode::Sentinel).unwrap()
    }

    #[test]
    fn identity_transport_is_free() {
        let space = digit_space();
        let scale = ScaleMap::integer_range(0, 9).unwrap();
        let cost = ordinal_cost(&space, &scale).unwrap();
        let p = dist(&space, &[("3", 0.25), ("7", 0.75)]);
        let result = wasserstein(&p, &p, &cost).unwrap();
        assert!(result.value.abs() < 1e-12);
        assert!(validate_plan(&result.plan, &p, &p).unwrap().is_ok());
    }

    #[test]
    fn forced_move_at_max_cost() {
        let space = digit_space();
        let scale = ScaleMap::integer_range(0, 9).unwrap();
        let cost = ordinal_cost(&space, &scale).unwrap();
        let p = dist(&space, &[("0", 1.0)]);
        let q = dist(&space, &[("9", 1.0)]);
        let result = wasserstein(&p, &q, &cost).unwrap();
        assert!((result.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_to_point_mass_matches_hand_value() {
        // 0.5·(4/9) + 0.5·(5/9) = 0.5
        let space = digit_space();
        let scale = ScaleMap::integer_range(0, 9).unwrap();
        let cost = ordinal_cost(&space, &scale).unwrap();
        let p = dist(&space, &[("0", 0.5), ("9", 0.5)]);
        let q = dist(&space, &[("4", 1.0)]);
        let lp = wasserstein(&p, &q, &cost).unwrap();
        assert!((lp.value - 0.5).abs() < 1e-12);
        let fast =
            wasserstein_to_point_mass(&p, &Outcome::answer("4").unwrap(), &cost).unwrap();
        assert!((fast.value - lp.value).abs() < 1e-12);
        assert_eq!(fast.method, Method::PointMass);
    }

    #[test]
    fn point_mass_uniform_basic_cost() {
        let space = AnswerSpace::new(
            ["A", "B", "C", "D"]
                .iter()
                .map(|t| Answer::new(*t).unwrap())
                .collect(),
            false,
        )
        .unwrap();
        let target = Answer::new("A").unwrap();
        let cost = basic_cost(&space, &target).unwrap();
        let p = dist(
            &space,
            &[("A", 0.25), ("B", 0.25), ("C", 0.25), ("D", 0.25)],
        );
        let result =
            wasserstein_to_point_mass(&p, &Outcome::Answer(target), &cost).unwrap();
        assert!((result.value - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ordinal_1d_cases() {
        let space = digit_space();
        let scale = ScaleMap::integer_range(0, 9).unwrap();
        let p = dist(&space, &[("0", 0.5), ("9", 0.5)]);
        let q = dist(&space, &[("4", 0.5), ("5", 0.5)]);
        let fast = wasserstein_1d_ordinal(&p, &q, &scale).unwrap();
        assert!((fast.value - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(fast.method, Method::Ordinal1d);

        let cost = ordinal_cost(&space, &scale).unwrap();
        let lp = wasserstein(&p, &q, &cost).unwrap();
        assert!((fast.value - lp.value).abs() < 1e-12);
        assert!(validate_plan(&fast.plan, &p, &q).unwrap().is_ok());
        assert!((fast.plan.total_cost(&cost) - fast.value).abs() < 1e-12);

        let same = wasserstein_1d_ordinal(&p, &p, &scale).unwrap();
        assert_eq!(same.value, 0.0);

        let lo = dist(&space, &[("0", 1.0)]);
        let hi = dist(&space, &[("9", 1.0)]);
        let extreme = wasserstein_1d_ordinal(&lo, &hi, &scale).unwrap();
        assert!((extreme.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ordinal_1d_rejects_sentinel_mass() {
        let space = digit_space();
        let scale = ScaleMap::integer_range(0, 9).unwrap();
        let p = dist(&space, &[("0", 0.5)]); // 0.5 lands on the sentinel
        let q = dist(&space, &[("9", 1.0)]);
        assert!(matches!(
            wasserstein_1d_ordinal(&p, &q, &scale),
            Err(Error::NonzeroSentinelMass(_))
        ));
    }

    #[test]
    fn basic_cost_closed_form_one_minus_p() {
        let space = AnswerSpace::new(
            ["A", "B", "C"].iter().map(|t| Answer::new(*t).unwrap()).collect(),
            true,
        )
        .unwrap();
        let target = Answer::new("B").unwrap();
        let cost = basic_cost(&space, &target).unwrap();
        let p = dist(&space, &[("A", 0.3), ("B", 0.4), ("C", 0.1)]);
        let result =
            wasserstein_to_point_mass(&p, &Outcome::Answer(target), &cost).unwrap();
        assert!((result.value - (1.0 - 0.4)).abs() < 1e-12);
    }

    #[test]
    fn plan_validation_reports_violations() {
        let space = AnswerSpace::new(
            ["A", "B"].iter().map(|t| Answer::new(*t).unwrap()).collect(),
            false,
        )
        .unwrap();
        let p = dist(&space, &[("A", 0.5), ("B", 0.5)]);
        let q = dist(&space, &[("A", 1.0)]);

        let diagonal =
            TransportPlan::from_mass(Arc::clone(&space), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(validate_plan(&diagonal, &p, &p).unwrap().is_ok());

        let negative =
            TransportPlan::from_mass(Arc::clone(&space), vec![0.7, -0.2, 0.3, 0.2]).unwrap();
        assert!(matches!(
            validate_plan(&negative, &p, &p).unwrap(),
            PlanCheck::NegativeMass { .. }
        ));

        // Rows sum to p but columns do not sum to q.
        assert!(matches!(
            validate_plan(&diagonal, &p, &q).unwrap(),
            PlanCheck::ColumnMarginal { .. }
        ));
    }

    #[test]
    fn support_cap_enforced() {
        let texts: Vec<Answer> = (0..MAX_SUPPORT + 1)
            .map(|i| Answer::new(format!("a{i:04}")).unwrap())
            .collect();
        let space = AnswerSpace::new(texts, false).unwrap();
        let p = AnswerDistribution::uniform(&space);
        let n = space.len();
        let cost = CostMatrix::from_entries(Arc::clone(&space), vec![0.0; n * n]).unwrap();
        assert!(matches!(
            wasserstein(&p, &p, &cost),
            Err(Error::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn space_mismatch_rejected() {
        let s1 = AnswerSpace::new(vec![Answer::new("A").unwrap()], true).unwrap();
        let s2 = AnswerSpace::new(vec![Answer::new("B").unwrap()], true).unwrap();
        let p = AnswerDistribution::uniform(&s1);
        let q = AnswerDistribution::uniform(&s2);
        let cost = CostMatrix::from_entries(Arc::clone(&s1), vec![0.0; 4]).unwrap();
        assert!(matches!(
            wasserstein(&p, &q, &cost),
            Err(Error::SpaceMismatch)
        ));
    }

    #[test]
    fn plan_csv_lists_nonzero_cells() {
        let space = AnswerSpace::new(
            ["A", "B"].iter().map(|t| Answer::new(*t).unwrap()).collect(),
            false,
        )
        .unwrap();
        let plan =
            TransportPlan::from_mass(Arc::clone(&space), vec![0.5, 0.0, 0.25, 0.25]).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4); // header + 3 nonzero cells
        assert!(text.lines().any(|l| l == "B,A,0.25"));
    }
}
