//! Downlink power-control solvers.
//!
//! Two objectives over the feasible set `{eta >= 0, sum eta <= 1}`:
//!
//! * Sum-rate maximization. The fractional objective
//!   `sum_k log2(1 + SINR_k(eta))` is handled with the quadratic transform:
//!   auxiliaries `y_k` turn it into
//!   `f(eta, y) = sum_k log2(1 + 2 y_k sqrt(rho eta_k a_k)
//!                - y_k^2 (sum_t rho eta_t b_tk + 1))`,
//!   which is tight at `y_k* = sqrt(rho eta_k a_k) / (sum_t rho eta_t b_tk + 1)`
//!   and concave in `eta` for fixed `y`. The solver alternates the closed-form
//!   `y` update with an inner projected-gradient ascent until the objective
//!   change falls below a relative tolerance.
//!
//! * Max-min SINR fairness. Quasi-linear in `eta`: bisection over the common
//!   SINR target `zeta`, deciding each target with a max-slack linear
//!   feasibility program solved by a small dense simplex.

mod simplex;

use crate::error::{Error, Result};
use crate::performance::{achievable_rates, PowerAllocation, RateResult, SinrTerms};

const LN_2: f64 = std::f64::consts::LN_2;
/// Log arguments must stay above this during the inner line search.
const DOMAIN_FLOOR: f64 = 1e-12;
/// Floor for eta inside gradient square roots (the true partial derivative
/// diverges at eta_k = 0; a large finite surrogate preserves the ascent
/// direction).
const ETA_GRADIENT_FLOOR: f64 = 1e-16;
/// Feasibility slacks no worse than this count as feasible.
const MARGINAL_SLACK: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative objective tolerance for the outer sum-rate loop, and the
    /// absolute bracket width for max-min bisection.
    pub epsilon: f64,
    /// Outer iteration cap L.
    pub max_outer_iters: usize,
    /// Projected-gradient norm required of the inner solver.
    pub inner_tolerance: f64,
    /// Inner iteration cap.
    pub inner_max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_outer_iters: 100,
            inner_tolerance: 1e-6,
            inner_max_iters: 500,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.max_outer_iters < 1 || self.inner_max_iters < 1 {
            return Err(Error::InvalidArgument(
                "iteration caps must be at least 1".into(),
            ));
        }
        if !(self.inner_tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "inner tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of the sum-rate solver: final allocation, the true rates it
/// achieves, and the monotone objective trace `A^(0), A^(1), ...`.
#[derive(Debug, Clone)]
pub struct SumRateSolution {
    pub allocation: PowerAllocation,
    pub rates: RateResult,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of the max-min solver: the last feasible witness, the SINR floor
/// it certifies, the rates it achieves, and the bisection bracket history.
#[derive(Debug, Clone)]
pub struct MaxMinSolution {
    pub allocation: PowerAllocation,
    pub sinr_floor: f64,
    pub rates: RateResult,
    pub bracket_trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(PowerAllocation),
    Infeasible,
}

/// Euclidean projection onto `{x >= 0, sum x <= 1}`. If clipping negatives
/// already satisfies the budget that is the projection; otherwise project
/// onto the probability simplex by the sorting rule.
pub fn project_capped_simplex(x: &mut [f64]) {
    let clipped_sum: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if clipped_sum <= 1.0 {
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        return;
    }
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

/// Closed-form auxiliary update:
/// `y_k = sqrt(rho eta_k a_k) / (sum_t rho eta_t b_tk + 1)`.
pub fn update_y(terms: &SinrTerms, alloc: &PowerAllocation) -> Vec<f64> {
    let eta = alloc.eta();
    (0..terms.users())
        .map(|k| (terms.rho_d() * eta[k] * terms.a(k)).sqrt() / terms.denominator(eta, k))
        .collect()
}

fn eval_f_slice(terms: &SinrTerms, eta: &[f64], y: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..terms.users() {
        let arg = 1.0 + 2.0 * y[k] * (terms.rho_d() * eta[k] * terms.a(k)).sqrt()
            - y[k] * y[k] * terms.denominator(eta, k);
        if !(arg > 0.0) {
            return Err(Error::OutOfDomain(format!(
                "log argument {arg} for user {k} is not positive"
            )));
        }
        total += arg.log2();
    }
    Ok(total)
}

/// Quadratic-transform objective
/// `f = sum_k log2(1 + 2 y_k sqrt(rho eta_k a_k) - y_k^2 (sum_t rho eta_t b_tk + 1))`.
pub fn eval_f(terms: &SinrTerms, alloc: &PowerAllocation, y: &[f64]) -> Result<f64> {
    if y.len() != terms.users() || alloc.users() != terms.users() {
        return Err(Error::InvalidArgument(
            "dimension mismatch in objective evaluation".into(),
        ));
    }
    eval_f_slice(terms, alloc.eta(), y)
}

/// Gradient of `f` with respect to eta at fixed y (natural log corrected to
/// base 2). Assumes all log arguments are positive. The true partial
/// derivative diverges at `eta_k = 0` when `y_k a_k > 0`; the floor keeps a
/// large finite surrogate with the right sign.
fn gradient_f(terms: &SinrTerms, eta: &[f64], y: &[f64], grad: &mut [f64]) {
    let k = terms.users();
    let rho = terms.rho_d();
    let mut inv_args = vec![0.0; k];
    for j in 0..k {
        let arg = 1.0 + 2.0 * y[j] * (rho * eta[j] * terms.a(j)).sqrt()
            - y[j] * y[j] * terms.denominator(eta, j);
        inv_args[j] = 1.0 / arg;
    }
    for t in 0..k {
        let own = if y[t] > 0.0 && terms.a(t) > 0.0 {
            y[t] * (rho * terms.a(t) / eta[t].max(ETA_GRADIENT_FLOOR)).sqrt() * inv_args[t]
        } else {
            0.0
        };
        let mut cross = 0.0;
        for j in 0..k {
            cross += y[j] * y[j] * rho * terms.b(t, j) * inv_args[j];
        }
        grad[t] = (own - cross) / LN_2;
    }
}

/// Unit-step projected-gradient norm at `eta`: the first-order stationarity
/// certificate for the inner problem.
fn projected_gradient_norm(terms: &SinrTerms, eta: &[f64], y: &[f64]) -> f64 {
    let mut grad = vec![0.0; eta.len()];
    gradient_f(terms, eta, y, &mut grad);
    let mut probe: Vec<f64> = eta.iter().zip(&grad).map(|(e, g)| e + g).collect();
    project_capped_simplex(&mut probe);
    probe
        .iter()
        .zip(eta)
        .map(|(p, e)| (p - e) * (p - e))
        .sum::<f64>()
        .sqrt()
}

/// One sparse search direction for the inner solver: a single coordinate
/// (grow or shrink one user within the budget) or a budget-preserving
/// transfer between two users.
#[derive(Clone, Copy)]
enum Move {
    Coordinate(usize),
    Transfer(usize, usize),
}

impl Move {
    fn entries(self) -> [(usize, f64); 2] {
        match self {
            Move::Coordinate(k) => [(k, 1.0), (k, 0.0)],
            Move::Transfer(i, j) => [(i, 1.0), (j, -1.0)],
        }
    }
}

/// Directional derivative of `f` at `eta + delta * d`, using cached
/// denominators `denom[j] = rho sum_t eta_t b_tj + 1` and their directional
/// rates `denom_rate[j] = rho sum_k d_k b_kj`. `None` marks points outside
/// the log domain (some argument at or below the floor). The square-root
/// term legitimately contributes +-inf at a coordinate hitting zero, which
/// the sign-based bisection uses directly.
#[allow(clippy::too_many_arguments)]
fn directional_derivative(
    terms: &SinrTerms,
    y: &[f64],
    eta: &[f64],
    entries: &[(usize, f64); 2],
    denom: &[f64],
    denom_rate: &[f64],
    delta: f64,
) -> Option<f64> {
    let k = terms.users();
    let rho = terms.rho_d();
    let shifted = |t: usize| {
        let mut v = eta[t];
        for &(idx, dir) in entries {
            if idx == t {
                v += delta * dir;
            }
        }
        v.max(0.0)
    };
    let mut total = 0.0;
    let mut inv_args = vec![0.0; k];
    for j in 0..k {
        let d_j = denom[j] + delta * denom_rate[j];
        let arg = 1.0 + 2.0 * y[j] * (rho * shifted(j) * terms.a(j)).sqrt() - y[j] * y[j] * d_j;
        if !(arg > DOMAIN_FLOOR) {
            return None;
        }
        inv_args[j] = 1.0 / arg;
        total -= y[j] * y[j] * denom_rate[j] * inv_args[j];
    }
    for &(idx, dir) in entries {
        if dir != 0.0 && y[idx] > 0.0 && terms.a(idx) > 0.0 {
            total += dir * y[idx] * (rho * terms.a(idx) / shifted(idx)).sqrt() * inv_args[idx];
        }
    }
    if total.is_nan() {
        None
    } else {
        Some(total / LN_2)
    }
}

/// Exact concave 1D maximization along a sparse direction over
/// `[lo, 0] u [0, hi]` by bisection on the sign of the directional
/// derivative, starting from the in-domain current point `delta = 0`.
/// Out-of-domain evaluations read as +inf left of a domain edge and -inf
/// right of it (`f` falls to -inf at both edges), which steers the
/// bisection back inside; the returned endpoint is always in-domain.
#[allow(clippy::too_many_arguments)]
fn line_maximum(
    terms: &SinrTerms,
    y: &[f64],
    eta: &[f64],
    entries: &[(usize, f64); 2],
    denom: &[f64],
    denom_rate: &[f64],
    lo: f64,
    hi: f64,
) -> f64 {
    let deriv = |delta: f64| -> f64 {
        match directional_derivative(terms, y, eta, entries, denom, denom_rate, delta) {
            Some(v) => v,
            None if delta > 0.0 => f64::NEG_INFINITY,
            None => f64::INFINITY,
        }
    };
    let at_zero = deriv(0.0);
    if at_zero > 0.0 && hi > 0.0 {
        if deriv(hi) >= 0.0 {
            return hi;
        }
        let (mut inside, mut outside) = (0.0f64, hi);
        for _ in 0..90 {
            let mid = 0.5 * (inside + outside);
            if mid <= inside || mid >= outside {
                break;
            }
            if deriv(mid) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside // derivative > 0 there, hence in-domain
    } else if at_zero < 0.0 && lo < 0.0 {
        if deriv(lo) <= 0.0 {
            return lo;
        }
        let (mut outside, mut inside) = (lo, 0.0f64);
        for _ in 0..90 {
            let mid = 0.5 * (outside + inside);
            if mid <= outside || mid >= inside {
                break;
            }
            if deriv(mid) < 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside // derivative < 0 and finite there, hence in-domain
    } else {
        0.0
    }
}

/// Maximize `f(eta, y)` over the power budget for fixed `y` by exact
/// cyclic ascent over sparse directions: each sweep maximizes `f` exactly
/// along every single coordinate (within the budget headroom) and every
/// pairwise power transfer, by bisection on the concave 1D directional
/// derivative. Fixed points of the sweep are exactly the KKT points of the
/// concave program, so the power-space projected-gradient certificate
/// closes; each 1D maximization is scale-free, which keeps the method
/// robust when user gains span many orders of magnitude. A stationary
/// initializer (e.g. `y = 0`) is returned unchanged.
pub fn solve_inner_concave(
    terms: &SinrTerms,
    y: &[f64],
    init: &PowerAllocation,
    options: &SolverOptions,
) -> Result<PowerAllocation> {
    options.validate()?;
    let k = terms.users();
    if y.len() != k || init.users() != k {
        return Err(Error::InvalidArgument(
            "dimension mismatch in inner solver".into(),
        ));
    }
    eval_f_slice(terms, init.eta(), y)?; // the initializer must be in-domain
    if projected_gradient_norm(terms, init.eta(), y) <= options.inner_tolerance {
        return Ok(init.clone());
    }
    let rho = terms.rho_d();
    let mut eta: Vec<f64> = init.eta().to_vec();
    // Cached interference denominators rho sum_t eta_t b_tj + 1, updated
    // incrementally after each accepted move.
    let mut denom: Vec<f64> = (0..k).map(|j| terms.denominator(&eta, j)).collect();
    let mut moves: Vec<Move> = (0..k).map(Move::Coordinate).collect();
    for i in 0..k {
        for j in i + 1..k {
            moves.push(Move::Transfer(i, j));
        }
    }
    let mut residual = f64::INFINITY;
    for _ in 0..options.inner_max_iters {
        for &mv in &moves {
            let entries = mv.entries();
            let (lo, hi) = match mv {
                Move::Coordinate(c) => {
                    let headroom = (1.0 - eta.iter().sum::<f64>()).max(0.0);
                    (-eta[c], headroom)
                }
                Move::Transfer(i, j) => (-eta[i], eta[j]),
            };
            let denom_rate: Vec<f64> = (0..k)
                .map(|t| {
                    let mut rate = 0.0;
                    for &(idx, dir) in &entries {
                        rate += dir * rho * terms.b(idx, t);
                    }
                    rate
                })
                .collect();
            let delta = line_maximum(terms, y, &eta, &entries, &denom, &denom_rate, lo, hi);
            if delta != 0.0 {
                for &(idx, dir) in &entries {
                    if dir != 0.0 {
                        eta[idx] = (eta[idx] + delta * dir).clamp(0.0, 1.0);
                    }
                }
                for (d, rate) in denom.iter_mut().zip(&denom_rate) {
                    *d += delta * rate;
                }
            }
        }
        // Refresh the cached denominators once per sweep to stop increment
        // drift, then test first-order stationarity.
        for (j, d) in denom.iter_mut().enumerate() {
            *d = terms.denominator(&eta, j);
        }
        residual = projected_gradient_norm(terms, &eta, y);
        if residual <= options.inner_tolerance {
            return PowerAllocation::new(eta);
        }
    }
    Err(Error::NonConvergence {
        iterations: options.inner_max_iters,
        residual,
        last_iterate: eta,
    })
}

/// One run of the alternating scheme from a given feasible initializer.
fn solve_sum_rate_from(
    terms: &SinrTerms,
    options: &SolverOptions,
    init: &PowerAllocation,
) -> Result<SumRateSolution> {
    let mut eta = init.clone();
    let mut y = update_y(terms, &eta);
    let mut previous = eval_f(terms, &eta, &y)?;
    let mut trace = vec![previous];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..options.max_outer_iters {
        y = update_y(terms, &eta);
        eta = solve_inner_concave(terms, &y, &eta, options)?;
        let objective = eval_f(terms, &eta, &y)?;
        trace.push(objective);
        iterations += 1;
        let change = (objective - previous).abs();
        let relative = if previous.abs() > 1e-300 {
            change / previous.abs()
        } else {
            change
        };
        previous = objective;
        if relative <= options.epsilon {
            converged = true;
            break;
        }
    }
    let rates = achievable_rates(terms, &eta);
    Ok(SumRateSolution {
        allocation: eta,
        rates,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Sum-rate maximization by alternating the closed-form auxiliary update
/// with the inner concave maximization until the relative objective change
/// is within `epsilon` or the outer cap is reached.
///
/// The alternation converges to a stationary point that depends on the
/// initializer, and interference-coupled instances have several: the run
/// is repeated from the uniform allocation and from one
/// near-single-user allocation per user, and the best achieved sum rate is
/// returned (ties kept on the uniform start, which preserves symmetric
/// fixed points).
pub fn solve_sum_rate(terms: &SinrTerms, options: &SolverOptions) -> Result<SumRateSolution> {
    options.validate()?;
    let k = terms.users();
    let mut best = solve_sum_rate_from(terms, options, &PowerAllocation::uniform(k))?;
    if k > 1 {
        for user in 0..k {
            let spread = 0.1 / (k - 1) as f64;
            let mut eta = vec![spread; k];
            eta[user] = 0.9;
            let start = PowerAllocation::new(eta)?;
            let candidate = solve_sum_rate_from(terms, options, &start)?;
            if candidate.rates.sum > best.rates.sum + 1e-9 {
                best = candidate;
            }
        }
    }
    Ok(best)
}

/// Decide whether some allocation meets the common SINR target `zeta`:
/// existence of `eta >= 0, sum eta <= 1` with
/// `rho sum_t eta_t b_tk + 1 - (1/zeta) rho eta_k a_k <= 0` for every k.
///
/// Implemented as a max-slack linear program: maximize `s` subject to every
/// constraint margin being at least `s`. Since the zero allocation has
/// margin -1, substituting `sigma = s + 1 >= 0` keeps all right-hand sides
/// non-negative and the all-slack simplex start feasible. The target is
/// feasible when the optimal slack is at least `-1e-9`, and the maximizing
/// allocation is returned as a witness.
pub fn check_feasibility(terms: &SinrTerms, zeta: f64) -> Result<Feasibility> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "SINR target must be positive and finite, got {zeta}"
        )));
    }
    let k = terms.users();
    // A user with a_k = 0 can never reach a positive target.
    if (0..k).any(|user| terms.a(user) <= 0.0) {
        return Ok(Feasibility::Infeasible);
    }
    let rho = terms.rho_d();
    // Variables: eta_0 .. eta_{K-1}, sigma.
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut rows = Vec::with_capacity(k + 1);
    let mut rhs = Vec::with_capacity(k + 1);
    for user in 0..k {
        let mut row = vec![0.0; k + 1];
        for (t, v) in row[..k].iter_mut().enumerate() {
            *v = rho * terms.b(t, user);
        }
        row[user] -= rho * terms.a(user) / zeta;
        row[k] = 1.0;
        rows.push(row);
        rhs.push(0.0);
    }
    let mut budget = vec![1.0; k];
    budget.push(0.0); // sigma is not part of the power budget
    rows.push(budget);
    rhs.push(1.0);

    let solution = simplex::maximize(&objective, &rows, &rhs)?;
    let slack = solution.objective - 1.0;
    if slack >= MARGINAL_SLACK {
        let eta = solution.x[..k].to_vec();
        Ok(Feasibility::Feasible(PowerAllocation::new(eta)?))
    } else {
        Ok(Feasibility::Infeasible)
    }
}

/// Max-min SINR fairness by bisection on the common target `zeta`, between
/// 0 and the interference-free bound `rho max_k a_k`, keeping the last
/// feasible witness. Terminates when the bracket is narrower than
/// `epsilon`.
pub fn solve_max_min(terms: &SinrTerms, options: &SolverOptions) -> Result<MaxMinSolution> {
    options.validate()?;
    let k = terms.users();
    if (0..k).any(|user| terms.a(user) <= 0.0) {
        return Err(Error::DegenerateInstance(
            "every user needs a positive gain coefficient for max-min fairness".into(),
        ));
    }
    let zeta_upper = terms.rho_d()
        * (0..k)
            .map(|user| terms.a(user))
            .fold(0.0f64, f64::max);
    if !(zeta_upper > 0.0) || !zeta_upper.is_finite() {
        return Err(Error::DegenerateInstance(format!(
            "interference-free SINR bound {zeta_upper} is unusable"
        )));
    }
    let mut zeta_min = 0.0f64;
    let mut zeta_max = zeta_upper;
    // zeta = 0 is trivially met by any allocation; keep a usable witness
    // in case every probed target turns out infeasible.
    let mut witness = PowerAllocation::uniform(k);
    let mut bracket_trace = vec![(zeta_min, zeta_max)];
    while zeta_max - zeta_min >= options.epsilon {
        let zeta = 0.5 * (zeta_min + zeta_max);
        match check_feasibility(terms, zeta)? {
            Feasibility::Feasible(eta) => {
                zeta_min = zeta;
                witness = eta;
            }
            Feasibility::Infeasible => {
                zeta_max = zeta;
            }
        }
        bracket_trace.push((zeta_min, zeta_max));
    }
    let rates = achievable_rates(terms, &witness);
    Ok(MaxMinSolution {
        allocation: witness,
        sinr_floor: zeta_min,
        rates,
        bracket_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::performance::{sinr, CsiMode};
    use crate::rng::RngStream;

    /// Random strictly-positive terms with moderate magnitudes.
    fn random_terms(users: usize, seed: u64, flavor: CsiMode) -> SinrTerms {
        let mut rng = RngStream::from_seed(seed);
        let a: Vec<f64> = (0..users).map(|_| 0.5 + 3.5 * rng.uniform()).collect();
        let mut b = vec![0.0; users * users];
        for t in 0..users {
            for k in 0..users {
                if t != k {
                    b[t * users + k] = 0.3 * rng.uniform();
                } else if flavor == CsiMode::Statistical {
                    b[t * users + k] = 0.2 * rng.uniform();
                }
            }
        }
        let rho = 0.5 + 1.5 * rng.uniform();
        SinrTerms::new(flavor, a, b, rho).unwrap()
    }

    fn true_sum_rate(terms: &SinrTerms, eta: &PowerAllocation) -> f64 {
        achievable_rates(terms, eta).sum
    }

    /// Exhaustive grid over the capped 2-simplex with one refinement pass.
    fn grid_search_2d(step: f64, mut score: impl FnMut(f64, f64) -> f64) -> (f64, [f64; 2]) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = [0.0, 0.0];
        let n = (1.0 / step).round() as usize;
        for i in 0..=n {
            let e0 = i as f64 * step;
            for j in 0..=(n - i) {
                let e1 = j as f64 * step;
                let s = score(e0, e1);
                if s > best {
                    best = s;
                    arg = [e0, e1];
                }
            }
        }
        // Local refinement around the coarse winner.
        let fine = step / 50.0;
        let mut refined = best;
        let mut refined_arg = arg;
        let lo0 = (arg[0] - 2.0 * step).max(0.0);
        let lo1 = (arg[1] - 2.0 * step).max(0.0);
        for i in 0..=200 {
            let e0 = lo0 + i as f64 * fine;
            for j in 0..=200 {
                let e1 = lo1 + j as f64 * fine;
                if e0 + e1 > 1.0 {
                    break;
                }
                let s = score(e0, e1);
                if s > refined {
                    refined = s;
                    refined_arg = [e0, e1];
                }
            }
        }
        (refined, refined_arg)
    }

    // ---- projection --------------------------------------------------------

    #[test]
    fn projection_handles_interior_negative_and_oversized_points() {
        let mut interior = vec![0.2, 0.3];
        project_capped_simplex(&mut interior);
        assert_eq!(interior, vec![0.2, 0.3]);

        let mut negative = vec![-0.5, 0.4];
        project_capped_simplex(&mut negative);
        assert_eq!(negative, vec![0.0, 0.4]);

        let mut oversized = vec![1.0, 1.0];
        project_capped_simplex(&mut oversized);
        assert!((oversized[0] - 0.5).abs() < 1e-12);
        assert!((oversized[1] - 0.5).abs() < 1e-12);

        let mut mixed = vec![1.4, 0.2, -0.3];
        project_capped_simplex(&mut mixed);
        let sum: f64 = mixed.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(mixed.iter().all(|&v| v >= 0.0));
        // Projection of (1.4, 0.2, -0.3) onto the simplex: theta = 0.4.
        assert!((mixed[0] - 1.0).abs() < 1e-12);
        assert!(mixed[1].abs() < 1e-12);
    }

    // ---- auxiliary update and objective ------------------------------------

    #[test]
    fn y_update_direct_values() {
        let terms = SinrTerms::new(CsiMode::Statistical, vec![4.0], vec![1.0], 1.0).unwrap();
        let full = PowerAllocation::new(vec![1.0]).unwrap();
        let y = update_y(&terms, &full);
        assert!((y[0] - 1.0).abs() < 1e-15); // sqrt(4)/(1+1)

        let zero = PowerAllocation::zeros(1);
        assert_eq!(update_y(&terms, &zero)[0], 0.0);
    }

    #[test]
    fn quadratic_transform_is_tight_at_y_star() {
        for seed in 0..20 {
            let terms = random_terms(3, seed, CsiMode::Statistical);
            let mut rng = RngStream::from_seed(1000 + seed);
            let mut eta = vec![rng.uniform(), rng.uniform(), rng.uniform()];
            project_capped_simplex(&mut eta);
            let alloc = PowerAllocation::new(eta).unwrap();
            let y = update_y(&terms, &alloc);
            let f = eval_f(&terms, &alloc, &y).unwrap();
            let direct = true_sum_rate(&terms, &alloc);
            assert!(
                (f - direct).abs() < 1e-9,
                "seed {seed}: f = {f}, sum rate = {direct}"
            );
        }
    }

    #[test]
    fn objective_direct_values_and_domain_error() {
        let terms = SinrTerms::new(CsiMode::Statistical, vec![4.0], vec![1.0], 1.0).unwrap();
        let full = PowerAllocation::new(vec![1.0]).unwrap();
        // arg = 1 + 2*2 - (1+1) = 3
        let f = eval_f(&terms, &full, &[1.0]).unwrap();
        assert!((f - 3.0f64.log2()).abs() < 1e-15);

        assert_eq!(eval_f(&terms, &full, &[0.0]).unwrap(), 0.0);

        // Large y drives the argument negative.
        assert!(matches!(
            eval_f(&terms, &full, &[10.0]),
            Err(Error::OutOfDomain(_))
        ));
    }

    // ---- inner concave solver -----------------------------------------------

    #[test]
    fn inner_solver_matches_scalar_calculus() {
        // K = 1: maximize log2(1 + 2 y sqrt(rho a eta) - y^2 (rho b eta + 1));
        // stationarity gives eta* = a / (y^2 rho b^2), clipped to [0, 1].
        let cases = [
            (1.0f64, 1.5f64, 1.0f64, 1.0f64), // interior optimum
            (1.0, 1.2, 1.0, 0.8),             // clips at 1
        ];
        for &(a, b, rho, y) in &cases {
            let terms =
                SinrTerms::new(CsiMode::Statistical, vec![a], vec![b], rho).unwrap();
            let init = PowerAllocation::new(vec![0.5]).unwrap();
            let opts = SolverOptions {
                inner_tolerance: 1e-9,
                inner_max_iters: 5000,
                ..SolverOptions::default()
            };
            let solved = solve_inner_concave(&terms, &[y], &init, &opts).unwrap();
            let expect = (a / (y * y * rho * b * b)).min(1.0);
            assert!(
                (solved.eta()[0] - expect).abs() < 1e-6,
                "a={a} b={b} y={y}: got {}, want {expect}",
                solved.eta()[0]
            );
        }
    }

    #[test]
    fn inner_solver_cap_reports_last_iterate() {
        let terms = random_terms(4, 77, CsiMode::Statistical);
        let start = PowerAllocation::uniform(4);
        let y = update_y(&terms, &start);
        let strangled = SolverOptions {
            inner_max_iters: 1,
            inner_tolerance: 1e-14,
            ..SolverOptions::default()
        };
        match solve_inner_concave(&terms, &y, &start, &strangled) {
            Err(Error::NonConvergence {
                iterations,
                last_iterate,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert_eq!(last_iterate.len(), 4);
                assert!(last_iterate.iter().all(|&v| v >= 0.0));
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn inner_solver_returns_initializer_for_zero_y() {
        let terms = random_terms(3, 5, CsiMode::Statistical);
        let init = PowerAllocation::new(vec![0.1, 0.5, 0.2]).unwrap();
        let solved =
            solve_inner_concave(&terms, &[0.0; 3], &init, &SolverOptions::default()).unwrap();
        assert_eq!(solved.eta(), init.eta());
    }

    #[test]
    fn inner_solver_matches_grid_on_two_users() {
        for seed in 0..10 {
            let terms = random_terms(2, 40 + seed, CsiMode::Statistical);
            let start = PowerAllocation::uniform(2);
            let y = update_y(&terms, &start);
            let opts = SolverOptions::default();
            let solved = solve_inner_concave(&terms, &y, &start, &opts).unwrap();
            let f_solved = eval_f(&terms, &solved, &y).unwrap();
            let (f_grid, _) = grid_search_2d(1e-3, |e0, e1| {
                eval_f_slice(&terms, &[e0, e1], &y).unwrap_or(f64::NEG_INFINITY)
            });
            assert!(
                f_solved >= f_grid - 1e-3,
                "seed {seed}: solver {f_solved} vs grid {f_grid}"
            );
        }
    }

    // ---- sum-rate solver -----------------------------------------------------

    #[test]
    fn sum_rate_waterfills_two_interference_free_users() {
        // a = (4, 1), b = 0: closed form favors user 0 with eta = (7/8, 1/8).
        let terms = SinrTerms::new(
            CsiMode::Instantaneous,
            vec![4.0, 1.0],
            vec![0.0; 4],
            1.0,
        )
        .unwrap();
        let opts = SolverOptions {
            epsilon: 1e-6,
            ..SolverOptions::default()
        };
        let solution = solve_sum_rate(&terms, &opts).unwrap();
        let (grid_best, grid_arg) = grid_search_2d(1e-3, |e0, e1| {
            true_sum_rate(
                &terms,
                &PowerAllocation::new(vec![e0, e1]).unwrap(),
            )
        });
        assert!(
            (solution.rates.sum - grid_best).abs() < 1e-2,
            "solver {} vs grid {} at {:?}",
            solution.rates.sum,
            grid_best,
            grid_arg
        );
        assert!((solution.allocation.eta()[0] - 7.0 / 8.0).abs() < 0.02);
        assert!(solution.allocation.eta()[0] > solution.allocation.eta()[1]);
    }

    #[test]
    fn sum_rate_symmetric_users_stay_uniform() {
        let terms = SinrTerms::new(
            CsiMode::Statistical,
            vec![2.0, 2.0],
            vec![0.1, 0.3, 0.3, 0.1],
            1.0,
        )
        .unwrap();
        let solution = solve_sum_rate(&terms, &SolverOptions::default()).unwrap();
        for &e in solution.allocation.eta() {
            assert!((e - 0.5).abs() < 1e-6, "eta = {:?}", solution.allocation.eta());
        }
    }

    #[test]
    fn sum_rate_single_user_takes_all_power() {
        let terms =
            SinrTerms::new(CsiMode::Statistical, vec![3.0], vec![0.2], 2.0).unwrap();
        let solution = solve_sum_rate(&terms, &SolverOptions::default()).unwrap();
        assert!((solution.allocation.eta()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sum_rate_trace_is_monotone_and_converges() {
        for seed in 0..50 {
            let users = 2 + (seed as usize % 7);
            let terms = random_terms(users, 500 + seed, CsiMode::Statistical);
            let solution = solve_sum_rate(&terms, &SolverOptions::default()).unwrap();
            for w in solution.objective_trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-9,
                    "seed {seed}: objective decreased {} -> {}",
                    w[0],
                    w[1]
                );
            }
            assert!(solution.converged, "seed {seed} hit the outer cap");
            // Tightness after the final y-update.
            let y = update_y(&terms, &solution.allocation);
            let f = eval_f(&terms, &solution.allocation, &y).unwrap();
            assert!((f - solution.rates.sum).abs() < 1e-9);
        }
    }

    // ---- feasibility ----------------------------------------------------------

    #[test]
    fn vanishing_target_is_feasible() {
        let terms = random_terms(3, 7, CsiMode::Statistical);
        match check_feasibility(&terms, 1e-9).unwrap() {
            Feasibility::Feasible(eta) => {
                assert!(eta.eta().iter().sum::<f64>() <= 1.0 + 1e-9);
            }
            Feasibility::Infeasible => panic!("tiny target should be feasible"),
        }
    }

    #[test]
    fn single_user_feasible_iff_target_below_gain() {
        let terms =
            SinrTerms::new(CsiMode::Instantaneous, vec![2.0], vec![0.0], 1.0).unwrap();
        assert!(matches!(
            check_feasibility(&terms, 1.999).unwrap(),
            Feasibility::Feasible(_)
        ));
        assert!(matches!(
            check_feasibility(&terms, 2.0).unwrap(),
            Feasibility::Feasible(_)
        ));
        assert!(matches!(
            check_feasibility(&terms, 2.001).unwrap(),
            Feasibility::Infeasible
        ));
    }

    #[test]
    fn targets_above_interference_free_bound_are_infeasible() {
        for seed in 0..20 {
            let terms = random_terms(3, 900 + seed, CsiMode::Statistical);
            let bound = terms.rho_d()
                * (0..3).map(|k| terms.a(k)).fold(0.0f64, f64::max);
            assert!(matches!(
                check_feasibility(&terms, bound * 1.01).unwrap(),
                Feasibility::Infeasible
            ));
        }
    }

    #[test]
    fn zero_gain_user_is_immediately_infeasible() {
        let terms = SinrTerms::new(
            CsiMode::Statistical,
            vec![1.0, 0.0],
            vec![0.0; 4],
            1.0,
        )
        .unwrap();
        assert_eq!(check_feasibility(&terms, 0.5).unwrap(), Feasibility::Infeasible);
    }

    #[test]
    fn feasible_witness_meets_all_constraints() {
        for seed in 0..20 {
            let terms = random_terms(4, 1300 + seed, CsiMode::Statistical);
            let zeta = 0.3;
            if let Feasibility::Feasible(eta) = check_feasibility(&terms, zeta).unwrap() {
                for k in 0..4 {
                    let s = sinr(&terms, &eta, k);
                    assert!(
                        s >= zeta * (1.0 - 1e-6),
                        "seed {seed}: user {k} SINR {s} below target {zeta}"
                    );
                }
            }
        }
    }

    #[test]
    fn non_positive_target_is_an_error() {
        let terms = random_terms(2, 8, CsiMode::Statistical);
        assert!(check_feasibility(&terms, 0.0).is_err());
        assert!(check_feasibility(&terms, -1.0).is_err());
    }

    // ---- max-min solver ---------------------------------------------------------

    #[test]
    fn max_min_single_user() {
        let (a, b, rho) = (2.0, 0.4, 1.0);
        let terms = SinrTerms::new(CsiMode::Statistical, vec![a], vec![b], rho).unwrap();
        let solution = solve_max_min(&terms, &SolverOptions::default()).unwrap();
        let expect = rho * a / (rho * b + 1.0);
        assert!((solution.allocation.eta()[0] - 1.0).abs() < 1e-6);
        assert!(
            (solution.sinr_floor - expect).abs() < 2e-3,
            "zeta = {}, want {expect}",
            solution.sinr_floor
        );
    }

    #[test]
    fn max_min_identical_users_split_evenly() {
        let terms = SinrTerms::new(
            CsiMode::Statistical,
            vec![2.0, 2.0],
            vec![0.1, 0.3, 0.3, 0.1],
            1.0,
        )
        .unwrap();
        let solution = solve_max_min(&terms, &SolverOptions::default()).unwrap();
        let eta = solution.allocation.eta();
        assert!((eta[0] - 0.5).abs() < 1e-6, "eta = {eta:?}");
        assert!((eta[1] - 0.5).abs() < 1e-6);
        let s0 = sinr(&terms, &solution.allocation, 0);
        let s1 = sinr(&terms, &solution.allocation, 1);
        assert!((s0 - s1).abs() < 1e-9);
    }

    #[test]
    fn max_min_matches_grid_oracle_and_equalizes() {
        let opts = SolverOptions::default();
        for seed in 0..15 {
            let terms = random_terms(2, 2000 + seed, CsiMode::Statistical);
            let solution = solve_max_min(&terms, &opts).unwrap();
            let (grid_best, _) = grid_search_2d(1e-3, |e0, e1| {
                let alloc = PowerAllocation::new(vec![e0, e1]).unwrap();
                sinr(&terms, &alloc, 0).min(sinr(&terms, &alloc, 1))
            });
            assert!(
                (solution.sinr_floor - grid_best).abs() <= 2.0 * opts.epsilon,
                "seed {seed}: zeta {} vs grid {grid_best}",
                solution.sinr_floor
            );
            let s0 = sinr(&terms, &solution.allocation, 0);
            let s1 = sinr(&terms, &solution.allocation, 1);
            assert!(
                (s0 - s1).abs() <= 10.0 * opts.epsilon,
                "seed {seed}: SINRs {s0} vs {s1}"
            );
        }
    }

    #[test]
    fn max_min_bracket_invariant_holds() {
        let opts = SolverOptions::default();
        for seed in 0..10 {
            let terms = random_terms(3, 3000 + seed, CsiMode::Statistical);
            let solution = solve_max_min(&terms, &opts).unwrap();
            let trace = &solution.bracket_trace;
            for w in trace.windows(2) {
                let (lo0, hi0) = w[0];
                let (lo1, hi1) = w[1];
                assert!(lo1 >= lo0 && hi1 <= hi0, "bracket must nest");
                assert!(lo1 <= hi1);
            }
            let (lo, hi) = *trace.last().unwrap();
            assert!(hi - lo < opts.epsilon);
            assert_eq!(lo, solution.sinr_floor);
            // The certified floor is genuinely feasible.
            if lo > 0.0 {
                assert!(matches!(
                    check_feasibility(&terms, lo).unwrap(),
                    Feasibility::Feasible(_)
                ));
            }
            // And every user meets it at the returned allocation.
            for k in 0..3 {
                assert!(sinr(&terms, &solution.allocation, k) >= lo * (1.0 - 1e-6));
            }
        }
    }

    #[test]
    fn max_min_rejects_zero_gain_users() {
        let terms = SinrTerms::new(
            CsiMode::Statistical,
            vec![1.0, 0.0],
            vec![0.0; 4],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            solve_max_min(&terms, &SolverOptions::default()),
            Err(Error::DegenerateInstance(_))
        ));
    }

    // ---- scale sanity -------------------------------------------------------------

    #[test]
    fn solvers_are_invariant_to_power_rescaling() {
        let opts = SolverOptions::default();
        for seed in 0..5 {
            let terms = random_terms(3, 4000 + seed, CsiMode::Statistical);
            for &c in &[8.0f64, 3.0] {
                let a: Vec<f64> = (0..3).map(|k| terms.a(k) * c).collect();
                let mut b = vec![0.0; 9];
                for t in 0..3 {
                    for k in 0..3 {
                        b[t * 3 + k] = terms.b(t, k) * c;
                    }
                }
                let scaled =
                    SinrTerms::new(CsiMode::Statistical, a, b, terms.rho_d() / c).unwrap();

                let base_sr = solve_sum_rate(&terms, &opts).unwrap();
                let scaled_sr = solve_sum_rate(&scaled, &opts).unwrap();
                for (x, y) in base_sr
                    .allocation
                    .eta()
                    .iter()
                    .zip(scaled_sr.allocation.eta())
                {
                    assert!((x - y).abs() < 1e-6, "c = {c}: {x} vs {y}");
                }

                let base_mm = solve_max_min(&terms, &opts).unwrap();
                let scaled_mm = solve_max_min(&scaled, &opts).unwrap();
                for (x, y) in base_mm
                    .allocation
                    .eta()
                    .iter()
                    .zip(scaled_mm.allocation.eta())
                {
                    assert!((x - y).abs() < 1e-6, "c = {c}: {x} vs {y}");
                }
            }
        }
    }
}
