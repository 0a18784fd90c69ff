//! Alternating-optimization solvers for the two extremum problems over
//! causally conditioned families, with brute-force grid oracles.
//!
//! [`feedback_capacity`] maximizes per-symbol directed information over
//! input policies for a fixed forward channel. Each round freezes the
//! Bayes reverse decomposition of the current iterate (the closed-form
//! inner maximizer of the lower-bound objective) and then maximizes the
//! frozen-reference objective exactly over all policy kernels with one
//! backward sweep: every row becomes an exponential weighting of its
//! expected continuation value. Both coordinate steps are exact, so the
//! directed-information trace is monotone nondecreasing; the solver
//! asserts this.
//!
//! [`nrdf`] minimizes per-symbol directed information from a source to its
//! reproduction subject to an average distortion budget. The inner loop
//! for a fixed multiplier alternates the closed-form output-reference
//! update with an exact backward soft-min sweep over reproduction kernel
//! rows (the tilted update `ν̄ · 2^{-s·d}` plus a continuation-value term
//! that vanishes for memoryless steps); the multiplier is then bisected to
//! meet the budget.
//!
//! [`brute_force_capacity`] and [`brute_force_nrdf`] enumerate kernel rows
//! on a simplex grid with step `1/m` and exhaustively optimize, serving as
//! independent oracles for the solvers.

use crate::directed_info::di_cmi_sum;
use crate::measures::{compose_joint, ForwardChannel, InputPolicy, InstanceSpec, Pmf};
use crate::radix;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hard cap on grid-oracle work.
const ORACLE_BUDGET: u64 = 10_000_000;

/// Range and depth of the Lagrange-multiplier bisection.
const MULTIPLIER_MAX: f64 = 64.0;
const BISECTION_ITERS: usize = 80;

/// Knobs shared by both solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Simplex grid resolution used by the oracles.
    pub grid_resolution: usize,
    /// Seed for the randomized restart.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: 1e-9,
            grid_resolution: 64,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::BadSolverConfig("max_iters must be at least 1".into()));
        }
        if self.rel_tol <= 0.0 || !self.rel_tol.is_finite() {
            return Err(Error::BadSolverConfig("rel_tol must be positive".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::BadSolverConfig(
                "grid_resolution must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Per-letter distortion tables `d_i(x_i, y_i) ≥ 0` (row-major in `x_i`)
/// plus a budget on the average total distortion
/// `E[Σ_i d_i] / (n+1) ≤ budget`.
#[derive(Debug, Clone)]
pub struct DistortionSpec {
    tables: Vec<Vec<f64>>,
    budget: f64,
}

impl DistortionSpec {
    pub fn new(spec: &InstanceSpec, tables: Vec<Vec<f64>>, budget: f64) -> Result<Self> {
        if tables.len() != spec.horizon() + 1 {
            return Err(Error::LengthMismatch {
                expected: spec.horizon() + 1,
                got: tables.len(),
            });
        }
        for (i, t) in tables.iter().enumerate() {
            let want = spec.x_sizes()[i] * spec.y_sizes()[i];
            if t.len() != want {
                return Err(Error::LengthMismatch {
                    expected: want,
                    got: t.len(),
                });
            }
            if t.iter().any(|&d| !d.is_finite() || d < 0.0) {
                return Err(Error::NegativeMass(
                    *t.iter().find(|&&d| !d.is_finite() || d < 0.0).unwrap(),
                ));
            }
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::NegativeMass(budget));
        }
        Ok(Self { tables, budget })
    }

    /// Hamming distortion `d_i(x, y) = 1{x ≠ y}` at every step.
    pub fn hamming(spec: &InstanceSpec, budget: f64) -> Result<Self> {
        let tables = (0..=spec.horizon())
            .map(|i| {
                let (xs, ys) = (spec.x_sizes()[i], spec.y_sizes()[i]);
                (0..xs * ys)
                    .map(|idx| if idx / ys == idx % ys { 0.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        Self::new(spec, tables, budget)
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    fn d(&self, i: usize, x: usize, y: usize, ys: usize) -> f64 {
        self.tables[i][x * ys + y]
    }
}

/// Per-letter input costs `c_i(x_i) ≥ 0` plus a budget on the average
/// total cost `E[Σ_i c_i] / (n+1) ≤ budget`.
#[derive(Debug, Clone)]
pub struct PowerSpec {
    costs: Vec<Vec<f64>>,
    budget: f64,
}

impl PowerSpec {
    pub fn new(spec: &InstanceSpec, costs: Vec<Vec<f64>>, budget: f64) -> Result<Self> {
        if costs.len() != spec.horizon() + 1 {
            return Err(Error::LengthMismatch {
                expected: spec.horizon() + 1,
                got: costs.len(),
            });
        }
        for (i, c) in costs.iter().enumerate() {
            if c.len() != spec.x_sizes()[i] {
                return Err(Error::LengthMismatch {
                    expected: spec.x_sizes()[i],
                    got: c.len(),
                });
            }
            if c.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::NegativeMass(
                    *c.iter().find(|&&v| !v.is_finite() || v < 0.0).unwrap(),
                ));
            }
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::NegativeMass(budget));
        }
        Ok(Self { costs, budget })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }
}

/// Solver outcome. `trace` holds the per-iteration objective of the
/// reported solve (per-symbol bits; for the distortion solver the inner
/// Lagrangian of the final multiplier), and is monotone by construction.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub value_bits: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Feedback capacity
// ---------------------------------------------------------------------------

/// Maximizes `I(X^n → Y^n) / (n+1)` over input policies, optionally under
/// an average power constraint. Returns the achieved value, the argmax
/// policy, and the monotone objective trace. On non-convergence the best
/// iterate is returned with `converged = false`.
pub fn feedback_capacity(
    channel: &ForwardChannel,
    cfg: &SolverConfig,
    power: Option<&PowerSpec>,
) -> Result<(SolveResult, InputPolicy)> {
    cfg.validate()?;
    let spec = channel.spec().clone();
    let steps = spec.horizon() as f64 + 1.0;

    match power {
        None => {
            let (result, policy) = best_of_two_starts(channel, cfg, 0.0)?;
            Ok((result, policy))
        }
        Some(power) => {
            // Cheapest possible average cost; below it no policy is feasible.
            let min_cost: f64 = power
                .costs
                .iter()
                .map(|c| c.iter().cloned().fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / steps;
            if power.budget < min_cost - 1e-12 {
                return Err(Error::InfeasibleDistortion {
                    budget: power.budget,
                    minimum: min_cost,
                });
            }
            let evaluate = |s: f64| -> Result<(SolveResult, InputPolicy, f64)> {
                let (result, policy) = best_of_two_starts_power(channel, cfg, s, power)?;
                let cost = average_cost(&policy, channel, power)?;
                Ok((result, policy, cost))
            };
            let (res0, pol0, cost0) = evaluate(0.0)?;
            if cost0 <= power.budget + 1e-8 {
                return Ok((res0, pol0));
            }
            let mut lo = 0.0;
            let mut hi = MULTIPLIER_MAX;
            let (mut best_res, mut best_pol, best_cost) = evaluate(hi)?;
            if best_cost > power.budget + 1e-8 {
                best_res.converged = false;
                return Ok((best_res, best_pol));
            }
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (lo + hi);
                let (res, pol, cost) = evaluate(mid)?;
                if cost > power.budget {
                    lo = mid;
                } else {
                    hi = mid;
                    best_res = res;
                    best_pol = pol;
                }
            }
            // Report the constrained value, not the Lagrangian.
            best_res.value_bits = di_cmi_sum(&best_pol, channel)?.total_bits / steps;
            Ok((best_res, best_pol))
        }
    }
}

fn best_of_two_starts(
    channel: &ForwardChannel,
    cfg: &SolverConfig,
    s_cost: f64,
) -> Result<(SolveResult, InputPolicy)> {
    best_of_two_starts_power(channel, cfg, s_cost, &PowerSpec {
        costs: channel
            .spec()
            .x_sizes()
            .iter()
            .map(|&k| vec![0.0; k])
            .collect(),
        budget: 0.0,
    })
}

fn best_of_two_starts_power(
    channel: &ForwardChannel,
    cfg: &SolverConfig,
    s_cost: f64,
    power: &PowerSpec,
) -> Result<(SolveResult, InputPolicy)> {
    let spec = channel.spec();
    let uniform = InputPolicy::uniform(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random = random_policy(spec, &mut rng);
    let a = ascend(channel, uniform, cfg, s_cost, power)?;
    let b = ascend(channel, random, cfg, s_cost, power)?;
    Ok(if a.0.value_bits >= b.0.value_bits { a } else { b })
}

fn random_policy(spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> InputPolicy {
    let kernels = (0..=spec.horizon())
        .map(|i| {
            (0..spec.policy_history_len(i))
                .map(|_| {
                    let k = spec.x_sizes()[i];
                    let mut mass: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().ln()).collect();
                    let sum: f64 = mass.iter().sum();
                    mass.iter_mut().for_each(|m| *m /= sum);
                    Pmf::from_normalized(mass)
                })
                .collect()
        })
        .collect();
    InputPolicy::new(spec.clone(), kernels).expect("shape is correct by construction")
}

/// Coordinate ascent from one starting policy at a fixed cost multiplier.
/// The climbed objective is `(di − s·E[total cost]) / (n+1)`.
fn ascend(
    channel: &ForwardChannel,
    start: InputPolicy,
    cfg: &SolverConfig,
    s_cost: f64,
    power: &PowerSpec,
) -> Result<(SolveResult, InputPolicy)> {
    let steps = channel.spec().horizon() as f64 + 1.0;
    let objective = |policy: &InputPolicy| -> Result<f64> {
        let di = di_cmi_sum(policy, channel)?.total_bits;
        let cost = if s_cost > 0.0 {
            average_cost(policy, channel, power)? * steps
        } else {
            0.0
        };
        Ok((di - s_cost * cost) / steps)
    };

    let mut policy = start;
    let mut current = objective(&policy)?;
    let mut trace = vec![current];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        policy = policy_sweep(channel, &policy, s_cost, power)?;
        let next = objective(&policy)?;
        iterations += 1;
        assert!(
            next >= current - 1e-9,
            "objective decreased: {current} -> {next}"
        );
        trace.push(next);
        let done = (next - current).abs() <= cfg.rel_tol * next.abs().max(1.0);
        current = next;
        if done {
            converged = true;
            break;
        }
    }
    Ok((
        SolveResult {
            value_bits: current,
            iterations,
            converged,
            trace,
        },
        policy,
    ))
}

/// One exact maximization of the frozen-reference objective over all
/// policy kernels: a backward sweep assigning every row the exponential
/// weighting of its expected continuation value.
///
/// The terminal value is `log2` of the Bayes reverse conditional of the
/// current iterate (uniform where the current output marginal vanishes),
/// which is exactly what the closed-form reverse decomposition of the
/// iterate evaluates to cellwise.
fn policy_sweep(
    channel: &ForwardChannel,
    policy: &InputPolicy,
    s_cost: f64,
    power: &PowerSpec,
) -> Result<InputPolicy> {
    let spec = channel.spec().clone();
    let n = spec.horizon();
    let joint = compose_joint(policy, channel)?;
    let nu = joint.marginal_y();
    let ny = spec.y_block_len();
    let x_block = spec.x_block_len();

    // Terminal values on the interleaved full-history index.
    let mut value = vec![f64::NEG_INFINITY; spec.joint_len()];
    let mut xd = vec![0usize; n + 1];
    let mut yd = vec![0usize; n + 1];
    for x_idx in 0..x_block {
        radix::unpack(x_idx, spec.x_sizes(), &mut xd);
        for y_idx in 0..ny {
            radix::unpack(y_idx, spec.y_sizes(), &mut yd);
            let mut h = 0usize;
            for i in 0..=n {
                h = (h * spec.x_sizes()[i] + xd[i]) * spec.y_sizes()[i] + yd[i];
            }
            let m = joint.get(x_idx, y_idx);
            value[h] = if m > 0.0 {
                (m / nu.get(y_idx)).log2()
            } else if nu.get(y_idx) == 0.0 {
                -((x_block as f64).log2())
            } else {
                f64::NEG_INFINITY
            };
        }
    }

    let mut kernels: Vec<Vec<Pmf>> = vec![Vec::new(); n + 1];
    for i in (0..=n).rev() {
        let xs = spec.x_sizes()[i];
        let ys = spec.y_sizes()[i];
        let h_len = spec.policy_history_len(i);
        let mut level = vec![f64::NEG_INFINITY; h_len];
        let mut rows = Vec::with_capacity(h_len);
        for (h, slot) in level.iter_mut().enumerate() {
            let mut weights = vec![f64::NEG_INFINITY; xs];
            for (x_i, w) in weights.iter_mut().enumerate() {
                let q_row = channel.kernel_row(i, h * xs + x_i).mass();
                let mut acc = 0.0;
                let mut dead = false;
                for (y_i, &q) in q_row.iter().enumerate() {
                    if q == 0.0 {
                        continue;
                    }
                    let child = value[(h * xs + x_i) * ys + y_i];
                    if child == f64::NEG_INFINITY {
                        dead = true;
                        break;
                    }
                    acc += q * child;
                }
                if !dead {
                    *w = acc - s_cost * power.costs[i][x_i];
                }
            }
            let peak = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if peak == f64::NEG_INFINITY {
                rows.push(Pmf::uniform(xs));
                continue;
            }
            let mut row: Vec<f64> = weights.iter().map(|&w| (w - peak).exp2()).collect();
            let z: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= z);
            rows.push(Pmf::from_normalized(row));
            *slot = peak + z.log2();
        }
        kernels[i] = rows;
        value = level;
    }
    InputPolicy::new(spec, kernels)
}

/// `E[Σ_i c_i(X_i)] / (n+1)` under the joint measure of `(policy, channel)`.
fn average_cost(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    power: &PowerSpec,
) -> Result<f64> {
    let spec = policy.spec();
    let joint = compose_joint(policy, channel)?;
    let mu = joint.marginal_x();
    let mut xd = vec![0usize; spec.horizon() + 1];
    let mut total = 0.0;
    for (x_idx, &m) in mu.mass().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        radix::unpack(x_idx, spec.x_sizes(), &mut xd);
        let path_cost: f64 = (0..=spec.horizon()).map(|i| power.costs[i][xd[i]]).sum();
        total += m * path_cost;
    }
    Ok(total / (spec.horizon() as f64 + 1.0))
}

// ---------------------------------------------------------------------------
// Nonanticipative rate distortion
// ---------------------------------------------------------------------------

/// Minimizes `I(X^n → Y^n) / (n+1)` over reproduction kernels subject to
/// the average distortion budget. The source must be output-blind
/// (`p_i(x_i; x^{i-1})`); policies that react to past outputs are
/// rejected. Returns the rate, the argmin channel, and the final inner
/// Lagrangian trace.
pub fn nrdf(
    source: &InputPolicy,
    dist: &DistortionSpec,
    cfg: &SolverConfig,
) -> Result<(SolveResult, ForwardChannel)> {
    cfg.validate()?;
    if !source.is_output_blind() {
        return Err(Error::SourceDependsOnOutput);
    }
    let spec = source.spec().clone();
    let steps = spec.horizon() as f64 + 1.0;

    // Minimum achievable average distortion: reproduce each source letter
    // by its cheapest output symbol.
    let min_dist = minimum_distortion(source, dist)?;
    if dist.budget < min_dist - 1e-12 {
        return Err(Error::InfeasibleDistortion {
            budget: dist.budget,
            minimum: min_dist,
        });
    }

    let solve = |s: f64| rd_inner_solve(source, dist, cfg, s);
    let (res0, q0, dist0) = solve(0.0)?;
    if dist0 <= dist.budget + 1e-8 {
        let value = di_cmi_sum(source, &q0)?.total_bits / steps;
        return Ok((
            SolveResult {
                value_bits: value,
                ..res0
            },
            q0,
        ));
    }
    let mut lo = 0.0;
    let mut hi = MULTIPLIER_MAX;
    let (mut best_res, mut best_q, best_dist) = solve(hi)?;
    if best_dist > dist.budget + 1e-8 {
        best_res.converged = false;
        best_res.value_bits = di_cmi_sum(source, &best_q)?.total_bits / steps;
        return Ok((best_res, best_q));
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let (res, q, d) = solve(mid)?;
        if d > dist.budget {
            lo = mid;
        } else {
            hi = mid;
            best_res = res;
            best_q = q;
        }
    }
    best_res.value_bits = di_cmi_sum(source, &best_q)?.total_bits / steps;
    Ok((best_res, best_q))
}

fn minimum_distortion(source: &InputPolicy, dist: &DistortionSpec) -> Result<f64> {
    let spec = source.spec();
    let n = spec.horizon();
    // Source step marginals over x_i, from the x-chain alone.
    let any_channel = ForwardChannel::uniform(spec);
    let joint = compose_joint(source, &any_channel)?;
    let mu = joint.marginal_x();
    let mut xd = vec![0usize; n + 1];
    let mut per_step = vec![vec![0.0; 0]; n + 1];
    for i in 0..=n {
        per_step[i] = vec![0.0; spec.x_sizes()[i]];
    }
    for (x_idx, &m) in mu.mass().iter().enumerate() {
        radix::unpack(x_idx, spec.x_sizes(), &mut xd);
        for i in 0..=n {
            per_step[i][xd[i]] += m;
        }
    }
    let mut total = 0.0;
    for i in 0..=n {
        let ys = spec.y_sizes()[i];
        for (x, &w) in per_step[i].iter().enumerate() {
            let best = (0..ys)
                .map(|y| dist.d(i, x, y, ys))
                .fold(f64::INFINITY, f64::min);
            total += w * best;
        }
    }
    Ok(total / (n as f64 + 1.0))
}

/// Alternating minimization of `D(P⊗Q ‖ P⊗ν̄) + s·E[Σ d_i]` for a fixed
/// multiplier: closed-form ν̄ update, then an exact backward soft-min
/// sweep over reproduction rows. Returns the converged channel and its
/// achieved average distortion.
fn rd_inner_solve(
    source: &InputPolicy,
    dist: &DistortionSpec,
    cfg: &SolverConfig,
    s: f64,
) -> Result<(SolveResult, ForwardChannel, f64)> {
    let spec = source.spec().clone();
    let steps = spec.horizon() as f64 + 1.0;
    let mut channel = ForwardChannel::uniform(&spec);
    let mut previous = f64::INFINITY;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        let joint = compose_joint(source, &channel)?;
        let nu_steps = joint.chain_marginals().y_steps().to_vec();
        let (next_channel, lagrangian) = channel_sweep(source, dist, &nu_steps, s)?;
        channel = next_channel;
        iterations += 1;
        let value = lagrangian / steps;
        assert!(
            value <= previous + 1e-9,
            "objective increased: {previous} -> {value}"
        );
        trace.push(value);
        let done =
            previous.is_finite() && (previous - value).abs() <= cfg.rel_tol * value.abs().max(1.0);
        previous = value;
        if done {
            converged = true;
            break;
        }
    }
    let achieved = average_distortion(source, &channel, dist)?;
    Ok((
        SolveResult {
            value_bits: previous,
            iterations,
            converged,
            trace,
        },
        channel,
        achieved,
    ))
}

/// Exact minimizer of the frozen-reference Lagrangian over all
/// reproduction kernels: backward sweep where each row is the reference
/// row tilted by `2^{-s·d_i - continuation}`. Returns the new channel and
/// the attained Lagrangian value (total bits, unnormalized).
fn channel_sweep(
    source: &InputPolicy,
    dist: &DistortionSpec,
    nu_steps: &[Vec<Pmf>],
    s: f64,
) -> Result<(ForwardChannel, f64)> {
    let spec = source.spec().clone();
    let n = spec.horizon();

    // Values are kept on (x^i, y^{i-1}) pairs, x-prefix major.
    let mut kernels: Vec<Vec<Pmf>> = vec![Vec::new(); n + 1];
    // continuation[(x^i, y^i)] after the step-i row choice.
    let mut continuation: Vec<f64> = Vec::new();
    for i in (0..=n).rev() {
        let xs_sizes: Vec<usize> = spec.x_sizes()[..=i].to_vec();
        let x_len = radix::space_len(&xs_sizes);
        let y_pref_len: usize = spec.y_sizes()[..i].iter().product();
        let ys = spec.y_sizes()[i];
        let mut level = vec![0.0; x_len * y_pref_len];
        let mut rows = vec![Pmf::uniform(ys); spec.channel_history_len(i)];
        let mut xd = vec![0usize; i + 1];
        let mut yd = vec![0usize; i];
        for xp in 0..x_len {
            radix::unpack(xp, &xs_sizes, &mut xd);
            for yp in 0..y_pref_len {
                radix::unpack(yp, &spec.y_sizes()[..i], &mut yd);
                let nu_row = nu_steps[i][yp].mass();
                // Exponent of each candidate output symbol.
                let mut exponent = vec![f64::INFINITY; ys];
                for (y_i, e) in exponent.iter_mut().enumerate() {
                    if nu_row[y_i] == 0.0 {
                        continue;
                    }
                    let future = if i < n {
                        // Average the child value over the next source letter.
                        let mut acc = 0.0;
                        let x_next_h = source_history_index(&spec, i + 1, &xd, &yd, y_i);
                        let p_next = source.kernel_row(i + 1, x_next_h).mass();
                        for (x_next, &p) in p_next.iter().enumerate() {
                            if p == 0.0 {
                                continue;
                            }
                            let child_x = xp * spec.x_sizes()[i + 1] + x_next;
                            let child_y = yp * ys + y_i;
                            acc += p * continuation[child_x * child_y_len(&spec, i) + child_y];
                        }
                        acc
                    } else {
                        0.0
                    };
                    *e = s * dist.d(i, xd[i], y_i, ys) + future;
                }
                // Soft-min with a shift for safety.
                let shift = exponent
                    .iter()
                    .zip(nu_row)
                    .filter(|(_, &nu)| nu > 0.0)
                    .map(|(&e, _)| e)
                    .fold(f64::INFINITY, f64::min);
                let mut mass = vec![0.0; ys];
                let mut z = 0.0;
                for y_i in 0..ys {
                    if nu_row[y_i] > 0.0 {
                        let v = nu_row[y_i] * (-(exponent[y_i] - shift)).exp2();
                        mass[y_i] = v;
                        z += v;
                    }
                }
                mass.iter_mut().for_each(|m| *m /= z);
                let h = spec.channel_history_index(i, &xd, &yd);
                rows[h] = Pmf::from_normalized(mass);
                level[xp * y_pref_len + yp] = shift - z.log2();
            }
        }
        kernels[i] = rows;
        continuation = level;
    }
    // Lagrangian value: expectation of the root values over the first
    // source letter.
    let p0 = source.kernel_row(0, 0).mass();
    let value: f64 = p0
        .iter()
        .enumerate()
        .map(|(x0, &p)| p * continuation[x0])
        .sum();
    Ok((ForwardChannel::new(spec, kernels)?, value))
}

/// Length of the `(y^i)` axis of the continuation table built at level
/// `i + 1`.
fn child_y_len(spec: &InstanceSpec, i: usize) -> usize {
    spec.y_sizes()[..=i].iter().product()
}

/// History index of the step-`i+1` source kernel given the interleaved
/// digits through step `i` (source kernels ignore y, but the policy layout
/// still indexes them by the full interleaved history).
fn source_history_index(
    spec: &InstanceSpec,
    i_next: usize,
    xd: &[usize],
    yd: &[usize],
    y_i: usize,
) -> usize {
    let mut h = 0;
    for j in 0..i_next {
        let y_j = if j < yd.len() { yd[j] } else { y_i };
        h = (h * spec.x_sizes()[j] + xd[j]) * spec.y_sizes()[j] + y_j;
    }
    h
}

/// `E[Σ_i d_i(X_i, Y_i)] / (n+1)` under the joint of `(source, channel)`.
fn average_distortion(
    source: &InputPolicy,
    channel: &ForwardChannel,
    dist: &DistortionSpec,
) -> Result<f64> {
    let spec = source.spec();
    let n = spec.horizon();
    let joint = compose_joint(source, channel)?;
    let ny = spec.y_block_len();
    let mut xd = vec![0usize; n + 1];
    let mut yd = vec![0usize; n + 1];
    let mut total = 0.0;
    for (idx, &m) in joint.table().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        radix::unpack(idx / ny, spec.x_sizes(), &mut xd);
        radix::unpack(idx % ny, spec.y_sizes(), &mut yd);
        let d: f64 = (0..=n)
            .map(|i| dist.d(i, xd[i], yd[i], spec.y_sizes()[i]))
            .sum();
        total += m * d;
    }
    Ok(total / (n as f64 + 1.0))
}

// ---------------------------------------------------------------------------
// Grid oracles
// ---------------------------------------------------------------------------

/// All pmfs over `k` symbols whose masses are multiples of `1/m`.
fn simplex_grid(m: usize, k: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; k];
    fill_compositions(m, 0, &mut current, &mut out);
    out.iter()
        .map(|c| c.iter().map(|&v| v as f64 / m as f64).collect())
        .collect()
}

fn fill_compositions(rest: usize, slot: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slot == current.len() - 1 {
        current[slot] = rest;
        out.push(current.clone());
        return;
    }
    for v in 0..=rest {
        current[slot] = v;
        fill_compositions(rest - v, slot + 1, current, out);
    }
}

/// Exhaustive maximization of per-symbol directed information over
/// policies whose kernel rows live on the simplex grid with step `1/m`.
///
/// The enumeration is organized along the output tree: at each output
/// history the rows feeding that history are enumerated jointly (they
/// interact only through the one-step output marginal) and the children
/// are solved recursively, which is exactly the maximum over the full
/// product grid. Errors out if the work would exceed the oracle budget.
pub fn brute_force_capacity(channel: &ForwardChannel, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::BadSolverConfig(
            "grid resolution must be at least 2".into(),
        ));
    }
    let spec = channel.spec().clone();
    let grids: Vec<Vec<Vec<f64>>> = (0..=spec.horizon())
        .map(|i| simplex_grid(m, spec.x_sizes()[i]))
        .collect();
    let mut counter = 0u64;
    let root_belief = vec![1.0];
    let value = capacity_branch(
        channel,
        &grids,
        0,
        &mut Vec::new(),
        &root_belief,
        &mut counter,
    )?;
    Ok(value / (spec.horizon() as f64 + 1.0))
}

/// Max over grid rows at one output-history node of the conditional
/// directed information accumulated from step `i` onward. `belief` is the
/// conditional law of `x^{i-1}` given the branch's `y^{i-1}`.
fn capacity_branch(
    channel: &ForwardChannel,
    grids: &[Vec<Vec<f64>>],
    i: usize,
    yd: &mut Vec<usize>,
    belief: &[f64],
    counter: &mut u64,
) -> Result<f64> {
    let spec = channel.spec();
    let n = spec.horizon();
    let xs = spec.x_sizes()[i];
    let ys = spec.y_sizes()[i];
    let x_pref_sizes: Vec<usize> = spec.x_sizes()[..i].to_vec();
    let support: Vec<usize> = (0..belief.len()).filter(|&k| belief[k] > 0.0).collect();
    let options = &grids[i];
    let mut xd = vec![0usize; i + 1];

    // Per supported x-prefix and candidate x_i, the channel row over y_i.
    let mut q_rows: Vec<Vec<&[f64]>> = Vec::with_capacity(support.len());
    for &xp in &support {
        radix::unpack(xp, &x_pref_sizes, &mut xd[..i]);
        let mut per_x = Vec::with_capacity(xs);
        for x_i in 0..xs {
            xd[i] = x_i;
            let h = spec.channel_history_index(i, &xd, yd);
            per_x.push(channel.kernel_row(i, h).mass());
        }
        q_rows.push(per_x);
    }

    let mut assignment = vec![0usize; support.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        *counter += 1;
        if *counter > ORACLE_BUDGET {
            return Err(Error::GridTooLarge {
                candidates: *counter as u128,
                cap: ORACLE_BUDGET,
            });
        }
        // One-step output marginal at this node.
        let mut nu = vec![0.0; ys];
        for (k, &xp) in support.iter().enumerate() {
            let row = &options[assignment[k]];
            for x_i in 0..xs {
                let w = belief[xp] * row[x_i];
                if w == 0.0 {
                    continue;
                }
                for (y_i, &q) in q_rows[k][x_i].iter().enumerate() {
                    nu[y_i] += w * q;
                }
            }
        }
        // Conditional information term at this node.
        let mut term = 0.0;
        for (k, &xp) in support.iter().enumerate() {
            let row = &options[assignment[k]];
            for x_i in 0..xs {
                let w = belief[xp] * row[x_i];
                if w == 0.0 {
                    continue;
                }
                for (y_i, &q) in q_rows[k][x_i].iter().enumerate() {
                    if q > 0.0 {
                        term += w * q * (q / nu[y_i]).log2();
                    }
                }
            }
        }
        // Recurse into the children weighted by the output marginal.
        let mut value = term;
        if i < n {
            for y_i in 0..ys {
                if nu[y_i] == 0.0 {
                    continue;
                }
                let mut child_belief = vec![0.0; belief.len() * xs];
                for (k, &xp) in support.iter().enumerate() {
                    let row = &options[assignment[k]];
                    for x_i in 0..xs {
                        let w = belief[xp] * row[x_i] * q_rows[k][x_i][y_i];
                        if w > 0.0 {
                            child_belief[xp * xs + x_i] = w / nu[y_i];
                        }
                    }
                }
                yd.push(y_i);
                let child = capacity_branch(channel, grids, i + 1, yd, &child_belief, counter)?;
                yd.pop();
                value += nu[y_i] * child;
            }
        }
        if value > best {
            best = value;
        }
        // Odometer over the joint row assignment.
        let mut slot = 0;
        loop {
            if slot == assignment.len() {
                return Ok(best);
            }
            assignment[slot] += 1;
            if assignment[slot] < options.len() {
                break;
            }
            assignment[slot] = 0;
            slot += 1;
        }
    }
}

/// Exhaustive minimization of per-symbol directed information over
/// reproduction kernels on the simplex grid, keeping only candidates that
/// meet the distortion budget. Errors out if the full product grid
/// exceeds the oracle budget.
pub fn brute_force_nrdf(
    source: &InputPolicy,
    dist: &DistortionSpec,
    m: usize,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::BadSolverConfig(
            "grid resolution must be at least 2".into(),
        ));
    }
    if !source.is_output_blind() {
        return Err(Error::SourceDependsOnOutput);
    }
    let spec = source.spec().clone();
    let n = spec.horizon();
    let grids: Vec<Vec<Vec<f64>>> = (0..=n)
        .map(|i| simplex_grid(m, spec.y_sizes()[i]))
        .collect();

    // Row slots: one per (step, channel history).
    let slots: Vec<(usize, usize)> = (0..=n)
        .flat_map(|i| (0..spec.channel_history_len(i)).map(move |h| (i, h)))
        .collect();
    let mut candidates: u128 = 1;
    for &(i, _) in &slots {
        candidates = candidates.saturating_mul(grids[i].len() as u128);
    }
    if candidates > ORACLE_BUDGET as u128 {
        return Err(Error::GridTooLarge {
            candidates,
            cap: ORACLE_BUDGET,
        });
    }

    let mut assignment = vec![0usize; slots.len()];
    let mut best = f64::INFINITY;
    let mut feasible_seen = false;
    let mut min_dist_seen = f64::INFINITY;
    loop {
        let kernels: Vec<Vec<Pmf>> = (0..=n)
            .map(|i| {
                (0..spec.channel_history_len(i))
                    .map(|h| {
                        let slot = slots.iter().position(|&(si, sh)| si == i && sh == h).unwrap();
                        Pmf::from_normalized(grids[i][assignment[slot]].clone())
                    })
                    .collect()
            })
            .collect();
        let channel = ForwardChannel::new(spec.clone(), kernels)?;
        let achieved = average_distortion(source, &channel, dist)?;
        min_dist_seen = min_dist_seen.min(achieved);
        if achieved <= dist.budget + 1e-9 {
            feasible_seen = true;
            let di = di_cmi_sum(source, &channel)?.total_bits;
            if di < best {
                best = di;
            }
        }
        let mut slot = 0;
        loop {
            if slot == assignment.len() {
                if !feasible_seen {
                    return Err(Error::InfeasibleDistortion {
                        budget: dist.budget,
                        minimum: min_dist_seen,
                    });
                }
                return Ok(best / (n as f64 + 1.0));
            }
            assignment[slot] += 1;
            if assignment[slot] < grids[slots[slot].0].len() {
                break;
            }
            assignment[slot] = 0;
            slot += 1;
        }
    }
}
