//! Directed information computed by every equivalent route, so that
//! agreement between routes is itself a test.
//!
//! Three routes evaluate `I(X^n → Y^n)`:
//!
//! - [`di_cmi_sum`]: the sum of conditional mutual informations, each step
//!   an averaged kernel divergence `D(q_i ‖ ν_{i|i-1})`;
//! - [`di_divergence`]: one block relative entropy `D(P⊗Q ‖ Π→)`, with
//!   per-step terms recovered by telescoping prefix divergences;
//! - [`di_logratio`]: the expectation of `log(Q(y^n|x^n) / ν(y^n))`, with
//!   per-step terms from cumulative prefix log-ratios.
//!
//! [`di_reverse`] computes the feedback direction `I(X^n ← Y^n)`, and
//! [`mutual_information`] closes the conservation identity
//! `I(X^n; Y^n) = I(X^n → Y^n) + I(X^n ← Y^n)`.

use crate::measures::{
    compose_joint, kl_slices, pi_forward, ForwardChannel, InputPolicy, JointMeasure, Pmf,
};
use crate::radix;
use crate::{Error, Result};

/// Upper bound on `|I| − I`: `2 / (e ln 2)` bits.
pub const ABS_GAP_BITS: f64 = 2.0 / (std::f64::consts::E * std::f64::consts::LN_2);

/// Which computation path produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    CmiSum,
    Divergence,
    LogRatio,
    Reverse,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::CmiSum => "cmi_sum",
            Route::Divergence => "divergence",
            Route::LogRatio => "logratio",
            Route::Reverse => "reverse",
        }
    }
}

/// Total and per-step directed information in bits. For the forward routes
/// step `i` carries `I(X^i; Y_i | Y^{i-1})`; for [`di_reverse`] it carries
/// `I(Y^{i-1}; X_i | X^{i-1})`. The total equals the per-step sum within
/// 1e-10 whenever finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedInfoReport {
    pub total_bits: f64,
    pub per_step_bits: Vec<f64>,
    pub route: Route,
}

impl DirectedInfoReport {
    fn new(total_bits: f64, per_step_bits: Vec<f64>, route: Route) -> Self {
        debug_assert!(
            !total_bits.is_finite()
                || (total_bits - per_step_bits.iter().sum::<f64>()).abs() <= 1e-10,
            "per-step terms do not telescope to the total"
        );
        Self {
            total_bits,
            per_step_bits,
            route,
        }
    }
}

/// Directed information as the sum of per-step averaged divergences
/// `Σ_i E[ D(q_i(·; y^{i-1}, x^i) ‖ ν_{i|i-1}(·; y^{i-1})) ]`.
///
/// On finite alphabets `ν_{i|i-1}` dominates `q_i` on every history with
/// positive mass, so the result is finite for valid inputs.
pub fn di_cmi_sum(policy: &InputPolicy, channel: &ForwardChannel) -> Result<DirectedInfoReport> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec();
    let n = spec.horizon();
    let joint = compose_joint(policy, channel)?;
    let chains = joint.chain_marginals();
    let mut per_step = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let w = joint.prefix_marginal(i + 1, i);
        let x_pref_sizes: Vec<usize> = spec.x_sizes()[..=i].to_vec();
        let y_pref_sizes: Vec<usize> = spec.y_sizes()[..i].to_vec();
        let y_pref_len = radix::space_len(&y_pref_sizes);
        let mut xd = vec![0usize; i + 1];
        let mut yd = vec![0usize; i];
        let mut term = 0.0;
        for (idx, &mass) in w.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let xp = idx / y_pref_len;
            let yp = idx % y_pref_len;
            radix::unpack(xp, &x_pref_sizes, &mut xd);
            radix::unpack(yp, &y_pref_sizes, &mut yd);
            let h_q = spec.channel_history_index(i, &xd, &yd);
            let inner = kl_slices(
                channel.kernel_row(i, h_q).mass(),
                chains.y_row(i, yp).mass(),
            );
            debug_assert!(inner.is_finite(), "marginal fails to dominate the kernel");
            term += mass * inner;
        }
        per_step.push(term);
    }
    let total = per_step.iter().sum();
    Ok(DirectedInfoReport::new(total, per_step, Route::CmiSum))
}

/// Directed information as the relative entropy of the joint measure
/// against the product reference `Π→ = P ⊗ ν`. Per-step terms come from
/// telescoping the relative entropies of prefix marginals.
pub fn di_divergence(policy: &InputPolicy, channel: &ForwardChannel) -> Result<DirectedInfoReport> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let n = policy.spec().horizon();
    let joint = compose_joint(policy, channel)?;
    let reference = pi_forward(&policy.expand(), &joint.marginal_y())?;
    let total = kl_slices(joint.table(), reference.table());
    let mut per_step = Vec::with_capacity(n + 1);
    let mut previous = 0.0;
    for k in 0..=n {
        let jk = joint.prefix_marginal(k + 1, k + 1);
        let rk = reference.prefix_marginal(k + 1, k + 1);
        let dk = kl_slices(&jk, &rk);
        per_step.push(dk - previous);
        previous = dk;
    }
    Ok(DirectedInfoReport::new(total, per_step, Route::Divergence))
}

/// Directed information as `Σ_{x^n,y^n} P(x^n,y^n) log( Q(y^n|x^n) / ν(y^n) )`,
/// with zero-mass cells contributing 0. Per-step terms difference the same
/// functional evaluated on prefixes.
pub fn di_logratio(policy: &InputPolicy, channel: &ForwardChannel) -> Result<DirectedInfoReport> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec();
    let n = spec.horizon();
    let joint = compose_joint(policy, channel)?;
    let nu = joint.marginal_y();
    let forward = channel.expand();
    let ny = spec.y_block_len();
    let mut total = 0.0;
    for (idx, &m) in joint.table().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let q = forward.row(idx / ny).get(idx % ny);
        total += m * (q / nu.get(idx % ny)).log2();
    }

    let mut per_step = Vec::with_capacity(n + 1);
    let mut previous = 0.0;
    for k in 0..=n {
        let c_k = prefix_logratio(&joint, channel, &nu, k);
        per_step.push(c_k - previous);
        previous = c_k;
    }
    Ok(DirectedInfoReport::new(total, per_step, Route::LogRatio))
}

/// `Σ_{x^k,y^k} P_k log( Q_{0,k}(y^k|x^k) / ν_{0,k}(y^k) )` where the prefix
/// channel block is rebuilt directly from the kernels.
fn prefix_logratio(joint: &JointMeasure, channel: &ForwardChannel, nu: &Pmf, k: usize) -> f64 {
    let spec = joint.spec();
    let jk = joint.prefix_marginal(k + 1, k + 1);
    let x_sizes: Vec<usize> = spec.x_sizes()[..=k].to_vec();
    let y_sizes: Vec<usize> = spec.y_sizes()[..=k].to_vec();
    let y_pref_len = radix::space_len(&y_sizes);
    // Prefix output marginal ν_{0,k}.
    let y_tail: usize = spec.y_sizes()[k + 1..].iter().product();
    let mut nu_k = vec![0.0; y_pref_len];
    for (idx, &m) in nu.mass().iter().enumerate() {
        nu_k[idx / y_tail] += m;
    }
    let mut xd = vec![0usize; k + 1];
    let mut yd = vec![0usize; k + 1];
    let mut acc = 0.0;
    for (idx, &m) in jk.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let xp = idx / y_pref_len;
        let yp = idx % y_pref_len;
        radix::unpack(xp, &x_sizes, &mut xd);
        radix::unpack(yp, &y_sizes, &mut yd);
        let mut q_prod = 1.0;
        for i in 0..=k {
            let h = spec.channel_history_index(i, &xd, &yd);
            q_prod *= channel.kernel_row(i, h).get(yd[i]);
        }
        acc += m * (q_prod / nu_k[yp]).log2();
    }
    acc
}

/// Reverse (feedback) directed information
/// `I(X^n ← Y^n) = Σ_i I(Y^{i-1}; X_i | X^{i-1})`, evaluated as the
/// expectation of `log( P(x^n|y^{n-1}) / μ(x^n) )` over the joint of
/// `(X^n, Y^{n-1})`.
pub fn di_reverse(policy: &InputPolicy, channel: &ForwardChannel) -> Result<DirectedInfoReport> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec();
    let n = spec.horizon();
    let joint = compose_joint(policy, channel)?;
    let mu = joint.marginal_x();
    let causal = policy.expand();
    let chains = joint.chain_marginals();

    let w = joint.prefix_marginal(n + 1, n);
    let y_cond_len = spec.y_cond_len();
    let mut total = 0.0;
    for (idx, &m) in w.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let xp = idx / y_cond_len;
        let yp = idx % y_cond_len;
        total += m * (causal.row(yp).get(xp) / mu.get(xp)).log2();
    }

    let mut per_step = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let w_i = joint.prefix_marginal(i + 1, i);
        let x_pref_sizes: Vec<usize> = spec.x_sizes()[..=i].to_vec();
        let y_pref_sizes: Vec<usize> = spec.y_sizes()[..i].to_vec();
        let y_pref_len = radix::space_len(&y_pref_sizes);
        let mut xd = vec![0usize; i + 1];
        let mut yd = vec![0usize; i];
        let mut term = 0.0;
        for (idx, &m) in w_i.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let xp = idx / y_pref_len;
            let yp = idx % y_pref_len;
            radix::unpack(xp, &x_pref_sizes, &mut xd);
            radix::unpack(yp, &y_pref_sizes, &mut yd);
            let h = spec.policy_history_index(i, &xd, &yd);
            let p_i = policy.kernel_row(i, h).get(xd[i]);
            let x_parent = xp / spec.x_sizes()[i];
            let mu_i = chains.x_row(i, x_parent).get(xd[i]);
            term += m * (p_i / mu_i).log2();
        }
        per_step.push(term);
    }
    Ok(DirectedInfoReport::new(total, per_step, Route::Reverse))
}

/// Mutual information `I(X^n; Y^n)` of a joint measure, as the relative
/// entropy against the product of its marginals.
pub fn mutual_information(joint: &JointMeasure) -> f64 {
    let mu = joint.marginal_x();
    let nu = joint.marginal_y();
    let ny = joint.spec().y_block_len();
    let product: Vec<f64> = (0..joint.table().len())
        .map(|idx| mu.get(idx / ny) * nu.get(idx % ny))
        .collect();
    kl_slices(joint.table(), &product)
}

/// The absolute-log-ratio functional
/// `Σ P(x^n,y^n) · | log( Q(y^n|x^n) / ν(y^n) ) |`. Satisfies
/// `I ≤ |I| ≤ I + 2/(e ln 2)`.
pub fn di_abs(policy: &InputPolicy, channel: &ForwardChannel) -> Result<f64> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let joint = compose_joint(policy, channel)?;
    let nu = joint.marginal_y();
    let forward = channel.expand();
    let ny = policy.spec().y_block_len();
    let mut total = 0.0;
    for (idx, &m) in joint.table().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let q = forward.row(idx / ny).get(idx % ny);
        total += m * (q / nu.get(idx % ny)).log2().abs();
    }
    Ok(total)
}

/// Relative entropy of the joint against `Π→` restricted to a finite
/// partition of the joint index space: `Σ_A P(A) log( P(A) / Π→(A) )`,
/// with the conventions that a cell contributes 0 when `P(A) = 0` and +∞
/// when `P(A) > 0` but `Π→(A) = 0`.
///
/// The value increases under refinement and attains the block divergence at
/// the partition into singletons.
pub fn di_partition_sup(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    partition: &[Vec<usize>],
) -> Result<f64> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let len = policy.spec().joint_len();
    let mut seen = vec![false; len];
    for (c, cell) in partition.iter().enumerate() {
        for &idx in cell {
            if idx >= len {
                return Err(Error::BadPartition(format!(
                    "cell {c} references index {idx}, table has {len} cells"
                )));
            }
            if seen[idx] {
                return Err(Error::BadPartition(format!("index {idx} appears twice")));
            }
            seen[idx] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::BadPartition(format!("index {missing} not covered")));
    }

    let joint = compose_joint(policy, channel)?;
    let reference = pi_forward(&policy.expand(), &joint.marginal_y())?;
    let mut total = 0.0;
    for cell in partition {
        let p: f64 = cell.iter().map(|&i| joint.table()[i]).sum();
        if p == 0.0 {
            continue;
        }
        let q: f64 = cell.iter().map(|&i| reference.table()[i]).sum();
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += p * (p / q).log2();
    }
    Ok(total)
}
