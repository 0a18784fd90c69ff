//! Variational bounds on directed information and their closed-form
//! achievers.
//!
//! Directed information is the infimum over output reference measures of
//! one relative-entropy objective ([`objective_a`], minimized by the true
//! output marginal) and the supremum over reverse decompositions of
//! another ([`objective_b`], maximized by the Bayes decomposition
//! [`optimal_reverse_decomposition`]). Both carry exact gap identities:
//!
//! - `objective_a(ν̄) = di + D(ν ‖ ν̄)`;
//! - `objective_b(S,R) = di − D(P⊗Q ‖ S⊗R)`.
//!
//! The stepwise forms ([`objective_a_stepwise`], [`objective_b_stepwise`])
//! evaluate the same quantities kernel by kernel and agree with the block
//! forms. These bounds are what the alternating solvers in
//! [`crate::extremum`] climb.

use crate::measures::{
    compose_joint, kl_divergence, kl_slices, pi_forward, ForwardChannel, InputPolicy,
    InstanceSpec, Pmf,
};
use crate::radix;
use crate::{Error, Result};

/// An alternative factorization of a joint measure in which the output
/// kernel `s_i` must not see the current input and the input kernel `r_i`
/// may see the current output:
///
/// - `s_i(y_i; y^{i-1}, x^{i-1})`, one row per interleaved
///   `(x^{i-1}, y^{i-1})` history;
/// - `r_i(x_i; x^{i-1}, y^i)`, one row per interleaved history extended by
///   `y_i`.
///
/// Note the conditioning shapes differ from [`InputPolicy`] and
/// [`ForwardChannel`]: within a step the output comes first here.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseDecomposition {
    spec: InstanceSpec,
    s_kernels: Vec<Vec<Pmf>>,
    r_kernels: Vec<Vec<Pmf>>,
}

impl ReverseDecomposition {
    pub fn new(
        spec: InstanceSpec,
        s_kernels: Vec<Vec<Pmf>>,
        r_kernels: Vec<Vec<Pmf>>,
    ) -> Result<Self> {
        let n = spec.horizon();
        if s_kernels.len() != n + 1 || r_kernels.len() != n + 1 {
            return Err(Error::LengthMismatch {
                expected: n + 1,
                got: s_kernels.len().min(r_kernels.len()),
            });
        }
        for i in 0..=n {
            if s_kernels[i].len() != spec.policy_history_len(i) {
                return Err(Error::LengthMismatch {
                    expected: spec.policy_history_len(i),
                    got: s_kernels[i].len(),
                });
            }
            if r_kernels[i].len() != spec.reverse_history_len(i) {
                return Err(Error::LengthMismatch {
                    expected: spec.reverse_history_len(i),
                    got: r_kernels[i].len(),
                });
            }
            for row in &s_kernels[i] {
                if row.support_size() != spec.y_sizes()[i] {
                    return Err(Error::LengthMismatch {
                        expected: spec.y_sizes()[i],
                        got: row.support_size(),
                    });
                }
            }
            for row in &r_kernels[i] {
                if row.support_size() != spec.x_sizes()[i] {
                    return Err(Error::LengthMismatch {
                        expected: spec.x_sizes()[i],
                        got: row.support_size(),
                    });
                }
            }
        }
        Ok(Self {
            spec,
            s_kernels,
            r_kernels,
        })
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    /// `s_i(·; y^{i-1}, x^{i-1})` at the packed interleaved history.
    pub fn s_row(&self, i: usize, history: usize) -> &Pmf {
        &self.s_kernels[i][history]
    }

    /// `r_i(·; x^{i-1}, y^i)` at the packed interleaved history and current
    /// output symbol.
    pub fn r_row(&self, i: usize, history: usize, y_i: usize) -> &Pmf {
        &self.r_kernels[i][history * self.spec.y_sizes()[i] + y_i]
    }

    pub fn s_kernels(&self) -> &[Vec<Pmf>] {
        &self.s_kernels
    }

    pub fn r_kernels(&self) -> &[Vec<Pmf>] {
        &self.r_kernels
    }

    /// The joint table `(S ⊗ R)(x^n, y^n) = ∏_i s_i · r_i`, packed like a
    /// [`crate::measures::JointMeasure`].
    pub fn joint_table(&self) -> Vec<f64> {
        let spec = &self.spec;
        let n = spec.horizon();
        let ny = spec.y_block_len();
        let mut xd = vec![0usize; n + 1];
        let mut yd = vec![0usize; n + 1];
        let mut out = vec![0.0; spec.joint_len()];
        for x_idx in 0..spec.x_block_len() {
            radix::unpack(x_idx, spec.x_sizes(), &mut xd);
            for y_idx in 0..ny {
                radix::unpack(y_idx, spec.y_sizes(), &mut yd);
                let mut prod = 1.0;
                let mut h = 0usize;
                for i in 0..=n {
                    prod *= self.s_kernels[i][h].get(yd[i]);
                    if prod == 0.0 {
                        break;
                    }
                    prod *= self.r_kernels[i][h * spec.y_sizes()[i] + yd[i]].get(xd[i]);
                    if prod == 0.0 {
                        break;
                    }
                    h = (h * spec.x_sizes()[i] + xd[i]) * spec.y_sizes()[i] + yd[i];
                }
                out[x_idx * ny + y_idx] = prod;
            }
        }
        out
    }
}

/// Upper-bound objective `Σ P(x^n,y^n) log( Q(y^n|x^n) / ν̄(y^n) )` for an
/// arbitrary output reference `ν̄`. Returns +∞ when `ν̄` fails to dominate
/// the true output marginal on the support.
pub fn objective_a(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    nu_bar: &Pmf,
) -> Result<f64> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec();
    if nu_bar.support_size() != spec.y_block_len() {
        return Err(Error::LengthMismatch {
            expected: spec.y_block_len(),
            got: nu_bar.support_size(),
        });
    }
    let joint = compose_joint(policy, channel)?;
    let forward = channel.expand();
    let ny = spec.y_block_len();
    let mut total = 0.0;
    for (idx, &m) in joint.table().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let nb = nu_bar.get(idx % ny);
        if nb == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += m * (forward.row(idx / ny).get(idx % ny) / nb).log2();
    }
    Ok(total)
}

/// The minimizer of [`objective_a`]: the true output marginal of the
/// composed joint measure.
pub fn optimal_nu(policy: &InputPolicy, channel: &ForwardChannel) -> Result<Pmf> {
    Ok(compose_joint(policy, channel)?.marginal_y())
}

/// The excess of [`objective_a`] over directed information, which equals
/// `D(ν ‖ ν̄)` exactly. Returns the divergence term (possibly +∞).
pub fn gap_a(policy: &InputPolicy, channel: &ForwardChannel, nu_bar: &Pmf) -> Result<f64> {
    let nu = optimal_nu(policy, channel)?;
    if nu_bar.support_size() != nu.support_size() {
        return Err(Error::LengthMismatch {
            expected: nu.support_size(),
            got: nu_bar.support_size(),
        });
    }
    Ok(kl_divergence(&nu, nu_bar))
}

/// Stepwise form of the upper bound: `Σ_i E[ D(q_i ‖ ν̄_{i|i-1}) ]` for
/// arbitrary per-step output references `ν̄_{i|i-1}(·; y^{i-1})`, one row
/// per packed `y^{i-1}`. The achiever is the chain of true conditional
/// output marginals, which reproduces the per-step directed-information
/// terms.
pub fn objective_a_stepwise(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    nu_bar_steps: &[Vec<Pmf>],
) -> Result<f64> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec();
    let n = spec.horizon();
    if nu_bar_steps.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: nu_bar_steps.len(),
        });
    }
    for (i, step) in nu_bar_steps.iter().enumerate() {
        let rows: usize = spec.y_sizes()[..i].iter().product();
        if step.len() != rows {
            return Err(Error::LengthMismatch {
                expected: rows,
                got: step.len(),
            });
        }
        for row in step {
            if row.support_size() != spec.y_sizes()[i] {
                return Err(Error::LengthMismatch {
                    expected: spec.y_sizes()[i],
                    got: row.support_size(),
                });
            }
        }
    }
    let joint = compose_joint(policy, channel)?;
    let mut total = 0.0;
    for i in 0..=n {
        let w = joint.prefix_marginal(i + 1, i);
        let x_pref_sizes: Vec<usize> = spec.x_sizes()[..=i].to_vec();
        let y_pref_sizes: Vec<usize> = spec.y_sizes()[..i].to_vec();
        let y_pref_len = radix::space_len(&y_pref_sizes);
        let mut xd = vec![0usize; i + 1];
        let mut yd = vec![0usize; i];
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
                nu_bar_steps[i][yp].mass(),
            );
            if inner.is_infinite() {
                return Ok(f64::INFINITY);
            }
            total += mass * inner;
        }
    }
    Ok(total)
}

/// Lower-bound objective `Σ P(x^n,y^n) log( (S⊗R)(x^n,y^n) / Π→(x^n,y^n) )`
/// for an arbitrary reverse decomposition. Returns a −∞ sentinel when
/// `S⊗R` fails to dominate the joint measure, so optimizers can reject
/// such decompositions by comparison.
pub fn objective_b(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    sr: &ReverseDecomposition,
) -> Result<f64> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    if sr.spec() != policy.spec() {
        return Err(Error::SpecMismatch);
    }
    let joint = compose_joint(policy, channel)?;
    let reference = pi_forward(&policy.expand(), &joint.marginal_y())?;
    let sr_table = sr.joint_table();
    let mut total = 0.0;
    for (idx, &m) in joint.table().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        if sr_table[idx] == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += m * (sr_table[idx] / reference.table()[idx]).log2();
    }
    Ok(total)
}

/// The maximizer of [`objective_b`]: within each step, `s_i` is the
/// one-step output predictive `Σ_{x_i} p_i q_i` and `r_i` is the Bayes
/// posterior of `x_i` given `y_i`, so that `s_i ⊗ r_i = p_i ⊗ q_i`
/// cellwise and the decomposition reproduces the joint measure exactly.
pub fn optimal_reverse_decomposition(
    policy: &InputPolicy,
    channel: &ForwardChannel,
) -> Result<ReverseDecomposition> {
    if policy.spec() != channel.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec().clone();
    let n = spec.horizon();
    let mut s_kernels = Vec::with_capacity(n + 1);
    let mut r_kernels = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let xs = spec.x_sizes()[i];
        let ys = spec.y_sizes()[i];
        let h_len = spec.policy_history_len(i);
        let mut s_step = Vec::with_capacity(h_len);
        let mut r_step = Vec::with_capacity(h_len * ys);
        for h in 0..h_len {
            let p_row = policy.kernel_row(i, h).mass();
            let mut predictive = vec![0.0; ys];
            for x_i in 0..xs {
                let q_row = channel.kernel_row(i, h * xs + x_i).mass();
                for y_i in 0..ys {
                    predictive[y_i] += p_row[x_i] * q_row[y_i];
                }
            }
            for (y_i, &s_val) in predictive.iter().enumerate() {
                if s_val > 0.0 {
                    let posterior: Vec<f64> = (0..xs)
                        .map(|x_i| {
                            p_row[x_i] * channel.kernel_row(i, h * xs + x_i).get(y_i) / s_val
                        })
                        .collect();
                    r_step.push(Pmf::from_normalized(posterior));
                } else {
                    r_step.push(Pmf::uniform(xs));
                }
            }
            s_step.push(Pmf::from_normalized(predictive));
        }
        s_kernels.push(s_step);
        r_kernels.push(r_step);
    }
    ReverseDecomposition::new(spec, s_kernels, r_kernels)
}

/// Largest deviation of the per-step density ratio
/// `λ_i = (p_i ⊗ q_i) / (s_i ⊗ r_i)` from 1 over cells of positive joint
/// mass. Zero (to rounding) exactly when the decomposition attains
/// [`objective_b`]'s supremum.
pub fn lambda_max_deviation(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    sr: &ReverseDecomposition,
) -> Result<f64> {
    let (worst, _) = per_step_cell_scan(policy, channel, sr, |p, q, s, r| {
        if s * r == 0.0 {
            f64::INFINITY
        } else {
            (p * q / (s * r) - 1.0).abs()
        }
    })?;
    Ok(worst)
}

/// Outcome of checking the reciprocity identity
/// `q_i / s_i = r_i / p_i` on positive-mass cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocityReport {
    pub holds: bool,
    pub max_abs_deviation: f64,
    pub checked_cells: usize,
}

/// Verifies the reciprocity identity entrywise on positive-mass cells to
/// 1e-10: the output-side density ratio must invert the input-side one.
pub fn reciprocity_check(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    sr: &ReverseDecomposition,
) -> Result<ReciprocityReport> {
    let (max_dev, checked) = per_step_cell_scan(policy, channel, sr, |p, q, s, r| {
        if s == 0.0 || p == 0.0 {
            return f64::INFINITY;
        }
        q / s - r / p
    })?;
    Ok(ReciprocityReport {
        holds: max_dev <= 1e-10,
        max_abs_deviation: max_dev,
        checked_cells: checked,
    })
}

/// Scans positive-mass `(x^i, y^i)` cells for every step, feeding the
/// four kernel values `(p_i, q_i, s_i, r_i)` to `f` and returning the
/// largest `|f|` along with the number of cells visited.
fn per_step_cell_scan(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    sr: &ReverseDecomposition,
    mut f: impl FnMut(f64, f64, f64, f64) -> f64,
) -> Result<(f64, usize)> {
    if policy.spec() != channel.spec() || sr.spec() != policy.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec();
    let n = spec.horizon();
    let joint = compose_joint(policy, channel)?;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for i in 0..=n {
        let w = joint.prefix_marginal(i + 1, i + 1);
        let x_pref_sizes: Vec<usize> = spec.x_sizes()[..=i].to_vec();
        let y_pref_sizes: Vec<usize> = spec.y_sizes()[..=i].to_vec();
        let y_pref_len = radix::space_len(&y_pref_sizes);
        let mut xd = vec![0usize; i + 1];
        let mut yd = vec![0usize; i + 1];
        for (idx, &mass) in w.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            radix::unpack(idx / y_pref_len, &x_pref_sizes, &mut xd);
            radix::unpack(idx % y_pref_len, &y_pref_sizes, &mut yd);
            let h = spec.policy_history_index(i, &xd, &yd);
            let p = policy.kernel_row(i, h).get(xd[i]);
            let q = channel
                .kernel_row(i, h * spec.x_sizes()[i] + xd[i])
                .get(yd[i]);
            let s = sr.s_row(i, h).get(yd[i]);
            let r = sr.r_row(i, h, yd[i]).get(xd[i]);
            let v = f(p, q, s, r).abs();
            if v > worst {
                worst = v;
            }
            checked += 1;
        }
    }
    Ok((worst, checked))
}

/// Stepwise form of the lower bound:
/// `Σ_i E[ log( s_i ⊗ r_i / (p_i ⊗ ν_{i|i-1}) ) ]`, which telescopes to
/// [`objective_b`]. Returns the same −∞ sentinel on domination failure.
pub fn objective_b_stepwise(
    policy: &InputPolicy,
    channel: &ForwardChannel,
    sr: &ReverseDecomposition,
) -> Result<f64> {
    if policy.spec() != channel.spec() || sr.spec() != policy.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec();
    let n = spec.horizon();
    let joint = compose_joint(policy, channel)?;
    let chains = joint.chain_marginals();
    let mut total = 0.0;
    for i in 0..=n {
        let w = joint.prefix_marginal(i + 1, i + 1);
        let x_pref_sizes: Vec<usize> = spec.x_sizes()[..=i].to_vec();
        let y_pref_sizes: Vec<usize> = spec.y_sizes()[..=i].to_vec();
        let y_pref_len = radix::space_len(&y_pref_sizes);
        let mut xd = vec![0usize; i + 1];
        let mut yd = vec![0usize; i + 1];
        for (idx, &mass) in w.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            radix::unpack(idx / y_pref_len, &x_pref_sizes, &mut xd);
            radix::unpack(idx % y_pref_len, &y_pref_sizes, &mut yd);
            let h = spec.policy_history_index(i, &xd, &yd);
            let s = sr.s_row(i, h).get(yd[i]);
            let r = sr.r_row(i, h, yd[i]).get(xd[i]);
            if s * r == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            let p = policy.kernel_row(i, h).get(xd[i]);
            let y_parent = (idx % y_pref_len) / spec.y_sizes()[i];
            let nu_i = chains.y_row(i, y_parent).get(yd[i]);
            total += mass * (s * r / (p * nu_i)).log2();
        }
    }
    Ok(total)
}
