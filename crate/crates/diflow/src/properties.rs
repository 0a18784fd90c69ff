//! Seeded randomized verification: convexity, continuity and bound
//! properties of directed information, run over sampled instances and
//! reported as pass/violation counts with margins.
//!
//! Margins are oriented so that nonnegative means the property holds;
//! a trial counts as a violation only when its margin falls below −1e-9,
//! which separates accumulated rounding from logic errors. Every report
//! is reproducible bit-exactly from its seed: each trial draws from its
//! own stream derived from `(seed, trial index)`.

use crate::directed_info::{di_abs, di_cmi_sum, ABS_GAP_BITS};
use crate::measures::{
    compose_joint, compose_tables, kl_slices, mix_conditional, ForwardChannel, InputPolicy,
    InstanceSpec, Pmf,
};
use crate::variational::{
    gap_a, lambda_max_deviation, objective_a, objective_b, optimal_nu,
    optimal_reverse_decomposition, reciprocity_check, ReverseDecomposition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Margin below which a trial counts as a violation.
pub const VIOLATION_MARGIN: f64 = -1e-9;

/// Probability that a sampled kernel row is a simplex vertex, so that
/// zero-mass histories get exercised.
const VERTEX_PROB: f64 = 0.2;

/// Shape bounds for the instance sampler.
#[derive(Debug, Clone, Copy)]
pub struct SamplerBounds {
    pub max_horizon: usize,
    pub min_alphabet: usize,
    pub max_alphabet: usize,
}

impl Default for SamplerBounds {
    fn default() -> Self {
        Self {
            max_horizon: 2,
            min_alphabet: 1,
            max_alphabet: 3,
        }
    }
}

/// Outcome of one randomized property suite.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub property_name: String,
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub seed: u64,
}

impl PropertyReport {
    fn new(name: &str, trials: usize, seed: u64) -> Self {
        Self {
            property_name: name.to_string(),
            trials,
            violations: 0,
            worst_margin: f64::INFINITY,
            seed,
        }
    }

    fn record(&mut self, margin: f64) {
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if margin < VIOLATION_MARGIN {
            self.violations += 1;
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Pmf {
    if len > 1 && rng.gen::<f64>() < VERTEX_PROB {
        return Pmf::point(len, rng.gen_range(0..len));
    }
    let mut mass: Vec<f64> = (0..len).map(|_| -rng.gen::<f64>().ln()).collect();
    let sum: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= sum);
    Pmf::new(mass).expect("sampled row is a valid pmf")
}

fn positive_row(rng: &mut ChaCha8Rng, len: usize) -> Pmf {
    let mut mass: Vec<f64> = (0..len).map(|_| -rng.gen::<f64>().ln()).collect();
    let sum: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= sum);
    Pmf::new(mass).expect("sampled row is a valid pmf")
}

pub fn sample_spec(rng: &mut ChaCha8Rng, bounds: &SamplerBounds) -> InstanceSpec {
    let n = rng.gen_range(0..=bounds.max_horizon);
    let sizes = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        (0..=n)
            .map(|_| rng.gen_range(bounds.min_alphabet..=bounds.max_alphabet))
            .collect()
    };
    InstanceSpec::new(n, sizes(rng), sizes(rng)).expect("bounded sizes fit the cap")
}

pub fn sample_policy(rng: &mut ChaCha8Rng, spec: &InstanceSpec) -> InputPolicy {
    let kernels = (0..=spec.horizon())
        .map(|i| {
            (0..spec.policy_history_len(i))
                .map(|_| random_row(rng, spec.x_sizes()[i]))
                .collect()
        })
        .collect();
    InputPolicy::new(spec.clone(), kernels).expect("sampled shape is valid")
}

pub fn sample_channel(rng: &mut ChaCha8Rng, spec: &InstanceSpec) -> ForwardChannel {
    let kernels = (0..=spec.horizon())
        .map(|i| {
            (0..spec.channel_history_len(i))
                .map(|_| random_row(rng, spec.y_sizes()[i]))
                .collect()
        })
        .collect();
    ForwardChannel::new(spec.clone(), kernels).expect("sampled shape is valid")
}

/// A full random instance: spec, policy and channel.
pub fn sample_instance(
    rng: &mut ChaCha8Rng,
    bounds: &SamplerBounds,
) -> (InstanceSpec, InputPolicy, ForwardChannel) {
    let spec = sample_spec(rng, bounds);
    let policy = sample_policy(rng, &spec);
    let channel = sample_channel(rng, &spec);
    (spec, policy, channel)
}

fn di(policy: &InputPolicy, channel: &ForwardChannel) -> f64 {
    di_cmi_sum(policy, channel)
        .expect("sampled operands share a spec")
        .total_bits
}

/// Convexity in the forward family: mixing expanded forward tables cannot
/// raise directed information above the chord.
pub fn check_convexity_in_q(bounds: &SamplerBounds, trials: usize, seed: u64) -> PropertyReport {
    let mut report = PropertyReport::new("convexity_in_q", trials, seed);
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let (spec, policy, q1) = sample_instance(&mut rng, bounds);
        let q2 = sample_channel(&mut rng, &spec);
        let lambda = rng.gen::<f64>();
        let mixed = mix_conditional(&q1.expand(), &q2.expand(), lambda)
            .expect("same spec and direction");
        let q_mix = ForwardChannel::factorize(&mixed).expect("mixture stays in the class");
        let chord = lambda * di(&policy, &q1) + (1.0 - lambda) * di(&policy, &q2);
        report.record(chord - di(&policy, &q_mix));
    }
    report
}

/// Strict convexity where the mixed forward measures genuinely differ:
/// when the two channel density ratios disagree on supported cells, the
/// chord must exceed the mixture by more than 1e-12. Margins here are
/// measured against that strictness threshold.
pub fn check_strict_convexity(bounds: &SamplerBounds, trials: usize, seed: u64) -> PropertyReport {
    let mut report = PropertyReport::new("strict_convexity_in_q", trials, seed);
    let bounds = SamplerBounds {
        min_alphabet: bounds.min_alphabet.max(2),
        ..*bounds
    };
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let spec = sample_spec(&mut rng, &bounds);
        let policy = sample_policy(&mut rng, &spec);
        let q1 = sample_channel(&mut rng, &spec);
        let q2 = sample_channel(&mut rng, &spec);
        let lambda = 0.1 + 0.8 * rng.gen::<f64>();
        let mixed = mix_conditional(&q1.expand(), &q2.expand(), lambda)
            .expect("same spec and direction");
        let q_mix = ForwardChannel::factorize(&mixed).expect("mixture stays in the class");

        // Equality in the log-sum step happens exactly when the two
        // density ratios Q^k / ν^k agree on the mixture's support; require
        // a clear disagreement carried by a cell that is fat under both
        // endpoint joints, otherwise the strict gap can be arbitrarily
        // small even though the tables differ.
        let ratio_gap = max_ratio_disagreement(&policy, &q1, &q2);
        if ratio_gap < 5e-2 {
            continue;
        }
        let chord = lambda * di(&policy, &q1) + (1.0 - lambda) * di(&policy, &q2);
        let gap = chord - di(&policy, &q_mix);
        report.record(gap - 1e-12);
    }
    report
}

fn max_ratio_disagreement(policy: &InputPolicy, q1: &ForwardChannel, q2: &ForwardChannel) -> f64 {
    let t1 = q1.expand();
    let t2 = q2.expand();
    let j1 = compose_joint(policy, q1).expect("shared spec");
    let j2 = compose_joint(policy, q2).expect("shared spec");
    let nu1 = j1.marginal_y();
    let nu2 = j2.marginal_y();
    let ny = policy.spec().y_block_len();
    let mut worst = 0.0f64;
    for idx in 0..j1.table().len() {
        if j1.table()[idx] <= 1e-2 || j2.table()[idx] <= 1e-2 {
            continue;
        }
        let (x, y) = (idx / ny, idx % ny);
        let r1 = t1.row(x).get(y) / nu1.get(y);
        let r2 = t2.row(x).get(y) / nu2.get(y);
        worst = worst.max((r1 - r2).abs());
    }
    worst
}

/// Concavity in the input family: mixing expanded causal tables cannot
/// drop directed information below the chord.
pub fn check_concavity_in_p(bounds: &SamplerBounds, trials: usize, seed: u64) -> PropertyReport {
    let mut report = PropertyReport::new("concavity_in_p", trials, seed);
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let (spec, p1, channel) = sample_instance(&mut rng, bounds);
        let p2 = sample_policy(&mut rng, &spec);
        let lambda = rng.gen::<f64>();
        let mixed = mix_conditional(&p1.expand(), &p2.expand(), lambda)
            .expect("same spec and direction");
        let p_mix = InputPolicy::factorize(&mixed).expect("mixture stays in the class");
        let chord = lambda * di(&p1, &channel) + (1.0 - lambda) * di(&p2, &channel);
        report.record(di(&p_mix, &channel) - chord);
    }
    report
}

const ALPHAS: [usize; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

/// Lower-semicontinuity shadow along mixture paths toward the uniform
/// channel. The value along `Q^α = (1-1/α)Q⁰ + (1/α)U` is convex in the
/// mixing weight and vanishes at the uniform endpoint, so it climbs back
/// to the limit monotonically from below. Three things are checked: no
/// path value overshoots the limit, the deficits `d⁰ − d_α` shrink
/// monotonically along the ladder, and the final deficit falls under an
/// absolute vanishing modulus.
///
/// On finite alphabets entrywise convergence of the tables forces full
/// continuity, so this suite can only confirm the liminf inequality; a
/// strict lower-semicontinuity jump has no finite witness.
pub fn check_semicontinuity_paths(
    bounds: &SamplerBounds,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut report = PropertyReport::new("semicontinuity_paths", trials, seed);
    // Deficit cap at the last rung. The path derivative is bounded by a
    // few bits plus the log factor from vanishing cells, so C/α with
    // C = 50 bits is loose but honest at desk-scale alphabets.
    let final_modulus = 50.0 * (1.0 + (*ALPHAS.last().unwrap() as f64).log2())
        / *ALPHAS.last().unwrap() as f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let (spec, policy, q0) = sample_instance(&mut rng, bounds);
        let q0_table = q0.expand();
        let uniform_table = ForwardChannel::uniform(&spec).expand();
        let d0 = di(&policy, &q0);
        let along: Vec<f64> = ALPHAS
            .iter()
            .map(|&alpha| {
                let mixed = mix_conditional(&q0_table, &uniform_table, 1.0 - 1.0 / alpha as f64)
                    .expect("same spec and direction");
                let q = ForwardChannel::factorize(&mixed).expect("mixture stays in the class");
                di(&policy, &q)
            })
            .collect();
        let mut margin = f64::INFINITY;
        let mut previous_deficit = f64::INFINITY;
        for &d_alpha in &along {
            // No overshoot of the limit value.
            margin = margin.min(d0 - d_alpha);
            // Deficits decay monotonically.
            let deficit = d0 - d_alpha;
            if previous_deficit.is_finite() {
                margin = margin.min(previous_deficit - deficit);
            }
            previous_deficit = deficit;
        }
        margin = margin.min(final_modulus - (d0 - along[along.len() - 1]));
        report.record(margin);
    }
    report
}

/// Continuity of composition along the same mixture paths: joint and
/// marginal max-norm deviations must decay like C/α with C measured at
/// the first step (they are exactly linear in 1/α).
pub fn check_composition_continuity(
    bounds: &SamplerBounds,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut report = PropertyReport::new("composition_continuity", trials, seed);
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let (spec, policy, q0) = sample_instance(&mut rng, bounds);
        let p_table = policy.expand();
        let q0_table = q0.expand();
        let uniform_table = ForwardChannel::uniform(&spec).expand();
        let j0 = compose_tables(&p_table, &q0_table).expect("matching tables");
        let deviations = |alpha: usize| -> (f64, f64, f64) {
            let mixed =
                mix_conditional(&q0_table, &uniform_table, 1.0 - 1.0 / alpha as f64).unwrap();
            let j = compose_tables(&p_table, &mixed).expect("matching tables");
            let joint_dev = j
                .table()
                .iter()
                .zip(j0.table())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let mx = j
                .marginal_x()
                .mass()
                .iter()
                .zip(j0.marginal_x().mass())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let my = j
                .marginal_y()
                .mass()
                .iter()
                .zip(j0.marginal_y().mass())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (joint_dev, mx, my)
        };
        let (dj2, dx2, dy2) = deviations(2);
        let (cj, cx, cy) = (2.0 * dj2, 2.0 * dx2, 2.0 * dy2);
        let mut margin = f64::INFINITY;
        let mut prev = f64::INFINITY;
        for &alpha in &ALPHAS {
            let (dj, dx, dy) = deviations(alpha);
            let a = alpha as f64;
            margin = margin.min(cj / a + 1e-12 - dj);
            margin = margin.min(cx / a + 1e-12 - dx);
            margin = margin.min(cy / a + 1e-12 - dy);
            // Deviations must shrink monotonically along the path.
            margin = margin.min(prev + 1e-12 - dj);
            prev = dj;
        }
        report.record(margin);
    }
    report
}

/// The absolute-log-ratio sandwich `di ≤ |di| ≤ di + 2/(e ln 2)`.
pub fn check_sandwich_bound(bounds: &SamplerBounds, trials: usize, seed: u64) -> PropertyReport {
    let mut report = PropertyReport::new("sandwich_bound", trials, seed);
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let (_, policy, channel) = sample_instance(&mut rng, bounds);
        let value = di(&policy, &channel);
        let abs = di_abs(&policy, &channel).expect("shared spec");
        let margin = (abs - value).min(value + ABS_GAP_BITS + 1e-10 - abs);
        report.record(margin);
    }
    report
}

/// Gap identities and achiever optimality of both variational bounds,
/// checked on random references and random reverse decompositions.
pub fn check_variational_identities(
    bounds: &SamplerBounds,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut report = PropertyReport::new("variational_identities", trials, seed);
    let tol = 1e-10;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let (spec, policy, channel) = sample_instance(&mut rng, bounds);
        let value = di(&policy, &channel);
        let mut margin = f64::INFINITY;

        // Part A: random strictly positive reference.
        let nu_bar = positive_row(&mut rng, spec.y_block_len());
        let upper = objective_a(&policy, &channel, &nu_bar).expect("shapes agree");
        let gap = gap_a(&policy, &channel, &nu_bar).expect("shapes agree");
        margin = margin.min(tol - (upper - value - gap).abs());
        margin = margin.min(upper - value);

        // Part A achiever.
        let nu = optimal_nu(&policy, &channel).expect("shared spec");
        let at_achiever = objective_a(&policy, &channel, &nu).expect("shapes agree");
        margin = margin.min(tol - (at_achiever - value).abs());

        // Part B: random strictly positive decomposition.
        let sr = random_positive_decomposition(&mut rng, &spec);
        let lower = objective_b(&policy, &channel, &sr).expect("shapes agree");
        let joint = compose_joint(&policy, &channel).expect("shared spec");
        let divergence = kl_slices(joint.table(), &sr.joint_table());
        margin = margin.min(tol - (lower - (value - divergence)).abs());
        margin = margin.min(value - lower);

        // Part B achiever: density ratio one, value attained, reciprocity.
        let best = optimal_reverse_decomposition(&policy, &channel).expect("shared spec");
        let at_best = objective_b(&policy, &channel, &best).expect("shapes agree");
        margin = margin.min(tol - (at_best - value).abs());
        let lambda_dev = lambda_max_deviation(&policy, &channel, &best).expect("shared spec");
        margin = margin.min(1e-12 - lambda_dev);
        let reciprocity = reciprocity_check(&policy, &channel, &best).expect("shared spec");
        margin = margin.min(tol - reciprocity.max_abs_deviation);

        report.record(margin);
    }
    report
}

fn random_positive_decomposition(
    rng: &mut ChaCha8Rng,
    spec: &InstanceSpec,
) -> ReverseDecomposition {
    let s = (0..=spec.horizon())
        .map(|i| {
            (0..spec.policy_history_len(i))
                .map(|_| positive_row(rng, spec.y_sizes()[i]))
                .collect()
        })
        .collect();
    let r = (0..=spec.horizon())
        .map(|i| {
            (0..spec.reverse_history_len(i))
                .map(|_| positive_row(rng, spec.x_sizes()[i]))
                .collect()
        })
        .collect();
    ReverseDecomposition::new(spec.clone(), s, r).expect("sampled shape is valid")
}

/// Runs every suite with the same trial count and seed.
pub fn run_all_checks(bounds: &SamplerBounds, trials: usize, seed: u64) -> Vec<PropertyReport> {
    vec![
        check_convexity_in_q(bounds, trials, seed),
        check_strict_convexity(bounds, trials, seed),
        check_concavity_in_p(bounds, trials, seed),
        check_semicontinuity_paths(bounds, trials, seed),
        check_composition_continuity(bounds, trials, seed),
        check_sandwich_bound(bounds, trials, seed),
        check_variational_identities(bounds, trials, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::kl_divergence;

    fn binary_spec(n: usize) -> InstanceSpec {
        InstanceSpec::new(n, vec![2; n + 1], vec![2; n + 1]).unwrap()
    }

    fn binary_entropy(p: f64) -> f64 {
        let mut h = 0.0;
        if p > 0.0 {
            h -= p * p.log2();
        }
        if p < 1.0 {
            h -= (1.0 - p) * (1.0 - p).log2();
        }
        h
    }

    #[test]
    fn convexity_hand_instance_bsc_pair() {
        // Mixing BSC(0.05) and BSC(0.45) at λ = 1/2 gives BSC(0.25); the
        // chord value is derived from binary entropies.
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let q1 = ForwardChannel::binary_symmetric(&spec, 0.05).unwrap();
        let q2 = ForwardChannel::binary_symmetric(&spec, 0.45).unwrap();
        let mixed = mix_conditional(&q1.expand(), &q2.expand(), 0.5).unwrap();
        let q_mix = ForwardChannel::factorize(&mixed).unwrap();
        let lhs = di(&policy, &q_mix);
        assert!((lhs - (1.0 - binary_entropy(0.25))).abs() < 1e-12);
        let chord =
            0.5 * (1.0 - binary_entropy(0.05)) + 0.5 * (1.0 - binary_entropy(0.45));
        assert!(lhs <= chord + 1e-12);
        assert!(chord - lhs > 0.1);
    }

    #[test]
    fn convexity_equal_channels_is_tight() {
        let spec = binary_spec(1);
        let policy = InputPolicy::uniform(&spec);
        let q = ForwardChannel::binary_symmetric(&spec, 0.2).unwrap();
        let mixed = mix_conditional(&q.expand(), &q.expand(), 0.3).unwrap();
        let q_mix = ForwardChannel::factorize(&mixed).unwrap();
        assert!((di(&policy, &q_mix) - di(&policy, &q)).abs() < 1e-12);
    }

    #[test]
    fn concavity_hand_instance() {
        // Brute-force evaluation of all three values for inputs (0.5, 0.5)
        // and (0.9, 0.1) through BSC(0.1), λ = 1/2.
        let spec = binary_spec(0);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let mk = |a: f64| {
            InputPolicy::new(spec.clone(), vec![vec![Pmf::new(vec![a, 1.0 - a]).unwrap()]])
                .unwrap()
        };
        let i = |a: f64| -> f64 {
            // I(X;Y) = H_b(output) − H_b(flip) for a BSC.
            binary_entropy(a * 0.9 + (1.0 - a) * 0.1) - binary_entropy(0.1)
        };
        let mixed = mix_conditional(&mk(0.5).expand(), &mk(0.9).expand(), 0.5).unwrap();
        let p_mix = InputPolicy::factorize(&mixed).unwrap();
        let got = di(&p_mix, &channel);
        assert!((got - i(0.7)).abs() < 1e-12);
        assert!(got >= 0.5 * i(0.5) + 0.5 * i(0.9) - 1e-12);
    }

    #[test]
    fn kernelwise_mixing_differs_from_measure_mixing() {
        // Mixing the expanded conditional measures is not the same
        // operation as mixing kernels stepwise; this instance separates
        // them.
        let spec = binary_spec(1);
        let mk = |a0: f64, a1: f64| {
            let p0 = vec![Pmf::new(vec![a0, 1.0 - a0]).unwrap()];
            let p1 = vec![Pmf::new(vec![a1, 1.0 - a1]).unwrap(); 4];
            InputPolicy::new(spec.clone(), vec![p0, p1]).unwrap()
        };
        let p1 = mk(0.9, 0.9);
        let p2 = mk(0.1, 0.1);
        let lambda = 0.5;
        let measure_mix =
            InputPolicy::factorize(&mix_conditional(&p1.expand(), &p2.expand(), lambda).unwrap())
                .unwrap();
        let kernel_mix = mk(0.5, 0.5);
        // The block tables differ: e.g. the (0,0) path mass.
        let a = measure_mix.expand();
        let b = kernel_mix.expand();
        let max_gap = a
            .rows()
            .iter()
            .zip(b.rows())
            .flat_map(|(ra, rb)| ra.mass().iter().zip(rb.mass()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        assert!(max_gap > 0.05, "tables should differ, max gap {max_gap}");
    }

    #[test]
    fn semicontinuity_constant_path_has_zero_modulus() {
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let q = ForwardChannel::uniform(&spec);
        let table = q.expand();
        for alpha in [2usize, 8, 1024] {
            let mixed = mix_conditional(&table, &table, 1.0 - 1.0 / alpha as f64).unwrap();
            let qa = ForwardChannel::factorize(&mixed).unwrap();
            assert!((di(&policy, &qa) - di(&policy, &q)).abs() < 1e-12);
        }
    }

    #[test]
    fn semicontinuity_noiseless_path_is_monotone_in_alpha() {
        // Path from the noiseless channel toward uniform noise passes
        // through BSC(1/(2α)); the value 1 − H_b(1/(2α)) climbs back to
        // one bit as α grows.
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let q0 = ForwardChannel::binary_symmetric(&spec, 0.0).unwrap();
        let uniform = ForwardChannel::uniform(&spec);
        let mut last = 0.0;
        for alpha in [2usize, 4, 8, 16, 1024] {
            let mixed = mix_conditional(
                &q0.expand(),
                &uniform.expand(),
                1.0 - 1.0 / alpha as f64,
            )
            .unwrap();
            let qa = ForwardChannel::factorize(&mixed).unwrap();
            let got = di(&policy, &qa);
            let want = 1.0 - binary_entropy(1.0 / (2.0 * alpha as f64));
            assert!((got - want).abs() < 1e-12);
            assert!(got >= last);
            last = got;
        }
    }

    #[test]
    fn composition_deviation_is_exactly_linear_in_path_parameter() {
        let mut rng = trial_rng(99, 0);
        let (spec, policy, q0) = sample_instance(&mut rng, &SamplerBounds::default());
        let p_table = policy.expand();
        let q0_table = q0.expand();
        let u_table = ForwardChannel::uniform(&spec).expand();
        let j0 = compose_tables(&p_table, &q0_table).unwrap();
        let ju = compose_tables(&p_table, &u_table).unwrap();
        let full_gap = j0
            .table()
            .iter()
            .zip(ju.table())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        for alpha in [2usize, 4, 64, 1024] {
            let mixed =
                mix_conditional(&q0_table, &u_table, 1.0 - 1.0 / alpha as f64).unwrap();
            let j = compose_tables(&p_table, &mixed).unwrap();
            let dev = j
                .table()
                .iter()
                .zip(j0.table())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!((dev - full_gap / alpha as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn suites_run_clean_on_a_small_batch() {
        let bounds = SamplerBounds::default();
        for report in run_all_checks(&bounds, 40, 2024) {
            assert_eq!(
                report.violations, 0,
                "{} worst margin {}",
                report.property_name, report.worst_margin
            );
        }
    }

    #[test]
    fn reports_are_reproducible_from_their_seed() {
        let bounds = SamplerBounds::default();
        let a = check_convexity_in_q(&bounds, 25, 7);
        let b = check_convexity_in_q(&bounds, 25, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn sandwich_trivial_and_derived_instances() {
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let independent = ForwardChannel::binary_symmetric(&spec, 0.5).unwrap();
        assert_eq!(di_abs(&policy, &independent).unwrap(), 0.0);

        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let value = di(&policy, &channel);
        let abs = di_abs(&policy, &channel).unwrap();
        assert!(value <= abs && abs <= value + ABS_GAP_BITS);
        assert!((value - 0.531) < 1e-3);
        assert!((abs - 0.9954) < 1e-3);
    }

    #[test]
    fn variational_identities_on_divergence_reference() {
        // Sanity-check the identity plumbing against kl_divergence on a
        // fixed instance rather than sampled ones.
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let nu_bar = Pmf::new(vec![0.25, 0.75]).unwrap();
        let value = di(&policy, &channel);
        let upper = objective_a(&policy, &channel, &nu_bar).unwrap();
        let nu = optimal_nu(&policy, &channel).unwrap();
        assert!((upper - value - kl_divergence(&nu, &nu_bar)).abs() < 1e-12);
    }
}
