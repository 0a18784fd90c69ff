//! Exact representation and composition of causally conditioned
//! distributions on finite alphabets.
//!
//! A problem instance fixes a horizon `n` and per-step alphabet sizes for
//! the input process `X_0..X_n` and output process `Y_0..Y_n`, with the
//! time ordering `x_0, y_0, x_1, y_1, ...`. Conditional families come in
//! two interconvertible layouts:
//!
//! - per-step kernels: [`InputPolicy`] holds `p_i(x_i; x^{i-1}, y^{i-1})`,
//!   [`ForwardChannel`] holds `q_i(y_i; y^{i-1}, x^i)`;
//! - expanded blocks: [`ConditionalTable`] holds the full products
//!   `P(x^n | y^{n-1})` (one row per `y^{n-1}`) or `Q(y^n | x^n)` (one row
//!   per `x^n`).
//!
//! [`InputPolicy::expand`]/[`ForwardChannel::expand`] go from kernels to
//! blocks; [`InputPolicy::factorize`]/[`ForwardChannel::factorize`] recover
//! kernels by successive conditioning on prefixes. Composing a policy with
//! a channel yields the [`JointMeasure`] over `(x^n, y^n)`, from which
//! marginals, per-step chain marginals and the two product reference
//! measures ([`pi_forward`], [`pi_backward`]) are derived.
//!
//! ## Flattening conventions
//!
//! All tuples are packed mixed-radix with the earliest symbol most
//! significant. Kernel histories are packed in time order, interleaving x
//! and y: the history of `p_i` is `(x_0, y_0, ..., x_{i-1}, y_{i-1})`, the
//! history of `q_i` appends `x_i`. Conditional-table rows are indexed by
//! the conditioning tuple alone (`y^{n-1}` or `x^n`), and the joint table
//! is packed x-block major: `index = index(x^n) * |Y_{0,n}| + index(y^n)`.
//!
//! Kernels conditioned on a zero-mass history are set to uniform rows;
//! this convention never affects any computed functional.

use crate::radix;
use crate::{Error, Result};

/// Tolerance for accepting a row as normalized on ingestion. Rows whose
/// mass is within this distance of 1 are rescaled; anything further off is
/// rejected as malformed.
pub const INGEST_TOL: f64 = 1e-9;

/// Default cap on the number of cells in the joint table.
pub const DEFAULT_CELL_CAP: usize = 10_000_000;

/// Horizon plus per-step alphabet sizes; the index universe for everything
/// else in the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    horizon: usize,
    x_sizes: Vec<usize>,
    y_sizes: Vec<usize>,
}

impl InstanceSpec {
    /// Builds a spec for steps `0..=horizon`. Every size must be at least 1
    /// and the joint space must fit under [`DEFAULT_CELL_CAP`] cells.
    pub fn new(horizon: usize, x_sizes: Vec<usize>, y_sizes: Vec<usize>) -> Result<Self> {
        if x_sizes.len() != horizon + 1 {
            return Err(Error::LengthMismatch {
                expected: horizon + 1,
                got: x_sizes.len(),
            });
        }
        if y_sizes.len() != horizon + 1 {
            return Err(Error::LengthMismatch {
                expected: horizon + 1,
                got: y_sizes.len(),
            });
        }
        if x_sizes.iter().chain(&y_sizes).any(|&s| s == 0) {
            return Err(Error::EmptyAlphabet);
        }
        let mut cells: u128 = 1;
        for &s in x_sizes.iter().chain(&y_sizes) {
            cells = cells.saturating_mul(s as u128);
        }
        if cells > DEFAULT_CELL_CAP as u128 {
            return Err(Error::TableTooLarge {
                cells,
                cap: DEFAULT_CELL_CAP,
            });
        }
        Ok(Self {
            horizon,
            x_sizes,
            y_sizes,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_sizes(&self) -> &[usize] {
        &self.x_sizes
    }

    pub fn y_sizes(&self) -> &[usize] {
        &self.y_sizes
    }

    /// `|X_{0,n}|`, the number of full input paths.
    pub fn x_block_len(&self) -> usize {
        radix::space_len(&self.x_sizes)
    }

    /// `|Y_{0,n}|`, the number of full output paths.
    pub fn y_block_len(&self) -> usize {
        radix::space_len(&self.y_sizes)
    }

    /// Number of cells in the joint table.
    pub fn joint_len(&self) -> usize {
        self.x_block_len() * self.y_block_len()
    }

    /// `|Y_{0,n-1}|`, the conditioning-space cardinality of a causal-input
    /// table (1 when the horizon is 0).
    pub fn y_cond_len(&self) -> usize {
        radix::space_len(&self.y_sizes[..self.horizon])
    }

    /// Number of histories `(x^{i-1}, y^{i-1})` seen by the step-`i` input
    /// kernel.
    pub fn policy_history_len(&self, i: usize) -> usize {
        self.x_sizes[..i]
            .iter()
            .zip(&self.y_sizes[..i])
            .map(|(x, y)| x * y)
            .product()
    }

    /// Number of histories `(y^{i-1}, x^i)` seen by the step-`i` forward
    /// kernel.
    pub fn channel_history_len(&self, i: usize) -> usize {
        self.policy_history_len(i) * self.x_sizes[i]
    }

    /// Number of histories `(x^{i-1}, y^i)` seen by a step-`i` reverse
    /// kernel that observes the current output.
    pub fn reverse_history_len(&self, i: usize) -> usize {
        self.policy_history_len(i) * self.y_sizes[i]
    }

    /// Packs the interleaved history `(x_0, y_0, ..., x_{i-1}, y_{i-1})`.
    pub(crate) fn policy_history_index(&self, i: usize, xd: &[usize], yd: &[usize]) -> usize {
        let mut h = 0;
        for j in 0..i {
            h = (h * self.x_sizes[j] + xd[j]) * self.y_sizes[j] + yd[j];
        }
        h
    }

    /// Packs the interleaved history of `q_i`, i.e. the policy history
    /// followed by `x_i`.
    pub(crate) fn channel_history_index(&self, i: usize, xd: &[usize], yd: &[usize]) -> usize {
        self.policy_history_index(i, xd, yd) * self.x_sizes[i] + xd[i]
    }
}

/// A probability mass function over one finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
}

impl Pmf {
    /// Ingests raw mass. Entries must be finite and nonnegative; the total
    /// must be within [`INGEST_TOL`] of 1 and is rescaled to sum exactly.
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        for &m in &mass {
            if m < 0.0 || !m.is_finite() {
                return Err(Error::NegativeMass(m));
            }
        }
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() > INGEST_TOL {
            return Err(Error::NotNormalized(sum));
        }
        let mass = mass.into_iter().map(|m| m / sum).collect();
        Ok(Self { mass })
    }

    /// Wraps mass that is known to be normalized by construction.
    pub(crate) fn from_normalized(mass: Vec<f64>) -> Self {
        debug_assert!(
            (mass.iter().sum::<f64>() - 1.0).abs() < 1e-6,
            "mass not normalized: {}",
            mass.iter().sum::<f64>()
        );
        Self { mass }
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "empty support");
        Self {
            mass: vec![1.0 / len as f64; len],
        }
    }

    /// Point mass on `at`.
    pub fn point(len: usize, at: usize) -> Self {
        assert!(at < len, "atom outside support");
        let mut mass = vec![0.0; len];
        mass[at] = 1.0;
        Self { mass }
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, i: usize) -> f64 {
        self.mass[i]
    }
}

/// Relative entropy `D(p ‖ q)` in bits, with the conventions
/// `0·log(0/q) = 0` and `p > 0, q = 0 ⇒ +∞`. Infinity is a value, not an
/// error.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> f64 {
    assert_eq!(
        p.support_size(),
        q.support_size(),
        "divergence needs equal supports"
    );
    kl_slices(p.mass(), q.mass())
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            total += pi * (pi / qi).log2();
        }
    }
    total
}

/// Which conditioning a [`ConditionalTable`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Rows over `x^n`, one per `y^{n-1}`.
    CausalInput,
    /// Rows over `y^n`, one per `x^n`.
    Forward,
}

/// A fully expanded causally conditioned block: the product measure
/// `P(x^n | y^{n-1})` or `Q(y^n | x^n)` laid out row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    spec: InstanceSpec,
    direction: Direction,
    rows: Vec<Pmf>,
}

impl ConditionalTable {
    /// Builds a table from explicit rows, checking the row count and row
    /// supports against the spec.
    pub fn new(spec: InstanceSpec, direction: Direction, rows: Vec<Pmf>) -> Result<Self> {
        let (n_rows, row_len) = match direction {
            Direction::CausalInput => (spec.y_cond_len(), spec.x_block_len()),
            Direction::Forward => (spec.x_block_len(), spec.y_block_len()),
        };
        if rows.len() != n_rows {
            return Err(Error::LengthMismatch {
                expected: n_rows,
                got: rows.len(),
            });
        }
        for row in &rows {
            if row.support_size() != row_len {
                return Err(Error::LengthMismatch {
                    expected: row_len,
                    got: row.support_size(),
                });
            }
        }
        Ok(Self {
            spec,
            direction,
            rows,
        })
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    pub fn row(&self, h: usize) -> &Pmf {
        &self.rows[h]
    }

    /// Cardinality of the conditioning space (the row count).
    pub fn conditioning_len(&self) -> usize {
        self.rows.len()
    }
}

/// Rowwise convex mixture `λ·A + (1-λ)·B` of two conditional tables with
/// the same spec and direction. The class is closed under mixtures, so the
/// result is again a valid table.
pub fn mix_conditional(a: &ConditionalTable, b: &ConditionalTable, lambda: f64) -> Result<ConditionalTable> {
    if a.spec != b.spec {
        return Err(Error::SpecMismatch);
    }
    if a.direction != b.direction {
        return Err(Error::DirectionMismatch);
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::WeightOutOfRange(lambda));
    }
    let rows = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(ra, rb)| {
            let mass = ra
                .mass()
                .iter()
                .zip(rb.mass())
                .map(|(&ma, &mb)| lambda * ma + (1.0 - lambda) * mb)
                .collect();
            Pmf::from_normalized(mass)
        })
        .collect();
    Ok(ConditionalTable {
        spec: a.spec.clone(),
        direction: a.direction,
        rows,
    })
}

/// The family `p_i(x_i; x^{i-1}, y^{i-1})` selecting channel inputs from
/// past inputs and past outputs. `kernels[i]` holds one row per interleaved
/// history; step 0 has a single unconditional row.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPolicy {
    spec: InstanceSpec,
    kernels: Vec<Vec<Pmf>>,
}

impl InputPolicy {
    pub fn new(spec: InstanceSpec, kernels: Vec<Vec<Pmf>>) -> Result<Self> {
        check_kernel_shape(&kernels, spec.horizon, |i| spec.policy_history_len(i), |i| {
            spec.x_sizes[i]
        })?;
        Ok(Self { spec, kernels })
    }

    /// Uniform input at every step regardless of history.
    pub fn uniform(spec: &InstanceSpec) -> Self {
        let kernels = (0..=spec.horizon)
            .map(|i| vec![Pmf::uniform(spec.x_sizes[i]); spec.policy_history_len(i)])
            .collect();
        Self {
            spec: spec.clone(),
            kernels,
        }
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn kernels(&self) -> &[Vec<Pmf>] {
        &self.kernels
    }

    pub fn kernel_row(&self, i: usize, h: usize) -> &Pmf {
        &self.kernels[i][h]
    }

    /// True when no kernel row depends on the y part of its history, i.e.
    /// the policy is a plain source `p_i(x_i; x^{i-1})`.
    pub fn is_output_blind(&self) -> bool {
        let spec = &self.spec;
        for i in 0..=spec.horizon {
            let x_hist: Vec<usize> = spec.x_sizes[..i].to_vec();
            let mut xd = vec![0usize; i];
            let mut yd = vec![0usize; i];
            for xp in 0..radix::space_len(&x_hist) {
                radix::unpack(xp, &x_hist, &mut xd);
                let base = self.kernels[i][spec.policy_history_index(i, &xd, &yd)].mass();
                let y_hist: Vec<usize> = spec.y_sizes[..i].to_vec();
                for yp in 0..radix::space_len(&y_hist) {
                    radix::unpack(yp, &y_hist, &mut yd);
                    let row = self.kernels[i][spec.policy_history_index(i, &xd, &yd)].mass();
                    if row
                        .iter()
                        .zip(base)
                        .any(|(a, b)| (a - b).abs() > 1e-12)
                    {
                        return false;
                    }
                }
                yd.iter_mut().for_each(|d| *d = 0);
            }
        }
        true
    }

    /// Expands the kernel family into the block conditional table: for each
    /// `y^{n-1}`, `row(x^n) = ∏_i p_i(x_i; x^{i-1}, y^{i-1})`.
    pub fn expand(&self) -> ConditionalTable {
        let spec = &self.spec;
        let n = spec.horizon;
        let y_cond: Vec<usize> = spec.y_sizes[..n].to_vec();
        let mut yd = vec![0usize; n];
        let mut xd = vec![0usize; n + 1];
        let mut rows = Vec::with_capacity(spec.y_cond_len());
        for yrow in 0..spec.y_cond_len() {
            radix::unpack(yrow, &y_cond, &mut yd);
            let mut mass = vec![0.0; spec.x_block_len()];
            for (xi, cell) in mass.iter_mut().enumerate() {
                radix::unpack(xi, &spec.x_sizes, &mut xd);
                let mut prod = 1.0;
                let mut h = 0;
                for i in 0..=n {
                    prod *= self.kernels[i][h].get(xd[i]);
                    if prod == 0.0 {
                        break;
                    }
                    if i < n {
                        h = (h * spec.x_sizes[i] + xd[i]) * spec.y_sizes[i] + yd[i];
                    }
                }
                *cell = prod;
            }
            rows.push(Pmf::from_normalized(mass));
        }
        ConditionalTable {
            spec: spec.clone(),
            direction: Direction::CausalInput,
            rows,
        }
    }

    /// Recovers kernels from a causal-input table by Bayes' rule on
    /// prefixes. Histories carrying zero mass get uniform rows; re-expansion
    /// reproduces the table on all supported cells.
    pub fn factorize(table: &ConditionalTable) -> Result<Self> {
        if table.direction != Direction::CausalInput {
            return Err(Error::DirectionMismatch);
        }
        let spec = table.spec.clone();
        let n = spec.horizon;
        let y_hist_sizes = |i: usize| spec.y_sizes[..i].to_vec();
        let mut kernels: Vec<Vec<Pmf>> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let xs_i = spec.x_sizes[i];
            let mut step = vec![Pmf::uniform(xs_i); spec.policy_history_len(i)];
            let y_sizes_i = y_hist_sizes(i);
            let mut yd = vec![0usize; i];
            let x_pref_sizes: Vec<usize> = spec.x_sizes[..i].to_vec();
            let x_pref_len = radix::space_len(&x_pref_sizes);
            // Number of full paths extending a length-(i+1) x-prefix.
            let x_tail: usize = spec.x_sizes[i + 1..].iter().product();
            let mut xd = vec![0usize; i];
            for yp in 0..radix::space_len(&y_sizes_i) {
                radix::unpack(yp, &y_sizes_i, &mut yd);
                // Canonical extension of y^{i-1} to y^{n-1}: pad with 0s.
                let mut yrow = 0usize;
                for j in 0..n {
                    yrow = yrow * spec.y_sizes[j] + if j < i { yd[j] } else { 0 };
                }
                let row = table.rows[yrow].mass();
                // Prefix marginals over x^{i-1}·x_i via the block layout:
                // the prefix of x^n is its index divided by the tail count.
                let mut with_cur = vec![0.0; x_pref_len * xs_i];
                for (xi_full, &m) in row.iter().enumerate() {
                    with_cur[xi_full / x_tail] += m;
                }
                for xp in 0..x_pref_len {
                    radix::unpack(xp, &x_pref_sizes, &mut xd);
                    let h = spec.policy_history_index(i, &xd, &yd);
                    let num = &with_cur[xp * xs_i..(xp + 1) * xs_i];
                    let den: f64 = num.iter().sum();
                    if den > 0.0 {
                        step[h] = Pmf::from_normalized(num.iter().map(|&v| v / den).collect());
                    }
                }
            }
            kernels.push(step);
        }
        Ok(Self { spec, kernels })
    }
}

/// The family `q_i(y_i; y^{i-1}, x^i)` generating outputs causally from
/// past outputs and inputs up to the present.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardChannel {
    spec: InstanceSpec,
    kernels: Vec<Vec<Pmf>>,
}

impl ForwardChannel {
    pub fn new(spec: InstanceSpec, kernels: Vec<Vec<Pmf>>) -> Result<Self> {
        check_kernel_shape(&kernels, spec.horizon, |i| spec.channel_history_len(i), |i| {
            spec.y_sizes[i]
        })?;
        Ok(Self { spec, kernels })
    }

    /// Output uniform at every step regardless of history and input.
    pub fn uniform(spec: &InstanceSpec) -> Self {
        let kernels = (0..=spec.horizon)
            .map(|i| vec![Pmf::uniform(spec.y_sizes[i]); spec.channel_history_len(i)])
            .collect();
        Self {
            spec: spec.clone(),
            kernels,
        }
    }

    /// Memoryless binary symmetric channel flipping each input with
    /// probability `flip`. Requires binary alphabets at every step.
    pub fn binary_symmetric(spec: &InstanceSpec, flip: f64) -> Result<Self> {
        if spec.x_sizes.iter().chain(&spec.y_sizes).any(|&s| s != 2) {
            return Err(Error::EmptyAlphabet);
        }
        if !(0.0..=1.0).contains(&flip) {
            return Err(Error::WeightOutOfRange(flip));
        }
        let kernels = (0..=spec.horizon)
            .map(|i| {
                let h_len = spec.channel_history_len(i);
                (0..h_len)
                    .map(|h| {
                        let x_i = h % 2;
                        let mut mass = vec![flip; 2];
                        mass[x_i] = 1.0 - flip;
                        Pmf::from_normalized(mass)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            kernels,
        })
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn kernels(&self) -> &[Vec<Pmf>] {
        &self.kernels
    }

    pub fn kernel_row(&self, i: usize, h: usize) -> &Pmf {
        &self.kernels[i][h]
    }

    /// Expands the kernel family into the block conditional table: for each
    /// `x^n`, `row(y^n) = ∏_i q_i(y_i; y^{i-1}, x^i)`.
    pub fn expand(&self) -> ConditionalTable {
        let spec = &self.spec;
        let n = spec.horizon;
        let mut xd = vec![0usize; n + 1];
        let mut yd = vec![0usize; n + 1];
        let mut rows = Vec::with_capacity(spec.x_block_len());
        for xrow in 0..spec.x_block_len() {
            radix::unpack(xrow, &spec.x_sizes, &mut xd);
            let mut mass = vec![0.0; spec.y_block_len()];
            for (yi, cell) in mass.iter_mut().enumerate() {
                radix::unpack(yi, &spec.y_sizes, &mut yd);
                let mut prod = 1.0;
                let mut h = 0;
                for i in 0..=n {
                    prod *= self.kernels[i][h * spec.x_sizes[i] + xd[i]].get(yd[i]);
                    if prod == 0.0 {
                        break;
                    }
                    h = (h * spec.x_sizes[i] + xd[i]) * spec.y_sizes[i] + yd[i];
                }
                *cell = prod;
            }
            rows.push(Pmf::from_normalized(mass));
        }
        ConditionalTable {
            spec: spec.clone(),
            direction: Direction::Forward,
            rows,
        }
    }

    /// Recovers kernels from a forward table by Bayes' rule on prefixes,
    /// mirroring [`InputPolicy::factorize`].
    pub fn factorize(table: &ConditionalTable) -> Result<Self> {
        if table.direction != Direction::Forward {
            return Err(Error::DirectionMismatch);
        }
        let spec = table.spec.clone();
        let n = spec.horizon;
        let mut kernels: Vec<Vec<Pmf>> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let ys_i = spec.y_sizes[i];
            let mut step = vec![Pmf::uniform(ys_i); spec.channel_history_len(i)];
            let y_pref_sizes: Vec<usize> = spec.y_sizes[..i].to_vec();
            let y_pref_len = radix::space_len(&y_pref_sizes);
            let y_tail: usize = spec.y_sizes[i + 1..].iter().product();
            let x_cur_sizes: Vec<usize> = spec.x_sizes[..=i].to_vec();
            let mut xd_cur = vec![0usize; i + 1];
            let mut yd = vec![0usize; i];
            for xp in 0..radix::space_len(&x_cur_sizes) {
                radix::unpack(xp, &x_cur_sizes, &mut xd_cur);
                // Canonical extension of x^i to x^n: pad with 0s.
                let mut xrow = 0usize;
                for j in 0..=n {
                    xrow = xrow * spec.x_sizes[j] + if j <= i { xd_cur[j] } else { 0 };
                }
                let row = table.rows[xrow].mass();
                let mut with_cur = vec![0.0; y_pref_len * ys_i];
                for (yi_full, &m) in row.iter().enumerate() {
                    with_cur[yi_full / y_tail] += m;
                }
                for yp in 0..y_pref_len {
                    radix::unpack(yp, &y_pref_sizes, &mut yd);
                    let h = spec.channel_history_index(i, &xd_cur, &yd);
                    let num = &with_cur[yp * ys_i..(yp + 1) * ys_i];
                    let den: f64 = num.iter().sum();
                    if den > 0.0 {
                        step[h] = Pmf::from_normalized(num.iter().map(|&v| v / den).collect());
                    }
                }
            }
            kernels.push(step);
        }
        Ok(Self { spec, kernels })
    }
}

fn check_kernel_shape(
    kernels: &[Vec<Pmf>],
    horizon: usize,
    hist_len: impl Fn(usize) -> usize,
    row_len: impl Fn(usize) -> usize,
) -> Result<()> {
    if kernels.len() != horizon + 1 {
        return Err(Error::LengthMismatch {
            expected: horizon + 1,
            got: kernels.len(),
        });
    }
    for (i, step) in kernels.iter().enumerate() {
        if step.len() != hist_len(i) {
            return Err(Error::LengthMismatch {
                expected: hist_len(i),
                got: step.len(),
            });
        }
        for row in step {
            if row.support_size() != row_len(i) {
                return Err(Error::LengthMismatch {
                    expected: row_len(i),
                    got: row.support_size(),
                });
            }
        }
    }
    Ok(())
}

/// Exact probability table over `X_{0,n} × Y_{0,n}`, packed x-block major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMeasure {
    spec: InstanceSpec,
    table: Pmf,
}

impl JointMeasure {
    pub fn new(spec: InstanceSpec, table: Pmf) -> Result<Self> {
        if table.support_size() != spec.joint_len() {
            return Err(Error::LengthMismatch {
                expected: spec.joint_len(),
                got: table.support_size(),
            });
        }
        Ok(Self { spec, table })
    }

    pub(crate) fn from_normalized(spec: InstanceSpec, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), spec.joint_len());
        Self {
            spec,
            table: Pmf::from_normalized(mass),
        }
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn table(&self) -> &[f64] {
        self.table.mass()
    }

    pub fn get(&self, x_idx: usize, y_idx: usize) -> f64 {
        self.table.mass()[x_idx * self.spec.y_block_len() + y_idx]
    }

    /// Marginal on the input paths, `μ(x^n) = Σ_{y^n} P(x^n, y^n)`.
    pub fn marginal_x(&self) -> Pmf {
        let ny = self.spec.y_block_len();
        let mut mass = vec![0.0; self.spec.x_block_len()];
        for (idx, &m) in self.table.mass().iter().enumerate() {
            mass[idx / ny] += m;
        }
        Pmf::from_normalized(mass)
    }

    /// Marginal on the output paths, `ν(y^n) = Σ_{x^n} P(x^n, y^n)`.
    pub fn marginal_y(&self) -> Pmf {
        let ny = self.spec.y_block_len();
        let mut mass = vec![0.0; ny];
        for (idx, &m) in self.table.mass().iter().enumerate() {
            mass[idx % ny] += m;
        }
        Pmf::from_normalized(mass)
    }

    /// Per-step conditionals of both marginals, recovered by Bayes' rule on
    /// prefixes: `ν_{i|i-1}(y_i; y^{i-1})` and `μ_{i|i-1}(x_i; x^{i-1})`.
    /// Zero-mass conditioning histories yield uniform rows.
    pub fn chain_marginals(&self) -> ChainMarginals {
        let spec = &self.spec;
        ChainMarginals {
            x_steps: chain_steps(self.marginal_x().mass(), &spec.x_sizes),
            y_steps: chain_steps(self.marginal_y().mass(), &spec.y_sizes),
            spec: spec.clone(),
        }
    }

    /// Marginal of the joint on `(x^{a-1}, y^{b-1})`, i.e. on the first `a`
    /// input symbols and first `b` output symbols, packed x-prefix major.
    pub(crate) fn prefix_marginal(&self, a: usize, b: usize) -> Vec<f64> {
        let spec = &self.spec;
        let ny = spec.y_block_len();
        let x_tail: usize = spec.x_sizes[a..].iter().product();
        let y_tail: usize = spec.y_sizes[b..].iter().product();
        let y_pref_len: usize = radix::space_len(&spec.y_sizes[..b]);
        let mut out = vec![0.0; radix::space_len(&spec.x_sizes[..a]) * y_pref_len];
        for (idx, &m) in self.table.mass().iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let xp = (idx / ny) / x_tail;
            let yp = (idx % ny) / y_tail;
            out[xp * y_pref_len + yp] += m;
        }
        out
    }
}

fn chain_steps(block: &[f64], sizes: &[usize]) -> Vec<Vec<Pmf>> {
    let n_steps = sizes.len();
    let mut steps = Vec::with_capacity(n_steps);
    for i in 0..n_steps {
        let pref_len: usize = sizes[..i].iter().product();
        let tail: usize = sizes[i + 1..].iter().product();
        let mut with_cur = vec![0.0; pref_len * sizes[i]];
        for (idx, &m) in block.iter().enumerate() {
            with_cur[idx / tail] += m;
        }
        let mut rows = Vec::with_capacity(pref_len);
        for p in 0..pref_len {
            let num = &with_cur[p * sizes[i]..(p + 1) * sizes[i]];
            let den: f64 = num.iter().sum();
            if den > 0.0 {
                rows.push(Pmf::from_normalized(num.iter().map(|&v| v / den).collect()));
            } else {
                rows.push(Pmf::uniform(sizes[i]));
            }
        }
        steps.push(rows);
    }
    steps
}

/// Per-step conditional marginals of a joint measure: the Bayes chains of
/// `μ` and `ν`.
#[derive(Debug, Clone)]
pub struct ChainMarginals {
    spec: InstanceSpec,
    x_steps: Vec<Vec<Pmf>>,
    y_steps: Vec<Vec<Pmf>>,
}

impl ChainMarginals {
    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    /// `μ_{i|i-1}(·; x^{i-1})`, rows indexed by the packed `x^{i-1}`.
    pub fn x_steps(&self) -> &[Vec<Pmf>] {
        &self.x_steps
    }

    /// `ν_{i|i-1}(·; y^{i-1})`, rows indexed by the packed `y^{i-1}`.
    pub fn y_steps(&self) -> &[Vec<Pmf>] {
        &self.y_steps
    }

    pub fn x_row(&self, i: usize, x_prefix: usize) -> &Pmf {
        &self.x_steps[i][x_prefix]
    }

    pub fn y_row(&self, i: usize, y_prefix: usize) -> &Pmf {
        &self.y_steps[i][y_prefix]
    }

    /// Reassembles the block output marginal as `⊗_i ν_{i|i-1}`.
    pub fn y_product(&self) -> Pmf {
        Pmf::from_normalized(chain_product(&self.y_steps, self.spec.y_sizes()))
    }

    /// Reassembles the block input marginal as `⊗_i μ_{i|i-1}`.
    pub fn x_product(&self) -> Pmf {
        Pmf::from_normalized(chain_product(&self.x_steps, self.spec.x_sizes()))
    }
}

fn chain_product(steps: &[Vec<Pmf>], sizes: &[usize]) -> Vec<f64> {
    let len = radix::space_len(sizes);
    let mut out = vec![0.0; len];
    let mut digits = vec![0usize; sizes.len()];
    for (idx, cell) in out.iter_mut().enumerate() {
        radix::unpack(idx, sizes, &mut digits);
        let mut prod = 1.0;
        let mut prefix = 0usize;
        for (i, &d) in digits.iter().enumerate() {
            prod *= steps[i][prefix].get(d);
            if prod == 0.0 {
                break;
            }
            prefix = prefix * sizes[i] + d;
        }
        *cell = prod;
    }
    out
}

/// Interleaved product of a policy and a channel:
/// `P(x^n, y^n) = ∏_i p_i(x_i; x^{i-1}, y^{i-1}) · q_i(y_i; y^{i-1}, x^i)`.
pub fn compose_joint(policy: &InputPolicy, channel: &ForwardChannel) -> Result<JointMeasure> {
    if policy.spec != channel.spec {
        return Err(Error::SpecMismatch);
    }
    let spec = policy.spec.clone();
    let n = spec.horizon;
    let ny = spec.y_block_len();
    let mut xd = vec![0usize; n + 1];
    let mut yd = vec![0usize; n + 1];
    let mut mass = vec![0.0; spec.joint_len()];
    for x_idx in 0..spec.x_block_len() {
        radix::unpack(x_idx, &spec.x_sizes, &mut xd);
        for y_idx in 0..ny {
            radix::unpack(y_idx, &spec.y_sizes, &mut yd);
            let mut prod = 1.0;
            let mut h = 0usize;
            for i in 0..=n {
                prod *= policy.kernels[i][h].get(xd[i]);
                if prod == 0.0 {
                    break;
                }
                prod *= channel.kernels[i][h * spec.x_sizes[i] + xd[i]].get(yd[i]);
                if prod == 0.0 {
                    break;
                }
                h = (h * spec.x_sizes[i] + xd[i]) * spec.y_sizes[i] + yd[i];
            }
            mass[x_idx * ny + y_idx] = prod;
        }
    }
    Ok(JointMeasure::from_normalized(spec, mass))
}

/// Joint measure assembled from two expanded tables. Cellwise this is
/// `P(x^n | y^{n-1}) · Q(y^n | x^n)`, which equals the interleaved kernel
/// product, and it is linear in each table — handy for mixture paths.
pub fn compose_tables(causal: &ConditionalTable, forward: &ConditionalTable) -> Result<JointMeasure> {
    if causal.spec != forward.spec {
        return Err(Error::SpecMismatch);
    }
    if causal.direction != Direction::CausalInput || forward.direction != Direction::Forward {
        return Err(Error::DirectionMismatch);
    }
    let spec = causal.spec.clone();
    let ny = spec.y_block_len();
    let y_last = spec.y_sizes[spec.horizon];
    let mut mass = vec![0.0; spec.joint_len()];
    for x_idx in 0..spec.x_block_len() {
        let q_row = forward.rows[x_idx].mass();
        for y_idx in 0..ny {
            // y^{n-1} is the prefix of y^n in the block layout.
            let p_row = causal.rows[y_idx / y_last].mass();
            mass[x_idx * ny + y_idx] = p_row[x_idx] * q_row[y_idx];
        }
    }
    Ok(JointMeasure::from_normalized(spec, mass))
}

/// Product reference measure `Π→(x^n, y^n) = P(x^n | y^{n-1}) · ν(y^n)`,
/// the measure directed information is a relative entropy against.
pub fn pi_forward(policy_table: &ConditionalTable, nu: &Pmf) -> Result<JointMeasure> {
    if policy_table.direction != Direction::CausalInput {
        return Err(Error::DirectionMismatch);
    }
    let spec = policy_table.spec.clone();
    if nu.support_size() != spec.y_block_len() {
        return Err(Error::LengthMismatch {
            expected: spec.y_block_len(),
            got: nu.support_size(),
        });
    }
    let ny = spec.y_block_len();
    let y_last = spec.y_sizes[spec.horizon];
    let mut mass = vec![0.0; spec.joint_len()];
    for x_idx in 0..spec.x_block_len() {
        for y_idx in 0..ny {
            let p_row = policy_table.rows[y_idx / y_last].mass();
            mass[x_idx * ny + y_idx] = p_row[x_idx] * nu.get(y_idx);
        }
    }
    Ok(JointMeasure::from_normalized(spec, mass))
}

/// Product reference measure `Π←(x^n, y^n) = μ(x^n) · Q(y^n | x^n)`, the
/// mirror of [`pi_forward`] used by the reverse direction.
pub fn pi_backward(mu: &Pmf, channel_table: &ConditionalTable) -> Result<JointMeasure> {
    if channel_table.direction != Direction::Forward {
        return Err(Error::DirectionMismatch);
    }
    let spec = channel_table.spec.clone();
    if mu.support_size() != spec.x_block_len() {
        return Err(Error::LengthMismatch {
            expected: spec.x_block_len(),
            got: mu.support_size(),
        });
    }
    let ny = spec.y_block_len();
    let mut mass = vec![0.0; spec.joint_len()];
    for x_idx in 0..spec.x_block_len() {
        let q_row = channel_table.rows[x_idx].mass();
        for y_idx in 0..ny {
            mass[x_idx * ny + y_idx] = mu.get(x_idx) * q_row[y_idx];
        }
    }
    Ok(JointMeasure::from_normalized(spec, mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_spec(n: usize) -> InstanceSpec {
        InstanceSpec::new(n, vec![2; n + 1], vec![2; n + 1]).unwrap()
    }

    /// Policy for the n = 1 feedback example: p_0 uniform, x_1 := y_0.
    fn copy_feedback_policy(spec: &InstanceSpec) -> InputPolicy {
        let p0 = vec![Pmf::uniform(2)];
        let p1 = (0..4)
            .map(|h| {
                let y0 = h % 2;
                Pmf::point(2, y0)
            })
            .collect();
        InputPolicy::new(spec.clone(), vec![p0, p1]).unwrap()
    }

    #[test]
    fn spec_rejects_oversized_tables() {
        let err = InstanceSpec::new(7, vec![10; 8], vec![10; 8]).unwrap_err();
        assert!(matches!(err, Error::TableTooLarge { .. }));
    }

    #[test]
    fn pmf_ingestion_renormalizes_within_tolerance() {
        let p = Pmf::new(vec![0.5 + 4e-10, 0.5]).unwrap();
        assert!((p.mass().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            Pmf::new(vec![0.6, 0.5]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Pmf::new(vec![-0.1, 1.1]),
            Err(Error::NegativeMass(_))
        ));
    }

    #[test]
    fn expand_causal_horizon_zero_is_the_single_row() {
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let table = policy.expand();
        assert_eq!(table.conditioning_len(), 1);
        assert_eq!(table.row(0).mass(), &[0.5, 0.5]);
    }

    #[test]
    fn expand_causal_deterministic_kernels_give_point_mass() {
        let spec = binary_spec(1);
        let p0 = vec![Pmf::point(2, 0)];
        let p1 = vec![Pmf::point(2, 0); 4];
        let policy = InputPolicy::new(spec, vec![p0, p1]).unwrap();
        let table = policy.expand();
        for row in table.rows() {
            assert_eq!(row.mass(), &[1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn expand_causal_two_factor_product_by_hand() {
        // Hand-multiplied product: for y^0 = (1), x_1 copies y_0 = 1, so the
        // row is 0.5 on (0,1) and 0.5 on (1,1).
        let spec = binary_spec(1);
        let table = copy_feedback_policy(&spec).expand();
        let row = table.row(1).mass();
        assert_eq!(row, &[0.0, 0.5, 0.0, 0.5]);
        // Structural check on row indexing: rows are indexed by y^{n-1} only.
        assert_eq!(table.conditioning_len(), spec.y_cond_len());
    }

    #[test]
    fn expand_forward_matches_hand_values() {
        // Noiseless: rows are point masses on y = x.
        let spec0 = binary_spec(0);
        let noiseless = ForwardChannel::binary_symmetric(&spec0, 0.0).unwrap();
        let t = noiseless.expand();
        assert_eq!(t.row(0).mass(), &[1.0, 0.0]);
        assert_eq!(t.row(1).mass(), &[0.0, 1.0]);

        // Fully noisy: output independent of input.
        let half = ForwardChannel::binary_symmetric(&spec0, 0.5).unwrap();
        for row in half.expand().rows() {
            assert_eq!(row.mass(), &[0.5, 0.5]);
        }

        // Two-factor product: memoryless BSC(0.1), x^1 = (0,1), y^1 = (0,1)
        // has q-mass 0.9 · 0.9.
        let spec1 = binary_spec(1);
        let bsc = ForwardChannel::binary_symmetric(&spec1, 0.1).unwrap();
        let t = bsc.expand();
        let row = t.row(radix::pack(&[0, 1], &[2, 2])).mass();
        assert!((row[radix::pack(&[0, 1], &[2, 2])] - 0.81).abs() < 1e-15);
    }

    #[test]
    fn factorize_round_trips_forward_chain() {
        let spec = binary_spec(1);
        let bsc = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let table = bsc.expand();
        let recovered = ForwardChannel::factorize(&table).unwrap();
        for i in 0..=1 {
            for h in 0..spec.channel_history_len(i) {
                for y in 0..2 {
                    assert!(
                        (recovered.kernel_row(i, h).get(y) - bsc.kernel_row(i, h).get(y)).abs()
                            < 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn factorize_horizon_zero_is_identity() {
        let spec = binary_spec(0);
        let row = Pmf::new(vec![0.3, 0.7]).unwrap();
        let table =
            ConditionalTable::new(spec.clone(), Direction::CausalInput, vec![row.clone()]).unwrap();
        let policy = InputPolicy::factorize(&table).unwrap();
        assert_eq!(policy.kernel_row(0, 0), &row);
    }

    #[test]
    fn factorize_sets_uniform_rows_on_zero_mass_prefixes() {
        // x_0 is a point mass on 0, so prefixes starting with x_0 = 1 carry
        // no mass; the step-1 kernel there must be uniform and re-expansion
        // must still match on supported cells.
        let spec = binary_spec(1);
        let p0 = vec![Pmf::point(2, 0)];
        let p1 = vec![
            Pmf::new(vec![0.2, 0.8]).unwrap(),
            Pmf::new(vec![0.3, 0.7]).unwrap(),
            Pmf::new(vec![0.4, 0.6]).unwrap(),
            Pmf::new(vec![0.9, 0.1]).unwrap(),
        ];
        let policy = InputPolicy::new(spec.clone(), vec![p0, p1]).unwrap();
        let table = policy.expand();
        let recovered = InputPolicy::factorize(&table).unwrap();
        // History (x_0 = 1, y_0 = anything) has zero mass under the table.
        for h in [2usize, 3] {
            assert_eq!(recovered.kernel_row(1, h).mass(), &[0.5, 0.5]);
        }
        let reexpanded = recovered.expand();
        for (r0, r1) in table.rows().iter().zip(reexpanded.rows()) {
            for (a, b) in r0.mass().iter().zip(r1.mass()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compose_joint_matches_direct_multiplication() {
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let expect = [0.45, 0.05, 0.05, 0.45];
        for (got, want) in joint.table().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((joint.table().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compose_joint_point_mass_for_deterministic_pair() {
        let spec = binary_spec(1);
        let p0 = vec![Pmf::point(2, 1)];
        let p1 = vec![Pmf::point(2, 1); 4];
        let policy = InputPolicy::new(spec.clone(), vec![p0, p1]).unwrap();
        let channel = ForwardChannel::binary_symmetric(&spec, 0.0).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let hits: Vec<usize> = joint
            .table()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(hits.len(), 1);
        assert!((joint.table()[hits[0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_sum_to_one_and_match_hand_sum() {
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let nu = joint.marginal_y();
        // 0.45 + 0.05 on each output by symmetry.
        assert!((nu.get(0) - 0.5).abs() < 1e-15);
        assert!((nu.get(1) - 0.5).abs() < 1e-15);
        let mu = joint.marginal_x();
        assert!((mu.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_marginals_of_iid_uniform_output_are_uniform() {
        let spec = binary_spec(1);
        let policy = copy_feedback_policy(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.5).unwrap();
        let chains = compose_joint(&policy, &channel).unwrap().chain_marginals();
        for (i, step) in chains.y_steps().iter().enumerate() {
            for row in step {
                assert_eq!(row.mass(), Pmf::uniform(2).mass(), "step {i}");
            }
        }
    }

    #[test]
    fn marginal_of_point_mass_is_point_mass() {
        let spec = binary_spec(0);
        let policy = InputPolicy::new(spec.clone(), vec![vec![Pmf::point(2, 1)]]).unwrap();
        let channel = ForwardChannel::binary_symmetric(&spec, 0.0).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        assert_eq!(joint.marginal_x().mass(), &[0.0, 1.0]);
        assert_eq!(joint.marginal_y().mass(), &[0.0, 1.0]);
    }

    #[test]
    fn chain_marginals_recompose_the_block_marginals() {
        let spec = binary_spec(1);
        let policy = copy_feedback_policy(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.2).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let chains = joint.chain_marginals();
        let nu = joint.marginal_y();
        for (a, b) in chains.y_product().mass().iter().zip(nu.mass()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mu = joint.marginal_x();
        for (a, b) in chains.x_product().mass().iter().zip(mu.mass()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_marginals_match_brute_force_conditioning() {
        // n = 1 instance with output memory; compare against conditional
        // sums computed straight from the joint table.
        let spec = binary_spec(1);
        let policy = copy_feedback_policy(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.3).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let chains = joint.chain_marginals();
        let nu = joint.marginal_y();
        for y0 in 0..2usize {
            let den: f64 = (0..2).map(|y1| nu.get(y0 * 2 + y1)).sum();
            for y1 in 0..2usize {
                let want = nu.get(y0 * 2 + y1) / den;
                let got = chains.y_row(1, y0).get(y1);
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pi_forward_horizon_zero_is_plain_product() {
        let spec = binary_spec(0);
        let policy = InputPolicy::uniform(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let nu = joint.marginal_y();
        let pi = pi_forward(&policy.expand(), &nu).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((pi.get(x, y) - 0.5 * nu.get(y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pi_forward_equals_joint_when_channel_ignores_input() {
        let spec = binary_spec(1);
        let policy = copy_feedback_policy(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.5).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let pi = pi_forward(&policy.expand(), &joint.marginal_y()).unwrap();
        for (a, b) in pi.table().iter().zip(joint.table()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pi_forward_matches_hand_interleaving_on_feedback_instance() {
        // Independent oracle: accumulate ∏_i p_i(x_i; x^{i-1}, y^{i-1}) ·
        // ν_{i|i-1}(y_i; y^{i-1}) with explicit loops over symbols.
        let spec = binary_spec(1);
        let policy = copy_feedback_policy(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let chains = joint.chain_marginals();
        let pi = pi_forward(&policy.expand(), &joint.marginal_y()).unwrap();
        for x0 in 0..2usize {
            for x1 in 0..2usize {
                for y0 in 0..2usize {
                    for y1 in 0..2usize {
                        let p0 = policy.kernel_row(0, 0).get(x0);
                        let h1 = x0 * 2 + y0;
                        let p1 = policy.kernel_row(1, h1).get(x1);
                        let nu0 = chains.y_row(0, 0).get(y0);
                        let nu1 = chains.y_row(1, y0).get(y1);
                        let want = p0 * nu0 * p1 * nu1;
                        let got = pi.get(x0 * 2 + x1, y0 * 2 + y1);
                        assert!((got - want).abs() < 1e-12, "cell ({x0}{x1},{y0}{y1})");
                    }
                }
            }
        }
    }

    #[test]
    fn pi_backward_is_mu_times_channel() {
        let spec = binary_spec(0);
        let policy = InputPolicy::new(
            spec.clone(),
            vec![vec![Pmf::new(vec![0.8, 0.2]).unwrap()]],
        )
        .unwrap();
        let channel = ForwardChannel::binary_symmetric(&spec, 0.1).unwrap();
        let joint = compose_joint(&policy, &channel).unwrap();
        let pi = pi_backward(&joint.marginal_x(), &channel.expand()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let want = joint.marginal_x().get(x) * channel.expand().row(x).get(y);
                assert!((pi.get(x, y) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kl_divergence_conventions() {
        let p = Pmf::new(vec![1.0, 0.0]).unwrap();
        let q = Pmf::uniform(2);
        assert_eq!(kl_divergence(&p, &p), 0.0);
        assert!((kl_divergence(&p, &q) - 1.0).abs() < 1e-15);
        assert_eq!(kl_divergence(&q, &p), f64::INFINITY);
    }

    #[test]
    fn mix_conditional_endpoints_and_bsc_average() {
        let spec = binary_spec(0);
        let a = ForwardChannel::binary_symmetric(&spec, 0.05).unwrap().expand();
        let b = ForwardChannel::binary_symmetric(&spec, 0.45).unwrap().expand();
        let at_one = mix_conditional(&a, &b, 1.0).unwrap();
        assert_eq!(at_one.rows(), a.rows());
        let at_zero = mix_conditional(&a, &b, 0.0).unwrap();
        assert_eq!(at_zero.rows(), b.rows());
        let same = mix_conditional(&a, &a, 0.37).unwrap();
        for (r, ra) in same.rows().iter().zip(a.rows()) {
            for (v, va) in r.mass().iter().zip(ra.mass()) {
                assert!((v - va).abs() < 1e-15);
            }
        }
        let mid = mix_conditional(&a, &b, 0.5).unwrap();
        let quarter = ForwardChannel::binary_symmetric(&spec, 0.25).unwrap().expand();
        for (r, rq) in mid.rows().iter().zip(quarter.rows()) {
            for (v, vq) in r.mass().iter().zip(rq.mass()) {
                assert!((v - vq).abs() < 1e-15);
            }
        }
        assert!(matches!(
            mix_conditional(&a, &b, 1.5),
            Err(Error::WeightOutOfRange(_))
        ));
    }

    #[test]
    fn compose_tables_agrees_with_kernel_composition() {
        let spec = binary_spec(1);
        let policy = copy_feedback_policy(&spec);
        let channel = ForwardChannel::binary_symmetric(&spec, 0.2).unwrap();
        let via_kernels = compose_joint(&policy, &channel).unwrap();
        let via_tables = compose_tables(&policy.expand(), &channel.expand()).unwrap();
        for (a, b) in via_kernels.table().iter().zip(via_tables.table()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn output_blind_detection() {
        let spec = binary_spec(1);
        assert!(InputPolicy::uniform(&spec).is_output_blind());
        assert!(!copy_feedback_policy(&spec).is_output_blind());
    }
}
