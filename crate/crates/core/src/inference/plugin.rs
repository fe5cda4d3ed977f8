//! Plug-in variance of the centered count difference.
//!
//! For an ordered pair `(i, j)`:
//!
//! * `r̂_ij = Σ A^01_kl` over ordered `k ≠ l` avoiding `{i, j}`;
//! * `ŝ_ij` is the same sum over `A^11`;
//! * `t̂_ij = Σ (A^10_jk A^10_kl + A^10_kl A^10_li + A^10_jk A^10_li)`, same range.
//!
//! All three reduce to global totals, per-node one-way and mutual degrees,
//! two-step path sums and one common-neighbour count, so a pair costs `O(d)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LcrError, Result};
use crate::graph::{DirectedGraph, EdgeCode};
use crate::model::check_pair;

/// Per-graph totals behind `(r̂, ŝ, t̂)`.
#[derive(Debug, Clone)]
pub struct PluginSums<'g> {
    g: &'g DirectedGraph,
    /// Ordered pairs of type `01` (equivalently, one-way dyads).
    one_way_total: i64,
    /// Ordered pairs of type `11`.
    mutual_total: i64,
    out_one: Vec<i64>,
    in_one: Vec<i64>,
    mutual: Vec<i64>,
    /// `Σ_{k: A^10_jk = 1} out_one[k]`.
    two_step_out: Vec<i64>,
    /// `Σ_{l: A^10_li = 1} in_one[l]`.
    two_step_in: Vec<i64>,
}

impl<'g> PluginSums<'g> {
    pub fn new(g: &'g DirectedGraph) -> Self {
        let n = g.n();
        let out_one: Vec<i64> = (0..n).map(|v| g.degree(EdgeCode::Forward, v) as i64).collect();
        let in_one: Vec<i64> = (0..n).map(|v| g.degree(EdgeCode::Backward, v) as i64).collect();
        let mutual = (0..n).map(|v| g.degree(EdgeCode::Mutual, v) as i64).collect();
        let two_step_out = (0..n)
            .map(|v| {
                g.neighbors(EdgeCode::Forward, v)
                    .iter()
                    .map(|&k| out_one[k as usize])
                    .sum()
            })
            .collect();
        let two_step_in = (0..n)
            .map(|v| {
                g.neighbors(EdgeCode::Backward, v)
                    .iter()
                    .map(|&l| in_one[l as usize])
                    .sum()
            })
            .collect();
        PluginSums {
            g,
            one_way_total: g.edge_type_count(EdgeCode::Backward) as i64,
            mutual_total: g.edge_type_count(EdgeCode::Mutual) as i64,
            out_one,
            in_one,
            mutual,
            two_step_out,
            two_step_in,
        }
    }

    #[inline]
    fn r(&self, i: usize, j: usize, one_way_ij: bool) -> i64 {
        self.one_way_total - self.out_one[i] - self.in_one[i] - self.out_one[j] - self.in_one[j]
            + i64::from(one_way_ij)
    }

    #[inline]
    fn s(&self, i: usize, j: usize, mutual_ij: bool) -> i64 {
        self.mutual_total - 2 * self.mutual[i] - 2 * self.mutual[j] + 2 * i64::from(mutual_ij)
    }

    /// `back` is `A^10_ji`; `paths` is `#{k : A^10_jk = A^10_ki = 1}`.
    #[inline]
    fn t(&self, i: usize, j: usize, back: bool, paths: i64) -> i64 {
        let e = i64::from(back);
        self.two_step_out[j] + self.two_step_in[i] + (self.out_one[j] - e) * (self.in_one[i] - e)
            - e * (self.out_one[i] + self.in_one[j])
            - 3 * paths
    }

    /// `(r̂_ij, ŝ_ij, t̂_ij)` for any ordered pair.
    pub fn rst(&self, i: usize, j: usize) -> Result<(i64, i64, i64)> {
        check_pair(self.g.n(), i, j)?;
        let code = self.g.code(i, j);
        let paths = sorted_intersection(
            self.g.neighbors(EdgeCode::Forward, j),
            self.g.neighbors(EdgeCode::Backward, i),
        );
        Ok((
            self.r(i, j, matches!(code, EdgeCode::Forward | EdgeCode::Backward)),
            self.s(i, j, code == EdgeCode::Mutual),
            self.t(i, j, code == EdgeCode::Backward, paths as i64),
        ))
    }
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut p, mut q, mut count) = (0, 0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                p += 1;
                q += 1;
            }
        }
    }
    count
}

/// `(r̂_ij, ŝ_ij, t̂_ij)`; builds the graph totals on every call, so prefer
/// [`PluginSums`] for many pairs.
pub fn rst_hat(g: &DirectedGraph, i: usize, j: usize) -> Result<(i64, i64, i64)> {
    PluginSums::new(g).rst(i, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceStatus {
    Ok,
    /// Both variances vanish; no signal-to-noise ratio exists.
    ZeroVariance,
    /// Only the simplified variance vanishes.
    ZeroSimplifiedVariance,
}

/// Which path sums enter the plug-in variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceForm {
    /// Every factor of the three-step path is observed, `00` steps included:
    /// `r̂_ij = Σ A^00_jk A^01_kl A^00_li` and likewise for `ŝ`, `t̂`.
    #[default]
    Complete,
    /// `00` steps are replaced by one, as in the module-level sums.
    SparseLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimates {
    /// `Σ_{i≠j} [2 r̂² A^11 + (ŝ − e^ρ t̂)² A^10]`.
    pub v_hat: f64,
    /// `Σ_{i≠j} 2 r̂² A^11`.
    pub w_hat: f64,
    /// `Q(a) / √v_hat`.
    pub snr_hat: Option<f64>,
    /// `Q(a) / √w_hat`.
    pub snr_hat_simple: Option<f64>,
    /// The `ρ` the variance was evaluated at.
    pub rho: f64,
    pub form: VarianceForm,
    pub status: VarianceStatus,
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// One edge term of the variance: `(i, j, code, r, s, t)` for `A^11_ij = 1`
/// or `A^10_ij = 1`. Only `r` is meaningful for mutual pairs and only
/// `s, t` for one-way pairs.
type EdgeTerm = (usize, usize, EdgeCode, i64, i64, i64);

fn sparse_limit_row(g: &DirectedGraph, sums: &PluginSums<'_>, mark: &mut [u32], i: usize, out: &mut impl FnMut(EdgeTerm)) {
    for &j in g.neighbors(EdgeCode::Mutual, i) {
        out((i, j as usize, EdgeCode::Mutual, sums.r(i, j as usize, false), 0, 0));
    }
    let forward = g.neighbors(EdgeCode::Forward, i);
    if forward.is_empty() {
        return;
    }
    let stamp = i as u32;
    for &l in g.neighbors(EdgeCode::Backward, i) {
        mark[l as usize] = stamp;
    }
    for &j in forward {
        let j = j as usize;
        let paths = g
            .neighbors(EdgeCode::Forward, j)
            .iter()
            .filter(|&&k| mark[k as usize] == stamp)
            .count() as i64;
        out((i, j, EdgeCode::Forward, 0, sums.s(i, j, false), sums.t(i, j, false, paths)));
    }
}

/// Two non-negative counters in one integer, so a gather over a neighbour
/// list reads both with one load.
trait Lanes: Copy + Default + Send + Sync {
    const LO: Self;
    const HI: Self;
    fn add(self, other: Self) -> Self;
    fn pack(lo: u32, hi: u32) -> Self;
    fn lo(self) -> i64;
    fn hi(self) -> i64;
}

/// 32-bit lanes; sums stay below `2^32` while every degree is below `2^16 − 1`.
impl Lanes for u64 {
    const LO: Self = 1;
    const HI: Self = 1 << 32;
    #[inline(always)]
    fn add(self, other: Self) -> Self {
        self.wrapping_add(other)
    }
    #[inline(always)]
    fn pack(lo: u32, hi: u32) -> Self {
        u64::from(lo) | u64::from(hi) << 32
    }
    #[inline(always)]
    fn lo(self) -> i64 {
        (self & 0xFFFF_FFFF) as i64
    }
    #[inline(always)]
    fn hi(self) -> i64 {
        (self >> 32) as i64
    }
}

impl Lanes for u128 {
    const LO: Self = 1;
    const HI: Self = 1 << 64;
    #[inline(always)]
    fn add(self, other: Self) -> Self {
        self.wrapping_add(other)
    }
    #[inline(always)]
    fn pack(lo: u32, hi: u32) -> Self {
        u128::from(lo) | u128::from(hi) << 64
    }
    #[inline(always)]
    fn lo(self) -> i64 {
        self as u64 as i64
    }
    #[inline(always)]
    fn hi(self) -> i64 {
        (self >> 64) as i64
    }
}

/// Per-node counters for one row `i` of the complete form, with
/// `L = {i} ∪ U(i)` and `I = {l : A^10_li = 1}`.
struct RowScratch<T> {
    /// `#{l ∈ L : A^01_kl}`.
    back: Vec<T>,
    /// `#{l ∈ L : A^11_kl}` and `#{l ∈ I : A^10_kl}`.
    mutual_two_step: Vec<T>,
    /// `#{l ∈ L : A^10_kl}` and `#{l ∈ I : l ∈ U(k)} + [k ∈ I]`.
    forward_touch: Vec<T>,
}

impl<T: Lanes> RowScratch<T> {
    fn new(n: usize) -> Self {
        RowScratch {
            back: vec![T::default(); n],
            mutual_two_step: vec![T::default(); n],
            forward_touch: vec![T::default(); n],
        }
    }
}

#[inline]
fn bump_all<T: Lanes>(v: &mut [T], idx: &[u32], by: T) {
    for &k in idx {
        let x = &mut v[k as usize];
        *x = x.add(by);
    }
}

#[inline]
fn sum_over<T: Lanes>(v: &[T], idx: &[u32]) -> T {
    idx.iter().fold(T::default(), |acc, &k| acc.add(v[k as usize]))
}

/// Row bitsets of the three non-null edge types.
struct TypeBits {
    words: usize,
    back: Vec<u64>,
    mutual: Vec<u64>,
    forward: Vec<u64>,
}

/// Bitsets are only built up to this many nodes.
const MAX_BITSET_NODES: usize = 16_384;

impl TypeBits {
    fn new(g: &DirectedGraph) -> Self {
        let n = g.n();
        let words = n.div_ceil(64);
        let fill = |code: EdgeCode| {
            let mut bits = vec![0u64; n * words];
            for v in 0..n {
                for &k in g.neighbors(code, v) {
                    bits[v * words + k as usize / 64] |= 1 << (k % 64);
                }
            }
            bits
        };
        TypeBits {
            words,
            back: fill(EdgeCode::Backward),
            mutual: fill(EdgeCode::Mutual),
            forward: fill(EdgeCode::Forward),
        }
    }

    fn row<'a>(&self, bits: &'a [u64], v: usize) -> &'a [u64] {
        &bits[v * self.words..(v + 1) * self.words]
    }
}

/// Fills `acc` for row `i` by scattering along neighbour lists.
fn scatter_row<T: Lanes>(g: &DirectedGraph, acc: &mut RowScratch<T>, i: usize) {
    acc.back.fill(T::default());
    acc.mutual_two_step.fill(T::default());
    acc.forward_touch.fill(T::default());
    let into_i = g.neighbors(EdgeCode::Backward, i);
    bump_all(&mut acc.forward_touch, into_i, T::HI);
    for l in std::iter::once(i).chain(g.adjacent(i).iter().map(|&l| l as usize)) {
        bump_all(&mut acc.back, g.neighbors(EdgeCode::Forward, l), T::LO);
        bump_all(&mut acc.mutual_two_step, g.neighbors(EdgeCode::Mutual, l), T::LO);
        bump_all(&mut acc.forward_touch, g.neighbors(EdgeCode::Backward, l), T::LO);
    }
    for &l in into_i {
        let l = l as usize;
        bump_all(&mut acc.mutual_two_step, g.neighbors(EdgeCode::Backward, l), T::HI);
        bump_all(&mut acc.forward_touch, g.adjacent(l), T::HI);
    }
}

/// Fills `acc` for row `i` from row bitsets, `O(n²/64)`.
fn bitset_row<T: Lanes>(g: &DirectedGraph, bits: &TypeBits, row_l: &mut [u64], acc: &mut RowScratch<T>, i: usize) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("popcnt") {
        // SAFETY: the feature was detected at runtime.
        unsafe { bitset_row_popcnt(g, bits, row_l, acc, i) };
        return;
    }
    bitset_row_generic(g, bits, row_l, acc, i);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn bitset_row_popcnt<T: Lanes>(
    g: &DirectedGraph,
    bits: &TypeBits,
    row_l: &mut [u64],
    acc: &mut RowScratch<T>,
    i: usize,
) {
    bitset_row_generic(g, bits, row_l, acc, i);
}

#[inline(always)]
fn bitset_row_generic<T: Lanes>(g: &DirectedGraph, bits: &TypeBits, row_l: &mut [u64], acc: &mut RowScratch<T>, i: usize) {
    let w = bits.words;
    let into_i = bits.row(&bits.back, i);
    for (x, ((b, m), f)) in row_l
        .iter_mut()
        .zip(bits.row(&bits.back, i).iter().zip(bits.row(&bits.mutual, i)).zip(bits.row(&bits.forward, i)))
    {
        *x = b | m | f;
    }
    row_l[i / 64] |= 1 << (i % 64);
    for k in 0..g.n() {
        let (b, m, f) = (
            &bits.back[k * w..(k + 1) * w],
            &bits.mutual[k * w..(k + 1) * w],
            &bits.forward[k * w..(k + 1) * w],
        );
        let (mut nb, mut nm, mut nf, mut two, mut touch) = (0u32, 0u32, 0u32, 0u32, 0u32);
        for t in 0..w {
            let (l, e) = (row_l[t], into_i[t]);
            nb += (b[t] & l).count_ones();
            nm += (m[t] & l).count_ones();
            nf += (f[t] & l).count_ones();
            two += (f[t] & e).count_ones();
            touch += ((b[t] | m[t] | f[t]) & e).count_ones();
        }
        touch += (into_i[k / 64] >> (k % 64) & 1) as u32;
        acc.back[k] = T::pack(nb, 0);
        acc.mutual_two_step[k] = T::pack(nm, two);
        acc.forward_touch[k] = T::pack(nf, touch);
    }
}

/// Graph totals for the complete form.
struct CompleteSums {
    one_way_total: i64,
    mutual_total: i64,
    /// `Σ_{k ∈ {v} ∪ U(v)} in_one[k]`.
    closed_in_one: Vec<i64>,
    /// `Σ_{k ∈ {v} ∪ U(v)} out_one[k]`.
    closed_out_one: Vec<i64>,
    closed_mutual: Vec<i64>,
    /// `Σ_{k : A^10_vk = 1} out_one[k]`.
    closed_out_one_forward: Vec<i64>,
    /// `Σ_{l : A^10_lv = 1} in_one[l]`.
    two_step_in: Vec<i64>,
}

impl CompleteSums {
    fn new(g: &DirectedGraph) -> Self {
        let n = g.n();
        let deg = |c: EdgeCode| -> Vec<i64> { (0..n).map(|v| g.degree(c, v) as i64).collect() };
        let out_one = deg(EdgeCode::Forward);
        let in_one = deg(EdgeCode::Backward);
        let mutual = deg(EdgeCode::Mutual);
        let closed = |x: &[i64]| -> Vec<i64> {
            (0..n)
                .map(|v| x[v] + g.adjacent(v).iter().map(|&k| x[k as usize]).sum::<i64>())
                .collect()
        };
        let closed_out_one_forward = (0..n)
            .map(|v| g.neighbors(EdgeCode::Forward, v).iter().map(|&k| out_one[k as usize]).sum())
            .collect();
        let two_step_in = (0..n)
            .map(|v| g.neighbors(EdgeCode::Backward, v).iter().map(|&l| in_one[l as usize]).sum())
            .collect();
        CompleteSums {
            closed_out_one_forward,
            two_step_in,
            one_way_total: g.edge_type_count(EdgeCode::Backward) as i64,
            mutual_total: g.edge_type_count(EdgeCode::Mutual) as i64,
            closed_in_one: closed(&in_one),
            closed_out_one: closed(&out_one),
            closed_mutual: closed(&mutual),
        }
    }
}

/// Row `i` of the complete form in `O(Σ_{l ∈ U(i)} d_l + Σ_j d_j)`.
///
/// With `K = {j} ∪ U(j)` and `L = {i} ∪ U(i)`, a `00` step from `j` means
/// `k ∉ K` and a `00` step into `i` means `l ∉ L`, so each sum is a total
/// minus the edges leaving `K` or entering `L`, plus those doing both.
/// Per-row work estimate of [`scatter_row`].
fn scatter_cost(g: &DirectedGraph, i: usize) -> usize {
    let deg = |l: u32| g.adjacent(l as usize).len();
    g.adjacent(i).iter().map(|&l| deg(l)).sum::<usize>()
        + g.neighbors(EdgeCode::Backward, i).iter().map(|&l| deg(l) + g.degree(EdgeCode::Backward, l as usize)).sum::<usize>()
}

/// Per-row work estimate of [`bitset_row`], in the same units.
fn bitset_cost(n: usize) -> usize {
    n * n.div_ceil(64)
}

fn complete_row<T: Lanes>(
    g: &DirectedGraph,
    sums: &CompleteSums,
    bits: Option<&TypeBits>,
    row_l: &mut [u64],
    acc: &mut RowScratch<T>,
    i: usize,
    out: &mut impl FnMut(EdgeTerm),
) {
    let mutual = g.neighbors(EdgeCode::Mutual, i);
    let forward = g.neighbors(EdgeCode::Forward, i);
    if mutual.is_empty() && forward.is_empty() {
        return;
    }
    match bits {
        Some(bits) if bitset_cost(g.n()) < scatter_cost(g, i) => bitset_row(g, bits, row_l, acc, i),
        _ => scatter_row(g, acc, i),
    }

    for &j in mutual {
        let j = j as usize;
        let back = acc.back[j].add(sum_over(&acc.back, g.adjacent(j))).lo();
        let r = sums.one_way_total - sums.closed_in_one[j] - sums.closed_out_one[i] + back;
        out((i, j, EdgeCode::Mutual, r, 0, 0));
    }
    let n_into_i = g.degree(EdgeCode::Backward, i) as i64;
    let two_step_total = sums.two_step_in[i];
    for &j in forward {
        let j = j as usize;
        let mt = acc.mutual_two_step[j].add(sum_over(&acc.mutual_two_step, g.adjacent(j)));
        let s = sums.mutual_total - sums.closed_mutual[j] - sums.closed_mutual[i] + mt.lo();
        let out_j = g.neighbors(EdgeCode::Forward, j);
        let ft = sum_over(&acc.forward_touch, out_j);
        let ffn = sums.closed_out_one_forward[j] - ft.lo();
        let fnf = out_j.len() as i64 * n_into_i - ft.hi();
        let nff = two_step_total - mt.hi();
        out((i, j, EdgeCode::Forward, 0, s, ffn + nff + fnf));
    }
}

/// Shared inputs of [`complete_row`].
struct CompleteContext {
    sums: CompleteSums,
    bits: Option<TypeBits>,
}

impl CompleteContext {
    fn new(g: &DirectedGraph) -> Self {
        let n = g.n();
        let worth = n <= MAX_BITSET_NODES && (0..n).any(|i| bitset_cost(n) < scatter_cost(g, i));
        CompleteContext {
            sums: CompleteSums::new(g),
            bits: worth.then(|| TypeBits::new(g)),
        }
    }

    fn row_scratch<T: Lanes>(&self, n: usize) -> (Vec<u64>, RowScratch<T>) {
        (vec![0u64; n.div_ceil(64)], RowScratch::new(n))
    }

    fn row<T: Lanes>(&self, g: &DirectedGraph, scratch: &mut (Vec<u64>, RowScratch<T>), i: usize, out: &mut impl FnMut(EdgeTerm)) {
        complete_row(g, &self.sums, self.bits.as_ref(), &mut scratch.0, &mut scratch.1, i, out);
    }
}

/// Whether 32-bit lanes are wide enough for `g`.
fn narrow_lanes(g: &DirectedGraph) -> bool {
    (0..g.n()).all(|v| g.adjacent(v).len() < usize::from(u16::MAX) - 1)
}

/// Visits every edge term in row order.
#[cfg(test)]
fn for_each_term(g: &DirectedGraph, form: VarianceForm, mut f: impl FnMut(EdgeTerm)) {
    let n = g.n();
    match form {
        VarianceForm::SparseLimit => {
            let sums = PluginSums::new(g);
            let mut mark = vec![u32::MAX; n];
            (0..n).for_each(|i| sparse_limit_row(g, &sums, &mut mark, i, &mut f));
        }
        VarianceForm::Complete => {
            let ctx = CompleteContext::new(g);
            let mut scratch = ctx.row_scratch::<u128>(n);
            (0..n).for_each(|i| ctx.row(g, &mut scratch, i, &mut f));
        }
    }
}

/// Row sums `(Σ 2r², Σ (s − e^ρ t)²)`.
fn row_totals(e_rho: f64) -> impl Fn(&mut (u128, Neumaier), EdgeTerm) {
    move |acc, (_, _, code, r, s, t)| match code {
        EdgeCode::Mutual => acc.0 += 2 * (r * r) as u128,
        _ => {
            let d = s as f64 - e_rho * t as f64;
            acc.1.add(d * d);
        }
    }
}

fn complete_rows<T: Lanes>(g: &DirectedGraph, add: &(impl Fn(&mut (u128, Neumaier), EdgeTerm) + Sync)) -> Vec<(u128, f64)> {
    let ctx = CompleteContext::new(g);
    (0..g.n())
        .into_par_iter()
        .map_init(
            || ctx.row_scratch::<T>(g.n()),
            |scratch, i| {
                let mut acc = (0u128, Neumaier::default());
                ctx.row(g, scratch, i, &mut |t| add(&mut acc, t));
                (acc.0, acc.1.total())
            },
        )
        .collect()
}

/// Plug-in variance at `rho` in the [`VarianceForm::Complete`] form.
pub fn variance_hat(g: &DirectedGraph, rho: f64, qa: u64) -> Result<VarianceEstimates> {
    variance_hat_with(g, rho, qa, VarianceForm::Complete)
}

/// Plug-in variance at `rho`, with signal-to-noise ratios for count `qa`.
///
/// Rows are summed independently and then combined in index order, so the
/// result does not depend on the number of threads.
pub fn variance_hat_with(g: &DirectedGraph, rho: f64, qa: u64, form: VarianceForm) -> Result<VarianceEstimates> {
    if !rho.is_finite() {
        return Err(LcrError::domain("variance requested at a non-finite rho"));
    }
    let n = g.n();
    let add = row_totals(rho.exp());
    let rows: Vec<(u128, f64)> = match form {
        VarianceForm::SparseLimit => {
            let sums = PluginSums::new(g);
            (0..n)
                .into_par_iter()
                .map_init(
                    || vec![u32::MAX; n],
                    |mark, i| {
                        let mut acc = (0u128, Neumaier::default());
                        sparse_limit_row(g, &sums, mark, i, &mut |t| add(&mut acc, t));
                        (acc.0, acc.1.total())
                    },
                )
                .collect()
        }
        VarianceForm::Complete if narrow_lanes(g) => complete_rows::<u64>(g, &add),
        VarianceForm::Complete => complete_rows::<u128>(g, &add),
    };

    let w_int: u128 = rows.iter().map(|r| r.0).sum();
    let mut one_way = Neumaier::default();
    for r in &rows {
        one_way.add(r.1);
    }
    let w_hat = w_int as f64;
    let v_hat = w_hat + one_way.total();
    let q = qa as f64;
    let ratio = |var: f64| (var > 0.0).then(|| q / var.sqrt());
    let status = if v_hat <= 0.0 {
        VarianceStatus::ZeroVariance
    } else if w_hat <= 0.0 {
        VarianceStatus::ZeroSimplifiedVariance
    } else {
        VarianceStatus::Ok
    };
    Ok(VarianceEstimates {
        v_hat,
        w_hat,
        snr_hat: ratio(v_hat),
        snr_hat_simple: ratio(w_hat),
        rho,
        form,
        status,
    })
}
