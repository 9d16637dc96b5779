//! Gaussian realization at desk scale: reduced words in free products of
//! cyclic groups, covariance kernels from commuting representation data,
//! seeded Gaussian sampling with a pseudo-square-root factor for singular
//! kernels, and Monte Carlo verification of the second- and fourth-moment
//! identities behind the ergodic realization of unitary strategies.
//!
//! Everything here is real: complex representation data must be realified
//! first (see [`realify_operator`]).

use crate::duality::Wheel;
use crate::error::{Error, Result};
use crate::games::DualCorrelationTable;
use crate::linalg::{hermitian_eigen, Mat, C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Eigenvalue cutoff below which kernel directions are dropped.
pub const SINGULAR_CUTOFF: f64 = 1e-10;
/// Residual at which a representation is rejected as non-multiplicative or
/// complex.
pub const REP_TOL: f64 = 1e-9;
/// Hard cap on enumerated word counts.
pub const WORD_CAP: usize = 100_000;

/// A free product of cyclic groups; factor x is the cyclic group of
/// order `orders[x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeProduct {
    orders: Vec<u32>,
}

impl FreeProduct {
    pub fn new(orders: Vec<u32>) -> Self {
        assert!(orders.iter().all(|&n| n >= 1));
        FreeProduct { orders }
    }

    /// One Z_n factor per question.
    pub fn cyclic_factors(questions: usize, order: u32) -> Self {
        FreeProduct { orders: vec![order; questions] }
    }

    pub fn factors(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self, factor: usize) -> u32 {
        self.orders[factor]
    }
}

/// A reduced word: letters (factor, exponent) with nonzero exponents and
/// no adjacent letters from the same factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord {
    letters: Vec<(usize, u32)>,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord { letters: Vec::new() }
    }

    /// The one-symbol word: exponent k in factor x.
    pub fn generator(group: &FreeProduct, factor: usize, exponent: u32) -> Self {
        let k = exponent % group.order(factor);
        if k == 0 {
            GroupWord::identity()
        } else {
            GroupWord { letters: vec![(factor, k)] }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[(usize, u32)] {
        &self.letters
    }
}

impl std::fmt::Display for GroupWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, (x, k)) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "x{x}^{k}")?;
        }
        Ok(())
    }
}

/// Concatenates and reduces: exponents add modulo the factor order,
/// vanishing letters cancel and may cascade.
pub fn word_multiply(group: &FreeProduct, a: &GroupWord, b: &GroupWord) -> GroupWord {
    let mut letters = a.letters.clone();
    for &(factor, exp) in &b.letters {
        push_letter(group, &mut letters, factor, exp);
    }
    GroupWord { letters }
}

fn push_letter(group: &FreeProduct, letters: &mut Vec<(usize, u32)>, factor: usize, exp: u32) {
    let exp = exp % group.order(factor);
    if exp == 0 {
        return;
    }
    if let Some(&(last_factor, last_exp)) = letters.last() {
        if last_factor == factor {
            let combined = (last_exp + exp) % group.order(factor);
            letters.pop();
            if combined != 0 {
                letters.push((factor, combined));
            }
            return;
        }
    }
    letters.push((factor, exp));
}

pub fn word_inverse(group: &FreeProduct, a: &GroupWord) -> GroupWord {
    let letters = a
        .letters
        .iter()
        .rev()
        .map(|&(factor, exp)| (factor, group.order(factor) - exp))
        .collect();
    GroupWord { letters }
}

/// All reduced words of length at most `max_len`, identity first, ordered
/// by length.
pub fn enumerate_words(group: &FreeProduct, max_len: usize) -> Result<Vec<GroupWord>> {
    if max_len > 6 {
        return Err(Error::WordExplosion(format!("maxLength {max_len} > 6")));
    }
    let mut words = vec![GroupWord::identity()];
    let mut frontier = vec![GroupWord::identity()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            let last = w.letters.last().map(|&(f, _)| f);
            for factor in 0..group.factors() {
                if Some(factor) == last {
                    continue;
                }
                for exp in 1..group.order(factor) {
                    let mut letters = w.letters.clone();
                    letters.push((factor, exp));
                    next.push(GroupWord { letters });
                }
            }
        }
        if words.len() + next.len() > WORD_CAP {
            return Err(Error::WordExplosion(format!(
                "more than {WORD_CAP} words at length {max_len}"
            )));
        }
        words.extend(next.iter().cloned());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(words)
}

/// Word representation generated by one wheel per factor: the word
/// (x1,k1)...(xr,kr) maps to u_{x1}(k1) ... u_{xr}(kr).
pub fn wheel_word_rep<'a>(wheels: &'a [Wheel], dim: usize) -> impl Fn(&GroupWord) -> Mat + 'a {
    move |word: &GroupWord| {
        let mut out = Mat::identity(dim);
        for &(factor, exp) in word.letters() {
            out = out.matmul(wheels[factor].unitary(exp as usize));
        }
        out
    }
}

/// Doubles the dimension to make a complex operator real:
/// [[Re, -Im], [Im, Re]].
pub fn realify_operator(m: &Mat) -> Mat {
    let d = m.rows();
    Mat::from_fn(2 * d, 2 * d, |i, j| {
        let (bi, ii) = (i / d, i % d);
        let (bj, jj) = (j / d, j % d);
        let z = m[(ii, jj)];
        let value = match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        };
        C64::new(value, 0.0)
    })
}

/// Real part / imaginary part stacking of a complex vector, matching
/// [`realify_operator`].
pub fn realify_vector(v: &[C64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// A finite word set F with the real symmetric matrix
/// p(g,h) = <U_g psi, U_h psi>.
#[derive(Debug, Clone)]
pub struct CovarianceKernel {
    words: Vec<GroupWord>,
    matrix: Vec<Vec<f64>>,
}

impl CovarianceKernel {
    /// Builds from raw parts; used by tests and the sampler examples.
    pub fn from_parts(words: Vec<GroupWord>, matrix: Vec<Vec<f64>>) -> Self {
        CovarianceKernel { words, matrix }
    }

    pub fn words(&self) -> &[GroupWord] {
        &self.words
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn entry(&self, g: usize, h: usize) -> f64 {
        self.matrix[g][h]
    }

    pub fn matrix(&self) -> &Vec<Vec<f64>> {
        &self.matrix
    }

    pub fn index_of(&self, word: &GroupWord) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = Mat::from_real_rows(self.matrix.clone());
        let (eigs, _) = hermitian_eigen(&m);
        eigs.first().copied().unwrap_or(0.0)
    }
}

/// Builds the Gram kernel `[<U_g psi, U_h psi>]` over the word list F.
/// Rejects representations with complex residue and checks
/// multiplicativity on sampled pairs from F.
pub fn build_kernel(
    group: &FreeProduct,
    rep: &impl Fn(&GroupWord) -> Mat,
    psi: &[f64],
    words: &[GroupWord],
) -> Result<CovarianceKernel> {
    let norm: f64 = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > REP_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let images: Vec<Mat> = words.iter().map(rep).collect();
    for img in &images {
        let imag = img.max_imag();
        if imag > REP_TOL {
            return Err(Error::ComplexResidue { residue: imag });
        }
    }
    // Multiplicativity spot check on pairs from F.
    for (i, a) in words.iter().enumerate().take(8) {
        for (j, b) in words.iter().enumerate().take(8) {
            let direct = rep(&word_multiply(group, a, b));
            let product = images[i].matmul(&images[j]);
            let resid = direct.max_abs_diff(&product);
            if resid > REP_TOL {
                return Err(Error::NonMultiplicativeRep(format!(
                    "U({a})U({b}) differs from U({a} {b}) by {resid:.3e}"
                )));
            }
        }
    }
    let vectors: Vec<Vec<f64>> = images.iter().map(|u| apply_real(u, psi)).collect();
    let n = words.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for g in 0..n {
        for h in g..n {
            let dot: f64 = vectors[g].iter().zip(&vectors[h]).map(|(a, b)| a * b).sum();
            matrix[g][h] = dot;
            matrix[h][g] = dot;
        }
    }
    Ok(CovarianceKernel { words: words.to_vec(), matrix })
}

fn apply_real(u: &Mat, v: &[f64]) -> Vec<f64> {
    (0..u.rows())
        .map(|i| (0..u.cols()).map(|j| u[(i, j)].re * v[j]).sum())
        .collect()
}

/// Seeded Gaussian sampler with covariance p_F, via the eigendecomposition
/// pseudo-square-root (eigenvalues below the cutoff are dropped, so
/// singular kernels sample on their support).
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    /// |F| x rank factor L with L L^T = p_F.
    factor: Vec<Vec<f64>>,
    rank: usize,
    seed: u64,
    counter: u64,
}

impl GaussianSampler {
    pub fn new(kernel: &CovarianceKernel, seed: u64) -> Self {
        let m = Mat::from_real_rows(kernel.matrix().clone());
        let (eigs, vecs) = hermitian_eigen(&m);
        let kept: Vec<(usize, f64)> = eigs
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > SINGULAR_CUTOFF)
            .map(|(i, &l)| (i, l))
            .collect();
        let dim = kernel.dim();
        let factor: Vec<Vec<f64>> = (0..dim)
            .map(|row| kept.iter().map(|&(col, l)| vecs[(row, col)].re * l.sqrt()).collect())
            .collect();
        GaussianSampler { factor, rank: kept.len(), seed, counter: 0 }
    }

    pub fn dim(&self) -> usize {
        self.factor.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Residual of L L^T against the kernel.
    pub fn factor_residual(&self, kernel: &CovarianceKernel) -> f64 {
        let mut worst: f64 = 0.0;
        for g in 0..self.dim() {
            for h in 0..self.dim() {
                let recon: f64 =
                    self.factor[g].iter().zip(&self.factor[h]).map(|(a, b)| a * b).sum();
                worst = worst.max((recon - kernel.entry(g, h)).abs());
            }
        }
        worst
    }

    fn stream_rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Draws `count` samples from the substream `stream`; identical
    /// (seed, stream) pairs give identical output.
    pub fn sample(&self, count: usize, stream: u64) -> Vec<Vec<f64>> {
        let mut rng = self.stream_rng(stream);
        (0..count).map(|_| self.draw_one(&mut rng)).collect()
    }

    fn draw_one(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let xi: Vec<f64> = (0..self.rank).map(|_| rng.sample(StandardNormal)).collect();
        self.factor
            .iter()
            .map(|row| row.iter().zip(&xi).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Claims the next unused substream index.
    pub fn next_stream(&mut self) -> u64 {
        let s = self.counter;
        self.counter += 1;
        s
    }
}

/// Streaming mean and standard error of a per-sample statistic.
struct Accumulator {
    n: usize,
    sum: f64,
    sumsq: f64,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator { n: 0, sum: 0.0, sumsq: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn standard_error(&self) -> f64 {
        let n = self.n as f64;
        let var = ((self.sumsq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Monte Carlo estimate of ∫ ι_g ι_h dγ and its standard error.
pub fn mc_correlation(
    sampler: &GaussianSampler,
    g_index: usize,
    h_index: usize,
    count: usize,
    stream: u64,
) -> (f64, f64) {
    let mut rng = sampler.stream_rng(stream);
    let mut acc = Accumulator::new();
    for _ in 0..count {
        let z = sampler.draw_one(&mut rng);
        acc.push(z[g_index] * z[h_index]);
    }
    (acc.mean(), acc.standard_error())
}

/// One-sweep Monte Carlo estimates of all pair correlations ∫ ι_g ι_h dγ:
/// returns (estimates, standard errors) as symmetric |F| x |F| matrices.
pub fn mc_correlation_matrix(
    sampler: &GaussianSampler,
    count: usize,
    stream: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = sampler.dim();
    let mut rng = sampler.stream_rng(stream);
    let mut sum = vec![vec![0.0f64; d]; d];
    let mut sumsq = vec![vec![0.0f64; d]; d];
    for _ in 0..count {
        let z = sampler.draw_one(&mut rng);
        for g in 0..d {
            for h in g..d {
                let prod = z[g] * z[h];
                sum[g][h] += prod;
                sumsq[g][h] += prod * prod;
            }
        }
    }
    let n = count as f64;
    let mut est = vec![vec![0.0f64; d]; d];
    let mut se = vec![vec![0.0f64; d]; d];
    for g in 0..d {
        for h in g..d {
            let mean = sum[g][h] / n;
            let var = ((sumsq[g][h] - sum[g][h] * sum[g][h] / n) / (n - 1.0)).max(0.0);
            est[g][h] = mean;
            est[h][g] = mean;
            let e = (var / n).sqrt();
            se[g][h] = e;
            se[h][g] = e;
        }
    }
    (est, se)
}

/// Monte Carlo estimate of the product fourth moment
/// ∫∫ ι_g(z) ι_tau(z) ι_h(w) ι_delta(w) d(γ_A x γ_B); independence of the
/// two factors makes it p_A(g,tau) p_B(h,delta).
#[allow(clippy::too_many_arguments)]
pub fn mc_fourth_moment(
    sampler_a: &GaussianSampler,
    sampler_b: &GaussianSampler,
    g: usize,
    tau: usize,
    h: usize,
    delta: usize,
    count: usize,
    streams: (u64, u64),
) -> (f64, f64) {
    let mut rng_a = sampler_a.stream_rng(streams.0);
    let mut rng_b = sampler_b.stream_rng(streams.1);
    let mut acc = Accumulator::new();
    for _ in 0..count {
        let z = sampler_a.draw_one(&mut rng_a);
        let w = sampler_b.draw_one(&mut rng_b);
        acc.push(z[g] * z[tau] * w[h] * w[delta]);
    }
    (acc.mean(), acc.standard_error())
}

/// A finitely supported coefficient function chi on G_A x G_B.
pub type ChiCoefficients = Vec<(GroupWord, GroupWord, f64)>;

/// Result of the Monte Carlo realization: per question pair, the estimated
/// dual correlation table and its entrywise standard errors.
#[derive(Debug, Clone)]
pub struct RealizationEstimate {
    pub estimate: DualCorrelationTable,
    pub standard_errors: Vec<Vec<Vec<Vec<f64>>>>,
    pub samples: usize,
}

/// Monte Carlo realization of a unitary spatial strategy whose
/// wavefunction is psi = Σ chi(g,h) (a(g) rho) ⊗ (b(h) vartheta): samples
/// the two Gaussian coordinate processes independently and estimates
/// p_{x,y}(j,k) = (1/nm) E[f_shift(z,w) f(z,w)] with f = Σ chi ι_g ι_h.
#[allow(clippy::too_many_arguments)]
pub fn realize_spatial_strategy_mc(
    group_a: &FreeProduct,
    group_b: &FreeProduct,
    rep_a: &impl Fn(&GroupWord) -> Mat,
    rep_b: &impl Fn(&GroupWord) -> Mat,
    chi: &ChiCoefficients,
    rho: &[f64],
    vartheta: &[f64],
    words_a: &[GroupWord],
    words_b: &[GroupWord],
    count: usize,
    seed: u64,
) -> Result<RealizationEstimate> {
    for (g, h, _) in chi {
        if !words_a.contains(g) || !words_b.contains(h) {
            return Err(Error::ShapeMismatch(
                "chi support must lie inside the supplied word sets".into(),
            ));
        }
    }
    // Unit-norm check of the represented wavefunction.
    let mut psi_norm_sq = 0.0;
    for (g, h, c) in chi {
        for (g2, h2, c2) in chi {
            let pa = pair_overlap(rep_a, rho, g, g2);
            let pb = pair_overlap(rep_b, vartheta, h, h2);
            psi_norm_sq += c * c2 * pa * pb;
        }
    }
    if (psi_norm_sq - 1.0).abs() > REP_TOL {
        return Err(Error::NotNormalized { norm: psi_norm_sq.max(0.0).sqrt() });
    }

    let n = group_a.order(0) as usize;
    let m = group_b.order(0) as usize;
    let nx = group_a.factors();
    let ny = group_b.factors();

    // Extend the word sets with all shifted support words (x,j)g and (y,k)h.
    let mut full_a = words_a.to_vec();
    let mut full_b = words_b.to_vec();
    let mut shifted_a = vec![vec![Vec::new(); n]; nx];
    let mut shifted_b = vec![vec![Vec::new(); m]; ny];
    for (x, row) in shifted_a.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let gen = GroupWord::generator(group_a, x, j as u32);
            *slot = chi
                .iter()
                .map(|(g, _, _)| index_or_insert(&mut full_a, word_multiply(group_a, &gen, g)))
                .collect();
        }
    }
    for (y, row) in shifted_b.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            let gen = GroupWord::generator(group_b, y, k as u32);
            *slot = chi
                .iter()
                .map(|(_, h, _)| index_or_insert(&mut full_b, word_multiply(group_b, &gen, h)))
                .collect();
        }
    }
    let base_a: Vec<usize> =
        chi.iter().map(|(g, _, _)| full_a.iter().position(|w| w == g).unwrap()).collect();
    let base_b: Vec<usize> =
        chi.iter().map(|(_, h, _)| full_b.iter().position(|w| w == h).unwrap()).collect();

    let kernel_a = build_kernel(group_a, rep_a, rho, &full_a)?;
    let kernel_b = build_kernel(group_b, rep_b, vartheta, &full_b)?;
    let sampler_a = GaussianSampler::new(&kernel_a, seed);
    let sampler_b = GaussianSampler::new(&kernel_b, seed ^ 0x9e37_79b9_7f4a_7c15);

    let coeffs: Vec<f64> = chi.iter().map(|(_, _, c)| *c).collect();
    let scale = 1.0 / (n * m) as f64;
    let mut accs: Vec<Vec<Vec<Vec<Accumulator>>>> = (0..nx)
        .map(|_| {
            (0..ny)
                .map(|_| {
                    (0..n).map(|_| (0..m).map(|_| Accumulator::new()).collect()).collect()
                })
                .collect()
        })
        .collect();

    let mut rng_a = sampler_a.stream_rng(0);
    let mut rng_b = sampler_b.stream_rng(0);
    for _ in 0..count {
        let z = sampler_a.draw_one(&mut rng_a);
        let w = sampler_b.draw_one(&mut rng_b);
        let f_base: f64 =
            (0..coeffs.len()).map(|c| coeffs[c] * z[base_a[c]] * w[base_b[c]]).sum();
        for (x, row) in accs.iter_mut().enumerate() {
            for (y, table) in row.iter_mut().enumerate() {
                for (j, trow) in table.iter_mut().enumerate() {
                    for (k, acc) in trow.iter_mut().enumerate() {
                        let f_shift: f64 = (0..coeffs.len())
                            .map(|c| {
                                coeffs[c] * z[shifted_a[x][j][c]] * w[shifted_b[y][k][c]]
                            })
                            .sum();
                        acc.push(scale * f_shift * f_base);
                    }
                }
            }
        }
    }

    let tables = accs
        .iter()
        .map(|row| {
            row.iter()
                .map(|table| Mat::from_fn(n, m, |j, k| C64::new(table[j][k].mean(), 0.0)))
                .collect()
        })
        .collect();
    let standard_errors = accs
        .iter()
        .map(|row| {
            row.iter()
                .map(|table| {
                    table
                        .iter()
                        .map(|trow| trow.iter().map(|a| a.standard_error()).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(RealizationEstimate {
        estimate: DualCorrelationTable::from_tables(tables),
        standard_errors,
        samples: count,
    })
}

fn index_or_insert(words: &mut Vec<GroupWord>, word: GroupWord) -> usize {
    if let Some(i) = words.iter().position(|w| *w == word) {
        i
    } else {
        words.push(word);
        words.len() - 1
    }
}

/// <U_g base, U_h base> for a real representation.
pub fn pair_overlap(
    rep: &impl Fn(&GroupWord) -> Mat,
    base: &[f64],
    g: &GroupWord,
    h: &GroupWord,
) -> f64 {
    let vg = apply_real(&rep(g), base);
    let vh = apply_real(&rep(h), base);
    vg.iter().zip(&vh).map(|(a, b)| a * b).sum()
}

// ---------------------------------------------------------------------------
// The CHSH realization data
// ---------------------------------------------------------------------------

/// Everything needed to run the CHSH Gaussian realization: the two free
/// products Z_2 * Z_2, the angular wheels at the optimal angles, the base
/// vectors, and the two-term chi expressing the entangled state from
/// shifted product vectors.
pub struct ChshGaussSetup {
    pub group_a: FreeProduct,
    pub group_b: FreeProduct,
    pub wheels_a: Vec<Wheel>,
    pub wheels_b: Vec<Wheel>,
    pub rho: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub chi: ChiCoefficients,
}

impl ChshGaussSetup {
    pub fn new() -> Self {
        use crate::quantum::{angular_pvm, AngularAssignment};
        let angles = AngularAssignment::optimal();
        let wheels_a: Vec<Wheel> = angles
            .theta
            .iter()
            .map(|&t| crate::duality::wheel_from_pvm(&angular_pvm(t)))
            .collect();
        let wheels_b: Vec<Wheel> = angles
            .eta
            .iter()
            .map(|&t| crate::duality::wheel_from_pvm(&angular_pvm(t)))
            .collect();
        let group = FreeProduct::cyclic_factors(2, 2);
        // rho = vartheta at angle pi/12: the reflections of Alice's second
        // question (axis angle 2pi/3) and Bob's second question (axis angle
        // -pi/3) move it to opposite unit vectors, which makes
        // (rho ⊗ rho - (a1 rho) ⊗ (b1 rho))/√2 the maximally correlated
        // state.
        let a = std::f64::consts::PI / 12.0;
        let rho = vec![a.cos(), a.sin()];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let chi = vec![
            (GroupWord::identity(), GroupWord::identity(), r),
            (GroupWord::generator(&group, 1, 1), GroupWord::generator(&group, 1, 1), -r),
        ];
        ChshGaussSetup {
            group_a: group.clone(),
            group_b: group,
            wheels_a,
            wheels_b,
            rho: rho.clone(),
            vartheta: rho,
            chi,
        }
    }

    pub fn rep_a(&self) -> impl Fn(&GroupWord) -> Mat + '_ {
        wheel_word_rep(&self.wheels_a, 2)
    }

    pub fn rep_b(&self) -> impl Fn(&GroupWord) -> Mat + '_ {
        wheel_word_rep(&self.wheels_b, 2)
    }

    /// The exact dual correlation table the Monte Carlo estimate targets.
    pub fn exact_dual_table(&self) -> DualCorrelationTable {
        let delta = crate::quantum::delta_wavefunction();
        crate::duality::eval_unitary_spatial(&self.wheels_a, &self.wheels_b, &delta)
            .expect("angular wheels act on dimension 2x2")
    }
}

impl Default for ChshGaussSetup {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{fourier_transform_2d, BareStrategy};
    use crate::quantum::{angular_chsh_strategy, AngularAssignment};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn z2_free_square() -> FreeProduct {
        FreeProduct::cyclic_factors(2, 2)
    }

    #[test]
    fn cyclic_exponents_cancel() {
        let group = FreeProduct::new(vec![3]);
        let a = GroupWord::generator(&group, 0, 2);
        let b = GroupWord::generator(&group, 0, 1);
        assert!(word_multiply(&group, &a, &b).is_identity());
    }

    #[test]
    fn distinct_factors_do_not_cancel() {
        let group = z2_free_square();
        let a = GroupWord::generator(&group, 0, 1);
        let b = GroupWord::generator(&group, 1, 1);
        assert_eq!(word_multiply(&group, &a, &b).len(), 2);
    }

    #[test]
    fn inverses_cancel_with_cascade() {
        let group = z2_free_square();
        let a = GroupWord::generator(&group, 0, 1);
        let b = GroupWord::generator(&group, 1, 1);
        let ab = word_multiply(&group, &a, &b);
        let inv = word_inverse(&group, &ab);
        assert!(word_multiply(&group, &ab, &inv).is_identity());
    }

    #[test]
    fn word_count_in_z2_star_z2() {
        let group = z2_free_square();
        assert_eq!(enumerate_words(&group, 0).unwrap().len(), 1);
        assert_eq!(enumerate_words(&group, 2).unwrap().len(), 5);
        assert_eq!(enumerate_words(&group, 4).unwrap().len(), 9);
    }

    #[test]
    fn single_cyclic_factor_is_the_whole_group() {
        let group = FreeProduct::new(vec![3]);
        assert_eq!(enumerate_words(&group, 2).unwrap().len(), 3);
    }

    #[test]
    fn max_length_guard() {
        let group = z2_free_square();
        assert!(matches!(enumerate_words(&group, 7), Err(Error::WordExplosion(_))));
    }

    #[test]
    fn multiplication_is_associative_on_random_triples() {
        let group = FreeProduct::new(vec![2, 3, 4]);
        let words = enumerate_words(&group, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        use rand::Rng;
        for _ in 0..200 {
            let a = &words[rng.gen_range(0..words.len())];
            let b = &words[rng.gen_range(0..words.len())];
            let c = &words[rng.gen_range(0..words.len())];
            let left = word_multiply(&group, &word_multiply(&group, a, b), c);
            let right = word_multiply(&group, a, &word_multiply(&group, b, c));
            assert_eq!(left, right);
        }
    }

    #[test]
    fn kernel_of_identity_word_is_one() {
        let setup = ChshGaussSetup::new();
        let kernel =
            build_kernel(&setup.group_a, &setup.rep_a(), &setup.rho, &[GroupWord::identity()])
                .unwrap();
        assert!((kernel.entry(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chsh_kernel_entries_are_cosines_of_reflection_moves() {
        // Wheels at angles (0, pi/3) acting on i: the one-symbol words are
        // reflections, so kernel entries are inner products of unit vectors
        // at known angles.
        use crate::quantum::angular_pvm;
        let wheels: Vec<Wheel> = [0.0, std::f64::consts::PI / 3.0]
            .iter()
            .map(|&t| crate::duality::wheel_from_pvm(&angular_pvm(t)))
            .collect();
        let group = z2_free_square();
        let rep = wheel_word_rep(&wheels, 2);
        let psi = vec![1.0, 0.0];
        let words = enumerate_words(&group, 1).unwrap();
        let kernel = build_kernel(&group, &rep, &psi, &words).unwrap();
        // U_{x0} i = i (reflection through angle 0); U_{x1} i is the unit
        // vector at angle 2pi/3.
        assert!((kernel.entry(0, 1) - 1.0).abs() < 1e-12);
        assert!((kernel.entry(0, 2) + 0.5).abs() < 1e-12);
        assert!((kernel.entry(1, 2) + 0.5).abs() < 1e-12);
        assert!(kernel.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn random_wheel_kernels_are_psd() {
        let mut rng = StdRng::seed_from_u64(31);
        let group = FreeProduct::cyclic_factors(2, 3);
        for _ in 0..50 {
            let wheels: Vec<Wheel> = (0..2)
                .map(|_| {
                    crate::duality::wheel_from_pvm(&crate::random::random_pvm(&mut rng, 3, 3))
                })
                .collect();
            // Realify the complex wheel representation.
            let rep = |w: &GroupWord| realify_operator(&wheel_word_rep(&wheels, 3)(w));
            let psi = realify_vector(crate::random::random_wavefunction(&mut rng, 3).amplitudes());
            let words = enumerate_words(&group, 2).unwrap();
            let kernel = build_kernel(&group, &rep, &psi, &words).unwrap();
            assert!(kernel.min_eigenvalue() > -1e-9);
        }
    }

    #[test]
    fn non_multiplicative_rep_is_rejected() {
        let group = z2_free_square();
        // A non-involutive rotation breaks the Z_2 factor law.
        let rot = Mat::from_real_rows(vec![vec![0.6, -0.8], vec![0.8, 0.6]]);
        let rep = move |w: &GroupWord| {
            let mut out = Mat::identity(2);
            for _ in w.letters() {
                out = out.matmul(&rot);
            }
            out
        };
        let words = enumerate_words(&group, 2).unwrap();
        let err = build_kernel(&group, &rep, &[1.0, 0.0], &words).unwrap_err();
        assert!(matches!(err, Error::NonMultiplicativeRep(_)));
    }

    #[test]
    fn identity_kernel_samples_standard_normals() {
        let group = z2_free_square();
        let kernel = CovarianceKernel::from_parts(
            vec![GroupWord::identity(), GroupWord::generator(&group, 0, 1)],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let sampler = GaussianSampler::new(&kernel, 0xC0FFEE);
        assert_eq!(sampler.rank(), 2);
        let n = 1_000_000;
        let samples = sampler.sample(n, 0);
        let mut cov = [[0.0f64; 2]; 2];
        let mut mean = [0.0f64; 2];
        for z in &samples {
            for i in 0..2 {
                mean[i] += z[i];
                for j in 0..2 {
                    cov[i][j] += z[i] * z[j];
                }
            }
        }
        for i in 0..2 {
            mean[i] /= n as f64;
            assert!(mean[i].abs() < 4.0 / (n as f64).sqrt());
            for j in 0..2 {
                cov[i][j] /= n as f64;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((cov[i][j] - expected).abs() < 0.01, "cov[{i}][{j}] = {}", cov[i][j]);
            }
        }
    }

    #[test]
    fn rank_one_kernel_forces_equal_coordinates() {
        let group = z2_free_square();
        let kernel = CovarianceKernel::from_parts(
            vec![GroupWord::identity(), GroupWord::generator(&group, 0, 1)],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        );
        let sampler = GaussianSampler::new(&kernel, 7);
        assert_eq!(sampler.rank(), 1);
        assert!(sampler.factor_residual(&kernel) < 1e-9);
        // One factor column means the coordinates are a deterministic
        // multiple of a single normal draw; the eigenvector entries agree
        // to rounding error, so the coordinates do too.
        for z in sampler.sample(1000, 0) {
            assert!((z[0] - z[1]).abs() <= 8.0 * f64::EPSILON * z[0].abs().max(1.0));
        }
    }

    #[test]
    fn seed_determinism_and_stream_independence() {
        let kernel =
            CovarianceKernel::from_parts(vec![GroupWord::identity()], vec![vec![1.0]]);
        let a = GaussianSampler::new(&kernel, 42).sample(100, 0);
        let b = GaussianSampler::new(&kernel, 42).sample(100, 0);
        assert_eq!(a, b);
        let c = GaussianSampler::new(&kernel, 42).sample(100, 1);
        assert_ne!(a, c);
        let mut sampler = GaussianSampler::new(&kernel, 42);
        assert_eq!(sampler.next_stream(), 0);
        assert_eq!(sampler.next_stream(), 1);
    }

    #[test]
    fn mc_correlation_recovers_unit_diagonal() {
        let kernel =
            CovarianceKernel::from_parts(vec![GroupWord::identity()], vec![vec![1.0]]);
        let sampler = GaussianSampler::new(&kernel, 0xC0FFEE);
        let (est, se) = mc_correlation(&sampler, 0, 0, 200_000, 0);
        assert!((est - 1.0).abs() <= 4.0 * se, "est {est} se {se}");
    }

    #[test]
    fn cross_correlations_between_independent_blocks_vanish() {
        // Spatial coordinates are indexed by the disjoint union of the two
        // players' word sets: a block-diagonal kernel, so mixed
        // correlations are products of means, i.e. zero.
        let setup = ChshGaussSetup::new();
        let words = enumerate_words(&setup.group_a, 1).unwrap();
        let ka = build_kernel(&setup.group_a, &setup.rep_a(), &setup.rho, &words).unwrap();
        let kb = build_kernel(&setup.group_b, &setup.rep_b(), &setup.vartheta, &words).unwrap();
        let d = ka.dim();
        let mut joint = vec![vec![0.0; 2 * d]; 2 * d];
        for i in 0..d {
            for j in 0..d {
                joint[i][j] = ka.entry(i, j);
                joint[d + i][d + j] = kb.entry(i, j);
            }
        }
        let mut joint_words = ka.words().to_vec();
        joint_words.extend(kb.words().iter().cloned());
        let kernel = CovarianceKernel::from_parts(joint_words, joint);
        let sampler = GaussianSampler::new(&kernel, 17);
        let (est, se) = mc_correlation(&sampler, 1, d + 2, 200_000, 0);
        assert!(est.abs() <= 4.0 * se, "cross correlation {est} vs SE {se}");
        // Fourth moments inherit the vanishing: a zero kernel entry on the
        // first factor centers the whole product moment.
        let sb = GaussianSampler::new(&kb, 19);
        let (est4, se4) = mc_fourth_moment(&sampler, &sb, 1, d + 2, 0, 1, 200_000, (2, 0));
        assert!(est4.abs() <= 4.0 * se4, "fourth moment {est4} vs SE {se4}");
    }

    #[test]
    fn standard_error_scales_as_inverse_sqrt_n() {
        let kernel =
            CovarianceKernel::from_parts(vec![GroupWord::identity()], vec![vec![1.0]]);
        let sampler = GaussianSampler::new(&kernel, 5);
        let (_, se_n) = mc_correlation(&sampler, 0, 0, 50_000, 0);
        let (_, se_4n) = mc_correlation(&sampler, 0, 0, 200_000, 1);
        let ratio = se_4n / se_n;
        assert!((ratio - 0.5).abs() < 0.15, "ratio {ratio}");
    }

    #[test]
    fn fourth_moment_factorizes() {
        let setup = ChshGaussSetup::new();
        let words = enumerate_words(&setup.group_a, 2).unwrap();
        let kernel_a = build_kernel(&setup.group_a, &setup.rep_a(), &setup.rho, &words).unwrap();
        let kernel_b =
            build_kernel(&setup.group_b, &setup.rep_b(), &setup.vartheta, &words).unwrap();
        let sa = GaussianSampler::new(&kernel_a, 1);
        let sb = GaussianSampler::new(&kernel_b, 2);
        // Diagonal: expectation p_A(g,g) p_B(h,h) = 1.
        let (est, se) = mc_fourth_moment(&sa, &sb, 0, 0, 0, 0, 200_000, (0, 0));
        assert!((est - 1.0).abs() <= 4.0 * se + 0.01, "est {est} se {se}");
        // Factorization against the kernels on off-diagonal pairs.
        let (est2, se2) = mc_fourth_moment(&sa, &sb, 0, 2, 1, 3, 200_000, (1, 1));
        let expected = kernel_a.entry(0, 2) * kernel_b.entry(1, 3);
        assert!((est2 - expected).abs() <= 4.0 * se2 + 0.01);
    }

    #[test]
    fn chsh_chi_represents_the_entangled_state() {
        // psi = (rho ⊗ vartheta - (a1 rho) ⊗ (b1 vartheta))/√2 equals the
        // maximally correlated two-qubit state.
        let setup = ChshGaussSetup::new();
        let rep_a = setup.rep_a();
        let rep_b = setup.rep_b();
        let mut psi = vec![0.0f64; 4];
        for (g, h, c) in &setup.chi {
            let ug = rep_a(g);
            let uh = rep_b(h);
            let va = apply_real(&ug, &setup.rho);
            let vb = apply_real(&uh, &setup.vartheta);
            for i in 0..2 {
                for j in 0..2 {
                    psi[i * 2 + j] += c * va[i] * vb[j];
                }
            }
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [r, 0.0, 0.0, r];
        for i in 0..4 {
            assert!((psi[i] - expected[i]).abs() < 1e-12, "psi = {psi:?}");
        }
    }

    #[test]
    fn exact_dual_table_is_the_fourier_transform_of_the_angular_table() {
        let setup = ChshGaussSetup::new();
        let exact = setup.exact_dual_table();
        let angular: BareStrategy = angular_chsh_strategy(&AngularAssignment::optimal());
        for x in 0..2 {
            for y in 0..2 {
                let phat =
                    fourier_transform_2d(&Mat::from_real_rows(angular.table(x, y).clone()));
                assert!(exact.table(x, y).max_abs_diff(&phat) < 1e-12);
            }
        }
    }

    #[test]
    fn product_chi_gives_the_product_strategy() {
        let setup = ChshGaussSetup::new();
        let chi = vec![(GroupWord::identity(), GroupWord::identity(), 1.0)];
        let words_a = enumerate_words(&setup.group_a, 1).unwrap();
        let words_b = enumerate_words(&setup.group_b, 1).unwrap();
        let result = realize_spatial_strategy_mc(
            &setup.group_a,
            &setup.group_b,
            &setup.rep_a(),
            &setup.rep_b(),
            &chi,
            &setup.rho,
            &setup.vartheta,
            &words_a,
            &words_b,
            120_000,
            11,
        )
        .unwrap();
        let rep_a = setup.rep_a();
        let rep_b = setup.rep_b();
        for x in 0..2 {
            for y in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let ga = GroupWord::generator(&setup.group_a, x, j as u32);
                        let gb = GroupWord::generator(&setup.group_b, y, k as u32);
                        let pa = pair_overlap(&rep_a, &setup.rho, &ga, &GroupWord::identity());
                        let pb =
                            pair_overlap(&rep_b, &setup.vartheta, &gb, &GroupWord::identity());
                        let expected = 0.25 * pa * pb;
                        let got = result.estimate.table(x, y)[(j, k)].re;
                        let se = result.standard_errors[x][y][j][k];
                        assert!(
                            (got - expected).abs() <= 4.0 * se + 0.01,
                            "entry ({x},{y},{j},{k}): got {got}, expected {expected}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn chsh_realization_tracks_the_exact_dual_table_at_moderate_n() {
        let setup = ChshGaussSetup::new();
        let words_a = enumerate_words(&setup.group_a, 2).unwrap();
        let words_b = enumerate_words(&setup.group_b, 2).unwrap();
        let result = realize_spatial_strategy_mc(
            &setup.group_a,
            &setup.group_b,
            &setup.rep_a(),
            &setup.rep_b(),
            &setup.chi,
            &setup.rho,
            &setup.vartheta,
            &words_a,
            &words_b,
            150_000,
            0xC0FFEE,
        )
        .unwrap();
        let exact = setup.exact_dual_table();
        for x in 0..2 {
            for y in 0..2 {
                let diff = result.estimate.table(x, y).max_abs_diff(exact.table(x, y));
                assert!(diff < 0.05, "({x},{y}): diff {diff}");
            }
        }
    }

    #[test]
    fn non_unit_chi_is_rejected() {
        let setup = ChshGaussSetup::new();
        let chi = vec![(GroupWord::identity(), GroupWord::identity(), 2.0)];
        let words = enumerate_words(&setup.group_a, 1).unwrap();
        let err = realize_spatial_strategy_mc(
            &setup.group_a,
            &setup.group_b,
            &setup.rep_a(),
            &setup.rep_b(),
            &chi,
            &setup.rho,
            &setup.vartheta,
            &words,
            &words,
            10,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn realify_preserves_products_and_norms() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = crate::random::random_unitary(&mut rng, 3);
        let b = crate::random::random_unitary(&mut rng, 3);
        let lhs = realify_operator(&a.matmul(&b));
        let rhs = realify_operator(&a).matmul(&realify_operator(&b));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let psi = crate::random::random_wavefunction(&mut rng, 3);
        let real = realify_vector(psi.amplitudes());
        let norm: f64 = real.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
