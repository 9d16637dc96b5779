//! Finite sample spaces and observables: size-n equivalence classes with
//! class-bijective labels, partial-averaging and observation operators,
//! consistency witnesses, lifts to product spaces, and the statistical
//! commuting/spatial strategy evaluators.
//!
//! Internally labels are 0-based; the JSON interchange format uses 1-based
//! labels. Observation matrices act classwise and classes carry equal
//! weights, so they are symmetric in both the weighted and the standard
//! inner product.

use crate::error::{Error, Result};
use crate::games::BareStrategy;
use crate::linalg::{Mat, C64};
use crate::quantum::{ProjectionValuedMeasure, Wavefunction};
use crate::rational::Frac;
use serde::{Deserialize, Serialize};

pub const SPACE_TOL: f64 = 1e-12;
pub const WAVEFUNCTION_TOL: f64 = 1e-10;
pub const ANNIHILATION_TOL: f64 = 1e-10;

/// A finite probability space: positive weights summing to one. The ambient
/// total order is the atom list order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSampleSpace {
    weights: Vec<f64>,
}

impl FiniteSampleSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| w <= 0.0) {
            return Err(Error::InvalidSpace(format!("weight[{i}] = {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SPACE_TOL {
            return Err(Error::InvalidSpace(format!("weights sum to {total}, expected 1")));
        }
        Ok(FiniteSampleSpace { weights })
    }

    pub fn uniform(atoms: usize) -> Self {
        FiniteSampleSpace { weights: vec![1.0 / atoms as f64; atoms] }
    }

    pub fn atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, u: usize) -> f64 {
        self.weights[u]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Product space; atom (s,t) maps to index s * other.atoms() + t.
    pub fn product(&self, other: &FiniteSampleSpace) -> FiniteSampleSpace {
        let mut weights = Vec::with_capacity(self.atoms() * other.atoms());
        for &a in &self.weights {
            for &b in &other.weights {
                weights.push(a * b);
            }
        }
        FiniteSampleSpace { weights }
    }

    /// Weighted inner product Σ_u μ(u) f(u) conj(g(u)).
    pub fn dot(&self, f: &[C64], g: &[C64]) -> C64 {
        assert_eq!(f.len(), self.atoms());
        assert_eq!(g.len(), self.atoms());
        f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((a, b), &w)| a * b.conj() * w)
            .sum()
    }

    pub fn norm(&self, f: &[C64]) -> f64 {
        self.dot(f, f).re.max(0.0).sqrt()
    }

    /// Multiplies each coordinate by sqrt(weight): isometry from L2(mu) to
    /// the standard inner product.
    pub fn standardize(&self, f: &[C64]) -> Vec<C64> {
        f.iter().zip(&self.weights).map(|(a, &w)| a * w.sqrt()).collect()
    }
}

/// An observable of resolution n: a partition into classes of size exactly
/// n with a class-bijective label map. Classes are stored in label order,
/// so `classes[c][k]` is the atom labeled k.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    atoms: usize,
    resolution: usize,
    classes: Vec<Vec<usize>>,
    labels: Vec<usize>,
}

impl Observable {
    pub fn new(
        space: &FiniteSampleSpace,
        resolution: usize,
        classes: Vec<Vec<usize>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let atoms = space.atoms();
        if resolution == 0 {
            return Err(Error::InvalidObservable {
                invariant: "resolution".into(),
                detail: "resolution must be >= 1".into(),
            });
        }
        if labels.len() != atoms {
            return Err(Error::InvalidObservable {
                invariant: "labels".into(),
                detail: format!("{} labels for {atoms} atoms", labels.len()),
            });
        }
        let mut seen = vec![false; atoms];
        for class in &classes {
            if class.len() != resolution {
                return Err(Error::InvalidObservable {
                    invariant: "class-size".into(),
                    detail: format!("class of size {} != resolution {resolution}", class.len()),
                });
            }
            let mut label_seen = vec![false; resolution];
            for &u in class {
                if u >= atoms {
                    return Err(Error::InvalidObservable {
                        invariant: "classes".into(),
                        detail: format!("atom index {u} out of range"),
                    });
                }
                if seen[u] {
                    return Err(Error::InvalidObservable {
                        invariant: "partition".into(),
                        detail: format!("atom {u} appears twice"),
                    });
                }
                seen[u] = true;
                let l = labels[u];
                if l >= resolution {
                    return Err(Error::InvalidObservable {
                        invariant: "labels".into(),
                        detail: format!("label {l} out of range for atom {u}"),
                    });
                }
                if label_seen[l] {
                    return Err(Error::InvalidObservable {
                        invariant: "class-bijective".into(),
                        detail: format!("label {l} repeated within a class"),
                    });
                }
                label_seen[l] = true;
            }
            let w0 = space.weight(class[0]);
            for &u in class {
                if (space.weight(u) - w0).abs() > SPACE_TOL {
                    return Err(Error::InvalidObservable {
                        invariant: "equal-weights".into(),
                        detail: format!(
                            "atoms {} and {u} in one class have weights {w0} and {}",
                            class[0],
                            space.weight(u)
                        ),
                    });
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidObservable {
                invariant: "partition".into(),
                detail: "classes do not cover all atoms".into(),
            });
        }
        // Reorder each class by label.
        let classes = classes
            .into_iter()
            .map(|mut class| {
                class.sort_by_key(|&u| labels[u]);
                class
            })
            .collect();
        Ok(Observable { atoms, resolution, classes, labels })
    }

    /// Resolution-1 observable: every atom its own class.
    pub fn resolution_one(space: &FiniteSampleSpace) -> Self {
        let atoms = space.atoms();
        Observable {
            atoms,
            resolution: 1,
            classes: (0..atoms).map(|u| vec![u]).collect(),
            labels: vec![0; atoms],
        }
    }

    /// One class covering the whole space, labeled by `labels`.
    pub fn single_class(space: &FiniteSampleSpace, labels: Vec<usize>) -> Result<Self> {
        let atoms = space.atoms();
        Observable::new(space, atoms, vec![(0..atoms).collect()], labels)
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// The partial averaging operator I_k ⊕ A_{n-k}: identity on the first k
/// coordinates, mean of the remaining n-k on the rest.
pub fn partial_average(k: usize, n: usize, f: &[C64]) -> Result<Vec<C64>> {
    if k > n {
        return Err(Error::OrderOutOfRange { k: k as i64, n });
    }
    if f.len() != n {
        return Err(Error::ShapeMismatch(format!("vector length {} != {n}", f.len())));
    }
    let mut out = f.to_vec();
    if k < n {
        let tail = &f[k..];
        let mean: C64 = tail.iter().sum::<C64>() / (tail.len() as f64);
        out[k..].iter_mut().for_each(|x| *x = mean);
    }
    Ok(out)
}

/// Exact-rational partial averaging, same contract as [`partial_average`].
pub fn partial_average_exact(k: usize, n: usize, f: &[Frac]) -> Vec<Frac> {
    assert!(k <= n && f.len() == n);
    let mut out = f.to_vec();
    if k < n {
        let mean = crate::rational::mean(&f[k..]);
        out[k..].iter_mut().for_each(|x| *x = mean);
    }
    out
}

/// The observation operator O_{alpha,k} applied to f: restricts to the
/// partial averaging operator on each class, ordered by the labels.
/// `k = -1` is the zero operator.
pub fn observation_apply(
    space: &FiniteSampleSpace,
    alpha: &Observable,
    k: i64,
    f: &[C64],
) -> Result<Vec<C64>> {
    let n = alpha.resolution();
    if !(-1..=n as i64).contains(&k) {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if f.len() != space.atoms() || alpha.atoms() != space.atoms() {
        return Err(Error::SpaceMismatch(format!(
            "function over {} atoms, observable over {}, space has {}",
            f.len(),
            alpha.atoms(),
            space.atoms()
        )));
    }
    if k == -1 {
        return Ok(vec![C64::new(0.0, 0.0); f.len()]);
    }
    let k = k as usize;
    let mut out = f.to_vec();
    for class in alpha.classes() {
        if k < n {
            let mean: C64 =
                class[k..].iter().map(|&u| f[u]).sum::<C64>() / ((n - k) as f64);
            for &u in &class[k..] {
                out[u] = mean;
            }
        }
    }
    Ok(out)
}

/// Exact-rational observation operator (weights play no role in the
/// operator itself).
pub fn observation_apply_exact(alpha: &Observable, k: i64, f: &[Frac]) -> Vec<Frac> {
    let n = alpha.resolution();
    assert!((-1..=n as i64).contains(&k));
    if k == -1 {
        return vec![Frac::ZERO; f.len()];
    }
    let k = k as usize;
    let mut out = f.to_vec();
    for class in alpha.classes() {
        if k < n {
            let tail: Vec<Frac> = class[k..].iter().map(|&u| f[u]).collect();
            let mean = crate::rational::mean(&tail);
            for &u in &class[k..] {
                out[u] = mean;
            }
        }
    }
    out
}

/// O_{alpha,k} as a matrix. Since classes carry equal weights and the
/// operator acts classwise, the matrix is symmetric in the standard inner
/// product as well as the weighted one.
pub fn observation_matrix(space: &FiniteSampleSpace, alpha: &Observable, k: i64) -> Result<Mat> {
    let n = alpha.resolution();
    if !(-1..=n as i64).contains(&k) {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if alpha.atoms() != space.atoms() {
        return Err(Error::SpaceMismatch("observable does not live on this space".into()));
    }
    let d = space.atoms();
    let mut m = Mat::zeros(d, d);
    if k == -1 {
        return Ok(m);
    }
    let k = k as usize;
    for class in alpha.classes() {
        for (pos, &u) in class.iter().enumerate() {
            if pos < k {
                m[(u, u)] = C64::new(1.0, 0.0);
            } else {
                let c = C64::new(1.0 / (n - k) as f64, 0.0);
                for &v in &class[k..] {
                    m[(u, v)] = c;
                }
            }
        }
    }
    Ok(m)
}

/// A threshold ladder t_0 <= ... <= t_r with t_r = resolution - 1, mapping
/// answer i (1-based position) to the projection O_{t_i} - O_{t_{i-1}}.
/// The default ladder (-1, 0, ..., n-1) has one answer per resolution step.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    thresholds: Vec<i64>,
}

impl Ladder {
    pub fn new(thresholds: Vec<i64>, resolution: usize) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::InvalidLadder("need at least two thresholds".into()));
        }
        if thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidLadder(format!("not nondecreasing: {thresholds:?}")));
        }
        if thresholds[0] < -1 {
            return Err(Error::InvalidLadder(format!("t_0 = {} < -1", thresholds[0])));
        }
        let top = *thresholds.last().unwrap();
        if top != resolution as i64 - 1 {
            return Err(Error::InvalidLadder(format!(
                "t_last = {top}, expected resolution - 1 = {}",
                resolution as i64 - 1
            )));
        }
        Ok(Ladder { thresholds })
    }

    /// The ladder (-1, 0, 1, ..., n-1): answers in bijection with the
    /// resolution steps.
    pub fn default_for(resolution: usize) -> Self {
        Ladder { thresholds: (-1..resolution as i64).collect() }
    }

    pub fn answers(&self) -> usize {
        self.thresholds.len() - 1
    }

    pub fn base_threshold(&self) -> i64 {
        self.thresholds[0]
    }

    pub fn thresholds(&self) -> &[i64] {
        &self.thresholds
    }

    /// Applies each ladder difference O_{t_i} - O_{t_{i-1}} to f.
    pub fn apply_differences(
        &self,
        space: &FiniteSampleSpace,
        alpha: &Observable,
        f: &[C64],
    ) -> Result<Vec<Vec<C64>>> {
        let mut prev = observation_apply(space, alpha, self.thresholds[0], f)?;
        let mut out = Vec::with_capacity(self.answers());
        for &t in &self.thresholds[1..] {
            let cur = observation_apply(space, alpha, t, f)?;
            out.push(cur.iter().zip(&prev).map(|(a, b)| a - b).collect());
            prev = cur;
        }
        Ok(out)
    }

    /// The ladder difference projections as matrices.
    pub fn projections(&self, space: &FiniteSampleSpace, alpha: &Observable) -> Result<Vec<Mat>> {
        let mut prev = observation_matrix(space, alpha, self.thresholds[0])?;
        let mut out = Vec::with_capacity(self.answers());
        for &t in &self.thresholds[1..] {
            let cur = observation_matrix(space, alpha, t)?;
            out.push(cur.sub(&prev));
            prev = cur;
        }
        Ok(out)
    }
}

/// Witness of consistency: blocks of size nm saturated under both class
/// structures, with bijective product labels.
#[derive(Debug, Clone)]
pub struct ConsistencyWitness {
    pub blocks: Vec<Vec<usize>>,
    /// (c_alpha, c_beta) per atom, 0-based.
    pub product_labels: Vec<(usize, usize)>,
}

/// Constructs the consistency witness for (alpha, beta) by joining their
/// class partitions, or fails naming the violated requirement. On success
/// each block is a full label grid: every alpha-class is constant in the
/// beta-label and vice versa, which is exactly what makes the observation
/// operators act in separate coordinates (and hence commute).
pub fn check_consistency(
    space: &FiniteSampleSpace,
    alpha: &Observable,
    beta: &Observable,
) -> Result<ConsistencyWitness> {
    if alpha.atoms() != space.atoms() || beta.atoms() != space.atoms() {
        return Err(Error::SpaceMismatch("observables live on different spaces".into()));
    }
    let atoms = space.atoms();
    let (n, m) = (alpha.resolution(), beta.resolution());

    // Join components under "same alpha-class or same beta-class".
    let mut parent: Vec<usize> = (0..atoms).collect();
    fn find(parent: &mut [usize], mut u: usize) -> usize {
        while parent[u] != u {
            parent[u] = parent[parent[u]];
            u = parent[u];
        }
        u
    }
    let union = |parent: &mut [usize], a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    };
    for class in alpha.classes().iter().chain(beta.classes()) {
        for w in class.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }
    let mut blocks_by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for u in 0..atoms {
        let r = find(&mut parent, u);
        blocks_by_root.entry(r).or_default().push(u);
    }

    let mut blocks = Vec::new();
    for (_, block) in blocks_by_root {
        if block.len() != n * m {
            return Err(Error::Inconsistent(format!(
                "saturated block of size {} exists, but size {} = {n}*{m} is required",
                block.len(),
                n * m
            )));
        }
        let mut grid_seen = vec![false; n * m];
        for &u in &block {
            let (la, lb) = (alpha.label(u), beta.label(u));
            if grid_seen[la * m + lb] {
                return Err(Error::Inconsistent(format!(
                    "product label ({la},{lb}) repeated within a block; labels are not jointly bijective"
                )));
            }
            grid_seen[la * m + lb] = true;
        }
        blocks.push(block);
    }

    // Grid structure: beta-labels constant on alpha-classes and conversely.
    for class in alpha.classes() {
        let lb = beta.label(class[0]);
        if class.iter().any(|&u| beta.label(u) != lb) {
            return Err(Error::Inconsistent(
                "an alpha-class crosses beta-label levels; no product identification exists"
                    .into(),
            ));
        }
    }
    for class in beta.classes() {
        let la = alpha.label(class[0]);
        if class.iter().any(|&u| alpha.label(u) != la) {
            return Err(Error::Inconsistent(
                "a beta-class crosses alpha-label levels; no product identification exists"
                    .into(),
            ));
        }
    }

    let product_labels = (0..atoms).map(|u| (alpha.label(u), beta.label(u))).collect();
    Ok(ConsistencyWitness { blocks, product_labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Lifts an observable to the product space Λ × Π (atom (s,t) at index
/// s * |Π| + t). `Side::Left` means alpha lives on Λ, `Side::Right` on Π.
pub fn lift_observable(
    alpha: &Observable,
    lambda: &FiniteSampleSpace,
    pi: &FiniteSampleSpace,
    side: Side,
) -> Observable {
    let (nl, np) = (lambda.atoms(), pi.atoms());
    let product = lambda.product(pi);
    let mut classes = Vec::new();
    let mut labels = vec![0usize; nl * np];
    match side {
        Side::Left => {
            assert_eq!(alpha.atoms(), nl);
            for class in alpha.classes() {
                for t in 0..np {
                    classes.push(class.iter().map(|&s| s * np + t).collect());
                }
            }
            for s in 0..nl {
                for t in 0..np {
                    labels[s * np + t] = alpha.label(s);
                }
            }
        }
        Side::Right => {
            assert_eq!(alpha.atoms(), np);
            for class in alpha.classes() {
                for s in 0..nl {
                    classes.push(class.iter().map(|&t| s * np + t).collect());
                }
            }
            for s in 0..nl {
                for t in 0..np {
                    labels[s * np + t] = alpha.label(t);
                }
            }
        }
    }
    Observable::new(&product, alpha.resolution(), classes, labels)
        .expect("lift of a valid observable is valid")
}

/// Statistical commuting evaluation (eq. of the averaging model): answer
/// projections are consecutive ladder differences of the observation
/// operators, and p_{x,y}(a,b) = <L^x_a f, M^y_b f> in L2(mu).
pub fn eval_statistical_commuting(
    space: &FiniteSampleSpace,
    alphas: &[Observable],
    betas: &[Observable],
    f: &[C64],
    ladder_a: &Ladder,
    ladder_b: &Ladder,
) -> Result<BareStrategy> {
    let nrm = space.norm(f);
    if (nrm - 1.0).abs() > WAVEFUNCTION_TOL {
        return Err(Error::NotNormalized { norm: nrm });
    }
    for alpha in alphas {
        for beta in betas {
            check_consistency(space, alpha, beta)?;
        }
    }
    check_annihilation(space, alphas, ladder_a, f)?;
    check_annihilation(space, betas, ladder_b, f)?;

    let diffs_a: Vec<Vec<Vec<C64>>> = alphas
        .iter()
        .map(|alpha| ladder_a.apply_differences(space, alpha, f))
        .collect::<Result<_>>()?;
    let diffs_b: Vec<Vec<Vec<C64>>> = betas
        .iter()
        .map(|beta| ladder_b.apply_differences(space, beta, f))
        .collect::<Result<_>>()?;

    let tables = diffs_a
        .iter()
        .map(|la| {
            diffs_b
                .iter()
                .map(|mb| {
                    la.iter()
                        .map(|lf| mb.iter().map(|mf| space.dot(lf, mf).re).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let strategy = BareStrategy::from_tables(tables);
    strategy.validate(crate::games::STRUCT_TOL)?;
    Ok(strategy)
}

fn check_annihilation(
    space: &FiniteSampleSpace,
    observables: &[Observable],
    ladder: &Ladder,
    f: &[C64],
) -> Result<()> {
    let t0 = ladder.base_threshold();
    if t0 <= -1 {
        return Ok(());
    }
    for obs in observables {
        let base = observation_apply(space, obs, t0, f)?;
        let nrm = space.norm(&base);
        if nrm > ANNIHILATION_TOL {
            return Err(Error::LadderAnnihilation { threshold: t0, norm: nrm });
        }
    }
    Ok(())
}

/// Statistical spatial evaluation: lifts Alice's observables over Π and
/// Bob's over Λ, then evaluates the commuting formula on the product space.
pub fn eval_statistical_spatial(
    lambda: &FiniteSampleSpace,
    pi: &FiniteSampleSpace,
    alphas: &[Observable],
    betas: &[Observable],
    f: &[C64],
    ladder_a: &Ladder,
    ladder_b: &Ladder,
) -> Result<BareStrategy> {
    if f.len() != lambda.atoms() * pi.atoms() {
        return Err(Error::SpaceMismatch(format!(
            "wavefunction over {} atoms, product space has {}",
            f.len(),
            lambda.atoms() * pi.atoms()
        )));
    }
    let product = lambda.product(pi);
    let lifted_a: Vec<Observable> =
        alphas.iter().map(|a| lift_observable(a, lambda, pi, Side::Left)).collect();
    let lifted_b: Vec<Observable> =
        betas.iter().map(|b| lift_observable(b, lambda, pi, Side::Right)).collect();
    eval_statistical_commuting(&product, &lifted_a, &lifted_b, f, ladder_a, ladder_b)
}

/// Ladder-difference projections together with the standardized
/// wavefunction: the quantum-commuting data a statistical strategy embeds
/// into.
pub fn materialize_pvm(
    space: &FiniteSampleSpace,
    alpha: &Observable,
    ladder: &Ladder,
) -> Result<ProjectionValuedMeasure> {
    let mut projections = ladder.projections(space, alpha)?;
    // A ladder with t_0 > -1 omits the initial averaging projection; add it
    // so the family sums to the identity (it annihilates the wavefunctions
    // these PVMs are used with).
    if ladder.base_threshold() > -1 {
        projections.insert(0, observation_matrix(space, alpha, ladder.base_threshold())?);
    }
    ProjectionValuedMeasure::new(projections)
}

pub fn materialize_wavefunction(space: &FiniteSampleSpace, f: &[C64]) -> Result<Wavefunction> {
    Wavefunction::new(space.standardize(f))
}

// ---------------------------------------------------------------------------
// The packaged noncommutation witness (3 atoms, reversed labels)
// ---------------------------------------------------------------------------

/// The 3-atom counterexample: forward and reversed labels on one class, and
/// the step function f = (1, -1, 0).
pub fn reversed_labels_example() -> (FiniteSampleSpace, Observable, Observable, Vec<C64>) {
    let space = FiniteSampleSpace::uniform(3);
    let alpha = Observable::single_class(&space, vec![0, 1, 2]).unwrap();
    let beta = Observable::single_class(&space, vec![2, 1, 0]).unwrap();
    let f = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 0.0)];
    (space, alpha, beta, f)
}

/// Evaluates both composites of the witness at the third atom in exact
/// rational arithmetic. Returns (O_{beta,1} O_{alpha,1} f, O_{alpha,1}
/// O_{beta,1} f) at that atom; the values are -1/2 and 0.
pub fn reversed_labels_witness_exact() -> (Frac, Frac) {
    let space = FiniteSampleSpace::uniform(3);
    let alpha = Observable::single_class(&space, vec![0, 1, 2]).unwrap();
    let beta = Observable::single_class(&space, vec![2, 1, 0]).unwrap();
    let f = vec![Frac::ONE, -Frac::ONE, Frac::ZERO];
    let ba = observation_apply_exact(&beta, 1, &observation_apply_exact(&alpha, 1, &f));
    let ab = observation_apply_exact(&alpha, 1, &observation_apply_exact(&beta, 1, &f));
    (ba[2], ab[2])
}

// ---------------------------------------------------------------------------
// JSON interchange format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ObservableJson {
    weights: Vec<f64>,
    classes: Vec<Vec<usize>>,
    /// 1-based labels, matching the mathematical convention.
    labels: Vec<usize>,
}

pub fn parse_observable(json: &str) -> Result<(FiniteSampleSpace, Observable)> {
    let raw: ObservableJson =
        serde_json::from_str(json).map_err(|e| Error::Json(format!("observable: {e}")))?;
    let space = FiniteSampleSpace::new(raw.weights)?;
    let resolution = raw.classes.first().map(|c| c.len()).unwrap_or(0);
    let labels = raw
        .labels
        .iter()
        .map(|&l| {
            if l == 0 {
                Err(Error::InvalidObservable {
                    invariant: "labels".into(),
                    detail: "labels are 1-based in JSON".into(),
                })
            } else {
                Ok(l - 1)
            }
        })
        .collect::<Result<Vec<usize>>>()?;
    let obs = Observable::new(&space, resolution, raw.classes, labels)?;
    Ok((space, obs))
}

pub fn observable_to_json(space: &FiniteSampleSpace, alpha: &Observable) -> String {
    let raw = ObservableJson {
        weights: space.weights().to_vec(),
        classes: alpha.classes().to_vec(),
        labels: alpha.labels().iter().map(|&l| l + 1).collect(),
    };
    serde_json::to_string_pretty(&raw).expect("observable serializes")
}
