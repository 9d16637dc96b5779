//! Nonlocal games, bare strategies, game values, the classical brute force
//! and the 2D Fourier transform on answer tables that every strategy model
//! shares.

use crate::error::{Error, Result};
use crate::linalg::{character, Mat, C64};
use crate::rational::Frac;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Structural tolerance for probability tables.
pub const STRUCT_TOL: f64 = 1e-9;
/// Tolerance for exact-arithmetic comparisons.
pub const EXACT_TOL: f64 = 1e-12;
/// Row-sum tolerance at which evaluation refuses a strategy.
pub const EVAL_TOL: f64 = 1e-6;
/// Default cap on the number of deterministic assignments enumerated.
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e7;

/// A two-player nonlocal game: question sets, answer counts, a question
/// distribution and a 0/1 payoff.
#[derive(Debug, Clone)]
pub struct NonlocalGame {
    questions_a: Vec<String>,
    questions_b: Vec<String>,
    answers_a: usize,
    answers_b: usize,
    /// Question distribution, indexed `[x][y]`.
    pi: Vec<Vec<f64>>,
    /// Payoff, indexed `[x][y][a][b]`, entries 0 or 1.
    payoff: Vec<Vec<Vec<Vec<u8>>>>,
}

impl NonlocalGame {
    pub fn new(
        questions_a: Vec<String>,
        questions_b: Vec<String>,
        answers_a: usize,
        answers_b: usize,
        pi: Vec<Vec<f64>>,
        payoff: Vec<Vec<Vec<Vec<u8>>>>,
    ) -> Result<Self> {
        if answers_a == 0 || answers_b == 0 {
            return Err(Error::InvalidGame("answer counts must be >= 1".into()));
        }
        if questions_a.is_empty() || questions_b.is_empty() {
            return Err(Error::InvalidGame("question sets must be nonempty".into()));
        }
        let (nx, ny) = (questions_a.len(), questions_b.len());
        if pi.len() != nx || pi.iter().any(|row| row.len() != ny) {
            return Err(Error::InvalidGame(format!("pi must be {nx}x{ny}")));
        }
        let mut total = 0.0;
        for (x, row) in pi.iter().enumerate() {
            for (y, &p) in row.iter().enumerate() {
                if p < 0.0 {
                    return Err(Error::InvalidGame(format!("pi[{x}][{y}] = {p} is negative")));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidGame(format!("pi sums to {total}, expected 1")));
        }
        if payoff.len() != nx {
            return Err(Error::InvalidGame("payoff must cover every question pair".into()));
        }
        for (x, by_y) in payoff.iter().enumerate() {
            if by_y.len() != ny {
                return Err(Error::InvalidGame(format!("payoff[{x}] must have {ny} entries")));
            }
            for (y, table) in by_y.iter().enumerate() {
                if table.len() != answers_a || table.iter().any(|r| r.len() != answers_b) {
                    return Err(Error::InvalidGame(format!(
                        "payoff[{x}][{y}] must be {answers_a}x{answers_b}"
                    )));
                }
                for (a, row) in table.iter().enumerate() {
                    for (b, &d) in row.iter().enumerate() {
                        if d > 1 {
                            return Err(Error::InvalidGame(format!(
                                "payoff entry at (x={x}, y={y}, a={a}, b={b}) is {d}, expected 0 or 1"
                            )));
                        }
                    }
                }
            }
        }
        Ok(NonlocalGame { questions_a, questions_b, answers_a, answers_b, pi, payoff })
    }

    /// The CHSH game: binary questions and answers, uniform question
    /// distribution, win condition `x AND y = a XOR b`.
    pub fn chsh() -> Self {
        let labels = vec!["0".to_string(), "1".to_string()];
        let pi = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
        let mut payoff = vec![vec![vec![vec![0u8; 2]; 2]; 2]; 2];
        for x in 0..2usize {
            for y in 0..2usize {
                for a in 0..2usize {
                    for b in 0..2usize {
                        payoff[x][y][a][b] = u8::from((x & y) == (a ^ b));
                    }
                }
            }
        }
        NonlocalGame::new(labels.clone(), labels, 2, 2, pi, payoff).expect("CHSH is valid")
    }

    pub fn questions_a(&self) -> &[String] {
        &self.questions_a
    }

    pub fn questions_b(&self) -> &[String] {
        &self.questions_b
    }

    pub fn answers_a(&self) -> usize {
        self.answers_a
    }

    pub fn answers_b(&self) -> usize {
        self.answers_b
    }

    pub fn pi(&self, x: usize, y: usize) -> f64 {
        self.pi[x][y]
    }

    pub fn payoff(&self, x: usize, y: usize, a: usize, b: usize) -> u8 {
        self.payoff[x][y][a][b]
    }

    fn uniform_pi(&self) -> bool {
        let q = 1.0 / (self.questions_a.len() * self.questions_b.len()) as f64;
        self.pi.iter().flatten().all(|&p| p == q)
    }
}

/// A family of probability tables p_{x,y} on answer pairs, one per question
/// pair. Indexed `[x][y][a][b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BareStrategy {
    tables: Vec<Vec<Vec<Vec<f64>>>>,
}

impl BareStrategy {
    pub fn from_tables(tables: Vec<Vec<Vec<Vec<f64>>>>) -> Self {
        BareStrategy { tables }
    }

    /// The uniform strategy for `game`: every answer pair equally likely.
    pub fn uniform(game: &NonlocalGame) -> Self {
        let p = 1.0 / (game.answers_a * game.answers_b) as f64;
        let table = vec![vec![p; game.answers_b]; game.answers_a];
        BareStrategy {
            tables: vec![vec![table; game.questions_b.len()]; game.questions_a.len()],
        }
    }

    /// The deterministic strategy answering `f(x)` and `g(y)`.
    pub fn deterministic(game: &NonlocalGame, f: &[usize], g: &[usize]) -> Self {
        let mut tables = vec![
            vec![vec![vec![0.0; game.answers_b]; game.answers_a]; game.questions_b.len()];
            game.questions_a.len()
        ];
        for (x, row) in tables.iter_mut().enumerate() {
            for (y, table) in row.iter_mut().enumerate() {
                table[f[x]][g[y]] = 1.0;
            }
        }
        BareStrategy { tables }
    }

    pub fn questions_a(&self) -> usize {
        self.tables.len()
    }

    pub fn questions_b(&self) -> usize {
        self.tables.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn answers_a(&self) -> usize {
        self.tables[0][0].len()
    }

    pub fn answers_b(&self) -> usize {
        self.tables[0][0][0].len()
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.tables[x][y][a][b]
    }

    pub fn table(&self, x: usize, y: usize) -> &Vec<Vec<f64>> {
        &self.tables[x][y]
    }

    pub fn matches_game(&self, game: &NonlocalGame) -> bool {
        self.questions_a() == game.questions_a.len()
            && self.questions_b() == game.questions_b.len()
            && self.answers_a() == game.answers_a
            && self.answers_b() == game.answers_b
    }

    /// Checks entry range and row sums at tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (x, row) in self.tables.iter().enumerate() {
            for (y, table) in row.iter().enumerate() {
                let mut sum = 0.0;
                for (a, r) in table.iter().enumerate() {
                    for (b, &p) in r.iter().enumerate() {
                        if !(-tol..=1.0 + tol).contains(&p) {
                            return Err(Error::InvalidStrategy(format!(
                                "entry p[{x}][{y}]({a},{b}) = {p} outside [0,1]"
                            )));
                        }
                        sum += p;
                    }
                }
                if (sum - 1.0).abs() > tol {
                    return Err(Error::InvalidStrategy(format!(
                        "table ({x},{y}) sums to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &BareStrategy) -> f64 {
        let mut d: f64 = 0.0;
        for x in 0..self.questions_a() {
            for y in 0..self.questions_b() {
                for a in 0..self.answers_a() {
                    for b in 0..self.answers_b() {
                        d = d.max((self.get(x, y, a, b) - other.get(x, y, a, b)).abs());
                    }
                }
            }
        }
        d
    }

    /// Entrywise convex combination `t*self + (1-t)*other`.
    pub fn mix(&self, other: &BareStrategy, t: f64) -> BareStrategy {
        let mut tables = self.tables.clone();
        for (x, row) in tables.iter_mut().enumerate() {
            for (y, table) in row.iter_mut().enumerate() {
                for (a, r) in table.iter_mut().enumerate() {
                    for (b, p) in r.iter_mut().enumerate() {
                        *p = t * *p + (1.0 - t) * other.get(x, y, a, b);
                    }
                }
            }
        }
        BareStrategy { tables }
    }
}

/// Complex answer tables, one per question pair: Fourier transforms of bare
/// strategies, or ergodic correlation tables.
#[derive(Debug, Clone)]
pub struct DualCorrelationTable {
    tables: Vec<Vec<Mat>>,
}

impl DualCorrelationTable {
    pub fn from_tables(tables: Vec<Vec<Mat>>) -> Self {
        DualCorrelationTable { tables }
    }

    pub fn table(&self, x: usize, y: usize) -> &Mat {
        &self.tables[x][y]
    }

    pub fn questions_a(&self) -> usize {
        self.tables.len()
    }

    pub fn questions_b(&self) -> usize {
        self.tables.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn max_abs_diff(&self, other: &DualCorrelationTable) -> f64 {
        let mut d: f64 = 0.0;
        for (x, row) in self.tables.iter().enumerate() {
            for (y, t) in row.iter().enumerate() {
                d = d.max(t.max_abs_diff(other.table(x, y)));
            }
        }
        d
    }

    /// Fourier transform of a real bare strategy, table by table.
    pub fn fourier_of(strategy: &BareStrategy) -> Self {
        let tables = (0..strategy.questions_a())
            .map(|x| {
                (0..strategy.questions_b())
                    .map(|y| {
                        let phi = Mat::from_real_rows(strategy.table(x, y).clone());
                        fourier_transform_2d(&phi)
                    })
                    .collect()
            })
            .collect();
        DualCorrelationTable { tables }
    }

    /// Inverse transform back to a real table; imaginary parts are dropped
    /// (callers assert they are negligible).
    pub fn inverse_fourier(&self) -> BareStrategy {
        let tables = self
            .tables
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| {
                        let phi = inverse_fourier_transform_2d(t);
                        (0..phi.rows())
                            .map(|a| (0..phi.cols()).map(|b| phi[(a, b)].re).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        BareStrategy { tables }
    }

    pub fn max_imag_of_inverse(&self) -> f64 {
        let mut d: f64 = 0.0;
        for row in &self.tables {
            for t in row {
                d = d.max(inverse_fourier_transform_2d(t).max_imag());
            }
        }
        d
    }
}

/// The value of a game at a strategy, a real number in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameValue(pub f64);

/// Expected payoff of `strategy` in `game`:
/// Σ_{x,y} π(x,y) Σ_{a,b} D(x,y,a,b) p_{x,y}(a,b).
pub fn evaluate_game(game: &NonlocalGame, strategy: &BareStrategy) -> Result<GameValue> {
    if !strategy.matches_game(game) {
        return Err(Error::ShapeMismatch(format!(
            "strategy shape ({}x{} questions, {}x{} answers) does not match game ({}x{}, {}x{})",
            strategy.questions_a(),
            strategy.questions_b(),
            strategy.answers_a(),
            strategy.answers_b(),
            game.questions_a.len(),
            game.questions_b.len(),
            game.answers_a,
            game.answers_b,
        )));
    }
    strategy.validate(EVAL_TOL)?;
    let mut value = 0.0;
    for x in 0..game.questions_a.len() {
        for y in 0..game.questions_b.len() {
            let pi = game.pi[x][y];
            if pi == 0.0 {
                continue;
            }
            let mut won = 0.0;
            for a in 0..game.answers_a {
                for b in 0..game.answers_b {
                    if game.payoff[x][y][a][b] == 1 {
                        won += strategy.get(x, y, a, b);
                    }
                }
            }
            value += pi * won;
        }
    }
    Ok(GameValue(value))
}

/// Maximum value over deterministic local assignments, by exhaustive
/// enumeration. Uses exact counting when the question distribution is
/// uniform.
pub fn classical_value_bruteforce(game: &NonlocalGame) -> Result<GameValue> {
    classical_value_bruteforce_with_cap(game, DEFAULT_ENUMERATION_CAP)
}

pub fn classical_value_bruteforce_with_cap(game: &NonlocalGame, cap: f64) -> Result<GameValue> {
    let nx = game.questions_a.len();
    let ny = game.questions_b.len();
    let needed = (game.answers_a as f64).powi(nx as i32) * (game.answers_b as f64).powi(ny as i32);
    if needed > cap {
        return Err(Error::EnumerationCap { needed, cap });
    }

    if game.uniform_pi() {
        // Exact path: count wins over question pairs.
        let mut best_wins = -1i64;
        for_each_assignment(game.answers_a, nx, |f| {
            for_each_assignment(game.answers_b, ny, |g| {
                let mut wins = 0i64;
                for x in 0..nx {
                    for y in 0..ny {
                        wins += i64::from(game.payoff[x][y][f[x]][g[y]]);
                    }
                }
                if wins > best_wins {
                    best_wins = wins;
                }
            });
        });
        let value = Frac::new(best_wins as i128, (nx * ny) as i128);
        return Ok(GameValue(value.to_f64()));
    }

    let mut best = f64::NEG_INFINITY;
    for_each_assignment(game.answers_a, nx, |f| {
        for_each_assignment(game.answers_b, ny, |g| {
            let mut value = 0.0;
            for x in 0..nx {
                for y in 0..ny {
                    if game.payoff[x][y][f[x]][g[y]] == 1 {
                        value += game.pi[x][y];
                    }
                }
            }
            if value > best {
                best = value;
            }
        });
    });
    Ok(GameValue(best))
}

/// Odometer over all functions {0..positions-1} -> {0..base-1}.
fn for_each_assignment(base: usize, positions: usize, mut visit: impl FnMut(&[usize])) {
    let mut state = vec![0usize; positions];
    loop {
        visit(&state);
        let mut i = 0;
        loop {
            if i == positions {
                return;
            }
            state[i] += 1;
            if state[i] < base {
                break;
            }
            state[i] = 0;
            i += 1;
        }
    }
}

/// 2D discrete Fourier transform on Z_n x Z_m answer tables:
/// phî(j,k) = (1/nm) Σ_{s,t} e_n(-js) e_m(-kt) phi(s,t).
pub fn fourier_transform_2d(phi: &Mat) -> Mat {
    let (n, m) = (phi.rows(), phi.cols());
    let scale = 1.0 / (n * m) as f64;
    Mat::from_fn(n, m, |j, k| {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..n {
            for t in 0..m {
                acc += character(n, -((j * s) as i64))
                    * character(m, -((k * t) as i64))
                    * phi[(s, t)];
            }
        }
        acc * scale
    })
}

/// Inverse of [`fourier_transform_2d`]; the roundtrip is the identity.
pub fn inverse_fourier_transform_2d(phi_hat: &Mat) -> Mat {
    let (n, m) = (phi_hat.rows(), phi_hat.cols());
    Mat::from_fn(n, m, |s, t| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..m {
                acc +=
                    character(n, (j * s) as i64) * character(m, (k * t) as i64) * phi_hat[(j, k)];
            }
        }
        acc
    })
}

/// Dual game value: Σ_{x,y} π(x,y) Σ_{j,k} D̂(x,y,j,k) p_{x,y}(j,k).
///
/// Equals the game functional applied to the Fourier-transformed tables,
/// since the transform kernel is symmetric in its index pairs.
pub fn dual_game_value(game: &NonlocalGame, strategy: &BareStrategy) -> Result<C64> {
    if !strategy.matches_game(game) {
        return Err(Error::ShapeMismatch("strategy shape does not match game".into()));
    }
    strategy.validate(EVAL_TOL)?;
    let mut value = C64::new(0.0, 0.0);
    for x in 0..game.questions_a.len() {
        for y in 0..game.questions_b.len() {
            let pi = game.pi[x][y];
            if pi == 0.0 {
                continue;
            }
            let d = Mat::from_fn(game.answers_a, game.answers_b, |a, b| {
                C64::new(f64::from(game.payoff[x][y][a][b]), 0.0)
            });
            let d_hat = fourier_transform_2d(&d);
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..game.answers_a {
                for k in 0..game.answers_b {
                    acc += d_hat[(j, k)] * strategy.get(x, y, j, k);
                }
            }
            value += acc * pi;
        }
    }
    Ok(value)
}

// ---------------------------------------------------------------------------
// JSON interchange formats
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct GameJson {
    questions_a: Vec<String>,
    questions_b: Vec<String>,
    answers_a: usize,
    answers_b: usize,
    pi: Vec<Vec<f64>>,
    payoff: BTreeMap<String, Vec<Vec<u8>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StrategyJson {
    table: BTreeMap<String, Vec<Vec<f64>>>,
}

fn pair_key(a: &str, b: &str) -> String {
    format!("{a},{b}")
}

/// Parses the JSON game format. Errors name the offending field.
pub fn parse_game(json: &str) -> Result<NonlocalGame> {
    let raw: GameJson =
        serde_json::from_str(json).map_err(|e| Error::Json(format!("game: {e}")))?;
    let mut payoff = Vec::with_capacity(raw.questions_a.len());
    for qa in &raw.questions_a {
        let mut row = Vec::with_capacity(raw.questions_b.len());
        for qb in &raw.questions_b {
            let key = pair_key(qa, qb);
            let table = raw
                .payoff
                .get(&key)
                .ok_or_else(|| Error::Json(format!("game: missing payoff entry \"{key}\"")))?;
            row.push(table.clone());
        }
        payoff.push(row);
    }
    NonlocalGame::new(
        raw.questions_a,
        raw.questions_b,
        raw.answers_a,
        raw.answers_b,
        raw.pi,
        payoff,
    )
}

pub fn game_to_json(game: &NonlocalGame) -> String {
    let mut payoff = BTreeMap::new();
    for (x, qa) in game.questions_a.iter().enumerate() {
        for (y, qb) in game.questions_b.iter().enumerate() {
            payoff.insert(pair_key(qa, qb), game.payoff[x][y].clone());
        }
    }
    let raw = GameJson {
        questions_a: game.questions_a.clone(),
        questions_b: game.questions_b.clone(),
        answers_a: game.answers_a,
        answers_b: game.answers_b,
        pi: game.pi.clone(),
        payoff,
    };
    serde_json::to_string_pretty(&raw).expect("game serializes")
}

/// Parses a strategy table JSON against the question labels of `game`.
pub fn parse_strategy(json: &str, game: &NonlocalGame) -> Result<BareStrategy> {
    let raw: StrategyJson =
        serde_json::from_str(json).map_err(|e| Error::Json(format!("strategy: {e}")))?;
    let mut tables = Vec::with_capacity(game.questions_a.len());
    for qa in &game.questions_a {
        let mut row = Vec::with_capacity(game.questions_b.len());
        for qb in &game.questions_b {
            let key = pair_key(qa, qb);
            let table = raw
                .table
                .get(&key)
                .ok_or_else(|| Error::Json(format!("strategy: missing table \"{key}\"")))?;
            if table.len() != game.answers_a || table.iter().any(|r| r.len() != game.answers_b) {
                return Err(Error::Json(format!(
                    "strategy: table \"{key}\" must be {}x{}",
                    game.answers_a, game.answers_b
                )));
            }
            row.push(table.clone());
        }
        tables.push(row);
    }
    Ok(BareStrategy { tables })
}

pub fn strategy_to_json(game: &NonlocalGame, strategy: &BareStrategy) -> String {
    let mut table = BTreeMap::new();
    for (x, qa) in game.questions_a.iter().enumerate() {
        for (y, qb) in game.questions_b.iter().enumerate() {
            table.insert(pair_key(qa, qb), strategy.table(x, y).clone());
        }
    }
    serde_json::to_string_pretty(&StrategyJson { table }).expect("strategy serializes")
}
