//! Certified entropy gaps for direction sets.
//!
//! For a digit system and directions `V`, let `g(p) = min_{v in V}` of the
//! base-N entropy of the residue distribution of `p` along `v`. Each entropy
//! is concave in `p` (a concave function of a linear image), so `g` is
//! concave on the digit simplex, and `delta* = 1 - max g` is the entropy gap.
//! A positive gap certifies `V`: every probability vector on the digits,
//! including every empirical type of every word, is entropy-deficient along
//! at least one direction of `V`, which is what the cover partition needs.
//!
//! The maximization runs in three stages, all deterministic under the config
//! seed: exponentiated-gradient ascent with restarts and iterate averaging, an
//! active-set Newton polish of the max-min optimality system, and a rigorous
//! dual bound. For any weights `lambda` over `V` and any simplex point `p`,
//! concavity gives `max_p g <= max_i sum_v lambda_v (H_v(p) +
//! grad H_v(p) . (e_i - p))`; the reported `optimality_gap` is the best such
//! upper bound minus `g(witness)`, so `certified` implies the true gap is
//! positive, not merely that the optimizer stalled.

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::digit_system::DigitSystem;
use crate::entropy::{composition_count, validate_weights};
use crate::linalg;
use crate::projection::{Direction, ProjectedAlphabet};
use crate::{Error, Result};

/// Interior floor for simplex iterates; entropy gradients blow up at zero
/// coordinates, so iterates are clamped here before evaluation.
const INTERIOR_FLOOR: f64 = 1e-12;

/// Tuning knobs for the gap optimizer.
#[derive(Debug, Clone)]
pub struct CertifyConfig {
    /// Ascent iterations per restart.
    pub max_iters: usize,
    /// Number of restarts (first starts at the uniform vector, the rest at
    /// seeded random simplex points).
    pub restarts: usize,
    /// Certification threshold: requires `delta_star > gap_tol` and
    /// `optimality_gap <= gap_tol`.
    pub gap_tol: f64,
    /// Seed for restart points (and nothing else).
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig { max_iters: 3000, restarts: 6, gap_tol: 1e-6, seed: 1 }
    }
}

/// The result of certifying a direction set.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCertificate {
    pub directions: Vec<Direction>,
    /// The maximizing digit weights found (the witness `p*`).
    pub witness: Vec<f64>,
    /// Dual weights over the directions backing the optimality gap.
    pub dual_weights: Vec<f64>,
    /// Residue entropy along each direction at the witness.
    pub entropies: Vec<f64>,
    /// `1 - g(witness)`.
    pub delta_star: f64,
    /// Upper bound on `max g - g(witness)`; 0 means provably optimal.
    pub optimality_gap: f64,
    /// Best value found by [`grid_oracle`], when one was run.
    pub oracle_value: Option<f64>,
    /// `delta_star > gap_tol` and `optimality_gap <= gap_tol`.
    pub certified: bool,
    pub gap_tol: f64,
}

impl DirectionCertificate {
    /// `1 - delta_star`, the certified max-min entropy.
    pub fn g_value(&self) -> f64 {
        1.0 - self.delta_star
    }
}

/// Residue-class structure of one direction: `class[i]` is the residue of
/// digit `i`, giving the linear map from digit weights to residue weights.
struct ResidueMap {
    class: Vec<usize>,
}

/// The optimization problem: digit simplex of size `m`, one residue map per
/// direction, entropies base `N`.
struct Problem {
    m: usize,
    base: usize,
    ln_base: f64,
    maps: Vec<ResidueMap>,
}

impl Problem {
    fn new(system: &DigitSystem, directions: &[Direction]) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::EmptyDirectionSet);
        }
        let maps = directions
            .iter()
            .map(|v| {
                ProjectedAlphabet::new(system, v).map(|a| ResidueMap {
                    class: a.residues().iter().map(|&r| r as usize).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem {
            m: system.digit_count(),
            base: system.base() as usize,
            ln_base: (system.base() as f64).ln(),
            maps,
        })
    }

    fn residue_dist(&self, v: usize, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.base];
        for (i, &pi) in p.iter().enumerate() {
            q[self.maps[v].class[i]] += pi;
        }
        q
    }

    fn entropy_along(&self, v: usize, p: &[f64]) -> f64 {
        let q = self.residue_dist(v, p);
        let mut h = 0.0;
        for &x in &q {
            if x > 0.0 {
                h -= x * x.ln();
            }
        }
        h / self.ln_base
    }

    fn entropies(&self, p: &[f64]) -> Vec<f64> {
        (0..self.maps.len()).map(|v| self.entropy_along(v, p)).collect()
    }

    /// `g(p) = min_v H_v(p)`.
    fn g(&self, p: &[f64]) -> f64 {
        self.entropies(p).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Gradient of `H_v` at `p` (requires `p` interior). Entry `i` is
    /// `-(1 + ln q_{class[i]}) / ln N`.
    fn grad(&self, v: usize, p: &[f64]) -> Vec<f64> {
        let q = self.residue_dist(v, p);
        let s: Vec<f64> =
            q.iter().map(|&x| -(1.0 + x.max(INTERIOR_FLOOR).ln()) / self.ln_base).collect();
        self.maps[v].class.iter().map(|&r| s[r]).collect()
    }

    /// For any dual weights `lambda` (non-negative, summing to 1) and any
    /// interior `p`, the concave upper bound
    /// `max_i sum_v lambda_v (H_v(p) + grad H_v(p)[i] - grad H_v(p) . p)`
    /// dominates `max g` over the simplex.
    fn dual_upper_bound(&self, p: &[f64], lambda: &[f64]) -> f64 {
        let mut constant = 0.0;
        let mut slope = vec![0.0; self.m];
        for (v, &lv) in lambda.iter().enumerate() {
            if lv <= 0.0 {
                continue;
            }
            let h = self.entropy_along(v, p);
            let grad = self.grad(v, p);
            let gp: f64 = grad.iter().zip(p).map(|(g, x)| g * x).sum();
            constant += lv * (h - gp);
            for (si, gi) in slope.iter_mut().zip(&grad) {
                *si += lv * gi;
            }
        }
        constant + slope.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }
}

fn clamp_to_interior(p: &mut [f64]) {
    let mut sum = 0.0;
    for x in p.iter_mut() {
        if !x.is_finite() || *x < INTERIOR_FLOOR {
            *x = INTERIOR_FLOOR;
        }
        sum += *x;
    }
    for x in p.iter_mut() {
        *x /= sum;
    }
}

/// One mirror-ascent run from `start`; returns the best iterate seen.
fn mirror_ascent(problem: &Problem, start: Vec<f64>, iters: usize) -> (Vec<f64>, f64) {
    let mut p = start;
    clamp_to_interior(&mut p);
    let mut best = p.clone();
    let mut best_g = problem.g(&p);
    let mut average = vec![0.0; problem.m];
    for t in 1..=iters {
        let entropies = problem.entropies(&p);
        let (vmin, _) = entropies
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty direction set");
        let grad = problem.grad(vmin, &p);
        let eta = 0.5 / (t as f64).sqrt();
        let max_g = grad.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        for (pi, gi) in p.iter_mut().zip(&grad) {
            *pi *= (eta * (gi - max_g)).exp();
        }
        clamp_to_interior(&mut p);
        for (ai, pi) in average.iter_mut().zip(&p) {
            *ai += pi;
        }
        let g = problem.g(&p);
        if g > best_g {
            best_g = g;
            best.copy_from_slice(&p);
        }
    }
    let mut avg = average;
    clamp_to_interior(&mut avg);
    let g_avg = problem.g(&avg);
    if g_avg > best_g {
        (avg, g_avg)
    } else {
        (best, best_g)
    }
}

/// Active-set damped-Newton refinement of the max-min optimality system:
/// variables `(p, lambda, mu, h)` solving `sum lambda_v grad H_v + mu 1 = 0`,
/// `H_v(p) = h` on the active set, `sum lambda = 1`, `sum p = 1`.
/// Returns `(p, full-length lambda)` or `None` when no solve succeeds.
fn newton_polish(problem: &Problem, p0: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = problem.m;
    let total = problem.maps.len();
    let entropies = problem.entropies(p0);
    let g0 = entropies.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let mut active: Vec<usize> =
        (0..total).filter(|&v| entropies[v] <= g0 + 1e-3).collect();
    if active.is_empty() {
        return None;
    }

    let mut p = p0.to_vec();
    clamp_to_interior(&mut p);
    let mut result: Option<(Vec<f64>, Vec<f64>)> = None;

    'rounds: for _round in 0..12 {
        let a = active.len();
        let dim = m + a + 2;
        let mut lambda = vec![1.0 / a as f64; a];
        let mut h = problem.g(&p);
        let mut mu = {
            // Stationarity along the simplex: mu ~ -mean of the weighted
            // gradient at the start point.
            let mut s = 0.0;
            for (k, &v) in active.iter().enumerate() {
                let grad = problem.grad(v, &p);
                s += lambda[k] * grad.iter().sum::<f64>() / m as f64;
            }
            -s
        };
        let mut x = p.clone();

        let residual = |x: &[f64], lambda: &[f64], mu: f64, h: f64| -> Vec<f64> {
            let mut f = vec![0.0; dim];
            for (k, &v) in active.iter().enumerate() {
                let grad = problem.grad(v, x);
                for i in 0..m {
                    f[i] += lambda[k] * grad[i];
                }
                f[m + k] = problem.entropy_along(v, x) - h;
            }
            for i in 0..m {
                f[i] += mu;
            }
            f[m + a] = lambda.iter().sum::<f64>() - 1.0;
            f[m + a + 1] = x.iter().sum::<f64>() - 1.0;
            f
        };

        let norm_inf =
            |f: &[f64]| f.iter().fold(0.0f64, |acc, &y| acc.max(y.abs()));

        let mut f = residual(&x, &lambda, mu, h);
        let mut fnorm = norm_inf(&f);
        // Extra damping switched on only after a rejected step.
        let mut boost = 0.0;

        for _iter in 0..60 {
            if fnorm < 1e-13 {
                break;
            }
            // Assemble the Jacobian.
            let mut jac = vec![vec![0.0; dim]; dim];
            for (k, &v) in active.iter().enumerate() {
                let q = problem.residue_dist(v, &x);
                let grad = problem.grad(v, &x);
                // d/dp of sum_k lambda_k grad H_k: the Hessian block
                // -(A^T diag(1/q) A)/lnN accumulated over active directions.
                for i in 0..m {
                    let ri = problem.maps[v].class[i];
                    for j in 0..m {
                        if problem.maps[v].class[j] == ri {
                            jac[i][j] -=
                                lambda[k] / (q[ri].max(INTERIOR_FLOOR) * problem.ln_base);
                        }
                    }
                    jac[i][m + k] = grad[i];
                    jac[m + k][i] = grad[i];
                }
            }
            for i in 0..m {
                jac[i][m + a] = 1.0; // dF1/dmu
                jac[m + a + 1][i] = 1.0; // dF4/dp
            }
            for k in 0..a {
                jac[m + k][m + a + 1] = -1.0; // dF2/dh
                jac[m + a][m + k] = 1.0; // dF3/dlambda
            }

            // Damped least-squares step with the damping tied to the squared
            // residual, so it vanishes near a solution and full Newton speed
            // is preserved. Symmetric digit systems routinely make the active
            // gradients linearly dependent, leaving the Jacobian singular
            // along the whole solution manifold; the minimum-norm step keeps
            // the iterates from sliding down that null space, which a plain
            // LU solve does freely (and far enough to drag previously slack
            // directions below the common entropy level).
            let rhs: Vec<f64> = f.iter().map(|y| -y).collect();
            let damping =
                (f.iter().map(|y| y * y).sum::<f64>() + boost).max(1e-12);
            let step = match linalg::solve_damped_normal(&jac, &rhs, damping) {
                Some(s) => s,
                None => {
                    boost = if boost == 0.0 { 1e-9 } else { boost * 100.0 };
                    if boost > 1e3 {
                        break;
                    }
                    continue;
                }
            };

            // Backtracking line search on the residual norm, keeping p inside
            // the (floored) simplex.
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let mut xn = x.clone();
                for i in 0..m {
                    xn[i] += alpha * step[i];
                }
                if xn.iter().any(|&xi| xi < INTERIOR_FLOOR / 10.0) {
                    alpha *= 0.5;
                    continue;
                }
                let ln: Vec<f64> =
                    (0..a).map(|k| lambda[k] + alpha * step[m + k]).collect();
                let mun = mu + alpha * step[m + a];
                let hn = h + alpha * step[m + a + 1];
                let fn_ = residual(&xn, &ln, mun, hn);
                let fnn = norm_inf(&fn_);
                if fnn < fnorm * (1.0 - 0.25 * alpha) || fnn < 1e-13 {
                    x = xn;
                    lambda = ln;
                    mu = mun;
                    h = hn;
                    f = fn_;
                    fnorm = fnn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                boost = if boost == 0.0 { 1e-9 } else { boost * 100.0 };
                if boost > 1e3 {
                    break;
                }
            } else {
                boost = 0.0;
            }
        }

        if fnorm > 1e-8 {
            // This active set did not converge; fall back to whatever an
            // earlier round produced.
            break 'rounds;
        }

        // Drop directions with meaningfully negative multipliers.
        if let Some((worst, &lk)) = lambda
            .iter()
            .enumerate()
            .min_by(|a_, b_| a_.1.total_cmp(b_.1))
        {
            if lk < -1e-8 && active.len() > 1 {
                active.remove(worst);
                continue 'rounds;
            }
        }
        // Record this round's solution before touching the active set, so
        // the multipliers stay attached to the directions they were solved
        // for even if the set grows below.
        let mut full_lambda = vec![0.0; total];
        let mut lsum = 0.0;
        for (k, &v) in active.iter().enumerate() {
            let w = lambda[k].max(0.0);
            full_lambda[v] = w;
            lsum += w;
        }
        if lsum > 0.0 {
            for w in &mut full_lambda {
                *w /= lsum;
            }
            let mut xp = x.clone();
            clamp_to_interior(&mut xp);
            result = Some((xp, full_lambda));
        }

        // Re-run with any direction that now dips below the common level.
        let ents = problem.entropies(&x);
        let mut grew = false;
        for v in 0..total {
            if !active.contains(&v) && ents[v] < h - 1e-10 {
                active.push(v);
                grew = true;
            }
        }
        if grew {
            active.sort_unstable();
            continue 'rounds;
        }
        break 'rounds;
    }

    result
}

/// `g(p) = min_v` residue entropy: the certified objective.
pub fn objective(
    system: &DigitSystem,
    weights: &[f64],
    directions: &[Direction],
) -> Result<f64> {
    validate_weights(system, weights, 1e-9)?;
    let problem = Problem::new(system, directions)?;
    Ok(problem.g(weights))
}

/// Maximizes `g` over the digit simplex and certifies the gap.
pub fn delta_star(
    system: &DigitSystem,
    directions: Vec<Direction>,
    config: &CertifyConfig,
) -> Result<DirectionCertificate> {
    for v in &directions {
        if v.dim() != system.dim() {
            return Err(Error::DirectionDimensionMismatch { got: v.dim(), dim: system.dim() });
        }
    }
    let problem = Problem::new(system, &directions)?;
    let m = problem.m;

    // Stage 1: ascent with restarts.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best_p = vec![1.0 / m as f64; m];
    let mut best_g = problem.g(&best_p);
    for r in 0..config.restarts.max(1) {
        let start = if r == 0 {
            vec![1.0 / m as f64; m]
        } else {
            // Dirichlet(1) start: normalized exponentials.
            let exp = rand::distributions::Uniform::new(0.0f64, 1.0);
            let mut s: Vec<f64> =
                (0..m).map(|_| -(1.0 - exp.sample(&mut rng)).ln()).collect();
            clamp_to_interior(&mut s);
            s
        };
        let (p, g) = mirror_ascent(&problem, start, config.max_iters);
        if g > best_g {
            best_g = g;
            best_p = p;
        }
    }

    // Stage 2: Newton polish. The polished point replaces the witness only
    // when it does not lose objective value, but its multipliers stay in
    // play either way: any simplex weights give a valid dual bound.
    let polished = newton_polish(&problem, &best_p);
    let (witness, newton_lambda) = match polished {
        Some((p, lambda)) => {
            if problem.g(&p) >= best_g - 1e-9 {
                (p, Some(lambda))
            } else {
                (best_p, Some(lambda))
            }
        }
        None => (best_p, None),
    };
    let g_witness = problem.g(&witness);
    let entropies = problem.entropies(&witness);

    // Stage 3: dual bound; take the best among candidate dual weights.
    let total = directions.len();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if let Some(lambda) = newton_lambda {
        candidates.push(lambda);
    }
    let active: Vec<usize> =
        (0..total).filter(|&v| entropies[v] <= g_witness + 1e-9).collect();
    let mut uniform_active = vec![0.0; total];
    for &v in &active {
        uniform_active[v] = 1.0 / active.len() as f64;
    }
    candidates.push(uniform_active);
    let vmin = entropies
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(v, _)| v)
        .unwrap_or(0);
    let mut single = vec![0.0; total];
    single[vmin] = 1.0;
    candidates.push(single);

    let mut upper = f64::INFINITY;
    let mut dual_weights = candidates[0].clone();
    for lambda in candidates {
        let u = problem.dual_upper_bound(&witness, &lambda);
        if u < upper {
            upper = u;
            dual_weights = lambda;
        }
    }
    // g is bounded by 1 regardless; the dual bound may exceed it.
    upper = upper.min(1.0);
    let optimality_gap = (upper - g_witness).max(0.0);

    let delta = 1.0 - g_witness;
    let certified = delta > config.gap_tol && optimality_gap <= config.gap_tol;

    Ok(DirectionCertificate {
        directions,
        witness,
        dual_weights,
        entropies,
        delta_star: delta,
        optimality_gap,
        oracle_value: None,
        certified,
        gap_tol: config.gap_tol,
    })
}

/// Evaluates `g` on simplex points with denominator `resolution` and returns
/// the maximum found. Enumerates exhaustively when the count is at most
/// `cap`, otherwise evaluates `cap` seeded random compositions. The result
/// lower-bounds `max g`, so it can never exceed
/// `g(witness) + optimality_gap` for a sound certificate.
pub fn grid_oracle(
    system: &DigitSystem,
    directions: &[Direction],
    resolution: u64,
    cap: u64,
    seed: u64,
) -> Result<f64> {
    let problem = Problem::new(system, directions)?;
    let m = problem.m;
    let count = composition_count(resolution, m);
    let mut best = f64::NEG_INFINITY;
    let mut eval = |counts: &[u64]| {
        let p: Vec<f64> =
            counts.iter().map(|&c| c as f64 / resolution as f64).collect();
        let g = problem.g(&p);
        if g > best {
            best = g;
        }
    };
    if count <= num_bigint::BigUint::from(cap) {
        for counts in crate::entropy::Compositions::new(resolution, m) {
            eval(&counts);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots = (resolution + m as u64 - 1) as usize;
        for _ in 0..cap {
            // Random weak composition via stars and bars: choose m-1 bars
            // among resolution + m - 1 slots.
            let mut bars = rand::seq::index::sample(&mut rng, slots, m - 1).into_vec();
            bars.sort_unstable();
            let mut counts = Vec::with_capacity(m);
            let mut prev = -1i64;
            for (k, &b) in bars.iter().enumerate() {
                counts.push((b as i64 - prev - 1) as u64);
                prev = b as i64;
                let _ = k;
            }
            counts.push((slots as i64 - prev - 1) as u64);
            debug_assert_eq!(counts.iter().sum::<u64>(), resolution);
            eval(&counts);
        }
    }
    Ok(best)
}

/// Candidate directions for the search: first the axes, then all two-
/// coordinate diagonals, then the remaining primitive sign-canonical vectors
/// of max-norm `r` for `r = 1..=r_max`, each group ordered by `(l1, lex)`.
pub fn candidate_directions(dim: usize, r_max: i64) -> Vec<Direction> {
    let mut out: Vec<Direction> = Vec::new();
    let push = |v: Direction, out: &mut Vec<Direction>| {
        if !out.contains(&v) {
            out.push(v);
        }
    };
    for i in 0..dim {
        let mut c = vec![0i64; dim];
        c[i] = 1;
        push(Direction::new(c).unwrap(), &mut out);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            for sign in [1i64, -1] {
                let mut c = vec![0i64; dim];
                c[i] = 1;
                c[j] = sign;
                push(Direction::new(c).unwrap(), &mut out);
            }
        }
    }
    for r in 1..=r_max {
        let mut shell = Vec::new();
        let mut counter = vec![-r; dim];
        'enumerate: loop {
            let v = counter.clone();
            if v.iter().any(|&c| c.abs() == r) {
                if let Ok(d) = Direction::new(v) {
                    shell.push(d);
                }
            }
            for k in 0..=dim {
                if k == dim {
                    break 'enumerate;
                }
                counter[k] += 1;
                if counter[k] <= r {
                    break;
                }
                counter[k] = -r;
            }
        }
        shell.sort_by_key(|d| (d.l1_norm(), d.components().to_vec()));
        shell.dedup();
        for d in shell {
            push(d, &mut out);
        }
    }
    out
}

/// Greedy direction-set search: starting from the first candidate, repeatedly
/// certify the current set and, while uncertified, add the candidate with the
/// lowest residue entropy at the current maximizer. Returns the first
/// certified certificate, or the final uncertified one when the candidate
/// pool (max-norm `r_max`) is exhausted; exhaustion is an outcome, not an
/// error, since no bound on a sufficient direction set is known in advance.
pub fn direction_search(
    system: &DigitSystem,
    r_max: i64,
    config: &CertifyConfig,
) -> Result<DirectionCertificate> {
    let candidates = candidate_directions(system.dim(), r_max);
    let mut chosen = vec![candidates[0].clone()];
    loop {
        let cert = delta_star(system, chosen.clone(), config)?;
        if cert.certified {
            return Ok(cert);
        }
        let problem = Problem::new(system, &candidates)?;
        let remaining: Vec<usize> = (0..candidates.len())
            .filter(|&k| !chosen.contains(&candidates[k]))
            .collect();
        if remaining.is_empty() {
            return Ok(cert);
        }
        let best = remaining
            .into_iter()
            .min_by(|&k, &l| {
                problem
                    .entropy_along(k, &cert.witness)
                    .total_cmp(&problem.entropy_along(l, &cert.witness))
            })
            .expect("non-empty remaining set");
        chosen.push(candidates[best].clone());
    }
}
