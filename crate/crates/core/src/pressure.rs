//! Topological pressure by `(n, ε)`-separated sets, Bowen-ball diagnostics and
//! the fiber-entropy check for the semi-conjugacy.
//!
//! Separation uses `d_n(p, p') = max_{0≤j<n} d(F^j p, F^j p')` and the strict
//! inequality `d_n > ε`. Because the base metric takes the values `2^{-s}`, two
//! points are base-close at every time `j < n` exactly when their words agree
//! on `[-r, n-1+r]` with `r = ⌈log₂(1/ε)⌉ - 1`. Points in different such
//! classes are always separated, so a separated set splits into one fiber set
//! per class.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::conjugacy::{ConjugacyError, SemiConjugacy};
use crate::scalar::{lit, to_f64, Scalar};
use crate::skew::{Observable, Point, ProductPotential, SkewError, SkewSystem};
use crate::symbolic::{BaseWord, SymbolicError};
use crate::torus::{self, wrap2};

#[derive(Debug, Error)]
pub enum PressureError {
    #[error("sample cloud empty")]
    EmptyCloud,
    #[error("separation scale {0} must be positive and finite")]
    Scale(f64),
    #[error(
        "ε = {eps} resolves base words only to radius {radius}; \
         the product decomposition needs radius ≥ {needed}"
    )]
    CoarseScale { eps: f64, radius: i64, needed: usize },
    #[error("orbit length n must be at least 1")]
    ZeroLength,
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Skew(#[from] SkewError),
    #[error(transparent)]
    Conjugacy(#[from] ConjugacyError),
}

/// `S_n φ(p) = Σ_{j<n} φ(F^j p)`.
pub fn birkhoff_sum<T: Scalar>(system: &SkewSystem<T>, phi: &impl Observable<T>, p: &Point<T>, n: usize) -> T {
    let mut q = p.clone();
    let mut sum = T::zero();
    for j in 0..n {
        sum = sum + phi.eval(&q);
        if j + 1 < n {
            q = system.apply(&q);
        }
    }
    sum
}

/// `r = ⌈log₂(1/ε)⌉ - 1`: words agreeing on `[-r, r]` are within `ε`.
pub fn base_radius(eps: f64) -> i64 {
    (1.0 / eps).log2().ceil() as i64 - 1
}

fn log_sum_exp<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let v: Vec<T> = values.collect();
    let m = v.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    if m == T::neg_infinity() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

/// Greedy first-fit `(n, ε)`-separated set for fiber orbits.
///
/// Accepted orbits are indexed by a trie over their grid cells at the times
/// `0, n-1, ⌊(n-1)/2⌋, …` (endpoints first, then bisection), on a `G × G` grid
/// with `G = ⌊2/ε⌋`. Two orbits within `ε` at every time sit at most
/// `k = ⌈εG⌉` cells apart at every time, so a query only descends into such
/// children. Far-apart times come first because they prune the most.
struct OrbitTrie<T> {
    n: usize,
    eps: T,
    cells: u32,
    reach: u32,
    order: Vec<usize>,
    nodes: Vec<TrieNode>,
    orbits: Vec<[T; 2]>,
    ids: Vec<u32>,
    stack: Vec<(u32, u32)>,
}

#[derive(Default)]
struct TrieNode {
    /// Sorted by cell id.
    children: Vec<(u32, u32)>,
    members: Vec<u32>,
}

fn bisection_order(n: usize) -> Vec<usize> {
    let mut order = vec![0];
    if n > 1 {
        order.push(n - 1);
    }
    let mut queue = std::collections::VecDeque::from([(0usize, n.saturating_sub(1))]);
    while let Some((a, b)) = queue.pop_front() {
        if b > a + 1 {
            let m = (a + b) / 2;
            order.push(m);
            queue.push_back((a, m));
            queue.push_back((m, b));
        }
    }
    order
}

impl<T: Scalar> OrbitTrie<T> {
    fn new(n: usize, eps: T) -> Self {
        let cells = (lit::<T>(2.0) / eps).floor().to_u32().unwrap_or(1).clamp(1, 1 << 15);
        let reach = (eps * T::from_u32(cells).unwrap()).ceil().to_u32().unwrap_or(cells);
        Self {
            n,
            eps,
            cells,
            reach,
            order: bisection_order(n),
            nodes: vec![TrieNode::default()],
            orbits: Vec::new(),
            ids: Vec::with_capacity(n),
            stack: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.orbits.len() / self.n
    }

    #[inline]
    fn id(&self, y: [T; 2]) -> u32 {
        let g = self.cells;
        let c = |v: T| (v * T::from_u32(g).unwrap()).floor().to_u32().unwrap_or(0).min(g - 1);
        c(y[0]) * g + c(y[1])
    }

    #[inline]
    fn near(&self, p: u32, q: u32) -> bool {
        let g = self.cells;
        let d = (p + g - q) % g;
        d <= self.reach || d + self.reach >= g
    }

    #[inline]
    fn adjacent(&self, a: u32, b: u32) -> bool {
        let g = self.cells;
        self.near(a / g, b / g) && self.near(a % g, b % g)
    }

    fn close(&self, member: u32, orbit: &[[T; 2]]) -> bool {
        let start = member as usize * self.n;
        self.orbits[start..start + self.n]
            .iter()
            .zip(orbit)
            .all(|(&a, &b)| torus::distance(a, b) <= self.eps)
    }

    /// Whether some accepted orbit is within `ε` at every time.
    fn has_neighbor(&mut self, orbit: &[[T; 2]]) -> bool {
        let g = self.cells as i64;
        let reach = self.reach as i64;
        let mut stack = std::mem::take(&mut self.stack);
        stack.clear();
        stack.push((0, 0));
        let mut found = false;
        'search: while let Some((node, depth)) = stack.pop() {
            let node_ref = &self.nodes[node as usize];
            if depth as usize == self.n {
                if node_ref.members.iter().any(|&m| self.close(m, orbit)) {
                    found = true;
                    break 'search;
                }
                continue;
            }
            let want = self.ids[depth as usize];
            let children = &node_ref.children;
            let span = 2 * reach + 1;
            if span >= g || children.len() as i64 <= span * span {
                for &(cell, child) in children {
                    if self.adjacent(cell, want) {
                        stack.push((child, depth + 1));
                    }
                }
            } else {
                let (cx, cy) = (want as i64 / g, want as i64 % g);
                for dx in -reach..=reach {
                    let x = (cx + dx).rem_euclid(g);
                    for dy in -reach..=reach {
                        let id = (x * g + (cy + dy).rem_euclid(g)) as u32;
                        if let Ok(k) = children.binary_search_by_key(&id, |e| e.0) {
                            stack.push((children[k].1, depth + 1));
                        }
                    }
                }
            }
        }
        self.stack = stack;
        found
    }

    fn insert(&mut self, orbit: &[[T; 2]]) {
        let member = self.len() as u32;
        self.orbits.extend_from_slice(orbit);
        let mut node = 0usize;
        for level in 0..self.n {
            let id = self.ids[level];
            node = match self.nodes[node].children.binary_search_by_key(&id, |e| e.0) {
                Ok(k) => self.nodes[node].children[k].1 as usize,
                Err(k) => {
                    let fresh = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.insert(k, (id, fresh as u32));
                    fresh
                }
            };
        }
        self.nodes[node].members.push(member);
    }

    /// Adds `orbit` unless it lies within `ε` of an accepted one.
    fn offer(&mut self, orbit: &[[T; 2]]) -> bool {
        self.ids.clear();
        for k in 0..self.n {
            let id = self.id(orbit[self.order[k]]);
            self.ids.push(id);
        }
        if self.has_neighbor(orbit) {
            return false;
        }
        self.insert(orbit);
        true
    }
}

/// Result of one greedy pass.
#[derive(Clone, Debug, Serialize)]
pub struct SeparatedSet<T> {
    /// Cloud indices of the accepted points.
    pub members: Vec<usize>,
    /// `log Σ_{p∈E} e^{S_n φ(p)}`.
    pub log_sum: T,
}

/// Greedy maximal `(n, ε)`-separated subset of `cloud` in the given order,
/// and its weighted log-sum.
pub fn separated_set<T: Scalar>(
    system: &SkewSystem<T>,
    phi: &impl Observable<T>,
    cloud: &[Point<T>],
    eps: T,
    n: usize,
) -> Result<SeparatedSet<T>, PressureError> {
    if cloud.is_empty() {
        return Err(PressureError::EmptyCloud);
    }
    if n == 0 {
        return Err(PressureError::ZeroLength);
    }
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(PressureError::Scale(to_f64(eps)));
    }
    let r = base_radius(to_f64(eps));
    let mut classes: HashMap<Vec<u8>, OrbitTrie<T>> = HashMap::new();
    let mut members = Vec::new();
    let mut weights = Vec::new();
    let mut orbit = vec![[T::zero(); 2]; n];
    for (i, p) in cloud.iter().enumerate() {
        let key = if r >= 0 { p.base.window(-r, n as i64 - 1 + r) } else { Vec::new() };
        let mut q = p.clone();
        let mut sum = T::zero();
        for (j, slot) in orbit.iter_mut().enumerate() {
            *slot = q.fiber;
            sum = sum + phi.eval(&q);
            if j + 1 < n {
                q = system.apply(&q);
            }
        }
        let trie = classes.entry(key).or_insert_with(|| OrbitTrie::new(n, eps));
        if trie.offer(&orbit) {
            members.push(i);
            weights.push(sum);
        }
    }
    Ok(SeparatedSet {
        members,
        log_sum: log_sum_exp(weights.into_iter()),
    })
}

/// `log Σ_{p∈E} e^{S_n φ(p)}` over a greedy maximal separated set `E ⊂ cloud`.
pub fn separated_pressure<T: Scalar>(
    system: &SkewSystem<T>,
    phi: &impl Observable<T>,
    cloud: &[Point<T>],
    eps: T,
    n: usize,
) -> Result<T, PressureError> {
    Ok(separated_set(system, phi, cloud, eps, n)?.log_sum)
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope over the upper half of an `n`-ladder; returns `(slope, points used)`.
pub fn upper_half_slope(ns: &[usize], values: &[f64]) -> (f64, usize) {
    let k = ns.len().div_ceil(2);
    let start = ns.len() - k;
    let xs: Vec<f64> = ns[start..].iter().map(|&n| n as f64).collect();
    (least_squares_slope(&xs, &values[start..]), k)
}

/// Settings for [`pressure_table`].
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct PressureOptions {
    pub eps_ladder: Vec<f64>,
    pub n_max: usize,
    /// Largest fiber cloud per `(ε, n)` cell; fixes the usable `n` per `ε`.
    pub cloud_budget: usize,
    /// Fiber lattice spacing is `ε λ_u^{-(n-1)} / u_density` along `e_u` …
    pub u_density: f64,
    /// … and `ε / s_density` along `e_s`.
    pub s_density: f64,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self {
            eps_ladder: vec![0.25, 0.125, 0.0625, 0.03125],
            n_max: 12,
            cloud_budget: 60_000,
            u_density: 2.5,
            s_density: 1.7,
        }
    }
}

/// One `(ε, n)` cell.
#[derive(Clone, Debug, Serialize)]
pub struct PressureRow {
    pub eps: f64,
    pub n: usize,
    /// `|E|` summed over base classes.
    pub count: f64,
    pub log_sum: f64,
    pub cloud_size: usize,
    pub base_classes: usize,
    pub fiber_signatures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub eps: f64,
    pub slope: f64,
    /// Number of `n` values in the fit.
    pub points: usize,
    /// `max |P(n+m) - P(n) - P(m)|` over the ladder.
    pub additivity_defect: f64,
}

/// The `(ε, n)` table of separated-set log-sums with per-`ε` growth slopes.
#[derive(Clone, Debug, Serialize)]
pub struct PressureEstimate {
    pub n_ladder: Vec<usize>,
    pub eps_ladder: Vec<f64>,
    pub rows: Vec<PressureRow>,
    pub slopes: Vec<SlopeFit>,
    /// Slope at the smallest `ε` with at least three fitted points.
    pub extrapolated: f64,
}

impl PressureEstimate {
    /// CSV with columns `eps,n,count,log_sum,slope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,n,count,log_sum,slope\n");
        for row in &self.rows {
            let slope = self
                .slopes
                .iter()
                .find(|s| s.eps == row.eps)
                .map_or(f64::NAN, |s| s.slope);
            out.push_str(&format!("{},{},{},{},{}\n", row.eps, row.n, row.count, row.log_sum, slope));
        }
        out
    }
}

/// Lattice in eigen-coordinates covering `[0,1)²` once, spacing `δ_u` along
/// `e_u` and `δ_s` along `e_s`, ordered by `(a_u, a_s)`.
pub fn adapted_lattice<T: Scalar>(system: &SkewSystem<T>, delta_u: T, delta_s: T) -> Vec<[T; 2]> {
    let l = system.fibers().automorphism();
    let (e_u, e_s) = (l.e_u(), l.e_s());
    let corners = [[T::zero(), T::zero()], [T::one(), T::zero()], [T::zero(), T::one()], [T::one(), T::one()]];
    let coords: Vec<(T, T)> = corners.iter().map(|&c| l.eigen_coordinates(c)).collect();
    let lo_u = coords.iter().fold(T::infinity(), |m, c| m.min(c.0));
    let hi_u = coords.iter().fold(T::neg_infinity(), |m, c| m.max(c.0));
    let lo_s = coords.iter().fold(T::infinity(), |m, c| m.min(c.1));
    let hi_s = coords.iter().fold(T::neg_infinity(), |m, c| m.max(c.1));
    let nu = ((hi_u - lo_u) / delta_u).ceil().to_usize().unwrap();
    let ns = ((hi_s - lo_s) / delta_s).ceil().to_usize().unwrap();
    let half = lit::<T>(0.5);
    let mut out = Vec::new();
    for i in 0..nu {
        let a_u = lo_u + (T::from_usize(i).unwrap() + half) * delta_u;
        for j in 0..ns {
            let a_s = lo_s + (T::from_usize(j).unwrap() + half) * delta_s;
            let y = [a_u * e_u[0] + a_s * e_s[0], a_u * e_u[1] + a_s * e_s[1]];
            if y[0] >= T::zero() && y[0] < T::one() && y[1] >= T::zero() && y[1] < T::one() {
                out.push(y);
            }
        }
    }
    out
}

fn lattice_spacing<T: Scalar>(system: &SkewSystem<T>, opts: &PressureOptions, eps: f64, n: usize) -> (T, T) {
    let lambda_u = to_f64(system.fibers().automorphism().lambda_u());
    (
        lit(eps * lambda_u.powi(1 - n as i32) / opts.u_density),
        lit(eps / opts.s_density),
    )
}

/// Greedy separated count for a fixed amplitude sequence `β_0, …, β_{n-1}`.
fn fiber_count<T: Scalar>(system: &SkewSystem<T>, cloud: &[[T; 2]], amplitudes: &[T], eps: T) -> usize {
    let n = amplitudes.len();
    let ff = system.fibers();
    let mut trie = OrbitTrie::new(n, eps);
    let mut orbit = vec![[T::zero(); 2]; n];
    let mut count = 0;
    for &y0 in cloud {
        let mut y = y0;
        for (j, slot) in orbit.iter_mut().enumerate() {
            *slot = y;
            if j + 1 < n {
                y = ff.map_with_amplitude(amplitudes[j], y);
            }
        }
        if trie.offer(&orbit) {
            count += 1;
        }
    }
    count
}

/// Separated-set pressure table for a product potential, using the split
/// into base classes and memoized fiber counts per amplitude sequence.
pub fn pressure_table<T: Scalar>(
    system: &SkewSystem<T>,
    phi: &ProductPotential<T>,
    opts: &PressureOptions,
) -> Result<PressureEstimate, PressureError> {
    let ff = system.fibers();
    let (m_out, m_in) = ff.region_depths();
    let q = system.base().fixed_symbol();
    let needed = (m_in - 1).max(phi.window_radius());
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut n_seen = std::collections::BTreeSet::new();
    if opts.eps_ladder.is_empty() || opts.n_max == 0 || !(opts.u_density > 0.0 && opts.s_density > 0.0) {
        return Err(PressureError::EmptyCloud);
    }
    for &eps in &opts.eps_ladder {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(PressureError::Scale(eps));
        }
        let r = base_radius(eps);
        if r < needed as i64 {
            return Err(PressureError::CoarseScale { eps, radius: r, needed });
        }
        let r = r as usize;
        let mut ns = Vec::new();
        let mut values = Vec::new();
        for n in 1..=opts.n_max {
            let (du, ds) = lattice_spacing(system, opts, eps, n);
            let estimate = (T::one() / (du * ds)).to_f64().unwrap();
            if estimate > opts.cloud_budget as f64 {
                break;
            }
            let cloud = adapted_lattice(system, du, ds);
            if cloud.is_empty() {
                return Err(PressureError::EmptyCloud);
            }
            // base classes: admissible words on [-r, n-1+r]
            let words = system.base().admissible_words(n + 2 * r);
            let mut groups: HashMap<Vec<u8>, Vec<T>> = HashMap::new();
            for w in &words {
                let x = BaseWord::new(w.clone(), r);
                let mut depths = Vec::with_capacity(n);
                let mut s = T::zero();
                for j in 0..n as i64 {
                    let xj = x.shifted(j);
                    depths.push(xj.match_depth(q, m_in).max(m_out) as u8);
                    s = s + phi.base_part.eval(&xj);
                }
                groups.entry(depths).or_default().push(s);
            }
            let mut keys: Vec<&Vec<u8>> = groups.keys().collect();
            keys.sort();
            let eps_t = lit::<T>(eps);
            let mut terms = Vec::with_capacity(keys.len());
            let mut total = 0.0;
            for key in keys {
                let amplitudes: Vec<T> = key.iter().map(|&m| ff.amplitude_at_depth(m as usize)).collect();
                let count = fiber_count(system, &cloud, &amplitudes, eps_t);
                let sums = &groups[key];
                total += count as f64 * sums.len() as f64;
                terms.push(log_sum_exp(sums.iter().copied()) + T::from_usize(count).unwrap().ln());
            }
            let log_sum = log_sum_exp(terms.into_iter()) + T::from_usize(n).unwrap() * phi.fiber_constant;
            let log_sum = to_f64(log_sum);
            rows.push(PressureRow {
                eps,
                n,
                count: total,
                log_sum,
                cloud_size: cloud.len(),
                base_classes: words.len(),
                fiber_signatures: groups.len(),
            });
            ns.push(n);
            values.push(log_sum);
            n_seen.insert(n);
        }
        if ns.is_empty() {
            // not even n = 1 fits the cloud budget
            return Err(PressureError::EmptyCloud);
        }
        let (slope, points) = upper_half_slope(&ns, &values);
        let mut defect: f64 = 0.0;
        for a in 0..ns.len() {
            for b in 0..ns.len() {
                if let Some(c) = ns.iter().position(|&k| k == ns[a] + ns[b]) {
                    defect = defect.max((values[c] - values[a] - values[b]).abs());
                }
            }
        }
        slopes.push(SlopeFit {
            eps,
            slope,
            points,
            additivity_defect: defect,
        });
    }
    let extrapolated = slopes
        .iter()
        .filter(|s| s.points >= 3)
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .or_else(|| slopes.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)))
        .map_or(f64::NAN, |s| s.slope);
    Ok(PressureEstimate {
        n_ladder: n_seen.into_iter().collect(),
        eps_ladder: opts.eps_ladder.clone(),
        rows,
        slopes,
        extrapolated,
    })
}

/// Separated-set growth along `H⁻¹(z)`.
#[derive(Clone, Debug, Serialize)]
pub struct FiberEntropyEstimate {
    /// Leaf length of the preimage arc.
    pub arc_length: f64,
    /// `(ε, slope of log |E| over the upper half of n = 1..n_max)`.
    pub slopes: Vec<(f64, f64)>,
    /// Largest slope over the ladder.
    pub estimate: f64,
}

/// Entropy of `F` on the fiber `H⁻¹(z)`: the arc is sampled at `samples`
/// points and the separated-set count growth is fitted for each `ε`.
pub fn fiber_entropy_estimate<T: Scalar>(
    system: &SkewSystem<T>,
    h: &SemiConjugacy<T>,
    z: &Point<T>,
    eps_ladder: &[f64],
    n_max: usize,
    samples: usize,
) -> Result<FiberEntropyEstimate, PressureError> {
    let resolution = lit::<T>(1e-6);
    let arc = h.preimage_scan(z, resolution)?;
    let (t_lo, t_hi) = arc.interval;
    let first = arc.points.first().copied().ok_or(PressureError::EmptyCloud)?;
    let e_s = system.fibers().automorphism().e_s();
    let cloud: Vec<Point<T>> = if arc.diameter > T::zero() {
        let k = samples.max(2);
        (0..k)
            .map(|i| {
                let t = (t_hi - t_lo) * T::from_usize(i).unwrap() / T::from_usize(k - 1).unwrap();
                Point::new(z.base.clone(), wrap2([first[0] + t * e_s[0], first[1] + t * e_s[1]]))
            })
            .collect()
    } else {
        vec![Point::new(z.base.clone(), first)]
    };
    let zero = |_: &Point<T>| T::zero();
    let mut slopes = Vec::new();
    for &eps in eps_ladder {
        let ns: Vec<usize> = (1..=n_max.max(1)).collect();
        let mut values = Vec::with_capacity(ns.len());
        for &n in &ns {
            values.push(to_f64(separated_pressure(system, &zero, &cloud, lit(eps), n)?));
        }
        slopes.push((eps, upper_half_slope(&ns, &values).0));
    }
    let estimate = slopes.iter().fold(0.0f64, |m, s| m.max(s.1));
    Ok(FiberEntropyEstimate {
        arc_length: to_f64(arc.diameter),
        slopes,
        estimate,
    })
}

/// Diameter of `{y' : d(F^k(x, y'), F^k(x, y)) < ε for |k| ≤ k_max}` inside the
/// fiber of `p`, by repeated grid refinement in eigen-coordinates.
pub fn bowen_ball_diameter<T: Scalar>(
    system: &SkewSystem<T>,
    p: &Point<T>,
    eps: T,
    k_max: usize,
) -> Result<T, PressureError> {
    const GRID: usize = 41;
    const ROUNDS: usize = 4;
    let l = system.fibers().automorphism();
    let (e_u, e_s) = (l.e_u(), l.e_s());
    let forward = system.orbit(p, 0, k_max as i64)?;
    let backward = system.backward_segment(p, k_max)?;
    let member = |du: T, ds: T| -> Result<bool, PressureError> {
        let y = wrap2([
            p.fiber[0] + du * e_u[0] + ds * e_s[0],
            p.fiber[1] + du * e_u[1] + ds * e_s[1],
        ]);
        let mut q = Point::new(p.base.clone(), y);
        for reference in &forward {
            if torus::distance(q.fiber, reference.fiber) >= eps {
                return Ok(false);
            }
            q = system.apply(&q);
        }
        let mut q = Point::new(p.base.clone(), y);
        for reference in backward.iter().rev() {
            if torus::distance(q.fiber, reference.fiber) >= eps {
                return Ok(false);
            }
            q = system.apply_inverse(&q)?;
        }
        Ok(true)
    };
    let (mut u0, mut u1, mut s0, mut s1) = (-eps, eps, -eps, eps);
    let mut found: Vec<(T, T)> = Vec::new();
    for _ in 0..ROUNDS {
        let step_u = (u1 - u0) / T::from_usize(GRID - 1).unwrap();
        let step_s = (s1 - s0) / T::from_usize(GRID - 1).unwrap();
        found.clear();
        for i in 0..GRID {
            for j in 0..GRID {
                let du = u0 + step_u * T::from_usize(i).unwrap();
                let ds = s0 + step_s * T::from_usize(j).unwrap();
                if member(du, ds)? {
                    found.push((du, ds));
                }
            }
        }
        if found.is_empty() {
            found.push((T::zero(), T::zero()));
        }
        let min_u = found.iter().fold(T::infinity(), |m, f| m.min(f.0));
        let max_u = found.iter().fold(T::neg_infinity(), |m, f| m.max(f.0));
        let min_s = found.iter().fold(T::infinity(), |m, f| m.min(f.1));
        let max_s = found.iter().fold(T::neg_infinity(), |m, f| m.max(f.1));
        u0 = (min_u - step_u).max(-eps);
        u1 = (max_u + step_u).min(eps);
        s0 = (min_s - step_s).max(-eps);
        s1 = (max_s + step_s).min(eps);
    }
    let mut diameter = T::zero();
    for a in &found {
        for b in &found {
            diameter = diameter.max((a.0 - b.0).hypot(a.1 - b.1));
        }
    }
    Ok(diameter)
}
