//! Exact-plan optimal transport between finite atomic distributions.
//!
//! The solver is the transportation simplex (MODI potentials on a spanning tree
//! basis, block-search pricing). Masses are scaled to integers, so flows stay
//! exact; costs are floats and only steer the pivoting. The returned plan is
//! an exact coupling, and callers evaluate its cost with exact distances.
//!
//! Degenerate pivots are ruled out by the classical perturbation
//! `a_i ↦ K·a_i + 1`, `b_n ↦ K·b_n + m` with `K = 2m + 2`: no partial sum of
//! supplies equals one of demands, so every basic flow stays positive and each
//! pivot strictly lowers the cost. Rounding `x / K` recovers the unperturbed
//! optimal flows on the same basis.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Cost matrices larger than this are evaluated on demand instead of cached.
const CACHE_LIMIT: usize = 4_000_000;

/// One entry of a transport plan: `mass` moves from source `from` to target `to`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub mass: BigRational,
}

/// Scales rational masses to integers sharing the denominator `lcm`.
fn integer_masses(a: &[BigRational], b: &[BigRational]) -> Result<(Vec<i128>, Vec<i128>, BigInt)> {
    let mut lcm = BigInt::one();
    for w in a.iter().chain(b) {
        if !w.is_positive() {
            return Err(Error::InvalidArgument("transport masses must be positive".into()));
        }
        lcm = lcm.lcm(w.denom());
    }
    let conv = |w: &BigRational| -> Result<i128> {
        let v = w.numer() * (&lcm / w.denom());
        v.to_i128()
            .filter(|x| x.unsigned_abs() < (1u128 << 100))
            .ok_or(Error::Budget {
                what: "transport mass denominator".into(),
                needed: u128::MAX,
                limit: 1 << 100,
            })
    };
    let ai = a.iter().map(conv).collect::<Result<Vec<_>>>()?;
    let bi = b.iter().map(conv).collect::<Result<Vec<_>>>()?;
    if ai.iter().sum::<i128>() != bi.iter().sum::<i128>() {
        return Err(Error::InvalidArgument("transport masses do not balance".into()));
    }
    Ok((ai, bi, lcm))
}

struct Costs<'a> {
    cached: Option<Vec<f64>>,
    f: &'a dyn Fn(usize, usize) -> f64,
    n: usize,
}

impl Costs<'_> {
    fn get(&self, i: usize, j: usize) -> f64 {
        match &self.cached {
            Some(c) => c[i * self.n + j],
            None => (self.f)(i, j),
        }
    }
}

/// Optimal coupling of `supply` (sources) and `demand` (targets) for the cost `cost(i, j)`.
///
/// Both mass vectors must be positive and have equal totals. Sources and
/// targets should be listed in an order that makes the north-west corner rule
/// a good start (for instance sorted along a line embedding).
pub fn solve(
    cost: &dyn Fn(usize, usize) -> f64,
    supply: &[BigRational],
    demand: &[BigRational],
) -> Result<Vec<Flow>> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("transport between empty distributions".into()));
    }
    let (a0, b0, lcm) = integer_masses(supply, demand)?;
    let lcm_q = BigRational::from_integer(lcm);
    let to_mass = |x: i128| BigRational::from_integer(BigInt::from(x)) / &lcm_q;
    if m == 1 || n == 1 {
        let mut out = Vec::with_capacity(m.max(n));
        for i in 0..m {
            for j in 0..n {
                let x = if m == 1 { b0[j] } else { a0[i] };
                out.push(Flow {
                    from: i,
                    to: j,
                    mass: to_mass(x),
                });
            }
        }
        return Ok(out);
    }

    let k = 2 * m as i128 + 2;
    let mut a: Vec<i128> = a0.iter().map(|x| x * k + 1).collect();
    let mut b: Vec<i128> = b0.iter().map(|x| x * k).collect();
    b[n - 1] += m as i128;

    let costs = Costs {
        cached: (m * n <= CACHE_LIMIT).then(|| {
            let mut c = Vec::with_capacity(m * n);
            for i in 0..m {
                for j in 0..n {
                    c.push(cost(i, j));
                }
            }
            c
        }),
        f: cost,
        n,
    };
    let scale = {
        let mut s: f64 = 0.0;
        for i in 0..m {
            for j in [0, n - 1] {
                s = s.max(costs.get(i, j).abs());
            }
        }
        s.max(1.0)
    };
    let tol = 1e-12 * scale;

    // North-west corner start: exactly m + n − 1 positive cells.
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    let mut flow: Vec<i128> = Vec::with_capacity(m + n - 1);
    {
        let (mut i, mut j) = (0, 0);
        while i < m && j < n {
            let x = a[i].min(b[j]);
            cells.push((i, j));
            flow.push(x);
            a[i] -= x;
            b[j] -= x;
            if a[i] == 0 && i + 1 < m {
                i += 1;
            } else if b[j] == 0 && j + 1 < n {
                j += 1;
            } else {
                break;
            }
        }
    }
    if cells.len() != m + n - 1 || flow.iter().any(|&x| x <= 0) {
        return Err(Error::InvalidArgument("degenerate transport start; masses inconsistent".into()));
    }

    let nodes = m + n;
    let block = ((m * n) as f64).sqrt().ceil().max(16.0) as usize;
    let max_pivots = 1000 * (m + n) + 10_000;
    let mut cursor = 0usize;
    let mut pot = vec![0.0f64; nodes];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    let mut parent: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); nodes];
    let mut stack = Vec::with_capacity(nodes);
    let mut seen = vec![false; nodes];

    for _pivot in 0..max_pivots {
        for l in adj.iter_mut() {
            l.clear();
        }
        for (idx, &(i, j)) in cells.iter().enumerate() {
            adj[i].push((m + j, idx));
            adj[m + j].push((i, idx));
        }
        // Potentials: u_i + v_j = c_ij on basic cells.
        seen.iter_mut().for_each(|s| *s = false);
        pot[0] = 0.0;
        seen[0] = true;
        stack.clear();
        stack.push(0);
        while let Some(v) = stack.pop() {
            for &(w, idx) in &adj[v] {
                if !seen[w] {
                    let (i, j) = cells[idx];
                    pot[w] = costs.get(i, j) - pot[v];
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("transport basis lost connectivity".into()));
        }

        // Block-search pricing.
        let total = m * n;
        let mut best: Option<(usize, usize, f64)> = None;
        let mut scanned = 0usize;
        while scanned < total {
            let end = (scanned + block).min(total);
            for _ in scanned..end {
                let (i, j) = (cursor / n, cursor % n);
                let rc = costs.get(i, j) - pot[i] - pot[m + j];
                if rc < -tol && best.is_none_or(|(_, _, r)| rc < r) {
                    best = Some((i, j, rc));
                }
                cursor += 1;
                if cursor == total {
                    cursor = 0;
                }
            }
            scanned = end;
            if best.is_some() {
                break;
            }
        }
        let Some((p, q, _)) = best else {
            let out = cells
                .iter()
                .zip(&flow)
                .filter_map(|(&(i, j), &x)| {
                    let x0 = (x + k / 2).div_euclid(k);
                    (x0 > 0).then(|| (i, j, x0))
                })
                .collect::<Vec<_>>();
            let mut rows = vec![0i128; m];
            let mut cols = vec![0i128; n];
            for &(i, j, x) in &out {
                rows[i] += x;
                cols[j] += x;
            }
            if rows != a0 || cols != b0 {
                return Err(Error::InvalidArgument("transport plan failed its marginal check".into()));
            }
            return Ok(out
                .into_iter()
                .map(|(i, j, x)| Flow {
                    from: i,
                    to: j,
                    mass: to_mass(x),
                })
                .collect());
        };

        // Path in the tree from row p to column q.
        seen.iter_mut().for_each(|s| *s = false);
        seen[p] = true;
        stack.clear();
        stack.push(p);
        while let Some(v) = stack.pop() {
            if v == m + q {
                break;
            }
            for &(w, idx) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = (v, idx);
                    stack.push(w);
                }
            }
        }
        let mut path = Vec::new();
        let mut v = m + q;
        while v != p {
            let (u, idx) = parent[v];
            path.push(idx);
            v = u;
        }
        // path[0] touches column q and loses flow; signs alternate from there.
        let mut leave = usize::MAX;
        let mut theta = i128::MAX;
        for (pos, &idx) in path.iter().enumerate() {
            if pos % 2 == 0 && flow[idx] < theta {
                theta = flow[idx];
                leave = idx;
            }
        }
        for (pos, &idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                flow[idx] -= theta;
            } else {
                flow[idx] += theta;
            }
        }
        cells[leave] = (p, q);
        flow[leave] = theta;
    }
    Err(Error::Budget {
        what: "transport simplex pivots".into(),
        needed: max_pivots as u128 + 1,
        limit: max_pivots as u128,
    })
}

/// `∫ |F_μ − F_ν|` for distributions on the real line given by sorted
/// positions. Exact.
pub fn w1_line(mu: &[(BigRational, BigRational)], nu: &[(BigRational, BigRational)]) -> BigRational {
    let mut events: Vec<(&BigRational, BigRational)> = Vec::with_capacity(mu.len() + nu.len());
    for (x, w) in mu {
        events.push((x, w.clone()));
    }
    for (x, w) in nu {
        events.push((x, -w.clone()));
    }
    events.sort_by(|l, r| l.0.cmp(r.0));
    let mut total = BigRational::zero();
    let mut cdf = BigRational::zero();
    for (idx, (x, dw)) in events.iter().enumerate() {
        cdf += dw;
        if let Some((next, _)) = events.get(idx + 1) {
            total += cdf.abs() * (*next - *x);
        }
    }
    total
}
