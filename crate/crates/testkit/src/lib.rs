//! Oracles that share no code with the library under test: a max-profit
//! flow solver for the tilting problem, exhaustive vertex enumeration for
//! small standard-form programs, CVaR by direct quantile integration, and
//! random instance generators.

use rand::seq::SliceRandom;
use rand::Rng;

/// Average of the step quantile function over `(alpha, 1)`, integrating each
/// atom's quantile interval exactly.
pub fn cvar_by_quantile_integral(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    let mut atoms: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = probs.iter().sum();
    let mut lo = 0.0;
    let mut acc = 0.0;
    for (x, p) in atoms {
        let hi = lo + p / total;
        acc += x * (hi.min(1.0) - lo.max(alpha)).max(0.0);
        lo = hi;
    }
    acc / (1.0 - alpha)
}

/// Maximum of `sum L[m][n] mu[m][n]` over `mu >= 0` with row sums `<= p`,
/// column sums `<= q` and total `budget`, by successive longest augmenting
/// paths in the bipartite flow network. `l` is row-major.
pub fn max_profit_flow(l: &[f64], p: &[f64], q: &[f64], budget: f64) -> f64 {
    let (m, n) = (p.len(), q.len());
    assert_eq!(l.len(), m * n);
    // Node 0 source, 1..=m rows, m+1..=m+n columns, m+n+1 sink.
    let nodes = m + n + 2;
    let sink = nodes - 1;
    struct Edge {
        to: usize,
        cap: f64,
        profit: f64,
    }
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize, cap: f64, profit: f64| {
        adj[a].push(edges.len());
        edges.push(Edge { to: b, cap, profit });
        adj[b].push(edges.len());
        edges.push(Edge { to: a, cap: 0.0, profit: -profit });
    };
    for i in 0..m {
        add(&mut adj, 0, 1 + i, p[i], 0.0);
    }
    for i in 0..m {
        for j in 0..n {
            add(&mut adj, 1 + i, 1 + m + j, f64::INFINITY, l[i * n + j]);
        }
    }
    for j in 0..n {
        add(&mut adj, 1 + m + j, sink, q[j], 0.0);
    }
    let mut left = budget;
    let mut value = 0.0;
    while left > 0.0 {
        // Bellman-Ford for the most profitable residual path.
        let mut best = vec![f64::NEG_INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        best[0] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for a in 0..nodes {
                if best[a] == f64::NEG_INFINITY {
                    continue;
                }
                for &e in &adj[a] {
                    let ed = &edges[e];
                    if ed.cap > 1e-18 && best[a] + ed.profit > best[ed.to] + 1e-15 {
                        best[ed.to] = best[a] + ed.profit;
                        via[ed.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if best[sink] == f64::NEG_INFINITY {
            panic!("budget {budget} exceeds the available capacity");
        }
        let mut push = left;
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        value += push * best[sink];
        left -= push;
        if push <= 0.0 {
            break;
        }
    }
    value
}

/// Maximum of `c x` over `A x = b, x >= 0` by trying every column basis.
/// `a` must have full row rank. Returns `None` when there are more than
/// `max_bases` candidate bases or no feasible basis exists.
pub fn vertex_enumeration_max(a: &[Vec<f64>], b: &[f64], c: &[f64], max_bases: u64) -> Option<f64> {
    let rows = a.len();
    let cols = c.len();
    if rows > cols || binomial(cols as u64, rows as u64) > max_bases {
        return None;
    }
    let mut pick: Vec<usize> = (0..rows).collect();
    let mut best: Option<f64> = None;
    loop {
        if let Some(x) = basic_solution(a, b, &pick) {
            if x.iter().all(|&v| v >= -1e-10) {
                let obj: f64 = pick.iter().zip(&x).map(|(&j, v)| c[j] * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.max(obj)));
            }
        }
        // Next combination in lexicographic order.
        let mut i = rows;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < cols - rows + i {
                pick[i] += 1;
                for k in i + 1..rows {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    r as u64
}

fn basic_solution(a: &[Vec<f64>], b: &[f64], pick: &[usize]) -> Option<Vec<f64>> {
    let r = a.len();
    let mut t: Vec<Vec<f64>> = (0..r).map(|i| pick.iter().map(|&j| a[i][j]).chain(std::iter::once(b[i])).collect()).collect();
    for col in 0..r {
        let piv = (col..r).max_by(|&x, &y| t[x][col].abs().total_cmp(&t[y][col].abs()))?;
        if t[piv][col].abs() < 1e-11 {
            return None;
        }
        t.swap(col, piv);
        for i in 0..r {
            if i != col {
                let f = t[i][col] / t[col][col];
                if f != 0.0 {
                    for k in col..=r {
                        t[i][k] -= f * t[col][k];
                    }
                }
            }
        }
    }
    Some((0..r).map(|i| t[i][r] / t[i][i]).collect())
}

/// The worst-case program over `(psi, mu)` in standard form, with slacks on
/// the caps `mu <= psi` and the last column-marginal row dropped (it is
/// implied by the others), solved by vertex enumeration. Returns the CVaR
/// value `max sum L mu / (1 - alpha)`.
pub fn full_program_by_enumeration(l: &[f64], p: &[f64], q: &[f64], alpha: f64, max_bases: u64) -> Option<f64> {
    let (m, n) = (p.len(), q.len());
    let mn = m * n;
    let cols = 3 * mn;
    let psi = |i: usize, j: usize| i * n + j;
    let mu = |i: usize, j: usize| mn + i * n + j;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; cols];
        for j in 0..n {
            row[psi(i, j)] = 1.0;
        }
        a.push(row);
        b.push(p[i]);
    }
    for j in 0..n.saturating_sub(1) {
        let mut row = vec![0.0; cols];
        for i in 0..m {
            row[psi(i, j)] = 1.0;
        }
        a.push(row);
        b.push(q[j]);
    }
    let mut row = vec![0.0; cols];
    for c in 0..mn {
        row[mn + c] = 1.0;
    }
    a.push(row);
    b.push(1.0 - alpha);
    for i in 0..m {
        for j in 0..n {
            let mut row = vec![0.0; cols];
            row[mu(i, j)] = 1.0;
            row[psi(i, j)] = -1.0;
            row[2 * mn + i * n + j] = 1.0;
            a.push(row);
            b.push(0.0);
        }
    }
    let mut c = vec![0.0; cols];
    c[mn..2 * mn].copy_from_slice(l);
    vertex_enumeration_max(&a, &b, &c, max_bases).map(|v| v / (1.0 - alpha))
}

/// Positive probability vector of length `k`.
pub fn random_probs<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = 1.0 - head;
    p
}

/// North-west corner coupling of `p` and `q` after shuffling both index
/// sets: a vertex of the transportation polytope.
pub fn random_vertex_coupling<R: Rng>(rng: &mut R, p: &[f64], q: &[f64]) -> Vec<f64> {
    let (m, n) = (p.len(), q.len());
    let mut ri: Vec<usize> = (0..m).collect();
    let mut ci: Vec<usize> = (0..n).collect();
    ri.shuffle(rng);
    ci.shuffle(rng);
    let mut psi = vec![0.0; m * n];
    let (mut rp, mut cq) = (p.to_vec(), q.to_vec());
    let (mut a, mut b) = (0, 0);
    while a < m && b < n {
        let (i, j) = (ri[a], ci[b]);
        let t = rp[i].min(cq[j]);
        psi[i * n + j] += t;
        rp[i] -= t;
        cq[j] -= t;
        if a + 1 == m {
            b += 1;
        } else if b + 1 == n || rp[i] <= cq[j] {
            a += 1;
        } else {
            b += 1;
        }
    }
    // Rounding leftovers go to the last visited row or column.
    for i in 0..m {
        if rp[i] > 0.0 {
            psi[i * n + ci[n - 1]] += rp[i];
        }
    }
    psi.iter_mut().for_each(|v| *v = v.max(0.0));
    psi
}

/// Random convex combination of one to four vertex couplings.
pub fn random_coupling<R: Rng>(rng: &mut R, p: &[f64], q: &[f64]) -> Vec<f64> {
    let k = rng.random_range(1..=4);
    let w = random_probs(rng, k);
    let mut psi = vec![0.0; p.len() * q.len()];
    for wi in w {
        let v = random_vertex_coupling(rng, p, q);
        psi.iter_mut().zip(v).for_each(|(a, b)| *a += wi * b);
    }
    psi
}
