//! The Turaev-Viro state sum
//!
//! TV(Y, r) = Σ_j Δ^{−v} Π_e Δ_{j(e)} Π_τ {j(τ)}_q
//!
//! over edge colorings j. Only face-admissible colorings contribute, so the
//! enumeration is a backtracking search that checks each face as soon as its
//! three edges are colored. Phases are powers of i and are tracked exactly.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qnum::{colors, delta_color, state_sum_delta, twice_admissible, Color, Level};
use crate::sixj::{Convention, Phased, SixTuple, SixjTable};
use crate::trimesh::Triangulation;

/// Edge colors indexed by edge id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coloring(pub Vec<Color>);

impl Coloring {
    pub fn is_admissible(&self, t: &Triangulation, level: Level) -> bool {
        let m = level.max_twice_j();
        self.0.iter().all(|c| c.twice_j() <= m)
            && t.faces().keys().all(|f| {
                twice_admissible(
                    self.0[f.0[0]].twice_j(),
                    self.0[f.0[1]].twice_j(),
                    self.0[f.0[2]].twice_j(),
                    m,
                )
            })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StateSumResult {
    pub value: f64,
    /// |Im| of the accumulated sum; zero up to rounding for closed manifolds.
    pub imaginary_residue: f64,
    /// Nodes of the backtracking tree visited (partial colorings).
    pub colorings_visited: u64,
    /// Complete face-admissible colorings.
    pub admissible_count: u64,
    /// The normalization Δ used.
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StateSumOptions {
    /// Refuse once more than this many search nodes have been visited.
    pub node_budget: Option<u64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// The 6j argument order for a tetrahedron with ascending vertices
/// (a,b,c,d): (ab, bc, ac; cd, ad, bd), as edge ids.
fn tet_argument_edges(t: &Triangulation) -> Vec<[usize; 6]> {
    t.tetrahedra()
        .iter()
        .map(|tet| {
            let mut vs = tet.vertices;
            vs.sort_unstable();
            let e = |x: usize, y: usize| {
                tet.edge(tet.local_of(vs[x]).unwrap(), tet.local_of(vs[y]).unwrap())
            };
            [e(0, 1), e(1, 2), e(0, 2), e(2, 3), e(0, 3), e(1, 3)]
        })
        .collect()
}

/// One term of the state sum; zero for colorings with an inadmissible face.
pub fn tv_term(t: &Triangulation, level: Level, c: &Coloring) -> Phased {
    assert_eq!(c.0.len(), t.num_edges(), "coloring must cover every edge");
    if !c.is_admissible(t, level) {
        return Phased::real(0.0);
    }
    let table = SixjTable::shared(level);
    let delta = state_sum_delta(level);
    let mut acc = Phased::real(delta.powi(-(t.num_vertices() as i32)));
    for &col in &c.0 {
        acc = acc * Phased::real(delta_color(col, level));
    }
    for args in tet_argument_edges(t) {
        let six = SixTuple(args.map(|e| c.0[e]));
        acc = acc * table.sixj(&six, Convention::TuraevViro);
    }
    acc
}

/// Deterministic cascade (pairwise) summation: the result depends only on
/// the sequence of inputs.
#[derive(Default)]
struct PairwiseSum {
    stack: Vec<(f64, u32)>,
}

impl PairwiseSum {
    fn push(&mut self, x: f64) {
        let mut v = x;
        let mut lvl = 0;
        while let Some(&(top, l)) = self.stack.last() {
            if l != lvl {
                break;
            }
            self.stack.pop();
            v += top;
            lvl += 1;
        }
        self.stack.push((v, lvl));
    }

    fn total(&self) -> f64 {
        self.stack.iter().rev().fold(0.0, |acc, &(v, _)| acc + v)
    }
}

/// Pairwise reduction of an ordered list.
fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => tree_sum(&xs[..n / 2]) + tree_sum(&xs[n / 2..]),
    }
}

struct Plan {
    order: Vec<usize>,
    /// Faces (edge-id triples) whose last edge is colored at each position.
    faces_at: Vec<Vec<[usize; 3]>>,
    /// Tetrahedra (6j argument edges) completed at each position.
    tets_at: Vec<Vec<[usize; 6]>>,
    max_twice: u32,
    n_colors: u32,
}

impl Plan {
    fn new(t: &Triangulation, level: Level) -> Self {
        let faces: Vec<[usize; 3]> = t.faces().keys().map(|f| f.0).collect();
        let tets = tet_argument_edges(t);
        let ne = t.num_edges();
        let mut degree = vec![0usize; ne];
        for f in &faces {
            f.iter().for_each(|&e| degree[e] += 1);
        }
        // Most-constrained first: start from the edge in most faces, then
        // repeatedly take the edge closing the most faces, preferring edges
        // that share faces with already ordered edges.
        let mut placed = vec![false; ne];
        let mut order = Vec::with_capacity(ne);
        while order.len() < ne {
            let score = |e: usize| {
                let mut closes = 0;
                let mut touches = 0;
                for f in faces.iter().filter(|f| f.contains(&e)) {
                    let others = f.iter().filter(|&&x| x != e && placed[x]).count();
                    if others == 2 {
                        closes += 1;
                    }
                    touches += others;
                }
                (closes, touches, degree[e], std::cmp::Reverse(e))
            };
            let best = (0..ne)
                .filter(|&e| !placed[e])
                .max_by_key(|&e| score(e))
                .unwrap();
            placed[best] = true;
            order.push(best);
        }
        let mut pos = vec![0; ne];
        for (p, &e) in order.iter().enumerate() {
            pos[e] = p;
        }
        let mut faces_at = vec![Vec::new(); ne];
        for f in faces {
            let p = f.iter().map(|&e| pos[e]).max().unwrap();
            faces_at[p].push(f);
        }
        let mut tets_at = vec![Vec::new(); ne];
        for a in tets {
            let p = a.iter().map(|&e| pos[e]).max().unwrap();
            tets_at[p].push(a);
        }
        Plan {
            order,
            faces_at,
            tets_at,
            max_twice: level.max_twice_j(),
            n_colors: level.max_twice_j() + 1,
        }
    }
}

/// Racah values for every tuple at small levels, looked up by mixed radix.
struct Lookup {
    dense: Option<Vec<f64>>,
    table: std::sync::Arc<SixjTable>,
    base: usize,
}

impl Lookup {
    const DENSE_LIMIT: usize = 1 << 20;

    fn new(level: Level) -> Self {
        let table = SixjTable::shared(level);
        let base = level.max_twice_j() as usize + 1;
        let size = base.pow(6);
        let dense = (size <= Self::DENSE_LIMIT).then(|| {
            (0..size)
                .into_par_iter()
                .map(|mut i| {
                    let mut tw = [0u32; 6];
                    for x in tw.iter_mut() {
                        *x = (i % base) as u32;
                        i /= base;
                    }
                    table.racah(&SixTuple::from_twice(tw))
                })
                .collect()
        });
        Lookup { dense, table, base }
    }

    #[inline]
    fn racah(&self, tw: [u32; 6]) -> f64 {
        match &self.dense {
            Some(d) => {
                let mut i = 0;
                for &x in tw.iter().rev() {
                    i = i * self.base + x as usize;
                }
                d[i]
            }
            None => self.table.racah(&SixTuple::from_twice(tw)),
        }
    }
}

struct Search<'a> {
    plan: &'a Plan,
    lookup: &'a Lookup,
    delta_col: Vec<f64>,
    budget: Option<u64>,
    shared_nodes: &'a AtomicU64,
}

struct Partial {
    re: PairwiseSum,
    im: PairwiseSum,
    nodes: u64,
    unflushed: u64,
    admissible: u64,
    aborted: bool,
}

impl Search<'_> {
    const FLUSH: u64 = 4096;

    fn count_node(&self, acc: &mut Partial) -> bool {
        acc.nodes += 1;
        acc.unflushed += 1;
        if acc.unflushed >= Self::FLUSH {
            self.flush(acc);
        }
        !acc.aborted
    }

    fn flush(&self, acc: &mut Partial) {
        let total = self
            .shared_nodes
            .fetch_add(acc.unflushed, Ordering::Relaxed)
            + acc.unflushed;
        acc.unflushed = 0;
        if self.budget.is_some_and(|b| total > b) {
            acc.aborted = true;
        }
    }

    /// Colors position `p` onward. `prod` is the product of Δ_j and Racah
    /// values so far, `quarter` the accumulated power of i.
    fn descend(
        &self,
        p: usize,
        col: &mut [u32],
        prod: f64,
        quarter: i64,
        visit: &mut dyn FnMut(&[u32], f64, i64),
        acc: &mut Partial,
    ) {
        if p == self.plan.order.len() {
            acc.admissible += 1;
            visit(col, prod, quarter);
            return;
        }
        let e = self.plan.order[p];
        for c in 0..self.plan.n_colors {
            if !self.count_node(acc) {
                return;
            }
            col[e] = c;
            if !self.plan.faces_at[p]
                .iter()
                .all(|f| twice_admissible(col[f[0]], col[f[1]], col[f[2]], self.plan.max_twice))
            {
                continue;
            }
            let mut v = prod * self.delta_col[c as usize];
            // Δ_j = (−1)^{2j}[2j+1] is real: its sign is already in delta_col.
            let mut q = quarter;
            for a in &self.plan.tets_at[p] {
                let tw = a.map(|x| col[x]);
                v *= self.lookup.racah(tw);
                q -= i64::from(tw.iter().sum::<u32>());
            }
            self.descend(p + 1, col, v, q, visit, acc);
            if acc.aborted {
                return;
            }
        }
    }
}

fn run_search(
    t: &Triangulation,
    level: Level,
    opts: &StateSumOptions,
    first: u32,
    shared: &AtomicU64,
    plan: &Plan,
    lookup: &Lookup,
    visit: &mut dyn FnMut(&[u32], f64, i64),
) -> Partial {
    let search = Search {
        plan,
        lookup,
        delta_col: colors(level)
            .iter()
            .map(|&c| delta_color(c, level))
            .collect(),
        budget: opts.node_budget,
        shared_nodes: shared,
    };
    let mut acc = Partial {
        re: PairwiseSum::default(),
        im: PairwiseSum::default(),
        nodes: 0,
        unflushed: 0,
        admissible: 0,
        aborted: false,
    };
    let mut col = vec![0u32; t.num_edges()];
    if plan.order.is_empty() {
        return acc;
    }
    // Position 0 is fixed to `first`; faces and tetrahedra cannot close on a
    // single edge, so only the Δ factor applies there.
    if !search.count_node(&mut acc) {
        return acc;
    }
    let e0 = plan.order[0];
    col[e0] = first;
    debug_assert!(plan.faces_at[0].is_empty() && plan.tets_at[0].is_empty());
    let v0 = search.delta_col[first as usize];
    search.descend(1, &mut col, v0, 0, visit, &mut acc);
    search.flush(&mut acc);
    acc
}

/// Visits every face-admissible coloring in search order (single-threaded).
/// Returns the number of search nodes visited.
pub fn for_each_admissible_coloring(
    t: &Triangulation,
    level: Level,
    node_budget: Option<u64>,
    mut f: impl FnMut(&Coloring),
) -> Result<u64> {
    let plan = Plan::new(t, level);
    let lookup = Lookup {
        dense: None,
        table: SixjTable::shared(level),
        base: 0,
    };
    let shared = AtomicU64::new(0);
    let opts = StateSumOptions {
        node_budget,
        threads: None,
    };
    let mut nodes = 0;
    for first in 0..plan.n_colors {
        let mut visit = |col: &[u32], _: f64, _: i64| {
            f(&Coloring(
                col.iter().map(|&c| Color::from_twice(c)).collect(),
            ));
        };
        let part = run_search(t, level, &opts, first, &shared, &plan, &lookup, &mut visit);
        nodes += part.nodes;
        if part.aborted {
            return Err(Error::BudgetExceeded {
                budget: node_budget.unwrap_or(0),
            });
        }
    }
    Ok(nodes)
}

/// TV(t, r) with default options.
pub fn tv(t: &Triangulation, level: Level) -> Result<StateSumResult> {
    tv_with(t, level, &StateSumOptions::default())
}

pub fn tv_with(t: &Triangulation, level: Level, opts: &StateSumOptions) -> Result<StateSumResult> {
    if level.r() < 3 {
        return Err(Error::InvalidInput(format!(
            "state sum needs r >= 3, got {}",
            level.r()
        )));
    }
    let violations = t.validate();
    if !violations.is_empty() {
        return Err(Error::Manifold(format!("{violations:?}")));
    }
    let run = || -> Result<StateSumResult> {
        let plan = Plan::new(t, level);
        let lookup = Lookup::new(level);
        let shared = AtomicU64::new(0);
        let parts: Vec<Partial> = (0..plan.n_colors)
            .into_par_iter()
            .map(|first| {
                let mut re = PairwiseSum::default();
                let mut im = PairwiseSum::default();
                let mut visit = |_: &[u32], v: f64, q: i64| match q.rem_euclid(4) {
                    0 => re.push(v),
                    1 => im.push(v),
                    2 => re.push(-v),
                    _ => im.push(-v),
                };
                let mut part =
                    run_search(t, level, opts, first, &shared, &plan, &lookup, &mut visit);
                part.re = re;
                part.im = im;
                part
            })
            .collect();
        if parts.iter().any(|p| p.aborted) {
            return Err(Error::BudgetExceeded {
                budget: opts.node_budget.unwrap_or(0),
            });
        }
        let delta = state_sum_delta(level);
        let norm = delta.powi(-(t.num_vertices() as i32));
        let re: Vec<f64> = parts.iter().map(|p| p.re.total()).collect();
        let im: Vec<f64> = parts.iter().map(|p| p.im.total()).collect();
        Ok(StateSumResult {
            value: norm * tree_sum(&re),
            imaginary_residue: (norm * tree_sum(&im)).abs(),
            colorings_visited: parts.iter().map(|p| p.nodes).sum(),
            admissible_count: parts.iter().map(|p| p.admissible).sum(),
            delta,
        })
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}
