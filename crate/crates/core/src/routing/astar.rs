use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::geom::{Dir, Point};

use super::{Node, RouteError, RoutingGrid, ViaCost};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub path: Vec<Node>,
    /// Path cost in grid steps (via charges included).
    pub cost: u64,
    pub expanded: usize,
}

impl SearchResult {
    pub fn length_um(&self, pitch: f64) -> f64 {
        self.path.windows(2).filter(|w| w[0].layer == w[1].layer).count() as f64 * pitch
    }
}

struct Label {
    g: u64,
    parent: Option<Node>,
    closed: bool,
}

/// Vertical connection from `from` to `to` through every layer in between.
fn via_stack(from: Node, to_layer: u8) -> impl Iterator<Item = Node> {
    let (a, b) = (from.layer, to_layer);
    let layers: Vec<u8> = if a < b { (a + 1..=b).collect() } else { (b..a).rev().collect() };
    layers.into_iter().map(move |l| Node::new(from.ix, from.iy, l))
}

/// A* over the grid. In-plane steps cost 1, a layer change maps `g` through
/// `via`, and `h` is the in-plane Manhattan distance to `t`. The search ends
/// at the first popped node above or below `t` whose via stack down (or up)
/// to `t` is free; the returned path then continues vertically onto `t`'s
/// layer at no extra cost. Equal `f` pops the deeper node (larger `g`)
/// first, then insertion order.
pub fn astar_route(grid: &RoutingGrid, s: Node, t: Node, via: ViaCost) -> Result<SearchResult, RouteError> {
    if s == t {
        return Ok(SearchResult {
            path: Vec::new(),
            cost: 0,
            expanded: 0,
        });
    }
    let n_layers = grid.n_layers() as u8;
    let mut labels: FxHashMap<Node, Label> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    let mut seq: u64 = 0;
    labels.insert(
        s,
        Label {
            g: 0,
            parent: None,
            closed: false,
        },
    );
    heap.push((Reverse(s.manhattan_xy(&t)), 0u64, Reverse(seq), s));
    let mut expanded = 0usize;

    while let Some((_, g, _, p)) = heap.pop() {
        let label = labels.get_mut(&p).expect("pushed nodes have labels");
        if label.closed || g > label.g {
            continue;
        }
        label.closed = true;
        expanded += 1;
        if p.same_xy(&t) && via_stack(p, t.layer).all(|q| q == t || !grid.is_blocked(&q)) {
            let mut path = vec![p];
            let mut cur = p;
            while let Some(par) = labels[&cur].parent {
                path.push(par);
                cur = par;
            }
            path.reverse();
            path.extend(via_stack(p, t.layer));
            return Ok(SearchResult { path, cost: g, expanded });
        }
        let mut relax = |q: Node, gq: u64, heap: &mut BinaryHeap<_>| {
            if grid.is_blocked(&q) {
                return;
            }
            let better = match labels.get(&q) {
                Some(l) => !l.closed && gq < l.g,
                None => true,
            };
            if better {
                labels.insert(
                    q,
                    Label {
                        g: gq,
                        parent: Some(p),
                        closed: false,
                    },
                );
                seq += 1;
                heap.push((Reverse(gq.saturating_add(q.manhattan_xy(&t))), gq, Reverse(seq), q));
            }
        };
        for d in Dir::ALL {
            relax(p.step(d), g + 1, &mut heap);
        }
        let gv = via.apply(g);
        if p.layer + 1 < n_layers {
            relax(Node::new(p.ix, p.iy, p.layer + 1), gv, &mut heap);
        }
        if p.layer > 0 {
            relax(Node::new(p.ix, p.iy, p.layer - 1), gv, &mut heap);
        }
    }
    Err(RouteError::Unroutable { from: s, to: t })
}

/// Kruskal spanning tree under the Manhattan metric; edges are considered
/// in `(length, i, j)` order so ties resolve deterministically.
pub fn mst(points: &[Point]) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((points[i].manhattan(&points[j]), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            out.push((i, j));
        }
    }
    out
}

pub fn mst_length(points: &[Point], edges: &[(usize, usize)]) -> f64 {
    edges.iter().map(|&(i, j)| points[i].manhattan(&points[j])).sum()
}
