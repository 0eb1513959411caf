use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::Operator;
use crate::decompose::{NeighborLists, VicinityIndex};

/// A route in the working solution: a visit sequence and its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkRoute {
    pub visits: Vec<usize>,
    pub origin: usize,
}

/// Which route pairs and vertex moves are considered.
#[derive(Debug, Clone, Copy)]
pub enum Pruning<'a> {
    /// Every pair of distinct routes, no vertex filter.
    None,
    /// Routes from different subproblems only.
    CrossBorder,
    /// Different subproblems in each other's vicinity, neighbouring vertices,
    /// fuzzy moving vertices.
    Vicinity(&'a VicinityIndex),
    /// Any distinct routes, neighbouring vertices only.
    Granular(&'a NeighborLists),
}

impl Pruning<'_> {
    #[inline]
    fn pair_allowed(&self, r: &WorkRoute, s: &WorkRoute) -> bool {
        match self {
            Pruning::None | Pruning::Granular(_) => true,
            Pruning::CrossBorder => r.origin != s.origin,
            Pruning::Vicinity(v) => r.origin != s.origin && v.is_subproblem_neighbor(r.origin, s.origin),
        }
    }

    #[inline]
    fn may_move(&self, i: usize) -> bool {
        match self {
            Pruning::Vicinity(v) => v.is_fuzzy(i),
            _ => true,
        }
    }

    #[inline]
    fn near(&self, i: usize, j: usize) -> bool {
        match self {
            Pruning::Vicinity(v) => v.is_customer_neighbor(i, j),
            Pruning::Granular(g) => g.contains(i, j),
            Pruning::None | Pruning::CrossBorder => true,
        }
    }
}

/// A candidate move. `r` and `s` index the working route list; `a` and `b`
/// are positions whose meaning depends on the operator:
///
/// * cross-over: `R[..a] + S[b..]` and `S[..b] + R[a..]`;
/// * relocate: `R[a]` inserted before position `b` of `S`;
/// * swap: `R[a]` and `S[b]` trade places;
/// * inter 2-opt: `R[..a] + rev(S[..b])` and `rev(R[a..]) + S[b..]`;
/// * intra 2-opt: `R[a..=b]` reversed; intra swap: `R[a]` and `R[b]` swapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Move {
    pub operator: Operator,
    pub r: usize,
    pub s: Option<usize>,
    pub a: usize,
    pub b: usize,
}

/// Visits every admissible move in `order` (route indices) and operator
/// order. Stops early when `f` breaks.
pub fn for_each_candidate<F>(
    routes: &[WorkRoute],
    order: &[usize],
    operators: &[Operator],
    pruning: Pruning<'_>,
    mut f: F,
) -> ControlFlow<()>
where
    F: FnMut(Move) -> ControlFlow<()>,
{
    for &r in order {
        let route = &routes[r].visits;
        for &op in operators {
            if op.is_intra() {
                intra_moves(route, r, op, &mut f)?;
                continue;
            }
            for &s in order {
                if s == r || !pruning.pair_allowed(&routes[r], &routes[s]) {
                    continue;
                }
                inter_moves(route, &routes[s].visits, r, s, op, pruning, &mut f)?;
            }
        }
    }
    ControlFlow::Continue(())
}

fn intra_moves<F>(route: &[usize], r: usize, op: Operator, f: &mut F) -> ControlFlow<()>
where
    F: FnMut(Move) -> ControlFlow<()>,
{
    let len = route.len();
    for a in 0..len {
        for b in a + 1..len {
            f(Move { operator: op, r, s: None, a, b })?;
        }
    }
    ControlFlow::Continue(())
}

fn inter_moves<F>(
    route: &[usize],
    other: &[usize],
    r: usize,
    s: usize,
    op: Operator,
    pruning: Pruning<'_>,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(Move) -> ControlFlow<()>,
{
    let mv = |a, b| Move { operator: op, r, s: Some(s), a, b };
    match op {
        Operator::CrossOver => {
            for a in 1..=route.len() {
                let i = route[a - 1];
                if !pruning.may_move(i) {
                    continue;
                }
                for (b, &j) in other.iter().enumerate() {
                    if pruning.near(i, j) {
                        f(mv(a, b))?;
                    }
                }
            }
        }
        Operator::Relocate => {
            for (a, &i) in route.iter().enumerate() {
                if !pruning.may_move(i) {
                    continue;
                }
                for b in 0..=other.len() {
                    let before = b.checked_sub(1).map(|k| other[k]);
                    let after = other.get(b).copied();
                    let ok = other.is_empty()
                        || before.is_some_and(|j| pruning.near(i, j))
                        || after.is_some_and(|j| pruning.near(i, j));
                    if ok {
                        f(mv(a, b))?;
                    }
                }
            }
        }
        Operator::Swap => {
            for (a, &i) in route.iter().enumerate() {
                if !pruning.may_move(i) {
                    continue;
                }
                for (b, &j) in other.iter().enumerate() {
                    if pruning.near(i, j) {
                        f(mv(a, b))?;
                    }
                }
            }
        }
        Operator::TwoOptInter => {
            for a in 1..=route.len() {
                let i = route[a - 1];
                if !pruning.may_move(i) {
                    continue;
                }
                for b in 1..=other.len() {
                    if pruning.near(i, other[b - 1]) {
                        f(mv(a, b))?;
                    }
                }
            }
        }
        Operator::TwoOptIntra | Operator::SwapIntra => unreachable!("intra operators handled separately"),
    }
    ControlFlow::Continue(())
}

/// All admissible moves over the routes in their given order.
pub fn candidate_moves(routes: &[WorkRoute], operators: &[Operator], pruning: Pruning<'_>) -> Vec<Move> {
    let order: Vec<usize> = (0..routes.len()).collect();
    let mut out = Vec::new();
    let _ = for_each_candidate(routes, &order, operators, pruning, |m| {
        out.push(m);
        ControlFlow::Continue(())
    });
    out
}

/// Writes the sequences produced by `mv` into `first` and `second`.
/// `second` stays empty for intra moves.
pub fn apply_into(routes: &[WorkRoute], mv: &Move, first: &mut Vec<usize>, second: &mut Vec<usize>) {
    first.clear();
    second.clear();
    let r = &routes[mv.r].visits;
    let (a, b) = (mv.a, mv.b);
    match mv.operator {
        Operator::TwoOptIntra => {
            first.extend_from_slice(&r[..a]);
            first.extend(r[a..=b].iter().rev());
            first.extend_from_slice(&r[b + 1..]);
        }
        Operator::SwapIntra => {
            first.extend_from_slice(r);
            first.swap(a, b);
        }
        _ => {
            let s = &routes[mv.s.expect("inter move has a second route")].visits;
            match mv.operator {
                Operator::CrossOver => {
                    first.extend_from_slice(&r[..a]);
                    first.extend_from_slice(&s[b..]);
                    second.extend_from_slice(&s[..b]);
                    second.extend_from_slice(&r[a..]);
                }
                Operator::Relocate => {
                    first.extend_from_slice(&r[..a]);
                    first.extend_from_slice(&r[a + 1..]);
                    second.extend_from_slice(&s[..b]);
                    second.push(r[a]);
                    second.extend_from_slice(&s[b..]);
                }
                Operator::Swap => {
                    first.extend_from_slice(r);
                    first[a] = s[b];
                    second.extend_from_slice(s);
                    second[b] = r[a];
                }
                Operator::TwoOptInter => {
                    first.extend_from_slice(&r[..a]);
                    first.extend(s[..b].iter().rev());
                    second.extend(r[a..].iter().rev());
                    second.extend_from_slice(&s[b..]);
                }
                Operator::TwoOptIntra | Operator::SwapIntra => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn routes() -> Vec<WorkRoute> {
        vec![
            WorkRoute { visits: vec![1, 2, 3], origin: 0 },
            WorkRoute { visits: vec![4, 5], origin: 1 },
        ]
    }

    fn applied(mv: Move) -> (Vec<usize>, Vec<usize>) {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        apply_into(&routes(), &mv, &mut x, &mut y);
        (x, y)
    }

    #[test]
    fn operator_shapes() {
        let m = |operator, a, b| Move { operator, r: 0, s: Some(1), a, b };
        assert_eq!(applied(m(Operator::CrossOver, 1, 1)), (vec![1, 5], vec![4, 2, 3]));
        assert_eq!(applied(m(Operator::Relocate, 1, 2)), (vec![1, 3], vec![4, 5, 2]));
        assert_eq!(applied(m(Operator::Swap, 2, 0)), (vec![1, 2, 4], vec![3, 5]));
        assert_eq!(applied(m(Operator::TwoOptInter, 1, 2)), (vec![1, 5, 4], vec![3, 2]));
        let intra = |operator, a, b| Move { operator, r: 0, s: None, a, b };
        assert_eq!(applied(intra(Operator::TwoOptIntra, 0, 2)).0, vec![3, 2, 1]);
        assert_eq!(applied(intra(Operator::SwapIntra, 0, 1)).0, vec![2, 1, 3]);
    }

    #[test]
    fn customer_conservation_for_every_candidate() {
        let rs = routes();
        for mv in candidate_moves(&rs, &Operator::ALL, Pruning::None) {
            let (x, y) = applied(mv);
            let mut all: Vec<usize> = x.iter().chain(&y).copied().collect();
            if mv.s.is_none() {
                all.extend_from_slice(&rs[1 - mv.r].visits);
            }
            all.sort();
            assert_eq!(all, vec![1, 2, 3, 4, 5], "{mv:?}");
        }
    }

    #[test]
    fn cross_border_skips_same_origin() {
        let mut rs = routes();
        rs[1].origin = 0;
        let inter: Vec<Move> = candidate_moves(&rs, &[Operator::Swap], Pruning::CrossBorder);
        assert!(inter.is_empty());
        assert_eq!(candidate_moves(&rs, &[Operator::Swap], Pruning::None).len(), 12);
    }
}
