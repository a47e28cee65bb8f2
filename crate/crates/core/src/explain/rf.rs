//! Random forests: sufficient (counterfactual search plus deletion-based
//! minimal fixed set), contrastive and majority explanations.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::budget::{Budget, Exhausted};
use crate::hitting::minimal_hitting_sets;
use crate::literals::{Lit, Thresholds};
use crate::model::Class;
use crate::traversal::{forest_vote_under_flips, Mode, ModeMap};

use super::{search_order, ExplainError, Explanation, ExplanationKind, Options, Query};

/// A flip set that changes the forest prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterfactualWitness {
    pub flips: Vec<Lit>,
    pub resulting_class: Class,
    pub disagreeing_count: usize,
}

/// One way for a tree to land on a leaf of the other class.
#[derive(Debug, Clone)]
struct Route {
    requires: Vec<(Lit, bool)>,
    flips: Vec<Lit>,
    depth: usize,
    leaf: usize,
}

/// Searches for literal assignments under which enough trees disagree with
/// the forest prediction.
///
/// A solution picks, for each of several trees, one consistent path to a
/// leaf of the other class, such that all picked paths agree on every
/// literal they share and every literal they change is allowed to change.
#[derive(Debug)]
pub struct WitnessSearch<'q, 'm> {
    query: &'q Query<'m>,
    routes: Vec<Vec<Route>>,
}

const CHECK_EVERY: u32 = 1 << 10;

impl<'q, 'm> WitnessSearch<'q, 'm> {
    pub fn new(query: &'q Query<'m>) -> Self {
        let class = query.class();
        let routes = (0..query.n_trees())
            .map(|t| {
                let mut routes: Vec<Route> = query
                    .paths_avoiding(t, class)
                    .into_iter()
                    .map(|p| Route {
                        flips: p.disagreements(&query.bi),
                        requires: p.requires,
                        depth: p.depth,
                        leaf: p.leaf,
                    })
                    .collect();
                routes.sort_by_key(|r| (r.flips.len(), r.depth, r.leaf));
                routes
            })
            .collect();
        Self { query, routes }
    }

    /// A witness changing only literals outside `fixed`, with more than
    /// `threshold` disagreeing trees.
    pub fn counterfactual(
        &self,
        fixed: &[Lit],
        threshold: usize,
        budget: &Budget,
    ) -> Result<Option<CounterfactualWitness>, Exhausted> {
        let allowed = self.query.complement(fixed);
        self.within(&allowed, threshold, budget)
    }

    /// A witness whose flips are a subset of `allowed`.
    pub fn within(
        &self,
        allowed: &[Lit],
        threshold: usize,
        budget: &Budget,
    ) -> Result<Option<CounterfactualWitness>, Exhausted> {
        budget.check()?;
        let mut dfs = self.dfs(allowed, threshold + 1, budget);
        if !dfs.first(0, 0)? {
            return Ok(None);
        }
        let flips = dfs.flips();
        let vote = forest_vote_under_flips(self.query.model, &self.query.table, &self.query.bi, &flips);
        Ok(Some(CounterfactualWitness {
            flips,
            resulting_class: vote.class,
            disagreeing_count: vote.disagreeing,
        }))
    }

    /// Calls `visit` with the flip set of every consistent choice of exactly
    /// `threshold + 1` trees.
    fn each_selection<F>(&self, threshold: usize, budget: &Budget, visit: F) -> Result<(), ExplainError>
    where
        F: FnMut(Vec<Lit>) -> Result<(), ExplainError>,
    {
        let all: Vec<Lit> = self.query.table.ids().collect();
        let mut dfs = self.dfs(&all, threshold + 1, budget);
        let mut visit = visit;
        dfs.every(0, 0, &mut visit)
    }

    fn dfs<'s>(&'s self, allowed: &[Lit], needed: usize, budget: &'s Budget) -> Dfs<'s> {
        let n = self.query.n_literals();
        let mut ok = vec![false; n + 1];
        for l in allowed {
            ok[*l] = true;
        }
        let mut trees: Vec<(usize, Vec<&Route>)> = self
            .routes
            .iter()
            .enumerate()
            .map(|(t, rs)| {
                (
                    t,
                    rs.iter().filter(|r| r.flips.iter().all(|l| ok[*l])).collect::<Vec<_>>(),
                )
            })
            .filter(|(_, rs)| !rs.is_empty())
            .collect();
        trees.sort_by_key(|(t, rs)| (rs[0].flips.len(), *t));
        Dfs {
            trees: trees.into_iter().map(|(_, rs)| rs).collect(),
            truth: (0..=n).map(|l| l > 0 && self.query.bi.value(l)).collect(),
            assign: vec![None; n + 1],
            trail: Vec::new(),
            needed,
            budget,
            steps: 0,
        }
    }
}

struct Dfs<'s> {
    trees: Vec<Vec<&'s Route>>,
    truth: Vec<bool>,
    assign: Vec<Option<bool>>,
    trail: Vec<Lit>,
    needed: usize,
    budget: &'s Budget,
    steps: u32,
}

impl Dfs<'_> {
    fn tick(&mut self) -> Result<(), Exhausted> {
        self.steps = self.steps.wrapping_add(1);
        if self.steps.is_multiple_of(CHECK_EVERY) {
            self.budget.check()?;
        }
        Ok(())
    }

    fn fits(&self, route: &Route) -> bool {
        route
            .requires
            .iter()
            .all(|(l, v)| self.assign[*l].is_none_or(|a| a == *v))
    }

    /// Whether trees from `from` on can still lift `count` to `needed`.
    fn reachable(&self, from: usize, count: usize) -> bool {
        let mut possible = count;
        for routes in &self.trees[from..] {
            if possible >= self.needed {
                return true;
            }
            if routes.iter().any(|r| self.fits(r)) {
                possible += 1;
            }
        }
        possible >= self.needed
    }

    fn apply(&mut self, route: &Route) -> usize {
        let mark = self.trail.len();
        for (l, v) in &route.requires {
            if self.assign[*l].is_none() {
                self.assign[*l] = Some(*v);
                self.trail.push(*l);
            }
        }
        mark
    }

    fn undo(&mut self, mark: usize) {
        for l in self.trail.drain(mark..) {
            self.assign[l] = None;
        }
    }

    fn flips(&self) -> Vec<Lit> {
        let mut out: Vec<Lit> = self
            .trail
            .iter()
            .copied()
            .filter(|l| self.assign[*l] != Some(self.truth[*l]))
            .collect();
        out.sort_unstable();
        out
    }

    /// Stops at the first solution, leaving its assignment in place.
    fn first(&mut self, i: usize, count: usize) -> Result<bool, Exhausted> {
        if count >= self.needed {
            return Ok(true);
        }
        self.tick()?;
        if !self.reachable(i, count) {
            return Ok(false);
        }
        for r in 0..self.trees[i].len() {
            let route = self.trees[i][r];
            if !self.fits(route) {
                continue;
            }
            let mark = self.apply(route);
            if self.first(i + 1, count + 1)? {
                return Ok(true);
            }
            self.undo(mark);
        }
        self.first(i + 1, count)
    }

    fn every<F>(&mut self, i: usize, count: usize, visit: &mut F) -> Result<(), ExplainError>
    where
        F: FnMut(Vec<Lit>) -> Result<(), ExplainError>,
    {
        if count >= self.needed {
            return visit(self.flips());
        }
        self.tick()?;
        if !self.reachable(i, count) {
            return Ok(());
        }
        for r in 0..self.trees[i].len() {
            let route = self.trees[i][r];
            if !self.fits(route) {
                continue;
            }
            let mark = self.apply(route);
            self.every(i + 1, count + 1, visit)?;
            self.undo(mark);
        }
        self.every(i + 1, count, visit)
    }
}

pub fn rf_counterfactual_exists(
    q: &Query,
    fixed: &[Lit],
    budget: &Budget,
) -> Result<Option<CounterfactualWitness>, Exhausted> {
    WitnessSearch::new(q).counterfactual(fixed, q.thresholds().suf, budget)
}

/// Deletion-based minimal fixed set: starting from every literal fixed,
/// release literals one at a time and keep each release that still admits
/// no counterfactual.
pub fn sufficient_one(q: &Query, opts: &Options) -> Result<Explanation, ExplainError> {
    let search = WitnessSearch::new(q);
    let suf = q.thresholds().suf;
    let mut fixed = vec![true; q.n_literals() + 1];
    for lit in search_order(q.table.ids().collect(), opts.seed) {
        fixed[lit] = false;
        let released: Vec<Lit> = q.table.ids().filter(|l| !fixed[*l]).collect();
        if search.within(&released, suf, &opts.budget)?.is_some() {
            fixed[lit] = true;
        }
    }
    let lits = q.table.ids().filter(|l| fixed[*l]).collect();
    Ok(q.explanation(ExplanationKind::RfSufficient, lits))
}

/// First counterfactual, then shrink it: each literal is dropped in turn
/// (highest id first) and the flip set moves to any witness that avoids it.
pub fn contrastive_one(q: &Query, opts: &Options) -> Result<Explanation, ExplainError> {
    let search = WitnessSearch::new(q);
    let con = q.thresholds().con;
    let all: Vec<Lit> = q.table.ids().collect();
    let Some(first) = search.within(&all, con, &opts.budget)? else {
        return Err(ExplainError::ContrastiveImpossible);
    };
    let mut current = first.flips;
    let mut order = current.clone();
    order.reverse();
    for lit in search_order(order, opts.seed) {
        if !current.contains(&lit) {
            continue;
        }
        let rest: Vec<Lit> = current.iter().copied().filter(|l| *l != lit).collect();
        if let Some(w) = search.within(&rest, con, &opts.budget)? {
            current = w.flips;
        }
    }
    Ok(q.explanation(ExplanationKind::RfContrastive, current))
}

pub fn contrastive_all(q: &Query, budget: &Budget, found: &mut Vec<Vec<Lit>>) -> Result<(), ExplainError> {
    let search = WitnessSearch::new(q);
    let con = q.thresholds().con;
    let mut seen: HashSet<Vec<Lit>> = HashSet::new();
    let mut any = false;
    search.each_selection(con, budget, |flips| {
        any = true;
        if !seen.insert(flips.clone()) {
            return Ok(());
        }
        for lit in &flips {
            let rest: Vec<Lit> = flips.iter().copied().filter(|l| l != lit).collect();
            if search.within(&rest, con, budget)?.is_some() {
                return Ok(());
            }
        }
        found.push(flips);
        Ok(())
    })?;
    if !any {
        return Err(ExplainError::ContrastiveImpossible);
    }
    Ok(())
}

/// Number of trees whose class may leave the prediction when `free` is free.
fn unsettled(q: &Query, modes: &ModeMap) -> usize {
    let other = 1 - q.class();
    (0..q.n_trees())
        .filter(|t| {
            q.tree(*t)
                .class_set(&q.bi, modes)
                .expect("rf has class leaves")
                .contains(other)
        })
        .count()
}

/// Canonical greedy order for majority search: trees with the shortest
/// decision path for the instance first, each contributing its literals in
/// preorder, then any literal not yet listed.
fn majority_order(q: &Query) -> Vec<Lit> {
    let mut trees: Vec<(usize, usize)> = (0..q.n_trees())
        .map(|t| {
            let bt = q.tree(t);
            let leaf = bt.leaf_under(|l| q.bi.value(l));
            let depth = bt
                .leaf_paths()
                .into_iter()
                .find(|p| p.leaf == leaf)
                .map_or(0, |p| p.depth);
            (depth, t)
        })
        .collect();
    trees.sort_by_key(|(depth, _)| *depth);
    let mut listed = vec![false; q.n_literals() + 1];
    let mut order = Vec::with_capacity(q.n_literals());
    let tree_lits = trees
        .iter()
        .flat_map(|(_, t)| q.table.tree_literals(q.model, *t))
        .chain(q.table.ids());
    for lit in tree_lits {
        if !listed[lit] {
            listed[lit] = true;
            order.push(lit);
        }
    }
    order
}

pub fn majority_one(q: &Query, opts: &Options) -> Result<Explanation, ExplainError> {
    let majo = q.thresholds().majo;
    let mut modes = ModeMap::all_fixed(q.n_literals());
    opts.budget.check()?;
    if unsettled(q, &modes) >= majo {
        return Err(ExplainError::MajorityImpossible);
    }
    for lit in search_order(majority_order(q), opts.seed) {
        opts.budget.check()?;
        modes.set(lit, Mode::Free);
        if unsettled(q, &modes) >= majo {
            modes.set(lit, Mode::Fixed);
        }
    }
    Ok(q.explanation(ExplanationKind::RfMajority, modes.with_mode(Mode::Fixed)))
}

/// Every minimal majority explanation pins some choice of trees; for each
/// choice of just enough non-constant trees the candidates are the minimal
/// hitting sets of their combined change families.
pub fn majority_all(q: &Query, budget: &Budget, found: &mut Vec<Vec<Lit>>) -> Result<(), ExplainError> {
    let class = q.class();
    let families: Vec<Vec<Vec<Lit>>> = (0..q.n_trees()).map(|t| q.change_family(t, class)).collect();
    let need = Thresholds::pinned_needed(q.n_trees());
    let constant = families.iter().filter(|f| f.is_empty()).count();
    let pinnable: Vec<usize> = (0..q.n_trees())
        .filter(|t| !families[*t].is_empty() && families[*t].iter().all(|m| !m.is_empty()))
        .collect();
    if constant >= need {
        found.push(Vec::new());
        return Ok(());
    }
    let pick = need - constant;
    if pinnable.len() < pick {
        return Err(ExplainError::MajorityImpossible);
    }
    let pins = |term: &[Lit]| {
        families
            .iter()
            .filter(|f| f.iter().all(|m| m.iter().any(|l| term.contains(l))))
            .count()
    };
    let mut seen: HashSet<Vec<Lit>> = HashSet::new();
    let mut chosen = Vec::with_capacity(pick);
    let mut result = Ok(());
    for_each_subset(&pinnable, pick, &mut chosen, &mut |subset| {
        let mut union: Vec<Vec<Lit>> = subset.iter().flat_map(|t| families[*t].iter().cloned()).collect();
        union.sort();
        union.dedup();
        let mut candidates = Vec::new();
        if let Err(e) = minimal_hitting_sets(&union, budget, |h| candidates.push(h)) {
            result = Err(e.into());
            return false;
        }
        for term in candidates {
            if !seen.insert(term.clone()) {
                continue;
            }
            let minimal = term.iter().all(|l| {
                let rest: Vec<Lit> = term.iter().copied().filter(|x| x != l).collect();
                pins(&rest) < need
            });
            if minimal {
                found.push(term);
            }
        }
        true
    });
    result
}

/// Visits every `k`-subset of `items` in lexicographic order until `visit`
/// returns false.
fn for_each_subset<F>(items: &[usize], k: usize, chosen: &mut Vec<usize>, visit: &mut F) -> bool
where
    F: FnMut(&[usize]) -> bool,
{
    if chosen.len() == k {
        return visit(chosen);
    }
    for (i, item) in items.iter().enumerate() {
        if items.len() - i < k - chosen.len() {
            break;
        }
        chosen.push(*item);
        let go_on = for_each_subset(&items[i + 1..], k, chosen, visit);
        chosen.pop();
        if !go_on {
            return false;
        }
    }
    true
}
