//! Minimal hitting set enumeration (MMCS: minimal-minimal-candidate search).
//!
//! Enumerates every inclusion-minimal set that intersects all members of a
//! family, each exactly once. The search keeps a candidate pool and always
//! branches on the uncovered member with the fewest remaining candidates;
//! a branch is cut as soon as some chosen element stops being the sole
//! hitter of at least one member.

use crate::budget::{Budget, Exhausted};
use crate::literals::Lit;

/// Calls `emit` once for each minimal hitting set of `family` (sorted
/// ascending). An empty family has the single hitting set `{}`; a family
/// containing the empty set has none.
pub fn minimal_hitting_sets<F>(family: &[Vec<Lit>], budget: &Budget, mut emit: F) -> Result<(), Exhausted>
where
    F: FnMut(Vec<Lit>),
{
    if family.iter().any(Vec::is_empty) {
        return Ok(());
    }
    let universe = family.iter().flatten().copied().max().unwrap_or(0) + 1;
    let mut cand = vec![false; universe];
    for l in family.iter().flatten() {
        cand[*l] = true;
    }
    let mut search = Mmcs {
        family,
        budget,
        chosen: Vec::new(),
        cand,
    };
    search.run(&mut emit)
}

/// Collects all minimal hitting sets, sorted lexicographically.
pub fn all_minimal_hitting_sets(family: &[Vec<Lit>], budget: &Budget) -> Result<Vec<Vec<Lit>>, Exhausted> {
    let mut out = Vec::new();
    minimal_hitting_sets(family, budget, |s| out.push(s))?;
    out.sort();
    Ok(out)
}

struct Mmcs<'a> {
    family: &'a [Vec<Lit>],
    budget: &'a Budget,
    chosen: Vec<Lit>,
    cand: Vec<bool>,
}

impl Mmcs<'_> {
    fn hits(&self, member: &[Lit]) -> usize {
        member.iter().filter(|l| self.chosen.contains(l)).count()
    }

    /// Every chosen element is the only chosen element of some member.
    fn all_critical(&self) -> bool {
        self.chosen
            .iter()
            .all(|e| self.family.iter().any(|m| m.contains(e) && self.hits(m) == 1))
    }

    fn run<F: FnMut(Vec<Lit>)>(&mut self, emit: &mut F) -> Result<(), Exhausted> {
        self.budget.check()?;
        let pick = self
            .family
            .iter()
            .filter(|m| self.hits(m) == 0)
            .min_by_key(|m| m.iter().filter(|l| self.cand[**l]).count());
        let Some(member) = pick else {
            let mut found = self.chosen.clone();
            found.sort_unstable();
            emit(found);
            return Ok(());
        };
        let branch: Vec<Lit> = member.iter().copied().filter(|l| self.cand[*l]).collect();
        for e in &branch {
            self.cand[*e] = false;
        }
        for e in &branch {
            self.chosen.push(*e);
            if self.all_critical() {
                self.run(emit)?;
            }
            self.chosen.pop();
            self.cand[*e] = true;
        }
        Ok(())
    }
}
