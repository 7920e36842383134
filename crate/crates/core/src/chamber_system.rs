//! Chamber systems with a family of apartments, and the check that they
//! form a spherical building of the given Coxeter type.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::coxeter::{WeylGroup, WeylId};

/// Chambers are `0..chambers`. Each apartment labels the elements of W̄
/// by chambers; each chamber has one panel id per type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChamberSystem {
    pub chambers: usize,
    /// `apartments[a][w]` is the chamber of apartment `a` labeled `w`.
    pub apartments: Vec<Vec<usize>>,
    /// `panels[c][i]` is the id of the type-i panel of chamber `c`.
    pub panels: Vec<Vec<usize>>,
}

impl ChamberSystem {
    pub fn rank(&self) -> usize {
        self.panels.first().map_or(0, |p| p.len())
    }

    /// Chambers sharing at least one panel with `c`.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut by_panel: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (c, ps) in self.panels.iter().enumerate() {
            for (i, &p) in ps.iter().enumerate() {
                by_panel.entry((i, p)).or_default().push(c);
            }
        }
        let mut out = vec![BTreeSet::new(); self.chambers];
        for members in by_panel.values() {
            for &a in members {
                for &b in members {
                    if a != b {
                        out[a].insert(b);
                    }
                }
            }
        }
        out.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// All-pairs gallery distances; `usize::MAX` for unreachable pairs.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        let adj = self.neighbours();
        (0..self.chambers)
            .map(|s| {
                let mut d = vec![usize::MAX; self.chambers];
                d[s] = 0;
                let mut q = VecDeque::from([s]);
                while let Some(a) = q.pop_front() {
                    for &b in &adj[a] {
                        if d[b] == usize::MAX {
                            d[b] = d[a] + 1;
                            q.push_back(b);
                        }
                    }
                }
                d
            })
            .collect()
    }

    /// Chamber sets of the apartments.
    pub fn apartment_sets(&self) -> Vec<BTreeSet<usize>> {
        self.apartments.iter().map(|l| l.iter().copied().collect()).collect()
    }

    /// An apartment containing all of the given chambers.
    pub fn common_apartment(&self, chambers: &[usize]) -> Option<usize> {
        self.apartments.iter().position(|l| chambers.iter().all(|c| l.contains(c)))
    }

    /// Checks the building axioms: apartments are Coxeter complexes of W̄
    /// (injective labelings compatible with panels, gallery distances equal
    /// to Coxeter lengths), every two chambers share an apartment, and two
    /// apartments sharing a chamber are isomorphic by a type-preserving map
    /// fixing their intersection.
    pub fn check(&self, group: &WeylGroup) -> Result<(), String> {
        let order = group.order();
        let rank = group.rank();
        if self.chambers == 0 {
            return Err("no chambers".into());
        }
        if self.panels.len() != self.chambers || self.panels.iter().any(|p| p.len() != rank) {
            return Err("panel table has the wrong shape".into());
        }
        for (a, labels) in self.apartments.iter().enumerate() {
            if labels.len() != order {
                return Err(format!("apartment {a} has {} chambers, expected {order}", labels.len()));
            }
            let distinct: BTreeSet<_> = labels.iter().collect();
            if distinct.len() != order {
                return Err(format!("apartment {a} labels two elements of W by the same chamber"));
            }
            for w in group.ids() {
                for i in 0..rank {
                    let ws = group.mul(w, group.simple(i));
                    let (c, d) = (labels[w.0], labels[ws.0]);
                    if self.panels[c][i] != self.panels[d][i] {
                        return Err(format!("apartment {a}: chambers {c} and {d} should share their type-{i} panel"));
                    }
                }
            }
            for w in group.ids() {
                for u in group.ids() {
                    for i in 0..rank {
                        let same_coset = group.coset_rep(w, crate::coxeter::FaceMask::panel(i))
                            == group.coset_rep(u, crate::coxeter::FaceMask::panel(i));
                        let share = self.panels[labels[w.0]][i] == self.panels[labels[u.0]][i];
                        if same_coset != share {
                            return Err(format!(
                                "apartment {a}: panel incidence of chambers {} and {} differs from the Coxeter complex",
                                labels[w.0], labels[u.0]
                            ));
                        }
                    }
                }
            }
        }
        let dist = self.distances();
        let sets = self.apartment_sets();
        for c in 0..self.chambers {
            for d in c..self.chambers {
                if !sets.iter().any(|s| s.contains(&c) && s.contains(&d)) {
                    return Err(format!("chambers {c} and {d} lie in no common apartment"));
                }
            }
        }
        for (a, labels) in self.apartments.iter().enumerate() {
            for w in group.ids() {
                for u in group.ids() {
                    let expect = group.gallery_distance(w, u);
                    let got = dist[labels[w.0]][labels[u.0]];
                    if got != expect {
                        return Err(format!(
                            "apartment {a}: gallery distance between chambers {} and {} is {got}, expected {expect}",
                            labels[w.0], labels[u.0]
                        ));
                    }
                }
            }
        }
        for (a, la) in self.apartments.iter().enumerate() {
            for (b, lb) in self.apartments.iter().enumerate().skip(a + 1) {
                let shared: Vec<(WeylId, WeylId)> = group
                    .ids()
                    .filter_map(|w| lb.iter().position(|&c| c == la[w.0]).map(|u| (w, WeylId(u))))
                    .collect();
                let Some(&(wa, wb)) = shared.first() else { continue };
                // The type-preserving isomorphism a → b fixing that chamber.
                let shift = group.mul(wb, group.inverse(wa));
                for &(x, y) in &shared {
                    if group.mul(shift, x) != y {
                        return Err(format!(
                            "apartments {a} and {b}: no isomorphism fixes their common chambers {} and {}",
                            la[wa.0], la[x.0]
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}
