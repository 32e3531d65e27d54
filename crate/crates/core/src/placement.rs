//! Step 1: placement poses for every transfer, induced orderings and the
//! per-action collision cache.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::deadline::Deadline;
use crate::geom::{contains, Placed, Pose2, Shape};
use crate::rng::{labeled_rng, PlannerRng};
use crate::scene::{FixedId, MovableId, RegionId, RegionSpec, Scenario};
use crate::task::{ActionId, Occupancy, OrderingSet, Reachability, TaskPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("movable {movable} does not fit in region {region}")]
    NoSamples { movable: MovableId, region: RegionId },
    #[error("no placement assignment exists for region {region}")]
    Infeasible { region: RegionId },
    #[error("placement step exceeded its time limit")]
    StepTimeout,
}

#[derive(Debug, Clone)]
pub struct PlacementParams {
    pub n_place: usize,
    /// Minimum gap kept between co-present objects and to fixed shapes.
    pub clearance: f64,
    pub extend_samples: bool,
    pub seed: u64,
    pub deadline: Deadline,
}

impl Default for PlacementParams {
    fn default() -> Self {
        PlacementParams {
            n_place: 10,
            clearance: 0.03,
            extend_samples: false,
            seed: 0,
            deadline: Deadline::never(),
        }
    }
}

/// A movable at a fixed pose for one stay in a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedObject {
    pub movable: MovableId,
    pub pose: Pose2,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CacheEntry {
    /// Objects that may be in place when the action's transition fires.
    pub at_end: Vec<CachedObject>,
    /// Objects that may be in place at some time while the action runs.
    pub during: Vec<CachedObject>,
    pub fixed: Vec<FixedId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollisionCache {
    entries: BTreeMap<ActionId, CacheEntry>,
}

impl CollisionCache {
    pub fn get(&self, a: &ActionId) -> Option<&CacheEntry> {
        self.entries.get(a)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ActionId, &CacheEntry)> {
        self.entries.iter()
    }
}

/// One stay with its assigned pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Stay {
    pub occ: Occupancy,
    pub pose: Pose2,
}

#[derive(Debug, Clone)]
pub struct PlacementSolution {
    pub pose_of: BTreeMap<ActionId, Pose2>,
    /// Index of the chosen sample for each transfer; keys the backtracking tabu set.
    pub sample_of: BTreeMap<ActionId, usize>,
    pub induced: OrderingSet,
    pub cache: CollisionCache,
    pub stays: Vec<Stay>,
}

impl PlacementSolution {
    /// Pose of the object grasped by transit `a` at the moment of grasping.
    pub fn pick_pose(&self, a: usize) -> Option<Pose2> {
        self.stays.iter().find(|s| s.occ.removed_by == Some(a)).map(|s| s.pose)
    }
}

/// Hook consulted for every candidate pose of a transfer during the
/// combination search. Returning false prunes the candidate.
pub trait CandidateFilter {
    fn accept(&mut self, plan: &TaskPlan, action: usize, pose: Pose2) -> bool;
}

pub struct AcceptAll;

impl CandidateFilter for AcceptAll {
    fn accept(&mut self, _: &TaskPlan, _: usize, _: Pose2) -> bool {
        true
    }
}

fn region_box(region: &RegionSpec) -> ([f64; 2], [f64; 2]) {
    let verts: Vec<[f64; 2]> = match &region.polygon {
        Shape::Poly(v) => v.iter().map(|p| region.pose.transform_point(*p)).collect(),
        Shape::Disc(r) => vec![
            [region.pose.x - r, region.pose.y - r],
            [region.pose.x + r, region.pose.y + r],
        ],
    };
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in verts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Rejection-samples up to `n` poses of `body` contained in `region`.
pub fn sample_placement(
    region: &RegionSpec,
    body: &Shape,
    movable: MovableId,
    rng: &mut PlannerRng,
    n: usize,
) -> Result<Vec<Pose2>, PlacementError> {
    assert!(n >= 1, "sample_placement needs n >= 1");
    let (lo, hi) = region_box(region);
    let mut out = Vec::with_capacity(n);
    for _ in 0..100 * n {
        if out.len() == n {
            break;
        }
        let x = lo[0] + rng.gen::<f64>() * (hi[0] - lo[0]);
        let y = lo[1] + rng.gen::<f64>() * (hi[1] - lo[1]);
        let theta = match body {
            Shape::Disc(_) => 0.0,
            Shape::Poly(_) => rng.gen_range(-PI..PI),
        };
        let pose = Pose2::new(x, y, theta);
        if contains(&region.polygon, region.pose, body, pose) {
            out.push(pose);
        }
    }
    if out.is_empty() {
        return Err(PlacementError::NoSamples {
            movable,
            region: region.id,
        });
    }
    Ok(out)
}

struct Candidate {
    index: usize,
    pose: Pose2,
    placed: Placed,
}

struct Slot {
    occ: Occupancy,
    cands: Vec<Candidate>,
}

struct Search<'a> {
    plan: &'a TaskPlan,
    slots: &'a [Slot],
    tabu: &'a BTreeSet<(ActionId, usize)>,
    filter: &'a mut dyn CandidateFilter,
    clearance: f64,
    deadline: Deadline,
    budget: usize,
    budget_hit: bool,
}

type Found = Option<(Vec<usize>, OrderingSet)>;

impl Search<'_> {
    fn id(&self, i: usize) -> &ActionId {
        &self.plan.action(i).id
    }

    fn copresent(&self, a: &Occupancy, b: &Occupancy, ord: &OrderingSet) -> bool {
        let before = |x: &Occupancy, y: &Occupancy| match (x.removed_by, y.added_by) {
            (Some(r), Some(add)) => ord.reaches(self.id(r), self.id(add)),
            _ => false,
        };
        !(before(a, b) || before(b, a))
    }

    fn dfs(&mut self, depth: usize, chosen: &mut Vec<usize>, ord: &OrderingSet, used: usize) -> Result<Found, PlacementError> {
        if self.deadline.expired() {
            return Err(PlacementError::StepTimeout);
        }
        if depth == self.slots.len() {
            return Ok(Some((chosen.clone(), ord.clone())));
        }
        let slot = &self.slots[depth];
        for c in 0..slot.cands.len() {
            let cand = &slot.cands[c];
            if let Some(add) = slot.occ.added_by {
                if self.tabu.contains(&(self.id(add).clone(), cand.index)) {
                    continue;
                }
            }
            let conflicts: Vec<usize> = (0..depth)
                .filter(|&p| {
                    let both_initial = slot.occ.added_by.is_none() && self.slots[p].occ.added_by.is_none();
                    !both_initial && self.slots[p].cands[chosen[p]].placed.near(&cand.placed, self.clearance)
                })
                .collect();
            if let Some(add) = slot.occ.added_by {
                if !self.filter.accept(self.plan, add, cand.pose) {
                    continue;
                }
            }
            chosen.push(c);
            let found = self.resolve(depth, chosen, &conflicts, ord, used)?;
            chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    /// Orders each co-present conflicting pair remove-before-add, within budget.
    fn resolve(
        &mut self,
        depth: usize,
        chosen: &mut Vec<usize>,
        conflicts: &[usize],
        ord: &OrderingSet,
        used: usize,
    ) -> Result<Found, PlacementError> {
        let Some((&p, rest)) = conflicts.split_first() else {
            return self.dfs(depth + 1, chosen, ord, used);
        };
        let (a, b) = (&self.slots[p].occ, &self.slots[depth].occ);
        if !self.copresent(a, b, ord) {
            return self.resolve(depth, chosen, rest, ord, used);
        }
        let options = [(a.removed_by, b.added_by), (b.removed_by, a.added_by)];
        for (rm, add) in options {
            let (Some(rm), Some(add)) = (rm, add) else { continue };
            if used == self.budget {
                self.budget_hit = true;
                continue;
            }
            let (rm, add) = (self.id(rm).clone(), self.id(add).clone());
            if let Ok(next) = ord.add_ordering(&rm, &add) {
                let found = self.resolve(depth, chosen, rest, &next, used + 1)?;
                if found.is_some() {
                    return Ok(found);
                }
            }
        }
        Ok(None)
    }
}

fn region_slots(
    scene: &Scenario,
    plan: &TaskPlan,
    occs: &[Occupancy],
    region: &RegionSpec,
    params: &PlacementParams,
    n: usize,
    fixed: &[Placed],
) -> Result<Vec<Slot>, PlacementError> {
    let mut slots = Vec::new();
    for occ in occs.iter().filter(|o| o.region == region.id) {
        let body = &scene.movable(occ.movable).expect("validated movable").body;
        let cands = match occ.added_by {
            None => {
                let pose = scene.initial.movable_poses[&occ.movable];
                vec![Candidate {
                    index: 0,
                    pose,
                    placed: body.place(pose),
                }]
            }
            Some(add) => {
                let label = format!("place/{}/{}", region.id, plan.action(add).id);
                let mut rng = labeled_rng(params.seed, &label);
                let poses = sample_placement(region, body, occ.movable, &mut rng, n)?;
                poses
                    .into_iter()
                    .enumerate()
                    .map(|(index, pose)| Candidate {
                        index,
                        pose,
                        placed: body.place(pose),
                    })
                    .filter(|c| !fixed.iter().any(|f| c.placed.near(f, params.clearance)))
                    .collect()
            }
        };
        slots.push(Slot { occ: occ.clone(), cands });
    }
    // Initial occupants first, then additions in action order.
    slots.sort_by_key(|s| s.occ.added_by.map_or(0, |a| a + 1));
    Ok(slots)
}

/// Iterative deepening over the number of induced edges.
fn solve_region(
    plan: &TaskPlan,
    slots: &[Slot],
    ord: &OrderingSet,
    tabu: &BTreeSet<(ActionId, usize)>,
    filter: &mut dyn CandidateFilter,
    params: &PlacementParams,
) -> Result<Found, PlacementError> {
    let mut budget = 0;
    loop {
        let mut search = Search {
            plan,
            slots,
            tabu,
            filter: &mut *filter,
            clearance: params.clearance,
            deadline: params.deadline,
            budget,
            budget_hit: false,
        };
        let found = search.dfs(0, &mut Vec::new(), ord, 0)?;
        if found.is_some() || !search.budget_hit {
            return Ok(found);
        }
        log::debug!("placement: no assignment with {budget} induced edges");
        budget += 1;
    }
}

pub fn solve_placements(
    scene: &Scenario,
    plan: &TaskPlan,
    params: &PlacementParams,
    tabu: &BTreeSet<(ActionId, usize)>,
    filter: &mut dyn CandidateFilter,
) -> Result<PlacementSolution, PlacementError> {
    let occs = plan.occupancies(scene);
    let fixed = scene.fixed_placed();
    let mut induced = OrderingSet::new();
    let mut pose_of = BTreeMap::new();
    let mut sample_of = BTreeMap::new();
    let mut stays = Vec::new();

    for region in &scene.regions {
        let mut n = params.n_place.max(1);
        let (slots, chosen, ord) = loop {
            let slots = region_slots(scene, plan, &occs, region, params, n, &fixed)?;
            let ord = plan.prec().union(&induced).expect("accumulated orderings stay acyclic");
            match solve_region(plan, &slots, &ord, tabu, filter, params)? {
                Some((chosen, ord)) => break (slots, chosen, ord),
                None if params.extend_samples && !params.deadline.expired() && n < 1 << 12 => n *= 2,
                None => return Err(PlacementError::Infeasible { region: region.id }),
            }
        };
        for (a, b) in ord.edges() {
            if !plan.prec().contains_edge(a, b) && !induced.contains_edge(a, b) {
                induced = induced.add_ordering(a, b).expect("edge keeps the order acyclic");
            }
        }
        for (slot, c) in slots.iter().zip(&chosen) {
            let cand = &slot.cands[*c];
            if let Some(add) = slot.occ.added_by {
                pose_of.insert(plan.action(add).id.clone(), cand.pose);
                sample_of.insert(plan.action(add).id.clone(), cand.index);
            }
            stays.push(Stay {
                occ: slot.occ.clone(),
                pose: cand.pose,
            });
        }
    }

    let reach = plan.reachability(&induced);
    let cache = build_cache(scene, plan, &stays, &reach);
    Ok(PlacementSolution {
        pose_of,
        sample_of,
        induced,
        cache,
        stays,
    })
}

/// Absent while `a` runs iff removed no later than the robot's previous action
/// completes, or added no earlier than `a` completes.
pub fn possibly_present_during(plan: &TaskPlan, reach: &Reachability, occ: &Occupancy, a: usize) -> bool {
    let removed_before = match (occ.removed_by, plan.prev_of(a)) {
        (Some(r), Some(p)) => reach.reaches_or_eq(r, p),
        _ => false,
    };
    let added_after = occ.added_by.is_some_and(|add| reach.reaches_or_eq(a, add));
    !(removed_before || added_after)
}

/// Absent when `a`'s transition fires iff removed no later than `a`, or added
/// strictly after `a`.
pub fn possibly_present_at_end(reach: &Reachability, occ: &Occupancy, a: usize) -> bool {
    let removed = occ.removed_by.is_some_and(|r| reach.reaches_or_eq(r, a));
    let added_after = occ.added_by.is_some_and(|add| reach.reaches(a, add));
    !(removed || added_after)
}

fn build_cache(scene: &Scenario, plan: &TaskPlan, stays: &[Stay], reach: &Reachability) -> CollisionCache {
    let fixed: Vec<FixedId> = scene.fixed.iter().map(|f| f.id).collect();
    let mut entries = BTreeMap::new();
    for a in 0..plan.len() {
        let m = plan.action(a).m;
        let pick = |keep: &dyn Fn(&Occupancy) -> bool| -> Vec<CachedObject> {
            stays
                .iter()
                .filter(|s| keep(&s.occ))
                .map(|s| CachedObject {
                    movable: s.occ.movable,
                    pose: s.pose,
                })
                .collect()
        };
        let at_end = pick(&|o| o.movable != m && possibly_present_at_end(reach, o, a));
        let during = pick(&|o| possibly_present_during(plan, reach, o, a));
        entries.insert(
            plan.action(a).id.clone(),
            CacheEntry {
                at_end,
                during,
                fixed: fixed.clone(),
            },
        );
    }
    CollisionCache { entries }
}
