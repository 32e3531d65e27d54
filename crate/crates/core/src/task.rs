//! Abstract actions, the variable set and the partial-order constraint DAG.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Pose2;
use crate::scene::{MovableId, RegionId, RobotId, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub String);

impl ActionId {
    pub fn new(robot: RobotId, k: usize) -> Self {
        ActionId(format!("r{robot}a{k}"))
    }

    /// Splits `r{r}a{k}` into its robot and per-robot index.
    pub fn parse(&self) -> Option<(RobotId, usize)> {
        let rest = self.0.strip_prefix('r')?;
        let (r, k) = rest.split_once('a')?;
        if r.is_empty() || k.is_empty() || !r.bytes().chain(k.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        Some((r.parse().ok()?, k.parse().ok()?))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActionId {
    fn from(s: &str) -> Self {
        ActionId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    /// Empty-handed motion ending in a grasp of `m` located in `w2`.
    Transit,
    /// Motion holding `m`, taken from `w`, ending with its placement in `w2`.
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractAction {
    pub id: ActionId,
    pub kind: ActionKind,
    pub r: RobotId,
    pub m: MovableId,
    pub w: RegionId,
    pub w2: RegionId,
}

/// Relative transform from the robot frame to the held object's frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grasp {
    pub r: RobotId,
    pub m: MovableId,
    pub gamma: Pose2,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("ordering {before} < {after} would close a cycle")]
pub struct CycleError {
    pub before: ActionId,
    pub after: ActionId,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("plan parse error: {0}")]
    Parse(String),
    #[error("invalid plan: {0}")]
    Invalid(String),
    #[error(transparent)]
    Cycle(#[from] CycleError),
}

/// A set of precedence edges whose transitive closure is a strict partial order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderingSet {
    edges: BTreeSet<(ActionId, ActionId)>,
}

impl OrderingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn edges(&self) -> impl Iterator<Item = &(ActionId, ActionId)> {
        self.edges.iter()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains_edge(&self, before: &ActionId, after: &ActionId) -> bool {
        self.edges.contains(&(before.clone(), after.clone()))
    }

    fn successors<'a>(&'a self, a: &'a ActionId) -> impl Iterator<Item = &'a ActionId> + 'a {
        self.edges
            .range((a.clone(), ActionId(String::new()))..)
            .take_while(move |(b, _)| b == a)
            .map(|(_, c)| c)
    }

    /// True iff `a` strictly precedes `b` in the transitive closure.
    pub fn reaches(&self, a: &ActionId, b: &ActionId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(x) = stack.pop() {
            for y in self.successors(x) {
                if y == b {
                    return true;
                }
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        false
    }

    /// Returns a new set containing `before < after`; the input is unchanged.
    pub fn add_ordering(&self, before: &ActionId, after: &ActionId) -> Result<OrderingSet, CycleError> {
        if before == after || self.reaches(after, before) {
            return Err(CycleError {
                before: before.clone(),
                after: after.clone(),
            });
        }
        let mut next = self.clone();
        next.edges.insert((before.clone(), after.clone()));
        Ok(next)
    }

    pub fn union(&self, other: &OrderingSet) -> Result<OrderingSet, CycleError> {
        let mut out = self.clone();
        for (a, b) in other.edges() {
            out = out.add_ordering(a, b)?;
        }
        Ok(out)
    }

    pub fn to_pairs(&self) -> Vec<[ActionId; 2]> {
        self.edges.iter().map(|(a, b)| [a.clone(), b.clone()]).collect()
    }
}

/// Dense strict-precedence matrix over a plan's action indices.
#[derive(Debug, Clone)]
pub struct Reachability {
    n: usize,
    bits: Vec<bool>,
}

impl Reachability {
    pub fn reaches(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.n + b]
    }

    /// `a` equals or precedes `b`.
    pub fn reaches_or_eq(&self, a: usize, b: usize) -> bool {
        a == b || self.reaches(a, b)
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        a == b || self.reaches(a, b) || self.reaches(b, a)
    }
}

/// One stay of a movable in a region: from its placement (or the start) until
/// the grasp that removes it (or forever).
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub movable: MovableId,
    pub region: RegionId,
    /// Transfer action that placed it; `None` for the initial occupant.
    pub added_by: Option<usize>,
    /// Transit action whose grasp removes it.
    pub removed_by: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionEvent {
    PresentAtStart,
    Add(ActionId),
    Remove(ActionId),
}

/// Decision variables attached to one abstract action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variable {
    /// Robot configuration at the end of the action.
    TransitionConfig(ActionId),
    /// Grasp chosen by a transit and reused by its transfer.
    Grasp(ActionId),
    /// Placement of the carried movable at the end of a transfer.
    Placement(ActionId),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    actions: Vec<AbstractAction>,
    #[serde(default)]
    prec: Vec<[ActionId; 2]>,
}

/// Ground abstract actions, per-robot sequences and their precedence.
#[derive(Debug, Clone)]
pub struct TaskPlan {
    actions: Vec<AbstractAction>,
    index: BTreeMap<ActionId, usize>,
    robot_actions: BTreeMap<RobotId, Vec<usize>>,
    given: OrderingSet,
    prec: OrderingSet,
}

pub fn load_plan(text: &str, scene: &Scenario) -> Result<TaskPlan, PlanError> {
    let file: PlanFile = serde_json::from_str(text).map_err(|e| PlanError::Parse(e.to_string()))?;
    let mut given = OrderingSet::new();
    for [a, b] in &file.prec {
        given = given.add_ordering(a, b)?;
    }
    TaskPlan::new(scene, file.actions, given)
}

impl TaskPlan {
    pub fn new(scene: &Scenario, actions: Vec<AbstractAction>, given: OrderingSet) -> Result<Self, PlanError> {
        let invalid = |msg: String| PlanError::Invalid(msg);
        let mut keyed: Vec<((RobotId, usize), AbstractAction)> = Vec::new();
        for a in actions {
            let (r, k) = a
                .id
                .parse()
                .ok_or_else(|| invalid(format!("action id {} is not of the form r<robot>a<k>", a.id)))?;
            if r != a.r {
                return Err(invalid(format!("action {} names robot {} but belongs to robot {}", a.id, r, a.r)));
            }
            if scene.robot(a.r).is_none() {
                return Err(invalid(format!("action {} uses unknown robot {}", a.id, a.r)));
            }
            if scene.movable(a.m).is_none() {
                return Err(invalid(format!("action {} uses unknown movable {}", a.id, a.m)));
            }
            if scene.region(a.w2).is_none() {
                return Err(invalid(format!("action {} uses unknown region {}", a.id, a.w2)));
            }
            // A transit's source region is informational and may be 0 (none).
            let w_ok = scene.region(a.w).is_some() || (a.kind == ActionKind::Transit && a.w == 0);
            if !w_ok {
                return Err(invalid(format!("action {} uses unknown region {}", a.id, a.w)));
            }
            keyed.push(((r, k), a));
        }
        keyed.sort_by_key(|a| a.0);
        for pair in keyed.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(invalid(format!("duplicate action id {}", pair[0].1.id)));
            }
        }
        let actions: Vec<AbstractAction> = keyed.into_iter().map(|(_, a)| a).collect();
        let index: BTreeMap<ActionId, usize> =
            actions.iter().enumerate().map(|(i, a)| (a.id.clone(), i)).collect();
        let mut robot_actions: BTreeMap<RobotId, Vec<usize>> = BTreeMap::new();
        for (i, a) in actions.iter().enumerate() {
            robot_actions.entry(a.r).or_default().push(i);
        }

        // Strict transit/transfer alternation on the same movable.
        for (r, list) in &robot_actions {
            if list.len() % 2 != 0 {
                return Err(invalid(format!("robot {r} ends with an unpaired transit")));
            }
            for pair in list.chunks(2) {
                let (s, f) = (&actions[pair[0]], &actions[pair[1]]);
                if s.kind != ActionKind::Transit || f.kind != ActionKind::Transfer {
                    return Err(invalid(format!(
                        "robot {r}: {} and {} must be a transit followed by a transfer",
                        s.id, f.id
                    )));
                }
                if s.m != f.m || s.w2 != f.w {
                    return Err(invalid(format!(
                        "robot {r}: transfer {} must carry the movable grasped by {} from its region",
                        f.id, s.id
                    )));
                }
            }
        }

        for (a, b) in given.edges() {
            for id in [a, b] {
                if !index.contains_key(id) {
                    return Err(invalid(format!("ordering names unknown action {id}")));
                }
            }
        }
        let mut prec = given.clone();
        for list in robot_actions.values() {
            for w in list.windows(2) {
                prec = prec.add_ordering(&actions[w[0]].id, &actions[w[1]].id)?;
            }
        }

        let plan = TaskPlan {
            actions,
            index,
            robot_actions,
            given,
            prec,
        };
        plan.check_movable_chains(scene)?;
        Ok(plan)
    }

    /// Each movable's actions must be totally ordered and follow its region
    /// sequence starting from the initial region.
    fn check_movable_chains(&self, scene: &Scenario) -> Result<(), PlanError> {
        let reach = self.reachability(&OrderingSet::new());
        for m in &scene.movables {
            let chain = self.movable_actions(m.id, &reach)?;
            let mut region = scene.initial.movable_regions[&m.id];
            let mut held = false;
            for i in chain {
                let a = &self.actions[i];
                match a.kind {
                    ActionKind::Transit => {
                        if held || a.w2 != region {
                            return Err(PlanError::Invalid(format!(
                                "{} grasps movable {} in region {} but it is in region {}",
                                a.id, m.id, a.w2, region
                            )));
                        }
                        held = true;
                    }
                    ActionKind::Transfer => {
                        if !held || a.w != region {
                            return Err(PlanError::Invalid(format!(
                                "{} places movable {} without holding it",
                                a.id, m.id
                            )));
                        }
                        held = false;
                        region = a.w2;
                    }
                }
            }
        }
        Ok(())
    }

    /// The actions touching `m`, in their (total) precedence order.
    fn movable_actions(&self, m: MovableId, reach: &Reachability) -> Result<Vec<usize>, PlanError> {
        let mut chain: Vec<usize> = (0..self.actions.len()).filter(|&i| self.actions[i].m == m).collect();
        for (x, &a) in chain.iter().enumerate() {
            for &b in &chain[x + 1..] {
                if !reach.comparable(a, b) {
                    return Err(PlanError::Invalid(format!(
                        "actions {} and {} on movable {} are not ordered",
                        self.actions[a].id, self.actions[b].id, m
                    )));
                }
            }
        }
        chain.sort_by_key(|&i| chain_rank(i, reach, &self.actions, m));
        Ok(chain)
    }

    pub fn to_json(&self) -> String {
        let file = PlanFile {
            actions: self.actions.clone(),
            prec: self.given.to_pairs(),
        };
        serde_json::to_string_pretty(&file).expect("plan serializes")
    }

    pub fn actions(&self) -> &[AbstractAction] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn action(&self, i: usize) -> &AbstractAction {
        &self.actions[i]
    }

    pub fn index_of(&self, id: &ActionId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn robots(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.robot_actions.keys().copied()
    }

    /// Action indices of robot `r` in execution order.
    pub fn robot_actions(&self, r: RobotId) -> &[usize] {
        self.robot_actions.get(&r).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Position of action `i` within its robot's list.
    pub fn position(&self, i: usize) -> usize {
        self.robot_actions(self.actions[i].r)
            .iter()
            .position(|&j| j == i)
            .expect("action belongs to its robot")
    }

    pub fn prev_of(&self, i: usize) -> Option<usize> {
        let k = self.position(i);
        (k > 0).then(|| self.robot_actions(self.actions[i].r)[k - 1])
    }

    pub fn next_of(&self, i: usize) -> Option<usize> {
        let list = self.robot_actions(self.actions[i].r);
        list.get(self.position(i) + 1).copied()
    }

    /// The transfer paired with a transit, or the transit paired with a transfer.
    pub fn partner(&self, i: usize) -> usize {
        match self.actions[i].kind {
            ActionKind::Transit => self.next_of(i).expect("transit is paired"),
            ActionKind::Transfer => self.prev_of(i).expect("transfer is paired"),
        }
    }

    /// Given orderings only (without the embedded per-robot chains).
    pub fn given(&self) -> &OrderingSet {
        &self.given
    }

    /// Given orderings plus each robot's own sequence.
    pub fn prec(&self) -> &OrderingSet {
        &self.prec
    }

    pub fn reachability(&self, extra: &OrderingSet) -> Reachability {
        let n = self.actions.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in self.prec.edges().chain(extra.edges()) {
            if let (Some(&i), Some(&j)) = (self.index.get(a), self.index.get(b)) {
                adj[i].push(j);
            }
        }
        let mut bits = vec![false; n * n];
        for s in 0..n {
            let mut queue: VecDeque<usize> = adj[s].iter().copied().collect();
            while let Some(x) = queue.pop_front() {
                if !bits[s * n + x] {
                    bits[s * n + x] = true;
                    queue.extend(adj[x].iter().copied());
                }
            }
        }
        Reachability { n, bits }
    }

    /// Direct predecessors of action `i` under `prec ∪ extra`.
    pub fn predecessors(&self, i: usize, extra: &OrderingSet) -> Vec<usize> {
        let id = &self.actions[i].id;
        let mut out: Vec<usize> = self
            .prec
            .edges()
            .chain(extra.edges())
            .filter(|(_, b)| b == id)
            .filter_map(|(a, _)| self.index_of(a))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Actions that are next in their robot's list and whose predecessors are
    /// all completed.
    pub fn ready_actions(&self, completed: &BTreeSet<ActionId>) -> BTreeSet<ActionId> {
        let mut ready = BTreeSet::new();
        for list in self.robot_actions.values() {
            let Some(&next) = list.iter().find(|&&i| !completed.contains(&self.actions[i].id)) else {
                continue;
            };
            let id = &self.actions[next].id;
            let preds_done = self
                .prec
                .edges()
                .filter(|(_, b)| b == id)
                .all(|(a, _)| completed.contains(a));
            if preds_done {
                ready.insert(id.clone());
            }
        }
        ready
    }

    /// Every stay of every movable in a region, derived from the plan.
    pub fn occupancies(&self, scene: &Scenario) -> Vec<Occupancy> {
        let reach = self.reachability(&OrderingSet::new());
        let mut out = Vec::new();
        for m in &scene.movables {
            let chain = self
                .movable_actions(m.id, &reach)
                .expect("validated plan has ordered movable chains");
            let mut cur = Occupancy {
                movable: m.id,
                region: scene.initial.movable_regions[&m.id],
                added_by: None,
                removed_by: None,
            };
            for i in chain {
                match self.actions[i].kind {
                    ActionKind::Transit => {
                        cur.removed_by = Some(i);
                        out.push(cur.clone());
                    }
                    ActionKind::Transfer => {
                        cur = Occupancy {
                            movable: m.id,
                            region: self.actions[i].w2,
                            added_by: Some(i),
                            removed_by: None,
                        };
                    }
                }
            }
            if cur.removed_by.is_none() {
                out.push(cur);
            }
        }
        out
    }

    /// Per-movable alternating add/remove sequences for region `w`.
    pub fn region_sequences(&self, scene: &Scenario, w: RegionId) -> Vec<(MovableId, Vec<RegionEvent>)> {
        let mut seqs: BTreeMap<MovableId, Vec<RegionEvent>> = BTreeMap::new();
        for occ in self.occupancies(scene).into_iter().filter(|o| o.region == w) {
            let events = seqs.entry(occ.movable).or_default();
            match occ.added_by {
                None => events.push(RegionEvent::PresentAtStart),
                Some(i) => events.push(RegionEvent::Add(self.actions[i].id.clone())),
            }
            if let Some(i) = occ.removed_by {
                events.push(RegionEvent::Remove(self.actions[i].id.clone()));
            }
        }
        seqs.into_iter().collect()
    }

    /// The variable set: a transition configuration for every action, a grasp
    /// for every transit and a placement for every transfer.
    pub fn variables(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        for a in &self.actions {
            out.push(Variable::TransitionConfig(a.id.clone()));
            match a.kind {
                ActionKind::Transit => out.push(Variable::Grasp(a.id.clone())),
                ActionKind::Transfer => out.push(Variable::Placement(a.id.clone())),
            }
        }
        out
    }
}

fn chain_rank(i: usize, reach: &Reachability, actions: &[AbstractAction], m: MovableId) -> usize {
    (0..actions.len())
        .filter(|&j| actions[j].m == m && reach.reaches(j, i))
        .count()
}
