//! Game rules: building types, the prerequisite DAG, and the build-tree value
//! space the rest of the crate reasons over.
//!
//! A [`BuildTree`] is a multiset of building types closed under
//! prerequisites. An [`ObservationVector`] uses the same representation but
//! need not be closed, since fog of war hides the prerequisites of what was
//! seen.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default cap on the number of trees [`TechDag::enumerate_build_trees`]
/// will materialize before giving up.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

const PROTOSS_DAG: &str = include_str!("../data/protoss.dag");
const TERRAN_DAG: &str = include_str!("../data/terran.dag");
const ZERG_DAG: &str = include_str!("../data/zerg.dag");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing `race <name>` header")]
    MissingRace,
    #[error("unknown race `{0}`")]
    UnknownRace(String),
    #[error("dag has no buildings")]
    Empty,
    #[error("too many buildings ({0}); at most 65535 are supported")]
    TooManyBuildings(usize),
    #[error("building `{0}` is declared twice")]
    DuplicateBuilding(String),
    #[error("building `{building}` requires unknown building `{prerequisite}`")]
    DanglingPrerequisite { building: String, prerequisite: String },
    #[error("prerequisite cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("unknown building `{0}`")]
    UnknownBuilding(String),
    #[error("unknown building id {0}")]
    UnknownBuildingId(u16),
    #[error("building `{name}` count {count} exceeds its cap of {max}")]
    CountOverCap { name: String, count: u32, max: u8 },
    #[error("malformed tree or observation `{0}`")]
    MalformedTree(String),
    #[error("enumeration exceeded the cap of {0} build trees")]
    EnumerationCap(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Race {
    Protoss,
    Terran,
    Zerg,
}

impl Race {
    pub const ALL: [Race; 3] = [Race::Protoss, Race::Terran, Race::Zerg];

    pub fn name(self) -> &'static str {
        match self {
            Race::Protoss => "protoss",
            Race::Terran => "terran",
            Race::Zerg => "zerg",
        }
    }

    /// Single-letter tag used in match-up labels such as `PvT`.
    pub fn initial(self) -> char {
        match self {
            Race::Protoss => 'P',
            Race::Terran => 'T',
            Race::Zerg => 'Z',
        }
    }
}

impl fmt::Display for Race {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Race {
    type Err = DagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "protoss" | "p" => Ok(Race::Protoss),
            "terran" | "t" => Ok(Race::Terran),
            "zerg" | "z" => Ok(Race::Zerg),
            _ => Err(DagError::UnknownRace(s.to_string())),
        }
    }
}

/// Dense index of a building type within one [`TechDag`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BuildingId(pub u16);

impl BuildingId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildingType {
    pub id: BuildingId,
    pub name: String,
    pub race: Race,
    pub prerequisites: Vec<BuildingId>,
    pub max_count: u8,
}

impl BuildingType {
    pub fn is_duplicable(&self) -> bool {
        self.max_count > 1
    }
}

/// A building declaration before ids are resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildingSpec {
    pub name: String,
    pub prerequisites: Vec<String>,
    pub max_count: u8,
}

impl BuildingSpec {
    pub fn new(name: impl Into<String>, prerequisites: &[&str], max_count: u8) -> Self {
        BuildingSpec {
            name: name.into(),
            prerequisites: prerequisites.iter().map(|p| p.to_string()).collect(),
            max_count,
        }
    }
}

/// Sorted `(id, count)` pairs with zero counts omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Counts(Vec<(BuildingId, u8)>);

impl Counts {
    fn from_pairs<I: IntoIterator<Item = (BuildingId, u32)>>(pairs: I) -> Self {
        let mut acc: Vec<(BuildingId, u32)> = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        acc.sort_unstable_by_key(|&(id, _)| id);
        let mut out: Vec<(BuildingId, u8)> = Vec::with_capacity(acc.len());
        for (id, c) in acc {
            match out.last_mut() {
                Some(last) if last.0 == id => last.1 = last.1.saturating_add(c.min(255) as u8),
                _ => out.push((id, c.min(255) as u8)),
            }
        }
        Counts(out)
    }

    fn count(&self, id: BuildingId) -> u8 {
        match self.0.binary_search_by_key(&id, |&(b, _)| b) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    fn add(&mut self, id: BuildingId, n: u8) {
        if n == 0 {
            return;
        }
        match self.0.binary_search_by_key(&id, |&(b, _)| b) {
            Ok(i) => self.0[i].1 = self.0[i].1.saturating_add(n),
            Err(i) => self.0.insert(i, (id, n)),
        }
    }

    fn total(&self) -> u32 {
        self.0.iter().map(|&(_, c)| c as u32).sum()
    }

    /// `self ⊆ other` as multisets.
    fn is_sub_multiset_of(&self, other: &Counts) -> bool {
        let mut theirs = other.0.iter().peekable();
        'outer: for &(id, c) in &self.0 {
            while let Some(&&(oid, oc)) = theirs.peek() {
                if oid < id {
                    theirs.next();
                    continue;
                }
                if oid == id && oc >= c {
                    theirs.next();
                    continue 'outer;
                }
                return false;
            }
            return false;
        }
        true
    }

    fn symmetric_difference_size(&self, other: &Counts) -> u32 {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut d) = (0, 0, 0u32);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    d += a[i].1 as u32;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    d += b[j].1 as u32;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    d += (a[i].1 as i32 - b[j].1 as i32).unsigned_abs();
                    i += 1;
                    j += 1;
                }
            }
        }
        d + a[i..].iter().chain(&b[j..]).map(|&(_, c)| c as u32).sum::<u32>()
    }
}

/// A prerequisite-closed multiset of building types.
///
/// Equality, hashing and ordering are on the canonical `(id, count)` list, so
/// two equal multisets always compare and serialize identically. The derived
/// ordering is the canonical tree order used for tie-breaking.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BuildTree(Counts);

impl BuildTree {
    pub fn empty() -> Self {
        BuildTree::default()
    }

    /// Builds a multiset from `(id, count)` pairs; repeated ids are summed.
    /// No closure check is done here, see [`TechDag::is_valid_build_tree`].
    pub fn from_counts<I: IntoIterator<Item = (BuildingId, u32)>>(pairs: I) -> Self {
        BuildTree(Counts::from_pairs(pairs))
    }

    pub fn from_ids<I: IntoIterator<Item = BuildingId>>(ids: I) -> Self {
        Self::from_counts(ids.into_iter().map(|id| (id, 1)))
    }

    pub fn count(&self, id: BuildingId) -> u8 {
        self.0.count(id)
    }

    /// Total number of building instances.
    pub fn size(&self) -> u32 {
        self.0.total()
    }

    pub fn is_empty(&self) -> bool {
        self.0 .0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BuildingId, u8)> + '_ {
        self.0 .0.iter().copied()
    }

    pub fn insert(&mut self, id: BuildingId) {
        self.0.add(id, 1);
    }

    pub fn with(&self, id: BuildingId) -> BuildTree {
        let mut t = self.clone();
        t.insert(id);
        t
    }

    /// Multiset containment: every instance of `other` is in `self`.
    pub fn contains(&self, other: &BuildTree) -> bool {
        other.0.is_sub_multiset_of(&self.0)
    }

    pub fn approx_heap_bytes(&self) -> usize {
        self.0 .0.capacity() * std::mem::size_of::<(BuildingId, u8)>()
    }
}

/// Observed building counts. Unlike [`BuildTree`], need not be closed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObservationVector(Counts);

impl ObservationVector {
    pub fn empty() -> Self {
        ObservationVector::default()
    }

    pub fn from_counts<I: IntoIterator<Item = (BuildingId, u32)>>(pairs: I) -> Self {
        ObservationVector(Counts::from_pairs(pairs))
    }

    pub fn count(&self, id: BuildingId) -> u8 {
        self.0.count(id)
    }

    pub fn size(&self) -> u32 {
        self.0.total()
    }

    pub fn is_empty(&self) -> bool {
        self.0 .0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BuildingId, u8)> + '_ {
        self.0 .0.iter().copied()
    }

    /// Multiset containment of `self` in `other`.
    pub fn is_contained_in(&self, other: &ObservationVector) -> bool {
        self.0.is_sub_multiset_of(&other.0)
    }
}

impl From<&BuildTree> for ObservationVector {
    fn from(bt: &BuildTree) -> Self {
        ObservationVector(bt.0.clone())
    }
}

/// Multiset symmetric-difference cardinality.
pub fn distance(a: &BuildTree, b: &BuildTree) -> u32 {
    a.0.symmetric_difference_size(&b.0)
}

/// The coherence filter: `bt` can coexist with `obs` iff it covers every
/// observed instance.
pub fn compatible(bt: &BuildTree, obs: &ObservationVector) -> bool {
    obs.0.is_sub_multiset_of(&bt.0)
}

/// The prerequisite DAG of one race.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TechDag {
    race: Race,
    buildings: Vec<BuildingType>,
    roots: Vec<BuildingId>,
    topo_order: Vec<BuildingId>,
    by_name: HashMap<String, BuildingId>,
}

impl TechDag {
    /// Resolves names to ids (in declaration order) and validates the graph.
    pub fn new(race: Race, specs: Vec<BuildingSpec>) -> Result<TechDag, DagError> {
        if specs.is_empty() {
            return Err(DagError::Empty);
        }
        if specs.len() > u16::MAX as usize {
            return Err(DagError::TooManyBuildings(specs.len()));
        }
        let mut by_name = HashMap::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if by_name.insert(s.name.clone(), BuildingId(i as u16)).is_some() {
                return Err(DagError::DuplicateBuilding(s.name.clone()));
            }
        }
        let mut buildings = Vec::with_capacity(specs.len());
        for (i, s) in specs.into_iter().enumerate() {
            let mut prerequisites = Vec::with_capacity(s.prerequisites.len());
            for p in &s.prerequisites {
                let pid = *by_name.get(p).ok_or_else(|| DagError::DanglingPrerequisite {
                    building: s.name.clone(),
                    prerequisite: p.clone(),
                })?;
                if !prerequisites.contains(&pid) {
                    prerequisites.push(pid);
                }
            }
            buildings.push(BuildingType {
                id: BuildingId(i as u16),
                name: s.name,
                race,
                prerequisites,
                max_count: s.max_count.max(1),
            });
        }
        let topo_order = topological_order(&buildings)?;
        let roots = buildings
            .iter()
            .filter(|b| b.prerequisites.is_empty())
            .map(|b| b.id)
            .collect();
        Ok(TechDag {
            race,
            buildings,
            roots,
            topo_order,
            by_name,
        })
    }

    pub fn race(&self) -> Race {
        self.race
    }

    pub fn len(&self) -> usize {
        self.buildings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buildings.is_empty()
    }

    pub fn buildings(&self) -> &[BuildingType] {
        &self.buildings
    }

    pub fn building(&self, id: BuildingId) -> Option<&BuildingType> {
        self.buildings.get(id.index())
    }

    pub fn roots(&self) -> &[BuildingId] {
        &self.roots
    }

    /// Building ids ordered so that prerequisites come first.
    pub fn topological_order(&self) -> &[BuildingId] {
        &self.topo_order
    }

    pub fn id_of(&self, name: &str) -> Option<BuildingId> {
        self.by_name.get(name).copied()
    }

    pub fn name_of(&self, id: BuildingId) -> &str {
        &self.buildings[id.index()].name
    }

    fn require_id(&self, name: &str) -> Result<BuildingId, DagError> {
        self.id_of(name)
            .ok_or_else(|| DagError::UnknownBuilding(name.to_string()))
    }

    /// Returns `Ok(true)` iff `bt` is prerequisite-closed and within caps.
    pub fn is_valid_build_tree(&self, bt: &BuildTree) -> Result<bool, DagError> {
        for (id, c) in bt.iter() {
            let b = self.building(id).ok_or(DagError::UnknownBuildingId(id.0))?;
            if c > b.max_count || b.prerequisites.iter().any(|&p| bt.count(p) == 0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks that an observation only names known buildings within caps.
    pub fn check_observation(&self, obs: &ObservationVector) -> Result<(), DagError> {
        for (id, c) in obs.iter() {
            let b = self.building(id).ok_or(DagError::UnknownBuildingId(id.0))?;
            if c > b.max_count {
                return Err(DagError::CountOverCap {
                    name: b.name.clone(),
                    count: c as u32,
                    max: b.max_count,
                });
            }
        }
        Ok(())
    }

    pub fn enumerate_build_trees(&self, allow_duplicates: bool) -> Result<Vec<BuildTree>, DagError> {
        self.enumerate_build_trees_capped(allow_duplicates, DEFAULT_ENUMERATION_CAP)
    }

    /// Every prerequisite-closed multiset, in canonical order. Counts are
    /// capped at 1 unless `allow_duplicates`, in which case each building's
    /// `max_count` applies.
    pub fn enumerate_build_trees_capped(
        &self,
        allow_duplicates: bool,
        cap: usize,
    ) -> Result<Vec<BuildTree>, DagError> {
        let mut counts = vec![0u8; self.len()];
        let mut out = Vec::new();
        self.enumerate_from(0, allow_duplicates, cap, &mut counts, &mut out)?;
        out.sort_unstable();
        Ok(out)
    }

    fn enumerate_from(
        &self,
        depth: usize,
        allow_duplicates: bool,
        cap: usize,
        counts: &mut [u8],
        out: &mut Vec<BuildTree>,
    ) -> Result<(), DagError> {
        if depth == self.topo_order.len() {
            if out.len() >= cap {
                return Err(DagError::EnumerationCap(cap));
            }
            out.push(BuildTree::from_counts(
                counts
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (BuildingId(i as u16), c as u32)),
            ));
            return Ok(());
        }
        let b = &self.buildings[self.topo_order[depth].index()];
        let available = b.prerequisites.iter().all(|&p| counts[p.index()] > 0);
        let max = match (available, allow_duplicates) {
            (false, _) => 0,
            (true, false) => 1,
            (true, true) => b.max_count,
        };
        for c in 0..=max {
            counts[b.id.index()] = c;
            self.enumerate_from(depth + 1, allow_duplicates, cap, counts, out)?;
        }
        counts[b.id.index()] = 0;
        Ok(())
    }

    /// Canonical text form: `{}` for the empty tree, otherwise building names
    /// in id order joined by `+`, with `:k` appended when a count exceeds 1.
    pub fn format_tree(&self, bt: &BuildTree) -> String {
        format_counts(self, bt.iter())
    }

    pub fn format_observation(&self, obs: &ObservationVector) -> String {
        format_counts(self, obs.iter())
    }

    /// Parses the form produced by [`TechDag::format_tree`] and checks that
    /// the result is a valid build tree.
    pub fn parse_tree(&self, s: &str) -> Result<BuildTree, DagError> {
        let bt = BuildTree::from_counts(self.parse_count_list(s)?);
        for (id, c) in bt.iter() {
            let b = &self.buildings[id.index()];
            if c > b.max_count {
                return Err(DagError::CountOverCap {
                    name: b.name.clone(),
                    count: c as u32,
                    max: b.max_count,
                });
            }
        }
        if !self.is_valid_build_tree(&bt)? {
            return Err(DagError::MalformedTree(format!(
                "{s} (not prerequisite-closed)"
            )));
        }
        Ok(bt)
    }

    /// Parses `name[:count]` items separated by `,` or `+`. The empty string
    /// and `{}` both denote the empty observation.
    pub fn parse_observation(&self, s: &str) -> Result<ObservationVector, DagError> {
        let obs = ObservationVector::from_counts(self.parse_count_list(s)?);
        self.check_observation(&obs)?;
        Ok(obs)
    }

    fn parse_count_list(&self, s: &str) -> Result<Vec<(BuildingId, u32)>, DagError> {
        let s = s.trim();
        if s.is_empty() || s == "{}" {
            return Ok(Vec::new());
        }
        s.split([',', '+'])
            .map(|item| {
                let item = item.trim();
                let (name, count) = match item.split_once(':') {
                    Some((n, c)) => (
                        n,
                        c.parse::<u32>()
                            .map_err(|_| DagError::MalformedTree(s.to_string()))?,
                    ),
                    None => (item, 1),
                };
                if name.is_empty() {
                    return Err(DagError::MalformedTree(s.to_string()));
                }
                Ok((self.require_id(name)?, count))
            })
            .collect()
    }

    /// Renders the dag back into the line format accepted by
    /// [`load_tech_dag`].
    pub fn to_dag_text(&self) -> String {
        let mut out = format!("race {}\n", self.race);
        for line in self.building_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub(crate) fn building_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.buildings.iter().map(move |b| {
            let mut line = format!("building {}", b.name);
            if !b.prerequisites.is_empty() {
                let names: Vec<&str> = b.prerequisites.iter().map(|&p| self.name_of(p)).collect();
                line.push_str(" requires ");
                line.push_str(&names.join(","));
            }
            if b.max_count > 1 {
                line.push_str(&format!(" max {}", b.max_count));
            }
            line
        })
    }
}

fn format_counts(dag: &TechDag, items: impl Iterator<Item = (BuildingId, u8)>) -> String {
    let parts: Vec<String> = items
        .map(|(id, c)| {
            let name = dag
                .building(id)
                .map(|b| b.name.as_str())
                .unwrap_or("?");
            if c > 1 {
                format!("{name}:{c}")
            } else {
                name.to_string()
            }
        })
        .collect();
    if parts.is_empty() {
        "{}".to_string()
    } else {
        parts.join("+")
    }
}

/// Kahn's algorithm with a smallest-id-first tie-break; on failure, walks the
/// remaining subgraph to report one concrete cycle.
fn topological_order(buildings: &[BuildingType]) -> Result<Vec<BuildingId>, DagError> {
    let n = buildings.len();
    let mut indegree: Vec<usize> = buildings.iter().map(|b| b.prerequisites.len()).collect();
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for b in buildings {
        for p in &b.prerequisites {
            dependents[p.index()].push(b.id.index());
        }
    }
    let mut ready: std::collections::BTreeSet<usize> =
        (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(BuildingId(i as u16));
        for &d in &dependents[i] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert(d);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unplaced node has an unplaced prerequisite, so following them
    // must revisit a node.
    let start = (0..n).find(|&i| indegree[i] > 0).expect("unplaced node");
    let mut path = vec![start];
    let mut seen = vec![usize::MAX; n];
    seen[start] = 0;
    let mut cur = start;
    loop {
        let next = buildings[cur]
            .prerequisites
            .iter()
            .map(|p| p.index())
            .find(|&p| indegree[p] > 0)
            .expect("unplaced prerequisite");
        if seen[next] != usize::MAX {
            // Each name requires the one after it.
            let cycle = path[seen[next]..]
                .iter()
                .chain(std::iter::once(&next))
                .map(|&i| buildings[i].name.clone())
                .collect();
            return Err(DagError::Cycle(cycle));
        }
        seen[next] = path.len();
        path.push(next);
        cur = next;
    }
}

/// Parses the line-oriented dag format:
///
/// ```text
/// # comment
/// race protoss
/// building pylon max 2
/// building gateway requires pylon max 2
/// ```
pub fn load_tech_dag(source: &str) -> Result<TechDag, DagError> {
    let mut race = None;
    let mut specs = Vec::new();
    let mut lines_of: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| DagError::Parse {
            line: line_no,
            message,
        };
        let mut words = line.split_whitespace();
        match words.next() {
            Some("race") => {
                let name = words
                    .next()
                    .ok_or_else(|| parse_err("expected `race <name>`".into()))?;
                if words.next().is_some() {
                    return Err(parse_err("trailing tokens after race name".into()));
                }
                if race.is_some() {
                    return Err(parse_err("duplicate race header".into()));
                }
                race = Some(name.parse::<Race>().map_err(|e| parse_err(e.to_string()))?);
            }
            Some("building") => {
                let name = words
                    .next()
                    .ok_or_else(|| parse_err("expected a building name".into()))?;
                if !is_identifier(name) {
                    return Err(parse_err(format!("invalid building name `{name}`")));
                }
                let mut prerequisites = Vec::new();
                let mut max_count = 1u8;
                let mut seen_requires = false;
                let mut seen_max = false;
                while let Some(kw) = words.next() {
                    match kw {
                        "requires" if !seen_requires && !seen_max => {
                            seen_requires = true;
                            let list = words
                                .next()
                                .ok_or_else(|| parse_err("`requires` needs a list".into()))?;
                            for p in list.split(',') {
                                if !is_identifier(p) {
                                    return Err(parse_err(format!("invalid prerequisite `{p}`")));
                                }
                                prerequisites.push(p.to_string());
                            }
                        }
                        "max" if !seen_max => {
                            seen_max = true;
                            let k = words
                                .next()
                                .and_then(|k| k.parse::<u8>().ok())
                                .filter(|&k| k >= 1)
                                .ok_or_else(|| {
                                    parse_err("`max` needs an integer in 1..=255".into())
                                })?;
                            max_count = k;
                        }
                        other => return Err(parse_err(format!("unexpected token `{other}`"))),
                    }
                }
                if lines_of.insert(name.to_string(), line_no).is_some() {
                    return Err(parse_err(format!("building `{name}` is declared twice")));
                }
                specs.push(BuildingSpec {
                    name: name.to_string(),
                    prerequisites,
                    max_count,
                });
            }
            Some(other) => return Err(parse_err(format!("unknown directive `{other}`"))),
            None => unreachable!(),
        }
    }
    let race = race.ok_or(DagError::MissingRace)?;
    TechDag::new(race, specs).map_err(|e| match e {
        DagError::DanglingPrerequisite {
            ref building,
            ref prerequisite,
        } => DagError::Parse {
            line: lines_of[building],
            message: format!("building `{building}` requires unknown building `{prerequisite}`"),
        },
        other => other,
    })
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '\'')
}

/// The dag files shipped with the crate, approximating the building rules of
/// each StarCraft: Brood War race.
pub fn bundled_dag(race: Race) -> TechDag {
    let text = match race {
        Race::Protoss => PROTOSS_DAG,
        Race::Terran => TERRAN_DAG,
        Race::Zerg => ZERG_DAG,
    };
    load_tech_dag(text).expect("bundled dag files are valid")
}
