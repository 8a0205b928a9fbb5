//! Synthetic log generation from a probabilistic control-flow spec.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use chrono::{DateTime, TimeDelta, Utc};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::LogError;
use crate::event::{Cell, Event, EventLog, Trace};
use crate::schema::{AttrKind, AttrScope, Attribute, AttributeSchema};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttrRuleSpec {
    pub name: String,
    pub rule: String,
}

/// Control-flow graph over activity labels with per-edge probabilities,
/// per-activity duration ranges (whole seconds) and optional derived event
/// attributes that are pure functions of (activity, position).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub activities: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    pub durations: BTreeMap<String, (u64, u64)>,
    #[serde(default)]
    pub attrs: Vec<AttrRuleSpec>,
    /// Start node; defaults to the first activity.
    #[serde(default)]
    pub start: Option<String>,
    /// End node; defaults to the last activity.
    #[serde(default)]
    pub end: Option<String>,
    /// Walks longer than this are rejected and resampled.
    #[serde(default)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DerivedRule {
    /// 0-based event index, numeric.
    Position,
    /// "even" / "odd" by event index.
    Parity,
    /// Previous event's activity, "NONE" for the first event.
    PrevActivity,
    /// Copy of the activity label.
    Mirror,
}

impl DerivedRule {
    fn parse(rule: &str) -> Result<Self, LogError> {
        match rule {
            "position" => Ok(Self::Position),
            "parity" => Ok(Self::Parity),
            "prev_activity" => Ok(Self::PrevActivity),
            "mirror" => Ok(Self::Mirror),
            other => Err(LogError::InvalidSpec(format!("unknown attribute rule `{other}`"))),
        }
    }

    fn kind(self) -> AttrKind {
        match self {
            Self::Position => AttrKind::Numeric,
            _ => AttrKind::Categorical,
        }
    }

    fn value(self, activities: &[String], index: usize) -> String {
        match self {
            Self::Position => index.to_string(),
            Self::Parity => if index.is_multiple_of(2) { "even" } else { "odd" }.to_string(),
            Self::PrevActivity => {
                if index == 0 {
                    "NONE".to_string()
                } else {
                    activities[index - 1].clone()
                }
            }
            Self::Mirror => activities[index].clone(),
        }
    }
}

impl ProcessSpec {
    pub fn from_json(json: &str) -> Result<Self, LogError> {
        let spec: ProcessSpec = serde_json::from_str(json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn start_activity(&self) -> &str {
        self.start.as_deref().unwrap_or_else(|| self.activities.first().map(String::as_str).unwrap_or(""))
    }

    pub fn end_activity(&self) -> &str {
        self.end.as_deref().unwrap_or_else(|| self.activities.last().map(String::as_str).unwrap_or(""))
    }

    pub fn validate(&self) -> Result<(), LogError> {
        if self.activities.is_empty() {
            return Err(LogError::InvalidSpec("no activities".into()));
        }
        let known: HashSet<&str> = self.activities.iter().map(String::as_str).collect();
        if known.len() != self.activities.len() {
            return Err(LogError::InvalidSpec("duplicate activity labels".into()));
        }
        for name in [self.start_activity(), self.end_activity()] {
            if !known.contains(name) {
                return Err(LogError::InvalidSpec(format!("unknown start/end activity `{name}`")));
            }
        }
        let mut outgoing: HashMap<&str, f64> = HashMap::new();
        for edge in &self.edges {
            if !known.contains(edge.from.as_str()) || !known.contains(edge.to.as_str()) {
                return Err(LogError::InvalidSpec(format!(
                    "edge {} -> {} references an unknown activity",
                    edge.from, edge.to
                )));
            }
            if edge.p < 0.0 {
                return Err(LogError::InvalidProbabilities(format!(
                    "negative probability on {} -> {}",
                    edge.from, edge.to
                )));
            }
            *outgoing.entry(edge.from.as_str()).or_insert(0.0) += edge.p;
        }
        for (node, total) in &outgoing {
            if (total - 1.0).abs() > 1e-9 {
                return Err(LogError::InvalidProbabilities(format!(
                    "outgoing probabilities of `{node}` sum to {total}"
                )));
            }
        }
        for activity in &self.activities {
            match self.durations.get(activity) {
                None => {
                    return Err(LogError::InvalidSpec(format!(
                        "activity `{activity}` has no duration range"
                    )))
                }
                Some((lo, hi)) if *lo < 1 || lo > hi => {
                    return Err(LogError::InvalidSpec(format!(
                        "activity `{activity}` has an invalid duration range [{lo}, {hi}]"
                    )))
                }
                _ => {}
            }
        }
        for attr in &self.attrs {
            DerivedRule::parse(&attr.rule)?;
            if attr.name == "case_id" || attr.name == "activity" || attr.name == "timestamp" {
                return Err(LogError::InvalidSpec(format!(
                    "derived attribute `{}` clashes with a reserved column",
                    attr.name
                )));
            }
        }
        // Every node reachable from start must reach end, otherwise walks can
        // strand and resampling never terminates.
        let reachable = self.forward_reachable();
        let closing = self.backward_reachable();
        for node in &reachable {
            if !closing.contains(node.as_str()) {
                return Err(LogError::UnreachableEnd(node.clone()));
            }
        }
        if !reachable.contains(self.end_activity()) {
            return Err(LogError::UnreachableEnd(self.start_activity().to_string()));
        }
        Ok(())
    }

    fn forward_reachable(&self) -> HashSet<String> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([self.start_activity().to_string()]);
        while let Some(node) = queue.pop_front() {
            if !seen.insert(node.clone()) {
                continue;
            }
            for edge in self.edges.iter().filter(|e| e.from == node) {
                queue.push_back(edge.to.clone());
            }
        }
        seen
    }

    fn backward_reachable(&self) -> HashSet<String> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([self.end_activity().to_string()]);
        while let Some(node) = queue.pop_front() {
            if !seen.insert(node.clone()) {
                continue;
            }
            for edge in self.edges.iter().filter(|e| e.to == node) {
                queue.push_back(edge.from.clone());
            }
        }
        seen
    }

    /// Schema of the logs this spec generates.
    pub fn schema(&self) -> Result<AttributeSchema, LogError> {
        let mut attributes = vec![
            Attribute { name: "activity".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
            Attribute { name: "timestamp".into(), kind: AttrKind::Timestamp, scope: AttrScope::Event },
        ];
        for attr in &self.attrs {
            let rule = DerivedRule::parse(&attr.rule)?;
            attributes.push(Attribute {
                name: attr.name.clone(),
                kind: rule.kind(),
                scope: AttrScope::Event,
            });
        }
        AttributeSchema::new(attributes, "case_id", "activity", "timestamp")
    }
}

const RESAMPLE_BUDGET: usize = 1000;

fn base_time() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2024-01-01T00:00:00Z")
        .expect("valid constant")
        .with_timezone(&Utc)
}

/// Generates `n_traces` random walks start -> end with strictly increasing
/// timestamps. Deterministic under `seed`.
pub fn generate_synthetic_log(
    spec: &ProcessSpec,
    n_traces: usize,
    seed: u64,
) -> Result<EventLog, LogError> {
    spec.validate()?;
    let schema = spec.schema()?;
    let rules: Vec<DerivedRule> = spec
        .attrs
        .iter()
        .map(|a| DerivedRule::parse(&a.rule))
        .collect::<Result<_, _>>()?;
    let max_steps = spec.max_steps.unwrap_or(4 * spec.activities.len() + 16);
    let start = spec.start_activity().to_string();
    let end = spec.end_activity().to_string();

    let mut rng = StdRng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(n_traces);
    let width = n_traces.to_string().len().max(4);

    for trace_idx in 0..n_traces {
        let mut walk: Option<Vec<String>> = None;
        for _ in 0..RESAMPLE_BUDGET {
            match sample_walk(spec, &start, &end, max_steps, &mut rng) {
                Some(w) => {
                    walk = Some(w);
                    break;
                }
                None => continue,
            }
        }
        let activities = walk.ok_or_else(|| {
            LogError::GenerationFailed(format!(
                "no walk of at most {max_steps} steps reached `{end}` after {RESAMPLE_BUDGET} attempts"
            ))
        })?;

        let mut ts = base_time();
        let mut events = Vec::with_capacity(activities.len());
        for (idx, activity) in activities.iter().enumerate() {
            let mut cells = vec![
                Cell::Present(activity.clone()),
                Cell::Present(ts.format("%Y-%m-%d %H:%M:%S").to_string()),
            ];
            for rule in &rules {
                cells.push(Cell::Present(rule.value(&activities, idx)));
            }
            events.push(Event { cells });
            let (lo, hi) = spec.durations[activity];
            let step = rng.random_range(lo..=hi);
            ts += TimeDelta::seconds(step as i64);
        }
        traces.push(Trace {
            case_id: format!("case_{trace_idx:0width$}"),
            events,
        });
    }

    let log = EventLog { schema, traces };
    debug_assert!(log.validate().is_ok());
    Ok(log)
}

fn sample_walk(
    spec: &ProcessSpec,
    start: &str,
    end: &str,
    max_steps: usize,
    rng: &mut StdRng,
) -> Option<Vec<String>> {
    let mut walk = vec![start.to_string()];
    let mut current = start.to_string();
    while current != end {
        if walk.len() > max_steps {
            return None;
        }
        let options: Vec<&EdgeSpec> = spec.edges.iter().filter(|e| e.from == current).collect();
        if options.is_empty() {
            return None;
        }
        let roll: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        let mut chosen = options[options.len() - 1];
        for edge in &options {
            acc += edge.p;
            if roll < acc {
                chosen = edge;
                break;
            }
        }
        current = chosen.to.clone();
        walk.push(current.clone());
    }
    Some(walk)
}

/// Convenience builder for a deterministic linear chain A0 -> A1 -> ... with
/// fixed or ranged step durations.
pub fn linear_chain_spec(labels: &[&str], duration: (u64, u64)) -> ProcessSpec {
    let activities: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    let edges = activities
        .windows(2)
        .map(|w| EdgeSpec { from: w[0].clone(), to: w[1].clone(), p: 1.0 })
        .collect();
    let durations = activities.iter().map(|a| (a.clone(), duration)).collect();
    ProcessSpec {
        activities,
        edges,
        durations,
        attrs: Vec::new(),
        start: None,
        end: None,
        max_steps: None,
    }
}
