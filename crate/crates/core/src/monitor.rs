//! Metric emission, collection, accounting, and job rollup.
//!
//! Agents encode samples into one-line datagrams (`MG1|...`), a collector
//! decodes and appends them to a repository, and windowed accounting groups
//! sums by node, VO, or cluster. The metric log file is exactly the accepted
//! datagram lines, so rebuilding from the log reproduces every query result.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::simcore::quantize;
use crate::topology::GridTopology;

pub const FTP_IN_BYTES: &str = "ftp_in_bytes";
pub const FTP_OUT_BYTES: &str = "ftp_out_bytes";
pub const LOAD: &str = "load";
pub const CPU_PCT: &str = "cpu_pct";
pub const MEM_MB: &str = "mem_mb";
pub const DROPPED_GRANULES: &str = "dropped_granules";
pub const SKIPPED_REPLICAS: &str = "skipped_replicas";

/// Metrics every deployment knows about; user metrics extend this set.
pub const BUILTIN_METRICS: &[&str] = &[
    FTP_IN_BYTES,
    FTP_OUT_BYTES,
    LOAD,
    CPU_PCT,
    MEM_MB,
    DROPPED_GRANULES,
    SKIPPED_REPLICAS,
];

/// VO under which infrastructure metrics (node stats, drop counters) are filed.
pub const SYSTEM_VO: &str = "system";

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("wrong magic {0:?}")]
    WrongMagic(String),
    #[error("expected 8 fields, got {0}")]
    FieldCount(usize),
    #[error("unparseable number in field {0}: {1:?}")]
    BadNumber(&'static str, String),
    #[error("invalid {0} field: {1:?}")]
    BadField(&'static str, String),
}

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("timestamp regression for source {node:?}: {got} after {last}")]
    TimeRegression { node: String, last: f64, got: f64 },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("window start must precede window end")]
    EmptyWindow,
    #[error("cluster grouping requires a topology")]
    NeedTopology,
    #[error("node {0:?} is not in the topology")]
    UnknownNode(String),
    #[error("unknown job {0:?}")]
    UnknownJob(String),
    #[error("duplicate job {0:?}")]
    DuplicateJob(String),
    #[error("parent job {0:?} not registered")]
    UnknownParent(String),
    #[error("job {0:?} cannot be its own ancestor")]
    CycleRejected(String),
}

/// One timestamped measurement flowing from an agent to the collector.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub ts: f64,
    pub node: String,
    pub vo: String,
    pub job: Option<String>,
    pub name: String,
    pub value: f64,
    pub unit: String,
}

const MAGIC: &str = "MG1";

fn check_field(what: &'static str, value: &str, may_be_empty: bool) -> Result<(), CodecError> {
    if !may_be_empty && value.is_empty() {
        return Err(CodecError::BadField(what, value.to_string()));
    }
    if value.contains(['|', '\n']) {
        return Err(CodecError::BadField(what, value.to_string()));
    }
    Ok(())
}

/// Shortest decimal form with up to 17 significant digits (C's `%.17g`);
/// round-trips every finite f64 exactly.
fn format_value(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific form has exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= 17 {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let precision = (16 - exp).max(0) as usize;
        let fixed = format!("{v:.precision$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    }
}

impl MetricSample {
    /// Encode as the one-line datagram
    /// `MG1|<ts>|<node>|<vo>|<job-or-->|<name>|<value>|<unit>\n`.
    pub fn encode(&self) -> Result<String, CodecError> {
        check_field("node", &self.node, false)?;
        check_field("vo", &self.vo, false)?;
        check_field("name", &self.name, false)?;
        check_field("unit", &self.unit, true)?;
        let job = match &self.job {
            None => "-",
            Some(j) => {
                check_field("job", j, false)?;
                if j == "-" {
                    return Err(CodecError::BadField("job", j.clone()));
                }
                j.as_str()
            }
        };
        Ok(format!(
            "{MAGIC}|{:.9}|{}|{}|{}|{}|{}|{}\n",
            self.ts,
            self.node,
            self.vo,
            job,
            self.name,
            format_value(self.value),
            self.unit
        ))
    }

    /// Decode a datagram line (trailing newline optional).
    pub fn decode(datagram: &str) -> Result<Self, CodecError> {
        let line = datagram.strip_suffix('\n').unwrap_or(datagram);
        if line.contains('\n') {
            return Err(CodecError::BadField("datagram", "embedded newline".into()));
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 8 {
            return Err(CodecError::FieldCount(fields.len()));
        }
        if fields[0] != MAGIC {
            return Err(CodecError::WrongMagic(fields[0].to_string()));
        }
        let ts: f64 = fields[1]
            .parse()
            .map_err(|_| CodecError::BadNumber("ts", fields[1].to_string()))?;
        let value: f64 = fields[6]
            .parse()
            .map_err(|_| CodecError::BadNumber("value", fields[6].to_string()))?;
        check_field("node", fields[2], false)?;
        check_field("vo", fields[3], false)?;
        check_field("name", fields[5], false)?;
        let job = match fields[4] {
            "-" => None,
            "" => return Err(CodecError::BadField("job", String::new())),
            j => Some(j.to_string()),
        };
        Ok(MetricSample {
            ts,
            node: fields[2].to_string(),
            vo: fields[3].to_string(),
            job,
            name: fields[5].to_string(),
            value,
            unit: fields[7].to_string(),
        })
    }
}

/// Whether a datagram for this sample was delivered or dropped in transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Delivered,
    Lost,
}

/// Per-node emitter with an unreliable transport: each datagram is dropped
/// with the configured probability, drawn from the agent's own substream.
#[derive(Debug)]
pub struct Agent {
    pub node: String,
    loss_probability: f64,
    rng: ChaCha8Rng,
    pub lost: u64,
    pub sent: u64,
}

impl Agent {
    pub fn new(node: impl Into<String>, loss_probability: f64, rng: ChaCha8Rng) -> Self {
        Agent {
            node: node.into(),
            loss_probability,
            rng,
            lost: 0,
            sent: 0,
        }
    }

    pub fn emit(
        &mut self,
        sample: &MetricSample,
        collector: &mut Collector,
    ) -> Result<Delivery, MonitorError> {
        let datagram = sample.encode()?;
        self.sent += 1;
        if self.loss_probability > 0.0 && self.rng.random::<f64>() < self.loss_probability {
            self.lost += 1;
            return Ok(Delivery::Lost);
        }
        collector.ingest(&datagram)?;
        Ok(Delivery::Delivered)
    }
}

/// Append-only sample store with a per-(name, node, vo) index.
#[derive(Debug, Default, Clone)]
pub struct MetricRepository {
    samples: Vec<MetricSample>,
    index: BTreeMap<(String, String, String), Vec<usize>>,
}

impl MetricRepository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[MetricSample] {
        &self.samples
    }

    pub fn append(&mut self, sample: MetricSample) {
        let key = (
            sample.name.clone(),
            sample.node.clone(),
            sample.vo.clone(),
        );
        self.index.entry(key).or_default().push(self.samples.len());
        self.samples.push(sample);
    }

    fn has_metric(&self, name: &str) -> bool {
        self.index
            .range((name.to_string(), String::new(), String::new())..)
            .next()
            .is_some_and(|(k, _)| k.0 == name)
    }

    fn for_metric<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a MetricSample> {
        self.index
            .range((name.to_string(), String::new(), String::new())..)
            .take_while(move |(k, _)| k.0 == *name)
            .flat_map(|(_, idxs)| idxs.iter().map(|&i| &self.samples[i]))
    }

    /// The append-only log: every sample as its datagram line.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&s.encode().expect("stored samples are encodable"));
        }
        out
    }

    /// Rebuild from a log. Undecodable lines are skipped and reported by
    /// line number.
    pub fn from_log(text: &str) -> (Self, Vec<usize>) {
        let mut repo = MetricRepository::new();
        let mut bad = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            match MetricSample::decode(line) {
                Ok(sample) => repo.append(sample),
                Err(_) => bad.push(idx + 1),
            }
        }
        (repo, bad)
    }
}

/// Datagram sink: decodes, enforces per-source timestamp monotonicity,
/// appends to the repository. Failures are counted, never fatal to the
/// collector itself.
#[derive(Debug, Default)]
pub struct Collector {
    repo: MetricRepository,
    last_ts: BTreeMap<String, f64>,
    pub decode_errors: u64,
    pub regressions: u64,
}

impl Collector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest(&mut self, datagram: &str) -> Result<(), MonitorError> {
        let sample = match MetricSample::decode(datagram) {
            Ok(s) => s,
            Err(e) => {
                self.decode_errors += 1;
                return Err(e.into());
            }
        };
        if let Some(&last) = self.last_ts.get(&sample.node) {
            if quantize(sample.ts) < quantize(last) {
                self.regressions += 1;
                return Err(MonitorError::TimeRegression {
                    node: sample.node,
                    last,
                    got: sample.ts,
                });
            }
        }
        self.last_ts.insert(sample.node.clone(), sample.ts);
        self.repo.append(sample);
        Ok(())
    }

    pub fn repo(&self) -> &MetricRepository {
        &self.repo
    }

    pub fn into_repo(self) -> MetricRepository {
        self.repo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Node,
    Vo,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agg {
    Sum,
    Avg,
    Rate,
}

/// A windowed aggregation request over `[window.0, window.1)`.
#[derive(Debug, Clone)]
pub struct AccountingQuery {
    pub metric: String,
    pub group_by: GroupBy,
    pub window: (f64, f64),
    pub agg: Agg,
}

/// Run an accounting query. Groups with no samples are omitted; output is
/// ordered by group key. `topology` is needed only for cluster grouping.
pub fn accounting(
    repo: &MetricRepository,
    query: &AccountingQuery,
    topology: Option<&GridTopology>,
) -> Result<Vec<(String, f64)>, MonitorError> {
    let (t0, t1) = query.window;
    if !(t0 < t1) {
        return Err(MonitorError::EmptyWindow);
    }
    if !BUILTIN_METRICS.contains(&query.metric.as_str()) && !repo.has_metric(&query.metric) {
        return Err(MonitorError::UnknownMetric(query.metric.clone()));
    }
    let mut groups: BTreeMap<String, (f64, u64)> = BTreeMap::new();
    for sample in repo.for_metric(&query.metric) {
        if sample.ts < t0 || sample.ts >= t1 {
            continue;
        }
        let key = match query.group_by {
            GroupBy::Node => sample.node.clone(),
            GroupBy::Vo => sample.vo.clone(),
            GroupBy::Cluster => {
                let topo = topology.ok_or(MonitorError::NeedTopology)?;
                topo.cluster_of(&sample.node)
                    .ok_or_else(|| MonitorError::UnknownNode(sample.node.clone()))?
                    .to_string()
            }
        };
        let entry = groups.entry(key).or_insert((0.0, 0));
        entry.0 += sample.value;
        entry.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|(key, (sum, count))| {
            let value = match query.agg {
                Agg::Sum => sum,
                Agg::Avg => sum / count as f64,
                Agg::Rate => sum / (t1 - t0),
            };
            (key, value)
        })
        .collect())
}

/// One monitored job; children must register after their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub id: String,
    pub parent: Option<String>,
    pub vo: String,
    pub node: String,
}

/// Registry of jobs and their fork relationships.
#[derive(Debug, Default)]
pub struct JobTree {
    jobs: BTreeMap<String, JobRecord>,
    children: BTreeMap<String, Vec<String>>,
}

impl JobTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, job: JobRecord) -> Result<(), MonitorError> {
        if self.jobs.contains_key(&job.id) {
            return Err(MonitorError::DuplicateJob(job.id));
        }
        if let Some(parent) = &job.parent {
            if parent == &job.id {
                return Err(MonitorError::CycleRejected(job.id));
            }
            if !self.jobs.contains_key(parent) {
                return Err(MonitorError::UnknownParent(parent.clone()));
            }
            self.children
                .entry(parent.clone())
                .or_default()
                .push(job.id.clone());
        }
        self.jobs.insert(job.id.clone(), job);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&JobRecord> {
        self.jobs.get(id)
    }

    /// The job and all transitive descendants.
    pub fn subtree(&self, id: &str) -> Result<Vec<String>, MonitorError> {
        if !self.jobs.contains_key(id) {
            return Err(MonitorError::UnknownJob(id.to_string()));
        }
        let mut out = vec![id.to_string()];
        let mut stack = vec![id];
        while let Some(job) = stack.pop() {
            if let Some(kids) = self.children.get(job) {
                for kid in kids {
                    out.push(kid.clone());
                    stack.push(kid);
                }
            }
        }
        Ok(out)
    }

    /// Sum `metric` over the job and every descendant within the window.
    pub fn job_rollup(
        &self,
        repo: &MetricRepository,
        id: &str,
        metric: &str,
        window: (f64, f64),
    ) -> Result<f64, MonitorError> {
        let members: std::collections::BTreeSet<String> =
            self.subtree(id)?.into_iter().collect();
        let mut sum = 0.0;
        for sample in repo.for_metric(metric) {
            if sample.ts < window.0 || sample.ts >= window.1 {
                continue;
            }
            if let Some(job) = &sample.job {
                if members.contains(job) {
                    sum += sample.value;
                }
            }
        }
        Ok(sum)
    }
}

/// Synthetic node statistics derived from transfer activity:
/// load = active sessions touching the node, cpu = min(100, 10*load),
/// memory = 512 + 64*load MB.
pub fn node_stat_samples(node: &str, ts: f64, active_sessions: u32) -> [MetricSample; 3] {
    let load = active_sessions as f64;
    let base = |name: &str, value: f64, unit: &str| MetricSample {
        ts,
        node: node.to_string(),
        vo: SYSTEM_VO.to_string(),
        job: None,
        name: name.to_string(),
        value,
        unit: unit.to_string(),
    };
    [
        base(LOAD, load, "count"),
        base(CPU_PCT, (10.0 * load).min(100.0), "pct"),
        base(MEM_MB, 512.0 + 64.0 * load, "MB"),
    ]
}
