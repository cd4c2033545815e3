//! Line-oriented config parsing for topology, replication, ingest and
//! scheduler/simulation parameters.
//!
//! Sections: `[cluster <name>]`, `[link <a> <b>]`, `[defaults]`,
//! `[replication]`, `[ingest]`, `[sched]`, `[sim]`. Key lines are `key=value`;
//! node lines are `node <name> capacity_gb=<int> role=<role>`; replication
//! targets are `target <cluster>=<node>`. `#` starts a comment. Unknown keys
//! are an error.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::replication::{IngestSchedule, ReplicationPolicy, SizeTable};
use crate::sched::SchedParams;
use crate::topology::{Cluster, GridTopology, ModelConstants, NetworkLink, Node, NodeRole};

#[derive(Debug, Error, PartialEq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }
}

/// Simulation-level knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Probability that a monitoring datagram is lost in transit.
    pub loss_probability: f64,
    /// Node statistics sampling period in seconds (0 disables sampling).
    pub stats_period: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            loss_probability: 0.0,
            stats_period: 300.0,
        }
    }
}

/// Everything a config file can define.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub topology: GridTopology,
    pub replication: Option<ReplicationPolicy>,
    pub ingest: Option<IngestSchedule>,
    pub sched: SchedParams,
    pub sim: SimParams,
}

#[derive(Debug, Default, Clone, Copy)]
struct LinkOverrides {
    bandwidth_mbps: Option<f64>,
    rtt_ms: Option<f64>,
    rmax_mbps: Option<f64>,
    gamma: Option<f64>,
    handshake_rounds: Option<u32>,
    per_file_rounds: Option<u32>,
    command_round: Option<u32>,
}

impl LinkOverrides {
    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "bandwidth_mbps" => self.bandwidth_mbps = Some(parse_f64(line, key, value)?),
            "rtt_ms" => self.rtt_ms = Some(parse_f64(line, key, value)?),
            "rmax_mbps" => self.rmax_mbps = Some(parse_f64(line, key, value)?),
            "gamma" => self.gamma = Some(parse_f64(line, key, value)?),
            "h" => self.handshake_rounds = Some(parse_u32(line, key, value)?),
            "hf" => self.per_file_rounds = Some(parse_u32(line, key, value)?),
            "command_round" => self.command_round = Some(parse_u32(line, key, value)?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn apply(&self, mut link: NetworkLink) -> NetworkLink {
        if let Some(v) = self.bandwidth_mbps {
            link.bandwidth_mbps = v;
        }
        if let Some(v) = self.rtt_ms {
            link.rtt = v / 1000.0;
        }
        if let Some(v) = self.rmax_mbps {
            link.per_stream_cap_mbps = v;
        }
        if let Some(v) = self.gamma {
            link.contention_gamma = v;
        }
        if let Some(v) = self.handshake_rounds {
            link.handshake_rounds = v;
        }
        if let Some(v) = self.per_file_rounds {
            link.per_file_rounds = v;
        }
        if let Some(v) = self.command_round {
            link.command_round = v;
        }
        link
    }
}

struct PendingCluster {
    name: String,
    line: usize,
    nodes: Vec<Node>,
    overrides: LinkOverrides,
}

struct PendingLink {
    a: String,
    b: String,
    line: usize,
    overrides: LinkOverrides,
}

#[derive(Default)]
struct PendingReplication {
    line: usize,
    acquisition: Option<String>,
    targets: Vec<(usize, String, String)>,
    parallelism: Option<u32>,
    intra_fanout: bool,
}

#[derive(Default)]
struct PendingIngest {
    line: usize,
    areas: Option<u32>,
    rate_per_day: Option<u32>,
    size_250m_mb: Option<f64>,
    size_500m_mb: Option<f64>,
    size_1km_mb: Option<f64>,
}

enum Section {
    None,
    Cluster(usize),
    Link(usize),
    Defaults,
    Replication,
    Ingest,
    Sched,
    Sim,
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(line, format!("invalid number for {key}: {value:?}")))
}

fn parse_u32(line: usize, key: &str, value: &str) -> Result<u32, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(line, format!("invalid integer for {key}: {value:?}")))
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '/'))
}

/// Parse a full config file.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let mut clusters: Vec<PendingCluster> = Vec::new();
    let mut links: Vec<PendingLink> = Vec::new();
    let mut defaults = LinkOverrides::default();
    let mut replication: Option<PendingReplication> = None;
    let mut ingest: Option<PendingIngest> = None;
    let mut sched = SchedParams::default();
    let mut sim = SimParams::default();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(ConfigError::new(lineno, "unterminated section header"));
            }
            let inner = &line[1..line.len() - 1];
            let parts: Vec<&str> = inner.split_whitespace().collect();
            section = match parts.as_slice() {
                ["cluster", name] => {
                    if !valid_ident(name) {
                        return Err(ConfigError::new(lineno, format!("invalid cluster name {name:?}")));
                    }
                    if clusters.iter().any(|c| c.name == *name) {
                        return Err(ConfigError::new(lineno, format!("duplicate cluster {name:?}")));
                    }
                    clusters.push(PendingCluster {
                        name: name.to_string(),
                        line: lineno,
                        nodes: Vec::new(),
                        overrides: LinkOverrides::default(),
                    });
                    Section::Cluster(clusters.len() - 1)
                }
                ["link", a, b] => {
                    if a == b {
                        return Err(ConfigError::new(lineno, "link endpoints must differ"));
                    }
                    let (a, b) = if a <= b { (*a, *b) } else { (*b, *a) };
                    if links.iter().any(|l| l.a == a && l.b == b) {
                        return Err(ConfigError::new(lineno, format!("duplicate link {a} {b}")));
                    }
                    links.push(PendingLink {
                        a: a.to_string(),
                        b: b.to_string(),
                        line: lineno,
                        overrides: LinkOverrides::default(),
                    });
                    Section::Link(links.len() - 1)
                }
                ["defaults"] => Section::Defaults,
                ["replication"] => {
                    if replication.is_some() {
                        return Err(ConfigError::new(lineno, "duplicate [replication] section"));
                    }
                    replication = Some(PendingReplication {
                        line: lineno,
                        ..Default::default()
                    });
                    Section::Replication
                }
                ["ingest"] => {
                    if ingest.is_some() {
                        return Err(ConfigError::new(lineno, "duplicate [ingest] section"));
                    }
                    ingest = Some(PendingIngest {
                        line: lineno,
                        ..Default::default()
                    });
                    Section::Ingest
                }
                ["sched"] => Section::Sched,
                ["sim"] => Section::Sim,
                _ => return Err(ConfigError::new(lineno, format!("unknown section {inner:?}"))),
            };
            continue;
        }

        match section {
            Section::None => {
                return Err(ConfigError::new(lineno, "content before any section"));
            }
            Section::Cluster(i) => {
                let cluster = &mut clusters[i];
                if let Some(rest) = line.strip_prefix("node ") {
                    let mut tokens = rest.split_whitespace();
                    let name = tokens
                        .next()
                        .ok_or_else(|| ConfigError::new(lineno, "node line missing name"))?;
                    if !valid_ident(name) {
                        return Err(ConfigError::new(lineno, format!("invalid node name {name:?}")));
                    }
                    let mut capacity_gb: Option<u64> = None;
                    let mut role: Option<NodeRole> = None;
                    for tok in tokens {
                        let (k, v) = tok.split_once('=').ok_or_else(|| {
                            ConfigError::new(lineno, format!("expected key=value, got {tok:?}"))
                        })?;
                        match k {
                            "capacity_gb" => {
                                let gb: u64 = v.parse().map_err(|_| {
                                    ConfigError::new(lineno, format!("invalid capacity_gb: {v:?}"))
                                })?;
                                capacity_gb = Some(gb);
                            }
                            "role" => {
                                role = Some(NodeRole::parse(v).ok_or_else(|| {
                                    ConfigError::new(lineno, format!("unknown role {v:?}"))
                                })?);
                            }
                            _ => {
                                return Err(ConfigError::new(
                                    lineno,
                                    format!("unknown node key {k:?}"),
                                ))
                            }
                        }
                    }
                    let capacity_gb = capacity_gb
                        .ok_or_else(|| ConfigError::new(lineno, "node line missing capacity_gb"))?;
                    if capacity_gb == 0 {
                        return Err(ConfigError::new(lineno, "node capacity must be positive"));
                    }
                    let role =
                        role.ok_or_else(|| ConfigError::new(lineno, "node line missing role"))?;
                    cluster.nodes.push(Node {
                        name: name.to_string(),
                        cluster: cluster.name.clone(),
                        capacity_bytes: capacity_gb * 1_000_000_000,
                        role,
                    });
                } else {
                    let (k, v) = split_kv(lineno, line)?;
                    if !cluster.overrides.set(lineno, k, v)? {
                        return Err(ConfigError::new(lineno, format!("unknown key {k:?} in [cluster]")));
                    }
                }
            }
            Section::Link(i) => {
                let (k, v) = split_kv(lineno, line)?;
                if !links[i].overrides.set(lineno, k, v)? {
                    return Err(ConfigError::new(lineno, format!("unknown key {k:?} in [link]")));
                }
            }
            Section::Defaults => {
                let (k, v) = split_kv(lineno, line)?;
                if !defaults.set(lineno, k, v)? {
                    return Err(ConfigError::new(lineno, format!("unknown key {k:?} in [defaults]")));
                }
            }
            Section::Replication => {
                let rep = replication.as_mut().expect("section implies presence");
                if let Some(rest) = line.strip_prefix("target ") {
                    let (cluster, node) = rest.trim().split_once('=').ok_or_else(|| {
                        ConfigError::new(lineno, "expected target <cluster>=<node>")
                    })?;
                    rep.targets
                        .push((lineno, cluster.trim().to_string(), node.trim().to_string()));
                } else {
                    let (k, v) = split_kv(lineno, line)?;
                    match k {
                        "acquisition" => rep.acquisition = Some(v.to_string()),
                        "parallelism" => rep.parallelism = Some(parse_u32(lineno, k, v)?),
                        "intra_fanout" => rep.intra_fanout = parse_on_off(lineno, k, v)?,
                        _ => {
                            return Err(ConfigError::new(
                                lineno,
                                format!("unknown key {k:?} in [replication]"),
                            ))
                        }
                    }
                }
            }
            Section::Ingest => {
                let ing = ingest.as_mut().expect("section implies presence");
                let (k, v) = split_kv(lineno, line)?;
                match k {
                    "areas" => ing.areas = Some(parse_u32(lineno, k, v)?),
                    "rate_per_day" => ing.rate_per_day = Some(parse_u32(lineno, k, v)?),
                    "size_250m_mb" => ing.size_250m_mb = Some(parse_f64(lineno, k, v)?),
                    "size_500m_mb" => ing.size_500m_mb = Some(parse_f64(lineno, k, v)?),
                    "size_1km_mb" => ing.size_1km_mb = Some(parse_f64(lineno, k, v)?),
                    _ => {
                        return Err(ConfigError::new(lineno, format!("unknown key {k:?} in [ingest]")))
                    }
                }
            }
            Section::Sched => {
                let (k, v) = split_kv(lineno, line)?;
                match k {
                    "alpha" => {
                        let a = parse_f64(lineno, k, v)?;
                        if !(a > 0.0 && a <= 1.0) {
                            return Err(ConfigError::new(lineno, "alpha must be in (0, 1]"));
                        }
                        sched.alpha = a;
                    }
                    "p_default" => {
                        let p = parse_u32(lineno, k, v)?;
                        if p == 0 {
                            return Err(ConfigError::new(lineno, "p_default must be >= 1"));
                        }
                        sched.p_default = p;
                    }
                    _ => {
                        return Err(ConfigError::new(lineno, format!("unknown key {k:?} in [sched]")))
                    }
                }
            }
            Section::Sim => {
                let (k, v) = split_kv(lineno, line)?;
                match k {
                    "loss_probability" => {
                        let p = parse_f64(lineno, k, v)?;
                        if !(0.0..=1.0).contains(&p) {
                            return Err(ConfigError::new(lineno, "loss_probability must be in [0, 1]"));
                        }
                        sim.loss_probability = p;
                    }
                    "stats_period" => {
                        let p = parse_f64(lineno, k, v)?;
                        if p < 0.0 {
                            return Err(ConfigError::new(lineno, "stats_period must be >= 0"));
                        }
                        sim.stats_period = p;
                    }
                    _ => return Err(ConfigError::new(lineno, format!("unknown key {k:?} in [sim]"))),
                }
            }
        }
    }

    // Resolve defaults, then materialize links and clusters.
    let constants = ModelConstants::default();
    let model = ModelConstants {
        per_stream_cap_mbps: defaults.rmax_mbps.unwrap_or(constants.per_stream_cap_mbps),
        contention_gamma: defaults.gamma.unwrap_or(constants.contention_gamma),
        handshake_rounds: defaults
            .handshake_rounds
            .unwrap_or(constants.handshake_rounds),
        per_file_rounds: defaults.per_file_rounds.unwrap_or(constants.per_file_rounds),
        command_round: defaults.command_round.unwrap_or(constants.command_round),
    };
    let default_inter = defaults.apply(model.default_inter_link());
    validate_link(1, &default_inter)?;

    let mut seen_nodes: BTreeMap<String, usize> = BTreeMap::new();
    let mut built_clusters = Vec::new();
    for pc in &clusters {
        if pc.nodes.is_empty() {
            return Err(ConfigError::new(
                pc.line,
                format!("cluster {:?} has no nodes", pc.name),
            ));
        }
        for n in &pc.nodes {
            if let Some(prev) = seen_nodes.insert(n.name.clone(), pc.line) {
                let _ = prev;
                return Err(ConfigError::new(
                    pc.line,
                    format!("duplicate node {:?}", n.name),
                ));
            }
        }
        let intra = pc.overrides.apply(model.default_intra_link());
        validate_link(pc.line, &intra)?;
        built_clusters.push(Cluster {
            name: pc.name.clone(),
            nodes: pc.nodes.clone(),
            intra_link: intra,
        });
    }

    let mut inter_links = BTreeMap::new();
    for pl in &links {
        for end in [&pl.a, &pl.b] {
            if !built_clusters.iter().any(|c| &c.name == end) {
                return Err(ConfigError::new(
                    pl.line,
                    format!("link references unknown cluster {end:?}"),
                ));
            }
        }
        let link = pl.overrides.apply(default_inter);
        validate_link(pl.line, &link)?;
        inter_links.insert((pl.a.clone(), pl.b.clone()), link);
    }

    let topology = GridTopology::new(built_clusters, inter_links, model, Some(default_inter));

    let replication = match replication {
        None => None,
        Some(rep) => {
            let acquisition = rep.acquisition.ok_or_else(|| {
                ConfigError::new(rep.line, "[replication] requires acquisition=<node>")
            })?;
            if topology.node(&acquisition).is_none() {
                return Err(ConfigError::new(
                    rep.line,
                    format!("unknown acquisition node {acquisition:?}"),
                ));
            }
            let mut targets = BTreeMap::new();
            for (line, cluster, node) in &rep.targets {
                let c = topology.cluster(cluster).ok_or_else(|| {
                    ConfigError::new(*line, format!("unknown target cluster {cluster:?}"))
                })?;
                if !c.nodes.iter().any(|n| &n.name == node) {
                    return Err(ConfigError::new(
                        *line,
                        format!("node {node:?} is not in cluster {cluster:?}"),
                    ));
                }
                if targets.insert(cluster.clone(), node.clone()).is_some() {
                    return Err(ConfigError::new(
                        *line,
                        format!("duplicate target for cluster {cluster:?}"),
                    ));
                }
            }
            let parallelism = rep.parallelism.unwrap_or(10);
            if parallelism == 0 {
                return Err(ConfigError::new(rep.line, "parallelism must be >= 1"));
            }
            Some(ReplicationPolicy {
                acquisition_node: acquisition,
                targets,
                parallelism,
                intra_fanout: rep.intra_fanout,
            })
        }
    };

    let ingest = match ingest {
        None => None,
        Some(ing) => {
            let areas = ing.areas.unwrap_or(50);
            let rate = ing.rate_per_day.unwrap_or(20);
            if areas == 0 {
                return Err(ConfigError::new(ing.line, "areas must be >= 1"));
            }
            if rate == 0 {
                return Err(ConfigError::new(ing.line, "rate_per_day must be >= 1"));
            }
            let d = SizeTable::default();
            let sizes = SizeTable {
                bytes_250m: mb_to_bytes(ing.size_250m_mb, d.bytes_250m, ing.line)?,
                bytes_500m: mb_to_bytes(ing.size_500m_mb, d.bytes_500m, ing.line)?,
                bytes_1km: mb_to_bytes(ing.size_1km_mb, d.bytes_1km, ing.line)?,
            };
            Some(IngestSchedule {
                areas: area_ids(areas),
                rate_per_day: rate,
                sizes,
            })
        }
    };

    Ok(ParsedConfig {
        topology,
        replication,
        ingest,
        sched,
        sim,
    })
}

fn mb_to_bytes(mb: Option<f64>, default: u64, line: usize) -> Result<u64, ConfigError> {
    match mb {
        None => Ok(default),
        Some(v) if v > 0.0 => Ok((v * 1e6).round() as u64),
        Some(v) => Err(ConfigError::new(line, format!("size must be positive, got {v}"))),
    }
}

/// Generated area identifiers: a001, a002, ...
pub fn area_ids(count: u32) -> Vec<String> {
    (1..=count).map(|i| format!("a{i:03}")).collect()
}

fn split_kv(line: usize, text: &str) -> Result<(&str, &str), ConfigError> {
    text.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| ConfigError::new(line, format!("expected key=value, got {text:?}")))
}

fn parse_on_off(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(ConfigError::new(
            line,
            format!("{key} must be on or off, got {value:?}"),
        )),
    }
}

fn validate_link(line: usize, link: &NetworkLink) -> Result<(), ConfigError> {
    if link.bandwidth_mbps <= 0.0 {
        return Err(ConfigError::new(line, "bandwidth must be positive"));
    }
    if link.rtt < 0.0 {
        return Err(ConfigError::new(line, "rtt must be >= 0"));
    }
    if link.per_stream_cap_mbps <= 0.0 {
        return Err(ConfigError::new(line, "rmax must be positive"));
    }
    if link.per_stream_cap_mbps > link.bandwidth_mbps {
        return Err(ConfigError::new(
            line,
            "rmax exceeds bandwidth; set rmax_mbps for this link",
        ));
    }
    if link.contention_gamma < 0.0 {
        return Err(ConfigError::new(line, "gamma must be >= 0"));
    }
    if link.command_round > 1 {
        return Err(ConfigError::new(line, "command_round must be 0 or 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_CLUSTERS: &str = "\
[cluster hub]
node hub-acq capacity_gb=100 role=acquisition
node hub-s1 capacity_gb=50 role=storage

[cluster west]
node west-s1 capacity_gb=50 role=storage

[link hub west]
bandwidth_mbps=100
rtt_ms=50
";

    #[test]
    fn minimal_config_resolves_local_links() {
        let text = "\
[cluster solo]
node n1 capacity_gb=10 role=storage
node n2 capacity_gb=10 role=storage
";
        let topo = GridTopology::load(text).unwrap();
        assert_eq!(topo.clusters.len(), 1);
        let loop_link = topo.resolve_link("n1", "n1").unwrap();
        assert_eq!(loop_link.rtt, 0.0);
        let intra = topo.resolve_link("n1", "n2").unwrap();
        assert_eq!(intra.bandwidth_mbps, 1000.0);
        assert_eq!(intra.rtt, 0.0002);
        assert_eq!(intra.per_stream_cap_mbps, 200.0);
    }

    #[test]
    fn inter_link_round_trips_through_parser() {
        let topo = GridTopology::load(TWO_CLUSTERS).unwrap();
        let link = topo.resolve_link("hub-acq", "west-s1").unwrap();
        assert_eq!(link.bandwidth_mbps, 100.0);
        assert_eq!(link.rtt, 0.05);
        assert_eq!(link.handshake_rounds, 3);
        assert_eq!(link.per_file_rounds, 2);
    }

    #[test]
    fn duplicate_node_rejected() {
        let text = "\
[cluster a]
node n1 capacity_gb=10 role=storage

[cluster b]
node n1 capacity_gb=10 role=storage
";
        let err = GridTopology::load(text).unwrap_err();
        assert!(err.message.contains("duplicate node"), "{err}");
    }

    #[test]
    fn nonpositive_bandwidth_rejected() {
        let text = "\
[cluster a]
node n1 capacity_gb=10 role=storage
bandwidth_mbps=0
rmax_mbps=0.0001
";
        let err = GridTopology::load(text).unwrap_err();
        assert!(err.message.contains("bandwidth"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_with_line_number() {
        let text = "[defaults]\nbogus=1\n";
        let err = GridTopology::load(text).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn resolve_is_symmetric_across_clusters() {
        let topo = GridTopology::load(TWO_CLUSTERS).unwrap();
        let ab = topo.resolve_link_ref("hub-s1", "west-s1").unwrap();
        let ba = topo.resolve_link_ref("west-s1", "hub-s1").unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn same_cluster_uses_intra_link() {
        let topo = GridTopology::load(TWO_CLUSTERS).unwrap();
        let link = topo.resolve_link_ref("hub-acq", "hub-s1").unwrap();
        assert_eq!(link.key, crate::topology::LinkKey::Intra("hub".into()));
        assert_eq!(link.link, topo.cluster("hub").unwrap().intra_link);
    }

    #[test]
    fn unlinked_cluster_pair_falls_back_to_default() {
        let text = "\
[cluster a]
node a1 capacity_gb=10 role=storage

[cluster b]
node b1 capacity_gb=10 role=storage
";
        let topo = GridTopology::load(text).unwrap();
        let link = topo.resolve_link("a1", "b1").unwrap();
        assert_eq!(link.bandwidth_mbps, 100.0);
        assert_eq!(link.rtt, 0.05);
    }

    #[test]
    fn serialization_round_trip_is_stable() {
        let topo = GridTopology::load(TWO_CLUSTERS).unwrap();
        let text = topo.to_config_text();
        let again = GridTopology::load(&text).unwrap();
        assert_eq!(topo, again);
        assert_eq!(text, again.to_config_text());
    }

    #[test]
    fn replication_and_ingest_sections_parse() {
        let text = format!(
            "{TWO_CLUSTERS}
[replication]
acquisition=hub-acq
target west=west-s1
parallelism=8

[ingest]
areas=5
rate_per_day=4
size_250m_mb=2
size_500m_mb=1
size_1km_mb=0.5

[sched]
alpha=0.5
p_default=6

[sim]
loss_probability=0.25
stats_period=60
"
        );
        let cfg = parse_config(&text).unwrap();
        let rep = cfg.replication.unwrap();
        assert_eq!(rep.acquisition_node, "hub-acq");
        assert_eq!(rep.targets.len(), 1);
        assert_eq!(rep.parallelism, 8);
        let ing = cfg.ingest.unwrap();
        assert_eq!(ing.areas.len(), 5);
        assert_eq!(ing.rate_per_day, 4);
        assert_eq!(ing.sizes.bytes_250m, 2_000_000);
        assert_eq!(cfg.sched.alpha, 0.5);
        assert_eq!(cfg.sched.p_default, 6);
        assert_eq!(cfg.sim.loss_probability, 0.25);
        assert_eq!(cfg.sim.stats_period, 60.0);
    }

    #[test]
    fn target_outside_named_cluster_rejected() {
        let text = format!(
            "{TWO_CLUSTERS}
[replication]
acquisition=hub-acq
target west=hub-s1
"
        );
        let err = parse_config(&text).unwrap_err();
        assert!(err.message.contains("not in cluster"), "{err}");
    }
}
