//! Grid layout and the parametric link model all transfer times derive from.

use std::collections::BTreeMap;

use thiserror::Error;

/// Megabits carried by one megabyte (sizes are decimal: 1 MB = 1e6 bytes).
pub const MEGABITS_PER_MB: f64 = 8.0;

/// Convert a byte count to megabits.
pub fn bytes_to_megabits(bytes: u64) -> f64 {
    bytes as f64 * 8.0 / 1e6
}

/// Time in seconds to move `bytes` at `rate_mbps` megabits per second.
pub fn data_seconds(bytes: u64, rate_mbps: f64) -> f64 {
    bytes_to_megabits(bytes) / rate_mbps
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("no link defined for cluster pair ({0}, {1}) and no default")]
    NoLink(String, String),
    #[error("stream count must be >= 1")]
    ZeroStreams,
}

/// Duties a node performs in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Acquisition,
    Storage,
    Compute,
}

impl NodeRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeRole::Acquisition => "acquisition",
            NodeRole::Storage => "storage",
            NodeRole::Compute => "compute",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "acquisition" => Some(NodeRole::Acquisition),
            "storage" => Some(NodeRole::Storage),
            "compute" => Some(NodeRole::Compute),
            _ => None,
        }
    }
}

/// A storage or compute host with its own storage medium.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub cluster: String,
    pub capacity_bytes: u64,
    pub role: NodeRole,
}

/// Link parameters: raw bandwidth, latency, and the constants of the
/// aggregate-throughput model.
///
/// `aggregate_throughput` follows A(p) = min(B, p*r_max) / (1 + gamma*max(0, p - p_knee))
/// with p_knee = ceil(B / r_max): linear gain until the link saturates, then a
/// contention penalty per excess stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkLink {
    /// Raw link bandwidth B, megabits/second.
    pub bandwidth_mbps: f64,
    /// Round-trip time, seconds.
    pub rtt: f64,
    /// Per-stream throughput cap r_max, megabits/second.
    pub per_stream_cap_mbps: f64,
    /// Contention penalty gamma per stream beyond the knee.
    pub contention_gamma: f64,
    /// Round trips spent on session setup.
    pub handshake_rounds: u32,
    /// Round trips spent on data-channel setup per file.
    pub per_file_rounds: u32,
    /// Per-file command round trips paid when pipelining is off (0 or 1).
    pub command_round: u32,
}

impl NetworkLink {
    /// The local-access link: effectively infinite bandwidth, zero latency,
    /// so a dest-side replica always wins in the scheduler.
    pub fn loopback() -> Self {
        NetworkLink {
            bandwidth_mbps: 1e6,
            rtt: 0.0,
            per_stream_cap_mbps: 1e6,
            contention_gamma: 0.0,
            handshake_rounds: 0,
            per_file_rounds: 0,
            command_round: 0,
        }
    }

    /// Stream count at which the link saturates.
    pub fn knee(&self) -> u32 {
        (self.bandwidth_mbps / self.per_stream_cap_mbps).ceil() as u32
    }

    /// Aggregate throughput A(p) in megabits/second for `p` parallel streams.
    pub fn aggregate_throughput(&self, p: u32) -> Result<f64, TopologyError> {
        if p == 0 {
            return Err(TopologyError::ZeroStreams);
        }
        let raw = self
            .bandwidth_mbps
            .min(p as f64 * self.per_stream_cap_mbps);
        let excess = p.saturating_sub(self.knee()) as f64;
        Ok(raw / (1.0 + self.contention_gamma * excess))
    }
}

/// Model constants applied where a link does not set its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    pub per_stream_cap_mbps: f64,
    pub contention_gamma: f64,
    pub handshake_rounds: u32,
    pub per_file_rounds: u32,
    pub command_round: u32,
}

impl Default for ModelConstants {
    fn default() -> Self {
        ModelConstants {
            per_stream_cap_mbps: 10.0,
            contention_gamma: 0.02,
            handshake_rounds: 3,
            per_file_rounds: 2,
            command_round: 1,
        }
    }
}

impl ModelConstants {
    /// Calibrated default for a wide-area inter-cluster link.
    pub fn default_inter_link(&self) -> NetworkLink {
        NetworkLink {
            bandwidth_mbps: 100.0,
            rtt: 0.05,
            per_stream_cap_mbps: self.per_stream_cap_mbps,
            contention_gamma: self.contention_gamma,
            handshake_rounds: self.handshake_rounds,
            per_file_rounds: self.per_file_rounds,
            command_round: self.command_round,
        }
    }

    /// Calibrated default for a LAN intra-cluster link.
    pub fn default_intra_link(&self) -> NetworkLink {
        NetworkLink {
            bandwidth_mbps: 1000.0,
            rtt: 0.0002,
            per_stream_cap_mbps: 200.0,
            contention_gamma: self.contention_gamma,
            handshake_rounds: self.handshake_rounds,
            per_file_rounds: self.per_file_rounds,
            command_round: self.command_round,
        }
    }
}

/// A named group of nodes sharing one intra-cluster link.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub name: String,
    pub nodes: Vec<Node>,
    pub intra_link: NetworkLink,
}

/// Identity of a resolved link, used to group concurrent sessions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkKey {
    Loopback(String),
    Intra(String),
    /// Cluster pair, stored in sorted order so resolution is symmetric.
    Inter(String, String),
}

impl std::fmt::Display for LinkKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinkKey::Loopback(n) => write!(f, "loop:{n}"),
            LinkKey::Intra(c) => write!(f, "intra:{c}"),
            LinkKey::Inter(a, b) => write!(f, "inter:{a}:{b}"),
        }
    }
}

/// A resolved link together with its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRef {
    pub key: LinkKey,
    pub link: NetworkLink,
}

/// The grid: clusters, inter-cluster links, and fallback constants.
/// Immutable after load; share read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTopology {
    pub clusters: Vec<Cluster>,
    inter_links: BTreeMap<(String, String), NetworkLink>,
    pub defaults: ModelConstants,
    /// Link assumed for cluster pairs without an explicit `[link]` section.
    pub default_inter: Option<NetworkLink>,
    node_cluster: BTreeMap<String, String>,
}

impl GridTopology {
    pub fn new(
        clusters: Vec<Cluster>,
        inter_links: BTreeMap<(String, String), NetworkLink>,
        defaults: ModelConstants,
        default_inter: Option<NetworkLink>,
    ) -> Self {
        let mut node_cluster = BTreeMap::new();
        for c in &clusters {
            for n in &c.nodes {
                node_cluster.insert(n.name.clone(), c.name.clone());
            }
        }
        GridTopology {
            clusters,
            inter_links,
            defaults,
            default_inter,
            node_cluster,
        }
    }

    /// Parse a topology (or full simulation config) from its text form.
    pub fn load(text: &str) -> Result<Self, crate::config::ConfigError> {
        crate::config::parse_config(text).map(|c| c.topology)
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        let cluster = self.node_cluster.get(name)?;
        self.clusters
            .iter()
            .find(|c| &c.name == cluster)?
            .nodes
            .iter()
            .find(|n| n.name == name)
    }

    pub fn cluster(&self, name: &str) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.name == name)
    }

    /// Cluster a node belongs to.
    pub fn cluster_of(&self, node: &str) -> Option<&str> {
        self.node_cluster.get(node).map(String::as_str)
    }

    /// All nodes in cluster order, then declaration order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.clusters.iter().flat_map(|c| c.nodes.iter())
    }

    pub fn inter_link(&self, a: &str, b: &str) -> Option<&NetworkLink> {
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.inter_links.get(&key)
    }

    pub fn inter_links(&self) -> &BTreeMap<(String, String), NetworkLink> {
        &self.inter_links
    }

    /// Resolve the link carrying traffic from `src` to `dst`:
    /// same node -> loopback, same cluster -> that cluster's intra link,
    /// otherwise the inter-cluster link (explicit or default).
    pub fn resolve_link_ref(&self, src: &str, dst: &str) -> Result<LinkRef, TopologyError> {
        let src_cluster = self
            .node_cluster
            .get(src)
            .ok_or_else(|| TopologyError::UnknownNode(src.to_string()))?;
        let dst_cluster = self
            .node_cluster
            .get(dst)
            .ok_or_else(|| TopologyError::UnknownNode(dst.to_string()))?;
        if src == dst {
            return Ok(LinkRef {
                key: LinkKey::Loopback(src.to_string()),
                link: NetworkLink::loopback(),
            });
        }
        if src_cluster == dst_cluster {
            let cluster = self.cluster(src_cluster).expect("indexed cluster exists");
            return Ok(LinkRef {
                key: LinkKey::Intra(src_cluster.clone()),
                link: cluster.intra_link,
            });
        }
        let (a, b) = if src_cluster <= dst_cluster {
            (src_cluster.clone(), dst_cluster.clone())
        } else {
            (dst_cluster.clone(), src_cluster.clone())
        };
        let link = self
            .inter_links
            .get(&(a.clone(), b.clone()))
            .copied()
            .or(self.default_inter)
            .ok_or_else(|| TopologyError::NoLink(a.clone(), b.clone()))?;
        Ok(LinkRef {
            key: LinkKey::Inter(a, b),
            link,
        })
    }

    /// Like `resolve_link_ref` but returns only the link parameters.
    pub fn resolve_link(&self, src: &str, dst: &str) -> Result<NetworkLink, TopologyError> {
        self.resolve_link_ref(src, dst).map(|r| r.link)
    }

    /// Serialize back to config text. Parsing the output yields an identical
    /// topology.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let d = &self.defaults;
        out.push_str("[defaults]\n");
        out.push_str(&format!("rmax_mbps={}\n", d.per_stream_cap_mbps));
        out.push_str(&format!("gamma={}\n", d.contention_gamma));
        out.push_str(&format!("h={}\n", d.handshake_rounds));
        out.push_str(&format!("hf={}\n", d.per_file_rounds));
        out.push_str(&format!("command_round={}\n", d.command_round));
        if let Some(link) = &self.default_inter {
            out.push_str(&format!("bandwidth_mbps={}\n", link.bandwidth_mbps));
            out.push_str(&format!("rtt_ms={}\n", link.rtt * 1000.0));
        }
        for c in &self.clusters {
            out.push_str(&format!("\n[cluster {}]\n", c.name));
            for n in &c.nodes {
                out.push_str(&format!(
                    "node {} capacity_gb={} role={}\n",
                    n.name,
                    n.capacity_bytes / 1_000_000_000,
                    n.role.as_str()
                ));
            }
            push_link_keys(&mut out, &c.intra_link);
        }
        for ((a, b), link) in &self.inter_links {
            out.push_str(&format!("\n[link {a} {b}]\n"));
            push_link_keys(&mut out, link);
        }
        out
    }
}

fn push_link_keys(out: &mut String, link: &NetworkLink) {
    out.push_str(&format!("bandwidth_mbps={}\n", link.bandwidth_mbps));
    out.push_str(&format!("rtt_ms={}\n", link.rtt * 1000.0));
    out.push_str(&format!("rmax_mbps={}\n", link.per_stream_cap_mbps));
    out.push_str(&format!("gamma={}\n", link.contention_gamma));
    out.push_str(&format!("h={}\n", link.handshake_rounds));
    out.push_str(&format!("hf={}\n", link.per_file_rounds));
    out.push_str(&format!("command_round={}\n", link.command_round));
}
