//! JSON documents on disk.
//!
//! Every document carries `schema_version`. Floats go through the shortest
//! round-trip decimal form and parse back bit-exact. Writes land in a
//! sibling temporary file that is renamed over the target.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use netforge_core::action_space::ActionSpaceSpec;
use netforge_core::{Instance, Network, NodeRecord, Params, Topology, HOURS};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().ok_or_else(|| Error::Usage(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

#[derive(Deserialize)]
struct Version {
    schema_version: u32,
}

/// Parses `text` as a versioned document; `path` only labels errors.
pub fn from_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let v: Version = serde_json::from_str(text).map_err(|e| parse_err(path, e))?;
    if v.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            found: v.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_str(text).map_err(|e| parse_err(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(path, &read(path)?)
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u32,
    nodes: Vec<NodeRecord>,
    x0: Vec<[usize; 2]>,
    params: Params,
    benchmark: Vec<f64>,
    #[serde(default)]
    action_spec: Option<ActionSpaceSpec>,
}

/// An instance with the action space it was generated for.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceDoc {
    pub instance: Instance,
    pub spec: Option<ActionSpaceSpec>,
}

pub fn instance_to_json(instance: &Instance, spec: Option<&ActionSpaceSpec>) -> Result<String> {
    to_json(&InstanceFile {
        schema_version: SCHEMA_VERSION,
        nodes: instance.nodes().to_vec(),
        x0: instance.x0().edges().map(|(i, j)| [i, j]).collect(),
        params: instance.params().clone(),
        benchmark: instance.benchmark().to_vec(),
        action_spec: spec.cloned(),
    })
}

/// Rebuilds the instance and checks the stored benchmark bit for bit.
pub fn instance_from_json(path: &Path, text: &str) -> Result<InstanceDoc> {
    let f: InstanceFile = from_json(path, text)?;
    let content = |msg: String| Error::Content {
        path: path.to_path_buf(),
        msg,
    };
    let n = f.nodes.len();
    let net = Network::new(f.nodes, f.params).map_err(|e| content(e.to_string()))?;
    let edges: Vec<(usize, usize)> = f.x0.iter().map(|e| (e[0], e[1])).collect();
    let x0 = Topology::from_edges(n, &edges).map_err(|e| content(format!("x0: {e}")))?;
    let instance = Instance::new(net, x0).map_err(|e| content(format!("x0: {e}")))?;
    if f.benchmark.len() != HOURS {
        return Err(content(format!("benchmark has {} hours, expected {HOURS}", f.benchmark.len())));
    }
    for (t, (a, b)) in f.benchmark.iter().zip(instance.benchmark()).enumerate() {
        if a.to_bits() != b.to_bits() {
            return Err(content(format!("stored benchmark at hour {t} is {a}, recomputed {b}")));
        }
    }
    if let Some(spec) = &f.action_spec {
        spec.validate_for(&instance).map_err(|e| content(format!("action_spec: {e}")))?;
    }
    Ok(InstanceDoc {
        instance,
        spec: f.action_spec,
    })
}

pub fn save_instance(path: &Path, instance: &Instance, spec: Option<&ActionSpaceSpec>) -> Result<()> {
    write_atomic(path, instance_to_json(instance, spec)?.as_bytes())
}

pub fn load_instance(path: &Path) -> Result<InstanceDoc> {
    instance_from_json(path, &read(path)?)
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    schema_version: u32,
    n: usize,
    edges: Vec<[usize; 2]>,
}

pub fn topology_to_json(t: &Topology) -> Result<String> {
    to_json(&TopologyFile {
        schema_version: SCHEMA_VERSION,
        n: t.n(),
        edges: t.edges().map(|(i, j)| [i, j]).collect(),
    })
}

pub fn save_topology(path: &Path, t: &Topology) -> Result<()> {
    write_atomic(path, topology_to_json(t)?.as_bytes())
}

pub fn load_topology(path: &Path) -> Result<Topology> {
    let f: TopologyFile = from_json(path, &read(path)?)?;
    let edges: Vec<(usize, usize)> = f.edges.iter().map(|e| (e[0], e[1])).collect();
    Topology::from_edges(f.n, &edges).map_err(|e| Error::Content {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}
