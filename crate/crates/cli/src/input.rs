//! Map and partition arguments.

use std::fs;
use std::path::Path;

use detdiff::partition::PartitionEquationSystem;
use detdiff::surd::parse_surd;
use detdiff::{
    solve_partition_system, validate_consistency, Error, LiftMap, MapSpec, MarkovPartition, PartitionSolution,
    Result,
};
use serde_json::{Map, Value};

/// A parsed `--map` together with its canonical JSON text (hashed into the
/// provenance header).
pub struct MapInput {
    pub spec: MapSpec,
    pub map: LiftMap,
    pub canonical: String,
}

impl MapInput {
    pub fn from_spec(spec: MapSpec) -> Result<Self> {
        let map = spec.build()?;
        let canonical = serde_json::to_string(&spec)?;
        Ok(MapInput { spec, map, canonical })
    }

    pub fn linear_slope(&self) -> Result<f64> {
        self.spec
            .linear_slope()
            .unwrap_or_else(|| Err(Error::Unsupported("this method needs a linear map".into())))
    }
}

/// `--map` accepts inline JSON, a path to a JSON file, or a shorthand such as
/// `linear lambda=2+sqrt(3)` or `zigzag p=2 xi=0.25`.
pub fn parse_map(words: &[String]) -> Result<MapInput> {
    let text = words.join(" ");
    let text = text.trim();
    let json = if text.starts_with('{') {
        text.to_string()
    } else if Path::new(text).is_file() {
        fs::read_to_string(text)?
    } else {
        shorthand(text)?.to_string()
    };
    MapInput::from_spec(serde_json::from_str(&json)?)
}

fn shorthand(text: &str) -> Result<Value> {
    let mut parts = text.split_whitespace();
    let kind = parts.next().ok_or_else(|| Error::InvalidMap("empty --map".into()))?;
    let mut obj = Map::new();
    obj.insert("type".into(), Value::String(kind.into()));
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidMap(format!("expected key=value in --map, got {kv:?}")))?;
        let value = if let Ok(i) = v.parse::<i64>() {
            Value::from(i)
        } else if let Ok(x) = v.parse::<f64>() {
            Value::from(x)
        } else {
            Value::String(v.into())
        };
        obj.insert(k.into(), value);
    }
    Ok(Value::Object(obj))
}

pub fn read_system(path: &Path) -> Result<(PartitionEquationSystem, String)> {
    let system = PartitionEquationSystem::from_json(&fs::read_to_string(path)?)?;
    let canonical = serde_json::to_string(&system)?;
    Ok((system, canonical))
}

pub fn solve_system(path: &Path) -> Result<(PartitionSolution, String)> {
    let (system, canonical) = read_system(path)?;
    Ok((solve_partition_system(&system)?, canonical))
}

/// `--partition`: comma-separated breakpoints (surds allowed), or a file
/// holding a JSON array of them.
pub fn parse_partition(text: &str) -> Result<MarkovPartition> {
    let items: Vec<String> = if Path::new(text).is_file() {
        let v: Vec<Value> = serde_json::from_str(&fs::read_to_string(text)?)?;
        v.into_iter()
            .map(|x| match x {
                Value::String(s) => s,
                other => other.to_string(),
            })
            .collect()
    } else {
        text.split(',').map(str::to_string).collect()
    };
    let b = items.iter().map(|s| parse_surd(s.trim())).collect::<Result<Vec<_>>>()?;
    MarkovPartition::new(b)
}

/// Breakpoints, `--partition-system`, or the first consistent candidate
/// among the unit cell, the halved cell and the map's own breakpoints.
pub fn resolve_partition(
    map: &LiftMap,
    partition: Option<&str>,
    system: Option<&PartitionSolution>,
) -> Result<MarkovPartition> {
    if let Some(p) = partition {
        return parse_partition(p);
    }
    if let Some(s) = system {
        return Ok(s.partition.clone());
    }
    let mut candidates = vec![MarkovPartition::unit(), MarkovPartition::new(vec![-0.5, 0.0, 0.5])?];
    if let Ok(p) = MarkovPartition::new(map.breakpoints().to_vec()) {
        candidates.push(p);
    }
    candidates
        .into_iter()
        .find(|p| validate_consistency(map, p).consistent)
        .ok_or_else(|| {
            Error::InvalidPartition(
                "no default partition is Markov for this map; pass --partition or --partition-system".into(),
            )
        })
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_surd(s.trim())).collect()
}
