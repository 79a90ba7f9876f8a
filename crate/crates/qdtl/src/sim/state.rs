//! Simulation states, flow segments, and hybrid traces.
//!
//! The constant infinite domains are simulated by a finite active pool per
//! object sort, large enough that fresh objects can always be activated.
//! Flexible function symbols are interpreted by finite tables over object
//! argument tuples; entries default to 0 (respectively object 0).

use crate::syntax::{Signature, REAL};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Value {
    R(f64),
    Obj(usize),
}

impl Value {
    pub fn as_f64(&self) -> f64 {
        match self {
            Value::R(x) => *x,
            Value::Obj(_) => panic!("expected real value"),
        }
    }

    pub fn as_obj(&self) -> usize {
        match self {
            Value::Obj(o) => *o,
            Value::R(_) => panic!("expected object value"),
        }
    }
}

/// Interpretation location: function symbol plus object-id argument tuple.
pub type Loc = (String, Vec<usize>);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimState {
    /// Sort → active pool size; objects are the ids `0..size`.
    pub pools: BTreeMap<String, usize>,
    /// Interpretation tables, rigid and flexible alike. Missing entries
    /// default by result sort.
    #[serde(serialize_with = "serialize_funcs")]
    pub funcs: BTreeMap<Loc, Value>,
    /// Logical variable assignment.
    pub vars: BTreeMap<String, Value>,
}

impl SimState {
    pub fn new(sig: &Signature, pool_size: usize) -> SimState {
        let pools = sig.object_sorts().map(|s| (s.to_string(), pool_size)).collect();
        SimState { pools, funcs: BTreeMap::new(), vars: BTreeMap::new() }
    }

    pub fn pool(&self, sort: &str) -> usize {
        *self.pools.get(sort).unwrap_or(&0)
    }

    pub fn get(&self, sig: &Signature, name: &str, args: &[usize]) -> Value {
        if let Some(v) = self.funcs.get(&(name.to_string(), args.to_vec())) {
            return *v;
        }
        let result_real = sig
            .funcs
            .get(name)
            .map(|d| d.result == REAL)
            .unwrap_or(true); // E and unseen symbols default to real 0
        if result_real {
            Value::R(0.0)
        } else {
            Value::Obj(0)
        }
    }

    pub fn set(&mut self, name: &str, args: Vec<usize>, v: Value) {
        self.funcs.insert((name.to_string(), args), v);
    }
}

/// JSON object keys must be strings; render locations as `f(1,2)`.
fn serialize_funcs<S: serde::Serializer>(
    funcs: &BTreeMap<Loc, Value>,
    ser: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = ser.serialize_map(Some(funcs.len()))?;
    for ((name, args), v) in funcs {
        let key = if args.is_empty() {
            name.clone()
        } else {
            let ids: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            format!("{}({})", name, ids.join(","))
        };
        map.serialize_entry(&key, v)?;
    }
    map.end()
}

/// One flow segment: a duration plus sampled states along the grid. Point
/// flows have duration 0 and a single sample.
#[derive(Clone, Debug, Serialize)]
pub struct FlowSegment {
    pub duration: f64,
    /// (time offset, state) pairs; first entry is always at offset 0.
    pub samples: Vec<(f64, SimState)>,
}

impl FlowSegment {
    pub fn point(state: SimState) -> FlowSegment {
        FlowSegment { duration: 0.0, samples: vec![(0.0, state)] }
    }

    pub fn first(&self) -> &SimState {
        &self.samples[0].1
    }

    pub fn last(&self) -> &SimState {
        &self.samples.last().unwrap().1
    }
}

/// Nonempty sequence of flow segments; `aborted` marks a trailing Λ.
#[derive(Clone, Debug, Serialize)]
pub struct HybridTrace {
    pub segments: Vec<FlowSegment>,
    pub aborted: bool,
}

impl HybridTrace {
    pub fn point(state: SimState) -> HybridTrace {
        HybridTrace { segments: vec![FlowSegment::point(state)], aborted: false }
    }

    pub fn first_state(&self) -> &SimState {
        self.segments[0].first()
    }

    /// Last proper state; for aborted traces this is the state before Λ.
    pub fn last_state(&self) -> &SimState {
        self.segments.last().unwrap().last()
    }

    /// Terminating = ends in a proper state rather than Λ.
    pub fn terminates(&self) -> bool {
        !self.aborted
    }

    /// Sequential composition; only legal when `self` terminates.
    pub fn compose(&self, rest: &HybridTrace) -> HybridTrace {
        assert!(self.terminates(), "cannot extend an aborted trace");
        let mut segments = self.segments.clone();
        segments.extend(rest.segments.iter().cloned());
        HybridTrace { segments, aborted: rest.aborted }
    }

    /// All sampled proper states in temporal order.
    pub fn states(&self) -> impl Iterator<Item = &SimState> {
        self.segments.iter().flat_map(|s| s.samples.iter().map(|(_, st)| st))
    }
}
