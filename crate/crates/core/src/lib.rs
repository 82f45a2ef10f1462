//! Cross-layer probabilistic routing model for wireless ad hoc networks.
//!
//! A routing strategy is a table of transmission rates `tau_i(r)` per node and
//! resource. From it the crate derives SINR-based link probabilities, node
//! forwarding probabilities, and three objectives for a single
//! source/destination flow: robustness (maximize), delay and energy
//! (minimize). The [`pareto`] module recovers the non-dominated strategies,
//! exhaustively for small M-relay problems or by stochastic search.
//!
//! ```no_run
//! use pareto_route::prelude::*;
//!
//! let topology = generate_topology(0.004, 63.08, 60.0, 120.0, 1).unwrap();
//! let network = Network::new(topology, PhyParams::default()).unwrap();
//! let cfg = EvalConfig::new(&network.params);
//! let problem = MRelayProblem::new(
//!     &network.topology,
//!     1,
//!     RateAlphabet::default(),
//!     SourcePattern::first_slot(2),
//! );
//! let outcome = enumerate_m_relay(&problem, &network, &cfg, 1).unwrap();
//! println!("{} Pareto-optimal strategies", outcome.counts.pareto);
//! ```

// negated float comparisons are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod objectives;
pub mod pareto;
pub mod phy;
pub mod solution;
pub mod topology;

pub mod prelude {
    pub use crate::objectives::{EvalConfig, EvalError, EvalMode, Evaluator, ObjectiveVector};
    pub use crate::pareto::{
        dominates, enumerate_m_relay, stochastic_search, MRelayProblem, ParetoArchive,
    };
    pub use crate::phy::{EnumerationConfig, LinkProbabilityTable, Network, PhyParams};
    pub use crate::solution::{
        ForwardingProfile, RateAlphabet, Solution, SourcePattern, UsefulnessMode,
    };
    pub use crate::topology::{generate_topology, NetworkTopology, NodeId};
}

/// Serialize `f64` allowing infinities, which JSON numbers cannot carry:
/// `+inf` is written as the string `"inf"`.
pub(crate) mod serde_inf {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NumOrStr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(v),
            NumOrStr::Str(s) => s
                .parse::<f64>()
                .map_err(|_| D::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}
