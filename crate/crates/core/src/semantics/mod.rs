//! Executable semantics: POWL trace languages, the Petri net token game, and
//! workflow-net soundness.

mod net;
mod soundness;
mod traces;

pub use net::{
    enabled, fire, is_enabled, Arc, Marking, NetBuilder, NetError, NotEnabled, PetriNet, PlaceId,
    Transition, TransitionId,
};
pub use soundness::{check_soundness, SoundnessReport};
pub use traces::{
    pn_traces, powl_traces, Trace, TraceError, TraceSet, DEFAULT_STATE_BUDGET,
    DEFAULT_TRACE_CAP, MAX_TRACE_LEN,
};
