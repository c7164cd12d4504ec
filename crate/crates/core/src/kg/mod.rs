//! Knowledge-graph store (in progress).
