//! Corpus generation, differential checks, golden traces.
