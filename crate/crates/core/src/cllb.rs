//! Buffered reference semantics (stub).
