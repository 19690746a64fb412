//! The session abstract machine (stub).
