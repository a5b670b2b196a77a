//! Session service and CLI plumbing around `promoai-core`.

pub mod api;
pub mod config;
pub mod export;
pub mod session;
pub mod store;
