//! HTTP service and batch commands around the `ner-core` pipeline.

pub mod api;
pub mod cli;
pub mod config;
pub mod links;

pub use api::{handle_ner_request, router, ApiEntity, ApiError, ApiResponse, AppState, NerRequest};
pub use config::ServiceConfig;
pub use links::{class_color, wikipedia_link};
