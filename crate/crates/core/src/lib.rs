pub mod analysis;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod provider;
pub mod retrieval;
pub mod text;
