pub mod llm;
pub mod store;
pub mod metrics;
pub mod prompts;
pub mod expert;
pub mod panel;
pub mod judge;
pub mod orchestrator;
pub mod offline;
