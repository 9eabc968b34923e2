//! LAAFD: LLM agents for accelerated FPGA design.
//!
//! This crate implements an agentic workflow that translates plain
//! sequential C++ kernels into latency-optimized Vitis HLS kernels through
//! an iterative translate → validate → judge → optimize loop. A built-in
//! pragma-aware analyzer estimates kernel latency and resource usage so the
//! whole loop runs at desk scale without a licensed HLS toolchain; the same
//! orchestration drives a real external toolchain when one is configured.
//!
//! Module map:
//! - [`suite`] — benchmark kernel definitions and the ideal-latency oracle
//! - [`analyzer`] — C-like pragma-aware parser plus latency/resource estimator
//! - [`report`] — normalized synthesis reports, ratios, and summarization
//! - [`toolchain`] — compile / functional-test / synthesize backends
//! - [`gateway`] — provider-agnostic chat sessions with cost accounting
//! - [`agents`] — translator, fixers, judge, and optimizer agents
//! - [`workflow`] — the run state machine and campaign driver
//! - [`metrics`] — run persistence, geomean, and code-quality counters
//! - [`scenario`] — scripted provider+backend fixtures for deterministic runs

pub mod agents;
pub mod analyzer;
pub mod gateway;
pub mod metrics;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod toolchain;
pub mod workflow;

pub use agents::{AgentError, AgentRole, CandidateKernel, OptimizationTechnique, Verdict};
pub use analyzer::{FunctionIr, LoopNestIr, Region, ReportEstimate, ResourceVector};
pub use gateway::{ChatSession, CostLedger, Gateway, GatewayError, ProviderConfig};
pub use report::{HlsReport, ReportSummary, ToolKind};
pub use suite::{InterfaceSignature, KernelSpec, ParamRole, SuiteManifest};
pub use toolchain::{BackendConfig, BackendKind, CompileResult, TestResult, ToolBackend};
pub use workflow::{RunOutcome, RunResult, WorkflowConfig, WorkflowError};
