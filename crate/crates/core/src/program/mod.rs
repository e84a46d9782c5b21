//! Function programs over an encoded scene.

mod exec;
mod function;
mod parse;

pub use exec::{ExecutionTrace, Executor, ExecutorConfig, NoAnswerReason, ObjectValue, Outcome, StepValue};
pub use function::{Function, FunctionKind};
pub use parse::{parse_program, Arg, Program, ProgramStep, StepRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("empty program")]
    Empty,
    #[error("syntax error in step {step}: {message}")]
    Syntax { step: usize, message: String },
    #[error("step {step} references step {target}, which does not precede it")]
    ForwardReference { step: usize, target: usize },
    #[error("invalid program json: {0}")]
    Json(String),
}
