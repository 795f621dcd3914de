//! Library side of the `paramtune` command: configuration, subcommands and
//! report files. The binary only parses arguments and maps errors to exit
//! codes.

pub mod commands;
pub mod config;
pub mod lock;

pub use commands::{
    build_pipeline, cmd_evaluate, cmd_generate, cmd_gridsearch, cmd_train, run_evaluate, run_gridsearch,
    run_train, BestAction, EvaluateRequest, OracleReport, TrainOutcome,
};
pub use config::{DatasetSource, RunConfig};

/// Process exit status for a failed command.
pub fn exit_code(err: &paramtune::Error) -> i32 {
    if err.is_config() {
        2
    } else {
        1
    }
}
