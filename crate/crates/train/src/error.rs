use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("the {0} split has no traces")]
    EmptySplit(&'static str),
    #[error("nothing to evaluate")]
    EmptyEvaluationSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("splits share case ids: {0}")]
    SplitLeak(String),
    #[error("run {run}: {source}")]
    RunFailed {
        run: usize,
        #[source]
        source: Box<TrainError>,
    },
    #[error(transparent)]
    Model(#[from] logmend_model::ModelError),
    #[error(transparent)]
    Encode(#[from] logmend_encode::EncodeError),
    #[error(transparent)]
    Log(#[from] logmend_log::LogError),
    #[error(transparent)]
    Tensor(#[from] logmend_tensor::TensorError),
}
