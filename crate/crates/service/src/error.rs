use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use quantgym::env::EnvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown episode `{0}`")]
    UnknownEpisode(String),
    #[error("episode `{0}` expired after inactivity")]
    Expired(String),
    #[error("episode `{0}` has no decision yet")]
    NotFinished(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::UnknownEpisode(_) => StatusCode::NOT_FOUND,
            ApiError::Expired(_) => StatusCode::GONE,
            ApiError::NotFinished(_) => StatusCode::CONFLICT,
            ApiError::Env(e) => match e {
                EnvError::UnknownSymbol(_) | EnvError::NotATradingDay { .. } => StatusCode::NOT_FOUND,
                EnvError::InvalidToolBudget | EnvError::MalformedArguments { .. } => StatusCode::BAD_REQUEST,
                EnvError::EpisodeTerminated => StatusCode::CONFLICT,
                EnvError::ToolBudgetExhausted { .. } => StatusCode::TOO_MANY_REQUESTS,
            },
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "bad_request",
            ApiError::UnknownEpisode(_) => "unknown_episode",
            ApiError::Expired(_) => "expired",
            ApiError::NotFinished(_) => "not_finished",
            ApiError::Env(e) => match e {
                EnvError::UnknownSymbol(_) => "unknown_symbol",
                EnvError::NotATradingDay { .. } => "not_a_trading_day",
                EnvError::InvalidToolBudget => "invalid_tool_budget",
                EnvError::EpisodeTerminated => "episode_terminated",
                EnvError::ToolBudgetExhausted { .. } => "tool_budget_exhausted",
                EnvError::MalformedArguments { .. } => "malformed_arguments",
            },
            ApiError::Internal(_) => "internal",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({"error": self.kind(), "message": self.to_string()});
        (self.status(), Json(body)).into_response()
    }
}
