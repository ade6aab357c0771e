use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] sdde::Error),
    /// The computation left the physical regime; partial output was written.
    #[error("physicality stop: {0}")]
    Stop(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(sdde::Error::Argument(_) | sdde::Error::Precondition(_)) => 2,
            CliError::Model(sdde::Error::Physicality { .. }) | CliError::Stop(_) => 4,
            CliError::Model(_) | CliError::Check(_) | CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            4 => "physicality",
            _ => "numerical",
        }
    }

    pub fn record(&self, command: &str) -> serde_json::Value {
        json!({
            "status": "error",
            "command": command,
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Model(sdde::Error::Newton {
                iters: 3,
                residual: 1.0
            })
            .exit_code(),
            3
        );
        assert_eq!(CliError::Model(sdde::Error::numerical("x")).exit_code(), 3);
        assert_eq!(
            CliError::Model(sdde::Error::Physicality { min_u: -1.1 }).exit_code(),
            4
        );
        assert_eq!(CliError::Stop("x".into()).exit_code(), 4);
        let r = CliError::Check("x".into()).record("cmf");
        assert_eq!(r["kind"], "numerical");
        assert_eq!(r["command"], "cmf");
    }
}
