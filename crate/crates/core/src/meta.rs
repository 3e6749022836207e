use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// How hard the participant was asked to press.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ForceLevel {
    High,
    Low,
    None,
}

impl ForceLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForceLevel::High => "high",
            ForceLevel::Low => "low",
            ForceLevel::None => "none",
        }
    }
}

impl fmt::Display for ForceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForceLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "high" => Ok(ForceLevel::High),
            "low" => Ok(ForceLevel::Low),
            "none" => Ok(ForceLevel::None),
            other => Err(Error::InvalidArgument(format!("unknown force level {other:?}"))),
        }
    }
}

/// Per-frame recording metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMeta {
    pub action: String,
    pub force_level: ForceLevel,
    pub participant: String,
    pub camera: String,
    pub lighting: String,
    /// Seconds since the start of the recording.
    pub timestamp: f64,
}

impl FrameMeta {
    /// Value of a groupable metadata field by name.
    pub fn field(&self, key: &str) -> Option<&str> {
        match key {
            "action" => Some(&self.action),
            "force_level" => Some(self.force_level.as_str()),
            "participant" => Some(&self.participant),
            "camera" => Some(&self.camera),
            "lighting" => Some(&self.lighting),
            _ => None,
        }
    }
}

impl Default for FrameMeta {
    fn default() -> Self {
        Self {
            action: "unknown".into(),
            force_level: ForceLevel::None,
            participant: "p0".into(),
            camera: "cam0".into(),
            lighting: "0".into(),
            timestamp: 0.0,
        }
    }
}
