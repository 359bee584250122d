use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary stance of a perspective toward a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Support,
    Oppose,
}

impl Stance {
    /// +1 for support, -1 for oppose.
    pub fn sign(self) -> i8 {
        match self {
            Stance::Support => 1,
            Stance::Oppose => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Stance> {
        match sign {
            1 => Some(Stance::Support),
            -1 => Some(Stance::Oppose),
            _ => None,
        }
    }

    pub fn flip(self) -> Stance {
        match self {
            Stance::Support => Stance::Oppose,
            Stance::Oppose => Stance::Support,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Support => "support",
            Stance::Oppose => "oppose",
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "support" => Ok(Stance::Support),
            "oppose" => Ok(Stance::Oppose),
            other => Err(format!("unknown stance label `{other}`")),
        }
    }
}
