//! Scalar activation functions and their analytic derivatives.
//!
//! All four are evaluated in an overflow-safe form, so arguments up to
//! `|x| = 700` (and well beyond) never produce `inf` or `NaN`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Silu,
    Mish,
    ShiftedSoftplus,
    BentIdentity,
    /// Pass-through; used for linear test instances.
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Silu,
        Activation::Mish,
        Activation::ShiftedSoftplus,
        Activation::BentIdentity,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => x * sigmoid(x),
            Activation::Mish => x * softplus(x).tanh(),
            Activation::ShiftedSoftplus => softplus(x) - std::f64::consts::LN_2,
            Activation::BentIdentity => bent_identity(x),
            Activation::Identity => x,
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Silu => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            Activation::Mish => {
                let t = softplus(x).tanh();
                t + x * (1.0 - t * t) * sigmoid(x)
            }
            Activation::ShiftedSoftplus => sigmoid(x),
            Activation::BentIdentity => x / (2.0 * unit_hypot(x)) + 1.0,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Silu => "silu",
            Activation::Mish => "mish",
            Activation::ShiftedSoftplus => "shifted-softplus",
            Activation::BentIdentity => "bent-identity",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "silu" => Ok(Activation::Silu),
            "mish" => Ok(Activation::Mish),
            "shifted-softplus" | "ssp" => Ok(Activation::ShiftedSoftplus),
            "bent-identity" | "bent" => Ok(Activation::BentIdentity),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `sqrt(x^2 + 1)`, falling back to `hypot` once `x^2` would overflow.
fn unit_hypot(x: f64) -> f64 {
    if x.abs() < 1e150 {
        (x * x + 1.0).sqrt()
    } else {
        x.hypot(1.0)
    }
}

fn bent_identity(x: f64) -> f64 {
    // (sqrt(x^2+1) - 1) written as x^2 / (sqrt(x^2+1) + 1) avoids cancellation near 0.
    let h = unit_hypot(x);
    let lifted = if x.abs() < 1e150 { x * x / (h + 1.0) } else { h - 1.0 };
    lifted / 2.0 + x
}
