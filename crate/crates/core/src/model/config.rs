use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("unknown {} {other:?}", stringify!($name))),
                }
            }
        }
    };
}

named_enum!(
    /// Nonlinearity applied after every hidden layer; the output layer is
    /// always linear.
    Activation { Relu => "relu", Tanh => "tanh", Linear => "linear" }
);

named_enum!(LossKind { Mse => "mse", Mae => "mae" });

named_enum!(
    /// Parameter update rule: plain gradient step or Adam.
    OptimizerKind { Sgd => "sgd", Adam => "adam" }
);

/// Architecture and training settings for the feedforward network.
///
/// `layer_sizes` lists unit counts from input to output, so the default
/// `[50, 64, 64, 50]` has three weight matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub loss: LossKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            layer_sizes: vec![50, 64, 64, 50],
            activation: Activation::Relu,
            loss: LossKind::Mse,
            epochs: 2000,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 42,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.layer_sizes.len() < 2 {
            return bad(format!("need at least 2 layer sizes, got {:?}", self.layer_sizes));
        }
        if self.layer_sizes.contains(&0) {
            return bad(format!("layer sizes must be positive: {:?}", self.layer_sizes));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    /// Same hidden layers, with input/output widths replaced.
    pub fn with_widths(mut self, input: usize, output: usize) -> Self {
        let n = self.layer_sizes.len();
        self.layer_sizes[0] = input;
        self.layer_sizes[n - 1] = output;
        self
    }
}
