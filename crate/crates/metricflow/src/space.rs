//! States and the metric.
//!
//! Every state carries the identity of the space it lives in. The metric is
//! only defined between states of the same space; crossing spaces is a hard
//! error, not a silent zero. Three payload kinds cover the flows shipped
//! here: scalars under `|a - b|`, vectors under the Euclidean norm, and
//! periodic grids under the sup norm.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Identity of a metric space. Cheap to clone, compared by name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceId(Arc<str>);

impl SpaceId {
    pub fn new(name: &str) -> Self {
        SpaceId(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SpaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// The actual data of a state.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Scalar(f64),
    Vector(DVector<f64>),
    /// Samples of a periodic function on a uniform grid; `spacing` is the
    /// node distance.
    Grid { values: Vec<f64>, spacing: f64 },
}

/// A point of a named metric space.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    space: SpaceId,
    payload: Payload,
}

impl State {
    pub fn scalar(space: SpaceId, value: f64) -> Self {
        State {
            space,
            payload: Payload::Scalar(value),
        }
    }

    pub fn vector(space: SpaceId, value: DVector<f64>) -> Self {
        State {
            space,
            payload: Payload::Vector(value),
        }
    }

    pub fn grid(space: SpaceId, values: Vec<f64>, spacing: f64) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 3 nodes, got {}",
                values.len()
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "grid spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(State {
            space,
            payload: Payload::Grid { values, spacing },
        })
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn as_scalar(&self) -> Result<f64> {
        match &self.payload {
            Payload::Scalar(v) => Ok(*v),
            other => Err(Error::SpaceMismatch(format!(
                "expected scalar payload, got {}",
                payload_kind(other)
            ))),
        }
    }

    pub fn as_vector(&self) -> Result<&DVector<f64>> {
        match &self.payload {
            Payload::Vector(v) => Ok(v),
            other => Err(Error::SpaceMismatch(format!(
                "expected vector payload, got {}",
                payload_kind(other)
            ))),
        }
    }

    pub fn as_grid(&self) -> Result<(&[f64], f64)> {
        match &self.payload {
            Payload::Grid { values, spacing } => Ok((values, *spacing)),
            other => Err(Error::SpaceMismatch(format!(
                "expected grid payload, got {}",
                payload_kind(other)
            ))),
        }
    }
}

fn payload_kind(p: &Payload) -> &'static str {
    match p {
        Payload::Scalar(_) => "scalar",
        Payload::Vector(_) => "vector",
        Payload::Grid { .. } => "grid",
    }
}

/// Metric of the common space of `a` and `b`.
///
/// Scalars use `|a - b|`, vectors the Euclidean norm, grids the sup norm
/// over nodes. States from different spaces, payloads of different kinds,
/// and shape mismatches are all errors.
pub fn distance(a: &State, b: &State) -> Result<f64> {
    if a.space != b.space {
        return Err(Error::SpaceMismatch(format!(
            "distance between '{}' and '{}'",
            a.space, b.space
        )));
    }
    let d = match (&a.payload, &b.payload) {
        (Payload::Scalar(x), Payload::Scalar(y)) => (x - y).abs(),
        (Payload::Vector(x), Payload::Vector(y)) => {
            if x.len() != y.len() {
                return Err(Error::SpaceMismatch(format!(
                    "vector dimensions {} vs {}",
                    x.len(),
                    y.len()
                )));
            }
            (x - y).norm()
        }
        (
            Payload::Grid {
                values: x,
                spacing: hx,
            },
            Payload::Grid {
                values: y,
                spacing: hy,
            },
        ) => {
            if x.len() != y.len() {
                return Err(Error::SpaceMismatch(format!(
                    "grid sizes {} vs {}",
                    x.len(),
                    y.len()
                )));
            }
            if (hx - hy).abs() > hx.abs() * 1e-12 {
                return Err(Error::SpaceMismatch(format!(
                    "grid spacings {hx} vs {hy}"
                )));
            }
            x.iter()
                .zip(y)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max)
        }
        (pa, pb) => {
            return Err(Error::SpaceMismatch(format!(
                "payload kinds {} vs {}",
                payload_kind(pa),
                payload_kind(pb)
            )))
        }
    };
    if d.is_nan() {
        return Err(Error::Numerical("NaN in distance".into()));
    }
    Ok(d)
}
