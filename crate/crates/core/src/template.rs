//! Parametric point sequences `k ↦ x_k`, used for approach sequences and
//! witness families.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Point, SystemPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointTemplate {
    Fixed { point: SystemPoint },
    /// `Int(⌊num·k/den⌋ + offset)` in the given copy.
    Linear { copy: u8, num: i64, den: i64, offset: i64 },
}

impl PointTemplate {
    pub fn fixed(point: SystemPoint) -> Self {
        PointTemplate::Fixed { point }
    }

    /// `Int(slope·k + offset)`
    pub fn line(copy: u8, slope: i64, offset: i64) -> Self {
        PointTemplate::Linear {
            copy,
            num: slope,
            den: 1,
            offset,
        }
    }

    pub fn at(&self, k: i64) -> Result<SystemPoint> {
        match *self {
            PointTemplate::Fixed { point } => Ok(point),
            PointTemplate::Linear { copy, num, den, offset } => {
                if den <= 0 {
                    return Err(Error::InvalidArgument("template denominator must be positive".into()));
                }
                let s = (num as i128 * k as i128).div_euclid(den as i128) + offset as i128;
                let s = i64::try_from(s).map_err(|_| Error::Overflow("template coordinate"))?;
                Ok(SystemPoint::int(copy, s))
            }
        }
    }
}

impl fmt::Display for PointTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointTemplate::Fixed { point } => write!(f, "{point}"),
            PointTemplate::Linear { copy, num, den, offset } => {
                if *den == 1 {
                    write!(f, "({num}k{offset:+})@{copy}")
                } else {
                    write!(f, "(floor({num}k/{den}){offset:+})@{copy}")
                }
            }
        }
    }
}

/// A pair sequence `k ↦ (x_k, x'_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTemplate {
    pub first: PointTemplate,
    pub second: PointTemplate,
}

impl PairTemplate {
    pub fn new(first: PointTemplate, second: PointTemplate) -> Self {
        PairTemplate { first, second }
    }

    pub fn at(&self, k: i64) -> Result<Point> {
        Ok(Point::Pair(self.first.at(k)?, self.second.at(k)?))
    }
}

impl fmt::Display for PairTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}
