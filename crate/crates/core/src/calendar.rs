//! Calendar months as plain integers.
//!
//! A [`Month`] is the number of months since year 0 (`year * 12 + month - 1`),
//! so month arithmetic is integer arithmetic and a fractional month index maps
//! to a decimal year by dividing by 12 (January 2006 is `2006.0`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Month(pub i32);

impl Month {
    /// `month` is 1-based.
    pub fn new(year: i32, month: u32) -> Self {
        debug_assert!((1..=12).contains(&month));
        Month(year * 12 + month as i32 - 1)
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// 1-based month of year.
    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn index(self) -> i32 {
        self.0
    }

    /// Number of months from `earlier` to `self` (negative if `self` is earlier).
    pub fn since(self, earlier: Month) -> i32 {
        self.0 - earlier.0
    }

    pub fn offset(self, months: i32) -> Month {
        Month(self.0 + months)
    }

    /// Last month of a calendar year.
    pub fn december(year: i32) -> Month {
        Month::new(year, 12)
    }

    /// Decimal year of the start of this month.
    pub fn as_year(self) -> f64 {
        f64::from(self.0) / 12.0
    }

    /// Decimal year of the middle of this month.
    pub fn midpoint_year(self) -> f64 {
        (f64::from(self.0) + 0.5) / 12.0
    }
}

/// Converts a fractional month index into a decimal year.
pub fn month_index_to_year(index: f64) -> f64 {
    index / 12.0
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid month `{0}` (expected YYYY-MM)")]
pub struct ParseMonthError(pub String);

impl FromStr for Month {
    type Err = ParseMonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMonthError(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(err)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(err());
        }
        let year: i32 = y.parse().map_err(|_| err())?;
        let month: u32 = m.parse().map_err(|_| err())?;
        if !(1..=12).contains(&month) {
            return Err(err());
        }
        Ok(Month::new(year, month))
    }
}
