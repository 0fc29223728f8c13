use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Gender, UserId, UserRecord};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentAxis {
    Gender,
    Age,
}

/// A demographic slice of users. Each value belongs to exactly one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Male,
    Female,
    #[serde(rename = "age_20_39")]
    Age20To39,
    #[serde(rename = "age_40_60")]
    Age40To60,
}

impl Segment {
    pub const ALL: [Segment; 4] = [
        Segment::Male,
        Segment::Female,
        Segment::Age20To39,
        Segment::Age40To60,
    ];

    pub fn axis(self) -> SegmentAxis {
        match self {
            Segment::Male | Segment::Female => SegmentAxis::Gender,
            Segment::Age20To39 | Segment::Age40To60 => SegmentAxis::Age,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Segment::Male => "male",
            Segment::Female => "female",
            Segment::Age20To39 => "age_20_39",
            Segment::Age40To60 => "age_40_60",
        }
    }

    /// Column heading used in the summary tables.
    pub fn label(self) -> &'static str {
        match self {
            Segment::Male => "Men",
            Segment::Female => "Women",
            Segment::Age20To39 => "20-39 years",
            Segment::Age40To60 => "40-60 years",
        }
    }

    pub fn contains(self, user: &UserRecord, banding: AgeBanding) -> bool {
        match self {
            Segment::Male => user.gender == Gender::Male,
            Segment::Female => user.gender == Gender::Female,
            Segment::Age20To39 => match banding {
                AgeBanding::Clamp => user.age < 40,
                AgeBanding::Strict => (20..=39).contains(&user.age),
            },
            Segment::Age40To60 => match banding {
                AgeBanding::Clamp => user.age >= 40,
                AgeBanding::Strict => (40..=60).contains(&user.age),
            },
        }
    }

    /// The segment of `axis` a user falls in, if any.
    pub fn of(user: &UserRecord, axis: SegmentAxis, banding: AgeBanding) -> Option<Segment> {
        Segment::ALL
            .into_iter()
            .filter(|s| s.axis() == axis)
            .find(|s| s.contains(user, banding))
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Segment::ALL
            .into_iter()
            .find(|seg| seg.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown segment {s:?} (expected male, female, age_20_39 or age_40_60)"
                ))
            })
    }
}

/// How ages outside the two bands are handled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgeBanding {
    /// Under 40 goes to 20-39, 40 and over to 40-60; every user lands in a band.
    #[default]
    Clamp,
    /// Users outside 20..=60 belong to neither band.
    Strict,
}

pub fn segment_users(
    users: &[UserRecord],
    segment: Segment,
    banding: AgeBanding,
) -> BTreeSet<UserId> {
    users
        .iter()
        .filter(|u| segment.contains(u, banding))
        .map(|u| u.user_id)
        .collect()
}
