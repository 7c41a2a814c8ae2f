//! The fixed, alphabetical list of the 50 U.S. states.
//!
//! Every 50-wide vector in the crate (sentiment inputs, migration targets,
//! scaler statistics) is indexed by position in [`CANONICAL_STATES`].

pub const STATE_COUNT: usize = 50;

pub const CANONICAL_STATES: [&str; STATE_COUNT] = [
    "Alabama",
    "Alaska",
    "Arizona",
    "Arkansas",
    "California",
    "Colorado",
    "Connecticut",
    "Delaware",
    "Florida",
    "Georgia",
    "Hawaii",
    "Idaho",
    "Illinois",
    "Indiana",
    "Iowa",
    "Kansas",
    "Kentucky",
    "Louisiana",
    "Maine",
    "Maryland",
    "Massachusetts",
    "Michigan",
    "Minnesota",
    "Mississippi",
    "Missouri",
    "Montana",
    "Nebraska",
    "Nevada",
    "New Hampshire",
    "New Jersey",
    "New Mexico",
    "New York",
    "North Carolina",
    "North Dakota",
    "Ohio",
    "Oklahoma",
    "Oregon",
    "Pennsylvania",
    "Rhode Island",
    "South Carolina",
    "South Dakota",
    "Tennessee",
    "Texas",
    "Utah",
    "Vermont",
    "Virginia",
    "Washington",
    "West Virginia",
    "Wisconsin",
    "Wyoming",
];

/// Position of a canonical state name (exact match).
pub fn state_index(name: &str) -> Option<usize> {
    CANONICAL_STATES.binary_search(&name).ok()
}
