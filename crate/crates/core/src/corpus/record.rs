use std::fmt;

use serde::{Deserialize, Serialize};

/// Which sentence of a paired input a token came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Segment {
    A,
    B,
}

impl Segment {
    pub const BOTH: [Segment; 2] = [Segment::A, Segment::B];

    pub fn tag(self) -> u8 {
        match self {
            Segment::A => 0,
            Segment::B => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Segment::A),
            1 => Some(Segment::B),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Segment::A => Segment::B,
            Segment::B => Segment::A,
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segment::A => "A",
            Segment::B => "B",
        })
    }
}

/// One contextualized token embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenRecord {
    /// Vocabulary index of the token's type.
    pub type_id: u32,
    pub segment: Segment,
    /// Identifier of the (two-sentence) model input the token belongs to.
    pub input_id: u64,
    /// Token index within the input.
    pub position: u16,
    pub vector: Vec<f32>,
}

impl TokenRecord {
    pub fn new(type_id: u32, segment: Segment, input_id: u64, position: u16, vector: Vec<f32>) -> Self {
        Self {
            type_id,
            segment,
            input_id,
            position,
            vector,
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// Index of the first non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.vector.iter().position(|v| !v.is_finite())
    }
}
