//! Ordered channel bases for scalar `(ℓ, m)` and vector `(j, ℓ, m)` waves.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Whether channels carry a scalar or a vector wave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Scalar,
    Vector,
}

/// A single channel. For scalar bases `j == l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub j: i32,
    pub l: i32,
    pub m: i32,
}

impl Channel {
    pub fn label(&self, kind: BasisKind) -> String {
        match kind {
            BasisKind::Scalar => format!("l={} m={}", self.l, self.m),
            BasisKind::Vector => format!("j={} l={} m={}", self.j, self.l, self.m),
        }
    }
}

/// Ordered set of scattering channels with truncation metadata.
///
/// Scalar channels are ordered by `ℓ` then `m`; vector channels by `j`, then
/// `ℓ ∈ {j−1, j, j+1}`, then `m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelBasis {
    pub kind: BasisKind,
    /// `ℓmax` for scalar bases, `jmax` for vector bases.
    pub max: i32,
    /// Highest source multipole the basis is meant to couple through.
    pub source_lmax: i32,
    pub channels: Vec<Channel>,
    #[serde(skip)]
    index: HashMap<(i32, i32, i32), usize>,
}

impl PartialEq for ChannelBasis {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.channels == other.channels
    }
}

impl ChannelBasis {
    pub fn scalar(lmax: u32, source_lmax: u32) -> Self {
        let lmax = lmax as i32;
        let mut channels = Vec::new();
        for l in 0..=lmax {
            for m in -l..=l {
                channels.push(Channel { j: l, l, m });
            }
        }
        Self::from_channels(BasisKind::Scalar, lmax, source_lmax as i32, channels)
    }

    pub fn vector(jmax: u32, source_lmax: u32) -> Self {
        let jmax = jmax as i32;
        let mut channels = Vec::new();
        for j in 0..=jmax {
            for l in [j - 1, j, j + 1] {
                if l < 0 || (j == 0 && l != 1) {
                    continue;
                }
                for m in -j..=j {
                    channels.push(Channel { j, l, m });
                }
            }
        }
        Self::from_channels(BasisKind::Vector, jmax, source_lmax as i32, channels)
    }

    fn from_channels(kind: BasisKind, max: i32, source_lmax: i32, channels: Vec<Channel>) -> Self {
        let index = channels
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.j, c.l, c.m), i))
            .collect();
        Self {
            kind,
            max,
            source_lmax,
            channels,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// Index of channel `(j, ℓ, m)`; for scalar bases pass `j = ℓ`.
    pub fn index_of(&self, j: i32, l: i32, m: i32) -> Option<usize> {
        if self.index.is_empty() && !self.channels.is_empty() {
            // deserialized instance without the lookup table
            return self
                .channels
                .iter()
                .position(|c| (c.j, c.l, c.m) == (j, l, m));
        }
        self.index.get(&(j, l, m)).copied()
    }

    /// Orbital index ℓ of every channel, in order.
    pub fn ells(&self) -> Vec<i32> {
        self.channels.iter().map(|c| c.l).collect()
    }

    /// Diagonal of `L̂²`: `ℓ(ℓ+1)` per channel.
    pub fn l_squared(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.channels.iter().map(|c| f64::from(c.l * (c.l + 1))),
        )
    }

    /// Diagonal of `M̂`: `(−1)^ℓ` per channel.
    pub fn parity(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.channels
                .iter()
                .map(|c| if c.l % 2 == 0 { 1.0 } else { -1.0 }),
        )
    }

    pub fn labels(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.label(self.kind)).collect()
    }

    /// Same kind of basis with a different truncation.
    pub fn with_max(&self, max: i32) -> Self {
        match self.kind {
            BasisKind::Scalar => Self::scalar(max.max(0) as u32, self.source_lmax as u32),
            BasisKind::Vector => Self::vector(max.max(0) as u32, self.source_lmax as u32),
        }
    }

    /// Channel indices of `self` inside the (larger) basis `outer`.
    pub fn embedding_in(&self, outer: &ChannelBasis) -> Option<Vec<usize>> {
        self.channels
            .iter()
            .map(|c| outer.index_of(c.j, c.l, c.m))
            .collect()
    }

    /// Restore the lookup table after deserialization.
    pub fn reindexed(self) -> Self {
        Self::from_channels(self.kind, self.max, self.source_lmax, self.channels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        for n in 0..6u32 {
            assert_eq!(
                ChannelBasis::scalar(n, 0).dim(),
                ((n + 1) * (n + 1)) as usize
            );
            assert_eq!(
                ChannelBasis::vector(n, 0).dim(),
                (3 * (n + 1) * (n + 1) - 2) as usize
            );
        }
    }

    #[test]
    fn ordering_is_stable_and_indexed() {
        let b = ChannelBasis::vector(2, 1);
        assert_eq!(b.channels[0], Channel { j: 0, l: 1, m: 0 });
        assert_eq!(b.channels[1], Channel { j: 1, l: 0, m: -1 });
        for (i, c) in b.channels.iter().enumerate() {
            assert_eq!(b.index_of(c.j, c.l, c.m), Some(i));
        }
        let again = ChannelBasis::vector(2, 1);
        assert_eq!(b, again);
        let small = ChannelBasis::vector(1, 1);
        let emb = small.embedding_in(&b).unwrap();
        assert_eq!(emb, (0..small.dim()).collect::<Vec<_>>());
    }

    #[test]
    fn parity_and_l_squared() {
        let b = ChannelBasis::scalar(2, 0);
        assert_eq!(b.parity()[0], 1.0);
        assert_eq!(b.parity()[1], -1.0);
        assert_eq!(b.l_squared()[8], 6.0);
    }

    #[test]
    fn serde_round_trip_keeps_lookup() {
        let b = ChannelBasis::vector(1, 0);
        let s = serde_json::to_string(&b).unwrap();
        let back: ChannelBasis = serde_json::from_str(&s).unwrap();
        assert_eq!(back.index_of(1, 2, 1), b.index_of(1, 2, 1));
        assert_eq!(back.reindexed(), b);
    }
}
