//! Field configurations on the first links of a lattice run, and the events
//! built out of them.
//!
//! A configuration of extent `n` fixes the two-valued field on the first `2n`
//! links (labels `1..=2n` under some labelling). An event is a finite union
//! of cylinder sets: it fixes the field on an initial stretch and says
//! nothing about the rest. Events are stored as an extent plus the list of
//! base configurations; the canonical form uses the smallest extent that can
//! express the event, so equal events compare equal.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported extent: configurations pack into a u64.
pub const MAX_EXTENT: usize = 31;

/// Refuse to materialize events with more bases than this.
const MAX_BASES: usize = 1 << 26;

/// Field values on links `1..=2n`, packed with link `a` at bit `a - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldConfig {
    extent: usize,
    bits: u64,
}

impl FieldConfig {
    pub fn new(extent: usize, bits: u64) -> Result<Self> {
        if extent > MAX_EXTENT {
            return Err(Error::ExtentTooLarge {
                extent,
                max: MAX_EXTENT,
            });
        }
        if extent < 32 && bits >> (2 * extent) != 0 {
            return Err(Error::BitsOutOfRange { bits, extent });
        }
        Ok(FieldConfig { extent, bits })
    }

    /// The unique configuration of extent zero.
    pub fn trivial() -> Self {
        FieldConfig { extent: 0, bits: 0 }
    }

    pub fn extent(self) -> usize {
        self.extent
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    /// Field on link `a`, 1-based, `a <= 2 * extent`.
    pub fn bit(self, a: usize) -> u8 {
        assert!(
            a >= 1 && a <= 2 * self.extent,
            "link label {a} out of range 1..={}",
            2 * self.extent
        );
        ((self.bits >> (a - 1)) & 1) as u8
    }

    /// Child configuration: the two fields of step `extent + 1` appended.
    pub fn extend(self, left: u8, right: u8) -> Result<Self> {
        let add = (left as u64 & 1) | ((right as u64 & 1) << 1);
        FieldConfig::new(self.extent + 1, self.bits | (add << (2 * self.extent)))
    }

    pub fn truncate(self, m: usize) -> Result<Self> {
        if m > self.extent {
            return Err(Error::ConfigTooShort {
                config_extent: self.extent,
                event_extent: m,
            });
        }
        Ok(FieldConfig {
            extent: m,
            bits: self.bits & low_mask(2 * m),
        })
    }

    /// Number of links where the two configurations differ.
    pub fn hamming(self, other: FieldConfig) -> Result<usize> {
        if self.extent != other.extent {
            return Err(Error::ExtentMismatch {
                left: self.extent,
                right: other.extent,
            });
        }
        Ok((self.bits ^ other.bits).count_ones() as usize)
    }
}

fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

impl fmt::Display for FieldConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in 1..=2 * self.extent {
            write!(f, "{}", self.bit(a))?;
        }
        Ok(())
    }
}

impl FromStr for FieldConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() % 2 != 0 {
            return Err(Error::BadBitString {
                input: s.to_owned(),
                reason: "needs an even number of bits, two per step".into(),
            });
        }
        let extent = s.len() / 2;
        if extent > MAX_EXTENT {
            return Err(Error::ExtentTooLarge {
                extent,
                max: MAX_EXTENT,
            });
        }
        let mut bits = 0u64;
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << pos,
                _ => {
                    return Err(Error::BadBitString {
                        input: s.to_owned(),
                        reason: format!("unexpected character {ch:?}"),
                    })
                }
            }
        }
        FieldConfig::new(extent, bits)
    }
}

/// A finite union of cylinder sets over configurations of one extent.
///
/// The representation extent may exceed the canonical one (see
/// [`Event::refine`]); all set operations return canonical events.
#[derive(Debug, Clone, Eq)]
pub struct Event {
    extent: usize,
    /// Sorted, deduplicated base configurations at `extent`.
    bases: Vec<u64>,
}

impl Event {
    /// The whole history space.
    pub fn omega() -> Self {
        Event {
            extent: 0,
            bases: vec![0],
        }
    }

    /// The impossible event.
    pub fn empty() -> Self {
        Event {
            extent: 0,
            bases: Vec::new(),
        }
    }

    /// The single cylinder over one configuration.
    pub fn cylinder(config: FieldConfig) -> Self {
        Event {
            extent: config.extent,
            bases: vec![config.bits],
        }
    }

    /// Union of cylinders over configurations of a common extent.
    pub fn from_configs(configs: &[FieldConfig]) -> Result<Self> {
        let Some(first) = configs.first() else {
            return Ok(Event::empty());
        };
        let extent = first.extent;
        let mut bases = Vec::with_capacity(configs.len());
        for c in configs {
            if c.extent != extent {
                return Err(Error::ExtentMismatch {
                    left: extent,
                    right: c.extent,
                });
            }
            bases.push(c.bits);
        }
        bases.sort_unstable();
        bases.dedup();
        Ok(Event { extent, bases }.canonicalize())
    }

    /// Extent of the stored representation.
    pub fn extent(&self) -> usize {
        self.extent
    }

    /// Smallest extent that can express this event.
    pub fn time_extent(&self) -> usize {
        self.canonicalize().extent
    }

    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn configs(&self) -> impl Iterator<Item = FieldConfig> + '_ {
        let extent = self.extent;
        self.bases.iter().map(move |&bits| FieldConfig { extent, bits })
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Same event, written out over configurations of extent `m >= extent`:
    /// each base grows into `4^(m - extent)` children.
    pub fn refine(&self, m: usize) -> Result<Self> {
        if m < self.extent {
            return Err(Error::RefineBelowExtent {
                from: self.extent,
                to: m,
            });
        }
        if m > MAX_EXTENT {
            return Err(Error::ExtentTooLarge {
                extent: m,
                max: MAX_EXTENT,
            });
        }
        let step = m - self.extent;
        let children_per_base = 1usize << (2 * step);
        if self
            .bases
            .len()
            .checked_mul(children_per_base)
            .is_none_or(|total| total > MAX_BASES)
        {
            return Err(Error::EventTooLarge {
                bases: self.bases.len().saturating_mul(children_per_base),
            });
        }
        let mut bases = Vec::with_capacity(self.bases.len() * children_per_base);
        for add in 0..children_per_base as u64 {
            let high = add << (2 * self.extent);
            for &b in &self.bases {
                bases.push(b | high);
            }
        }
        bases.sort_unstable();
        Ok(Event { extent: m, bases })
    }

    /// Canonical form: repeatedly merges complete sibling blocks of four
    /// until some base would lose information.
    pub fn canonicalize(&self) -> Self {
        let mut extent = self.extent;
        let mut bases = self.bases.clone();
        while extent > 0 && !bases.is_empty() {
            let shift = 2 * (extent - 1);
            let mask = low_mask(shift);
            let mut groups: BTreeMap<u64, u8> = BTreeMap::new();
            for &b in &bases {
                *groups.entry(b & mask).or_default() |= 1 << (b >> shift);
            }
            if groups.values().all(|&present| present == 0b1111) {
                bases = groups.into_keys().collect();
                extent -= 1;
            } else {
                break;
            }
        }
        if bases.is_empty() {
            extent = 0;
        }
        Event { extent, bases }
    }

    pub fn union(&self, other: &Event) -> Result<Self> {
        let m = self.extent.max(other.extent);
        let mut bases = self.refine(m)?.bases;
        bases.extend(other.refine(m)?.bases);
        bases.sort_unstable();
        bases.dedup();
        Ok(Event { extent: m, bases }.canonicalize())
    }

    pub fn intersect(&self, other: &Event) -> Result<Self> {
        let m = self.extent.max(other.extent);
        let a = self.refine(m)?.bases;
        let b = other.refine(m)?.bases;
        let mut bases = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    bases.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(Event {
            extent: m,
            bases,
        }
        .canonicalize())
    }

    /// Complement within the whole history space.
    pub fn complement(&self) -> Result<Self> {
        let total = 1usize << (2 * self.extent);
        if total > MAX_BASES {
            return Err(Error::EventTooLarge { bases: total });
        }
        let bases = (0..total as u64).filter(|b| !contains_base(&self.bases, *b)).collect();
        Ok(Event {
            extent: self.extent,
            bases,
        }
        .canonicalize())
    }

    pub fn is_disjoint(&self, other: &Event) -> Result<bool> {
        Ok(self.intersect(other)?.is_empty())
    }

    /// Whether every history matching `config` lies in this event. The
    /// configuration must be at least as long as the representation extent.
    pub fn contains(&self, config: FieldConfig) -> Result<bool> {
        if config.extent < self.extent {
            return Err(Error::ConfigTooShort {
                config_extent: config.extent,
                event_extent: self.extent,
            });
        }
        let prefix = config.bits & low_mask(2 * self.extent);
        Ok(contains_base(&self.bases, prefix))
    }
}

fn contains_base(sorted: &[u64], b: u64) -> bool {
    sorted.binary_search(&b).is_ok()
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        let a = self.canonicalize();
        let b = other.canonicalize();
        a.extent == b.extent && a.bases == b.bases
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.extent == 0 {
            return write!(f, "{}", if self.bases.is_empty() { "empty" } else { "omega" });
        }
        write!(f, "{}:", self.extent)?;
        for (i, c) in self.configs().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Event {
    type Err = Error;

    /// Parses the `Display` form: `omega`, `empty`, or
    /// `<extent>:<bits>,<bits>,...` with `2 * extent` bits per base.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => return Ok(Event::omega()),
            "empty" => return Ok(Event::empty()),
            _ => {}
        }
        let (extent_str, bases_str) = s.split_once(':').ok_or_else(|| Error::BadEventLiteral {
            input: s.to_owned(),
            reason: "expected omega, empty, or <extent>:<bits>,...".into(),
        })?;
        let extent: usize = extent_str.parse().map_err(|_| Error::BadEventLiteral {
            input: s.to_owned(),
            reason: "extent is not a number".into(),
        })?;
        if extent == 0 || bases_str.is_empty() {
            return Err(Error::BadEventLiteral {
                input: s.to_owned(),
                reason: "extent-zero events are spelled omega or empty".into(),
            });
        }
        let mut bases = Vec::new();
        for part in bases_str.split(',') {
            let config: FieldConfig = part.parse()?;
            if config.extent != extent {
                return Err(Error::BadEventLiteral {
                    input: s.to_owned(),
                    reason: format!(
                        "base {part:?} has extent {}, header says {extent}",
                        config.extent
                    ),
                });
            }
            bases.push(config.bits);
        }
        bases.sort_unstable();
        bases.dedup();
        Ok(Event { extent, bases })
    }
}
