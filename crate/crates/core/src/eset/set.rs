use super::EsetError;

/// A set of heights symmetric under `v -> -v`.
///
/// Schedule-derived sets are unions of `±[l, l + r]` with `l >= 2`, so they
/// never contain 0 or ±1. Complements of such sets (including the full set of
/// integers) are also representable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ESet {
    /// Half-open boundaries `l_1, l_1 + r_1 + 1, l_2, ...` on `|v|`; a value is
    /// in the union iff an odd number of boundaries are `<= |v|`.
    bounds: Vec<u64>,
    complement: bool,
}

impl ESet {
    pub fn empty() -> Self {
        ESet {
            bounds: Vec::new(),
            complement: false,
        }
    }

    pub fn full() -> Self {
        ESet::empty().complement()
    }

    pub fn complement(&self) -> Self {
        ESet {
            bounds: self.bounds.clone(),
            complement: !self.complement,
        }
    }

    /// The side (`self` or its complement) that contains 0.
    pub fn zero_side(&self) -> Self {
        if self.contains(0) {
            self.clone()
        } else {
            self.complement()
        }
    }

    /// Union of `±[l, l + r]` over sorted, gapped pairs with `l_1 >= 2`, `r >= 1`.
    pub fn from_pairs(pairs: &[(u64, u64)]) -> Result<Self, EsetError> {
        let mut bounds = Vec::with_capacity(2 * pairs.len());
        let mut prev_end: Option<u64> = None;
        for (index, &(l, r)) in pairs.iter().enumerate() {
            if index == 0 && l < 2 {
                return Err(EsetError::BadOrder {
                    index,
                    reason: "first interval must start at 2 or above",
                });
            }
            if r == 0 {
                return Err(EsetError::BadOrder {
                    index,
                    reason: "interval length r must be positive",
                });
            }
            let end = l
                .checked_add(r)
                .filter(|&e| e < 1 << 62)
                .ok_or(EsetError::BadOrder {
                    index,
                    reason: "interval endpoint exceeds 2^62",
                })?;
            if let Some(prev) = prev_end {
                let prev_l = pairs[index - 1].0;
                if l <= prev_l {
                    return Err(EsetError::BadOrder {
                        index,
                        reason: "intervals must be sorted by left endpoint",
                    });
                }
                if l <= prev {
                    return Err(EsetError::OverlappingIntervals { index });
                }
            }
            bounds.push(l);
            bounds.push(end + 1);
            prev_end = Some(end);
        }
        Ok(ESet {
            bounds,
            complement: false,
        })
    }

    pub fn is_full(&self) -> bool {
        self.bounds.is_empty() && self.complement
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty() && !self.complement
    }

    pub fn is_complement(&self) -> bool {
        self.complement
    }

    pub fn contains(&self, v: i64) -> bool {
        let inside = self.bounds.partition_point(|&x| x <= v.unsigned_abs()) % 2 == 1;
        inside != self.complement
    }

    /// The positive intervals `(l, r)` of the union, or of the union whose
    /// complement this is.
    pub fn pairs(&self) -> Vec<(u64, u64)> {
        self.bounds
            .chunks(2)
            .map(|c| (c[0], c[1] - 1 - c[0]))
            .collect()
    }

    /// Lookup table for `|v| <= radius`, falling back to search outside it.
    pub fn mask(&self, radius: u64) -> EMask {
        let radius = radius.min(1 << 24);
        let bits = (0..=radius).map(|a| self.contains(a as i64)).collect();
        EMask {
            bits,
            set: self.clone(),
        }
    }
}

/// Membership table for small heights, where walks spend nearly all their time.
#[derive(Debug, Clone)]
pub struct EMask {
    bits: Vec<bool>,
    set: ESet,
}

impl EMask {
    #[inline]
    pub fn contains(&self, v: i64) -> bool {
        match self.bits.get(v.unsigned_abs() as usize) {
            Some(&b) => b,
            None => self.set.contains(v),
        }
    }

    pub fn set(&self) -> &ESet {
        &self.set
    }
}
