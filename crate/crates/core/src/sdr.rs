//! Semantic-Densepose-Ratio: garment area relative to the upper-body area,
//! and the corrected distance between a real and a virtual try-on.
//!
//! With `S` the garment's semantic area, `D` the upper-body densepose area and
//! `S∩D` their overlap, the ratio is `S/D` and the corrected distance between
//! two samples is `α·β·|S₁/D₁ − S₂/D₂|` with fabric-area factor `α = D/(S∩D)`
//! and fit factor `β = (S∩D)/S`. Taking both factors from the real try-on,
//! the overlap cancels and the distance collapses to
//! `|1 − (D_R·S_V)/(S_R·D_V)|`.

use serde::{Deserialize, Serialize};

use crate::annotations::{region_area, region_intersection_area, DenseposeMap, LabelMap, Role, Selector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pixel areas for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdrInputs {
    /// Garment semantic area.
    pub s: u64,
    /// Upper-body densepose area.
    pub d: u64,
    /// Overlap of the two.
    pub sd: u64,
}

impl SdrInputs {
    pub fn new(s: u64, d: u64, sd: u64) -> Result<Self> {
        let inputs = Self { s, d, sd };
        inputs.check()?;
        Ok(inputs)
    }

    fn check(&self) -> Result<()> {
        if self.sd > self.s.min(self.d) {
            return Err(Error::InvalidParams(format!(
                "overlap {} exceeds min(s={}, d={})",
                self.sd, self.s, self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SdrScore<T> {
    pub value: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrFactors<T> {
    /// Fabric area factor `D / (S∩D)`.
    pub alpha: T,
    /// Clothing fit factor `(S∩D) / S`.
    pub beta: T,
}

pub fn sdr<T: Scalar>(inputs: &SdrInputs) -> Result<T> {
    if inputs.d == 0 {
        return Err(Error::ZeroBodyArea);
    }
    Ok(T::from_count(inputs.s) / T::from_count(inputs.d))
}

pub fn sdr_factors<T: Scalar>(inputs: &SdrInputs) -> Result<SdrFactors<T>> {
    if inputs.s == 0 {
        return Err(Error::EmptyClothing);
    }
    if inputs.sd == 0 {
        return Err(Error::DegenerateOverlap);
    }
    let (s, d, sd) = (T::from_count(inputs.s), T::from_count(inputs.d), T::from_count(inputs.sd));
    Ok(SdrFactors { alpha: d / sd, beta: sd / s })
}

/// Corrected distance with explicit factors.
pub fn sdr_distance_general<T: Scalar>(a: &SdrInputs, b: &SdrInputs, factors: SdrFactors<T>) -> Result<SdrScore<T>> {
    let diff = (sdr::<T>(a)? - sdr::<T>(b)?).abs();
    Ok(SdrScore { value: factors.alpha * factors.beta * diff })
}

/// Closed-form distance between a real try-on and a virtual one, with the
/// correction factors taken from the real side.
pub fn sdr_distance<T: Scalar>(real: &SdrInputs, virt: &SdrInputs) -> Result<SdrScore<T>> {
    if real.d == 0 || virt.d == 0 {
        return Err(Error::ZeroBodyArea);
    }
    if real.s == 0 {
        return Err(Error::EmptyClothing);
    }
    let num = T::from_count(real.d) * T::from_count(virt.s);
    let den = T::from_count(real.s) * T::from_count(virt.d);
    Ok(SdrScore { value: (T::one() - num / den).abs() })
}

/// Reads `S`, `D` and `S∩D` off a parsing map and a densepose map.
pub fn sdr_inputs_from_maps(parse: &LabelMap, densepose: &DenseposeMap) -> Result<SdrInputs> {
    let top = Selector::Role(Role::UpperClothes);
    let sd = region_intersection_area(parse, &top, densepose, &Selector::UpperBody)?;
    let s = region_area(parse, &top)?;
    let d = region_area(densepose, &Selector::UpperBody)?;
    Ok(SdrInputs { s, d, sd })
}

/// Everything reported for one real/virtual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdrPairReport {
    pub s_r: u64,
    pub d_r: u64,
    pub s_v: u64,
    pub d_v: u64,
    pub sdr_r: f64,
    pub sdr_v: f64,
    pub distance: f64,
}

pub fn sdr_pair_report(real: &SdrInputs, virt: &SdrInputs) -> Result<SdrPairReport> {
    Ok(SdrPairReport {
        s_r: real.s,
        d_r: real.d,
        s_v: virt.s,
        d_v: virt.d,
        sdr_r: sdr::<f64>(real)?,
        sdr_v: sdr::<f64>(virt)?,
        distance: sdr_distance::<f64>(real, virt)?.value,
    })
}
