//! Staffing arithmetic: time available, time required, the ratio test and
//! the optimal head count.
//!
//! All internal times are hours; minute inputs convert at the boundary
//! (60 minutes = 1 hour exactly). The formulas are exact products:
//!
//! ```text
//! time available = staff x working hours/day x utilization x working days
//! time required  = forecasted customers x service time
//! ratio          = time required / time available
//! ```
//!
//! A ratio above 1 means the period is understaffed; the optimal staff count
//! is the smallest head count whose capacity covers the required time.

use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Capacity side of the plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    pub staff_count: u32,
    pub working_hours_per_day: f64,
    /// Fraction of paid time actually spent serving customers, in (0, 1].
    pub utilization_rate: f64,
    /// Working days in the planning period.
    pub working_days: f64,
}

impl CapacityParams {
    pub fn new(staff_count: u32, hours: f64, utilization: f64, days: f64) -> Self {
        CapacityParams {
            staff_count,
            working_hours_per_day: hours,
            utilization_rate: utilization,
            working_days: days,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.staff_count == 0 {
            return Err(Error::InvalidParams("staff count must be positive".into()));
        }
        if !self.working_hours_per_day.is_finite() || self.working_hours_per_day <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "working hours must be positive, got {}",
                self.working_hours_per_day
            )));
        }
        if !(self.utilization_rate > 0.0 && self.utilization_rate <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "utilization must be in (0,1], got {}",
                self.utilization_rate
            )));
        }
        if !self.working_days.is_finite() || self.working_days <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "working days must be positive, got {}",
                self.working_days
            )));
        }
        Ok(())
    }

    /// Productive hours a single staff member contributes in the period.
    fn hours_per_staff(&self) -> f64 {
        self.working_hours_per_day * self.utilization_rate * self.working_days
    }
}

/// Demand side of the plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandParams {
    /// Head count or an expected value from a probabilistic forecast.
    pub forecasted_customers: f64,
    /// Hours per customer, uniform across services.
    pub service_time_hours: f64,
}

impl DemandParams {
    pub fn new(forecasted_customers: f64, service_time_hours: f64) -> Self {
        DemandParams {
            forecasted_customers,
            service_time_hours,
        }
    }

    pub fn from_minutes(forecasted_customers: f64, service_minutes: f64) -> Self {
        DemandParams {
            forecasted_customers,
            service_time_hours: service_minutes / 60.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.forecasted_customers.is_finite() || self.forecasted_customers < 0.0 {
            return Err(Error::InvalidParams(format!(
                "forecasted customers must be non-negative, got {}",
                self.forecasted_customers
            )));
        }
        if !self.service_time_hours.is_finite() || self.service_time_hours <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "service time must be positive, got {}",
                self.service_time_hours
            )));
        }
        Ok(())
    }
}

/// staff x hours x utilization x days.
pub fn time_available(cap: &CapacityParams) -> Result<f64> {
    cap.validate()?;
    Ok(cap.staff_count as f64 * cap.hours_per_staff())
}

/// customers x service time.
pub fn time_required(dem: &DemandParams) -> Result<f64> {
    dem.validate()?;
    Ok(dem.forecasted_customers * dem.service_time_hours)
}

/// One staffing verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaffingPlan {
    pub staff_count: u32,
    pub time_available: f64,
    pub time_required: f64,
    /// time required / time available.
    pub ratio: f64,
    /// Smallest head count whose capacity covers the demand (at least 1).
    pub optimal_staff: u32,
    /// ratio <= 1 at the current staff count.
    pub feasible: bool,
}

/// Evaluate capacity against demand.
pub fn plan(cap: &CapacityParams, dem: &DemandParams) -> Result<StaffingPlan> {
    cap.validate()?;
    dem.validate()?;
    let available = cap.staff_count as f64 * cap.hours_per_staff();
    let required = dem.forecasted_customers * dem.service_time_hours;
    let ratio = required / available;
    Ok(StaffingPlan {
        staff_count: cap.staff_count,
        time_available: available,
        time_required: required,
        ratio,
        optimal_staff: optimal_staff(cap.hours_per_staff(), required),
        feasible: ratio <= 1.0,
    })
}

/// Smallest s >= 1 with required <= s * per_staff. The ceil of the division
/// is nudged so the answer always agrees with the feasibility comparison,
/// even when the division lands exactly on an integer.
fn optimal_staff(per_staff: f64, required: f64) -> u32 {
    let mut s = (required / per_staff).ceil().max(1.0) as u32;
    while s > 1 && required <= (s - 1) as f64 * per_staff {
        s -= 1;
    }
    while required > s as f64 * per_staff {
        s += 1;
    }
    s
}

/// One plan per staff count in the range, holding everything else fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfTable {
    pub rows: Vec<StaffingPlan>,
    /// Staff count of the first feasible row, if any.
    pub first_feasible: Option<u32>,
}

/// Sweep staff counts over `range` against fixed demand.
pub fn what_if(
    range: RangeInclusive<u32>,
    cap: &CapacityParams,
    dem: &DemandParams,
) -> Result<WhatIfTable> {
    if range.is_empty() {
        return Err(Error::InvalidParams("what-if staff range is empty".into()));
    }
    let mut rows = Vec::new();
    for staff in range {
        let capacity = CapacityParams {
            staff_count: staff,
            ..*cap
        };
        rows.push(plan(&capacity, dem)?);
    }
    let first_feasible = rows.iter().find(|r| r.feasible).map(|r| r.staff_count);
    Ok(WhatIfTable {
        rows,
        first_feasible,
    })
}

impl fmt::Display for WhatIfTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6} {:>14} {:>14} {:>9} {:>9}",
            "Staff", "Available (h)", "Required (h)", "Ratio", "Feasible"
        )?;
        for r in &self.rows {
            let marker = if Some(r.staff_count) == self.first_feasible {
                " <- optimal"
            } else {
                ""
            };
            writeln!(
                f,
                "{:>6} {:>14.1} {:>14.1} {:>8.1}% {:>9}{}",
                r.staff_count,
                r.time_available,
                r.time_required,
                r.ratio * 100.0,
                if r.feasible { "yes" } else { "no" },
                marker
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for StaffingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Time available   {:>12.2} h", self.time_available)?;
        writeln!(f, "Time required    {:>12.2} h", self.time_required)?;
        writeln!(f, "Ratio            {:>12.1}%", self.ratio * 100.0)?;
        writeln!(
            f,
            "Staffing         {:>12}",
            if self.feasible { "feasible" } else { "UNDERSTAFFED" }
        )?;
        writeln!(f, "Optimal staff    {:>12}", self.optimal_staff)
    }
}
