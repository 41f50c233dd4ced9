use std::f64::consts::FRAC_PI_3;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Breakpoints `0 = θ₀ < θ₁ < … < θ_N` of the subdivision
/// `I_i = (θ_{i−1}, θ_i]` of `I = (0, π/3 − ε]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub breakpoints: Vec<f64>,
    pub provenance: String,
}

/// `π/3 · s` for the piecewise-uniform scale `s`.
fn scaled(scale: impl Fn(usize) -> f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| FRAC_PI_3 * scale(i)).collect()
}

impl Schedule {
    pub fn new(breakpoints: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        let s = Schedule {
            breakpoints,
            provenance: provenance.into(),
        };
        s.validate()?;
        Ok(s)
    }

    /// `ε = π/1500`, `N₁ = 170`.
    pub fn paper_dirichlet() -> Self {
        let pts = scaled(
            |i| {
                let i = i as f64;
                match i {
                    _ if i <= 45.0 => 0.02 * i,
                    _ if i <= 50.0 => 0.9 + 1e-2 * (i - 45.0),
                    _ if i <= 90.0 => 0.95 + 1e-3 * (i - 50.0),
                    _ => 0.99 + 1e-4 * (i - 90.0),
                }
            },
            170,
        );
        Schedule::new(pts, "paper-dirichlet").expect("built-in schedule is valid")
    }

    /// `ε = π/3000`, `N₁ = 320`.
    pub fn paper_cr_constant() -> Self {
        let pts = scaled(
            |i| {
                let i = i as f64;
                match i {
                    _ if i <= 40.0 => 0.02 * i,
                    _ if i <= 230.0 => 0.8 + 1e-3 * (i - 40.0),
                    _ => 0.99 + 1e-4 * (i - 230.0),
                }
            },
            320,
        );
        Schedule::new(pts, "paper-cr-constant").expect("built-in schedule is valid")
    }

    /// Every `stride`-th breakpoint of `self`, always keeping both ends.
    pub fn coarsened(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let last = self.breakpoints.len() - 1;
        let mut pts: Vec<f64> = self.breakpoints.iter().copied().step_by(stride).collect();
        if (last % stride) != 0 {
            pts.push(self.breakpoints[last]);
        }
        Schedule {
            breakpoints: pts,
            provenance: format!("{}/coarsened-{stride}", self.provenance),
        }
    }

    /// Cuts the schedule at `π/3 − ε`: breakpoints at or beyond it are
    /// dropped and `π/3 − ε` becomes the last one.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < FRAC_PI_3) {
            return Err(Error::Schedule(format!("ε = {epsilon} outside (0, π/3)")));
        }
        let end = FRAC_PI_3 - epsilon;
        if (end - self.breakpoints[self.breakpoints.len() - 1]).abs() <= 4.0 * f64::EPSILON {
            return Ok(self.clone());
        }
        let mut pts: Vec<f64> = self.breakpoints.iter().copied().filter(|&t| t < end).collect();
        pts.push(end);
        Schedule::new(pts, format!("{}/epsilon-{epsilon:e}", self.provenance))
    }

    /// Reads breakpoints (radians), one per line or whitespace/comma
    /// separated; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, format!("custom:{}", path.display()))
    }

    pub fn parse(text: &str, provenance: impl Into<String>) -> Result<Self> {
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Schedule(format!("line {}: cannot parse {tok:?}", lineno + 1)))?;
                pts.push(v);
            }
        }
        Schedule::new(pts, provenance)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.breakpoints;
        if b.len() < 2 {
            return Err(Error::Schedule("need at least two breakpoints".into()));
        }
        if b[0] != 0.0 {
            return Err(Error::Schedule(format!("first breakpoint must be 0, got {}", b[0])));
        }
        if let Some(w) = b.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Schedule(format!("not strictly increasing at {} ≥ {}", w[0], w[1])));
        }
        let last = b[b.len() - 1];
        if !(last < FRAC_PI_3) {
            return Err(Error::Schedule(format!("last breakpoint {last} must lie below π/3")));
        }
        Ok(())
    }

    /// Number of subintervals `N₁`.
    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(θ_{i−1}, θ_i)` for `i = 1..=N₁`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// `π/3 − θ_N`, the `ε` this schedule leaves for the derivative step.
    pub fn epsilon(&self) -> f64 {
        FRAC_PI_3 - self.breakpoints[self.breakpoints.len() - 1]
    }
}

/// Equal subdivision of `J = [start, π/3]` into `n2` parts; the last node is
/// exactly `π/3`.
pub fn j_nodes(start: f64, n2: usize) -> Result<Vec<f64>> {
    if n2 == 0 {
        return Err(Error::Schedule("N₂ must be positive".into()));
    }
    if !(start > 0.0 && start <= FRAC_PI_3) {
        return Err(Error::Schedule(format!("J must start in (0, π/3], got {start}")));
    }
    let h = (FRAC_PI_3 - start) / n2 as f64;
    let mut nodes: Vec<f64> = (0..n2).map(|i| start + i as f64 * h).collect();
    nodes.push(FRAC_PI_3);
    if nodes.windows(2).any(|w| !(w[0] < w[1])) && h > 0.0 {
        return Err(Error::Schedule("J subdivision is not strictly increasing".into()));
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn paper_schedules() {
        let d = Schedule::paper_dirichlet();
        assert_eq!(d.len(), 170);
        assert!((d.epsilon() - PI / 1500.0).abs() < 1e-14);
        assert!((d.breakpoints[45] - FRAC_PI_3 * 0.9).abs() < 1e-15);
        assert!((d.breakpoints[50] - FRAC_PI_3 * 0.95).abs() < 1e-15);
        assert!((d.breakpoints[90] - FRAC_PI_3 * 0.99).abs() < 1e-15);
        let v = Schedule::paper_cr_constant();
        assert_eq!(v.len(), 320);
        assert!((v.epsilon() - PI / 3000.0).abs() < 1e-14);
        assert!((v.breakpoints[40] - FRAC_PI_3 * 0.8).abs() < 1e-15);
        assert!((v.breakpoints[230] - FRAC_PI_3 * 0.99).abs() < 1e-15);
    }

    #[test]
    fn coarsening_keeps_ends() {
        let d = Schedule::paper_dirichlet();
        let c = d.coarsened(7);
        assert_eq!(c.breakpoints[0], 0.0);
        assert_eq!(c.breakpoints.last(), d.breakpoints.last());
        c.validate().unwrap();
    }

    #[test]
    fn parse_and_reject() {
        let s = Schedule::parse("0 # start\n0.5, 0.9\n1.0\n", "t").unwrap();
        assert_eq!(s.breakpoints, vec![0.0, 0.5, 0.9, 1.0]);
        assert!(Schedule::parse("0 0.5 0.4", "t").is_err());
        assert!(Schedule::parse("0.1 0.5", "t").is_err());
        assert!(Schedule::parse("0 1.2", "t").is_err());
        assert!(Schedule::parse("0 x", "t").is_err());
    }

    #[test]
    fn j_subdivision() {
        let start = FRAC_PI_3 - PI / 1500.0;
        let j = j_nodes(start, 200).unwrap();
        assert_eq!(j.len(), 201);
        assert_eq!(j[0], start);
        assert_eq!(j[200], FRAC_PI_3);
        assert!(j_nodes(start, 0).is_err());
    }

    #[test]
    fn epsilon_cut() {
        let d = Schedule::paper_dirichlet();
        assert_eq!(d.with_epsilon(PI / 1500.0).unwrap(), d);
        let c = d.with_epsilon(0.01).unwrap();
        assert!((c.epsilon() - 0.01).abs() < 1e-15);
        assert!(c.len() < d.len());
        assert!(d.with_epsilon(0.0).is_err());
    }
}
