use std::fmt;
use std::str::FromStr;

/// An arithmetic grid `start:stop:step`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn count(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    /// Points `start + i * step`, rounded to 12 decimals so that `0.1 * 3`
    /// comes out as `0.3`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.count())
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number in grid: {t:?}"))
        };
        let g = Grid::new(parse(a)?, parse(b)?, parse(c)?);
        if !(g.step > 0.0 && g.stop >= g.start && g.start.is_finite() && g.stop.is_finite()) {
            return Err(format!("grid needs step > 0 and stop >= start, got {s:?}"));
        }
        Ok(g)
    }
}
