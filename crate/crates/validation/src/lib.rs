//! Bookkeeping for the acceptance run: criterion outcomes and timing.

use std::fmt;
use std::time::Instant;

/// Result of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }

    /// Combine several sub-checks; passes only if all of them do.
    pub fn all(parts: Vec<(bool, String)>) -> Self {
        let pass = parts.iter().all(|p| p.0);
        let detail =
            parts.into_iter().map(|(ok, s)| if ok { s } else { format!("{s} [fail]") }).collect::<Vec<_>>().join("; ");
        Outcome { pass, detail }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", if self.pass { "PASS" } else { "FAIL" }, self.detail)
    }
}

/// Median wall time in seconds over `reps` calls, after one untimed warm-up.
pub fn median_secs<T>(reps: usize, mut f: impl FnMut() -> T) -> f64 {
    std::hint::black_box(f());
    let mut t: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(f());
            start.elapsed().as_secs_f64()
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t[t.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combined_outcome() {
        let o = Outcome::all(vec![(true, "a".into()), (false, "b".into())]);
        assert!(!o.pass);
        assert_eq!(o.detail, "a; b [fail]");
        assert!(Outcome::all(vec![(true, "a".into())]).pass);
    }

    #[test]
    fn median_runs_closure() {
        let mut calls = 0;
        let t = median_secs(3, || calls += 1);
        assert_eq!(calls, 4);
        assert!(t >= 0.0);
    }
}
