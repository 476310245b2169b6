use crate::error::{Error, Result};

/// Diffusivity `g_t` of the reference process `dQ = g_t dW_t` together with
/// its cumulative variance `beta_t = ∫_0^t g_s^2 ds`.
///
/// Zero diffusivity is accepted so deterministic flows can be simulated, but
/// every bridge operation requires `beta_1 > 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum DiffusivitySchedule {
    Constant {
        g: f64,
    },
    /// `values[k]` applies on `[breakpoints[k-1], breakpoints[k])`, with the
    /// last value extending to `t = 1` inclusive.
    PiecewiseConstant {
        values: Vec<f64>,
        breakpoints: Vec<f64>,
    },
}

impl Default for DiffusivitySchedule {
    fn default() -> Self {
        DiffusivitySchedule::Constant { g: 1.0 }
    }
}

fn check_g(g: f64) -> Result<()> {
    if g.is_finite() && g >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "diffusivity must be finite and non-negative, got {g}"
        )))
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::TimeDomain { t })
    }
}

impl DiffusivitySchedule {
    pub fn constant(g: f64) -> Result<Self> {
        check_g(g)?;
        Ok(DiffusivitySchedule::Constant { g })
    }

    pub fn piecewise(values: Vec<f64>, breakpoints: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "piecewise schedule needs one more value than breakpoints ({} values, {} breakpoints)",
                values.len(),
                breakpoints.len()
            )));
        }
        for &g in &values {
            check_g(g)?;
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "breakpoints must be strictly increasing inside (0, 1), got {breakpoints:?}"
                )));
            }
            prev = b;
        }
        if breakpoints.is_empty() {
            return Ok(DiffusivitySchedule::Constant { g: values[0] });
        }
        Ok(DiffusivitySchedule::PiecewiseConstant {
            values,
            breakpoints,
        })
    }

    /// `g_t`. Times outside `[0, 1]` are clamped.
    pub fn g(&self, t: f64) -> f64 {
        match self {
            DiffusivitySchedule::Constant { g } => *g,
            DiffusivitySchedule::PiecewiseConstant {
                values,
                breakpoints,
            } => {
                let k = breakpoints.partition_point(|&b| b <= t);
                values[k]
            }
        }
    }

    /// `beta_t = ∫_0^t g_s^2 ds`, in closed form.
    pub fn cum_beta(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            DiffusivitySchedule::Constant { g } => g * g * t,
            DiffusivitySchedule::PiecewiseConstant {
                values,
                breakpoints,
            } => {
                let mut acc = 0.0;
                let mut start = 0.0;
                for (k, &g) in values.iter().enumerate() {
                    let end = breakpoints.get(k).copied().unwrap_or(1.0);
                    if t <= start {
                        break;
                    }
                    acc += g * g * (t.min(end) - start);
                    start = end;
                }
                acc
            }
        })
    }

    pub fn beta_1(&self) -> f64 {
        self.cum_beta(1.0).expect("t = 1 is in range")
    }

    /// Text form used by config and model files: the `g` value list and the
    /// (possibly empty) breakpoint list.
    pub fn to_text(&self) -> (String, String) {
        match self {
            DiffusivitySchedule::Constant { g } => (format!("{g:?}"), String::new()),
            DiffusivitySchedule::PiecewiseConstant {
                values,
                breakpoints,
            } => (join(values), join(breakpoints)),
        }
    }

    pub fn from_text(values: &str, breakpoints: &str) -> Result<Self> {
        let values = parse_list(values)?;
        let breakpoints = parse_list(breakpoints)?;
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "schedule needs at least one g value".into(),
            ));
        }
        Self::piecewise(values, breakpoints)
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("not a number: {p:?}")))
        })
        .collect()
}

/// Uniform discretisation of `[0, 1]` into `n_steps` intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeGrid {
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument(
                "time grid needs at least one step".into(),
            ));
        }
        Ok(Self { n_steps })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.n_steps {
            1.0
        } else {
            k as f64 / self.n_steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.t(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid rule on `g_s^2`.
    fn quadrature(schedule: &DiffusivitySchedule, t: f64, panels: usize) -> f64 {
        let h = t / panels as f64;
        let f = |s: f64| schedule.g(s).powi(2);
        let mut acc = 0.5 * (f(0.0) + f(t));
        for k in 1..panels {
            acc += f(k as f64 * h);
        }
        acc * h
    }

    #[test]
    fn constant_closed_form() {
        let one = DiffusivitySchedule::constant(1.0).unwrap();
        assert_eq!(one.cum_beta(0.5).unwrap(), 0.5);
        let two = DiffusivitySchedule::constant(2.0).unwrap();
        assert_eq!(two.cum_beta(0.25).unwrap(), 1.0);
        assert_eq!(two.cum_beta(0.0).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_matches_quadrature() {
        let s = DiffusivitySchedule::piecewise(vec![1.0, 2.0], vec![0.5]).unwrap();
        let exact = s.cum_beta(0.75).unwrap();
        assert!((exact - 1.5).abs() < 1e-15);
        let quad = quadrature(&s, 0.75, 1_000_000);
        // the integrand jumps at 0.5, which costs the trapezoid rule O(h)
        assert!((exact - quad).abs() < 1e-5, "{exact} vs {quad}");
        assert_eq!(s.g(0.5), 2.0);
        assert_eq!(s.g(0.4999), 1.0);
    }

    #[test]
    fn constant_matches_quadrature() {
        for &g in &[0.3, 1.0, 2.5] {
            let s = DiffusivitySchedule::constant(g).unwrap();
            for &t in &[0.1, 0.5, 1.0] {
                let exact = s.cum_beta(t).unwrap();
                let quad = quadrature(&s, t, 1000);
                assert!(((exact - quad) / exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_out_of_range_times() {
        let s = DiffusivitySchedule::default();
        assert!(matches!(s.cum_beta(1.5), Err(Error::TimeDomain { .. })));
        assert!(matches!(s.cum_beta(-0.1), Err(Error::TimeDomain { .. })));
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(DiffusivitySchedule::constant(-1.0).is_err());
        assert!(DiffusivitySchedule::constant(f64::NAN).is_err());
        assert!(DiffusivitySchedule::piecewise(vec![1.0, 2.0], vec![]).is_err());
        assert!(DiffusivitySchedule::piecewise(vec![1.0, 2.0, 3.0], vec![0.6, 0.4]).is_err());
        assert!(DiffusivitySchedule::piecewise(vec![1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = DiffusivitySchedule::piecewise(vec![0.1, 2.0, 3.3], vec![0.25, 0.7]).unwrap();
        let (v, b) = s.to_text();
        assert_eq!(DiffusivitySchedule::from_text(&v, &b).unwrap(), s);
        let c = DiffusivitySchedule::constant(1.7).unwrap();
        let (v, b) = c.to_text();
        assert_eq!(DiffusivitySchedule::from_text(&v, &b).unwrap(), c);
    }

    #[test]
    fn grid_endpoints() {
        let grid = TimeGrid::new(7).unwrap();
        let ts = grid.times();
        assert_eq!(ts.len(), 8);
        assert_eq!(ts[0], 0.0);
        assert_eq!(ts[7], 1.0);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!(TimeGrid::new(0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn beta_is_strictly_increasing(
            values in proptest::collection::vec(0.05f64..5.0, 1..5),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let n = values.len();
            let breakpoints: Vec<f64> = (1..n).map(|k| k as f64 / n as f64).collect();
            let s = DiffusivitySchedule::piecewise(values, breakpoints).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            proptest::prop_assume!(hi - lo > 1e-9);
            proptest::prop_assert!(s.cum_beta(lo).unwrap() < s.cum_beta(hi).unwrap());
        }
    }
}
