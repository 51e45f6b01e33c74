use crate::error::{Error, Result};
use crate::objective::PENALTY;
use serde::Serialize;

/// A sampled trajectory: one shared time axis plus named channels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub channels: Vec<(String, Vec<f64>)>,
    /// Set when integration stopped early on a non-finite state.
    pub truncated: bool,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, channels: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "time axis must be strictly increasing".into(),
            ));
        }
        for (name, values) in &channels {
            if values.len() != t.len() {
                return Err(Error::InvalidInput(format!(
                    "channel `{name}` has {} samples but the time axis has {}",
                    values.len(),
                    t.len()
                )));
            }
        }
        Ok(TimeSeries {
            t,
            channels,
            truncated: false,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// CSV with a `t` column followed by one column per channel.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for (name, _) in &self.channels {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&self.t[i].to_string());
            for (_, values) in &self.channels {
                out.push(',');
                out.push_str(&values[i].to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Predator-prey rate constants: prey growth c1, predator death c2,
/// predation c3, and the predation effect on predator growth c4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PPParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl PPParams {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Self {
        PPParams { c1, c2, c3, c4 }
    }

    fn deriv(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.c1 * x - self.c3 * x * y,
            -self.c2 * y + self.c4 * x * y,
        )
    }
}

/// Fixed-step 4th-order Runge-Kutta integration of dx/dt = c1·x − c3·x·y,
/// dy/dt = −c2·y + c4·x·y over [0, t_end]. A non-finite state stops the
/// integration and flags the (shorter) series as truncated.
pub fn integrate_predator_prey(
    p: &PPParams,
    x0: f64,
    y0: f64,
    t_end: f64,
    dt: f64,
) -> Result<TimeSeries> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidInput(
            "integration needs dt > 0 and t_end > 0".into(),
        ));
    }
    let steps = ((t_end / dt).round() as usize).max(1);
    let mut t = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let (mut x, mut y) = (x0, y0);
    t.push(0.0);
    xs.push(x);
    ys.push(y);
    let mut truncated = false;
    for i in 1..=steps {
        let (k1x, k1y) = p.deriv(x, y);
        let (k2x, k2y) = p.deriv(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y);
        let (k3x, k3y) = p.deriv(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y);
        let (k4x, k4y) = p.deriv(x + dt * k3x, y + dt * k3y);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        if !(x.is_finite() && y.is_finite()) {
            truncated = true;
            break;
        }
        t.push(i as f64 * dt);
        xs.push(x);
        ys.push(y);
    }
    Ok(TimeSeries {
        t,
        channels: vec![("x".to_string(), xs), ("y".to_string(), ys)],
        truncated,
    })
}

/// Mean spacing between strict local maxima, in the units of `t`.
/// Returns None when fewer than two maxima exist (constant or monotone
/// series have no period).
pub fn naiveperiod(series: &[f64], t: &[f64]) -> Option<f64> {
    if series.len() != t.len() || series.len() < 3 {
        return None;
    }
    let peaks: Vec<usize> = (1..series.len() - 1)
        .filter(|&i| series[i] > series[i - 1] && series[i] > series[i + 1])
        .collect();
    if peaks.len() < 2 {
        return None;
    }
    Some((t[*peaks.last().unwrap()] - t[peaks[0]]) / (peaks.len() - 1) as f64)
}

/// Root mean square deviation between two equally long vectors.
pub fn rmsd(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("rmsd needs at least one sample".into()));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// RMSD normalized by the range of the reference `b`, or by |b| when both
/// inputs are scalars.
pub fn nrmsd(a: &[f64], b: &[f64]) -> Result<f64> {
    let r = rmsd(a, b)?;
    let norm = if b.len() == 1 {
        b[0].abs()
    } else {
        let mx = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = b.iter().cloned().fold(f64::INFINITY, f64::min);
        mx - mn
    };
    if !(norm > 0.0) {
        return Err(Error::InvalidInput(
            "nrmsd needs a reference with nonzero range".into(),
        ));
    }
    Ok(r / norm)
}

/// Dynamic time warping distance: minimum total |a_i − b_j| over all
/// monotone alignments of the two series (no window constraint).
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("dtw needs non-empty series".into()));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut row = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &av in a {
        row[0] = f64::INFINITY;
        for j in 1..=m {
            let local = (av - b[j - 1]).abs();
            row[j] = local + prev[j - 1].min(prev[j]).min(row[j - 1]);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    Ok(prev[m])
}

/// Settings of the period-tuning demonstration: integrate at dt = 0.1 from
/// x0 = y0 = 1 over four times the expected period, and keep every 3rd step
/// as one output sample so enough peaks exist to average quantization away.
const PERIOD_DEMO_DT: f64 = 0.1;
const PERIOD_DEMO_STRIDE: usize = 3;

/// The trajectory scored by `period_tuning_cost`, with `t` counting output
/// samples rather than model time.
pub fn period_demo_series(p: &PPParams, target: f64) -> Result<TimeSeries> {
    let full = integrate_predator_prey(p, 1.0, 1.0, 4.0 * target, PERIOD_DEMO_DT)?;
    let t = (0..full.len())
        .step_by(PERIOD_DEMO_STRIDE)
        .enumerate()
        .map(|(s, _)| s as f64)
        .collect();
    let channels = full
        .channels
        .iter()
        .map(|(name, values)| {
            (
                name.clone(),
                values
                    .iter()
                    .copied()
                    .step_by(PERIOD_DEMO_STRIDE)
                    .collect::<Vec<f64>>(),
            )
        })
        .collect();
    Ok(TimeSeries {
        t,
        channels,
        truncated: full.truncated,
    })
}

/// How far the predator oscillation period sits from `target`, as a relative
/// deviation in output samples. Negative predator values are replaced by the
/// largest finite value before peak detection, so dips below zero never read
/// as oscillations; a period-free or blown-up trajectory costs the penalty
/// sentinel.
pub fn period_tuning_cost(p: &PPParams, target: f64) -> f64 {
    let Ok(series) = period_demo_series(p, target) else {
        return PENALTY;
    };
    if series.truncated {
        return PENALTY;
    }
    let y: Vec<f64> = series
        .channel("y")
        .expect("integration emits a y channel")
        .iter()
        .map(|&v| if v < 0.0 { f64::MAX } else { v })
        .collect();
    match naiveperiod(&y, &series.t) {
        Some(period) => nrmsd(&[period], &[target]).unwrap_or(PENALTY),
        None => PENALTY,
    }
}

/// Banded cost for a growth/doubling-time reading: free inside
/// [lower, upper], otherwise the scalar deviation from `center`.
pub fn doubling_time_cost(g: f64, lower: f64, upper: f64, center: f64) -> f64 {
    debug_assert!(lower < center && center < upper);
    if (lower..=upper).contains(&g) {
        0.0
    } else {
        (g - center).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_params() -> PPParams {
        PPParams::new(1.0, 1.0, 1.0, 1.0)
    }

    #[test]
    fn equilibrium_stays_exactly_constant() {
        let series = integrate_predator_prey(&unit_params(), 1.0, 1.0, 10.0, 0.1).unwrap();
        assert!(!series.truncated);
        assert!(series.channel("x").unwrap().iter().all(|&v| v == 1.0));
        assert!(series.channel("y").unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn prey_alone_grows_exponentially() {
        let p = PPParams::new(0.7, 0.5, 0.3, 0.2);
        let series = integrate_predator_prey(&p, 2.0, 0.0, 5.0, 0.01).unwrap();
        let x = series.channel("x").unwrap();
        let expect = 2.0 * (0.7f64 * 5.0).exp();
        assert!((x.last().unwrap() - expect).abs() < 1e-6);
        assert!(series.channel("y").unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn halving_the_step_cuts_the_error_sixteenfold() {
        let p = PPParams::new(1.0, 0.5, 0.3, 0.2);
        let exact = (1.0f64 * 5.0).exp();
        let err = |dt: f64| {
            let s = integrate_predator_prey(&p, 1.0, 0.0, 5.0, dt).unwrap();
            (s.channel("x").unwrap().last().unwrap() - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(
            (12.0..=20.0).contains(&ratio),
            "convergence ratio {ratio} is not 4th order"
        );
    }

    #[test]
    fn blowup_truncates_and_flags_the_series() {
        let p = PPParams::new(1e8, 0.0, 0.0, 0.0);
        let series = integrate_predator_prey(&p, 1.0, 0.0, 2.0, 0.1).unwrap();
        assert!(series.truncated);
        assert!(series.len() < 21);
    }

    #[test]
    fn invalid_steps_are_rejected() {
        assert!(integrate_predator_prey(&unit_params(), 1.0, 1.0, 10.0, 0.0).is_err());
        assert!(integrate_predator_prey(&unit_params(), 1.0, 1.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn sinusoid_period_is_recovered() {
        for period in [6.0, 24.0, 100.0] {
            let dt = period / 100.0;
            let n = (4.0 * period / dt) as usize;
            let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
            let s: Vec<f64> = t
                .iter()
                .map(|&ti| (2.0 * std::f64::consts::PI * ti / period).sin())
                .collect();
            let found = naiveperiod(&s, &t).unwrap();
            assert!(
                (found - period).abs() / period < 0.02,
                "period {period} detected as {found}"
            );
        }
    }

    #[test]
    fn flat_and_short_series_have_no_period() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(naiveperiod(&vec![2.5; 100], &t), None);
        assert_eq!(naiveperiod(&[1.0, 2.0], &[0.0, 1.0]), None);
        let series = integrate_predator_prey(&unit_params(), 1.0, 1.0, 10.0, 0.1).unwrap();
        assert_eq!(naiveperiod(series.channel("y").unwrap(), &series.t), None);
    }

    #[test]
    fn rmsd_known_values() {
        assert_eq!(rmsd(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let v = rmsd(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - (12.5f64).sqrt()).abs() < 1e-12);
        assert_eq!(rmsd(&[60.0], &[72.0]).unwrap(), 12.0);
        assert!(rmsd(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmsd(&[], &[]).is_err());
    }

    #[test]
    fn nrmsd_known_values() {
        let v = nrmsd(&[73.0], &[72.0]).unwrap();
        assert!((v - 1.0 / 72.0).abs() < 1e-12);
        assert_eq!(nrmsd(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(nrmsd(&[1.0, 2.0], &[3.0, 3.0]).is_err());
        assert!(nrmsd(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn dtw_known_values() {
        assert_eq!(dtw_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(dtw_distance(&[0.0, 1.0, 2.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(dtw_distance(&[5.0], &[7.0]).unwrap(), 2.0);
        assert!(dtw_distance(&[], &[1.0]).is_err());
    }

    /// Exhaustive minimum over all monotone alignments.
    fn dtw_oracle(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
        let local = (a[i] - b[j]).abs();
        if i == a.len() - 1 && j == b.len() - 1 {
            return local;
        }
        let mut best = f64::INFINITY;
        if i + 1 < a.len() {
            best = best.min(dtw_oracle(a, b, i + 1, j));
        }
        if j + 1 < b.len() {
            best = best.min(dtw_oracle(a, b, i, j + 1));
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            best = best.min(dtw_oracle(a, b, i + 1, j + 1));
        }
        local + best
    }

    proptest! {
        #[test]
        fn dtw_matches_the_alignment_oracle(
            a in proptest::collection::vec(-10.0f64..10.0, 1..6),
            b in proptest::collection::vec(-10.0f64..10.0, 1..6),
        ) {
            let fast = dtw_distance(&a, &b).unwrap();
            let slow = dtw_oracle(&a, &b, 0, 0);
            prop_assert!((fast - slow).abs() < 1e-9);
        }

        #[test]
        fn dtw_is_symmetric(
            a in proptest::collection::vec(-10.0f64..10.0, 1..8),
            b in proptest::collection::vec(-10.0f64..10.0, 1..8),
        ) {
            prop_assert_eq!(dtw_distance(&a, &b).unwrap(), dtw_distance(&b, &a).unwrap());
        }

        #[test]
        fn nrmsd_is_scale_invariant(
            a in proptest::collection::vec(-10.0f64..10.0, 2..8),
            c in 0.1f64..100.0,
        ) {
            let rng = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - a.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(rng > 1e-6);
            let b: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
            let ca: Vec<f64> = a.iter().map(|v| c * v).collect();
            let cb: Vec<f64> = b.iter().map(|v| c * v).collect();
            let plain = nrmsd(&a, &b).unwrap();
            let scaled = nrmsd(&ca, &cb).unwrap();
            prop_assert!((plain - scaled).abs() < 1e-9 * (1.0 + plain));
        }
    }

    #[test]
    fn equilibrium_parameters_cost_the_penalty() {
        assert_eq!(period_tuning_cost(&unit_params(), 24.0), PENALTY);
    }

    #[test]
    fn tabulated_oscillations_land_near_their_targets() {
        let rows = [
            (12.0, PPParams::new(1.798102, 1.618035, 1.192361, 1.453045), 0.05),
            (24.0, PPParams::new(0.675586, 1.375913, 1.169076, 0.8311187), 0.05),
            (48.0, PPParams::new(0.4558475, 0.4602389, 1.192546, 0.5483637), 0.1),
            (72.0, PPParams::new(0.3297914, 0.4675479, 1.650108, 0.778639), 0.05),
        ];
        for (target, p, bound) in rows {
            let cost = period_tuning_cost(&p, target);
            assert!(
                cost <= bound,
                "target {target}: cost {cost} exceeds {bound}"
            );
        }
    }

    #[test]
    fn demo_series_counts_samples_not_time() {
        let p = PPParams::new(0.3297914, 0.4675479, 1.650108, 0.778639);
        let series = period_demo_series(&p, 72.0).unwrap();
        assert_eq!(series.t[0], 0.0);
        assert_eq!(series.t[1], 1.0);
        // 4·72 time units at dt 0.1 is 2881 points; every 3rd remains.
        assert_eq!(series.len(), 961);
        let detected = naiveperiod(series.channel("y").unwrap(), &series.t).unwrap();
        assert!((detected - 72.0).abs() / 72.0 < 0.05);
    }

    #[test]
    fn doubling_time_band_is_closed() {
        assert_eq!(doubling_time_cost(52.0, 42.0, 62.0, 52.0), 0.0);
        assert_eq!(doubling_time_cost(42.0, 42.0, 62.0, 52.0), 0.0);
        assert_eq!(doubling_time_cost(70.0, 42.0, 62.0, 52.0), 18.0);
    }

    #[test]
    fn series_csv_and_validation() {
        let series = TimeSeries::new(
            vec![0.0, 1.0],
            vec![("y".to_string(), vec![1.5, 2.5])],
        )
        .unwrap();
        assert_eq!(series.to_csv(), "t,y\n0,1.5\n1,2.5\n");
        assert_eq!(series.channel("y").unwrap(), &[1.5, 2.5]);
        assert!(series.channel("z").is_none());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![]).is_err());
        assert!(
            TimeSeries::new(vec![0.0, 1.0], vec![("y".to_string(), vec![1.0])]).is_err()
        );
    }
}
