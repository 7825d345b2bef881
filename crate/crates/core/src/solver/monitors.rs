//! Running estimates of the global-existence monitors on the
//! `(tau, vartheta)` grid, and the verdicts derived from them.

use serde::Serialize;

use crate::dynamics::{CharacteristicState, Vec4};

/// Streaming accumulator fed one time level at a time.
#[derive(Debug, Clone)]
pub struct MonitorAccumulator {
    h: f64,
    shift: Option<usize>,
    periodic: bool,
    n: usize,
    s00: Vec4,
    started: bool,
    prev_row_qv: f64,
    prev_row_f: [f64; 4],
    prev_abs: Vec<[f64; 8]>,
    /// sup over tau of the largest sampled |P^c|, |Q^c|
    pub v_inf: f64,
    pub v_inf_initial: f64,
    /// sup over tau of max_c int |P^c| dvartheta (and Q)
    pub v1: f64,
    pub v1_initial: f64,
    /// L1 of the initial P and Q separately, per component
    pub initial_l1_p: [f64; 4],
    pub initial_l1_q: [f64; 4],
    vertical: Vec<[f64; 8]>,
    lines_p: Vec<[f64; 4]>,
    lines_q: Vec<[f64; 4]>,
    pub q_v: f64,
    /// int int |F^c| over the computed region
    pub source_l1: [f64; 4],
    pub max_s_spatial_shift: f64,
    pub max_s_time_shift: f64,
    pub time: f64,
}

fn abs8(st: &CharacteristicState) -> [f64; 8] {
    let mut a = [0.0; 8];
    for c in 0..4 {
        a[c] = st.p[c].abs();
        a[4 + c] = st.q[c].abs();
    }
    a
}

impl MonitorAccumulator {
    /// `h` is the `vartheta` spacing, `shift` the number of nodes a
    /// characteristic moves per step when the grid is aligned, and `s00`
    /// the initial position at the anchor point.
    pub fn new(n: usize, h: f64, shift: Option<usize>, periodic: bool, s00: Vec4) -> Self {
        let line_len = n;
        MonitorAccumulator {
            h,
            shift,
            periodic,
            n,
            s00,
            started: false,
            prev_row_qv: 0.0,
            prev_row_f: [0.0; 4],
            prev_abs: vec![[0.0; 8]; n],
            v_inf: 0.0,
            v_inf_initial: 0.0,
            v1: 0.0,
            v1_initial: 0.0,
            initial_l1_p: [0.0; 4],
            initial_l1_q: [0.0; 4],
            vertical: vec![[0.0; 8]; n],
            lines_p: vec![[0.0; 4]; line_len],
            lines_q: vec![[0.0; 4]; line_len],
            q_v: 0.0,
            source_l1: [0.0; 4],
            max_s_spatial_shift: 0.0,
            max_s_time_shift: 0.0,
            time: 0.0,
        }
    }

    fn weight(&self, j: usize, lo: usize, hi: usize) -> f64 {
        if !self.periodic && (j == lo || j == hi) {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Feeds the level reached after a step of length `dtau` (zero for the
    /// initial level) covering nodes `lo..=hi`. `step` counts aligned steps
    /// and is used to follow characteristics across levels.
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        dtau: f64,
        step: Option<usize>,
        lo: usize,
        hi: usize,
        states: &[CharacteristicState],
        sources: &[Vec4],
    ) {
        let mut l1 = [0.0f64; 8];
        let mut row_qv = 0.0;
        let mut row_f = [0.0; 4];
        let mut vmax: f64 = 0.0;
        for j in lo..=hi {
            let st = &states[j];
            let w = self.weight(j, lo, hi);
            let a = abs8(st);
            for c in 0..8 {
                l1[c] += w * a[c];
                vmax = vmax.max(a[c]);
            }
            let sp: f64 = a[..4].iter().sum();
            let sq: f64 = a[4..].iter().sum();
            row_qv += w * sp * sq;
            for c in 0..4 {
                row_f[c] += w * sources[j][c].abs();
            }
            let ds0 = (st.s[0] - self.s00[0]).abs();
            let dsx = (1..4).map(|c| (st.s[c] - self.s00[c]).abs()).fold(0.0, f64::max);
            self.max_s_time_shift = self.max_s_time_shift.max(ds0);
            self.max_s_spatial_shift = self.max_s_spatial_shift.max(dsx);
        }
        let v1 = l1.iter().copied().fold(0.0, f64::max);
        self.v_inf = self.v_inf.max(vmax);
        self.v1 = self.v1.max(v1);
        if !self.started {
            self.started = true;
            self.v_inf_initial = vmax;
            self.v1_initial = v1;
            self.initial_l1_p.copy_from_slice(&l1[..4]);
            self.initial_l1_q.copy_from_slice(&l1[4..]);
            for j in lo..=hi {
                self.prev_abs[j] = abs8(&states[j]);
            }
            self.prev_row_qv = row_qv;
            self.prev_row_f = row_f;
            return;
        }
        self.time += dtau;
        self.q_v += 0.5 * dtau * (self.prev_row_qv + row_qv);
        for c in 0..4 {
            self.source_l1[c] += 0.5 * dtau * (self.prev_row_f[c] + row_f[c]);
        }
        let n = self.n;
        let k = self.shift;
        let mut current = vec![[0.0; 8]; 0];
        current.reserve(hi + 1 - lo);
        for j in lo..=hi {
            let a = abs8(&states[j]);
            for c in 0..8 {
                self.vertical[j][c] += 0.5 * dtau * (self.prev_abs[j][c] + a[c]);
            }
            if let (Some(k), Some(step)) = (k, step) {
                // P is integrated along vartheta + tau = const (foot at j + k),
                // Q along vartheta - tau = const (foot at j - k)
                let (lp, lq, foot_p, foot_q) = if self.periodic {
                    let sk = (step * k) % n;
                    ((j + sk) % n, (j + n - sk) % n, Some((j + k) % n), Some((j + n - k % n) % n))
                } else {
                    (j + step * k, j.wrapping_sub(step * k), Some(j + k).filter(|&x| x < n), j.checked_sub(k))
                };
                if let Some(fp) = foot_p {
                    if lp < self.lines_p.len() {
                        for c in 0..4 {
                            self.lines_p[lp][c] += 0.5 * dtau * (self.prev_abs[fp][c] + a[c]);
                        }
                    }
                }
                if let Some(fq) = foot_q {
                    if lq < self.lines_q.len() {
                        for c in 0..4 {
                            self.lines_q[lq][c] += 0.5 * dtau * (self.prev_abs[fq][4 + c] + a[4 + c]);
                        }
                    }
                }
            }
            current.push(a);
        }
        for (off, a) in current.into_iter().enumerate() {
            self.prev_abs[lo + off] = a;
        }
        self.prev_row_qv = row_qv;
        self.prev_row_f = row_f;
    }

    pub fn finish(&self, epsilon: Option<f64>) -> DiagnosticsReport {
        let vbar1 = self.vertical.iter().flat_map(|a| a.iter()).copied().fold(0.0, f64::max);
        let vtilde1 = self.shift.map(|_| {
            self.lines_p.iter().chain(self.lines_q.iter()).flat_map(|a| a.iter()).copied().fold(0.0, f64::max)
        });
        let f_total: f64 = self.source_l1.iter().sum();
        let p0: f64 = self.initial_l1_p.iter().sum();
        let q0: f64 = self.initial_l1_q.iter().sum();
        let product_bound = (p0 + f_total) * (q0 + f_total);
        let max_f = self.source_l1.iter().copied().fold(0.0, f64::max);
        let mut verdicts = vec![
            Verdict::new("sup-bound", self.v_inf, 2.0 * self.v_inf_initial, "sup |P|,|Q| <= 2 sup at t = 0"),
            Verdict::new("l1-bound", self.v1, 2.0 * self.v1_initial, "max_c int |P^c|,|Q^c| <= 2 x initial"),
            Verdict::new(
                "l1-growth",
                self.v1,
                self.v1_initial + max_f,
                "L1 at any time <= initial L1 + space-time L1 of the source",
            ),
        ];
        if !self.periodic {
            verdicts.push(Verdict::new(
                "interaction-bound",
                self.q_v,
                product_bound,
                "interaction integral <= (L1 P0 + int|F|)(L1 Q0 + int|F|)",
            ));
        }
        let (k0, k1) = match epsilon {
            Some(e) if e > 0.0 => (Some(self.v1_initial / e), Some(self.q_v / (e * e))),
            _ => (None, None),
        };
        DiagnosticsReport {
            time: self.time,
            v_inf: self.v_inf,
            v_inf_initial: self.v_inf_initial,
            v1: self.v1,
            v1_initial: self.v1_initial,
            vbar1,
            vtilde1,
            q_v: self.q_v,
            source_l1: self.source_l1,
            max_s_spatial_shift: self.max_s_spatial_shift,
            max_s_time_shift: self.max_s_time_shift,
            epsilon,
            k0,
            k1,
            verdicts,
        }
    }
}

/// A measured quantity compared with a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
    pub description: String,
}

impl Verdict {
    pub fn new(name: &str, measured: f64, bound: f64, description: &str) -> Self {
        Verdict {
            name: name.to_string(),
            measured,
            bound,
            passed: measured <= bound * (1.0 + 1e-12) + 1e-300,
            description: description.to_string(),
        }
    }
}

/// Monitor values at the end of a run with their verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub time: f64,
    /// `sup |P^c|, |Q^c|` over the run and at `t = 0`.
    pub v_inf: f64,
    pub v_inf_initial: f64,
    /// `sup_tau max_c int |P^c| dvartheta` (same for `Q`).
    pub v1: f64,
    pub v1_initial: f64,
    /// `max_c sup_vartheta int_0^T |P^c| dtau`.
    pub vbar1: f64,
    /// Same along the characteristic lines; only on aligned grids.
    pub vtilde1: Option<f64>,
    /// `sum_{c,d} int int |P^c| |Q^d|`.
    pub q_v: f64,
    pub source_l1: [f64; 4],
    pub max_s_spatial_shift: f64,
    pub max_s_time_shift: f64,
    pub epsilon: Option<f64>,
    /// `v1_initial / epsilon` and `q_v / epsilon^2`.
    pub k0: Option<f64>,
    pub k1: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(p: f64, q: f64) -> CharacteristicState {
        CharacteristicState { s: [0.0; 4], p: [p, 0.0, 0.0, 0.0], q: [q, 0.0, 0.0, 0.0] }
    }

    #[test]
    fn separated_pulses_do_not_interact() {
        // P supported on the left, Q on the right, moving apart
        let n = 40;
        let k = 1;
        let mut acc = MonitorAccumulator::new(n, 1.0, Some(k), false, [0.0; 4]);
        let mut states: Vec<CharacteristicState> =
            (0..n).map(|j| st(if j == 10 { 1.0 } else { 0.0 }, if j == 30 { 1.0 } else { 0.0 })).collect();
        let src = vec![[0.0; 4]; n];
        acc.record(0.0, None, 0, n - 1, &states, &src);
        for step in 1..5 {
            let mut next = states.clone();
            for j in 0..n {
                next[j].p[0] = if j >= k { states[j - k].p[0] } else { 0.0 };
                next[j].q[0] = if j + k < n { states[j + k].q[0] } else { 0.0 };
            }
            states = next;
            acc.record(1.0, Some(step), step * k, n - 1 - step * k, &states, &src);
        }
        let rep = acc.finish(Some(1.0));
        assert_eq!(rep.q_v, 0.0);
        assert_eq!(rep.v_inf, 1.0);
        assert!((rep.v1 - 1.0).abs() < 1e-15);
        // each transverse line and each vertical line meets a pulse once
        assert!((rep.vtilde1.unwrap() - 1.0).abs() < 1e-12);
        assert!((rep.vbar1 - 1.0).abs() < 1e-12);
        assert!(rep.all_passed());
    }
}
