//! Temporary diagnostics, removed once the cascade tuning is settled.
#![cfg(test)]

use super::testutil::run_stiff_grid;
use super::*;
use crate::plant::PlantParams;

fn probe(label: &str, p_set: f64, q_set: f64, dt: f64, t_end: f64) {
    let p = PlantParams::default();
    let mut cfg = FormingConfig::droop_defaults(&p, 10.0 * std::f64::consts::PI);
    cfg.p_set = p_set;
    cfg.q_set = q_set;
    let mut ctrl = FormingControl::new(FormingKind::Droop, cfg, &p).unwrap();
    let mut k = 0usize;
    let stride = (0.2 / dt) as usize;
    println!("--- {label} dt={dt}");
    let run = run_stiff_grid(
        |meas, t, dtt| {
            let cmd = ctrl.step(meas, t, dtt);
            if k % stride == 0 {
                println!(
                    "t={t:.2} |v|={:8.2} vq={:8.3} vref={:8.2} p={:10.1} q={:10.1} sat={}",
                    meas.v_c.amplitude(),
                    meas.v_c.q,
                    ctrl.voltage_reference(),
                    meas.p,
                    meas.q,
                    cmd.saturated
                );
            }
            k += 1;
            cmd
        },
        t_end,
        dt,
    );
    println!(
        "final |v|={:.2} vref={:.2} p={:.1} q={:.1}",
        run.meas.v_c.amplitude(),
        ctrl.voltage_reference(),
        run.meas.p,
        run.meas.q
    );
}

#[test]
fn diag_droop_zero_setpoint() {
    probe("zero setpoint dt=5e-5", 0.0, 0.0, 5e-5, 3.0);
}

#[derive(Clone, Copy)]
struct Knobs {
    ig_ff: f64,
    cap_dec: f64,
    tau_c: f64,
    k_p_droop: f64,
}

fn probe_knobs_dt(label: &str, kn: &Knobs, dt: f64, t_end: f64) {
    use crate::plant::DqPair;
    let p = PlantParams::default();
    let w = 10.0 * std::f64::consts::PI;
    let mut u_p = 0.0f64;
    let mut u_q = 0.0f64;
    let mut xi = DqPair::ZERO;
    let mut sigma = DqPair::ZERO;
    let cg = CurrentLoopGains::from_time_constant(&p, kn.tau_c);
    let vg = VoltageLoopGains::default();
    let run = run_stiff_grid(
        |meas, _t, dt| {
            let omega = p.omega_0 + kn.k_p_droop * u_p;
            let v_ref = DqPair::new(p.v_0 + 2e-4 * u_q, 0.0);
            let ev = v_ref - meas.v_c;
            let b_c = p.omega_0 * p.c_i * kn.cap_dec;
            let i_l_ref = DqPair::new(
                vg.k_p * ev.d + vg.k_i * xi.d - b_c * meas.v_c.q + kn.ig_ff * meas.i_g.d,
                vg.k_p * ev.q + vg.k_i * xi.q + b_c * meas.v_c.d + kn.ig_ff * meas.i_g.q,
            );
            let ei = i_l_ref - meas.i_l;
            let x_l = p.omega_0 * p.l_i;
            let u = DqPair::new(
                cg.k_p * ei.d + cg.k_i * sigma.d - x_l * meas.i_l.q + meas.v_c.d,
                cg.k_p * ei.q + cg.k_i * sigma.q + x_l * meas.i_l.d + meas.v_c.q,
            );
            let (m, saturated) = clamp_modulation(u * (2.0 / p.v_dc));
            let a = (-w * dt).exp();
            u_p += (1.0 - a) * ((0.0 - meas.p) - u_p);
            u_q += (1.0 - a) * ((0.0 - meas.q) - u_q);
            xi = xi + ev * dt;
            sigma = sigma + ei * dt;
            ControlCommand { m, omega, saturated }
        },
        t_end,
        dt,
    );
    println!(
        "{label}: |v|={:8.2} q={:10.1} p={:10.1} sat={}",
        run.meas.v_c.amplitude(),
        run.meas.q,
        run.meas.p,
        run.last.saturated
    );
}

fn probe_knobs(label: &str, kn: &Knobs) {
    probe_knobs_dt(label, kn, 5e-5, 2.0);
}

#[test]
fn diag_knob_bisection() {
    let base = Knobs { ig_ff: 1.0, cap_dec: 1.0, tau_c: 5e-4, k_p_droop: 2e-4 };
    probe_knobs("baseline          ", &base);
    probe_knobs("no ig ff          ", &Knobs { ig_ff: 0.0, ..base });
    probe_knobs("no cap decoupling ", &Knobs { cap_dec: 0.0, ..base });
    probe_knobs("tau_c 2ms         ", &Knobs { tau_c: 2e-3, ..base });
    probe_knobs("tau_c 0.1ms       ", &Knobs { tau_c: 1e-4, ..base });
    probe_knobs("droop gain x0.1   ", &Knobs { k_p_droop: 2e-5, ..base });
    probe_knobs("droop gain 0      ", &Knobs { k_p_droop: 0.0, ..base });
    probe_knobs("no ff, tau 2ms    ", &Knobs { ig_ff: 0.0, tau_c: 2e-3, ..base });
}

fn probe_filtered_ff(label: &str, w_ff: f64, dt: f64) {
    use crate::plant::DqPair;
    let p = PlantParams::default();
    let w = 10.0 * std::f64::consts::PI;
    let mut u_p = 0.0f64;
    let mut u_q = 0.0f64;
    let mut xi = DqPair::ZERO;
    let mut sigma = DqPair::ZERO;
    let mut ff = DqPair::ZERO;
    let cg = CurrentLoopGains::from_time_constant(&p, 5e-4);
    let vg = VoltageLoopGains::default();
    let run = run_stiff_grid(
        |meas, _t, dtt| {
            let omega = p.omega_0 + 2e-4 * u_p;
            let v_ref = DqPair::new(p.v_0 + 2e-4 * u_q, 0.0);
            let ev = v_ref - meas.v_c;
            let b_c = p.omega_0 * p.c_i;
            let i_l_ref = DqPair::new(
                vg.k_p * ev.d + vg.k_i * xi.d - b_c * meas.v_c.q + ff.d,
                vg.k_p * ev.q + vg.k_i * xi.q + b_c * meas.v_c.d + ff.q,
            );
            let ei = i_l_ref - meas.i_l;
            let x_l = p.omega_0 * p.l_i;
            let u = DqPair::new(
                cg.k_p * ei.d + cg.k_i * sigma.d - x_l * meas.i_l.q + meas.v_c.d,
                cg.k_p * ei.q + cg.k_i * sigma.q + x_l * meas.i_l.d + meas.v_c.q,
            );
            let (m, saturated) = clamp_modulation(u * (2.0 / p.v_dc));
            let a = (-w * dtt).exp();
            u_p += (1.0 - a) * ((0.0 - meas.p) - u_p);
            u_q += (1.0 - a) * ((0.0 - meas.q) - u_q);
            let aff = (-w_ff * dtt).exp();
            ff = ff + (meas.i_g - ff) * (1.0 - aff);
            xi = xi + ev * dt;
            sigma = sigma + ei * dt;
            ControlCommand { m, omega, saturated }
        },
        2.0,
        dt,
    );
    println!(
        "{label}: |v|={:8.2} q={:10.1} p={:10.1} sat={}",
        run.meas.v_c.amplitude(),
        run.meas.q,
        run.meas.p,
        run.last.saturated
    );
}

fn probe_vgains(label: &str, k_pv: f64, k_iv: f64, tau_c: f64, p_set: f64, t_end: f64) {
    use crate::plant::DqPair;
    let p = PlantParams::default();
    let w = 10.0 * std::f64::consts::PI;
    let mut u_p = 0.0f64;
    let mut u_q = 0.0f64;
    let mut xi = DqPair::ZERO;
    let mut sigma = DqPair::ZERO;
    let cg = CurrentLoopGains::from_time_constant(&p, tau_c);
    let run = run_stiff_grid(
        |meas, _t, dt| {
            let omega = p.omega_0 + 2e-4 * u_p;
            let v_ref = DqPair::new(p.v_0 + 2e-4 * u_q, 0.0);
            let ev = v_ref - meas.v_c;
            let b_c = p.omega_0 * p.c_i;
            let i_l_ref = DqPair::new(
                k_pv * ev.d + k_iv * xi.d - b_c * meas.v_c.q + meas.i_g.d,
                k_pv * ev.q + k_iv * xi.q + b_c * meas.v_c.d + meas.i_g.q,
            );
            let ei = i_l_ref - meas.i_l;
            let x_l = p.omega_0 * p.l_i;
            let u = DqPair::new(
                cg.k_p * ei.d + cg.k_i * sigma.d - x_l * meas.i_l.q + meas.v_c.d,
                cg.k_p * ei.q + cg.k_i * sigma.q + x_l * meas.i_l.d + meas.v_c.q,
            );
            let (m, saturated) = clamp_modulation(u * (2.0 / p.v_dc));
            let a = (-w * dt).exp();
            u_p += (1.0 - a) * ((p_set - meas.p) - u_p);
            u_q += (1.0 - a) * ((0.0 - meas.q) - u_q);
            xi = xi + ev * dt;
            sigma = sigma + ei * dt;
            ControlCommand { m, omega, saturated }
        },
        t_end,
        5e-5,
    );
    println!(
        "{label}: |v|={:8.2} q={:10.1} p={:10.1} sat={}",
        run.meas.v_c.amplitude(),
        run.meas.q,
        run.meas.p,
        run.last.saturated
    );
}

fn closed_loop_rhs(x: &[f64], dx: &mut [f64], ff: f64, k_pv: f64, k_iv: f64, tau_c: f64) {
    use crate::plant::{inverter_derivatives, DqPair, InverterState};
    let p = PlantParams::default();
    let w = 10.0 * std::f64::consts::PI;
    let s = InverterState::from_slice(&x[..7]);
    let (u_p, u_q) = (x[7], x[8]);
    let xi = DqPair::new(x[9], x[10]);
    let sigma = DqPair::new(x[11], x[12]);
    let cg = CurrentLoopGains::from_time_constant(&p, tau_c);
    let meas = LocalMeasurements::from_global(&s);
    let omega = p.omega_0 + 2e-4 * u_p;
    let v_ref = DqPair::new(p.v_0 + 2e-4 * u_q, 0.0);
    let ev = v_ref - meas.v_c;
    let b_c = p.omega_0 * p.c_i;
    let i_l_ref = DqPair::new(
        k_pv * ev.d + k_iv * xi.d - b_c * meas.v_c.q + ff * meas.i_g.d,
        k_pv * ev.q + k_iv * xi.q + b_c * meas.v_c.d + ff * meas.i_g.q,
    );
    let ei = i_l_ref - meas.i_l;
    let x_l = p.omega_0 * p.l_i;
    let u = DqPair::new(
        cg.k_p * ei.d + cg.k_i * sigma.d - x_l * meas.i_l.q + meas.v_c.d,
        cg.k_p * ei.q + cg.k_i * sigma.q + x_l * meas.i_l.d + meas.v_c.q,
    );
    let m = u * (2.0 / p.v_dc);
    let v_pcc = DqPair::new(p.v_0, 0.0);
    let (der, _) = inverter_derivatives(&s, m, omega, v_pcc, &p);
    der.write_to(&mut dx[..7]);
    dx[7] = w * ((0.0 - meas.p) - u_p);
    dx[8] = w * ((0.0 - meas.q) - u_q);
    dx[9] = ev.d;
    dx[10] = ev.q;
    dx[11] = ei.d;
    dx[12] = ei.q;
}

// complex shifted inverse iteration on the bordered real 2n system;
// scans a shift grid and prints converged distinct modes, worst first
fn scan_complex_modes(a: &crate::numerics::Matrix, names: &[&str]) {
    use crate::numerics::Matrix;
    let n = a.rows();
    let mut found: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    let shifts: Vec<(f64, f64)> = [0.0, 25.0, 50.0, 150.0, 400.0, -15.0, -60.0, -150.0]
        .iter()
        .flat_map(|&re| {
    // im spacing must stay under the typical mode separation or inverse
    // iteration converges to a neighbour and a mode is silently missed
            [
                0.0, 15.0, 35.0, 70.0, 150.0, 350.0, 700.0, 1200.0, 2000.0, 2700.0, 3100.0,
                3456.0, 3800.0, 4200.0, 4700.0, 5500.0, 8000.0, 15000.0,
            ]
            .iter()
            .map(move |&im| (re, im))
            .collect::<Vec<_>>()
        })
        .collect();
    for &(mut sr, mut si) in &shifts {
        let mut w = vec![0.37f64; 2 * n];
        w[0] = 1.0;
        let mut last = (f64::NAN, f64::NAN);
        for it in 0..60 {
            let mut big = Matrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    big[(i, j)] = a[(i, j)];
                    big[(n + i, n + j)] = a[(i, j)];
                }
                big[(i, i)] -= sr;
                big[(n + i, n + i)] -= sr;
                big[(i, n + i)] = si;
                big[(n + i, i)] = -si;
            }
            let next = match big.solve(&w) {
                Ok(v) => v,
                Err(_) => break,
            };
            let norm: f64 = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            w = next.iter().map(|v| v / norm).collect();
            // rayleigh quotient in complex arithmetic: rho = w* A w / w* w
            let (wr, wi) = w.split_at(n);
            let ar = a.mul_vec(wr);
            let ai = a.mul_vec(wi);
            let mut num_r = 0.0;
            let mut num_i = 0.0;
            for i in 0..n {
                // conj(w_i) * (Aw)_i
                num_r += wr[i] * ar[i] + wi[i] * ai[i];
                num_i += wr[i] * ai[i] - wi[i] * ar[i];
            }
            if it % 3 == 2 {
                sr = num_r;
                si = num_i;
            }
            if (num_r - last.0).abs() < 1e-9 * (1.0 + num_r.abs())
                && (num_i - last.1).abs() < 1e-9 * (1.0 + num_i.abs())
            {
                break;
            }
            last = (num_r, num_i);
        }
        let (wr, wi) = w.split_at(n);
        let ar = a.mul_vec(wr);
        let ai = a.mul_vec(wi);
        let mut res = 0.0f64;
        for i in 0..n {
            let rr = ar[i] - (sr * wr[i] - si * wi[i]);
            let ri = ai[i] - (sr * wi[i] + si * wr[i]);
            res += rr * rr + ri * ri;
        }
        res = res.sqrt();
        if res < 1e-6 {
            let si_abs = si.abs();
            if !found
                .iter()
                .any(|(r, im, _)| (r - sr).abs() < 0.05 && (im - si_abs).abs() < 0.05)
            {
                let mag: Vec<f64> = (0..n)
                    .map(|i| (wr[i] * wr[i] + wi[i] * wi[i]).sqrt())
                    .collect();
                found.push((sr, si_abs, mag));
            }
        }
    }
    found.sort_by(|u, v| v.0.partial_cmp(&u.0).unwrap());
    for (re, im, mag) in found.iter().take(6) {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| mag[j].partial_cmp(&mag[i]).unwrap());
        let comp: Vec<String> = idx
            .iter()
            .take(4)
            .map(|&i| format!("{} {:.3}", names[i], mag[i]))
            .collect();
        println!("    eig {re:9.3} +-{im:8.3}j  [{}]", comp.join(", "));
    }
}

#[test]
fn diag_eigenvalues() {
    use crate::numerics::{poly_roots, Matrix};
    let p = PlantParams::default();
    let n = 13;
    // equilibrium: zero transfer, i_l = j w0 C v, sigma_q carries R*i_l drop
    let b_c = p.omega_0 * p.c_i;
    let i_lq = b_c * p.v_0;
    for &(label, ff, k_pv, k_iv, tau_c) in &[
        ("kv=0.40/300 tc=1.0e-4", 1.0, 0.40, 300.0, 1e-4),
        ("kv=0.30/150 tc=1.0e-4", 1.0, 0.30, 150.0, 1e-4),
    ] {
        let mut xeq = vec![0.0; n];
        xeq[1] = i_lq;
        xeq[2] = p.v_0;
        xeq[12] = i_lq * tau_c;
        // confirm equilibrium
        let mut dx = vec![0.0; n];
        closed_loop_rhs(&xeq, &mut dx, ff, k_pv, k_iv, tau_c);
        let resid: f64 = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
        // scaled central-difference jacobian
        let scales: Vec<f64> = vec![
            10.0, 10.0, 400.0, 400.0, 10.0, 10.0, 0.01, 1e4, 1e4, 0.1, 0.1, 0.01, 0.01,
        ];
        let mut a = Matrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-6 * scales[j];
            let mut xp = xeq.clone();
            let mut xm = xeq.clone();
            xp[j] += h;
            xm[j] -= h;
            let mut dp = vec![0.0; n];
            let mut dm = vec![0.0; n];
            closed_loop_rhs(&xp, &mut dp, ff, k_pv, k_iv, tau_c);
            closed_loop_rhs(&xm, &mut dm, ff, k_pv, k_iv, tau_c);
            for i in 0..n {
                // balance: A_ij * scale_j / scale_i keeps eigenvalues, evens magnitudes
                a[(i, j)] = (dp[i] - dm[i]) / (2.0 * h) * scales[j] / scales[i];
            }
        }
        println!("{label} eq_resid={resid:.2e}");
        scan_complex_modes(
            &a,
            &[
                "i_l.d", "i_l.q", "v_c.d", "v_c.q", "i_g.d", "i_g.q", "theta", "u_p", "u_q",
                "xi.d", "xi.q", "sg.d", "sg.q",
            ],
        );
    }
}

// conventional GFL closed loop, continuous time, PLL frame = plant theta.
// states: i_l(2) v_c(2) i_g(2) theta x_i sigma(2)
fn gfl_rhs(
    x: &[f64],
    dx: &mut [f64],
    k_p_pll: f64,
    k_i_pll: f64,
    tau_c: f64,
    i_ref: (f64, f64),
    g_d: f64,
    w_ad: f64,
) {
    use crate::plant::{inverter_derivatives, DqPair, InverterState};
    let p = PlantParams::default();
    let s = InverterState::from_slice(&x[..7]);
    let x_i = x[7];
    let sigma = DqPair::new(x[8], x[9]);
    let v_bar = DqPair::new(x[10], x[11]);
    let cg = CurrentLoopGains::from_time_constant(&p, tau_c);
    let meas = LocalMeasurements::from_global(&s);
    let omega = p.omega_0 + k_p_pll * meas.v_c.q + x_i;
    let b_c = p.c_i * omega;
    let i_ref = DqPair::new(i_ref.0, i_ref.1);
    let ring = meas.v_c - v_bar;
    let i_l_ref = DqPair::new(
        i_ref.d - b_c * meas.v_c.q - g_d * ring.d,
        i_ref.q + b_c * meas.v_c.d - g_d * ring.q,
    );
    let ei = i_l_ref - meas.i_l;
    let x_l = p.omega_0 * p.l_i;
    let u = DqPair::new(
        cg.k_p * ei.d + cg.k_i * sigma.d - x_l * meas.i_l.q + meas.v_c.d,
        cg.k_p * ei.q + cg.k_i * sigma.q + x_l * meas.i_l.d + meas.v_c.q,
    );
    let m = u * (2.0 / p.v_dc);
    let v_pcc = DqPair::new(p.v_0, 0.0);
    let (der, _) = inverter_derivatives(&s, m, omega, v_pcc, &p);
    der.write_to(&mut dx[..7]);
    dx[7] = k_i_pll * meas.v_c.q;
    dx[8] = ei.d;
    dx[9] = ei.q;
    dx[10] = w_ad * ring.d;
    dx[11] = w_ad * ring.q;
}

#[test]
fn diag_gfl_eigs() {
    use crate::numerics::Matrix;
    let p = PlantParams::default();
    let n = 12;
    let i_full = (17.05, -3.41);
    for &(label, k_p_pll, k_i_pll, tau_c, lvl, g_d, w_ad) in &[
        ("gd .02 i100%", 0.5, 50.0, 1e-4, 1.0, 0.02, 400.0),
        ("gd .04 i100%", 0.5, 50.0, 1e-4, 1.0, 0.04, 400.0),
        ("gd .08 i100%", 0.5, 50.0, 1e-4, 1.0, 0.08, 400.0),
        ("gd .04 i0%  ", 0.5, 50.0, 1e-4, 0.0, 0.04, 400.0),
        ("gd .04 i50% ", 0.5, 50.0, 1e-4, 0.5, 0.04, 400.0),
        ("gd .04 w200 ", 0.5, 50.0, 1e-4, 1.0, 0.04, 200.0),
        ("gd .04 w800 ", 0.5, 50.0, 1e-4, 1.0, 0.04, 800.0),
        ("gd .15 i100%", 0.5, 50.0, 1e-4, 1.0, 0.15, 400.0),
    ] {
        let i_ref = (i_full.0 * lvl, i_full.1 * lvl);
        // phasor guess, then newton
        let b_c = p.omega_0 * p.c_i;
        let mut xeq = vec![0.0; n];
        xeq[0] = i_ref.0;
        xeq[1] = i_ref.1 + b_c * 395.0;
        xeq[2] = 395.0;
        xeq[3] = 0.0;
        xeq[4] = i_ref.0;
        xeq[5] = i_ref.1;
        xeq[6] = 0.0297;
        xeq[8] = i_ref.0 * tau_c;
        xeq[9] = xeq[1] * tau_c;
        xeq[10] = 395.0;
        xeq[11] = 0.0;
        let scales: Vec<f64> = vec![
            10.0, 10.0, 400.0, 400.0, 10.0, 10.0, 0.01, 1.0, 0.01, 0.01, 400.0, 400.0,
        ];
        let mut resid = 0.0;
        for _ in 0..40 {
            let mut f0 = vec![0.0; n];
            gfl_rhs(&xeq, &mut f0, k_p_pll, k_i_pll, tau_c, i_ref, g_d, w_ad);
            resid = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
            if resid < 1e-9 {
                break;
            }
            let mut jac = Matrix::zeros(n, n);
            for j in 0..n {
                let h = 1e-7 * scales[j];
                let mut xp = xeq.clone();
                let mut xm = xeq.clone();
                xp[j] += h;
                xm[j] -= h;
                let mut dp = vec![0.0; n];
                let mut dm = vec![0.0; n];
                gfl_rhs(&xp, &mut dp, k_p_pll, k_i_pll, tau_c, i_ref, g_d, w_ad);
                gfl_rhs(&xm, &mut dm, k_p_pll, k_i_pll, tau_c, i_ref, g_d, w_ad);
                for i in 0..n {
                    jac[(i, j)] = (dp[i] - dm[i]) / (2.0 * h);
                }
            }
            let step = match jac.solve(&f0) {
                Ok(s) => s,
                Err(e) => {
                    println!("{label} newton jac singular: {e}");
                    break;
                }
            };
            for j in 0..n {
                xeq[j] -= step[j];
            }
        }
        // balanced jacobian at the equilibrium
        let mut a = Matrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-6 * scales[j];
            let mut xp = xeq.clone();
            let mut xm = xeq.clone();
            xp[j] += h;
            xm[j] -= h;
            let mut dp = vec![0.0; n];
            let mut dm = vec![0.0; n];
            gfl_rhs(&xp, &mut dp, k_p_pll, k_i_pll, tau_c, i_ref, g_d, w_ad);
            gfl_rhs(&xm, &mut dm, k_p_pll, k_i_pll, tau_c, i_ref, g_d, w_ad);
            for i in 0..n {
                a[(i, j)] = (dp[i] - dm[i]) / (2.0 * h) * scales[j] / scales[i];
            }
        }
        println!(
            "{label} eq_resid={resid:.2e} v_eq=({:.2},{:.2})",
            xeq[2], xeq[3]
        );
        scan_complex_modes(
            &a,
            &[
                "i_l.d", "i_l.q", "v_c.d", "v_c.q", "i_g.d", "i_g.q", "theta", "x_i", "sg.d",
                "sg.q", "vb.d", "vb.q",
            ],
        );
        // brute-force check: linear sim of dx = A x catches any mode the
        // shift scan missed
        let ax = |z: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += a[(i, j)] * z[j];
                }
                out[i] = acc;
            }
            out
        };
        let mut z = vec![1e-3; n];
        let mut t = 0.0;
        let dtl = 1e-5;
        let n0 = (n as f64).sqrt() * 1e-3;
        for _ in 0..200_000usize {
            let k1 = ax(&z);
            let z2: Vec<f64> = (0..n).map(|i| z[i] + 0.5 * dtl * k1[i]).collect();
            let k2 = ax(&z2);
            let z3: Vec<f64> = (0..n).map(|i| z[i] + 0.5 * dtl * k2[i]).collect();
            let k3 = ax(&z3);
            let z4: Vec<f64> = (0..n).map(|i| z[i] + dtl * k3[i]).collect();
            let k4 = ax(&z4);
            for i in 0..n {
                z[i] += dtl / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += dtl;
        }
        let n1 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("    linear sim growth over {t:.1}s: {:.2e}", n1 / n0);
        // the grown state is the unstable eigenvector; fit its sigma and
        // omega from a short continuation
        let s = 1.0 / n1;
        for v in z.iter_mut() {
            *v *= s;
        }
        let mut prev = z[6];
        let mut crossings = 0usize;
        let mut t2 = 0.0;
        let fit_T = 0.02;
        let steps = (fit_T / dtl) as usize;
        for _ in 0..steps {
            let k1 = ax(&z);
            let z2: Vec<f64> = (0..n).map(|i| z[i] + 0.5 * dtl * k1[i]).collect();
            let k2 = ax(&z2);
            let z3: Vec<f64> = (0..n).map(|i| z[i] + 0.5 * dtl * k2[i]).collect();
            let k3 = ax(&z3);
            let z4: Vec<f64> = (0..n).map(|i| z[i] + dtl * k3[i]).collect();
            let k4 = ax(&z4);
            for i in 0..n {
                z[i] += dtl / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t2 += dtl;
            if prev.signum() != z[6].signum() {
                crossings += 1;
            }
            prev = z[6];
        }
        let n2 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sigma_fit = (n2.ln()) / fit_T;
        let omega_fit = crossings as f64 * std::f64::consts::PI / fit_T;
        println!("    missed mode approx {sigma_fit:.1} +- {omega_fit:.1}j");
        let _ = t2;
    }
}

fn probe_gfl(
    label: &str,
    kp: f64,
    ki: f64,
    slew: f64,
    b_c_nominal: bool,
    t_end: f64,
    dt: f64,
    tau_c: f64,
    g_d: f64,
    w_ad: f64,
) {
    use crate::plant::DqPair;
    let p = PlantParams::default();
    let cg = CurrentLoopGains::from_time_constant(&p, tau_c);
    let mut sigma = DqPair::ZERO;
    let mut x_i = 0.0f64;
    let mut i_ref = DqPair::ZERO;
    let mut v_bar = DqPair::new(p.v_0, 0.0);
    let target = DqPair::new(17.05, -3.41);
    let mut first_sat = f64::NAN;
    let mut om_dev = 0.0f64;
    let mut vq_dev = 0.0f64;
    let run = run_stiff_grid(
        |meas, t, dt| {
            let omega = p.omega_0 + kp * meas.v_c.q + x_i;
            let cap = slew * dt;
            i_ref = DqPair::new(
                i_ref.d + (target.d - i_ref.d).clamp(-cap, cap),
                i_ref.q + (target.q - i_ref.q).clamp(-cap, cap),
            );
            let b_c = p.c_i * if b_c_nominal { p.omega_0 } else { omega };
            let ring = meas.v_c - v_bar;
            v_bar = v_bar + ring * (w_ad * dt);
            let i_l_ref = DqPair::new(
                i_ref.d - b_c * meas.v_c.q - g_d * ring.d,
                i_ref.q + b_c * meas.v_c.d - g_d * ring.q,
            );
            let ei = i_l_ref - meas.i_l;
            let x_l = p.omega_0 * p.l_i;
            let u = DqPair::new(
                cg.k_p * ei.d + cg.k_i * sigma.d - x_l * meas.i_l.q + meas.v_c.d,
                cg.k_p * ei.q + cg.k_i * sigma.q + x_l * meas.i_l.d + meas.v_c.q,
            );
            let (m, saturated) = clamp_modulation(u * (2.0 / p.v_dc));
            if saturated && first_sat.is_nan() {
                first_sat = t;
                println!(
                    "  [sat t={t:.4}] |u|={:.0} kp*e=({:.0},{:.0}) ki*sg=({:.0},{:.0}) \
                     xl*il=({:.0},{:.0}) v_c=({:.0},{:.0}) i_ref=({:.1},{:.1}) \
                     i_l=({:.1},{:.1}) om={:.1}",
                    u.amplitude(),
                    cg.k_p * ei.d,
                    cg.k_p * ei.q,
                    cg.k_i * sigma.d,
                    cg.k_i * sigma.q,
                    -x_l * meas.i_l.q,
                    x_l * meas.i_l.d,
                    meas.v_c.d,
                    meas.v_c.q,
                    i_l_ref.d,
                    i_l_ref.q,
                    meas.i_l.d,
                    meas.i_l.q,
                    omega
                );
            }
            if t > 0.8 * t_end {
                om_dev = om_dev.max((omega - p.omega_0).abs());
                vq_dev = vq_dev.max(meas.v_c.q.abs());
            }
            if !saturated {
                x_i += ki * meas.v_c.q * dt;
                sigma = sigma + ei * dt;
            }
            ControlCommand { m, omega, saturated }
        },
        t_end,
        dt,
    );
    println!(
        "{label}: p={:9.1} q={:9.1} |v|={:7.2} v_q={:8.2} om={:7.2} sat={} first_sat={:.4} \
         late|dom|={:.2e} late|vq|={:.2e}",
        run.meas.p,
        run.meas.q,
        run.meas.v_c.amplitude(),
        run.meas.v_c.q,
        run.last.omega,
        run.last.saturated,
        first_sat,
        om_dev,
        vq_dev
    );
}

#[test]
fn diag_gfl_grid() {
    probe_gfl("gd.04 dt5e-5 20s ", 0.5, 50.0, 500.0, false, 20.0, 5e-5, 1e-4, 0.04, 400.0);
    probe_gfl("gd.04 dt5e-6 3s  ", 0.5, 50.0, 500.0, false, 3.0, 5e-6, 1e-4, 0.04, 400.0);
    probe_gfl("gd.04 om0 dt5e-5 ", 0.5, 50.0, 500.0, true, 3.0, 5e-5, 1e-4, 0.04, 400.0);
    probe_gfl("gd.02 dt5e-5 3s  ", 0.5, 50.0, 500.0, false, 3.0, 5e-5, 1e-4, 0.02, 400.0);
}

/// Integrate the continuous closed-loop model (no sampling, no slew) from
/// the quiescent no-load state with the reference already at its target.
/// Separates continuous-model behaviour from discretization effects.
#[test]
fn diag_gfl_continuous() {
    use crate::numerics::{rk4_integrate, OdeSystem};
    let p = PlantParams::default();
    for &(label, tau_c) in &[("cont tc=1e-4", 1e-4), ("cont tc=5e-4", 5e-4)] {
        let mut x = vec![0.0; 12];
        x[1] = p.omega_0 * p.c_i * p.v_0;
        x[2] = p.v_0;
        x[9] = x[1] * tau_c;
        x[10] = p.v_0;
        let sys = OdeSystem::new(12, |_t, x, dx| {
            gfl_rhs(x, dx, 0.5, 50.0, tau_c, (17.05, -3.41), 0.04, 400.0);
        });
        let mut t = 0.0;
        let dt = 1e-5;
        let mut peak = 0.0f64;
        for k in 0..300_000usize {
            let traj = rk4_integrate(&sys, &x, t, t + dt, dt).expect("step");
            x.copy_from_slice(traj.last());
            t += dt;
            let vmag = (x[2] * x[2] + x[3] * x[3]).sqrt();
            peak = peak.max(vmag);
            if k % 50_000 == 0 {
                let om = p.omega_0
                    + 0.5 * (x[3] * (x[6]).cos() - x[2] * (x[6]).sin()) // v_c.q local
                    + x[7];
                println!(
                    "  {label} t={t:.2} |v|={vmag:7.2} om={om:7.2} th={:7.3}",
                    x[6]
                );
            }
            if !vmag.is_finite() || vmag > 900.0 {
                println!("  {label} DIVERGED t={t:.3} |v|={vmag:.1}");
                break;
            }
        }
        println!("{label}: peak|v|={peak:.1} end t={t:.2}");
    }
}

#[test]
fn diag_following_endpoint() {
    use crate::control::following::{FollowingConfig, FollowingControl};
    let p = PlantParams::default();
    let mut cfg = FollowingConfig::defaults(&p);
    cfg.p_set = 10e3;
    cfg.q_set = 2e3;
    let mut ctrl = FollowingControl::new(cfg, &p).unwrap();
    let run = run_stiff_grid(
        |m, t, dt| {
            let cmd = ctrl.step(m, t, dt);
            let k = (t / dt).round() as u64;
            if k % 400 == 0 && k <= 4000 {
                println!(
                    "  t={t:.3} p={:9.1} v=({:8.2},{:8.2}) i_l=({:7.2},{:7.2}) om={:7.2} sat={}",
                    m.p, m.v_c.d, m.v_c.q, m.i_l.d, m.i_l.q, cmd.omega, cmd.saturated
                );
            }
            cmd
        },
        2.0,
        5e-5,
    );
    let i_ref = ctrl.line_current_reference();
    println!(
        "p={:.1} q={:.1} |v|={:.2} v=({:.2},{:.2}) i_g=({:.3},{:.3}) i_l=({:.3},{:.3}) i_ref=({:.3},{:.3}) omega={:.3} sat={}",
        run.meas.p,
        run.meas.q,
        run.meas.v_c.amplitude(),
        run.meas.v_c.d,
        run.meas.v_c.q,
        run.meas.i_g.d,
        run.meas.i_g.q,
        run.meas.i_l.d,
        run.meas.i_l.q,
        i_ref.d,
        i_ref.q,
        run.last.omega,
        run.last.saturated
    );
}

#[test]
fn diag_voltage_gain_grid() {
    probe_vgains("idle 20s  kv=0.40/300", 0.40, 300.0, 1e-4, 0.0, 20.0);
    probe_vgains("10kW 20s  kv=0.40/300", 0.40, 300.0, 1e-4, 10e3, 20.0);
    probe_vgains("idle 20s  kv=0.30/150", 0.30, 150.0, 1e-4, 0.0, 20.0);
    probe_vgains("10kW 20s  kv=0.30/150", 0.30, 150.0, 1e-4, 10e3, 20.0);
}

#[test]
fn diag_filtered_ff() {
    probe_filtered_ff("w_ff=2000", 2000.0, 5e-5);
    probe_filtered_ff("w_ff=1000", 1000.0, 5e-5);
    probe_filtered_ff("w_ff= 500", 500.0, 5e-5);
    probe_filtered_ff("w_ff= 200", 200.0, 5e-5);
    probe_filtered_ff("w_ff= 100", 100.0, 5e-5);
}

#[test]
fn diag_ff_dt_sweep() {
    let base = Knobs { ig_ff: 1.0, cap_dec: 1.0, tau_c: 5e-4, k_p_droop: 2e-4 };
    probe_knobs_dt("ff dt=5e-5 ", &base, 5e-5, 2.0);
    probe_knobs_dt("ff dt=1e-5 ", &base, 1e-5, 2.0);
    probe_knobs_dt("ff dt=2e-6 ", &base, 2e-6, 2.0);
    probe_knobs_dt("ff=0.9 dt=5e-5", &Knobs { ig_ff: 0.9, ..base }, 5e-5, 2.0);
    probe_knobs_dt("ff=0.5 dt=5e-5", &Knobs { ig_ff: 0.5, ..base }, 5e-5, 2.0);
}

#[test]
fn diag_first_saturation() {
    let p = PlantParams::default();
    let cfg = FormingConfig::droop_defaults(&p, 10.0 * std::f64::consts::PI);
    let mut ctrl = FormingControl::new(FormingKind::Droop, cfg, &p).unwrap();
    let mut k = 0usize;
    let mut announced = false;
    run_stiff_grid(
        |meas, t, dtt| {
            let cmd = ctrl.step(meas, t, dtt);
            let fine = t < 0.012 && k % 20 == 0;
            if fine || (cmd.saturated && !announced) {
                if cmd.saturated && !announced {
                    announced = true;
                    println!("FIRST SATURATION:");
                }
                println!(
                    "t={t:.4} |m|={:6.3} il=({:7.2},{:7.2}) ig=({:7.2},{:7.2}) vc=({:7.1},{:7.1}) p={:9.0} q={:9.0}",
                    cmd.m.amplitude(),
                    meas.i_l.d, meas.i_l.q,
                    meas.i_g.d, meas.i_g.q,
                    meas.v_c.d, meas.v_c.q,
                    meas.p, meas.q,
                );
            }
            k += 1;
            cmd
        },
        0.4,
        5e-5,
    );
}
