//! Diagnostics behind the non-sweep subcommands; each returns a [`Table`].

use std::time::Instant;

use ndarray::Array2;
use ptfid_core::biortho::biorthogonal_eig;
use ptfid_core::fidelity::{one_half_ep_test, product_fidelity, GroundPoint, OneHalfReport, PtClass};
use ptfid_core::lanczos::LanczosOptions;
use ptfid_core::ssh::{self, Band, Branch, ChainEnd, SshParams, Sublattice};
use ptfid_core::xxz::{self, XxzParams};
use ptfid_core::{Result, C64};

use crate::output::{Cell, Table};

fn branch_tag(b: Branch) -> &'static str {
    match b {
        Branch::Real => "real",
        Branch::Broken => "broken",
        Branch::Exceptional => "exceptional",
    }
}

fn opt_num(r: Result<f64>) -> Cell {
    match r {
        Ok(x) => Cell::Num(x),
        Err(e) => Cell::Text(e.to_string()),
    }
}

/// Per-momentum energies and susceptibilities on the grid `k = 2πm/L`.
pub fn ssh_bands(p: &SshParams) -> Table {
    let mut t = Table::new(
        "ssh-bands",
        &["m", "k", "delta", "branch", "re_e_minus", "im_e_minus", "re_e_plus", "im_e_plus", "chi_k", "chi_k_rr"],
    );
    for (m, k) in p.momenta().into_iter().enumerate() {
        let b = ssh::band_point(k, p);
        t.push(vec![
            m.into(),
            k.into(),
            b.delta.into(),
            branch_tag(b.branch).into(),
            b.energies.0.re.into(),
            b.energies.0.im.into(),
            b.energies.1.re.into(),
            b.energies.1.im.into(),
            opt_num(ssh::chi_k_metricized(k, p)),
            opt_num(ssh::chi_k_rr(k, p)),
        ]);
    }
    let g = ssh::ep_momenta(p);
    t.note("finite_size_pt", ssh::finite_size_pt(p).tag());
    t.note("thermodynamic_pt", ssh::thermodynamic_pt(p).tag());
    t.note("k_ep", g.k_ep.iter().map(|k| format!("{k:.16e}")).collect::<Vec<_>>().join(" "));
    if let Some(l0) = g.l0 {
        t.note("L0", l0);
    }
    t
}

/// Complex Berry phase of both bands, numeric and (for `v2 = 0`) closed form.
pub fn ssh_berry(p: &SshParams, n: usize) -> Table {
    let mut t = Table::new(
        "ssh-berry",
        &["band", "re_numeric", "im_numeric", "richardson_error", "re_analytic", "im_analytic", "error"],
    );
    for (band, tag) in [(Band::Minus, "minus"), (Band::Plus, "plus")] {
        let num = ssh::complex_berry_phase_numeric(p, band, n);
        let ana = if p.v2 == 0.0 { Some(ssh::complex_berry_phase_analytic(p, band)) } else { None };
        let mut errs = Vec::new();
        let (nr, ni, ne) = match &num {
            Ok(b) => (Cell::Num(b.value.re), Cell::Num(b.value.im), Cell::Num(b.richardson_error)),
            Err(e) => {
                errs.push(e.to_string());
                (Cell::Text(String::new()), Cell::Text(String::new()), Cell::Text(String::new()))
            }
        };
        let (ar, ai) = match ana {
            Some(Ok(z)) => (Cell::Num(z.re), Cell::Num(z.im)),
            Some(Err(e)) => {
                errs.push(e.to_string());
                (Cell::Text(String::new()), Cell::Text(String::new()))
            }
            None => (Cell::Text(String::new()), Cell::Text(String::new())),
        };
        t.push(vec![tag.into(), nr, ni, ne, ar, ai, errs.join("; ").into()]);
    }
    t
}

/// Open-chain spectrum with boundary-mode report.
pub fn ssh_edges(p: &SshParams) -> Result<Table> {
    let r = ssh::open_boundary_spectrum(p)?;
    let mut t = Table::new("ssh-edges", &["index", "re_e", "im_e", "boundary", "edge_weight", "end", "sublattice"]);
    for (i, e) in r.spectrum.iter().enumerate() {
        let mode = r.modes.iter().find(|m| m.energy == *e);
        let (b, w, end, sub) = match mode {
            Some(m) => (
                "yes",
                Cell::Num(m.edge_weight),
                match m.end {
                    ChainEnd::Left => "left",
                    ChainEnd::Right => "right",
                    ChainEnd::Both => "both",
                },
                match m.sublattice {
                    Sublattice::Upper => "upper",
                    Sublattice::Lower => "lower",
                },
            ),
            None => ("no", Cell::Text(String::new()), "", ""),
        };
        t.push(vec![i.into(), e.re.into(), e.im.into(), b.into(), w, end.into(), sub.into()]);
    }
    t.note("boundary_modes", r.modes.len());
    Ok(t)
}

/// Dense spectrum of the zero-magnetization sector.
pub fn xxz_spectrum(p: &XxzParams, tol_real: Option<f64>) -> Result<Table> {
    let vals = xxz::full_sector_spectrum(p)?;
    let scale = vals.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let tol = tol_real.unwrap_or(1e-10 * scale);
    let mut t = Table::new("xxz-spectrum", &["index", "re_e", "im_e", "pt_class"]);
    for (i, e) in vals.iter().enumerate() {
        t.push(vec![i.into(), e.re.into(), e.im.into(), PtClass::from_energy(*e, tol).tag().into()]);
    }
    let conj_dev = vals
        .iter()
        .map(|e| vals.iter().map(|f| (f - e.conj()).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    t.note("dimension", vals.len());
    t.note("max_conjugate_mismatch", conj_dev);
    Ok(t)
}

fn report_row(t: &mut Table, scope: &str, k: Option<f64>, r: &OneHalfReport, a: f64, b: f64) {
    for &(eps, re_f) in &r.trace {
        t.push(vec![
            scope.into(),
            k.map(Cell::Num).unwrap_or_else(|| Cell::Text(String::new())),
            r.lambda_ep.into(),
            a.into(),
            b.into(),
            eps.into(),
            re_f.into(),
            (r.order as usize).into(),
            if r.is_second_order { "yes" } else { "no" }.into(),
        ]);
    }
}

pub const EP_COLUMNS: [&str; 9] = ["scope", "k", "lambda_ep", "a", "b", "epsilon", "re_F", "order", "second_order"];

#[derive(Debug, Clone, Copy)]
pub struct OneHalfSettings<'a> {
    pub schedule: &'a [f64],
    pub a: f64,
    pub b: f64,
    pub tol_half: f64,
}

/// Exceptional points of the SSH chain with `v1 ∈ [lo, hi]`: every grid momentum whose
/// EP falls in the bracket, then the many-body transition located by bisection.
pub fn ssh_ep_locate(p: &SshParams, lo: f64, hi: f64, s: OneHalfSettings<'_>) -> Result<Table> {
    let mut t = Table::new("ep-locate", &EP_COLUMNS);
    let half_width = 1e-8;
    // (v1 at the EP, one momentum crossing there, number of momenta crossing there)
    let mut crossings: Vec<(f64, f64, usize)> = Vec::new();
    for k in p.momenta() {
        for v_ep in ssh::ep_v1_at_momentum(k, p).into_iter().filter(|v| (lo..=hi).contains(v)) {
            let model = |v1: f64| -> Result<GroundPoint> { ssh::k_ground_point(k, &p.with_v1(v1)) };
            let r = one_half_ep_test(model, v_ep - half_width, v_ep + half_width, s.schedule, s.a, s.b, s.tol_half)?;
            report_row(&mut t, "momentum", Some(k), &r, s.a, s.b);
            match crossings.iter_mut().find(|c| (c.0 - v_ep).abs() < 1e-9 * (1.0 + v_ep.abs())) {
                Some(c) => c.2 += 1,
                None => crossings.push((v_ep, k, 1)),
            }
        }
    }
    t.note("momentum_crossings", crossings.iter().map(|c| c.2).sum::<usize>());
    // Momenta k and 2π − k cross together; the many-body product then picks up one
    // factor of 1/2 per crossing momentum while its overall PT class need not change.
    for &(v_ep, k, n) in &crossings {
        let unbroken_below = ssh::k_ground_point(k, &p.with_v1(v_ep - half_width))?.pt == PtClass::Unbroken;
        let dir = if unbroken_below { -1.0 } else { 1.0 };
        let mut trace = Vec::with_capacity(s.schedule.len());
        for &eps in s.schedule {
            let pa = ssh::ground_point(&p.with_v1(v_ep + dir * s.a * eps))?;
            let pb = ssh::ground_point(&p.with_v1(v_ep - dir * s.b * eps))?;
            trace.push((eps, product_fidelity(&pa, &pb)?.re));
        }
        let last = trace.last().map_or(0.0, |x| x.1);
        let deviation = (last - 0.5f64.powi(n as i32)).abs();
        let order = if last > 0.0 { (-last.log2()).round() as u32 } else { 0 };
        let r = OneHalfReport { lambda_ep: v_ep, trace, order, deviation, is_second_order: order as usize == n && deviation < s.tol_half };
        report_row(&mut t, "many-body-crossing", None, &r, s.a, s.b);
    }
    let class = |v: f64| ssh::finite_size_pt(&p.with_v1(v));
    if class(lo) != class(hi) {
        let (mut a, mut b) = (lo, hi);
        let ca = class(a);
        while b - a > 1e-12 * (1.0 + a.abs()) {
            let m = 0.5 * (a + b);
            if class(m) == ca {
                a = m;
            } else {
                b = m;
            }
        }
        // Widen to the exceptional tolerance so both bracket ends stay regular.
        let (a, b) = (a - half_width, b + half_width);
        let model = |v1: f64| -> Result<GroundPoint> { ssh::ground_point(&p.with_v1(v1)) };
        let r = one_half_ep_test(model, a, b, s.schedule, s.a, s.b, s.tol_half)?;
        report_row(&mut t, "many-body", None, &r, s.a, s.b);
        t.note("many_body_v1_ep", r.lambda_ep);
    }
    Ok(t)
}

/// XXZ ground-state EP in `γ`: bisection to `tol`, then the one-half test.
pub fn xxz_ep_locate(
    jz: f64,
    l: usize,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &LanczosOptions,
    s: OneHalfSettings<'_>,
) -> Result<Table> {
    let (a, b) = xxz::bisect_gamma_ep(jz, l, lo, hi, tol, opts)?;
    let basis = xxz::build_m0_basis(l)?;
    let model = |g: f64| -> Result<GroundPoint> {
        let gs = xxz::ground_state(&XxzParams::new(jz, g, l)?, &basis, opts, None)?;
        Ok(GroundPoint::single(gs.left.into(), gs.right.into(), gs.pt))
    };
    let r = one_half_ep_test(model, a, b, s.schedule, s.a, s.b, s.tol_half)?;
    let mut t = Table::new("ep-locate", &EP_COLUMNS);
    report_row(&mut t, "many-body", None, &r, s.a, s.b);
    t.note("gamma_lo", a);
    t.note("gamma_hi", b);
    Ok(t)
}

fn time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed().as_secs_f64())
}

/// Wall-clock timings of representative workloads per module.
pub fn bench(seed: u64) -> Table {
    let mut t = Table::new("bench", &["module", "workload", "seconds", "status"]);
    let mut push = |module: &str, work: &str, secs: f64, ok: std::result::Result<(), String>| {
        t.push(vec![module.into(), work.into(), secs.into(), ok.err().unwrap_or_else(|| "ok".into()).into()]);
    };
    let n = 200;
    let h = Array2::from_shape_fn((n, n), |(i, j)| {
        let x = ((i * 7919 + j * 104_729 + seed as usize) % 1000) as f64 / 1000.0 - 0.5;
        C64::new(x, if i == j { 0.1 } else { 0.0 })
    });
    let (r, s) = time(|| biorthogonal_eig(&h).map(|_| ()));
    push("biortho", "biorthogonal_eig 200x200", s, r.map_err(|e| e.to_string()));
    let p = SshParams::new(1.0, 0.9, 0.0, 0.1, 505).expect("valid");
    let (r, s) = time(|| ssh::chi_total(&p).map(|_| ()));
    push("ssh", "chi_total L=505", s, r.map_err(|e| e.to_string()));
    let (r, s) = time(|| ssh::many_body_fidelity(&p, 0.9, 0.901).map(|_| ()));
    push("ssh", "many_body_fidelity L=505", s, r.map_err(|e| e.to_string()));
    let (r, s) = time(|| ssh::complex_berry_phase_numeric(&p.with_v1(0.5), Band::Minus, 4096).map(|_| ()));
    push("ssh", "berry phase N=4096", s, r.map_err(|e| e.to_string()));
    let (r, s) = time(|| ssh::open_boundary_spectrum(&SshParams { l: 40, ..p.with_v1(1.5) }).map(|_| ()));
    push("ssh", "open chain L=40", s, r.map_err(|e| e.to_string()));
    let opts = LanczosOptions { seed, ..LanczosOptions::default() };
    let (r, s) = time(|| {
        let b = xxz::build_m0_basis(12)?;
        xxz::ground_state(&XxzParams::new(0.5, 0.1, 12)?, &b, &opts, None).map(|_| ())
    });
    push("lanczos", "XXZ L=12 ground state", s, r.map_err(|e| e.to_string()));
    let (r, s) = time(|| {
        let b = xxz::build_m0_basis(16)?;
        xxz::ground_state(&XxzParams::new(1.0, 0.5, 16)?, &b, &opts, None).map(|_| ())
    });
    push("lanczos", "XXZ L=16 ground state", s, r.map_err(|e| e.to_string()));
    let (r, s) = time(|| xxz::full_sector_spectrum(&XxzParams::new(1.0, 0.5, 10).expect("valid")).map(|_| ()));
    push("xxz", "dense sector spectrum L=10", s, r.map_err(|e| e.to_string()));
    let (r, s) = time(|| xxz::block_ground_state(&XxzParams::new(1.0, 0.5, 12).expect("valid")).map(|_| ()));
    push("xxz", "momentum-block ground state L=12", s, r.map_err(|e| e.to_string()));
    t
}
