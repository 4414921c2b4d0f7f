//! Single-run subcommands. Each writes its CSVs into `out` and returns a
//! short summary for the terminal.

use crate::config::Config;
use crate::pipelines::*;
use crate::report::{row, write_csv};
use anyhow::Result;
use frontlab_core::comparison::{residual_line, Candidate, ResidualGrid};
use frontlab_core::Residual;
use std::fmt::Write as _;
use std::path::Path;

pub fn profile(cfg: &Config, out: &Path) -> Result<String> {
    let ps = &cfg.profile;
    let fr = front(&ps.reaction, ps.speed, ps)?;
    let p = &fr.profile;
    write_csv(
        out,
        "profile.csv",
        "z,phi,phi_prime",
        (0..p.len()).map(|i| row(&[p.z(i), p.phi()[i], p.phi_prime()[i]])),
    )?;
    let e = p.exponents();
    let mut s = format!(
        "{} at c = {}: {} nodes on [{}, {}], lambda- = {}, lambda+ = {}, max ODE residual {:.2e}\n",
        ps.reaction.label(),
        p.c(),
        p.len(),
        p.z_lo(),
        p.z_hi(),
        e.lambda_minus,
        e.lambda_plus,
        p.max_collocation_residual()
    );
    if ps.speed.is_none() {
        let _ = writeln!(s, "minimal speed, front is {}", classify(&fr)?);
    }
    Ok(s)
}

pub fn minspeed(cfg: &Config) -> Result<String> {
    let ps = &cfg.profile;
    let fr = front(&ps.reaction, None, ps)?;
    let ms = fr.min_speed;
    Ok(format!(
        "{}: c* = {} in [{}, {}], linear speed {}, {}\n",
        ps.reaction.label(),
        ms.c_star,
        ms.lo,
        ms.hi,
        fr.reaction.linear_speed(),
        classify(&fr)?
    ))
}

pub fn sim1d(cfg: &Config, out: &Path) -> Result<String> {
    let r = run_sim1d(&cfg.sim1d, &cfg.profile)?;
    write_csv(out, "trace.csv", "t,xi,sigma", r.trace.samples.iter().map(|s| row(&[s.t, s.xi, s.sigma])))?;
    let u = &r.final_state;
    write_csv(out, "final_state.csv", "z,u", (0..u.grid.nz).map(|i| row(&[u.grid.z(i), u.values[i]])))?;
    let last = r.trace.samples.last().map_or(f64::NAN, |s| s.xi);
    Ok(format!(
        "frame speed {}, xi(T) = {last}, |xi(T) - xi(T/2)| = {:.3e}, corridor [{:.2e}, {}], widenings {}\n",
        r.c_frame,
        r.trace.convergence_gap().unwrap_or(f64::NAN).abs(),
        r.trace.corridor.0,
        r.trace.corridor.1,
        r.trace.widenings
    ))
}

pub fn sim2d(cfg: &Config, out: &Path) -> Result<String> {
    let r = run_sim2d(&cfg.sim2d, &cfg.profile)?;
    let mut ls = Vec::new();
    for d in &r.diagnostics {
        if let Some(l) = &d.level_set {
            ls.extend(l.x.iter().zip(&l.gamma).map(|(x, g)| row(&[d.t, *x, *g])));
        }
    }
    write_csv(out, "levelset.csv", "t,x,gamma", ls)?;
    write_csv(
        out,
        "diagnostics.csv",
        "t,residual,min_minus_uz,sup_ux,sup_uxx,sup_gx,sup_gxx",
        r.diagnostics.iter().map(|d| {
            let (gx, gxx) = d.gamma_derivatives.map_or((f64::NAN, f64::NAN), |g| (g.sup_gx, g.sup_gxx));
            row(&[d.t, d.residual, d.min_minus_uz, d.sup_ux, d.sup_uxx, gx, gxx])
        }),
    )?;
    let d = r.diagnostics.last().expect("at least one sample");
    Ok(format!(
        "frame speed {}, t = {}: profile residual {:.3e}, min(-u_z) {:.3e}, sup|u_x| {:.3e}\n",
        r.c_frame, d.t, d.residual, d.min_minus_uz, d.sup_ux
    ))
}

pub fn frontdyn(cfg: &Config, out: &Path) -> Result<String> {
    let r = run_frontdyn(&cfg.frontdyn, &cfg.profile)?;
    write_csv(
        out,
        "graph.csv",
        "t,x,w",
        r.graph
            .iter()
            .flat_map(|(t, w)| r.x.iter().zip(w).map(move |(x, v)| row(&[*t, *x, *v]))),
    )?;
    write_csv(out, "compare.csv", "t,gap", r.comparison.series.iter().map(|(t, g)| row(&[*t, *g])))?;
    Ok(format!(
        "drift c = {}, initial sup|phi_x| = {:.3e}, sup_t |U - V| = {:.3e}\n",
        r.c, r.comparison.initial_gradient, r.comparison.max_gap
    ))
}

fn node_of(grid: &ResidualGrid<f64>, r: &Residual) -> (usize, usize) {
    let c = r.critical();
    let ix = grid.x.map_or(0, |(l, n)| ((c.x / l * n as f64).round() as usize).min(n - 1));
    let (t0, t1, nt) = grid.t;
    let it = if nt > 1 {
        (((c.t - t0) / (t1 - t0) * (nt - 1) as f64).round() as usize).min(nt - 1)
    } else {
        0
    };
    (ix, it)
}

/// Certificate text; with `slices`, `residual.csv` holds `L` along `z`
/// through each side's critical point.
pub fn verify_comparison(cfg: &Config, out: &Path, slices: bool) -> Result<String> {
    let run = run_comparison(&cfg.comparison, &cfg.profile)?;
    let mut s = format!(
        "{:?} pair for {} at c = {}\n",
        cfg.comparison.candidate,
        cfg.comparison.reaction.label(),
        run.front.profile.c()
    );
    s.push_str(&certificate_text(&run.certificate));
    for n in &run.notes {
        let _ = writeln!(s, "note: {n}");
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("comparison.txt"), &s)?;
    if slices {
        let f = &run.front.reaction;
        let c = run.front.profile.c();
        let mut rows = Vec::new();
        let sides: [(&str, &dyn Candidate<f64>, &Residual); 2] = [
            ("super", run.plus.as_ref(), &run.certificate.plus),
            ("sub", run.minus.as_ref(), &run.certificate.minus),
        ];
        for (name, cand, rep) in sides {
            let (ix, it) = node_of(&run.grid, rep);
            let (x, t) = (run.grid.x_at(ix), run.grid.t_at(it));
            for (z, l, scaled) in residual_line(cand, f, c, &run.grid, ix, it)? {
                rows.push(format!("{name},{}", row(&[x, z, t, l, scaled])));
            }
        }
        write_csv(out, "residual.csv", "side,x,z,t,residual,scaled", rows)?;
    }
    Ok(s)
}
