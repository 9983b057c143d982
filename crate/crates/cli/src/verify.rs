//! Oracle and invariant checks behind `polaron verify`.

use std::time::Instant;

use num_complex::Complex64;
use polaron_entanglement::eigen::dense_oracle;
use polaron_entanglement::entanglement::{entropy, reduced_density, spectrum, svd_cross_check, ReducedDensityMatrix};
use polaron_entanglement::model::{lambda_total, zone_average};
use polaron_entanglement::sweep::solve_point;
use polaron_entanglement::{BasisIndexMap, Momentum, ModelParams, SolverSettings, SparseSectorHamiltonian};

type Check = Result<String, String>;

fn fail<T>(msg: impl Into<String>) -> Result<T, String> {
    Err(msg.into())
}

fn basis_size() -> Check {
    let basis = BasisIndexMap::enumerate(8, 9).map_err(|e| e.to_string())?;
    if basis.len() != 24_310 {
        return fail(format!("D(8, 9) = {}", basis.len()));
    }
    Ok("D(8, 9) = 24310".into())
}

fn bare_eigenstate(n: usize, nph: usize) -> Check {
    let basis = BasisIndexMap::enumerate(n, nph).map_err(|e| e.to_string())?;
    let vac = basis.rank(&vec![0; n]).ok_or("vacuum missing")?;
    let mut worst: f64 = 0.0;
    for g in [0.25, 0.4, 1.0, 1.5] {
        for w in [0.5, 1.0, 2.0] {
            let p = ModelParams::new(w, g, g, n, nph).map_err(|e| e.to_string())?;
            let h = SparseSectorHamiltonian::assemble(Momentum::new(0, n), &basis, &p).map_err(|e| e.to_string())?;
            let mut v = vec![Default::default(); basis.len()];
            v[vac] = Complex64::new(1.0, 0.0);
            let hv = h.apply(&v).map_err(|e| e.to_string())?;
            let r = hv.iter().zip(&v).map(|(a, b)| (a + b * 2.0).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r);
        }
    }
    if worst > 1e-12 {
        return fail(format!("|Hv + 2v| = {worst:e}"));
    }
    Ok(format!("N={n} N_ph={nph}: |Hv + 2v| <= {worst:.1e}"))
}

fn oracle() -> Check {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for nph in [2, 3] {
        for (gp, gb, w) in [(0.3, 0.25, 1.0), (0.9, 0.1, 0.5), (0.4, 0.1, 2.0)] {
            let p = ModelParams::new(w, gp, gb, 4, nph).map_err(|e| e.to_string())?;
            let dense = dense_oracle(&p).map_err(|e| e.to_string())?;
            let basis = BasisIndexMap::enumerate(4, nph).map_err(|e| e.to_string())?;
            let point = solve_point(&p, &basis, &SolverSettings::default()).map_err(|e| e.to_string())?;
            let rho = reduced_density(&point.record, &basis).map_err(|e| e.to_string())?;
            let direct = dense.excitation_density();
            let s_direct = entropy(
                &spectrum(&ReducedDensityMatrix {
                    entries: direct.clone(),
                    momentum: point.record.momentum,
                })
                .map_err(|e| e.to_string())?,
            );
            worst.0 = worst.0.max((point.record.energy - dense.ground_energy()).abs());
            worst.1 = worst.1.max((&rho.entries - &direct).iter().map(|z| z.norm()).fold(0.0, f64::max));
            worst.2 = worst.2.max((point.entropy - s_direct).abs());
        }
    }
    if worst.0 > 1e-8 || worst.1 > 1e-10 || worst.2 > 1e-8 {
        return fail(format!("dE = {:e}, drho = {:e}, dS = {:e}", worst.0, worst.1, worst.2));
    }
    Ok(format!("dE = {:.1e}, drho = {:.1e}, dS = {:.1e}", worst.0, worst.1, worst.2))
}

fn routes_and_invariants(n: usize, nph: usize) -> Check {
    let basis = BasisIndexMap::enumerate(n, nph).map_err(|e| e.to_string())?;
    let (mut dxi, mut diag, mut circ): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (gp, gb, w) in [(0.2, 0.1, 0.5), (0.7, 0.25, 1.0), (1.1, 0.4, 2.0), (1.4, 0.25, 1.0), (0.9, 0.6, 1.5)] {
        let p = ModelParams::new(w, gp, gb, n, nph).map_err(|e| e.to_string())?;
        let point = solve_point(&p, &basis, &SolverSettings::default()).map_err(|e| e.to_string())?;
        let svd = svd_cross_check(&point.record, &basis).map_err(|e| e.to_string())?;
        for (a, b) in point.spectrum.xis.iter().zip(&svd.xis) {
            if a.is_finite() != b.is_finite() {
                return fail(format!("finite/infinite mismatch {a} vs {b}"));
            }
            if a.is_finite() {
                dxi = dxi.max((a - b).abs());
            }
        }
        let rho = reduced_density(&point.record, &basis).map_err(|e| e.to_string())?;
        for i in 0..n {
            diag = diag.max((rho.entries[(i, i)].re - 1.0 / n as f64).abs());
        }
        let eig = rho.eigenvalues().map_err(|e| e.to_string())?;
        for (a, b) in rho.circulant_eigenvalues().iter().zip(&eig) {
            circ = circ.max((a - b).abs());
        }
        let s = point.entropy;
        if !(0.0..=(n as f64).ln() + 1e-12).contains(&s) || (s - point.spectrum.shannon_entropy()).abs() > 1e-12 {
            return fail(format!("entropy {s} out of bounds or inconsistent"));
        }
    }
    if dxi > 1e-10 || diag > 1e-12 || circ > 1e-10 {
        return fail(format!("dxi = {dxi:e}, diag = {diag:e}, circulant = {circ:e}"));
    }
    Ok(format!("N={n} N_ph={nph}: dxi = {dxi:.1e}, diag = {diag:.1e}, circulant = {circ:.1e}"))
}

fn coupling_algebra() -> Check {
    let mut rel: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for (w, gp, gb) in [(1.0, 0.5, 0.25), (0.5, 1.3, 0.4), (2.0, 0.1, 1.1)] {
        let p = ModelParams::new(w, gp, gb, 8, 9).map_err(|e| e.to_string())?;
        let z = zone_average(&p, 256);
        rel = rel.max((z.lambda_total - lambda_total(&p)).abs() / lambda_total(&p));
        cross = cross.max(z.cross_term.abs());
    }
    if rel > 1e-6 || cross >= 1e-10 {
        return fail(format!("rel = {rel:e}, cross = {cross:e}"));
    }
    Ok(format!("rel = {rel:.1e}, cross = {cross:.1e}"))
}

fn separable_full() -> Check {
    let basis = BasisIndexMap::enumerate(8, 9).map_err(|e| e.to_string())?;
    let p = ModelParams::new(1.0, 0.25, 0.25, 8, 9).map_err(|e| e.to_string())?;
    let point = solve_point(&p, &basis, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let e = point.record.energy;
    if point.record.momentum.index() != 0 || (e + 2.0).abs() > 1e-10 || point.entropy > 1e-10 {
        return fail(format!("K = {:?}, E = {e}, S_E = {}", point.record.momentum, point.entropy));
    }
    Ok(format!("E_gs = {e}, S_E = {:.1e}", point.entropy))
}

/// Runs every check, printing one line each. Returns `true` when all pass.
pub fn run(small: bool) -> bool {
    let mut checks: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("basis size", Box::new(basis_size)),
        ("bare eigenstate", Box::new(|| bare_eigenstate(6, 4))),
        ("dense oracle", Box::new(oracle)),
        ("spectrum routes and invariants", Box::new(|| routes_and_invariants(5, 4))),
        ("coupling algebra", Box::new(coupling_algebra)),
    ];
    if !small {
        checks.push(("bare eigenstate (full size)", Box::new(|| bare_eigenstate(8, 9))));
        checks.push(("separable ground state (full size)", Box::new(separable_full)));
    }
    let mut ok = true;
    for (name, check) in checks {
        let t = Instant::now();
        match check() {
            Ok(msg) => println!("PASS {name}: {msg} [{:.1} s]", t.elapsed().as_secs_f64()),
            Err(msg) => {
                ok = false;
                println!("FAIL {name}: {msg} [{:.1} s]", t.elapsed().as_secs_f64());
            }
        }
    }
    ok
}
