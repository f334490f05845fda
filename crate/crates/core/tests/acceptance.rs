//! Acceptance criteria, one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use whitney_cubes::global_spaces::{check_conforming_complex, check_star_chain};
use whitney_cubes::local_spaces::{basis, local_suite, SpaceKind};
use whitney_cubes::manufactured::FloatForm;
use whitney_cubes::mesh::CubicalMesh;
use whitney_cubes::poly::Monomial;
use whitney_cubes::projection::{adjoint_pairing, projection_suite, LocalProjector};
use whitney_cubes::report::{first_failure, CheckReport};
use whitney_cubes::solver::{
    assemble, broken_error, convergence_sweep, energy_norm, solve, BasisChoice, DiscreteSpace, Load, SolveMethod,
    SweepConfig, EXACT_LIMIT,
};
use whitney_cubes::verify::{check_bilinear_projection, stretched_box};
use whitney_cubes::whitney::{
    check_commuting_squares, check_interpolant_in_space, check_mean_jump_equivalence, check_whitney_complex, Flavor,
};
use whitney_cubes::{binomial, enumerate_multi_indices, int, rat, CellBox, MultiIndex, PolyForm, Polynomial};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn all_pass(reports: &[CheckReport]) -> Result<usize, String> {
    match first_failure(reports) {
        Some(r) => Err(format!(
            "{} n={} k={}: {}",
            r.lemma,
            r.n,
            r.k,
            r.counterexample.as_deref().unwrap_or("?")
        )),
        None => Ok(reports.len()),
    }
}

fn boxes(n: usize) -> Vec<CellBox> {
    let mut last = vec![int(1); n];
    last[n - 1] = int(3);
    vec![
        CellBox::reference(n),
        stretched_box(n),
        CellBox::new(vec![int(0); n], last).unwrap(),
    ]
}

fn grid(n: usize, m: usize) -> CubicalMesh {
    CubicalMesh::unit(n, m).unwrap()
}

fn local_structure() -> Outcome {
    let required = [
        "dimension",
        "q_exactness",
        "local_couple",
        "orthogonality",
        "adjoint_identity",
        "q_decomposition",
        "star_star_sign",
        "d_squared",
        "homotopy",
    ];
    let mut checks = 0;
    for n in 1..=4 {
        for cell in boxes(n) {
            let reports = local_suite(&cell).map_err(|e| e.to_string())?;
            checks += all_pass(&reports)?;
            for name in required {
                if n > 1 && !reports.iter().any(|r| r.lemma.starts_with(name)) {
                    return Err(format!("no {name} check for n={n}"));
                }
            }
            for k in 0..=n {
                let dim = basis(SpaceKind::Q1Minus, k, &cell)
                    .map_err(|e| e.to_string())?
                    .elements
                    .len();
                if dim != binomial(n, k) << (n - k) {
                    return Err(format!("dim Q1-Λ^{k} on {n} axes is {dim}"));
                }
            }
        }
    }
    Ok(format!("{checks} exact checks, n = 1..4, three boxes each"))
}

/// `𝕀⁰(x₁x₂)` on `[−1,1]²` from the 3×3 system of adjoint pairings.
fn bilinear_by_brute_force() -> Result<(), String> {
    let cell = CellBox::reference(2);
    let p = LocalProjector::new(0, &cell).map_err(|e| e.to_string())?;
    let x1x2 = PolyForm::term(
        MultiIndex::empty(2),
        Polynomial::monomial(2, Monomial::from_exponents(&[1, 1]), int(1)),
    );
    let (trial, tests) = (p.trial_basis(), p.test_basis());
    if trial.len() != 3 || tests.len() != 3 {
        return Err("expected a 3×3 local system".into());
    }
    let rows: Vec<Vec<_>> = tests
        .iter()
        .map(|mu| {
            trial
                .iter()
                .map(|phi| adjoint_pairing(phi, mu, &cell).unwrap())
                .collect()
        })
        .collect();
    let rhs: Vec<_> = tests
        .iter()
        .map(|mu| adjoint_pairing(&x1x2, mu, &cell).unwrap())
        .collect();
    let matrix = whitney_cubes::linalg::RationalMatrix::from_rows(rows, 3);
    let c = matrix.solve_vec(&rhs).map_err(|e| e.to_string())?;
    if c.iter().any(|v| *v != int(0)) {
        return Err(format!("brute-force coefficients {c:?}"));
    }
    Ok(())
}

fn adjoint_projection() -> Outcome {
    let mut checks = 0;
    for n in 1..=4 {
        for cell in boxes(n) {
            checks += all_pass(&projection_suite(&cell).map_err(|e| e.to_string())?)?;
        }
    }
    checks += all_pass(&[check_bilinear_projection().map_err(|e| e.to_string())?])?;
    bilinear_by_brute_force()?;
    Ok(format!(
        "{checks} exact checks; projection of x1*x2 on the reference square is 0"
    ))
}

fn interpolants_in_space() -> Outcome {
    let mut checks = 0;
    for (n, m) in [(2, 2), (3, 2)] {
        let mesh = grid(n, m);
        for flavor in [Flavor::Interior, Flavor::Full] {
            for k in 0..=n {
                checks += all_pass(&check_interpolant_in_space(k, &mesh, flavor).map_err(|e| e.to_string())?)?;
            }
        }
    }
    Ok(format!("{checks} exact checks on 2x2 and 2x2x2"))
}

fn diagrams() -> Outcome {
    let mut checks = 0;
    for (n, m) in [(2, 2), (3, 2)] {
        let mesh = grid(n, m);
        for with_bc in [false, true] {
            checks += all_pass(&check_conforming_complex(&mesh, with_bc).map_err(|e| e.to_string())?)?;
            checks += all_pass(&check_star_chain(&mesh, with_bc).map_err(|e| e.to_string())?)?;
        }
        for flavor in [Flavor::Interior, Flavor::Full] {
            checks += all_pass(&check_whitney_complex(&mesh, flavor).map_err(|e| e.to_string())?)?;
            checks += all_pass(&check_commuting_squares(&mesh, flavor).map_err(|e| e.to_string())?)?;
        }
    }
    Ok(format!("{checks} exact checks on 2x2 and 2x2x2"))
}

fn mean_jump() -> Outcome {
    let mut details = Vec::new();
    for m in [2, 3] {
        let r = check_mean_jump_equivalence(&grid(2, m)).map_err(|e| e.to_string())?;
        all_pass(std::slice::from_ref(&r))?;
        details.push(format!("{m}x{m}: {}", r.detail.unwrap_or_default()));
    }
    Ok(details.join("; "))
}

fn constant_reproduction() -> Outcome {
    let c = rat(3, 2);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let stretched = CubicalMesh::build(&stretched_box(2), &[3, 5]).unwrap();
    let mut meshes: Vec<CubicalMesh> = vec![grid(1, 8), grid(2, 3), grid(2, 8), grid(3, 2), grid(3, 8)];
    meshes.push(stretched);
    for mesh in &meshes {
        let n = mesh.dim();
        for k in 0..=n {
            let space =
                DiscreteSpace::build(k, mesh, Flavor::Interior, BasisChoice::Auto).map_err(|e| e.to_string())?;
            for sigma in enumerate_multi_indices(k, n).unwrap() {
                let f = PolyForm::constant(sigma, c.clone());
                let problem = assemble(&space, Load::Polynomial(&f), 3).map_err(|e| e.to_string())?;
                let sol = solve(&problem, SolveMethod::Auto).map_err(|e| e.to_string())?;
                if let Some(x) = &sol.exact {
                    if space.pieces_exact(x).iter().any(|p| *p != f) {
                        return Err(format!("exact solution differs from c dx{sigma}, n={n} k={k}"));
                    }
                }
                let (_, hd) = broken_error(
                    &space,
                    &FloatForm::new(&f),
                    &FloatForm::new(&f.exterior_derivative()),
                    &space.piecewise(&sol.coefficients),
                    3,
                )
                .map_err(|e| e.to_string())?;
                worst = worst.max(hd);
                cases += 1;
                if hd > 1e-10 {
                    return Err(format!("n={n} k={k} σ={sigma}: error {hd:e}"));
                }
            }
        }
    }
    Ok(format!(
        "{cases} cases up to 8^n cells, largest broken error {worst:.1e}"
    ))
}

fn convergence() -> Outcome {
    let mut details = Vec::new();
    for (n, k, solution, levels) in [
        (2, 0, "sin", vec![4, 8, 16]),
        (2, 1, "sinmix", vec![4, 8, 16]),
        (3, 1, "sin", vec![2, 4, 8]),
    ] {
        let start = Instant::now();
        let config = SweepConfig {
            n,
            k,
            solution: solution.into(),
            flavor: Flavor::Full,
            levels,
            quadrature: 5,
            basis: BasisChoice::Auto,
        };
        let sweep = convergence_sweep(&config).map_err(|e| e.to_string())?;
        let seconds = start.elapsed().as_secs_f64();
        let (_, hd, cons) = sweep.final_orders();
        let (hd, cons) = (hd.unwrap_or(f64::NAN), cons.unwrap_or(f64::NAN));
        let line = format!("n={n} k={k} {solution}: Hd order {hd:.3}, consistency order {cons:.3}, {seconds:.1}s");
        if !(hd >= 0.9 && cons >= 0.9 && seconds < 300.0) {
            return Err(line);
        }
        details.push(line);
    }
    Ok(details.join("; "))
}

fn solver_paths() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (n, m) in [(1, 8), (2, 4), (3, 2)] {
        let mesh = grid(n, m);
        for k in 0..=n {
            for flavor in [Flavor::Interior, Flavor::Full] {
                let space = DiscreteSpace::build(k, &mesh, flavor, BasisChoice::Auto).map_err(|e| e.to_string())?;
                if space.dim() == 0 || space.dim() > EXACT_LIMIT {
                    continue;
                }
                // f = (1 + x₁² − x₁x_n) dx^σ for every σ
                let mut f = PolyForm::zero(n, k);
                let mut square = vec![0u32; n];
                square[0] = 2;
                let mut mixed = vec![0u32; n];
                mixed[0] += 1;
                mixed[n - 1] += 1;
                let p = &(&Polynomial::monomial(n, Monomial::ONE, int(1))
                    + &Polynomial::monomial(n, Monomial::from_exponents(&square), int(1)))
                    + &Polynomial::monomial(n, Monomial::from_exponents(&mixed), int(-1));
                for (i, sigma) in enumerate_multi_indices(k, n).unwrap().into_iter().enumerate() {
                    f.add_component(sigma, p.scale(&int(i as i64 + 1)));
                }
                let problem = assemble(&space, Load::Polynomial(&f), 3).map_err(|e| e.to_string())?;
                let exact = solve(&problem, SolveMethod::Exact).map_err(|e| e.to_string())?;
                let cg = solve(&problem, SolveMethod::Cg).map_err(|e| e.to_string())?;
                let diff: Vec<f64> = exact
                    .coefficients
                    .iter()
                    .zip(&cg.coefficients)
                    .map(|(a, b)| a - b)
                    .collect();
                let rel = energy_norm(&problem.g, &diff) / energy_norm(&problem.g, &exact.coefficients);
                worst = worst.max(rel);
                cases += 1;
                if rel > 1e-9 {
                    return Err(format!("n={n} k={k} {flavor}: relative gap {rel:e}"));
                }
            }
        }
    }
    Ok(format!(
        "{cases} systems with N <= {EXACT_LIMIT}, largest relative energy gap {worst:.1e}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("local structural suite", local_structure),
        ("adjoint projection", adjoint_projection),
        ("interpolants satisfy the constraints", interpolants_in_space),
        ("complexes and commuting squares", diagrams),
        ("mean-jump equivalence", mean_jump),
        ("constant reproduction", constant_reproduction),
        ("first-order convergence", convergence),
        ("exact and CG solutions agree", solver_paths),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let seconds = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{seconds:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{seconds:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
