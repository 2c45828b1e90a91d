use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use degenlab::charvar::{
    fuchsian_base, length_spectrum, ms_coordinates, projectivize, Family, LengthSpectrum, RepError, Representation,
    RepresentationJson,
};
use degenlab::flat::{
    abelian_length_spectrum, abelian_periods, flat_length_of, flat_length_spectrum_with, FlatError, QuadDiffHandle,
    SquareTiledSurface, SurfaceJson,
};
use degenlab::harmonic::{
    cached_octagon_mesh, degeneration_ray_on, hopf, solve_harmonic, DomainMesh, EquivariantMap, MeshError, RayError,
    RayInit, RayOptions, SolverError,
};
use degenlab::rtree::{check_fold_validity, fold, is_morphism, MetricTree};
use degenlab::sl2c::Mobius;
use degenlab::words::{enumerate_classes, ConjClassSet, Presentation};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use serde_json::json;

use crate::config::{Config, FamilyKind, InitKind};
use crate::output::Output;
use crate::CliError;

fn rep_error(e: RepError) -> CliError {
    match e {
        RepError::TrivialLengthFunction | RepError::BoundedFamily => CliError::Certification(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

fn ray_error(e: RayError) -> CliError {
    match e {
        RayError::Rep(r) => rep_error(r),
        RayError::Mesh(m) => mesh_error(m),
        RayError::Solver(s) => solver_error(s),
        RayError::Pullback(p) => CliError::Certification(p.to_string()),
    }
}

fn mesh_error(e: MeshError) -> CliError {
    match e {
        MeshError::Level(_) => CliError::Validation(e.to_string()),
        other => CliError::Certification(other.to_string()),
    }
}

fn solver_error(e: SolverError) -> CliError {
    CliError::Validation(e.to_string())
}

fn presentation(cfg: &Config) -> Result<Presentation, CliError> {
    Presentation::new(cfg.genus).map_err(|e| CliError::Validation(format!("genus: {e}")))
}

fn classes(cfg: &Config) -> Result<ConjClassSet, CliError> {
    Ok(enumerate_classes(&presentation(cfg)?, cfg.class_cutoff()?))
}

/// Abelian representation into the diagonal unitary subgroup; every
/// translation length vanishes.
fn unitary(p: Presentation) -> Result<Representation, CliError> {
    let images =
        (0..p.generator_count()).map(|k| Mobius::diag(Complex64::from_polar(1.0, 0.3 * (k + 1) as f64))).collect();
    Representation::new(p, images).map_err(rep_error)
}

pub fn family(cfg: &Config) -> Result<Family, CliError> {
    let kind = Config::require(&cfg.family, "family")?;
    let p = presentation(cfg)?;
    Ok(match kind {
        FamilyKind::Fuchsian => Family::constant(fuchsian_base(cfg.genus).map_err(rep_error)?),
        FamilyKind::Twist => {
            Family::twist(fuchsian_base(cfg.genus).map_err(rep_error)?, Config::require(&cfg.handle, "handle")?)
        }
        FamilyKind::Diagonal => Family::diagonal(p, Config::require(&cfg.periods, "periods")?).map_err(rep_error)?,
        FamilyKind::Unitary => Family::constant(unitary(p)?),
        FamilyKind::File => {
            let path = Config::require(&cfg.rep_file, "rep_file")?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Validation(format!("rep_file {}: {e}", path.display())))?;
            let j: RepresentationJson = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("rep_file {}: {e}", path.display())))?;
            Family::constant(Representation::from_json(&j).map_err(rep_error)?)
        }
    })
}

fn sample_parameter(cfg: &Config) -> Result<f64, CliError> {
    match cfg.family {
        Some(FamilyKind::Twist | FamilyKind::Diagonal) => Config::require(&cfg.t, "t"),
        _ => Ok(cfg.t.unwrap_or(0.0)),
    }
}

fn mesh(cfg: &Config, out_dir: &Path) -> Result<Arc<DomainMesh>, CliError> {
    if cfg.genus != 2 {
        return Err(CliError::Validation(format!("harmonic maps need genus 2, got {}", cfg.genus)));
    }
    let level = Config::require(&cfg.level, "level")?;
    let (m, _) = cached_octagon_mesh(&cfg.cache_dir(out_dir), level).map_err(mesh_error)?;
    Ok(Arc::new(m))
}

fn spectrum_rows(classes: &ConjClassSet, columns: &[&LengthSpectrum]) -> String {
    let mut s = String::new();
    for (i, w) in classes.classes().iter().enumerate() {
        let _ = write!(s, "{w},{}", w.len());
        for c in columns {
            let _ = write!(s, ",{:.15e}", c.values[i]);
        }
        s.push('\n');
    }
    s
}

pub fn spectrum(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let c = classes(cfg)?;
    let rep = family(cfg)?.sample(sample_parameter(cfg)?).map_err(rep_error)?;
    let ms = ms_coordinates(&rep, &c);
    let tr = length_spectrum(&rep, &c);
    out.csv("spectrum.csv", &format!("class,length,ms,translation\n{}", spectrum_rows(&c, &[&ms, &tr])))?;
    out.gnuplot(
        "spectrum.gp",
        "set xlabel 'log(|tr|+2)'\nset ylabel 'translation length'\nplot 'spectrum.csv' using 3:4 with points pt 7 ps 0.5\n",
    )?;
    // raw spectra are written before projectivization can refuse
    let pms = projectivize(&ms).map_err(rep_error)?;
    let ptr = projectivize(&tr).map_err(rep_error)?;
    out.csv("projective.csv", &format!("class,length,ms,translation\n{}", spectrum_rows(&c, &[&pms, &ptr])))
}

fn load_surface(cfg: &Config) -> Result<SquareTiledSurface, CliError> {
    let path = Config::require(&cfg.surface, "surface")?;
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("surface {}: {e}", path.display())))?;
    let j: SurfaceJson =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("surface {}: {e}", path.display())))?;
    if j.marking.is_none() {
        return Err(CliError::Validation(format!("surface {} has no marking", path.display())));
    }
    SquareTiledSurface::from_json(&j).map_err(flat_error)
}

fn flat_error(e: FlatError) -> CliError {
    match e {
        FlatError::Marking(_) | FlatError::SplitAtSingularity { .. } => CliError::Certification(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

/// Flat spectrum, naming the first class that fails.
fn flat_spectrum(s: &SquareTiledSurface, c: &ConjClassSet, cfg: &Config) -> Result<LengthSpectrum, CliError> {
    let q = QuadDiffHandle::new(s.clone(), 1.0).map_err(flat_error)?;
    flat_length_spectrum_with(&q, c, cfg.convention).map_err(|e| {
        let oriented = s.oriented(cfg.convention);
        match c.classes().iter().find(|w| flat_length_of(&oriented, w).is_err()) {
            Some(w) => CliError::Certification(format!("class {w}: {e}")),
            None => flat_error(e),
        }
    })
}

fn ratio(r: &Ratio<i64>) -> String {
    r.to_string()
}

pub fn flat(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let s = load_surface(cfg)?;
    let c = classes(cfg)?;
    let zeros = s.zeros().map_err(flat_error)?;
    let q = QuadDiffHandle::new(s.clone(), 1.0).map_err(flat_error)?;
    let spectrum = flat_spectrum(&s, &c, cfg)?;
    let exact = spectrum.exact.as_ref().expect("flat spectra are exact");

    let mut rows = String::from("class,length,flat\n");
    for (i, w) in c.classes().iter().enumerate() {
        let _ = writeln!(rows, "{w},{},{}", w.len(), ratio(&exact[i]));
    }
    out.csv("flat.csv", &rows)?;

    let mut z = String::from("vertex,angle_over_pi,order,abelian_order\n");
    for p in &zeros {
        let _ = writeln!(
            z,
            "{},{},{},{}",
            p.vertex,
            (p.angle / std::f64::consts::PI).round(),
            p.order,
            p.abelian_order.map_or(String::from("none"), |o| o.to_string())
        );
    }
    out.csv("zeros.csv", &z)?;

    let mut summary = json!({
        "squares": s.n(),
        "genus": s.genus(),
        "convention": cfg.convention,
        "norm": q.norm(),
        "normalized_norm": q.normalize().norm(),
        "normalized_norm_exact": ratio(&Ratio::new(4 * s.n() as i64, 1 + 4 * s.n() as i64)),
        "zeros": zeros.iter().filter(|p| p.order != 0).map(|p| json!({"vertex": p.vertex, "order": p.order, "abelian_order": p.abelian_order})).collect::<Vec<_>>(),
    });
    if s.is_abelian() {
        let periods = abelian_periods(&s, cfg.convention).map_err(flat_error)?;
        let ab = abelian_length_spectrum(&periods, &c);
        let abx = ab.exact.as_ref().expect("abelian spectra are exact");
        let mut rows = String::from("class,length,abelian\n");
        for (i, w) in c.classes().iter().enumerate() {
            let _ = writeln!(rows, "{w},{},{}", w.len(), ratio(&abx[i]));
        }
        out.csv("abelian.csv", &rows)?;
        summary["periods"] = json!(periods.exact.iter().map(ratio).collect::<Vec<_>>());
    }
    out.json("flat.json", &summary)?;
    out.gnuplot(
        "flat.gp",
        "set xlabel 'word length'\nset ylabel 'flat length'\nplot 'flat.csv' using 2:3 with points pt 7 ps 0.5\n",
    )
}

pub fn maintheorem(cfg: &Config, out_dir: &Path, out: &mut Output) -> Result<(), CliError> {
    let fam = family(cfg)?;
    let schedule = Config::require(&cfg.schedule, "schedule")?;
    degenlab::charvar::check_schedule(&schedule, 4).map_err(|e| CliError::Validation(format!("schedule: {e}")))?;
    let c = classes(cfg)?;
    let pc = enumerate_classes(&presentation(cfg)?, Config::require(&cfg.pullback_n, "pullback_n")?);
    let flat = match &cfg.surface {
        Some(_) => Some(flat_spectrum(&load_surface(cfg)?, &c, cfg)?),
        None => None,
    };
    let opts = RayOptions {
        solve: cfg.solve_options()?,
        pullback: cfg.pullback_options(),
        init: match cfg.init {
            InitKind::Embedding => RayInit::Embedding,
            InitKind::Random => RayInit::Random(cfg.seed),
        },
    };
    let mesh = mesh(cfg, out_dir)?;
    let report = degeneration_ray_on(mesh, &fam, &c, &pc, &schedule, flat.as_ref(), &opts).map_err(ray_error)?;

    out.json("ray.json", &report)?;
    out.csv("summary.csv", &report.summary_csv())?;
    let mut cauchy = String::from("t,hopf,translation,pullback\n");
    for (i, t) in schedule.iter().enumerate().skip(1) {
        let get = |v: &[f64]| v.get(i - 1).map_or(String::from("nan"), |x| format!("{x:.12e}"));
        let _ = writeln!(
            cauchy,
            "{t},{},{},{}",
            get(&report.hopf_cauchy),
            get(&report.translation_cauchy),
            get(&report.pullback_cauchy)
        );
    }
    out.csv("cauchy.csv", &cauchy)?;
    if !report.limit.is_empty() {
        let mut rows = String::from("class,length,limit,rate_limit,support");
        if report.flat_comparison.is_some() {
            rows.push_str(",flat");
        }
        rows.push('\n');
        for (i, w) in c.classes().iter().enumerate() {
            let _ = write!(
                rows,
                "{w},{},{:.12e},{:.12e},{}",
                w.len(),
                report.limit[i],
                report.rate_limit[i],
                report.support[i]
            );
            if let Some(f) = &report.flat_comparison {
                let _ = write!(rows, ",{:.12e}", f.flat[i]);
            }
            rows.push('\n');
        }
        out.csv("limit.csv", &rows)?;
    }
    let mut pull = String::from("class,t,pullback,translation,ratio\n");
    for s in &report.samples {
        for (i, w) in pc.classes().iter().enumerate() {
            let (lu, lr) = (s.pullback[i], s.pullback_translation[i]);
            let _ = writeln!(pull, "{w},{},{lu:.12e},{lr:.12e},{:.12e}", s.t, lu / lr);
        }
    }
    out.csv("pullback.csv", &pull)?;
    for (s, (h, b)) in report.samples.iter().zip(report.hopf_samples.iter().zip(&report.beltrami_fields)) {
        out.csv(&format!("hopf_t{}.csv", s.t), &h.to_csv())?;
        out.csv(&format!("beltrami_t{}.csv", s.t), &b.to_csv())?;
    }
    out.gnuplot(
        "maintheorem.gp",
        "set multiplot layout 2,2\n\
         set logscale y\n\
         plot 'summary.csv' using 1:2 with linespoints title 'energy'\n\
         plot 'cauchy.csv' using 1:2 with linespoints title 'Hopf', '' using 1:3 with linespoints title 'translation'\n\
         unset logscale y\n\
         plot 'summary.csv' using 5:(log($7)) with linespoints title 'log median log(1/|mu|)'\n\
         plot 'pullback.csv' using 2:5 with points pt 7 ps 0.3 title 'l_u / l_rho'\n\
         unset multiplot\n",
    )?;
    if !report.all_converged() {
        return Err(CliError::NonConvergence(report.flags.join("; ")));
    }
    Ok(())
}

pub fn hopf_uniqueness(cfg: &Config, out_dir: &Path, out: &mut Output) -> Result<(), CliError> {
    let rep = family(cfg)?.sample(sample_parameter(cfg)?).map_err(rep_error)?;
    let agreement = Config::require(&cfg.agreement, "agreement")?;
    let opts = cfg.solve_options()?;
    let mesh = mesh(cfg, out_dir)?;
    let seeds = [cfg.seed, cfg.seed.wrapping_add(1)];
    let mut runs = Vec::new();
    for seed in seeds {
        let init = EquivariantMap::random(mesh.clone(), rep.clone(), seed, 1.0).map_err(solver_error)?;
        let (u, report) = solve_harmonic(init, &opts).map_err(solver_error)?;
        let h = hopf(&u).normalized();
        out.csv(&format!("hopf_seed{seed}.csv"), &h.to_csv())?;
        runs.push((report, h));
    }
    let distance = runs[1].1.relative_l1(&runs[0].1);
    let converged = runs.iter().all(|(r, _)| r.converged);
    out.json(
        "uniqueness.json",
        &json!({
            "t": sample_parameter(cfg)?,
            "level": mesh.level,
            "seeds": seeds,
            "energies": runs.iter().map(|(r, _)| r.energy()).collect::<Vec<_>>(),
            "sweeps": runs.iter().map(|(r, _)| r.sweeps).collect::<Vec<_>>(),
            "converged": converged,
            "relative_l1": distance,
            "agreement": agreement,
        }),
    )?;
    if !converged {
        return Err(CliError::NonConvergence(format!("seeds {seeds:?}")));
    }
    if !(distance <= agreement) {
        return Err(CliError::Certification(format!("Hopf samples differ by {distance:.3e} > {agreement:e}")));
    }
    Ok(())
}

fn random_tree(rng: &mut impl Rng, n: usize) -> MetricTree {
    let edges =
        (1..n).map(|i| (rng.gen_range(0..i), i, Ratio::new(rng.gen_range(1..7), rng.gen_range(1..4)))).collect();
    MetricTree::new(n, edges).expect("random attachment gives a tree")
}

pub fn fold_lab(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let prongs = cfg.prongs.clone().unwrap_or_else(|| (3..=8).collect());
    if let Some(&k) = prongs.iter().find(|&&k| !(2..=64).contains(&k)) {
        return Err(CliError::Validation(format!("prongs: {k} is outside 2..=64")));
    }
    let mut rows = String::from("prongs,i,j,adjacent,valid\n");
    let mut disagreements = Vec::new();
    for &k in &prongs {
        let star = MetricTree::star(&vec![Ratio::from_integer(1); k]).expect("stars are trees");
        for i in 0..k {
            for j in i + 1..k {
                let adjacent = j - i == 1 || j - i == k - 1;
                let valid = check_fold_validity(&star, 0, k, &[(i, j)]);
                if valid == adjacent || (k == 3 && valid) {
                    disagreements.push(format!("{k}-prong ({i},{j})"));
                }
                let _ = writeln!(rows, "{k},{i},{j},{adjacent},{valid}");
            }
        }
    }
    out.csv("folds.csv", &rows)?;

    let n = cfg.tree_vertices.unwrap_or(8);
    if n < 3 {
        return Err(CliError::Validation(format!("tree_vertices must be at least 3, got {n}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let tree = random_tree(&mut rng, n);
    let v = (0..n).find(|&v| tree.degree(v) >= 2).expect("a tree with 3 vertices has an inner vertex");
    let (d1, d2) = (tree.directions(v)[0], tree.directions(v)[1]);
    let edges = tree.edges();
    let length = edges[d1].length.min(edges[d2].length) / 2;
    let folded = fold(&tree, v, d1, d2, length).map_err(|e| CliError::Certification(e.to_string()))?;
    let (morphism, locus) = is_morphism(&folded.quotient);
    let show = |t: &MetricTree| t.edges().iter().map(|e| json!([e.u, e.v, e.length.to_string()])).collect::<Vec<_>>();
    out.json(
        "fold_demo.json",
        &json!({
            "tree": show(&tree),
            "vertex": v,
            "directions": [d1, d2],
            "length": length.to_string(),
            "folded": show(&folded.tree),
            "quotient_is_morphism": morphism,
            "fold_locus": locus,
        }),
    )?;
    if !disagreements.is_empty() {
        return Err(CliError::Certification(format!("fold rule disagrees at {}", disagreements.join(", "))));
    }
    Ok(())
}
