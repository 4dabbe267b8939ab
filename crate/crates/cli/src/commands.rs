//! Validation and dispatch of each subcommand.

use std::f64::consts::PI;
use std::process::ExitCode;

use serde_json::{json, to_value, Value};
use tvgeom::asymp::{compare_series, ScaledLevel, VolumeSign};
use tvgeom::qnum::Level;
use tvgeom::quad::Tolerance;
use tvgeom::semiclassical::{
    invariant_mc, invariant_s3, normalization_grid, verify_delinfty, verify_normalization,
    verify_sjac, McOptions, NormalizationContext, SignAssignment,
};
use tvgeom::sixj::{Convention, SixTuple, SixjTable};
use tvgeom::sphgeom::{euclidean_tetra, tetra_geometry, EdgeLengths6};
use tvgeom::statesum::{tv_with, StateSumOptions};
use tvgeom::trimesh::{bundled_corpus, fivecell, Move, Triangulation};

use crate::output::{emit, Failure, Output};
use crate::{
    AsympArgs, Cli, Command, ConventionArg, CorpusArgs, GeomCommand, GeometryArg, IdentitiesArgs,
    Identity, MethodArg, MoveArg, PachnerArgs, SemiclassicalCommand, SixjArgs, TvArgs,
    VolumeSignArg,
};

type Outcome = Result<Output, Failure>;

pub fn run(cli: Cli) -> ExitCode {
    let format = cli.format;
    let result = configure_threads(cli.threads).and_then(|()| dispatch(cli));
    emit(result, format)
}

fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    match threads {
        Some(0) => Err(Failure::usage("--threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage("--threads", e.to_string())),
        None => Ok(()),
    }
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Tv(a) => tv(a),
        Command::Sixj(a) => sixj(a),
        Command::Asymp(a) => asymp(a),
        Command::Geom { what } => geom(what),
        Command::Identities(a) => identities(a),
        Command::Semiclassical { what } => semiclassical(what),
        Command::Pachner(a) => pachner(a),
        Command::Corpus(a) => corpus(a),
    }
}

fn level(r: u32) -> Result<Level, Failure> {
    if r < 3 {
        return Err(Failure::usage(
            "--r",
            format!("level must be at least 3, got {r}"),
        ));
    }
    Level::new(r).map_err(|e| Failure::usage("--r", e.to_string()))
}

fn six_colors(colors: &[u32], level: Level) -> Result<SixTuple, Failure> {
    let twice: [u32; 6] = colors
        .try_into()
        .map_err(|_| Failure::usage("--colors", "expected six doubled colors"))?;
    let max = level.max_twice_j();
    if let Some(&c) = twice.iter().find(|&&c| c > max) {
        return Err(Failure::usage(
            "--colors",
            format!(
                "color {} exceeds (r-2)/2 = {} at r = {} (colors are doubled integers 2j)",
                half(c),
                half(max),
                level.r()
            ),
        ));
    }
    Ok(SixTuple::from_twice(twice))
}

fn half(twice: u32) -> String {
    if twice.is_multiple_of(2) {
        (twice / 2).to_string()
    } else {
        format!("{twice}/2")
    }
}

fn load(path: &std::path::Path) -> Result<Triangulation, Failure> {
    Triangulation::load(path).map_err(|e| match e {
        tvgeom::Error::Io(_) | tvgeom::Error::Json(_) | tvgeom::Error::InvalidInput(_) => {
            Failure::usage("--in", format!("{}: {e}", path.display()))
        }
        other => other.into(),
    })
}

fn tv(a: TvArgs) -> Outcome {
    let level = level(a.r)?;
    let t = load(&a.input)?;
    let res = tv_with(
        &t,
        level,
        &StateSumOptions {
            node_budget: a.budget,
            threads: None,
        },
    )?;
    Ok(Output::json(json!({
        "triangulation": t.name(),
        "r": a.r,
        "value": res.value,
        "colorings": res.admissible_count,
        "colorings_visited": res.colorings_visited,
        "imaginary_residue": res.imaginary_residue,
        "delta": res.delta,
    })))
}

fn sixj(a: SixjArgs) -> Outcome {
    let level = level(a.r)?;
    let t = six_colors(&a.colors, level)?;
    let table = SixjTable::shared(level);
    let conv = match a.convention {
        ConventionArg::Tv => Convention::TuraevViro,
        ConventionArg::Classical => Convention::Classical,
    };
    let v = table.sixj(&t, conv);
    let mut out = json!({
        "r": a.r,
        "colors": t.twice(),
        "admissible": t.is_q_admissible(level),
        "racah": table.racah(&t),
        "re": v.re(),
        "im": v.im(),
    });
    if a.high_precision {
        out["racah_high_precision"] = json!(tvgeom::sixj::racah_high_precision(&t, level)?);
    }
    Ok(Output::json(out))
}

fn asymp(a: AsympArgs) -> Outcome {
    let base = level(a.r)?;
    let t = six_colors(&a.colors, base)?;
    if !t.is_q_admissible(base) {
        return Err(Failure::usage(
            "--colors",
            format!("{:?} is not admissible at r = {}", t.twice(), a.r),
        ));
    }
    if a.kmin == 0 || a.kmin > a.kmax {
        return Err(Failure::usage("--kmin", "need 1 <= kmin <= kmax"));
    }
    if a.window == 0 {
        return Err(Failure::usage("--window", "must be positive"));
    }
    ScaledLevel::new(a.r, a.kmax).map_err(|e| Failure::usage("--kmax", e.to_string()))?;
    let sign = match a.volume_sign {
        VolumeSignArg::Plus => VolumeSign::Plus,
        VolumeSignArg::Minus => VolumeSign::Minus,
    };
    let series = compare_series(&t, a.r, a.kmin..=a.kmax, a.window, sign)?;
    let csv = series.to_csv();
    if let Some(path) = &a.csv {
        std::fs::write(path, &csv)
            .map_err(|e| Failure::usage("--csv", format!("{}: {e}", path.display())))?;
    }
    let mut value = to_value(&series).expect("serializable");
    value["non_increasing"] = json!(series.non_increasing());
    Ok(Output {
        value,
        table: Some(csv),
    })
}

fn geom(what: GeomCommand) -> Outcome {
    let GeomCommand::Tetra { lengths, geometry } = what;
    let l: [f64; 6] = lengths
        .as_slice()
        .try_into()
        .map_err(|_| Failure::usage("--lengths", "expected six lengths"))?;
    if l.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Failure::usage(
            "--lengths",
            "lengths must be finite and non-negative",
        ));
    }
    let l = EdgeLengths6(l);
    let value = match geometry {
        GeometryArg::Spherical => {
            if l.0.iter().any(|&x| x > PI) {
                return Err(Failure::usage(
                    "--lengths",
                    "spherical lengths must lie in [0, π]",
                ));
            }
            let g = tetra_geometry(&l)?;
            json!({
                "geometry": "spherical",
                "lengths": l.0,
                "gram_det": g.gram_det,
                "interior_angles": g.interior_angles,
                "exterior_angles": g.exterior_angles,
                "volume": g.volume,
            })
        }
        GeometryArg::Euclidean => {
            let g = euclidean_tetra(&l)?;
            json!({
                "geometry": "euclidean",
                "lengths": l.0,
                "cayley_menger": g.cayley_menger,
                "interior_angles": g.interior_angles,
                "volume": g.volume,
            })
        }
    };
    Ok(Output::json(value))
}

/// Reports the identity and fails with an accuracy error when it misses
/// the tolerance.
fn judged(identity: &str, target: f64, tol: f64, deviation: f64, detail: Value) -> Outcome {
    let value = json!({
        "identity": identity,
        "target": target,
        "tolerance": tol,
        "max_deviation": deviation,
        "holds": deviation <= tol,
        "detail": detail,
    });
    if deviation <= tol {
        Ok(Output::json(value))
    } else {
        Err(Failure::Compute {
            kind: "accuracy",
            message: format!("{identity}: deviation {deviation:.3e} exceeds tolerance {tol:.3e}"),
            detail: Some(value),
        })
    }
}

fn identities(a: IdentitiesArgs) -> Outcome {
    let tol = a.tol.unwrap_or(match a.identity {
        Identity::Sjac => 1e-4,
        _ => 1e-6,
    });
    if !(tol > 0.0) {
        return Err(Failure::usage("--tol", "must be positive"));
    }
    let samples = a.samples.unwrap_or(match a.identity {
        Identity::Sjac => 100,
        _ => 10,
    });
    if samples == 0 {
        return Err(Failure::usage("--samples", "must be positive"));
    }
    match a.identity {
        Identity::Sjac => {
            let r = verify_sjac(a.seed, samples)?;
            judged(
                "sjac",
                0.0,
                tol,
                r.max_relative_deviation,
                to_value(&r).expect("serializable"),
            )
        }
        Identity::Normalization => {
            let ctx = match a.context.as_deref() {
                None => NormalizationContext::uniform(0.5 * PI),
                Some(&[l02, l03, l12, l13]) => NormalizationContext { l02, l03, l12, l13 },
                Some(_) => return Err(Failure::usage("--context", "expected four lengths")),
            };
            let grid = normalization_grid(&ctx, samples);
            let quad_tol = Tolerance::new(tol * 1e-3, tol * 1e-3);
            let points = verify_normalization(&ctx, &grid, quad_tol)?;
            let dev = points
                .iter()
                .map(|p| (p.value - PI).abs())
                .fold(0.0, f64::max);
            judged(
                "normalization",
                PI,
                tol,
                dev,
                to_value(&points).expect("serializable"),
            )
        }
        Identity::Delinfty => {
            let grid: Vec<f64> = (0..samples)
                .map(|i| 0.1 + (PI - 0.2) * i as f64 / (samples.max(2) - 1) as f64)
                .collect();
            let points = grid
                .iter()
                .map(|&x| verify_delinfty(x))
                .collect::<tvgeom::Result<Vec<_>>>()?;
            let dev = points
                .iter()
                .map(|p| (p.value - 2.0).abs())
                .fold(0.0, f64::max);
            judged(
                "delinfty",
                2.0,
                tol,
                dev,
                to_value(&points).expect("serializable"),
            )
        }
    }
}

fn semiclassical(what: SemiclassicalCommand) -> Outcome {
    let SemiclassicalCommand::S3 {
        method,
        samples,
        seed,
        epsilon,
        signs,
    } = what;
    let result = match method {
        MethodArg::Reduction => invariant_s3()?,
        MethodArg::Mc => {
            if samples == 0 {
                return Err(Failure::usage("--samples", "must be positive"));
            }
            if !(epsilon >= 0.0) {
                return Err(Failure::usage("--epsilon", "must be non-negative"));
            }
            let s = match signs {
                None => SignAssignment::all_plus(5),
                Some(v) if v.len() == 5 && v.iter().all(|&x| x == 1 || x == -1) => {
                    SignAssignment(v)
                }
                Some(_) => {
                    return Err(Failure::usage(
                        "--signs",
                        "expected five signs, each 1 or -1",
                    ))
                }
            };
            let opts = McOptions {
                samples,
                seed,
                epsilon,
                ..McOptions::default()
            };
            invariant_mc(&fivecell(), &s, &opts)?
        }
    };
    Ok(Output::json(to_value(&result).expect("serializable")))
}

fn exactly<T>(
    flag: &'static str,
    v: Option<Vec<T>>,
    n: usize,
    why: &str,
) -> Result<Vec<T>, Failure> {
    let v = v.ok_or_else(|| Failure::usage(flag, format!("required for {why}")))?;
    if v.len() != n {
        return Err(Failure::usage(
            flag,
            format!("expected {n} comma-separated values, got {}", v.len()),
        ));
    }
    Ok(v)
}

fn pachner(a: PachnerArgs) -> Outcome {
    let t = load(&a.input)?;
    let nv = t.num_vertices();
    let check = |flag: &'static str, vs: &[usize]| -> Result<(), Failure> {
        match vs.iter().find(|&&v| v >= nv) {
            Some(v) => Err(Failure::usage(
                flag,
                format!("vertex {v} out of range 0..{nv}"),
            )),
            None => Ok(()),
        }
    };
    let mv = match a.kind {
        MoveArg::TwoThree => {
            let f = exactly("--face", a.face, 3, "a 2-3 move")?;
            check("--face", &f)?;
            let face = *t
                .faces_with_vertices(f[0], f[1], f[2])
                .first()
                .ok_or_else(|| Failure::usage("--face", format!("no face {f:?}")))?;
            Move::TwoThree { face }
        }
        MoveArg::ThreeTwo => {
            let e = exactly("--edge", a.edge, 2, "a 3-2 move")?;
            check("--edge", &e)?;
            let edge = t
                .edge_between(e[0], e[1])
                .map_err(|_| Failure::usage("--edge", format!("no edge {e:?}")))?;
            Move::ThreeTwo { edge }
        }
        MoveArg::OneFour => {
            let v = exactly("--tet", a.tet, 4, "a 1-4 move")?;
            check("--tet", &v)?;
            let tet = *t
                .tets_with_vertices([v[0], v[1], v[2], v[3]])
                .first()
                .ok_or_else(|| Failure::usage("--tet", format!("no tetrahedron {v:?}")))?;
            Move::OneFour { tet }
        }
        MoveArg::FourOne => {
            let vertex = a
                .vertex
                .ok_or_else(|| Failure::usage("--vertex", "required for a 4-1 move"))?;
            check("--vertex", &[vertex])?;
            Move::FourOne { vertex }
        }
    };
    let (next, record) = t.apply(&mv)?;
    next.save(&a.out)?;
    Ok(Output::json(json!({
        "out": a.out.display().to_string(),
        "counts": next.counts(),
        "violations": next.validate(),
        "record": record,
    })))
}

fn corpus(a: CorpusArgs) -> Outcome {
    let mut files = Vec::new();
    for (name, t) in bundled_corpus() {
        if let Some(dir) = &a.out {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::usage("--out", format!("{}: {e}", dir.display())))?;
            t.save(&dir.join(name))?;
        }
        files.push(json!({
            "file": name,
            "name": t.name(),
            "counts": t.counts(),
            "valid": t.validate().is_empty(),
        }));
    }
    Ok(Output::json(json!({ "files": files })))
}
