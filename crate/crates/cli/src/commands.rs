use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use hexmix::harness::acceptance::{run_suite, DEFAULT_SEED};
use hexmix::harness::{coalescence_scaling, exact_spectrum, par_map, tmix_exact};
use hexmix::limitshape::{xi_at, Transect};
use hexmix::rng::replica_seed;
use hexmix::{
    boxed_plane_partitions, cftp, enumerate_all, extreme_tilings, make_domain, parse_grid_lines, run, to_grid_text, volume,
    ChainConfig, HeightField, LimitShape, ShapeParams,
};

use crate::config::{echo, resolve, Common, EnumerateOpts, Format, MixOpts, RenderOpts, SampleOpts, ShapeOpts, VerifyOpts};
use crate::render::{analytic_overlay, arctic_overlay, discrete_overlay, render_svg, Overlays};
use crate::{build_id, CliError, Verdict};

/// `# key=value` lines carried by text artifacts.
fn header(config: &Value) -> String {
    format!("# build={}\n# config={}\n", build_id(), config)
}

fn write_to(path: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

/// Text goes to stdout bare; written to a file it gains the header.
fn emit(common: &Common, config: &Value, fmt: Format, body: &str) -> Result<(), CliError> {
    let body = match fmt {
        Format::Csv | Format::Grid => format!("{}{body}", header(config)),
        Format::Text if common.out.is_some() => format!("{}{body}", header(config)),
        _ => body.to_string(),
    };
    write_to(&common.out, &body)
}

fn json_body(config: &Value, mut v: Value) -> String {
    if let Value::Object(m) = &mut v {
        m.insert("build".into(), Value::String(build_id()));
        m.insert("config".into(), config.clone());
    }
    serde_json::to_string_pretty(&v).expect("JSON value") + "\n"
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Height fields in a grid file: optional `# ` header lines, then grid
/// blocks, each optionally preceded by a one-line `label=value` tag.
pub fn read_fields(text: &str) -> Result<Vec<HeightField>, CliError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = body.split('\n').collect();
    let mut n = 0;
    while n < lines.len() && lines[n].starts_with('#') {
        n += 1;
    }
    let mut out = Vec::new();
    while n < lines.len() {
        if lines[n].contains('=') {
            n += 1;
        }
        let (f, used) = parse_grid_lines(&lines[n..], n + 1)?;
        out.push(f);
        n += used;
    }
    Ok(out)
}

pub fn enumerate(common: Common, opts: EnumerateOpts) -> Verdict {
    let (common, mut opts) = resolve(common, opts)?;
    let limit = *opts.limit.get_or_insert(1_000_000);
    let (a, b, c) = common.sides()?;
    let fmt = common.format_or(Format::Text, &[Format::Json, Format::Csv, Format::Grid])?;
    let config = echo("enumerate", &common, &opts);
    let d = make_domain(a, b, c)?;
    let states = enumerate_all(&d, limit)?;
    let formula = boxed_plane_partitions(a as u32, b as u32, c as u32);
    let agree = formula == Some(states.len() as u128);
    let body = match fmt {
        Format::Json => json_body(
            &config,
            json!({"sides": [a, b, c], "count": states.len(), "product_formula": formula.map(|v| v.to_string()), "agree": agree}),
        ),
        Format::Csv => format!(
            "na,nb,nc,count,product_formula\n{a},{b},{c},{},{}\n",
            states.len(),
            formula.map_or("overflow".to_string(), |v| v.to_string())
        ),
        Format::Grid => states.iter().enumerate().map(|(i, s)| format!("state={i}\n{}", to_grid_text(s))).collect(),
        _ => format!("{}\n", states.len()),
    };
    emit(&common, &config, fmt, &body)?;
    if !agree {
        eprintln!("count mismatch: search {} vs product formula {formula:?}", states.len());
    }
    Ok(agree)
}

pub fn sample(common: Common, opts: SampleOpts) -> Verdict {
    let (mut common, mut opts) = resolve(common, opts)?;
    let (a, b, c) = common.sides()?;
    let q = *common.q.get_or_insert(0.0);
    let seed = *common.seed.get_or_insert(1);
    let replicas = *common.replicas.get_or_insert(1);
    let max_epochs = *opts.max_epochs.get_or_insert(40);
    let fmt = common.format_or(Format::Grid, &[Format::Json, Format::Csv])?;
    let config = echo("sample", &common, &opts);
    let d = make_domain(a, b, c)?;
    let start = extreme_tilings(&d).0;
    let results: Result<Vec<(u64, HeightField, u32, f64, u64)>, hexmix::Error> = par_map(replicas, |i| {
        let s = replica_seed(seed, i as u64);
        let cfg = ChainConfig::new(&d, s).with_q(q);
        match opts.horizon {
            Some(t) => {
                let tr = run(&cfg, &start, t, &[t])?;
                Ok((s, tr.last().clone(), 0, 0.0, tr.events))
            }
            None => {
                let o = cftp(&cfg, max_epochs)?;
                Ok((s, o.field, o.epochs, o.start, o.events))
            }
        }
    })
    .into_iter()
    .collect();
    let results = results?;
    let ok = results.iter().all(|r| r.1.is_admissible());
    let body = match fmt {
        Format::Json => {
            let samples: Vec<Value> = results
                .iter()
                .enumerate()
                .map(|(i, (s, f, ep, st, ev))| {
                    json!({"replica": i, "seed": s, "volume": volume(f), "epochs": ep, "start": st, "events": ev,
                           "grid": to_grid_text(f).lines().collect::<Vec<_>>()})
                })
                .collect();
            json_body(&config, json!({ "samples": samples }))
        }
        Format::Csv => {
            let mut s = "replica,seed,volume,epochs,start,events\n".to_string();
            for (i, (sd, f, ep, st, ev)) in results.iter().enumerate() {
                let _ = writeln!(s, "{i},{sd},{},{ep},{st:?},{ev}", volume(f));
            }
            s
        }
        _ => results.iter().enumerate().map(|(i, r)| format!("sample={i}\n{}", to_grid_text(&r.1))).collect(),
    };
    emit(&common, &config, fmt, &body)?;
    Ok(ok)
}

pub fn mix(common: Common, opts: MixOpts) -> Verdict {
    let (mut common, mut opts) = resolve(common, opts)?;
    let seed = *common.seed.get_or_insert(1);
    let fmt = common.format_or(Format::Text, &[Format::Json, Format::Csv])?;
    if let Some(sizes) = opts.sizes.clone() {
        let replicas = *common.replicas.get_or_insert(100);
        let cap = *opts.cap.get_or_insert(1000.0);
        let config = echo("mix", &common, &opts);
        let sweep = coalescence_scaling(&sizes, replicas, seed, cap)?;
        let body = match fmt {
            Format::Json => json_body(&config, json!({ "report": sweep.report })),
            Format::Csv => sweep.report.to_csv(),
            _ => sweep.report.to_text(),
        };
        emit(&common, &config, fmt, &body)?;
        return Ok(sweep.report.passed());
    }
    let (a, b, c) = common.sides()?;
    let q = *common.q.get_or_insert(0.0);
    let tol = *common.tol.get_or_insert(1e-12);
    let eps = *opts.eps.get_or_insert(0.25);
    let config = echo("mix", &common, &opts);
    let spec = exact_spectrum(&make_domain(a, b, c)?, q)?;
    let tmix = tmix_exact(&spec, eps)?;
    let residuals = [spec.row_sum_residual(), spec.stationarity_residual(), spec.detailed_balance_residual()];
    let ok = residuals.iter().all(|&r| r < tol);
    let body = match fmt {
        Format::Json => json_body(
            &config,
            json!({"states": spec.len(), "gap": spec.gap, "eps": eps, "tmix": tmix,
                   "row_sum_residual": residuals[0], "stationarity_residual": residuals[1],
                   "detailed_balance_residual": residuals[2]}),
        ),
        Format::Csv => {
            let mut s = "t,tv\n".to_string();
            for i in 0..=60 {
                let t = 3.0 * tmix * i as f64 / 60.0;
                let _ = writeln!(s, "{},{}", num(t), num(spec.tv(t)));
            }
            s
        }
        _ => format!(
            "states {}\ngap {:.12}\nt_mix({eps}) {tmix:.12}\nresiduals rows {:.2e} stationarity {:.2e} balance {:.2e}\n",
            spec.len(),
            spec.gap,
            residuals[0],
            residuals[1],
            residuals[2]
        ),
    };
    emit(&common, &config, fmt, &body)?;
    Ok(ok)
}

fn arctic_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.arctic.csv"))
}

pub fn shape(common: Common, opts: ShapeOpts) -> Verdict {
    let (mut common, mut opts) = resolve(common, opts)?;
    let (a, b, c) = common.sides()?;
    if a <= 0 || b <= 0 || c <= 0 {
        return Err(CliError::Usage(format!("sides must be positive, got {a} {b} {c}")));
    }
    let q = *common.q.get_or_insert(0.0);
    let tol = *common.tol.get_or_insert(1e-9);
    let grid = *opts.grid.get_or_insert(20);
    let arctic_points = *opts.arctic_points.get_or_insert(400);
    let fmt = common.format_or(Format::Text, &[Format::Json, Format::Csv])?;
    let config = echo("shape", &common, &opts);
    let (bs, cs) = (b as f64 / a as f64, c as f64 / a as f64);
    let shape = LimitShape::new(ShapeParams::new(q, 1.0, bs, cs)?)?;
    let mut ok = true;
    let mut summary = serde_json::Map::new();
    let mut text = String::new();

    let tangency: Vec<Value> = shape
        .arctic
        .tangency_points()
        .iter()
        .map(|(s, (x, y))| {
            let _ = writeln!(text, "tangency {} ({x:.12}, {y:.12})", s.name());
            json!({"side": s.name(), "x": x, "y": y})
        })
        .collect();
    summary.insert("tangency".into(), Value::Array(tangency));

    if opts.conic_check == Some(true) {
        let outline = shape.arctic.outline(100);
        let xi = outline.iter().map(|&(x, y)| xi_at(x, y, &shape.params).abs()).fold(0.0, f64::max);
        let _ = writeln!(text, "xi residual {xi:.3e}");
        summary.insert("xi_residual".into(), json!(xi));
        ok &= xi < tol;
        if q == 0.0 && a == b && b == c {
            let conic = outline
                .iter()
                .map(|&(x, y)| ((x + y - 2.0).powi(2) + 3.0 * (x - y).powi(2) - 3.0).abs())
                .fold(0.0, f64::max);
            let _ = writeln!(text, "conic residual {conic:.3e}");
            summary.insert("conic_residual".into(), json!(conic));
            ok &= conic < tol;
        }
    }

    if opts.edge_check == Some(true) {
        let laterals = hexmix::harness::acceptance::edge_laterals();
        let y = hexmix::harness::acceptance::EDGE_TRANSECT_Y;
        let r = shape.edge_scaling_check(Transect::RightOfTangency, y, &laterals)?;
        let pass = (r.exponent_height - 1.5).abs() <= 0.05 && (r.exponent_dy - 0.5).abs() <= 0.05;
        let _ = writeln!(text, "edge exponents H {:.4} dyH {:.4}", r.exponent_height, r.exponent_dy);
        summary.insert("edge_exponent_height".into(), json!(r.exponent_height));
        summary.insert("edge_exponent_dy".into(), json!(r.exponent_dy));
        ok &= pass;
    }

    let body = match fmt {
        Format::Text => text,
        Format::Json => json_body(&config, Value::Object(summary)),
        _ => {
            let mut s = "x,y,phase,H,dHx,dHy,xi,d,e\n".to_string();
            let nx = ((1.0 + cs) * grid as f64).round() as usize;
            let ny = ((bs + cs) * grid as f64).round() as usize;
            for j in 0..=ny {
                for i in 0..=nx {
                    let (x, y) = (i as f64 / grid as f64, j as f64 / grid as f64);
                    if !shape.params.contains(x, y) {
                        continue;
                    }
                    let info = shape.slope(x, y)?;
                    let e = shape.edge_coords(x, y, f64::INFINITY)?;
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{}",
                        num(x),
                        num(y),
                        info.phase.name(),
                        num(shape.height(x, y)?),
                        num(info.grad.0),
                        num(info.grad.1),
                        num(info.xi),
                        num(e.side_distance),
                        num(e.lateral)
                    );
                }
            }
            if let Some(out) = &common.out {
                let mut arc = "x,y\n".to_string();
                for (x, y) in shape.arctic.outline(arctic_points) {
                    let _ = writeln!(arc, "{},{}", num(x), num(y));
                }
                std::fs::write(arctic_path(out), format!("{}{arc}", header(&config)))?;
            }
            s
        }
    };
    emit(&common, &config, fmt, &body)?;
    Ok(ok)
}

pub fn verify(common: Common, opts: VerifyOpts) -> Verdict {
    let (mut common, mut opts) = resolve(common, opts)?;
    let seed = *common.seed.get_or_insert(DEFAULT_SEED);
    let suite = opts.suite.get_or_insert_with(|| "primary".to_string()).clone();
    if suite != "primary" {
        return Err(CliError::Usage(format!("unknown suite {suite:?}; the only suite is \"primary\"")));
    }
    let fmt = common.format_or(Format::Text, &[Format::Json])?;
    let config = echo("verify", &common, &opts);
    let only = opts.criteria.clone();
    let outcomes = run_suite(seed, |id| only.as_ref().map_or(true, |v| v.contains(&id)), |o| eprintln!("{}", o.line()));
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let body = match fmt {
        Format::Json => json_body(&config, json!({"suite": suite, "seed": seed, "outcomes": outcomes, "passed": passed, "total": outcomes.len()})),
        _ => {
            let mut s = String::new();
            for o in &outcomes {
                let _ = writeln!(s, "{:>2}  {}  {:<46}  {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.title, o.detail);
            }
            let _ = writeln!(s, "{passed}/{} criteria passed", outcomes.len());
            s
        }
    };
    emit(&common, &config, fmt, &body)?;
    let slow: Vec<u32> = outcomes.iter().filter(|o| !o.within_budget()).map(|o| o.id).collect();
    if !slow.is_empty() {
        eprintln!("over time budget: {slow:?}");
    }
    Ok(passed == outcomes.len() && slow.is_empty())
}

pub fn render(common: Common, opts: RenderOpts) -> Verdict {
    let (mut common, mut opts) = resolve(common, opts)?;
    let q = *common.q.get_or_insert(0.0);
    let unit = *opts.unit.get_or_insert(20.0);
    common.format_or(Format::Svg, &[])?;
    let field = match &opts.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            read_fields(&text)?
                .into_iter()
                .next()
                .ok_or_else(|| CliError::Usage(format!("{}: no height grid", path.display())))?
        }
        None => {
            let (a, b, c) = common.sides()?;
            let seed = *common.seed.get_or_insert(1);
            cftp(&ChainConfig::new(&make_domain(a, b, c)?, seed).with_q(q), 40)?.field
        }
    };
    let config = echo("render", &common, &opts);
    let mut overlays = Overlays::default();
    if opts.arctic == Some(true) {
        overlays.arctic = Some(arctic_overlay(&field, q, 400)?);
    }
    if opts.analytic_lines == Some(true) {
        overlays.analytic = analytic_overlay(&field, q, 8)?;
    }
    if opts.discrete_lines == Some(true) {
        overlays.discrete = discrete_overlay(&field)?;
    }
    let meta = json!({"build": build_id(), "config": config}).to_string();
    write_to(&common.out, &render_svg(&field, &overlays, unit, &meta))?;
    Ok(true)
}
