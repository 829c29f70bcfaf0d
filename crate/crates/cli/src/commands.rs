use std::collections::BTreeSet;
use std::path::Path;

use graphprod::cayley::{four_point_delta, spell_letters, walk};
use graphprod::domain::{canonicalize, coning_family, format_class, parse_class, relation, verify_clean_containers};
use graphprod::hhs::{self, fixtures};
use graphprod::morse::{self, RSchedule};
use graphprod::{build_ball, BallOptions, GraphProduct, HhsFile, HhsInstance, MetricKind, NormalForm};
use serde_json::json;

use crate::config::ToolkitConfig;
use crate::output::Run;
use crate::{Cli, CliError, Command, Fixture, HhsCommand, Metric, ProbeCommand};

pub fn dispatch(cli: &Cli, config: &ToolkitConfig, run: &mut Run) -> Result<(), CliError> {
    match &cli.command {
        Command::Hhs(cmd) => return hhs_command(cmd, run),
        Command::Normalize { word } => {
            let gp = config.graph_product()?;
            let x = gp.parse_word(word)?;
            run.json("normalize.json", &element_json(&gp, word, &x))?;
            say(&gp.format(&x));
        }
        Command::Mul { left, right } => {
            let gp = config.graph_product()?;
            let x = gp.mul(&gp.parse_word(left)?, &gp.parse_word(right)?);
            run.json("mul.json", &element_json(&gp, &format!("{left} * {right}"), &x))?;
            say(&gp.format(&x));
        }
        Command::Ball(args) => {
            let gp = config.graph_product()?;
            let center = gp.parse_word(&args.center)?;
            let ball = build_ball(&gp, &center, args.radius, metric_kind(&gp, args.metric)?, ball_options(config))?;
            run.csv("ball_points.csv", |out| ball.write_points_csv(out))?;
            run.csv("ball_edges.csv", |out| ball.write_edges_csv(out))?;
            let summary = json!({
                "center": gp.format(&center),
                "radius": args.radius,
                "metric": metric_name(args.metric),
                "points": ball.len(),
            });
            print(&run.json("ball.json", &summary)?);
        }
        Command::Delta(args) => {
            let gp = config.graph_product()?;
            let ball = build_ball(&gp, &gp.identity(), args.radius, metric_kind(&gp, args.metric)?, ball_options(config))?;
            let budget = args.budget.unwrap_or(config.budgets.delta_budget);
            let report = four_point_delta(&ball, budget, run.seed());
            let out = json!({
                "radius": args.radius,
                "metric": metric_name(args.metric),
                "budget": budget,
                "seed": run.seed(),
                "report": report,
            });
            print(&run.json("delta.json", &out)?);
        }
        Command::Classes(args) => {
            let gp = config.graph_product()?;
            if let Some(pair) = &args.relation {
                let (a, b) = (parse_class(&gp, &pair[0])?, parse_class(&gp, &pair[1])?);
                let rel = relation(&gp, &a, &b)?;
                let out = json!({
                    "a": format_class(&gp, &a),
                    "b": format_class(&gp, &b),
                    "relation": rel.to_string(),
                });
                print(&run.json("relation.json", &out)?);
            } else if args.list {
                let classes = list_classes(&gp, args.length)?;
                let out = json!({ "length": args.length, "count": classes.len(), "classes": classes });
                print(&run.json("classes.json", &out)?);
            } else {
                return Err(CliError::Usage("classes needs --list or --relation A B".into()));
            }
        }
        Command::CleanContainers { depth } => {
            let gp = config.graph_product()?;
            let report = verify_clean_containers(&gp, *depth)?;
            let v = run.json("clean_containers.json", &report)?;
            print(&json!({
                "depth": v["depth"], "pairs_checked": v["pairs_checked"],
                "triples_checked": v["triples_checked"], "violations": v["violations"],
            }));
        }
        Command::ConingFamily => {
            let gp = config.graph_product()?;
            let graph = gp.graph();
            let family: Vec<String> = coning_family(graph)?
                .into_iter()
                .map(|s| graph.format_subgraph(s))
                .collect();
            print(&run.json("coning_family.json", &json!({ "family": family }))?);
        }
        Command::Stability(args) => {
            let gp = config.graph_product()?;
            if args.subgroup {
                let gens = args
                    .element
                    .split(',')
                    .map(|w| gp.parse_word(w))
                    .collect::<Result<Vec<_>, _>>()?;
                let v = morse::subgroup_stability(&gp, &gens, args.nmax, &config.schedule, &config.thresholds)?;
                let out = run.json("stability.json", &v)?;
                print(&json!({ "verdict": out["verdict"], "probes": v.probes.len() }));
            } else {
                let g = gp.parse_word(&args.element)?;
                let v = morse::stability_verdict(&gp, &g, args.nmax, &config.schedule, &config.thresholds)?;
                if let Some(curve) = &v.curve {
                    run.csv("distortion.csv", |out| curve.write_csv(out))?;
                }
                let out = run.json("stability.json", &v)?;
                print(&json!({ "element": out["element"], "verdict": out["verdict"], "evidence": out["evidence"] }));
            }
        }
        Command::Distortion(args) => {
            let gp = config.graph_product()?;
            let g = gp.parse_word(&args.element)?;
            let schedule = match &args.radii {
                Some(radii) => RSchedule::Fixed { radii: radii.clone() },
                None => config.schedule.clone(),
            };
            let curve = morse::distortion_curve(&gp, &g, args.nmax, &schedule)?;
            run.csv("distortion.csv", |out| curve.write_csv(out))?;
            print(&run.json("distortion.json", &curve)?);
        }
        Command::Probe(cmd) => probe_command(cmd, config, run)?,
    }
    Ok(())
}

/// Writes a line to stdout; a closed pipe is not an error.
fn say(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print(value: &serde_json::Value) {
    say(&serde_json::to_string_pretty(value).expect("values serialize"));
}

fn element_json(gp: &GraphProduct, input: &str, x: &NormalForm) -> serde_json::Value {
    json!({
        "input": input,
        "normal_form": gp.format(x),
        "syllables": x.syllable_count(),
        "word_length": gp.word_length(x),
    })
}

fn ball_options(config: &ToolkitConfig) -> BallOptions {
    BallOptions {
        node_limit: config.budgets.node_limit,
        ..BallOptions::default()
    }
}

fn metric_kind(gp: &GraphProduct, metric: Metric) -> Result<MetricKind, CliError> {
    Ok(match metric {
        Metric::Standard => MetricKind::Standard,
        Metric::Cone => MetricKind::ConedVertexStars,
        Metric::Family => MetricKind::ConedFamily(coning_family(gp.graph())?),
    })
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Standard => "standard",
        Metric::Cone => "cone",
        Metric::Family => "family",
    }
}

/// Classes `[gΛ]` over the coning family and the whole graph, for `|g|` up
/// to `length`, sorted by subgraph then representative.
fn list_classes(gp: &GraphProduct, length: u64) -> Result<Vec<String>, CliError> {
    let graph = gp.graph();
    let mut lambdas = coning_family(graph)?;
    if !lambdas.contains(&graph.all()) {
        lambdas.push(graph.all());
    }
    let ball = gp.subgroup_ball(graph.all(), length);
    let mut out = Vec::new();
    for lambda in lambdas {
        let mut reps: BTreeSet<(u64, String)> = BTreeSet::new();
        for g in &ball {
            let c = canonicalize(gp, g, lambda);
            reps.insert((gp.word_length(&c.rep), format_class(gp, &c)));
        }
        out.extend(reps.into_iter().map(|(_, s)| s));
    }
    Ok(out)
}

fn read_hhs(path: &Path) -> Result<HhsFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| graphprod::HhsError::Parse(e.to_string()).into())
}

fn hhs_command(cmd: &HhsCommand, run: &mut Run) -> Result<(), CliError> {
    match cmd {
        HhsCommand::Check { file, e } => {
            let mut f = read_hhs(file)?;
            if let Some(e) = e {
                f.e = *e;
            }
            let report = hhs::check_axioms(&HhsInstance::new(&f)?)?;
            let v = run.json("hhs_check.json", &report)?;
            let summary: Vec<serde_json::Value> = report
                .axioms
                .iter()
                .map(|a| json!({ "axiom": a.axiom, "status": a.status, "minimal_constant": a.minimal_constant }))
                .collect();
            print(&json!({
                "claimed_e": v["claimed_e"], "minimal_e": v["minimal_e"],
                "all_pass": v["all_pass"], "axioms": summary,
            }));
        }
        HhsCommand::Maximize { file, m } => {
            let f = read_hhs(file)?;
            let m = m.or(f.m).ok_or_else(|| CliError::Usage("no M given on the command line or in the file".into()))?;
            let out = hhs::maximize(&HhsInstance::new(&f)?, m)?;
            let v = run.json("hhs_maximize.json", &out)?;
            print(&json!({
                "M": m, "T": v["T"], "SM": v["SM"], "SMplus": v["SMplus"],
                "classification": v["classification"],
                "topspace_diameter": out.topspace.diameter,
            }));
        }
        HhsCommand::Fit { file, threshold } => {
            let inst = HhsInstance::new(&read_hhs(file)?)?;
            let fit = hhs::distance_formula_fit(&inst, *threshold);
            print(&run.json("hhs_fit.json", &fit)?);
        }
        HhsCommand::Fixture { name, e } => {
            let f = match name {
                Fixture::Grid => fixtures::grid(*e),
                Fixture::GridTransverse => fixtures::grid_transverse(*e),
                Fixture::GridMissingRho => fixtures::grid_missing_rho(*e),
                Fixture::GridConstantPi => fixtures::grid_constant_pi_h(*e),
                Fixture::GridShrunkV => fixtures::grid_shrunk_v(*e),
                Fixture::Single => fixtures::single_domain(6),
            };
            run.json("instance.json", &f)?;
            say(&serde_json::to_string(&f).expect("instances serialize"));
        }
    }
    Ok(())
}

fn probe_command(cmd: &ProbeCommand, config: &ToolkitConfig, run: &mut Run) -> Result<(), CliError> {
    let gp = config.graph_product()?;
    match cmd {
        ProbeCommand::Mltg { pieces, spiral, window } => {
            let paths = match (pieces, spiral) {
                (Some(text), _) => {
                    let mut at = gp.identity();
                    let mut paths = Vec::new();
                    for word in text.split(';') {
                        let letters = spell_letters(&gp, &gp.normalize(&gp.parse_syllables(word)?)?);
                        let path = walk(&gp, &at, &letters);
                        at = path.last().unwrap().clone();
                        paths.push(path);
                    }
                    paths
                }
                (None, Some(s)) => {
                    if s.len() != 2 {
                        return Err(CliError::Usage("--spiral takes SIDE,WINDINGS".into()));
                    }
                    if gp.rank() < 2 || !gp.commute(0, 1) {
                        return Err(CliError::Usage("a spiral needs two commuting vertices".into()));
                    }
                    morse::square_spiral(&gp, s[0], s[1] as usize)
                }
                (None, None) => return Err(CliError::Usage("mltg needs --pieces or --spiral".into())),
            };
            let report = morse::local_to_global_probe(&gp, &paths, *window, config.qg)?;
            print(&run.json("mltg.json", &report)?);
        }
        ProbeCommand::Detect { element, nmax, radius } => {
            let g = gp.parse_word(element)?;
            let path = morse::orbit_path(&gp, &g, *nmax);
            let radius = radius.unwrap_or_else(|| path.iter().map(|x| gp.word_length(x)).max().unwrap_or(0));
            let report = morse::detectability_probe(&gp, &path, config.qg, radius)?;
            print(&run.json("detect.json", &report)?);
        }
        ProbeCommand::Gauge { element, power, samples } => {
            let g = gp.normalize(&gp.parse_syllables(element)?)?;
            let letters: Vec<_> = (0..*power).flat_map(|_| spell_letters(&gp, &g)).collect();
            let path = walk(&gp, &gp.identity(), &letters);
            if gp.word_length(path.last().unwrap()) != letters.len() as u64 {
                return Err(CliError::Usage(format!("{element} to the power {power} is not spelled geodesically")));
            }
            let budget = samples.unwrap_or(config.budgets.gauge_samples);
            let table = morse::morse_gauge_table(&gp, &path, &morse::default_kc_grid(), budget, run.seed())?;
            run.csv("gauge.csv", |out| table.write_csv(out))?;
            print(&run.json("gauge.json", &table)?);
        }
    }
    Ok(())
}
