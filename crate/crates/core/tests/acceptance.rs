//! Acceptance checks. Run with `cargo test --test acceptance`; each check
//! prints one `PASS` or `FAIL` line with its running time and limit.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nrcprov::annot::{ann, color_env, AEnv, AValue, Color};
use nrcprov::ast::Expr;
use nrcprov::corpus::{column_collapse, fig_actx, fig_annotated_env, fig_env, fig_types, query, QUERIES};
use nrcprov::gen::{random_annotation, random_env, trial_rng, QueryGen};
use nrcprov::parse::parse_type;
use nrcprov::track::Mutation;
use nrcprov::typecheck::TypeCtx;
use nrcprov::verify::{
    auto_context, check_color_invariance, check_dependency_correctness, check_erasure,
    check_static_soundness, collapse_into, minimality_report, TrialConfig,
};
use nrcprov::Query;

type Outcome = Result<(), String>;

/// Name, time limit in seconds, and the check itself.
type Check = (&'static str, u64, fn() -> Outcome);

const TRACKING: [(&str, &str); 9] = [
    ("piA", "{(A: 1^{a1}), (A: 1^{a2}), (A: 2^{a3})}"),
    ("sigma", "{(A: 1^{a1}, B: 1^{b1})}^{a1,a2,a3,b1,b2,b3}"),
    (
        "product",
        "{(A: 1^{a1}, B: 1^{b1}, C: 1^{c2}, D: 1^{d2}, E: 4^{e2}), \
         (A: 1^{a1}, B: 1^{b1}, C: 1^{c1}, D: 2^{d1}, E: 3^{e1}), \
         (A: 1^{a2}, B: 2^{b2}, C: 1^{c2}, D: 1^{d2}, E: 4^{e2}), \
         (A: 1^{a2}, B: 2^{b2}, C: 1^{c1}, D: 2^{d1}, E: 3^{e1}), \
         (A: 2^{a3}, B: 3^{b3}, C: 1^{c2}, D: 1^{d2}, E: 4^{e2}), \
         (A: 2^{a3}, B: 3^{b3}, C: 1^{c1}, D: 2^{d1}, E: 3^{e1})}",
    ),
    (
        "PiBE",
        "{(B: 1^{b1}, E: 4^{e2}), (B: 2^{b2}, E: 4^{e2}), (B: 3^{b3}, E: 3^{e1})}^{a1,a2,a3,d1,d2}",
    ),
    (
        "union",
        "{(A: 1^{a1}, B: 1^{b1}), (A: 1^{c2}, B: 1^{d2}), (A: 1^{a2}, B: 2^{b2}), \
         (A: 1^{c1}, B: 2^{d1}), (A: 2^{a3}, B: 3^{b3})}",
    ),
    (
        "diff",
        "{(A: 1^{a1}, B: 1^{b1}), (A: 1^{a2}, B: 2^{b2})}^{a1,a2,a3,b1,b2,b3,d1,d2,e1,e2}",
    ),
    ("sumA", "4^{a1,a2,a3}"),
    ("count", "3"),
    ("count-sigma", "1^{a1,a2,a3,b1,b2,b3}"),
];

const GROUPING: [(&str, &str); 3] = [
    (
        "grouping-x",
        "{(A: 1^{a1}, B: {1^{b1}, 2^{b2}}^{a1,a2,a3}), (A: 1^{a2}, B: {1^{b1}, 2^{b2}}^{a1,a2,a3}), \
         (A: 2^{a3}, B: {3^{b3}}^{a1,a2,a3})}",
    ),
    (
        "grouping",
        "{(A: 1^{a1}, B: 3^{a1,a2,a3,b1,b2}), (A: 1^{a2}, B: 3^{a1,a2,a3,b1,b2}), \
         (A: 2^{a3}, B: 3^{a1,a2,a3,b3})}",
    ),
    (
        "groupsum",
        "{(A: 1^{a1}, B: 3^{a1,a2,a3,b1,b2}), (A: 1^{a2}, B: 3^{a1,a2,a3,b1,b2}), \
         (A: 2^{a3}, B: 3^{a1,a2,a3,b3})}",
    ),
];

const STATIC: [(&str, &str); 12] = [
    ("piA", "{(A: int^{a})}"),
    ("sigma", "{(A: int^{a}, B: int^{b})}^{a,b}"),
    (
        "product",
        "{(A: int^{a}, B: int^{b}, C: int^{c}, D: int^{d}, E: int^{e})}",
    ),
    ("PiBE", "{(B: int^{b}, E: int^{e})}^{a,d}"),
    ("union", "{(A: int^{a,c}, B: int^{b,d})}"),
    ("diff", "{(A: int^{a}, B: int^{b})}^{a,b,d,e}"),
    ("sumA", "int^{a}"),
    ("count", "int"),
    ("count-sigma", "int^{a,b}"),
    ("grouping-x", "{(A: int^{a}, B: {int^{b}}^{a})}"),
    ("grouping", "{(A: int^{a}, B: int^{a,b})}"),
    ("groupsum", "{(A: int^{a}, B: int^{a,b})}"),
];

fn compile(name: &str) -> Query {
    let text = query(name).unwrap_or_else(|| panic!("no query named {name}"));
    Query::compile(text, &fig_types()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn corpus() -> Vec<(&'static str, Query)> {
    QUERIES.iter().map(|(n, _)| (*n, compile(n))).collect()
}

fn expect(ok: bool, what: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn golden_tracking(rows: &[(&str, &str)]) -> Outcome {
    let env = fig_annotated_env();
    for (name, want) in rows {
        let got = compile(name).track(&env).map_err(|e| e.to_string())?.to_string();
        expect(got == *want, || format!("{name}: got {got}, want {want}"))?;
    }
    Ok(())
}

fn golden_static() -> Outcome {
    let actx = fig_actx();
    for (name, want) in STATIC {
        let got = compile(name)
            .analyze(&actx)
            .map_err(|e| e.to_string())?
            .to_string();
        expect(got == want, || format!("{name}: got {got}, want {want}"))?;
    }
    Ok(())
}

fn self_difference() -> (Expr, TypeCtx, AEnv) {
    let ctx = TypeCtx::new().with("x", parse_type("{int}").unwrap());
    let q = Query::compile("x diff x", &ctx).unwrap();
    let env = AEnv::from([(
        "x".to_owned(),
        AValue::bag(vec![AValue::int(1, ann(["d"]))], ann(["c"])),
    )]);
    (q.core, ctx, env)
}

/// Checks erasure on `trials` random inputs of `ctx` with random annotations.
fn erasure_over_random_inputs(name: &str, e: &Expr, ctx: &TypeCtx, seed: u64, trials: usize) -> Outcome {
    let palette: Vec<Color> = ["p", "q", "r", "s"].into_iter().map(Color::new).collect();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let env: AEnv = random_env(&mut rng, ctx, &[0, 1, 2], 3)
            .iter()
            .map(|(x, v)| (x.clone(), random_annotation(&mut rng, v, &palette)))
            .collect();
        let report = check_erasure(e, &env).map_err(|err| format!("{name}: {err}"))?;
        expect(report.passed(), || {
            format!("{name}: trial {trial}: {:?}", report.failures)
        })?;
    }
    Ok(())
}

fn erasure() -> Outcome {
    let ctx = fig_types();
    let mut total = 0;
    for (name, q) in corpus() {
        let report = check_erasure(&q.core, &fig_annotated_env()).map_err(|e| e.to_string())?;
        expect(report.passed(), || format!("{name} on the example tables"))?;
        erasure_over_random_inputs(name, &q.core, &ctx, 11, 50)?;
        total += 51;
    }
    let (e, xctx, env) = self_difference();
    expect(
        check_erasure(&e, &env).map_err(|e| e.to_string())?.passed(),
        || "x diff x".into(),
    )?;
    erasure_over_random_inputs("x diff x", &e, &xctx, 12, 100)?;
    total += 101;
    let mut rng = trial_rng(13, 0);
    let mut gen = QueryGen::new(&mut rng, &ctx);
    let generated: Vec<Expr> = (0..20).map(|_| gen.query(3)).collect();
    for (i, e) in generated.iter().enumerate() {
        erasure_over_random_inputs(&format!("generated query {i}"), e, &ctx, 14 + i as u64, 25)?;
        total += 25;
    }
    expect(total >= 500, || format!("only {total} trials"))
}

fn dependency_correctness() -> Outcome {
    let env = fig_env();
    let ctx = fig_types();
    let cfg = TrialConfig {
        trials: 1000,
        seed: 7,
        ..TrialConfig::default()
    };
    let queries = corpus();
    for (name, q) in &queries {
        let report = check_dependency_correctness(&q.core, &ctx, &env, &cfg).map_err(|e| e.to_string())?;
        expect(report.passed(), || {
            format!("{name}: {} violations", report.failures.len())
        })?;
    }
    for (mutation, target) in [
        (Mutation::DiffDropsContents, "diff"),
        (Mutation::EqDropsColors, "sigma"),
    ] {
        let q = &queries
            .iter()
            .find(|(n, _)| *n == target)
            .expect("corpus query")
            .1;
        let broken = TrialConfig { mutation, ..cfg };
        let report = check_dependency_correctness(&q.core, &ctx, &env, &broken).map_err(|e| e.to_string())?;
        expect(!report.passed(), || {
            format!("{mutation:?} went undetected on {target}")
        })?;
    }
    Ok(())
}

fn color_invariance() -> Outcome {
    let env = fig_annotated_env();
    let cfg = TrialConfig {
        trials: 500,
        seed: 3,
        ..TrialConfig::default()
    };
    for (name, q) in corpus() {
        let report = check_color_invariance(&q.core, &env, &cfg).map_err(|e| e.to_string())?;
        expect(report.passed(), || format!("{name}: {:?}", report.failures))?;
    }
    Ok(())
}

fn static_soundness() -> Outcome {
    let collapsed = column_collapse().apply_env(&fig_annotated_env());
    let actx = fig_actx();
    let ctx = fig_types();
    let auto = auto_context(&ctx);
    for (name, q) in corpus() {
        let report =
            check_static_soundness(&q.core, &actx, &collapsed).map_err(|e| format!("{name}: {e}"))?;
        expect(report.passed(), || format!("{name} under the column context"))?;
        for trial in 0..20 {
            let plain = random_env(&mut trial_rng(5, trial), &ctx, &[0, 1, 2], 3);
            let colored = color_env(&plain);
            let env = collapse_into(&colored, &auto).apply_env(&colored);
            let report = check_static_soundness(&q.core, &auto, &env).map_err(|e| format!("{name}: {e}"))?;
            expect(report.passed(), || {
                format!("{name} under the automatic context, trial {trial}")
            })?;
        }
    }
    Ok(())
}

fn minimality() -> Outcome {
    let (e, ctx, env) = self_difference();
    let out = nrcprov::track::track(&env, &e).map_err(|e| e.to_string())?;
    expect(out.to_string() == "{}^{c,d}", || {
        format!("x diff x tracks to {out}")
    })?;
    let report = minimality_report(&e, &ctx, &env, &[0, 1], 2, 100_000).map_err(|e| e.to_string())?;
    let flagged: Vec<(&str, &str)> = report
        .spurious
        .iter()
        .map(|s| (s.path.as_str(), s.color.as_str()))
        .collect();
    expect(flagged == [("result", "c"), ("result", "d")], || {
        format!("flagged {flagged:?}")
    })
}

fn main() -> ExitCode {
    let checks: [Check; 8] = [
        ("golden tracking on the example tables", 1, || {
            golden_tracking(&TRACKING)
        }),
        ("golden tracking of grouping queries", 1, || {
            golden_tracking(&GROUPING)
        }),
        ("golden annotated types", 1, golden_static),
        ("erasure on corpus, x diff x and generated queries", 30, erasure),
        (
            "dependency-correctness with mutants detected",
            60,
            dependency_correctness,
        ),
        ("color-invariance", 30, color_invariance),
        ("static soundness", 10, static_soundness),
        ("x diff x is not minimal", 10, minimality),
    ];
    let mut failed = 0;
    for (name, limit, check) in checks {
        let start = Instant::now();
        let mut outcome = check();
        let took = start.elapsed();
        if outcome.is_ok() && took > Duration::from_secs(limit) {
            outcome = Err(format!("exceeded the {limit}s limit"));
        }
        match outcome {
            Ok(()) => println!("PASS {name} ({:.2}s, limit {limit}s)", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({:.2}s, limit {limit}s): {why}", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
