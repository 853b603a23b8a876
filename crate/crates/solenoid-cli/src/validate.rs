//! `validate`: schema and model invariant checks, run without executing the
//! task. Every check prints one PASS/FAIL line; the command always exits 0,
//! the report itself is the verdict.

use std::fs;

use solenoid_core::cantor::holonomy_invariance_deviation;
use solenoid_core::{Family, SolenoidModel};

use crate::report::fmt_f64;
use crate::scenario::Scenario;
use crate::{stem, CommonArgs};

pub fn run_validate(args: &CommonArgs) -> u8 {
    let mut lines: Vec<String> = Vec::new();
    let sc = parse_step(args, &mut lines);
    if let Some(sc) = &sc {
        let ambient = sc.ambient.build();
        for (i, spec) in sc.models.iter().enumerate() {
            match spec.build(&ambient) {
                Err(e) => lines.push(format!("FAIL model[{i}] construction: {e}")),
                Ok(m) => {
                    lines.push(format!("PASS model[{i}] construction"));
                    mass_additivity(&m, i, &mut lines);
                    holonomy(&m, i, &mut lines);
                    immersion(&m, i, &mut lines);
                }
            }
        }
    }
    let failures = lines.iter().filter(|l| l.starts_with("FAIL")).count();
    lines.push(format!("checks = {}", lines.len()));
    lines.push(format!("failures = {failures}"));
    let text = lines.join("\n") + "\n";
    print!("{text}");
    if let Some(sc) = &sc {
        if fs::create_dir_all(&sc.out).is_ok() {
            let path = sc.out.join(format!("{}.validate.txt", stem(&args.file)));
            let _ = fs::write(path, &text);
        }
    }
    0
}

fn parse_step(args: &CommonArgs, lines: &mut Vec<String>) -> Option<Scenario> {
    let text = match fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            lines.push(format!(
                "FAIL schema: cannot read {}: {e}",
                args.file.display()
            ));
            return None;
        }
    };
    match serde_json::from_str::<Scenario>(&text) {
        Ok(mut sc) => {
            lines.push(format!("PASS schema: task {}", sc.task.name()));
            crate::apply_overrides(&mut sc, args);
            Some(sc)
        }
        Err(e) => {
            lines.push(format!("FAIL schema: {e}"));
            None
        }
    }
}

/// Parent mass must equal the sum of its two children at every tree node.
fn mass_additivity(m: &SolenoidModel, i: usize, lines: &mut Vec<String>) {
    let t = &m.transversal;
    if t.is_atomic() {
        lines.push(format!(
            "PASS model[{i}] mass additivity: atomic transversal"
        ));
        return;
    }
    let mut nodes = 0usize;
    for d in 0..t.depth() {
        for addr in t.cylinders(d) {
            let total = t.cylinder_measure(&addr);
            let sum = t
                .cylinder_measure(&addr.child(0))
                .and_then(|a| t.cylinder_measure(&addr.child(1)).map(|b| a + b));
            match (total, sum) {
                (Ok(total), Ok(sum)) => {
                    if (total - sum).abs() > 1e-12 * total.abs().max(1.0) {
                        lines.push(format!(
                            "FAIL model[{i}] mass additivity: node {addr} carries {} but its children sum to {}",
                            fmt_f64(total),
                            fmt_f64(sum)
                        ));
                        return;
                    }
                    nodes += 1;
                }
                (Err(e), _) | (_, Err(e)) => {
                    lines.push(format!("FAIL model[{i}] mass additivity: {e}"));
                    return;
                }
            }
        }
    }
    lines.push(format!(
        "PASS model[{i}] mass additivity: {nodes} nodes checked"
    ));
}

/// The transversal measure must be invariant under the declared holonomy.
fn holonomy(m: &SolenoidModel, i: usize, lines: &mut Vec<String>) {
    let Family::Suspension(s) = &m.family else {
        lines.push(format!(
            "PASS model[{i}] holonomy invariance: trivial holonomy"
        ));
        return;
    };
    let lo = s.return_map.prefix_depth().max(1);
    let hi = m.transversal.depth();
    let mut worst = 0.0f64;
    let mut at = lo;
    for d in lo..=hi {
        match holonomy_invariance_deviation(&m.transversal, &s.return_map, d) {
            Ok(dev) => {
                if dev > worst {
                    worst = dev;
                    at = d;
                }
            }
            Err(e) => {
                lines.push(format!("FAIL model[{i}] holonomy invariance: {e}"));
                return;
            }
        }
    }
    if worst == 0.0 {
        lines.push(format!(
            "PASS model[{i}] holonomy invariance: deviation 0 at depths {lo}..={hi}"
        ));
    } else {
        lines.push(format!(
            "FAIL model[{i}] holonomy invariance: deviation {} at depth {at}",
            fmt_f64(worst)
        ));
    }
}

/// Leaf frames must have full rank everywhere the model samples them.
fn immersion(m: &SolenoidModel, i: usize, lines: &mut Vec<String>) {
    match m.immersion_margin(100) {
        Ok(margin) if margin > 0.0 => lines.push(format!(
            "PASS model[{i}] immersion rank: margin {} over 100 samples",
            fmt_f64(margin)
        )),
        Ok(margin) => lines.push(format!(
            "FAIL model[{i}] immersion rank: margin {} over 100 samples",
            fmt_f64(margin)
        )),
        Err(e) => lines.push(format!("FAIL model[{i}] immersion rank: {e}")),
    }
}
