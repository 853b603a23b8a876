//! Task execution. Each task consumes the built models, produces a summary
//! and (for sequence-producing tasks) a CSV, and may end in a refusal: the
//! computation finished, but its result certifies that the requested
//! configuration violates the contract.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use solenoid_core::currents::{class_indices, homotopy_drift, stokes_residual};
use solenoid_core::forms::basis_indices;
use solenoid_core::intersection::{
    ae_pairing, detect_tangencies, exhaustion_estimate, fat_obstruction_certificate,
    pairing_exact, pairing_via_cup, pairing_via_thom, perturb_to_transversality, PerturbOptions,
    submanifold_model, SubmanifoldSpec,
};
use solenoid_core::{
    evaluate_current, rs_class, Address, AmbientManifold, AnyForm, DifferentialForm,
    QuadratureSpec, Result, SolenoidError, SolenoidModel, TrigPoly,
};

use crate::report::{fmt_f64, Csv, Summary};
use crate::scenario::Scenario;
use crate::scenario::Task;

pub struct TaskOutput {
    pub summary: Summary,
    pub csv: Option<Csv>,
    pub refusal: Option<String>,
}

impl TaskOutput {
    fn plain(summary: Summary) -> Self {
        TaskOutput {
            summary,
            csv: None,
            refusal: None,
        }
    }
}

fn quad(sc: &Scenario) -> QuadratureSpec {
    QuadratureSpec {
        leaf_order: sc.quad_order,
        depth: Some(sc.depth),
        domain_offset: 0.0,
    }
}

fn one(models: &[SolenoidModel]) -> Result<&SolenoidModel> {
    match models {
        [m] => Ok(m),
        _ => Err(SolenoidError::Parameter(format!(
            "this task needs exactly one model, the scenario declares {}",
            models.len()
        ))),
    }
}

fn pair(models: &[SolenoidModel]) -> Result<(&SolenoidModel, &SolenoidModel)> {
    match models {
        [a, b] => Ok((a, b)),
        _ => Err(SolenoidError::Parameter(format!(
            "this task needs exactly two models, the scenario declares {}",
            models.len()
        ))),
    }
}

fn component_name(index: &[usize]) -> String {
    if index.is_empty() {
        return "1".into();
    }
    index
        .iter()
        .map(|i| format!("dx{}", i + 1))
        .collect::<Vec<_>>()
        .join("^")
}

/// Canonical half of the frequency lattice `|f_i| <= maxf`, first nonzero
/// component positive, zero excluded: one representative per harmonic.
fn freq_lattice(n: usize, maxf: i32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let mut f = vec![-maxf; n];
    loop {
        if f.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push(f.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if f[i] < maxf {
                f[i] += 1;
                break;
            }
            f[i] = -maxf;
            i += 1;
        }
    }
}

pub fn run_task(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    match sc.task {
        Task::CurrentEval => current_eval(sc, models),
        Task::RsClass => rs_class_task(sc, models),
        Task::StokesCheck => stokes_check(sc, models),
        Task::HomotopyCheck => homotopy_check(sc, models),
        Task::Pairing => pairing(sc, models),
        Task::Exhaustion => exhaustion(sc, models),
        Task::ThomPairing => thom_pairing(sc, models),
        Task::AePairing => ae_pairing_task(sc, models),
        Task::Perturb => perturb(sc, models),
        Task::TangencyDemo => tangency_demo(sc, models),
    }
}

fn current_eval(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let m = one(models)?;
    let spec = sc
        .form
        .as_ref()
        .ok_or_else(|| SolenoidError::Parameter("current-eval needs `form`".into()))?;
    let form = AnyForm::Trig(spec.build()?);
    let value = evaluate_current(m, &form, &quad(sc))?;
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("quad_order", sc.quad_order);
    summary.push_usize("depth", sc.depth);
    summary.push_f64("value", value);
    Ok(TaskOutput::plain(summary))
}

fn rs_class_task(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let m = one(models)?;
    let class = rs_class(m, &quad(sc))?;
    let indices = class_indices(m);
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("components", class.len());
    let mut csv = Csv::new();
    for (index, value) in indices.iter().zip(&class) {
        let name = component_name(index);
        summary.push_f64(&format!("class_{name}"), *value);
        csv.push(&name, *value, 0.0);
    }
    Ok(TaskOutput {
        summary,
        csv: Some(csv),
        refusal: None,
    })
}

fn stokes_check(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let m = one(models)?;
    let n = m.ambient_dim();
    let degree = m.leaf_dim() - 1;
    let count = sc.form_count.unwrap_or(50);
    let maxf = sc.max_frequency.unwrap_or(2);
    let q = quad(sc);
    let indices = basis_indices(n, degree);
    let lattice = freq_lattice(n, maxf);
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut csv = Csv::new();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let mut form = DifferentialForm::zero(n, degree);
        for index in &indices {
            let mut poly = TrigPoly::constant(n, rng.random_range(-1.0..1.0));
            for f in &lattice {
                poly.add_assign(&TrigPoly::harmonic(
                    n,
                    f,
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ));
            }
            form.add_assign(&DifferentialForm::from_component(n, index, poly));
        }
        let residual = stokes_residual(m, &form, &q)?;
        worst = worst.max(residual);
        csv.push("stokes_residual", residual, 0.0);
    }
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("forms", count);
    summary.push_str("max_frequency", &maxf.to_string());
    summary.push_usize("quad_order", sc.quad_order);
    summary.push_usize("depth", sc.depth);
    summary.push_f64("max_residual", worst);
    Ok(TaskOutput {
        summary,
        csv: Some(csv),
        refusal: None,
    })
}

fn homotopy_check(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let m = one(models)?;
    if sc.homotopies.is_empty() {
        return Err(SolenoidError::Parameter(
            "homotopy-check needs `homotopies`".into(),
        ));
    }
    let q = quad(sc);
    let mut csv = Csv::new();
    let mut worst = 0.0f64;
    for h in &sc.homotopies {
        let drift = homotopy_drift(m, &h.build(), &q)?;
        worst = worst.max(drift);
        csv.push(h.name(), drift, 0.0);
    }
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("homotopies", sc.homotopies.len());
    summary.push_f64("max_drift", worst);
    Ok(TaskOutput {
        summary,
        csv: Some(csv),
        refusal: None,
    })
}

fn pairing(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let (m1, m2) = pair(models)?;
    let exact = pairing_exact(m1, m2, sc.depth)?;
    let cup = pairing_via_cup(m1, m2, &quad(sc))?;
    let mut summary = Summary::new(sc.task.name());
    summary.push_str("route", &format!("{:?}", exact.route).to_lowercase());
    summary.push_usize("pairs", exact.pairs);
    summary.push_f64("pairing_exact", exact.value);
    summary.push_f64("pairing_via_cup", cup);
    summary.push_f64("abs_diff", (exact.value - cup).abs());
    summary.push_f64("error_bound", exact.error_bound);
    Ok(TaskOutput::plain(summary))
}

fn exhaustion(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let (m1, m2) = pair(models)?;
    if sc.radii.is_empty() {
        return Err(SolenoidError::Parameter("exhaustion needs `radii`".into()));
    }
    let zero = vec![0.0; m1.ambient_dim()];
    let base1 = sc.bases.first().unwrap_or(&zero);
    let base2 = sc.bases.get(1).unwrap_or(&zero);
    let steps = exhaustion_estimate(m1, m2, base1, base2, &sc.radii)?;
    let mut csv = Csv::new();
    for s in &steps {
        csv.push(&fmt_f64(s.radius), s.estimate, s.discrepancy_bound);
    }
    let last = steps.last().expect("radii is non-empty");
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("steps", steps.len());
    summary.push_f64("final_radius", last.radius);
    summary.push_str("final_crossings", &last.crossings.to_string());
    summary.push_f64("final_estimate", last.estimate);
    summary.push_f64("final_bound", last.discrepancy_bound);
    Ok(TaskOutput {
        summary,
        csv: Some(csv),
        refusal: None,
    })
}

fn thom_pairing(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let m = one(models)?;
    let axis = sc
        .axis
        .ok_or_else(|| SolenoidError::Parameter("thom-pairing needs `axis`".into()))?;
    let center = sc
        .center
        .ok_or_else(|| SolenoidError::Parameter("thom-pairing needs `center`".into()))?;
    if sc.rhos.is_empty() {
        return Err(SolenoidError::Parameter("thom-pairing needs `rhos`".into()));
    }
    let steps = pairing_via_thom(m, axis, center, &sc.rhos, &quad(sc))?;
    let mut csv = Csv::new();
    for s in &steps {
        csv.push(&fmt_f64(s.rho), s.value, 0.0);
    }
    let last = steps.last().expect("rhos is non-empty");
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("steps", steps.len());
    summary.push_usize("warned_steps", steps.iter().filter(|s| s.warned).count());
    summary.push_f64("final_rho", last.rho);
    summary.push_f64("final_value", last.value);
    // reference count through the same circle as a sliced submanifold
    if m.ambient == (AmbientManifold::Torus { n: 2 }) {
        let circle = submanifold_model(
            &m.ambient,
            &SubmanifoldSpec::Subtorus {
                axis,
                value: center,
            },
        )?;
        let ae = ae_pairing(m, &circle, sc.depth, sc.tolerance.unwrap_or(1e-9))?;
        summary.push_f64("ae_value", ae.value);
        summary.push_f64("abs_diff", (last.value - ae.value).abs());
    }
    Ok(TaskOutput {
        summary,
        csv: Some(csv),
        refusal: None,
    })
}

fn ae_pairing_task(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let (m1, m2) = pair(models)?;
    let tolerance = sc.tolerance.unwrap_or(1e-3);
    let ae = ae_pairing(m1, m2, sc.depth, tolerance)?;
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("depth", ae.depth);
    summary.push_f64("tolerance", tolerance);
    summary.push_f64("value", ae.value);
    summary.push_f64("flagged_mass_bound", ae.flagged_mass_bound);
    summary.push_f64("excluded_pair_mass", ae.excluded_pair_mass);
    summary.push_f64("resolution_bound", ae.resolution_bound);
    if m1.ambient.is_torus() {
        let cup = pairing_via_cup(m1, m2, &quad(sc))?;
        summary.push_f64("pairing_via_cup", cup);
        summary.push_f64("abs_diff", (ae.value - cup).abs());
    }
    Ok(TaskOutput::plain(summary))
}

fn perturb(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let (m1, m2) = pair(models)?;
    let opts = PerturbOptions {
        epsilon: sc.epsilon.unwrap_or(1e-2),
        seed: sc.seed,
        depth: sc.depth,
        max_samples: sc.max_samples.unwrap_or(100),
    };
    let report = perturb_to_transversality(m1, m2, &opts)?;
    let mut csv = Csv::new();
    let mut samples = 0;
    let mut shifted = 0;
    for b in &report.boxes {
        samples += b.samples;
        if b.shift != 0.0 {
            shifted += 1;
        }
        csv.push(&b.cylinder.to_string(), b.shift, b.certified_margin);
    }
    let mut summary = Summary::new(sc.task.name());
    summary.push_f64("epsilon", opts.epsilon);
    summary.push_f64("accept_threshold", report.accept_threshold);
    summary.push_usize("boxes", report.boxes.len());
    summary.push_usize("shifted", shifted);
    summary.push_usize("samples_total", samples);
    summary.push_f64("min_margin", report.min_margin);
    summary.push_f64("class_drift", report.class_drift);
    Ok(TaskOutput {
        summary,
        csv: Some(csv),
        refusal: None,
    })
}

fn tangency_demo(sc: &Scenario, models: &[SolenoidModel]) -> Result<TaskOutput> {
    let (m1, m2) = pair(models)?;
    let t = detect_tangencies(m1, m2, sc.depth)?;
    let mut csv = Csv::new();
    for b in &t.per_depth_bounds {
        csv.push("mass_bound", *b, 0.0);
    }
    for (lo, hi) in &t.critical_values {
        csv.push("critical_value", 0.5 * (lo + hi), 0.5 * (hi - lo));
    }
    let mut summary = Summary::new(sc.task.name());
    summary.push_usize("depth", t.depth);
    summary.push_usize("flagged", t.flagged.len());
    summary.push_f64("mass_bound", t.bound());
    summary.push_f64("excluded_pair_mass", t.excluded_pair_mass);
    summary.push_bool("leafwise_isolated", t.leafwise_isolated);
    summary.push_usize("critical_values", t.critical_values.len());
    let mut refusal = None;
    if !t.leafwise_isolated {
        refusal = Some(
            "a flagged contact is flat along the leaves; no refinement separates it".to_string(),
        );
    }
    if sc.certificate {
        let cert = fat_obstruction_certificate(m1, m2, sc.depth)?;
        summary.push_f64("mass_k1", cert.mass_k1);
        summary.push_f64("image_mass_lb", cert.image_mass_lb);
        summary.push_f64("hull_length", cert.hull_length);
        summary.push_f64("lower_bound", cert.lower_bound);
        if sc.perturbations > 0 {
            // random shifts land on the second model; coarse cylinders keep
            // the shifted fiber blocks disjoint, which the certificate checks
            let size = sc.perturbation_size.unwrap_or(0.01);
            let shift_depth = 2.min(m2.transversal.depth());
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
            let mut worst = f64::INFINITY;
            for _ in 0..sc.perturbations {
                let mut p = m2.clone();
                for addr in Address::all_at_depth(shift_depth) {
                    p.shifts.insert(addr, rng.random_range(-size..=size));
                }
                let c = fat_obstruction_certificate(m1, &p, sc.depth)?;
                worst = worst.min(c.lower_bound);
                csv.push("perturbed_lower_bound", c.lower_bound, 0.0);
            }
            summary.push_usize("perturbations", sc.perturbations);
            summary.push_f64("perturbation_size", size);
            summary.push_f64("min_perturbed_lower_bound", worst);
        }
        if cert.lower_bound > 0.0 {
            refusal = Some(format!(
                "the fiber sets overlap with Lebesgue mass at least {}; tangencies cannot be perturbed away",
                fmt_f64(cert.lower_bound)
            ));
        }
    }
    Ok(TaskOutput {
        summary,
        csv: Some(csv),
        refusal,
    })
}
