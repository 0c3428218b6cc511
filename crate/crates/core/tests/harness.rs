use ehs_core::catalog::{resolve_constraint, Dims, IdentityId, Params};
use ehs_core::harness::{
    admissible, degeneration_check_p0, fuzz_campaign, sample_instance, verify_instance, SamplerConfig, Status,
    CSV_HEADER,
};
use ehs_core::{Error, NomeFrame};

fn representative(id: IdentityId) -> Dims {
    match id {
        IdentityId::ThetaInversion => Dims::default(),
        IdentityId::PochSplit | IdentityId::PochReverse => Dims::new(3, 1, 0),
        IdentityId::PochInvert => Dims::new(2, 0, 0),
        IdentityId::FtTransform | IdentityId::IteratedBailey => Dims::new(0, 0, 2),
        IdentityId::Kajihara => Dims::new(2, 2, 2),
        IdentityId::FcFamily => Dims::new(2, 1, 2),
        IdentityId::AnJackson | IdentityId::SmRewrite | IdentityId::CsTransform => Dims::new(2, 0, 2),
        IdentityId::C3Transform => Dims::boxed(vec![1, 1], 0),
        IdentityId::DeltaLemma => Dims::boxed(vec![1, 2], 0),
    }
}

#[test]
fn same_seed_gives_identical_reports() {
    let cfg = SamplerConfig::default().with_seed(99);
    for id in IdentityId::ALL {
        let dims = representative(id);
        let a = verify_instance(&sample_instance(id, &dims, &cfg, 192).unwrap()).unwrap();
        let b = verify_instance(&sample_instance(id, &dims, &cfg, 192).unwrap()).unwrap();
        assert_eq!(a.to_json(false), b.to_json(false), "{id}");
        assert_eq!(a.status, Status::Pass, "{}", a.to_human(false));
    }
}

#[test]
fn different_seeds_give_different_instances() {
    let dims = Dims::new(2, 2, 2);
    let a = sample_instance(IdentityId::Kajihara, &dims, &SamplerConfig::default().with_seed(1), 128).unwrap();
    let b = sample_instance(IdentityId::Kajihara, &dims, &SamplerConfig::default().with_seed(2), 128).unwrap();
    assert_ne!(a.free(), b.free());
}

#[test]
fn report_json_has_the_documented_fields() {
    let inst = sample_instance(
        IdentityId::Kajihara,
        &Dims::new(1, 2, 2),
        &SamplerConfig::default(),
        128,
    )
    .unwrap();
    let report = verify_instance(&inst).unwrap();
    let value = report.to_json_value(true);
    let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        [
            "identity",
            "dims",
            "seed",
            "precision_bits",
            "lhs",
            "rhs",
            "rel_residual",
            "terms",
            "status",
            "elapsed_ms"
        ]
    );
    assert_eq!(value["identity"], "kajihara");
    assert_eq!(value["dims"]["N"], 2);
    assert_eq!(value["status"], "PASS");
    assert!(value["lhs"]["re"].is_string());
    assert_eq!(value["terms"]["lhs"], 1);
    assert_eq!(value["terms"]["rhs"], 3);
    assert!(report.to_json_value(false)["elapsed_ms"].is_null());
    let residual = report.residual_string().unwrap();
    assert_eq!(value["rel_residual"], residual.as_str());
    assert!(report.to_human(false).contains(&residual));
    assert_eq!(report.csv_record(true).len(), CSV_HEADER.len());
}

#[test]
fn reported_values_carry_requested_precision() {
    let inst = sample_instance(
        IdentityId::AnJackson,
        &Dims::new(2, 0, 2),
        &SamplerConfig::default(),
        160,
    )
    .unwrap();
    let report = verify_instance(&inst).unwrap();
    assert_eq!(report.lhs.as_ref().unwrap().prec(), 160);
    assert_eq!(report.precision_bits, 160);
}

#[test]
fn guard_rejects_adjacent_shifted_points() {
    let frame = NomeFrame::from_f64(0.2, (0.6, 0.3), 192).unwrap();
    let z1 = frame.scalar(0.9, -0.4);
    let mut free = Params::new();
    free.insert("z1", z1.clone());
    free.insert("z2", &z1 * frame.q());
    for (i, (re, im)) in [(1.1, 0.2), (-0.7, 0.8), (0.6, -1.3), (0.4, 0.9)]
        .into_iter()
        .enumerate()
    {
        free.insert(format!("a{}", i + 1), frame.scalar(re, im));
    }
    free.insert("w1", frame.scalar(1.2, 0.5));
    let inst = resolve_constraint(IdentityId::Kajihara, free, &Dims::new(2, 2, 2), &frame).unwrap();
    assert!(!admissible(&inst, 1e-6).unwrap());
    let report = verify_instance(&inst).unwrap();
    assert_eq!(report.status, Status::SingularSkipped);
    assert!(report.rel_residual.is_none());
    assert!(report.note.is_some());
}

#[test]
fn guard_rejects_nearly_singular_points() {
    let frame = NomeFrame::from_f64(0.2, (0.6, 0.3), 192).unwrap();
    let z1 = frame.scalar(0.9, -0.4);
    let mut free = Params::new();
    free.insert("z1", z1.clone());
    free.insert("z2", &(&z1 * frame.q()) * &frame.scalar(1.0 + 1e-9, 0.0));
    for (i, (re, im)) in [(1.1, 0.2), (-0.7, 0.8), (0.6, -1.3)].into_iter().enumerate() {
        free.insert(format!("a{}", i + 1), frame.scalar(re, im));
    }
    let inst = resolve_constraint(IdentityId::Kajihara, free, &Dims::new(2, 1, 2), &frame).unwrap();
    assert!(!admissible(&inst, 1e-6).unwrap());
}

#[test]
fn impossible_guard_exhausts_the_resample_budget() {
    let cfg = SamplerConfig {
        singularity_floor: 0.999,
        max_resamples: 3,
        ..SamplerConfig::default()
    };
    let err = sample_instance(IdentityId::Kajihara, &Dims::new(2, 2, 2), &cfg, 128).unwrap_err();
    assert_eq!(
        err,
        Error::SamplingFailure {
            identity: "kajihara".into(),
            attempts: 3
        }
    );
}

#[test]
fn campaign_counts_and_worst_case() {
    let grid = [Dims::new(1, 2, 2), Dims::new(2, 2, 3), Dims::new(3, 1, 1)];
    let summary = fuzz_campaign(
        IdentityId::Kajihara,
        &grid,
        4,
        &SamplerConfig::default().with_seed(5),
        128,
    )
    .unwrap();
    assert_eq!(summary.trials(), 12);
    assert_eq!(
        summary.pass() + summary.fail() + summary.singular_skipped() + summary.sampling_failures(),
        12
    );
    assert!(summary.all_passed());
    let worst = summary.worst.as_ref().unwrap();
    let max = summary
        .reports()
        .filter_map(|r| r.rel_residual.clone())
        .max_by(|a, b| a.total_cmp(b))
        .unwrap();
    assert_eq!(worst.rel_residual, max);
    assert_eq!(worst.dims, grid[worst.cell]);
    let again = fuzz_campaign(
        IdentityId::Kajihara,
        &grid,
        4,
        &SamplerConfig::default().with_seed(5),
        128,
    )
    .unwrap();
    assert_eq!(summary.to_json_value(false), again.to_json_value(false));
}

#[test]
fn singular_skips_stay_rare() {
    let grid = [Dims::new(2, 2, 3), Dims::new(3, 3, 2)];
    for p in [0.0, 0.2] {
        let cfg = SamplerConfig {
            p_modulus: p,
            ..SamplerConfig::default()
        };
        let summary = fuzz_campaign(IdentityId::Kajihara, &grid, 10, &cfg, 128).unwrap();
        let skipped = summary.singular_skipped() + summary.sampling_failures();
        assert!(skipped * 5 < summary.trials(), "{}", summary.to_human());
    }
}

#[test]
fn campaign_argument_errors() {
    let cfg = SamplerConfig::default();
    assert!(fuzz_campaign(IdentityId::Kajihara, &[], 3, &cfg, 128).is_err());
    assert!(fuzz_campaign(IdentityId::Kajihara, &[Dims::new(0, 1, 1)], 3, &cfg, 128).is_err());
    let bad = SamplerConfig { p_modulus: 1.2, ..cfg };
    assert!(matches!(
        fuzz_campaign(IdentityId::Kajihara, &[Dims::new(1, 1, 1)], 1, &bad, 128),
        Err(Error::InvalidFrame(_))
    ));
}

#[test]
fn p_zero_degeneration_for_every_identity() {
    for id in IdentityId::ALL {
        let report = degeneration_check_p0(id, &representative(id), &SamplerConfig::default(), 192).unwrap();
        assert_eq!(report.status, Status::Pass, "{}", report.to_human(false));
    }
}

#[test]
fn precision_change_reuses_free_parameters() {
    let inst = sample_instance(
        IdentityId::SmRewrite,
        &Dims::new(2, 0, 3),
        &SamplerConfig::default(),
        128,
    )
    .unwrap();
    let high = inst.with_precision(320).unwrap();
    assert_eq!(high.frame().precision(), 320);
    for (name, value) in inst.free().iter() {
        assert_eq!(high.free().get(name).unwrap(), value);
    }
    assert_eq!(verify_instance(&high).unwrap().status, Status::Pass);
}
