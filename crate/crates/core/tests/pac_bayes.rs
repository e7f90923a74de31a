use cmi_core::distributions::DiscreteDistribution;
use cmi_core::divergences::DivergenceValue;
use cmi_core::pac_bayes::{
    addend, addend_additive, addend_multiplicative, chi2_addend_abs_discrepancy,
    chi2_addend_additive, chi2_addend_multiplicative, coverage_experiment, deviation_scale,
    subexp_k1, BoundForm, GibbsExperiment, LossClass, LossModel, PacInput, PosteriorRule,
    SubExpRegime,
};
use cmi_core::Error;
use proptest::prelude::*;

fn input(m: u64, delta: f64, alpha: f64, div: f64) -> PacInput {
    PacInput::new(m, delta, alpha, DivergenceValue::Finite(div)).unwrap()
}

fn loss_classes() -> [LossClass; 4] {
    [
        LossClass::Bounded { r: 1.0 },
        LossClass::SubGaussian { sigma: 0.7 },
        LossClass::SubExponential {
            sigma: 1.0,
            beta: 1.0,
        },
        LossClass::BoundedVariance { sigma2: 0.5 },
    ]
}

#[test]
fn bounded_loss_table_values() {
    let b = LossClass::Bounded { r: 1.0 };
    let log40 = 40f64.ln();
    let mult = addend_multiplicative(b, &input(100, 0.05, 2.0, 0.0)).unwrap();
    assert!((mult - (log40 / 200.0).sqrt()).abs() < 1e-15);
    let add = addend_additive(b, &input(100, 0.05, 2.0, 0.0)).unwrap();
    let c = log40 / 200.0;
    assert!((add - (0.5f64 / 100.0 + (100.0 * c).powi(2) / 200.0).sqrt()).abs() < 1e-15);
    assert!((add - 0.148_357).abs() < 1e-6);
}

#[test]
fn subexponential_regimes() {
    let small = subexp_k1(1.0, 1.0, 4, 0.05).unwrap();
    assert_eq!(small.regime, SubExpRegime::SmallM);
    assert!((small.k1 - (2.0 * 40f64.ln() / 4.0).powi(2)).abs() < 1e-12);
    let large = subexp_k1(1.0, 1.0, 1000, 0.05).unwrap();
    assert_eq!(large.regime, SubExpRegime::LargeM);
    assert!((large.k1 - 2.0 * 40f64.ln() / 1000.0).abs() < 1e-15);
}

#[test]
fn invalid_inputs() {
    assert!(matches!(
        PacInput::new(100, 1.5, 2.0, DivergenceValue::Finite(0.0)),
        Err(Error::BadParameter(_))
    ));
    assert!(PacInput::new(0, 0.1, 2.0, DivergenceValue::Finite(0.0)).is_err());
    assert!(PacInput::new(10, 0.1, 1.0, DivergenceValue::Finite(0.0)).is_err());
    assert!(PacInput::new(10, 0.1, 2.0, DivergenceValue::Finite(-1.0)).is_err());
    assert!("bounded:0".parse::<LossClass>().is_err());
    assert!("subexp:1".parse::<LossClass>().is_err());
}

#[test]
fn infinite_divergence_gives_infinite_addend() {
    let inf = PacInput::new(50, 0.1, 2.0, DivergenceValue::Infinite).unwrap();
    for loss in loss_classes() {
        for form in [BoundForm::Multiplicative, BoundForm::Additive] {
            assert_eq!(addend(loss, form, &inf).unwrap(), f64::INFINITY);
        }
    }
}

#[test]
fn tokens_round_trip() {
    for loss in loss_classes() {
        assert_eq!(loss.to_string().parse::<LossClass>().unwrap(), loss);
    }
    for form in [BoundForm::Multiplicative, BoundForm::Additive] {
        assert_eq!(form.to_string().parse::<BoundForm>().unwrap(), form);
    }
}

#[test]
fn model_must_certify_the_loss_class() {
    let bernoulli = LossModel::Bernoulli {
        means: vec![0.2, 0.4],
    };
    assert!(bernoulli.certify(LossClass::Bounded { r: 1.0 }).is_ok());
    assert!(matches!(
        bernoulli.certify(LossClass::Bounded { r: 0.5 }),
        Err(Error::ModelMismatch(_))
    ));
    let gaussian = LossModel::Gaussian {
        means: vec![0.0],
        sd: 1.0,
    };
    assert!(gaussian.certify(LossClass::Bounded { r: 10.0 }).is_err());
    assert!(gaussian
        .certify(LossClass::SubGaussian { sigma: 1.0 })
        .is_ok());
    let exp = LossModel::ShiftedExponential {
        shifts: vec![0.0],
        rate: 1.0,
    };
    assert!(exp
        .certify(LossClass::SubExponential {
            sigma: 2f64.sqrt(),
            beta: 2.0
        })
        .is_ok());
    assert!(exp
        .certify(LossClass::SubExponential {
            sigma: 1.0,
            beta: 2.0
        })
        .is_err());
}

#[test]
fn deterministic_losses_never_violate() {
    let exp = GibbsExperiment {
        prior: DiscreteDistribution::uniform(4).unwrap(),
        posterior: PosteriorRule::ExponentialWeights { eta: 2.0 },
        model: LossModel::Constant {
            values: vec![0.1, 0.2, 0.3, 0.9],
        },
        m: 20,
        trials: 50,
        seed: 1,
    };
    let r = coverage_experiment(
        &exp,
        LossClass::Bounded { r: 1.0 },
        BoundForm::Additive,
        0.1,
        2.0,
    )
    .unwrap();
    assert_eq!(r.violations, 0);
    assert_eq!(r.trials, 50);
}

#[test]
fn coverage_is_reproducible() {
    let exp = GibbsExperiment {
        prior: DiscreteDistribution::uniform(5).unwrap(),
        posterior: PosteriorRule::ExponentialWeights { eta: 1.0 },
        model: LossModel::Bernoulli {
            means: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        },
        m: 30,
        trials: 300,
        seed: 77,
    };
    let loss = LossClass::Bounded { r: 1.0 };
    let a = coverage_experiment(&exp, loss, BoundForm::Multiplicative, 0.1, 2.0).unwrap();
    let b = coverage_experiment(&exp, loss, BoundForm::Multiplicative, 0.1, 2.0).unwrap();
    assert_eq!(a, b);
    assert!(a.violation_rate <= 0.1 + 3.0 * (0.09f64 / 300.0).sqrt());
}

proptest! {
    #[test]
    fn addends_are_monotone(
        m in 1u64..5000,
        dm in 1u64..5000,
        delta in 0.001f64..0.99,
        shrink in 0.1f64..1.0,
        alpha in 1.05f64..6.0,
        div in 0.0f64..20.0,
        extra in 0.0f64..5.0,
    ) {
        for loss in loss_classes() {
            for form in [BoundForm::Multiplicative, BoundForm::Additive] {
                let base = addend(loss, form, &input(m, delta, alpha, div)).unwrap();
                let more_div = addend(loss, form, &input(m, delta, alpha, div + extra)).unwrap();
                let smaller_delta = addend(loss, form, &input(m, delta * shrink, alpha, div)).unwrap();
                prop_assert!(base >= 0.0);
                prop_assert!(more_div >= base * (1.0 - 1e-12), "{loss} {form} div");
                prop_assert!(smaller_delta >= base * (1.0 - 1e-12), "{loss} {form} delta");
                if form == BoundForm::Multiplicative {
                    let more_m = addend(loss, form, &input(m + dm, delta, alpha, div)).unwrap();
                    prop_assert!(more_m <= base * (1.0 + 1e-12), "{loss} m");
                }
            }
        }
    }

    #[test]
    fn alpha_two_matches_the_chi2_corollaries(
        m in 1u64..5000,
        delta in 0.001f64..0.99,
        chi2 in 0.0f64..50.0,
    ) {
        for loss in loss_classes() {
            let inp = input(m, delta, 2.0, chi2 / 2.0);
            let mult = addend_multiplicative(loss, &inp).unwrap();
            let add = addend_additive(loss, &inp).unwrap();
            let cm = chi2_addend_multiplicative(loss, m, delta, chi2).unwrap();
            let ca = chi2_addend_additive(loss, m, delta, chi2).unwrap();
            prop_assert!((mult - cm).abs() <= 1e-12 * cm.max(1.0));
            prop_assert!((add - ca).abs() <= 1e-12 * ca.max(1.0));
            let loose = chi2_addend_abs_discrepancy(loss, m, delta, chi2).unwrap();
            prop_assert!(cm <= loose * (1.0 + 1e-12));
        }
    }

    #[test]
    fn multiplicative_addend_ignores_alpha_at_zero_divergence(
        m in 1u64..5000,
        delta in 0.001f64..0.99,
        alpha in 1.05f64..10.0,
    ) {
        for loss in loss_classes() {
            let v = addend_multiplicative(loss, &input(m, delta, alpha, 0.0)).unwrap();
            let c = deviation_scale(loss, m, delta).unwrap();
            prop_assert!((v - c.sqrt()).abs() <= 1e-12 * c.sqrt().max(1.0));
        }
    }
}
