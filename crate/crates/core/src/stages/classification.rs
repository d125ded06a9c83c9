use crate::catalog::{composition_flags, FieldCategory};
use crate::label::{Stage, StageStatus};

use super::{rule, signal, StageEnv, StageVerdict};

/// Sensitivity labels and composition effects for the requested dataset.
pub fn data_classification(env: &StageEnv<'_>) -> StageVerdict {
    let mut verdict = StageVerdict::new(Stage::DataClassification);
    let Some(dataset) = env.dataset else {
        verdict.signals.set(signal::DATASET_KNOWN, false);
        verdict.flag(StageStatus::Fail, rule::UNKNOWN_DATASET);
        verdict.note(format!("dataset {} not in catalog", env.request.dataset_id));
        return env.finish(verdict, &[]);
    };

    verdict.signals.set(signal::DATASET_KNOWN, true);
    verdict
        .signals
        .set(signal::EFFECTIVE_SENSITIVITY, dataset.sensitivity.as_str());
    verdict
        .signals
        .set(signal::PII_PRESENT, dataset.has_category(FieldCategory::Pii));
    verdict.signals.set(
        signal::CATEGORIES,
        dataset
            .categories()
            .into_iter()
            .map(|c| c.as_str().to_string())
            .collect::<Vec<_>>(),
    );
    verdict.signals.set(
        signal::COMPOSITION_FLAGS,
        composition_flags(&dataset.fields)
            .into_iter()
            .map(|f| f.as_str().to_string())
            .collect::<Vec<_>>(),
    );
    let complete = dataset.labels_complete();
    verdict.signals.set(signal::LABELS_COMPLETE, complete);
    if !complete {
        verdict.flag(StageStatus::Fail, rule::LABELS_MISSING);
        let missing: Vec<&str> = dataset
            .fields
            .iter()
            .filter(|f| f.label.is_none())
            .map(|f| f.name.as_str())
            .collect();
        verdict.note(format!("unlabeled fields: {}", missing.join(", ")));
    }
    env.finish(verdict, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{FieldSpec, SensitivityLabel};
    use crate::testutil::{env_for, org_fixture, request};

    #[test]
    fn transactions_flag_pii_with_location() {
        let org = org_fixture();
        let req = request("transactions_2024", "u-analyst-01", "churn model", Some(90));
        let v = data_classification(&env_for(&org, &req));
        assert_eq!(v.status, StageStatus::Pass);
        assert_eq!(v.signals.flag(signal::PII_PRESENT), Some(true));
        assert!(v
            .signals
            .list(signal::COMPOSITION_FLAGS)
            .contains(&"pii_location".to_string()));
    }

    #[test]
    fn mixed_labels_resolve_to_maximum() {
        let mut org = org_fixture();
        let ds = org
            .catalog
            .datasets
            .iter_mut()
            .find(|d| d.dataset_id == "support_metrics")
            .unwrap();
        ds.fields = vec![
            FieldSpec {
                name: "a".into(),
                category: FieldCategory::Operational,
                label: Some(SensitivityLabel::Internal),
                quasi_identifier: false,
                sample_values: vec![],
            },
            FieldSpec {
                name: "b".into(),
                category: FieldCategory::Operational,
                label: Some(SensitivityLabel::Confidential),
                quasi_identifier: false,
                sample_values: vec![],
            },
        ];
        ds.sensitivity = ds.max_field_label().unwrap();
        let req = request("support_metrics", "u-eng-01", "dashboard", Some(30));
        let v = data_classification(&env_for(&org, &req));
        assert_eq!(v.signals.text(signal::EFFECTIVE_SENSITIVITY), Some("Confidential"));
    }

    #[test]
    fn unknown_dataset_fails() {
        let org = org_fixture();
        let req = request("no_such_table", "u-analyst-01", "dashboard", Some(30));
        let v = data_classification(&env_for(&org, &req));
        assert_eq!(v.status, StageStatus::Fail);
        assert_eq!(v.failure_rules, [rule::UNKNOWN_DATASET]);
    }

    #[test]
    fn missing_label_fails() {
        let mut org = org_fixture();
        let ds = org
            .catalog
            .datasets
            .iter_mut()
            .find(|d| d.dataset_id == "support_metrics")
            .unwrap();
        ds.fields[0].label = None;
        let req = request("support_metrics", "u-eng-01", "dashboard", Some(30));
        let v = data_classification(&env_for(&org, &req));
        assert_eq!(v.failure_rules, [rule::LABELS_MISSING]);
    }
}
