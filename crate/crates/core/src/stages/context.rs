use crate::label::{Stage, StageStatus};
use crate::purpose::classify_purpose;

use super::{rule, signal, StageEnv, StageVerdict};

/// Extract purpose, retention and sharing; flag unclear purposes and
/// conflicting policy scopes.
pub fn context(env: &StageEnv<'_>) -> StageVerdict {
    let request = env.request;
    let mut verdict = StageVerdict::new(Stage::Context);
    let reading = classify_purpose(&request.purpose);

    verdict.signals.set(signal::PURPOSE_CLEAR, reading.category.is_some());
    if let Some(category) = reading.category {
        verdict.signals.set(signal::PURPOSE_CATEGORY, category.as_str());
    }
    verdict.signals.set(signal::BROAD_REQUEST, reading.broad);
    if let Some(days) = request.declared_retention_days {
        verdict.signals.set(signal::RETENTION_DAYS, days);
    }
    verdict
        .signals
        .set(signal::SHARING_SCOPE, request.sharing_scope.as_str());
    if let Some(region) = &request.destination_region {
        verdict.signals.set(signal::DESTINATION_REGION, region.as_str());
    }
    verdict.signals.set(
        signal::RELEVANT_POLICIES,
        env.relevant_policies
            .iter()
            .map(|p| p.policy_id.clone())
            .collect::<Vec<_>>(),
    );

    let mut conflict = false;
    if reading.empty {
        verdict.flag(StageStatus::Fail, rule::NO_STATED_PURPOSE);
        verdict.note("no purpose stated");
    } else if reading.category.is_none() {
        if reading.broad {
            verdict.flag(StageStatus::Uncertain, rule::PURPOSE_UNCLEAR);
            verdict.note("broad request without a recognizable purpose");
        } else {
            verdict.flag(StageStatus::Fail, rule::PURPOSE_UNCLEAR);
            verdict.note("purpose matches no known category");
        }
    } else if let Some(category) = reading.category {
        let prohibited = env
            .relevant_policies
            .iter()
            .any(|p| p.prohibited_purposes.contains(&category));
        let explicitly_allowed = env
            .relevant_policies
            .iter()
            .any(|p| p.applies_to_purposes.contains(&category));
        if prohibited && explicitly_allowed {
            conflict = true;
            verdict.flag(StageStatus::Fail, rule::POLICY_SCOPE_CONFLICT);
            verdict.note(format!("policies disagree on {category}"));
        } else if prohibited {
            verdict.flag(StageStatus::Fail, rule::PURPOSE_PROHIBITED);
            verdict.note(format!("{category} is prohibited for this dataset"));
        }
    }
    verdict.signals.set(signal::POLICY_SCOPE_CONFLICT, conflict);

    env.finish(verdict, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{env_for, org_fixture, request};

    #[test]
    fn running_example_passes_as_analytics() {
        let org = org_fixture();
        let req = request("transactions_2024", "an_analyst", "train churn model for Q4", Some(90));
        let env = env_for(&org, &req);
        let v = context(&env);
        assert_eq!(v.status, StageStatus::Pass);
        assert_eq!(v.signals.text(signal::PURPOSE_CATEGORY), Some("analytics_modeling"));
        assert_eq!(v.signals.int(signal::RETENTION_DAYS), Some(90));
        assert_eq!(v.signals.flag(signal::PURPOSE_CLEAR), Some(true));
    }

    #[test]
    fn empty_purpose_fails() {
        let org = org_fixture();
        let req = request("transactions_2024", "an_analyst", "", Some(90));
        let v = context(&env_for(&org, &req));
        assert_eq!(v.status, StageStatus::Fail);
        assert_eq!(v.failure_rules, [rule::NO_STATED_PURPOSE]);
        assert!(!v.citations.is_empty());
    }

    #[test]
    fn vague_broad_request_is_uncertain() {
        let org = org_fixture();
        let req = request("transactions_2024", "an_analyst", "need all customer data", None);
        let v = context(&env_for(&org, &req));
        assert_eq!(v.status, StageStatus::Uncertain);
        assert_eq!(v.signals.flag(signal::PURPOSE_CLEAR), Some(false));
    }

    #[test]
    fn conflicting_policy_scopes_fail() {
        let mut org = org_fixture();
        let mut allow = org.policies.get("POL-PRIV-01").unwrap().clone();
        allow.policy_id = "POL-X-ALLOW".into();
        allow.applies_to_purposes = vec![crate::purpose::PurposeCategory::AnalyticsModeling];
        let mut deny = allow.clone();
        deny.policy_id = "POL-X-DENY".into();
        deny.applies_to_purposes.clear();
        deny.prohibited_purposes = vec![crate::purpose::PurposeCategory::AnalyticsModeling];
        org.policies.push(allow);
        org.policies.push(deny);
        let req = request("transactions_2024", "an_analyst", "train churn model", Some(30));
        let v = context(&env_for(&org, &req));
        assert_eq!(v.status, StageStatus::Fail);
        assert_eq!(v.failure_rules, [rule::POLICY_SCOPE_CONFLICT]);
        assert_eq!(v.signals.flag(signal::POLICY_SCOPE_CONFLICT), Some(true));
    }
}
