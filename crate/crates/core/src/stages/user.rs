use crate::label::{Stage, StageStatus};

use super::{rule, signal, StageEnv, StageVerdict};

/// Identity, role, clearance and separation of duties.
pub fn user_validation(env: &StageEnv<'_>) -> StageVerdict {
    let mut verdict = StageVerdict::new(Stage::UserValidation);
    let Some(user) = env.user else {
        verdict.signals.set(signal::IDENTITY_VERIFIED, false);
        verdict.signals.set(signal::SOD_CONFLICT, false);
        verdict.flag(StageStatus::Fail, rule::IDENTITY_UNVERIFIED);
        verdict.note("requester not in directory");
        return env.finish(verdict, &[]);
    };

    verdict.signals.set(signal::IDENTITY_VERIFIED, user.active);
    verdict.signals.set(signal::ROLE, user.role.as_str());
    verdict.signals.set(signal::DEPARTMENT, user.department.as_str());
    verdict.signals.set(signal::CLEARANCE, user.clearance.as_str());
    if !user.active {
        verdict.flag(StageStatus::Fail, rule::IDENTITY_UNVERIFIED);
        verdict.note("requester account inactive");
    }
    if user.role.trim().is_empty() {
        verdict.flag(StageStatus::Fail, rule::MISSING_ROLE);
        verdict.note("requester has no role");
    }

    let sod = env.dataset.and_then(|d| env.catalog.check_sod(user, d));
    verdict.signals.set(signal::SOD_CONFLICT, sod.is_some());
    if let Some(rule) = sod {
        verdict.signals.set(signal::SOD_RULE, rule.rule_id.as_str());
        verdict.flag(StageStatus::Fail, rule::SOD_VIOLATION);
        verdict.note(format!("separation of duties rule {}", rule.rule_id));
    }

    // A satisfied check still cites the policy it enforces.
    let mut satisfied = Vec::new();
    if let Some(dataset) = env.dataset {
        let sufficient = user.clearance >= dataset.sensitivity;
        if sufficient && user.active && !user.role.trim().is_empty() {
            satisfied.push(rule::CLEARANCE_INSUFFICIENT.to_string());
        }
        verdict.signals.set(signal::CLEARANCE_SUFFICIENT, sufficient);
        if !sufficient {
            verdict.flag(StageStatus::Fail, rule::CLEARANCE_INSUFFICIENT);
            verdict.note(format!(
                "clearance {} below {}",
                user.clearance, dataset.sensitivity
            ));
        }
    }

    env.finish(verdict, &satisfied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{env_for, org_fixture, request};

    #[test]
    fn cleared_analyst_passes() {
        let org = org_fixture();
        let req = request("support_metrics", "u-eng-01", "weekly dashboard", Some(30));
        let v = user_validation(&env_for(&org, &req));
        assert_eq!(v.status, StageStatus::Pass);
        assert_eq!(v.signals.text(signal::CLEARANCE), Some("Internal"));
        // oracle: policies in the store whose governed rules include the clearance check
        let expected: Vec<_> = org
            .policies
            .iter()
            .filter(|p| p.governs(rule::CLEARANCE_INSUFFICIENT))
            .map(|p| p.policy_id.clone())
            .collect();
        assert!(!expected.is_empty());
        assert_eq!(v.citations, expected);
    }

    #[test]
    fn unknown_requester_fails_without_error() {
        let org = org_fixture();
        let req = request("support_metrics", "ghost", "weekly dashboard", Some(30));
        let v = user_validation(&env_for(&org, &req));
        assert_eq!(v.status, StageStatus::Fail);
        assert_eq!(v.signals.flag(signal::IDENTITY_VERIFIED), Some(false));
    }

    #[test]
    fn payment_initiator_requesting_approval_dataset_hits_sod() {
        let org = org_fixture();
        let req = request("payment_approval", "u-payments-01", "stuck payments outage", Some(1));
        let v = user_validation(&env_for(&org, &req));
        // oracle: direct lookup in the rule table
        let user = org.catalog.user("u-payments-01").unwrap();
        let expected = org
            .catalog
            .sod_rules
            .iter()
            .find(|r| {
                (user.holds(&r.side_a) && r.side_b == "payment_approval")
                    || (user.holds(&r.side_b) && r.side_a == "payment_approval")
            })
            .map(|r| r.rule_id.as_str());
        assert_eq!(v.status, StageStatus::Fail);
        assert_eq!(v.signals.flag(signal::SOD_CONFLICT), Some(true));
        assert_eq!(v.signals.text(signal::SOD_RULE), expected);
    }
}
