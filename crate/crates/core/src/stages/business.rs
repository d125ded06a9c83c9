use crate::label::{Stage, StageStatus};
use crate::purpose::PurposeCategory;

use super::{prior_signals, rule, signal, StageEnv, StageVerdict};

/// Legitimate interest and a time-bound need to know.
pub fn business_purpose(env: &StageEnv<'_>, prior: &[StageVerdict]) -> StageVerdict {
    let mut verdict = StageVerdict::new(Stage::BusinessPurpose);
    let category: Option<PurposeCategory> = prior_signals(prior, Stage::Context)
        .and_then(|s| s.text(signal::PURPOSE_CATEGORY))
        .and_then(|c| c.parse().ok());

    let purpose_permitted = match (env.dataset, category) {
        (Some(dataset), Some(category)) => dataset.allowed_purposes.contains(&category),
        _ => false,
    };
    let department_permitted = match (env.dataset, env.user) {
        (Some(dataset), Some(user)) => {
            dataset.allowed_departments.is_empty()
                || dataset.allowed_departments.contains(&user.department)
        }
        _ => false,
    };
    let need_to_know = purpose_permitted && department_permitted;
    let time_bound = env.request.declared_retention_days.is_some();

    verdict.signals.set(signal::PURPOSE_PERMITTED, purpose_permitted);
    verdict
        .signals
        .set(signal::DEPARTMENT_PERMITTED, department_permitted);
    verdict.signals.set(signal::NEED_TO_KNOW, need_to_know);
    verdict.signals.set(signal::TIME_BOUND, time_bound);

    if !need_to_know {
        verdict.flag(StageStatus::Fail, rule::NO_NEED_TO_KNOW);
        match (purpose_permitted, department_permitted) {
            (false, _) => verdict.note("purpose not permitted for this dataset"),
            (true, false) => verdict.note("department has no need to know"),
            _ => {}
        }
    } else if !time_bound {
        verdict.flag(StageStatus::Uncertain, rule::NO_TIME_BOUND);
        verdict.note("no retention or access window declared");
    }
    // need to know established: cite the policy that requires it
    let satisfied: Vec<String> = if need_to_know {
        vec![rule::NO_NEED_TO_KNOW.to_string()]
    } else {
        Vec::new()
    };
    env.finish(verdict, &satisfied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stages::context;
    use crate::testutil::{env_for, org_fixture, request};

    fn run(dataset: &str, user: &str, purpose: &str, retention: Option<u32>) -> StageVerdict {
        let org = org_fixture();
        let req = request(dataset, user, purpose, retention);
        let env = env_for(&org, &req);
        let ctx = context(&env);
        business_purpose(&env, &[ctx])
    }

    #[test]
    fn analytics_on_public_metrics_passes() {
        let v = run("product_metrics", "u-analyst-01", "feature adoption analytics", Some(90));
        assert_eq!(v.status, StageStatus::Pass);
    }

    #[test]
    fn marketing_on_salary_table_fails() {
        let v = run("salary_table", "u-marketing-01", "salary benchmarks for a marketing campaign", Some(30));
        assert_eq!(v.status, StageStatus::Fail);
        assert_eq!(v.failure_rules, [rule::NO_NEED_TO_KNOW]);
    }

    #[test]
    fn missing_time_bound_is_uncertain_with_time_box() {
        let v = run("sales_history", "u-sales-02", "historical sales trend analysis", None);
        // oracle: rubric row (need to know met, no window) -> uncertain + time box
        assert_eq!(v.status, StageStatus::Uncertain);
        let ids: Vec<_> = v.proposed_controls.iter().map(|c| c.control_id.as_str()).collect();
        assert_eq!(ids, ["time_boxed_access"]);
    }
}
