//! One triggering fixture and one un-triggering mutation per gate.

mod common;

use accessgov_core::{AccessRequest, DecisionLabel, DecisionReason, GateId, SharingScope};
use common::{controller, org, request};

const REPORTING: &str = "Weekly support ticket volume dashboard for the platform team";
const ANALYTICS: &str = "Feature adoption analytics for the Q3 product review";

fn assert_fires(req: &AccessRequest, gate: GateId) {
    let out = controller(org()).decide(req).unwrap();
    let hit = out.gate_hit.as_ref().unwrap_or_else(|| panic!("no gate hit; expected {gate}"));
    assert_eq!(hit.gate_id, gate, "all hits: {:?}", out.all_gate_hits);
    assert_eq!(out.label, DecisionLabel::Deny);
    assert_eq!(out.reason, DecisionReason::PolicyGate);
    assert!(out.controls.is_empty());
    assert_eq!(out.rationale.machine_fields["gate_id"], serde_json::json!(gate));
}

fn assert_clear(req: &AccessRequest, gate: GateId) {
    let out = controller(org()).decide(req).unwrap();
    assert!(
        out.all_gate_hits.iter().all(|h| h.gate_id != gate),
        "{gate} still fires: {:?}",
        out.all_gate_hits
    );
}

fn missing_role() -> AccessRequest {
    request("u-norole-01", "support_metrics", REPORTING, Some(30))
}

#[test]
fn missing_role_fires() {
    assert_fires(&missing_role(), GateId::MissingIdentityOrRole);
}

#[test]
fn missing_role_cleared_by_known_role() {
    let mut req = missing_role();
    req.requester_id = "u-eng-01".into();
    assert_clear(&req, GateId::MissingIdentityOrRole);
}

fn no_purpose() -> AccessRequest {
    request("u-eng-01", "support_metrics", "", Some(30))
}

#[test]
fn no_purpose_fires() {
    assert_fires(&no_purpose(), GateId::NoStatedPurpose);
}

#[test]
fn no_purpose_cleared_by_stated_purpose() {
    let mut req = no_purpose();
    req.purpose = REPORTING.into();
    assert_clear(&req, GateId::NoStatedPurpose);
}

fn sod() -> AccessRequest {
    request(
        "u-payments-01",
        "payment_approval",
        "Emergency access to approve stuck vendor payments during outage",
        Some(1),
    )
}

#[test]
fn sod_fires() {
    assert_fires(&sod(), GateId::SoDViolation);
}

#[test]
fn sod_cleared_by_other_requester() {
    let mut req = sod();
    req.requester_id = "u-finance-01".into();
    assert_clear(&req, GateId::SoDViolation);
}

fn restricted_finance() -> AccessRequest {
    request(
        "u-marketing-02",
        "profit_margins",
        "Quarterly margin report to support pricing decisions",
        Some(90),
    )
}

#[test]
fn restricted_finance_fires() {
    assert_fires(&restricted_finance(), GateId::RestrictedFinanceNoClearance);
}

#[test]
fn restricted_finance_cleared_by_restricted_clearance() {
    let mut req = restricted_finance();
    req.requester_id = "u-finance-01".into();
    assert_clear(&req, GateId::RestrictedFinanceNoClearance);
}

fn external_share() -> AccessRequest {
    let mut req = request(
        "u-partner-01",
        "product_metrics",
        "Share monthly adoption metrics with AdReach Media for joint reporting",
        Some(90),
    );
    req.sharing_scope = SharingScope::ExternalThirdParty;
    req.external_party = Some("adreach_media".into());
    req
}

#[test]
fn external_share_fires() {
    assert_fires(&external_share(), GateId::ExternalSharingNoAgreement);
}

#[test]
fn external_share_cleared_by_party_with_dsa() {
    let mut req = external_share();
    req.external_party = Some("clearwater_analytics".into());
    assert_clear(&req, GateId::ExternalSharingNoAgreement);
}

fn cross_border() -> AccessRequest {
    let mut req = request(
        "u-privacy-01",
        "eu_customer_profiles",
        "Fulfil GDPR data subject access request export for ticket DSR-2291",
        Some(30),
    );
    req.sharing_scope = SharingScope::CrossBorder;
    req.destination_region = Some("APAC".into());
    req
}

#[test]
fn cross_border_fires() {
    assert_fires(&cross_border(), GateId::CrossBorderNoDpoApproval);
}

#[test]
fn cross_border_cleared_by_approved_destination() {
    let mut req = cross_border();
    req.destination_region = Some("US".into());
    assert_clear(&req, GateId::CrossBorderNoDpoApproval);
}

fn pii_modeling() -> AccessRequest {
    request("u-analyst-01", "salary_table", ANALYTICS, Some(90))
}

#[test]
fn pii_modeling_fires() {
    assert_fires(&pii_modeling(), GateId::PiiModelingNoProtection);
}

#[test]
fn pii_modeling_cleared_by_tokenizable_dataset() {
    let mut req = pii_modeling();
    req.dataset_id = "customer_master".into();
    assert_clear(&req, GateId::PiiModelingNoProtection);
}

fn retention() -> AccessRequest {
    request("u-eng-01", "support_metrics", REPORTING, Some(400))
}

#[test]
fn retention_fires() {
    assert_fires(&retention(), GateId::RetentionBeyondPolicy);
}

#[test]
fn retention_cleared_by_shorter_retention() {
    let mut req = retention();
    req.declared_retention_days = Some(30);
    assert_clear(&req, GateId::RetentionBeyondPolicy);
}

fn third_party() -> AccessRequest {
    let mut req = request(
        "u-partner-01",
        "product_metrics",
        "Share monthly adoption metrics with Northwind Insights for joint reporting",
        Some(90),
    );
    req.sharing_scope = SharingScope::ExternalThirdParty;
    req.external_party = Some("northwind_insights".into());
    req.third_party_processor = true;
    req
}

#[test]
fn third_party_fires() {
    assert_fires(&third_party(), GateId::ThirdPartyNoDpa);
}

#[test]
fn third_party_cleared_when_not_processing() {
    let mut req = third_party();
    req.third_party_processor = false;
    assert_clear(&req, GateId::ThirdPartyNoDpa);
}

fn no_policy_context() -> AccessRequest {
    request(
        "u-eng-01",
        "research_sandbox",
        "Salary benchmarks for marketing compensation campaign",
        Some(30),
    )
}

#[test]
fn no_policy_context_fires() {
    assert_fires(&no_policy_context(), GateId::NoPolicyContext);
}

#[test]
fn no_policy_context_cleared_by_covered_purpose() {
    let mut req = no_policy_context();
    req.purpose = ANALYTICS.into();
    assert_clear(&req, GateId::NoPolicyContext);
}
