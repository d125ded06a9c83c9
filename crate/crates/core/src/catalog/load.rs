//! Catalog documents: the JSON org file and the three CSV tables.
//!
//! CSV layout (header row required, lists separated by `;`):
//!
//! * datasets: one row per field; dataset-level columns repeat and must
//!   agree across a dataset's rows.
//! * users: one row per user.
//! * sod_rules: one row per rule.
//!
//! Row numbers in errors count the header as row 1. Loads are all or
//! nothing: every failing record is reported and nothing is returned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::{Catalog, Dataset, FieldCategory, FieldSpec, Org, SensitivityLabel, SoDRule, UserRecord, SCHEMA_VERSION};
use crate::purpose::PurposeCategory;

pub const CSV_DATASET_HEADER: [&str; 14] = [
    "dataset_id",
    "name",
    "sensitivity",
    "scope_tags",
    "region",
    "max_retention_days",
    "allowed_purposes",
    "allowed_departments",
    "supports_tokenization",
    "supports_aggregation",
    "field_name",
    "field_category",
    "field_label",
    "quasi_identifier",
];

pub const CSV_USER_HEADER: [&str; 7] = [
    "user_id",
    "display_name",
    "role",
    "department",
    "clearance",
    "active",
    "permissions",
];

pub const CSV_SOD_HEADER: [&str; 4] = ["rule_id", "side_a", "side_b", "citation"];

/// One failing record: where it is, which field, and why.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RecordError {
    pub location: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} field `{}`: {}", self.location, self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot parse {source_name}: {message}")]
    Parse { source_name: String, message: String },
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("{} invalid record(s): {}", .0.len(), join(.0))]
    Invalid(Vec<RecordError>),
}

fn join(errors: &[RecordError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl CatalogError {
    pub fn records(&self) -> &[RecordError] {
        match self {
            Self::Invalid(errors) => errors,
            _ => &[],
        }
    }
}

fn err(location: impl Into<String>, field: &str, message: impl Into<String>) -> RecordError {
    RecordError {
        location: location.into(),
        field: field.to_string(),
        message: message.into(),
    }
}

/// Checks every catalog invariant, collecting all violations.
/// `locate` maps a record kind and id to a human location (e.g. a row).
fn check(catalog: &Catalog, locate: &dyn Fn(&str, &str) -> String) -> Vec<RecordError> {
    let mut errors = Vec::new();

    let mut seen = BTreeSet::new();
    for d in &catalog.datasets {
        let at = locate("dataset", &d.dataset_id);
        if d.dataset_id.trim().is_empty() {
            errors.push(err(&at, "dataset_id", "must not be empty"));
        } else if !seen.insert(d.dataset_id.as_str()) {
            errors.push(err(&at, "dataset_id", "duplicate id"));
        }
        if let Some(max) = d.max_field_label() {
            if d.sensitivity < max {
                errors.push(err(
                    &at,
                    "sensitivity",
                    format!("{} is below field label {max}", d.sensitivity),
                ));
            }
        }
        let mut names = BTreeSet::new();
        for field in &d.fields {
            if !names.insert(field.name.as_str()) {
                errors.push(err(&at, "fields", format!("duplicate field `{}`", field.name)));
            }
        }
    }

    let mut seen = BTreeSet::new();
    for u in &catalog.users {
        let at = locate("user", &u.user_id);
        if u.user_id.trim().is_empty() {
            errors.push(err(&at, "user_id", "must not be empty"));
        } else if !seen.insert(u.user_id.as_str()) {
            errors.push(err(&at, "user_id", "duplicate id"));
        }
    }

    let mut seen = BTreeSet::new();
    for r in &catalog.sod_rules {
        let at = locate("sod rule", &r.rule_id);
        if !seen.insert(r.rule_id.as_str()) {
            errors.push(err(&at, "rule_id", "duplicate id"));
        }
        if r.side_a == r.side_b {
            errors.push(err(&at, "side_b", "a rule cannot pair an entitlement with itself"));
        }
        if r.side_a.trim().is_empty() || r.side_b.trim().is_empty() {
            errors.push(err(&at, "side_a", "both sides must be named"));
        }
    }
    errors
}

fn json_location(kind: &str, id: &str) -> String {
    format!("{kind} `{id}`")
}

impl Catalog {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let errors = check(self, &json_location);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CatalogError::Invalid(errors))
        }
    }

    /// Loads the three CSV tables. Agreements are not tabular and start empty.
    pub fn from_csv(datasets: &str, users: &str, sod_rules: &str) -> Result<Self, CatalogError> {
        let mut errors = Vec::new();
        let mut rows: BTreeMap<(&'static str, String), usize> = BTreeMap::new();
        let datasets = read_datasets(datasets, &mut errors, &mut rows)?;
        let users = read_users(users, &mut errors, &mut rows)?;
        let sod_rules = read_sod(sod_rules, &mut errors, &mut rows)?;
        let catalog = Catalog {
            datasets,
            users,
            sod_rules,
            agreements: Default::default(),
        };
        let file_for = |kind: &str| match kind {
            "dataset" => "datasets.csv",
            "user" => "users.csv",
            _ => "sod_rules.csv",
        };
        let locate = |kind: &str, id: &str| {
            let key = match kind {
                "dataset" => "dataset",
                "user" => "user",
                _ => "sod rule",
            };
            match rows.get(&(key, id.to_string())) {
                Some(row) => format!("{} row {row} ({kind} `{id}`)", file_for(kind)),
                None => json_location(kind, id),
            }
        };
        errors.extend(check(&catalog, &locate));
        if errors.is_empty() {
            Ok(catalog)
        } else {
            Err(CatalogError::Invalid(errors))
        }
    }

    /// The inverse of [`Catalog::from_csv`]: (datasets, users, sod_rules).
    pub fn to_csv(&self) -> (String, String, String) {
        let mut w = writer(&CSV_DATASET_HEADER);
        for d in &self.datasets {
            let purposes: Vec<&str> = d.allowed_purposes.iter().map(|p| p.as_str()).collect();
            for f in &d.fields {
                w.write_record([
                    d.dataset_id.as_str(),
                    &d.name,
                    d.sensitivity.as_str(),
                    &d.scope_tags.join(";"),
                    &d.region,
                    &d.max_retention_days.to_string(),
                    &purposes.join(";"),
                    &d.allowed_departments.join(";"),
                    bool_str(d.supports_tokenization),
                    bool_str(d.supports_aggregation),
                    &f.name,
                    f.category.as_str(),
                    f.label.map_or("", SensitivityLabel::as_str),
                    bool_str(f.quasi_identifier),
                ])
                .expect("in-memory csv write");
            }
        }
        let datasets = finish(w);

        let mut w = writer(&CSV_USER_HEADER);
        for u in &self.users {
            w.write_record([
                u.user_id.as_str(),
                &u.display_name,
                &u.role,
                &u.department,
                u.clearance.as_str(),
                bool_str(u.active),
                &u.permissions.join(";"),
            ])
            .expect("in-memory csv write");
        }
        let users = finish(w);

        let mut w = writer(&CSV_SOD_HEADER);
        for r in &self.sod_rules {
            w.write_record([&r.rule_id, &r.side_a, &r.side_b, &r.citation])
                .expect("in-memory csv write");
        }
        (datasets, users, finish(w))
    }
}

impl Org {
    /// Parses and validates an org document (catalog plus policies).
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| CatalogError::Parse {
            source_name: "org json".into(),
            message: e.to_string(),
        })?;
        if let Some(v) = probe.get("schema_version") {
            let found = v.as_u64().unwrap_or(0) as u32;
            if found != SCHEMA_VERSION {
                return Err(CatalogError::SchemaVersion { found });
            }
        }
        let org: Org = serde_json::from_value(probe).map_err(|e| CatalogError::Parse {
            source_name: "org json".into(),
            message: e.to_string(),
        })?;
        org.validate()?;
        Ok(org)
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut errors = check(&self.catalog, &json_location);
        let mut seen = BTreeSet::new();
        for p in self.policies.iter() {
            if !seen.insert(p.policy_id.as_str()) {
                errors.push(err(json_location("policy", &p.policy_id), "policy_id", "duplicate id"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CatalogError::Invalid(errors))
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("org serializes");
        text.push('\n');
        text
    }
}

fn writer(header: &[&str]) -> csv::Writer<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    w
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Parsed table: (row number, record) pairs after the header check.
fn table(name: &str, text: &str, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>, CatalogError> {
    let parse_err = |message: String| CatalogError::Parse {
        source_name: name.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_err(format!(
            "header must be `{}`, found `{}`",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(format!("row {row}: {e}")))?;
        out.push((row, record));
    }
    Ok(out)
}

struct Row<'a> {
    file: &'static str,
    row: usize,
    record: &'a csv::StringRecord,
    header: &'static [&'static str],
}

impl Row<'_> {
    fn get(&self, column: &str) -> &str {
        let idx = self.header.iter().position(|h| *h == column).expect("known column");
        self.record.get(idx).unwrap_or("")
    }

    fn location(&self) -> String {
        format!("{} row {}", self.file, self.row)
    }

    fn parse<T: FromStr>(&self, column: &str, errors: &mut Vec<RecordError>) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.get(column);
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(err(self.location(), column, format!("`{raw}`: {e}")));
                None
            }
        }
    }

    fn flag(&self, column: &str, errors: &mut Vec<RecordError>) -> Option<bool> {
        match self.get(column).to_ascii_lowercase().as_str() {
            "" | "false" | "no" | "0" => Some(false),
            "true" | "yes" | "1" => Some(true),
            other => {
                errors.push(err(self.location(), column, format!("`{other}` is not a boolean")));
                None
            }
        }
    }

    fn list(&self, column: &str) -> Vec<String> {
        split_list(self.get(column))
    }
}

fn split_list(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn read_datasets(
    text: &str,
    errors: &mut Vec<RecordError>,
    rows: &mut BTreeMap<(&'static str, String), usize>,
) -> Result<Vec<Dataset>, CatalogError> {
    let mut out: Vec<Dataset> = Vec::new();
    for (row, record) in table("datasets.csv", text, &CSV_DATASET_HEADER)? {
        let r = Row {
            file: "datasets.csv",
            row,
            record: &record,
            header: &CSV_DATASET_HEADER,
        };
        let before = errors.len();
        let sensitivity = r.parse::<SensitivityLabel>("sensitivity", errors);
        let retention = r.parse::<u32>("max_retention_days", errors);
        let mut purposes = Vec::new();
        for p in r.list("allowed_purposes") {
            match p.parse::<PurposeCategory>() {
                Ok(c) => purposes.push(c),
                Err(e) => errors.push(err(r.location(), "allowed_purposes", format!("`{p}`: {e}"))),
            }
        }
        let tokenization = r.flag("supports_tokenization", errors);
        let aggregation = r.flag("supports_aggregation", errors);
        let category = r.parse::<FieldCategory>("field_category", errors);
        let label = match r.get("field_label") {
            "" => Some(None),
            raw => match raw.parse::<SensitivityLabel>() {
                Ok(l) => Some(Some(l)),
                Err(e) => {
                    errors.push(err(r.location(), "field_label", e));
                    None
                }
            },
        };
        let quasi = r.flag("quasi_identifier", errors);
        if r.get("field_name").is_empty() {
            errors.push(err(r.location(), "field_name", "must not be empty"));
        }
        if errors.len() > before {
            continue;
        }
        let (Some(sensitivity), Some(retention), Some(tokenization), Some(aggregation), Some(category), Some(label), Some(quasi)) =
            (sensitivity, retention, tokenization, aggregation, category, label, quasi)
        else {
            continue;
        };
        let field = FieldSpec {
            name: r.get("field_name").to_string(),
            category,
            label,
            quasi_identifier: quasi,
            sample_values: Vec::new(),
        };
        let dataset = Dataset {
            dataset_id: r.get("dataset_id").to_string(),
            name: r.get("name").to_string(),
            fields: Vec::new(),
            sensitivity,
            scope_tags: r.list("scope_tags"),
            region: r.get("region").to_string(),
            max_retention_days: retention,
            allowed_purposes: purposes,
            allowed_departments: r.list("allowed_departments"),
            supports_tokenization: tokenization,
            supports_aggregation: aggregation,
        };
        match out.iter_mut().find(|d| d.dataset_id == dataset.dataset_id) {
            Some(existing) => {
                let mut header_only = existing.clone();
                header_only.fields.clear();
                if header_only != dataset {
                    errors.push(err(
                        r.location(),
                        "dataset_id",
                        format!("dataset `{}` columns disagree with its earlier rows", dataset.dataset_id),
                    ));
                    continue;
                }
                existing.fields.push(field);
            }
            None => {
                rows.insert(("dataset", dataset.dataset_id.clone()), row);
                let mut dataset = dataset;
                dataset.fields.push(field);
                out.push(dataset);
            }
        }
    }
    Ok(out)
}

fn read_users(
    text: &str,
    errors: &mut Vec<RecordError>,
    rows: &mut BTreeMap<(&'static str, String), usize>,
) -> Result<Vec<UserRecord>, CatalogError> {
    let mut out = Vec::new();
    for (row, record) in table("users.csv", text, &CSV_USER_HEADER)? {
        let r = Row {
            file: "users.csv",
            row,
            record: &record,
            header: &CSV_USER_HEADER,
        };
        let clearance = r.parse::<SensitivityLabel>("clearance", errors);
        let active = r.flag("active", errors);
        let (Some(clearance), Some(active)) = (clearance, active) else {
            continue;
        };
        let user_id = r.get("user_id").to_string();
        // later duplicates are reported by the invariant check at their first row
        rows.entry(("user", user_id.clone())).or_insert(row);
        out.push(UserRecord {
            user_id,
            display_name: r.get("display_name").to_string(),
            role: r.get("role").to_string(),
            department: r.get("department").to_string(),
            clearance,
            active,
            permissions: r.list("permissions"),
        });
    }
    Ok(out)
}

fn read_sod(
    text: &str,
    _errors: &mut Vec<RecordError>,
    rows: &mut BTreeMap<(&'static str, String), usize>,
) -> Result<Vec<SoDRule>, CatalogError> {
    let mut out = Vec::new();
    for (row, record) in table("sod_rules.csv", text, &CSV_SOD_HEADER)? {
        let r = Row {
            file: "sod_rules.csv",
            row,
            record: &record,
            header: &CSV_SOD_HEADER,
        };
        let rule_id = r.get("rule_id").to_string();
        rows.entry(("sod rule", rule_id.clone())).or_insert(row);
        out.push(SoDRule {
            rule_id,
            side_a: r.get("side_a").to_string(),
            side_b: r.get("side_b").to_string(),
            citation: r.get("citation").to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const USERS: &str = "user_id,display_name,role,department,clearance,active,permissions\n\
                         u1,Avery Example,analyst,analytics,Internal,true,\n";
    const SOD: &str = "rule_id,side_a,side_b,citation\nSOD-1,payment_initiator,payment_approval,POL-GOV-03\n";

    fn datasets(rows: &[&str]) -> String {
        let mut s = CSV_DATASET_HEADER.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn csv_groups_fields_by_dataset() {
        let text = datasets(&[
            "orders,Orders,Internal,enterprise,US,90,reporting;operations,,false,true,order_id,operational,Internal,false",
            "orders,Orders,Internal,enterprise,US,90,reporting;operations,,false,true,total,financial,Internal,false",
            "web,Web,Public,enterprise,US,365,,,false,false,visits,public_metric,Public,false",
        ]);
        let catalog = Catalog::from_csv(&text, USERS, SOD).unwrap();
        assert_eq!(catalog.datasets.len(), 2);
        assert_eq!(catalog.datasets[0].fields.len(), 2);
        assert_eq!(
            catalog.datasets[0].allowed_purposes,
            [PurposeCategory::Reporting, PurposeCategory::Operations]
        );
        assert!(catalog.datasets[0].supports_aggregation);
    }

    #[test]
    fn unknown_category_names_the_row() {
        let text = datasets(&[
            "web,Web,Public,enterprise,US,365,,,false,false,visits,public_metric,Public,false",
            "web,Web,Public,enterprise,US,365,,,false,false,mood,feelings,Public,false",
        ]);
        let e = Catalog::from_csv(&text, USERS, SOD).unwrap_err();
        let records = e.records();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].location, "datasets.csv row 3");
        assert_eq!(records[0].field, "field_category");
    }

    #[test]
    fn every_failing_record_is_reported() {
        let text = datasets(&[
            "a,A,Internal,,US,30,,,false,false,x,financial,Restricted,false",
            "b,B,Public,,US,30,,,false,false,y,pii,Confidential,false",
        ]);
        let sod = "rule_id,side_a,side_b,citation\nSOD-9,auditor,auditor,POL-GOV-03\n";
        let e = Catalog::from_csv(&text, USERS, sod).unwrap_err();
        let locations: Vec<&str> = e.records().iter().map(|r| r.location.as_str()).collect();
        assert_eq!(
            locations,
            [
                "datasets.csv row 2 (dataset `a`)",
                "datasets.csv row 3 (dataset `b`)",
                "sod_rules.csv row 2 (sod rule `SOD-9`)"
            ]
        );
    }

    #[test]
    fn sensitivity_below_field_label_is_rejected_in_json() {
        let mut org = crate::testutil::org_fixture();
        org.catalog.datasets[0].sensitivity = SensitivityLabel::Public;
        org.catalog.datasets[0].fields[0].label = Some(SensitivityLabel::Restricted);
        let e = Org::from_json(&org.to_json_pretty()).unwrap_err();
        assert!(e.to_string().contains(&org.catalog.datasets[0].dataset_id));
    }

    #[test]
    fn wrong_schema_version_is_refused() {
        let e = Org::from_json(r#"{"schema_version":9,"name":"x"}"#).unwrap_err();
        assert_eq!(e, CatalogError::SchemaVersion { found: 9 });
    }

    #[test]
    fn bad_header_is_a_parse_error() {
        let e = Catalog::from_csv("id,name\n", USERS, SOD).unwrap_err();
        assert!(matches!(e, CatalogError::Parse { .. }));
    }

    #[test]
    fn json_and_csv_round_trips_are_lossless() {
        let org = crate::testutil::org_fixture();
        let again = Org::from_json(&org.to_json_pretty()).unwrap();
        assert_eq!(again, org);

        let mut catalog = org.catalog.clone();
        for d in &mut catalog.datasets {
            for f in &mut d.fields {
                f.sample_values.clear();
            }
        }
        catalog.agreements = Default::default();
        let (d, u, s) = catalog.to_csv();
        assert_eq!(Catalog::from_csv(&d, &u, &s).unwrap(), catalog);
    }
}
