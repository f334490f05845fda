use serde::Serialize;

/// Outcome of one exact structural check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub lemma: String,
    pub n: usize,
    pub k: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckReport {
    /// Passes iff `counterexample` is `None`.
    pub fn new(lemma: impl Into<String>, n: usize, k: usize, counterexample: Option<String>) -> Self {
        Self {
            lemma: lemma.into(),
            n,
            k,
            pass: counterexample.is_none(),
            counterexample,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

pub fn first_failure(reports: &[CheckReport]) -> Option<&CheckReport> {
    reports.iter().find(|r| !r.pass)
}
