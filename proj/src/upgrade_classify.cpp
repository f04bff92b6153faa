#include "proxydiff/upgrade_classify.hpp"

#include <algorithm>

namespace proxydiff {

std::string_view to_string(UpgradeBehavior behavior) {
  switch (behavior) {
    case UpgradeBehavior::IntroduceVulnerability: return "IntroduceVulnerability";
    case UpgradeBehavior::FixVulnerability: return "FixVulnerability";
    case UpgradeBehavior::SmoothUpgrade: return "SmoothUpgrade";
    case UpgradeBehavior::InvalidUpgrade: return "InvalidUpgrade";
  }
  return "SmoothUpgrade";
}

std::string_view conclusion(UpgradeBehavior behavior) {
  switch (behavior) {
    case UpgradeBehavior::IntroduceVulnerability: return "Risk Increased";
    case UpgradeBehavior::FixVulnerability: return "Security Improved";
    case UpgradeBehavior::SmoothUpgrade: return "No Security Impact";
    case UpgradeBehavior::InvalidUpgrade: return "Uncertain, needs analysis";
  }
  return "No Security Impact";
}

UpgradeBehavior classify_type(bool v1_present, bool v2_present) {
  if (v1_present) return v2_present ? UpgradeBehavior::InvalidUpgrade : UpgradeBehavior::FixVulnerability;
  return v2_present ? UpgradeBehavior::IntroduceVulnerability : UpgradeBehavior::SmoothUpgrade;
}

std::vector<TypeClassification> classify_pair(const std::vector<Finding>& v1_findings,
                                              const std::vector<Finding>& v2_findings) {
  std::vector<TypeClassification> rows;
  for (VulnType type : kAllVulnTypes) {
    TypeClassification row;
    row.vuln_type = type;
    for (const Finding& f : v1_findings)
      if (f.vuln_type == type) row.v1_findings.push_back(f.finding_id);
    for (const Finding& f : v2_findings)
      if (f.vuln_type == type) row.v2_findings.push_back(f.finding_id);
    std::sort(row.v1_findings.begin(), row.v1_findings.end());
    std::sort(row.v2_findings.begin(), row.v2_findings.end());
    row.v1_present = !row.v1_findings.empty();
    row.v2_present = !row.v2_findings.empty();
    row.behavior = classify_type(row.v1_present, row.v2_present);
    rows.push_back(std::move(row));
  }
  return rows;
}

RiskSummary risk_summary(const std::vector<TypeClassification>& rows, const std::vector<Finding>& v2_findings) {
  RiskSummary s;
  for (UpgradeBehavior b : {UpgradeBehavior::IntroduceVulnerability, UpgradeBehavior::FixVulnerability,
                            UpgradeBehavior::SmoothUpgrade, UpgradeBehavior::InvalidUpgrade})
    s.behavior_counts[b] = 0;
  for (const TypeClassification& row : rows) ++s.behavior_counts[row.behavior];

  if (!v2_findings.empty()) {
    double high = 0, medium = 0, low = 0;
    for (const Finding& f : v2_findings) {
      if (f.severity == Severity::High) ++high;
      if (f.severity == Severity::Medium) ++medium;
      if (f.severity == Severity::Low) ++low;
    }
    const double total = static_cast<double>(v2_findings.size());
    s.severity = {100.0 * high / total, 100.0 * medium / total, 100.0 * low / total};
  }

  for (UpgradeBehavior b : {UpgradeBehavior::IntroduceVulnerability, UpgradeBehavior::FixVulnerability,
                            UpgradeBehavior::InvalidUpgrade}) {
    if (s.behavior_counts[b] > 0) {
      s.verdict = b;
      return s;
    }
  }
  s.verdict = UpgradeBehavior::SmoothUpgrade;
  return s;
}

}  // namespace proxydiff
