#pragma once

#include <array>
#include <map>
#include <string_view>
#include <vector>

#include "proxydiff/vuln_detect.hpp"

namespace proxydiff {

enum class UpgradeBehavior { IntroduceVulnerability, FixVulnerability, SmoothUpgrade, InvalidUpgrade };

std::string_view to_string(UpgradeBehavior behavior);
/// The security conclusion attached to each behavior, e.g. "Risk Increased".
std::string_view conclusion(UpgradeBehavior behavior);

UpgradeBehavior classify_type(bool v1_present, bool v2_present);

struct TypeClassification {
  VulnType vuln_type = VulnType::Reentrancy;
  bool v1_present = false;
  bool v2_present = false;
  UpgradeBehavior behavior = UpgradeBehavior::SmoothUpgrade;
  std::vector<int> v1_findings;  // finding ids
  std::vector<int> v2_findings;
};

/// One row per vulnerability type, in taxonomy order.
std::vector<TypeClassification> classify_pair(const std::vector<Finding>& v1_findings,
                                              const std::vector<Finding>& v2_findings);

struct SeverityDistribution {
  double high = 0.0;  // percentages of v2 findings; all zero when there are none
  double medium = 0.0;
  double low = 0.0;
};

struct RiskSummary {
  std::map<UpgradeBehavior, int> behavior_counts;
  SeverityDistribution severity;
  UpgradeBehavior verdict = UpgradeBehavior::SmoothUpgrade;
};

RiskSummary risk_summary(const std::vector<TypeClassification>& rows, const std::vector<Finding>& v2_findings);

}  // namespace proxydiff
