#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "depdec/advisories.hpp"
#include "depdec/changes.hpp"
#include "depdec/version.hpp"

namespace depdec {

enum class PolicyTrack { PolicySpecified, PolicyUnspecified };

inline const char* to_string(PolicyTrack t) {
    return t == PolicyTrack::PolicySpecified ? "policy_specified" : "policy_unspecified";
}

/// Glob match with `*` and `?` only, over normalized names.
inline bool glob_match(std::string_view pattern, std::string_view text) {
    std::size_t p = 0, t = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

// Denylist entry: a name pattern, optionally narrowed to an affected
// interval. Bounds are kept as raw text and parsed against the ecosystem of
// the change under evaluation.
struct DenyRule {
    std::string pattern;
    std::optional<std::string> introduced;  // inclusive; absent with fixed absent = all versions
    std::optional<std::string> fixed;       // exclusive

    bool operator==(const DenyRule&) const = default;

    bool hits(const std::string& name, const std::optional<Version>& version) const {
        if (!glob_match(pattern, name)) return false;
        if (!introduced && !fixed) return true;  // whole-package deny
        if (!version) return false;              // range deny needs a concrete version
        VersionInterval iv;
        try {
            iv.introduced = parse_version(version->ecosystem, introduced ? *introduced : "0");
            if (fixed) iv.fixed = parse_version(version->ecosystem, *fixed);
        } catch (const UnparseableVersion&) {
            return false;
        }
        return range_contains(VersionRange::from_intervals({iv}), *version);
    }
};

struct PolicyEnvelope {
    PolicyTrack track = PolicyTrack::PolicyUnspecified;
    std::optional<std::vector<std::string>> allowlist;  // absent = all packages allowed
    std::vector<DenyRule> denylist;
    std::optional<std::size_t> max_new_dependencies;
    bool forbid_vulnerable = true;

    bool operator==(const PolicyEnvelope&) const = default;
};

/// The benchmark-defined rules of the policy-unspecified track: no allowlist,
/// no denylist, no budget, vulnerable versions forbidden.
inline PolicyEnvelope default_policy() {
    return PolicyEnvelope{PolicyTrack::PolicyUnspecified, std::nullopt, {}, std::nullopt, true};
}

enum class AvailabilityDefinition { InManifest, InLockfile, InTree };

inline const char* to_string(AvailabilityDefinition d) {
    switch (d) {
        case AvailabilityDefinition::InManifest: return "in_manifest";
        case AvailabilityDefinition::InLockfile: return "in_lockfile";
        case AvailabilityDefinition::InTree: return "in_tree";
    }
    return "?";
}

struct AvailabilityMember {
    Ecosystem ecosystem = Ecosystem::Npm;
    std::string name;
    std::optional<Version> version;

    bool operator==(const AvailabilityMember&) const = default;
    auto operator<=>(const AvailabilityMember& o) const {
        return std::tie(ecosystem, name) <=> std::tie(o.ecosystem, o.name);
    }
};

struct AvailabilitySet {
    AvailabilityDefinition definition = AvailabilityDefinition::InManifest;
    std::vector<AvailabilityMember> members;

    bool contains_name(std::string_view name) const {
        for (const auto& m : members)
            if (m.name == name) return true;
        return false;
    }
};

enum class EvidenceSource { ImportTrace, ModuleLoadLog, Declared };

inline const char* to_string(EvidenceSource s) {
    switch (s) {
        case EvidenceSource::ImportTrace: return "import_trace";
        case EvidenceSource::ModuleLoadLog: return "module_load_log";
        case EvidenceSource::Declared: return "declared";
    }
    return "?";
}

struct ExecutionEvidence {
    std::set<std::string> observed;  // normalized package names
    EvidenceSource source = EvidenceSource::ImportTrace;
};

struct Violation {
    std::string change;  // package name of the offending change; empty for envelope-level rules
    std::string rule;
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct ComplianceVerdict {
    bool allowlist_ok = true;
    bool denylist_ok = true;
    bool vuln_ok = true;
    bool budget_ok = true;
    std::vector<Violation> violations;  // includes non-failing "unauditable-range" warnings

    bool ok() const { return allowlist_ok && denylist_ok && vuln_ok && budget_ok; }

    bool operator==(const ComplianceVerdict&) const = default;
};

/// Checks Additions and Updates against the envelope: allowlist membership,
/// denylist hits, PR-time vulnerability of the selected version, and the
/// new-dependency budget. Removals never violate. Ranged specs without a pin
/// cannot be audited and produce an "unauditable-range" warning instead of a
/// failure.
inline ComplianceVerdict check_compliance(const std::vector<DependencyChange>& changes,
                                          const PolicyEnvelope& envelope,
                                          const AdvisoryStore& store, UtcTime ref_date) {
    ComplianceVerdict verdict;
    std::size_t additions = 0;
    for (const auto& change : changes) {
        if (change.kind == ChangeKind::Removal) continue;
        if (change.kind == ChangeKind::Addition) ++additions;

        if (envelope.allowlist) {
            bool allowed = false;
            for (const auto& pattern : *envelope.allowlist)
                if (glob_match(pattern, change.name)) {
                    allowed = true;
                    break;
                }
            if (!allowed) {
                verdict.allowlist_ok = false;
                verdict.violations.push_back(
                    {change.name, "allowlist", "package is not in the allowlist"});
            }
        }

        for (const auto& rule : envelope.denylist) {
            if (rule.hits(change.name, change.head_version)) {
                verdict.denylist_ok = false;
                verdict.violations.push_back(
                    {change.name, "denylist", "matches deny pattern \"" + rule.pattern + "\""});
            }
        }

        if (envelope.forbid_vulnerable) {
            if (change.head_version) {
                const auto advisories = advisories_at(store, change.ecosystem, change.name,
                                                      *change.head_version, ref_date);
                if (!advisories.empty()) {
                    verdict.vuln_ok = false;
                    std::string ids;
                    for (const auto& a : advisories) {
                        if (!ids.empty()) ids += ", ";
                        ids += a.id;
                    }
                    verdict.violations.push_back(
                        {change.name, "vulnerable-version",
                         "version is affected by PR-time advisories: " + ids});
                }
            } else {
                verdict.violations.push_back(
                    {change.name, "unauditable-range",
                     "specifier has no pin to audit: \"" + change.head_spec.value_or("") + "\""});
            }
        }
    }
    if (envelope.max_new_dependencies && additions > *envelope.max_new_dependencies) {
        verdict.budget_ok = false;
        verdict.violations.push_back(
            {"", "max-new-dependencies",
             std::to_string(additions) + " additions exceed the budget of " +
                 std::to_string(*envelope.max_new_dependencies)});
    }
    return verdict;
}

/// Fraction of required capabilities satisfied by reuse. A capability (a set
/// of acceptable package names) is reused when some acceptable name is
/// available AND observed in execution evidence AND no Addition introduces
/// another acceptable name for it. Empty capability list scores 1.
inline double reuse_score(const std::vector<std::set<std::string>>& required_capabilities,
                          const AvailabilitySet& availability, const ExecutionEvidence& evidence,
                          const std::vector<DependencyChange>& changes) {
    if (required_capabilities.empty()) return 1.0;
    std::size_t reused = 0;
    for (const auto& capability : required_capabilities) {
        bool satisfied = false;
        for (const auto& name : capability) {
            if (availability.contains_name(name) && evidence.observed.count(name)) {
                satisfied = true;
                break;
            }
        }
        bool competing_addition = false;
        for (const auto& change : changes) {
            if (change.kind != ChangeKind::Addition) continue;
            if (capability.count(change.name) && !availability.contains_name(change.name)) {
                competing_addition = true;
                break;
            }
        }
        if (satisfied && !competing_addition) ++reused;
    }
    return static_cast<double>(reused) / static_cast<double>(required_capabilities.size());
}

/// Count of Additions justified neither by instance metadata nor by an
/// already-available package of the same name.
inline std::size_t unnecessary_add_penalty(const std::vector<DependencyChange>& changes,
                                           const AvailabilitySet& availability,
                                           const std::set<std::string>& justified_names) {
    std::size_t count = 0;
    for (const auto& change : changes) {
        if (change.kind != ChangeKind::Addition) continue;
        if (justified_names.count(change.name)) continue;
        if (availability.contains_name(change.name)) continue;
        ++count;
    }
    return count;
}

/// Justified-add family rule: the required capability must be acquired either
/// by adding one of the justified packages or by an observed justified
/// package. Vacuously satisfied when the justified set is empty.
inline bool justified_add_satisfied(const std::vector<DependencyChange>& changes,
                                    const ExecutionEvidence& evidence,
                                    const std::set<std::string>& justified_names) {
    if (justified_names.empty()) return true;
    for (const auto& change : changes)
        if (change.kind == ChangeKind::Addition && justified_names.count(change.name)) return true;
    for (const auto& name : justified_names)
        if (evidence.observed.count(name)) return true;
    return false;
}

}  // namespace depdec
