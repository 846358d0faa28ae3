#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "depdec/advisories.hpp"
#include "depdec/changes.hpp"
#include "depdec/errors.hpp"
#include "depdec/policy.hpp"
#include "depdec/scoring.hpp"

namespace depdec {

enum class ReportFormat { Json, MarkdownTable };

struct RenderedReport {
    ReportFormat format = ReportFormat::Json;
    std::string body;
};

namespace detail {

inline std::string with_thousands(std::int64_t n) {
    const bool negative = n < 0;
    std::string digits = std::to_string(negative ? -n : n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return negative ? "-" + out : out;
}

inline std::string signed_thousands(std::int64_t n) {
    return n > 0 ? "+" + with_thousands(n) : with_thousands(n);
}

inline nlohmann::ordered_json version_or_null(const std::optional<Version>& v) {
    return v ? nlohmann::ordered_json(v->raw) : nlohmann::ordered_json(nullptr);
}

inline std::optional<Version> version_from(const nlohmann::json& j, Ecosystem eco) {
    if (j.is_null()) return std::nullopt;
    return parse_version(eco, j.get<std::string>());
}

}  // namespace detail

// --- DependencyChange ------------------------------------------------------

inline nlohmann::ordered_json change_to_json(const DependencyChange& c) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(c.kind);
    j["ecosystem"] = to_string(c.ecosystem);
    j["name"] = c.name;
    j["base_spec"] = c.base_spec ? nlohmann::ordered_json(*c.base_spec)
                                 : nlohmann::ordered_json(nullptr);
    j["base_version"] = detail::version_or_null(c.base_version);
    j["head_spec"] = c.head_spec ? nlohmann::ordered_json(*c.head_spec)
                                 : nlohmann::ordered_json(nullptr);
    j["head_version"] = detail::version_or_null(c.head_version);
    j["scope"] = to_string(c.scope);
    j["source_path"] = c.source_path;
    return j;
}

inline DependencyChange change_from_json(const nlohmann::json& j) {
    DependencyChange c;
    const std::string kind = j.at("kind").get<std::string>();
    c.kind = kind == "addition" ? ChangeKind::Addition
             : kind == "removal" ? ChangeKind::Removal
                                 : ChangeKind::Update;
    const auto eco = ecosystem_from_string(j.at("ecosystem").get<std::string>());
    if (!eco) throw Error("unknown ecosystem in change record");
    c.ecosystem = *eco;
    c.name = j.at("name").get<std::string>();
    if (!j.at("base_spec").is_null()) c.base_spec = j["base_spec"].get<std::string>();
    c.base_version = detail::version_from(j.at("base_version"), c.ecosystem);
    if (!j.at("head_spec").is_null()) c.head_spec = j["head_spec"].get<std::string>();
    c.head_version = detail::version_from(j.at("head_version"), c.ecosystem);
    const std::string scope = j.at("scope").get<std::string>();
    c.scope = scope == "dev" ? Scope::Dev : scope == "optional" ? Scope::Optional : Scope::Runtime;
    c.source_path = j.at("source_path").get<std::string>();
    return c;
}

// --- ScoreReport -------------------------------------------------------------

inline nlohmann::ordered_json score_report_to_json(const ScoreReport& r) {
    nlohmann::ordered_json j;
    j["instance_id"] = r.instance_id;
    j["functional_pass"] = r.functional_pass ? nlohmann::ordered_json(*r.functional_pass)
                                             : nlohmann::ordered_json(nullptr);
    j["reuse"] = r.reuse;
    j["unnecessary_adds"] = r.unnecessary_adds;
    nlohmann::ordered_json compliance;
    compliance["allowlist_ok"] = r.compliance.allowlist_ok;
    compliance["denylist_ok"] = r.compliance.denylist_ok;
    compliance["vuln_ok"] = r.compliance.vuln_ok;
    compliance["budget_ok"] = r.compliance.budget_ok;
    compliance["ok"] = r.compliance.ok();
    compliance["violations"] = nlohmann::ordered_json::array();
    for (const auto& v : r.compliance.violations) {
        nlohmann::ordered_json vj;
        vj["change"] = v.change;
        vj["rule"] = v.rule;
        vj["message"] = v.message;
        compliance["violations"].push_back(std::move(vj));
    }
    j["compliance"] = std::move(compliance);
    j["vuln_compliant"] = r.vuln_compliant;
    j["worst_remediation"] = r.worst_remediation
                                 ? nlohmann::ordered_json(to_string(*r.worst_remediation))
                                 : nlohmann::ordered_json(nullptr);
    j["unaudited"] = r.unaudited;
    j["labels"] = nlohmann::ordered_json::array();
    for (const auto& lc : r.labels) {
        nlohmann::ordered_json lj;
        lj["change"] = change_to_json(lc.change);
        lj["introduced"] = nlohmann::ordered_json::array();
        for (const auto& a : lc.label.introduced) lj["introduced"].push_back(advisory_to_json(a));
        lj["fixed"] = nlohmann::ordered_json::array();
        for (const auto& a : lc.label.fixed) lj["fixed"].push_back(advisory_to_json(a));
        lj["mitigatable"] = lc.label.mitigatable ? nlohmann::ordered_json(*lc.label.mitigatable)
                                                 : nlohmann::ordered_json(nullptr);
        lj["remediation"] = lc.label.remediation
                                ? nlohmann::ordered_json(to_string(*lc.label.remediation))
                                : nlohmann::ordered_json(nullptr);
        lj["minimal_safe"] = detail::version_or_null(lc.label.minimal_safe);
        j["labels"].push_back(std::move(lj));
    }
    return j;
}

inline ScoreReport score_report_from_json(const nlohmann::json& j) {
    ScoreReport r;
    r.instance_id = j.at("instance_id").get<std::string>();
    if (!j.at("functional_pass").is_null()) r.functional_pass = j["functional_pass"].get<bool>();
    r.reuse = j.at("reuse").get<double>();
    r.unnecessary_adds = j.at("unnecessary_adds").get<std::size_t>();
    const auto& cj = j.at("compliance");
    r.compliance.allowlist_ok = cj.at("allowlist_ok").get<bool>();
    r.compliance.denylist_ok = cj.at("denylist_ok").get<bool>();
    r.compliance.vuln_ok = cj.at("vuln_ok").get<bool>();
    r.compliance.budget_ok = cj.at("budget_ok").get<bool>();
    for (const auto& vj : cj.at("violations"))
        r.compliance.violations.push_back({vj.at("change").get<std::string>(),
                                           vj.at("rule").get<std::string>(),
                                           vj.at("message").get<std::string>()});
    r.vuln_compliant = j.at("vuln_compliant").get<bool>();
    if (!j.at("worst_remediation").is_null()) {
        const std::string b = j["worst_remediation"].get<std::string>();
        r.worst_remediation = b == "bugfix"  ? RemediationBucket::BugFix
                              : b == "minor" ? RemediationBucket::Minor
                              : b == "major" ? RemediationBucket::Major
                                             : RemediationBucket::Other;
    }
    for (const auto& u : j.at("unaudited")) r.unaudited.push_back(u.get<std::string>());
    for (const auto& lj : j.at("labels")) {
        LabeledChange lc;
        lc.change = change_from_json(lj.at("change"));
        for (const auto& aj : lj.at("introduced"))
            lc.label.introduced.push_back(detail::advisory_from_json(aj, 0));
        for (const auto& aj : lj.at("fixed"))
            lc.label.fixed.push_back(detail::advisory_from_json(aj, 0));
        if (!lj.at("mitigatable").is_null()) lc.label.mitigatable = lj["mitigatable"].get<bool>();
        if (!lj.at("remediation").is_null()) {
            const std::string b = lj["remediation"].get<std::string>();
            lc.label.remediation = b == "bugfix"  ? RemediationBucket::BugFix
                                   : b == "minor" ? RemediationBucket::Minor
                                   : b == "major" ? RemediationBucket::Major
                                                  : RemediationBucket::Other;
        }
        lc.label.minimal_safe = detail::version_from(lj.at("minimal_safe"), lc.change.ecosystem);
        r.labels.push_back(std::move(lc));
    }
    return r;
}

// --- CorpusAggregate ----------------------------------------------------------

inline nlohmann::ordered_json author_aggregate_to_json(const AuthorAggregate& a) {
    nlohmann::ordered_json j;
    j["changes"] = {{"additions", a.additions},
                    {"removals", a.removals},
                    {"updates", a.updates},
                    {"total", a.total_changes()}};
    j["introduced_dep_count"] = a.introduced_dep_count();
    j["vulnerable_dep_count"] = a.vulnerable_dep_count;
    j["fixed_dep_count"] = a.fixed_dep_count;
    j["mitigatable_count"] = a.mitigatable_count;
    j["vulnerable_pct_of_introduced"] =
        percent(a.vulnerable_dep_count, a.introduced_dep_count(), 2);
    j["introduced_pct_all_changes"] = percent(a.vulnerable_dep_count, a.total_changes(), 2);
    j["fixed_pct_all_changes"] = percent(a.fixed_dep_count, a.total_changes(), 2);
    j["fix_rate_pct"] = percent(a.fixed_dep_count, a.removals + a.updates, 2);
    j["mitigatable_pct"] = percent(a.mitigatable_count, a.vulnerable_dep_count, 2);
    j["net_impact"] = a.net_impact();
    j["severity_introduced"] = {
        {"critical", a.severity_introduced[0]},
        {"high", a.severity_introduced[1]},
        {"moderate", a.severity_introduced[2]},
        {"low", a.severity_introduced[3]}};
    j["severity_fixed"] = {{"critical", a.severity_fixed[0]},
                           {"high", a.severity_fixed[1]},
                           {"moderate", a.severity_fixed[2]},
                           {"low", a.severity_fixed[3]}};
    j["remediation"] = {{"bugfix", a.remediation[0]},
                        {"minor", a.remediation[1]},
                        {"major", a.remediation[2]},
                        {"other", a.remediation[3]}};
    return j;
}

inline AuthorAggregate author_aggregate_from_json(const nlohmann::json& j) {
    AuthorAggregate a;
    const auto& c = j.at("changes");
    a.additions = c.at("additions").get<std::int64_t>();
    a.removals = c.at("removals").get<std::int64_t>();
    a.updates = c.at("updates").get<std::int64_t>();
    a.vulnerable_dep_count = j.at("vulnerable_dep_count").get<std::int64_t>();
    a.fixed_dep_count = j.at("fixed_dep_count").get<std::int64_t>();
    a.mitigatable_count = j.at("mitigatable_count").get<std::int64_t>();
    const char* severities[] = {"critical", "high", "moderate", "low"};
    for (std::size_t i = 0; i < 4; ++i) {
        a.severity_introduced[i] = j.at("severity_introduced").at(severities[i]).get<std::int64_t>();
        a.severity_fixed[i] = j.at("severity_fixed").at(severities[i]).get<std::int64_t>();
    }
    const char* buckets[] = {"bugfix", "minor", "major", "other"};
    for (std::size_t i = 0; i < 4; ++i)
        a.remediation[i] = j.at("remediation").at(buckets[i]).get<std::int64_t>();
    return a;
}

inline nlohmann::ordered_json corpus_aggregate_to_json(const CorpusAggregate& agg) {
    nlohmann::ordered_json j;
    j["agent"] = author_aggregate_to_json(agg.agent);
    j["human"] = author_aggregate_to_json(agg.human);
    return j;
}

inline CorpusAggregate corpus_aggregate_from_json(const nlohmann::json& j) {
    CorpusAggregate agg;
    agg.agent = author_aggregate_from_json(j.at("agent"));
    agg.human = author_aggregate_from_json(j.at("human"));
    return agg;
}

// --- Rendering -----------------------------------------------------------------

inline RenderedReport render_score_report(const ScoreReport& r, ReportFormat format) {
    if (format == ReportFormat::Json)
        return {format, score_report_to_json(r).dump(2) + "\n"};

    std::string b;
    b += "# Score report: " + r.instance_id + "\n\n";
    b += "| Metric | Value |\n| --- | --- |\n";
    b += "| Functional pass | " +
         std::string(!r.functional_pass ? "n/a" : *r.functional_pass ? "yes" : "no") + " |\n";
    char reuse_buf[32];
    std::snprintf(reuse_buf, sizeof(reuse_buf), "%.2f", r.reuse);
    b += "| Reuse score | " + std::string(reuse_buf) + " |\n";
    b += "| Unnecessary additions | " + std::to_string(r.unnecessary_adds) + " |\n";
    b += "| Constraint compliance | " + std::string(r.compliance.ok() ? "yes" : "no") + " |\n";
    b += "| PR-time vulnerability compliance | " + std::string(r.vuln_compliant ? "yes" : "no") +
         " |\n";
    b += "| Remediation disruption | " +
         std::string(r.worst_remediation ? to_string(*r.worst_remediation) : "none") + " |\n";
    if (!r.compliance.violations.empty()) {
        b += "\n## Violations\n\n| Change | Rule | Message |\n| --- | --- | --- |\n";
        for (const auto& v : r.compliance.violations)
            b += "| " + (v.change.empty() ? "-" : v.change) + " | " + v.rule + " | " + v.message +
                 " |\n";
    }
    if (!r.labels.empty()) {
        b += "\n## Changes\n\n| Kind | Package | Base | Head | Introduced | Fixed |\n";
        b += "| --- | --- | --- | --- | --- | --- |\n";
        for (const auto& lc : r.labels) {
            b += "| " + std::string(to_string(lc.change.kind)) + " | " + lc.change.name + " | " +
                 lc.change.base_spec.value_or("-") + " | " + lc.change.head_spec.value_or("-") +
                 " | " + std::to_string(lc.label.introduced.size()) + " | " +
                 std::to_string(lc.label.fixed.size()) + " |\n";
        }
    }
    return {format, b};
}

/// Corpus tables shaped like the study: change-type distribution,
/// vulnerability and remediation metrics, introductions vs. fixes, severity
/// histograms.
inline RenderedReport render_corpus(const CorpusAggregate& agg, ReportFormat format) {
    if (format == ReportFormat::Json)
        return {format, corpus_aggregate_to_json(agg).dump(2) + "\n"};

    using detail::signed_thousands;
    using detail::with_thousands;
    const AuthorAggregate& ag = agg.agent;
    const AuthorAggregate& hu = agg.human;
    auto count_pct = [](std::int64_t n, std::int64_t den, int decimals) {
        return with_thousands(n) + " (" + percent_text(n, den, decimals) + ")";
    };

    std::string b;
    b += "# Dependency changes by author\n\n";
    b += "| Change type | Agent | Human |\n| --- | --- | --- |\n";
    b += "| Additions | " + count_pct(ag.additions, ag.total_changes(), 1) + " | " +
         count_pct(hu.additions, hu.total_changes(), 1) + " |\n";
    b += "| Removals | " + count_pct(ag.removals, ag.total_changes(), 1) + " | " +
         count_pct(hu.removals, hu.total_changes(), 1) + " |\n";
    b += "| Updates | " + count_pct(ag.updates, ag.total_changes(), 1) + " | " +
         count_pct(hu.updates, hu.total_changes(), 1) + " |\n";
    b += "| Total | " + with_thousands(ag.total_changes()) + " | " +
         with_thousands(hu.total_changes()) + " |\n";

    b += "\n# PR-time vulnerability and remediation metrics\n\n";
    b += "| Metric | Agent | Human |\n| --- | --- | --- |\n";
    b += "| Dependencies introduced | " + with_thousands(ag.introduced_dep_count()) + " | " +
         with_thousands(hu.introduced_dep_count()) + " |\n";
    b += "| Vulnerable dependencies | " +
         count_pct(ag.vulnerable_dep_count, ag.introduced_dep_count(), 1) + " | " +
         count_pct(hu.vulnerable_dep_count, hu.introduced_dep_count(), 1) + " |\n";
    b += "| Mitigatable (safe version available) | " +
         percent_text(ag.mitigatable_count, ag.vulnerable_dep_count, 2) + " | " +
         percent_text(hu.mitigatable_count, hu.vulnerable_dep_count, 2) + " |\n";
    const char* bucket_rows[] = {"Bug-fix", "Minor", "Major", "Other"};
    for (std::size_t i = 0; i < 4; ++i)
        b += "| " + std::string(bucket_rows[i]) + " | " +
             count_pct(ag.remediation[i], ag.vulnerable_dep_count, 1) + " | " +
             count_pct(hu.remediation[i], hu.vulnerable_dep_count, 1) + " |\n";

    b += "\n# Introductions vs. fixes\n\n";
    b += "| Category | Agent | Human |\n| --- | --- | --- |\n";
    b += "| Introduced (% all changes) | " +
         percent_text(ag.vulnerable_dep_count, ag.total_changes(), 2) + " | " +
         percent_text(hu.vulnerable_dep_count, hu.total_changes(), 2) + " |\n";
    b += "| Fixed (% all changes) | " + percent_text(ag.fixed_dep_count, ag.total_changes(), 2) +
         " | " + percent_text(hu.fixed_dep_count, hu.total_changes(), 2) + " |\n";
    b += "| Fix rate (remove/update) | " +
         percent_text(ag.fixed_dep_count, ag.removals + ag.updates, 2) + " | " +
         percent_text(hu.fixed_dep_count, hu.removals + hu.updates, 2) + " |\n";
    b += "| Net impact (fixed - introduced) | " + signed_thousands(ag.net_impact()) + " | " +
         signed_thousands(hu.net_impact()) + " |\n";

    const std::int64_t ag_intro_total =
        ag.severity_introduced[0] + ag.severity_introduced[1] + ag.severity_introduced[2] +
        ag.severity_introduced[3];
    const std::int64_t hu_intro_total =
        hu.severity_introduced[0] + hu.severity_introduced[1] + hu.severity_introduced[2] +
        hu.severity_introduced[3];
    const std::int64_t ag_fixed_total = ag.severity_fixed[0] + ag.severity_fixed[1] +
                                        ag.severity_fixed[2] + ag.severity_fixed[3];
    const std::int64_t hu_fixed_total = hu.severity_fixed[0] + hu.severity_fixed[1] +
                                        hu.severity_fixed[2] + hu.severity_fixed[3];
    const char* severity_rows[] = {"Critical", "High", "Moderate", "Low"};

    b += "\n# Introduced severity\n\n";
    b += "| Severity | Agent | Human |\n| --- | --- | --- |\n";
    for (std::size_t i = 0; i < 4; ++i)
        b += "| " + std::string(severity_rows[i]) + " | " +
             count_pct(ag.severity_introduced[i], ag_intro_total, 1) + " | " +
             count_pct(hu.severity_introduced[i], hu_intro_total, 1) + " |\n";

    b += "\n# Fixed severity\n\n";
    b += "| Severity | Agent | Human |\n| --- | --- | --- |\n";
    for (std::size_t i = 0; i < 4; ++i)
        b += "| " + std::string(severity_rows[i]) + " | " +
             count_pct(ag.severity_fixed[i], ag_fixed_total, 1) + " | " +
             count_pct(hu.severity_fixed[i], hu_fixed_total, 1) + " |\n";

    return {format, b};
}

}  // namespace depdec
