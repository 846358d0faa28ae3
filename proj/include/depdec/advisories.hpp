#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "depdec/errors.hpp"
#include "depdec/manifests.hpp"
#include "depdec/time.hpp"
#include "depdec/version.hpp"

namespace depdec {

enum class Severity { Critical, High, Moderate, Low };

inline const char* to_string(Severity s) {
    switch (s) {
        case Severity::Critical: return "critical";
        case Severity::High: return "high";
        case Severity::Moderate: return "moderate";
        case Severity::Low: return "low";
    }
    return "?";
}

inline std::optional<Severity> severity_from_string(std::string_view s) {
    std::string l = detail::lower(s);
    if (l == "critical") return Severity::Critical;
    if (l == "high") return Severity::High;
    if (l == "moderate" || l == "medium") return Severity::Moderate;
    if (l == "low") return Severity::Low;
    return std::nullopt;
}

// One vulnerability record. At least one of cvss_score / severity_label is
// present; first_patched, when present, lies outside the affected ranges.
struct Advisory {
    std::string id;
    Ecosystem ecosystem = Ecosystem::Npm;
    std::string package;  // normalized
    UtcTime published;
    std::optional<double> cvss_score;
    std::optional<Severity> severity_label;
    VersionRange affected;
    std::optional<Version> first_patched;

    bool operator==(const Advisory&) const = default;
};

/// Explicit label wins; otherwise the usual CVSS v3 cut points
/// (>=9.0 Critical, >=7.0 High, >=4.0 Moderate, else Low).
inline Severity severity_of(const Advisory& a) {
    if (a.severity_label) return *a.severity_label;
    const double s = a.cvss_score.value_or(0.0);
    if (s >= 9.0) return Severity::Critical;
    if (s >= 7.0) return Severity::High;
    if (s >= 4.0) return Severity::Moderate;
    return Severity::Low;
}

struct LoadStats {
    std::size_t loaded = 0;
    std::size_t skipped = 0;   // blank lines
    std::size_t replaced = 0;  // duplicate ids collapsed last-wins
};

// Immutable advisory index keyed by (ecosystem, package); per-key lists are
// sorted by (published, id) so PR-time queries return in disclosure order.
class AdvisoryStore {
public:
    using Key = std::pair<Ecosystem, std::string>;

    static AdvisoryStore from_advisories(std::vector<Advisory> advisories) {
        AdvisoryStore store;
        for (auto& a : advisories) store.index_[{a.ecosystem, a.package}].push_back(std::move(a));
        for (auto& [key, list] : store.index_)
            std::sort(list.begin(), list.end(), [](const Advisory& x, const Advisory& y) {
                return std::tie(x.published, x.id) < std::tie(y.published, y.id);
            });
        return store;
    }

    const std::vector<Advisory>* find(Ecosystem eco, std::string_view package) const {
        const auto it = index_.find({eco, std::string(package)});
        return it == index_.end() ? nullptr : &it->second;
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [key, list] : index_) n += list.size();
        return n;
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (const auto& [key, list] : index_)
            for (const auto& a : list) fn(a);
    }

private:
    std::map<Key, std::vector<Advisory>> index_;
};

namespace detail {

inline Advisory advisory_from_json(const nlohmann::json& rec, std::size_t ordinal) {
    auto require_string = [&](const char* field) -> std::string {
        if (!rec.contains(field) || !rec[field].is_string())
            throw SchemaViolation(ordinal, field, "required string field");
        return rec[field].get<std::string>();
    };

    Advisory a;
    a.id = require_string("id");
    const std::string eco_text = require_string("ecosystem");
    const auto eco = ecosystem_from_string(eco_text);
    if (!eco) throw SchemaViolation(ordinal, "ecosystem", "unknown ecosystem: " + eco_text);
    a.ecosystem = *eco;
    a.package = normalize_package_name(a.ecosystem, require_string("package"));
    try {
        a.published = parse_utc(require_string("published"));
    } catch (const Error& e) {
        throw SchemaViolation(ordinal, "published", e.what());
    }

    if (rec.contains("cvss_score") && !rec["cvss_score"].is_null()) {
        if (!rec["cvss_score"].is_number())
            throw SchemaViolation(ordinal, "cvss_score", "not a number");
        a.cvss_score = rec["cvss_score"].get<double>();
        if (*a.cvss_score < 0.0 || *a.cvss_score > 10.0)
            throw SchemaViolation(ordinal, "cvss_score", "outside [0.0, 10.0]");
    }
    if (rec.contains("severity") && !rec["severity"].is_null()) {
        if (!rec["severity"].is_string())
            throw SchemaViolation(ordinal, "severity", "not a string");
        a.severity_label = severity_from_string(rec["severity"].get<std::string>());
        if (!a.severity_label)
            throw SchemaViolation(ordinal, "severity",
                                  "unknown label: " + rec["severity"].get<std::string>());
    }
    if (!a.cvss_score && !a.severity_label)
        throw SchemaViolation(ordinal, "severity", "need cvss_score or severity");

    std::vector<VersionInterval> intervals;
    if (rec.contains("ranges")) {
        if (!rec["ranges"].is_array()) throw SchemaViolation(ordinal, "ranges", "not an array");
        for (const auto& r : rec["ranges"]) {
            if (!r.is_object() || !r.contains("introduced") || !r["introduced"].is_string())
                throw SchemaViolation(ordinal, "ranges", "entry needs string \"introduced\"");
            VersionInterval iv;
            try {
                iv.introduced = parse_version(a.ecosystem, r["introduced"].get<std::string>());
                if (r.contains("fixed") && !r["fixed"].is_null()) {
                    if (!r["fixed"].is_string())
                        throw SchemaViolation(ordinal, "ranges", "\"fixed\" must be string or null");
                    iv.fixed = parse_version(a.ecosystem, r["fixed"].get<std::string>());
                }
            } catch (const UnparseableVersion& e) {
                throw SchemaViolation(ordinal, "ranges", e.what());
            }
            intervals.push_back(std::move(iv));
        }
    }
    a.affected = VersionRange::from_intervals(std::move(intervals));

    if (rec.contains("first_patched") && !rec["first_patched"].is_null()) {
        if (!rec["first_patched"].is_string())
            throw SchemaViolation(ordinal, "first_patched", "not a string");
        try {
            a.first_patched = parse_version(a.ecosystem, rec["first_patched"].get<std::string>());
        } catch (const UnparseableVersion& e) {
            throw SchemaViolation(ordinal, "first_patched", e.what());
        }
        if (range_contains(a.affected, *a.first_patched))
            throw SchemaViolation(ordinal, "first_patched", "lies inside the affected range");
    }
    return a;
}

}  // namespace detail

/// Loads a JSON Lines advisory snapshot. Duplicate ids collapse to the last
/// occurrence. Throws SchemaViolation with the 1-based record ordinal and
/// field name of the first offending record.
inline AdvisoryStore load_snapshot(std::istream& in, LoadStats* stats = nullptr) {
    LoadStats local;
    std::vector<Advisory> advisories;
    std::map<std::string, std::size_t> by_id;  // id -> index in advisories

    std::string line;
    std::size_t ordinal = 0;
    while (std::getline(in, line)) {
        ++ordinal;
        if (detail::trim(line).empty()) {
            ++local.skipped;
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaViolation(ordinal, "record", e.what());
        }
        if (!rec.is_object()) throw SchemaViolation(ordinal, "record", "not a JSON object");
        Advisory a = detail::advisory_from_json(rec, ordinal);
        if (const auto it = by_id.find(a.id); it != by_id.end()) {
            advisories[it->second] = std::move(a);
            ++local.replaced;
        } else {
            by_id.emplace(a.id, advisories.size());
            advisories.push_back(std::move(a));
        }
    }
    local.loaded = advisories.size();
    if (stats) *stats = local;
    return AdvisoryStore::from_advisories(std::move(advisories));
}

inline AdvisoryStore load_snapshot_text(const std::string& text, LoadStats* stats = nullptr) {
    std::istringstream in(text);
    return load_snapshot(in, stats);
}

inline nlohmann::ordered_json advisory_to_json(const Advisory& a) {
    nlohmann::ordered_json rec;
    rec["id"] = a.id;
    rec["ecosystem"] = to_string(a.ecosystem);
    rec["package"] = a.package;
    rec["published"] = format_utc(a.published);
    if (a.cvss_score) rec["cvss_score"] = *a.cvss_score;
    if (a.severity_label) rec["severity"] = to_string(*a.severity_label);
    rec["ranges"] = nlohmann::ordered_json::array();
    for (const auto& iv : a.affected.events) {
        nlohmann::ordered_json r;
        r["introduced"] = iv.introduced.raw;
        r["fixed"] = iv.fixed ? nlohmann::ordered_json(iv.fixed->raw)
                              : nlohmann::ordered_json(nullptr);
        rec["ranges"].push_back(std::move(r));
    }
    if (a.first_patched) rec["first_patched"] = a.first_patched->raw;
    return rec;
}

/// Full snapshot export, one advisory per line, sorted by (ecosystem,
/// package, id); loading the result reproduces the store.
inline std::string export_snapshot(const AdvisoryStore& store) {
    std::vector<const Advisory*> all;
    store.for_each([&](const Advisory& a) { all.push_back(&a); });
    std::sort(all.begin(), all.end(), [](const Advisory* x, const Advisory* y) {
        return std::tie(x->ecosystem, x->package, x->id) < std::tie(y->ecosystem, y->package, y->id);
    });
    std::string out;
    for (const Advisory* a : all) {
        out += advisory_to_json(*a).dump();
        out += '\n';
    }
    return out;
}

/// PR-time query: advisories for (ecosystem, package) published on or before
/// `ref_date` whose affected range contains `version`, in (published, id)
/// order. Unknown packages yield an empty result.
inline std::vector<Advisory> advisories_at(const AdvisoryStore& store, Ecosystem eco,
                                           std::string_view package, const Version& version,
                                           UtcTime ref_date) {
    std::vector<Advisory> out;
    const auto* list = store.find(eco, normalize_package_name(eco, package));
    if (!list) return out;
    for (const Advisory& a : *list) {
        if (a.published > ref_date) break;  // list is sorted by published
        if (range_contains(a.affected, version)) out.push_back(a);
    }
    return out;
}

/// Smallest candidate >= from_version that is advisory-free at ref_date;
/// falls back to the smallest safe candidate overall (a downgrade); absent
/// when every candidate is affected. Candidates are the caller-supplied
/// release list; the store holds no release lists.
inline std::optional<Version> minimal_safe_version(const AdvisoryStore& store, Ecosystem eco,
                                                   std::string_view package,
                                                   const Version& from_version, UtcTime ref_date,
                                                   const std::vector<Version>& candidates) {
    std::optional<Version> best_upgrade, best_any;
    for (const Version& c : candidates) {
        if (!advisories_at(store, eco, package, c, ref_date).empty()) continue;
        if (!best_any || version_less(c, *best_any)) best_any = c;
        if (compare(c, from_version) != Ordering::Less &&
            (!best_upgrade || version_less(c, *best_upgrade)))
            best_upgrade = c;
    }
    return best_upgrade ? best_upgrade : best_any;
}

}  // namespace depdec
