#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "depdec/errors.hpp"

namespace depdec {

enum class Ecosystem { Npm, PyPi, Maven, Cargo, Go, RubyGems, Packagist };

inline const char* to_string(Ecosystem e) {
    switch (e) {
        case Ecosystem::Npm: return "npm";
        case Ecosystem::PyPi: return "pypi";
        case Ecosystem::Maven: return "maven";
        case Ecosystem::Cargo: return "cargo";
        case Ecosystem::Go: return "go";
        case Ecosystem::RubyGems: return "rubygems";
        case Ecosystem::Packagist: return "packagist";
    }
    return "?";
}

inline std::optional<Ecosystem> ecosystem_from_string(std::string_view s) {
    if (s == "npm") return Ecosystem::Npm;
    if (s == "pypi") return Ecosystem::PyPi;
    if (s == "maven") return Ecosystem::Maven;
    if (s == "cargo" || s == "crates.io") return Ecosystem::Cargo;
    if (s == "go") return Ecosystem::Go;
    if (s == "rubygems" || s == "gem") return Ecosystem::RubyGems;
    if (s == "packagist" || s == "composer") return Ecosystem::Packagist;
    return std::nullopt;
}

// Normalized version value. All ecosystems are folded into the
// (major, minor, patch, prerelease) model; `raw` keeps the original text so
// parsing it again reproduces the same value.
struct Version {
    Ecosystem ecosystem = Ecosystem::Npm;
    std::uint64_t major = 0;
    std::uint64_t minor = 0;
    std::uint64_t patch = 0;
    std::vector<std::string> prerelease;
    std::string raw;

    bool operator==(const Version&) const = default;
};

enum class Ordering { Less, Equal, Greater };

enum class RemediationBucket { BugFix, Minor, Major, Other };

inline const char* to_string(RemediationBucket b) {
    switch (b) {
        case RemediationBucket::BugFix: return "bugfix";
        case RemediationBucket::Minor: return "minor";
        case RemediationBucket::Major: return "major";
        case RemediationBucket::Other: return "other";
    }
    return "?";
}

namespace detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// Arbitrary-precision numeric compare: strip leading zeros, then length+lex.
inline int compare_numeric_tag(std::string_view a, std::string_view b) {
    a.remove_prefix(std::min(a.find_first_not_of('0'), a.size()));
    b.remove_prefix(std::min(b.find_first_not_of('0'), b.size()));
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    const int c = a.compare(b);
    return c < 0 ? -1 : c > 0 ? 1 : 0;
}

inline int compare_prerelease(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    // Empty prerelease ranks above any non-empty one.
    if (a.empty() && b.empty()) return 0;
    if (a.empty()) return 1;
    if (b.empty()) return -1;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        int c;
        if (all_digits(a[i]) && all_digits(b[i])) {
            c = compare_numeric_tag(a[i], b[i]);
        } else {
            c = a[i].compare(b[i]);
            c = c < 0 ? -1 : c > 0 ? 1 : 0;
        }
        if (c != 0) return c;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

// Ecosystems whose registries follow strict semver syntax; the rest get the
// lenient tokenizer (qualifier separators beyond '-', attached digits, case folding).
inline bool strict_semver(Ecosystem e) {
    return e == Ecosystem::Npm || e == Ecosystem::Cargo || e == Ecosystem::Go;
}

inline std::vector<std::string> split_tags_strict(std::string_view s) {
    std::vector<std::string> tags;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t dot = s.find('.', start);
        if (dot == std::string_view::npos) {
            if (start < s.size()) tags.emplace_back(s.substr(start));
            break;
        }
        if (dot > start) tags.emplace_back(s.substr(start, dot - start));
        start = dot + 1;
    }
    return tags;
}

inline std::vector<std::string> split_tags_loose(std::string_view s) {
    // Split on '.', '-', '_' and at letter/digit boundaries; fold to lowercase.
    std::vector<std::string> tags;
    std::string cur;
    auto flush = [&]() {
        if (!cur.empty()) tags.push_back(cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '.' || c == '-' || c == '_') {
            flush();
            continue;
        }
        if (!cur.empty()) {
            const bool was_digit = std::isdigit(static_cast<unsigned char>(cur.back()));
            const bool is_digit = std::isdigit(static_cast<unsigned char>(c));
            if (was_digit != is_digit) flush();
        }
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    flush();
    return tags;
}

}  // namespace detail

/// Parses `text` into the normalized version model. Leading "v", build
/// metadata after "+" and ecosystem decorations (PEP 440 epochs, qualifier
/// separators) are stripped; extra numeric components beyond the third are
/// dropped best-effort. Throws UnparseableVersion when no leading numeric
/// component remains.
inline Version parse_version(Ecosystem ecosystem, std::string_view text) {
    Version v;
    v.ecosystem = ecosystem;
    v.raw = std::string(text);

    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);

    if (ecosystem == Ecosystem::PyPi) {
        std::size_t i = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i > 0 && i < s.size() && s[i] == '!') s.remove_prefix(i + 1);
    }
    if (s.size() >= 2 && (s[0] == 'v' || s[0] == 'V') &&
        std::isdigit(static_cast<unsigned char>(s[1])))
        s.remove_prefix(1);
    if (const std::size_t plus = s.find('+'); plus != std::string_view::npos)
        s = s.substr(0, plus);

    if (s.empty() || !std::isdigit(static_cast<unsigned char>(s.front())))
        throw UnparseableVersion(std::string(text));

    std::uint64_t parts[3] = {0, 0, 0};
    int npart = 0;
    std::size_t pos = 0;
    while (npart < 3 && pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        std::uint64_t value = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            value = value * 10 + static_cast<std::uint64_t>(s[pos] - '0');
            ++pos;
        }
        parts[npart++] = value;
        if (pos + 1 < s.size() && s[pos] == '.' &&
            std::isdigit(static_cast<unsigned char>(s[pos + 1])) && npart < 3) {
            ++pos;
        } else {
            break;
        }
    }
    // Drop any further numeric dotted components ("1.2.3.4" orders as 1.2.3).
    while (pos + 1 < s.size() && s[pos] == '.' &&
           std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    v.major = parts[0];
    v.minor = parts[1];
    v.patch = parts[2];

    std::string_view rest = s.substr(pos);
    if (!rest.empty()) {
        if (detail::strict_semver(ecosystem)) {
            if (rest.front() == '-')
                rest.remove_prefix(1);
            else if (rest.front() == '.')
                rest.remove_prefix(1);
            v.prerelease = detail::split_tags_strict(rest);
        } else {
            if (rest.front() == '-' || rest.front() == '.' || rest.front() == '_' ||
                rest.front() == '~')
                rest.remove_prefix(1);
            v.prerelease = detail::split_tags_loose(rest);
        }
    }
    return v;
}

/// Total order within one ecosystem: (major, minor, patch) then the
/// prerelease rule. Throws EcosystemMismatch across ecosystems.
inline Ordering compare(const Version& a, const Version& b) {
    if (a.ecosystem != b.ecosystem) throw EcosystemMismatch();
    if (a.major != b.major) return a.major < b.major ? Ordering::Less : Ordering::Greater;
    if (a.minor != b.minor) return a.minor < b.minor ? Ordering::Less : Ordering::Greater;
    if (a.patch != b.patch) return a.patch < b.patch ? Ordering::Less : Ordering::Greater;
    const int c = detail::compare_prerelease(a.prerelease, b.prerelease);
    return c < 0 ? Ordering::Less : c > 0 ? Ordering::Greater : Ordering::Equal;
}

inline bool version_less(const Version& a, const Version& b) {
    return compare(a, b) == Ordering::Less;
}

// Half-open affected interval: introduced inclusive, fixed exclusive
// (absent fixed = unbounded above).
struct VersionInterval {
    Version introduced;
    std::optional<Version> fixed;

    bool operator==(const VersionInterval&) const = default;
};

// Sorted, non-overlapping interval set.
struct VersionRange {
    std::vector<VersionInterval> events;

    bool operator==(const VersionRange&) const = default;

    static VersionRange from_intervals(std::vector<VersionInterval> intervals) {
        std::sort(intervals.begin(), intervals.end(),
                  [](const VersionInterval& a, const VersionInterval& b) {
                      return version_less(a.introduced, b.introduced);
                  });
        // Merge true overlaps; touching intervals stay separate.
        std::vector<VersionInterval> merged;
        for (auto& iv : intervals) {
            if (!merged.empty()) {
                VersionInterval& prev = merged.back();
                const bool prev_unbounded = !prev.fixed.has_value();
                if (prev_unbounded || version_less(iv.introduced, *prev.fixed)) {
                    if (!prev_unbounded &&
                        (!iv.fixed || version_less(*prev.fixed, *iv.fixed)))
                        prev.fixed = iv.fixed;
                    continue;
                }
            }
            merged.push_back(std::move(iv));
        }
        return VersionRange{std::move(merged)};
    }
};

/// True iff some interval has introduced <= v and (fixed absent or v < fixed).
inline bool range_contains(const VersionRange& range, const Version& v) {
    for (const auto& iv : range.events) {
        if (compare(iv.introduced, v) == Ordering::Greater) continue;
        if (!iv.fixed || version_less(v, *iv.fixed)) return true;
    }
    return false;
}

/// Classifies the upgrade step from a vulnerable to a patched release.
/// Downgrades, equal versions, prerelease-involved pairs and an absent patch
/// all land in Other.
inline RemediationBucket remediation_bucket(const Version& vulnerable,
                                            const std::optional<Version>& patched) {
    if (!patched) return RemediationBucket::Other;
    if (!vulnerable.prerelease.empty() || !patched->prerelease.empty())
        return RemediationBucket::Other;
    const auto vt = std::tuple(vulnerable.major, vulnerable.minor, vulnerable.patch);
    const auto pt = std::tuple(patched->major, patched->minor, patched->patch);
    if (pt <= vt) return RemediationBucket::Other;
    if (patched->major != vulnerable.major) return RemediationBucket::Major;
    if (patched->minor != vulnerable.minor) return RemediationBucket::Minor;
    return RemediationBucket::BugFix;
}

}  // namespace depdec
