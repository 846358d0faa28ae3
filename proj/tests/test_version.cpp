#include <algorithm>
#include <fstream>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "depdec/version.hpp"

using namespace depdec;

namespace {

nlohmann::json load_fixture(const std::string& name) {
    std::ifstream in(std::string(DEPDEC_FIXTURE_DIR) + "/" + name);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

Version v(std::uint64_t major, std::uint64_t minor, std::uint64_t patch,
          std::vector<std::string> pre = {}, Ecosystem eco = Ecosystem::Npm) {
    Version out;
    out.ecosystem = eco;
    out.major = major;
    out.minor = minor;
    out.patch = patch;
    out.prerelease = std::move(pre);
    return out;
}

std::vector<Version> random_versions(std::size_t n, std::mt19937& rng) {
    std::uniform_int_distribution<std::uint64_t> num(0, 4);
    std::uniform_int_distribution<int> pre_kind(0, 4);
    std::vector<Version> out;
    for (std::size_t i = 0; i < n; ++i) {
        Version x = v(num(rng), num(rng), num(rng));
        switch (pre_kind(rng)) {
            case 0: x.prerelease = {"alpha"}; break;
            case 1: x.prerelease = {"rc", std::to_string(num(rng))}; break;
            case 2: x.prerelease = {std::to_string(num(rng))}; break;
            default: break;  // released
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace

TEST_CASE("parse_version canonical forms") {
    const Version a = parse_version(Ecosystem::Npm, "1.2.3");
    CHECK(a.major == 1);
    CHECK(a.minor == 2);
    CHECK(a.patch == 3);
    CHECK(a.prerelease.empty());
    CHECK(a.raw == "1.2.3");

    const Version b = parse_version(Ecosystem::Npm, "v2.0.0-rc.1");
    CHECK(b.major == 2);
    CHECK(b.minor == 0);
    CHECK(b.patch == 0);
    CHECK(b.prerelease == std::vector<std::string>{"rc", "1"});

    const Version c = parse_version(Ecosystem::PyPi, "1.2");
    CHECK(c.major == 1);
    CHECK(c.minor == 2);
    CHECK(c.patch == 0);
}

TEST_CASE("parse_version rejects text without a leading numeric component") {
    CHECK_THROWS_AS(parse_version(Ecosystem::Npm, ""), UnparseableVersion);
    CHECK_THROWS_AS(parse_version(Ecosystem::Npm, "abc"), UnparseableVersion);
    CHECK_THROWS_AS(parse_version(Ecosystem::Npm, "v"), UnparseableVersion);
    CHECK_THROWS_AS(parse_version(Ecosystem::Npm, "-1.2.3"), UnparseableVersion);
    CHECK_THROWS_AS(parse_version(Ecosystem::PyPi, "  "), UnparseableVersion);
}

TEST_CASE("parse_version agrees with the hand-normalized reference corpus") {
    const auto corpus = load_fixture("version_corpus.json");
    std::size_t checked = 0;
    for (const auto& [eco_name, block] : corpus.items()) {
        const auto eco = ecosystem_from_string(eco_name);
        REQUIRE(eco.has_value());
        for (const auto& c : block["cases"]) {
            INFO(eco_name << " " << c["in"].get<std::string>());
            const Version got = parse_version(*eco, c["in"].get<std::string>());
            CHECK(got.major == c["v"][0].get<std::uint64_t>());
            CHECK(got.minor == c["v"][1].get<std::uint64_t>());
            CHECK(got.patch == c["v"][2].get<std::uint64_t>());
            CHECK(got.prerelease == c["pre"].get<std::vector<std::string>>());
            // parsing the preserved raw text reproduces the value
            CHECK(parse_version(*eco, got.raw) == got);
            ++checked;
        }
    }
    CHECK(checked >= 7 * 50);
}

TEST_CASE("compare follows the sorted reference sequences") {
    const auto corpus = load_fixture("version_corpus.json");
    std::mt19937 rng(20240601);
    for (const auto& [eco_name, block] : corpus.items()) {
        const auto eco = ecosystem_from_string(eco_name);
        std::vector<Version> expected;
        for (const auto& s : block["sorted"]) expected.push_back(parse_version(*eco, s.get<std::string>()));
        std::vector<Version> shuffled = expected;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::sort(shuffled.begin(), shuffled.end(), version_less);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            INFO(eco_name << " position " << i);
            CHECK(compare(shuffled[i], expected[i]) == Ordering::Equal);
        }
    }
}

TEST_CASE("compare basics") {
    CHECK(compare(v(1, 2, 3), v(1, 2, 3)) == Ordering::Equal);
    CHECK(compare(v(1, 2, 3), v(1, 10, 0)) == Ordering::Less);  // numeric, not textual
    CHECK(compare(parse_version(Ecosystem::Npm, "2.0.0-rc.1"),
                  parse_version(Ecosystem::Npm, "2.0.0")) == Ordering::Less);
    CHECK(compare(v(1, 0, 0, {"2"}), v(1, 0, 0, {"11"})) == Ordering::Less);
    CHECK(compare(v(1, 0, 0, {"alpha"}), v(1, 0, 0, {"alpha", "1"})) == Ordering::Less);

    Version pypi = v(1, 0, 0, {}, Ecosystem::PyPi);
    CHECK_THROWS_AS(compare(v(1, 0, 0), pypi), EcosystemMismatch);
}

TEST_CASE("compare is a strict total order on random versions") {
    std::mt19937 rng(7);
    const auto versions = random_versions(200, rng);
    for (std::size_t i = 0; i < versions.size(); ++i) {
        for (std::size_t j = 0; j < versions.size(); ++j) {
            const Ordering ab = compare(versions[i], versions[j]);
            const Ordering ba = compare(versions[j], versions[i]);
            // antisymmetry + totality: orderings are mirror images
            if (ab == Ordering::Equal) CHECK(ba == Ordering::Equal);
            if (ab == Ordering::Less) CHECK(ba == Ordering::Greater);
            if (ab == Ordering::Greater) CHECK(ba == Ordering::Less);
        }
    }
    // transitivity via sort + is_sorted under the comparator
    auto sorted = versions;
    std::sort(sorted.begin(), sorted.end(), version_less);
    CHECK(std::is_sorted(sorted.begin(), sorted.end(), version_less));
    for (std::size_t i = 0; i + 2 < sorted.size(); i += 3) {
        if (version_less(sorted[i], sorted[i + 1]) && version_less(sorted[i + 1], sorted[i + 2]))
            CHECK(version_less(sorted[i], sorted[i + 2]));
    }
}

TEST_CASE("range_contains spec examples") {
    const auto mk = [](const char* intro, const char* fixed) {
        VersionInterval iv;
        iv.introduced = parse_version(Ecosystem::Npm, intro);
        if (fixed) iv.fixed = parse_version(Ecosystem::Npm, fixed);
        return iv;
    };
    const VersionRange r1 = VersionRange::from_intervals({mk("1.0.0", "2.0.0")});
    CHECK(range_contains(r1, parse_version(Ecosystem::Npm, "1.5.0")));
    CHECK(!range_contains(r1, parse_version(Ecosystem::Npm, "2.0.0")));  // exclusive upper
    CHECK(range_contains(r1, parse_version(Ecosystem::Npm, "1.0.0")));   // inclusive lower

    const VersionRange r2 = VersionRange::from_intervals({mk("0.0.0", nullptr)});
    CHECK(range_contains(r2, parse_version(Ecosystem::Npm, "9.9.9")));
}

TEST_CASE("range_contains agrees with an index-arithmetic oracle") {
    // Dense grid of released triples; intervals are picked from grid points,
    // so membership is integer interval arithmetic on grid indices.
    std::vector<Version> grid;
    for (std::uint64_t major = 0; major < 4; ++major)
        for (std::uint64_t minor = 0; minor < 4; ++minor)
            for (std::uint64_t patch = 0; patch < 4; ++patch) grid.push_back(v(major, minor, patch));

    std::mt19937 rng(12345);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    std::uniform_int_distribution<int> unbounded(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        // one or two intervals over grid indices
        std::vector<std::pair<std::size_t, std::optional<std::size_t>>> spans;
        const int n_intervals = 1 + (trial % 2);
        for (int k = 0; k < n_intervals; ++k) {
            std::size_t lo = pick(rng), hi = pick(rng);
            if (lo > hi) std::swap(lo, hi);
            if (unbounded(rng) == 0) spans.emplace_back(lo, std::nullopt);
            else spans.emplace_back(lo, hi);
        }
        std::vector<VersionInterval> intervals;
        for (const auto& [lo, hi] : spans) {
            VersionInterval iv;
            iv.introduced = grid[lo];
            if (hi) iv.fixed = grid[*hi];
            intervals.push_back(iv);
        }
        const VersionRange range = VersionRange::from_intervals(intervals);

        const std::size_t qi = pick(rng);
        bool oracle = false;
        for (const auto& [lo, hi] : spans)
            if (qi >= lo && (!hi || qi < *hi)) oracle = true;
        CHECK(range_contains(range, grid[qi]) == oracle);
    }
}

TEST_CASE("remediation_bucket table shapes") {
    CHECK(remediation_bucket(v(1, 2, 3), v(1, 2, 9)) == RemediationBucket::BugFix);
    CHECK(remediation_bucket(v(1, 2, 3), v(1, 5, 0)) == RemediationBucket::Minor);
    CHECK(remediation_bucket(v(1, 2, 3), v(2, 0, 0)) == RemediationBucket::Major);
    CHECK(remediation_bucket(v(1, 2, 3), std::nullopt) == RemediationBucket::Other);
}

TEST_CASE("remediation_bucket edge rules") {
    CHECK(remediation_bucket(v(1, 2, 3), v(1, 2, 3)) == RemediationBucket::Other);  // equal
    CHECK(remediation_bucket(v(1, 2, 3), v(1, 2, 1)) == RemediationBucket::Other);  // downgrade
    CHECK(remediation_bucket(v(2, 0, 0), v(1, 9, 9)) == RemediationBucket::Other);  // major downgrade
    CHECK(remediation_bucket(v(1, 0, 0, {"rc", "1"}), v(1, 0, 1)) == RemediationBucket::Other);
    CHECK(remediation_bucket(v(1, 0, 0), v(1, 0, 1, {"rc", "1"})) == RemediationBucket::Other);
}

TEST_CASE("remediation_bucket partitions every pair into exactly one bucket") {
    std::mt19937 rng(99);
    const auto versions = random_versions(80, rng);
    for (const auto& vulnerable : versions) {
        for (const auto& patched : versions) {
            const RemediationBucket bucket = remediation_bucket(vulnerable, patched);
            switch (bucket) {
                case RemediationBucket::Major:
                    CHECK(patched.major != vulnerable.major);
                    CHECK(version_less(vulnerable, patched));
                    break;
                case RemediationBucket::Minor:
                    CHECK(patched.major == vulnerable.major);
                    CHECK(patched.minor != vulnerable.minor);
                    break;
                case RemediationBucket::BugFix:
                    CHECK(patched.major == vulnerable.major);
                    CHECK(patched.minor == vulnerable.minor);
                    CHECK(patched.patch != vulnerable.patch);
                    break;
                case RemediationBucket::Other: break;
            }
        }
        CHECK(remediation_bucket(vulnerable, std::nullopt) == RemediationBucket::Other);
    }
}

TEST_CASE("overlapping intervals are merged, touching ones kept") {
    const auto mk = [](const char* intro, const char* fixed) {
        VersionInterval iv;
        iv.introduced = parse_version(Ecosystem::Npm, intro);
        if (fixed) iv.fixed = parse_version(Ecosystem::Npm, fixed);
        return iv;
    };
    const auto overlapping =
        VersionRange::from_intervals({mk("1.0.0", "2.0.0"), mk("1.5.0", "3.0.0")});
    CHECK(overlapping.events.size() == 1);
    CHECK(range_contains(overlapping, parse_version(Ecosystem::Npm, "2.5.0")));

    const auto touching = VersionRange::from_intervals({mk("1.0.0", "2.0.0"), mk("2.0.0", "3.0.0")});
    CHECK(touching.events.size() == 2);
    CHECK(!range_contains(touching, parse_version(Ecosystem::Npm, "3.0.0")));
    CHECK(range_contains(touching, parse_version(Ecosystem::Npm, "2.0.0")));
}
