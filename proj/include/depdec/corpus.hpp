#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "depdec/advisories.hpp"
#include "depdec/changes.hpp"
#include "depdec/errors.hpp"
#include "depdec/harness.hpp"
#include "depdec/scoring.hpp"
#include "depdec/time.hpp"

namespace depdec {

// One pull-request record of the study corpus. The author kind is input
// data, never inferred.
struct PrRecord {
    std::string pr_id;
    std::string repo;
    AuthorKind author_kind = AuthorKind::Agent;
    UtcTime created_at;
    std::vector<PrFile> files;
};

struct CorpusDiagnostics {
    std::size_t records = 0;
    std::size_t skipped_files = 0;       // malformed manifests, skipped with a diagnostic
    std::size_t unaudited_changes = 0;   // changes without a pin to audit
    std::vector<std::string> notes;
};

struct CorpusRunResult {
    CorpusAggregate aggregates;
    CorpusDiagnostics diagnostics;
};

namespace detail {

inline PrRecord pr_record_from_json(const nlohmann::json& rec, std::size_t ordinal,
                                    const std::filesystem::path& base_dir) {
    PrRecord out;
    if (!rec.contains("pr_id") || !rec["pr_id"].is_string())
        throw SchemaViolation(ordinal, "pr_id", "required string field");
    out.pr_id = rec["pr_id"].get<std::string>();
    out.repo = rec.value("repo", "");
    const auto kind = author_kind_from_string(rec.value("author_kind", ""));
    if (!kind) throw SchemaViolation(ordinal, "author_kind", "expected \"agent\" or \"human\"");
    out.author_kind = *kind;
    if (!rec.contains("created_at") || !rec["created_at"].is_string())
        throw SchemaViolation(ordinal, "created_at", "required string field");
    try {
        out.created_at = parse_utc(rec["created_at"].get<std::string>());
    } catch (const Error& e) {
        throw SchemaViolation(ordinal, "created_at", e.what());
    }
    if (!rec.contains("files") || !rec["files"].is_array())
        throw SchemaViolation(ordinal, "files", "required array field");
    for (const auto& f : rec["files"]) {
        PrFile file;
        if (!f.contains("path") || !f["path"].is_string())
            throw SchemaViolation(ordinal, "files", "file entry needs a string \"path\"");
        file.path = f["path"].get<std::string>();
        auto side = [&](const char* inline_key,
                        const char* file_key) -> std::optional<std::string> {
            if (f.contains(inline_key) && f[inline_key].is_string())
                return f[inline_key].get<std::string>();
            if (f.contains(file_key) && f[file_key].is_string())
                return read_text_file(base_dir / f[file_key].get<std::string>());
            return std::nullopt;
        };
        file.base_text = side("base", "base_file");
        file.head_text = side("head", "head_file");
        if (!file.base_text && !file.head_text)
            throw SchemaViolation(ordinal, "files", "file entry has neither side");
        out.files.push_back(std::move(file));
    }
    return out;
}

}  // namespace detail

// Per-package release lists used for mitigatability labeling; raw version
// strings, parsed per the consulting change's ecosystem.
using CandidatesSource = std::map<std::string, std::vector<std::string>>;

/// Classifies and labels one PR record with the record's own creation time
/// as the reference date. Malformed manifest files are skipped with a
/// diagnostic, never aborting the stream.
inline ScoreRecord process_record(const PrRecord& rec, const AdvisoryStore& store,
                                  const CandidatesSource& candidates,
                                  CorpusDiagnostics* diag = nullptr) {
    ScoreRecord out;
    out.author = rec.author_kind;
    for (const auto& file : rec.files) {
        std::vector<DependencyChange> changes;
        try {
            changes = classify_from_pr({file});
        } catch (const MalformedManifest& e) {
            if (diag) {
                ++diag->skipped_files;
                diag->notes.push_back(rec.pr_id + ": skipped " + file.path + ": " + e.what());
            }
            continue;
        }
        for (auto& change : changes) {
            std::optional<std::vector<Version>> parsed;
            if (const auto it = candidates.find(change.name); it != candidates.end()) {
                parsed.emplace();
                for (const auto& v : it->second)
                    parsed->push_back(parse_version(change.ecosystem, v));
            }
            LabeledChange lc{change,
                             label_change(change, store, rec.created_at,
                                          parsed ? &*parsed : nullptr)};
            if (diag && change_unaudited(change)) ++diag->unaudited_changes;
            out.items.push_back(std::move(lc));
        }
    }
    return out;
}

/// Replays a JSON Lines corpus stream (one PrRecord per line) into per-author
/// aggregates. `base_dir` resolves externalized base_file/head_file
/// references.
inline CorpusRunResult run_corpus(std::istream& in, const std::filesystem::path& base_dir,
                                  const AdvisoryStore& store, const CandidatesSource& candidates) {
    CorpusRunResult result;
    std::string line;
    std::size_t ordinal = 0;
    while (std::getline(in, line)) {
        ++ordinal;
        if (detail::trim(line).empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaViolation(ordinal, "record", e.what());
        }
        const PrRecord pr = detail::pr_record_from_json(rec, ordinal, base_dir);
        ++result.diagnostics.records;
        result.aggregates.add(process_record(pr, store, candidates, &result.diagnostics));
    }
    return result;
}

inline CorpusRunResult run_corpus_file(const std::filesystem::path& corpus_path,
                                       const AdvisoryStore& store,
                                       const CandidatesSource& candidates) {
    std::ifstream in(corpus_path, std::ios::binary);
    if (!in) throw Error("cannot read " + corpus_path.string());
    return run_corpus(in, corpus_path.parent_path(), store, candidates);
}

}  // namespace depdec
