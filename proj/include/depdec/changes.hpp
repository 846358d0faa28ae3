#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "depdec/errors.hpp"
#include "depdec/manifests.hpp"
#include "depdec/version.hpp"

namespace depdec {

enum class ChangeKind { Addition, Removal, Update };

inline const char* to_string(ChangeKind k) {
    switch (k) {
        case ChangeKind::Addition: return "addition";
        case ChangeKind::Removal: return "removal";
        case ChangeKind::Update: return "update";
    }
    return "?";
}

// One classified manifest edit, the unit of "dependency decision".
struct DependencyChange {
    ChangeKind kind = ChangeKind::Addition;
    Ecosystem ecosystem = Ecosystem::Npm;
    std::string name;
    std::optional<Version> base_version;
    std::optional<std::string> base_spec;
    std::optional<Version> head_version;
    std::optional<std::string> head_spec;
    Scope scope = Scope::Runtime;
    std::string source_path;

    bool operator==(const DependencyChange&) const = default;
};

/// Diffs two snapshots of the same format on the (ecosystem, name, scope)
/// key: head-only keys are Additions, base-only Removals, differing specs
/// Updates. Identical specs produce no change. Output sorted by (name, scope).
inline std::vector<DependencyChange> classify_changes(const ManifestSnapshot& base,
                                                      const ManifestSnapshot& head) {
    if (base.format != head.format) throw FormatMismatch();

    using Key = std::tuple<Ecosystem, std::string, Scope>;
    std::map<Key, const DependencyDecl*> base_map, head_map;
    for (const auto& d : base.decls) base_map[{d.ecosystem, d.name, d.scope}] = &d;
    for (const auto& d : head.decls) head_map[{d.ecosystem, d.name, d.scope}] = &d;

    std::vector<DependencyChange> out;
    for (const auto& [key, decl] : head_map) {
        const auto it = base_map.find(key);
        if (it == base_map.end()) {
            DependencyChange c;
            c.kind = ChangeKind::Addition;
            c.ecosystem = decl->ecosystem;
            c.name = decl->name;
            c.head_version = decl->pinned;
            c.head_spec = decl->spec;
            c.scope = decl->scope;
            c.source_path = decl->source_path;
            out.push_back(std::move(c));
        } else if (it->second->spec != decl->spec) {
            DependencyChange c;
            c.kind = ChangeKind::Update;
            c.ecosystem = decl->ecosystem;
            c.name = decl->name;
            c.base_version = it->second->pinned;
            c.base_spec = it->second->spec;
            c.head_version = decl->pinned;
            c.head_spec = decl->spec;
            c.scope = decl->scope;
            c.source_path = decl->source_path;
            out.push_back(std::move(c));
        }
    }
    for (const auto& [key, decl] : base_map) {
        if (head_map.count(key)) continue;
        DependencyChange c;
        c.kind = ChangeKind::Removal;
        c.ecosystem = decl->ecosystem;
        c.name = decl->name;
        c.base_version = decl->pinned;
        c.base_spec = decl->spec;
        c.scope = decl->scope;
        c.source_path = decl->source_path;
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const DependencyChange& a, const DependencyChange& b) {
        return std::tie(a.name, a.scope, a.kind) < std::tie(b.name, b.scope, b.kind);
    });
    return out;
}

struct PrFile {
    std::string path;
    std::optional<std::string> base_text;
    std::optional<std::string> head_text;
};

/// Classifies every manifest file touched by a PR. A missing side is an
/// empty snapshot; non-manifest files and lockfiles are ignored (lockfiles
/// feed availability, not change counts). MalformedManifest is rethrown
/// tagged with the offending path.
inline std::vector<DependencyChange> classify_from_pr(const std::vector<PrFile>& files) {
    std::vector<DependencyChange> out;
    for (const auto& file : files) {
        const auto format = detect_format(file.path);
        if (!format || is_lockfile(*format)) continue;
        try {
            ManifestSnapshot base = file.base_text
                                        ? parse_manifest(*format, *file.base_text, file.path)
                                        : ManifestSnapshot{{}, *format, "", {}};
            ManifestSnapshot head = file.head_text
                                        ? parse_manifest(*format, *file.head_text, file.path)
                                        : ManifestSnapshot{{}, *format, "", {}};
            auto changes = classify_changes(base, head);
            out.insert(out.end(), std::make_move_iterator(changes.begin()),
                       std::make_move_iterator(changes.end()));
        } catch (const MalformedManifest& e) {
            if (e.path.empty()) throw MalformedManifest(file.path, e.what());
            throw;
        }
    }
    return out;
}

}  // namespace depdec
