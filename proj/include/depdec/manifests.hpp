#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "depdec/errors.hpp"
#include "depdec/version.hpp"

namespace depdec {

enum class ManifestFormat {
    NpmManifest,
    NpmLockfile,
    PythonRequirements,
    PythonLockfile,
    MavenPom,
    CargoManifest,
    GoMod,
    Gemfile,
    ComposerManifest,
};

inline const char* to_string(ManifestFormat f) {
    switch (f) {
        case ManifestFormat::NpmManifest: return "npm-manifest";
        case ManifestFormat::NpmLockfile: return "npm-lockfile";
        case ManifestFormat::PythonRequirements: return "python-requirements";
        case ManifestFormat::PythonLockfile: return "python-lockfile";
        case ManifestFormat::MavenPom: return "maven-pom";
        case ManifestFormat::CargoManifest: return "cargo-manifest";
        case ManifestFormat::GoMod: return "go-mod";
        case ManifestFormat::Gemfile: return "gemfile";
        case ManifestFormat::ComposerManifest: return "composer-manifest";
    }
    return "?";
}

inline Ecosystem ecosystem_of(ManifestFormat f) {
    switch (f) {
        case ManifestFormat::NpmManifest:
        case ManifestFormat::NpmLockfile: return Ecosystem::Npm;
        case ManifestFormat::PythonRequirements:
        case ManifestFormat::PythonLockfile: return Ecosystem::PyPi;
        case ManifestFormat::MavenPom: return Ecosystem::Maven;
        case ManifestFormat::CargoManifest: return Ecosystem::Cargo;
        case ManifestFormat::GoMod: return Ecosystem::Go;
        case ManifestFormat::Gemfile: return Ecosystem::RubyGems;
        case ManifestFormat::ComposerManifest: return Ecosystem::Packagist;
    }
    return Ecosystem::Npm;
}

inline bool is_lockfile(ManifestFormat f) {
    return f == ManifestFormat::NpmLockfile || f == ManifestFormat::PythonLockfile;
}

enum class Scope { Runtime, Dev, Optional };

inline const char* to_string(Scope s) {
    switch (s) {
        case Scope::Runtime: return "runtime";
        case Scope::Dev: return "dev";
        case Scope::Optional: return "optional";
    }
    return "?";
}

/// Registry-identity name folding: lowercase everywhere; PyPI additionally
/// folds runs of "-_." into "-" (PEP 503).
inline std::string normalize_package_name(Ecosystem eco, std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        if (eco == Ecosystem::PyPi && (c == '-' || c == '_' || c == '.')) {
            if (!out.empty() && out.back() == '-') continue;
            out.push_back('-');
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

// One direct-dependency declaration as written in a manifest.
struct DependencyDecl {
    Ecosystem ecosystem = Ecosystem::Npm;
    std::string name;                  // normalized
    std::string spec;                  // raw specifier text
    std::optional<Version> pinned;     // present when spec denotes exactly one version
    Scope scope = Scope::Runtime;
    std::string source_path;
    std::size_t source_line = 1;

    bool operator==(const DependencyDecl&) const = default;
};

struct ManifestDiagnostics {
    std::size_t skipped = 0;     // comments, editable/VCS/path requirements, platform packages
    std::size_t duplicates = 0;  // repeated (ecosystem, name, scope) keys folded last-wins

    bool operator==(const ManifestDiagnostics&) const = default;
};

struct ManifestSnapshot {
    std::vector<DependencyDecl> decls;
    ManifestFormat format = ManifestFormat::NpmManifest;
    std::string digest;  // content hash of the source text
    ManifestDiagnostics diagnostics;

    bool operator==(const ManifestSnapshot&) const = default;
};

namespace detail {

inline std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string_view strip_bom(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    return text;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        std::string line(text.substr(start, nl - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = nl + 1;
    }
    return lines;
}

// 1-based line of the first occurrence of `needle` at or after byte `from`;
// used to attach source lines to declarations of structured formats.
inline std::size_t line_of(std::string_view text, std::string_view needle, std::size_t& from) {
    const std::size_t pos = text.find(needle, from);
    if (pos == std::string_view::npos) return 1;
    from = pos + needle.size();
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

inline std::optional<Version> try_parse_version(Ecosystem eco, std::string_view text) {
    try {
        return parse_version(eco, text);
    } catch (const UnparseableVersion&) {
        return std::nullopt;
    }
}

/// Extracts an exact pin from a specifier, or nothing when the specifier
/// denotes a range. Cargo bare versions are caret ranges, so only "=x.y.z"
/// pins there; npm needs the full triple; Maven and Go treat plain versions
/// as exact.
inline std::optional<Version> extract_pin(Ecosystem eco, std::string_view spec_raw) {
    const std::string spec = trim(spec_raw);
    if (spec.empty()) return std::nullopt;
    switch (eco) {
        case Ecosystem::Npm: {
            static const std::regex re(
                R"(^=?v?(\d+\.\d+\.\d+(?:-[0-9A-Za-z.-]+)?(?:\+[0-9A-Za-z.-]+)?)$)");
            std::smatch m;
            if (std::regex_match(spec, m, re)) return try_parse_version(eco, m[1].str());
            return std::nullopt;
        }
        case Ecosystem::PyPi: {
            static const std::regex re(R"(^===?\s*v?([0-9][0-9A-Za-z._!+-]*)$)");
            std::smatch m;
            if (std::regex_match(spec, m, re) && m[1].str().find('*') == std::string::npos)
                return try_parse_version(eco, m[1].str());
            return std::nullopt;
        }
        case Ecosystem::Maven: {
            if (spec.find_first_of("[](),*$ ") != std::string::npos) return std::nullopt;
            return try_parse_version(eco, spec);
        }
        case Ecosystem::Cargo: {
            if (spec.front() != '=') return std::nullopt;
            std::string rest = trim(std::string_view(spec).substr(1));
            if (rest.find_first_of("<>=^~*, ") != std::string::npos) return std::nullopt;
            return try_parse_version(eco, rest);
        }
        case Ecosystem::Go: {
            if (spec.find_first_of("<>=^~*, ") != std::string::npos) return std::nullopt;
            return try_parse_version(eco, spec);
        }
        case Ecosystem::RubyGems: {
            static const std::regex re(R"(^(?:=\s*)?v?(\d+(?:\.[0-9A-Za-z]+)*)$)");
            std::smatch m;
            if (std::regex_match(spec, m, re)) return try_parse_version(eco, m[1].str());
            return std::nullopt;
        }
        case Ecosystem::Packagist: {
            static const std::regex re(
                R"(^v?(\d+(?:\.\d+){0,3}(?:-[0-9A-Za-z.]+)?)$)");
            std::smatch m;
            if (std::regex_match(spec, m, re)) return try_parse_version(eco, m[1].str());
            return std::nullopt;
        }
    }
    return std::nullopt;
}

inline void push_decl(std::vector<DependencyDecl>& decls, ManifestDiagnostics& diag,
                      DependencyDecl decl) {
    for (auto& existing : decls) {
        if (existing.ecosystem == decl.ecosystem && existing.name == decl.name &&
            existing.scope == decl.scope) {
            existing = std::move(decl);  // last occurrence wins, position kept
            ++diag.duplicates;
            return;
        }
    }
    decls.push_back(std::move(decl));
}

// --- npm ---------------------------------------------------------------

inline bool npm_spec_skipped(std::string_view spec) {
    for (std::string_view prefix : {"file:", "link:", "git:", "git+", "github:", "workspace:",
                                    "http://", "https://", "npm:"})
        if (spec.substr(0, prefix.size()) == prefix) return true;
    return false;
}

inline void parse_npm_manifest(const std::string& text, const std::string& path,
                               ManifestSnapshot& snap) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedManifest(path, e.what());
    }
    if (!doc.is_object()) throw MalformedManifest(path, "root is not an object");

    const std::pair<const char*, std::optional<Scope>> sections[] = {
        {"dependencies", Scope::Runtime},
        {"devDependencies", Scope::Dev},
        {"optionalDependencies", Scope::Optional},
        {"peerDependencies", std::nullopt},  // constraints, not installs
    };
    for (const auto& [key, scope] : sections) {
        if (!doc.contains(key)) continue;
        const auto& section = doc[key];
        if (!section.is_object())
            throw MalformedManifest(path, std::string(key) + " is not an object");
        std::size_t cursor = text.find("\"" + std::string(key) + "\"");
        if (cursor == std::string::npos) cursor = 0;
        for (const auto& [name, value] : section.items()) {
            if (!value.is_string())
                throw MalformedManifest(path, std::string(key) + "." + name + " is not a string");
            if (!scope || npm_spec_skipped(value.get<std::string>())) {
                ++snap.diagnostics.skipped;
                continue;
            }
            DependencyDecl d;
            d.ecosystem = Ecosystem::Npm;
            d.name = normalize_package_name(d.ecosystem, name);
            d.spec = value.get<std::string>();
            d.pinned = extract_pin(d.ecosystem, d.spec);
            d.scope = *scope;
            d.source_path = path;
            d.source_line = line_of(text, "\"" + name + "\"", cursor);
            push_decl(snap.decls, snap.diagnostics, std::move(d));
        }
    }
}

// --- Python requirements -------------------------------------------------

inline void parse_requirements(const std::string& text, const std::string& path,
                               ManifestSnapshot& snap) {
    const auto raw_lines = split_lines(strip_bom(text));
    std::string logical;
    std::size_t logical_start = 0;
    for (std::size_t i = 0; i < raw_lines.size(); ++i) {
        if (logical.empty()) logical_start = i + 1;
        logical += raw_lines[i];
        if (!logical.empty() && logical.back() == '\\') {
            logical.pop_back();
            if (i + 1 < raw_lines.size()) continue;
        }
        std::string line = logical;
        logical.clear();

        // pip strips comments introduced at line start or after whitespace
        if (std::size_t hash = line.find('#'); hash != std::string::npos) {
            if (hash == 0 || std::isspace(static_cast<unsigned char>(line[hash - 1]))) {
                line = line.substr(0, hash);
                if (trim(line).empty()) {
                    ++snap.diagnostics.skipped;
                    continue;
                }
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '-' || line.find("://") != std::string::npos ||
            line.front() == '.' || line.front() == '/') {
            ++snap.diagnostics.skipped;  // options, editable/VCS/URL/path requirements
            continue;
        }
        if (std::size_t semi = line.find(';'); semi != std::string::npos)
            line = trim(std::string_view(line).substr(0, semi));  // environment markers

        std::size_t name_end = 0;
        while (name_end < line.size() &&
               (std::isalnum(static_cast<unsigned char>(line[name_end])) ||
                line[name_end] == '-' || line[name_end] == '_' || line[name_end] == '.'))
            ++name_end;
        if (name_end == 0) {
            ++snap.diagnostics.skipped;
            continue;
        }
        std::string name = line.substr(0, name_end);
        std::string rest = line.substr(name_end);
        if (std::string trimmed = trim(rest); !trimmed.empty() && trimmed.front() == '[') {
            const std::size_t close = trimmed.find(']');
            if (close == std::string::npos) {
                ++snap.diagnostics.skipped;
                continue;
            }
            rest = trimmed.substr(close + 1);
        }
        std::string spec = trim(rest);
        if (!spec.empty() && spec.front() == '@') {
            ++snap.diagnostics.skipped;  // direct URL reference
            continue;
        }

        DependencyDecl d;
        d.ecosystem = Ecosystem::PyPi;
        d.name = normalize_package_name(d.ecosystem, name);
        d.spec = spec;
        d.pinned = extract_pin(d.ecosystem, d.spec);
        d.scope = Scope::Runtime;
        d.source_path = path;
        d.source_line = logical_start;
        push_decl(snap.decls, snap.diagnostics, std::move(d));
    }
}

// --- Maven POM -----------------------------------------------------------

inline void parse_maven_pom(const std::string& text, const std::string& path,
                            ManifestSnapshot& snap) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(std::string(strip_bom(text)));
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw MalformedManifest(path, e.what());
    }
    auto project = tree.get_child_optional("project");
    if (!project) throw MalformedManifest(path, "no <project> element");

    std::size_t cursor = 0;
    auto deps = project->get_child_optional("dependencies");
    if (!deps) return;
    for (const auto& [key, node] : *deps) {
        if (key != "dependency") continue;
        const std::string group = trim(node.get("groupId", ""));
        const std::string artifact = trim(node.get("artifactId", ""));
        if (group.empty() || artifact.empty()) {
            ++snap.diagnostics.skipped;
            continue;
        }
        const std::string version = trim(node.get("version", ""));
        const std::string scope_text = lower(trim(node.get("scope", "")));
        const bool optional = lower(trim(node.get("optional", ""))) == "true";

        DependencyDecl d;
        d.ecosystem = Ecosystem::Maven;
        d.name = lower(group) + ":" + lower(artifact);
        d.spec = version;
        d.pinned = extract_pin(d.ecosystem, d.spec);
        d.scope = optional ? Scope::Optional : scope_text == "test" ? Scope::Dev : Scope::Runtime;
        d.source_path = path;
        d.source_line = line_of(text, ">" + artifact + "<", cursor);
        push_decl(snap.decls, snap.diagnostics, std::move(d));
    }
}

// --- Cargo.toml (TOML subset: tables, string values, inline tables) -------

struct TomlKv {
    std::string key;
    std::string value;  // raw value text
};

inline std::string toml_strip_comment(const std::string& line) {
    bool in_basic = false, in_literal = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && !in_literal && (i == 0 || line[i - 1] != '\\')) in_basic = !in_basic;
        else if (c == '\'' && !in_basic) in_literal = !in_literal;
        else if (c == '#' && !in_basic && !in_literal) return line.substr(0, i);
    }
    return line;
}

inline std::string toml_unquote(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

// Splits "a = 1, b = { c = 2 }" on top-level commas.
inline std::vector<std::string> toml_split_top(const std::string& s) {
    std::vector<std::string> parts;
    int depth = 0;
    bool in_basic = false, in_literal = false;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '"' && !in_literal && (i == 0 || s[i - 1] != '\\')) in_basic = !in_basic;
        else if (c == '\'' && !in_basic) in_literal = !in_literal;
        if (!in_basic && !in_literal) {
            if (c == '{' || c == '[') ++depth;
            else if (c == '}' || c == ']') --depth;
            else if (c == ',' && depth == 0) {
                parts.push_back(cur);
                cur.clear();
                continue;
            }
        }
        cur.push_back(c);
    }
    if (!trim(cur).empty()) parts.push_back(cur);
    return parts;
}

inline std::vector<TomlKv> toml_inline_table(const std::string& value, const std::string& path) {
    std::string body = trim(value);
    if (body.size() < 2 || body.front() != '{' || body.back() != '}')
        throw MalformedManifest(path, "unterminated inline table: " + value);
    body = body.substr(1, body.size() - 2);
    std::vector<TomlKv> kvs;
    for (const auto& part : toml_split_top(body)) {
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos) continue;
        kvs.push_back({toml_unquote(part.substr(0, eq)), trim(part.substr(eq + 1))});
    }
    return kvs;
}

// Section path like target.'cfg(unix)'.dependencies, split on unquoted dots.
inline std::vector<std::string> toml_section_segments(const std::string& header) {
    std::vector<std::string> segs;
    std::string cur;
    bool in_basic = false, in_literal = false;
    for (char c : header) {
        if (c == '"' && !in_literal) in_basic = !in_basic;
        else if (c == '\'' && !in_basic) in_literal = !in_literal;
        if (c == '.' && !in_basic && !in_literal) {
            segs.push_back(toml_unquote(cur));
            cur.clear();
            continue;
        }
        cur.push_back(c);
    }
    segs.push_back(toml_unquote(cur));
    return segs;
}

inline void parse_cargo_manifest(const std::string& text, const std::string& path,
                                 ManifestSnapshot& snap) {
    const auto lines = split_lines(strip_bom(text));

    struct Pending {
        std::string name;
        Scope scope = Scope::Runtime;
        std::size_t line = 1;
        std::vector<TomlKv> kvs;
        bool active = false;
    };

    auto scope_of_segments = [](const std::vector<std::string>& segs, std::size_t& dep_index,
                                bool& in_workspace) -> std::optional<Scope> {
        in_workspace = !segs.empty() && segs.front() == "workspace";
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i] == "dependencies") {
                dep_index = i;
                return Scope::Runtime;
            }
            if (segs[i] == "dev-dependencies") {
                dep_index = i;
                return Scope::Dev;
            }
            if (segs[i] == "build-dependencies") {
                dep_index = i;
                return Scope::Dev;
            }
        }
        return std::nullopt;
    };

    auto emit = [&](const std::string& decl_name, Scope scope, std::size_t line_no,
                    const std::vector<TomlKv>& kvs, const std::string& bare_version) {
        std::string version = bare_version;
        std::string registry_name = decl_name;
        bool optional = false;
        bool skip = false;
        for (const auto& kv : kvs) {
            if (kv.key == "version") version = toml_unquote(kv.value);
            else if (kv.key == "package") registry_name = toml_unquote(kv.value);
            else if (kv.key == "optional") optional = trim(kv.value) == "true";
            else if (kv.key == "path" || kv.key == "git" || kv.key == "workspace") skip = true;
        }
        if (skip) {
            ++snap.diagnostics.skipped;
            return;
        }
        DependencyDecl d;
        d.ecosystem = Ecosystem::Cargo;
        d.name = normalize_package_name(d.ecosystem, registry_name);
        d.spec = version;
        d.pinned = extract_pin(d.ecosystem, d.spec);
        d.scope = optional ? Scope::Optional : scope;
        d.source_path = path;
        d.source_line = line_no;
        push_decl(snap.decls, snap.diagnostics, std::move(d));
    };

    Pending pending;
    auto flush_pending = [&]() {
        if (pending.active) emit(pending.name, pending.scope, pending.line, pending.kvs, "");
        pending = Pending{};
    };

    std::optional<Scope> section_scope;
    bool section_is_workspace = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = trim(toml_strip_comment(lines[i]));
        if (line.empty()) continue;
        if (line.front() == '[') {
            flush_pending();
            const bool array_table = line.size() > 1 && line[1] == '[';
            std::string header = line.substr(array_table ? 2 : 1);
            while (!header.empty() && (header.back() == ']')) header.pop_back();
            const auto segs = toml_section_segments(header);
            std::size_t dep_index = 0;
            section_scope = scope_of_segments(segs, dep_index, section_is_workspace);
            if (section_scope && dep_index + 1 < segs.size()) {
                // [dependencies.<name>] style single-package table
                pending.active = true;
                pending.name = segs[dep_index + 1];
                pending.scope = *section_scope;
                pending.line = i + 1;
                if (section_is_workspace) {
                    pending.active = false;
                    ++snap.diagnostics.skipped;
                    section_scope = std::nullopt;
                }
                section_scope = std::nullopt;  // keys belong to the pending entry
            } else if (section_scope && section_is_workspace) {
                ++snap.diagnostics.skipped;
                section_scope = std::nullopt;
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = toml_unquote(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (pending.active) {
            pending.kvs.push_back({key, value});
            continue;
        }
        if (!section_scope) continue;
        if (!value.empty() && value.front() == '{') {
            emit(key, *section_scope, i + 1, toml_inline_table(value, path), "");
        } else if (key.size() > 10 && key.substr(key.size() - 10) == ".workspace") {
            ++snap.diagnostics.skipped;  // name.workspace = true
        } else {
            emit(key, *section_scope, i + 1, {}, toml_unquote(value));
        }
    }
    flush_pending();
}

// --- go.mod ----------------------------------------------------------------

inline void parse_go_mod(const std::string& text, const std::string& path,
                         ManifestSnapshot& snap) {
    const auto lines = split_lines(strip_bom(text));
    std::string block;  // active parenthesized directive, if any
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        bool indirect = false;
        if (std::size_t slash = line.find("//"); slash != std::string::npos) {
            indirect = line.find("indirect", slash) != std::string::npos;
            line = line.substr(0, slash);
        }
        line = trim(line);
        if (line.empty()) continue;

        if (!block.empty()) {
            if (line == ")") {
                block.clear();
                continue;
            }
            if (block != "require") continue;
        } else {
            std::istringstream word(line);
            std::string directive;
            word >> directive;
            if (directive == "module" || directive == "go" || directive == "toolchain") continue;
            if (directive == "require" || directive == "exclude" || directive == "replace" ||
                directive == "retract") {
                std::string rest = trim(line.substr(directive.size()));
                if (rest == "(") {
                    block = directive;
                    continue;
                }
                if (directive != "require") {
                    ++snap.diagnostics.skipped;
                    continue;
                }
                line = rest;
            } else {
                continue;
            }
        }

        std::istringstream fields(line);
        std::string module_path, version;
        fields >> module_path >> version;
        if (module_path.empty() || version.empty()) {
            ++snap.diagnostics.skipped;
            continue;
        }
        if (indirect) {
            ++snap.diagnostics.skipped;  // transitive pin, not a direct declaration
            continue;
        }
        DependencyDecl d;
        d.ecosystem = Ecosystem::Go;
        d.name = normalize_package_name(d.ecosystem, module_path);
        d.spec = version;
        d.pinned = extract_pin(d.ecosystem, d.spec);
        d.scope = Scope::Runtime;
        d.source_path = path;
        d.source_line = i + 1;
        push_decl(snap.decls, snap.diagnostics, std::move(d));
    }
}

// --- Gemfile ----------------------------------------------------------------

inline void parse_gemfile(const std::string& text, const std::string& path,
                          ManifestSnapshot& snap) {
    const auto lines = split_lines(strip_bom(text));
    static const std::regex gem_re(R"(^\s*gem\s+['"]([^'"]+)['"]\s*(.*)$)");
    static const std::regex group_re(R"(^\s*group\s+(.+?)\s+do\s*$)");
    static const std::regex sym_re(R"(:([A-Za-z_]+))");
    static const std::regex req_re(R"(^['"]([^'"]+)['"]$)");

    std::vector<bool> dev_stack;  // per open group block: is it a dev/test group
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        if (std::size_t hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        std::smatch m;
        if (std::regex_match(line, m, group_re)) {
            bool dev = false;
            const std::string groups = m[1].str();
            for (auto it = std::sregex_iterator(groups.begin(), groups.end(), sym_re);
                 it != std::sregex_iterator(); ++it) {
                const std::string g = (*it)[1].str();
                if (g == "development" || g == "test") dev = true;
            }
            dev_stack.push_back(dev);
            continue;
        }
        if (trim(line) == "end") {
            if (!dev_stack.empty()) dev_stack.pop_back();
            continue;
        }
        if (!std::regex_match(line, m, gem_re)) continue;

        const std::string name = m[1].str();
        std::vector<std::string> requirements;
        bool skip = false, dev_inline = false;
        for (const auto& arg_raw : toml_split_top(m[2].str())) {
            const std::string arg = trim(arg_raw);
            if (arg.empty()) continue;
            std::smatch rm;
            if (std::regex_match(arg, rm, req_re)) {
                requirements.push_back(rm[1].str());
                continue;
            }
            if (arg.find("git") == 0 || arg.find(":git") == 0 || arg.find("github") == 0 ||
                arg.find(":github") == 0 || arg.find("path") == 0 || arg.find(":path") == 0)
                skip = true;
            if (arg.find("group") == 0 || arg.find(":group") == 0) {
                for (auto it = std::sregex_iterator(arg.begin(), arg.end(), sym_re);
                     it != std::sregex_iterator(); ++it) {
                    const std::string g = (*it)[1].str();
                    if (g == "development" || g == "test") dev_inline = true;
                }
            }
        }
        if (skip) {
            ++snap.diagnostics.skipped;
            continue;
        }
        const bool in_dev_group =
            dev_inline || std::any_of(dev_stack.begin(), dev_stack.end(), [](bool b) { return b; });

        DependencyDecl d;
        d.ecosystem = Ecosystem::RubyGems;
        d.name = normalize_package_name(d.ecosystem, name);
        std::string spec;
        for (const auto& r : requirements) {
            if (!spec.empty()) spec += ", ";
            spec += r;
        }
        d.spec = spec;
        d.pinned = requirements.size() == 1 ? extract_pin(d.ecosystem, requirements[0])
                                            : std::nullopt;
        d.scope = in_dev_group ? Scope::Dev : Scope::Runtime;
        d.source_path = path;
        d.source_line = i + 1;
        push_decl(snap.decls, snap.diagnostics, std::move(d));
    }
}

// --- composer.json -----------------------------------------------------------

inline bool composer_platform_package(std::string_view name) {
    if (name == "php" || name == "hhvm" || name == "composer-plugin-api" ||
        name == "composer-runtime-api")
        return true;
    return name.substr(0, 4) == "ext-" || name.substr(0, 4) == "lib-";
}

inline void parse_composer_manifest(const std::string& text, const std::string& path,
                                    ManifestSnapshot& snap) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedManifest(path, e.what());
    }
    if (!doc.is_object()) throw MalformedManifest(path, "root is not an object");

    const std::pair<const char*, Scope> sections[] = {
        {"require", Scope::Runtime},
        {"require-dev", Scope::Dev},
    };
    for (const auto& [key, scope] : sections) {
        if (!doc.contains(key)) continue;
        std::size_t cursor = text.find("\"" + std::string(key) + "\"");
        if (cursor == std::string::npos) cursor = 0;
        const auto& section = doc[key];
        if (!section.is_object())
            throw MalformedManifest(path, std::string(key) + " is not an object");
        for (const auto& [name, value] : section.items()) {
            if (!value.is_string())
                throw MalformedManifest(path, std::string(key) + "." + name + " is not a string");
            if (composer_platform_package(lower(name))) {
                ++snap.diagnostics.skipped;
                continue;
            }
            DependencyDecl d;
            d.ecosystem = Ecosystem::Packagist;
            d.name = normalize_package_name(d.ecosystem, name);
            d.spec = value.get<std::string>();
            d.pinned = extract_pin(d.ecosystem, d.spec);
            d.scope = scope;
            d.source_path = path;
            d.source_line = line_of(text, "\"" + name + "\"", cursor);
            push_decl(snap.decls, snap.diagnostics, std::move(d));
        }
    }
}

}  // namespace detail

/// Maps known basenames to a manifest format; None for everything else.
inline std::optional<ManifestFormat> detect_format(std::string_view path) {
    std::string base(path);
    if (const std::size_t slash = base.find_last_of("/\\"); slash != std::string::npos)
        base = base.substr(slash + 1);
    base = detail::lower(base);

    if (base == "package.json") return ManifestFormat::NpmManifest;
    if (base == "package-lock.json" || base == "npm-shrinkwrap.json")
        return ManifestFormat::NpmLockfile;
    if (base == "pipfile.lock") return ManifestFormat::PythonLockfile;
    if (base.size() >= 4 && base.substr(base.size() - 4) == ".txt" &&
        base.find("requirements") != std::string::npos)
        return ManifestFormat::PythonRequirements;
    if (base == "pom.xml") return ManifestFormat::MavenPom;
    if (base == "cargo.toml") return ManifestFormat::CargoManifest;
    if (base == "go.mod") return ManifestFormat::GoMod;
    if (base == "gemfile") return ManifestFormat::Gemfile;
    if (base == "composer.json") return ManifestFormat::ComposerManifest;
    return std::nullopt;
}

/// Parses the direct-dependency declarations of a manifest. Throws
/// MalformedManifest on structurally unreadable input; recoverable oddities
/// (path/VCS requirements, comments, platform packages) are skipped and
/// tallied in the snapshot diagnostics.
inline ManifestSnapshot parse_manifest(ManifestFormat format, const std::string& text,
                                       const std::string& path) {
    if (is_lockfile(format))
        throw Error("parse_manifest called with a lockfile format; use parse_lockfile");
    ManifestSnapshot snap;
    snap.format = format;
    snap.digest = detail::fnv1a_hex(text);
    switch (format) {
        case ManifestFormat::NpmManifest: detail::parse_npm_manifest(text, path, snap); break;
        case ManifestFormat::PythonRequirements: detail::parse_requirements(text, path, snap); break;
        case ManifestFormat::MavenPom: detail::parse_maven_pom(text, path, snap); break;
        case ManifestFormat::CargoManifest: detail::parse_cargo_manifest(text, path, snap); break;
        case ManifestFormat::GoMod: detail::parse_go_mod(text, path, snap); break;
        case ManifestFormat::Gemfile: detail::parse_gemfile(text, path, snap); break;
        case ManifestFormat::ComposerManifest:
            detail::parse_composer_manifest(text, path, snap);
            break;
        default: break;
    }
    return snap;
}

/// Exact resolved (name, version) pairs recorded in a lockfile, including
/// transitively locked packages.
inline std::vector<std::pair<std::string, Version>> parse_lockfile(ManifestFormat format,
                                                                   const std::string& text) {
    if (!is_lockfile(format)) throw Error("parse_lockfile called with a manifest format");
    std::vector<std::pair<std::string, Version>> out;

    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(detail::strip_bom(text));
    } catch (const nlohmann::json::exception& e) {
        throw MalformedManifest("", e.what());
    }
    if (!doc.is_object()) throw MalformedManifest("", "root is not an object");

    if (format == ManifestFormat::NpmLockfile) {
        if (doc.contains("packages") && doc["packages"].is_object()) {
            for (const auto& [key, entry] : doc["packages"].items()) {
                if (key.empty() || !entry.is_object()) continue;
                if (entry.value("link", false)) continue;
                std::string name;
                if (const std::size_t pos = key.rfind("node_modules/");
                    pos != std::string::npos) {
                    name = key.substr(pos + 13);
                } else if (entry.contains("name") && entry["name"].is_string()) {
                    name = entry["name"].get<std::string>();
                } else {
                    continue;
                }
                if (!entry.contains("version") || !entry["version"].is_string()) continue;
                if (auto v = detail::try_parse_version(Ecosystem::Npm,
                                                       entry["version"].get<std::string>()))
                    out.emplace_back(normalize_package_name(Ecosystem::Npm, name), *v);
            }
        } else if (doc.contains("dependencies") && doc["dependencies"].is_object()) {
            // v1 shape: nested dependency objects
            const std::function<void(const nlohmann::ordered_json&)> walk =
                [&](const nlohmann::ordered_json& deps) {
                    for (const auto& [name, entry] : deps.items()) {
                        if (!entry.is_object()) continue;
                        if (entry.contains("version") && entry["version"].is_string()) {
                            if (auto v = detail::try_parse_version(
                                    Ecosystem::Npm, entry["version"].get<std::string>()))
                                out.emplace_back(normalize_package_name(Ecosystem::Npm, name), *v);
                        }
                        if (entry.contains("dependencies") && entry["dependencies"].is_object())
                            walk(entry["dependencies"]);
                    }
                };
            walk(doc["dependencies"]);
        }
        return out;
    }

    // Pipfile.lock
    for (const char* section : {"default", "develop"}) {
        if (!doc.contains(section) || !doc[section].is_object()) continue;
        for (const auto& [name, entry] : doc[section].items()) {
            if (!entry.is_object() || !entry.contains("version") ||
                !entry["version"].is_string())
                continue;
            std::string ver = entry["version"].get<std::string>();
            while (!ver.empty() && ver.front() == '=') ver.erase(ver.begin());
            if (auto v = detail::try_parse_version(Ecosystem::PyPi, ver))
                out.emplace_back(normalize_package_name(Ecosystem::PyPi, name), *v);
        }
    }
    return out;
}

}  // namespace depdec
