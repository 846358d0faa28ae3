#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "depdec/advisories.hpp"
#include "depdec/changes.hpp"
#include "depdec/errors.hpp"
#include "depdec/manifests.hpp"
#include "depdec/patch.hpp"
#include "depdec/policy.hpp"
#include "depdec/scoring.hpp"
#include "depdec/time.hpp"

namespace depdec {

enum class TaskFamily { ReuseAvailable, JustifiedAdd, AvoidUnnecessary, PolicySafeSelection };

inline const char* to_string(TaskFamily f) {
    switch (f) {
        case TaskFamily::ReuseAvailable: return "reuse_available";
        case TaskFamily::JustifiedAdd: return "justified_add";
        case TaskFamily::AvoidUnnecessary: return "avoid_unnecessary";
        case TaskFamily::PolicySafeSelection: return "policy_safe_selection";
    }
    return "?";
}

inline std::optional<TaskFamily> task_family_from_string(std::string_view s) {
    if (s == "reuse_available") return TaskFamily::ReuseAvailable;
    if (s == "justified_add") return TaskFamily::JustifiedAdd;
    if (s == "avoid_unnecessary") return TaskFamily::AvoidUnnecessary;
    if (s == "policy_safe_selection") return TaskFamily::PolicySafeSelection;
    return std::nullopt;
}

// One benchmark instance as loaded from its config file. All paths are
// resolved against the config file's directory.
struct TaskInstance {
    std::string id;
    TaskFamily family = TaskFamily::ReuseAvailable;
    std::filesystem::path snapshot_dir;
    UtcTime reference_date;
    AvailabilityDefinition availability_definition = AvailabilityDefinition::InManifest;
    std::optional<PolicyEnvelope> policy;
    std::vector<std::set<std::string>> required_capabilities;
    std::set<std::string> justified_names;
    std::optional<std::string> test_command;
    std::optional<std::filesystem::path> evidence_path;
    EvidenceSource evidence_source = EvidenceSource::ImportTrace;
    std::optional<std::filesystem::path> candidates_path;
    std::optional<std::filesystem::path> vendored_listing;  // in-tree availability input
};

namespace detail {

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline PolicyEnvelope policy_from_json(const nlohmann::json& j) {
    PolicyEnvelope env;
    if (j.contains("track") && j["track"].is_string())
        env.track = j["track"].get<std::string>() == "policy_specified"
                        ? PolicyTrack::PolicySpecified
                        : PolicyTrack::PolicyUnspecified;
    if (j.contains("allowlist") && j["allowlist"].is_array()) {
        std::vector<std::string> patterns;
        for (const auto& p : j["allowlist"]) patterns.push_back(p.get<std::string>());
        env.allowlist = std::move(patterns);
    }
    if (j.contains("denylist") && j["denylist"].is_array()) {
        for (const auto& d : j["denylist"]) {
            DenyRule rule;
            rule.pattern = d.at("package").get<std::string>();
            if (d.contains("introduced") && !d["introduced"].is_null())
                rule.introduced = d["introduced"].get<std::string>();
            if (d.contains("fixed") && !d["fixed"].is_null())
                rule.fixed = d["fixed"].get<std::string>();
            env.denylist.push_back(std::move(rule));
        }
    }
    if (j.contains("max_new_dependencies") && j["max_new_dependencies"].is_number())
        env.max_new_dependencies = j["max_new_dependencies"].get<std::size_t>();
    if (j.contains("forbid_vulnerable") && j["forbid_vulnerable"].is_boolean())
        env.forbid_vulnerable = j["forbid_vulnerable"].get<bool>();
    return env;
}

inline nlohmann::ordered_json policy_to_json(const PolicyEnvelope& env) {
    nlohmann::ordered_json j;
    j["track"] = to_string(env.track);
    if (env.allowlist) j["allowlist"] = *env.allowlist;
    else j["allowlist"] = nullptr;
    j["denylist"] = nlohmann::ordered_json::array();
    for (const auto& rule : env.denylist) {
        nlohmann::ordered_json d;
        d["package"] = rule.pattern;
        if (rule.introduced) d["introduced"] = *rule.introduced;
        if (rule.fixed) d["fixed"] = *rule.fixed;
        j["denylist"].push_back(std::move(d));
    }
    if (env.max_new_dependencies) j["max_new_dependencies"] = *env.max_new_dependencies;
    else j["max_new_dependencies"] = nullptr;
    j["forbid_vulnerable"] = env.forbid_vulnerable;
    return j;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out.push_back(c);
    }
    out += "'";
    return out;
}

inline bool skip_dir_entry(const std::filesystem::path& p) {
    const std::string name = p.filename().string();
    return name == ".git" || name == "node_modules";
}

// All manifest- or lockfile-format files under root, as root-relative paths.
inline std::vector<std::string> find_dependency_files(const std::filesystem::path& root) {
    std::vector<std::string> out;
    if (!std::filesystem::exists(root)) return out;
    std::filesystem::recursive_directory_iterator it(root), end;
    for (; it != end; ++it) {
        if (it->is_directory()) {
            if (skip_dir_entry(it->path())) it.disable_recursion_pending();
            continue;
        }
        if (!it->is_regular_file()) continue;
        const std::string rel = std::filesystem::relative(it->path(), root).generic_string();
        if (detect_format(rel)) out.push_back(rel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// Loads an instance config (one JSON object per instance); relative paths
/// are resolved against the config file's directory.
inline TaskInstance load_instance(const std::filesystem::path& config_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_text_file(config_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed instance config " + config_path.string() + ": " + e.what());
    }
    const auto base = config_path.parent_path();
    auto resolve = [&](const std::string& rel) { return base / rel; };

    TaskInstance inst;
    try {
        inst.id = doc.at("id").get<std::string>();
        const auto family = task_family_from_string(doc.at("family").get<std::string>());
        if (!family) throw Error("unknown task family");
        inst.family = *family;
        inst.snapshot_dir = resolve(doc.at("snapshot_dir").get<std::string>());
        inst.reference_date = parse_utc(doc.at("reference_date").get<std::string>());
        const std::string avail = doc.value("availability", "in_manifest");
        if (avail == "in_manifest") inst.availability_definition = AvailabilityDefinition::InManifest;
        else if (avail == "in_lockfile")
            inst.availability_definition = AvailabilityDefinition::InLockfile;
        else if (avail == "in_tree") inst.availability_definition = AvailabilityDefinition::InTree;
        else throw Error("unknown availability definition: " + avail);

        if (doc.contains("policy") && !doc["policy"].is_null())
            inst.policy = detail::policy_from_json(doc["policy"]);
        if (doc.contains("required_capabilities"))
            for (const auto& cap : doc["required_capabilities"]) {
                std::set<std::string> names;
                for (const auto& n : cap) names.insert(n.get<std::string>());
                inst.required_capabilities.push_back(std::move(names));
            }
        if (doc.contains("justified_names"))
            for (const auto& n : doc["justified_names"])
                inst.justified_names.insert(n.get<std::string>());
        if (doc.contains("test_command") && !doc["test_command"].is_null())
            inst.test_command = doc["test_command"].get<std::string>();
        if (doc.contains("evidence_path") && !doc["evidence_path"].is_null())
            inst.evidence_path = resolve(doc["evidence_path"].get<std::string>());
        if (doc.contains("evidence_source") && doc["evidence_source"].is_string()) {
            const std::string src = doc["evidence_source"].get<std::string>();
            inst.evidence_source = src == "module_load_log" ? EvidenceSource::ModuleLoadLog
                                   : src == "declared"      ? EvidenceSource::Declared
                                                            : EvidenceSource::ImportTrace;
        }
        if (doc.contains("candidates_path") && !doc["candidates_path"].is_null())
            inst.candidates_path = resolve(doc["candidates_path"].get<std::string>());
        if (doc.contains("vendored_listing") && !doc["vendored_listing"].is_null())
            inst.vendored_listing = resolve(doc["vendored_listing"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed instance config " + config_path.string() + ": " + e.what());
    }
    if (!std::filesystem::is_directory(inst.snapshot_dir))
        throw Error("snapshot_dir does not exist: " + inst.snapshot_dir.string());
    return inst;
}

/// Availability from the base state, per the instance's definition. InTree
/// reads the caller-supplied vendored-package listing (JSON array of names
/// or {ecosystem, name, version} objects).
inline AvailabilitySet build_availability(const TaskInstance& inst) {
    AvailabilitySet avail;
    avail.definition = inst.availability_definition;

    if (inst.availability_definition == AvailabilityDefinition::InTree) {
        if (!inst.vendored_listing)
            throw Error("in_tree availability requires a vendored_listing file");
        nlohmann::json doc = nlohmann::json::parse(detail::read_text_file(*inst.vendored_listing));
        for (const auto& entry : doc) {
            AvailabilityMember m;
            if (entry.is_string()) {
                m.ecosystem = Ecosystem::Npm;  // name-only listing: ecosystem unused
                m.name = entry.get<std::string>();
            } else {
                const auto eco = ecosystem_from_string(entry.value("ecosystem", "npm"));
                m.ecosystem = eco.value_or(Ecosystem::Npm);
                m.name = normalize_package_name(m.ecosystem, entry.at("name").get<std::string>());
                if (entry.contains("version") && entry["version"].is_string())
                    m.version = parse_version(m.ecosystem, entry["version"].get<std::string>());
            }
            avail.members.push_back(std::move(m));
        }
        return avail;
    }

    for (const auto& rel : detail::find_dependency_files(inst.snapshot_dir)) {
        const auto format = detect_format(rel);
        const std::string text = detail::read_text_file(inst.snapshot_dir / rel);
        if (inst.availability_definition == AvailabilityDefinition::InManifest) {
            if (is_lockfile(*format)) continue;
            for (const auto& decl : parse_manifest(*format, text, rel).decls)
                avail.members.push_back({decl.ecosystem, decl.name, decl.pinned});
        } else {
            if (!is_lockfile(*format)) continue;
            for (const auto& [name, version] : parse_lockfile(*format, text))
                avail.members.push_back({ecosystem_of(*format), name, version});
        }
    }
    return avail;
}

inline ExecutionEvidence load_evidence(const TaskInstance& inst) {
    ExecutionEvidence evidence;
    evidence.source = inst.evidence_source;
    if (!inst.evidence_path) return evidence;
    nlohmann::json doc = nlohmann::json::parse(detail::read_text_file(*inst.evidence_path));
    for (const auto& name : doc) evidence.observed.insert(name.get<std::string>());
    return evidence;
}

/// Candidate release lists, package name -> versions, parsed lazily per
/// ecosystem at lookup time (the file stores raw version strings).
inline std::map<std::string, std::vector<std::string>> load_candidates(
    const std::filesystem::path& path) {
    std::map<std::string, std::vector<std::string>> out;
    nlohmann::json doc = nlohmann::json::parse(detail::read_text_file(path));
    for (const auto& [name, versions] : doc.items()) {
        auto& list = out[name];
        for (const auto& v : versions) list.push_back(v.get<std::string>());
    }
    return out;
}

// Either a unified diff or a pre-materialized head tree.
struct PatchInput {
    std::optional<std::string> diff_text;
    std::optional<std::filesystem::path> head_dir;

    static PatchInput from_diff(std::string text) { return {std::move(text), std::nullopt}; }
    static PatchInput from_head_dir(std::filesystem::path dir) {
        return {std::nullopt, std::move(dir)};
    }
};

struct RunResult {
    ScoreReport report;
    std::filesystem::path head_dir;
    PolicyEnvelope effective_policy;
};

/// Materializes the head state, classifies manifest changes, builds
/// availability/evidence/candidates, resolves the effective policy, runs the
/// optional test command (exit 0 = pass; a failing command is a recorded
/// outcome, not an error) and scores the instance.
inline RunResult run_instance(const TaskInstance& inst, const PatchInput& input,
                              const AdvisoryStore& store) {
    if (input.diff_text.has_value() == input.head_dir.has_value())
        throw Error("run_instance needs exactly one of diff text or head dir");

    std::filesystem::path head;
    if (input.diff_text) {
        head = apply_patch(inst.snapshot_dir, *input.diff_text).head_dir;
    } else {
        head = *input.head_dir;
        if (!std::filesystem::is_directory(head))
            throw Error("head_dir does not exist: " + head.string());
    }

    // Union of dependency files across base and head, diffed side by side.
    std::vector<PrFile> files;
    {
        auto base_files = detail::find_dependency_files(inst.snapshot_dir);
        auto head_files = detail::find_dependency_files(head);
        std::vector<std::string> all;
        std::set_union(base_files.begin(), base_files.end(), head_files.begin(), head_files.end(),
                       std::back_inserter(all));
        for (const auto& rel : all) {
            PrFile f;
            f.path = rel;
            if (std::filesystem::exists(inst.snapshot_dir / rel))
                f.base_text = detail::read_text_file(inst.snapshot_dir / rel);
            if (std::filesystem::exists(head / rel))
                f.head_text = detail::read_text_file(head / rel);
            files.push_back(std::move(f));
        }
    }

    InstanceContext ctx;
    ctx.instance_id = inst.id;
    ctx.changes = classify_from_pr(files);
    ctx.envelope = inst.policy ? *inst.policy : default_policy();
    ctx.availability = build_availability(inst);
    ctx.evidence = load_evidence(inst);
    ctx.required_capabilities = inst.required_capabilities;
    ctx.justified_names = inst.justified_names;
    ctx.enforce_justified_add = inst.family == TaskFamily::JustifiedAdd;

    if (inst.candidates_path) {
        for (const auto& [name, versions] : load_candidates(*inst.candidates_path)) {
            // Candidate ecosystems follow the change that consults them.
            Ecosystem eco = Ecosystem::Npm;
            bool known = false;
            for (const auto& c : ctx.changes)
                if (c.name == name) {
                    eco = c.ecosystem;
                    known = true;
                    break;
                }
            if (!known)
                for (const auto& m : ctx.availability.members)
                    if (m.name == name) {
                        eco = m.ecosystem;
                        break;
                    }
            auto& list = ctx.candidates[name];
            for (const auto& v : versions) list.push_back(parse_version(eco, v));
        }
    }

    if (inst.test_command) {
        const std::string cmd =
            "cd " + detail::shell_quote(head.string()) + " && (" + *inst.test_command + ")";
        ctx.functional_pass = std::system(cmd.c_str()) == 0;
    }

    RunResult result;
    result.report = score_instance(ctx, store, inst.reference_date);
    result.head_dir = head;
    result.effective_policy = ctx.envelope;
    return result;
}

}  // namespace depdec
