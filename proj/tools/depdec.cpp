// depdec: dependency-decision audit and benchmark CLI.
//
// Subcommands:
//   diff <base> <head>          classify dependency changes between two manifests
//   audit <manifest>            list PR-time advisories for pinned dependencies
//   score <instance-config>     run one benchmark instance and print its metrics
//   corpus <corpus.jsonl>       replay a PR corpus into study-level tables
//
// Exit status: 0 success (audit: no findings; score: passing instance),
// 1 findings / failing instance, 2 usage, parse or schema errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "depdec/depdec.hpp"

namespace {

using namespace depdec;

struct OutputOptions {
    std::string format = "table";
    std::string out_path;
};

void emit(const OutputOptions& opts, const std::string& body) {
    if (opts.out_path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(opts.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + opts.out_path);
    out << body;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

AdvisoryStore load_store(const std::string& snapshot_path) {
    std::ifstream in(snapshot_path, std::ios::binary);
    if (!in) throw Error("cannot read " + snapshot_path);
    return load_snapshot(in);
}

ReportFormat parse_format(const std::string& f) {
    return f == "json" ? ReportFormat::Json : ReportFormat::MarkdownTable;
}

int cmd_diff(const std::string& base_path, const std::string& head_path,
             const OutputOptions& opts) {
    const auto base_format = detect_format(base_path);
    const auto head_format = detect_format(head_path);
    if (!base_format || !head_format) {
        std::cerr << "depdec: not a recognized manifest: "
                  << (!base_format ? base_path : head_path) << "\n";
        return 2;
    }
    if (*base_format != *head_format) {
        std::cerr << "depdec: manifest formats differ\n";
        return 2;
    }
    if (is_lockfile(*base_format)) {
        std::cerr << "depdec: lockfiles record resolutions, not decisions; diff manifests\n";
        return 2;
    }
    const auto base = parse_manifest(*base_format, read_file(base_path), base_path);
    const auto head = parse_manifest(*head_format, read_file(head_path), head_path);
    const auto changes = classify_changes(base, head);

    if (opts.format == "json") {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& c : changes) rows.push_back(change_to_json(c));
        emit(opts, rows.dump(2) + "\n");
        return 0;
    }
    std::string body;
    for (const auto& c : changes) {
        body += std::string(to_string(c.kind)) + "\t" + to_string(c.ecosystem) + "\t" + c.name +
                "\t" + c.base_spec.value_or("-") + " -> " + c.head_spec.value_or("-") + "\t(" +
                to_string(c.scope) + ")\n";
    }
    emit(opts, body);
    return 0;
}

int cmd_audit(const std::string& manifest_path, const std::string& snapshot_path,
              const std::string& ref_date_text, const OutputOptions& opts) {
    const auto format = detect_format(manifest_path);
    if (!format) {
        std::cerr << "depdec: not a recognized manifest: " << manifest_path << "\n";
        return 2;
    }
    const UtcTime ref_date = parse_utc(ref_date_text);
    const AdvisoryStore store = load_store(snapshot_path);
    const std::string text = read_file(manifest_path);

    struct Finding {
        std::string package;
        std::string version;
        std::string advisory;
        Severity severity;
    };
    std::vector<Finding> findings;
    auto audit_one = [&](Ecosystem eco, const std::string& name, const Version& version) {
        for (const auto& a : advisories_at(store, eco, name, version, ref_date))
            findings.push_back({name, version.raw, a.id, severity_of(a)});
    };
    if (is_lockfile(*format)) {
        for (const auto& [name, version] : parse_lockfile(*format, text))
            audit_one(ecosystem_of(*format), name, version);
    } else {
        for (const auto& decl : parse_manifest(*format, text, manifest_path).decls)
            if (decl.pinned) audit_one(decl.ecosystem, decl.name, *decl.pinned);
    }

    if (opts.format == "json") {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& f : findings)
            rows.push_back({{"package", f.package},
                            {"version", f.version},
                            {"advisory", f.advisory},
                            {"severity", to_string(f.severity)}});
        emit(opts, rows.dump(2) + "\n");
    } else {
        std::string body;
        for (const auto& f : findings)
            body += f.package + "\t" + f.version + "\t" + f.advisory + "\t" +
                    to_string(f.severity) + "\n";
        emit(opts, body);
    }
    return findings.empty() ? 0 : 1;
}

int cmd_score(const std::string& config_path, const std::string& snapshot_path,
              const std::string& patch_path, const std::string& head_dir,
              const OutputOptions& opts) {
    const TaskInstance instance = load_instance(config_path);
    const AdvisoryStore store = load_store(snapshot_path);
    const PatchInput input = !patch_path.empty()
                                 ? PatchInput::from_diff(read_file(patch_path))
                                 : PatchInput::from_head_dir(head_dir);
    const RunResult result = run_instance(instance, input, store);
    emit(opts, render_score_report(result.report, parse_format(opts.format)).body);

    const bool functional_ok = result.report.functional_pass != std::optional<bool>(false);
    return result.report.vuln_compliant && result.report.compliance.ok() && functional_ok ? 0 : 1;
}

int cmd_corpus(const std::string& corpus_path, const std::string& snapshot_path,
               const std::string& candidates_path, const OutputOptions& opts) {
    const AdvisoryStore store = load_store(snapshot_path);
    CandidatesSource candidates;
    if (!candidates_path.empty())
        for (auto& [name, versions] : load_candidates(candidates_path))
            candidates.emplace(name, std::move(versions));
    const CorpusRunResult result = run_corpus_file(corpus_path, store, candidates);
    emit(opts, render_corpus(result.aggregates, parse_format(opts.format)).body);
    if (result.diagnostics.skipped_files > 0)
        std::cerr << "depdec: skipped " << result.diagnostics.skipped_files
                  << " malformed manifest file(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dependency-decision analysis and benchmark harness"};
    app.require_subcommand(1);

    OutputOptions opts;
    std::string snapshot_path;

    auto add_output_flags = [&](CLI::App* cmd, bool with_snapshot) {
        cmd->add_option("--format", opts.format, "output format: table or json")
            ->check(CLI::IsMember({"table", "json"}));
        cmd->add_option("--out", opts.out_path, "write the report to a file instead of stdout");
        if (with_snapshot)
            cmd->add_option("--snapshot", snapshot_path, "advisory snapshot (JSON Lines)")
                ->required();
    };

    std::string base_path, head_path;
    auto* diff = app.add_subcommand("diff", "classify dependency changes between two manifests");
    diff->add_option("base", base_path, "base manifest")->required();
    diff->add_option("head", head_path, "head manifest")->required();
    add_output_flags(diff, false);

    std::string manifest_path, ref_date;
    auto* audit = app.add_subcommand("audit", "list PR-time advisories for pinned dependencies");
    audit->add_option("manifest", manifest_path, "manifest or lockfile to audit")->required();
    audit->add_option("--ref-date", ref_date, "reference date (ISO-8601 UTC)")->required();
    add_output_flags(audit, true);

    std::string config_path, patch_path, head_dir;
    auto* score = app.add_subcommand("score", "score one benchmark instance");
    score->add_option("config", config_path, "instance config (JSON)")->required();
    auto* patch_opt = score->add_option("--patch", patch_path, "unified diff to apply");
    auto* head_opt = score->add_option("--head-dir", head_dir, "pre-materialized head tree");
    patch_opt->excludes(head_opt);
    add_output_flags(score, true);

    std::string corpus_path, candidates_path;
    auto* corpus = app.add_subcommand("corpus", "replay a PR corpus into study tables");
    corpus->add_option("corpus", corpus_path, "corpus file (JSON Lines)")->required();
    corpus->add_option("--candidates", candidates_path, "release lists (JSON map)");
    add_output_flags(corpus, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(diff)) return cmd_diff(base_path, head_path, opts);
        if (app.got_subcommand(audit))
            return cmd_audit(manifest_path, snapshot_path, ref_date, opts);
        if (app.got_subcommand(score)) {
            if (patch_path.empty() == head_dir.empty()) {
                std::cerr << "depdec: score needs exactly one of --patch or --head-dir\n";
                return 2;
            }
            return cmd_score(config_path, snapshot_path, patch_path, head_dir, opts);
        }
        if (app.got_subcommand(corpus))
            return cmd_corpus(corpus_path, snapshot_path, candidates_path, opts);
    } catch (const PatchRejected& e) {
        std::cerr << "depdec: patch rejected: " << e.what() << "\n";
        return 2;
    } catch (const SchemaViolation& e) {
        std::cerr << "depdec: schema violation: " << e.what() << "\n";
        return 2;
    } catch (const MalformedManifest& e) {
        std::cerr << "depdec: malformed manifest: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "depdec: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "depdec: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
