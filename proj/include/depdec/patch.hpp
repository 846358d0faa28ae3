#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "depdec/errors.hpp"

namespace depdec {

struct PatchResult {
    std::vector<std::string> applied_files;  // repository-relative, in diff order
    std::size_t rejected_hunks = 0;          // always 0 on success; failures throw
    std::filesystem::path head_dir;
};

namespace detail {

struct FileText {
    std::vector<std::string> lines;
    bool final_newline = true;
    bool exists = false;
};

inline FileText read_file_text(const std::filesystem::path& p) {
    FileText ft;
    std::ifstream in(p, std::ios::binary);
    if (!in) return ft;
    ft.exists = true;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.empty()) {
        ft.final_newline = true;  // empty file: vacuous
        return ft;
    }
    ft.final_newline = content.back() == '\n';
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t nl = content.find('\n', start);
        if (nl == std::string::npos) {
            ft.lines.push_back(content.substr(start));
            break;
        }
        ft.lines.push_back(content.substr(start, nl - start));
        start = nl + 1;
    }
    return ft;
}

inline void write_file_text(const std::filesystem::path& p, const FileText& ft) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    for (std::size_t i = 0; i < ft.lines.size(); ++i) {
        out << ft.lines[i];
        if (i + 1 < ft.lines.size() || ft.final_newline) out << '\n';
    }
}

struct HunkLine {
    char tag = ' ';  // ' ', '-', '+'
    std::string text;
    bool no_newline_after = false;  // "\ No newline at end of file" follows
};

struct Hunk {
    std::size_t old_start = 0, old_count = 0;  // 1-based; start 0 = empty side
    std::size_t new_start = 0, new_count = 0;
    std::vector<HunkLine> lines;
};

struct FilePatch {
    std::string old_path;  // stripped of a/ prefix; empty = /dev/null
    std::string new_path;
    std::vector<Hunk> hunks;
};

inline std::string parse_diff_path(std::string_view token) {
    if (const std::size_t tab = token.find('\t'); tab != std::string_view::npos)
        token = token.substr(0, tab);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token == "/dev/null") return "";
    if (token.substr(0, 2) == "a/" || token.substr(0, 2) == "b/") token.remove_prefix(2);
    else if (token.substr(0, 2) == "./") token.remove_prefix(2);
    return std::string(token);
}

inline void check_repo_relative(const std::string& path) {
    if (path.empty()) return;
    const std::filesystem::path p(path);
    if (p.is_absolute()) throw PathEscape(path);
    for (const auto& part : p)
        if (part == "..") throw PathEscape(path);
}

inline bool parse_hunk_header(const std::string& line, Hunk& hunk) {
    // @@ -l[,c] +l[,c] @@ ...
    if (line.substr(0, 4) != "@@ -") return false;
    const char* s = line.c_str() + 4;
    char* end = nullptr;
    hunk.old_start = std::strtoul(s, &end, 10);
    hunk.old_count = 1;
    if (*end == ',') hunk.old_count = std::strtoul(end + 1, &end, 10);
    while (*end == ' ') ++end;
    if (*end != '+') return false;
    hunk.new_start = std::strtoul(end + 1, &end, 10);
    hunk.new_count = 1;
    if (*end == ',') hunk.new_count = std::strtoul(end + 1, &end, 10);
    return true;
}

inline std::vector<FilePatch> parse_unified_diff(const std::string& diff_text) {
    std::vector<FilePatch> patches;
    std::vector<std::string> lines;
    {
        std::size_t start = 0;
        while (start <= diff_text.size()) {
            std::size_t nl = diff_text.find('\n', start);
            if (nl == std::string::npos) {
                if (start < diff_text.size()) lines.push_back(diff_text.substr(start));
                break;
            }
            std::string l = diff_text.substr(start, nl - start);
            if (!l.empty() && l.back() == '\r') l.pop_back();
            lines.push_back(std::move(l));
            start = nl + 1;
        }
    }

    std::size_t i = 0;
    while (i < lines.size()) {
        const std::string& line = lines[i];
        if (line.rfind("Binary files", 0) == 0 || line.rfind("GIT binary patch", 0) == 0)
            throw PatchRejected(line, 0, "binary patches are not supported");
        if (line.rfind("--- ", 0) != 0) {
            ++i;
            continue;
        }
        if (i + 1 >= lines.size() || lines[i + 1].rfind("+++ ", 0) != 0) {
            ++i;
            continue;
        }
        FilePatch fp;
        fp.old_path = parse_diff_path(std::string_view(line).substr(4));
        fp.new_path = parse_diff_path(std::string_view(lines[i + 1]).substr(4));
        i += 2;
        while (i < lines.size() && lines[i].rfind("@@ -", 0) == 0) {
            Hunk hunk;
            if (!parse_hunk_header(lines[i], hunk))
                throw PatchRejected(fp.new_path.empty() ? fp.old_path : fp.new_path,
                                    fp.hunks.size() + 1, "bad hunk header: " + lines[i]);
            ++i;
            std::size_t need_old = hunk.old_count, need_new = hunk.new_count;
            while (i < lines.size() && (need_old > 0 || need_new > 0)) {
                const std::string& body = lines[i];
                if (body.rfind("\\ ", 0) == 0 || body == "\\") {
                    if (!hunk.lines.empty()) hunk.lines.back().no_newline_after = true;
                    ++i;
                    continue;
                }
                HunkLine hl;
                if (body.empty()) {
                    hl.tag = ' ';  // trailing-whitespace-trimmed context line
                } else if (body[0] == ' ' || body[0] == '-' || body[0] == '+') {
                    hl.tag = body[0];
                    hl.text = body.substr(1);
                } else {
                    break;
                }
                if (hl.tag == ' ') {
                    if (need_old == 0 || need_new == 0) break;
                    --need_old;
                    --need_new;
                } else if (hl.tag == '-') {
                    if (need_old == 0) break;
                    --need_old;
                } else {
                    if (need_new == 0) break;
                    --need_new;
                }
                hunk.lines.push_back(std::move(hl));
                ++i;
            }
            // trailing no-newline marker for the last hunk line
            if (i < lines.size() && (lines[i].rfind("\\ ", 0) == 0 || lines[i] == "\\")) {
                if (!hunk.lines.empty()) hunk.lines.back().no_newline_after = true;
                ++i;
            }
            fp.hunks.push_back(std::move(hunk));
        }
        patches.push_back(std::move(fp));
    }
    return patches;
}

inline std::filesystem::path unique_work_dir() {
    static std::mt19937_64 rng(std::random_device{}());
    std::uniform_int_distribution<std::uint64_t> dist;
    for (int attempt = 0; attempt < 64; ++attempt) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "depdec-%016llx",
                      static_cast<unsigned long long>(dist(rng)));
        auto p = std::filesystem::temp_directory_path() / buf;
        std::error_code ec;
        if (std::filesystem::create_directory(p, ec)) return p;
    }
    throw Error("could not create a work directory under temp");
}

inline void apply_file_patch(const std::filesystem::path& head_root, const FilePatch& fp) {
    const std::string rel = fp.new_path.empty() ? fp.old_path : fp.new_path;
    const std::string display = rel;
    const bool is_delete = fp.new_path.empty();
    const std::filesystem::path target = head_root / (is_delete ? fp.old_path : fp.new_path);

    FileText old_text = read_file_text(target);
    FileText new_text;
    new_text.final_newline = old_text.exists ? old_text.final_newline : true;

    std::size_t cursor = 0;  // 0-based into old lines
    bool last_new_marker = false;
    for (std::size_t h = 0; h < fp.hunks.size(); ++h) {
        const Hunk& hunk = fp.hunks[h];
        const std::size_t hunk_no = h + 1;
        const std::size_t target_line = hunk.old_start == 0 ? 0 : hunk.old_start - 1;
        if (target_line < cursor || target_line > old_text.lines.size())
            throw PatchRejected(display, hunk_no, "hunk position out of range");
        while (cursor < target_line) new_text.lines.push_back(old_text.lines[cursor++]);

        bool old_side_marker = false;
        for (const HunkLine& hl : hunk.lines) {
            if (hl.tag != '+') {
                if (cursor >= old_text.lines.size() || old_text.lines[cursor] != hl.text)
                    throw PatchRejected(display, hunk_no,
                                        "context mismatch at line " + std::to_string(cursor + 1));
                ++cursor;
                if (hl.no_newline_after) old_side_marker = true;
            }
            if (hl.tag != '-') {
                new_text.lines.push_back(hl.text);
                last_new_marker = hl.no_newline_after;
            }
        }
        if (old_side_marker && cursor == old_text.lines.size() && old_text.final_newline &&
            old_text.exists && !old_text.lines.empty())
            throw PatchRejected(display, hunk_no, "original file ends with a newline");
    }
    const bool tail_copied = cursor < old_text.lines.size();
    while (cursor < old_text.lines.size()) new_text.lines.push_back(old_text.lines[cursor++]);
    new_text.final_newline = tail_copied ? old_text.final_newline : !last_new_marker;

    if (is_delete) {
        if (!new_text.lines.empty())
            throw PatchRejected(display, fp.hunks.size(), "deletion leaves content behind");
        std::error_code ec;
        std::filesystem::remove(target, ec);
        return;
    }
    write_file_text(target, new_text);
}

}  // namespace detail

/// Applies a unified diff to a copy-on-write duplicate of `snapshot_dir`.
/// The snapshot itself is never mutated. Context mismatches reject the hunk
/// and fail the whole application (PatchRejected); paths resolving outside
/// the snapshot root throw PathEscape. File creations and deletions are
/// supported; the caller owns the returned head directory.
inline PatchResult apply_patch(const std::filesystem::path& snapshot_dir,
                               const std::string& unified_diff_text,
                               std::optional<std::filesystem::path> work_dir = std::nullopt) {
    const auto patches = detail::parse_unified_diff(unified_diff_text);
    for (const auto& fp : patches) {
        detail::check_repo_relative(fp.old_path);
        detail::check_repo_relative(fp.new_path);
    }

    PatchResult result;
    result.head_dir = work_dir ? *work_dir : detail::unique_work_dir();
    std::filesystem::create_directories(result.head_dir);
    std::filesystem::copy(snapshot_dir, result.head_dir,
                          std::filesystem::copy_options::recursive |
                              std::filesystem::copy_options::copy_symlinks |
                              std::filesystem::copy_options::overwrite_existing);

    for (const auto& fp : patches) {
        detail::apply_file_patch(result.head_dir, fp);
        result.applied_files.push_back(fp.new_path.empty() ? fp.old_path : fp.new_path);
    }
    return result;
}

}  // namespace depdec
