#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace depdec {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnparseableVersion : Error {
    explicit UnparseableVersion(const std::string& text)
        : Error("unparseable version: \"" + text + "\""), text(text) {}
    std::string text;
};

struct EcosystemMismatch : Error {
    EcosystemMismatch() : Error("ecosystem mismatch") {}
};

struct MalformedManifest : Error {
    MalformedManifest(std::string path, const std::string& detail)
        : Error(path.empty() ? detail : path + ": " + detail), path(std::move(path)) {}
    std::string path;
};

struct FormatMismatch : Error {
    FormatMismatch() : Error("manifest formats differ between base and head") {}
};

struct SchemaViolation : Error {
    SchemaViolation(std::size_t ordinal, std::string field, const std::string& detail)
        : Error("record " + std::to_string(ordinal) + ", field \"" + field + "\": " + detail),
          ordinal(ordinal),
          field(std::move(field)) {}
    std::size_t ordinal;  // 1-based record number in the input stream
    std::string field;
};

struct PatchRejected : Error {
    PatchRejected(std::string file, std::size_t hunk, const std::string& detail)
        : Error(file + ", hunk " + std::to_string(hunk) + ": " + detail),
          file(std::move(file)),
          hunk(hunk) {}
    std::string file;
    std::size_t hunk;  // 1-based within the file's hunk list
};

struct PathEscape : Error {
    explicit PathEscape(std::string path)
        : Error("diff path escapes the snapshot root: " + path), path(std::move(path)) {}
    std::string path;
};

}  // namespace depdec
