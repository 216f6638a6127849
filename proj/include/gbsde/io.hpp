// SPDX-License-Identifier: MIT
/**
 * @file io.hpp
 * @brief Locale-independent CSV output and run manifests.
 *
 * Numbers are written in the shortest form that round-trips, so two runs
 * with the same inputs produce byte-identical files.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbsde/lattice.hpp"

namespace gbsde {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(const std::string& v);
    void end_row();
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] const std::string& text() const noexcept { return buf_; }

private:
    void sep();
    std::size_t columns_ = 0;
    std::size_t in_row_ = 0;
    std::size_t rows_ = 0;
    std::string buf_;
};

/// Node table k,j,t,x,value (with a component column when component >= 0).
void append_field_rows(CsvWriter& w, const ValueField& f, const Lattice& lat, int component = -1);

/// Files of one run directory; written together, manifest last.
class RunArtifacts {
public:
    explicit RunArtifacts(std::string command) : command_(std::move(command)) {}
    void add_csv(const std::string& name, const CsvWriter& csv, const std::string& description);
    void add_json(const std::string& name, const Json& doc, const std::string& description);
    Json& manifest() noexcept { return manifest_; }
    /// Create `dir` and write every file plus manifest.json.
    void write(const std::filesystem::path& dir) const;

private:
    struct File {
        std::string name;
        std::string content;
        std::string description;
        std::size_t rows = 0;
        bool csv = false;
    };
    std::string command_;
    Json manifest_ = Json::object();
    std::vector<File> files_;
};

}  // namespace gbsde
