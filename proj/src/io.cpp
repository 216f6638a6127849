// SPDX-License-Identifier: MIT
#include "gbsde/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "gbsde/errors.hpp"

namespace gbsde {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // drops the sign of -0
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += header[i];
    }
    buf_ += '\n';
}

void CsvWriter::sep() {
    if (in_row_ == columns_) throw ConfigurationError("CSV row has more cells than columns");
    if (in_row_++ > 0) buf_ += ',';
}

CsvWriter& CsvWriter::cell(double v) {
    sep();
    buf_ += format_double(v);
    return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
    sep();
    buf_ += std::to_string(v);
    return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
    sep();
    buf_ += v;
    return *this;
}

void CsvWriter::end_row() {
    if (in_row_ != columns_) throw ConfigurationError("CSV row has fewer cells than columns");
    buf_ += '\n';
    in_row_ = 0;
    ++rows_;
}

void append_field_rows(CsvWriter& w, const ValueField& f, const Lattice& lat, int component) {
    if (f.levels() != lat.levels() || f.width() != lat.width())
        throw GridMismatchError("field does not match lattice");
    const int J = lat.half_nodes();
    for (int k = 0; k < f.levels(); ++k) {
        for (int s = 0; s < f.width(); ++s) {
            w.cell(static_cast<long long>(k)).cell(static_cast<long long>(s - J));
            w.cell(lat.time(k)).cell(lat.slot_space(s));
            if (component >= 0) w.cell(static_cast<long long>(component));
            w.cell(f.at(k, s));
            w.end_row();
        }
    }
}

void RunArtifacts::add_csv(const std::string& name, const CsvWriter& csv, const std::string& description) {
    files_.push_back({name, csv.text(), description, csv.rows(), true});
}

void RunArtifacts::add_json(const std::string& name, const Json& doc, const std::string& description) {
    files_.push_back({name, doc.dump(2) + "\n", description, 0, false});
}

void RunArtifacts::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    Json m = Json::object();
    m["command"] = command_;
    for (const auto& [k, v] : manifest_.items()) m[k] = v;
    Json files = Json::array();
    for (const File& f : files_) {
        Json e = Json::object();
        e["name"] = f.name;
        e["description"] = f.description;
        if (f.csv) e["rows"] = f.rows;
        files.push_back(std::move(e));
    }
    m["files"] = std::move(files);

    auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream os(dir / name, std::ios::binary | std::ios::trunc);
        os << content;
        if (!os) throw Error(ErrorKind::numerical, "cannot write " + (dir / name).string());
    };
    for (const File& f : files_) put(f.name, f.content);
    put("manifest.json", m.dump(2) + "\n");
}

}  // namespace gbsde
