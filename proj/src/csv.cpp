#include "cellpic/csv.hpp"

#include "cellpic/error.hpp"

#include <array>
#include <sstream>

namespace cellpic {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw Error("format_double: conversion failed");
    return std::string(buf.data(), end);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : CsvWriter(path, std::vector<std::string>(header.begin(), header.end())) {}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    for (const auto& h : header) cell(h);
    end_row();
}

void CsvWriter::separator() {
    if (row_started_) out_.put(',');
    row_started_ = true;
}

CsvWriter& CsvWriter::cell(std::string_view s) {
    separator();
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(std::int64_t v) {
    separator();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::cell(std::uint64_t v) {
    separator();
    out_ << v;
    return *this;
}

void CsvWriter::end_row() {
    out_.put('\n');
    row_started_ = false;
    if (!out_) throw Error("CSV write failed");
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace cellpic
