#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace cellpic {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

/// Minimal CSV writer: header row, comma separated, LF line endings.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& cell(std::string_view s);
    CsvWriter& cell(double v);
    CsvWriter& cell(std::int64_t v);
    CsvWriter& cell(std::uint64_t v);
    CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
    void end_row();

private:
    void separator();
    std::ofstream out_;
    bool row_started_ = false;
};

/// Split a CSV file into rows of fields (no quoting support).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

} // namespace cellpic
