#pragma once

#include <cstdio>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sure_omt {

/// Shortest-safe round-trip text for a double (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Input error carrying the 1-based line number where it occurred.
class InputError : public std::runtime_error {
public:
    InputError(long line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

/// Splits one CSV line on commas. Quoting is not supported; fields are trimmed.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

/// Header-addressed CSV reader.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                header_ = split_csv_line(line);
                return;
            }
        }
    }

    bool has_header() const noexcept { return !header_.empty(); }
    const std::vector<std::string>& header() const noexcept { return header_; }

    /// Column index, or -1 when absent.
    long column(const std::string& name) const {
        for (std::size_t i = 0; i < header_.size(); ++i) {
            if (header_[i] == name) {
                return static_cast<long>(i);
            }
        }
        return -1;
    }

    /// Next non-blank row; false at end of input.
    bool next(std::vector<std::string>& row) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            row = split_csv_line(line);
            if (row.size() != header_.size()) {
                throw InputError(line_no_, "expected " + std::to_string(header_.size()) + " fields, got " +
                                               std::to_string(row.size()));
            }
            return true;
        }
        return false;
    }

    long line() const noexcept { return line_no_; }

private:
    std::istream& in_;
    std::vector<std::string> header_;
    long line_no_ = 0;
};

inline long parse_count(const std::string& s, long line) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        throw InputError(line, "not an integer: '" + s + "'");
    }
    if (used != s.size()) {
        throw InputError(line, "not an integer: '" + s + "'");
    }
    return v;
}

inline double parse_real(const std::string& s, long line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError(line, "not a number: '" + s + "'");
    }
    if (used != s.size()) {
        throw InputError(line, "not a number: '" + s + "'");
    }
    return v;
}

}  // namespace sure_omt
