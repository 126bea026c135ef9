#pragma once

// Minimal RFC-4180 CSV writer with locale-independent, round-trip number formatting.

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dcpass {

/// Shortest representation that parses back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_number(double x);

/// Quotes a field when it contains a comma, quote, CR or LF; embedded quotes are doubled.
std::string csv_escape(std::string_view field);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& fields);
    void row(std::initializer_list<std::string_view> fields);
    void numbers(std::initializer_list<double> values);

private:
    std::ostream& out_;
};

}  // namespace dcpass
