#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pulse {

// Data/parse failure with a 1-based line number; the CLI maps it to exit
// code 2.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

namespace csv {

// Shortest representation that round-trips the double exactly, so repeated
// export/import cycles are byte-stable.
std::string format(double value);

std::string format(long long value);

// Splits a CSV line on commas; no quoting (none of our schemas need it).
std::vector<std::string> split(const std::string& line);

double parse_double(const std::string& field, std::size_t line);
long long parse_count(const std::string& field, std::size_t line);

// True when every comma-separated field parses as a number; used to skip
// optional header rows.
bool numeric_row(const std::string& line);

}  // namespace csv
}  // namespace pulse
