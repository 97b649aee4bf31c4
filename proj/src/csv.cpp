#include "pulse/csv.hpp"

#include <charconv>
#include <cstdlib>

namespace pulse::csv {

std::string format(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string format(long long value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
        std::size_t comma = line.find(',', begin);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(begin));
            break;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
    // Trim surrounding whitespace.
    for (auto& f : fields) {
        std::size_t a = f.find_first_not_of(" \t\r");
        std::size_t b = f.find_last_not_of(" \t\r");
        f = (a == std::string::npos) ? std::string() : f.substr(a, b - a + 1);
    }
    return fields;
}

double parse_double(const std::string& field, std::size_t line) {
    const char* begin = field.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError(line, "expected a number, got '" + field + "'");
    return v;
}

long long parse_count(const std::string& field, std::size_t line) {
    long long v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || v < 0)
        throw ParseError(line, "expected a non-negative count, got '" + field + "'");
    return v;
}

bool numeric_row(const std::string& line) {
    for (const auto& f : split(line)) {
        if (f.empty()) return false;
        const char* begin = f.c_str();
        char* end = nullptr;
        std::strtod(begin, &end);
        if (end == begin || *end != '\0') return false;
    }
    return true;
}

}  // namespace pulse::csv
