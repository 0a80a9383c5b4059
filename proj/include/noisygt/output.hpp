#pragma once

// CSV primitives shared by the CLI writers.  Doubles go through
// std::to_chars (shortest round-trip form), so a value re-read from the file
// is bit-identical to the one computed, and reruns produce identical bytes.

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "version.hpp"

namespace noisygt {

inline std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

inline std::string csv_escape(const std::string& field) {
    const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(fields[i]);
    }
    os << '\n';
}

// Comment preamble carried by every primary output file: tool version and
// schema, the exact command configuration, and the seed.
inline void write_preamble(std::ostream& os, const std::string& command_echo,
                           std::uint64_t seed) {
    os << "# noisygt " << version_string << " schema " << schema_version << "\n";
    os << "# cmd: " << command_echo << "\n";
    os << "# seed: " << seed << "\n";
}

}  // namespace noisygt
