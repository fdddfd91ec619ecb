#pragma once

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ncd::detail {

/// Splits a text line into fields. Returns no fields for blank lines and for
/// lines whose first non-blank character is the comment prefix.
inline std::vector<std::string_view> split_fields(std::string_view line, char comment,
                                                  std::optional<char> delimiter) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t first = 0;
    while (first < line.size() && std::isspace(static_cast<unsigned char>(line[first]))) ++first;
    std::vector<std::string_view> out;
    if (first == line.size() || line[first] == comment) return out;

    if (delimiter) {
        std::size_t start = 0;
        while (true) {
            auto pos = line.find(*delimiter, start);
            auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
            while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
            while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
            out.push_back(field);
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return out;
    }

    std::size_t i = first;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i == line.size()) break;
        auto start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Fixed 17-significant-digit rendering used by the rank TSV.
inline std::string format_sig17(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ec == std::errc{} ? ptr : buf);
}

}  // namespace ncd::detail
