#pragma once

#include <string>
#include <vector>

namespace bmisil::csv {

struct Table {
    std::vector<std::string> header;
    /// Each row paired with its 1-based line number in the source file.
    std::vector<std::pair<int, std::vector<std::string>>> rows;

    /// Column index for `name`, or -1.
    int column(const std::string& name) const;
};

/// Minimal comma-separated reader: no quoting, fields trimmed, blank lines and
/// `#` comment lines skipped. Throws IoError / ManifestParseError.
Table read(const std::string& path);
Table parse(const std::string& text);

/// Parses a finite double; throws ManifestParseError mentioning `line`.
double parse_number(const std::string& field, int line);

}  // namespace bmisil::csv
