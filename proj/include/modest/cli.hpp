#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace modest {

inline constexpr const char* kToolVersion = "0.1.0";

// Parses argv-style arguments (program name excluded), runs the selected
// subcommand, writes the payload to `out` (or the --out file) and a
// one-line run manifest to `err`.  Exit codes: 0 success, 1 usage,
// 2 numerical failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

// 17 significant digits: parses back to the identical double.
std::string format_double(double v);

// Joins pre-formatted cells under a header: one comma-separated line per
// row, LF newlines, an empty row set yields the header alone.  Throws if a
// row width disagrees with the header.
std::string emit_csv(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

}  // namespace modest
