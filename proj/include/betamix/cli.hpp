#pragma once

// Command-line front end. `run` takes the arguments after the program name.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "betamix/data.hpp"

namespace betamix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNonConvergence = 3;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Scatter plot of a two-column matrix over the unit square, one palette
/// color per label (all points share the first color when unlabeled).
std::string scatter_svg(const RawMatrix& points, std::string_view title = {});

/// Reads one label per non-empty line from the last CSV field. Labels may be
/// arbitrary tokens; they are numbered in order of first appearance. A first
/// line whose last field is "label" is skipped as a header.
std::vector<int> read_label_file(const std::string& path);

}  // namespace betamix::cli
