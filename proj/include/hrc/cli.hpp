#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hrc {

/// Exit codes: 0 success, 1 a replay or run did not come out clean,
/// 2 an input file is missing, 3 an input is malformed, CLI11 codes for
/// flag errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands "seeds=1..20" or "seeds=3,5,8".
std::vector<unsigned long long> parse_seed_sweep(const std::string& text);

/// Splits a comma list, leaving commas inside parentheses alone.
std::vector<std::string> split_scripts(const std::string& list);

}  // namespace hrc
