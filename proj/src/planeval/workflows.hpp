#pragma once

// File-level commands behind the command-line tool. Each command takes a
// flat JSON object keyed by its long flag names (the run configuration) and
// returns the text it prints on standard output. Output files are written
// deterministically; worker counts never change a byte of output.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace planeval::workflows {

// The explicit value when given, otherwise PLANEVAL_WORKERS, otherwise the
// number of hardware threads. Throws InvalidArgument for values below 1.
unsigned resolve_workers(std::optional<long> flag);

const std::vector<std::string>& command_names();

// Throws InvalidArgument for unknown commands or keys, IoError for missing
// inputs, and whatever the delegated operation throws.
std::string run(std::string_view command, const std::string& config_json);

}  // namespace planeval::workflows
