#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nemesys::cli {

enum class Flavor {
  kFull,  // nemesys: every verb
  kDci,   // dci: ingest, enrich, query, cluster
};

/// Runs one invocation. args excludes the program name. Exit codes: 0 on
/// success, 1 on validation errors (bad flags, configs or input records),
/// 2 on runtime failures. Data goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, Flavor flavor = Flavor::kFull);

}  // namespace nemesys::cli
