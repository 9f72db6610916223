#pragma once

#include <functional>
#include <string>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

Outcome check_mm1();
Outcome check_storm_rate();
Outcome check_cusum();
Outcome check_rnn();
Outcome check_end_to_end();
Outcome check_dci();
Outcome check_cli_determinism();
Outcome check_honeynode();

std::string fmt(const char* format, ...);

}  // namespace acceptance
