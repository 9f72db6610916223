// Acceptance suite: one pass/fail line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"

int main(int argc, char** argv) {
  using namespace acceptance;
  std::vector<Criterion> all = {
      {1, "M/M/1 occupancy", check_mm1},
      {2, "storm closed form", check_storm_rate},
      {3, "CUSUM calibration and delay", check_cusum},
      {4, "RNN numerics and training", check_rnn},
      {5, "end-to-end storm detection", check_end_to_end},
      {6, "DCI exactness", check_dci},
      {7, "CLI determinism", check_cli_determinism},
      {8, "honeynode premium policy", check_honeynode},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d: %s -- %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
