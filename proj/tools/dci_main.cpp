#include <iostream>
#include <string>
#include <vector>

#include "nemesys/cli/cli.hpp"

int main(int argc, char** argv) {
  return nemesys::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr,
                           nemesys::cli::Flavor::kDci);
}
