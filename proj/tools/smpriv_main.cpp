#include <iostream>
#include <string>
#include <vector>

#include "smpriv/commands.hpp"

int main(int argc, char** argv) {
  return smpriv::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
