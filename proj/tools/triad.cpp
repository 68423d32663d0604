#include "triad_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return triad::cli::run_command(args, std::cout, std::cerr);
}
