#include <vector>

#include "radarego/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return radarego::run_cli(std::move(args));
}
